//! Exact GAS back-end on the `2^n` variable register.
//!
//! With integer coefficients, `A_y` maps `|x⟩|0⟩` to `|x⟩|E(x) − y⟩` with a
//! basis-state value register, so the `(n+m)`-qubit dynamics stay inside the
//! span of `{|x⟩|v_x⟩}`. On that span the oracle negates every `x` with
//! `v_x < 0` and `A_y D A_y†` is the reflection about the uniform vector. The
//! amplitude array here is indexed by `x` with variable 0 as the least
//! significant bit, the same order the state-vector simulator uses.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gas::{Sampler, TrialRng};
use crate::polynomial::IntegerPolynomial;

/// Amplitudes over the variable register plus the register value per `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    amps: Vec<Complex64>,
    values: Vec<i64>,
    m: u32,
}

/// Checks that `v` fits an `m`-bit two's-complement register.
pub fn fits_register(v: i64, m: u32) -> bool {
    if m >= 64 {
        return true;
    }
    let half = 1i64 << (m - 1);
    (-half..half).contains(&v)
}

impl AmplitudeState {
    /// `A_y|0⟩` for an integer objective.
    pub fn prepare(objective: &IntegerPolynomial, threshold: i64, m: u32) -> Result<Self> {
        Self::from_value_table(&objective.evaluate_all(), threshold, m)
    }

    /// `A_y|0⟩` from precomputed `E(x)` values (length `2^n`).
    pub fn from_value_table(table: &[i64], threshold: i64, m: u32) -> Result<Self> {
        assert!(
            table.len().is_power_of_two(),
            "value table length must be 2^n"
        );
        if m == 0 {
            return Err(Error::Config("register width m must be at least 1".into()));
        }
        let values = table
            .iter()
            .map(|&e| {
                let v = e - threshold;
                if fits_register(v, m) {
                    Ok(v)
                } else {
                    Err(Error::RegisterOverflow { value: v, m })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let a = Complex64::new(1.0 / (table.len() as f64).sqrt(), 0.0);
        Ok(AmplitudeState {
            amps: vec![a; table.len()],
            values,
            m,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Register value `E(x) − y` per `x`.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Number of marked (negative-value) states.
    pub fn n_marked(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0).count()
    }

    /// One Grover operator: oracle sign flip, then reflection about the uniform vector.
    pub fn grover_step(&mut self) {
        for (a, &v) in self.amps.iter_mut().zip(&self.values) {
            if v < 0 {
                *a = -*a;
            }
        }
        let mean = self.amps.iter().sum::<Complex64>() / self.amps.len() as f64;
        for a in &mut self.amps {
            *a = 2.0 * mean - *a;
        }
    }

    pub fn grover_steps(&mut self, rotations: usize) {
        for _ in 0..rotations {
            self.grover_step();
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Total probability of the marked states.
    pub fn success_probability(&self) -> f64 {
        self.amps
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v < 0)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    /// Samples `x` with probability `|amp_x|²`.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_index(self.amps.iter().map(|a| a.norm_sqr()), rng) as u64
    }
}

/// Inverse-CDF draw from unnormalized weights; falls back to the last index on round-off.
pub(crate) fn sample_index<I, R>(weights: I, rng: &mut R) -> usize
where
    I: Iterator<Item = f64> + Clone,
    R: Rng + ?Sized,
{
    let total: f64 = weights.clone().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

/// Structured back-end bound to one objective; caches `E(x)` for every `x`.
#[derive(Debug, Clone)]
pub struct StructuredSampler {
    table: Vec<i64>,
    m: u32,
}

impl StructuredSampler {
    pub fn new(objective: &IntegerPolynomial, m: u32) -> Self {
        StructuredSampler {
            table: objective.evaluate_all(),
            m,
        }
    }

    pub fn value_table(&self) -> &[i64] {
        &self.table
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// The state just before measurement.
    pub fn evolve(&self, threshold: i64, rotations: usize) -> Result<AmplitudeState> {
        let mut s = AmplitudeState::from_value_table(&self.table, threshold, self.m)?;
        s.grover_steps(rotations);
        Ok(s)
    }
}

impl Sampler for StructuredSampler {
    fn n_vars(&self) -> usize {
        self.table.len().trailing_zeros() as usize
    }

    fn measure(&mut self, threshold: i64, rotations: usize, rng: &mut TrialRng) -> Result<u64> {
        Ok(self.evolve(threshold, rotations)?.measure(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn table_state(values: &[i64], m: u32) -> AmplitudeState {
        AmplitudeState::from_value_table(values, 0, m).unwrap()
    }

    #[test]
    fn prepare_is_uniform() {
        let s = table_state(&[1, 2, 3, 4], 4);
        assert!(s
            .amplitudes()
            .iter()
            .all(|a| (a.re - 0.5).abs() < 1e-15 && a.im == 0.0));
    }

    #[test]
    fn constant_objective_at_its_own_threshold_has_no_marked_states() {
        let s = AmplitudeState::from_value_table(&[5; 8], 5, 3).unwrap();
        assert!(s.values().iter().all(|&v| v == 0));
        assert_eq!(s.success_probability(), 0.0);
    }

    #[test]
    fn overflow_is_rejected() {
        let e = AmplitudeState::from_value_table(&[0, 8], 0, 4).unwrap_err();
        assert_eq!(e, Error::RegisterOverflow { value: 8, m: 4 });
        assert!(AmplitudeState::from_value_table(&[0, -8], 0, 4).is_ok());
    }

    #[test]
    fn two_of_eight_marked_hits_certainty_after_one_step() {
        let mut s = table_state(&[-1, 2, 3, -2, 1, 0, 4, 5], 4);
        assert!((s.success_probability() - 0.25).abs() < 1e-15);
        s.grover_step();
        assert!((s.success_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unmarked_state_stays_unmarked() {
        let mut s = table_state(&[0, 1, 2, 3], 3);
        for _ in 0..5 {
            s.grover_step();
            assert_eq!(s.success_probability(), 0.0);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_state_measures_its_index() {
        let mut s = table_state(&[-1, 2, 3, -2, 1, 0, 4, 5], 4);
        s.grover_step();
        // all weight on x = 0 and x = 3
        let mut rng = TrialRng::seed_from_u64(0);
        for _ in 0..100 {
            let x = s.measure(&mut rng);
            assert!(x == 0 || x == 3);
        }
    }

    #[test]
    fn sampler_reports_variable_count() {
        let p =
            crate::polynomial::Polynomial::<i64>::from_terms(5, [(vec![0usize], 1i64)]).unwrap();
        let s = StructuredSampler::new(&IntegerPolynomial::from_poly(p), 3);
        assert_eq!(s.n_vars(), 5);
    }
}

//! Grover adaptive search driver.
//!
//! The loop keeps an incumbent `(x_i, y_i)`. Each iteration draws a rotation
//! count `L_i` uniformly from `{0, …, ⌈k−1⌉}`, asks the measurement back-end
//! for a sample of `G^{L_i} A_{y_i} |0⟩`, and evaluates the measured bit string
//! classically. An improvement resets `k` to 1; otherwise `k` grows by the
//! factor λ (default 8/7) up to `√(2^n)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::MldProblem;
use crate::error::{Error, Result};
use crate::polynomial::{BinaryPolynomial, IntegerPolynomial};

/// RNG used for every trial; seeded per trial for reproducibility.
pub type TrialRng = ChaCha8Rng;

/// Default growth factor of the rotation-count bound.
pub const DEFAULT_LAMBDA_GROWTH: f64 = 8.0 / 7.0;

/// A measurement back-end bound to one integer objective.
pub trait Sampler {
    fn n_vars(&self) -> usize;

    /// Prepares `G^rotations A_threshold |0⟩`, measures, and returns the variable register.
    fn measure(&mut self, threshold: i64, rotations: usize, rng: &mut TrialRng) -> Result<u64>;
}

impl<S: Sampler + ?Sized> Sampler for &mut S {
    fn n_vars(&self) -> usize {
        (**self).n_vars()
    }

    fn measure(&mut self, threshold: i64, rotations: usize, rng: &mut TrialRng) -> Result<u64> {
        (**self).measure(threshold, rotations, rng)
    }
}

/// Stopping rules; the run ends as soon as any configured rule fires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    /// Maximum number of consecutive non-improving iterations.
    pub patience: Option<usize>,
    /// Budget on the cumulative number of Grover operators.
    pub max_qcqd: Option<u64>,
    /// Stop once the incumbent reaches this integer value.
    pub target: Option<i64>,
}

impl Termination {
    /// `⌈√2^n⌉` patience and a `10·√2^n` rotation budget.
    pub fn defaults(n_vars: usize) -> Self {
        let root = grover_cap(n_vars);
        Termination {
            patience: Some(root.ceil() as usize),
            max_qcqd: Some((10.0 * root).ceil() as u64),
            target: None,
        }
    }

    /// Stop only at `target`, with a rotation budget as a backstop.
    pub fn target(target: i64, max_qcqd: u64) -> Self {
        Termination {
            patience: None,
            max_qcqd: Some(max_qcqd),
            target: Some(target),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub lambda_growth: f64,
    pub termination: Termination,
    pub seed: u64,
}

impl GasParams {
    pub fn new(n_vars: usize, seed: u64) -> Self {
        GasParams {
            lambda_growth: DEFAULT_LAMBDA_GROWTH,
            termination: Termination::defaults(n_vars),
            seed,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Target,
    Patience,
    Budget,
}

/// One loop iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GasStep {
    pub iteration: usize,
    pub rotations: usize,
    pub measured_x: u64,
    pub measured_int: i64,
    /// Incumbent (threshold) value after this iteration.
    pub threshold_int: i64,
    /// Exact objective of the incumbent after this iteration.
    pub incumbent_value: f64,
    pub improved: bool,
    pub cumulative_qcqd: u64,
    pub cumulative_qccd: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasResult {
    pub initial_x: u64,
    pub initial_int: i64,
    pub initial_value: f64,
    pub best_x: u64,
    pub best_int: i64,
    /// Exact (unquantized) objective at `best_x`.
    pub best_value: f64,
    pub trace: Vec<GasStep>,
    pub qcqd: u64,
    pub qccd: u64,
    pub stop_reason: StopReason,
}

/// `√(2^n)`, the cap on `k`.
pub fn grover_cap(n_vars: usize) -> f64 {
    2f64.powf(n_vars as f64 / 2.0)
}

/// Uniform draw from `{0, …, ⌈k−1⌉}`.
pub fn sample_rotation_count<R: Rng + ?Sized>(k: f64, rng: &mut R) -> usize {
    debug_assert!(k >= 1.0);
    let hi = ((k - 1.0) - 1e-12).ceil().max(0.0) as usize;
    rng.random_range(0..=hi)
}

/// Smallest two's-complement width holding every `E(x) − y` for `y` in the
/// objective's range, plus `margin_bits`.
pub fn choose_m(p: &IntegerPolynomial, margin_bits: u32) -> u32 {
    let (lo, hi) = p.range_bound();
    register_width_for_span(hi - lo) + margin_bits
}

/// Smallest `m` with `2^(m−1) > span`, i.e. `[−span, span]` fits in `m` bits.
pub fn register_width_for_span(span: i64) -> u32 {
    debug_assert!(span >= 0);
    (64 - (span as u64).leading_zeros()) + 1
}

/// Runs the search on a compiled detection problem.
pub fn run_gas<S: Sampler>(
    problem: &MldProblem,
    sampler: S,
    params: &GasParams,
) -> Result<GasResult> {
    grover_adaptive_search(
        &problem.quantized,
        Some(&problem.objective),
        sampler,
        params,
    )
}

/// Runs the search on an integer objective. `exact`, when given, supplies the
/// real-valued objective reported alongside the integer one.
pub fn grover_adaptive_search<S: Sampler>(
    objective: &IntegerPolynomial,
    exact: Option<&BinaryPolynomial>,
    mut sampler: S,
    params: &GasParams,
) -> Result<GasResult> {
    let n = objective.n_vars();
    if sampler.n_vars() != n {
        return Err(Error::VarCountMismatch {
            left: n,
            right: sampler.n_vars(),
        });
    }
    if params.lambda_growth.is_nan() || params.lambda_growth <= 1.0 {
        return Err(Error::Config(format!(
            "lambda_growth must exceed 1, got {}",
            params.lambda_growth
        )));
    }
    let term = params.termination;
    if term.patience.is_none() && term.max_qcqd.is_none() && term.target.is_none() {
        return Err(Error::Config(
            "at least one termination rule is required".into(),
        ));
    }
    let exact_value = |x: u64| match exact {
        Some(p) => p.eval_index(x),
        None => objective.eval_index(x) as f64 * objective.scale(),
    };
    let cap = grover_cap(n);
    let mut rng = TrialRng::seed_from_u64(params.seed);

    let x0 = if n == 0 {
        0
    } else {
        rng.random_range(0..1u64 << n)
    };
    let y0 = objective.eval_index(x0);
    let (mut best_x, mut best_int) = (x0, y0);
    let mut best_value = exact_value(x0);
    let mut k = 1.0f64;
    let (mut qcqd, mut qccd) = (0u64, 1u64);
    let mut stale = 0usize;
    let mut trace = Vec::new();

    let reached = |v: i64| term.target.is_some_and(|t| v <= t);
    let stop_reason = loop {
        if reached(best_int) {
            break StopReason::Target;
        }
        if term.patience.is_some_and(|p| stale >= p) {
            break StopReason::Patience;
        }
        if term.max_qcqd.is_some_and(|b| qcqd >= b) {
            break StopReason::Budget;
        }
        let rotations = sample_rotation_count(k, &mut rng);
        let x = sampler.measure(best_int, rotations, &mut rng)?;
        let y = objective.eval_index(x);
        qcqd += rotations as u64;
        qccd += 1;
        let improved = y < best_int;
        if improved {
            best_x = x;
            best_int = y;
            best_value = exact_value(x);
            k = 1.0;
            stale = 0;
        } else {
            k = (params.lambda_growth * k).min(cap);
            stale += 1;
        }
        trace.push(GasStep {
            iteration: trace.len(),
            rotations,
            measured_x: x,
            measured_int: y,
            threshold_int: best_int,
            incumbent_value: best_value,
            improved,
            cumulative_qcqd: qcqd,
            cumulative_qccd: qccd,
        });
    };

    Ok(GasResult {
        initial_x: x0,
        initial_int: y0,
        initial_value: exact_value(x0),
        best_x,
        best_int,
        best_value,
        trace,
        qcqd,
        qccd,
        stop_reason,
    })
}

/// Column header of the per-iteration trace CSV.
pub const TRACE_HEADER: &str =
    "trial,i,L_i,y_i,measured_value,improved,cumulative_qcqd,cumulative_qccd";

/// Writes one CSV row per iteration. `y_i` is the incumbent threshold after the
/// iteration and both values are on the quantized objective scaled back to real units.
pub fn write_trace_rows<W: Write>(
    out: &mut W,
    trial: usize,
    result: &GasResult,
    scale: f64,
) -> std::io::Result<()> {
    for s in &result.trace {
        writeln!(
            out,
            "{trial},{},{},{},{},{},{},{}",
            s.iteration,
            s.rotations,
            s.threshold_int as f64 * scale,
            s.measured_int as f64 * scale,
            u8::from(s.improved),
            s.cumulative_qcqd,
            s.cumulative_qccd
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Polynomial;

    /// Classical stand-in: returns a uniformly random assignment.
    struct UniformSampler(usize);

    impl Sampler for UniformSampler {
        fn n_vars(&self) -> usize {
            self.0
        }
        fn measure(&mut self, _: i64, _: usize, rng: &mut TrialRng) -> Result<u64> {
            Ok(rng.random_range(0..1u64 << self.0))
        }
    }

    fn int_poly(n: usize, terms: &[(&[usize], i64)]) -> IntegerPolynomial {
        IntegerPolynomial::from_poly(
            Polynomial::from_terms(n, terms.iter().map(|(v, c)| (v.iter().copied(), *c))).unwrap(),
        )
    }

    #[test]
    fn rotation_count_at_k_one_is_zero() {
        let mut rng = TrialRng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_rotation_count(1.0, &mut rng), 0);
        }
    }

    #[test]
    fn rotation_count_after_one_growth_step() {
        let mut rng = TrialRng::seed_from_u64(1);
        let draws: Vec<usize> = (0..200)
            .map(|_| sample_rotation_count(8.0 / 7.0, &mut rng))
            .collect();
        assert!(draws.iter().all(|&d| d <= 1));
        assert!(draws.contains(&0) && draws.contains(&1));
    }

    #[test]
    fn rotation_count_at_cap() {
        let k = grover_cap(12);
        assert_eq!(k, 64.0);
        let mut rng = TrialRng::seed_from_u64(2);
        let max = (0..20_000)
            .map(|_| sample_rotation_count(k, &mut rng))
            .max()
            .unwrap();
        assert_eq!(max, 63);
    }

    #[test]
    fn rotation_count_exact_integer_k() {
        let mut rng = TrialRng::seed_from_u64(3);
        let draws: Vec<usize> = (0..3000)
            .map(|_| sample_rotation_count(3.0, &mut rng))
            .collect();
        assert!(draws.iter().all(|&d| d <= 2));
    }

    #[test]
    fn choose_m_examples() {
        let p = int_poly(2, &[(&[0, 1], 4), (&[0], -3), (&[], 2)]);
        assert_eq!(p.range_bound(), (-1, 6));
        assert_eq!(choose_m(&p, 0), 4);
        assert_eq!(choose_m(&p, 2), 6);
        assert_eq!(choose_m(&int_poly(2, &[]), 0), 1);
    }

    #[test]
    fn trace_accounting_and_monotone_thresholds() {
        let p = int_poly(
            4,
            &[(&[0], 3), (&[1, 2], -5), (&[3], 2), (&[0, 3], -4), (&[], 1)],
        );
        let params = GasParams::new(4, 11);
        let r = grover_adaptive_search(&p, None, UniformSampler(4), &params).unwrap();
        assert_eq!(r.qccd, r.trace.len() as u64 + 1);
        assert_eq!(
            r.qcqd,
            r.trace.iter().map(|s| s.rotations as u64).sum::<u64>()
        );
        let mut prev = r.initial_int;
        for s in &r.trace {
            assert!(s.threshold_int <= prev);
            assert_eq!(s.improved, s.threshold_int < prev);
            prev = s.threshold_int;
        }
        assert_eq!(prev, r.best_int);
    }

    #[test]
    fn k_schedule_follows_growth_rule() {
        // constant objective: nothing ever improves, so k grows every iteration
        let p = int_poly(6, &[(&[], 3)]);
        let params = GasParams {
            lambda_growth: 8.0 / 7.0,
            termination: Termination {
                patience: Some(200),
                max_qcqd: None,
                target: None,
            },
            seed: 4,
        };
        let r = grover_adaptive_search(&p, None, UniformSampler(6), &params).unwrap();
        assert_eq!(r.stop_reason, StopReason::Patience);
        let mut k = 1.0f64;
        for s in &r.trace {
            let hi = ((k - 1.0) - 1e-12).ceil().max(0.0) as usize;
            assert!(s.rotations <= hi);
            assert!(k <= 8.0);
            k = (k * 8.0 / 7.0).min(8.0);
        }
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let p = int_poly(5, &[(&[0, 1], -3), (&[2], 2), (&[3, 4], -1), (&[1], 1)]);
        let params = GasParams::new(5, 99);
        let a = grover_adaptive_search(&p, None, UniformSampler(5), &params).unwrap();
        let b = grover_adaptive_search(&p, None, UniformSampler(5), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn target_termination_stops_at_optimum() {
        let p = int_poly(5, &[(&[0, 1], -3), (&[2], 2), (&[3, 4], -1), (&[1], 1)]);
        let min = p.evaluate_all().into_iter().min().unwrap();
        let params = GasParams {
            termination: Termination::target(min, 1_000_000),
            ..GasParams::new(5, 5)
        };
        let r = grover_adaptive_search(&p, None, UniformSampler(5), &params).unwrap();
        assert_eq!(r.stop_reason, StopReason::Target);
        assert_eq!(r.best_int, min);
    }

    #[test]
    fn requires_a_termination_rule() {
        let p = int_poly(2, &[(&[0], 1)]);
        let params = GasParams {
            termination: Termination {
                patience: None,
                max_qcqd: None,
                target: None,
            },
            ..GasParams::new(2, 0)
        };
        assert!(grover_adaptive_search(&p, None, UniformSampler(2), &params).is_err());
    }

    #[test]
    fn trace_csv_rows() {
        let p = int_poly(3, &[(&[0], -2), (&[1], 1)]);
        let r = grover_adaptive_search(&p, None, UniformSampler(3), &GasParams::new(3, 1)).unwrap();
        let mut buf = Vec::new();
        write_trace_rows(&mut buf, 7, &r, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.trace.len());
        assert!(text
            .lines()
            .all(|l| l.starts_with("7,") && l.split(',').count() == 8));
    }
}

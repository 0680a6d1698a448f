//! Self-check suite behind the `validate` subcommand.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::config::ExperimentConfig;
use crate::bench::experiment::run_experiment;
use crate::bench::ratio::complexity_ratio;
use crate::encoder::{bits_index, build_objective, EncoderParams};
use crate::error::Result;
use crate::gas::choose_m;
use crate::gsm::{self, ApCodebook, CodebookRule, Constellation, GsmConfig};
use crate::polynomial::{IntegerPolynomial, Polynomial};
use crate::sim::statevector;
use crate::sim::structured::AmplitudeState;

/// The mapping table for N_t = 4, K = 3, Q = 4 under the cyclic rule.
pub const TABLE_GOLDEN: &str = "\
00 (0, 1, 2) [1 0 0; 0 1 0; 0 0 1; 0 0 0]
01 (1, 2, 3) [0 0 0; 1 0 0; 0 1 0; 0 0 1]
10 (2, 3, 0) [0 0 1; 0 0 0; 1 0 0; 0 1 0]
11 (3, 0, 1) [0 1 0; 0 0 1; 0 0 0; 1 0 0]
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fast" => Some(Level::Fast),
            "full" => Some(Level::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Random integer polynomial with `n_terms` monomials of degree ≤ `max_degree`
/// and coefficients in `[-coeff_abs, coeff_abs]`.
pub fn random_integer_polynomial<R: Rng>(
    n: usize,
    n_terms: usize,
    max_degree: usize,
    coeff_abs: i64,
    rng: &mut R,
) -> IntegerPolynomial {
    let mut p = Polynomial::<i64>::zero(n);
    for _ in 0..n_terms {
        let deg = rng.random_range(0..=max_degree.min(n));
        let vars: Vec<usize> = (0..deg).map(|_| rng.random_range(0..n)).collect();
        let c = rng.random_range(-coeff_abs..=coeff_abs);
        let term = Polynomial::from_terms(n, [(vars, c)]).expect("indices in range");
        p = p.add(&term).expect("same n");
    }
    IntegerPolynomial::from_poly(p)
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn constellation_check() -> Check {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let qpsk = [
        ([0, 0], Complex64::new(h, h)),
        ([0, 1], Complex64::new(h, -h)),
        ([1, 0], Complex64::new(-h, h)),
        ([1, 1], Complex64::new(-h, -h)),
    ];
    let mut ok = qpsk.iter().all(|(b, want)| {
        gsm::map_symbol(b, Constellation::Qpsk).is_ok_and(|s| (s - want).norm() < 1e-15)
    });
    ok &= gsm::map_symbol(&[0, 0, 0, 0], Constellation::Qam16)
        .is_ok_and(|s| (s - Complex64::new(1.0, 1.0) / 10f64.sqrt()).norm() < 1e-15);
    let mut worst: f64 = 0.0;
    for c in [
        Constellation::Bpsk,
        Constellation::Qpsk,
        Constellation::Qam16,
    ] {
        let pts = c.points();
        let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
        worst = worst.max((e - 1.0).abs());
    }
    ok &= worst < 1e-12;
    check(
        "constellation",
        ok,
        format!("QPSK/16QAM golden points, max energy error {worst:.1e}"),
    )
}

fn table_check() -> Check {
    let text = ApCodebook::build(4, 3, 4, &CodebookRule::Cyclic)
        .map(|cb| cb.table_text())
        .unwrap_or_default();
    check(
        "ap-table",
        text == TABLE_GOLDEN,
        "cyclic rule reproduces the 4/3/4 mapping table".into(),
    )
}

fn grover_law_check(instances: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a5);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.random_range(2..=10);
        let table: Vec<i64> = (0..1usize << n)
            .map(|_| rng.random_range(-20..=40))
            .collect();
        let t = table.iter().filter(|&&v| v < 0).count();
        let theta = (t as f64 / table.len() as f64).sqrt().asin();
        let mut s = AmplitudeState::from_value_table(&table, 0, 8).expect("values fit");
        for l in 0..=10 {
            let want = ((2 * l + 1) as f64 * theta).sin().powi(2);
            worst = worst.max((s.success_probability() - want).abs());
            s.grover_step();
        }
    }
    check(
        "grover-law",
        worst <= 1e-9,
        format!("{instances} random tables, L ≤ 10, max deviation {worst:.1e}"),
    )
}

fn cross_simulator_check(instances: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e7);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let n = rng.random_range(2..=6);
        let p = random_integer_polynomial(n, rng.random_range(2..=8), 3, 5, &mut rng);
        let m = choose_m(&p, 0);
        if n + m as usize > 16 {
            continue;
        }
        let threshold = p.eval_index(rng.random_range(0..1u64 << n));
        for l in 0..=3 {
            let mut structured = AmplitudeState::prepare(&p, threshold, m)?;
            structured.grover_steps(l);
            let sv = statevector::evolve(&p, threshold, m, l)?;
            let marginal = sv.x_marginal(n);
            for (a, b) in structured.probabilities().iter().zip(&marginal) {
                worst = worst.max((a - b).abs());
            }
        }
        done += 1;
    }
    Ok(check(
        "simulator-equivalence",
        worst <= 1e-9,
        format!("{instances} instances, n+m ≤ 16, L ∈ 0..=3, max |Δp| {worst:.1e}"),
    ))
}

fn encoder_check(instances: usize) -> Result<Check> {
    let cfg = GsmConfig::paper();
    let cb = ApCodebook::build(4, 3, 4, &CodebookRule::Cyclic)?;
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..instances as u64 {
        let (_, chan) = gsm::synthesize(&cfg, &cb, 1000 + seed)?;
        let problem = build_objective(&chan, &cfg, &cb, &EncoderParams::default())?;
        let classical = gsm::classical_mld(&chan, &cfg, &cb);
        let values = problem.objective.evaluate_all();
        let argmin = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("non-empty") as u64;
        let d = problem.decode_index(argmin);
        if !(d.valid
            && d.ap_index == Some(classical.ap_index)
            && d.bits_symbols == classical.bits_symbols)
        {
            mismatches += 1;
        }
        let x = bits_index(&problem.encode(&classical.bits_symbols, classical.ap_index)?);
        worst = worst.max((values[x as usize] - classical.metric).abs());
    }
    Ok(check(
        "encoder-vs-classical",
        mismatches == 0 && worst <= 1e-9,
        format!("{instances} channels, {mismatches} argmin mismatches, max feasible-point error {worst:.1e}"),
    ))
}

fn ratio_check() -> Result<Check> {
    let a = complexity_ratio(16, 1, 2)?.ratio;
    let b = complexity_ratio(16, 8, 16)?.ratio;
    let monotone = (1..8).all(|k| {
        let r0 = complexity_ratio(16, k, 16).map(|r| r.ratio);
        let r1 = complexity_ratio(16, k + 1, 16).map(|r| r.ratio);
        matches!((r0, r1), (Ok(x), Ok(y)) if y < x)
    });
    let ok = a == 2048.0 && ((b - 0.0199) / 0.0199).abs() <= 1e-3 && monotone;
    Ok(check(
        "complexity-ratio",
        ok,
        format!("f/g = {a} and {b:.5}, monotone in K: {monotone}"),
    ))
}

fn optimality_check(trials: usize) -> Result<Check> {
    let cfg = ExperimentConfig {
        trials,
        target_termination: true,
        seed: 2024,
        ..ExperimentConfig::default()
    };
    let s = run_experiment(&cfg)?;
    let agree = s
        .trials
        .iter()
        .filter(|r| {
            r.optimum_found
                && r.decision_matches
                && (r.final_objective - r.classical_metric).abs()
                    <= 1e-6 * r.classical_metric.abs().max(1e-12)
        })
        .count();
    Ok(check(
        "gas-optimality",
        agree == trials,
        format!("{agree}/{trials} preset trials reach the classical optimum"),
    ))
}

/// Runs the whole suite. `Fast` uses fewer random instances.
pub fn validate(level: Level) -> Result<ValidationReport> {
    let (grover, cross, enc, gas) = match level {
        Level::Fast => (5, 5, 10, 10),
        Level::Full => (20, 20, 100, 100),
    };
    Ok(ValidationReport {
        checks: vec![
            constellation_check(),
            table_check(),
            grover_law_check(grover),
            cross_simulator_check(cross)?,
            encoder_check(enc)?,
            ratio_check()?,
            optimality_check(gas)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_table_matches() {
        assert!(table_check().passed);
    }

    #[test]
    fn random_polynomials_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = random_integer_polynomial(6, 10, 3, 4, &mut rng);
            assert!(p.poly().is_well_formed());
        }
    }

    #[test]
    fn fast_level_passes() {
        let r = validate(Level::Fast).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 7);
    }
}

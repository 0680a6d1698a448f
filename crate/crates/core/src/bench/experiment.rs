//! Monte Carlo experiment over independent channel realizations.
//!
//! Trial `t` uses seed `master_seed + t` for the channel and the search. Trials
//! run in parallel; results are folded in trial order so every output file is
//! a deterministic function of the configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::config::{Backend, ExperimentConfig};
use crate::encoder::{bits_index, build_objective, EncoderParams, MldProblem};
use crate::error::Result;
use crate::gas::{
    choose_m, run_gas, write_trace_rows, GasParams, GasResult, StopReason, TRACE_HEADER,
};
use crate::gsm::{self, ApCodebook, GsmConfig};
use crate::sim::{StateVectorSampler, StructuredSampler};

/// Outcome of one channel realization.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n_vars: usize,
    pub m: u32,
    /// Exact objective of the random initial sample.
    pub initial_objective: f64,
    /// Exact objective of the final incumbent.
    pub final_objective: f64,
    pub classical_metric: f64,
    pub optimum_found: bool,
    /// Decoded final incumbent equals the classical detector's decision.
    pub decision_matches: bool,
    pub qcqd_to_optimum: Option<u64>,
    pub qccd_to_optimum: Option<u64>,
    pub qcqd: u64,
    pub qccd: u64,
    pub stop_reason: StopReason,
    /// Position (1-based) at which a random-order exhaustive scan first meets the optimum.
    pub classical_queries_to_optimum: usize,
}

/// Empirical CDF as `(value, fraction of all trials with value ≤ it)`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Cdf {
    pub points: Vec<(u64, f64)>,
}

impl Cdf {
    /// Built from the converged trials; the denominator is the total trial count.
    pub fn from_values(values: &[u64], total: usize) -> Self {
        let mut v = values.to_vec();
        v.sort_unstable();
        let mut points: Vec<(u64, f64)> = Vec::new();
        for (i, &x) in v.iter().enumerate() {
            let frac = (i + 1) as f64 / total as f64;
            match points.last_mut() {
                Some(last) if last.0 == x => last.1 = frac,
                _ => points.push((x, frac)),
            }
        }
        Cdf { points }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Curves {
    /// Mean incumbent objective after `c` measurements, `c = 1, 2, …` (entry `c − 1`).
    pub gas_vs_qccd: Vec<f64>,
    /// Mean incumbent objective once the cumulative Grover count is at most `q`, `q = 0, 1, …`.
    pub gas_vs_qcqd: Vec<f64>,
    /// Mean best-so-far metric of a random-order exhaustive scan after `q` evaluations, `q = 1, 2, …`.
    pub classical_vs_queries: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub trials: usize,
    pub optimum_found: usize,
    pub decision_matches: usize,
    pub mean_initial_objective: f64,
    pub mean_final_objective: f64,
    pub mean_classical_optimum: f64,
    pub mean_qcqd_to_optimum: Option<f64>,
    pub mean_qccd_to_optimum: Option<f64>,
    pub max_qcqd_to_optimum: Option<u64>,
    pub max_qccd_to_optimum: Option<u64>,
    pub classical_baseline: usize,
    pub qcqd_cdf: Cdf,
    pub qccd_cdf: Cdf,
    pub classical_cdf: Cdf,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub aggregates: Aggregates,
    pub curves: Curves,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
    #[serde(skip)]
    pub runs: Vec<GasResult>,
    #[serde(skip)]
    pub scales: Vec<f64>,
}

struct TrialOutcome {
    record: TrialRecord,
    run: GasResult,
    scale: f64,
    classical_curve: Vec<f64>,
}

/// Per-trial seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    master.wrapping_add(trial as u64)
}

fn run_trial(cfg: &ExperimentConfig, codebook: &ApCodebook, trial: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.seed, trial);
    let (_, chan) = gsm::synthesize(&cfg.gsm, codebook, seed)?;
    let params = EncoderParams {
        lambda1: cfg.lambda1,
        lambda2: cfg.lambda2,
        precision_bits: cfg.precision_bits,
    };
    let problem = build_objective(&chan, &cfg.gsm, codebook, &params)?;
    let classical = gsm::classical_mld(&chan, &cfg.gsm, codebook);
    let opt_x = bits_index(&problem.encode(&classical.bits_symbols, classical.ap_index)?);
    let target = problem.value_int(opt_x);

    let m = choose_m(&problem.quantized, cfg.margin_bits);
    let gas_params = GasParams {
        lambda_growth: cfg.lambda_growth,
        termination: cfg.termination(Some(target)),
        seed,
    };
    let run = match cfg.backend {
        Backend::Structured => run_gas(
            &problem,
            StructuredSampler::new(&problem.quantized, m),
            &gas_params,
        )?,
        Backend::Statevector => run_gas(
            &problem,
            StateVectorSampler::new(&problem.quantized, m)?,
            &gas_params,
        )?,
    };

    let (qcqd_to_optimum, qccd_to_optimum) = if run.initial_int <= target {
        (Some(0), Some(1))
    } else {
        run.trace
            .iter()
            .find(|s| s.threshold_int <= target)
            .map_or((None, None), |s| {
                (Some(s.cumulative_qcqd), Some(s.cumulative_qccd))
            })
    };
    let decoded = problem.decode_index(run.best_x);
    let decision_matches = decoded.valid
        && decoded.ap_index == Some(classical.ap_index)
        && decoded.bits_symbols == classical.bits_symbols;

    let classical_curve = random_scan_curve(&problem, &cfg.gsm, codebook, seed);
    let classical_queries_to_optimum = classical_curve
        .iter()
        .position(|&v| v <= classical.metric)
        .map_or(classical_curve.len(), |p| p + 1);

    Ok(TrialOutcome {
        record: TrialRecord {
            trial,
            seed,
            n_vars: problem.n_vars(),
            m,
            initial_objective: run.initial_value,
            final_objective: run.best_value,
            classical_metric: classical.metric,
            optimum_found: run.best_int <= target,
            decision_matches,
            qcqd_to_optimum,
            qccd_to_optimum,
            qcqd: run.qcqd,
            qccd: run.qccd,
            stop_reason: run.stop_reason,
            classical_queries_to_optimum,
        },
        scale: problem.quantized.scale(),
        run,
        classical_curve,
    })
}

/// Best-so-far metric of an exhaustive scan in a seeded random candidate order.
fn random_scan_curve(
    problem: &MldProblem,
    cfg: &GsmConfig,
    codebook: &ApCodebook,
    seed: u64,
) -> Vec<f64> {
    let points = cfg.constellation.points();
    let per_ap = cfg.constellation.size().pow(cfg.k_active as u32);
    let bps = cfg.bits_per_symbol();
    let mut order: Vec<usize> = (0..cfg.n_candidates()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    order.shuffle(&mut rng);
    let mut best = f64::INFINITY;
    order
        .into_iter()
        .map(|c| {
            let (q, v) = (c / per_ap, c % per_ap);
            let symbols: Vec<_> = (0..cfg.k_active)
                .map(|j| points[(v >> (bps * (cfg.k_active - 1 - j))) & (points.len() - 1)])
                .collect();
            let metric = problem.chan.metric(&gsm::codeword(codebook, q, &symbols));
            best = best.min(metric);
            best
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Incumbent after `c` measurements, `c = 1..=len`, carried forward past the run's end.
fn qccd_series(run: &GasResult, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    out.push(run.initial_value);
    for c in 2..=len {
        let v = run
            .trace
            .get(c - 2)
            .map_or(*out.last().expect("non-empty"), |s| s.incumbent_value);
        out.push(v);
    }
    out
}

/// Incumbent once the cumulative Grover count is `≤ q`, `q = 0..len`.
fn qcqd_series(run: &GasResult, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut cur = run.initial_value;
    let mut steps = run.trace.iter().peekable();
    for q in 0..len as u64 {
        while let Some(s) = steps.peek() {
            if s.cumulative_qcqd <= q {
                cur = s.incumbent_value;
                steps.next();
            } else {
                break;
            }
        }
        out.push(cur);
    }
    out
}

fn mean_curves(series: &[Vec<f64>]) -> Vec<f64> {
    let len = series.first().map_or(0, Vec::len);
    (0..len)
        .map(|i| mean(series.iter().map(|s| s[i])))
        .collect()
}

/// Runs every trial and aggregates the statistics.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let codebook = cfg.build_codebook()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &codebook, t))
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<TrialRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let n = records.len();
    let found: Vec<&TrialRecord> = records.iter().filter(|r| r.optimum_found).collect();
    let qcqd: Vec<u64> = found.iter().filter_map(|r| r.qcqd_to_optimum).collect();
    let qccd: Vec<u64> = found.iter().filter_map(|r| r.qccd_to_optimum).collect();
    let classical: Vec<u64> = records
        .iter()
        .map(|r| r.classical_queries_to_optimum as u64)
        .collect();

    let qccd_len = outcomes
        .iter()
        .map(|o| o.run.qccd as usize)
        .max()
        .unwrap_or(1);
    let qcqd_len = outcomes
        .iter()
        .map(|o| o.run.qcqd as usize)
        .max()
        .unwrap_or(0)
        + 1;
    let curves = Curves {
        gas_vs_qccd: mean_curves(
            &outcomes
                .iter()
                .map(|o| qccd_series(&o.run, qccd_len))
                .collect::<Vec<_>>(),
        ),
        gas_vs_qcqd: mean_curves(
            &outcomes
                .iter()
                .map(|o| qcqd_series(&o.run, qcqd_len))
                .collect::<Vec<_>>(),
        ),
        classical_vs_queries: mean_curves(
            &outcomes
                .iter()
                .map(|o| o.classical_curve.clone())
                .collect::<Vec<_>>(),
        ),
    };

    let aggregates = Aggregates {
        trials: n,
        optimum_found: found.len(),
        decision_matches: records.iter().filter(|r| r.decision_matches).count(),
        mean_initial_objective: mean(records.iter().map(|r| r.initial_objective)),
        mean_final_objective: mean(records.iter().map(|r| r.final_objective)),
        mean_classical_optimum: mean(records.iter().map(|r| r.classical_metric)),
        mean_qcqd_to_optimum: (!qcqd.is_empty()).then(|| mean(qcqd.iter().map(|&v| v as f64))),
        mean_qccd_to_optimum: (!qccd.is_empty()).then(|| mean(qccd.iter().map(|&v| v as f64))),
        max_qcqd_to_optimum: qcqd.iter().copied().max(),
        max_qccd_to_optimum: qccd.iter().copied().max(),
        classical_baseline: cfg.gsm.n_candidates(),
        qcqd_cdf: Cdf::from_values(&qcqd, n),
        qccd_cdf: Cdf::from_values(&qccd, n),
        classical_cdf: Cdf::from_values(&classical, n),
    };

    let (runs, scales) = outcomes.into_iter().map(|o| (o.run, o.scale)).unzip();
    Ok(ExperimentSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        aggregates,
        curves,
        trials: records,
        runs,
        scales,
    })
}

/// Column header of `trials.csv`.
pub const TRIALS_HEADER: &str = "trial,seed,n_vars,m,initial_objective,final_objective,classical_metric,optimum_found,decision_matches,qcqd_to_optimum,qccd_to_optimum,qcqd,qccd,stop_reason,classical_queries_to_optimum,classical_baseline";

impl ExperimentSummary {
    pub fn write_trace_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for (t, (run, &scale)) in self.runs.iter().zip(&self.scales).enumerate() {
            write_trace_rows(out, t, run, scale)?;
        }
        Ok(())
    }

    pub fn write_trials_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{TRIALS_HEADER}")?;
        let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
        for r in &self.trials {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.trial,
                r.seed,
                r.n_vars,
                r.m,
                r.initial_objective,
                r.final_objective,
                r.classical_metric,
                u8::from(r.optimum_found),
                u8::from(r.decision_matches),
                opt(r.qcqd_to_optimum),
                opt(r.qccd_to_optimum),
                r.qcqd,
                r.qccd,
                serde_json::to_value(r.stop_reason)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                r.classical_queries_to_optimum,
                self.aggregates.classical_baseline
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Writes `trace.csv`, `trials.csv` and `summary.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut trace = BufWriter::new(File::create(dir.join("trace.csv"))?);
        self.write_trace_csv(&mut trace)?;
        trace.flush()?;
        let mut trials = BufWriter::new(File::create(dir.join("trials.csv"))?);
        self.write_trials_csv(&mut trials)?;
        trials.flush()?;
        std::fs::write(dir.join("summary.json"), self.to_json() + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            target_termination: true,
            seed: 17,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn cdf_is_monotone_and_reaches_one() {
        let c = Cdf::from_values(&[5, 1, 3, 3, 9], 5);
        assert_eq!(c.points, vec![(1, 0.2), (3, 0.6), (5, 0.8), (9, 1.0)]);
        let partial = Cdf::from_values(&[2, 4], 4);
        assert_eq!(partial.points.last().unwrap().1, 0.5);
    }

    #[test]
    fn series_carry_forward() {
        let cfg = small_config(1);
        let summary = run_experiment(&cfg).unwrap();
        let run = &summary.runs[0];
        let s = qccd_series(run, run.qccd as usize + 3);
        assert_eq!(s[0], run.initial_value);
        assert_eq!(*s.last().unwrap(), run.best_value);
        let q = qcqd_series(run, run.qcqd as usize + 1);
        assert_eq!(*q.last().unwrap(), run.best_value);
    }

    #[test]
    fn small_experiment_reaches_optimum() {
        let summary = run_experiment(&small_config(8)).unwrap();
        assert_eq!(summary.aggregates.optimum_found, 8);
        assert_eq!(summary.aggregates.classical_baseline, 256);
        for r in &summary.trials {
            assert!(r.decision_matches);
            assert!(
                (r.final_objective - r.classical_metric).abs()
                    <= 1e-6 * r.classical_metric.abs().max(1.0)
            );
        }
    }

    #[test]
    fn classical_scan_curve_ends_at_optimum() {
        let summary = run_experiment(&small_config(3)).unwrap();
        let c = &summary.curves.classical_vs_queries;
        assert_eq!(c.len(), 256);
        let opt = summary.aggregates.mean_classical_optimum;
        assert!((c[255] - opt).abs() < 1e-12);
        assert!(c.windows(2).all(|w| w[1] <= w[0]));
    }
}

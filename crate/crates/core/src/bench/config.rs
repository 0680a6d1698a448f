//! Experiment configuration and its key-value text format.
//!
//! ```text
//! # comments start with '#'
//! n_tx = 4
//! constellation = qpsk
//! patience = auto      # auto | off | <count>
//! backend = structured # structured | statevector
//! ```

use std::path::Path;

use serde::Serialize;

use crate::encoder::{DEFAULT_LAMBDA1, DEFAULT_PRECISION_BITS};
use crate::error::{Error, Result};
use crate::gas::{grover_cap, Termination, DEFAULT_LAMBDA_GROWTH};
use crate::gsm::{ApCodebook, CodebookRule, Constellation, GsmConfig};

/// Which measurement back-end runs the circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Structured,
    Statevector,
}

impl Backend {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "structured" => Ok(Backend::Structured),
            "statevector" | "state-vector" => Ok(Backend::Statevector),
            other => Err(Error::Config(format!("unknown backend {other:?}"))),
        }
    }
}

/// A termination limit that can be derived from the problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Auto,
    Off,
    Value(u64),
}

impl Limit {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Limit::Auto),
            "off" | "none" => Ok(Limit::Off),
            v => v
                .parse()
                .map(Limit::Value)
                .map_err(|_| Error::Config(format!("bad limit {v:?}"))),
        }
    }
}

/// Codebook source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookSpec {
    Cyclic,
    Lex,
    /// Explicit table file, one pattern per line.
    File(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub gsm: GsmConfig,
    pub codebook: CodebookSpec,
    pub lambda1: f64,
    pub lambda2: Option<f64>,
    pub precision_bits: u32,
    pub margin_bits: u32,
    pub lambda_growth: f64,
    pub patience: Limit,
    pub max_qcqd: Limit,
    /// Stop each run once the classical optimum is reached.
    pub target_termination: bool,
    pub trials: usize,
    pub backend: Backend,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gsm: GsmConfig::paper(),
            codebook: CodebookSpec::Cyclic,
            lambda1: DEFAULT_LAMBDA1,
            lambda2: None,
            precision_bits: DEFAULT_PRECISION_BITS,
            margin_bits: 0,
            lambda_growth: DEFAULT_LAMBDA_GROWTH,
            patience: Limit::Auto,
            max_qcqd: Limit::Auto,
            target_termination: false,
            trials: 100,
            backend: Backend::Structured,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// 4×4 MIMO, K = 3, Q = 4, QPSK, λ1 = 15, 0 dB, 1000 channel realizations,
    /// each run continued until the detection optimum is reached.
    pub fn paper() -> Self {
        ExperimentConfig {
            trials: 1000,
            target_termination: true,
            ..ExperimentConfig::default()
        }
    }

    pub fn n_vars(&self) -> usize {
        self.gsm.n_tx * self.gsm.bits_per_symbol() + self.gsm.n_tx
    }

    pub fn validate(&self) -> Result<()> {
        self.gsm.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.lambda1.is_nan() || self.lambda1 <= 0.0 {
            return Err(Error::Config("lambda1 must be positive".into()));
        }
        if self.lambda2.is_some_and(|l| l.is_nan() || l < 0.0) {
            return Err(Error::Config("lambda2 must be non-negative".into()));
        }
        if self.lambda_growth.is_nan() || self.lambda_growth <= 1.0 {
            return Err(Error::Config("lambda_growth must exceed 1".into()));
        }
        if self.n_vars() > 30 {
            return Err(Error::Config(format!(
                "{} variables is beyond exhaustive simulation",
                self.n_vars()
            )));
        }
        Ok(())
    }

    pub fn build_codebook(&self) -> Result<ApCodebook> {
        let g = &self.gsm;
        match &self.codebook {
            CodebookSpec::Cyclic => {
                ApCodebook::build(g.n_tx, g.k_active, g.q_aps, &CodebookRule::Cyclic)
            }
            CodebookSpec::Lex => ApCodebook::build(g.n_tx, g.k_active, g.q_aps, &CodebookRule::Lex),
            CodebookSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let cb = ApCodebook::from_table_text(&text, g.n_tx, g.k_active)?;
                if cb.len() != g.q_aps {
                    return Err(Error::InvalidTable(format!(
                        "table has {} patterns, config says q_aps = {}",
                        cb.len(),
                        g.q_aps
                    )));
                }
                Ok(cb)
            }
        }
    }

    /// Resolves the limits for `n` variables and a per-trial target.
    ///
    /// With target termination the patience rule is off unless set explicitly
    /// and the automatic rotation budget is `1000·√2^n` as a backstop.
    pub fn termination(&self, target: Option<i64>) -> Termination {
        let n = self.n_vars();
        let root = grover_cap(n);
        let patience = match (self.patience, self.target_termination) {
            (Limit::Auto, false) => Some(root.ceil() as usize),
            (Limit::Auto, true) | (Limit::Off, _) => None,
            (Limit::Value(v), _) => Some(v as usize),
        };
        let max_qcqd = match (self.max_qcqd, self.target_termination) {
            (Limit::Auto, false) => Some((10.0 * root).ceil() as u64),
            (Limit::Auto, true) => Some((1000.0 * root).ceil() as u64),
            (Limit::Off, _) => None,
            (Limit::Value(v), _) => Some(v),
        };
        Termination {
            patience,
            max_qcqd,
            target: if self.target_termination {
                target
            } else {
                None
            },
        }
    }

    /// Parses the key-value format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse {
                    line: line_no + 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        match key {
            "n_tx" => self.gsm.n_tx = num(key, value)?,
            "n_rx" => self.gsm.n_rx = num(key, value)?,
            "k_active" => self.gsm.k_active = num(key, value)?,
            "q_aps" => self.gsm.q_aps = num(key, value)?,
            "constellation" => self.gsm.constellation = Constellation::parse(value)?,
            "snr_db" => self.gsm.snr_db = num(key, value)?,
            "codebook" => {
                self.codebook = match value {
                    "cyclic" => CodebookSpec::Cyclic,
                    "lex" => CodebookSpec::Lex,
                    path => CodebookSpec::File(path.to_string()),
                }
            }
            "lambda1" => self.lambda1 = num(key, value)?,
            "lambda2" => {
                self.lambda2 = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            "precision_bits" => self.precision_bits = num(key, value)?,
            "margin_bits" => self.margin_bits = num(key, value)?,
            "lambda_growth" => self.lambda_growth = num(key, value)?,
            "patience" => self.patience = Limit::parse(value)?,
            "max_qcqd" => self.max_qcqd = Limit::parse(value)?,
            "target" => {
                self.target_termination = match value {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    v => return Err(Error::Config(format!("bad boolean {v:?} for target"))),
                }
            }
            "trials" => self.trials = num(key, value)?,
            "backend" => self.backend = Backend::parse(value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

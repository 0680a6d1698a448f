//! Grover adaptive search for maximum-likelihood detection of generalized
//! spatial modulation (GSM).
//!
//! The crate compiles one GSM detection instance into a multilinear binary
//! polynomial ([`encoder`]), runs the adaptive search loop ([`gas`]) against an
//! exact simulation of the search circuits ([`sim`]), and compares the result
//! with the classical exhaustive detector ([`gsm`]). The [`bench`] module
//! drives Monte Carlo experiments and the query-complexity comparison.
//!
//! ```
//! use gsm_gas::encoder::{build_objective, EncoderParams};
//! use gsm_gas::gas::{choose_m, run_gas, GasParams};
//! use gsm_gas::gsm::{classical_mld, synthesize, ApCodebook, CodebookRule, GsmConfig};
//! use gsm_gas::sim::StructuredSampler;
//!
//! let cfg = GsmConfig::paper();
//! let codebook = ApCodebook::build(4, 3, 4, &CodebookRule::Cyclic).unwrap();
//! let (_, chan) = synthesize(&cfg, &codebook, 42).unwrap();
//! let problem = build_objective(&chan, &cfg, &codebook, &EncoderParams::default()).unwrap();
//! let sampler = StructuredSampler::new(&problem.quantized, choose_m(&problem.quantized, 0));
//! let result = run_gas(&problem, sampler, &GasParams::new(problem.n_vars(), 42)).unwrap();
//! let classical = classical_mld(&chan, &cfg, &codebook);
//! assert!(result.best_value >= classical.metric - 1e-9);
//! ```

pub mod bench;
pub mod encoder;
pub mod error;
pub mod gas;
pub mod gsm;
pub mod polynomial;
pub mod sim;

pub use error::{Error, Result};

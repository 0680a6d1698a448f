//! Measurement back-ends for the search driver.

pub mod statevector;
pub mod structured;

pub use statevector::StateVectorSampler;
pub use structured::{AmplitudeState, StructuredSampler};

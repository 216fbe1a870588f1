//! Noise-aware testing of quantum programs.
//!
//! A small regression network learns how a backend's noise distorts output
//! distributions. Its predictions filter noisy outputs before they are
//! assessed against a program specification.

pub mod benchgen;
pub mod bitstring;
pub mod circuit;
pub mod datagen;
pub mod experiment;
pub mod features;
pub mod filter;
pub mod metrics;
pub mod mlp;
pub mod oracle;
pub mod rng;
pub mod simulator;

pub use bitstring::BitString;
pub use circuit::{Circuit, Gate, GateKind};
pub use simulator::{NoiseModel, OutputDistribution, ProbMap};

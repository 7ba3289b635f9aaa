//! Doubly minimised lautum information ("tumula information"), Petz Renyi
//! lautum and mutual informations, and the hypothesis-testing exponents and
//! channel quantities built from them.
//!
//! | module | contents |
//! |---|---|
//! | [`operator`] | Hermitian operators, states, partial traces, universal symmetric states |
//! | [`divergence`] | relative entropy, Petz divergences, entropies |
//! | [`measures`] | `I`, `L`, `U`, `T` and the Petz Renyi families of bipartite states |
//! | [`classical`] | the same measures for joint distributions |
//! | [`channel`] | channel umlaut and tumula informations |
//! | [`hypothesis`] | Neyman-Pearson errors, achievability tests, exponent formulas |
//! | [`acceptance`] | the numbered acceptance checks |
//!
//! All logarithms are natural.

#![forbid(unsafe_code)]

pub mod acceptance;
pub mod channel;
pub mod classical;
pub mod divergence;
pub mod error;
pub mod hypothesis;
pub mod io;
pub mod measures;
pub mod operator;
mod optimize;
pub mod random;

pub use channel::{ChannelMeasureResult, ChannelOptions, ClassicalChannel, CqChannel, QuantumChannel};
pub use classical::{ClassicalOptions, ClassicalResult, JointDistribution};
pub use divergence::{ExtendedReal, InfinityReason, SupportRelation};
pub use error::{Error, ErrorClass, Result};
pub use hypothesis::{ExponentQuery, FormulaKind, FormulaValue};
pub use measures::{AlphaCurve, CurveMeasure, MeasureResult, SolverOptions, ThresholdPair, Variant};
pub use operator::{BipartiteState, CMatrix, DensityMatrix, EigenDecomposition, HermitianOperator, UniversalSymState};

//! Effective non-random extreme learning machines for regression.
//!
//! The hidden layer of a single-hidden-layer erf network is derived from the
//! eigenbasis of the exact NNGP Gram matrix of the training inputs instead of
//! being sampled. Two output-layer fitters are provided: the approximated
//! variant regresses the target on the eigenvectors directly, the incremental
//! variant runs forward stagewise regression on the realized hidden features.
//! Both return a nested family of models, one neuron apart, so the whole
//! error curve over the number of neurons comes from a single fit.
//!
//! A random-weight ELM baseline, the synthetic data generators used for
//! benchmarking and CSV ingestion/serialization live alongside.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root pin the `f64` instantiation used by the benchmark CLI.

pub mod datagen;
pub mod dataset;
pub mod elm;
pub mod enr;
mod error;
pub mod kernel;
pub mod numerics;
mod rng;
mod scalar;

pub use error::{Error, Result};
pub use rng::derive_seed;
pub use scalar::Real;

pub use numerics::{EigenPair, Matrix};

/// Dense `f64` matrix.
pub type Matrix64 = Matrix<f64>;
/// `f64` eigen-decomposition.
pub type EigenPair64 = EigenPair<f64>;
/// `f64` kernel Gram matrix.
pub type KernelGram64 = kernel::KernelGram<f64>;
/// `f64` ENR-ELM model.
pub type EnrModel64 = enr::EnrModel<f64>;
/// `f64` random-weight ELM model.
pub type ElmModel64 = elm::ElmModel<f64>;
/// `f64` dataset.
pub type Dataset64 = dataset::Dataset<f64>;
/// `f64` preprocessing statistics.
pub type Preprocess64 = enr::Preprocess<f64>;
/// `f64` error curve.
pub type ErrorCurve64 = enr::ErrorCurve<f64>;

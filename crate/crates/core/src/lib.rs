//! Functional decomposition of a fixed black-box prediction function into an
//! intercept, main effects, interactions and a top-order remainder whose
//! level sums are stacked-orthogonal on the sample.
//!
//! The pipeline has three stages:
//!
//! 1. a [`SampleSet`](dataset::SampleSet) of feature rows and prediction values,
//! 2. a neural additive surrogate ([`nam`]) with one subnetwork per effect term
//!    and a bias-free linear output layer,
//! 3. post-hoc orthogonalization ([`ortho`]) of the per-term sample vectors,
//!    descending from the highest interaction level to the main effects.
//!
//! [`ensemble`] averages several orthogonalized surrogates and re-imposes the
//! constraints; [`metrics`] turns the result into level-wise explained-variance
//! fractions and generalized Sobol indices. [`experiments`] hosts the
//! synthetic benchmark used to validate the estimator.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod effects;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod nam;
pub mod ortho;
pub mod rng;

pub use dataset::{SampleSet, Scenario, ScenarioSpec};
pub use effects::{EffectIndex, EffectSet};
pub use ensemble::{decompose, DecompositionResult, EnsembleConfig};
pub use error::{Error, Result};
pub use metrics::{Denominator, MetricsTable};
pub use nam::{NamModel, SubNetworkConfig, TrainConfig};
pub use ortho::{orthogonalize, BasisFunctions, EffectVectors, TermBasis};

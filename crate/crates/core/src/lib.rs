//! Core toolkit for testing whether binary health outcomes propagate along
//! water-distribution networks rather than across space.
//!
//! The pipeline: pipeline schematics become directed graphs ([`network`]),
//! graphs become sparse intrinsic conditional-autoregressive precision
//! matrices ([`precision`]), precision matrices enter hierarchical
//! Bernoulli-logit models with composable latent effects ([`model`]), models
//! are fitted by a Gaussian approximation with empirical-Bayes hyperparameters
//! ([`inference`]), and competing models are ranked by DIC in a stepwise
//! ladder ([`selection`]). [`synth`] generates networks and outcomes with
//! known ground truth so the whole chain can be validated end to end.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command-line
//! front end live in the companion `hydrocar` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod gmrf;
pub mod inference;
pub mod model;
pub mod network;
pub mod precision;
pub mod rng;
pub mod selection;
pub mod synth;

pub use precision::PrecisionMatrix;
pub use network::{NodeId, PipeSegment, WaterNetwork};


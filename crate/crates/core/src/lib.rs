//! Change-of-measure limit theorems for non-stationary processes.
//!
//! Builds two computable process families (sequential expanding maps of the
//! circle and inhomogeneous finite Markov chains), samples them under a base
//! measure `μ` and a tilted measure `ν = r dμ`, and evaluates the quantitative
//! bounds relating the two laws of the normalized partial sums.

pub mod error;
pub mod esseen;
pub mod mixing;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod spectral;
pub mod sums;
pub mod wip;

pub use error::{Error, Result};

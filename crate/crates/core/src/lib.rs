//! Generative decision trees and forests.
//!
//! Random forests are learned with CART and compiled into probabilistic
//! circuits whose leaves carry joint densities over features and class.
//! Exact marginalization then gives classification under any pattern of
//! missing features and a log-density usable as an outlier score.

pub mod baselines;
pub mod bench;
pub mod circuit;
pub mod convert;
pub mod data;
pub mod error;
pub mod fixtures;
pub mod forest;
pub mod inference;
pub mod leaves;
pub mod textfloat;
pub mod util;

pub use error::{Error, Result};

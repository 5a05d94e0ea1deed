//! Parameter-free online learning with high-probability regret bounds under
//! heavy-tailed stochastic subgradients.

pub mod base_olo;
pub mod clipping;
pub mod composite;
pub mod concentration;
pub mod dimension_free;
pub mod error;
pub mod harness;
pub mod regularizer;

pub use error::{Error, Result};

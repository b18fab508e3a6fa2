//! Desk-scale laboratory for zero-shot cross-lingual transfer in multi-label
//! topic classification.

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod seeding;
pub mod strategies;
pub mod synthlab;
pub mod text;
pub mod translation;
#[cfg(feature = "remote")]
pub mod remote;
pub mod runner;

pub use error::{Error, Result};

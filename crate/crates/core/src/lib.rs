pub mod classify;
pub mod error;
pub mod expr;
pub mod field;
pub mod fixtures;
pub mod integral;
pub mod lax;
pub mod odesolve;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};

/// Seed used when neither the caller nor `LLX_SEED` provides one.
pub const DEFAULT_SEED: u64 = 20_190_412;

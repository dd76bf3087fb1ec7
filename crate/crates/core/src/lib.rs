//! Anisotropic integro-differential operators of fractional order `2s`,
//! the cutoff barrier used in comparison arguments, explicit lemma constants,
//! and replays of the Liouville-type rigidity argument on concrete fields.

pub mod barrier;
pub mod error;
pub mod lemma_suite;
pub mod linalg;
pub mod measure;
pub mod nelder_mead;
pub mod operator;
pub mod quadrature;
pub mod rigidity;

pub use error::{Error, Result};

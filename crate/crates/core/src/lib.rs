//! Time-dependent pseudo-Hermitian Swanson oscillator: truncated Fock-space
//! algebra, SU(1,1) Dyson maps, Lewis–Riesenfeld solutions and independent
//! propagation oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fock;
pub mod metric;
pub mod oracle;
pub mod position;
pub mod runner;
pub mod swanson;
pub mod trajectory;

pub use error::{Error, Result};

//! Matrix-level simulation of positive-definite quantum linear system
//! solvers: polynomial inverse approximants, block-encodings, the
//! variable-time amplified solver and the Cholesky-block preconditioned
//! pipeline for sums of local Hamiltonians.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod blockenc;
pub mod encoding;
pub mod error;
pub mod instances;
pub mod json;
pub mod ledger;
pub mod linalg;
pub mod poly;
pub mod rng;
pub mod solver;
pub mod state;
pub mod sumqls;
pub mod vtaa;

pub use error::{Error, Result};

//! Block-encodings of B = I − ηA and polynomial transformations of them.

pub mod gram;
pub mod lcu;
pub mod qsp;
pub mod sparse;

pub use gram::{check_diagonal_dominance, gram_encoding, GramEncoding};
pub use lcu::{embed_registers, lcu_encoding, LcuEncoding, LocalTerm, SumHamiltonianJson, SumHamiltonianSpec};
pub use qsp::{check_qsp_bound, inverse_encoding, qsp_apply, InverseEncoding};
pub use sparse::{SparseMatrixJson, SparseMatrixOracle};

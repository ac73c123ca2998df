//! GF(2) linear algebra: word-packed dense matrices for elimination and
//! index-list sparse matrices for pruning and peeling.

mod dense;
mod perm;
mod sparse;

pub use dense::{DenseBitMatrix, SolveOutcome, Systematic};
pub use perm::{Permutation, PermutationPair};
pub use sparse::SparseBinaryMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is rank deficient: rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("index {index} out of range for {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

/// XOR of the bits of `v` selected by `support`.
pub fn parity_over(v: &[u8], support: &[usize]) -> u8 {
    support.iter().fold(0u8, |acc, &i| acc ^ v[i])
}

/// Hamming weight of a 0/1 vector.
pub fn weight(v: &[u8]) -> usize {
    v.iter().filter(|&&b| b != 0).count()
}

//! Factor-graph parity-check matrices for polar codes and their pruned form.
//!
//! Variable node `ℓ·N + k` sits on layer `ℓ` of the butterfly. Layer 0
//! holds `u` in natural order and stage `s` butterflies on index bit `s`,
//! so layer `n` holds `x = u F^{⊗n}` and codeword bit `c[j]` is node
//! `n·N + bitrev(j)`.

mod artifact;
mod prune;

pub use artifact::{ArtifactError, ARTIFACT_VERSION};
pub use prune::{prune, prune_with, PruneOptions, PruneStats};

use crate::gf2::{DenseBitMatrix, Gf2Error, SparseBinaryMatrix};
use crate::polar::{bit_reverse, AugmentedCodeSpec, PolarCodeSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Frozen input bit, always zero.
    Frozen,
    /// Internal butterfly node or information input bit.
    Hidden,
    /// Codeword bit.
    Codeword,
}

/// The `N log₂N × N(1 + log₂N)` PCM of the polar butterfly.
#[derive(Debug, Clone)]
pub struct FactorGraphPcm {
    pub matrix: SparseBinaryMatrix,
    pub kinds: Vec<NodeKind>,
    pub log_n: usize,
    pub k: usize,
}

impl FactorGraphPcm {
    pub fn block_len(&self) -> usize {
        1 << self.log_n
    }

    /// Node indices of the codeword bits, in codeword order.
    pub fn cvn_columns(&self) -> Vec<usize> {
        let size = self.block_len();
        (0..size)
            .map(|j| self.log_n * size + bit_reverse(j, self.log_n))
            .collect()
    }

    pub fn fvn_columns(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&c| self.kinds[c] == NodeKind::Frozen)
            .collect()
    }
}

pub fn build_standard_fg_pcm(spec: &PolarCodeSpec) -> FactorGraphPcm {
    let n = spec.log_n();
    let size = spec.block_len();
    let mut supports = Vec::with_capacity(n * size);
    for s in 0..n {
        let bit = 1 << s;
        for k in (0..size).filter(|k| k & bit == 0) {
            let (a, b) = (s * size + k, s * size + (k | bit));
            supports.push(vec![a, b, (s + 1) * size + k]);
            supports.push(vec![b, (s + 1) * size + (k | bit)]);
        }
    }
    let matrix = SparseBinaryMatrix::from_row_supports(size * (n + 1), &supports)
        .expect("butterfly indices in range");
    let mut kinds = vec![NodeKind::Hidden; size * (n + 1)];
    for k in 0..size {
        if spec.is_frozen(k) {
            kinds[k] = NodeKind::Frozen;
        }
        kinds[n * size + k] = NodeKind::Codeword;
    }
    FactorGraphPcm {
        matrix,
        kinds,
        log_n: n,
        k: spec.k(),
    }
}

/// Values of every factor-graph node for input word `u`.
pub fn fg_node_values(u: &[u8]) -> Vec<u8> {
    let size = u.len();
    let n = size.trailing_zeros() as usize;
    let mut out = Vec::with_capacity(size * (n + 1));
    let mut layer = u.to_vec();
    out.extend_from_slice(&layer);
    for s in 0..n {
        let bit = 1 << s;
        for k in (0..size).filter(|k| k & bit == 0) {
            layer[k] ^= layer[k | bit];
        }
        out.extend_from_slice(&layer);
    }
    out
}

/// A pruned polar PCM, optionally extended by CRC rows.
///
/// Columns are canonical: surviving hidden nodes by original index, then the
/// `N` codeword columns in codeword order. When CRC rows are present they
/// are the last `r_crc` rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrunedPcm {
    pub(crate) matrix: SparseBinaryMatrix,
    pub(crate) log_n: usize,
    pub(crate) k: usize,
    pub(crate) r_crc: usize,
    pub(crate) cvn_columns: Vec<usize>,
    pub(crate) origin_map: Vec<Vec<usize>>,
}

impl PrunedPcm {
    pub fn matrix(&self) -> &SparseBinaryMatrix {
        &self.matrix
    }

    pub fn log_n(&self) -> usize {
        self.log_n
    }

    pub fn block_len(&self) -> usize {
        1 << self.log_n
    }

    /// Polar dimension `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r_crc(&self) -> usize {
        self.r_crc
    }

    /// Dimension of the code the matrix describes (`K − r`).
    pub fn code_dimension(&self) -> usize {
        self.k - self.r_crc
    }

    /// `N′`.
    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_hidden(&self) -> usize {
        self.n_cols() - self.block_len()
    }

    pub fn cvn_columns(&self) -> &[usize] {
        &self.cvn_columns
    }

    /// Original factor-graph nodes merged into each column.
    pub fn origin_map(&self) -> &[Vec<usize>] {
        &self.origin_map
    }

    pub fn density(&self) -> f64 {
        self.matrix.density()
    }

    /// Marks codeword columns.
    pub fn is_cvn(&self, col: usize) -> bool {
        col >= self.n_hidden()
    }

    /// Projects factor-graph node values onto pruned columns.
    pub fn project(&self, node_values: &[u8]) -> Vec<u8> {
        self.origin_map
            .iter()
            .map(|cell| node_values[cell[0]])
            .collect()
    }

    /// Full column assignment for input word `u`.
    pub fn assignment_for_input(&self, u: &[u8]) -> Vec<u8> {
        self.project(&fg_node_values(u))
    }

    /// Appends the CRC constraints `H_crc G_Nᵀ` on the codeword columns.
    pub fn append_crc_rows(&self, spec: &AugmentedCodeSpec, reduce: bool) -> Result<Self, Gf2Error> {
        if self.r_crc != 0 {
            return Err(Gf2Error::DimensionMismatch {
                expected: 0,
                found: self.r_crc,
            });
        }
        if spec.polar.k() != self.k || spec.block_len() != self.block_len() {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.k,
                found: spec.polar.k(),
            });
        }
        let mut rows = spec.crc_rows_on_codeword();
        if reduce {
            rows = reduce_density_greedy(&rows);
        }
        let mut out = self.clone();
        for r in 0..rows.n_rows() {
            let support: Vec<usize> = rows
                .row_support(r)
                .into_iter()
                .map(|j| self.cvn_columns[j])
                .collect();
            out.matrix.push_row(&support)?;
        }
        out.r_crc = rows.n_rows();
        Ok(out)
    }
}

/// Pairwise greedy row-weight reduction: while some pair sums to a row
/// lighter than both, the heavier of the pair (the later one on equal
/// weight) is replaced by the sum. Preserves the row space.
pub fn reduce_density_greedy(rows: &DenseBitMatrix) -> DenseBitMatrix {
    let mut m = rows.clone();
    let count = m.n_rows();
    loop {
        let mut improved = false;
        for i in 0..count {
            for j in i + 1..count {
                let (wi, wj) = (m.row_weight(i), m.row_weight(j));
                let ws = m.xor_weight(i, j);
                if ws < wi && ws < wj {
                    let target = if wi > wj { i } else { j };
                    let other = if target == i { j } else { i };
                    m.row_xor(target, other);
                    improved = true;
                }
            }
        }
        if !improved {
            return m;
        }
    }
}

/// Builds the pruned PCM of `spec`, with CRC rows appended (and greedily
/// thinned) when the spec has a CRC.
pub fn build_pruned_pcm(spec: &AugmentedCodeSpec, options: &PruneOptions) -> PrunedPcm {
    let fg = build_standard_fg_pcm(&spec.polar);
    let (pruned, _) = prune_with(&fg, options);
    if spec.crc.r() == 0 {
        pruned
    } else {
        pruned
            .append_crc_rows(spec, options.reduce_crc_density)
            .expect("dimensions come from the same spec")
    }
}

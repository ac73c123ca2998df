//! Permutation-based triangulation with reference variables.
//!
//! Shared by BEC ML decoding (known columns come from peeling) and by OSD
//! (known columns are the most reliable codeword positions).

use crate::gf2::{Permutation, PermutationPair, SparseBinaryMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColState {
    Known,
    Reference,
    Diagonal,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowState {
    Decoded,
    Diagonal,
    Open,
}

/// Triangulation progress on a PCM.
///
/// In the final arrangement columns are `[known | references | diagonal]`
/// and rows `[decoded | diagonal | residual]`, giving the block layout
///
/// ```text
///            known   refs   diag
/// decoded  [ H00     0      0    ]
/// diagonal [ H11     H12    H13  ]   H13 unit lower triangular
/// residual [ H21     H22    H23  ]
/// ```
#[derive(Debug, Clone)]
pub struct TriangulationState {
    pub(crate) matrix: SparseBinaryMatrix,
    pub(crate) col_state: Vec<ColState>,
    pub(crate) row_state: Vec<RowState>,
    pub(crate) active_count: Vec<usize>,
    pub(crate) refs: Vec<usize>,
    pub(crate) pivots: Vec<(usize, usize)>,
    pending: Vec<usize>,
    eliminate: bool,
    pub(crate) xor_count: usize,
}

impl TriangulationState {
    /// `known` marks columns whose value is available. With
    /// `zero_rows_decoded`, rows touching only known columns are set aside
    /// as decoded; otherwise they join the residual. `eliminate` selects the
    /// variant that clears each pivot column from the open rows, leaving
    /// `H13 = I` and `H23 = 0`.
    pub fn new(
        matrix: SparseBinaryMatrix,
        known: &[bool],
        zero_rows_decoded: bool,
        eliminate: bool,
    ) -> Self {
        assert_eq!(known.len(), matrix.n_cols());
        let col_state: Vec<ColState> = known
            .iter()
            .map(|&k| if k { ColState::Known } else { ColState::Active })
            .collect();
        let active_count: Vec<usize> = (0..matrix.n_rows())
            .map(|r| matrix.row(r).iter().filter(|&&c| !known[c]).count())
            .collect();
        let row_state = active_count
            .iter()
            .map(|&n| {
                if n == 0 && zero_rows_decoded {
                    RowState::Decoded
                } else {
                    RowState::Open
                }
            })
            .collect();
        let pending = (0..matrix.n_rows()).filter(|&r| active_count[r] == 1).collect();
        TriangulationState {
            matrix,
            col_state,
            row_state,
            active_count,
            refs: Vec::new(),
            pivots: Vec::new(),
            pending,
            eliminate,
            xor_count: 0,
        }
    }

    pub fn matrix(&self) -> &SparseBinaryMatrix {
        &self.matrix
    }

    pub fn col_state(&self, c: usize) -> ColState {
        self.col_state[c]
    }

    pub fn row_state(&self, r: usize) -> RowState {
        self.row_state[r]
    }

    pub fn active_count(&self, r: usize) -> usize {
        self.active_count[r]
    }

    pub fn references(&self) -> &[usize] {
        &self.refs
    }

    /// `(row, column)` pivots in diagonal order.
    pub fn pivots(&self) -> &[(usize, usize)] {
        &self.pivots
    }

    pub fn has_active(&self) -> bool {
        self.col_state.contains(&ColState::Active)
    }

    /// Row additions performed by the eliminating variant, in bit XORs.
    pub fn xor_count(&self) -> usize {
        self.xor_count
    }

    /// Open rows with at least one active column.
    pub fn open_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.row_state.len()).filter(|&r| self.row_state[r] == RowState::Open)
    }

    /// Runs diagonal-extension steps until no open row has exactly one
    /// active column. Returns the number of pivots added.
    pub fn extend_diagonal(&mut self) -> usize {
        let mut added = 0;
        loop {
            let mut batch = std::mem::take(&mut self.pending);
            batch.sort_unstable();
            batch.dedup();
            let mut step = Vec::new();
            for r in batch {
                if self.row_state[r] != RowState::Open || self.active_count[r] != 1 {
                    continue;
                }
                let c = *self
                    .matrix
                    .row(r)
                    .iter()
                    .find(|&&c| self.col_state[c] == ColState::Active)
                    .expect("count says one active column");
                self.row_state[r] = RowState::Diagonal;
                self.pivots.push((r, c));
                step.push((r, c));
                self.deactivate(c, ColState::Diagonal);
            }
            if step.is_empty() {
                return added;
            }
            added += step.len();
            if self.eliminate {
                for &(r, c) in &step {
                    let targets: Vec<usize> = self
                        .matrix
                        .col(c)
                        .iter()
                        .copied()
                        .filter(|&q| q != r && self.row_state[q] == RowState::Open)
                        .collect();
                    for q in targets {
                        self.xor_count += self.matrix.row_degree(r);
                        self.matrix.sparse_row_xor(q, r).expect("valid rows");
                    }
                }
            }
        }
    }

    /// Marks `c` as a reference variable.
    pub fn add_reference(&mut self, c: usize) {
        assert_eq!(self.col_state[c], ColState::Active, "reference must be active");
        self.refs.push(c);
        self.deactivate(c, ColState::Reference);
    }

    fn deactivate(&mut self, c: usize, to: ColState) {
        self.col_state[c] = to;
        for i in 0..self.matrix.col(c).len() {
            let q = self.matrix.col(c)[i];
            if self.row_state[q] == RowState::Open {
                self.active_count[q] -= 1;
                if self.active_count[q] == 1 {
                    self.pending.push(q);
                }
            }
        }
    }

    /// Alternates diagonal extension with reference selection until no
    /// active column remains. `choose` returns the next reference; it is
    /// called up to `batch` times per stall.
    pub fn run(&mut self, batch: usize, choose: &mut dyn FnMut(&TriangulationState) -> usize) {
        assert!(batch >= 1);
        loop {
            self.extend_diagonal();
            if !self.has_active() {
                return;
            }
            for _ in 0..batch {
                if !self.has_active() {
                    break;
                }
                let c = choose(self);
                self.add_reference(c);
            }
        }
    }

    /// Open row with the fewest active columns (lowest index on ties),
    /// restricted to rows accepted by `filter`.
    pub fn min_unknown_row(&self, filter: impl Fn(usize) -> bool) -> Option<usize> {
        self.open_rows()
            .filter(|&r| self.active_count[r] > 0 && filter(r))
            .min_by_key(|&r| (self.active_count[r], r))
    }

    pub fn layout(&self) -> Layout {
        let n_rows = self.row_state.len();
        let known: Vec<usize> = (0..self.col_state.len())
            .filter(|&c| self.col_state[c] == ColState::Known)
            .collect();
        let decoded: Vec<usize> = (0..n_rows)
            .filter(|&r| self.row_state[r] == RowState::Decoded)
            .collect();
        let residual: Vec<usize> = self.open_rows().collect();
        let cols: Vec<usize> = known
            .iter()
            .copied()
            .chain(self.refs.iter().copied())
            .chain(self.pivots.iter().map(|&(_, c)| c))
            .collect();
        let rows: Vec<usize> = decoded
            .iter()
            .copied()
            .chain(self.pivots.iter().map(|&(r, _)| r))
            .chain(residual.iter().copied())
            .collect();
        Layout {
            n_d: known.len(),
            n_c: decoded.len(),
            n_r: self.refs.len(),
            n_u: self.pivots.len(),
            n_e: residual.len(),
            perms: PermutationPair {
                row_perm: Permutation::from_vec(rows).expect("rows partitioned"),
                col_perm: Permutation::from_vec(cols).expect("columns partitioned"),
            },
        }
    }
}

/// Block sizes and the final row/column permutations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n_d: usize,
    pub n_c: usize,
    pub n_r: usize,
    pub n_u: usize,
    pub n_e: usize,
    pub perms: PermutationPair,
}

impl Layout {
    /// Number of rows and columns not left in place.
    pub fn moved(&self) -> usize {
        let moved = |p: &Permutation| p.as_slice().iter().enumerate().filter(|(i, &j)| *i != j).count();
        moved(&self.perms.row_perm) + moved(&self.perms.col_perm)
    }

    /// `P_row · H · P_col` as a sparse matrix.
    pub fn arrange(&self, m: &SparseBinaryMatrix) -> SparseBinaryMatrix {
        m.submatrix(self.perms.row_perm.as_slice(), self.perms.col_perm.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lowest_active(s: &TriangulationState) -> usize {
        (0..s.col_state.len())
            .find(|&c| s.col_state(c) == ColState::Active)
            .unwrap()
    }

    #[test]
    fn three_cycle_needs_one_reference() {
        // x0+x1 = 0, x1+x2 = 0, x0+x2 = 0 with nothing known
        let m = SparseBinaryMatrix::from_row_supports(3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        let mut s = TriangulationState::new(m.clone(), &[false; 3], true, false);
        assert_eq!(s.extend_diagonal(), 0);
        s.run(1, &mut lowest_active);
        assert_eq!(s.references(), &[0]);
        assert_eq!(s.pivots().len(), 2);
        let lay = s.layout();
        assert_eq!((lay.n_r, lay.n_u, lay.n_e), (1, 2, 1));
        let arranged = lay.arrange(&m).to_dense();
        // diagonal block rows 0..2, columns 1..3 unit lower triangular
        for i in 0..2 {
            assert!(arranged.get(i, 1 + i));
            for j in i + 1..2 {
                assert!(!arranged.get(i, 1 + j));
            }
        }
        // permutation only: the same number of ones
        assert_eq!(arranged.count_ones(), m.count_ones());
    }

    #[test]
    fn nothing_active_is_a_no_op() {
        let m = SparseBinaryMatrix::from_row_supports(2, &[vec![0, 1]]).unwrap();
        let mut s = TriangulationState::new(m, &[true, true], true, false);
        s.run(1, &mut lowest_active);
        let lay = s.layout();
        assert_eq!((lay.n_r, lay.n_u, lay.n_e, lay.n_c), (0, 0, 0, 1));
    }

    #[test]
    fn eliminating_variant_yields_identity_block() {
        let m = SparseBinaryMatrix::from_row_supports(
            5,
            &[vec![0, 1], vec![1, 2, 3], vec![2, 3, 4], vec![0, 3, 4]],
        )
        .unwrap();
        let known = [true, false, false, false, false];
        let mut s = TriangulationState::new(m, &known, true, true);
        s.run(1, &mut lowest_active);
        let lay = s.layout();
        let arranged = lay.arrange(s.matrix()).to_dense();
        let off = lay.n_d + lay.n_r;
        for i in 0..lay.n_u {
            for j in 0..lay.n_u {
                assert_eq!(arranged.get(lay.n_c + i, off + j), i == j);
            }
        }
        for i in 0..lay.n_e {
            for j in 0..lay.n_u {
                assert!(!arranged.get(lay.n_c + lay.n_u + i, off + j));
            }
        }
    }
}

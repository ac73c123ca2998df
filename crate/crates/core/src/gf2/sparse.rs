use super::{DenseBitMatrix, Gf2Error};
use serde::{Deserialize, Serialize};

/// GF(2) matrix stored as sorted per-row and per-column index lists.
///
/// Both views are kept in sync by every mutation; `check_duality` verifies
/// this and runs after each mutation in debug builds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseBinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseBinaryMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        SparseBinaryMatrix {
            n_rows,
            n_cols,
            rows: vec![Vec::new(); n_rows],
            cols: vec![Vec::new(); n_cols],
        }
    }

    /// Builds from per-row column lists (any order, duplicates cancel).
    pub fn from_row_supports(n_cols: usize, supports: &[Vec<usize>]) -> Result<Self, Gf2Error> {
        let mut m = SparseBinaryMatrix::new(supports.len(), n_cols);
        for (r, support) in supports.iter().enumerate() {
            for &c in support {
                if c >= n_cols {
                    return Err(Gf2Error::IndexOutOfRange { index: c, len: n_cols });
                }
                m.toggle(r, c);
            }
        }
        Ok(m)
    }

    pub fn from_dense(d: &DenseBitMatrix) -> Self {
        let supports: Vec<Vec<usize>> = (0..d.n_rows()).map(|r| d.row_support(r)).collect();
        Self::from_row_supports(d.n_cols(), &supports).expect("indices in range")
    }

    pub fn to_dense(&self) -> DenseBitMatrix {
        let mut d = DenseBitMatrix::zeros(self.n_rows, self.n_cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                d.set(r, c, true);
            }
        }
        d
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    #[inline]
    pub fn row_degree(&self, r: usize) -> usize {
        self.rows[r].len()
    }

    #[inline]
    pub fn col_degree(&self, c: usize) -> usize {
        self.cols[c].len()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].binary_search(&c).is_ok()
    }

    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Fraction of ones, `ones / (rows · cols)`.
    pub fn density(&self) -> f64 {
        if self.n_rows == 0 || self.n_cols == 0 {
            return 0.0;
        }
        self.count_ones() as f64 / (self.n_rows as f64 * self.n_cols as f64)
    }

    /// Flips entry `(r, c)`.
    pub fn toggle(&mut self, r: usize, c: usize) {
        toggle_sorted(&mut self.rows[r], c);
        toggle_sorted(&mut self.cols[c], r);
    }

    /// `row[dst] ^= row[src]`, keeping the column view consistent.
    pub fn sparse_row_xor(&mut self, dst: usize, src: usize) -> Result<(), Gf2Error> {
        for idx in [dst, src] {
            if idx >= self.n_rows {
                return Err(Gf2Error::IndexOutOfRange { index: idx, len: self.n_rows });
            }
        }
        if dst == src {
            self.clear_row(dst);
            return Ok(());
        }
        let src_row = std::mem::take(&mut self.rows[src]);
        let merged = symmetric_difference(&self.rows[dst], &src_row);
        for &c in &src_row {
            toggle_sorted(&mut self.cols[c], dst);
        }
        self.rows[src] = src_row;
        self.rows[dst] = merged;
        self.debug_check();
        Ok(())
    }

    /// `col[dst] ^= col[src]`.
    pub fn col_xor(&mut self, dst: usize, src: usize) {
        assert!(dst != src);
        let src_col = std::mem::take(&mut self.cols[src]);
        let merged = symmetric_difference(&self.cols[dst], &src_col);
        for &r in &src_col {
            toggle_sorted(&mut self.rows[r], dst);
        }
        self.cols[src] = src_col;
        self.cols[dst] = merged;
        self.debug_check();
    }

    pub fn clear_row(&mut self, r: usize) {
        for c in std::mem::take(&mut self.rows[r]) {
            toggle_sorted(&mut self.cols[c], r);
        }
    }

    pub fn clear_col(&mut self, c: usize) {
        for r in std::mem::take(&mut self.cols[c]) {
            toggle_sorted(&mut self.rows[r], c);
        }
    }

    /// Keeps only the listed rows and columns, renumbered in list order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseBinaryMatrix {
        let mut new_col = vec![usize::MAX; self.n_cols];
        for (j, &c) in cols.iter().enumerate() {
            new_col[c] = j;
        }
        let supports: Vec<Vec<usize>> = rows
            .iter()
            .map(|&r| {
                self.rows[r]
                    .iter()
                    .filter_map(|&c| (new_col[c] != usize::MAX).then_some(new_col[c]))
                    .collect()
            })
            .collect();
        SparseBinaryMatrix::from_row_supports(cols.len(), &supports).expect("indices in range")
    }

    /// Appends a row with the given support.
    pub fn push_row(&mut self, support: &[usize]) -> Result<usize, Gf2Error> {
        let r = self.n_rows;
        self.rows.push(Vec::new());
        self.n_rows += 1;
        for &c in support {
            if c >= self.n_cols {
                return Err(Gf2Error::IndexOutOfRange { index: c, len: self.n_cols });
            }
            self.toggle(r, c);
        }
        Ok(r)
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.n_cols);
        self.rows.iter().map(|row| super::parity_over(v, row)).collect()
    }

    /// Checks row/column duality, sortedness and degree bookkeeping.
    pub fn check_duality(&self) -> bool {
        if self.rows.len() != self.n_rows || self.cols.len() != self.n_cols {
            return false;
        }
        let sorted = |v: &Vec<usize>| v.windows(2).all(|w| w[0] < w[1]);
        if !self.rows.iter().all(sorted) || !self.cols.iter().all(sorted) {
            return false;
        }
        let row_ones: usize = self.rows.iter().map(Vec::len).sum();
        let col_ones: usize = self.cols.iter().map(Vec::len).sum();
        row_ones == col_ones
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(r, row)| row.iter().all(|&c| self.cols[c].binary_search(&r).is_ok()))
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if self.n_rows * self.n_cols <= 1 << 16 {
            debug_assert!(self.check_duality(), "row/column supports diverged");
        }
    }
}

fn toggle_sorted(v: &mut Vec<usize>, x: usize) {
    match v.binary_search(&x) {
        Ok(i) => {
            v.remove(i);
        }
        Err(i) => v.insert(i, x),
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_rows(n_cols: usize, rows: &[&[usize]]) -> SparseBinaryMatrix {
        let supports: Vec<Vec<usize>> = rows.iter().map(|r| r.to_vec()).collect();
        SparseBinaryMatrix::from_row_supports(n_cols, &supports).unwrap()
    }

    #[test]
    fn xor_examples() {
        let mut m = with_rows(6, &[&[1, 3], &[1, 3]]);
        m.sparse_row_xor(0, 1).unwrap();
        assert!(m.row(0).is_empty());
        assert_eq!(m.col(1), &[1]);

        let mut m = with_rows(6, &[&[1, 3], &[2]]);
        m.sparse_row_xor(0, 1).unwrap();
        assert_eq!(m.row(0), &[1, 2, 3]);

        let mut m = with_rows(6, &[&[1, 2], &[2, 5]]);
        m.sparse_row_xor(0, 1).unwrap();
        let oracle: Vec<usize> = (0..6)
            .filter(|c| [1usize, 2].contains(c) != [2usize, 5].contains(c))
            .collect();
        assert_eq!(m.row(0), oracle.as_slice());
        assert_eq!(m.col(2), &[1]);
        assert!(m.check_duality());
    }

    #[test]
    fn xor_rejects_bad_index() {
        let mut m = with_rows(3, &[&[0]]);
        assert_eq!(
            m.sparse_row_xor(0, 4),
            Err(Gf2Error::IndexOutOfRange { index: 4, len: 1 })
        );
    }

    proptest! {
        #[test]
        fn xor_sequences_match_dense(
            rows in proptest::collection::vec(proptest::collection::btree_set(0usize..20, 0..8), 2..8),
            ops in proptest::collection::vec((0usize..8, 0usize..8), 0..20),
        ) {
            let supports: Vec<Vec<usize>> = rows.iter().map(|s| s.iter().copied().collect()).collect();
            let mut sparse = SparseBinaryMatrix::from_row_supports(20, &supports).unwrap();
            let mut dense = sparse.to_dense();
            for (d, s) in ops {
                let (d, s) = (d % rows.len(), s % rows.len());
                sparse.sparse_row_xor(d, s).unwrap();
                dense.row_xor(d, s);
                prop_assert!(sparse.check_duality());
            }
            prop_assert_eq!(sparse.to_dense(), dense);
        }
    }
}

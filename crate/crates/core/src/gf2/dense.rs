use super::{Gf2Error, Permutation, PermutationPair};
use std::fmt;

const WORD_BITS: usize = 64;

/// A GF(2) matrix with each row packed into 64-bit words.
///
/// Bits beyond `n_cols` in the last word of a row are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DenseBitMatrix {
    n_rows: usize,
    n_cols: usize,
    stride: usize,
    words: Vec<u64>,
}

/// Result of solving `A x = b` over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Unique(Vec<u8>),
    Multiple { free_count: usize },
    Inconsistent,
}

/// A matrix brought to `[A | I]` form.
///
/// `matrix = row_transform · input · P_col`, where `P_col` reorders columns
/// according to `perms.col_perm` (`matrix[.., j]` comes from input column
/// `perms.col_perm.get(j)`).
#[derive(Debug, Clone)]
pub struct Systematic {
    pub matrix: DenseBitMatrix,
    pub perms: PermutationPair,
    pub row_transform: DenseBitMatrix,
    /// Width of the `A` block.
    pub info_len: usize,
}

impl DenseBitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        let stride = n_cols.div_ceil(WORD_BITS);
        DenseBitMatrix {
            n_rows,
            n_cols,
            stride,
            words: vec![0; stride * n_rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds from rows of 0/1 bytes. All rows must share one length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), n_cols, "ragged rows");
            for (j, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Parses rows written as strings of `0`/`1`.
    pub fn from_strs(rows: &[&str]) -> Self {
        let rows: Vec<Vec<u8>> = rows
            .iter()
            .map(|s| s.bytes().map(|b| u8::from(b == b'1')).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
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
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        (self.words[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        let w = &mut self.words[r * self.stride + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, r: usize, c: usize) {
        self.words[r * self.stride + c / WORD_BITS] ^= 1u64 << (c % WORD_BITS);
    }

    #[inline]
    fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    /// `row[dst] ^= row[src]`.
    pub fn row_xor(&mut self, dst: usize, src: usize) {
        if dst == src {
            self.row_words_mut(dst).fill(0);
            return;
        }
        let s = self.stride;
        let (d, sr) = if dst < src {
            let (lo, hi) = self.words.split_at_mut(src * s);
            (&mut lo[dst * s..(dst + 1) * s], &hi[..s])
        } else {
            let (lo, hi) = self.words.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..(src + 1) * s])
        };
        for (a, b) in d.iter_mut().zip(sr) {
            *a ^= *b;
        }
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.stride..(r + 1) * self.stride]
    }

    /// XORs a 0/1 vector into row `r`.
    pub fn xor_into_row(&mut self, r: usize, bits: &[u8]) {
        assert_eq!(bits.len(), self.n_cols);
        for (c, &b) in bits.iter().enumerate() {
            if b != 0 {
                self.toggle(r, c);
            }
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.words.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Weight of `row[a] ⊕ row[b]`.
    pub fn xor_weight(&self, a: usize, b: usize) -> usize {
        self.row_words(a)
            .iter()
            .zip(self.row_words(b))
            .map(|(x, y)| (x ^ y).count_ones() as usize)
            .sum()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn row(&self, r: usize) -> Vec<u8> {
        (0..self.n_cols).map(|c| u8::from(self.get(r, c))).collect()
    }

    pub fn row_support(&self, r: usize) -> Vec<usize> {
        (0..self.n_cols).filter(|&c| self.get(r, c)).collect()
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.n_rows).map(|r| u8::from(self.get(r, c))).collect()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n_rows).map(|r| self.row(r)).collect()
    }

    /// `self · v` for a 0/1 column vector.
    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.n_cols, "vector length");
        let packed = pack(v);
        (0..self.n_rows)
            .map(|r| {
                let ones: u32 = self
                    .row_words(r)
                    .iter()
                    .zip(&packed)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum();
                (ones & 1) as u8
            })
            .collect()
    }

    /// Row vector times matrix: `vᵀ · self`.
    pub fn vec_mul(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.n_rows, "vector length");
        let mut acc = vec![0u64; self.stride];
        for (r, &b) in v.iter().enumerate() {
            if b != 0 {
                for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                    *a ^= *w;
                }
            }
        }
        unpack(&acc, self.n_cols)
    }

    pub fn mul(&self, other: &DenseBitMatrix) -> DenseBitMatrix {
        assert_eq!(self.n_cols, other.n_rows, "inner dimension");
        let mut out = DenseBitMatrix::zeros(self.n_rows, other.n_cols);
        for r in 0..self.n_rows {
            for k in 0..self.n_cols {
                if self.get(r, k) {
                    let (s, o) = (out.stride, other.stride);
                    let dst = &mut out.words[r * s..(r + 1) * s];
                    for (a, b) in dst.iter_mut().zip(&other.words[k * o..(k + 1) * o]) {
                        *a ^= *b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseBitMatrix {
        DenseBitMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i))
    }

    pub fn select_columns(&self, cols: &[usize]) -> DenseBitMatrix {
        DenseBitMatrix::from_fn(self.n_rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> DenseBitMatrix {
        let mut out = DenseBitMatrix::zeros(rows.len(), self.n_cols);
        for (i, &r) in rows.iter().enumerate() {
            out.row_words_mut(i).copy_from_slice(self.row_words(r));
        }
        out
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &DenseBitMatrix) -> DenseBitMatrix {
        assert_eq!(self.n_cols, other.n_cols, "column count");
        let mut words = self.words.clone();
        words.extend_from_slice(&other.words);
        DenseBitMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols,
            stride: self.stride,
            words,
        }
    }

    /// GF(2) row rank.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate(None).0.len()
    }

    /// Gauss-Jordan elimination in natural column order. Returns the
    /// `(pivot row, pivot column)` list; rows are swapped so pivot `i` lives
    /// in row `i`. `track` receives every row operation. Also returns the
    /// number of row additions performed.
    fn eliminate(&mut self, mut track: Option<&mut DenseBitMatrix>) -> (Vec<(usize, usize)>, usize) {
        let mut pivots = Vec::new();
        let mut ops = 0;
        let mut next = 0;
        for c in 0..self.n_cols {
            if next == self.n_rows {
                break;
            }
            let Some(p) = (next..self.n_rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.swap_rows(p, next);
            if let Some(t) = track.as_deref_mut() {
                t.swap_rows(p, next);
            }
            for r in 0..self.n_rows {
                if r != next && self.get(r, c) {
                    self.row_xor(r, next);
                    ops += 1;
                    if let Some(t) = track.as_deref_mut() {
                        t.row_xor(r, next);
                    }
                }
            }
            pivots.push((next, c));
            next += 1;
        }
        (pivots, ops)
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &[u8]) -> Result<SolveOutcome, Gf2Error> {
        self.solve_counted(b).map(|(out, _)| out)
    }

    /// As [`DenseBitMatrix::solve`], also returning the number of row
    /// additions on the augmented `rows × (cols + 1)` matrix.
    pub fn solve_counted(&self, b: &[u8]) -> Result<(SolveOutcome, usize), Gf2Error> {
        if b.len() != self.n_rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.n_rows,
                found: b.len(),
            });
        }
        let n = self.n_cols;
        let mut aug = DenseBitMatrix::zeros(self.n_rows, n + 1);
        for r in 0..self.n_rows {
            for c in self.row_support(r) {
                aug.set(r, c, true);
            }
            if b[r] != 0 {
                aug.set(r, n, true);
            }
        }
        let (pivots, ops) = aug.eliminate(None);
        if pivots.iter().any(|&(_, c)| c == n) {
            return Ok((SolveOutcome::Inconsistent, ops));
        }
        if pivots.len() < n {
            let free_count = n - pivots.len();
            return Ok((SolveOutcome::Multiple { free_count }, ops));
        }
        let mut x = vec![0u8; n];
        for &(r, c) in &pivots {
            x[c] = u8::from(aug.get(r, n));
        }
        Ok((SolveOutcome::Unique(x), ops))
    }

    /// Brings a full-row-rank matrix to `[A | I]`.
    ///
    /// `col_preference` lists every column, most preferred first. Identity
    /// columns are claimed greedily starting from the least preferred end,
    /// so preferred columns stay in the `A` block whenever the rank allows;
    /// within each block columns keep their preference order. Pivot rows are
    /// the lowest-index admissible row.
    pub fn systematize(&self, col_preference: &[usize]) -> Result<Systematic, Gf2Error> {
        let (r, c) = (self.n_rows, self.n_cols);
        let pref = Permutation::from_vec(col_preference.to_vec()).ok_or(
            Gf2Error::DimensionMismatch {
                expected: c,
                found: col_preference.len(),
            },
        )?;
        if pref.len() != c {
            return Err(Gf2Error::DimensionMismatch {
                expected: c,
                found: pref.len(),
            });
        }
        let mut m = self.clone();
        let mut t = DenseBitMatrix::identity(r);
        let mut pivot_row_of = vec![None; c];
        let mut used = vec![false; r];
        let mut found = 0;
        for &col in pref.as_slice().iter().rev() {
            if found == r {
                break;
            }
            let Some(p) = (0..r).find(|&i| !used[i] && m.get(i, col)) else {
                continue;
            };
            used[p] = true;
            pivot_row_of[col] = Some(p);
            found += 1;
            for i in 0..r {
                if i != p && m.get(i, col) {
                    m.row_xor(i, p);
                    t.row_xor(i, p);
                }
            }
        }
        if found < r {
            return Err(Gf2Error::RankDeficient { rank: found, rows: r });
        }
        let info: Vec<usize> = pref
            .as_slice()
            .iter()
            .copied()
            .filter(|&j| pivot_row_of[j].is_none())
            .collect();
        let ident: Vec<usize> = pref
            .as_slice()
            .iter()
            .copied()
            .filter(|&j| pivot_row_of[j].is_some())
            .collect();
        let row_order: Vec<usize> = ident.iter().map(|&j| pivot_row_of[j].unwrap()).collect();
        let col_order: Vec<usize> = info.iter().chain(&ident).copied().collect();
        let matrix = m.select_rows(&row_order).select_columns(&col_order);
        let row_transform = t.select_rows(&row_order);
        Ok(Systematic {
            matrix,
            perms: PermutationPair {
                row_perm: Permutation::from_vec(row_order).expect("pivot rows are distinct"),
                col_perm: Permutation::from_vec(col_order).expect("columns partitioned"),
            },
            row_transform,
            info_len: info.len(),
        })
    }
}

fn pack(v: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; v.len().div_ceil(WORD_BITS)];
    for (i, &b) in v.iter().enumerate() {
        if b != 0 {
            out[i / WORD_BITS] |= 1 << (i % WORD_BITS);
        }
    }
    out
}

fn unpack(words: &[u64], len: usize) -> Vec<u8> {
    (0..len)
        .map(|i| ((words[i / WORD_BITS] >> (i % WORD_BITS)) & 1) as u8)
        .collect()
}

impl fmt::Debug for DenseBitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseBitMatrix {}x{}", self.n_rows, self.n_cols)?;
        for r in 0..self.n_rows {
            let s: String = (0..self.n_cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

//! Reprocessing scans over a systematic PCM `[A | I]`.
//!
//! The soft output `ℓ̃` sets the hard decision `c₀` on the information
//! block and the pair reliabilities; candidates are ranked against the
//! permuted channel output `ỹ`. With `p₀ = A c₀` and
//! `s_l = ỹ_{K+l}(−1)^{p₀,l}`, flipping a set `E` of information bits
//! changes the correlation `Σ (−1)^{c_j} ỹ_j` by
//! `−2 Σ_{i∈E} (−1)^{c₀,i} ỹ_i` on the information block, and the parity
//! block contributes `Σ_l s_l (−1)^{(A e)_l}`. Scores below are that sum,
//! so the largest score is the candidate nearest to `ỹ`.

use super::SystematicPcm;
use crate::bec::{ColState, TriangulationState};
use crate::bp_awgn::bpsk;
use crate::gf2::DenseBitMatrix;
use crate::pcm::PrunedPcm;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, PartialEq)]
pub struct OsdCandidate {
    /// Flipped information positions (permuted domain), ascending.
    pub pattern: Vec<usize>,
    /// Codeword in the permuted domain.
    pub codeword: Vec<u8>,
    pub score: f64,
}

/// Enumeration order for partial order-2 pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairOrder {
    /// The `M` pairs with the smallest `|ℓ̃_i| + |ℓ̃_j|`.
    #[default]
    BottomM,
    /// The first `M` pairs of the loop `i = K−2, …, 0`, `j = K−1, …, i+1`.
    PaperLoop,
}

struct Prepared {
    k: usize,
    base: Vec<u8>,
    parity: Vec<u8>,
    /// `(−1)^{c₀,i} ỹ_i` on the information block.
    signed: Vec<f64>,
    s: Vec<f64>,
    total: f64,
    /// Rows of `A` with a one in information column `i`.
    col_support: Vec<Vec<usize>>,
    /// `Σ_{l ∈ col_support[i]} s_l`.
    t: Vec<f64>,
}

impl Prepared {
    fn new(sp: &SystematicPcm, soft: &[f64], y: &[f64]) -> Self {
        let k = sp.k;
        let m = &sp.matrix;
        assert_eq!(y.len(), m.n_cols(), "observation length must equal blocklength");
        assert_eq!(soft.len(), m.n_cols(), "soft output length must equal blocklength");
        let base: Vec<u8> = soft[..k].iter().map(|&v| u8::from(v < 0.0)).collect();
        let mut col_support = vec![Vec::new(); k];
        let mut parity = vec![0u8; m.n_rows()];
        for l in 0..m.n_rows() {
            for i in m.row_support(l) {
                if i >= k {
                    break;
                }
                col_support[i].push(l);
                parity[l] ^= base[i];
            }
        }
        let s: Vec<f64> = (0..m.n_rows()).map(|l| bpsk(parity[l]) * y[k + l]).collect();
        let total = s.iter().sum();
        let t = col_support.iter().map(|rows| rows.iter().map(|&l| s[l]).sum()).collect();
        let signed = (0..k).map(|i| bpsk(base[i]) * y[i]).collect();
        Prepared {
            k,
            base,
            parity,
            signed,
            s,
            total,
            col_support,
            t,
        }
    }

    fn score1(&self, i: usize) -> f64 {
        -2.0 * self.signed[i] + self.total - 2.0 * self.t[i]
    }

    fn score2(&self, i: usize, j: usize, d: f64) -> f64 {
        -2.0 * self.signed[i] - 2.0 * self.signed[j] + self.total - 2.0 * (self.t[i] + self.t[j] - 2.0 * d)
    }

    /// `Σ s_l` over rows where columns `i` and `j` both have a one.
    fn overlap(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.col_support[i], &self.col_support[j]);
        let (mut x, mut y, mut acc) = (0, 0, 0.0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.s[a[x]];
                    x += 1;
                    y += 1;
                }
            }
        }
        acc
    }

    fn candidate(&self, pattern: Vec<usize>, score: f64) -> OsdCandidate {
        let mut codeword: Vec<u8> = self.base.iter().chain(&self.parity).copied().collect();
        for &i in &pattern {
            codeword[i] ^= 1;
            for &l in &self.col_support[i] {
                codeword[self.k + l] ^= 1;
            }
        }
        OsdCandidate {
            pattern,
            codeword,
            score,
        }
    }

    /// Best of the weight-0 and weight-1 patterns: `(pattern, score)`.
    fn best_order1(&self) -> (Vec<usize>, f64) {
        let mut best = (Vec::new(), self.total);
        for i in 0..self.k {
            let sc = self.score1(i);
            if sc > best.1 {
                best = (vec![i], sc);
            }
        }
        best
    }
}

fn check_identity(y: &[f64], c: &OsdCandidate, prep: &Prepared) {
    if cfg!(debug_assertions) {
        let corr: f64 = c.codeword.iter().zip(y).map(|(&b, &v)| bpsk(b) * v).sum();
        let info: f64 = prep.signed.iter().sum();
        let scale = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        assert!(
            (corr - (c.score + info)).abs() <= 1e-9 * scale,
            "closed-form score disagrees with the correlation"
        );
    }
}

/// Closed-form score of an arbitrary pattern of weight at most two.
pub fn score_candidate(sp: &SystematicPcm, soft: &[f64], y: &[f64], pattern: &[usize]) -> f64 {
    let prep = Prepared::new(sp, soft, y);
    match *pattern {
        [] => prep.total,
        [i] => prep.score1(i),
        [i, j] => prep.score2(i, j, prep.overlap(i, j)),
        _ => panic!("patterns of weight above two are not scored"),
    }
}

/// Order-1 reprocessing: the best of the `K + 1` patterns of weight ≤ 1.
/// Ties keep the lighter, then lexicographically smaller, pattern.
pub fn reprocess_order1(sp: &SystematicPcm, soft: &[f64], y: &[f64]) -> OsdCandidate {
    let prep = Prepared::new(sp, soft, y);
    let (pattern, score) = prep.best_order1();
    let c = prep.candidate(pattern, score);
    check_identity(y, &c, &prep);
    c
}

/// Order-2 reprocessing over all pairs. Pair overlaps come from the
/// product `D = Aᵀ diag(s) A`, accumulated row by row.
pub fn reprocess_order2(sp: &SystematicPcm, soft: &[f64], y: &[f64]) -> OsdCandidate {
    let prep = Prepared::new(sp, soft, y);
    let k = prep.k;
    let mut d = vec![0.0f64; k * k];
    for l in 0..sp.matrix.n_rows() {
        let supp: Vec<usize> = sp.matrix.row_support(l).into_iter().take_while(|&i| i < k).collect();
        for (x, &i) in supp.iter().enumerate() {
            for &j in &supp[x + 1..] {
                d[i * k + j] += prep.s[l];
            }
        }
    }
    let (mut pattern, mut score) = prep.best_order1();
    for i in 0..k {
        for j in i + 1..k {
            let sc = prep.score2(i, j, d[i * k + j]);
            if sc > score {
                pattern = vec![i, j];
                score = sc;
            }
        }
    }
    let c = prep.candidate(pattern, score);
    check_identity(y, &c, &prep);
    c
}

/// The `m` pairs enumerated by partial order-2, given information-block
/// reliabilities sorted in decreasing order. Pairs are `(i, j)`, `i < j`.
pub fn enumerate_posd_pairs(reliability: &[f64], m: usize, order: PairOrder) -> Vec<(usize, usize)> {
    let k = reliability.len();
    let m = m.min(k * k.saturating_sub(1) / 2);
    match order {
        PairOrder::PaperLoop => (0..k.saturating_sub(1))
            .rev()
            .flat_map(|i| (i + 1..k).rev().map(move |j| (i, j)))
            .take(m)
            .collect(),
        PairOrder::BottomM => {
            // ascending reliability: asc[p] = K − 1 − p
            let key = |p: usize, q: usize| {
                let (a, b) = (k - 1 - p, k - 1 - q);
                (reliability[a] + reliability[b]).to_bits()
            };
            let mut heap = BinaryHeap::new();
            for p in 0..k.saturating_sub(1) {
                heap.push(Reverse((key(p, p + 1), p, p + 1)));
            }
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let Reverse((_, p, q)) = heap.pop().expect("enough pairs");
                out.push((k - 1 - q, k - 1 - p));
                if q + 1 < k {
                    heap.push(Reverse((key(p, q + 1), p, q + 1)));
                }
            }
            out
        }
    }
}

/// Partial order-2: order-1 plus `m` pairs over the least reliable
/// information bits.
pub fn reprocess_partial2(sp: &SystematicPcm, soft: &[f64], y: &[f64], m: usize, order: PairOrder) -> OsdCandidate {
    let prep = Prepared::new(sp, soft, y);
    let rel: Vec<f64> = soft[..prep.k].iter().map(|v| v.abs()).collect();
    let mut pairs = enumerate_posd_pairs(&rel, m, order);
    pairs.sort_unstable();
    let (mut pattern, mut score) = prep.best_order1();
    for (i, j) in pairs {
        let sc = prep.score2(i, j, prep.overlap(i, j));
        if sc > score {
            pattern = vec![i, j];
            score = sc;
        }
    }
    let c = prep.candidate(pattern, score);
    check_identity(y, &c, &prep);
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcosdCandidate {
    /// Flipped variable among `[fixed | references]`, if any.
    pub pattern: Option<usize>,
    /// Codeword in codeword order.
    pub codeword: Vec<u8>,
    pub correlation: f64,
}

/// Low-complexity OSD on an MRIB triangulation without stage 4: the
/// `K + n_r` fixed and reference variables are hard-decided (hidden
/// references start at 0), each pattern of weight ≤ 1 is kept if it meets
/// the residual checks, the diagonal unknowns follow from the triangular
/// block, and the candidate with the largest correlation with `y` wins.
/// Hard decisions come from `soft`; both are in codeword order. Returns
/// `None` when no pattern passes.
pub fn reprocess_lcosd(p: &PrunedPcm, s: &TriangulationState, soft: &[f64], y: &[f64]) -> Option<LcosdCandidate> {
    let m = s.matrix();
    let n_cols = m.n_cols();
    let mut pos_of_col = vec![usize::MAX; n_cols];
    for (j, &c) in p.cvn_columns().iter().enumerate() {
        pos_of_col[c] = j;
    }
    let rank: Vec<usize> = super::ReliabilityOrder::new(soft).rank;
    let mut fixed: Vec<usize> = (0..n_cols).filter(|&c| s.col_state(c) == ColState::Known).collect();
    fixed.sort_by_key(|&c| rank[pos_of_col[c]]);
    let vars: Vec<usize> = fixed.iter().chain(s.references()).copied().collect();
    let nv = vars.len();
    let mut var_of_col = vec![usize::MAX; n_cols];
    for (v, &c) in vars.iter().enumerate() {
        var_of_col[c] = v;
    }
    let mut diag_of_col = vec![usize::MAX; n_cols];
    for (k, &(_, c)) in s.pivots().iter().enumerate() {
        diag_of_col[c] = k;
    }
    let base: Vec<u8> = vars
        .iter()
        .map(|&c| match pos_of_col[c] {
            usize::MAX => 0,
            j => u8::from(soft[j] < 0.0),
        })
        .collect();

    // each diagonal unknown as a linear form in the variables
    let n_u = s.pivots().len();
    let mut b = DenseBitMatrix::zeros(n_u, nv);
    for (k, &(r, pc)) in s.pivots().iter().enumerate() {
        for &c in m.row(r) {
            if c == pc {
                continue;
            }
            match s.col_state(c) {
                ColState::Diagonal => b.row_xor(k, diag_of_col[c]),
                _ => b.toggle(k, var_of_col[c]),
            }
        }
    }
    let residual: Vec<usize> = s.open_rows().collect();
    let mut res = DenseBitMatrix::zeros(residual.len(), nv);
    for (e, &r) in residual.iter().enumerate() {
        for &c in m.row(r) {
            match s.col_state(c) {
                ColState::Diagonal => {
                    for v in b.row_support(diag_of_col[c]) {
                        res.toggle(e, v);
                    }
                }
                _ => res.toggle(e, var_of_col[c]),
            }
        }
    }
    let syndrome = res.mul_vec(&base);
    let diag_base = b.mul_vec(&base);

    let build = |flip: Option<usize>| -> Vec<u8> {
        let mut x = base.clone();
        let mut d = diag_base.clone();
        if let Some(v) = flip {
            x[v] ^= 1;
            for k in 0..n_u {
                if b.get(k, v) {
                    d[k] ^= 1;
                }
            }
        }
        let mut c = vec![0u8; p.block_len()];
        for (v, &col) in vars.iter().enumerate() {
            if pos_of_col[col] != usize::MAX {
                c[pos_of_col[col]] = x[v];
            }
        }
        for (k, &(_, col)) in s.pivots().iter().enumerate() {
            if pos_of_col[col] != usize::MAX {
                c[pos_of_col[col]] = d[k];
            }
        }
        c
    };
    let corr = |c: &[u8]| c.iter().zip(y).map(|(&bit, &v)| bpsk(bit) * v).sum::<f64>();

    let mut best: Option<LcosdCandidate> = None;
    let mut consider = |flip: Option<usize>| {
        let c = build(flip);
        let sc = corr(&c);
        if best.as_ref().is_none_or(|b| sc > b.correlation) {
            best = Some(LcosdCandidate {
                pattern: flip,
                codeword: c,
                correlation: sc,
            });
        }
    };
    if syndrome.iter().all(|&x| x == 0) {
        consider(None);
    }
    for v in 0..nv {
        if (0..residual.len()).all(|e| res.get(e, v) == (syndrome[e] == 1)) {
            consider(Some(v));
        }
    }
    best
}

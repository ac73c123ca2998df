//! AWGN channel model and scaled min-sum belief propagation on the polar
//! factor graph, with CRC-aided stopping (CBP) and a list of
//! stage-permuted graphs (CBPL).
//!
//! The graph has `n + 1` layers of `N` nodes. Layer 0 is the input word
//! `u`, layer `n` is `x = u F^{⊗n}` (codeword bit `j` sits at
//! `x[bitrev(j)]`). Stage `t` joins layers `t` and `t + 1` with butterflies
//! on index bit `order[t]`; any order of the bits encodes the same code.

use crate::gf2::DenseBitMatrix;
use crate::polar::{bit_reverse, polar_transform, AugmentedCodeSpec, PolarCodeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpConfig {
    pub i_max: usize,
    /// Iterations on the polar graph alone before CRC checks join.
    pub i_thr: usize,
    pub llr_clip: f64,
    /// Min-sum normalization factor.
    pub scaling: f64,
    /// Stop as soon as the hard decisions form a codeword.
    pub early_termination: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            i_max: 100,
            i_thr: 10,
            llr_clip: 20.0,
            scaling: 0.9375,
            early_termination: true,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.i_thr < 1 || self.i_thr > self.i_max {
            return Err(format!("need 1 <= i_thr <= i_max, got {} / {}", self.i_thr, self.i_max));
        }
        if !(self.scaling > 0.0 && self.scaling <= 1.0) {
            return Err(format!("scaling must lie in (0, 1], got {}", self.scaling));
        }
        if !(self.llr_clip > 0.0) {
            return Err(format!("llr_clip must be positive, got {}", self.llr_clip));
        }
        Ok(())
    }
}

/// Order in which index bits are butterflied, from the input side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StagePermutation {
    pub order: Vec<usize>,
}

impl StagePermutation {
    pub fn identity(n: usize) -> Self {
        StagePermutation {
            order: (0..n).collect(),
        }
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.order.len()];
        self.order
            .iter()
            .all(|&b| b < seen.len() && !std::mem::replace(&mut seen[b], true))
    }

    /// Index map `i ↦ i'` taking this graph to the identity graph: bit `t`
    /// of `i'` is bit `order[t]` of `i`.
    pub fn index_map(&self, i: usize) -> usize {
        self.order
            .iter()
            .enumerate()
            .fold(0, |acc, (t, &b)| acc | (((i >> b) & 1) << t))
    }
}

/// The first `l` permutations, in lexicographic order, of the last three
/// stages (all stages when `n < 3`). The first is the identity.
pub fn final_stage_permutations(n: usize, l: usize) -> Vec<StagePermutation> {
    let tail = n.min(3);
    let head: Vec<usize> = (0..n - tail).collect();
    let mut perms = Vec::new();
    let mut last: Vec<usize> = (n - tail..n).collect();
    loop {
        if perms.len() == l {
            break;
        }
        perms.push(StagePermutation {
            order: head.iter().chain(&last).copied().collect(),
        });
        if !next_permutation(&mut last) {
            break;
        }
    }
    perms
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Number of distinct branches available to `cbpl_decode`.
pub fn max_list_size(n: usize) -> usize {
    (1..=n.min(3)).product()
}

/// BPSK (`0 ↦ +1`, `1 ↦ −1`) plus i.i.d. `N(0, σ²)` noise.
pub fn transmit_awgn<R: Rng + ?Sized>(c: &[u8], sigma: f64, rng: &mut R) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    c.iter().map(|&b| bpsk(b) + noise.sample(rng)).collect()
}

pub fn transmit_awgn_seeded(c: &[u8], sigma: f64, seed: u64) -> Vec<f64> {
    transmit_awgn(c, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn bpsk(b: u8) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `ℓ = 2y/σ²`, clipped to `±clip`.
pub fn channel_llr(y: &[f64], sigma: f64, clip: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let s2 = sigma * sigma;
    y.iter().map(|&v| (2.0 * v / s2).clamp(-clip, clip)).collect()
}

/// Noise standard deviation for `Eb/N0` in dB at rate `rate`.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt()
}

/// Squared Euclidean distance between `BPSK(c)` and `y`.
pub fn euclidean_distance(c: &[u8], y: &[f64]) -> f64 {
    c.iter().zip(y).map(|(&b, &v)| (bpsk(b) - v).powi(2)).sum()
}

fn hard(l: f64) -> u8 {
    u8::from(l < 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbpOutput {
    /// Posterior LLRs in codeword order.
    pub soft_codeword_llrs: Vec<f64>,
    pub hard_u: Vec<u8>,
    pub hard_c: Vec<u8>,
    pub terminated_early: bool,
    pub iterations_used: usize,
}

/// CRC checks on the input word: rows of `h` act on the bits at
/// `positions` (in CRC order).
#[derive(Debug, Clone)]
pub(crate) struct CrcGraph<'a> {
    pub h: &'a DenseBitMatrix,
    pub positions: &'a [usize],
}

/// Min-sum decoding in the `x` domain.
pub(crate) fn bp_core(
    frozen: &[bool],
    x_llr: &[f64],
    crc: Option<CrcGraph<'_>>,
    perm: &StagePermutation,
    cfg: &BpConfig,
) -> (Vec<f64>, Vec<u8>, Vec<u8>, bool, usize) {
    let size = x_llr.len();
    let n = perm.order.len();
    assert_eq!(1 << n, size);
    let clip = cfg.llr_clip;
    let alpha = cfg.scaling;
    let f = |a: f64, b: f64| {
        let m = alpha * a.abs().min(b.abs());
        if (a < 0.0) != (b < 0.0) {
            -m
        } else {
            m
        }
    };
    let cl = |v: f64| v.clamp(-clip, clip);

    let mut left = vec![0.0f64; (n + 1) * size];
    let mut right = vec![0.0f64; (n + 1) * size];
    for (i, &v) in x_llr.iter().enumerate() {
        left[n * size + i] = cl(v);
    }
    let prior: Vec<f64> = frozen.iter().map(|&fz| if fz { clip } else { 0.0 }).collect();
    right[..size].copy_from_slice(&prior);

    let (crc_rows, crc_var_rows): (Vec<Vec<usize>>, Vec<Vec<usize>>) = match &crc {
        Some(g) => {
            let rows: Vec<Vec<usize>> = (0..g.h.n_rows()).map(|r| g.h.row_support(r)).collect();
            let mut var_rows = vec![Vec::new(); g.positions.len()];
            for (r, row) in rows.iter().enumerate() {
                for &j in row {
                    var_rows[j].push(r);
                }
            }
            (rows, var_rows)
        }
        None => (Vec::new(), Vec::new()),
    };
    // check-to-variable messages, one per edge, indexed like crc_rows
    let mut crc_msg: Vec<Vec<f64>> = crc_rows.iter().map(|r| vec![0.0; r.len()]).collect();

    let mut u_hat = vec![0u8; size];
    let mut x_hat = vec![0u8; size];
    let mut done = false;
    let mut iters = 0;
    while iters < cfg.i_max {
        iters += 1;
        for t in (0..n).rev() {
            let bit = 1 << perm.order[t];
            let (lo, hi) = (t * size, (t + 1) * size);
            for k in (0..size).filter(|k| k & bit == 0) {
                let kb = k | bit;
                let (l1, l2) = (left[hi + k], left[hi + kb]);
                left[lo + k] = cl(f(l1, l2 + right[lo + kb]));
                left[lo + kb] = cl(f(l1, right[lo + k]) + l2);
            }
        }
        if let Some(g) = &crc {
            if iters > cfg.i_thr {
                let incoming: Vec<f64> = (0..g.positions.len())
                    .map(|j| {
                        left[g.positions[j]]
                            + crc_var_rows[j]
                                .iter()
                                .map(|&r| crc_msg[r][edge(&crc_rows[r], j)])
                                .sum::<f64>()
                    })
                    .collect();
                let mut next = crc_msg.clone();
                for (r, row) in crc_rows.iter().enumerate() {
                    for e in 0..row.len() {
                        let mut sign = false;
                        let mut mag = f64::INFINITY;
                        for (e2, &j2) in row.iter().enumerate() {
                            if e2 == e {
                                continue;
                            }
                            let v = cl(incoming[j2] - crc_msg[r][e2]);
                            sign ^= v < 0.0;
                            mag = mag.min(v.abs());
                        }
                        let m = if mag.is_finite() { alpha * mag } else { 0.0 };
                        next[r][e] = if sign { -m } else { m };
                    }
                }
                crc_msg = next;
                for (j, &pos) in g.positions.iter().enumerate() {
                    let s: f64 = crc_var_rows[j]
                        .iter()
                        .map(|&r| crc_msg[r][edge(&crc_rows[r], j)])
                        .sum();
                    right[pos] = cl(prior[pos] + s);
                }
            }
        }
        for t in 0..n {
            let bit = 1 << perm.order[t];
            let (lo, hi) = (t * size, (t + 1) * size);
            for k in (0..size).filter(|k| k & bit == 0) {
                let kb = k | bit;
                let (r1, r2) = (right[lo + k], right[lo + kb]);
                right[hi + k] = cl(f(r1, r2 + left[hi + kb]));
                right[hi + kb] = cl(f(r1, left[hi + k]) + r2);
            }
        }
        for i in 0..size {
            u_hat[i] = hard(left[i] + right[i]);
            x_hat[i] = hard(left[n * size + i] + right[n * size + i]);
        }
        if cfg.early_termination && to_codeword_order(&x_hat, n) == polar_transform(&u_hat) {
            let crc_ok = match &crc {
                Some(g) => (0..g.h.n_rows()).all(|r| {
                    g.h.row_support(r)
                        .iter()
                        .fold(0u8, |a, &j| a ^ u_hat[g.positions[j]])
                        == 0
                }),
                None => true,
            };
            if crc_ok {
                done = true;
                break;
            }
        }
    }
    let soft: Vec<f64> = (0..size).map(|i| left[n * size + i] + right[n * size + i]).collect();
    (soft, u_hat, x_hat, done, iters)
}

fn edge(row: &[usize], j: usize) -> usize {
    row.binary_search(&j).expect("variable on this check")
}

fn to_codeword_order<T: Copy>(x: &[T], n: usize) -> Vec<T> {
    (0..x.len()).map(|j| x[bit_reverse(j, n)]).collect()
}

fn run(
    spec: &PolarCodeSpec,
    llr: &[f64],
    crc: Option<CrcGraph<'_>>,
    perm: &StagePermutation,
    cfg: &BpConfig,
) -> CbpOutput {
    let n = spec.log_n();
    assert_eq!(llr.len(), spec.block_len(), "LLR length must equal blocklength");
    assert_eq!(perm.order.len(), n, "stage permutation length");
    let x_llr = to_codeword_order(llr, n);
    let (soft, hard_u, x_hat, done, iters) = bp_core(spec.frozen_mask(), &x_llr, crc, perm, cfg);
    CbpOutput {
        soft_codeword_llrs: to_codeword_order(&soft, n),
        hard_u,
        hard_c: to_codeword_order(&x_hat, n),
        terminated_early: done,
        iterations_used: iters,
    }
}

/// Plain BP on the polar graph; stops when `ĉ = û G_N` or at `i_max`.
pub fn bp_decode(spec: &PolarCodeSpec, llr: &[f64], cfg: &BpConfig) -> CbpOutput {
    run(spec, llr, None, &StagePermutation::identity(spec.log_n()), cfg)
}

/// CRC-aided BP on one (possibly stage-permuted) graph. CRC checks join
/// after `i_thr` iterations; early stopping needs both the polar and the
/// CRC condition.
pub fn cbp_decode_on(
    aug: &AugmentedCodeSpec,
    llr: &[f64],
    perm: &StagePermutation,
    cfg: &BpConfig,
) -> CbpOutput {
    if aug.crc.r() == 0 {
        return run(&aug.polar, llr, None, perm, cfg);
    }
    let h = aug.crc.parity_check();
    let crc = CrcGraph {
        h: &h,
        positions: aug.polar.info_set(),
    };
    run(&aug.polar, llr, Some(crc), perm, cfg)
}

pub fn cbp_decode(aug: &AugmentedCodeSpec, llr: &[f64], cfg: &BpConfig) -> CbpOutput {
    cbp_decode_on(aug, llr, &StagePermutation::identity(aug.polar.log_n()), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbplOutput {
    pub codeword: Vec<u8>,
    pub selected: usize,
    /// Whether the selected word is a codeword of the augmented code.
    pub valid: bool,
    pub branches: Vec<CbpOutput>,
}

/// Runs `l` CBP branches on distinct stage permutations and picks the
/// valid output closest to the observation; with no valid output, the
/// closest output overall. `obs` is the channel output (or any positive
/// multiple of it, such as unclipped LLRs). Ties keep the lower branch.
pub fn cbpl_decode(aug: &AugmentedCodeSpec, llr: &[f64], obs: &[f64], l: usize, cfg: &BpConfig) -> CbplOutput {
    let n = aug.polar.log_n();
    assert!(l >= 1 && l <= max_list_size(n), "list size {l} unavailable for n = {n}");
    let branches: Vec<CbpOutput> = final_stage_permutations(n, l)
        .iter()
        .map(|p| cbp_decode_on(aug, llr, p, cfg))
        .collect();
    select_branch(aug, branches, obs)
}

/// CBPL selection over already-computed branches.
pub fn select_branch(aug: &AugmentedCodeSpec, branches: Vec<CbpOutput>, obs: &[f64]) -> CbplOutput {
    let valid: Vec<bool> = branches.iter().map(|b| aug.is_codeword(&b.hard_c)).collect();
    let any_valid = valid.iter().any(|&v| v);
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in branches.iter().enumerate() {
        if any_valid && !valid[i] {
            continue;
        }
        let d = correlation_distance(&b.hard_c, obs);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    let (selected, _) = best.expect("at least one branch");
    CbplOutput {
        codeword: branches[selected].hard_c.clone(),
        selected,
        valid: any_valid,
        branches,
    }
}

/// `−Σ (−1)^{c_j} y_j`: orders words exactly like the Euclidean distance
/// from `BPSK(c)` to `y`, and is invariant to positive scaling of `y`.
pub fn correlation_distance(c: &[u8], y: &[f64]) -> f64 {
    -c.iter().zip(y).map(|(&b, &v)| bpsk(b) * v).sum::<f64>()
}

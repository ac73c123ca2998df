//! Exact ML decoding over the binary erasure channel.
//!
//! Stage 1 peels the pruned PCM, stage 2 triangulates the remaining
//! unknowns with reference variables using permutations only, stage 3
//! expresses every diagonal unknown as an affine function `u = A r + a` of
//! the references, and stage 4 solves the small residual system for `r`.

mod engine;

pub use engine::{ColState, Layout, RowState, TriangulationState};

use crate::gf2::{DenseBitMatrix, SolveOutcome};
use crate::pcm::PrunedPcm;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BecError {
    #[error("received word has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("check {row} is violated by known values")]
    Contradiction { row: usize },
    #[error("residual system is inconsistent")]
    Inconsistent,
    #[error("diagonal block is not lower triangular at pivot {0}")]
    ShapeViolation(usize),
}

/// BEC output: `values[i]` is meaningful only where `erased[i]` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureWord {
    pub values: Vec<u8>,
    pub erased: Vec<bool>,
    pub epsilon: f64,
}

impl ErasureWord {
    pub fn erasures(&self) -> usize {
        self.erased.iter().filter(|&&e| e).count()
    }

    /// BEC-style LLRs: `±∞` on known bits, 0 on erasures.
    pub fn llr(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.erased)
            .map(|(&v, &e)| match (e, v) {
                (true, _) => 0.0,
                (false, 0) => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            })
            .collect()
    }
}

/// Erases each position independently with probability `epsilon`.
pub fn transmit_bec<R: Rng + ?Sized>(c: &[u8], epsilon: f64, rng: &mut R) -> ErasureWord {
    let erased: Vec<bool> = c.iter().map(|_| rng.random_bool(epsilon.clamp(0.0, 1.0))).collect();
    let values = c
        .iter()
        .zip(&erased)
        .map(|(&b, &e)| if e { 0 } else { b })
        .collect();
    ErasureWord {
        values,
        erased,
        epsilon,
    }
}

pub fn transmit_bec_seeded(c: &[u8], epsilon: f64, seed: u64) -> ErasureWord {
    transmit_bec(c, epsilon, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceKind {
    /// Uniform among unknown codeword columns (any unknown if none left).
    RandomUnknown { seed: u64 },
    /// Lowest active column of the open check with the fewest unknowns.
    MinUnknownCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferencePolicy {
    pub kind: ReferenceKind,
    /// References chosen per stall (`n′_r`).
    pub batch: usize,
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        ReferencePolicy {
            kind: ReferenceKind::MinUnknownCheck,
            batch: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Permutations only; `H13` lower triangular.
    #[default]
    Sequential,
    /// Clears each pivot column from open rows; `H13 = I`, `H23 = 0`.
    Parallel,
}

/// Instrumentation of one decode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BecStats {
    pub n_d: usize,
    pub n_c: usize,
    pub n_r: usize,
    pub n_u: usize,
    pub n_e: usize,
    /// Ones in `H13`.
    pub gamma: usize,
    /// Ones in `H11`.
    pub ones_h11: usize,
    pub xor_stage1: usize,
    pub xor_stage2: usize,
    pub xor_stage3: usize,
    pub xor_stage4: usize,
    /// Rows plus columns moved by the final permutation.
    pub perm_count: usize,
    /// Augmented residual system size `(n_e, n_r + 1)`.
    pub elim_dims: (usize, usize),
    /// Peeling alone recovered everything.
    pub peeled: bool,
}

impl BecStats {
    pub fn xor_count(&self) -> usize {
        self.xor_stage1 + self.xor_stage2 + self.xor_stage3 + self.xor_stage4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Decoded,
    /// Several codewords agree with the received word.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub kind: OutcomeKind,
    /// Present iff `kind == Decoded`.
    pub codeword: Option<Vec<u8>>,
    pub stats: BecStats,
}

/// `u = A r + a`, one row per diagonal unknown, bit `n_r` holding `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineExpression {
    pub rows: DenseBitMatrix,
}

impl AffineExpression {
    pub fn n_r(&self) -> usize {
        self.rows.n_cols() - 1
    }

    pub fn eval(&self, r: &[u8]) -> Vec<u8> {
        let mut ext = r.to_vec();
        ext.push(1);
        self.rows.mul_vec(&ext)
    }
}

/// Stage 1: peeling on the known CVN values. Returns column values and the
/// known mask.
pub fn peel_bp(p: &PrunedPcm, w: &ErasureWord) -> Result<(Vec<u8>, Vec<bool>, usize), BecError> {
    let size = p.block_len();
    if w.values.len() != size || w.erased.len() != size {
        return Err(BecError::LengthMismatch {
            expected: size,
            found: w.values.len(),
        });
    }
    let h = p.matrix();
    let mut values = vec![0u8; h.n_cols()];
    let mut known = vec![false; h.n_cols()];
    for (j, &col) in p.cvn_columns().iter().enumerate() {
        if !w.erased[j] {
            known[col] = true;
            values[col] = w.values[j];
        }
    }
    let mut unknown: Vec<usize> = (0..h.n_rows())
        .map(|r| h.row(r).iter().filter(|&&c| !known[c]).count())
        .collect();
    let parity = |r: usize, values: &[u8]| h.row(r).iter().fold(0u8, |acc, &c| acc ^ values[c]);
    for r in 0..h.n_rows() {
        if unknown[r] == 0 && parity(r, &values) != 0 {
            return Err(BecError::Contradiction { row: r });
        }
    }
    let mut queue: Vec<usize> = (0..h.n_rows()).filter(|&r| unknown[r] == 1).collect();
    let mut xors = 0;
    while let Some(r) = queue.pop() {
        if unknown[r] != 1 {
            continue;
        }
        let c = *h.row(r).iter().find(|&&c| !known[c]).expect("one unknown");
        values[c] = parity(r, &values);
        xors += h.row_degree(r) - 1;
        known[c] = true;
        for &q in h.col(c) {
            unknown[q] -= 1;
            match unknown[q] {
                1 => queue.push(q),
                0 if parity(q, &values) != 0 => return Err(BecError::Contradiction { row: q }),
                _ => {}
            }
        }
    }
    Ok((values, known, xors))
}

/// Reference chooser for a BEC policy.
fn chooser(
    policy: &ReferencePolicy,
    p: &PrunedPcm,
) -> Box<dyn FnMut(&TriangulationState) -> usize> {
    let n_hidden = p.n_hidden();
    let n_cols = p.n_cols();
    match policy.kind {
        ReferenceKind::MinUnknownCheck => Box::new(move |s: &TriangulationState| {
            match s.min_unknown_row(|_| true) {
                Some(r) => *s
                    .matrix()
                    .row(r)
                    .iter()
                    .find(|&&c| s.col_state(c) == ColState::Active)
                    .expect("row has active columns"),
                None => (0..n_cols)
                    .find(|&c| s.col_state(c) == ColState::Active)
                    .expect("caller checks for active columns"),
            }
        }),
        ReferenceKind::RandomUnknown { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Box::new(move |s: &TriangulationState| {
                let active = |range: std::ops::Range<usize>| -> Vec<usize> {
                    range.filter(|&c| s.col_state(c) == ColState::Active).collect()
                };
                let cvns = active(n_hidden..n_cols);
                let pool = if cvns.is_empty() { active(0..n_cols) } else { cvns };
                *pool.choose(&mut rng).expect("caller checks for active columns")
            })
        }
    }
}

/// Stage 2: triangulation after peeling.
pub fn triangulate(
    p: &PrunedPcm,
    known: &[bool],
    policy: &ReferencePolicy,
    variant: Variant,
) -> TriangulationState {
    let mut s = TriangulationState::new(
        p.matrix().clone(),
        known,
        true,
        variant == Variant::Parallel,
    );
    let mut choose = chooser(policy, p);
    s.run(policy.batch.max(1), &mut *choose);
    s
}

/// Stage 3: `u = A r + a` for the diagonal unknowns, with the XOR count
/// and `(ones(H11), γ)`.
pub fn back_substitute(
    s: &TriangulationState,
    values: &[u8],
) -> Result<(AffineExpression, usize, usize, usize), BecError> {
    let m = s.matrix();
    let n_r = s.references().len();
    let n_u = s.pivots().len();
    let mut ref_pos = vec![usize::MAX; m.n_cols()];
    for (i, &c) in s.references().iter().enumerate() {
        ref_pos[c] = i;
    }
    let mut diag_pos = vec![usize::MAX; m.n_cols()];
    for (k, &(_, c)) in s.pivots().iter().enumerate() {
        diag_pos[c] = k;
    }
    let mut rows = DenseBitMatrix::zeros(n_u, n_r + 1);
    let (mut ones_h11, mut gamma, mut xors) = (0, 0, 0);
    for (k, &(r, pc)) in s.pivots().iter().enumerate() {
        let mut constant = 0u8;
        for &c in m.row(r) {
            match s.col_state(c) {
                ColState::Known => {
                    ones_h11 += 1;
                    constant ^= values[c];
                }
                ColState::Reference => rows.toggle(k, ref_pos[c]),
                ColState::Diagonal => {
                    gamma += 1;
                    if c == pc {
                        continue;
                    }
                    let i = diag_pos[c];
                    if i >= k {
                        return Err(BecError::ShapeViolation(k));
                    }
                    rows.row_xor(k, i);
                    xors += n_r + 1;
                }
                ColState::Active => unreachable!("triangulation finished"),
            }
        }
        if constant == 1 {
            rows.toggle(k, n_r);
        }
    }
    Ok((AffineExpression { rows }, xors + ones_h11, ones_h11, gamma))
}

/// Stage 4: forms `(H22 + H23 A) r = s2 + H23 a` over the residual rows
/// and solves it. Returns the outcome, the XOR count and the system size.
pub fn solve_reference(
    s: &TriangulationState,
    e: &AffineExpression,
    values: &[u8],
) -> (SolveOutcome, usize, (usize, usize)) {
    let m = s.matrix();
    let n_r = e.n_r();
    let mut ref_pos = vec![usize::MAX; m.n_cols()];
    for (i, &c) in s.references().iter().enumerate() {
        ref_pos[c] = i;
    }
    let mut diag_pos = vec![usize::MAX; m.n_cols()];
    for (k, &(_, c)) in s.pivots().iter().enumerate() {
        diag_pos[c] = k;
    }
    let residual: Vec<usize> = s.open_rows().collect();
    let mut sys = DenseBitMatrix::zeros(residual.len(), n_r + 1);
    let mut xors = 0;
    for (i, &r) in residual.iter().enumerate() {
        let mut constant = 0u8;
        for &c in m.row(r) {
            match s.col_state(c) {
                ColState::Known => {
                    constant ^= values[c];
                    xors += 1;
                }
                ColState::Reference => sys.toggle(i, ref_pos[c]),
                ColState::Diagonal => {
                    for j in e.rows.row_support(diag_pos[c]) {
                        sys.toggle(i, j);
                    }
                    xors += n_r + 1;
                }
                ColState::Active => unreachable!("triangulation finished"),
            }
        }
        if constant == 1 {
            sys.toggle(i, n_r);
        }
    }
    let dims = (residual.len(), n_r + 1);
    let a = sys.select_columns(&(0..n_r).collect::<Vec<_>>());
    let rhs = sys.column(n_r);
    let (outcome, ops) = a.solve_counted(&rhs).expect("dimensions agree");
    (outcome, xors + ops * (n_r + 1), dims)
}

/// Full ML pipeline with the sequential triangulation.
pub fn ml_decode_bec(
    p: &PrunedPcm,
    w: &ErasureWord,
    policy: &ReferencePolicy,
) -> Result<DecodeOutcome, BecError> {
    ml_decode_bec_with(p, w, policy, Variant::Sequential)
}

pub fn ml_decode_bec_with(
    p: &PrunedPcm,
    w: &ErasureWord,
    policy: &ReferencePolicy,
    variant: Variant,
) -> Result<DecodeOutcome, BecError> {
    let (mut values, known, xor_stage1) = peel_bp(p, w)?;
    let codeword = |values: &[u8]| p.cvn_columns().iter().map(|&c| values[c]).collect::<Vec<u8>>();
    let mut stats = BecStats {
        xor_stage1,
        ..BecStats::default()
    };
    if known.iter().all(|&k| k) {
        stats.n_d = known.len();
        stats.n_c = p.n_rows();
        stats.elim_dims = (0, 1);
        stats.peeled = true;
        return Ok(DecodeOutcome {
            kind: OutcomeKind::Decoded,
            codeword: Some(codeword(&values)),
            stats,
        });
    }
    let s = triangulate(p, &known, policy, variant);
    let layout = s.layout();
    stats.n_d = layout.n_d;
    stats.n_c = layout.n_c;
    stats.n_r = layout.n_r;
    stats.n_u = layout.n_u;
    stats.n_e = layout.n_e;
    stats.perm_count = layout.moved();
    stats.xor_stage2 = s.xor_count();
    let (expr, xor3, ones_h11, gamma) = back_substitute(&s, &values)?;
    stats.xor_stage3 = xor3;
    stats.ones_h11 = ones_h11;
    stats.gamma = gamma;
    let (outcome, xor4, dims) = solve_reference(&s, &expr, &values);
    stats.xor_stage4 = xor4;
    stats.elim_dims = dims;
    match outcome {
        SolveOutcome::Unique(r) => {
            for (&c, &v) in s.references().iter().zip(&r) {
                values[c] = v;
            }
            for (&(_, c), v) in s.pivots().iter().zip(expr.eval(&r)) {
                values[c] = v;
            }
            debug_assert!(p.matrix().mul_vec(&values).iter().all(|&b| b == 0));
            Ok(DecodeOutcome {
                kind: OutcomeKind::Decoded,
                codeword: Some(codeword(&values)),
                stats,
            })
        }
        SolveOutcome::Multiple { .. } => Ok(DecodeOutcome {
            kind: OutcomeKind::Ambiguous,
            codeword: None,
            stats,
        }),
        SolveOutcome::Inconsistent => Err(BecError::Inconsistent),
    }
}

/// Dense reference decoder: solves `H_E c_E = H_K c_K` directly.
pub fn brute_force_ml_bec(h: &DenseBitMatrix, w: &ErasureWord) -> Result<DecodeOutcome, BecError> {
    if h.n_cols() != w.values.len() {
        return Err(BecError::LengthMismatch {
            expected: h.n_cols(),
            found: w.values.len(),
        });
    }
    let erased: Vec<usize> = (0..w.erased.len()).filter(|&i| w.erased[i]).collect();
    let mut known_part = w.values.clone();
    for &i in &erased {
        known_part[i] = 0;
    }
    let rhs = h.mul_vec(&known_part);
    let outcome = h.select_columns(&erased).solve(&rhs).expect("dimensions agree");
    let stats = BecStats::default();
    match outcome {
        SolveOutcome::Unique(x) => {
            for (&i, v) in erased.iter().zip(x) {
                known_part[i] = v;
            }
            Ok(DecodeOutcome {
                kind: OutcomeKind::Decoded,
                codeword: Some(known_part),
                stats,
            })
        }
        SolveOutcome::Multiple { .. } => Ok(DecodeOutcome {
            kind: OutcomeKind::Ambiguous,
            codeword: None,
            stats,
        }),
        SolveOutcome::Inconsistent => Err(BecError::Inconsistent),
    }
}

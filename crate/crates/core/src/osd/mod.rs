//! Ordered-statistics post-processing of CBP/CBPL soft outputs.
//!
//! The most reliable independent basis (MRIB) is found with the same
//! triangulation machinery as BEC decoding: the `K` most reliable codeword
//! columns are fixed, the rest is triangulated with references chosen by
//! reliability, and a small `n_r × (K + n_r)` elimination finishes the
//! systematic form `[A | I]`.

mod reprocess;

pub use reprocess::{
    enumerate_posd_pairs, reprocess_lcosd, reprocess_order1, reprocess_order2, reprocess_partial2,
    score_candidate, LcosdCandidate, OsdCandidate, PairOrder,
};

use crate::bec::{ColState, TriangulationState};
use crate::bp_awgn::{cbp_decode_on, correlation_distance, final_stage_permutations, select_branch};
use crate::bp_awgn::{max_list_size, BpConfig, CbpOutput};
use crate::gf2::{DenseBitMatrix, Gf2Error, Permutation};
use crate::pcm::{build_pruned_pcm, PruneOptions, PrunedPcm};
use crate::polar::AugmentedCodeSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OsdError {
    #[error("residual block has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("hidden column {0} would enter the information set")]
    HiddenInformationColumn(usize),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Codeword positions sorted by decreasing `|ℓ|`, ties to the lower index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliabilityOrder {
    /// `lambda1.get(k)` is the position with the `k`-th largest `|ℓ|`.
    pub lambda1: Permutation,
    /// Inverse of `lambda1`: 0 for the most reliable position.
    pub rank: Vec<usize>,
}

impl ReliabilityOrder {
    pub fn new(llr: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..llr.len()).collect();
        order.sort_by(|&a, &b| llr[b].abs().total_cmp(&llr[a].abs()).then(a.cmp(&b)));
        let mut rank = vec![0; llr.len()];
        for (k, &j) in order.iter().enumerate() {
            rank[j] = k;
        }
        ReliabilityOrder {
            lambda1: Permutation::from_vec(order).expect("sorted indices"),
            rank,
        }
    }
}

/// Reference selection during MRIB triangulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MribRule {
    /// The most reliable unknown codeword column.
    #[default]
    MostReliable,
    /// The most reliable unknown codeword column of a check with the fewest
    /// unknowns.
    MinUnknownCheck,
}

/// Fixes the `K` most reliable codeword columns and triangulates the rest.
/// Rows with no unknowns stay in the residual.
pub fn mrib_triangulate(p: &PrunedPcm, soft_llrs: &[f64], rule: MribRule) -> TriangulationState {
    let size = p.block_len();
    assert_eq!(soft_llrs.len(), size, "soft output length must equal blocklength");
    let order = ReliabilityOrder::new(soft_llrs);
    let cvn = p.cvn_columns();
    let mut known = vec![false; p.n_cols()];
    for &j in &order.lambda1.as_slice()[..p.code_dimension()] {
        known[cvn[j]] = true;
    }
    let mut rank_of_col = vec![usize::MAX; p.n_cols()];
    for (j, &c) in cvn.iter().enumerate() {
        rank_of_col[c] = order.rank[j];
    }
    let mut s = TriangulationState::new(p.matrix().clone(), &known, false, false);
    let is_active = |s: &TriangulationState, c: usize| s.col_state(c) == ColState::Active;
    let mut choose = |s: &TriangulationState| -> usize {
        let pick = match rule {
            MribRule::MostReliable => cvn
                .iter()
                .copied()
                .filter(|&c| is_active(s, c))
                .min_by_key(|&c| rank_of_col[c]),
            MribRule::MinUnknownCheck => s
                .min_unknown_row(|r| s.matrix().row(r).iter().any(|&c| rank_of_col[c] != usize::MAX && is_active(s, c)))
                .and_then(|r| {
                    s.matrix()
                        .row(r)
                        .iter()
                        .copied()
                        .filter(|&c| rank_of_col[c] != usize::MAX && is_active(s, c))
                        .min_by_key(|&c| rank_of_col[c])
                }),
        };
        pick.unwrap_or_else(|| {
            // only hidden unknowns remain
            let row = s.min_unknown_row(|_| true).expect("active columns sit in open rows");
            *s.matrix().row(row).iter().find(|&&c| is_active(s, c)).unwrap()
        })
    };
    s.run(1, &mut choose);
    s
}

/// `[A | I_{N−K}]` over permuted codeword positions. Column `j` of
/// `matrix` is codeword position `lambda.get(j)`; the first `k` columns
/// are the MRIB in decreasing reliability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystematicPcm {
    pub matrix: DenseBitMatrix,
    pub lambda: Permutation,
    pub k: usize,
}

impl SystematicPcm {
    pub fn block_len(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Reorders a codeword-order vector into the permuted domain.
    pub fn permute<T: Clone>(&self, v: &[T]) -> Vec<T> {
        self.lambda.apply(v)
    }

    pub fn unpermute(&self, v: &[u8]) -> Vec<u8> {
        self.lambda.unapply(v)
    }

    /// Whether the right block is the identity.
    pub fn is_systematic(&self) -> bool {
        let r = self.matrix.n_rows();
        (0..r).all(|i| (0..r).all(|j| self.matrix.get(i, self.k + j) == (i == j)))
    }

    /// Dense reference construction: systematizes a full-rank codeword PCM,
    /// keeping the most reliable columns in the information block.
    pub fn from_dense(h: &DenseBitMatrix, order: &ReliabilityOrder) -> Result<Self, OsdError> {
        let sys = h.systematize(order.lambda1.as_slice())?;
        Ok(SystematicPcm {
            matrix: sys.matrix,
            lambda: sys.perms.col_perm,
            k: sys.info_len,
        })
    }
}

/// Stage-4 instrumentation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage4Stats {
    pub n_r: usize,
    /// Residual block size `(n_r, K + n_r)`.
    pub elim_dims: (usize, usize),
    /// Row additions between residual rows.
    pub residual_row_ops: usize,
    /// Row additions into diagonal rows (back-substitution and clearing
    /// pivot columns), reported separately from the residual elimination.
    pub clearing_row_ops: usize,
    /// The dense construction was used instead.
    pub fallback: bool,
}

/// Turns an MRIB triangulation into `[A | I]`: the diagonal block is
/// back-substituted to the identity, the residual rows are cleared of it,
/// the `n_r × (K + n_r)` block is eliminated with pivots taken from hidden
/// references first and then from the least reliable columns, and hidden
/// columns are erased with their pivot rows.
pub fn systematize_stage4(
    p: &PrunedPcm,
    s: &TriangulationState,
    order: &ReliabilityOrder,
) -> Result<(SystematicPcm, Stage4Stats), OsdError> {
    let k = p.code_dimension();
    let n_cols = p.n_cols();
    let mut rank_of_col = vec![usize::MAX; n_cols];
    let mut pos_of_col = vec![usize::MAX; n_cols];
    for (j, &c) in p.cvn_columns().iter().enumerate() {
        rank_of_col[c] = order.rank[j];
        pos_of_col[c] = j;
    }
    let mut fixed: Vec<usize> = (0..n_cols).filter(|&c| s.col_state(c) == ColState::Known).collect();
    fixed.sort_by_key(|&c| rank_of_col[c]);
    assert_eq!(fixed.len(), k, "expected K fixed columns");
    let refs = s.references();
    let n_r = refs.len();
    let n_u = s.pivots().len();
    let residual: Vec<usize> = s.open_rows().collect();
    if residual.len() != n_r {
        return Err(OsdError::RankDeficient {
            rank: n_u,
            expected: p.n_rows() - n_r,
        });
    }
    let rows: Vec<usize> = s.pivots().iter().map(|&(r, _)| r).chain(residual.iter().copied()).collect();
    let cols: Vec<usize> = fixed
        .iter()
        .chain(refs)
        .copied()
        .chain(s.pivots().iter().map(|&(_, c)| c))
        .collect();
    let mut w = p.matrix().submatrix(&rows, &cols).to_dense();
    let off = k + n_r;
    let mut stats = Stage4Stats {
        n_r,
        elim_dims: (n_r, k + n_r),
        ..Stage4Stats::default()
    };

    for row in 0..n_u {
        for i in 0..row {
            if w.get(row, off + i) {
                w.row_xor(row, i);
                stats.clearing_row_ops += 1;
            }
        }
    }
    for e in n_u..n_u + n_r {
        for i in 0..n_u {
            if w.get(e, off + i) {
                w.row_xor(e, i);
                stats.clearing_row_ops += 1;
            }
        }
    }

    // hidden references first, then least reliable codeword columns
    let mut priority: Vec<usize> = (k..off).filter(|&j| rank_of_col[cols[j]] == usize::MAX).collect();
    let n_hidden_refs = priority.len();
    let mut cvn_part: Vec<usize> = (0..off).filter(|&j| rank_of_col[cols[j]] != usize::MAX).collect();
    cvn_part.sort_by_key(|&j| std::cmp::Reverse(rank_of_col[cols[j]]));
    priority.extend(cvn_part);

    let mut pivot_row = vec![usize::MAX; cols.len()];
    for i in 0..n_u {
        pivot_row[off + i] = i;
    }
    let mut used = vec![false; n_r];
    let mut found = 0;
    for (idx, &j) in priority.iter().enumerate() {
        if found == n_r {
            break;
        }
        let Some(e) = (0..n_r).find(|&e| !used[e] && w.get(n_u + e, j)) else {
            if idx < n_hidden_refs {
                return Err(OsdError::HiddenInformationColumn(cols[j]));
            }
            continue;
        };
        used[e] = true;
        found += 1;
        pivot_row[j] = n_u + e;
        for other in 0..n_u + n_r {
            if other != n_u + e && w.get(other, j) {
                w.row_xor(other, n_u + e);
                if other < n_u {
                    stats.clearing_row_ops += 1;
                } else {
                    stats.residual_row_ops += 1;
                }
            }
        }
    }
    if found < n_r {
        return Err(OsdError::RankDeficient {
            rank: found,
            expected: n_r,
        });
    }

    let mut info: Vec<usize> = (0..off).filter(|&j| pivot_row[j] == usize::MAX).collect();
    if let Some(&j) = info.iter().find(|&&j| rank_of_col[cols[j]] == usize::MAX) {
        return Err(OsdError::HiddenInformationColumn(cols[j]));
    }
    info.sort_by_key(|&j| rank_of_col[cols[j]]);
    let mut parity: Vec<usize> = (0..cols.len())
        .filter(|&j| pivot_row[j] != usize::MAX && rank_of_col[cols[j]] != usize::MAX)
        .collect();
    parity.sort_by_key(|&j| rank_of_col[cols[j]]);
    let col_order: Vec<usize> = info.iter().chain(&parity).copied().collect();
    let row_order: Vec<usize> = parity.iter().map(|&j| pivot_row[j]).collect();
    let matrix = w.select_rows(&row_order).select_columns(&col_order);
    let lambda = Permutation::from_vec(col_order.iter().map(|&j| pos_of_col[cols[j]]).collect())
        .expect("codeword columns partitioned");
    Ok((SystematicPcm { matrix, lambda, k }, stats))
}

/// Pruned PCM with CRC rows, plus the dense codeword PCM used when the
/// sparse stage 4 cannot keep hidden columns out of the basis.
#[derive(Debug, Clone)]
pub struct OsdCode {
    pub spec: AugmentedCodeSpec,
    pub pcm: PrunedPcm,
    pub dense: DenseBitMatrix,
}

impl OsdCode {
    pub fn new(spec: AugmentedCodeSpec, options: &PruneOptions) -> Self {
        let pcm = build_pruned_pcm(&spec, options);
        Self::with_pcm(spec, pcm)
    }

    pub fn with_pcm(spec: AugmentedCodeSpec, pcm: PrunedPcm) -> Self {
        let dense = spec.parity_check();
        OsdCode { spec, pcm, dense }
    }

    /// Stages 2 to 4 on one soft output.
    pub fn systematic(&self, soft: &[f64], rule: MribRule) -> (SystematicPcm, Stage4Stats) {
        let order = ReliabilityOrder::new(soft);
        let s = mrib_triangulate(&self.pcm, soft, rule);
        match systematize_stage4(&self.pcm, &s, &order) {
            Ok(out) => out,
            Err(_) => {
                let sp = SystematicPcm::from_dense(&self.dense, &order).expect("full-rank PCM");
                let stats = Stage4Stats {
                    n_r: s.references().len(),
                    fallback: true,
                    ..Stage4Stats::default()
                };
                (sp, stats)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OsdMode {
    Osd1,
    Osd2,
    /// Partial order 2 over a fraction `f` of the pairs.
    Posd2(f64),
    Lcosd1,
}

impl OsdMode {
    pub fn name(&self) -> String {
        match self {
            OsdMode::Osd1 => "osd1".into(),
            OsdMode::Osd2 => "osd2".into(),
            OsdMode::Posd2(f) => format!("posd2({f})"),
            OsdMode::Lcosd1 => "lcosd1".into(),
        }
    }
}

/// POSD pair budget `⌈f · K(K−1)/2⌉`.
pub fn posd_budget(k: usize, f: f64) -> usize {
    let pairs = k * k.saturating_sub(1) / 2;
    ((f * pairs as f64).ceil() as usize).min(pairs)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OsdStats {
    pub osd_invocations: usize,
    /// Per-branch `n_r` and stage-4 block sizes.
    pub branch_n_r: Vec<usize>,
    pub elim_dims: Vec<(usize, usize)>,
    pub residual_row_ops: usize,
    pub clearing_row_ops: usize,
    pub fallbacks: usize,
    /// LCOSD branches where no pattern met the residual checks.
    pub lcosd_empty: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsdDecodeOutput {
    pub codeword: Vec<u8>,
    pub selected_branch: usize,
    /// Some CBP branch terminated early and OSD was skipped.
    pub early_exit: bool,
    pub stats: OsdStats,
}

/// OSD on one soft output: `soft` orders and hard-decides, candidates are
/// ranked by distance to the channel output `obs`. Returns the candidate
/// in codeword order.
pub fn osd_decode_soft(
    code: &OsdCode,
    soft: &[f64],
    obs: &[f64],
    mode: OsdMode,
    stats: &mut OsdStats,
) -> Option<Vec<u8>> {
    stats.osd_invocations += 1;
    let rule = MribRule::default();
    if mode == OsdMode::Lcosd1 {
        let s = mrib_triangulate(&code.pcm, soft, rule);
        stats.branch_n_r.push(s.references().len());
        stats.elim_dims.push((0, 0));
        let cand = reprocess_lcosd(&code.pcm, &s, soft, obs);
        if cand.is_none() {
            stats.lcosd_empty += 1;
        }
        return cand.map(|c| c.codeword);
    }
    let (sp, st) = code.systematic(soft, rule);
    stats.branch_n_r.push(st.n_r);
    stats.elim_dims.push(st.elim_dims);
    stats.residual_row_ops += st.residual_row_ops;
    stats.clearing_row_ops += st.clearing_row_ops;
    stats.fallbacks += usize::from(st.fallback);
    let (l, y) = (sp.permute(soft), sp.permute(obs));
    let cand = match mode {
        OsdMode::Osd1 => reprocess_order1(&sp, &l, &y),
        OsdMode::Osd2 => reprocess_order2(&sp, &l, &y),
        OsdMode::Posd2(f) => reprocess_partial2(&sp, &l, &y, posd_budget(sp.k, f), PairOrder::BottomM),
        OsdMode::Lcosd1 => unreachable!(),
    };
    Some(sp.unpermute(&cand.codeword))
}

/// OSD stage on already-decoded CBP branches. An early-terminated branch
/// short-circuits to the CBPL selection; otherwise every branch is
/// post-processed on its own soft output and the candidate closest to
/// `obs` wins (lower branch on ties). LCOSD branches with no passing
/// pattern contribute their CBP hard decision.
pub fn osd_from_branches(code: &OsdCode, branches: &[CbpOutput], obs: &[f64], mode: OsdMode) -> OsdDecodeOutput {
    let mut stats = OsdStats::default();
    if branches.iter().any(|b| b.terminated_early) {
        let sel = select_branch(&code.spec, branches.to_vec(), obs);
        return OsdDecodeOutput {
            codeword: sel.codeword,
            selected_branch: sel.selected,
            early_exit: true,
            stats,
        };
    }
    let mut best: Option<(usize, f64, Vec<u8>)> = None;
    for (i, b) in branches.iter().enumerate() {
        let cand = osd_decode_soft(code, &b.soft_codeword_llrs, obs, mode, &mut stats).unwrap_or_else(|| b.hard_c.clone());
        let d = correlation_distance(&cand, obs);
        if best.as_ref().is_none_or(|(_, bd, _)| d < *bd) {
            best = Some((i, d, cand));
        }
    }
    let (selected_branch, _, codeword) = best.expect("at least one branch");
    OsdDecodeOutput {
        codeword,
        selected_branch,
        early_exit: false,
        stats,
    }
}

/// CBPL followed by OSD post-processing of each branch.
pub fn cbpl_osd_decode(
    code: &OsdCode,
    llr: &[f64],
    obs: &[f64],
    l: usize,
    cfg: &BpConfig,
    mode: OsdMode,
) -> OsdDecodeOutput {
    let n = code.spec.polar.log_n();
    assert!(l >= 1 && l <= max_list_size(n), "list size {l} unavailable for n = {n}");
    let branches: Vec<CbpOutput> = final_stage_permutations(n, l)
        .iter()
        .map(|p| cbp_decode_on(&code.spec, llr, p, cfg))
        .collect();
    osd_from_branches(code, &branches, obs, mode)
}

#[cfg(test)]
mod tests;

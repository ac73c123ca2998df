use super::*;
use crate::bp_awgn::{bpsk, channel_llr, ebn0_to_sigma, transmit_awgn};
use crate::polar::{CrcSpec, PolarCodeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn code(n: usize, m: usize, crc: bool) -> OsdCode {
    let spec = if crc {
        let polar = PolarCodeSpec::construct(n, m + 6, 0.5).unwrap();
        AugmentedCodeSpec::new(polar, CrcSpec::new(0x43, m).unwrap()).unwrap()
    } else {
        AugmentedCodeSpec::plain(PolarCodeSpec::construct(n, m, 0.5).unwrap())
    };
    OsdCode::new(spec, &PruneOptions::default())
}

/// Soft values of a random codeword seen through Gaussian noise.
fn soft_word(code: &OsdCode, sigma: f64, rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<f64>) {
    let m = code.spec.dimension();
    let msg: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
    let (_, c) = code.spec.encode(&msg).unwrap();
    let noise = Normal::new(0.0, sigma).unwrap();
    let y = c.iter().map(|&b| bpsk(b) + noise.sample(rng)).collect();
    (c, y)
}

fn correlation(c: &[u8], y: &[f64]) -> f64 {
    c.iter().zip(y).map(|(&b, &v)| bpsk(b) * v).sum()
}

/// Greedy most-reliable independent positions over the generator columns.
fn greedy_mrib(g: &DenseBitMatrix, order: &ReliabilityOrder) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut out = Vec::new();
    for &j in order.lambda1.as_slice() {
        let mut v = g.column(j);
        for (p, b) in &basis {
            if v[*p] == 1 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
        if let Some(p) = v.iter().position(|&x| x == 1) {
            basis.push((p, v));
            out.push(j);
        }
        if out.len() == g.n_rows() {
            break;
        }
    }
    out
}

#[test]
fn reliability_ties_prefer_lower_index() {
    let o = ReliabilityOrder::new(&[1.0, -3.0, 3.0, -1.0, 0.0]);
    assert_eq!(o.lambda1.as_slice(), &[1, 2, 0, 3, 4]);
    assert_eq!(o.rank, vec![2, 0, 1, 3, 4]);
}

#[test]
fn stage4_matches_dense_and_greedy_basis() {
    for (n, m, crc) in [(6, 32, false), (6, 26, true), (5, 10, true)] {
        let code = code(n, m, crc);
        let g = code.spec.generator();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 + 10 * m as u64);
        let mut fallbacks = 0;
        for _ in 0..200 {
            let (_, y) = soft_word(&code, 0.8, &mut rng);
            let order = ReliabilityOrder::new(&y);
            let s = mrib_triangulate(&code.pcm, &y, MribRule::MostReliable);
            let dense = SystematicPcm::from_dense(&code.dense, &order).unwrap();
            let mut mrib = greedy_mrib(&g, &order);
            mrib.sort_by_key(|&j| order.rank[j]);
            assert_eq!(&dense.lambda.as_slice()[..dense.k], mrib.as_slice());
            match systematize_stage4(&code.pcm, &s, &order) {
                Ok((sp, st)) => {
                    assert!(sp.is_systematic());
                    assert_eq!(sp, dense);
                    assert_eq!(st.elim_dims, (s.references().len(), m + s.references().len()));
                }
                Err(OsdError::HiddenInformationColumn(_)) => fallbacks += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(fallbacks < 20, "{fallbacks} fallbacks");
    }
}

#[test]
fn min_unknown_rule_gives_a_valid_basis() {
    let code = code(6, 26, true);
    let g = code.spec.generator();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (_, y) = soft_word(&code, 0.8, &mut rng);
        let (sp, _) = code.systematic(&y, MribRule::MinUnknownCheck);
        assert!(sp.is_systematic());
        for r in 0..g.n_rows() {
            let row = sp.permute(&g.row(r));
            assert!(sp.matrix.mul_vec(&row).iter().all(|&b| b == 0));
        }
    }
}

#[test]
fn null_space_is_permuted_codebook() {
    let code = code(4, 8, false);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (_, y) = soft_word(&code, 1.0, &mut rng);
        let (sp, _) = code.systematic(&y, MribRule::MostReliable);
        assert_eq!(sp.matrix.rank(), 8);
        for x in 0..256u32 {
            let msg: Vec<u8> = (0..8).map(|j| ((x >> j) & 1) as u8).collect();
            let (_, c) = code.spec.encode(&msg).unwrap();
            assert!(sp.matrix.mul_vec(&sp.permute(&c)).iter().all(|&b| b == 0));
        }
    }
}

#[test]
fn no_references_means_bookkeeping_only() {
    let code = code(5, 10, true);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen = 0;
    for _ in 0..500 {
        let (_, y) = soft_word(&code, 0.6, &mut rng);
        let s = mrib_triangulate(&code.pcm, &y, MribRule::MostReliable);
        if !s.references().is_empty() {
            continue;
        }
        let order = ReliabilityOrder::new(&y);
        let (sp, st) = systematize_stage4(&code.pcm, &s, &order).unwrap();
        assert_eq!(st.residual_row_ops, 0);
        assert_eq!(st.elim_dims, (0, 10));
        assert!(sp.is_systematic());
        // with no residual checks every weight-1 pattern passes
        let lc = reprocess_lcosd(&code.pcm, &s, &y, &y).unwrap();
        let o1 = reprocess_order1(&sp, &sp.permute(&y), &sp.permute(&y));
        assert_eq!(lc.codeword, sp.unpermute(&o1.codeword));
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn scores_match_correlation() {
    let code = code(5, 16, false);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let extra = Normal::new(0.0, 0.5).unwrap();
    for _ in 0..50 {
        let (_, soft) = soft_word(&code, 0.9, &mut rng);
        // an observation that differs from the soft output
        let obs: Vec<f64> = soft.iter().map(|v| v + extra.sample(&mut rng)).collect();
        let (sp, _) = code.systematic(&soft, MribRule::MostReliable);
        let (lp, yp) = (sp.permute(&soft), sp.permute(&obs));
        let hard: Vec<u8> = lp[..sp.k].iter().map(|&v| u8::from(v < 0.0)).collect();
        let base_info: f64 = (0..sp.k).map(|i| bpsk(hard[i]) * yp[i]).sum();
        let rebuild = |pat: &[usize]| {
            let mut c = hard.clone();
            for &b in pat {
                c[b] ^= 1;
            }
            let parity = sp.matrix.select_columns(&(0..sp.k).collect::<Vec<_>>()).mul_vec(&c);
            c.extend(parity);
            c
        };
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for pat in std::iter::once(vec![]).chain((0..sp.k).map(|i| vec![i])) {
            let c = rebuild(&pat);
            let sc = score_candidate(&sp, &lp, &yp, &pat);
            assert!((sc + base_info - correlation(&c, &yp)).abs() < 1e-9 * 100.0);
            if correlation(&c, &yp) > best.0 {
                best = (correlation(&c, &yp), c);
            }
        }
        assert_eq!(reprocess_order1(&sp, &lp, &yp).codeword, best.1);
        for (i, j) in [(0, 1), (2, 7), (sp.k - 2, sp.k - 1)] {
            let c = rebuild(&[i, j]);
            let sc = score_candidate(&sp, &lp, &yp, &[i, j]);
            assert!((sc + base_info - correlation(&c, &yp)).abs() < 1e-9 * 100.0);
        }
    }
}

#[test]
fn order_relations() {
    let code = code(6, 26, true);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (_, y) = soft_word(&code, 0.9, &mut rng);
        let (sp, _) = code.systematic(&y, MribRule::MostReliable);
        let yp = sp.permute(&y);
        let o1 = reprocess_order1(&sp, &yp, &yp);
        let o2 = reprocess_order2(&sp, &yp, &yp);
        assert!(o2.score >= o1.score);
        let pairs = sp.k * (sp.k - 1) / 2;
        for order in [PairOrder::BottomM, PairOrder::PaperLoop] {
            assert_eq!(reprocess_partial2(&sp, &yp, &yp, pairs, order), o2);
            assert_eq!(reprocess_partial2(&sp, &yp, &yp, 0, order), o1);
        }
        let q = reprocess_partial2(&sp, &yp, &yp, posd_budget(sp.k, 0.25), PairOrder::BottomM);
        assert!(q.score >= o1.score && q.score <= o2.score);
        for cand in [&o1, &o2, &q] {
            assert!(sp.matrix.mul_vec(&cand.codeword).iter().all(|&b| b == 0));
            assert!(code.spec.is_codeword(&sp.unpermute(&cand.codeword)));
        }
    }
}

#[test]
fn bottom_pairs_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let mut rel: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..5.0)).collect();
        rel.sort_by(|a, b| b.total_cmp(a));
        let mut all: Vec<(usize, usize)> = (0..12).flat_map(|i| (i + 1..12).map(move |j| (i, j))).collect();
        all.sort_by(|a, b| (rel[a.0] + rel[a.1]).total_cmp(&(rel[b.0] + rel[b.1])));
        for m in [0, 1, 7, 17, 40, 66] {
            let mut got = enumerate_posd_pairs(&rel, m, PairOrder::BottomM);
            let mut want = all[..m].to_vec();
            got.sort_unstable();
            want.sort_unstable();
            assert_eq!(got, want, "m = {m}");
        }
    }
    assert_eq!(enumerate_posd_pairs(&[2.0, 1.0], 1, PairOrder::BottomM), vec![(0, 1)]);
    assert_eq!(
        enumerate_posd_pairs(&[4.0, 3.0, 2.0, 1.0], 4, PairOrder::PaperLoop),
        vec![(2, 3), (1, 3), (1, 2), (0, 3)]
    );
    assert_eq!(posd_budget(8, 0.25), 7);
    assert_eq!(posd_budget(8, 1.0), 28);
    assert_eq!(posd_budget(8, 0.0), 0);
}

/// Every LCOSD candidate satisfies the whole pruned PCM and the pass/fail
/// set agrees with a dense solve given the fixed and reference values.
#[test]
fn lcosd_matches_dense_filtering() {
    let code = code(5, 16, false);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = code.pcm.matrix().to_dense();
    for _ in 0..100 {
        let (_, y) = soft_word(&code, 0.9, &mut rng);
        let s = mrib_triangulate(&code.pcm, &y, MribRule::MostReliable);
        let order = ReliabilityOrder::new(&y);
        let cvn = code.pcm.cvn_columns();
        let mut fixed: Vec<usize> = (0..h.n_cols()).filter(|&c| s.col_state(c) == ColState::Known).collect();
        fixed.sort_by_key(|&c| order.rank[c - code.pcm.n_hidden()]);
        let vars: Vec<usize> = fixed.iter().chain(s.references()).copied().collect();
        let rest: Vec<usize> = (0..h.n_cols()).filter(|c| !vars.contains(c)).collect();
        let base: Vec<u8> = vars
            .iter()
            .map(|&c| if c >= code.pcm.n_hidden() { u8::from(y[c - code.pcm.n_hidden()] < 0.0) } else { 0 })
            .collect();
        let mut best: Option<(f64, Vec<u8>)> = None;
        for flip in std::iter::once(None).chain((0..vars.len()).map(Some)) {
            let mut x = base.clone();
            if let Some(v) = flip {
                x[v] ^= 1;
            }
            let mut full = vec![0u8; h.n_cols()];
            for (&c, &v) in vars.iter().zip(&x) {
                full[c] = v;
            }
            let rhs = h.mul_vec(&full);
            match h.select_columns(&rest).solve(&rhs).unwrap() {
                crate::gf2::SolveOutcome::Unique(z) => {
                    for (&c, &v) in rest.iter().zip(&z) {
                        full[c] = v;
                    }
                    let cw: Vec<u8> = cvn.iter().map(|&c| full[c]).collect();
                    let corr = correlation(&cw, &y);
                    if best.as_ref().is_none_or(|(b, _)| corr > *b) {
                        best = Some((corr, cw));
                    }
                }
                crate::gf2::SolveOutcome::Inconsistent => {}
                other => panic!("diagonal block should fix the rest: {other:?}"),
            }
        }
        let got = reprocess_lcosd(&code.pcm, &s, &y, &y);
        assert_eq!(got.map(|c| c.codeword), best.map(|b| b.1));
    }
}

#[test]
fn early_termination_skips_osd() {
    let code = code(6, 26, true);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (c, _) = soft_word(&code, 0.1, &mut rng);
    let y: Vec<f64> = c.iter().map(|&b| bpsk(b)).collect();
    let llr = channel_llr(&y, 0.5, 20.0);
    let out = cbpl_osd_decode(&code, &llr, &y, 6, &BpConfig::default(), OsdMode::Osd1);
    assert!(out.early_exit);
    assert_eq!(out.stats.osd_invocations, 0);
    assert_eq!(out.codeword, c);
}

#[test]
fn osd_outputs_are_codewords() {
    let code = code(7, 58, true);
    let sigma = ebn0_to_sigma(1.5, code.spec.rate());
    let cfg = BpConfig {
        i_max: 30,
        ..BpConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut invoked = 0;
    for _ in 0..30 {
        let msg: Vec<u8> = (0..58).map(|_| rng.random_range(0..2)).collect();
        let (_, c) = code.spec.encode(&msg).unwrap();
        let y = transmit_awgn(&c, sigma, &mut rng);
        let llr = channel_llr(&y, sigma, 20.0);
        for mode in [OsdMode::Osd1, OsdMode::Osd2, OsdMode::Posd2(0.25), OsdMode::Lcosd1] {
            let out = cbpl_osd_decode(&code, &llr, &y, 2, &cfg, mode);
            if !out.early_exit {
                invoked += 1;
                assert_eq!(out.stats.osd_invocations, 2);
                assert_eq!(out.stats.branch_n_r.len(), 2);
                if mode != OsdMode::Lcosd1 || out.stats.lcosd_empty == 0 {
                    assert!(code.spec.is_codeword(&out.codeword));
                }
            }
        }
    }
    assert!(invoked > 0);
}

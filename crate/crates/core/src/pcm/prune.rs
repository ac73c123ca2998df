use super::{FactorGraphPcm, NodeKind, PrunedPcm};
use crate::gf2::SparseBinaryMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneOptions {
    /// Skip degree-2 HVN eliminations whose merged check would exceed this
    /// degree.
    pub degree_cap: Option<usize>,
    /// Apply pairwise weight reduction to appended CRC rows.
    pub reduce_crc_density: bool,
}

impl Default for PruneOptions {
    fn default() -> Self {
        PruneOptions {
            degree_cap: None,
            reduce_crc_density: true,
        }
    }
}

/// How often each rule fired, plus the number of sweeps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStats {
    pub sweeps: usize,
    pub fired: [usize; 6],
}

struct Pruner {
    m: SparseBinaryMatrix,
    kinds: Vec<NodeKind>,
    col_alive: Vec<bool>,
    row_alive: Vec<bool>,
    origin: Vec<Vec<usize>>,
    cap: Option<usize>,
}

impl Pruner {
    fn remove_row(&mut self, r: usize) {
        self.m.clear_row(r);
        self.row_alive[r] = false;
    }

    fn remove_col(&mut self, c: usize) {
        self.m.clear_col(c);
        self.col_alive[c] = false;
    }

    fn is(&self, c: usize, kind: NodeKind) -> bool {
        self.col_alive[c] && self.kinds[c] == kind
    }

    /// Identifies `drop` with `keep`.
    fn merge(&mut self, keep: usize, drop: usize) {
        self.m.col_xor(keep, drop);
        self.remove_col(drop);
        let moved = std::mem::take(&mut self.origin[drop]);
        self.origin[keep].extend(moved);
        self.origin[keep].sort_unstable();
    }

    fn frozen_removal(&mut self) -> usize {
        let mut count = 0;
        for c in 0..self.kinds.len() {
            if self.is(c, NodeKind::Frozen) {
                self.remove_col(c);
                count += 1;
            }
        }
        count
    }

    fn degree_one_check(&mut self) -> usize {
        let mut count = 0;
        for r in 0..self.row_alive.len() {
            if !self.row_alive[r] || self.m.row_degree(r) != 1 {
                continue;
            }
            let v = self.m.row(r)[0];
            if self.kinds[v] == NodeKind::Codeword {
                continue;
            }
            self.remove_row(r);
            self.remove_col(v);
            count += 1;
        }
        count
    }

    fn cvn_hvn_check(&mut self) -> usize {
        let mut count = 0;
        for r in 0..self.row_alive.len() {
            if !self.row_alive[r] || self.m.row_degree(r) != 2 {
                continue;
            }
            let (a, b) = (self.m.row(r)[0], self.m.row(r)[1]);
            let (cvn, hvn) = match (self.kinds[a], self.kinds[b]) {
                (NodeKind::Codeword, NodeKind::Hidden) => (a, b),
                (NodeKind::Hidden, NodeKind::Codeword) => (b, a),
                _ => continue,
            };
            self.remove_row(r);
            self.merge(cvn, hvn);
            count += 1;
        }
        count
    }

    fn hvn_degree_one(&mut self) -> usize {
        let mut count = 0;
        for c in 0..self.kinds.len() {
            if self.is(c, NodeKind::Hidden) && self.m.col_degree(c) == 1 {
                let r = self.m.col(c)[0];
                self.remove_row(r);
                self.remove_col(c);
                count += 1;
            }
        }
        count
    }

    fn hvn_degree_two(&mut self) -> usize {
        let mut count = 0;
        for c in 0..self.kinds.len() {
            if !self.is(c, NodeKind::Hidden) || self.m.col_degree(c) != 2 {
                continue;
            }
            let (r1, r2) = (self.m.col(c)[0], self.m.col(c)[1]);
            if let Some(cap) = self.cap {
                let merged = self.m.row_degree(r1) + self.m.row_degree(r2)
                    - 2 * common(self.m.row(r1), self.m.row(r2));
                if merged > cap {
                    continue;
                }
            }
            self.m.sparse_row_xor(r1, r2).expect("live rows");
            self.remove_row(r2);
            self.remove_col(c);
            count += 1;
        }
        count
    }

    fn hvn_pair_check(&mut self) -> usize {
        let mut count = 0;
        for r in 0..self.row_alive.len() {
            if !self.row_alive[r] || self.m.row_degree(r) != 2 {
                continue;
            }
            let (a, b) = (self.m.row(r)[0], self.m.row(r)[1]);
            if self.kinds[a] != NodeKind::Hidden || self.kinds[b] != NodeKind::Hidden {
                continue;
            }
            self.remove_row(r);
            self.merge(a.min(b), a.max(b));
            count += 1;
        }
        count
    }
}

fn common(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub fn prune(fg: &FactorGraphPcm) -> (PrunedPcm, PruneStats) {
    prune_with(fg, &PruneOptions::default())
}

/// Applies the six reduction rules in order, sweeping until none fires:
/// frozen-node removal, degree-1 checks, CVN/HVN degree-2 checks, degree-1
/// HVNs, degree-2 HVNs and HVN/HVN degree-2 checks.
pub fn prune_with(fg: &FactorGraphPcm, options: &PruneOptions) -> (PrunedPcm, PruneStats) {
    let n_cols = fg.matrix.n_cols();
    let mut p = Pruner {
        m: fg.matrix.clone(),
        kinds: fg.kinds.clone(),
        col_alive: vec![true; n_cols],
        row_alive: vec![true; fg.matrix.n_rows()],
        origin: (0..n_cols).map(|c| vec![c]).collect(),
        cap: options.degree_cap,
    };
    let mut stats = PruneStats::default();
    loop {
        stats.sweeps += 1;
        let fired = [
            p.frozen_removal(),
            p.degree_one_check(),
            p.cvn_hvn_check(),
            p.hvn_degree_one(),
            p.hvn_degree_two(),
            p.hvn_pair_check(),
        ];
        for (total, f) in stats.fired.iter_mut().zip(fired) {
            *total += f;
        }
        if fired.iter().all(|&f| f == 0) {
            break;
        }
    }

    let hidden: Vec<usize> = (0..n_cols).filter(|&c| p.is(c, NodeKind::Hidden)).collect();
    let cvns = fg.cvn_columns();
    debug_assert!(cvns.iter().all(|&c| p.is(c, NodeKind::Codeword)));
    let cols: Vec<usize> = hidden.iter().chain(&cvns).copied().collect();
    let rows: Vec<usize> = (0..p.row_alive.len()).filter(|&r| p.row_alive[r]).collect();
    let matrix = p.m.submatrix(&rows, &cols);
    let origin_map = cols.iter().map(|&c| std::mem::take(&mut p.origin[c])).collect();
    let pruned = PrunedPcm {
        matrix,
        log_n: fg.log_n,
        k: fg.k,
        r_crc: 0,
        cvn_columns: (hidden.len()..cols.len()).collect(),
        origin_map,
    };
    (pruned, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::{build_standard_fg_pcm, fg_node_values};
    use crate::polar::PolarCodeSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_valid(spec: &PolarCodeSpec, p: &PrunedPcm, trials: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = p.matrix();
        for _ in 0..trials {
            let info: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2)).collect();
            let v = fg_node_values(&spec.embed(&info).unwrap());
            for cell in p.origin_map() {
                assert!(cell.iter().all(|&o| v[o] == v[cell[0]]), "merged nodes differ");
            }
            assert!(h.mul_vec(&p.project(&v)).iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn pruned_pcm_is_valid_and_full_rank() {
        for (n, k) in [(2, 2), (3, 4), (4, 8), (5, 16), (6, 32), (6, 20), (7, 64), (8, 134)] {
            let spec = PolarCodeSpec::construct(n, k, 0.5).unwrap();
            let (p, stats) = prune(&build_standard_fg_pcm(&spec));
            assert_eq!(p.n_rows(), p.n_cols() - k, "rows = cols - K for ({n},{k})");
            assert_eq!(p.matrix().to_dense().rank(), p.n_rows());
            assert_eq!(p.cvn_columns().len(), 1 << n);
            assert_eq!(stats.fired[0], (1 << n) - k);
            check_valid(&spec, &p, 200, n as u64);
            // origin cells are disjoint
            let mut seen = std::collections::HashSet::new();
            assert!(p.origin_map().iter().flatten().all(|o| seen.insert(*o)));
        }
    }

    #[test]
    fn rate_one_code() {
        let spec = PolarCodeSpec::construct(4, 16, 0.5).unwrap();
        let (p, _) = prune(&build_standard_fg_pcm(&spec));
        assert_eq!(p.n_rows(), p.n_cols() - 16);
        assert_eq!(p.matrix().to_dense().rank(), p.n_rows());
        let null_dim = p.n_cols() - p.matrix().to_dense().rank();
        assert_eq!(null_dim, 16);
        check_valid(&spec, &p, 100, 1);
    }

    #[test]
    fn degree_cap_keeps_validity() {
        let spec = PolarCodeSpec::construct(6, 32, 0.5).unwrap();
        let fg = build_standard_fg_pcm(&spec);
        let opts = PruneOptions {
            degree_cap: Some(4),
            ..PruneOptions::default()
        };
        let (capped, _) = prune_with(&fg, &opts);
        let (free, _) = prune(&fg);
        assert!(capped.n_cols() >= free.n_cols());
        assert_eq!(capped.n_rows(), capped.n_cols() - 32);
        assert_eq!(capped.matrix().to_dense().rank(), capped.n_rows());
        check_valid(&spec, &capped, 100, 2);
    }

    #[test]
    fn deterministic() {
        let spec = PolarCodeSpec::construct(7, 64, 0.5).unwrap();
        let fg = build_standard_fg_pcm(&spec);
        assert_eq!(prune(&fg).0, prune(&fg).0);
    }
}

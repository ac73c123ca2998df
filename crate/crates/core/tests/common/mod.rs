//! Brute-force OSD references built only from the generator matrix, local
//! GF(2) elimination and explicit Euclidean distances.

use polarosd::bp_awgn::bpsk;
use polarosd::polar::AugmentedCodeSpec;

/// Rows `encode(e_i)` for every unit message.
pub fn generator_rows(spec: &AugmentedCodeSpec) -> Vec<Vec<u8>> {
    let m = spec.dimension();
    (0..m)
        .map(|i| {
            let mut e = vec![0u8; m];
            e[i] = 1;
            spec.encode(&e).unwrap().1
        })
        .collect()
}

/// Positions by decreasing `|soft|`, lower index first on ties.
pub fn by_reliability(soft: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..soft.len()).collect();
    idx.sort_by(|&a, &b| soft[b].abs().total_cmp(&soft[a].abs()).then(a.cmp(&b)));
    idx
}

pub fn hard(v: f64) -> u8 {
    u8::from(v < 0.0)
}

pub fn euclidean(c: &[u8], y: &[f64]) -> f64 {
    c.iter().zip(y).map(|(&b, &v)| (bpsk(b) - v).powi(2)).sum()
}

/// Solves `A x = b` by Gauss-Jordan elimination. `None` if inconsistent;
/// `Some(None)` if the solution is not unique.
pub fn solve(a: &[Vec<u8>], b: &[u8]) -> Option<Option<Vec<u8>>> {
    let cols = a.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<u8>> = a.iter().zip(b).map(|(r, &v)| [r.as_slice(), &[v]].concat()).collect();
    let mut pivots = Vec::new();
    let mut next = 0;
    for c in 0..cols {
        let Some(p) = (next..rows.len()).find(|&r| rows[r][c] == 1) else {
            continue;
        };
        rows.swap(next, p);
        for r in 0..rows.len() {
            if r != next && rows[r][c] == 1 {
                let src = rows[next].clone();
                for (x, s) in rows[r].iter_mut().zip(&src) {
                    *x ^= s;
                }
            }
        }
        pivots.push(c);
        next += 1;
    }
    if rows[next..].iter().any(|r| r[cols] == 1) {
        return None;
    }
    if pivots.len() < cols {
        return Some(None);
    }
    let mut x = vec![0u8; cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = rows[r][cols];
    }
    Some(Some(x))
}

/// Greedy most reliable independent positions of the generator columns.
pub fn greedy_mrib(g: &[Vec<u8>], soft: &[f64]) -> Vec<usize> {
    let m = g.len();
    let mut basis: Vec<usize> = Vec::new();
    for j in by_reliability(soft) {
        let cols: Vec<Vec<u8>> = (0..m).map(|i| basis.iter().chain([&j]).map(|&c| g[i][c]).collect()).collect();
        // independent iff the widened column set still has full column rank
        if matches!(solve(&cols, &vec![0u8; m]), Some(Some(_))) {
            basis.push(j);
        }
        if basis.len() == m {
            break;
        }
    }
    basis
}

/// The codeword whose bits on `basis` equal `values`.
pub fn reencode(g: &[Vec<u8>], basis: &[usize], values: &[u8]) -> Vec<u8> {
    let m = g.len();
    // uᵀ G[:, basis] = values  ⇔  G[:, basis]ᵀ u = values
    let at: Vec<Vec<u8>> = basis.iter().map(|&c| (0..m).map(|i| g[i][c]).collect()).collect();
    let u = solve(&at, values).expect("basis columns are independent").expect("unique");
    let n = g[0].len();
    (0..n).map(|j| (0..m).fold(0u8, |acc, i| acc ^ (u[i] & g[i][j]))).collect()
}

/// Best codeword over flip patterns of the MRIB hard-decided from `soft`,
/// by explicit Euclidean distance to `y`. Patterns are index sets into the
/// basis.
pub fn osd_oracle(g: &[Vec<u8>], soft: &[f64], y: &[f64], patterns: &[Vec<usize>]) -> (Vec<u8>, f64) {
    let basis = greedy_mrib(g, soft);
    let base: Vec<u8> = basis.iter().map(|&j| hard(soft[j])).collect();
    let mut best: Option<(Vec<u8>, f64)> = None;
    for p in patterns {
        let mut v = base.clone();
        for &i in p {
            v[i] ^= 1;
        }
        let c = reencode(g, &basis, &v);
        let d = euclidean(&c, y);
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((c, d));
        }
    }
    best.unwrap()
}

/// Patterns of weight ≤ 1 over the basis, plus the `pairs` pairs of basis
/// positions with the smallest `|soft_i| + |soft_j|`.
pub fn patterns(soft: &[f64], g: &[Vec<u8>], pairs: usize) -> Vec<Vec<usize>> {
    let basis = greedy_mrib(g, soft);
    let k = basis.len();
    let mut out: Vec<Vec<usize>> = std::iter::once(vec![]).chain((0..k).map(|i| vec![i])).collect();
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            all.push((soft[basis[i]].abs() + soft[basis[j]].abs(), i, j));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.extend(all.iter().take(pairs).map(|&(_, i, j)| vec![i, j]));
    out
}

/// LCOSD reference: the `fixed` codeword columns and `refs` of the pruned
/// PCM `h` take their hard decisions from `soft` (hidden columns 0), at
/// most one of them is flipped, and the remaining columns are solved
/// densely. Returns the consistent candidate closest to `y`, or `None` if
/// no pattern is consistent. Panics if a consistent pattern leaves freedom.
pub fn lcosd_oracle(
    h: &[Vec<u8>],
    cvn: &[usize],
    fixed_cvn: &[usize],
    refs: &[usize],
    soft: &[f64],
    y: &[f64],
) -> Option<(Vec<u8>, f64)> {
    let cols = h[0].len();
    let set: Vec<usize> = fixed_cvn.iter().map(|&j| cvn[j]).chain(refs.iter().copied()).collect();
    let rest: Vec<usize> = (0..cols).filter(|c| !set.contains(c)).collect();
    let cvn_of = |c: usize| cvn.iter().position(|&x| x == c);
    let base: Vec<u8> = set.iter().map(|&c| cvn_of(c).map_or(0, |j| hard(soft[j]))).collect();
    let a: Vec<Vec<u8>> = h.iter().map(|row| rest.iter().map(|&c| row[c]).collect()).collect();
    let mut best: Option<(Vec<u8>, f64)> = None;
    for flip in std::iter::once(None).chain((0..set.len()).map(Some)) {
        let mut v = base.clone();
        if let Some(i) = flip {
            v[i] ^= 1;
        }
        let b: Vec<u8> = h
            .iter()
            .map(|row| set.iter().zip(&v).fold(0u8, |acc, (&c, &x)| acc ^ (row[c] & x)))
            .collect();
        let Some(sol) = solve(&a, &b) else { continue };
        let x = sol.expect("fixed and reference columns determine the rest");
        let mut full = vec![0u8; cols];
        for (&c, &val) in set.iter().zip(&v) {
            full[c] = val;
        }
        for (&c, &val) in rest.iter().zip(&x) {
            full[c] = val;
        }
        let c: Vec<u8> = cvn.iter().map(|&col| full[col]).collect();
        let d = euclidean(&c, y);
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((c, d));
        }
    }
    best
}

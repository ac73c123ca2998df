use statrs::distribution::{Binomial, DiscreteCDF};

/// Wilson score interval for `errors / trials` at normal quantile `z`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Exact two-sided McNemar test on the discordant counts `b` and `c`.
pub fn mcnemar_exact(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    (2.0 * dist.cdf(b.min(c))).min(1.0)
}

/// Paired FER difference `(c − b)/n` with a normal-approximation interval,
/// where `b` and `c` count trials failed only by the first and only by the
/// second decoder.
pub fn paired_difference(b: u64, c: u64, n: u64, z: f64) -> (f64, f64, f64) {
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let nf = n as f64;
    let d = (c as f64 - b as f64) / nf;
    let var = ((b + c) as f64 - (c as f64 - b as f64).powi(2) / nf).max(0.0) / (nf * nf);
    let half = z * var.sqrt();
    (d, d - half, d + half)
}

/// Eb/N0 where a decreasing FER curve crosses `target`, by linear
/// interpolation of `log10(FER)`. `None` if the curve never brackets it.
pub fn interpolate_crossing(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    points.windows(2).find_map(|w| {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if f0 >= target && f1 <= target && f0 > 0.0 && f1 > 0.0 {
            let (l0, l1) = (f0.log10(), f1.log10());
            if l0 == l1 {
                return Some(x0);
            }
            Some(x0 + (lt - l0) * (x1 - x0) / (l1 - l0))
        } else {
            None
        }
    })
}

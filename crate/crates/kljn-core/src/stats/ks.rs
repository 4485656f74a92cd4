//! Two-sample Kolmogorov-Smirnov test.

/// Supremum distance between the two empirical CDFs.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty());
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        // Consume every sample equal to the current value from both sides
        // before comparing the CDFs, so ties contribute no spurious gap.
        let x = a[i].min(b[j]);
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic critical value at the given level:
/// `sqrt(-ln(level / 2) / 2) * sqrt((n + m) / (n m))`.
pub fn ks_critical(level: f64, n: usize, m: usize) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// True when the two samples differ at the given level.
pub fn ks_reject(xs: &[f64], ys: &[f64], level: f64) -> bool {
    ks_statistic(xs, ys) > ks_critical(level, xs.len(), ys.len())
}

//! Small statistical helpers shared by the Monte Carlo drivers.

use statrs::function::erf;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile, polished with one Halley step.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    let e = normal_cdf(x) - p;
    let u = e / normal_pdf(x);
    if u.is_finite() {
        x - u / (1.0 + 0.5 * x * u)
    } else {
        x
    }
}

/// Neumaier-compensated sum; deterministic for a fixed input order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample mean and (unbiased) standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let (mean, se) = mean_stderr(values);
    (mean, se * (values.len() as f64).sqrt())
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples`
/// and the standard normal CDF.
pub fn ks_statistic(samples: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    // ties: the ECDF jumps once across a block of equal values
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        if j > i {
            let f = normal_cdf(sorted[i]);
            let below = i as f64 / n;
            let above = (j + 1) as f64 / n;
            d = d.max((f - below).abs()).max((above - f).abs());
        }
        i = j + 1;
    }
    d.clamp(0.0, 1.0)
}

/// Asymptotic one-sample KS critical value at level `alpha` (0.01, 0.05 or 0.10).
pub fn ks_critical_value(samples: usize, alpha: f64) -> f64 {
    let c = if (alpha - 0.01).abs() < 1e-12 {
        1.628
    } else if (alpha - 0.05).abs() < 1e-12 {
        1.358
    } else if (alpha - 0.10).abs() < 1e-12 {
        1.224
    } else {
        // Kolmogorov tail inversion: P(K > c) ≈ 2 exp(-2c²)
        (-(alpha / 2.0).ln() / 2.0).sqrt()
    };
    c / (samples as f64).sqrt()
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Composite Simpson rule on `[a, b]` with `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    // composite Simpson on [-40, x]; independent of erfc
    fn cdf_by_quadrature(x: f64) -> f64 {
        let a = -40.0;
        let m = 200_000;
        let h = (x - a) / m as f64;
        let mut s = normal_pdf(a) + normal_pdf(x);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 3);
        assert!((v - 3.75).abs() < 1e-13);
    }

    #[test]
    fn cdf_matches_quadrature() {
        for &x in &[-6.0, -3.3, -1.0, -0.2, 0.0, 0.7, 1.959964, 3.1] {
            let q = cdf_by_quadrature(x);
            assert!((normal_cdf(x) - q).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.025, 0.3, 0.5, 0.975, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            assert!(((normal_cdf(x) - p) / p.min(1.0 - p)).abs() < 1e-9, "p={p}");
        }
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
    }

    #[test]
    fn ks_stairstep_geometry() {
        let r = 40;
        let samples: Vec<f64> = (1..=r)
            .map(|i| normal_quantile((i as f64 - 0.5) / r as f64))
            .collect();
        assert!((ks_statistic(&samples) - 0.5 / r as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_point_mass() {
        assert!((ks_statistic(&[0.0; 10]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_critical_300() {
        assert!((ks_critical_value(300, 0.01) - 0.094).abs() < 5e-4);
    }

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}

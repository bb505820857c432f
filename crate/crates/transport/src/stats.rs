//! Statistics for the Monte Carlo acceptance checks: compensated sums,
//! Kolmogorov-Smirnov distances, and delta-method standard errors for the
//! ratio estimators.

/// Neumaier-compensated sum; order-sensitive only at the 1e-16 level, and the
/// callers always feed it in a fixed order.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(xs: &[f64]) -> f64 {
    neumaier_sum(xs) / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2);
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    let var = neumaier_sum(&dev) / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

fn cov(xs: &[f64], ys: &[f64], mx: f64, my: f64) -> f64 {
    let n = xs.len() as f64;
    let prod: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).collect();
    neumaier_sum(&prod) / (n - 1.0)
}

/// Unbiased sample covariance of paired samples.
pub fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(xs.len() >= 2 && xs.len() == ys.len());
    cov(xs, ys, mean(xs), mean(ys))
}

/// Delta-method estimate and standard error of E[a]/E[c] from paired samples.
pub fn ratio_se(a: &[f64], c: &[f64]) -> (f64, f64) {
    let n = a.len();
    assert_eq!(n, c.len());
    assert!(n >= 2);
    let ma = mean(a);
    let mc = mean(c);
    let va = cov(a, a, ma, ma);
    let vc = cov(c, c, mc, mc);
    let vac = cov(a, c, ma, mc);
    let r = ma / mc;
    let var = (va - 2.0 * r * vac + r * r * vc) / (mc * mc) / n as f64;
    (r, var.max(0.0).sqrt())
}

/// Delta-method estimate and standard error of g(ā, b̄, c̄) = ā/c̄ − (b̄/c̄)²
/// from paired per-path samples. This is the log-Hessian assembly: a = Bismut
/// numerator, b = gradient numerator, c = function value, all on common
/// random numbers.
pub fn hess_log_se(a: &[f64], b: &[f64], c: &[f64]) -> (f64, f64) {
    let n = a.len();
    assert!(n >= 2 && b.len() == n && c.len() == n);
    let (ma, mb, mc) = (mean(a), mean(b), mean(c));
    let value = ma / mc - (mb / mc) * (mb / mc);
    let ga = 1.0 / mc;
    let gb = -2.0 * mb / (mc * mc);
    let gc = -ma / (mc * mc) + 2.0 * mb * mb / (mc * mc * mc);
    let vaa = cov(a, a, ma, ma);
    let vbb = cov(b, b, mb, mb);
    let vcc = cov(c, c, mc, mc);
    let vab = cov(a, b, ma, mb);
    let vac = cov(a, c, ma, mc);
    let vbc = cov(b, c, mb, mc);
    let var = ga * ga * vaa
        + gb * gb * vbb
        + gc * gc * vcc
        + 2.0 * (ga * gb * vab + ga * gc * vac + gb * gc * vbc);
    (value, (var.max(0.0) / n as f64).sqrt())
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n − F| for pre-sorted data.
pub fn ks_statistic_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks_statistic_sorted(&sorted, cdf)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic Kolmogorov critical factor c(α) = sqrt(−ln(α/2)/2);
/// the one-sample threshold at level α is c(α)/√n.
pub fn ks_critical_factor(alpha: f64) -> f64 {
    (-((alpha / 2.0).ln()) / 2.0).sqrt()
}

pub fn ks_threshold_one_sample(alpha: f64, n: usize) -> f64 {
    ks_critical_factor(alpha) / (n as f64).sqrt()
}

pub fn ks_threshold_two_sample(alpha: f64, n: usize, m: usize) -> f64 {
    ks_critical_factor(alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// z-score for a two-sided 99% interval.
pub const Z_99: f64 = 2.575_829_303_548_901;
/// z-score for a one-sided 99% bound (used for binomial tail margins).
pub const Z_99_ONE_SIDED: f64 = 2.326_347_874_040_841;

/// Wald margin for an empirical proportion at one-sided 99%.
pub fn binomial_margin_99(p_hat: f64, n: usize) -> f64 {
    // Guard the degenerate p_hat = 0 case with the rule-of-three scale.
    let var = (p_hat * (1.0 - p_hat)).max(1.0 / n as f64 / n as f64);
    Z_99_ONE_SIDED * (var / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;

    #[test]
    fn ks_of_exact_grid_is_half_over_n() {
        // Points at the (i+1/2)/n quantiles of F give D = 1/(2n).
        let n = 1000;
        let xs: Vec<f64> =
            (0..n).map(|i| crate::special::norm_ppf((i as f64 + 0.5) / n as f64)).collect();
        let d = ks_statistic_sorted(&xs, norm_cdf);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ratio_se_matches_direct_for_constant_denominator() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let c = [1.0; 5];
        let (r, se) = ratio_se(&a, &c);
        let (m, mse) = mean_se(&a);
        assert!((r - m).abs() < 1e-15);
        assert!((se - mse).abs() < 1e-15);
    }

    #[test]
    fn hess_log_zero_for_affine_relation() {
        // a = c and b = c gives g = 1/1 − 1 = 0 when c ≡ 1.
        let c = vec![1.0; 8];
        let (v, se) = hess_log_se(&c, &c, &c);
        assert!(v.abs() < 1e-15 && se.abs() < 1e-15);
    }

    #[test]
    fn two_sample_ks_disjoint() {
        let a = [0.0, 1.0, 2.0];
        let b = [10.0, 11.0];
        assert!((ks_two_sample(&a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn critical_factor_99() {
        // c(0.01) = sqrt(-ln(0.005)/2) ≈ 1.6276
        assert!((ks_critical_factor(0.01) - 1.6276236307187293).abs() < 1e-12);
    }
}

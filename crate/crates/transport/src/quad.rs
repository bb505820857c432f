//! Quadrature rules: Gauss-Hermite, Gauss-Legendre, and an adaptive Simpson
//! scheme for vector integrands with shared refinement.

use crate::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516_1;

/// Orthonormal Hermite value h̃_n(z) and the derivative proxy √(2n)·h̃_{n−1}(z)
/// (equal to h̃_n'(z)).
fn hermite_pair(n: usize, z: f64) -> (f64, f64) {
    // p_{j+1} = z√(2/(j+1)) p_j − √(j/(j+1)) p_{j−1}, p_0 = π^{−1/4}
    let mut p1 = SQRT_PI.powf(-0.5);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Nodes and weights for ∫ f(y) e^{−y²} dy ≈ Σ wᵢ f(yᵢ) (physicists'
/// convention). The largest root comes from the classical asymptotic guess;
/// the rest are marched inward with sign-change brackets at the local WKB
/// wavelength π/√(2n+1−z²), then polished by bisection and guarded Newton.
/// Robust for n in the hundreds, where pure Newton marching jumps basins.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    let nf = n as f64;
    let two_n1 = 2.0 * nf + 1.0;
    for i in 0..m {
        let (mut lo, mut hi);
        if i == 0 {
            // start safely above the largest root (asymptotic guess is within
            // O(n^{−1/3})), then walk down with a fine stride
            let guess = two_n1.sqrt() - 1.85575 * two_n1.powf(-1.0 / 6.0);
            let lam = std::f64::consts::PI / (two_n1 - guess * guess).abs().max(1.0).sqrt();
            hi = guess + 1.0;
            while hermite_pair(n, hi).0 <= 0.0 {
                hi += 1.0; // h̃_n > 0 beyond the largest root
            }
            lo = hi;
            loop {
                lo -= 0.1 * lam;
                if hermite_pair(n, lo).0 <= 0.0 {
                    break;
                }
                hi = lo;
            }
        } else {
            // walk down from the previous root until the sign flips
            let prev = nodes[i - 1];
            let lam =
                std::f64::consts::PI / (two_n1 - prev * prev).abs().max(1.0).sqrt();
            hi = prev - 1e-3 * lam;
            let s_hi = hermite_pair(n, hi).0;
            lo = hi;
            loop {
                lo -= 0.25 * lam;
                if hermite_pair(n, lo).0 * s_hi <= 0.0 {
                    break;
                }
                hi = lo;
            }
        }
        // bisection to full precision, then sharpen with guarded Newton
        let mut flo = hermite_pair(n, lo).0;
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = hermite_pair(n, mid).0;
            if fm * flo <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut pp = 0.0;
        for _ in 0..4 {
            let (p, d) = hermite_pair(n, z);
            pp = d;
            let dz = p / d;
            if !dz.is_finite() || dz.abs() > hi - lo + 1e-12 {
                break;
            }
            z -= dz;
            if dz.abs() < 1e-16 * (1.0 + z.abs()) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[m - 1] = 0.0;
        let (_, pp) = hermite_pair(n, 0.0);
        weights[m - 1] = 2.0 / (pp * pp);
    }
    (nodes, weights)
}

/// Nodes and weights for ∫_{−1}^{1} f(x) dx ≈ Σ wᵢ f(xᵢ).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// Standard-normal expectation E[f(Z)] by Gauss-Hermite: substitute z = √2 y.
pub fn gauss_hermite_normal(nodes: &[f64], weights: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for (&y, &w) in nodes.iter().zip(weights) {
        acc += w * f(std::f64::consts::SQRT_2 * y);
    }
    acc / SQRT_PI
}

const NCOMP_MAX: usize = 4;

/// Up-to-4-component integrand value.
pub type Comp = [f64; NCOMP_MAX];

fn simpson(f0: &Comp, f1: &Comp, f2: &Comp, h: f64) -> Comp {
    let mut out = [0.0; NCOMP_MAX];
    for k in 0..NCOMP_MAX {
        out[k] = h / 6.0 * (f0[k] + 4.0 * f1[k] + f2[k]);
    }
    out
}

struct AdaptiveCtx<'a> {
    f: &'a dyn Fn(f64) -> Comp,
    tol: f64,
    evals: usize,
    max_evals: usize,
}

fn adaptive_rec(
    ctx: &mut AdaptiveCtx,
    a: f64,
    b: f64,
    fa: Comp,
    fm: Comp,
    fb: Comp,
    whole: Comp,
    depth: u32,
) -> Result<Comp> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (ctx.f)(lm);
    let frm = (ctx.f)(rm);
    ctx.evals += 2;
    if ctx.evals > ctx.max_evals {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson exceeded {} evaluations on [{a}, {b}]",
            ctx.max_evals
        )));
    }
    let left = simpson(&fa, &flm, &fm, m - a);
    let right = simpson(&fm, &frm, &fb, b - m);
    let mut both = [0.0; NCOMP_MAX];
    let mut err = 0.0f64;
    let mut vmax = 0.0f64;
    let mut dmax = 0.0f64;
    let samples = [&fa, &flm, &fm, &frm, &fb];
    for k in 0..NCOMP_MAX {
        both[k] = left[k] + right[k];
        err = err.max((both[k] - whole[k]).abs());
        for i in 0..samples.len() {
            vmax = vmax.max(samples[i][k].abs());
            if i > 0 {
                dmax = dmax.max((samples[i][k] - samples[i - 1][k]).abs());
            }
        }
    }
    // Noise clauses: the refinement difference carries O(eps·max|f|·len)
    // rounding noise from the sums, and O(eps·R·|f'|·len) noise from argument
    // rounding amplified through the integrand's slope (|f'|·len estimated by
    // the sampled differences). Demanding accuracy below either floor loops
    // forever; the length floor is the final parachute.
    let len = (b - a).abs();
    let rscale = a.abs().max(b.abs()).max(1.0);
    let accept = err <= 15.0 * ctx.tol * (len + 1e-30)
        || err <= 100.0 * f64::EPSILON * vmax * len
        || err <= 10.0 * f64::EPSILON * rscale * dmax
        || len <= 2.5e-13 * rscale;
    if depth > 0 && accept {
        // Richardson extrapolation on each component.
        for k in 0..NCOMP_MAX {
            both[k] += (both[k] - whole[k]) / 15.0;
        }
        return Ok(both);
    }
    if depth >= 48 {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson hit maximum depth near x = {m}"
        )));
    }
    let l = adaptive_rec(ctx, a, m, fa, flm, fm, left, depth + 1)?;
    let r = adaptive_rec(ctx, m, b, fm, frm, fb, right, depth + 1)?;
    let mut out = [0.0; NCOMP_MAX];
    for k in 0..NCOMP_MAX {
        out[k] = l[k] + r[k];
    }
    Ok(out)
}

/// Adaptive Simpson for a vector integrand over [a, b] with optional interior
/// break points (kinks); all components share the refinement. `tol` is an
/// absolute tolerance per unit length.
pub fn adaptive_vec(
    f: &dyn Fn(f64) -> Comp,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Comp> {
    let mut pts: Vec<f64> = vec![a];
    for &p in breaks {
        if p > a && p < b {
            pts.push(p);
        }
    }
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = [0.0; NCOMP_MAX];
    let mut ctx = AdaptiveCtx { f, tol, evals: 0, max_evals: 2_000_000 };
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let flo = (ctx.f)(lo);
        let fmid = (ctx.f)(mid);
        let fhi = (ctx.f)(hi);
        ctx.evals += 3;
        let whole = simpson(&flo, &fmid, &fhi, hi - lo);
        let seg = adaptive_rec(&mut ctx, lo, hi, flo, fmid, fhi, whole, 0)?;
        for k in 0..NCOMP_MAX {
            total[k] += seg[k];
        }
    }
    Ok(total)
}

/// Scalar convenience wrapper over [`adaptive_vec`].
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let g = move |x: f64| -> Comp { [f(x), 0.0, 0.0, 0.0] };
    Ok(adaptive_vec(&g, a, b, breaks, tol)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(200);
        let total: f64 = w.iter().sum();
        assert!((total - SQRT_PI).abs() < 1e-12);
        let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((m2 - SQRT_PI / 2.0).abs() < 1e-11);
        // E[Z^4] = 3 for a standard normal
        let m4 = gauss_hermite_normal(&x, &w, |z| z.powi(4));
        assert!((m4 - 3.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_rule_exactness() {
        let (x, w) = gauss_legendre(400);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        // ∫_{-1}^{1} x^2 dx = 2/3, ∫ e^x dx = e − 1/e
        let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((m2 - 2.0 / 3.0).abs() < 1e-12);
        let me: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.exp()).sum();
        assert!((me - (1.0f64.exp() - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_kink() {
        // ∫_{-1}^{1} |x| dx = 1, kink at 0 declared
        let f = |x: f64| x.abs();
        let v = adaptive(&f, -1.0, 1.0, &[0.0], 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // Gaussian integral without declared kink
        let g = |x: f64| (-0.5 * x * x).exp();
        let v = adaptive(&g, -10.0, 10.0, &[], 1e-13).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn adaptive_vec_shares_refinement() {
        let f = |x: f64| -> Comp { [x.cos(), x.sin(), (2.0 * x).cos(), 0.0] };
        let v = adaptive_vec(&f, 0.0, 1.0, &[], 1e-13).unwrap();
        assert!((v[0] - 1.0f64.sin()).abs() < 1e-12);
        assert!((v[1] - (1.0 - 1.0f64.cos())).abs() < 1e-12);
        assert!((v[2] - 0.5 * 2.0f64.sin()).abs() < 1e-12);
    }
}

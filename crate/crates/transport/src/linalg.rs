//! Dense helpers for the small ambient dimensions used here (n ≤ 8 or so).
//!
//! Matrices are row-major `Vec<f64>`. Nothing here is tuned for large n; the
//! estimator inner loops need allocation-free column operations and a pivoted
//! solve, and that is all.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(a: &mut [f64], alpha: f64) {
    for ai in a.iter_mut() {
        *ai *= alpha;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Square row-major matrix of side `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    /// out = self * v
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            out[i] = dot(&self.data[i * self.n..(i + 1) * self.n], v);
        }
    }

    /// v^T * self, written to out.
    pub fn matvec_t(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for i in 0..self.n {
            let vi = v[i];
            for j in 0..self.n {
                out[j] += vi * self.data[i * self.n + j];
            }
        }
    }

    pub fn matmul(&self, other: &SquareMat) -> SquareMat {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        *out.at_mut(i, j) += a * other.at(k, j);
                    }
                }
            }
        }
        out
    }

    /// Spectral (operator) norm: sqrt of the top eigenvalue of MᵀM by power
    /// iteration with a deterministic start. Exact for n = 1; for larger n
    /// the iteration is run to 1e-14 relative stagnation.
    pub fn op_norm(&self) -> f64 {
        let n = self.n;
        if n == 1 {
            return self.data[0].abs();
        }
        // G = MᵀM (symmetric PSD)
        let mut g = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.at(k, i) * self.at(k, j);
                }
                *g.at_mut(i, j) = s;
            }
        }
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut w = vec![0.0; n];
        let mut lambda = 0.0f64;
        for _ in 0..500 {
            g.matvec(&v, &mut w);
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            if (nw - lambda).abs() <= 1e-14 * nw.max(1.0) {
                lambda = nw;
                break;
            }
            lambda = nw;
        }
        lambda.sqrt()
    }

    /// Solve self * x = b by LU with partial pivoting (self is copied).
    /// Returns None for a numerically singular matrix.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x: Vec<f64> = b.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut best = col;
            let mut best_val = a[piv[col] * n + col].abs();
            for row in col + 1..n {
                let val = a[piv[row] * n + col].abs();
                if val > best_val {
                    best = row;
                    best_val = val;
                }
            }
            if best_val < 1e-300 {
                return None;
            }
            piv.swap(col, best);
            let p = piv[col];
            let diag = a[p * n + col];
            for row in col + 1..n {
                let r = piv[row];
                let factor = a[r * n + col] / diag;
                if factor != 0.0 {
                    a[r * n + col] = 0.0;
                    for j in col + 1..n {
                        a[r * n + j] -= factor * a[p * n + j];
                    }
                    x[r] -= factor * x[p];
                }
            }
        }
        let mut out = vec![0.0; n];
        for col in (0..n).rev() {
            let p = piv[col];
            let mut s = x[p];
            for j in col + 1..n {
                s -= a[p * n + j] * out[j];
            }
            out[col] = s / a[p * n + col];
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_roundtrip() {
        let m = SquareMat { n: 3, data: vec![4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 5.0] };
        let b = [1.0, -2.0, 0.25];
        let x = m.solve(&b).unwrap();
        let mut back = vec![0.0; 3];
        m.matvec(&x, &mut back);
        for i in 0..3 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn op_norm_diagonal_and_rotation() {
        let mut d = SquareMat::zeros(3);
        *d.at_mut(0, 0) = -7.0;
        *d.at_mut(1, 1) = 2.0;
        *d.at_mut(2, 2) = 0.5;
        assert!((d.op_norm() - 7.0).abs() < 1e-10);

        let th = 0.7f64;
        let r = SquareMat { n: 2, data: vec![th.cos(), -th.sin(), th.sin(), th.cos()] };
        assert!((r.op_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matvec_t_is_transpose_action() {
        let m = SquareMat { n: 2, data: vec![1.0, 2.0, 3.0, 4.0] };
        let v = [1.0, 1.0];
        let mut out = vec![0.0; 2];
        m.matvec_t(&v, &mut out);
        assert_eq!(out, vec![4.0, 6.0]);
    }
}

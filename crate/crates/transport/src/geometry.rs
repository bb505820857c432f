//! The two supported spaces: ℝⁿ and the unit sphere 𝕊ⁿ⁻¹ ⊂ ℝⁿ.
//!
//! Points and tangent vectors are ambient-coordinate `Vec<f64>`s. Sphere
//! points are re-projected to unit norm after every operation (drift stays
//! below 1e-12) and tangency |⟨p, v⟩| ≤ 1e-10 is enforced where required.

use crate::linalg::{axpy, dot, norm, scale};
use crate::{Error, Result};

/// Tolerance for the sphere point-norm invariant.
pub const POINT_NORM_TOL: f64 = 1e-12;
/// Tolerance for the tangency invariant.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// ℝⁿ with the flat metric, n ≥ 1.
    Euclidean { dim: usize },
    /// Unit sphere 𝕊ⁿ⁻¹ in ℝⁿ, n ≥ 3 (manifold dimension n − 1).
    Sphere { ambient_dim: usize },
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: "Euclidean space needs dim >= 1".into(),
            });
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn sphere(ambient_dim: usize) -> Result<Self> {
        if ambient_dim < 3 {
            return Err(Error::InvalidParameter {
                name: "ambient_dim",
                message: "sphere needs ambient dimension >= 3".into(),
            });
        }
        Ok(Space::Sphere { ambient_dim })
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Space::Euclidean { dim } => dim,
            Space::Sphere { ambient_dim } => ambient_dim,
        }
    }

    /// Dimension of the manifold itself (n − 1 on the sphere).
    pub fn manifold_dim(&self) -> usize {
        match *self {
            Space::Euclidean { dim } => dim,
            Space::Sphere { ambient_dim } => ambient_dim - 1,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Space::Sphere { .. })
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: v.len() });
        }
        Ok(())
    }

    /// Re-project onto the space (normalizes sphere points; identity on ℝⁿ).
    pub fn project_point(&self, x: &mut [f64]) {
        if self.is_sphere() {
            let n = norm(x);
            if n > 0.0 {
                scale(x, 1.0 / n);
            }
        }
    }

    /// exp_p(v): Euclidean p + v; sphere cos(|v|)p + sin(|v|)·v/|v|.
    pub fn exp_map(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        self.check_dim(v)?;
        match self {
            Space::Euclidean { .. } => Ok(p.iter().zip(v).map(|(a, b)| a + b).collect()),
            Space::Sphere { .. } => {
                let r = norm(v);
                let mut out: Vec<f64>;
                if r < 1e-300 {
                    out = p.to_vec();
                } else {
                    let (c, s) = (r.cos(), r.sin());
                    out = p.iter().zip(v).map(|(a, b)| c * a + s * b / r).collect();
                }
                self.project_point(&mut out);
                Ok(out)
            }
        }
    }

    /// Parallel transport of v ∈ T_p along the minimizing geodesic to q.
    /// Identity on ℝⁿ; errors on antipodal sphere points.
    pub fn parallel_transport(&self, p: &[f64], q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        self.check_dim(q)?;
        self.check_dim(v)?;
        match self {
            Space::Euclidean { .. } => Ok(v.to_vec()),
            Space::Sphere { .. } => {
                let c = dot(p, q).clamp(-1.0, 1.0);
                if c < -1.0 + 1e-12 {
                    return Err(Error::AntipodalTransport);
                }
                // Unit tangent at p pointing toward q.
                let mut e: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi - c * pi).collect();
                let en = norm(&e);
                if en < 1e-15 {
                    // q == p: nothing to transport.
                    let mut out = v.to_vec();
                    self.make_tangent(q, &mut out);
                    return Ok(out);
                }
                scale(&mut e, 1.0 / en);
                let d = c.acos();
                let a = dot(v, &e);
                // Component orthogonal to the geodesic plane is fixed; the
                // along-geodesic component rotates: e ↦ cos(d)e − sin(d)p.
                let mut out: Vec<f64> = v.to_vec();
                axpy(-a, &e, &mut out);
                let (cd, sd) = (d.cos(), d.sin());
                for i in 0..out.len() {
                    out[i] += a * (cd * e[i] - sd * p[i]);
                }
                self.make_tangent(q, &mut out);
                Ok(out)
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto T_p.
    pub fn project_tangent(&self, p: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        self.check_dim(w)?;
        match self {
            Space::Euclidean { .. } => Ok(w.to_vec()),
            Space::Sphere { .. } => {
                let mut out = w.to_vec();
                self.make_tangent(p, &mut out);
                Ok(out)
            }
        }
    }

    /// In-place removal of the radial component (no-op on ℝⁿ).
    pub fn make_tangent(&self, p: &[f64], w: &mut [f64]) {
        if self.is_sphere() {
            let r = dot(p, w);
            axpy(-r, p, w);
        }
    }

    /// Geodesic distance: |p − q| on ℝⁿ, arccos⟨p, q⟩ on the sphere.
    pub fn geodesic_distance(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Space::Euclidean { .. } => {
                norm(&p.iter().zip(q).map(|(a, b)| a - b).collect::<Vec<_>>())
            }
            Space::Sphere { .. } => dot(p, q).clamp(-1.0, 1.0).acos(),
        }
    }

    /// Deterministic orthonormal basis of T_p (n − 1 vectors on the sphere,
    /// the standard basis on ℝⁿ): coordinate axes with the one most aligned
    /// with p dropped, Gram-Schmidt against p and each other.
    pub fn tangent_basis(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(p)?;
        let n = self.ambient_dim();
        match self {
            Space::Euclidean { .. } => Ok((0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect()),
            Space::Sphere { .. } => {
                let skip = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
                for i in 0..n {
                    if i == skip {
                        continue;
                    }
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    self.make_tangent(p, &mut e);
                    for b in &basis {
                        let c = dot(&e, b);
                        axpy(-c, b, &mut e);
                    }
                    let nn = norm(&e);
                    if nn < 1e-12 {
                        return Err(Error::NonFinite { context: "tangent_basis", quantity: nn });
                    }
                    scale(&mut e, 1.0 / nn);
                    basis.push(e);
                }
                Ok(basis)
            }
        }
    }

    /// Modified Gram-Schmidt of a frame against p and itself; keeps the
    /// transported frame orthonormal to 1e-8 over long paths.
    /// Orthonormal tangent frame at p whose direction 0 is u (normalized).
    /// Completes u with tangent_basis vectors, dropping near-dependent ones,
    /// so it stays exact even when u is (anti)parallel to a basis vector.
    pub fn complete_frame(&self, p: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut u0 = u.to_vec();
        self.make_tangent(p, &mut u0);
        let nu = norm(&u0);
        if nu < 1e-12 {
            return Err(Error::InvalidParameter {
                name: "u",
                message: "direction must have a nonzero tangent part".into(),
            });
        }
        scale(&mut u0, 1.0 / nu);
        let target = self.manifold_dim();
        let mut frame = vec![u0];
        for cand in self.tangent_basis(p)? {
            if frame.len() == target {
                break;
            }
            let mut e = cand;
            for b in &frame {
                let c = dot(&e, b);
                axpy(-c, b, &mut e);
            }
            let nn = norm(&e);
            if nn > 1e-6 {
                scale(&mut e, 1.0 / nn);
                frame.push(e);
            }
        }
        if frame.len() < target {
            return Err(Error::NonFinite { context: "complete_frame", quantity: frame.len() as f64 });
        }
        Ok(frame)
    }

    pub fn reorthonormalize(&self, p: &[f64], frame: &mut [Vec<f64>]) {
        for k in 0..frame.len() {
            let (done, rest) = frame.split_at_mut(k);
            let e = &mut rest[0];
            self.make_tangent(p, e);
            for b in done.iter() {
                let c = dot(e, b);
                axpy(-c, b, e);
            }
            let nn = norm(e);
            if nn > 0.0 {
                scale(e, 1.0 / nn);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn exp_map_euclidean_is_translation() {
        let s = Space::euclidean(2).unwrap();
        let out = s.exp_map(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(out, vec![1.0, 2.0]);
    }

    #[test]
    fn exp_map_sphere_quarter_circle() {
        let s = Space::sphere(3).unwrap();
        let v = [0.0, std::f64::consts::FRAC_PI_2, 0.0];
        let out = s.exp_map(&e(3, 0), &v).unwrap();
        assert!(norm(&sub3(&out, &e(3, 1))) < 1e-14);
        let fixed = s.exp_map(&e(3, 0), &[0.0; 3]).unwrap();
        assert!(norm(&sub3(&fixed, &e(3, 0))) < 1e-15);
    }

    fn sub3(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    #[test]
    fn transport_examples() {
        let s = Space::sphere(3).unwrap();
        // Orthogonal to the geodesic plane: fixed.
        let t = s.parallel_transport(&e(3, 0), &e(3, 1), &e(3, 2)).unwrap();
        assert!(norm(&sub3(&t, &e(3, 2))) < 1e-14);
        // Along the geodesic: rotates into −e1.
        let t = s.parallel_transport(&e(3, 0), &e(3, 1), &e(3, 1)).unwrap();
        let want = [-1.0, 0.0, 0.0];
        assert!(norm(&sub3(&t, &want)) < 1e-14);
        // Euclidean transport is the identity.
        let sf = Space::euclidean(2).unwrap();
        let t = sf.parallel_transport(&[0.0, 0.0], &[5.0, 5.0], &[3.0, 4.0]).unwrap();
        assert_eq!(t, vec![3.0, 4.0]);
    }

    #[test]
    fn transport_antipodal_errors() {
        let s = Space::sphere(3).unwrap();
        let p = e(3, 0);
        let q = [-1.0, 0.0, 0.0];
        assert!(matches!(
            s.parallel_transport(&p, &q, &e(3, 2)),
            Err(Error::AntipodalTransport)
        ));
    }

    #[test]
    fn transport_is_isometry_and_roundtrip_identity() {
        let s = Space::sphere(4).unwrap();
        let mut rng = crate::rng::substream(11, 0);
        for _ in 0..200 {
            let mut p = vec![0.0; 4];
            let mut q = vec![0.0; 4];
            crate::rng::fill_normals(&mut rng, &mut p);
            crate::rng::fill_normals(&mut rng, &mut q);
            s.project_point(&mut p);
            s.project_point(&mut q);
            if dot(&p, &q) < -0.9 {
                continue;
            }
            let mut v = vec![0.0; 4];
            crate::rng::fill_normals(&mut rng, &mut v);
            s.make_tangent(&p, &mut v);
            let t = s.parallel_transport(&p, &q, &v).unwrap();
            assert!((norm(&t) - norm(&v)).abs() < 1e-10);
            assert!(dot(&t, &q).abs() < TANGENCY_TOL);
            let back = s.parallel_transport(&q, &p, &t).unwrap();
            assert!(norm(&sub3(&back, &v)) < 1e-10);
        }
    }

    #[test]
    fn exp_map_constant_speed() {
        let s = Space::sphere(3).unwrap();
        let p = e(3, 0);
        let mut v = vec![0.0, 0.6, 0.8];
        s.make_tangent(&p, &mut v);
        let speed = norm(&v);
        for i in 1..30 {
            let t = i as f64 / 10.0;
            if t * speed >= std::f64::consts::PI {
                break;
            }
            let vt: Vec<f64> = v.iter().map(|x| x * t).collect();
            let q = s.exp_map(&p, &vt).unwrap();
            assert!((s.geodesic_distance(&p, &q) - t * speed).abs() < 1e-10);
            assert!((norm(&q) - 1.0).abs() < POINT_NORM_TOL);
        }
    }

    #[test]
    fn project_tangent_examples() {
        let s = Space::sphere(3).unwrap();
        let z = s.project_tangent(&e(3, 0), &e(3, 0)).unwrap();
        assert!(norm(&z) < 1e-15);
        let t = s.project_tangent(&e(3, 0), &e(3, 1)).unwrap();
        assert!(norm(&sub3(&t, &e(3, 1))) < 1e-15);
        let sf = Space::euclidean(2).unwrap();
        assert_eq!(sf.project_tangent(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn distances() {
        let s = Space::sphere(3).unwrap();
        assert!((s.geodesic_distance(&e(3, 0), &e(3, 1)) - std::f64::consts::FRAC_PI_2) < 1e-15);
        assert_eq!(s.geodesic_distance(&e(3, 0), &e(3, 0)), 0.0);
        let sf = Space::euclidean(2).unwrap();
        assert!((sf.geodesic_distance(&[0.0, 0.0], &[3.0, 4.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal_tangent() {
        let s = Space::sphere(5).unwrap();
        let mut p = vec![0.3, -0.1, 0.9, 0.2, -0.4];
        s.project_point(&mut p);
        let basis = s.tangent_basis(&p).unwrap();
        assert_eq!(basis.len(), 4);
        for (i, bi) in basis.iter().enumerate() {
            assert!(dot(bi, &p).abs() < 1e-12);
            for (j, bj) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(bi, bj) - want).abs() < 1e-12);
            }
        }
    }

    // The requested direction may be exactly (anti)parallel to one of the
    // tangent_basis vectors; completion must stay orthonormal rather than
    // normalize round-off into a spurious direction.
    #[test]
    fn complete_frame_survives_parallel_direction() {
        let s = Space::sphere(3).unwrap();
        let th = 1.0f64;
        let p = vec![th.sin(), 0.0, th.cos()];
        let candidates = [
            vec![th.cos(), 0.0, -th.sin()],
            vec![-th.cos(), 0.0, th.sin()],
            vec![0.0, 1.0, 0.0],
            vec![0.3, -0.5, 0.2],
        ];
        for u in candidates {
            let frame = s.complete_frame(&p, &u).unwrap();
            assert_eq!(frame.len(), 2);
            for (i, bi) in frame.iter().enumerate() {
                assert!(dot(bi, &p).abs() < 1e-12, "not tangent for u {u:?}");
                for (j, bj) in frame.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(bi, bj) - want).abs() < 1e-12, "skew for u {u:?}");
                }
            }
        }
    }
}

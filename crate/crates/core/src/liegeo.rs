//! Lie sphere geometry in homogeneous coordinates.
//!
//! Oriented spheres of `S^n` are points of the quadric `⟨x, x⟩ = 0` in
//! `R^{n+3}` with the signature `(n+1, 2)` form
//! `⟨x, y⟩ = -x₁y₁ + x₂y₂ + … + x_{n+2}y_{n+2} - x_{n+3}y_{n+3}`.
//! Principal curvatures are carried as projective pairs `(c : s)` with
//! `κ = c / s`, so `κ = ∞` is just `(1 : 0)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::rng;
use crate::{Error, Result};

/// Determinants below this are treated as coincident projective points.
pub const DEGENERATE_DET: f64 = 1e-12;

/// Homogeneous coordinates of an oriented sphere in `S^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieCoord {
    pub x: DVector<f64>,
    pub n: usize,
}

impl LieCoord {
    pub fn new(x: DVector<f64>, n: usize) -> Result<Self> {
        if x.len() != n + 3 {
            return Err(Error::DimensionMismatch {
                expected: n + 3,
                found: x.len(),
            });
        }
        Ok(LieCoord { x, n })
    }

    /// Representative scaled so the entry of largest magnitude is `+1`.
    pub fn normalized(&self) -> LieCoord {
        let (i, _) = self
            .x
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        let pivot = self.x[i];
        let x = if pivot == 0.0 { self.x.clone() } else { &self.x / pivot };
        LieCoord { x, n: self.n }
    }

    pub fn on_quadric(&self, tol: f64) -> bool {
        lie_inner_raw(&self.x, &self.x).abs() <= tol * self.x.norm_squared()
    }

    pub fn is_point_sphere(&self, tol: f64) -> bool {
        self.x[self.n + 2].abs() <= tol * self.x.norm()
    }

    pub fn transformed(&self, b: &DMatrix<f64>) -> LieCoord {
        LieCoord {
            x: b * &self.x,
            n: self.n,
        }
    }
}

/// Diagonal metric matrix `G = diag(-1, 1, …, 1, -1)` of size `n+3`.
pub fn metric_matrix(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n + 3, n + 3);
    g[(0, 0)] = -1.0;
    g[(n + 2, n + 2)] = -1.0;
    g
}

fn lie_inner_raw(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let last = x.len() - 1;
    let mut s = -x[0] * y[0] - x[last] * y[last];
    for i in 1..last {
        s += x[i] * y[i];
    }
    s
}

pub fn lie_inner(x: &LieCoord, y: &LieCoord) -> Result<f64> {
    if x.n != y.n || x.x.len() != y.x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.x.len(),
            found: y.x.len(),
        });
    }
    Ok(lie_inner_raw(&x.x, &y.x))
}

/// `(cos ρ, p, sin ρ)`: the sphere with center `p` and signed radius `ρ`.
pub fn sphere_to_lie(p: &DVector<f64>, rho: f64) -> Result<LieCoord> {
    let norm = p.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    let n = p.len() - 1;
    let mut x = DVector::zeros(n + 3);
    x[0] = rho.cos();
    x.rows_mut(1, n + 1).copy_from(p);
    x[n + 2] = rho.sin();
    Ok(LieCoord { x, n })
}

/// `|⟨x, y⟩| < tol · |x| |y|` with Euclidean norms on the coordinates.
pub fn oriented_contact(x: &LieCoord, y: &LieCoord, tol: f64) -> bool {
    match lie_inner(x, y) {
        Ok(v) => v.abs() < tol * x.x.norm() * y.x.norm(),
        Err(_) => false,
    }
}

/// A point `(c : s)` of the projective line; `κ = c / s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjParam {
    pub c: f64,
    pub s: f64,
}

impl ProjParam {
    pub const INFINITY: ProjParam = ProjParam { c: 1.0, s: 0.0 };

    pub fn new(c: f64, s: f64) -> Self {
        ProjParam { c, s }
    }

    pub fn finite(kappa: f64) -> Self {
        ProjParam { c: kappa, s: 1.0 }
    }

    /// `(cos θ : sin θ)`, i.e. `κ = cot θ`.
    pub fn from_angle(theta: f64) -> Self {
        ProjParam {
            c: theta.cos(),
            s: theta.sin(),
        }
    }

    /// Angle in `[0, π)` with `(cos θ : sin θ) ~ self`.
    pub fn angle(&self) -> f64 {
        let a = self.s.atan2(self.c);
        a.rem_euclid(std::f64::consts::PI)
    }

    pub fn kappa(&self) -> f64 {
        if self.s == 0.0 {
            f64::INFINITY
        } else {
            self.c / self.s
        }
    }

    /// Apply the 2×2 matrix `m` to `(c, s)`.
    pub fn mapped(&self, m: &[[f64; 2]; 2]) -> Self {
        ProjParam {
            c: m[0][0] * self.c + m[0][1] * self.s,
            s: m[1][0] * self.c + m[1][1] * self.s,
        }
    }
}

pub fn det(a: ProjParam, b: ProjParam) -> f64 {
    a.c * b.s - b.c * a.s
}

fn checked_det(a: ProjParam, b: ProjParam) -> Result<f64> {
    let d = det(a, b);
    let scale = (a.c.hypot(a.s) * b.c.hypot(b.s)).max(f64::MIN_POSITIVE);
    if d.abs() < DEGENERATE_DET * scale {
        Err(Error::DegenerateCrossRatio)
    } else {
        Ok(d)
    }
}

/// `det(a,b) det(d,c) / (det(a,c) det(d,b))`; for finite values this is
/// `(a-b)(d-c) / ((a-c)(d-b))`.
pub fn cross_ratio(a: ProjParam, b: ProjParam, c: ProjParam, d: ProjParam) -> Result<f64> {
    let pts = [a, b, c, d];
    for i in 0..4 {
        for j in i + 1..4 {
            checked_det(pts[i], pts[j])?;
        }
    }
    Ok(det(a, b) * det(d, c) / (det(a, c) * det(d, b)))
}

/// Rotation in the `(e₁, e_{n+3})` plane adding `t` to every signed radius.
pub fn parallel_matrix(t: f64, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::identity(n + 3, n + 3);
    let (s, c) = t.sin_cos();
    let last = n + 2;
    p[(0, 0)] = c;
    p[(last, 0)] = s;
    p[(0, last)] = -s;
    p[(last, last)] = c;
    p
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let mut squarings = 0;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm /= 2.0;
        squarings += 1;
    }
    let scaled = a / 2f64.powi(squarings);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.abs().max() < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn random_generator(seed: u64, n: usize, scale: f64, fix_last: bool) -> DMatrix<f64> {
    let dim = n + 3;
    let mut rng = rng::stream(seed, 0);
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        if scale > 0.0 {
            rng.random_range(-scale..=scale)
        } else {
            0.0
        }
    });
    let mut k = (&m - m.transpose()) * 0.5;
    if fix_last {
        k.row_mut(dim - 1).fill(0.0);
        k.column_mut(dim - 1).fill(0.0);
    }
    metric_matrix(n) * k
}

/// A random element of `O(n+1, 2)`: `exp(A)` with `GA + AᵀG = 0` and
/// generator entries bounded by `scale`.
pub fn random_lie_transform(seed: u64, n: usize, scale: f64) -> DMatrix<f64> {
    expm(&random_generator(seed, n, scale, false))
}

/// Like [`random_lie_transform`] but the generator annihilates `e_{n+3}`,
/// so the transform fixes `e_{n+3}` and maps point spheres to point spheres.
pub fn random_mobius_transform(seed: u64, n: usize, scale: f64) -> DMatrix<f64> {
    expm(&random_generator(seed, n, scale, true))
}

/// `max |BᵀGB - G|`.
pub fn metric_defect(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows() - 3;
    let g = metric_matrix(n);
    (b.transpose() * &g * b - g).abs().max()
}

/// The line through the point sphere `(1, f, 0)` and the great sphere
/// `(0, ξ, 1)` attached to a point `f` with unit normal `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreLine {
    pub k1: LieCoord,
    pub k2: LieCoord,
}

pub fn legendre_line(f: &DVector<f64>, xi: &DVector<f64>) -> Result<LegendreLine> {
    if f.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            found: xi.len(),
        });
    }
    for v in [f, xi] {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnit { norm });
        }
    }
    let dot = f.dot(xi);
    if dot.abs() > 1e-10 {
        return Err(Error::NotOrthogonal { dot });
    }
    let k1 = sphere_to_lie(f, 0.0)?;
    let mut k2 = sphere_to_lie(xi, std::f64::consts::FRAC_PI_2)?;
    k2.x[0] = 0.0;
    Ok(LegendreLine { k1, k2 })
}

/// `cos θ k₁ + sin θ k₂`: the curvature sphere for `κ = cot θ`.
pub fn curvature_sphere(line: &LegendreLine, theta: f64) -> LieCoord {
    LieCoord {
        x: &line.k1.x * theta.cos() + &line.k2.x * theta.sin(),
        n: line.k1.n,
    }
}

/// Push the curvature spheres `θᵢ` of `line` through `b`, rewrite the image
/// line in its own point-sphere / great-sphere basis and return the
/// coefficients of each image sphere in that basis.
pub fn reread_curvatures(
    b: &DMatrix<f64>,
    line: &LegendreLine,
    thetas: &[f64],
) -> Result<Vec<ProjParam>> {
    let bk1 = b * &line.k1.x;
    let bk2 = b * &line.k2.x;
    let last = bk1.len() - 1;
    let scale = bk1.norm() * bk2.norm();

    // k1' = a Bk1 + b Bk2 with last coordinate 0, first coordinate 1.
    let (mut pa, mut pb) = (bk2[last], -bk1[last]);
    let first = pa * bk1[0] + pb * bk2[0];
    if first.abs() < 1e-10 * scale {
        return Err(Error::DegenerateLine);
    }
    pa /= first;
    pb /= first;

    // k2' = c Bk1 + d Bk2 with first coordinate 0, last coordinate 1.
    let (mut pc, mut pd) = (bk2[0], -bk1[0]);
    let tail = pc * bk1[last] + pd * bk2[last];
    if tail.abs() < 1e-10 * scale {
        return Err(Error::DegenerateLine);
    }
    pc /= tail;
    pd /= tail;

    // (Bk1, Bk2)-coefficients = P (k1', k2')-coefficients with P = [[a, c], [b, d]].
    let det_p = pa * pd - pc * pb;
    if det_p.abs() < 1e-14 {
        return Err(Error::DegenerateLine);
    }
    let inv = [[pd / det_p, -pc / det_p], [-pb / det_p, pa / det_p]];
    Ok(thetas
        .iter()
        .map(|&t| ProjParam::from_angle(t).mapped(&inv))
        .collect())
}

/// Draw a random unit `f ∈ S^n` and unit `ξ ⟂ f`.
pub fn random_line<R: Rng>(rng: &mut R, n: usize) -> LegendreLine {
    let f = rng::unit_vector(rng, n + 1);
    let mut xi = rng::gaussian_vector(rng, n + 1);
    let d = xi.dot(&f);
    xi.axpy(-d, &f, 1.0);
    let xi = xi.normalize();
    legendre_line(&f, &xi).expect("constructed orthonormal pair")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn basis(n: usize, i: usize) -> LieCoord {
        let mut x = DVector::zeros(n + 3);
        x[i] = 1.0;
        LieCoord::new(x, n).unwrap()
    }

    #[test]
    fn metric_signature() {
        assert_eq!(lie_inner(&basis(3, 0), &basis(3, 0)).unwrap(), -1.0);
        assert_eq!(lie_inner(&basis(3, 1), &basis(3, 1)).unwrap(), 1.0);
        assert_eq!(lie_inner(&basis(3, 5), &basis(3, 5)).unwrap(), -1.0);
        assert!(lie_inner(&basis(3, 0), &basis(2, 0)).is_err());
    }

    #[test]
    fn sphere_coordinates() {
        let p = DVector::from_vec(vec![0.0, 0.6, 0.8]);
        let pt = sphere_to_lie(&p, 0.0).unwrap();
        assert_eq!(pt.x.as_slice(), &[1.0, 0.0, 0.6, 0.8, 0.0]);
        assert!(pt.is_point_sphere(0.0));
        let great = sphere_to_lie(&p, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(great.x[0], 0.0, epsilon = 1e-16);
        assert_eq!(great.x[4], 1.0);
        assert!(sphere_to_lie(&DVector::from_vec(vec![1.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn contact_examples() {
        let p = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let rho: f64 = 0.4;
        let q = DVector::from_vec(vec![rho.cos(), rho.sin(), 0.0]);
        let sphere = sphere_to_lie(&p, rho).unwrap();
        let point = sphere_to_lie(&q, 0.0).unwrap();
        assert!(oriented_contact(&point, &sphere, 1e-12));
        assert!(oriented_contact(&sphere, &sphere, 1e-12));
        let a = sphere_to_lie(&p, 0.3).unwrap();
        let b = sphere_to_lie(&p, 0.7).unwrap();
        assert!(!oriented_contact(&a, &b, 1e-6));
        assert_abs_diff_eq!(lie_inner(&a, &b).unwrap(), 1.0 - 0.4f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn cross_ratio_examples() {
        let k = ProjParam::finite;
        let half = cross_ratio(k(-1.0), k(0.0), k(1.0), ProjParam::INFINITY).unwrap();
        assert_abs_diff_eq!(half, 0.5, epsilon = 1e-15);
        let (alpha, beta) = (0.3f64.sqrt(), 0.7f64.sqrt());
        let pt = cross_ratio(k(-alpha / beta), k(0.0), k(beta / alpha), ProjParam::INFINITY).unwrap();
        assert_abs_diff_eq!(pt, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(cross_ratio(k(1.0), k(2.0), k(3.0), k(4.0)).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(
            cross_ratio(k(1.0), k(1.0), k(3.0), k(4.0)).unwrap_err(),
            Error::DegenerateCrossRatio
        );
    }

    #[test]
    fn parallel_examples() {
        assert_eq!(parallel_matrix(0.0, 4), DMatrix::identity(7, 7));
        let prod = parallel_matrix(0.3, 4) * parallel_matrix(-1.1, 4);
        assert_abs_diff_eq!(prod, parallel_matrix(-0.8, 4), epsilon = 1e-12);
        let p = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let moved = sphere_to_lie(&p, 0.2).unwrap().transformed(&parallel_matrix(0.5, 4));
        assert_abs_diff_eq!(moved.x, sphere_to_lie(&p, 0.7).unwrap().x, epsilon = 1e-15);
    }

    #[test]
    fn zero_scale_transform_is_identity() {
        assert_eq!(random_lie_transform(3, 5, 0.0), DMatrix::identity(8, 8));
    }

    #[test]
    fn expm_matches_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]);
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)], 3f64.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 0)], 3f64.sin(), epsilon = 1e-13);
    }

    #[test]
    fn mobius_transform_keeps_point_spheres() {
        let b = random_mobius_transform(11, 4, 0.8);
        let mut rng = rng::stream(1, 0);
        for _ in 0..20 {
            let p = rng::unit_vector(&mut rng, 5);
            let image = sphere_to_lie(&p, 0.0).unwrap().transformed(&b);
            assert!(image.is_point_sphere(1e-12));
            assert!(image.on_quadric(1e-12));
        }
    }

    #[test]
    fn legendre_line_examples() {
        let f = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let xi = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let line = legendre_line(&f, &xi).unwrap();
        assert_eq!(lie_inner(&line.k1, &line.k2).unwrap(), 0.0);
        assert!(line.k1.is_point_sphere(0.0));
        let theta = 0.9;
        let k = curvature_sphere(&line, theta);
        let center = &f * theta.cos() + &xi * theta.sin();
        assert_abs_diff_eq!(k.x.rows(1, 3).into_owned(), center, epsilon = 1e-15);
        assert!(k.on_quadric(1e-14));
        assert!(oriented_contact(&k, &line.k1, 1e-14));
        assert!(oriented_contact(&k, &line.k2, 1e-14));
        assert_eq!(curvature_sphere(&line, 0.0), line.k1);
        assert!(legendre_line(&f, &f).is_err());
    }

    #[test]
    fn reread_identity_and_parallel() {
        let mut rng = rng::stream(5, 0);
        let line = random_line(&mut rng, 6);
        let thetas = [3.0 * FRAC_PI_4, FRAC_PI_2, FRAC_PI_4, 1e-3];
        let same = reread_curvatures(&DMatrix::identity(9, 9), &line, &thetas).unwrap();
        for (p, &t) in same.iter().zip(&thetas) {
            assert_abs_diff_eq!(p.c, t.cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(p.s, t.sin(), epsilon = 1e-15);
        }
        let shift = 0.37;
        let moved = reread_curvatures(&parallel_matrix(shift, 6), &line, &thetas).unwrap();
        for (p, &t) in moved.iter().zip(&thetas) {
            assert_abs_diff_eq!(p.c, (t + shift).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(p.s, (t + shift).sin(), epsilon = 1e-12);
        }
    }

    fn distinct_thetas() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(0.0f64..PI).prop_filter("separated", |t| {
            let mut s = t.to_vec();
            s.sort_by(f64::total_cmp);
            s.windows(2).all(|w| w[1] - w[0] > 0.05) && s[0] + PI - s[3] > 0.05
        })
    }

    proptest! {
        #[test]
        fn transforms_preserve_metric(seed in 0u64..10_000, n in 2usize..8) {
            let b = random_lie_transform(seed, n, 1.0);
            prop_assert!(metric_defect(&b) < 1e-9);
            let mut rng = rng::stream(seed, 1);
            let p = rng::unit_vector(&mut rng, n + 1);
            let x = sphere_to_lie(&p, rng.random_range(-3.0..3.0)).unwrap().transformed(&b);
            prop_assert!(x.on_quadric(1e-8));
        }

        #[test]
        fn cross_ratio_matches_finite_formula(k in prop::array::uniform4(-10.0f64..10.0)) {
            let gaps = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            prop_assume!(gaps.iter().all(|&(i, j)| (k[i] - k[j]).abs() > 1e-2));
            let direct = (k[0] - k[1]) * (k[3] - k[2]) / ((k[0] - k[2]) * (k[3] - k[1]));
            let p = k.map(ProjParam::finite);
            let cr = cross_ratio(p[0], p[1], p[2], p[3]).unwrap();
            prop_assert!((cr - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }

        #[test]
        fn ordered_cross_ratio_in_unit_interval(k in prop::array::uniform4(-10.0f64..10.0)) {
            let mut k = k.to_vec();
            k.sort_by(f64::total_cmp);
            prop_assume!(k.windows(2).all(|w| w[1] - w[0] > 1e-3));
            let p: Vec<_> = k.iter().map(|&v| ProjParam::finite(v)).collect();
            let psi = cross_ratio(p[0], p[1], p[2], p[3]).unwrap();
            prop_assert!(psi > 0.0 && psi < 1.0);
        }

        #[test]
        fn cross_ratio_projectively_invariant(
            t in distinct_thetas(),
            m in prop::array::uniform4(-2.0f64..2.0),
        ) {
            let mat = [[m[0], m[1]], [m[2], m[3]]];
            prop_assume!((m[0] * m[3] - m[1] * m[2]).abs() > 0.1);
            let p = t.map(ProjParam::from_angle);
            let q = p.map(|x| x.mapped(&mat));
            let before = cross_ratio(p[0], p[1], p[2], p[3]).unwrap();
            let after = cross_ratio(q[0], q[1], q[2], q[3]).unwrap();
            prop_assert!((before - after).abs() <= 1e-10 * before.abs().max(1.0));
        }

        #[test]
        fn reread_preserves_cross_ratio(seed in 0u64..10_000, t in distinct_thetas()) {
            let b = random_lie_transform(seed, 6, 0.5);
            let mut rng = rng::stream(seed, 2);
            let line = random_line(&mut rng, 6);
            let out = match reread_curvatures(&b, &line, &t) {
                Ok(out) => out,
                Err(_) => return Ok(()),
            };
            let p = t.map(ProjParam::from_angle);
            let before = cross_ratio(p[0], p[1], p[2], p[3]).unwrap();
            let after = cross_ratio(out[0], out[1], out[2], out[3]).unwrap();
            prop_assert!((before - after).abs() <= 1e-8 * before.abs().max(1.0));
        }
    }
}

//! Critical points of linear height functions and the doubling of critical
//! points under the Hopf lift.
//!
//! For a unit `(a, b) ∈ H²` the height `f_ab(u, v) = Re(au + bv)` on
//! `h⁻¹(M)` restricted to the fiber over `(w, t)` is `Re(α z)` with
//! `α(w, t) = aw/√(2(1-t)) + b√((1-t)/2)`, so each fiber carries exactly two
//! critical points with values `±|α|` unless `α = 0`. Since
//! `|α|² = 1/2 + 1/2·ℓ_ab` with `ℓ_ab` the height on `M` in the direction
//! `h(ā, b̄)`, critical points of the lift sit over critical points of `ℓ_ab`
//! and there are twice as many.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{tangent_data, PointNormalMap};
use crate::hopfmo::{fiber_param_in, hopf_map, min_distance, Chart, Lift};
use crate::numkit::sym_eig;
use crate::quat::{pair_to_vec, vec_to_pair, Quaternion};
use crate::rng;
use crate::{Error, Result};

/// Converged points closer than this in the ambient space are merged.
pub const DEDUPE_RADIUS: f64 = 1e-4;
/// A critical point is accepted when the projected gradient is below this.
pub const GRADIENT_TOL: f64 = 1e-8;
/// Hessians with a larger condition number are degenerate.
pub const CONDITION_LIMIT: f64 = 1e6;
/// Default starts for bases (3-dimensional) and lifts (6-dimensional).
pub const BASE_STARTS: usize = 200;
pub const LIFT_STARTS: usize = 1000;

const MAX_ITER: usize = 80;
const MAX_STEP: f64 = 0.5;
const GRAD_STEP: f64 = 1e-5;
const HESS_STEP: f64 = 1e-4;

/// One critical point of a height function.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub params: Vec<f64>,
    pub ambient: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Number of negative Hessian eigenvalues.
    pub index: usize,
    pub condition: f64,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalSet {
    pub direction: Vec<f64>,
    pub points: Vec<CriticalPoint>,
    pub starts: usize,
    pub converged: usize,
}

impl CriticalSet {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// True if every critical point found is nondegenerate.
    pub fn is_generic(&self) -> bool {
        self.points.iter().all(|p| p.nondegenerate)
    }

    /// Critical values, ascending.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.points.iter().map(|p| p.value).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Number of critical points of each Morse index.
    pub fn index_counts(&self, dim: usize) -> Vec<usize> {
        let mut c = vec![0; dim + 1];
        for p in &self.points {
            c[p.index.min(dim)] += 1;
        }
        c
    }
}

fn height<M: PointNormalMap + ?Sized>(map: &M, dir: &DVector<f64>, q: &[f64]) -> f64 {
    map.point(q).dot(dir)
}

fn param_gradient<M: PointNormalMap + ?Sized>(map: &M, dir: &DVector<f64>, q: &[f64]) -> DVector<f64> {
    let mut p = q.to_vec();
    DVector::from_iterator(
        q.len(),
        (0..q.len()).map(|i| {
            p[i] = q[i] + GRAD_STEP;
            let fp = height(map, dir, &p);
            p[i] = q[i] - GRAD_STEP;
            let fm = height(map, dir, &p);
            p[i] = q[i];
            (fp - fm) / (2.0 * GRAD_STEP)
        }),
    )
}

fn param_hessian<M: PointNormalMap + ?Sized>(map: &M, dir: &DVector<f64>, q: &[f64], g0: &DVector<f64>) -> DMatrix<f64> {
    let n = q.len();
    let mut h = DMatrix::zeros(n, n);
    let mut p = q.to_vec();
    for j in 0..n {
        p[j] = q[j] + HESS_STEP;
        let gj = param_gradient(map, dir, &p);
        p[j] = q[j];
        h.set_column(j, &((gj - g0) / HESS_STEP));
    }
    (&h + h.transpose()) * 0.5
}

/// Intrinsic gradient `Uᵀ dir` in an orthonormal tangent frame, together
/// with the map from frame coordinates to parameter displacements.
fn intrinsic_gradient<M: PointNormalMap + ?Sized>(
    map: &M,
    dir: &DVector<f64>,
    q: &[f64],
    dim: usize,
) -> Option<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
    let td = tangent_data(map, q, dim).ok()?;
    let g = param_gradient(map, dir, q);
    let r = td.param_velocity.transpose() * &g;
    r.iter().all(|x| x.is_finite()).then_some((r, td.param_velocity, g))
}

/// Levenberg–Marquardt on the intrinsic gradient of the height, stepping
/// along the tangent frame. Returns the converged parameters, or `None`.
fn descend<M: PointNormalMap + ?Sized>(map: &M, dir: &DVector<f64>, q0: Vec<f64>, dim: usize) -> Option<Vec<f64>> {
    let mut q = q0;
    let (mut r, mut p, mut g) = intrinsic_gradient(map, dir, &q, dim)?;
    let mut lambda = 1e-6;
    for _ in 0..MAX_ITER {
        if r.norm() < 1e-11 {
            return Some(q);
        }
        let h = p.transpose() * param_hessian(map, dir, &q, &g) * &p;
        let h = (&h + h.transpose()) * 0.5;
        let hh = &h * &h;
        let rhs = -(&h * &r);
        let mut accepted = false;
        for _ in 0..12 {
            let a = &hh + DMatrix::identity(dim, dim) * lambda;
            let Some(mut step) = a.cholesky().map(|c| c.solve(&rhs)) else {
                lambda *= 10.0;
                continue;
            };
            let len = step.norm();
            if len > MAX_STEP {
                step *= MAX_STEP / len;
            }
            let dq = &p * step;
            let trial: Vec<f64> = q.iter().zip(dq.iter()).map(|(a, b)| a + b).collect();
            if let Some((rt, pt, gt)) = intrinsic_gradient(map, dir, &trial, dim) {
                if rt.norm() < r.norm() {
                    (q, r, p, g) = (trial, rt, pt, gt);
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (r.norm() < GRADIENT_TOL).then_some(q)
}

fn classify<M: PointNormalMap + ?Sized>(map: &M, dir: &DVector<f64>, q: Vec<f64>, dim: usize) -> Option<CriticalPoint> {
    let (r, p, g) = intrinsic_gradient(map, dir, &q, dim)?;
    let gradient_norm = r.norm();
    if gradient_norm >= GRADIENT_TOL {
        return None;
    }
    let h = param_hessian(map, dir, &q, &g);
    let hr = p.transpose() * h * &p;
    let eig = sym_eig(&((&hr + hr.transpose()) * 0.5)).ok()?;
    let amax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amin = eig.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let condition = if amin > 0.0 { amax / amin } else { f64::INFINITY };
    let x = map.point(&q);
    Some(CriticalPoint {
        value: x.dot(dir),
        ambient: x.as_slice().to_vec(),
        params: q,
        gradient_norm,
        index: eig.values.iter().filter(|v| **v < 0.0).count(),
        condition,
        nondegenerate: condition <= CONDITION_LIMIT,
    })
}

/// Multi-start search for the critical points of `x ↦ dir·x` on the image of
/// `map` (a `dim`-dimensional manifold).
pub fn height_critical_points<M: PointNormalMap + ?Sized>(
    map: &M,
    dim: usize,
    dir: &DVector<f64>,
    starts: usize,
    seed: u64,
) -> Result<CriticalSet> {
    if dir.len() != map.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.ambient_dim(),
            found: dir.len(),
        });
    }
    let norm = dir.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    let found: Vec<Option<CriticalPoint>> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let q0 = map.sample_params(&mut r);
            descend(map, dir, q0, dim).and_then(|q| classify(map, dir, q, dim))
        })
        .collect();
    let converged = found.iter().filter(|p| p.is_some()).count();
    if 2 * converged < starts {
        return Err(Error::UnreliableSearch { converged, starts });
    }
    let mut points: Vec<CriticalPoint> = Vec::new();
    for p in found.into_iter().flatten() {
        let near = points.iter().position(|o| {
            o.ambient.iter().zip(&p.ambient).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < DEDUPE_RADIUS
        });
        match near {
            Some(k) if p.gradient_norm < points[k].gradient_norm => points[k] = p,
            Some(_) => {}
            None => points.push(p),
        }
    }
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(CriticalSet {
        direction: dir.as_slice().to_vec(),
        points,
        starts,
        converged,
    })
}

/// The two critical points of `f_ab` on one fiber.
#[derive(Debug, Clone, Serialize)]
pub struct FiberCritical {
    pub alpha: [f64; 4],
    /// `|α|` and `-|α|`.
    pub value_plus: f64,
    pub value_minus: f64,
    /// Fiber coordinates `z` attaining them (`z̄ = ±α/|α|`).
    pub z_plus: [f64; 4],
    pub z_minus: [f64; 4],
    pub degenerate: bool,
}

/// `α(w, t) = aw/√(2(1-t)) + b√((1-t)/2)`.
pub fn alpha(a: Quaternion, b: Quaternion, w: Quaternion, t: f64) -> Result<Quaternion> {
    if t > 1.0 - 1e-8 {
        return Err(Error::ChartDomain { t });
    }
    Ok((a * w).scale(1.0 / (2.0 * (1.0 - t)).sqrt()) + b.scale(((1.0 - t) / 2.0).sqrt()))
}

/// Critical values of `f_ab` on the fiber over `(w, t)`.
pub fn fiber_critical_values(a: Quaternion, b: Quaternion, w: Quaternion, t: f64) -> Result<FiberCritical> {
    let norm = (a.norm_sq() + b.norm_sq()).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    let al = alpha(a, b, w, t)?;
    let n = al.norm();
    let degenerate = n < 1e-12;
    let zp = if degenerate { Quaternion::ONE } else { al.conj().scale(1.0 / n) };
    Ok(FiberCritical {
        alpha: al.to_array(),
        value_plus: n,
        value_minus: -n,
        z_plus: zp.to_array(),
        z_minus: (-zp).to_array(),
        degenerate,
    })
}

/// `Re(au + bv)`.
pub fn lift_height(a: Quaternion, b: Quaternion, u: Quaternion, v: Quaternion) -> f64 {
    (a * u + b * v).re()
}

/// `|α(w, t)|²`.
pub fn g_ab(a: Quaternion, b: Quaternion, w: Quaternion, t: f64) -> Result<f64> {
    Ok(alpha(a, b, w, t)?.norm_sq())
}

/// `ℓ_ab(w, t) = (w, t)·h(ā, b̄)`.
pub fn ell_ab(a: Quaternion, b: Quaternion, w: Quaternion, t: f64) -> f64 {
    let d = base_direction(a, b);
    let x = pair_to_vec_base(w, t);
    x.dot(&d)
}

fn pair_to_vec_base(w: Quaternion, t: f64) -> DVector<f64> {
    let w = w.to_array();
    DVector::from_vec(vec![w[0], w[1], w[2], w[3], t])
}

/// `h(ā, b̄)`, the base direction matching the lift direction `(a, b)`.
pub fn base_direction(a: Quaternion, b: Quaternion) -> DVector<f64> {
    hopf_map(&pair_to_vec(a.conj(), b.conj()))
}

/// `(ā, b̄)` as a vector of `R⁸`, so that `f_ab(x) = lift_direction·x`.
pub fn lift_direction(a: Quaternion, b: Quaternion) -> DVector<f64> {
    pair_to_vec(a.conj(), b.conj())
}

/// Max and min of `f_ab` over the fiber above `(w, t)`, by brute force: a
/// grid of about `grid` points in Hopf coordinates on `S³`, then repeated
/// local refinement around the best grid points.
pub fn fiber_grid_extrema(a: Quaternion, b: Quaternion, w: Quaternion, t: f64, grid: usize) -> Result<(f64, f64)> {
    let f = |c: [f64; 3]| -> Result<f64> {
        let (eta, x1, x2) = (c[0], c[1], c[2]);
        let z = Quaternion::new(eta.cos() * x1.cos(), eta.cos() * x1.sin(), eta.sin() * x2.cos(), eta.sin() * x2.sin());
        let (u, v) = fiber_param_in(Chart::AwayFromNorth, w, t, z)?;
        Ok(lift_height(a, b, u, v))
    };
    let k = ((grid as f64).cbrt().round() as usize).max(2);
    let steps = [
        std::f64::consts::FRAC_PI_2 / (k - 1) as f64,
        std::f64::consts::TAU / k as f64,
        std::f64::consts::TAU / k as f64,
    ];
    let mut best_max = ([0.0; 3], f64::NEG_INFINITY);
    let mut best_min = ([0.0; 3], f64::INFINITY);
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let c = [i as f64 * steps[0], j as f64 * steps[1], l as f64 * steps[2]];
                let v = f(c)?;
                if v > best_max.1 {
                    best_max = (c, v);
                }
                if v < best_min.1 {
                    best_min = (c, v);
                }
            }
        }
    }
    let refine = |start: ([f64; 3], f64), sign: f64| -> Result<f64> {
        let (mut c, mut v) = (start.0, sign * start.1);
        let mut h = steps;
        for _ in 0..40 {
            let centre = c;
            for di in -3i32..=3 {
                for dj in -3i32..=3 {
                    for dl in -3i32..=3 {
                        let p = [
                            centre[0] + di as f64 * h[0] / 3.0,
                            centre[1] + dj as f64 * h[1] / 3.0,
                            centre[2] + dl as f64 * h[2] / 3.0,
                        ];
                        let fv = sign * f(p)?;
                        if fv > v {
                            v = fv;
                            c = p;
                        }
                    }
                }
            }
            for s in &mut h {
                *s *= 0.5;
            }
        }
        Ok(sign * v)
    };
    Ok((refine(best_max, 1.0)?, refine(best_min, -1.0)?))
}

/// Counts for one direction of the doubling check.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionRecord {
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub base_count: Option<usize>,
    pub lift_count: Option<usize>,
    pub base_values: Vec<f64>,
    pub lift_values: Vec<f64>,
    /// Largest mismatch between lift critical values and `±√(1/2 + ℓ/2)` over
    /// base critical values `ℓ`.
    pub value_error: Option<f64>,
    /// Directions redrawn before this one because of degenerate Hessians or
    /// a vanishing `α` on the surface.
    pub redraws: usize,
    pub excluded: Option<String>,
}

impl DirectionRecord {
    pub fn doubled(&self) -> bool {
        matches!((self.base_count, self.lift_count), (Some(b), Some(l)) if l == 2 * b)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TautReport {
    pub directions: Vec<DirectionRecord>,
    pub doubled: usize,
    pub excluded: usize,
    /// Most common `(base, lift)` pair among included directions.
    pub modal_pair: Option<(usize, usize)>,
    pub modal_fraction: f64,
    pub max_value_error: f64,
}

impl TautReport {
    /// At most 20% exclusions and every included direction doubled.
    pub fn passes(&self) -> bool {
        let n = self.directions.len();
        5 * self.excluded <= n && self.doubled + self.excluded == n
    }
}

/// Search options for [`taut_doubling_check`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TautOptions {
    pub base_starts: usize,
    pub lift_starts: usize,
    pub max_redraws: usize,
}

impl Default for TautOptions {
    fn default() -> Self {
        TautOptions {
            base_starts: BASE_STARTS,
            lift_starts: LIFT_STARTS,
            max_redraws: 5,
        }
    }
}

/// For `count` random unit `(a, b)`, count critical points of `ℓ_ab` on the
/// base and of `f_ab` on the lift, and compare the lift values with
/// `±√(1/2 + ℓ/2)`.
pub fn taut_doubling_check<B: PointNormalMap + Clone>(
    base: &B,
    count: usize,
    seed: u64,
    opts: TautOptions,
) -> Result<TautReport> {
    let lift = Lift::new(base.clone())?;
    let base_dim = base.ambient_dim() - 2;
    let mut dir_rng = rng::stream(seed, u64::MAX);
    let mut directions = Vec::with_capacity(count);
    for k in 0..count {
        let mut redraws = 0;
        let record = loop {
            let d = rng::unit_vector(&mut dir_rng, 8);
            let (ac, bc) = vec_to_pair(d.as_slice());
            let (a, b) = (ac.conj(), bc.conj());
            let ell = base_direction(a, b);
            let sub = seed.wrapping_mul(1_000_003).wrapping_add(k as u64 * 64 + redraws as u64);
            // α vanishes on the fiber over -h(ā, b̄).
            let bad = min_distance(base, &(-&ell)) < 1e-3;
            let base_set = height_critical_points(base, base_dim, &ell, opts.base_starts, sub);
            let lift_set = height_critical_points(&lift, base_dim + 3, &d, opts.lift_starts, sub ^ 0x5eed);
            let degenerate = bad
                || matches!(&base_set, Ok(s) if !s.is_generic())
                || matches!(&lift_set, Ok(s) if !s.is_generic());
            if degenerate && redraws < opts.max_redraws {
                redraws += 1;
                continue;
            }
            let mut rec = DirectionRecord {
                a: a.to_array(),
                b: b.to_array(),
                base_count: None,
                lift_count: None,
                base_values: Vec::new(),
                lift_values: Vec::new(),
                value_error: None,
                redraws,
                excluded: None,
            };
            match (base_set, lift_set) {
                (Ok(bs), Ok(ls)) => {
                    rec.base_count = Some(bs.count());
                    rec.lift_count = Some(ls.count());
                    rec.base_values = bs.values();
                    rec.lift_values = ls.values();
                    let mut predicted: Vec<f64> = rec
                        .base_values
                        .iter()
                        .flat_map(|l| {
                            let m = (0.5 + 0.5 * l).max(0.0).sqrt();
                            [m, -m]
                        })
                        .collect();
                    predicted.sort_by(f64::total_cmp);
                    if predicted.len() == rec.lift_values.len() {
                        rec.value_error = Some(
                            predicted
                                .iter()
                                .zip(&rec.lift_values)
                                .map(|(p, v)| (p - v).abs())
                                .fold(0.0, f64::max),
                        );
                    }
                    if degenerate {
                        rec.excluded = Some("degenerate height function".into());
                    }
                }
                (Err(e), _) | (_, Err(e)) => rec.excluded = Some(e.to_string()),
            }
            break rec;
        };
        directions.push(record);
    }
    let excluded = directions.iter().filter(|d| d.excluded.is_some()).count();
    let included: Vec<&DirectionRecord> = directions.iter().filter(|d| d.excluded.is_none()).collect();
    let doubled = included.iter().filter(|d| d.doubled() && d.value_error.is_some_and(|e| e < 1e-6)).count();
    let mut tally: Vec<((usize, usize), usize)> = Vec::new();
    for d in &included {
        if let (Some(b), Some(l)) = (d.base_count, d.lift_count) {
            match tally.iter_mut().find(|(p, _)| *p == (b, l)) {
                Some((_, c)) => *c += 1,
                None => tally.push(((b, l), 1)),
            }
        }
    }
    let modal = tally.iter().max_by_key(|(_, c)| *c).copied();
    let max_value_error = included.iter().filter_map(|d| d.value_error).fold(0.0, f64::max);
    Ok(TautReport {
        modal_pair: modal.map(|m| m.0),
        modal_fraction: modal.map_or(0.0, |m| m.1 as f64 / count.max(1) as f64),
        directions,
        doubled,
        excluded,
        max_value_error,
    })
}

/// Random unit `(a, b)` and a random base point `(w, t)` with `t < 1 - margin`.
pub fn random_fiber_instance<R: Rng>(rng: &mut R, margin: f64) -> (Quaternion, Quaternion, Quaternion, f64) {
    let d = rng::unit_vector(rng, 8);
    let (a, b) = vec_to_pair(d.as_slice());
    loop {
        let x = rng::unit_vector(rng, 5);
        if x[4] < 1.0 - margin {
            return (a, b, Quaternion::from_slice(&x.as_slice()[..4]), x[4]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopfmo::Cyclide;
    use approx::assert_abs_diff_eq;
    use rand_chacha::ChaCha8Rng;

    struct Sphere2;

    impl PointNormalMap for Sphere2 {
        fn param_dim(&self) -> usize {
            3
        }
        fn ambient_dim(&self) -> usize {
            3
        }
        fn point(&self, q: &[f64]) -> DVector<f64> {
            DVector::from_column_slice(q).normalize()
        }
        fn normal(&self, q: &[f64]) -> DVector<f64> {
            self.point(q)
        }
        fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
            rng::unit_vector(rng, 3).as_slice().to_vec()
        }
    }

    #[test]
    fn sphere_has_two_poles() {
        let dir = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let set = height_critical_points(&Sphere2, 2, &dir, 40, 1).unwrap();
        assert_eq!(set.count(), 2);
        assert!(set.is_generic());
        assert_abs_diff_eq!(set.values()[0], -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(set.values()[1], 1.0, epsilon = 1e-10);
        assert_eq!(set.index_counts(2), vec![1, 0, 1]);
    }

    #[test]
    fn cyclide_has_four() {
        let c = Cyclide::new(0.6).unwrap();
        let mut r = rng::stream(2, 0);
        let dir = rng::unit_vector(&mut r, 5);
        let set = height_critical_points(&c, 3, &dir, 100, 2).unwrap();
        assert_eq!(set.count(), 4);
        assert_eq!(set.index_counts(3), vec![1, 1, 1, 1]);
    }

    #[test]
    fn dimension_checked() {
        let dir = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            height_critical_points(&Sphere2, 2, &dir, 4, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn g_is_affine_in_height() {
        let mut r = rng::stream(3, 0);
        for _ in 0..100 {
            let (a, b, w, t) = random_fiber_instance(&mut r, 1e-3);
            let g = g_ab(a, b, w, t).unwrap();
            assert_abs_diff_eq!(g, 0.5 + 0.5 * ell_ab(a, b, w, t), epsilon = 1e-12);
        }
    }

    #[test]
    fn fiber_values_attained_and_squared() {
        let mut r = rng::stream(4, 0);
        for _ in 0..20 {
            let (a, b, w, t) = random_fiber_instance(&mut r, 1e-2);
            let fc = fiber_critical_values(a, b, w, t).unwrap();
            for (z, val) in [(fc.z_plus, fc.value_plus), (fc.z_minus, fc.value_minus)] {
                let (u, v) = crate::hopfmo::fiber_param(w, t, Quaternion::from_slice(&z)).unwrap();
                let f = lift_height(a, b, u, v);
                assert_abs_diff_eq!(f, val, epsilon = 1e-12);
                assert_abs_diff_eq!(f * f, g_ab(a, b, w, t).unwrap(), epsilon = 1e-10);
                let x = pair_to_vec(u, v);
                assert_abs_diff_eq!(x.dot(&lift_direction(a, b)), f, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn grid_oracle_agrees() {
        let mut r = rng::stream(5, 0);
        for _ in 0..5 {
            let (a, b, w, t) = random_fiber_instance(&mut r, 1e-2);
            let fc = fiber_critical_values(a, b, w, t).unwrap();
            let (hi, lo) = fiber_grid_extrema(a, b, w, t, 10_000).unwrap();
            assert_abs_diff_eq!(hi, fc.value_plus, epsilon = 1e-8);
            assert_abs_diff_eq!(lo, fc.value_minus, epsilon = 1e-8);
        }
    }

    #[test]
    fn alpha_vanishes_over_antipode_of_direction() {
        let mut r = rng::stream(6, 0);
        for _ in 0..20 {
            let d = rng::unit_vector(&mut r, 8);
            let (a, b) = vec_to_pair(d.as_slice());
            let x = -base_direction(a, b);
            if x[4] > 1.0 - 1e-3 {
                continue;
            }
            let w = Quaternion::from_slice(&x.as_slice()[..4]);
            let fc = fiber_critical_values(a, b, w, x[4]).unwrap();
            assert!(fc.degenerate);
            let y = rng::unit_vector(&mut r, 5);
            let fy = fiber_critical_values(a, b, Quaternion::from_slice(&y.as_slice()[..4]), y[4]).unwrap();
            assert!(!fy.degenerate);
        }
        assert!(matches!(
            fiber_critical_values(Quaternion::ONE, Quaternion::default(), Quaternion::default(), 1.0),
            Err(Error::ChartDomain { .. })
        ));
    }
}

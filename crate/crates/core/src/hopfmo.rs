//! Hopf lifts of Dupin hypersurfaces of `S⁴` to `S⁷`.
//!
//! `h(u, v) = (2uv̄, |u|² - |v|²)` maps `S⁷ ⊂ H × H` onto `S⁴ ⊂ H × R` with
//! great 3-sphere fibers. If `M ⊂ S⁴` has principal curvatures `cot θ`, the
//! lift `h⁻¹(M)` has `cot(θ/2)` and `cot((θ+π)/2)` with the same
//! multiplicities. The base surfaces here are the isoparametric product
//! `S¹(r) × S²(s)`, the Cartan hypersurface (a tube over the Veronese
//! surface), and their images under a non-isometric conformal map.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{arccot, Hypersurface, PointNormalMap, Tube};
use crate::liegeo::{cross_ratio, ProjParam};
use crate::numkit::orthogonal_complement;
use crate::quat::{pair_to_vec, vec_to_pair, Quaternion};
use crate::rng;
use crate::{Error, Result};

/// Distance kept from the excluded pole of a fiber chart.
pub const CHART_MARGIN: f64 = 1e-2;
/// Warped surfaces must stay this far from the projection pole.
pub const POLE_CLEARANCE: f64 = 1e-3;

/// `(2uv̄, |u|² - |v|²)` for a point of `S⁷`.
pub fn hopf(u: Quaternion, v: Quaternion) -> Result<DVector<f64>> {
    let norm = (u.norm_sq() + v.norm_sq()).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    Ok(hopf_map(&pair_to_vec(u, v)))
}

/// The Hopf formula on all of `R⁸` (no unit check).
pub fn hopf_map(x: &DVector<f64>) -> DVector<f64> {
    let (u, v) = vec_to_pair(x.as_slice());
    let w = (u * v.conj()).scale(2.0);
    DVector::from_vec(vec![w.w, w.x, w.y, w.z, u.norm_sq() - v.norm_sq()])
}

/// Analytic `5 × 8` differential of [`hopf_map`].
pub fn hopf_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
    let (u, v) = vec_to_pair(x.as_slice());
    let mut j = DMatrix::zeros(5, 8);
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        let e = Quaternion::from_slice(&e);
        let du = (e * v.conj()).scale(2.0).to_array();
        let dv = (u * e.conj()).scale(2.0).to_array();
        for r in 0..4 {
            j[(r, k)] = du[r];
            j[(r, k + 4)] = dv[r];
        }
        j[(4, k)] = 2.0 * u.to_array()[k];
        j[(4, k + 4)] = -2.0 * v.to_array()[k];
    }
    j
}

/// Local trivializations of `h⁻¹(S⁴ - pole) ≅ (S⁴ - pole) × S³`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    /// `u = wz/√(2(1-t))`, `v = √((1-t)/2) z`; excludes `(0, 1)`.
    AwayFromNorth,
    /// `u = √((1+t)/2) z`, `v = w̄z/√(2(1+t))`; excludes `(0, -1)`.
    AwayFromSouth,
}

/// Point `(u, v)` over `(w, t)` with fiber coordinate `z` in `chart`.
pub fn fiber_param_in(chart: Chart, w: Quaternion, t: f64, z: Quaternion) -> Result<(Quaternion, Quaternion)> {
    match chart {
        Chart::AwayFromNorth => {
            if t > 1.0 - 1e-8 {
                return Err(Error::ChartDomain { t });
            }
            let a = (2.0 * (1.0 - t)).sqrt();
            Ok(((w * z).scale(1.0 / a), z.scale(((1.0 - t) / 2.0).sqrt())))
        }
        Chart::AwayFromSouth => {
            if t < -1.0 + 1e-8 {
                return Err(Error::ChartDomain { t });
            }
            let a = (2.0 * (1.0 + t)).sqrt();
            Ok((z.scale(((1.0 + t) / 2.0).sqrt()), (w.conj() * z).scale(1.0 / a)))
        }
    }
}

/// [`fiber_param_in`] for the chart excluding `(0, 1)`.
pub fn fiber_param(w: Quaternion, t: f64, z: Quaternion) -> Result<(Quaternion, Quaternion)> {
    fiber_param_in(Chart::AwayFromNorth, w, t, z)
}

fn split_base(x: &DVector<f64>) -> (Quaternion, f64) {
    (Quaternion::from_slice(&x.as_slice()[..4]), x[4])
}

/// A point of `h⁻¹(M)` with its base point and fiber coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftPoint {
    pub base: DVector<f64>,
    pub fiber: Quaternion,
    pub ambient: DVector<f64>,
}

impl LiftPoint {
    pub fn new(chart: Chart, base: &DVector<f64>, fiber: Quaternion) -> Result<Self> {
        let (w, t) = split_base(base);
        let (u, v) = fiber_param_in(chart, w, t, fiber)?;
        Ok(LiftPoint {
            base: base.clone(),
            fiber,
            ambient: pair_to_vec(u, v),
        })
    }
}

/// The product `S¹(r) × S²(s) ⊂ S⁴`, `s = √(1 - r²)`, parametrized by
/// `(θ, a)` with `n = a/|a| ∈ S²`. Principal curvatures are `s/r` along the
/// circle and `-r/s` (multiplicity 2) along the sphere factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cyclide {
    pub r: f64,
}

impl Cyclide {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!("cyclide radius must lie in (0, 1), got {r}")));
        }
        Ok(Cyclide { r })
    }

    pub fn s(&self) -> f64 {
        (1.0 - self.r * self.r).sqrt()
    }

    /// `(s/r, 1)` and `(-r/s, 2)`, ascending.
    pub fn curvatures(&self) -> Vec<(f64, usize)> {
        vec![(-self.r / self.s(), 2), (self.s() / self.r, 1)]
    }

    fn unit(q: &[f64]) -> Vector3<f64> {
        Vector3::new(q[1], q[2], q[3]).normalize()
    }
}

impl PointNormalMap for Cyclide {
    fn param_dim(&self) -> usize {
        4
    }
    fn ambient_dim(&self) -> usize {
        5
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        let n = Self::unit(q);
        let (s, r) = (self.s(), self.r);
        DVector::from_vec(vec![r * q[0].cos(), r * q[0].sin(), s * n[0], s * n[1], s * n[2]])
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        let n = Self::unit(q);
        let (s, r) = (self.s(), self.r);
        DVector::from_vec(vec![-s * q[0].cos(), -s * q[0].sin(), r * n[0], r * n[1], r * n[2]])
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let a = rng::unit_vector(rng, 3);
        vec![theta, a[0], a[1], a[2]]
    }
}

impl Hypersurface for Cyclide {}

/// `σ⁻¹ ∘ (c ·) ∘ σ` with `σ` the stereographic projection from `pole`.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub c: f64,
    pub pole: DVector<f64>,
    /// Rows: orthonormal basis of `pole⊥`.
    basis: DMatrix<f64>,
}

impl Dilation {
    pub fn new(c: f64, pole: &DVector<f64>) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {c}")));
        }
        let norm = pole.norm();
        if norm == 0.0 {
            return Err(Error::NotUnit { norm });
        }
        let pole = pole / norm;
        let comp = orthogonal_complement(&[pole.clone()], pole.len());
        let basis = DMatrix::from_columns(&comp).transpose();
        Ok(Dilation { c, pole, basis })
    }

    /// Default pole, chosen away from the example surfaces.
    pub fn default_pole() -> DVector<f64> {
        DVector::from_vec(vec![0.3, -0.2, 0.4, 0.1, 0.8]).normalize()
    }

    pub fn stereo(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * x / (1.0 - self.pole.dot(x))
    }

    pub fn stereo_inv(&self, y: &DVector<f64>) -> DVector<f64> {
        let n2 = y.norm_squared();
        (self.basis.transpose() * y * 2.0 + &self.pole * (n2 - 1.0)) / (n2 + 1.0)
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.stereo_inv(&(self.stereo(x) * self.c))
    }

    /// Analytic differential at `x`.
    pub fn differential(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = 1.0 - self.pole.dot(x);
        let qx = &self.basis * x;
        let ds = &self.basis / d + &qx * self.pole.transpose() / (d * d);
        let y = qx / d * self.c;
        let n2 = y.norm_squared();
        let num = self.basis.transpose() * &y * 2.0 + &self.pole * (n2 - 1.0);
        let dnum = self.basis.transpose() * 2.0 + &self.pole * y.transpose() * 2.0;
        let dsi = dnum / (n2 + 1.0) - num * y.transpose() * (2.0 / ((n2 + 1.0) * (n2 + 1.0)));
        dsi * ds * self.c
    }

    pub fn pole_distance(&self, x: &DVector<f64>) -> f64 {
        (x - &self.pole).norm()
    }
}

/// Approximate distance from `target` to the image of `map`: best of 2000
/// samples, each of the ten closest then refined by gradient descent.
pub fn min_distance<M: PointNormalMap + ?Sized>(map: &M, target: &DVector<f64>) -> f64 {
    let mut rng = rng::stream(0x901e, 0);
    let dist = |q: &[f64]| (map.point(q) - target).norm_squared();
    let mut starts: Vec<(f64, Vec<f64>)> = (0..2000)
        .map(|_| {
            let q = map.sample_params(&mut rng);
            (dist(&q), q)
        })
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for (mut f, mut q) in starts.into_iter().take(10) {
        let mut step = 0.1;
        for _ in 0..300 {
            let h = 1e-6;
            let grad: Vec<f64> = (0..q.len())
                .map(|i| {
                    let mut qp = q.clone();
                    qp[i] += h;
                    (dist(&qp) - f) / h
                })
                .collect();
            let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gn < 1e-14 {
                break;
            }
            loop {
                let trial: Vec<f64> = q.iter().zip(&grad).map(|(a, g)| a - step * g / gn).collect();
                let ft = dist(&trial);
                if ft < f {
                    q = trial;
                    f = ft;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
            if step < 1e-12 {
                break;
            }
        }
        best = best.min(f);
    }
    best.sqrt()
}

/// Conformal image of a hypersurface of `S⁴` under a [`Dilation`]; the
/// normal is the normalized pushforward of the base normal.
#[derive(Debug, Clone)]
pub struct MobiusWarp<B> {
    pub base: B,
    pub map: Dilation,
}

impl<B: PointNormalMap> MobiusWarp<B> {
    /// Warp with the default pole. Fails if sampled base points come within
    /// [`POLE_CLEARANCE`] of the pole.
    pub fn new(base: B, c: f64) -> Result<Self> {
        Self::with_pole(base, c, &Dilation::default_pole())
    }

    pub fn with_pole(base: B, c: f64, pole: &DVector<f64>) -> Result<Self> {
        let map = Dilation::new(c, pole)?;
        let distance = min_distance(&base, &map.pole);
        if distance < POLE_CLEARANCE {
            return Err(Error::PoleProximity { distance });
        }
        Ok(MobiusWarp { base, map })
    }
}

impl<B: PointNormalMap> PointNormalMap for MobiusWarp<B> {
    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        self.map.apply(&self.base.point(q))
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        let x = self.base.point(q);
        (self.map.differential(&x) * self.base.normal(q)).normalize()
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let q = self.base.sample_params(rng);
            if self.map.pole_distance(&self.base.point(&q)) >= CHART_MARGIN {
                return q;
            }
        }
    }
}

impl<B: PointNormalMap> Hypersurface for MobiusWarp<B> {}

/// Traceless symmetric 3×3 matrices → `R⁵`, isometric for the Frobenius norm.
pub fn sym_to_r5(x: &nalgebra::Matrix3<f64>) -> DVector<f64> {
    let r2 = std::f64::consts::SQRT_2;
    DVector::from_vec(vec![
        r2 * x[(0, 1)],
        r2 * x[(0, 2)],
        r2 * x[(1, 2)],
        (x[(0, 0)] - x[(1, 1)]) / r2,
        (x[(0, 0)] + x[(1, 1)] - 2.0 * x[(2, 2)]) / 6f64.sqrt(),
    ])
}

/// Veronese surface `p ↦ √(3/2)(ppᵀ - I/3)`, an embedding of `RP²` in `S⁴`.
pub fn veronese(p: &Vector3<f64>) -> DVector<f64> {
    let m = (p * p.transpose() - nalgebra::Matrix3::identity() / 3.0) * 1.5f64.sqrt();
    sym_to_r5(&m)
}

/// Unit normal bundle of the Veronese surface, parametrized by
/// `(a, b) ∈ R³ × R³`: `p = a/|a|`, `q = b` made orthogonal to `p` and
/// normalized, normal `(2qqᵀ - I + ppᵀ)/√2`. Principal curvatures along
/// every unit normal are `±1/√3`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VeroneseBundle;

impl VeroneseBundle {
    fn frame(q: &[f64]) -> (Vector3<f64>, Vector3<f64>) {
        let p = Vector3::new(q[0], q[1], q[2]).normalize();
        let b = Vector3::new(q[3], q[4], q[5]);
        ((p), (b - p * p.dot(&b)).normalize())
    }
}

impl PointNormalMap for VeroneseBundle {
    fn param_dim(&self) -> usize {
        6
    }
    fn ambient_dim(&self) -> usize {
        5
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        veronese(&Self::frame(q).0)
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        let (p, n) = Self::frame(q);
        let m = (n * n.transpose() * 2.0 - nalgebra::Matrix3::identity() + p * p.transpose())
            / std::f64::consts::SQRT_2;
        sym_to_r5(&m)
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let a = rng::unit_vector(rng, 3);
        let b = rng::unit_vector(rng, 3);
        a.iter().chain(b.iter()).copied().collect()
    }
}

/// Focal radii of the Cartan family along the Veronese normals.
pub const CARTAN_FOCAL_RADII: [f64; 3] = [0.0, std::f64::consts::FRAC_PI_3, 2.0 * std::f64::consts::FRAC_PI_3];

/// The Cartan isoparametric hypersurface: tube of radius `t` over the
/// Veronese surface, curvatures `cot(π/3 - t)`, `cot(2π/3 - t)`, `-cot t`.
pub fn cartan_tube(t: f64) -> Result<Tube<VeroneseBundle>> {
    let pi = std::f64::consts::PI;
    for r in CARTAN_FOCAL_RADII {
        let d = (t - r).rem_euclid(pi);
        if d.min(pi - d) < crate::engine::FOCAL_WARNING {
            return Err(Error::InvalidParameter(format!("tube radius {t} is a focal radius of the Veronese surface")));
        }
    }
    Ok(Tube::new(VeroneseBundle, t))
}

/// Closed-form curvatures of [`cartan_tube`], ascending.
pub fn cartan_curvatures(t: f64) -> Vec<f64> {
    let mut k: Vec<f64> = CARTAN_FOCAL_RADII.iter().map(|r| 1.0 / (r - t).tan()).collect();
    k.sort_by(f64::total_cmp);
    k
}

/// The example base surfaces of `S⁴`.
#[derive(Debug, Clone)]
pub enum S4Base {
    Cyclide(Cyclide),
    WarpedCyclide(MobiusWarp<Cyclide>),
    Cartan(Tube<VeroneseBundle>),
    WarpedCartan(MobiusWarp<Tube<VeroneseBundle>>),
}

impl S4Base {
    /// Cyclide with radius `r`, warped by `c` unless `c == 1`.
    pub fn cyclide(r: f64, c: f64) -> Result<Self> {
        let base = Cyclide::new(r)?;
        if c == 1.0 {
            Ok(S4Base::Cyclide(base))
        } else {
            Ok(S4Base::WarpedCyclide(MobiusWarp::new(base, c)?))
        }
    }

    /// Cartan tube of radius `t`, warped by `c` unless `c == 1`.
    pub fn cartan(t: f64, c: f64) -> Result<Self> {
        let base = cartan_tube(t)?;
        if c == 1.0 {
            Ok(S4Base::Cartan(base))
        } else {
            Ok(S4Base::WarpedCartan(MobiusWarp::new(base, c)?))
        }
    }

    /// Number of distinct principal curvatures.
    pub fn g(&self) -> usize {
        match self {
            S4Base::Cyclide(_) | S4Base::WarpedCyclide(_) => 2,
            S4Base::Cartan(_) | S4Base::WarpedCartan(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            S4Base::Cyclide(_) => "cyclide",
            S4Base::WarpedCyclide(_) => "warped cyclide",
            S4Base::Cartan(_) => "cartan tube",
            S4Base::WarpedCartan(_) => "warped cartan tube",
        }
    }

    fn inner(&self) -> &dyn PointNormalMap {
        match self {
            S4Base::Cyclide(s) => s,
            S4Base::WarpedCyclide(s) => s,
            S4Base::Cartan(s) => s,
            S4Base::WarpedCartan(s) => s,
        }
    }
}

impl PointNormalMap for S4Base {
    fn param_dim(&self) -> usize {
        self.inner().param_dim()
    }
    fn ambient_dim(&self) -> usize {
        5
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        self.inner().point(q)
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        self.inner().normal(q)
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.inner().sample_params(rng)
    }
}

impl Hypersurface for S4Base {}

/// `h⁻¹(M) ⊂ S⁷` for a hypersurface `M ⊂ S⁴`, parametrized by the base
/// parameters followed by `b ∈ R⁴` (fiber coordinate `z = b/|b|`).
/// The normal is the horizontal lift of the base normal.
#[derive(Debug, Clone)]
pub struct Lift<B> {
    pub base: B,
    pub chart: Chart,
}

impl<B: PointNormalMap> Lift<B> {
    /// Pick the fiber chart whose excluded pole stays at least
    /// [`CHART_MARGIN`] away from sampled base points.
    pub fn new(base: B) -> Result<Self> {
        let mut rng = rng::stream(0xc4a7, 0);
        let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..4000 {
            let t = base.point(&base.sample_params(&mut rng))[4];
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        let chart = if tmax < 1.0 - CHART_MARGIN {
            Chart::AwayFromNorth
        } else if tmin > -1.0 + CHART_MARGIN {
            Chart::AwayFromSouth
        } else {
            return Err(Error::ChartDomain { t: tmax });
        };
        Ok(Lift { base, chart })
    }

    pub fn with_chart(base: B, chart: Chart) -> Self {
        Lift { base, chart }
    }

    /// Lift parameters over base parameters `q` at fiber coordinate `z`.
    pub fn params(&self, q: &[f64], z: Quaternion) -> Vec<f64> {
        let mut p = q.to_vec();
        p.extend(z.to_array());
        p
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], Quaternion) {
        let k = self.base.param_dim();
        let z = Quaternion::from_slice(&p[k..k + 4]);
        (&p[..k], z.scale(1.0 / z.norm()))
    }

    pub fn lift_point(&self, p: &[f64]) -> Result<LiftPoint> {
        let (q, z) = self.split(p);
        LiftPoint::new(self.chart, &self.base.point(q), z)
    }
}

impl<B: PointNormalMap> PointNormalMap for Lift<B> {
    fn param_dim(&self) -> usize {
        self.base.param_dim() + 4
    }
    fn ambient_dim(&self) -> usize {
        8
    }
    fn point(&self, p: &[f64]) -> DVector<f64> {
        match self.lift_point(p) {
            Ok(lp) => lp.ambient,
            Err(_) => DVector::from_element(8, f64::NAN),
        }
    }
    fn normal(&self, p: &[f64]) -> DVector<f64> {
        let x = self.point(p);
        let (q, _) = self.split(p);
        // On S⁷, dh·dhᵀ = 4I, so dhᵀξ/4 is the horizontal vector over ξ.
        (hopf_jacobian(&x).transpose() * self.base.normal(q)).normalize()
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let q = self.base.sample_params(rng);
        let z = rng::unit_vector(rng, 4);
        self.params(&q, Quaternion::from_slice(z.as_slice()))
    }
}

impl<B: PointNormalMap> Hypersurface for Lift<B> {}

/// `cot(θ/2)` and `cot((θ+π)/2)` for `κ = cot θ`.
pub fn lifted_pair(kappa: f64) -> (f64, f64) {
    let theta = arccot(kappa);
    (1.0 / (theta / 2.0).tan(), 1.0 / ((theta + std::f64::consts::PI) / 2.0).tan())
}

/// `2 / (1 + cos(θ - α))`.
pub fn psi_mo(theta: f64, alpha: f64) -> Result<f64> {
    let d = 1.0 + (theta - alpha).cos();
    if d.abs() < 1e-12 {
        return Err(Error::DegenerateCrossRatio);
    }
    Ok(2.0 / d)
}

/// Cross-ratio `(λ⁺-λ⁻)(μ⁺-μ⁻) / ((λ⁺-μ⁻)(μ⁺-λ⁻))`.
pub fn pairing_cross_ratio(lp: f64, lm: f64, mp: f64, mm: f64) -> Result<f64> {
    let f = ProjParam::finite;
    cross_ratio(f(lp), f(lm), f(mm), f(mp))
}

/// Comparison of a lift's spectrum with the half-angle prediction.
#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub base_values: Vec<f64>,
    pub base_multiplicities: Vec<usize>,
    pub lifted_values: Vec<f64>,
    pub lifted_multiplicities: Vec<usize>,
    /// Predicted `(value, multiplicity)`, ascending.
    pub expected: Vec<(f64, usize)>,
    pub max_error: f64,
    pub count_ok: bool,
    pub multiplicity_ok: bool,
    /// Ascending-order cross-ratio of the four lifted curvatures (`g = 2`).
    pub psi_ordered: Option<f64>,
    /// Pairing cross-ratio of the lifted curvatures, grouped by base curvature.
    pub psi_mo_pairing: Option<f64>,
    /// `2/(1 + cos(θ - α))` from the base curvatures.
    pub psi_mo_formula: Option<f64>,
}

impl LiftReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.count_ok && self.multiplicity_ok && self.max_error < tol
    }
}

/// Pair up lifted curvatures by the base curvature they cover: angles below
/// `π/2` are `θ/2`, angles above are `(θ+π)/2`. Returns `(λ⁺, λ⁻, θ)`
/// triples sorted by `θ`.
fn group_lifted(values: &[f64]) -> Option<Vec<(f64, f64, f64)>> {
    let half = std::f64::consts::FRAC_PI_2;
    let mut plus: Vec<(f64, f64)> = Vec::new();
    let mut minus: Vec<(f64, f64)> = Vec::new();
    for &v in values {
        let phi = arccot(v);
        if phi < half {
            plus.push((v, 2.0 * phi));
        } else {
            minus.push((v, 2.0 * phi - std::f64::consts::PI));
        }
    }
    if plus.len() != minus.len() {
        return None;
    }
    plus.sort_by(|a, b| a.1.total_cmp(&b.1));
    minus.sort_by(|a, b| a.1.total_cmp(&b.1));
    Some(plus.iter().zip(&minus).map(|(p, m)| (p.0, m.0, 0.5 * (p.1 + m.1))).collect())
}

/// Spectrum of the lift at base parameters `q` and fiber `z` against the
/// prediction from the base spectrum at `q`.
pub fn lifted_spectrum_check<B: PointNormalMap + Clone>(
    lift: &Lift<B>,
    q: &[f64],
    z: Quaternion,
    cluster_tol: f64,
) -> Result<LiftReport>
where
    Lift<B>: Hypersurface,
    B: Hypersurface,
{
    let base = lift.base.principal_spectrum(q, cluster_tol)?;
    let up = lift.principal_spectrum(&lift.params(q, z), cluster_tol)?;
    let mut expected = Vec::new();
    for c in &base.spectrum.clusters {
        let (a, b) = lifted_pair(c.value);
        expected.push((a, c.multiplicity));
        expected.push((b, c.multiplicity));
    }
    expected.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lifted_values = up.spectrum.values();
    let lifted_multiplicities = up.spectrum.multiplicities();
    let count_ok = lifted_values.len() == expected.len();
    let (max_error, multiplicity_ok) = if count_ok {
        let err = lifted_values
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b.0).abs())
            .fold(0.0, f64::max);
        let mult = lifted_multiplicities.iter().zip(&expected).all(|(a, b)| *a == b.1);
        (err, mult)
    } else {
        (f64::INFINITY, false)
    };
    let (mut psi_ordered, mut psi_mo_pairing, mut psi_mo_formula) = (None, None, None);
    if base.spectrum.len() == 2 && lifted_values.len() == 4 {
        psi_ordered = crate::engine::lie_curvature_of(&lifted_values).ok();
        if let Some(groups) = group_lifted(&lifted_values) {
            let (lp, lm, _) = groups[0];
            let (mp, mm, _) = groups[1];
            psi_mo_pairing = pairing_cross_ratio(lp, lm, mp, mm).ok();
        }
        let v = base.spectrum.values();
        psi_mo_formula = psi_mo(arccot(v[0]), arccot(v[1])).ok();
    }
    Ok(LiftReport {
        base_values: base.spectrum.values(),
        base_multiplicities: base.spectrum.multiplicities(),
        lifted_values,
        lifted_multiplicities,
        expected,
        max_error,
        count_ok,
        multiplicity_ok,
        psi_ordered,
        psi_mo_pairing,
        psi_mo_formula,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{jacobian_fd, numerical_rank};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    #[test]
    fn hopf_examples() {
        let one = Quaternion::ONE;
        let zero = Quaternion::default();
        assert_eq!(hopf(one, zero).unwrap().as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
        let h = hopf(one.scale(FRAC_1_SQRT_2), one.scale(FRAC_1_SQRT_2)).unwrap();
        assert_abs_diff_eq!(h, DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]), epsilon = 1e-15);
        assert!(hopf(one, one).is_err());
        let mut r = rng::stream(3, 0);
        for _ in 0..20 {
            let x = rng::unit_vector(&mut r, 8);
            assert_abs_diff_eq!(hopf_map(&x).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hopf_jacobian_rank_and_conformality() {
        let x = pair_to_vec(Quaternion::ONE.scale(FRAC_1_SQRT_2), Quaternion::ONE.scale(FRAC_1_SQRT_2));
        let fd = jacobian_fd(|p| hopf_map(&DVector::from_column_slice(p)), x.as_slice(), 1e-5).unwrap();
        assert_abs_diff_eq!(fd, hopf_jacobian(&x), epsilon = 1e-9);
        // Restricted to the sphere the rank is 4; the radial direction adds one.
        assert_eq!(numerical_rank(&fd, 1e-8), 5);
        let mut r = rng::stream(4, 0);
        let y = rng::unit_vector(&mut r, 8);
        let j = hopf_jacobian(&y);
        assert_abs_diff_eq!(&j * j.transpose(), DMatrix::identity(5, 5) * 4.0, epsilon = 1e-12);
    }

    #[test]
    fn fiber_round_trip() {
        let mut r = rng::stream(5, 0);
        for chart in [Chart::AwayFromNorth, Chart::AwayFromSouth] {
            for _ in 0..20 {
                let b = rng::unit_vector(&mut r, 5);
                let z = Quaternion::from_slice(rng::unit_vector(&mut r, 4).as_slice());
                let (w, t) = split_base(&b);
                let (u, v) = fiber_param_in(chart, w, t, z).unwrap();
                assert_abs_diff_eq!(hopf(u, v).unwrap(), b, epsilon = 1e-10);
                assert_abs_diff_eq!(u.norm_sq() - v.norm_sq(), t, epsilon = 1e-12);
                let (u2, v2) = fiber_param_in(chart, w, t, -z).unwrap();
                assert_abs_diff_eq!(hopf(u2, v2).unwrap(), b, epsilon = 1e-10);
                assert_abs_diff_eq!(pair_to_vec(u2, v2), -pair_to_vec(u, v), epsilon = 1e-15);
            }
        }
        assert_eq!(
            fiber_param(Quaternion::default(), 1.0, Quaternion::ONE).unwrap_err(),
            Error::ChartDomain { t: 1.0 }
        );
    }

    #[test]
    fn cyclide_spectrum() {
        let c = Cyclide::new(0.6).unwrap();
        assert!(Cyclide::new(1.0).is_err());
        let mut r = rng::stream(6, 0);
        for _ in 0..5 {
            let q = c.sample_params(&mut r);
            let (x, n) = (c.point(&q), c.normal(&q));
            assert_abs_diff_eq!(x.norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-12);
            assert!(x.dot(&n).abs() < 1e-12);
            let spec = c.principal_spectrum(&q, 1e-4).unwrap();
            assert_eq!(spec.spectrum.multiplicities(), vec![2, 1]);
            assert_abs_diff_eq!(spec.spectrum.values()[0], -0.75, epsilon = 1e-8);
            assert_abs_diff_eq!(spec.spectrum.values()[1], 0.8 / 0.6, epsilon = 1e-8);
        }
    }

    #[test]
    fn dilation_properties() {
        let pole = Dilation::default_pole();
        let id = Dilation::new(1.0, &pole).unwrap();
        let mut r = rng::stream(7, 0);
        let x = rng::unit_vector(&mut r, 5);
        assert_abs_diff_eq!(id.apply(&x), x, epsilon = 1e-13);
        let d = Dilation::new(1.5, &pole).unwrap();
        let y = d.apply(&x);
        assert_abs_diff_eq!(y.norm(), 1.0, epsilon = 1e-13);
        let fd = jacobian_fd(|p| d.apply(&DVector::from_column_slice(p)), x.as_slice(), 1e-5).unwrap();
        assert_abs_diff_eq!(fd, d.differential(&x), epsilon = 1e-8);
        assert!(Dilation::new(0.0, &pole).is_err());
    }

    #[test]
    fn warped_cyclide_varies() {
        let w = MobiusWarp::new(Cyclide::new(0.6).unwrap(), 1.5).unwrap();
        let mut r = rng::stream(8, 0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..10 {
            let q = w.sample_params(&mut r);
            let spec = w.principal_spectrum(&q, 1e-4).unwrap();
            assert_eq!(spec.spectrum.len(), 2);
            lo = lo.min(spec.spectrum.values()[1]);
            hi = hi.max(spec.spectrum.values()[1]);
        }
        assert!(hi - lo > 0.01);
        let near = MobiusWarp::with_pole(Cyclide::new(0.6).unwrap(), 1.5, &DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0, 0.0]));
        assert!(matches!(near, Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn veronese_on_sphere_and_antipodal() {
        let mut r = rng::stream(9, 0);
        for _ in 0..10 {
            let p = Vector3::from_column_slice(rng::unit_vector(&mut r, 3).as_slice());
            assert_abs_diff_eq!(veronese(&p).norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(veronese(&p), veronese(&-p), epsilon = 1e-15);
            let (x, y, z) = (p[0], p[1], p[2]);
            let s3 = 3f64.sqrt();
            let formula = DVector::from_vec(vec![
                s3 * x * y,
                s3 * x * z,
                s3 * y * z,
                s3 * (x * x - y * y) / 2.0,
                (x * x + y * y - 2.0 * z * z) / 2.0,
            ]);
            assert_abs_diff_eq!(veronese(&p), formula, epsilon = 1e-14);
        }
    }

    #[test]
    fn cartan_tube_spectrum() {
        let t = PI / 6.0;
        let tube = cartan_tube(t).unwrap();
        let expected = cartan_curvatures(t);
        let mut r = rng::stream(10, 0);
        for _ in 0..5 {
            let q = tube.sample_params(&mut r);
            let spec = tube.principal_spectrum(&q, 1e-4).unwrap();
            assert_eq!(spec.spectrum.multiplicities(), vec![1, 1, 1]);
            for (a, b) in spec.spectrum.values().iter().zip(&expected) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
            }
        }
        assert!(cartan_tube(PI / 3.0).is_err());
    }

    #[test]
    fn lift_geometry() {
        let lift = Lift::new(Cyclide::new(0.6).unwrap()).unwrap();
        let mut r = rng::stream(11, 0);
        let p = lift.sample_params(&mut r);
        let lp = lift.lift_point(&p).unwrap();
        assert_abs_diff_eq!(hopf_map(&lp.ambient), lift.base.point(&p[..4]), epsilon = 1e-10);
        let tangent = crate::engine::tangent_data(&lift, &p, 6).unwrap();
        let n = lift.normal(&p);
        assert!((tangent.frame.transpose() * &n).amax() < 1e-8);
        assert!(n.dot(&lp.ambient).abs() < 1e-12);
        // Horizontal: orthogonal to the fiber directions (z ↦ z e for imaginary e).
        let (u, v) = vec_to_pair(lp.ambient.as_slice());
        for e in [Quaternion::I, Quaternion::J, Quaternion::K] {
            let vertical = pair_to_vec(u * e, v * e);
            assert!((hopf_jacobian(&lp.ambient) * &vertical).amax() < 1e-12);
            assert!(vertical.dot(&n).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_doubles_cyclide_curvatures() {
        let lift = Lift::new(Cyclide::new(0.6).unwrap()).unwrap();
        let mut r = rng::stream(12, 0);
        let q = lift.base.sample_params(&mut r);
        let z = Quaternion::from_slice(rng::unit_vector(&mut r, 4).as_slice());
        let rep = lifted_spectrum_check(&lift, &q, z, 1e-4).unwrap();
        assert!(rep.passes(1e-5), "{rep:?}");
        assert_abs_diff_eq!(rep.psi_mo_pairing.unwrap(), 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(rep.psi_mo_formula.unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn psi_mo_examples() {
        assert_abs_diff_eq!(psi_mo(FRAC_PI_2, 0.0).unwrap(), 2.0, epsilon = 1e-15);
        assert!(psi_mo(PI, 0.0).is_err());
        let mut r = rng::stream(13, 0);
        for _ in 0..50 {
            let theta: f64 = r.random_range(0.05..3.1);
            let alpha: f64 = r.random_range(0.05..3.1);
            if (theta - alpha).abs() < 0.05 {
                continue;
            }
            let (lp, lm) = lifted_pair(1.0 / theta.tan());
            let (mp, mm) = lifted_pair(1.0 / alpha.tan());
            let direct = pairing_cross_ratio(lp, lm, mp, mm).unwrap();
            assert_abs_diff_eq!(direct, psi_mo(theta, alpha).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn focal_radii_double_cover() {
        let mut r = rng::stream(14, 0);
        for _ in 0..20 {
            let theta: f64 = r.random_range(0.01..PI - 0.01);
            let (a, b) = lifted_pair(1.0 / theta.tan());
            for phi in [arccot(a), arccot(b)] {
                let doubled = (2.0 * phi).rem_euclid(PI);
                assert_abs_diff_eq!(doubled, theta, epsilon = 1e-10);
            }
        }
    }
}

//! Shape operators and principal spectra of submanifolds of spheres.
//!
//! Two representations are supported:
//!
//! * [`ConstraintManifold`]: the zero set of smooth scalar constraints on the
//!   unit sphere `S^n ⊂ R^{n+1}`, with analytic gradients. The shape operator
//!   along a unit normal is obtained by extending the normal with fixed
//!   coefficients in the Gram–Schmidt normal frame and differencing it along
//!   Newton-projected curves.
//! * [`PointNormalMap`] / [`Hypersurface`]: explicit (possibly
//!   over-parametrized) maps `q ↦ (point, unit normal)`. The shape operator is
//!   read off the Jacobians of both maps through an SVD of the point Jacobian.
//!
//! The shape operator follows `df(AX) = -dξ(X)`, so the geodesic sphere of
//! radius `t` about `p` has principal curvature `cot t` for the normal
//! pointing towards `p`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::liegeo::{cross_ratio, ProjParam};
use crate::numkit::{
    self, jacobian_fd, orthogonal_complement, orthonormalize, pinv_solve, sym_eig,
    sym_eig_clustered, ClusteredSpectrum, DEFAULT_FD_STEP,
};
use crate::rng;
use crate::{Error, Result};

/// Constraint residual accepted for sample points.
pub const POINT_TOL: f64 = 1e-10;
/// Newton projection target.
pub const PROJECTION_TOL: f64 = 1e-12;
pub const PROJECTION_MAX_ITER: usize = 50;
/// Shape operators whose antisymmetric part exceeds this are rejected.
pub const ASYMMETRY_LIMIT: f64 = 1e-5;
/// Tubes this close to a focal radius are flagged.
pub const FOCAL_WARNING: f64 = 1e-3;

pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub struct ScalarConstraint {
    pub name: String,
    pub value: ScalarFn,
    pub gradient: GradientFn,
}

impl ScalarConstraint {
    pub fn new<F, G>(name: impl Into<String>, value: F, gradient: G) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        ScalarConstraint {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl std::fmt::Debug for ScalarConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarConstraint").field("name", &self.name).finish()
    }
}

/// Zero set of `constraints` inside the unit sphere of `R^{ambient_dim}`.
#[derive(Debug, Clone)]
pub struct ConstraintManifold {
    pub ambient_dim: usize,
    pub constraints: Vec<ScalarConstraint>,
}

/// Orthonormal splitting of `T_x S^n` into tangent and normal parts.
#[derive(Debug, Clone)]
pub struct Split {
    pub tangent: Vec<DVector<f64>>,
    pub normal: Vec<DVector<f64>>,
}

/// Symmetrized shape-operator matrix with the frame it is written in.
#[derive(Debug, Clone)]
pub struct ShapeOperator {
    /// `k × k`, symmetric.
    pub matrix: DMatrix<f64>,
    /// `N × k`, orthonormal columns spanning the tangent space.
    pub frame: DMatrix<f64>,
    /// Max-abs entry of the antisymmetric part before symmetrization,
    /// relative to `max(1, max|S|)`.
    pub asymmetry: f64,
}

/// Principal curvatures at one (point, normal).
#[derive(Debug, Clone)]
pub struct ShapeResult {
    pub spectrum: ClusteredSpectrum,
    /// Multiplicity of `κ = ∞` induced by codimension (`codim - 1`).
    pub infinite_mult: usize,
    pub tangent_frame: DMatrix<f64>,
    pub shape: DMatrix<f64>,
}

impl ShapeResult {
    /// Number of distinct principal curvatures, counting `∞` when present.
    pub fn distinct(&self) -> usize {
        self.spectrum.len() + usize::from(self.infinite_mult > 0)
    }

    /// Ascending projective parameters, `∞` last.
    pub fn params(&self) -> Vec<ProjParam> {
        let mut p: Vec<ProjParam> = self.spectrum.values().into_iter().map(ProjParam::finite).collect();
        if self.infinite_mult > 0 {
            p.push(ProjParam::INFINITY);
        }
        p
    }

    pub fn negated(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.spectrum.values().iter().map(|x| -x).collect();
        v.reverse();
        v
    }
}

/// Cross-ratio of the four ascending principal curvatures (`∞` last).
pub fn lie_curvature(spec: &ShapeResult) -> Result<f64> {
    let p = spec.params();
    if p.len() != 4 {
        return Err(Error::CurvatureCount { g: p.len() });
    }
    cross_ratio(p[0], p[1], p[2], p[3])
}

/// Cross-ratio of four ascending finite curvatures.
pub fn lie_curvature_of(kappas: &[f64]) -> Result<f64> {
    if kappas.len() != 4 {
        return Err(Error::CurvatureCount { g: kappas.len() });
    }
    let p: Vec<ProjParam> = kappas.iter().map(|&k| ProjParam::finite(k)).collect();
    cross_ratio(p[0], p[1], p[2], p[3])
}

/// `θ ∈ (0, π)` with `cot θ = κ`; `κ = ∞` maps to `0`.
pub fn arccot(kappa: f64) -> f64 {
    if kappa.is_infinite() {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2 - kappa.atan()
    }
}

/// Principal curvature `cot(θ - t)` of the parallel hypersurface at
/// distance `t`, for a base curvature `κ = cot θ`.
pub fn parallel_shift(kappa: f64, t: f64) -> f64 {
    let theta = arccot(kappa) - t;
    theta.cos() / theta.sin()
}

/// The focal radius in `(0, π)` within [`FOCAL_WARNING`] of `t`, if any,
/// for base curvatures `kappas` (include `∞` for codimension > 1).
pub fn focal_radius_warning(kappas: &[f64], t: f64) -> Option<f64> {
    let pi = std::f64::consts::PI;
    kappas.iter().map(|&k| arccot(k)).find_map(|theta| {
        let d = (t - theta).rem_euclid(pi);
        (d.min(pi - d) < FOCAL_WARNING).then_some(theta)
    })
}

fn project_off(v: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    v - x * x.dot(v)
}

impl ConstraintManifold {
    pub fn new(ambient_dim: usize, constraints: Vec<ScalarConstraint>) -> Self {
        ConstraintManifold {
            ambient_dim,
            constraints,
        }
    }

    /// Codimension inside the sphere.
    pub fn codim(&self) -> usize {
        self.constraints.len()
    }

    /// Dimension of the manifold.
    pub fn dim(&self) -> usize {
        self.ambient_dim - 1 - self.codim()
    }

    /// Max of `|cᵢ(x)|` and `| |x|² - 1 |`.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.value)(x).abs())
            .fold((x.norm_squared() - 1.0).abs(), f64::max)
    }

    fn system(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.constraints.len();
        let n = self.ambient_dim;
        let mut f = DVector::zeros(k + 1);
        let mut j = DMatrix::zeros(k + 1, n);
        for (i, c) in self.constraints.iter().enumerate() {
            f[i] = (c.value)(x);
            j.row_mut(i).copy_from(&(c.gradient)(x).transpose());
        }
        f[k] = 0.5 * (x.norm_squared() - 1.0);
        j.row_mut(k).copy_from(&x.transpose());
        (f, j)
    }

    /// Newton iteration with minimum-norm steps onto the constraint set,
    /// continued until the residual stops improving.
    pub fn project(&self, x0: &DVector<f64>) -> Result<DVector<f64>> {
        if x0.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: x0.len(),
            });
        }
        let mut x = x0.clone();
        let mut residual = f64::INFINITY;
        for _ in 0..PROJECTION_MAX_ITER {
            let (f, j) = self.system(&x);
            let r = f.amax();
            if !r.is_finite() {
                break;
            }
            if r <= PROJECTION_TOL && r >= residual * 0.5 {
                return Ok(x);
            }
            residual = r;
            if r == 0.0 {
                return Ok(x);
            }
            let step = pinv_solve(&j, &f, 1e-13);
            x -= step;
        }
        let r = self.residual(&x);
        if r <= PROJECTION_TOL {
            return Ok(x);
        }
        Err(Error::ProjectionFailed {
            iterations: PROJECTION_MAX_ITER,
            residual: r,
        })
    }

    /// Random point: Gaussian draw normalized and projected, with retries.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
        let mut last = Error::ProjectionFailed {
            iterations: 0,
            residual: f64::INFINITY,
        };
        for _ in 0..32 {
            let x0 = rng::unit_vector(rng, self.ambient_dim);
            match self.project(&x0) {
                Ok(x) => {
                    if self.tangent_normal_split(&x).is_ok() {
                        return Ok(x);
                    }
                }
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// Orthonormal normal frame at `x` (inside `T_x S^n`), Gram–Schmidt on
    /// the constraint gradients in their declared order.
    pub fn normal_frame(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let grads: Vec<DVector<f64>> = self
            .constraints
            .iter()
            .map(|c| project_off(&(c.gradient)(x), x))
            .collect();
        orthonormalize(&grads)
    }

    pub fn tangent_normal_split(&self, x: &DVector<f64>) -> Result<Split> {
        let residual = self.residual(x);
        if residual > POINT_TOL {
            return Err(Error::ConstraintViolation { residual });
        }
        let normal = self.normal_frame(x)?;
        let mut fixed = vec![x.normalize()];
        fixed.extend(normal.iter().cloned());
        let tangent = orthogonal_complement(&fixed, self.ambient_dim);
        Ok(Split { tangent, normal })
    }

    /// Coefficients of `xi` in the normal frame, after checking it is a unit
    /// normal vector.
    pub fn normal_coefficients(&self, normal: &[DVector<f64>], xi: &DVector<f64>) -> Result<Vec<f64>> {
        let norm = xi.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotUnit { norm });
        }
        let coeffs: Vec<f64> = normal.iter().map(|n| n.dot(xi)).collect();
        let mut rest = xi.clone();
        for (c, n) in coeffs.iter().zip(normal) {
            rest.axpy(-c, n, 1.0);
        }
        let component = rest.norm();
        if component > 1e-8 {
            return Err(Error::NotNormal { component });
        }
        Ok(coeffs)
    }

    fn normal_field(&self, y: &DVector<f64>, coeffs: &[f64]) -> Result<DVector<f64>> {
        let frame = self.normal_frame(y)?;
        let mut xi = DVector::zeros(self.ambient_dim);
        for (c, n) in coeffs.iter().zip(&frame) {
            xi.axpy(*c, n, 1.0);
        }
        Ok(xi)
    }

    /// Matrix of `A_ξ` in the tangent frame at `x`.
    pub fn shape_operator(&self, x: &DVector<f64>, xi: &DVector<f64>) -> Result<ShapeOperator> {
        self.shape_operator_with_step(x, xi, DEFAULT_FD_STEP)
    }

    pub fn shape_operator_with_step(
        &self,
        x: &DVector<f64>,
        xi: &DVector<f64>,
        step: f64,
    ) -> Result<ShapeOperator> {
        let split = self.tangent_normal_split(x)?;
        let coeffs = self.normal_coefficients(&split.normal, xi)?;
        let k = split.tangent.len();
        let mut derivs = Vec::with_capacity(k);
        for t in &split.tangent {
            let plus = self.project(&(x + t * step))?;
            let minus = self.project(&(x - t * step))?;
            let d = (self.normal_field(&plus, &coeffs)? - self.normal_field(&minus, &coeffs)?)
                / (2.0 * step);
            derivs.push(d);
        }
        let raw = DMatrix::from_fn(k, k, |i, j| -split.tangent[i].dot(&derivs[j]));
        let frame = if k == 0 {
            DMatrix::zeros(self.ambient_dim, 0)
        } else {
            DMatrix::from_columns(&split.tangent)
        };
        finish_shape(raw, frame)
    }

    pub fn principal_spectrum(&self, x: &DVector<f64>, xi: &DVector<f64>, tol: f64) -> Result<ShapeResult> {
        let shape = self.shape_operator(x, xi)?;
        let spectrum = sym_eig_clustered(&shape.matrix, tol)?;
        Ok(ShapeResult {
            spectrum,
            infinite_mult: self.codim().saturating_sub(1),
            tangent_frame: shape.frame,
            shape: shape.matrix,
        })
    }

    /// Random unit normal at `x`, uniform on the normal sphere.
    pub fn random_normal(&self, x: &DVector<f64>, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
        let split = self.tangent_normal_split(x)?;
        let w = rng::unit_vector(rng, split.normal.len());
        let mut xi = DVector::zeros(self.ambient_dim);
        for (c, n) in w.iter().zip(&split.normal) {
            xi.axpy(*c, n, 1.0);
        }
        Ok(xi)
    }

    /// Local chart of the tube of radius `t` around the base point `x`, with
    /// the chart origin corresponding to the unit normal `xi`.
    pub fn tube_chart(&self, x: &DVector<f64>, xi: &DVector<f64>, t: f64) -> Result<TubeChart<'_>> {
        let split = self.tangent_normal_split(x)?;
        let coeffs = self.normal_coefficients(&split.normal, xi)?;
        Ok(TubeChart {
            base: self,
            origin: x.clone(),
            tangent: split.tangent,
            coeffs,
            t,
        })
    }
}

fn finish_shape(raw: DMatrix<f64>, frame: DMatrix<f64>) -> Result<ShapeOperator> {
    let scale = raw.amax().max(1.0);
    let asymmetry = if raw.is_empty() {
        0.0
    } else {
        ((&raw - raw.transpose()) * 0.5).amax() / scale
    };
    if asymmetry > ASYMMETRY_LIMIT {
        return Err(Error::Asymmetry {
            value: asymmetry,
            limit: ASYMMETRY_LIMIT,
        });
    }
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(ShapeOperator {
        matrix,
        frame,
        asymmetry,
    })
}

/// A smooth map `q ↦ (point, unit normal)` into `S^n × S^n`.
///
/// Over-parametrization is allowed; only the rank of the point map matters.
pub trait PointNormalMap: Sync {
    fn param_dim(&self) -> usize;
    /// `n + 1` for maps into `S^n`.
    fn ambient_dim(&self) -> usize;
    fn point(&self, q: &[f64]) -> DVector<f64>;
    fn normal(&self, q: &[f64]) -> DVector<f64>;
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

impl<T: PointNormalMap + ?Sized> PointNormalMap for &T {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn ambient_dim(&self) -> usize {
        (**self).ambient_dim()
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        (**self).point(q)
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        (**self).normal(q)
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (**self).sample_params(rng)
    }
}

/// Jacobian of the point map and its leading singular data.
pub struct TangentData {
    pub jacobian: DMatrix<f64>,
    /// `N × k` orthonormal tangent frame.
    pub frame: DMatrix<f64>,
    /// `p × k`: column `i` is a parameter velocity whose image is `frame[:, i]`.
    pub param_velocity: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// Tangent data of a `dim`-dimensional immersion.
pub fn tangent_data<M: PointNormalMap + ?Sized>(map: &M, q: &[f64], dim: usize) -> Result<TangentData> {
    let jacobian = jacobian_fd(|p| map.point(p), q, DEFAULT_FD_STEP)?;
    let svd = numkit::truncated_svd(&jacobian, dim);
    let top = svd.all_sigma.first().copied().unwrap_or(0.0);
    let rank = svd.all_sigma.iter().filter(|&&s| s > 1e-6 * top.max(1e-300)).count();
    if rank != dim {
        return Err(Error::TangentRank { rank, dim });
    }
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(dim, svd.sigma.iter().map(|s| 1.0 / s)));
    Ok(TangentData {
        param_velocity: &svd.v * inv,
        frame: svd.u,
        jacobian,
        singular_values: svd.all_sigma,
    })
}

/// An oriented hypersurface of `S^n` given by a [`PointNormalMap`].
pub trait Hypersurface: PointNormalMap {
    fn dim(&self) -> usize {
        self.ambient_dim() - 2
    }

    fn shape_operator(&self, q: &[f64]) -> Result<ShapeOperator> {
        let dim = self.dim();
        let tangent = tangent_data(self, q, dim)?;
        let jn = jacobian_fd(|p| self.normal(p), q, DEFAULT_FD_STEP)?;
        let raw = -(tangent.frame.transpose() * jn * &tangent.param_velocity);
        finish_shape(raw, tangent.frame)
    }

    fn principal_spectrum(&self, q: &[f64], tol: f64) -> Result<ShapeResult> {
        let shape = self.shape_operator(q)?;
        let spectrum = sym_eig_clustered(&shape.matrix, tol)?;
        Ok(ShapeResult {
            spectrum,
            infinite_mult: 0,
            tangent_frame: shape.frame,
            shape: shape.matrix,
        })
    }
}

/// Parallel hypersurface / tube `cos t · x + sin t · ξ` over a point-normal
/// map, with unit normal `-sin t · x + cos t · ξ`.
///
/// Over a hypersurface this is the parallel hypersurface at distance `t`;
/// over a parametrized unit normal bundle of a submanifold it is the tube of
/// radius `t`.
#[derive(Debug, Clone)]
pub struct Tube<B> {
    pub base: B,
    pub t: f64,
}

impl<B: PointNormalMap> Tube<B> {
    pub fn new(base: B, t: f64) -> Self {
        Tube { base, t }
    }
}

impl<B: PointNormalMap> PointNormalMap for Tube<B> {
    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        let (s, c) = self.t.sin_cos();
        self.base.point(q) * c + self.base.normal(q) * s
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        let (s, c) = self.t.sin_cos();
        self.base.normal(q) * c - self.base.point(q) * s
    }
    fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.base.sample_params(rng)
    }
}

impl<B: PointNormalMap> Hypersurface for Tube<B> {}

/// Local parametrization of the unit normal bundle of a constraint manifold
/// near `(origin, ξ)`, pushed out to radius `t`.
///
/// Parameters are `(s, w)`: tangent coordinates `s ∈ R^k` giving the base
/// point `project(origin + Σ sᵢ Tᵢ)`, and normal coefficients `w ∈ R^c`
/// (normalized) in the Gram–Schmidt normal frame. The chart origin is
/// `(0, coeffs(ξ))`. At `t = 0` the point map is the base projection.
#[derive(Debug, Clone)]
pub struct TubeChart<'a> {
    pub base: &'a ConstraintManifold,
    pub origin: DVector<f64>,
    pub tangent: Vec<DVector<f64>>,
    pub coeffs: Vec<f64>,
    pub t: f64,
}

impl TubeChart<'_> {
    pub fn origin_params(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.tangent.len()];
        q.extend(self.coeffs.iter().copied());
        q
    }

    pub fn with_radius(&self, t: f64) -> Self {
        TubeChart { t, ..self.clone() }
    }

    fn base_and_normal(&self, q: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let k = self.tangent.len();
        let mut y = self.origin.clone();
        for (s, t) in q[..k].iter().zip(&self.tangent) {
            y.axpy(*s, t, 1.0);
        }
        let nan = || DVector::from_element(self.origin.len(), f64::NAN);
        let y = match self.base.project(&y) {
            Ok(y) => y,
            Err(_) => return (nan(), nan()),
        };
        let w = &q[k..];
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let frame = match self.base.normal_frame(&y) {
            Ok(f) => f,
            Err(_) => return (nan(), nan()),
        };
        let mut xi = DVector::zeros(y.len());
        for (c, n) in w.iter().zip(&frame) {
            xi.axpy(c / wn, n, 1.0);
        }
        (y, xi)
    }
}

impl PointNormalMap for TubeChart<'_> {
    fn param_dim(&self) -> usize {
        self.tangent.len() + self.coeffs.len()
    }
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim
    }
    fn point(&self, q: &[f64]) -> DVector<f64> {
        let (y, xi) = self.base_and_normal(q);
        let (s, c) = self.t.sin_cos();
        y * c + xi * s
    }
    fn normal(&self, q: &[f64]) -> DVector<f64> {
        let (y, xi) = self.base_and_normal(q);
        let (s, c) = self.t.sin_cos();
        xi * c - y * s
    }
    fn sample_params(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.origin_params()
    }
}

impl Hypersurface for TubeChart<'_> {}

/// `dim - rank` of the point map's Jacobian at `q`: the number of directions
/// collapsed by the map. For the normal-bundle map at radius `t` this is the
/// multiplicity of the principal curvature `cot t`.
pub fn focal_nullity<M: PointNormalMap + ?Sized>(map: &M, q: &[f64], dim: usize, rel_tol: f64) -> Result<usize> {
    let j = jacobian_fd(|p| map.point(p), q, DEFAULT_FD_STEP)?;
    let s = numkit::singular_values(&j);
    let top = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&v| v > rel_tol * top).count();
    Ok(dim.saturating_sub(rank))
}

/// Eigenvector of `shape` for the eigenvalue nearest `target`, taken as the
/// projection of `prev` onto that eigenspace (so multiplicity > 1 is
/// handled continuously). Returns the unit frame-coordinate vector and the
/// cluster value.
fn principal_direction(
    shape: &DMatrix<f64>,
    target: f64,
    prev: Option<&DVector<f64>>,
    cluster_tol: f64,
) -> Result<(DVector<f64>, f64)> {
    let eig = sym_eig(shape)?;
    let members: Vec<usize> = (0..eig.values.len())
        .filter(|&i| (eig.values[i] - target).abs() < cluster_tol)
        .collect();
    let members = if members.is_empty() {
        let best = (0..eig.values.len())
            .min_by(|&a, &b| (eig.values[a] - target).abs().total_cmp(&(eig.values[b] - target).abs()))
            .ok_or(Error::CurvatureCount { g: 0 })?;
        vec![best]
    } else {
        members
    };
    let value = members.iter().map(|&i| eig.values[i]).sum::<f64>() / members.len() as f64;
    let basis: Vec<DVector<f64>> = members.iter().map(|&i| eig.vectors.column(i).into_owned()).collect();
    let dir = match prev {
        Some(p) => {
            let mut d = DVector::zeros(p.len());
            for b in &basis {
                d.axpy(b.dot(p), b, 1.0);
            }
            if d.norm() < 1e-8 {
                return Err(Error::NonFinite(" principal direction lost while tracing".into()));
            }
            d.normalize()
        }
        None => basis[0].clone(),
    };
    Ok((dir, value))
}

/// Largest drift of the principal curvature `target` along a curve traced
/// (RK4, `steps` steps of length `h`) tangent to its principal field.
pub fn dupin_drift<H: Hypersurface + ?Sized>(
    surface: &H,
    q0: &[f64],
    target: f64,
    h: f64,
    steps: usize,
    cluster_tol: f64,
) -> Result<f64> {
    let dim = surface.dim();
    // Velocity field in parameter space; the ambient direction is carried
    // between evaluations to fix signs and eigenspace representatives.
    let field = |q: &[f64], prev: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>, f64)> {
        let tangent = tangent_data(surface, q, dim)?;
        let jn = jacobian_fd(|p| surface.normal(p), q, DEFAULT_FD_STEP)?;
        let raw = -(tangent.frame.transpose() * jn * &tangent.param_velocity);
        let shape = finish_shape(raw, tangent.frame.clone())?;
        let in_frame = tangent.frame.transpose() * prev;
        let (dir, value) = principal_direction(&shape.matrix, target, Some(&in_frame), cluster_tol)?;
        Ok((&tangent.param_velocity * &dir, &tangent.frame * dir, value))
    };
    let shape = surface.shape_operator(q0)?;
    let (dir0, start) = principal_direction(&shape.matrix, target, None, cluster_tol)?;
    let mut ambient = &shape.frame * dir0;
    let mut q = DVector::from_column_slice(q0);
    let mut drift: f64 = 0.0;
    let shifted = |q: &DVector<f64>, k: &DVector<f64>, a: f64| -> Vec<f64> { (q + k * a).iter().copied().collect() };
    for _ in 0..steps {
        let (k1, a1, _) = field(q.as_slice(), &ambient)?;
        let (k2, a2, _) = field(&shifted(&q, &k1, h / 2.0), &a1)?;
        let (k3, a3, _) = field(&shifted(&q, &k2, h / 2.0), &a2)?;
        let (k4, _, _) = field(&shifted(&q, &k3, h), &a3)?;
        q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let (_, a, value) = field(q.as_slice(), &ambient)?;
        ambient = a;
        drift = drift.max((value - start).abs());
    }
    Ok(drift)
}

/// Same as [`dupin_drift`] on a constraint manifold with a normal field of
/// fixed frame coefficients; midpoint steps followed by projection.
pub fn dupin_drift_constrained(
    manifold: &ConstraintManifold,
    x0: &DVector<f64>,
    xi0: &DVector<f64>,
    target: f64,
    h: f64,
    steps: usize,
    cluster_tol: f64,
) -> Result<f64> {
    let split = manifold.tangent_normal_split(x0)?;
    let coeffs = manifold.normal_coefficients(&split.normal, xi0)?;
    let eval = |x: &DVector<f64>, prev: Option<&DVector<f64>>| -> Result<(DVector<f64>, f64)> {
        let xi = manifold.normal_field(x, &coeffs)?;
        let shape = manifold.shape_operator(x, &xi)?;
        let in_frame = prev.map(|p| shape.frame.transpose() * p);
        let (dir, value) = principal_direction(&shape.matrix, target, in_frame.as_ref(), cluster_tol)?;
        Ok((&shape.frame * dir, value))
    };
    let (mut dir, start) = eval(x0, None)?;
    let mut x = x0.clone();
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        let mid = manifold.project(&(&x + &dir * (h / 2.0)))?;
        let (dmid, _) = eval(&mid, Some(&dir))?;
        x = manifold.project(&(&x + &dmid * h))?;
        let (d, value) = eval(&x, Some(&dmid))?;
        dir = d;
        drift = drift.max((value - start).abs());
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn equator(n: usize) -> ConstraintManifold {
        let last = n;
        ConstraintManifold::new(
            n + 1,
            vec![ScalarConstraint::new(
                "equator",
                move |x: &DVector<f64>| x[last],
                move |x: &DVector<f64>| {
                    let mut g = DVector::zeros(x.len());
                    g[last] = 1.0;
                    g
                },
            )],
        )
    }

    fn geodesic_sphere(p: DVector<f64>, t: f64) -> ConstraintManifold {
        let pc = p.clone();
        ConstraintManifold::new(
            p.len(),
            vec![ScalarConstraint::new(
                "distance",
                move |x: &DVector<f64>| x.dot(&pc) - t.cos(),
                move |_: &DVector<f64>| p.clone(),
            )],
        )
    }

    /// Geodesic sphere of radius `t` about `e₀` in `S^n`, parametrized by
    /// an unnormalized direction `a ∈ R^n`; normal points towards `e₀`.
    struct ParamSphere {
        n: usize,
        t: f64,
    }

    impl PointNormalMap for ParamSphere {
        fn param_dim(&self) -> usize {
            self.n
        }
        fn ambient_dim(&self) -> usize {
            self.n + 1
        }
        fn point(&self, q: &[f64]) -> DVector<f64> {
            let a = DVector::from_column_slice(q).normalize();
            let mut x = DVector::zeros(self.n + 1);
            x[0] = self.t.cos();
            x.rows_mut(1, self.n).copy_from(&(a * self.t.sin()));
            x
        }
        fn normal(&self, q: &[f64]) -> DVector<f64> {
            let a = DVector::from_column_slice(q).normalize();
            let mut x = DVector::zeros(self.n + 1);
            x[0] = self.t.sin();
            x.rows_mut(1, self.n).copy_from(&(a * -self.t.cos()));
            x
        }
        fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
            rng::unit_vector(rng, self.n).iter().copied().collect()
        }
    }

    impl Hypersurface for ParamSphere {}

    #[test]
    fn equator_normal_is_last_axis() {
        let m = equator(3);
        let mut r = rng::stream(1, 0);
        let x = m.sample_point(&mut r).unwrap();
        let split = m.tangent_normal_split(&x).unwrap();
        assert_eq!(split.tangent.len(), 2);
        assert_eq!(split.normal.len(), 1);
        assert_abs_diff_eq!(split.normal[0][3].abs(), 1.0, epsilon = 1e-12);
        let shape = m.shape_operator(&x, &split.normal[0]).unwrap();
        assert!(shape.matrix.amax() < 1e-9);
    }

    #[test]
    fn geodesic_sphere_towards_center_is_cot_t() {
        let t = 0.7;
        let mut p = DVector::zeros(4);
        p[0] = 1.0;
        let m = geodesic_sphere(p.clone(), t);
        let mut r = rng::stream(2, 0);
        let x = m.sample_point(&mut r).unwrap();
        let split = m.tangent_normal_split(&x).unwrap();
        let inward = &split.normal[0];
        assert!(inward.dot(&p) > 0.0);
        let spec = m.principal_spectrum(&x, inward, 1e-4).unwrap();
        assert_eq!(spec.spectrum.multiplicities(), vec![2]);
        assert_abs_diff_eq!(spec.spectrum.values()[0], 1.0 / t.tan(), epsilon = 1e-6);
        assert_eq!(spec.infinite_mult, 0);
        let out = m.principal_spectrum(&x, &(-inward), 1e-4).unwrap();
        assert_abs_diff_eq!(out.spectrum.values()[0], -1.0 / t.tan(), epsilon = 1e-6);
    }

    #[test]
    fn great_sphere_is_totally_geodesic() {
        let mut p = DVector::zeros(4);
        p[1] = 1.0;
        let m = geodesic_sphere(p, FRAC_PI_2);
        let mut r = rng::stream(3, 0);
        let x = m.sample_point(&mut r).unwrap();
        let xi = m.random_normal(&x, &mut r).unwrap();
        assert!(m.shape_operator(&x, &xi).unwrap().matrix.amax() < 1e-9);
    }

    #[test]
    fn parametric_and_constraint_spheres_agree() {
        let t = 1.1;
        let surface = ParamSphere { n: 3, t };
        let mut r = rng::stream(4, 0);
        let q = surface.sample_params(&mut r);
        let param = surface.principal_spectrum(&q, 1e-4).unwrap();
        let mut p = DVector::zeros(4);
        p[0] = 1.0;
        let m = geodesic_sphere(p, t);
        let x = surface.point(&q);
        let xi = surface.normal(&q);
        let cons = m.principal_spectrum(&x, &xi, 1e-4).unwrap();
        assert_eq!(param.spectrum.multiplicities(), cons.spectrum.multiplicities());
        assert_abs_diff_eq!(param.spectrum.values()[0], cons.spectrum.values()[0], epsilon = 1e-6);
        assert_abs_diff_eq!(param.spectrum.values()[0], 1.0 / t.tan(), epsilon = 1e-6);
    }

    #[test]
    fn tube_over_point_is_geodesic_sphere() {
        // A "hypersurface" collapsed to a point: the tube map over its unit
        // normal sphere. Base point e₀, normals from the parameters.
        struct PointBundle;
        impl PointNormalMap for PointBundle {
            fn param_dim(&self) -> usize {
                3
            }
            fn ambient_dim(&self) -> usize {
                4
            }
            fn point(&self, _q: &[f64]) -> DVector<f64> {
                DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])
            }
            fn normal(&self, q: &[f64]) -> DVector<f64> {
                let a = DVector::from_column_slice(q).normalize();
                DVector::from_vec(vec![0.0, a[0], a[1], a[2]])
            }
            fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
                rng::unit_vector(rng, 3).iter().copied().collect()
            }
        }
        let t = 0.4;
        let tube = Tube::new(PointBundle, t);
        let q = tube.sample_params(&mut rng::stream(5, 0));
        let spec = tube.principal_spectrum(&q, 1e-4).unwrap();
        assert_eq!(spec.spectrum.multiplicities(), vec![2]);
        // Normal -sin t x + cos t ξ points away from the center.
        assert_abs_diff_eq!(spec.spectrum.values()[0], -1.0 / t.tan(), epsilon = 1e-6);
    }

    #[test]
    fn lie_curvature_examples() {
        let shape = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.0, 0.0, 1.0]));
        let spectrum = sym_eig_clustered(&shape, 1e-4).unwrap();
        let res = ShapeResult {
            spectrum,
            infinite_mult: 2,
            tangent_frame: DMatrix::zeros(0, 0),
            shape,
        };
        assert_abs_diff_eq!(lie_curvature(&res).unwrap(), 0.5, epsilon = 1e-15);
        let mut three = res.clone();
        three.infinite_mult = 0;
        assert_eq!(lie_curvature(&three).unwrap_err(), Error::CurvatureCount { g: 3 });
    }

    #[test]
    fn shift_and_focal_helpers() {
        assert_abs_diff_eq!(parallel_shift(0.0, PI / 4.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(parallel_shift(f64::INFINITY, 0.3), -1.0 / 0.3f64.tan(), epsilon = 1e-14);
        assert_eq!(focal_radius_warning(&[1.0], PI / 4.0 + 5e-4), Some(PI / 4.0));
        assert_eq!(focal_radius_warning(&[1.0, 0.0], 0.3), None);
        assert!(focal_radius_warning(&[f64::INFINITY], PI - 1e-4).is_some());
    }

    #[test]
    fn projection_reports_failure() {
        // Incompatible constraints: x₀ = 2 on the unit sphere.
        let m = ConstraintManifold::new(
            3,
            vec![ScalarConstraint::new("x0", |x: &DVector<f64>| x[0] - 2.0, |x: &DVector<f64>| {
                let mut g = DVector::zeros(x.len());
                g[0] = 1.0;
                g
            })],
        );
        let err = m.project(&DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::ProjectionFailed { .. }));
    }

    #[test]
    fn non_normal_rejected() {
        let m = equator(2);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let bad = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(matches!(m.shape_operator(&x, &bad), Err(Error::NotNormal { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn flipped_normal_negates_sphere_spectrum(seed in 0u64..1000, t in 0.2f64..2.9) {
            let surface = ParamSphere { n: 3, t };
            let mut p = DVector::zeros(4);
            p[0] = 1.0;
            let m = geodesic_sphere(p, t);
            let q = surface.sample_params(&mut rng::stream(seed, 0));
            let x = surface.point(&q);
            let xi = surface.normal(&q);
            let a = m.principal_spectrum(&x, &xi, 1e-4).unwrap();
            let b = m.principal_spectrum(&x, &(-&xi), 1e-4).unwrap();
            prop_assert_eq!(a.spectrum.multiplicities(), b.spectrum.multiplicities());
            for (u, v) in a.negated().iter().zip(b.spectrum.values()) {
                prop_assert!((u - v).abs() < 1e-8);
            }
        }
    }
}

//! Pinkall–Thorbergsson deformations `V₂^{α,β} = T_{α,β} V₂(C_{m-1})` with
//! `T_{α,β}(u, v) = √2 (αu, βv)`, `α² + β² = 1`.
//!
//! Along the normal `ξ = (-(β/α)U, (α/β)V)` the principal curvatures are
//! `-α/β, 0, β/α, ∞`, so the Lie curvature is `α²` at `ξ` and `β²` at `-ξ`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::CliffordSystem;
use crate::engine::{lie_curvature, ConstraintManifold, ScalarConstraint, ShapeResult};
use crate::otfkm::{check_admissible, sample_v2, FramePoint};
use crate::rng;
use crate::{Error, Result};

/// Distance from `1/√2` below which `α` counts as isoparametric.
pub const ISOPARAMETRIC_EXCLUSION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PTParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PTParams {
    /// Parameters with `α² = alpha2`, rejecting the isoparametric value
    /// `α = 1/√2`.
    pub fn from_alpha2(alpha2: f64) -> Result<Self> {
        let p = Self::diagnostic(alpha2)?;
        if (p.alpha - std::f64::consts::FRAC_1_SQRT_2).abs() < ISOPARAMETRIC_EXCLUSION {
            return Err(Error::InvalidParameter(format!(
                "alpha^2 = {alpha2} is the isoparametric case alpha = beta = 1/sqrt(2)"
            )));
        }
        Ok(p)
    }

    /// Any `α² ∈ (0, 1)`, including the isoparametric value.
    pub fn diagnostic(alpha2: f64) -> Result<Self> {
        if !(alpha2 > 0.0 && alpha2 < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha^2 must lie in (0, 1), got {alpha2}")));
        }
        Ok(PTParams {
            alpha: alpha2.sqrt(),
            beta: (1.0 - alpha2).sqrt(),
        })
    }

    pub fn ratio(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// `√2 (αu, βv)`.
pub fn deform(p: &PTParams, fp: &FramePoint) -> DVector<f64> {
    let s = std::f64::consts::SQRT_2;
    FramePoint {
        u: &fp.u * (s * p.alpha),
        v: &fp.v * (s * p.beta),
    }
    .to_vec()
}

/// The deformed manifold as the zero set of
/// `f = -(β/2α)|U|² + (α/2β)|V|²`, `g = -U·V` and the pulled-back Clifford
/// conditions `(EᵢU · V) / (2αβ)` on `S^{2l-1}`.
pub fn pt_manifold(p: &PTParams, sys: &CliffordSystem) -> Result<ConstraintManifold> {
    check_admissible(sys)?;
    let l = sys.l;
    let (a, b) = (p.alpha, p.beta);
    let split = move |x: &DVector<f64>| (x.rows(0, l).into_owned(), x.rows(l, l).into_owned());
    let join = move |u: DVector<f64>, v: DVector<f64>| {
        let mut g = DVector::zeros(2 * l);
        g.rows_mut(0, l).copy_from(&u);
        g.rows_mut(l, l).copy_from(&v);
        g
    };
    let mut constraints = vec![
        ScalarConstraint::new(
            "f",
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                -b / (2.0 * a) * u.norm_squared() + a / (2.0 * b) * v.norm_squared()
            },
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                join(u * (-b / a), v * (a / b))
            },
        ),
        ScalarConstraint::new(
            "g",
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                -u.dot(&v)
            },
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                join(-v, -u)
            },
        ),
    ];
    let scale = 1.0 / (2.0 * a * b);
    for (i, e) in sys.es.iter().enumerate() {
        let (e1, e2) = (e.clone(), e.clone());
        constraints.push(ScalarConstraint::new(
            format!("E{}u.v", i + 1),
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                (&e1 * u).dot(&v) * scale
            },
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                join(-(&e2 * v) * scale, (&e2 * u) * scale)
            },
        ));
    }
    Ok(ConstraintManifold::new(2 * l, constraints))
}

/// `ξ = (-(β/α)U, (α/β)V)`, the unit gradient of `f`.
pub fn xi_at(p: &PTParams, x: &DVector<f64>) -> DVector<f64> {
    let l = x.len() / 2;
    let mut xi = x.clone();
    xi.rows_mut(0, l).scale_mut(-p.beta / p.alpha);
    xi.rows_mut(l, l).scale_mut(p.alpha / p.beta);
    xi
}

/// `η = (-V, -U)`, the gradient of `g`.
pub fn eta_at(x: &DVector<f64>) -> DVector<f64> {
    let l = x.len() / 2;
    let mut eta = DVector::zeros(2 * l);
    eta.rows_mut(0, l).copy_from(&(-x.rows(l, l)));
    eta.rows_mut(l, l).copy_from(&(-x.rows(0, l)));
    eta
}

/// Closed-form finite curvatures at `ξ`, ascending.
pub fn expected_at_xi(p: &PTParams) -> [f64; 3] {
    [-p.alpha / p.beta, 0.0, p.beta / p.alpha]
}

pub fn spectrum_at(
    p: &PTParams,
    sys: &CliffordSystem,
    fp: &FramePoint,
    normal: &DVector<f64>,
    cluster_tol: f64,
) -> Result<ShapeResult> {
    let manifold = pt_manifold(p, sys)?;
    manifold.principal_spectrum(&deform(p, fp), normal, cluster_tol)
}

pub fn spectrum_at_xi(p: &PTParams, sys: &CliffordSystem, fp: &FramePoint, cluster_tol: f64) -> Result<ShapeResult> {
    let x = deform(p, fp);
    spectrum_at(p, sys, fp, &xi_at(p, &x), cluster_tol)
}

/// Lie curvature `(λ₁ - λ₂)/(λ₁ - λ₃)` at the normal `normal`.
pub fn psi_at(
    p: &PTParams,
    sys: &CliffordSystem,
    fp: &FramePoint,
    normal: &DVector<f64>,
    cluster_tol: f64,
) -> Result<f64> {
    lie_curvature(&spectrum_at(p, sys, fp, normal, cluster_tol)?)
}

/// Tangent vectors of the two curves through `deform(fp)` along which `ξ`
/// is differentiated in closed form: `(x, 0)` with `|x| = α`,
/// `x ⟂ U, V, EᵢV` (curvature `β/α`) and the rotation
/// `(αV/β, -βU/α)` (curvature `0`).
pub fn principal_test_vectors(
    p: &PTParams,
    sys: &CliffordSystem,
    x: &DVector<f64>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (DVector<f64>, DVector<f64>) {
    let l = sys.l;
    let u = x.rows(0, l).into_owned();
    let v = x.rows(l, l).into_owned();
    let mut span = vec![u.clone(), v.clone()];
    span.extend(sys.es.iter().map(|e| e * &v));
    let basis = crate::numkit::orthonormalize(&span).expect("U, V, EᵢV are orthogonal and nonzero");
    let mut w = rng::gaussian_vector(rng, l);
    for b in &basis {
        let d = b.dot(&w);
        w.axpy(-d, b, 1.0);
    }
    let mut gamma = DVector::zeros(2 * l);
    gamma.rows_mut(0, l).copy_from(&(w.normalize() * p.alpha));
    let mut eps = DVector::zeros(2 * l);
    eps.rows_mut(0, l).copy_from(&(&v * (p.alpha / p.beta)));
    eps.rows_mut(l, l).copy_from(&(&u * (-p.beta / p.alpha)));
    (gamma, eps)
}

/// Result of a Lie-curvature scan over random normals.
#[derive(Debug, Clone, Serialize)]
pub struct PsiScan {
    pub min: f64,
    pub max: f64,
    /// Counts over 20 equal bins of `[0, 1]`.
    pub histogram: Vec<usize>,
    pub evaluated: usize,
    pub skipped: Vec<String>,
    /// `max - min > |β² - α²| / 2`.
    pub non_constant: bool,
    /// Multiplicities `(finite…, ∞)` observed at random normals, with counts.
    pub multiplicity_patterns: Vec<(Vec<usize>, usize)>,
}

pub const HISTOGRAM_BINS: usize = 20;

/// Lie curvature over `samples` points of `V₂^{α,β}`: at each point
/// `±ξ` and `normals_per_sample` uniformly random unit normals. Normals at
/// which curvatures merge are skipped and logged.
pub fn psi_scan(
    p: &PTParams,
    sys: &CliffordSystem,
    samples: usize,
    normals_per_sample: usize,
    seed: u64,
    cluster_tol: f64,
) -> Result<PsiScan> {
    let manifold = pt_manifold(p, sys)?;
    let points = sample_v2(sys, seed, samples)?;
    let per_sample: Vec<Vec<std::result::Result<(f64, Vec<usize>, bool), String>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, fp)| {
            let x = deform(p, fp);
            let xi = xi_at(p, &x);
            let mut rng = rng::stream(seed ^ 0x95_ca17, i as u64);
            let mut normals: Vec<(DVector<f64>, bool)> = vec![(xi.clone(), false), (-xi, false)];
            for _ in 0..normals_per_sample {
                match manifold.random_normal(&x, &mut rng) {
                    Ok(n) => normals.push((n, true)),
                    Err(e) => return vec![Err(format!("sample {i}: {e}"))],
                }
            }
            normals
                .into_iter()
                .enumerate()
                .map(|(j, (n, random))| {
                    let res = manifold
                        .principal_spectrum(&x, &n, cluster_tol)
                        .map_err(|e| format!("sample {i} normal {j}: {e}"))?;
                    if res.spectrum.ambiguous {
                        return Err(format!("sample {i} normal {j}: curvatures nearly merge"));
                    }
                    let psi = lie_curvature(&res).map_err(|e| format!("sample {i} normal {j}: {e}"))?;
                    let mut pattern = res.spectrum.multiplicities();
                    pattern.push(res.infinite_mult);
                    Ok((psi, pattern, random))
                })
                .collect()
        })
        .collect();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut histogram = vec![0; HISTOGRAM_BINS];
    let mut skipped = Vec::new();
    let mut patterns: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut evaluated = 0;
    for entry in per_sample.into_iter().flatten() {
        match entry {
            Ok((psi, pattern, random)) => {
                evaluated += 1;
                min = min.min(psi);
                max = max.max(psi);
                let bin = ((psi * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
                histogram[bin] += 1;
                if random {
                    match patterns.iter_mut().find(|(p, _)| *p == pattern) {
                        Some((_, c)) => *c += 1,
                        None => patterns.push((pattern, 1)),
                    }
                }
            }
            Err(msg) => skipped.push(msg),
        }
    }
    let gap = (p.beta * p.beta - p.alpha * p.alpha).abs();
    Ok(PsiScan {
        min,
        max,
        histogram,
        evaluated,
        skipped,
        non_constant: max - min > gap / 2.0,
        multiplicity_patterns: patterns,
    })
}

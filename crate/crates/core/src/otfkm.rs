//! The Clifford–Stiefel manifold `V₂(C_{m-1})` and its isoparametric tubes.
//!
//! Points are pairs `(u, v) ∈ R^l × R^l` with `|u|² = |v|² = 1/2`,
//! `u · v = 0` and `Eᵢu · v = 0`. This is a focal submanifold of codimension
//! `m + 1` in `S^{2l-1}`; along every unit normal its principal curvatures
//! are `-1, 0, 1` with multiplicities `l-m-1, m, l-m-1`, and tubes around it
//! are isoparametric with four principal curvatures.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::CliffordSystem;
use crate::engine::{focal_radius_warning, lie_curvature, lie_curvature_of, ConstraintManifold, Hypersurface, ScalarConstraint};
use crate::rng;
use crate::{Error, Result};

/// A Clifford-orthogonal 2-frame of length `1/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePoint {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl FramePoint {
    /// `(u; v)` as a point of `R^{2l}`.
    pub fn to_vec(&self) -> DVector<f64> {
        let l = self.u.len();
        let mut x = DVector::zeros(2 * l);
        x.rows_mut(0, l).copy_from(&self.u);
        x.rows_mut(l, l).copy_from(&self.v);
        x
    }

    pub fn from_vec(x: &DVector<f64>) -> Self {
        let l = x.len() / 2;
        FramePoint {
            u: x.rows(0, l).into_owned(),
            v: x.rows(l, l).into_owned(),
        }
    }

    /// Largest violation of the defining equations.
    pub fn residual(&self, sys: &CliffordSystem) -> f64 {
        let mut r = (self.u.norm_squared() - 0.5)
            .abs()
            .max((self.v.norm_squared() - 0.5).abs())
            .max(self.u.dot(&self.v).abs());
        for e in &sys.es {
            r = r.max((e * &self.u).dot(&self.v).abs());
        }
        r
    }
}

/// Reject systems with `l ≤ m + 1`, for which `V₂` is not a focal
/// submanifold of an isoparametric family.
pub fn check_admissible(sys: &CliffordSystem) -> Result<()> {
    if sys.l <= sys.m + 1 {
        return Err(Error::Inadmissible(format!(
            "need l > m + 1 for the Clifford-Stiefel manifold, got m = {}, l = {}",
            sys.m, sys.l
        )));
    }
    Ok(())
}

/// `V₂(C_{m-1})` as the zero set of `|u|² - |v|²`, `u · v` and `Eᵢu · v`
/// on `S^{2l-1}`.
pub fn v2_manifold(sys: &CliffordSystem) -> Result<ConstraintManifold> {
    check_admissible(sys)?;
    let l = sys.l;
    let split = move |x: &DVector<f64>| (x.rows(0, l).into_owned(), x.rows(l, l).into_owned());
    let join = move |a: DVector<f64>, b: DVector<f64>| {
        let mut g = DVector::zeros(2 * l);
        g.rows_mut(0, l).copy_from(&a);
        g.rows_mut(l, l).copy_from(&b);
        g
    };
    let mut constraints = vec![
        ScalarConstraint::new(
            "|u|^2 - |v|^2",
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                u.norm_squared() - v.norm_squared()
            },
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                join(u * 2.0, v * -2.0)
            },
        ),
        ScalarConstraint::new(
            "u.v",
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                u.dot(&v)
            },
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                join(v, u)
            },
        ),
    ];
    for (i, e) in sys.es.iter().enumerate() {
        let (e1, e2) = (e.clone(), e.clone());
        constraints.push(ScalarConstraint::new(
            format!("E{}u.v", i + 1),
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                (&e1 * u).dot(&v)
            },
            move |x: &DVector<f64>| {
                let (u, v) = split(x);
                join(-(&e2 * v), &e2 * u)
            },
        ));
    }
    Ok(ConstraintManifold::new(2 * l, constraints))
}

/// Exact frame through a random `u`: `v` is a random vector with the
/// components along `u, E₁u, …` removed.
fn constructed_frame(sys: &CliffordSystem, rng: &mut rand_chacha::ChaCha8Rng) -> FramePoint {
    loop {
        let u = rng::unit_vector(rng, sys.l);
        let mut v = rng::gaussian_vector(rng, sys.l);
        let mut span = vec![u.clone()];
        span.extend(sys.es.iter().map(|e| e * &u));
        for _ in 0..2 {
            for s in &span {
                let d = s.dot(&v);
                v.axpy(-d, s, 1.0);
            }
        }
        if v.norm() > 1e-3 {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            return FramePoint {
                u: u * h,
                v: v.normalize() * h,
            };
        }
    }
}

fn sample_one(sys: &CliffordSystem, manifold: &ConstraintManifold, seed: u64, index: u64) -> FramePoint {
    let mut rng = rng::stream(seed, index);
    for _ in 0..8 {
        let x0 = rng::unit_vector(&mut rng, 2 * sys.l);
        if let Ok(x) = manifold.project(&x0) {
            if manifold.tangent_normal_split(&x).is_ok() {
                return FramePoint::from_vec(&x);
            }
        }
    }
    let fp = constructed_frame(sys, &mut rng);
    manifold
        .project(&fp.to_vec())
        .map(|x| FramePoint::from_vec(&x))
        .unwrap_or(fp)
}

/// `count` random points of `V₂`, deterministic in `seed`.
pub fn sample_v2(sys: &CliffordSystem, seed: u64, count: usize) -> Result<Vec<FramePoint>> {
    let manifold = v2_manifold(sys)?;
    let points: Vec<FramePoint> = (0..count as u64)
        .into_par_iter()
        .map(|i| sample_one(sys, &manifold, seed, i))
        .collect();
    for p in &points {
        let residual = p.residual(sys);
        if residual > 1e-12 {
            return Err(Error::ConstraintViolation { residual });
        }
    }
    Ok(points)
}

/// Spectrum at one (sample, normal) pair.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub sample: usize,
    pub normal: usize,
    pub point: Vec<f64>,
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub infinite_mult: usize,
    pub psi: Option<f64>,
    /// Largest distance of a cluster value from its closed-form target.
    pub deviation: f64,
    pub multiplicities_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct V2Certificate {
    pub m: usize,
    pub l: usize,
    pub records: Vec<SpectrumRecord>,
    pub max_deviation: f64,
    pub max_psi_error: f64,
    pub multiplicities_ok: bool,
    /// Largest spread of a cluster value across normals at one sample.
    pub max_normal_spread: f64,
    pub failures: Vec<String>,
}

impl V2Certificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.multiplicities_ok && self.max_deviation < tol && self.max_psi_error < tol
    }
}

/// Expected `(values, multiplicities, ∞-multiplicity)` along any unit normal.
pub fn v2_expected(m: usize, l: usize) -> ([f64; 3], [usize; 3], usize) {
    ([-1.0, 0.0, 1.0], [l - m - 1, m, l - m - 1], m)
}

/// Principal spectra of `V₂` at `samples` points and `normals_per_sample`
/// random unit normals per point, compared with `{-1, 0, 1}`.
pub fn v2_spectrum_certify(
    sys: &CliffordSystem,
    samples: usize,
    normals_per_sample: usize,
    seed: u64,
    cluster_tol: f64,
) -> Result<V2Certificate> {
    let manifold = v2_manifold(sys)?;
    let points = sample_v2(sys, seed, samples)?;
    let (values, mults, inf) = v2_expected(sys.m, sys.l);
    let per_sample: Vec<Result<Vec<SpectrumRecord>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, fp)| {
            let x = fp.to_vec();
            let mut rng = rng::stream(seed ^ 0x5eed_0001, i as u64);
            (0..normals_per_sample)
                .map(|j| {
                    let xi = manifold.random_normal(&x, &mut rng)?;
                    let res = manifold.principal_spectrum(&x, &xi, cluster_tol)?;
                    let got = res.spectrum.values();
                    let mult_ok = res.spectrum.multiplicities() == mults && res.infinite_mult == inf;
                    let deviation = if got.len() == 3 {
                        got.iter().zip(values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                    } else {
                        f64::INFINITY
                    };
                    Ok(SpectrumRecord {
                        sample: i,
                        normal: j,
                        point: x.iter().copied().collect(),
                        values: got,
                        multiplicities: res.spectrum.multiplicities(),
                        infinite_mult: res.infinite_mult,
                        psi: lie_curvature(&res).ok(),
                        deviation,
                        multiplicities_ok: mult_ok,
                    })
                })
                .collect()
        })
        .collect();
    let mut records = Vec::new();
    for r in per_sample {
        records.extend(r?);
    }
    let mut failures = Vec::new();
    let mut max_normal_spread: f64 = 0.0;
    for i in 0..samples {
        let group: Vec<&SpectrumRecord> = records.iter().filter(|r| r.sample == i && r.values.len() == 3).collect();
        for c in 0..3 {
            let vals = group.iter().map(|r| r.values[c]);
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if hi >= lo {
                max_normal_spread = max_normal_spread.max(hi - lo);
            }
        }
    }
    let mut max_deviation: f64 = 0.0;
    let mut max_psi_error: f64 = 0.0;
    let mut multiplicities_ok = true;
    for r in &records {
        max_deviation = max_deviation.max(r.deviation);
        let psi_err = r.psi.map_or(f64::INFINITY, |p| (p - 0.5).abs());
        max_psi_error = max_psi_error.max(psi_err);
        if !r.multiplicities_ok {
            multiplicities_ok = false;
            failures.push(format!(
                "sample {} normal {}: multiplicities {:?} + inf {}",
                r.sample, r.normal, r.multiplicities, r.infinite_mult
            ));
        } else if r.deviation > 1e-6 {
            failures.push(format!("sample {} normal {}: deviation {:e}", r.sample, r.normal, r.deviation));
        }
    }
    Ok(V2Certificate {
        m: sys.m,
        l: sys.l,
        records,
        max_deviation,
        max_psi_error,
        multiplicities_ok,
        max_normal_spread,
        failures,
    })
}

/// Spectrum of a tube over `V₂` at one sample.
#[derive(Debug, Clone, Serialize)]
pub struct TubeRecord {
    pub sample: usize,
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub psi: Option<f64>,
}

/// The four principal curvatures `cot(θ - t)` of the tube of radius `t`,
/// ascending, with their multiplicities.
pub fn v2_tube_expected(m: usize, l: usize, t: f64) -> Vec<(f64, usize)> {
    let (values, mults, inf) = v2_expected(m, l);
    let mut out: Vec<(f64, usize)> = values
        .iter()
        .zip(mults)
        .map(|(&k, mult)| (crate::engine::parallel_shift(k, t), mult))
        .collect();
    out.push((crate::engine::parallel_shift(f64::INFINITY, t), inf));
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Principal spectra of the tube of radius `t` over `V₂` at `samples`
/// random points of the unit normal bundle.
pub fn v2_tube_spectra(
    sys: &CliffordSystem,
    t: f64,
    samples: usize,
    seed: u64,
    cluster_tol: f64,
) -> Result<Vec<TubeRecord>> {
    if focal_radius_warning(&[-1.0, 0.0, 1.0, f64::INFINITY], t).is_some() {
        return Err(Error::InvalidParameter(format!("tube radius {t} is a focal radius of V2")));
    }
    let manifold = v2_manifold(sys)?;
    let points = sample_v2(sys, seed, samples)?;
    points
        .par_iter()
        .enumerate()
        .map(|(i, fp)| {
            let x = fp.to_vec();
            let mut rng = rng::stream(seed ^ 0x7b_e000, i as u64);
            let xi = manifold.random_normal(&x, &mut rng)?;
            let chart = manifold.tube_chart(&x, &xi, t)?;
            let res = chart.principal_spectrum(&chart.origin_params(), cluster_tol)?;
            let values = res.spectrum.values();
            Ok(TubeRecord {
                sample: i,
                psi: lie_curvature_of(&values).ok(),
                multiplicities: res.spectrum.multiplicities(),
                values,
            })
        })
        .collect()
}

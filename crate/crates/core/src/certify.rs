//! Certification suites: each runs one family of numerical checks and
//! returns a [`RunReport`].

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::clifford::{build_system, max_m, verify_system};
use crate::engine::{arccot, focal_nullity, Hypersurface, PointNormalMap};
use crate::hopfmo::{lifted_spectrum_check, Lift, S4Base};
use crate::liegeo::{
    cross_ratio, lie_inner, metric_defect, parallel_matrix, random_line, random_lie_transform, reread_curvatures,
    sphere_to_lie, ProjParam,
};
use crate::morse::{
    ell_ab, fiber_critical_values, fiber_grid_extrema, g_ab, random_fiber_instance, taut_doubling_check, TautOptions,
};
use crate::numkit::DEFAULT_CLUSTER_TOL;
use crate::otfkm::{sample_v2, v2_manifold, v2_spectrum_certify, v2_tube_expected, v2_tube_spectra};
use crate::ptdeform::{deform, expected_at_xi, psi_scan, spectrum_at_xi, xi_at, PTParams};
use crate::quat::Quaternion;
use crate::report::{Check, RunReport};
use crate::rng;
use crate::{Error, Result};

/// Knobs shared by every suite.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Settings {
    pub seed: u64,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    /// Overrides the suite's default sample count.
    pub samples: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 7,
            tol_scale: 1.0,
            samples: None,
        }
    }
}

impl Settings {
    fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }

    fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}

fn finish(mut report: RunReport, start: Instant) -> RunReport {
    report.wall_time = start.elapsed().as_secs_f64();
    report
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Construct and verify the Clifford system `(m, l)`.
pub fn clifford_suite(m: usize, l: usize, s: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let sys = build_system(m, l)?;
    let v = verify_system(&sys);
    let mut r = RunReport::new("clifford", s.seed);
    r.param("m", m);
    r.param("l", l);
    let prov = "closed-form:clifford-relations";
    let tol = s.tol(1e-12);
    r.push(Check::within("E_i^2 = I", v.square, 0.0, tol, prov));
    r.push(Check::within("E_i E_j + E_j E_i = 0", v.anticommute, 0.0, tol, prov));
    r.push(Check::within("E_i symmetric", v.skew, 0.0, tol, prov));
    r.push(Check::within("E_i orthogonal", v.orthogonal, 0.0, tol, prov));
    let matrices: Vec<Vec<Vec<f64>>> = sys
        .es
        .iter()
        .map(|e| e.row_iter().map(|row| row.iter().copied().collect()).collect())
        .collect();
    r.datum("max_m", max_m(l));
    r.datum("matrices", matrices);
    Ok(finish(r, start))
}

/// The standard Clifford cases plus two infeasible ones.
pub fn clifford_standard(s: &Settings) -> RunReport {
    let start = Instant::now();
    let mut r = RunReport::new("clifford", s.seed);
    for (m, l) in [(2, 2), (2, 4), (3, 4), (2, 8), (3, 8), (4, 8)] {
        match clifford_suite(m, l, s) {
            Ok(sub) => {
                let worst = max_of(sub.checks.iter().map(|c| c.measured));
                r.push(Check::within(format!("({m},{l}) max violation"), worst, 0.0, s.tol(1e-12), "closed-form:clifford-relations"));
            }
            Err(e) => r.push(Check::failed(format!("({m},{l}) build"), "closed-form:clifford-relations", e.to_string())),
        }
    }
    for (m, l) in [(2, 3), (5, 4)] {
        let rejected = matches!(build_system(m, l), Err(Error::RadonHurwitz { .. }));
        r.push(Check::holds(format!("({m},{l}) rejected"), rejected, "closed-form:radon-hurwitz"));
    }
    finish(r, start)
}

/// Spectra of `V₂` along random normals and, optionally, of a tube over it.
pub fn otfkm_suite(m: usize, l: usize, normals: usize, tube: Option<f64>, s: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let sys = build_system(m, l)?;
    let samples = s.samples_or(10);
    let mut r = RunReport::new("otfkm", s.seed);
    r.param("m", m);
    r.param("l", l);
    r.param("samples", samples);
    r.param("normals", normals);
    let cert = v2_spectrum_certify(&sys, samples, normals, s.seed, DEFAULT_CLUSTER_TOL)?;
    let prov = "closed-form:otfkm-spectrum";
    r.push(Check::count("(sample, normal) pairs", cert.records.len(), samples * normals, prov));
    r.push(Check::within("max |eigenvalue - {-1,0,1}|", cert.max_deviation, 0.0, s.tol(1e-6), prov));
    r.push(Check::holds("multiplicities (l-m-1, m, l-m-1), infinite m", cert.multiplicities_ok, prov));
    r.push(Check::within("max |psi - 1/2|", cert.max_psi_error, 0.0, s.tol(1e-6), "closed-form:otfkm-lie-curvature"));
    r.datum("max_normal_spread", cert.max_normal_spread);
    r.datum("failures", &cert.failures);
    r.datum("records", &cert.records);
    if let Some(t) = tube {
        r.param("tube", t);
        r.extend(tube_checks(&sys, t, s.samples_or(20), s)?);
    }
    Ok(finish(r, start))
}

fn tube_checks(sys: &crate::clifford::CliffordSystem, t: f64, samples: usize, s: &Settings) -> Result<Vec<Check>> {
    let recs = v2_tube_spectra(sys, t, samples, s.seed, DEFAULT_CLUSTER_TOL)?;
    let expected = v2_tube_expected(sys.m, sys.l, t);
    let prov = "closed-form:tube-parallel-shift";
    let mut checks = Vec::new();
    let four = recs.iter().all(|r| r.values.len() == 4);
    checks.push(Check::holds("tube: 4 distinct curvatures at every sample", four, prov));
    if !four {
        return Ok(checks);
    }
    let mut worst_std: f64 = 0.0;
    let mut worst_dev: f64 = 0.0;
    for c in 0..4 {
        let vals: Vec<f64> = recs.iter().map(|r| r.values[c]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        worst_std = worst_std.max(var.sqrt());
        worst_dev = worst_dev.max(vals.iter().map(|v| (v - expected[c].0).abs()).fold(0.0, f64::max));
    }
    checks.push(Check::within("tube: max per-cluster std", worst_std, 0.0, s.tol(1e-6), "oracle:constancy"));
    checks.push(Check::within("tube: max |kappa - cot(theta - t)|", worst_dev, 0.0, s.tol(1e-6), prov));
    let psi_err = max_of(recs.iter().map(|r| r.psi.map_or(f64::NAN, |p| (p - 0.5).abs())));
    checks.push(Check::within("tube: max |psi - 1/2|", psi_err, 0.0, s.tol(1e-6), "closed-form:otfkm-lie-curvature"));
    let mult_expected: Vec<usize> = expected.iter().map(|e| e.1).collect();
    let mults_ok = recs.iter().all(|r| r.multiplicities == mult_expected);
    checks.push(Check::holds("tube: multiplicities match shifted base", mults_ok, prov));
    let alternate = recs.iter().all(|r| {
        let m = &r.multiplicities;
        m[0] == m[2] && m[1] == m[3]
    });
    checks.push(
        Check::holds("tube: multiplicities alternate around the circle", alternate, "closed-form:isoparametric-multiplicities")
            .with_note(format!("ascending multiplicities {mult_expected:?}")),
    );
    Ok(checks)
}

/// Lie curvature of a Pinkall–Thorbergsson deformation.
pub fn pt_suite(m: usize, l: usize, alpha2: f64, normals: usize, s: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let p = PTParams::from_alpha2(alpha2)?;
    let sys = build_system(m, l)?;
    let samples = s.samples_or(20);
    let mut r = RunReport::new("pt", s.seed);
    r.param("m", m);
    r.param("l", l);
    r.param("alpha2", alpha2);
    r.param("samples", samples);
    r.param("normals", normals);
    let points = sample_v2(&sys, s.seed, samples)?;
    let manifold = crate::ptdeform::pt_manifold(&p, &sys)?;
    let expected = expected_at_xi(&p);
    let (mut dev, mut psi_plus, mut psi_minus) = (0.0f64, 0.0f64, 0.0f64);
    let mut mult_ok = true;
    let mut spectra = Vec::new();
    for fp in &points {
        let res = spectrum_at_xi(&p, &sys, fp, DEFAULT_CLUSTER_TOL)?;
        let v = res.spectrum.values();
        dev = dev.max(if v.len() == 3 {
            v.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        });
        mult_ok &= res.infinite_mult == m;
        psi_plus = psi_plus.max(crate::engine::lie_curvature(&res).map_or(f64::INFINITY, |x| (x - alpha2).abs()));
        let x = deform(&p, fp);
        let flipped = manifold.principal_spectrum(&x, &(-xi_at(&p, &x)), DEFAULT_CLUSTER_TOL)?;
        psi_minus =
            psi_minus.max(crate::engine::lie_curvature(&flipped).map_or(f64::INFINITY, |y| (y - (1.0 - alpha2)).abs()));
        spectra.push((v, res.spectrum.multiplicities(), res.infinite_mult));
    }
    r.push(Check::within("max |psi(xi) - alpha^2|", psi_plus, 0.0, s.tol(1e-5), "closed-form:pt-lie-curvature"));
    r.push(Check::within("max |psi(-xi) - beta^2|", psi_minus, 0.0, s.tol(1e-5), "closed-form:pt-lie-curvature"));
    r.push(Check::within(
        "max |spectrum(xi) - {-a/b, 0, b/a}|",
        dev,
        0.0,
        s.tol(1e-6),
        "closed-form:pt-spectrum-at-xi",
    ));
    r.push(Check::holds("infinite multiplicity m at xi", mult_ok, "closed-form:pt-spectrum-at-xi"));
    let scan_samples = 5;
    let per = normals.div_ceil(scan_samples);
    let scan = psi_scan(&p, &sys, scan_samples, per, s.seed, DEFAULT_CLUSTER_TOL)?;
    r.push(Check::above("psi range over random normals", scan.max - scan.min, 0.2, "oracle:psi-scan"));
    r.datum("expected_at_xi", expected);
    r.datum("spectra_at_xi", spectra);
    r.datum("scan", &scan);
    Ok(finish(r, start))
}

/// A base surface for the Hopf-lift suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Cyclide,
    Cartan,
}

/// `r` is the cyclide radius or the Cartan tube radius.
pub fn make_base(kind: BaseKind, r: f64, warp: f64) -> Result<S4Base> {
    match kind {
        BaseKind::Cyclide => S4Base::cyclide(r, warp),
        BaseKind::Cartan => S4Base::cartan(r, warp),
    }
}

/// Curvature doubling on the Hopf lift and, for two-curvature bases, the
/// pairing cross-ratio.
pub fn mo_suite(kind: BaseKind, r: f64, warp: f64, s: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let base = make_base(kind, r, warp)?;
    let g = base.g();
    let lift = Lift::new(base)?;
    let samples = s.samples_or(50);
    let mut rep = RunReport::new("mo", s.seed);
    rep.param("base", kind);
    rep.param("r", r);
    rep.param("warp", warp);
    rep.param("samples", samples);
    rep.param("chart", lift.chart);
    let mut rng = rng::stream(s.seed, 0x40);
    let mut reports = Vec::new();
    for _ in 0..samples {
        let q = lift.base.sample_params(&mut rng);
        let z = Quaternion::from_slice(rng::unit_vector(&mut rng, 4).as_slice());
        reports.push(lifted_spectrum_check(&lift, &q, z, DEFAULT_CLUSTER_TOL)?);
    }
    let name = lift.base.name();
    let prov = "closed-form:hopf-half-angle";
    let base_ok = reports.iter().all(|x| x.base_values.len() == g);
    rep.push(Check::holds(format!("{name}: {g} base curvatures at every sample"), base_ok, "closed-form:base-spectrum"));
    let counts_ok = reports.iter().all(|x| x.count_ok && x.lifted_values.len() == 2 * g);
    rep.push(Check::holds(format!("{name}: {} lifted curvatures at every sample", 2 * g), counts_ok, prov));
    rep.push(Check::holds(
        "lifted multiplicities equal base multiplicities",
        reports.iter().all(|x| x.multiplicity_ok),
        prov,
    ));
    rep.push(Check::within(
        "max |lifted - cot(theta/2), cot((theta+pi)/2)|",
        max_of(reports.iter().map(|x| x.max_error)),
        0.0,
        s.tol(1e-5),
        prov,
    ));
    if g == 2 {
        let pairs: Vec<(f64, f64)> = reports
            .iter()
            .map(|x| (x.psi_mo_pairing.unwrap_or(f64::NAN), x.psi_mo_formula.unwrap_or(f64::NAN)))
            .collect();
        let err = max_of(pairs.iter().map(|(a, b)| (a - b).abs()));
        rep.push(Check::within(
            "max |pairing cross-ratio - 2/(1+cos(theta-alpha))|",
            err,
            0.0,
            s.tol(1e-6),
            "closed-form:pairing-cross-ratio",
        ));
        let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        if warp == 1.0 {
            rep.push(Check::within("pairing cross-ratio range", hi - lo, 0.0, s.tol(1e-6), "closed-form:isoparametric-constancy"));
        } else {
            rep.push(Check::above("pairing cross-ratio range", hi - lo, 0.05, "oracle:non-constancy"));
        }
        rep.datum("pairing_range", [lo, hi]);
    }
    rep.datum("samples", &reports);
    Ok(finish(rep, start))
}

/// Critical-point doubling on the lift plus the fiber-value identities.
pub fn taut_suite(kind: BaseKind, r: f64, warp: f64, dirs: usize, opts: TautOptions, s: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let base = make_base(kind, r, warp)?;
    let mut rep = RunReport::new("taut", s.seed);
    rep.param("base", kind);
    rep.param("r", r);
    rep.param("warp", warp);
    rep.param("dirs", dirs);
    rep.param("options", opts);
    let taut = taut_doubling_check(&base, dirs, s.seed, opts)?;
    let name = base.name();
    let doubled_fraction = taut.doubled as f64 / dirs.max(1) as f64;
    rep.push(Check::above(format!("{name}: fraction of directions with lift = 2 x base"), doubled_fraction, 0.9 - 1e-12, "closed-form:critical-doubling"));
    rep.push(Check::below(
        "excluded direction fraction",
        taut.excluded as f64 / dirs.max(1) as f64,
        0.2 + 1e-12,
        "oracle:search-reliability",
    ));
    rep.push(Check::within("max |lift critical value - ±sqrt(1/2 + l/2)|", taut.max_value_error, 0.0, s.tol(1e-6), "closed-form:fiber-values"));
    match kind {
        BaseKind::Cyclide => {
            let hits = taut
                .directions
                .iter()
                .filter(|d| d.base_count == Some(4) && d.lift_count == Some(8))
                .count();
            rep.push(Check::above("directions with counts (4, 8)", hits as f64, (9 * dirs) as f64 / 10.0 - 1e-9, "oracle:betti-sum"));
        }
        BaseKind::Cartan => {
            rep.push(
                Check::above("share of the most common (base, lift) pair", taut.modal_fraction, 0.9 - 1e-12, "oracle:count-stability")
                    .with_note(format!("most common pair {:?}", taut.modal_pair)),
            );
        }
    }
    rep.extend(fiber_checks(s));
    rep.datum("directions", &taut.directions);
    rep.datum("modal_pair", taut.modal_pair);
    Ok(finish(rep, start))
}

/// Closed-form fiber critical values against brute force and the affine
/// identity for `|α|²`.
pub fn fiber_checks(s: &Settings) -> Vec<Check> {
    let mut rng = rng::stream(s.seed, 0xf1be);
    let mut grid_err: f64 = 0.0;
    let mut square_err: f64 = 0.0;
    let mut ok = true;
    for _ in 0..10 {
        let (a, b, w, t) = random_fiber_instance(&mut rng, 1e-2);
        match (fiber_critical_values(a, b, w, t), fiber_grid_extrema(a, b, w, t, 10_000)) {
            (Ok(fc), Ok((hi, lo))) => {
                grid_err = grid_err.max((hi - fc.value_plus).abs()).max((lo - fc.value_minus).abs());
                let g = g_ab(a, b, w, t).unwrap_or(f64::NAN);
                square_err = square_err.max((fc.value_plus * fc.value_plus - g).abs());
            }
            _ => ok = false,
        }
    }
    let mut affine_err: f64 = 0.0;
    for _ in 0..100 {
        let (a, b, w, t) = random_fiber_instance(&mut rng, 1e-3);
        let g = g_ab(a, b, w, t).unwrap_or(f64::NAN);
        affine_err = affine_err.max((g - 0.5 - 0.5 * ell_ab(a, b, w, t)).abs());
    }
    vec![
        Check::holds("fiber instances evaluated", ok, "closed-form:fiber-values"),
        Check::within("max |fiber extrema - ±|alpha||", grid_err, 0.0, s.tol(1e-4), "oracle:fiber-grid"),
        Check::within("max |f^2 - g| at fiber critical points", square_err, 0.0, s.tol(1e-10), "closed-form:fiber-values"),
        Check::within("max |g - (1/2 + l/2)|", affine_err, 0.0, s.tol(1e-12), "closed-form:fiber-height-identity"),
    ]
}

fn distinct_angles<R: Rng>(rng: &mut R, count: usize, gap: f64) -> Vec<f64> {
    loop {
        let t: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..PI)).collect();
        let ok = t.iter().enumerate().all(|(i, a)| {
            t[i + 1..].iter().all(|b| {
                let d = (a - b).abs();
                d.min(PI - d) > gap
            })
        });
        if ok {
            return t;
        }
    }
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Cross-ratio invariance of curvature spheres under random Lie transforms.
pub fn lie_invariance_suite(trials: usize, s: &Settings) -> RunReport {
    let start = Instant::now();
    let n = 6;
    let mut rep = RunReport::new("lie-invariance", s.seed);
    rep.param("n", n);
    rep.param("trials", trials);
    let mut rng = rng::stream(s.seed, 0x11e);
    let mut worst: f64 = 0.0;
    let mut worst_defect: f64 = 0.0;
    let mut redrawn = Vec::new();
    let mut done = 0;
    let mut k = 0u64;
    while done < trials && k < 10 * trials as u64 + 10 {
        k += 1;
        let line = random_line(&mut rng, n);
        let thetas = distinct_angles(&mut rng, 4, 0.05);
        let b = random_lie_transform(s.seed.wrapping_add(k), n, 0.5);
        worst_defect = worst_defect.max(metric_defect(&b));
        let before: Vec<ProjParam> = thetas.iter().map(|&t| ProjParam::from_angle(t)).collect();
        let after = match reread_curvatures(&b, &line, &thetas) {
            Ok(a) => a,
            Err(e) => {
                redrawn.push(format!("trial {k}: {e}"));
                continue;
            }
        };
        let c0 = cross_ratio(before[0], before[1], before[2], before[3]);
        let c1 = cross_ratio(after[0], after[1], after[2], after[3]);
        match (c0, c1) {
            (Ok(c0), Ok(c1)) => worst = worst.max((c0 - c1).abs()),
            _ => worst = f64::NAN,
        }
        done += 1;
    }
    rep.push(Check::count("trials completed", done, trials, "oracle:projective-invariance"));
    rep.push(Check::within("max cross-ratio change", worst, 0.0, s.tol(1e-8), "oracle:projective-invariance"));
    rep.push(Check::within("max |B^T G B - G|", worst_defect, 0.0, s.tol(1e-8), "closed-form:lie-group"));

    let line = random_line(&mut rng, n);
    let thetas = distinct_angles(&mut rng, 4, 0.05);
    let id = DMatrix::identity(n + 3, n + 3);
    let identity_err = match reread_curvatures(&id, &line, &thetas) {
        Ok(ps) => max_of(ps.iter().zip(&thetas).map(|(p, &t)| angle_distance(p.angle(), t))),
        Err(_) => f64::NAN,
    };
    rep.push(Check::within("identity transform angle change", identity_err, 0.0, 1e-14, "closed-form:identity"));

    let mut shift_err: f64 = 0.0;
    for _ in 0..20 {
        let line = random_line(&mut rng, n);
        let thetas = distinct_angles(&mut rng, 4, 0.05);
        let t = rng.random_range(-PI..PI);
        shift_err = shift_err.max(match reread_curvatures(&parallel_matrix(t, n), &line, &thetas) {
            Ok(ps) => max_of(ps.iter().zip(&thetas).map(|(p, &th)| angle_distance(p.angle(), th + t))),
            Err(_) => f64::NAN,
        });
    }
    rep.push(Check::within("parallel transform: max |theta' - (theta + t)|", shift_err, 0.0, s.tol(1e-10), "oracle:radius-shift"));
    rep.datum("redrawn", redrawn);
    finish(rep, start)
}

/// Structural invariants: normal flips, the Lie quadric, projective
/// reparametrization and focal rank drops.
pub fn property_suite(s: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let mut rep = RunReport::new("properties", s.seed);
    let mut rng = rng::stream(s.seed, 0x9e0);

    let sys = build_system(2, 4)?;
    let manifold = v2_manifold(&sys)?;
    let points = sample_v2(&sys, s.seed, 5)?;
    let mut flip: f64 = 0.0;
    for fp in &points {
        let x = fp.to_vec();
        let xi = manifold.random_normal(&x, &mut rng)?;
        let a = manifold.principal_spectrum(&x, &xi, DEFAULT_CLUSTER_TOL)?;
        let b = manifold.principal_spectrum(&x, &(-&xi), DEFAULT_CLUSTER_TOL)?;
        let neg = b.negated();
        let va = a.spectrum.values();
        flip = flip.max(if va.len() == neg.len() {
            va.iter().zip(&neg).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        });
    }
    let cyc = S4Base::cyclide(0.6, 1.5)?;
    for _ in 0..5 {
        let q = cyc.sample_params(&mut rng);
        let a = cyc.principal_spectrum(&q, DEFAULT_CLUSTER_TOL)?.spectrum.values();
        let b = crate::engine::Hypersurface::principal_spectrum(&Negated(&cyc), &q, DEFAULT_CLUSTER_TOL)?;
        let neg = b.negated();
        flip = flip.max(if a.len() == neg.len() {
            a.iter().zip(&neg).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        });
    }
    rep.push(Check::within("spectrum(-xi) + spectrum(xi)", flip, 0.0, s.tol(1e-8), "closed-form:normal-flip"));

    let mut quadric: f64 = 0.0;
    for k in 0..20 {
        let b = random_lie_transform(s.seed.wrapping_add(1000 + k), 6, 0.5);
        let p = rng::unit_vector(&mut rng, 7);
        let rho = rng.random_range(0.0..PI);
        let x = sphere_to_lie(&p, rho)?;
        let y = x.transformed(&b);
        quadric = quadric.max(lie_inner(&y, &y)?.abs() / y.x.norm_squared());
    }
    rep.push(Check::within("max |<Bx, Bx>| / |Bx|^2 on the Lie quadric", quadric, 0.0, s.tol(1e-8), "closed-form:lie-quadric"));

    let mut cr: f64 = 0.0;
    for _ in 0..100 {
        let thetas = distinct_angles(&mut rng, 4, 0.05);
        let ps: Vec<ProjParam> = thetas.iter().map(|&t| ProjParam::from_angle(t)).collect();
        let m = loop {
            let m: [[f64; 2]; 2] = [
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            ];
            if (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() > 0.1 {
                break m;
            }
        };
        let qs: Vec<ProjParam> = ps.iter().map(|p| p.mapped(&m)).collect();
        let a = cross_ratio(ps[0], ps[1], ps[2], ps[3])?;
        let b = cross_ratio(qs[0], qs[1], qs[2], qs[3])?;
        cr = cr.max((a - b).abs());
    }
    rep.push(Check::within("cross-ratio change under 2x2 reparametrization", cr, 0.0, s.tol(1e-10), "closed-form:projective-invariance"));

    let x = points[0].to_vec();
    let xi = manifold.random_normal(&x, &mut rng)?;
    let chart = manifold.tube_chart(&x, &xi, 0.3)?;
    let q = chart.origin_params();
    let dim = 2 * sys.l - 2;
    let spec = manifold.principal_spectrum(&x, &xi, DEFAULT_CLUSTER_TOL)?;
    let mut focal_ok = true;
    let mut drops = Vec::new();
    for c in &spec.spectrum.clusters {
        let nullity = focal_nullity(&chart.with_radius(arccot(c.value)), &q, dim, 1e-6)?;
        focal_ok &= nullity == c.multiplicity;
        drops.push((c.value, c.multiplicity, nullity));
    }
    rep.push(Check::holds("focal rank drop equals multiplicity", focal_ok, "closed-form:focal-points"));
    rep.datum("focal_drops", drops);
    Ok(finish(rep, start))
}

/// A hypersurface with its normal reversed.
struct Negated<'a, H>(&'a H);

impl<H: PointNormalMap> PointNormalMap for Negated<'_, H> {
    fn param_dim(&self) -> usize {
        self.0.param_dim()
    }
    fn ambient_dim(&self) -> usize {
        self.0.ambient_dim()
    }
    fn point(&self, q: &[f64]) -> nalgebra::DVector<f64> {
        self.0.point(q)
    }
    fn normal(&self, q: &[f64]) -> nalgebra::DVector<f64> {
        -self.0.normal(q)
    }
    fn sample_params(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        self.0.sample_params(rng)
    }
}

impl<H: PointNormalMap> Hypersurface for Negated<'_, H> {}

/// Every suite with its standard parameters.
pub fn all_suite(s: &Settings) -> RunReport {
    let start = Instant::now();
    let mut rep = RunReport::new("all", s.seed);
    rep.absorb(clifford_standard(s));
    let mut run = |name: &str, res: Result<RunReport>| match res {
        Ok(sub) => rep.absorb(sub),
        Err(e) => rep.push(Check::failed(name, "suite", e.to_string())),
    };
    run("otfkm", otfkm_suite(2, 4, 5, Some(PI / 8.0), s));
    run("otfkm", otfkm_suite(3, 8, 5, None, s));
    run("pt", pt_suite(2, 4, 0.3, 100, s));
    run("mo", mo_suite(BaseKind::Cyclide, 0.6, 1.5, s));
    run("mo", mo_suite(BaseKind::Cyclide, 0.6, 1.0, s));
    run("mo", mo_suite(BaseKind::Cartan, PI / 6.0, 1.5, s));
    run("taut", taut_suite(BaseKind::Cyclide, 0.6, 1.0, 20, TautOptions::default(), s));
    run("taut", taut_suite(BaseKind::Cyclide, 0.6, 1.5, 20, TautOptions::default(), s));
    run("lie-invariance", Ok(lie_invariance_suite(100, s)));
    run("properties", property_suite(s));
    finish(rep, start)
}

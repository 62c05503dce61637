//! Clifford systems: `m-1` skew-symmetric orthogonal matrices on `R^l` with
//! `Eᵢ² = -I` and `EᵢEⱼ = -EⱼEᵢ`.
//!
//! Built explicitly from complex, quaternionic and octonionic multiplication
//! tables, the eight-fold periodicity step, and block-diagonal repetition.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::quat::Quaternion;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordSystem {
    pub m: usize,
    pub l: usize,
    pub es: Vec<DMatrix<f64>>,
}

/// Largest relation violations, measured as max-abs entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CliffordViolations {
    /// `max ‖Eᵢ² + I‖`
    pub square: f64,
    /// `max ‖EᵢEⱼ + EⱼEᵢ‖`, `i ≠ j`
    pub anticommute: f64,
    /// `max ‖Eᵢ + Eᵢᵀ‖`
    pub skew: f64,
    /// `max ‖EᵢᵀEᵢ - I‖`
    pub orthogonal: f64,
}

impl CliffordViolations {
    pub fn max(&self) -> f64 {
        self.square.max(self.anticommute).max(self.skew).max(self.orthogonal)
    }
}

/// Radon–Hurwitz number: for `l = 2^{4a+b} · odd`, `ρ(l) = 8a + 2^b`.
/// `R^l` carries exactly `ρ(l) - 1` anticommuting complex structures.
pub fn radon_hurwitz(l: usize) -> usize {
    assert!(l > 0, "Radon-Hurwitz number of 0");
    let k = l.trailing_zeros() as usize;
    8 * (k / 4) + (1 << (k % 4))
}

/// Largest `m` for which a Clifford system on `R^l` exists.
pub fn max_m(l: usize) -> usize {
    radon_hurwitz(l)
}

fn complex_unit() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

fn quaternion_units() -> Vec<DMatrix<f64>> {
    [Quaternion::I, Quaternion::J, Quaternion::K]
        .iter()
        .map(|&e| {
            DMatrix::from_fn(4, 4, |r, c| {
                let mut basis = [0.0; 4];
                basis[c] = 1.0;
                (e * Quaternion::from_slice(&basis)).to_array()[r]
            })
        })
        .collect()
}

/// Octonion product on pairs of quaternions: `(a,b)(c,d) = (ac - d̄b, da + bc̄)`.
fn octonion_mul(x: &[f64; 8], y: &[f64; 8]) -> [f64; 8] {
    let (a, b) = (Quaternion::from_slice(&x[..4]), Quaternion::from_slice(&x[4..]));
    let (c, d) = (Quaternion::from_slice(&y[..4]), Quaternion::from_slice(&y[4..]));
    let p = a * c - d.conj() * b;
    let q = d * a + b * c.conj();
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&p.to_array());
    out[4..].copy_from_slice(&q.to_array());
    out
}

fn octonion_units() -> Vec<DMatrix<f64>> {
    (1..8)
        .map(|unit| {
            let mut e = [0.0; 8];
            e[unit] = 1.0;
            DMatrix::from_fn(8, 8, |r, c| {
                let mut basis = [0.0; 8];
                basis[c] = 1.0;
                octonion_mul(&e, &basis)[r]
            })
        })
        .collect()
}

/// Full set of `ρ(2^b) - 1` structures on `R^{2^b}`, `b < 4`.
fn base_units(b: usize) -> Vec<DMatrix<f64>> {
    match b {
        0 => vec![],
        1 => vec![complex_unit()],
        2 => quaternion_units(),
        3 => octonion_units(),
        _ => unreachable!("base exponent below 4"),
    }
}

/// Eight anticommuting complex structures on `R^16`.
fn sixteen_units() -> Vec<DMatrix<f64>> {
    let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    let mut out: Vec<DMatrix<f64>> = octonion_units().iter().map(|o| k.kronecker(o)).collect();
    out.push(complex_unit().kronecker(&DMatrix::identity(8, 8)));
    out
}

/// Maximal system on `R^{2^k}`.
fn power_of_two_units(k: usize) -> Vec<DMatrix<f64>> {
    let mut units = base_units(k % 4);
    let mut n = 1usize << (k % 4);
    for _ in 0..k / 4 {
        let g = sixteen_units();
        let omega = g.iter().skip(1).fold(g[0].clone(), |acc, x| acc * x);
        let mut next: Vec<DMatrix<f64>> = units.iter().map(|e| e.kronecker(&omega)).collect();
        let id = DMatrix::identity(n, n);
        next.extend(g.iter().map(|gj| id.kronecker(gj)));
        units = next;
        n *= 16;
    }
    units
}

/// Deterministic Clifford system with `m - 1` matrices on `R^l`.
pub fn build_system(m: usize, l: usize) -> Result<CliffordSystem> {
    if m == 0 || l == 0 {
        return Err(Error::InvalidParameter(format!(
            "Clifford system needs m >= 1 and l >= 1, got m = {m}, l = {l}"
        )));
    }
    let bound = max_m(l);
    if m > bound {
        return Err(Error::RadonHurwitz { m, l, max_m: bound });
    }
    let k = l.trailing_zeros() as usize;
    let block = 1usize << k;
    let copies = l / block;
    let units = power_of_two_units(k);
    let es = units
        .into_iter()
        .take(m - 1)
        .map(|e| DMatrix::identity(copies, copies).kronecker(&e))
        .collect();
    Ok(CliffordSystem { m, l, es })
}

impl CliffordSystem {
    pub fn from_matrices(l: usize, es: Vec<DMatrix<f64>>) -> Result<Self> {
        for e in &es {
            if e.nrows() != l || e.ncols() != l {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    found: e.nrows().max(e.ncols()),
                });
            }
        }
        Ok(CliffordSystem { m: es.len() + 1, l, es })
    }

    pub fn verify(&self) -> CliffordViolations {
        verify_system(self)
    }
}

pub fn verify_system(sys: &CliffordSystem) -> CliffordViolations {
    let id = DMatrix::<f64>::identity(sys.l, sys.l);
    let mut v = CliffordViolations {
        square: 0.0,
        anticommute: 0.0,
        skew: 0.0,
        orthogonal: 0.0,
    };
    for (i, e) in sys.es.iter().enumerate() {
        v.square = v.square.max((e * e + &id).abs().max());
        v.skew = v.skew.max((e + e.transpose()).abs().max());
        v.orthogonal = v.orthogonal.max((e.transpose() * e - &id).abs().max());
        for f in &sys.es[i + 1..] {
            v.anticommute = v.anticommute.max((e * f + f * e).abs().max());
        }
    }
    v
}

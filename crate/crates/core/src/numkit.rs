//! Small dense numerical kernel: symmetric eigensolves with multiplicity
//! clustering, Gram–Schmidt, finite-difference Jacobians and SVD helpers.
//!
//! Dimensions in this crate never exceed a few dozen, so everything is dense
//! and allocation-happy.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Default eigenvalue clustering threshold.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-4;

/// One group of numerically equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub value: f64,
    pub multiplicity: usize,
    /// Largest distance from a member to `value`.
    pub spread: f64,
}

/// Eigenvalues of a symmetric matrix grouped into clusters of equal value.
///
/// Cluster values are strictly increasing and the multiplicities sum to the
/// matrix dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredSpectrum {
    pub clusters: Vec<Cluster>,
    pub tolerance: f64,
    /// Set when some gap between adjacent eigenvalues lies in `[tol/2, 2 tol]`,
    /// i.e. the grouping would change under a modest change of `tolerance`.
    pub ambiguous: bool,
    /// Frobenius norm of `(S - Sᵀ)/2` of the input.
    pub asymmetry: f64,
}

impl ClusteredSpectrum {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.multiplicity).collect()
    }
}

/// Eigen-decomposition of the symmetric part of a matrix, sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
    pub asymmetry: f64,
}

/// Symmetrize `s` and diagonalize it.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<SymEigen> {
    if s.nrows() != s.ncols() {
        return Err(Error::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(" in eigensolve input".into()));
    }
    let n = s.nrows();
    let sym = (s + s.transpose()) * 0.5;
    let asymmetry = ((s - s.transpose()) * 0.5).norm();
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
            asymmetry,
        });
    }
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymEigen {
        values,
        vectors,
        asymmetry,
    })
}

/// Single-linkage clustering of ascending values: a new cluster starts
/// whenever the gap to the previous value reaches `tol`.
pub fn cluster_sorted(values: &[f64], tol: f64) -> (Vec<Cluster>, bool) {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    let mut ambiguous = false;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            let gap = v - values[i - 1];
            if gap >= 0.5 * tol && gap <= 2.0 * tol {
                ambiguous = true;
            }
            if gap < tol {
                groups.last_mut().unwrap().push(v);
                continue;
            }
        }
        groups.push(vec![v]);
    }
    let clusters = groups
        .into_iter()
        .map(|g| {
            let value = g.iter().sum::<f64>() / g.len() as f64;
            let spread = g.iter().map(|x| (x - value).abs()).fold(0.0, f64::max);
            Cluster {
                value,
                multiplicity: g.len(),
                spread,
            }
        })
        .collect();
    (clusters, ambiguous)
}

/// Eigenvalues of `(S + Sᵀ)/2` grouped into clusters with threshold `tol`.
pub fn sym_eig_clustered(s: &DMatrix<f64>, tol: f64) -> Result<ClusteredSpectrum> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster tolerance must be positive, got {tol}"
        )));
    }
    let eig = sym_eig(s)?;
    let (clusters, ambiguous) = cluster_sorted(&eig.values, tol);
    Ok(ClusteredSpectrum {
        clusters,
        tolerance: tol,
        ambiguous,
        asymmetry: eig.asymmetry,
    })
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Fails with the index of the first vector whose residual after removing
/// the span of its predecessors is below `1e-8` (relative to its length).
pub fn orthonormalize(vectors: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if let Some(first) = out.first() {
            if first.len() != v.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: v.len(),
                });
            }
        }
        let scale = v.norm();
        if !scale.is_finite() {
            return Err(Error::NonFinite(format!(" in vector {index}")));
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let d = q.dot(&w);
                w.axpy(-d, q, 1.0);
            }
        }
        let norm = w.norm();
        if scale == 0.0 || norm <= 1e-8 * scale.max(1.0) {
            return Err(Error::RankDeficient { index });
        }
        out.push(w / norm);
    }
    Ok(out)
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in
/// `R^n`. The input is assumed orthonormal.
pub fn orthogonal_complement(vectors: &[DVector<f64>], n: usize) -> Vec<DVector<f64>> {
    let mut proj = DMatrix::<f64>::identity(n, n);
    for v in vectors {
        proj -= v * v.transpose();
    }
    let eig = sym_eig(&proj).expect("projector is square and finite");
    let k = n - vectors.len();
    (n - k..n).map(|c| eig.vectors.column(c).into_owned()).collect()
}

fn check_finite(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(" in finite-difference evaluation".into()))
    }
}

/// Central-difference Jacobian of `map` at `x`; column `j` is `∂map/∂x_j`.
pub fn jacobian_fd<F>(map: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let plus = map(&probe);
        probe[j] = x[j] - step;
        let minus = map(&probe);
        probe[j] = x[j];
        check_finite(&plus)?;
        check_finite(&minus)?;
        columns.push((plus - minus) / (2.0 * step));
    }
    if columns.is_empty() {
        return Ok(DMatrix::zeros(map(x).len(), 0));
    }
    Ok(DMatrix::from_columns(&columns))
}

/// Fourth-order (five-point) central-difference Jacobian. Used where the
/// differentiated map itself contains a finite difference, so a larger step
/// keeps round-off from compounding.
pub fn jacobian_fd4<F>(map: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let mut eval = |offset: f64| {
            probe[j] = x[j] + offset;
            let v = map(&probe);
            probe[j] = x[j];
            check_finite(&v).map(|_| v)
        };
        let p1 = eval(step)?;
        let m1 = eval(-step)?;
        let p2 = eval(2.0 * step)?;
        let m2 = eval(-2.0 * step)?;
        columns.push(((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * step));
    }
    if columns.is_empty() {
        return Ok(DMatrix::zeros(map(x).len(), 0));
    }
    Ok(DMatrix::from_columns(&columns))
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol · σ_max` (absolute `tol` when the
/// matrix is tiny).
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&v| v > tol * top).count()
}

/// Thin SVD `m = U Σ Vᵀ` truncated to the leading `k` singular triples,
/// sorted by decreasing singular value.
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
    /// All singular values, descending.
    pub all_sigma: Vec<f64>,
}

pub fn truncated_svd(m: &DMatrix<f64>, k: usize) -> TruncatedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let all_sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let k = k.min(order.len());
    let cols: Vec<DVector<f64>> = order[..k].iter().map(|&i| u.column(i).into_owned()).collect();
    let vcols: Vec<DVector<f64>> = order[..k]
        .iter()
        .map(|&i| vt.row(i).transpose().into_owned())
        .collect();
    TruncatedSvd {
        u: if k == 0 { DMatrix::zeros(m.nrows(), 0) } else { DMatrix::from_columns(&cols) },
        sigma: all_sigma[..k].to_vec(),
        v: if k == 0 { DMatrix::zeros(m.ncols(), 0) } else { DMatrix::from_columns(&vcols) },
        all_sigma,
    }
}

/// Moore–Penrose pseudo-inverse solve `x = A⁺ b` with relative cutoff.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (rcond * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

//! Dense decompositions and the two feasible-set projections used by the solver.
//!
//! Everything here is a pure function of its input. The decompositions come
//! from `nalgebra` (Golub-Kahan SVD, symmetric QR eigensolver) and are
//! deterministic for a fixed input.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Matrix;

/// Numerical thresholds shared by the analyzer and the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values below `rank_rtol * sigma_max` count as zero.
    pub rank_rtol: f64,
    /// Generalized eigenvalues with `|beta| <= eig_atol * (|E| + |A|)` are infinite.
    pub eig_atol: f64,
    /// Slack on the `|lambda| <= 1` stability verdict.
    pub stability_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rtol: 1e-9,
            eig_atol: 1e-10,
            stability_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_rtol", self.rank_rtol),
            ("eig_atol", self.eig_atol),
            ("stability_tol", self.stability_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerances(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.rank_rtol >= 1.0 {
            return Err(Error::InvalidTolerances(format!(
                "rank_rtol must be < 1, got {}",
                self.rank_rtol
            )));
        }
        Ok(())
    }
}

/// Returns the first non-finite entry as an error.
pub fn ensure_finite(m: &Matrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &Matrix) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    let mut s = m.singular_values();
    s.as_mut_slice()
        .sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values strictly above `rank_rtol * sigma_1`.
pub fn numerical_rank(m: &Matrix, tol: &Tolerances) -> Result<usize> {
    ensure_finite(m)?;
    Ok(rank_unchecked(m, tol.rank_rtol))
}

pub(crate) fn rank_unchecked(m: &Matrix, rtol: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.iter().next() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rtol * top).count()
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).iter().next().copied().unwrap_or(0.0)
}

/// Orthonormal basis (as columns) of the right null space of `m`.
///
/// Right singular vectors whose singular value is at most `rtol * sigma_1`
/// (or every vector, for the zero matrix) span the returned basis.
pub fn null_space_basis(m: &Matrix, rtol: f64) -> Matrix {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to square so that V is n x n even for wide or short inputs.
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let top = svd.singular_values.max();
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| top == 0.0 || svd.singular_values[k] <= rtol * top)
        .collect();
    let mut z = DMatrix::zeros(n, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        for i in 0..n {
            z[(i, c)] = v_t[(k, i)];
        }
    }
    z
}

/// Nearest orthogonal matrix in Frobenius norm, `Q = U V^T` from `M = U S V^T`.
///
/// When `M` is rank deficient the minimizer is not unique; the product of the
/// singular-vector factors returned by the decomposition is used.
pub fn polar_orthogonal_factor(m: &Matrix) -> Result<Matrix> {
    ensure_square(m, "polar input")?;
    ensure_finite(m)?;
    Ok(polar_unchecked(m))
}

pub(crate) fn polar_unchecked(m: &Matrix) -> Matrix {
    if m.is_empty() {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested left singular vectors");
    let v_t = svd.v_t.expect("requested right singular vectors");
    u * v_t
}

/// Frobenius projection onto `{B = B^T, B >= 0, |B|_2 <= 1}`.
///
/// The input is symmetrized first; the set holds only symmetric matrices so
/// this composition is the exact projection.
pub fn project_psd_contraction(m: &Matrix) -> Result<Matrix> {
    ensure_square(m, "projection input")?;
    ensure_finite(m)?;
    Ok(psd_contraction_unchecked(m))
}

pub(crate) fn psd_contraction_unchecked(m: &Matrix) -> Matrix {
    if m.is_empty() {
        return m.clone();
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.clamp(0.0, 1.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &Matrix) -> f64 {
    m.iter().map(|x| x * x).sum()
}

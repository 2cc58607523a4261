//! Admissibility analysis of a matrix pair `(E, A)`.
//!
//! A pair is admissible when it is regular, of index at most one, and stable
//! (finite eigenvalues in the closed unit disc, unit-circle eigenvalues
//! semisimple). Finite eigenvalues come from a QZ reduction of the pencil.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::ComputeEigenvectors;
use faer::linalg::gevd;
use faer::{c64, Mat, Par};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ensure_finite, Tolerances};
use crate::Matrix;

type C64 = Complex<f64>;

/// Eigenvalues of a unit-circle cluster closer than this are merged when
/// checking semisimplicity.
pub const CLUSTER_TOL: f64 = 1e-6;

/// A square pair `(E, A)` of identical dimension with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    e: Matrix,
    a: Matrix,
}

impl MatrixPair {
    pub fn new(e: Matrix, a: Matrix) -> Result<Self> {
        if e.nrows() != e.ncols() || a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "E is {}x{} and A is {}x{}; both must be square",
                e.nrows(),
                e.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if e.nrows() != a.nrows() {
            return Err(Error::Dimension(format!(
                "E is {0}x{0} but A is {1}x{1}",
                e.nrows(),
                a.nrows()
            )));
        }
        ensure_finite(&e)?;
        ensure_finite(&a)?;
        Ok(Self { e, a })
    }

    /// The standard pair `(I, A)`.
    pub fn standard(a: Matrix) -> Result<Self> {
        let n = a.nrows();
        Self::new(DMatrix::identity(n, n), a)
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.e, self.a)
    }

    /// Squared Frobenius distance `|E - E'|^2 + |A - A'|^2`.
    pub fn distance_sq(&self, other: &MatrixPair) -> f64 {
        numerics::frobenius_sq(&(&self.e - &other.e))
            + numerics::frobenius_sq(&(&self.a - &other.a))
    }
}

/// One finite eigenvalue of the pencil `zE - A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub value: C64,
    pub modulus: f64,
    pub on_unit_circle: bool,
}

impl SpectrumEntry {
    fn new(value: C64, stability_tol: f64) -> Self {
        let modulus = value.norm();
        Self {
            value,
            modulus,
            on_unit_circle: (modulus - 1.0).abs() <= stability_tol,
        }
    }
}

/// Outcome of the sampled-determinant regularity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCheck {
    pub regular: bool,
    /// Sample point with the largest `|det(zE - A)|`.
    pub witness: Option<C64>,
    pub max_abs_det: f64,
    pub threshold: f64,
    pub warning: Option<String>,
}

/// Verdicts of the admissibility analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub regular: bool,
    pub rank_e: usize,
    pub finite_count: usize,
    pub infinite_count: usize,
    pub index_at_most_one: bool,
    pub stable: bool,
    pub admissible: bool,
    pub spectrum: Vec<SpectrumEntry>,
    pub warnings: Vec<String>,
}

/// Decides whether `det(zE - A)` is identically zero.
///
/// The determinant is a polynomial of degree at most `n`, so it is sampled at
/// `2n + 1` points on a circle of radius `1 + |A| / (|E| + eps)`. The pencil
/// is declared singular only if every sample falls below
/// `n * eps * (rho |E| + |A|)^n`.
pub fn is_regular(pair: &MatrixPair, _tol: &Tolerances) -> RegularityCheck {
    let n = pair.n();
    if n == 0 {
        return RegularityCheck {
            regular: true,
            witness: None,
            max_abs_det: 1.0,
            threshold: 0.0,
            warning: None,
        };
    }
    let norm_e = numerics::spectral_norm(pair.e());
    let norm_a = numerics::spectral_norm(pair.a());
    let rho = 1.0 + norm_a / (norm_e + f64::EPSILON);
    let scale = rho * norm_e + norm_a;
    let threshold = n as f64 * f64::EPSILON * scale.powi(n as i32);

    let e = pair.e().map(|x| C64::new(x, 0.0));
    let a = pair.a().map(|x| C64::new(x, 0.0));
    let samples = 2 * n + 1;
    let mut best = (0.0f64, C64::new(0.0, 0.0));
    for j in 0..samples {
        // Offset by a third of a step so no sample sits on the real axis.
        let theta = std::f64::consts::TAU * (j as f64 + 1.0 / 3.0) / samples as f64;
        let z = C64::from_polar(rho, theta);
        let d = (&e * z - &a).lu().determinant().norm();
        if d > best.0 || j == 0 {
            best = (d, z);
        }
    }
    let regular = best.0 > threshold;
    let warning = if regular && best.0 <= 1e6 * threshold {
        Some(format!(
            "nearly singular pencil: max |det(zE - A)| = {:.3e} is within 1e6 of the threshold {:.3e}",
            best.0, threshold
        ))
    } else {
        None
    };
    RegularityCheck {
        regular,
        witness: regular.then_some(best.1),
        max_abs_det: best.0,
        threshold,
        warning,
    }
}

fn to_faer_complex(m: &Matrix) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Generalized eigenvalues `(alpha, beta)` of `A x = lambda E x` via QZ.
///
/// Runs the complex QZ iteration on the real data; the real-arithmetic
/// variant in faer 0.24 returns unpaired eigenvalues for some
/// ill-conditioned pencils.
fn generalized_eigenvalues(pair: &MatrixPair) -> Result<Vec<(C64, C64)>> {
    let n = pair.n();
    let mut a = to_faer_complex(pair.a());
    let mut e = to_faer_complex(pair.e());
    let mut alpha = Diag::<c64>::zeros(n);
    let mut beta = Diag::<c64>::zeros(n);
    let par = Par::Seq;
    let scratch = gevd::gevd_scratch::<c64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    );
    let mut buf = MemBuffer::new(scratch);
    gevd::gevd_cplx(
        a.as_mut(),
        e.as_mut(),
        alpha.as_mut(),
        beta.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence)?;
    Ok(alpha
        .column_vector()
        .iter()
        .zip(beta.column_vector().iter())
        .map(|(x, y)| (C64::new(x.re, x.im), C64::new(y.re, y.im)))
        .collect())
}

/// Finite eigenvalues of the pencil, sorted by real then imaginary part.
///
/// Pairs with `|beta| > eig_atol * (|E| + |A|)` give `lambda = alpha / beta`;
/// the rest are infinite. Fails with [`Error::SingularPencil`] when the pair
/// is not regular.
pub fn finite_spectrum(pair: &MatrixPair, tol: &Tolerances) -> Result<Vec<SpectrumEntry>> {
    if !is_regular(pair, tol).regular {
        return Err(Error::SingularPencil);
    }
    finite_spectrum_unchecked(pair, tol)
}

fn finite_spectrum_unchecked(pair: &MatrixPair, tol: &Tolerances) -> Result<Vec<SpectrumEntry>> {
    if pair.n() == 0 {
        return Ok(Vec::new());
    }
    let scale = numerics::spectral_norm(pair.e()) + numerics::spectral_norm(pair.a());
    let cutoff = tol.eig_atol * scale;
    let mut out: Vec<SpectrumEntry> = generalized_eigenvalues(pair)?
        .into_iter()
        .filter(|(_, beta)| beta.norm() > cutoff)
        .map(|(alpha, beta)| SpectrumEntry::new(alpha / beta, tol.stability_tol))
        .collect();
    out.sort_by(|x, y| {
        x.value
            .re
            .total_cmp(&y.value.re)
            .then(x.value.im.total_cmp(&y.value.im))
    });
    Ok(out)
}

/// Whether a regular pair has index at most one.
///
/// With `Z` an orthonormal basis of the null space of `E`, the pair has index
/// at most one exactly when `[E | A Z]` has full row rank. Nonsingular `E`
/// (index zero) passes trivially.
pub fn index_at_most_one(pair: &MatrixPair, tol: &Tolerances) -> Result<bool> {
    if !is_regular(pair, tol).regular {
        return Err(Error::SingularPencil);
    }
    Ok(index_test(pair, tol))
}

fn index_test(pair: &MatrixPair, tol: &Tolerances) -> bool {
    let n = pair.n();
    if n == 0 || numerics::rank_unchecked(pair.e(), tol.rank_rtol) == n {
        return true;
    }
    let z = numerics::null_space_basis(pair.e(), tol.rank_rtol);
    let az = pair.a() * &z;
    let mut stacked = DMatrix::zeros(n, n + az.ncols());
    stacked.view_mut((0, 0), (n, n)).copy_from(pair.e());
    stacked.view_mut((0, n), (n, az.ncols())).copy_from(&az);
    numerics::rank_unchecked(&stacked, tol.rank_rtol) == n
}

/// Groups eigenvalues by single linkage at `CLUSTER_TOL`.
fn clusters(values: &[C64]) -> Vec<Vec<usize>> {
    let mut label: Vec<usize> = (0..values.len()).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            if (values[i] - values[j]).norm() <= CLUSTER_TOL {
                let (ri, rj) = (root(&mut label, i), root(&mut label, j));
                if ri != rj {
                    label[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; values.len()];
    for i in 0..values.len() {
        let r = root(&mut label, i);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of_root[r]].push(i);
    }
    groups
}

/// `n - rank(z E - A)` with an absolute cutoff of `CLUSTER_TOL * (|z||E| + |A|)`.
fn geometric_multiplicity(pair: &MatrixPair, z: C64) -> usize {
    let n = pair.n();
    let e = pair.e().map(|x| C64::new(x, 0.0));
    let a = pair.a().map(|x| C64::new(x, 0.0));
    let m = &e * z - &a;
    let scale = z.norm() * numerics::spectral_norm(pair.e()) + numerics::spectral_norm(pair.a());
    let cutoff = CLUSTER_TOL * scale;
    let rank = m.singular_values().iter().filter(|&&s| s > cutoff).count();
    n - rank
}

/// Fills every field of an [`AdmissibilityReport`]. Never fails; numerical
/// trouble is recorded in `warnings`.
pub fn analyze_admissibility(pair: &MatrixPair, tol: &Tolerances) -> AdmissibilityReport {
    let n = pair.n();
    let mut warnings = Vec::new();
    let rank_e = numerics::rank_unchecked(pair.e(), tol.rank_rtol);
    let reg = is_regular(pair, tol);
    if let Some(w) = reg.warning.clone() {
        warnings.push(w);
    }
    if !reg.regular {
        warnings.push("pencil is singular; spectrum and index are undefined".to_string());
        return AdmissibilityReport {
            regular: false,
            rank_e,
            finite_count: 0,
            infinite_count: 0,
            index_at_most_one: false,
            stable: false,
            admissible: false,
            spectrum: Vec::new(),
            warnings,
        };
    }

    let index_ok = index_test(pair, tol);
    let spectrum = match finite_spectrum_unchecked(pair, tol) {
        Ok(s) => s,
        Err(e) => {
            warnings.push(format!("finite spectrum unavailable: {e}"));
            return AdmissibilityReport {
                regular: true,
                rank_e,
                finite_count: 0,
                infinite_count: n,
                index_at_most_one: index_ok,
                stable: false,
                admissible: false,
                spectrum: Vec::new(),
                warnings,
            };
        }
    };

    let inside = spectrum
        .iter()
        .all(|s| s.modulus <= 1.0 + tol.stability_tol);
    let mut semisimple = true;
    if inside {
        let values: Vec<C64> = spectrum.iter().map(|s| s.value).collect();
        for group in clusters(&values) {
            if !group.iter().any(|&k| spectrum[k].on_unit_circle) {
                continue;
            }
            let center = group.iter().map(|&k| values[k]).sum::<C64>() / group.len() as f64;
            let algebraic = group.len();
            let geometric = geometric_multiplicity(pair, center);
            warnings.push(format!(
                "unit-circle eigenvalue {:.6}{:+.6}i: algebraic multiplicity {algebraic}, geometric {geometric} (cluster tolerance {CLUSTER_TOL:e})",
                center.re, center.im
            ));
            if geometric < algebraic {
                semisimple = false;
            }
        }
    }
    let stable = inside && semisimple;
    if spectrum
        .iter()
        .any(|s| (s.modulus - 1.0).abs() <= tol.stability_tol)
    {
        warnings.push(format!(
            "stability verdict is within stability_tol = {:e} of the unit circle",
            tol.stability_tol
        ));
    }
    let finite_count = spectrum.len();
    AdmissibilityReport {
        regular: true,
        rank_e,
        finite_count,
        infinite_count: n - finite_count,
        index_at_most_one: index_ok,
        stable,
        admissible: index_ok && stable,
        spectrum,
        warnings,
    }
}

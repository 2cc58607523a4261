//! Parametrization of rank-`r` admissible pairs.
//!
//! Every admissible pair with `rank(Ê) = r` can be written as
//!
//! ```text
//! Ê = W [I_r 0; 0 0] T,    Â = W [UB 0; 0 I_{n-r}] T
//! ```
//!
//! with `W`, `T` invertible, `U` orthogonal and `B` a symmetric PSD
//! contraction. The similarity `S` of the stable-matrix factorization
//! `S^{-1} U B S` is folded into `W` and `T`, so it has no runtime
//! representation here.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, frobenius_sq, Tolerances};
use crate::pencil::MatrixPair;
use crate::Matrix;

/// Decision variables `(W, T, U, B)` and the target rank `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamStateJson", try_from = "ParamStateJson")]
pub struct ParamState {
    pub w: Matrix,
    pub t: Matrix,
    pub u: Matrix,
    pub b: Matrix,
    r: usize,
}

/// Parts of the objective that do not depend on `(U, B)`.
///
/// With `P = W[:, :r]`, `Q = T[:r, :]` and `R = A - W[:, r:] T[r:, :]`, the
/// `A`-term of the objective equals `|R - P (UB) Q|_F^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedData {
    pub p: Matrix,
    pub q: Matrix,
    pub r: Matrix,
}

impl ParamState {
    pub fn new(w: Matrix, t: Matrix, u: Matrix, b: Matrix) -> Result<Self> {
        let n = w.nrows();
        let r = u.nrows();
        let square = |m: &Matrix, k: usize| m.nrows() == k && m.ncols() == k;
        if !(square(&w, n) && square(&t, n)) {
            return Err(Error::Dimension(format!(
                "W ({}x{}) and T ({}x{}) must both be n x n",
                w.nrows(),
                w.ncols(),
                t.nrows(),
                t.ncols()
            )));
        }
        if !(square(&u, r) && square(&b, r)) {
            return Err(Error::Dimension(format!(
                "U ({}x{}) and B ({}x{}) must both be r x r",
                u.nrows(),
                u.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if r == 0 || r > n {
            return Err(Error::InvalidRank { r, n });
        }
        for m in [&w, &t, &u, &b] {
            numerics::ensure_finite(m)?;
        }
        Ok(Self { w, t, u, b, r })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Soft invariants: `U` orthogonal, `B` a symmetric PSD contraction,
    /// `W` and `T` numerically invertible. Returns one message per violation.
    pub fn invariant_warnings(&self, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        let r = self.r;
        let orth = (self.u.transpose() * &self.u - DMatrix::identity(r, r)).norm();
        if orth > 1e-10 {
            out.push(format!("U is not orthogonal: |U^T U - I|_F = {orth:.3e}"));
        }
        let asym = (&self.b - self.b.transpose()).abs().max();
        if asym > 1e-12 {
            out.push(format!("B is not symmetric: max asymmetry {asym:.3e}"));
        } else {
            let eig = self.b.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = (eig.min(), eig.max());
            if lo < -1e-12 || hi > 1.0 + 1e-12 {
                out.push(format!("B eigenvalues leave [0, 1]: [{lo:.3e}, {hi:.3e}]"));
            }
        }
        for (name, m) in [("W", &self.w), ("T", &self.t)] {
            let s = numerics::singular_values(m);
            let (top, bottom) = (s[0], s[s.len() - 1]);
            if bottom <= tol.rank_rtol * top {
                out.push(format!(
                    "{name} is numerically singular: sigma_min / sigma_max = {:.3e}",
                    if top > 0.0 { bottom / top } else { 0.0 }
                ));
            }
        }
        out
    }

    fn check_target(&self, target: &MatrixPair) -> Result<()> {
        if target.n() != self.n() {
            return Err(Error::Dimension(format!(
                "state has n = {} but target pair has n = {}",
                self.n(),
                target.n()
            )));
        }
        Ok(())
    }
}

/// `Ê = W diag(I_r, 0) T` and `Â = W diag(UB, I_{n-r}) T`.
pub fn assemble(state: &ParamState) -> Result<MatrixPair> {
    let (e, a) = assemble_parts(state);
    MatrixPair::new(e, a)
}

pub(crate) fn assemble_parts(state: &ParamState) -> (Matrix, Matrix) {
    let (n, r) = (state.n(), state.r);
    let p = state.w.columns(0, r);
    let q = state.t.rows(0, r);
    let e = p * q;
    let mut a = p * (&state.u * &state.b) * q;
    if r < n {
        a += state.w.columns(r, n - r) * state.t.rows(r, n - r);
    }
    (e, a)
}

/// `|E - Ê|_F^2 + |A - Â|_F^2` for the pair assembled from `state`.
pub fn objective(state: &ParamState, target: &MatrixPair) -> Result<f64> {
    state.check_target(target)?;
    Ok(objective_unchecked(state, target))
}

pub(crate) fn objective_unchecked(state: &ParamState, target: &MatrixPair) -> f64 {
    let (e, a) = assemble_parts(state);
    frobenius_sq(&(target.e() - e)) + frobenius_sq(&(target.a() - a))
}

/// `P`, `Q` and `R` for the `(U, B)` subproblem.
pub fn reduced_data(state: &ParamState, target: &MatrixPair) -> Result<ReducedData> {
    state.check_target(target)?;
    Ok(reduced_unchecked(state, target))
}

pub(crate) fn reduced_unchecked(state: &ParamState, target: &MatrixPair) -> ReducedData {
    let (n, r) = (state.n(), state.r);
    let p = state.w.columns(0, r).into_owned();
    let q = state.t.rows(0, r).into_owned();
    let mut rem = target.a().clone();
    if r < n {
        rem -= state.w.columns(r, n - r) * state.t.rows(r, n - r);
    }
    ReducedData { p, q, r: rem }
}

/// Initial point: `W = T = I`, and `(U, B)` minimizing `|A[:r, :r] - UB|_F`
/// over orthogonal `U` and PSD contractions `B`, i.e. `U` the polar factor of
/// `A[:r, :r]` and `B` the projection of `U^T A[:r, :r]`.
pub fn initialize(target: &MatrixPair, r: usize) -> Result<ParamState> {
    let n = target.n();
    if r == 0 || r > n {
        return Err(Error::InvalidRank { r, n });
    }
    let lead = target.a().view((0, 0), (r, r)).into_owned();
    let u = numerics::polar_unchecked(&lead);
    let b = numerics::psd_contraction_unchecked(&(u.transpose() * &lead));
    Ok(ParamState {
        w: DMatrix::identity(n, n),
        t: DMatrix::identity(n, n),
        u,
        b,
        r,
    })
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ParamStateJson {
    W: Vec<Vec<f64>>,
    T: Vec<Vec<f64>>,
    U: Vec<Vec<f64>>,
    B: Vec<Vec<f64>>,
    r: usize,
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|row| row.iter().copied().collect())
        .collect()
}

fn from_rows(name: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != ncols) {
        return Err(Error::Dimension(format!("{name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<ParamState> for ParamStateJson {
    fn from(s: ParamState) -> Self {
        Self {
            W: to_rows(&s.w),
            T: to_rows(&s.t),
            U: to_rows(&s.u),
            B: to_rows(&s.b),
            r: s.r,
        }
    }
}

impl TryFrom<ParamStateJson> for ParamState {
    type Error = Error;

    fn try_from(j: ParamStateJson) -> Result<Self> {
        let state = ParamState::new(
            from_rows("W", &j.W)?,
            from_rows("T", &j.T)?,
            from_rows("U", &j.U)?,
            from_rows("B", &j.B)?,
        )?;
        if state.r != j.r {
            return Err(Error::Dimension(format!(
                "r = {} disagrees with U of size {}",
                j.r, state.r
            )));
        }
        Ok(state)
    }
}

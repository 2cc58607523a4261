//! Test instances: Grcar matrices, the scaled all-ones matrix, identities
//! with zeroed pivots, and small hand-built pairs with known structure.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pencil::MatrixPair;
use crate::Matrix;

/// Grcar matrix of dimension `n` and order `k`: `-1` on the first
/// subdiagonal, `+1` on the diagonal and the first `k` superdiagonals.
pub fn grcar(n: usize, k: usize) -> Result<Matrix> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidInstance(format!(
            "grcar needs 1 <= k < n, got n = {n}, k = {k}"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j + 1 {
            -1.0
        } else if j >= i && j - i <= k {
            1.0
        } else {
            0.0
        }
    }))
}

/// `(I_n, alpha e e^T)`.
pub fn scaled_ones(n: usize, alpha: f64) -> Result<MatrixPair> {
    if n == 0 || !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidInstance(format!(
            "scaled_ones needs n >= 1 and alpha > 0, got n = {n}, alpha = {alpha}"
        )));
    }
    MatrixPair::standard(DMatrix::from_element(n, n, alpha))
}

/// Identity with the first `p` diagonal entries set to zero (rank `n - p`).
pub fn rank_deficient_identity(n: usize, p: usize) -> Result<Matrix> {
    if n == 0 || p >= n {
        return Err(Error::InvalidInstance(format!(
            "rank_deficient_identity needs 0 <= p <= n - 1, got n = {n}, p = {p}"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j && i >= p {
            1.0
        } else {
            0.0
        }
    }))
}

/// Small pairs with analytically known structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "param")]
pub enum Fixture {
    /// Regular, index one, stable; single finite eigenvalue 1/2.
    Ex1,
    /// `ex1` with `E[1, 2] = eps2`: still regular and stable, index two.
    Ex1Index2(f64),
    /// `ex1` with `E[1, 1] = eps1`: second finite eigenvalue `1 / eps1`.
    Ex1Unstable(f64),
    /// `ex1` with `A[2, 2] = 1 - delta`: singular at `delta = 1`.
    Ex1SingularLimit(f64),
    /// `(I, [[0.5, 2], [0, 1]])`, stable.
    Sigma1,
    /// `(I, [[0.5, 0], [-2, 1]])`, stable.
    Sigma2,
    /// Midpoint of `sigma1` and `sigma2`: eigenvalues `0.75 +- 0.968i`.
    SigmaMid,
}

impl Fixture {
    pub const NAMES: [&'static str; 7] = [
        "ex1",
        "ex1_index2",
        "ex1_unstable",
        "ex1_singular_limit",
        "sigma1",
        "sigma2",
        "sigma_mid",
    ];

    pub fn pair(&self) -> MatrixPair {
        let ex1_e = || DMatrix::from_row_slice(3, 3, &[1., 0., 0., 0., 0., 0., 0., 0., 0.]);
        let ex1_a = || DMatrix::from_row_slice(3, 3, &[0.5, 0., 2., 0., 1., 0., 0., 0., 1.]);
        let std2 = |a: [f64; 4]| DMatrix::from_row_slice(2, 2, &a);
        let (e, a) = match *self {
            Fixture::Ex1 => (ex1_e(), ex1_a()),
            Fixture::Ex1Index2(eps2) => {
                let mut e = ex1_e();
                e[(1, 2)] = eps2;
                (e, ex1_a())
            }
            Fixture::Ex1Unstable(eps1) => {
                let mut e = ex1_e();
                e[(1, 1)] = eps1;
                (e, ex1_a())
            }
            Fixture::Ex1SingularLimit(delta) => {
                let mut a = ex1_a();
                a[(2, 2)] -= delta;
                (ex1_e(), a)
            }
            Fixture::Sigma1 => (DMatrix::identity(2, 2), std2([0.5, 2., 0., 1.])),
            Fixture::Sigma2 => (DMatrix::identity(2, 2), std2([0.5, 0., -2., 1.])),
            Fixture::SigmaMid => (DMatrix::identity(2, 2), std2([0.5, 1., -1., 1.])),
        };
        MatrixPair::new(e, a).expect("fixtures are square and finite")
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fixture::Ex1 => write!(f, "ex1"),
            Fixture::Ex1Index2(v) => write!(f, "ex1_index2:{v}"),
            Fixture::Ex1Unstable(v) => write!(f, "ex1_unstable:{v}"),
            Fixture::Ex1SingularLimit(v) => write!(f, "ex1_singular_limit:{v}"),
            Fixture::Sigma1 => write!(f, "sigma1"),
            Fixture::Sigma2 => write!(f, "sigma2"),
            Fixture::SigmaMid => write!(f, "sigma_mid"),
        }
    }
}

/// Parses `name` or `name:value`, e.g. `ex1_index2:0.1`. Parametrized
/// fixtures default to `eps2 = 0.1`, `eps1 = 0.5`, `delta = 1`.
impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInstance(format!("bad fixture parameter `{p}`")))?;
                if !v.is_finite() {
                    return Err(Error::InvalidInstance(format!(
                        "bad fixture parameter `{p}`"
                    )));
                }
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        let no_param = |f: Fixture| match param {
            None => Ok(f),
            Some(_) => Err(Error::InvalidInstance(format!(
                "fixture `{name}` takes no parameter"
            ))),
        };
        match name {
            "ex1" => no_param(Fixture::Ex1),
            "ex1_index2" => Ok(Fixture::Ex1Index2(param.unwrap_or(0.1))),
            "ex1_unstable" => Ok(Fixture::Ex1Unstable(param.unwrap_or(0.5))),
            "ex1_singular_limit" => Ok(Fixture::Ex1SingularLimit(param.unwrap_or(1.0))),
            "sigma1" => no_param(Fixture::Sigma1),
            "sigma2" => no_param(Fixture::Sigma2),
            "sigma_mid" => no_param(Fixture::SigmaMid),
            _ => Err(Error::UnknownFixture(name.to_string())),
        }
    }
}

/// Looks a fixture up by name (see [`Fixture::from_str`]).
pub fn fixture(name: &str) -> Result<MatrixPair> {
    Ok(name.parse::<Fixture>()?.pair())
}

/// A fully specified test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum InstanceSpec {
    /// `(I_n, grcar(n, k))`.
    Grcar {
        n: usize,
        k: usize,
    },
    /// `(I_n, alpha e e^T)`.
    ScaledOnes {
        n: usize,
        alpha: f64,
    },
    /// `(rank_deficient_identity(n, p), grcar(n, k))`.
    RankdefIdentity {
        n: usize,
        p: usize,
        k: usize,
    },
    Fixture {
        fixture: Fixture,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<MatrixPair> {
        match self {
            InstanceSpec::Grcar { n, k } => MatrixPair::standard(grcar(*n, *k)?),
            InstanceSpec::ScaledOnes { n, alpha } => scaled_ones(*n, *alpha),
            InstanceSpec::RankdefIdentity { n, p, k } => {
                MatrixPair::new(rank_deficient_identity(*n, *p)?, grcar(*n, *k)?)
            }
            InstanceSpec::Fixture { fixture } => Ok(fixture.pair()),
        }
    }
}

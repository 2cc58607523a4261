#![allow(dead_code)]

use dstab::{DMatrix, Matrix, ParamState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1)`.
pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix shifted towards the identity so it is safely invertible.
pub fn invertible(rng: &mut impl Rng, n: usize) -> Matrix {
    uniform(rng, n, n) + DMatrix::identity(n, n) * (n as f64).sqrt() * 1.5
}

pub fn orthogonal(rng: &mut impl Rng, n: usize) -> Matrix {
    let qr = uniform(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_fn(n, n, |i, j| {
        if i == j && r[(i, i)] < 0.0 {
            -1.0
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    q * signs
}

/// Symmetric with eigenvalues uniform in `[0, 1]`.
pub fn psd_contraction(rng: &mut impl Rng, n: usize) -> Matrix {
    let q = orthogonal(rng, n);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            rng.random_range(0.0..=1.0)
        } else {
            0.0
        }
    });
    let b = &q * d * q.transpose();
    (&b + b.transpose()) * 0.5
}

pub fn feasible_state(rng: &mut impl Rng, n: usize, r: usize) -> ParamState {
    let w = invertible(rng, n);
    let t = invertible(rng, n);
    let u = orthogonal(rng, r);
    let b = psd_contraction(rng, r);
    ParamState::new(w, t, u, b).unwrap()
}

pub fn max_abs_diff(x: &Matrix, y: &Matrix) -> f64 {
    (x - y).amax()
}

/// `sum_ij m_ij^2`, written out as a loop.
pub fn frob_sq_loop(m: &Matrix) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s
}

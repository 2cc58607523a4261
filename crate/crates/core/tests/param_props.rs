mod common;

use dstab::gallery::grcar;
use dstab::numerics::{numerical_rank, polar_orthogonal_factor, project_psd_contraction};
use dstab::param::{assemble, initialize, objective, reduced_data};
use dstab::pencil::analyze_admissibility;
use dstab::{DMatrix, Matrix, MatrixPair, ParamState, Tolerances};

fn block_diag(top: &Matrix, n: usize, bottom: f64) -> Matrix {
    let r = top.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i < r && j < r {
            top[(i, j)]
        } else if i == j {
            bottom
        } else {
            0.0
        }
    })
}

#[test]
fn split_objective_matches_direct_evaluation() {
    let mut rng = common::rng(7);
    for trial in 0..100 {
        let n = 1 + trial % 8;
        let r = 1 + (trial / 8) % n;
        let state = common::feasible_state(&mut rng, n, r);
        let target = MatrixPair::new(
            common::uniform(&mut rng, n, n),
            common::uniform(&mut rng, n, n) * 3.0,
        )
        .unwrap();
        let direct = objective(&state, &target).unwrap();

        // Independent assembly from the block formulas.
        let e_hat = &state.w * block_diag(&DMatrix::identity(r, r), n, 0.0) * &state.t;
        let a_hat = &state.w * block_diag(&(&state.u * &state.b), n, 1.0) * &state.t;
        let brute = common::frob_sq_loop(&(target.e() - &e_hat))
            + common::frob_sq_loop(&(target.a() - &a_hat));
        assert!(
            (direct - brute).abs() <= 1e-10 * (1.0 + brute),
            "trial {trial}"
        );

        let red = reduced_data(&state, &target).unwrap();
        let split = common::frob_sq_loop(&(target.e() - &e_hat))
            + common::frob_sq_loop(&(&red.r - &red.p * (&state.u * &state.b) * &red.q));
        assert!(
            (direct - split).abs() <= 1e-10 * (1.0 + direct),
            "trial {trial}"
        );
    }
}

#[test]
fn objective_invariant_under_factor_scaling() {
    let mut rng = common::rng(8);
    for _ in 0..20 {
        let n = 5;
        let state = common::feasible_state(&mut rng, n, 3);
        let target = MatrixPair::new(
            common::uniform(&mut rng, n, n),
            common::uniform(&mut rng, n, n),
        )
        .unwrap();
        let scaled = ParamState::new(
            &state.w * 2.0,
            &state.t * 0.5,
            state.u.clone(),
            state.b.clone(),
        )
        .unwrap();
        let (f0, f1) = (
            objective(&state, &target).unwrap(),
            objective(&scaled, &target).unwrap(),
        );
        assert!((f0 - f1).abs() <= 1e-12 * (1.0 + f0));
    }
}

#[test]
fn grcar_initial_objective_is_leading_block_residual() {
    let a = grcar(10, 3).unwrap();
    let target = MatrixPair::standard(a.clone()).unwrap();
    for r in [3, 7, 10] {
        let state = initialize(&target, r).unwrap();
        let a11 = a.view((0, 0), (r, r)).into_owned();
        let want = {
            let ub = &state.u * &state.b;
            let mut s = 0.0;
            for i in 0..r {
                for j in 0..r {
                    s += (a11[(i, j)] - ub[(i, j)]).powi(2);
                }
            }
            // Outside the leading block, the identity factors reproduce A
            // everywhere except where A differs from diag(0, I).
            for i in 0..10 {
                for j in 0..10 {
                    if i < r && j < r {
                        continue;
                    }
                    let ident = if i == j && i >= r { 1.0 } else { 0.0 };
                    s += (a[(i, j)] - ident).powi(2);
                }
            }
            // E term: diag(0, I_{n-r}) remains.
            s + (10 - r) as f64
        };
        let got = objective(&state, &target).unwrap();
        assert!((got - want).abs() < 1e-12, "r = {r}: {got} vs {want}");
        if r == 10 {
            let ub = &state.u * &state.b;
            assert!((got - common::frob_sq_loop(&(&a11 - ub))).abs() < 1e-12);
        }
    }
}

#[test]
fn initialization_is_optimal_for_the_leading_block() {
    // Scalar case: A11 = -3 gives U = -1 and B clipped to 1; grid-check.
    let target = MatrixPair::standard(DMatrix::from_row_slice(2, 2, &[-3., 0., 0., 1.])).unwrap();
    let s = initialize(&target, 1).unwrap();
    assert_eq!((s.u[(0, 0)], s.b[(0, 0)]), (-1.0, 1.0));
    let best = [-1.0f64, 1.0]
        .iter()
        .flat_map(|u| (0..=1000).map(move |k| (-3.0 - u * k as f64 / 1000.0).powi(2)))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best, 4.0);

    let mut rng = common::rng(5);
    let q = common::orthogonal(&mut rng, 4);
    let mut a = common::uniform(&mut rng, 6, 6);
    a.view_mut((0, 0), (4, 4)).copy_from(&q);
    let s = initialize(&MatrixPair::standard(a).unwrap(), 4).unwrap();
    assert!(common::max_abs_diff(&s.u, &q) < 1e-10);
    assert!(common::max_abs_diff(&s.b, &DMatrix::identity(4, 4)) < 1e-10);

    let a11 = common::uniform(&mut rng, 3, 3) * 2.0;
    let s = initialize(&MatrixPair::standard(a11.clone()).unwrap(), 3).unwrap();
    let u = polar_orthogonal_factor(&a11).unwrap();
    let b = project_psd_contraction(&(u.transpose() * &a11)).unwrap();
    assert!(common::max_abs_diff(&s.u, &u) < 1e-14 && common::max_abs_diff(&s.b, &b) < 1e-14);
}

#[test]
fn ex1_has_an_exact_parametrization() {
    let target = dstab::gallery::fixture("ex1").unwrap();
    let w = DMatrix::from_row_slice(3, 3, &[1., 0., 2., 0., 1., 0., 0., 0., 1.]);
    let state = ParamState::new(
        w,
        DMatrix::identity(3, 3),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 0.5),
    )
    .unwrap();
    assert_eq!(objective(&state, &target).unwrap(), 0.0);
    assert_eq!(assemble(&state).unwrap(), target);
}

#[test]
fn assembled_rank_matches_target_rank() {
    let tol = Tolerances::default();
    let mut rng = common::rng(12);
    for n in 1..9 {
        for r in 1..=n {
            let state = common::feasible_state(&mut rng, n, r);
            let pair = assemble(&state).unwrap();
            assert_eq!(numerical_rank(pair.e(), &tol).unwrap(), r);
            assert!(state.invariant_warnings(&tol).is_empty());
            assert!(analyze_admissibility(&pair, &tol).admissible);
        }
    }
}

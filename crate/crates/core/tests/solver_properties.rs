use eit_core::solver::{
    objective, solve_box_ls, solve_box_ls_traced, solve_spectral, spectral_objective, unvectorize,
    vectorize, ReconstructionProblem, SolverOptions,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn psd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let g = DMatrix::from_vec(n, n, v);
        &g * g.transpose()
    })
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

fn problem(n: usize, p: usize) -> impl Strategy<Value = ReconstructionProblem> {
    (
        prop::collection::vec(psd(n), p),
        symmetric(n),
        prop::collection::vec(0.0..2.0f64, p),
    )
        .prop_map(|(s, v, upper)| ReconstructionProblem::new(s, v, upper).unwrap())
}

fn any_problem() -> impl Strategy<Value = ReconstructionProblem> {
    (2usize..6, 1usize..6).prop_flat_map(|(n, p)| problem(n, p))
}

fn tight() -> SolverOptions {
    SolverOptions {
        tol: 1e-10,
        ..SolverOptions::default()
    }
}

/// Coordinate grid search on the quadratic form of the design matrix.
fn grid_minimum(problem: &ReconstructionProblem, step: f64) -> (Vec<f64>, f64) {
    let (a_mat, b) = vectorize(problem);
    let g = a_mat.transpose() * &a_mat;
    let c = a_mat.transpose() * &b;
    let bb = b.norm_squared();
    let steps: Vec<usize> = problem
        .upper
        .iter()
        .map(|u| (u / step).floor() as usize)
        .collect();
    let mut best = (vec![0.0; 3], f64::INFINITY);
    for i in 0..=steps[0] {
        let x = i as f64 * step;
        for j in 0..=steps[1] {
            let y = j as f64 * step;
            for k in 0..=steps[2] {
                let z = k as f64 * step;
                let a = [x, y, z];
                let mut f = bb;
                for p in 0..3 {
                    f -= 2.0 * c[p] * a[p];
                    for q in 0..3 {
                        f += a[p] * g[(p, q)] * a[q];
                    }
                }
                if f < best.1 {
                    best = (a.to_vec(), f);
                }
            }
        }
    }
    (best.0, best.1.max(0.0).sqrt())
}

proptest! {
    #[test]
    fn vectorization_preserves_residual_norm(pb in any_problem(), seed in prop::collection::vec(0.0..1.0f64, 6)) {
        let a: Vec<f64> = (0..pb.num_pixels()).map(|k| seed[k] * pb.upper[k]).collect();
        let (mat, b) = vectorize(&pb);
        let av = nalgebra::DVector::from_vec(a.clone());
        let lhs = (&mat * av - &b).norm();
        let rhs = objective(&pb, &a);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        let n = pb.v_target.nrows();
        prop_assert_eq!(unvectorize(b.as_slice(), n), pb.v_target.clone());
    }

    #[test]
    fn objective_is_convex(pb in any_problem(), t in 0.0..1.0f64, x in prop::collection::vec(0.0..1.0f64, 6), y in prop::collection::vec(0.0..1.0f64, 6)) {
        let p = pb.num_pixels();
        let (a, b) = (&x[..p], &y[..p]);
        let mid: Vec<f64> = a.iter().zip(b).map(|(u, v)| t * u + (1.0 - t) * v).collect();
        let lhs = objective(&pb, &mid);
        let rhs = t * objective(&pb, a) + (1.0 - t) * objective(&pb, b);
        prop_assert!(lhs <= rhs + 1e-12);
        let ls = spectral_objective(&pb, &mid).unwrap();
        let rs = t * spectral_objective(&pb, a).unwrap() + (1.0 - t) * spectral_objective(&pb, b).unwrap();
        prop_assert!(ls <= rs + 1e-12);
    }

    #[test]
    fn box_solution_is_feasible_and_stationary(pb in any_problem()) {
        let opts = SolverOptions::default();
        let r = solve_box_ls(&pb, &opts).unwrap();
        for (a, u) in r.coefficients.iter().zip(&pb.upper) {
            prop_assert!(*a >= 0.0 && a <= u);
        }
        if r.converged {
            let (_, b) = vectorize(&pb);
            prop_assert!(r.kkt_residual <= 10.0 * opts.tol * (1.0 + b.norm()));
        }
        prop_assert!((objective(&pb, &r.coefficients) - r.objective).abs() <= 1e-12);
    }

    #[test]
    fn objective_trace_never_increases(pb in any_problem()) {
        let (_, trace) = solve_box_ls_traced(&pb, &SolverOptions::default()).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs() + 1e-15);
        }
    }

    #[test]
    fn spectral_solution_is_feasible(pb in any_problem()) {
        let r = solve_spectral(&pb, &SolverOptions { tol: 1e-6, max_iter: 20_000 }).unwrap();
        for (a, u) in r.coefficients.iter().zip(&pb.upper) {
            prop_assert!(*a >= 0.0 && a <= u);
        }
        let zero = vec![0.0; pb.num_pixels()];
        prop_assert!(r.objective <= spectral_objective(&pb, &zero).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn three_pixel_solution_matches_grid_search(
        s in prop::collection::vec(psd(3), 3),
        v in symmetric(3),
        upper in prop::collection::vec(0.05..0.3f64, 3),
    ) {
        let pb = ReconstructionProblem::new(s, v, upper).unwrap();
        let r = solve_box_ls(&pb, &tight()).unwrap();
        let (_, grid_f) = grid_minimum(&pb, 1e-3);
        // The solver is never worse than the grid and at most one grid cell
        // better than it.
        prop_assert!(r.objective <= grid_f + 1e-12);
        let (a_mat, _) = vectorize(&pb);
        let lip = (a_mat.transpose() * &a_mat).norm();
        prop_assert!(grid_f - r.objective <= 2e-3 * lip.sqrt() * 3f64.sqrt() + 1e-9);
    }

    #[test]
    fn two_pixel_spectral_matches_grid_search(
        s in prop::collection::vec(psd(3), 2),
        v in symmetric(3),
        upper in prop::collection::vec(0.1..0.5f64, 2),
    ) {
        let pb = ReconstructionProblem::new(s, v, upper).unwrap();
        let r = solve_spectral(&pb, &SolverOptions { tol: 1e-9, max_iter: 50_000 }).unwrap();
        let step = 1e-2;
        let mut best = f64::INFINITY;
        let (n0, n1) = ((pb.upper[0] / step) as usize, (pb.upper[1] / step) as usize);
        for i in 0..=n0 {
            for j in 0..=n1 {
                let f = spectral_objective(&pb, &[i as f64 * step, j as f64 * step]).unwrap();
                best = best.min(f);
            }
        }
        prop_assert!(r.objective <= best + 2e-2 * best.max(1.0), "{} vs {}", r.objective, best);
    }
}

#[test]
fn grid_search_finds_planted_minimizer() {
    let s: Vec<DMatrix<f64>> = (0..3)
        .map(|k| {
            let mut m = DMatrix::zeros(3, 3);
            m[(k, k)] = 1.0;
            m
        })
        .collect();
    let v = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.25, 0.4]));
    let pb = ReconstructionProblem::new(s, v, vec![0.2, 0.3, 0.3]).unwrap();
    let (a, f) = grid_minimum(&pb, 1e-3);
    assert!((a[0] - 0.1).abs() < 1e-9 && (a[1] - 0.25).abs() < 1e-9 && (a[2] - 0.3).abs() < 1e-9);
    assert!((f - 0.1).abs() < 1e-9);
    let r = solve_box_ls(&pb, &tight()).unwrap();
    for (x, y) in r.coefficients.iter().zip(&a) {
        assert!((x - y).abs() <= 2e-3);
    }
}

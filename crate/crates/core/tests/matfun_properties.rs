use eit_core::matfun::{
    cholesky, matrix_abs, matrix_sqrt, positive_decomposition, spectral_norm, sym_eig,
    sym_eigenvalues, SymmetricMatrix,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0..10.0f64, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

fn sized_symmetric() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..9).prop_flat_map(symmetric)
}

fn pair() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1usize..9).prop_flat_map(|n| (symmetric(n), symmetric(n)))
}

fn sym(m: &DMatrix<f64>) -> SymmetricMatrix {
    SymmetricMatrix::symmetrize(m).unwrap()
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

proptest! {
    #[test]
    fn eigendecomposition_reconstructs(m in sized_symmetric()) {
        let e = sym_eig(&sym(&m)).unwrap();
        let q = &e.vectors;
        let n = m.nrows();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        prop_assert!(rel(&(q * lam * q.transpose()), &m) <= 1e-12);
        prop_assert!((q.transpose() * q - DMatrix::identity(n, n)).norm() <= 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn abs_squared_is_square(m in sized_symmetric()) {
        let a = matrix_abs(&sym(&m)).unwrap().into_matrix();
        prop_assert!(rel(&(&a * &a), &(&m * &m)) <= 1e-10);
        // |M| commutes with M.
        prop_assert!(rel(&(&a * &m), &(&m * &a)) <= 1e-10);
    }

    #[test]
    fn matrix_dominated_by_its_abs(m in sized_symmetric()) {
        let a = matrix_abs(&sym(&m)).unwrap().into_matrix();
        let lmin = *sym_eigenvalues(&sym(&(a - &m))).unwrap().last().unwrap();
        prop_assert!(lmin >= -1e-10 * m.norm().max(1.0));
    }

    #[test]
    fn positive_decomposition_identities(m in sized_symmetric()) {
        let s = sym(&m);
        let (p, q) = positive_decomposition(&s).unwrap();
        let (p, q) = (p.into_matrix(), q.into_matrix());
        let a = matrix_abs(&s).unwrap().into_matrix();
        let scale = m.norm().max(1.0);
        prop_assert!((&p - &q - &m).norm() <= 1e-10 * scale);
        prop_assert!((&p + &q - &a).norm() <= 1e-10 * scale);
        prop_assert!((&p * &q).norm() <= 1e-10 * scale * scale);
        for part in [&p, &q] {
            let lmin = *sym_eigenvalues(&sym(part)).unwrap().last().unwrap();
            prop_assert!(lmin >= -1e-10 * scale);
        }
    }

    #[test]
    fn abs_is_continuous((a, b) in pair()) {
        let abs_diff = matrix_abs(&sym(&a)).unwrap().into_matrix()
            - matrix_abs(&sym(&b)).unwrap().into_matrix();
        let lhs = spectral_norm(&sym(&abs_diff)).unwrap().powi(2);
        let rhs = (spectral_norm(&sym(&a)).unwrap() + spectral_norm(&sym(&b)).unwrap())
            * spectral_norm(&sym(&(&a - &b))).unwrap();
        prop_assert!(lhs <= rhs + 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn weyl_shift((a, g) in pair(), h in 0.01..5.0f64) {
        let n = a.nrows();
        let s = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
        let smin = *sym_eigenvalues(&sym(&s)).unwrap().last().unwrap();
        let before = sym_eigenvalues(&sym(&a)).unwrap();
        let after = sym_eigenvalues(&sym(&(&a + &s * h))).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!(*y >= x + h * smin - 1e-10 * (a.norm() + h * s.norm()).max(1.0));
        }
    }

    #[test]
    fn sqrt_of_psd_squares_back(g in sized_symmetric()) {
        let m = &g * &g;
        let u = matrix_sqrt(&sym(&m)).unwrap().into_matrix();
        prop_assert!(rel(&(&u * &u), &m) <= 1e-10);
        let lmin = *sym_eigenvalues(&sym(&u)).unwrap().last().unwrap();
        prop_assert!(lmin >= -1e-10 * u.norm().max(1.0));
    }

    #[test]
    fn cholesky_factor_reproduces(g in sized_symmetric()) {
        let n = g.nrows();
        let m = &g * &g + DMatrix::identity(n, n);
        let l = cholesky(&sym(&m)).unwrap();
        prop_assert!(rel(&(&l * l.transpose()), &m) <= 1e-12);
        for i in 0..n {
            prop_assert!(l[(i, i)] > 0.0);
            for j in i + 1..n {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn psd_abs_is_identity_map(g in sized_symmetric()) {
        let m = &g * &g;
        let a = matrix_abs(&sym(&m)).unwrap().into_matrix();
        prop_assert!(rel(&a, &m) <= 1e-10);
    }
}

#[test]
fn hand_checked_examples() {
    let d = SymmetricMatrix::from_diagonal(&[2.0, -3.0]);
    assert_eq!(
        matrix_abs(&d).unwrap().into_matrix(),
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]))
    );
    let (p, q) = positive_decomposition(&d).unwrap();
    assert_eq!(p.into_matrix()[(1, 1)], 0.0);
    assert_eq!(q.into_matrix()[(1, 1)], 3.0);
    let m = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0])).unwrap();
    let l = cholesky(&m).unwrap();
    assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
    let s = matrix_sqrt(&SymmetricMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
    assert!(
        (s.into_matrix() - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])).norm() < 1e-15
    );
}

#[test]
fn non_pd_pivot_is_named() {
    let m = SymmetricMatrix::from_diagonal(&[1.0, 2.0, -1.0]);
    match cholesky(&m) {
        Err(eit_core::Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 2),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matrix_sqrt(&SymmetricMatrix::from_diagonal(&[1.0, -0.5])).is_err());
}

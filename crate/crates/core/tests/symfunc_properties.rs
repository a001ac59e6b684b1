use gcma::symfunc::{
    cone_margin, density_ratio, elementary_symmetric, elementary_symmetric_reduced, evaluate_f,
    generalized_eigenvalues, linearization_coeffs, CoefficientSet, HermitianMatrix,
};
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn complex_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
}

/// `A A^H + shift I` from raw entries.
fn positive(n: usize, raw: &[(f64, f64)], shift: f64) -> HermitianMatrix {
    let a: Vec<C64> = raw.iter().map(|&(r, i)| C64::new(r, i)).collect();
    let mut e = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = if i == j { C64::new(shift, 0.0) } else { C64::new(0.0, 0.0) };
            for k in 0..n {
                s += a[i * n + k] * a[j * n + k].conj();
            }
            e[i * n + j] = s;
        }
    }
    HermitianMatrix::new(n, e).unwrap()
}

fn to_dmatrix(m: &HermitianMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j))
}

fn esf_subsets(vals: &[f64], k: usize) -> f64 {
    let n = vals.len();
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| vals[i]).product::<f64>())
        .sum()
}

fn coefficient_set() -> impl Strategy<Value = CoefficientSet> {
    (2usize..=4)
        .prop_flat_map(|n| prop::collection::vec(0.0..2.0f64, n))
        .prop_filter("positive sum", |c| c.iter().sum::<f64>() > 0.1)
        .prop_map(|c| CoefficientSet::new(c).unwrap())
}

fn coeffs_and_pair() -> impl Strategy<Value = (CoefficientSet, HermitianMatrix, HermitianMatrix)> {
    coefficient_set().prop_flat_map(|c| {
        let n = c.n();
        (Just(c), complex_entries(n), complex_entries(n))
            .prop_map(move |(c, a, b)| (c, positive(n, &a, 0.3), positive(n, &b, 0.5)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigen_data_matches_dense_oracle((_, x, g) in coeffs_and_pair()) {
        let n = x.dim();
        let eig = generalized_eigenvalues(&x, &g).unwrap();
        // oracle: L^{-1} X L^{-H} with g = L L^H
        let l = Cholesky::new(to_dmatrix(&g)).unwrap().l();
        let linv = l.clone().try_inverse().unwrap();
        let reduced = &linv * to_dmatrix(&x) * linv.adjoint();
        let mut oracle: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in eig.lambda.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10 * oracle[0]);
        }
        let p = DMatrix::from_fn(n, n, |i, k| eig.basis[i * n + k]);
        let gram = p.adjoint() * to_dmatrix(&g) * &p;
        let diag = p.adjoint() * to_dmatrix(&x) * &p;
        for i in 0..n {
            for k in 0..n {
                let want = if i == k { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, k)] - C64::new(want, 0.0)).norm() < 1e-10);
                let want = if i == k { eig.lambda[i] } else { 0.0 };
                prop_assert!((diag[(i, k)] - C64::new(want, 0.0)).norm() < 1e-10 * oracle[0].max(1.0));
            }
        }
        for w in eig.lambda.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn reduced_decomposition_matches_subsets(lambda in prop::collection::vec(-2.0..3.0f64, 1..=6)) {
        let n = lambda.len();
        for alpha in 0..=n {
            let s = elementary_symmetric(&lambda, alpha).unwrap();
            let oracle = esf_subsets(&lambda, alpha);
            prop_assert!((s - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
            if alpha == 0 || alpha == n {
                continue;
            }
            for i in 0..n {
                let a = elementary_symmetric_reduced(&lambda, alpha, i).unwrap();
                let b = elementary_symmetric_reduced(&lambda, alpha - 1, i).unwrap();
                prop_assert!((s - (a + lambda[i] * b)).abs() <= 1e-12 * s.abs().max(1.0));
            }
        }
    }

    #[test]
    fn linearization_matches_finite_differences((c, x, g) in coeffs_and_pair()) {
        let n = x.dim();
        let f = linearization_coeffs(&x, &g, &c).unwrap();
        let h = 1e-5;
        let eval = |e: &[C64], s: f64| {
            let entries: Vec<C64> = x.entries().iter().zip(e).map(|(a, d)| a + d * s).collect();
            evaluate_f(&HermitianMatrix::new(n, entries).unwrap(), &g, &c).unwrap()
        };
        for i in 0..n {
            for j in i..n {
                // real symmetric and imaginary antisymmetric perturbations
                for imaginary in [false, true] {
                    if i == j && imaginary {
                        continue;
                    }
                    let mut e = vec![C64::new(0.0, 0.0); n * n];
                    if i == j {
                        e[i * n + i] = C64::new(1.0, 0.0);
                    } else if imaginary {
                        e[i * n + j] = C64::new(0.0, 1.0);
                        e[j * n + i] = C64::new(0.0, -1.0);
                    } else {
                        e[i * n + j] = C64::new(1.0, 0.0);
                        e[j * n + i] = C64::new(1.0, 0.0);
                    }
                    let fd = (eval(&e, h) - eval(&e, -h)) / (2.0 * h);
                    let exact: f64 = (0..n * n).map(|k| (f.entries()[k] * e[k]).re).sum();
                    prop_assert!((fd - exact).abs() < 1e-6, "{i}{j} {imaginary}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn linearization_is_positive_definite((c, x, g) in coeffs_and_pair()) {
        let f = linearization_coeffs(&x, &g, &c).unwrap();
        let eig = SymmetricEigen::new(to_dmatrix(&f));
        prop_assert!(eig.eigenvalues.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn f_times_density_is_minus_one((c, x, g) in coeffs_and_pair()) {
        let f = evaluate_f(&x, &g, &c).unwrap();
        let d = density_ratio(&x, &g, &c).unwrap();
        prop_assert!(f < 0.0);
        prop_assert!((f * d + 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_invariance((c, x, g) in coeffs_and_pair(), raw in complex_entries(4)) {
        let n = x.dim();
        let u: Vec<C64> = (0..n * n)
            .map(|k| {
                let (r, i) = raw[k % raw.len()];
                let diag = if k / n == k % n { 2.0 } else { 0.0 };
                C64::new(r + diag, i)
            })
            .collect();
        let a = evaluate_f(&x, &g, &c).unwrap();
        let b = evaluate_f(&x.congruence(&u).unwrap(), &g.congruence(&u).unwrap(), &c).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn donaldson_homogeneity((_, x, g) in coeffs_and_pair(), t in 0.1..10.0f64) {
        let c = CoefficientSet::donaldson(x.dim()).unwrap();
        let a = evaluate_f(&x.scale(t), &g, &c).unwrap();
        let b = evaluate_f(&x, &g, &c).unwrap() / t;
        prop_assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}

/// Diagonal `(k, k)` forms as polynomials in commuting nilpotent generators:
/// index = bitmask of the `dz^j ^ dzbar^j` factors present.
fn wedge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i & j == 0 {
                out[i | j] += x * y;
            }
        }
    }
    out
}

fn power(form: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; form.len()];
    out[0] = 1.0;
    for _ in 0..k {
        out = wedge(&out, form);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cone_margin_sign_matches_wedge_inequality(
        lambda in prop::collection::vec(0.2..3.0f64, 3),
        c in prop::collection::vec(0.0..2.0f64, 3),
        psi in 0.1..5.0f64,
    ) {
        prop_assume!(c.iter().sum::<f64>() > 0.1);
        let n = 3;
        let coeffs = CoefficientSet::new(c.clone()).unwrap();
        let margin = cone_margin(&HermitianMatrix::diagonal(&lambda), &HermitianMatrix::identity(n), psi, &coeffs).unwrap();
        prop_assume!(margin.abs() > 1e-9);

        let mut chi = vec![0.0; 1 << n];
        let mut omega = vec![0.0; 1 << n];
        for j in 0..n {
            chi[1 << j] = lambda[j];
            omega[1 << j] = 1.0;
        }
        let lhs = power(&chi, n - 1);
        let mut rhs = vec![0.0; 1 << n];
        for a in 1..n {
            let term = wedge(&power(&chi, n - a - 1), &power(&omega, a));
            for (r, t) in rhs.iter_mut().zip(term) {
                *r += psi * c[a - 1] * (n - a) as f64 * t;
            }
        }
        let holds = (0..n).all(|k| {
            let mono = ((1 << n) - 1) ^ (1 << k);
            n as f64 * lhs[mono] > rhs[mono]
        });
        prop_assert_eq!(holds, margin > 0.0);
    }
}

#[test]
fn non_admissible_matrix_is_rejected() {
    let x = HermitianMatrix::diagonal(&[1.0, -0.5]);
    let g = HermitianMatrix::identity(2);
    let c = CoefficientSet::donaldson(2).unwrap();
    assert!(matches!(evaluate_f(&x, &g, &c), Err(gcma::Error::NotAdmissible { .. })));
    assert!(linearization_coeffs(&x, &g, &c).is_err());
    assert!(density_ratio(&x, &g, &c).is_err());
}

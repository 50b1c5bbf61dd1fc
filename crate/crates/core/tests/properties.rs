use proptest::prelude::*;
use seminmf::bench::gen_semi_nonneg;
use seminmf::dense::{random_gaussian, random_uniform, truncated_svd, DenseMatrix};
use seminmf::factor::{exact_semi_nmf_same_rank, lift_rank_plus_one, semi_rank, sign_flip};
use seminmf::halfspace::{halfspace_feasible, verify_witness, DEFAULT_ZERO_TOL};
use seminmf::RngSeed;

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..9, 1usize..9, any::<u64>())
}

fn low_rank(m: usize, n: usize, k: usize, seed: u64) -> DenseMatrix {
    let s = RngSeed(seed);
    random_gaussian(m, k, s.derive(1)).matmul(&random_gaussian(k, n, s.derive(2))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_is_exact_and_nonnegative((m, n, seed) in dims(), k in 1usize..6) {
        let a = random_gaussian(m, k, RngSeed(seed));
        let b = random_gaussian(k, n, RngSeed(seed).derive(9));
        let f = lift_rank_plus_one(&a, &b).unwrap();
        let ab = a.matmul(&b).unwrap();
        prop_assert!(f.v.min_entry() >= 0.0);
        prop_assert_eq!(f.rank(), k + 1);
        prop_assert!(f.frob_error <= 1e-10 * ab.frobenius_norm());
    }

    #[test]
    fn semi_rank_is_rank_or_one_more((m, n, seed) in dims(), k in 1usize..5) {
        let mat = low_rank(m, n, k, seed);
        let rep = semi_rank(&mat).unwrap();
        prop_assert_eq!(rep.rank, k.min(m).min(n));
        prop_assert!(rep.semi_rank == rep.rank || rep.semi_rank == rep.rank + 1);
        prop_assert_eq!(rep.semi_rank == rep.rank, rep.certificate.feasible);
        prop_assert_eq!(rep.factorization.rank(), rep.semi_rank);
        prop_assert!(rep.factorization.v.min_entry() >= 0.0);
        prop_assert!(rep.factorization.frob_error <= 1e-8 * mat.frobenius_norm());
    }

    #[test]
    fn verdict_matches_test_on_the_matrix_itself((m, n, seed) in dims(), k in 1usize..5) {
        let mat = low_rank(m, n, k, seed);
        let rep = semi_rank(&mat).unwrap();
        let direct = halfspace_feasible(&mat, DEFAULT_ZERO_TOL).unwrap();
        prop_assert_eq!(rep.certificate.feasible, direct.feasible);
    }

    #[test]
    fn nonnegative_matrices_keep_their_rank((m, n, seed) in dims(), k in 1usize..5) {
        let s = RngSeed(seed);
        let mat = random_uniform(m, k, s).matmul(&random_uniform(k, n, s.derive(1))).unwrap();
        let rep = semi_rank(&mat).unwrap();
        prop_assert_eq!(rep.semi_rank, rep.rank);
    }

    #[test]
    fn full_column_rank_gives_n(seed in any::<u64>(), n in 1usize..6, extra in 0usize..4) {
        let mat = random_gaussian(n + extra, n, RngSeed(seed));
        let rep = semi_rank(&mat).unwrap();
        prop_assert_eq!((rep.rank, rep.semi_rank), (n, n));
    }

    #[test]
    fn halfspace_verdict_ignores_scaling_and_zero_columns((m, n, seed) in dims()) {
        let mat = random_gaussian(m, n, RngSeed(seed));
        let base = halfspace_feasible(&mat, DEFAULT_ZERO_TOL).unwrap();
        let scales = random_uniform(1, n, RngSeed(seed).derive(3));
        let mut data = Vec::new();
        for j in 0..n {
            let s = 1e-3 + 1e3 * scales.get(0, j);
            data.extend(mat.column(j).iter().map(|x| x * s));
        }
        data.extend(std::iter::repeat_n(0.0, 2 * m));
        let scaled = DenseMatrix::from_column_major(m, n + 2, data).unwrap();
        let other = halfspace_feasible(&scaled, DEFAULT_ZERO_TOL).unwrap();
        prop_assert_eq!(base.feasible, other.feasible);
        if let Some(z) = &other.z {
            prop_assert!(verify_witness(&scaled, z, DEFAULT_ZERO_TOL, 1e-9));
        }
    }

    #[test]
    fn sherman_morrison_denominator_stays_positive(seed in any::<u64>(), k in 1usize..5, extra in 0usize..6) {
        let (m, n) = (k + extra, k + 2 * extra + 1);
        let mat = gen_semi_nonneg(m, n, k, RngSeed(seed)).unwrap();
        let svd = truncated_svd(&mat, k).unwrap();
        let (a, b, _) = sign_flip(&svd.scaled_left(), &svd.right).unwrap();
        let cert = halfspace_feasible(&b, DEFAULT_ZERO_TOL).unwrap();
        prop_assert!(cert.feasible);
        let y = cert.z.unwrap();
        let x: Vec<f64> = (0..n).map(|j| b.column(j).iter().zip(&y).map(|(p, q)| p * q).sum()).collect();
        // Rows paired with a negative y_i enter with both signs flipped.
        let sign = |i: usize| if y[i] < 0.0 { -1.0 } else { 1.0 };
        let alpha: Vec<f64> = (0..k)
            .map(|i| (0..n).fold(0.0_f64, |acc, j| acc.max(-sign(i) * b.get(i, j) / x[j])))
            .collect();
        let y_alpha: f64 = (0..k).map(|i| y[i].abs() * alpha[i]).sum();
        prop_assert!(y_alpha > -1.0 + 1e-9, "yᵀα = {}", y_alpha);
        let f = exact_semi_nmf_same_rank(&a, &b, &y).unwrap();
        prop_assert!(f.frob_error <= 1e-8 * mat.frobenius_norm());
    }

    #[test]
    fn small_perturbations_stay_semi_nonnegative(seed in any::<u64>(), k in 1usize..4, slack in 0.05f64..0.95) {
        let (m, n) = (6, 10);
        let mat = gen_semi_nonneg(m, n, k, RngSeed(seed)).unwrap();
        let cert = halfspace_feasible(&mat, DEFAULT_ZERO_TOL).unwrap();
        prop_assert!(cert.feasible);
        let z = cert.z.unwrap();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let z: Vec<f64> = z.iter().map(|v| v / norm).collect();
        let dirs = random_gaussian(m, n, RngSeed(seed).derive(5));
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            let col = mat.column(j);
            let budget: f64 = col.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>() * slack;
            let d = dirs.column(j);
            let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            data.extend(col.iter().zip(d).map(|(c, e)| c + budget * e / dn));
        }
        let x = DenseMatrix::from_column_major(m, n, data).unwrap();
        prop_assert!(halfspace_feasible(&x, DEFAULT_ZERO_TOL).unwrap().feasible);
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slender::sparse::{factor_spd, CsrMatrix, LinearMap, TripletBuilder};
use slender::{Scalar, SparseMatrix, SparseMatrixF32};

/// 1D Dirichlet Laplacian `tridiag(-1, 2, -1)`.
fn laplace_1d<T: Scalar>(n: usize) -> CsrMatrix<T> {
    let mut t = TripletBuilder::new(n, n);
    for i in 0..n {
        t.push(i, i, T::lit(2.0));
        if i + 1 < n {
            t.push(i, i + 1, T::lit(-1.0));
            t.push(i + 1, i, T::lit(-1.0));
        }
    }
    t.build()
}

#[test]
fn duplicates_are_summed() {
    let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
    assert_eq!(m.get(0, 0), 3.0);
    assert_eq!(m.get(1, 0), -1.0);
    assert_eq!(m.get(0, 1), 0.0);
    assert_eq!(m.transpose().get(0, 1), -1.0);
}

#[test]
fn factor_solves_in_both_precisions() {
    let n = 50;
    let b64: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let f64_factor = factor_spd(&laplace_1d::<f64>(n), None).unwrap();
    let x = f64_factor.solve(&b64);
    let r: f64 = laplace_1d::<f64>(n).spmv(&x).unwrap().iter().zip(&b64).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(r < 1e-12);

    let a32: SparseMatrixF32 = laplace_1d(n);
    let b32: Vec<f32> = b64.iter().map(|&v| v as f32).collect();
    let x32 = factor_spd(&a32, None).unwrap().solve(&b32);
    let err = x.iter().zip(&x32).map(|(a, b)| (a - *b as f64).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2 * x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
}

#[test]
fn singular_factor_respects_the_kernel() {
    // pure Neumann chain: kernel = constants
    let n = 20;
    let mut t = TripletBuilder::new(n, n);
    for i in 0..n - 1 {
        t.push(i, i, 1.0);
        t.push(i + 1, i + 1, 1.0);
        t.push(i, i + 1, -1.0);
        t.push(i + 1, i, -1.0);
    }
    let a: SparseMatrix = t.build();
    let basis = vec![vec![1.0 / (n as f64).sqrt(); n]];
    assert!(factor_spd(&a, None).is_err());
    let f = factor_spd(&a, Some(&basis)).unwrap();
    let mut b: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    b.iter_mut().for_each(|v| *v -= mean);
    let x = f.solve(&b);
    assert!(x.iter().sum::<f64>().abs() < 1e-10);
    let ax = a.spmv(&x).unwrap();
    assert!(ax.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-10));
}

#[test]
fn rejects_unsymmetric_input() {
    let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]);
    assert!(factor_spd(&m, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transpose_product_identity(seed in 0u64..10_000, n in 2usize..12, m in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<(usize, usize, f64)> = (0..2 * n)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..m), rng.gen::<f64>() - 0.5))
            .collect();
        let a = SparseMatrix::from_triplets(n, m, entries);
        let x: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let ax = a.spmv(&x).unwrap();
        let aty = a.mul_transpose_vec(&y);
        let lhs: f64 = ax.iter().zip(&y).map(|(p, q)| p * q).sum();
        let rhs: f64 = x.iter().zip(&aty).map(|(p, q)| p * q).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert_eq!(a.transpose().transpose(), a.clone());
        let ata = a.transpose().matmul(&a).unwrap();
        prop_assert!(ata.check_symmetric(1e-12).is_ok());
        prop_assert_eq!(LinearMap::<f64>::nrows(&a), n);
    }
}

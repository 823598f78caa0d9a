mod common;

use common::*;
use lcm_core::kernel_ops::{dense_kernel, kernel_matvec, kernel_quadform, kernel_quadform_grad_a};
use lcm_core::oracle::dense_matvec;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

const DIMS: [usize; 6] = [1, 2, 3, 8, 64, 512];

#[test]
fn matvec_and_quadform_match_dense_kernel() {
    let mut r = rng(11);
    for trial in 0..200 {
        let c = DIMS[trial % DIMS.len()];
        let a = coords(&mut r, c);
        let x = normals(&mut r, c);
        let k = dense_kernel(&a).unwrap();
        let dense = dense_matvec(&k, &x).unwrap();
        let fast = kernel_matvec(&a, &x).unwrap();
        assert!(max_rel_err(&fast, &dense) < 1e-9, "matvec C={c}");
        let q_dense: f64 = x.iter().zip(&dense).map(|(a, b)| a * b).sum();
        let q_fast = kernel_quadform(&a, &x).unwrap();
        let scale = x.iter().map(|v| v * v).sum::<f64>().max(q_dense.abs());
        assert!((q_fast - q_dense).abs() / scale < 1e-9, "quadform C={c}");
    }
}

#[test]
fn dense_kernel_is_psd() {
    let mut r = rng(12);
    for c in [1, 2, 5, 16, 64, 256] {
        for _ in 0..4 {
            let a = coords(&mut r, c);
            let eig = SymmetricEigen::new(dense_kernel(&a).unwrap());
            assert!(eig.eigenvalues.min() >= -1e-10);
        }
    }
    // Tied coordinates make K singular but still PSD.
    let eig = SymmetricEigen::new(dense_kernel(&[0.5, 0.5, 0.5, 2.0]).unwrap());
    assert!(eig.eigenvalues.min() >= -1e-10);
}

#[test]
fn all_coordinates_equal_gives_squared_sum() {
    let mut r = rng(13);
    for c in [1, 7, 100] {
        let x = normals(&mut r, c);
        let a = vec![0.0; c];
        let s: f64 = x.iter().sum();
        assert!((kernel_quadform(&a, &x).unwrap() - s * s).abs() <= 1e-12 * (1.0 + s * s));
    }
}

#[test]
fn quadform_gradient_matches_finite_differences() {
    let mut r = rng(14);
    for trial in 0..100 {
        let c = [2, 3, 5, 8, 16][trial % 5];
        let a = separated_coords(&mut r, c, 1e-4);
        let x = normals(&mut r, c);
        let h = (min_gap(&a) / 4.0).min(1e-4);
        let grad = kernel_quadform_grad_a(&a, &x).unwrap();
        let f = |a: &[f64]| kernel_quadform(a, &x).unwrap();
        for i in 0..c {
            let fd = central_diff(&f, &a, i, h);
            if grad[i].abs() > 1e-8 {
                let err = (grad[i] - fd).abs() / grad[i].abs();
                assert!(err < 1e-5, "trial {trial} coord {i}: {} vs {fd}", grad[i]);
            }
        }
    }
}

proptest! {
    #[test]
    fn quadform_invariant_under_joint_permutation(
        pairs in prop::collection::vec((-20.0f64..20.0, -5.0f64..5.0), 1..40),
        seed in any::<u64>(),
    ) {
        let (a, x): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut idx: Vec<usize> = (0..a.len()).collect();
        let mut r = rng(seed);
        for i in (1..idx.len()).rev() {
            let j = rand::Rng::random_range(&mut r, 0..=i);
            idx.swap(i, j);
        }
        let pa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
        let px: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let q = kernel_quadform(&a, &x).unwrap();
        let pq = kernel_quadform(&pa, &px).unwrap();
        let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
        prop_assert!((q - pq).abs() <= 1e-12 * scale);
    }

    #[test]
    fn matvec_matches_dense_for_arbitrary_inputs(
        pairs in prop::collection::vec((-50.0f64..50.0, -10.0f64..10.0), 1..60),
    ) {
        let (a, x): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let dense = dense_matvec(&dense_kernel(&a).unwrap(), &x).unwrap();
        let fast = kernel_matvec(&a, &x).unwrap();
        let scale = 1.0 + x.iter().map(|v| v.abs()).sum::<f64>();
        for (f, d) in fast.iter().zip(&dense) {
            prop_assert!((f - d).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn quadform_is_nonnegative(
        pairs in prop::collection::vec((-3.0f64..3.0, -10.0f64..10.0), 1..60),
    ) {
        let (a, x): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let scale = x.iter().map(|v| v * v).sum::<f64>();
        prop_assert!(kernel_quadform(&a, &x).unwrap() >= -1e-12 * scale);
    }
}

//! Property tests for the numerical invariants that should hold on any
//! well-formed input, not just the fixtures.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use wfda::autoweight::l0_project;
use wfda::dataset::{split, LabeledDataset, SplitSpec};
use wfda::linalg::{erf, generalized_eig};
use wfda::weighting::{apac_weights, pow_weights, ClassDistances, WeightMatrix};

fn spd_pair(d: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let raw_a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let raw_b = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let a = &raw_a * raw_a.transpose();
    let b = &raw_b * raw_b.transpose() + DMatrix::identity(d, d) * 0.5;
    (a, b)
}

fn separated_dataset(c: usize, per_class: usize, seed: u64) -> LabeledDataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for class in 0..c {
        for _ in 0..per_class {
            cols.push(DVector::from_vec(vec![
                class as f64 * 10.0 + rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]));
            labels.push(class + 1);
        }
    }
    LabeledDataset::new(DMatrix::from_columns(&cols), labels).unwrap()
}

proptest! {
    #[test]
    fn generalized_eig_is_b_orthonormal_and_sorted(d in 2usize..8, seed in 0u64..500) {
        let (a, b) = spd_pair(d, seed);
        let r = generalized_eig(&a, &b, 0.0).unwrap();
        let gram = r.eigenvectors.transpose() * &b * &r.eigenvectors;
        prop_assert!((gram - DMatrix::identity(d, d)).amax() < 1e-7);
        for k in 1..d {
            prop_assert!(r.eigenvalues[k] <= r.eigenvalues[k - 1] + 1e-12);
        }
        // A·v = λ·B·v for every pair.
        for k in 0..d {
            let v = r.eigenvectors.column(k);
            let resid = (&a * v - &b * v * r.eigenvalues[k]).amax();
            prop_assert!(resid < 1e-6 * (1.0 + r.eigenvalues[k].abs()));
        }
    }

    #[test]
    fn erf_is_odd_bounded_and_monotone(x in -5.0f64..5.0, y in -5.0f64..5.0) {
        prop_assert!(erf(x).abs() <= 1.0);
        prop_assert_eq!(erf(-x), -erf(x));
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(erf(lo) <= erf(hi) + 1e-12);
    }

    #[test]
    fn l0_projection_is_a_sparse_idempotent_subset(
        entries in proptest::collection::vec(0.0f64..10.0, 1..8),
        k_raw in 1usize..8,
    ) {
        let a = DVector::from_vec(entries);
        let k = k_raw.min(a.len());
        let p = l0_project(&a, k);
        prop_assert!(p.iter().filter(|&&v| v != 0.0).count() <= k);
        for i in 0..a.len() {
            prop_assert!(p[i] == 0.0 || p[i] == a[i]);
        }
        prop_assert_eq!(l0_project(&p, k), p.clone());
        // No dropped entry exceeds a kept one.
        let kept_min = (0..a.len())
            .filter(|&i| p[i] != 0.0)
            .map(|i| a[i])
            .fold(f64::INFINITY, f64::min);
        for i in 0..a.len() {
            if p[i] == 0.0 {
                prop_assert!(a[i] <= kept_min + 1e-15);
            }
        }
    }

    #[test]
    fn distance_weights_are_valid_matrices(c in 2usize..6, seed in 0u64..200, m in 3u32..6) {
        let data = separated_dataset(c, 3, seed);
        let stats = wfda::dataset::class_statistics(&data).unwrap();
        let dist = ClassDistances::from_stats(&stats);
        for w in [apac_weights(&dist).unwrap(), pow_weights(&dist, m).unwrap()] {
            prop_assert_eq!(w.num_classes(), c);
            for r in 0..c {
                prop_assert_eq!(w.alpha()[(r, r)], 0.0);
                for l in 0..c {
                    let v = w.alpha()[(r, l)];
                    prop_assert!(v.is_finite() && v >= 0.0);
                }
            }
            // Distance-based weights are symmetric.
            prop_assert!((w.alpha() - w.alpha().transpose()).amax() < 1e-15);
        }
    }

    #[test]
    fn uniform_weight_matrix_invariants(c in 2usize..8) {
        let w = WeightMatrix::uniform(c);
        for r in 0..c {
            for l in 0..c {
                let want = if r == l { 0.0 } else { 1.0 };
                prop_assert_eq!(w.alpha()[(r, l)], want);
            }
        }
    }

    #[test]
    fn split_is_a_stratified_partition(
        per_class in 3usize..9,
        seed in 0u64..300,
        fraction in 0.3f64..0.9,
    ) {
        let data = separated_dataset(3, per_class, seed);
        let spec = SplitSpec { train_fraction: fraction, seed, stratified: true };
        let (train, test) = split(&data, &spec).unwrap();
        prop_assert_eq!(train.len() + test.len(), data.len());
        // Every class appears on both sides.
        for class in 1..=3usize {
            prop_assert!(train.labels().iter().any(|&l| l == class));
            prop_assert!(test.labels().iter().any(|&l| l == class));
        }
        // Same seed, same split.
        let (train2, _) = split(&data, &spec).unwrap();
        prop_assert_eq!(train.samples(), train2.samples());
    }
}

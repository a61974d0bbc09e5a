mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use whitney::{
    build_secants, canonical_sign, distortion, max_distortion, Frame, PointCloud, SecantSet,
};

use common::{gaussian, random_orthonormal, rng, sorted_columns, unit};

/// Every normalized pairwise difference, sign-fixed by its first entry above
/// 1e-12 and deduplicated by an O(n²) scan.
fn naive_secants(points: &DMatrix<f64>) -> DMatrix<f64> {
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for i in 0..points.ncols() {
        for j in 0..points.ncols() {
            if i == j {
                continue;
            }
            let d = points.column(i) - points.column(j);
            let len = d.norm();
            if len <= 1e-12 {
                continue;
            }
            let mut s = d / len;
            let lead = s.iter().copied().find(|x| x.abs() > 1e-12).unwrap();
            if lead < 0.0 {
                s = -s;
            }
            if !kept.iter().any(|k| (k - &s).amax() <= 1e-12) {
                kept.push(s);
            }
        }
    }
    DMatrix::from_columns(&kept)
}

fn random_cloud(seed: u64, m: usize, n: usize) -> PointCloud {
    let mut r = rng(seed);
    PointCloud::from_columns(gaussian(&mut r, m, n)).unwrap()
}

fn assert_same_set(a: &DMatrix<f64>, b: &DMatrix<f64>) {
    assert_eq!(a.ncols(), b.ncols());
    for (x, y) in sorted_columns(a).iter().zip(sorted_columns(b).iter()) {
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() <= 1e-14);
        }
    }
}

#[test]
fn matches_naive_construction() {
    for seed in 0..5 {
        let cloud = random_cloud(seed, 4, 12);
        let built = build_secants(&cloud, None).unwrap();
        assert_eq!(built.len(), 12 * 11 / 2);
        assert_same_set(built.matrix(), &naive_secants(cloud.matrix()));
    }
}

#[test]
fn naive_agrees_on_collinear_and_repeated_points() {
    let pts = DMatrix::from_column_slice(
        2,
        6,
        &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 0.0, 3.0, 5.0, 5.0],
    );
    let cloud = PointCloud::from_columns(pts.clone()).unwrap();
    let built = build_secants(&cloud, None).unwrap();
    assert_same_set(built.matrix(), &naive_secants(&pts));
    assert_eq!(built.duplicate_points(), 1);
}

#[test]
fn pruned_size_is_bounded() {
    for (seed, s) in [(1, 1), (2, 3), (3, 5), (4, 20)] {
        let cloud = random_cloud(seed, 6, 40);
        let set = build_secants(&cloud, Some(s)).unwrap();
        assert!(set.len() <= s * cloud.len(), "{} > {}", set.len(), s * cloud.len());
    }
}

#[test]
fn pruning_keeps_the_shortest_partners() {
    // Points on a line at 0, 1, 3, 7: with one partner each the admitted
    // pairs are (0,1), (1,0), (2,1), (3,2), all collinear.
    let pts = DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 3.0, 7.0, 0.0, 0.0, 0.0, 0.0]);
    let set = build_secants(&PointCloud::from_columns(pts).unwrap(), Some(1)).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.sources(), &[(0, 1)]);

    let pts = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 5.0]);
    let set = build_secants(&PointCloud::from_columns(pts).unwrap(), Some(1)).unwrap();
    // Point 2's nearest partner is point 0 (distance 5 < √26).
    assert_eq!(set.sources(), &[(0, 1), (2, 0)]);
}

#[test]
fn full_pruning_equals_no_pruning() {
    for seed in 10..14 {
        let cloud = random_cloud(seed, 5, 15);
        let all = build_secants(&cloud, None).unwrap();
        let pruned = build_secants(&cloud, Some(cloud.len() - 1)).unwrap();
        assert_same_set(all.matrix(), pruned.matrix());
    }
}

#[test]
fn distortion_stays_in_unit_interval() {
    let mut r = rng(42);
    for trial in 0..2_000 {
        let m = 2 + trial % 9;
        let k = 1 + trial % (m - 1);
        let p = Frame::new(random_orthonormal(&mut r, m, k), 1e-12).unwrap();
        let d = distortion(&p, &unit(&mut r, m)).unwrap();
        assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn max_distortion_matches_loop() {
    let mut r = rng(8);
    let p = Frame::new(random_orthonormal(&mut r, 9, 3), 1e-12).unwrap();
    let set = SecantSet::from_vectors(&gaussian(&mut r, 9, 50)).unwrap();
    assert_eq!(set.len(), 50);
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for i in 0..set.len() {
        let d = distortion(&p, set.secant(i)).unwrap();
        if d > best.0 {
            best = (d, i);
        }
    }
    let (value, arg) = max_distortion(&p, &set).unwrap();
    assert!((value - best.0).abs() <= 1e-15);
    assert_eq!(arg, best.1);
}

#[test]
fn rejects_mismatched_dimensions() {
    let p = Frame::coordinate(4, 2).unwrap();
    let set = SecantSet::from_vectors(&DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
    assert!(max_distortion(&p, &set).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stored_secants_are_unit_canonical_and_distinct(seed in any::<u64>(), n in 2usize..25, prune in proptest::option::of(1usize..6)) {
        let cloud = random_cloud(seed, 4, n);
        let set = build_secants(&cloud, prune).unwrap();
        for i in 0..set.len() {
            let s = DVector::from_column_slice(set.secant(i));
            prop_assert!((s.norm() - 1.0).abs() <= 1e-12);
            prop_assert_eq!(canonical_sign(&s).unwrap(), s.clone());
            for j in 0..i {
                let t = DVector::from_column_slice(set.secant(j));
                prop_assert!((&s - &t).amax() > 1e-12);
                prop_assert!((&s + &t).amax() > 1e-12);
            }
        }
    }

    #[test]
    fn canonical_sign_is_idempotent(seed in any::<u64>(), m in 1usize..8) {
        let v = DVector::from_vec(unit(&mut rng(seed), m));
        let once = canonical_sign(&v).unwrap();
        prop_assert_eq!(canonical_sign(&once).unwrap(), once.clone());
        prop_assert!(once == v || once == -v);
    }

    #[test]
    fn objective_ignores_frame_rotation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = Frame::new(random_orthonormal(&mut r, 8, 3), 1e-12).unwrap();
        let q = random_orthonormal(&mut r, 3, 3);
        let set = SecantSet::from_vectors(&gaussian(&mut r, 8, 30)).unwrap();
        let a = max_distortion(&p, &set).unwrap().0;
        let b = max_distortion(&p.rotated(&q).unwrap(), &set).unwrap().0;
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

mod common;

use cloudmorph::{
    calibrate_weights, chamfer, combined_loss, emd_exact, sinkhorn_divergence, EmdNorm, EmdTerm, LossWeights, Point3,
    PointCloud, RngSeed, SinkhornParams,
};
use common::{chamfer_brute, emd_brute, random_cloud};

#[test]
fn emd_two_point_example() {
    let x = PointCloud::from_coords(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
    let y = PointCloud::from_coords(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
    let (cost, bij) = emd_exact(&x, &y).unwrap();
    assert_eq!(cost, 1.0);
    assert_eq!(bij.mapping(), &[0, 1]);
}

#[test]
fn emd_matches_permutation_search() {
    for trial in 0..40u64 {
        let x = random_cloud(6, 2 * trial);
        let y = random_cloud(6, 2 * trial + 1);
        let (cost, bij) = emd_exact(&x, &y).unwrap();
        let (best, _) = emd_brute(&x, &y);
        assert!((cost - best).abs() <= 1e-9, "trial {trial}: {cost} vs {best}");
        assert!((bij.cost(&x, &y) - cost).abs() <= 1e-12);
    }
}

#[test]
fn emd_metric_axioms() {
    for trial in 0..30u64 {
        let x = random_cloud(6, 3 * trial + 1000);
        let y = random_cloud(6, 3 * trial + 1001);
        let z = random_cloud(6, 3 * trial + 1002);
        let d = |a: &PointCloud, b: &PointCloud| emd_exact(a, b).unwrap().0;
        assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-12);
        assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        assert_eq!(d(&x, &x), 0.0);
    }
}

#[test]
fn emd_of_translation_is_shift_times_count() {
    let x = random_cloud(200, 4);
    let y = PointCloud::new(x.iter().map(|p| Point3::new(p.x + 0.1, p.y, p.z)).collect()).unwrap();
    let (cost, _) = emd_exact(&x, &y).unwrap();
    assert!((cost / 200.0 - 0.1).abs() < 1e-9, "{cost}");
}

#[test]
fn chamfer_matches_double_loop() {
    for (trial, n) in [1usize, 2, 7, 64, 100, 333, 512].into_iter().enumerate() {
        let x = random_cloud(n, 50 + trial as u64);
        let y = random_cloud(n.div_ceil(2), 60 + trial as u64);
        assert_eq!(chamfer(&x, &y), chamfer_brute(&x, &y), "n = {n}");
        assert_eq!(chamfer(&x, &y), chamfer(&y, &x));
        assert_eq!(chamfer(&x, &x), 0.0);
    }
}

#[test]
fn sinkhorn_tracks_exact_emd() {
    let params = SinkhornParams::default();
    for trial in 0..4u64 {
        let x = random_cloud(64, 500 + trial);
        let y = random_cloud(64, 600 + trial);
        let exact = emd_exact(&x, &y).unwrap().0 / 64.0;
        let s = sinkhorn_divergence(&x, &y, &params).unwrap();
        assert!(((s.value - exact) / exact).abs() < 0.05, "{} vs {exact}", s.value);
        assert!(sinkhorn_divergence(&x, &x, &params).unwrap().value.abs() <= 1e-7);
    }
}

#[test]
fn sinkhorn_converges_given_enough_iterations() {
    let x = random_cloud(64, 503);
    let y = random_cloud(64, 603);
    let params = SinkhornParams {
        max_iters: 50_000,
        ..SinkhornParams::default()
    };
    let s = sinkhorn_divergence(&x, &y, &params).unwrap();
    assert!(s.converged && s.iterations < 50_000);
}

#[test]
fn sinkhorn_translation() {
    let x = random_cloud(64, 8);
    let y = PointCloud::new(x.iter().map(|p| Point3::new(p.x + 0.1, p.y, p.z)).collect()).unwrap();
    let s = sinkhorn_divergence(&x, &y, &SinkhornParams::default()).unwrap();
    assert!((s.value - 0.1).abs() < 0.005, "{}", s.value);
}

#[test]
fn combined_loss_is_weighted_sum() {
    let x = random_cloud(6, 70);
    let y = random_cloud(6, 71);
    let w = LossWeights::new(2.0, 3.0).unwrap();
    let got = combined_loss(&x, &y, &w, &EmdTerm::exact(EmdNorm::Sum)).unwrap();
    let expected = 2.0 * emd_brute(&x, &y).0 + 3.0 * chamfer_brute(&x, &y);
    assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
    let mean = combined_loss(&x, &y, &w, &EmdTerm::exact(EmdNorm::Mean)).unwrap();
    assert!((mean - (2.0 * emd_brute(&x, &y).0 / 6.0 + 3.0 * chamfer_brute(&x, &y))).abs() <= 1e-9);
}

#[test]
fn calibration_uses_all_pair_maxima() {
    let clouds: Vec<PointCloud> = (0..5).map(|i| random_cloud(6, 80 + i)).collect();
    let term = EmdTerm::exact(EmdNorm::Mean);
    let w = calibrate_weights(&clouds, 10, RngSeed(1), &term).unwrap();
    let (mut max_emd, mut max_ch) = (0.0f64, 0.0f64);
    for i in 0..5 {
        for j in i + 1..5 {
            max_emd = max_emd.max(emd_brute(&clouds[i], &clouds[j]).0 / 6.0);
            max_ch = max_ch.max(chamfer_brute(&clouds[i], &clouds[j]));
        }
    }
    assert!((w.alpha_emd - 1.0 / max_emd).abs() <= 1e-9 * w.alpha_emd);
    assert!((w.alpha_chamfer - 1.0 / max_ch).abs() <= 1e-12 * w.alpha_chamfer);
}

#[test]
fn mismatched_sizes_are_errors() {
    let x = random_cloud(6, 1);
    let y = random_cloud(5, 2);
    assert!(emd_exact(&x, &y).is_err());
    assert!(combined_loss(
        &x,
        &y,
        &LossWeights::new(1.0, 1.0).unwrap(),
        &EmdTerm::exact(EmdNorm::Sum)
    )
    .is_err());
}

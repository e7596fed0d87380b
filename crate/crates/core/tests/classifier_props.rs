use fermat_core::classifiers::{softmin_weights, stratified_folds};
use fermat_core::*;
use proptest::prelude::*;

fn dists_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (2usize..30).prop_flat_map(|m| {
        (
            prop::collection::vec(0.01f64..10.0, m),
            prop::collection::vec(0usize..3, m),
        )
    })
}

#[test]
fn default_k_examples() {
    assert_eq!(default_k(50, 2).unwrap(), 17);
    assert_eq!(default_k(1, 2).unwrap(), 1);
    assert_eq!(default_k(600, 2).unwrap(), 200);
    assert_eq!(theoretical_k(100), 21);
    assert!(default_k(0, 2).is_err());
}

#[test]
fn zero_distance_returns_that_label() {
    let cfg = WknnConfig { k: 3, sigma: 1.0 };
    assert_eq!(
        weighted_knn_predict(&[0.5, 0.0, 0.4], &[0, 1, 0], &cfg).unwrap(),
        1
    );
}

#[test]
fn predict_errors() {
    let cfg = WknnConfig { k: 4, sigma: 1.0 };
    assert!(matches!(
        weighted_knn_predict(&[1.0, 2.0], &[0, 1], &cfg),
        Err(FermatError::InvalidK { .. })
    ));
    assert!(matches!(
        weighted_knn_predict(&[], &[], &WknnConfig { k: 1, sigma: 1.0 }),
        Err(FermatError::EmptyLabeled)
    ));
    assert!(weighted_knn_predict(&[1.0], &[0], &WknnConfig { k: 1, sigma: 0.0 }).is_err());
}

#[test]
fn stratified_folds_balance_classes() {
    let labels: Vec<usize> = (0..50).map(|i| i % 2).collect();
    let folds = stratified_folds(&labels, 5, 9);
    for f in 0..5 {
        for c in 0..2 {
            let count = (0..50).filter(|&i| folds[i] == f && labels[i] == c).count();
            assert_eq!(count, 5);
        }
    }
    assert_eq!(folds, stratified_folds(&labels, 5, 9));
}

#[test]
fn sigma_cv_is_deterministic_and_on_grid() {
    let data = generate_two_moon(&TwoMoonModel {
        variant: TwoMoonVariant::Sphere,
        n0: 40,
        n1: 40,
        seed: 1,
    })
    .unwrap();
    let params = FermatParams::new(4.0, 2, FermatGraph::Complete).unwrap();
    let m = fermat_matrix(data.cloud(), &params).unwrap();
    let labels = data.full_labels().unwrap();
    let idx: Vec<usize> = (0..80).step_by(2).collect();
    let sub = m.matrix().submatrix(&idx);
    let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    let grid = default_sigma_grid(&sub, 5);
    assert_eq!(grid.len(), 8);
    let a = select_sigma_cv(&sub, &y, 5, &grid, 5, 4).unwrap();
    let b = select_sigma_cv(&sub, &y, 5, &grid, 5, 4).unwrap();
    assert_eq!(a, b);
    assert!(grid.contains(&a));
}

#[test]
fn fd_wknn_recovers_well_separated_clusters() {
    let data = generate_vmf_clusters(&VmfClusterModel {
        concentration: 50.0,
        n_per_class: 60,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let truth = data.full_labels().unwrap();
    let idx = sample_labeled_indices(&truth, 5, 3).unwrap();
    let data = data.restrict_labels(&idx).unwrap();
    let params = FermatParams::new(4.0, 2, FermatGraph::KnnMst { k: None }).unwrap();
    let m = fermat_matrix(data.cloud(), &params).unwrap();
    let fit = fd_wknn_predict(m.matrix(), &data, &FdWknnConfig::default()).unwrap();
    assert_eq!(fit.unlabeled_idx.len(), 110);
    let hits = fit
        .unlabeled_idx
        .iter()
        .zip(&fit.predictions)
        .filter(|(&i, &p)| truth[i] == p)
        .count();
    assert!(hits >= 105, "hits {hits}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weights_normalized_and_monotone(d in prop::collection::vec(0.0f64..100.0, 1..20), sigma in 0.01f64..100.0) {
        let w = softmin_weights(&d, sigma);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..d.len() {
            prop_assert!(w[i] >= 0.0);
            for j in 0..d.len() {
                if d[i] < d[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn joint_rescaling_keeps_prediction((d, labels) in dists_and_labels(), k in 1usize..10, sigma in 0.1f64..5.0, c in prop::sample::select(vec![0.125, 0.5, 2.0, 8.0, 1024.0])) {
        let k = k.min(d.len());
        let a = weighted_knn_predict(&d, &labels, &WknnConfig { k, sigma }).unwrap();
        let scaled: Vec<f64> = d.iter().map(|v| v * c).collect();
        let b = weighted_knn_predict(&scaled, &labels, &WknnConfig { k, sigma: sigma * c }).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn order_of_labeled_points_is_irrelevant((d, labels) in dists_and_labels(), k in 1usize..10, sigma in 0.1f64..5.0, rot in 0usize..30) {
        let mut uniq = d.clone();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        prop_assume!(uniq.len() == d.len());
        let k = k.min(d.len());
        let cfg = WknnConfig { k, sigma };
        let a = weighted_knn_predict(&d, &labels, &cfg).unwrap();
        let r = rot % d.len();
        let mut d2 = d.clone();
        let mut l2 = labels.clone();
        d2.rotate_left(r);
        l2.rotate_left(r);
        d2.reverse();
        l2.reverse();
        prop_assert_eq!(a, weighted_knn_predict(&d2, &l2, &cfg).unwrap());
    }

    #[test]
    fn k_one_is_nearest_label((d, labels) in dists_and_labels(), sigma in 0.01f64..10.0) {
        let best = (0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b))).unwrap();
        prop_assert_eq!(weighted_knn_predict(&d, &labels, &WknnConfig { k: 1, sigma }).unwrap(), labels[best]);
    }
}

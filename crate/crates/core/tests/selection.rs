use flowrisk::dataset::FeatureTable;
use flowrisk::fselect::{candidate_pool, lofo_importances, rfe_loop, CvConfig, FeatureSpec, RfeConfig};
use flowrisk::linmod::TrainConfig;
use flowrisk::synth::{generate, PlantedTruth};
use flowrisk_testkit::SplitMix64;

#[test]
fn elimination_keeps_planted_terms() {
    let truth = PlantedTruth::interaction_and_square();
    let data = generate(&truth, 30_000, 4, 5).unwrap();
    let base: Vec<String> = data.table.column_names().to_vec();
    let pool = candidate_pool(&data.table, &base).unwrap();
    assert_eq!(pool.len(), 4 + 8 + 6);
    let (selected, trace) = rfe_loop(&pool, &data.table, &RfeConfig::new(11), &TrainConfig::default()).unwrap();
    for term in &truth.terms {
        assert!(selected.contains(&term.spec), "{} missing from {selected:?}", term.spec);
    }
    assert!(trace.best_pr_auc > 0.9);
    assert_eq!(trace.iterations.len(), pool.len() - 1);
}

#[test]
fn duplicated_column_is_redundant() {
    let n = 20_000;
    let mut rng = SplitMix64::new(3);
    let s: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let t: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let labels: Vec<bool> = (0..n).map(|i| s[i] + 0.5 * t[i] + 0.5 * rng.normal() > 2.0).collect();
    let table = FeatureTable::new(
        vec!["s".into(), "copy".into(), "t".into()],
        vec![s.clone(), s, t],
        Some(labels),
    )
    .unwrap();
    let specs: Vec<FeatureSpec> = ["s", "copy", "t"].into_iter().map(FeatureSpec::base).collect();
    let r = lofo_importances(&specs, &table, &CvConfig::new(1), &TrainConfig::default()).unwrap();
    assert!(
        r.deltas[0].abs() <= 0.005 && r.deltas[1].abs() <= 0.005,
        "{:?}",
        r.deltas
    );
    assert!(r.deltas[2] > 0.005, "{:?}", r.deltas);
}

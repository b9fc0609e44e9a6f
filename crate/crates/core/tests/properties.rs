use proptest::prelude::*;

use gefs::bench::config::{DatasetSpec, ExperimentConfig, Method};
use gefs::bench::metrics::auc_roc;
use gefs::bench::missing::run_on_datasets;
use gefs::circuit::EvalTrace;
use gefs::convert::{rf_to_gef, CombineMode};
use gefs::data::{inject_mcar, PartialInstance};
use gefs::fixtures::{random_binary_dataset, random_binary_forest};
use gefs::inference::{class_log_joint, predict_gef, predict_gefplus};
use gefs::leaves::LeafModel;

fn query_strategy(m: usize) -> impl Strategy<Value = Vec<Option<f64>>> {
    proptest::collection::vec(prop_oneof![Just(None), Just(Some(0.0)), Just(Some(1.0))], m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posteriors_are_distributions(seed in 0u64..500, q in query_strategy(6)) {
        let (d, rf) = random_binary_forest(6, 150, 4, 4, seed);
        let gef = rf_to_gef(&rf, &d, &LeafModel::default(), CombineMode::AverageConditionals).unwrap();
        let q = PartialInstance::new(q);
        for p in [predict_gef(&gef, &q).unwrap(), predict_gefplus(&gef.clone().with_mode(CombineMode::UniformMixture), &q).unwrap()] {
            let s: f64 = p.probs.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(p.probs.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn complete_queries_match_the_forest(seed in 0u64..500, x in proptest::collection::vec(0u8..2, 6)) {
        let (d, rf) = random_binary_forest(6, 150, 4, 4, seed);
        let gef = rf_to_gef(&rf, &d, &LeafModel::default(), CombineMode::AverageConditionals).unwrap();
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let a = predict_gef(&gef, &PartialInstance::complete(&x)).unwrap().probs;
        for (p, q) in a.iter().zip(rf.predict_proba(&x)) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn marginalizing_a_feature_sums_its_values(seed in 0u64..500, q in query_strategy(5), f in 0usize..5) {
        let (d, rf) = random_binary_forest(5, 120, 1, 4, seed);
        let gef = rf_to_gef(&rf, &d, &LeafModel::default(), CombineMode::AverageConditionals).unwrap();
        let g = &gef.gedts()[0];
        let mut q = q;
        q[f] = None;
        let whole = class_log_joint(g, &PartialInstance::new(q.clone()), &mut EvalTrace::default());
        let parts: Vec<Vec<f64>> = [0.0, 1.0]
            .iter()
            .map(|&v| {
                let mut qv = q.clone();
                qv[f] = Some(v);
                class_log_joint(g, &PartialInstance::new(qv), &mut EvalTrace::default())
            })
            .collect();
        for y in 0..2 {
            let summed = parts[0][y].exp() + parts[1][y].exp();
            prop_assert!((whole[y].exp() - summed).abs() <= 1e-12 + 1e-9 * summed);
        }
    }

    #[test]
    fn auc_invariant_under_increasing_maps(
        a in proptest::collection::vec(-5.0f64..5.0, 1..30),
        b in proptest::collection::vec(-5.0f64..5.0, 1..30),
    ) {
        let base = auc_roc(&a, &b).unwrap();
        let f = |v: &f64| (v * 0.7 + 1.0).exp();
        let ta: Vec<f64> = a.iter().map(f).collect();
        let tb: Vec<f64> = b.iter().map(f).collect();
        prop_assert_eq!(base, auc_roc(&ta, &tb).unwrap());
        prop_assert!((auc_roc(&b, &a).unwrap() - (1.0 - base)).abs() < 1e-12);
    }

    #[test]
    fn mcar_masks_about_the_rate(seed in 0u64..1000, rate in 0.05f64..0.9) {
        let d = random_binary_dataset(10, 400, 1);
        let masked = inject_mcar(&d, rate, seed).unwrap();
        let cells = (d.n_rows() * d.n_features()) as f64;
        let missing = (0..d.n_rows())
            .map(|r| (0..d.n_features()).filter(|&f| masked.is_missing(r, f)).count())
            .sum::<usize>() as f64;
        prop_assert!((missing / cells - rate).abs() < 0.05);
        prop_assert_eq!(masked.labels(), d.labels());
    }
}

#[test]
fn benchmark_report_is_reproducible() {
    let d = random_binary_dataset(6, 150, 3);
    let mut cfg = ExperimentConfig::new(vec![DatasetSpec {
        name: Some("toy".into()),
        data: "unused".into(),
        schema: "unused".into(),
    }]);
    cfg.methods = vec![Method::Gef, Method::GefPlus, Method::KnnImpute, Method::Friedman];
    cfg.n_trees = 5;
    cfg.repeats = 2;
    cfg.folds = 3;
    cfg.rates = vec![0.2];
    cfg.seed = 7;
    let named = vec![("toy".to_string(), d)];
    let a = run_on_datasets(&named, &cfg).unwrap();
    let b = run_on_datasets(&named, &cfg).unwrap();
    assert_eq!(a.to_tsv(), b.to_tsv());
    assert_eq!(a.runs_tsv(), b.runs_tsv());
}

use distshap::data::{DataPoint, LabelKind};
use distshap::estimator::WeightSchedule;
use distshap::evalharness::{absolute_percentage_error, spearman};
use distshap::exact::{exact_efficiency_check, ExactConfig};
use distshap::potentials::{AdditivePotential, MeanPotential};
use distshap::{sample_subset, Dataset, Label, Potential, RandomSource, ValueTable};
use proptest::prelude::*;

fn rows(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3..1e3f64, d), n)
}

fn dataset(rows: &[Vec<f64>]) -> Dataset {
    let d = rows[0].len();
    Dataset::from_rows(d, LabelKind::None, rows.iter().map(|r| (r.clone(), None))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_potential_ignores_order(r in rows(1..30, 3), shift in 0usize..30) {
        let db = dataset(&r);
        let u = MeanPotential::from_database(&db, false).unwrap();
        let mut s = db.refs();
        let forward = u.evaluate(&s);
        let k = shift % s.len();
        s.rotate_left(k);
        s.reverse();
        prop_assert_eq!(forward.to_bits(), u.evaluate(&s).to_bits());
    }

    #[test]
    fn dataset_csv_round_trip(r in rows(1..20, 2), labels in prop::collection::vec(0u32..4, 20)) {
        let points = r.iter().zip(&labels).map(|(f, &c)| (f.clone(), Some(Label::Class(c))));
        let n_classes = labels[..r.len()].iter().max().unwrap() + 1;
        let d = Dataset::from_rows(2, LabelKind::Categorical { n_classes }, points).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), Default::default()).unwrap();
        prop_assert_eq!(back.points(), d.points());
    }

    #[test]
    fn value_table_csv_round_trip(vals in prop::collection::vec(-10.0..10.0f64, 1..40)) {
        let mut t = ValueTable::new(0..vals.len() as u64, 5, 3, 0, "uniform");
        for (i, v) in vals.iter().enumerate() {
            t.entries.get_mut(&(i as u64)).unwrap().update(*v);
        }
        let back = ValueTable::read_csv(t.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(back.values(), t.values());
        prop_assert_eq!(back.to_csv_string(), t.to_csv_string());
    }

    #[test]
    fn spearman_is_bounded_symmetric_and_rank_only(
        pairs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 2..40)
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let r = spearman(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        prop_assert!((r - spearman(&b, &a).unwrap()).abs() < 1e-12);
        let squashed: Vec<f64> = a.iter().map(|x| x.atan()).collect();
        prop_assert!((r - spearman(&squashed, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ape_ignores_joint_order(
        pairs in prop::collection::vec((0.01..5.0f64, -5.0..5.0f64), 1..30),
        k in 0usize..30
    ) {
        let (mut val, mut sh): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let before = absolute_percentage_error(&val, &sh).unwrap();
        let k = k % val.len();
        val.rotate_left(k);
        sh.rotate_left(k);
        prop_assert_eq!(before, absolute_percentage_error(&val, &sh).unwrap());
    }

    #[test]
    fn schedule_weights_form_a_distribution(m in 1usize..400, b in 0.5..3.0f64) {
        for s in [WeightSchedule::uniform(m).unwrap(), WeightSchedule::inverse_power(m, b).unwrap()] {
            let w = s.weights();
            prop_assert_eq!(w.len(), m);
            prop_assert!(w.iter().all(|&x| x > 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_draws_are_reproducible(n in 1usize..50, k in 0usize..60, seed in any::<u64>()) {
        let db = dataset(&(0..n).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let src = RandomSource::new(seed);
        let a: Vec<u64> = sample_subset(&db, k, &mut src.stream(1, 0)).unwrap().iter().map(|p| p.id).collect();
        let b: Vec<u64> = sample_subset(&db, k, &mut src.stream(1, 0)).unwrap().iter().map(|p| p.id).collect();
        prop_assert_eq!(a.len(), k);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exact_values_are_efficient(r in rows(1..8, 2)) {
        let b = dataset(&r);
        let cfg = ExactConfig::default();
        let mean = MeanPotential::from_database(&b, false).unwrap();
        let (sum, gain) = exact_efficiency_check(&b, &mean, &cfg).unwrap();
        prop_assert!((sum - gain).abs() <= 1e-9 * gain.abs().max(1.0));
        let add = AdditivePotential::from_first_feature(&b);
        let (sum, gain) = exact_efficiency_check(&b, &add, &cfg).unwrap();
        prop_assert!((sum - gain).abs() <= 1e-9 * gain.abs().max(1.0));
    }
}

#[test]
fn marginal_fast_path_matches_pairwise_evaluation() {
    let db = distshap::synth::standard_normal(300, 3, 2);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let base: Vec<&DataPoint> = db.iter().take(40).collect();
    let points: Vec<&DataPoint> = db.iter().skip(40).take(25).collect();
    let fast = u.marginal_contributions(&base, &points);
    let base_value = u.evaluate(&base);
    for (p, f) in points.iter().zip(&fast) {
        let slow = u.evaluate_with(&base, p) - base_value;
        assert!((slow - f).abs() <= 1e-12, "{slow} vs {f}");
    }
}

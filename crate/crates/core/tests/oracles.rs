//! Estimators checked against independent oracles: closed forms, brute-force
//! Monte Carlo and direct simulation.

use distshap::data::{DataPoint, LabelKind};
use distshap::estimator::{
    d_shapley, fast_d_shapley, prefix_values, stopping_rule, EstimatorConfig, ScheduleKind, WeightSchedule,
};
use distshap::evalharness::{speedup_recovery_experiment, SpeedSetting};
use distshap::exact::{exact_data_shapley_all, exact_efficiency_check, oracle_distributional_value, ExactConfig};
use distshap::interpolate::{InterpolatorConfig, ValueInterpolator, Weighting};
use distshap::potentials::{
    deletion_stability_probe, log_log_slope, AccuracyPotential, ConstantPotential, Learner, MeanPotential, Metric,
};
use distshap::{synth, Dataset, Potential, RandomSource, ValueEstimate, ValueTable};

fn one_d(values: &[f64]) -> Dataset {
    Dataset::from_rows(1, LabelKind::None, values.iter().map(|&v| (vec![v], None))).unwrap()
}

fn within(a: f64, b: f64, se: f64, what: &str) {
    assert!(
        (a - b).abs() <= 3.0 * se + 1e-12,
        "{what}: {a} vs {b}, 3se = {}",
        3.0 * se
    );
}

#[test]
fn closed_form_matches_monte_carlo_at_m5() {
    // μ = 0, R² = 1 exactly
    let u = MeanPotential::new(vec![0.0], 1.0, false);
    let db = synth::standard_normal(20_000, 1, 3);
    let u_db = MeanPotential::new(u.mu().to_vec(), u.r2(), false);
    let z = DataPoint::new(999_999, vec![0.0], None);
    let (mc, se) = oracle_distributional_value(&z, &db, &u_db, 5, 100_000, &RandomSource::new(8)).unwrap();
    within(mc, u.analytic_value(&[0.0], 5), se, "m=5, z=0");
}

#[test]
fn estimate_at_mean_matches_closed_form() {
    let db = synth::standard_normal(2000, 1, 1);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let z = one_d(&[u.mu()[0]]).renumbered(1_000_000);
    let cfg = EstimatorConfig::uniform(50, 60_000, 4).unwrap().with_threshold(1e-4);
    let run = d_shapley(&z, &db, &u, &cfg).unwrap();
    let e = run.table.get(1_000_000).unwrap();
    within(e.mean, u.analytic_value(u.mu(), 50), e.stderr(), "z = μ");
}

#[test]
fn reweighted_estimate_is_unbiased() {
    let db = synth::standard_normal(1000, 1, 2);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let z = one_d(&[0.3, -1.2]).renumbered(1_000_000);
    let cfg = EstimatorConfig::new(20, 20_000, WeightSchedule::inverse_power(20, 1.0).unwrap(), 6).with_threshold(1e-4);
    let run = fast_d_shapley(&z, &db, &u, &cfg, 1.0, None).unwrap();
    for p in z.iter() {
        let e = run.table.get(p.id).unwrap();
        let (mc, se) = oracle_distributional_value(p, &db, &u, 20, 100_000, &RandomSource::new(p.id)).unwrap();
        within(e.mean, mc, (e.stderr().powi(2) + se * se).sqrt(), "inverse power");
    }
}

#[test]
fn uniform_fast_run_equals_plain_run() {
    let db = synth::standard_normal(300, 2, 5);
    let z = synth::standard_normal(15, 2, 6).renumbered(500);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let cfg = EstimatorConfig::uniform(12, 400, 2).unwrap();
    let plain = d_shapley(&z, &db, &u, &cfg).unwrap();
    let fast = fast_d_shapley(&z, &db, &u, &cfg, 1.0, None).unwrap();
    assert_eq!(plain.table, fast.table);
}

#[test]
fn constant_potential_converges_at_window() {
    let db = synth::standard_normal(50, 1, 1);
    let cfg = EstimatorConfig::uniform(5, 10_000, 1).unwrap().with_window(40);
    for kind in [ScheduleKind::Uniform, ScheduleKind::InversePower { b: 1.0 }] {
        let cfg = EstimatorConfig {
            schedule: WeightSchedule::new(5, kind).unwrap(),
            ..cfg.clone()
        };
        let run = fast_d_shapley(&db, &db, &ConstantPotential::new(0.5), &cfg, 1.0, None).unwrap();
        assert!(run.table.values().iter().all(|&v| v == 0.0));
        assert!(run.table.converged);
        assert_eq!(run.table.iterations, 40);
    }
}

#[test]
fn stopping_rule_matches_direct_recurrence() {
    // contributions 2, 0, 2, 0, ...: the running mean after t steps is 2⌈t/2⌉/t
    let (window, threshold) = (25, 2e-3);
    let mean = |t: usize| 2.0 * t.div_ceil(2) as f64 / t as f64;
    let expected = (window..)
        .find(|&t| {
            let avg: f64 = (t - window + 1..=t).map(|s| (mean(s) - mean(s - 1)).abs()).sum::<f64>() / window as f64;
            avg < threshold * mean(t)
        })
        .unwrap();

    let mut table = ValueTable::new([0], window, 1, 0, "uniform");
    let mut fired = None;
    for t in 1..=100_000usize {
        let x = if t % 2 == 1 { 2.0 } else { 0.0 };
        table.entries.get_mut(&0).unwrap().update(x);
        if stopping_rule(&table, window, threshold) {
            fired = Some(t);
            break;
        }
    }
    assert_eq!(fired, Some(expected));
    assert!(!stopping_rule(&table, window, 0.0));
}

#[test]
fn prefix_at_full_horizon_is_identity() {
    let db = synth::standard_normal(200, 1, 3);
    let z = one_d(&[0.1, 1.5, -0.7]).renumbered(1000);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let cfg = EstimatorConfig::uniform(16, 800, 9).unwrap().with_records(true);
    let run = d_shapley(&z, &db, &u, &cfg).unwrap();
    let prefix = prefix_values(run.log.as_ref().unwrap(), 16, &cfg.schedule).unwrap();
    assert_eq!(prefix.values(), run.table.values());
}

#[test]
fn prefix_values_grow_as_horizon_shrinks() {
    let db = synth::standard_normal(2000, 1, 4);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let z = one_d(&[u.mu()[0] + 0.05]).renumbered(1_000_000);
    let cfg = EstimatorConfig::uniform(64, 40_000, 5)
        .unwrap()
        .with_records(true)
        .with_threshold(1e-6);
    let run = d_shapley(&z, &db, &u, &cfg).unwrap();
    let log = run.log.as_ref().unwrap();
    let sweep: Vec<f64> = [64, 32, 16, 8]
        .iter()
        .map(|&mp| prefix_values(log, mp, &cfg.schedule).unwrap().values()[0])
        .collect();
    let analytic: Vec<f64> = [64, 32, 16, 8]
        .iter()
        .map(|&mp| u.analytic_value(&z.points()[0].features, mp))
        .collect();
    assert!(analytic.windows(2).all(|w| w[0] < w[1]));
    assert!(sweep.windows(2).all(|w| w[0] < w[1]), "{sweep:?}");
}

fn mean_probe_slope(seed: u64) -> f64 {
    let db = synth::standard_normal(1000, 2, 1);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let ks = [2, 4, 8, 16, 32, 64, 128];
    let profile = deletion_stability_probe(&u, &db, &ks, 200, &RandomSource::new(seed)).unwrap();
    log_log_slope(&profile).unwrap()
}

// Sampled S keeps ‖μ̂ − μ‖ near 1/√k, so ΔU = −2(μ̂ − μ)·δ − ‖δ‖² with
// ‖δ‖ ∝ 1/k decays like k^{−3/2} to k^{−2}; the 1/k law is the worst case.
#[test]
#[ignore = "sampled probe decays like k^-1.5 to k^-2, not 1/k; see mean_probe_slope_matches_typical_case"]
fn mean_profile_decays_like_inverse_k() {
    let slope = mean_probe_slope(3);
    assert!((-1.4..=-0.6).contains(&slope), "slope {slope}");
}

#[test]
fn mean_probe_slope_matches_typical_case() {
    for seed in [3, 4, 5] {
        let slope = mean_probe_slope(seed);
        assert!((-2.0..=-1.3).contains(&slope), "seed {seed}: slope {slope}");
    }
    let db = synth::standard_normal(100, 2, 1);
    let flat = deletion_stability_probe(
        &ConstantPotential::new(0.2),
        &db,
        &[2, 8, 32],
        20,
        &RandomSource::new(3),
    )
    .unwrap();
    assert!(flat.iter().all(|&(_, b)| b == 0.0));
}

#[test]
fn worst_case_mean_change_is_inverse_k() {
    // S of k − 1 copies of a far point a, z on the other side: ΔU ≈ 2‖a‖·‖z − a‖/k
    let u = MeanPotential::new(vec![0.0], 1.0, false);
    let a = DataPoint::new(0, vec![3.0], None);
    let z = DataPoint::new(1, vec![-3.0], None);
    let profile: Vec<(usize, f64)> = [8, 16, 32, 64, 128, 256]
        .iter()
        .map(|&k| {
            let s: Vec<&DataPoint> = vec![&a; k - 1];
            (k, (u.evaluate_with(&s, &z) - u.evaluate(&s)).abs())
        })
        .collect();
    let slope = log_log_slope(&profile).unwrap();
    assert!((-1.1..=-0.9).contains(&slope), "slope {slope}");
}

#[test]
fn knn_profile_is_bounded_and_decreasing_on_average() {
    let train = synth::two_blobs(400, 2, 2.0, 1.0, 1);
    let test = synth::two_blobs(50, 2, 2.0, 1.0, 2);
    let u = AccuracyPotential::new(Learner::Knn { k_neighbors: 3 }, test, Metric::ClassificationAccuracy).unwrap();
    let ks = [2, 4, 8, 16, 32, 64];
    let profile = deletion_stability_probe(&u, &train, &ks, 100, &RandomSource::new(4)).unwrap();
    assert!(profile.iter().all(|&(_, b)| (0.0..=1.0).contains(&b)));
    let first_half: f64 = profile[..3].iter().map(|p| p.1).sum();
    let second_half: f64 = profile[3..].iter().map(|p| p.1).sum();
    assert!(second_half <= first_half, "{profile:?}");
}

#[test]
fn knn_efficiency_on_three_points() {
    let b = synth::two_blobs(3, 2, 2.0, 1.0, 7);
    let test = synth::two_blobs(5, 2, 2.0, 1.0, 8);
    let u = AccuracyPotential::new(Learner::Knn { k_neighbors: 1 }, test, Metric::ClassificationAccuracy).unwrap();
    let (sum, gain) = exact_efficiency_check(&b, &u, &ExactConfig::default()).unwrap();
    assert!((sum - gain).abs() <= 1e-9);
    let sh = exact_data_shapley_all(&b, &u, &ExactConfig::default()).unwrap();
    assert!((sh.iter().sum::<f64>() - (u.evaluate(&b.refs()) - u.empty_value())).abs() <= 1e-9);
}

#[test]
fn logistic_separates_wide_blobs() {
    let train = synth::two_blobs(200, 2, 6.0, 0.5, 11);
    let test = synth::two_blobs(100, 2, 6.0, 0.5, 12);
    let u = AccuracyPotential::new(Learner::logistic_default(), test, Metric::ClassificationAccuracy).unwrap();
    let acc = u.evaluate(&train.refs());
    assert!(acc >= 0.95, "accuracy {acc}");
}

#[test]
fn interpolation_of_linear_function_within_neighbourhood_spread() {
    let v = |p: &[f64]| 0.7 * p[0] - 0.4 * p[1];
    let grid = |n: usize, seed: u64| -> Vec<DataPoint> {
        let src = RandomSource::new(seed);
        (0..n)
            .map(|i| {
                let mut s = src.stream(9, i as u64);
                DataPoint::new(i as u64, vec![s.uniform_real(), s.uniform_real()], None)
            })
            .collect()
    };
    let fitted = grid(100, 1);
    let pairs: Vec<(&DataPoint, f64)> = fitted.iter().map(|p| (p, v(&p.features))).collect();
    let cfg = InterpolatorConfig::default();
    let interp = ValueInterpolator::fit(&pairs, &cfg, &[]).unwrap();

    let fresh = grid(200, 2);
    let mut err = 0.0;
    let mut spread = 0.0;
    for q in &fresh {
        let truth = v(&q.features);
        err += (interp.predict(q) - truth).abs();
        let mut near: Vec<&DataPoint> = fitted.iter().collect();
        near.sort_by(|a, b| a.distance_sq(q).total_cmp(&b.distance_sq(q)));
        spread += near[..5].iter().map(|p| (v(&p.features) - truth).abs()).sum::<f64>() / 5.0;
    }
    assert!(err <= 2.0 * spread, "mae {} vs spread {}", err / 200.0, spread / 200.0);
}

#[test]
fn interpolated_mean_values_track_closed_form() {
    let db = synth::standard_normal(1000, 2, 1);
    let u = MeanPotential::from_database(&db, false).unwrap();
    let fitted = synth::standard_normal(200, 2, 2);
    let held = synth::standard_normal(50, 2, 3).renumbered(10_000);
    let pairs: Vec<(&DataPoint, f64)> = fitted.iter().map(|p| (p, u.analytic_value(&p.features, 20))).collect();
    let cfg = InterpolatorConfig {
        weighting: Weighting::InverseDistance,
        ..InterpolatorConfig::default()
    };
    let interp = ValueInterpolator::fit(&pairs, &cfg, &[]).unwrap();
    let (lo, hi) = interp.value_range();
    let mae: f64 = held
        .iter()
        .map(|p| (interp.predict(p) - u.analytic_value(&p.features, 20)).abs())
        .sum::<f64>()
        / held.len() as f64;
    assert!(mae < 0.1 * (hi - lo), "mae {mae}, range {}", hi - lo);
}

#[test]
fn inverse_power_saves_cost_on_mean_task() {
    let mut costs = Vec::new();
    let mut r2s = Vec::new();
    for seed in 1..=5 {
        let db = synth::standard_normal(1000, 2, seed);
        let z = synth::standard_normal(100, 2, seed + 100).renumbered(1_000_000);
        let u = MeanPotential::from_database(&db, false).unwrap();
        let cfg = EstimatorConfig::uniform(100, 4000, seed).unwrap().with_threshold(1e-12);
        let pts = speedup_recovery_experiment(
            &z,
            &db,
            &u,
            &cfg,
            &[
                SpeedSetting::new(ScheduleKind::InversePower { b: 1.0 }, 1.0),
                SpeedSetting::new(ScheduleKind::Uniform, 0.1),
            ],
            &InterpolatorConfig::default(),
        )
        .unwrap();
        costs.push(pts[0].relative_cost);
        r2s.push(pts[0].r2);
        // subsampling only shrinks the per-point share of the cost
        assert!(pts[1].relative_cost < 0.2, "{pts:?}");
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&costs) < 0.6, "costs {costs:?}");
    assert!(mean(&r2s) >= 0.8, "r2 {r2s:?}");
}

#[test]
fn running_mean_tracks_updates_exactly() {
    let mut e = ValueEstimate::new(3);
    for x in [1.0, 2.0, 3.0, 4.0] {
        e.update(x);
    }
    assert_eq!(e.mean, 2.5);
    assert_eq!(e.history_tail().len(), 3);
}

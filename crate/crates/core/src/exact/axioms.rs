//! Randomized checks of the Shapley axioms on small instances.

use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, Dataset};
use crate::error::Result;
use crate::exact::{exact_data_shapley_all, permutation_shapley_all, ExactConfig, PERMUTATION_CAP};
use crate::potential::Potential;
use crate::potentials::{
    AccuracyPotential, AdditivePotential, Learner, LinearCombination, MaskedPotential, MeanPotential, Metric,
};
use crate::rng::{purpose, RandomSource};
use crate::synth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub name: String,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Mean,
    Knn,
    Logistic,
    Ridge,
    Additive,
}

const KINDS: [Kind; 5] = [Kind::Mean, Kind::Knn, Kind::Logistic, Kind::Ridge, Kind::Additive];

fn instance_data(kind: Kind, n: usize, seed: u64) -> (Dataset, Option<Dataset>) {
    let (base, test) = match kind {
        Kind::Knn | Kind::Logistic => (
            synth::two_blobs(n - 1, 2, 2.0, 1.0, seed),
            Some(synth::two_blobs(5, 2, 2.0, 1.0, seed ^ 0xA5)),
        ),
        Kind::Ridge => (
            synth::linear_gaussian(n - 1, 2, 0.3, seed),
            Some(synth::linear_gaussian(5, 2, 0.3, seed ^ 0xA5)),
        ),
        Kind::Mean | Kind::Additive => (synth::standard_normal(n - 1, 2, seed), None),
    };
    // the last point duplicates the first under a fresh id
    let mut points = base.points().to_vec();
    let twin = DataPoint::new((n - 1) as u64, points[0].features.clone(), points[0].label);
    points.push(twin);
    (base.with_points(points).expect("unique ids"), test)
}

fn build(kind: Kind, data: &Dataset, test: Option<&Dataset>) -> Box<dyn Potential> {
    match kind {
        Kind::Mean => Box::new(MeanPotential::from_database(data, false).expect("non-empty")),
        Kind::Additive => Box::new(AdditivePotential::from_first_feature(data)),
        Kind::Knn | Kind::Logistic | Kind::Ridge => {
            let (learner, metric) = match kind {
                Kind::Knn => (Learner::Knn { k_neighbors: 3 }, Metric::ClassificationAccuracy),
                Kind::Logistic => (Learner::logistic_default(), Metric::ClassificationAccuracy),
                _ => (Learner::Ridge { lambda: 0.1 }, Metric::R2Clipped),
            };
            Box::new(AccuracyPotential::new(learner, test.expect("test set").clone(), metric).expect("valid potential"))
        }
    }
}

/// Runs symmetry, null-player, efficiency, additivity and permutation-form
/// checks on `instances` random datasets of 3 to 8 points, cycling through the
/// built-in potentials. Every check passes when its largest deviation is
/// within `tolerance`.
pub fn axiom_suite(instances: usize, seed: u64, tolerance: f64) -> Result<AxiomReport> {
    let cfg = ExactConfig::default();
    let src = RandomSource::new(seed);
    let mut symmetry: f64 = 0.0;
    let mut null_player: f64 = 0.0;
    let mut efficiency: f64 = 0.0;
    let mut additivity: f64 = 0.0;
    let mut permutation: f64 = 0.0;
    let mut permutation_count = 0;

    for i in 0..instances {
        let mut stream = src.stream(purpose::EXPERIMENT, i as u64);
        let n = 3 + stream.uniform_index(6);
        let kind = KINDS[i % KINDS.len()];
        let data_seed = stream.uniform_index(u32::MAX as usize) as u64;
        let (data, test) = instance_data(kind, n, data_seed);
        let u = build(kind, &data, test.as_ref());

        let sh = exact_data_shapley_all(&data, &u, &cfg)?;
        symmetry = symmetry.max((sh[0] - sh[n - 1]).abs());

        let gain = u.evaluate(&data.refs()) - u.empty_value();
        efficiency = efficiency.max((sh.iter().sum::<f64>() - gain).abs());

        let masked = MaskedPotential::new(&u, vec![1]);
        let sh_masked = exact_data_shapley_all(&data, &masked, &cfg)?;
        null_player = null_player.max(sh_masked[1].abs());

        let other = if matches!(kind, Kind::Mean) {
            Kind::Additive
        } else {
            Kind::Mean
        };
        let u2 = build(other, &data, None);
        let sh2 = exact_data_shapley_all(&data, &u2, &cfg)?;
        let sum = LinearCombination::new(vec![
            (1.0, build(kind, &data, test.as_ref())),
            (1.0, build(other, &data, None)),
        ]);
        let sh_sum = exact_data_shapley_all(&data, &sum, &cfg)?;
        for j in 0..n {
            additivity = additivity.max((sh_sum[j] - sh[j] - sh2[j]).abs());
        }

        if n <= PERMUTATION_CAP {
            let perm = permutation_shapley_all(&data, &u)?;
            for j in 0..n {
                permutation = permutation.max((perm[j] - sh[j]).abs());
            }
            permutation_count += 1;
        }
    }

    let check = |name: &str, count: usize, err: f64| AxiomCheck {
        name: name.to_string(),
        instances: count,
        max_error: err,
        tolerance,
        passed: err <= tolerance,
    };
    Ok(AxiomReport {
        seed,
        checks: vec![
            check("symmetry", instances, symmetry),
            check("null_player", instances, null_player),
            check("efficiency", instances, efficiency),
            check("additivity", instances, additivity),
            check("permutation_form", permutation_count, permutation),
        ],
    })
}

//! Truncated Monte Carlo permutation sampling of data Shapley values for a
//! fixed dataset.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{stopping_rule, DEFAULT_THRESHOLD};
use crate::potential::Potential;
use crate::rng::{purpose, RandomSource, Stream};
use crate::value::{ValueTable, DEFAULT_WINDOW};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcConfig {
    pub max_permutations: usize,
    /// A permutation stops being scanned once `|U(prefix) − U(B)|` drops
    /// below this.
    pub truncation_tolerance: f64,
    pub window: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl TmcConfig {
    pub fn new(max_permutations: usize, seed: u64) -> Self {
        Self {
            max_permutations,
            truncation_tolerance: 0.01,
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
            seed,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.truncation_tolerance = tolerance;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation_tolerance.is_nan() || self.truncation_tolerance < 0.0 {
            return Err(Error::InvalidConfig("truncation tolerance must be non-negative".into()));
        }
        if self.window == 0 || self.max_permutations < self.window {
            return Err(Error::InvalidConfig(format!(
                "max_permutations ({}) must be at least the window ({})",
                self.max_permutations, self.window
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Marginal contributions of one random permutation, indexed like `points`.
/// `full` is `U(B)`, evaluated once per run by the caller.
pub fn permutation_contributions<U: Potential + ?Sized>(
    points: &[&DataPoint],
    potential: &U,
    full: f64,
    tolerance: f64,
    stream: &mut Stream,
) -> Vec<f64> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = stream.uniform_index(i + 1);
        order.swap(i, j);
    }
    let mut contributions = vec![0.0; n];
    let mut prefix: Vec<&DataPoint> = Vec::with_capacity(n);
    let mut prev = potential.evaluate(&prefix);
    for &i in &order {
        if (prev - full).abs() < tolerance {
            break;
        }
        let next = potential.evaluate_with(&prefix, points[i]);
        contributions[i] = next - prev;
        prefix.push(points[i]);
        prev = next;
    }
    contributions
}

/// Running-mean TMC estimates for every point of `b`, stopping early under
/// the same rule as the distributional estimators.
pub fn tmc_shapley<U: Potential + ?Sized>(b: &Dataset, potential: &U, config: &TmcConfig) -> Result<ValueTable> {
    if b.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    potential.validate(b)?;
    let points = b.refs();
    let ids: Vec<u64> = points.iter().map(|p| p.id).collect();
    let full = potential.evaluate(&points);
    let rng = RandomSource::new(config.seed);
    let mut table = ValueTable::new(ids.iter().copied(), config.window, b.len(), config.seed, "tmc");
    let chunk = (rayon::current_num_threads() * 2).max(1);

    let mut next = 0usize;
    'outer: while next < config.max_permutations {
        let end = (next + chunk).min(config.max_permutations);
        let batch: Vec<Vec<f64>> = (next..end)
            .into_par_iter()
            .map(|t| {
                let mut stream = rng.stream(purpose::PERMUTATION, t as u64);
                permutation_contributions(&points, potential, full, config.truncation_tolerance, &mut stream)
            })
            .collect();
        for contributions in batch {
            for (id, c) in ids.iter().zip(&contributions) {
                table.entries.get_mut(id).expect("id in table").update(*c);
            }
            table.iterations += 1;
            if table.iterations as usize >= config.window && stopping_rule(&table, config.window, config.threshold) {
                table.converged = true;
                break 'outer;
            }
        }
        next = end;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelKind;
    use crate::potentials::{AdditivePotential, MeanPotential};

    fn line(values: &[f64]) -> Dataset {
        Dataset::from_rows(1, LabelKind::None, values.iter().map(|&v| (vec![v], None))).unwrap()
    }

    #[test]
    fn infinite_tolerance_truncates_everything() {
        let b = line(&[0.2, 0.4, 0.9]);
        let u = MeanPotential::new(vec![0.5], 1.0, false);
        let cfg = TmcConfig::new(200, 1).with_tolerance(f64::INFINITY);
        let t = tmc_shapley(&b, &u, &cfg).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_tolerance_telescopes() {
        let b = line(&[0.2, 0.4, 0.9, -1.3, 2.2]);
        let u = MeanPotential::from_database(&b, false).unwrap();
        let full = u.evaluate(&b.refs());
        let rng = RandomSource::new(5);
        for t in 0..50 {
            let c = permutation_contributions(&b.refs(), &u, full, 0.0, &mut rng.stream(purpose::PERMUTATION, t));
            assert!((c.iter().sum::<f64>() - (full - u.empty_value())).abs() < 1e-9);
        }
    }

    #[test]
    fn additive_is_exact_per_permutation() {
        let b = line(&[1.0, 3.0, 4.0]);
        let u = AdditivePotential::from_first_feature(&b);
        let t = tmc_shapley(&b, &u, &TmcConfig::new(100, 2).with_tolerance(0.0).with_window(10)).unwrap();
        for (v, expected) in t.values().iter().zip([0.125, 0.375, 0.5]) {
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let b = line(&[1.0]);
        let u = AdditivePotential::from_first_feature(&b);
        assert!(tmc_shapley(&b, &u, &TmcConfig::new(100, 0).with_tolerance(-1.0)).is_err());
        assert!(tmc_shapley(&b, &u, &TmcConfig::new(10, 0)).is_err());
    }
}

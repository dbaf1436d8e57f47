//! Nearest-neighbour interpolation of values for points that were not
//! estimated directly.
//!
//! Predictions are convex combinations of fitted values, so they always lie
//! within the fitted value range. Distances are Euclidean on features
//! standardized with the fitted points' statistics. For categorical labels,
//! points of different classes are kept apart: either by searching only the
//! query's own class, or by adding a penalty of ten feature-space diameters
//! to every cross-class distance.

use serde::{Deserialize, Serialize};

use crate::data::{squared_distance, DataPoint, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelHandling {
    PerClass,
    DistancePenalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpolatorConfig {
    pub k_neighbors: usize,
    pub weighting: Weighting,
    pub label_handling: LabelHandling,
}

impl Default for InterpolatorConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            weighting: Weighting::InverseDistance,
            label_handling: LabelHandling::PerClass,
        }
    }
}

const PENALTY_DIAMETERS: f64 = 10.0;

struct Fitted {
    features: Vec<f64>,
    class: Option<u32>,
    value: f64,
}

pub struct ValueInterpolator {
    config: InterpolatorConfig,
    transform: Standardizer,
    fitted: Vec<Fitted>,
    per_class: bool,
    penalty: f64,
    warnings: Vec<String>,
}

impl ValueInterpolator {
    /// Fits on `(point, value)` pairs. `classes` lists the classes that
    /// queries may carry; per-class pooling needs each of them in the pairs,
    /// otherwise the interpolator falls back to the distance penalty and
    /// records a warning.
    pub fn fit(pairs: &[(&DataPoint, f64)], config: &InterpolatorConfig, classes: &[u32]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidData("cannot fit an interpolator on zero points".into()));
        }
        if config.k_neighbors == 0 {
            return Err(Error::InvalidConfig("k_neighbors must be at least 1".into()));
        }
        let dim = pairs[0].0.dimension();
        let transform = Standardizer::fit(pairs.iter().map(|(p, _)| p.features.as_slice()), dim)?;
        let fitted: Vec<Fitted> = pairs
            .iter()
            .map(|(p, v)| Fitted {
                features: transform.transform(&p.features),
                class: p.class(),
                value: *v,
            })
            .collect();

        let mut warnings = Vec::new();
        let mut per_class = config.label_handling == LabelHandling::PerClass;
        if per_class {
            let missing: Vec<u32> = {
                let mut m: Vec<u32> = classes
                    .iter()
                    .copied()
                    .filter(|c| !fitted.iter().any(|f| f.class == Some(*c)))
                    .collect();
                m.sort_unstable();
                m.dedup();
                m
            };
            if !missing.is_empty() {
                per_class = false;
                warnings.push(format!(
                    "classes {missing:?} have no fitted values; using cross-class distance penalty"
                ));
            }
        }

        let mut diameter_sq: f64 = 0.0;
        for (i, a) in fitted.iter().enumerate() {
            for b in &fitted[i + 1..] {
                diameter_sq = diameter_sq.max(squared_distance(&a.features, &b.features));
            }
        }
        let diameter = diameter_sq.sqrt();
        let penalty = PENALTY_DIAMETERS * if diameter > 0.0 { diameter } else { 1.0 };

        Ok(Self {
            config: *config,
            transform,
            fitted,
            per_class,
            penalty,
            warnings,
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.fitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitted.is_empty()
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.fitted
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
                (lo.min(f.value), hi.max(f.value))
            })
    }

    /// Distance from `z` to its nearest fitted point, under the same metric
    /// used for prediction.
    pub fn nearest_distance(&self, z: &DataPoint) -> f64 {
        self.neighbours(z).first().map_or(f64::INFINITY, |n| n.0)
    }

    pub fn predict(&self, z: &DataPoint) -> f64 {
        let near = self.neighbours(z);
        let exact: Vec<f64> = near.iter().filter(|(d, _)| *d == 0.0).map(|(_, v)| *v).collect();
        if !exact.is_empty() {
            return exact.iter().sum::<f64>() / exact.len() as f64;
        }
        match self.config.weighting {
            Weighting::Uniform => near.iter().map(|(_, v)| v).sum::<f64>() / near.len() as f64,
            Weighting::InverseDistance => {
                // weights relative to the nearest neighbour, which gets exactly 1
                let nearest = near[0].0;
                let (num, den) = near.iter().fold((0.0, 0.0), |(n, d), (dist, v)| {
                    (n + v * (nearest / dist), d + nearest / dist)
                });
                num / den
            }
        }
    }

    /// The `k` nearest `(distance, value)` pairs, nearest first.
    fn neighbours(&self, z: &DataPoint) -> Vec<(f64, f64)> {
        let x = self.transform.transform(&z.features);
        let class = z.class();
        let pool_has_class = class.is_some_and(|c| self.fitted.iter().any(|f| f.class == Some(c)));
        let restrict = self.per_class && pool_has_class;
        let mut scored: Vec<(f64, usize)> = self
            .fitted
            .iter()
            .enumerate()
            .filter(|(_, f)| !restrict || f.class == class)
            .map(|(i, f)| {
                let mut d = squared_distance(&f.features, &x).sqrt();
                if !restrict && class.is_some() && f.class.is_some() && f.class != class {
                    d += self.penalty;
                }
                (d, i)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(self.config.k_neighbors);
        scored.into_iter().map(|(d, i)| (d, self.fitted[i].value)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use proptest::prelude::*;

    fn pt(id: u64, f: &[f64], class: Option<u32>) -> DataPoint {
        DataPoint::new(id, f.to_vec(), class.map(Label::Class))
    }

    #[test]
    fn single_pair_predicts_everywhere() {
        let a = pt(0, &[1.0, 2.0], None);
        let interp = ValueInterpolator::fit(&[(&a, 0.7)], &InterpolatorConfig::default(), &[]).unwrap();
        assert_eq!(interp.predict(&pt(1, &[-5.0, 3.0], None)), 0.7);
    }

    #[test]
    fn constant_values_stay_constant() {
        let pts: Vec<DataPoint> = (0..10).map(|i| pt(i, &[i as f64, (i * i) as f64], None)).collect();
        let pairs: Vec<(&DataPoint, f64)> = pts.iter().map(|p| (p, 0.3)).collect();
        let interp = ValueInterpolator::fit(&pairs, &InterpolatorConfig::default(), &[]).unwrap();
        for q in [[0.5, 0.1], [20.0, -3.0]] {
            assert!((interp.predict(&pt(99, &q, None)) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_match_and_equidistant() {
        let a = pt(0, &[0.0], None);
        let b = pt(1, &[2.0], None);
        let cfg = InterpolatorConfig {
            k_neighbors: 2,
            weighting: Weighting::Uniform,
            label_handling: LabelHandling::PerClass,
        };
        let interp = ValueInterpolator::fit(&[(&a, 0.0), (&b, 1.0)], &cfg, &[]).unwrap();
        assert_eq!(interp.predict(&pt(5, &[2.0], None)), 1.0);
        assert_eq!(interp.predict(&pt(5, &[1.0], None)), 0.5);
    }

    #[test]
    fn per_class_pools_and_fallback() {
        let a = pt(0, &[0.0], Some(0));
        let b = pt(1, &[0.1], Some(1));
        let c = pt(2, &[5.0], Some(1));
        let pairs = [(&a, 1.0), (&b, -1.0), (&c, -3.0)];
        let cfg = InterpolatorConfig {
            k_neighbors: 1,
            ..Default::default()
        };
        let interp = ValueInterpolator::fit(&pairs, &cfg, &[0, 1]).unwrap();
        assert!(interp.warnings().is_empty());
        // the closest point overall is class 0, but the query is class 1
        assert_eq!(interp.predict(&pt(9, &[0.01], Some(1))), -1.0);
        assert_eq!(interp.predict(&pt(9, &[4.0], Some(0))), 1.0);

        let missing = ValueInterpolator::fit(&pairs[1..], &cfg, &[0, 1]).unwrap();
        assert_eq!(missing.warnings().len(), 1);
        // no class-0 pool: penalty mode still prefers nothing but class 1
        assert_eq!(missing.predict(&pt(9, &[0.0], Some(0))), -1.0);
    }

    #[test]
    fn empty_fit_is_an_error() {
        assert!(ValueInterpolator::fit(&[], &InterpolatorConfig::default(), &[]).is_err());
    }

    proptest! {
        #[test]
        fn predictions_stay_in_fitted_range(
            values in prop::collection::vec(-1.0f64..1.0, 1..20),
            query in prop::collection::vec(-10.0f64..10.0, 2),
        ) {
            let pts: Vec<DataPoint> = values
                .iter()
                .enumerate()
                .map(|(i, _)| pt(i as u64, &[i as f64 * 0.37, (i as f64).sin()], None))
                .collect();
            let pairs: Vec<(&DataPoint, f64)> = pts.iter().zip(&values).map(|(p, v)| (p, *v)).collect();
            let interp = ValueInterpolator::fit(&pairs, &InterpolatorConfig::default(), &[]).unwrap();
            let (lo, hi) = interp.value_range();
            let y = interp.predict(&pt(1000, &query, None));
            prop_assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, Dataset, LabelKind};
use crate::error::{Error, Result};
use crate::potential::{canonical_order, Potential};
use crate::potentials::learners::{train, Learner, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ClassificationAccuracy,
    /// `max(0, min(1, R²))` on the test set.
    R2Clipped,
}

/// What a degenerate training multiset is worth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    /// Classifiers: predict the majority training label (ties to the smallest
    /// id); an empty set scores the expected accuracy of a uniform guess.
    /// Regressors: predict the training mean, or 0 for the empty set.
    ConstantPredictor,
    /// A fixed score.
    Fixed(f64),
}

/// Trains a learner on `S` and scores it on a held-out test set.
#[derive(Debug, Clone)]
pub struct AccuracyPotential {
    learner: Learner,
    test_set: Dataset,
    metric: Metric,
    policy: DegeneratePolicy,
    n_classes: u32,
    name: String,
}

impl AccuracyPotential {
    pub fn new(learner: Learner, test_set: Dataset, metric: Metric) -> Result<Self> {
        if test_set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_classes = match (metric, test_set.label_kind()) {
            (Metric::ClassificationAccuracy, LabelKind::Categorical { n_classes }) => n_classes.max(2),
            (Metric::R2Clipped, LabelKind::Real) => 0,
            (metric, kind) => {
                return Err(Error::InvalidConfig(format!(
                    "metric {metric:?} cannot score test labels of kind {kind:?}"
                )))
            }
        };
        if metric == Metric::R2Clipped && matches!(learner, Learner::Logistic { .. }) {
            return Err(Error::InvalidConfig("logistic learner needs categorical labels".into()));
        }
        let name = format!(
            "{}_{}",
            learner.name(),
            match metric {
                Metric::ClassificationAccuracy => "accuracy",
                Metric::R2Clipped => "r2",
            }
        );
        Ok(Self {
            learner,
            test_set,
            metric,
            policy: DegeneratePolicy::ConstantPredictor,
            n_classes,
            name,
        })
    }

    /// Widens the class count beyond what the test set shows.
    pub fn with_n_classes(mut self, n_classes: u32) -> Self {
        self.n_classes = self.n_classes.max(n_classes);
        self
    }

    pub fn with_policy(mut self, policy: DegeneratePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test_set
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    /// Fallible evaluation; rejects points of the wrong dimension.
    pub fn try_evaluate(&self, train_set: &[&DataPoint]) -> Result<f64> {
        let d = self.test_set.dimension();
        if let Some(p) = train_set.iter().find(|p| p.dimension() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.dimension(),
            });
        }
        let sorted = canonical_order(train_set);
        let score = match self.metric {
            Metric::ClassificationAccuracy => self.classification_score(&sorted),
            Metric::R2Clipped => self.regression_score(&sorted),
        };
        Ok(score.clamp(0.0, 1.0))
    }

    fn classification_score(&self, train_set: &[&DataPoint]) -> f64 {
        let mut counts = vec![0usize; self.n_classes as usize];
        for p in train_set {
            if let Some(c) = p.class() {
                if (c as usize) < counts.len() {
                    counts[c as usize] += 1;
                }
            }
        }
        let present = counts.iter().filter(|&&c| c > 0).count();
        if present < 2 {
            return match self.policy {
                DegeneratePolicy::Fixed(v) => v,
                DegeneratePolicy::ConstantPredictor if train_set.is_empty() => 1.0 / self.n_classes as f64,
                DegeneratePolicy::ConstantPredictor => {
                    let majority = counts
                        .iter()
                        .enumerate()
                        .fold(0, |best, (c, &n)| if n > counts[best] { c } else { best });
                    self.accuracy_of(|_| majority as u32)
                }
            };
        }
        let model = train(&self.learner, train_set, self.n_classes);
        self.accuracy_of(|x| model.predict_class(x))
    }

    fn regression_score(&self, train_set: &[&DataPoint]) -> f64 {
        let degenerate = train_set.is_empty() || (train_set.len() < 2 && matches!(self.learner, Learner::Ridge { .. }));
        if degenerate {
            return match self.policy {
                DegeneratePolicy::Fixed(v) => v,
                DegeneratePolicy::ConstantPredictor => {
                    let mean = if train_set.is_empty() {
                        0.0
                    } else {
                        train_set.iter().map(|p| label_value(p)).sum::<f64>() / train_set.len() as f64
                    };
                    self.r2_of(|_| mean)
                }
            };
        }
        let model: Model = train(&self.learner, train_set, 0);
        self.r2_of(|x| model.predict_real(x))
    }

    fn accuracy_of(&self, predict: impl Fn(&[f64]) -> u32) -> f64 {
        let correct = self
            .test_set
            .iter()
            .filter(|p| p.class() == Some(predict(&p.features)))
            .count();
        correct as f64 / self.test_set.len() as f64
    }

    fn r2_of(&self, predict: impl Fn(&[f64]) -> f64) -> f64 {
        let n = self.test_set.len() as f64;
        let mean = self.test_set.iter().map(label_value).sum::<f64>() / n;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for p in &self.test_set {
            let y = label_value(p);
            let e = y - predict(&p.features);
            ss_res += e * e;
            ss_tot += (y - mean) * (y - mean);
        }
        let r2 = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else if ss_res == 0.0 {
            1.0
        } else {
            0.0
        };
        r2.clamp(0.0, 1.0)
    }
}

fn label_value(p: &DataPoint) -> f64 {
    p.label.map_or(0.0, |l| l.as_f64())
}

impl Potential for AccuracyPotential {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, train_set: &[&DataPoint]) -> f64 {
        self.try_evaluate(train_set)
            .unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        if data.dimension() != self.test_set.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.test_set.dimension(),
                found: data.dimension(),
            });
        }
        match (self.metric, data.label_kind()) {
            (Metric::ClassificationAccuracy, LabelKind::Categorical { n_classes }) if n_classes <= self.n_classes => {
                Ok(())
            }
            (Metric::R2Clipped, LabelKind::Real) => Ok(()),
            (_, kind) => Err(Error::InvalidData(format!(
                "labels of kind {kind:?} do not fit potential {}",
                self.name
            ))),
        }
    }
}

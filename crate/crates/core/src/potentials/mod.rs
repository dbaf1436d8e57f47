//! Built-in potential functions.

mod accuracy;
pub mod learners;
mod mean;
pub mod simple;
mod stability;

use serde::{Deserialize, Serialize};

pub use accuracy::{AccuracyPotential, DegeneratePolicy, Metric};
pub use learners::Learner;
pub use mean::{analytic_mean_value, big_c, small_c, MeanPotential};
pub use simple::{
    AdditivePotential, ConstantPotential, FeatureSumPotential, IndicatorPotential, LinearCombination, MaskedPotential,
};
pub use stability::{deletion_stability_probe, log_log_slope};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Serializable description of a built-in potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    /// Moments frozen from the database passed to [`PotentialSpec::build`].
    Mean {
        #[serde(default)]
        clip: bool,
    },
    Logistic {
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_l2")]
        l2: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k_neighbors: usize,
    },
    Ridge {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

fn default_lr() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    200
}
fn default_l2() -> f64 {
    1e-3
}
fn default_k() -> usize {
    5
}
fn default_lambda() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn needs_test_set(&self) -> bool {
        matches!(
            self,
            PotentialSpec::Logistic { .. } | PotentialSpec::Knn { .. } | PotentialSpec::Ridge { .. }
        )
    }

    /// Builds the potential. `db` supplies the mean potential's moments;
    /// `test` is the held-out set scored by accuracy potentials.
    pub fn build(&self, db: &Dataset, test: Option<&Dataset>) -> Result<Box<dyn Potential>> {
        let learner = match *self {
            PotentialSpec::Constant { value } => return Ok(Box::new(ConstantPotential::new(value))),
            PotentialSpec::Mean { clip } => return Ok(Box::new(MeanPotential::from_database(db, clip)?)),
            PotentialSpec::Logistic { lr, epochs, l2 } => Learner::Logistic { lr, epochs, l2 },
            PotentialSpec::Knn { k_neighbors } => Learner::Knn { k_neighbors },
            PotentialSpec::Ridge { lambda } => Learner::Ridge { lambda },
        };
        let test = test.ok_or_else(|| Error::InvalidConfig("accuracy potentials need a test set".into()))?;
        let metric = match test.label_kind() {
            crate::data::LabelKind::Real => Metric::R2Clipped,
            _ => Metric::ClassificationAccuracy,
        };
        let mut u = AccuracyPotential::new(learner, test.clone(), metric)?;
        if let Some(n) = db.label_kind().n_classes() {
            u = u.with_n_classes(n);
        }
        u.validate(db)?;
        Ok(Box::new(u))
    }
}

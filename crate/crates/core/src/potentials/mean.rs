//! Mean estimation: `U(S) = R² − ‖μ̂_S − μ‖²` and its closed-form
//! distributional value.

use crate::data::{squared_distance, DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::potential::{canonical_order, Potential};

/// Mean-estimation potential with reference moments frozen at construction.
///
/// The unclipped form is the default; its algebra is what the closed-form
/// value relies on. With `clip` on, outputs are clamped into `[0,1]`.
/// `U(∅) = 0` in both forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPotential {
    mu: Vec<f64>,
    r2: f64,
    clip: bool,
}

impl MeanPotential {
    pub fn new(mu: Vec<f64>, r2: f64, clip: bool) -> Self {
        Self { mu, r2, clip }
    }

    /// Freezes `μ` and `R² = E‖s − μ‖²` from the whole database (population
    /// moments of its empirical distribution).
    pub fn from_database(db: &Dataset, clip: bool) -> Result<Self> {
        if db.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = db.len() as f64;
        let mut mu = vec![0.0; db.dimension()];
        for p in db {
            for (m, v) in mu.iter_mut().zip(&p.features) {
                *m += v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= n);
        let r2 = db.iter().map(|p| squared_distance(&p.features, &mu)).sum::<f64>() / n;
        Ok(Self { mu, r2, clip })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn clipped(&self) -> bool {
        self.clip
    }

    /// Closed-form `val(z; U, D, m)` for this potential's moments.
    pub fn analytic_value(&self, z: &[f64], m: usize) -> f64 {
        analytic_mean_value(z, m, &self.mu, self.r2)
    }

    fn canonical_sum(&self, train: &[&DataPoint]) -> Vec<f64> {
        let mut sum = vec![0.0; self.mu.len()];
        for p in canonical_order(train) {
            for (m, v) in sum.iter_mut().zip(&p.features) {
                *m += v;
            }
        }
        sum
    }

    /// `U` of a non-empty multiset given the sum of its features.
    fn value_from_sum(&self, sum: impl Iterator<Item = f64>, n: usize) -> f64 {
        let err: f64 = sum.zip(&self.mu).map(|(s, m)| (s / n as f64 - m).powi(2)).sum();
        let u = self.r2 - err;
        if self.clip {
            u.clamp(0.0, 1.0)
        } else {
            u
        }
    }
}

impl Potential for MeanPotential {
    fn name(&self) -> &str {
        if self.clip {
            "mean_clipped"
        } else {
            "mean"
        }
    }

    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        if train.is_empty() {
            return 0.0;
        }
        self.value_from_sum(self.canonical_sum(train).into_iter(), train.len())
    }

    /// Sums `base` once, so each point costs `O(d)`.
    fn marginal_contributions(&self, base: &[&DataPoint], points: &[&DataPoint]) -> Vec<f64> {
        let u_base = self.evaluate(base);
        let sum = self.canonical_sum(base);
        let n = base.len() + 1;
        points
            .iter()
            .map(|z| self.value_from_sum(sum.iter().zip(&z.features).map(|(s, v)| s + v), n) - u_base)
            .collect()
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        if data.dimension() != self.mu.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu.len(),
                found: data.dimension(),
            });
        }
        Ok(())
    }
}

/// `c(m) = Σ_{k=2..m} 1/(k²(k−1))`.
pub fn small_c(m: usize) -> f64 {
    (2..=m)
        .map(|k| {
            let k = k as f64;
            1.0 / (k * k * (k - 1.0))
        })
        .sum()
}

/// `C(m) = 2 − 1/m − c(m)`, which equals `Σ_{k=1..m} 1/k²`.
pub fn big_c(m: usize) -> f64 {
    2.0 - 1.0 / m as f64 - small_c(m)
}

/// Distributional value of `z` under the unclipped mean potential:
/// `(1/m)·[C(m)·(R² − ‖z−μ‖²) + (R² − R²/m)]`.
pub fn analytic_mean_value(z: &[f64], m: usize, mu: &[f64], r2: f64) -> f64 {
    assert!(m >= 1, "horizon must be at least 1");
    let mf = m as f64;
    let spread = r2 - squared_distance(z, mu);
    (big_c(m) * spread + (r2 - r2 / mf)) / mf
}

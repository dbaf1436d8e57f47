//! The potential-function contract.

use rayon::prelude::*;

use crate::data::{DataPoint, Dataset};
use crate::error::Result;

/// A set function `U` from finite multisets of points to a score, bundling a
/// learner and a performance metric.
///
/// Implementations must be deterministic and invariant to the order of
/// `train`. Built-in potentials canonicalize the multiset with
/// [`canonical_order`] before touching it, so results are bit-identical under
/// any permutation of the input.
pub trait Potential: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, train: &[&DataPoint]) -> f64;

    /// `U(∅)`.
    fn empty_value(&self) -> f64 {
        self.evaluate(&[])
    }

    /// Checks that points from `data` can be fed to this potential.
    fn validate(&self, _data: &Dataset) -> Result<()> {
        Ok(())
    }

    /// `U(base ∪ {extra})`. Override when adding one point to an already
    /// evaluated multiset is cheaper than a full evaluation.
    fn evaluate_with(&self, base: &[&DataPoint], extra: &DataPoint) -> f64 {
        let mut train = Vec::with_capacity(base.len() + 1);
        train.extend_from_slice(base);
        train.push(extra);
        self.evaluate(&train)
    }

    /// `U(base ∪ {z}) − U(base)` for every `z` in `points`, in input order.
    fn marginal_contributions(&self, base: &[&DataPoint], points: &[&DataPoint]) -> Vec<f64> {
        let u_base = self.evaluate(base);
        if points.len() < PAR_MIN_POINTS {
            points.iter().map(|z| self.evaluate_with(base, z) - u_base).collect()
        } else {
            points
                .par_iter()
                .map(|z| self.evaluate_with(base, z) - u_base)
                .collect()
        }
    }
}

/// Below this many points marginal contributions are evaluated on the calling
/// thread.
const PAR_MIN_POINTS: usize = 16;

impl<P: Potential + ?Sized> Potential for &P {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        (**self).evaluate(train)
    }
    fn empty_value(&self) -> f64 {
        (**self).empty_value()
    }
    fn validate(&self, data: &Dataset) -> Result<()> {
        (**self).validate(data)
    }
    fn evaluate_with(&self, base: &[&DataPoint], extra: &DataPoint) -> f64 {
        (**self).evaluate_with(base, extra)
    }
    fn marginal_contributions(&self, base: &[&DataPoint], points: &[&DataPoint]) -> Vec<f64> {
        (**self).marginal_contributions(base, points)
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        (**self).evaluate(train)
    }
    fn empty_value(&self) -> f64 {
        (**self).empty_value()
    }
    fn validate(&self, data: &Dataset) -> Result<()> {
        (**self).validate(data)
    }
    fn evaluate_with(&self, base: &[&DataPoint], extra: &DataPoint) -> f64 {
        (**self).evaluate_with(base, extra)
    }
    fn marginal_contributions(&self, base: &[&DataPoint], points: &[&DataPoint]) -> Vec<f64> {
        (**self).marginal_contributions(base, points)
    }
}

/// Sorts a multiset by point contents so that downstream floating-point
/// reductions happen in one fixed order.
pub fn canonical_order<'a>(train: &[&'a DataPoint]) -> Vec<&'a DataPoint> {
    let mut sorted = train.to_vec();
    sorted.sort_by(|a, b| a.content_cmp(b));
    sorted
}

//! Small closed-form potentials and combinators. They are cheap, which makes
//! them the workhorses of the oracle and axiom tests.

use std::collections::BTreeMap;

use crate::data::{DataPoint, Dataset};
use crate::error::Result;
use crate::potential::{canonical_order, Potential};

/// `U ≡ c`.
#[derive(Debug, Clone)]
pub struct ConstantPotential {
    value: f64,
    name: String,
}

impl ConstantPotential {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            name: format!("constant({value})"),
        }
    }
}

impl Potential for ConstantPotential {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, _train: &[&DataPoint]) -> f64 {
        self.value
    }
}

/// `U(S) = 1` iff `S` contains a point with the target id.
#[derive(Debug, Clone)]
pub struct IndicatorPotential {
    target: u64,
}

impl IndicatorPotential {
    pub fn new(target: u64) -> Self {
        Self { target }
    }
}

impl Potential for IndicatorPotential {
    fn name(&self) -> &str {
        "indicator"
    }

    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        if train.iter().any(|p| p.id == self.target) {
            1.0
        } else {
            0.0
        }
    }
}

/// `U(S) = Σ_{z∈S} c_z / total` over distinct ids in `S`. With `total` the
/// sum of weights over a dataset `B`, every subset of `B` maps into `[0,1]`
/// and the marginal contribution of `z` is always `c_z / total`.
#[derive(Debug, Clone)]
pub struct AdditivePotential {
    weights: BTreeMap<u64, f64>,
    total: f64,
}

impl AdditivePotential {
    pub fn new(weights: BTreeMap<u64, f64>) -> Self {
        let total = weights.values().sum::<f64>();
        Self { weights, total }
    }

    /// Weight of each point taken from its first feature (absolute value).
    pub fn from_first_feature(data: &Dataset) -> Self {
        Self::new(
            data.iter()
                .map(|p| (p.id, p.features.first().map_or(0.0, |v| v.abs())))
                .collect(),
        )
    }

    pub fn share(&self, id: u64) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0) / self.total
    }
}

impl Potential for AdditivePotential {
    fn name(&self) -> &str {
        "additive"
    }

    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        if self.total <= 0.0 {
            return 0.0;
        }
        let mut sorted = canonical_order(train);
        sorted.dedup_by_key(|p| p.id);
        sorted.iter().map(|p| self.share(p.id)).sum()
    }
}

/// `U(S) = scale · Σ_{z∈S} |x_0(z)|` over the multiset `S`, keyed on content
/// rather than id, so identical points always contribute the same amount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSumPotential {
    scale: f64,
}

impl FeatureSumPotential {
    pub fn new(scale: f64) -> Self {
        Self { scale }
    }

    pub fn contribution(&self, z: &DataPoint) -> f64 {
        self.scale * z.features.first().map_or(0.0, |v| v.abs())
    }
}

impl Potential for FeatureSumPotential {
    fn name(&self) -> &str {
        "feature_sum"
    }

    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        canonical_order(train).iter().map(|p| self.contribution(p)).sum()
    }
}

/// Evaluates `inner` after dropping every point whose id is in `ignored`, so
/// the ignored points are null players by construction.
pub struct MaskedPotential<P> {
    inner: P,
    ignored: Vec<u64>,
    name: String,
}

impl<P: Potential> MaskedPotential<P> {
    pub fn new(inner: P, ignored: Vec<u64>) -> Self {
        let name = format!("masked({})", inner.name());
        Self { inner, ignored, name }
    }
}

impl<P: Potential> Potential for MaskedPotential<P> {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        let kept: Vec<&DataPoint> = train
            .iter()
            .copied()
            .filter(|p| !self.ignored.contains(&p.id))
            .collect();
        self.inner.evaluate(&kept)
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        self.inner.validate(data)
    }
}

/// `Σ_i a_i · U_i`, unclipped. Used to check additivity of values.
pub struct LinearCombination {
    terms: Vec<(f64, Box<dyn Potential>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, Box<dyn Potential>)>) -> Self {
        Self { terms }
    }
}

impl Potential for LinearCombination {
    fn name(&self) -> &str {
        "linear_combination"
    }

    fn evaluate(&self, train: &[&DataPoint]) -> f64 {
        self.terms.iter().map(|(a, u)| a * u.evaluate(train)).sum()
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        self.terms.iter().try_for_each(|(_, u)| u.validate(data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelKind;

    #[test]
    fn additive_marginals_are_constant() {
        let ds = Dataset::from_rows(1, LabelKind::None, [1.0, 2.0, 5.0].map(|v| (vec![v], None))).unwrap();
        let u = AdditivePotential::from_first_feature(&ds);
        let p = ds.points();
        assert_eq!(u.evaluate(&[]), 0.0);
        assert!((u.evaluate(&[&p[0], &p[1], &p[2]]) - 1.0).abs() < 1e-15);
        assert!((u.evaluate(&[&p[1], &p[2]]) - u.evaluate(&[&p[2]]) - 0.25).abs() < 1e-15);
        // duplicates count once
        assert_eq!(u.evaluate(&[&p[2], &p[2]]), u.evaluate(&[&p[2]]));
    }

    #[test]
    fn masked_ignores_points() {
        let ds = Dataset::from_rows(1, LabelKind::None, [1.0, 3.0].map(|v| (vec![v], None))).unwrap();
        let p = ds.points();
        let u = MaskedPotential::new(AdditivePotential::from_first_feature(&ds), vec![1]);
        assert_eq!(u.evaluate(&[&p[0], &p[1]]), u.evaluate(&[&p[0]]));
    }
}

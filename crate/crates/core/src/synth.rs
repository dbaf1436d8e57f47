//! Seeded synthetic fixtures: standard normal clouds for mean estimation,
//! Gaussian blobs for classification, linear-Gaussian data for regression.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, Dataset, Label, LabelKind};
use crate::error::{Error, Result};
use crate::rng::{purpose, RandomSource, Stream};

fn normal(stream: &mut Stream) -> f64 {
    StandardNormal.sample(stream)
}

fn point_stream(seed: u64, index: u64) -> Stream {
    RandomSource::new(seed).stream(purpose::SYNTH, index)
}

/// `n` unlabeled draws from `N(0, I_d)`.
pub fn standard_normal(n: usize, d: usize, seed: u64) -> Dataset {
    let rows = (0..n).map(|i| {
        let mut s = point_stream(seed, i as u64);
        ((0..d).map(|_| normal(&mut s)).collect(), None)
    });
    Dataset::from_rows(d, LabelKind::None, rows).expect("well-formed synthetic data")
}

/// Balanced two-class blobs: class `c` centered at `±separation/2` on every
/// axis, isotropic noise `std`. Labels alternate `0, 1, 0, ...`.
pub fn two_blobs(n: usize, d: usize, separation: f64, std: f64, seed: u64) -> Dataset {
    let rows = (0..n).map(|i| {
        let mut s = point_stream(seed, i as u64);
        let class = (i % 2) as u32;
        let center = if class == 1 {
            separation / 2.0
        } else {
            -separation / 2.0
        };
        let f = (0..d).map(|_| center + std * normal(&mut s)).collect();
        (f, Some(Label::Class(class)))
    });
    Dataset::from_rows(d, LabelKind::Categorical { n_classes: 2 }, rows).expect("well-formed synthetic data")
}

/// `y = w·x + noise·ε` with `x ∼ N(0, I_d)` and `w_j = (−1)^j / (j + 1)`.
pub fn linear_gaussian(n: usize, d: usize, noise: f64, seed: u64) -> Dataset {
    let w: Vec<f64> = (0..d)
        .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / (j + 1) as f64)
        .collect();
    let rows = (0..n).map(|i| {
        let mut s = point_stream(seed, i as u64);
        let x: Vec<f64> = (0..d).map(|_| normal(&mut s)).collect();
        let y = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + noise * normal(&mut s);
        (x, Some(Label::Real(y)))
    });
    Dataset::from_rows(d, LabelKind::Real, rows).expect("well-formed synthetic data")
}

/// Flips the labels of exactly `round(fraction · n)` uniformly chosen points.
/// Returns the noisy dataset and the flipped ids in ascending order.
pub fn flip_labels(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Vec<u64>)> {
    let n_classes = data
        .label_kind()
        .n_classes()
        .ok_or_else(|| Error::InvalidData("label flipping needs categorical labels".into()))?;
    if n_classes < 2 {
        return Err(Error::InvalidData("label flipping needs at least two classes".into()));
    }
    let n = data.len();
    let count = ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut stream = RandomSource::new(seed).stream(purpose::SYNTH, u64::MAX);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + stream.uniform_index(n - i);
        idx.swap(i, j);
    }
    let mut flip = idx[..count].to_vec();
    flip.sort_unstable();
    let mut points = data.points().to_vec();
    for &i in &flip {
        let c = points[i].class().expect("categorical label");
        let shift = 1 + stream.uniform_index(n_classes as usize - 1) as u32;
        points[i].label = Some(Label::Class((c + shift) % n_classes));
    }
    let ids = flip.iter().map(|&i| points[i].id).collect();
    Ok((data.with_points(points)?, ids))
}

/// Distribution-shift knobs applied to a buyer's data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Shift {
    /// Standard deviation of Gaussian noise added to every feature.
    #[serde(default)]
    pub feature_noise: f64,
    /// Fraction of class-0 points dropped (class rebalance).
    #[serde(default)]
    pub drop_class0: f64,
}

impl Shift {
    pub fn is_identity(&self) -> bool {
        self.feature_noise == 0.0 && self.drop_class0 == 0.0
    }

    pub fn apply(&self, data: &Dataset, seed: u64) -> Result<Dataset> {
        if self.is_identity() {
            return Ok(data.clone());
        }
        let src = RandomSource::new(seed);
        let mut points: Vec<DataPoint> = Vec::with_capacity(data.len());
        for (i, p) in data.iter().enumerate() {
            let mut s = src.stream(purpose::SYNTH, i as u64);
            if p.class() == Some(0) && s.uniform_real() < self.drop_class0 {
                continue;
            }
            let features = p
                .features
                .iter()
                .map(|v| v + self.feature_noise * normal(&mut s))
                .collect();
            points.push(DataPoint::new(p.id, features, p.label));
        }
        data.with_points(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(standard_normal(20, 2, 5), standard_normal(20, 2, 5));
        assert_ne!(standard_normal(20, 2, 5), standard_normal(20, 2, 6));
        assert_eq!(two_blobs(10, 2, 2.0, 1.0, 1), two_blobs(10, 2, 2.0, 1.0, 1));
    }

    #[test]
    fn flip_exact_count() {
        let data = two_blobs(100, 2, 3.0, 1.0, 2);
        let (noisy, ids) = flip_labels(&data, 0.1, 3).unwrap();
        assert_eq!(ids.len(), 10);
        let changed = data
            .iter()
            .zip(noisy.iter())
            .filter(|(a, b)| a.label != b.label)
            .count();
        assert_eq!(changed, 10);
    }

    #[test]
    fn standard_normal_moments() {
        let data = standard_normal(20_000, 1, 1);
        let mean = data.iter().map(|p| p.features[0]).sum::<f64>() / 20_000.0;
        let var = data.iter().map(|p| p.features[0].powi(2)).sum::<f64>() / 20_000.0;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.05);
    }
}

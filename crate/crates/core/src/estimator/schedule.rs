use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Uniform,
    /// `w_k ∝ k^{1−2b}`, matched to a `k^{−b}` deletion-stability profile.
    InversePower {
        b: f64,
    },
}

/// Sampling distribution over cardinalities `k ∈ {1, .., m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleSpec")]
pub struct WeightSchedule {
    m: usize,
    kind: ScheduleKind,
    /// `weights[k − 1] = w_k`.
    weights: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

#[derive(Deserialize)]
struct ScheduleSpec {
    m: usize,
    kind: ScheduleKind,
}

impl TryFrom<ScheduleSpec> for WeightSchedule {
    type Error = Error;

    fn try_from(spec: ScheduleSpec) -> Result<Self> {
        Self::new(spec.m, spec.kind)
    }
}

impl WeightSchedule {
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(m, ScheduleKind::Uniform)
    }

    pub fn inverse_power(m: usize, b: f64) -> Result<Self> {
        Self::new(m, ScheduleKind::InversePower { b })
    }

    pub fn new(m: usize, kind: ScheduleKind) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("horizon m must be at least 1".into()));
        }
        let weights = match kind {
            ScheduleKind::Uniform => vec![1.0 / m as f64; m],
            ScheduleKind::InversePower { b } => {
                if !(b >= 0.5 && b.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "schedule exponent b must be >= 0.5, got {b}"
                    )));
                }
                let raw: Vec<f64> = (1..=m).map(|k| (k as f64).powf(1.0 - 2.0 * b)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            }
        };
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            m,
            kind,
            weights,
            cumulative,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn is_uniform(&self) -> bool {
        self.kind == ScheduleKind::Uniform
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_k` for `k ∈ [1, m]`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k - 1]
    }

    pub fn name(&self) -> String {
        match self.kind {
            ScheduleKind::Uniform => "uniform".into(),
            ScheduleKind::InversePower { b } => format!("inverse_power(b={b})"),
        }
    }

    /// Draws `k` with `Pr[k] = w_k`.
    pub fn sample(&self, rng: &mut Stream) -> usize {
        match self.kind {
            ScheduleKind::Uniform => rng.uniform_index(self.m) + 1,
            ScheduleKind::InversePower { .. } => rng.categorical(&self.cumulative) + 1,
        }
    }

    /// The importance divisor `w_k · m`; exactly 1 for the uniform schedule.
    pub fn divisor(&self, k: usize) -> f64 {
        if self.is_uniform() {
            1.0
        } else {
            self.weight(k) * self.m as f64
        }
    }

    /// Expected cardinality `E[k]`.
    pub fn mean_cardinality(&self) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    #[test]
    fn weights_sum_to_one() {
        for m in [1, 2, 10, 200] {
            for s in [
                WeightSchedule::uniform(m).unwrap(),
                WeightSchedule::inverse_power(m, 1.0).unwrap(),
            ] {
                let total: f64 = s.weights().iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
                assert!(s.weights().iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn inverse_power_one_is_harmonic() {
        let s = WeightSchedule::inverse_power(4, 1.0).unwrap();
        let h = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        for k in 1..=4 {
            assert!((s.weight(k) - 1.0 / (k as f64 * h)).abs() < 1e-15);
        }
        // b = 1/2 is uniform in shape
        let flat = WeightSchedule::inverse_power(5, 0.5).unwrap();
        assert!(flat.weights().iter().all(|&w| (w - 0.2).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WeightSchedule::uniform(0).is_err());
        assert!(WeightSchedule::inverse_power(5, 0.4).is_err());
    }

    #[test]
    fn uniform_divisor_is_exactly_one() {
        let s = WeightSchedule::uniform(49).unwrap();
        assert_eq!(s.divisor(7), 1.0);
        assert_ne!(s.weight(7) * 49.0, 1.0, "the special case matters for m = 49");
    }

    #[test]
    fn sampling_frequencies_track_weights() {
        let s = WeightSchedule::inverse_power(5, 1.0).unwrap();
        let mut stream = RandomSource::new(9).stream(0, 0);
        let mut counts = [0usize; 5];
        let n = 100_000;
        for _ in 0..n {
            counts[s.sample(&mut stream) - 1] += 1;
        }
        for k in 1..=5 {
            let f = counts[k - 1] as f64 / n as f64;
            assert!((f - s.weight(k)).abs() < 0.006, "k={k} f={f}");
        }
    }
}

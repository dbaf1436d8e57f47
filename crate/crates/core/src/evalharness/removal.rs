use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::evalharness::stats::trapezoid;
use crate::potential::Potential;
use crate::rng::{purpose, RandomSource};
use crate::value::ValueTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ordering {
    ByValueDesc,
    ByValueAsc,
    Random { seed: u64 },
}

impl Ordering {
    pub fn name(&self) -> String {
        match self {
            Ordering::ByValueDesc => "by_value_desc".into(),
            Ordering::ByValueAsc => "by_value_asc".into(),
            Ordering::Random { seed } => format!("random(seed={seed})"),
        }
    }
}

impl std::str::FromStr for Ordering {
    type Err = Error;

    /// Accepts `desc`, `asc`, `random` (seed 0) or `random:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desc" | "by_value_desc" => Ok(Ordering::ByValueDesc),
            "asc" | "by_value_asc" => Ok(Ordering::ByValueAsc),
            "random" => Ok(Ordering::Random { seed: 0 }),
            _ => s
                .strip_prefix("random:")
                .and_then(|v| v.parse().ok())
                .map(|seed| Ordering::Random { seed })
                .ok_or_else(|| Error::InvalidConfig(format!("unknown ordering '{s}'"))),
        }
    }
}

/// Utility of the remaining set after each batch of removals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalCurve {
    pub fractions_removed: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub ordering: Ordering,
}

impl RemovalCurve {
    pub fn area_under_curve(&self) -> f64 {
        trapezoid(&self.fractions_removed, &self.accuracy)
    }

    /// CSV with header `fraction_removed,accuracy`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_series(
            writer,
            "fraction_removed,accuracy",
            &self.fractions_removed,
            &self.accuracy,
        )
    }
}

pub(crate) fn write_series<W: Write>(mut writer: W, header: &str, x: &[f64], y: &[f64]) -> Result<()> {
    writeln!(writer, "{header}")?;
    for (a, b) in x.iter().zip(y) {
        writeln!(writer, "{a},{b}")?;
    }
    Ok(())
}

/// Ids sorted by value (ties by ascending id) or shuffled.
pub fn order_ids(values: &[(u64, f64)], ordering: Ordering) -> Vec<u64> {
    let mut pairs = values.to_vec();
    pairs.sort_by_key(|p| p.0);
    match ordering {
        Ordering::ByValueDesc => pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))),
        Ordering::ByValueAsc => pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
        Ordering::Random { seed } => {
            let mut stream = RandomSource::new(seed).stream(purpose::ORDERING, 0);
            for i in (1..pairs.len()).rev() {
                let j = stream.uniform_index(i + 1);
                pairs.swap(i, j);
            }
        }
    }
    pairs.into_iter().map(|(id, _)| id).collect()
}

/// Batch boundaries `0, b, 2b, .., n` with `b = max(1, ⌊n/steps⌋)`.
pub(crate) fn batch_boundaries(n: usize, steps: usize) -> Vec<usize> {
    let batch = (n / steps).max(1);
    let mut cuts: Vec<usize> = (0..n).step_by(batch).collect();
    cuts.push(n);
    cuts
}

/// Removes `train` points in the given order, in batches of
/// `max(1, ⌊N/steps⌋)`, re-evaluating `U` on the remainder after each batch
/// until nothing is left.
pub fn point_removal_experiment<U: Potential + ?Sized>(
    train: &Dataset,
    values: &ValueTable,
    potential: &U,
    steps: usize,
    ordering: Ordering,
) -> Result<RemovalCurve> {
    if steps < 2 {
        return Err(Error::InvalidConfig(format!("steps must be at least 2, got {steps}")));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pairs = train
        .iter()
        .map(|p| values.value(p.id).map(|v| (p.id, v)).ok_or(Error::MissingId(p.id)))
        .collect::<Result<Vec<_>>>()?;
    let order = order_ids(&pairs, ordering);
    let by_id: std::collections::HashMap<u64, &DataPoint> = train.iter().map(|p| (p.id, p)).collect();
    let ordered: Vec<&DataPoint> = order.iter().map(|id| by_id[id]).collect();
    let n = ordered.len();
    let cuts = batch_boundaries(n, steps);
    let accuracy: Vec<f64> = cuts.par_iter().map(|&c| potential.evaluate(&ordered[c..])).collect();
    Ok(RemovalCurve {
        fractions_removed: cuts.iter().map(|&c| c as f64 / n as f64).collect(),
        accuracy,
        ordering,
    })
}

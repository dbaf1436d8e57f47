//! Running value estimates and the table the estimators return.

use std::collections::{BTreeMap, VecDeque};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 100;

/// Running mean of (reweighted) marginal contributions for one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub count: u64,
    /// Sum of squared deviations, for the standard error.
    m2: f64,
    /// Last `window` absolute changes of `mean`.
    history_tail: VecDeque<f64>,
    window: usize,
    pub interpolated: bool,
}

impl ValueEstimate {
    pub fn new(window: usize) -> Self {
        Self {
            mean: 0.0,
            count: 0,
            m2: 0.0,
            history_tail: VecDeque::with_capacity(window),
            window: window.max(1),
            interpolated: false,
        }
    }

    /// A value filled in by interpolation; it carries no samples.
    pub fn interpolated(value: f64) -> Self {
        let mut e = Self::new(1);
        e.mean = value;
        e.interpolated = true;
        e
    }

    /// `val ← (1/t)·x + ((t−1)/t)·val`.
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let t = self.count as f64;
        let old = self.mean;
        let new = (1.0 / t) * x + ((t - 1.0) / t) * old;
        self.m2 += (x - old) * (x - new);
        if self.history_tail.len() == self.window {
            self.history_tail.pop_front();
        }
        self.history_tail.push_back((new - old).abs());
        self.mean = new;
    }

    pub fn history_tail(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.history_tail.iter().copied()
    }

    /// Sample variance of the incorporated samples; NaN below two samples.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.sample_variance() / self.count as f64).sqrt()
    }
}

/// Values for a set of points, keyed by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub entries: BTreeMap<u64, ValueEstimate>,
    /// Horizon the values refer to.
    pub m: usize,
    pub seed: u64,
    pub schedule_name: String,
    /// Completed iterations.
    pub iterations: u64,
    pub converged: bool,
}

impl ValueTable {
    pub fn new(
        ids: impl IntoIterator<Item = u64>,
        window: usize,
        m: usize,
        seed: u64,
        schedule_name: impl Into<String>,
    ) -> Self {
        Self {
            entries: ids.into_iter().map(|id| (id, ValueEstimate::new(window))).collect(),
            m,
            seed,
            schedule_name: schedule_name.into(),
            iterations: 0,
            converged: false,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&ValueEstimate> {
        self.entries.get(&id)
    }

    pub fn value(&self, id: u64) -> Option<f64> {
        self.entries.get(&id).map(|e| e.mean)
    }

    pub fn ids(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    /// Values in ascending id order.
    pub fn values(&self) -> Vec<f64> {
        self.entries.values().map(|e| e.mean).collect()
    }

    /// Values for `ids`, in that order.
    pub fn values_for(&self, ids: &[u64]) -> Result<Vec<f64>> {
        ids.iter()
            .map(|&id| self.value(id).ok_or(Error::MissingId(id)))
            .collect()
    }

    /// Entries that were estimated rather than interpolated.
    pub fn estimated(&self) -> impl Iterator<Item = (&u64, &ValueEstimate)> {
        self.entries.iter().filter(|(_, e)| !e.interpolated)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().map(|e| e.mean).sum()
    }

    /// CSV with columns `id,value,count,interpolated`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["id", "value", "count", "interpolated"])?;
        for (id, e) in &self.entries {
            wtr.write_record([
                id.to_string(),
                e.mean.to_string(),
                e.count.to_string(),
                u8::from(e.interpolated).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads a value CSV. Run metadata is not part of the CSV and is left at
    /// defaults.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["id", "value", "count", "interpolated"] {
            return Err(Error::InvalidData(
                "value CSV must have columns id,value,count,interpolated".into(),
            ));
        }
        let mut entries = BTreeMap::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::InvalidData(format!("value CSV row {}: bad {what}", line + 1));
            let id: u64 = rec[0].trim().parse().map_err(|_| bad("id"))?;
            let mean: f64 = rec[1].trim().parse().map_err(|_| bad("value"))?;
            let count: u64 = rec[2].trim().parse().map_err(|_| bad("count"))?;
            let interpolated = match rec[3].trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad("interpolated flag")),
            };
            let mut e = ValueEstimate::new(1);
            e.mean = mean;
            e.count = count;
            e.interpolated = interpolated;
            if entries.insert(id, e).is_some() {
                return Err(Error::InvalidData(format!("duplicate id {id} in value CSV")));
            }
        }
        Ok(Self {
            entries,
            m: 0,
            seed: 0,
            schedule_name: String::new(),
            iterations: 0,
            converged: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_mean_matches_arithmetic_mean() {
        let xs = [0.5, -1.0, 2.0, 0.25, 3.0];
        let mut e = ValueEstimate::new(3);
        for &x in &xs {
            e.update(x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((e.mean - mean).abs() < 1e-15);
        assert_eq!(e.count, 5);
        assert_eq!(e.history_tail().len(), 3);
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((e.sample_variance() - var).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let mut t = ValueTable::new([3, 1], 10, 5, 0, "uniform");
        t.entries.get_mut(&1).unwrap().update(0.125);
        t.entries.insert(7, ValueEstimate::interpolated(-0.5));
        let text = t.to_csv_string();
        assert_eq!(text, "id,value,count,interpolated\n1,0.125,1,0\n3,0,0,0\n7,-0.5,0,1\n");
        let back = ValueTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.values(), t.values());
        assert!(back.get(7).unwrap().interpolated);
    }
}

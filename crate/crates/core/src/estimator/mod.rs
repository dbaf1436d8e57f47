//! Monte Carlo estimation of distributional values.
//!
//! Each iteration draws a cardinality `k` from the weight schedule and a
//! training multiset `S ∼ db^{k−1}` with replacement. `U(S)` is evaluated once
//! and every point under valuation receives the marginal contribution
//! `U(S ∪ {z}) − U(S)` divided by `w_k · m`. Sharing `S` across points is what
//! keeps the number of trainings per iteration at `|Z| + 1`.

mod prefix;
mod schedule;

use serde::{Deserialize, Serialize};

pub use prefix::prefix_values;
pub use schedule::{ScheduleKind, WeightSchedule};

use crate::data::{sample_subset, DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::interpolate::{InterpolatorConfig, ValueInterpolator};
use crate::potential::Potential;
use crate::rng::{purpose, RandomSource};
use crate::value::{ValueEstimate, ValueTable, DEFAULT_WINDOW};

pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub m: usize,
    pub t_max: usize,
    pub schedule: WeightSchedule,
    pub window: usize,
    pub threshold: f64,
    pub seed: u64,
    pub record_cardinalities: bool,
}

impl EstimatorConfig {
    pub fn new(m: usize, t_max: usize, schedule: WeightSchedule, seed: u64) -> Self {
        Self {
            m,
            t_max,
            schedule,
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
            seed,
            record_cardinalities: false,
        }
    }

    pub fn uniform(m: usize, t_max: usize, seed: u64) -> Result<Self> {
        Ok(Self::new(m, t_max, WeightSchedule::uniform(m)?, seed))
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_records(mut self, record: bool) -> Self {
        self.record_cardinalities = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.schedule.m() != self.m {
            return Err(Error::InvalidConfig(format!(
                "schedule horizon {} differs from m = {}",
                self.schedule.m(),
                self.m
            )));
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        if self.t_max < self.window {
            return Err(Error::InvalidConfig(format!(
                "t_max ({}) must be at least the window ({})",
                self.t_max, self.window
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// One iteration's raw marginal contributions, aligned with
/// [`IterationLog::ids`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: u64,
    pub k: usize,
    pub contributions: Vec<f64>,
}

/// Everything needed to re-derive values at a smaller horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub ids: Vec<u64>,
    pub records: Vec<IterationRecord>,
    pub window: usize,
    pub seed: u64,
    pub converged: bool,
}

/// Result of an estimator run.
#[derive(Debug, Clone)]
pub struct Valuation {
    pub table: ValueTable,
    pub log: Option<IterationLog>,
    /// Total training-set sizes processed: `(k − 1) + |Z_p|·k` per iteration.
    pub training_cost: u64,
    /// Ids that were valued directly (`Z_p`).
    pub estimated_ids: Vec<u64>,
    pub warnings: Vec<String>,
}

/// Unweighted estimator: `k` uniform on `[m]`, every point valued.
pub fn d_shapley<U: Potential + ?Sized>(
    z: &Dataset,
    db: &Dataset,
    potential: &U,
    config: &EstimatorConfig,
) -> Result<Valuation> {
    if !config.schedule.is_uniform() {
        return Err(Error::NonUniformSchedule);
    }
    check_inputs(z, db, potential, config)?;
    let points: Vec<&DataPoint> = z.iter().collect();
    Ok(run_iterations(&points, db, potential, config))
}

/// Importance-weighted estimator with optional subsampling of the points to
/// value and interpolation of the rest.
pub fn fast_d_shapley<U: Potential + ?Sized>(
    z: &Dataset,
    db: &Dataset,
    potential: &U,
    config: &EstimatorConfig,
    subsample_p: f64,
    interpolator: Option<&InterpolatorConfig>,
) -> Result<Valuation> {
    if !(subsample_p > 0.0 && subsample_p <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "subsample rate must lie in (0, 1], got {subsample_p}"
        )));
    }
    check_inputs(z, db, potential, config)?;
    let kept = subsample(z, subsample_p, config.seed);
    let mut valuation = run_iterations(&kept, db, potential, config);

    if let Some(interp_config) = interpolator {
        if kept.len() < z.len() {
            let pairs: Vec<(&DataPoint, f64)> = kept
                .iter()
                .map(|p| (*p, valuation.table.value(p.id).expect("estimated id")))
                .collect();
            let classes: Vec<u32> = z.iter().filter_map(DataPoint::class).collect();
            let interp = ValueInterpolator::fit(&pairs, interp_config, &classes)?;
            valuation.warnings.extend(interp.warnings().iter().cloned());
            let missing: Vec<&DataPoint> = z
                .iter()
                .filter(|p| !valuation.table.entries.contains_key(&p.id))
                .collect();
            for p in missing {
                valuation
                    .table
                    .entries
                    .insert(p.id, ValueEstimate::interpolated(interp.predict(p)));
            }
        }
    }
    Ok(valuation)
}

/// True once the mean absolute change of the estimates over the last
/// `window` iterations falls below `threshold` times the mean absolute value.
///
/// Averages run over points and iterations; the denominator is floored at
/// `1e−12`. A window in which every change is exactly zero counts as
/// converged. A non-positive threshold never fires.
pub fn stopping_rule(table: &ValueTable, window: usize, threshold: f64) -> bool {
    if threshold <= 0.0 || window == 0 {
        return false;
    }
    let mut total_change = 0.0;
    let mut total_abs = 0.0;
    let mut n = 0usize;
    for (_, e) in table.estimated() {
        if e.history_tail().len() < window {
            return false;
        }
        total_change += e.history_tail().skip(e.history_tail().len() - window).sum::<f64>();
        total_abs += e.mean.abs();
        n += 1;
    }
    if n == 0 {
        return false;
    }
    if total_change == 0.0 {
        return true;
    }
    let avg_change = total_change / (n * window) as f64;
    let scale = (total_abs / n as f64).max(1e-12);
    avg_change < threshold * scale
}

fn check_inputs<U: Potential + ?Sized>(
    z: &Dataset,
    db: &Dataset,
    potential: &U,
    config: &EstimatorConfig,
) -> Result<()> {
    if z.is_empty() || db.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    potential.validate(db)?;
    potential.validate(z)
}

/// Keeps each point independently with probability `p`; if nothing survives,
/// keeps `max(1, ⌈p·|Z|⌉)` points chosen uniformly.
fn subsample(z: &Dataset, p: f64, seed: u64) -> Vec<&DataPoint> {
    let mut stream = RandomSource::new(seed).stream(purpose::SUBSAMPLE, 0);
    let kept: Vec<&DataPoint> = z.iter().filter(|_| stream.bernoulli(p)).collect();
    if !kept.is_empty() {
        return kept;
    }
    let forced = ((p * z.len() as f64).ceil() as usize).clamp(1, z.len());
    let mut idx: Vec<usize> = (0..z.len()).collect();
    for i in 0..forced {
        let j = i + stream.uniform_index(z.len() - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..forced].to_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| &z.points()[i]).collect()
}

fn run_iterations<U: Potential + ?Sized>(
    points: &[&DataPoint],
    db: &Dataset,
    potential: &U,
    config: &EstimatorConfig,
) -> Valuation {
    let rng = RandomSource::new(config.seed);
    let schedule = &config.schedule;
    let ids: Vec<u64> = points.iter().map(|p| p.id).collect();
    let mut table = ValueTable::new(
        ids.iter().copied(),
        config.window,
        config.m,
        config.seed,
        schedule.name(),
    );
    let mut records = Vec::new();
    let mut cost = 0u64;

    for t in 1..=config.t_max as u64 {
        let mut stream = rng.stream(purpose::ITERATION, t);
        let k = schedule.sample(&mut stream);
        let s = sample_subset(db, k - 1, &mut stream).expect("db is non-empty");
        let contributions = potential.marginal_contributions(&s, points);
        let divisor = schedule.divisor(k);
        for (id, delta) in ids.iter().zip(&contributions) {
            table.entries.get_mut(id).expect("id in table").update(delta / divisor);
        }
        cost += (k as u64 - 1) + points.len() as u64 * k as u64;
        table.iterations = t;
        if config.record_cardinalities {
            records.push(IterationRecord { t, k, contributions });
        }
        if t as usize >= config.window && stopping_rule(&table, config.window, config.threshold) {
            table.converged = true;
            break;
        }
    }

    let log = config.record_cardinalities.then(|| IterationLog {
        ids: ids.clone(),
        records,
        window: config.window,
        seed: config.seed,
        converged: table.converged,
    });
    Valuation {
        table,
        log,
        training_cost: cost,
        estimated_ids: ids,
        warnings: Vec::new(),
    }
}

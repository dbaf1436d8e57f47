use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::estimator::{fast_d_shapley, EstimatorConfig, ScheduleKind, WeightSchedule};
use crate::evalharness::stats::r_squared;
use crate::interpolate::InterpolatorConfig;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSetting {
    pub schedule: ScheduleKind,
    pub p: f64,
}

impl SpeedSetting {
    pub fn new(schedule: ScheduleKind, p: f64) -> Self {
        Self { schedule, p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupPoint {
    pub schedule: String,
    pub p: f64,
    /// Training cost relative to the uniform, `p = 1` baseline.
    pub relative_cost: f64,
    /// Coefficient of determination of the values against the baseline's.
    pub r2: f64,
}

/// Runs the uniform, `p = 1` baseline under `config`, then every setting with
/// the same horizon, iteration budget, stopping rule and seed. Unvalued
/// points are filled in by `interpolator`.
pub fn speedup_recovery_experiment<U: Potential + ?Sized>(
    z: &Dataset,
    db: &Dataset,
    potential: &U,
    config: &EstimatorConfig,
    settings: &[SpeedSetting],
    interpolator: &InterpolatorConfig,
) -> Result<Vec<SpeedupPoint>> {
    let mut base_cfg = config.clone();
    base_cfg.schedule = WeightSchedule::uniform(config.m)?;
    let baseline = fast_d_shapley(z, db, potential, &base_cfg, 1.0, None)?;
    let ids: Vec<u64> = z.iter().map(|p| p.id).collect();
    let reference = baseline.table.values_for(&ids)?;

    settings
        .iter()
        .map(|s| {
            let mut cfg = config.clone();
            cfg.schedule = WeightSchedule::new(config.m, s.schedule)?;
            let run = fast_d_shapley(z, db, potential, &cfg, s.p, Some(interpolator))?;
            Ok(SpeedupPoint {
                schedule: cfg.schedule.name(),
                p: s.p,
                relative_cost: run.training_cost as f64 / baseline.training_cost as f64,
                r2: r_squared(&reference, &run.table.values_for(&ids)?)?,
            })
        })
        .collect()
}

/// CSV with header `schedule,p,relative_cost,r2`.
pub fn write_speedup_csv<W: Write>(mut writer: W, points: &[SpeedupPoint]) -> Result<()> {
    writeln!(writer, "schedule,p,relative_cost,r2")?;
    for pt in points {
        writeln!(writer, "{},{},{},{}", pt.schedule, pt.p, pt.relative_cost, pt.r2)?;
    }
    Ok(())
}

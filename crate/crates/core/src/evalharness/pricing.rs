use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{fast_d_shapley, EstimatorConfig, ScheduleKind, WeightSchedule};
use crate::evalharness::removal::{batch_boundaries, order_ids, Ordering};
use crate::evalharness::stats::spearman;
use crate::potential::Potential;
use crate::tmc::{tmc_shapley, TmcConfig};
use crate::value::DEFAULT_WINDOW;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingConfig {
    /// Seller-side horizon. `None` uses `|B ∪ S|`, the size of the dataset the
    /// buyer ends up training on.
    pub horizon: Option<usize>,
    pub seller_t_max: usize,
    pub seller_schedule: ScheduleKind,
    pub buyer_permutations: usize,
    pub truncation_tolerance: f64,
    pub window: usize,
    pub threshold: f64,
    pub steps: usize,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            seller_t_max: 20_000,
            seller_schedule: ScheduleKind::Uniform,
            buyer_permutations: 2000,
            truncation_tolerance: 0.01,
            window: DEFAULT_WINDOW,
            // totals over S carry correlated error, so stop late
            threshold: 1e-4,
            steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricedPoint {
    pub id: u64,
    pub val: f64,
    pub sh: f64,
}

/// Utility of `B` plus a growing share of `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditionCurve {
    pub label: String,
    pub fractions_added: Vec<f64>,
    pub utility: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingReport {
    pub seed: u64,
    pub horizon: usize,
    pub rank_correlation: f64,
    /// `|Σ val − Σ sh| / Σ val`; absent when `Σ val ≤ 0`.
    pub ape: Option<f64>,
    pub ape_error: Option<String>,
    pub total_val: f64,
    pub total_sh: f64,
    pub points: Vec<PricedPoint>,
    pub addition_curves: Vec<AdditionCurve>,
}

impl PricingReport {
    /// CSV with header `id,val,sh`.
    pub fn write_points_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "id,val,sh")?;
        for p in &self.points {
            writeln!(writer, "{},{},{}", p.id, p.val, p.sh)?;
        }
        Ok(())
    }

    /// CSV with header `curve,fraction_added,utility`.
    pub fn write_curves_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "curve,fraction_added,utility")?;
        for c in &self.addition_curves {
            for (f, u) in c.fractions_added.iter().zip(&c.utility) {
                writeln!(writer, "{},{f},{u}", c.label)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingStudy {
    pub reports: Vec<PricingReport>,
    pub mean_rank_correlation: f64,
    /// Mean APE over seeds; absent if any seed's APE is undefined.
    pub mean_ape: Option<f64>,
}

impl PricingStudy {
    pub fn from_reports(reports: Vec<PricingReport>) -> Self {
        let n = reports.len() as f64;
        let mean_rank_correlation = reports.iter().map(|r| r.rank_correlation).sum::<f64>() / n;
        let mean_ape = reports.iter().map(|r| r.ape).sum::<Option<f64>>().map(|s| s / n);
        Self {
            reports,
            mean_rank_correlation,
            mean_ape,
        }
    }
}

/// Absolute percentage error of the buyer's realized total against the
/// seller's listed total.
pub fn absolute_percentage_error(val: &[f64], sh: &[f64]) -> Result<f64> {
    if val.len() != sh.len() {
        return Err(Error::LengthMismatch(val.len(), sh.len()));
    }
    let listed = order_free_sum(val);
    if listed.is_nan() || listed <= 0.0 {
        return Err(Error::ApeUndefined(listed));
    }
    Ok((listed - order_free_sum(sh)).abs() / listed)
}

/// Sum taken in ascending order so that it does not depend on input order.
fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Seller values `S` by distributional value on `seller_db`; the buyer values
/// `S` by TMC data Shapley on `B ∪ S`. One report per seed; `U` is built once
/// from `seller_db` and shared by both parties.
pub fn pricing_case_study(
    seller_db: &Dataset,
    buyer_b: &Dataset,
    sold_s: &Dataset,
    builder: &(dyn Fn(&Dataset) -> Result<Box<dyn Potential>> + Sync),
    m: usize,
    seeds: &[u64],
    config: &PricingConfig,
) -> Result<PricingStudy> {
    if buyer_b.len() != m || sold_s.len() != m {
        return Err(Error::InvalidConfig(format!(
            "pricing needs |B| = |S| = m = {m}, got |B| = {} and |S| = {}",
            buyer_b.len(),
            sold_s.len()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    if config.steps < 2 {
        return Err(Error::InvalidConfig(format!(
            "steps must be at least 2, got {}",
            config.steps
        )));
    }
    let union = buyer_b.concat(sold_s)?;
    let potential = builder(seller_db)?;
    let reports = seeds
        .iter()
        .map(|&seed| price_once(seller_db, buyer_b, sold_s, &union, potential.as_ref(), seed, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(PricingStudy::from_reports(reports))
}

fn price_once(
    seller_db: &Dataset,
    buyer_b: &Dataset,
    sold_s: &Dataset,
    union: &Dataset,
    potential: &dyn Potential,
    seed: u64,
    config: &PricingConfig,
) -> Result<PricingReport> {
    let horizon = config.horizon.unwrap_or(union.len());
    let est_cfg = EstimatorConfig::new(
        horizon,
        config.seller_t_max,
        WeightSchedule::new(horizon, config.seller_schedule)?,
        seed,
    )
    .with_window(config.window)
    .with_threshold(config.threshold);
    let seller = fast_d_shapley(sold_s, seller_db, potential, &est_cfg, 1.0, None)?;

    let tmc_cfg = TmcConfig::new(config.buyer_permutations, seed)
        .with_tolerance(config.truncation_tolerance)
        .with_window(config.window)
        .with_threshold(config.threshold);
    let buyer = tmc_shapley(union, potential, &tmc_cfg)?;

    let ids: Vec<u64> = sold_s.iter().map(|p| p.id).collect();
    let val = seller.table.values_for(&ids)?;
    let sh = buyer.values_for(&ids)?;
    let (ape, ape_error) = match absolute_percentage_error(&val, &sh) {
        Ok(a) => (Some(a), None),
        Err(e @ Error::ApeUndefined(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let val_pairs: Vec<(u64, f64)> = ids.iter().copied().zip(val.iter().copied()).collect();
    let sh_pairs: Vec<(u64, f64)> = ids.iter().copied().zip(sh.iter().copied()).collect();
    let curves = [
        ("by_val", order_ids(&val_pairs, Ordering::ByValueDesc)),
        ("by_sh", order_ids(&sh_pairs, Ordering::ByValueDesc)),
        ("random", order_ids(&val_pairs, Ordering::Random { seed })),
    ]
    .into_iter()
    .map(|(label, order)| addition_curve(label, buyer_b, sold_s, &order, potential, config.steps))
    .collect();

    Ok(PricingReport {
        seed,
        horizon,
        rank_correlation: spearman(&val, &sh)?,
        ape,
        ape_error,
        total_val: order_free_sum(&val),
        total_sh: order_free_sum(&sh),
        points: ids
            .iter()
            .zip(val.iter().zip(&sh))
            .map(|(&id, (&v, &s))| PricedPoint { id, val: v, sh: s })
            .collect(),
        addition_curves: curves,
    })
}

fn addition_curve(
    label: &str,
    buyer_b: &Dataset,
    sold_s: &Dataset,
    order: &[u64],
    potential: &dyn Potential,
    steps: usize,
) -> AdditionCurve {
    let ordered: Vec<&DataPoint> = order.iter().map(|&id| sold_s.find(id).expect("id from S")).collect();
    let cuts = batch_boundaries(ordered.len(), steps);
    let utility = cuts
        .par_iter()
        .map(|&c| {
            let mut set = buyer_b.refs();
            set.extend_from_slice(&ordered[..c]);
            potential.evaluate(&set)
        })
        .collect();
    AdditionCurve {
        label: label.to_string(),
        fractions_added: cuts.iter().map(|&c| c as f64 / ordered.len() as f64).collect(),
        utility,
    }
}

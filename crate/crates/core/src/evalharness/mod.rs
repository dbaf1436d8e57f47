//! Experiment drivers: point removal, cost against recovery, and pricing.

mod pricing;
mod removal;
mod speedup;
pub mod stats;

pub use pricing::{
    absolute_percentage_error, pricing_case_study, AdditionCurve, PricedPoint, PricingConfig, PricingReport,
    PricingStudy,
};
pub use removal::{order_ids, point_removal_experiment, Ordering, RemovalCurve};
pub use speedup::{speedup_recovery_experiment, write_speedup_csv, SpeedSetting, SpeedupPoint};
pub use stats::spearman;

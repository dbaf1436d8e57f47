//! TOML run configuration.
//!
//! ```toml
//! [data]
//! train_csv = "train.csv"     # or a [data.synth] recipe
//! test_csv = "test.csv"       # scored by accuracy potentials
//! valuate_csv = "z.csv"       # points to value; defaults to the train set
//! standardize = false         # fit on train, apply to every set
//! label = "auto"              # auto | categorical | real
//!
//! [potential]
//! name = "logistic"           # constant | mean | logistic | knn | ridge
//! lr = 0.1
//!
//! [estimator]
//! m = 50
//! t_max = 1000
//! schedule = { kind = "inverse_power", b = 1.0 }
//! subsample_p = 1.0
//! window = 100
//! threshold = 0.01
//! seed = 0
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! Any key can be overridden with `--set section.key=value`.

use std::path::{Path, PathBuf};

use distshap::data::LabelHint;
use distshap::estimator::{EstimatorConfig, ScheduleKind, WeightSchedule};
use distshap::evalharness::PricingConfig;
use distshap::interpolate::InterpolatorConfig;
use distshap::potentials::PotentialSpec;
use distshap::synth::{self, Shift};
use distshap::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub potential: Option<PotentialSpec>,
    pub estimator: EstimatorSection,
    pub output: OutputSection,
    pub pricing: Option<PricingSection>,
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub valuate_csv: Option<PathBuf>,
    pub standardize: bool,
    pub label: LabelHint,
    pub synth: Option<SynthRecipe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Two Gaussian classes.
    Blobs,
    /// Linear-Gaussian regression.
    Linear,
    /// Unlabeled standard normal cloud.
    Normal,
}

/// Generator family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthShape {
    pub kind: SynthKind,
    pub dim: usize,
    pub separation: f64,
    pub std: f64,
    pub noise: f64,
}

impl SynthShape {
    pub fn generate(&self, n: usize, seed: u64) -> Dataset {
        match self.kind {
            SynthKind::Blobs => synth::two_blobs(n, self.dim, self.separation, self.std, seed),
            SynthKind::Linear => synth::linear_gaussian(n, self.dim, self.noise, seed),
            SynthKind::Normal => synth::standard_normal(n, self.dim, seed),
        }
    }

    pub fn validate(&self, field: &str) -> CliResult<()> {
        if self.dim == 0 {
            return Err(CliError::config(&format!("{field}.dim"), "must be at least 1"));
        }
        if !(self.std > 0.0 && self.noise >= 0.0) {
            return Err(CliError::config(field, "std must be positive and noise non-negative"));
        }
        Ok(())
    }
}

fn default_dim() -> usize {
    2
}
fn default_separation() -> f64 {
    2.0
}
fn default_std() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    0.3
}

/// Seeded synthetic train, test and valuation sets. The test set uses
/// `seed + 1` and ids from 1 000 000; the valuation set uses `seed + 2` and
/// ids from 2 000 000.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRecipe {
    pub kind: SynthKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "default_std")]
    pub std: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    pub n_train: usize,
    #[serde(default)]
    pub n_test: usize,
    /// 0 values the train set itself.
    #[serde(default)]
    pub n_valuate: usize,
    #[serde(default)]
    pub seed: u64,
    /// Share of train labels flipped (blobs only).
    #[serde(default)]
    pub flip_fraction: f64,
}

macro_rules! impl_shape {
    ($t:ty) => {
        impl $t {
            pub fn shape(&self) -> SynthShape {
                SynthShape {
                    kind: self.kind,
                    dim: self.dim,
                    separation: self.separation,
                    std: self.std,
                    noise: self.noise,
                }
            }
        }
    };
}

impl_shape!(SynthRecipe);
impl_shape!(PricingSynth);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub m: usize,
    pub t_max: usize,
    pub schedule: ScheduleKind,
    pub subsample_p: f64,
    pub window: usize,
    pub threshold: f64,
    pub seed: u64,
    pub interpolation: InterpolatorConfig,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            m: 50,
            t_max: 1000,
            schedule: ScheduleKind::Uniform,
            subsample_p: 1.0,
            window: distshap::value::DEFAULT_WINDOW,
            threshold: distshap::estimator::DEFAULT_THRESHOLD,
            seed: 0,
            interpolation: InterpolatorConfig::default(),
        }
    }
}

impl EstimatorSection {
    pub fn to_config(&self) -> CliResult<EstimatorConfig> {
        if self.m == 0 {
            return Err(CliError::config("estimator.m", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(CliError::config("estimator.window", "must be at least 1"));
        }
        if self.t_max < self.window {
            return Err(CliError::config(
                "estimator.t_max",
                format!("must be at least estimator.window ({})", self.window),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(CliError::config(
                "estimator.threshold",
                format!("must lie in (0, 1), got {}", self.threshold),
            ));
        }
        if !(self.subsample_p > 0.0 && self.subsample_p <= 1.0) {
            return Err(CliError::config(
                "estimator.subsample_p",
                format!("must lie in (0, 1], got {}", self.subsample_p),
            ));
        }
        if self.interpolation.k_neighbors == 0 {
            return Err(CliError::config(
                "estimator.interpolation.k_neighbors",
                "must be at least 1",
            ));
        }
        let schedule =
            WeightSchedule::new(self.m, self.schedule).map_err(|e| CliError::config("estimator.schedule", e))?;
        let cfg = EstimatorConfig::new(self.m, self.t_max, schedule, self.seed)
            .with_window(self.window)
            .with_threshold(self.threshold);
        cfg.validate().map_err(|e| CliError::config("estimator", e))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingSection {
    /// Size of both the buyer's set and the sold set.
    pub m: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub seller_csv: Option<PathBuf>,
    pub buyer_csv: Option<PathBuf>,
    pub sold_csv: Option<PathBuf>,
    pub synth: Option<PricingSynth>,
    #[serde(default)]
    pub settings: PricingConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Synthetic seller database, buyer set, sold set and test set, seeded with
/// `seed`, `seed + 1`, `seed + 2` and `seed + 3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingSynth {
    pub kind: SynthKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "default_std")]
    pub std: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    pub seller_size: usize,
    #[serde(default)]
    pub n_test: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub buyer_shift: Shift,
    #[serde(default)]
    pub sold_shift: Shift,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Defaults to the bundled six-point fixture.
    pub fixture_csv: Option<PathBuf>,
    pub instances: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            fixture_csv: None,
            instances: 60,
            seed: 0,
            tolerance: 1e-9,
        }
    }
}

/// A parsed config plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let (mut table, base_dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                let table: toml::Table = text
                    .parse()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (table, dir)
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: RunConfig = toml::from_str(&table.to_string()).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { config, base_dir })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Resolves a path that must exist, naming `field` otherwise.
    pub fn existing(&self, field: &str, path: &Path) -> CliResult<PathBuf> {
        let p = self.resolve(path);
        if !p.is_file() {
            return Err(CliError::config(field, format!("file not found: {}", p.display())));
        }
        Ok(p)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.dir)
    }

    pub fn potential(&self) -> CliResult<&PotentialSpec> {
        self.config
            .potential
            .as_ref()
            .ok_or_else(|| CliError::config("potential", "section is required"))
    }
}

/// Applies `a.b.c=value`. The value is parsed as a TOML value and falls back
/// to a plain string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {item:?} is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} is malformed")));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut cursor = table;
    for part in path {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override key {key:?}: {part} is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Train, optional test and valuation sets for one run.
pub struct RunData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub valuate: Dataset,
}

impl LoadedConfig {
    pub fn run_data(&self) -> CliResult<RunData> {
        let data = &self.config.data;
        let (train, test, valuate) = match (&data.train_csv, &data.synth) {
            (Some(_), Some(_)) => return Err(CliError::config("data", "set either train_csv or synth, not both")),
            (None, None) => return Err(CliError::config("data", "train_csv or synth is required")),
            (Some(train_path), None) => {
                let train_path = self.existing("data.train_csv", train_path)?;
                let test_path = data
                    .test_csv
                    .as_ref()
                    .map(|p| self.existing("data.test_csv", p))
                    .transpose()?;
                let valuate_path = data
                    .valuate_csv
                    .as_ref()
                    .map(|p| self.existing("data.valuate_csv", p))
                    .transpose()?;
                let read = |p: &Path| Dataset::read_csv_path(p, data.label).map_err(CliError::from);
                let train = read(&train_path)?;
                let test = test_path.as_deref().map(read).transpose()?;
                let valuate = valuate_path.as_deref().map(read).transpose()?;
                (train, test, valuate)
            }
            (None, Some(recipe)) => {
                if data.test_csv.is_some() || data.valuate_csv.is_some() {
                    return Err(CliError::config(
                        "data",
                        "test_csv and valuate_csv cannot be combined with synth",
                    ));
                }
                recipe.shape().validate("data.synth")?;
                if recipe.n_train == 0 {
                    return Err(CliError::config("data.synth.n_train", "must be at least 1"));
                }
                let mut train = recipe.shape().generate(recipe.n_train, recipe.seed);
                if recipe.flip_fraction > 0.0 {
                    if recipe.shape().kind != SynthKind::Blobs {
                        return Err(CliError::config("data.synth.flip_fraction", "only applies to blobs"));
                    }
                    train = synth::flip_labels(&train, recipe.flip_fraction, recipe.seed)
                        .map_err(|e| CliError::config("data.synth.flip_fraction", e))?
                        .0;
                }
                let test = (recipe.n_test > 0).then(|| {
                    recipe
                        .shape()
                        .generate(recipe.n_test, recipe.seed + 1)
                        .renumbered(1_000_000)
                });
                let valuate = (recipe.n_valuate > 0).then(|| {
                    recipe
                        .shape()
                        .generate(recipe.n_valuate, recipe.seed + 2)
                        .renumbered(2_000_000)
                });
                (train, test, valuate)
            }
        };
        let (train, test, valuate) = if data.standardize {
            let (train, st) = distshap::standardize(&train)?;
            (train, test.map(|d| st.apply(&d)), valuate.map(|d| st.apply(&d)))
        } else {
            (train, test, valuate)
        };
        for (name, set) in [("test", &test), ("valuate", &valuate)] {
            if let Some(d) = set {
                if d.dimension() != train.dimension() {
                    return Err(CliError::Data(format!(
                        "{name} set has {} features, train set has {}",
                        d.dimension(),
                        train.dimension()
                    )));
                }
            }
        }
        let valuate = valuate.unwrap_or_else(|| train.clone());
        Ok(RunData { train, test, valuate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_values_and_create_sections() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "estimator.seed=7").unwrap();
        apply_override(&mut t, "potential.name=mean").unwrap();
        apply_override(&mut t, "estimator.schedule={ kind = \"inverse_power\", b = 1.0 }").unwrap();
        let cfg: RunConfig = toml::from_str(&t.to_string()).unwrap();
        assert_eq!(cfg.estimator.seed, 7);
        assert_eq!(cfg.potential, Some(PotentialSpec::Mean { clip: false }));
        assert_eq!(cfg.estimator.schedule, ScheduleKind::InversePower { b: 1.0 });
        assert!(apply_override(&mut t, "no_equals").is_err());
        assert!(apply_override(&mut t, "estimator.seed.x=1").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[estimator]\nseeed = 3\n").unwrap_err();
        assert!(err.to_string().contains("seeed"));
    }

    #[test]
    fn threshold_error_names_field() {
        let mut cfg = RunConfig::default();
        cfg.estimator.threshold = 0.0;
        let err = cfg.estimator.to_config().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("estimator.threshold"));
    }
}

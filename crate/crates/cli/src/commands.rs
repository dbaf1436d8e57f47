use std::path::Path;

use distshap::estimator::fast_d_shapley;
use distshap::evalharness::{point_removal_experiment, pricing_case_study, Ordering, PricingStudy};
use distshap::exact::{
    axiom_suite, exact_data_shapley_all, permutation_shapley_all, AxiomCheck, ExactConfig, PERMUTATION_CAP,
};
use distshap::potentials::PotentialSpec;
use distshap::{Dataset, Potential, ValueTable};
use serde::Serialize;

use crate::config::{LoadedConfig, PricingSection};
use crate::error::{CliError, CliResult};
use crate::output::{write_json, write_with, Provenance};

const FIXTURE: &str = include_str!("../fixtures/six_points.csv");

fn build_potential(spec: &PotentialSpec, db: &Dataset, test: Option<&Dataset>) -> CliResult<Box<dyn Potential>> {
    if spec.needs_test_set() && test.is_none() {
        return Err(CliError::config("data.test_csv", "required by accuracy potentials"));
    }
    Ok(spec.build(db, test)?)
}

fn output_dir(cfg: &LoadedConfig) -> CliResult<std::path::PathBuf> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct EstimateSummary {
    points: usize,
    estimated: usize,
    iterations: u64,
    converged: bool,
    mean_abs_value: f64,
    total_value: f64,
    training_cost: u64,
    warnings: Vec<String>,
}

pub fn estimate(cfg: &LoadedConfig) -> CliResult<()> {
    let est = cfg.config.estimator.to_config()?;
    let spec = cfg.potential()?;
    let data = cfg.run_data()?;
    let u = build_potential(spec, &data.train, data.test.as_ref())?;
    let sec = &cfg.config.estimator;
    let run = fast_d_shapley(
        &data.valuate,
        &data.train,
        u.as_ref(),
        &est,
        sec.subsample_p,
        Some(&sec.interpolation),
    )?;

    let table = &run.table;
    let values = table.values();
    let summary = EstimateSummary {
        points: table.len(),
        estimated: run.estimated_ids.len(),
        iterations: table.iterations,
        converged: table.converged,
        mean_abs_value: values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64,
        total_value: table.total(),
        training_cost: run.training_cost,
        warnings: run.warnings.clone(),
    };
    let prov = Provenance::new("estimate", &cfg.config, &(), est.seed);
    let dir = output_dir(cfg)?;
    let csv = prov.path(&dir, ".csv");
    write_with(&csv, |b| table.write_csv(b))?;
    write_json(&prov.path(&dir, ".json"), &prov, &cfg.config, &summary)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "valued {} points: T={} converged={} mean|val|={:.6e}",
        summary.points, summary.iterations, summary.converged, summary.mean_abs_value
    );
    println!("wrote {}", csv.display());
    Ok(())
}

#[derive(Serialize)]
struct FixtureValue {
    id: u64,
    sh: f64,
}

#[derive(Serialize)]
struct VerifySummary {
    passed: bool,
    fixture_points: usize,
    fixture_values: Vec<FixtureValue>,
    checks: Vec<AxiomCheck>,
}

/// Largest `max_n` accepted; enumeration cost doubles per point.
const VERIFY_MAX_N: usize = 12;

pub fn verify(cfg: &LoadedConfig, max_n: usize, tolerance_override: Option<f64>) -> CliResult<()> {
    let sec = &cfg.config.verify;
    if max_n == 0 || max_n > VERIFY_MAX_N {
        return Err(CliError::config(
            "--max-n",
            format!("must lie in 1..={VERIFY_MAX_N}, got {max_n}"),
        ));
    }
    let tolerance = match tolerance_override {
        Some(t) => t,
        None if sec.tolerance >= 0.0 => sec.tolerance,
        None => return Err(CliError::config("verify.tolerance", "must be non-negative")),
    };
    let fixture = match &sec.fixture_csv {
        Some(p) => Dataset::read_csv_path(cfg.existing("verify.fixture_csv", p)?, cfg.config.data.label)?,
        None => Dataset::read_csv(FIXTURE.as_bytes(), cfg.config.data.label)?,
    };
    if fixture.len() > max_n {
        return Err(CliError::config(
            "verify.fixture_csv",
            format!("fixture has {} points, more than --max-n {max_n}", fixture.len()),
        ));
    }
    let test = cfg
        .config
        .data
        .test_csv
        .as_ref()
        .map(|p| cfg.existing("data.test_csv", p))
        .transpose()?
        .map(|p| Dataset::read_csv_path(p, cfg.config.data.label))
        .transpose()?;
    let spec = cfg
        .config
        .potential
        .clone()
        .unwrap_or(PotentialSpec::Mean { clip: false });
    let u = build_potential(&spec, &fixture, test.as_ref())?;

    let exact_cfg = ExactConfig {
        max_n,
        ..ExactConfig::default()
    };
    let sh = exact_data_shapley_all(&fixture, u.as_ref(), &exact_cfg)?;
    let n = fixture.len();
    let check = |name: &str, instances: usize, max_error: f64| AxiomCheck {
        name: name.to_string(),
        instances,
        max_error,
        tolerance,
        passed: max_error <= tolerance,
    };

    let gain = u.evaluate(&fixture.refs()) - u.empty_value();
    let mut checks = vec![check("fixture_efficiency", 1, (sh.iter().sum::<f64>() - gain).abs())];
    let pts = fixture.points();
    let mut twins = 0;
    let mut twin_gap: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if pts[i].features == pts[j].features && pts[i].label == pts[j].label {
                twins += 1;
                twin_gap = twin_gap.max((sh[i] - sh[j]).abs());
            }
        }
    }
    checks.push(check("fixture_symmetry", twins, twin_gap));
    if n <= PERMUTATION_CAP {
        let perm = permutation_shapley_all(&fixture, u.as_ref())?;
        let gap = perm.iter().zip(&sh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        checks.push(check("fixture_permutation_form", 1, gap));
    }
    if sec.instances > 0 {
        checks.extend(axiom_suite(sec.instances, sec.seed, tolerance)?.checks);
    }

    let summary = VerifySummary {
        passed: checks.iter().all(|c| c.passed),
        fixture_points: n,
        fixture_values: pts
            .iter()
            .zip(&sh)
            .map(|(p, &sh)| FixtureValue { id: p.id, sh })
            .collect(),
        checks,
    };
    let prov = Provenance::new("verify", &cfg.config, &(max_n, tolerance), sec.seed);
    let dir = output_dir(cfg)?;
    write_json(&prov.path(&dir, ".json"), &prov, &cfg.config, &summary)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    if summary.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = summary
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Check(failed.join(", ")))
    }
}

#[derive(Serialize)]
struct RemovalSummary {
    ordering: String,
    steps: usize,
    area_under_curve: f64,
    points: usize,
}

pub fn remove(cfg: &LoadedConfig, values: &Path, steps: usize, ordering: &str) -> CliResult<()> {
    let ordering: Ordering = ordering.parse().map_err(|e| CliError::config("--ordering", e))?;
    if steps < 2 {
        return Err(CliError::config("--steps", format!("must be at least 2, got {steps}")));
    }
    let values_text = std::fs::read_to_string(values)
        .map_err(|e| CliError::config("--values", format!("cannot read {}: {e}", values.display())))?;
    let table = ValueTable::read_csv(values_text.as_bytes())?;
    let spec = cfg.potential()?;
    let data = cfg.run_data()?;
    let u = build_potential(spec, &data.train, data.test.as_ref())?;
    let curve = point_removal_experiment(&data.train, &table, u.as_ref(), steps, ordering)?;

    let seed = match ordering {
        Ordering::Random { seed } => seed,
        _ => 0,
    };
    let prov = Provenance::new("remove", &cfg.config, &(&values_text, steps, ordering.name()), seed);
    let dir = output_dir(cfg)?;
    let csv = prov.path(&dir, ".csv");
    write_with(&csv, |b| curve.write_csv(b))?;
    let summary = RemovalSummary {
        ordering: ordering.name(),
        steps,
        area_under_curve: curve.area_under_curve(),
        points: data.train.len(),
    };
    write_json(&prov.path(&dir, ".json"), &prov, &cfg.config, &summary)?;
    println!("{}: area under curve {:.6}", summary.ordering, summary.area_under_curve);
    println!("wrote {}", csv.display());
    Ok(())
}

/// Seller database, buyer set, sold set and optional test set. Buyer and sold
/// ids start at 1 000 000 and 2 000 000 so the sets never collide.
fn pricing_data(cfg: &LoadedConfig, sec: &PricingSection) -> CliResult<(Dataset, Dataset, Dataset, Option<Dataset>)> {
    let csvs = [&sec.seller_csv, &sec.buyer_csv, &sec.sold_csv];
    match (&sec.synth, csvs.iter().any(|p| p.is_some())) {
        (Some(_), true) => Err(CliError::config(
            "pricing",
            "set either the CSV paths or synth, not both",
        )),
        (None, false) => Err(CliError::config(
            "pricing",
            "seller_csv, buyer_csv and sold_csv or synth are required",
        )),
        (None, true) => {
            let hint = cfg.config.data.label;
            let read = |field: &str, p: &Option<std::path::PathBuf>| -> CliResult<Dataset> {
                let p = p.as_ref().ok_or_else(|| CliError::config(field, "is required"))?;
                Ok(Dataset::read_csv_path(cfg.existing(field, p)?, hint)?)
            };
            let seller = read("pricing.seller_csv", &sec.seller_csv)?;
            let buyer = read("pricing.buyer_csv", &sec.buyer_csv)?.renumbered(1_000_000);
            let sold = read("pricing.sold_csv", &sec.sold_csv)?.renumbered(2_000_000);
            let test = match &cfg.config.data.test_csv {
                Some(p) => Some(Dataset::read_csv_path(cfg.existing("data.test_csv", p)?, hint)?),
                None => None,
            };
            Ok((seller, buyer, sold, test))
        }
        (Some(s), false) => {
            let shape = s.shape();
            shape.validate("pricing.synth")?;
            if s.seller_size == 0 {
                return Err(CliError::config("pricing.synth.seller_size", "must be at least 1"));
            }
            let seller = shape.generate(s.seller_size, s.seed);
            let buyer = s
                .buyer_shift
                .apply(&shape.generate(sec.m, s.seed + 1).renumbered(1_000_000), s.seed + 1)?;
            let sold = s
                .sold_shift
                .apply(&shape.generate(sec.m, s.seed + 2).renumbered(2_000_000), s.seed + 2)?;
            let test = (s.n_test > 0).then(|| shape.generate(s.n_test, s.seed + 3).renumbered(3_000_000));
            Ok((seller, buyer, sold, test))
        }
    }
}

#[derive(Serialize)]
struct PricingSummary<'a> {
    mean_rank_correlation: f64,
    mean_ape: Option<f64>,
    study: &'a PricingStudy,
}

pub fn price(cfg: &LoadedConfig) -> CliResult<()> {
    let sec = cfg
        .config
        .pricing
        .as_ref()
        .ok_or_else(|| CliError::config("pricing", "section is required"))?;
    if sec.m == 0 {
        return Err(CliError::config("pricing.m", "must be at least 1"));
    }
    if sec.seeds.is_empty() {
        return Err(CliError::config("pricing.seeds", "at least one seed is required"));
    }
    let spec = cfg.potential()?;
    let (seller, buyer, sold, test) = pricing_data(cfg, sec)?;
    if spec.needs_test_set() && test.is_none() {
        return Err(CliError::config("data.test_csv", "required by accuracy potentials"));
    }
    let builder = |db: &Dataset| spec.build(db, test.as_ref());
    let study = pricing_case_study(&seller, &buyer, &sold, &builder, sec.m, &sec.seeds, &sec.settings)?;

    let dir = output_dir(cfg)?;
    for report in &study.reports {
        let prov = Provenance::new("price", &cfg.config, &(), report.seed);
        write_with(&prov.path(&dir, "-points.csv"), |b| report.write_points_csv(b))?;
        write_with(&prov.path(&dir, "-curves.csv"), |b| report.write_curves_csv(b))?;
        if let Some(e) = &report.ape_error {
            eprintln!("warning: seed {}: {e}", report.seed);
        }
    }
    let prov = Provenance::new("price", &cfg.config, &(), sec.seeds[0]);
    let summary = PricingSummary {
        mean_rank_correlation: study.mean_rank_correlation,
        mean_ape: study.mean_ape,
        study: &study,
    };
    let json = prov.path(&dir, ".json");
    write_json(&json, &prov, &cfg.config, &summary)?;
    let ape = study.mean_ape.map_or("undefined".to_string(), |a| format!("{a:.4}"));
    println!(
        "{} seeds: mean Spearman {:.4}, mean APE {ape}",
        study.reports.len(),
        study.mean_rank_correlation
    );
    println!("wrote {}", json.display());
    Ok(())
}

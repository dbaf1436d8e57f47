//! Python bindings: datasets, built-in potentials, the estimators, exact
//! oracles and the evaluation statistics.

use std::collections::BTreeMap;

use distshap::estimator::{self, EstimatorConfig, ScheduleKind, WeightSchedule};
use distshap::evalharness::{self, Ordering};
use distshap::exact::{self, ExactConfig};
use distshap::interpolate::InterpolatorConfig;
use distshap::potentials::{MeanPotential, PotentialSpec};
use distshap::tmc::{self, TmcConfig};
use distshap::{synth, Dataset, Label, LabelKind, ValueTable};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: distshap::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A set of points with ids `0..n` in row order.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// `labels` are class indices when `categorical`, real targets otherwise.
    #[new]
    #[pyo3(signature = (features, labels=None, categorical=true))]
    fn new(features: Vec<Vec<f64>>, labels: Option<Vec<f64>>, categorical: bool) -> PyResult<Self> {
        let d = features.first().map_or(0, Vec::len);
        let (kind, labels): (LabelKind, Vec<Option<Label>>) = match labels {
            None => (LabelKind::None, vec![None; features.len()]),
            Some(ls) if categorical => {
                let classes = ls
                    .iter()
                    .map(|&v| {
                        (v >= 0.0 && v.fract() == 0.0).then_some(v as u32).ok_or_else(|| {
                            PyValueError::new_err(format!("class label {v} is not a non-negative integer"))
                        })
                    })
                    .collect::<PyResult<Vec<u32>>>()?;
                let n_classes = classes.iter().max().map_or(0, |&c| c + 1);
                (
                    LabelKind::Categorical { n_classes },
                    classes.into_iter().map(|c| Some(Label::Class(c))).collect(),
                )
            }
            Some(ls) => (LabelKind::Real, ls.into_iter().map(|v| Some(Label::Real(v))).collect()),
        };
        if labels.len() != features.len() {
            return Err(PyValueError::new_err("labels and features differ in length"));
        }
        let inner = Dataset::from_rows(d, kind, features.into_iter().zip(labels)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let inner = Dataset::read_csv_path(path, Default::default()).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv_path(path).map_err(py_err)
    }

    /// Same points with ids renumbered from `offset`.
    fn renumbered(&self, offset: u64) -> Self {
        Self {
            inner: self.inner.renumbered(offset),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn ids(&self) -> Vec<u64> {
        self.inner.iter().map(|p| p.id).collect()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.iter().map(|p| p.features.clone()).collect()
    }
}

/// A built-in potential bound to its database and test set.
#[pyclass(name = "Potential", frozen)]
struct PyPotential {
    inner: Box<dyn distshap::Potential>,
}

#[pymethods]
impl PyPotential {
    /// `name` is one of constant, mean, logistic, knn, ridge; `params` holds
    /// its hyperparameters.
    #[new]
    #[pyo3(signature = (name, db, test=None, params=None))]
    fn new(
        name: &str,
        db: &PyDataset,
        test: Option<&PyDataset>,
        params: Option<BTreeMap<String, f64>>,
    ) -> PyResult<Self> {
        let mut spec = serde_json::Map::new();
        spec.insert("name".into(), name.into());
        for (k, v) in params.unwrap_or_default() {
            let value = if v.fract() == 0.0 && v >= 0.0 && v < u64::MAX as f64 {
                serde_json::Value::from(v as u64)
            } else {
                serde_json::Value::from(v)
            };
            spec.insert(k, value);
        }
        let spec: PotentialSpec =
            serde_json::from_value(spec.into()).map_err(|e| PyValueError::new_err(format!("potential: {e}")))?;
        let inner = spec.build(&db.inner, test.map(|t| &t.inner)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    /// `U` on the given points.
    fn evaluate(&self, data: &PyDataset) -> f64 {
        self.inner.evaluate(&data.inner.refs())
    }
}

/// Estimated values keyed by point id.
#[pyclass(name = "ValueTable", frozen)]
struct PyValueTable {
    inner: ValueTable,
    training_cost: u64,
}

#[pymethods]
impl PyValueTable {
    fn values(&self) -> BTreeMap<u64, f64> {
        self.inner.entries.iter().map(|(&id, e)| (id, e.mean)).collect()
    }

    fn stderr(&self) -> BTreeMap<u64, f64> {
        self.inner.entries.iter().map(|(&id, e)| (id, e.stderr())).collect()
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn training_cost(&self) -> u64 {
        self.training_cost
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn schedule_kind(schedule: &str, b: Option<f64>) -> PyResult<ScheduleKind> {
    match (schedule, b) {
        ("uniform", _) => Ok(ScheduleKind::Uniform),
        ("inverse_power", Some(b)) => Ok(ScheduleKind::InversePower { b }),
        ("inverse_power", None) => Err(PyValueError::new_err("inverse_power needs b")),
        _ => Err(PyValueError::new_err(format!("unknown schedule {schedule:?}"))),
    }
}

/// Distributional values of `z` against database `db` at horizon `m`.
#[pyfunction]
#[pyo3(signature = (z, db, potential, m, t_max, seed=0, schedule="uniform", b=None, subsample_p=1.0, window=100, threshold=0.01))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    z: &PyDataset,
    db: &PyDataset,
    potential: &PyPotential,
    m: usize,
    t_max: usize,
    seed: u64,
    schedule: &str,
    b: Option<f64>,
    subsample_p: f64,
    window: usize,
    threshold: f64,
) -> PyResult<PyValueTable> {
    let sched = WeightSchedule::new(m, schedule_kind(schedule, b)?).map_err(py_err)?;
    let cfg = EstimatorConfig::new(m, t_max, sched, seed)
        .with_window(window)
        .with_threshold(threshold);
    let run = estimator::fast_d_shapley(
        &z.inner,
        &db.inner,
        potential.inner.as_ref(),
        &cfg,
        subsample_p,
        Some(&InterpolatorConfig::default()),
    )
    .map_err(py_err)?;
    Ok(PyValueTable {
        inner: run.table,
        training_cost: run.training_cost,
    })
}

/// Closed-form distributional value of each point in `z` under the mean
/// potential fitted to `db`.
#[pyfunction]
fn analytic_mean_values(z: &PyDataset, db: &PyDataset, m: usize) -> PyResult<Vec<f64>> {
    if m == 0 {
        return Err(PyValueError::new_err("m must be at least 1"));
    }
    let u = MeanPotential::from_database(&db.inner, false).map_err(py_err)?;
    Ok(z.inner.iter().map(|p| u.analytic_value(&p.features, m)).collect())
}

/// Exact data Shapley values by subset enumeration, in row order.
#[pyfunction]
fn exact_data_shapley(b: &PyDataset, potential: &PyPotential) -> PyResult<Vec<f64>> {
    exact::exact_data_shapley_all(&b.inner, potential.inner.as_ref(), &ExactConfig::default()).map_err(py_err)
}

/// Truncated Monte Carlo data Shapley values on a fixed dataset.
#[pyfunction]
#[pyo3(signature = (b, potential, permutations, seed=0, tolerance=0.01))]
fn tmc_shapley(
    b: &PyDataset,
    potential: &PyPotential,
    permutations: usize,
    seed: u64,
    tolerance: f64,
) -> PyResult<PyValueTable> {
    let cfg = TmcConfig::new(permutations, seed).with_tolerance(tolerance);
    let table = tmc::tmc_shapley(&b.inner, potential.inner.as_ref(), &cfg).map_err(py_err)?;
    Ok(PyValueTable {
        inner: table,
        training_cost: 0,
    })
}

/// Runs the randomized axiom checks; returns `(passed, report_json)`.
#[pyfunction]
#[pyo3(signature = (instances=60, seed=0, tolerance=1e-9))]
fn axiom_suite(instances: usize, seed: u64, tolerance: f64) -> PyResult<(bool, String)> {
    let report = exact::axiom_suite(instances, seed, tolerance).map_err(py_err)?;
    let json = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((report.passed(), json))
}

/// Removes `train` points in value order; returns `(fractions, utility)`.
#[pyfunction]
#[pyo3(signature = (train, values, potential, steps=10, ordering="desc"))]
fn point_removal(
    train: &PyDataset,
    values: &PyValueTable,
    potential: &PyPotential,
    steps: usize,
    ordering: &str,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let ordering: Ordering = ordering.parse().map_err(py_err)?;
    let curve =
        evalharness::point_removal_experiment(&train.inner, &values.inner, potential.inner.as_ref(), steps, ordering)
            .map_err(py_err)?;
    Ok((curve.fractions_removed, curve.accuracy))
}

#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    evalharness::spearman(&a, &b).map_err(py_err)
}

#[pyfunction]
fn absolute_percentage_error(val: Vec<f64>, sh: Vec<f64>) -> PyResult<f64> {
    evalharness::absolute_percentage_error(&val, &sh).map_err(py_err)
}

#[pyfunction]
fn standard_normal(n: usize, d: usize, seed: u64) -> PyDataset {
    PyDataset {
        inner: synth::standard_normal(n, d, seed),
    }
}

#[pyfunction]
#[pyo3(signature = (n, d, seed, separation=2.0, std=1.0))]
fn two_blobs(n: usize, d: usize, seed: u64, separation: f64, std: f64) -> PyDataset {
    PyDataset {
        inner: synth::two_blobs(n, d, separation, std, seed),
    }
}

#[pyfunction]
#[pyo3(signature = (n, d, seed, noise=0.3))]
fn linear_gaussian(n: usize, d: usize, seed: u64, noise: f64) -> PyDataset {
    PyDataset {
        inner: synth::linear_gaussian(n, d, noise, seed),
    }
}

#[pymodule]
fn distshap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyValueTable>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_mean_values, m)?)?;
    m.add_function(wrap_pyfunction!(exact_data_shapley, m)?)?;
    m.add_function(wrap_pyfunction!(tmc_shapley, m)?)?;
    m.add_function(wrap_pyfunction!(axiom_suite, m)?)?;
    m.add_function(wrap_pyfunction!(point_removal, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(absolute_percentage_error, m)?)?;
    m.add_function(wrap_pyfunction!(standard_normal, m)?)?;
    m.add_function(wrap_pyfunction!(two_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(linear_gaussian, m)?)?;
    Ok(())
}

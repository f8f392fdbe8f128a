//! Python bindings. Matrices cross the boundary as lists of rows of floats and
//! task indices are zero-based, as in the Rust API.

use gsmtl::bench::{self, MethodKind, MethodSpec};
use gsmtl::datagen::{self, KMeansConfig, Synthetic1Config};
use gsmtl::groupnorm::{self, GroupBallSpec, ProjectionMethod, ProjectionOptions};
use gsmtl::solver::{Acceleration, LStepMethod};
use gsmtl::{io, model};
use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

pub fn to_py_err(e: gsmtl::Error) -> PyErr {
    use gsmtl::Error as E;
    match e {
        E::Io { .. } => PyIOError::new_err(e.to_string()),
        E::NoConvergence { .. } | E::DescentViolation { .. } | E::NonFinite(_) | E::Singular(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Rows of equal length into a matrix; `cols` fixes the width of an empty list.
pub fn matrix_from_rows(rows: &[Vec<f64>], cols: Option<usize>) -> PyResult<Array2<f64>> {
    let c = rows.first().map(Vec::len).or(cols).unwrap_or(0);
    if rows.iter().any(|r| r.len() != c) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    Ok(Array2::from_shape_vec((rows.len(), c), rows.concat()).expect("shape checked"))
}

pub fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn parse_kind(kind: &str) -> PyResult<model::ProblemKind> {
    match kind {
        "regression" => Ok(model::ProblemKind::Regression),
        "classification" => Ok(model::ProblemKind::BinaryClassification),
        other => Err(PyValueError::new_err(format!(
            "kind must be 'regression' or 'classification', got '{other}'"
        ))),
    }
}

fn kind_name(kind: model::ProblemKind) -> &'static str {
    match kind {
        model::ProblemKind::Regression => "regression",
        model::ProblemKind::BinaryClassification => "classification",
    }
}

/// Task groups over `0..universe`.
#[pyclass(name = "GroupStructure", module = "gsmtl_py", frozen)]
#[derive(Clone)]
pub struct PyGroups {
    pub inner: gsmtl::GroupStructure,
}

#[pymethods]
impl PyGroups {
    #[new]
    fn new(groups: Vec<Vec<usize>>, universe: usize) -> PyResult<Self> {
        gsmtl::GroupStructure::new(groups, universe).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn singletons(universe: usize) -> PyResult<Self> {
        gsmtl::GroupStructure::singletons(universe).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn all_tasks(universe: usize) -> PyResult<Self> {
        gsmtl::GroupStructure::all(universe).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[getter]
    fn groups(&self) -> Vec<Vec<usize>> {
        self.inner.groups().to_vec()
    }

    #[getter]
    fn universe(&self) -> usize {
        self.inner.universe()
    }

    fn is_overlapping(&self) -> bool {
        self.inner.is_overlapping()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("GroupStructure({:?}, universe={})", self.inner.groups(), self.inner.universe())
    }
}

/// One design matrix and label vector per task.
#[pyclass(name = "Dataset", module = "gsmtl_py", frozen)]
#[derive(Clone)]
pub struct PyDataset {
    pub inner: model::MultiTaskDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (xs, ys, kind = "regression"))]
    fn new(xs: Vec<Vec<Vec<f64>>>, ys: Vec<Vec<f64>>, kind: &str) -> PyResult<Self> {
        if xs.len() != ys.len() {
            return Err(PyValueError::new_err("xs and ys must have one entry per task"));
        }
        let mut tasks = Vec::with_capacity(xs.len());
        for (x, y) in xs.iter().zip(ys) {
            tasks.push(model::Task { x: matrix_from_rows(x, None)?, y: Array1::from(y) });
        }
        model::MultiTaskDataset::new(tasks, parse_kind(kind)?).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, kind = "regression"))]
    fn load_csv(path: &str, kind: &str) -> PyResult<Self> {
        io::load_csv(std::path::Path::new(path), parse_kind(kind)?).map(|inner| Self { inner }).map_err(to_py_err)
    }

    fn to_csv(&self) -> String {
        io::dataset_to_csv(&self.inner)
    }

    #[getter]
    fn n_tasks(&self) -> usize {
        self.inner.n_tasks()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        kind_name(self.inner.kind())
    }

    fn task(&self, t: usize) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
        if t >= self.inner.n_tasks() {
            return Err(PyValueError::new_err(format!("task {t} out of range")));
        }
        let task = self.inner.task(t);
        Ok((matrix_to_rows(&task.x), task.y.to_vec()))
    }

    /// 60/20/20 per-task split: `(train, val, test)`.
    #[pyo3(signature = (seed = 0))]
    fn split(&self, seed: u64) -> PyResult<(PyDataset, PyDataset, PyDataset)> {
        let s = datagen::split_default(&self.inner, seed).map_err(to_py_err)?;
        Ok((PyDataset { inner: s.train }, PyDataset { inner: s.val }, PyDataset { inner: s.test }))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_tasks={}, dim={}, kind='{}')",
            self.inner.n_tasks(),
            self.inner.dim(),
            kind_name(self.inner.kind())
        )
    }
}

/// Fitted factorization `W = L S`.
#[pyclass(name = "LatentModel", module = "gsmtl_py", frozen)]
#[derive(Clone)]
pub struct PyModel {
    pub inner: model::LatentModel,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(l: Vec<Vec<f64>>, s: Vec<Vec<f64>>) -> PyResult<Self> {
        let l = matrix_from_rows(&l, None)?;
        let s = matrix_from_rows(&s, None)?;
        model::LatentModel::new(l, s).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[getter(L)]
    fn l(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.l())
    }

    #[getter(S)]
    fn s(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.s())
    }

    /// `d x T` task weights `L S`.
    fn weights(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.weights())
    }

    fn predict(&self, task: usize, x: Vec<f64>) -> PyResult<f64> {
        model::predict(&self.inner, task, Array1::from(x).view()).map_err(to_py_err)
    }

    /// Objective value with penalty weights `mu` (on S) and `lam` (on L).
    fn objective(&self, data: &PyDataset, groups: &PyGroups, mu: f64, lam: f64) -> PyResult<f64> {
        let hp = model::HyperParams::new(mu, lam, self.inner.latent_dim());
        model::objective(&self.inner, &data.inner, &groups.inner, &hp).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "LatentModel(d={}, k={}, T={})",
            self.inner.dim(),
            self.inner.latent_dim(),
            self.inner.n_tasks()
        )
    }
}

/// Summary of an alternating fit.
#[pyclass(name = "FitReport", module = "gsmtl_py", frozen, get_all)]
#[derive(Clone)]
pub struct PyReport {
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub wall_time_seconds: f64,
    pub train_error: Vec<f64>,
    pub notes: Vec<String>,
}

impl From<model::FitReport> for PyReport {
    fn from(r: model::FitReport) -> Self {
        Self {
            objective_trace: r.objective_trace,
            converged: r.converged,
            outer_iterations: r.outer_iterations,
            wall_time_seconds: r.wall_time.as_secs_f64(),
            train_error: r.train_error,
            notes: r.notes,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solver_config(
    mu: f64,
    lam: f64,
    k: usize,
    outer_tol: f64,
    outer_max_iter: usize,
    inner_tol: f64,
    inner_max_iter: usize,
    acceleration: &str,
    l_step: &str,
    projection: &str,
) -> PyResult<gsmtl::SolverConfig> {
    let hp = model::HyperParams { mu, lambda: lam, k, outer_tol, outer_max_iter, inner_tol, inner_max_iter };
    let mut cfg = gsmtl::SolverConfig::new(hp);
    cfg.acceleration = match acceleration {
        "none" => Acceleration::None,
        "momentum" => Acceleration::Momentum,
        other => return Err(PyValueError::new_err(format!("unknown acceleration '{other}'"))),
    };
    cfg.l_method = match l_step {
        "auto" => LStepMethod::Auto,
        "direct" => LStepMethod::Direct,
        "cg" | "conjugate_gradient" => LStepMethod::ConjugateGradient,
        other => return Err(PyValueError::new_err(format!("unknown l_step '{other}'"))),
    };
    cfg.projection.method = match projection {
        "dykstra" => ProjectionMethod::Dykstra,
        "averaged_cyclic" => ProjectionMethod::AveragedCyclic,
        other => return Err(PyValueError::new_err(format!("unknown projection '{other}'"))),
    };
    cfg.validate().map_err(to_py_err)?;
    Ok(cfg)
}

/// Alternating minimization from the SVD initialization.
#[pyfunction]
#[pyo3(signature = (
    data, groups, mu, lam, k,
    outer_tol = 1e-4, outer_max_iter = 100, inner_tol = 1e-8, inner_max_iter = 1000,
    acceleration = "none", l_step = "auto", projection = "dykstra",
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    data: &PyDataset,
    groups: &PyGroups,
    mu: f64,
    lam: f64,
    k: usize,
    outer_tol: f64,
    outer_max_iter: usize,
    inner_tol: f64,
    inner_max_iter: usize,
    acceleration: &str,
    l_step: &str,
    projection: &str,
) -> PyResult<(PyModel, PyReport)> {
    let cfg = solver_config(
        mu,
        lam,
        k,
        outer_tol,
        outer_max_iter,
        inner_tol,
        inner_max_iter,
        acceleration,
        l_step,
        projection,
    )?;
    let (data, groups) = (&data.inner, &groups.inner);
    let (m, r) = py.allow_threads(|| gsmtl::fit(data, groups, &cfg)).map_err(to_py_err)?;
    Ok((PyModel { inner: m }, r.into()))
}

/// Independent per-task fits, `d x T`.
#[pyfunction]
#[pyo3(signature = (data, reg = 1e-3))]
fn single_task_weights(data: &PyDataset, reg: f64) -> PyResult<Vec<Vec<f64>>> {
    gsmtl::solver::single_task_weights(&data.inner, reg).map(|w| matrix_to_rows(&w)).map_err(to_py_err)
}

/// Test error of `weights` (`d x T`): RMSE or 0/1 error depending on the dataset kind.
#[pyfunction]
fn evaluate(weights: Vec<Vec<f64>>, data: &PyDataset) -> PyResult<f64> {
    let w = matrix_from_rows(&weights, Some(data.inner.n_tasks()))?;
    let pred = bench::TaskPredictors { weights: w, model: None, report: None };
    bench::evaluate(&pred, &data.inner, data.inner.kind()).map_err(to_py_err)
}

/// Grid search over powers-of-ten style grids; returns `(mu, lambda, k, test_error)`.
#[pyfunction]
#[pyo3(signature = (method, train, val, test, mu_grid, lambda_grid, k_grid, groups = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn grid_search(
    py: Python<'_>,
    method: &str,
    train: &PyDataset,
    val: &PyDataset,
    test: &PyDataset,
    mu_grid: Vec<f64>,
    lambda_grid: Vec<f64>,
    k_grid: Vec<usize>,
    groups: Option<&PyGroups>,
    seed: u64,
) -> PyResult<(f64, f64, usize, f64)> {
    let kind = MethodKind::parse(method).ok_or_else(|| PyValueError::new_err(format!("unknown method '{method}'")))?;
    let spec = MethodSpec { kind, groups: groups.map(|g| g.inner.clone()) };
    let split = datagen::Split {
        train: train.inner.clone(),
        val: val.inner.clone(),
        test: test.inner.clone(),
        indices: Default::default(),
    };
    let grid = bench::GridSearchSpec { mu_grid, lambda_grid, k_grid: Some(k_grid) };
    let base = gsmtl::SolverConfig::default();
    let (hp, res) = py.allow_threads(|| bench::grid_search(&spec, &split, &grid, &base, seed)).map_err(to_py_err)?;
    Ok((hp.mu, hp.lambda, hp.k, res.test_error))
}

#[pyfunction]
#[pyo3(signature = (x, groups, tol = 1e-10))]
fn group_norm(x: Vec<f64>, groups: &PyGroups, tol: f64) -> PyResult<f64> {
    groupnorm::group_norm(Array1::from(x).view(), &groups.inner, tol).map(|d| d.value).map_err(to_py_err)
}

/// Proximal operator of `t * ||.||_G`.
#[pyfunction]
#[pyo3(signature = (x, groups, t, tol = 1e-12))]
fn prox_group_norm(x: Vec<f64>, groups: &PyGroups, t: f64, tol: f64) -> PyResult<Vec<f64>> {
    groupnorm::prox_group_norm(Array1::from(x).view(), &groups.inner, t, tol).map(|u| u.to_vec()).map_err(to_py_err)
}

/// Euclidean projection onto the intersection of the group balls of radius `t`.
#[pyfunction]
#[pyo3(signature = (x, groups, t, tol = 1e-12, max_sweeps = 100_000, method = "dykstra"))]
fn project_intersection(
    x: Vec<f64>,
    groups: &PyGroups,
    t: f64,
    tol: f64,
    max_sweeps: usize,
    method: &str,
) -> PyResult<Vec<f64>> {
    let method = match method {
        "dykstra" => ProjectionMethod::Dykstra,
        "averaged_cyclic" => ProjectionMethod::AveragedCyclic,
        other => return Err(PyValueError::new_err(format!("unknown projection '{other}'"))),
    };
    let spec = GroupBallSpec::new(&groups.inner, t).map_err(to_py_err)?;
    let opts = ProjectionOptions { method, tol, max_sweeps };
    groupnorm::project_intersection(Array1::from(x).view(), &spec, &opts).map(|p| p.to_vec()).map_err(to_py_err)
}

/// Planted Synthetic 1 data: `(dataset, groups, truth)`.
#[pyfunction]
#[pyo3(signature = (
    seed = 0, m = 20, g = 3, n_tasks = 10, n_per_task = 20,
    sigma = 1.0, label_noise = 1.0, k_true = 3, feature_overlap = 0,
))]
#[allow(clippy::too_many_arguments)]
fn gen_synthetic1(
    seed: u64,
    m: usize,
    g: usize,
    n_tasks: usize,
    n_per_task: usize,
    sigma: f64,
    label_noise: f64,
    k_true: usize,
    feature_overlap: usize,
) -> PyResult<(PyDataset, PyGroups, PyModel)> {
    let cfg = Synthetic1Config { m, g, n_tasks, n_per_task, sigma, label_noise, k_true, feature_overlap, seed };
    let out = datagen::gen_synthetic1(&cfg).map_err(to_py_err)?;
    Ok((PyDataset { inner: out.data }, PyGroups { inner: out.groups }, PyModel { inner: out.truth }))
}

/// Two-group classification data: `(dataset, groups, truth)`.
#[pyfunction]
#[pyo3(signature = (n_tasks = 29, d = 9, n_per_task = 50, margin = 2.0, seed = 0))]
fn gen_two_group_classification(
    n_tasks: usize,
    d: usize,
    n_per_task: usize,
    margin: f64,
    seed: u64,
) -> PyResult<(PyDataset, PyGroups, PyModel)> {
    let out = datagen::gen_two_group_classification(n_tasks, d, n_per_task, margin, seed).map_err(to_py_err)?;
    Ok((PyDataset { inner: out.data }, PyGroups { inner: out.groups }, PyModel { inner: out.truth }))
}

#[pyfunction]
#[pyo3(signature = (data, g, seed = 0))]
fn kmeans_groups(data: &PyDataset, g: usize, seed: u64) -> PyResult<PyGroups> {
    datagen::kmeans_groups(&data.inner, &KMeansConfig::new(g, seed)).map(|inner| PyGroups { inner }).map_err(to_py_err)
}

/// Mean Jaccard similarity of task supports within and across groups.
#[pyfunction]
fn support_similarity(s: Vec<Vec<f64>>, groups: &PyGroups) -> PyResult<(f64, f64)> {
    let s = matrix_from_rows(&s, Some(groups.inner.universe()))?;
    bench::support_similarity(&s, &groups.inner).map_err(to_py_err)
}

#[pymodule]
pub fn gsmtl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroups>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(single_task_weights, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(group_norm, m)?)?;
    m.add_function(wrap_pyfunction!(prox_group_norm, m)?)?;
    m.add_function(wrap_pyfunction!(project_intersection, m)?)?;
    m.add_function(wrap_pyfunction!(gen_synthetic1, m)?)?;
    m.add_function(wrap_pyfunction!(gen_two_group_classification, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans_groups, m)?)?;
    m.add_function(wrap_pyfunction!(support_similarity, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = matrix_from_rows(&rows, None).unwrap();
        assert_eq!(m.dim(), (2, 3));
        assert_eq!(m[[1, 0]], 4.0);
        assert_eq!(matrix_to_rows(&m), rows);
        assert_eq!(matrix_from_rows(&[], Some(4)).unwrap().dim(), (0, 4));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matrix_from_rows(&[vec![1.0], vec![1.0, 2.0]], None).is_err());
    }
}

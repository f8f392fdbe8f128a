//! Domain types, losses and the smooth/nonsmooth pieces of the fitting objective.
//!
//! Every task `t` predicts with `z = x' L s_t`, where `L` is the shared `d x k`
//! latent basis and `s_t` is column `t` of the `k x T` code matrix `S`. The full
//! objective is
//!
//! ```text
//! sum_t sum_i loss(y_ti, x_ti' L s_t) + mu * sum_r ||S[r, :]||_G + lambda * ||L||_F^2
//! ```
//!
//! where `||.||_G` is the latent group norm over task groups.

use std::time::Duration;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupnorm;
use crate::groups::GroupStructure;

/// Relative duality-gap target used when the objective needs the value of an
/// overlapping group norm.
pub const OBJECTIVE_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Regression,
    BinaryClassification,
}

/// One task: a design matrix `x` (`n x d`) and its labels `y` (`n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl Task {
    pub fn n_samples(&self) -> usize {
        self.y.len()
    }
}

/// A set of tasks sharing one feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskDataset {
    tasks: Vec<Task>,
    dim: usize,
    kind: ProblemKind,
}

impl MultiTaskDataset {
    pub fn new(tasks: Vec<Task>, kind: ProblemKind) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| Error::InvalidData("dataset has no tasks".into()))?;
        let dim = first.x.ncols();
        if dim == 0 {
            return Err(Error::InvalidData("feature dimension is zero".into()));
        }
        for (t, task) in tasks.iter().enumerate() {
            if task.x.ncols() != dim {
                return Err(Error::dims(
                    format!("feature count of task {}", t + 1),
                    dim,
                    task.x.ncols(),
                ));
            }
            if task.x.nrows() != task.y.len() {
                return Err(Error::dims(
                    format!("label count of task {}", t + 1),
                    task.x.nrows(),
                    task.y.len(),
                ));
            }
            if task.y.is_empty() {
                return Err(Error::InvalidData(format!("task {} has no samples", t + 1)));
            }
            if let Some(((i, _), _)) = task.x.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "features of task {}, sample {}",
                    t + 1,
                    i + 1
                )));
            }
            for (i, &y) in task.y.iter().enumerate() {
                if !y.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "label of task {}, sample {}",
                        t + 1,
                        i + 1
                    )));
                }
                if kind == ProblemKind::BinaryClassification && y != 1.0 && y != -1.0 {
                    return Err(Error::InvalidLabel {
                        task: t + 1,
                        sample: i + 1,
                        value: y,
                    });
                }
            }
        }
        Ok(Self { tasks, dim, kind })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &Task {
        &self.tasks[t]
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Shared feature count `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn total_samples(&self) -> usize {
        self.tasks.iter().map(Task::n_samples).sum()
    }

    /// Keeps the listed rows of every task (`rows[t]` indexes task `t`).
    pub fn select_rows(&self, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() != self.tasks.len() {
            return Err(Error::dims("row selection", self.tasks.len(), rows.len()));
        }
        let tasks = self
            .tasks
            .iter()
            .zip(rows)
            .map(|(task, idx)| Task {
                x: task.x.select(Axis(0), idx),
                y: task.y.select(Axis(0), idx),
            })
            .collect();
        Self::new(tasks, self.kind)
    }

    /// Reorders tasks: new task `j` is old task `order[j]`.
    pub fn reorder_tasks(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.tasks.len() {
            return Err(Error::dims("task order", self.tasks.len(), order.len()));
        }
        Self::new(
            order.iter().map(|&t| self.tasks[t].clone()).collect(),
            self.kind,
        )
    }

    /// Replaces every design matrix by `f(x)`; labels and kind are kept.
    pub fn map_features<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(ArrayView2<f64>) -> Result<Array2<f64>>,
    {
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for task in &self.tasks {
            tasks.push(Task {
                x: f(task.x.view())?,
                y: task.y.clone(),
            });
        }
        Self::new(tasks, self.kind)
    }
}

/// Factored predictor `W = L S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    l: Array2<f64>,
    s: Array2<f64>,
}

impl LatentModel {
    /// `l` is `d x k`, `s` is `k x T`; requires `k >= 1` and finite entries.
    ///
    /// Fitting additionally requires `k <= T`; the bare type does not, so that
    /// single-task problems with a full latent basis can be expressed.
    pub fn new(l: Array2<f64>, s: Array2<f64>) -> Result<Self> {
        let k = l.ncols();
        if s.nrows() != k {
            return Err(Error::dims("rows of S (latent dimension k)", k, s.nrows()));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("latent dimension k must be >= 1".into()));
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("L".into()));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("S".into()));
        }
        Ok(Self { l, s })
    }

    pub fn l(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn s(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.l, self.s)
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.l.ncols()
    }

    pub fn n_tasks(&self) -> usize {
        self.s.ncols()
    }

    /// Task weight vectors stacked as columns, `W = L S` (`d x T`).
    pub fn weights(&self) -> Array2<f64> {
        self.l.dot(&self.s)
    }

    fn check_data(&self, data: &MultiTaskDataset) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(Error::dims("feature dimension d", self.dim(), data.dim()));
        }
        if data.n_tasks() != self.n_tasks() {
            return Err(Error::dims("task count T", self.n_tasks(), data.n_tasks()));
        }
        Ok(())
    }
}

/// Regularization weights, latent dimension and iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Weight on the row group norm of `S`.
    pub mu: f64,
    /// Weight on `||L||_F^2`.
    pub lambda: f64,
    pub k: usize,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl HyperParams {
    pub fn new(mu: f64, lambda: f64, k: usize) -> Self {
        Self {
            mu,
            lambda,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be a finite value >= 0, got {}", self.mu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be a finite value >= 0, got {}",
                self.lambda
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.outer_tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if self.outer_max_iter == 0 || self.inner_max_iter == 0 {
            return Err(Error::InvalidParameter("iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            lambda: 0.0,
            k: 1,
            outer_tol: 1e-4,
            outer_max_iter: 100,
            inner_tol: 1e-8,
            inner_max_iter: 1000,
        }
    }
}

/// Outcome of an alternating fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective value at initialization followed by one entry per outer iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub wall_time: Duration,
    /// Per-task training error (RMSE or 0/1 error rate).
    pub train_error: Vec<f64>,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("objective trace is never empty")
    }
}

/// Prediction `s_t' L' x` for a single sample of task `task` (zero-based).
pub fn predict(model: &LatentModel, task: usize, x: ArrayView1<f64>) -> Result<f64> {
    if task >= model.n_tasks() {
        return Err(Error::InvalidParameter(format!(
            "task index {task} out of range for {} tasks",
            model.n_tasks()
        )));
    }
    if x.len() != model.dim() {
        return Err(Error::dims("feature vector length d", model.dim(), x.len()));
    }
    let latent = model.l.t().dot(&x);
    Ok(latent.dot(&model.s.column(task)))
}

/// Logistic transform of a classification score.
pub fn probability(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `loss(z, y)`: squared error for regression, `log(1 + exp(-y z))` for classification.
pub fn loss_value(kind: ProblemKind, z: f64, y: f64) -> Result<f64> {
    if kind == ProblemKind::BinaryClassification && y != 1.0 && y != -1.0 {
        return Err(Error::InvalidLabel {
            task: 0,
            sample: 0,
            value: y,
        });
    }
    Ok(loss_unchecked(kind, z, y))
}

#[inline]
pub(crate) fn loss_unchecked(kind: ProblemKind, z: f64, y: f64) -> f64 {
    match kind {
        ProblemKind::Regression => (z - y) * (z - y),
        ProblemKind::BinaryClassification => {
            let m = y * z;
            (-m.abs()).exp().ln_1p() + (-m).max(0.0)
        }
    }
}

/// Derivative of the loss in the prediction argument.
#[inline]
pub fn loss_derivative(kind: ProblemKind, z: f64, y: f64) -> f64 {
    match kind {
        ProblemKind::Regression => 2.0 * (z - y),
        // -y / (1 + exp(y z)) = -y * sigmoid(-y z)
        ProblemKind::BinaryClassification => -y * probability(-y * z),
    }
}

/// Sum of losses over every sample of every task.
pub fn data_loss(model: &LatentModel, data: &MultiTaskDataset) -> Result<f64> {
    model.check_data(data)?;
    let w = model.weights();
    Ok(data
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| task_loss(data.kind(), task, w.column(t)))
        .sum())
}

pub(crate) fn task_loss(kind: ProblemKind, task: &Task, w: ArrayView1<f64>) -> f64 {
    task.x
        .dot(&w)
        .iter()
        .zip(task.y.iter())
        .map(|(&z, &y)| loss_unchecked(kind, z, y))
        .sum()
}

/// Sum over the rows of `S` of the latent group norm of each row.
pub fn row_group_norm(s: &Array2<f64>, groups: &GroupStructure) -> Result<f64> {
    if groups.universe() != s.ncols() {
        return Err(Error::dims("group universe (task count)", s.ncols(), groups.universe()));
    }
    let mut total = 0.0;
    for row in s.rows() {
        total += groupnorm::group_norm(row, groups, OBJECTIVE_NORM_TOL)?.value;
    }
    Ok(total)
}

/// Breakdown of the objective into its three terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    pub data_loss: f64,
    pub group_penalty: f64,
    pub frobenius_penalty: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.data_loss + self.group_penalty + self.frobenius_penalty
    }
}

pub fn objective_parts(
    model: &LatentModel,
    data: &MultiTaskDataset,
    groups: &GroupStructure,
    hp: &HyperParams,
) -> Result<ObjectiveParts> {
    let data_loss = data_loss(model, data)?;
    let group_penalty = if hp.mu == 0.0 {
        // still validates the groups against S
        row_group_norm(&Array2::zeros(model.s.raw_dim()), groups)?;
        0.0
    } else {
        hp.mu * row_group_norm(&model.s, groups)?
    };
    Ok(ObjectiveParts {
        data_loss,
        group_penalty,
        frobenius_penalty: hp.lambda * model.l.iter().map(|v| v * v).sum::<f64>(),
    })
}

/// Full objective: data loss plus `mu * ||S||_{G,1} + lambda * ||L||_F^2`.
pub fn objective(
    model: &LatentModel,
    data: &MultiTaskDataset,
    groups: &GroupStructure,
    hp: &HyperParams,
) -> Result<f64> {
    Ok(objective_parts(model, data, groups, hp)?.total())
}

/// Residual derivatives `loss'(z, y)` per task, evaluated at `W = L S`.
fn loss_derivatives(model: &LatentModel, data: &MultiTaskDataset) -> Vec<Array1<f64>> {
    let w = model.weights();
    data.tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let z = task.x.dot(&w.column(t));
            Array1::from_iter(
                z.iter()
                    .zip(task.y.iter())
                    .map(|(&z, &y)| loss_derivative(data.kind(), z, y)),
            )
        })
        .collect()
}

/// Gradient of the data loss with respect to `S` (`k x T`). Column `t` only
/// depends on task `t`.
pub fn grad_s(model: &LatentModel, data: &MultiTaskDataset) -> Result<Array2<f64>> {
    model.check_data(data)?;
    let r = loss_derivatives(model, data);
    let mut g = Array2::zeros(model.s.raw_dim());
    for (t, task) in data.tasks().iter().enumerate() {
        // L' X' r
        let xr = task.x.t().dot(&r[t]);
        g.column_mut(t).assign(&model.l.t().dot(&xr));
    }
    check_finite_grad(&g, "gradient with respect to S")?;
    Ok(g)
}

/// Gradient of `data loss + lambda ||L||_F^2` with respect to `L` (`d x k`).
pub fn grad_l(model: &LatentModel, data: &MultiTaskDataset, lambda: f64) -> Result<Array2<f64>> {
    model.check_data(data)?;
    let r = loss_derivatives(model, data);
    let mut g = &model.l * (2.0 * lambda);
    for (t, task) in data.tasks().iter().enumerate() {
        let xr = task.x.t().dot(&r[t]);
        let s = model.s.column(t);
        // outer product X' r s_t'
        for (i, &a) in xr.iter().enumerate() {
            for (j, &b) in s.iter().enumerate() {
                g[[i, j]] += a * b;
            }
        }
    }
    check_finite_grad(&g, "gradient with respect to L")?;
    Ok(g)
}

fn check_finite_grad(g: &Array2<f64>, what: &str) -> Result<()> {
    if let Some(((i, j), _)) = g.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} at entry ({}, {})", i + 1, j + 1)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn one_task(x: Array2<f64>, y: Array1<f64>, kind: ProblemKind) -> MultiTaskDataset {
        MultiTaskDataset::new(vec![Task { x, y }], kind).unwrap()
    }

    #[test]
    fn predict_identity_basis() {
        let m = LatentModel::new(Array2::eye(2), array![[2.0, 0.0], [3.0, 0.0]]).unwrap();
        assert_eq!(predict(&m, 0, array![1.0, 1.0].view()).unwrap(), 5.0);
        assert_eq!(predict(&m, 1, array![7.0, -3.0].view()).unwrap(), 0.0);
    }

    #[test]
    fn predict_shared_direction() {
        let m = LatentModel::new(array![[1.0], [1.0]], array![[0.5]]).unwrap();
        assert_eq!(predict(&m, 0, array![2.0, 4.0].view()).unwrap(), 3.0);
    }

    #[test]
    fn predict_dimension_errors() {
        let m = LatentModel::new(Array2::eye(2), Array2::zeros((2, 2))).unwrap();
        match predict(&m, 0, array![1.0].view()) {
            Err(Error::DimensionMismatch { what, .. }) => assert!(what.contains('d')),
            other => panic!("unexpected {other:?}"),
        }
        assert!(predict(&m, 2, array![1.0, 1.0].view()).is_err());
    }

    #[test]
    fn losses() {
        assert_eq!(loss_value(ProblemKind::Regression, 3.0, 1.0).unwrap(), 4.0);
        let l = loss_value(ProblemKind::BinaryClassification, 0.0, 1.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        // log(1 + e^50) = 50 + log1p(e^-50)
        let l = loss_value(ProblemKind::BinaryClassification, -50.0, 1.0).unwrap();
        assert!((l - (50.0 + (-50f64).exp())).abs() < 1e-12);
        assert!(loss_value(ProblemKind::BinaryClassification, 0.0, 0.5).is_err());
        for z in [-1e6, -1e3, 0.0, 1e3, 1e6] {
            for y in [-1.0, 1.0] {
                assert!(loss_value(ProblemKind::BinaryClassification, z, y).unwrap().is_finite());
                assert!(loss_derivative(ProblemKind::BinaryClassification, z, y).is_finite());
            }
        }
    }

    #[test]
    fn logistic_derivative_formula() {
        for &(z, y) in &[(0.3, 1.0), (-2.0, -1.0), (4.0, -1.0)] {
            let expected = -y / (1.0 + (y * z as f64).exp());
            assert!((loss_derivative(ProblemKind::BinaryClassification, z, y) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn classification_labels_validated() {
        let r = MultiTaskDataset::new(
            vec![Task {
                x: array![[1.0]],
                y: array![0.0],
            }],
            ProblemKind::BinaryClassification,
        );
        assert!(matches!(r, Err(Error::InvalidLabel { .. })));
    }

    #[test]
    fn ragged_dimensions_rejected() {
        let r = MultiTaskDataset::new(
            vec![
                Task { x: array![[1.0, 2.0]], y: array![1.0] },
                Task { x: array![[1.0]], y: array![1.0] },
            ],
            ProblemKind::Regression,
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_model_objective_is_label_energy() {
        let data = MultiTaskDataset::new(
            vec![
                Task { x: array![[1.0, 2.0], [0.0, 1.0]], y: array![1.0, -2.0] },
                Task { x: array![[3.0, 1.0]], y: array![0.5] },
            ],
            ProblemKind::Regression,
        )
        .unwrap();
        let m = LatentModel::new(Array2::zeros((2, 1)), Array2::zeros((1, 2))).unwrap();
        let g = GroupStructure::singletons(2).unwrap();
        let v = objective(&m, &data, &g, &HyperParams::new(1.0, 1.0, 1)).unwrap();
        assert_eq!(v, 1.0 + 4.0 + 0.25);
    }

    #[test]
    fn scalar_objective_by_hand() {
        // d = 2, k = 1, T = 1: w = L s = (1.5, -0.5) * 2 = (3, -1); z = 3*1 + (-1)*2 = 1
        let data = one_task(array![[1.0, 2.0]], array![4.0], ProblemKind::Regression);
        let m = LatentModel::new(array![[1.5], [-0.5]], array![[2.0]]).unwrap();
        let g = GroupStructure::singletons(1).unwrap();
        let hp = HyperParams::new(0.3, 0.7, 1);
        // (1 - 4)^2 + 0.3 * |2| + 0.7 * (2.25 + 0.25)
        let expected = 9.0 + 0.6 + 0.7 * 2.5;
        assert!((objective(&m, &data, &g, &hp).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn perfect_fit_has_zero_gradients() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let l = array![[1.0], [2.0]];
        let s = array![[0.5]];
        let y = x.dot(&l.dot(&s).column(0));
        let data = one_task(x, y, ProblemKind::Regression);
        let m = LatentModel::new(l.clone(), s).unwrap();
        assert!(grad_s(&m, &data).unwrap().iter().all(|v| v.abs() < 1e-14));
        assert!(grad_l(&m, &data, 0.0).unwrap().iter().all(|v| v.abs() < 1e-14));
        let gl = grad_l(&m, &data, 0.25).unwrap();
        assert_eq!(gl, &l * 0.5);
    }

    #[test]
    fn single_sample_identity_basis_gradient() {
        let x = array![[2.0, -1.0]];
        let data = one_task(x, array![1.0], ProblemKind::Regression);
        let m = LatentModel::new(Array2::eye(2), array![[1.0], [1.0]]).unwrap();
        // z = 1, loss' = 2 (1 - 1) = 0 -> use a different s
        let m2 = LatentModel::new(Array2::eye(2), array![[1.0], [0.0]]).unwrap();
        assert!(grad_s(&m, &data).unwrap().iter().all(|v| *v == 0.0));
        // z = 2, loss' = 2, gradient = 2 * x
        let g = grad_s(&m2, &data).unwrap();
        assert_eq!(g.column(0).to_vec(), vec![4.0, -2.0]);
    }

    #[test]
    fn degenerate_models_rejected() {
        assert!(LatentModel::new(Array2::zeros((3, 0)), Array2::zeros((0, 1))).is_err());
        assert!(LatentModel::new(array![[f64::NAN]], array![[1.0]]).is_err());
    }
}

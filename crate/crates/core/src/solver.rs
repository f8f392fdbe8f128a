//! Alternating minimization: a proximal-gradient solve in `S` with `L` fixed,
//! then a ridge-type solve in `L` with `S` fixed, started from the truncated
//! SVD of independently fitted task weights.

use std::time::Instant;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupnorm::{self, ProjectionMethod, ProjectionOptions};
use crate::groups::GroupStructure;
use crate::model::{
    self, loss_derivative, loss_unchecked, FitReport, HyperParams, LatentModel, MultiTaskDataset,
    ProblemKind, Task, OBJECTIVE_NORM_TOL,
};

/// Ridge penalty used by the independent per-task fits that seed `L`.
pub const STL_INIT_REGULARIZATION: f64 = 1e-3;

/// Largest `d * k` for which the `L` normal equations are factored directly.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LStepMethod {
    /// Direct factorization when `d * k <= 2000`, conjugate gradient otherwise.
    #[default]
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceleration {
    #[default]
    None,
    /// Nesterov momentum with a monotone fallback to the plain step.
    Momentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub hp: HyperParams,
    pub backtracking_factor: f64,
    pub initial_step: f64,
    pub l_method: LStepMethod,
    pub cg_tol: f64,
    pub acceleration: Acceleration,
    /// Projector used inside the prox of overlapping groups. `tol` is scaled by
    /// the magnitude of the row being projected.
    pub projection: ProjectionOptions,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(hp: HyperParams) -> Self {
        Self {
            hp,
            backtracking_factor: 0.5,
            initial_step: 1.0,
            l_method: LStepMethod::Auto,
            cg_tol: 1e-10,
            acceleration: Acceleration::None,
            projection: ProjectionOptions {
                method: ProjectionMethod::Dykstra,
                tol: 1e-13,
                max_sweeps: 1_000_000,
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if !(self.backtracking_factor > 0.0 && self.backtracking_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.backtracking_factor
            )));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial step must be positive, got {}",
                self.initial_step
            )));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::InvalidParameter("cg_tol must be > 0".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(HyperParams::default())
    }
}

fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_change(new: &Array2<f64>, old: &Array2<f64>) -> f64 {
    let diff = new
        .iter()
        .zip(old.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diff / (1.0 + fro(old))
}

fn to_na(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

// ---------------------------------------------------------------------------
// single-task fits

/// Independent regularized fit of one task:
/// `min_w sum_i loss(x_i' w, y_i) + reg * ||w||^2`.
///
/// Regression is solved in closed form; classification by damped Newton steps.
pub fn single_task_fit(task: &Task, kind: ProblemKind, reg: f64) -> Result<Array1<f64>> {
    let d = task.x.ncols();
    match kind {
        ProblemKind::Regression => {
            let mut gram = to_na(&task.x.t().dot(&task.x));
            for i in 0..d {
                gram[(i, i)] += reg;
            }
            let rhs = task.x.t().dot(&task.y);
            let rhs = nalgebra::DVector::from_iterator(d, rhs.iter().copied());
            let sol = match gram.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => gram
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Singular("single-task normal equations; use reg > 0".into()))?,
            };
            Ok(Array1::from_iter(sol.iter().copied()))
        }
        ProblemKind::BinaryClassification => logistic_newton(task, reg),
    }
}

fn logistic_objective(task: &Task, w: ArrayView1<f64>, reg: f64) -> f64 {
    model::task_loss(ProblemKind::BinaryClassification, task, w) + reg * w.dot(&w)
}

fn logistic_newton(task: &Task, reg: f64) -> Result<Array1<f64>> {
    let d = task.x.ncols();
    let mut w = Array1::<f64>::zeros(d);
    let mut value = logistic_objective(task, w.view(), reg);
    for _ in 0..200 {
        let z = task.x.dot(&w);
        let mut r = Array1::zeros(z.len());
        let mut curv = Array1::zeros(z.len());
        for i in 0..z.len() {
            let y = task.y[i];
            let p = model::probability(-y * z[i]);
            r[i] = -y * p;
            curv[i] = p * (1.0 - p);
        }
        let grad = task.x.t().dot(&r) + &w * (2.0 * reg);
        let gnorm = grad.dot(&grad).sqrt();
        if gnorm <= 1e-10 * (1.0 + value) {
            break;
        }
        let weighted = &task.x * &curv.view().insert_axis(Axis(1));
        let mut hess = to_na(&task.x.t().dot(&weighted));
        for i in 0..d {
            hess[(i, i)] += 2.0 * reg + 1e-12;
        }
        let g = nalgebra::DVector::from_iterator(d, grad.iter().copied());
        let dir = match hess.cholesky() {
            Some(ch) => ch.solve(&g),
            None => g.clone(),
        };
        let dir = Array1::from_iter(dir.iter().map(|v| -v));
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &w + &(&dir * step);
            let v = logistic_objective(task, cand.view(), reg);
            if v <= value + 1e-4 * step * slope {
                w = cand;
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("single-task logistic fit".into()));
    }
    Ok(w)
}

/// Independent fits for every task, stacked as columns of a `d x T` matrix.
pub fn single_task_weights(data: &MultiTaskDataset, reg: f64) -> Result<Array2<f64>> {
    let mut w = Array2::zeros((data.dim(), data.n_tasks()));
    for (t, task) in data.tasks().iter().enumerate() {
        w.column_mut(t).assign(&single_task_fit(task, data.kind(), reg)?);
    }
    Ok(w)
}

// ---------------------------------------------------------------------------
// initialization

/// Seeds the model from the truncated SVD of the stacked single-task weights:
/// `L = U_k`, `S = Sigma_k V_k'`, so `L S` is the best rank-`k` approximation.
pub fn init_l(data: &MultiTaskDataset, hp: &HyperParams) -> Result<LatentModel> {
    let (model, _) = init_with_weights(data, hp)?;
    Ok(model)
}

/// As [`init_l`], also returning the stacked single-task weights `W`.
pub fn init_with_weights(
    data: &MultiTaskDataset,
    hp: &HyperParams,
) -> Result<(LatentModel, Array2<f64>)> {
    let (d, t) = (data.dim(), data.n_tasks());
    if hp.k == 0 || hp.k > d.min(t) {
        return Err(Error::InvalidParameter(format!(
            "latent dimension k = {} must satisfy 1 <= k <= min(d, T) = {}",
            hp.k,
            d.min(t)
        )));
    }
    if data.tasks().iter().all(|task| task.x.iter().all(|v| *v == 0.0)) {
        return Err(Error::Degenerate("every feature value is zero".into()));
    }
    let w = single_task_weights(data, STL_INIT_REGULARIZATION)?;
    Ok((truncated_factorization(&w, hp.k)?, w))
}

/// `W ~= L S` with `L` the top-`k` left singular vectors and `S = Sigma_k V_k'`.
///
/// Signs are fixed so the largest-magnitude entry of each column of `L` is positive.
pub fn truncated_factorization(w: &Array2<f64>, k: usize) -> Result<LatentModel> {
    let (d, t) = w.dim();
    let svd = to_na(w).svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Degenerate("SVD failed to produce U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed to produce V".into()))?;
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    if k > order.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the rank bound {}",
            order.len()
        )));
    }
    let mut l = Array2::zeros((d, k));
    let mut s = Array2::zeros((k, t));
    for (c, &idx) in order.iter().take(k).enumerate() {
        let col = u.column(idx);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            l[[i, c]] = sign * col[i];
        }
        for j in 0..t {
            s[[c, j]] = sign * sv[idx] * vt[(idx, j)];
        }
    }
    LatentModel::new(l, s)
}

// ---------------------------------------------------------------------------
// S step

/// Data loss as a function of `S` for a fixed `L`, with `A_t = X_t L` cached.
struct SmoothInS<'a> {
    kind: ProblemKind,
    design: Vec<Array2<f64>>,
    labels: Vec<&'a Array1<f64>>,
}

impl<'a> SmoothInS<'a> {
    fn new(l: &Array2<f64>, data: &'a MultiTaskDataset) -> Self {
        Self {
            kind: data.kind(),
            design: data.tasks().iter().map(|task| task.x.dot(l)).collect(),
            labels: data.tasks().iter().map(|task| &task.y).collect(),
        }
    }

    fn value(&self, s: &Array2<f64>) -> f64 {
        let mut total = 0.0;
        for (t, (a, y)) in self.design.iter().zip(&self.labels).enumerate() {
            let z = a.dot(&s.column(t));
            total += z
                .iter()
                .zip(y.iter())
                .map(|(&z, &y)| loss_unchecked(self.kind, z, y))
                .sum::<f64>();
        }
        total
    }

    fn value_and_grad(&self, s: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        let mut total = 0.0;
        let mut grad = Array2::zeros(s.raw_dim());
        for (t, (a, y)) in self.design.iter().zip(&self.labels).enumerate() {
            let z = a.dot(&s.column(t));
            let mut r = Array1::zeros(z.len());
            for (i, (&zi, &yi)) in z.iter().zip(y.iter()).enumerate() {
                r[i] = loss_derivative(self.kind, zi, yi);
                if !r[i].is_finite() {
                    return Err(Error::NonFinite(format!(
                        "gradient contribution of task {}, sample {}",
                        t + 1,
                        i + 1
                    )));
                }
                total += loss_unchecked(self.kind, zi, yi);
            }
            grad.column_mut(t).assign(&a.t().dot(&r));
        }
        Ok((total, grad))
    }
}

/// Sum over rows of `S` of the group norm of each row, one entry per row.
pub fn row_norms(s: &Array2<f64>, groups: &GroupStructure) -> Result<Vec<f64>> {
    if groups.universe() != s.ncols() {
        return Err(Error::dims("group universe (task count)", s.ncols(), groups.universe()));
    }
    s.rows()
        .into_iter()
        .map(|row| Ok(groupnorm::group_norm(row, groups, OBJECTIVE_NORM_TOL)?.value))
        .collect()
}

/// Result of one S step.
#[derive(Debug, Clone)]
pub struct SStepOutcome {
    pub s: Array2<f64>,
    /// Group norm of each row of `s`.
    pub row_norms: Vec<f64>,
    /// Data loss plus `mu * sum(row_norms)` at `s`.
    pub value: f64,
    pub iterations: usize,
    pub final_step: f64,
}

/// Applies the row-wise prox of `weight * ||.||_G` to `v`, returning the rows'
/// group norms alongside.
fn prox_rows(
    v: &Array2<f64>,
    groups: &GroupStructure,
    weight: f64,
    opts: &ProjectionOptions,
) -> Result<(Array2<f64>, Vec<f64>)> {
    if weight == 0.0 {
        return Ok((v.clone(), vec![0.0; v.nrows()]));
    }
    let mut out = Array2::zeros(v.raw_dim());
    let mut norms = Vec::with_capacity(v.nrows());
    for (r, row) in v.rows().into_iter().enumerate() {
        let scale = row.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let row_opts = ProjectionOptions {
            tol: opts.tol * scale,
            ..*opts
        };
        let (u, n) = groupnorm::prox_with_norm(row, groups, weight, &row_opts)?;
        out.row_mut(r).assign(&u);
        norms.push(n);
    }
    Ok((out, norms))
}

/// Proximal-gradient solve of `min_S data_loss(L, S) + mu * ||S||_{G,1}` from `s_init`.
pub fn solve_s_step(
    l: &Array2<f64>,
    s_init: &Array2<f64>,
    data: &MultiTaskDataset,
    groups: &GroupStructure,
    config: &SolverConfig,
) -> Result<Array2<f64>> {
    let norms = row_norms(s_init, groups)?;
    Ok(s_step(l, s_init, &norms, data, groups, config)?.s)
}

/// S step with the initial row norms supplied by the caller.
pub fn s_step(
    l: &Array2<f64>,
    s_init: &Array2<f64>,
    init_row_norms: &[f64],
    data: &MultiTaskDataset,
    groups: &GroupStructure,
    config: &SolverConfig,
) -> Result<SStepOutcome> {
    let k = l.ncols();
    if l.nrows() != data.dim() {
        return Err(Error::dims("rows of L (feature dimension d)", data.dim(), l.nrows()));
    }
    if s_init.dim() != (k, data.n_tasks()) {
        return Err(Error::dims("columns of S (task count T)", data.n_tasks(), s_init.ncols()));
    }
    if groups.universe() != data.n_tasks() {
        return Err(Error::dims("group universe (task count)", data.n_tasks(), groups.universe()));
    }
    let mu = config.hp.mu;
    let beta = config.backtracking_factor;
    let f = SmoothInS::new(l, data);

    let mut s = s_init.clone();
    let mut norms = init_row_norms.to_vec();
    let mut value = f.value(&s) + mu * norms.iter().sum::<f64>();
    let mut s_prev = s.clone();
    let mut theta = 1.0f64;
    let mut step = config.initial_step;
    let mut iterations = 0;

    for _ in 0..config.hp.inner_max_iter {
        iterations += 1;
        let (point, theta_next) = match config.acceleration {
            Acceleration::None => (s.clone(), 1.0),
            Acceleration::Momentum => {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let coef = (theta - 1.0) / next;
                (&s + &((&s - &s_prev) * coef), next)
            }
        };
        let (mut cand, mut cand_norms, mut cand_value) =
            prox_grad_step(&f, &point, groups, mu, &mut step, beta, config)?;
        if cand_value > value && config.acceleration == Acceleration::Momentum {
            // momentum overshot: restart from the plain step
            theta = 1.0;
            let plain = prox_grad_step(&f, &s, groups, mu, &mut step, beta, config)?;
            (cand, cand_norms, cand_value) = plain;
        } else {
            theta = theta_next;
        }
        if cand_value > value {
            // only reachable through rounding in the prox; keep the current iterate
            break;
        }
        let change = rel_change(&cand, &s);
        s_prev = std::mem::replace(&mut s, cand);
        norms = cand_norms;
        value = cand_value;
        if change <= config.hp.inner_tol {
            break;
        }
    }
    Ok(SStepOutcome {
        s,
        row_norms: norms,
        value,
        iterations,
        final_step: step,
    })
}

/// One backtracked proximal-gradient step from `point`; returns the candidate,
/// its row norms and its composite objective value.
fn prox_grad_step(
    f: &SmoothInS,
    point: &Array2<f64>,
    groups: &GroupStructure,
    mu: f64,
    step: &mut f64,
    beta: f64,
    config: &SolverConfig,
) -> Result<(Array2<f64>, Vec<f64>, f64)> {
    let (f_point, grad) = f.value_and_grad(point)?;
    loop {
        let v = point - &(&grad * *step);
        let (cand, norms) = prox_rows(&v, groups, mu * *step, &config.projection)?;
        let f_cand = f.value(&cand);
        let diff = &cand - point;
        let quad = f_point + (&grad * &diff).sum() + diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * *step);
        if f_cand <= quad + 1e-13 * f_point.abs() || diff.iter().all(|d| *d == 0.0) {
            let total = f_cand + mu * norms.iter().sum::<f64>();
            return Ok((cand, norms, total));
        }
        *step *= beta;
        if *step < 1e-300 || !f_cand.is_finite() && *step < 1e-30 {
            return Err(Error::NonFinite("S-step line search (step size underflow)".into()));
        }
    }
}

// ---------------------------------------------------------------------------
// L step

/// Minimizes `data_loss(L, S) + lambda ||L||_F^2` over `L` from `l_init`.
///
/// Regression solves the normal equations in `vec(L)` exactly (directly or by
/// conjugate gradient). Classification takes damped Newton steps in `vec(L)`
/// when `d k` is small enough for a dense Hessian, else backtracking gradient descent.
pub fn solve_l_step(
    l_init: &Array2<f64>,
    s: &Array2<f64>,
    data: &MultiTaskDataset,
    config: &SolverConfig,
) -> Result<Array2<f64>> {
    let (d, k) = l_init.dim();
    if d != data.dim() {
        return Err(Error::dims("rows of L (feature dimension d)", data.dim(), d));
    }
    if s.dim() != (k, data.n_tasks()) {
        return Err(Error::dims("shape of S", k * data.n_tasks(), s.len()));
    }
    match data.kind() {
        ProblemKind::Regression => {
            let direct = match config.l_method {
                LStepMethod::Auto => d * k <= DIRECT_SOLVE_LIMIT,
                LStepMethod::Direct => true,
                LStepMethod::ConjugateGradient => false,
            };
            if direct {
                l_normal_equations_direct(s, data, config.hp.lambda)
            } else {
                l_normal_equations_cg(l_init, s, data, config.hp.lambda, config.cg_tol)
            }
        }
        ProblemKind::BinaryClassification => {
            if d * k <= DIRECT_SOLVE_LIMIT && config.l_method != LStepMethod::ConjugateGradient {
                l_newton(l_init, s, data, config)
            } else {
                l_gradient_descent(l_init, s, data, config)
            }
        }
    }
}

/// `(sum_t (s_t s_t') (x) X_t'X_t + lambda I)` and `sum_t s_t (x) X_t' y_t`, with
/// `vec` stacking columns: entry `(i, j)` of `L` sits at `i + d * j`.
pub fn l_normal_equations(
    s: &Array2<f64>,
    data: &MultiTaskDataset,
    lambda: f64,
) -> (DMatrix<f64>, nalgebra::DVector<f64>) {
    let d = data.dim();
    let k = s.nrows();
    let n = d * k;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    for (t, task) in data.tasks().iter().enumerate() {
        let gram = task.x.t().dot(&task.x);
        let xty = task.x.t().dot(&task.y);
        let st = s.column(t);
        for j in 0..k {
            for i in 0..d {
                b[i + d * j] += st[j] * xty[i];
            }
            for jj in 0..k {
                let c = st[j] * st[jj];
                if c == 0.0 {
                    continue;
                }
                for i in 0..d {
                    for ii in 0..d {
                        a[(i + d * j, ii + d * jj)] += c * gram[[i, ii]];
                    }
                }
            }
        }
    }
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    (a, b)
}

fn unvec(v: &nalgebra::DVector<f64>, d: usize, k: usize) -> Array2<f64> {
    Array2::from_shape_fn((d, k), |(i, j)| v[i + d * j])
}

fn l_normal_equations_direct(s: &Array2<f64>, data: &MultiTaskDataset, lambda: f64) -> Result<Array2<f64>> {
    let (a, b) = l_normal_equations(s, data, lambda);
    let chol = a.cholesky().ok_or_else(|| {
        Error::Singular(
            "L-step normal equations are rank deficient; use lambda > 0".into(),
        )
    })?;
    let sol = chol.solve(&b);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "L-step normal equations are numerically singular; use lambda > 0".into(),
        ));
    }
    Ok(unvec(&sol, data.dim(), s.nrows()))
}

/// Applies the normal-equations operator to `v`: `sum_t X_t'(X_t V s_t) s_t' + lambda V`.
fn l_operator(v: &Array2<f64>, s: &Array2<f64>, data: &MultiTaskDataset, lambda: f64) -> Array2<f64> {
    let mut out = v * lambda;
    for (t, task) in data.tasks().iter().enumerate() {
        let st = s.column(t);
        let xv = task.x.dot(&v.dot(&st));
        let back = task.x.t().dot(&xv);
        for (i, &a) in back.iter().enumerate() {
            for (j, &c) in st.iter().enumerate() {
                out[[i, j]] += a * c;
            }
        }
    }
    out
}

fn l_normal_equations_cg(
    l_init: &Array2<f64>,
    s: &Array2<f64>,
    data: &MultiTaskDataset,
    lambda: f64,
    tol: f64,
) -> Result<Array2<f64>> {
    let (d, k) = l_init.dim();
    let mut rhs = Array2::<f64>::zeros((d, k));
    for (t, task) in data.tasks().iter().enumerate() {
        let xty = task.x.t().dot(&task.y);
        for i in 0..d {
            for j in 0..k {
                rhs[[i, j]] += xty[i] * s[[j, t]];
            }
        }
    }
    let b_norm = fro(&rhs);
    if b_norm == 0.0 {
        return Ok(Array2::zeros((d, k)));
    }
    let mut x = l_init.clone();
    let mut r = &rhs - &l_operator(&x, s, data, lambda);
    let mut p = r.clone();
    let mut rs = (&r * &r).sum();
    let max_iter = 10 * d * k + 100;
    for _ in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        let ap = l_operator(&p, s, data, lambda);
        let denom = (&p * &ap).sum();
        if denom <= 0.0 {
            return Err(Error::Singular(
                "L-step operator is not positive definite; use lambda > 0".into(),
            ));
        }
        let alpha = rs / denom;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        let rs_new = (&r * &r).sum();
        p = &r + &(&p * (rs_new / rs));
        rs = rs_new;
    }
    Err(Error::NoConvergence {
        what: "conjugate gradient L step".into(),
        iterations: max_iter,
        residual: rs.sqrt() / b_norm,
        best: x.iter().copied().collect(),
    })
}

fn l_smooth_value(l: &Array2<f64>, s: &Array2<f64>, data: &MultiTaskDataset, lambda: f64) -> f64 {
    let w = l.dot(s);
    let loss: f64 = data
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| model::task_loss(data.kind(), task, w.column(t)))
        .sum();
    loss + lambda * l.iter().map(|v| v * v).sum::<f64>()
}

/// Logistic L-step gradient and Hessian in `vec(L)` (entry `(i, j)` at `i + d * j`).
fn l_logistic_derivatives(
    l: &Array2<f64>,
    s: &Array2<f64>,
    data: &MultiTaskDataset,
    lambda: f64,
) -> (Array2<f64>, DMatrix<f64>) {
    let (d, k) = l.dim();
    let w = l.dot(s);
    let mut grad = l * (2.0 * lambda);
    let mut hess = DMatrix::<f64>::zeros(d * k, d * k);
    for (t, task) in data.tasks().iter().enumerate() {
        let z = task.x.dot(&w.column(t));
        let mut r = Array1::zeros(z.len());
        let mut curv = Array1::zeros(z.len());
        for i in 0..z.len() {
            let y = task.y[i];
            let p = model::probability(-y * z[i]);
            r[i] = -y * p;
            curv[i] = p * (1.0 - p);
        }
        let st = s.column(t);
        let xr = task.x.t().dot(&r);
        for j in 0..k {
            grad.column_mut(j).scaled_add(st[j], &xr);
        }
        let weighted = &task.x * &curv.view().insert_axis(Axis(1));
        let gram = task.x.t().dot(&weighted);
        for a in 0..k {
            for b in 0..k {
                let c = st[a] * st[b];
                if c == 0.0 {
                    continue;
                }
                for i in 0..d {
                    for j in 0..d {
                        hess[(i + d * a, j + d * b)] += c * gram[[i, j]];
                    }
                }
            }
        }
    }
    for i in 0..d * k {
        hess[(i, i)] += 2.0 * lambda;
    }
    (grad, hess)
}

fn l_newton(
    l_init: &Array2<f64>,
    s: &Array2<f64>,
    data: &MultiTaskDataset,
    config: &SolverConfig,
) -> Result<Array2<f64>> {
    let lambda = config.hp.lambda;
    let (d, k) = l_init.dim();
    let mut l = l_init.clone();
    let mut value = l_smooth_value(&l, s, data, lambda);
    for _ in 0..config.hp.inner_max_iter {
        let (grad, mut hess) = l_logistic_derivatives(&l, s, data, lambda);
        let gsq = (&grad * &grad).sum();
        if gsq.sqrt() <= config.hp.inner_tol {
            break;
        }
        let g = nalgebra::DVector::from_iterator(d * k, grad.t().iter().copied());
        for i in 0..d * k {
            hess[(i, i)] += 1e-12;
        }
        // a singular Hessian (lambda = 0 with zero rows of S) falls back to steepest descent
        let dir = match hess.cholesky() {
            Some(ch) => unvec(&(-ch.solve(&g)), d, k),
            None => -&grad,
        };
        let slope = (&grad * &dir).sum();
        if slope >= 0.0 {
            break;
        }
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..200 {
            let cand = &l + &(&dir * step);
            let v = l_smooth_value(&cand, s, data, lambda);
            if v <= value + 1e-4 * step * slope {
                l = cand;
                value = v;
                moved = true;
                break;
            }
            step *= config.backtracking_factor;
        }
        if !moved {
            break;
        }
    }
    Ok(l)
}

fn l_gradient_descent(
    l_init: &Array2<f64>,
    s: &Array2<f64>,
    data: &MultiTaskDataset,
    config: &SolverConfig,
) -> Result<Array2<f64>> {
    let lambda = config.hp.lambda;
    let mut l = l_init.clone();
    let mut value = l_smooth_value(&l, s, data, lambda);
    let mut step = config.initial_step;
    for _ in 0..config.hp.inner_max_iter {
        let m = LatentModel::new(l.clone(), s.clone())?;
        let grad = model::grad_l(&m, data, lambda)?;
        let gsq = (&grad * &grad).sum();
        if gsq.sqrt() <= config.hp.inner_tol {
            break;
        }
        // let the step recover after earlier shrinking
        step /= config.backtracking_factor;
        let mut moved = false;
        for _ in 0..200 {
            let cand = &l - &(&grad * step);
            let v = l_smooth_value(&cand, s, data, lambda);
            if v <= value - 0.5 * step * gsq {
                l = cand;
                value = v;
                moved = true;
                break;
            }
            step *= config.backtracking_factor;
        }
        if !moved {
            break;
        }
    }
    Ok(l)
}

// ---------------------------------------------------------------------------
// alternating fit

/// Objective with row norms already known.
fn composite_value(
    l: &Array2<f64>,
    s: &Array2<f64>,
    norms: &[f64],
    data: &MultiTaskDataset,
    hp: &HyperParams,
) -> f64 {
    l_smooth_value(l, s, data, hp.lambda) + hp.mu * norms.iter().sum::<f64>()
}

/// Per-task training error: RMSE for regression, 0/1 error for classification.
pub fn per_task_error(weights: &Array2<f64>, data: &MultiTaskDataset) -> Vec<f64> {
    data.tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let z = task.x.dot(&weights.column(t));
            match data.kind() {
                ProblemKind::Regression => {
                    let sse: f64 = z.iter().zip(task.y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    (sse / task.n_samples() as f64).sqrt()
                }
                ProblemKind::BinaryClassification => {
                    let wrong = z
                        .iter()
                        .zip(task.y.iter())
                        .filter(|(&z, &y)| (if z >= 0.0 { 1.0 } else { -1.0 }) != y)
                        .count();
                    wrong as f64 / task.n_samples() as f64
                }
            }
        })
        .collect()
}

/// Fits `L` and `S` by alternating S and L steps from the SVD initialization.
///
/// Stops once both relative changes `||M+ - M||_F / (1 + ||M||_F)` fall below
/// `outer_tol`, or after `outer_max_iter` rounds.
pub fn fit(
    data: &MultiTaskDataset,
    groups: &GroupStructure,
    config: &SolverConfig,
) -> Result<(LatentModel, FitReport)> {
    let start = Instant::now();
    let model = init_l(data, &config.hp)?;
    let (model, mut report) = fit_from(model, data, groups, config)?;
    report.wall_time = start.elapsed();
    Ok((model, report))
}

/// Alternating fit from a caller-supplied starting model.
pub fn fit_from(
    start_model: LatentModel,
    data: &MultiTaskDataset,
    groups: &GroupStructure,
    config: &SolverConfig,
) -> Result<(LatentModel, FitReport)> {
    let start = Instant::now();
    config.validate()?;
    let hp = &config.hp;
    if groups.universe() != data.n_tasks() {
        return Err(Error::dims("group universe (task count)", data.n_tasks(), groups.universe()));
    }
    if start_model.dim() != data.dim() || start_model.n_tasks() != data.n_tasks() {
        return Err(Error::dims("starting model task count", data.n_tasks(), start_model.n_tasks()));
    }
    if start_model.latent_dim() != hp.k {
        return Err(Error::dims("starting model latent dimension", hp.k, start_model.latent_dim()));
    }
    let mut notes = Vec::new();
    if hp.k == data.n_tasks() {
        notes.push(format!(
            "warning: k = T = {}; the latent space is not lower-dimensional than the task set",
            hp.k
        ));
    }

    let (mut l, mut s) = start_model.into_parts();
    let mut norms = row_norms(&s, groups)?;
    let mut value = composite_value(&l, &s, &norms, data, hp);
    let mut trace = vec![value];
    let mut converged = false;
    let mut outer = 0;

    while outer < hp.outer_max_iter {
        outer += 1;
        let step = s_step(&l, &s, &norms, data, groups, config)?;
        let l_new = solve_l_step(&l, &step.s, data, config)?;
        // keep the previous L if the solve did not improve (rounding in CG or GD caps)
        let l_next = if l_smooth_value(&l_new, &step.s, data, hp.lambda)
            <= l_smooth_value(&l, &step.s, data, hp.lambda)
        {
            l_new
        } else {
            l.clone()
        };
        let next_value = composite_value(&l_next, &step.s, &step.row_norms, data, hp);
        if !next_value.is_finite() {
            return Err(Error::NonFinite(format!("objective at outer iteration {outer}")));
        }
        if next_value > value * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::DescentViolation {
                iteration: outer,
                previous: value,
                current: next_value,
            });
        }
        let delta = rel_change(&l_next, &l).max(rel_change(&step.s, &s));
        l = l_next;
        s = step.s;
        norms = step.row_norms;
        value = next_value;
        trace.push(value);
        if delta <= hp.outer_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        notes.push(format!("stopped at the outer iteration cap ({})", hp.outer_max_iter));
    }

    let model = LatentModel::new(l, s)?;
    let train_error = per_task_error(&model.weights(), data);
    Ok((
        model,
        FitReport {
            objective_trace: trace,
            converged,
            outer_iterations: outer,
            wall_time: start.elapsed(),
            train_error,
            notes,
        },
    ))
}

//! Baselines as group-structure specializations, grid search, metrics and the
//! methods-by-datasets benchmark table.

use std::fmt;
use std::fmt::Write as _;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{self, Split, Synthetic1Config};
use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::model::{FitReport, HyperParams, LatentModel, MultiTaskDataset, ProblemKind};
use crate::solver::{self, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    /// Independent ridge / logistic fit per task.
    #[serde(rename = "STL")]
    Stl,
    /// One all-tasks group: the row penalty becomes the 2,1 norm.
    #[serde(rename = "MTL-FEAT")]
    MtlFeat,
    /// Singleton groups: the row penalty becomes the l1 norm.
    #[serde(rename = "GO-MTL")]
    GoMtl,
    /// Caller-supplied task groups.
    #[serde(rename = "GS-MTL")]
    GsMtl,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::Stl,
        MethodKind::MtlFeat,
        MethodKind::GoMtl,
        MethodKind::GsMtl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Stl => "STL",
            MethodKind::MtlFeat => "MTL-FEAT",
            MethodKind::GoMtl => "GO-MTL",
            MethodKind::GsMtl => "GS-MTL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "stl" => Some(MethodKind::Stl),
            "mtlfeat" => Some(MethodKind::MtlFeat),
            "gomtl" => Some(MethodKind::GoMtl),
            "gsmtl" => Some(MethodKind::GsMtl),
            _ => None,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub kind: MethodKind,
    /// Required for GS-MTL; ignored otherwise.
    pub groups: Option<GroupStructure>,
}

impl MethodSpec {
    pub fn new(kind: MethodKind) -> Self {
        Self { kind, groups: None }
    }

    pub fn gs_mtl(groups: GroupStructure) -> Self {
        Self {
            kind: MethodKind::GsMtl,
            groups: Some(groups),
        }
    }

    /// The task groups the method regularizes with, or `None` for STL.
    pub fn task_groups(&self, n_tasks: usize) -> Result<Option<GroupStructure>> {
        match self.kind {
            MethodKind::Stl => Ok(None),
            MethodKind::GoMtl => GroupStructure::singletons(n_tasks).map(Some),
            MethodKind::MtlFeat => GroupStructure::all(n_tasks).map(Some),
            MethodKind::GsMtl => {
                let g = self.groups.clone().ok_or_else(|| {
                    Error::InvalidParameter("GS-MTL requires an explicit group structure".into())
                })?;
                if g.universe() != n_tasks {
                    return Err(Error::dims("GS-MTL group universe", n_tasks, g.universe()));
                }
                Ok(Some(g))
            }
        }
    }
}

/// Fitted per-task linear predictors.
#[derive(Debug, Clone)]
pub struct TaskPredictors {
    /// Task weight vectors as columns (`d x T`).
    pub weights: Array2<f64>,
    pub model: Option<LatentModel>,
    pub report: Option<FitReport>,
}

impl TaskPredictors {
    pub fn predict(&self, task: usize, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.weights.column(task))
    }
}

/// Fits one method. STL uses `config.hp.lambda` as its ridge weight; the latent
/// methods call [`solver::fit`] with their derived groups.
pub fn fit_method(spec: &MethodSpec, data: &MultiTaskDataset, config: &SolverConfig) -> Result<TaskPredictors> {
    match spec.task_groups(data.n_tasks())? {
        None => Ok(TaskPredictors {
            weights: solver::single_task_weights(data, config.hp.lambda)?,
            model: None,
            report: None,
        }),
        Some(groups) => {
            let (model, report) = solver::fit(data, &groups, config)?;
            Ok(TaskPredictors {
                weights: model.weights(),
                model: Some(model),
                report: Some(report),
            })
        }
    }
}

/// Regression: RMSE pooled over every sample of every task. Classification: the
/// fraction of samples with `sign(prediction) != y`, where `sign(0) = +1`.
pub fn evaluate(pred: &TaskPredictors, data: &MultiTaskDataset, kind: ProblemKind) -> Result<f64> {
    if data.total_samples() == 0 {
        return Err(Error::InvalidData("cannot evaluate on an empty split".into()));
    }
    if pred.weights.dim() != (data.dim(), data.n_tasks()) {
        return Err(Error::dims("predictor task count", data.n_tasks(), pred.weights.ncols()));
    }
    let mut acc = 0.0;
    let mut n = 0usize;
    for (t, task) in data.tasks().iter().enumerate() {
        let z = task.x.dot(&pred.weights.column(t));
        for (&zi, &yi) in z.iter().zip(task.y.iter()) {
            acc += match kind {
                ProblemKind::Regression => (zi - yi) * (zi - yi),
                ProblemKind::BinaryClassification => {
                    let sign = if zi >= 0.0 { 1.0 } else { -1.0 };
                    f64::from(u8::from(sign != yi))
                }
            };
            n += 1;
        }
    }
    let mean = acc / n as f64;
    Ok(match kind {
        ProblemKind::Regression => mean.sqrt(),
        ProblemKind::BinaryClassification => mean,
    })
}

/// Area under the ROC curve of the pooled scores (ties count one half).
pub fn auc(pred: &TaskPredictors, data: &MultiTaskDataset) -> Option<f64> {
    let mut scored: Vec<(f64, bool)> = Vec::new();
    for (t, task) in data.tasks().iter().enumerate() {
        let z = task.x.dot(&pred.weights.column(t));
        scored.extend(z.iter().zip(task.y.iter()).map(|(&z, &y)| (z, y > 0.0)));
    }
    let pos = scored.iter().filter(|s| s.1).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // rank-sum with average ranks for ties
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < scored.len() {
        let mut j = i;
        while j + 1 < scored.len() && scored[j + 1].0 == scored[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * scored[i..=j].iter().filter(|s| s.1).count() as f64;
        i = j + 1;
    }
    Some((rank_sum - (pos * (pos + 1)) as f64 / 2.0) / (pos * neg) as f64)
}

// ---------------------------------------------------------------------------
// grid search

/// Powers of ten `10^lo ..= 10^hi`.
pub fn powers_of_ten(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| format!("1e{e}").parse().unwrap()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchSpec {
    pub mu_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// `None` means `{2, ceil(T/3), ceil(T/2)}`.
    pub k_grid: Option<Vec<usize>>,
}

impl Default for GridSearchSpec {
    fn default() -> Self {
        Self {
            mu_grid: powers_of_ten(-5, 1),
            lambda_grid: powers_of_ten(-5, 1),
            k_grid: None,
        }
    }
}

impl GridSearchSpec {
    pub fn single(mu: f64, lambda: f64, k: usize) -> Self {
        Self {
            mu_grid: vec![mu],
            lambda_grid: vec![lambda],
            k_grid: Some(vec![k]),
        }
    }

    /// Sorted, deduplicated `k` values valid for `d` features and `t` tasks.
    pub fn resolved_k(&self, d: usize, t: usize) -> Vec<usize> {
        let mut ks = self
            .k_grid
            .clone()
            .unwrap_or_else(|| vec![2, t.div_ceil(3), t.div_ceil(2)]);
        // values above min(d, T) are clamped rather than dropped
        let cap = d.min(t).max(1);
        for k in ks.iter_mut() {
            *k = (*k).clamp(1, cap);
        }
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::InvalidParameter("grids must be non-empty".into()));
        }
        if self.k_grid.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::InvalidParameter("k grid must be non-empty".into()));
        }
        if self.mu_grid.iter().chain(&self.lambda_grid).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("grid values must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Validation error of one hyperparameter cell (`+inf` when the fit failed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub mu: f64,
    pub lambda: f64,
    pub k: usize,
    pub val_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: MethodKind,
    pub seed: u64,
    pub test_error: f64,
    pub val_error: f64,
    pub chosen: HyperParams,
    /// AUC of the test scores, classification only.
    pub test_auc: Option<f64>,
    pub cells: Vec<GridCell>,
    pub report: Option<FitReport>,
}

/// Fits every grid cell on `split.train`, scores it on `split.val`, and refits
/// the minimizer on the training part (ties favour smaller mu, then lambda, then k).
pub fn grid_search(
    spec: &MethodSpec,
    split: &Split,
    grid: &GridSearchSpec,
    base: &SolverConfig,
    seed: u64,
) -> Result<(HyperParams, ExperimentResult)> {
    grid.validate()?;
    let train = &split.train;
    let kind = train.kind();
    let mut mus = grid.mu_grid.clone();
    let mut lambdas = grid.lambda_grid.clone();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut ks = grid.resolved_k(train.dim(), train.n_tasks());
    if spec.kind == MethodKind::Stl {
        // STL only has a ridge weight
        mus.truncate(1);
        ks.truncate(1);
        ks.resize(1, 1);
    }
    if ks.is_empty() {
        return Err(Error::InvalidParameter("no admissible k in the grid".into()));
    }
    let mut cells: Vec<HyperParams> = Vec::new();
    for &mu in &mus {
        for &lambda in &lambdas {
            for &k in &ks {
                cells.push(HyperParams { mu, lambda, k, ..base.hp });
            }
        }
    }

    let evaluated: Vec<GridCell> = cells
        .par_iter()
        .map(|hp| {
            let cfg = SolverConfig { hp: *hp, seed, ..base.clone() };
            let outcome = fit_method(spec, train, &cfg).and_then(|p| evaluate(&p, &split.val, kind));
            let (val_error, failure) = match outcome {
                Ok(v) if v.is_finite() => (v, None),
                Ok(v) => (f64::INFINITY, Some(format!("non-finite validation error {v}"))),
                Err(e) => (f64::INFINITY, Some(e.to_string())),
            };
            GridCell {
                mu: hp.mu,
                lambda: hp.lambda,
                k: hp.k,
                val_error,
                failure,
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, c) in evaluated.iter().enumerate() {
        if c.val_error.is_finite() && best.is_none_or(|b| c.val_error < evaluated[b].val_error) {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| {
        Error::InvalidData(format!(
            "every grid cell failed for {} (first failure: {})",
            spec.kind,
            evaluated
                .first()
                .and_then(|c| c.failure.clone())
                .unwrap_or_default()
        ))
    })?;
    let chosen = cells[best];
    let cfg = SolverConfig { hp: chosen, seed, ..base.clone() };
    let pred = fit_method(spec, train, &cfg)?;
    let test_error = evaluate(&pred, &split.test, kind)?;
    let test_auc = match kind {
        ProblemKind::BinaryClassification => auc(&pred, &split.test),
        ProblemKind::Regression => None,
    };
    Ok((
        chosen,
        ExperimentResult {
            method: spec.kind,
            seed,
            test_error,
            val_error: evaluated[best].val_error,
            chosen,
            test_auc,
            cells: evaluated,
            report: pred.report,
        },
    ))
}

// ---------------------------------------------------------------------------
// benchmark

/// Where a benchmark dataset comes from.
#[derive(Debug, Clone)]
pub enum DatasetSource {
    /// Regenerated for every seed (the generator seed is replaced by the run seed).
    Synthetic1(Synthetic1Config),
    TwoGroup {
        n_tasks: usize,
        d: usize,
        n_per_task: usize,
        margin: f64,
    },
    /// Fixed data; only the split changes with the seed.
    Fixed(MultiTaskDataset),
}

/// Where GS-MTL's task groups come from.
#[derive(Debug, Clone)]
pub enum GroupSource {
    /// The generator's planted groups (synthetic sources only).
    Planted,
    Fixed(GroupStructure),
    /// k-means over per-task mean features of the training part.
    KMeans(usize),
    Singletons,
    AllTasks,
}

#[derive(Debug, Clone)]
pub struct BenchmarkDataset {
    pub name: String,
    pub source: DatasetSource,
    pub groups: GroupSource,
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub datasets: Vec<BenchmarkDataset>,
    pub methods: Vec<MethodKind>,
    pub grid: GridSearchSpec,
    pub seeds: Vec<u64>,
    pub base: SolverConfig,
}

/// Summary of one (dataset, method) cell over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    /// Mean test error over successful seeds; `+inf` if any seed failed.
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
    pub chosen: Vec<HyperParams>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub auc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub datasets: Vec<String>,
    pub methods: Vec<MethodKind>,
    pub seeds: Vec<u64>,
    /// `cells[dataset][method]`.
    pub cells: Vec<Vec<TableCell>>,
    pub notes: Vec<String>,
}

impl BenchmarkTable {
    pub fn cell(&self, dataset: &str, method: MethodKind) -> Option<&TableCell> {
        let di = self.datasets.iter().position(|d| d == dataset)?;
        let mi = self.methods.iter().position(|m| *m == method)?;
        Some(&self.cells[di][mi])
    }

    /// Aligned text table: one row per method, one column per dataset, each cell
    /// `mean ± std`.
    pub fn to_text(&self) -> String {
        let fmt_cell = |c: &TableCell| {
            if c.mean.is_finite() {
                format!("{:.4} ± {:.4}", c.mean, c.std)
            } else {
                "inf".to_string()
            }
        };
        let mut columns: Vec<Vec<String>> = Vec::new();
        let mut first = vec![String::new()];
        first.extend(self.methods.iter().map(|m| m.name().to_string()));
        columns.push(first);
        for (di, name) in self.datasets.iter().enumerate() {
            let mut col = vec![name.clone()];
            col.extend(self.cells[di].iter().map(fmt_cell));
            columns.push(col);
        }
        let widths: Vec<usize> = columns
            .iter()
            .map(|c| c.iter().map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        let rows = self.methods.len() + 1;
        let mut out = String::new();
        let rule: String = widths
            .iter()
            .map(|w| "-".repeat(w + 2))
            .collect::<Vec<_>>()
            .join("+");
        let _ = writeln!(out, "+{rule}+");
        for r in 0..rows {
            out.push('|');
            for (c, col) in columns.iter().enumerate() {
                let s = &col[r];
                let pad = widths[c] - s.chars().count();
                let _ = write!(out, " {}{} |", s, " ".repeat(pad));
            }
            out.push('\n');
            if r == 0 || r + 1 == rows {
                let _ = writeln!(out, "+{rule}+");
            }
        }
        let _ = writeln!(out, "seeds: {:?}", self.seeds);
        if !self.notes.is_empty() {
            out.push_str("notes:\n");
            for n in &self.notes {
                let _ = writeln!(out, "  - {n}");
            }
        }
        out
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::INFINITY, 0.0);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Materializes one dataset for a seed: the split and the GS-MTL groups.
pub fn prepare_dataset(ds: &BenchmarkDataset, seed: u64) -> Result<(Split, GroupStructure)> {
    let (data, planted) = match &ds.source {
        DatasetSource::Synthetic1(cfg) => {
            let g = datagen::gen_synthetic1(&Synthetic1Config { seed, ..cfg.clone() })?;
            (g.data, Some(g.groups))
        }
        DatasetSource::TwoGroup { n_tasks, d, n_per_task, margin } => {
            let g = datagen::gen_two_group_classification(*n_tasks, *d, *n_per_task, *margin, seed)?;
            (g.data, Some(g.groups))
        }
        DatasetSource::Fixed(data) => (data.clone(), None),
    };
    let split = datagen::split_default(&data, seed)?;
    let t = data.n_tasks();
    let groups = match &ds.groups {
        GroupSource::Planted => planted.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "dataset '{}' has no planted groups; supply a groups source",
                ds.name
            ))
        })?,
        GroupSource::Fixed(g) => g.clone(),
        GroupSource::KMeans(g) => datagen::kmeans_groups(&split.train, &datagen::KMeansConfig::new(*g, seed))?,
        GroupSource::Singletons => GroupStructure::singletons(t)?,
        GroupSource::AllTasks => GroupStructure::all(t)?,
    };
    if groups.universe() != t {
        return Err(Error::dims(format!("groups of dataset '{}'", ds.name), t, groups.universe()));
    }
    Ok((split, groups))
}

/// Runs grid search for every (dataset, method, seed) and summarizes test error
/// over seeds. Failed runs are recorded as `+inf` with a note.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkTable> {
    if spec.datasets.is_empty() || spec.methods.is_empty() || spec.seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "benchmark needs at least one dataset, method and seed".into(),
        ));
    }
    let mut notes = Vec::new();
    let mut cells = Vec::with_capacity(spec.datasets.len());
    for ds in &spec.datasets {
        let mut per_method: Vec<(Vec<f64>, Vec<HyperParams>, Vec<f64>, bool)> =
            vec![(Vec::new(), Vec::new(), Vec::new(), false); spec.methods.len()];
        for &seed in &spec.seeds {
            let (split, groups) = prepare_dataset(ds, seed).map_err(|e| {
                Error::InvalidData(format!("dataset '{}' (seed {seed}): {e}", ds.name))
            })?;
            for (mi, &method) in spec.methods.iter().enumerate() {
                let mspec = match method {
                    MethodKind::GsMtl => MethodSpec::gs_mtl(groups.clone()),
                    other => MethodSpec::new(other),
                };
                match grid_search(&mspec, &split, &spec.grid, &spec.base, seed) {
                    Ok((hp, res)) => {
                        per_method[mi].0.push(res.test_error);
                        per_method[mi].1.push(hp);
                        if let Some(a) = res.test_auc {
                            per_method[mi].2.push(a);
                        }
                    }
                    Err(e) => {
                        per_method[mi].3 = true;
                        notes.push(format!("{} / {} / seed {seed}: {e}", ds.name, method));
                    }
                }
            }
        }
        cells.push(
            per_method
                .into_iter()
                .map(|(errs, chosen, auc, failed)| {
                    let (mean, std) = mean_std(&errs);
                    TableCell {
                        mean: if failed { f64::INFINITY } else { mean },
                        std,
                        per_seed: errs,
                        chosen,
                        auc,
                    }
                })
                .collect(),
        );
    }
    Ok(BenchmarkTable {
        datasets: spec.datasets.iter().map(|d| d.name.clone()).collect(),
        methods: spec.methods.clone(),
        seeds: spec.seeds.clone(),
        cells,
        notes,
    })
}

// ---------------------------------------------------------------------------
// support statistics

/// Mean Jaccard similarity of the supports of `S`'s columns for task pairs in
/// the same group (`within`) and in different groups (`across`).
///
/// Entries with `|S_ij| <= 1e-6 * max|S|` count as zero. Pairs whose supports
/// are both empty have similarity 1. A side with no pairs reports `NaN`.
pub fn support_similarity(s: &Array2<f64>, groups: &GroupStructure) -> Result<(f64, f64)> {
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("S".into()));
    }
    if groups.universe() != s.ncols() {
        return Err(Error::dims("group universe (task count)", s.ncols(), groups.universe()));
    }
    let member = groups.membership().ok_or_else(|| {
        Error::InvalidGroups("support similarity needs disjoint groups".into())
    })?;
    let max = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::Degenerate("S is identically zero; support is empty".into()));
    }
    let thresh = 1e-6 * max;
    let support: Vec<Vec<bool>> = s
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs() > thresh).collect())
        .collect();
    let jaccard = |a: &[bool], b: &[bool]| {
        let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
        let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
        if union == 0 { 1.0 } else { inter as f64 / union as f64 }
    };
    let (mut within, mut nw, mut across, mut na) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..support.len() {
        for j in i + 1..support.len() {
            let v = jaccard(&support[i], &support[j]);
            if member[i] == member[j] {
                within += v;
                nw += 1;
            } else {
                across += v;
                na += 1;
            }
        }
    }
    let avg = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    Ok((avg(within, nw), avg(across, na)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Task;
    use ndarray::array;

    #[test]
    fn method_names_parse() {
        for m in MethodKind::ALL {
            assert_eq!(MethodKind::parse(m.name()), Some(m));
        }
        assert_eq!(MethodKind::parse("gs_mtl"), Some(MethodKind::GsMtl));
        assert_eq!(MethodKind::parse("lasso"), None);
    }

    #[test]
    fn gs_mtl_requires_groups() {
        assert!(MethodSpec::new(MethodKind::GsMtl).task_groups(3).is_err());
        let g = MethodSpec::new(MethodKind::GoMtl).task_groups(3).unwrap().unwrap();
        assert_eq!(g.len(), 3);
        let g = MethodSpec::new(MethodKind::MtlFeat).task_groups(3).unwrap().unwrap();
        assert_eq!(g.len(), 1);
    }

    fn preds(w: Array2<f64>) -> TaskPredictors {
        TaskPredictors { weights: w, model: None, report: None }
    }

    #[test]
    fn evaluate_examples() {
        let data = MultiTaskDataset::new(
            vec![Task { x: array![[1.0], [1.0]], y: array![0.0, 1.0] }],
            ProblemKind::Regression,
        )
        .unwrap();
        // predictions 3 and 3: errors 3 and 2 -> use weight 3 vs labels (0, -1)
        let data2 = MultiTaskDataset::new(
            vec![Task { x: array![[1.0], [1.0]], y: array![0.0, -1.0] }],
            ProblemKind::Regression,
        )
        .unwrap();
        let rmse = evaluate(&preds(array![[3.0]]), &data2, ProblemKind::Regression).unwrap();
        assert!((rmse - 12.5f64.sqrt()).abs() < 1e-12);
        let _ = data;

        let cls = MultiTaskDataset::new(
            vec![Task { x: array![[1.0], [-1.0], [0.0]], y: array![1.0, -1.0, 1.0] }],
            ProblemKind::BinaryClassification,
        )
        .unwrap();
        assert_eq!(evaluate(&preds(array![[1.0]]), &cls, ProblemKind::BinaryClassification).unwrap(), 0.0);
        // sign(0) = +1 matches the third label
        let wrong = evaluate(&preds(array![[-1.0]]), &cls, ProblemKind::BinaryClassification).unwrap();
        assert!((wrong - 2.0 / 3.0).abs() < 1e-15);
        let all_wrong = MultiTaskDataset::new(
            vec![Task { x: array![[1.0], [-1.0]], y: array![1.0, -1.0] }],
            ProblemKind::BinaryClassification,
        )
        .unwrap();
        assert_eq!(evaluate(&preds(array![[-1.0]]), &all_wrong, ProblemKind::BinaryClassification).unwrap(), 1.0);
    }

    #[test]
    fn auc_perfect_and_reversed() {
        let cls = MultiTaskDataset::new(
            vec![Task { x: array![[2.0], [1.0], [-1.0]], y: array![1.0, 1.0, -1.0] }],
            ProblemKind::BinaryClassification,
        )
        .unwrap();
        assert_eq!(auc(&preds(array![[1.0]]), &cls), Some(1.0));
        assert_eq!(auc(&preds(array![[-1.0]]), &cls), Some(0.0));
    }

    #[test]
    fn support_similarity_examples() {
        let g = GroupStructure::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let block = array![[1.0, 2.0, 0.0, 0.0], [0.0, 0.0, 3.0, -1.0]];
        assert_eq!(support_similarity(&block, &g).unwrap(), (1.0, 0.0));
        let same = array![[1.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 2.0]];
        assert_eq!(support_similarity(&same, &g).unwrap(), (1.0, 1.0));
        assert!(support_similarity(&Array2::zeros((2, 4)), &g).is_err());
    }

    #[test]
    fn grid_defaults() {
        let g = GridSearchSpec::default();
        assert_eq!(g.mu_grid.len(), 7);
        assert_eq!(g.mu_grid[0], 1e-5);
        assert_eq!(g.mu_grid[6], 10.0);
        assert_eq!(g.resolved_k(20, 10), vec![2, 4, 5]);
        assert_eq!(g.resolved_k(9, 29), vec![2, 9]);
    }

    #[test]
    fn text_table_has_all_methods() {
        let cell = TableCell { mean: 1.0, std: 0.1, per_seed: vec![1.0], chosen: vec![], auc: vec![] };
        let t = BenchmarkTable {
            datasets: vec!["Synthetic1".into()],
            methods: MethodKind::ALL.to_vec(),
            seeds: vec![0],
            cells: vec![vec![cell; 4]],
            notes: vec![],
        };
        let text = t.to_text();
        for m in MethodKind::ALL {
            assert!(text.contains(m.name()));
        }
        assert!(text.contains("1.0000 ± 0.1000"));
    }
}

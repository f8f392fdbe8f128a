//! TOML run configuration.
//!
//! ```toml
//! seed = 0
//! out = "out"
//!
//! [dataset]                      # exactly one source
//! synthetic1 = { n_tasks = 10 }  # or two_group = {...}, or csv = "data.csv" with kind
//!
//! [groups]
//! source = "planted"             # planted | file | kmeans | singletons | all
//!
//! [method]
//! name = "GS-MTL"
//!
//! [params]
//! mu = 0.1
//! lambda = 0.01
//! k = 3
//! ```
//!
//! `benchmark` reads `[[datasets]]` entries (each with `name`, the dataset keys
//! and a `groups` table) when present, else the top-level dataset and groups.
//! Relative paths resolve against the working directory.

use std::path::{Path, PathBuf};

use gsmtl::bench::{BenchmarkDataset, DatasetSource, GridSearchSpec, GroupSource, MethodKind};
use gsmtl::datagen::Synthetic1Config;
use gsmtl::groupnorm::ProjectionMethod;
use gsmtl::solver::{Acceleration, LStepMethod};
use gsmtl::{HyperParams, ProblemKind, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dataset: Option<DatasetConfig>,
    pub groups: Option<GroupsConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub grid: Option<GridConfig>,
    pub benchmark: Option<BenchmarkConfig>,
    pub datasets: Option<Vec<NamedDataset>>,
    pub export: Option<ExportConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub csv: Option<PathBuf>,
    /// `regression` or `classification`; required with `csv`.
    pub kind: Option<String>,
    pub synthetic1: Option<Synthetic1Config>,
    pub two_group: Option<TwoGroupConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoGroupConfig {
    pub n_tasks: usize,
    pub d: usize,
    pub n_per_task: usize,
    pub margin: f64,
}

impl Default for TwoGroupConfig {
    fn default() -> Self {
        Self { n_tasks: 29, d: 9, n_per_task: 50, margin: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsConfig {
    pub source: String,
    pub path: Option<PathBuf>,
    pub g: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDataset {
    pub name: String,
    #[serde(flatten)]
    pub dataset: DatasetConfig,
    pub groups: GroupsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self { name: "GS-MTL".into() }
    }
}

/// Hyperparameters and solver options; unset fields keep library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub outer_tol: Option<f64>,
    pub outer_max_iter: Option<usize>,
    pub inner_tol: Option<f64>,
    pub inner_max_iter: Option<usize>,
    /// `none` or `momentum`.
    pub acceleration: Option<String>,
    /// `auto`, `direct` or `conjugate_gradient`.
    pub l_step: Option<String>,
    /// `dykstra` or `averaged_cyclic`.
    pub projection: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub mu: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub k: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub methods: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    pub s_matrix: Option<PathBuf>,
    pub groups: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn method(&self) -> Result<MethodKind, CliError> {
        MethodKind::parse(&self.method.name)
            .ok_or_else(|| config_err(format!("unknown method '{}'", self.method.name)))
    }

    pub fn solver_config(&self, seed: u64) -> Result<SolverConfig, CliError> {
        let p = &self.params;
        let d = HyperParams::default();
        let hp = HyperParams {
            mu: p.mu.unwrap_or(d.mu),
            lambda: p.lambda.unwrap_or(d.lambda),
            k: p.k.unwrap_or(d.k),
            outer_tol: p.outer_tol.unwrap_or(d.outer_tol),
            outer_max_iter: p.outer_max_iter.unwrap_or(d.outer_max_iter),
            inner_tol: p.inner_tol.unwrap_or(d.inner_tol),
            inner_max_iter: p.inner_max_iter.unwrap_or(d.inner_max_iter),
        };
        let mut cfg = SolverConfig::new(hp);
        cfg.seed = seed;
        if let Some(a) = &p.acceleration {
            cfg.acceleration = match a.as_str() {
                "none" => Acceleration::None,
                "momentum" => Acceleration::Momentum,
                other => return Err(config_err(format!("unknown acceleration '{other}'"))),
            };
        }
        if let Some(l) = &p.l_step {
            cfg.l_method = match l.as_str() {
                "auto" => LStepMethod::Auto,
                "direct" => LStepMethod::Direct,
                "conjugate_gradient" | "cg" => LStepMethod::ConjugateGradient,
                other => return Err(config_err(format!("unknown l_step '{other}'"))),
            };
        }
        if let Some(m) = &p.projection {
            cfg.projection.method = match m.as_str() {
                "dykstra" => ProjectionMethod::Dykstra,
                "averaged_cyclic" => ProjectionMethod::AveragedCyclic,
                other => return Err(config_err(format!("unknown projection '{other}'"))),
            };
        }
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn grid(&self) -> GridSearchSpec {
        let g = self.grid.clone().unwrap_or_default();
        let d = GridSearchSpec::default();
        GridSearchSpec {
            mu_grid: g.mu.unwrap_or(d.mu_grid),
            lambda_grid: g.lambda.unwrap_or(d.lambda_grid),
            k_grid: g.k.or(d.k_grid),
        }
    }

    pub fn benchmark_methods(&self) -> Result<Vec<MethodKind>, CliError> {
        match self.benchmark.as_ref().and_then(|b| b.methods.clone()) {
            None => Ok(MethodKind::ALL.to_vec()),
            Some(names) if names.is_empty() => Err(config_err("benchmark.methods is empty")),
            Some(names) => names
                .iter()
                .map(|n| MethodKind::parse(n).ok_or_else(|| config_err(format!("unknown method '{n}'"))))
                .collect(),
        }
    }

    pub fn benchmark_seeds(&self, seed: u64) -> Vec<u64> {
        self.benchmark
            .as_ref()
            .and_then(|b| b.seeds.clone())
            .unwrap_or_else(|| (seed..seed + 10).collect())
    }

    /// The benchmark datasets: `[[datasets]]` if given, else the top-level pair.
    pub fn benchmark_datasets(&self) -> Result<Vec<(String, DatasetConfig, GroupsConfig)>, CliError> {
        if let Some(list) = &self.datasets {
            if list.is_empty() {
                return Err(config_err("[[datasets]] is empty"));
            }
            return Ok(list.iter().map(|d| (d.name.clone(), d.dataset.clone(), d.groups.clone())).collect());
        }
        let ds = self.dataset.clone().ok_or_else(|| config_err("no [dataset] section"))?;
        let name = ds.default_name();
        Ok(vec![(name, ds, self.groups_or_default())])
    }

    pub fn groups_or_default(&self) -> GroupsConfig {
        self.groups.clone().unwrap_or(GroupsConfig { source: "planted".into(), path: None, g: None })
    }
}

/// A dataset source resolved from the config, before any data is materialized.
pub enum Source {
    Csv(PathBuf, ProblemKind),
    Synthetic1(Synthetic1Config),
    TwoGroup(TwoGroupConfig),
}

impl DatasetConfig {
    pub fn source(&self) -> Result<Source, CliError> {
        let count = [self.csv.is_some(), self.synthetic1.is_some(), self.two_group.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if count != 1 {
            return Err(config_err(format!(
                "exactly one dataset source (csv, synthetic1, two_group) is required, found {count}"
            )));
        }
        if let Some(path) = &self.csv {
            let kind = match self.kind.as_deref() {
                Some("regression") => ProblemKind::Regression,
                Some("classification") => ProblemKind::BinaryClassification,
                Some(other) => return Err(config_err(format!("unknown dataset kind '{other}'"))),
                None => return Err(config_err("dataset.kind is required with dataset.csv")),
            };
            if !path.is_file() {
                return Err(config_err(format!("dataset file {} does not exist", path.display())));
            }
            return Ok(Source::Csv(path.clone(), kind));
        }
        if self.kind.is_some() {
            return Err(config_err("dataset.kind only applies to csv datasets"));
        }
        if let Some(s) = &self.synthetic1 {
            s.validate().map_err(|e| config_err(e.to_string()))?;
            return Ok(Source::Synthetic1(s.clone()));
        }
        Ok(Source::TwoGroup(self.two_group.clone().expect("counted above")))
    }

    fn default_name(&self) -> String {
        if let Some(p) = &self.csv {
            return p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
        }
        if self.synthetic1.is_some() {
            "Synthetic1".into()
        } else {
            "TwoGroup".into()
        }
    }
}

impl GroupsConfig {
    pub fn source(&self, n_tasks: Option<usize>) -> Result<GroupSource, CliError> {
        let need_path = || {
            let p = self.path.clone().ok_or_else(|| config_err("groups.path is required for source = \"file\""))?;
            if !p.is_file() {
                return Err(config_err(format!("groups file {} does not exist", p.display())));
            }
            Ok(p)
        };
        match self.source.as_str() {
            "planted" => Ok(GroupSource::Planted),
            "singletons" => Ok(GroupSource::Singletons),
            "all" | "all-tasks" | "all_tasks" => Ok(GroupSource::AllTasks),
            "kmeans" => Ok(GroupSource::KMeans(
                self.g.ok_or_else(|| config_err("groups.g is required for source = \"kmeans\""))?,
            )),
            "file" => {
                let p = need_path()?;
                let t = n_tasks.ok_or_else(|| config_err("groups file needs a dataset to size it"))?;
                gsmtl::io::load_groups(&p, t).map(GroupSource::Fixed).map_err(CliError::from)
            }
            other => Err(config_err(format!("unknown groups source '{other}'"))),
        }
    }
}

pub fn dataset_source(ds: &DatasetConfig) -> Result<(DatasetSource, Option<usize>), CliError> {
    Ok(match ds.source()? {
        Source::Csv(path, kind) => {
            let data = gsmtl::io::load_csv(&path, kind)?;
            let t = data.n_tasks();
            (DatasetSource::Fixed(data), Some(t))
        }
        Source::Synthetic1(c) => {
            let t = c.n_tasks;
            (DatasetSource::Synthetic1(c), Some(t))
        }
        Source::TwoGroup(c) => (
            DatasetSource::TwoGroup { n_tasks: c.n_tasks, d: c.d, n_per_task: c.n_per_task, margin: c.margin },
            Some(c.n_tasks),
        ),
    })
}

pub fn benchmark_dataset(name: &str, ds: &DatasetConfig, groups: &GroupsConfig) -> Result<BenchmarkDataset, CliError> {
    let (source, t) = dataset_source(ds)?;
    Ok(BenchmarkDataset { name: name.to_string(), source, groups: groups.source(t)? })
}

use std::fs;
use std::path::{Path, PathBuf};

use gsmtl::bench::{self, BenchmarkSpec, GroupSource, MethodKind, MethodSpec};
use gsmtl::datagen::{self, Generated, KMeansConfig, Synthetic1Config};
use gsmtl::io;
use gsmtl::{GroupStructure, MultiTaskDataset};
use ndarray::Array2;
use serde_json::json;

use crate::config::{self, Source};
use crate::{CliError, Context};

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    io::write_atomic(path, text.as_bytes()).map_err(CliError::from)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write_text(path, &text)
}

fn generate_from(source: &Source, seed: u64) -> Result<Option<Generated>, CliError> {
    Ok(match source {
        Source::Csv(..) => None,
        Source::Synthetic1(c) => Some(datagen::gen_synthetic1(&Synthetic1Config { seed, ..c.clone() })?),
        Source::TwoGroup(c) => Some(datagen::gen_two_group_classification(c.n_tasks, c.d, c.n_per_task, c.margin, seed)?),
    })
}

pub fn generate(ctx: &Context) -> Result<(), CliError> {
    let ds = ctx.config.dataset.clone().ok_or_else(|| CliError::Config("no [dataset] section".into()))?;
    let source = ds.source()?;
    let g = generate_from(&source, ctx.seed)?
        .ok_or_else(|| CliError::Config("generate needs a generator dataset (synthetic1 or two_group)".into()))?;
    prepare_out(&ctx.out)?;
    io::export_csv(&g.data, &ctx.out.join("dataset.csv"))?;
    io::write_groups(&g.groups, &ctx.out.join("groups.txt"))?;
    io::write_matrix(g.truth.l(), &ctx.out.join("truth_L.csv"))?;
    io::write_matrix(g.truth.s(), &ctx.out.join("truth_S.csv"))?;
    let manifest = json!({
        "seed": ctx.seed,
        "dataset": ds,
        "n_tasks": g.data.n_tasks(),
        "dim": g.data.dim(),
        "total_samples": g.data.total_samples(),
        "kind": format!("{:?}", g.data.kind()),
    });
    write_json(&ctx.out.join("manifest.json"), &manifest)?;
    ctx.log(format!(
        "wrote {} tasks x {} features ({} samples) to {}",
        g.data.n_tasks(),
        g.data.dim(),
        g.data.total_samples(),
        ctx.out.display()
    ));
    Ok(())
}

fn resolve_groups(
    source: GroupSource,
    data: &MultiTaskDataset,
    planted: Option<&GroupStructure>,
    seed: u64,
) -> Result<GroupStructure, CliError> {
    let t = data.n_tasks();
    let g = match source {
        GroupSource::Planted => planted
            .cloned()
            .ok_or_else(|| CliError::Config("planted groups need a generator dataset".into()))?,
        GroupSource::Fixed(g) => g,
        GroupSource::KMeans(g) => datagen::kmeans_groups(data, &KMeansConfig::new(g, seed))?,
        GroupSource::Singletons => GroupStructure::singletons(t)?,
        GroupSource::AllTasks => GroupStructure::all(t)?,
    };
    if g.universe() != t {
        return Err(CliError::Data(format!("groups cover {} tasks but the dataset has {t}", g.universe())));
    }
    Ok(g)
}

pub fn fit(ctx: &Context) -> Result<(), CliError> {
    let ds = ctx.config.dataset.clone().ok_or_else(|| CliError::Config("no [dataset] section".into()))?;
    let source = ds.source()?;
    let generated = generate_from(&source, ctx.seed)?;
    let (data, planted) = match (&source, generated) {
        (Source::Csv(path, kind), _) => (io::load_csv(path, *kind)?, None),
        (_, Some(g)) => (g.data, Some(g.groups)),
        (_, None) => unreachable!("generator sources always produce data"),
    };
    let group_source = ctx.config.groups_or_default().source(Some(data.n_tasks()))?;
    let method = ctx.config.method()?;
    let solver = ctx.config.solver_config(ctx.seed)?;
    let spec = match method {
        MethodKind::GsMtl => MethodSpec::gs_mtl(resolve_groups(group_source, &data, planted.as_ref(), ctx.seed)?),
        other => MethodSpec::new(other),
    };
    ctx.log(format!("fitting {method} on {} tasks, d = {}", data.n_tasks(), data.dim()));
    let pred = bench::fit_method(&spec, &data, &solver)?;
    prepare_out(&ctx.out)?;
    io::write_matrix(&pred.weights, &ctx.out.join("W.csv"))?;
    let mut summary = json!({
        "method": method.name(),
        "seed": ctx.seed,
        "hyperparameters": solver.hp,
        "train_error": bench::evaluate(&pred, &data, data.kind())?,
    });
    if let (Some(model), Some(report)) = (&pred.model, &pred.report) {
        io::write_matrix(model.l(), &ctx.out.join("L.csv"))?;
        io::write_matrix(model.s(), &ctx.out.join("S.csv"))?;
        let groups = spec.task_groups(data.n_tasks())?.expect("latent methods have groups");
        io::write_groups(&groups, &ctx.out.join("groups.txt"))?;
        let mut trace = String::from("iter,objective\n");
        for (i, v) in report.objective_trace.iter().enumerate() {
            trace.push_str(&format!("{i},{v}\n"));
        }
        write_text(&ctx.out.join("trace.csv"), &trace)?;
        summary["converged"] = json!(report.converged);
        summary["outer_iterations"] = json!(report.outer_iterations);
        summary["final_objective"] = json!(report.final_objective());
        summary["per_task_train_error"] = json!(report.train_error);
        summary["notes"] = json!(report.notes);
        ctx.log(format!(
            "objective {:.6e} after {} outer iterations (converged: {}, {:.2?})",
            report.final_objective(),
            report.outer_iterations,
            report.converged,
            report.wall_time
        ));
        for n in &report.notes {
            eprintln!("note: {n}");
        }
    }
    write_json(&ctx.out.join("report.json"), &summary)
}

pub fn benchmark(ctx: &Context) -> Result<(), CliError> {
    let mut datasets = Vec::new();
    for (name, ds, groups) in ctx.config.benchmark_datasets()? {
        datasets.push(config::benchmark_dataset(&name, &ds, &groups)?);
    }
    let spec = BenchmarkSpec {
        datasets,
        methods: ctx.config.benchmark_methods()?,
        grid: ctx.config.grid(),
        seeds: ctx.config.benchmark_seeds(ctx.seed),
        base: ctx.config.solver_config(ctx.seed)?,
    };
    spec.grid.validate().map_err(|e| CliError::Config(e.to_string()))?;
    ctx.log(format!(
        "benchmark: {} dataset(s), {} method(s), {} seed(s)",
        spec.datasets.len(),
        spec.methods.len(),
        spec.seeds.len()
    ));
    let table = bench::run_benchmark(&spec)?;
    prepare_out(&ctx.out)?;
    let value = serde_json::to_value(&table).expect("tables serialize");
    write_json(&ctx.out.join("report.json"), &value)?;
    let text = table.to_text();
    write_text(&ctx.out.join("table.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn export_smatrix(ctx: &Context, s_matrix: Option<PathBuf>, groups: Option<PathBuf>) -> Result<(), CliError> {
    let export = ctx.config.export.clone().unwrap_or_default();
    let s_path = s_matrix
        .or(export.s_matrix)
        .ok_or_else(|| CliError::Config("no S matrix given (--s-matrix or export.s_matrix)".into()))?;
    if !s_path.is_file() {
        return Err(CliError::Config(format!("S matrix file {} does not exist", s_path.display())));
    }
    let s = io::load_matrix(&s_path)?;
    let groups_path = groups.or(export.groups);
    let groups = match &groups_path {
        Some(p) if !p.is_file() => {
            return Err(CliError::Config(format!("groups file {} does not exist", p.display())));
        }
        Some(p) => Some(io::load_groups(p, s.ncols())?),
        None => None,
    };
    prepare_out(&ctx.out)?;
    let abs: Array2<f64> = s.mapv(f64::abs);
    io::write_matrix(&abs, &ctx.out.join("S_abs.csv"))?;
    let all_zero = s.iter().all(|v| *v == 0.0);
    if all_zero {
        eprintln!("warning: S is identically zero; the image is blank");
    }
    write_text(&ctx.out.join("S.pgm"), &io::abs_heatmap_pgm(&s))?;
    let max = abs.iter().fold(0.0f64, |a, v| a.max(*v));
    let mut stats = json!({
        "rows": s.nrows(),
        "cols": s.ncols(),
        "max_abs": max,
        "normalization": "pixel = round(255 * |S_ij| / max|S|)",
    });
    if let Some(g) = &groups {
        match bench::support_similarity(&s, g) {
            Ok((within, across)) => {
                stats["within"] = json!(within);
                stats["across"] = json!(across);
                stats["within_minus_across"] = json!(within - across);
                ctx.log(format!("support similarity: within {within:.3}, across {across:.3}"));
            }
            Err(e) => {
                stats["error"] = json!(e.to_string());
                eprintln!("warning: support similarity unavailable: {e}");
            }
        }
    }
    write_json(&ctx.out.join("support.json"), &stats)
}

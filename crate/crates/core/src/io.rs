//! On-disk formats: dataset CSV, groups files, matrix CSV and plain PGM images.
//!
//! * Dataset CSV: header `task_id,y,x1,...,xd`, one sample per row. Task ids are
//!   positive integers, remapped in increasing order to tasks `1..T`.
//! * Groups file: one group per line, comma-separated one-based task ids; blank
//!   lines are skipped and `#` starts a comment.
//! * Matrix CSV: a `# rows=R cols=C` line followed by `R` comma-separated rows.
//! * PGM: plain (`P2`) graymap with maximum value 255.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::model::{MultiTaskDataset, ProblemKind, Task};

/// Writes `contents` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// dataset CSV

pub fn load_csv(path: &Path, kind: ProblemKind) -> Result<MultiTaskDataset> {
    read_csv(open(path)?, path, kind)
}

/// Parses the dataset CSV format from any reader; `path` only labels errors.
pub fn read_csv<R: BufRead>(reader: R, path: &Path, kind: ProblemKind) -> Result<MultiTaskDataset> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "file is empty; expected header task_id,y,x1,...,xd"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "task_id" || cols[1] != "y" {
        return Err(parse_err(path, 1, "header must be task_id,y,x1,...,xd"));
    }
    for (j, c) in cols[2..].iter().enumerate() {
        if *c != format!("x{}", j + 1) {
            return Err(parse_err(path, 1, format!("header column {} should be x{}", j + 3, j + 1)));
        }
    }
    let d = cols.len() - 2;

    let mut rows: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + 2 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} columns, found {}", d + 2, fields.len()),
            ));
        }
        let task: u64 = fields[0]
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| parse_err(path, lineno, format!("task_id '{}' is not a positive integer", fields[0])))?;
        let mut values = Vec::with_capacity(d + 1);
        for (j, f) in fields[1..].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("column {} ('{}') is not a number", j + 2, f)))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, format!("column {} is not finite", j + 2)));
            }
            values.push(v);
        }
        if kind == ProblemKind::BinaryClassification && values[0] != 1.0 && values[0] != -1.0 {
            return Err(parse_err(
                path,
                lineno,
                format!("classification label {} must be -1 or +1", values[0]),
            ));
        }
        let entry = rows.entry(task).or_default();
        entry.0.push(values[0]);
        entry.1.extend_from_slice(&values[1..]);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    let tasks = rows
        .into_values()
        .map(|(y, x)| {
            let n = y.len();
            Task {
                x: Array2::from_shape_vec((n, d), x).expect("row widths checked"),
                y: Array1::from(y),
            }
        })
        .collect();
    MultiTaskDataset::new(tasks, kind)
}

/// Serializes a dataset in the CSV format read by [`load_csv`].
pub fn dataset_to_csv(data: &MultiTaskDataset) -> String {
    let mut out = String::from("task_id,y");
    for j in 1..=data.dim() {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for (t, task) in data.tasks().iter().enumerate() {
        for (row, y) in task.x.rows().into_iter().zip(task.y.iter()) {
            let _ = write!(out, "{},{}", t + 1, y);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn export_csv(data: &MultiTaskDataset, path: &Path) -> Result<()> {
    write_atomic(path, dataset_to_csv(data).as_bytes())
}

// ---------------------------------------------------------------------------
// groups file

pub fn read_groups<R: BufRead>(reader: R, path: &Path, n_tasks: usize) -> Result<GroupStructure> {
    let mut groups = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut group = Vec::new();
        for f in content.split(',').map(str::trim) {
            let id: usize = f
                .parse()
                .ok()
                .filter(|&v| v >= 1 && v <= n_tasks)
                .ok_or_else(|| parse_err(path, i + 1, format!("'{f}' is not a task id in 1..={n_tasks}")))?;
            group.push(id);
        }
        groups.push(group);
    }
    GroupStructure::from_one_based(groups, n_tasks).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn load_groups(path: &Path, n_tasks: usize) -> Result<GroupStructure> {
    read_groups(open(path)?, path, n_tasks)
}

pub fn groups_to_string(groups: &GroupStructure) -> String {
    let mut out = String::new();
    for g in groups.to_one_based() {
        let line: Vec<String> = g.iter().map(ToString::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_groups(groups: &GroupStructure, path: &Path) -> Result<()> {
    write_atomic(path, groups_to_string(groups).as_bytes())
}

// ---------------------------------------------------------------------------
// matrices

pub fn matrix_to_csv(m: &Array2<f64>) -> String {
    let mut out = format!("# rows={} cols={}\n", m.nrows(), m.ncols());
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(m: &Array2<f64>, path: &Path) -> Result<()> {
    write_atomic(path, matrix_to_csv(m).as_bytes())
}

pub fn read_matrix<R: BufRead>(reader: R, path: &Path) -> Result<Array2<f64>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty matrix file"))?
        .map_err(|e| Error::io(path, e))?;
    let dims: Option<(usize, usize)> = (|| {
        let rest = header.trim().strip_prefix('#')?.trim();
        let mut it = rest.split_whitespace();
        let r = it.next()?.strip_prefix("rows=")?.parse().ok()?;
        let c = it.next()?.strip_prefix("cols=")?.parse().ok()?;
        Some((r, c))
    })();
    let (r, c) = dims.ok_or_else(|| parse_err(path, 1, "expected header '# rows=R cols=C'"))?;
    let mut values = Vec::with_capacity(r * c);
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != c {
            return Err(parse_err(path, lineno, format!("expected {c} columns, found {}", cells.len())));
        }
        for cell in cells {
            values.push(
                cell.parse::<f64>()
                    .map_err(|_| parse_err(path, lineno, format!("'{cell}' is not a number")))?,
            );
        }
        seen += 1;
    }
    if seen != r {
        return Err(parse_err(path, 1, format!("header declares {r} rows, found {seen}")));
    }
    Ok(Array2::from_shape_vec((r, c), values).expect("shape checked"))
}

pub fn load_matrix(path: &Path) -> Result<Array2<f64>> {
    read_matrix(open(path)?, path)
}

/// Plain PGM of `|m|`: width = columns, height = rows, pixel
/// `round(255 * |m_ij| / max|m|)`. An all-zero matrix gives an all-black image.
pub fn abs_heatmap_pgm(m: &Array2<f64>) -> String {
    let max = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = format!("P2\n{} {}\n255\n", m.ncols(), m.nrows());
    for row in m.rows() {
        let px: Vec<String> = row
            .iter()
            .map(|v| {
                let p = if max > 0.0 { (255.0 * v.abs() / max).round() } else { 0.0 };
                format!("{}", p as u8)
            })
            .collect();
        out.push_str(&px.join(" "));
        out.push('\n');
    }
    out
}

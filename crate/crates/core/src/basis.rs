//! Fixed nonlinear feature maps applied to a dataset before fitting.
//!
//! The solver only ever sees the expanded design; the model stays linear in it.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A monotone scalar map applied to one column.
#[derive(Clone)]
pub enum ColumnMap {
    Identity,
    /// `sign(x) * log(1 + |x|)`
    SignedLog1p,
    Tanh,
    Cbrt,
    /// Caller-provided map; it is trusted to be monotone.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ColumnMap {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            ColumnMap::Identity => v,
            ColumnMap::SignedLog1p => v.signum() * v.abs().ln_1p(),
            ColumnMap::Tanh => v.tanh(),
            ColumnMap::Cbrt => v.cbrt(),
            ColumnMap::Custom(f) => f(v),
        }
    }
}

impl fmt::Debug for ColumnMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnMap::Identity => write!(f, "Identity"),
            ColumnMap::SignedLog1p => write!(f, "SignedLog1p"),
            ColumnMap::Tanh => write!(f, "Tanh"),
            ColumnMap::Cbrt => write!(f, "Cbrt"),
            ColumnMap::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BasisSpec {
    Identity,
    /// Original features followed by all products `x_i x_j`, `i <= j`, in
    /// lexicographic order.
    Polynomial2,
    /// One map per column.
    PerColumn(Vec<ColumnMap>),
}

impl BasisSpec {
    /// Output width for `d` input features.
    pub fn output_dim(&self, d: usize) -> usize {
        match self {
            BasisSpec::Identity | BasisSpec::PerColumn(_) => d,
            BasisSpec::Polynomial2 => d + d * (d + 1) / 2,
        }
    }
}

pub fn basis_expand(x: ArrayView2<f64>, basis: &BasisSpec) -> Result<Array2<f64>> {
    let (n, d) = x.dim();
    let out = match basis {
        BasisSpec::Identity => x.to_owned(),
        BasisSpec::Polynomial2 => {
            let width = basis.output_dim(d);
            let mut out = Array2::zeros((n, width));
            for (r, row) in x.rows().into_iter().enumerate() {
                let mut c = 0;
                for &v in row {
                    out[[r, c]] = v;
                    c += 1;
                }
                for i in 0..d {
                    for j in i..d {
                        out[[r, c]] = row[i] * row[j];
                        c += 1;
                    }
                }
            }
            out
        }
        BasisSpec::PerColumn(maps) => {
            if maps.len() != d {
                return Err(Error::dims("per-column basis maps", d, maps.len()));
            }
            let mut out = x.to_owned();
            for (mut col, map) in out.columns_mut().into_iter().zip(maps) {
                col.mapv_inplace(|v| map.apply(v));
            }
            out
        }
    };
    if let Some(((r, c), _)) = out.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "expanded features at row {}, column {}",
            r + 1,
            c + 1
        )));
    }
    Ok(out)
}

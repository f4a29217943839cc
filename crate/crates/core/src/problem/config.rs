//! JSON problem configuration.
//!
//! ```json
//! {
//!   "A": [[0.5]], "B": [[1.0]], "C": [[1.0]],
//!   "F": [[1.0]], "G": [[0.1]], "H": [[1.0]],
//!   "T": 1.0, "initial_cov": [[0.1]],
//!   "noise_model": { "case": "case1", "eps": 0.25, "lambda": { "type": "triangular", "scale": [[4.0]] } },
//!   "grid": { "N": 200, "rho": 1 }
//! }
//! ```
//!
//! Kernels are `{"type": "zero"}`, `{"type": "triangular", "scale": S}` (Λ(θ) = S·(ε − |θ|)),
//! `{"type": "table", "times": [...], "lags": [...], "values": [[M, ...], ...]}` or
//! `{"type": "csv", "path": "..."}` with columns `t, theta, value...` (entries row-major).

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    build_problem, make_grid, DelayKind, DelaySchedule, KernelShape, NoiseModel, ProblemParams,
    ProblemSpec, TabulatedKernel, TimeGrid,
};
use crate::error::{Error, Result};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "F")]
    pub f: Rows,
    #[serde(rename = "G")]
    pub g: Rows,
    #[serde(rename = "H")]
    pub h: Rows,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub initial_cov: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_mean: Option<Vec<f64>>,
    pub noise_model: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "one")]
    pub rho: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "lowercase")]
pub enum NoiseConfig {
    Case1 {
        eps: f64,
        lambda: KernelConfig,
    },
    Case2 {
        eps: f64,
        lambda11: KernelConfig,
        lambda22: KernelConfig,
        lambda12: KernelConfig,
    },
    Case3 {
        #[serde(rename = "D")]
        d: Rows,
        schedule: DelayKind,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelConfig {
    Zero,
    Triangular {
        scale: Rows,
    },
    Table {
        times: Vec<f64>,
        lags: Vec<f64>,
        values: Vec<Vec<Rows>>,
    },
    Csv {
        path: PathBuf,
    },
}

fn matrix(name: &str, rows: &Rows) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be a non-empty rectangular array"
        )));
    }
    Ok(DMatrix::from_row_iterator(
        r,
        c,
        rows.iter().flatten().copied(),
    ))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl KernelConfig {
    fn resolve(&self, base: &Path, rows: usize, cols: usize) -> Result<KernelShape> {
        Ok(match self {
            KernelConfig::Zero => KernelShape::Zero,
            KernelConfig::Triangular { scale } => {
                KernelShape::Triangular(matrix("kernel scale", scale)?)
            }
            KernelConfig::Table {
                times,
                lags,
                values,
            } => {
                let values = values
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|m| matrix("kernel value", m))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                KernelShape::Tabulated(TabulatedKernel {
                    times: times.clone(),
                    lags: lags.clone(),
                    values,
                })
            }
            KernelConfig::Csv { path } => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                KernelShape::Tabulated(read_kernel_csv(&path, rows, cols)?)
            }
        })
    }
}

/// Read a kernel table from CSV with header `t, theta, value...`; `|theta|` is the lag.
pub fn read_kernel_csv(path: &Path, rows: usize, cols: usize) -> Result<TabulatedKernel> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut entries: Vec<(f64, f64, DMatrix<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let nums = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != 2 + rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}: expected {} columns, found {}",
                path.display(),
                2 + rows * cols,
                nums.len()
            )));
        }
        entries.push((
            nums[0],
            nums[1].abs(),
            DMatrix::from_row_slice(rows, cols, &nums[2..]),
        ));
    }
    let mut times: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let mut lags: Vec<f64> = entries.iter().map(|e| e.1).collect();
    for v in [&mut times, &mut lags] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if times.len() * lags.len() != entries.len() {
        return Err(Error::Config(format!(
            "{}: kernel table is not a full (t, theta) grid",
            path.display()
        )));
    }
    let mut values = vec![vec![DMatrix::zeros(rows, cols); lags.len()]; times.len()];
    for (t, lag, m) in entries {
        let ti = times.binary_search_by(|x| x.total_cmp(&t)).unwrap();
        let li = lags.binary_search_by(|x| x.total_cmp(&lag)).unwrap();
        values[ti][li] = m;
    }
    Ok(TabulatedKernel {
        times,
        lags,
        values,
    })
}

impl ProblemConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Resolve into raw parameters; relative CSV paths are taken from `base`.
    pub fn to_params(&self, base: &Path) -> Result<ProblemParams> {
        let a = matrix("A", &self.a)?;
        let c = matrix("C", &self.c)?;
        let (n, k) = (a.nrows(), c.nrows());
        let noise = match &self.noise_model {
            NoiseConfig::Case1 { eps, lambda } => NoiseModel::Case1 {
                lambda: lambda.resolve(base, n, n)?,
                eps: *eps,
            },
            NoiseConfig::Case2 {
                eps,
                lambda11,
                lambda22,
                lambda12,
            } => NoiseModel::Case2 {
                lambda11: lambda11.resolve(base, n, n)?,
                lambda22: lambda22.resolve(base, k, k)?,
                lambda12: lambda12.resolve(base, n, k)?,
                eps: *eps,
            },
            NoiseConfig::Case3 { d, schedule } => NoiseModel::Case3 {
                d: matrix("D", d)?,
                schedule: DelaySchedule {
                    kind: schedule.clone(),
                    horizon: self.horizon,
                },
            },
        };
        Ok(ProblemParams {
            a,
            b: matrix("B", &self.b)?,
            c,
            f: matrix("F", &self.f)?,
            g: matrix("G", &self.g)?,
            h: matrix("H", &self.h)?,
            horizon: self.horizon,
            initial_cov: matrix("initial_cov", &self.initial_cov)?,
            initial_mean: self
                .initial_mean
                .as_ref()
                .map(|v| DVector::from_column_slice(v)),
            noise,
        })
    }

    /// Build the spec and its grid; `default_n` applies when the file carries no grid.
    pub fn build(&self, base: &Path, default_n: usize) -> Result<(ProblemSpec, TimeGrid)> {
        let spec = build_problem(self.to_params(base)?)?;
        let g = self.grid.unwrap_or(GridConfig {
            n: default_n,
            rho: 1,
        });
        let grid = make_grid(&spec, g.n, g.rho)?;
        Ok((spec, grid))
    }

    /// Serializable form of `params`; tabulated kernels are written inline.
    pub fn from_params(params: &ProblemParams, grid: Option<&TimeGrid>) -> Self {
        let kernel = |k: &KernelShape| match k {
            KernelShape::Zero => KernelConfig::Zero,
            KernelShape::Triangular(s) => KernelConfig::Triangular {
                scale: matrix_to_rows(s),
            },
            KernelShape::Tabulated(t) => KernelConfig::Table {
                times: t.times.clone(),
                lags: t.lags.clone(),
                values: t
                    .values
                    .iter()
                    .map(|row| row.iter().map(matrix_to_rows).collect())
                    .collect(),
            },
        };
        let noise_model = match &params.noise {
            NoiseModel::Case1 { lambda, eps } => NoiseConfig::Case1 {
                eps: *eps,
                lambda: kernel(lambda),
            },
            NoiseModel::Case2 {
                lambda11,
                lambda22,
                lambda12,
                eps,
            } => NoiseConfig::Case2 {
                eps: *eps,
                lambda11: kernel(lambda11),
                lambda22: kernel(lambda22),
                lambda12: kernel(lambda12),
            },
            NoiseModel::Case3 { d, schedule } => NoiseConfig::Case3 {
                d: matrix_to_rows(d),
                schedule: schedule.kind.clone(),
            },
        };
        ProblemConfig {
            a: matrix_to_rows(&params.a),
            b: matrix_to_rows(&params.b),
            c: matrix_to_rows(&params.c),
            f: matrix_to_rows(&params.f),
            g: matrix_to_rows(&params.g),
            h: matrix_to_rows(&params.h),
            horizon: params.horizon,
            initial_cov: matrix_to_rows(&params.initial_cov),
            initial_mean: params
                .initial_mean
                .as_ref()
                .map(|v| v.iter().copied().collect()),
            noise_model,
            grid: grid.map(|g| GridConfig { n: g.n, rho: g.rho }),
        }
    }
}

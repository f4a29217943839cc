//! CSV and JSON artifacts with a checksummed manifest.
//!
//! Matrices are flattened row-major into columns `value_a_b` (`value` for `1×1`). Node tables
//! carry `node, t`; lag tables carry `t, theta` and, for correlation squares, `tau`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::kernels::{BlockSquare, DerivedNoiseStats};
use crate::linalg::MatTable;
use crate::noise::ProblemKernels;
use crate::problem::TimeGrid;
use crate::sim::DesignTables;

/// Direction of the lag axis of a table: filter tables look back, noise kernels look ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagAxis {
    /// cell `l` is `θ = −l·dt`
    Backward,
    /// cell `l` is `θ = +l·dt`
    Forward,
}

impl LagAxis {
    fn theta(self, l: usize, dt: f64) -> f64 {
        match self {
            LagAxis::Backward => 0.0 - l as f64 * dt,
            LagAxis::Forward => l as f64 * dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// Writes files into one directory and records each in the manifest.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    manifest: Manifest,
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            manifest: Manifest::default(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[ManifestEntry] {
        &self.manifest.files
    }

    /// Write `name` through `body` and register it.
    pub fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> Result<()>,
    ) -> Result<PathBuf> {
        let path = self.dir.join(name);
        {
            let mut out = BufWriter::new(File::create(&path)?);
            body(&mut out)?;
            out.flush()?;
        }
        let bytes = std::fs::metadata(&path)?.len();
        let sha256 = file_sha256(&path)?;
        self.manifest.files.retain(|e| e.file != name);
        self.manifest.files.push(ManifestEntry {
            file: name.to_string(),
            bytes,
            sha256,
        });
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        self.write_with(name, |w| Ok(w.write_all(body.as_bytes())?))
    }

    /// Write the manifest; it lists every other file and is not listed itself.
    pub fn finish(self) -> Result<Manifest> {
        let file = File::create(self.dir.join(MANIFEST_FILE))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, &self.manifest)?;
        writeln!(out)?;
        out.flush()?;
        Ok(self.manifest)
    }
}

/// Recompute every checksum of a manifest in `dir`; returns the files that disagree.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest: Manifest = serde_json::from_reader(File::open(dir.join(MANIFEST_FILE))?)?;
    let mut bad = Vec::new();
    for e in &manifest.files {
        let path = dir.join(&e.file);
        if !path.exists() || file_sha256(&path)? != e.sha256 {
            bad.push(e.file.clone());
        }
    }
    Ok(bad)
}

fn value_columns(rows: usize, cols: usize) -> Vec<String> {
    if rows * cols == 1 {
        return vec!["value".into()];
    }
    (0..rows)
        .flat_map(|a| (0..cols).map(move |b| format!("value_{a}_{b}")))
        .collect()
}

fn push_row_major(record: &mut Vec<String>, m: DMatrixView<'_, f64>) {
    for a in 0..m.nrows() {
        for b in 0..m.ncols() {
            record.push(m[(a, b)].to_string());
        }
    }
}

/// One matrix per node: columns `node, t, value...`.
pub fn write_node_table(out: &mut dyn Write, grid: &TimeGrid, mats: &[DMatrix<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (rows, cols) = mats.first().map_or((0, 0), |m| m.shape());
    let mut header = vec!["node".to_string(), "t".to_string()];
    header.extend(value_columns(rows, cols));
    w.write_record(&header)?;
    for (i, m) in mats.iter().enumerate() {
        let mut rec = vec![i.to_string(), grid.t(i).to_string()];
        push_row_major(&mut rec, m.as_view());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A `(node, lag)` table: columns `t, theta, value...`.
pub fn write_lag_table(
    out: &mut dyn Write,
    grid: &TimeGrid,
    table: &MatTable,
    axis: LagAxis,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (rows, cols) = table.shape();
    let mut header = vec!["t".to_string(), "theta".to_string()];
    header.extend(value_columns(rows, cols));
    w.write_record(&header)?;
    let (n_i, n_l) = table.dims();
    for i in 0..n_i {
        for l in 0..n_l {
            let mut rec = vec![grid.t(i).to_string(), axis.theta(l, grid.dt).to_string()];
            push_row_major(&mut rec, table.view(i, l));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Full correlation squares: columns `t, theta, tau, value...` with both lags backward.
pub fn write_square_table(
    out: &mut dyn Write,
    grid: &TimeGrid,
    squares: &[BlockSquare],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (rows, cols) = squares.first().map_or((0, 0), |s| (s.rows, s.cols));
    let mut header = vec!["t".to_string(), "theta".to_string(), "tau".to_string()];
    header.extend(value_columns(rows, cols));
    w.write_record(&header)?;
    for (i, sq) in squares.iter().enumerate() {
        for l in 0..sq.side {
            for m in 0..sq.side {
                let mut rec = vec![
                    grid.t(i).to_string(),
                    LagAxis::Backward.theta(l, grid.dt).to_string(),
                    LagAxis::Backward.theta(m, grid.dt).to_string(),
                ];
                push_row_major(
                    &mut rec,
                    DMatrixView::from_slice(sq.block(l, m), sq.rows, sq.cols),
                );
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Every table of a design. With `dump_kernels`, the noise kernels and any stored full
/// correlation squares are added.
pub fn write_design(
    art: &mut Artifacts,
    design: &DesignTables,
    stats: Option<&DerivedNoiseStats>,
    kernels: &ProblemKernels,
    dump_kernels: bool,
) -> Result<()> {
    let g = &design.grid;
    let f = &design.filter;
    art.write_with("K.csv", |w| write_node_table(w, g, &design.control.k))?;
    art.write_with("U.csv", |w| {
        write_node_table(w, g, &design.propagators.step)
    })?;
    art.write_with("P.csv", |w| write_node_table(w, g, &f.p.p))?;
    art.write_with("state_gain.csv", |w| {
        write_node_table(w, g, &f.gains.state_gain)
    })?;
    art.write_with("alpha_weights.csv", |w| {
        write_lag_table(w, g, &design.alpha_weights, LagAxis::Forward)
    })?;
    art.write_with("Q.csv", |w| {
        write_lag_table(w, g, &f.kernels.q, LagAxis::Backward)
    })?;
    if let Some(m) = &f.kernels.m {
        art.write_with("M.csv", |w| write_lag_table(w, g, m, LagAxis::Backward))?;
    }
    let lagged = [
        ("R.csv", Some(&f.corr.r0)),
        ("N.csv", f.corr.n0.as_ref()),
        ("S.csv", f.corr.s0.as_ref()),
    ];
    for (name, table) in lagged {
        if let Some(t) = table {
            art.write_with(name, |w| write_lag_table(w, g, t, LagAxis::Backward))?;
        }
    }
    if let Some(s) = stats {
        art.write_with("psi.csv", |w| {
            write_lag_table(w, g, &s.psi, LagAxis::Backward)
        })?;
        art.write_with("sigma.csv", |w| {
            write_lag_table(w, g, &s.sigma, LagAxis::Forward)
        })?;
        let extra = [
            ("psi2.csv", s.psi2.as_ref(), LagAxis::Backward),
            (
                "psi1_shifted.csv",
                s.psi1_shifted.as_ref(),
                LagAxis::Backward,
            ),
            (
                "psi2_shifted.csv",
                s.psi2_shifted.as_ref(),
                LagAxis::Backward,
            ),
            ("sigma22.csv", s.sigma22.as_ref(), LagAxis::Forward),
            ("sigma12.csv", s.sigma12.as_ref(), LagAxis::Forward),
        ];
        for (name, table, axis) in extra {
            if let Some(t) = table {
                art.write_with(name, |w| write_lag_table(w, g, t, axis))?;
            }
        }
    }
    if dump_kernels {
        match kernels {
            ProblemKernels::Case1 { lambda } => {
                art.write_with("lambda.csv", |w| {
                    write_lag_table(w, g, &lambda.values, LagAxis::Forward)
                })?;
            }
            ProblemKernels::Case2 {
                lambda11,
                lambda22,
                lambda12,
            } => {
                for (name, k) in [
                    ("lambda11.csv", lambda11),
                    ("lambda22.csv", lambda22),
                    ("lambda12.csv", lambda12),
                ] {
                    art.write_with(name, |w| write_lag_table(w, g, &k.values, LagAxis::Forward))?;
                }
            }
            ProblemKernels::Case3 => {}
        }
        if let Some(inj) = &f.gains.injection {
            art.write_with("injection.csv", |w| {
                write_lag_table(w, g, inj, LagAxis::Backward)
            })?;
        }
        if let Some(full) = &f.corr.full {
            for (name, sq) in [
                ("R_full.csv", &full.r),
                ("N_full.csv", &full.n),
                ("S_full.csv", &full.s),
            ] {
                if !sq.is_empty() {
                    art.write_with(name, |w| write_square_table(w, g, sq))?;
                }
            }
        }
    }
    Ok(())
}

//! Small dense and banded linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

use crate::error::{Error, Result};

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(M + Mᵀ) / 2`, exact on already-symmetric input.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    symmetrize_in_place(&mut out);
    out
}

pub fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    if sym.nrows() == 0 {
        return 0.0;
    }
    sym.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric square root `V diag(sqrt(max(λ,0))) Vᵀ` of a PSD matrix.
pub fn psd_sqrt(sym: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = sym.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// `out += alpha * A x` for a column-major `rows x cols` block.
#[inline]
pub fn matvec_acc(out: &mut [f64], a: &[f64], rows: usize, cols: usize, x: &[f64], alpha: f64) {
    debug_assert_eq!(a.len(), rows * cols);
    for (j, &xj) in x.iter().enumerate().take(cols) {
        let s = alpha * xj;
        if s == 0.0 {
            continue;
        }
        let col = &a[j * rows..(j + 1) * rows];
        for (o, &aij) in out.iter_mut().zip(col) {
            *o += aij * s;
        }
    }
}

/// `out += alpha * Aᵀ x` for a column-major `rows x cols` block.
#[inline]
pub fn matvec_t_acc(out: &mut [f64], a: &[f64], rows: usize, cols: usize, x: &[f64], alpha: f64) {
    for (j, o) in out.iter_mut().enumerate().take(cols) {
        let col = &a[j * rows..(j + 1) * rows];
        let dot: f64 = col.iter().zip(x).map(|(p, q)| p * q).sum();
        *o += alpha * dot;
    }
}

/// A table of equally shaped matrices indexed by `(i, l)`, stored flat and column-major per block.
#[derive(Debug, Clone, PartialEq)]
pub struct MatTable {
    n_i: usize,
    n_l: usize,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatTable {
    pub fn zeros(n_i: usize, n_l: usize, rows: usize, cols: usize) -> Self {
        Self {
            n_i,
            n_l,
            rows,
            cols,
            data: vec![0.0; n_i * n_l * rows * cols],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_i, self.n_l)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    fn offset(&self, i: usize, l: usize) -> usize {
        debug_assert!(
            i < self.n_i && l < self.n_l,
            "({i},{l}) outside {}x{}",
            self.n_i,
            self.n_l
        );
        (i * self.n_l + l) * self.rows * self.cols
    }

    #[inline]
    pub fn block(&self, i: usize, l: usize) -> &[f64] {
        let o = self.offset(i, l);
        &self.data[o..o + self.rows * self.cols]
    }

    #[inline]
    pub fn block_mut(&mut self, i: usize, l: usize) -> &mut [f64] {
        let o = self.offset(i, l);
        let len = self.rows * self.cols;
        &mut self.data[o..o + len]
    }

    pub fn view(&self, i: usize, l: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(self.block(i, l), self.rows, self.cols)
    }

    pub fn view_mut(&mut self, i: usize, l: usize) -> DMatrixViewMut<'_, f64> {
        let (r, c) = (self.rows, self.cols);
        DMatrixViewMut::from_slice(self.block_mut(i, l), r, c)
    }

    pub fn get(&self, i: usize, l: usize) -> DMatrix<f64> {
        self.view(i, l).into_owned()
    }

    pub fn set(&mut self, i: usize, l: usize, m: &DMatrix<f64>) {
        debug_assert_eq!(m.shape(), (self.rows, self.cols));
        self.block_mut(i, l).copy_from_slice(m.as_slice());
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entrywise difference; tables must share layout.
    pub fn max_abs_diff(&self, other: &MatTable) -> f64 {
        assert_eq!(
            (self.n_i, self.n_l, self.rows, self.cols),
            (other.n_i, other.n_l, other.rows, other.cols)
        );
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Symmetric banded matrix kept as its lower band: row `i` stores columns `i-bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandedLower {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedLower {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        if j > i || i - j > self.bw || i >= self.n {
            None
        } else {
            Some(i * (self.bw + 1) + (j + self.bw - i))
        }
    }

    /// Entry `(i, j)` of the lower band (0 outside it).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    /// Symmetric access.
    pub fn sym(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    /// Same matrix with row and column order reversed.
    pub fn reversed(&self) -> Self {
        let mut out = Self::zeros(self.n, self.bw);
        let last = self.n - 1;
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                out.set(i, j, self.sym(last - i, last - j));
            }
        }
        out
    }

    /// Banded Cholesky `S = L Lᵀ`. Pivots in `[-tol, tol]` are clipped to zero (the column is
    /// dropped); a pivot below `-tol` is reported as the error value.
    pub fn cholesky(&self, tol: f64) -> std::result::Result<BandedLower, f64> {
        let n = self.n;
        let bw = self.bw;
        let mut l = Self::zeros(n, bw);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = self.get(j, j);
            for k in lo..j {
                let v = l.get(j, k);
                d -= v * v;
            }
            if d < -tol {
                return Err(d);
            }
            if d <= tol {
                // column is (numerically) in the span of earlier columns
                continue;
            }
            let piv = d.sqrt();
            l.set(j, j, piv);
            let hi = (j + bw).min(n - 1);
            for i in (j + 1)..=hi {
                let mut s = self.get(i, j);
                for k in i.saturating_sub(bw).max(lo)..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / piv);
            }
        }
        Ok(l)
    }
}

/// Dense copy, used by tests and small-grid diagnostics.
pub fn banded_to_dense(b: &BandedLower) -> DMatrix<f64> {
    let n = b.size();
    DMatrix::from_fn(n, n, |i, j| b.get(i, j))
}

pub fn dvec(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}

pub fn check_square(name: &'static str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn check_shape(name: &'static str, m: &DMatrix<f64>, r: usize, c: usize) -> Result<()> {
    if m.shape() != (r, c) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {r}x{c}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

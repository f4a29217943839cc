//! Small dense block products on column-major slices, used in the O(L²) transport loops.

/// `out += alpha·A·B`, `A: r×q`, `B: q×c`.
#[inline]
pub fn mul_acc(out: &mut [f64], a: &[f64], b: &[f64], r: usize, q: usize, c: usize, alpha: f64) {
    for j in 0..c {
        for p in 0..q {
            let s = alpha * b[j * q + p];
            if s == 0.0 {
                continue;
            }
            let col = &a[p * r..(p + 1) * r];
            let o = &mut out[j * r..(j + 1) * r];
            for (oi, ai) in o.iter_mut().zip(col) {
                *oi += ai * s;
            }
        }
    }
}

/// `out += alpha·A·Bᵀ`, `A: r×q`, `B: c×q`.
#[inline]
pub fn mul_t_acc(out: &mut [f64], a: &[f64], b: &[f64], r: usize, q: usize, c: usize, alpha: f64) {
    for j in 0..c {
        for p in 0..q {
            let s = alpha * b[p * c + j];
            if s == 0.0 {
                continue;
            }
            let col = &a[p * r..(p + 1) * r];
            let o = &mut out[j * r..(j + 1) * r];
            for (oi, ai) in o.iter_mut().zip(col) {
                *oi += ai * s;
            }
        }
    }
}

/// `out += alpha·src`.
#[inline]
pub fn axpy(out: &mut [f64], src: &[f64], alpha: f64) {
    for (o, s) in out.iter_mut().zip(src) {
        *o += alpha * s;
    }
}

/// `out = srcᵀ` for an `r×c` source.
#[inline]
pub fn transpose_into(out: &mut [f64], src: &[f64], r: usize, c: usize) {
    for i in 0..r {
        for j in 0..c {
            out[i * c + j] = src[j * r + i];
        }
    }
}

/// Square slice of blocks `(l, m)`, `l, m ∈ 0..side`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSquare {
    pub side: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl BlockSquare {
    pub fn zeros(side: usize, rows: usize, cols: usize) -> Self {
        Self {
            side,
            rows,
            cols,
            data: vec![0.0; side * side * rows * cols],
        }
    }

    #[inline]
    pub fn block(&self, l: usize, m: usize) -> &[f64] {
        let len = self.rows * self.cols;
        let o = (l * self.side + m) * len;
        &self.data[o..o + len]
    }

    #[inline]
    pub fn block_mut(&mut self, l: usize, m: usize) -> &mut [f64] {
        let len = self.rows * self.cols;
        let o = (l * self.side + m) * len;
        &mut self.data[o..o + len]
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }
}

//! Dense row-major tensors and axis-wise contraction with small matrices.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

/// Contract `input` (shape `dims`) along `axis` with `mat` (`mat.cols == dims[axis]`).
/// Returns the new tensor; its shape has `dims[axis]` replaced by `mat.rows`.
pub fn contract(input: &[f64], dims: &[usize], axis: usize, mat: &Mat) -> Vec<f64> {
    debug_assert_eq!(mat.cols, dims[axis]);
    debug_assert_eq!(input.len(), dims.iter().product::<usize>());
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let (n_in, n_out) = (dims[axis], mat.rows);
    let mut out = vec![0.0; outer * n_out * inner];
    for o in 0..outer {
        let src = &input[o * n_in * inner..(o + 1) * n_in * inner];
        let dst = &mut out[o * n_out * inner..(o + 1) * n_out * inner];
        for r in 0..n_out {
            let row = &mat.data[r * n_in..(r + 1) * n_in];
            let d = &mut dst[r * inner..(r + 1) * inner];
            for (k, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let s = &src[k * inner..(k + 1) * inner];
                for (x, &y) in d.iter_mut().zip(s) {
                    *x += m * y;
                }
            }
        }
    }
    out
}

/// Apply one matrix per axis (a Kronecker product) to a tensor.
pub fn contract_all(input: &[f64], dims: &[usize], mats: &[&Mat]) -> (Vec<f64>, Vec<usize>) {
    let mut cur = input.to_vec();
    let mut shape = dims.to_vec();
    for (axis, m) in mats.iter().enumerate() {
        cur = contract(&cur, &shape, axis, m);
        shape[axis] = m.rows;
    }
    (cur, shape)
}

/// Flat row-major index of a multi-index.
pub fn flat_index(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

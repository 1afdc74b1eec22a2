//! Dense order-N tensors with mode-n unfolding, folding and mode products.
//!
//! Canonical layout: the flat `data` buffer stores entries so that the
//! *first* index varies fastest, i.e. element `(i_0, i_1, ..., i_{N-1})`
//! lives at `i_0 + I_0 * (i_1 + I_1 * (i_2 + ...))`. Every routine in this
//! crate (unfolding column order, vectorization, CSV dumps) is defined in
//! terms of this one layout.
//!
//! Mode-k unfolding maps element `(i_0, ..., i_{N-1})` to row `i_k` and
//! column `sum over o != k of i_o * stride_o`, where the strides enumerate
//! the remaining modes in ascending order with the lowest remaining mode
//! varying fastest. For an order-2 tensor this makes `unfold(t, 0)` the
//! matrix itself and `unfold(t, 1)` its transpose.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense order-N tensor of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from a shape and a flat buffer in canonical layout.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::InvalidArgument(
                "tensor order must be at least 1".into(),
            ));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "tensor shape entries must be >= 1, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "data length {} does not match shape {:?} (expected {})",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Tensor::new(shape, vec![0.0; len])
    }

    /// Wraps a vector as an order-1 tensor.
    pub fn from_vector(v: &DVector<f64>) -> Self {
        Tensor {
            shape: vec![v.len()],
            data: v.as_slice().to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Strides of the canonical layout (first index fastest).
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for j in 1..self.shape.len() {
            s[j] = s[j - 1] * self.shape[j - 1];
        }
        s
    }

    /// Element access by multi-index; panics on out-of-range (test helper).
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order(), "index order mismatch");
        let strides = self.strides();
        let mut lin = 0;
        for (j, (&i, &d)) in idx.iter().zip(self.shape.iter()).enumerate() {
            assert!(i < d, "index {i} out of range for mode {j} (dim {d})");
            lin += i * strides[j];
        }
        self.data[lin]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        assert_eq!(idx.len(), self.order(), "index order mismatch");
        let strides = self.strides();
        let mut lin = 0;
        for (j, (&i, &d)) in idx.iter().zip(self.shape.iter()).enumerate() {
            assert!(i < d, "index {i} out of range for mode {j} (dim {d})");
            lin += i * strides[j];
        }
        self.data[lin] = value;
    }

    /// Elementwise difference; shapes must match.
    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "cannot subtract tensors of shape {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Mode-k unfolding: an `I_k x (prod of other dims)` matrix whose
    /// columns are the mode-k fibers, columns ordered lexicographically
    /// over the remaining modes with the lowest remaining mode fastest.
    pub fn unfold(&self, mode: usize) -> Result<DMatrix<f64>> {
        let n = self.order();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        // Mode 0 is a plain reshape under the canonical layout.
        if mode == 0 {
            return Ok(DMatrix::from_column_slice(rows, cols, &self.data));
        }
        let strides = self.strides();
        let mut m = DMatrix::zeros(rows, cols);
        for lin in 0..self.data.len() {
            let (row, col) = self.unfold_coords(lin, mode, &strides);
            m[(row, col)] = self.data[lin];
        }
        Ok(m)
    }

    /// Maps a linear index to its (row, column) position in the mode-k
    /// unfolding.
    fn unfold_coords(&self, lin: usize, mode: usize, strides: &[usize]) -> (usize, usize) {
        let mut row = 0;
        let mut col = 0;
        let mut col_stride = 1;
        for j in 0..self.order() {
            let idx = (lin / strides[j]) % self.shape[j];
            if j == mode {
                row = idx;
            } else {
                col += idx * col_stride;
                col_stride *= self.shape[j];
            }
        }
        (row, col)
    }

    /// Inverse of `unfold`: reassembles a tensor of the given shape from its
    /// mode-k unfolding. Exact (bit-identical) roundtrip with `unfold`.
    pub fn fold(m: &DMatrix<f64>, mode: usize, shape: &[usize]) -> Result<Tensor> {
        let n = shape.len();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        let total: usize = shape.iter().product();
        let rows = shape[mode];
        let cols = total / rows;
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::ShapeMismatch(format!(
                "fold expects a {}x{} matrix for shape {:?} on mode {}, got {}x{}",
                rows,
                cols,
                shape,
                mode,
                m.nrows(),
                m.ncols()
            )));
        }
        let mut t = Tensor::zeros(shape.to_vec())?;
        let strides = t.strides();
        for lin in 0..t.data.len() {
            let (row, col) = t.unfold_coords(lin, mode, &strides);
            t.data[lin] = m[(row, col)];
        }
        Ok(t)
    }

    /// Mode-k product with a matrix `w` of shape `J x I_k`: replaces every
    /// mode-k fiber `f` by `w * f`, so `unfold(result, k) = w * unfold(t, k)`.
    pub fn mode_product(&self, w: &DMatrix<f64>, mode: usize) -> Result<Tensor> {
        let n = self.order();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        if w.ncols() != self.shape[mode] {
            return Err(Error::ShapeMismatch(format!(
                "mode-{} product needs a matrix with {} columns, got {}x{}",
                mode,
                self.shape[mode],
                w.nrows(),
                w.ncols()
            )));
        }
        let unfolded = self.unfold(mode)?;
        let projected = w * unfolded;
        let mut new_shape = self.shape.clone();
        new_shape[mode] = w.nrows();
        Tensor::fold(&projected, mode, &new_shape)
    }

    /// Flattens to a vector in canonical layout order.
    pub fn vectorize(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

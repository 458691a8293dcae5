use ndarray::Array2;

use crate::error::{CpcpError, Result};

/// The observed index set Ω, stored as a row-major sorted coordinate list.
///
/// Every mask-supported quantity in the crate ([`MaskedValues`](super::MaskedValues))
/// is a value array parallel to this list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    row_idx: Vec<u32>,
    col_idx: Vec<u32>,
    /// Entries of row `i` occupy positions `row_ptr[i]..row_ptr[i + 1]`.
    row_ptr: Vec<usize>,
}

impl ObservationMask {
    /// Builds a mask from arbitrary-order index pairs.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CpcpError::InvalidMask(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if rows > u32::MAX as usize || cols > u32::MAX as usize {
            return Err(CpcpError::InvalidMask(format!(
                "dimensions {rows}x{cols} overflow 32-bit indices"
            )));
        }
        if entries.is_empty() {
            return Err(CpcpError::InvalidMask("mask has no entries".into()));
        }
        entries.sort_unstable();
        for w in entries.windows(2) {
            if w[0] == w[1] {
                return Err(CpcpError::InvalidMask(format!(
                    "duplicate entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut col_idx = Vec::with_capacity(entries.len());
        for &(i, j) in &entries {
            if i >= rows || j >= cols {
                return Err(CpcpError::InvalidMask(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            row_idx.push(i as u32);
            col_idx.push(j as u32);
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for &i in &row_idx {
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_idx,
            col_idx,
            row_ptr,
        })
    }

    /// Every entry observed; P_Ω is then the identity.
    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        let entries = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .collect();
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.row_idx.len()
    }

    /// Always false for a constructed mask; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.row_idx.is_empty()
    }

    /// Sampling ratio |Ω| / (m·n).
    pub fn rho(&self) -> f64 {
        self.len() as f64 / (self.rows as f64 * self.cols as f64)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.rows * self.cols
    }

    pub fn row_indices(&self) -> &[u32] {
        &self.row_idx
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_idx
    }

    /// CSR offsets: row `i` owns positions `row_offsets()[i]..row_offsets()[i + 1]`.
    pub fn row_offsets(&self) -> &[usize] {
        &self.row_ptr
    }

    /// `(i, j)` of the `p`-th observed entry.
    #[inline]
    pub fn entry(&self, p: usize) -> (usize, usize) {
        (self.row_idx[p] as usize, self.col_idx[p] as usize)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.row_idx
            .iter()
            .zip(&self.col_idx)
            .map(|(&i, &j)| (i as usize, j as usize))
    }

    /// Position of `(i, j)` in the coordinate list.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i as u32, j as u32);
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            let cur = (self.row_idx[mid], self.col_idx[mid]);
            match cur.cmp(&key) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub(crate) fn check_dense(&self, dense: &Array2<f64>) -> Result<()> {
        if dense.dim() != self.shape() {
            return Err(CpcpError::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", dense.nrows(), dense.ncols()),
            ));
        }
        Ok(())
    }
}

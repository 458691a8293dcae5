use ndarray::Array2;

use super::ObservationMask;
use crate::error::{CpcpError, Result};
use crate::linalg::{dot_unrolled, LinearOperator};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Values of a matrix supported on Ω, parallel to the mask's coordinate list.
///
/// Entries off Ω are zero by construction; entries on Ω may also be zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MaskedValues(pub Vec<f64>);

impl MaskedValues {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).collect::<KahanSum>().value()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).collect::<KahanSum>().value()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn dot(&self, other: &MaskedValues) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|x| **x != 0.0).count()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &MaskedValues) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }

    /// Dense m×n matrix with these values placed on Ω.
    pub fn to_dense(&self, mask: &ObservationMask) -> Array2<f64> {
        let mut out = Array2::zeros(mask.shape());
        for (p, (i, j)) in mask.iter().enumerate() {
            out[[i, j]] = self.0[p];
        }
        out
    }

    /// Borrow together with its mask as a linear operator.
    pub fn view<'a>(&'a self, mask: &'a ObservationMask) -> MaskedView<'a> {
        MaskedView {
            mask,
            values: &self.0,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).collect::<KahanSum>().value()
}

/// P_Ω[dense]: the entries of `dense` at each observed position.
pub fn project_onto_mask(mask: &ObservationMask, dense: &Array2<f64>) -> Result<MaskedValues> {
    mask.check_dense(dense)?;
    Ok(MaskedValues(mask.iter().map(|(i, j)| dense[[i, j]]).collect()))
}

/// A mask-supported matrix viewed as an m×n operator.
#[derive(Debug, Clone, Copy)]
pub struct MaskedView<'a> {
    pub mask: &'a ObservationMask,
    pub values: &'a [f64],
}

impl<'a> MaskedView<'a> {
    pub fn new(mask: &'a ObservationMask, values: &'a [f64]) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(CpcpError::dims(mask.len(), values.len()));
        }
        Ok(Self { mask, values })
    }
}

impl LinearOperator for MaskedView<'_> {
    fn nrows(&self) -> usize {
        self.mask.rows()
    }

    fn ncols(&self) -> usize {
        self.mask.cols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let cols = self.mask.col_indices();
        let n = self.mask.cols();
        for (yi, w) in y.iter_mut().zip(self.mask.row_offsets().windows(2)) {
            let values = &self.values[w[0]..w[1]];
            // a fully observed row lists columns 0..n in order
            *yi = if values.len() == n {
                dot_unrolled(values, x)
            } else {
                let mut acc = [0.0f64; 4];
                for (q, (&j, &a)) in cols[w[0]..w[1]].iter().zip(values).enumerate() {
                    acc[q % 4] += a * x[j as usize];
                }
                (acc[0] + acc[1]) + (acc[2] + acc[3])
            };
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        let cols = self.mask.col_indices();
        let n = self.mask.cols();
        for (&yi, w) in y.iter().zip(self.mask.row_offsets().windows(2)) {
            if yi == 0.0 {
                continue;
            }
            let values = &self.values[w[0]..w[1]];
            if values.len() == n {
                for (xj, &a) in x.iter_mut().zip(values) {
                    *xj += a * yi;
                }
            } else {
                for (&j, &a) in cols[w[0]..w[1]].iter().zip(values) {
                    x[j as usize] += a * yi;
                }
            }
        }
    }
}

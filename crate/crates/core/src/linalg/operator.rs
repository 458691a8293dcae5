use ndarray::{Array2, ArrayView1, ArrayView2};

/// A real m×n linear map accessible only through products with A and Aᵀ.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`, with `x.len() == ncols()` and `y.len() == nrows()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = Aᵀ y`.
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]);
}

impl LinearOperator for ArrayView2<'_, f64> {
    fn nrows(&self) -> usize {
        self.dim().0
    }

    fn ncols(&self) -> usize {
        self.dim().1
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = self.dot(&ArrayView1::from(x));
        y.copy_from_slice(r.as_slice().expect("fresh array is contiguous"));
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        let r = self.t().dot(&ArrayView1::from(y));
        x.copy_from_slice(r.as_slice().expect("fresh array is contiguous"));
    }
}

impl LinearOperator for Array2<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.view().apply(x, y)
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        self.view().apply_transpose(y, x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        (**self).apply_transpose(y, x)
    }
}

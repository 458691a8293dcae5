use ndarray::{Array2, ArrayView2};

use super::{MaskedValues, ObservationMask};
use crate::linalg::{full_svd, jacobi_svd, norm2};

/// Dense caches are kept automatically up to this many entries.
pub const DENSE_CACHE_LIMIT: usize = 4_000_000;

/// Relative size below which accumulated coefficients are dropped.
const COEFF_DROP: f64 = 1e-14;

/// L = Σᵢ cᵢ · uᵢ vᵢᵀ accumulated one rank-one term at a time.
///
/// Factors are stored column by column in flat buffers. An optional dense
/// copy of L is updated alongside the factors; it is what makes entry access
/// O(1) on desk-scale problems.
#[derive(Debug, Clone)]
pub struct LowRankIterate {
    rows: usize,
    cols: usize,
    left: Vec<f64>,
    right: Vec<f64>,
    coeffs: Vec<f64>,
    dense: Option<Array2<f64>>,
}

impl LowRankIterate {
    /// The zero matrix, with a dense cache when m·n ≤ [`DENSE_CACHE_LIMIT`].
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::zeros_with_cache(rows, cols, rows * cols <= DENSE_CACHE_LIMIT)
    }

    pub fn zeros_with_cache(rows: usize, cols: usize, dense_cache: bool) -> Self {
        Self {
            rows,
            cols,
            left: Vec::new(),
            right: Vec::new(),
            coeffs: Vec::new(),
            dense: dense_cache.then(|| Array2::zeros((rows, cols))),
        }
    }

    /// Builds `Σ s_k u_k v_kᵀ` from column-factor matrices.
    pub fn from_factors(u: ArrayView2<f64>, s: &[f64], v: ArrayView2<f64>, dense_cache: bool) -> Self {
        let mut out = Self::zeros_with_cache(u.nrows(), v.nrows(), false);
        for (k, &c) in s.iter().enumerate() {
            if c != 0.0 {
                out.left.extend(u.column(k).iter());
                out.right.extend(v.column(k).iter());
                out.coeffs.push(c);
            }
        }
        if dense_cache {
            out.dense = Some(out.factor_product());
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored rank-one terms.
    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn left(&self, k: usize) -> &[f64] {
        &self.left[k * self.rows..(k + 1) * self.rows]
    }

    pub fn right(&self, k: usize) -> &[f64] {
        &self.right[k * self.cols..(k + 1) * self.cols]
    }

    pub fn dense_cache(&self) -> Option<&Array2<f64>> {
        self.dense.as_ref()
    }

    pub fn has_dense_cache(&self) -> bool {
        self.dense.is_some()
    }

    /// Σ|cᵢ| with unit factors: an upper bound on ‖L‖_*.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// `L ← (1 − γ)·L + γ·coeff·u vᵀ`.
    ///
    /// `u` and `v` should be unit vectors for the coefficient bookkeeping to
    /// bound the nuclear norm.
    pub fn convex_step(&mut self, gamma: f64, coeff: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        let keep = 1.0 - gamma;
        for c in &mut self.coeffs {
            *c *= keep;
        }
        let add = gamma * coeff;
        if let Some(d) = &mut self.dense {
            for (i, mut row) in d.rows_mut().into_iter().enumerate() {
                let ui = add * u[i];
                for (x, vj) in row.iter_mut().zip(v) {
                    *x = keep * *x + ui * vj;
                }
            }
        }
        if add != 0.0 {
            self.left.extend_from_slice(u);
            self.right.extend_from_slice(v);
            self.coeffs.push(add);
        }
        self.drop_negligible();
    }

    /// `L ← factor · L`.
    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
        if let Some(d) = &mut self.dense {
            *d *= factor;
        }
        self.drop_negligible();
    }

    fn drop_negligible(&mut self) {
        let cmax = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if self.coeffs.iter().all(|c| c.abs() > COEFF_DROP * cmax) {
            return;
        }
        let (m, n) = (self.rows, self.cols);
        let mut w = 0;
        for k in 0..self.coeffs.len() {
            if self.coeffs[k].abs() > COEFF_DROP * cmax {
                if w != k {
                    self.coeffs[w] = self.coeffs[k];
                    self.left.copy_within(k * m..(k + 1) * m, w * m);
                    self.right.copy_within(k * n..(k + 1) * n, w * n);
                }
                w += 1;
            }
        }
        self.coeffs.truncate(w);
        self.left.truncate(w * m);
        self.right.truncate(w * n);
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if let Some(d) = &self.dense {
            return d[[i, j]];
        }
        (0..self.rank())
            .map(|k| self.coeffs[k] * self.left[k * self.rows + i] * self.right[k * self.cols + j])
            .sum()
    }

    /// P_Ω[L].
    pub fn masked_entries(&self, mask: &ObservationMask) -> MaskedValues {
        assert_eq!(mask.shape(), (self.rows, self.cols));
        if let Some(d) = &self.dense {
            return MaskedValues(mask.iter().map(|(i, j)| d[[i, j]]).collect());
        }
        let mut out = vec![0.0; mask.len()];
        let (rows, cols) = (mask.row_indices(), mask.col_indices());
        for k in 0..self.rank() {
            let c = self.coeffs[k];
            let u = self.left(k);
            let v = self.right(k);
            for p in 0..out.len() {
                out[p] += c * u[rows[p] as usize] * v[cols[p] as usize];
            }
        }
        MaskedValues(out)
    }

    fn factor_product(&self) -> Array2<f64> {
        let r = self.rank();
        if r == 0 {
            return Array2::zeros((self.rows, self.cols));
        }
        let mut us = Array2::from_shape_fn((self.rows, r), |(i, k)| self.left[k * self.rows + i]);
        for (k, mut col) in us.columns_mut().into_iter().enumerate() {
            col *= self.coeffs[k];
        }
        let vt = Array2::from_shape_fn((r, self.cols), |(k, j)| self.right[k * self.cols + j]);
        us.dot(&vt)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match &self.dense {
            Some(d) => d.clone(),
            None => self.factor_product(),
        }
    }

    /// Largest deviation between the dense cache and the factor sum.
    pub fn cache_deviation(&self) -> Option<f64> {
        let d = self.dense.as_ref()?;
        let f = self.factor_product();
        Some((d - &f).iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// Singular values of L, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rank() == 0 {
            return Vec::new();
        }
        if self.rank() > self.rows.min(self.cols) {
            let dense = self.to_dense();
            return full_svd(dense.view()).s;
        }
        let (_, ru) = thin_qr(&self.left, self.rows, self.rank());
        let (_, rv) = thin_qr(&self.right, self.cols, self.rank());
        let core = core_matrix(&ru, &self.coeffs, &rv);
        jacobi_svd(core.view()).s
    }

    /// Exact ‖L‖_*.
    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// Re-factors L as a thin SVD, so afterwards rank ≤ min(m, n) and the
    /// coefficients are the singular values.
    pub fn compress(&mut self) {
        if self.rank() == 0 {
            return;
        }
        let svd = if let Some(d) = &self.dense {
            full_svd(d.view())
        } else {
            let r = self.rank();
            let (qu, ru) = thin_qr(&self.left, self.rows, r);
            let (qv, rv) = thin_qr(&self.right, self.cols, r);
            let core = core_matrix(&ru, &self.coeffs, &rv);
            let small = jacobi_svd(core.view());
            crate::linalg::Svd {
                u: qu.dot(&small.u),
                s: small.s,
                v: qv.dot(&small.v),
            }
        };
        let smax = svd.s.first().copied().unwrap_or(0.0);
        self.left.clear();
        self.right.clear();
        self.coeffs.clear();
        for (k, &s) in svd.s.iter().enumerate() {
            if s > COEFF_DROP * smax {
                self.left.extend(svd.u.column(k).iter());
                self.right.extend(svd.v.column(k).iter());
                self.coeffs.push(s);
            }
        }
    }

    /// Compresses once the stored rank exceeds twice min(m, n).
    pub fn maybe_compress(&mut self) -> bool {
        if self.rank() > 2 * self.rows.min(self.cols) {
            self.compress();
            true
        } else {
            false
        }
    }
}

/// Thin QR of the `r` column blocks in `flat` (each of length `len`).
///
/// Numerically dependent columns add no new basis vector, so Q is len×k and
/// R is k×r with k ≤ r.
fn thin_qr(flat: &[f64], len: usize, r: usize) -> (Array2<f64>, Array2<f64>) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut rcols: Vec<Vec<f64>> = Vec::with_capacity(r);
    for j in 0..r {
        let col = &flat[j * len..(j + 1) * len];
        let mut w = col.to_vec();
        let mut coef = vec![0.0; basis.len()];
        for _ in 0..2 {
            for (c, q) in coef.iter_mut().zip(&basis) {
                let p: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                *c += p;
                for (x, qi) in w.iter_mut().zip(q) {
                    *x -= p * qi;
                }
            }
        }
        let nrm = norm2(&w);
        if nrm > 1e-12 * norm2(col).max(f64::MIN_POSITIVE) {
            for x in &mut w {
                *x /= nrm;
            }
            basis.push(w);
            coef.push(nrm);
        }
        rcols.push(coef);
    }
    let k = basis.len();
    let q = Array2::from_shape_fn((len, k), |(i, c)| basis[c][i]);
    let rm = Array2::from_shape_fn((k, r), |(i, j)| rcols[j].get(i).copied().unwrap_or(0.0));
    (q, rm)
}

fn core_matrix(ru: &Array2<f64>, coeffs: &[f64], rv: &Array2<f64>) -> Array2<f64> {
    let mut scaled = ru.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        col *= coeffs[j];
    }
    scaled.dot(&rv.t())
}

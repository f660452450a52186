use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Per-column centering and scaling from (weighted) training statistics.
/// Constant columns keep a unit scale and are flagged so solvers can skip them.
#[derive(Debug, Clone)]
pub(crate) struct Standardizer<F> {
    pub mean: Vec<F>,
    pub scale: Vec<F>,
    pub constant: Vec<bool>,
}

impl<F: Scalar> Standardizer<F> {
    pub fn fit(x: &Matrix<F>, weights: Option<&[F]>) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let w = |i: usize| weights.map_or(F::one(), |w| w[i]);
        let total: F = (0..n).map(w).sum();
        let mut mean = vec![F::zero(); p];
        for i in 0..n {
            let wi = w(i);
            for (m, &v) in mean.iter_mut().zip(x.row(i)) {
                *m = *m + wi * v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / total);
        let mut var = vec![F::zero(); p];
        for i in 0..n {
            let wi = w(i);
            for j in 0..p {
                let d = x.get(i, j) - mean[j];
                var[j] = var[j] + wi * d * d;
            }
        }
        let mut scale = Vec::with_capacity(p);
        let mut constant = Vec::with_capacity(p);
        for (j, v) in var.iter().enumerate() {
            let sd = (*v / total).sqrt();
            // relative threshold so large-magnitude columns with rounding noise count as constant
            let tiny = F::epsilon().sqrt() * (F::one() + mean[j].abs());
            let is_const = !(sd > tiny);
            constant.push(is_const);
            scale.push(if is_const { F::one() } else { sd });
        }
        Self { mean, scale, constant }
    }

    #[inline]
    pub fn transform_row(&self, row: &[F], out: &mut [F]) {
        for j in 0..row.len() {
            out[j] = if self.constant[j] {
                F::zero()
            } else {
                (row[j] - self.mean[j]) / self.scale[j]
            };
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

use super::standardize::Standardizer;
use super::{check_predict, check_training_set, Regressor};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::scalar::Scalar;

/// Linear least squares with an L2 penalty on standardized slopes.
///
/// Minimizes `sum_i w_i (y_i - a - z_i' b)^2 + l2 |b|^2` where `z` are the
/// features standardized with training statistics. The intercept is not
/// penalized. Coefficients are reported on the original feature scale.
#[derive(Debug, Clone)]
pub struct Ridge<F> {
    l2: f64,
    fitted: Option<Fitted<F>>,
}

#[derive(Debug, Clone)]
struct Fitted<F> {
    intercept: F,
    coef: Vec<F>,
}

impl<F: Scalar> Ridge<F> {
    pub fn new(l2: f64) -> Self {
        Self { l2, fitted: None }
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn intercept(&self) -> Result<F> {
        self.fitted.as_ref().map(|f| f.intercept).ok_or(Error::NotFitted)
    }

    pub fn coefficients(&self) -> Result<&[F]> {
        self.fitted.as_ref().map(|f| f.coef.as_slice()).ok_or(Error::NotFitted)
    }
}

impl<F: Scalar> Regressor<F> for Ridge<F> {
    fn fit(&mut self, x: &Matrix<F>, y: &[F], weights: Option<&[F]>) -> Result<()> {
        check_training_set(x, y, weights)?;
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(Error::invalid("ridge penalty must be finite and non-negative"));
        }
        self.fitted = None;
        let (n, p) = (x.rows(), x.cols());
        let w = |i: usize| weights.map_or(F::one(), |w| w[i]);
        let total: F = (0..n).map(w).sum();
        let y_mean = (0..n).map(|i| w(i) * y[i]).sum::<F>() / total;

        let st = Standardizer::fit(x, weights);
        let mut gram = SymMatrix::zeros(p);
        let mut rhs = vec![F::zero(); p];
        let mut z = vec![F::zero(); p];
        for i in 0..n {
            st.transform_row(x.row(i), &mut z);
            let wi = w(i);
            gram.rank_one_upper(&z, wi);
            let r = wi * (y[i] - y_mean);
            for j in 0..p {
                rhs[j] = rhs[j] + r * z[j];
            }
        }
        gram.mirror_upper();
        let l2 = F::of(self.l2);
        for j in 0..p {
            // constant columns are all-zero after standardization; pin them to zero
            let pen = if st.constant[j] { F::one() } else { l2 };
            gram.add(j, j, pen);
        }
        let beta = gram.cholesky_solve(&rhs)?;
        let coef: Vec<F> = (0..p)
            .map(|j| if st.constant[j] { F::zero() } else { beta[j] / st.scale[j] })
            .collect();
        let intercept = y_mean - (0..p).map(|j| coef[j] * st.mean[j]).sum::<F>();
        if !intercept.is_finite() || coef.iter().any(|c| !c.is_finite()) {
            return Err(Error::Singular);
        }
        self.fitted = Some(Fitted { intercept, coef });
        Ok(())
    }

    fn predict(&self, x: &Matrix<F>) -> Result<Vec<F>> {
        let f = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        check_predict(x, f.coef.len())?;
        Ok((0..x.rows())
            .map(|i| f.intercept + crate::linalg::dot(x.row(i), &f.coef))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_target_is_reproduced() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, ((i * 7) % 5) as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 1.5 + 2.0 * r[0] - 0.5 * r[1]).collect();
        let mut m = Ridge::<f64>::new(0.0);
        m.fit(&x, &y, None).unwrap();
        for (p, t) in m.predict(&x).unwrap().iter().zip(&y) {
            assert!((p - t).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_target_predicts_constant() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [2.0, 3.0], [4.0, 4.0]]).unwrap();
        let mut m = Ridge::<f64>::new(1e-3);
        m.fit(&x, &[7.0; 3], None).unwrap();
        for p in m.predict(&x).unwrap() {
            assert!((p - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_closed_form() {
        // x = {1, 3} has mean 2 and population sd 1, so z = {-1, 1}.
        // slope_z = z'(y - ybar) / (z'z + l2) = 6 / 3 = 2; intercept = 6 - 2 * 2.
        let x = Matrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let mut m = Ridge::<f64>::new(1.0);
        m.fit(&x, &[3.0, 9.0], None).unwrap();
        assert!((m.coefficients().unwrap()[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_gets_zero_weight() {
        let x = Matrix::from_rows(&[[1.0, 3.0], [2.0, 3.0], [3.0, 3.0]]).unwrap();
        let mut m = Ridge::<f64>::new(0.0);
        m.fit(&x, &[2.0, 4.0, 6.0], None).unwrap();
        assert_eq!(m.coefficients().unwrap()[1], 0.0);
        assert!((m.coefficients().unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let x = Matrix::<f32>::from_rows(&[[0.0f32], [1.0], [2.0], [3.0]]).unwrap();
        let mut m = Ridge::<f32>::new(0.0);
        m.fit(&x, &[1.0, 3.0, 5.0, 7.0], None).unwrap();
        let p = m.predict(&x).unwrap();
        assert!((p[3] - 7.0).abs() < 1e-4);
    }
}

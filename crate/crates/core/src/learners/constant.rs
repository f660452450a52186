use super::{check_training_set, Regressor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Predicts the (weighted) training mean everywhere. Useful as a deliberately
/// misspecified outcome model.
#[derive(Debug, Clone, Default)]
pub struct ConstantRegressor<F> {
    value: Option<F>,
}

impl<F: Scalar> Regressor<F> for ConstantRegressor<F> {
    fn fit(&mut self, x: &Matrix<F>, y: &[F], weights: Option<&[F]>) -> Result<()> {
        check_training_set(x, y, weights)?;
        let (num, den) = match weights {
            Some(w) => (
                y.iter().zip(w).map(|(&a, &b)| a * b).sum::<F>(),
                w.iter().copied().sum::<F>(),
            ),
            None => (y.iter().copied().sum::<F>(), F::from_usize_lossy(y.len())),
        };
        self.value = Some(num / den);
        Ok(())
    }

    fn predict(&self, x: &Matrix<F>) -> Result<Vec<F>> {
        let v = self.value.ok_or(Error::NotFitted)?;
        Ok(vec![v; x.rows()])
    }
}

use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::DEFAULT_L2;
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix, SymMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: DEFAULT_L2,
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

/// Binary logistic regression fitted by damped Newton iterations.
///
/// Stops once the gradient norm divided by the row count drops below `tol`.
///
/// The objective is `sum_i logloss_i + l2 |b|^2` over standardized features,
/// with an unpenalized intercept. `theta` below is `[intercept, b...]` in the
/// standardized coordinates.
#[derive(Debug, Clone)]
pub struct LogisticRegression<F> {
    params: LogisticParams,
    fitted: Option<Fitted<F>>,
}

#[derive(Debug, Clone)]
struct Fitted<F> {
    st: Standardizer<F>,
    theta: Vec<F>,
    iterations: usize,
    converged: bool,
    gradient_norm: F,
}

#[inline]
fn sigmoid<F: Scalar>(eta: F) -> F {
    if eta >= F::zero() {
        F::one() / (F::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (F::one() + e)
    }
}

#[inline]
fn softplus<F: Scalar>(eta: F) -> F {
    eta.max(F::zero()) + (-eta.abs()).exp().ln_1p()
}

impl<F: Scalar> LogisticRegression<F> {
    pub fn new(params: LogisticParams) -> Self {
        Self { params, fitted: None }
    }

    pub fn params(&self) -> LogisticParams {
        self.params
    }

    pub fn fit(&mut self, x: &Matrix<F>, labels: &[bool]) -> Result<()> {
        self.fitted = None;
        if x.rows() == 0 || labels.len() != x.rows() {
            return Err(Error::invalid("logistic fit needs one label per non-empty row"));
        }
        if !x.all_finite() {
            return Err(Error::invalid("non-finite training data"));
        }
        let positives = labels.iter().filter(|&&b| b).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::SingleClass);
        }
        let st = Standardizer::fit(x, None);
        let z = standardized_design(&st, x);
        let p = st.dim() + 1;
        let l2 = F::of(self.params.l2);
        // tolerance on the per-row gradient, so it does not tighten with n
        let tol = F::of(self.params.tol) * F::from_usize_lossy(labels.len());

        // start from the marginal log-odds
        let frac = F::from_usize_lossy(positives) / F::from_usize_lossy(labels.len());
        let mut theta = vec![F::zero(); p];
        theta[0] = (frac / (F::one() - frac)).ln();
        let mut obj = objective(&z, labels, &theta, l2);
        let mut grad = vec![F::zero(); p];
        let mut hess = SymMatrix::zeros(p);
        let mut iterations = 0;
        let mut converged = false;
        let mut gnorm;
        loop {
            gradient_and_hessian(&z, labels, &theta, l2, &st.constant, &mut grad, &mut hess);
            gnorm = norm(&grad);
            if gnorm < tol {
                converged = true;
                break;
            }
            if iterations >= self.params.max_iter {
                break;
            }
            iterations += 1;
            let step = newton_direction(&hess, &grad)?;
            let slope = -crate::linalg::dot(&grad, &step);
            let mut t = F::one();
            let mut accepted = false;
            let mut stalled = false;
            for _ in 0..40 {
                let cand: Vec<F> = theta.iter().zip(&step).map(|(&a, &d)| a - t * d).collect();
                let c_obj = objective(&z, labels, &cand, l2);
                if c_obj <= obj + F::of(1e-4) * t * slope {
                    stalled = c_obj >= obj;
                    theta = cand;
                    obj = c_obj;
                    accepted = true;
                    break;
                }
                t = t * F::of(0.5);
            }
            if stalled {
                // rounding floor: the objective can no longer decrease
                gradient_and_hessian(&z, labels, &theta, l2, &st.constant, &mut grad, &mut hess);
                gnorm = norm(&grad);
                converged = gnorm < tol;
                break;
            }
            if !accepted {
                // no representable decrease left; report the state as is
                gradient_and_hessian(&z, labels, &theta, l2, &st.constant, &mut grad, &mut hess);
                gnorm = norm(&grad);
                converged = gnorm < tol;
                break;
            }
        }
        self.fitted = Some(Fitted {
            st,
            theta,
            iterations,
            converged,
            gradient_norm: gnorm,
        });
        Ok(())
    }

    fn fitted(&self) -> Result<&Fitted<F>> {
        self.fitted.as_ref().ok_or(Error::NotFitted)
    }

    /// P(label = 1 | x), kept strictly inside (0, 1).
    pub fn predict_proba(&self, x: &Matrix<F>) -> Result<Vec<F>> {
        let f = self.fitted()?;
        super::check_predict(x, f.st.dim())?;
        let eps = F::epsilon();
        let mut z = vec![F::zero(); f.st.dim()];
        Ok((0..x.rows())
            .map(|i| {
                f.st.transform_row(x.row(i), &mut z);
                let eta = f.theta[0] + crate::linalg::dot(&f.theta[1..], &z);
                sigmoid(eta).max(eps).min(F::one() - eps)
            })
            .collect())
    }

    pub fn converged(&self) -> bool {
        self.fitted.as_ref().is_some_and(|f| f.converged)
    }

    pub fn iterations(&self) -> usize {
        self.fitted.as_ref().map_or(0, |f| f.iterations)
    }

    pub fn gradient_norm(&self) -> Option<F> {
        self.fitted.as_ref().map(|f| f.gradient_norm)
    }

    /// Solution in standardized coordinates, intercept first.
    pub fn theta(&self) -> Result<&[F]> {
        Ok(&self.fitted()?.theta)
    }

    /// Intercept and slopes on the original feature scale.
    pub fn coefficients(&self) -> Result<(F, Vec<F>)> {
        let f = self.fitted()?;
        let slopes: Vec<F> = (0..f.st.dim())
            .map(|j| {
                if f.st.constant[j] {
                    F::zero()
                } else {
                    f.theta[j + 1] / f.st.scale[j]
                }
            })
            .collect();
        let intercept = f.theta[0] - (0..slopes.len()).map(|j| slopes[j] * f.st.mean[j]).sum::<F>();
        Ok((intercept, slopes))
    }

    /// Penalized objective at `theta`, using this model's standardization.
    pub fn objective_at(&self, x: &Matrix<F>, labels: &[bool], theta: &[F]) -> Result<F> {
        let f = self.fitted()?;
        Ok(objective(&standardized_design(&f.st, x), labels, theta, F::of(self.params.l2)))
    }

    /// Analytic gradient of [`Self::objective_at`].
    pub fn gradient_at(&self, x: &Matrix<F>, labels: &[bool], theta: &[F]) -> Result<Vec<F>> {
        let f = self.fitted()?;
        let z = standardized_design(&f.st, x);
        let mut g = vec![F::zero(); theta.len()];
        let mut h = SymMatrix::zeros(theta.len());
        gradient_and_hessian(&z, labels, theta, F::of(self.params.l2), &f.st.constant, &mut g, &mut h);
        Ok(g)
    }
}

fn standardized_design<F: Scalar>(st: &Standardizer<F>, x: &Matrix<F>) -> Matrix<F> {
    let p = st.dim();
    let mut out = Matrix::zeros(x.rows(), p);
    let mut buf = vec![F::zero(); p];
    for i in 0..x.rows() {
        st.transform_row(x.row(i), &mut buf);
        for (j, &v) in buf.iter().enumerate() {
            out.set(i, j, v);
        }
    }
    out
}

fn linear_predictor<F: Scalar>(z: &Matrix<F>, theta: &[F], i: usize) -> F {
    theta[0] + crate::linalg::dot(&theta[1..], z.row(i))
}

fn objective<F: Scalar>(z: &Matrix<F>, labels: &[bool], theta: &[F], l2: F) -> F {
    let loss: F = (0..z.rows())
        .map(|i| {
            let eta = linear_predictor(z, theta, i);
            softplus(eta) - if labels[i] { eta } else { F::zero() }
        })
        .sum();
    let pen: F = theta[1..].iter().map(|&b| b * b).sum();
    loss + l2 * pen
}

fn gradient_and_hessian<F: Scalar>(
    z: &Matrix<F>,
    labels: &[bool],
    theta: &[F],
    l2: F,
    constant: &[bool],
    grad: &mut [F],
    hess: &mut SymMatrix<F>,
) {
    let p = theta.len();
    grad.iter_mut().for_each(|g| *g = F::zero());
    *hess = SymMatrix::zeros(p);
    let mut row = vec![F::one(); p];
    for i in 0..z.rows() {
        row[1..].copy_from_slice(z.row(i));
        let mu = sigmoid(linear_predictor(z, theta, i));
        let r = mu - if labels[i] { F::one() } else { F::zero() };
        for j in 0..p {
            grad[j] = grad[j] + r * row[j];
        }
        hess.rank_one_upper(&row, mu * (F::one() - mu));
    }
    hess.mirror_upper();
    let two = F::of(2.0);
    for j in 1..p {
        grad[j] = grad[j] + two * l2 * theta[j];
        let pin = if constant[j - 1] { F::one() } else { F::zero() };
        hess.add(j, j, two * l2 + pin);
    }
}

/// Solves `H d = g`, adding a growing diagonal shift if `H` is numerically singular.
fn newton_direction<F: Scalar>(hess: &SymMatrix<F>, grad: &[F]) -> Result<Vec<F>> {
    match hess.cholesky_solve(grad) {
        Ok(d) => Ok(d),
        Err(Error::Singular) => {
            let p = hess.dim();
            let trace = (0..p).map(|j| hess.get(j, j)).sum::<F>() / F::from_usize_lossy(p);
            let mut shift = (trace * F::of(1e-10)).max(F::min_positive_value().sqrt());
            for _ in 0..30 {
                let mut h = hess.clone();
                for j in 0..p {
                    h.add(j, j, shift);
                }
                if let Ok(d) = h.cholesky_solve(grad) {
                    return Ok(d);
                }
                shift = shift * F::of(100.0);
            }
            Err(Error::Singular)
        }
        Err(e) => Err(e),
    }
}

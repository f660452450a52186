use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use modcausal::learners::{fit_gbt, fit_logistic, fit_ridge, GbtParams, LogisticParams};
use modcausal::{Matrix64, Regressor};

fn design(n: usize, p: usize, seed: u64) -> Matrix64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * p)
        .map(|k| {
            let z: f64 = rng.sample(StandardNormal);
            // columns on very different scales
            z * 10f64.powi((k % p) as i32 - 1)
        })
        .collect();
    Matrix64::from_vec(n, p, data).unwrap()
}

fn linear_target(x: &Matrix64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..x.rows())
        .map(|i| {
            let r = x.row(i);
            let e: f64 = rng.sample(StandardNormal);
            1.5 + r.iter().enumerate().map(|(j, v)| v * (j as f64 - 1.0) / 10f64.powi(j as i32 - 1)).sum::<f64>() + e
        })
        .collect()
}

/// Penalized least squares on population-standardized columns, solved by
/// conjugate gradients on the normal equations.
fn ridge_by_cg(x: &Matrix64, y: &[f64], l2: f64) -> Vec<f64> {
    let (n, p) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..p).map(|j| x.column(j).iter().sum::<f64>() / n as f64).collect();
    let sd: Vec<f64> = (0..p)
        .map(|j| (x.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let z: Vec<Vec<f64>> = (0..n).map(|i| (0..p).map(|j| (x.get(i, j) - mean[j]) / sd[j]).collect()).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let apply = |b: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = b.iter().map(|v| l2 * v).collect();
        for row in &z {
            let s: f64 = row.iter().zip(b).map(|(a, b)| a * b).sum();
            for j in 0..p {
                out[j] += row[j] * s;
            }
        }
        out
    };
    let rhs: Vec<f64> = (0..p).map(|j| z.iter().zip(y).map(|(r, yi)| r[j] * (yi - ybar)).sum()).collect();
    let mut b = vec![0.0; p];
    let mut r = rhs.clone();
    let mut d = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..10 * p {
        if rr.sqrt() < 1e-14 {
            break;
        }
        let ad = apply(&d);
        let alpha = rr / d.iter().zip(&ad).map(|(a, b)| a * b).sum::<f64>();
        for j in 0..p {
            b[j] += alpha * d[j];
            r[j] -= alpha * ad[j];
        }
        let next: f64 = r.iter().map(|v| v * v).sum();
        for j in 0..p {
            d[j] = r[j] + next / rr * d[j];
        }
        rr = next;
    }
    z.iter().map(|row| ybar + row.iter().zip(&b).map(|(a, b)| a * b).sum::<f64>()).collect()
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    idx
}

#[test]
fn ridge_matches_conjugate_gradient_solution() {
    let x = design(400, 5, 1);
    let y = linear_target(&x, 2);
    for l2 in [0.0, 1e-3, 1.0, 250.0] {
        let fitted = fit_ridge(&x, &y, l2).unwrap().predict(&x).unwrap();
        let oracle = ridge_by_cg(&x, &y, l2);
        for (a, b) in fitted.iter().zip(&oracle) {
            assert_relative_eq!(a, b, epsilon = 1e-8, max_relative = 1e-8);
        }
    }
}

#[test]
fn ridge_penalty_shrinks_slopes() {
    let x = design(300, 3, 3);
    let y = linear_target(&x, 4);
    let loose = fit_ridge(&x, &y, 0.0).unwrap();
    let tight = fit_ridge(&x, &y, 1e6).unwrap();
    let size = |c: &[f64]| c.iter().map(|v| v.abs()).sum::<f64>();
    assert!(size(tight.coefficients().unwrap()) < 0.01 * size(loose.coefficients().unwrap()));
    // with everything shrunk away the fit is the mean
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    assert_relative_eq!(tight.intercept().unwrap(), ybar, epsilon = 0.05);
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let x = design(300, 4, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let labels: Vec<bool> = (0..x.rows())
        .map(|i| {
            let eta = 0.3 + x.get(i, 1) - 0.05 * x.get(i, 2);
            rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())
        })
        .collect();
    let params = LogisticParams { l2: 0.7, ..LogisticParams::default() };
    let model = fit_logistic(&x, &labels, params).unwrap();
    assert!(model.converged());

    let probes = [vec![0.0; 5], vec![0.2, -0.4, 1.1, 0.3, -0.9], model.theta().unwrap().to_vec()];
    for theta in probes {
        let g = model.gradient_at(&x, &labels, &theta).unwrap();
        for k in 0..theta.len() {
            let h = 1e-5;
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (model.objective_at(&x, &labels, &up).unwrap() - model.objective_at(&x, &labels, &down).unwrap())
                / (2.0 * h);
            assert_relative_eq!(g[k], fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }
}

#[test]
fn logistic_probabilities_are_proper() {
    let x = design(200, 3, 7);
    let labels: Vec<bool> = (0..x.rows()).map(|i| x.get(i, 0) + 0.5 * x.get(i, 1) > 0.0).collect();
    let model = fit_logistic(&x, &labels, LogisticParams::default()).unwrap();
    let p = model.predict_proba(&x).unwrap();
    assert!(p.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    let correct = p.iter().zip(&labels).filter(|(p, l)| (**p > 0.5) == **l).count();
    assert!(correct as f64 / labels.len() as f64 > 0.95);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ridge_is_row_order_invariant(seed in 0u64..1000, l2 in 0.0f64..10.0) {
        let x = design(60, 3, seed);
        let y = linear_target(&x, seed + 1);
        let perm = permutation(60, seed + 2);
        let xp = x.select_rows(&perm);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let a = fit_ridge(&x, &y, l2).unwrap().predict(&x).unwrap();
        let b = fit_ridge(&xp, &yp, l2).unwrap().predict(&x).unwrap();
        for (a, b) in a.iter().zip(&b) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn logistic_is_row_order_invariant(seed in 0u64..1000) {
        let x = design(80, 2, seed);
        let labels: Vec<bool> = (0..80).map(|i| x.get(i, 1) + 0.3 * (i % 3) as f64 > 0.2).collect();
        let perm = permutation(80, seed + 3);
        let lp: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
        let a = fit_logistic(&x, &labels, LogisticParams::default()).unwrap().predict_proba(&x).unwrap();
        let b = fit_logistic(&x.select_rows(&perm), &lp, LogisticParams::default()).unwrap().predict_proba(&x).unwrap();
        for (a, b) in a.iter().zip(&b) {
            prop_assert!((a - b).abs() <= 1e-7);
        }
    }

    #[test]
    fn boosting_without_subsampling_is_row_order_invariant(seed in 0u64..1000) {
        let x = design(50, 3, seed);
        let y = linear_target(&x, seed + 1);
        let perm = permutation(50, seed + 2);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let params = GbtParams { trees: 20, ..GbtParams::default() };
        let a = fit_gbt(&x, &y, params).unwrap().predict(&x).unwrap();
        let b = fit_gbt(&x.select_rows(&perm), &yp, params).unwrap().predict(&x).unwrap();
        for (a, b) in a.iter().zip(&b) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn boosting_is_reproducible_with_subsampling(seed in 0u64..1000) {
        let x = design(50, 2, seed);
        let y = linear_target(&x, seed + 1);
        let params = GbtParams { trees: 15, subsample: 0.6, seed, ..GbtParams::default() };
        let a = fit_gbt(&x, &y, params).unwrap().predict(&x).unwrap();
        let b = fit_gbt(&x, &y, params).unwrap().predict(&x).unwrap();
        prop_assert_eq!(a, b);
    }
}

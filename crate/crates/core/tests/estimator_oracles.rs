//! Meta-learners on small synthetic worlds whose effects are known in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use modcausal::meta::{
    aipw_formula, dr_learner_cate, dr_pseudo_outcomes, estimate_effects, estimate_propensity, fit_point,
    r_learner, relative_effect, s_learner, t_learner, x_learner, PropensitySpec, DEFAULT_CLIP,
};
use modcausal::{BootstrapConfig, CausalData64, Estimator, Matrix64, MetaConfig, PropensityModel, RegressorSpec};

struct World {
    data: CausalData64,
    tau: Vec<f64>,
    e: Vec<f64>,
    mu0: Vec<f64>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Three standard normal covariates, `Y = 1 + X0 + 0.5 X1 + W tau(X) + N(0, noise^2)`
/// and `P(W = 1 | X) = sigmoid(a + b X0)`.
fn world(n: usize, seed: u64, (a, b): (f64, f64), tau: impl Fn(&[f64]) -> f64, noise: f64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let (mut w, mut y, mut taus, mut es, mut mu0) = (vec![], vec![], vec![], vec![], vec![]);
    for _ in 0..n {
        let x: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let e = sigmoid(a + b * x[0]);
        let t = rng.random::<f64>() < e;
        let m0 = 1.0 + x[0] + 0.5 * x[1];
        let z: f64 = rng.sample(StandardNormal);
        let tx = tau(&x);
        y.push(m0 + if t { tx } else { 0.0 } + noise * z);
        rows.push(x);
        w.push(t);
        taus.push(tx);
        es.push(e);
        mu0.push(m0);
    }
    let data = CausalData64::new(Matrix64::from_rows(&rows).unwrap(), w, y).unwrap();
    World { data, tau: taus, e: es, mu0 }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Probability that a random treated score exceeds a random control score.
fn auc(scores: &[f64], treated: &[bool]) -> f64 {
    let pos: Vec<f64> = scores.iter().zip(treated).filter(|p| *p.1).map(|p| *p.0).collect();
    let neg: Vec<f64> = scores.iter().zip(treated).filter(|p| !*p.1).map(|p| *p.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for q in &neg {
            wins += if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn true_ate(w: &World) -> f64 {
    mean(&w.tau)
}

#[test]
fn propensity_is_flat_when_treatment_ignores_covariates() {
    // bounded covariates: with unbounded tails a few extreme rows always stray
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<[f64; 3]> = (0..5000).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
    let w: Vec<bool> = (0..5000).map(|_| rng.random::<f64>() < 0.3).collect();
    let data = CausalData64::new(Matrix64::from_rows(&rows).unwrap(), w, vec![0.0; 5000]).unwrap();
    let frac = data.n_treated() as f64 / data.len() as f64;
    let p = estimate_propensity(&data, &PropensitySpec::default(), DEFAULT_CLIP).unwrap();
    let worst = p.scores.iter().map(|s| (s - frac).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05, "worst deviation {worst}");
}

#[test]
fn propensity_separates_confounded_arms() {
    let w = world(3000, 2, (0.0, 1.2), |_| 0.0, 1.0);
    let p = estimate_propensity(&w.data, &PropensitySpec::default(), DEFAULT_CLIP).unwrap();
    assert!(p.converged == Some(true));
    assert!(auc(&p.scores, &w.data.treated) > 0.7);
    // fitted scores track the true ones
    assert!(pearson(&p.scores, &w.e) > 0.95);
}

#[test]
fn t_learner_finds_nothing_in_a_null_world() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = world(5000, 3, (0.0, 0.8), |_| 0.0, 1.0);
    // outcome replaced by pure noise, unrelated to both W and X
    let y: Vec<f64> = (0..5000).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    let data = CausalData64::new(w.data.x.clone(), w.data.treated.clone(), y).unwrap();
    let fit = t_learner(&data, &RegressorSpec::ridge(), 0).unwrap();
    assert!(fit.ate.abs() < 0.05, "ate {}", fit.ate);
}

#[test]
fn s_learner_tracks_a_covariate_driven_effect() {
    let w = world(3000, 4, (0.0, 0.0), |x| x[1], 0.3);
    let fit = s_learner(&w.data, &RegressorSpec::gbt(), 5).unwrap();
    let r = pearson(&fit.cate, &w.tau);
    assert!(r > 0.8, "r = {r}");
}

#[test]
fn x_learner_blend_follows_the_weighting_rule() {
    let w = world(2000, 6, (-0.5, 0.8), |x| 1.0 + 0.5 * x[2], 0.5);
    let base = RegressorSpec::ridge();
    let frac = w.data.n_treated() as f64 / w.data.len() as f64;
    let flat = PropensityModel::from_scores(&vec![frac; w.data.len()], DEFAULT_CLIP).unwrap();
    let fitted = estimate_propensity(&w.data, &PropensitySpec::default(), DEFAULT_CLIP).unwrap();

    // the treated fraction used without weighting equals a flat score with weighting
    let unweighted = x_learner(&w.data, &base, &fitted, false, 7).unwrap();
    let flat_weighted = x_learner(&w.data, &base, &flat, true, 7).unwrap();
    for (a, b) in unweighted.cate.iter().zip(&flat_weighted.cate) {
        assert!((a - b).abs() < 1e-10);
    }

    let weighted = x_learner(&w.data, &base, &fitted, true, 7).unwrap();
    assert!((weighted.ate - true_ate(&w)).abs() < 0.1);
    assert!(pearson(&weighted.cate, &w.tau) > 0.9);
}

#[test]
fn r_learner_recovers_level_and_shape() {
    let w = world(6000, 8, (0.0, 0.6), |x| 0.5 + x[1], 0.5);
    let prop = estimate_propensity(&w.data, &PropensitySpec::default(), DEFAULT_CLIP).unwrap();
    let (fit, dropped) = r_learner(&w.data, &RegressorSpec::ridge(), &RegressorSpec::ridge(), &prop, 9).unwrap();
    assert_eq!(dropped, 0);
    assert!((fit.ate - true_ate(&w)).abs() < 0.05, "ate {} vs {}", fit.ate, true_ate(&w));
    assert!(pearson(&fit.cate, &w.tau) > 0.8);
}

#[test]
fn dr_scores_with_true_nuisances_are_unbiased() {
    let w = world(20000, 10, (0.3, 1.0), |x| -0.4 + 0.2 * x[0], 1.0);
    let mu1: Vec<f64> = w.mu0.iter().zip(&w.tau).map(|(m, t)| m + t).collect();
    let phi = dr_pseudo_outcomes(&w.data.treated, &w.data.y, &w.e, &w.mu0, &mu1).unwrap();
    let m = mean(&phi);
    let se = (phi.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (phi.len() - 1) as f64 / phi.len() as f64).sqrt();
    assert!((m - true_ate(&w)).abs() < 3.0 * se, "{m} vs {} (se {se})", true_ate(&w));
    let direct = aipw_formula(&w.data.treated, &w.data.y, &w.e, &w.mu0, &mu1).unwrap();
    assert!((direct - m).abs() < 1e-12);
}

#[test]
fn aipw_with_half_scores_and_zero_models_is_a_scaled_difference() {
    let w = [true, false, true, true, false, false, true];
    let y = [3.0, -1.0, 0.5, 2.0, 4.0, 1.5, -2.0];
    let n = y.len() as f64;
    let e = vec![0.5; 7];
    let zero = vec![0.0; 7];
    let got = aipw_formula(&w, &y, &e, &zero, &zero).unwrap();
    let expected: f64 = w.iter().zip(&y).map(|(t, y)| if *t { 2.0 * y } else { -2.0 * y }).sum::<f64>() / n;
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn dr_cate_is_flat_for_a_homogeneous_effect() {
    let w = world(5000, 11, (0.0, 0.7), |_| 2.0, 1.0);
    let cfg = MetaConfig::linear();
    let prop = estimate_propensity(&w.data, &cfg.propensity, cfg.clip).unwrap();
    let fit = dr_learner_cate(&w.data, &cfg, &prop, 12).unwrap();
    let m = mean(&fit.cate);
    let sd = (fit.cate.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (fit.cate.len() - 1) as f64).sqrt();
    assert!((fit.ate - 2.0).abs() < 0.1);
    assert!(sd / fit.ate.abs() < 0.2, "sd {sd} ate {}", fit.ate);
}

#[test]
fn all_estimators_agree_without_confounding() {
    let w = world(20000, 13, (0.0, 0.0), |x| 0.7 + 0.3 * x[2], 1.0);
    let cfg = MetaConfig::linear();
    let prop = estimate_propensity(&w.data, &cfg.propensity, cfg.clip).unwrap();
    let truth = true_ate(&w);
    for kind in Estimator::ALL {
        let fit = fit_point(kind, &w.data, &cfg, Some(&prop), 14).unwrap();
        assert!((fit.ate - truth).abs() < 0.05, "{kind:?}: {} vs {truth}", fit.ate);
    }
    let ates: Vec<f64> = Estimator::ALL
        .iter()
        .map(|&k| fit_point(k, &w.data, &cfg, Some(&prop), 14).unwrap().ate)
        .collect();
    let spread = ates.iter().cloned().fold(f64::MIN, f64::max) - ates.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.02, "spread {spread} across {ates:?}");
}

#[test]
fn relative_effect_recovers_a_seventy_percent_drop() {
    // baseline rate 2.0 in every arm; treatment removes 70% of it
    let mut w = world(3000, 15, (0.0, 0.5), |_| -1.4, 0.3);
    w.data = w.data.clone().with_baseline(vec![2.0; w.data.len()]);
    let boot = BootstrapConfig { reps: 100, seed: 16, ..BootstrapConfig::default() };
    let est = estimate_effects(&[Estimator::Dr], &w.data, &MetaConfig::linear(), &boot).unwrap();
    let e = &est[0];
    let rel = e.ate_relative.unwrap();
    assert!((rel + 70.0).abs() < 5.0, "relative {rel}");
    assert_eq!(rel, relative_effect(e.ate, &w.data).unwrap());
    let (lo, hi) = e.ci_relative.unwrap();
    assert!(lo <= rel && rel <= hi);
    assert!(e.ci_low <= e.ate && e.ate <= e.ci_high);
}

#[test]
fn repeated_worlds_center_on_the_truth() {
    let cfg = MetaConfig::linear();
    let estimates: Vec<f64> = (0..40)
        .map(|s| {
            let w = world(1000, 100 + s, (0.0, 0.8), |x| -0.5 + 0.3 * x[0], 1.0);
            let prop = estimate_propensity(&w.data, &cfg.propensity, cfg.clip).unwrap();
            fit_point(Estimator::Dr, &w.data, &cfg, Some(&prop), s).unwrap().ate
        })
        .collect();
    let m = mean(&estimates);
    let sd = (estimates.iter().map(|e| (e - m).powi(2)).sum::<f64>() / 39.0).sqrt();
    let se = sd / 40f64.sqrt();
    // the true ATE over the covariate distribution is -0.5
    assert!((m + 0.5).abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn interval_contains_the_point_estimate() {
    let w = world(800, 17, (0.0, 0.5), |_| 0.4, 1.0);
    let boot = BootstrapConfig { reps: 100, seed: 18, ..BootstrapConfig::default() };
    for e in estimate_effects(&Estimator::ALL, &w.data, &MetaConfig::linear(), &boot).unwrap() {
        assert!(e.ci_low <= e.ate && e.ate <= e.ci_high, "{:?}", e.estimator);
        assert_eq!(e.n_treated + e.n_control, 800);
    }
}

#[test]
fn cate_follows_rows_when_they_are_permuted() {
    let w = world(500, 19, (0.0, 0.5), |x| x[1], 0.5);
    let n = w.data.len();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let shuffled = w.data.subset(&perm);
    let cfg = MetaConfig::linear();
    for kind in [Estimator::T, Estimator::S, Estimator::Dr] {
        let a = fit_point(kind, &w.data, &cfg, None, 20).unwrap();
        let b = fit_point(kind, &shuffled, &cfg, None, 20).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((b.cate[k] - a.cate[i]).abs() < 1e-8, "{kind:?}");
        }
    }
}

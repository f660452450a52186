use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_predict, check_training_set, Regressor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Fraction of rows sampled (without replacement, Bernoulli) per tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            trees: 200,
            depth: 3,
            learning_rate: 0.1,
            min_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Squared-error gradient boosting over depth-limited regression trees.
///
/// Trees are grown level by level with exact greedy splits found by scanning
/// presorted feature columns. Each leaf predicts the weighted mean residual of
/// its rows, scaled by the learning rate.
#[derive(Debug, Clone)]
pub struct GradientBoostedTrees<F> {
    params: GbtParams,
    fitted: Option<Fitted<F>>,
}

#[derive(Debug, Clone)]
struct Fitted<F> {
    init: F,
    trees: Vec<Tree<F>>,
    n_features: usize,
}

#[derive(Debug, Clone)]
enum Node<F> {
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    Leaf(F),
}

#[derive(Debug, Clone)]
struct Tree<F> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Tree<F> {
    #[inline]
    fn predict_row(&self, row: &[F]) -> F {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

const OUT: usize = usize::MAX;

#[derive(Clone, Copy)]
struct Sums<F> {
    g: F,
    w: F,
    n: usize,
}

impl<F: Scalar> Sums<F> {
    fn zero() -> Self {
        Self {
            g: F::zero(),
            w: F::zero(),
            n: 0,
        }
    }

    #[inline]
    fn add(&mut self, g: F, w: F) {
        self.g = self.g + g;
        self.w = self.w + w;
        self.n += 1;
    }

    #[inline]
    fn score(&self) -> F {
        if self.w > F::zero() {
            self.g * self.g / self.w
        } else {
            F::zero()
        }
    }
}

#[derive(Clone, Copy)]
struct Best<F> {
    gain: F,
    feature: usize,
    threshold: F,
}

impl<F: Scalar> GradientBoostedTrees<F> {
    pub fn new(params: GbtParams) -> Self {
        Self { params, fitted: None }
    }

    pub fn params(&self) -> GbtParams {
        self.params
    }

    fn validate_params(&self) -> Result<()> {
        let p = &self.params;
        if p.trees == 0 || p.depth == 0 || p.min_leaf == 0 {
            return Err(Error::Config("trees, depth and min_leaf must be at least 1".into()));
        }
        if !(p.learning_rate >= 0.0) || !p.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be finite and non-negative".into()));
        }
        if !(p.subsample > 0.0 && p.subsample <= 1.0) {
            return Err(Error::Config("subsample must lie in (0, 1]".into()));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn grow_tree(
        &self,
        x: &Matrix<F>,
        order: &[Vec<u32>],
        resid: &[F],
        w: &[F],
        in_sample: &[bool],
        node_of: &mut [usize],
    ) -> Tree<F> {
        let n = x.rows();
        let lr = F::of(self.params.learning_rate);
        let min_leaf = self.params.min_leaf;
        let mut nodes = vec![Node::Leaf(F::zero())];
        for i in 0..n {
            node_of[i] = if in_sample[i] { 0 } else { OUT };
        }
        let mut leaf_of = vec![OUT; n];
        let mut frontier = vec![0usize];
        // node index -> frontier slot
        let mut slot_of: Vec<usize> = vec![0];

        for _level in 0..self.params.depth {
            let k = frontier.len();
            let mut totals = vec![Sums::zero(); k];
            for i in 0..n {
                if node_of[i] != OUT {
                    totals[slot_of[node_of[i]]].add(w[i] * resid[i], w[i]);
                }
            }
            let mut best: Vec<Option<Best<F>>> = vec![None; k];
            let mut left = vec![Sums::zero(); k];
            let mut last: Vec<Option<F>> = vec![None; k];
            for (j, ord) in order.iter().enumerate() {
                left.iter_mut().for_each(|s| *s = Sums::zero());
                last.iter_mut().for_each(|l| *l = None);
                for &i in ord {
                    let i = i as usize;
                    let node = node_of[i];
                    if node == OUT {
                        continue;
                    }
                    let s = slot_of[node];
                    let v = x.get(i, j);
                    if let Some(lv) = last[s] {
                        let tot = totals[s];
                        let l = left[s];
                        if v > lv && l.n >= min_leaf && tot.n - l.n >= min_leaf {
                            let r = Sums {
                                g: tot.g - l.g,
                                w: tot.w - l.w,
                                n: tot.n - l.n,
                            };
                            let gain = l.score() + r.score() - tot.score();
                            if best[s].is_none_or(|b| gain > b.gain) {
                                let mut thr = lv + (v - lv) / F::of(2.0);
                                if thr >= v {
                                    thr = lv;
                                }
                                best[s] = Some(Best {
                                    gain,
                                    feature: j,
                                    threshold: thr,
                                });
                            }
                        }
                    }
                    left[s].add(w[i] * resid[i], w[i]);
                    last[s] = Some(v);
                }
            }

            let mut next = Vec::new();
            let mut split_any = false;
            for (s, &node) in frontier.iter().enumerate() {
                let tiny = F::epsilon() * F::of(64.0) * (totals[s].score() + F::min_positive_value());
                match best[s] {
                    Some(b) if b.gain > tiny => {
                        let l = nodes.len();
                        nodes.push(Node::Leaf(F::zero()));
                        nodes.push(Node::Leaf(F::zero()));
                        nodes[node] = Node::Split {
                            feature: b.feature,
                            threshold: b.threshold,
                            left: l,
                            right: l + 1,
                        };
                        next.push(l);
                        next.push(l + 1);
                        split_any = true;
                    }
                    _ => {}
                }
            }
            if !split_any {
                break;
            }
            for i in 0..n {
                let node = node_of[i];
                if node == OUT {
                    continue;
                }
                if let Node::Leaf(_) = nodes[node] {
                    // unsplit frontier node: its rows are final
                    leaf_of[i] = node;
                    node_of[i] = OUT;
                } else if let Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } = nodes[node]
                {
                    node_of[i] = if x.get(i, feature) <= threshold { left } else { right };
                }
            }
            slot_of = vec![OUT; nodes.len()];
            for (s, &node) in next.iter().enumerate() {
                slot_of[node] = s;
            }
            frontier = next;
        }

        // leaf values from the final row assignment
        let mut sums = vec![Sums::zero(); nodes.len()];
        for i in 0..n {
            let leaf = if node_of[i] != OUT { node_of[i] } else { leaf_of[i] };
            if leaf != OUT {
                sums[leaf].add(w[i] * resid[i], w[i]);
            }
        }
        for (k, node) in nodes.iter_mut().enumerate() {
            if let Node::Leaf(v) = node {
                let s = sums[k];
                *v = if s.w > F::zero() { lr * s.g / s.w } else { F::zero() };
            }
        }
        Tree { nodes }
    }
}

impl<F: Scalar> Regressor<F> for GradientBoostedTrees<F> {
    fn fit(&mut self, x: &Matrix<F>, y: &[F], weights: Option<&[F]>) -> Result<()> {
        self.fitted = None;
        self.validate_params()?;
        check_training_set(x, y, weights)?;
        let (n, p) = (x.rows(), x.cols());
        let w: Vec<F> = weights.map_or_else(|| vec![F::one(); n], <[F]>::to_vec);
        let total: F = w.iter().copied().sum();
        let init = y.iter().zip(&w).map(|(&a, &b)| a * b).sum::<F>() / total;

        let order: Vec<Vec<u32>> = (0..p)
            .map(|j| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| {
                    x.get(a as usize, j)
                        .partial_cmp(&x.get(b as usize, j))
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                idx
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let mut pred = vec![init; n];
        let mut resid = vec![F::zero(); n];
        let mut in_sample = vec![true; n];
        let mut node_of = vec![0usize; n];
        let mut trees = Vec::with_capacity(self.params.trees);
        for _ in 0..self.params.trees {
            for i in 0..n {
                resid[i] = y[i] - pred[i];
            }
            if self.params.subsample < 1.0 {
                let mut any = false;
                for s in in_sample.iter_mut() {
                    *s = rng.random::<f64>() < self.params.subsample;
                    any |= *s;
                }
                if !any {
                    in_sample.iter_mut().for_each(|s| *s = true);
                }
            }
            let tree = self.grow_tree(x, &order, &resid, &w, &in_sample, &mut node_of);
            for i in 0..n {
                pred[i] = pred[i] + tree.predict_row(x.row(i));
            }
            trees.push(tree);
        }
        self.fitted = Some(Fitted {
            init,
            trees,
            n_features: p,
        });
        Ok(())
    }

    fn predict(&self, x: &Matrix<F>) -> Result<Vec<F>> {
        let f = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        check_predict(x, f.n_features)?;
        Ok((0..x.rows())
            .map(|i| {
                let row = x.row(i);
                f.trees.iter().fold(f.init, |acc, t| acc + t.predict_row(row))
            })
            .collect())
    }
}

//! Random mean functions drawn from a sum-of-trees prior.
//!
//! A node at depth `d` splits with probability `alpha^(d+1)`. The split
//! variable follows a per-draw probability vector from a flat Dirichlet, the
//! threshold is uniform on the node's admissible interval for that variable,
//! and leaves are i.i.d. `N(0, sigma_mu^2)` with `sigma_mu = 0.5 / (kappa sqrt(m))`.

use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

// trees deeper than this are truncated to a leaf; with alpha < 1 the
// probability of reaching it is negligible
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BartPriorSpec {
    pub trees: usize,
    pub alpha: f64,
    pub kappa: f64,
    /// Split-variable concentration `(zeta, xi)`; `(1, 1)` means a flat Dirichlet.
    pub concentration: (f64, f64),
    pub noise_var: f64,
    pub dim: usize,
    pub arms: usize,
}

impl Default for BartPriorSpec {
    fn default() -> Self {
        Self {
            trees: 100,
            alpha: 0.45,
            kappa: 2.0,
            concentration: (1.0, 1.0),
            noise_var: 0.01,
            dim: 4,
            arms: 3,
        }
    }
}

impl BartPriorSpec {
    pub fn leaf_sd(&self) -> f64 {
        0.5 / (self.kappa * (self.trees as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Tree {
    Leaf(f64),
    Split {
        var: usize,
        threshold: f64,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

impl Tree {
    /// Goes left when `x[var] < threshold`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Tree::Leaf(v) => return *v,
                Tree::Split {
                    var,
                    threshold,
                    left,
                    right,
                } => node = if x[*var] < *threshold { left } else { right },
            }
        }
    }

    pub fn split_count(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Split { left, right, .. } => 1 + left.split_count() + right.split_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BartFunction {
    pub trees: Vec<Tree>,
}

impl BartFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.eval(x)).sum()
    }

    pub fn split_count(&self) -> usize {
        self.trees.iter().map(Tree::split_count).sum()
    }
}

/// Flat Dirichlet draw via normalised unit exponentials.
pub fn sample_split_probs(dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|e| e / total).collect()
}

fn pick(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draws one tree with the given split-variable probabilities.
pub fn sample_tree(spec: &BartPriorSpec, split_probs: &[f64], rng: &mut dyn RngCore) -> Tree {
    let bounds = vec![(0.0, 1.0); split_probs.len()];
    grow(spec, split_probs, bounds, 0, rng)
}

fn grow(
    spec: &BartPriorSpec,
    probs: &[f64],
    bounds: Vec<(f64, f64)>,
    depth: usize,
    rng: &mut dyn RngCore,
) -> Tree {
    let p_split = spec.alpha.powi(depth as i32 + 1);
    let u: f64 = rng.random();
    if depth >= MAX_DEPTH || u >= p_split {
        let z: f64 = rng.sample(StandardNormal);
        return Tree::Leaf(spec.leaf_sd() * z);
    }
    let var = pick(probs, rng);
    let (lo, hi) = bounds[var];
    let threshold = lo + (hi - lo) * rng.random::<f64>();
    let mut left_bounds = bounds.clone();
    left_bounds[var].1 = threshold;
    let mut right_bounds = bounds;
    right_bounds[var].0 = threshold;
    Tree::Split {
        var,
        threshold,
        left: Box::new(grow(spec, probs, left_bounds, depth + 1, rng)),
        right: Box::new(grow(spec, probs, right_bounds, depth + 1, rng)),
    }
}

/// Draws a sum-of-trees function with shared split probabilities.
pub fn sample_bart_function_with(
    spec: &BartPriorSpec,
    split_probs: &[f64],
    rng: &mut dyn RngCore,
) -> BartFunction {
    BartFunction {
        trees: (0..spec.trees)
            .map(|_| sample_tree(spec, split_probs, rng))
            .collect(),
    }
}

/// Draws split probabilities and then a sum-of-trees function.
pub fn sample_bart_function(spec: &BartPriorSpec, rng: &mut dyn RngCore) -> BartFunction {
    let probs = sample_split_probs(spec.dim, rng);
    sample_bart_function_with(spec, &probs, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stub_trees() {
        let leaf = Tree::Leaf(0.7);
        assert_eq!(leaf.eval(&[0.1, 0.9]), 0.7);
        let stump = Tree::Split {
            var: 0,
            threshold: 0.5,
            left: Box::new(Tree::Leaf(-1.0)),
            right: Box::new(Tree::Leaf(1.0)),
        };
        assert_eq!(stump.eval(&[0.2]), -1.0);
        assert_eq!(stump.eval(&[0.9]), 1.0);
        assert_eq!(stump.split_count(), 1);
    }

    #[test]
    fn root_split_rate_matches_alpha() {
        let spec = BartPriorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let probs = sample_split_probs(spec.dim, &mut rng);
        let n = 10_000;
        let split = (0..n)
            .filter(|_| matches!(sample_tree(&spec, &probs, &mut rng), Tree::Split { .. }))
            .count();
        let rate = split as f64 / n as f64;
        assert!((rate - 0.45).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn split_probs_form_a_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = sample_split_probs(6, &mut rng);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn thresholds_stay_inside_admissible_intervals() {
        fn check(t: &Tree, bounds: &mut Vec<(f64, f64)>) {
            if let Tree::Split {
                var,
                threshold,
                left,
                right,
            } = t
            {
                let (lo, hi) = bounds[*var];
                assert!(*threshold >= lo && *threshold <= hi);
                bounds[*var].1 = *threshold;
                check(left, bounds);
                bounds[*var] = (*threshold, hi);
                check(right, bounds);
                bounds[*var] = (lo, hi);
            }
        }
        let spec = BartPriorSpec {
            alpha: 0.9,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = sample_bart_function(&spec, &mut rng);
        for t in &f.trees {
            check(t, &mut vec![(0.0, 1.0); spec.dim]);
        }
    }

    #[test]
    fn piecewise_constant_along_axis_lines() {
        let spec = BartPriorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = sample_bart_function(&spec, &mut rng);
        let bound = f.split_count() + spec.trees;
        for axis in 0..spec.dim {
            let mut x = vec![0.37; spec.dim];
            let mut pieces = 1;
            x[axis] = 0.0;
            let mut prev = f.eval(&x);
            for i in 1..=5000 {
                x[axis] = i as f64 / 5000.0;
                let v = f.eval(&x);
                if v != prev {
                    pieces += 1;
                    prev = v;
                }
            }
            assert!(pieces <= bound, "{pieces} pieces > {bound}");
        }
    }
}

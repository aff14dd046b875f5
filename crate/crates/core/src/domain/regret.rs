/// Index of the best arm; the first maximiser wins ties.
pub fn oracle_arm(means: &[f64]) -> usize {
    let mut best = 0;
    for (k, m) in means.iter().enumerate() {
        if *m > means[best] {
            best = k;
        }
    }
    best
}

/// Running sum of `max_a f0(x_t, a) - f0(x_t, A_t)`.
///
/// `true_means[t]` holds the mean reward of every arm at round `t`.
///
/// # Panics
///
/// If the slices differ in length or an action is out of range.
pub fn cumulative_regret(true_means: &[Vec<f64>], actions: &[usize]) -> Vec<f64> {
    assert_eq!(
        true_means.len(),
        actions.len(),
        "one row of arm means per action"
    );
    let mut total = 0.0;
    true_means
        .iter()
        .zip(actions)
        .map(|(means, &a)| {
            let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            total += (best - means[a]).max(0.0);
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let means = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(cumulative_regret(&means, &[0, 1]), vec![0.0, 0.0]);
        assert_eq!(cumulative_regret(&means, &[1, 0]), vec![1.0, 2.0]);
        let single = vec![vec![0.3], vec![-2.0], vec![7.0]];
        assert_eq!(cumulative_regret(&single, &[0, 0, 0]), vec![0.0; 3]);
    }

    #[test]
    fn oracle_arm_prefers_first_max() {
        assert_eq!(oracle_arm(&[0.1, 0.5, 0.5]), 1);
        assert_eq!(oracle_arm(&[2.0]), 0);
    }
}

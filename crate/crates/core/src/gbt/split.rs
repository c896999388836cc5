//! Greedy split search: maximizes squared-error gain with L2 leaf
//! regularization over midpoints of sorted distinct feature values.

use crate::matrix::Matrix;

use super::ForestHyper;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Leaf score under the regularized squared-error objective.
#[inline]
fn score(sum: f64, count: usize, lambda: f64) -> f64 {
    sum * sum / (count as f64 + lambda)
}

/// Finds the best split for the rows at a node, or `None` when every split
/// has non-positive gain or would violate `min_samples_leaf`.
///
/// Ties break toward the lowest feature index, then the lowest threshold:
/// features and thresholds are scanned in ascending order and only a
/// strictly larger gain replaces the incumbent.
pub fn best_split(
    rows: &[usize],
    features: &Matrix,
    residuals: &[f64],
    hyper: &ForestHyper,
) -> Option<SplitCandidate> {
    let n = rows.len();
    if n < 2 * hyper.min_samples_leaf.max(1) {
        return None;
    }
    let total: f64 = rows.iter().map(|&r| residuals[r]).sum();
    let parent_score = score(total, n, hyper.lambda);

    let mut best: Option<SplitCandidate> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);

    for feature in 0..features.n_cols() {
        column.clear();
        column.extend(rows.iter().map(|&r| (features.get(r, feature), r)));
        // Stable sort keeps the node's canonical row order among ties, so
        // prefix sums are reproducible under input permutation.
        column.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += residuals[column[i].1];
            if column[i].0 == column[i + 1].0 {
                continue; // no boundary between equal values
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < hyper.min_samples_leaf || n_right < hyper.min_samples_leaf {
                continue;
            }
            let gain = score(left_sum, n_left, hyper.lambda)
                + score(total - left_sum, n_right, hyper.lambda)
                - parent_score;
            if gain > best.map_or(0.0, |b| b.gain) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: (column[i].0 + column[i + 1].0) * 0.5,
                    gain,
                });
            }
        }
    }
    best
}

/// Exhaustive enumeration of every (feature, midpoint) pair; the oracle the
/// fast scan is checked against.
#[cfg(test)]
pub(crate) fn brute_force_split(
    rows: &[usize],
    features: &Matrix,
    residuals: &[f64],
    hyper: &ForestHyper,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&r| residuals[r]).sum();
    let parent = score(total, n, hyper.lambda);
    let mut best: Option<SplitCandidate> = None;
    for feature in 0..features.n_cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| features.get(r, feature)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) * 0.5;
            let mut left_sum = 0.0;
            let mut n_left = 0;
            for &r in rows {
                if features.get(r, feature) <= threshold {
                    left_sum += residuals[r];
                    n_left += 1;
                }
            }
            let n_right = n - n_left;
            if n_left < hyper.min_samples_leaf || n_right < hyper.min_samples_leaf {
                continue;
            }
            let gain = score(left_sum, n_left, hyper.lambda)
                + score(total - left_sum, n_right, hyper.lambda)
                - parent;
            if gain > best.map_or(0.0, |b| b.gain) {
                best = Some(SplitCandidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

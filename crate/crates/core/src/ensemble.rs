//! The two-phase ensemble: train the network, learn its residuals with a
//! boosted forest, store training inputs in a memory bank, and combine the
//! three at prediction time into a corrected value and an interval.
//!
//! Phase 1 fits the network and records its mean absolute training residual
//! l_n. Phase 2 computes the bias-compensation factor omega from the
//! training predictions, builds the error dataset E = omega * ŷ - y, and
//! fits the forest on (X, E). Prediction then assembles, in normalized
//! units,
//!
//! ```text
//! corrected    ŷ_f = ŷ - ŷ_c
//! half-width   |ŷ_c + d_e - l_n|
//! ```
//!
//! where d_e is the distance from the query to the nearest stored training
//! input, scaled by sqrt(n_x) so it stays comparable across feature counts.

use crate::data::{Dataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::gbt::{fit_forest, ForestHyper, GradientBoostedForest};
use crate::matrix::Matrix;
use crate::nn::{train_network, NetConfig, NeuralNet, TrainReport};

/// Hyperparameters for [`train_confidence_net`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub net: NetConfig,
    pub forest: ForestHyper,
    /// Fraction of training inputs stored in the memory bank, in (0, 1].
    pub memory_fraction: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            net: NetConfig::default(),
            forest: ForestHyper::default(),
            memory_fraction: 1.0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.forest.validate()?;
        if !(self.memory_fraction > 0.0 && self.memory_fraction <= 1.0) {
            return Err(Error::Config {
                reason: format!(
                    "memory_fraction must lie in (0, 1], got {}",
                    self.memory_fraction
                ),
            });
        }
        Ok(())
    }
}

/// Stored subset of normalized training inputs. Targets are never stored;
/// the bank only answers input-space distance queries.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    pub stored_inputs: Matrix,
    /// Mean absolute training residual of the network, normalized units.
    pub l_n: f64,
    pub memory_fraction: f64,
}

impl MemoryBank {
    pub fn n_stored(&self) -> usize {
        self.stored_inputs.n_rows()
    }
}

/// Bias-compensation factor: 1 minus the mean signed residual. A network
/// that overestimates on average gets omega < 1, pulling corrections down;
/// underestimation raises it above 1.
pub fn compute_omega(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput {
            context: "compute_omega",
        });
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "compute_omega",
            unit: "values",
            expected: predictions.len(),
            got: targets.len(),
        });
    }
    let n = predictions.len() as f64;
    let mean_residual = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| p - t)
        .sum::<f64>()
        / n;
    Ok(1.0 - mean_residual)
}

/// Adjusted residual targets for the error estimator: E_i = omega * ŷ_i - y_i.
/// The forest trains on the original inputs paired with these values; the
/// targets never appear among its inputs.
pub fn build_error_dataset(
    x: &Matrix,
    predictions: &[f64],
    targets: &[f64],
    omega: f64,
) -> Result<(Matrix, Vec<f64>)> {
    if predictions.len() != x.n_rows() || targets.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "build_error_dataset",
            unit: "rows",
            expected: x.n_rows(),
            got: predictions.len().min(targets.len()),
        });
    }
    let errors: Vec<f64> = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| omega * p - t)
        .collect();
    Ok((x.clone(), errors))
}

/// Minimum Euclidean distance from `query` to any stored input, divided by
/// sqrt(n_x). Zero exactly when the query matches a stored row.
pub fn dissimilarity(query: &[f64], memory: &MemoryBank) -> Result<f64> {
    if memory.n_stored() == 0 {
        return Err(Error::EmptyMemory);
    }
    if query.len() != memory.stored_inputs.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "dissimilarity",
            unit: "features",
            expected: memory.stored_inputs.n_cols(),
            got: query.len(),
        });
    }
    let mut best = f64::INFINITY;
    for row in memory.stored_inputs.rows() {
        let mut sq = 0.0;
        for (a, b) in query.iter().zip(row) {
            let d = a - b;
            sq += d * d;
        }
        if sq < best {
            best = sq;
        }
    }
    Ok(best.sqrt() / (query.len() as f64).sqrt())
}

/// Point prediction with a symmetric interval, in original target units.
/// `diagnostics` keeps the normalized-space ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionInterval {
    /// Corrected point prediction ŷ_f, original units.
    pub y_f: f64,
    /// Interval half-width, original units, never negative.
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub diagnostics: IntervalDiagnostics,
}

/// Normalized-space quantities behind an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalDiagnostics {
    /// Raw network prediction ŷ.
    pub y_hat: f64,
    /// Estimated residual ŷ_c from the forest.
    pub y_c: f64,
    /// Dissimilarity d_e of the query to the memory bank.
    pub d_e: f64,
    /// Mean absolute training residual l_n.
    pub l_n: f64,
}

/// The deployable artifact: network, forest, memory, scalars, and the
/// normalization that binds them to one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceNetModel {
    pub net: NeuralNet,
    pub forest: GradientBoostedForest,
    pub memory: MemoryBank,
    pub omega: f64,
    pub normalization: NormalizationParams,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub dataset_name: String,
    pub config: EnsembleConfig,
    pub seed: u64,
    /// FNV-1a hash of the training matrix and targets; every sub-model of a
    /// model was fitted against data with this hash.
    pub split_hash: u64,
    pub report: TrainReport,
}

/// FNV-1a over the dimensions and raw f64 bits of the training split.
pub fn split_hash(x: &Matrix, y: &[f64]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&(x.n_rows() as u64).to_le_bytes());
    eat(&(x.n_cols() as u64).to_le_bytes());
    for v in x.as_slice() {
        eat(&v.to_bits().to_le_bytes());
    }
    for v in y {
        eat(&v.to_bits().to_le_bytes());
    }
    h
}

/// Runs both training phases on one split. All randomness flows from the
/// single seed, so identical seeds produce bit-identical models.
pub fn train_confidence_net(
    train: &Dataset,
    config: &EnsembleConfig,
    seed: u64,
) -> Result<ConfidenceNetModel> {
    config.validate()?;
    let n = train.n_samples();
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "train_confidence_net",
        });
    }

    // Phase 1: the network.
    let (net, report) = train_network(train, &config.net, seed)?;
    let mut predictions = Vec::with_capacity(n);
    let mut cache = net.make_cache();
    for i in 0..n {
        predictions.push(net.forward_cached(train.x.row(i), &mut cache)?);
    }

    // Phase 2: the error estimator.
    let omega = compute_omega(&predictions, &train.y)?;
    let (error_x, error_targets) = build_error_dataset(&train.x, &predictions, &train.y, omega)?;
    let forest = fit_forest(&error_x, &error_targets, &config.forest, seed.wrapping_add(1))?;

    // Memory bank: a prefix of the training inputs; the split already
    // shuffled rows, so a prefix is an unbiased sample. At least one row.
    let n_stored = ((n as f64 * config.memory_fraction).round() as usize).clamp(1, n);
    let stored: Vec<usize> = (0..n_stored).collect();
    let memory = MemoryBank {
        stored_inputs: train.x.select_rows(&stored),
        l_n: report.train_mae,
        memory_fraction: config.memory_fraction,
    };

    Ok(ConfidenceNetModel {
        net,
        forest,
        memory,
        omega,
        normalization: train.params.clone(),
        feature_names: train.feature_names.clone(),
        target_name: train.target_name.clone(),
        dataset_name: String::new(),
        config: config.clone(),
        seed,
        split_hash: split_hash(&train.x, &train.y),
        report,
    })
}

impl ConfidenceNetModel {
    pub fn n_features(&self) -> usize {
        self.net.n_inputs()
    }

    /// Interval for a query already in normalized feature space.
    pub fn predict_normalized(&self, x: &[f64]) -> Result<PredictionInterval> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                context: "predict",
                unit: "features",
                expected: self.n_features(),
                got: x.len(),
            });
        }
        let y_hat = self.net.forward(x)?;
        let y_c = self.forest.predict(x)?;
        let d_e = dissimilarity(x, &self.memory)?;
        let l_n = self.memory.l_n;

        let y_f_norm = y_hat - y_c;
        // The raw half-width ŷ_c + d_e - l_n can come out negative when the
        // forest predicts a residual smaller than the training bias; the
        // magnitude is what bounds the interval.
        let half_norm = (y_c + d_e - l_n).abs();

        let y_f = self.normalization.denormalize_target(y_f_norm);
        let half_width = half_norm * self.normalization.target_range().abs();
        Ok(PredictionInterval {
            y_f,
            half_width,
            lower: y_f - half_width,
            upper: y_f + half_width,
            diagnostics: IntervalDiagnostics { y_hat, y_c, d_e, l_n },
        })
    }

    /// Interval for a query in original feature units.
    pub fn predict_interval(&self, x_raw: &[f64]) -> Result<PredictionInterval> {
        let x = self.normalization.normalize_row(x_raw)?;
        self.predict_normalized(&x)
    }
}

/// Free-function form of [`ConfidenceNetModel::predict_interval`].
pub fn predict_interval(model: &ConfidenceNetModel, x_raw: &[f64]) -> Result<PredictionInterval> {
    model.predict_interval(x_raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::RegressionTree;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_params(n_features: usize) -> NormalizationParams {
        NormalizationParams {
            feature_min: vec![0.0; n_features],
            feature_max: vec![1.0; n_features],
            target_min: 0.0,
            target_max: 1.0,
        }
    }

    fn dataset_from(x: Matrix, y: Vec<f64>) -> Dataset {
        let n_features = x.n_cols();
        Dataset {
            x,
            y,
            params: identity_params(n_features),
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
            target_name: "y".to_owned(),
        }
    }

    /// Model with fully hand-set components: constant network output,
    /// constant forest output, explicit memory rows.
    fn handmade_model(
        n_features: usize,
        y_hat: f64,
        y_c: f64,
        l_n: f64,
        memory_rows: Vec<Vec<f64>>,
    ) -> ConfidenceNetModel {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = EnsembleConfig {
            net: NetConfig {
                conv_channels: 2,
                ..NetConfig::default()
            },
            ..EnsembleConfig::default()
        };
        let mut net = NeuralNet::new(n_features, &config.net, &mut rng);
        for t in net.tensors_mut() {
            t.fill(0.0);
        }
        // Zero weights everywhere: output bias alone sets the prediction.
        net.output.biases[0] = y_hat;
        let forest = GradientBoostedForest {
            trees: Vec::<RegressionTree>::new(),
            shrinkage: 0.1,
            base_score: y_c,
            n_features,
        };
        let memory = MemoryBank {
            stored_inputs: Matrix::from_rows(&memory_rows).unwrap(),
            l_n,
            memory_fraction: 1.0,
        };
        ConfidenceNetModel {
            net,
            forest,
            memory,
            omega: 1.0,
            normalization: identity_params(n_features),
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
            target_name: "y".to_owned(),
            dataset_name: "handmade".to_owned(),
            config,
            seed: 0,
            split_hash: 0,
            report: TrainReport {
                epoch_losses: vec![],
                train_mae: l_n,
            },
        }
    }

    #[test]
    fn omega_of_perfect_predictions_is_one() {
        let y = vec![0.2, 0.4, 0.9];
        assert_eq!(compute_omega(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn omega_hand_values() {
        // mean(ŷ) = 0.6, mean(y) = 0.5 -> 0.9
        let w = compute_omega(&[0.5, 0.7], &[0.4, 0.6]).unwrap();
        assert!((w - 0.9).abs() < 1e-12);
        // mean(ŷ) = 0.4, mean(y) = 0.5 -> 1.1 (underestimation raises omega)
        let w = compute_omega(&[0.3, 0.5], &[0.4, 0.6]).unwrap();
        assert!((w - 1.1).abs() < 1e-12);
    }

    #[test]
    fn omega_shifts_by_minus_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.gen_range(1..20);
            let preds: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let c: f64 = rng.gen_range(-0.5..0.5);
            let shifted: Vec<f64> = preds.iter().map(|p| p + c).collect();
            let base = compute_omega(&preds, &targets).unwrap();
            let moved = compute_omega(&shifted, &targets).unwrap();
            assert!((moved - (base - c)).abs() < 1e-12);
        }
    }

    #[test]
    fn error_dataset_with_unit_omega_is_raw_residual() {
        let x = Matrix::from_rows(&[vec![0.1], vec![0.2]]).unwrap();
        let preds = vec![0.5, 0.9];
        let targets = vec![0.3, 1.0];
        let (_, e) = build_error_dataset(&x, &preds, &targets, 1.0).unwrap();
        assert_eq!(e, vec![0.5 - 0.3, 0.9 - 1.0]);
    }

    #[test]
    fn error_dataset_hand_value() {
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let (_, e) = build_error_dataset(&x, &[1.0], &[0.85], 0.9).unwrap();
        assert!((e[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn error_dataset_matches_elementwise_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let preds: Vec<f64> = (0..15).map(|_| rng.gen_range(0.0..1.0)).collect();
        let targets: Vec<f64> = (0..15).map(|_| rng.gen_range(0.0..1.0)).collect();
        let omega = 0.97;
        let (_, batch) = build_error_dataset(&x, &preds, &targets, omega).unwrap();
        for i in 0..15 {
            assert_eq!(batch[i].to_bits(), (omega * preds[i] - targets[i]).to_bits());
        }
    }

    #[test]
    fn dissimilarity_zero_for_memorized_row() {
        let memory = MemoryBank {
            stored_inputs: Matrix::from_rows(&[vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap(),
            l_n: 0.0,
            memory_fraction: 1.0,
        };
        assert_eq!(dissimilarity(&[0.9, 0.1], &memory).unwrap(), 0.0);
    }

    #[test]
    fn dissimilarity_closed_form() {
        let memory = MemoryBank {
            stored_inputs: Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap(),
            l_n: 0.0,
            memory_fraction: 1.0,
        };
        // sqrt(2)/sqrt(2) = 1
        assert!((dissimilarity(&[1.0, 1.0], &memory).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dissimilarity_matches_brute_force_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n_x = 4;
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..n_x).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let memory = MemoryBank {
            stored_inputs: Matrix::from_rows(&rows).unwrap(),
            l_n: 0.0,
            memory_fraction: 1.0,
        };
        for _ in 0..30 {
            let q: Vec<f64> = (0..n_x).map(|_| rng.gen_range(-0.5..1.5)).collect();
            let got = dissimilarity(&q, &memory).unwrap();
            let brute = rows
                .iter()
                .map(|r| {
                    q.iter()
                        .zip(r)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                        / (n_x as f64).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((got - brute).abs() < 1e-12);
            // True minimum: no stored row is closer.
            for r in &rows {
                let d = q
                    .iter()
                    .zip(r)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    / (n_x as f64).sqrt();
                assert!(got <= d + 1e-15);
            }
        }
    }

    #[test]
    fn dissimilarity_never_decreases_moving_away_from_all_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n_x = 3;
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..n_x).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let memory = MemoryBank {
            stored_inputs: Matrix::from_rows(&rows).unwrap(),
            l_n: 0.0,
            memory_fraction: 1.0,
        };
        // A query far outside the memory's bounding region moves away from
        // every stored row when scaled outward; the minimum cannot drop.
        let far = 3.0 * (n_x as f64).sqrt();
        let direction: Vec<f64> = (0..n_x).map(|_| rng.gen_range(0.5..1.0)).collect();
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        let base: Vec<f64> = direction.iter().map(|v| v / norm * far).collect();
        let mut prev = 0.0;
        for k in [1.0, 1.2, 1.5, 2.0, 3.0] {
            let q: Vec<f64> = base.iter().map(|v| v * k).collect();
            let d = dissimilarity(&q, &memory).unwrap();
            assert!(d >= prev, "scale {k}: {d} < {prev}");
            prev = d;
        }
    }

    #[test]
    fn dissimilarity_rejects_empty_memory_and_bad_shape() {
        let empty = MemoryBank {
            stored_inputs: Matrix::zeros(0, 2),
            l_n: 0.0,
            memory_fraction: 1.0,
        };
        assert!(matches!(dissimilarity(&[0.0, 0.0], &empty), Err(Error::EmptyMemory)));
        let memory = MemoryBank {
            stored_inputs: Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap(),
            l_n: 0.0,
            memory_fraction: 1.0,
        };
        assert!(dissimilarity(&[0.0], &memory).is_err());
    }

    #[test]
    fn interval_degenerates_to_point_when_all_terms_vanish() {
        let model = handmade_model(2, 0.42, 0.0, 0.0, vec![vec![0.3, 0.3]]);
        let p = model.predict_interval(&[0.3, 0.3]).unwrap();
        assert_eq!(p.half_width, 0.0);
        assert_eq!(p.lower, p.y_f);
        assert_eq!(p.upper, p.y_f);
        assert_eq!(p.diagnostics.d_e, 0.0);
    }

    #[test]
    fn interval_hand_example() {
        // ŷ = 0.7, ŷ_c = 0.1, d_e = 0.05, l_n = 0.02 with identity
        // normalization: ŷ_f = 0.6, ŷ_e = 0.13, interval [0.47, 0.73].
        let model = handmade_model(1, 0.7, 0.1, 0.02, vec![vec![0.0]]);
        let p = model.predict_interval(&[0.05]).unwrap();
        assert!((p.diagnostics.d_e - 0.05).abs() < 1e-15);
        assert!((p.y_f - 0.6).abs() < 1e-12);
        assert!((p.half_width - 0.13).abs() < 1e-12);
        assert!((p.lower - 0.47).abs() < 1e-12);
        assert!((p.upper - 0.73).abs() < 1e-12);
        // Same arithmetic, same operation order.
        let y_f: f64 = 0.7 - 0.1;
        let half = (0.1 + p.diagnostics.d_e - 0.02f64).abs();
        assert_eq!(p.y_f.to_bits(), y_f.to_bits());
        assert_eq!(p.lower.to_bits(), (y_f - half).to_bits());
        assert_eq!(p.upper.to_bits(), (y_f + half).to_bits());
    }

    #[test]
    fn negative_expected_variation_takes_absolute_value() {
        // ŷ_c = -0.1, d_e = 0, l_n = 0.05 -> ŷ_e = -0.15, half-width 0.15.
        let model = handmade_model(1, 0.5, -0.1, 0.05, vec![vec![0.2]]);
        let p = model.predict_interval(&[0.2]).unwrap();
        assert!((p.half_width - 0.15).abs() < 1e-12);
        assert!(p.lower <= p.upper);
    }

    #[test]
    fn interval_is_symmetric_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = handmade_model(3, 0.6, 0.07, 0.01, vec![vec![0.5, 0.5, 0.5]]);
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let a = model.predict_interval(&q).unwrap();
            let b = model.predict_interval(&q).unwrap();
            assert_eq!(a, b);
            // Exact construction identities around y_f.
            assert_eq!(a.lower.to_bits(), (a.y_f - a.half_width).to_bits());
            assert_eq!(a.upper.to_bits(), (a.y_f + a.half_width).to_bits());
            assert!((a.upper - a.y_f) - (a.y_f - a.lower) <= 4.0 * f64::EPSILON * a.y_f.abs());
            assert!(a.half_width >= 0.0);
        }
    }

    #[test]
    fn denormalized_interval_matches_normalized_endpoints() {
        // Non-trivial target range to exercise unit conversion.
        let mut model = handmade_model(1, 0.7, 0.1, 0.02, vec![vec![0.0]]);
        model.normalization.target_min = 10.0;
        model.normalization.target_max = 60.0;
        model.normalization.feature_min = vec![2.0];
        model.normalization.feature_max = vec![4.0];
        let p = model.predict_interval(&[2.1]).unwrap();

        let d = p.diagnostics;
        let y_f_norm = d.y_hat - d.y_c;
        let half_norm = (d.y_c + d.d_e - d.l_n).abs();
        let lower = model.normalization.denormalize_target(y_f_norm - half_norm);
        let upper = model.normalization.denormalize_target(y_f_norm + half_norm);
        assert!((p.lower - lower).abs() < 1e-9);
        assert!((p.upper - upper).abs() < 1e-9);
    }

    fn quick_config() -> EnsembleConfig {
        EnsembleConfig {
            net: NetConfig {
                epochs: 30,
                conv_channels: 4,
                ..NetConfig::default()
            },
            forest: ForestHyper {
                n_trees: 50,
                ..ForestHyper::default()
            },
            memory_fraction: 1.0,
        }
    }

    #[test]
    fn pipeline_on_constant_target_dataset() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let train = dataset_from(Matrix::from_rows(&rows).unwrap(), vec![0.5; 24]);
        let config = EnsembleConfig {
            net: NetConfig {
                epochs: 500,
                conv_channels: 4,
                ..NetConfig::default()
            },
            forest: ForestHyper::default(),
            memory_fraction: 1.0,
        };
        let model = train_confidence_net(&train, &config, 11).unwrap();
        assert!((model.omega - 1.0).abs() < 0.05, "omega {}", model.omega);
        // A well-fit constant makes the forest's residual targets tiny.
        for i in 0..train.n_samples() {
            let y_c = model.forest.predict(train.x.row(i)).unwrap();
            assert!(y_c.abs() < 0.05, "y_c {y_c}");
        }
        assert_eq!(model.memory.n_stored(), 24);
        assert_eq!(model.split_hash, split_hash(&train.x, &train.y));
    }

    #[test]
    fn same_seed_trains_identical_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..18)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 0.5 + r[1] * 0.3).collect();
        let train = dataset_from(Matrix::from_rows(&rows).unwrap(), y);
        let a = train_confidence_net(&train, &quick_config(), 42).unwrap();
        let b = train_confidence_net(&train, &quick_config(), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trains_on_frcm_sized_dataset() {
        // 76 rows, 5 columns (4 features + target), the smallest shape in
        // the evaluation suite.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..76)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| (r[0] + r[3]) / 2.0 + rng.gen_range(-0.05..0.05))
            .collect();
        let train = dataset_from(Matrix::from_rows(&rows).unwrap(), y);
        let model = train_confidence_net(&train, &quick_config(), 1).unwrap();
        let p = model.predict_normalized(train.x.row(0)).unwrap();
        assert!(p.y_f.is_finite() && p.half_width.is_finite());
    }

    #[test]
    fn memory_fraction_limits_stored_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..2).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let train = dataset_from(Matrix::from_rows(&rows).unwrap(), y);
        let mut config = quick_config();
        config.memory_fraction = 0.25;
        let model = train_confidence_net(&train, &config, 4).unwrap();
        assert_eq!(model.memory.n_stored(), 5);
        // The stored rows are a prefix of the training inputs.
        for i in 0..5 {
            assert_eq!(model.memory.stored_inputs.row(i), train.x.row(i));
        }
    }
}

//! Evaluation: per-sample error-estimation records and the inclusion-rate
//! comparison between the ensemble's intervals and a plain network whose
//! interval is just ŷ ± l_n.

use crate::config::RunConfig;
use crate::data::{DatasetManifest, Dataset};
use crate::ensemble::{train_confidence_net, ConfidenceNetModel, PredictionInterval};
use crate::error::{Error, Result};
use crate::nn::{mae, mse, NeuralNet};

/// One test sample's prediction and error bookkeeping. Values are in
/// original target units except `d_e`, which is a normalized input-space
/// distance.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub index: usize,
    pub y_true: f64,
    /// Raw network prediction ŷ.
    pub y_hat: f64,
    /// Corrected prediction ŷ_f.
    pub y_f: f64,
    /// ŷ - y_true.
    pub actual_error: f64,
    /// The forest's residual estimate ŷ_c, scaled to target units.
    pub estimated_error: f64,
    pub d_e: f64,
    pub lower: f64,
    pub upper: f64,
    pub included: bool,
}

impl EvalRecord {
    pub const CSV_HEADER: &'static str =
        "index,y_true,y_hat,y_f,actual_error,estimated_error,d_e,lower,upper,included";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.index,
            self.y_true,
            self.y_hat,
            self.y_f,
            self.actual_error,
            self.estimated_error,
            self.d_e,
            self.lower,
            self.upper,
            self.included
        )
    }
}

/// One (dataset, fraction, seed) experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub dataset: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub n_test: usize,
    pub inclusion_rate_confidence: f64,
    pub inclusion_rate_ann: f64,
    pub mae_raw: f64,
    pub mae_corrected: f64,
    pub mse_raw: f64,
    pub mse_corrected: f64,
}

impl EvalSummary {
    pub const CSV_HEADER: &'static str = "dataset,fraction,seed,n_test,inclusion_confidence,\
         inclusion_ann,mae_raw,mae_corrected,mse_raw,mse_corrected";

    pub fn to_csv_row(&self) -> String {
        let name = if self.dataset.contains([',', '"']) {
            format!("\"{}\"", self.dataset.replace('"', "\"\""))
        } else {
            self.dataset.clone()
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            name,
            self.train_fraction,
            self.seed,
            self.n_test,
            self.inclusion_rate_confidence,
            self.inclusion_rate_ann,
            self.mae_raw,
            self.mae_corrected,
            self.mse_raw,
            self.mse_corrected
        )
    }
}

/// Fraction of samples whose ground truth lies inside the closed interval.
pub fn inclusion_rate(intervals: &[PredictionInterval], y_true: &[f64]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput {
            context: "inclusion_rate",
        });
    }
    if intervals.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            context: "inclusion_rate",
            unit: "samples",
            expected: intervals.len(),
            got: y_true.len(),
        });
    }
    let included = intervals
        .iter()
        .zip(y_true)
        .filter(|(p, &y)| p.lower <= y && y <= p.upper)
        .count();
    Ok(included as f64 / intervals.len() as f64)
}

/// Baseline inclusion for a bare network: the fraction of test samples
/// falling within the mean training error, |ŷ - y| <= l_n, in normalized
/// units.
pub fn ann_baseline_inclusion(net: &NeuralNet, l_n: f64, test: &Dataset) -> Result<f64> {
    let n = test.n_samples();
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "ann_baseline_inclusion",
        });
    }
    let mut cache = net.make_cache();
    let mut included = 0usize;
    for i in 0..n {
        let y_hat = net.forward_cached(test.x.row(i), &mut cache)?;
        if (y_hat - test.y[i]).abs() <= l_n {
            included += 1;
        }
    }
    Ok(included as f64 / n as f64)
}

/// One record per test sample, in test order.
pub fn error_estimation_report(
    model: &ConfidenceNetModel,
    test: &Dataset,
) -> Result<Vec<EvalRecord>> {
    let params = &model.normalization;
    let mut records = Vec::with_capacity(test.n_samples());
    for i in 0..test.n_samples() {
        let p = model.predict_normalized(test.x.row(i))?;
        let y_true = params.denormalize_target(test.y[i]);
        let y_hat = params.denormalize_target(p.diagnostics.y_hat);
        let estimated_error = p.diagnostics.y_c * params.target_range();
        records.push(EvalRecord {
            index: i,
            y_true,
            y_hat,
            y_f: p.y_f,
            actual_error: y_hat - y_true,
            estimated_error,
            d_e: p.diagnostics.d_e,
            lower: p.lower,
            upper: p.upper,
            included: p.lower <= y_true && y_true <= p.upper,
        });
    }
    Ok(records)
}

/// Full experiment grid: for every (fraction, seed) cell, split, train, and
/// evaluate both the ensemble and the baseline network on the identical
/// split. The baseline is phase 1 of the ensemble itself; training it
/// separately with the same seed would reproduce it bit for bit.
pub fn run_experiment(
    manifest: &DatasetManifest,
    config: &RunConfig,
    fractions: &[f64],
    seeds: &[u64],
) -> Result<Vec<EvalSummary>> {
    Ok(run_experiment_records(manifest, config, fractions, seeds)?
        .into_iter()
        .map(|(summary, _)| summary)
        .collect())
}

/// [`run_experiment`] variant that also returns the per-sample records of
/// every cell, for callers that write them out.
pub fn run_experiment_records(
    manifest: &DatasetManifest,
    config: &RunConfig,
    fractions: &[f64],
    seeds: &[u64],
) -> Result<Vec<(EvalSummary, Vec<EvalRecord>)>> {
    let raw = manifest.load()?;
    let mut cells = Vec::with_capacity(fractions.len() * seeds.len());
    for &fraction in fractions {
        for &seed in seeds {
            let (train, test) =
                crate::data::split(&raw, fraction, seed, config.normalize_target)?;
            let mut model = train_confidence_net(&train, &config.ensemble, seed)?;
            model.dataset_name = manifest.name.clone();
            let records = error_estimation_report(&model, &test)?;
            let summary = summarize(&model, &test, &manifest.name, fraction, seed)?;
            cells.push((summary, records));
        }
    }
    Ok(cells)
}

/// Builds the summary row for one trained model and its test split.
pub fn summarize(
    model: &ConfidenceNetModel,
    test: &Dataset,
    dataset: &str,
    train_fraction: f64,
    seed: u64,
) -> Result<EvalSummary> {
    let records = error_estimation_report(model, test)?;
    let n_test = records.len();
    let included = records.iter().filter(|r| r.included).count();
    let y_true: Vec<f64> = records.iter().map(|r| r.y_true).collect();
    let raw: Vec<f64> = records.iter().map(|r| r.y_hat).collect();
    let corrected: Vec<f64> = records.iter().map(|r| r.y_f).collect();
    Ok(EvalSummary {
        dataset: dataset.to_owned(),
        train_fraction,
        seed,
        n_test,
        inclusion_rate_confidence: included as f64 / n_test as f64,
        inclusion_rate_ann: ann_baseline_inclusion(&model.net, model.memory.l_n, test)?,
        mae_raw: mae(&y_true, &raw)?,
        mae_corrected: mae(&y_true, &corrected)?,
        mse_raw: mse(&y_true, &raw)?,
        mse_corrected: mse(&y_true, &corrected)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::NormalizationParams;
    use crate::ensemble::{EnsembleConfig, IntervalDiagnostics};
    use crate::gbt::ForestHyper;
    use crate::matrix::Matrix;
    use crate::nn::NetConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval(y_f: f64, half: f64) -> PredictionInterval {
        PredictionInterval {
            y_f,
            half_width: half,
            lower: y_f - half,
            upper: y_f + half,
            diagnostics: IntervalDiagnostics {
                y_hat: y_f,
                y_c: 0.0,
                d_e: 0.0,
                l_n: 0.0,
            },
        }
    }

    #[test]
    fn all_covered_gives_one() {
        let intervals = vec![interval(1.0, 0.5), interval(2.0, 0.5)];
        assert_eq!(inclusion_rate(&intervals, &[1.2, 1.8]).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_interval_boundary_counts() {
        let intervals = vec![interval(3.0, 0.0)];
        assert_eq!(inclusion_rate(&intervals, &[3.0]).unwrap(), 1.0);
        assert_eq!(inclusion_rate(&intervals, &[3.0001]).unwrap(), 0.0);
    }

    #[test]
    fn inclusion_is_permutation_invariant_and_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let intervals: Vec<PredictionInterval> = (0..20)
            .map(|_| interval(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.5)))
            .collect();
        let y: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = inclusion_rate(&intervals, &y).unwrap();
        // Joint permutation.
        let mut perm: Vec<usize> = (0..20).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let pi: Vec<PredictionInterval> = perm.iter().map(|&i| intervals[i].clone()).collect();
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        assert_eq!(inclusion_rate(&pi, &py).unwrap(), base);
        // Counts are integral.
        let count = base * 20.0;
        assert!((count - count.round()).abs() < 1e-12);
    }

    #[test]
    fn widening_never_decreases_inclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let intervals: Vec<PredictionInterval> = (0..30)
            .map(|_| interval(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.3)))
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = inclusion_rate(&intervals, &y).unwrap();
        for k in [1.0, 1.5, 2.0, 5.0] {
            let widened: Vec<PredictionInterval> = intervals
                .iter()
                .map(|p| interval(p.y_f, p.half_width * k))
                .collect();
            assert!(inclusion_rate(&widened, &y).unwrap() >= base);
        }
    }

    #[test]
    fn perfect_net_baseline_is_one_and_zero_margin_is_zero() {
        // A zero-weight network predicts 0 everywhere.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = crate::nn::NeuralNet::with_dims(2, 2, 3, 4, 4, 1.0, &mut rng);
        for t in net.tensors_mut() {
            t.fill(0.0);
        }
        let x = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let perfect = Dataset {
            x: x.clone(),
            y: vec![0.0, 0.0],
            params: NormalizationParams {
                feature_min: vec![0.0; 2],
                feature_max: vec![1.0; 2],
                target_min: 0.0,
                target_max: 1.0,
            },
            feature_names: vec!["a".into(), "b".into()],
            target_name: "y".into(),
        };
        assert_eq!(ann_baseline_inclusion(&net, 0.0, &perfect).unwrap(), 1.0);

        let imperfect = Dataset {
            y: vec![0.5, 0.7],
            ..perfect
        };
        assert_eq!(ann_baseline_inclusion(&net, 0.0, &imperfect).unwrap(), 0.0);
        assert_eq!(ann_baseline_inclusion(&net, 0.8, &imperfect).unwrap(), 1.0);
    }

    fn toy_manifest(dir: &std::path::Path, n: usize) -> std::path::PathBuf {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut csv = String::from("a,b,c,y\n");
        for _ in 0..n {
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0);
            let c: f64 = rng.gen_range(0.0..1.0);
            let y = 2.0 * a + b - 0.5 * c + rng.gen_range(-0.05..0.05);
            csv.push_str(&format!("{a},{b},{c},{y}\n"));
        }
        std::fs::write(dir.join("toy.csv"), csv).unwrap();
        std::fs::write(dir.join("toy.manifest"), "path=toy.csv\ntarget=y\nname=toy\n").unwrap();
        dir.join("toy.manifest")
    }

    fn quick_run_config(manifest: std::path::PathBuf) -> RunConfig {
        RunConfig {
            dataset: manifest,
            ensemble: EnsembleConfig {
                net: NetConfig {
                    epochs: 25,
                    conv_channels: 4,
                    ..NetConfig::default()
                },
                forest: ForestHyper {
                    n_trees: 40,
                    ..ForestHyper::default()
                },
                memory_fraction: 1.0,
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn report_has_one_record_per_test_row_and_matches_raw_space_path() {
        let dir = tempfile::tempdir().unwrap();
        let config = quick_run_config(toy_manifest(dir.path(), 60));
        let manifest = DatasetManifest::from_file(&config.dataset).unwrap();
        let raw = manifest.load().unwrap();
        let (train, test) = crate::data::split(&raw, 0.8, 5, true).unwrap();
        let model = train_confidence_net(&train, &config.ensemble, 5).unwrap();

        let records = error_estimation_report(&model, &test).unwrap();
        assert_eq!(records.len(), test.n_samples());

        // Element-by-element agreement with the raw-unit prediction path.
        for (i, rec) in records.iter().enumerate() {
            let x_raw: Vec<f64> = test
                .x
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, &v)| test.params.denormalize_feature(j, v))
                .collect();
            let p = model.predict_interval(&x_raw).unwrap();
            assert!((rec.y_f - p.y_f).abs() < 1e-9);
            assert!((rec.lower - p.lower).abs() < 1e-9);
            assert!((rec.upper - p.upper).abs() < 1e-9);
            assert_eq!(rec.included, rec.lower <= rec.y_true && rec.y_true <= rec.upper);
        }
    }

    #[test]
    fn run_experiment_produces_one_summary_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let config = quick_run_config(toy_manifest(dir.path(), 50));
        let manifest = DatasetManifest::from_file(&config.dataset).unwrap();
        let summaries = run_experiment(&manifest, &config, &[0.9, 0.55], &[3]).unwrap();
        assert_eq!(summaries.len(), 2);
        for s in &summaries {
            assert_eq!(s.dataset, "toy");
            assert!((0.0..=1.0).contains(&s.inclusion_rate_confidence));
            assert!((0.0..=1.0).contains(&s.inclusion_rate_ann));
            let count = s.inclusion_rate_confidence * s.n_test as f64;
            assert!((count - count.round()).abs() < 1e-9);
            assert!(s.mae_raw.is_finite() && s.mae_corrected.is_finite());
        }
        assert_eq!(summaries[0].train_fraction, 0.9);
        assert_eq!(summaries[1].train_fraction, 0.55);

        // Deterministic: rerunning reproduces the summaries exactly.
        let again = run_experiment(&manifest, &config, &[0.9, 0.55], &[3]).unwrap();
        assert_eq!(summaries, again);
    }

    #[test]
    fn csv_rows_are_stable() {
        let s = EvalSummary {
            dataset: "toy".into(),
            train_fraction: 0.9,
            seed: 1,
            n_test: 10,
            inclusion_rate_confidence: 0.8,
            inclusion_rate_ann: 0.1,
            mae_raw: 0.25,
            mae_corrected: 0.2,
            mse_raw: 0.1,
            mse_corrected: 0.05,
        };
        assert_eq!(s.to_csv_row(), "toy,0.9,1,10,0.8,0.1,0.25,0.2,0.1,0.05");
        assert!(EvalSummary::CSV_HEADER.starts_with("dataset,fraction,seed"));
    }
}

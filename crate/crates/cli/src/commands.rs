//! Subcommand implementations. Data goes to the named output (or stdout);
//! diagnostics go to stderr via the error path in `main`.

use std::io::Write;
use std::path::Path;

use confidence_nets::data::{split, DatasetManifest};
use confidence_nets::ensemble::train_confidence_net;
use confidence_nets::eval::{run_experiment_records, EvalRecord, EvalSummary};
use confidence_nets::gbt::TreeNode;
use confidence_nets::model_file::{load_model, save_model, FORMAT_VERSION};
use confidence_nets::{ConfidenceNetModel, Error, Result, RunConfig};

use crate::{ConfigArgs, EvaluateArgs, InspectArgs, PredictArgs};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Resolves the dataset named by the config: a manifest file, or a raw CSV
/// when `--target` was given.
fn resolve_manifest(args: &ConfigArgs, config: &RunConfig) -> Result<DatasetManifest> {
    if config.dataset.as_os_str().is_empty() {
        return Err(Error::Config {
            reason: "no dataset given; pass --dataset (and --target for a raw CSV)".into(),
        });
    }
    match &args.target {
        Some(target) => Ok(DatasetManifest::direct(config.dataset.clone(), target.clone())),
        None => DatasetManifest::from_file(&config.dataset),
    }
}

/// Deterministic model filename for one (dataset, fraction, seed) cell.
fn model_filename(name: &str, fraction: f64, seed: u64) -> String {
    format!("{name}_f{fraction:.2}_s{seed}.cnet")
}

pub fn train(args: &ConfigArgs) -> Result<()> {
    let config = args.build()?;
    let manifest = resolve_manifest(args, &config)?;
    let raw = manifest.load()?;
    let (train, _test) = split(&raw, config.train_fraction, config.seed, config.normalize_target)?;

    let mut model = train_confidence_net(&train, &config.ensemble, config.seed)?;
    model.dataset_name = manifest.name.clone();

    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let path = config
        .out_dir
        .join(model_filename(&manifest.name, config.train_fraction, config.seed));
    save_model(&model, &path)?;

    let final_loss = model.report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!("model: {}", path.display());
    println!("train_rows: {}", train.n_samples());
    println!("l_n: {}", model.memory.l_n);
    println!("omega: {}", model.omega);
    println!("final_epoch_loss: {final_loss}");
    Ok(())
}

/// Reads the feature columns the model expects from an arbitrary CSV,
/// matching by header name and ignoring extra columns.
fn read_feature_rows(path: &Path, model: &ConfidenceNetModel) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .map(str::to_owned)
        .collect();

    let mut column_of = Vec::with_capacity(model.feature_names.len());
    for name in &model.feature_names {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ColumnNotFound {
                column: name.clone(),
                available: headers.clone(),
            })?;
        column_of.push(idx);
    }

    let mut rows = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut row = Vec::with_capacity(column_of.len());
        for (&col, name) in column_of.iter().zip(&model.feature_names) {
            let cell = record.get(col).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                path: path.to_path_buf(),
                line: rec_idx as u64 + 2,
                column: name.clone(),
                value: cell.to_owned(),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub const PREDICT_CSV_HEADER: &str = "y_f,lower,upper,y_hat,y_c,d_e,l_n";

pub fn predict(args: &PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let rows = read_feature_rows(&args.input, &model)?;

    let mut out = String::new();
    out.push_str(PREDICT_CSV_HEADER);
    out.push('\n');
    for row in &rows {
        let p = model.predict_interval(row)?;
        let d = p.diagnostics;
        let y_hat = model.normalization.denormalize_target(d.y_hat);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.y_f, p.lower, p.upper, y_hat, d.y_c, d.d_e, d.l_n
        ));
    }

    match &args.out {
        Some(path) => std::fs::write(path, out).map_err(io_err(path))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.as_bytes())
                .map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    let values: std::result::Result<Vec<T>, _> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Config {
            reason: format!("could not parse {what} list {text:?}"),
        }),
    }
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let config = args.config.build()?;
    let manifest = resolve_manifest(&args.config, &config)?;
    let fractions: Vec<f64> = parse_list(&args.fractions, "fraction")?;
    let seeds: Vec<u64> = parse_list(&args.seeds, "seed")?;

    let cells = run_experiment_records(&manifest, &config, &fractions, &seeds)?;

    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;

    let mut summary_csv = String::from(EvalSummary::CSV_HEADER);
    summary_csv.push('\n');
    let mut log = String::new();
    for (summary, records) in &cells {
        summary_csv.push_str(&summary.to_csv_row());
        summary_csv.push('\n');

        let mut records_csv = String::from(EvalRecord::CSV_HEADER);
        records_csv.push('\n');
        for r in records {
            records_csv.push_str(&r.to_csv_row());
            records_csv.push('\n');
        }
        let records_name = format!(
            "records_{}_f{:.2}_s{}.csv",
            summary.dataset, summary.train_fraction, summary.seed
        );
        let records_path = config.out_dir.join(&records_name);
        std::fs::write(&records_path, records_csv).map_err(io_err(&records_path))?;

        log.push_str(&format!(
            "dataset={} fraction={} seed={} n_test={} inclusion_confidence={} \
             inclusion_ann={} mae_raw={} mae_corrected={} records={}\n",
            summary.dataset,
            summary.train_fraction,
            summary.seed,
            summary.n_test,
            summary.inclusion_rate_confidence,
            summary.inclusion_rate_ann,
            summary.mae_raw,
            summary.mae_corrected,
            records_name,
        ));
    }

    let summary_path = config.out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_csv).map_err(io_err(&summary_path))?;
    let log_path = config.out_dir.join("run_log.txt");
    std::fs::write(&log_path, log).map_err(io_err(&log_path))?;

    println!("wrote {} ({} rows)", summary_path.display(), cells.len());
    Ok(())
}

pub fn inspect(args: &InspectArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let net = &model.net;
    let forest = &model.forest;
    let deepest = forest.trees.iter().map(|t| t.depth()).max().unwrap_or(0);
    let n_leaves: usize = forest.trees.iter().map(|t| t.n_leaves()).sum();
    let n_splits: usize = forest
        .trees
        .iter()
        .flat_map(|t| t.nodes.iter())
        .filter(|n| matches!(n, TreeNode::Split { .. }))
        .count();

    println!("format_version: {FORMAT_VERSION}");
    println!("dataset: {}", model.dataset_name);
    println!("target: {}", model.target_name);
    println!("features ({}): {}", model.feature_names.len(), model.feature_names.join(", "));
    println!(
        "net: conv {}x{} kernel {}, dense {} -> {} -> 1, {} parameters",
        net.conv.out_channels,
        net.n_inputs(),
        net.conv.kernel_size,
        net.hidden1.fan_out,
        net.hidden2.fan_out,
        net.param_count()
    );
    println!(
        "forest: n_trees={} deepest={} splits={} leaves={} shrinkage={} base_score={}",
        forest.n_trees(),
        deepest,
        n_splits,
        n_leaves,
        forest.shrinkage,
        forest.base_score
    );
    println!(
        "memory: {} rows ({} of training)",
        model.memory.n_stored(),
        model.memory.memory_fraction
    );
    println!("omega: {}", model.omega);
    println!("l_n: {}", model.memory.l_n);
    println!("seed: {}", model.seed);
    println!("split_hash: {:016x}", model.split_hash);
    println!("config:");
    let c = &model.config;
    println!(
        "  epochs={} batch_size={} learning_rate={} huber_delta={} conv_channels={} kernel_size={}",
        c.net.epochs, c.net.batch_size, c.net.learning_rate, c.net.huber_delta,
        c.net.conv_channels, c.net.kernel_size
    );
    println!(
        "  n_trees={} max_depth={} shrinkage={} lambda={} min_samples_leaf={} memory_fraction={}",
        c.forest.n_trees, c.forest.max_depth, c.forest.shrinkage, c.forest.lambda,
        c.forest.min_samples_leaf, c.memory_fraction
    );
    Ok(())
}

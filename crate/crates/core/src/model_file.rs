//! Binary model persistence.
//!
//! Layout: magic `CNET`, format version (u32 LE), then length-prefixed
//! sections in fixed order: schema/normalization, network, forest, memory,
//! scalars, config snapshot, split hash. All integers and floats are
//! little-endian; floats are stored as raw f64 bits, so a load reproduces
//! every prediction bit for bit.

use std::path::Path;

use crate::data::NormalizationParams;
use crate::ensemble::{ConfidenceNetModel, EnsembleConfig, MemoryBank};
use crate::error::{Error, Result};
use crate::gbt::{ForestHyper, GradientBoostedForest, RegressionTree, TreeNode};
use crate::matrix::Matrix;
use crate::nn::{Activation, Conv1dLayer, DenseLayer, NetConfig, NeuralNet, TrainReport};

pub const MAGIC: [u8; 4] = *b"CNET";
pub const FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------- writing

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    /// Tensor with a shape header: rank, dims, then data.
    fn tensor(&mut self, dims: &[usize], data: &[f64]) {
        self.u32(dims.len() as u32);
        for &d in dims {
            self.u32(d as u32);
        }
        self.f64s(data);
    }
}

fn schema_section(model: &ConfidenceNetModel) -> Vec<u8> {
    let mut w = Writer::default();
    let p = &model.normalization;
    w.u32(model.feature_names.len() as u32);
    for name in &model.feature_names {
        w.string(name);
    }
    w.string(&model.target_name);
    w.string(&model.dataset_name);
    w.f64s(&p.feature_min);
    w.f64s(&p.feature_max);
    w.f64(p.target_min);
    w.f64(p.target_max);
    w.buf
}

fn net_section(net: &NeuralNet) -> Vec<u8> {
    let mut w = Writer::default();
    w.f64(net.huber_delta);
    w.u32(net.n_inputs() as u32);
    let c = &net.conv;
    w.u32(c.in_channels as u32);
    w.u32(c.out_channels as u32);
    w.u32(c.kernel_size as u32);
    w.tensor(&[c.out_channels, c.in_channels, c.kernel_size], &c.weights);
    w.tensor(&[c.out_channels], &c.biases);
    for layer in [&net.hidden1, &net.hidden2, &net.output] {
        w.u32(layer.fan_in as u32);
        w.u32(layer.fan_out as u32);
        w.u8(match layer.activation {
            Activation::Linear => 0,
            Activation::Elu => 1,
        });
        w.tensor(&[layer.fan_in, layer.fan_out], &layer.weights);
        w.tensor(&[layer.fan_out], &layer.biases);
    }
    w.buf
}

fn forest_section(forest: &GradientBoostedForest) -> Vec<u8> {
    let mut w = Writer::default();
    w.f64(forest.base_score);
    w.f64(forest.shrinkage);
    w.u32(forest.n_features as u32);
    w.u32(forest.trees.len() as u32);
    for tree in &forest.trees {
        w.u32(tree.max_depth as u32);
        w.u32(tree.nodes.len() as u32);
        for node in &tree.nodes {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    w.i32(*feature as i32);
                    w.f64(*threshold);
                    w.i32(*left as i32);
                    w.i32(*right as i32);
                }
                TreeNode::Leaf { value } => {
                    w.i32(-1);
                    w.f64(*value);
                    w.i32(-1);
                    w.i32(-1);
                }
            }
        }
    }
    w.buf
}

fn memory_section(memory: &MemoryBank) -> Vec<u8> {
    let mut w = Writer::default();
    w.f64(memory.memory_fraction);
    w.u32(memory.stored_inputs.n_rows() as u32);
    w.u32(memory.stored_inputs.n_cols() as u32);
    w.f64s(memory.stored_inputs.as_slice());
    w.buf
}

fn scalars_section(model: &ConfidenceNetModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.f64(model.omega);
    w.f64(model.memory.l_n);
    w.u64(model.seed);
    w.f64(model.report.train_mae);
    w.u32(model.report.epoch_losses.len() as u32);
    w.f64s(&model.report.epoch_losses);
    w.buf
}

fn config_section(config: &EnsembleConfig) -> Vec<u8> {
    let mut w = Writer::default();
    let n = &config.net;
    let f = &config.forest;
    let text = format!(
        "epochs={}\nbatch_size={}\nlearning_rate={}\nbeta1={}\nbeta2={}\nepsilon={}\n\
         huber_delta={}\nconv_channels={}\nkernel_size={}\nn_trees={}\nmax_depth={}\n\
         shrinkage={}\nlambda={}\nmin_samples_leaf={}\nmemory_fraction={}\n",
        n.epochs,
        n.batch_size,
        n.learning_rate,
        n.beta1,
        n.beta2,
        n.epsilon,
        n.huber_delta,
        n.conv_channels,
        n.kernel_size,
        f.n_trees,
        f.max_depth,
        f.shrinkage,
        f.lambda,
        f.min_samples_leaf,
        config.memory_fraction,
    );
    w.string(&text);
    w.buf
}

/// Serializes a model to bytes. Identical models produce identical bytes.
pub fn save_to_vec(model: &ConfidenceNetModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for section in [
        schema_section(model),
        net_section(&model.net),
        forest_section(&model.forest),
        memory_section(&model.memory),
        scalars_section(model),
        config_section(&model.config),
        model.split_hash.to_le_bytes().to_vec(),
    ] {
        out.extend_from_slice(&(section.len() as u64).to_le_bytes());
        out.extend_from_slice(&section);
    }
    out
}

pub fn save_model(model: &ConfidenceNetModel, path: &Path) -> Result<()> {
    std::fs::write(path, save_to_vec(model)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------- reading

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn corrupt(reason: &str) -> Error {
        Error::ModelFormat {
            reason: reason.to_owned(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Self::corrupt("unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(u64::from_le_bytes(
            self.take(8)?.try_into().unwrap(),
        )))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Self::corrupt("invalid UTF-8 string"))
    }
    /// Tensor with an expected shape; rejects mismatched headers.
    fn tensor(&mut self, dims: &[usize]) -> Result<Vec<f64>> {
        let rank = self.u32()? as usize;
        if rank != dims.len() {
            return Err(Self::corrupt("tensor rank mismatch"));
        }
        let mut len = 1usize;
        for &expect in dims {
            let got = self.u32()? as usize;
            if got != expect {
                return Err(Self::corrupt("tensor shape mismatch"));
            }
            len *= got;
        }
        self.f64s(len)
    }
    fn finished(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn read_schema(
    r: &mut Reader,
) -> Result<(Vec<String>, String, String, NormalizationParams)> {
    let n_features = r.u32()? as usize;
    let mut feature_names = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        feature_names.push(r.string()?);
    }
    let target_name = r.string()?;
    let dataset_name = r.string()?;
    let feature_min = r.f64s(n_features)?;
    let feature_max = r.f64s(n_features)?;
    let target_min = r.f64()?;
    let target_max = r.f64()?;
    Ok((
        feature_names,
        target_name,
        dataset_name,
        NormalizationParams {
            feature_min,
            feature_max,
            target_min,
            target_max,
        },
    ))
}

fn read_dense(r: &mut Reader) -> Result<DenseLayer> {
    let fan_in = r.u32()? as usize;
    let fan_out = r.u32()? as usize;
    let activation = match r.u8()? {
        0 => Activation::Linear,
        1 => Activation::Elu,
        other => {
            return Err(Reader::corrupt(&format!("unknown activation tag {other}")));
        }
    };
    let weights = r.tensor(&[fan_in, fan_out])?;
    let biases = r.tensor(&[fan_out])?;
    Ok(DenseLayer {
        fan_in,
        fan_out,
        activation,
        weights,
        biases,
    })
}

fn read_net(r: &mut Reader) -> Result<NeuralNet> {
    let huber_delta = r.f64()?;
    let n_inputs = r.u32()? as usize;
    let in_channels = r.u32()? as usize;
    let out_channels = r.u32()? as usize;
    let kernel_size = r.u32()? as usize;
    let weights = r.tensor(&[out_channels, in_channels, kernel_size])?;
    let biases = r.tensor(&[out_channels])?;
    let conv = Conv1dLayer {
        in_channels,
        out_channels,
        kernel_size,
        weights,
        biases,
    };
    let hidden1 = read_dense(r)?;
    let hidden2 = read_dense(r)?;
    let output = read_dense(r)?;
    NeuralNet::from_parts(conv, hidden1, hidden2, output, huber_delta, n_inputs)
        .map_err(|_| Reader::corrupt("network layer shapes do not chain"))
}

fn read_forest(r: &mut Reader) -> Result<GradientBoostedForest> {
    let base_score = r.f64()?;
    let shrinkage = r.f64()?;
    let n_features = r.u32()? as usize;
    let n_trees = r.u32()? as usize;
    let mut trees = Vec::with_capacity(n_trees.min(1 << 20));
    for _ in 0..n_trees {
        let max_depth = r.u32()? as usize;
        let n_nodes = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
        for _ in 0..n_nodes {
            let feature = r.i32()?;
            let value = r.f64()?;
            let left = r.i32()?;
            let right = r.i32()?;
            if feature < 0 {
                nodes.push(TreeNode::Leaf { value });
            } else {
                let (feature, left, right) = (feature as usize, left, right);
                if feature >= n_features
                    || left < 0
                    || right < 0
                    || left as usize >= n_nodes
                    || right as usize >= n_nodes
                {
                    return Err(Reader::corrupt("tree node references out of range"));
                }
                nodes.push(TreeNode::Split {
                    feature,
                    threshold: value,
                    left: left as usize,
                    right: right as usize,
                });
            }
        }
        if nodes.is_empty() {
            return Err(Reader::corrupt("tree has no nodes"));
        }
        trees.push(RegressionTree { nodes, max_depth });
    }
    Ok(GradientBoostedForest {
        trees,
        shrinkage,
        base_score,
        n_features,
    })
}

fn read_memory(r: &mut Reader) -> Result<(f64, Matrix)> {
    let memory_fraction = r.f64()?;
    let n_rows = r.u32()? as usize;
    let n_cols = r.u32()? as usize;
    let data = r.f64s(n_rows * n_cols)?;
    Ok((
        memory_fraction,
        Matrix::from_vec(n_rows, n_cols, data).map_err(|_| Reader::corrupt("bad memory shape"))?,
    ))
}

fn read_config(text: &str) -> Result<EnsembleConfig> {
    let mut net = NetConfig::default();
    let mut forest = ForestHyper::default();
    let mut memory_fraction = 1.0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Reader::corrupt("config snapshot line is not key=value"))?;
        let bad = || Reader::corrupt(&format!("bad config snapshot value for {key:?}"));
        match key {
            "epochs" => net.epochs = value.parse().map_err(|_| bad())?,
            "batch_size" => net.batch_size = value.parse().map_err(|_| bad())?,
            "learning_rate" => net.learning_rate = value.parse().map_err(|_| bad())?,
            "beta1" => net.beta1 = value.parse().map_err(|_| bad())?,
            "beta2" => net.beta2 = value.parse().map_err(|_| bad())?,
            "epsilon" => net.epsilon = value.parse().map_err(|_| bad())?,
            "huber_delta" => net.huber_delta = value.parse().map_err(|_| bad())?,
            "conv_channels" => net.conv_channels = value.parse().map_err(|_| bad())?,
            "kernel_size" => net.kernel_size = value.parse().map_err(|_| bad())?,
            "n_trees" => forest.n_trees = value.parse().map_err(|_| bad())?,
            "max_depth" => forest.max_depth = value.parse().map_err(|_| bad())?,
            "shrinkage" => forest.shrinkage = value.parse().map_err(|_| bad())?,
            "lambda" => forest.lambda = value.parse().map_err(|_| bad())?,
            "min_samples_leaf" => forest.min_samples_leaf = value.parse().map_err(|_| bad())?,
            "memory_fraction" => memory_fraction = value.parse().map_err(|_| bad())?,
            other => {
                return Err(Reader::corrupt(&format!(
                    "unknown config snapshot key {other:?}"
                )))
            }
        }
    }
    Ok(EnsembleConfig {
        net,
        forest,
        memory_fraction,
    })
}

/// Parses a model from bytes, validating magic, version, and structure.
pub fn load_from_slice(bytes: &[u8]) -> Result<ConfidenceNetModel> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Reader::corrupt("bad magic bytes (not a model file)"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }

    let mut sections = Vec::with_capacity(7);
    for _ in 0..7 {
        let len = r.u64()? as usize;
        sections.push(r.take(len)?);
    }
    if !r.finished() {
        return Err(Reader::corrupt("trailing bytes after final section"));
    }

    let mut s0 = Reader::new(sections[0]);
    let (feature_names, target_name, dataset_name, normalization) = read_schema(&mut s0)?;
    let mut s1 = Reader::new(sections[1]);
    let net = read_net(&mut s1)?;
    let mut s2 = Reader::new(sections[2]);
    let forest = read_forest(&mut s2)?;
    let mut s3 = Reader::new(sections[3]);
    let (memory_fraction, stored_inputs) = read_memory(&mut s3)?;
    let mut s4 = Reader::new(sections[4]);
    let omega = s4.f64()?;
    let l_n = s4.f64()?;
    let seed = s4.u64()?;
    let train_mae = s4.f64()?;
    let n_epochs = s4.u32()? as usize;
    let epoch_losses = s4.f64s(n_epochs)?;
    let mut s5 = Reader::new(sections[5]);
    let config = read_config(&s5.string()?)?;
    let mut s6 = Reader::new(sections[6]);
    let split_hash = s6.u64()?;

    for (i, s) in [s0, s1, s2, s3, s4, s5, s6].iter().enumerate() {
        if !s.finished() {
            return Err(Reader::corrupt(&format!("section {i} has trailing bytes")));
        }
    }

    if normalization.n_features() != net.n_inputs()
        || feature_names.len() != net.n_inputs()
        || forest.n_features != net.n_inputs()
        || stored_inputs.n_cols() != net.n_inputs()
    {
        return Err(Reader::corrupt("sections disagree on feature count"));
    }

    Ok(ConfidenceNetModel {
        net,
        forest,
        memory: MemoryBank {
            stored_inputs,
            l_n,
            memory_fraction,
        },
        omega,
        normalization,
        feature_names,
        target_name,
        dataset_name,
        config,
        seed,
        split_hash,
        report: TrainReport {
            epoch_losses,
            train_mae,
        },
    })
}

pub fn load_model(path: &Path) -> Result<ConfidenceNetModel> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_from_slice(&bytes)
}

//! The primary prediction model: a 1D-convolutional front end feeding two
//! ELU dense layers and a linear scalar head, trained with Adam on Huber
//! loss. Gradients are analytic; `tests` check them against central finite
//! differences.

mod activation;
mod adam;
mod loss;
mod train;

pub use activation::{elu, elu_prime};
pub use adam::{adam_step, AdamState};
pub use loss::{huber_loss, huber_loss_grad, mae, mse};
pub use train::{train_network, NetConfig, TrainReport};

use rand::Rng;

use crate::error::{Error, Result};

/// Width of both hidden layers.
pub const HIDDEN_UNITS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Elu,
}

/// 1D convolution over a fixed-length signal, "same" zero padding, stride 1,
/// cross-correlation convention. Weights are `[out_ch][in_ch][kernel]`
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Conv1dLayer {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        Conv1dLayer {
            in_channels,
            out_channels,
            kernel_size,
            weights: vec![0.0; out_channels * in_channels * kernel_size],
            biases: vec![0.0; out_channels],
        }
    }

    fn init<R: Rng>(&mut self, rng: &mut R) {
        let bound = (1.0 / (self.in_channels * self.kernel_size) as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.gen_range(-bound..bound);
        }
        for b in &mut self.biases {
            *b = rng.gen_range(-bound..bound);
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    #[inline]
    fn weight_index(&self, o: usize, k: usize, j: usize) -> usize {
        (o * self.in_channels + k) * self.kernel_size + j
    }

    /// Output length equals input length. `input` holds `in_channels`
    /// stacked signals of length `len`; `out` receives `out_channels` of
    /// them.
    pub fn forward_into(&self, input: &[f64], len: usize, out: &mut [f64]) -> Result<()> {
        if input.len() != self.in_channels * len {
            return Err(Error::DimensionMismatch {
                context: "conv1d forward",
                unit: "input values",
                expected: self.in_channels * len,
                got: input.len(),
            });
        }
        if out.len() != self.out_channels * len {
            return Err(Error::DimensionMismatch {
                context: "conv1d forward",
                unit: "output values",
                expected: self.out_channels * len,
                got: out.len(),
            });
        }
        let pad = (self.kernel_size - 1) / 2;
        for o in 0..self.out_channels {
            let out_ch = &mut out[o * len..(o + 1) * len];
            out_ch.fill(self.biases[o]);
            for k in 0..self.in_channels {
                let in_ch = &input[k * len..(k + 1) * len];
                for j in 0..self.kernel_size {
                    let w = self.weights[self.weight_index(o, k, j)];
                    // t + j - pad must land inside [0, len); zeros otherwise.
                    for (t, acc) in out_ch.iter_mut().enumerate() {
                        let src = t + j;
                        if src >= pad && src - pad < len {
                            *acc += w * in_ch[src - pad];
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64], len: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.out_channels * len];
        self.forward_into(input, len, &mut out)?;
        Ok(out)
    }
}

/// Computes feature maps for a multi-channel 1D input.
pub fn conv1d_forward(layer: &Conv1dLayer, input: &[f64], len: usize) -> Result<Vec<f64>> {
    layer.forward(input, len)
}

/// Fully connected layer; weights are `[fan_in][fan_out]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        DenseLayer {
            fan_in,
            fan_out,
            activation,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn init<R: Rng>(&mut self, rng: &mut R) {
        let bound = (1.0 / self.fan_in as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.gen_range(-bound..bound);
        }
        for b in &mut self.biases {
            *b = rng.gen_range(-bound..bound);
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Pre-activation into `out`; the caller applies the activation.
    fn affine_into(&self, input: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.biases);
        for (i, &xi) in input.iter().enumerate() {
            let row = &self.weights[i * self.fan_out..(i + 1) * self.fan_out];
            for (j, &w) in row.iter().enumerate() {
                out[j] += xi * w;
            }
        }
    }
}

/// Conv front end, two ELU hidden layers, linear scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    pub conv: Conv1dLayer,
    pub hidden1: DenseLayer,
    pub hidden2: DenseLayer,
    pub output: DenseLayer,
    pub huber_delta: f64,
    n_inputs: usize,
}

/// Activations recorded by a forward pass, plus scratch space reused by
/// backprop. One instance per training loop; no per-sample allocation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    x: Vec<f64>,
    conv_out: Vec<f64>,
    h1_pre: Vec<f64>,
    h1: Vec<f64>,
    h2_pre: Vec<f64>,
    h2: Vec<f64>,
    y_hat: f64,
    d_h2: Vec<f64>,
    d_h1: Vec<f64>,
    d_conv: Vec<f64>,
}

/// Gradient of the loss for every parameter tensor, shapes mirroring
/// [`NeuralNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    pub conv_w: Vec<f64>,
    pub conv_b: Vec<f64>,
    pub h1_w: Vec<f64>,
    pub h1_b: Vec<f64>,
    pub h2_w: Vec<f64>,
    pub h2_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl NetGradients {
    pub fn zeros_like(net: &NeuralNet) -> Self {
        NetGradients {
            conv_w: vec![0.0; net.conv.weights.len()],
            conv_b: vec![0.0; net.conv.biases.len()],
            h1_w: vec![0.0; net.hidden1.weights.len()],
            h1_b: vec![0.0; net.hidden1.biases.len()],
            h2_w: vec![0.0; net.hidden2.weights.len()],
            h2_b: vec![0.0; net.hidden2.biases.len()],
            out_w: vec![0.0; net.output.weights.len()],
            out_b: vec![0.0; net.output.biases.len()],
        }
    }

    pub fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn tensors(&self) -> [&Vec<f64>; 8] {
        [
            &self.conv_w, &self.conv_b, &self.h1_w, &self.h1_b, &self.h2_w, &self.h2_b,
            &self.out_w, &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.conv_w, &mut self.conv_b, &mut self.h1_w, &mut self.h1_b, &mut self.h2_w,
            &mut self.h2_b, &mut self.out_w, &mut self.out_b,
        ]
    }

    /// Gradient component for the flat parameter index used by
    /// [`NeuralNet::get_param`].
    pub fn get(&self, mut index: usize) -> f64 {
        for t in self.tensors() {
            if index < t.len() {
                return t[index];
            }
            index -= t.len();
        }
        panic!("gradient index out of range");
    }
}

impl NeuralNet {
    /// Builds the paper topology: `n_inputs` as one channel through the
    /// conv layer, then 100-unit ELU layers and a linear scalar head.
    pub fn new<R: Rng>(n_inputs: usize, config: &NetConfig, rng: &mut R) -> Self {
        Self::with_dims(
            n_inputs,
            config.conv_channels,
            config.kernel_size,
            HIDDEN_UNITS,
            HIDDEN_UNITS,
            config.huber_delta,
            rng,
        )
    }

    /// Fully parameterized constructor; small hidden widths keep
    /// finite-difference checks cheap.
    pub fn with_dims<R: Rng>(
        n_inputs: usize,
        conv_channels: usize,
        kernel_size: usize,
        hidden1: usize,
        hidden2: usize,
        huber_delta: f64,
        rng: &mut R,
    ) -> Self {
        let mut conv = Conv1dLayer::new(1, conv_channels, kernel_size);
        let mut l1 = DenseLayer::new(conv_channels * n_inputs, hidden1, Activation::Elu);
        let mut l2 = DenseLayer::new(hidden1, hidden2, Activation::Elu);
        let mut out = DenseLayer::new(hidden2, 1, Activation::Linear);
        conv.init(rng);
        l1.init(rng);
        l2.init(rng);
        out.init(rng);
        NeuralNet {
            conv,
            hidden1: l1,
            hidden2: l2,
            output: out,
            huber_delta,
            n_inputs,
        }
    }

    /// Reassembles a network from stored layers, checking that the shapes
    /// chain: conv output feeds hidden1, hidden layers feed each other, and
    /// the head is scalar.
    pub fn from_parts(
        conv: Conv1dLayer,
        hidden1: DenseLayer,
        hidden2: DenseLayer,
        output: DenseLayer,
        huber_delta: f64,
        n_inputs: usize,
    ) -> Result<Self> {
        let chain_ok = conv.in_channels == 1
            && conv.weights.len() == conv.out_channels * conv.in_channels * conv.kernel_size
            && conv.biases.len() == conv.out_channels
            && hidden1.fan_in == conv.out_channels * n_inputs
            && hidden2.fan_in == hidden1.fan_out
            && output.fan_in == hidden2.fan_out
            && output.fan_out == 1
            && hidden1.weights.len() == hidden1.fan_in * hidden1.fan_out
            && hidden2.weights.len() == hidden2.fan_in * hidden2.fan_out
            && output.weights.len() == output.fan_in;
        if !chain_ok {
            return Err(Error::DimensionMismatch {
                context: "NeuralNet::from_parts",
                unit: "layer shapes",
                expected: conv.out_channels * n_inputs,
                got: hidden1.fan_in,
            });
        }
        Ok(NeuralNet {
            conv,
            hidden1,
            hidden2,
            output,
            huber_delta,
            n_inputs,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn param_count(&self) -> usize {
        self.conv.n_params()
            + self.hidden1.n_params()
            + self.hidden2.n_params()
            + self.output.n_params()
    }

    pub fn tensors(&self) -> [&Vec<f64>; 8] {
        [
            &self.conv.weights, &self.conv.biases, &self.hidden1.weights, &self.hidden1.biases,
            &self.hidden2.weights, &self.hidden2.biases, &self.output.weights,
            &self.output.biases,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.conv.weights, &mut self.conv.biases, &mut self.hidden1.weights,
            &mut self.hidden1.biases, &mut self.hidden2.weights, &mut self.hidden2.biases,
            &mut self.output.weights, &mut self.output.biases,
        ]
    }

    pub fn get_param(&self, mut index: usize) -> f64 {
        for t in self.tensors() {
            if index < t.len() {
                return t[index];
            }
            index -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut index: usize, value: f64) {
        for t in self.tensors_mut() {
            if index < t.len() {
                t[index] = value;
                return;
            }
            index -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn make_cache(&self) -> ForwardCache {
        let flat = self.conv.out_channels * self.n_inputs;
        ForwardCache {
            x: vec![0.0; self.n_inputs],
            conv_out: vec![0.0; flat],
            h1_pre: vec![0.0; self.hidden1.fan_out],
            h1: vec![0.0; self.hidden1.fan_out],
            h2_pre: vec![0.0; self.hidden2.fan_out],
            h2: vec![0.0; self.hidden2.fan_out],
            y_hat: 0.0,
            d_h2: vec![0.0; self.hidden2.fan_out],
            d_h1: vec![0.0; self.hidden1.fan_out],
            d_conv: vec![0.0; flat],
        }
    }

    /// Forward pass recording every activation needed by backprop.
    pub fn forward_cached(&self, x: &[f64], cache: &mut ForwardCache) -> Result<f64> {
        if x.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                context: "NeuralNet::forward",
                unit: "inputs",
                expected: self.n_inputs,
                got: x.len(),
            });
        }
        cache.x.copy_from_slice(x);
        self.conv.forward_into(x, self.n_inputs, &mut cache.conv_out)?;
        self.hidden1.affine_into(&cache.conv_out, &mut cache.h1_pre);
        for (a, &p) in cache.h1.iter_mut().zip(&cache.h1_pre) {
            *a = elu(p);
        }
        self.hidden2.affine_into(&cache.h1, &mut cache.h2_pre);
        for (a, &p) in cache.h2.iter_mut().zip(&cache.h2_pre) {
            *a = elu(p);
        }
        let mut y = [0.0];
        self.output.affine_into(&cache.h2, &mut y);
        cache.y_hat = y[0];
        Ok(cache.y_hat)
    }

    /// Prediction for one input row.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let mut cache = self.make_cache();
        self.forward_cached(x, &mut cache)
    }

    /// Adds this sample's Huber-loss gradient into `grads`. Requires the
    /// cache from the immediately preceding `forward_cached` on the same
    /// input.
    pub fn accumulate_gradients(&self, cache: &mut ForwardCache, y: f64, grads: &mut NetGradients) {
        let d_y = loss::huber_grad_raw(y, cache.y_hat, self.huber_delta);

        // Output layer (linear head).
        for (i, &h) in cache.h2.iter().enumerate() {
            grads.out_w[i] += d_y * h;
            cache.d_h2[i] = d_y * self.output.weights[i];
        }
        grads.out_b[0] += d_y;

        // Hidden 2: post-activation deltas become pre-activation deltas.
        for (d, &pre) in cache.d_h2.iter_mut().zip(&cache.h2_pre) {
            *d *= elu_prime(pre);
        }
        cache.d_h1.fill(0.0);
        let fo2 = self.hidden2.fan_out;
        for (i, &h) in cache.h1.iter().enumerate() {
            let w_row = &self.hidden2.weights[i * fo2..(i + 1) * fo2];
            let g_row = &mut grads.h2_w[i * fo2..(i + 1) * fo2];
            let mut back = 0.0;
            for j in 0..fo2 {
                g_row[j] += h * cache.d_h2[j];
                back += w_row[j] * cache.d_h2[j];
            }
            cache.d_h1[i] += back;
        }
        for (g, &d) in grads.h2_b.iter_mut().zip(&cache.d_h2) {
            *g += d;
        }

        // Hidden 1.
        for (d, &pre) in cache.d_h1.iter_mut().zip(&cache.h1_pre) {
            *d *= elu_prime(pre);
        }
        cache.d_conv.fill(0.0);
        let fo1 = self.hidden1.fan_out;
        for (i, &c) in cache.conv_out.iter().enumerate() {
            let w_row = &self.hidden1.weights[i * fo1..(i + 1) * fo1];
            let g_row = &mut grads.h1_w[i * fo1..(i + 1) * fo1];
            let mut back = 0.0;
            for j in 0..fo1 {
                g_row[j] += c * cache.d_h1[j];
                back += w_row[j] * cache.d_h1[j];
            }
            cache.d_conv[i] = back;
        }
        for (g, &d) in grads.h1_b.iter_mut().zip(&cache.d_h1) {
            *g += d;
        }

        // Conv layer: accumulate kernel gradients over sliding positions.
        let len = self.n_inputs;
        let pad = (self.conv.kernel_size - 1) / 2;
        for o in 0..self.conv.out_channels {
            let d_ch = &cache.d_conv[o * len..(o + 1) * len];
            grads.conv_b[o] += d_ch.iter().sum::<f64>();
            for j in 0..self.conv.kernel_size {
                let mut acc = 0.0;
                for (t, &d) in d_ch.iter().enumerate() {
                    let src = t + j;
                    if src >= pad && src - pad < len {
                        acc += d * cache.x[src - pad];
                    }
                }
                grads.conv_w[self.conv.weight_index(o, 0, j)] += acc;
            }
        }
    }
}

/// Loss and full analytic gradient of the Huber loss at one sample.
pub fn backward(net: &NeuralNet, x: &[f64], y: f64) -> Result<(f64, NetGradients)> {
    let mut cache = net.make_cache();
    let y_hat = net.forward_cached(x, &mut cache)?;
    let mut grads = NetGradients::zeros_like(net);
    net.accumulate_gradients(&mut cache, y, &mut grads);
    Ok((loss::huber_raw(y, y_hat, net.huber_delta), grads))
}

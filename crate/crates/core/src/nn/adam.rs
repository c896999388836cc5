//! Adam with bias correction.

use super::{NetGradients, NeuralNet};

/// First and second moment accumulators, one pair per parameter tensor,
/// shapes mirroring the network exactly.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &NeuralNet, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let m: Vec<Vec<f64>> = net.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        let v = m.clone();
        AdamState {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m,
            v,
        }
    }
}

/// One Adam update: moment updates, bias correction, parameter step.
pub fn adam_step(net: &mut NeuralNet, grads: &NetGradients, state: &mut AdamState) {
    state.step += 1;
    let c1 = 1.0 - state.beta1.powi(state.step as i32);
    let c2 = 1.0 - state.beta2.powi(state.step as i32);
    let (b1, b2) = (state.beta1, state.beta2);

    for ((params, grad), (m, v)) in net
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for i in 0..params.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            params[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_net() -> NeuralNet {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        NeuralNet::with_dims(2, 1, 3, 2, 2, 1.0, &mut rng)
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut net = tiny_net();
        let before: Vec<f64> = net.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        let grads = NetGradients::zeros_like(&net);
        let mut state = AdamState::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        adam_step(&mut net, &grads, &mut state);
        let after: Vec<f64> = net.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        assert_eq!(before, after);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_learning_rate() {
        let mut net = tiny_net();
        let p0 = net.get_param(0);
        let mut grads = NetGradients::zeros_like(&net);
        grads.conv_w[0] = 1.0;
        let mut state = AdamState::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        adam_step(&mut net, &grads, &mut state);
        // m_hat = 1, v_hat = 1 after one step, so the move is -lr/(1+eps).
        let delta = net.get_param(0) - p0;
        assert!((delta + 1e-3).abs() < 1e-9, "delta {delta}");
    }

    #[test]
    fn constant_gradient_update_approaches_learning_rate() {
        let mut net = tiny_net();
        let mut grads = NetGradients::zeros_like(&net);
        grads.conv_w[0] = 0.37;
        let mut state = AdamState::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        let mut prev = net.get_param(0);
        let mut last_delta = 0.0;
        for _ in 0..2000 {
            adam_step(&mut net, &grads, &mut state);
            last_delta = net.get_param(0) - prev;
            prev = net.get_param(0);
        }
        assert!((last_delta.abs() - 1e-3).abs() < 1e-5, "delta {last_delta}");
    }
}

//! Exponential linear unit with alpha = 1.

/// `z` for positive inputs, `exp(z) - 1` otherwise; approaches -1 as
/// `z -> -inf`.
pub fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp() - 1.0
    }
}

/// Derivative of [`elu`]: 1 above zero, `exp(z)` at or below it. Both
/// branches agree at z = 0.
pub fn elu_prime(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        z.exp()
    }
}

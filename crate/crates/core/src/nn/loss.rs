//! Regression losses: Huber (training objective), MSE and MAE (reporting).

use crate::error::{Error, Result};

#[inline]
pub(crate) fn huber_raw(y: f64, y_hat: f64, delta: f64) -> f64 {
    let r = y - y_hat;
    if r.abs() <= delta {
        0.5 * r * r
    } else {
        delta * (r.abs() - 0.5 * delta)
    }
}

/// dL/dŷ of the Huber loss: the residual inside the quadratic region,
/// ±delta outside it.
#[inline]
pub(crate) fn huber_grad_raw(y: f64, y_hat: f64, delta: f64) -> f64 {
    let r = y_hat - y;
    if r.abs() <= delta {
        r
    } else {
        delta * r.signum()
    }
}

/// Quadratic within `delta` of zero residual, linear beyond.
pub fn huber_loss(y: f64, y_hat: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(huber_raw(y, y_hat, delta))
}

/// Derivative of [`huber_loss`] with respect to the prediction.
pub fn huber_loss_grad(y: f64, y_hat: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(huber_grad_raw(y, y_hat, delta))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 {
        Ok(())
    } else {
        Err(Error::Config {
            reason: format!("huber delta must be positive, got {delta}"),
        })
    }
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat, "mse")?;
    let n = y.len() as f64;
    Ok(y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat, "mae")?;
    let n = y.len() as f64;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
}

fn check_pair(y: &[f64], y_hat: &[f64], context: &'static str) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput { context });
    }
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            context,
            unit: "values",
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    Ok(())
}

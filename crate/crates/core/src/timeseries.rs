//! Scalar series smoothing: exponential moving average and its
//! agreement-weighted counterpart.
//!
//! The SNAP moving average looks at the trailing window `t-s ..= t`. Inside
//! the window, each value's disagreement with the others is discounted by
//! `(1-α)^(t-j)` so recent values dominate, exactly as in an EMA. The window
//! scores are normalized, turned into weights with the half-kernel fitted on
//! that window alone, and the smoothed value is the weighted sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{weights_from_delta, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub alpha: f64,
    /// Number of past values `s` in the window; the window holds `s + 1`.
    pub window: usize,
    pub kernel: KernelSpec,
}

impl SmoothingConfig {
    /// Config with the customary window `s = floor(2/α - 1)`, at least one.
    pub fn new(alpha: f64, kernel: KernelSpec) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            window: default_window(alpha),
            kernel,
        })
    }

    pub fn with_window(self, window: usize) -> Self {
        Self { window, ..self }
    }

    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn default_window(alpha: f64) -> usize {
    // the epsilon keeps 2/α - 1 = 19 from flooring to 18 for α = 0.1
    ((2.0 / alpha - 1.0 + 1e-9).floor() as usize).max(1)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1]"
        )))
    }
}

/// `y_0 = x_0`, `y_t = α x_t + (1-α) y_{t-1}`.
pub fn ema(series: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let (&first, rest) = series.split_first().ok_or(Error::Empty)?;
    let mut out = Vec::with_capacity(series.len());
    out.push(first);
    let mut prev = first;
    for &x in rest {
        prev = alpha * x + (1.0 - alpha) * prev;
        out.push(prev);
    }
    Ok(out)
}

/// Agreement-weighted moving average. Windows at the start of the series are
/// truncated to the available values.
pub fn snap_moving_average(series: &[f64], cfg: &SmoothingConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if series.is_empty() {
        return Err(Error::Empty);
    }
    Ok((0..series.len())
        .map(|t| {
            let start = t.saturating_sub(cfg.window);
            let window = &series[start..=t];
            let w = window_weights(window, cfg.alpha, cfg.kernel);
            window.iter().zip(&w).map(|(x, wi)| x * wi).sum()
        })
        .collect())
}

/// Weights for one window whose last element is the current time step.
pub fn window_weights(window: &[f64], alpha: f64, kernel: KernelSpec) -> Vec<f64> {
    let len = window.len();
    if len == 1 {
        return vec![1.0];
    }
    let decay: Vec<f64> = (0..len)
        .map(|j| (1.0 - alpha).powi((len - 1 - j) as i32))
        .collect();
    let raw: Vec<f64> = window
        .iter()
        .map(|xi| {
            window
                .iter()
                .zip(&decay)
                .map(|(xj, dj)| dj * (xi - xj).abs())
                .sum()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return vec![1.0 / len as f64; len];
    }
    let delta: Vec<f64> = raw.iter().map(|r| r / total).collect();
    weights_from_delta(&delta, kernel).into_vec()
}

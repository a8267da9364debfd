//! One-dimensional Gaussian Parzen window over shell distances.
//!
//! Bandwidth follows Silverman's rule `1.06 * sd * n^(-1/5)` with a floor of
//! `1e-6 * (1 + mean)` so that zero-spread inputs still give a proper density.
//! Evaluation is an exact sum over every support point, `O(n)` per call.
//! Values are used as scores directly and are not rescaled.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    points: Vec<f64>,
    bandwidth: f64,
}

impl DensityModel {
    /// Rebuilds a model from stored support points and bandwidth.
    pub fn from_parts(points: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("density support"));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("points", alloc::format!("support point {i} must be finite and non-negative")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid("bandwidth", "must be positive and finite"));
        }
        Ok(DensityModel { points, bandwidth })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let inv2h2 = 1.0 / (2.0 * h * h);
        let sum: f64 = self.points.iter().map(|&p| libm::exp(-(x - p) * (x - p) * inv2h2)).sum();
        sum / (self.points.len() as f64 * h * libm::sqrt(2.0 * PI))
    }

    /// Value at a kernel peak of a single-point model, `1 / (h sqrt(2 pi))`.
    pub fn peak_height(&self) -> f64 {
        1.0 / (self.bandwidth * libm::sqrt(2.0 * PI))
    }
}

/// Silverman bandwidth with the degenerate-spread floor.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 {
        libm::sqrt(x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    let floor = 1e-6 * (1.0 + mean);
    (1.06 * sd * libm::pow(n, -0.2)).max(floor)
}

pub fn estimate_density(x: &[f64]) -> Result<DensityModel> {
    if x.is_empty() {
        return Err(Error::Empty("density input"));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let h = silverman_bandwidth(x);
    DensityModel::from_parts(x.to_vec(), h)
}

pub fn eval_density(model: &DensityModel, x: f64) -> f64 {
    model.eval(x)
}

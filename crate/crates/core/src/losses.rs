//! Training objectives over caller-supplied feature maps and discriminator
//! scores. Nothing here knows about networks; callers pass the tensors.

use ndarray::{Array3, Zip};
use thiserror::Error;

pub const DEFAULT_PERCEPTUAL_WEIGHT: f64 = 10.0;
pub const DEFAULT_FEATURE_MATCHING_WEIGHT: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite input")]
    NonFinite,
    #[error("{fm} feature-matching terms but {adv} adversarial terms")]
    LengthMismatch { fm: usize, adv: usize },
}

/// Feature maps of successive layers, each shaped `(channels, height, width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    layers: Vec<Array3<f64>>,
}

impl FeatureStack {
    pub fn new(layers: Vec<Array3<f64>>) -> Result<Self, LossError> {
        if layers.is_empty() || layers.iter().any(|l| l.is_empty()) {
            return Err(LossError::EmptyInput);
        }
        if !layers.iter().all(|l| l.iter().all(|v| v.is_finite())) {
            return Err(LossError::NonFinite);
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Array3<f64>] {
        &self.layers
    }
}

fn mean_abs_diff(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
    let mut total = 0.0;
    Zip::from(a).and(b).for_each(|x, y| total += (x - y).abs());
    total / a.len() as f64
}

// Mean over layers of the per-layer mean absolute difference.
fn layered_l1(real: &FeatureStack, fake: &FeatureStack) -> Result<f64, LossError> {
    if real.layers.len() != fake.layers.len() {
        return Err(LossError::ShapeMismatch(format!(
            "{} layers vs {} layers",
            real.layers.len(),
            fake.layers.len()
        )));
    }
    let mut sum = 0.0;
    for (i, (r, f)) in real.layers.iter().zip(&fake.layers).enumerate() {
        if r.shape() != f.shape() {
            return Err(LossError::ShapeMismatch(format!(
                "layer {i}: {:?} vs {:?}",
                r.shape(),
                f.shape()
            )));
        }
        sum += mean_abs_diff(r, f);
    }
    Ok(sum / real.layers.len() as f64)
}

/// `(1/N) sum_i mean|phi_i(real) - phi_i(fake)|` over the `N` layers.
pub fn perceptual_loss(real: &FeatureStack, fake: &FeatureStack) -> Result<f64, LossError> {
    layered_l1(real, fake)
}

/// One feature-matching value per discriminator scale.
pub fn feature_matching_loss(
    real_per_scale: &[FeatureStack],
    fake_per_scale: &[FeatureStack],
) -> Result<Vec<f64>, LossError> {
    if real_per_scale.len() != fake_per_scale.len() {
        return Err(LossError::ShapeMismatch(format!(
            "{} scales vs {} scales",
            real_per_scale.len(),
            fake_per_scale.len()
        )));
    }
    real_per_scale
        .iter()
        .zip(fake_per_scale)
        .map(|(r, f)| layered_l1(r, f))
        .collect()
}

fn check_scores(scores: &[f64]) -> Result<(), LossError> {
    if scores.is_empty() {
        return Err(LossError::EmptyInput);
    }
    if !scores.iter().all(|v| v.is_finite()) {
        return Err(LossError::NonFinite);
    }
    Ok(())
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// Discriminator hinge loss `-E[min(0, -1 + D(real))] - E[min(0, -1 - D(fake))]`.
pub fn hinge_d_loss(d_real: &[f64], d_fake: &[f64]) -> Result<f64, LossError> {
    check_scores(d_real)?;
    check_scores(d_fake)?;
    let real = mean(d_real.iter().map(|d| (-1.0 + d).min(0.0)));
    let fake = mean(d_fake.iter().map(|d| (-1.0 - d).min(0.0)));
    Ok(-real - fake)
}

/// Generator adversarial loss `-E[D(fake)]`.
pub fn hinge_g_loss(d_fake: &[f64]) -> Result<f64, LossError> {
    check_scores(d_fake)?;
    Ok(-mean(d_fake.iter().copied()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weight on the perceptual term.
    pub alpha: f64,
    /// Weight on each feature-matching term.
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_PERCEPTUAL_WEIGHT,
            beta: DEFAULT_FEATURE_MATCHING_WEIGHT,
        }
    }
}

/// `alpha * percept + sum_k (beta * fm[k] + adv[k])`.
pub fn total_loss(
    percept: f64,
    fm_per_scale: &[f64],
    adv_per_scale: &[f64],
    weights: LossWeights,
) -> Result<f64, LossError> {
    if fm_per_scale.len() != adv_per_scale.len() {
        return Err(LossError::LengthMismatch {
            fm: fm_per_scale.len(),
            adv: adv_per_scale.len(),
        });
    }
    let per_scale: f64 = fm_per_scale
        .iter()
        .zip(adv_per_scale)
        .map(|(fm, adv)| weights.beta * fm + adv)
        .sum();
    Ok(weights.alpha * percept + per_scale)
}

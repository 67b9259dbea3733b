//! Graph self-attention over the entries of one style vector.
//!
//! For a vector `a` of length `N`, every ordered pair `(i, j)` is scored by a
//! two-input linear map of `(a[i], a[j])` followed by a LeakyReLU:
//!
//! ```text
//! e[i][j] = leaky(w1 * a[i] + w2 * a[j] + bias)
//! s[i][j] = softmax_j(e[i][j])
//! a'[i]   = (1 / N) * sum_j s[i][j] * a[j]
//! out     = a + a'
//! ```
//!
//! The `1 / N` factor can be dropped with [`Averaging::Sum`], which gives the
//! usual attention-weighted sum. [`backward`] returns exact gradients of
//! `out` with respect to `a` and the three weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spse::StyleCodes;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsasError {
    #[error("non-finite value in attention{}", label.map(|l| format!(" for label {l}")).unwrap_or_default())]
    NonFinite { label: Option<usize> },
    #[error("invalid attention parameters: {0}")]
    InvalidParams(String),
    #[error("style vector is empty")]
    EmptyInput,
    #[error("upstream gradient has length {actual}, expected {expected}")]
    GradientLength { expected: usize, actual: usize },
}

/// Weights of the pairwise scoring map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsasParams {
    /// Weight on `a[i]` (the row-constant channel).
    pub w1: f64,
    /// Weight on `a[j]` (the transposed channel).
    pub w2: f64,
    pub bias: f64,
    pub leaky_slope: f64,
}

impl Default for GsasParams {
    fn default() -> Self {
        Self::zeros()
    }
}

impl GsasParams {
    pub fn zeros() -> Self {
        Self {
            w1: 0.0,
            w2: 0.0,
            bias: 0.0,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    /// Weights drawn uniformly from `[-0.1, 0.1]` with a seeded generator.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            w1: rng.random_range(-0.1..=0.1),
            w2: rng.random_range(-0.1..=0.1),
            bias: rng.random_range(-0.1..=0.1),
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<(), GsasError> {
        if ![self.w1, self.w2, self.bias].iter().all(|v| v.is_finite()) {
            return Err(GsasError::InvalidParams("weights must be finite".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(GsasError::InvalidParams(format!(
                "leaky_slope must lie in (0, 1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }

    fn leaky(&self, z: f64) -> f64 {
        if z > 0.0 {
            z
        } else {
            self.leaky_slope * z
        }
    }

    fn leaky_grad(&self, z: f64) -> f64 {
        if z > 0.0 {
            1.0
        } else {
            self.leaky_slope
        }
    }
}

/// How the attention-weighted values are pooled over `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// `a'[i] = (1/N) sum_j s[i][j] a[j]`.
    #[default]
    Mean,
    /// `a'[i] = sum_j s[i][j] a[j]`.
    Sum,
}

impl Averaging {
    fn factor(self, n: usize) -> f64 {
        match self {
            Averaging::Mean => 1.0 / n as f64,
            Averaging::Sum => 1.0,
        }
    }
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    pub n: usize,
    /// Row-major `N x N` correlation coefficients.
    pub e: Vec<f64>,
    /// Row-major `N x N` softmax scores; rows sum to one.
    pub s: Vec<f64>,
    pub a_prime: Vec<f64>,
    pub output: Vec<f64>,
}

impl AttentionTrace {
    pub fn score_row(&self, i: usize) -> &[f64] {
        &self.s[i * self.n..(i + 1) * self.n]
    }
}

/// Gradients of a scalar loss through [`forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct GsasGradients {
    pub a: Vec<f64>,
    pub w1: f64,
    pub w2: f64,
    pub bias: f64,
}

fn check_input(a: &[f64], params: &GsasParams) -> Result<(), GsasError> {
    params.validate()?;
    if a.is_empty() {
        return Err(GsasError::EmptyInput);
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(GsasError::NonFinite { label: None });
    }
    Ok(())
}

pub fn forward(
    a: &[f64],
    params: &GsasParams,
    averaging: Averaging,
) -> Result<AttentionTrace, GsasError> {
    check_input(a, params)?;
    let n = a.len();
    let c = averaging.factor(n);
    let mut e = vec![0.0; n * n];
    let mut s = vec![0.0; n * n];
    let mut a_prime = vec![0.0; n];
    for i in 0..n {
        let row_e = &mut e[i * n..(i + 1) * n];
        let base = params.w1 * a[i] + params.bias;
        for (j, v) in row_e.iter_mut().enumerate() {
            *v = params.leaky(base + params.w2 * a[j]);
        }
        let max = row_e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let row_s = &mut s[i * n..(i + 1) * n];
        let mut total = 0.0;
        for (sv, &ev) in row_s.iter_mut().zip(row_e.iter()) {
            *sv = (ev - max).exp();
            total += *sv;
        }
        let mut acc = 0.0;
        for (sv, &aj) in row_s.iter_mut().zip(a) {
            *sv /= total;
            acc += *sv * aj;
        }
        a_prime[i] = c * acc;
    }
    let output: Vec<f64> = a.iter().zip(&a_prime).map(|(x, y)| x + y).collect();
    if !output.iter().chain(&e).all(|v| v.is_finite()) {
        return Err(GsasError::NonFinite { label: None });
    }
    Ok(AttentionTrace {
        n,
        e,
        s,
        a_prime,
        output,
    })
}

/// Backpropagates `upstream` (the gradient of a loss with respect to the
/// forward output) to the input vector and the weights.
pub fn backward(
    a: &[f64],
    params: &GsasParams,
    averaging: Averaging,
    upstream: &[f64],
) -> Result<GsasGradients, GsasError> {
    let trace = forward(a, params, averaging)?;
    let n = a.len();
    if upstream.len() != n {
        return Err(GsasError::GradientLength {
            expected: n,
            actual: upstream.len(),
        });
    }
    let c = averaging.factor(n);
    let mut grad_a = upstream.to_vec();
    let (mut gw1, mut gw2, mut gb) = (0.0, 0.0, 0.0);
    let mut col_z = vec![0.0; n];
    for i in 0..n {
        let g = upstream[i];
        if g == 0.0 {
            continue;
        }
        let row_s = trace.score_row(i);
        // Weighted mean of a under row i's scores.
        let mean: f64 = row_s.iter().zip(a).map(|(s, x)| s * x).sum();
        let mut row_z = 0.0;
        for j in 0..n {
            let sij = row_s[j];
            // value path: a'[i] depends on a[j] linearly
            grad_a[j] += c * g * sij;
            // softmax then LeakyReLU
            let z = params.w1 * a[i] + params.w2 * a[j] + params.bias;
            let dz = c * g * sij * (a[j] - mean) * params.leaky_grad(z);
            row_z += dz;
            col_z[j] += dz;
            gw1 += dz * a[i];
            gw2 += dz * a[j];
            gb += dz;
        }
        grad_a[i] += params.w1 * row_z;
    }
    for j in 0..n {
        grad_a[j] += params.w2 * col_z[j];
    }
    let grads = GsasGradients {
        a: grad_a,
        w1: gw1,
        w2: gw2,
        bias: gb,
    };
    if !grads
        .a
        .iter()
        .chain([&grads.w1, &grads.w2, &grads.bias])
        .all(|v| v.is_finite())
    {
        return Err(GsasError::NonFinite { label: None });
    }
    Ok(grads)
}

/// Applies [`forward`] to every present label's code with one shared set of
/// weights. Raw codes and absent labels pass through unchanged.
pub fn refine_codes(
    codes: &StyleCodes,
    params: &GsasParams,
    averaging: Averaging,
) -> Result<StyleCodes, GsasError> {
    params.validate()?;
    let mut out = codes.clone();
    for label in out.labels.iter_mut().filter(|l| l.present) {
        let trace = forward(&label.code, params, averaging).map_err(|e| match e {
            GsasError::NonFinite { .. } => GsasError::NonFinite {
                label: Some(label.id),
            },
            other => other,
        })?;
        label.code = trace.output;
    }
    Ok(out)
}

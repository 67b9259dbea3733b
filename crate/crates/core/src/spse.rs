//! Parameter-free style codes: per-superpixel mean colors of the original
//! image, flattened per label and linearly resampled to a fixed length.

use thiserror::Error;

use crate::color::RgbImage;
use crate::mask_slic::{SemanticMask, SuperpixelMap};

pub const DEFAULT_CODE_LENGTH: usize = 512;
pub const MIN_CODE_LENGTH: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("style code length must be at least {MIN_CODE_LENGTH}, got {0}")]
    InvalidLength(usize),
}

/// Style code of one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCode {
    pub id: usize,
    pub present: bool,
    /// Mean RGB per superpixel in `[0, 1]`, interleaved `[r0, g0, b0, r1, ...]`.
    /// Empty for absent labels.
    pub raw: Vec<f64>,
    /// `raw` resampled to the code length; all zeros for absent labels.
    pub code: Vec<f64>,
}

impl LabelCode {
    pub fn absent(id: usize, n: usize) -> Self {
        Self {
            id,
            present: false,
            raw: Vec::new(),
            code: vec![0.0; n],
        }
    }

    /// Number of superpixels behind `raw`.
    pub fn superpixels(&self) -> usize {
        self.raw.len() / 3
    }
}

/// Fixed-length style codes for every label of a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleCodes {
    /// Code length `N`.
    pub n: usize,
    /// Requested superpixels per label at extraction time.
    pub k: usize,
    /// Indexed by label id.
    pub labels: Vec<LabelCode>,
}

impl StyleCodes {
    /// Codes with every label absent.
    pub fn empty(label_count: usize, n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            labels: (0..label_count)
                .map(|id| LabelCode::absent(id, n))
                .collect(),
        }
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, label: usize) -> Option<&LabelCode> {
        self.labels.get(label)
    }

    pub fn present_labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().filter(|l| l.present).map(|l| l.id)
    }
}

/// Linearly resamples `raw` to `n` samples, treating entry `j` as the value
/// at `j / (m - 1)`. Endpoints are kept and `m == n` is the identity.
pub fn resample_code(raw: &[f64], n: usize) -> Vec<f64> {
    let m = raw.len();
    assert!(m >= 1, "cannot resample an empty code");
    if m == n {
        return raw.to_vec();
    }
    if m == 1 || n == 1 {
        return vec![raw[0]; n];
    }
    let (num, den) = (m - 1, n - 1);
    (0..n)
        .map(|i| {
            let pos = i * num;
            let lo = pos / den;
            let rem = pos % den;
            if rem == 0 {
                return raw[lo];
            }
            let (a, b) = (raw[lo], raw[lo + 1]);
            let t = rem as f64 / den as f64;
            (a + (b - a) * t).clamp(a.min(b), a.max(b))
        })
        .collect()
}

/// Averages the original image's colors over every superpixel and turns the
/// per-label means into codes of length `n`.
pub fn extract_style_codes(
    img: &RgbImage,
    mask: &SemanticMask,
    spmap: &SuperpixelMap,
    n: usize,
) -> Result<StyleCodes, CodeError> {
    if n < MIN_CODE_LENGTH {
        return Err(CodeError::InvalidLength(n));
    }
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(CodeError::DimensionMismatch(format!(
            "image is {}x{} but mask is {}x{}",
            img.width(),
            img.height(),
            mask.width(),
            mask.height()
        )));
    }
    if !spmap.matches_mask(mask) {
        return Err(CodeError::DimensionMismatch(
            "superpixel map was not computed for this mask".into(),
        ));
    }

    let label_count = mask.label_count();
    let mut sums: Vec<Vec<[u64; 3]>> = (0..label_count)
        .map(|l| vec![[0; 3]; spmap.cluster_count(l)])
        .collect();
    let mut counts: Vec<Vec<u64>> = (0..label_count)
        .map(|l| vec![0; spmap.cluster_count(l)])
        .collect();
    for (i, rgb) in img.pixels().enumerate() {
        let (label, cluster) = spmap.pixel(i);
        let s = &mut sums[label][cluster];
        for c in 0..3 {
            s[c] += u64::from(rgb[c]);
        }
        counts[label][cluster] += 1;
    }

    let k = spmap.k();
    let labels = (0..label_count)
        .map(|id| {
            if spmap.label(id).is_none() {
                return LabelCode::absent(id, n);
            }
            let raw: Vec<f64> = sums[id]
                .iter()
                .zip(&counts[id])
                .flat_map(|(s, &cnt)| s.map(|v| v as f64 / cnt as f64 / 255.0))
                .collect();
            let code = resample_code(&raw, n);
            LabelCode {
                id,
                present: true,
                raw,
                code,
            }
        })
        .collect();
    Ok(StyleCodes { n, k, labels })
}

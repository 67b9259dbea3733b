//! Region-wise style editing on code sets, and coarse reconstruction that
//! paints every superpixel with its stored mean color.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::color::RgbImage;
use crate::mask_slic::{SemanticMask, SuperpixelMap};
use crate::spse::StyleCodes;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixError {
    #[error("code sets disagree: {0}")]
    Incompatible(String),
    #[error("label {label} is absent in donor '{donor}'")]
    LabelAbsentInDonor { label: usize, donor: String },
    #[error("label {label} is out of range for {label_count} labels")]
    LabelOutOfRange { label: usize, label_count: usize },
    #[error("recipe references unknown donor '{0}'")]
    UnknownDonor(String),
    #[error("label {0} is assigned more than once")]
    DuplicateLabel(usize),
    #[error("label {label} has {actual} raw values, expected {expected}")]
    CodeLengthMismatch {
        label: usize,
        expected: usize,
        actual: usize,
    },
    #[error("superpixel map and mask disagree")]
    DimensionMismatch,
}

fn check_compatible(a: &StyleCodes, b: &StyleCodes) -> Result<(), MixError> {
    if a.n != b.n || a.label_count() != b.label_count() {
        return Err(MixError::Incompatible(format!(
            "N={} L={} vs N={} L={}",
            a.n,
            a.label_count(),
            b.n,
            b.label_count()
        )));
    }
    Ok(())
}

/// Replaces the codes of `labels` in `source` with those of `style`.
pub fn swap_codes(
    source: &StyleCodes,
    style: &StyleCodes,
    labels: &BTreeSet<usize>,
) -> Result<StyleCodes, MixError> {
    check_compatible(source, style)?;
    let mut out = source.clone();
    for &label in labels {
        let donor = style.get(label).ok_or(MixError::LabelOutOfRange {
            label,
            label_count: style.label_count(),
        })?;
        if !donor.present {
            return Err(MixError::LabelAbsentInDonor {
                label,
                donor: "style".into(),
            });
        }
        out.labels[label] = donor.clone();
    }
    Ok(out)
}

/// Which donor supplies each label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MixRecipe {
    pub assignments: Vec<(usize, String)>,
}

impl MixRecipe {
    pub fn new(assignments: Vec<(usize, String)>) -> Result<Self, MixError> {
        let mut seen = BTreeSet::new();
        for (label, _) in &assignments {
            if !seen.insert(*label) {
                return Err(MixError::DuplicateLabel(*label));
            }
        }
        Ok(Self { assignments })
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Donor tags in first-use order.
    pub fn donor_tags(&self) -> Vec<&str> {
        let mut tags: Vec<&str> = Vec::new();
        for (_, tag) in &self.assignments {
            if !tags.contains(&tag.as_str()) {
                tags.push(tag);
            }
        }
        tags
    }
}

/// Applies `recipe` on top of `base`: listed labels come from their donors,
/// every other label keeps `base`'s code.
pub fn apply_recipe(
    base: &StyleCodes,
    recipe: &MixRecipe,
    donors: &BTreeMap<String, StyleCodes>,
) -> Result<StyleCodes, MixError> {
    let mut out = base.clone();
    let mut seen = BTreeSet::new();
    for (label, tag) in &recipe.assignments {
        if !seen.insert(*label) {
            return Err(MixError::DuplicateLabel(*label));
        }
        let donor = donors
            .get(tag)
            .ok_or_else(|| MixError::UnknownDonor(tag.clone()))?;
        check_compatible(base, donor)?;
        let code = donor.get(*label).ok_or(MixError::LabelOutOfRange {
            label: *label,
            label_count: donor.label_count(),
        })?;
        if !code.present {
            return Err(MixError::LabelAbsentInDonor {
                label: *label,
                donor: tag.clone(),
            });
        }
        out.labels[*label] = code.clone();
    }
    Ok(out)
}

/// Builds a code set purely from donors: listed labels take their donor's
/// code, unlisted labels are absent.
pub fn mix_codes(
    recipe: &MixRecipe,
    donors: &BTreeMap<String, StyleCodes>,
) -> Result<StyleCodes, MixError> {
    let first = donors
        .values()
        .next()
        .ok_or_else(|| MixError::Incompatible("no donors given".into()))?;
    for d in donors.values() {
        check_compatible(first, d)?;
    }
    let base = StyleCodes::empty(first.label_count(), first.n, first.k);
    apply_recipe(&base, recipe, donors)
}

fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Paints each pixel with the raw mean color of its superpixel; pixels whose
/// label has no code are black.
pub fn coarse_reconstruct(
    codes: &StyleCodes,
    spmap: &SuperpixelMap,
    mask: &SemanticMask,
) -> Result<RgbImage, MixError> {
    if !spmap.matches_mask(mask) {
        return Err(MixError::DimensionMismatch);
    }
    if codes.label_count() != mask.label_count() {
        return Err(MixError::Incompatible(format!(
            "codes have {} labels, mask has {}",
            codes.label_count(),
            mask.label_count()
        )));
    }
    let mut palettes: Vec<Option<Vec<[u8; 3]>>> = Vec::with_capacity(codes.label_count());
    for (label, code) in codes.labels.iter().enumerate() {
        let clusters = spmap.cluster_count(label);
        if !code.present || clusters == 0 {
            palettes.push(None);
            continue;
        }
        if code.raw.len() != 3 * clusters {
            return Err(MixError::CodeLengthMismatch {
                label,
                expected: 3 * clusters,
                actual: code.raw.len(),
            });
        }
        palettes.push(Some(
            code.raw
                .chunks_exact(3)
                .map(|c| [to_u8(c[0]), to_u8(c[1]), to_u8(c[2])])
                .collect(),
        ));
    }
    let mut img = RgbImage::filled(mask.width(), mask.height(), [0, 0, 0])
        .map_err(|_| MixError::DimensionMismatch)?;
    for i in 0..mask.width() * mask.height() {
        let (label, cluster) = spmap.pixel(i);
        if let Some(palette) = &palettes[label] {
            img.set_pixel(i, palette[cluster]);
        }
    }
    Ok(img)
}

//! End-to-end helpers shared by the command-line tool and the tests.

use thiserror::Error;

use crate::color::{rgb_to_labxy, RgbImage};
use crate::mask_slic::{cluster, ClusterError, SemanticMask, SlicParams, SuperpixelMap};
use crate::spse::{extract_style_codes, CodeError, StyleCodes};

/// Color used for superpixel borders in [`boundary_overlay`].
pub const BOUNDARY_COLOR: [u8; 3] = [255, 0, 0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Converts the image to `[l a b x y]`, clusters every label and extracts
/// style codes of length `n`.
pub fn encode(
    img: &RgbImage,
    mask: &SemanticMask,
    params: &SlicParams,
    n: usize,
) -> Result<(SuperpixelMap, StyleCodes), PipelineError> {
    let labxy = rgb_to_labxy(img, 1.0);
    let spmap = cluster(&labxy, mask, params)?;
    let codes = extract_style_codes(img, mask, &spmap, n)?;
    Ok((spmap, codes))
}

/// Marks every pixel whose right or lower neighbour belongs to another
/// superpixel.
pub fn boundary_mask(spmap: &SuperpixelMap) -> Vec<bool> {
    let (w, h) = (spmap.width(), spmap.height());
    let ids = spmap.global_ids();
    let mut edge = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w && ids[i] != ids[i + 1] {
                edge[i] = true;
                edge[i + 1] = true;
            }
            if y + 1 < h && ids[i] != ids[i + w] {
                edge[i] = true;
                edge[i + w] = true;
            }
        }
    }
    edge
}

/// Copy of `img` with superpixel borders drawn in [`BOUNDARY_COLOR`].
pub fn boundary_overlay(img: &RgbImage, spmap: &SuperpixelMap) -> RgbImage {
    let mut out = img.clone();
    for (i, &e) in boundary_mask(spmap).iter().enumerate() {
        if e {
            out.set_pixel(i, BOUNDARY_COLOR);
        }
    }
    out
}

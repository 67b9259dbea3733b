//! Superpixel style codes for semantic image editing.
//!
//! The pipeline turns an sRGB image and a per-pixel label mask into one
//! fixed-length style code per label:
//!
//! 1. [`color`] converts the image to `[l a b x y]` features.
//! 2. [`mask_slic`] clusters each label's pixels into at most `k` superpixels.
//! 3. [`spse`] averages the original colors per superpixel and resamples the
//!    flattened means to length `N`.
//!
//! [`gsas`] refines codes with a pairwise self-attention pass (with exact
//! gradients), [`mixer`] swaps codes between images per label and paints
//! codes back onto a superpixel map, and [`losses`] holds the adversarial
//! training objectives as plain functions.

pub mod color;
pub mod gsas;
pub mod io;
pub mod losses;
pub mod mask_slic;
pub mod mixer;
pub mod pipeline;
pub mod spse;

pub use color::{lab_to_rgb, rgb_to_lab, rgb_to_labxy, ImageError, LabXyImage, RgbImage};
pub use gsas::{AttentionTrace, Averaging, GsasError, GsasGradients, GsasParams};
pub use losses::{FeatureStack, LossError, LossWeights};
pub use mask_slic::{
    ClusterError, LabelClusters, LabelPixels, SemanticMask, SlicParams, SuperpixelMap,
};
pub use mixer::{MixError, MixRecipe};
pub use pipeline::{encode, PipelineError};
pub use spse::{CodeError, LabelCode, StyleCodes};

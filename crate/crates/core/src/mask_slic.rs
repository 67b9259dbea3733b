//! Mask-constrained SLIC.
//!
//! Every semantic label is clustered on its own: seeds are laid out on a
//! regular grid clipped to the label's pixels, then pixels are alternately
//! assigned to their nearest center in `[l a b x y]` space and centers are
//! moved to the mean of their members. The spatial channels are scaled by
//! `compactness / S`, where `S = sqrt(pixels / k)` is the expected superpixel
//! spacing, so position and color stay balanced on images of any size.
//!
//! The assignment step scans all centers by default, which makes it an exact
//! argmin (ties go to the lowest center index). A SLIC-style `2S x 2S` window
//! is available through [`SlicParams::windowed_search`]; it is faster on large
//! labels but its output can differ from the exact scan.

use rayon::prelude::*;
use thiserror::Error;

use crate::color::LabXyImage;

pub const DEFAULT_K: usize = 128;
pub const DEFAULT_ITERATIONS: usize = 10;
pub const DEFAULT_COMPACTNESS: f64 = 10.0;

/// Marks pixels that carry no cluster index for a given label.
pub const NO_CLUSTER: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("label {label} occupies no pixels")]
    EmptyLabel { label: usize },
    #[error("label {label} is outside the mask's {label_count} labels")]
    LabelOutOfRange { label: usize, label_count: usize },
    #[error("mask is {mask_width}x{mask_height} but image is {image_width}x{image_height}")]
    DimensionMismatch {
        image_width: usize,
        image_height: usize,
        mask_width: usize,
        mask_height: usize,
    },
    #[error("invalid clustering parameters: {0}")]
    InvalidParams(String),
    #[error("inconsistent superpixel map: {0}")]
    InconsistentMap(String),
}

/// Per-pixel label map with `label_count` classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMask {
    width: usize,
    height: usize,
    label_count: usize,
    labels: Vec<u32>,
}

impl SemanticMask {
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<u32>,
        label_count: usize,
    ) -> Result<Self, ClusterError> {
        if width == 0 || height == 0 {
            return Err(ClusterError::InvalidParams(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if labels.len() != width * height {
            return Err(ClusterError::InvalidParams(format!(
                "mask has {} labels for {width}x{height} pixels",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= label_count) {
            return Err(ClusterError::LabelOutOfRange {
                label: bad as usize,
                label_count,
            });
        }
        Ok(Self {
            width,
            height,
            label_count,
            labels,
        })
    }

    /// Builds a mask whose label count is one past the largest stored label.
    pub fn from_labels(
        width: usize,
        height: usize,
        labels: Vec<u32>,
    ) -> Result<Self, ClusterError> {
        let label_count = labels.iter().max().map_or(0, |&m| m as usize + 1);
        Self::new(width, height, labels, label_count)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index] as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    /// Number of pixels carrying each label.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_count];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Row-major indices of the pixels carrying `label`.
    pub fn pixels_of(&self, label: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l as usize == label)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicParams {
    /// Requested superpixels per label; clamped to the label's pixel count.
    pub k: usize,
    pub iterations: usize,
    pub compactness: f64,
    pub windowed_search: bool,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            iterations: DEFAULT_ITERATIONS,
            compactness: DEFAULT_COMPACTNESS,
            windowed_search: false,
        }
    }
}

impl SlicParams {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.k == 0 {
            return Err(ClusterError::InvalidParams("k must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(ClusterError::InvalidParams(
                "iterations must be at least 1".into(),
            ));
        }
        if !(self.compactness.is_finite() && self.compactness >= 0.0) {
            return Err(ClusterError::InvalidParams(
                "compactness must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// The pixels of one label, lifted into the scaled clustering space.
#[derive(Debug, Clone)]
pub struct LabelPixels {
    label: usize,
    image_width: usize,
    indices: Vec<usize>,
    features: Vec<[f64; 5]>,
    spacing: f64,
    xy_scale: f64,
}

impl LabelPixels {
    /// Collects `label`'s pixels and scales their `x`/`y` channels by
    /// `compactness / S` with `S = sqrt(pixel_count / k)`.
    pub fn gather(
        labxy: &LabXyImage,
        mask: &SemanticMask,
        label: usize,
        k: usize,
        compactness: f64,
    ) -> Result<Self, ClusterError> {
        check_dimensions(labxy, mask)?;
        if label >= mask.label_count() {
            return Err(ClusterError::LabelOutOfRange {
                label,
                label_count: mask.label_count(),
            });
        }
        if k == 0 {
            return Err(ClusterError::InvalidParams("k must be at least 1".into()));
        }
        let indices = mask.pixels_of(label);
        if indices.is_empty() {
            return Err(ClusterError::EmptyLabel { label });
        }
        let spacing = (indices.len() as f64 / k.min(indices.len()) as f64).sqrt();
        let lambda = compactness / spacing;
        let features = indices
            .iter()
            .map(|&i| {
                let [l, a, b, x, y] = labxy.pixel(i);
                [l, a, b, x * lambda, y * lambda]
            })
            .collect();
        Ok(Self {
            label,
            image_width: mask.width(),
            indices,
            features,
            spacing,
            xy_scale: lambda * labxy.spatial_weight(),
        })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Row-major image indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn features(&self) -> &[[f64; 5]] {
        &self.features
    }

    /// Expected superpixel spacing `S` in pixels.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Factor mapping pixel coordinates to the scaled `x`/`y` channels.
    pub fn xy_scale(&self) -> f64 {
        self.xy_scale
    }

    fn position(&self, member: usize) -> (f64, f64) {
        let i = self.indices[member];
        ((i % self.image_width) as f64, (i / self.image_width) as f64)
    }
}

fn check_dimensions(labxy: &LabXyImage, mask: &SemanticMask) -> Result<(), ClusterError> {
    if labxy.width() != mask.width() || labxy.height() != mask.height() {
        return Err(ClusterError::DimensionMismatch {
            image_width: labxy.width(),
            image_height: labxy.height(),
            mask_width: mask.width(),
            mask_height: mask.height(),
        });
    }
    Ok(())
}

#[inline]
pub fn squared_distance(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeds `min(k, pixels)` centers spread evenly over the label.
///
/// A square grid of pitch `S` is laid over the label's bounding box and each
/// grid point is kept if a label pixel lies within `S / 2` of it. A kept
/// point stays where it is when it falls inside that pixel's footprint and is
/// snapped to the pixel otherwise; its color is read from the pixel. Surplus
/// points are thinned evenly, and any shortfall is filled by farthest-point
/// sampling over the label's pixels.
pub fn init_centers(pixels: &LabelPixels, k: usize) -> Vec<[f64; 5]> {
    let n = pixels.len();
    let target = k.min(n);
    if target == 0 {
        return Vec::new();
    }
    if target == n {
        return pixels.features.clone();
    }

    let spacing = pixels.spacing;
    let scale = pixels.xy_scale;
    let positions: Vec<(f64, f64)> = (0..n).map(|m| pixels.position(m)).collect();
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &positions {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }

    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        let mut pts = Vec::new();
        let mut g = lo - 0.5 + spacing / 2.0;
        while g < hi + 0.5 {
            pts.push(g);
            g += spacing;
        }
        pts
    };
    let grid_x = axis(min_x, max_x);
    let grid_y = axis(min_y, max_y);

    let reach = (spacing / 2.0) * (spacing / 2.0);
    let mut seeds: Vec<[f64; 5]> = Vec::new();
    let mut used = vec![false; n];
    for &gy in &grid_y {
        for &gx in &grid_x {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (m, &(x, y)) in positions.iter().enumerate() {
                let d = (x - gx) * (x - gx) + (y - gy) * (y - gy);
                if d < best_d {
                    best_d = d;
                    best = m;
                }
            }
            if best_d > reach {
                continue;
            }
            let (px, py) = positions[best];
            let inside = (px - gx).abs() <= 0.5 && (py - gy).abs() <= 0.5;
            let (sx, sy) = if inside { (gx, gy) } else { (px, py) };
            if !inside && used[best] {
                continue;
            }
            used[best] = true;
            let f = pixels.features[best];
            seeds.push([f[0], f[1], f[2], sx * scale, sy * scale]);
        }
    }

    if seeds.len() > target {
        let kept = seeds.len();
        seeds = (0..target).map(|j| seeds[j * kept / target]).collect();
        return seeds;
    }

    // Farthest-point fill, measured in pixel coordinates.
    let mut nearest = vec![f64::INFINITY; n];
    let seed_positions: Vec<(f64, f64)> = seeds
        .iter()
        .map(|s| {
            if scale > 0.0 {
                (s[3] / scale, s[4] / scale)
            } else {
                (f64::NAN, f64::NAN)
            }
        })
        .collect();
    if scale > 0.0 {
        for (m, &(x, y)) in positions.iter().enumerate() {
            for &(sx, sy) in &seed_positions {
                nearest[m] = nearest[m].min((x - sx) * (x - sx) + (y - sy) * (y - sy));
            }
        }
    } else {
        // Seed positions are not recoverable; fall back to the snapped pixels.
        for (m, &(x, y)) in positions.iter().enumerate() {
            for (u, &(ux, uy)) in positions.iter().enumerate() {
                if used[u] {
                    nearest[m] = nearest[m].min((x - ux) * (x - ux) + (y - uy) * (y - uy));
                }
            }
        }
    }
    if seeds.is_empty() {
        // Start from the pixel closest to the label's centroid.
        let cx = positions.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let cy = positions.iter().map(|p| p.1).sum::<f64>() / n as f64;
        for (m, &(x, y)) in positions.iter().enumerate() {
            nearest[m] = -((x - cx) * (x - cx) + (y - cy) * (y - cy));
        }
    }
    while seeds.len() < target {
        let mut pick = 0;
        for m in 1..n {
            if nearest[m] > nearest[pick] {
                pick = m;
            }
        }
        seeds.push(pixels.features[pick]);
        let (px, py) = positions[pick];
        for (m, &(x, y)) in positions.iter().enumerate() {
            let d = (x - px) * (x - px) + (y - py) * (y - py);
            if seeds.len() == 1 || d < nearest[m] {
                nearest[m] = d;
            }
        }
    }
    seeds
}

fn nearest_center(feature: &[f64; 5], centers: &[[f64; 5]]) -> (u32, f64) {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(feature, center);
        if d < best_d {
            best_d = d;
            best = c as u32;
        }
    }
    (best, best_d)
}

/// Maps every label pixel to its nearest center (exact argmin, lowest index
/// on ties).
pub fn assign_pixels(pixels: &LabelPixels, centers: &[[f64; 5]]) -> Vec<u32> {
    assert!(!centers.is_empty(), "assignment needs at least one center");
    pixels
        .features
        .iter()
        .map(|f| nearest_center(f, centers).0)
        .collect()
}

/// Like [`assign_pixels`] but only considers centers whose spatial offset is
/// within `2S` on both axes; pixels with no such center fall back to the full
/// scan.
pub fn assign_pixels_windowed(pixels: &LabelPixels, centers: &[[f64; 5]]) -> Vec<u32> {
    assert!(!centers.is_empty(), "assignment needs at least one center");
    let window = 2.0 * pixels.spacing * pixels.xy_scale;
    if !(window.is_finite() && window > 0.0) {
        return assign_pixels(pixels, centers);
    }
    pixels
        .features
        .iter()
        .map(|f| {
            let mut best = None;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                if (center[3] - f[3]).abs() > window || (center[4] - f[4]).abs() > window {
                    continue;
                }
                let d = squared_distance(f, center);
                if d < best_d {
                    best_d = d;
                    best = Some(c as u32);
                }
            }
            best.unwrap_or_else(|| nearest_center(f, centers).0)
        })
        .collect()
}

/// Moves each of the `k` centers to the mean of its members.
///
/// A cluster left without members is re-seeded on the worst-served pixel,
/// i.e. the one farthest from its own (updated) center. Pixels already used
/// for a re-seed in this call are skipped.
pub fn update_centers(pixels: &LabelPixels, assignment: &[u32], k: usize) -> Vec<[f64; 5]> {
    let mut sums = vec![[0.0f64; 5]; k];
    let mut counts = vec![0usize; k];
    for (f, &c) in pixels.features.iter().zip(assignment) {
        let c = c as usize;
        counts[c] += 1;
        for d in 0..5 {
            sums[c][d] += f[d];
        }
    }
    let mut centers: Vec<[f64; 5]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| {
            if n > 0 {
                s.map(|v| v / n as f64)
            } else {
                [f64::NAN; 5]
            }
        })
        .collect();

    let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    if !empties.is_empty() {
        let mut taken = vec![false; pixels.len()];
        for c in empties {
            let mut pick = None;
            let mut worst = f64::NEG_INFINITY;
            for (m, (f, &a)) in pixels.features.iter().zip(assignment).enumerate() {
                if taken[m] {
                    continue;
                }
                let d = squared_distance(f, &centers[a as usize]);
                if d > worst {
                    worst = d;
                    pick = Some(m);
                }
            }
            if let Some(m) = pick {
                taken[m] = true;
                centers[c] = pixels.features[m];
            }
        }
    }
    centers
}

/// Sum of squared distances from each pixel to its assigned center.
pub fn objective(pixels: &LabelPixels, assignment: &[u32], centers: &[[f64; 5]]) -> f64 {
    pixels
        .features
        .iter()
        .zip(assignment)
        .map(|(f, &c)| squared_distance(f, &centers[c as usize]))
        .sum()
}

// Guarantees every cluster owns a pixel: an empty cluster takes the
// worst-served pixel of a cluster that can spare one.
fn fill_empty_clusters(pixels: &LabelPixels, assignment: &mut [u32], centers: &mut [[f64; 5]]) {
    let k = centers.len();
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c as usize] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut pick = None;
        let mut worst = f64::NEG_INFINITY;
        for (m, &a) in assignment.iter().enumerate() {
            if counts[a as usize] < 2 {
                continue;
            }
            let d = squared_distance(&pixels.features[m], &centers[a as usize]);
            if d > worst {
                worst = d;
                pick = Some(m);
            }
        }
        let m = pick.expect("k <= pixel count leaves a cluster with a spare pixel");
        counts[assignment[m] as usize] -= 1;
        assignment[m] = c as u32;
        counts[c] = 1;
        centers[c] = pixels.features[m];
    }
}

/// Clustering result for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelClusters {
    /// Final centers as mean `[l a b x y]` of their members, in the units of
    /// the input image (spatial weight applied, compactness scaling removed).
    pub centers: Vec<[f64; 5]>,
    /// Objective after every assignment step: `iterations + 1` entries.
    pub objective: Vec<f64>,
}

impl LabelClusters {
    pub fn cluster_count(&self) -> usize {
        self.centers.len()
    }
}

/// Runs seeding, `iterations` assign/update rounds and a final assignment on
/// one label. Returns the per-member cluster indices alongside the summary.
pub fn cluster_label(
    labxy: &LabXyImage,
    mask: &SemanticMask,
    label: usize,
    params: &SlicParams,
) -> Result<(LabelPixels, Vec<u32>, LabelClusters), ClusterError> {
    params.validate()?;
    let pixels = LabelPixels::gather(labxy, mask, label, params.k, params.compactness)?;
    let assign = |centers: &[[f64; 5]]| {
        if params.windowed_search {
            assign_pixels_windowed(&pixels, centers)
        } else {
            assign_pixels(&pixels, centers)
        }
    };

    let mut centers = init_centers(&pixels, params.k);
    let mut history = Vec::with_capacity(params.iterations + 1);
    for _ in 0..params.iterations {
        let assignment = assign(&centers);
        history.push(objective(&pixels, &assignment, &centers));
        centers = update_centers(&pixels, &assignment, centers.len());
    }
    let mut assignment = assign(&centers);
    history.push(objective(&pixels, &assignment, &centers));
    fill_empty_clusters(&pixels, &mut assignment, &mut centers);

    let k = centers.len();
    let mut sums = vec![[0.0f64; 5]; k];
    let mut counts = vec![0usize; k];
    for (&i, &c) in pixels.indices.iter().zip(&assignment) {
        let p = labxy.pixel(i);
        counts[c as usize] += 1;
        for d in 0..5 {
            sums[c as usize][d] += p[d];
        }
    }
    let final_centers = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| s.map(|v| v / n as f64))
        .collect();

    Ok((
        pixels,
        assignment,
        LabelClusters {
            centers: final_centers,
            objective: history,
        },
    ))
}

/// Per-pixel superpixel assignment for every label of a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    k: usize,
    pixel_labels: Vec<u32>,
    clusters: Vec<u32>,
    labels: Vec<Option<LabelClusters>>,
}

impl SuperpixelMap {
    /// Assembles a map from a label-major global id image and the per-label
    /// cluster summaries. `labels[l]` must be `Some` exactly for the labels
    /// present in `mask`, and the ids of label `l` must cover
    /// `offset_l .. offset_l + k_l` where offsets accumulate `k` over lower
    /// labels.
    pub fn from_global_ids(
        mask: &SemanticMask,
        k: usize,
        ids: &[u32],
        labels: Vec<Option<LabelClusters>>,
    ) -> Result<Self, ClusterError> {
        if ids.len() != mask.width() * mask.height() {
            return Err(ClusterError::InconsistentMap(format!(
                "id map has {} pixels, mask has {}",
                ids.len(),
                mask.width() * mask.height()
            )));
        }
        if labels.len() != mask.label_count() {
            return Err(ClusterError::InconsistentMap(format!(
                "{} label summaries for {} labels",
                labels.len(),
                mask.label_count()
            )));
        }
        let offsets = offsets_of(&labels);
        let mut clusters = vec![NO_CLUSTER; ids.len()];
        let mut seen: Vec<Vec<bool>> = labels
            .iter()
            .map(|l| vec![false; l.as_ref().map_or(0, |l| l.cluster_count())])
            .collect();
        for (i, &id) in ids.iter().enumerate() {
            let label = mask.label(i);
            let Some(summary) = &labels[label] else {
                return Err(ClusterError::InconsistentMap(format!(
                    "pixel {i} has label {label}, which has no clusters"
                )));
            };
            let local = (id as usize).checked_sub(offsets[label]);
            match local {
                Some(c) if c < summary.cluster_count() => {
                    clusters[i] = c as u32;
                    seen[label][c] = true;
                }
                _ => {
                    return Err(ClusterError::InconsistentMap(format!(
                        "pixel {i} has id {id}, outside label {label}'s range"
                    )))
                }
            }
        }
        for (label, s) in seen.iter().enumerate() {
            if let Some(c) = s.iter().position(|&v| !v) {
                return Err(ClusterError::InconsistentMap(format!(
                    "cluster {c} of label {label} owns no pixels"
                )));
            }
        }
        Ok(Self {
            width: mask.width(),
            height: mask.height(),
            k,
            pixel_labels: mask.as_slice().to_vec(),
            clusters,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    /// Requested superpixels per label.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Cluster summary for a label, `None` when the label has no pixels.
    pub fn label(&self, label: usize) -> Option<&LabelClusters> {
        self.labels.get(label).and_then(Option::as_ref)
    }

    pub fn labels(&self) -> &[Option<LabelClusters>] {
        &self.labels
    }

    /// Number of clusters of `label` (0 when absent).
    pub fn cluster_count(&self, label: usize) -> usize {
        self.label(label).map_or(0, LabelClusters::cluster_count)
    }

    /// Cluster index of `pixel` within `label`, or `None` if the pixel
    /// belongs to another label.
    pub fn cluster_of(&self, label: usize, pixel: usize) -> Option<usize> {
        (self.pixel_labels[pixel] as usize == label).then(|| self.clusters[pixel] as usize)
    }

    /// `(label, cluster)` of a pixel.
    pub fn pixel(&self, pixel: usize) -> (usize, usize) {
        (
            self.pixel_labels[pixel] as usize,
            self.clusters[pixel] as usize,
        )
    }

    /// First global id of each label; ids are label-major.
    pub fn offsets(&self) -> Vec<usize> {
        offsets_of(&self.labels)
    }

    pub fn total_clusters(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .map(LabelClusters::cluster_count)
            .sum()
    }

    /// Label-major global superpixel id per pixel.
    pub fn global_ids(&self) -> Vec<u32> {
        let offsets = self.offsets();
        self.pixel_labels
            .iter()
            .zip(&self.clusters)
            .map(|(&l, &c)| (offsets[l as usize] + c as usize) as u32)
            .collect()
    }

    /// Whether the map was produced for exactly this mask.
    pub fn matches_mask(&self, mask: &SemanticMask) -> bool {
        self.width == mask.width()
            && self.height == mask.height()
            && self.labels.len() == mask.label_count()
            && self.pixel_labels == mask.as_slice()
    }
}

fn offsets_of(labels: &[Option<LabelClusters>]) -> Vec<usize> {
    let mut acc = 0;
    labels
        .iter()
        .map(|l| {
            let o = acc;
            acc += l.as_ref().map_or(0, LabelClusters::cluster_count);
            o
        })
        .collect()
}

/// Clusters every label present in `mask`. Labels are processed in parallel;
/// the result does not depend on scheduling.
pub fn cluster(
    labxy: &LabXyImage,
    mask: &SemanticMask,
    params: &SlicParams,
) -> Result<SuperpixelMap, ClusterError> {
    params.validate()?;
    check_dimensions(labxy, mask)?;
    let histogram = mask.histogram();
    let results: Vec<Option<(LabelPixels, Vec<u32>, LabelClusters)>> = (0..mask.label_count())
        .into_par_iter()
        .map(|label| {
            if histogram[label] == 0 {
                Ok(None)
            } else {
                cluster_label(labxy, mask, label, params).map(Some)
            }
        })
        .collect::<Result<_, _>>()?;

    let mut clusters = vec![NO_CLUSTER; mask.width() * mask.height()];
    let mut labels = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Some((pixels, assignment, summary)) => {
                for (&i, &c) in pixels.indices().iter().zip(&assignment) {
                    clusters[i] = c;
                }
                labels.push(Some(summary));
            }
            None => labels.push(None),
        }
    }
    Ok(SuperpixelMap {
        width: mask.width(),
        height: mask.height(),
        k: params.k,
        pixel_labels: mask.as_slice().to_vec(),
        clusters,
        labels,
    })
}

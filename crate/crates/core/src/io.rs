//! On-disk formats: PNG images, masks and id maps, and the JSON files for
//! style codes, attention parameters, mixing recipes and superpixel centers.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::RgbImage;
use crate::gsas::GsasParams;
use crate::mask_slic::{LabelClusters, SemanticMask, SuperpixelMap};
use crate::mixer::MixRecipe;
use crate::spse::{LabelCode, StyleCodes};

pub const CODES_VERSION: u32 = 1;
pub const CODES_SCALE: &str = "unit";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: unsupported image: {message}", path.display())]
    Unsupported { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Inconsistent { path: PathBuf, message: String },
    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
}

impl FormatError {
    fn schema(path: &Path, message: impl Into<String>) -> Self {
        FormatError::Schema {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed or schema-invalid file contents
    /// rather than by the filesystem or image decoding.
    pub fn is_schema(&self) -> bool {
        match self {
            FormatError::Schema { .. } => true,
            FormatError::Json { source, .. } => !source.is_io(),
            _ => false,
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn decode(path: &Path) -> Result<DynamicImage, FormatError> {
    let bytes = read_bytes(path)?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|source| {
        FormatError::Image {
            path: path.to_path_buf(),
            source,
        }
    })
}

fn encode_png<P, C>(path: &Path, buffer: &ImageBuffer<P, C>) -> Result<(), FormatError>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = std::io::Cursor::new(Vec::new());
    buffer
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|source| FormatError::Image {
            path: path.to_path_buf(),
            source,
        })?;
    write_bytes(path, &out.into_inner())
}

/// Reads a PNG as 8-bit sRGB; other color types are converted.
pub fn read_rgb_png(path: &Path) -> Result<RgbImage, FormatError> {
    let img = decode(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::new(w as usize, h as usize, img.into_raw()).map_err(|e| FormatError::Unsupported {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<(), FormatError> {
    let buffer: ImageBuffer<Rgb<u8>, &[u8]> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.as_raw())
            .expect("buffer length checked by RgbImage");
    encode_png(path, &buffer)
}

/// Reads an 8-bit grayscale label mask. The label count defaults to one past
/// the largest label present.
pub fn read_mask_png(path: &Path, label_count: Option<usize>) -> Result<SemanticMask, FormatError> {
    let img = decode(path)?;
    if img.color() != ColorType::L8 {
        return Err(FormatError::Unsupported {
            path: path.to_path_buf(),
            message: format!("mask must be 8-bit grayscale, found {:?}", img.color()),
        });
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    let labels: Vec<u32> = gray.into_raw().into_iter().map(u32::from).collect();
    let mask = match label_count {
        Some(l) => SemanticMask::new(w as usize, h as usize, labels, l),
        None => SemanticMask::from_labels(w as usize, h as usize, labels),
    };
    mask.map_err(|e| FormatError::Inconsistent {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_mask_png(path: &Path, mask: &SemanticMask) -> Result<(), FormatError> {
    let data = mask
        .as_slice()
        .iter()
        .map(|&l| {
            u8::try_from(l).map_err(|_| FormatError::Unsupported {
                path: path.to_path_buf(),
                message: format!("label {l} does not fit in 8 bits"),
            })
        })
        .collect::<Result<Vec<u8>, _>>()?;
    let buffer: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, data)
            .expect("mask length matches its dimensions");
    encode_png(path, &buffer)
}

/// Writes label-major global superpixel ids as a 16-bit grayscale PNG.
pub fn write_id_map_png(path: &Path, spmap: &SuperpixelMap) -> Result<(), FormatError> {
    if spmap.total_clusters() > usize::from(u16::MAX) + 1 {
        return Err(FormatError::Unsupported {
            path: path.to_path_buf(),
            message: format!(
                "{} superpixels do not fit in a 16-bit map",
                spmap.total_clusters()
            ),
        });
    }
    let ids: Vec<u16> = spmap.global_ids().into_iter().map(|v| v as u16).collect();
    let buffer: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(spmap.width() as u32, spmap.height() as u32, ids)
            .expect("id map length matches its dimensions");
    encode_png(path, &buffer)
}

/// Reads a 16-bit id map as `(width, height, ids)`.
pub fn read_id_map_png(path: &Path) -> Result<(usize, usize, Vec<u32>), FormatError> {
    let img = decode(path)?;
    if img.color() != ColorType::L16 {
        return Err(FormatError::Unsupported {
            path: path.to_path_buf(),
            message: format!("id map must be 16-bit grayscale, found {:?}", img.color()),
        });
    }
    let gray = img.into_luma16();
    let (w, h) = gray.dimensions();
    Ok((
        w as usize,
        h as usize,
        gray.into_raw().into_iter().map(u32::from).collect(),
    ))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodesFile {
    version: u32,
    n: usize,
    k: usize,
    scale: String,
    labels: Vec<CodeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeEntry {
    id: usize,
    present: bool,
    raw: Vec<f64>,
    code: Vec<f64>,
}

pub fn codes_to_json(codes: &StyleCodes) -> String {
    let file = CodesFile {
        version: CODES_VERSION,
        n: codes.n,
        k: codes.k,
        scale: CODES_SCALE.to_string(),
        labels: codes
            .labels
            .iter()
            .map(|l| CodeEntry {
                id: l.id,
                present: l.present,
                raw: l.raw.clone(),
                code: l.code.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("codes serialize")
}

fn codes_from_file(file: CodesFile, path: &Path) -> Result<StyleCodes, FormatError> {
    if file.version != CODES_VERSION {
        return Err(FormatError::schema(
            path,
            format!("unsupported codes version {}", file.version),
        ));
    }
    if file.scale != CODES_SCALE {
        return Err(FormatError::schema(
            path,
            format!("unsupported scale '{}'", file.scale),
        ));
    }
    let mut labels = Vec::with_capacity(file.labels.len());
    for (index, entry) in file.labels.into_iter().enumerate() {
        if entry.id != index {
            return Err(FormatError::schema(
                path,
                format!("label entry {index} has id {}", entry.id),
            ));
        }
        if entry.code.len() != file.n {
            return Err(FormatError::schema(
                path,
                format!(
                    "label {index} code has {} values, expected {}",
                    entry.code.len(),
                    file.n
                ),
            ));
        }
        if entry.raw.len() % 3 != 0 || (entry.present && entry.raw.is_empty()) {
            return Err(FormatError::schema(
                path,
                format!("label {index} raw code has {} values", entry.raw.len()),
            ));
        }
        if !entry.present && !entry.raw.is_empty() {
            return Err(FormatError::schema(
                path,
                format!("absent label {index} carries raw values"),
            ));
        }
        labels.push(LabelCode {
            id: entry.id,
            present: entry.present,
            raw: entry.raw,
            code: entry.code,
        });
    }
    Ok(StyleCodes {
        n: file.n,
        k: file.k,
        labels,
    })
}

pub fn codes_from_json(text: &str) -> Result<StyleCodes, FormatError> {
    let path = Path::new("<string>");
    let file: CodesFile = serde_json::from_str(text).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    codes_from_file(file, path)
}

pub fn read_codes(path: &Path) -> Result<StyleCodes, FormatError> {
    let file: CodesFile = read_json(path)?;
    codes_from_file(file, path)
}

pub fn write_codes(path: &Path, codes: &StyleCodes) -> Result<(), FormatError> {
    let mut text = codes_to_json(codes);
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    w1: f64,
    w2: f64,
    bias: f64,
    leaky_slope: f64,
}

pub fn read_params(path: &Path) -> Result<GsasParams, FormatError> {
    let file: ParamsFile = read_json(path)?;
    let params = GsasParams {
        w1: file.w1,
        w2: file.w2,
        bias: file.bias,
        leaky_slope: file.leaky_slope,
    };
    params
        .validate()
        .map_err(|e| FormatError::schema(path, e.to_string()))?;
    Ok(params)
}

pub fn write_params(path: &Path, params: &GsasParams) -> Result<(), FormatError> {
    write_json(
        path,
        &ParamsFile {
            w1: params.w1,
            w2: params.w2,
            bias: params.bias,
            leaky_slope: params.leaky_slope,
        },
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeFile {
    assignments: Vec<RecipeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeEntry {
    label: usize,
    donor: String,
}

pub fn read_recipe(path: &Path) -> Result<MixRecipe, FormatError> {
    let file: RecipeFile = read_json(path)?;
    MixRecipe::new(
        file.assignments
            .into_iter()
            .map(|a| (a.label, a.donor))
            .collect(),
    )
    .map_err(|e| FormatError::schema(path, e.to_string()))
}

pub fn write_recipe(path: &Path, recipe: &MixRecipe) -> Result<(), FormatError> {
    write_json(
        path,
        &RecipeFile {
            assignments: recipe
                .assignments
                .iter()
                .map(|(label, donor)| RecipeEntry {
                    label: *label,
                    donor: donor.clone(),
                })
                .collect(),
        },
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CentersFile {
    version: u32,
    width: usize,
    height: usize,
    k: usize,
    labels: Vec<CentersEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CentersEntry {
    id: usize,
    present: bool,
    offset: usize,
    centers: Vec<[f64; 5]>,
    objective: Vec<f64>,
}

/// Sidecar path for an id map: the same path with a `.json` extension.
pub fn centers_path(map_path: &Path) -> PathBuf {
    map_path.with_extension("json")
}

pub fn write_centers(path: &Path, spmap: &SuperpixelMap) -> Result<(), FormatError> {
    let offsets = spmap.offsets();
    let file = CentersFile {
        version: CODES_VERSION,
        width: spmap.width(),
        height: spmap.height(),
        k: spmap.k(),
        labels: spmap
            .labels()
            .iter()
            .enumerate()
            .map(|(id, l)| CentersEntry {
                id,
                present: l.is_some(),
                offset: offsets[id],
                centers: l.as_ref().map(|l| l.centers.clone()).unwrap_or_default(),
                objective: l.as_ref().map(|l| l.objective.clone()).unwrap_or_default(),
            })
            .collect(),
    };
    write_json(path, &file)
}

/// Writes the id map PNG and its centers sidecar.
pub fn write_superpixel_map(path: &Path, spmap: &SuperpixelMap) -> Result<(), FormatError> {
    write_id_map_png(path, spmap)?;
    write_centers(&centers_path(path), spmap)
}

/// Loads a superpixel map written by [`write_superpixel_map`] and checks it
/// against `mask`.
pub fn read_superpixel_map(path: &Path, mask: &SemanticMask) -> Result<SuperpixelMap, FormatError> {
    let (w, h, ids) = read_id_map_png(path)?;
    let sidecar = centers_path(path);
    let file: CentersFile = read_json(&sidecar)?;
    if (w, h) != (file.width, file.height) {
        return Err(FormatError::schema(
            &sidecar,
            format!(
                "sidecar is {}x{} but id map is {w}x{h}",
                file.width, file.height
            ),
        ));
    }
    let mut labels = Vec::with_capacity(file.labels.len());
    for (index, entry) in file.labels.into_iter().enumerate() {
        if entry.id != index || (entry.present == entry.centers.is_empty()) {
            return Err(FormatError::schema(
                &sidecar,
                format!("malformed entry for label {index}"),
            ));
        }
        labels.push(entry.present.then_some(LabelClusters {
            centers: entry.centers,
            objective: entry.objective,
        }));
    }
    if (w, h) != (mask.width(), mask.height()) {
        return Err(FormatError::Inconsistent {
            path: path.to_path_buf(),
            message: format!(
                "id map is {w}x{h} but mask is {}x{}",
                mask.width(),
                mask.height()
            ),
        });
    }
    SuperpixelMap::from_global_ids(mask, file.k, &ids, labels).map_err(|e| {
        FormatError::Inconsistent {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })
}

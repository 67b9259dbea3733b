//! Subcommands of the `spstyle` tool.
//!
//! Exit codes: 0 on success, 2 for I/O and image decoding failures, 3 when
//! inputs disagree with each other (dimensions, labels, code lengths) and 4
//! for malformed or schema-invalid JSON.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use spstyle_core::io::{self, FormatError};
use spstyle_core::mask_slic::{DEFAULT_COMPACTNESS, DEFAULT_ITERATIONS, DEFAULT_K};
use spstyle_core::spse::DEFAULT_CODE_LENGTH;
use spstyle_core::{gsas, mixer, pipeline};
use spstyle_core::{Averaging, GsasParams, RgbImage, SemanticMask, SlicParams, StyleCodes};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Consistency(String),
    #[error("{0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Consistency(_) => 3,
            CliError::Schema(_) => 4,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_schema() {
            CliError::Schema(e.to_string())
        } else if matches!(e, FormatError::Inconsistent { .. }) {
            CliError::Consistency(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spstyle",
    version,
    about = "Superpixel style codes for semantic image editing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode an image and its label mask into style codes.
    Encode(EncodeArgs),
    /// Draw superpixel borders and write the superpixel id map.
    Superpixels(SuperpixelArgs),
    /// Refine style codes with graph self-attention.
    Gsas(GsasArgs),
    /// Swap or combine style codes between images per label.
    Mix(MixArgs),
    /// Paint each superpixel with its stored mean color.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// Superpixels per label.
    #[arg(long, default_value_t = DEFAULT_K, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub k: usize,
    /// Assign/update rounds per label.
    #[arg(long = "iters", default_value_t = DEFAULT_ITERATIONS, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub iterations: usize,
    /// Weight of pixel position against color.
    #[arg(long, default_value_t = DEFAULT_COMPACTNESS)]
    pub compactness: f64,
    /// Only search centers within 2S of each pixel (faster, may differ).
    #[arg(long)]
    pub windowed_search: bool,
    /// Number of labels; defaults to one past the largest label in the mask.
    #[arg(long)]
    pub label_count: Option<usize>,
}

impl ClusterArgs {
    fn params(&self) -> SlicParams {
        SlicParams {
            k: self.k,
            iterations: self.iterations,
            compactness: self.compactness,
            windowed_search: self.windowed_search,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Style-code JSON to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional 16-bit superpixel id map (a `.json` centers file is written next to it).
    #[arg(long)]
    pub map_out: Option<PathBuf>,
    /// Style code length.
    #[arg(long, default_value_t = DEFAULT_CODE_LENGTH, value_parser = clap::value_parser!(u64).range(3..).map(|v| v as usize))]
    pub n: usize,
    #[command(flatten)]
    pub cluster: ClusterArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SuperpixelArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Boundary overlay PNG.
    #[arg(long)]
    pub out: PathBuf,
    /// 16-bit superpixel id map PNG.
    #[arg(long)]
    pub map_out: PathBuf,
    #[command(flatten)]
    pub cluster: ClusterArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GsasArgs {
    #[arg(long)]
    pub codes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Attention weights JSON; random weights from `--seed` when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sum attention-weighted values instead of averaging them over N.
    #[arg(long)]
    pub drop_averaging: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MixArgs {
    /// Codes that every unlisted label keeps.
    #[arg(long)]
    pub source: PathBuf,
    /// Donor codes, referenced as `style` in recipes.
    #[arg(long)]
    pub style: Option<PathBuf>,
    /// Recipe JSON; donors other than `source`/`style` are paths relative to it.
    #[arg(long)]
    pub recipe: Option<PathBuf>,
    /// Labels to take from `--style`.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub codes: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Id map written by `encode --map-out` or `superpixels`.
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub label_count: Option<usize>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode(args) => cmd_encode(&args),
        Command::Superpixels(args) => cmd_superpixels(&args),
        Command::Gsas(args) => cmd_gsas(&args),
        Command::Mix(args) => cmd_mix(&args),
        Command::Reconstruct(args) => cmd_reconstruct(&args),
    }
}

fn load_pair(
    image: &Path,
    mask: &Path,
    label_count: Option<usize>,
) -> Result<(RgbImage, SemanticMask), CliError> {
    let img = io::read_rgb_png(image)?;
    let m = io::read_mask_png(mask, label_count)?;
    if (img.width(), img.height()) != (m.width(), m.height()) {
        return Err(CliError::Consistency(format!(
            "{} is {}x{} but {} is {}x{}",
            mask.display(),
            m.width(),
            m.height(),
            image.display(),
            img.width(),
            img.height()
        )));
    }
    Ok((img, m))
}

fn consistency(e: impl std::fmt::Display) -> CliError {
    CliError::Consistency(e.to_string())
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<(), CliError> {
    let (img, mask) = load_pair(&args.image, &args.mask, args.cluster.label_count)?;
    let (spmap, codes) =
        pipeline::encode(&img, &mask, &args.cluster.params(), args.n).map_err(consistency)?;
    io::write_codes(&args.out, &codes)?;
    if let Some(map_out) = &args.map_out {
        io::write_superpixel_map(map_out, &spmap)?;
    }
    Ok(())
}

pub fn cmd_superpixels(args: &SuperpixelArgs) -> Result<(), CliError> {
    let (img, mask) = load_pair(&args.image, &args.mask, args.cluster.label_count)?;
    let labxy = spstyle_core::rgb_to_labxy(&img, 1.0);
    let spmap = spstyle_core::mask_slic::cluster(&labxy, &mask, &args.cluster.params())
        .map_err(consistency)?;
    io::write_rgb_png(&args.out, &pipeline::boundary_overlay(&img, &spmap))?;
    io::write_superpixel_map(&args.map_out, &spmap)?;
    Ok(())
}

pub fn cmd_gsas(args: &GsasArgs) -> Result<(), CliError> {
    let codes = io::read_codes(&args.codes)?;
    let params = match &args.params {
        Some(path) => io::read_params(path)?,
        None => GsasParams::random(args.seed),
    };
    let averaging = if args.drop_averaging {
        Averaging::Sum
    } else {
        Averaging::Mean
    };
    let refined = gsas::refine_codes(&codes, &params, averaging).map_err(consistency)?;
    io::write_codes(&args.out, &refined)?;
    Ok(())
}

fn resolve_donor(tag: &str, recipe_dir: &Path) -> PathBuf {
    let p = Path::new(tag);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        recipe_dir.join(p)
    }
}

pub fn cmd_mix(args: &MixArgs) -> Result<(), CliError> {
    let source = io::read_codes(&args.source)?;
    let style = args.style.as_deref().map(io::read_codes).transpose()?;

    let mut out = source.clone();
    if !args.labels.is_empty() {
        let style = style
            .as_ref()
            .ok_or_else(|| CliError::Consistency("--labels needs a --style donor".into()))?;
        let labels: BTreeSet<usize> = args.labels.iter().copied().collect();
        out = mixer::swap_codes(&out, style, &labels).map_err(consistency)?;
    }

    if let Some(recipe_path) = &args.recipe {
        let recipe = io::read_recipe(recipe_path)?;
        let recipe_dir = recipe_path.parent().unwrap_or(Path::new("."));
        let mut donors: BTreeMap<String, StyleCodes> = BTreeMap::new();
        donors.insert("source".into(), source.clone());
        if let Some(style) = &style {
            donors.insert("style".into(), style.clone());
        }
        for tag in recipe.donor_tags() {
            if !donors.contains_key(tag) {
                let codes = io::read_codes(&resolve_donor(tag, recipe_dir))?;
                donors.insert(tag.to_string(), codes);
            }
        }
        out = mixer::apply_recipe(&out, &recipe, &donors).map_err(consistency)?;
    }
    io::write_codes(&args.out, &out)?;
    Ok(())
}

pub fn cmd_reconstruct(args: &ReconstructArgs) -> Result<(), CliError> {
    let codes = io::read_codes(&args.codes)?;
    let label_count = args.label_count.or(Some(codes.label_count()));
    let mask = io::read_mask_png(&args.mask, label_count)?;
    let spmap = io::read_superpixel_map(&args.map, &mask)?;
    let img = mixer::coarse_reconstruct(&codes, &spmap, &mask).map_err(consistency)?;
    io::write_rgb_png(&args.out, &img)?;
    Ok(())
}

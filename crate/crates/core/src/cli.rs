//! The `gstk` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 domain error.
//! Every output file is written to a temporary sibling and renamed into
//! place, so a failed command leaves no partial output behind.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::classify::{parse_rois_json, rois_from_labels, rois_to_json};
use crate::analysis::{
    accuracy, band_stats, classify, compare_responses, fit_classes, oif_rank, ClassSpec, ClassificationMap,
    ComparisonReport, ConfusionMatrix, FeatureSource, FeatureStack, OifScore, Roi, TrainingMode,
};
use crate::convolve::{convolve_image_with, BoundaryMode, ConvolveOptions};
use crate::error::{Error, ErrorKind, Result};
use crate::fsio;
use crate::kernels::{format_kernel, parse_kernel, BuiltinKernel, Kernel};
use crate::raster::{bsq, pgm, stretch, Band, MultibandImage, ResponseField, StretchMode};
use crate::synth::{self, synth_scene, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gstk", version, about = "Smoothing-stencil convolution and classification for multiband rasters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the derived quadrant and 5x5 smoothing templates as kernel files.
    Derive(DeriveArgs),
    /// Convolve every band of an image and write display-stretched PGMs.
    Convolve(ConvolveArgs),
    /// Rank all band triples by Optimum Index Factor.
    Oif(OifArgs),
    /// Fit parallelepiped classes from training regions and classify an image.
    Classify(ClassifyArgs),
    /// Compare two response stacks band by band.
    Compare(CompareArgs),
    /// Generate a seeded synthetic scene and its truth map.
    Synth(SynthArgs),
    /// synth -> convolve (both templates) -> compare -> oif -> classify -> accuracy.
    Pipeline(PipelineArgs),
}

/// `smooth5`, `laplacian3`, `quadrant`, or `file:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelChoice {
    Builtin(BuiltinKernel),
    File(PathBuf),
}

impl FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(KernelChoice::File(PathBuf::from(p)));
        }
        BuiltinKernel::from_name(s)
            .map(KernelChoice::Builtin)
            .ok_or_else(|| format!("unknown kernel {s:?}; use smooth5, laplacian3, quadrant or file:<path>"))
    }
}

impl KernelChoice {
    pub fn load(&self) -> Result<Kernel> {
        match self {
            KernelChoice::Builtin(b) => Ok(b.kernel()),
            KernelChoice::File(p) => parse_kernel(&fsio::read_text(p)?),
        }
    }

    fn label(&self) -> String {
        match self {
            KernelChoice::Builtin(b) => b.name().to_owned(),
            KernelChoice::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Replicate,
    Reflect,
    Zero,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Replicate => BoundaryMode::Replicate,
            BoundaryArg::Reflect => BoundaryMode::Reflect,
            BoundaryArg::Zero => BoundaryMode::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StretchArg {
    AbsLinear,
    SignedLinear,
}

impl From<StretchArg> for StretchMode {
    fn from(s: StretchArg) -> Self {
        match s {
            StretchArg::AbsLinear => StretchMode::AbsLinear,
            StretchArg::SignedLinear => StretchMode::SignedLinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainingArg {
    Minmax,
    MeanSigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureArg {
    Raw,
    Smoothed,
    Both,
}

impl From<FeatureArg> for FeatureSource {
    fn from(f: FeatureArg) -> Self {
        match f {
            FeatureArg::Raw => FeatureSource::Raw,
            FeatureArg::Smoothed => FeatureSource::Smoothed,
            FeatureArg::Both => FeatureSource::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Directory receiving quadrant.kernel and smooth5.kernel.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write laplacian3.kernel.
    #[arg(long)]
    pub laplacian: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConvolutionFlags {
    /// smooth5, laplacian3, quadrant or file:<path>.
    #[arg(long, default_value = "smooth5")]
    pub kernel: KernelChoice,
    /// Out-of-band reads: clamp to edge, mirror, or zero.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Replicate)]
    pub boundary: BoundaryArg,
    /// Worker threads (0 = one per available core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Rows per work tile.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub tile_rows: u32,
}

impl ConvolutionFlags {
    fn options(&self) -> ConvolveOptions {
        let mut o = ConvolveOptions::default();
        if self.workers > 0 {
            o.workers = self.workers;
        }
        o.tile_rows = self.tile_rows as usize;
        o
    }
}

#[derive(Debug, Args)]
pub struct ConvolveArgs {
    /// GSTK1 image (`.hdr`/`.bsq` stem) or single-band `.pgm`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub conv: ConvolutionFlags,
    /// Display mapping of signed responses to 8 bits.
    #[arg(long, value_enum, default_value_t = StretchArg::AbsLinear)]
    pub stretch: StretchArg,
    /// Lower clip percentile for display stretching.
    #[arg(long, default_value_t = 2.0)]
    pub lo_pct: f64,
    /// Upper clip percentile for display stretching.
    #[arg(long, default_value_t = 98.0)]
    pub hi_pct: f64,
    /// Directory receiving band_NN.pgm files.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write the signed responses as responses.hdr/.bsq (dtype i32).
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct OifArgs {
    /// GSTK1 image (`.hdr`/`.bsq` stem) or single-band `.pgm`.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON ranking report.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// GSTK1 image (`.hdr`/`.bsq` stem) or single-band `.pgm`.
    #[arg(long)]
    pub input: PathBuf,
    /// Training regions: `.json` run list or a label raster `.pgm`.
    #[arg(long)]
    pub rois: PathBuf,
    /// Box fitting: per-feature min/max, or mean ± k·σ.
    #[arg(long, value_enum, default_value_t = TrainingArg::Minmax)]
    pub mode: TrainingArg,
    /// Sigma multiplier for mean-sigma training.
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    /// Classifier input: raw bands, |smoothed response| per band, or both.
    #[arg(long, value_enum, default_value_t = FeatureArg::Smoothed)]
    pub features: FeatureArg,
    /// 1-based bands to leave out (repeatable), e.g. a thermal band.
    #[arg(long = "exclude-band")]
    pub exclude_bands: Vec<usize>,
    #[command(flatten)]
    pub conv: ConvolutionFlags,
    /// Output label map (PGM).
    #[arg(long)]
    pub out_map: PathBuf,
    /// Ground-truth label map (PGM) for accuracy.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Confusion-matrix JSON; requires --truth.
    #[arg(long, requires = "truth")]
    pub out_confusion: Option<PathBuf>,
    /// Fitted class boxes as JSON.
    #[arg(long)]
    pub out_specs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// First response stack (dtype i32 GSTK1).
    #[arg(long)]
    pub a: PathBuf,
    /// Second response stack.
    #[arg(long)]
    pub b: PathBuf,
    /// Magnitude above which a pixel counts as an edge.
    #[arg(long, default_value_t = 50.0)]
    pub threshold: f64,
    /// JSON comparison report.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description JSON.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in scene: three-class or oif-forced.
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides the seed in the scene file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output image stem (`.hdr` + `.bsq`).
    #[arg(long)]
    pub out: PathBuf,
    /// Output truth label map (PGM).
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Directory receiving every pipeline artifact.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Scene seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Built-in scene: three-class or oif-forced.
    #[arg(long, default_value = "three-class")]
    pub preset: String,
    /// Classifier input: raw bands, |smoothed response| per band, or both.
    #[arg(long, value_enum, default_value_t = FeatureArg::Smoothed)]
    pub features: FeatureArg,
    /// 1-based bands to leave out of classification (repeatable).
    #[arg(long = "exclude-band")]
    pub exclude_bands: Vec<usize>,
    /// Training pixels are those with row and column divisible by this stride.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub train_stride: u32,
    /// Magnitude above which a pixel counts as an edge.
    #[arg(long, default_value_t = 50.0)]
    pub threshold: f64,
    /// Out-of-band reads: clamp to edge, mirror, or zero.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Replicate)]
    pub boundary: BoundaryArg,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Domain => EXIT_DOMAIN,
    }
}

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Derive(a) => cmd_derive(a),
        Command::Convolve(a) => cmd_convolve(a),
        Command::Oif(a) => cmd_oif(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Loads a GSTK1 stem, or a single-band image from a `.pgm` path.
pub fn load_image(path: &Path) -> Result<MultibandImage> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        Ok(MultibandImage::single(pgm::read_pgm(&fsio::read_bytes(path)?)?))
    } else {
        bsq::load_image(path)
    }
}

fn load_labels(path: &Path) -> Result<ClassificationMap> {
    Ok(ClassificationMap::from_band(&pgm::read_pgm(&fsio::read_bytes(path)?)?))
}

fn band_file(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("band_{:02}.pgm", idx + 1))
}

pub fn cmd_derive(a: &DeriveArgs) -> Result<()> {
    fsio::create_dir(&a.out_dir)?;
    let mut kernels = vec![BuiltinKernel::Quadrant, BuiltinKernel::Smooth5];
    if a.laplacian {
        kernels.push(BuiltinKernel::Laplacian3);
    }
    let texts: Vec<(PathBuf, String)> =
        kernels.iter().map(|k| (a.out_dir.join(format!("{}.kernel", k.name())), format_kernel(&k.kernel()))).collect();
    let files: Vec<(&Path, &[u8])> = texts.iter().map(|(p, t)| (p.as_path(), t.as_bytes())).collect();
    fsio::write_all_atomic(&files)?;
    for (p, t) in &texts {
        println!("{}:\n{t}", p.display());
    }
    Ok(())
}

/// Stretched display bands for a set of responses.
pub fn stretch_all(fields: &[ResponseField], mode: StretchMode, lo: f64, hi: f64) -> Result<Vec<Band>> {
    fields.iter().map(|f| stretch(f, mode, lo, hi)).collect()
}

fn write_stretched(dir: &Path, bands: &[Band]) -> Result<()> {
    let encoded: Vec<(PathBuf, Vec<u8>)> =
        bands.iter().enumerate().map(|(i, b)| (band_file(dir, i), pgm::write_pgm(b))).collect();
    let files: Vec<(&Path, &[u8])> = encoded.iter().map(|(p, d)| (p.as_path(), d.as_slice())).collect();
    fsio::write_all_atomic(&files)
}

pub fn cmd_convolve(a: &ConvolveArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let kernel = a.conv.kernel.load()?;
    let fields = convolve_image_with(&image, &kernel, a.conv.boundary.into(), &a.conv.options())?;
    let bands = stretch_all(&fields, a.stretch.into(), a.lo_pct, a.hi_pct)?;
    fsio::create_dir(&a.out_dir)?;
    if a.raw {
        bsq::save_responses(&a.out_dir.join("responses"), &fields, image.band_names())?;
    }
    write_stretched(&a.out_dir, &bands)?;
    println!(
        "convolved {} band(s) of {}x{} with {} ({} boundary) -> {}",
        fields.len(),
        image.width(),
        image.height(),
        a.conv.kernel.label(),
        BoundaryMode::from(a.conv.boundary).name(),
        a.out_dir.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct OifEntry {
    /// 1-based band numbers.
    pub bands: [usize; 3],
    pub names: [String; 3],
    /// `null` when the triple's correlations sum to zero (infinite score).
    pub score: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OifReport {
    pub band_count: usize,
    pub band_names: Vec<String>,
    pub stddevs: Vec<f64>,
    pub ranking: Vec<OifEntry>,
}

pub fn oif_report(image: &MultibandImage, ranking: &[OifScore]) -> Result<OifReport> {
    let names: Vec<String> = (0..image.band_count()).map(|i| image.band_label(i)).collect();
    let stddevs = image.bands().iter().map(|b| band_stats(b).map(|s| s.stddev)).collect::<Result<_>>()?;
    let ranking = ranking
        .iter()
        .map(|s| OifEntry {
            bands: s.band_numbers(),
            names: s.triple.map(|b| names[b].clone()),
            score: s.score.is_finite().then_some(s.score),
        })
        .collect();
    Ok(OifReport { band_count: image.band_count(), band_names: names, stddevs, ranking })
}

pub fn cmd_oif(a: &OifArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let ranking = oif_rank(&image)?;
    let report = oif_report(&image, &ranking)?;
    fsio::write_atomic(&a.out, &to_json(&report)?)?;
    let top = &report.ranking[0];
    println!(
        "top triple: bands {}, {}, {} (score {})",
        top.bands[0],
        top.bands[1],
        top.bands[2],
        top.score.map_or("inf".to_owned(), |s| format!("{s:.4}"))
    );
    Ok(())
}

/// Drops the listed 1-based bands.
pub fn select_bands(image: &MultibandImage, exclude: &[usize]) -> Result<MultibandImage> {
    if let Some(&b) = exclude.iter().find(|&&b| b == 0 || b > image.band_count()) {
        return Err(Error::Usage(format!("cannot exclude band {b}: image has bands 1..={}", image.band_count())));
    }
    let keep: Vec<usize> = (0..image.band_count()).filter(|i| !exclude.contains(&(i + 1))).collect();
    if keep.is_empty() {
        return Err(Error::Usage("every band excluded".into()));
    }
    let names = image.band_names().map(|n| keep.iter().map(|&i| n[i].clone()).collect());
    MultibandImage::new(keep.iter().map(|&i| image.band(i).clone()).collect(), names)
}

/// Builds classifier input from an image according to `source`.
pub fn build_features(
    image: &MultibandImage,
    source: FeatureSource,
    kernel: &Kernel,
    boundary: BoundaryMode,
    opts: &ConvolveOptions,
) -> Result<FeatureStack> {
    let smoothed = || -> Result<FeatureStack> {
        let mut stack = FeatureStack::from_responses(&convolve_image_with(image, kernel, boundary, opts)?)?;
        let mut layers = stack.layers().to_vec();
        for (i, l) in layers.iter_mut().enumerate() {
            l.name = format!("|response| {}", image.band_label(i));
        }
        stack = FeatureStack::new(image.width(), image.height(), layers)?;
        Ok(stack)
    };
    match source {
        FeatureSource::Raw => Ok(FeatureStack::from_image(image)),
        FeatureSource::Smoothed => smoothed(),
        FeatureSource::Both => FeatureStack::from_image(image).concat(smoothed()?),
    }
}

#[derive(Debug, Serialize)]
pub struct ConfusionReport<'a> {
    pub class_names: &'a [String],
    /// `counts[t-1][p]`: true class `t`, predicted label `p` (0 = unclassified).
    #[serde(flatten)]
    pub matrix: &'a ConfusionMatrix,
}

fn read_rois(path: &Path) -> Result<Vec<Roi>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        Ok(rois_from_labels(&load_labels(path)?))
    } else {
        parse_rois_json(&fsio::read_text(path)?)
    }
}

pub fn training_mode(mode: TrainingArg, k: f64) -> TrainingMode {
    match mode {
        TrainingArg::Minmax => TrainingMode::MinMax,
        TrainingArg::MeanSigma => TrainingMode::MeanSigma(k),
    }
}

pub fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    let image = select_bands(&load_image(&a.input)?, &a.exclude_bands)?;
    let rois = read_rois(&a.rois)?;
    let kernel = a.conv.kernel.load()?;
    let features = build_features(&image, a.features.into(), &kernel, a.conv.boundary.into(), &a.conv.options())?;
    let specs = fit_classes(&features, &rois, training_mode(a.mode, a.k))?;
    let map = classify(&features, &specs)?;

    let confusion = match &a.truth {
        Some(t) => Some(accuracy(&map, &load_labels(t)?)?),
        None => None,
    };
    let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();

    let map_bytes = pgm::write_pgm(&map.to_band());
    let mut files: Vec<(&Path, Vec<u8>)> = vec![(a.out_map.as_path(), map_bytes)];
    if let (Some(p), Some(cm)) = (&a.out_confusion, &confusion) {
        files.push((p.as_path(), to_json(&ConfusionReport { class_names: &names, matrix: cm })?));
    }
    if let Some(p) = &a.out_specs {
        files.push((p.as_path(), to_json(&specs)?));
    }
    let refs: Vec<(&Path, &[u8])> = files.iter().map(|(p, d)| (*p, d.as_slice())).collect();
    fsio::write_all_atomic(&refs)?;

    let unclassified = map.labels().iter().filter(|&&l| l == 0).count();
    println!("classified {} pixels into {} classes ({unclassified} unclassified)", map.labels().len(), specs.len());
    if let Some(cm) = confusion {
        println!("overall accuracy: {:.4} ({} / {})", cm.overall_accuracy, cm.correct, cm.total);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub threshold: f64,
    pub band_names: Vec<String>,
    pub bands: Vec<ComparisonReport>,
}

pub fn compare_stacks(
    a: &[ResponseField],
    b: &[ResponseField],
    threshold: f64,
    names: Vec<String>,
) -> Result<CompareReport> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} response bands vs {}", a.len(), b.len())));
    }
    let bands = a.iter().zip(b).map(|(x, y)| compare_responses(x, y, threshold)).collect::<Result<_>>()?;
    Ok(CompareReport { threshold, band_names: names, bands })
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let fa = bsq::load_responses(&a.a)?;
    let fb = bsq::load_responses(&a.b)?;
    let names = bsq::BsqHeader::parse(&fsio::read_text(&bsq::file_pair(&a.a).0)?)?
        .names
        .unwrap_or_else(|| (1..=fa.len()).map(|i| format!("band {i}")).collect());
    let report = compare_stacks(&fa, &fb, a.threshold, names)?;
    fsio::write_atomic(&a.out, &to_json(&report)?)?;
    for (name, r) in report.band_names.iter().zip(&report.bands) {
        println!(
            "{name}: edge density a={:.4} b={:.4}, |a|~|b| correlation {}",
            r.a.edge_density,
            r.b.edge_density,
            r.abs_correlation.map_or("undefined".into(), |c| format!("{c:.4}"))
        );
    }
    Ok(())
}

fn scene_spec(spec: Option<&Path>, preset: Option<&str>, seed: Option<u64>) -> Result<SceneSpec> {
    let mut s = match (spec, preset) {
        (Some(p), _) => SceneSpec::from_json(&fsio::read_text(p)?)?,
        (None, Some(name)) => synth::preset(name, seed.unwrap_or(1)).ok_or_else(|| {
            Error::Usage(format!("unknown preset {name:?}; available: {}", synth::PRESET_NAMES.join(", ")))
        })?,
        (None, None) => return Err(Error::Usage("give --spec or --preset".into())),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = scene_spec(a.spec.as_deref(), a.preset.as_deref(), a.seed)?;
    let (image, truth) = synth_scene(&spec)?;
    let (header, payload) = bsq::write_bsq(&image)?;
    let (hdr, data) = bsq::file_pair(&a.out);
    let truth_bytes = pgm::write_pgm(&truth.to_band());
    fsio::write_all_atomic(&[(&data, &payload), (&hdr, header.as_bytes()), (&a.truth, &truth_bytes)])?;
    println!(
        "scene {}x{} with {} band(s), {} class(es), seed {} -> {}",
        spec.width,
        spec.height,
        spec.band_count(),
        spec.classes.len(),
        spec.seed,
        hdr.display()
    );
    Ok(())
}

/// Training regions from every `stride`-th row and column of a truth map,
/// and the truth map with those pixels removed for held-out evaluation.
pub fn split_training(
    truth: &ClassificationMap,
    names: &[String],
    stride: usize,
) -> Result<(Vec<Roi>, ClassificationMap)> {
    let mut rois: Vec<Roi> = names.iter().map(|n| Roi { name: n.clone(), pixels: Vec::new() }).collect();
    let mut held_out = truth.labels().to_vec();
    for r in (0..truth.height()).step_by(stride) {
        for c in (0..truth.width()).step_by(stride) {
            let l = truth.get(c, r);
            if l > 0 {
                let roi = rois
                    .get_mut(usize::from(l) - 1)
                    .ok_or_else(|| Error::Analysis(format!("truth label {l} has no class name")))?;
                roi.pixels.push((c, r));
                held_out[r * truth.width() + c] = 0;
            }
        }
    }
    Ok((rois, ClassificationMap::new(truth.width(), truth.height(), held_out)?))
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub preset: String,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub features: FeatureSource,
    pub excluded_bands: Vec<usize>,
    pub oif_top: OifEntry,
    pub edge_density_smooth5: Vec<f64>,
    pub edge_density_laplacian3: Vec<f64>,
    pub training_pixels: usize,
    pub evaluation_pixels: u64,
    pub overall_accuracy: f64,
    pub classes: Vec<ClassSpec>,
}

pub fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    let dir = &a.out_dir;
    let spec = scene_spec(None, Some(&a.preset), Some(a.seed))?;
    let (image, truth) = synth_scene(&spec)?;
    let boundary: BoundaryMode = a.boundary.into();
    let opts = ConvolveOptions::default();
    let smooth = BuiltinKernel::Smooth5.kernel();
    let lap = BuiltinKernel::Laplacian3.kernel();

    let smooth_fields = convolve_image_with(&image, &smooth, boundary, &opts)?;
    let lap_fields = convolve_image_with(&image, &lap, boundary, &opts)?;
    let names: Vec<String> = (0..image.band_count()).map(|i| image.band_label(i)).collect();
    let comparison = compare_stacks(&smooth_fields, &lap_fields, a.threshold, names)?;
    let ranking = oif_rank(&image)?;
    let oif = oif_report(&image, &ranking)?;

    let class_names = spec.class_names();
    let (rois, held_out) = split_training(&truth, &class_names, a.train_stride as usize)?;
    let selected = select_bands(&image, &a.exclude_bands)?;
    let features = build_features(&selected, a.features.into(), &smooth, boundary, &opts)?;
    let specs = fit_classes(&features, &rois, TrainingMode::MinMax)?;
    let map = classify(&features, &specs)?;
    let cm = accuracy(&map, &held_out)?;

    fsio::create_dir(dir)?;
    fsio::create_dir(&dir.join("smooth5"))?;
    fsio::create_dir(&dir.join("laplacian3"))?;
    bsq::save_image(&dir.join("scene"), &image)?;
    bsq::save_responses(&dir.join("smooth5_responses"), &smooth_fields, image.band_names())?;
    bsq::save_responses(&dir.join("laplacian3_responses"), &lap_fields, image.band_names())?;
    write_stretched(&dir.join("smooth5"), &stretch_all(&smooth_fields, StretchMode::AbsLinear, 2.0, 98.0)?)?;
    write_stretched(&dir.join("laplacian3"), &stretch_all(&lap_fields, StretchMode::AbsLinear, 2.0, 98.0)?)?;

    let summary = PipelineSummary {
        preset: a.preset.clone(),
        seed: a.seed,
        width: image.width(),
        height: image.height(),
        bands: image.band_count(),
        features: a.features.into(),
        excluded_bands: a.exclude_bands.clone(),
        oif_top: OifEntry {
            bands: oif.ranking[0].bands,
            names: oif.ranking[0].names.clone(),
            score: oif.ranking[0].score,
        },
        edge_density_smooth5: comparison.bands.iter().map(|r| r.a.edge_density).collect(),
        edge_density_laplacian3: comparison.bands.iter().map(|r| r.b.edge_density).collect(),
        training_pixels: rois.iter().map(|r| r.pixels.len()).sum(),
        evaluation_pixels: cm.total,
        overall_accuracy: cm.overall_accuracy,
        classes: specs.clone(),
    };
    let files: Vec<(PathBuf, Vec<u8>)> = vec![
        (dir.join("scene_spec.json"), format!("{}\n", spec.to_json()?).into_bytes()),
        (dir.join("truth.pgm"), pgm::write_pgm(&truth.to_band())),
        (dir.join("rois.json"), format!("{}\n", rois_to_json(&rois)?).into_bytes()),
        (dir.join("compare.json"), to_json(&comparison)?),
        (dir.join("oif.json"), to_json(&oif)?),
        (dir.join("classified.pgm"), pgm::write_pgm(&map.to_band())),
        (dir.join("confusion.json"), to_json(&ConfusionReport { class_names: &class_names, matrix: &cm })?),
        (dir.join("summary.json"), to_json(&summary)?),
    ];
    let refs: Vec<(&Path, &[u8])> = files.iter().map(|(p, d)| (p.as_path(), d.as_slice())).collect();
    fsio::write_all_atomic(&refs)?;

    println!(
        "pipeline {} seed {}: OIF top bands {:?}, accuracy {:.4} on {} held-out pixels -> {}",
        a.preset,
        a.seed,
        summary.oif_top.bands,
        cm.overall_accuracy,
        cm.total,
        dir.display()
    );
    Ok(())
}

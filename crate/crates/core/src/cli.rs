//! Command-line front end. The binary only parses arguments and calls [`run`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::augment::{instance_cutmix, mix3d, CutMixConfig, LabeledScan};
use crate::error::{Error, Result};
use crate::metrics::{robustness_report, ConfusionMatrix};
use crate::pipeline::{
    run_corruption, CorruptionParams, CorruptionSpec, Level, RunOptions, RunSummary,
};
use crate::repr::{
    polar_project, range_project, render_bev_counts, render_range_image, voxelize, Channel,
    PolarBounds, VoxelMode,
};
use crate::scan_io::{
    read_labels, read_scan, write_labels, write_scan, DatasetMetadata, ManifestEntry, ScanManifest,
};
use crate::seed::{derive_seed, rng};
use crate::synth::{default_class_names, generate, SceneSpec};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (manifest schema 1)");
/// Environment variable read for the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "LIDAR_CORRUPT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "lidar-corrupt", version = VERSION, about = "Corruption benchmark toolkit for LiDAR semantic segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corrupt every scan of a manifest.
    Corrupt(CorruptArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate synthetic labeled scans and a manifest.
    Gen(GenArgs),
    /// Render or summarize a scan representation.
    Inspect(InspectArgs),
    /// Mix pairs of scans from a manifest.
    Augment(AugmentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Fog,
    Snow,
    GlobalOutliers,
    LocalDistortion,
    CrossDevice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Light,
    Moderate,
    Heavy,
    Dense,
    Sparse,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Light => Level::Light,
            LevelArg::Moderate => Level::Moderate,
            LevelArg::Heavy => Level::Heavy,
            LevelArg::Dense => Level::Dense,
            LevelArg::Sparse => Level::Sparse,
        }
    }
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Run all sixteen standard settings.
    #[arg(long, conflicts_with_all = ["kind", "level"])]
    pub all: bool,
    #[arg(long, value_enum, required_unless_present = "all")]
    pub kind: Option<KindArg>,
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    /// Abort at the first failing scan.
    #[arg(long)]
    pub strict: bool,
    /// Fog attenuation, pinned instead of drawn per scan.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Snowfall rate (mm/h).
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub wet_ground: bool,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Target beam count for cross-device.
    #[arg(long)]
    pub beams: Option<usize>,
    /// Same as `--level sparse` for cross-device.
    #[arg(long)]
    pub sparse: bool,
    /// Per-beam keep ratio `1/m` for cross-device.
    #[arg(long, value_parser = parse_keep_ratio)]
    pub keep_ratio: Option<usize>,
    /// Beam count of the clean sensor.
    #[arg(long, default_value_t = crate::pipeline::DEFAULT_SOURCE_BEAMS)]
    pub source_beams: usize,
}

fn parse_keep_ratio(s: &str) -> std::result::Result<usize, String> {
    let m = s.strip_prefix("1/").unwrap_or(s);
    match m.parse::<usize>() {
        Ok(m) if m >= 1 => Ok(m),
        _ => Err(format!("expected 1/m with integer m >= 1, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Ground-truth labels `<id>.label`; defaults to the manifest's labels. With
    /// `--benchmark`, the root of a corruption run.
    #[arg(long)]
    pub gt_dir: Option<PathBuf>,
    /// Predictions `<id>.label`. With `--benchmark`, laid out as `clean/` plus `<kind>/<level>/`.
    #[arg(long)]
    pub pred_dir: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Score all sixteen settings into a robustness report.
    #[arg(long)]
    pub benchmark: bool,
    /// Number of semantic classes; defaults to one past the largest id in the manifest.
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub scans: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub beams: usize,
    #[arg(long, default_value_t = 1863)]
    pub points_per_beam: usize,
    /// Standard deviation of per-ray zenith jitter (degrees).
    #[arg(long, default_value_t = 0.0)]
    pub zenith_jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprArg {
    Range,
    Bev,
    Voxel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Range,
    Intensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VoxelModeArg {
    Grid,
    Cylinder,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long, value_enum)]
    pub repr: ReprArg,
    /// Image size `WxH`; for BEV, angular by radial cells.
    #[arg(long, value_parser = parse_size)]
    pub size: Option<(usize, usize)>,
    /// PGM output for range and BEV images.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "range")]
    pub channel: ChannelArg,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub fov_up: f64,
    #[arg(long, default_value_t = -25.0, allow_hyphen_values = true)]
    pub fov_down: f64,
    /// Use the planar radius instead of the 3-D range for polar coordinates.
    #[arg(long)]
    pub planar_radius: bool,
    #[arg(long, value_enum, default_value = "cylinder")]
    pub voxel_mode: VoxelModeArg,
    /// Voxel edge for grid mode.
    #[arg(long, default_value_t = 0.05)]
    pub voxel_size: f64,
    #[arg(long)]
    pub no_normalize: bool,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    match (w.parse::<usize>(), h.parse::<usize>()) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => Ok((w, h)),
        _ => Err(format!("expected positive WxH, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AugmentKind {
    Mix3d,
    Cutmix,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long, value_enum)]
    pub kind: AugmentKind,
    /// Entry `i` is paired with entry `i + 1` (cyclically).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instance classes pasted by CutMix.
    #[arg(long, value_delimiter = ',', default_value = "1,18")]
    pub classes: Vec<u16>,
}

/// Parses `args` and runs the selected command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corrupt(a) => {
            let summary = cmd_corrupt(&a)?;
            if summary.is_complete() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{} scan(s) failed",
                    summary.failures.len()
                )))
            }
        }
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Gen(a) => cmd_gen(&a).map(|_| ()),
        Command::Inspect(a) => cmd_inspect(&a).map(|line| println!("{line}")),
        Command::Augment(a) => cmd_augment(&a).map(|_| ()),
    }
}

/// Resolves the requested settings from `corrupt` arguments.
pub fn corruption_specs(a: &CorruptArgs) -> Result<Vec<CorruptionSpec>> {
    let mut specs = if a.all {
        CorruptionSpec::all_standard()
    } else {
        vec![single_spec(a)?]
    };
    for s in &mut specs {
        s.source_beams = a.source_beams;
        if let CorruptionParams::Fog { alpha, .. } = &mut s.params {
            *alpha = a.alpha;
        }
        if let CorruptionParams::Snow { wet_ground, .. } = &mut s.params {
            *wet_ground = a.wet_ground;
        }
    }
    Ok(specs)
}

fn single_spec(a: &CorruptArgs) -> Result<CorruptionSpec> {
    let kind = a.kind.expect("clap requires --kind without --all");
    let level = a.level.map(Level::from);
    let exclusive = |overrides: &[(&str, bool)]| -> Result<Option<Level>> {
        let given: Vec<&str> = overrides.iter().filter(|o| o.1).map(|o| o.0).collect();
        match (level, given.is_empty()) {
            (Some(_), false) => Err(Error::InvalidParameter(format!(
                "--level conflicts with {}",
                given.join(", ")
            ))),
            (None, true) => Err(Error::InvalidParameter(
                "give --level or a numeric override".into(),
            )),
            _ => Ok(level),
        }
    };
    match kind {
        KindArg::Fog => match exclusive(&[("--beta", a.beta.is_some())])? {
            Some(l) => CorruptionSpec::fog(l),
            None => Ok(CorruptionSpec::custom(CorruptionParams::Fog {
                beta: a.beta.unwrap(),
                alpha: None,
            })),
        },
        KindArg::Snow => match exclusive(&[("--rate", a.rate.is_some())])? {
            Some(l) => CorruptionSpec::snow(l),
            None => Ok(CorruptionSpec::custom(CorruptionParams::Snow {
                rate: a.rate.unwrap(),
                wet_ground: false,
            })),
        },
        KindArg::GlobalOutliers => match exclusive(&[("--ratio", a.ratio.is_some())])? {
            Some(l) => CorruptionSpec::global_outliers(l),
            None => Ok(CorruptionSpec::custom(CorruptionParams::GlobalOutliers {
                ratio: a.ratio.unwrap(),
            })),
        },
        KindArg::LocalDistortion => {
            let overrides = [
                ("--sigma", a.sigma.is_some()),
                ("--fraction", a.fraction.is_some()),
            ];
            match exclusive(&overrides)? {
                Some(l) => CorruptionSpec::local_distortion(l),
                None => Ok(CorruptionSpec::custom(CorruptionParams::LocalDistortion {
                    sigma: a.sigma.unwrap_or(crate::pipeline::DISTORTION_SIGMAS[1]),
                    fraction: a.fraction.unwrap_or(crate::pipeline::DISTORTION_FRACTION),
                })),
            }
        }
        KindArg::CrossDevice => {
            let beams = a
                .beams
                .ok_or_else(|| Error::InvalidParameter("cross-device requires --beams".into()))?;
            if let Some(m) = a.keep_ratio {
                if level.is_some() || a.sparse {
                    return Err(Error::InvalidParameter(
                        "--keep-ratio conflicts with --level and --sparse".into(),
                    ));
                }
                return Ok(CorruptionSpec::custom(CorruptionParams::CrossDevice {
                    beams,
                    keep_every: m,
                }));
            }
            let level = match (level, a.sparse) {
                (Some(Level::Dense), true) => {
                    return Err(Error::InvalidParameter(
                        "--sparse conflicts with --level dense".into(),
                    ))
                }
                (Some(l), _) => l,
                (None, true) => Level::Sparse,
                (None, false) => Level::Dense,
            };
            CorruptionSpec::cross_device(beams, level)
        }
    }
}

pub fn cmd_corrupt(a: &CorruptArgs) -> Result<RunSummary> {
    let specs = corruption_specs(a)?;
    let manifest = ScanManifest::load(&a.manifest)?;
    let summary = run_corruption(
        &manifest,
        &a.manifest,
        &specs,
        a.seed,
        &a.out,
        RunOptions {
            workers: a.workers,
            strict: a.strict,
        },
    )?;
    log::info!(
        "wrote {} corrupted scans to {} ({} failures)",
        summary.written,
        a.out.display(),
        summary.failures.len()
    );
    Ok(summary)
}

fn class_count(manifest: &ScanManifest, explicit: Option<usize>) -> usize {
    explicit.unwrap_or_else(|| {
        manifest
            .metadata
            .class_names
            .keys()
            .max()
            .map_or(crate::scan_io::IGNORE_CLASS as usize + 1, |&k| {
                k as usize + 1
            })
    })
}

fn score_dir(
    manifest: &ScanManifest,
    classes: usize,
    gt: impl Fn(&ManifestEntry) -> PathBuf,
    pred: impl Fn(&ManifestEntry) -> PathBuf,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(classes);
    for e in &manifest.entries {
        let g = read_labels(gt(e)).map_err(|err| err.in_scan(&e.scan_id))?;
        let p = read_labels(pred(e)).map_err(|err| err.in_scan(&e.scan_id))?;
        cm.accumulate(&g, &p)
            .map_err(|err| err.in_scan(&e.scan_id))?;
    }
    Ok(cm)
}

#[derive(Debug, Serialize)]
struct PlainReport {
    scans: usize,
    miou: f64,
    class_iou: BTreeMap<u16, f64>,
}

fn write_report<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let manifest = ScanManifest::load(&a.manifest)?;
    let classes = class_count(&manifest, a.classes);
    let label_file = |dir: &Path, e: &ManifestEntry| dir.join(format!("{}.label", e.scan_id));

    if !a.benchmark {
        let cm = score_dir(
            &manifest,
            classes,
            |e| match &a.gt_dir {
                Some(d) => label_file(d, e),
                None => manifest.label_path(e),
            },
            |e| label_file(&a.pred_dir, e),
        )?;
        let report = PlainReport {
            scans: manifest.entries.len(),
            miou: cm.miou()?,
            class_iou: cm.class_iou(),
        };
        println!("mIoU {:.1}", report.miou);
        return write_report(&report, &a.report);
    }

    let gt_root = a.gt_dir.as_ref().ok_or_else(|| {
        Error::InvalidParameter("--benchmark requires --gt-dir (corruption output root)".into())
    })?;
    let clean = score_dir(
        &manifest,
        classes,
        |e| manifest.label_path(e),
        |e| label_file(&a.pred_dir.join("clean"), e),
    )?;
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for spec in CorruptionSpec::all_standard() {
        let rel = spec.rel_dir();
        let cm = score_dir(
            &manifest,
            classes,
            |e| label_file(&gt_root.join(&rel), e),
            |e| label_file(&a.pred_dir.join(&rel), e),
        )?;
        let s = cm.miou()?;
        match groups.last_mut() {
            Some((name, levels)) if *name == spec.kind_dir() => levels.push(s),
            _ => groups.push((spec.kind_dir(), vec![s])),
        }
    }
    let mut report = robustness_report(clean.miou()?, &groups)?;
    report.clean_class_iou = clean.class_iou();
    println!(
        "mIoU {:.1}  RmIoU {:.1}  mR {:.1}",
        report.clean_miou, report.rmiou, report.mr
    );
    write_report(&report, &a.report)
}

/// Writes `scans/<id>.bin`, `labels/<id>.label` and `manifest.json` under `out`.
pub fn cmd_gen(a: &GenArgs) -> Result<ScanManifest> {
    let mut manifest = ScanManifest::new(DatasetMetadata {
        dataset_name: "synthetic-urban".into(),
        class_names: default_class_names(),
    });
    for sub in ["scans", "labels"] {
        let d = a.out.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    for i in 0..a.scans {
        let id = format!("{i:06}");
        let mut spec = SceneSpec::urban(derive_seed(a.seed, &["gen", &id]));
        spec.n_beams = a.beams;
        spec.points_per_beam = a.points_per_beam;
        spec.zenith_jitter_deg = a.zenith_jitter;
        let scan = generate(&spec).map_err(|e| e.in_scan(&id))?;
        let entry = ManifestEntry {
            scan_id: id.clone(),
            scan_path: Path::new("scans").join(format!("{id}.bin")),
            label_path: Path::new("labels").join(format!("{id}.label")),
        };
        write_scan(&scan.cloud, a.out.join(&entry.scan_path))?;
        write_labels(&scan.labels, a.out.join(&entry.label_path))?;
        manifest.entries.push(entry);
    }
    manifest.save(a.out.join("manifest.json"))?;
    manifest.root = a.out.clone();
    Ok(manifest)
}

/// Builds the requested representation and returns a one-line summary.
pub fn cmd_inspect(a: &InspectArgs) -> Result<String> {
    let cloud = read_scan(&a.scan)?;
    match a.repr {
        ReprArg::Range => {
            let (w, h) = a.size.unwrap_or((2048, 64));
            let img = range_project(&cloud, w, h, a.fov_up.to_radians(), a.fov_down.to_radians())?;
            if let Some(out) = &a.out {
                let channel = match a.channel {
                    ChannelArg::Range => Channel::Range,
                    ChannelArg::Intensity => Channel::Intensity,
                };
                render_range_image(&img, channel, out)?;
            }
            Ok(format!(
                "range image {w}x{h}: {} of {} pixels valid",
                img.valid_count(),
                w * h
            ))
        }
        ReprArg::Bev => {
            let (w, h) = a.size.unwrap_or((360, 480));
            let img = polar_project(&cloud, h, w, &PolarBounds::default(), a.planar_radius)?;
            if let Some(out) = &a.out {
                render_bev_counts(&img, out)?;
            }
            Ok(format!(
                "polar BEV {w}x{h}: {} occupied cells, {} points outside bounds",
                img.occupied(),
                img.dropped
            ))
        }
        ReprArg::Voxel => {
            let mode = match a.voxel_mode {
                VoxelModeArg::Grid => VoxelMode::Grid {
                    size: [a.voxel_size; 3],
                    normalize: !a.no_normalize,
                },
                VoxelModeArg::Cylinder => match VoxelMode::cylinder_default() {
                    VoxelMode::Cylinder { size, .. } => VoxelMode::Cylinder {
                        size,
                        planar_radius: a.planar_radius,
                    },
                    grid => grid,
                },
            };
            let grid = voxelize(&cloud, mode)?;
            let max = grid.voxels.values().map(|v| v.count).max().unwrap_or(0);
            Ok(format!(
                "{} non-empty voxels, {:.2} points per voxel, max {max}",
                grid.len(),
                cloud.len() as f64 / grid.len() as f64
            ))
        }
    }
}

/// Writes mixed scans and a manifest under `out`; entry `i` is mixed with entry `i + 1`.
pub fn cmd_augment(a: &AugmentArgs) -> Result<ScanManifest> {
    let input = ScanManifest::load(&a.manifest)?;
    if input.entries.len() < 2 {
        return Err(Error::Manifest(
            "augmentation needs at least two scans".into(),
        ));
    }
    let load = |e: &ManifestEntry| -> Result<LabeledScan> {
        LabeledScan::new(
            read_scan(input.scan_path(e))?,
            read_labels(input.label_path(e))?,
        )
        .map_err(|err| err.in_scan(&e.scan_id))
    };
    let kind = match a.kind {
        AugmentKind::Mix3d => "mix3d",
        AugmentKind::Cutmix => "cutmix",
    };
    let classes: BTreeSet<u16> = a.classes.iter().copied().collect();
    let mut out = ScanManifest::new(input.metadata.clone());
    out.metadata.dataset_name = format!("{}-{kind}", input.metadata.dataset_name);
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let n = input.entries.len();
    for (i, e) in input.entries.iter().enumerate() {
        let other = &input.entries[(i + 1) % n];
        let (target, source) = (load(e)?, load(other)?);
        let mixed = match a.kind {
            AugmentKind::Mix3d => mix3d(&target, &source),
            AugmentKind::Cutmix => {
                let mut r = rng(derive_seed(a.seed, &[kind, &e.scan_id, &other.scan_id]));
                instance_cutmix(&target, &source, &classes, &CutMixConfig::default(), &mut r)
                    .map_err(|err| err.in_scan(&e.scan_id))?
                    .scan
            }
        };
        let id = format!("{}+{}", e.scan_id, other.scan_id);
        let entry = ManifestEntry {
            scan_id: id.clone(),
            scan_path: format!("{id}.bin").into(),
            label_path: format!("{id}.label").into(),
        };
        write_scan(&mixed.cloud, a.out.join(&entry.scan_path))?;
        write_labels(&mixed.labels, a.out.join(&entry.label_path))?;
        out.entries.push(entry);
    }
    out.save(a.out.join("manifest.json"))?;
    out.root = a.out.clone();
    Ok(out)
}

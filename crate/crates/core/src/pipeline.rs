//! Batch corruption of a dataset: named corruption settings, per-scan seeding, and a
//! parallel runner that writes `<out>/<kind>/<level>/<scan_id>.{bin,label,prov}`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{assign_beam_labels, reduce_beams, subsample_azimuth};
use crate::error::{Error, Result};
use crate::labels::{remap_labels, ProvenanceSet};
use crate::noise::{
    apply_global_outliers, apply_local_distortion, DistortionParams, OutlierParams,
};
use crate::scan_io::{
    read_labels, read_scan, write_labels, write_scan, LabelSet, ManifestEntry, PointCloud,
    ScanManifest,
};
use crate::seed::derive_seed;
use crate::weather::{apply_fog, apply_snowfall, FogParams, SnowParams};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the JSON layout of run manifests and reports.
pub const SCHEMA_VERSION: u32 = 1;
pub const RUN_MANIFEST_NAME: &str = "run_manifest.json";
pub const SEED_RULE: &str =
    "seed = first 8 bytes (LE) of SHA-256(global_seed as u64 LE || kind_dir || 0x00 || level || 0x00 || scan_id || 0x00)";
/// Beam count of the clean sensor.
pub const DEFAULT_SOURCE_BEAMS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Light,
    Moderate,
    Heavy,
    Dense,
    Sparse,
    Custom,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Light => "light",
            Level::Moderate => "moderate",
            Level::Heavy => "heavy",
            Level::Dense => "dense",
            Level::Sparse => "sparse",
            Level::Custom => "custom",
        }
    }

    fn severity_index(self) -> Option<usize> {
        match self {
            Level::Light => Some(0),
            Level::Moderate => Some(1),
            Level::Heavy => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const FOG_BETAS: [f64; 3] = [0.005, 0.06, 0.2];
pub const SNOW_RATES: [f64; 3] = [0.5, 1.5, 2.5];
pub const OUTLIER_RATIOS: [f64; 3] = [0.001, 0.05, 0.5];
pub const DISTORTION_SIGMAS: [f64; 3] = [0.05, 0.1, 0.2];
pub const DISTORTION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorruptionParams {
    Fog {
        beta: f64,
        /// Pinned attenuation; drawn per scan when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Snow {
        rate: f64,
        #[serde(default)]
        wet_ground: bool,
    },
    GlobalOutliers {
        ratio: f64,
    },
    LocalDistortion {
        sigma: f64,
        fraction: f64,
    },
    CrossDevice {
        beams: usize,
        /// Keep one in `keep_every` points per beam; 1 keeps all.
        keep_every: usize,
    },
}

/// One fully determined corruption setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub params: CorruptionParams,
    pub level: Level,
    pub source_beams: usize,
}

impl CorruptionSpec {
    pub fn fog(level: Level) -> Result<Self> {
        Ok(Self::standard(
            CorruptionParams::Fog {
                beta: FOG_BETAS[severity(level)?],
                alpha: None,
            },
            level,
        ))
    }

    pub fn snow(level: Level) -> Result<Self> {
        Ok(Self::standard(
            CorruptionParams::Snow {
                rate: SNOW_RATES[severity(level)?],
                wet_ground: false,
            },
            level,
        ))
    }

    pub fn global_outliers(level: Level) -> Result<Self> {
        Ok(Self::standard(
            CorruptionParams::GlobalOutliers {
                ratio: OUTLIER_RATIOS[severity(level)?],
            },
            level,
        ))
    }

    pub fn local_distortion(level: Level) -> Result<Self> {
        let sigma = DISTORTION_SIGMAS[severity(level)?];
        Ok(Self::standard(
            CorruptionParams::LocalDistortion {
                sigma,
                fraction: DISTORTION_FRACTION,
            },
            level,
        ))
    }

    pub fn cross_device(beams: usize, level: Level) -> Result<Self> {
        let keep_every = match level {
            Level::Dense => 1,
            Level::Sparse => 2,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "cross-device level {other}; expected dense or sparse"
                )))
            }
        };
        Ok(Self::standard(
            CorruptionParams::CrossDevice { beams, keep_every },
            level,
        ))
    }

    /// A setting outside the standard schedule.
    pub fn custom(params: CorruptionParams) -> Self {
        Self::standard(params, Level::Custom)
    }

    fn standard(params: CorruptionParams, level: Level) -> Self {
        CorruptionSpec {
            params,
            level,
            source_beams: DEFAULT_SOURCE_BEAMS,
        }
    }

    /// The sixteen standard settings, grouped by corruption in benchmark order.
    pub fn all_standard() -> Vec<CorruptionSpec> {
        let sev = [Level::Light, Level::Moderate, Level::Heavy];
        let mut out = Vec::with_capacity(16);
        for ctor in [
            Self::fog,
            Self::snow,
            Self::global_outliers,
            Self::local_distortion,
        ] {
            out.extend(sev.iter().map(|&l| ctor(l).expect("standard level")));
        }
        for beams in [32, 16] {
            for l in [Level::Dense, Level::Sparse] {
                out.push(Self::cross_device(beams, l).expect("standard level"));
            }
        }
        out
    }

    /// Directory name of the corruption, e.g. `fog` or `cross-device-32`.
    pub fn kind_dir(&self) -> String {
        match self.params {
            CorruptionParams::Fog { .. } => "fog".into(),
            CorruptionParams::Snow { .. } => "snow".into(),
            CorruptionParams::GlobalOutliers { .. } => "global-outliers".into(),
            CorruptionParams::LocalDistortion { .. } => "local-distortion".into(),
            CorruptionParams::CrossDevice { beams, .. } => format!("cross-device-{beams}"),
        }
    }

    /// `<kind>/<level>`, relative to the output root.
    pub fn rel_dir(&self) -> PathBuf {
        Path::new(&self.kind_dir()).join(self.level.name())
    }

    pub fn scan_seed(&self, global_seed: u64, scan_id: &str) -> u64 {
        derive_seed(global_seed, &[&self.kind_dir(), self.level.name(), scan_id])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self.params {
            CorruptionParams::Fog { beta, alpha } => {
                if !(beta >= 0.0 && beta.is_finite()) {
                    return bad(format!("fog beta {beta}"));
                }
                if let Some(a) = alpha {
                    if !(a >= 0.0 && a.is_finite()) {
                        return bad(format!("fog alpha {a}"));
                    }
                }
            }
            CorruptionParams::Snow { rate, .. } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return bad(format!("snowfall rate {rate}"));
                }
            }
            CorruptionParams::GlobalOutliers { ratio } => {
                if !(ratio >= 0.0 && ratio.is_finite()) {
                    return bad(format!("outlier ratio {ratio}"));
                }
            }
            CorruptionParams::LocalDistortion { sigma, fraction } => {
                if !(sigma >= 0.0 && sigma.is_finite() && (0.0..=1.0).contains(&fraction)) {
                    return bad(format!("distortion sigma {sigma}, fraction {fraction}"));
                }
            }
            CorruptionParams::CrossDevice { beams, keep_every } => {
                if beams == 0 || !self.source_beams.is_multiple_of(beams) {
                    return Err(Error::IndivisibleBeamCount {
                        beams: self.source_beams,
                        target: beams,
                    });
                }
                if keep_every == 0 {
                    return bad("keep ratio 1/0".into());
                }
            }
        }
        Ok(())
    }
}

fn severity(level: Level) -> Result<usize> {
    level.severity_index().ok_or_else(|| {
        Error::InvalidParameter(format!("level {level}; expected light, moderate or heavy"))
    })
}

#[derive(Debug, Clone)]
pub struct CorruptedScan {
    pub cloud: PointCloud,
    pub labels: LabelSet,
    pub provenance: ProvenanceSet,
}

/// Applies one setting to one clean scan with the given per-scan seed.
pub fn corrupt_scan(
    spec: &CorruptionSpec,
    cloud: &PointCloud,
    labels: &LabelSet,
    seed: u64,
) -> Result<CorruptedScan> {
    labels.check_paired(cloud)?;
    let remapped = |cloud: PointCloud, provenance: ProvenanceSet| -> Result<CorruptedScan> {
        let labels = remap_labels(labels, &provenance)?;
        Ok(CorruptedScan {
            cloud,
            labels,
            provenance,
        })
    };
    match spec.params {
        CorruptionParams::Fog { beta, alpha } => {
            let mut params = FogParams::new(beta, seed);
            params.alpha = alpha;
            let out = apply_fog(cloud, &params)?;
            remapped(out.cloud, out.provenance)
        }
        CorruptionParams::Snow { rate, wet_ground } => {
            let beams = assign_beam_labels(cloud, spec.source_beams)?;
            let mut params = SnowParams::new(rate, seed);
            params.wet_ground = wet_ground;
            let out = apply_snowfall(cloud, &beams.beam_of, &params)?;
            remapped(out.cloud, out.provenance)
        }
        CorruptionParams::GlobalOutliers { ratio } => {
            let out = apply_global_outliers(cloud, &OutlierParams { ratio, seed })?;
            remapped(out.cloud, out.provenance)
        }
        CorruptionParams::LocalDistortion { sigma, fraction } => {
            let out = apply_local_distortion(
                cloud,
                &DistortionParams {
                    fraction,
                    sigma,
                    seed,
                },
            )?;
            remapped(out.cloud, out.provenance)
        }
        CorruptionParams::CrossDevice { beams, keep_every } => {
            let assignment = assign_beam_labels(cloud, spec.source_beams)?;
            let reduced = reduce_beams(cloud, labels, &assignment, beams)?;
            if keep_every == 1 {
                return Ok(CorruptedScan {
                    cloud: reduced.cloud,
                    labels: reduced.labels,
                    provenance: reduced.provenance,
                });
            }
            let sub = subsample_azimuth(
                &reduced.cloud,
                &reduced.labels,
                &reduced.assignment,
                keep_every,
            )?;
            // Compose provenance back to clean indices.
            let provenance = sub
                .provenance
                .tags
                .iter()
                .map(|t| reduced.provenance.tags[t.source().expect("device output is sourced")])
                .collect();
            Ok(CorruptedScan {
                cloud: sub.cloud,
                labels: sub.labels,
                provenance,
            })
        }
    }
}

/// Everything needed to reproduce a run. Written before any scan is processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub schema_version: u32,
    pub input_manifest: PathBuf,
    /// Output root relative to this file's directory.
    pub output_dir: PathBuf,
    pub global_seed: u64,
    pub seed_rule: String,
    pub specs: Vec<CorruptionSpec>,
    pub scan_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Stop at the first failing scan.
    pub strict: bool,
}

#[derive(Debug)]
pub struct Failure {
    pub setting: PathBuf,
    pub error: Error,
}

#[derive(Debug)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub written: usize,
    pub failures: Vec<Failure>,
}

impl RunSummary {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Manifest of a corrupted setting, referencing files relative to its own directory.
fn setting_manifest(input: &ScanManifest, spec: &CorruptionSpec) -> ScanManifest {
    let mut m = ScanManifest::new(input.metadata.clone());
    m.metadata.dataset_name = format!(
        "{}-{}-{}",
        input.metadata.dataset_name,
        spec.kind_dir(),
        spec.level
    );
    m.entries = input
        .entries
        .iter()
        .map(|e| ManifestEntry {
            scan_id: e.scan_id.clone(),
            scan_path: format!("{}.bin", e.scan_id).into(),
            label_path: format!("{}.label", e.scan_id).into(),
        })
        .collect();
    m
}

fn process_entry(
    input: &ScanManifest,
    entry: &ManifestEntry,
    specs: &[CorruptionSpec],
    global_seed: u64,
    out_dir: &Path,
    strict: bool,
) -> Vec<(PathBuf, Result<()>)> {
    let clean = read_scan(input.scan_path(entry))
        .and_then(|c| Ok((c, read_labels(input.label_path(entry))?)));
    let (cloud, labels) = match clean {
        Ok(v) => v,
        Err(e) => {
            let e = e.in_scan(&entry.scan_id);
            return vec![(PathBuf::from("*"), Err(e))];
        }
    };
    let run_one = |spec: &CorruptionSpec| -> Result<()> {
        let seed = spec.scan_seed(global_seed, &entry.scan_id);
        let out = corrupt_scan(spec, &cloud, &labels, seed)?;
        let dir = out_dir.join(spec.rel_dir());
        write_scan(&out.cloud, dir.join(format!("{}.bin", entry.scan_id)))?;
        write_labels(&out.labels, dir.join(format!("{}.label", entry.scan_id)))?;
        out.provenance
            .write_sidecar(dir.join(format!("{}.prov", entry.scan_id)))
    };
    let wrap = |spec: &CorruptionSpec| {
        (
            spec.rel_dir(),
            run_one(spec).map_err(|e| e.in_scan(&entry.scan_id)),
        )
    };
    if strict {
        let mut results = Vec::new();
        for spec in specs {
            let r = wrap(spec);
            let failed = r.1.is_err();
            results.push(r);
            if failed {
                break;
            }
        }
        results
    } else {
        specs.par_iter().map(wrap).collect()
    }
}

/// Corrupts every manifest entry under every setting. The run manifest is written first;
/// each scan task is independent, so outputs do not depend on the worker count.
pub fn run_corruption(
    input: &ScanManifest,
    input_path: &Path,
    specs: &[CorruptionSpec],
    global_seed: u64,
    out_dir: &Path,
    options: RunOptions,
) -> Result<RunSummary> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter(
            "no corruption settings requested".into(),
        ));
    }
    for s in specs {
        s.validate()?;
    }
    let run_manifest = RunManifest {
        toolkit_version: TOOLKIT_VERSION.into(),
        schema_version: SCHEMA_VERSION,
        input_manifest: input_path.to_owned(),
        output_dir: PathBuf::from("."),
        global_seed,
        seed_rule: SEED_RULE.into(),
        specs: specs.to_vec(),
        scan_ids: input.entries.iter().map(|e| e.scan_id.clone()).collect(),
    };
    create_dir(out_dir)?;
    write_json(&run_manifest, &out_dir.join(RUN_MANIFEST_NAME))?;
    for spec in specs {
        let dir = out_dir.join(spec.rel_dir());
        create_dir(&dir)?;
        setting_manifest(input, spec).save(dir.join("manifest.json"))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let failures = Mutex::new(Vec::new());
    let written = pool.install(|| {
        let process = |entry: &ManifestEntry| -> std::result::Result<usize, ()> {
            let mut ok = 0;
            let mut failed = false;
            for (setting, r) in
                process_entry(input, entry, specs, global_seed, out_dir, options.strict)
            {
                match r {
                    Ok(()) => ok += 1,
                    Err(error) => {
                        log::error!("{}: {error}", setting.display());
                        failures
                            .lock()
                            .expect("failure list")
                            .push(Failure { setting, error });
                        failed = true;
                    }
                }
            }
            if failed && options.strict {
                Err(())
            } else {
                Ok(ok)
            }
        };
        if options.strict {
            input
                .entries
                .par_iter()
                .map(process)
                .try_reduce(|| 0, |a, b| Ok(a + b))
                .unwrap_or(0)
        } else {
            input
                .entries
                .par_iter()
                .map(process)
                .map(|r| r.unwrap_or(0))
                .sum()
        }
    });
    let mut failures = failures.into_inner().expect("failure list");
    failures.sort_by(|a, b| {
        a.setting
            .cmp(&b.setting)
            .then_with(|| a.error.to_string().cmp(&b.error.to_string()))
    });
    Ok(RunSummary {
        manifest: run_manifest,
        written,
        failures,
    })
}

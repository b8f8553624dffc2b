//! Recipe configuration: a flat TOML document, one key per field.
//!
//! ```toml
//! operator = "polarmix"
//! input_root = "data/sequences"
//! output_root = "augmented"
//! classes = [11, 15, 30, 31, 32]
//! seed = 7
//! workers = 8
//! ```
//!
//! Relative paths resolve against the directory of the config file. Unknown
//! keys are rejected.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::{AnglePreset, AugmentConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Polarmix,
    SceneSwap,
    RotatePaste,
    SimplePaste,
    Mix3d,
    Cga,
    UdaMix,
}

impl Operator {
    pub fn name(self) -> &'static str {
        match self {
            Operator::Polarmix => "polarmix",
            Operator::SceneSwap => "scene_swap",
            Operator::RotatePaste => "rotate_paste",
            Operator::SimplePaste => "simple_paste",
            Operator::Mix3d => "mix3d",
            Operator::Cga => "cga",
            Operator::UdaMix => "uda_mix",
        }
    }

    /// Whether the operator reads the rotate-paste class list.
    pub fn uses_classes(self) -> bool {
        matches!(
            self,
            Operator::Polarmix | Operator::RotatePaste | Operator::SimplePaste | Operator::UdaMix
        )
    }

    /// Whether the operator mixes two scans (and therefore needs a pairing).
    pub fn needs_partner(self) -> bool {
        !matches!(self, Operator::Cga)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    #[default]
    Shuffled,
    SequentialOffset,
}

impl Pairing {
    pub fn name(self) -> &'static str {
        match self {
            Pairing::Shuffled => "shuffled",
            Pairing::SequentialOffset => "sequential-offset",
        }
    }
}

/// Everything one batch run depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct RecipeConfig {
    pub operator: Operator,
    /// Operator parameters; `augment.seed` is the global seed of the run.
    pub augment: AugmentConfig,
    pub input_root: PathBuf,
    /// Pseudo-labelled target dataset, `uda_mix` only.
    pub target_root: Option<PathBuf>,
    pub output_root: PathBuf,
    /// Where the run report goes; defaults to `<output_root>.report.json`.
    pub report_path: Option<PathBuf>,
    pub pairing: Pairing,
    /// Augmented samples produced per base scan.
    pub multiplier: u32,
    pub workers: usize,
    /// Target points with confidence below this are dropped (`uda_mix`).
    pub conf_threshold: f64,
}

/// On-disk shape of [`RecipeConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeFile {
    pub operator: Operator,
    pub input_root: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_root: Option<PathBuf>,
    pub output_root: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_path: Option<PathBuf>,
    #[serde(default)]
    pub pairing: Pairing,
    #[serde(default = "defaults::multiplier")]
    pub multiplier: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::workers")]
    pub workers: usize,
    #[serde(default = "defaults::sector_width_deg")]
    pub sector_width_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<u16>>,
    #[serde(default = "defaults::angle_preset")]
    pub angle_preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_deg: Option<Vec<f64>>,
    #[serde(default = "defaults::delta1")]
    pub delta1: f64,
    #[serde(default = "defaults::delta2")]
    pub delta2: f64,
    #[serde(default = "defaults::scale_min")]
    pub scale_min: f64,
    #[serde(default = "defaults::scale_max")]
    pub scale_max: f64,
    #[serde(default)]
    pub conf_threshold: f64,
}

mod defaults {
    pub fn multiplier() -> u32 {
        1
    }
    pub fn workers() -> usize {
        1
    }
    pub fn sector_width_deg() -> f64 {
        180.0
    }
    pub fn angle_preset() -> String {
        "kitti3".into()
    }
    pub fn delta1() -> f64 {
        0.5
    }
    pub fn delta2() -> f64 {
        1.0
    }
    pub fn scale_min() -> f64 {
        0.95
    }
    pub fn scale_max() -> f64 {
        1.05
    }
}

impl FromStr for RecipeConfig {
    type Err = Error;

    /// Parses without path resolution; relative paths stay relative.
    fn from_str(text: &str) -> Result<Self> {
        Self::from_toml_str(text, Path::new(""))
    }
}

impl RecipeConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml_str(&text, base)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(e))))
    }

    /// Parses and validates; relative paths are joined onto `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: RecipeFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file, base_dir)
    }

    pub fn from_file(file: RecipeFile, base_dir: &Path) -> Result<Self> {
        let angle_preset = match (file.angle_preset.as_str(), &file.angles_deg) {
            ("kitti3", None) => AnglePreset::Kitti3,
            ("perpendicular2", None) => AnglePreset::Perpendicular2,
            ("explicit", Some(degs)) => {
                AnglePreset::Explicit(degs.iter().copied().map(deg_to_rad).collect())
            }
            ("explicit", None) => {
                return Err(Error::Config(
                    "angle_preset = \"explicit\" needs angles_deg".into(),
                ))
            }
            ("kitti3" | "perpendicular2", Some(_)) => {
                return Err(Error::Config(
                    "angles_deg is only valid with angle_preset = \"explicit\"".into(),
                ))
            }
            (other, _) => {
                return Err(Error::Config(format!(
                    "unknown angle_preset {other:?}; expected kitti3, perpendicular2 or explicit"
                )))
            }
        };

        if file.operator.uses_classes() && file.classes.is_none() {
            return Err(Error::Config(format!(
                "operator {} needs a `classes` list",
                file.operator
            )));
        }

        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let augment = AugmentConfig {
            sector_width: deg_to_rad(file.sector_width_deg),
            classes: file.classes.unwrap_or_default().into_iter().collect(),
            angle_preset,
            delta1: file.delta1,
            delta2: file.delta2,
            seed: file.seed,
            scale_range: (file.scale_min, file.scale_max),
        };
        let config = RecipeConfig {
            operator: file.operator,
            augment,
            input_root: resolve(file.input_root),
            target_root: file.target_root.map(resolve),
            output_root: resolve(file.output_root),
            report_path: file.report_path.map(resolve),
            pairing: file.pairing,
            multiplier: file.multiplier,
            workers: file.workers,
            conf_threshold: file.conf_threshold,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_file(&self) -> RecipeFile {
        let (angle_preset, angles_deg) = match &self.augment.angle_preset {
            AnglePreset::Explicit(angles) => (
                "explicit".to_string(),
                Some(angles.iter().map(|a| a.to_degrees()).collect()),
            ),
            other => (other.name().to_string(), None),
        };
        RecipeFile {
            operator: self.operator,
            input_root: self.input_root.clone(),
            target_root: self.target_root.clone(),
            output_root: self.output_root.clone(),
            report_path: Some(self.report_path()),
            pairing: self.pairing,
            multiplier: self.multiplier,
            seed: self.augment.seed,
            workers: self.workers,
            sector_width_deg: self.augment.sector_width.to_degrees(),
            classes: Some(self.augment.classes.iter().copied().collect()),
            angle_preset,
            angles_deg,
            delta1: self.augment.delta1,
            delta2: self.augment.delta2,
            scale_min: self.augment.scale_range.0,
            scale_max: self.augment.scale_range.1,
            conf_threshold: self.conf_threshold,
        }
    }

    /// Every field with defaults filled in, as TOML.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("recipe config serializes")
    }

    pub fn report_path(&self) -> PathBuf {
        self.report_path.clone().unwrap_or_else(|| {
            let name = self
                .output_root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "output".into());
            self.output_root.with_file_name(format!("{name}.report.json"))
        })
    }

    pub fn classes(&self) -> &BTreeSet<u16> {
        &self.augment.classes
    }

    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        if self.multiplier < 1 {
            return Err(Error::Config("multiplier must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.conf_threshold.is_finite() && self.conf_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "conf_threshold {} must be a finite value >= 0",
                self.conf_threshold
            )));
        }
        match (self.operator, &self.target_root) {
            (Operator::UdaMix, None) => {
                return Err(Error::Config("operator uda_mix needs target_root".into()))
            }
            (op, Some(_)) if op != Operator::UdaMix => {
                return Err(Error::Config(format!(
                    "target_root is only used by uda_mix, not {op}"
                )))
            }
            _ => {}
        }

        let output = normalize(&self.output_root)?;
        if output.file_name().is_none() {
            return Err(Error::Config(format!(
                "output_root {} must name a directory",
                self.output_root.display()
            )));
        }
        let inputs = std::iter::once(&self.input_root).chain(self.target_root.as_ref());
        for input in inputs {
            let input_abs = normalize(input)?;
            if output.starts_with(&input_abs) || input_abs.starts_with(&output) {
                return Err(Error::Config(format!(
                    "output_root {} overlaps input root {}",
                    self.output_root.display(),
                    input.display()
                )));
            }
        }
        let report = normalize(&self.report_path())?;
        if report.starts_with(&output) {
            return Err(Error::Config(
                "report_path must lie outside output_root".into(),
            ));
        }
        Ok(())
    }
}

/// Exact at the multiples of 90° that matter here (180° is exactly π, 360°
/// exactly 2π), unlike `f64::to_radians`.
fn deg_to_rad(deg: f64) -> f64 {
    deg / 180.0 * PI
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// Absolute path with `.` and `..` resolved lexically.
fn normalize(path: &Path) -> Result<PathBuf> {
    let abs = std::path::absolute(path).map_err(|e| Error::io(path, e))?;
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    Ok(out)
}

//! Cross-scan augmentation operators.
//!
//! * [`scene_swap`] replaces an azimuth sector of the base scan with the same
//!   sector of a donor scan.
//! * [`rotate_paste`] crops every point of the chosen semantic classes from the
//!   donor, makes one copy per rotation angle about z, and appends them.
//! * [`polarmix`] gates the two with independent coin flips.
//!
//! Output layout is fixed: base-scan points first, donor points appended in
//! donor order. Every operator is a pure function of its inputs and the
//! caller's rng.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{class_mask, rotate_z, sector_mask, wrap_angle, RotationZ, SectorSpec};
use crate::scan::Scan;

/// Semantic ids of the small dynamic classes in the SemanticKITTI raw label
/// space (bicycle, motorcycle, person, bicyclist, motorcyclist).
///
/// A suggested starting point for the rotate-paste class list. Not a measured
/// optimum; configure the class list explicitly for real runs.
pub const SUGGESTED_KITTI_THING_CLASSES: [u16; 5] = [11, 15, 30, 31, 32];

const THIRD_TURN: f64 = TAU / 3.0;

/// Rule for drawing the rotate-paste angle list.
#[derive(Clone, Debug, PartialEq)]
pub enum AnglePreset {
    /// `[0, u1, u2]` with `u1` in (0°, 120°] and `u2` in (120°, 240°].
    Kitti3,
    /// `[0, ±90°]`, sign chosen by a fair coin.
    Perpendicular2,
    /// Fixed list in radians, returned as given.
    Explicit(Vec<f64>),
}

impl AnglePreset {
    pub fn name(&self) -> &'static str {
        match self {
            AnglePreset::Kitti3 => "kitti3",
            AnglePreset::Perpendicular2 => "perpendicular2",
            AnglePreset::Explicit(_) => "explicit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    /// Width of the swapped sector, radians in `[0, 2π]`.
    pub sector_width: f64,
    /// Semantic ids cropped by rotate-paste.
    pub classes: BTreeSet<u16>,
    pub angle_preset: AnglePreset,
    /// Probability of the scene-swap branch.
    pub delta1: f64,
    /// Probability of the rotate-paste branch.
    pub delta2: f64,
    pub seed: u64,
    /// Uniform scale range of the global baseline.
    pub scale_range: (f64, f64),
}

impl AugmentConfig {
    /// Defaults: 180° sectors, `kitti3` angles, swap gate 0.5, paste gate 1.
    pub fn new(classes: impl IntoIterator<Item = u16>) -> Self {
        Self {
            sector_width: PI,
            classes: classes.into_iter().collect(),
            angle_preset: AnglePreset::Kitti3,
            delta1: 0.5,
            delta2: 1.0,
            seed: 0,
            scale_range: (0.95, 1.05),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=TAU).contains(&self.sector_width) {
            return Err(Error::InvalidSectorWidth(self.sector_width));
        }
        check_probability("delta1", self.delta1)?;
        check_probability("delta2", self.delta2)?;
        check_scale_range(self.scale_range)?;
        if let AnglePreset::Explicit(angles) = &self.angle_preset {
            if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
                return Err(Error::Config(format!("explicit angle {bad} is not finite")));
            }
        }
        Ok(())
    }

    /// Fresh rng seeded from `self.seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

pub(crate) fn check_scale_range((lo, hi): (f64, f64)) -> Result<()> {
    if lo > 0.0 && lo <= hi && hi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScaleRange { lo, hi })
    }
}

/// Result of the two stochastic gates of one [`polarmix`] call.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MixTrace {
    /// Sector used when the swap branch fired.
    pub sector: Option<SectorSpec>,
    /// Angles used when the paste branch fired.
    pub angles: Option<Vec<f64>>,
}

/// `(A outside sector) ++ (B inside sector)`.
///
/// The symmetric result, B receiving A's sector, is
/// `scene_swap(b, a, &sector.complement())` up to which side comes first.
pub fn scene_swap(a: &Scan, b: &Scan, sector: &SectorSpec) -> Scan {
    let keep_a = sector_mask(a.points(), sector).complement();
    let take_b = sector_mask(b.points(), sector);
    let mut out = Scan::with_capacity(keep_a.count() + take_b.count());
    out.extend_from(&a.select(&keep_a));
    out.extend_from(&b.select(&take_b));
    out
}

/// `A ++ R(ω1)·crop ++ R(ω2)·crop ++ ...` where `crop` holds the points of `b`
/// whose semantic id is in `classes`. Labels of every copy equal the cropped
/// labels.
pub fn rotate_paste(a: &Scan, b: &Scan, classes: &BTreeSet<u16>, omegas: &[f64]) -> Scan {
    let crop = b.select(&class_mask(b.labels(), classes));
    if crop.is_empty() || omegas.is_empty() {
        return a.clone();
    }
    let mut out = Scan::with_capacity(a.len() + omegas.len() * crop.len());
    out.extend_from(a);
    for &omega in omegas {
        let rotated = rotate_z(crop.points(), RotationZ::new(omega));
        out.extend_parts(&rotated, crop.labels());
    }
    out
}

/// Rotate-paste with a single unrotated copy.
pub fn simple_paste(a: &Scan, b: &Scan, classes: &BTreeSet<u16>) -> Scan {
    rotate_paste(a, b, classes, &[0.0])
}

/// Sector of fixed `width` whose start is uniform on `[-π, π)`.
///
/// Always consumes exactly one draw, including for the degenerate widths.
pub fn sample_sector<R: Rng + ?Sized>(width: f64, rng: &mut R) -> Result<SectorSpec> {
    if !(0.0..=TAU).contains(&width) {
        return Err(Error::InvalidSectorWidth(width));
    }
    let alpha = wrap_angle(rng.gen_range(-PI..PI));
    if width == TAU {
        return Ok(SectorSpec::full());
    }
    SectorSpec::from_start_width(alpha, width)
}

/// Value uniform on the half-open interval `(lo, hi]`.
fn uniform_left_open<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    let v = lo + (1.0 - u) * (hi - lo);
    v.clamp(lo.next_up(), hi)
}

pub fn sample_angles<R: Rng + ?Sized>(preset: &AnglePreset, rng: &mut R) -> Vec<f64> {
    match preset {
        AnglePreset::Kitti3 => {
            let first = uniform_left_open(0.0, THIRD_TURN, rng);
            let second = uniform_left_open(THIRD_TURN, 2.0 * THIRD_TURN, rng);
            vec![0.0, first, second]
        }
        AnglePreset::Perpendicular2 => {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            vec![0.0, sign * FRAC_PI_2]
        }
        AnglePreset::Explicit(angles) => angles.clone(),
    }
}

#[inline]
fn gate<R: Rng + ?Sized>(probability: f64, rng: &mut R) -> bool {
    // Draws from [0, 1): probability 1 always fires, 0 never does.
    rng.gen::<f64>() < probability
}

/// Scene swap and rotate-paste under independent gates, starting from `a`.
///
/// Rng schedule: swap gate, sector start (only if the swap fired), paste gate,
/// angle draws (only if the paste fired). Rotate-paste always crops from the
/// original `b`.
pub fn polarmix<R: Rng + ?Sized>(
    a: &Scan,
    b: &Scan,
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<Scan> {
    polarmix_traced(a, b, config, rng).map(|(scan, _)| scan)
}

/// [`polarmix`], also reporting which branches fired and with what parameters.
pub fn polarmix_traced<R: Rng + ?Sized>(
    a: &Scan,
    b: &Scan,
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<(Scan, MixTrace)> {
    config.validate()?;
    let mut trace = MixTrace::default();
    let mut out = None;

    if gate(config.delta1, rng) {
        let sector = sample_sector(config.sector_width, rng)?;
        out = Some(scene_swap(a, b, &sector));
        trace.sector = Some(sector);
    }

    if gate(config.delta2, rng) {
        let angles = sample_angles(&config.angle_preset, rng);
        let base = out.as_ref().unwrap_or(a);
        out = Some(rotate_paste(base, b, &config.classes, &angles));
        trace.angles = Some(angles);
    }

    Ok((out.unwrap_or_else(|| a.clone()), trace))
}

/// Drops target points whose confidence is below `threshold`.
pub fn filter_by_confidence(target: &Scan, confidences: &[f32], threshold: f64) -> Result<Scan> {
    if confidences.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "target confidences",
            left: confidences.len(),
            right: target.len(),
        });
    }
    let keep = confidences
        .iter()
        .map(|&c| c as f64 >= threshold)
        .collect();
    Ok(target.select(&crate::geometry::Mask::from_flags(keep)))
}

/// Source/target mixing for domain adaptation.
///
/// The labelled source scan is the base; the pseudo-labelled target scan,
/// after confidence filtering, is the donor. A threshold of 0 keeps every
/// target point.
pub fn uda_mix<R: Rng + ?Sized>(
    source: &Scan,
    target: &Scan,
    target_confidences: &[f32],
    conf_threshold: f64,
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<Scan> {
    if conf_threshold.is_nan() {
        return Err(Error::Config("confidence threshold is NaN".into()));
    }
    let donor = filter_by_confidence(target, target_confidences, conf_threshold)?;
    polarmix(source, &donor, config, rng)
}

//! Comparison augmentations: whole-scene concatenation and global
//! scale-and-rotate.

use std::f64::consts::PI;

use rand::Rng;

use crate::augment::check_scale_range;
use crate::error::Result;
use crate::geometry::Point;
use crate::scan::Scan;

/// All of `a` followed by all of `b`.
pub fn mix3d_concat(a: &Scan, b: &Scan) -> Scan {
    let mut out = Scan::with_capacity(a.len() + b.len());
    out.extend_from(a);
    out.extend_from(b);
    out
}

/// Scales x, y, z by `scale` and rotates the scan by `angle` about z.
pub fn global_transform(scan: &Scan, scale: f64, angle: f64) -> Scan {
    if scale == 1.0 && angle == 0.0 {
        return scan.clone();
    }
    let (s, c) = angle.sin_cos();
    scan.map_points(|p| {
        let (x, y, z) = (p.x as f64, p.y as f64, p.z as f64);
        Point {
            x: (scale * (c * x - s * y)) as f32,
            y: (scale * (s * x + c * y)) as f32,
            z: (scale * z) as f32,
            intensity: p.intensity,
        }
    })
}

/// Random global scaling then rotation. Draws the scale factor uniformly from
/// `[lo, hi]`, then the angle uniformly from `[-π, π)`.
pub fn global_aug<R: Rng + ?Sized>(
    scan: &Scan,
    scale_range: (f64, f64),
    rng: &mut R,
) -> Result<Scan> {
    check_scale_range(scale_range)?;
    let (lo, hi) = scale_range;
    let scale = rng.gen_range(lo..=hi);
    let angle = rng.gen_range(-PI..PI);
    Ok(global_transform(scan, scale, angle))
}

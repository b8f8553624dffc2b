//! ASCII PLY export for looking at augmented scans in a point-cloud viewer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::scan::Scan;

/// Color used for class ids the palette does not list.
pub const FALLBACK_COLOR: [u8; 3] = [128, 128, 128];

/// Semantic class id to RGB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    colors: BTreeMap<u16, [u8; 3]>,
    fallback: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            colors: BTreeMap::new(),
            fallback: FALLBACK_COLOR,
        }
    }
}

impl Palette {
    pub fn new(colors: impl IntoIterator<Item = (u16, [u8; 3])>) -> Self {
        Self {
            colors: colors.into_iter().collect(),
            fallback: FALLBACK_COLOR,
        }
    }

    pub fn with_fallback(mut self, fallback: [u8; 3]) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn color(&self, class: u16) -> [u8; 3] {
        self.colors.get(&class).copied().unwrap_or(self.fallback)
    }

    /// Well-separated hues, one per class, assigned in ascending id order.
    pub fn generated(classes: &BTreeSet<u16>) -> Self {
        let colors = classes.iter().enumerate().map(|(i, &c)| {
            // Golden-ratio hue stepping.
            let hue = (i as f64 * 0.618_033_988_749_895).fract();
            (c, hsv_to_rgb(hue, 0.75, 0.95))
        });
        Self::new(colors)
    }

    /// Parses a TOML table mapping class ids to `[r, g, b]`, with an optional
    /// `fallback` key:
    ///
    /// ```toml
    /// 10 = [245, 150, 100]
    /// 40 = [255, 0, 255]
    /// fallback = [0, 0, 0]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: BTreeMap<String, [u8; 3]> =
            toml::from_str(text).map_err(|e| Error::Config(format!("palette: {e}")))?;
        let mut palette = Palette::default();
        for (key, rgb) in table {
            if key == "fallback" {
                palette.fallback = rgb;
                continue;
            }
            let id: u16 = key
                .parse()
                .map_err(|_| Error::Config(format!("palette key {key:?} is not a class id")))?;
            palette.colors.insert(id, rgb);
        }
        Ok(palette)
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let sector = (h * 6.0).floor();
    let f = h * 6.0 - sector;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    let (r, g, b) = match sector as i32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    let to_u8 = |c: f64| (c * 255.0).round() as u8;
    [to_u8(r), to_u8(g), to_u8(b)]
}

pub fn render_ply(scan: &Scan, palette: &Palette) -> String {
    let mut out = String::with_capacity(256 + scan.len() * 40);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", scan.len());
    out.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for (p, l) in scan.points().iter().zip(scan.labels()) {
        let [r, g, b] = palette.color(l.semantic());
        let _ = writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, r, g, b);
    }
    out
}

pub fn export_ply(scan: &Scan, palette: &Palette, path: &Path) -> Result<()> {
    write_atomic(path, render_ply(scan, palette).as_bytes())
}

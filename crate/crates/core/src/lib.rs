//! LiDAR scan augmentation by azimuth-sector swapping and rotate-and-paste of
//! semantic classes, with baselines, a domain-adaptation mixing mode and a
//! deterministic batch pipeline over on-disk datasets.

pub mod augment;
pub mod baseline;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod ply;
pub mod scan;
pub mod stats;

pub use augment::{
    polarmix, polarmix_traced, rotate_paste, sample_angles, sample_sector, scene_swap,
    simple_paste, uda_mix, AnglePreset, AugmentConfig, MixTrace,
};
pub use baseline::{global_aug, global_transform, mix3d_concat};
pub use error::{DecodeError, Error, Result};
pub use geometry::{
    class_mask, rotate_z, sector_mask, to_polar, Mask, Point, PolarCoord, RotationZ, SectorSpec,
};
pub use io::{read_scan, write_scan};
pub use ply::{export_ply, Palette};
pub use scan::{Label, Scan};
pub use stats::{report_stats, ClassHistogram};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

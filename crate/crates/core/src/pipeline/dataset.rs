//! Dataset discovery and output-path mirroring.
//!
//! Any `*.bin` under the root is a scan. Its label partner is `<stem>.label`
//! in the same directory or, for the SemanticKITTI layout
//! `seq/velodyne/<stem>.bin`, `seq/labels/<stem>.label`.

use std::path::{Path, PathBuf};

use log::warn;
use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetEntry {
    pub scan_path: PathBuf,
    pub label_path: Option<PathBuf>,
    /// `scan_path` relative to the dataset root.
    pub rel_path: PathBuf,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub root: PathBuf,
    /// Sorted by relative path.
    pub entries: Vec<DatasetEntry>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Where a scan's label file lives by convention, whether or not it exists.
pub fn default_label_path(scan_path: &Path) -> PathBuf {
    let file = scan_path.with_extension("label");
    let file_name = file.file_name().map(PathBuf::from).unwrap_or_default();
    match scan_path.parent() {
        Some(dir) if dir.file_name().is_some_and(|n| n == "velodyne") => dir
            .parent()
            .map(|seq| seq.join("labels").join(&file_name))
            .unwrap_or(file),
        _ => file,
    }
}

fn find_label(scan_path: &Path) -> Option<PathBuf> {
    let conventional = default_label_path(scan_path);
    let sibling = scan_path.with_extension("label");
    [conventional, sibling].into_iter().find(|p| p.is_file())
}

pub fn enumerate_dataset(root: &Path) -> Result<Dataset> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "dataset root is not a directory"),
        ));
    }
    std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;

    let mut dataset = Dataset {
        root: root.to_path_buf(),
        ..Dataset::default()
    };
    for item in WalkDir::new(root).sort_by_file_name() {
        let item = match item {
            Ok(item) => item,
            Err(e) => {
                let msg = format!("skipping unreadable path: {e}");
                warn!("{msg}");
                dataset.warnings.push(msg);
                continue;
            }
        };
        let path = item.path();
        if !item.file_type().is_file() || path.extension().is_none_or(|e| e != "bin") {
            continue;
        }
        let rel_path = path
            .strip_prefix(root)
            .expect("walkdir yields paths under the root")
            .to_path_buf();
        let label_path = find_label(path);
        if label_path.is_none() {
            let msg = format!("{} has no label file; using the unlabeled id", path.display());
            warn!("{msg}");
            dataset.warnings.push(msg);
        }
        dataset.entries.push(DatasetEntry {
            scan_path: path.to_path_buf(),
            label_path,
            rel_path,
        });
    }
    dataset.entries.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));
    Ok(dataset)
}

/// Output scan and label paths for multiplier slot `k` of `entry`.
pub fn output_paths(entry: &DatasetEntry, dataset_root: &Path, output_root: &Path, k: u32) -> (PathBuf, PathBuf) {
    let suffixed = |p: &Path, ext: &str| {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        p.with_file_name(format!("{stem}_aug{k}.{ext}"))
    };
    let scan_out = output_root.join(suffixed(&entry.rel_path, "bin"));
    let label_rel = match &entry.label_path {
        Some(label) => label
            .strip_prefix(dataset_root)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| default_label_path(&entry.rel_path)),
        None => default_label_path(&entry.rel_path),
    };
    let label_out = output_root.join(suffixed(&label_rel, "label"));
    (scan_out, label_out)
}

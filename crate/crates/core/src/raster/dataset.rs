//! On-disk dataset layout.
//!
//! A dataset root holds `genuine/` and `forged/` directories of `.pgm` or
//! `.png` files. Alternatively a `dataset.tsv` manifest (one `path<TAB>label`
//! row per image, paths relative to the root, labels `genuine`/`forged`)
//! can enumerate files anywhere under the root. Entries are returned in a
//! deterministic order: manifest order, or sorted paths per label directory.

use std::fs;
use std::path::{Path, PathBuf};

use super::{load_image, GrayImage, ImageFormat, RasterError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Genuine,
    Forged,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::Forged => "forged",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "genuine" => Some(Label::Genuine),
            "forged" => Some(Label::Forged),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub label: Label,
    pub image: GrayImage,
}

/// Load every labeled image under `root`. Prefers `dataset.tsv` when
/// present, otherwise scans `genuine/` and `forged/`.
pub fn load_dataset(root: &Path) -> Result<Vec<DatasetEntry>, RasterError> {
    let manifest = root.join("dataset.tsv");
    let listing = if manifest.is_file() {
        read_manifest(root, &manifest)?
    } else {
        scan_layout(root)?
    };
    if listing.is_empty() {
        return Err(RasterError::Dataset(format!("no images found under {}", root.display())));
    }
    let mut entries = Vec::with_capacity(listing.len());
    for (path, label) in listing {
        let format = path
            .extension()
            .and_then(|e| e.to_str())
            .and_then(ImageFormat::from_extension)
            .ok_or_else(|| {
                RasterError::Dataset(format!("unsupported image extension: {}", path.display()))
            })?;
        let bytes = fs::read(&path)?;
        let image = load_image(&bytes, format)?;
        entries.push(DatasetEntry { path, label, image });
    }
    Ok(entries)
}

fn read_manifest(root: &Path, manifest: &Path) -> Result<Vec<(PathBuf, Label)>, RasterError> {
    let text = fs::read_to_string(manifest)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((path, label)) = line.split_once('\t') else {
            return Err(RasterError::Dataset(format!(
                "dataset.tsv line {}: expected `path<TAB>label`",
                idx + 1
            )));
        };
        let label = Label::parse(label.trim()).ok_or_else(|| {
            RasterError::Dataset(format!("dataset.tsv line {}: unknown label `{label}`", idx + 1))
        })?;
        out.push((root.join(path.trim()), label));
    }
    Ok(out)
}

fn scan_layout(root: &Path) -> Result<Vec<(PathBuf, Label)>, RasterError> {
    let mut out = Vec::new();
    for (dir, label) in [("genuine", Label::Genuine), ("forged", Label::Forged)] {
        let dir = root.join(dir);
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .and_then(ImageFormat::from_extension)
                    .is_some()
            })
            .collect();
        files.sort();
        out.extend(files.into_iter().map(|p| (p, label)));
    }
    Ok(out)
}

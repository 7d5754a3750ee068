use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    pub mask: PathBuf,
}

/// Image / ground-truth pairs sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries `range`, in order.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            entries: self.entries[range].to_vec(),
        }
    }
}

fn files_by_stem(dir: &Path, extensions: &[&str]) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in listing {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        let Some(ext) = ext else { continue };
        if !path.is_file() || !extensions.contains(&ext.as_str()) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if let Some(previous) = out.insert(stem.to_owned(), path.clone()) {
            return Err(Error::data(format!(
                "`{stem}` is ambiguous: {} and {}",
                previous.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Pairs `root/images/<id>.{png,pgm}` with `root/masks/<id>.png`.
pub fn ingest_dataset(root: impl AsRef<Path>) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let images = files_by_stem(&root.join("images"), &["png", "pgm"])?;
    let masks = files_by_stem(&root.join("masks"), &["png"])?;
    if let Some(id) = masks.keys().find(|id| !images.contains_key(*id)) {
        return Err(Error::data(format!("mask `{id}` has no matching image")));
    }
    let mut entries = Vec::with_capacity(images.len());
    for (id, image) in images {
        let mask = masks
            .get(&id)
            .ok_or_else(|| Error::data(format!("image `{id}` has no matching mask")))?
            .clone();
        let dims = |p: &Path| {
            image::image_dimensions(p).map_err(|e| Error::Decode {
                path: p.into(),
                message: e.to_string(),
            })
        };
        let (di, dm) = (dims(&image)?, dims(&mask)?);
        if di != dm {
            return Err(Error::data(format!(
                "`{id}`: image is {}x{} but mask is {}x{}",
                di.0, di.1, dm.0, dm.1
            )));
        }
        entries.push(ManifestEntry { id, image, mask });
    }
    if entries.is_empty() {
        return Err(Error::data(format!(
            "{}: dataset contains no images",
            root.display()
        )));
    }
    Ok(DatasetManifest { entries })
}

//! Pipeline definitions and the detector that backs internal pipelines.
//!
//! A pipeline spec file is a list of `[section]`s of `key = value` lines:
//!
//! ```text
//! [dcsi]
//! name = Horizon-DCSI-synth
//! source = internal
//! variant = dcsi
//! model = boundary.txt
//! postproc = pp2
//!
//! [oracle]
//! source = external
//! masks_dir = gt_masks
//! ```
//!
//! Internal pipelines may also set `delta`, `lambda` and `mu`. Relative paths
//! are resolved against the directory of the spec file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::dataset::DatasetManifest;
use crate::classifier::{
    dense_score_map, sample_keypoints, train, ClassifierModel, Mode, TrainConfig,
};
use crate::error::{Error, Result};
use crate::extract::{extract_dcsi, extract_energy, DpConfig, PathResult, Variant};
use crate::postprocess::PostProcess;
use crate::raster::{gradient_field, load_gray_image, load_mask, skyline_from_mask, GrayImage};

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Internal { model: PathBuf, dp: DpConfig },
    External { masks_dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub name: String,
    pub source: Source,
    pub postproc: PostProcess,
}

pub fn load_pipelines(path: impl AsRef<Path>) -> Result<Vec<PipelineSpec>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_pipelines(&text, base).map_err(|(line, message)| Error::Parse {
        path: path.into(),
        line,
        message,
    })
}

#[derive(Default)]
struct Section {
    header_line: usize,
    title: String,
    keys: Vec<(usize, String, String)>,
}

pub fn parse_pipelines(
    text: &str,
    base: &Path,
) -> std::result::Result<Vec<PipelineSpec>, (usize, String)> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(title) = line.strip_prefix('[') {
            let title = title
                .strip_suffix(']')
                .ok_or((n, "unterminated section header".to_owned()))?;
            sections.push(Section {
                header_line: n,
                title: title.trim().to_owned(),
                keys: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or((n, format!("expected `key = value`, found `{line}`")))?;
        let section = sections
            .last_mut()
            .ok_or((n, "key outside of a [section]".to_owned()))?;
        section
            .keys
            .push((n, key.trim().to_owned(), value.trim().to_owned()));
    }
    if sections.is_empty() {
        return Err((1, "no pipelines defined".to_owned()));
    }
    sections.iter().map(|s| build_spec(s, base)).collect()
}

fn build_spec(s: &Section, base: &Path) -> std::result::Result<PipelineSpec, (usize, String)> {
    let get = |key: &str| {
        s.keys
            .iter()
            .rev()
            .find(|(_, k, _)| k == key)
            .map(|(n, _, v)| (*n, v.as_str()))
    };
    const KNOWN: [&str; 9] = [
        "name",
        "source",
        "variant",
        "model",
        "masks_dir",
        "postproc",
        "delta",
        "lambda",
        "mu",
    ];
    if let Some((n, k, _)) = s.keys.iter().find(|(_, k, _)| !KNOWN.contains(&k.as_str())) {
        return Err((*n, format!("unknown key `{k}`")));
    }
    let missing = |key: &str| (s.header_line, format!("[{}] is missing `{key}`", s.title));

    let name = get("name").map_or(s.title.clone(), |(_, v)| v.to_owned());
    let postproc = match get("postproc") {
        Some((n, v)) => v.parse().map_err(|e: Error| (n, e.to_string()))?,
        None => PostProcess::None,
    };
    let (n, source) = get("source").ok_or_else(|| missing("source"))?;
    let source = match source {
        "internal" => {
            let (n, variant) = get("variant").ok_or_else(|| missing("variant"))?;
            let variant: Variant = variant.parse().map_err(|e: Error| (n, e.to_string()))?;
            let (_, model) = get("model").ok_or_else(|| missing("model"))?;
            let mut dp = DpConfig::for_variant(variant);
            if let Some((n, v)) = get("delta") {
                dp.delta = v.parse().map_err(|e| (n, format!("delta: {e}")))?;
            }
            if let Some((n, v)) = get("lambda") {
                dp.jump_weight = v.parse().map_err(|e| (n, format!("lambda: {e}")))?;
            }
            if let Some((n, v)) = get("mu") {
                dp.edge_weight = v.parse().map_err(|e| (n, format!("mu: {e}")))?;
            }
            dp.validate().map_err(|e| (s.header_line, e.to_string()))?;
            Source::Internal {
                model: base.join(model),
                dp,
            }
        }
        "external" => {
            let (_, dir) = get("masks_dir").ok_or_else(|| missing("masks_dir"))?;
            Source::External {
                masks_dir: base.join(dir),
            }
        }
        other => {
            return Err((
                n,
                format!("unknown source `{other}` (expected internal|external)"),
            ))
        }
    };
    Ok(PipelineSpec {
        name,
        source,
        postproc,
    })
}

/// A trained model together with the extractor that consumes its scores.
#[derive(Debug, Clone)]
pub struct Detector {
    pub model: ClassifierModel,
    pub dp: DpConfig,
}

impl Detector {
    /// DCSI needs a boundary model, the energy variant a region model.
    pub fn new(model: ClassifierModel, dp: DpConfig) -> Result<Self> {
        dp.validate()?;
        let wanted = match dp.variant {
            Variant::Dcsi => Mode::Boundary,
            Variant::Energy => Mode::Region,
        };
        if model.mode != wanted {
            return Err(Error::config(format!(
                "{:?} extraction needs a {} model, got {}",
                dp.variant,
                wanted.as_str(),
                model.mode.as_str()
            )));
        }
        Ok(Self { model, dp })
    }

    pub fn detect(&self, img: &GrayImage) -> Result<PathResult> {
        let scores = dense_score_map(img, &self.model);
        match self.dp.variant {
            Variant::Dcsi => extract_dcsi(&scores, &self.dp),
            Variant::Energy => extract_energy(&scores, &gradient_field(img)?, &self.dp),
        }
    }
}

/// Per-image sampling seed, so image `i` draws the same patches no matter
/// which other images are in the training set.
pub fn image_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Samples every image in memory and fits one model.
pub fn train_on_images<'a>(
    images: impl IntoIterator<Item = (&'a GrayImage, &'a crate::raster::Skyline)>,
    mode: Mode,
    cfg: &TrainConfig,
) -> Result<ClassifierModel> {
    let mut samples = Vec::new();
    for (i, (img, gt)) in images.into_iter().enumerate() {
        let per_image = TrainConfig {
            seed: image_seed(cfg.seed, i),
            ..cfg.clone()
        };
        samples.extend(sample_keypoints(img, gt, &per_image, mode)?);
    }
    train(&samples, cfg, mode)
}

pub fn train_on_dataset(
    manifest: &DatasetManifest,
    mode: Mode,
    cfg: &TrainConfig,
) -> Result<ClassifierModel> {
    let mut data = Vec::with_capacity(manifest.len());
    for entry in &manifest.entries {
        let img = load_gray_image(&entry.image)?;
        let gt = skyline_from_mask(&load_mask(&entry.mask)?)
            .map_err(|e| Error::Data(format!("{}: {e}", entry.id)))?;
        data.push((img, gt));
    }
    train_on_images(data.iter().map(|(i, g)| (i, g)), mode, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_internal_and_external_sections() {
        let text = "\
# comparison
[dcsi]
name = Horizon-DCSI
source = internal
variant = dcsi
model = models/boundary.txt
postproc = pp2
delta = 12
lambda = 0.1

[gt]
source = external
masks_dir = /data/gt
";
        let specs = parse_pipelines(text, Path::new("/base")).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].name, "Horizon-DCSI");
        assert_eq!(specs[0].postproc, PostProcess::Pp2);
        match &specs[0].source {
            Source::Internal { model, dp } => {
                assert_eq!(model, Path::new("/base/models/boundary.txt"));
                assert_eq!(dp.variant, Variant::Dcsi);
                assert_eq!(dp.delta, 12);
                assert_eq!(dp.jump_weight, 0.1);
            }
            other => panic!("unexpected source {other:?}"),
        }
        assert_eq!(specs[1].name, "gt");
        assert_eq!(
            specs[1].source,
            Source::External {
                masks_dir: PathBuf::from("/data/gt")
            }
        );
    }

    #[test]
    fn reports_bad_lines() {
        let err = |t: &str| parse_pipelines(t, Path::new(".")).unwrap_err();
        assert_eq!(err("source = internal").0, 1);
        assert_eq!(err("[a]\nsource = internal\nvariant = dcsi\n").0, 1);
        assert_eq!(
            err("[a]\nsource = external\nmasks_dir = x\ncolour = red").0,
            4
        );
        assert_eq!(
            err("[a]\nsource = external\nmasks_dir = x\npostproc = pp3").0,
            4
        );
        assert_eq!(err("[a]\nsource = cloud").0, 2);
        assert_eq!(err("").0, 1);
    }

    #[test]
    fn detector_checks_model_mode() {
        let model = ClassifierModel::new(Mode::Region, vec![0.0; 256], 0.0).unwrap();
        assert!(Detector::new(model.clone(), DpConfig::dcsi()).is_err());
        assert!(Detector::new(model, DpConfig::energy()).is_ok());
    }
}

use std::path::Path;

use crate::bench::dataset::{DatasetManifest, ManifestEntry};
use crate::bench::pipeline::{Detector, PipelineSpec, Source};
use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, pixel_accuracy, pixel_distance, ImageScore, StdKind};
use crate::postprocess::{Connectivity, PostProcess};
use crate::raster::{
    clamp_empty_columns, load_gray_image, load_mask, mask_from_skyline, skyline_from_mask,
    BinaryMask,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    /// Worker threads for per-image work; 0 uses all available cores.
    pub workers: usize,
    pub std_kind: StdKind,
    pub connectivity: Connectivity,
    /// Give all-sky columns a horizon at the bottom row before converting a
    /// mask to a skyline, instead of counting the image as failed.
    pub clamp_empty_columns: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            std_kind: StdKind::Population,
            connectivity: Connectivity::Four,
            clamp_empty_columns: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub approach: String,
    pub accuracy: f64,
    pub dist_mean: f64,
    pub dist_std: f64,
    /// Images that were scored.
    pub images: usize,
    /// Images excluded because a mask could not be produced or scored.
    pub failed: usize,
}

enum Prepared {
    Internal(Detector),
    External(std::path::PathBuf),
}

fn prepare(spec: &PipelineSpec) -> Result<Prepared> {
    match &spec.source {
        Source::Internal { model, dp } => {
            let model = ClassifierModel::load(model)?;
            Detector::new(model, dp.clone()).map(Prepared::Internal)
        }
        Source::External { masks_dir } => {
            if !masks_dir.is_dir() {
                return Err(Error::data(format!(
                    "{}: mask directory does not exist",
                    masks_dir.display()
                )));
            }
            Ok(Prepared::External(masks_dir.clone()))
        }
    }
}

fn to_skyline_mask(m: &BinaryMask, clamp: bool) -> std::borrow::Cow<'_, BinaryMask> {
    if clamp {
        std::borrow::Cow::Owned(clamp_empty_columns(m))
    } else {
        std::borrow::Cow::Borrowed(m)
    }
}

/// Scores one image of one pipeline.
pub fn score_mask(
    pred: &BinaryMask,
    gt: &BinaryMask,
    postproc: PostProcess,
    opts: &BenchOptions,
) -> Result<ImageScore> {
    let pred = postproc.apply(pred, opts.connectivity);
    let accuracy = pixel_accuracy(&pred, gt)?;
    let pred_sk = skyline_from_mask(&to_skyline_mask(&pred, opts.clamp_empty_columns))?;
    let gt_sk = skyline_from_mask(&to_skyline_mask(gt, opts.clamp_empty_columns))
        .map_err(|e| Error::Data(format!("ground truth: {e}")))?;
    Ok(ImageScore {
        accuracy,
        mean_abs_distance: pixel_distance(&pred_sk, &gt_sk)?,
    })
}

fn evaluate_entry(
    entry: &ManifestEntry,
    prepared: &Prepared,
    postproc: PostProcess,
    opts: &BenchOptions,
) -> Result<ImageScore> {
    let gt = load_mask(&entry.mask)?;
    let pred = match prepared {
        Prepared::Internal(detector) => {
            let img = load_gray_image(&entry.image)?;
            let path = detector.detect(&img)?;
            mask_from_skyline(&path.skyline, img.rows())?
        }
        Prepared::External(dir) => load_mask(external_mask_path(dir, &entry.id))?,
    };
    score_mask(&pred, &gt, postproc, opts)
}

fn external_mask_path(dir: &Path, id: &str) -> std::path::PathBuf {
    dir.join(format!("{id}.png"))
}

fn for_each_entry<T: Send>(
    manifest: &DatasetManifest,
    workers: usize,
    f: impl Fn(&ManifestEntry) -> T + Sync,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
        Ok(pool.install(|| manifest.entries.par_iter().map(&f).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(manifest.entries.iter().map(f).collect())
    }
}

/// Runs every pipeline over the manifest. Rows come back in pipeline order
/// and are independent of the worker count.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    pipelines: &[PipelineSpec],
    opts: &BenchOptions,
) -> Result<Vec<ReportRow>> {
    if manifest.is_empty() {
        return Err(Error::data("dataset contains no images"));
    }
    let mut rows = Vec::with_capacity(pipelines.len());
    for spec in pipelines {
        let prepared = prepare(spec)?;
        let results = for_each_entry(manifest, opts.workers, |entry| {
            evaluate_entry(entry, &prepared, spec.postproc, opts)
                .map_err(|e| format!("{}: {e}", entry.id))
        })?;
        let mut scores = Vec::with_capacity(results.len());
        let mut failed = 0;
        for r in results {
            match r {
                Ok(s) => scores.push(s),
                Err(msg) => {
                    failed += 1;
                    log_failure(&spec.name, &msg);
                }
            }
        }
        if scores.is_empty() {
            return Err(Error::data(format!(
                "pipeline `{}` produced no scorable image",
                spec.name
            )));
        }
        let summary = aggregate(&scores, opts.std_kind)?;
        rows.push(ReportRow {
            approach: spec.name.clone(),
            accuracy: summary.mean_accuracy,
            dist_mean: summary.distance_mean,
            dist_std: summary.distance_std,
            images: summary.n_images,
            failed,
        });
    }
    Ok(rows)
}

fn log_failure(pipeline: &str, msg: &str) {
    if cfg!(not(target_arch = "wasm32")) {
        eprintln!("warning: [{pipeline}] {msg}");
    }
}

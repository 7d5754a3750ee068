//! Segmentation scores and layer resolution arithmetic.
//!
//! Accuracy is the fraction of correctly labelled pixels, averaged per image
//! and then across images. The pixel distance is the mean absolute vertical
//! offset between detected and true horizon rows over all columns; across a
//! dataset it is summarized by its mean and standard deviation.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Skyline};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageScore {
    pub accuracy: f64,
    pub mean_abs_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetScore {
    pub mean_accuracy: f64,
    pub distance_mean: f64,
    pub distance_std: f64,
    pub n_images: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdKind {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1 (zero for a single image).
    Sample,
}

impl std::str::FromStr for StdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(StdKind::Population),
            "sample" => Ok(StdKind::Sample),
            other => Err(Error::config(format!(
                "unknown std kind `{other}` (expected population|sample)"
            ))),
        }
    }
}

pub fn pixel_accuracy(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    if (pred.rows(), pred.cols()) != (gt.rows(), gt.cols()) {
        return Err(Error::data(format!(
            "prediction is {}x{}, ground truth {}x{}",
            pred.rows(),
            pred.cols(),
            gt.rows(),
            gt.cols()
        )));
    }
    let correct = pred
        .labels()
        .iter()
        .zip(gt.labels())
        .filter(|(a, b)| a == b)
        .count();
    Ok(correct as f64 / pred.labels().len() as f64)
}

pub fn pixel_distance(pred: &Skyline, gt: &Skyline) -> Result<f64> {
    if pred.cols() != gt.cols() {
        return Err(Error::data(format!(
            "prediction has {} columns, ground truth {}",
            pred.cols(),
            gt.cols()
        )));
    }
    let total: usize = pred
        .rows_at()
        .iter()
        .zip(gt.rows_at())
        .map(|(a, b)| a.abs_diff(*b))
        .sum();
    Ok(total as f64 / pred.cols() as f64)
}

/// Unweighted mean of per-image accuracies.
pub fn mean_accuracy(scores: &[ImageScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::data("no image scores to average"));
    }
    Ok(mean(scores.iter().map(|s| s.accuracy)))
}

pub fn aggregate(scores: &[ImageScore], std_kind: StdKind) -> Result<DatasetScore> {
    let mean_accuracy = mean_accuracy(scores)?;
    let n = scores.len();
    let distance_mean = mean(scores.iter().map(|s| s.mean_abs_distance));
    let sq = sorted_sum(
        scores
            .iter()
            .map(|s| (s.mean_abs_distance - distance_mean).powi(2)),
    );
    let denom = match std_kind {
        StdKind::Population => n,
        StdKind::Sample => n - 1,
    };
    let distance_std = if denom == 0 {
        0.0
    } else {
        (sq / denom as f64).sqrt()
    };
    Ok(DatasetScore {
        mean_accuracy,
        distance_mean,
        distance_std,
        n_images: n,
    })
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    sorted_sum(values) / n as f64
}

/// Sums in ascending order so the result does not depend on input order.
fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Convolution / pooling / deconvolution layer geometry along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_res: usize,
    pub filter: usize,
    pub pad: usize,
    pub stride: usize,
}

impl LayerSpec {
    fn validate(&self) -> Result<()> {
        if self.in_res == 0 || self.filter == 0 || self.stride == 0 {
            return Err(Error::config(
                "input resolution, filter and stride must be positive",
            ));
        }
        Ok(())
    }
}

/// `(in - filter + 2 pad) / stride + 1`; the division must be exact.
pub fn conv_out_resolution(spec: &LayerSpec) -> Result<usize> {
    spec.validate()?;
    let span = (spec.in_res + 2 * spec.pad)
        .checked_sub(spec.filter)
        .ok_or_else(|| {
            Error::config(format!(
                "filter {} exceeds padded input {}",
                spec.filter,
                spec.in_res + 2 * spec.pad
            ))
        })?;
    if span % spec.stride != 0 {
        return Err(Error::config(format!(
            "stride {} does not divide {span}",
            spec.stride
        )));
    }
    Ok(span / spec.stride + 1)
}

/// `stride * (in - 1) + filter - 2 pad`; must be positive.
pub fn deconv_out_resolution(spec: &LayerSpec) -> Result<usize> {
    spec.validate()?;
    let full = spec.stride * (spec.in_res - 1) + spec.filter;
    match full.checked_sub(2 * spec.pad) {
        Some(out) if out > 0 => Ok(out),
        _ => Err(Error::config(format!(
            "padding {} leaves no output for a deconvolution of size {full}",
            spec.pad
        ))),
    }
}

//! Patch classifier producing dense per-pixel probability maps.
//!
//! Features are 16x16 intensity windows normalized to zero mean and unit
//! standard deviation. A logistic-regression model trained by full-batch
//! gradient descent maps each window to a probability: in
//! [`Mode::Boundary`] the probability that the centre pixel lies on the
//! horizon, in [`Mode::Region`] the probability that it is sky.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{gradient_field, GrayImage, Skyline};

pub const PATCH_SIZE: usize = 16;
pub const PATCH_LEN: usize = PATCH_SIZE * PATCH_SIZE;
/// Offset from the window's top-left corner to its centre pixel.
pub const PATCH_CENTER: usize = 7;

/// Minimum number of eligible pixels per class for sampling to proceed.
const MIN_ELIGIBLE: usize = 10;

const ZERO_VARIANCE: f64 = 1e-12;

pub type Patch = [f64; PATCH_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Positive class: pixels on the horizon.
    Boundary,
    /// Positive class: sky pixels.
    Region,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Boundary => "boundary",
            Mode::Region => "region",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary" => Ok(Mode::Boundary),
            "region" => Ok(Mode::Region),
            other => Err(Error::config(format!(
                "unknown classifier mode `{other}` (expected boundary|region)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleLabel {
    Positive,
    Negative,
}

impl SampleLabel {
    fn target(self) -> f64 {
        match self {
            SampleLabel::Positive => 1.0,
            SampleLabel::Negative => 0.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SampleLabel::Positive => SampleLabel::Negative,
            SampleLabel::Negative => SampleLabel::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSample {
    pub features: Vec<f64>,
    pub label: SampleLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Minimum vertical distance (exclusive) between a negative and the horizon.
    pub negative_margin: usize,
    /// Gradient magnitude a pixel needs to count as an edge location.
    pub edge_threshold: f64,
    /// Positive keypoints are taken at every `column_stride`-th column.
    pub column_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.02,
            epochs: 300,
            seed: 0,
            negative_margin: 8,
            edge_threshold: 0.1,
            column_stride: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.negative_margin == 0 {
            return Err(Error::config("negative margin must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.edge_threshold) {
            return Err(Error::config("edge threshold must lie in [0, 1]"));
        }
        if self.column_stride == 0 {
            return Err(Error::config("column stride must be at least 1"));
        }
        Ok(())
    }
}

/// Copies the 16x16 window with top-left corner `(row - 7, col - 7)` into
/// `out`, replicate-padding at the borders, and normalizes it to zero mean and
/// unit standard deviation. A constant window becomes all zeros.
pub fn extract_patch_into(img: &GrayImage, row: usize, col: usize, out: &mut Patch) {
    let top = row as isize - PATCH_CENTER as isize;
    let left = col as isize - PATCH_CENTER as isize;
    for dr in 0..PATCH_SIZE {
        for dc in 0..PATCH_SIZE {
            out[dr * PATCH_SIZE + dc] = img.get_clamped(top + dr as isize, left + dc as isize);
        }
    }
    let n = PATCH_LEN as f64;
    let mean = out.iter().sum::<f64>() / n;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= ZERO_VARIANCE {
        out.fill(0.0);
    } else {
        out.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
}

pub fn extract_patch(img: &GrayImage, row: usize, col: usize) -> Vec<f64> {
    let mut patch = [0.0; PATCH_LEN];
    extract_patch_into(img, row, col, &mut patch);
    patch.to_vec()
}

/// Draws a balanced, seeded set of training patches from one image.
///
/// Boundary mode takes positives on the ground-truth skyline at every
/// `column_stride`-th column and the same number of negatives from edge
/// pixels farther than `negative_margin` rows from the skyline. Region mode
/// takes that many sky pixels (positive) and non-sky pixels (negative), each
/// farther than `negative_margin` rows from the skyline.
pub fn sample_keypoints(
    img: &GrayImage,
    gt: &Skyline,
    cfg: &TrainConfig,
    mode: Mode,
) -> Result<Vec<PatchSample>> {
    cfg.validate()?;
    if gt.cols() != img.cols() {
        return Err(Error::data(format!(
            "skyline has {} columns, image has {}",
            gt.cols(),
            img.cols()
        )));
    }
    if let Some(&r) = gt.rows_at().iter().find(|&&r| r >= img.rows()) {
        return Err(Error::data(format!(
            "skyline row {r} outside an image of {} rows",
            img.rows()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let horizon = gt.rows_at();
    let margin = cfg.negative_margin;
    let stride_cols: Vec<usize> = (0..img.cols()).step_by(cfg.column_stride).collect();
    let per_class = stride_cols.len();

    let (positives, negatives) = match mode {
        Mode::Boundary => {
            let grad = gradient_field(img)?;
            let positives: Vec<(usize, usize)> =
                stride_cols.iter().map(|&c| (horizon[c], c)).collect();
            let eligible = eligible_pixels(img, |r, c| {
                grad.magnitude_at(r, c) >= cfg.edge_threshold && horizon[c].abs_diff(r) > margin
            });
            check_eligible(&eligible, "edge negatives")?;
            let negatives = draw(&mut rng, &eligible, per_class);
            (positives, negatives)
        }
        Mode::Region => {
            let sky = eligible_pixels(img, |r, c| r + margin < horizon[c]);
            let ground = eligible_pixels(img, |r, c| r > horizon[c] + margin);
            check_eligible(&sky, "sky samples")?;
            check_eligible(&ground, "non-sky samples")?;
            let positives = draw(&mut rng, &sky, per_class);
            let negatives = draw(&mut rng, &ground, per_class);
            (positives, negatives)
        }
    };

    let patch = |&(r, c): &(usize, usize), label| PatchSample {
        features: extract_patch(img, r, c),
        label,
    };
    Ok(positives
        .iter()
        .map(|p| patch(p, SampleLabel::Positive))
        .chain(negatives.iter().map(|p| patch(p, SampleLabel::Negative)))
        .collect())
}

fn eligible_pixels(img: &GrayImage, keep: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    (0..img.rows())
        .flat_map(|r| (0..img.cols()).map(move |c| (r, c)))
        .filter(|&(r, c)| keep(r, c))
        .collect()
}

fn check_eligible(pixels: &[(usize, usize)], what: &str) -> Result<()> {
    if pixels.len() < MIN_ELIGIBLE {
        return Err(Error::data(format!(
            "degenerate image: only {} eligible {what} (need {MIN_ELIGIBLE})",
            pixels.len()
        )));
    }
    Ok(())
}

/// Uniform draw of `n` pixels; without replacement when enough are available.
fn draw(rng: &mut ChaCha8Rng, pool: &[(usize, usize)], n: usize) -> Vec<(usize, usize)> {
    if pool.len() >= n {
        index::sample(rng, pool.len(), n)
            .into_iter()
            .map(|i| pool[i])
            .collect()
    } else {
        (0..n)
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub mode: Mode,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ClassifierModel {
    pub fn new(mode: Mode, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != PATCH_LEN {
            return Err(Error::data(format!(
                "model needs {PATCH_LEN} weights, got {}",
                weights.len()
            )));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::data("model parameters must be finite"));
        }
        Ok(Self {
            mode,
            weights,
            bias,
        })
    }

    pub fn logit(&self, features: &[f64]) -> f64 {
        dot(&self.weights, features) + self.bias
    }

    pub fn probability(&self, features: &[f64]) -> f64 {
        sigmoid(self.logit(features))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("HBMODEL v1\n{}\n{:.16e}\n", self.mode.as_str(), self.bias);
        for w in &self.weights {
            let _ = writeln!(out, "{w:.16e}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Parse {
            path: path.into(),
            line,
            message,
        })
    }

    fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| (0, format!("unexpected end of file, expected {what}")))
        };
        let (n, magic) = next("header")?;
        if magic != "HBMODEL v1" {
            return Err((n, format!("expected `HBMODEL v1`, found `{magic}`")));
        }
        let (n, mode) = next("mode")?;
        let mode: Mode = mode.parse().map_err(|e: Error| (n, e.to_string()))?;
        let number = |(n, s): (usize, &str)| {
            s.parse::<f64>()
                .map_err(|e| (n, format!("bad number `{s}`: {e}")))
        };
        let bias = number(next("bias")?)?;
        let weights = (0..PATCH_LEN)
            .map(|_| number(next("weight")?))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some((n, extra)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err((n, format!("trailing content `{extra}`")));
        }
        Self::new(mode, weights, bias).map_err(|e| (1, e.to_string()))
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean logistic loss of `(weights, bias)` over `samples`.
pub fn mean_log_loss(samples: &[PatchSample], weights: &[f64], bias: f64) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|s| {
            let z = dot(weights, &s.features) + bias;
            softplus(z) - s.label.target() * z
        })
        .sum();
    total / samples.len() as f64
}

/// Analytic gradient of [`mean_log_loss`]: `(d/dweights, d/dbias)`.
pub fn log_loss_gradient(samples: &[PatchSample], weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for s in samples {
        let err = sigmoid(dot(weights, &s.features) + bias) - s.label.target();
        for (g, x) in gw.iter_mut().zip(&s.features) {
            *g += err * x;
        }
        gb += err;
    }
    let n = samples.len() as f64;
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

/// Fits a model of the same mode as the samples were drawn for.
pub fn train(samples: &[PatchSample], cfg: &TrainConfig, mode: Mode) -> Result<ClassifierModel> {
    train_with_losses(samples, cfg, mode).map(|(model, _)| model)
}

/// Like [`train`], additionally returning the mean loss before each epoch and
/// after the last one (`epochs + 1` values).
pub fn train_with_losses(
    samples: &[PatchSample],
    cfg: &TrainConfig,
    mode: Mode,
) -> Result<(ClassifierModel, Vec<f64>)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::data("no training samples"));
    }
    if let Some(s) = samples.iter().find(|s| s.features.len() != PATCH_LEN) {
        return Err(Error::data(format!(
            "sample has {} features, expected {PATCH_LEN}",
            s.features.len()
        )));
    }
    let has = |l| samples.iter().any(|s| s.label == l);
    if !has(SampleLabel::Positive) || !has(SampleLabel::Negative) {
        return Err(Error::data("training samples contain a single class"));
    }

    let mut weights = vec![0.0; PATCH_LEN];
    let mut bias = 0.0;
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        losses.push(mean_log_loss(samples, &weights, bias));
        let (gw, gb) = log_loss_gradient(samples, &weights, bias);
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        bias -= cfg.learning_rate * gb;
    }
    losses.push(mean_log_loss(samples, &weights, bias));
    let model = ClassifierModel::new(mode, weights, bias)
        .map_err(|_| Error::data("training diverged to non-finite parameters"))?;
    Ok((model, losses))
}

/// Per-pixel probabilities in `[0, 1]`, same shape as the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
}

impl ScoreMap {
    pub fn new(rows: usize, cols: usize, scores: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || scores.len() != rows * cols {
            return Err(Error::data(format!(
                "score map of {rows}x{cols} cannot hold {} scores",
                scores.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::data(format!("score {s} outside [0, 1]")));
        }
        Ok(Self { rows, cols, scores })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let scores = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(rows, cols, scores)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.cols + col]
    }

    /// `HBSCORE v1 <rows> <cols>\n` followed by little-endian f32 scores.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("HBSCORE v1 {} {}\n", self.rows, self.cols).into_bytes();
        out.reserve(self.scores.len() * 4);
        for &s in &self.scores {
            out.extend_from_slice(&(s as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::data("score map header is not terminated"))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| Error::data("score map header is not ASCII"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        let (rows, cols) = match fields.as_slice() {
            ["HBSCORE", "v1", rows, cols] => (
                rows.parse::<usize>()
                    .map_err(|_| Error::data(format!("bad row count `{rows}`")))?,
                cols.parse::<usize>()
                    .map_err(|_| Error::data(format!("bad column count `{cols}`")))?,
            ),
            _ => return Err(Error::data(format!("bad score map header `{header}`"))),
        };
        let body = &bytes[newline + 1..];
        if body.len() != rows * cols * 4 {
            return Err(Error::data(format!(
                "score map body has {} bytes, expected {}",
                body.len(),
                rows * cols * 4
            )));
        }
        let scores = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        Self::new(rows, cols, scores)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

/// Scores every pixel: `sigmoid(w . extract_patch(img, r, c) + b)`.
pub fn dense_score_map(img: &GrayImage, model: &ClassifierModel) -> ScoreMap {
    let (rows, cols) = (img.rows(), img.cols());
    let mut scores = vec![0.0; rows * cols];
    let score_row = |r: usize, out: &mut [f64]| {
        let mut patch = [0.0; PATCH_LEN];
        for (c, s) in out.iter_mut().enumerate() {
            extract_patch_into(img, r, c, &mut patch);
            *s = model.probability(&patch);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scores
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(r, out)| score_row(r, out));
    }
    #[cfg(not(feature = "parallel"))]
    scores
        .chunks_mut(cols)
        .enumerate()
        .for_each(|(r, out)| score_row(r, out));
    ScoreMap { rows, cols, scores }
}

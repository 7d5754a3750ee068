//! Grayscale images, sky/non-sky masks and skylines.
//!
//! All grids are stored row-major. A [`Skyline`] holds, for every column, the
//! row of the topmost non-sky pixel; [`mask_from_skyline`] and
//! [`skyline_from_mask`] convert between the two representations.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// Rec.601 luma weights used for RGB input.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Luminance image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::data("image must have at least one row and column"));
        }
        if pixels.len() != rows * cols {
            return Err(Error::data(format!(
                "expected {} pixels for a {rows}x{cols} image, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::data(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { rows, cols, pixels })
    }

    /// Builds an image by evaluating `f(row, col)`; values are clamped to `[0, 1]`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c).clamp(0.0, 1.0));
            }
        }
        Self { rows, cols, pixels }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    /// Pixel lookup with replicate padding outside the image.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.rows as isize - 1) as usize;
        let c = col.clamp(0, self.cols as isize - 1) as usize;
        self.pixels[r * self.cols + c]
    }

    /// Quantizes to 8 bits (round half away from zero).
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect()
    }
}

/// Reads an 8-bit grayscale or RGB PNG, or a binary PGM.
pub fn load_gray_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let img = open_image(path)?;
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    if rows == 0 || cols == 0 {
        return Err(Error::Decode {
            path: path.into(),
            message: "zero-sized image".into(),
        });
    }
    let pixels: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                let luma = LUMA_WEIGHTS[0] * r as f64
                    + LUMA_WEIGHTS[1] * g as f64
                    + LUMA_WEIGHTS[2] * b as f64;
                (luma / 255.0).clamp(0.0, 1.0)
            })
            .collect(),
        other => {
            return Err(Error::Decode {
                path: path.into(),
                message: format!(
                    "unsupported pixel format {:?}; expected 8-bit gray or RGB",
                    other.color()
                ),
            })
        }
    };
    GrayImage::new(rows, cols, pixels)
}

/// Writes an image as an 8-bit grayscale PNG.
pub fn save_gray_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_luma8(path.as_ref(), img.cols, img.rows, img.to_u8())
}

/// Per-pixel class of a sky segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Sky,
    NonSky,
}

impl Label {
    pub fn flipped(self) -> Self {
        match self {
            Label::Sky => Label::NonSky,
            Label::NonSky => Label::Sky,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    labels: Vec<Label>,
}

impl BinaryMask {
    pub fn new(rows: usize, cols: usize, labels: Vec<Label>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::data("mask must have at least one row and column"));
        }
        if labels.len() != rows * cols {
            return Err(Error::data(format!(
                "expected {} labels for a {rows}x{cols} mask, got {}",
                rows * cols,
                labels.len()
            )));
        }
        Ok(Self { rows, cols, labels })
    }

    pub fn filled(rows: usize, cols: usize, label: Label) -> Self {
        assert!(rows > 0 && cols > 0, "mask dimensions must be positive");
        Self {
            rows,
            cols,
            labels: vec![label; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Label) -> Self {
        assert!(rows > 0 && cols > 0, "mask dimensions must be positive");
        let mut labels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                labels.push(f(r, c));
            }
        }
        Self { rows, cols, labels }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Label {
        self.labels[row * self.cols + col]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
        }
    }

    /// True when no SKY pixel lies below a NONSKY pixel in any column.
    pub fn is_column_monotone(&self) -> bool {
        (0..self.cols).all(|c| {
            let mut seen_ground = false;
            (0..self.rows).all(|r| match self.get(r, c) {
                Label::NonSky => {
                    seen_ground = true;
                    true
                }
                Label::Sky => !seen_ground,
            })
        })
    }

    pub(crate) fn into_labels(self) -> Vec<Label> {
        self.labels
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, labels: Vec<Label>) -> Self {
        debug_assert_eq!(labels.len(), rows * cols);
        Self { rows, cols, labels }
    }
}

/// One horizon row per image column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skyline {
    rows_at: Vec<usize>,
}

impl Skyline {
    pub fn new(rows_at: Vec<usize>) -> Result<Self> {
        if rows_at.is_empty() {
            return Err(Error::data("skyline must cover at least one column"));
        }
        Ok(Self { rows_at })
    }

    pub fn cols(&self) -> usize {
        self.rows_at.len()
    }

    pub fn rows_at(&self) -> &[usize] {
        &self.rows_at
    }

    fn check_bounds(&self, rows: usize) -> Result<()> {
        match self.rows_at.iter().position(|&r| r >= rows) {
            Some(col) => Err(Error::data(format!(
                "skyline row {} at column {col} is outside an image of {rows} rows",
                self.rows_at[col]
            ))),
            None => Ok(()),
        }
    }
}

pub fn mask_from_skyline(sk: &Skyline, rows: usize) -> Result<BinaryMask> {
    sk.check_bounds(rows)?;
    Ok(BinaryMask::from_fn(rows, sk.cols(), |r, c| {
        if r < sk.rows_at[c] {
            Label::Sky
        } else {
            Label::NonSky
        }
    }))
}

/// Topmost NONSKY row of every column. Fails on a column that is all SKY.
pub fn skyline_from_mask(m: &BinaryMask) -> Result<Skyline> {
    let rows_at = (0..m.cols)
        .map(|c| {
            (0..m.rows)
                .find(|&r| m.get(r, c) == Label::NonSky)
                .ok_or_else(|| Error::data(format!("column {c} has no non-sky pixel")))
        })
        .collect::<Result<Vec<_>>>()?;
    Skyline::new(rows_at)
}

/// Marks the bottom pixel of every all-SKY column as NONSKY so the mask
/// always admits a skyline.
pub fn clamp_empty_columns(m: &BinaryMask) -> BinaryMask {
    let mut out = m.clone();
    let bottom = m.rows - 1;
    for c in 0..m.cols {
        if (0..m.rows).all(|r| m.get(r, c) == Label::Sky) {
            out.labels[bottom * m.cols + c] = Label::NonSky;
        }
    }
    out
}

pub fn save_mask(m: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes = m
        .labels
        .iter()
        .map(|l| match l {
            Label::Sky => 0u8,
            Label::NonSky => 255u8,
        })
        .collect();
    write_luma8(path.as_ref(), m.cols, m.rows, bytes)
}

/// Reads an 8-bit grayscale PNG whose pixels are exactly 0 (sky) or 255 (non-sky).
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = match open_image(path)? {
        DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(Error::Decode {
                path: path.into(),
                message: format!("mask must be 8-bit grayscale, found {:?}", other.color()),
            })
        }
    };
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    let labels = img
        .into_raw()
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            0 => Ok(Label::Sky),
            255 => Ok(Label::NonSky),
            _ => Err(Error::Data(format!(
                "{}: mask value {v} at row {}, column {} is neither 0 nor 255",
                path.display(),
                i / cols,
                i % cols
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    BinaryMask::new(rows, cols, labels)
}

pub fn skyline_to_csv(sk: &Skyline) -> String {
    let mut out = String::from("column,row\n");
    for (c, r) in sk.rows_at.iter().enumerate() {
        let _ = writeln!(out, "{c},{r}");
    }
    out
}

pub fn save_skyline(sk: &Skyline, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, skyline_to_csv(sk)).map_err(|e| Error::io(path, e))
}

pub fn load_skyline(path: impl AsRef<Path>) -> Result<Skyline> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "column,row")) => {}
        _ => return Err(parse_err(1, "expected header `column,row`".into())),
    }
    let mut rows_at = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (col, row) = line
            .split_once(',')
            .ok_or_else(|| parse_err(i + 1, "expected `column,row`".into()))?;
        let col: usize = col
            .trim()
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad column: {e}")))?;
        let row: usize = row
            .trim()
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad row: {e}")))?;
        if col != rows_at.len() {
            return Err(parse_err(
                i + 1,
                format!("expected column {}, found {col}", rows_at.len()),
            ));
        }
        rows_at.push(row);
    }
    Skyline::new(rows_at).map_err(|e| parse_err(1, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    rows: usize,
    cols: usize,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
}

impl GradientField {
    pub fn new(
        rows: usize,
        cols: usize,
        magnitude: Vec<f64>,
        orientation: Vec<f64>,
    ) -> Result<Self> {
        if magnitude.len() != rows * cols || orientation.len() != rows * cols {
            return Err(Error::data("gradient arrays do not match the grid size"));
        }
        if magnitude.iter().any(|m| m.is_nan() || *m < 0.0) {
            return Err(Error::data("gradient magnitudes must be non-negative"));
        }
        Ok(Self {
            rows,
            cols,
            magnitude,
            orientation,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn orientation(&self) -> &[f64] {
        &self.orientation
    }

    #[inline]
    pub fn magnitude_at(&self, row: usize, col: usize) -> f64 {
        self.magnitude[row * self.cols + col]
    }

    #[inline]
    pub fn orientation_at(&self, row: usize, col: usize) -> f64 {
        self.orientation[row * self.cols + col]
    }
}

/// Sobel gradients with replicate padding. The kernels are scaled by 1/4 so
/// that a unit step between two rows (or columns) has magnitude 1 on both
/// sides of the step. Rows grow downward, so a dark-below-bright edge has
/// orientation -pi/2 and a bright-below-dark edge pi/2.
pub fn gradient_field(img: &GrayImage) -> Result<GradientField> {
    if img.rows < 3 || img.cols < 3 {
        return Err(Error::data(format!(
            "gradient needs at least 3x3 pixels, image is {}x{}",
            img.rows, img.cols
        )));
    }
    let n = img.rows * img.cols;
    let mut magnitude = Vec::with_capacity(n);
    let mut orientation = Vec::with_capacity(n);
    for r in 0..img.rows as isize {
        for c in 0..img.cols as isize {
            let p = |dr: isize, dc: isize| img.get_clamped(r + dr, c + dc);
            let gx =
                ((p(-1, 1) - p(-1, -1)) + 2.0 * (p(0, 1) - p(0, -1)) + (p(1, 1) - p(1, -1))) / 4.0;
            let gy =
                ((p(1, -1) - p(-1, -1)) + 2.0 * (p(1, 0) - p(-1, 0)) + (p(1, 1) - p(-1, 1))) / 4.0;
            magnitude.push(gx.hypot(gy));
            orientation.push(half_open_angle(gy.atan2(gx)));
        }
    }
    Ok(GradientField {
        rows: img.rows,
        cols: img.cols,
        magnitude,
        orientation,
    })
}

/// Maps an `atan2` result into `(-pi, pi]`.
fn half_open_angle(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| Error::Decode {
        path: path.into(),
        message: e.to_string(),
    })
}

fn write_luma8(path: &Path, cols: usize, rows: usize, bytes: Vec<u8>) -> Result<()> {
    let buf = image::GrayImage::from_raw(cols as u32, rows as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Encode {
                path: path.into(),
                message: other.to_string(),
            },
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{NonSky as N, Sky as S};

    fn column_major(cols: &[&[Label]]) -> BinaryMask {
        let rows = cols[0].len();
        BinaryMask::from_fn(rows, cols.len(), |r, c| cols[c][r])
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.5]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn mask_from_skyline_examples() {
        let all = mask_from_skyline(&Skyline::new(vec![0, 0]).unwrap(), 2).unwrap();
        assert_eq!(all, BinaryMask::filled(2, 2, N));

        let one = mask_from_skyline(&Skyline::new(vec![1]).unwrap(), 2).unwrap();
        assert_eq!(one.labels(), &[S, N]);

        let three = mask_from_skyline(&Skyline::new(vec![2, 0, 1]).unwrap(), 3).unwrap();
        assert_eq!(three, column_major(&[&[S, S, N], &[N, N, N], &[S, N, N]]));
    }

    #[test]
    fn mask_from_skyline_rejects_out_of_bounds() {
        let sk = Skyline::new(vec![0, 3]).unwrap();
        assert!(mask_from_skyline(&sk, 3).is_err());
    }

    #[test]
    fn skyline_from_mask_examples() {
        let sk = skyline_from_mask(&BinaryMask::filled(2, 2, N)).unwrap();
        assert_eq!(sk.rows_at(), &[0, 0]);

        let m = column_major(&[&[S, N], &[N, S]]);
        assert_eq!(skyline_from_mask(&m).unwrap().rows_at(), &[1, 0]);

        let empty = column_major(&[&[S, N], &[S, S]]);
        assert!(skyline_from_mask(&empty).is_err());
        let clamped = clamp_empty_columns(&empty);
        assert_eq!(skyline_from_mask(&clamped).unwrap().rows_at(), &[1, 1]);
    }

    #[test]
    fn column_monotone_detection() {
        assert!(column_major(&[&[S, N, N], &[N, N, N]]).is_column_monotone());
        assert!(!column_major(&[&[S, N, S]]).is_column_monotone());
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let img = GrayImage::from_fn(5, 6, |_, _| 0.42);
        let g = gradient_field(&img).unwrap();
        assert!(g.magnitude().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn horizontal_step_gradient() {
        // Rows 0..4 dark, rows 4..8 bright. The step lies between rows 3 and 4.
        let img = GrayImage::from_fn(8, 8, |r, _| if r < 4 { 0.0 } else { 1.0 });
        let g = gradient_field(&img).unwrap();
        for r in [3, 4] {
            for c in 1..7 {
                assert!((g.magnitude_at(r, c) - 1.0).abs() < 1e-12);
                assert!((g.orientation_at(r, c) - PI / 2.0).abs() < 1e-12);
            }
        }
        assert_eq!(g.magnitude_at(1, 3), 0.0);
        assert_eq!(g.magnitude_at(6, 3), 0.0);
    }

    #[test]
    fn vertical_step_gradient() {
        let img = GrayImage::from_fn(8, 8, |_, c| if c < 4 { 0.0 } else { 1.0 });
        let g = gradient_field(&img).unwrap();
        for r in 1..7 {
            for c in [3, 4] {
                assert!((g.magnitude_at(r, c) - 1.0).abs() < 1e-12);
                assert_eq!(g.orientation_at(r, c), 0.0);
            }
        }
    }

    #[test]
    fn orientation_is_half_open() {
        // Bright on the left gives gx < 0, gy == 0: atan2 yields +pi, never -pi.
        let img = GrayImage::from_fn(4, 4, |_, c| if c < 2 { 1.0 } else { 0.0 });
        let g = gradient_field(&img).unwrap();
        for &o in g.orientation() {
            assert!(o > -PI && o <= PI);
        }
        assert_eq!(g.orientation_at(1, 1), PI);
    }

    #[test]
    fn gradient_rejects_tiny_images() {
        let img = GrayImage::from_fn(2, 5, |_, _| 0.0);
        assert!(gradient_field(&img).is_err());
    }

    #[test]
    fn skyline_csv_format() {
        let sk = Skyline::new(vec![3, 1]).unwrap();
        assert_eq!(skyline_to_csv(&sk), "column,row\n0,3\n1,1\n");
    }

    fn monotone_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..10, 1usize..10).prop_flat_map(|(rows, cols)| {
            proptest::collection::vec(0..rows, cols).prop_map(move |rows_at| {
                mask_from_skyline(&Skyline::new(rows_at).unwrap(), rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn skyline_round_trip(rows in 1usize..12, rows_at in proptest::collection::vec(0usize..64, 1..12)) {
            let rows_at: Vec<usize> = rows_at.into_iter().map(|r| r % rows).collect();
            let sk = Skyline::new(rows_at).unwrap();
            let m = mask_from_skyline(&sk, rows).unwrap();
            prop_assert!(m.is_column_monotone());
            prop_assert_eq!(skyline_from_mask(&m).unwrap(), sk);
        }

        #[test]
        fn monotone_mask_round_trip(m in monotone_mask()) {
            let sk = skyline_from_mask(&m).unwrap();
            prop_assert_eq!(mask_from_skyline(&sk, m.rows()).unwrap(), m);
        }
    }
}

//! Synthetic mountain scenes with exact ground truth.
//!
//! A ridge profile from 1-D midpoint displacement splits each image into a
//! sky region (smooth vertical luminance gradient) and a textured ground
//! region. Gaussian noise is added on top and the result is quantized to 8
//! bits, so an in-memory scene equals its PNG on disk.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bench::dataset::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::raster::{
    mask_from_skyline, save_gray_image, save_mask, save_skyline, BinaryMask, GrayImage, Label,
    Skyline,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub seed: u64,
    /// Index of the first generated scene; scenes depend only on `(seed, index)`.
    pub start_index: usize,
    pub width: usize,
    pub height: usize,
    /// Amplitude ratio between successive midpoint-displacement levels, in (0, 1].
    pub ridge_roughness: f64,
    pub noise_sigma: f64,
    pub sky_base: f64,
    pub ground_base: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 70,
            seed: 7,
            start_index: 0,
            width: 256,
            height: 192,
            ridge_roughness: 0.6,
            noise_sigma: 0.05,
            sky_base: 0.8,
            ground_base: 0.35,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 32 || self.height < 32 {
            return Err(Error::config("synthetic images must be at least 32x32"));
        }
        if !(self.ridge_roughness > 0.0 && self.ridge_roughness <= 1.0) {
            return Err(Error::config("ridge roughness must lie in (0, 1]"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise sigma must be non-negative"));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.sky_base) || !unit.contains(&self.ground_base) {
            return Err(Error::config("base luminances must lie in [0, 1]"));
        }
        if self.sky_base - self.ground_base < 0.2 {
            return Err(Error::config(
                "sky luminance must exceed ground luminance by at least 0.2",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub image: GrayImage,
    pub skyline: Skyline,
    pub mask: BinaryMask,
}

/// Brightening of the sky from zenith to horizon.
const SKY_GRADIENT: f64 = 0.15;
/// Peak amplitude of the ground texture around `ground_base`.
const GROUND_TEXTURE: f64 = 0.15;
/// Lattice spacing of the ground texture in pixels.
const TEXTURE_CELL: usize = 6;

pub fn scene_id(index: usize) -> String {
    format!("synth_{index:04}")
}

/// SplitMix64 finalizer over `(seed, index)`.
fn scene_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed
        ^ (index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Ridge heights (fractional rows) for every column.
fn ridge_profile(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let h = cfg.height as f64;
    let span = (cfg.width - 1).next_power_of_two();
    let mut amp = 0.25 * h * cfg.ridge_roughness;
    let base = 0.5 * h;
    let mut p = vec![0.0; span + 1];
    p[0] = base + amp * rng.random_range(-1.0..=1.0);
    p[span] = base + amp * rng.random_range(-1.0..=1.0);
    let mut step = span;
    while step > 1 {
        amp *= cfg.ridge_roughness;
        let half = step / 2;
        for mid in (half..span).step_by(step) {
            p[mid] = 0.5 * (p[mid - half] + p[mid + half]) + amp * rng.random_range(-1.0..=1.0);
        }
        step = half;
    }
    p.truncate(cfg.width);
    let (lo, hi) = (0.25 * h, 0.8 * h);
    p.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    p
}

/// Bilinear value noise on a coarse lattice, in `[-1, 1]`.
fn value_noise(rows: usize, cols: usize, cell: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lr, lc) = (rows / cell + 2, cols / cell + 2);
    let lattice: Vec<f64> = (0..lr * lc).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (gr, fr) = (r / cell, (r % cell) as f64 / cell as f64);
        for c in 0..cols {
            let (gc, fc) = (c / cell, (c % cell) as f64 / cell as f64);
            let at = |i: usize, j: usize| lattice[i * lc + j];
            let top = at(gr, gc) * (1.0 - fc) + at(gr, gc + 1) * fc;
            let bottom = at(gr + 1, gc) * (1.0 - fc) + at(gr + 1, gc + 1) * fc;
            out.push(top * (1.0 - fr) + bottom * fr);
        }
    }
    out
}

/// Renders scene `index`. Depends only on `(cfg, index)`, not on `cfg.count`
/// or `cfg.start_index`.
pub fn generate_scene(cfg: &SynthConfig, index: usize) -> Result<SynthScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scene_seed(cfg.seed, index));
    let (rows, cols) = (cfg.height, cfg.width);
    let profile = ridge_profile(cfg, &mut rng);
    let rows_at: Vec<usize> = profile.iter().map(|v| v.round() as usize).collect();
    let texture = value_noise(rows, cols, TEXTURE_CELL, &mut rng);
    let speckle: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0))
        .map_err(|e| Error::config(format!("noise sigma: {e}")))?;
    let image = GrayImage::from_fn(rows, cols, |r, c| {
        let i = r * cols + c;
        let clean = if r < rows_at[c] {
            cfg.sky_base - SKY_GRADIENT * (1.0 - r as f64 / rows_at[c] as f64)
        } else {
            cfg.ground_base + GROUND_TEXTURE * (0.7 * texture[i] + 0.3 * speckle[i])
        };
        let noisy = if cfg.noise_sigma > 0.0 {
            clean + noise.sample(&mut rng)
        } else {
            clean
        };
        (noisy.clamp(0.0, 1.0) * 255.0).round() / 255.0
    });
    let skyline = Skyline::new(rows_at)?;
    let mask = mask_from_skyline(&skyline, rows)?;
    Ok(SynthScene {
        image,
        skyline,
        mask,
    })
}

/// Writes `images/`, `masks/` and `skylines/` under `out` and returns the
/// manifest of the generated scenes.
pub fn synth_generate(cfg: &SynthConfig, out: impl AsRef<Path>) -> Result<DatasetManifest> {
    cfg.validate()?;
    let out = out.as_ref();
    let dirs: Vec<PathBuf> = ["images", "masks", "skylines"]
        .iter()
        .map(|d| out.join(d))
        .collect();
    for d in &dirs {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut entries = Vec::with_capacity(cfg.count);
    for index in cfg.start_index..cfg.start_index + cfg.count {
        let scene = generate_scene(cfg, index)?;
        let id = scene_id(index);
        let image = dirs[0].join(format!("{id}.png"));
        let mask = dirs[1].join(format!("{id}.png"));
        save_gray_image(&scene.image, &image)?;
        save_mask(&scene.mask, &mask)?;
        save_skyline(&scene.skyline, dirs[2].join(format!("{id}.csv")))?;
        entries.push(ManifestEntry { id, image, mask });
    }
    Ok(DatasetManifest { entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionConfig {
    /// Sky rectangles punched into the ground, some touching the side or
    /// bottom border.
    pub holes: usize,
    /// Non-sky rectangles floating in the sky.
    pub blobs: usize,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            holes: 3,
            blobs: 3,
            seed: 0,
        }
    }
}

/// Damages a ground-truth mask the way pixel classifiers typically do: sky
/// holes inside the terrain and small floating non-sky blobs.
pub fn corrupt_mask(gt: &Skyline, rows: usize, cfg: &CorruptionConfig) -> Result<BinaryMask> {
    let clean = mask_from_skyline(gt, rows)?;
    let cols = gt.cols();
    let mut labels = clean.labels().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let horizon = gt.rows_at();
    let size = |rng: &mut ChaCha8Rng, limit: usize| rng.random_range(2..=limit.max(2));

    for k in 0..cfg.holes {
        let (h, w) = (size(&mut rng, rows / 10), size(&mut rng, cols / 10));
        // Every third hole touches the left (0), right (1) or bottom (2) border.
        let side = if k % 3 == 2 {
            rng.random_range(0..3)
        } else {
            3
        };
        let c0 = match side {
            0 => 0,
            1 => cols - w,
            _ => rng.random_range(1..cols - w),
        };
        let top = horizon[c0..c0 + w].iter().copied().max().unwrap_or(0) + 3;
        if top + h + 1 >= rows {
            continue;
        }
        let r0 = if side == 2 {
            rows - h
        } else {
            rng.random_range(top..rows - h)
        };
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                labels[r * cols + c] = Label::Sky;
            }
        }
    }

    for _ in 0..cfg.blobs {
        let (h, w) = (size(&mut rng, rows / 16), size(&mut rng, cols / 16));
        let c0 = rng.random_range(1..cols.saturating_sub(w + 1).max(2));
        let c1 = (c0 + w).min(cols);
        let shallowest = horizon[c0..c1].iter().copied().min().unwrap_or(0);
        if shallowest < h + 4 {
            continue;
        }
        let r0 = rng.random_range(1..shallowest - h - 2);
        for r in r0..r0 + h {
            for c in c0..c1 {
                labels[r * cols + c] = Label::NonSky;
            }
        }
    }
    BinaryMask::new(rows, cols, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_configs() {
        let ok = SynthConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SynthConfig {
                width: 31,
                ..ok.clone()
            },
            SynthConfig {
                ridge_roughness: 0.0,
                ..ok.clone()
            },
            SynthConfig {
                noise_sigma: -1.0,
                ..ok.clone()
            },
            SynthConfig {
                sky_base: 0.5,
                ground_base: 0.4,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn flat_noise_free_scene_is_a_clean_step() {
        let cfg = SynthConfig {
            ridge_roughness: 1e-9,
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let scene = generate_scene(&cfg, 3).unwrap();
        let row = scene.skyline.rows_at()[0];
        assert!(scene.skyline.rows_at().iter().all(|&r| r == row));
        assert_eq!(row, cfg.height / 2);
        // Brightest ground pixel is darker than the darkest sky pixel, so the
        // luminance step sits exactly on the skyline row.
        for c in 0..cfg.width {
            let sky_min = (0..row).map(|r| scene.image.get(r, c)).fold(1.0, f64::min);
            let ground_max = (row..cfg.height)
                .map(|r| scene.image.get(r, c))
                .fold(0.0, f64::max);
            assert!(sky_min > ground_max);
        }
    }

    #[test]
    fn scenes_depend_only_on_seed_and_index() {
        let cfg = SynthConfig::default();
        let a = generate_scene(&cfg, 5).unwrap();
        let b = generate_scene(
            &SynthConfig {
                count: 1,
                start_index: 5,
                ..cfg.clone()
            },
            5,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scene(&cfg, 6).unwrap());
    }

    #[test]
    fn generated_masks_are_column_monotone() {
        let cfg = SynthConfig {
            width: 64,
            height: 48,
            ..SynthConfig::default()
        };
        for index in 0..100 {
            let scene = generate_scene(&cfg, index).unwrap();
            assert!(scene.mask.is_column_monotone());
            assert!(scene
                .skyline
                .rows_at()
                .iter()
                .all(|&r| r > 0 && r < cfg.height));
        }
    }

    #[test]
    fn corruption_adds_holes_and_blobs() {
        let cfg = SynthConfig::default();
        let scene = generate_scene(&cfg, 0).unwrap();
        let bad = corrupt_mask(&scene.skyline, cfg.height, &CorruptionConfig::default()).unwrap();
        assert!(!bad.is_column_monotone());
        assert_ne!(bad, scene.mask);
        let none = CorruptionConfig {
            holes: 0,
            blobs: 0,
            seed: 1,
        };
        assert_eq!(
            corrupt_mask(&scene.skyline, cfg.height, &none).unwrap(),
            scene.mask
        );
    }
}

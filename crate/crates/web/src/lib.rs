//! Browser bindings for the horizon detector demo.
//!
//! The page trains both classifiers on a handful of synthetic scenes, then
//! lets the user extract skylines with either extractor, clean up corrupted
//! masks with the two post-processing methods, and evaluate the layer
//! resolution formulas. Errors cross the boundary as strings.

use horizon_core::bench::{
    corrupt_mask, generate_scene, train_on_images, CorruptionConfig, Detector, SynthConfig,
    SynthScene,
};
use horizon_core::classifier::{dense_score_map, ClassifierModel, Mode, ScoreMap, TrainConfig};
use horizon_core::extract::{DpConfig, Variant};
use horizon_core::metrics::{
    conv_out_resolution, deconv_out_resolution, pixel_accuracy, pixel_distance, LayerSpec,
};
use horizon_core::postprocess::{Connectivity, PostProcess};
use horizon_core::raster::{BinaryMask, GrayImage, Label};
use wasm_bindgen::prelude::*;

type WebResult<T> = Result<T, String>;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn scene_config(seed: u32, noise: f64, roughness: f64) -> SynthConfig {
    SynthConfig {
        count: 1,
        seed: seed.into(),
        noise_sigma: noise,
        ridge_roughness: roughness,
        ..SynthConfig::default()
    }
}

fn gray_rgba(img: &GrayImage) -> Vec<u8> {
    img.to_u8().iter().flat_map(|&v| [v, v, v, 255]).collect()
}

/// Scores as a dark-to-amber ramp.
fn score_rgba(map: &ScoreMap) -> Vec<u8> {
    map.scores()
        .iter()
        .flat_map(|&s| {
            let v = (s.clamp(0.0, 1.0) * 255.0).round() as u8;
            [v, (0.75 * v as f64) as u8, 32, 255]
        })
        .collect()
}

/// Sky as light blue, non-sky as dark brown.
fn mask_rgba(m: &BinaryMask) -> Vec<u8> {
    m.labels()
        .iter()
        .flat_map(|l| match l {
            Label::Sky => [150, 200, 245, 255],
            Label::NonSky => [70, 55, 40, 255],
        })
        .collect()
}

/// A synthetic scene with its ground truth.
#[wasm_bindgen]
pub struct Scene {
    inner: SynthScene,
}

#[wasm_bindgen]
impl Scene {
    /// Scene `index` of the synthetic set generated from `seed`.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, index: u32, noise: f64, roughness: f64) -> WebResult<Scene> {
        let cfg = scene_config(seed, noise, roughness);
        let inner = generate_scene(&cfg, index as usize).map_err(text)?;
        Ok(Scene { inner })
    }

    pub fn width(&self) -> u32 {
        self.inner.image.cols() as u32
    }

    pub fn height(&self) -> u32 {
        self.inner.image.rows() as u32
    }

    pub fn rgba(&self) -> Vec<u8> {
        gray_rgba(&self.inner.image)
    }

    /// Ground-truth horizon row per column.
    pub fn truth(&self) -> Vec<u32> {
        self.inner
            .skyline
            .rows_at()
            .iter()
            .map(|&r| r as u32)
            .collect()
    }
}

/// Boundary and region classifiers trained on synthetic scenes.
#[wasm_bindgen]
pub struct Detectors {
    boundary: ClassifierModel,
    region: ClassifierModel,
}

#[wasm_bindgen]
impl Detectors {
    /// Trains both models on scenes `0..scenes` of `seed`. Use a different
    /// seed for the scenes you test on.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, scenes: u32, epochs: u32) -> WebResult<Detectors> {
        let cfg = scene_config(seed, 0.05, 0.6);
        let data = (0..scenes as usize)
            .map(|i| generate_scene(&cfg, i))
            .collect::<Result<Vec<_>, _>>()
            .map_err(text)?;
        let train = TrainConfig {
            epochs: epochs as usize,
            seed: seed.into(),
            ..TrainConfig::default()
        };
        let fit = |mode| {
            train_on_images(data.iter().map(|s| (&s.image, &s.skyline)), mode, &train).map_err(text)
        };
        Ok(Detectors {
            boundary: fit(Mode::Boundary)?,
            region: fit(Mode::Region)?,
        })
    }

    /// Extracts the skyline of `scene` with the `dcsi` or `energy` variant.
    pub fn extract(
        &self,
        scene: &Scene,
        variant: &str,
        delta: u32,
        lambda: f64,
        mu: f64,
    ) -> WebResult<Extraction> {
        let variant: Variant = variant.parse().map_err(text)?;
        let model = match variant {
            Variant::Dcsi => &self.boundary,
            Variant::Energy => &self.region,
        };
        let dp = DpConfig {
            delta: delta as usize,
            jump_weight: lambda,
            edge_weight: if variant == Variant::Energy { mu } else { 0.0 },
            ..DpConfig::for_variant(variant)
        };
        let detector = Detector::new(model.clone(), dp).map_err(text)?;
        let img = &scene.inner.image;
        let path = detector.detect(img).map_err(text)?;
        let mask =
            horizon_core::raster::mask_from_skyline(&path.skyline, img.rows()).map_err(text)?;
        Ok(Extraction {
            skyline: path.skyline.rows_at().iter().map(|&r| r as u32).collect(),
            scores: score_rgba(&dense_score_map(img, model)),
            cost: path.total_cost,
            accuracy: pixel_accuracy(&mask, &scene.inner.mask).map_err(text)?,
            distance: pixel_distance(&path.skyline, &scene.inner.skyline).map_err(text)?,
        })
    }
}

#[wasm_bindgen]
pub struct Extraction {
    skyline: Vec<u32>,
    scores: Vec<u8>,
    cost: f64,
    accuracy: f64,
    distance: f64,
}

#[wasm_bindgen]
impl Extraction {
    pub fn skyline(&self) -> Vec<u32> {
        self.skyline.clone()
    }

    /// The classifier's score map that fed the extractor, as RGBA.
    pub fn scores_rgba(&self) -> Vec<u8> {
        self.scores.clone()
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// Mean absolute row distance to the ground truth.
    pub fn distance(&self) -> f64 {
        self.distance
    }
}

/// Corrupts the scene's ground-truth mask and cleans it with `method`
/// (`none`, `pp1` or `pp2`) under 4- or 8-connectivity.
#[wasm_bindgen]
pub fn cleanup(
    scene: &Scene,
    holes: u32,
    blobs: u32,
    seed: u32,
    method: &str,
    connectivity: u8,
) -> WebResult<Cleanup> {
    let method: PostProcess = method.parse().map_err(text)?;
    let connectivity: Connectivity = connectivity.to_string().parse().map_err(text)?;
    let cfg = CorruptionConfig {
        holes: holes as usize,
        blobs: blobs as usize,
        seed: seed.into(),
    };
    let gt = &scene.inner.mask;
    let corrupted = corrupt_mask(&scene.inner.skyline, gt.rows(), &cfg).map_err(text)?;
    let cleaned = method.apply(&corrupted, connectivity);
    Ok(Cleanup {
        corrupted: mask_rgba(&corrupted),
        cleaned: mask_rgba(&cleaned),
        accuracy_before: pixel_accuracy(&corrupted, gt).map_err(text)?,
        accuracy_after: pixel_accuracy(&cleaned, gt).map_err(text)?,
    })
}

#[wasm_bindgen]
pub struct Cleanup {
    corrupted: Vec<u8>,
    cleaned: Vec<u8>,
    accuracy_before: f64,
    accuracy_after: f64,
}

#[wasm_bindgen]
impl Cleanup {
    pub fn corrupted_rgba(&self) -> Vec<u8> {
        self.corrupted.clone()
    }

    pub fn cleaned_rgba(&self) -> Vec<u8> {
        self.cleaned.clone()
    }

    pub fn accuracy_before(&self) -> f64 {
        self.accuracy_before
    }

    pub fn accuracy_after(&self) -> f64 {
        self.accuracy_after
    }
}

/// Output resolution of a convolution, or of a deconvolution if `deconv`.
#[wasm_bindgen]
pub fn convcalc(in_res: u32, filter: u32, pad: u32, stride: u32, deconv: bool) -> WebResult<u32> {
    let spec = LayerSpec {
        in_res: in_res as usize,
        filter: filter as usize,
        pad: pad as usize,
        stride: stride as usize,
    };
    let out = if deconv {
        deconv_out_resolution(&spec)
    } else {
        conv_out_resolution(&spec)
    };
    let out = out.map_err(text)?;
    u32::try_from(out).map_err(text)
}

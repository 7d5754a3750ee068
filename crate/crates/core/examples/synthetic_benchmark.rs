//! Trains both classifiers on synthetic scenes and scores both extractors on
//! held-out scenes, entirely in memory.
//!
//! cargo run --release -p horizon-core --example synthetic_benchmark

use std::time::Instant;

use horizon_core::bench::{
    generate_scene, score_mask, train_on_images, BenchOptions, Detector, SynthConfig,
};
use horizon_core::classifier::{Mode, TrainConfig};
use horizon_core::extract::DpConfig;
use horizon_core::metrics::{aggregate, StdKind};
use horizon_core::postprocess::PostProcess;
use horizon_core::raster::mask_from_skyline;

fn main() -> horizon_core::Result<()> {
    let cfg = SynthConfig::default();
    let train: Vec<_> = (0..20)
        .map(|i| generate_scene(&cfg, i))
        .collect::<Result<_, _>>()?;
    let test: Vec<_> = (20..70)
        .map(|i| generate_scene(&cfg, i))
        .collect::<Result<_, _>>()?;
    let tc = TrainConfig {
        seed: cfg.seed,
        ..TrainConfig::default()
    };

    let t = Instant::now();
    let pairs = || train.iter().map(|s| (&s.image, &s.skyline));
    let boundary = train_on_images(pairs(), Mode::Boundary, &tc)?;
    let region = train_on_images(pairs(), Mode::Region, &tc)?;
    println!("trained both models in {:.1?}", t.elapsed());

    let opts = BenchOptions::default();
    for detector in [
        Detector::new(boundary, DpConfig::dcsi())?,
        Detector::new(region, DpConfig::energy())?,
    ] {
        let t = Instant::now();
        for post in [PostProcess::None, PostProcess::Pp2] {
            let mut scores = Vec::new();
            for scene in &test {
                let path = detector.detect(&scene.image)?;
                let pred = mask_from_skyline(&path.skyline, scene.image.rows())?;
                scores.push(score_mask(&pred, &scene.mask, post, &opts)?);
            }
            let s = aggregate(&scores, StdKind::Population)?;
            println!(
                "{:?} {:?}: accuracy {:.4}  mu {:.3}  sigma {:.3}",
                detector.dp.variant, post, s.mean_accuracy, s.distance_mean, s.distance_std
            );
        }
        println!("  ({:.1?})", t.elapsed());
    }
    Ok(())
}

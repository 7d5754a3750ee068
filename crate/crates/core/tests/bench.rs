use std::fs;
use std::path::Path;

use horizon_core::bench::{
    emit_report, ingest_dataset, parse_pipelines, run_benchmark, score_mask, synth_generate,
    train_on_dataset, BenchOptions, ReportFormat, SynthConfig,
};
use horizon_core::classifier::{Mode, TrainConfig};
use horizon_core::postprocess::PostProcess;
use horizon_core::raster::{load_mask, save_mask, BinaryMask, Label};
use horizon_core::Error;

fn small_synth(count: usize, start_index: usize) -> SynthConfig {
    SynthConfig {
        count,
        start_index,
        width: 64,
        height: 48,
        ..SynthConfig::default()
    }
}

fn pipelines(text: &str, base: &Path) -> Vec<horizon_core::bench::PipelineSpec> {
    parse_pipelines(text, base).unwrap()
}

#[test]
fn ingest_pairs_images_with_masks_in_id_order() {
    let dir = tempfile::tempdir().unwrap();
    let written = synth_generate(&small_synth(3, 5), dir.path()).unwrap();
    let manifest = ingest_dataset(dir.path()).unwrap();
    assert_eq!(manifest, written);
    let ids: Vec<_> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["synth_0005", "synth_0006", "synth_0007"]);
}

#[test]
fn ingest_rejects_inconsistent_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_generate(&small_synth(2, 0), root).unwrap();

    fs::remove_file(root.join("masks/synth_0001.png")).unwrap();
    let err = ingest_dataset(root).unwrap_err().to_string();
    assert!(
        err.contains("synth_0001") && err.contains("no matching mask"),
        "{err}"
    );

    save_mask(
        &BinaryMask::filled(10, 10, Label::Sky),
        root.join("masks/synth_0001.png"),
    )
    .unwrap();
    let err = ingest_dataset(root).unwrap_err().to_string();
    assert!(err.contains("64x48") && err.contains("10x10"), "{err}");

    fs::remove_file(root.join("masks/synth_0001.png")).unwrap();
    fs::remove_file(root.join("images/synth_0001.png")).unwrap();
    save_mask(
        &BinaryMask::filled(48, 64, Label::Sky),
        root.join("masks/orphan.png"),
    )
    .unwrap();
    let err = ingest_dataset(root).unwrap_err().to_string();
    assert!(err.contains("orphan"), "{err}");

    let empty = tempfile::tempdir().unwrap();
    fs::create_dir_all(empty.path().join("images")).unwrap();
    fs::create_dir_all(empty.path().join("masks")).unwrap();
    assert!(matches!(ingest_dataset(empty.path()), Err(Error::Data(_))));
    assert!(matches!(
        ingest_dataset(empty.path().join("nope")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn external_ground_truth_pipeline_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_generate(&small_synth(4, 0), dir.path()).unwrap();
    let specs = pipelines(
        "[gt]\nsource = external\nmasks_dir = masks\n[gt2]\nsource = external\nmasks_dir = masks\npostproc = pp2\n",
        dir.path(),
    );
    let rows = run_benchmark(&manifest, &specs, &BenchOptions::default()).unwrap();
    for row in &rows {
        assert_eq!((row.accuracy, row.dist_mean, row.dist_std), (1.0, 0.0, 0.0));
        assert_eq!((row.images, row.failed), (4, 0));
    }
    let report = dir.path().join("r.csv");
    emit_report(&rows, ReportFormat::Csv, &report).unwrap();
    assert_eq!(
        fs::read_to_string(report).unwrap(),
        "approach,accuracy,dist_mean,dist_std\ngt,1.0000,0.000,0.000\ngt2,1.0000,0.000,0.000\n"
    );
}

#[test]
fn pp2_matches_none_on_column_monotone_masks() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_generate(&small_synth(5, 0), dir.path()).unwrap();
    let opts = BenchOptions::default();
    for entry in &manifest.entries {
        let gt = load_mask(&entry.mask).unwrap();
        // Shift the horizon down by two rows: still monotone, one component.
        let pred = BinaryMask::from_fn(gt.rows(), gt.cols(), |r, c| {
            if r >= 2 && gt.get(r - 2, c) == Label::NonSky || r + 1 == gt.rows() {
                Label::NonSky
            } else {
                Label::Sky
            }
        });
        assert!(pred.is_column_monotone());
        let none = score_mask(&pred, &gt, PostProcess::None, &opts).unwrap();
        let pp2 = score_mask(&pred, &gt, PostProcess::Pp2, &opts).unwrap();
        assert_eq!(none, pp2);
        assert_eq!(none.mean_abs_distance, 2.0);
    }
}

#[test]
fn failed_images_are_counted_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_generate(&small_synth(3, 0), dir.path()).unwrap();
    let pred_dir = dir.path().join("pred");
    fs::create_dir_all(&pred_dir).unwrap();
    for (i, entry) in manifest.entries.iter().enumerate() {
        let m = if i == 0 {
            BinaryMask::filled(48, 64, Label::Sky)
        } else {
            load_mask(&entry.mask).unwrap()
        };
        save_mask(&m, pred_dir.join(format!("{}.png", entry.id))).unwrap();
    }
    let specs = pipelines("[p]\nsource = external\nmasks_dir = pred\n", dir.path());

    let rows = run_benchmark(&manifest, &specs, &BenchOptions::default()).unwrap();
    assert_eq!((rows[0].images, rows[0].failed), (2, 1));
    assert_eq!(rows[0].accuracy, 1.0);

    let clamped = BenchOptions {
        clamp_empty_columns: true,
        ..BenchOptions::default()
    };
    let rows = run_benchmark(&manifest, &specs, &clamped).unwrap();
    assert_eq!((rows[0].images, rows[0].failed), (3, 0));
}

#[test]
fn dcsi_pipeline_is_deterministic_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    let test_dir = dir.path().join("test");
    let train = synth_generate(&small_synth(4, 0), &train_dir).unwrap();
    let test = synth_generate(&small_synth(6, 4), &test_dir).unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    train_on_dataset(&train, Mode::Boundary, &cfg)
        .unwrap()
        .save(dir.path().join("b.txt"))
        .unwrap();
    let specs = pipelines(
        "[dcsi]\nsource = internal\nvariant = dcsi\nmodel = b.txt\n",
        dir.path(),
    );
    let run = |workers| {
        let opts = BenchOptions {
            workers,
            ..BenchOptions::default()
        };
        run_benchmark(&test, &specs, &opts).unwrap()
    };
    let first = run(1);
    assert_eq!(first[0].images, 6);
    assert!(first[0].accuracy > 0.5 && first[0].accuracy <= 1.0);
    assert!(first[0].dist_mean.is_finite());
    assert_eq!(run(1), first);
    assert_eq!(run(3), first);
}

#[test]
fn model_mode_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_generate(&small_synth(2, 0), dir.path()).unwrap();
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    train_on_dataset(&manifest, Mode::Boundary, &cfg)
        .unwrap()
        .save(dir.path().join("b.txt"))
        .unwrap();
    let specs = pipelines(
        "[e]\nsource = internal\nvariant = energy\nmodel = b.txt\n",
        dir.path(),
    );
    assert!(matches!(
        run_benchmark(&manifest, &specs, &BenchOptions::default()),
        Err(Error::Config(_))
    ));
}

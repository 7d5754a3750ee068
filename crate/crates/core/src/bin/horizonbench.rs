//! Command-line front end for the horizon detection benchmark.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use horizon_core::bench::{
    emit_report, ingest_dataset, load_pipelines, report_csv, report_markdown, run_benchmark,
    synth_generate, train_on_dataset, BenchOptions, Detector, ReportFormat, SynthConfig,
};
use horizon_core::classifier::{dense_score_map, ClassifierModel, Mode, TrainConfig};
use horizon_core::extract::{DpConfig, Variant};
use horizon_core::metrics::{conv_out_resolution, deconv_out_resolution, LayerSpec, StdKind};
use horizon_core::postprocess::{Connectivity, PostProcess};
use horizon_core::raster::{load_gray_image, load_mask, save_mask, save_skyline};
use horizon_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "horizonbench",
    version,
    about = "Skyline detection and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic mountain scenes with ground truth.
    Synth {
        #[arg(long, default_value_t = 70)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 192)]
        height: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Index of the first scene, for disjoint splits from one seed.
        #[arg(long, default_value_t = 0)]
        start_index: usize,
        #[arg(long, default_value_t = 0.6)]
        roughness: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a patch classifier on a dataset directory.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// boundary | region
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the dense score map of one image.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the skyline of one image as a CSV.
    Extract {
        /// dcsi | energy
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        model: PathBuf,
        /// Region model for the energy variant (defaults to --model).
        #[arg(long)]
        region_model: Option<PathBuf>,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Post-process a binary sky mask.
    Postprocess {
        #[arg(long = "in")]
        input: PathBuf,
        /// none | pp1 | pp2
        #[arg(long)]
        method: PostProcess,
        /// 4 | 8
        #[arg(long, default_value = "4")]
        connectivity: Connectivity,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run pipelines over a dataset and write a report.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// csv | md
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// population | sample
        #[arg(long, default_value = "population")]
        std: StdKind,
        /// 4 | 8
        #[arg(long, default_value = "4")]
        connectivity: Connectivity,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Give all-sky columns a horizon at the bottom row instead of failing the image.
        #[arg(long)]
        clamp_empty_columns: bool,
    },
    /// Output resolution of a convolution (or deconvolution) layer.
    Convcalc {
        #[arg(long)]
        in_res: usize,
        #[arg(long)]
        filter: usize,
        #[arg(long)]
        pad: usize,
        #[arg(long)]
        stride: usize,
        #[arg(long)]
        deconv: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Io { .. } | Error::Decode { .. } | Error::Parse { .. } | Error::Data(_) => 2,
        Error::Encode { .. } => 3,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            count,
            seed,
            width,
            height,
            noise,
            start_index,
            roughness,
            out,
        } => {
            let cfg = SynthConfig {
                count,
                seed,
                start_index,
                width,
                height,
                ridge_roughness: roughness,
                noise_sigma: noise,
                ..SynthConfig::default()
            };
            let manifest = synth_generate(&cfg, &out)?;
            println!("wrote {} scenes to {}", manifest.len(), out.display());
        }
        Command::Train {
            dataset,
            mode,
            epochs,
            lr,
            seed,
            out,
        } => {
            let defaults = TrainConfig::default();
            let cfg = TrainConfig {
                epochs: epochs.unwrap_or(defaults.epochs),
                learning_rate: lr.unwrap_or(defaults.learning_rate),
                seed: seed.unwrap_or(defaults.seed),
                ..defaults
            };
            cfg.validate()?;
            let manifest = ingest_dataset(&dataset)?;
            let model = train_on_dataset(&manifest, mode, &cfg)?;
            model.save(&out)?;
            println!(
                "trained {} model on {} images -> {}",
                mode.as_str(),
                manifest.len(),
                out.display()
            );
        }
        Command::Score { model, image, out } => {
            let model = ClassifierModel::load(&model)?;
            let img = load_gray_image(&image)?;
            dense_score_map(&img, &model).save(&out)?;
        }
        Command::Extract {
            variant,
            model,
            region_model,
            image,
            delta,
            lambda,
            mu,
            out,
        } => {
            let mut dp = DpConfig::for_variant(variant);
            if let Some(delta) = delta {
                dp.delta = delta;
            }
            if let Some(lambda) = lambda {
                dp.jump_weight = lambda;
            }
            if let Some(mu) = mu {
                dp.edge_weight = mu;
            }
            let model_path = match (variant, region_model) {
                (Variant::Energy, Some(region)) => region,
                _ => model,
            };
            let detector = Detector::new(ClassifierModel::load(&model_path)?, dp)?;
            let img = load_gray_image(&image)?;
            let path = detector.detect(&img)?;
            save_skyline(&path.skyline, &out)?;
            println!("cost {:.6}", path.total_cost);
        }
        Command::Postprocess {
            input,
            method,
            connectivity,
            out,
        } => {
            let mask = load_mask(&input)?;
            save_mask(&method.apply(&mask, connectivity), &out)?;
        }
        Command::Evaluate {
            dataset,
            pipeline,
            report,
            format,
            std,
            connectivity,
            workers,
            clamp_empty_columns,
        } => {
            let manifest = ingest_dataset(&dataset)?;
            let pipelines = load_pipelines(&pipeline)?;
            let opts = BenchOptions {
                workers,
                std_kind: std,
                connectivity,
                clamp_empty_columns,
            };
            let rows = run_benchmark(&manifest, &pipelines, &opts)?;
            emit_report(&rows, format, &report)?;
            let text = match format {
                ReportFormat::Csv => report_csv(&rows)?,
                ReportFormat::Markdown => report_markdown(&rows)?,
            };
            print!("{text}");
        }
        Command::Convcalc {
            in_res,
            filter,
            pad,
            stride,
            deconv,
        } => {
            let spec = LayerSpec {
                in_res,
                filter,
                pad,
                stride,
            };
            let out = if deconv {
                deconv_out_resolution(&spec)?
            } else {
                conv_out_resolution(&spec)?
            };
            println!("{out}");
        }
    }
    Ok(())
}

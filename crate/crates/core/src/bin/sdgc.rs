//! Command-line front end: data generation, training, single-clip
//! denoising, experiment sweeps and file inspection.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdgc_core::encoder::FrameSequence;
use sdgc_core::metrics::MetricReport;
use sdgc_core::ndnet::checkpoint;
use sdgc_core::pipeline::{
    generate_dataset, run_experiment, train, DenoiserKind, ExperimentSpec, ModelBundle,
    PipelineConfig, Stage, System, TrainPlan,
};
use sdgc_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sdgc",
    version,
    about = "Semantic video transmission with diffusion denoising"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic clips as .fsq files.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Number of clips; defaults to data.clips.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "train")]
        split: String,
    },
    /// Train every stage, or resume from a bundle.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Start at this stage, loading earlier ones from the bundle.
        #[arg(long)]
        from_stage: Option<Stage>,
        /// Stop after this stage.
        #[arg(long)]
        until_stage: Option<Stage>,
        /// Run this single stage against an existing bundle.
        #[arg(long, conflicts_with_all = ["from_stage", "until_stage"])]
        stage: Option<Stage>,
        /// Continue an interrupted run at its first missing stage.
        #[arg(long)]
        resume: bool,
        /// Override a config entry, `key=value`; repeatable.
        #[arg(long = "set")]
        sets: Vec<String>,
    },
    /// Send one clip through the link and write the reconstruction.
    Denoise {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "psd")]
        denoiser: DenoiserKind,
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte-Carlo sweep; writes one CSV row per trial.
    Experiment {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20", conflicts_with_all = ["snr_min", "snr_max"])]
        snr_db: Vec<f64>,
        /// Sweep start; use with --snr-max and --snr-step instead of --snr-db.
        #[arg(long, requires = "snr_max")]
        snr_min: Option<f64>,
        #[arg(long, requires = "snr_min")]
        snr_max: Option<f64>,
        #[arg(long, default_value_t = 5.0)]
        snr_step: f64,
        #[arg(
            long,
            alias = "denoiser",
            value_delimiter = ',',
            default_value = "none,mmse-only,sd,msd,psd"
        )]
        denoisers: Vec<DenoiserKind>,
        /// Latency budgets in seconds; defaults to keyframe.t_max.
        #[arg(long, value_delimiter = ',')]
        t_max: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Defaults to the bundle seed (or SDGC_SEED).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "set")]
        sets: Vec<String>,
    },
    /// Compare two .fsq clips.
    Metrics {
        reference: PathBuf,
        candidate: PathBuf,
    },
    /// Print the header of a checkpoint file.
    InspectCheckpoint { path: PathBuf },
}

fn load_config(path: Option<&Path>, sets: &[String]) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    apply_sets(&mut cfg, sets)?;
    cfg.with_env_overrides()
}

fn apply_sets(cfg: &mut PipelineConfig, sets: &[String]) -> Result<()> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{s}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()
}

/// `lo, lo + step, …` up to `hi` inclusive (with a small tolerance).
fn snr_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!(
            "bad SNR sweep {lo}..{hi} step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            config,
            out,
            count,
            split,
        } => {
            let cfg = load_config(config.as_deref(), &[])?;
            std::fs::create_dir_all(&out)?;
            let clips =
                generate_dataset(&cfg.data, cfg.seed, &split, count.unwrap_or(cfg.data.clips))?;
            for (i, c) in clips.iter().enumerate() {
                c.frames.save_fsq(out.join(format!("clip_{i:04}.fsq")))?;
            }
            println!("wrote {} clips to {}", clips.len(), out.display());
        }
        Command::Train {
            config,
            out,
            from_stage,
            until_stage,
            stage,
            resume,
            sets,
        } => {
            let (from_stage, until_stage) = match stage {
                Some(s) => (Some(s), Some(s)),
                None => (from_stage, until_stage),
            };
            let cfg = load_config(config.as_deref(), &sets)?;
            if !resume && from_stage.is_none() && out.join("manifest.json").exists() {
                return Err(Error::Config(format!(
                    "{} already holds a bundle; pass --resume or --from-stage",
                    out.display()
                )));
            }
            let plan = TrainPlan {
                from: from_stage,
                until: until_stage,
            };
            let mut log = |m: &str| eprintln!("{m}");
            train(cfg, &out, plan, &mut log)?;
            println!("bundle written to {}", out.display());
        }
        Command::Denoise {
            bundle,
            input,
            out,
            denoiser,
            snr_db,
            t_max,
            seed,
        } => {
            let b = ModelBundle::load(&bundle)?;
            let sys = System::from_bundle(&b)?;
            let clip = FrameSequence::load_fsq(&input)?;
            let compute = sdgc_core::pipeline::training::compute_model(&b)?;
            let o = sys.run_clip(
                &clip,
                denoiser,
                snr_db.unwrap_or(b.config.link.snr_db),
                t_max.unwrap_or(b.config.keyframe.t_max),
                compute,
                seed,
            )?;
            o.frames.save_fsq(&out)?;
            println!(
                "keyframes {:?} t_exe {:.4} s h {:.4} h_hat {:.4} mse {:.3} psnr {:.2} dB",
                o.plan_indices, o.t_exe, o.h_true, o.h_hat, o.report.mse, o.report.psnr_db
            );
        }
        Command::Experiment {
            bundle,
            out,
            snr_db,
            snr_min,
            snr_max,
            snr_step,
            denoisers,
            t_max,
            trials,
            seed,
            sets,
        } => {
            let snr_db = match (snr_min, snr_max) {
                (Some(lo), Some(hi)) => snr_range(lo, hi, snr_step)?,
                _ => snr_db,
            };
            let mut b = ModelBundle::load(&bundle)?;
            apply_sets(&mut b.config, &sets)?;
            let env_seed = b.config.clone().with_env_overrides()?.seed;
            let spec = ExperimentSpec {
                snr_db,
                denoisers,
                t_max: if t_max.is_empty() {
                    vec![b.config.keyframe.t_max]
                } else {
                    t_max
                },
                trials,
                seed: seed.unwrap_or(env_seed),
            };
            let result = run_experiment(&b, &spec)?;
            std::fs::write(&out, result.to_csv())?;
            for s in result.summarize(spec.seed)? {
                println!(
                    "snr {:>5} dB  {:<9}  t_max {:>6} s  mse {:>9.3} [{:.3}, {:.3}]  psnr {:.2} dB",
                    s.snr_db, s.denoiser, s.t_max, s.mean_mse, s.ci.0, s.ci.1, s.mean_psnr_db
                );
            }
            if !result.infeasible.is_empty() {
                println!(
                    "{} trial(s) had no feasible keyframe plan",
                    result.infeasible.len()
                );
            }
        }
        Command::Metrics {
            reference,
            candidate,
        } => {
            let r = MetricReport::compare(
                &FrameSequence::load_fsq(reference)?,
                &FrameSequence::load_fsq(candidate)?,
            )?;
            println!("mse {:.6}\npsnr_db {:.4}", r.mse, r.psnr_db);
        }
        Command::InspectCheckpoint { path } => {
            let (model, header) = checkpoint::load(&path)?;
            println!("tag {}", header.tag);
            println!("widths {:?}", model.widths());
            println!(
                "activations {} / {}",
                model.hidden_activation(),
                model.output_activation()
            );
            println!("parameters {}", model.param_count());
            println!("seed {}", model.seed());
            match header.schedule {
                Some(s) => println!(
                    "schedule steps {} beta {}..{}",
                    s.steps, s.beta_start, s.beta_end
                ),
                None => println!("schedule none"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

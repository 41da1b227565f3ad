//! Monte-Carlo sweeps over SNR, denoiser and latency budget.

use std::io::Write;

use rayon::prelude::*;

use super::bundle::ModelBundle;
use super::config::PipelineConfig;
use super::synth::generate_dataset;
use super::system::{DenoiserKind, System};
use super::training::compute_model;
use crate::error::{Error, Result};
use crate::metrics::bootstrap_mean_ci;
use crate::rng::{derive_seed, derive_seed_label};

pub const CSV_HEADER: &str = "snr_db,denoiser,t_max_s,mse,psnr_db,latent_frechet,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub snr_db: Vec<f64>,
    pub denoisers: Vec<DenoiserKind>,
    pub t_max: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() || self.denoisers.is_empty() || self.t_max.is_empty() {
            return Err(Error::Config(
                "experiment needs SNRs, denoisers and budgets".into(),
            ));
        }
        if self
            .snr_db
            .iter()
            .chain(&self.t_max)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config(
                "experiment SNRs and budgets must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub snr_db: f64,
    pub denoiser: DenoiserKind,
    pub t_max: f64,
    pub mse: f64,
    pub psnr_db: f64,
    pub latent_frechet: f64,
    pub seed: u64,
    pub keyframes: usize,
    /// Projected execution time of the admitted plan.
    pub t_exe: f64,
    pub h_true: f64,
    pub h_hat: f64,
    pub latent_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Configuration of the bundle the sweep ran against.
    pub config: PipelineConfig,
    pub spec: ExperimentSpec,
    pub rows: Vec<TrialRow>,
    /// `(snr_db, t_max, trial)` cases where no plan met the budget.
    pub infeasible: Vec<(f64, f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub snr_db: f64,
    pub denoiser: DenoiserKind,
    pub t_max: f64,
    pub trials: usize,
    pub mean_mse: f64,
    pub ci: (f64, f64),
    pub mean_psnr_db: f64,
}

/// Seed of trial `trial`; shared by every SNR, budget and denoiser so that
/// they all see the same clip and channel draw.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(derive_seed_label(seed, "trial"), trial as u64)
}

pub fn run_experiment(bundle: &ModelBundle, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let sys = System::from_bundle(bundle)?;
    let compute = compute_model(bundle)?;
    let clips = generate_dataset(&bundle.config.data, spec.seed, "test", spec.trials)?;
    let jobs: Vec<(f64, f64, usize)> = spec
        .snr_db
        .iter()
        .flat_map(|&s| {
            spec.t_max
                .iter()
                .flat_map(move |&t| (0..spec.trials).map(move |i| (s, t, i)))
        })
        .collect();
    let outcomes: Vec<Result<(Vec<TrialRow>, Option<(f64, f64, usize)>)>> = jobs
        .par_iter()
        .map(|&(snr, t_max, trial)| {
            let seed = trial_seed(spec.seed, trial);
            let mut rows = Vec::with_capacity(spec.denoisers.len());
            for &kind in &spec.denoisers {
                match sys.run_clip(&clips[trial].frames, kind, snr, t_max, compute, seed) {
                    Ok(o) => rows.push(TrialRow {
                        snr_db: snr,
                        denoiser: kind,
                        t_max,
                        mse: o.report.mse,
                        psnr_db: o.report.psnr_db,
                        latent_frechet: o.frechet,
                        seed,
                        keyframes: o.plan_indices.len(),
                        t_exe: o.t_exe,
                        h_true: o.h_true,
                        h_hat: o.h_hat,
                        latent_mse: o.latent_mse,
                    }),
                    Err(Error::Infeasible { .. }) => {
                        return Ok((Vec::new(), Some((snr, t_max, trial))))
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok((rows, None))
        })
        .collect();
    let mut rows = Vec::new();
    let mut infeasible = Vec::new();
    for o in outcomes {
        let (r, inf) = o?;
        rows.extend(r);
        infeasible.extend(inf);
    }
    rows.sort_by(|a, b| {
        a.snr_db
            .total_cmp(&b.snr_db)
            .then(a.denoiser.cmp(&b.denoiser))
            .then(a.t_max.total_cmp(&b.t_max))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(ExperimentResult {
        config: bundle.config.clone(),
        spec: spec.clone(),
        rows,
        infeasible,
    })
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{:.6},{}",
                r.snr_db, r.denoiser, r.t_max, r.mse, r.psnr_db, r.latent_frechet, r.seed
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Mean MSE with a 95% percentile-bootstrap interval per
    /// `(snr, denoiser, t_max)` group.
    pub fn summarize(&self, seed: u64) -> Result<Vec<Summary>> {
        let mut out: Vec<Summary> = Vec::new();
        let mut start = 0;
        while start < self.rows.len() {
            let key = |r: &TrialRow| (r.snr_db.to_bits(), r.denoiser, r.t_max.to_bits());
            let k = key(&self.rows[start]);
            let end = start
                + self.rows[start..]
                    .iter()
                    .take_while(|r| key(r) == k)
                    .count();
            let group = &self.rows[start..end];
            let mses: Vec<f64> = group.iter().map(|r| r.mse).collect();
            let n = mses.len() as f64;
            out.push(Summary {
                snr_db: group[0].snr_db,
                denoiser: group[0].denoiser,
                t_max: group[0].t_max,
                trials: group.len(),
                mean_mse: mses.iter().sum::<f64>() / n,
                ci: bootstrap_mean_ci(&mses, 0.95, 2000, seed)?,
                mean_psnr_db: group.iter().map(|r| r.psnr_db).sum::<f64>() / n,
            });
            start = end;
        }
        Ok(out)
    }
}

//! Denoising score-matching training of noise estimators.

use super::estimator::time_embedded;
use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::ndnet::{MlpModel, Momentum, SgdConfig};
use crate::rng::{normal_vec, Rng};
use rand::Rng as _;

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsTrainConfig {
    pub sgd: SgdConfig,
    pub momentum: f64,
    /// Rescale gradients whose norm exceeds this value.
    pub clip_norm: Option<f64>,
    /// Anneal the learning rate to zero along a half cosine.
    pub cosine_decay: bool,
    /// When set, return an exponential moving average of the iterates with
    /// this decay instead of the last iterate.
    pub ema_decay: Option<f64>,
}

/// Learning rate at `step` of `total` under optional cosine annealing.
pub fn scheduled_rate(base: f64, step: usize, total: usize, cosine: bool) -> f64 {
    if !cosine || total == 0 {
        return base;
    }
    0.5 * base * (1.0 + (std::f64::consts::PI * step as f64 / total as f64).cos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps: usize,
    /// Mean per-element loss of each step's batch.
    pub losses: Vec<f64>,
}

impl TrainReport {
    /// Mean of the first and last `window` recorded losses.
    pub fn head_tail(&self, window: usize) -> (f64, f64) {
        let n = self.losses.len();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let w = window.clamp(1, n);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        (mean(&self.losses[..w]), mean(&self.losses[n - w..]))
    }
}

/// One batch of `(network input, target noise)` rows.
fn make_batch(
    sampler: &mut dyn FnMut(&mut Rng) -> Vec<f64>,
    sch: &NoiseSchedule,
    dim: usize,
    batch: usize,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut inputs = Vec::with_capacity(batch * (dim + 1));
    let mut targets = Vec::with_capacity(batch * dim);
    for _ in 0..batch {
        let z0 = sampler(rng);
        if z0.len() != dim {
            return Err(Error::ShapeMismatch {
                op: "train_eps sampler",
                expected: vec![dim],
                found: vec![z0.len()],
            });
        }
        let t = rng.gen_range(1..=sch.steps());
        let eps = normal_vec(rng, dim);
        let zt = sch.forward_sample(&z0, t, &eps)?;
        inputs.extend(time_embedded(&zt, t, sch.steps()));
        targets.extend(eps);
    }
    Ok((inputs, targets))
}

/// Mean per-element `‖ε_θ(z_t, t) − ε‖²` over one batch, and its upstream
/// gradient with respect to the network output.
fn loss_and_upstream(pred: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let upstream = pred
        .iter()
        .zip(targets)
        .map(|(p, e)| {
            let d = p - e;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, upstream)
}

/// Train `model` to predict the injected noise of forward-diffused samples
/// drawn from `sampler`. Returns the trained copy; `model` is untouched.
pub fn train_eps(
    model: &MlpModel,
    mut sampler: impl FnMut(&mut Rng) -> Vec<f64>,
    sch: &NoiseSchedule,
    cfg: &EpsTrainConfig,
    rng: &mut Rng,
) -> Result<(MlpModel, TrainReport)> {
    cfg.sgd.validate()?;
    let dim = model.output_width();
    if model.input_width() != dim + 1 {
        return Err(Error::ShapeMismatch {
            op: "train_eps",
            expected: vec![dim + 1],
            found: vec![model.input_width()],
        });
    }
    let mut trained = model.clone();
    let mut opt = Momentum::new(cfg.momentum)?;
    let mut losses = Vec::with_capacity(cfg.sgd.max_steps);
    let mut ema = cfg.ema_decay.map(|_| trained.parameters());
    for step in 0..cfg.sgd.max_steps {
        let (inputs, targets) = make_batch(&mut sampler, sch, dim, cfg.sgd.batch_size, rng)?;
        let pred = trained.forward_rows(&inputs, cfg.sgd.batch_size)?;
        let (loss, upstream) = loss_and_upstream(&pred, &targets);
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Divergence {
                stage: "noise estimator training".into(),
                detail: format!("loss {loss} at step {step}"),
            });
        }
        losses.push(loss);
        let (mut grads, _) = trained.backward_rows(&inputs, &upstream, cfg.sgd.batch_size)?;
        if let Some(c) = cfg.clip_norm {
            let n = grads.norm();
            if n > c {
                grads.scale(c / n);
            }
        }
        let lr = scheduled_rate(
            cfg.sgd.learning_rate,
            step,
            cfg.sgd.max_steps,
            cfg.cosine_decay,
        );
        opt.step(&mut trained, &grads, lr)?;
        if let (Some(avg), Some(decay)) = (ema.as_mut(), cfg.ema_decay) {
            for (a, p) in avg.iter_mut().zip(trained.parameters()) {
                *a = decay * *a + (1.0 - decay) * p;
            }
        }
    }
    if let Some(avg) = ema {
        trained.set_parameters(&avg)?;
    }
    Ok((
        trained,
        TrainReport {
            steps: cfg.sgd.max_steps,
            losses,
        },
    ))
}

/// Average per-element noise-prediction loss over `batches` fresh batches.
pub fn eps_loss(
    model: &MlpModel,
    mut sampler: impl FnMut(&mut Rng) -> Vec<f64>,
    sch: &NoiseSchedule,
    batch: usize,
    batches: usize,
    rng: &mut Rng,
) -> Result<f64> {
    let dim = model.output_width();
    let mut total = 0.0;
    for _ in 0..batches {
        let (inputs, targets) = make_batch(&mut sampler, sch, dim, batch, rng)?;
        let pred = model.forward_rows(&inputs, batch)?;
        total += loss_and_upstream(&pred, &targets).0;
    }
    Ok(total / batches as f64)
}

//! Line-oriented `key = value` configuration with dotted section keys.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Every key has a default, so an empty file is a valid config.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{ChannelModel, ComputeTimeModel, FadingKind, LinkBudget};
use crate::decoder::InterpConfig;
use crate::diffusion::{GuidanceSchedule, GuidanceWeights, NoiseSchedule, RegParams};
use crate::encoder::PriorityKind;
use crate::error::{Error, Result};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SDGC_SEED";

/// Largest frame extent and clip length handled at desk scale.
pub const MAX_EXTENT: usize = 128;
pub const MAX_FRAMES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionKind {
    Static,
    Linear,
    /// Abrupt jump between 1-based frames `n − 1` and `n`.
    JumpAt(usize),
}

impl FromStr for MotionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(MotionKind::Static),
            "linear" => Ok(MotionKind::Linear),
            other => {
                let n = other
                    .strip_prefix("jump-at-frame-")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown motion kind '{other}'")))?;
                if n < 2 {
                    return Err(Error::Config(format!("jump frame {n} must be at least 2")));
                }
                Ok(MotionKind::JumpAt(n))
            }
        }
    }
}

impl std::fmt::Display for MotionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MotionKind::Static => write!(f, "static"),
            MotionKind::Linear => write!(f, "linear"),
            MotionKind::JumpAt(n) => write!(f, "jump-at-frame-{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainPolicy {
    /// One gain per video.
    Block,
    /// Fresh gain for every keyframe.
    PerKeyframe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuidanceMode {
    NoiseMatched,
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub clips: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub motion_kinds: Vec<MotionKind>,
    pub shapes: usize,
    /// Largest per-frame displacement in pixels.
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub kl_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeConfig {
    pub k: usize,
    pub t_max: f64,
    pub priority: PriorityKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub kind: FadingKind,
    /// Nakagami shape, used when `kind` is Nakagami.
    pub m: f64,
    pub omega: f64,
    pub pilot_len: usize,
    pub gain_policy: GainPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub eps_hidden: Vec<usize>,
    pub gain_hidden: Vec<usize>,
    pub guidance_mode: GuidanceMode,
    pub guidance_latent: f64,
    pub guidance_gain: f64,
    pub guidance_cap: Option<f64>,
    pub reg_step: f64,
    pub reg_l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub momentum: f64,
    pub ae_steps: usize,
    pub ae_lr: f64,
    pub ae_batch: usize,
    pub eps_steps: usize,
    pub eps_lr: f64,
    pub eps_batch: usize,
    pub gain_steps: usize,
    pub interp_epochs: usize,
    pub interp_lr: f64,
    /// Cached triplets used to train the interpolation heads.
    pub interp_samples: usize,
    pub finetune_steps: usize,
    pub finetune_lr: f64,
    /// Clips used to score the fine-tune stage.
    pub eval_clips: usize,
}

/// Per-stage computation times; `None` means "measure during training".
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComputeConfig {
    pub t_fe: Option<f64>,
    pub t_ks: Option<f64>,
    pub t_sd: Option<f64>,
    pub t_sr: Option<f64>,
    pub t_fi: Option<f64>,
}

impl ComputeConfig {
    pub fn is_complete(&self) -> bool {
        self.to_model().is_some()
    }

    pub fn to_model(&self) -> Option<ComputeTimeModel> {
        Some(ComputeTimeModel {
            feature_extraction: self.t_fe?,
            keyframe_selection: self.t_ks?,
            semantic_denoising: self.t_sd?,
            semantic_reconstruction: self.t_sr?,
            frame_interpolation: self.t_fi?,
        })
    }

    /// Fill unset entries from `measured`.
    pub fn freeze(&mut self, measured: &ComputeTimeModel) {
        self.t_fe.get_or_insert(measured.feature_extraction);
        self.t_ks.get_or_insert(measured.keyframe_selection);
        self.t_sd.get_or_insert(measured.semantic_denoising);
        self.t_sr.get_or_insert(measured.semantic_reconstruction);
        self.t_fi.get_or_insert(measured.frame_interpolation);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub keyframe: KeyframeConfig,
    pub channel: ChannelConfig,
    pub link: LinkBudget,
    pub diffusion: DiffusionConfig,
    pub interp: InterpConfig,
    pub train: TrainConfig,
    pub compute: ComputeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            data: DataConfig {
                clips: 256,
                frames: 8,
                height: 32,
                width: 32,
                motion_kinds: vec![
                    MotionKind::Linear,
                    MotionKind::JumpAt(4),
                    MotionKind::Static,
                ],
                shapes: 2,
                max_speed: 2.0,
            },
            model: ModelConfig {
                latent_dim: 64,
                encoder_hidden: vec![256],
                decoder_hidden: vec![256],
                kl_weight: 1e-3,
            },
            keyframe: KeyframeConfig {
                k: 8,
                t_max: 1.0,
                priority: PriorityKind::SparseResidual,
            },
            channel: ChannelConfig {
                kind: FadingKind::Rayleigh,
                m: 1.0,
                omega: 1.0,
                pilot_len: 4,
                gain_policy: GainPolicy::Block,
            },
            link: LinkBudget {
                bandwidth_hz: 5e6,
                power: 1.0,
                snr_db: 10.0,
            },
            diffusion: DiffusionConfig {
                steps: 200,
                beta_start: 1e-4,
                beta_end: 0.1,
                eps_hidden: vec![128, 128, 128],
                gain_hidden: vec![64, 64],
                guidance_mode: GuidanceMode::NoiseMatched,
                guidance_latent: 1.0,
                guidance_gain: 1.0,
                guidance_cap: Some(0.5),
                reg_step: 1e-3,
                reg_l1: 0.0,
            },
            interp: InterpConfig::default(),
            train: TrainConfig {
                momentum: 0.9,
                ae_steps: 3000,
                ae_lr: 1e-3,
                ae_batch: 32,
                eps_steps: 40000,
                eps_lr: 1e-2,
                eps_batch: 64,
                gain_steps: 20000,
                interp_epochs: 3,
                interp_lr: 0.05,
                interp_samples: 160,
                finetune_steps: 500,
                finetune_lr: 0.01,
                eval_clips: 16,
            },
            compute: ComputeConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"))
}

fn parse_opt(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Apply the seed override from the environment, if present.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}: cannot parse '{v}'")))?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, v)?,
            "data.clips" => self.data.clips = parse(key, v)?,
            "data.frames" => self.data.frames = parse(key, v)?,
            "data.height" => self.data.height = parse(key, v)?,
            "data.width" => self.data.width = parse(key, v)?,
            "data.motion_kinds" => {
                self.data.motion_kinds = v
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "data.shapes" => self.data.shapes = parse(key, v)?,
            "data.max_speed" => self.data.max_speed = parse(key, v)?,
            "model.latent_dim" => self.model.latent_dim = parse(key, v)?,
            "model.encoder_hidden" => self.model.encoder_hidden = parse_list(key, v)?,
            "model.decoder_hidden" => self.model.decoder_hidden = parse_list(key, v)?,
            "model.kl_weight" => self.model.kl_weight = parse(key, v)?,
            "keyframe.k" => self.keyframe.k = parse(key, v)?,
            "keyframe.t_max" => self.keyframe.t_max = parse(key, v)?,
            "keyframe.priority" => {
                self.keyframe.priority =
                    v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "channel.kind" => {
                self.channel.kind =
                    match v.parse().map_err(|e: Error| Error::Config(e.to_string()))? {
                        FadingKind::Nakagami { .. } => FadingKind::Nakagami { m: self.channel.m },
                        other => other,
                    };
            }
            "channel.m" => {
                self.channel.m = parse(key, v)?;
                if let FadingKind::Nakagami { ref mut m } = self.channel.kind {
                    *m = self.channel.m;
                }
            }
            "channel.omega" => self.channel.omega = parse(key, v)?,
            "channel.pilot_len" => self.channel.pilot_len = parse(key, v)?,
            "channel.gain_policy" => {
                self.channel.gain_policy = match v {
                    "block" => GainPolicy::Block,
                    "per-keyframe" => GainPolicy::PerKeyframe,
                    other => return Err(Error::Config(format!("{key}: unknown policy '{other}'"))),
                }
            }
            "link.bandwidth_hz" => self.link.bandwidth_hz = parse(key, v)?,
            "link.power" => self.link.power = parse(key, v)?,
            "link.snr_db" => self.link.snr_db = parse(key, v)?,
            "diffusion.steps" => self.diffusion.steps = parse(key, v)?,
            "diffusion.beta_start" => self.diffusion.beta_start = parse(key, v)?,
            "diffusion.beta_end" => self.diffusion.beta_end = parse(key, v)?,
            "diffusion.eps_hidden" => self.diffusion.eps_hidden = parse_list(key, v)?,
            "diffusion.gain_hidden" => self.diffusion.gain_hidden = parse_list(key, v)?,
            "guidance.mode" => {
                self.diffusion.guidance_mode = match v {
                    "noise" => GuidanceMode::NoiseMatched,
                    "constant" => GuidanceMode::Constant,
                    other => return Err(Error::Config(format!("{key}: unknown mode '{other}'"))),
                }
            }
            "guidance.latent" => self.diffusion.guidance_latent = parse(key, v)?,
            "guidance.gain" => self.diffusion.guidance_gain = parse(key, v)?,
            "guidance.cap" => self.diffusion.guidance_cap = parse_opt(key, v)?,
            "reg.step" => self.diffusion.reg_step = parse(key, v)?,
            "reg.l1" => self.diffusion.reg_l1 = parse(key, v)?,
            "interp.base_channels" => self.interp.base_channels = parse(key, v)?,
            "interp.window" => self.interp.window = parse(key, v)?,
            "interp.temperature" => self.interp.temperature = parse(key, v)?,
            "interp.coarse_weight" => self.interp.coarse_weight = parse(key, v)?,
            "interp.refine_hidden" => self.interp.refine_hidden = parse(key, v)?,
            "train.momentum" => self.train.momentum = parse(key, v)?,
            "train.ae_steps" => self.train.ae_steps = parse(key, v)?,
            "train.ae_lr" => self.train.ae_lr = parse(key, v)?,
            "train.ae_batch" => self.train.ae_batch = parse(key, v)?,
            "train.eps_steps" => self.train.eps_steps = parse(key, v)?,
            "train.eps_lr" => self.train.eps_lr = parse(key, v)?,
            "train.eps_batch" => self.train.eps_batch = parse(key, v)?,
            "train.gain_steps" => self.train.gain_steps = parse(key, v)?,
            "train.interp_epochs" => self.train.interp_epochs = parse(key, v)?,
            "train.interp_lr" => self.train.interp_lr = parse(key, v)?,
            "train.interp_samples" => self.train.interp_samples = parse(key, v)?,
            "train.finetune_steps" => self.train.finetune_steps = parse(key, v)?,
            "train.finetune_lr" => self.train.finetune_lr = parse(key, v)?,
            "train.eval_clips" => self.train.eval_clips = parse(key, v)?,
            "compute.t_fe" => self.compute.t_fe = parse_opt(key, v)?,
            "compute.t_ks" => self.compute.t_ks = parse_opt(key, v)?,
            "compute.t_sd" => self.compute.t_sd = parse_opt(key, v)?,
            "compute.t_sr" => self.compute.t_sr = parse_opt(key, v)?,
            "compute.t_fi" => self.compute.t_fi = parse_opt(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.data;
        if d.clips == 0 {
            return bad("data.clips must be positive".into());
        }
        if !(2..=MAX_FRAMES).contains(&d.frames) {
            return bad(format!("data.frames must be in 2..={MAX_FRAMES}"));
        }
        if !(4..=MAX_EXTENT).contains(&d.height) || !(4..=MAX_EXTENT).contains(&d.width) {
            return bad(format!("frame extent must be in 4..={MAX_EXTENT}"));
        }
        if d.motion_kinds.is_empty() {
            return bad("data.motion_kinds must not be empty".into());
        }
        for kind in &d.motion_kinds {
            if let MotionKind::JumpAt(n) = kind {
                if *n > d.frames {
                    return bad(format!("{kind} is past the last frame"));
                }
            }
        }
        if !(d.max_speed >= 0.0 && d.max_speed.is_finite()) {
            return bad("data.max_speed must be nonnegative".into());
        }
        if self.model.latent_dim == 0 {
            return bad("model.latent_dim must be positive".into());
        }
        if !(self.model.kl_weight >= 0.0 && self.model.kl_weight.is_finite()) {
            return bad("model.kl_weight must be nonnegative".into());
        }
        if self.keyframe.k == 0 || self.keyframe.k > self.model.latent_dim {
            return bad("keyframe.k must be in 1..=model.latent_dim".into());
        }
        if !(self.keyframe.t_max > 0.0) {
            return bad("keyframe.t_max must be positive".into());
        }
        if !(1..=16).contains(&self.channel.pilot_len) {
            return bad("channel.pilot_len must be in 1..=16".into());
        }
        self.channel_model()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.link
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.schedule().map_err(|e| Error::Config(e.to_string()))?;
        self.guidance()
            .validate(self.diffusion.steps)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.reg().map_err(|e| Error::Config(e.to_string()))?;
        let i = &self.interp;
        if i.window % 2 == 0 || i.window > d.height.min(d.width) {
            return bad("interp.window must be odd and no larger than the frame".into());
        }
        if i.base_channels == 0 || i.refine_hidden == 0 || !(i.temperature > 0.0) {
            return bad("interp sizes and temperature must be positive".into());
        }
        let t = &self.train;
        if t.ae_batch == 0 || t.eps_batch == 0 {
            return bad("batch sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&t.momentum) {
            return bad("train.momentum must be in [0, 1)".into());
        }
        for (name, lr) in [
            ("ae_lr", t.ae_lr),
            ("eps_lr", t.eps_lr),
            ("interp_lr", t.interp_lr),
            ("finetune_lr", t.finetune_lr),
        ] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return bad(format!("train.{name} must be nonnegative"));
            }
        }
        let c = &self.compute;
        for v in [c.t_fe, c.t_ks, c.t_sd, c.t_sr, c.t_fi]
            .into_iter()
            .flatten()
        {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("compute times must be nonnegative".into());
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(
            self.diffusion.steps,
            self.diffusion.beta_start,
            self.diffusion.beta_end,
        )
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.channel.kind, self.channel.omega)
    }

    pub fn guidance(&self) -> GuidanceWeights {
        let d = &self.diffusion;
        match d.guidance_mode {
            GuidanceMode::NoiseMatched => GuidanceWeights {
                latent: GuidanceSchedule::NoiseMatched,
                gain: GuidanceSchedule::NoiseMatched,
                cap: d.guidance_cap,
            },
            GuidanceMode::Constant => GuidanceWeights::constant(d.guidance_latent, d.guidance_gain)
                .with_cap(d.guidance_cap),
        }
    }

    pub fn reg(&self) -> Result<RegParams> {
        RegParams::new(self.diffusion.reg_step, self.diffusion.reg_l1)
    }

    pub fn interp_config(&self) -> InterpConfig {
        InterpConfig {
            seed: crate::rng::derive_seed_label(self.seed, "interp-extractor"),
            ..self.interp.clone()
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let d = &self.data;
        let m = &self.model;
        let df = &self.diffusion;
        let t = &self.train;
        let c = &self.compute;
        let kind = match self.channel.kind {
            FadingKind::Awgn => "awgn",
            FadingKind::Rayleigh => "rayleigh",
            FadingKind::Nakagami { .. } => "nakagami",
        };
        let entries: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("data.clips", d.clips.to_string()),
            ("data.frames", d.frames.to_string()),
            ("data.height", d.height.to_string()),
            ("data.width", d.width.to_string()),
            ("data.motion_kinds", fmt_list(&d.motion_kinds)),
            ("data.shapes", d.shapes.to_string()),
            ("data.max_speed", format!("{:?}", d.max_speed)),
            ("model.latent_dim", m.latent_dim.to_string()),
            ("model.encoder_hidden", fmt_list(&m.encoder_hidden)),
            ("model.decoder_hidden", fmt_list(&m.decoder_hidden)),
            ("model.kl_weight", format!("{:?}", m.kl_weight)),
            ("keyframe.k", self.keyframe.k.to_string()),
            ("keyframe.t_max", format!("{:?}", self.keyframe.t_max)),
            (
                "keyframe.priority",
                match self.keyframe.priority {
                    PriorityKind::SparseResidual => "sparse",
                    PriorityKind::Cosine => "cosine",
                }
                .into(),
            ),
            ("channel.kind", kind.into()),
            ("channel.m", format!("{:?}", self.channel.m)),
            ("channel.omega", format!("{:?}", self.channel.omega)),
            ("channel.pilot_len", self.channel.pilot_len.to_string()),
            (
                "channel.gain_policy",
                match self.channel.gain_policy {
                    GainPolicy::Block => "block",
                    GainPolicy::PerKeyframe => "per-keyframe",
                }
                .into(),
            ),
            ("link.bandwidth_hz", format!("{:?}", self.link.bandwidth_hz)),
            ("link.power", format!("{:?}", self.link.power)),
            ("link.snr_db", format!("{:?}", self.link.snr_db)),
            ("diffusion.steps", df.steps.to_string()),
            ("diffusion.beta_start", format!("{:?}", df.beta_start)),
            ("diffusion.beta_end", format!("{:?}", df.beta_end)),
            ("diffusion.eps_hidden", fmt_list(&df.eps_hidden)),
            ("diffusion.gain_hidden", fmt_list(&df.gain_hidden)),
            (
                "guidance.mode",
                match df.guidance_mode {
                    GuidanceMode::NoiseMatched => "noise",
                    GuidanceMode::Constant => "constant",
                }
                .into(),
            ),
            ("guidance.latent", format!("{:?}", df.guidance_latent)),
            ("guidance.gain", format!("{:?}", df.guidance_gain)),
            ("guidance.cap", fmt_opt(df.guidance_cap)),
            ("reg.step", format!("{:?}", df.reg_step)),
            ("reg.l1", format!("{:?}", df.reg_l1)),
            (
                "interp.base_channels",
                self.interp.base_channels.to_string(),
            ),
            ("interp.window", self.interp.window.to_string()),
            (
                "interp.temperature",
                format!("{:?}", self.interp.temperature),
            ),
            (
                "interp.coarse_weight",
                format!("{:?}", self.interp.coarse_weight),
            ),
            (
                "interp.refine_hidden",
                self.interp.refine_hidden.to_string(),
            ),
            ("train.momentum", format!("{:?}", t.momentum)),
            ("train.ae_steps", t.ae_steps.to_string()),
            ("train.ae_lr", format!("{:?}", t.ae_lr)),
            ("train.ae_batch", t.ae_batch.to_string()),
            ("train.eps_steps", t.eps_steps.to_string()),
            ("train.eps_lr", format!("{:?}", t.eps_lr)),
            ("train.eps_batch", t.eps_batch.to_string()),
            ("train.gain_steps", t.gain_steps.to_string()),
            ("train.interp_epochs", t.interp_epochs.to_string()),
            ("train.interp_lr", format!("{:?}", t.interp_lr)),
            ("train.interp_samples", t.interp_samples.to_string()),
            ("train.finetune_steps", t.finetune_steps.to_string()),
            ("train.finetune_lr", format!("{:?}", t.finetune_lr)),
            ("train.eval_clips", t.eval_clips.to_string()),
            ("compute.t_fe", fmt_opt(c.t_fe)),
            ("compute.t_ks", fmt_opt(c.t_ks)),
            ("compute.t_sd", fmt_opt(c.t_sd)),
            ("compute.t_sr", fmt_opt(c.t_sr)),
            ("compute.t_fi", fmt_opt(c.t_fi)),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

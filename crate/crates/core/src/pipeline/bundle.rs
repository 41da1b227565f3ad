//! On-disk model bundle: one checkpoint per network plus a JSON manifest.
//!
//! ```text
//! bundle/
//!   manifest.json   stages completed, measured compute times
//!   config.txt      frozen configuration
//!   norm.json       latent normalization
//!   encoder.sdgc decoder.sdgc eps_z.sdgc eps_h.sdgc
//!   interp_scale{0,1,2}.sdgc interp_fuse.sdgc interp_mask.sdgc interp_refine.sdgc
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::autoencoder::LatentNorm;
use super::config::PipelineConfig;
use crate::decoder::{AppearanceExtractor, DecoderNet, Interpolator, Projections, SCALES};
use crate::error::{Error, Result};
use crate::ndnet::checkpoint::{self, CheckpointHeader};
use crate::ndnet::MlpModel;

pub const MANIFEST_VERSION: u32 = 1;

/// Training stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Autoencoder,
    Denoisers,
    Interpolation,
    Finetune,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Autoencoder,
        Stage::Denoisers,
        Stage::Interpolation,
        Stage::Finetune,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Autoencoder => "autoencoder",
            Stage::Denoisers => "denoisers",
            Stage::Interpolation => "interpolation",
            Stage::Finetune => "finetune",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub stages: Vec<Stage>,
    /// Stage losses recorded during training, `(first, last)` windows.
    pub losses: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: MlpModel,
    pub decoder: DecoderNet,
    pub norm: LatentNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoisers {
    pub eps_z: MlpModel,
    pub eps_h: MlpModel,
}

/// Whatever training has produced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: PipelineConfig,
    pub manifest: Manifest,
    pub autoencoder: Option<Autoencoder>,
    pub denoisers: Option<Denoisers>,
    pub interpolator: Option<Interpolator>,
}

fn missing(what: &str) -> Error {
    Error::invalid(format!(
        "bundle has no trained {what}; run the training stage first"
    ))
}

impl ModelBundle {
    pub fn empty(config: PipelineConfig) -> Self {
        let manifest = Manifest {
            version: MANIFEST_VERSION,
            seed: config.seed,
            stages: Vec::new(),
            losses: Vec::new(),
        };
        ModelBundle {
            config,
            manifest,
            autoencoder: None,
            denoisers: None,
            interpolator: None,
        }
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.manifest.stages.contains(&stage)
    }

    pub fn mark(&mut self, stage: Stage) {
        if !self.has(stage) {
            self.manifest.stages.push(stage);
            self.manifest.stages.sort();
        }
    }

    pub fn autoencoder(&self) -> Result<&Autoencoder> {
        self.autoencoder
            .as_ref()
            .ok_or_else(|| missing("autoencoder"))
    }

    pub fn denoisers(&self) -> Result<&Denoisers> {
        self.denoisers.as_ref().ok_or_else(|| missing("denoisers"))
    }

    pub fn interpolator(&self) -> Result<&Interpolator> {
        self.interpolator
            .as_ref()
            .ok_or_else(|| missing("interpolator"))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let put = |name: &str, model: &MlpModel, header: CheckpointHeader| {
            checkpoint::save(dir.join(name), model, &header)
        };
        let tag = CheckpointHeader::tagged;
        if let Some(ae) = &self.autoencoder {
            put("encoder.sdgc", &ae.encoder, tag("encoder"))?;
            put("decoder.sdgc", ae.decoder.model(), tag("decoder"))?;
            std::fs::write(
                dir.join("norm.json"),
                serde_json::to_string_pretty(&ae.norm).map_err(json_err)?,
            )?;
        }
        if let Some(dn) = &self.denoisers {
            let stamp = Some(self.config.schedule()?.stamp());
            put(
                "eps_z.sdgc",
                &dn.eps_z,
                CheckpointHeader {
                    tag: "eps_z".into(),
                    schedule: stamp,
                },
            )?;
            put(
                "eps_h.sdgc",
                &dn.eps_h,
                CheckpointHeader {
                    tag: "eps_h".into(),
                    schedule: stamp,
                },
            )?;
        }
        if let Some(it) = &self.interpolator {
            for (s, m) in it.extractor.scale_models().iter().enumerate() {
                put(
                    &format!("interp_scale{s}.sdgc"),
                    m,
                    CheckpointHeader::tagged(format!("interp_scale{s}")),
                )?;
            }
            put(
                "interp_fuse.sdgc",
                it.extractor.fuse_model(),
                tag("interp_fuse"),
            )?;
            put("interp_mask.sdgc", &it.mask, tag("interp_mask"))?;
            put("interp_refine.sdgc", &it.refine, tag("interp_refine"))?;
        }
        std::fs::write(dir.join("config.txt"), self.config.to_text())?;
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&self.manifest).map_err(json_err)?,
        )?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
                .map_err(|e| Error::Format(format!("manifest.json: {e}")))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        let config = PipelineConfig::load(dir.join("config.txt"))?;
        let get = |name: &str| -> Result<MlpModel> {
            let (model, header) = checkpoint::load(dir.join(name))?;
            let expected = name.trim_end_matches(".sdgc");
            if header.tag != expected {
                return Err(Error::Format(format!(
                    "{name}: tag '{}' does not match",
                    header.tag
                )));
            }
            Ok(model)
        };
        let mut bundle = ModelBundle::empty(config);
        let has = |s| manifest.stages.contains(&s);
        if has(Stage::Autoencoder) {
            let d = &bundle.config.data;
            let norm: LatentNorm =
                serde_json::from_str(&std::fs::read_to_string(dir.join("norm.json"))?)
                    .map_err(|e| Error::Format(format!("norm.json: {e}")))?;
            bundle.autoencoder = Some(Autoencoder {
                encoder: get("encoder.sdgc")?,
                decoder: DecoderNet::new(get("decoder.sdgc")?, d.height, d.width)?,
                norm,
            });
        }
        if has(Stage::Denoisers) {
            let sch = bundle.config.schedule()?;
            for name in ["eps_z.sdgc", "eps_h.sdgc"] {
                let (_, header) = checkpoint::load(dir.join(name))?;
                if header.schedule != Some(sch.stamp()) {
                    return Err(Error::Format(format!(
                        "{name} was trained with a different noise schedule"
                    )));
                }
            }
            bundle.denoisers = Some(Denoisers {
                eps_z: get("eps_z.sdgc")?,
                eps_h: get("eps_h.sdgc")?,
            });
        }
        if has(Stage::Interpolation) {
            let scales = (0..SCALES)
                .map(|s| get(&format!("interp_scale{s}.sdgc")))
                .collect::<Result<Vec<_>>>()?;
            let extractor = AppearanceExtractor::from_parts(scales, get("interp_fuse.sdgc")?)?;
            let cfg = &bundle.config.interp;
            bundle.interpolator = Some(Interpolator {
                projections: Projections::gaussian_kernel(
                    extractor.base_channels(),
                    cfg.temperature,
                ),
                extractor,
                window: cfg.window,
                mask: get("interp_mask.sdgc")?,
                refine: get("interp_refine.sdgc")?,
            });
        }
        bundle.manifest = manifest;
        Ok(bundle)
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

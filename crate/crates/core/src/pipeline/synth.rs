//! Synthetic clips of moving rectangles over a gradient background.

use rand::Rng as _;

use super::config::{DataConfig, MotionKind};
use crate::encoder::{FrameSequence, CHANNELS};
use crate::error::Result;
use crate::rng::{derive_seed, derive_seed_label, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub kind: MotionKind,
    pub frames: FrameSequence,
}

struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    vx: f64,
    vy: f64,
    jump: (f64, f64),
    color: [f64; CHANNELS],
}

fn color(rng: &mut Rng) -> [f64; CHANNELS] {
    [
        rng.gen_range(0.0..255.0),
        rng.gen_range(0.0..255.0),
        rng.gen_range(0.0..255.0),
    ]
}

/// Render one clip. Frame `f` (0-based) places each rectangle at
/// `p0 + f·v`, plus the jump offset from the jump frame onward.
pub fn generate_clip(cfg: &DataConfig, kind: MotionKind, rng: &mut Rng) -> Result<Clip> {
    let (hh, ww) = (cfg.height as f64, cfg.width as f64);
    let top = color(rng);
    let bottom = color(rng);
    let rects: Vec<Rect> = (0..cfg.shapes)
        .map(|_| {
            let w = rng.gen_range(0.2..0.4) * ww;
            let h = rng.gen_range(0.2..0.4) * hh;
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let speed = match kind {
                MotionKind::Static => 0.0,
                _ => rng.gen_range(0.5..=1.0) * cfg.max_speed,
            };
            let jump = match kind {
                MotionKind::JumpAt(_) => {
                    let a = rng.gen_range(0.0..std::f64::consts::TAU);
                    (a.cos() * ww / 3.0, a.sin() * hh / 3.0)
                }
                _ => (0.0, 0.0),
            };
            Rect {
                x: rng.gen_range(0.1..0.9) * ww - w / 2.0,
                y: rng.gen_range(0.1..0.9) * hh - h / 2.0,
                w,
                h,
                vx: speed * angle.cos(),
                vy: speed * angle.sin(),
                jump,
                color: color(rng),
            }
        })
        .collect();
    let mut frames = Vec::with_capacity(cfg.frames);
    for f in 0..cfg.frames {
        let jumped = matches!(kind, MotionKind::JumpAt(n) if f + 1 >= n);
        let mut px = vec![0u8; cfg.height * cfg.width * CHANNELS];
        for y in 0..cfg.height {
            let s = y as f64 / (hh - 1.0);
            for x in 0..cfg.width {
                let mut c = [0.0; CHANNELS];
                for ch in 0..CHANNELS {
                    c[ch] = top[ch] * (1.0 - s) + bottom[ch] * s;
                }
                for r in &rects {
                    let (jx, jy) = if jumped { r.jump } else { (0.0, 0.0) };
                    let rx = (r.x + r.vx * f as f64 + jx).round();
                    let ry = (r.y + r.vy * f as f64 + jy).round();
                    let (fx, fy) = (x as f64, y as f64);
                    if fx >= rx && fx < rx + r.w.round() && fy >= ry && fy < ry + r.h.round() {
                        c = r.color;
                    }
                }
                let o = (y * cfg.width + x) * CHANNELS;
                for ch in 0..CHANNELS {
                    px[o + ch] = c[ch].round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        frames.push(px);
    }
    Ok(Clip {
        kind,
        frames: FrameSequence::from_frames(cfg.height, cfg.width, &frames)?,
    })
}

/// `cfg.clips` clips cycling through the configured motion kinds. Each clip
/// has its own RNG stream derived from `(seed, label, index)`.
pub fn generate_dataset(
    cfg: &DataConfig,
    seed: u64,
    label: &str,
    count: usize,
) -> Result<Vec<Clip>> {
    let base = derive_seed_label(seed, label);
    (0..count)
        .map(|i| {
            let kind = cfg.motion_kinds[i % cfg.motion_kinds.len()];
            generate_clip(cfg, kind, &mut rng_from_seed(derive_seed(base, i as u64)))
        })
        .collect()
}

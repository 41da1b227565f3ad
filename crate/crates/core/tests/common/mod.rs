//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use sdgc_core::channel::{ComputeTimeModel, LinkBudget};
use sdgc_core::decoder::{FeatureMap, Projections};
use sdgc_core::ndnet::MlpModel;

/// Central-difference gradient of `⟨upstream, f(input)⟩` with respect to
/// every parameter, returned flattened in `parameters()` order.
pub fn fd_param_grad(
    model: &MlpModel,
    input: &[f64],
    rows: usize,
    upstream: &[f64],
    step: f64,
) -> Vec<f64> {
    let base = model.parameters();
    let objective = |m: &MlpModel| -> f64 {
        m.forward_rows(input, rows)
            .unwrap()
            .iter()
            .zip(upstream)
            .map(|(a, b)| a * b)
            .sum()
    };
    let mut probe = model.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + step;
            probe.set_parameters(&p).unwrap();
            let up = objective(&probe);
            p[i] = base[i] - step;
            probe.set_parameters(&p).unwrap();
            let down = objective(&probe);
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central-difference gradient with respect to the input.
pub fn fd_input_grad(
    model: &MlpModel,
    input: &[f64],
    rows: usize,
    upstream: &[f64],
    step: f64,
) -> Vec<f64> {
    let objective = |x: &[f64]| -> f64 {
        model
            .forward_rows(x, rows)
            .unwrap()
            .iter()
            .zip(upstream)
            .map(|(a, b)| a * b)
            .sum()
    };
    (0..input.len())
        .map(|i| {
            let mut x = input.to_vec();
            x[i] = input[i] + step;
            let up = objective(&x);
            x[i] = input[i] - step;
            let down = objective(&x);
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|, floor)`, maximized over entries.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Plain per-row, per-unit forward pass written from the layer equations.
pub fn naive_forward(model: &MlpModel, x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    let n = model.layers().len();
    for (li, l) in model.layers().iter().enumerate() {
        let act = if li + 1 == n {
            model.output_activation()
        } else {
            model.hidden_activation()
        };
        cur = (0..l.outputs)
            .map(|o| {
                let s: f64 = l.biases[o]
                    + (0..l.inputs)
                        .map(|i| l.weights[o * l.inputs + i] * cur[i])
                        .sum::<f64>();
                act.apply(s)
            })
            .collect();
    }
    cur
}

/// Window neighbor `k` of `(y, x)`: raster offsets, clamped to the grid.
pub fn neighbor(h: usize, w: usize, window: usize, y: usize, x: usize, k: usize) -> (usize, usize) {
    let r = (window / 2) as isize;
    let dy = (k / window) as isize - r;
    let dx = (k % window) as isize - r;
    (
        (y as isize + dy).clamp(0, h as isize - 1) as usize,
        (x as isize + dx).clamp(0, w as isize - 1) as usize,
    )
}

fn matvec(m: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| (0..cols).map(|c| m[r * cols + c] * v[c]).sum())
        .collect()
}

/// Brute-force windowed softmax attention: weights per position and the
/// residual-updated appearance.
pub fn brute_attention(
    ai: &FeatureMap,
    aj: &FeatureMap,
    window: usize,
    p: &Projections,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (h, w, c, oc) = (ai.height, ai.width, ai.channels, p.out_channels);
    let mut all_weights = Vec::new();
    let mut out = ai.data.clone();
    for y in 0..h {
        for x in 0..w {
            let q = matvec(&p.query, oc, c, ai.at(y, x));
            let logits: Vec<f64> = (0..window * window)
                .map(|k| {
                    let (ny, nx) = neighbor(h, w, window, y, x, k);
                    let key = matvec(&p.key, oc, c, aj.at(ny, nx));
                    q.iter().zip(&key).map(|(a, b)| a * b).sum::<f64>() / (oc as f64).sqrt()
                })
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = e.iter().sum();
            let weights: Vec<f64> = e.iter().map(|v| v / z).collect();
            for (k, s) in weights.iter().enumerate() {
                let (ny, nx) = neighbor(h, w, window, y, x, k);
                let v = matvec(&p.value, oc, c, aj.at(ny, nx));
                for ch in 0..c {
                    out[(y * w + x) * c + ch] += s * v[ch];
                }
            }
            all_weights.push(weights);
        }
    }
    (all_weights, out)
}

/// Norm of the `k` largest-magnitude entries of `a − b`.
pub fn sparse_residual_norm(a: &[f64], b: &[f64], k: usize) -> f64 {
    let mut mags: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    mags.sort_by(|x, y| y.partial_cmp(x).unwrap());
    mags[..k].iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn cosine_difference(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

/// Greedy keyframe selection by exhaustive scan: start from the endpoints,
/// repeatedly add the unselected frame with the largest summed difference
/// (lowest index on ties) while the projected time stays within budget.
/// Returns `None` when the endpoints alone exceed the budget.
#[allow(clippy::too_many_arguments)]
pub fn reference_selection(
    latents: &[Vec<f64>],
    k: usize,
    cosine: bool,
    t_max: f64,
    link: &LinkBudget,
    h: f64,
    noise_power: f64,
    compute: &ComputeTimeModel,
) -> Option<Vec<usize>> {
    let f = latents.len();
    let d = latents[0].len();
    let rate = link.bandwidth_hz * (1.0 + link.power * h * h / noise_power).log2();
    let time = |count: usize| {
        let elements = d + 2 * k * (count - 1);
        let t_com = 32.0 * elements as f64 / rate;
        compute.feature_extraction
            + compute.keyframe_selection
            + t_com
            + compute.semantic_denoising
            + compute.semantic_reconstruction
            + compute.frame_interpolation
    };
    if !(time(2) <= t_max) {
        return None;
    }
    let mut selected = vec![0, f - 1];
    loop {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..f {
            if selected.contains(&i) {
                continue;
            }
            let p: f64 = selected
                .iter()
                .map(|&j| {
                    if cosine {
                        cosine_difference(&latents[i], &latents[j])
                    } else {
                        sparse_residual_norm(&latents[i], &latents[j], k)
                    }
                })
                .sum();
            if best.map_or(true, |(bp, _)| p > bp) {
                best = Some((p, i));
            }
        }
        let Some((_, i)) = best else { break };
        if time(selected.len() + 1) > t_max {
            break;
        }
        selected.push(i);
        selected.sort_unstable();
    }
    Some(selected)
}

/// Square of side `side` with top-left corner `(x0, y0)` on a gradient
/// background; the square is the only strongly red region.
pub fn square_frame(
    h: usize,
    w: usize,
    x0: f64,
    y0: f64,
    side: usize,
) -> sdgc_core::encoder::Frame {
    let mut f = sdgc_core::encoder::Frame::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let inside = xf >= x0 && xf < x0 + side as f64 && yf >= y0 && yf < y0 + side as f64;
            let c = if inside {
                [220.0, 40.0, 30.0]
            } else {
                [30.0 + 2.0 * xf, 60.0, 90.0 + yf]
            };
            f.values[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&c);
        }
    }
    f
}

/// Centroid of the red-dominant pixels, weighted by how far red exceeds 120.
pub fn red_centroid(f: &sdgc_core::encoder::Frame) -> (f64, f64) {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for y in 0..f.height {
        for x in 0..f.width {
            let wgt = ((f.at(y, x, 0) - 120.0) / 100.0).max(0.0);
            sx += wgt * x as f64;
            sy += wgt * y as f64;
            sw += wgt;
        }
    }
    (sx / sw, sy / sw)
}

/// Bilinear sample written out from the four surrounding pixels.
pub fn bilinear_reference(f: &sdgc_core::encoder::Frame, x: f64, y: f64, c: usize) -> f64 {
    let x = x.clamp(0.0, (f.width - 1) as f64);
    let y = y.clamp(0.0, (f.height - 1) as f64);
    let (x0, y0) = (x.floor(), y.floor());
    let (x1, y1) = (
        (x0 + 1.0).min((f.width - 1) as f64),
        (y0 + 1.0).min((f.height - 1) as f64),
    );
    let (ax, ay) = (x - x0, y - y0);
    let p = |yy: f64, xx: f64| f.at(yy as usize, xx as usize, c);
    (1.0 - ax) * (1.0 - ay) * p(y0, x0)
        + ax * (1.0 - ay) * p(y0, x1)
        + (1.0 - ax) * ay * p(y1, x0)
        + ax * ay * p(y1, x1)
}

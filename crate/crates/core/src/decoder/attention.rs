//! Windowed inter-frame attention and the motion it implies.
//!
//! Every position `(y, x)` of frame `i` attends to the `W × W` neighborhood
//! of the same position in frame `j`. Neighbor coordinates are clamped to
//! the grid, so border positions see repeated edge samples. Coordinates are
//! `(x, y)` = (column, row).

use crate::error::{Error, Result};

/// `H × W × C` feature map, row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                op: "FeatureMap::new",
                expected: vec![height, width, channels],
                found: vec![data.len()],
            });
        }
        Ok(FeatureMap {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        FeatureMap {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> &[f64] {
        let o = (y * self.width + x) * self.channels;
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn at_mut(&mut self, y: usize, x: usize) -> &mut [f64] {
        let o = (y * self.width + x) * self.channels;
        &mut self.data[o..o + self.channels]
    }

    fn same_extent(&self, other: &FeatureMap) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }
}

/// Query/key/value projections, each `Ĉ × C` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub in_channels: usize,
    pub out_channels: usize,
    pub query: Vec<f64>,
    pub key: Vec<f64>,
    pub value: Vec<f64>,
}

impl Projections {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        query: Vec<f64>,
        key: Vec<f64>,
        value: Vec<f64>,
    ) -> Result<Self> {
        let n = in_channels * out_channels;
        if query.len() != n || key.len() != n || value.len() != n {
            return Err(Error::invalid(format!(
                "projections must each hold {out_channels}×{in_channels} entries"
            )));
        }
        Ok(Projections {
            in_channels,
            out_channels,
            query,
            key,
            value,
        })
    }

    /// Projections over augmented appearance vectors `[f, ‖f‖², 1]` that
    /// make the attention logit `−τ/2·‖f_i − f_j‖²` up to a per-row
    /// constant: the softmax is then a Gaussian kernel on feature distance.
    /// Values carry the feature part only.
    pub fn gaussian_kernel(feature_channels: usize, temperature: f64) -> Self {
        let c = feature_channels + 2;
        let s = temperature * (c as f64).sqrt();
        let mut query = vec![0.0; c * c];
        let mut key = vec![0.0; c * c];
        let mut value = vec![0.0; c * c];
        for i in 0..feature_channels {
            query[i * c + i] = s;
            value[i * c + i] = 1.0;
        }
        // The constant channel feeds −s/2 into the norm slot of the query.
        query[feature_channels * c + feature_channels + 1] = -s / 2.0;
        for i in 0..c {
            key[i * c + i] = 1.0;
        }
        Projections {
            in_channels: c,
            out_channels: c,
            query,
            key,
            value,
        }
    }

    fn project(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
        for r in 0..rows {
            out[r] = m[r * cols..(r + 1) * cols]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

/// Attention weights: for each position, `W²` probabilities over its window
/// in raster order (row offset major).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub height: usize,
    pub width: usize,
    pub window: usize,
    pub weights: Vec<f64>,
}

impl AttentionMap {
    pub fn row(&self, y: usize, x: usize) -> &[f64] {
        let n = self.window * self.window;
        let o = (y * self.width + x) * n;
        &self.weights[o..o + n]
    }

    /// Clamped grid coordinate of window slot `k` around `(y, x)`.
    #[inline]
    pub fn neighbor(&self, y: usize, x: usize, k: usize) -> (usize, usize) {
        neighbor(self.height, self.width, self.window, y, x, k)
    }
}

#[inline]
fn neighbor(h: usize, w: usize, window: usize, y: usize, x: usize, k: usize) -> (usize, usize) {
    let r = (window / 2) as isize;
    let dy = (k / window) as isize - r;
    let dx = (k % window) as isize - r;
    let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
    let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
    (ny, nx)
}

/// Attend from `ai` to the windowed neighborhoods of `aj`. Returns the
/// updated appearance `Ã = A_i + S·V` and the attention map `S`.
pub fn interframe_attention(
    ai: &FeatureMap,
    aj: &FeatureMap,
    window: usize,
    proj: &Projections,
) -> Result<(FeatureMap, AttentionMap)> {
    if !ai.same_extent(aj) {
        return Err(Error::ShapeMismatch {
            op: "interframe_attention",
            expected: vec![ai.height, ai.width, ai.channels],
            found: vec![aj.height, aj.width, aj.channels],
        });
    }
    if window % 2 == 0 || window == 0 {
        return Err(Error::invalid(format!(
            "attention window {window} must be odd"
        )));
    }
    if window > ai.height || window > ai.width {
        return Err(Error::invalid(format!(
            "attention window {window} exceeds the {}×{} feature grid",
            ai.height, ai.width
        )));
    }
    if proj.in_channels != ai.channels {
        return Err(Error::ShapeMismatch {
            op: "interframe_attention projections",
            expected: vec![ai.channels],
            found: vec![proj.in_channels],
        });
    }
    if proj.out_channels != ai.channels {
        return Err(Error::invalid(
            "value projection must preserve the channel count for the residual update",
        ));
    }
    let (h, w, c, oc) = (ai.height, ai.width, ai.channels, proj.out_channels);
    // Keys and values of every position of frame j, computed once.
    let mut keys = vec![0.0; h * w * oc];
    let mut values = vec![0.0; h * w * oc];
    for p in 0..h * w {
        let a = &aj.data[p * c..(p + 1) * c];
        Projections::project(&proj.key, oc, c, a, &mut keys[p * oc..(p + 1) * oc]);
        Projections::project(&proj.value, oc, c, a, &mut values[p * oc..(p + 1) * oc]);
    }
    let n = window * window;
    let scale = 1.0 / (oc as f64).sqrt();
    let mut weights = vec![0.0; h * w * n];
    let mut out = ai.clone();
    let mut q = vec![0.0; oc];
    let mut logits = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            Projections::project(&proj.query, oc, c, ai.at(y, x), &mut q);
            let mut max = f64::NEG_INFINITY;
            for (k, l) in logits.iter_mut().enumerate() {
                let (ny, nx) = neighbor(h, w, window, y, x, k);
                let p = ny * w + nx;
                *l = scale
                    * q.iter()
                        .zip(&keys[p * oc..(p + 1) * oc])
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                max = max.max(*l);
            }
            let row = &mut weights[(y * w + x) * n..(y * w + x + 1) * n];
            let mut total = 0.0;
            for (r, l) in row.iter_mut().zip(&logits) {
                *r = (l - max).exp();
                total += *r;
            }
            row.iter_mut().for_each(|r| *r /= total);
            let target = out.at_mut(y, x);
            for (k, &s) in row.iter().enumerate() {
                let (ny, nx) = neighbor(h, w, window, y, x, k);
                let p = ny * w + nx;
                for (t, v) in target.iter_mut().zip(&values[p * oc..(p + 1) * oc]) {
                    *t += s * v;
                }
            }
        }
    }
    Ok((
        out,
        AttentionMap {
            height: h,
            width: w,
            window,
            weights,
        },
    ))
}

/// Per-position 2-vectors `(dx, dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    pub height: usize,
    pub width: usize,
    /// Interleaved `(dx, dy)` pairs, row-major.
    pub vectors: Vec<f64>,
}

impl MotionField {
    pub fn zeros(height: usize, width: usize) -> Self {
        MotionField {
            height,
            width,
            vectors: vec![0.0; 2 * height * width],
        }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> (f64, f64) {
        let o = 2 * (y * self.width + x);
        (self.vectors[o], self.vectors[o + 1])
    }

    pub fn scaled(&self, factor: f64) -> MotionField {
        MotionField {
            height: self.height,
            width: self.width,
            vectors: self.vectors.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Expected neighbor coordinate under the attention weights minus the own
/// coordinate.
pub fn motion_vector(s: &AttentionMap) -> MotionField {
    let mut m = MotionField::zeros(s.height, s.width);
    for y in 0..s.height {
        for x in 0..s.width {
            let (mut ex, mut ey) = (0.0, 0.0);
            for (k, &p) in s.row(y, x).iter().enumerate() {
                let (ny, nx) = s.neighbor(y, x, k);
                ex += p * nx as f64;
                ey += p * ny as f64;
            }
            let o = 2 * (y * s.width + x);
            m.vectors[o] = ex - x as f64;
            m.vectors[o + 1] = ey - y as f64;
        }
    }
    m
}

/// Motion to an intermediate time under locally linear motion:
/// `(Δ / gap)·M`, for `0 < Δ < gap`.
pub fn scale_motion(m: &MotionField, delta: f64, gap: f64) -> Result<MotionField> {
    if !(delta > 0.0 && delta < gap) {
        return Err(Error::invalid(format!(
            "offset {delta} must lie strictly inside (0, {gap})"
        )));
    }
    Ok(m.scaled(delta / gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_key_frame_gives_uniform_weights() {
        let ai = FeatureMap::new(3, 3, 2, (0..18).map(|v| v as f64 * 0.1).collect()).unwrap();
        let aj = FeatureMap::new(3, 3, 2, vec![0.5; 18]).unwrap();
        let proj = Projections::new(
            2,
            2,
            vec![1.0, 0.3, -0.2, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let (_, s) = interframe_attention(&ai, &aj, 3, &proj).unwrap();
        assert!(s.weights.iter().all(|&p| (p - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn point_mass_gives_unit_motion() {
        let mut weights = vec![0.0; 9 * 9];
        // Position (1,1) of a 3×3 grid, slot for offset (dy, dx) = (0, +1).
        let n = 9;
        weights[4 * n + 5] = 1.0;
        let s = AttentionMap {
            height: 3,
            width: 3,
            window: 3,
            weights,
        };
        assert_eq!(motion_vector(&s).at(1, 1), (1.0, 0.0));
    }

    #[test]
    fn rejects_even_or_oversized_window() {
        let a = FeatureMap::zeros(4, 4, 2);
        let proj = Projections::gaussian_kernel(0, 1.0);
        assert!(interframe_attention(&a, &a, 2, &proj).is_err());
        assert!(interframe_attention(&a, &a, 5, &proj).is_err());
    }

    #[test]
    fn scale_motion_bounds() {
        let m = MotionField {
            height: 1,
            width: 1,
            vectors: vec![4.0, -2.0],
        };
        assert_eq!(scale_motion(&m, 1.0, 4.0).unwrap().vectors, vec![1.0, -0.5]);
        assert!(scale_motion(&m, 0.0, 4.0).is_err());
        assert!(scale_motion(&m, 4.0, 4.0).is_err());
    }
}

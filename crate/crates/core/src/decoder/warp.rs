//! Bilinear backward warping and mask-weighted fusion.

use super::attention::MotionField;
use crate::encoder::{Frame, CHANNELS};
use crate::error::{Error, Result};

/// Sample `frame` at real coordinates `(x, y)` with bilinear interpolation;
/// coordinates outside the grid are clamped to the border.
#[inline]
pub fn bilinear(frame: &Frame, x: f64, y: f64, out: &mut [f64; CHANNELS]) {
    let (w, h) = (frame.width as f64, frame.height as f64);
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(frame.width - 1);
    let y1 = (y0 + 1).min(frame.height - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    for (c, o) in out.iter_mut().enumerate() {
        let top = frame.at(y0, x0, c) * (1.0 - fx) + frame.at(y0, x1, c) * fx;
        let bottom = frame.at(y1, x0, c) * (1.0 - fx) + frame.at(y1, x1, c) * fx;
        *o = top * (1.0 - fy) + bottom * fy;
    }
}

/// `out(p) = frame(p + flow(p))`.
pub fn backward_warp(frame: &Frame, flow: &MotionField) -> Result<Frame> {
    if flow.height != frame.height || flow.width != frame.width {
        return Err(Error::ShapeMismatch {
            op: "backward_warp",
            expected: vec![frame.height, frame.width],
            found: vec![flow.height, flow.width],
        });
    }
    let mut out = Frame::zeros(frame.height, frame.width);
    let mut px = [0.0; CHANNELS];
    for y in 0..frame.height {
        for x in 0..frame.width {
            let (dx, dy) = flow.at(y, x);
            if dx == 0.0 && dy == 0.0 {
                for c in 0..CHANNELS {
                    px[c] = frame.at(y, x, c);
                }
            } else {
                bilinear(frame, x as f64 + dx, y as f64 + dy, &mut px);
            }
            let o = (y * frame.width + x) * CHANNELS;
            out.values[o..o + CHANNELS].copy_from_slice(&px);
        }
    }
    Ok(out)
}

/// Bilinear resize of a motion field to `height × width`, scaling vectors by
/// the resolution ratio. Identity when the extents already match.
pub fn upsample_motion(m: &MotionField, height: usize, width: usize) -> MotionField {
    if m.height == height && m.width == width {
        return m.clone();
    }
    let sy = m.height as f64 / height as f64;
    let sx = m.width as f64 / width as f64;
    let mut out = MotionField::zeros(height, width);
    for y in 0..height {
        for x in 0..width {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (m.height - 1) as f64);
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (m.width - 1) as f64);
            let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(m.height - 1), (x0 + 1).min(m.width - 1));
            let (ty, tx) = (fy - y0 as f64, fx - x0 as f64);
            for k in 0..2 {
                let g = |yy: usize, xx: usize| m.vectors[2 * (yy * m.width + xx) + k];
                let v = (g(y0, x0) * (1.0 - tx) + g(y0, x1) * tx) * (1.0 - ty)
                    + (g(y1, x0) * (1.0 - tx) + g(y1, x1) * tx) * ty;
                out.vectors[2 * (y * width + x) + k] = v / if k == 0 { sx } else { sy };
            }
        }
    }
    out
}

/// `O ⊙ BW(x_i, F_i) + (1 − O) ⊙ BW(x_j, F_j)`, with `mask` holding one
/// weight per pixel.
pub fn warp_fuse(
    xi: &Frame,
    xj: &Frame,
    flow_i: &MotionField,
    flow_j: &MotionField,
    mask: &[f64],
) -> Result<Frame> {
    if xi.height != xj.height || xi.width != xj.width {
        return Err(Error::ShapeMismatch {
            op: "warp_fuse",
            expected: vec![xi.height, xi.width],
            found: vec![xj.height, xj.width],
        });
    }
    if mask.len() != xi.height * xi.width {
        return Err(Error::ShapeMismatch {
            op: "warp_fuse mask",
            expected: vec![xi.height, xi.width],
            found: vec![mask.len()],
        });
    }
    let wi = backward_warp(xi, flow_i)?;
    let wj = backward_warp(xj, flow_j)?;
    Ok(fuse(&wi, &wj, mask))
}

/// Pointwise `O·a + (1 − O)·b`.
pub fn fuse(a: &Frame, b: &Frame, mask: &[f64]) -> Frame {
    let mut out = Frame::zeros(a.height, a.width);
    for (p, &o) in mask.iter().enumerate() {
        for c in 0..CHANNELS {
            let k = p * CHANNELS + c;
            out.values[k] = o * a.values[k] + (1.0 - o) * b.values[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Frame {
        Frame {
            height: h,
            width: w,
            values: (0..h * w * CHANNELS).map(|v| v as f64).collect(),
        }
    }

    #[test]
    fn zero_flow_mask_extremes() {
        let (a, b) = (
            ramp(3, 4),
            Frame {
                height: 3,
                width: 4,
                values: vec![7.0; 36],
            },
        );
        let zero = MotionField::zeros(3, 4);
        assert_eq!(warp_fuse(&a, &b, &zero, &zero, &[1.0; 12]).unwrap(), a);
        assert_eq!(warp_fuse(&a, &b, &zero, &zero, &[0.0; 12]).unwrap(), b);
    }

    #[test]
    fn integer_flow_shifts_with_border_clamp() {
        let a = ramp(1, 3);
        let flow = MotionField {
            height: 1,
            width: 3,
            vectors: vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        };
        let out = backward_warp(&a, &flow).unwrap();
        assert_eq!(&out.values[..3], &a.values[3..6]);
        assert_eq!(&out.values[6..], &a.values[6..]);
    }

    #[test]
    fn same_size_upsample_is_identity() {
        let m = MotionField {
            height: 1,
            width: 2,
            vectors: vec![0.5, 1.0, -2.0, 3.0],
        };
        assert_eq!(upsample_motion(&m, 1, 2), m);
    }
}

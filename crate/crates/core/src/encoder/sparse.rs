//! Top-k sparse coding of latent residuals.

use crate::error::{Error, Result};

/// k-sparse vector relative to a reference keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDiff {
    /// Index of the keyframe this residual is taken against.
    pub base_index: usize,
    /// Ascending, unique positions `< dim`.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub dim: usize,
}

impl SparseDiff {
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    /// Add this residual onto `base` in place.
    pub fn apply_to(&self, base: &mut [f64]) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            base[i] += v;
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Keep the `k` largest-magnitude entries; ties go to the lower index.
pub fn sparsify(residual: &[f64], k: usize, base_index: usize) -> Result<SparseDiff> {
    let d = residual.len();
    if k == 0 {
        return Err(Error::invalid("sparsity k must be at least 1"));
    }
    if k > d {
        return Err(Error::invalid(format!(
            "sparsity k = {k} exceeds the latent width {d}"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        residual[b]
            .abs()
            .total_cmp(&residual[a].abs())
            .then(a.cmp(&b))
    });
    let mut indices = order[..k].to_vec();
    indices.sort_unstable();
    let values = indices.iter().map(|&i| residual[i]).collect();
    Ok(SparseDiff {
        base_index,
        indices,
        values,
        dim: d,
    })
}

//! Greedy keyframe selection under an end-to-end latency budget.
//!
//! Selection starts from the two endpoint frames and repeatedly admits the
//! remaining frame whose summed difference to the current keyframe set is
//! largest, as long as the projected execution time stays within budget.
//! Frame indices are 0-based throughout.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::str::FromStr;

use super::cosine_diff;
use super::sparse::{sparsify, SparseDiff};
use crate::channel::{comm_time, ComputeTimeModel, LinkBudget};
use crate::error::{Error, Result};

/// How the pairwise difference `s(i, j)` between a candidate and a keyframe
/// is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorityKind {
    /// Norm of the top-k sparse code of the latent residual.
    #[default]
    SparseResidual,
    /// Cosine difference of the latents.
    Cosine,
}

impl FromStr for PriorityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(PriorityKind::SparseResidual),
            "cosine" => Ok(PriorityKind::Cosine),
            other => Err(Error::invalid(format!("unknown priority kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    pub t_max: f64,
    pub link: LinkBudget,
    pub h: f64,
    pub noise_power: f64,
    pub compute: ComputeTimeModel,
    /// Retained coefficients per sparse residual.
    pub k: usize,
    pub priority: PriorityKind,
}

impl SelectionParams {
    /// Projected execution time when `count` keyframes are sent.
    pub fn exec_time_for(&self, count: usize, dim: usize) -> f64 {
        let dims = payload_dims_for(count, dim, self.k);
        let rate = match self.link.rate(self.h, self.noise_power) {
            Ok(r) => r,
            Err(_) => return f64::INFINITY,
        };
        match comm_time(&dims, rate) {
            Ok(t) => self.compute.exec_time(t),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Transmit payload: the first keyframe's full latent followed by one
/// sparse residual per subsequent keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyframePayload {
    pub base: Vec<f64>,
    pub residuals: Vec<SparseDiff>,
}

impl KeyframePayload {
    /// Build closed-loop residuals: each keyframe is coded against the
    /// latent the receiver will hold for the previous keyframe, so sparse
    /// truncation errors do not accumulate.
    pub fn encode(latents: &[Vec<f64>], indices: &[usize], k: usize) -> Result<Self> {
        let first = *indices
            .first()
            .ok_or_else(|| Error::invalid("no keyframes to encode"))?;
        let base = latents[first].clone();
        let mut held = base.clone();
        let mut residuals = Vec::with_capacity(indices.len().saturating_sub(1));
        for w in indices.windows(2) {
            let target = &latents[w[1]];
            let residual: Vec<f64> = target.iter().zip(&held).map(|(a, b)| a - b).collect();
            let code = sparsify(&residual, k, w[0])?;
            code.apply_to(&mut held);
            residuals.push(code);
        }
        Ok(KeyframePayload { base, residuals })
    }

    /// Latents of every keyframe as the receiver reconstructs them.
    pub fn decode(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.residuals.len() + 1);
        let mut cur = self.base.clone();
        out.push(cur.clone());
        for r in &self.residuals {
            r.apply_to(&mut cur);
            out.push(cur.clone());
        }
        out
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.base.len())
            .chain(self.residuals.iter().map(|r| 2 * r.k()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframePlan {
    /// Strictly increasing, always containing `0` and `F − 1`.
    pub indices: Vec<usize>,
    pub payload: KeyframePayload,
    /// Projected end-to-end execution time of this plan.
    pub t_exe: f64,
}

impl KeyframePlan {
    pub fn payload_dims(&self) -> Vec<usize> {
        self.payload.dims()
    }
}

/// `[d, 2k, 2k, …]` for `count` keyframes.
pub fn payload_dims_for(count: usize, dim: usize, k: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    std::iter::once(dim)
        .chain(std::iter::repeat(2 * k).take(count - 1))
        .collect()
}

/// Pairwise difference used for selection priority.
pub fn pair_score(a: &[f64], b: &[f64], kind: PriorityKind, k: usize) -> Result<f64> {
    match kind {
        PriorityKind::Cosine => cosine_diff(a, b),
        PriorityKind::SparseResidual => {
            let residual: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            Ok(sparsify(&residual, k, 0)?.norm())
        }
    }
}

/// Sum of pair scores of `candidate` against `selected` (ascending order).
pub fn priority(
    latents: &[Vec<f64>],
    candidate: usize,
    selected: &[usize],
    kind: PriorityKind,
    k: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for &j in selected {
        total += pair_score(&latents[candidate], &latents[j], kind, k)
            .map_err(|e| Error::invalid(format!("frames {candidate} and {j}: {e}")))?;
    }
    Ok(total)
}

#[derive(Debug, PartialEq)]
struct Entry {
    priority: f64,
    frame: usize,
    generation: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max priority first; among equals, the lower frame index.
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.frame.cmp(&self.frame))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Choose keyframes from per-frame latents under the latency budget.
pub fn select_keyframes(latents: &[Vec<f64>], params: &SelectionParams) -> Result<KeyframePlan> {
    let frames = latents.len();
    if frames < 2 {
        return Err(Error::invalid(format!(
            "keyframe selection needs at least 2 frames, got {frames}"
        )));
    }
    let dim = latents[0].len();
    if latents.iter().any(|l| l.len() != dim) {
        return Err(Error::invalid("latents have inconsistent widths"));
    }
    if params.k == 0 || params.k > dim {
        return Err(Error::invalid(format!(
            "sparsity k = {} must lie in 1..={dim}",
            params.k
        )));
    }
    params.compute.validate()?;

    let mut selected = vec![0, frames - 1];
    let t_min = params.exec_time_for(2, dim);
    if !(t_min <= params.t_max) {
        return Err(Error::Infeasible {
            min_t_exe: t_min,
            t_max: params.t_max,
        });
    }
    let mut t_exe = t_min;
    let mut in_plan = vec![false; frames];
    in_plan[0] = true;
    in_plan[frames - 1] = true;

    let mut heap = BinaryHeap::new();
    let mut generation = 0;
    let push_all =
        |heap: &mut BinaryHeap<Entry>, selected: &[usize], in_plan: &[bool], generation| {
            for i in 0..frames {
                if !in_plan[i] {
                    let p = priority(latents, i, selected, params.priority, params.k)?;
                    heap.push(Entry {
                        priority: p,
                        frame: i,
                        generation,
                    });
                }
            }
            Ok::<(), Error>(())
        };
    push_all(&mut heap, &selected, &in_plan, generation)?;

    while let Some(top) = heap.pop() {
        if top.generation != generation || in_plan[top.frame] {
            continue;
        }
        let candidate_time = params.exec_time_for(selected.len() + 1, dim);
        if candidate_time > params.t_max {
            // Every frame costs the same to add, so nothing else fits either.
            break;
        }
        let pos = selected.partition_point(|&j| j < top.frame);
        selected.insert(pos, top.frame);
        in_plan[top.frame] = true;
        t_exe = candidate_time;
        generation += 1;
        push_all(&mut heap, &selected, &in_plan, generation)?;
    }

    let payload = KeyframePayload::encode(latents, &selected, params.k)?;
    Ok(KeyframePlan {
        indices: selected,
        payload,
        t_exe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t_max: f64) -> SelectionParams {
        SelectionParams {
            t_max,
            link: LinkBudget::new(5e6, 1.0, 10.0).unwrap(),
            h: 1.0,
            noise_power: 0.1,
            compute: ComputeTimeModel::default(),
            k: 2,
            priority: PriorityKind::SparseResidual,
        }
    }

    #[test]
    fn two_frames_select_both() {
        let lat = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(
            select_keyframes(&lat, &params(1.0)).unwrap().indices,
            vec![0, 1]
        );
    }

    #[test]
    fn infeasible_reports_minimum() {
        let lat = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = params(1e-9);
        match select_keyframes(&lat, &p) {
            Err(Error::Infeasible { min_t_exe, .. }) => {
                assert!((min_t_exe - p.exec_time_for(2, 2)).abs() < 1e-18)
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_gain_is_infeasible() {
        let lat = vec![vec![1.0], vec![2.0]];
        let mut p = params(10.0);
        p.k = 1;
        p.h = 0.0;
        assert!(matches!(
            select_keyframes(&lat, &p),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn payload_dims_arithmetic() {
        assert_eq!(payload_dims_for(2, 64, 8), vec![64, 16]);
        assert_eq!(payload_dims_for(3, 4, 4), vec![4, 8, 8]);
    }

    #[test]
    fn closed_loop_payload_round_trips_at_full_k() {
        let lat = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]];
        let payload = KeyframePayload::encode(&lat, &[0, 1, 2], 2).unwrap();
        assert_eq!(payload.decode(), lat);
    }
}

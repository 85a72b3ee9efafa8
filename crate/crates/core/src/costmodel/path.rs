use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{merge_indices, union_indices, TensorNetwork};
use crate::rng::{stream_rng, PURPOSE_PATH_SEARCH};
use crate::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 64;
pub const MAX_OPTIMAL_TENSORS: usize = 12;

/// Pairwise merges in SSA form: tensors `0..n` are the inputs and merge `k` creates
/// tensor `n + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionPath {
    pub steps: Vec<(usize, usize)>,
    /// Cost of each merge, `2^(log2 size of the index union)`.
    pub step_costs: Vec<f64>,
    pub total_flops: f64,
    /// log2 size of the largest tensor produced by a merge.
    pub largest_log2_size: f64,
    pub final_indices: Vec<usize>,
}

impl ContractionPath {
    /// Largest intermediate rank for dimension-2 networks.
    pub fn largest_rank(&self) -> usize {
        self.largest_log2_size.round() as usize
    }
}

/// Intermediate data of a path needed for slicing.
pub(crate) struct Replay {
    pub path: ContractionPath,
    pub unions: Vec<Vec<usize>>,
    pub results: Vec<Vec<usize>>,
}

pub(crate) fn replay_full(tn: &TensorNetwork, steps: &[(usize, usize)]) -> Result<Replay> {
    let n = tn.n_tensors();
    if n > 0 && steps.len() != n - 1 {
        return Err(Error::Network(format!("path has {} merges for {n} tensors", steps.len())));
    }
    let mut live: Vec<Option<Vec<usize>>> = tn.tensors.iter().cloned().map(Some).collect();
    let mut unions = Vec::with_capacity(steps.len());
    let mut results = Vec::with_capacity(steps.len());
    let mut step_costs = Vec::with_capacity(steps.len());
    let mut largest = 0.0f64;
    for &(a, b) in steps {
        if a == b {
            return Err(Error::Network(format!("merge of tensor {a} with itself")));
        }
        let ta = live.get_mut(a).and_then(Option::take).ok_or_else(|| Error::Network(format!("tensor {a} is not live")))?;
        let tb = live.get_mut(b).and_then(Option::take).ok_or_else(|| Error::Network(format!("tensor {b} is not live")))?;
        let u = union_indices(&ta, &tb);
        let r = merge_indices(&ta, &tb);
        step_costs.push(tn.log2_size(&u).exp2());
        largest = largest.max(tn.log2_size(&r));
        live.push(Some(r.clone()));
        unions.push(u);
        results.push(r);
    }
    let final_indices = if n == 0 { Vec::new() } else { live.last().cloned().flatten().unwrap_or_default() };
    let mut expect = tn.open.clone();
    expect.sort_unstable();
    if n > 0 && final_indices != expect {
        return Err(Error::Network("final tensor does not carry exactly the open indices".into()));
    }
    let total_flops = step_costs.iter().sum();
    Ok(Replay {
        path: ContractionPath { steps: steps.to_vec(), step_costs, total_flops, largest_log2_size: largest, final_indices },
        unions,
        results,
    })
}

/// Checks a path and recomputes its costs.
pub fn replay_path(tn: &TensorNetwork, steps: &[(usize, usize)]) -> Result<ContractionPath> {
    Ok(replay_full(tn, steps)?.path)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    key: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // reversed so that BinaryHeap pops the smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One greedy pass scoring a merge by `size(C) - alpha (size(A) + size(B))`, optionally
/// perturbed by Gumbel noise. `alpha = 1, temperature = 0` is the plain size-growth greedy.
fn greedy_once<R: Rng>(tn: &TensorNetwork, alpha: f64, temperature: f64, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let n = tn.n_tensors();
    let mut live: Vec<Option<Vec<usize>>> = tn.tensors.iter().cloned().map(Some).collect();
    let mut owners = tn.owners();
    let mut heap = BinaryHeap::new();
    let score = |live: &[Option<Vec<usize>>], a: usize, b: usize, rng: &mut R| {
        let (ta, tb) = (live[a].as_ref().expect("live"), live[b].as_ref().expect("live"));
        let r = merge_indices(ta, tb);
        let clamp = |x: f64| x.min(1000.0).exp2();
        let growth = clamp(tn.log2_size(&r)) - alpha * (clamp(tn.log2_size(ta)) + clamp(tn.log2_size(tb)));
        let mut key = growth.signum() * growth.abs().ln_1p();
        if temperature > 0.0 {
            let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            key -= temperature * -(-u.ln()).ln();
        }
        key
    };
    let initial: BTreeSet<(usize, usize)> =
        owners.iter().filter(|o| o[1] != usize::MAX).map(|o| (o[0].min(o[1]), o[0].max(o[1]))).collect();
    for (a, b) in initial {
        heap.push(Candidate { key: score(&live, a, b, rng), a, b });
    }
    let mut steps = Vec::with_capacity(n.saturating_sub(1));
    while let Some(Candidate { a, b, .. }) = heap.pop() {
        if live[a].is_none() || live[b].is_none() {
            continue;
        }
        let ta = live[a].take().expect("live");
        let tb = live[b].take().expect("live");
        let r = merge_indices(&ta, &tb);
        let c = live.len();
        for &i in &r {
            for slot in owners[i].iter_mut() {
                if *slot == a || *slot == b {
                    *slot = c;
                }
            }
        }
        let neighbours: BTreeSet<usize> =
            r.iter().flat_map(|&i| owners[i]).filter(|&o| o != c && o != usize::MAX).collect();
        live.push(Some(r));
        steps.push((a, b));
        for o in neighbours {
            heap.push(Candidate { key: score(&live, o, c, rng), a: o, b: c });
        }
    }
    let remaining = live.iter().filter(|t| t.is_some()).count();
    if remaining > 1 {
        return Err(Error::Disconnected(remaining));
    }
    Ok(steps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSearch {
    pub best: ContractionPath,
    pub best_restart: usize,
    /// Total cost found by each restart, in restart order.
    pub restart_costs: Vec<f64>,
}

/// Randomized greedy search: restart 0 is plain greedy, later restarts draw a random
/// `alpha` and perturb the merge scores with Gumbel noise at a random temperature. The cheapest path wins, ties
/// broken by restart index.
pub fn find_path_greedy(tn: &TensorNetwork, seed: u64, restarts: usize) -> Result<PathSearch> {
    if tn.n_tensors() == 0 {
        return Err(Error::Network("empty network".into()));
    }
    let components = tn.components();
    if components > 1 {
        return Err(Error::Disconnected(components));
    }
    let restarts = restarts.max(1);
    let run = |r: usize| -> Result<ContractionPath> {
        let mut rng = stream_rng(seed, PURPOSE_PATH_SEARCH, r as u64);
        let (alpha, temperature) = if r == 0 { (1.0, 0.0) } else { (rng.gen_range(0.0..1.5), rng.gen_range(0.05..1.5)) };
        replay_path(tn, &greedy_once(tn, alpha, temperature, &mut rng)?)
    };
    #[cfg(feature = "parallel")]
    let paths: Vec<Result<ContractionPath>> = (0..restarts).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let paths: Vec<Result<ContractionPath>> = (0..restarts).map(run).collect();
    let paths: Vec<ContractionPath> = paths.into_iter().collect::<Result<_>>()?;
    let restart_costs: Vec<f64> = paths.iter().map(|p| p.total_flops).collect();
    let best_restart = (0..paths.len())
        .min_by(|&i, &j| restart_costs[i].total_cmp(&restart_costs[j]).then(i.cmp(&j)))
        .expect("at least one restart");
    Ok(PathSearch { best: paths[best_restart].clone(), best_restart, restart_costs })
}

/// Exact minimum-cost path by dynamic programming over tensor subsets.
pub fn find_path_optimal(tn: &TensorNetwork) -> Result<ContractionPath> {
    let n = tn.n_tensors();
    if n == 0 || n > MAX_OPTIMAL_TENSORS {
        return Err(Error::InvalidArgument(format!("exhaustive search supports 1..={MAX_OPTIMAL_TENSORS} tensors, got {n}")));
    }
    let full = (1usize << n) - 1;
    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); full + 1];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        indices[mask] = merge_indices(&indices[mask & (mask - 1)], &tn.tensors[low]);
    }
    let mut cost = vec![f64::INFINITY; full + 1];
    let mut split = vec![0usize; full + 1];
    for i in 0..n {
        cost[1 << i] = 0.0;
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        let low = mask & mask.wrapping_neg();
        // enumerate proper submasks containing the lowest bit once per unordered pair
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            if sub & low != 0 {
                let rest = mask ^ sub;
                let merge = tn.log2_size(&union_indices(&indices[sub], &indices[rest])).exp2();
                let c = cost[sub] + cost[rest] + merge;
                if c < cost[mask] {
                    cost[mask] = c;
                    split[mask] = sub;
                }
            }
            sub = (sub - 1) & mask;
        }
    }
    fn build(mask: usize, split: &[usize], steps: &mut Vec<(usize, usize)>, n: usize) -> usize {
        if mask.count_ones() == 1 {
            return mask.trailing_zeros() as usize;
        }
        let a = build(split[mask], split, steps, n);
        let b = build(mask ^ split[mask], split, steps, n);
        steps.push((a, b));
        n + steps.len() - 1
    }
    let mut steps = Vec::with_capacity(n - 1);
    build(full, &split, &mut steps, n);
    replay_path(tn, &steps)
}

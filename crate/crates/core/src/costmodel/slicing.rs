use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::network::TensorNetwork;
use super::path::{replay_full, ContractionPath};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicedPath {
    pub sliced: Vec<usize>,
    /// Number of independent slices, the product of sliced dimensions.
    pub n_slices: f64,
    pub per_slice_flops: f64,
    pub total_flops: f64,
    pub largest_log2_size: f64,
}

fn evaluate(tn: &TensorNetwork, unions: &[Vec<usize>], results: &[Vec<usize>], sliced: &BTreeSet<usize>) -> (f64, f64) {
    let size = |idx: &[usize]| idx.iter().filter(|i| !sliced.contains(i)).map(|&i| tn.log2_dims[i]).sum::<f64>();
    let per_slice: f64 = unions.iter().map(|u| size(u).exp2()).sum();
    let largest = results.iter().map(|r| size(r)).fold(0.0, f64::max);
    (per_slice, largest)
}

/// Fixes closed indices one at a time until every intermediate on `path` has log2 size at
/// most `max_log2_size`. Each round picks the index shared by the most over-size
/// intermediates, preferring the cheapest resulting total.
pub fn slice_network(tn: &TensorNetwork, path: &ContractionPath, max_log2_size: f64) -> Result<SlicedPath> {
    let open_size = tn.log2_size(&tn.open);
    if open_size > max_log2_size {
        return Err(Error::SliceCap {
            cap: max_log2_size,
            reason: format!("the open indices alone have log2 size {open_size}"),
        });
    }
    let replay = replay_full(tn, &path.steps)?;
    let open: BTreeSet<usize> = tn.open.iter().copied().collect();
    let mut sliced = BTreeSet::new();
    let slice_dims = |s: &BTreeSet<usize>| s.iter().map(|&i| tn.log2_dims[i]).sum::<f64>().exp2();
    loop {
        let (per_slice, largest) = evaluate(tn, &replay.unions, &replay.results, &sliced);
        if largest <= max_log2_size + 1e-9 {
            let n_slices = slice_dims(&sliced);
            return Ok(SlicedPath {
                sliced: sliced.into_iter().collect(),
                n_slices,
                per_slice_flops: per_slice,
                total_flops: n_slices * per_slice,
                largest_log2_size: largest,
            });
        }
        let size = |idx: &[usize]| idx.iter().filter(|i| !sliced.contains(i)).map(|&i| tn.log2_dims[i]).sum::<f64>();
        let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
        for r in replay.results.iter().filter(|r| size(r) > max_log2_size + 1e-9) {
            for &i in r.iter().filter(|i| !open.contains(i) && !sliced.contains(i)) {
                *hits.entry(i).or_default() += 1;
            }
        }
        let Some(&best_hits) = hits.values().max() else {
            return Err(Error::SliceCap { cap: max_log2_size, reason: "no sliceable index left".into() });
        };
        let mut best: Option<(f64, usize)> = None;
        for (&i, _) in hits.iter().filter(|(_, &h)| h == best_hits) {
            let mut trial = sliced.clone();
            trial.insert(i);
            let (ps, _) = evaluate(tn, &replay.unions, &replay.results, &trial);
            let total = slice_dims(&trial) * ps;
            if best.map_or(true, |(c, _)| total < c) {
                best = Some((total, i));
            }
        }
        sliced.insert(best.expect("candidate exists").1);
    }
}

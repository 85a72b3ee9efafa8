use std::collections::BTreeSet;

use rand::Rng;

use crate::circuit::Circuit;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Tensors as sorted index lists. Every index lives on one tensor (open) or two
/// (contracted). Dimensions are stored as log2 so that qubit wires have weight 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorNetwork {
    pub tensors: Vec<Vec<usize>>,
    pub log2_dims: Vec<f64>,
    pub open: Vec<usize>,
}

impl TensorNetwork {
    pub fn new(mut tensors: Vec<Vec<usize>>, log2_dims: Vec<f64>, open: Vec<usize>) -> Result<Self> {
        tensors.iter_mut().for_each(|t| t.sort_unstable());
        let tn = Self { tensors, log2_dims, open };
        tn.validate()?;
        Ok(tn)
    }

    /// Qubit-wire network where every index has dimension 2.
    pub fn binary(tensors: Vec<Vec<usize>>, n_indices: usize, open: Vec<usize>) -> Result<Self> {
        Self::new(tensors, vec![1.0; n_indices], open)
    }

    pub fn n_tensors(&self) -> usize {
        self.tensors.len()
    }

    pub fn n_indices(&self) -> usize {
        self.log2_dims.len()
    }

    pub fn n_contracted(&self) -> usize {
        self.n_indices() - self.open.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![0usize; self.n_indices()];
        for t in &self.tensors {
            if t.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Network("index repeated on one tensor".into()));
            }
            for &i in t {
                *seen.get_mut(i).ok_or_else(|| Error::Network(format!("index {i} has no dimension")))? += 1;
            }
        }
        let open: BTreeSet<usize> = self.open.iter().copied().collect();
        if open.len() != self.open.len() {
            return Err(Error::Network("open index listed twice".into()));
        }
        for (i, &count) in seen.iter().enumerate() {
            let want = if open.contains(&i) { 1 } else { 2 };
            if count != want {
                return Err(Error::Network(format!("index {i} appears on {count} tensors, expected {want}")));
            }
        }
        Ok(())
    }

    pub fn log2_size(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.log2_dims[i]).sum()
    }

    /// For each index, the (at most two) tensors carrying it.
    pub(crate) fn owners(&self) -> Vec<[usize; 2]> {
        let mut out = vec![[usize::MAX; 2]; self.n_indices()];
        for (t, idx) in self.tensors.iter().enumerate() {
            for &i in idx {
                let slot = if out[i][0] == usize::MAX { 0 } else { 1 };
                out[i][slot] = t;
            }
        }
        out
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let n = self.n_tensors();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for [a, b] in self.owners() {
            if b != usize::MAX {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }
}

/// Indices of `a` and `b` minus the ones they share.
pub(crate) fn merge_indices(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Union of two sorted index lists.
pub(crate) fn union_indices(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Amplitude network of `circuit`: a rank-1 tensor per initial |0>, rank-2 per
/// single-qubit gate, rank-4 per two-qubit gate and a rank-1 projector on every qubit
/// not in `open_qubits` (linear ids).
pub fn circuit_to_tn(circuit: &Circuit, open_qubits: &BTreeSet<usize>) -> Result<TensorNetwork> {
    let positions = circuit.positions();
    if let Some(q) = open_qubits.iter().find(|q| !positions.contains_key(q)) {
        return Err(Error::Network(format!("open qubit {q} is not in the circuit")));
    }
    let mut tensors = Vec::new();
    let mut next = 0usize;
    let mut fresh = || {
        next += 1;
        next - 1
    };
    let mut wire: Vec<usize> = circuit.qubits.iter().map(|_| fresh()).collect();
    tensors.extend(wire.iter().map(|&w| vec![w]));
    for cycle in &circuit.cycles {
        for (p, _) in cycle.singles.iter().enumerate() {
            let w = fresh();
            tensors.push(vec![wire[p], w]);
            wire[p] = w;
        }
        for g in &cycle.gates {
            let (pa, pb) = (positions[&g.a], positions[&g.b]);
            let (wa, wb) = (fresh(), fresh());
            tensors.push(vec![wire[pa], wire[pb], wa, wb]);
            wire[pa] = wa;
            wire[pb] = wb;
        }
    }
    let mut open = Vec::new();
    for (p, &q) in circuit.qubits.iter().enumerate() {
        if open_qubits.contains(&q) {
            open.push(wire[p]);
        } else {
            tensors.push(vec![wire[p]]);
        }
    }
    TensorNetwork::binary(tensors, next, open)
}

/// Connected random network of dimension-2 indices: a random spanning tree, `extra`
/// additional edges and `n_open` dangling indices.
pub fn random_network(n_tensors: usize, extra: usize, n_open: usize, seed: u64) -> TensorNetwork {
    let mut rng = stream_rng(seed, 0x5eed, n_tensors as u64);
    let mut tensors = vec![Vec::new(); n_tensors];
    let mut next = 0;
    let mut edge = |tensors: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        tensors[a].push(next);
        tensors[b].push(next);
        next += 1;
    };
    for t in 1..n_tensors {
        let other = rng.gen_range(0..t);
        edge(&mut tensors, t, other);
    }
    if n_tensors >= 2 {
        for _ in 0..extra {
            let a = rng.gen_range(0..n_tensors);
            let b = (a + rng.gen_range(1..n_tensors)) % n_tensors;
            edge(&mut tensors, a, b);
        }
    }
    let mut open = Vec::new();
    for _ in 0..n_open {
        let t = rng.gen_range(0..n_tensors);
        tensors[t].push(next);
        open.push(next);
        next += 1;
    }
    TensorNetwork::binary(tensors, next, open).expect("generated network is well formed")
}

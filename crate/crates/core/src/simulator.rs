//! Exact state-vector simulation and bitstring sampling.
//!
//! Basis index convention: qubit 0 is the most significant bit, so on an `n`-qubit state
//! qubit `q` lives on bit `n - 1 - q` of the amplitude index. Two-qubit matrices act on
//! the local index `2 * bit(q1) + bit(q2)`.
//!
//! Parallel kernels split the amplitude vector into disjoint blocks; every amplitude is
//! computed by the same arithmetic regardless of the split, so results do not depend on
//! the thread count.

use num_complex::Complex64;
use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{fsim_matrix, Circuit, FsimParams, Mat2, Mat4, SingleQubitGate};
use crate::rng::{
    stream_rng, CHUNK, PURPOSE_IDEAL_SAMPLES, PURPOSE_READOUT, PURPOSE_SPECKLE_SAMPLES,
    PURPOSE_TRAJECTORIES,
};
use crate::samples::SampleSet;
use crate::{Error, Result};

pub const DEFAULT_MAX_QUBITS: usize = 30;

/// Vectors shorter than this are updated on the calling thread.
#[cfg(feature = "parallel")]
const PAR_MIN_LEN: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::numeric::compensated_sum(self.amps.iter().map(|a| a.norm_sqr()))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.amps[index as usize].norm_sqr()
    }

    pub fn apply_single(&mut self, qubit: usize, u: &Mat2) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange { qubit, n_qubits: self.n_qubits });
        }
        apply_single_kernel(&mut self.amps, self.n_qubits - 1 - qubit, u);
        Ok(())
    }

    pub fn apply_two(&mut self, q1: usize, q2: usize, u: &Mat4) -> Result<()> {
        for q in [q1, q2] {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
            }
        }
        if q1 == q2 {
            return Err(Error::RepeatedQubit(q1));
        }
        let (b1, b2) = (self.n_qubits - 1 - q1, self.n_qubits - 1 - q2);
        if b1 > b2 {
            apply_two_kernel(&mut self.amps, b1, b2, u);
        } else {
            apply_two_kernel(&mut self.amps, b2, b1, &swap_roles(u));
        }
        Ok(())
    }
}

/// Matrix with the two qubits' roles exchanged (SWAP · U · SWAP).
fn swap_roles(u: &Mat4) -> Mat4 {
    const P: [usize; 4] = [0, 2, 1, 3];
    let mut out = *u;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = u[P[i]][P[j]];
        }
    }
    out
}

#[inline]
fn single_pair(lo: &mut [Complex64], hi: &mut [Complex64], u: &Mat2) {
    let [[u00, u01], [u10, u11]] = *u;
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = u00 * x + u01 * y;
        *b = u10 * x + u11 * y;
    }
}

fn single_blocks(amps: &mut [Complex64], stride: usize, u: &Mat2) {
    for block in amps.chunks_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        single_pair(lo, hi, u);
    }
}

fn apply_single_kernel(amps: &mut [Complex64], bit: usize, u: &Mat2) {
    let stride = 1usize << bit;
    #[cfg(feature = "parallel")]
    if amps.len() >= PAR_MIN_LEN {
        let piece = (2 * stride).max(PAR_MIN_LEN / 4);
        if amps.len() / piece >= 4 {
            amps.par_chunks_mut(piece).for_each(|c| single_blocks(c, stride, u));
        } else {
            for block in amps.chunks_mut(2 * stride) {
                let (lo, hi) = block.split_at_mut(stride);
                lo.par_chunks_mut(PAR_MIN_LEN / 4)
                    .zip(hi.par_chunks_mut(PAR_MIN_LEN / 4))
                    .for_each(|(l, h)| single_pair(l, h, u));
            }
        }
        return;
    }
    single_blocks(amps, stride, u);
}

#[inline]
fn quad(
    a00: &mut [Complex64],
    a01: &mut [Complex64],
    a10: &mut [Complex64],
    a11: &mut [Complex64],
    u: &Mat4,
) {
    for i in 0..a00.len() {
        let v = [a00[i], a01[i], a10[i], a11[i]];
        let row = |r: usize| u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
        a00[i] = row(0);
        a01[i] = row(1);
        a10[i] = row(2);
        a11[i] = row(3);
    }
}

/// `hb > lb`; the high bit carries the first (more significant) local index bit.
fn two_blocks(amps: &mut [Complex64], hb: usize, lb: usize, u: &Mat4) {
    let (half, low) = (1usize << hb, 1usize << lb);
    for block in amps.chunks_mut(2 * half) {
        let (h0, h1) = block.split_at_mut(half);
        for (s0, s1) in h0.chunks_mut(2 * low).zip(h1.chunks_mut(2 * low)) {
            let (a00, a01) = s0.split_at_mut(low);
            let (a10, a11) = s1.split_at_mut(low);
            quad(a00, a01, a10, a11, u);
        }
    }
}

fn apply_two_kernel(amps: &mut [Complex64], hb: usize, lb: usize, u: &Mat4) {
    #[cfg(feature = "parallel")]
    if amps.len() >= PAR_MIN_LEN {
        let block = 2usize << hb;
        let piece = block.max(PAR_MIN_LEN / 4);
        if amps.len() / piece >= 4 {
            amps.par_chunks_mut(piece).for_each(|c| two_blocks(c, hb, lb, u));
            return;
        }
        let (half, low) = (1usize << hb, 1usize << lb);
        let grain = (PAR_MIN_LEN / 4).min(low);
        for block in amps.chunks_mut(block) {
            let (h0, h1) = block.split_at_mut(half);
            for (s0, s1) in h0.chunks_mut(2 * low).zip(h1.chunks_mut(2 * low)) {
                let (a00, a01) = s0.split_at_mut(low);
                let (a10, a11) = s1.split_at_mut(low);
                a00.par_chunks_mut(grain)
                    .zip(a01.par_chunks_mut(grain))
                    .zip(a10.par_chunks_mut(grain).zip(a11.par_chunks_mut(grain)))
                    .for_each(|((x00, x01), (x10, x11))| quad(x00, x01, x10, x11, u));
            }
        }
        return;
    }
    two_blocks(amps, hb, lb, u);
}

/// A circuit lowered to simulator positions. Two-qubit operations refer to a coupler
/// slot so that the gate matrices can be swapped without recompiling.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    pub n_qubits: usize,
    /// Couplers as linear-index pairs, one slot per distinct coupler.
    pub couplers: Vec<(usize, usize)>,
    /// Parameters the circuit carried for each slot.
    pub params: Vec<FsimParams>,
    pub layers: Vec<Vec<Op>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Single { q: usize, gate: SingleQubitGate },
    Two { q1: usize, q2: usize, slot: usize },
}

impl CompiledCircuit {
    pub fn new(circuit: &Circuit, max_qubits: usize) -> Result<Self> {
        if circuit.n_qubits() > max_qubits {
            return Err(Error::SizeLimit { n_qubits: circuit.n_qubits(), limit: max_qubits });
        }
        let positions = circuit.positions();
        let couplers = circuit.couplers();
        let params_map = circuit.params();
        let params = couplers.iter().map(|k| params_map.0[k]).collect();
        let slot_of = |a: usize, b: usize| couplers.binary_search(&(a, b)).expect("coupler listed");
        let mut layers = Vec::with_capacity(circuit.n_cycles());
        for cycle in &circuit.cycles {
            let mut ops = Vec::with_capacity(cycle.singles.len() + cycle.gates.len());
            ops.extend(cycle.singles.iter().enumerate().map(|(q, &gate)| Op::Single { q, gate }));
            for g in &cycle.gates {
                let q1 = *positions.get(&g.a).ok_or_else(|| Error::Circuit(format!("unknown qubit {}", g.a)))?;
                let q2 = *positions.get(&g.b).ok_or_else(|| Error::Circuit(format!("unknown qubit {}", g.b)))?;
                ops.push(Op::Two { q1, q2, slot: slot_of(g.a, g.b) });
            }
            layers.push(ops);
        }
        Ok(Self { n_qubits: circuit.n_qubits(), couplers, params, layers })
    }

    pub fn default_matrices(&self) -> Vec<Mat4> {
        self.params.iter().map(fsim_matrix).collect()
    }

    pub fn n_ops(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Runs from |0...0> with the given per-slot two-qubit matrices.
    pub fn run_with(&self, matrices: &[Mat4]) -> StateVector {
        let mut state = StateVector::zero(self.n_qubits);
        for layer in &self.layers {
            self.apply_layer(&mut state, layer, matrices);
        }
        state
    }

    pub fn apply_layer(&self, state: &mut StateVector, layer: &[Op], matrices: &[Mat4]) {
        for op in layer {
            apply_op(state, op, matrices);
        }
    }
}

fn apply_op(state: &mut StateVector, op: &Op, matrices: &[Mat4]) {
    let n = state.n_qubits;
    match *op {
        Op::Single { q, gate } => apply_single_kernel(&mut state.amps, n - 1 - q, &gate.matrix()),
        Op::Two { q1, q2, slot } => {
            state.apply_two(q1, q2, &matrices[slot]).expect("compiled ops are in range")
        }
    }
}

/// Size-limited simulator front end.
#[derive(Clone, Copy, Debug)]
pub struct Simulator {
    pub max_qubits: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Self { max_qubits: DEFAULT_MAX_QUBITS }
    }
}

impl Simulator {
    pub fn run(&self, circuit: &Circuit) -> Result<StateVector> {
        let compiled = CompiledCircuit::new(circuit, self.max_qubits)?;
        Ok(compiled.run_with(&compiled.default_matrices()))
    }
}

/// Final state of `circuit` from |0...0> under the default size limit.
pub fn run(circuit: &Circuit) -> Result<StateVector> {
    Simulator::default().run(circuit)
}

pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.probabilities()
}

/// Inverse-CDF sampler over a fixed distribution.
#[derive(Clone, Debug)]
pub struct CumulativeSampler {
    cdf: Vec<f64>,
}

impl CumulativeSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> u64 {
        let total = *self.cdf.last().expect("non-empty distribution");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) as u64
    }
}

#[cfg(feature = "parallel")]
fn chunked<F>(n_samples: usize, chunk: usize, f: F) -> Vec<u64>
where
    F: Fn(u64, usize) -> Vec<u64> + Sync,
{
    let n_chunks = n_samples.div_ceil(chunk);
    let parts: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| f(k as u64, chunk.min(n_samples - k * chunk)))
        .collect();
    parts.concat()
}

#[cfg(not(feature = "parallel"))]
fn chunked<F>(n_samples: usize, chunk: usize, f: F) -> Vec<u64>
where
    F: Fn(u64, usize) -> Vec<u64>,
{
    let n_chunks = n_samples.div_ceil(chunk);
    (0..n_chunks).flat_map(|k| f(k as u64, chunk.min(n_samples - k * chunk))).collect()
}

/// `n_samples` independent draws from the state's output distribution.
pub fn sample_ideal(state: &StateVector, n_samples: usize, seed: u64) -> SampleSet {
    let sampler = CumulativeSampler::new(&state.probabilities());
    let bits = chunked(n_samples, CHUNK, |k, len| {
        let mut rng = stream_rng(seed, PURPOSE_IDEAL_SAMPLES, k);
        (0..len).map(|_| sampler.draw(&mut rng)).collect()
    });
    SampleSet { n_qubits: state.n_qubits, bitstrings: bits }
}

/// Mixture sampling: ideal draw with probability `fidelity`, uniform otherwise.
pub fn sample_noisy_speckle(state: &StateVector, fidelity: f64, n_samples: usize, seed: u64) -> Result<SampleSet> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidArgument(format!("fidelity {fidelity} outside [0, 1]")));
    }
    let sampler = CumulativeSampler::new(&state.probabilities());
    let mask = (state.dim() - 1) as u64;
    let bits = chunked(n_samples, CHUNK, |k, len| {
        let mut rng = stream_rng(seed, PURPOSE_SPECKLE_SAMPLES, k);
        (0..len)
            .map(|_| {
                if rng.gen::<f64>() < fidelity {
                    sampler.draw(&mut rng)
                } else {
                    rng.gen::<u64>() & mask
                }
            })
            .collect()
    });
    Ok(SampleSet { n_qubits: state.n_qubits, bitstrings: bits })
}

/// Error probabilities used by the noisy samplers and the fidelity prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Pauli error per single-qubit gate.
    pub e1: f64,
    /// Pauli error per two-qubit gate.
    pub e2: f64,
    /// Readout error when the true outcome is 0.
    pub e_r0: f64,
    /// Readout error when the true outcome is 1.
    pub e_r1: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { e1: 0.0, e2: 0.0, e_r0: 0.0, e_r1: 0.0 }
    }

    /// Mean error rates measured with all gates operated simultaneously.
    pub fn simultaneous_defaults() -> Self {
        Self { e1: 0.0016, e2: 0.0060, e_r0: 0.0148, e_r1: 0.0303 }
    }

    pub fn gates_only(self) -> Self {
        Self { e_r0: 0.0, e_r1: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e1", self.e1), ("e2", self.e2), ("e_r0", self.e_r0), ("e_r1", self.e_r1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn mean_readout_error(&self) -> f64 {
        0.5 * (self.e_r0 + self.e_r1)
    }
}

/// Product of per-operation success probabilities, with readout counted once per qubit.
pub fn predicted_fidelity(circuit: &Circuit, noise: &NoiseModel) -> f64 {
    (1.0 - noise.e1).powi(circuit.n_single_gates() as i32)
        * (1.0 - noise.e2).powi(circuit.n_two_qubit_gates() as i32)
        * (1.0 - noise.mean_readout_error()).powi(circuit.n_qubits() as i32)
}

/// Flips each bit independently: 0 -> 1 with `e_r0`, 1 -> 0 with `e_r1`.
pub fn apply_readout_error(samples: &SampleSet, noise: &NoiseModel, seed: u64) -> SampleSet {
    let n = samples.n_qubits;
    let src = &samples.bitstrings;
    let bits = chunked(src.len(), CHUNK, |k, len| {
        let mut rng = stream_rng(seed, PURPOSE_READOUT, k);
        let start = k as usize * CHUNK;
        src[start..start + len]
            .iter()
            .map(|&b| {
                let mut out = b;
                for bit in 0..n {
                    let one = (b >> bit) & 1 == 1;
                    let rate = if one { noise.e_r1 } else { noise.e_r0 };
                    if rng.gen::<f64>() < rate {
                        out ^= 1 << bit;
                    }
                }
                out
            })
            .collect()
    });
    SampleSet { n_qubits: n, bitstrings: bits }
}

fn pauli(k: u8) -> Mat2 {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match k {
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        3 => [[o, z], [z, -o]],
        _ => [[o, z], [z, o]],
    }
}

/// Counts gathered while sampling trajectories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub trajectories: usize,
    pub injected_errors: u64,
    pub error_free: usize,
}

const TRAJECTORY_CHUNK: usize = 64;
/// Upper bound on memory spent caching intermediate states.
const CHECKPOINT_BYTES: usize = 256 << 20;

/// Pauli-trajectory sampler: after every gate a uniformly random non-identity Pauli on the
/// touched qubits is injected with probability `e1` (single-qubit gates) or `e2`
/// (two-qubit gates, 15 choices). Each trajectory yields one bitstring.
pub struct TrajectorySampler {
    compiled: CompiledCircuit,
    matrices: Vec<Mat4>,
    noise: NoiseModel,
    /// Index of the first op of each layer in the flattened op list.
    layer_start: Vec<usize>,
    ops: Vec<Op>,
    /// (layer index, state before that layer)
    checkpoints: Vec<(usize, StateVector)>,
    ideal: CumulativeSampler,
}

impl TrajectorySampler {
    pub fn new(circuit: &Circuit, noise: &NoiseModel, max_qubits: usize) -> Result<Self> {
        noise.validate()?;
        let compiled = CompiledCircuit::new(circuit, max_qubits)?;
        let matrices = compiled.default_matrices();
        let n_layers = compiled.layers.len();
        let state_bytes = 16usize << compiled.n_qubits;
        let keep = (CHECKPOINT_BYTES / state_bytes).clamp(1, n_layers.max(1));
        let every = n_layers.div_ceil(keep).max(1);
        let mut checkpoints = Vec::new();
        let mut state = StateVector::zero(compiled.n_qubits);
        for (i, layer) in compiled.layers.iter().enumerate() {
            if i % every == 0 {
                checkpoints.push((i, state.clone()));
            }
            compiled.apply_layer(&mut state, layer, &matrices);
        }
        if checkpoints.is_empty() {
            checkpoints.push((0, state.clone()));
        }
        let mut layer_start = Vec::with_capacity(n_layers);
        let mut ops = Vec::with_capacity(compiled.n_ops());
        for layer in &compiled.layers {
            layer_start.push(ops.len());
            ops.extend_from_slice(layer);
        }
        let ideal = CumulativeSampler::new(&state.probabilities());
        Ok(Self { compiled, matrices, noise: *noise, layer_start, ops, checkpoints, ideal })
    }

    fn layer_of(&self, op_index: usize) -> usize {
        self.layer_start.partition_point(|&s| s <= op_index) - 1
    }

    /// Runs one trajectory and draws `shots` bitstrings from its output into `out`.
    fn one<R: Rng>(&self, rng: &mut R, shots: usize, stats: &mut TrajectoryStats, out: &mut Vec<u64>) {
        let mut errors: Vec<(usize, u8)> = Vec::new();
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                Op::Single { .. } => {
                    if rng.gen::<f64>() < self.noise.e1 {
                        errors.push((i, rng.gen_range(1..4)));
                    }
                }
                Op::Two { .. } => {
                    if rng.gen::<f64>() < self.noise.e2 {
                        errors.push((i, rng.gen_range(1..16)));
                    }
                }
            }
        }
        stats.trajectories += 1;
        stats.injected_errors += errors.len() as u64;
        if errors.is_empty() {
            stats.error_free += 1;
            out.extend((0..shots).map(|_| self.ideal.draw(rng)));
            return;
        }
        let first_layer = self.layer_of(errors[0].0);
        let cp = self.checkpoints.partition_point(|(l, _)| *l <= first_layer) - 1;
        let (start_layer, ref start_state) = self.checkpoints[cp];
        let mut state = start_state.clone();
        let mut next_error = 0;
        for (i, op) in self.ops.iter().enumerate().skip(self.layer_start[start_layer]) {
            apply_op(&mut state, op, &self.matrices);
            while next_error < errors.len() && errors[next_error].0 == i {
                let code = errors[next_error].1;
                match *op {
                    Op::Single { q, .. } => state.apply_single(q, &pauli(code)).expect("in range"),
                    Op::Two { q1, q2, .. } => {
                        let (p1, p2) = (code / 4, code % 4);
                        if p1 != 0 {
                            state.apply_single(q1, &pauli(p1)).expect("in range");
                        }
                        if p2 != 0 {
                            state.apply_single(q2, &pauli(p2)).expect("in range");
                        }
                    }
                }
                next_error += 1;
            }
        }
        if shots > 1 {
            let sampler = CumulativeSampler::new(&state.probabilities());
            out.extend((0..shots).map(|_| sampler.draw(rng)));
            return;
        }
        let u = rng.gen::<f64>() * state.norm_sqr();
        let mut acc = 0.0;
        for (i, a) in state.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if acc > u {
                out.push(i as u64);
                return;
            }
        }
        out.push((state.dim() - 1) as u64);
    }

    fn chunk(&self, seed: u64, k: u64, len: usize, shots: usize) -> (Vec<u64>, TrajectoryStats) {
        let mut rng = stream_rng(seed, PURPOSE_TRAJECTORIES, k);
        let mut stats = TrajectoryStats::default();
        let mut bits = Vec::with_capacity(len);
        while bits.len() < len {
            let take = shots.min(len - bits.len());
            self.one(&mut rng, take, &mut stats, &mut bits);
        }
        (bits, stats)
    }

    /// One bitstring per trajectory.
    pub fn sample(&self, n_samples: usize, seed: u64) -> (SampleSet, TrajectoryStats) {
        self.sample_shots(n_samples, 1, seed)
    }

    /// `shots` bitstrings per trajectory. Bitstrings of one trajectory are correlated, which
    /// widens the spread of estimates built from them.
    pub fn sample_shots(&self, n_samples: usize, shots: usize, seed: u64) -> (SampleSet, TrajectoryStats) {
        let shots = shots.max(1);
        let per_chunk = TRAJECTORY_CHUNK * shots;
        let n_chunks = n_samples.div_ceil(per_chunk);
        let work = |k: usize| self.chunk(seed, k as u64, per_chunk.min(n_samples - k * per_chunk), shots);
        #[cfg(feature = "parallel")]
        let parts: Vec<_> = (0..n_chunks).into_par_iter().map(work).collect();
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<_> = (0..n_chunks).map(work).collect();
        let mut stats = TrajectoryStats::default();
        let mut bits = Vec::with_capacity(n_samples);
        for (b, s) in parts {
            bits.extend(b);
            stats.trajectories += s.trajectories;
            stats.injected_errors += s.injected_errors;
            stats.error_free += s.error_free;
        }
        (SampleSet { n_qubits: self.compiled.n_qubits, bitstrings: bits }, stats)
    }

    /// Expected number of injected errors per trajectory.
    pub fn expected_errors(&self) -> f64 {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Single { .. } => self.noise.e1,
                Op::Two { .. } => self.noise.e2,
            })
            .sum()
    }
}

/// Gate-error trajectories only; apply [`apply_readout_error`] separately for readout.
pub fn sample_trajectory(circuit: &Circuit, noise: &NoiseModel, n_samples: usize, seed: u64) -> Result<SampleSet> {
    Ok(TrajectorySampler::new(circuit, noise, DEFAULT_MAX_QUBITS)?.sample(n_samples, seed).0)
}

//! Patch-wise refitting of two-qubit gate parameters against measured bitstrings.
//!
//! The circuit is cut into non-overlapping patches. For each patch the parameters `γ` of
//! the couplers inside it (five per coupler, shared across cycles) are fitted by
//! minimizing `1 - F_XEB(γ, b_train)` with BFGS.

use std::collections::{BTreeMap, BTreeSet};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{fsim_matrix, Circuit, FsimParams, GateParams};
use crate::optimize::{bfgs_minimize_with_gradient, OptimizerConfig, Termination, TraceEntry};
use crate::samples::SampleSet;
use crate::simulator::{CompiledCircuit, DEFAULT_MAX_QUBITS};
use crate::topology::GridTopology;
use crate::xeb::{linear_xeb, ProbabilityRecord, XebEstimate};
use crate::{Error, Result};

/// Disjoint qubit sets plus the couplers each one contains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchPartition {
    pub patches: Vec<BTreeSet<usize>>,
    pub internal: Vec<Vec<(usize, usize)>>,
    pub cross: Vec<(usize, usize)>,
}

impl PatchPartition {
    pub fn from_patches(topology: &GridTopology, patches: Vec<BTreeSet<usize>>) -> Result<Self> {
        let mut owner = BTreeMap::new();
        for (i, p) in patches.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::Partition(format!("patch {i} has no qubits")));
            }
            for &q in p {
                if !topology.active.contains(&q) {
                    return Err(Error::Partition(format!("qubit {q} is not active")));
                }
                if owner.insert(q, i).is_some() {
                    return Err(Error::Partition(format!("qubit {q} is in two patches")));
                }
            }
        }
        if owner.len() != topology.n_active() {
            return Err(Error::Partition("patches do not cover every active qubit".into()));
        }
        let mut internal = vec![Vec::new(); patches.len()];
        let mut cross = Vec::new();
        for (a, b) in topology.enabled_keys() {
            match (owner[&a], owner[&b]) {
                (i, j) if i == j => internal[i].push((a, b)),
                _ => cross.push((a, b)),
            }
        }
        Ok(Self { patches, internal, cross })
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Fails if a patch has no coupler to train.
    pub fn require_internal_couplers(&self) -> Result<()> {
        match self.internal.iter().position(Vec::is_empty) {
            Some(i) => Err(Error::Partition(format!(
                "patch {i} contains no internal coupler, so it cannot calibrate anything"
            ))),
            None => Ok(()),
        }
    }

    /// Restricts `circuit` to each patch.
    pub fn patch_circuits(&self, circuit: &Circuit) -> Result<Vec<Circuit>> {
        let present: BTreeSet<usize> = circuit.qubits.iter().copied().collect();
        self.patches
            .iter()
            .map(|p| circuit.restrict(&p.intersection(&present).copied().collect()))
            .collect()
    }
}

/// Rectangular blocks: a qubit at `(r, c)` belongs to block
/// `(#row_cuts <= r, #col_cuts <= c)`. Cuts are the first row/column of a new block.
pub fn split_grid(topology: &GridTopology, row_cuts: &[usize], col_cuts: &[usize]) -> Result<PatchPartition> {
    for &r in row_cuts {
        if r == 0 || r >= topology.rows {
            return Err(Error::Partition(format!("row cut {r} outside 1..{}", topology.rows)));
        }
    }
    for &c in col_cuts {
        if c == 0 || c >= topology.cols {
            return Err(Error::Partition(format!("column cut {c} outside 1..{}", topology.cols)));
        }
    }
    let n_col_blocks = col_cuts.len() + 1;
    let mut blocks = vec![BTreeSet::new(); (row_cuts.len() + 1) * n_col_blocks];
    for q in topology.active_qubits() {
        let id = topology.qubit(q);
        let br = row_cuts.iter().filter(|&&r| r <= id.row).count();
        let bc = col_cuts.iter().filter(|&&c| c <= id.col).count();
        blocks[br * n_col_blocks + bc].insert(q);
    }
    PatchPartition::from_patches(topology, blocks)
}

/// Quadrants cut at the row and column midlines.
pub fn split_four_patches(topology: &GridTopology) -> Result<PatchPartition> {
    if topology.rows < 2 || topology.cols < 2 {
        return Err(Error::Partition(format!("{}x{} grid has no quadrants", topology.rows, topology.cols)));
    }
    let p = split_grid(topology, &[topology.rows / 2], &[topology.cols / 2])?;
    p.require_internal_couplers()?;
    Ok(p)
}

/// Several partitions applied one after another; together their internal couplers
/// should reach every enabled coupler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFamily {
    pub partitions: Vec<PatchPartition>,
}

impl PartitionFamily {
    pub fn single(p: PatchPartition) -> Self {
        Self { partitions: vec![p] }
    }

    /// Midline quadrants followed by quadrants with both cuts moved by one.
    pub fn staggered_four(topology: &GridTopology) -> Result<Self> {
        let first = split_four_patches(topology)?;
        let shift = |n: usize| if n / 2 + 1 < n { n / 2 + 1 } else { n / 2 - 1 };
        let (r, c) = (shift(topology.rows), shift(topology.cols));
        if r == 0 || c == 0 {
            return Err(Error::Partition("grid too small for a staggered split".into()));
        }
        let second = split_grid(topology, &[r], &[c])?;
        second.require_internal_couplers()?;
        Ok(Self { partitions: vec![first, second] })
    }

    /// Two-block column splits at each of `cuts`, one partition per cut.
    pub fn column_splits(topology: &GridTopology, cuts: &[usize]) -> Result<Self> {
        let partitions = cuts
            .iter()
            .map(|&c| {
                let p = split_grid(topology, &[], &[c])?;
                p.require_internal_couplers()?;
                Ok(p)
            })
            .collect::<Result<_>>()?;
        Ok(Self { partitions })
    }

    pub fn covered(&self) -> BTreeSet<(usize, usize)> {
        self.partitions.iter().flat_map(|p| p.internal.iter().flatten().copied()).collect()
    }

    /// Couplers of `topology` that no partition contains.
    pub fn uncovered(&self, topology: &GridTopology) -> Vec<(usize, usize)> {
        let covered = self.covered();
        topology.enabled_keys().into_iter().filter(|k| !covered.contains(k)).collect()
    }

    pub fn check_coverage(&self, topology: &GridTopology) -> Result<()> {
        let missing = self.uncovered(topology);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Partition(format!("{} couplers are cross-patch in every partition: {missing:?}", missing.len())))
        }
    }
}

/// One training circuit with bitstrings measured on it.
#[derive(Clone, Debug)]
pub struct TrainingInstance {
    pub circuit: Circuit,
    /// Either over all circuit qubits or over the patch qubits only.
    pub samples: SampleSet,
}

struct PreparedInstance {
    compiled: CompiledCircuit,
    /// Union-coupler index of every compiled slot.
    slot_to_gamma: Vec<usize>,
    /// (basis index, count)
    counts: Vec<(usize, f64)>,
    n_samples: f64,
    dim: f64,
}

/// Loss `1 - mean_i F_XEB(γ, b_i)` over the training instances of one patch.
pub struct CalibrationProblem {
    pub qubits: BTreeSet<usize>,
    /// Couplers in γ order; γ holds five entries per coupler.
    pub couplers: Vec<(usize, usize)>,
    instances: Vec<PreparedInstance>,
}

fn marginal(samples: &SampleSet, circuit_qubits: &[usize], keep: &BTreeSet<usize>) -> Result<Vec<u64>> {
    let kept = circuit_qubits.iter().filter(|q| keep.contains(q)).count();
    if samples.n_qubits == kept {
        return Ok(samples.bitstrings.clone());
    }
    if samples.n_qubits != circuit_qubits.len() {
        return Err(Error::InvalidArgument(format!(
            "{}-qubit samples match neither the circuit ({}) nor the patch ({kept})",
            samples.n_qubits,
            circuit_qubits.len(),
        )));
    }
    Ok(samples.marginal(circuit_qubits, keep)?.bitstrings)
}

impl CalibrationProblem {
    pub fn new(qubits: &BTreeSet<usize>, training: &[TrainingInstance], max_qubits: usize) -> Result<Self> {
        if training.is_empty() {
            return Err(Error::InvalidArgument("no training data for patch".into()));
        }
        let mut restricted = Vec::with_capacity(training.len());
        for t in training {
            let present: BTreeSet<usize> = t.circuit.qubits.iter().copied().collect();
            if !qubits.is_subset(&present) {
                return Err(Error::InvalidArgument("training circuit does not contain the patch".into()));
            }
            let bits = marginal(&t.samples, &t.circuit.qubits, qubits)?;
            restricted.push((t.circuit.restrict(qubits)?, bits));
        }
        let couplers: Vec<(usize, usize)> = restricted
            .iter()
            .flat_map(|(c, _)| c.couplers())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut instances = Vec::with_capacity(restricted.len());
        for (circ, bits) in restricted {
            if bits.len() < 2 {
                return Err(Error::InsufficientSamples { needed: 2, got: bits.len() });
            }
            let compiled = CompiledCircuit::new(&circ, max_qubits)?;
            let slot_to_gamma = compiled
                .couplers
                .iter()
                .map(|k| couplers.binary_search(k).expect("union contains every coupler"))
                .collect();
            let mut hist: BTreeMap<usize, f64> = BTreeMap::new();
            for &b in &bits {
                *hist.entry(b as usize).or_default() += 1.0;
            }
            instances.push(PreparedInstance {
                dim: (compiled.n_qubits as f64).exp2(),
                compiled,
                slot_to_gamma,
                counts: hist.into_iter().collect(),
                n_samples: bits.len() as f64,
            });
        }
        Ok(Self { qubits: qubits.clone(), couplers, instances })
    }

    pub fn dim(&self) -> usize {
        5 * self.couplers.len()
    }

    pub fn gamma_from(&self, params: &GateParams) -> Result<Vec<f64>> {
        let mut g = Vec::with_capacity(self.dim());
        for &(a, b) in &self.couplers {
            let p = params.get(a, b).ok_or(Error::MissingParams(a, b))?;
            g.extend_from_slice(&p.to_array());
        }
        Ok(g)
    }

    pub fn params_from(&self, gamma: &[f64]) -> GateParams {
        let mut out = GateParams::default();
        for (k, &(a, b)) in self.couplers.iter().enumerate() {
            let v: [f64; 5] = gamma[5 * k..5 * k + 5].try_into().expect("five entries");
            out.insert(a, b, FsimParams::from_array(v));
        }
        out
    }

    /// Mean linear XEB over the training instances at `gamma`.
    pub fn fidelity(&self, gamma: &[f64]) -> f64 {
        let mats: Vec<_> = (0..self.couplers.len())
            .map(|k| fsim_matrix(&FsimParams::from_array(gamma[5 * k..5 * k + 5].try_into().expect("five"))))
            .collect();
        let total: f64 = self
            .instances
            .iter()
            .map(|inst| {
                let local: Vec<_> = inst.slot_to_gamma.iter().map(|&g| mats[g]).collect();
                let state = inst.compiled.run_with(&local);
                let amps = state.amplitudes();
                let s: f64 = inst.counts.iter().map(|&(i, c)| c * amps[i].norm_sqr()).sum();
                inst.dim * s / inst.n_samples - 1.0
            })
            .sum();
        total / self.instances.len() as f64
    }

    pub fn loss(&self, gamma: &[f64]) -> f64 {
        1.0 - self.fidelity(gamma)
    }

    /// Central-difference gradient, coordinates evaluated independently.
    pub fn gradient(&self, gamma: &[f64], h: f64) -> Vec<f64> {
        self.gradient_at(gamma, h, &(0..gamma.len()).collect::<Vec<_>>())
    }

    /// Central differences along the listed coordinates only, in that order.
    pub fn gradient_at(&self, gamma: &[f64], h: f64, coords: &[usize]) -> Vec<f64> {
        let coord = |&k: &usize| {
            let mut probe = gamma.to_vec();
            probe[k] = gamma[k] + h;
            let up = self.loss(&probe);
            probe[k] = gamma[k] - h;
            let down = self.loss(&probe);
            (up - down) / (2.0 * h)
        };
        #[cfg(feature = "parallel")]
        return coords.par_iter().map(coord).collect();
        #[cfg(not(feature = "parallel"))]
        return coords.iter().map(coord).collect();
    }
}

/// Which entries of each coupler's `(θ, φ, Δ+, Δ-, Δ-,off)` are fitted.
pub const TRAIN_ALL: [bool; 5] = [true; 5];
pub const TRAIN_THETA_PHI: [bool; 5] = [true, true, false, false, false];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub optimizer: OptimizerConfig,
    /// Entries left `false` keep their starting values.
    pub trainable: [bool; 5],
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { optimizer: OptimizerConfig::default(), trainable: TRAIN_ALL }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if !self.trainable.iter().any(|&t| t) {
            return Err(Error::InvalidArgument("no trainable gate parameters".into()));
        }
        Ok(())
    }
}

/// Per-patch optimization record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub partition: usize,
    pub patch: usize,
    pub qubits: Vec<usize>,
    pub couplers: Vec<(usize, usize)>,
    pub loss_before: f64,
    pub loss_after: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationOutcome {
    pub params: GateParams,
    pub patches: Vec<PatchReport>,
}

/// Fits the couplers inside `qubits` starting from `gamma0`; all other entries of the
/// returned map are copied from `gamma0` unchanged.
pub fn calibrate_patch(
    qubits: &BTreeSet<usize>,
    training: &[TrainingInstance],
    gamma0: &GateParams,
    config: &CalibrationConfig,
) -> Result<(GateParams, PatchReport)> {
    config.validate()?;
    let problem = CalibrationProblem::new(qubits, training, DEFAULT_MAX_QUBITS)?;
    let full0 = problem.gamma_from(gamma0)?;
    let free: Vec<usize> = (0..problem.dim()).filter(|k| config.trainable[k % 5]).collect();
    let expand = |x: &[f64]| {
        let mut g = full0.clone();
        for (&k, &v) in free.iter().zip(x) {
            g[k] = v;
        }
        g
    };
    let x0: Vec<f64> = free.iter().map(|&k| full0[k]).collect();
    let h = config.optimizer.h;
    let result = bfgs_minimize_with_gradient(
        |x| {
            let g = expand(x);
            (problem.loss(&g), problem.gradient_at(&g, h, &free))
        },
        |x| problem.loss(&expand(x)),
        &x0,
        &config.optimizer,
    );
    let mut params = gamma0.clone();
    for (k, v) in problem.params_from(&expand(&result.x)).0 {
        params.0.insert(k, v);
    }
    let report = PatchReport {
        partition: 0,
        patch: 0,
        qubits: qubits.iter().copied().collect(),
        couplers: problem.couplers.clone(),
        loss_before: result.initial_loss,
        loss_after: result.loss,
        iterations: result.iterations,
        evaluations: result.evaluations + result.iterations * 2 * free.len(),
        termination: result.termination,
        trace: result.trace,
    };
    Ok((params, report))
}

/// Calibrates every patch of `partition`; `training[i]` belongs to patch `i`.
pub fn calibrate_partition(
    partition: &PatchPartition,
    training: &[Vec<TrainingInstance>],
    gamma0: &GateParams,
    config: &CalibrationConfig,
) -> Result<CalibrationOutcome> {
    if training.len() != partition.len() {
        return Err(Error::InvalidArgument(format!(
            "{} training sets for {} patches",
            training.len(),
            partition.len()
        )));
    }
    let mut params = gamma0.clone();
    let mut reports = Vec::with_capacity(partition.len());
    for (i, (patch, data)) in partition.patches.iter().zip(training).enumerate() {
        // patches are disjoint, so each fit only reads and writes its own couplers
        let (fitted, mut report) = calibrate_patch(patch, data, gamma0, config)?;
        for k in &report.couplers {
            params.0.insert(*k, fitted.0[k]);
        }
        report.patch = i;
        reports.push(report);
    }
    Ok(CalibrationOutcome { params, patches: reports })
}

/// Runs the partitions in order, each starting from the previous result.
/// `training[j][i]` is the data for patch `i` of partition `j`.
pub fn calibrate_family(
    family: &PartitionFamily,
    training: &[Vec<Vec<TrainingInstance>>],
    gamma0: &GateParams,
    config: &CalibrationConfig,
) -> Result<CalibrationOutcome> {
    if training.len() != family.partitions.len() {
        return Err(Error::InvalidArgument(format!(
            "{} training groups for {} partitions",
            training.len(),
            family.partitions.len()
        )));
    }
    let mut params = gamma0.clone();
    let mut reports = Vec::new();
    for (j, (partition, data)) in family.partitions.iter().zip(training).enumerate() {
        let out = calibrate_partition(partition, data, &params, config)?;
        params = out.params;
        reports.extend(out.patches.into_iter().map(|r| PatchReport { partition: j, ..r }));
    }
    Ok(CalibrationOutcome { params, patches: reports })
}

/// Midline four-patch calibration of one circuit; `b_train[i]` are samples of patch `i`.
pub fn calibrate_four_patch(
    topology: &GridTopology,
    circuit: &Circuit,
    b_train: &[SampleSet],
    gamma0: &GateParams,
    config: &CalibrationConfig,
) -> Result<CalibrationOutcome> {
    let partition = split_four_patches(topology)?;
    if b_train.len() != 4 {
        return Err(Error::InvalidArgument(format!("{} training sets, need 4", b_train.len())));
    }
    let training: Vec<Vec<TrainingInstance>> = b_train
        .iter()
        .map(|s| vec![TrainingInstance { circuit: circuit.clone(), samples: s.clone() }])
        .collect();
    calibrate_partition(&partition, &training, gamma0, config)
}

/// Linear XEB of `samples` scored against `circuit` with `params` substituted.
pub fn evaluate_xeb(circuit: &Circuit, params: &GateParams, samples: &SampleSet) -> Result<XebEstimate> {
    let state = crate::simulator::run(&circuit.with_params(params))?;
    linear_xeb(&ProbabilityRecord::from_samples(&state, samples)?)
}

//! Gate definitions, random circuit generation and verification variants.
//!
//! Single-qubit gates are the π/2 rotations about X, Y and W = (X+Y)/√2:
//!
//! ```text
//! √X = exp(-iπ/4 X) = 1/√2 [[1, -i], [-i, 1]]
//! √Y = exp(-iπ/4 Y) = 1/√2 [[1, -1], [1, 1]]
//! √W = exp(-iπ/4 W) = 1/√2 [[1, -i e^{-iπ/4}], [-i e^{iπ/4}, 1]]
//! ```
//!
//! so each squares to -i times its Pauli. The two-qubit gate is the five-parameter
//! iSWAP-like gate returned by [`fsim_matrix`], in the basis |00>, |01>, |10>, |11> with
//! the first qubit most significant.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, PURPOSE_CIRCUIT, PURPOSE_PARAMS, RNG_ALGORITHM};
use crate::topology::{GridTopology, Pattern, PatternSequence, SequenceKind};
use crate::{Error, Result};

pub type Mat2 = [[Complex64; 2]; 2];
pub type Mat4 = [[Complex64; 4]; 4];

const CIRCUIT_FORMAT: &str = "rcsbench-circuit/1";
const PARAMS_FORMAT: &str = "rcsbench-params/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingleQubitGate {
    #[serde(rename = "sx")]
    SqrtX,
    #[serde(rename = "sy")]
    SqrtY,
    #[serde(rename = "sw")]
    SqrtW,
}

impl SingleQubitGate {
    pub const ALL: [SingleQubitGate; 3] =
        [SingleQubitGate::SqrtX, SingleQubitGate::SqrtY, SingleQubitGate::SqrtW];

    pub fn matrix(self) -> Mat2 {
        sq_matrix(self)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sq_matrix(gate: SingleQubitGate) -> Mat2 {
    let s = FRAC_1_SQRT_2;
    match gate {
        SingleQubitGate::SqrtX => [[c(s, 0.0), c(0.0, -s)], [c(0.0, -s), c(s, 0.0)]],
        SingleQubitGate::SqrtY => [[c(s, 0.0), c(-s, 0.0)], [c(s, 0.0), c(s, 0.0)]],
        SingleQubitGate::SqrtW => {
            let minus_i = c(0.0, -1.0);
            let off_upper = minus_i * Complex64::from_polar(1.0, -FRAC_PI_4) * s;
            let off_lower = minus_i * Complex64::from_polar(1.0, FRAC_PI_4) * s;
            [[c(s, 0.0), off_upper], [off_lower, c(s, 0.0)]]
        }
    }
}

/// Parameters of the iSWAP-like gate, all in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsimParams {
    pub theta: f64,
    pub phi: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub delta_minus_off: f64,
}

impl FsimParams {
    pub fn new(theta: f64, phi: f64, delta_plus: f64, delta_minus: f64, delta_minus_off: f64) -> Self {
        Self { theta, phi, delta_plus, delta_minus, delta_minus_off }
    }

    /// θ = π/2, φ = π/18 and no single-qubit phases.
    pub fn nominal() -> Self {
        Self::new(FRAC_PI_2, PI / 18.0, 0.0, 0.0, 0.0)
    }

    pub fn iswap() -> Self {
        Self::new(FRAC_PI_2, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.theta, self.phi, self.delta_plus, self.delta_minus, self.delta_minus_off]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn matrix(&self) -> Mat4 {
        fsim_matrix(self)
    }
}

pub fn fsim_matrix(p: &FsimParams) -> Mat4 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    let (sin, cos) = p.theta.sin_cos();
    let e = |angle: f64| Complex64::from_polar(1.0, angle);
    [
        [one, zero, zero, zero],
        [
            zero,
            e(p.delta_plus + p.delta_minus) * cos,
            minus_i * e(p.delta_plus - p.delta_minus_off) * sin,
            zero,
        ],
        [
            zero,
            minus_i * e(p.delta_plus + p.delta_minus_off) * sin,
            e(p.delta_plus - p.delta_minus) * cos,
            zero,
        ],
        [zero, zero, zero, e(2.0 * p.delta_plus - p.phi)],
    ]
}

/// Per-coupler gate parameters keyed by `(a, b)` linear qubit indices with `a < b`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GateParams(pub BTreeMap<(usize, usize), FsimParams>);

impl GateParams {
    /// Same parameters on every enabled coupler.
    pub fn uniform(topology: &GridTopology, params: FsimParams) -> Self {
        Self(topology.enabled_keys().into_iter().map(|k| (k, params)).collect())
    }

    /// Adds independent uniform offsets in `[-amplitude, amplitude]` to θ and φ.
    pub fn perturbed(&self, seed: u64, amplitude: f64) -> Self {
        let mut rng = stream_rng(seed, PURPOSE_PARAMS, 0);
        let map = self
            .0
            .iter()
            .map(|(&k, p)| {
                let mut q = *p;
                q.theta += rng.gen_range(-amplitude..=amplitude);
                q.phi += rng.gen_range(-amplitude..=amplitude);
                (k, q)
            })
            .collect();
        Self(map)
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&FsimParams> {
        self.0.get(&(a.min(b), a.max(b)))
    }

    pub fn insert(&mut self, a: usize, b: usize, p: FsimParams) {
        self.0.insert((a.min(b), a.max(b)), p);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = ParamsFile {
            format: PARAMS_FORMAT.into(),
            couplers: self
                .0
                .iter()
                .map(|(&(a, b), p)| ParamEntry { a, b, params: p.to_array() })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("params serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamsFile = serde_json::from_str(text)?;
        if file.format != PARAMS_FORMAT {
            return Err(Error::Format(format!("unexpected params format '{}'", file.format)));
        }
        let mut out = GateParams::default();
        for e in file.couplers {
            let p = FsimParams::from_array(e.params);
            if !p.is_finite() {
                return Err(Error::Format(format!("non-finite parameters on ({}, {})", e.a, e.b)));
            }
            out.insert(e.a, e.b, p);
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    format: String,
    couplers: Vec<ParamEntry>,
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    a: usize,
    b: usize,
    /// (θ, φ, Δ+, Δ-, Δ-,off)
    params: [f64; 5],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitGate {
    pub a: usize,
    pub b: usize,
    pub params: FsimParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    /// One gate per circuit qubit, aligned with [`Circuit::qubits`].
    pub singles: Vec<SingleQubitGate>,
    pub pattern: Pattern,
    pub gates: Vec<TwoQubitGate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Patch,
    Elided,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Patch => "patch",
            Variant::Elided => "elided",
        })
    }
}

/// Two disjoint qubit sets (linear indices) covering a circuit's qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
}

impl Bipartition {
    pub fn new(left: BTreeSet<usize>, right: BTreeSet<usize>) -> Self {
        Self { left, right }
    }

    /// Qubits in columns `< col` versus the rest.
    pub fn by_column(qubits: &[usize], cols: usize, col: usize) -> Self {
        let (left, right) = qubits.iter().partition(|&&q| q % cols < col);
        Self { left, right }
    }

    /// Qubits in rows `< row` versus the rest.
    pub fn by_row(qubits: &[usize], cols: usize, row: usize) -> Self {
        let (left, right) = qubits.iter().partition(|&&q| q / cols < row);
        Self { left, right }
    }

    pub fn crosses(&self, a: usize, b: usize) -> bool {
        self.left.contains(&a) != self.left.contains(&b)
    }

    pub fn validate(&self, qubits: &[usize]) -> Result<()> {
        if !self.left.is_disjoint(&self.right) {
            return Err(Error::Bipartition("halves overlap".into()));
        }
        let all: BTreeSet<usize> = qubits.iter().copied().collect();
        let union: BTreeSet<usize> = self.left.union(&self.right).copied().collect();
        if union != all {
            return Err(Error::Bipartition("halves do not cover the circuit's qubits".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub rows: usize,
    pub cols: usize,
    /// Linear lattice indices; position in this list is the simulator qubit index.
    pub qubits: Vec<usize>,
    pub kind: SequenceKind,
    pub seed: u64,
    pub variant: Variant,
    pub bipartition: Option<Bipartition>,
    pub keep_last: Option<usize>,
    pub cycles: Vec<Cycle>,
}

/// Options for [`generate_random_circuit_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorOptions {
    /// Forbid the same single-qubit gate on a qubit in consecutive cycles.
    pub forbid_repeats: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { forbid_repeats: true }
    }
}

pub fn generate_random_circuit(
    topology: &GridTopology,
    seq: &PatternSequence,
    seed: u64,
    params: &GateParams,
) -> Result<Circuit> {
    generate_random_circuit_with(topology, seq, seed, params, GeneratorOptions::default())
}

pub fn generate_random_circuit_with(
    topology: &GridTopology,
    seq: &PatternSequence,
    seed: u64,
    params: &GateParams,
    options: GeneratorOptions,
) -> Result<Circuit> {
    if seq.is_empty() {
        return Err(Error::Circuit("pattern sequence is empty".into()));
    }
    for key in topology.enabled_keys() {
        if params.get(key.0, key.1).is_none() {
            return Err(Error::MissingParams(key.0, key.1));
        }
    }
    let qubits = topology.active_qubits();
    let mut rng = stream_rng(seed, PURPOSE_CIRCUIT, 0);
    let mut previous: Vec<Option<SingleQubitGate>> = vec![None; qubits.len()];
    let mut cycles = Vec::with_capacity(seq.len());
    for &pattern in &seq.labels {
        let singles: Vec<SingleQubitGate> = previous
            .iter_mut()
            .map(|prev| {
                let gate = match (*prev, options.forbid_repeats) {
                    (Some(last), true) => {
                        let choices: Vec<_> =
                            SingleQubitGate::ALL.into_iter().filter(|&g| g != last).collect();
                        choices[rng.gen_range(0..choices.len())]
                    }
                    _ => SingleQubitGate::ALL[rng.gen_range(0..3)],
                };
                *prev = Some(gate);
                gate
            })
            .collect();
        let gates = topology
            .couplers_with(pattern)
            .map(|c| TwoQubitGate {
                a: c.a.linear,
                b: c.b.linear,
                params: *params.get(c.a.linear, c.b.linear).expect("checked above"),
            })
            .collect();
        cycles.push(Cycle { singles, pattern, gates });
    }
    Ok(Circuit {
        rows: topology.rows,
        cols: topology.cols,
        qubits,
        kind: seq.kind,
        seed,
        variant: Variant::Full,
        bipartition: None,
        keep_last: None,
        cycles,
    })
}

/// Removes every two-qubit gate that crosses `bipartition`.
pub fn make_patch(circuit: &Circuit, bipartition: &Bipartition) -> Result<Circuit> {
    let mut out = elide(circuit, bipartition, 0)?;
    out.variant = Variant::Patch;
    out.keep_last = None;
    Ok(out)
}

/// Removes crossing gates from every cycle except the final `keep_last`.
pub fn make_elided(circuit: &Circuit, bipartition: &Bipartition, keep_last: usize) -> Result<Circuit> {
    if keep_last > circuit.cycles.len() {
        return Err(Error::InvalidArgument(format!(
            "keep_last {keep_last} exceeds {} cycles",
            circuit.cycles.len()
        )));
    }
    let mut out = elide(circuit, bipartition, keep_last)?;
    out.variant = Variant::Elided;
    out.keep_last = Some(keep_last);
    Ok(out)
}

/// Elided-circuit default: keep 6 crossing layers for circuits of 12 or more cycles,
/// otherwise half of the cycles.
pub fn default_keep_last(n_cycles: usize) -> usize {
    if n_cycles >= 12 {
        6
    } else {
        n_cycles / 2
    }
}

fn elide(circuit: &Circuit, bipartition: &Bipartition, keep_last: usize) -> Result<Circuit> {
    bipartition.validate(&circuit.qubits)?;
    let first_kept = circuit.cycles.len() - keep_last;
    let mut out = circuit.clone();
    for (i, cycle) in out.cycles.iter_mut().enumerate() {
        if i < first_kept {
            cycle.gates.retain(|g| !bipartition.crosses(g.a, g.b));
        }
    }
    out.bipartition = Some(bipartition.clone());
    Ok(out)
}

impl Circuit {
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn n_cycles(&self) -> usize {
        self.cycles.len()
    }

    pub fn n_single_gates(&self) -> usize {
        self.cycles.iter().map(|c| c.singles.len()).sum()
    }

    pub fn n_two_qubit_gates(&self) -> usize {
        self.cycles.iter().map(|c| c.gates.len()).sum()
    }

    /// Linear index -> simulator position.
    pub fn positions(&self) -> BTreeMap<usize, usize> {
        self.qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect()
    }

    /// Distinct couplers used by two-qubit gates, sorted.
    pub fn couplers(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> =
            self.cycles.iter().flat_map(|c| c.gates.iter().map(|g| (g.a, g.b))).collect();
        set.into_iter().collect()
    }

    /// Parameters currently attached to each coupler (first occurrence wins).
    pub fn params(&self) -> GateParams {
        let mut out = GateParams::default();
        for g in self.cycles.iter().flat_map(|c| c.gates.iter()) {
            out.0.entry((g.a, g.b)).or_insert(g.params);
        }
        out
    }

    /// Copy with parameters replaced for every coupler present in `params`.
    pub fn with_params(&self, params: &GateParams) -> Circuit {
        let mut out = self.clone();
        for g in out.cycles.iter_mut().flat_map(|c| c.gates.iter_mut()) {
            if let Some(p) = params.get(g.a, g.b) {
                g.params = *p;
            }
        }
        out
    }

    /// Sub-circuit on `keep` only: gates touching other qubits are dropped.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> Result<Circuit> {
        if keep.is_empty() {
            return Err(Error::Circuit("cannot restrict to an empty qubit set".into()));
        }
        let present: BTreeSet<usize> = self.qubits.iter().copied().collect();
        if let Some(q) = keep.iter().find(|q| !present.contains(q)) {
            return Err(Error::Circuit(format!("qubit {q} is not in the circuit")));
        }
        let idx: Vec<usize> =
            self.qubits.iter().enumerate().filter(|(_, q)| keep.contains(q)).map(|(i, _)| i).collect();
        let cycles = self
            .cycles
            .iter()
            .map(|c| Cycle {
                singles: idx.iter().map(|&i| c.singles[i]).collect(),
                pattern: c.pattern,
                gates: c
                    .gates
                    .iter()
                    .filter(|g| keep.contains(&g.a) && keep.contains(&g.b))
                    .copied()
                    .collect(),
            })
            .collect();
        Ok(Circuit {
            qubits: idx.iter().map(|&i| self.qubits[i]).collect(),
            bipartition: None,
            cycles,
            ..self.clone()
        })
    }

    /// Structural checks: single layers cover all qubits, gates are on distinct circuit
    /// qubits with no qubit used twice per layer, parameters are finite, and patch/elided
    /// variants respect their bipartition.
    pub fn validate(&self) -> Result<()> {
        let positions = self.positions();
        if positions.len() != self.qubits.len() {
            return Err(Error::Circuit("duplicate qubit in header".into()));
        }
        for (i, cycle) in self.cycles.iter().enumerate() {
            if cycle.singles.len() != self.qubits.len() {
                return Err(Error::Circuit(format!(
                    "cycle {i}: {} single-qubit gates for {} qubits",
                    cycle.singles.len(),
                    self.qubits.len()
                )));
            }
            let mut used = BTreeSet::new();
            for g in &cycle.gates {
                if g.a >= g.b {
                    return Err(Error::Circuit(format!("cycle {i}: coupler ({}, {}) not canonical", g.a, g.b)));
                }
                if !positions.contains_key(&g.a) || !positions.contains_key(&g.b) {
                    return Err(Error::Circuit(format!("cycle {i}: gate on unknown qubit")));
                }
                if !used.insert(g.a) || !used.insert(g.b) {
                    return Err(Error::Circuit(format!("cycle {i}: qubit used twice in one layer")));
                }
                if !g.params.is_finite() {
                    return Err(Error::Circuit(format!("cycle {i}: non-finite gate parameters")));
                }
            }
        }
        if let Some(bp) = &self.bipartition {
            bp.validate(&self.qubits)?;
            let first_kept = match self.variant {
                Variant::Full => 0,
                Variant::Patch => self.cycles.len(),
                Variant::Elided => self.cycles.len() - self.keep_last.unwrap_or(0).min(self.cycles.len()),
            };
            for (i, cycle) in self.cycles.iter().enumerate().take(first_kept) {
                if self.variant != Variant::Full && cycle.gates.iter().any(|g| bp.crosses(g.a, g.b)) {
                    return Err(Error::Circuit(format!("cycle {i}: crossing gate in {} circuit", self.variant)));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = CircuitFile {
            format: CIRCUIT_FORMAT.into(),
            rng: RNG_ALGORITHM.into(),
            n_qubits: self.n_qubits(),
            n_cycles: self.n_cycles(),
            circuit: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("circuit serialises")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let file: CircuitFile = serde_json::from_str(text)?;
        if file.format != CIRCUIT_FORMAT {
            return Err(Error::Format(format!("unexpected circuit format '{}'", file.format)));
        }
        let c = file.circuit;
        if c.n_qubits() != file.n_qubits || c.n_cycles() != file.n_cycles {
            return Err(Error::Format("header counts disagree with circuit body".into()));
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    format: String,
    rng: String,
    n_qubits: usize,
    n_cycles: usize,
    #[serde(flatten)]
    circuit: Circuit,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "patch" => Ok(Variant::Patch),
            "elided" => Ok(Variant::Elided),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

/// max |U†U - I| over entries.
pub fn unitarity_error4(u: &Mat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                acc += u[k][i].conj() * u[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::pattern_sequence;
    use proptest::prelude::*;

    fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    /// a ≍ b up to a global phase.
    fn equal_up_to_phase(a: &Mat2, b: &Mat2) -> bool {
        let mut phase = None;
        for i in 0..2 {
            for j in 0..2 {
                if b[i][j].norm() > 1e-9 {
                    phase.get_or_insert(a[i][j] / b[i][j]);
                }
            }
        }
        let phase = phase.unwrap();
        (phase.norm() - 1.0).abs() < 1e-12
            && (0..2).all(|i| (0..2).all(|j| close(a[i][j], phase * b[i][j])))
    }

    #[test]
    fn single_qubit_squares() {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let x = [[z, o], [o, z]];
        let y = [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]];
        let s = FRAC_1_SQRT_2;
        let w = [[z, c(s, -s)], [c(s, s), z]];
        let sq = |g| matmul2(&sq_matrix(g), &sq_matrix(g));
        assert!(equal_up_to_phase(&sq(SingleQubitGate::SqrtX), &x));
        assert!(equal_up_to_phase(&sq(SingleQubitGate::SqrtY), &y));
        assert!(equal_up_to_phase(&sq(SingleQubitGate::SqrtW), &w));
    }

    #[test]
    fn fsim_special_cases() {
        let id = fsim_matrix(&FsimParams::new(0.0, 0.0, 0.0, 0.0, 0.0));
        for i in 0..4 {
            for j in 0..4 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!(close(id[i][j], c(t, 0.0)));
            }
        }
        let iswap = fsim_matrix(&FsimParams::iswap());
        assert!(close(iswap[1][2], c(0.0, -1.0)));
        assert!(close(iswap[2][1], c(0.0, -1.0)));
        assert!(close(iswap[1][1], c(0.0, 0.0)));
        assert!(close(iswap[0][0], c(1.0, 0.0)));
        assert!(close(iswap[3][3], c(1.0, 0.0)));
        let nominal = fsim_matrix(&FsimParams::nominal());
        assert!(close(nominal[3][3], Complex64::from_polar(1.0, -PI / 18.0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn fsim_is_unitary(v in proptest::array::uniform5(-10.0f64..10.0)) {
            prop_assert!(unitarity_error4(&fsim_matrix(&FsimParams::from_array(v))) <= 1e-12);
        }
    }

    fn small() -> (GridTopology, GateParams) {
        let t = GridTopology::rectangular(3, 4).unwrap();
        let p = GateParams::uniform(&t, FsimParams::nominal());
        (t, p)
    }

    #[test]
    fn generation_is_deterministic_and_counts_match() {
        let (t, p) = small();
        let seq = pattern_sequence(10, SequenceKind::Standard).unwrap();
        let a = generate_random_circuit(&t, &seq, 42, &p).unwrap();
        let b = generate_random_circuit(&t, &seq, 42, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_single_gates(), 12 * 10);
        for (cycle, &label) in a.cycles.iter().zip(&seq.labels) {
            assert_eq!(cycle.pattern, label);
            assert_eq!(cycle.gates.len(), t.couplers_with(label).count());
        }
        a.validate().unwrap();
        let other = generate_random_circuit(&t, &seq, 43, &p).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn no_consecutive_repeats() {
        let (t, p) = small();
        let seq = pattern_sequence(40, SequenceKind::Standard).unwrap();
        let circ = generate_random_circuit(&t, &seq, 5, &p).unwrap();
        for w in circ.cycles.windows(2) {
            for (x, y) in w[0].singles.iter().zip(&w[1].singles) {
                assert_ne!(x, y);
            }
        }
        let free = generate_random_circuit_with(&t, &seq, 5, &p, GeneratorOptions { forbid_repeats: false })
            .unwrap();
        let repeats = free
            .cycles
            .windows(2)
            .flat_map(|w| w[0].singles.iter().zip(&w[1].singles).filter(|(x, y)| x == y).collect::<Vec<_>>())
            .count();
        assert!(repeats > 0);
    }

    #[test]
    fn missing_params_rejected() {
        let (t, mut p) = small();
        let first = *p.0.keys().next().unwrap();
        p.0.remove(&first);
        let seq = pattern_sequence(4, SequenceKind::Standard).unwrap();
        assert!(matches!(generate_random_circuit(&t, &seq, 1, &p), Err(Error::MissingParams(..))));
    }

    #[test]
    fn sixty_qubit_sequence() {
        let t = GridTopology::sixty_qubit();
        let p = GateParams::uniform(&t, FsimParams::nominal());
        let seq = pattern_sequence(24, SequenceKind::Standard).unwrap();
        let circ = generate_random_circuit(&t, &seq, 3, &p).unwrap();
        let labels: String = circ.cycles.iter().map(|c| c.pattern.as_char()).collect();
        assert_eq!(labels, "ABCDCDAB".repeat(3));
        let sweep: usize = circ.cycles[..4].iter().map(|c| c.gates.len()).sum();
        assert_eq!(sweep, 99);
    }

    #[test]
    fn patch_on_two_by_four() {
        let t = GridTopology::rectangular(2, 4).unwrap();
        let p = GateParams::uniform(&t, FsimParams::nominal());
        let seq = pattern_sequence(8, SequenceKind::Standard).unwrap();
        let full = generate_random_circuit(&t, &seq, 9, &p).unwrap();
        let bp = Bipartition::by_column(&full.qubits, 4, 2);
        let patch = make_patch(&full, &bp).unwrap();
        assert_eq!(patch.variant, Variant::Patch);
        // crossing couplers (0,1,2)-(0,1,3) i.e. (1,2) and (5,6), both horizontal with
        // left column 1 -> pattern D
        let crossing: Vec<_> = t.enabled_couplers().filter(|c| bp.crosses(c.a.linear, c.b.linear)).collect();
        assert_eq!(crossing.len(), 2);
        assert!(crossing.iter().all(|c| c.pattern == Some(Pattern::D)));
        let removed_expected: usize = seq
            .labels
            .iter()
            .map(|&l| crossing.iter().filter(|c| c.pattern == Some(l)).count())
            .sum();
        assert_eq!(full.n_two_qubit_gates() - patch.n_two_qubit_gates(), removed_expected);
        for cycle in &patch.cycles {
            assert!(cycle.gates.iter().all(|g| !bp.crosses(g.a, g.b)));
        }
        assert_eq!(
            full.cycles.iter().map(|c| &c.singles).collect::<Vec<_>>(),
            patch.cycles.iter().map(|c| &c.singles).collect::<Vec<_>>()
        );
        patch.validate().unwrap();
    }

    #[test]
    fn patch_without_crossings_only_changes_tag() {
        let t = GridTopology::rectangular(1, 2).unwrap();
        let t2 = crate::topology::assign_patterns(
            &crate::topology::build_grid(1, 2, &BTreeSet::new(), &[(0, 1)].into_iter().collect()).unwrap(),
        )
        .unwrap();
        let p = GateParams::uniform(&t, FsimParams::nominal());
        let seq = pattern_sequence(4, SequenceKind::Standard).unwrap();
        let full = generate_random_circuit(&t2, &seq, 1, &p).unwrap();
        let bp = Bipartition::by_column(&full.qubits, 2, 1);
        let patch = make_patch(&full, &bp).unwrap();
        assert_eq!(patch.cycles, full.cycles);
    }

    #[test]
    fn elided_keeps_last_cycles() {
        let (t, p) = small();
        let seq = pattern_sequence(10, SequenceKind::Standard).unwrap();
        let full = generate_random_circuit(&t, &seq, 2, &p).unwrap();
        let bp = Bipartition::by_column(&full.qubits, 4, 2);
        let all = make_elided(&full, &bp, 10).unwrap();
        assert_eq!(all.cycles, full.cycles);
        let none = make_elided(&full, &bp, 0).unwrap();
        assert_eq!(none.cycles, make_patch(&full, &bp).unwrap().cycles);
        let six = make_elided(&full, &bp, 6).unwrap();
        for (i, (e, f)) in six.cycles.iter().zip(&full.cycles).enumerate() {
            let crossing = e.gates.iter().filter(|g| bp.crosses(g.a, g.b)).count();
            if i < 4 {
                assert_eq!(crossing, 0);
            } else {
                assert_eq!(e.gates, f.gates);
            }
        }
        assert!(make_elided(&full, &bp, 11).is_err());
        six.validate().unwrap();
    }

    #[test]
    fn invalid_bipartition_rejected() {
        let (t, p) = small();
        let seq = pattern_sequence(4, SequenceKind::Standard).unwrap();
        let full = generate_random_circuit(&t, &seq, 2, &p).unwrap();
        let bp = Bipartition::new([0, 1].into_iter().collect(), [1, 2].into_iter().collect());
        assert!(make_patch(&full, &bp).is_err());
        let bp = Bipartition::new([0].into_iter().collect(), [1].into_iter().collect());
        assert!(make_patch(&full, &bp).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (t, p) = small();
        let p = p.perturbed(11, 0.05);
        let seq = pattern_sequence(9, SequenceKind::Standard).unwrap();
        let full = generate_random_circuit(&t, &seq, 2, &p).unwrap();
        let elided = make_elided(&full, &Bipartition::by_column(&full.qubits, 4, 2), 3).unwrap();
        for circ in [full, elided] {
            let text = circ.to_json();
            let back = Circuit::from_json(&text).unwrap();
            assert_eq!(back, circ);
            assert_eq!(back.to_json(), text);
        }
        let back = GateParams::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn restrict_keeps_internal_gates() {
        let (t, p) = small();
        let seq = pattern_sequence(8, SequenceKind::Standard).unwrap();
        let full = generate_random_circuit(&t, &seq, 2, &p).unwrap();
        let keep: BTreeSet<usize> = [0, 1, 4, 5].into_iter().collect();
        let sub = full.restrict(&keep).unwrap();
        assert_eq!(sub.qubits, vec![0, 1, 4, 5]);
        assert_eq!(sub.couplers(), vec![(0, 1), (0, 4), (1, 5), (4, 5)]);
        sub.validate().unwrap();
    }
}

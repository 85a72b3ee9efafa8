//! Classical simulation cost: tensor-network contraction paths with slicing, and
//! Schrödinger-Feynman cuts with Schmidt-spectrum path counting.
//!
//! A pairwise merge costs the product of the dimensions of the union of both tensors'
//! indices, one complex multiply-add per unit.

mod network;
mod path;
mod sfa;
mod slicing;

pub use network::{circuit_to_tn, random_network, TensorNetwork};
pub use path::{
    find_path_greedy, find_path_optimal, replay_path, ContractionPath, PathSearch, DEFAULT_RESTARTS,
    MAX_OPTIMAL_TENSORS,
};
pub use sfa::{
    paths_needed_identical, schmidt_values, sfa_cut, sfa_speedup, CutAnalysis, CutGate, SpeedupReport,
    REFERENCE_CORES,
};
pub use slicing::{slice_network, SlicedPath};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;
/// Default intermediate-size cap, log2.
pub const DEFAULT_MAX_LOG2_SIZE: f64 = 30.0;
pub const DEFAULT_OPEN_QUBITS: usize = 21;

/// Throughput anchor: a workload of `flops` operations takes `seconds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMachine {
    pub name: String,
    pub flops: f64,
    pub seconds: f64,
}

impl ReferenceMachine {
    /// One perfect 60-qubit 24-cycle sample (6.66e18 operations) in 833.75 s on Summit.
    pub fn summit() -> Self {
        Self { name: "summit".into(), flops: 6.66e18, seconds: 833.75 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub flops_per_sample: f64,
    pub n_samples: f64,
    pub fidelity: f64,
    /// `flops_per_sample * n_samples * fidelity`: only the perfect-sample equivalents
    /// have to be produced.
    pub total_flops: f64,
    pub reference: ReferenceMachine,
    pub runtime_seconds: f64,
    pub runtime_years: f64,
}

pub fn estimate_sampling_cost(
    flops_per_sample: f64,
    n_samples: f64,
    fidelity: f64,
    reference: &ReferenceMachine,
) -> Result<CostReport> {
    let ok = |v: f64| v.is_finite() && v >= 0.0;
    if !(ok(flops_per_sample) && ok(n_samples) && ok(fidelity) && reference.flops > 0.0 && ok(reference.seconds)) {
        return Err(Error::InvalidArgument("cost inputs must be finite and non-negative".into()));
    }
    let total_flops = flops_per_sample * n_samples * fidelity;
    let runtime_seconds = total_flops / reference.flops * reference.seconds;
    Ok(CostReport {
        flops_per_sample,
        n_samples,
        fidelity,
        total_flops,
        reference: reference.clone(),
        runtime_seconds,
        runtime_years: runtime_seconds / SECONDS_PER_YEAR,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::circuit::{
        fsim_matrix, generate_random_circuit, make_patch, Bipartition, FsimParams, GateParams, Mat4,
    };
    use crate::topology::{pattern_sequence, GridTopology, SequenceKind};
    use num_complex::Complex64;
    use proptest::prelude::{prop_assert, proptest};

    fn grid_circuit(rows: usize, cols: usize, cycles: usize, seed: u64) -> crate::circuit::Circuit {
        let t = GridTopology::rectangular(rows, cols).unwrap();
        let p = GateParams::uniform(&t, FsimParams::nominal());
        generate_random_circuit(&t, &pattern_sequence(cycles, SequenceKind::Standard).unwrap(), seed, &p).unwrap()
    }

    #[test]
    fn single_qubit_network_counts() {
        let mut c = grid_circuit(1, 1, 1, 1);
        c.cycles.truncate(1);
        let tn = circuit_to_tn(&c, &BTreeSet::new()).unwrap();
        assert_eq!(tn.n_tensors(), 3);
        assert_eq!(tn.n_contracted(), 2);
        assert!(tn.open.is_empty());
    }

    #[test]
    fn zero_cycles_all_open() {
        let mut c = grid_circuit(2, 3, 1, 1);
        c.cycles.clear();
        let tn = circuit_to_tn(&c, &c.qubits.iter().copied().collect()).unwrap();
        assert_eq!(tn.n_tensors(), 6);
        assert_eq!(tn.open.len(), 6);
        assert!(tn.tensors.iter().all(|t| t.len() == 1));
    }

    #[test]
    fn twelve_qubit_network_counts() {
        let c = grid_circuit(3, 4, 10, 2);
        let open: BTreeSet<usize> = [0, 5].into_iter().collect();
        let tn = circuit_to_tn(&c, &open).unwrap();
        let gates = c.n_single_gates() + c.n_two_qubit_gates();
        assert_eq!(tn.n_tensors(), 12 + gates + 10);
        assert_eq!(tn.open.len(), 2);
        assert!(circuit_to_tn(&c, &[99].into_iter().collect()).is_err());
        tn.validate().unwrap();
    }

    #[test]
    fn two_tensor_network() {
        let tn = TensorNetwork::binary(vec![vec![0, 1], vec![1, 2]], 3, vec![0, 2]).unwrap();
        let g = find_path_greedy(&tn, 1, 4).unwrap().best;
        assert_eq!(g.steps, vec![(0, 1)]);
        assert_eq!(g.total_flops, 8.0);
        assert_eq!(find_path_optimal(&tn).unwrap().total_flops, 8.0);
    }

    #[test]
    fn matrix_chain_order() {
        // A 10x30, B 30x5, C 5x60: (AB)C costs 1500 + 3000, A(BC) costs 9000 + 18000
        let dims = [10f64, 30.0, 5.0, 60.0].map(f64::log2).to_vec();
        let tn = TensorNetwork::new(vec![vec![0, 1], vec![1, 2], vec![2, 3]], dims, vec![0, 3]).unwrap();
        let p = find_path_optimal(&tn).unwrap();
        assert!((p.total_flops - 4500.0).abs() < 1e-6, "{}", p.total_flops);
        assert_eq!(p.steps[0], (0, 1));
    }

    #[test]
    fn greedy_close_to_optimal_on_small_networks() {
        for seed in 0..50 {
            let n = 3 + (seed as usize % 6);
            let tn = random_network(n, n / 2, 2, seed);
            let opt = find_path_optimal(&tn).unwrap();
            let gr = find_path_greedy(&tn, seed, 8).unwrap().best;
            assert!(opt.total_flops <= gr.total_flops * (1.0 + 1e-12));
            assert!(gr.total_flops <= 2.0 * opt.total_flops, "seed {seed}: {} vs {}", gr.total_flops, opt.total_flops);
        }
    }

    #[test]
    fn disconnected_network_is_reported() {
        let tn = TensorNetwork::binary(vec![vec![0], vec![0], vec![1], vec![1]], 2, vec![]).unwrap();
        assert!(matches!(find_path_greedy(&tn, 0, 2), Err(crate::Error::Disconnected(2))));
        let patch = make_patch(&grid_circuit(2, 4, 6, 1), &Bipartition::by_column(&(0..8).collect::<Vec<_>>(), 4, 2)).unwrap();
        assert!(find_path_greedy(&circuit_to_tn(&patch, &BTreeSet::new()).unwrap(), 0, 2).is_err());
    }

    #[test]
    fn greedy_is_deterministic() {
        let tn = circuit_to_tn(&grid_circuit(3, 4, 8, 3), &[1, 2].into_iter().collect()).unwrap();
        let a = find_path_greedy(&tn, 7, 16).unwrap();
        assert_eq!(a, find_path_greedy(&tn, 7, 16).unwrap());
        assert_eq!(a.restart_costs.len(), 16);
        assert_eq!(a.best.final_indices.len(), 2);
    }

    #[test]
    fn more_cycles_never_cheaper() {
        for seed in 0..10 {
            let deep = grid_circuit(3, 4, 12, seed);
            let mut shallow = deep.clone();
            shallow.cycles.truncate(6);
            let cost = |c: &crate::circuit::Circuit| {
                find_path_greedy(&circuit_to_tn(c, &BTreeSet::new()).unwrap(), seed, 16).unwrap().best.total_flops
            };
            assert!(cost(&shallow) <= cost(&deep), "seed {seed}");
        }
    }

    proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn emitted_paths_are_valid(n in 2usize..25, extra in 0usize..10, open in 0usize..4, seed in 0u64..1000) {
            let tn = random_network(n, extra, open, seed);
            let s = find_path_greedy(&tn, seed, 3).unwrap();
            prop_assert!(replay_path(&tn, &s.best.steps).is_ok());
            prop_assert!(s.best.steps.len() == n - 1);
        }

        #[test]
        fn slicing_respects_cap(n in 4usize..20, extra in 2usize..12, seed in 0u64..1000, drop in 1usize..4) {
            let tn = random_network(n, extra, 1, seed);
            let p = find_path_greedy(&tn, seed, 2).unwrap().best;
            let cap = (p.largest_log2_size - drop as f64).max(1.0);
            let s = slice_network(&tn, &p, cap).unwrap();
            prop_assert!(s.largest_log2_size <= cap + 1e-9);
            prop_assert!(s.total_flops >= p.total_flops * (1.0 - 1e-12));
        }

        #[test]
        fn schmidt_norm_is_four(theta in -4.0f64..4.0, phi in -4.0f64..4.0, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let s = schmidt_values(&fsim_matrix(&FsimParams::new(theta, phi, a, b, c))).unwrap();
            prop_assert!((s.iter().map(|x| x * x).sum::<f64>() - 4.0).abs() < 1e-10);
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn slicing_basics() {
        let tn = random_network(10, 4, 1, 3);
        let p = find_path_greedy(&tn, 3, 4).unwrap().best;
        let none = slice_network(&tn, &p, p.largest_log2_size).unwrap();
        assert!(none.sliced.is_empty());
        assert_eq!(none.total_flops, p.total_flops);

        // one merge of two rank-3 tensors sharing index 0: result rank 4
        let tn = TensorNetwork::binary(vec![vec![0, 1, 2], vec![0, 3, 4]], 5, vec![1, 2, 3, 4]).unwrap();
        let p = find_path_greedy(&tn, 0, 1).unwrap().best;
        assert!(slice_network(&tn, &p, 3.0).is_err());
        let tn = TensorNetwork::binary(vec![vec![0, 1, 2], vec![0, 1, 3], vec![2, 3]], 4, vec![]).unwrap();
        let p = replay_path(&tn, &[(0, 1), (3, 2)]).unwrap();
        assert_eq!(p.largest_log2_size, 2.0);
        let s = slice_network(&tn, &p, 1.0).unwrap();
        assert_eq!(s.n_slices, 2.0);
        assert_eq!(s.largest_log2_size, 1.0);
    }

    #[test]
    fn slicing_overhead_is_bounded() {
        for seed in 0..10 {
            let tn = random_network(20, 12, 2, seed);
            let p = find_path_greedy(&tn, seed, 8).unwrap().best;
            let s = slice_network(&tn, &p, p.largest_log2_size - 1.0).unwrap();
            assert!(s.total_flops >= p.total_flops);
            assert!(s.total_flops <= 4.0 * p.total_flops, "seed {seed}: {} vs {}", s.total_flops, p.total_flops);
        }
    }

    #[test]
    fn sampling_cost_arithmetic() {
        let r = estimate_sampling_cost(4.68e23, 7.0e7, 3.66e-4, &ReferenceMachine::summit()).unwrap();
        assert!((r.runtime_years / 4.8e4 - 1.0).abs() < 0.01, "{}", r.runtime_years);
        let r22 = estimate_sampling_cost(1.06e22, 1.5e7, 7.58e-4, &ReferenceMachine::summit()).unwrap();
        assert!((r22.runtime_years / 4.8e2 - 1.0).abs() < 0.01, "{}", r22.runtime_years);
        let zero = estimate_sampling_cost(4.68e23, 7.0e7, 0.0, &ReferenceMachine::summit()).unwrap();
        assert_eq!(zero.total_flops, 0.0);
        let double = estimate_sampling_cost(4.68e23, 1.4e8, 3.66e-4, &ReferenceMachine::summit()).unwrap();
        assert!((double.total_flops / r.total_flops - 2.0).abs() < 1e-12);
        assert!(estimate_sampling_cost(-1.0, 1.0, 1.0, &ReferenceMachine::summit()).is_err());
    }

    fn cz() -> Mat4 {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        [[o, z, z, z], [z, o, z, z], [z, z, o, z], [z, z, z, -o]]
    }

    #[test]
    fn schmidt_reference_gates() {
        let id = fsim_matrix(&FsimParams::new(0.0, 0.0, 0.0, 0.0, 0.0));
        let s = schmidt_values(&id).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-12 && s[1].abs() < 1e-12);
        let s = schmidt_values(&fsim_matrix(&FsimParams::iswap())).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-12), "{s:?}");
        let s = schmidt_values(&cz()).unwrap();
        let r2 = 2f64.sqrt();
        assert!((s[0] - r2).abs() < 1e-12 && (s[1] - r2).abs() < 1e-12 && s[2].abs() < 1e-12);
        let mut bad = cz();
        bad[0][0] = Complex64::new(2.0, 0.0);
        assert!(schmidt_values(&bad).is_err());
    }

    #[test]
    fn cut_counts() {
        let c = grid_circuit(3, 4, 8, 4);
        let bp = Bipartition::by_column(&c.qubits, 4, 2);
        let cut = sfa_cut(&c, &bp, 0.01).unwrap();
        let oracle: usize =
            c.cycles.iter().map(|cy| cy.gates.iter().filter(|g| g.a % 4 < 2 && g.b % 4 >= 2).count()).sum();
        assert_eq!(cut.g, oracle);
        assert!(cut.g > 0);
        let patch = make_patch(&c, &bp).unwrap();
        assert_eq!(sfa_cut(&patch, &bp, 0.01).unwrap().g, 0);
        assert!(cut.mean_delta_theta().abs() < 1e-12);
    }

    #[test]
    fn sixty_qubit_cut_has_54_gates() {
        let t = GridTopology::sixty_qubit();
        let p = GateParams::uniform(&t, FsimParams::nominal());
        let c = generate_random_circuit(&t, &pattern_sequence(24, SequenceKind::Standard).unwrap(), 1, &p).unwrap();
        let cut = sfa_cut(&c, &Bipartition::by_column(&c.qubits, t.cols, 3), 3.66e-4).unwrap();
        assert_eq!(cut.g, 54);
        assert_eq!((cut.n_left, cut.n_right), (29, 31));
    }

    #[test]
    fn balanced_and_cz_speedups() {
        for f in [1e-6, 3.66e-4, 0.5, 1.0] {
            let bal = CutAnalysis::synthetic(20, FsimParams::iswap(), f).unwrap();
            assert!((sfa_speedup(&bal).unwrap().speedup - 1.0).abs() < 1e-9);
        }
        let gate = CutGate { cycle: 0, a: 0, b: 1, params: FsimParams::iswap(), delta_theta: 0.0, schmidt: schmidt_values(&cz()).unwrap() };
        let one = CutAnalysis { bipartition: None, n_left: 1, n_right: 1, g: 1, gates: vec![gate], fidelity_budget: 0.3 };
        assert!((sfa_speedup(&one).unwrap().speedup - 2.0).abs() < 1e-9);
    }

    #[test]
    fn binned_path_count_matches_exact_enumeration() {
        let params = FsimParams::new(std::f64::consts::FRAC_PI_2 - 0.3, std::f64::consts::PI / 18.0, 0.0, 0.0, 0.0);
        for (g, f) in [(8, 0.1), (30, 1e-3), (54, 3.66e-4)] {
            let cut = CutAnalysis::synthetic(g, params, f).unwrap();
            let w = cut.gates[0].schmidt.map(|s| s * s / 4.0);
            let exact = paths_needed_identical(w, g, f);
            let rep = sfa_speedup(&cut).unwrap();
            assert!((rep.log10_paths_needed - exact.log10()).abs() < 0.005, "g {g}: {} vs {}", rep.log10_paths_needed, exact.log10());
        }
    }

    #[test]
    fn imbalanced_speedup_is_below_ten_and_monotone() {
        let params = FsimParams::new(std::f64::consts::FRAC_PI_2 - 0.054, std::f64::consts::PI / 18.0, 0.0, 0.0, 0.0);
        let at = |f: f64| sfa_speedup(&CutAnalysis::synthetic(54, params, f).unwrap()).unwrap().speedup;
        let s = at(3.66e-4);
        assert!(s > 1.0 && s < 10.0, "{s}");
        let fs = [1e-8, 1e-6, 1e-4, 3.66e-4, 1e-2, 0.1, 0.5, 1.0];
        for w in fs.windows(2) {
            assert!(at(w[1]) <= at(w[0]) * (1.0 + 1e-9), "{} -> {}", w[0], w[1]);
        }
    }
}

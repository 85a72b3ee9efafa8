use std::collections::BTreeSet;

use proptest::prelude::*;
use rcsbench::circuit::{generate_random_circuit, Circuit, FsimParams, GateParams};
use rcsbench::costmodel::{estimate_sampling_cost, sfa_speedup, CutAnalysis, ReferenceMachine};
use rcsbench::simulator::{sample_noisy_speckle, Simulator};
use rcsbench::topology::{pattern_sequence, GridTopology, SequenceKind};
use rcsbench::xeb::{combine_inverse_variance, linear_xeb, ProbabilityRecord, XebEstimate};

fn random_circuit(rows: usize, cols: usize, cycles: usize, seed: u64) -> (GridTopology, Circuit) {
    let topo = GridTopology::rectangular(rows, cols).unwrap();
    let params = GateParams::uniform(&topo, FsimParams::nominal()).perturbed(seed, 0.1);
    let seq = pattern_sequence(cycles, SequenceKind::Standard).unwrap();
    let circuit = generate_random_circuit(&topo, &seq, seed, &params).unwrap();
    (topo, circuit)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_cycles_cover_their_pattern(rows in 1usize..5, cols in 2usize..5, cycles in 1usize..12, seed in any::<u64>()) {
        let (topo, c) = random_circuit(rows, cols, cycles, seed);
        prop_assert_eq!(c.cycles.len(), cycles);
        for cycle in &c.cycles {
            prop_assert_eq!(cycle.singles.len(), c.qubits.len());
            let want: BTreeSet<(usize, usize)> = topo.couplers_with(cycle.pattern).map(|k| k.key()).collect();
            let got: BTreeSet<(usize, usize)> = cycle.gates.iter().map(|g| (g.a.min(g.b), g.a.max(g.b))).collect();
            prop_assert_eq!(got.len(), cycle.gates.len());
            prop_assert_eq!(got, want);
        }
        for w in c.cycles.windows(2) {
            prop_assert!(w[0].singles.iter().zip(&w[1].singles).all(|(a, b)| a != b));
        }
    }

    #[test]
    fn circuit_json_round_trips(rows in 1usize..4, cols in 2usize..4, cycles in 1usize..8, seed in any::<u64>()) {
        let (_, c) = random_circuit(rows, cols, cycles, seed);
        let text = c.to_json();
        let back = Circuit::from_json(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn equal_sigmas_shrink_by_root_k(k in 1usize..40, sigma in 1e-4f64..1.0, f in -0.5f64..1.0) {
        let est = vec![XebEstimate { fidelity: f, sigma, n_samples: 10 }; k];
        let c = combine_inverse_variance(&est).unwrap();
        prop_assert!((c.sigma - sigma / (k as f64).sqrt()).abs() <= 1e-12 * sigma);
        prop_assert!((c.fidelity - f).abs() <= 1e-12);
    }

    #[test]
    fn sampling_cost_is_linear(flops in 1.0f64..1e20, n in 1.0f64..1e9, f in 1e-6f64..1.0, scale in 1.0f64..100.0) {
        let m = ReferenceMachine::summit();
        let base = estimate_sampling_cost(flops, n, f, &m).unwrap().runtime_seconds;
        let more_n = estimate_sampling_cost(flops, n * scale, f, &m).unwrap().runtime_seconds;
        let more_f = estimate_sampling_cost(flops, n, f * scale / 100.0, &m).unwrap().runtime_seconds;
        prop_assert!((more_n / base - scale).abs() <= 1e-9 * scale);
        prop_assert!((more_f / base - scale / 100.0).abs() <= 1e-9);
    }

    #[test]
    fn speedup_grows_with_discarded_budget(g in 1usize..40, dt in 0.0f64..0.3, f_hi in 0.01f64..1.0, shrink in 0.01f64..1.0) {
        let p = FsimParams { theta: std::f64::consts::FRAC_PI_2 - dt, ..FsimParams::nominal() };
        let hi = sfa_speedup(&CutAnalysis::synthetic(g, p, f_hi).unwrap()).unwrap().speedup;
        let lo = sfa_speedup(&CutAnalysis::synthetic(g, p, f_hi * shrink).unwrap()).unwrap().speedup;
        prop_assert!(lo >= hi * (1.0 - 1e-6), "F={} -> {hi}, F={} -> {lo}", f_hi, f_hi * shrink);
    }
}

#[test]
fn simulate_sample_score_pipeline() {
    let (_, c) = random_circuit(3, 4, 14, 21);
    let state = Simulator::default().run(&c).unwrap();
    let p = state.probabilities();
    let d = p.len() as f64;
    let purity_target = d * p.iter().map(|x| x * x).sum::<f64>() - 1.0;
    for f in [0.0, 0.4, 1.0] {
        let samples = sample_noisy_speckle(&state, f, 100_000, 5).unwrap();
        let est = linear_xeb(&ProbabilityRecord::from_samples(&state, &samples).unwrap()).unwrap();
        let target = f * purity_target;
        assert!((est.fidelity - target).abs() < 4.0 * est.sigma, "F={f}: {} vs {target} ± {}", est.fidelity, est.sigma);
    }
}

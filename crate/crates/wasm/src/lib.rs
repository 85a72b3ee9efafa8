//! wasm-bindgen entry points for the browser demos. Every function returns a JSON string.

use rcsbench::circuit::{fsim_matrix, generate_random_circuit, FsimParams, GateParams};
use rcsbench::costmodel::{schmidt_values, sfa_speedup, CutAnalysis};
use rcsbench::simulator::{sample_noisy_speckle, Simulator};
use rcsbench::topology::{pattern_sequence, GridTopology, SequenceKind};
use rcsbench::xeb::{ideal_xeb, ks_test, linear_xeb, pt_pdf, ProbabilityRecord};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest circuit the XEB explorer will simulate in the browser.
pub const MAX_DEMO_QUBITS: usize = 20;

const HIST_BINS: usize = 30;
const HIST_MAX: f64 = 6.0;

#[derive(Serialize)]
struct XebView {
    n_qubits: usize,
    n_samples: usize,
    fidelity: f64,
    sigma: f64,
    ideal_xeb: f64,
    p_at_estimate: f64,
    p_at_zero: f64,
    /// Bin centers and empirical density of `D p(x)` over the samples.
    centers: Vec<f64>,
    density: Vec<f64>,
    pt_at_estimate: Vec<f64>,
    pt_at_zero: Vec<f64>,
}

#[derive(Serialize)]
struct FsimView {
    /// |U_ij| row by row.
    magnitude: [[f64; 4]; 4],
    schmidt: [f64; 4],
    /// Path weights s_k^2 / 4.
    weights: [f64; 4],
    rank: usize,
    delta_theta: f64,
}

#[derive(Serialize)]
struct SfaPoint {
    delta_theta: f64,
    speedup: f64,
    log10_paths_needed: f64,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("view serialises")
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn xeb_view(rows: usize, cols: usize, cycles: usize, seed: u64, fidelity: f64, n_samples: usize) -> rcsbench::Result<XebView> {
    let n = rows * cols;
    if n > MAX_DEMO_QUBITS {
        return Err(rcsbench::Error::SizeLimit { n_qubits: n, limit: MAX_DEMO_QUBITS });
    }
    let topo = GridTopology::rectangular(rows, cols)?;
    let params = GateParams::uniform(&topo, FsimParams::nominal());
    let circuit = generate_random_circuit(&topo, &pattern_sequence(cycles, SequenceKind::Standard)?, seed, &params)?;
    let state = Simulator { max_qubits: MAX_DEMO_QUBITS }.run(&circuit)?;
    let samples = sample_noisy_speckle(&state, fidelity, n_samples, seed ^ 0x5eed)?;
    let rec = ProbabilityRecord::from_samples(&state, &samples)?;
    let est = linear_xeb(&rec)?;
    let width = HIST_MAX / HIST_BINS as f64;
    let mut counts = vec![0usize; HIST_BINS];
    for x in rec.scaled() {
        if x < HIST_MAX {
            counts[(x / width) as usize] += 1;
        }
    }
    let centers: Vec<f64> = (0..HIST_BINS).map(|i| (i as f64 + 0.5) * width).collect();
    Ok(XebView {
        n_qubits: n,
        n_samples,
        fidelity: est.fidelity,
        sigma: est.sigma,
        ideal_xeb: ideal_xeb(&state.probabilities()),
        p_at_estimate: ks_test(&rec, est.fidelity)?.p_value,
        p_at_zero: ks_test(&rec, 0.0)?.p_value,
        density: counts.iter().map(|&c| c as f64 / (n_samples as f64 * width)).collect(),
        pt_at_estimate: centers.iter().map(|&x| pt_pdf(x, est.fidelity.clamp(0.0, 1.0))).collect(),
        pt_at_zero: centers.iter().map(|&x| pt_pdf(x, 0.0)).collect(),
        centers,
    })
}

/// Simulates a random `rows x cols` circuit, draws speckle samples at `fidelity` and scores them.
#[wasm_bindgen(js_name = xebExplorer)]
pub fn xeb_explorer(rows: usize, cols: usize, cycles: usize, seed: u64, fidelity: f64, n_samples: usize) -> Result<String, JsError> {
    xeb_view(rows, cols, cycles, seed, fidelity, n_samples).map(|v| json(&v)).map_err(js_err)
}

fn fsim_view(p: FsimParams) -> rcsbench::Result<FsimView> {
    let u = fsim_matrix(&p);
    let schmidt = schmidt_values(&u)?;
    Ok(FsimView {
        magnitude: u.map(|row| row.map(|z| z.norm())),
        schmidt,
        weights: schmidt.map(|s| s * s / 4.0),
        rank: schmidt.iter().filter(|&&s| s > 1e-9).count(),
        delta_theta: p.theta - std::f64::consts::FRAC_PI_2,
    })
}

/// Magnitudes and operator Schmidt spectrum of one fSim gate.
#[wasm_bindgen(js_name = fsimExplorer)]
pub fn fsim_explorer(theta: f64, phi: f64, delta_plus: f64, delta_minus: f64, delta_minus_off: f64) -> Result<String, JsError> {
    fsim_view(FsimParams::new(theta, phi, delta_plus, delta_minus, delta_minus_off)).map(|v| json(&v)).map_err(js_err)
}

fn sfa_points(g: usize, phi: f64, fidelity: f64, max_delta_theta: f64, points: usize) -> rcsbench::Result<Vec<SfaPoint>> {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let dt = max_delta_theta * i as f64 / (points - 1) as f64;
            let params = FsimParams { theta: std::f64::consts::FRAC_PI_2 - dt, phi, ..FsimParams::nominal() };
            let s = sfa_speedup(&CutAnalysis::synthetic(g, params, fidelity)?)?;
            Ok(SfaPoint { delta_theta: dt, speedup: s.speedup, log10_paths_needed: s.log10_paths_needed })
        })
        .collect()
}

/// Speedup of truncated Schmidt-path simulation against `|δθ|` for `g` identical cross gates.
#[wasm_bindgen(js_name = sfaCurve)]
pub fn sfa_curve(g: usize, phi: f64, fidelity: f64, max_delta_theta: f64, points: usize) -> Result<String, JsError> {
    sfa_points(g, phi, fidelity, max_delta_theta, points).map(|v| json(&v)).map_err(js_err)
}

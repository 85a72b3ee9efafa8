use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{fsim_matrix, unitarity_error4, Bipartition, Circuit, FsimParams, Mat4};
use crate::{Error, Result};

/// CPU core count of the reference Schrödinger-Feynman run.
pub const REFERENCE_CORES: u64 = 7_630_848;

/// Operator-Schmidt coefficients of a two-qubit unitary, descending. They are the
/// singular values of the reshuffled matrix `M[(a,a'),(b,b')] = U[(a,b),(a',b')]`.
pub fn schmidt_values(u: &Mat4) -> Result<[f64; 4]> {
    let err = unitarity_error4(u);
    if err > 1e-10 {
        return Err(Error::NotUnitary(err));
    }
    let m = Matrix4::<Complex64>::from_fn(|r, c| {
        let (a, ap) = (r / 2, r % 2);
        let (b, bp) = (c / 2, c % 2);
        u[2 * a + b][2 * ap + bp]
    });
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok([s[0], s[1], s[2], s[3]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutGate {
    pub cycle: usize,
    pub a: usize,
    pub b: usize,
    pub params: FsimParams,
    /// `|θ - π/2|`.
    pub delta_theta: f64,
    pub schmidt: [f64; 4],
}

impl CutGate {
    fn new(cycle: usize, a: usize, b: usize, params: FsimParams) -> Result<Self> {
        Ok(Self {
            cycle,
            a,
            b,
            params,
            delta_theta: (params.theta - std::f64::consts::FRAC_PI_2).abs(),
            schmidt: schmidt_values(&fsim_matrix(&params))?,
        })
    }

    /// Number of Schmidt terms above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.schmidt.iter().filter(|&&s| s > tol).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutAnalysis {
    pub bipartition: Option<Bipartition>,
    pub n_left: usize,
    pub n_right: usize,
    /// Two-qubit gates across the cut, summed over all cycles.
    pub g: usize,
    pub gates: Vec<CutGate>,
    /// Target fidelity of the truncated simulation.
    pub fidelity_budget: f64,
}

impl CutAnalysis {
    /// `g` identical cross gates with parameters `params`.
    pub fn synthetic(g: usize, params: FsimParams, fidelity: f64) -> Result<Self> {
        let gate = CutGate::new(0, 0, 0, params)?;
        Ok(Self { bipartition: None, n_left: 0, n_right: 0, g, gates: vec![gate; g], fidelity_budget: fidelity })
    }

    pub fn mean_delta_theta(&self) -> f64 {
        if self.gates.is_empty() {
            return 0.0;
        }
        self.gates.iter().map(|g| g.delta_theta).sum::<f64>() / self.gates.len() as f64
    }

    /// log10 of the product of exact Schmidt ranks (untruncated path count).
    pub fn log10_path_count(&self) -> f64 {
        self.gates.iter().map(|g| (g.rank(1e-12) as f64).log10()).sum()
    }
}

pub fn sfa_cut(circuit: &Circuit, bipartition: &Bipartition, fidelity: f64) -> Result<CutAnalysis> {
    bipartition.validate(&circuit.qubits)?;
    let mut gates = Vec::new();
    for (i, cycle) in circuit.cycles.iter().enumerate() {
        for g in cycle.gates.iter().filter(|g| bipartition.crosses(g.a, g.b)) {
            gates.push(CutGate::new(i, g.a, g.b, g.params)?);
        }
    }
    Ok(CutAnalysis {
        bipartition: Some(bipartition.clone()),
        n_left: bipartition.left.len(),
        n_right: bipartition.right.len(),
        g: gates.len(),
        gates,
        fidelity_budget: fidelity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub g: usize,
    pub fidelity: f64,
    /// `g log10 4`: paths needed when every gate is balanced.
    pub log10_balanced_paths: f64,
    /// log10 of the fewest paths whose weights add up to the target fidelity.
    pub log10_paths_needed: f64,
    /// `F 4^g / K(F)`.
    pub speedup: f64,
}

const WEIGHT_FLOOR: f64 = 1e-14;
const BINS: usize = 1 << 15;

/// Path weights grouped by log-weight: `(count, weight sum)` per bin, heaviest bin last.
fn weight_bins(gates: &[[f64; 4]]) -> Vec<(f64, f64)> {
    let logs: Vec<Vec<(f64, f64)>> = gates
        .iter()
        .map(|w| w.iter().filter(|&&x| x > WEIGHT_FLOOR).map(|&x| (x, x.ln())).collect())
        .collect();
    let lo: f64 = logs.iter().map(|l| l.iter().map(|p| p.1).fold(0.0, f64::min)).sum();
    let width = (-lo / (BINS - 1) as f64).max(1e-300);
    let bin = |x: f64| (((x - lo) / width).round().max(0.0) as usize).min(BINS - 1);
    let mut count = vec![0.0f64; BINS];
    let mut wsum = vec![0.0f64; BINS];
    count[bin(0.0)] = 1.0;
    wsum[bin(0.0)] = 1.0;
    for gate in &logs {
        let mut nc = vec![0.0f64; BINS];
        let mut nw = vec![0.0f64; BINS];
        for b in 0..BINS {
            if count[b] == 0.0 {
                continue;
            }
            let rep = (wsum[b] / count[b]).ln();
            for &(w, lw) in gate {
                let t = bin(rep + lw);
                nc[t] += count[b];
                nw[t] += wsum[b] * w;
            }
        }
        count = nc;
        wsum = nw;
    }
    count.into_iter().zip(wsum).filter(|(c, _)| *c > 0.0).collect()
}

/// Fewest paths (fractional) reaching total weight `f`, taking heaviest paths first.
fn paths_needed(bins: &[(f64, f64)], f: f64) -> f64 {
    let mut cum = 0.0;
    let mut k = 0.0;
    for &(c, w) in bins.iter().rev() {
        if cum + w >= f {
            return k + (f - cum) / (w / c);
        }
        cum += w;
        k += c;
    }
    k
}

/// Speedup over balanced gates from imbalanced Schmidt spectra.
///
/// Cutting the gates expands the circuit into `Π rank_k` paths; path `(j_1..j_g)` carries
/// weight `Π s_{k,j_k}^2 / 4`, and the weights sum to 1. Reaching fidelity `F` needs the
/// `K(F)` heaviest paths. Balanced gates need `F 4^g` of them, so the speedup is
/// `F 4^g / K(F)`. It is 1 for balanced gates at every `F` and grows as `F` drops.
pub fn sfa_speedup(cut: &CutAnalysis) -> Result<SpeedupReport> {
    let f = cut.fidelity_budget;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidArgument(format!("fidelity {f} outside (0, 1]")));
    }
    let weights: Vec<[f64; 4]> = cut.gates.iter().map(|g| g.schmidt.map(|s| s * s / 4.0)).collect();
    let k = paths_needed(&weight_bins(&weights), f);
    let log10_balanced = cut.g as f64 * 4f64.log10();
    let log10_k = k.log10();
    Ok(SpeedupReport {
        g: cut.g,
        fidelity: f,
        log10_balanced_paths: log10_balanced,
        log10_paths_needed: log10_k,
        speedup: 10f64.powf(f.log10() + log10_balanced - log10_k),
    })
}

/// Exact `K(F)` for `g` identical gates by enumerating weight multiplicities.
pub fn paths_needed_identical(weights: [f64; 4], g: usize, f: f64) -> f64 {
    let ln_fact = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    let w: Vec<f64> = weights.into_iter().filter(|&x| x > WEIGHT_FLOOR).collect();
    let mut classes: Vec<(f64, f64)> = Vec::new(); // (path weight, count)
    let mut push = |ns: &[usize]| {
        let lw: f64 = ns.iter().zip(&w).map(|(&n, &x)| n as f64 * x.ln()).sum();
        let lc = ln_fact(g) - ns.iter().map(|&n| ln_fact(n)).sum::<f64>();
        classes.push((lw.exp(), lc.exp()));
    };
    fn rec(ns: &mut Vec<usize>, left: usize, slots: usize, push: &mut dyn FnMut(&[usize])) {
        if ns.len() == slots - 1 {
            ns.push(left);
            push(ns);
            ns.pop();
            return;
        }
        for n in 0..=left {
            ns.push(n);
            rec(ns, left - n, slots, push);
            ns.pop();
        }
    }
    rec(&mut Vec::new(), g, w.len(), &mut push);
    classes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cum = 0.0;
    let mut k = 0.0;
    for (pw, c) in classes {
        if cum + pw * c >= f {
            return k + (f - cum) / pw;
        }
        cum += pw * c;
        k += c;
    }
    k
}

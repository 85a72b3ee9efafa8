//! Linear cross-entropy benchmarking and its statistics.
//!
//! With `D = 2^n` and ideal probabilities `p_i` of the sampled bitstrings, the linear XEB
//! fidelity is `F = D <p> - 1` and its standard error is `D sqrt(Var(p) / N_s)`. Scaled
//! probabilities `x = D p` of a fidelity-`F` sampler follow `(F x + 1 - F) e^{-x}`.

use std::collections::BTreeSet;

use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numeric::{compensated_sum, mean_and_variance};
use crate::optimize::{bfgs_minimize, OptimizerConfig};
use crate::rng::{stream_rng, PURPOSE_BOOTSTRAP};
use crate::circuit::{Bipartition, Circuit};
use crate::samples::SampleSet;
use crate::simulator::{run, StateVector};
use crate::{Error, Result};

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 2500;

/// Ideal probabilities of a set of sampled bitstrings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRecord {
    pub n_qubits: usize,
    pub probs: Vec<f64>,
}

impl ProbabilityRecord {
    pub fn new(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { n_qubits, probs })
    }

    /// Looks up every sample's ideal probability in `state`.
    pub fn from_samples(state: &StateVector, samples: &SampleSet) -> Result<Self> {
        if state.n_qubits() != samples.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "{}-qubit samples against a {}-qubit state",
                samples.n_qubits,
                state.n_qubits()
            )));
        }
        Self::new(state.n_qubits(), samples.bitstrings.iter().map(|&b| state.probability(b)).collect())
    }

    pub fn n_samples(&self) -> usize {
        self.probs.len()
    }

    pub fn dim(&self) -> f64 {
        (self.n_qubits as f64).exp2()
    }

    /// `D p_i` for every sample.
    pub fn scaled(&self) -> Vec<f64> {
        let d = self.dim();
        self.probs.iter().map(|p| d * p).collect()
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.probs.len() < needed {
            return Err(Error::InsufficientSamples { needed, got: self.probs.len() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XebEstimate {
    pub fidelity: f64,
    pub sigma: f64,
    pub n_samples: usize,
}

pub fn linear_xeb(rec: &ProbabilityRecord) -> Result<XebEstimate> {
    rec.require(2)?;
    let (mean, var) = mean_and_variance(&rec.probs);
    let d = rec.dim();
    Ok(XebEstimate {
        fidelity: d * mean - 1.0,
        sigma: d * (var / rec.n_samples() as f64).sqrt(),
        n_samples: rec.n_samples(),
    })
}

/// Expected linear XEB of perfect samples, `D sum p^2 - 1`; tends to 1 for deep circuits.
pub fn ideal_xeb(probs: &[f64]) -> f64 {
    probs.len() as f64 * compensated_sum(probs.iter().map(|p| p * p)) - 1.0
}

/// Linear XEB divided by [`ideal_xeb`] of the scoring distribution.
pub fn normalized_xeb(state: &StateVector, samples: &SampleSet) -> Result<XebEstimate> {
    let e = linear_xeb(&ProbabilityRecord::from_samples(state, samples)?)?;
    let ideal = ideal_xeb(&state.probabilities());
    Ok(XebEstimate { fidelity: e.fidelity / ideal, sigma: e.sigma / ideal, ..e })
}

/// Fidelity of a two-patch circuit as the product of the per-half XEB values, each scored
/// on the marginal bitstrings of that half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchXeb {
    pub left: XebEstimate,
    pub right: XebEstimate,
    pub fidelity: f64,
    pub sigma: f64,
}

pub fn patch_xeb(circuit: &Circuit, bipartition: &Bipartition, samples: &SampleSet, normalize: bool) -> Result<PatchXeb> {
    bipartition.validate(&circuit.qubits)?;
    let score = |half: &BTreeSet<usize>| -> Result<XebEstimate> {
        let state = run(&circuit.restrict(half)?)?;
        let marginal = samples.marginal(&circuit.qubits, half)?;
        if normalize {
            normalized_xeb(&state, &marginal)
        } else {
            linear_xeb(&ProbabilityRecord::from_samples(&state, &marginal)?)
        }
    };
    let (left, right) = (score(&bipartition.left)?, score(&bipartition.right)?);
    let fidelity = left.fidelity * right.fidelity;
    let sigma = ((left.sigma * right.fidelity).powi(2) + (right.sigma * left.fidelity).powi(2)).sqrt();
    Ok(PatchXeb { left, right, fidelity, sigma })
}

pub fn xeb_sigma(rec: &ProbabilityRecord) -> Result<f64> {
    Ok(linear_xeb(rec)?.sigma)
}

pub fn pt_pdf(x: f64, f: f64) -> f64 {
    (f * x + (1.0 - f)) * (-x).exp()
}

pub fn pt_cdf(x: f64, f: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 - (-x).exp() * (1.0 + f * x)
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small arguments
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let sum: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let sum: f64 = (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of `values` against `cdf`, asymptotic p-value.
pub fn ks_test_values<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> KsResult {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let c = cdf(x);
        d.max((i as f64 + 1.0) / n - c).max(c - i as f64 / n)
    });
    KsResult { statistic, p_value: kolmogorov_survival(n.sqrt() * statistic) }
}

/// KS test of the scaled probabilities against the fidelity-`f` Porter-Thomas mixture.
pub fn ks_test(rec: &ProbabilityRecord, f: f64) -> Result<KsResult> {
    rec.require(10)?;
    Ok(ks_test_values(&rec.scaled(), |x| pt_cdf(x, f)))
}

/// `(x, empirical CDF, model CDF)` at `points` evenly spaced quantiles of the data.
pub fn cdf_table(rec: &ProbabilityRecord, f: f64, points: usize) -> Vec<(f64, f64, f64)> {
    let mut xs = rec.scaled();
    xs.sort_by(f64::total_cmp);
    if xs.is_empty() || points == 0 {
        return Vec::new();
    }
    let n = xs.len();
    (0..points)
        .map(|k| {
            let i = ((k + 1) * n / points).clamp(1, n) - 1;
            let x = xs[i];
            let ecdf = xs.partition_point(|&v| v <= x) as f64 / n as f64;
            (x, ecdf, pt_cdf(x, f))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if values.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// Least-squares fit of `a exp(-(x - mu)^2 / 2 s^2)` to histogram counts.
pub fn fit_gaussian(hist: &Histogram) -> GaussianFit {
    let centers = hist.centers();
    let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return GaussianFit { amplitude: 0.0, mean: f64::NAN, sigma: f64::NAN };
    }
    let m = centers.iter().zip(&counts).map(|(x, c)| x * c).sum::<f64>() / total;
    let v = centers.iter().zip(&counts).map(|(x, c)| c * (x - m).powi(2)).sum::<f64>() / total;
    let scale = if v > 0.0 { v.sqrt() } else { 1.0 };
    let peak = counts.iter().copied().fold(0.0, f64::max);
    // fit in standardized coordinates: (a / peak, mu, ln s)
    let z: Vec<f64> = centers.iter().map(|x| (x - m) / scale).collect();
    let y: Vec<f64> = counts.iter().map(|c| c / peak).collect();
    let sse = |p: &[f64]| {
        let s = p[2].exp();
        z.iter().zip(&y).map(|(zi, yi)| (p[0] * (-(zi - p[1]).powi(2) / (2.0 * s * s)).exp() - yi).powi(2)).sum()
    };
    let cfg = OptimizerConfig { h: 1e-6, grad_tol: 1e-9, ..Default::default() };
    let r = bfgs_minimize(sse, &[1.0, 0.0, 0.0], &cfg);
    GaussianFit { amplitude: r.x[0] * peak, mean: m + r.x[1] * scale, sigma: r.x[2].exp() * scale }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityTest {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub statistic: f64,
    pub p_value: f64,
}

/// Jarque-Bera test; the statistic is asymptotically chi-square with 2 degrees of freedom.
pub fn jarque_bera(values: &[f64]) -> NormalityTest {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let moment = |k: i32| compensated_sum(values.iter().map(|v| (v - mean).powi(k))) / n;
    let m2 = moment(2);
    let skewness = moment(3) / m2.powf(1.5);
    let excess_kurtosis = moment(4) / (m2 * m2) - 3.0;
    let statistic = n / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
    NormalityTest { skewness, excess_kurtosis, statistic, p_value: (-statistic / 2.0).exp() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub sigma: f64,
    pub fidelities: Vec<f64>,
    pub histogram: Histogram,
    pub gaussian: GaussianFit,
    pub normality: NormalityTest,
}

/// Resamples the record with replacement `n_resamples` times and recomputes `F` each time.
pub fn bootstrap_xeb(rec: &ProbabilityRecord, n_resamples: usize, seed: u64) -> Result<BootstrapResult> {
    rec.require(2)?;
    if n_resamples < 100 {
        return Err(Error::InvalidArgument(format!("{n_resamples} resamples, need at least 100")));
    }
    let n = rec.n_samples();
    let d = rec.dim();
    let one = |r: usize| {
        let mut rng = stream_rng(seed, PURPOSE_BOOTSTRAP, r as u64);
        let sum = compensated_sum((0..n).map(|_| rec.probs[rng.gen_range(0..n)]));
        d * sum / n as f64 - 1.0
    };
    #[cfg(feature = "parallel")]
    let fidelities: Vec<f64> = (0..n_resamples).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let fidelities: Vec<f64> = (0..n_resamples).map(one).collect();
    let (_, var) = mean_and_variance(&fidelities);
    let hist = histogram(&fidelities, 50);
    let gaussian = fit_gaussian(&hist);
    let normality = jarque_bera(&fidelities);
    Ok(BootstrapResult { sigma: var.sqrt(), fidelities, histogram: hist, gaussian, normality })
}

/// Inverse-variance weighted mean of independent estimates.
pub fn combine_inverse_variance(estimates: &[XebEstimate]) -> Result<XebEstimate> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("no estimates to combine".into()));
    }
    if let Some(e) = estimates.iter().find(|e| !(e.sigma > 0.0)) {
        return Err(Error::InvalidArgument(format!("non-positive sigma {}", e.sigma)));
    }
    let wsum = compensated_sum(estimates.iter().map(|e| 1.0 / (e.sigma * e.sigma)));
    let fsum = compensated_sum(estimates.iter().map(|e| e.fidelity / (e.sigma * e.sigma)));
    Ok(XebEstimate {
        fidelity: fsum / wsum,
        sigma: (1.0 / wsum).sqrt(),
        n_samples: estimates.iter().map(|e| e.n_samples).sum(),
    })
}

/// Speckle-purity fidelity `sqrt(Var(P) D^2 (D+1)/(D-1))`, population variance over the
/// full distribution, clipped to [0, 1].
pub fn speckle_purity(dist: &[f64]) -> Result<f64> {
    let d = dist.len() as f64;
    if dist.len() < 2 {
        return Err(Error::InvalidArgument("distribution needs at least 2 entries".into()));
    }
    let total = compensated_sum(dist.iter().copied());
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(total));
    }
    let mean = 1.0 / d;
    let var = compensated_sum(dist.iter().map(|p| (p - mean) * (p - mean))) / d;
    Ok((var * d * d * (d + 1.0) / (d - 1.0)).sqrt().clamp(0.0, 1.0))
}

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rcsbench::calibration::{
    calibrate_family, split_four_patches, CalibrationConfig, PartitionFamily, PatchReport, TrainingInstance,
    TRAIN_ALL, TRAIN_THETA_PHI,
};
use rcsbench::circuit::{
    default_keep_last, generate_random_circuit, make_elided, make_patch, Bipartition, Circuit, FsimParams,
    GateParams,
};
use rcsbench::costmodel::{
    circuit_to_tn, estimate_sampling_cost, find_path_greedy, sfa_cut, sfa_speedup, slice_network, CostReport,
    CutAnalysis, ReferenceMachine,
};
use rcsbench::optimize::OptimizerConfig;
use rcsbench::rng::{derive_seed, RNG_ALGORITHM};
use rcsbench::samples::{SampleSet, SampleSidecar, SAMPLES_FORMAT};
use rcsbench::simulator::{
    apply_readout_error, predicted_fidelity, sample_ideal, sample_noisy_speckle, NoiseModel, Simulator, StateVector, TrajectorySampler,
};
use rcsbench::topology::{pattern_sequence, GridTopology, SequenceKind};
use rcsbench::xeb::{
    bootstrap_xeb, cdf_table, combine_inverse_variance, ideal_xeb, ks_test, ks_test_values, linear_xeb, pt_cdf,
    KsResult, ProbabilityRecord, XebEstimate,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::manifest::{read, sha256_bytes, write_text, ManifestBuilder};
use crate::{
    AnalyzeArgs, CalibrateArgs, Cli, Command, CostCommand, CutArgs, FamilyArg, GenerateArgs, KindArg, ModelArg,
    ParamsArgs, ReportArgs, SampleArgs, SfaArgs, TncArgs, TopologyArgs, TopologySource, TrainArg, VariantArg,
    VariantsArgs, CliError,
};

type Result<T> = std::result::Result<T, CliError>;

/// Appends `--key value` for every entry of the `--config` JSON object whose flag is not
/// already on the command line.
pub fn apply_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(argv) };
    let text = String::from_utf8(read(Path::new(&path))?).map_err(|e| CliError::input(format!("{path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{path}: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::input(format!("{path}: expected a JSON object of flag values")));
    };
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        let scalar = |v: &Value| -> Result<String> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                other => Err(CliError::input(format!("{path}: field '{key}' has unsupported value {other}"))),
            }
        };
        match &value {
            Value::Bool(true) => argv.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                argv.push(flag);
                for item in items {
                    argv.push(scalar(item)?);
                }
            }
            v => {
                argv.push(flag);
                argv.push(scalar(v)?);
            }
        }
    }
    Ok(argv)
}

pub fn dispatch(cli: &Cli, args: &[String]) -> Result<()> {
    match &cli.command {
        Command::Topology(a) => cmd_topology(a, args),
        Command::Params(a) => cmd_params(a, args),
        Command::Generate(a) => cmd_generate(a, args),
        Command::Variants(a) => cmd_variants(a, args),
        Command::Sample(a) => cmd_sample(a, args),
        Command::Analyze(a) => cmd_analyze(a, args),
        Command::Calibrate(a) => cmd_calibrate(a, args),
        Command::Cost(CostCommand::Tnc(a)) => cmd_tnc(a, args),
        Command::Cost(CostCommand::Sfa(a)) => cmd_sfa(a, args),
        Command::Report(a) => cmd_report(a, args),
    }
}

fn read_string(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn context<T>(path: &Path, r: rcsbench::Result<T>) -> Result<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Input(m) => CliError::input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialises") + "\n"
}

fn load_topology(src: &TopologySource, manifest: &mut ManifestBuilder) -> Result<GridTopology> {
    if let Some(path) = &src.topology {
        manifest.input(path);
        return context(path, GridTopology::from_json(&read_string(path)?));
    }
    if let Some(grid) = &src.grid {
        let dims: Vec<usize> = grid
            .split(['x', 'X'])
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CliError::input(format!("--grid expects ROWSxCOLS, got '{grid}'")))?;
        return match dims[..] {
            [rows, cols] => Ok(GridTopology::rectangular(rows, cols)?),
            _ => Err(CliError::input(format!("--grid expects ROWSxCOLS, got '{grid}'"))),
        };
    }
    if src.sixty {
        return Ok(GridTopology::sixty_qubit());
    }
    Err(CliError::input("one of --topology, --grid or --sixty is required"))
}

fn load_circuit(path: &Path, manifest: &mut ManifestBuilder) -> Result<Circuit> {
    manifest.input(path);
    context(path, Circuit::from_json(&read_string(path)?))
}

fn bipartition(cut: &CutArgs, circuit: &Circuit) -> Result<Bipartition> {
    let bp = if let Some(c) = cut.cut_col {
        Bipartition::by_column(&circuit.qubits, circuit.cols, c)
    } else if let Some(r) = cut.cut_row {
        Bipartition::by_row(&circuit.qubits, circuit.cols, r)
    } else if let Some(left) = &cut.left {
        let left: BTreeSet<usize> = left.iter().copied().collect();
        let right = circuit.qubits.iter().copied().filter(|q| !left.contains(q)).collect();
        Bipartition::new(left, right)
    } else {
        return Err(CliError::input("one of --cut-col, --cut-row or --left is required"));
    };
    bp.validate(&circuit.qubits)?;
    if bp.left.is_empty() || bp.right.is_empty() {
        return Err(CliError::input("cut leaves one half empty"));
    }
    Ok(bp)
}

fn cmd_topology(a: &TopologyArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("topology", args);
    let topo = load_topology(&a.source, &mut m)?;
    write_text(&a.out, &(topo.to_json() + "\n"))?;
    m.output(&a.out).write()?;
    Ok(())
}

fn cmd_params(a: &ParamsArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("params", args);
    let topo = load_topology(&a.source, &mut m)?;
    let mut params = GateParams::uniform(&topo, FsimParams::nominal());
    if a.perturb != 0.0 {
        params = params.perturbed(a.seed, a.perturb);
    }
    write_text(&a.out, &(params.to_json() + "\n"))?;
    m.seed("seed", a.seed).output(&a.out).write()?;
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("generate", args);
    let topo = load_topology(&a.source, &mut m)?;
    let params = match &a.params {
        Some(p) => {
            m.input(p);
            context(p, GateParams::from_json(&read_string(p)?))?
        }
        None => GateParams::uniform(&topo, FsimParams::nominal()),
    };
    let kind = match a.kind {
        KindArg::Standard => SequenceKind::Standard,
        KindArg::Deep22 => SequenceKind::Deep22,
    };
    let circuit = generate_random_circuit(&topo, &pattern_sequence(a.cycles, kind)?, a.seed, &params)?;
    write_text(&a.out, &(circuit.to_json() + "\n"))?;
    m.seed("seed", a.seed).output(&a.out).write()?;
    Ok(())
}

fn cmd_variants(a: &VariantsArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("variants", args);
    let circuit = load_circuit(&a.circuit, &mut m)?;
    let bp = bipartition(&a.cut, &circuit)?;
    let out = match a.kind {
        VariantArg::Patch => make_patch(&circuit, &bp)?,
        VariantArg::Elided => make_elided(&circuit, &bp, a.keep_last.unwrap_or(default_keep_last(circuit.n_cycles())))?,
    };
    write_text(&a.out, &(out.to_json() + "\n"))?;
    m.output(&a.out).write()?;
    Ok(())
}

fn sidecar_path(samples: &Path) -> PathBuf {
    let mut name = samples.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    samples.with_file_name(name)
}

/// Name of `target` as seen from the directory of `from`: the bare file name when both
/// share a directory, the path as given otherwise.
fn relative_name(target: &Path, from: &Path) -> String {
    if target.parent() == from.parent() {
        if let Some(name) = target.file_name() {
            return name.to_string_lossy().into_owned();
        }
    }
    target.display().to_string()
}

fn load_noise(path: &Option<PathBuf>, m: &mut ManifestBuilder) -> Result<NoiseModel> {
    let noise = match path {
        Some(p) => {
            m.input(p);
            serde_json::from_str(&read_string(p)?).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?
        }
        None => NoiseModel::simultaneous_defaults(),
    };
    noise.validate()?;
    Ok(noise)
}

fn cmd_sample(a: &SampleArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("sample", args);
    let circuit_bytes = read(&a.circuit)?;
    let circuit = load_circuit(&a.circuit, &mut m)?;
    if circuit.n_qubits() > a.max_qubits {
        return Err(rcsbench::Error::SizeLimit { n_qubits: circuit.n_qubits(), limit: a.max_qubits }.into());
    }
    if a.n_samples == 0 {
        return Err(CliError::input("--n-samples must be positive"));
    }
    let needs_noise = a.model != ModelArg::Ideal || a.readout;
    let noise = if needs_noise { load_noise(&a.noise, &mut m)? } else { NoiseModel::noiseless() };
    let sim = Simulator { max_qubits: a.max_qubits };
    let (samples, mut model) = match a.model {
        ModelArg::Ideal => (sample_ideal(&sim.run(&circuit)?, a.n_samples, a.seed), "ideal".to_string()),
        ModelArg::Speckle => {
            let f = a.fidelity.unwrap_or_else(|| predicted_fidelity(&circuit, &noise));
            (sample_noisy_speckle(&sim.run(&circuit)?, f, a.n_samples, a.seed)?, format!("speckle(F={f})"))
        }
        ModelArg::Trajectory => {
            let sampler = TrajectorySampler::new(&circuit, &noise, a.max_qubits)?;
            let (s, _) = sampler.sample_shots(a.n_samples, a.shots, a.seed);
            (s, format!("trajectory(e1={}, e2={}, shots={})", noise.e1, noise.e2, a.shots.max(1)))
        }
    };
    let samples = if a.readout {
        model.push_str(&format!("+readout(e_r0={}, e_r1={})", noise.e_r0, noise.e_r1));
        apply_readout_error(&samples, &noise, derive_seed(a.seed, 1))
    } else {
        samples
    };
    let mut bytes = Vec::with_capacity(8 * samples.len());
    samples.write_binary(&mut bytes)?;
    fs::write(&a.out, &bytes).map_err(|e| CliError::input(format!("{}: {e}", a.out.display())))?;
    let sidecar = SampleSidecar {
        format: SAMPLES_FORMAT.into(),
        n_qubits: samples.n_qubits,
        n_samples: samples.len(),
        seed: a.seed,
        rng: RNG_ALGORITHM.into(),
        model,
        producer: format!("rcsbench {}", env!("CARGO_PKG_VERSION")),
        circuit_file: Some(relative_name(&a.circuit, &a.out)),
        circuit_sha256: Some(sha256_bytes(&circuit_bytes)),
    };
    let side = sidecar_path(&a.out);
    write_text(&side, &to_json(&sidecar))?;
    m.seed("seed", a.seed).output(&a.out).output(&side).write()?;
    Ok(())
}

fn read_sidecar(samples: &Path) -> Result<Option<SampleSidecar>> {
    let path = sidecar_path(samples);
    if !path.exists() {
        return Ok(None);
    }
    serde_json::from_str(&read_string(&path)?)
        .map(Some)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_samples(path: &Path, circuit_bytes: &[u8], n_qubits: usize, m: &mut ManifestBuilder) -> Result<SampleSet> {
    m.input(path);
    let width = match read_sidecar(path)? {
        Some(side) => {
            if let Some(expected) = &side.circuit_sha256 {
                if *expected != sha256_bytes(circuit_bytes) && side.n_qubits == n_qubits {
                    return Err(CliError::input(format!(
                        "{}: samples were drawn from a different circuit (sha256 {expected})",
                        path.display()
                    )));
                }
            }
            side.n_qubits
        }
        None => n_qubits,
    };
    context(path, SampleSet::read_binary(&read(path)?[..], width))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Hypothesis {
    kind: String,
    fidelity: f64,
    p_value: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BootstrapSummary {
    resamples: usize,
    sigma: f64,
    gaussian_mean: f64,
    gaussian_sigma: f64,
    jarque_bera_p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct AnalysisReport {
    report: String,
    circuit: String,
    samples: String,
    n_qubits: usize,
    n_samples: usize,
    fidelity: f64,
    sigma: f64,
    /// `D sum p^2 - 1` of the circuit's ideal distribution.
    ideal_xeb: f64,
    normalized_fidelity: f64,
    ks_at_estimate: KsResult,
    ks_at_zero: KsResult,
    bootstrap: Option<BootstrapSummary>,
    hypotheses: Vec<Hypothesis>,
}

fn hypotheses(a: &AnalyzeArgs, p_at: impl Fn(f64) -> f64) -> Vec<Hypothesis> {
    let expect = a.expect.iter().map(|&f| {
        let p = p_at(f);
        Hypothesis { kind: "consistent".into(), fidelity: f, p_value: p, threshold: a.alpha, pass: p >= a.alpha }
    });
    let reject = a.reject.iter().map(|&f| {
        let p = p_at(f);
        Hypothesis { kind: "rejected".into(), fidelity: f, p_value: p, threshold: a.reject_alpha, pass: p < a.reject_alpha }
    });
    expect.chain(reject).collect()
}

fn analyze_one(
    a: &AnalyzeArgs,
    circuit_path: &Path,
    samples_path: &Path,
    seed: u64,
    m: &mut ManifestBuilder,
) -> Result<(AnalysisReport, ProbabilityRecord, StateVector)> {
    let circuit_bytes = read(circuit_path)?;
    let circuit = load_circuit(circuit_path, m)?;
    let samples = load_samples(samples_path, &circuit_bytes, circuit.n_qubits(), m)?;
    if samples.n_qubits != circuit.n_qubits() {
        return Err(CliError::input(format!(
            "{}: {}-qubit samples for a {}-qubit circuit",
            samples_path.display(),
            samples.n_qubits,
            circuit.n_qubits()
        )));
    }
    let state = Simulator::default().run(&circuit)?;
    let rec = ProbabilityRecord::from_samples(&state, &samples)?;
    let est = linear_xeb(&rec)?;
    let ideal = ideal_xeb(&state.probabilities());
    let bootstrap = if a.bootstrap > 0 {
        let b = bootstrap_xeb(&rec, a.bootstrap, seed)?;
        Some(BootstrapSummary {
            resamples: a.bootstrap,
            sigma: b.sigma,
            gaussian_mean: b.gaussian.mean,
            gaussian_sigma: b.gaussian.sigma,
            jarque_bera_p: b.normality.p_value,
        })
    } else {
        None
    };
    let report = AnalysisReport {
        report: "analysis".into(),
        circuit: circuit_path.display().to_string(),
        samples: samples_path.display().to_string(),
        n_qubits: circuit.n_qubits(),
        n_samples: samples.len(),
        fidelity: est.fidelity,
        sigma: est.sigma,
        ideal_xeb: ideal,
        normalized_fidelity: est.fidelity / ideal,
        ks_at_estimate: ks_test(&rec, est.fidelity)?,
        ks_at_zero: ks_test(&rec, 0.0)?,
        bootstrap,
        hypotheses: hypotheses(a, |f| ks_test(&rec, f).map(|k| k.p_value).unwrap_or(0.0)),
    };
    Ok((report, rec, state))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CombinedReport {
    report: String,
    instances: Vec<AnalysisReport>,
    combined: XebEstimate,
    ks_at_combined: KsResult,
    ks_at_zero: KsResult,
    hypotheses: Vec<Hypothesis>,
}

fn failed_hypotheses(h: &[Hypothesis]) -> Result<()> {
    let failed: Vec<String> =
        h.iter().filter(|h| !h.pass).map(|h| format!("{} F={} (p={:.3e})", h.kind, h.fidelity, h.p_value)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Hypothesis(failed.join(", ")))
    }
}

fn write_cdf_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut text = String::from("x,empirical_cdf,model_cdf\n");
    for (x, e, model) in rows {
        text.push_str(&format!("{x},{e},{model}\n"));
    }
    write_text(path, &text)
}

fn cmd_analyze(a: &AnalyzeArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("analyze", args);
    m.seed("seed", a.seed);
    let (json, csv_rows, hyp) = if let Some(dir) = &a.dir {
        let mut bins: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin") && sidecar_path(p).exists())
            .collect();
        bins.sort();
        if bins.is_empty() {
            return Err(CliError::input(format!("{}: no sample files with sidecars", dir.display())));
        }
        let mut reports = Vec::new();
        let mut pooled = Vec::new();
        for (i, bin) in bins.iter().enumerate() {
            let side = read_sidecar(bin)?.expect("filtered on sidecar presence");
            let circuit = side
                .circuit_file
                .map(|c| dir.join(c))
                .ok_or_else(|| CliError::input(format!("{}: sidecar names no circuit", bin.display())))?;
            let (report, rec, _) = analyze_one(a, &circuit, bin, derive_seed(a.seed, i as u64), &mut m)?;
            pooled.extend(rec.scaled());
            reports.push(report);
        }
        let estimates: Vec<XebEstimate> = reports
            .iter()
            .map(|r| XebEstimate { fidelity: r.fidelity, sigma: r.sigma, n_samples: r.n_samples })
            .collect();
        let combined = combine_inverse_variance(&estimates)?;
        let ks = |f: f64| ks_test_values(&pooled, |x| pt_cdf(x, f));
        let hyp = hypotheses(a, |f| ks(f).p_value);
        let rows = pooled_cdf(&pooled, combined.fidelity);
        let report = CombinedReport {
            report: "analysis-combined".into(),
            instances: reports,
            combined,
            ks_at_combined: ks(combined.fidelity),
            ks_at_zero: ks(0.0),
            hypotheses: hyp.clone(),
        };
        (to_json(&report), rows, hyp)
    } else {
        let (circuit, samples) = (a.circuit.as_ref().expect("clap"), a.samples.as_ref().expect("clap"));
        let (report, rec, _) = analyze_one(a, circuit, samples, a.seed, &mut m)?;
        let rows = cdf_table(&rec, report.fidelity, 100);
        let hyp = report.hypotheses.clone();
        (to_json(&report), rows, hyp)
    };
    write_text(&a.out, &json)?;
    m.output(&a.out);
    if let Some(csv) = &a.csv {
        write_cdf_csv(csv, &csv_rows)?;
        m.output(csv);
    }
    m.write()?;
    failed_hypotheses(&hyp)
}

fn pooled_cdf(values: &[f64], f: f64) -> Vec<(f64, f64, f64)> {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    (1..=100)
        .map(|k| {
            let x = xs[(k * n / 100).clamp(1, n) - 1];
            (x, xs.partition_point(|&v| v <= x) as f64 / n as f64, pt_cdf(x, f))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CalibrationReport {
    report: String,
    partitions: usize,
    training_instances: usize,
    patches: Vec<PatchReport>,
}

fn cmd_calibrate(a: &CalibrateArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("calibrate", args);
    let topo = load_topology(&a.source, &mut m)?;
    if a.circuits.len() != a.samples.len() {
        return Err(CliError::input(format!("{} circuits but {} sample files", a.circuits.len(), a.samples.len())));
    }
    let mut training = Vec::with_capacity(a.circuits.len());
    for (cp, sp) in a.circuits.iter().zip(&a.samples) {
        let bytes = read(cp)?;
        let circuit = load_circuit(cp, &mut m)?;
        let samples = load_samples(sp, &bytes, circuit.n_qubits(), &mut m)?;
        training.push(TrainingInstance { circuit, samples });
    }
    let initial = match &a.initial {
        Some(p) => {
            m.input(p);
            context(p, GateParams::from_json(&read_string(p)?))?
        }
        None => training[0].circuit.params(),
    };
    let family = match a.family {
        FamilyArg::Four => PartitionFamily::single(split_four_patches(&topo)?),
        FamilyArg::Staggered => PartitionFamily::staggered_four(&topo)?,
        FamilyArg::Columns => {
            if a.cuts.is_empty() {
                return Err(CliError::input("--family columns needs --cuts"));
            }
            PartitionFamily::column_splits(&topo, &a.cuts)?
        }
    };
    let data: Vec<Vec<Vec<TrainingInstance>>> =
        family.partitions.iter().map(|p| vec![training.clone(); p.len()]).collect();
    let config = CalibrationConfig {
        optimizer: OptimizerConfig { max_iters: a.max_iters, h: a.step, ..Default::default() },
        trainable: match a.train {
            TrainArg::All => TRAIN_ALL,
            TrainArg::ThetaPhi => TRAIN_THETA_PHI,
        },
    };
    let out = calibrate_family(&family, &data, &initial, &config)?;
    write_text(&a.out, &(out.params.to_json() + "\n"))?;
    let report_path = {
        let mut name = a.out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".report.json");
        a.out.with_file_name(name)
    };
    let report = CalibrationReport {
        report: "calibration".into(),
        partitions: family.partitions.len(),
        training_instances: training.len(),
        patches: out.patches,
    };
    write_text(&report_path, &to_json(&report))?;
    m.output(&a.out).output(&report_path).write()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TncReport {
    report: String,
    circuit: String,
    n_qubits: usize,
    n_cycles: usize,
    open_qubits: Vec<usize>,
    n_tensors: usize,
    restarts: usize,
    best_restart: usize,
    unsliced_flops: f64,
    unsliced_largest_log2_size: f64,
    max_log2_size: f64,
    sliced_indices: usize,
    n_slices: f64,
    largest_log2_size: f64,
    flops_per_sample: f64,
    cost: CostReport,
}

fn cmd_tnc(a: &TncArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("cost tnc", args);
    let circuit = load_circuit(&a.circuit, &mut m)?;
    let open: BTreeSet<usize> = circuit.qubits.iter().copied().take(a.open).collect();
    let tn = circuit_to_tn(&circuit, &open)?;
    let search = find_path_greedy(&tn, a.seed, a.restarts)?;
    let sliced = slice_network(&tn, &search.best, a.max_log2)?;
    let cost = estimate_sampling_cost(sliced.total_flops, a.n_samples, a.fidelity, &ReferenceMachine::summit())?;
    let report = TncReport {
        report: "tnc".into(),
        circuit: a.circuit.display().to_string(),
        n_qubits: circuit.n_qubits(),
        n_cycles: circuit.n_cycles(),
        open_qubits: open.into_iter().collect(),
        n_tensors: tn.n_tensors(),
        restarts: search.restart_costs.len(),
        best_restart: search.best_restart,
        unsliced_flops: search.best.total_flops,
        unsliced_largest_log2_size: search.best.largest_log2_size,
        max_log2_size: a.max_log2,
        sliced_indices: sliced.sliced.len(),
        n_slices: sliced.n_slices,
        largest_log2_size: sliced.largest_log2_size,
        flops_per_sample: sliced.total_flops,
        cost,
    };
    write_text(&a.out, &to_json(&report))?;
    m.seed("seed", a.seed).output(&a.out);
    if let Some(csv) = &a.csv {
        let mut text = String::from("restart,flops\n");
        for (i, c) in search.restart_costs.iter().enumerate() {
            text.push_str(&format!("{i},{c}\n"));
        }
        write_text(csv, &text)?;
        m.output(csv);
    }
    m.write()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SfaReport {
    report: String,
    g: usize,
    n_left: usize,
    n_right: usize,
    mean_delta_theta: f64,
    /// Smallest and largest value of each Schmidt coefficient over the crossing gates.
    schmidt_min: [f64; 4],
    schmidt_max: [f64; 4],
    fidelity: f64,
    log10_balanced_paths: f64,
    log10_paths_needed: f64,
    speedup: f64,
    runtime_seconds: Option<f64>,
}

fn cmd_sfa(a: &SfaArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("cost sfa", args);
    let (cut, n_cycles) = match &a.circuit {
        Some(path) => {
            let circuit = load_circuit(path, &mut m)?;
            let bp = bipartition(&a.cut, &circuit)?;
            (sfa_cut(&circuit, &bp, a.fidelity)?, Some(circuit.n_cycles()))
        }
        None => {
            let g = a.g.expect("clap requires --g without --circuit");
            let params = FsimParams { theta: std::f64::consts::FRAC_PI_2 - a.delta_theta, phi: a.phi, ..FsimParams::nominal() };
            (CutAnalysis::synthetic(g, params, a.fidelity)?, None)
        }
    };
    let s = sfa_speedup(&cut)?;
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [0.0f64; 4];
    for gate in &cut.gates {
        for k in 0..4 {
            lo[k] = lo[k].min(gate.schmidt[k]);
            hi[k] = hi[k].max(gate.schmidt[k]);
        }
    }
    if cut.gates.is_empty() {
        lo = [0.0; 4];
    }
    let runtime_seconds = match (a.step_rate, n_cycles) {
        (Some(rate), Some(cycles)) if rate > 0.0 => {
            let per_path = (cut.n_left as f64).exp2() + (cut.n_right as f64).exp2();
            Some(10f64.powf(s.log10_paths_needed) * per_path * cycles as f64 / (rate * a.cores as f64))
        }
        _ => None,
    };
    let report = SfaReport {
        report: "sfa".into(),
        g: cut.g,
        n_left: cut.n_left,
        n_right: cut.n_right,
        mean_delta_theta: cut.mean_delta_theta(),
        schmidt_min: lo,
        schmidt_max: hi,
        fidelity: a.fidelity,
        log10_balanced_paths: s.log10_balanced_paths,
        log10_paths_needed: s.log10_paths_needed,
        speedup: s.speedup,
        runtime_seconds,
    };
    write_text(&a.out, &to_json(&report))?;
    m.output(&a.out).write()?;
    Ok(())
}

fn summary_row(path: &Path, v: &Value) -> String {
    let num = |k: &str| v.get(k).and_then(Value::as_f64);
    let fmt = |x: Option<f64>| x.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
    let kind = v.get("report").and_then(Value::as_str).unwrap_or("unknown");
    let detail = match kind {
        "analysis" => format!(
            "F = {} ± {}, p(F̂) = {}, p(0) = {}",
            fmt(num("fidelity")),
            fmt(num("sigma")),
            fmt(v.pointer("/ks_at_estimate/p_value").and_then(Value::as_f64)),
            fmt(v.pointer("/ks_at_zero/p_value").and_then(Value::as_f64)),
        ),
        "analysis-combined" => format!(
            "{} instances, F = {} ± {}",
            v.get("instances").and_then(Value::as_array).map_or(0, Vec::len),
            fmt(v.pointer("/combined/fidelity").and_then(Value::as_f64)),
            fmt(v.pointer("/combined/sigma").and_then(Value::as_f64)),
        ),
        "tnc" => format!(
            "{} flops/sample, {} slices, largest 2^{}, {} years",
            fmt(num("flops_per_sample")),
            fmt(num("n_slices")),
            num("largest_log2_size").unwrap_or(f64::NAN),
            fmt(v.pointer("/cost/runtime_years").and_then(Value::as_f64)),
        ),
        "sfa" => format!("g = {}, speedup {}", v.get("g").and_then(Value::as_u64).unwrap_or(0), fmt(num("speedup"))),
        "calibration" => {
            let patches = v.get("patches").and_then(Value::as_array).cloned().unwrap_or_default();
            let before: f64 = patches.iter().filter_map(|p| p.get("loss_before").and_then(Value::as_f64)).sum();
            let after: f64 = patches.iter().filter_map(|p| p.get("loss_after").and_then(Value::as_f64)).sum();
            format!("{} patches, summed loss {before:.4} -> {after:.4}", patches.len())
        }
        _ => "-".into(),
    };
    format!("| {} | {kind} | {detail} |\n", path.display())
}

fn cmd_report(a: &ReportArgs, args: &[String]) -> Result<()> {
    let mut m = ManifestBuilder::new("report", args);
    let mut text = String::from("| file | report | summary |\n|---|---|---|\n");
    for path in &a.inputs {
        m.input(path);
        let v: Value = serde_json::from_str(&read_string(path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        text.push_str(&summary_row(path, &v));
    }
    write_text(&a.out, &text)?;
    m.output(&a.out).write()?;
    Ok(())
}

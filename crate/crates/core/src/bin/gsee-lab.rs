use clap::{Args, Parser, Subcommand, ValueEnum};
use gsee_lab::gsee::ThresholdScaling;
use gsee_lab::harness::{
    emit, run_experiment, Algorithm, BackendConfig, ExperimentConfig, HarnessError, Rows, SpecSource, THREADS_ENV,
};
use gsee_lab::lemmas::lemma_suite;
use gsee_lab::oracle::Backend;
use gsee_lab::polyapprox::DEFAULT_MAX_DEGREE;
use gsee_lab::spectrum::ModelDomain;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gsee-lab", version, about = "Rejection-sampling ground state energy estimation lab")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write `<stem>.csv` and `<stem>.json`.
    Run(RunArgs),
    /// Estimate the ground energy of a spectrum file.
    Estimate(EstimateArgs),
    /// Certify a candidate ground energy; prints the verdict as JSON.
    Certify(CertifyArgs),
    /// Randomized certification of the approximants.
    Approx(ApproxArgs),
    /// Time an experiment config without writing results.
    Bench(BenchArgs),
    /// Check the analytic lemmas numerically; exits with 2 on a violation.
    Lemmas,
}

#[derive(Args)]
struct Common {
    /// Experiment config; replaces the per-command flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Ideal,
    Poly,
    Trig,
}

impl BackendArg {
    fn config(self, m: u32, max_degree: usize) -> BackendConfig {
        let backend = match self {
            BackendArg::Ideal => Backend::Ideal,
            BackendArg::Poly => Backend::PolyBlockEncoding,
            BackendArg::Trig => Backend::TrigEvolution,
        };
        BackendConfig { backend, m, max_degree }
    }
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "ideal")]
    backend: BackendArg,
    /// Ancilla count of the block encoding.
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    max_degree: usize,
}

#[derive(Args)]
struct EstimateArgs {
    /// Spectral measure (JSON).
    #[arg(long, required_unless_present = "config")]
    spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Overlap promise (default: half the ground overlap).
    #[arg(long)]
    eta: Option<f64>,
    /// Gap promise for the refined estimator (default: the true gap).
    #[arg(long)]
    gap: Option<f64>,
    /// Plain bisection instead of the refined estimator.
    #[arg(long)]
    basic: bool,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Single-power count threshold instead of the squared one.
    #[arg(long)]
    literal_threshold: bool,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, required_unless_present = "config")]
    spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    eps: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    eta: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    sigma: Option<f64>,
    /// Candidate ground energy.
    #[arg(long, allow_negative_numbers = true, required_unless_present = "config")]
    e_hat: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    max_degree: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn base_config(
    name: &str,
    algorithm: Algorithm,
    spec: SpecSource,
    backend: BackendConfig,
    seed: Option<u64>,
) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        algorithm,
        spec,
        backend,
        eps: Vec::new(),
        delta: 0.1,
        gap: Vec::new(),
        eta: Vec::new(),
        beta: Vec::new(),
        sigma: Vec::new(),
        sigma_scale: 1.0,
        e_hat_offset: 0.0,
        e_hat: None,
        trials: 1,
        master_seed: seed.unwrap_or(0),
        scaling: ThresholdScaling::Squared,
        output: None,
    }
}

/// Loads `--config` if given, checking it runs one of `allowed`.
fn load_config(common: &Common, allowed: &[Algorithm]) -> Result<Option<ExperimentConfig>, HarnessError> {
    let Some(path) = &common.config else { return Ok(None) };
    let mut cfg = ExperimentConfig::load(path)?;
    if !allowed.contains(&cfg.algorithm) {
        return Err(HarnessError::Config(format!("config runs {:?}, expected one of {allowed:?}", cfg.algorithm)));
    }
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    Ok(Some(cfg))
}

fn run_and_emit(cfg: &ExperimentConfig, threads: Option<usize>, common: &Common) -> Result<Rows, HarnessError> {
    let rec = run_experiment(cfg, threads)?;
    let stem = cfg.output.as_ref().map_or(cfg.name.as_str(), |o| o.stem.as_str());
    let dir = cfg.output.as_ref().map_or(common.out_dir.clone(), |o| o.dir.clone());
    let out = emit(&rec, &dir, stem)?;
    eprintln!(
        "wrote {} and {} ({} rows, {:.2} s)",
        out.csv.display(),
        out.json.display(),
        rec.rows.len(),
        rec.wall_clock_s
    );
    for s in &rec.summary {
        eprintln!(
            "point {}: success {:.3} ± {:.3}, |error| {:.3e}, circuits {:.4e}, depth {}, failures {}",
            s.point.index, s.success.mean, s.success.se, s.abs_error.mean, s.circuits.mean, s.max_depth, s.failures
        );
    }
    Ok(rec.rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, HarnessError> {
    let threads = cli.threads;
    match cli.cmd {
        Cmd::Run(a) => {
            let all = [Algorithm::Basic, Algorithm::Adv, Algorithm::Cert, Algorithm::Approx, Algorithm::Sweep];
            let mut cfg =
                load_config(&a.common, &all)?.ok_or_else(|| HarnessError::Config("run needs --config".into()))?;
            if a.common.out_dir.as_os_str() != "results" {
                cfg.output = None;
            }
            run_and_emit(&cfg, threads, &a.common)?;
        }
        Cmd::Estimate(a) => {
            if let Some(cfg) = load_config(&a.common, &[Algorithm::Basic, Algorithm::Adv, Algorithm::Sweep])? {
                run_and_emit(&cfg, threads, &a.common)?;
                return Ok(ExitCode::SUCCESS);
            }
            let algorithm = if a.basic { Algorithm::Basic } else { Algorithm::Adv };
            let mut cfg = base_config(
                "estimate",
                algorithm,
                SpecSource::File { path: a.spec.expect("required by clap") },
                a.backend.backend.config(a.backend.m, a.backend.max_degree),
                a.common.seed,
            );
            cfg.eps = vec![a.eps.expect("required by clap")];
            cfg.delta = a.delta;
            cfg.eta = a.eta.into_iter().collect();
            cfg.gap = a.gap.into_iter().collect();
            cfg.trials = a.trials;
            if a.literal_threshold {
                cfg.scaling = ThresholdScaling::AsWritten;
            }
            run_and_emit(&cfg, threads, &a.common)?;
        }
        Cmd::Certify(a) => {
            let cfg = match load_config(&a.common, &[Algorithm::Cert])? {
                Some(cfg) => cfg,
                None => {
                    let mut cfg = base_config(
                        "certify",
                        Algorithm::Cert,
                        SpecSource::File { path: a.spec.expect("required by clap") },
                        a.backend.backend.config(a.backend.m, a.backend.max_degree),
                        a.common.seed,
                    );
                    cfg.eps = a.eps.into_iter().collect();
                    cfg.eta = a.eta.into_iter().collect();
                    cfg.sigma = a.sigma.into_iter().collect();
                    cfg.e_hat = a.e_hat;
                    cfg.delta = a.delta;
                    cfg
                }
            };
            if let Rows::Cert(rows) = run_and_emit(&cfg, threads, &a.common)? {
                let v = serde_json::to_string_pretty(&rows).map_err(|e| HarnessError::Io(e.to_string()))?;
                println!("{v}");
            }
        }
        Cmd::Approx(a) => {
            let cfg = match load_config(&a.common, &[Algorithm::Approx])? {
                Some(cfg) => cfg,
                None => {
                    let mut cfg = base_config(
                        "approx",
                        Algorithm::Approx,
                        SpecSource::Synth {
                            domain: ModelDomain::BlockEncoding,
                            energies: vec![0.0],
                            weights: vec![1.0],
                        },
                        BackendConfig { max_degree: a.max_degree, ..Default::default() },
                        a.common.seed,
                    );
                    cfg.trials = a.trials;
                    cfg
                }
            };
            if let Rows::Approx(rows) = run_and_emit(&cfg, threads, &a.common)? {
                let bad = rows.iter().filter(|r| !r.ok).count();
                println!("{} of {} approximants certified", rows.len() - bad, rows.len());
                if bad > 0 {
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Cmd::Bench(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if let Some(s) = a.seed {
                cfg.master_seed = s;
            }
            let rec = run_experiment(&cfg, threads)?;
            let n = rec.rows.len().max(1);
            println!(
                "{}: {} rows in {:.3} s ({:.3e} s per row)",
                cfg.name,
                rec.rows.len(),
                rec.wall_clock_s,
                rec.wall_clock_s / n as f64
            );
        }
        Cmd::Lemmas => {
            let report = lemma_suite().map_err(|e| HarnessError::Config(e.to_string()))?;
            let bad: Vec<_> = report.violations().collect();
            println!(
                "{} checks, {} Gaussian tuples, {} violations",
                report.checks.len(),
                report.gaussian_tuples,
                bad.len()
            );
            for c in &bad {
                println!("VIOLATION {} at {}: {} vs {}", c.lemma, c.params, c.value, c.bound);
            }
            if !bad.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

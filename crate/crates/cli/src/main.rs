//! `sensesend` command-line driver.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sensesend::analysis::{dtmax_dprth, dtmax_dq, SensitivityInputs};
use sensesend::audit::{audit_trace, AuditOptions};
use sensesend::experiment::{run_experiment, ExperimentId, ExperimentSpec};
use sensesend::sensing::{min_cooperative_uavs, SensingParams};
use sensesend::solution::SolutionFile;
use sensesend::trace::{read_trace, write_trace};
use sensesend::{generate_scenario, solve, ItssoConfig, ScenarioConfig, Scheme};

#[derive(Parser)]
#[command(name = "sensesend", version, about = "Cooperative sense-and-send UAV network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Itsso,
    Nc,
    Fsl,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Itsso => Scheme::Itsso,
            SchemeArg::Nc => Scheme::Nc,
            SchemeArg::Fsl => Scheme::Fsl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeOp {
    Dtdq,
    Dtdpr,
    Minq,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario and write its per-slot trace.
    Simulate {
        /// Scenario file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long)]
        trace: PathBuf,
        /// Where to write the solution; defaults to `<trace>.solution.json`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run a seeded sweep and write `<id>.csv`, `<id>_raw.csv` and `<id>_manifest.txt`.
    Experiment {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long)]
        out: PathBuf,
        /// Base scenario overriding the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a closed-form relation.
    Analyze {
        #[arg(long, value_enum)]
        op: AnalyzeOp,
        /// Comma-separated `key=value` pairs: q, prth, lambda, ni, vmax, d0.
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Audit a trace written by `simulate` against its solution file.
    Validate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

fn sidecar(trace: &Path) -> PathBuf {
    let mut s = trace.as_os_str().to_owned();
    s.push(".solution.json");
    PathBuf::from(s)
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScenarioConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(ScenarioConfig::default()),
    }
}

fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((k, v)) = part.split_once('=') else { bail!("expected key=value, got `{part}`") };
        let v: f64 = v.trim().parse().with_context(|| format!("value of `{k}`"))?;
        out.push((k.trim().to_ascii_lowercase(), v));
    }
    Ok(out)
}

fn analyze(op: AnalyzeOp, params: &str) -> Result<()> {
    let mut inp = SensitivityInputs::default();
    let mut d0 = 10.0;
    for (k, v) in parse_params(params)? {
        match k.as_str() {
            "q" => inp.q = v as u32,
            "prth" => inp.threshold = v,
            "lambda" => inp.lambda = v,
            "ni" => inp.tasks_per_uav = v as u32,
            "vmax" => inp.v_max = v,
            "d0" => d0 = v,
            _ => bail!("unknown parameter `{k}` (expected q, prth, lambda, ni, vmax, d0)"),
        }
    }
    match op {
        AnalyzeOp::Dtdq => println!("{}", dtmax_dq(&inp)?),
        AnalyzeOp::Dtdpr => println!("{}", dtmax_dprth(&inp)?),
        AnalyzeOp::Minq => {
            let p = SensingParams { lambda: inp.lambda, threshold: inp.threshold };
            p.validate()?;
            println!("{}", min_cooperative_uavs(d0, &p));
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, seed, scheme, trace, solution } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = scheme {
                cfg.scheme = s.into();
            }
            let scenario = generate_scenario(&cfg)?;
            let itsso = ItssoConfig { rng_seed: cfg.seed, ..ItssoConfig::default() };
            let (_, run) = solve(&scenario, cfg.scheme, &itsso)?;
            write_trace(BufWriter::new(File::create(&trace)?), &run.outcome.trace)
                .with_context(|| format!("writing {}", trace.display()))?;
            let sol_path = solution.unwrap_or_else(|| sidecar(&trace));
            SolutionFile::new(cfg, itsso, &run).write(BufWriter::new(File::create(&sol_path)?))?;
            println!(
                "scheme={} seed={} t_max={} iterations={} history={:?}",
                cfg.scheme, cfg.seed, run.solution.t_max, run.iterations, run.history
            );
            println!("trace={} solution={}", trace.display(), sol_path.display());
        }
        Command::Experiment { id, instances, out, config, seed } => {
            let id: ExperimentId = id.parse()?;
            let mut base = load_config(config.as_deref())?;
            if let Some(s) = seed {
                base.seed = s;
            }
            let spec = ExperimentSpec { base, instances, ..ExperimentSpec::default() };
            let result = run_experiment(id, &spec)?;
            for p in result.write_to_dir(&out)? {
                println!("{}", p.display());
            }
        }
        Command::Analyze { op, params } => analyze(op, &params)?,
        Command::Validate { trace, solution } => {
            let sol_path = solution.unwrap_or_else(|| sidecar(&trace));
            let file = SolutionFile::read(BufReader::new(
                File::open(&sol_path).with_context(|| format!("opening {}", sol_path.display()))?,
            ))?;
            let records = read_trace(BufReader::new(File::open(&trace)?))?;
            let scenario = file.scenario()?;
            let report = audit_trace(&scenario, &records, &AuditOptions::for_scenario(&scenario))?;
            for v in &report.violations {
                println!("violation: {v}");
            }
            if report.t_max != file.t_max {
                println!("violation: trace completes at slot {} but the solution records {}", report.t_max, file.t_max);
            }
            if !report.is_feasible() || report.t_max != file.t_max {
                bail!("trace {} is infeasible", trace.display());
            }
            println!("ok: {} records, t_max={}", records.len(), report.t_max);
        }
    }
    Ok(())
}

//! `privmkt`: solve, sweep, trace and verify privacy-differentiated markets.
//!
//! Exit codes: 0 success, 1 input or solver error, 2 closed-form conditions
//! violated (a numeric answer is still produced), 3 certification failed.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use config::{Layer, RunConfig};
use privmkt::{certify, iterate_best_response, solve_spne, Cert, Feasibility, Outcome, Profile, Report, Termination};

const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_UNCERTIFIED: u8 = 3;

#[derive(Parser)]
#[command(name = "privmkt", version, about = "Equilibria of markets for free services competing on privacy risk and QoS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one market and report the equilibrium.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Check the answer against the brute-force oracle.
        #[arg(long)]
        certify: bool,
    },
    /// Solve over a grid of one or two parameters.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `name=start:stop:steps` (inclusive) or `name=v1,v2,...`; give once or twice.
        #[arg(long = "axis", value_name = "NAME=SPEC", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        certify: bool,
    },
    /// Record every round of iterated best response.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Three-SP starting point: p2-0.75, p2-0.60 or p2-0.45.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Certify a profile with the brute-force oracle.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Output of `solve --format json`, or a JSON object with `profile`
        /// (and optionally `config`), or a bare list of `{eps, v}`. Without
        /// it the market is solved first.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat JSON object of parameters.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one parameter; repeatable. `pN` sets the N-th fixed revenue.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    sets: Vec<String>,
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn layer(&self, mut base: Layer) -> Result<Layer> {
        if let Some(path) = &self.config {
            config::merge(&mut base, config::read_layer(path)?)?;
        }
        for arg in &self.sets {
            let (name, value) = config::parse_assignment(arg)?;
            config::assign(&mut base, &name, value)?;
        }
        Ok(base)
    }
}

/// What `solve --format json` writes and `verify --input` reads back.
#[derive(Serialize, Deserialize)]
struct SolveDoc {
    config: RunConfig,
    outcome: Outcome,
    feasibility: Option<Feasibility>,
    termination: Option<Termination>,
    certificate: Option<Cert>,
    warnings: Vec<String>,
}

fn warnings(report: &Report) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(f) = report.feasibility.filter(|f| !f.all_feasible) {
        out.push(format!(
            "closed-form conditions violated ({}); solved numerically",
            f.violations().join(", ")
        ));
    }
    if let Some(trace) = &report.trace {
        if trace.termination != Termination::Converged {
            out.push(format!(
                "best-response iteration did not converge ({} after {} rounds)",
                trace.termination.label(),
                trace.rounds.len()
            ));
        }
    }
    out
}

fn cmd_solve(common: &Common, check: bool) -> Result<u8> {
    let cfg = RunConfig::from_layer(&common.layer(Layer::new())?)?;
    let (params, dist) = cfg.market()?;
    let report = solve_spne(&params, &dist, &cfg.solver()?, None)?;
    let certificate = if check {
        let req = cfg.certify_request();
        Some(certify(&params, &dist, &report.outcome.profile, &req.grid, req.cert_tol)?)
    } else {
        None
    };
    let warns = warnings(&report);
    for w in &warns {
        eprintln!("warning: {w}");
    }

    let mut out = output::sink(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = SolveDoc {
                config: cfg.clone(),
                outcome: report.outcome.clone(),
                feasibility: report.feasibility,
                termination: report.trace.as_ref().map(|t| t.termination),
                certificate: certificate.clone(),
                warnings: warns,
            };
            output::write_json(&mut out, &doc)?;
        }
        Format::Csv => {
            let m = params.count();
            let row = output::outcome_row(&[], m, &Ok(report.clone()), certificate.as_ref().map(|c| c.certified));
            output::write_table(&mut out, &output::outcome_header(&[], m), &[row])?;
        }
    }
    out.flush()?;

    if certificate.is_some_and(|c| !c.certified) {
        return Ok(EXIT_UNCERTIFIED);
    }
    Ok(if report.infeasible() { EXIT_INFEASIBLE } else { 0 })
}

struct Axis {
    name: String,
    values: Vec<f64>,
}

fn parse_axis(arg: &str) -> Result<Axis> {
    let (name, spec) = arg
        .split_once('=')
        .ok_or_else(|| anyhow!("axis must look like name=start:stop:steps or name=a,b,c; got `{arg}`"))?;
    let name = name.trim().to_string();
    if !config::is_numeric_param(&name) {
        bail!("`{name}` is not a sweepable parameter");
    }
    let number = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number `{s}` in axis `{name}`"))
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, steps] = parts[..] else {
            bail!("range for `{name}` must be start:stop:steps");
        };
        let (start, stop) = (number(start)?, number(stop)?);
        let steps: usize = steps
            .trim()
            .parse()
            .with_context(|| format!("bad step count in axis `{name}`"))?;
        if steps < 2 {
            bail!("axis `{name}` needs at least 2 steps");
        }
        (0..steps)
            .map(|k| {
                if k + 1 == steps {
                    stop
                } else {
                    start + (stop - start) * k as f64 / (steps - 1) as f64
                }
            })
            .collect()
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    if values.len() < 2 {
        bail!("axis `{name}` needs at least 2 values");
    }
    Ok(Axis { name, values })
}

fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    points
}

fn sweep_point(base: &Layer, axes: &[Axis], point: &[f64], check: bool) -> (Result<Report, String>, Option<bool>) {
    let run = || -> Result<(Report, Option<bool>)> {
        let mut layer = base.clone();
        for (axis, &x) in axes.iter().zip(point) {
            config::assign(&mut layer, &axis.name, Value::from(x))?;
        }
        let cfg = RunConfig::from_layer(&layer)?;
        let (params, dist) = cfg.market()?;
        let report = solve_spne(&params, &dist, &cfg.solver()?, None)?;
        let certified = if check {
            let req = cfg.certify_request();
            Some(certify(&params, &dist, &report.outcome.profile, &req.grid, req.cert_tol)?.certified)
        } else {
            None
        };
        Ok((report, certified))
    };
    match run() {
        Ok((report, certified)) => (Ok(report), certified),
        Err(e) => (Err(format!("{e:#}")), None),
    }
}

#[derive(Serialize)]
struct SweepRecord {
    point: serde_json::Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_sweep(common: &Common, axis_args: &[String], check: bool) -> Result<u8> {
    if axis_args.len() > 2 {
        bail!("at most two sweep axes, got {}", axis_args.len());
    }
    let axes = axis_args.iter().map(|a| parse_axis(a)).collect::<Result<Vec<_>>>()?;
    if axes.len() == 2 && axes[0].name == axes[1].name {
        bail!("axis `{}` given twice", axes[0].name);
    }
    let base = common.layer(Layer::new())?;
    let m = RunConfig::from_layer(&base)?.p.len();
    let points = grid_points(&axes);
    let results: Vec<_> = points.par_iter().map(|pt| sweep_point(&base, &axes, pt, check)).collect();

    let mut out = output::sink(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let names: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
            let rows: Vec<_> = points
                .iter()
                .zip(&results)
                .map(|(pt, (rep, cert))| output::outcome_row(pt, m, rep, *cert))
                .collect();
            output::write_table(&mut out, &output::outcome_header(&names, m), &rows)?;
        }
        Format::Json => {
            let records: Vec<_> = points
                .iter()
                .zip(results)
                .map(|(pt, (rep, certified))| {
                    let point = axes.iter().zip(pt).map(|(a, &x)| (a.name.clone(), Value::from(x))).collect();
                    let (report, error) = match rep {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e)),
                    };
                    SweepRecord {
                        point,
                        report,
                        certified,
                        error,
                    }
                })
                .collect();
            output::write_json(&mut out, &records)?;
        }
    }
    out.flush()?;
    Ok(0)
}

fn cmd_trace(common: &Common, preset: Option<&str>) -> Result<u8> {
    let base = match preset {
        Some(name) => config::preset(name)?,
        None => Layer::new(),
    };
    let cfg = RunConfig::from_layer(&common.layer(base)?)?;
    let (params, dist) = cfg.market()?;
    let (_, trace) = iterate_best_response(&params, &dist, &cfg.solver()?)?;
    let mut out = output::sink(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => output::write_trace_csv(&mut out, &trace)?,
        Format::Json => output::write_json(&mut out, &trace)?,
    }
    out.flush()?;
    Ok(0)
}

/// Profile and any embedded config from a `verify --input` file.
fn read_profile(path: &std::path::Path) -> Result<(Profile, Layer)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let embedded = |v: &Value| -> Result<Layer> {
        match v.get("config") {
            Some(Value::Object(map)) => Ok(map.clone()),
            Some(_) => bail!("`config` must be an object"),
            None => Ok(Layer::new()),
        }
    };
    let (profile, layer) = if let Some(outcome) = value.get("outcome") {
        let profile = outcome.get("profile").ok_or_else(|| anyhow!("`outcome` has no `profile`"))?;
        (profile.clone(), embedded(&value)?)
    } else if let Some(profile) = value.get("profile") {
        (profile.clone(), embedded(&value)?)
    } else if value.is_array() {
        (value, Layer::new())
    } else {
        bail!("{}: no profile found", path.display());
    };
    let profile: Profile = serde_json::from_value(profile).context("malformed profile")?;
    Ok((profile, layer))
}

fn cmd_verify(common: &Common, input: Option<&std::path::Path>) -> Result<u8> {
    let (profile, base) = match input {
        Some(path) => {
            let (profile, layer) = read_profile(path)?;
            (Some(profile), layer)
        }
        None => (None, Layer::new()),
    };
    let cfg = RunConfig::from_layer(&common.layer(base)?)?;
    let (params, dist) = cfg.market()?;
    let profile = match profile {
        Some(p) => p,
        None => solve_spne(&params, &dist, &cfg.solver()?, None)?.outcome.profile,
    };
    let req = cfg.certify_request();
    let cert = certify(&params, &dist, &profile, &req.grid, req.cert_tol)?;
    let mut out = output::sink(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => output::write_json(&mut out, &cert)?,
        Format::Csv => output::write_certificate_csv(&mut out, &cert)?,
    }
    out.flush()?;
    if !cert.certified {
        let (i, gain) = cert.worst();
        eprintln!("not an equilibrium: SP {} gains {gain:.6e} by deviating", i + 1);
        return Ok(EXIT_UNCERTIFIED);
    }
    Ok(0)
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("PRIVMKT_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .with_context(|| format!("PRIVMKT_THREADS must be a positive integer, got `{raw}`"))?;
        if n == 0 {
            bail!("PRIVMKT_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    init_threads()?;
    match &cli.command {
        Command::Solve { common, certify } => cmd_solve(common, *certify),
        Command::Sweep { common, axes, certify } => cmd_sweep(common, axes, *certify),
        Command::Trace { common, preset } => cmd_trace(common, preset.as_deref()),
        Command::Verify { common, input } => cmd_verify(common, input.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

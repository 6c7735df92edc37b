//! Batch front end: `solve`, `compare`, `variational`, `sweep` and `perturb`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 gate violation,
//! 4 non-convergence. Failures print `{"kind": ..., "message": ...}` on stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{contrast_fixture, label_pairing, perturb_and_track};
use crate::io::{write_csv, write_json, write_spectrum, write_tracking};
use crate::linalg::wrapped_distance;
use crate::model::{builtin_model, FourierHamiltonian, ModelFile, ModelSpec};
use crate::oracle::{self, PropagationConfig};
use crate::sambe::{certify_truncation, replica_overlap, solve, SolveOptions, Spectrum, Truncation};
use crate::variational::{minimize_excited, minimize_ground, VariationalConfig, VariationalResult};
use crate::FloquetError;

#[derive(Debug, Parser)]
#[command(name = "floquet", version, about = "Floquet eigentriplets for time-periodic Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagonalize in extended space; writes spectrum.json and spectrum.csv.
    Solve(CommonArgs),
    /// Extended-space solve against direct propagation; writes compare.csv.
    Compare(CompareArgs),
    /// Penalized minimization for the ground state and optional excited states.
    Variational(VariationalArgs),
    /// Spectrum along a parameter axis; writes sweep.csv.
    Sweep(SweepArgs),
    /// Pairing of states before and after a small perturbation; writes tracking.csv.
    Perturb(PerturbArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Built-in model name.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Model parameter `name=value`; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    /// Harmonic cutoff or `auto`.
    #[arg(long, default_value = "auto")]
    pub harmonics: String,
    /// Absolute quasi-energy degeneracy tolerance.
    #[arg(long = "tol-deg")]
    pub tol_deg: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest accepted |Δε|, |ΔĒ| and 1 - overlap.
    #[arg(long, default_value_t = 1e-6)]
    pub gate: f64,
    /// Propagation steps per period.
    #[arg(long, default_value_t = 4096)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct VariationalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Excited states to find after the ground state.
    #[arg(long, default_value_t = 0)]
    pub excited: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "sweep-param")]
    pub sweep_param: String,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 11)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Shipped experiment instead of a model; only `contrast` exists.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Perturbation model JSON file.
    #[arg(long)]
    pub perturbation: Option<PathBuf>,
    /// Perturbation strength; defaults to `1e-6·ω`.
    #[arg(long, allow_negative_numbers = true)]
    pub strength: Option<f64>,
}

/// Where the Hamiltonian comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSource {
    File(PathBuf),
    Builtin(ModelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl SweepAxis {
    /// Evenly spaced values; a zero-length axis is a single point.
    pub fn values(&self) -> Vec<f64> {
        if self.from == self.to || self.count == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.to } else { self.from + step * i as f64 })
            .collect()
    }
}

/// Validated settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub source: ModelSource,
    pub params: BTreeMap<String, f64>,
    pub truncation: Truncation,
    pub tol_deg: Option<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub sweep: Option<SweepAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Gate,
    Convergence,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Gate => 3,
            ErrorKind::Convergence => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<serde_json::Value>,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
            rows: None,
        }
    }
}

impl From<FloquetError> for CliError {
    fn from(e: FloquetError) -> Self {
        let kind = match e {
            FloquetError::TooFewFamilies { .. }
            | FloquetError::TruncationNotConverged { .. }
            | FloquetError::EigenSolver { .. }
            | FloquetError::UnitarityDrift { .. }
            | FloquetError::NonPeriodic { .. }
            | FloquetError::Unnormalized(_) => ErrorKind::Convergence,
            _ => ErrorKind::Config,
        };
        Self {
            kind,
            message: e.to_string(),
            rows: None,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_params(raw: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("parameter `{item}` is not of the form k=v")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("parameter `{k}` has non-numeric value `{v}`")))?;
        if out.insert(k.trim().to_string(), value).is_some() {
            return Err(CliError::config(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

fn parse_truncation(raw: &str) -> CliResult<Truncation> {
    if raw == "auto" {
        return Ok(Truncation::Auto);
    }
    raw.parse::<usize>()
        .map(Truncation::Fixed)
        .map_err(|_| CliError::config(format!("--harmonics expects an integer or `auto`, got `{raw}`")))
}

impl RunConfig {
    pub fn from_args(command: &str, a: &CommonArgs, sweep: Option<SweepAxis>) -> CliResult<Self> {
        let source = match (&a.model, &a.builtin) {
            (Some(_), Some(_)) => return Err(CliError::config("give either --model or --builtin, not both")),
            (None, None) => return Err(CliError::config("a model source is required: --model or --builtin")),
            (Some(p), None) => {
                if !p.is_file() {
                    return Err(CliError::config(format!("model file `{}` not found", p.display())));
                }
                ModelSource::File(p.clone())
            }
            (None, Some(name)) => ModelSource::Builtin(ModelSpec::new(name.clone())),
        };
        if let Some(t) = a.tol_deg {
            if !(t > 0.0) {
                return Err(CliError::config("--tol-deg must be positive"));
            }
        }
        let cfg = Self {
            command: command.to_string(),
            source,
            params: parse_params(&a.params)?,
            truncation: parse_truncation(&a.harmonics)?,
            tol_deg: a.tol_deg,
            out: a.out.clone(),
            seed: a.seed,
            sweep,
        };
        if let Some(axis) = &cfg.sweep {
            if axis.count == 0 || !axis.from.is_finite() || !axis.to.is_finite() {
                return Err(CliError::config("sweep needs finite bounds and --count ≥ 1"));
            }
            // Out-of-domain axis values become per-point failures later.
            match cfg.model_with(&axis.parameter, axis.from) {
                Ok(_) => {}
                Err(FloquetError::ParameterDomain { name, reason }) if name == axis.parameter => {
                    if reason.starts_with("not a parameter") {
                        return Err(CliError::config(format!(
                            "sweep axis `{name}` is not a parameter of the model"
                        )));
                    }
                }
                Err(other) => return Err(CliError::config(other.to_string())),
            }
        }
        Ok(cfg)
    }

    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            truncation: self.truncation,
            tol_deg: self.tol_deg,
        }
    }

    fn spec_with(&self, extra: Option<(&str, f64)>) -> crate::Result<FourierHamiltonian> {
        let (name, mut params) = match &self.source {
            ModelSource::Builtin(spec) => (spec.name.clone(), spec.params.clone()),
            ModelSource::File(path) => match ModelFile::from_path(path)? {
                ModelFile::Builtin { builtin, params } => (builtin, params),
                explicit => {
                    if !self.params.is_empty() {
                        return Err(FloquetError::InvalidArgument(
                            "--param only applies to built-in models".into(),
                        ));
                    }
                    let h = explicit.resolve()?;
                    return match extra {
                        None => Ok(h),
                        Some(("omega", w)) => h.with_omega(w),
                        Some((k, _)) => Err(FloquetError::ParameterDomain {
                            name: k.to_string(),
                            reason: "not a parameter of an explicit model (only omega is)".into(),
                        }),
                    };
                }
            },
        };
        params.extend(self.params.clone());
        if let Some((k, v)) = extra {
            params.insert(k.to_string(), v);
        }
        builtin_model(&ModelSpec { name, params })
    }

    pub fn model(&self) -> crate::Result<FourierHamiltonian> {
        self.spec_with(None)
    }

    pub fn model_with(&self, parameter: &str, value: f64) -> crate::Result<FourierHamiltonian> {
        self.spec_with(Some((parameter, value)))
    }

    fn ensure_out(&self) -> CliResult<&Path> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}

/// One matched state of a cross-method comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub state: usize,
    pub eps_sambe: f64,
    pub eps_oracle: f64,
    pub d_eps: f64,
    pub ebar_sambe: f64,
    pub ebar_oracle: f64,
    pub d_ebar: f64,
    pub overlap: f64,
    pub pass: bool,
}

/// Matches states greedily by overlap and records label differences.
pub fn compare_spectra(sambe: &Spectrum, oracle: &Spectrum, gate: f64) -> Vec<CompareRow> {
    let omega = sambe.metadata.omega;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in sambe.triplets.iter().enumerate() {
        for (j, b) in oracle.triplets.iter().enumerate() {
            pairs.push((replica_overlap(&a.mode, &b.mode).min(1.0), i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut partner: Vec<Option<(usize, f64)>> = vec![None; sambe.len()];
    let mut taken = vec![false; oracle.len()];
    for (ov, i, j) in pairs {
        if partner[i].is_none() && !taken[j] {
            partner[i] = Some((j, ov));
            taken[j] = true;
        }
    }
    partner
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let a = &sambe.triplets[i];
            let (j, overlap) = p.unwrap_or((i.min(oracle.len().saturating_sub(1)), 0.0));
            let b = &oracle.triplets[j];
            let d_eps = wrapped_distance(a.quasi_energy, b.quasi_energy, omega);
            let d_ebar = (a.avg_energy - b.avg_energy).abs();
            CompareRow {
                state: i,
                eps_sambe: a.quasi_energy,
                eps_oracle: b.quasi_energy,
                d_eps,
                ebar_sambe: a.avg_energy,
                ebar_oracle: b.avg_energy,
                d_ebar,
                overlap,
                pass: d_eps <= gate && d_ebar <= gate && 1.0 - overlap <= gate,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub state: usize,
    pub eps: f64,
    pub ebar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub lambda: f64,
    pub kind: String,
    pub message: String,
}

/// Solves every axis point in parallel, then labels states by `(ε, Ē)`
/// continuity from the first successful point, in axis order.
pub fn run_sweep(cfg: &RunConfig, axis: &SweepAxis) -> (Vec<SweepRow>, Vec<SweepFailure>) {
    let values = axis.values();
    let opts = cfg.options();
    let solved: Vec<crate::Result<Spectrum>> = values
        .par_iter()
        .map(|&v| cfg.model_with(&axis.parameter, v).and_then(|h| solve(&h, &opts)))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut previous: Option<(Spectrum, Vec<usize>)> = None;
    for (&lambda, result) in values.iter().zip(solved) {
        let spec = match result {
            Ok(s) => s,
            Err(e) => {
                let err = CliError::from(e);
                failures.push(SweepFailure {
                    lambda,
                    kind: serde_json::to_value(err.kind).unwrap().as_str().unwrap_or("").to_string(),
                    message: err.message,
                });
                continue;
            }
        };
        // ids[j] is the sweep-wide label of state j at this point.
        let ids: Vec<usize> = match &previous {
            Some((prev, prev_ids)) if prev.len() == spec.len() => {
                let pairing = label_pairing(prev, &spec);
                let mut ids = vec![0; spec.len()];
                for (i, &j) in pairing.iter().enumerate() {
                    ids[j] = prev_ids[i];
                }
                ids
            }
            _ => (0..spec.len()).collect(),
        };
        let mut point: Vec<SweepRow> = spec
            .triplets
            .iter()
            .zip(&ids)
            .map(|(t, &state)| SweepRow {
                lambda,
                state,
                eps: t.quasi_energy,
                ebar: t.avg_energy,
            })
            .collect();
        point.sort_by_key(|r| r.state);
        rows.extend(point);
        previous = Some((spec, ids));
    }
    (rows, failures)
}

#[derive(Serialize)]
struct VariationalRow {
    state: usize,
    eps: f64,
    ebar: f64,
    residual: f64,
    centroid: f64,
    converged: bool,
    iterations: usize,
    seed: u64,
}

fn cmd_solve(cfg: &RunConfig) -> CliResult<()> {
    let h = cfg.model()?;
    let spec = solve(&h, &cfg.options())?;
    write_spectrum(cfg.ensure_out()?, &spec)?;
    Ok(())
}

fn cmd_compare(cfg: &RunConfig, gate: f64, steps: usize) -> CliResult<()> {
    if !(gate > 0.0) {
        return Err(CliError::config("--gate must be positive"));
    }
    let h = cfg.model()?;
    let sambe = solve(&h, &cfg.options())?;
    let prop = PropagationConfig {
        steps_per_period: steps,
        ..Default::default()
    };
    let oracle_spec = oracle::solve(&h, sambe.metadata.truncation, &prop)?;
    let rows = compare_spectra(&sambe, &oracle_spec, gate);
    let out = cfg.ensure_out()?;
    write_csv(&out.join("compare.csv"), &rows)?;
    write_json(&out.join("oracle_spectrum.json"), &oracle_spec)?;
    let bad: Vec<&CompareRow> = rows.iter().filter(|r| !r.pass).collect();
    if !bad.is_empty() {
        return Err(CliError {
            kind: ErrorKind::Gate,
            message: format!("{} of {} states exceed the gate {gate:e}", bad.len(), rows.len()),
            rows: Some(serde_json::to_value(&bad).expect("rows serialize")),
        });
    }
    Ok(())
}

fn cmd_variational(cfg: &RunConfig, a: &VariationalArgs) -> CliResult<()> {
    let h = cfg.model()?;
    let truncation = match cfg.truncation {
        Truncation::Fixed(m) => m,
        Truncation::Auto => certify_truncation(&h, cfg.options().tol_deg_for(h.omega()))?.0,
    };
    let mut vc = VariationalConfig {
        seed: cfg.seed,
        ..Default::default()
    };
    if let Some(n) = a.max_iters {
        vc.max_iters = n;
    }
    if let Some(n) = a.restarts {
        vc.restarts = n;
    }
    let mut results: Vec<VariationalResult> = vec![minimize_ground(&h, truncation, &vc)?];
    for _ in 0..a.excited {
        if !results.last().is_some_and(|r| r.converged) {
            break;
        }
        let found: Vec<_> = results.iter().map(|r| r.triplet.mode.clone()).collect();
        results.push(minimize_excited(&h, truncation, &vc, &found)?);
    }
    let rows: Vec<VariationalRow> = results
        .iter()
        .enumerate()
        .map(|(state, r)| VariationalRow {
            state,
            eps: r.triplet.quasi_energy,
            ebar: r.triplet.avg_energy,
            residual: r.residual,
            centroid: r.triplet.centroid,
            converged: r.converged,
            iterations: r.iterations,
            seed: r.seed,
        })
        .collect();
    let out = cfg.ensure_out()?;
    write_json(&out.join("variational.json"), &results)?;
    write_csv(&out.join("variational.csv"), &rows)?;
    if let Some(i) = results.iter().position(|r| !r.converged) {
        return Err(CliError {
            kind: ErrorKind::Convergence,
            message: format!("state {i} did not converge within {} iterations", vc.max_iters),
            rows: None,
        });
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let axis = cfg.sweep.clone().expect("sweep config has an axis");
    let (rows, failures) = run_sweep(cfg, &axis);
    let out = cfg.ensure_out()?;
    write_csv(&out.join("sweep.csv"), &rows)?;
    write_csv(&out.join("sweep_failures.csv"), &failures)?;
    Ok(())
}

fn cmd_perturb(a: &PerturbArgs) -> CliResult<()> {
    let (h, v, default_strength, opts, out) = match (&a.fixture, &a.perturbation) {
        (Some(_), Some(_)) => return Err(CliError::config("give either --fixture or --perturbation")),
        (None, None) => return Err(CliError::config("perturb needs --fixture or --perturbation")),
        (Some(name), None) => {
            if name != "contrast" {
                return Err(CliError::config(format!("unknown fixture `{name}`; available: contrast")));
            }
            let (h, v, s) = contrast_fixture()?;
            let opts = SolveOptions {
                truncation: parse_truncation(&a.common.harmonics)?,
                tol_deg: a.common.tol_deg,
            };
            (h, v, s, opts, a.common.out.clone())
        }
        (None, Some(path)) => {
            let cfg = RunConfig::from_args("perturb", &a.common, None)?;
            let h = cfg.model()?;
            let v = ModelFile::from_path(path)?.resolve()?;
            let s = 1e-6 * h.omega();
            (h, v, s, cfg.options(), cfg.out.clone())
        }
    };
    let report = perturb_and_track(&h, &v, a.strength.unwrap_or(default_strength), &opts)?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::config(format!("cannot create {}: {e}", out.display())))?;
    write_tracking(&out, &report)?;
    Ok(())
}

/// Runs a parsed command.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(&RunConfig::from_args("solve", a, None)?),
        Command::Compare(a) => cmd_compare(&RunConfig::from_args("compare", &a.common, None)?, a.gate, a.steps),
        Command::Variational(a) => cmd_variational(&RunConfig::from_args("variational", &a.common, None)?, a),
        Command::Sweep(a) => {
            let axis = SweepAxis {
                parameter: a.sweep_param.clone(),
                from: a.from,
                to: a.to,
                count: a.count,
            };
            cmd_sweep(&RunConfig::from_args("sweep", &a.common, Some(axis))?)
        }
        Command::Perturb(a) => cmd_perturb(a),
    }
}

/// Parses `args` (program name first), runs, reports errors as JSON on
/// stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            report(&CliError::config(e.to_string().trim().to_string()));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.kind.exit_code()
        }
    }
}

fn report(e: &CliError) {
    eprintln!("{}", serde_json::to_string(e).expect("error serializes"));
}

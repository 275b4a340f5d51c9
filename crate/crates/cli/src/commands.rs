use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rxnfit::abm::{self, AbmConfig};
use rxnfit::eql::{self, Coefficients, FitOptions, Smoothing};
use rxnfit::ode::{integrate_steps, DEFAULT_BLOWUP_BOUND};
use rxnfit::poly::variable_symbols;
use rxnfit::{FitResult, PolynomialOde, ReactionLibrary, SolverChoice, TimeSeries};

use crate::error::{CliError, CliResult};
use crate::report::{FitReport, LibraryDescription, Method, Provenance, TOOL_VERSION};

#[derive(Debug, Parser)]
#[command(name = "rxnfit", version, about = "Fit mass-action reaction models to trajectory data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the complete uni- and bimolecular reaction library as JSON.
    Library(LibraryArgs),
    /// Run an ensemble of the tumour agent-based model.
    Abm(AbmArgs),
    /// Fit a polynomial ODE to a trajectory CSV.
    Fit(FitArgs),
    /// Coupled fit with some reactions removed from the library.
    Prune(PruneArgs),
    /// Integrate the model stored in a fit report.
    Integrate(IntegrateArgs),
    /// Mean squared error of a fitted model against data.
    Mse(MseArgs),
}

#[derive(Debug, Args)]
pub struct LibraryArgs {
    /// Number of species.
    #[arg(long)]
    pub species: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AbmArgs {
    /// JSON parameter file; the built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub runs: usize,
    /// Seed of run 0; run i uses seed + i. Defaults to the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverName {
    Nnls,
    Lsq,
    Ridge,
    Lsqr,
    Lasso,
    Stlsq,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Regression solver; coupled fits accept only nnls.
    #[arg(long, value_enum)]
    pub solver: Option<SolverName>,
    /// Ridge parameter for ridge and stlsq.
    #[arg(long, default_value_t = 0.0)]
    pub ridge_k: f64,
    /// L1 weight for lasso.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Pruning threshold for stlsq.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Iteration cap (outer iterations, or sweeps for stlsq).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Convergence tolerance for lsqr and lasso.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Trajectory CSV with header t,x1,...,xd.
    #[arg(long)]
    pub data: PathBuf,
    /// Keep every n-th time point.
    #[arg(long, default_value_t = 1)]
    pub subsample: usize,
    /// Half-width of a moving-average filter applied before differencing.
    #[arg(long)]
    pub smooth: Option<usize>,
    /// Report path; only the equations are printed when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long, value_enum, default_value_t = Method::Coupled)]
    pub mode: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Comma-separated 1-based reaction ids to remove, e.g. 12,6,3.
    #[arg(long, value_delimiter = ',', required = true)]
    pub exclude: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Fit report (or bare polynomial JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated initial state; defaults to the first row of --data.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, conflicts_with = "t_end")]
    pub steps: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Take t0, h and the number of points from this CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    /// Also write the errors as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Library(a) => cmd_library(&a),
        Command::Abm(a) => cmd_abm(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Prune(a) => cmd_prune(&a),
        Command::Integrate(a) => cmd_integrate(&a),
        Command::Mse(a) => cmd_mse(&a),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

/// A destination that cannot be opened is a usage error; a failure after
/// opening is an IO error.
fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::usage(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let text = read_text(path)?;
    TimeSeries::read_csv(text.as_bytes()).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn cmd_library(a: &LibraryArgs) -> CliResult<()> {
    let lib = ReactionLibrary::enumerate(a.species)?;
    let mut json = serde_json::to_string_pretty(&lib).expect("library serialises");
    json.push('\n');
    emit(a.out.as_deref(), &json)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbmManifest {
    pub tool_version: String,
    pub config_source: String,
    /// SHA-256 of the compact JSON serialisation of `config`.
    pub config_sha256: String,
    pub config: AbmConfig,
    pub runs: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub run_files: Vec<String>,
    pub mean_file: String,
    pub rows: usize,
}

pub fn config_hash(cfg: &AbmConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serialises");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn cmd_abm(a: &AbmArgs) -> CliResult<()> {
    let (cfg, source) = match &a.config {
        Some(p) => (AbmConfig::from_json(&read_text(p)?)?, p.display().to_string()),
        None => (AbmConfig::default(), "built-in".to_string()),
    };
    cfg.validate()?;
    if a.runs == 0 {
        return Err(CliError::usage("--runs must be positive"));
    }
    let base_seed = a.seed.unwrap_or(cfg.seed);
    fs::create_dir_all(&a.out).map_err(|e| CliError::usage(format!("cannot create {}: {e}", a.out.display())))?;
    let ens = abm::run_ensemble(&cfg, a.runs, base_seed)?;

    // Once the first file exists any failure leaves a partial output set.
    let partial = |e: CliError| match e {
        CliError::Usage(m) => CliError::Io(format!("partial output: {m}")),
        other => other,
    };
    let width = (a.runs - 1).to_string().len().max(4);
    let mut run_files = Vec::with_capacity(a.runs);
    for (i, run) in ens.runs().iter().enumerate() {
        let name = format!("run_{i:0width$}.csv");
        let res = write_bytes(&a.out.join(&name), run.to_csv_string().as_bytes());
        if i == 0 { res? } else { res.map_err(partial)? }
        run_files.push(name);
    }
    let mean = ens.mean();
    write_bytes(&a.out.join("mean.csv"), mean.to_csv_string().as_bytes()).map_err(partial)?;
    let manifest = AbmManifest {
        tool_version: TOOL_VERSION.into(),
        config_source: source,
        config_sha256: config_hash(&cfg),
        config: cfg,
        runs: a.runs,
        base_seed,
        seeds: (0..a.runs as u64).map(|i| base_seed.wrapping_add(i)).collect(),
        run_files,
        mean_file: "mean.csv".into(),
        rows: mean.len(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_bytes(&a.out.join("manifest.json"), json.as_bytes()).map_err(partial)?;
    let last = mean.last();
    println!(
        "{} runs, {} rows; mean tumour {:.4} -> {:.4}, healthy {:.4} -> {:.4}",
        a.runs,
        mean.len(),
        mean.row(0)[0],
        last[0],
        mean.row(0)[1],
        last[1]
    );
    Ok(())
}

fn solver_choice(a: &SolverArgs, method: Method) -> CliResult<SolverChoice> {
    let name = a.solver.unwrap_or(match method {
        Method::Coupled => SolverName::Nnls,
        Method::Decoupled => SolverName::Lsq,
    });
    if method == Method::Coupled && name != SolverName::Nnls {
        return Err(CliError::usage("coupled fits require --solver nnls (rates must be non-negative)"));
    }
    Ok(match name {
        SolverName::Nnls => SolverChoice::Nnls { max_iterations: a.max_iter },
        SolverName::Lsq => SolverChoice::Lsq,
        SolverName::Ridge => SolverChoice::Ridge { k: a.ridge_k },
        SolverName::Lsqr => SolverChoice::Lsqr { max_iterations: a.max_iter, tolerance: a.tol },
        SolverName::Lasso => SolverChoice::Lasso {
            lambda: a.lambda,
            max_iterations: a.max_iter.unwrap_or(10_000),
            tolerance: a.tol,
        },
        SolverName::Stlsq => SolverChoice::Stlsq {
            ridge_k: a.ridge_k,
            threshold: a.threshold,
            max_sweeps: a.max_iter.unwrap_or(10),
        },
    })
}

fn load_input(a: &DataArgs) -> CliResult<(TimeSeries, FitOptions)> {
    let ts = eql::subsample(&read_series(&a.data)?, a.subsample)?;
    let smoothing = match a.smooth {
        None | Some(0) => Smoothing::None,
        Some(half_width) => Smoothing::MovingAverage { half_width },
    };
    Ok((ts, FitOptions { smoothing }))
}

fn build_report(
    fit: FitResult,
    method: Method,
    library: LibraryDescription,
    solver: SolverChoice,
    ts: &TimeSeries,
    input: &DataArgs,
) -> FitReport {
    let symbols = variable_symbols(ts.dim());
    let equations = (0..ts.dim()).map(|i| fit.model.render_component(i, &symbols)).collect();
    let active_set = match (&fit.coefficients, method) {
        (_, Method::Coupled) => fit.active_reactions.iter().map(|j| j + 1).collect(),
        (Coefficients::PerComponent { monomials, values }, _) => {
            (0..monomials.len()).filter(|&k| values.iter().any(|row| row[k] != 0.0)).collect()
        }
        (Coefficients::Rates(_), _) => Vec::new(),
    };
    FitReport {
        tool_version: TOOL_VERSION.into(),
        method,
        library,
        solver,
        coefficients: fit.coefficients,
        active_set,
        excluded: fit.excluded_reactions.iter().map(|j| j + 1).collect(),
        polynomial: fit.model,
        equations,
        residual_norm: fit.residual_norm,
        mse_trajectory: fit.mse.as_ref().map(|m| m.trajectory.clone()),
        mse_final: fit.mse.as_ref().map(|m| m.final_point.clone()),
        min_state: fit.mse.as_ref().map(|m| m.min_state),
        instability_time: fit.instability_time,
        provenance: Provenance {
            input: input.data.display().to_string(),
            n: ts.len(),
            d: ts.dim(),
            t0: ts.t0(),
            h: ts.h(),
            stride: input.subsample,
        },
        diagnostics: fit.solver,
    }
}

/// Prints the equations, writes the report, and maps a blown-up model to
/// the instability exit code after the report is on disk.
fn finish(report: &FitReport, out: Option<&Path>) -> CliResult<()> {
    for eq in &report.equations {
        println!("{eq}");
    }
    if report.method == Method::Coupled {
        println!("active reactions: {:?}", report.active_set);
    }
    if let (Some(t), Some(f)) = (&report.mse_trajectory, &report.mse_final) {
        println!("mse_trajectory {t:?}\nmse_final {f:?}");
    }
    for (i, d) in report.diagnostics.iter().enumerate() {
        if !d.converged {
            eprintln!("warning: solve {i} stopped at the iteration cap ({} iterations)", d.iterations);
        }
        if let Some(c) = d.condition_warning {
            eprintln!("warning: solve {i} is ill-conditioned (estimate {c:.3e})");
        }
        if d.all_pruned {
            eprintln!("warning: solve {i} pruned every coefficient");
        }
    }
    if let Some(p) = out {
        let mut json = report.to_json();
        json.push('\n');
        write_bytes(p, json.as_bytes())?;
    }
    match report.instability_time {
        Some(t) => Err(CliError::Numerical(format!("fitted model blows up at t = {t}"))),
        None => Ok(()),
    }
}

fn reaction_description(lib: &ReactionLibrary) -> LibraryDescription {
    LibraryDescription::Reactions {
        library: lib.clone(),
        rendered: lib.reactions().iter().map(|r| lib.render(r)).collect(),
    }
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let (ts, opts) = load_input(&a.input)?;
    let solver = solver_choice(&a.solver, a.mode)?;
    let (fit, library) = match a.mode {
        Method::Coupled => {
            let lib = ReactionLibrary::enumerate(ts.dim())?;
            let fit = eql::fit_coupled_with(&ts, &lib, &BTreeSet::new(), &opts)?;
            (fit, reaction_description(&lib))
        }
        Method::Decoupled => {
            let monomials = eql::default_monomials(ts.dim());
            let fit = eql::fit_decoupled_with(&ts, &monomials, &solver, &opts)?;
            (fit, LibraryDescription::Monomials { species: variable_symbols(ts.dim()), monomials })
        }
    };
    let report = build_report(fit, a.mode, library, solver, &ts, &a.input);
    finish(&report, a.input.out.as_deref())
}

pub fn cmd_prune(a: &PruneArgs) -> CliResult<()> {
    let (ts, opts) = load_input(&a.input)?;
    let lib = ReactionLibrary::enumerate(ts.dim())?;
    let mut excluded = BTreeSet::new();
    for &id in &a.exclude {
        if id == 0 || id > lib.len() {
            return Err(CliError::usage(format!("reaction id {id} is outside 1..={}", lib.len())));
        }
        excluded.insert(id - 1);
    }
    let fit = eql::fit_coupled_with(&ts, &lib, &excluded, &opts)?;
    let report = build_report(
        fit,
        Method::Coupled,
        reaction_description(&lib),
        SolverChoice::Nnls { max_iterations: None },
        &ts,
        &a.input,
    );
    finish(&report, a.input.out.as_deref())
}

/// Reads a fit report, or a bare polynomial.
pub fn load_model(path: &Path) -> CliResult<PolynomialOde> {
    let text = read_text(path)?;
    if let Ok(r) = FitReport::from_json(&text) {
        return Ok(r.polynomial);
    }
    serde_json::from_str::<PolynomialOde>(&text)
        .map_err(|e| CliError::usage(format!("{}: not a fit report or polynomial: {e}", path.display())))
}

fn check_y0(model: &PolynomialOde, y0: &[f64]) -> CliResult<()> {
    if y0.len() != model.dim() {
        return Err(CliError::usage(format!("y0 has {} entries, model has {} components", y0.len(), model.dim())));
    }
    Ok(())
}

pub fn cmd_integrate(a: &IntegrateArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let data = a.data.as_deref().map(read_series).transpose()?;
    if let Some(d) = &data {
        if d.dim() != model.dim() {
            return Err(CliError::usage(format!("data has {} components, model has {}", d.dim(), model.dim())));
        }
    }
    let y0 = match (&a.y0, &data) {
        (Some(y), _) => y.clone(),
        (None, Some(d)) => d.row(0).to_vec(),
        (None, None) => return Err(CliError::usage("--y0 is required without --data")),
    };
    check_y0(&model, &y0)?;
    let (t0, h, steps) = match (&data, a.h) {
        (Some(d), None) if a.steps.is_none() && a.t_end.is_none() => (d.t0(), d.h(), d.len() - 1),
        (_, Some(h)) if h > 0.0 && h.is_finite() => {
            let steps = match (a.steps, a.t_end) {
                (Some(s), _) => s,
                (None, Some(t)) if t > 0.0 => (t / h).round() as usize,
                _ => return Err(CliError::usage("give --steps or a positive --t-end")),
            };
            (0.0, h, steps)
        }
        (_, Some(h)) => return Err(CliError::usage(format!("step must be positive, got {h}"))),
        _ => return Err(CliError::usage("give --data, or --h with --steps or --t-end")),
    };
    let ts = integrate_steps(&model, &y0, t0, h, steps, DEFAULT_BLOWUP_BOUND)?;
    emit(a.out.as_deref(), &ts.to_csv_string())
}

pub fn cmd_mse(a: &MseArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let data = read_series(&a.data)?;
    let y0 = a.y0.clone().unwrap_or_else(|| data.row(0).to_vec());
    if data.dim() != model.dim() {
        return Err(CliError::usage(format!("data has {} components, model has {}", data.dim(), model.dim())));
    }
    check_y0(&model, &y0)?;
    let mse = eql::trajectory_mse(&model, &data, &y0)?;
    println!("mse_trajectory {:?}", mse.trajectory);
    println!("mse_final {:?}", mse.final_point);
    println!("min_state {:e}", mse.min_state);
    if let Some(p) = &a.out {
        let json = serde_json::to_string_pretty(&mse).expect("mse serialises");
        write_bytes(p, json.as_bytes())?;
    }
    Ok(())
}

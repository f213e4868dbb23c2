//! Batch command-line harness for the shock-contraction laboratory.
//!
//! Subcommands cover the full pipeline: jump-condition end states, profile
//! construction, plain simulation, shift-coupled contraction runs, viscosity
//! sweeps, the nonlinear Poincare search, the scalar inequality suites, the
//! estimate ledger, and report emission. Exit codes encode the outcome:
//! 0 success, 1 configuration error, 2 numerical failure, 3 verdict FAIL.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shocklab_core::config::{parse_config_unchecked, validate, RunConfig};
use shocklab_core::dynamics::{simulate, SimulationParams};
use shocklab_core::error::{Error, Result};
use shocklab_core::functionals::{
    build_weight, decompose, estimate_ledger, shifted_field, Weight,
};
use shocklab_core::inequality_lab::{check_local_expansions, check_phi_bounds, poincare_search};
use shocklab_core::io as artifacts;
use shocklab_core::limits::{run_sweep, validate_nu_list, SweepConfig};
use shocklab_core::model::{solve_rankine_hugoniot, EndStates, GasModel, ShockFamily};
use shocklab_core::profiles::{build_profile, shock_residual, ShockProfile};
use shocklab_core::shift::{run_contraction, ContractionParams};

/// Anchor tolerance for the profile midpoint solve.
const ANCHOR_TOL: f64 = 1e-10;
/// Default viscosity ladder when a sweep is requested without sweep.nu_list.
const DEFAULT_NU_LIST: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
/// Truncation thresholds probed by the ledger sensitivity block.
const DELTA3_SENSITIVITY: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Parser)]
#[command(
    name = "shocklab",
    version,
    about = "Viscous shock contraction and vanishing-viscosity experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the jump conditions and print the end states
    Endstates(EndstatesArgs),
    /// Build the traveling-wave profile and export it
    Profile(ConfigArgs),
    /// Integrate the viscous system and export snapshots and monitors
    Simulate(ConfigArgs),
    /// Run the shift-coupled contraction monitor
    Contract(ConfigArgs),
    /// Run the vanishing-viscosity sweep
    Sweep(ConfigArgs),
    /// Randomized search for positive values of the degenerate-weight functional
    Poincare(PoincareArgs),
    /// Sampled checks of the entropy-kernel inequalities
    Inequalities(ConfigArgs),
    /// Recompute the estimate ledger from a stored report trace
    Ledger(ConfigArgs),
    /// Summarize the artifacts of a completed run directory
    Report(ConfigArgs),
}

impl Command {
    fn output_dir_hint(&self) -> Option<PathBuf> {
        match self {
            Command::Endstates(_) => None,
            Command::Profile(args)
            | Command::Simulate(args)
            | Command::Contract(args)
            | Command::Sweep(args)
            | Command::Inequalities(args)
            | Command::Ledger(args)
            | Command::Report(args) => Some(args.output_dir_hint()),
            Command::Poincare(args) => Some(args.config.output_dir_hint()),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct EndstatesArgs {
    /// Left specific volume
    #[arg(long, default_value_t = 1.0)]
    v_minus: f64,
    /// Left fluid velocity
    #[arg(long, default_value_t = 0.0)]
    u_minus: f64,
    /// Pressure jump amplitude
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Shock family: one/1 or two/2
    #[arg(long, default_value = "two")]
    family: String,
}

/// Configuration source plus per-key overrides. Flags mirror config keys with
/// `--section-key` naming; SHOCKLAB_OUTPUT overrides the output directory.
#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Configuration file (sectioned key-value text)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "model-alpha")]
    model_alpha: Option<f64>,
    #[arg(long = "shock-v-minus")]
    shock_v_minus: Option<f64>,
    #[arg(long = "shock-u-minus")]
    shock_u_minus: Option<f64>,
    #[arg(long = "shock-eps")]
    shock_eps: Option<f64>,
    /// Shock family: one/1 or two/2
    #[arg(long = "shock-family")]
    shock_family: Option<String>,
    #[arg(long = "weight-lambda")]
    weight_lambda: Option<f64>,
    /// Half-length of the spatial domain (numerics.L)
    #[arg(long = "numerics-l")]
    numerics_l: Option<f64>,
    /// Number of grid nodes (numerics.N)
    #[arg(long = "numerics-n")]
    numerics_n: Option<usize>,
    #[arg(long = "numerics-cfl")]
    numerics_cfl: Option<f64>,
    #[arg(long = "numerics-positivity-floor")]
    numerics_positivity_floor: Option<f64>,
    #[arg(long = "numerics-snapshot-cadence")]
    numerics_snapshot_cadence: Option<f64>,
    #[arg(long = "functionals-delta3")]
    functionals_delta3: Option<f64>,
    #[arg(long = "functionals-delta0")]
    functionals_delta0: Option<f64>,
    /// Final time (time.T)
    #[arg(long = "time-t")]
    time_t: Option<f64>,
    /// Comma-separated viscosity ladder (sweep.nu_list)
    #[arg(long = "sweep-nu-list", value_delimiter = ',')]
    sweep_nu_list: Option<Vec<f64>>,
    #[arg(long = "output-directory")]
    output_directory: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct PoincareArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Degeneracy parameter of the functional
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Squared L2 radius of the candidate ball
    #[arg(long, default_value_t = 4.0)]
    c1: f64,
    /// Number of random Fourier candidates
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

fn parse_family(text: &str) -> Result<ShockFamily> {
    match text {
        "one" | "1" => Ok(ShockFamily::One),
        "two" | "2" => Ok(ShockFamily::Two),
        other => Err(Error::Config {
            violations: vec![format!("family must be \"one\"/\"two\" (or 1/2), found {other:?}")],
        }),
    }
}

fn family_name(family: ShockFamily) -> &'static str {
    match family {
        ShockFamily::One => "one",
        ShockFamily::Two => "two",
    }
}

impl ConfigArgs {
    /// Best-effort output directory for failure records: environment first,
    /// then the flag, then the config file, then the default.
    fn output_dir_hint(&self) -> PathBuf {
        if let Ok(dir) = std::env::var("SHOCKLAB_OUTPUT") {
            return PathBuf::from(dir);
        }
        if let Some(dir) = &self.output_directory {
            return dir.clone();
        }
        if let Some(path) = &self.config {
            if let Ok(text) = fs::read_to_string(path) {
                if let Ok(config) = parse_config_unchecked(&text) {
                    return config.output_dir;
                }
            }
        }
        RunConfig::default().output_dir
    }

    /// File values, then flag overrides, then the environment override for
    /// the output directory; cross-field validation runs on the final values.
    fn resolve(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).map_err(|e| Error::Config {
                violations: vec![format!("cannot read config file {}: {e}", path.display())],
            })?,
            None => String::new(),
        };
        let mut config = parse_config_unchecked(&text)?;
        if let Some(v) = self.model_alpha {
            config.alpha = v;
        }
        if let Some(v) = self.shock_v_minus {
            config.v_minus = v;
        }
        if let Some(v) = self.shock_u_minus {
            config.u_minus = v;
        }
        if let Some(v) = self.shock_eps {
            config.eps = v;
        }
        if let Some(f) = &self.shock_family {
            config.family = parse_family(f)?;
        }
        if let Some(v) = self.weight_lambda {
            config.lambda = v;
        }
        if let Some(v) = self.numerics_l {
            config.l = v;
        }
        if let Some(v) = self.numerics_n {
            config.n = v;
        }
        if let Some(v) = self.numerics_cfl {
            config.cfl = v;
        }
        if let Some(v) = self.numerics_positivity_floor {
            config.positivity_floor = v;
        }
        if let Some(v) = self.numerics_snapshot_cadence {
            config.snapshot_cadence = v;
        }
        if let Some(v) = self.functionals_delta3 {
            config.delta3 = v;
        }
        if let Some(v) = self.functionals_delta0 {
            config.delta0 = v;
        }
        if let Some(v) = self.time_t {
            config.t_end = v;
        }
        if let Some(list) = &self.sweep_nu_list {
            config.nu_list = Some(list.clone());
        }
        if let Some(dir) = &self.output_directory {
            config.output_dir = dir.clone();
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Ok(dir) = std::env::var("SHOCKLAB_OUTPUT") {
            config.output_dir = PathBuf::from(dir);
        }
        let mut violations = Vec::new();
        validate(&config, &mut violations);
        if violations.is_empty() {
            Ok(config)
        } else {
            Err(Error::Config { violations })
        }
    }
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config { .. } => 1,
        _ => 2,
    }
}

/// Reclassifies argument-level failures of input-only commands as
/// configuration errors.
fn as_config_error(error: Error) -> Error {
    match error {
        Error::Config { .. } => error,
        other => Error::Config { violations: vec![other.to_string()] },
    }
}

fn ensure_outdir(config: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&config.output_dir)?;
    Ok(config.output_dir.clone())
}

struct Pipeline {
    end_states: EndStates,
    profile: ShockProfile,
    weight: Weight,
}

fn build_pipeline(config: &RunConfig) -> Result<Pipeline> {
    let model = GasModel::new(config.alpha)?;
    let end_states =
        solve_rankine_hugoniot(config.v_minus, config.u_minus, config.eps, config.family)?;
    let profile = build_profile(&end_states, &model, config.l, config.n, ANCHOR_TOL)?;
    let weight = build_weight(&profile, config.lambda)?;
    Ok(Pipeline { end_states, profile, weight })
}

fn contraction_params(config: &RunConfig) -> ContractionParams {
    ContractionParams {
        t_end: config.t_end,
        cfl: config.cfl,
        positivity_floor: config.positivity_floor,
        delta3: config.delta3,
        delta0: config.delta0,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outdir_hint = cli.command.output_dir_hint();
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(error) => {
            let code = exit_code_for(&error);
            eprintln!("error: {error}");
            if let Some(dir) = outdir_hint {
                if fs::create_dir_all(&dir).is_ok() {
                    let _ = artifacts::write_error_record(
                        &dir.join("error_record.csv"),
                        code as i32,
                        &error,
                    );
                }
            }
            ExitCode::from(code)
        }
    }
}

/// Ok(true) = success, Ok(false) = verdict FAIL (exit 3), Err = exit 1 or 2.
fn dispatch(command: &Command) -> Result<bool> {
    match command {
        Command::Endstates(args) => run_endstates(args),
        Command::Profile(args) => run_profile(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Contract(args) => run_contract(args),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Poincare(args) => run_poincare(args),
        Command::Inequalities(args) => run_inequalities(args),
        Command::Ledger(args) => run_ledger(args),
        Command::Report(args) => run_report(args),
    }
}

fn run_endstates(args: &EndstatesArgs) -> Result<bool> {
    let family = parse_family(&args.family)?;
    let es = solve_rankine_hugoniot(args.v_minus, args.u_minus, args.eps, family)
        .map_err(as_config_error)?;
    println!("family      = {}", family_name(es.family));
    println!("v_minus     = {}", es.v_minus);
    println!("u_minus     = {}", es.u_minus);
    println!("v_plus      = {}", es.v_plus);
    println!("u_plus      = {}", es.u_plus);
    println!("sigma       = {}", es.sigma);
    println!("sigma_star  = {}", es.sigma_star());
    println!("eps         = {}", es.eps);
    println!("amplitude   = {}", es.amplitude());
    println!("rh_residual = {:e}", es.rh_residual());
    Ok(true)
}

fn run_profile(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let pipeline = build_pipeline(&config)?;
    let dir = ensure_outdir(&config)?;
    let path = dir.join("profile.csv");
    artifacts::write_profile_csv(&path, &pipeline.profile, &pipeline.weight)?;
    let residual = shock_residual(&pipeline.profile);
    println!(
        "profile: {} nodes on [{}, {}], sigma = {}",
        pipeline.profile.grid.n,
        -config.l,
        config.l,
        pipeline.end_states.sigma
    );
    println!("ode residual sup = {residual:e}");
    println!("wrote {}", path.display());
    Ok(true)
}

fn run_simulate(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let pipeline = build_pipeline(&config)?;
    let dir = ensure_outdir(&config)?;
    let params = SimulationParams {
        t_end: config.t_end,
        cfl: config.cfl,
        floor: config.positivity_floor,
        snapshot_cadence: config.snapshot_cadence,
    };
    let trajectory = simulate(&pipeline.profile, &config.perturbation, &params)?;
    artifacts::write_profile_csv(&dir.join("profile.csv"), &pipeline.profile, &pipeline.weight)?;
    artifacts::write_snapshots_csv(
        &dir.join("snapshots.csv"),
        &trajectory,
        &pipeline.profile.grid.xi,
    )?;
    artifacts::write_monitor_csv(&dir.join("monitor.csv"), &trajectory.monitors)?;
    let last = trajectory.monitors.last();
    println!(
        "simulated to T = {} ({} snapshots, {} monitor rows)",
        config.t_end,
        trajectory.snapshots.len(),
        trajectory.monitors.len()
    );
    if let Some(m) = last {
        println!("final v range = [{}, {}]", m.min_v, m.max_v);
    }
    println!("wrote {}", dir.join("snapshots.csv").display());
    Ok(true)
}

fn run_contract(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let pipeline = build_pipeline(&config)?;
    let dir = ensure_outdir(&config)?;
    let params = contraction_params(&config);
    let run = run_contraction(&pipeline.profile, &pipeline.weight, &config.perturbation, &params)?;

    artifacts::write_profile_csv(&dir.join("profile.csv"), &pipeline.profile, &pipeline.weight)?;
    artifacts::write_trace_csv(&dir.join("trace.csv"), &run.trace)?;
    artifacts::write_shift_plot_csv(
        &dir.join("shift_plot.csv"),
        &run.trace,
        pipeline.end_states.sigma,
    )?;
    artifacts::write_reports_csv(&dir.join("reports.csv"), &run.reports)?;
    let ledger = estimate_ledger(&run.reports, &pipeline.end_states, config.lambda);
    artifacts::write_ledger_csv(&dir.join("ledger.csv"), &ledger)?;

    let mut blocks = Vec::new();
    for delta3 in DELTA3_SENSITIVITY {
        let shifted = shifted_field(&run.final_state, run.final_x)?;
        let report = decompose(&shifted, &pipeline.profile, &pipeline.weight, delta3)?;
        blocks.push((delta3, estimate_ledger(&[report], &pipeline.end_states, config.lambda)));
    }
    artifacts::write_ledger_sensitivity_csv(&dir.join("ledger_sensitivity.csv"), &blocks)?;

    let verdict = &run.verdict;
    println!("verdict: {}", if verdict.pass { "PASS" } else { "FAIL" });
    if let Some((t, why)) = &verdict.first_violation {
        println!("first violation at t = {t}: {why}");
    }
    println!(
        "wre(0) = {:e}, wre(T) = {:e}, final X = {}",
        run.trace.wre.first().copied().unwrap_or(0.0),
        run.trace.wre.last().copied().unwrap_or(0.0),
        run.final_x
    );
    println!(
        "max identity residual = {:e}, slack = {:e}, f ratio = {}",
        verdict.max_identity_residual, verdict.slack, verdict.f_ratio
    );
    println!("wrote {}", dir.join("trace.csv").display());
    Ok(verdict.pass)
}

fn run_sweep_cmd(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let model = GasModel::new(config.alpha)?;
    let end_states =
        solve_rankine_hugoniot(config.v_minus, config.u_minus, config.eps, config.family)?;
    let nu_list = config.nu_list.clone().unwrap_or_else(|| DEFAULT_NU_LIST.to_vec());
    validate_nu_list(&nu_list, config.n)?;
    let dir = ensure_outdir(&config)?;
    let sweep_config = SweepConfig {
        end_states,
        nu_list,
        l: config.l,
        n: config.n,
        t_end: config.t_end,
        lambda: config.lambda,
        anchor_tol: ANCHOR_TOL,
        perturbation: config.perturbation.clone(),
        contraction: contraction_params(&config),
    };
    let report = run_sweep(&sweep_config, &model)?;

    let rows = artifacts::sweep_summary_rows(&report);
    artifacts::write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    for member in &report.members {
        if let Ok(data) = &member.outcome {
            artifacts::write_trace_csv(&dir.join(artifacts::member_trace_name(member)), &data.trace)?;
        }
    }

    let mut first_failure: Option<(f64, String)> = None;
    let mut verdict_fail = false;
    for member in &report.members {
        match &member.outcome {
            Ok(data) => {
                println!(
                    "nu = {}: E0 = {:e}, drift ratio = {}, verdict {}",
                    member.nu,
                    data.e0,
                    data.drift_ratio,
                    if data.verdict_pass { "PASS" } else { "FAIL" }
                );
                if !data.verdict_pass {
                    verdict_fail = true;
                }
            }
            Err(message) => {
                println!("nu = {}: FAILED ({message})", member.nu);
                if first_failure.is_none() {
                    first_failure = Some((member.nu, message.clone()));
                }
            }
        }
    }
    println!("L1 gaps between successive shift curves: {:?}", report.l1_gaps);
    println!("C(T) = max drift ratio = {}", report.c_drift);
    println!("wrote {}", dir.join("sweep.csv").display());

    if let Some((nu, message)) = first_failure {
        return Err(Error::NumericalBlowup {
            t: f64::NAN,
            what: format!("sweep member nu = {nu} failed: {message}"),
        });
    }
    Ok(!verdict_fail)
}

fn run_poincare(args: &PoincareArgs) -> Result<bool> {
    let config = args.config.resolve()?;
    let dir = ensure_outdir(&config)?;
    let result = poincare_search(args.delta, args.c1, args.samples, config.seed)?;
    artifacts::write_poincare_csv(&dir.join("poincare_argmax.csv"), &result)?;
    artifacts::write_poincare_summary_csv(
        &dir.join("poincare_summary.csv"),
        &artifacts::PoincareSummary {
            delta: args.delta,
            c1: args.c1,
            n_samples: result.n_samples,
            seed: config.seed,
            max_r: result.max_r,
        },
    )?;
    println!(
        "max R over {} candidates (delta = {}, C1 = {}): {:e}",
        result.n_samples, args.delta, args.c1, result.max_r
    );
    println!("nonpositive: {}", if result.max_r <= 1e-9 { "yes" } else { "no" });
    println!("wrote {}", dir.join("poincare_argmax.csv").display());
    Ok(true)
}

fn run_inequalities(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let dir = ensure_outdir(&config)?;
    let bounds = check_phi_bounds(config.v_minus, 200_000, config.seed)?;
    let local = check_local_expansions(config.v_minus, &DELTA3_SENSITIVITY)?;
    artifacts::write_phi_bounds_csv(&dir.join("phi_bounds.csv"), &bounds)?;
    artifacts::write_local_expansions_csv(&dir.join("local_expansions.csv"), &local.rows)?;
    println!(
        "entropy kernel bounds over {} samples: c1_low = {}, c1_high = {}, c2 = {}, c3 = {}",
        bounds.n_samples, bounds.c1_low, bounds.c1_high, bounds.c2, bounds.c3
    );
    println!("ordering violations: {}", bounds.ordering_violations);
    let local_violations: usize = local
        .rows
        .iter()
        .map(|r| r.phi_upper_violations + r.phi_cubic_violations)
        .sum();
    println!(
        "local expansion violations: {local_violations} (largest clean delta: {})",
        local
            .largest_delta_ok
            .map(|d| d.to_string())
            .unwrap_or_else(|| "none".to_string())
    );
    println!("wrote {}", dir.join("phi_bounds.csv").display());
    Ok(true)
}

fn run_ledger(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let dir = config.output_dir.clone();
    let reports = artifacts::read_reports_csv(&dir.join("reports.csv"))?;
    let end_states =
        solve_rankine_hugoniot(config.v_minus, config.u_minus, config.eps, config.family)?;
    let rows = estimate_ledger(&reports, &end_states, config.lambda);
    artifacts::write_ledger_csv(&dir.join("ledger.csv"), &rows)?;
    println!("{} reports from {}", reports.len(), dir.join("reports.csv").display());
    for row in &rows {
        match row.ratio {
            Some(r) => println!("{:>10}: ratio = {} over {} samples", row.id, r, row.n_samples),
            None => println!("{:>10}: n/a (no usable samples)", row.id),
        }
    }
    println!("wrote {}", dir.join("ledger.csv").display());
    Ok(true)
}

fn run_report(args: &ConfigArgs) -> Result<bool> {
    let config = args.resolve()?;
    let dir = config.output_dir.clone();
    let summary = emit_report(&dir)?;
    print!("{summary}");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("summary.md"), &summary)?;
    println!("wrote {}", dir.join("summary.md").display());
    Ok(true)
}

/// Builds the markdown-style run summary from whatever artifacts exist in the
/// directory; everything missing is listed as a gap.
fn emit_report(dir: &Path) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let mut gaps: Vec<String> = Vec::new();
    writeln!(out, "# Run summary: {}", dir.display()).unwrap();
    writeln!(out).unwrap();

    let profile_path = dir.join("profile.csv");
    if profile_path.exists() {
        let table = artifacts::read_profile_csv(&profile_path)?;
        writeln!(out, "## Shock profile").unwrap();
        writeln!(
            out,
            "- {} nodes on [{}, {}]",
            table.xi.len(),
            table.xi.first().copied().unwrap_or(f64::NAN),
            table.xi.last().copied().unwrap_or(f64::NAN)
        )
        .unwrap();
        writeln!(out, "- plot data: profile.csv (v, u, h, dv, a vs xi)").unwrap();
        writeln!(out).unwrap();
    } else {
        gaps.push("profile.csv (no profile artifact)".to_string());
    }

    let trace_path = dir.join("trace.csv");
    if trace_path.exists() {
        let trace = artifacts::read_trace_csv(&trace_path)?;
        let (monotone, slack) = wre_monotone(&trace);
        writeln!(out, "## Contraction").unwrap();
        writeln!(out, "- wre monotone: {}", if monotone { "PASS" } else { "FAIL" }).unwrap();
        writeln!(
            out,
            "- wre(0) = {:e}, wre(T) = {:e}, slack = {:e}",
            trace.wre.first().copied().unwrap_or(0.0),
            trace.wre.last().copied().unwrap_or(0.0),
            slack
        )
        .unwrap();
        writeln!(out, "- final shift X(T) = {}", trace.x.last().copied().unwrap_or(0.0)).unwrap();
        writeln!(out, "- plot data: trace.csv (wre vs t; X vs t)").unwrap();
        if dir.join("shift_plot.csv").exists() {
            writeln!(out, "- plot data: shift_plot.csv (X vs t with sigma*t reference)").unwrap();
        } else {
            gaps.push("shift_plot.csv (no sigma*t reference curve)".to_string());
        }
        writeln!(out).unwrap();
    } else {
        gaps.push("trace.csv (no contraction artifacts)".to_string());
    }

    let ledger_path = dir.join("ledger.csv");
    if ledger_path.exists() {
        let rows = artifacts::read_ledger_csv(&ledger_path)?;
        writeln!(out, "## Estimate ledger").unwrap();
        writeln!(out, "| inequality | empirical ratio | samples |").unwrap();
        writeln!(out, "|---|---|---|").unwrap();
        for row in &rows {
            let ratio = row
                .ratio
                .map(|r| r.to_string())
                .unwrap_or_else(|| "n/a".to_string());
            writeln!(out, "| {} | {} | {} |", row.id, ratio, row.n_samples).unwrap();
        }
        if dir.join("ledger_sensitivity.csv").exists() {
            writeln!(out, "- sensitivity table: ledger_sensitivity.csv").unwrap();
        }
        writeln!(out).unwrap();
    } else {
        gaps.push("ledger.csv (no estimate ledger)".to_string());
    }

    let sweep_path = dir.join("sweep.csv");
    if sweep_path.exists() {
        let rows = artifacts::read_sweep_csv(&sweep_path)?;
        writeln!(out, "## Viscosity sweep").unwrap();
        let mut c_drift = 0.0_f64;
        for row in &rows {
            writeln!(
                out,
                "- nu = {}: E0 = {}, drift ratio = {}, status = {}",
                row.nu, row.e0, row.drift_ratio, row.status
            )
            .unwrap();
            if row.drift_ratio.is_finite() {
                c_drift = c_drift.max(row.drift_ratio);
            }
        }
        writeln!(out, "- C(T) = max finite drift ratio = {c_drift}").unwrap();
        writeln!(out, "- plot data: sweep.csv, trace_nu_*.csv").unwrap();
        writeln!(out).unwrap();
    } else {
        gaps.push("sweep.csv (no viscosity sweep)".to_string());
    }

    let poincare_path = dir.join("poincare_summary.csv");
    if poincare_path.exists() {
        let summary = artifacts::read_poincare_summary_csv(&poincare_path)?;
        writeln!(out, "## Degenerate-weight functional search").unwrap();
        writeln!(
            out,
            "- max R = {:e} over {} candidates (delta = {}, C1 = {}) -> {}",
            summary.max_r,
            summary.n_samples,
            summary.delta,
            summary.c1,
            if summary.max_r <= 1e-9 { "nonpositive" } else { "POSITIVE VALUE FOUND" }
        )
        .unwrap();
        if dir.join("poincare_argmax.csv").exists() {
            writeln!(out, "- plot data: poincare_argmax.csv (maximizer W vs y)").unwrap();
        }
        writeln!(out).unwrap();
    } else {
        gaps.push("poincare_summary.csv (no functional search)".to_string());
    }

    if !gaps.is_empty() {
        writeln!(out, "## Gaps").unwrap();
        for gap in &gaps {
            writeln!(out, "- missing {gap}").unwrap();
        }
        writeln!(out).unwrap();
    }
    Ok(out)
}

/// Re-applies the monotonicity criterion to a stored trace: each increase of
/// the weighted relative entropy must stay within the identity-residual slack.
fn wre_monotone(trace: &shocklab_core::shift::ShiftTrace) -> (bool, f64) {
    let slack = 10.0
        * trace
            .identity_residual
            .iter()
            .fold(0.0_f64, |acc, &r| acc.max(r));
    for k in 0..trace.len().saturating_sub(1) {
        let dt = trace.times[k + 1] - trace.times[k];
        if trace.wre[k + 1] - trace.wre[k] > slack * dt {
            return (false, slack);
        }
    }
    (true, slack)
}

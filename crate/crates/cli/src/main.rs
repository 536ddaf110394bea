//! `perspeed` command-line front end.
//!
//! Every command prints a JSON run report on stdout. Exit status: 0 success,
//! 1 internal error, 2 configuration error, 3 hypothesis failure, 4
//! simulation-quality failure; 16 is added when the report carries warnings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use perspeed::eigen::{self, EigenOptions};
use perspeed::habitat::{self, HabitatSpec};
use perspeed::model::{self, CompetitionModel};
use perspeed::sim::{self, Boundary, InitialCondition, Scheme, SimulationConfig};
use perspeed::speeds::{self, Family, LambdaCurve, SpeedResult};
use perspeed::Error;

const WARNING_BIT: u8 = 16;

#[derive(Parser)]
#[command(name = "perspeed", version, about = "Spreading speeds for periodic competition-diffusion systems")]
struct Cli {
    /// Add per-stage wall-clock timings to the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenpair of one linearized family.
    Eig(EigArgs),
    /// Minimal linear speed and the linear-determinacy certificate.
    Speed(SpeedArgs),
    /// Full hypothesis audit.
    Check(ConfigArgs),
    /// Invasion run with front tracking, or an attractivity run on one period.
    Simulate(SimArgs),
    /// Closed-form dispersion speed of the two-patch habitat.
    Habitat(HabitatArgs),
    /// Tabulate lambda(mu) for plotting.
    LambdaCurve(CurveArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Model configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Lambda1,
    Lambda2,
    Lambda0,
    LambdaBar,
    Species2,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Lambda1 => Family::Lambda1,
            FamilyArg::Lambda2 => Family::Lambda2,
            FamilyArg::Lambda0 => Family::Lambda0,
            FamilyArg::LambdaBar => Family::LambdaBar,
            FamilyArg::Species2 => Family::Species2,
        }
    }
}

#[derive(Args)]
struct EigArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Eigenproblem family; overrides --species.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Species alone with its bare growth rate.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    species: u8,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Write the eigenfunction as CSV (x, psi).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SpeedArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Write phi1*, phi2* as CSV (x, phi1, phi2).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Front,
    Attractivity,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Reflecting,
    RelativeReflecting,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Imex,
    Explicit,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value = "front")]
    mode: Mode,
    #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 150.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 0.05)]
    dx: f64,
    /// Time step, or "auto".
    #[arg(long, default_value = "auto")]
    dt: String,
    #[arg(long, default_value_t = 80.0)]
    t_final: f64,
    #[arg(long, default_value_t = 0.5)]
    output_interval: f64,
    /// Threshold fraction(s) of min u1*; repeat for several levels.
    #[arg(long, default_values_t = [0.5])]
    theta: Vec<f64>,
    /// Initial front position of the invader.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    front: f64,
    #[arg(long, value_enum, default_value = "reflecting")]
    boundary: BoundaryArg,
    #[arg(long, value_enum, default_value = "imex")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0.5)]
    fit_fraction: f64,
    /// Also extract the wave profile.
    #[arg(long)]
    profile: bool,
    #[arg(long, default_value_t = 4)]
    profile_periods: usize,
    /// Attractivity initial data as fractions of (u1*, u2*).
    #[arg(long, default_value_t = 0.1)]
    u1_fraction: f64,
    #[arg(long, default_value_t = 0.9)]
    u2_fraction: f64,
    /// Directory for CSV outputs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct HabitatArgs {
    #[arg(long, default_value_t = 0.5)]
    l1: f64,
    #[arg(long, default_value_t = 0.5)]
    l2: f64,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 2.0)]
    d2: f64,
    /// Cross-check against the grid eigensolver with this many nodes.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Write the (lambda, G, mu, s) table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value = "lambda0")]
    family: FamilyArg,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    mu_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    mu_max: f64,
    /// Number of mu values.
    #[arg(long, default_value_t = 17)]
    points: usize,
    /// Grid nodes per period; defaults to the config's n.
    #[arg(long)]
    n: Option<usize>,
    /// Write CSV here and print the report; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
    report: Option<Box<Report>>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation { .. } | Error::GridTooCoarse { .. } => 2,
            Error::NonFinite { .. }
            | Error::ClipOverflow { .. }
            | Error::BoundaryContaminated { .. }
            | Error::NoFront => 4,
            Error::Extinction { .. } | Error::NoPositiveSpeed { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
        report: None,
    }
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    inputs: Value,
    results: Value,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Map<String, Value>>,
}

struct Clock {
    enabled: bool,
    last: Instant,
    stages: Map<String, Value>,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            last: Instant::now(),
            stages: Map::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages
            .insert(stage.to_string(), json!((now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(self) -> Option<Map<String, Value>> {
        self.enabled.then_some(self.stages)
    }
}

fn load_model(path: &Path) -> Result<CompetitionModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(CompetitionModel::from_json_str(&text)?)
}

fn model_inputs(model: &CompetitionModel) -> Value {
    serde_json::to_value(model.config()).unwrap_or(Value::Null)
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn write_csv<const K: usize>(path: &Path, header: [&str; K], rows: impl Iterator<Item = [f64; K]>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    w.write_record(header).map_err(|e| io_failure(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn speed_json(s: &SpeedResult) -> Value {
    json!({
        "c": s.c,
        "mu0": s.mu0,
        "lambda0": s.lambda0,
        "bracket": [s.bracket.0, s.bracket.1],
        "evaluations": s.evaluations,
    })
}

fn cmd_eig(args: &EigArgs, clock: &mut Clock) -> Result<Report, Failure> {
    let model = load_model(&args.config.config)?;
    let family: Family = match (args.family, args.species) {
        (Some(f), _) => f.into(),
        (None, 1) => Family::Lambda1,
        (None, _) => Family::Species2,
    };
    clock.lap("load");
    let problem = family.problem(&model, args.mu)?;
    let pair = eigen::principal_eigenpair_with(&problem, &EigenOptions::default())?;
    clock.lap("eigen");
    if let Some(path) = &args.csv {
        let grid = *model.grid();
        write_csv(path, ["x", "psi"], pair.psi.values().iter().enumerate().map(|(j, &p)| [grid.node(j), p]))?;
    }
    Ok(Report {
        command: "eig",
        inputs: json!({ "model": model_inputs(&model), "family": family, "mu": args.mu, "tol": eigen::DEFAULT_TOL }),
        results: json!({
            "lambda": pair.lambda,
            "residual": pair.residual,
            "bracket": [pair.bracket.0, pair.bracket.1],
            "iterations": pair.iterations,
        }),
        warnings: Vec::new(),
        timings: None,
    })
}

fn cmd_speed(args: &SpeedArgs, clock: &mut Clock) -> Result<Report, Failure> {
    let model = load_model(&args.config.config)?;
    clock.lap("load");
    let inputs = json!({ "model": model_inputs(&model), "eigen_tol": speeds::SPEED_EIGEN_TOL, "d2_margin": speeds::D2_MARGIN });
    let hyp = model::hypothesis_h1_h2(&model)?;
    clock.lap("hypotheses");
    if !hyp.holds {
        let report = Report {
            command: "speed",
            inputs,
            results: json!({ "hypotheses": to_json(&hyp), "speed": Value::Null }),
            warnings: Vec::new(),
            timings: None,
        };
        return Err(Failure {
            code: 3,
            message: format!(
                "hypothesis failure: H1 {} (lambda1 = {}, lambda2 = {}), H2 {}",
                hyp.h1, hyp.lambda_1, hyp.lambda_2, hyp.h2
            ),
            report: Some(Box::new(report)),
        });
    }
    let cert = speeds::determinacy_certificate(&model)?;
    clock.lap("certificate");
    let lower = speeds::lower_bound_report(&model)?;
    if let (Some(path), Some(phi2)) = (&args.csv, &cert.phi2_star) {
        let grid = *model.grid();
        let (p1, p2) = (cert.phi1_star.values(), phi2.values());
        write_csv(path, ["x", "phi1", "phi2"], (0..p1.len()).map(|j| [grid.node(j), p1[j], p2[j]]))?;
    }
    let statement = if cert.linearly_determinate {
        "linearly determinate: c̄₊ = c⁰₊".to_string()
    } else {
        "not certified linearly determinate: c⁰₊ is a lower bound for the spreading speed".to_string()
    };
    Ok(Report {
        command: "speed",
        inputs,
        results: json!({
            "hypotheses": to_json(&hyp),
            "c0_plus": cert.speed.c,
            "mu0": cert.speed.mu0,
            "search": speed_json(&cert.speed),
            "lambda0_mu0": cert.lambda0_mu0,
            "lambda_bar_mu0": cert.lambda_bar_mu0,
            "d1": cert.d1_holds,
            "d2": cert.d2_holds,
            "ratio_min": cert.ratio_min,
            "linearly_determinate": cert.linearly_determinate,
            "lower_bound": lower.c0_plus.c,
            "statement": statement,
        }),
        warnings: Vec::new(),
        timings: None,
    })
}

fn cmd_check(args: &ConfigArgs, clock: &mut Clock) -> Result<Report, Failure> {
    let model = load_model(&args.config)?;
    clock.lap("load");
    let or_error = |v: Result<Value, Error>| v.unwrap_or_else(|e| json!({ "error": e.to_string() }));
    let h12 = or_error(model::hypothesis_h1_h2(&model).map(|h| to_json(&h)));
    let h3 = to_json(&model::hypothesis_h3(&model));
    clock.lap("h1-h3");
    let h4 = or_error(speeds::check_h4(&model).map(|h| {
        json!({ "c1_plus": h.c1_plus.c, "c2_minus": h.c2_minus.c, "sum": h.sum, "holds": h.holds })
    }));
    let h5 = or_error(speeds::check_h5(&model).map(|h| to_json(&h)));
    clock.lap("h4-h5");
    let cert = or_error(speeds::determinacy_certificate(&model).map(|c| {
        json!({
            "c0_plus": c.speed.c,
            "mu0": c.speed.mu0,
            "d1": c.d1_holds,
            "d2": c.d2_holds,
            "ratio_min": c.ratio_min,
            "linearly_determinate": c.linearly_determinate,
        })
    }));
    let coupling = or_error(model.build_cooperative().map(|c| {
        let worst = c.min_coupling(9);
        json!({ "min_off_diagonal": worst, "cooperative": worst >= 0.0 })
    }));
    clock.lap("certificate");
    Ok(Report {
        command: "check",
        inputs: json!({ "model": model_inputs(&model) }),
        results: json!({
            "h1_h2": h12,
            "h3": h3,
            "h4": h4,
            "h5": h5,
            "determinacy": cert,
            "quasimonotone": coupling,
        }),
        warnings: Vec::new(),
        timings: None,
    })
}

fn parse_dt(s: &str) -> Result<Option<f64>, Failure> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| Failure {
        code: 2,
        message: format!("invalid dt: expected a number or \"auto\", got {s:?}"),
        report: None,
    })
}

fn cmd_simulate(args: &SimArgs, clock: &mut Clock) -> Result<Report, Failure> {
    let model = load_model(&args.config.config)?;
    clock.lap("load");
    let config = SimulationConfig {
        domain: (args.x_min, args.x_max),
        dx: args.dx,
        dt: parse_dt(&args.dt)?,
        t_final: args.t_final,
        output_interval: args.output_interval,
        initial: InitialCondition::Invasion { front: args.front },
        boundary: match args.boundary {
            BoundaryArg::Reflecting => Boundary::Reflecting,
            BoundaryArg::RelativeReflecting => Boundary::RelativeReflecting,
        },
        scheme: match args.scheme {
            SchemeArg::Imex => Scheme::Imex,
            SchemeArg::Explicit => Scheme::Explicit,
        },
        theta: args.theta[0],
        fit_fraction: args.fit_fraction,
        profile_periods: args.profile_periods,
    };
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    let out = |name: &str| args.out_dir.as_ref().map(|d| d.join(name));
    match args.mode {
        Mode::Front => simulate_front(&model, config, args, clock, out),
        Mode::Attractivity => {
            config.validate(model.period())?;
            let frac = |v: &[f64], f: f64| v.iter().map(|x| f * x).collect::<Vec<_>>();
            let u1 = frac(model.u1_star()?.values(), args.u1_fraction);
            let u2 = frac(model.u2_star()?.values(), args.u2_fraction);
            clock.lap("steady states");
            let run = sim::run_periodic_ivp(&model, &u1, &u2, args.t_final, config.dt, args.output_interval)?;
            clock.lap("integration");
            if let Some(path) = out("distance.csv") {
                write_csv(&path, ["t", "dist"], run.rows())?;
            }
            let mut warnings = Vec::new();
            if run.reached_at.is_none() {
                warnings.push(format!(
                    "distance to E1 stayed above {} up to t = {}; final distance {}",
                    sim::ATTRACTIVITY_TOL,
                    args.t_final,
                    run.final_distance
                ));
            }
            Ok(Report {
                command: "simulate",
                inputs: json!({
                    "model": model_inputs(&model),
                    "mode": "attractivity",
                    "u1_fraction": args.u1_fraction,
                    "u2_fraction": args.u2_fraction,
                    "t_final": args.t_final,
                    "output_interval": args.output_interval,
                    "dt": run.dt,
                    "tolerance": sim::ATTRACTIVITY_TOL,
                }),
                results: json!({
                    "reached_at": run.reached_at,
                    "final_distance": run.final_distance,
                    "min_distance": run.min_distance,
                }),
                warnings,
                timings: None,
            })
        }
    }
}

fn simulate_front(
    model: &CompetitionModel,
    config: SimulationConfig,
    args: &SimArgs,
    clock: &mut Clock,
    out: impl Fn(&str) -> Option<PathBuf>,
) -> Result<Report, Failure> {
    let c0 = speeds::min_speed(model, Family::Lambda0, None).ok().map(|s| s.c);
    clock.lap("linear speed");
    let mut warnings = config.warnings(model.period(), c0);
    let traces = sim::measure_speed_levels(model, &config, &args.theta)?;
    clock.lap("front run");
    let mut fronts = Vec::new();
    for t in &traces {
        if let Some(path) = out(&if traces.len() == 1 {
            "front_trace.csv".to_string()
        } else {
            format!("front_trace_theta_{}.csv", t.theta)
        }) {
            write_csv(&path, ["t", "position"], t.rows())?;
        }
        fronts.push(json!({
            "theta": t.theta,
            "level": t.level,
            "fitted_speed": t.fitted_speed,
            "fit_window": [t.fit_window.0, t.fit_window.1],
            "fit_residual": t.fit_residual,
            "max_retreat": t.max_retreat,
            "relative_to_c0_plus": c0.map(|c| t.fitted_speed / c - 1.0),
        }));
    }
    let profile = if args.profile {
        let p = sim::extract_profile(model, &config, traces[0].fitted_speed)?;
        clock.lap("profile");
        if !p.diagnostics.converged {
            warnings.push(format!(
                "profile not converged: registration residual {} exceeds {}",
                p.diagnostics.registration_residual,
                sim::REGISTRATION_TOL
            ));
        }
        if let Some(path) = out("profile.csv") {
            write_csv(&path, ["xi", "phase", "u1", "u2"], p.rows())?;
        }
        json!({
            "speed_used": p.speed_used,
            "t_start": p.t_start,
            "reference_position": p.reference_position,
            "rows": p.xi_grid.len(),
            "diagnostics": to_json(&p.diagnostics),
        })
    } else {
        Value::Null
    };
    Ok(Report {
        command: "simulate",
        inputs: json!({ "model": model_inputs(model), "mode": "front", "simulation": to_json(&config), "thetas": args.theta }),
        results: json!({ "c0_plus": c0, "fronts": fronts, "profile": profile }),
        warnings,
        timings: None,
    })
}

fn cmd_habitat(args: &HabitatArgs, clock: &mut Clock) -> Result<Report, Failure> {
    let spec = HabitatSpec::new(args.l1, args.l2, args.a, args.c, args.d2)?;
    let disp = habitat::dispersion_speed(&spec)?;
    clock.lap("dispersion");
    let grid = match args.grid_n {
        Some(n) => {
            let g = spec.grid_speed(n)?;
            clock.lap("grid");
            json!({ "n": n, "c": g.c, "mu0": g.mu0, "relative_difference": g.c / disp.c0_plus - 1.0 })
        }
        None => Value::Null,
    };
    if let Some(path) = &args.table {
        let rows = habitat::dispersion_table(&spec, args.from, args.to, args.points)?;
        write_csv(path, ["lambda", "G", "mu", "s"], rows.into_iter())?;
    }
    Ok(Report {
        command: "habitat",
        inputs: json!({ "habitat": to_json(&spec) }),
        results: json!({
            "dispersion": to_json(&disp),
            "small_period_speed": habitat::small_period_speed(&spec),
            "grid": grid,
        }),
        warnings: Vec::new(),
        timings: None,
    })
}

/// Returns `None` when the CSV went to stdout and no report should follow.
fn cmd_lambda_curve(args: &CurveArgs, clock: &mut Clock) -> Result<Option<Report>, Failure> {
    let mut model = load_model(&args.config.config)?;
    if let Some(n) = args.n {
        model = model.with_points(n)?;
    }
    if args.points < 1 || !(args.mu_min <= args.mu_max) {
        return Err(Error::Validation {
            field: "mu range".into(),
            reason: "need mu_min <= mu_max and at least one point".into(),
        }
        .into());
    }
    clock.lap("load");
    let family: Family = args.family.into();
    let mus: Vec<f64> = (0..args.points)
        .map(|k| {
            if args.points == 1 {
                args.mu_min
            } else {
                args.mu_min + (args.mu_max - args.mu_min) * k as f64 / (args.points - 1) as f64
            }
        })
        .collect();
    let rows = LambdaCurve::of(&model, family)?.sample(&mus)?;
    clock.lap("curve");
    let records = rows.iter().map(|&(mu, l)| [mu, l, l / mu]);
    match &args.out {
        Some(path) => {
            write_csv(path, ["mu", "lambda", "lambda_over_mu"], records)?;
            Ok(Some(Report {
                command: "lambda-curve",
                inputs: json!({ "model": model_inputs(&model), "family": family, "mu": mus }),
                results: json!({ "rows": rows.len(), "path": path.display().to_string() }),
                warnings: Vec::new(),
                timings: None,
            }))
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let fail = |e: csv::Error| Failure {
                code: 1,
                message: e.to_string(),
                report: None,
            };
            w.write_record(["mu", "lambda", "lambda_over_mu"]).map_err(fail)?;
            for r in records {
                w.write_record(r.iter().map(|v| v.to_string())).map_err(fail)?;
            }
            w.flush().map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
                report: None,
            })?;
            Ok(None)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PERSPEED_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn print_report(mut report: Report, clock: Clock) {
    report.timings = clock.finish();
    match serde_json::to_string_pretty(&report) {
        Ok(s) => println!("{s}"),
        Err(e) => eprintln!("error: could not serialize report: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let mut clock = Clock::new(cli.timings);
    let result = match &cli.command {
        Command::Eig(a) => cmd_eig(a, &mut clock).map(Some),
        Command::Speed(a) => cmd_speed(a, &mut clock).map(Some),
        Command::Check(a) => cmd_check(a, &mut clock).map(Some),
        Command::Simulate(a) => cmd_simulate(a, &mut clock).map(Some),
        Command::Habitat(a) => cmd_habitat(a, &mut clock).map(Some),
        Command::LambdaCurve(a) => cmd_lambda_curve(a, &mut clock),
    };
    match result {
        Ok(Some(report)) => {
            let code = if report.warnings.is_empty() { 0 } else { WARNING_BIT };
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_report(report, clock);
            ExitCode::from(code)
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(report) = f.report {
                print_report(*report, clock);
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

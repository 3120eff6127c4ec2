//! Command-line interface: model validation, analytic evaluation on grids,
//! Bayesian updates from path files, Monte Carlo estimation and verification,
//! and the built-in example models.
//!
//! Exit codes: 0 success, 1 file/parse error, 2 semantic error,
//! 3 verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::distributions::{self, Conditioning, EvalError, TimeGrid};
use crate::model::{exponential_mixture, marshall_olkin_mixture, MixtureModel, ModelError};
use crate::observation::{
    self, belief_state, parse_path_csv, BeliefState, Information, ObservationError,
};
use crate::quad;
use crate::simulate::{self, PathCondition, SimConfig, SimError};

#[derive(Parser, Debug)]
#[command(
    name = "phasemix",
    version,
    about = "Conditional joint phase-type distributions for Markov mixture processes"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file against every structural invariant.
    Validate {
        /// Model JSON file.
        model: PathBuf,
    },
    /// Evaluate an analytic quantity on a grid; CSV to stdout.
    Eval {
        model: PathBuf,
        /// One of: survival, density, laplace, moment, transition, singular-mass.
        #[arg(long)]
        quantity: String,
        #[command(flatten)]
        grid: GridArg,
        #[command(flatten)]
        cond: ConditionArgs,
    },
    /// Bayesian updates from an observed path file; CSV to stdout.
    Update {
        model: PathBuf,
        /// Path CSV file (header `time,state`, final `horizon,<t>` row).
        path: PathBuf,
        /// Information regime: full, none, or none-known-start.
        #[arg(long)]
        mode: String,
    },
    /// Monte Carlo estimates of a quantity; CSV to stdout.
    Simulate {
        model: PathBuf,
        /// One of: survival, singular-mass, competing-risks.
        #[arg(long)]
        quantity: String,
        #[command(flatten)]
        grid: GridArg,
        #[command(flatten)]
        cond: ConditionArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Compare Monte Carlo estimates against the analytic engine.
    Verify {
        model: PathBuf,
        #[command(flatten)]
        mc: McArgs,
        /// Grid spec; defaults to a rate-scaled three-point sweep per axis.
        #[arg(long)]
        grid: Option<String>,
        #[command(flatten)]
        cond: ConditionArgs,
        /// Simulate from this model instead (negative-control runs).
        #[arg(long)]
        mc_model: Option<PathBuf>,
    },
    /// Emit a built-in example model as JSON to stdout.
    Example {
        /// One of: exp-mixture, marshall-olkin.
        name: String,
        /// Comma-separated regime-0 rates.
        #[arg(long)]
        a: Option<String>,
        /// Comma-separated regime-1 rates.
        #[arg(long)]
        b: Option<String>,
        /// Comma-separated switching probabilities.
        #[arg(long)]
        p: Option<String>,
    },
}

#[derive(Args, Debug)]
struct GridArg {
    /// Grid spec, e.g. "t=0; t1=0:2:0.25; t2=0.5". Swept axes use
    /// start:stop:step.
    #[arg(long)]
    at: String,
}

#[derive(Args, Debug)]
struct ConditionArgs {
    /// Conditioning: "no-exit" (default) or "state=<label>".
    #[arg(long, default_value = "no-exit")]
    condition: String,
    /// Pin the starting state (by label) for the belief update.
    #[arg(long)]
    start: Option<String>,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Replicate count.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn parse(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: msg.into(),
        }
    }
    fn semantic(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: msg.into(),
        }
    }
    fn verification(msg: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: msg.into(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Parse(inner) => Failure::parse(format!("parse error: {inner}")),
            other => Failure::semantic(other.to_string()),
        }
    }
}

impl From<ObservationError> for Failure {
    fn from(e: ObservationError) -> Self {
        match e {
            ObservationError::MalformedPath(_) => Failure::parse(e.to_string()),
            other => Failure::semantic(other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::semantic(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::semantic(e.to_string())
    }
}

/// Parse command-line arguments, run, and return the process exit code.
pub fn main_from_args() -> i32 {
    let cli = Cli::parse();
    let mut out = String::new();
    let code = match run(cli, &mut out) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    print!("{out}");
    code
}

/// Run a command, writing report output into `out`.
pub fn run(cli: Cli, out: &mut String) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { model } => cmd_validate(&model, out),
        Command::Eval {
            model,
            quantity,
            grid,
            cond,
        } => cmd_eval(&model, &quantity, &grid.at, &cond, out),
        Command::Update { model, path, mode } => cmd_update(&model, &path, &mode, out),
        Command::Simulate {
            model,
            quantity,
            grid,
            cond,
            mc,
        } => cmd_simulate(&model, &quantity, &grid.at, &cond, &mc, out),
        Command::Verify {
            model,
            mc,
            grid,
            cond,
            mc_model,
        } => cmd_verify(
            &model,
            &mc,
            grid.as_deref(),
            &cond,
            mc_model.as_deref(),
            out,
        ),
        Command::Example { name, a, b, p } => cmd_example(&name, a, b, p, out),
    }
}

fn load_model(path: &Path) -> Result<MixtureModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
    Ok(MixtureModel::from_json(&text)?)
}

fn load_valid_model(path: &Path) -> Result<MixtureModel, Failure> {
    let model = load_model(path)?;
    model.require_valid()?;
    Ok(model)
}

fn cmd_validate(path: &Path, out: &mut String) -> Result<(), Failure> {
    let model = load_model(path)?;
    let violations = model.validate();
    if violations.is_empty() {
        writeln!(out, "OK").unwrap();
        Ok(())
    } else {
        let mut msg = String::new();
        for v in &violations {
            msg.push_str(&format!("{v}\n"));
        }
        msg.pop();
        Err(Failure::semantic(msg))
    }
}

// ---------------------------------------------------------------------------
// grid specs
// ---------------------------------------------------------------------------

/// Named axes in spec order; each axis is a list of values.
struct GridSpec {
    axes: Vec<(String, Vec<f64>)>,
}

impl GridSpec {
    fn parse(spec: &str) -> Result<Self, Failure> {
        let mut axes = Vec::new();
        for part in spec.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Failure::semantic(format!("grid term '{part}' is not key=value")))?;
            let key = key.trim().to_string();
            let value = value.trim();
            let pieces: Vec<&str> = value.split(':').collect();
            let values = match pieces.len() {
                1 => vec![parse_f64(value)?],
                3 => {
                    let start = parse_f64(pieces[0])?;
                    let stop = parse_f64(pieces[1])?;
                    let step = parse_f64(pieces[2])?;
                    if !(step > 0.0) {
                        return Err(Failure::semantic(format!("step must be > 0 in '{part}'")));
                    }
                    let mut vals = Vec::new();
                    let mut k = 0u64;
                    loop {
                        let v = start + step * k as f64;
                        if v > stop + step * 1e-9 {
                            break;
                        }
                        vals.push(v.min(stop));
                        k += 1;
                    }
                    vals
                }
                _ => {
                    return Err(Failure::semantic(format!(
                        "grid value '{value}' must be a number or start:stop:step"
                    )))
                }
            };
            if axes.iter().any(|(k, _)| *k == key) {
                return Err(Failure::semantic(format!("duplicate grid axis '{key}'")));
            }
            axes.push((key, values));
        }
        if axes.is_empty() {
            return Err(Failure::semantic("empty grid spec"));
        }
        Ok(GridSpec { axes })
    }

    fn has(&self, key: &str) -> bool {
        self.axes.iter().any(|(k, _)| k == key)
    }

    /// Cartesian product over the axes, in spec order.
    fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (key, values) in &self.axes {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for base in &points {
                for &v in values {
                    let mut p = base.clone();
                    p.push((key.clone(), v));
                    next.push(p);
                }
            }
            points = next;
        }
        points
    }
}

fn parse_f64(s: &str) -> Result<f64, Failure> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Failure::semantic(format!("'{s}' is not a number")))
}

fn point_get(point: &[(String, f64)], key: &str) -> Option<f64> {
    point.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

fn point_label(point: &[(String, f64)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Query times t1..tn for an n-exit model, in exit-set order.
fn joint_times(point: &[(String, f64)], n: usize) -> Result<Vec<f64>, Failure> {
    (1..=n)
        .map(|k| {
            point_get(point, &format!("t{k}")).ok_or_else(|| {
                Failure::semantic(format!(
                    "grid is missing axis 't{k}' (model has {n} exit sets)"
                ))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// conditioning
// ---------------------------------------------------------------------------

fn parse_condition(model: &MixtureModel, cond: &str) -> Result<Conditioning, Failure> {
    let cond = cond.trim();
    if cond.eq_ignore_ascii_case("no-exit") {
        return Ok(Conditioning::NoExit);
    }
    if let Some(label) = cond.strip_prefix("state=") {
        let idx = model
            .space
            .index_of(label.trim())
            .ok_or_else(|| Failure::semantic(format!("unknown state label '{label}'")))?;
        if idx >= model.transient_count() {
            return Err(Failure::semantic(format!(
                "cannot condition on the absorbing state '{label}'"
            )));
        }
        return Ok(Conditioning::AtState(idx));
    }
    Err(Failure::semantic(format!(
        "condition must be 'no-exit' or 'state=<label>', got '{cond}'"
    )))
}

fn belief_at(model: &MixtureModel, t: f64, start: &Option<String>) -> Result<BeliefState, Failure> {
    let info = match start {
        Some(label) => {
            let idx = model
                .space
                .index_of(label)
                .ok_or_else(|| Failure::semantic(format!("unknown state label '{label}'")))?;
            Information::NoInfoKnownStart { t, start: idx }
        }
        None => Information::NoInfo { t },
    };
    Ok(belief_state(model, &info)?)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(
    model_path: &Path,
    quantity: &str,
    at: &str,
    cond_args: &ConditionArgs,
    out: &mut String,
) -> Result<(), Failure> {
    let model = load_valid_model(model_path)?;
    let cond = parse_condition(&model, &cond_args.condition)?;
    let spec = GridSpec::parse(at)?;
    let n = model.exits.count();

    let axis_names: Vec<String> = spec.axes.iter().map(|(k, _)| k.clone()).collect();
    let header = axis_names.join(",");
    match quantity {
        "density" => writeln!(out, "{header},value,branch").unwrap(),
        "transition" => writeln!(out, "{header},from,to,value").unwrap(),
        _ => writeln!(out, "{header},value").unwrap(),
    }

    for point in spec.points() {
        let t = point_get(&point, "t").unwrap_or(0.0);
        let belief = belief_at(&model, t, &cond_args.start)?;
        let cells: Vec<String> = point.iter().map(|(_, v)| format!("{v}")).collect();
        let prefix = cells.join(",");
        match quantity {
            "survival" => {
                let value = if spec.has("s") {
                    let s = point_get(&point, "s").unwrap();
                    distributions::survival_uni(&model, &belief, cond, s)?
                } else {
                    let times = joint_times(&point, n)?;
                    let grid = TimeGrid::new(t, times)?;
                    distributions::survival_joint(&model, &belief, cond, &grid)?
                };
                writeln!(out, "{prefix},{value}").unwrap();
            }
            "density" => {
                if spec.has("s") {
                    let s = point_get(&point, "s").unwrap();
                    let value = distributions::density_uni(&model, &belief, cond, s)?;
                    writeln!(out, "{prefix},{value},").unwrap();
                } else if n == 2 {
                    let times = joint_times(&point, 2)?;
                    let eval = distributions::density_joint_bi(
                        &model, &belief, cond, times[0], times[1],
                    )?;
                    writeln!(out, "{prefix},{},{}", eval.value, eval.branch).unwrap();
                } else {
                    let times = joint_times(&point, n)?;
                    let grid = TimeGrid::new(t, times)?;
                    let value =
                        distributions::density_joint_multi(&model, &belief, cond, &grid)?;
                    writeln!(out, "{prefix},{value},").unwrap();
                }
            }
            "laplace" => {
                let value = if spec.has("lambda") {
                    let l = point_get(&point, "lambda").unwrap();
                    distributions::laplace_uni(&model, &belief, cond, l)?
                } else {
                    let l1 = point_get(&point, "lambda1").ok_or_else(|| {
                        Failure::semantic("laplace needs 'lambda' or 'lambda1'+'lambda2'")
                    })?;
                    let l2 = point_get(&point, "lambda2").ok_or_else(|| {
                        Failure::semantic("laplace needs 'lambda' or 'lambda1'+'lambda2'")
                    })?;
                    distributions::laplace_joint_bi(&model, &belief, cond, l1, l2)?
                };
                writeln!(out, "{prefix},{value}").unwrap();
            }
            "moment" => {
                let order = point_get(&point, "n")
                    .ok_or_else(|| Failure::semantic("moment needs the axis 'n'"))?;
                if order < 0.0 || order.fract() != 0.0 {
                    return Err(Failure::semantic(format!(
                        "moment order must be a nonnegative integer, got {order}"
                    )));
                }
                let value = distributions::moment_uni(&model, &belief, cond, order as u32)?;
                writeln!(out, "{prefix},{value}").unwrap();
            }
            "transition" => {
                let s = point_get(&point, "s")
                    .ok_or_else(|| Failure::semantic("transition needs the axis 's'"))?;
                let p = distributions::transition_matrix(&model, &belief, s)?;
                for i in 0..p.rows() {
                    for j in 0..p.cols() {
                        writeln!(
                            out,
                            "{prefix},{},{},{}",
                            model.space.label(i),
                            model.space.label(j),
                            p[(i, j)]
                        )
                        .unwrap();
                    }
                }
            }
            "singular-mass" => {
                let t1 = point_get(&point, "t1")
                    .ok_or_else(|| Failure::semantic("singular-mass needs the axis 't1'"))?;
                let value = distributions::singular_cdf_bi(&model, &belief, cond, t1)?;
                writeln!(out, "{prefix},{value}").unwrap();
            }
            other => {
                return Err(Failure::semantic(format!(
                    "unknown quantity '{other}' (expected survival, density, laplace, moment, transition or singular-mass)"
                )))
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// update
// ---------------------------------------------------------------------------

fn cmd_update(
    model_path: &Path,
    path_file: &Path,
    mode: &str,
    out: &mut String,
) -> Result<(), Failure> {
    let model = load_valid_model(model_path)?;
    let text = std::fs::read_to_string(path_file)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path_file.display())))?;
    let path = parse_path_csv(&text, &model.space)?;
    let info = match mode {
        "full" => Information::FullPath(path),
        "none" => Information::NoInfo { t: path.horizon() },
        "none-known-start" => Information::NoInfoKnownStart {
            t: path.horizon(),
            start: path.initial_state(),
        },
        other => {
            return Err(Failure::semantic(format!(
                "mode must be full, none or none-known-start, got '{other}'"
            )))
        }
    };
    let switching = observation::switching_update(&model, &info)?;
    let distribution = observation::state_update(&model, &info)?;
    writeln!(out, "state,s,pi").unwrap();
    for i in 0..model.transient_count() {
        let s_cell = match switching[i] {
            Some(v) => format!("{v}"),
            None => "undefined".to_string(),
        };
        writeln!(out, "{},{s_cell},{}", model.space.label(i), distribution[i]).unwrap();
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn sim_condition(t: f64, cond: Conditioning) -> Option<PathCondition> {
    match cond {
        Conditioning::AtState(i) => Some(PathCondition {
            time: t,
            state: Some(i),
        }),
        Conditioning::NoExit => Some(PathCondition {
            time: t,
            state: None,
        }),
    }
}

fn cmd_simulate(
    model_path: &Path,
    quantity: &str,
    at: &str,
    cond_args: &ConditionArgs,
    mc: &McArgs,
    out: &mut String,
) -> Result<(), Failure> {
    let model = load_valid_model(model_path)?;
    let cond = parse_condition(&model, &cond_args.condition)?;
    let spec = GridSpec::parse(at)?;
    let n = model.exits.count();
    let axis_names: Vec<String> = spec.axes.iter().map(|(k, _)| k.clone()).collect();
    let header = axis_names.join(",");
    match quantity {
        "competing-risks" => writeln!(out, "{header},estimate,se,accepted,tie_fraction").unwrap(),
        _ => writeln!(out, "{header},estimate,se,accepted").unwrap(),
    }

    for point in spec.points() {
        let t = point_get(&point, "t").unwrap_or(0.0);
        let config = SimConfig {
            replicates: mc.n,
            seed: mc.seed,
            horizon_cap: None,
            condition: sim_condition(t, cond),
        };
        let cells: Vec<String> = point.iter().map(|(_, v)| format!("{v}")).collect();
        let prefix = cells.join(",");
        match quantity {
            "survival" => {
                let times = joint_times(&point, n)?;
                let grid = TimeGrid::new(t, times)?;
                let est = simulate::empirical_joint_survival(&model, &config, &grid)?;
                writeln!(
                    out,
                    "{prefix},{},{},{}",
                    est.value, est.std_error, est.accepted
                )
                .unwrap();
            }
            "singular-mass" => {
                let est = simulate::empirical_singular_mass(&model, &config, 0.0)?;
                writeln!(
                    out,
                    "{prefix},{},{},{}",
                    est.value, est.std_error, est.accepted
                )
                .unwrap();
            }
            "competing-risks" => {
                let cause = point_get(&point, "cause")
                    .ok_or_else(|| Failure::semantic("competing-risks needs the axis 'cause'"))?;
                let s = point_get(&point, "s").unwrap_or(f64::INFINITY);
                if cause < 1.0 || cause.fract() != 0.0 {
                    return Err(Failure::semantic(format!(
                        "cause must be a positive integer exit-set index, got {cause}"
                    )));
                }
                let cr =
                    simulate::empirical_competing_risks(&model, &config, t, s, cause as usize - 1)?;
                writeln!(
                    out,
                    "{prefix},{},{},{},{}",
                    cr.estimate.value, cr.estimate.std_error, cr.estimate.accepted, cr.tie_fraction
                )
                .unwrap();
            }
            other => return Err(Failure::semantic(format!(
                "unknown quantity '{other}' (expected survival, singular-mass or competing-risks)"
            ))),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

const Z_LIMIT: f64 = 4.0;
const LOW_PRECISION_SE: f64 = 0.005;
const NORMALIZATION_TOL: f64 = 1e-6;

fn default_verify_grid(model: &MixtureModel) -> String {
    // three survival points per axis at a time scale set by the mean of the
    // positive holding rates; precision only, never correctness
    let mut sum = 0.0;
    let mut count = 0usize;
    for g in [&model.generators.a, &model.generators.b] {
        for i in 0..g.rows() {
            let rate = -g[(i, i)];
            if rate > 0.0 {
                sum += rate;
                count += 1;
            }
        }
    }
    let scale = if count > 0 { count as f64 / sum } else { 1.0 };
    let axes: Vec<String> = (1..=model.exits.count())
        .map(|k| format!("t{k}={}:{}:{}", 0.35 * scale, 1.66 * scale, 0.65 * scale))
        .collect();
    format!("t=0; {}", axes.join("; "))
}

struct VerifyRow {
    check: String,
    point: String,
    analytic: f64,
    estimate: f64,
    se: f64,
    z: f64,
    flag: String,
}

fn z_score(analytic: f64, estimate: f64, se: f64) -> f64 {
    if se == 0.0 {
        if (analytic - estimate).abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (estimate - analytic) / se
    }
}

fn cmd_verify(
    model_path: &Path,
    mc: &McArgs,
    grid: Option<&str>,
    cond_args: &ConditionArgs,
    mc_model_path: Option<&Path>,
    out: &mut String,
) -> Result<(), Failure> {
    let model = load_valid_model(model_path)?;
    let mc_model = match mc_model_path {
        Some(p) => load_valid_model(p)?,
        None => model.clone(),
    };
    let cond = parse_condition(&model, &cond_args.condition)?;
    let spec_text = match grid {
        Some(g) => g.to_string(),
        None => default_verify_grid(&model),
    };
    let spec = GridSpec::parse(&spec_text)?;
    let n = model.exits.count();

    let mut rows: Vec<VerifyRow> = Vec::new();

    for point in spec.points() {
        let t = point_get(&point, "t").unwrap_or(0.0);
        let belief = belief_at(&model, t, &cond_args.start)?;
        let times = joint_times(&point, n)?;
        let grid = TimeGrid::new(t, times)?;
        let analytic = distributions::survival_joint(&model, &belief, cond, &grid)?;
        let config = SimConfig {
            replicates: mc.n,
            seed: mc.seed,
            horizon_cap: None,
            condition: sim_condition(t, cond),
        };
        let est = simulate::empirical_joint_survival(&mc_model, &config, &grid)?;
        rows.push(VerifyRow {
            check: "survival".into(),
            point: point_label(&point),
            analytic,
            estimate: est.value,
            se: est.std_error,
            z: z_score(analytic, est.value, est.std_error),
            flag: String::new(),
        });
    }

    if n == 2 {
        // simultaneous-exit mass viewed from t = 0
        let belief = belief_at(&model, 0.0, &cond_args.start)?;
        let analytic = distributions::singular_cdf_bi(&model, &belief, cond, 0.0)?;
        let config = SimConfig {
            replicates: mc.n,
            seed: mc.seed,
            horizon_cap: None,
            condition: sim_condition(0.0, cond),
        };
        let est = simulate::empirical_singular_mass(&mc_model, &config, 0.0)?;
        rows.push(VerifyRow {
            check: "singular-mass".into(),
            point: "t1=0".into(),
            analytic,
            estimate: est.value,
            se: est.std_error,
            z: z_score(analytic, est.value, est.std_error),
            flag: String::new(),
        });

        for cause in 0..2usize {
            let analytic =
                distributions::competing_risk_bi(&model, &belief, cond, cause, f64::INFINITY)?;
            let cr =
                simulate::empirical_competing_risks(&mc_model, &config, 0.0, f64::INFINITY, cause)?;
            rows.push(VerifyRow {
                check: "competing-risks".into(),
                point: format!("cause={}", cause + 1),
                analytic,
                estimate: cr.estimate.value,
                se: cr.estimate.std_error,
                z: z_score(analytic, cr.estimate.value, cr.estimate.std_error),
                flag: String::new(),
            });
        }
    }

    writeln!(out, "check,point,analytic,estimate,se,z,flag").unwrap();
    let mut any_fail = false;
    let mut max_abs_z: f64 = 0.0;
    for row in &mut rows {
        let mut flags = Vec::new();
        if row.se > LOW_PRECISION_SE {
            flags.push("low-precision");
        }
        if !(row.z.abs() <= Z_LIMIT) {
            flags.push("FAIL");
            any_fail = true;
        }
        max_abs_z = max_abs_z.max(row.z.abs());
        row.flag = flags.join("+");
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.check, row.point, row.analytic, row.estimate, row.se, row.z, row.flag
        )
        .unwrap();
    }

    if n == 2 {
        // normalization of the bivariate density by quadrature
        let belief = belief_at(&model, 0.0, &cond_args.start)?;
        let total = bivariate_normalization(&model, &belief, cond)?;
        let err = (total - 1.0).abs();
        let ok = err <= NORMALIZATION_TOL;
        if !ok {
            any_fail = true;
        }
        writeln!(
            out,
            "normalization,quadrature,1,{total},,{err},{}",
            if ok { "" } else { "FAIL" }
        )
        .unwrap();
    }

    writeln!(
        out,
        "result: {} (max |z| = {max_abs_z})",
        if any_fail { "FAIL" } else { "PASS" }
    )
    .unwrap();
    if any_fail {
        return Err(Failure::verification(format!(
            "verification failed (max |z| = {max_abs_z})"
        )));
    }
    Ok(())
}

/// Integrate both absolutely continuous components and the diagonal mass of
/// the bivariate density; the result must be 1. The box is grown until the
/// marginal survivals (which bound the truncated mass, unlike the joint
/// survival at the corner) are below 1e-11.
pub fn bivariate_normalization(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
) -> Result<f64, EvalError> {
    let t = belief.t;
    let mut hi = t + 1.0;
    loop {
        let tail1 =
            distributions::survival_joint(model, belief, cond, &TimeGrid::new(t, vec![hi, t])?)?;
        let tail2 =
            distributions::survival_joint(model, belief, cond, &TimeGrid::new(t, vec![t, hi])?)?;
        if tail1 + tail2 < 1e-11 || hi > t + 1e6 {
            break;
        }
        hi *= 2.0;
    }
    let part1 = quad::integrate2(
        |t1, t2| {
            distributions::density_joint_bi(model, belief, cond, t1, t2)
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        },
        t,
        hi,
        |t1| t1,
        1e-8,
    );
    let part2 = quad::integrate2(
        |t2, t1| {
            distributions::density_joint_bi(model, belief, cond, t1, t2)
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        },
        t,
        hi,
        |t2| t2,
        1e-8,
    );
    let diag = quad::integrate(
        |u| {
            distributions::density_joint_bi(model, belief, cond, u, u)
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        },
        t,
        hi,
        1e-9,
    );
    Ok(part1.value + part2.value + diag.value)
}

// ---------------------------------------------------------------------------
// example models
// ---------------------------------------------------------------------------

fn parse_list(text: &str, expected: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let values: Result<Vec<f64>, Failure> = text.split(',').map(parse_f64).collect();
    let values = values?;
    if values.len() != expected {
        return Err(Failure::semantic(format!(
            "{what} needs {expected} comma-separated values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn cmd_example(
    name: &str,
    a: Option<String>,
    b: Option<String>,
    p: Option<String>,
    out: &mut String,
) -> Result<(), Failure> {
    let model = match name {
        "exp-mixture" => {
            let a = parse_list(&a.unwrap_or_else(|| "1,2".into()), 2, "--a")?;
            let b = parse_list(&b.unwrap_or_else(|| "3,4".into()), 2, "--b")?;
            let p = parse_list(&p.unwrap_or_else(|| "0.3,0.3,0.3".into()), 3, "--p")?;
            exponential_mixture([a[0], a[1]], [b[0], b[1]], [p[0], p[1], p[2]])?
        }
        "marshall-olkin" => {
            let a = parse_list(&a.unwrap_or_else(|| "1,1,1".into()), 3, "--a")?;
            let b = parse_list(&b.unwrap_or_else(|| "2,2,2".into()), 3, "--b")?;
            let p = parse_list(&p.unwrap_or_else(|| "0.5,0.5,0.5".into()), 3, "--p")?;
            marshall_olkin_mixture([a[0], a[1], a[2]], [b[0], b[1], b[2]], [p[0], p[1], p[2]])?
        }
        other => {
            return Err(Failure::semantic(format!(
                "unknown example '{other}' (expected exp-mixture or marshall-olkin)"
            )))
        }
    };
    writeln!(out, "{}", model.to_json()).unwrap();
    Ok(())
}

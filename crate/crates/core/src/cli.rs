//! Command-line front end: scenario and trajectory file formats plus the
//! `evaluate`, `select`, `sweep`, `rank` and `catalog` commands.
//!
//! Exit codes: 0 success, 2 usage, 3 parse, 4 infeasible or no candidate,
//! 5 missing context, 1 for I/O failures while writing output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::catalog::{catalog, resolve_cost_expr, CostFunction, DuWeightConfig};
use crate::costs::{CostId, EvaluationContext, FuelModel, ObstacleSet};
use crate::dsl::{CostSpec, Evaluation, Objective};
use crate::error::Error;
use crate::exec::Execution;
use crate::frenet::{generate_candidates_with, CandidateConfig, CandidateStart};
use crate::geometry::{Point2, Shape};
use crate::harness::{
    default_grid, rank_weight_sets_with, reference_experiment, run_sweep_with, Experiment, MetricKind,
    MetricRow, Ranking, SweepConfig, WeightSet, BASE_WEIGHTS,
};
use crate::scenario::{
    GoalRegion, KinematicBounds, LeadingVehicleSpec, Profile, ResponseRatioConfig, Scenario,
    DEFAULT_FRAME_SPACING,
};
use crate::selection::{check_constraints, select_best_with, FeasibilityReport};
use crate::trajectory::{derive_kinematics, StateSample, TimedPoint, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_MISSING_CONTEXT: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    MissingContext(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::MissingContext(_) => EXIT_MISSING_CONTEXT,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn from_lib(context: &str, e: Error) -> Self {
        let mut msg = format!("{context}: {e}");
        if let Error::NoFeasibleCandidate(reports) = e.root() {
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for v in reports.iter().flat_map(|r| &r.violations) {
                match counts.iter_mut().find(|(c, _)| *c == v.constraint) {
                    Some((_, n)) => *n += 1,
                    None => counts.push((v.constraint, 1)),
                }
            }
            let parts: Vec<String> = counts.iter().map(|(c, n)| format!("{c} x{n}")).collect();
            msg.push_str(&format!(" (violations: {})", parts.join(", ")));
        }
        match e.root() {
            Error::MissingContext(_) => CliError::MissingContext(msg),
            Error::NoFeasibleCandidate(_) => CliError::Infeasible(msg),
            Error::InvalidConfig(_) => CliError::Usage(msg),
            _ => CliError::Parse(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "trajcost", version, about = "Evaluate, select and tune trajectory cost functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one trajectory file against a cost expression.
    Evaluate(EvaluateArgs),
    /// Generate candidates around the base path and write the cheapest feasible one.
    Select(SelectArgs),
    /// Sweep one weight over a grid and write a metric table.
    Sweep(SweepArgs),
    /// Rank weight sets by the metrics of the trajectories they select.
    Rank(RankArgs),
    /// List the named cost functions and their expressions.
    Catalog,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Bracket expression such as "[(A|1),(J|0.5)]" or "@NAME".
    #[arg(long, allow_hyphen_values = true)]
    pub cost: String,
    /// Trajectory of the previous planning cycle, for the C partial.
    #[arg(long)]
    pub previous: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct CandidateArgs {
    /// Comma-separated terminal lateral offsets [m].
    #[arg(long, allow_hyphen_values = true)]
    pub offsets: Option<String>,
    /// Planning distance along the base path [m].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Progress speed along the base path [m/s].
    #[arg(long)]
    pub speed: Option<f64>,
    /// Sample spacing along the base path [m].
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Start arc length [m].
    #[arg(long, allow_hyphen_values = true)]
    pub start_s: Option<f64>,
    /// Start lateral offset [m].
    #[arg(long, allow_hyphen_values = true)]
    pub start_d: Option<f64>,
    /// Start heading relative to the base-path tangent [rad].
    #[arg(long, allow_hyphen_values = true)]
    pub heading_error: Option<f64>,
    /// Start time [s].
    #[arg(long, allow_hyphen_values = true)]
    pub start_t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub cost: String,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[arg(long)]
    pub previous: Option<PathBuf>,
    /// Where to write the winning trajectory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario file; the built-in reference scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Base weights as "ID=w,..."; defaults to LC=0.17,D=0.2,C=0.02,L=0.7,K=0.01.
    #[arg(long)]
    pub base_weights: Option<String>,
    /// Identifier of the swept weight.
    #[arg(long)]
    pub swept: String,
    /// Comma-separated grid; defaults to 0, 0.1, ..., 1.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Weight set as "LABEL=EXPR" or just "EXPR"; repeatable. Defaults to
    /// @RA1, @RA2 and @KC1.
    #[arg(long = "set", allow_hyphen_values = true)]
    pub sets: Vec<String>,
    /// Comma-separated metric names.
    #[arg(long)]
    pub metrics: Option<String>,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Select(a) => cmd_select(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Rank(a) => cmd_rank(a, out),
        Command::Catalog => cmd_catalog(out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn exec_for(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

fn write_file_or(path: Option<&Path>, out: &mut dyn Write, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => write_out(out, text),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

// ---------------------------------------------------------------- scenarios

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    speed_limit: f64,
    ego_radius: Option<f64>,
    frame_spacing: Option<f64>,
    base_path: BasePathDef,
    obstacles: Option<ObstaclesDef>,
    goal: GoalDef,
    profiles: Option<ProfilesDef>,
    leading_vehicle: Option<LeadingVehicleDef>,
    response_ratio: Option<ResponseRatioDef>,
    kinematic_bounds: Option<KinematicBoundsDef>,
    fuel_model: Option<FuelModelDef>,
    du: Option<DuDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasePathDef {
    vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstaclesDef {
    d_influence: f64,
    #[serde(default)]
    shapes: Vec<ShapeDef>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum ShapeKind {
    Disc,
    Polygon,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapeDef {
    #[serde(rename = "type")]
    kind: ShapeKind,
    center: Option<[f64; 2]>,
    radius: Option<f64>,
    vertices: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalDef {
    #[serde(rename = "type")]
    kind: ShapeKind,
    center: Option<[f64; 2]>,
    radius: Option<f64>,
    vertices: Option<Vec<[f64; 2]>>,
    time_window: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilesDef {
    v_des: Option<Vec<[f64; 2]>>,
    theta_des: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeadingVehicleDef {
    #[serde(default = "default_d_l_min")]
    d_l_min: f64,
    #[serde(default = "default_k_gain")]
    k_gain: f64,
    a_maxdec: f64,
    #[serde(default = "default_t_response")]
    t_response: f64,
    /// Rows of `[t, s, v]`.
    trace: Vec<[f64; 3]>,
}

fn default_d_l_min() -> f64 {
    crate::costs::LeadingVehicleContext::D_L_MIN
}

fn default_k_gain() -> f64 {
    crate::costs::LeadingVehicleContext::K_GAIN
}

fn default_t_response() -> f64 {
    crate::costs::LeadingVehicleContext::T_RESPONSE
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseRatioDef {
    t_response: f64,
    max_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KinematicBoundsDef {
    a_max: Option<f64>,
    delta_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FuelModelDef {
    eta: f64,
    heating_value: f64,
    density: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DuDef {
    a_max: f64,
    v_max: f64,
    d_thresh: Option<f64>,
    theta_thresh: Option<f64>,
    w4: Option<f64>,
    w5_0: Option<f64>,
    w6_0: Option<f64>,
    w7_0: Option<f64>,
}

/// A scenario file: the scenario itself plus the optional evaluation
/// settings that travel with it.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub response_ratio: Option<ResponseRatioConfig>,
    pub kinematic_bounds: Option<KinematicBounds>,
    pub fuel_model: Option<FuelModel>,
    pub du: Option<DuWeightConfig>,
}

impl LoadedScenario {
    pub fn from_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            response_ratio: None,
            kinematic_bounds: None,
            fuel_model: None,
            du: None,
        }
    }

    /// Evaluation context carrying every optional setting of the file.
    pub fn context(&self) -> EvaluationContext<'_> {
        let mut ctx = EvaluationContext::new(&self.scenario);
        ctx.response_config = self.response_ratio;
        ctx.kinematic_bounds = self.kinematic_bounds;
        ctx.fuel_model = self.fuel_model;
        ctx.du_config = self.du;
        ctx
    }
}

fn field_err(field: &str, e: impl std::fmt::Display) -> String {
    format!("field '{field}': {e}")
}

fn check_finite(field: &str, values: &[f64]) -> std::result::Result<(), String> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(field_err(field, format!("value {v} is not finite"))),
        None => Ok(()),
    }
}

fn points(field: &str, raw: &[[f64; 2]]) -> std::result::Result<Vec<Point2>, String> {
    check_finite(field, &raw.iter().flatten().copied().collect::<Vec<_>>())?;
    Ok(raw.iter().map(|p| Point2::new(p[0], p[1])).collect())
}

fn build_shape(
    field: &str,
    kind: ShapeKind,
    center: Option<[f64; 2]>,
    radius: Option<f64>,
    vertices: Option<&[[f64; 2]]>,
) -> std::result::Result<Shape, String> {
    match kind {
        ShapeKind::Disc => {
            if vertices.is_some() {
                return Err(field_err(field, "a disc takes center and radius, not vertices"));
            }
            let c = center.ok_or_else(|| field_err(field, "disc needs 'center'"))?;
            let r = radius.ok_or_else(|| field_err(field, "disc needs 'radius'"))?;
            let c = points(&format!("{field}.center"), &[c])?[0];
            Shape::disc(c, r).map_err(|e| field_err(field, e))
        }
        ShapeKind::Polygon => {
            if center.is_some() || radius.is_some() {
                return Err(field_err(field, "a polygon takes vertices, not center or radius"));
            }
            let v = vertices.ok_or_else(|| field_err(field, "polygon needs 'vertices'"))?;
            let v = points(&format!("{field}.vertices"), v)?;
            Shape::polygon(v).map_err(|e| field_err(field, e))
        }
    }
}

fn profile(field: &str, rows: &[[f64; 2]]) -> std::result::Result<Profile, String> {
    Profile::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
        .map_err(|e| field_err(field, e))
}

/// Parses a scenario document. Syntax errors carry line and column; schema
/// errors name the offending field.
pub fn parse_scenario(text: &str) -> std::result::Result<LoadedScenario, String> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| e.to_string())?;
    check_finite("speed_limit", &[file.speed_limit])?;

    let path = crate::trajectory::BasePath::new(points("base_path.vertices", &file.base_path.vertices)?)
        .map_err(|e| field_err("base_path.vertices", e))?;

    let obstacles = match &file.obstacles {
        Some(o) => {
            check_finite("obstacles.d_influence", &[o.d_influence])?;
            let shapes = o
                .shapes
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    build_shape(
                        &format!("obstacles.shapes[{i}]"),
                        s.kind,
                        s.center,
                        s.radius,
                        s.vertices.as_deref(),
                    )
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            ObstacleSet::new(shapes, o.d_influence).map_err(|e| field_err("obstacles", e))?
        }
        None => ObstacleSet::empty(1.0).expect("positive influence"),
    };

    let g = &file.goal;
    let goal = GoalRegion {
        shape: build_shape("goal", g.kind, g.center, g.radius, g.vertices.as_deref())?,
        time_window: match g.time_window {
            Some(w) => {
                check_finite("goal.time_window", &w)?;
                Some((w[0], w[1]))
            }
            None => None,
        },
    };

    let spacing = file.frame_spacing.unwrap_or(DEFAULT_FRAME_SPACING);
    check_finite("frame_spacing", &[spacing])?;
    let mut scenario = Scenario::with_frame_spacing(path, spacing, obstacles, file.speed_limit, goal)
        .map_err(|e| field_err("scenario", e))?;
    if let Some(r) = file.ego_radius {
        scenario = scenario.with_ego_radius(r).map_err(|e| field_err("ego_radius", e))?;
    }
    if let Some(p) = &file.profiles {
        if let Some(rows) = &p.v_des {
            scenario = scenario.with_v_des(profile("profiles.v_des", rows)?);
        }
        if let Some(rows) = &p.theta_des {
            scenario = scenario.with_theta_des(profile("profiles.theta_des", rows)?);
        }
    }
    if let Some(lv) = &file.leading_vehicle {
        check_finite(
            "leading_vehicle",
            &[lv.d_l_min, lv.k_gain, lv.a_maxdec, lv.t_response],
        )?;
        let t: Vec<f64> = lv.trace.iter().map(|r| r[0]).collect();
        let s = Profile::new(t.clone(), lv.trace.iter().map(|r| r[1]).collect())
            .map_err(|e| field_err("leading_vehicle.trace", e))?;
        let v = Profile::new(t, lv.trace.iter().map(|r| r[2]).collect())
            .map_err(|e| field_err("leading_vehicle.trace", e))?;
        scenario = scenario
            .with_leading_vehicle(LeadingVehicleSpec {
                s,
                v,
                d_l_min: lv.d_l_min,
                k_gain: lv.k_gain,
                a_maxdec: lv.a_maxdec,
                t_response: lv.t_response,
            })
            .map_err(|e| field_err("leading_vehicle", e))?;
    }

    let response_ratio = match &file.response_ratio {
        Some(r) => Some(
            ResponseRatioConfig::new(r.t_response, r.max_ratio).map_err(|e| field_err("response_ratio", e))?,
        ),
        None => None,
    };
    let kinematic_bounds = match &file.kinematic_bounds {
        Some(k) => {
            for (name, v) in [("a_max", k.a_max), ("delta_max", k.delta_max)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(field_err(
                            &format!("kinematic_bounds.{name}"),
                            format!("must be positive and finite, got {v}"),
                        ));
                    }
                }
            }
            Some(KinematicBounds {
                a_max: k.a_max,
                delta_max: k.delta_max,
            })
        }
        None => None,
    };
    let fuel_model = match &file.fuel_model {
        Some(f) => {
            let model = FuelModel {
                eta: f.eta,
                heating_value: f.heating_value,
                density: f.density,
            };
            crate::costs::fuel_power(0.0, 0.0, &model).map_err(|e| field_err("fuel_model", e))?;
            Some(model)
        }
        None => None,
    };
    let du = match &file.du {
        Some(d) => {
            let mut cfg = DuWeightConfig::new(d.a_max, d.v_max).map_err(|e| field_err("du", e))?;
            cfg.d_thresh = d.d_thresh.unwrap_or(cfg.d_thresh);
            cfg.theta_thresh = d.theta_thresh.unwrap_or(cfg.theta_thresh);
            cfg.w4 = d.w4.unwrap_or(cfg.w4);
            cfg.w5_0 = d.w5_0.unwrap_or(cfg.w5_0);
            cfg.w6_0 = d.w6_0.unwrap_or(cfg.w6_0);
            cfg.w7_0 = d.w7_0.unwrap_or(cfg.w7_0);
            cfg.validate().map_err(|e| field_err("du", e))?;
            Some(cfg)
        }
        None => None,
    };

    Ok(LoadedScenario {
        scenario,
        response_ratio,
        kinematic_bounds,
        fuel_model,
        du,
    })
}

pub fn load_scenario(path: &Path) -> CliResult<LoadedScenario> {
    let text = read_file(path)?;
    parse_scenario(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

// ------------------------------------------------------------- trajectories

pub const TRAJECTORY_COLUMNS: [&str; 11] = [
    "t", "x", "y", "v", "a", "a_tan", "jerk", "theta", "yaw_rate", "delta", "delta_rate",
];

/// A trajectory file: samples plus the optional traction-force column.
#[derive(Debug, Clone)]
pub struct LoadedTrajectory {
    pub trajectory: Trajectory,
    pub force: Option<Vec<f64>>,
}

/// Reads comma-separated samples with a header row. `t`, `x` and `y` are
/// required; any missing kinematic column is recomputed from the positions.
pub fn parse_trajectory(text: &str) -> std::result::Result<LoadedTrajectory, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let mut index = [None; 11];
    let mut force_col = None;
    for (col, name) in headers.iter().enumerate() {
        let slot = if name == "force" {
            &mut force_col
        } else {
            match TRAJECTORY_COLUMNS.iter().position(|c| *c == name) {
                Some(k) => &mut index[k],
                None => return Err(format!("unknown column '{name}'")),
            }
        };
        if slot.is_some() {
            return Err(format!("column '{name}' appears twice"));
        }
        *slot = Some(col);
    }
    for k in 0..3 {
        if index[k].is_none() {
            return Err(format!("missing required column '{}'", TRAJECTORY_COLUMNS[k]));
        }
    }

    let mut rows: Vec<[Option<f64>; 11]> = Vec::new();
    let mut force = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |col: usize, name: &str| -> std::result::Result<f64, String> {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| format!("line {line}, column '{name}': '{raw}' is not a number"))?;
            if !v.is_finite() {
                return Err(format!("line {line}, column '{name}': value is not finite"));
            }
            Ok(v)
        };
        let mut row = [None; 11];
        for (k, col) in index.iter().enumerate() {
            if let Some(col) = col {
                row[k] = Some(cell(*col, TRAJECTORY_COLUMNS[k])?);
            }
        }
        if let Some(col) = force_col {
            force.push(cell(col, "force")?);
        }
        rows.push(row);
    }

    let complete = index.iter().all(Option::is_some);
    let mut samples: Vec<StateSample> = if complete {
        vec![StateSample::default(); rows.len()]
    } else {
        let pts: Vec<TimedPoint> = rows
            .iter()
            .map(|r| TimedPoint::new(r[0].unwrap(), r[1].unwrap(), r[2].unwrap()))
            .collect();
        derive_kinematics(&pts).map_err(|e| e.to_string())?.samples().to_vec()
    };
    for (s, r) in samples.iter_mut().zip(&rows) {
        let fields: [&mut f64; 11] = [
            &mut s.t,
            &mut s.x,
            &mut s.y,
            &mut s.v,
            &mut s.a,
            &mut s.a_tan,
            &mut s.jerk,
            &mut s.theta,
            &mut s.yaw_rate,
            &mut s.delta,
            &mut s.delta_rate,
        ];
        for (f, v) in fields.into_iter().zip(r) {
            if let Some(v) = v {
                *f = *v;
            }
        }
    }
    let mut trajectory = Trajectory::new(samples).map_err(|e| e.to_string())?;
    if index[9].is_some() && index[10].is_none() {
        let delta: Vec<f64> = trajectory.samples().iter().map(|s| s.delta).collect();
        trajectory = trajectory.with_steering(&delta).map_err(|e| e.to_string())?;
    }
    Ok(LoadedTrajectory {
        trajectory,
        force: force_col.map(|_| force),
    })
}

pub fn load_trajectory(path: &Path) -> CliResult<LoadedTrajectory> {
    let text = read_file(path)?;
    parse_trajectory(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// All eleven columns, each value in shortest round-trip form.
pub fn format_trajectory(trajectory: &Trajectory) -> String {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for s in trajectory.samples() {
        let vals = [
            s.t, s.x, s.y, s.v, s.a, s.a_tan, s.jerk, s.theta, s.yaw_rate, s.delta, s.delta_rate,
        ];
        let row: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

// ----------------------------------------------------------------- parsing

fn parse_cost(text: &str) -> CliResult<CostFunction> {
    resolve_cost_expr(text).map_err(|e| CliError::Parse(format!("cost expression '{text}': {e}")))
}

fn parse_list(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(CliError::Usage(format!("--{flag} must not be empty")));
    }
    text.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--{flag}: '{p}' is not a finite number")))
        })
        .collect()
}

/// Parses "ID=w,ID=w,..." preserving order.
pub fn parse_weight_map(text: &str) -> CliResult<Vec<(CostId, f64)>> {
    if text.trim().is_empty() {
        return Err(CliError::Usage("--base-weights must not be empty".into()));
    }
    let mut out: Vec<(CostId, f64)> = Vec::new();
    for item in text.split(',') {
        let (id, w) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--base-weights: '{item}' is not ID=weight")))?;
        let id: CostId = id
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--base-weights: unknown identifier '{}'", id.trim())))?;
        let w: f64 = w
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("--base-weights: bad weight '{}'", w.trim())))?;
        if out.iter().any(|(other, _)| *other == id) {
            return Err(CliError::Usage(format!("--base-weights: {id} given twice")));
        }
        out.push((id, w));
    }
    Ok(out)
}

fn format_weight_map(weights: &[(CostId, f64)]) -> String {
    weights
        .iter()
        .map(|(id, w)| format!("{id}={w}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Candidate settings with `args` applied over `defaults`.
fn candidate_settings(
    args: &CandidateArgs,
    defaults: &CandidateConfig,
    start: CandidateStart,
) -> CliResult<(CandidateConfig, CandidateStart)> {
    let config = CandidateConfig {
        lateral_offsets: match &args.offsets {
            Some(text) => parse_list("offsets", text)?,
            None => defaults.lateral_offsets.clone(),
        },
        horizon: args.horizon.unwrap_or(defaults.horizon),
        speed: args.speed.unwrap_or(defaults.speed),
        sample_spacing: args.spacing.unwrap_or(defaults.sample_spacing),
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let start = CandidateStart {
        s: args.start_s.unwrap_or(start.s),
        d: args.start_d.unwrap_or(start.d),
        heading_error: args.heading_error.unwrap_or(start.heading_error),
        t: args.start_t.unwrap_or(start.t),
    };
    Ok((config, start))
}

// ----------------------------------------------------------------- reports

fn format_evaluation(cost: &CostFunction, eval: &Evaluation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "cost: {cost}");
    if let CostFunction::Named(n) = cost {
        let _ = writeln!(s, "expression: {}", n.spec);
    }
    let _ = writeln!(s, "total: {}", eval.total);
    for t in &eval.terms {
        let _ = writeln!(
            s,
            "term: {} weight={} value={} contribution={}",
            t.label, t.weight, t.value, t.contribution
        );
    }
    s
}

fn format_report(report: &FeasibilityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "feasible: {}", report.feasible());
    for v in &report.violations {
        let _ = writeln!(
            s,
            "violation: {} first_index={} magnitude={}",
            v.constraint, v.first_index, v.magnitude
        );
    }
    s
}

fn missing_check(objective: &dyn Objective, ctx: &EvaluationContext<'_>) -> CliResult<()> {
    let missing = objective.missing_requirements(ctx);
    if missing.is_empty() {
        return Ok(());
    }
    let text = missing
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    Err(CliError::MissingContext(format!("missing context: {text}")))
}

// ---------------------------------------------------------------- commands

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let cost = parse_cost(&args.cost)?;
    let loaded = load_scenario(&args.scenario)?;
    let traj = load_trajectory(&args.trajectory)?;
    let previous = match &args.previous {
        Some(p) => Some(load_trajectory(p)?.trajectory),
        None => None,
    };
    let mut ctx = loaded.context();
    if let Some(p) = &previous {
        ctx = ctx.with_previous(p);
    }
    if let Some(f) = &traj.force {
        ctx.traction_force = Some(f.clone());
    }
    missing_check(&cost, &ctx)?;
    let eval = cost
        .evaluate(&traj.trajectory, &ctx)
        .map_err(|e| CliError::from_lib("evaluation failed", e))?;
    let report = check_constraints(
        &traj.trajectory,
        &loaded.scenario,
        loaded.response_ratio.as_ref(),
        loaded.kinematic_bounds.as_ref(),
    );
    let mut text = format_evaluation(&cost, &eval);
    text.push_str(&format_report(&report));
    write_out(out, &text)
}

pub fn cmd_select(args: &SelectArgs, out: &mut dyn Write) -> CliResult<()> {
    let cost = parse_cost(&args.cost)?;
    let loaded = load_scenario(&args.scenario)?;
    if args.candidates.offsets.is_none() {
        return Err(CliError::Usage("--offsets is required".into()));
    }
    // Without flags: run to the end of the base path at the speed limit
    // (capped at 10 m/s) with 1 m sample spacing.
    let defaults = CandidateConfig {
        lateral_offsets: Vec::new(),
        horizon: loaded.scenario.frame().length() - args.candidates.start_s.unwrap_or(0.0),
        speed: loaded.scenario.speed_limit.min(10.0),
        sample_spacing: 1.0,
    };
    let (config, start) = candidate_settings(&args.candidates, &defaults, CandidateStart::default())?;
    let exec = exec_for(args.sequential);
    let candidates = generate_candidates_with(loaded.scenario.frame(), start, &config, exec)
        .map_err(|e| CliError::from_lib("candidate generation failed", e))?;
    let previous = match &args.previous {
        Some(p) => Some(load_trajectory(p)?.trajectory),
        None => None,
    };
    let mut ctx = loaded.context();
    if let Some(p) = &previous {
        ctx = ctx.with_previous(p);
    }
    missing_check(&cost, &ctx)?;
    let sel = select_best_with(&candidates, &cost, &ctx, &loaded.scenario, exec)
        .map_err(|e| CliError::from_lib("selection failed", e))?;
    let winner = &candidates[sel.index];
    fs::write(&args.out, format_trajectory(winner))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;

    let mut text = String::new();
    let _ = writeln!(text, "selected: {}", sel.index);
    let _ = writeln!(text, "offset: {}", config.lateral_offsets[sel.index]);
    let feasible = sel.reports.iter().filter(|r| r.feasible()).count();
    let _ = writeln!(text, "feasible_candidates: {feasible}/{}", candidates.len());
    text.push_str(&format_evaluation(&cost, &sel.evaluation));
    let _ = writeln!(text, "written: {}", args.out.display());
    write_out(out, &text)
}

struct ExperimentSource {
    label: String,
    experiment: Experiment,
}

fn experiment_from(scenario: Option<&Path>, cand: &CandidateArgs) -> CliResult<ExperimentSource> {
    let reference = reference_experiment();
    let (label, scenario) = match scenario {
        Some(p) => (p.display().to_string(), load_scenario(p)?.scenario),
        None => ("built-in reference".to_string(), reference.scenario.clone()),
    };
    let (candidates, start) = candidate_settings(cand, &reference.candidates, reference.start)?;
    Ok(ExperimentSource {
        label,
        experiment: Experiment {
            scenario,
            candidates,
            start,
            previous: None,
        },
    })
}

fn experiment_metadata(src: &ExperimentSource) -> String {
    let c = &src.experiment.candidates;
    let s = &src.experiment.start;
    let mut m = String::new();
    let _ = writeln!(m, "# scenario: {}", src.label);
    let _ = writeln!(m, "# offsets: {}", join_floats(&c.lateral_offsets));
    let _ = writeln!(
        m,
        "# candidates: horizon={} speed={} spacing={} start_s={} start_d={} heading_error={} start_t={}",
        c.horizon, c.speed, c.sample_spacing, s.s, s.d, s.heading_error, s.t
    );
    let _ = writeln!(m, "# previous trajectory: zero-offset candidate");
    let _ = writeln!(
        m,
        "# metrics: lane_center = integral of d^2 dt; obstacle_distance = smallest footprint clearance, capped at d_influence; obstacle_proximity = integral of the proximity penalty; speed = mean speed; curvature = max |kappa|"
    );
    m
}

fn metric_cells(m: &crate::harness::Metrics) -> String {
    format!(
        "{},{},{},{},{}",
        m.lane_center, m.obstacle_clearance, m.obstacle_proximity, m.speed, m.curvature
    )
}

/// Deterministic metric table: metadata comment block, header, one row per
/// grid value.
pub fn format_sweep_table(
    source_meta: &str,
    base: &[(CostId, f64)],
    swept: CostId,
    grid: &[f64],
    rows: &[MetricRow],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# trajcost sweep");
    s.push_str(source_meta);
    let _ = writeln!(s, "# base_weights: {}", format_weight_map(base));
    let _ = writeln!(s, "# swept: {swept}");
    let _ = writeln!(s, "# grid: {}", join_floats(grid));
    let _ = writeln!(
        s,
        "swept_value,feasible,selected,total_cost,lane_center,obstacle_distance,obstacle_proximity,speed,curvature"
    );
    for r in rows {
        match (&r.selected, &r.total_cost, &r.metrics) {
            (Some(i), Some(c), Some(m)) => {
                let _ = writeln!(s, "{},true,{i},{c},{}", r.swept_value, metric_cells(m));
            }
            _ => {
                let _ = writeln!(s, "{},false,,,,,,,", r.swept_value);
            }
        }
    }
    s
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let base = match &args.base_weights {
        Some(text) => parse_weight_map(text)?,
        None => BASE_WEIGHTS.to_vec(),
    };
    let swept: CostId = args
        .swept
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--swept: unknown identifier '{}'", args.swept)))?;
    if !base.iter().any(|(id, _)| *id == swept) {
        return Err(CliError::Usage(format!(
            "swept id {swept} is not among the base weights ({})",
            format_weight_map(&base)
        )));
    }
    let grid = match &args.grid {
        Some(text) => parse_list("grid", text)?,
        None => default_grid(),
    };
    let src = experiment_from(args.scenario.as_deref(), &args.candidates)?;
    let cfg = SweepConfig {
        base_weights: base.clone(),
        swept_id: swept,
        grid: grid.clone(),
        experiment: src.experiment.clone(),
    };
    let rows = run_sweep_with(&cfg, exec_for(args.sequential)).map_err(|e| CliError::from_lib("sweep failed", e))?;
    let table = format_sweep_table(&experiment_metadata(&src), &base, swept, &grid, &rows);
    write_file_or(args.out.as_deref(), out, &table)
}

fn parse_weight_set(text: &str) -> CliResult<(WeightSet, String)> {
    let (label, expr) = match text.split_once('=') {
        Some((l, e)) => (l.trim().to_string(), e.trim()),
        None => (text.trim().to_string(), text.trim()),
    };
    let cost = parse_cost(expr)?;
    if let CostFunction::Named(n) = &cost {
        if n.conditional_weights {
            return Err(CliError::Usage(format!(
                "@{} has state-dependent weights and cannot be ranked as a weight set",
                n.name
            )));
        }
    }
    let spec: CostSpec = cost.linear_spec().clone();
    Ok((WeightSet { label, spec: spec.clone() }, spec.to_string()))
}

pub fn format_ranking(source_meta: &str, ranking: &Ranking, exprs: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# trajcost rank");
    s.push_str(source_meta);
    let _ = writeln!(s, "# scoring: {}", Ranking::SCORING);
    let names: Vec<&str> = ranking.metrics.iter().map(|m| m.name()).collect();
    let _ = writeln!(s, "# ranking metrics: {}", names.join(","));
    let mut header = String::from("rank,label,expression,input_index,score,selected");
    for n in &names {
        let _ = write!(header, ",{n},{n}_normalized");
    }
    let _ = writeln!(s, "{header}");
    for (rank, e) in ranking.entries.iter().enumerate() {
        let mut row = format!(
            "{},{},{},{},{},{}",
            rank + 1,
            csv_field(&e.label),
            csv_field(&exprs[e.input_index]),
            e.input_index,
            e.score,
            e.selected.map(|i| i.to_string()).unwrap_or_default()
        );
        for (k, m) in ranking.metrics.iter().enumerate() {
            match &e.metrics {
                Some(metrics) => {
                    let _ = write!(row, ",{},{}", m.of(metrics), e.normalized[k]);
                }
                None => row.push_str(",,"),
            }
        }
        let _ = writeln!(s, "{row}");
    }
    s
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn cmd_rank(args: &RankArgs, out: &mut dyn Write) -> CliResult<()> {
    let raw: Vec<String> = if args.sets.is_empty() {
        vec!["@RA1".into(), "@RA2".into(), "@KC1".into()]
    } else {
        args.sets.clone()
    };
    let (sets, exprs): (Vec<WeightSet>, Vec<String>) = raw
        .iter()
        .map(|t| parse_weight_set(t))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .unzip();
    let metrics: Vec<MetricKind> = match &args.metrics {
        Some(text) => text
            .split(',')
            .map(|m| m.trim().parse().map_err(|e: Error| CliError::Usage(e.to_string())))
            .collect::<CliResult<_>>()?,
        None => MetricKind::DEFAULT_RANKING.to_vec(),
    };
    let src = experiment_from(args.scenario.as_deref(), &args.candidates)?;
    let ranking = rank_weight_sets_with(&sets, &metrics, &src.experiment, exec_for(args.sequential))
        .map_err(|e| CliError::from_lib("ranking failed", e))?;
    let text = format_ranking(&experiment_metadata(&src), &ranking, &exprs);
    write_file_or(args.out.as_deref(), out, &text)
}

pub fn cmd_catalog(out: &mut dyn Write) -> CliResult<()> {
    let mut s = String::from("name,expression,conditional_weights,description\n");
    for n in catalog() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            n.name,
            csv_field(&n.spec.to_string()),
            n.conditional_weights,
            csv_field(n.description)
        );
    }
    write_out(out, &s)
}

/// Entry point of the binary.
pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = r#"
speed_limit = 15.0

[base_path]
vertices = [[0.0, 0.0], [100.0, 0.0]]

[obstacles]
d_influence = 3.0

[[obstacles.shapes]]
type = "disc"
center = [50.0, 1.5]
radius = 0.6

[goal]
type = "polygon"
vertices = [[55.0, -4.0], [65.0, -4.0], [65.0, 4.0], [55.0, 4.0]]
"#;

    #[test]
    fn scenario_parses() {
        let s = parse_scenario(SCENARIO).unwrap();
        assert_eq!(s.scenario.obstacles.shapes.len(), 1);
        assert!(s.scenario.leading_vehicle.is_none());
    }

    #[test]
    fn scenario_errors_name_the_field() {
        let bad = SCENARIO.replace("radius = 0.6", "radius = -1.0");
        let e = parse_scenario(&bad).unwrap_err();
        assert!(e.contains("obstacles.shapes[0]"), "{e}");
        let typo = SCENARIO.replace("speed_limit", "speedlimit");
        let e = parse_scenario(&typo).unwrap_err();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn trajectory_csv_round_trips() {
        let pts: Vec<TimedPoint> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.1;
                TimedPoint::new(t, 3.0 * t, 0.1 * t * t)
            })
            .collect();
        let traj = derive_kinematics(&pts).unwrap();
        let back = parse_trajectory(&format_trajectory(&traj)).unwrap();
        assert_eq!(back.trajectory, traj);
        assert!(back.force.is_none());
    }

    #[test]
    fn minimal_trajectory_derives_kinematics() {
        let text = "t,x,y\n0,0,0\n1,1,0\n2,2,0\n3,3,0\n";
        let t = parse_trajectory(text).unwrap().trajectory;
        assert!((t.samples()[1].v - 1.0).abs() < 1e-12);
        let e = parse_trajectory("t,x\n0,0\n").unwrap_err();
        assert!(e.contains("'y'"), "{e}");
        let e = parse_trajectory("t,x,y\n0,0,0\n1,abc,0\n").unwrap_err();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn weight_map_keeps_order() {
        let w = parse_weight_map("LC=0.17,D=0.2,C=0.02,L=0.7,K=0.01").unwrap();
        assert_eq!(w, BASE_WEIGHTS.to_vec());
        assert!(parse_weight_map("LC=1,LC=2").is_err());
        assert!(parse_weight_map("Q=1").is_err());
    }
}

//! Weight-sensitivity experiments: sweep one weight over a grid while the
//! others hold their base values, and rank whole weight sets by the metrics
//! of the trajectory each one selects.

use std::fmt;
use std::str::FromStr;

use crate::costs::{
    max_curvature_cost, obstacle_proximity, running_cost, CostId, EvaluationContext, ObstacleSet,
};
use crate::dsl::{CostSpec, Objective};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frenet::{generate_candidates_with, CandidateConfig, CandidateStart};
use crate::geometry::{Point2, Shape};
use crate::scenario::{GoalRegion, Profile, Scenario};
use crate::selection::select_best_with;
use crate::trajectory::{BasePath, Trajectory};

/// Base configuration of the local-planner weights:
/// lane offset 0.17, obstacles 0.2, consistency 0.02, path length 0.7,
/// curvature 0.01.
pub const BASE_WEIGHTS: [(CostId, f64); 5] = [
    (CostId::LC, 0.17),
    (CostId::D, 0.2),
    (CostId::C, 0.02),
    (CostId::L, 0.7),
    (CostId::Kappa, 0.01),
];

/// Eleven points from 0 to 1 in steps of 0.1.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Fixed scenario and candidate family shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    pub candidates: CandidateConfig,
    pub start: CandidateStart,
    /// Trajectory chosen in the previous planning cycle. When absent, the
    /// zero-offset candidate stands in for it.
    pub previous: Option<Trajectory>,
}

impl Experiment {
    fn generate(&self, exec: Execution) -> Result<(Vec<Trajectory>, Trajectory)> {
        let candidates = generate_candidates_with(self.scenario.frame(), self.start, &self.candidates, exec)?;
        let previous = match &self.previous {
            Some(p) => p.clone(),
            None => {
                let center = CandidateConfig {
                    lateral_offsets: vec![0.0],
                    ..self.candidates.clone()
                };
                generate_candidates_with(self.scenario.frame(), self.start, &center, Execution::Sequential)?
                    .remove(0)
            }
        };
        Ok((candidates, previous))
    }
}

/// Desk-scale stand-in for a closed-course test: a straight 100 m base path
/// with one disc obstacle 1.5 m left of the path at s = 50 m, speed limit
/// 15 m/s. Candidates start on the path at s = 30 m, run 30 m at 10 m/s and
/// must end in a goal box around s = 60 m. Lateral offsets span ±3 m in
/// 0.1 m steps.
pub fn reference_experiment() -> Experiment {
    let path = BasePath::new(vec![Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)])
        .expect("static path");
    let obstacle = Shape::disc(Point2::new(50.0, 1.5), 0.6).expect("static obstacle");
    let goal = GoalRegion {
        shape: Shape::polygon(vec![
            Point2::new(55.0, -4.0),
            Point2::new(65.0, -4.0),
            Point2::new(65.0, 4.0),
            Point2::new(55.0, 4.0),
        ])
        .expect("static goal"),
        time_window: None,
    };
    let scenario = Scenario::new(
        path,
        ObstacleSet::new(vec![obstacle], REFERENCE_INFLUENCE).expect("static obstacles"),
        15.0,
        goal,
    )
    .expect("static scenario")
    .with_v_des(Profile::constant(10.0).expect("finite"))
    .with_theta_des(Profile::constant(0.0).expect("finite"));
    Experiment {
        scenario,
        candidates: CandidateConfig {
            lateral_offsets: (-30..=30).map(|i| i as f64 / 10.0).collect(),
            horizon: 30.0,
            speed: 10.0,
            sample_spacing: 1.0,
        },
        start: CandidateStart {
            s: 30.0,
            ..CandidateStart::default()
        },
        previous: None,
    }
}

const REFERENCE_INFLUENCE: f64 = 3.0;

/// Unweighted quality measures of a selected trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// J_LC.
    pub lane_center: f64,
    /// J_D.
    pub obstacle_proximity: f64,
    /// Smallest footprint clearance to any obstacle, saturating at the
    /// influence radius.
    pub obstacle_clearance: f64,
    /// Mean speed, J_L / (t_f − t₀).
    pub speed: f64,
    /// J_κ.
    pub curvature: f64,
}

pub fn compute_metrics(trajectory: &Trajectory, scenario: &Scenario) -> Result<Metrics> {
    let ctx = EvaluationContext::new(scenario);
    let obstacles = &scenario.obstacles;
    let clearance = trajectory
        .samples()
        .iter()
        .map(|s| obstacles.min_distance(s.position()) - scenario.ego_radius)
        .fold(f64::INFINITY, f64::min)
        .min(obstacles.d_influence);
    let duration = trajectory.final_time() - trajectory.start_time();
    Ok(Metrics {
        lane_center: running_cost(CostId::LC, trajectory, &ctx)?,
        obstacle_proximity: obstacle_proximity(trajectory, obstacles),
        obstacle_clearance: clearance,
        speed: running_cost(CostId::L, trajectory, &ctx)? / duration,
        curvature: max_curvature_cost(trajectory)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    LaneCenter,
    ObstacleDistance,
    ObstacleProximity,
    Speed,
    Curvature,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::LaneCenter,
        MetricKind::ObstacleDistance,
        MetricKind::ObstacleProximity,
        MetricKind::Speed,
        MetricKind::Curvature,
    ];

    /// Lane offset, obstacle distance, speed and curvature.
    pub const DEFAULT_RANKING: [MetricKind; 4] = [
        MetricKind::LaneCenter,
        MetricKind::ObstacleDistance,
        MetricKind::Speed,
        MetricKind::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::LaneCenter => "lane_center",
            MetricKind::ObstacleDistance => "obstacle_distance",
            MetricKind::ObstacleProximity => "obstacle_proximity",
            MetricKind::Speed => "speed",
            MetricKind::Curvature => "curvature",
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, MetricKind::ObstacleDistance | MetricKind::Speed)
    }

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            MetricKind::LaneCenter => m.lane_center,
            MetricKind::ObstacleDistance => m.obstacle_clearance,
            MetricKind::ObstacleProximity => m.obstacle_proximity,
            MetricKind::Speed => m.speed,
            MetricKind::Curvature => m.curvature,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Ordered weight map; identifiers must be unique.
    pub base_weights: Vec<(CostId, f64)>,
    pub swept_id: CostId,
    pub grid: Vec<f64>,
    pub experiment: Experiment,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, (id, w)) in self.base_weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidConfig(format!("base weight of {id} not finite")));
            }
            if self.base_weights[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::InvalidConfig(format!("{id} appears twice in base weights")));
            }
        }
        if !self.base_weights.iter().any(|(id, _)| *id == self.swept_id) {
            return Err(Error::InvalidConfig(format!(
                "swept id {} is not among the base weights",
                self.swept_id
            )));
        }
        if self.grid.is_empty() || self.grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidConfig("grid must be non-empty and finite".into()));
        }
        self.experiment.candidates.validate()
    }

    pub fn spec_for(&self, swept_value: f64) -> Result<CostSpec> {
        let pairs: Vec<(CostId, f64)> = self
            .base_weights
            .iter()
            .map(|&(id, w)| (id, if id == self.swept_id { swept_value } else { w }))
            .collect();
        CostSpec::from_pairs(&pairs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub swept_value: f64,
    /// `None` when no candidate was feasible at this grid point.
    pub selected: Option<usize>,
    pub total_cost: Option<f64>,
    pub metrics: Option<Metrics>,
}

impl MetricRow {
    pub fn feasible(&self) -> bool {
        self.selected.is_some()
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<MetricRow>> {
    run_sweep_with(cfg, Execution::default())
}

/// Grid points run under `exec`; rows always come back in grid order.
pub fn run_sweep_with(cfg: &SweepConfig, exec: Execution) -> Result<Vec<MetricRow>> {
    cfg.validate()?;
    let exp = &cfg.experiment;
    let (candidates, previous) = exp.generate(exec)?;
    let ctx = EvaluationContext::new(&exp.scenario).with_previous(&previous);
    let rows = exec.map(&cfg.grid, |_, &value| -> Result<MetricRow> {
        let spec = cfg.spec_for(value)?;
        select_row(value, &candidates, &spec, &ctx, &exp.scenario)
    });
    rows.into_iter().collect()
}

fn select_row(
    value: f64,
    candidates: &[Trajectory],
    objective: &dyn Objective,
    ctx: &EvaluationContext<'_>,
    scenario: &Scenario,
) -> Result<MetricRow> {
    match select_best_with(candidates, objective, ctx, scenario, Execution::Sequential) {
        Ok(sel) => Ok(MetricRow {
            swept_value: value,
            selected: Some(sel.index),
            total_cost: Some(sel.total),
            metrics: Some(compute_metrics(&candidates[sel.index], scenario)?),
        }),
        Err(Error::NoFeasibleCandidate(_)) => Ok(MetricRow {
            swept_value: value,
            selected: None,
            total_cost: None,
            metrics: None,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub label: String,
    pub spec: CostSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub input_index: usize,
    pub label: String,
    pub selected: Option<usize>,
    /// Mean of the normalized metrics; `∞` when nothing was feasible.
    pub score: f64,
    pub metrics: Option<Metrics>,
    /// Normalized value per ranking metric, 0 best and 1 worst.
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub metrics: Vec<MetricKind>,
    pub entries: Vec<RankEntry>,
}

impl Ranking {
    pub const SCORING: &'static str = "equally weighted mean of per-metric min-max normalized values across the sets; obstacle_distance and speed inverted so larger is better; lower score ranks first; ties keep input order";
}

pub fn rank_weight_sets(sets: &[WeightSet], metric_ids: &[MetricKind], experiment: &Experiment) -> Result<Ranking> {
    rank_weight_sets_with(sets, metric_ids, experiment, Execution::default())
}

pub fn rank_weight_sets_with(
    sets: &[WeightSet],
    metric_ids: &[MetricKind],
    experiment: &Experiment,
    exec: Execution,
) -> Result<Ranking> {
    if sets.is_empty() {
        return Err(Error::InvalidConfig("no weight sets to rank".into()));
    }
    if metric_ids.is_empty() {
        return Err(Error::InvalidConfig("no ranking metrics".into()));
    }
    let (candidates, previous) = experiment.generate(exec)?;
    let ctx = EvaluationContext::new(&experiment.scenario).with_previous(&previous);
    let rows = exec
        .map(sets, |_, set| select_row(0.0, &candidates, &set.spec, &ctx, &experiment.scenario))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let bounds: Vec<(f64, f64)> = metric_ids
        .iter()
        .map(|k| {
            rows.iter()
                .filter_map(|r| r.metrics.as_ref().map(|m| k.of(m)))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        })
        .collect();

    let mut entries: Vec<RankEntry> = rows
        .iter()
        .zip(sets)
        .enumerate()
        .map(|(i, (row, set))| {
            let (score, normalized) = match &row.metrics {
                None => (f64::INFINITY, Vec::new()),
                Some(m) => {
                    let normalized: Vec<f64> = metric_ids
                        .iter()
                        .zip(&bounds)
                        .map(|(k, &(lo, hi))| {
                            let span = hi - lo;
                            if !(span > 0.0) {
                                return 0.0;
                            }
                            let v = k.of(m);
                            if k.higher_is_better() {
                                (hi - v) / span
                            } else {
                                (v - lo) / span
                            }
                        })
                        .collect();
                    let score = normalized.iter().sum::<f64>() / normalized.len() as f64;
                    (score, normalized)
                }
            };
            RankEntry {
                input_index: i,
                label: set.label.clone(),
                selected: row.selected,
                score,
                metrics: row.metrics,
                normalized,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.score.total_cmp(&b.score));
    Ok(Ranking {
        metrics: metric_ids.to_vec(),
        entries,
    })
}

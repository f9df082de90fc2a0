//! Hard-constraint checking and argmin selection over candidate trajectories.

use crate::costs::{EvaluationContext, LeadingVehicleContext};
use crate::dsl::{Evaluation, Objective};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::scenario::{KinematicBounds, ResponseRatioConfig, Scenario};
use crate::trajectory::Trajectory;

/// One violated constraint: where it is first violated and by how much at
/// worst.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: &'static str,
    pub first_index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, constraint: &str) -> Option<&Violation> {
        self.violations.iter().find(|v| v.constraint == constraint)
    }
}

/// Folds per-sample excess values (positive = violated) into a violation.
fn scan(constraint: &'static str, excess: impl Iterator<Item = f64>) -> Option<Violation> {
    let mut found: Option<Violation> = None;
    for (i, e) in excess.enumerate() {
        if e > 0.0 {
            match &mut found {
                None => {
                    found = Some(Violation {
                        constraint,
                        first_index: i,
                        magnitude: e,
                    })
                }
                Some(v) => v.magnitude = v.magnitude.max(e),
            }
        }
    }
    found
}

/// Checks, in order: collision, speed limit, goal membership (and time
/// window), response-ratio clearance, kinematic bounds and the leading
/// vehicle's stopping margin.
///
/// Collision uses a disc footprint of `scenario.ego_radius`; a sample
/// collides when its clearance is not strictly positive, and the magnitude
/// is the penetration depth. Kinematic bounds approximate dynamic
/// feasibility; no vehicle model is integrated.
pub fn check_constraints(
    trajectory: &Trajectory,
    scenario: &Scenario,
    rc: Option<&ResponseRatioConfig>,
    bounds: Option<&KinematicBounds>,
) -> FeasibilityReport {
    let samples = trajectory.samples();
    let obstacles = &scenario.obstacles;
    let clearance: Vec<f64> = samples
        .iter()
        .map(|s| obstacles.min_distance(s.position()) - scenario.ego_radius)
        .collect();
    let mut violations = Vec::new();

    if !obstacles.shapes.is_empty() {
        // Touching (zero clearance) counts as a collision of depth zero.
        let first = clearance.iter().position(|&c| c <= 0.0);
        if let Some(first_index) = first {
            let magnitude = clearance.iter().map(|&c| -c).fold(0.0, f64::max);
            violations.push(Violation {
                constraint: "collision",
                first_index,
                magnitude,
            });
        }
    }
    violations.extend(scan(
        "speed_limit",
        samples.iter().map(|s| s.v - scenario.speed_limit),
    ));

    let last = trajectory.last();
    let goal = &scenario.goal;
    if !goal.shape.contains(last.position()) {
        violations.push(Violation {
            constraint: "goal",
            first_index: samples.len() - 1,
            magnitude: goal.shape.distance(last.position()),
        });
    }
    if let Some((lo, hi)) = goal.time_window {
        if last.t < lo || last.t > hi {
            violations.push(Violation {
                constraint: "goal_time",
                first_index: samples.len() - 1,
                magnitude: (lo - last.t).max(last.t - hi),
            });
        }
    }

    if let Some(rc) = rc {
        if !obstacles.shapes.is_empty() {
            violations.extend(scan(
                "response_ratio",
                samples
                    .iter()
                    .zip(&clearance)
                    .map(|(s, &c)| rc.required_clearance(s.v) - c),
            ));
        }
    }

    if let Some(b) = bounds {
        if let Some(a_max) = b.a_max {
            violations.extend(scan("acceleration", samples.iter().map(|s| s.a.abs() - a_max)));
        }
        if let Some(delta_max) = b.delta_max {
            violations.extend(scan(
                "steering_angle",
                samples.iter().map(|s| s.delta.abs() - delta_max),
            ));
        }
    }

    // Regions a piecewise cost would price at infinity: the ego cannot stop
    // behind the leader.
    if scenario.leading_vehicle.is_some() {
        match LeadingVehicleContext::from_scenario(scenario, trajectory) {
            Ok(lv) => violations.extend(scan(
                "brake_distance",
                samples.iter().enumerate().map(|(i, s)| -lv.brake_margin(i, s.v)),
            )),
            Err(_) => violations.push(Violation {
                constraint: "leading_vehicle_projection",
                first_index: 0,
                magnitude: f64::INFINITY,
            }),
        }
    }

    FeasibilityReport { violations }
}

/// The winning candidate and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub total: f64,
    pub evaluation: Evaluation,
    pub reports: Vec<FeasibilityReport>,
}

pub fn select_best<O: Objective + ?Sized>(
    candidates: &[Trajectory],
    objective: &O,
    ctx: &EvaluationContext<'_>,
    scenario: &Scenario,
) -> Result<Selection> {
    select_best_with(candidates, objective, ctx, scenario, Execution::default())
}

/// Evaluates every feasible candidate and returns the cheapest. Ties go to
/// the lowest index, independent of the execution strategy.
pub fn select_best_with<O: Objective + ?Sized>(
    candidates: &[Trajectory],
    objective: &O,
    ctx: &EvaluationContext<'_>,
    scenario: &Scenario,
    exec: Execution,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidates to select from".into()));
    }
    let missing = objective.missing_requirements(ctx);
    if !missing.is_empty() {
        return Err(Error::MissingContext(missing));
    }
    let scored = exec.map(candidates, |_, traj| {
        let report = check_constraints(
            traj,
            scenario,
            ctx.response_config.as_ref(),
            ctx.kinematic_bounds.as_ref(),
        );
        let evaluation = if report.feasible() {
            Some(objective.evaluate(traj, ctx))
        } else {
            None
        };
        (report, evaluation)
    });

    let mut best: Option<(usize, Evaluation)> = None;
    let mut reports = Vec::with_capacity(scored.len());
    for (i, (report, evaluation)) in scored.into_iter().enumerate() {
        reports.push(report);
        let Some(evaluation) = evaluation else {
            continue;
        };
        let evaluation = evaluation?;
        if evaluation.total.is_nan() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => evaluation.total < b.total,
        };
        if better {
            best = Some((i, evaluation));
        }
    }
    match best {
        Some((index, evaluation)) => Ok(Selection {
            index,
            total: evaluation.total,
            evaluation,
            reports,
        }),
        None => Err(Error::NoFeasibleCandidate(reports)),
    }
}

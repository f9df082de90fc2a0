//! Named cost functions from the literature, including the state-dependent
//! weights of the XD1 function.

use std::fmt;

use crate::costs::{lane_coordinates, CostId, EvaluationContext};
use crate::dsl::{evaluate, parse_cost_expr, CostSpec, Evaluation, Objective, TermValue};
use crate::error::{Error, Requirement, Result};
use crate::trajectory::{normalize_angle, StateSample, Trajectory};

/// Thresholds and base weights of the XD1 conditional weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuWeightConfig {
    pub a_max: f64,
    pub d_thresh: f64,
    pub theta_thresh: f64,
    pub v_max: f64,
    pub w4: f64,
    pub w5_0: f64,
    pub w6_0: f64,
    pub w7_0: f64,
}

impl DuWeightConfig {
    pub const D_THRESH: f64 = 0.3;
    pub const THETA_THRESH: f64 = 0.09;

    /// Published thresholds and unit weights. `a_max` has no published
    /// value and must be supplied.
    pub fn new(a_max: f64, v_max: f64) -> Result<Self> {
        let cfg = Self {
            a_max,
            d_thresh: Self::D_THRESH,
            theta_thresh: Self::THETA_THRESH,
            v_max,
            w4: 1.0,
            w5_0: 1.0,
            w6_0: 1.0,
            w7_0: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_max > 0.0 && self.d_thresh > 0.0 && self.theta_thresh > 0.0) {
            return Err(Error::InvalidConfig(
                "Du thresholds must be positive".into(),
            ));
        }
        let all = [
            self.a_max,
            self.d_thresh,
            self.theta_thresh,
            self.v_max,
            self.w4,
            self.w5_0,
            self.w6_0,
            self.w7_0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("Du config value not finite".into()));
        }
        Ok(())
    }
}

/// `(a_tan > 0) ∧ ((a > a_max) ∨ (d > d_thresh) ∨ (θ_err > θ_thresh))`.
pub fn du_condition1(sample: &StateSample, d: f64, theta_err: f64, cfg: &DuWeightConfig) -> bool {
    sample.a_tan > 0.0
        && (sample.a > cfg.a_max || d > cfg.d_thresh || theta_err > cfg.theta_thresh)
}

/// State-dependent weights at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xd1Weights {
    pub condition1: bool,
    pub w5: f64,
    pub w6: f64,
    pub w7: f64,
}

/// Per-sample conditional weights. Lane and heading offsets enter the
/// condition as magnitudes.
pub fn xd1_weights(
    trajectory: &Trajectory,
    ctx: &EvaluationContext<'_>,
    cfg: &DuWeightConfig,
) -> Result<Vec<Xd1Weights>> {
    cfg.validate()?;
    let theta_des = ctx
        .scenario
        .theta_des
        .as_ref()
        .ok_or(Error::missing(CostId::O, "a desired-heading profile"))?;
    let lane = lane_coordinates(trajectory, ctx.scenario.frame())?;
    Ok(trajectory
        .samples()
        .iter()
        .zip(&lane)
        .map(|(s, f)| {
            let theta_err = normalize_angle(theta_des.at(f.s) - s.theta).abs();
            let condition1 = du_condition1(s, f.d.abs(), theta_err, cfg);
            Xd1Weights {
                condition1,
                w5: if s.a > cfg.a_max { cfg.w5_0 } else { 0.0 },
                w6: if condition1 { cfg.w6_0 } else { 0.0 },
                w7: if condition1 { 0.0 } else { cfg.w7_0 },
            }
        })
        .collect())
}

/// Linear part via `linear`, plus the three integrals with time-varying
/// weights:
/// `∫ w₅(t)a²`, `∫ w₄a_tan² + w₆(t)sgn(a_tan)a_tan²` and `∫ w₇(t)(v_max − v)²`.
pub fn evaluate_xd1(
    trajectory: &Trajectory,
    ctx: &EvaluationContext<'_>,
    cfg: &DuWeightConfig,
    linear: &CostSpec,
) -> Result<Evaluation> {
    let weights = xd1_weights(trajectory, ctx, cfg)?;
    let mut terms = evaluate(linear, trajectory, ctx)?.terms;
    let accel = trajectory.integrate(|i, s| weights[i].w5 * s.a * s.a);
    let forward = trajectory.integrate(|i, s| {
        let sq = s.a_tan * s.a_tan;
        cfg.w4 * sq + weights[i].w6 * s.a_tan.signum() * sq
    });
    let cruise = trajectory.integrate(|i, s| {
        let e = cfg.v_max - s.v;
        weights[i].w7 * e * e
    });
    for (label, value) in [
        ("w5(t)*A", accel),
        ("w4*a_tan^2+w6(t)*sgn(a_tan)*a_tan^2", forward),
        ("w7(t)*(v_max-v)^2", cruise),
    ] {
        terms.push(TermValue {
            label: label.to_string(),
            id: None,
            weight: 1.0,
            value,
            contribution: value,
        });
    }
    Ok(Evaluation::from_terms(terms))
}

/// A literature cost function under its catalog name.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCost {
    pub name: &'static str,
    pub description: &'static str,
    /// The linear part; for every entry except XD1 this is the whole function.
    pub spec: CostSpec,
    /// Whether the XD1 conditional-weight integrals are added.
    pub conditional_weights: bool,
}

pub const CATALOG_NAMES: [&str; 6] = ["FM1", "XD1", "JW1", "RA1", "RA2", "KC1"];

/// FM1 with its two jerk/energy weights kept separate; the published form
/// reuses one symbol for both.
pub fn fm1_spec(w_accel: f64, w_jerk: f64, w_energy: f64) -> Result<CostSpec> {
    CostSpec::from_pairs(&[(CostId::A, w_accel), (CostId::J, w_jerk), (CostId::E, w_energy)])
}

fn spec(pairs: &[(CostId, f64)]) -> CostSpec {
    CostSpec::from_pairs(pairs).expect("catalog weights are finite and non-empty")
}

pub fn catalog_lookup(name: &str) -> Result<NamedCost> {
    use CostId::*;
    let (name, description, spec, conditional_weights) = match name {
        "FM1" => (
            "FM1",
            "fuel and comfort: acceleration, jerk, energy (no published weights; unit defaults)",
            fm1_spec(1.0, 1.0, 1.0)?,
            false,
        ),
        "XD1" => (
            "XD1",
            "tracking, steering rate and conditionally weighted acceleration (requires Du config)",
            spec(&[(LC, 1.0), (O, 1.0), (SR, 1.0)]),
            true,
        ),
        "JW1" => (
            "JW1",
            "distance keeping: gap, acceleration, brake distance, obstacles",
            spec(&[(LV, 50.0), (A, 10.0), (BD, 30.0), (D, 20.0)]),
            false,
        ),
        "RA1" => (
            "RA1",
            "local planner weights ranked best on obstacle distance and lane offset",
            spec(&[(D, 0.2), (L, 0.2), (LC, 0.17), (Kappa, 0.01), (C, 0.02)]),
            false,
        ),
        "RA2" => (
            "RA2",
            "local planner weights ranked best on obstacles, lane offset, speed and curvature",
            spec(&[(D, 0.1), (L, 0.7), (LC, 0.17), (Kappa, 0.01), (C, 0.02)]),
            false,
        ),
        "KC1" => (
            "KC1",
            "obstacles, curvature and consistency",
            spec(&[(D, 0.1), (Kappa, 0.01), (C, 0.02)]),
            false,
        ),
        other => return Err(Error::Lookup(other.to_string())),
    };
    Ok(NamedCost {
        name,
        description,
        spec,
        conditional_weights,
    })
}

pub fn catalog() -> Vec<NamedCost> {
    CATALOG_NAMES
        .iter()
        .map(|n| catalog_lookup(n).expect("catalog names resolve"))
        .collect()
}

impl Objective for NamedCost {
    fn evaluate(&self, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<Evaluation> {
        if !self.conditional_weights {
            return evaluate(&self.spec, trajectory, ctx);
        }
        let missing = Objective::missing_requirements(self, ctx);
        if !missing.is_empty() {
            return Err(Error::MissingContext(missing));
        }
        let cfg = ctx.du_config.as_ref().expect("checked above");
        evaluate_xd1(trajectory, ctx, cfg, &self.spec)
    }

    fn missing_requirements(&self, ctx: &EvaluationContext<'_>) -> Vec<Requirement> {
        let mut missing = self.spec.missing_requirements(ctx);
        if self.conditional_weights && ctx.du_config.is_none() {
            missing.push(Requirement {
                partial: CostId::A,
                needs: "a Du weight config for the conditional weights",
            });
        }
        missing
    }
}

/// A cost expression as accepted on the command line: either the bracket
/// syntax or `@NAME` for a catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFunction {
    Spec(CostSpec),
    Named(NamedCost),
}

pub fn resolve_cost_expr(text: &str) -> Result<CostFunction> {
    match text.trim().strip_prefix('@') {
        Some(name) => catalog_lookup(name).map(CostFunction::Named),
        None => parse_cost_expr(text).map(CostFunction::Spec),
    }
}

impl CostFunction {
    pub fn linear_spec(&self) -> &CostSpec {
        match self {
            CostFunction::Spec(s) => s,
            CostFunction::Named(n) => &n.spec,
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Spec(s) => write!(f, "{s}"),
            CostFunction::Named(n) => write!(f, "@{}", n.name),
        }
    }
}

impl Objective for CostFunction {
    fn evaluate(&self, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<Evaluation> {
        match self {
            CostFunction::Spec(s) => Objective::evaluate(s, trajectory, ctx),
            CostFunction::Named(n) => n.evaluate(trajectory, ctx),
        }
    }

    fn missing_requirements(&self, ctx: &EvaluationContext<'_>) -> Vec<Requirement> {
        match self {
            CostFunction::Spec(s) => Objective::missing_requirements(s, ctx),
            CostFunction::Named(n) => Objective::missing_requirements(n, ctx),
        }
    }
}

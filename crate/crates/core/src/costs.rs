//! Partial cost functions.
//!
//! Running costs are trapezoidal integrals over the trajectory's own
//! timestamps; terminal costs read the final sample. None of the partials
//! applies a weight: weighting happens only when partials are composed.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use crate::catalog::DuWeightConfig;
use crate::error::{Error, Result};
use crate::frenet::{FrenetFrame, FrenetPoint};
use crate::geometry::{Point2, Shape};
use crate::scenario::{interpolate, KinematicBounds, ResponseRatioConfig, Scenario};
use crate::trajectory::{normalize_angle, pointwise_curvature, Trajectory};

/// Identifier of a partial cost function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CostId {
    /// ∫ a² dt
    A,
    /// ∫ ȧ² dt
    J,
    /// ∫ δ² dt
    SA,
    /// ∫ δ̇² dt
    SR,
    /// ∫ P² dt
    E,
    /// ∫ ψ̇² dt
    Y,
    /// ∫ d² dt
    LC,
    /// ∫ (v_des − v)² dt
    V,
    /// ∫ (θ_des − θ)² dt
    O,
    /// ∫ max ξᵢ dt
    D,
    /// ∫ v dt
    L,
    /// t_f
    T,
    /// d²(t_f)
    TO,
    /// d²_goal(t_f)
    TG,
    /// max |κ|
    Kappa,
    /// Mean lateral deviation from the previous trajectory.
    C,
    /// ∫ (d_l,des − d_l)² dt
    LV,
    /// ∫ (brake-distance margin)² dt
    BD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Running,
    Terminal,
    Extended,
}

impl CostId {
    pub const ALL: [CostId; 18] = [
        CostId::A,
        CostId::J,
        CostId::SA,
        CostId::SR,
        CostId::E,
        CostId::Y,
        CostId::LC,
        CostId::V,
        CostId::O,
        CostId::D,
        CostId::L,
        CostId::T,
        CostId::TO,
        CostId::TG,
        CostId::Kappa,
        CostId::C,
        CostId::LV,
        CostId::BD,
    ];

    /// ASCII token used by the cost-expression syntax.
    pub fn token(self) -> &'static str {
        match self {
            CostId::A => "A",
            CostId::J => "J",
            CostId::SA => "SA",
            CostId::SR => "SR",
            CostId::E => "E",
            CostId::Y => "Y",
            CostId::LC => "LC",
            CostId::V => "V",
            CostId::O => "O",
            CostId::D => "D",
            CostId::L => "L",
            CostId::T => "T",
            CostId::TO => "TO",
            CostId::TG => "TG",
            CostId::Kappa => "K",
            CostId::C => "C",
            CostId::LV => "LV",
            CostId::BD => "BD",
        }
    }

    pub fn from_token(token: &str) -> Option<CostId> {
        if token == "κ" {
            return Some(CostId::Kappa);
        }
        CostId::ALL.into_iter().find(|id| id.token() == token)
    }

    pub fn kind(self) -> CostKind {
        match self {
            CostId::T | CostId::TO | CostId::TG => CostKind::Terminal,
            CostId::Kappa | CostId::C | CostId::LV | CostId::BD => CostKind::Extended,
            _ => CostKind::Running,
        }
    }
}

impl fmt::Display for CostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for CostId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CostId::from_token(s).ok_or_else(|| Error::UnknownPartial(s.to_string()))
    }
}

/// Obstacles plus the radius within which they incur a proximity penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSet {
    pub shapes: Vec<Shape>,
    pub d_influence: f64,
}

impl ObstacleSet {
    pub fn new(shapes: Vec<Shape>, d_influence: f64) -> Result<Self> {
        if !(d_influence > 0.0 && d_influence.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "d_influence must be positive, got {d_influence}"
            )));
        }
        Ok(Self {
            shapes,
            d_influence,
        })
    }

    pub fn empty(d_influence: f64) -> Result<Self> {
        Self::new(Vec::new(), d_influence)
    }

    /// Clipped linear proximity penalty of the closest obstacle:
    /// `max_i max(0, 1 − distᵢ/d_influence)`.
    pub fn proximity(&self, p: Point2) -> f64 {
        self.shapes
            .iter()
            .map(|s| (1.0 - s.distance(p) / self.d_influence).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Signed distance from `p` to the nearest obstacle (negative inside),
    /// `∞` without obstacles.
    pub fn min_distance(&self, p: Point2) -> f64 {
        self.shapes
            .iter()
            .map(|s| s.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Per-sample leading-vehicle state aligned with an ego trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingVehicleContext {
    pub d_l: Vec<f64>,
    pub v_l: Vec<f64>,
    pub d_l_min: f64,
    pub k_gain: f64,
    pub a_maxdec: f64,
    pub t_response: f64,
}

impl LeadingVehicleContext {
    pub const K_GAIN: f64 = 1.14;
    pub const D_L_MIN: f64 = 5.0;
    pub const T_RESPONSE: f64 = 0.6;

    pub fn validate(&self, samples: usize) -> Result<()> {
        if self.d_l.len() != samples || self.v_l.len() != samples {
            return Err(Error::InvalidContext(format!(
                "leading vehicle has {}/{} values for {samples} samples",
                self.d_l.len(),
                self.v_l.len()
            )));
        }
        if !(self.a_maxdec > 0.0) {
            return Err(Error::InvalidContext(format!(
                "a_maxdec must be positive, got {}",
                self.a_maxdec
            )));
        }
        if self.d_l.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::InvalidContext("negative gap to leading vehicle".into()));
        }
        Ok(())
    }

    /// Samples a leading-vehicle trace at the ego timestamps. The gap is the
    /// arc-length difference along the base path, floored at zero.
    pub fn from_scenario(scenario: &Scenario, trajectory: &Trajectory) -> Result<Self> {
        let lead = scenario
            .leading_vehicle
            .as_ref()
            .ok_or(Error::missing(CostId::LV, "a leading vehicle"))?;
        let frenet = lane_coordinates(trajectory, scenario.frame())?;
        let (d_l, v_l) = trajectory
            .samples()
            .iter()
            .zip(&frenet)
            .map(|(s, f)| ((lead.s.at(s.t) - f.s).max(0.0), lead.v.at(s.t)))
            .unzip();
        Ok(Self {
            d_l,
            v_l,
            d_l_min: lead.d_l_min,
            k_gain: lead.k_gain,
            a_maxdec: lead.a_maxdec,
            t_response: lead.t_response,
        })
    }

    pub fn desired_gap(&self, v: f64) -> f64 {
        self.d_l_min + self.k_gain * v
    }

    /// `d_l + v_l²/(2a) − vT − v²/(2a)`; negative means the ego cannot stop
    /// behind the leader.
    pub fn brake_margin(&self, i: usize, v: f64) -> f64 {
        self.d_l[i] + 0.5 * self.v_l[i] * self.v_l[i] / self.a_maxdec
            - v * self.t_response
            - 0.5 * v * v / self.a_maxdec
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelModel {
    pub eta: f64,
    /// Lower heating value [J/kg].
    pub heating_value: f64,
    /// Fuel density [kg/m³].
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelPower {
    pub power: f64,
    pub fuel_flow: f64,
}

/// Engine power `F·v/η` and the fuel flow `P/(Hρ)` it implies.
pub fn fuel_power(force: f64, v: f64, model: &FuelModel) -> Result<FuelPower> {
    if !(model.eta > 0.0 && model.eta <= 1.0) {
        return Err(Error::InvalidModel(format!(
            "efficiency must lie in (0, 1], got {}",
            model.eta
        )));
    }
    if !(model.heating_value > 0.0 && model.density > 0.0) {
        return Err(Error::InvalidModel(
            "heating value and density must be positive".into(),
        ));
    }
    let power = force * v / model.eta;
    Ok(FuelPower {
        power,
        fuel_flow: power / (model.heating_value * model.density),
    })
}

/// Everything a partial may need beyond the trajectory itself.
#[derive(Debug, Clone)]
pub struct EvaluationContext<'a> {
    pub scenario: &'a Scenario,
    pub previous_trajectory: Option<&'a Trajectory>,
    /// Explicit per-sample leading-vehicle state; when absent it is derived
    /// from the scenario's leading-vehicle trace.
    pub leading_vehicle: Option<LeadingVehicleContext>,
    pub fuel_model: Option<FuelModel>,
    /// Traction force per sample [N], used by the energy partial.
    pub traction_force: Option<Vec<f64>>,
    pub du_config: Option<DuWeightConfig>,
    pub response_config: Option<ResponseRatioConfig>,
    pub kinematic_bounds: Option<KinematicBounds>,
}

impl<'a> EvaluationContext<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Self {
            scenario,
            previous_trajectory: None,
            leading_vehicle: None,
            fuel_model: None,
            traction_force: None,
            du_config: None,
            response_config: None,
            kinematic_bounds: None,
        }
    }

    pub fn with_previous(mut self, previous: &'a Trajectory) -> Self {
        self.previous_trajectory = Some(previous);
        self
    }

    pub fn with_leading_vehicle(mut self, lv: LeadingVehicleContext) -> Self {
        self.leading_vehicle = Some(lv);
        self
    }

    pub fn with_fuel(mut self, model: FuelModel, traction_force: Vec<f64>) -> Self {
        self.fuel_model = Some(model);
        self.traction_force = Some(traction_force);
        self
    }

    pub fn with_du_config(mut self, cfg: DuWeightConfig) -> Self {
        self.du_config = Some(cfg);
        self
    }

    pub fn with_response_config(mut self, rc: ResponseRatioConfig) -> Self {
        self.response_config = Some(rc);
        self
    }

    pub fn with_kinematic_bounds(mut self, bounds: KinematicBounds) -> Self {
        self.kinematic_bounds = Some(bounds);
        self
    }

    /// The context item `id` needs but does not have, if any.
    pub fn missing_for(&self, id: CostId) -> Option<&'static str> {
        match id {
            CostId::E if self.fuel_model.is_none() => Some("a fuel model"),
            CostId::E if self.traction_force.is_none() => Some("a traction force signal"),
            CostId::V if self.scenario.v_des.is_none() => Some("a desired-speed profile"),
            CostId::O if self.scenario.theta_des.is_none() => {
                Some("a desired-heading profile")
            }
            CostId::C if self.previous_trajectory.is_none() => Some("a previous trajectory"),
            CostId::LV | CostId::BD
                if self.leading_vehicle.is_none() && self.scenario.leading_vehicle.is_none() =>
            {
                Some("a leading vehicle")
            }
            _ => None,
        }
    }

    fn require(&self, id: CostId) -> Result<()> {
        match self.missing_for(id) {
            Some(needs) => Err(Error::missing(id, needs)),
            None => Ok(()),
        }
    }

    pub fn leading_vehicle_for(
        &self,
        trajectory: &Trajectory,
    ) -> Result<Cow<'_, LeadingVehicleContext>> {
        match &self.leading_vehicle {
            Some(lv) => Ok(Cow::Borrowed(lv)),
            None => LeadingVehicleContext::from_scenario(self.scenario, trajectory).map(Cow::Owned),
        }
    }
}

/// Frenet coordinates of every sample relative to `frame`.
pub fn lane_coordinates(trajectory: &Trajectory, frame: &FrenetFrame) -> Result<Vec<FrenetPoint>> {
    trajectory
        .samples()
        .iter()
        .map(|s| frame.to_frenet(s.position()))
        .collect()
}

/// Any partial, dispatched by identifier.
pub fn partial_cost(id: CostId, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<f64> {
    match id.kind() {
        CostKind::Running => running_cost(id, trajectory, ctx),
        CostKind::Terminal => terminal_cost(id, trajectory, ctx),
        CostKind::Extended => extended_cost(id, trajectory, ctx),
    }
}

/// The eleven running partials.
pub fn running_cost(id: CostId, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<f64> {
    ctx.require(id)?;
    let traj = trajectory;
    let value = match id {
        CostId::A => traj.integrate(|_, s| s.a * s.a),
        CostId::J => traj.integrate(|_, s| s.jerk * s.jerk),
        CostId::SA => traj.integrate(|_, s| s.delta * s.delta),
        CostId::SR => traj.integrate(|_, s| s.delta_rate * s.delta_rate),
        CostId::Y => traj.integrate(|_, s| s.yaw_rate * s.yaw_rate),
        CostId::L => traj.integrate(|_, s| s.v),
        CostId::E => {
            let model = ctx.fuel_model.as_ref().expect("checked by require");
            let force = ctx.traction_force.as_ref().expect("checked by require");
            if force.len() != traj.len() {
                return Err(Error::InvalidContext(format!(
                    "traction force has {} values for {} samples",
                    force.len(),
                    traj.len()
                )));
            }
            let power = traj
                .samples()
                .iter()
                .zip(force)
                .map(|(s, &f)| fuel_power(f, s.v, model).map(|p| p.power))
                .collect::<Result<Vec<_>>>()?;
            traj.integrate(|i, _| power[i] * power[i])
        }
        CostId::LC => {
            let lane = lane_coordinates(traj, ctx.scenario.frame())?;
            traj.integrate(|i, _| lane[i].d * lane[i].d)
        }
        CostId::V => {
            let v_des = ctx.scenario.v_des.as_ref().expect("checked by require");
            let lane = lane_coordinates(traj, ctx.scenario.frame())?;
            traj.integrate(|i, s| {
                let e = v_des.at(lane[i].s) - s.v;
                e * e
            })
        }
        CostId::O => {
            let theta_des = ctx.scenario.theta_des.as_ref().expect("checked by require");
            let lane = lane_coordinates(traj, ctx.scenario.frame())?;
            traj.integrate(|i, s| {
                let e = normalize_angle(theta_des.at(lane[i].s) - s.theta);
                e * e
            })
        }
        CostId::D => obstacle_proximity(traj, &ctx.scenario.obstacles),
        other => {
            return Err(Error::UnknownPartial(format!(
                "{other} is not a running cost"
            )))
        }
    };
    Ok(value)
}

/// Final time, squared terminal lane offset and squared goal distance.
pub fn terminal_cost(id: CostId, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<f64> {
    let last = trajectory.last();
    match id {
        CostId::T => Ok(last.t),
        CostId::TO => {
            let d = ctx.scenario.frame().to_frenet(last.position())?.d;
            Ok(d * d)
        }
        CostId::TG => {
            let d = ctx.scenario.goal.shape.distance(last.position());
            Ok(d * d)
        }
        other => Err(Error::UnknownPartial(format!(
            "{other} is not a terminal cost"
        ))),
    }
}

fn extended_cost(id: CostId, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<f64> {
    ctx.require(id)?;
    match id {
        CostId::Kappa => max_curvature_cost(trajectory),
        CostId::C => consistency_cost(
            trajectory,
            ctx.previous_trajectory.expect("checked by require"),
            ctx.scenario.frame(),
        ),
        CostId::LV => gap_cost(trajectory, &*ctx.leading_vehicle_for(trajectory)?),
        CostId::BD => brake_distance_cost(trajectory, &*ctx.leading_vehicle_for(trajectory)?),
        other => Err(Error::UnknownPartial(format!(
            "{other} is not an extended cost"
        ))),
    }
}

pub fn obstacle_proximity(trajectory: &Trajectory, obstacles: &ObstacleSet) -> f64 {
    if obstacles.shapes.is_empty() {
        return 0.0;
    }
    trajectory.integrate(|_, s| obstacles.proximity(s.position()))
}

pub fn max_curvature_cost(trajectory: &Trajectory) -> Result<f64> {
    Ok(pointwise_curvature(trajectory)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max))
}

/// Mean lateral distance between two trajectories over the base-path
/// arc-length interval both cover: `(1/(s₂−s₁)) ∫ |d_cur(s) − d_prev(s)| ds`.
///
/// Each trajectory's lateral offset is linear in `s` between its samples, so
/// the integral is evaluated exactly on the merged breakpoints.
pub fn consistency_cost(current: &Trajectory, previous: &Trajectory, frame: &FrenetFrame) -> Result<f64> {
    let cur = monotone_lane_profile(current, frame)?;
    let prev = monotone_lane_profile(previous, frame)?;
    let s1 = cur.0[0].max(prev.0[0]);
    let s2 = cur.0[cur.0.len() - 1].min(prev.0[prev.0.len() - 1]);
    if !(s2 > s1) {
        return Err(Error::NoOverlap);
    }
    let mut breaks: Vec<f64> = cur
        .0
        .iter()
        .chain(&prev.0)
        .copied()
        .filter(|&s| s > s1 && s < s2)
        .collect();
    breaks.push(s1);
    breaks.push(s2);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let gap = |s: f64| interpolate(&cur.0, &cur.1, s) - interpolate(&prev.0, &prev.1, s);
    let mut integral = 0.0;
    let mut g0 = gap(breaks[0]);
    for w in breaks.windows(2) {
        let g1 = gap(w[1]);
        let h = w[1] - w[0];
        integral += if g0 * g1 >= 0.0 {
            0.5 * (g0.abs() + g1.abs()) * h
        } else {
            0.5 * (g0 * g0 + g1 * g1) / (g0.abs() + g1.abs()) * h
        };
        g0 = g1;
    }
    Ok(integral / (s2 - s1))
}

fn monotone_lane_profile(trajectory: &Trajectory, frame: &FrenetFrame) -> Result<(Vec<f64>, Vec<f64>)> {
    let lane = lane_coordinates(trajectory, frame)?;
    if lane.windows(2).any(|w| w[1].s <= w[0].s) {
        return Err(Error::InvalidInput(
            "trajectory does not progress monotonically along the base path".into(),
        ));
    }
    Ok(lane.into_iter().map(|p| (p.s, p.d)).unzip())
}

/// `∫ (d_l,min + k_gain·v − d_l)² dt`.
pub fn gap_cost(trajectory: &Trajectory, lv: &LeadingVehicleContext) -> Result<f64> {
    lv.validate(trajectory.len())?;
    Ok(trajectory.integrate(|i, s| {
        let e = lv.desired_gap(s.v) - lv.d_l[i];
        e * e
    }))
}

/// `∫ (d_l + ½v_l²/a − v·T − ½v²/a)² dt`.
pub fn brake_distance_cost(trajectory: &Trajectory, lv: &LeadingVehicleContext) -> Result<f64> {
    lv.validate(trajectory.len())?;
    Ok(trajectory.integrate(|i, s| {
        let m = lv.brake_margin(i, s.v);
        m * m
    }))
}

//! Scenario description shared by cost evaluation, constraint checking and
//! the experiment harness.

use crate::costs::ObstacleSet;
use crate::error::{Error, Result};
use crate::frenet::{build_frenet_frame, FrenetFrame};
use crate::geometry::Shape;
use crate::trajectory::BasePath;

/// Piecewise-linear function of one variable, held constant beyond its ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "profile needs matching non-empty knots and values ({} vs {})",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("profile value not finite".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "profile knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, x: f64) -> f64 {
        interpolate(&self.knots, &self.values, x)
    }
}

/// Linear interpolation on sorted knots, clamped at both ends.
pub(crate) fn interpolate(knots: &[f64], values: &[f64], x: f64) -> f64 {
    let n = knots.len();
    if x <= knots[0] {
        return values[0];
    }
    if x >= knots[n - 1] {
        return values[n - 1];
    }
    let i = knots.partition_point(|&k| k <= x);
    let (k0, k1) = (knots[i - 1], knots[i]);
    let u = (x - k0) / (k1 - k0);
    values[i - 1] + (values[i] - values[i - 1]) * u
}

/// Accepted terminal set. Only the final position (and optionally the final
/// time) is constrained.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalRegion {
    pub shape: Shape,
    pub time_window: Option<(f64, f64)>,
}

/// Bound on the response ratio `vT/d`: the planner with cycle period
/// `t_response` needs clearance of at least `v·t_response / max_ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRatioConfig {
    pub t_response: f64,
    pub max_ratio: f64,
}

impl ResponseRatioConfig {
    pub fn new(t_response: f64, max_ratio: f64) -> Result<Self> {
        if !(t_response > 0.0 && max_ratio > 0.0 && t_response.is_finite() && max_ratio.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "response ratio config must be positive, got T = {t_response}, max = {max_ratio}"
            )));
        }
        Ok(Self {
            t_response,
            max_ratio,
        })
    }

    pub fn required_clearance(&self, v: f64) -> f64 {
        v * self.t_response / self.max_ratio
    }
}

/// Kinematic limits standing in for vehicle-dynamics feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinematicBounds {
    pub a_max: Option<f64>,
    pub delta_max: Option<f64>,
}

/// Leading vehicle recorded as arc length and speed over time, plus the gap
/// policy constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingVehicleSpec {
    pub s: Profile,
    pub v: Profile,
    pub d_l_min: f64,
    pub k_gain: f64,
    pub a_maxdec: f64,
    pub t_response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    base_path: BasePath,
    frame: FrenetFrame,
    pub obstacles: ObstacleSet,
    pub speed_limit: f64,
    pub goal: GoalRegion,
    pub v_des: Option<Profile>,
    pub theta_des: Option<Profile>,
    pub leading_vehicle: Option<LeadingVehicleSpec>,
    /// Radius of the disc footprint used for collision checks.
    pub ego_radius: f64,
}

pub const DEFAULT_FRAME_SPACING: f64 = 0.5;
pub const DEFAULT_EGO_RADIUS: f64 = 0.8;

impl Scenario {
    pub fn new(
        base_path: BasePath,
        obstacles: ObstacleSet,
        speed_limit: f64,
        goal: GoalRegion,
    ) -> Result<Self> {
        Self::with_frame_spacing(base_path, DEFAULT_FRAME_SPACING, obstacles, speed_limit, goal)
    }

    pub fn with_frame_spacing(
        base_path: BasePath,
        frame_spacing: f64,
        obstacles: ObstacleSet,
        speed_limit: f64,
        goal: GoalRegion,
    ) -> Result<Self> {
        if !(speed_limit > 0.0 && speed_limit.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "speed limit must be positive, got {speed_limit}"
            )));
        }
        if let Some((lo, hi)) = goal.time_window {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidInput(format!(
                    "goal time window [{lo}, {hi}] is invalid"
                )));
            }
        }
        let spacing = frame_spacing.min(base_path.length());
        let frame = build_frenet_frame(&base_path, spacing)?;
        Ok(Self {
            base_path,
            frame,
            obstacles,
            speed_limit,
            goal,
            v_des: None,
            theta_des: None,
            leading_vehicle: None,
            ego_radius: DEFAULT_EGO_RADIUS,
        })
    }

    pub fn base_path(&self) -> &BasePath {
        &self.base_path
    }

    pub fn frame(&self) -> &FrenetFrame {
        &self.frame
    }

    pub fn with_ego_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ego radius must be non-negative, got {radius}"
            )));
        }
        self.ego_radius = radius;
        Ok(self)
    }

    pub fn with_v_des(mut self, profile: Profile) -> Self {
        self.v_des = Some(profile);
        self
    }

    pub fn with_theta_des(mut self, profile: Profile) -> Self {
        self.theta_des = Some(profile);
        self
    }

    pub fn with_leading_vehicle(mut self, lead: LeadingVehicleSpec) -> Result<Self> {
        if !(lead.a_maxdec > 0.0) {
            return Err(Error::InvalidContext(format!(
                "a_maxdec must be positive, got {}",
                lead.a_maxdec
            )));
        }
        if lead.d_l_min < 0.0 || lead.k_gain < 0.0 || lead.t_response < 0.0 {
            return Err(Error::InvalidContext(
                "leading-vehicle constants must be non-negative".into(),
            ));
        }
        self.leading_vehicle = Some(lead);
        Ok(self)
    }
}

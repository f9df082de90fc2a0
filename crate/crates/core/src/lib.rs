//! Composable cost functions for on-road trajectory planning.
//!
//! Partial costs ([`costs`]) are combined by weighted superposition written in
//! a small bracket syntax ([`dsl`]), e.g. `[(A|1),(J|1)]` for
//! `1·J_A + 1·J_J`. Candidates are generated in a Frenet frame around a base
//! path ([`frenet`]), filtered by hard constraints and ranked by cost
//! ([`selection`]). Literature cost functions are available by name
//! ([`catalog`]) and [`harness`] runs weight-sensitivity sweeps and rankings.

pub mod catalog;
pub mod cli;
pub mod costs;
pub mod dsl;
pub mod error;
pub mod exec;
pub mod frenet;
pub mod geometry;
pub mod harness;
pub mod scenario;
pub mod selection;
pub mod trajectory;

pub use catalog::{catalog_lookup, resolve_cost_expr, CostFunction, DuWeightConfig, NamedCost};
pub use costs::{CostId, EvaluationContext, FuelModel, LeadingVehicleContext, ObstacleSet};
pub use dsl::{evaluate, format_cost_expr, parse_cost_expr, CostSpec, Evaluation, Objective, Term};
pub use error::{Error, Result};
pub use exec::Execution;
pub use frenet::{build_frenet_frame, generate_candidates, CandidateConfig, CandidateStart, FrenetFrame};
pub use geometry::{Point2, Shape};
pub use scenario::{GoalRegion, KinematicBounds, Profile, ResponseRatioConfig, Scenario};
pub use selection::{check_constraints, select_best, FeasibilityReport, Selection};
pub use trajectory::{derive_kinematics, BasePath, StateSample, TimedPoint, Trajectory};

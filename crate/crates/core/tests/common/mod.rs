#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trajcost::costs::FuelModel;
use trajcost::scenario::LeadingVehicleSpec;
use trajcost::{
    derive_kinematics, BasePath, CostId, GoalRegion, ObstacleSet, Point2, Profile, Scenario, Shape,
    StateSample, TimedPoint, Trajectory,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn straight_path(length: f64) -> BasePath {
    BasePath::new(vec![Point2::new(0.0, 0.0), Point2::new(length, 0.0)]).unwrap()
}

pub fn box_goal(x0: f64, x1: f64, half_width: f64) -> GoalRegion {
    GoalRegion {
        shape: Shape::polygon(vec![
            Point2::new(x0, -half_width),
            Point2::new(x1, -half_width),
            Point2::new(x1, half_width),
            Point2::new(x0, half_width),
        ])
        .unwrap(),
        time_window: None,
    }
}

/// Samples built field by field, bypassing differentiation.
pub fn raw_trajectory(times: &[f64], mut fill: impl FnMut(usize, &mut StateSample)) -> Trajectory {
    let samples = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut s = StateSample {
                t,
                ..StateSample::default()
            };
            fill(i, &mut s);
            s
        })
        .collect();
    Trajectory::new(samples).unwrap()
}

/// Smooth random drive along +x: quadratic progress plus a lateral sine,
/// with a random steering signal.
pub fn random_drive(rng: &mut impl Rng, x0: f64) -> Trajectory {
    let n = rng.random_range(20..60);
    let dt = rng.random_range(0.05..0.1);
    let v0 = rng.random_range(4.0..12.0);
    let acc = rng.random_range(-0.5..0.5);
    let amp = rng.random_range(0.0..2.0);
    let omega = rng.random_range(0.2..1.5);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let t0 = rng.random_range(0.0..1.0);
    let pts: Vec<TimedPoint> = (0..n)
        .map(|i| {
            let tau = i as f64 * dt;
            TimedPoint::new(
                t0 + tau,
                x0 + v0 * tau + 0.5 * acc * tau * tau,
                amp * (omega * tau + phase).sin(),
            )
        })
        .collect();
    let traj = derive_kinematics(&pts).unwrap();
    let sa = rng.random_range(0.0..0.3);
    let delta: Vec<f64> = (0..n).map(|i| sa * (0.3 * i as f64 + phase).cos()).collect();
    traj.with_steering(&delta).unwrap()
}

/// Straight 150 m road with one obstacle, speed and heading profiles and a
/// leading vehicle far enough ahead for every random drive.
pub fn full_scenario() -> Scenario {
    let obstacles = ObstacleSet::new(vec![Shape::disc(Point2::new(30.0, 2.5), 0.5).unwrap()], 4.0).unwrap();
    let lead = LeadingVehicleSpec {
        s: Profile::new(vec![0.0, 20.0], vec![60.0, 300.0]).unwrap(),
        v: Profile::new(vec![0.0, 20.0], vec![12.0, 12.0]).unwrap(),
        d_l_min: 5.0,
        k_gain: 1.14,
        a_maxdec: 6.0,
        t_response: 0.6,
    };
    Scenario::with_frame_spacing(straight_path(150.0), 2.0, obstacles, 20.0, box_goal(10.0, 40.0, 5.0))
        .unwrap()
        .with_v_des(Profile::new(vec![0.0, 150.0], vec![8.0, 11.0]).unwrap())
        .with_theta_des(Profile::constant(0.05).unwrap())
        .with_leading_vehicle(lead)
        .unwrap()
}

pub fn fuel_model() -> FuelModel {
    FuelModel {
        eta: 0.3,
        heating_value: 4.3e7,
        density: 0.745,
    }
}

pub fn random_force(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.5..1.0)).collect()
}

pub fn random_weights(rng: &mut impl Rng, ids: &[CostId], max_terms: usize) -> Vec<(CostId, f64)> {
    let n = rng.random_range(1..=max_terms);
    (0..n)
        .map(|_| (ids[rng.random_range(0..ids.len())], rng.random_range(0.01..10.0)))
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use trajcost::catalog::evaluate_xd1;
use trajcost::costs::{consistency_cost, gap_cost, max_curvature_cost, partial_cost, LeadingVehicleContext};
use trajcost::harness::{rank_weight_sets, reference_experiment, WeightSet, MetricKind};
use trajcost::{
    check_constraints, derive_kinematics, evaluate, generate_candidates, parse_cost_expr, select_best,
    CandidateConfig, CandidateStart, CostId, CostSpec, DuWeightConfig, EvaluationContext, ObstacleSet, Point2,
    Shape, StateSample, TimedPoint, Trajectory,
};

fn drive(seed: u64) -> Trajectory {
    let mut r = rng(seed);
    let x0 = r.random_range(0.0..10.0);
    random_drive(&mut r, x0)
}

fn drive_from(seed: u64, x0: f64) -> Trajectory {
    random_drive(&mut rng(seed), x0)
}

fn candidate_family(seed: u64) -> (trajcost::Scenario, Vec<Trajectory>) {
    let mut r = rng(seed);
    let shapes = (0..r.random_range(0..3))
        .map(|_| {
            Shape::disc(
                Point2::new(r.random_range(10.0..40.0), r.random_range(-2.5..2.5)),
                r.random_range(0.2..0.8),
            )
            .unwrap()
        })
        .collect();
    let scenario = trajcost::Scenario::with_frame_spacing(
        straight_path(80.0),
        2.0,
        ObstacleSet::new(shapes, 3.0).unwrap(),
        15.0,
        box_goal(40.0, 60.0, 4.0),
    )
    .unwrap();
    let n = r.random_range(2..12);
    let config = CandidateConfig {
        lateral_offsets: (0..n).map(|i| -2.5 + 5.0 * i as f64 / n as f64).collect(),
        horizon: 50.0,
        speed: 10.0,
        sample_spacing: 2.0,
    };
    let candidates = generate_candidates(scenario.frame(), CandidateStart::default(), &config).unwrap();
    (scenario, candidates)
}

const SQUARED_RUNNING: [CostId; 6] = [CostId::A, CostId::J, CostId::SA, CostId::SR, CostId::Y, CostId::L];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curvature_survives_rigid_motion(seed in any::<u64>(), angle in -3.2f64..3.2, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
        let traj = drive(seed);
        let (c, s) = (angle.cos(), angle.sin());
        let moved: Vec<TimedPoint> = traj
            .samples()
            .iter()
            .map(|p| TimedPoint::new(p.t, c * p.x - s * p.y + dx, s * p.x + c * p.y + dy))
            .collect();
        let k0 = max_curvature_cost(&traj).unwrap();
        let k1 = max_curvature_cost(&derive_kinematics(&moved).unwrap()).unwrap();
        prop_assert!((k0 - k1).abs() <= 1e-6 * k0.max(1.0), "{k0} vs {k1}");
    }

    #[test]
    fn squared_integrals_ignore_time_reversal(seed in any::<u64>()) {
        let traj = drive(seed);
        let reversed: Vec<StateSample> = traj
            .samples()
            .iter()
            .rev()
            .map(|s| StateSample { t: -s.t, ..*s })
            .collect();
        let reversed = Trajectory::new(reversed).unwrap();
        let scenario = full_scenario();
        let ctx = EvaluationContext::new(&scenario);
        for id in SQUARED_RUNNING {
            let a = partial_cost(id, &traj, &ctx).unwrap();
            let b = partial_cost(id, &reversed, &ctx).unwrap();
            prop_assert!(rel_close(a, b, 1e-12), "{id}: {a} vs {b}");
        }
    }

    #[test]
    fn consistency_is_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let scenario = full_scenario();
        let (p, q) = (drive_from(a, 0.0), drive_from(b, 0.0));
        let pq = consistency_cost(&p, &q, scenario.frame()).unwrap();
        let qp = consistency_cost(&q, &p, scenario.frame()).unwrap();
        prop_assert!(rel_close(pq, qp, 1e-12), "{pq} vs {qp}");
        prop_assert!(consistency_cost(&p, &p, scenario.frame()).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn proximity_never_grows_with_distance(
        r in 0.1f64..3.0, infl in 0.5f64..6.0, dir in -3.2f64..3.2, near in 0.0f64..10.0, extra in 0.0f64..5.0,
    ) {
        let set = ObstacleSet::new(vec![Shape::disc(Point2::new(1.0, -2.0), r).unwrap()], infl).unwrap();
        let at = |d: f64| Point2::new(1.0 + d * dir.cos(), -2.0 + d * dir.sin());
        let p_near = set.proximity(at(r + near));
        let p_far = set.proximity(at(r + near + extra));
        prop_assert!(p_far <= p_near);
        prop_assert!((0.0..=1.0).contains(&p_near));
    }

    #[test]
    fn gap_and_brake_costs_scale_quadratically(seed in any::<u64>(), c in 0.0f64..20.0) {
        let traj = drive(seed);
        let mut r = rng(seed ^ 0xa5a5);
        let n = traj.len();
        let v: Vec<f64> = traj.samples().iter().map(|s| s.v).collect();
        let err: Vec<f64> = (0..n).map(|_| r.random_range(0.0..3.0)).collect();
        let lv = |scale: f64| LeadingVehicleContext {
            d_l: v.iter().zip(&err).map(|(v, e)| 5.0 + 1.14 * v + scale * e).collect(),
            v_l: v.clone(),
            d_l_min: LeadingVehicleContext::D_L_MIN,
            k_gain: LeadingVehicleContext::K_GAIN,
            a_maxdec: 6.0,
            t_response: LeadingVehicleContext::T_RESPONSE,
        };
        let base = gap_cost(&traj, &lv(1.0)).unwrap();
        let scaled = gap_cost(&traj, &lv(c)).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-9 * (1.0 + c * c * base));

        // equal speeds and T = 0 leave the gap as the whole margin
        let brake = |scale: f64| {
            let mut ctx = lv(scale);
            ctx.t_response = 0.0;
            ctx.d_l = err.iter().map(|e| scale * e).collect();
            trajcost::costs::brake_distance_cost(&traj, &ctx).unwrap()
        };
        let b1 = brake(1.0);
        prop_assert!((brake(c) - c * c * b1).abs() <= 1e-9 * (1.0 + c * c * b1));
    }

    #[test]
    fn total_is_additive_over_concatenation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let scenario = full_scenario();
        let traj = drive_from(seed, 2.0);
        let previous = drive_from(seed.wrapping_add(1), 2.0);
        let ctx = EvaluationContext::new(&scenario)
            .with_previous(&previous)
            .with_fuel(fuel_model(), random_force(&mut r, traj.len()));
        let a = CostSpec::from_pairs(&random_weights(&mut r, &CostId::ALL, 6)).unwrap();
        let b = CostSpec::from_pairs(&random_weights(&mut r, &CostId::ALL, 6)).unwrap();
        let ta = evaluate(&a, &traj, &ctx).unwrap().total;
        let tb = evaluate(&b, &traj, &ctx).unwrap().total;
        let tab = evaluate(&a.concat(&b), &traj, &ctx).unwrap().total;
        prop_assert!(rel_close(tab, ta + tb, 1e-12), "{tab} vs {}", ta + tb);
    }

    #[test]
    fn selection_ignores_candidate_order(seed in any::<u64>(), shift in 1usize..12) {
        let (scenario, candidates) = candidate_family(seed);
        let mut r = rng(seed);
        let spec = CostSpec::from_pairs(&random_weights(
            &mut r,
            &[CostId::A, CostId::LC, CostId::D, CostId::TO, CostId::Kappa],
            4,
        ))
        .unwrap();
        let ctx = EvaluationContext::new(&scenario);
        let mut rotated = candidates.clone();
        rotated.rotate_left(shift % candidates.len());
        rotated.reverse();
        match (select_best(&candidates, &spec, &ctx, &scenario), select_best(&rotated, &spec, &ctx, &scenario)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.total, b.total);
                let ties = a.reports.iter().zip(&candidates)
                    .filter(|(rep, c)| rep.feasible() && evaluate(&spec, c, &ctx).unwrap().total == a.total)
                    .count();
                if ties == 1 {
                    prop_assert_eq!(&candidates[a.index], &rotated[b.index]);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|s| s.index), b.map(|s| s.index)),
        }
    }

    #[test]
    fn more_obstacles_never_restore_feasibility(seed in any::<u64>(), x in 0.0f64..60.0, y in -3.0f64..3.0, r in 0.1f64..1.5) {
        let (scenario, candidates) = candidate_family(seed);
        let mut crowded = scenario.clone();
        let mut shapes = scenario.obstacles.shapes.clone();
        shapes.push(Shape::disc(Point2::new(x, y), r).unwrap());
        crowded.obstacles = ObstacleSet::new(shapes, scenario.obstacles.d_influence).unwrap();
        for c in &candidates {
            let before = check_constraints(c, &scenario, None, None).feasible();
            let after = check_constraints(c, &crowded, None, None).feasible();
            prop_assert!(before || !after);
        }
    }

    #[test]
    fn xd1_reduces_to_its_linear_part(seed in any::<u64>()) {
        let mut r = rng(seed);
        let scenario = full_scenario();
        let traj = drive(seed);
        let ctx = EvaluationContext::new(&scenario);
        let ids = [CostId::A, CostId::J, CostId::LC, CostId::V, CostId::O, CostId::D, CostId::T];
        let linear = CostSpec::from_pairs(&random_weights(&mut r, &ids, 5)).unwrap();
        let mut cfg = DuWeightConfig::new(1.0, 12.0).unwrap();
        cfg.w4 = 0.0;
        cfg.w5_0 = 0.0;
        cfg.w6_0 = 0.0;
        cfg.w7_0 = 0.0;
        let xd1 = evaluate_xd1(&traj, &ctx, &cfg, &linear).unwrap().total;
        let plain = evaluate(&linear, &traj, &ctx).unwrap().total;
        prop_assert!(rel_close(xd1, plain, 1e-12), "{xd1} vs {plain}");
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,40}") {
        let _ = parse_cost_expr(&text);
    }

    #[test]
    fn parser_never_panics_on_near_misses(text in "\\[(\\((A|LC|κ|K|D|XX)? ?\\|? ?-?[0-9.e+]{0,6}\\)?,?){0,4}\\]?") {
        let _ = parse_cost_expr(&text);
    }
}

#[test]
fn duplicate_weight_sets_leave_scores_unchanged() {
    let experiment = reference_experiment();
    let metrics = [
        MetricKind::LaneCenter,
        MetricKind::ObstacleDistance,
        MetricKind::Speed,
        MetricKind::Curvature,
    ];
    let sets: Vec<WeightSet> = ["@RA1", "[(LC|1),(D|0.2)]", "[(D|1),(L|0.1)]"]
        .iter()
        .map(|e| WeightSet {
            label: e.to_string(),
            spec: trajcost::resolve_cost_expr(e).unwrap().linear_spec().clone(),
        })
        .collect();
    let base = rank_weight_sets(&sets, &metrics, &experiment).unwrap();
    let mut doubled = sets.clone();
    doubled.push(sets[1].clone());
    let dup = rank_weight_sets(&doubled, &metrics, &experiment).unwrap();
    for e in &base.entries {
        let twin = dup.entries.iter().find(|d| d.input_index == e.input_index).unwrap();
        assert_eq!(e.score, twin.score);
    }
    let copy = dup.entries.iter().find(|d| d.input_index == 3).unwrap();
    let original = dup.entries.iter().find(|d| d.input_index == 1).unwrap();
    assert_eq!(copy.score, original.score);
    let order = |r: &trajcost::harness::Ranking| -> Vec<usize> {
        r.entries.iter().map(|e| e.input_index).filter(|&i| i < 3).collect()
    };
    assert_eq!(order(&base), order(&dup));
}

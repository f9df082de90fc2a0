//! Trajectory data model, finite-difference kinematics, curvature and
//! arc-length tools.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// One time-stamped kinematic state of the ego vehicle. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    /// Magnitude of the planar acceleration vector.
    pub a: f64,
    /// Signed projection of the acceleration onto the heading.
    pub a_tan: f64,
    /// Time derivative of `a`.
    pub jerk: f64,
    pub theta: f64,
    pub yaw_rate: f64,
    pub delta: f64,
    pub delta_rate: f64,
}

impl StateSample {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    fn is_finite(&self) -> bool {
        [
            self.t,
            self.x,
            self.y,
            self.v,
            self.a,
            self.a_tan,
            self.jerk,
            self.theta,
            self.yaw_rate,
            self.delta,
            self.delta_rate,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Maps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Ordered sequence of states with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<StateSample>,
}

impl Trajectory {
    /// Validates the samples; headings are normalized into (−π, π].
    pub fn new(mut samples: Vec<StateSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateInput(format!(
                "trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter_mut().enumerate() {
            if !s.is_finite() {
                return Err(Error::InvalidInput(format!("sample {i} is not finite")));
            }
            if s.v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has negative speed {}",
                    s.v
                )));
            }
            s.theta = normalize_angle(s.theta);
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidInput(format!(
                "timestamps not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[StateSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.samples.iter().map(StateSample::position).collect()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn final_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn first(&self) -> &StateSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &StateSample {
        &self.samples[self.samples.len() - 1]
    }

    /// Trapezoidal integral over the trajectory's own timestamps of a
    /// per-sample integrand.
    pub fn integrate<F>(&self, mut integrand: F) -> f64
    where
        F: FnMut(usize, &StateSample) -> f64,
    {
        let mut prev = integrand(0, &self.samples[0]);
        let mut total = 0.0;
        for i in 1..self.samples.len() {
            let cur = integrand(i, &self.samples[i]);
            total += 0.5 * (prev + cur) * (self.samples[i].t - self.samples[i - 1].t);
            prev = cur;
        }
        total
    }

    /// Replaces steering angle and recomputes steering rate from it.
    pub fn with_steering(mut self, delta: &[f64]) -> Result<Self> {
        if delta.len() != self.samples.len() {
            return Err(Error::InvalidInput(format!(
                "steering has {} values for {} samples",
                delta.len(),
                self.samples.len()
            )));
        }
        if self.samples.len() < 3 {
            return Err(Error::DegenerateInput(
                "steering rate needs at least 3 samples".into(),
            ));
        }
        let t = self.times();
        let rate = differentiate(&t, delta);
        for (s, (&d, r)) in self.samples.iter_mut().zip(delta.iter().zip(rate)) {
            s.delta = d;
            s.delta_rate = r;
        }
        Trajectory::new(self.samples)
    }
}

/// A planar position with its timestamp; the raw input to kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl TimedPoint {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }
}

/// Three-point Lagrange first derivative of `f` sampled at `x`: centered on
/// interior nodes, one-sided over the first or last three nodes at the ends.
/// Callers guarantee `x.len() >= 3` and strictly increasing `x`.
pub(crate) fn differentiate(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    debug_assert!(n >= 3 && f.len() == n);
    (0..n)
        .map(|i| {
            let j = i.clamp(1, n - 2);
            lagrange3_d1(
                [x[j - 1], x[j], x[j + 1]],
                [f[j - 1], f[j], f[j + 1]],
                x[i],
            )
        })
        .collect()
}

fn lagrange3_d1(x: [f64; 3], f: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = x;
    f[0] * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + f[1] * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + f[2] * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
}

fn lagrange3_d2(x: [f64; 3], f: [f64; 3]) -> f64 {
    let [x0, x1, x2] = x;
    2.0 * (f[0] / ((x0 - x1) * (x0 - x2))
        + f[1] / ((x1 - x0) * (x1 - x2))
        + f[2] / ((x2 - x0) * (x2 - x1)))
}

fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        if i > 0 {
            let jump = a - angles[i - 1];
            if jump > PI {
                offset -= 2.0 * PI;
            } else if jump < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(a + offset);
    }
    out
}

/// Builds a trajectory from timed positions by finite differences.
///
/// Velocity and acceleration vectors are differentiated componentwise; `v`
/// and `a` are their norms, `a_tan` is the acceleration projected on the
/// heading, `jerk` differentiates `a`, and `yaw_rate` differentiates the
/// unwrapped heading. Steering is left at zero.
pub fn derive_kinematics(points: &[TimedPoint]) -> Result<Trajectory> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput(format!(
            "kinematics need at least 4 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !(p.t.is_finite() && p.x.is_finite() && p.y.is_finite()))
    {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    if let Some(i) = points.windows(2).position(|w| w[1].t <= w[0].t) {
        return Err(Error::InvalidInput(format!(
            "timestamps not strictly increasing at point {}",
            i + 1
        )));
    }
    let t: Vec<f64> = points.iter().map(|p| p.t).collect();
    let x: Vec<f64> = points.iter().map(|p| p.x).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y).collect();

    let vx = differentiate(&t, &x);
    let vy = differentiate(&t, &y);
    let ax = differentiate(&t, &vx);
    let ay = differentiate(&t, &vy);

    let heading: Vec<f64> = vx.iter().zip(&vy).map(|(&u, &w)| w.atan2(u)).collect();
    let yaw_rate = differentiate(&t, &unwrap_angles(&heading));
    let a: Vec<f64> = ax.iter().zip(&ay).map(|(&u, &w)| u.hypot(w)).collect();
    let jerk = differentiate(&t, &a);

    let samples = (0..points.len())
        .map(|i| {
            let (sin, cos) = heading[i].sin_cos();
            StateSample {
                t: t[i],
                x: x[i],
                y: y[i],
                v: vx[i].hypot(vy[i]),
                a: a[i],
                a_tan: ax[i] * cos + ay[i] * sin,
                jerk: jerk[i],
                theta: heading[i],
                yaw_rate: yaw_rate[i],
                delta: 0.0,
                delta_rate: 0.0,
            }
        })
        .collect();
    Trajectory::new(samples)
}

/// Signed curvature at every sample, `(x′y″ − x″y′)/(x′² + y′²)^{3/2}`.
///
/// Derivatives are taken against cumulative chord length over each interior
/// sample's three-point neighbourhood, so the result depends only on the
/// geometry. The two endpoints copy their nearest interior value.
pub fn pointwise_curvature(trajectory: &Trajectory) -> Result<Vec<f64>> {
    curvature_of_points(&trajectory.positions())
}

pub(crate) fn curvature_of_points(points: &[Point2]) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "curvature needs at least 3 samples, got {n}"
        )));
    }
    let mut chord = Vec::with_capacity(n);
    chord.push(0.0);
    for i in 1..n {
        let step = points[i].distance(points[i - 1]);
        if step == 0.0 {
            return Err(Error::InvalidInput(format!(
                "coincident consecutive points at sample {i}"
            )));
        }
        chord.push(chord[i - 1] + step);
    }
    let mut kappa = vec![0.0; n];
    for i in 1..n - 1 {
        // Parameterize locally so the nodes stay well conditioned.
        let s = [chord[i - 1] - chord[i], 0.0, chord[i + 1] - chord[i]];
        let xs = [points[i - 1].x, points[i].x, points[i + 1].x];
        let ys = [points[i - 1].y, points[i].y, points[i + 1].y];
        let dx = lagrange3_d1(s, xs, 0.0);
        let dy = lagrange3_d1(s, ys, 0.0);
        let ddx = lagrange3_d2(s, xs);
        let ddy = lagrange3_d2(s, ys);
        kappa[i] = (dx * ddy - ddx * dy) / (dx * dx + dy * dy).powf(1.5);
    }
    kappa[0] = kappa[1];
    kappa[n - 1] = kappa[n - 2];
    Ok(kappa)
}

/// Geometric reference path with per-vertex cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePath {
    vertices: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl BasePath {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::DegenerateInput(format!(
                "base path needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("base path vertex not finite".into()));
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for i in 1..vertices.len() {
            let step = vertices[i].distance(vertices[i - 1]);
            if step == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "base path vertices {} and {i} coincide",
                    i - 1
                )));
            }
            cumulative.push(cumulative[i - 1] + step);
        }
        Ok(Self {
            vertices,
            cumulative,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Segment index and local parameter in `[0, 1]` for arc length `s`,
    /// clamped to the path.
    pub(crate) fn locate(&self, s: f64) -> (usize, f64) {
        let last_seg = self.vertices.len() - 2;
        let seg = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).expect("finite arc length"))
        {
            Ok(i) => i.min(last_seg),
            Err(i) => i.saturating_sub(1).min(last_seg),
        };
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let u = ((s - self.cumulative[seg]) / len).clamp(0.0, 1.0);
        (seg, u)
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Point2 {
        let (seg, u) = self.locate(s);
        self.vertices[seg].lerp(self.vertices[seg + 1], u)
    }
}

/// Resamples a path to vertices with equal chord spacing close to `ds`.
///
/// The vertex count is `round(L / ds) + 1`. Every output vertex lies on the
/// input polyline and consecutive vertices are the same Euclidean distance
/// apart, which makes the operation idempotent. Both endpoints are kept
/// exactly.
pub fn resample_by_arclength(path: &BasePath, ds: f64) -> Result<BasePath> {
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {ds}"
        )));
    }
    let total = path.length();
    if ds > total * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "spacing {ds} exceeds path length {total}"
        )));
    }
    let verts = path.vertices();
    let start = verts[0];
    let end = verts[verts.len() - 1];
    let steps = ((total / ds).round() as usize).max(1);
    if steps == 1 {
        return BasePath::new(vec![start, end]);
    }

    // Chords are never longer than the arcs they span, so `total / steps`
    // always reaches the end within `steps` steps.
    let mut lo = 0.0;
    let mut hi = total / steps as f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chord_walk(path, mid, steps).reaches_end(path) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let walk = chord_walk(path, hi, steps - 1);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start);
    out.extend(walk.points.iter().map(|w| w.point));
    out.push(end);
    // A bisection endpoint can land the last interior vertex on the end.
    out.dedup_by(|b, a| a.distance(*b) < 1e-12 * total.max(1.0));
    if out[out.len() - 1] != end {
        out.push(end);
    }
    BasePath::new(out)
}

#[derive(Debug, Clone, Copy)]
struct WalkPoint {
    point: Point2,
    seg: usize,
}

struct ChordWalk {
    points: Vec<WalkPoint>,
    ran_off: bool,
}

impl ChordWalk {
    fn reaches_end(&self, path: &BasePath) -> bool {
        if self.ran_off {
            return true;
        }
        match self.points.last() {
            None => false,
            Some(w) => {
                let s = path.cumulative[w.seg] + w.point.distance(path.vertices[w.seg]);
                s >= path.length()
            }
        }
    }
}

/// Walks forward along the polyline taking `steps` chords of length `chord`.
fn chord_walk(path: &BasePath, chord: f64, steps: usize) -> ChordWalk {
    let verts = path.vertices();
    let mut points = Vec::with_capacity(steps);
    let mut here = WalkPoint {
        point: verts[0],
        seg: 0,
    };
    for _ in 0..steps {
        let mut seg = here.seg;
        let mut from = here.point;
        let next = loop {
            if seg + 1 >= verts.len() {
                break None;
            }
            let to = verts[seg + 1];
            let e = to - from;
            let q = from - here.point;
            // |q + u e|² = chord²; `from` is inside the circle so the larger
            // root is where the segment leaves it.
            let a = e.dot(e);
            let b = 2.0 * e.dot(q);
            let c = q.dot(q) - chord * chord;
            let disc = (b * b - 4.0 * a * c).max(0.0);
            let u = (-b + disc.sqrt()) / (2.0 * a);
            if u <= 1.0 {
                break Some(WalkPoint {
                    point: from + e * u,
                    seg,
                });
            }
            seg += 1;
            from = to;
        };
        match next {
            Some(w) => {
                points.push(w);
                here = w;
            }
            None => {
                return ChordWalk {
                    points,
                    ran_off: true,
                }
            }
        }
    }
    ChordWalk {
        points,
        ran_off: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize, step: f64, dt: f64) -> Vec<TimedPoint> {
        (0..n)
            .map(|i| TimedPoint::new(i as f64 * dt, i as f64 * step, 0.0))
            .collect()
    }

    fn circle_points(radius: f64, speed: f64, dt: f64, n: usize, ccw: bool) -> Vec<TimedPoint> {
        let omega = speed / radius * if ccw { 1.0 } else { -1.0 };
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let phi = omega * t;
                TimedPoint::new(t, radius * phi.cos(), radius * phi.sin())
            })
            .collect()
    }

    #[test]
    fn constant_speed_line() {
        let traj = derive_kinematics(&straight(20, 1.0, 0.1)).unwrap();
        for s in traj.samples() {
            assert!((s.v - 10.0).abs() < 1e-9, "v = {}", s.v);
            assert!(s.a.abs() < 1e-9);
            assert!(s.jerk.abs() < 1e-9);
            assert_eq!(s.delta, 0.0);
        }
    }

    #[test]
    fn circular_motion_yaw_rate() {
        let traj = derive_kinematics(&circle_points(20.0, 5.0, 0.05, 120, true)).unwrap();
        for s in traj.samples() {
            assert!((s.yaw_rate - 0.25).abs() / 0.25 < 0.02, "yaw {}", s.yaw_rate);
            assert!((s.v - 5.0).abs() / 5.0 < 0.01);
            // centripetal v²/R
            assert!((s.a - 1.25).abs() / 1.25 < 0.02, "a {}", s.a);
            assert!(s.a_tan.abs() < 0.02);
        }
    }

    #[test]
    fn interior_error_shrinks_quadratically() {
        let err = |dt: f64| {
            let n = (6.0 / dt) as usize;
            let traj = derive_kinematics(&circle_points(20.0, 5.0, dt, n, true)).unwrap();
            traj.samples()
                .iter()
                .map(|s| (s.a - 1.25).abs())
                .fold(0.0, f64::max)
        };
        let coarse = err(0.2);
        let fine = err(0.1);
        assert!(fine < coarse / 3.0, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn too_few_points() {
        let err = derive_kinematics(&straight(3, 1.0, 0.1)).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn repeated_timestamp() {
        let mut pts = straight(5, 1.0, 0.1);
        pts[3].t = pts[2].t;
        assert!(matches!(
            derive_kinematics(&pts).unwrap_err(),
            Error::InvalidInput(_)
        ));
    }

    #[test]
    fn steering_rate_from_angle() {
        let traj = derive_kinematics(&straight(6, 1.0, 0.5)).unwrap();
        let delta: Vec<f64> = (0..6).map(|i| 0.1 * i as f64 * 0.5).collect();
        let traj = traj.with_steering(&delta).unwrap();
        for s in traj.samples() {
            assert!((s.delta_rate - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_straight_is_zero() {
        let traj = derive_kinematics(&straight(10, 1.0, 0.1)).unwrap();
        assert!(pointwise_curvature(&traj)
            .unwrap()
            .iter()
            .all(|k| k.abs() < 1e-12));
    }

    #[test]
    fn curvature_circle_and_direction() {
        let n = 200;
        let dt = 2.0 * PI * 10.0 / (n as f64) / 5.0;
        let ccw = derive_kinematics(&circle_points(10.0, 5.0, dt, n, true)).unwrap();
        let cw = derive_kinematics(&circle_points(10.0, 5.0, dt, n, false)).unwrap();
        let k_ccw = pointwise_curvature(&ccw).unwrap();
        let k_cw = pointwise_curvature(&cw).unwrap();
        for (a, b) in k_ccw.iter().zip(&k_cw) {
            assert!((a - 0.1).abs() < 1e-3, "kappa {a}");
            assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn curvature_rejects_coincident_points() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        assert!(matches!(
            curvature_of_points(&pts).unwrap_err(),
            Error::InvalidInput(_)
        ));
    }

    #[test]
    fn resample_straight_segment() {
        let path = BasePath::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]).unwrap();
        let out = resample_by_arclength(&path, 2.5).unwrap();
        let xs: Vec<f64> = out.vertices().iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 5);
        for (x, want) in xs.iter().zip([0.0, 2.5, 5.0, 7.5, 10.0]) {
            assert!((x - want).abs() < 1e-9, "{x} vs {want}");
        }
        assert_eq!(out.vertices()[4], Point2::new(10.0, 0.0));
    }

    #[test]
    fn resample_rejects_bad_spacing() {
        let path = BasePath::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]).unwrap();
        assert!(resample_by_arclength(&path, 0.0).is_err());
        assert!(resample_by_arclength(&path, -1.0).is_err());
        assert!(resample_by_arclength(&path, 11.0).is_err());
    }

    #[test]
    fn resample_preserves_length_and_is_idempotent() {
        let verts: Vec<Point2> = (0..=60)
            .map(|i| {
                let phi = i as f64 * 0.02;
                Point2::new(30.0 * phi.sin(), 30.0 * (1.0 - phi.cos()))
            })
            .collect();
        let path = BasePath::new(verts).unwrap();
        let once = resample_by_arclength(&path, 0.7).unwrap();
        assert!((once.length() - path.length()).abs() / path.length() < 1e-3);
        assert_eq!(once.vertices()[0], path.vertices()[0]);
        assert_eq!(once.vertices().last(), path.vertices().last());
        let twice = resample_by_arclength(&once, 0.7).unwrap();
        assert_eq!(once.vertices().len(), twice.vertices().len());
        for (a, b) in once.vertices().iter().zip(twice.vertices()) {
            assert!(a.distance(*b) < 1e-9, "moved {}", a.distance(*b));
        }
    }

    #[test]
    fn base_path_validation() {
        assert!(BasePath::new(vec![Point2::new(1.0, 1.0)]).is_err());
        assert!(BasePath::new(vec![Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn angle_normalization() {
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5) - 0.5).abs() < 1e-15);
    }
}

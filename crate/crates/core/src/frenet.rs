//! Frenet frame over a base path, curvilinear transforms and generation of
//! laterally offset quintic candidates.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Point2;
use crate::trajectory::{derive_kinematics, resample_by_arclength, BasePath, TimedPoint, Trajectory};

/// Path-relative coordinates: arc length along the base path and signed
/// lateral offset (positive to the left).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetPoint {
    pub s: f64,
    pub d: f64,
}

/// Arc-length resampled base path with unit tangents per vertex. Normals are
/// the tangents rotated by +π/2.
///
/// Between vertices the tangent is linearly interpolated and renormalized.
/// `from_frenet` offsets along that interpolated normal and `to_frenet`
/// solves for the arc length where `p − base(s)` is orthogonal to the same
/// interpolated tangent, so the two transforms are exact inverses wherever
/// the projection is unique.
#[derive(Debug, Clone, PartialEq)]
pub struct FrenetFrame {
    path: BasePath,
    tangents: Vec<Point2>,
}

pub fn build_frenet_frame(path: &BasePath, ds: f64) -> Result<FrenetFrame> {
    let path = resample_by_arclength(path, ds)?;
    let v = path.vertices();
    let n = v.len();
    let tangents = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (v[0], v[1]),
                i if i == n - 1 => (v[n - 2], v[n - 1]),
                i => (v[i - 1], v[i + 1]),
            };
            (b - a).normalized().ok_or_else(|| {
                Error::InvalidInput(format!("base path reverses on itself at vertex {i}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrenetFrame { path, tangents })
}

impl FrenetFrame {
    pub fn path(&self) -> &BasePath {
        &self.path
    }

    pub fn length(&self) -> f64 {
        self.path.length()
    }

    pub fn tangents(&self) -> &[Point2] {
        &self.tangents
    }

    pub fn normals(&self) -> Vec<Point2> {
        self.tangents.iter().map(|t| t.perp()).collect()
    }

    fn interpolated_tangent(&self, seg: usize, u: f64) -> Point2 {
        self.tangents[seg]
            .lerp(self.tangents[seg + 1], u)
            .normalized()
            .expect("adjacent tangents never cancel on a resampled path")
    }

    pub fn tangent_at(&self, s: f64) -> Result<Point2> {
        self.check_s(s)?;
        let (seg, u) = self.path.locate(s);
        Ok(self.interpolated_tangent(seg, u))
    }

    pub fn normal_at(&self, s: f64) -> Result<Point2> {
        self.tangent_at(s).map(Point2::perp)
    }

    fn check_s(&self, s: f64) -> Result<()> {
        let tol = 1e-9 * self.length().max(1.0);
        if !s.is_finite() || s < -tol || s > self.length() + tol {
            return Err(Error::OutOfDomain(format!(
                "arc length {s} outside [0, {}]",
                self.length()
            )));
        }
        Ok(())
    }

    pub fn from_frenet(&self, s: f64, d: f64) -> Result<Point2> {
        self.check_s(s)?;
        let (seg, u) = self.path.locate(s);
        let v = self.path.vertices();
        let base = v[seg].lerp(v[seg + 1], u);
        Ok(base + self.interpolated_tangent(seg, u).perp() * d)
    }

    /// Projects a planar point onto the frame. Among all foot points the one
    /// with the smallest `|d|` wins; exact ties resolve to the smaller `s`.
    pub fn to_frenet(&self, p: Point2) -> Result<FrenetPoint> {
        if !p.is_finite() {
            return Err(Error::InvalidInput("point is not finite".into()));
        }
        let v = self.path.vertices();
        let cum = self.path.cumulative_arclength();
        let mut best: Option<FrenetPoint> = None;
        for seg in 0..v.len() - 1 {
            let a = v[seg];
            let e = v[seg + 1] - a;
            let ta = self.tangents[seg];
            let dt = self.tangents[seg + 1] - ta;
            let q = p - a;
            // (q − u e)·(ta + u dt) = 0
            let c2 = -e.dot(dt);
            let c1 = q.dot(dt) - e.dot(ta);
            let c0 = q.dot(ta);
            for u in quadratic_roots(c2, c1, c0) {
                let u = polish_root(c2, c1, c0, u);
                if !(-1e-9..=1.0 + 1e-9).contains(&u) {
                    continue;
                }
                let u = u.clamp(0.0, 1.0);
                let base = a + e * u;
                let normal = self.interpolated_tangent(seg, u).perp();
                let cand = FrenetPoint {
                    s: cum[seg] + u * (cum[seg + 1] - cum[seg]),
                    d: (p - base).dot(normal),
                };
                let better = match best {
                    None => true,
                    Some(b) => cand.d.abs() < b.d.abs() - 1e-12,
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        best.ok_or_else(|| {
            Error::OutOfDomain(format!(
                "point ({}, {}) projects beyond the path ends",
                p.x, p.y
            ))
        })
    }
}

fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c1.abs().max(c0.abs());
    if c2.abs() <= 1e-13 * scale || c2 == 0.0 {
        if c1 == 0.0 {
            return Vec::new();
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / c2, c0 / q]
}

fn polish_root(c2: f64, c1: f64, c0: f64, mut u: f64) -> f64 {
    for _ in 0..3 {
        let f = (c2 * u + c1) * u + c0;
        let df = 2.0 * c2 * u + c1;
        if df == 0.0 {
            break;
        }
        u -= f / df;
    }
    u
}

/// C² lateral profile `d(σ)` over `σ ∈ [0, length]` matching position,
/// slope and second derivative at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticProfile {
    coeffs: [f64; 6],
    length: f64,
}

impl QuinticProfile {
    pub fn new(start: [f64; 3], end: [f64; 3], length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "quintic length must be positive, got {length}"
            )));
        }
        let [d0, d0p, d0pp] = start;
        let [d1, d1p, d1pp] = end;
        let t = length;
        let (c0, c1, c2) = (d0, d0p, 0.5 * d0pp);
        let h = d1 - c0 - c1 * t - c2 * t * t;
        let dv = d1p - c1 - 2.0 * c2 * t;
        let da = d1pp - 2.0 * c2;
        let c3 = (10.0 * h - 4.0 * dv * t + 0.5 * da * t * t) / t.powi(3);
        let c4 = (-15.0 * h + 7.0 * dv * t - da * t * t) / t.powi(4);
        let c5 = (6.0 * h - 3.0 * dv * t + 0.5 * da * t * t) / t.powi(5);
        Ok(Self {
            coeffs: [c0, c1, c2, c3, c4, c5],
            length,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn slope(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        (((5.0 * c[5] * x + 4.0 * c[4]) * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1]
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        ((20.0 * c[5] * x + 12.0 * c[4]) * x + 6.0 * c[3]) * x + 2.0 * c[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateConfig {
    /// Terminal lateral offsets, one candidate each.
    pub lateral_offsets: Vec<f64>,
    /// Planning distance along the base path.
    pub horizon: f64,
    /// Constant rate of progress along the base path.
    pub speed: f64,
    pub sample_spacing: f64,
}

impl CandidateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lateral_offsets.is_empty() {
            return Err(Error::InvalidConfig("no lateral offsets".into()));
        }
        if self.lateral_offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidConfig("lateral offset not finite".into()));
        }
        for (name, value) in [
            ("horizon", self.horizon),
            ("speed", self.speed),
            ("sample_spacing", self.sample_spacing),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Where candidates start: Frenet position plus heading error relative to the
/// base-path tangent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CandidateStart {
    pub s: f64,
    pub d: f64,
    pub heading_error: f64,
    pub t: f64,
}

/// One candidate per configured offset. All candidates share their start and
/// final time because `t = t₀ + (s − s₀)/speed`.
pub fn generate_candidates(
    frame: &FrenetFrame,
    start: CandidateStart,
    config: &CandidateConfig,
) -> Result<Vec<Trajectory>> {
    generate_candidates_with(frame, start, config, Execution::default())
}

pub fn generate_candidates_with(
    frame: &FrenetFrame,
    start: CandidateStart,
    config: &CandidateConfig,
    exec: Execution,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    if !(start.s.is_finite() && start.d.is_finite() && start.t.is_finite()) {
        return Err(Error::InvalidConfig("start state not finite".into()));
    }
    if start.heading_error.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidConfig(format!(
            "heading error {} is not forward along the path",
            start.heading_error
        )));
    }
    frame.check_s(start.s)?;
    let end_s = start.s + config.horizon;
    if end_s > frame.length() + 1e-9 * frame.length().max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "horizon ends at s = {end_s} beyond path length {}",
            frame.length()
        )));
    }
    let steps = ((config.horizon / config.sample_spacing - 1e-9).ceil() as usize).max(3);
    let slope0 = start.heading_error.tan();

    let build = |_: usize, &target: &f64| -> Result<Trajectory> {
        let profile = QuinticProfile::new([start.d, slope0, 0.0], [target, 0.0, 0.0], config.horizon)?;
        let points = (0..=steps)
            .map(|i| {
                let sigma = config.horizon * i as f64 / steps as f64;
                let s = (start.s + sigma).min(frame.length());
                let p = frame.from_frenet(s, profile.value(sigma))?;
                Ok(TimedPoint::new(start.t + sigma / config.speed, p.x, p.y))
            })
            .collect::<Result<Vec<_>>>()?;
        derive_kinematics(&points)
    };
    exec.map(&config.lateral_offsets, build).into_iter().collect()
}

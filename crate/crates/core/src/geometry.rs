//! Planar points and the convex shapes used for obstacles and goal regions.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Rotates by +π/2.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Self, u: f64) -> Self {
        self + (other - self) * u
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Self {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let u = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * u)
}

/// Convex polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Accepts either winding; rejects fewer than three vertices, zero area and
    /// non-convex input.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("polygon vertex not finite".into()));
        }
        let area2: f64 = (0..vertices.len())
            .map(|i| vertices[i].cross(vertices[(i + 1) % vertices.len()]))
            .sum();
        if area2.abs() <= f64::EPSILON {
            return Err(Error::InvalidInput("polygon has zero area".into()));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-12 {
                return Err(Error::InvalidInput("polygon is not convex".into()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    /// Zero inside, Euclidean distance to the boundary outside.
    pub fn distance(&self, p: Point2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disc { center: Point2, radius: f64 },
    Polygon(ConvexPolygon),
}

impl Shape {
    pub fn disc(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidInput(format!(
                "disc radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Shape::Disc { center, radius })
    }

    pub fn polygon(vertices: Vec<Point2>) -> Result<Self> {
        ConvexPolygon::new(vertices).map(Shape::Polygon)
    }

    /// Distance from `p` to the shape; zero when `p` lies inside.
    pub fn distance(&self, p: Point2) -> f64 {
        match self {
            Shape::Disc { center, radius } => (p.distance(*center) - radius).max(0.0),
            Shape::Polygon(poly) => poly.distance(p),
        }
    }

    /// Like [`Shape::distance`] but negative inside: minus the depth to the
    /// boundary.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        match self {
            Shape::Disc { center, radius } => p.distance(*center) - radius,
            Shape::Polygon(poly) => {
                if poly.contains(p) {
                    -poly
                        .edges()
                        .map(|(a, b)| point_segment_distance(p, a, b))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    poly.distance(p)
                }
            }
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Shape::Disc { center, radius } => p.distance(*center) <= *radius,
            Shape::Polygon(poly) => poly.contains(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_distance_clips_inside() {
        let d = Shape::disc(Point2::new(0.0, 0.0), 2.0).unwrap();
        assert_eq!(d.distance(Point2::new(1.0, 0.0)), 0.0);
        assert!((d.distance(Point2::new(5.0, 0.0)) - 3.0).abs() < 1e-15);
        assert!((d.signed_distance(Point2::new(0.5, 0.0)) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn polygon_winding_is_normalized() {
        let cw = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ];
        let poly = ConvexPolygon::new(cw).unwrap();
        assert!(poly.contains(Point2::new(0.5, 0.5)));
        assert!(!poly.contains(Point2::new(1.5, 0.5)));
        assert!((poly.distance(Point2::new(4.0, 0.5)) - 3.0).abs() < 1e-15);
        assert!((poly.distance(Point2::new(4.0, 5.0)) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_and_concave_polygons() {
        let line = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ];
        assert!(ConvexPolygon::new(line).is_err());
        let dart = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(0.0, 2.0),
            Point2::new(1.0, 1.0),
        ];
        assert!(ConvexPolygon::new(dart).is_err());
        assert!(Shape::disc(Point2::default(), 0.0).is_err());
    }
}

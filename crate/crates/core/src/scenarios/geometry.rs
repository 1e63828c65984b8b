//! Planar free-space geometry.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// A simple polygon given by its vertices in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
    min: Point,
    max: Point,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, String> {
        if vertices.len() < 3 {
            return Err(format!("polygon needs at least 3 vertices, got {}", vertices.len()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err("polygon vertices must be finite".into());
        }
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in &vertices {
            for k in 0..2 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        let poly = Self { vertices, min, max };
        if poly.area().abs() < 1e-12 {
            return Err("polygon has zero area".into());
        }
        Ok(poly)
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]).expect("valid rectangle")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        (self.min, self.max)
    }

    /// Signed shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    /// Even-odd point containment.
    pub fn contains(&self, p: Point) -> bool {
        if p[0] < self.min[0] || p[0] > self.max[0] || p[1] < self.min[1] || p[1] > self.max[1] {
            return false;
        }
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Whether moving in a straight line from `from` to `to` stays in free
    /// space: the end point is inside and the segment crosses no edge.
    pub fn segment_free(&self, from: Point, to: Point) -> bool {
        if !self.contains(to) {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| !segments_cross(from, to, self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = String;
    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Proper crossing of segments `pq` and `rs` (touching does not count).
fn segments_cross(p: Point, q: Point, r: Point, s: Point) -> bool {
    let d1 = cross(r, s, p);
    let d2 = cross(r, s, q);
    let d3 = cross(p, q, r);
    let d4 = cross(p, q, s);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut x = (a + PI).rem_euclid(TAU) - PI;
    if x <= -PI {
        x += TAU;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn notched() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 3.5], [7.0, 3.5], [7.0, 5.0], [0.0, 5.0]]).unwrap()
    }

    #[test]
    fn containment() {
        let p = notched();
        assert!(p.contains([1.0, 1.0]));
        assert!(p.contains([9.0, 3.0]));
        assert!(!p.contains([8.0, 4.0]));
        assert!(!p.contains([-0.1, 1.0]));
        assert!((p.area() - (50.0 - 4.5)).abs() < 1e-12);
    }

    #[test]
    fn segments_cannot_cut_the_notch() {
        let p = notched();
        // Both end points are free but the straight path enters the notch.
        assert!(p.contains([6.5, 4.5]) && p.contains([7.6, 3.4]));
        assert!(!p.segment_free([6.5, 4.5], [7.6, 3.4]));
        assert!(p.segment_free([1.0, 1.0], [2.0, 2.0]));
        assert!(!p.segment_free([9.5, 1.0], [10.5, 1.0]));
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-2.0 * PI + 0.1) - 0.1).abs() < 1e-12);
    }
}

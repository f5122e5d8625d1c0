//! Points in ℝⁿ for n ≤ 4, stored zero-padded so that norms and distances
//! need no dimension argument.

use std::ops::{Add, Mul, Sub};

pub const MAX_DIM: usize = 4;

/// Serializes as all four coordinates; deserializes from any shorter list,
/// zero-padding the rest.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Point(pub [f64; MAX_DIM]);

impl<'de> serde::Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Point, D::Error> {
        let xs = Vec::<f64>::deserialize(d)?;
        if xs.len() > MAX_DIM {
            return Err(serde::de::Error::invalid_length(
                xs.len(),
                &"at most 4 coordinates",
            ));
        }
        Ok(Point::from_slice(&xs))
    }
}

impl Point {
    pub const ORIGIN: Point = Point([0.0; MAX_DIM]);

    pub fn from_slice(xs: &[f64]) -> Point {
        let mut p = [0.0; MAX_DIM];
        p[..xs.len()].copy_from_slice(xs);
        Point(p)
    }

    pub fn axis(axis: usize, len: f64) -> Point {
        let mut p = Point::ORIGIN;
        p.0[axis] = len;
        p
    }

    pub fn to_vec(self, dim: usize) -> Vec<f64> {
        self.0[..dim].to_vec()
    }

    pub fn dot(self, o: Point) -> f64 {
        self.0.iter().zip(o.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn dist_sq(self, o: Point) -> f64 {
        (self - o).norm_sq()
    }

    pub fn scale(self, s: f64) -> Point {
        Point(self.0.map(|x| x * s))
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self.scale(1.0 / n)
        }
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self).scale(t)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a += b;
        }
        Point(r)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a -= b;
        }
        Point(r)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        self.scale(s)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab.scale(t))
}

/// Distance between closed segments `[p1, q1]` and `[p2, q2]`.
///
/// Clamped closest-point computation in the style of Ericson's
/// "Real-Time Collision Detection", valid in any dimension.
pub fn segment_segment_dist(p1: Point, q1: Point, p2: Point, q2: Point) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(r);
    let eps = 1e-300;
    let (s, t);
    if a <= eps && e <= eps {
        return p1.dist(p2);
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-18 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1.scale(s);
    let c2 = p2 + d2.scale(t);
    let direct = c1.dist(c2);
    // Endpoint distances guard the near-parallel branch.
    direct
        .min(point_segment_dist(p1, p2, q2))
        .min(point_segment_dist(q1, p2, q2))
        .min(point_segment_dist(p2, p1, q1))
        .min(point_segment_dist(q2, p1, q1))
}

pub fn polyline_length(path: &[Point]) -> f64 {
    path.windows(2).map(|w| w[0].dist(w[1])).sum()
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub dim: usize,
    pub radius: f64,
    /// Centers p_i, in input order; ball i is B_{2 r_i}(p_i).
    pub centers: Vec<Point>,
    /// Half-angle of the cone from the origin over each ball.
    pub half_angles: Vec<f64>,
}

impl Packing {
    /// Angular slack between the shadows of balls i and j: the angle between
    /// their centers minus both half-angles.
    pub fn shadow_gap(&self, i: usize, j: usize) -> f64 {
        angle(self.centers[i], self.centers[j]) - self.half_angles[i] - self.half_angles[j]
    }
}

fn angle(a: Point, b: Point) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

/// Unit directions: evenly spaced on the circle, or a Fibonacci lattice on S².
pub fn directions(dim: usize, count: usize) -> Vec<Point> {
    crate::kb_router::sphere_points(dim, count, 1.0)
}

/// Places the balls B_{2 r_i}(p_i) inside B_R, R = C·(Σ r_i^{n−1})^{1/(n−1)},
/// with centers on |p| = R − 2·max r and pairwise disjoint radial shadows
/// (separated by at least `spacing` along ∂B_R). Greedy by decreasing
/// radius; each ball goes to the candidate direction with the most slack.
pub fn pack_balls(dim: usize, radii: &[f64], c: f64, spacing: f64) -> Result<Packing> {
    if !(2..=3).contains(&dim) {
        return Err(Error::BadDimension(dim));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::PackingFailed(format!("radius {r} is not positive")));
    }
    let e = dim as f64 - 1.0;
    let radius = c * radii.iter().map(|r| r.powf(e)).sum::<f64>().powf(1.0 / e);
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let shell = radius - 2.0 * r_max;
    if radii.is_empty() {
        return Ok(Packing {
            dim,
            radius,
            centers: Vec::new(),
            half_angles: Vec::new(),
        });
    }
    if shell < radius / 2.0 - 1e-9 || shell < 2.0 * r_max {
        return Err(Error::PackingFailed(format!(
            "C = {c} leaves no shell for radius {r_max}"
        )));
    }
    let half_angles: Vec<f64> = radii.iter().map(|r| (2.0 * r / shell).asin()).collect();
    let gap = 2.0 * (spacing / (2.0 * radius)).min(1.0).asin();
    let theta_min = half_angles.iter().copied().fold(f64::INFINITY, f64::min);
    let count = if dim == 2 {
        ((32.0 / theta_min) as usize).clamp(64, 1 << 14)
    } else {
        ((64.0 / (theta_min * theta_min)) as usize).clamp(256, 1 << 15)
    };
    let dirs = directions(dim, count);

    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&i, &j| radii[j].total_cmp(&radii[i]).then(i.cmp(&j)));
    let mut placed: Vec<(Point, f64)> = Vec::new();
    let mut centers = vec![Point::ORIGIN; radii.len()];
    for &i in &order {
        let th = half_angles[i];
        let mut best: Option<(f64, Point)> = None;
        for &d in &dirs {
            let slack = placed
                .iter()
                .map(|&(q, tq)| angle(d, q) - tq - th - gap)
                .fold(f64::INFINITY, f64::min);
            if slack >= 0.0 && best.map_or(true, |(s, _)| slack > s) {
                best = Some((slack, d));
            }
        }
        let Some((_, d)) = best else {
            return Err(Error::PackingFailed(format!(
                "no direction for ball {i} (radius {}) with C = {c}",
                radii[i]
            )));
        };
        placed.push((d, th));
        centers[i] = d.scale(shell);
    }
    Ok(Packing {
        dim,
        radius,
        centers,
        half_angles,
    })
}

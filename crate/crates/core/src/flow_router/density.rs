use serde::{Deserialize, Serialize};

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub ok: bool,
    /// max over witness balls of count / r^(n-1).
    pub ratio: f64,
    pub worst_center: Option<Vec<f64>>,
    pub worst_radius: f64,
    pub worst_count: usize,
    /// Largest count minus `C r^(n-1)`; positive exactly when the check fails.
    pub excess: f64,
}

/// Checks |points ∩ B_r| ≤ C r^(n-1) over witness balls with radii
/// 1, 1.5, ... and centers on the half grid through the first point,
/// restricted to the points' bounding box.
pub fn check_ball_density(dim: usize, points: &[Point], c: f64) -> DensityReport {
    let mut report = DensityReport {
        ok: true,
        ratio: 0.0,
        worst_center: None,
        worst_radius: 0.0,
        worst_count: 0,
        excess: f64::NEG_INFINITY,
    };
    let Some(&anchor) = points.first() else {
        return report;
    };
    let mut lo = [0i64; 4];
    let mut hi = [0i64; 4];
    for a in 0..dim {
        let ks = points.iter().map(|p| (p.0[a] - anchor.0[a]) * 2.0);
        lo[a] = ks.clone().fold(f64::INFINITY, f64::min).floor() as i64;
        hi[a] = ks.fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
    }
    let extent = (0..dim)
        .map(|a| ((hi[a] - lo[a]) as f64 / 2.0).powi(2))
        .sum::<f64>()
        .sqrt();
    let max_r2 = (2.0 * (extent + 1.0)).ceil() as i64;
    let mut k = lo;
    let mut dists = Vec::with_capacity(points.len());
    loop {
        let mut q = anchor;
        for a in 0..dim {
            q.0[a] += k[a] as f64 / 2.0;
        }
        dists.clear();
        dists.extend(points.iter().map(|p| p.dist_sq(q)));
        dists.sort_by(f64::total_cmp);
        for twice_r in 2..=max_r2 {
            let r = twice_r as f64 / 2.0;
            let count = dists.partition_point(|&d| d <= r * r + 1e-9);
            if count == 0 {
                continue;
            }
            let scale = r.powi(dim as i32 - 1);
            let ratio = count as f64 / scale;
            if ratio > report.ratio {
                report.ratio = ratio;
                report.worst_center = Some(q.to_vec(dim));
                report.worst_radius = r;
                report.worst_count = count;
            }
            let excess = count as f64 - c * scale;
            if excess > report.excess {
                report.excess = excess;
            }
            if count == points.len() {
                break;
            }
        }
        let mut a = dim;
        loop {
            if a == 0 {
                report.ok = report.excess <= 1e-9;
                return report;
            }
            a -= 1;
            if k[a] < hi[a] {
                k[a] += 1;
                break;
            }
            k[a] = lo[a];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_passes() {
        let r = check_ball_density(3, &[], 1.0);
        assert!(r.ok);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn stacked_points_peak_at_unit_radius() {
        let p = Point::from_slice(&[0.5, 0.0, 0.0]);
        let pts = vec![p; 7];
        let r = check_ball_density(3, &pts, 8.0);
        assert!(r.ok);
        assert_eq!(r.ratio, 7.0);
        assert_eq!(r.worst_radius, 1.0);
        assert!(!check_ball_density(3, &pts, 6.0).ok);
    }
}

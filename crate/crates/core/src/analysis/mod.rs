//! Dilation and winding utilities, the U_N counterexample family, fiber
//! diagnostics for PL maps into U_N, and an implicit-surface voxelizer.

mod counterexample;
mod mesh;
mod voxelize;
mod witness;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::point_segment_dist;
use crate::geometry::Point;

pub use counterexample::{
    generate_counterexample, ColumnGrid, CoreCurve, Counterexample, CounterexampleAudit,
    CounterexampleSpec,
};
pub use mesh::{ball_mesh, voxel_mesh, TetMesh};
pub use voxelize::voxelize_implicit;
pub use witness::{dilation_witness, WitnessConfig, WitnessReport};

/// An n×n matrix, row-major: the differential of an affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMapSpec {
    pub matrix: Vec<Vec<f64>>,
}

impl LinearMapSpec {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.matrix.len();
        if n == 0 || self.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::BadConfig(format!(
                "matrix must be square, got {n} rows"
            )));
        }
        Ok(DMatrix::from_row_iterator(
            n,
            n,
            self.matrix.iter().flatten().copied(),
        ))
    }
}

/// Product of the k largest singular values of `a`.
pub fn k_dilation(a: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = a.nrows().min(a.ncols());
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut s: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s[..k].iter().product())
}

/// diag(L^{(n−2)/(n−1)}, L^{−1/(n−1)}, …): stretches one axis by far more
/// than it shrinks the others, yet has (n−1)-dilation 1.
pub fn ellipse_map(n: usize, l: f64) -> DMatrix<f64> {
    let e = n as f64 - 1.0;
    let mut d = vec![l.powf(-1.0 / e); n];
    d[0] = l.powf((n as f64 - 2.0) / e);
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
}

/// Winding number of the closed polyline `lp` (last point joined back to
/// the first) about `p`, by summing signed turning angles.
pub fn winding_number(lp: &[[f64; 2]], p: [f64; 2]) -> Result<i64> {
    if lp.is_empty() {
        return Ok(0);
    }
    let pt = |q: [f64; 2]| Point::from_slice(&q);
    let mut total = 0.0;
    for i in 0..lp.len() {
        let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if point_segment_dist(pt(p), pt(a), pt(b)) < 1e-12 {
            return Err(Error::PointOnCurve);
        }
        let (ax, ay) = (a[0] - p[0], a[1] - p[1]);
        let (bx, by) = (b[0] - p[0], b[1] - p[1]);
        total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    let w = total / std::f64::consts::TAU;
    let rounded = w.round();
    if (w - rounded).abs() >= 0.1 {
        return Err(Error::NonIntegralWinding(w));
    }
    Ok(rounded as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_dilation() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((k_dilation(&i, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(k_dilation(&i, 0), Err(Error::BadK { k: 0, n: 3 }));
        assert_eq!(k_dilation(&i, 4), Err(Error::BadK { k: 4, n: 3 }));
    }

    #[test]
    fn ellipse_has_unit_dilation() {
        let a = ellipse_map(3, 8.0);
        assert!((a[(0, 0)] - 8f64.sqrt()).abs() < 1e-14);
        assert!((a[(1, 1)] - 8f64.powf(-0.5)).abs() < 1e-14);
        assert!((k_dilation(&a, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(k_dilation(&a, 1).unwrap() > 2.8);
    }

    #[test]
    fn spec_matrix() {
        let s = LinearMapSpec {
            matrix: vec![vec![2.0, 0.0], vec![0.0, 3.0]],
        };
        assert!((k_dilation(&s.to_matrix().unwrap(), 2).unwrap() - 6.0).abs() < 1e-12);
        assert!(LinearMapSpec {
            matrix: vec![vec![1.0, 2.0]]
        }
        .to_matrix()
        .is_err());
    }

    #[test]
    fn square_windings() {
        let sq = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        assert_eq!(winding_number(&sq, [0.0, 0.0]).unwrap(), 1);
        assert_eq!(winding_number(&sq, [3.0, 0.0]).unwrap(), 0);
        let rev: Vec<[f64; 2]> = sq.iter().rev().copied().collect();
        assert_eq!(winding_number(&rev, [0.2, 0.1]).unwrap(), -1);
        assert_eq!(winding_number(&sq, [1.0, 0.0]), Err(Error::PointOnCurve));
    }
}

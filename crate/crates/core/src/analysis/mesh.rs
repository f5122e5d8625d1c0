use std::collections::HashMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::counterexample::ColumnGrid;

/// Tetrahedral mesh with a PL map: `images[v]` is the image of vertex v.
/// JSON: `{ "vertices": [...], "tets": [...], "images": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TetMesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub images: Vec<[f64; 3]>,
}

/// The six tetrahedra of a cube along monotone corner paths; consistent
/// across neighbouring cubes.
const KUHN: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn kuhn_tets(corner: impl Fn([usize; 3]) -> usize) -> impl Iterator<Item = [usize; 4]> {
    KUHN.into_iter().map(move |perm| {
        let mut b = [0usize; 3];
        let mut t = [corner(b); 4];
        for (s, &ax) in perm.iter().enumerate() {
            b[ax] = 1;
            t[s + 1] = corner(b);
        }
        t
    })
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl TetMesh {
    pub fn validate(&self) -> Result<()> {
        if self.images.len() != self.vertices.len() {
            return Err(Error::BadMesh(format!(
                "{} images for {} vertices",
                self.images.len(),
                self.vertices.len()
            )));
        }
        if self.tets.is_empty() {
            return Err(Error::BadMesh("no tetrahedra".into()));
        }
        for (i, t) in self.tets.iter().enumerate() {
            if t.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::BadMesh(format!("tet {i} uses a missing vertex")));
            }
            if self.edge_matrix(i).determinant().abs() < 1e-15 {
                return Err(Error::BadMesh(format!("tet {i} is degenerate")));
            }
        }
        if self
            .vertices
            .iter()
            .chain(&self.images)
            .flatten()
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    fn edge_matrix(&self, t: usize) -> Matrix3<f64> {
        let [a, b, c, d] = self.tets[t].map(|v| self.vertices[v]);
        let cols = [sub(b, a), sub(c, a), sub(d, a)];
        Matrix3::from_fn(|r, col| cols[col][r])
    }

    /// Differential of the affine map on tet t.
    pub fn differential(&self, t: usize) -> Matrix3<f64> {
        let [a, b, c, d] = self.tets[t].map(|v| self.images[v]);
        let cols = [sub(b, a), sub(c, a), sub(d, a)];
        let img = Matrix3::from_fn(|r, col| cols[col][r]);
        img * self
            .edge_matrix(t)
            .try_inverse()
            .unwrap_or_else(Matrix3::zeros)
    }

    /// Triangles on exactly one tet, as sorted vertex triples.
    pub fn boundary_triangles(&self) -> Vec<[usize; 3]> {
        let mut count: HashMap<[usize; 3], usize> = HashMap::new();
        for t in &self.tets {
            for skip in 0..4 {
                let mut f = [0usize; 3];
                let mut n = 0;
                for (i, &v) in t.iter().enumerate() {
                    if i != skip {
                        f[n] = v;
                        n += 1;
                    }
                }
                f.sort_unstable();
                *count.entry(f).or_insert(0) += 1;
            }
        }
        let mut out: Vec<[usize; 3]> = count
            .into_iter()
            .filter(|e| e.1 == 1)
            .map(|e| e.0)
            .collect();
        out.sort_unstable();
        out
    }
}

/// Kuhn-split k³ grid on [−1, 1]³, pushed radially onto the unit ball;
/// images are the identity.
pub fn ball_mesh(k: usize) -> TetMesh {
    let n = k + 1;
    let idx = |i: usize, j: usize, l: usize| (i * n + j) * n + l;
    let mut vertices = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let c = [i, j, l].map(|t| -1.0 + 2.0 * t as f64 / k as f64);
                let inf = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let two = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                let s = if two > 0.0 { inf / two } else { 0.0 };
                vertices.push(c.map(|x| x * s));
            }
        }
    }
    let mut tets = Vec::with_capacity(6 * k * k * k);
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                tets.extend(kuhn_tets(|b| idx(i + b[0], j + b[1], l + b[2])));
            }
        }
    }
    TetMesh {
        images: vertices.clone(),
        vertices,
        tets,
    }
}

/// Kuhn-split mesh of the cells of a column grid, on the lattice of cell
/// corners; images are the identity.
pub fn voxel_mesh(g: &ColumnGrid) -> TetMesh {
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let corner = |p: [usize; 3]| p.map(|t| (g.offset + t as i64) as f64 * g.h);
    for i in 0..g.nx {
        for j in 0..g.ny {
            for r in &g.runs[i * g.ny + j] {
                for k in r.0 as usize..r.1 as usize {
                    let mut id = |b: [usize; 3]| {
                        let p = [i + b[0], j + b[1], k + b[2]];
                        *index.entry(p).or_insert_with(|| {
                            vertices.push(corner(p));
                            vertices.len() - 1
                        })
                    };
                    let mut corners = [0usize; 8];
                    for (c, slot) in corners.iter_mut().enumerate() {
                        *slot = id([c & 1, (c >> 1) & 1, (c >> 2) & 1]);
                    }
                    tets.extend(kuhn_tets(|b| corners[b[0] | (b[1] << 1) | (b[2] << 2)]));
                }
            }
        }
    }
    TetMesh {
        images: vertices.clone(),
        vertices,
        tets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_split() {
        let m = ball_mesh(1);
        assert_eq!(m.tets.len(), 6);
        m.validate().unwrap();
        let vol: f64 = (0..6)
            .map(|t| m.edge_matrix(t).determinant().abs() / 6.0)
            .sum();
        // Corners of [−1,1]³ pushed onto the sphere: a cube of side 2/√3.
        assert!((vol - (2.0f64 / 3f64.sqrt()).powi(3)).abs() < 1e-12);
        assert_eq!(m.boundary_triangles().len(), 12);
    }

    #[test]
    fn ball_boundary_on_sphere() {
        let m = ball_mesh(6);
        m.validate().unwrap();
        for f in m.boundary_triangles() {
            for v in f {
                let p = m.vertices[v];
                assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-12);
            }
        }
        assert!(m
            .differential(5)
            .iter()
            .zip(Matrix3::<f64>::identity().iter())
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

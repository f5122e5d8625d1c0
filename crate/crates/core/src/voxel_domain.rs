//! Voxelized domains on the integer lattice, their grid graphs, and G-balls.
//!
//! A cell is named by its min-corner; the closed unit cell `c + [0,1]^n`.
//! Volumes are face or cell counts times powers of the scale, never
//! floating-point measure.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, MAX_DIM};

pub type Cell = [i64; MAX_DIM];

/// A facet of a domain cell: the side of `cell` facing `±e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub cell: Cell,
    pub axis: usize,
    pub positive: bool,
}

impl Face {
    /// The cell on the other side of the face.
    pub fn across(&self) -> Cell {
        step(self.cell, self.axis, if self.positive { 1 } else { -1 })
    }

    /// Center of the face in lattice units.
    pub fn center(&self) -> Point {
        let mut p = cell_center(self.cell);
        p.0[self.axis] += if self.positive { 0.5 } else { -0.5 };
        p
    }
}

pub fn step(mut c: Cell, axis: usize, by: i64) -> Cell {
    c[axis] += by;
    c
}

/// Center of a cell in lattice units.
pub fn cell_center(c: Cell) -> Point {
    let mut p = Point::ORIGIN;
    for (x, &ci) in p.0.iter_mut().zip(c.iter()) {
        *x = ci as f64 + 0.5;
    }
    p
}

/// Squared distance from `p` to the closed cell `c`.
pub fn cell_dist_sq(p: Point, c: Cell, dim: usize) -> f64 {
    let mut d = 0.0;
    for a in 0..dim {
        let lo = c[a] as f64;
        let x = p.0[a];
        let g = if x < lo {
            lo - x
        } else if x > lo + 1.0 {
            x - lo - 1.0
        } else {
            0.0
        };
        d += g * g;
    }
    d
}

#[derive(Debug, Clone)]
pub struct VoxelDomain {
    dim: usize,
    scale: f64,
    cells: Vec<Cell>,
    index: HashMap<Cell, usize>,
    boundary: Vec<Face>,
}

impl VoxelDomain {
    pub fn from_cells<I>(dim: usize, cells: I) -> Result<VoxelDomain>
    where
        I: IntoIterator<Item = Cell>,
    {
        Self::with_scale(dim, 1.0, cells)
    }

    pub fn with_scale<I>(dim: usize, scale: f64, cells: I) -> Result<VoxelDomain>
    where
        I: IntoIterator<Item = Cell>,
    {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::BadDimension(dim));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::BadConfig(format!("scale {scale} must be positive")));
        }
        let mut cells: Vec<Cell> = cells.into_iter().collect();
        for c in &cells {
            if c[dim..].iter().any(|&x| x != 0) {
                return Err(Error::BadCell {
                    cell: c.to_vec(),
                    got: MAX_DIM,
                    expected: dim,
                });
            }
        }
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let index: HashMap<Cell, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut boundary = Vec::new();
        for &c in &cells {
            for axis in 0..dim {
                for positive in [false, true] {
                    let f = Face {
                        cell: c,
                        axis,
                        positive,
                    };
                    if !index.contains_key(&f.across()) {
                        boundary.push(f);
                    }
                }
            }
        }
        if boundary.is_empty() {
            return Err(Error::NoBoundary);
        }
        Ok(VoxelDomain {
            dim,
            scale,
            cells,
            index,
            boundary,
        })
    }

    /// Builds a domain from coordinate lists of length `dim`.
    pub fn from_coords(dim: usize, scale: f64, coords: &[Vec<i64>]) -> Result<VoxelDomain> {
        let mut cells = Vec::with_capacity(coords.len());
        for c in coords {
            if c.len() != dim {
                return Err(Error::BadCell {
                    cell: c.clone(),
                    got: c.len(),
                    expected: dim,
                });
            }
            let mut cell = [0; MAX_DIM];
            cell[..dim].copy_from_slice(c);
            cells.push(cell);
        }
        Self::with_scale(dim, scale, cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Cells in lexicographic order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &Cell) -> bool {
        self.index.contains_key(c)
    }

    pub fn index_of(&self, c: &Cell) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn boundary_faces(&self) -> &[Face] {
        &self.boundary
    }

    /// (n−1)-volume of the boundary.
    pub fn boundary_area(&self) -> f64 {
        self.boundary.len() as f64 * self.scale.powi(self.dim as i32 - 1)
    }

    pub fn volume(&self) -> f64 {
        self.cells.len() as f64 * self.scale.powi(self.dim as i32)
    }

    /// Faces shared by two domain cells, named by the lower cell and axis.
    pub fn interior_faces(&self) -> impl Iterator<Item = (Cell, usize)> + '_ {
        self.cells.iter().flat_map(move |&c| {
            (0..self.dim).filter_map(move |a| self.contains(&step(c, a, 1)).then_some((c, a)))
        })
    }

    /// Number of boundary faces of each cell, indexed like `cells()`.
    pub fn boundary_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cells.len()];
        for f in &self.boundary {
            counts[self.index[&f.cell]] += 1;
        }
        counts
    }

    /// Min and max cell coordinates per axis.
    pub fn bounding_box(&self) -> (Cell, Cell) {
        let mut lo = [0; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        for a in 0..self.dim {
            lo[a] = self.cells.iter().map(|c| c[a]).min().unwrap();
            hi[a] = self.cells.iter().map(|c| c[a]).max().unwrap();
        }
        (lo, hi)
    }

    /// Face-connected components, each sorted, ordered by their first cell.
    pub fn components(&self) -> Vec<Vec<Cell>> {
        let mut seen = vec![false; self.cells.len()];
        let mut out = Vec::new();
        for start in 0..self.cells.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![self.cells[start]];
            let mut queue = VecDeque::from([self.cells[start]]);
            while let Some(c) = queue.pop_front() {
                for a in 0..self.dim {
                    for by in [-1, 1] {
                        if let Some(j) = self.index_of(&step(c, a, by)) {
                            if !seen[j] {
                                seen[j] = true;
                                comp.push(self.cells[j]);
                                queue.push_back(self.cells[j]);
                            }
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Cell-step distance from each cell to the nearest cell carrying a
    /// boundary face (0 for those cells).
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.cells.len()];
        let mut queue = VecDeque::new();
        for f in &self.boundary {
            let i = self.index[&f.cell];
            if depth[i] == usize::MAX {
                depth[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let c = self.cells[i];
            for a in 0..self.dim {
                for by in [-1, 1] {
                    if let Some(j) = self.index_of(&step(c, a, by)) {
                        if depth[j] == usize::MAX {
                            depth[j] = depth[i] + 1;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        depth
    }

    /// The sub-domain of cells passing `keep`, or `None` when empty.
    pub fn restrict(&self, keep: impl Fn(&Cell) -> bool) -> Option<VoxelDomain> {
        let cells: Vec<Cell> = self.cells.iter().copied().filter(|c| keep(c)).collect();
        VoxelDomain::with_scale(self.dim, self.scale, cells).ok()
    }

    pub fn to_file(&self) -> DomainFile {
        DomainFile {
            dim: self.dim,
            scale: self.scale,
            cells: self.cells.iter().map(|c| c[..self.dim].to_vec()).collect(),
        }
    }

    pub fn from_file(f: &DomainFile) -> Result<VoxelDomain> {
        VoxelDomain::from_coords(f.dim, f.scale, &f.cells)
    }

    /// Builds G(U, ω) on the grid offset by ω/2, so that the interior
    /// vertices are cell centers and the boundary vertices face centers.
    pub fn grid_graph(&self) -> GridGraph {
        let mut vertices: Vec<GridVertex> = self
            .cells
            .iter()
            .map(|&c| GridVertex {
                pos: cell_center(c).scale(self.scale),
                kind: VertexKind::Interior(c),
            })
            .collect();
        let mut edges = Vec::new();
        for (c, axis) in self.interior_faces() {
            edges.push(GridEdge {
                a: self.index[&c],
                b: self.index[&step(c, axis, 1)],
            });
        }
        for f in &self.boundary {
            let v = vertices.len();
            vertices.push(GridVertex {
                pos: f.center().scale(self.scale),
                kind: VertexKind::Boundary(*f),
            });
            edges.push(GridEdge {
                a: self.index[&f.cell],
                b: v,
            });
        }
        GridGraph {
            dim: self.dim,
            scale: self.scale,
            interior_count: self.cells.len(),
            vertices,
            edges,
        }
    }
}

/// JSON domain file: `{ "dim": n, "scale": ω, "cells": [[x, y, z], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainFile {
    pub dim: usize,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    pub cells: Vec<Vec<i64>>,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexKind {
    Interior(Cell),
    Boundary(Face),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridVertex {
    pub pos: Point,
    pub kind: VertexKind,
}

impl GridVertex {
    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, VertexKind::Boundary(_))
    }
}

/// Edge between vertex indices `a` and `b`; `a` is always an interior vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridEdge {
    pub a: usize,
    pub b: usize,
}

/// G(U, ω): interior vertices come first, in cell order, followed by one
/// boundary vertex per boundary face.
#[derive(Debug, Clone)]
pub struct GridGraph {
    pub dim: usize,
    pub scale: f64,
    pub interior_count: usize,
    pub vertices: Vec<GridVertex>,
    pub edges: Vec<GridEdge>,
}

impl GridGraph {
    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior_count..self.vertices.len()
    }

    pub fn interior_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.b < self.interior_count)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    pub fn edge_length(&self, e: &GridEdge) -> f64 {
        self.vertices[e.a].pos.dist(self.vertices[e.b].pos)
    }
}

/// B^G_r(p): the closed lattice cells meeting the closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct GBall {
    pub dim: usize,
    pub center: Point,
    pub radius: f64,
    cells: Vec<Cell>,
}

impl GBall {
    pub fn new(dim: usize, center: Point, radius: f64) -> GBall {
        let r2 = radius * radius;
        let mut lo = [0; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        for a in 0..dim {
            lo[a] = (center.0[a] - radius).floor() as i64 - 1;
            hi[a] = (center.0[a] + radius).floor() as i64;
        }
        let mut cells = Vec::new();
        let mut c = lo;
        loop {
            if cell_dist_sq(center, c, dim) <= r2 {
                cells.push(c);
            }
            let mut a = dim;
            loop {
                if a == 0 {
                    cells.sort_unstable();
                    return GBall {
                        dim,
                        center,
                        radius,
                        cells,
                    };
                }
                a -= 1;
                if c[a] < hi[a] {
                    c[a] += 1;
                    break;
                }
                c[a] = lo[a];
            }
        }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn contains(&self, c: &Cell) -> bool {
        cell_dist_sq(self.center, *c, self.dim) <= self.radius * self.radius
    }

    pub fn is_subset_of(&self, other: &GBall) -> bool {
        self.cells.iter().all(|c| other.contains(c))
    }

    /// Faces with exactly one adjacent cell in the G-ball.
    pub fn boundary_face_count(&self) -> usize {
        let set: HashSet<Cell> = self.cells.iter().copied().collect();
        self.cells
            .iter()
            .map(|&c| {
                (0..self.dim)
                    .flat_map(|a| [step(c, a, 1), step(c, a, -1)])
                    .filter(|n| !set.contains(n))
                    .count()
            })
            .sum()
    }

    /// Boundary faces of `w` whose domain-side cell lies in the ball:
    /// the face count of ∂W ∩ B^G_r.
    pub fn domain_boundary_inside(&self, w: &VoxelDomain) -> usize {
        w.boundary_faces()
            .iter()
            .filter(|f| self.contains(&f.cell))
            .count()
    }

    /// Faces between two cells of `w` with exactly one of them in the ball:
    /// the face count of W ∩ ∂B^G_r.
    pub fn domain_cut(&self, w: &VoxelDomain) -> usize {
        w.interior_faces()
            .filter(|&(c, a)| self.contains(&c) != self.contains(&step(c, a, 1)))
            .count()
    }

    /// vol(∂W ∩ B^G_r) in the units of `w`.
    pub fn boundary_volume_inside(&self, w: &VoxelDomain) -> f64 {
        self.domain_boundary_inside(w) as f64 * w.scale().powi(w.dim() as i32 - 1)
    }

    /// vol(W ∩ ∂B^G_r) in the units of `w`.
    pub fn cut_volume(&self, w: &VoxelDomain) -> f64 {
        self.domain_cut(w) as f64 * w.scale().powi(w.dim() as i32 - 1)
    }
}

pub fn g_ball(dim: usize, center: Point, radius: f64) -> GBall {
    GBall::new(dim, center, radius)
}

/// Axis-aligned box of cells `lo..hi` (exclusive) in the first `dim` axes.
pub fn box_cells(dim: usize, lo: &[i64], hi: &[i64]) -> Vec<Cell> {
    let mut out = Vec::new();
    let mut c = [0; MAX_DIM];
    c[..dim].copy_from_slice(&lo[..dim]);
    if (0..dim).any(|a| lo[a] >= hi[a]) {
        return out;
    }
    loop {
        out.push(c);
        let mut a = dim;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if c[a] + 1 < hi[a] {
                c[a] += 1;
                break;
            }
            c[a] = lo[a];
        }
    }
}

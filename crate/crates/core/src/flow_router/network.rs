use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::max_flow::Digraph;

/// The bidirected half-grid network on G(B_R(center), 1/2).
///
/// Capacities: out-arcs of a source split its demand; arcs into sources
/// and out of sinks carry 0; every other grid arc carries `m`. Each sink
/// also has a unit arc to the virtual `exit` vertex, so distinct paths end
/// at distinct sinks.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub dim: usize,
    pub center: Point,
    pub radius: f64,
    pub m: i64,
    pub vertices: Vec<Point>,
    pub graph: Digraph,
    /// Arcs `0..grid_arc_count` are grid arcs, stored as pairs (2i, 2i + 1)
    /// in opposite directions.
    pub grid_arc_count: usize,
    pub sources: Vec<(usize, i64)>,
    pub sinks: Vec<usize>,
    pub exit: usize,
    lookup: HashMap<[i64; 4], usize>,
}

impl FlowNetwork {
    pub fn vertex_at(&self, p: Point) -> Option<usize> {
        half_grid_key(self.dim, self.center, p).and_then(|k| self.lookup.get(&k).copied())
    }

    pub fn total_demand(&self) -> i64 {
        self.sources.iter().map(|s| s.1).sum()
    }

    pub fn source_out_capacity(&self, v: usize) -> i64 {
        self.graph.arcs[..self.grid_arc_count]
            .iter()
            .filter(|a| a.from == v)
            .map(|a| a.cap)
            .sum()
    }
}

fn half_grid_key(dim: usize, center: Point, p: Point) -> Option<[i64; 4]> {
    let mut k = [0i64; 4];
    for a in 0..dim {
        let x = (p.0[a] - center.0[a]) * 2.0;
        let r = x.round();
        if (x - r).abs() > 1e-6 {
            return None;
        }
        k[a] = r as i64;
    }
    Some(k)
}

/// Vertices of `center + (1/2)Z^n` inside the closed ball, lexicographic in
/// their offsets.
pub fn half_grid_vertices(dim: usize, center: Point, radius: f64) -> Vec<([i64; 4], Point)> {
    let kmax = (2.0 * radius).floor() as i64;
    let r2 = radius * radius + 1e-9;
    let mut out = Vec::new();
    let mut k = [0i64; 4];
    for a in 0..dim {
        k[a] = -kmax;
    }
    loop {
        let mut off = Point::ORIGIN;
        for a in 0..dim {
            off.0[a] = k[a] as f64 / 2.0;
        }
        if off.norm_sq() <= r2 {
            out.push((k, center + off));
        }
        let mut a = dim;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if k[a] < kmax {
                k[a] += 1;
                break;
            }
            k[a] = -kmax;
        }
    }
}

/// Builds the capacity network for `placements` (a multiset of half-grid
/// vertices) in the ball of radius `radius` about `center`.
///
/// `sink_filter` selects which outer-shell vertices may absorb a path.
pub fn build_network(
    dim: usize,
    center: Point,
    radius: f64,
    placements: &[Point],
    m: i64,
    sink_filter: impl Fn(Point) -> bool,
) -> Result<FlowNetwork> {
    if m < 1 {
        return Err(Error::BadConfig("capacity M must be at least 1".into()));
    }
    let verts = half_grid_vertices(dim, center, radius);
    let lookup: HashMap<[i64; 4], usize> = verts
        .iter()
        .enumerate()
        .map(|(i, (k, _))| (*k, i))
        .collect();
    let vertices: Vec<Point> = verts.iter().map(|v| v.1).collect();

    let mut demand: HashMap<usize, i64> = HashMap::new();
    for &p in placements {
        if p.dist(center) > radius + 1e-9 {
            return Err(Error::PlacementOutsideBall(p.to_vec(dim)));
        }
        let k =
            half_grid_key(dim, center, p).ok_or_else(|| Error::PlacementOffGrid(p.to_vec(dim)))?;
        let v = *lookup
            .get(&k)
            .ok_or_else(|| Error::PlacementOutsideBall(p.to_vec(dim)))?;
        *demand.entry(v).or_insert(0) += 1;
    }
    let mut sources: Vec<(usize, i64)> = demand.into_iter().collect();
    sources.sort_unstable();

    let shell = radius - 0.5;
    let is_source: Vec<bool> = {
        let mut s = vec![false; vertices.len()];
        for &(v, _) in &sources {
            s[v] = true;
        }
        s
    };
    let sinks: Vec<usize> = (0..vertices.len())
        .filter(|&v| !is_source[v] && vertices[v].dist(center) > shell && sink_filter(vertices[v]))
        .collect();
    let mut is_sink = vec![false; vertices.len()];
    for &t in &sinks {
        is_sink[t] = true;
    }

    let mut graph = Digraph::new(vertices.len() + 1);
    let exit = vertices.len();
    let mut out_arcs: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, (k, _)) in verts.iter().enumerate() {
        for a in 0..dim {
            let mut nk = *k;
            nk[a] += 1;
            if let Some(&j) = lookup.get(&nk) {
                for (u, v) in [(i, j), (j, i)] {
                    let cap = if is_source[v] || is_sink[u] { 0 } else { m };
                    let idx = graph.add_arc(u, v, cap);
                    if is_source[u] {
                        out_arcs.entry(u).or_default().push(idx);
                    }
                }
            }
        }
    }
    for &(s, d) in &sources {
        let arcs = out_arcs.get(&s).cloned().unwrap_or_default();
        let usable: Vec<usize> = arcs
            .into_iter()
            .filter(|&e| !is_source[graph.arcs[e].to])
            .collect();
        for &e in &usable {
            graph.arcs[e].cap = 0;
        }
        if usable.is_empty() {
            continue;
        }
        let base = d / usable.len() as i64;
        let extra = (d % usable.len() as i64) as usize;
        for (n, &e) in usable.iter().enumerate() {
            graph.arcs[e].cap = base + i64::from(n < extra);
        }
    }
    let grid_arc_count = graph.arcs.len();
    for &t in &sinks {
        graph.add_arc(t, exit, 1);
    }
    Ok(FlowNetwork {
        dim,
        center,
        radius,
        m,
        vertices,
        graph,
        grid_arc_count,
        sources,
        sinks,
        exit,
        lookup,
    })
}

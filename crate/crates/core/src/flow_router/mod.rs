//! Boundary routing by integral max-flow on the half grid of a ball.
//!
//! Placements inside a ball are joined to distinct vertices of its outer
//! shell. The flow network follows the capacity rules in [`network`]; an
//! integral maximum flow is split into unit paths, at most `M` of which
//! share any grid arc.

mod density;
mod max_flow;
mod network;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub use density::{check_ball_density, DensityReport};
pub use max_flow::{max_flow, Digraph, FlowArc, FlowResult};
pub use network::{build_network, half_grid_vertices, FlowNetwork};

impl FlowNetwork {
    /// Max-flow from the sources to the virtual exit.
    pub fn solve(&self) -> FlowResult {
        let sources: Vec<usize> = self.sources.iter().map(|s| s.0).collect();
        max_flow(&self.graph, &sources, &[self.exit])
    }
}

/// Splits an integral flow into one vertex path per unit of flow, each from
/// a source to a sink (the virtual exit is dropped). Opposite flows on a
/// grid edge are cancelled first and repeated vertices cut out, so paths
/// are simple and never load an arc beyond its flow.
pub fn decompose_paths(net: &FlowNetwork, result: &FlowResult) -> Result<Vec<Vec<usize>>> {
    let demand = net.total_demand();
    if result.value < demand {
        return Err(Error::InfeasibleDecomposition {
            value: result.value,
            demand,
        });
    }
    let mut flow = result.flow.clone();
    for i in (0..net.grid_arc_count).step_by(2) {
        let c = flow[i].min(flow[i + 1]);
        flow[i] -= c;
        flow[i + 1] -= c;
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); net.graph.node_count];
    for (i, a) in net.graph.arcs.iter().enumerate() {
        out[a.from].push(i);
    }
    let mut next = vec![0usize; net.graph.node_count];
    let mut paths = Vec::with_capacity(result.value as usize);
    for &(s, d) in &net.sources {
        for _ in 0..d {
            let mut path = vec![s];
            let mut pos: HashMap<usize, usize> = HashMap::from([(s, 0)]);
            let mut v = s;
            while v != net.exit {
                let arcs = &out[v];
                let mut k = next[v];
                while k < arcs.len() && flow[arcs[k]] == 0 {
                    k += 1;
                }
                next[v] = k;
                let Some(&e) = arcs.get(k) else {
                    return Err(Error::InfeasibleDecomposition {
                        value: result.value,
                        demand,
                    });
                };
                flow[e] -= 1;
                v = net.graph.arcs[e].to;
                if v == net.exit {
                    break;
                }
                if let Some(&at) = pos.get(&v) {
                    for dropped in path.drain(at + 1..) {
                        pos.remove(&dropped);
                    }
                } else {
                    pos.insert(v, path.len());
                    path.push(v);
                }
            }
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Largest number of paths over any undirected grid edge, and the
/// histogram load → edge count (edges with load ≥ 1).
pub fn edge_loads(paths: &[Vec<usize>]) -> (usize, BTreeMap<usize, usize>) {
    let mut load: HashMap<(usize, usize), usize> = HashMap::new();
    for p in paths {
        for w in p.windows(2) {
            *load.entry((w[0].min(w[1]), w[0].max(w[1]))).or_insert(0) += 1;
        }
    }
    let mut hist = BTreeMap::new();
    for &l in load.values() {
        *hist.entry(l).or_insert(0) += 1;
    }
    (load.values().copied().max().unwrap_or(0), hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteConfig {
    /// Capacity M of ordinary grid arcs.
    pub m: i64,
    /// Density constant C_S for the placement precondition.
    pub density: f64,
}

impl RouteConfig {
    /// C_S = 8 and M = 8·C_S.
    pub fn for_dim(_dim: usize) -> RouteConfig {
        RouteConfig {
            m: 64,
            density: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteFragment {
    /// One polyline per placement, in input order, from the placement to
    /// its exit vertex in the outer shell.
    pub paths: Vec<Vec<Point>>,
    pub exits: Vec<Point>,
    pub max_edge_load: usize,
    pub load_histogram: BTreeMap<usize, usize>,
    pub value: i64,
}

/// Joins every placement to a distinct outer-shell vertex of the ball.
pub fn route_to_boundary(
    dim: usize,
    center: Point,
    radius: f64,
    placements: &[Point],
    cfg: &RouteConfig,
    sink_filter: impl Fn(Point) -> bool,
) -> Result<RouteFragment> {
    let density = check_ball_density(dim, placements, cfg.density);
    if !density.ok {
        return Err(Error::DensityViolation {
            center: density.worst_center.unwrap_or_default(),
            radius: density.worst_radius,
            count: density.worst_count,
            limit: cfg.density * density.worst_radius.powi(dim as i32 - 1),
        });
    }
    route_unchecked(dim, center, radius, placements, cfg.m, sink_filter)
}

/// [`route_to_boundary`] without the density precondition.
pub fn route_unchecked(
    dim: usize,
    center: Point,
    radius: f64,
    placements: &[Point],
    m: i64,
    sink_filter: impl Fn(Point) -> bool,
) -> Result<RouteFragment> {
    let net = build_network(dim, center, radius, placements, m, sink_filter)?;
    let result = net.solve();
    let demand = net.total_demand();
    if result.value < demand {
        return Err(Error::RoutingInfeasible {
            value: result.value,
            demand,
        });
    }
    let vpaths = decompose_paths(&net, &result)?;
    let (max_edge_load, load_histogram) = edge_loads(&vpaths);
    // Paths come out grouped by source vertex; hand them back per placement.
    let mut by_source: HashMap<usize, Vec<Vec<usize>>> = HashMap::new();
    for p in vpaths {
        by_source.entry(p[0]).or_default().push(p);
    }
    for list in by_source.values_mut() {
        list.reverse();
    }
    let mut paths = Vec::with_capacity(placements.len());
    let mut exits = Vec::with_capacity(placements.len());
    for &p in placements {
        let v = net
            .vertex_at(p)
            .expect("placement validated by build_network");
        let vp = by_source
            .get_mut(&v)
            .and_then(|l| l.pop())
            .expect("one path per unit of demand");
        exits.push(net.vertices[*vp.last().unwrap()]);
        paths.push(vp.into_iter().map(|i| net.vertices[i]).collect());
    }
    Ok(RouteFragment {
        paths,
        exits,
        max_edge_load,
        load_histogram,
        value: result.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn any(_: Point) -> bool {
        true
    }

    #[test]
    fn empty_network() {
        let net = build_network(3, Point::ORIGIN, 3.0, &[], 1, any).unwrap();
        assert!(net.sources.is_empty());
        let r = net.solve();
        assert_eq!(r.value, 0);
        assert!(decompose_paths(&net, &r).unwrap().is_empty());
    }

    #[test]
    fn single_center_source() {
        let net = build_network(3, Point::ORIGIN, 3.0, &[Point::ORIGIN], 1, any).unwrap();
        assert_eq!(
            net.sources,
            vec![(net.vertex_at(Point::ORIGIN).unwrap(), 1)]
        );
        assert_eq!(net.source_out_capacity(net.sources[0].0), 1);
        let frag = route_to_boundary(
            3,
            Point::ORIGIN,
            3.0,
            &[Point::ORIGIN],
            &RouteConfig::for_dim(3),
            any,
        )
        .unwrap();
        assert_eq!(frag.paths.len(), 1);
        assert_eq!(frag.max_edge_load, 1);
        assert!(frag.exits[0].norm() > 2.5);
    }

    #[test]
    fn placement_errors() {
        let far = Point::from_slice(&[5.0, 0.0, 0.0]);
        assert!(matches!(
            build_network(3, Point::ORIGIN, 3.0, &[far], 1, any),
            Err(Error::PlacementOutsideBall(_))
        ));
        let off = Point::from_slice(&[0.3, 0.0, 0.0]);
        assert!(matches!(
            build_network(3, Point::ORIGIN, 3.0, &[off], 1, any),
            Err(Error::PlacementOffGrid(_))
        ));
    }

    #[test]
    fn insufficient_flow_is_reported() {
        // Sinks restricted to a single vertex cannot absorb two paths.
        let target = Point::from_slice(&[2.0, 0.0]);
        let pts = [Point::ORIGIN, Point::from_slice(&[0.5, 0.0])];
        let err =
            route_unchecked(2, Point::ORIGIN, 2.0, &pts, 4, |p| p.dist(target) < 1e-9).unwrap_err();
        assert_eq!(
            err,
            Error::RoutingInfeasible {
                value: 1,
                demand: 2
            }
        );
        let net = build_network(2, Point::ORIGIN, 2.0, &pts, 4, |p| p.dist(target) < 1e-9).unwrap();
        let r = net.solve();
        assert!(matches!(
            decompose_paths(&net, &r),
            Err(Error::InfeasibleDecomposition { .. })
        ));
    }

    #[test]
    fn dense_cluster_violates_density() {
        let pts = vec![Point::ORIGIN; 20];
        assert!(matches!(
            route_to_boundary(3, Point::ORIGIN, 6.0, &pts, &RouteConfig::for_dim(3), any),
            Err(Error::DensityViolation { .. })
        ));
    }
}

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thick_embed::flow_router::*;
use thick_embed::Point;

/// Minimum capacity of an arc set whose removal separates every source
/// from every sink, by enumerating all arc subsets.
pub fn brute_min_cut(g: &Digraph, sources: &[usize], sinks: &[usize]) -> i64 {
    let m = g.arcs.len();
    let mut best = i64::MAX;
    for mask in 0u32..(1 << m) {
        let cost: i64 = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| g.arcs[i].cap)
            .sum();
        if cost >= best {
            continue;
        }
        let mut seen: HashSet<usize> = sources.iter().copied().collect();
        let mut stack: Vec<usize> = sources.to_vec();
        while let Some(u) = stack.pop() {
            for (i, a) in g.arcs.iter().enumerate() {
                if a.from == u && a.cap > 0 && mask >> i & 1 == 0 && seen.insert(a.to) {
                    stack.push(a.to);
                }
            }
        }
        if sinks.iter().all(|t| !seen.contains(t)) {
            best = cost;
        }
    }
    best
}

#[test]
fn max_flow_equals_brute_min_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let n = rng.gen_range(2..7);
        let mut g = Digraph::new(n);
        for _ in 0..rng.gen_range(1..=12) {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            g.add_arc(u, v, rng.gen_range(0..6));
        }
        let sources = vec![0];
        let sinks = vec![n - 1];
        let r = max_flow(&g, &sources, &sinks);
        r.check(&g, &sources, &sinks).unwrap();
        assert_eq!(r.value, brute_min_cut(&g, &sources, &sinks));
        assert_eq!(r.cut_capacity(&g), r.value);
    }
}

#[test]
fn network_has_two_arcs_per_grid_edge() {
    let c = Point::ORIGIN;
    let net = build_network(2, c, 6.0, &[], 4, |_| true).unwrap();
    let v = half_grid_vertices(2, c, 6.0);
    let mut edges = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d: Vec<i64> = (0..2).map(|a| (v[i].0[a] - v[j].0[a]).abs()).collect();
            if d.iter().sum::<i64>() == 1 {
                edges += 1;
            }
        }
    }
    assert_eq!(net.grid_arc_count, 2 * edges);
    let sinks: HashSet<usize> = net.sinks.iter().copied().collect();
    for a in &net.graph.arcs[..net.grid_arc_count] {
        assert_eq!(a.cap, if sinks.contains(&a.from) { 0 } else { 4 });
    }
    assert_eq!(net.sinks.len(), net.graph.arcs.len() - net.grid_arc_count);
}

#[test]
fn stacked_demand_respects_capacity() {
    let c = Point::ORIGIN;
    let p = vec![Point::ORIGIN; 4];
    let f = route_unchecked(2, c, 5.0, &p, 2, |_| true).unwrap();
    assert_eq!(f.value, 4);
    assert_eq!(f.paths.len(), 4);
    assert!(f.max_edge_load <= 2, "{}", f.max_edge_load);
    let exits: HashSet<[u64; 2]> = f
        .exits
        .iter()
        .map(|e| [e.0[0].to_bits(), e.0[1].to_bits()])
        .collect();
    assert_eq!(exits.len(), 4);
    for (path, exit) in f.paths.iter().zip(&f.exits) {
        assert_eq!(path[0], Point::ORIGIN);
        assert_eq!(path.last(), Some(exit));
        assert!(exit.norm() > 4.5);
    }
}

#[test]
fn flow_value_is_monotone_in_capacity() {
    let c = Point::ORIGIN;
    let mut p = Vec::new();
    for i in -2..=2 {
        for j in -2..=2 {
            for _ in 0..3 {
                p.push(Point::from_slice(&[i as f64 * 0.5, j as f64 * 0.5]));
            }
        }
    }
    let mut last = 0;
    for m in 1..8 {
        let net = build_network(2, c, 4.0, &p, m, |_| true).unwrap();
        let v = net.solve().value;
        assert!(v >= last);
        last = v;
    }
    assert!(last > 0);
}

#[test]
fn density_violation_is_reported() {
    let p = vec![Point::ORIGIN; 40];
    let err = route_to_boundary(3, Point::ORIGIN, 6.0, &p, &RouteConfig::for_dim(3), |_| {
        true
    })
    .unwrap_err();
    assert!(matches!(err, thick_embed::Error::DensityViolation { .. }));
    let rep = check_ball_density(3, &p, 8.0);
    assert!(!rep.ok && rep.worst_count == 40);
}

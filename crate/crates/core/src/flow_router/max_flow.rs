//! Integral max-flow by shortest augmenting paths (Dinic's blocking flows).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Digraph {
    pub node_count: usize,
    pub arcs: Vec<FlowArc>,
}

impl Digraph {
    pub fn new(node_count: usize) -> Digraph {
        Digraph {
            node_count,
            arcs: Vec::new(),
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> usize {
        assert!(from < self.node_count && to < self.node_count && cap >= 0);
        self.arcs.push(FlowArc { from, to, cap });
        self.arcs.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    /// Flow per arc of the input graph.
    pub flow: Vec<i64>,
    pub value: i64,
    /// Arcs leaving the source side of the final residual graph.
    pub min_cut: Vec<usize>,
}

impl FlowResult {
    pub fn cut_capacity(&self, g: &Digraph) -> i64 {
        self.min_cut.iter().map(|&a| g.arcs[a].cap).sum()
    }

    /// First capacity or conservation violation, if any.
    pub fn check(&self, g: &Digraph, sources: &[usize], sinks: &[usize]) -> Result<(), String> {
        for (i, (a, &f)) in g.arcs.iter().zip(&self.flow).enumerate() {
            if f < 0 || f > a.cap {
                return Err(format!("arc {i} carries {f} of capacity {}", a.cap));
            }
        }
        let mut balance = vec![0i64; g.node_count];
        for (a, &f) in g.arcs.iter().zip(&self.flow) {
            balance[a.from] -= f;
            balance[a.to] += f;
        }
        for (v, &b) in balance.iter().enumerate() {
            if b != 0 && !sources.contains(&v) && !sinks.contains(&v) {
                return Err(format!("vertex {v} has imbalance {b}"));
            }
        }
        let out: i64 = sources.iter().map(|&s| -balance[s]).sum();
        if out != self.value {
            return Err(format!(
                "source outflow {out} differs from value {}",
                self.value
            ));
        }
        if self.cut_capacity(g) != self.value {
            return Err(format!(
                "cut capacity {} differs from value {}",
                self.cut_capacity(g),
                self.value
            ));
        }
        Ok(())
    }
}

const UNBOUNDED: i64 = i64::MAX / 4;

/// Maximum flow from the vertex set `sources` to `sinks`.
///
/// A super source and super sink with unbounded arcs are added internally;
/// they never appear in the returned cut.
pub fn max_flow(g: &Digraph, sources: &[usize], sinks: &[usize]) -> FlowResult {
    let n = g.node_count + 2;
    let (ss, tt) = (g.node_count, g.node_count + 1);
    // Residual arcs in pairs: 2i forward, 2i + 1 reverse.
    let mut to = Vec::with_capacity(2 * (g.arcs.len() + sources.len() + sinks.len()));
    let mut cap = Vec::with_capacity(to.capacity());
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut push = |from: usize, dst: usize, c: i64, to: &mut Vec<usize>, cap: &mut Vec<i64>| {
        adj[from].push(to.len());
        to.push(dst);
        cap.push(c);
        adj[dst].push(to.len());
        to.push(from);
        cap.push(0);
    };
    for a in &g.arcs {
        push(a.from, a.to, a.cap, &mut to, &mut cap);
    }
    for &s in sources {
        push(ss, s, UNBOUNDED, &mut to, &mut cap);
    }
    for &t in sinks {
        push(t, tt, UNBOUNDED, &mut to, &mut cap);
    }

    // Dinic: blocking flows along BFS level graphs, i.e. shortest
    // augmenting paths in batches.
    let mut value = 0i64;
    let mut level = vec![u32::MAX; n];
    let mut next = vec![0usize; n];
    let mut stack: Vec<usize> = Vec::new();
    loop {
        level.iter_mut().for_each(|l| *l = u32::MAX);
        level[ss] = 0;
        let mut queue = VecDeque::from([ss]);
        while let Some(v) = queue.pop_front() {
            for &e in &adj[v] {
                let w = to[e];
                if cap[e] > 0 && level[w] == u32::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if level[tt] == u32::MAX {
            break;
        }
        next.iter_mut().for_each(|i| *i = 0);
        // Iterative DFS; `stack` holds the arcs of the current partial path.
        loop {
            let v = stack.last().map_or(ss, |&e| to[e]);
            if v == tt {
                let bottleneck = stack.iter().map(|&e| cap[e]).min().unwrap_or(0);
                for &e in &stack {
                    cap[e] -= bottleneck;
                    cap[e ^ 1] += bottleneck;
                }
                value += bottleneck;
                // Retreat to the tail of the first saturated arc.
                let cut = stack.iter().position(|&e| cap[e] == 0).unwrap_or(0);
                stack.truncate(cut);
                continue;
            }
            let mut advanced = false;
            while next[v] < adj[v].len() {
                let e = adj[v][next[v]];
                let w = to[e];
                if cap[e] > 0 && level[w] == level[v] + 1 {
                    stack.push(e);
                    advanced = true;
                    break;
                }
                next[v] += 1;
            }
            if !advanced {
                if v == ss {
                    break;
                }
                // Dead end: drop it from the level graph.
                level[v] = u32::MAX;
                let e = stack.pop().unwrap();
                next[to[e ^ 1]] += 1;
            }
        }
    }

    let mut reach = vec![false; n];
    let mut queue = VecDeque::from([ss]);
    reach[ss] = true;
    while let Some(v) = queue.pop_front() {
        for &e in &adj[v] {
            if cap[e] > 0 && !reach[to[e]] {
                reach[to[e]] = true;
                queue.push_back(to[e]);
            }
        }
    }
    let flow: Vec<i64> = (0..g.arcs.len()).map(|i| cap[2 * i + 1]).collect();
    let min_cut = g
        .arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.cap > 0 && reach[a.from] && !reach[a.to])
        .map(|(i, _)| i)
        .collect();
    FlowResult {
        flow,
        value,
        min_cut,
    }
}

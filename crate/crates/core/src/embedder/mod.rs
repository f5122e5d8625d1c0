//! Thick embeddings of G(U, 1) into a ball B_R about the origin.
//!
//! Each partition piece is translated into its own ball B_{ρ_i}(p_i), with
//! ρ_i ≥ 2 r_i, placed by [`pack_balls`]. Cut and boundary edges leave their
//! piece by flow routing to the ball's outer shell and then travel radially
//! to ∂B_R; edges crossing between pieces are closed up through the
//! interior by [`kb_route`](crate::kb_router::kb_route). Everything is in
//! lattice units (ω = 1).

mod pack;
mod tracks;
mod validate;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_router::{check_ball_density, half_grid_vertices, route_unchecked};
use crate::geometry::Point;
use crate::good_balls::GoodBallPartition;
use crate::kb_router::{congestion, kb_route, KbConfig, Matching};
use crate::voxel_domain::{cell_center, step, Cell, GridGraph, VertexKind, VoxelDomain};

pub use pack::{directions, pack_balls, Packing};
pub use tracks::{find_intersection, lift_polylines, max_shared_segment, Intersection};
pub use validate::{validate_thick_map, ValidationIssue, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    /// Initial packing constant C; raised by `growth` when a stage fails.
    pub pack_constant: f64,
    pub growth: f64,
    pub max_attempts: usize,
    /// Grid-arc capacity M for boundary routing.
    pub m: i64,
    /// Minimum distance between exits on ∂B_R.
    pub exit_spacing: f64,
    /// End-to-end unit-ball congestion allowed in the finished map.
    pub congestion_cap: usize,
    pub kb: KbConfig,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            pack_constant: 4.0,
            growth: 1.25,
            max_attempts: 24,
            m: 64,
            exit_spacing: 1.0,
            congestion_cap: 256,
            kb: KbConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Both ends in piece i: placed isometrically.
    Piece(usize),
    /// Ends at ∂Γ; the interior end lies in piece i.
    Boundary(usize),
    /// Joins pieces i and j.
    Crossing(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecePlacement {
    /// Center c_i and radius r_i of the certifying ball in U.
    pub source_center: Point,
    pub ball_radius: f64,
    /// Image center p_i and radius ρ_i of the routing ball in B_R.
    pub center: Point,
    pub route_radius: f64,
    pub translation: Point,
    /// Interior Γ-vertices of the piece.
    pub vertices: Vec<usize>,
    /// Number of cut and boundary edge ends routed out of the piece.
    pub demand: usize,
    /// Size of the piece U_i both ways: cells, and faces on its boundary.
    pub cells: usize,
    pub boundary_faces: usize,
    pub density_ratio: f64,
    pub max_edge_load: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionLedger {
    pub cap: usize,
    pub max: usize,
    pub witness: Option<Vec<f64>>,
    /// Unit-ball congestion of each stage's polylines on their own.
    pub stages: BTreeMap<String, usize>,
    pub histogram: BTreeMap<usize, usize>,
    pub max_edge_load: usize,
    pub pack_constant: f64,
    pub attempts: usize,
    pub boundary_edges: usize,
    pub crossing_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThickMap {
    pub dim: usize,
    pub radius: f64,
    pub vertex_images: Vec<Point>,
    /// One polyline per Γ-edge, oriented from `edge.a` to `edge.b`.
    pub edge_paths: Vec<Vec<Point>>,
    pub edge_kinds: Vec<EdgeKind>,
    pub boundary_flags: Vec<bool>,
    pub pieces: Vec<PiecePlacement>,
    pub ledger: CongestionLedger,
    /// Track count m once lifted to an embedding.
    pub tracks: Option<usize>,
}

fn lattice_pos(g: &GridGraph, v: usize) -> Point {
    match g.vertices[v].kind {
        VertexKind::Interior(c) => cell_center(c),
        VertexKind::Boundary(f) => f.center(),
    }
}

struct PieceDemand {
    /// (edge, end vertex) pairs leaving the piece.
    ends: Vec<(usize, usize)>,
    extent: f64,
    vertices: Vec<usize>,
}

/// Exits on the outer shell of B_ρ(p): vertices facing away from the origin
/// whose radial images on ∂B_R are pairwise ≥ `spacing` apart.
fn select_exits(dim: usize, p: Point, rho: f64, big_r: f64, spacing: f64) -> Vec<Point> {
    let mut shell: Vec<Point> = half_grid_vertices(dim, p, rho)
        .into_iter()
        .map(|v| v.1)
        .filter(|&v| v.dist(p) > rho - 0.5 && (v - p).dot(v) > 0.0)
        .collect();
    let axis = p.normalized();
    shell.sort_by(|a, b| {
        let ka = (*a - p).normalized().dot(axis);
        let kb = (*b - p).normalized().dot(axis);
        kb.total_cmp(&ka)
            .then(a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut grid: HashMap<[i64; 4], Vec<Point>> = HashMap::new();
    let key = |q: Point| q.0.map(|x| (x / spacing).floor() as i64);
    let mut out = Vec::new();
    for v in shell {
        let proj = v.scale(big_r / v.norm());
        let k = key(proj);
        let mut ok = true;
        let mut d = [-1i64; 4];
        'n: loop {
            let mut q = k;
            for a in 0..dim {
                q[a] += d[a];
            }
            if let Some(list) = grid.get(&q) {
                if list.iter().any(|w| w.dist(proj) < spacing) {
                    ok = false;
                    break 'n;
                }
            }
            let mut a = 0;
            loop {
                if a == dim {
                    break 'n;
                }
                if d[a] < 1 {
                    d[a] += 1;
                    break;
                }
                d[a] = -1;
                a += 1;
            }
        }
        if ok {
            grid.entry(k).or_default().push(proj);
            out.push(v);
        }
    }
    out
}

/// Routing radius large enough to hold the piece, twice its ball, and
/// enough well-spaced exits for `demand` ends.
fn initial_route_radius(dim: usize, r: f64, extent: f64, demand: usize, spacing: f64) -> f64 {
    let by_exits = if dim == 2 {
        0.7 * demand as f64 * spacing
    } else {
        (1.6 * demand as f64 / std::f64::consts::PI).sqrt() * spacing
    };
    (2.0 * r).max(extent + 1.0).max(by_exits + 0.5)
}

/// Builds the thick map of Γ = G(U, 1) from a partition of U.
pub fn assemble(
    u: &VoxelDomain,
    partition: &GoodBallPartition,
    cfg: &EmbedConfig,
) -> Result<ThickMap> {
    let dim = u.dim();
    if !(2..=3).contains(&dim) {
        return Err(Error::BadDimension(dim));
    }
    let g = u.grid_graph();
    let mut piece_of: HashMap<Cell, usize> = HashMap::new();
    for (i, p) in partition.pieces.iter().enumerate() {
        for c in &p.cells {
            piece_of.insert(*c, i);
        }
    }
    let vertex_piece: Vec<usize> = (0..g.vertices.len())
        .map(|v| {
            let c = match g.vertices[v].kind {
                VertexKind::Interior(c) => c,
                VertexKind::Boundary(f) => f.cell,
            };
            piece_of
                .get(&c)
                .copied()
                .ok_or_else(|| Error::BadConfig(format!("cell {c:?} is in no piece")))
        })
        .collect::<Result<_>>()?;
    let kinds: Vec<EdgeKind> = g
        .edges
        .iter()
        .map(|e| {
            let (pa, pb) = (vertex_piece[e.a], vertex_piece[e.b]);
            if e.b >= g.interior_count {
                EdgeKind::Boundary(pa)
            } else if pa == pb {
                EdgeKind::Piece(pa)
            } else {
                EdgeKind::Crossing(pa, pb)
            }
        })
        .collect();

    let k = partition.pieces.len();
    let mut demands: Vec<PieceDemand> = partition
        .pieces
        .iter()
        .map(|p| PieceDemand {
            ends: Vec::new(),
            extent: p
                .cells
                .iter()
                .map(|c| cell_center(*c).dist(p.ball.center))
                .fold(0.0, f64::max),
            vertices: p
                .cells
                .iter()
                .map(|c| u.index_of(c).expect("piece cell in domain"))
                .collect(),
        })
        .collect();
    for (e, kind) in kinds.iter().enumerate() {
        match *kind {
            EdgeKind::Piece(_) => {}
            EdgeKind::Boundary(i) => demands[i].ends.push((e, g.edges[e].a)),
            EdgeKind::Crossing(i, j) => {
                demands[i].ends.push((e, g.edges[e].a));
                demands[j].ends.push((e, g.edges[e].b));
            }
        }
    }

    let mut c = cfg.pack_constant;
    let mut grow = vec![1.0f64; k];
    let mut last_err = Error::PackingFailed("no attempt made".into());
    for attempt in 1..=cfg.max_attempts {
        let rho: Vec<f64> = (0..k)
            .map(|i| {
                let p = &partition.pieces[i];
                grow[i]
                    * initial_route_radius(
                        dim,
                        p.ball.radius,
                        demands[i].extent,
                        demands[i].ends.len(),
                        cfg.exit_spacing,
                    )
            })
            .collect();
        let half: Vec<f64> = rho.iter().map(|r| r / 2.0).collect();
        let packing = match pack_balls(dim, &half, c, cfg.exit_spacing) {
            Ok(p) => p,
            Err(e) => {
                last_err = e.at_stage("pack");
                c *= cfg.growth;
                continue;
            }
        };
        match build_attempt(dim, &g, partition, &kinds, &demands, &rho, &packing, cfg) {
            Ok(mut tm) => {
                tm.ledger.pack_constant = c;
                tm.ledger.attempts = attempt;
                return Ok(tm);
            }
            Err(AttemptError::Pieces(bad, e)) => {
                for i in bad {
                    grow[i] *= cfg.growth;
                }
                last_err = e;
            }
            Err(AttemptError::Global(e)) => {
                c *= cfg.growth;
                last_err = e;
            }
        }
    }
    Err(last_err)
}

fn piece_boundary_faces(dim: usize, cells: &[Cell]) -> usize {
    let set: std::collections::HashSet<&Cell> = cells.iter().collect();
    cells
        .iter()
        .map(|&c| {
            (0..dim)
                .flat_map(|a| [-1, 1].map(|d| step(c, a, d)))
                .filter(|n| !set.contains(n))
                .count()
        })
        .sum()
}

enum AttemptError {
    /// Routing balls that need to grow.
    Pieces(Vec<usize>, Error),
    /// The target ball needs to grow.
    Global(Error),
}

#[allow(clippy::too_many_arguments)]
fn build_attempt(
    dim: usize,
    g: &GridGraph,
    partition: &GoodBallPartition,
    kinds: &[EdgeKind],
    demands: &[PieceDemand],
    rho: &[f64],
    packing: &Packing,
    cfg: &EmbedConfig,
) -> std::result::Result<ThickMap, AttemptError> {
    let big_r = packing.radius;
    let nv = g.vertices.len();
    let mut images = vec![Point::ORIGIN; nv];
    let mut pieces = Vec::with_capacity(demands.len());
    for (i, piece) in partition.pieces.iter().enumerate() {
        let t = packing.centers[i] - piece.ball.center;
        let vertices = demands[i].vertices.clone();
        for &v in &vertices {
            images[v] = lattice_pos(g, v) + t;
        }
        pieces.push(PiecePlacement {
            source_center: piece.ball.center,
            ball_radius: piece.ball.radius,
            center: packing.centers[i],
            route_radius: rho[i],
            translation: t,
            vertices,
            demand: demands[i].ends.len(),
            cells: piece.cells.len(),
            boundary_faces: piece_boundary_faces(dim, &piece.cells),
            density_ratio: 0.0,
            max_edge_load: 0,
        });
    }

    // Step 2: route every leaving end to its ball's shell, then radially out.
    let mut half_paths: HashMap<(usize, usize), Vec<Point>> = HashMap::new();
    let mut flow_parts = Vec::new();
    let mut radial_parts = Vec::new();
    let mut bad = Vec::new();
    let mut first_err = None;
    for (i, d) in demands.iter().enumerate() {
        if d.ends.is_empty() {
            continue;
        }
        let p = packing.centers[i];
        let exits = select_exits(dim, p, rho[i], big_r, cfg.exit_spacing);
        if exits.len() < d.ends.len() {
            bad.push(i);
            first_err.get_or_insert(
                Error::RoutingInfeasible {
                    value: exits.len() as i64,
                    demand: d.ends.len() as i64,
                }
                .at_stage("route"),
            );
            continue;
        }
        let key = |q: &Point| q.0.map(|x| (x * 2.0).round() as i64);
        let allowed: std::collections::HashSet<[i64; 4]> = exits.iter().map(key).collect();
        let placements: Vec<Point> = d.ends.iter().map(|&(_, v)| images[v]).collect();
        pieces[i].density_ratio = check_ball_density(dim, &placements, 1.0).ratio;
        match route_unchecked(dim, p, rho[i], &placements, cfg.m, |q| {
            allowed.contains(&key(&q))
        }) {
            Ok(frag) => {
                pieces[i].max_edge_load = frag.max_edge_load;
                for (n, &(e, v)) in d.ends.iter().enumerate() {
                    let mut path = frag.paths[n].clone();
                    // Network coordinates may differ from the image in the last bit.
                    path[0] = images[v];
                    let exit = *path.last().unwrap();
                    let out = exit.scale(big_r / exit.norm());
                    flow_parts.push(path.clone());
                    radial_parts.push(vec![exit, out]);
                    path.push(out);
                    half_paths.insert((e, v), path);
                }
            }
            Err(e) => {
                bad.push(i);
                first_err.get_or_insert(e.at_stage("route"));
            }
        }
    }
    if let Some(e) = first_err {
        return Err(AttemptError::Pieces(bad, e));
    }

    let mut paths: Vec<Vec<Point>> = vec![Vec::new(); g.edges.len()];
    let mut piece_parts = Vec::new();
    let mut crossing = Vec::new();
    for (e, kind) in kinds.iter().enumerate() {
        let ge = g.edges[e];
        match *kind {
            EdgeKind::Piece(_) => {
                paths[e] = vec![images[ge.a], images[ge.b]];
                piece_parts.push(paths[e].clone());
            }
            EdgeKind::Boundary(_) => {
                let p = half_paths.remove(&(e, ge.a)).unwrap();
                images[ge.b] = *p.last().unwrap();
                paths[e] = p;
            }
            EdgeKind::Crossing(..) => crossing.push(e),
        }
    }

    // Step 3: close up crossing edges through the interior.
    let mut kb_max = 0;
    if !crossing.is_empty() {
        let mut placements = Vec::with_capacity(2 * crossing.len());
        for &e in &crossing {
            let ge = g.edges[e];
            placements.push(*half_paths[&(e, ge.a)].last().unwrap());
            placements.push(*half_paths[&(e, ge.b)].last().unwrap());
        }
        let matching = Matching {
            dim,
            edges: (0..crossing.len()).map(|i| (2 * i, 2 * i + 1)).collect(),
            placements,
        };
        let routed = kb_route(&matching, big_r, &cfg.kb)
            .map_err(|e| AttemptError::Global(e.at_stage("kb")))?;
        kb_max = routed.report.max;
        for (n, &e) in crossing.iter().enumerate() {
            let ge = g.edges[e];
            let mut path = half_paths.remove(&(e, ge.a)).unwrap();
            let kb = &routed.paths[n];
            path.extend_from_slice(&kb[1..kb.len() - 1]);
            let mut back = half_paths.remove(&(e, ge.b)).unwrap();
            back.reverse();
            path.extend(back);
            paths[e] = path;
        }
    }

    let total = congestion(dim, &paths, cfg.kb.resolution);
    let mut stages = BTreeMap::new();
    stages.insert(
        "pieces".to_string(),
        congestion(dim, &piece_parts, cfg.kb.resolution).max,
    );
    stages.insert(
        "flow".to_string(),
        congestion(dim, &flow_parts, cfg.kb.resolution).max,
    );
    stages.insert(
        "radial".to_string(),
        congestion(dim, &radial_parts, cfg.kb.resolution).max,
    );
    stages.insert("kb".to_string(), kb_max);
    if total.max > cfg.congestion_cap {
        return Err(AttemptError::Global(
            Error::CongestionUnachievable {
                max: total.max,
                cap: cfg.congestion_cap,
                center: total.witness.unwrap_or_default().to_vec(dim),
                rounds: 0,
            }
            .at_stage("assemble"),
        ));
    }
    let boundary_flags: Vec<bool> = (0..nv).map(|v| v >= g.interior_count).collect();
    let ledger = CongestionLedger {
        cap: cfg.congestion_cap,
        max: total.max,
        witness: total.witness.map(|w| w.to_vec(dim)),
        stages,
        histogram: total.histogram,
        max_edge_load: pieces.iter().map(|p| p.max_edge_load).max().unwrap_or(0),
        pack_constant: 0.0,
        attempts: 0,
        boundary_edges: kinds
            .iter()
            .filter(|k| matches!(k, EdgeKind::Boundary(_)))
            .count(),
        crossing_edges: crossing.len(),
    };
    Ok(ThickMap {
        dim,
        radius: big_r,
        vertex_images: images,
        edge_paths: paths,
        edge_kinds: kinds.to_vec(),
        boundary_flags,
        pieces,
        ledger,
        tracks: None,
    })
}

/// Offsets path interiors onto parallel tracks so that distinct edges'
/// polylines meet only at shared vertex images.
pub fn lift_to_tracks(tm: &ThickMap, m: usize, seed: u64) -> Result<ThickMap> {
    let lifted = lift_polylines(tm.dim, &tm.edge_paths, m, tm.radius, seed)?;
    let mut out = tm.clone();
    let report = congestion(tm.dim, &lifted, tm.ledger_resolution());
    out.edge_paths = lifted;
    out.ledger.max = report.max;
    out.ledger.witness = report.witness.map(|w| w.to_vec(tm.dim));
    out.ledger.histogram = report.histogram;
    out.tracks = Some(m);
    Ok(out)
}

impl ThickMap {
    fn ledger_resolution(&self) -> f64 {
        0.5
    }

    /// R / (boundary face count)^{1/(n−1)}.
    pub fn radius_ratio(&self) -> f64 {
        let faces = self.boundary_flags.iter().filter(|b| **b).count() as f64;
        self.radius / faces.powf(1.0 / (self.dim as f64 - 1.0))
    }

    pub fn to_file(&self, g: &GridGraph) -> MapFile {
        MapFile {
            dim: self.dim,
            radius: self.radius,
            vertices: self
                .vertex_images
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.to_vec(self.dim)))
                .collect(),
            edges: g
                .edges
                .iter()
                .zip(&self.edge_paths)
                .zip(&self.edge_kinds)
                .map(|((e, p), k)| EdgeRecord {
                    src: [e.a, e.b],
                    kind: *k,
                    path: p.iter().map(|x| x.to_vec(self.dim)).collect(),
                })
                .collect(),
            boundary: self
                .boundary_flags
                .iter()
                .enumerate()
                .filter(|b| *b.1)
                .map(|b| b.0)
                .collect(),
            pieces: self.pieces.clone(),
            ledger: self.ledger.clone(),
            tracks: self.tracks,
        }
    }

    pub fn from_file(f: &MapFile) -> ThickMap {
        let n = f.vertices.keys().next_back().map_or(0, |k| k + 1);
        let mut vertex_images = vec![Point::ORIGIN; n];
        for (&i, p) in &f.vertices {
            vertex_images[i] = Point::from_slice(p);
        }
        let mut boundary_flags = vec![false; n];
        for &b in &f.boundary {
            boundary_flags[b] = true;
        }
        ThickMap {
            dim: f.dim,
            radius: f.radius,
            vertex_images,
            edge_paths: f
                .edges
                .iter()
                .map(|e| e.path.iter().map(|x| Point::from_slice(x)).collect())
                .collect(),
            edge_kinds: f.edges.iter().map(|e| e.kind).collect(),
            boundary_flags,
            pieces: f.pieces.clone(),
            ledger: f.ledger.clone(),
            tracks: f.tracks,
        }
    }

    /// Wavefront OBJ with one polyline object per Γ-edge.
    pub fn to_obj(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let mut next = 1;
        for (e, path) in self.edge_paths.iter().enumerate() {
            let _ = writeln!(s, "o edge_{e}");
            for p in path {
                let _ = writeln!(s, "v {} {} {}", p.0[0], p.0[1], p.0[2]);
            }
            let idx: Vec<String> = (next..next + path.len()).map(|i| i.to_string()).collect();
            let _ = writeln!(s, "l {}", idx.join(" "));
            next += path.len();
        }
        s
    }
}

/// JSON map: `{ "R", "vertices": {id: point}, "edges": [{"src", "path"}], "ledger" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub dim: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub vertices: BTreeMap<usize, Vec<f64>>,
    pub edges: Vec<EdgeRecord>,
    pub boundary: Vec<usize>,
    pub pieces: Vec<PiecePlacement>,
    pub ledger: CongestionLedger,
    #[serde(default)]
    pub tracks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub src: [usize; 2],
    pub kind: EdgeKind,
    pub path: Vec<Vec<f64>>,
}

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::geometry::polyline_length;
use crate::kb_router::congestion;
use crate::voxel_domain::GridGraph;

use super::{lattice_pos, EdgeKind, ThickMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub check: String,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    /// Violations in check order; the first is the headline failure.
    pub issues: Vec<ValidationIssue>,
    pub radius_ratio: f64,
    pub congestion: usize,
    pub stages: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn first(&self) -> Option<&ValidationIssue> {
        self.issues.first()
    }
}

const TOL: f64 = 1e-6;

/// Re-checks every thick-map invariant of `tm` as a map of `against`.
pub fn validate_thick_map(tm: &ThickMap, against: &GridGraph) -> ValidationReport {
    let mut issues = Vec::new();
    let mut fail = |check: &str, witness: String| {
        issues.push(ValidationIssue {
            check: check.to_string(),
            witness,
        });
    };
    let g = against;
    let r = tm.radius;
    let shape_ok = tm.vertex_images.len() == g.vertices.len()
        && tm.edge_paths.len() == g.edges.len()
        && tm.edge_kinds.len() == g.edges.len()
        && tm.boundary_flags.len() == g.vertices.len();
    if !shape_ok {
        fail(
            "shape",
            format!(
                "{} images / {} paths for {} vertices / {} edges",
                tm.vertex_images.len(),
                tm.edge_paths.len(),
                g.vertices.len(),
                g.edges.len()
            ),
        );
        return finish(tm, issues, 0);
    }

    // Boundary flags: exactly the ∂Γ vertices, all on ∂B_R.
    for v in 0..g.vertices.len() {
        let is_b = g.vertices[v].is_boundary();
        if tm.boundary_flags[v] != is_b {
            fail(
                "boundary_flag",
                format!(
                    "vertex {v} flagged {} but boundary = {is_b}",
                    tm.boundary_flags[v]
                ),
            );
        } else if is_b && (tm.vertex_images[v].norm() - r).abs() > TOL {
            fail(
                "boundary_flag",
                format!(
                    "boundary vertex {v} at radius {} not on ∂B_R",
                    tm.vertex_images[v].norm()
                ),
            );
        } else if !is_b && tm.vertex_images[v].norm() > r - TOL {
            fail("boundary_flag", format!("interior vertex {v} on ∂B_R"));
        }
    }

    // Paths: nontrivial, inside B_R, with the right endpoints.
    for (e, (edge, path)) in g.edges.iter().zip(&tm.edge_paths).enumerate() {
        if path.len() < 2 || polyline_length(path) <= 0.0 {
            fail(
                "nontrivial_path",
                format!("edge {e} ({}, {})", edge.a, edge.b),
            );
            continue;
        }
        if path[0].dist(tm.vertex_images[edge.a]) > TOL
            || path.last().unwrap().dist(tm.vertex_images[edge.b]) > TOL
        {
            fail(
                "endpoints",
                format!(
                    "edge {e} does not join the images of {} and {}",
                    edge.a, edge.b
                ),
            );
        }
        if let Some(p) = path.iter().find(|p| p.norm() > r + TOL) {
            fail(
                "inside_ball",
                format!("edge {e} reaches {:?}", p.to_vec(tm.dim)),
            );
        }
    }

    // Injective vertex placement.
    let mut seen: HashMap<[i64; 4], usize> = HashMap::new();
    for (v, p) in tm.vertex_images.iter().enumerate() {
        if let Some(w) = seen.insert(p.0.map(|x| (x / TOL).round() as i64), v) {
            fail("injective", format!("vertices {w} and {v} share an image"));
        }
    }

    // Pieces: translation-isometric, inside their routing balls, routing
    // balls inside B_R with disjoint radial shadows.
    let mut owner = vec![usize::MAX; g.interior_count];
    for (i, piece) in tm.pieces.iter().enumerate() {
        for &v in &piece.vertices {
            if v >= g.interior_count || owner[v] != usize::MAX {
                fail(
                    "isometry",
                    format!("vertex {v} assigned twice or not interior"),
                );
                continue;
            }
            owner[v] = i;
            let t = tm.vertex_images[v] - lattice_pos(g, v);
            if t.dist(piece.translation) > TOL {
                fail(
                    "isometry",
                    format!("vertex {v} of piece {i} is not translated by the piece translation"),
                );
            }
            if tm.vertex_images[v].dist(piece.center) > piece.route_radius + TOL {
                fail(
                    "isometry",
                    format!("vertex {v} leaves the ball of piece {i}"),
                );
            }
        }
        if piece.center.norm() + piece.route_radius > r + TOL {
            fail("piece_balls", format!("ball of piece {i} leaves B_R"));
        }
        for (j, other) in tm.pieces.iter().enumerate().take(i) {
            let cos = piece.center.dot(other.center) / (piece.center.norm() * other.center.norm());
            let ang = cos.clamp(-1.0, 1.0).acos();
            let need = (piece.route_radius / piece.center.norm()).min(1.0).asin()
                + (other.route_radius / other.center.norm()).min(1.0).asin();
            if ang <= need {
                fail(
                    "piece_balls",
                    format!("shadows of pieces {j} and {i} overlap"),
                );
            }
        }
    }
    if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
        fail(
            "isometry",
            format!("interior vertex {v} belongs to no piece"),
        );
    }

    // Edge kinds follow piece membership; exactly boundary and crossing
    // edges reach ∂B_R.
    for (e, edge) in g.edges.iter().enumerate() {
        let pa = owner.get(edge.a).copied().unwrap_or(usize::MAX);
        let expect = if edge.b >= g.interior_count {
            EdgeKind::Boundary(pa)
        } else {
            let pb = owner[edge.b];
            if pa == pb {
                EdgeKind::Piece(pa)
            } else {
                EdgeKind::Crossing(pa, pb)
            }
        };
        if tm.edge_kinds[e] != expect {
            fail(
                "boundary_completeness",
                format!(
                    "edge {e} recorded as {:?}, expected {expect:?}",
                    tm.edge_kinds[e]
                ),
            );
            continue;
        }
        let touches = tm.edge_paths[e].iter().any(|p| p.norm() > r - TOL);
        let should = !matches!(expect, EdgeKind::Piece(_));
        if touches != should {
            fail(
                "boundary_completeness",
                format!("edge {e} ({expect:?}) touches ∂B_R = {touches}"),
            );
        }
    }

    let report = congestion(tm.dim, &tm.edge_paths, 0.5);
    if report.max > tm.ledger.cap {
        fail(
            "congestion",
            format!(
                "{} polylines meet the unit ball at {:?} (cap {})",
                report.max, report.witness, tm.ledger.cap
            ),
        );
    }
    if report.max != tm.ledger.max {
        fail(
            "congestion",
            format!(
                "ledger records {} but recount gives {}",
                tm.ledger.max, report.max
            ),
        );
    }
    finish(tm, issues, report.max)
}

fn finish(tm: &ThickMap, issues: Vec<ValidationIssue>, congestion: usize) -> ValidationReport {
    ValidationReport {
        ok: issues.is_empty(),
        issues,
        radius_ratio: tm.radius_ratio(),
        congestion,
        stages: tm.ledger.stages.clone(),
    }
}

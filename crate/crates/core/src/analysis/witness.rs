use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::counterexample::{u_level, CounterexampleSpec};
use super::mesh::TetMesh;
use super::{k_dilation, winding_number};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    /// Allowed distance from a boundary vertex image to ∂U_N.
    pub boundary_tol: f64,
    /// Candidate regular values tried.
    pub samples: usize,
    pub seed: u64,
}

impl WitnessConfig {
    /// Tolerance of two voxel diagonals at the configured pitch.
    pub fn for_spec(spec: &CounterexampleSpec) -> WitnessConfig {
        WitnessConfig {
            boundary_tol: 2.0 * 3f64.sqrt() * spec.resolution,
            samples: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    /// Max over tets of the 2-dilation of the affine piece.
    pub dil2: f64,
    pub dil2_tet: usize,
    pub boundary_deviation: f64,
    /// The regular value y of π∘F whose fiber was used.
    pub regular_value: [f64; 2],
    pub regular_samples: usize,
    pub samples_tried: usize,
    /// Length of the fiber γ′ and of the closed loop γ = γ′ ∪ γ″.
    pub fiber_length: f64,
    pub loop_length: f64,
    /// Area of the cone from the origin over γ.
    pub cone_area: f64,
    /// Annulus sample points and the winding number of π∘F(γ) about each.
    pub annulus_points: Vec<[f64; 2]>,
    pub windings: Vec<Option<i64>>,
    pub max_abs_winding: i64,
    /// mean |w| · area(annulus) / cone area: the 2-dilation needed for the
    /// image of the cone to cover the annulus with the sampled multiplicity
    /// (a valid bound when the cone lies in the domain, e.g. ball meshes).
    pub implied_bound: f64,
    pub consistent: bool,
}

type FaceKey = [usize; 3];

struct FiberPoint {
    pos: [f64; 3],
    image: [f64; 3],
}

fn faces_of(t: &[usize; 4]) -> [FaceKey; 4] {
    let mut out = [[0; 3]; 4];
    for (skip, slot) in out.iter_mut().enumerate() {
        let mut f = [0usize; 3];
        let mut n = 0;
        for (i, &v) in t.iter().enumerate() {
            if i != skip {
                f[n] = v;
                n += 1;
            }
        }
        f.sort_unstable();
        *slot = f;
    }
    out
}

/// Point of triangle f whose projected image is y, if any.
fn face_point(mesh: &TetMesh, f: &FaceKey, y: [f64; 2]) -> Option<FiberPoint> {
    let p = f.map(|v| [mesh.images[v][0], mesh.images[v][1]]);
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    if det.abs() < 1e-300 {
        return None;
    }
    let l1 =
        ((y[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (y[1] - p[0][1])) / det;
    let l2 =
        ((p[1][0] - p[0][0]) * (y[1] - p[0][1]) - (y[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    let l0 = 1.0 - l1 - l2;
    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
        return None;
    }
    let mix = |xs: [[f64; 3]; 3]| [0, 1, 2].map(|a| l0 * xs[0][a] + l1 * xs[1][a] + l2 * xs[2][a]);
    Some(FiberPoint {
        pos: mix(f.map(|v| mesh.vertices[v])),
        image: mix(f.map(|v| mesh.images[v])),
    })
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn norm(a: [f64; 3]) -> f64 {
    dist(a, [0.0; 3])
}

struct Fiber {
    /// Domain points and images from the slab end to the sphere end.
    points: Vec<FiberPoint>,
    slab_face: FaceKey,
    sphere_face: FaceKey,
    length: f64,
}

/// Fiber components of π∘F over y running from a boundary point mapped onto
/// the slab top to one mapped onto the upper sphere, staying above the slab.
/// None when y is not a regular value for the mesh.
fn fiber_over(
    mesh: &TetMesh,
    y: [f64; 2],
    boundary: &HashSet<FaceKey>,
    tol: f64,
) -> Option<Vec<Fiber>> {
    let mut points: HashMap<FaceKey, FiberPoint> = HashMap::new();
    let mut links: HashMap<FaceKey, Vec<FaceKey>> = HashMap::new();
    for t in &mesh.tets {
        let imgs = t.map(|v| mesh.images[v]);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for im in &imgs {
            for a in 0..2 {
                lo[a] = lo[a].min(im[a]);
                hi[a] = hi[a].max(im[a]);
            }
        }
        if y[0] < lo[0] || y[0] > hi[0] || y[1] < lo[1] || y[1] > hi[1] {
            continue;
        }
        let mut hit = Vec::with_capacity(2);
        for f in faces_of(t) {
            if points.contains_key(&f) {
                hit.push(f);
            } else if let Some(p) = face_point(mesh, &f, y) {
                points.insert(f, p);
                hit.push(f);
            }
        }
        match hit.len() {
            0 => {}
            2 => {
                links.entry(hit[0]).or_default().push(hit[1]);
                links.entry(hit[1]).or_default().push(hit[0]);
            }
            _ => return None,
        }
    }
    if links.values().any(|l| l.len() > 2) {
        return None;
    }
    let mut out = Vec::new();
    let mut used: HashSet<FaceKey> = HashSet::new();
    let mut ends: Vec<FaceKey> = links
        .keys()
        .filter(|f| boundary.contains(*f))
        .copied()
        .collect();
    ends.sort_unstable();
    for start in ends {
        if used.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        used.insert(start);
        let mut cur = start;
        loop {
            let next = links[&cur].iter().find(|f| !used.contains(*f)).copied();
            match next {
                Some(f) => {
                    used.insert(f);
                    chain.push(f);
                    cur = f;
                }
                None => break,
            }
        }
        let (a, b) = (chain[0], *chain.last().unwrap());
        if a == b || !boundary.contains(&b) {
            continue;
        }
        let on_slab = |f: &FaceKey| (points[f].image[2] - 0.5).abs() <= tol;
        let on_sphere =
            |f: &FaceKey| (norm(points[f].image) - 1.0).abs() <= tol && points[f].image[2] > 0.5;
        let above = chain.iter().all(|f| points[f].image[2] >= 0.5 - tol);
        if !above {
            continue;
        }
        let oriented = if on_slab(&a) && on_sphere(&b) {
            chain
        } else if on_slab(&b) && on_sphere(&a) {
            chain.into_iter().rev().collect()
        } else {
            continue;
        };
        let slab_face = oriented[0];
        let sphere_face = *oriented.last().unwrap();
        let pts: Vec<FiberPoint> = oriented
            .iter()
            .map(|f| FiberPoint {
                pos: points[f].pos,
                image: points[f].image,
            })
            .collect();
        let length = pts.windows(2).map(|w| dist(w[0].pos, w[1].pos)).sum();
        out.push(Fiber {
            points: pts,
            slab_face,
            sphere_face,
            length,
        });
    }
    Some(out)
}

/// Shortest path along boundary edges from the point `from` on triangle
/// `fa` to the point `to` on triangle `fb`, as mesh vertices.
fn boundary_path(
    mesh: &TetMesh,
    tris: &[FaceKey],
    fa: FaceKey,
    from: [f64; 3],
    fb: FaceKey,
    to: [f64; 3],
) -> Option<Vec<usize>> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for t in tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    // Dijkstra; distances are nonnegative so their bit patterns order correctly.
    let mut best: HashMap<usize, f64> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    for v in fa {
        let d = dist(from, mesh.vertices[v]);
        best.insert(v, d);
        heap.push(Reverse((d.to_bits(), v)));
    }
    let targets: HashSet<usize> = fb.into_iter().collect();
    let mut finish: Option<(f64, usize)> = None;
    while let Some(Reverse((bits, v))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > best[&v] {
            continue;
        }
        if let Some((fd, _)) = finish {
            if d >= fd {
                break;
            }
        }
        if targets.contains(&v) {
            let total = d + dist(mesh.vertices[v], to);
            if finish.map_or(true, |(fd, _)| total < fd) {
                finish = Some((total, v));
            }
        }
        for &w in adj.get(&v).into_iter().flatten() {
            let nd = d + dist(mesh.vertices[v], mesh.vertices[w]);
            if best.get(&w).map_or(true, |&b| nd < b) {
                best.insert(w, nd);
                prev.insert(w, v);
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    let (_, mut v) = finish?;
    let mut path = vec![v];
    while let Some(&p) = prev.get(&v) {
        path.push(p);
        v = p;
    }
    path.reverse();
    Some(path)
}

/// Fiber diagnostic for a PL map F given on a tetrahedral mesh of a ball.
///
/// Boundary vertices must land on ∂U_N. Over sampled values y in the disc
/// of radius 1/3, the fiber of π∘F above the slab joining the slab top to
/// the upper sphere is extracted (shortest over the samples) and closed up
/// by the shortest path along the mesh boundary; π∘F of the loop is then
/// wound about points of the annulus 1/3 ≤ |p| ≤ 1/2.
pub fn dilation_witness(
    mesh: &TetMesh,
    spec: &CounterexampleSpec,
    cfg: &WitnessConfig,
) -> Result<WitnessReport> {
    spec.validate()?;
    mesh.validate()?;
    let core = spec.core();
    let tris = mesh.boundary_triangles();
    let mut boundary_vertices: Vec<usize> = tris.iter().flatten().copied().collect();
    boundary_vertices.sort_unstable();
    boundary_vertices.dedup();
    let mut deviation = 0.0f64;
    for &v in &boundary_vertices {
        let im = mesh.images[v];
        let d = u_level(&core, crate::geometry::Point::from_slice(&im)).abs();
        if d > cfg.boundary_tol {
            return Err(Error::NotBoundaryRespecting {
                vertex: v,
                distance: d,
            });
        }
        deviation = deviation.max(d);
    }

    let (mut dil2, mut dil2_tet) = (0.0f64, 0);
    for t in 0..mesh.tets.len() {
        let d = mesh.differential(t);
        let m = DMatrix::from_iterator(3, 3, d.iter().copied());
        let k = k_dilation(&m, 2)?;
        if k > dil2 {
            dil2 = k;
            dil2_tet = t;
        }
    }

    let boundary: HashSet<FaceKey> = tris.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut regular = 0;
    let mut chosen: Option<([f64; 2], Fiber)> = None;
    for _ in 0..cfg.samples {
        let y = loop {
            let q = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            if q[0] * q[0] + q[1] * q[1] < 0.09 {
                break q;
            }
        };
        let Some(fibers) = fiber_over(mesh, y, &boundary, cfg.boundary_tol) else {
            continue;
        };
        regular += 1;
        for f in fibers {
            if chosen.as_ref().map_or(true, |c| f.length < c.1.length) {
                chosen = Some((y, f));
            }
        }
    }
    let Some((y, fiber)) = chosen else {
        return Err(Error::NoRegularValue(cfg.samples));
    };

    let top = fiber.points.last().unwrap();
    let bottom = &fiber.points[0];
    let path = boundary_path(
        mesh,
        &tris,
        fiber.sphere_face,
        top.pos,
        fiber.slab_face,
        bottom.pos,
    )
    .ok_or_else(|| Error::BadMesh("fiber ends lie on different boundary components".into()))?;
    // γ: fiber from slab to sphere, then back along the boundary.
    let mut domain: Vec<[f64; 3]> = fiber.points.iter().map(|p| p.pos).collect();
    let mut image: Vec<[f64; 3]> = fiber.points.iter().map(|p| p.image).collect();
    for &v in &path {
        domain.push(mesh.vertices[v]);
        image.push(mesh.images[v]);
    }
    let closed = |i: usize| (domain[i], domain[(i + 1) % domain.len()]);
    let loop_length: f64 = (0..domain.len())
        .map(|i| dist(closed(i).0, closed(i).1))
        .sum();
    let cone_area: f64 = (0..domain.len())
        .map(|i| {
            let (a, b) = closed(i);
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            0.5 * norm(c)
        })
        .sum();
    let projected: Vec<[f64; 2]> = image.iter().map(|p| [p[0], p[1]]).collect();
    let annulus_points: Vec<[f64; 2]> = (0..8)
        .map(|k| {
            let r = 1.0 / 3.0 + (k as f64 + 0.5) / 48.0;
            let a = (2 * k + 1) as f64 * PI / 8.0;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let windings: Vec<Option<i64>> = annulus_points
        .iter()
        .map(|&q| winding_number(&projected, q).ok())
        .collect();
    let abs: Vec<i64> = windings.iter().map(|w| w.map_or(0, i64::abs)).collect();
    let max_abs_winding = abs.iter().copied().max().unwrap_or(0);
    let mean = abs.iter().sum::<i64>() as f64 / abs.len() as f64;
    let annulus = PI * (0.25 - 1.0 / 9.0);
    let implied_bound = if cone_area > 0.0 {
        mean * annulus / cone_area
    } else {
        0.0
    };
    Ok(WitnessReport {
        dil2,
        dil2_tet,
        boundary_deviation: deviation,
        regular_value: y,
        regular_samples: regular,
        samples_tried: cfg.samples,
        fiber_length: fiber.length,
        loop_length,
        cone_area,
        annulus_points,
        windings,
        max_abs_winding,
        implied_bound,
        consistent: dil2 >= implied_bound * (1.0 - 1e-9),
    })
}

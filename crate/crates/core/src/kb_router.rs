//! Randomized routing of a boundary matching through a ball.
//!
//! Each matching edge a → b on ∂B_R becomes the polyline a → p → q → b
//! with waypoints p, q uniform in B_{R/2}. Congestion is the number of
//! distinct polylines meeting a closed unit ball; witness centers sit on a
//! grid of spacing `resolution`. Edges through over-full balls are
//! resampled until the routing is accepted or the retry budget runs out.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_dist, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub dim: usize,
    /// Pairs of endpoint ids.
    pub edges: Vec<(usize, usize)>,
    /// Endpoint id → point on ∂B_R.
    pub placements: Vec<Point>,
}

impl Matching {
    /// Every endpoint used exactly once and placements pairwise ≥ 1 apart.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.placements.len()];
        for &(a, b) in &self.edges {
            for v in [a, b] {
                match seen.get_mut(v) {
                    None => return Err(Error::BadConfig(format!("endpoint {v} has no placement"))),
                    Some(true) => return Err(Error::DuplicateEndpoint(v)),
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::BadConfig(format!("endpoint {v} is not matched")));
        }
        let mut buckets: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
        for (i, p) in self.placements.iter().enumerate() {
            if p.0.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            buckets.entry(bucket(p)).or_default().push(i);
        }
        for (i, p) in self.placements.iter().enumerate() {
            let k = bucket(p);
            let mut near = Vec::new();
            neighbor_keys(self.dim, k, &mut near);
            for key in near {
                for &j in buckets.get(&key).into_iter().flatten() {
                    if j > i && p.dist(self.placements[j]) < 1.0 {
                        return Err(Error::EndpointsTooClose { a: i, b: j });
                    }
                }
            }
        }
        Ok(())
    }
}

fn bucket(p: &Point) -> [i64; 4] {
    p.0.map(|x| x.floor() as i64)
}

fn neighbor_keys(dim: usize, k: [i64; 4], out: &mut Vec<[i64; 4]>) {
    out.push(k);
    for a in 0..dim {
        let len = out.len();
        for i in 0..len {
            for d in [-1, 1] {
                let mut q = out[i];
                q[a] += d;
                out.push(q);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KbConfig {
    pub congestion_cap: usize,
    /// Rerouting rounds after the first sample.
    pub max_retries: usize,
    pub seed: u64,
    /// Spacing of the witness-ball centers.
    pub resolution: f64,
    /// Precondition R^{n-1} ≥ radius_constant · |edges|.
    pub radius_constant: f64,
}

impl Default for KbConfig {
    fn default() -> Self {
        KbConfig {
            congestion_cap: 64,
            max_retries: 5,
            seed: 0,
            resolution: 0.5,
            radius_constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionReport {
    pub max: usize,
    /// Number of polylines met → number of witness balls meeting that many (≥ 1).
    pub histogram: BTreeMap<usize, usize>,
    /// Center of a ball attaining the maximum.
    pub witness: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbRouting {
    pub radius: f64,
    /// One polyline a → p → q → b per matching edge, in input order.
    pub paths: Vec<Vec<Point>>,
    pub report: CongestionReport,
    /// Rerouting rounds used (0 when the first sample is accepted).
    pub rounds: usize,
    pub rerouted: usize,
}

/// Per-ball polyline counts on the witness grid: a dense array over the
/// bounding box when it is small enough, a hash map otherwise.
struct Tally {
    dim: usize,
    res: f64,
    lo: [i64; 4],
    size: [usize; 4],
    dense: Option<(Vec<u32>, Vec<u32>)>,
    sparse: HashMap<[i64; 4], usize>,
}

const DENSE_LIMIT: usize = 1 << 26;

impl Tally {
    fn new(dim: usize, paths: &[Vec<Point>], res: f64) -> Tally {
        let mut lo = [0i64; 4];
        let mut size = [1usize; 4];
        let mut total = 1usize;
        if paths.iter().any(|p| !p.is_empty()) {
            for ax in 0..dim {
                let xs = paths.iter().flatten().map(|p| p.0[ax]);
                let min = xs.clone().fold(f64::INFINITY, f64::min);
                let max = xs.fold(f64::NEG_INFINITY, f64::max);
                lo[ax] = ((min - 1.0) / res).floor() as i64;
                let hi = ((max + 1.0) / res).ceil() as i64;
                size[ax] = (hi - lo[ax] + 1) as usize;
                total = total.saturating_mul(size[ax]);
            }
        }
        let dense = (total <= DENSE_LIMIT).then(|| (vec![0u32; total], vec![0u32; total]));
        Tally {
            dim,
            res,
            lo,
            size,
            dense,
            sparse: HashMap::new(),
        }
    }

    fn index(&self, k: [i64; 4]) -> usize {
        let mut i = 0;
        for ax in (0..self.dim).rev() {
            i = i * self.size[ax] + (k[ax] - self.lo[ax]) as usize;
        }
        i
    }

    fn key(&self, mut i: usize) -> [i64; 4] {
        let mut k = [0i64; 4];
        for ax in 0..self.dim {
            k[ax] = self.lo[ax] + (i % self.size[ax]) as i64;
            i /= self.size[ax];
        }
        k
    }

    fn count(&self, k: [i64; 4]) -> usize {
        match &self.dense {
            Some((c, _)) => c[self.index(k)] as usize,
            None => self.sparse.get(&k).copied().unwrap_or(0),
        }
    }

    /// Calls `visit(key, polyline)` once for every witness ball meeting a
    /// polyline; with `add` the pair is also counted.
    fn scan(
        &mut self,
        paths: &[Vec<Point>],
        add: bool,
        mut visit: impl FnMut(&Tally, [i64; 4], usize),
    ) {
        let (dim, res) = (self.dim, self.res);
        let mut seen: HashSet<[i64; 4]> = HashSet::new();
        for (id, path) in paths.iter().enumerate() {
            seen.clear();
            let tag = id as u32 + 1;
            for w in path.windows(2) {
                segment_balls(dim, w[0], w[1], res, &mut |k| {
                    let fresh = match self.dense.as_ref() {
                        Some(_) => {
                            let i = self.index(k);
                            let (c, last) = self.dense.as_mut().unwrap();
                            if last[i] == tag {
                                false
                            } else {
                                last[i] = tag;
                                if add {
                                    c[i] += 1;
                                }
                                true
                            }
                        }
                        None => {
                            let fresh = seen.insert(k);
                            if fresh && add {
                                *self.sparse.entry(k).or_insert(0) += 1;
                            }
                            fresh
                        }
                    };
                    if fresh {
                        visit(self, k, id);
                    }
                });
            }
        }
        if let Some((_, last)) = self.dense.as_mut() {
            last.iter_mut().for_each(|x| *x = 0);
        }
    }

    fn report(&self) -> CongestionReport {
        let mut histogram = BTreeMap::new();
        let mut best: Option<([i64; 4], usize)> = None;
        let mut note = |k: [i64; 4], c: usize| {
            *histogram.entry(c).or_insert(0) += 1;
            if best.map_or(true, |(bk, bc)| c > bc || (c == bc && k < bk)) {
                best = Some((k, c));
            }
        };
        match &self.dense {
            Some((counts, _)) => {
                for (i, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        note(self.key(i), c as usize);
                    }
                }
            }
            None => {
                for (&k, &c) in &self.sparse {
                    note(k, c);
                }
            }
        }
        CongestionReport {
            max: best.map_or(0, |b| b.1),
            histogram,
            witness: best.map(|(k, _)| key_point(self.dim, k, self.res)),
        }
    }
}

fn tally(dim: usize, paths: &[Vec<Point>], res: f64) -> Tally {
    let mut t = Tally::new(dim, paths, res);
    t.scan(paths, true, |_, _, _| {});
    t
}

/// Grid keys of centers within distance 1 of segment ab. The segment is
/// sliced along its dominant axis so each slice only scans a small box.
fn segment_balls(dim: usize, a: Point, b: Point, res: f64, f: &mut impl FnMut([i64; 4])) {
    let d = b - a;
    let major = (0..dim)
        .max_by(|&i, &j| d.0[i].abs().total_cmp(&d.0[j].abs()))
        .unwrap_or(0);
    let lo_m = ((a.0[major].min(b.0[major]) - 1.0) / res).ceil() as i64;
    let hi_m = ((a.0[major].max(b.0[major]) + 1.0) / res).floor() as i64;
    let mut k = [0i64; 4];
    for km in lo_m..=hi_m {
        let u = km as f64 * res;
        // Part of the segment whose major coordinate is within 1 of u.
        let (t0, t1) = if d.0[major].abs() < 1e-12 {
            (0.0, 1.0)
        } else {
            let s0 = (u - 1.0 - a.0[major]) / d.0[major];
            let s1 = (u + 1.0 - a.0[major]) / d.0[major];
            (s0.min(s1).max(0.0), s0.max(s1).min(1.0))
        };
        if t0 > t1 {
            continue;
        }
        let p0 = a + d * t0;
        let p1 = a + d * t1;
        let mut lo = [0i64; 4];
        let mut hi = [0i64; 4];
        for ax in 0..dim {
            if ax == major {
                lo[ax] = km;
                hi[ax] = km;
            } else {
                lo[ax] = ((p0.0[ax].min(p1.0[ax]) - 1.0) / res).ceil() as i64;
                hi[ax] = ((p0.0[ax].max(p1.0[ax]) + 1.0) / res).floor() as i64;
            }
        }
        k[..dim].copy_from_slice(&lo[..dim]);
        'scan: loop {
            let mut c = Point::ORIGIN;
            for ax in 0..dim {
                c.0[ax] = k[ax] as f64 * res;
            }
            if point_segment_dist(c, a, b) <= 1.0 + 1e-12 {
                f(k);
            }
            for ax in 0..dim {
                if k[ax] < hi[ax] {
                    k[ax] += 1;
                    continue 'scan;
                }
                k[ax] = lo[ax];
            }
            break;
        }
    }
}

fn key_point(dim: usize, k: [i64; 4], res: f64) -> Point {
    let mut c = Point::ORIGIN;
    for ax in 0..dim {
        c.0[ax] = k[ax] as f64 * res;
    }
    c
}

/// Maximum number of distinct polylines meeting a closed unit ball centered
/// on the grid `resolution·Z^n`, with the histogram of ball counts.
pub fn congestion(dim: usize, paths: &[Vec<Point>], resolution: f64) -> CongestionReport {
    tally(dim, paths, resolution).report()
}

fn sample_ball(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let mut p = Point::ORIGIN;
        for ax in 0..dim {
            p.0[ax] = rng.gen_range(-radius..=radius);
        }
        if p.norm_sq() <= radius * radius {
            return p;
        }
    }
}

/// Routes every matching edge through B_R (centered at the origin).
pub fn kb_route(m: &Matching, radius: f64, cfg: &KbConfig) -> Result<KbRouting> {
    m.validate()?;
    let dim = m.dim;
    if !(2..=crate::geometry::MAX_DIM).contains(&dim) {
        return Err(Error::BadDimension(dim));
    }
    if radius.powi(dim as i32 - 1) < cfg.radius_constant * m.edges.len() as f64 {
        return Err(Error::RadiusTooSmall {
            radius,
            edges: m.edges.len(),
        });
    }
    if let Some(p) = m
        .placements
        .iter()
        .find(|p| p.norm() > radius * (1.0 + 1e-9))
    {
        return Err(Error::PlacementOutsideBall(p.to_vec(dim)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let res = cfg.resolution;
    let sample = |rng: &mut ChaCha8Rng, a: usize, b: usize| {
        let p = sample_ball(dim, radius / 2.0, rng);
        let q = sample_ball(dim, radius / 2.0, rng);
        vec![m.placements[a], p, q, m.placements[b]]
    };
    let mut paths: Vec<Vec<Point>> = m
        .edges
        .iter()
        .map(|&(a, b)| sample(&mut rng, a, b))
        .collect();
    let mut rerouted = 0;
    for round in 0.. {
        let mut counts = tally(dim, &paths, res);
        let report = counts.report();
        if report.max <= cfg.congestion_cap {
            return Ok(KbRouting {
                radius,
                paths,
                report,
                rounds: round,
                rerouted,
            });
        }
        if round == cfg.max_retries {
            return Err(Error::CongestionUnachievable {
                max: report.max,
                cap: cfg.congestion_cap,
                center: report.witness.unwrap_or_default().to_vec(dim),
                rounds: round,
            });
        }
        let mut bad = vec![false; paths.len()];
        counts.scan(&paths, false, |t, k, id| {
            if t.count(k) > cfg.congestion_cap {
                bad[id] = true;
            }
        });
        for (i, &(a, b)) in m.edges.iter().enumerate() {
            if bad[i] {
                paths[i] = sample(&mut rng, a, b);
                rerouted += 1;
            }
        }
    }
    unreachable!()
}

/// `count` points on the sphere of radius `radius` about the origin: a
/// Fibonacci lattice in 3D and beyond (first three axes), evenly spaced in 2D.
pub fn sphere_points(dim: usize, count: usize, radius: f64) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            if dim == 2 {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                Point::from_slice(&[radius * t.cos(), radius * t.sin()])
            } else {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                Point::from_slice(&[radius * r * t.cos(), radius * r * t.sin(), radius * z])
            }
        })
        .collect()
}

/// A uniformly random perfect matching of `2·edges` sphere points.
pub fn random_sphere_matching(dim: usize, edges: usize, radius: f64, seed: u64) -> Matching {
    use rand::seq::SliceRandom;
    let placements = sphere_points(dim, 2 * edges, radius);
    let mut ids: Vec<usize> = (0..2 * edges).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let edges = ids.chunks(2).map(|c| (c[0], c[1])).collect();
    Matching {
        dim,
        edges,
        placements,
    }
}

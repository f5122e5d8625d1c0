use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{segment_segment_dist, Point};

/// Largest number of polylines running along one segment (unordered pair of
/// consecutive points, compared on the 1/2-grid after rounding).
pub fn max_shared_segment(dim: usize, paths: &[Vec<Point>]) -> (usize, Option<Point>) {
    let key = |p: Point| -> [i64; 4] {
        let mut k = [0i64; 4];
        for a in 0..dim {
            k[a] = (p.0[a] * 1e6).round() as i64;
        }
        k
    };
    let mut load: HashMap<([i64; 4], [i64; 4]), (usize, usize, Point)> = HashMap::new();
    for (id, path) in paths.iter().enumerate() {
        for w in path.windows(2) {
            let (a, b) = (key(w[0]), key(w[1]));
            let e =
                load.entry((a.min(b), a.max(b)))
                    .or_insert((0, usize::MAX, w[0].lerp(w[1], 0.5)));
            if e.1 != id {
                e.0 += 1;
                e.1 = id;
            }
        }
    }
    let best = load
        .values()
        .max_by(|x, y| x.0.cmp(&y.0).then(y.2 .0[0].total_cmp(&x.2 .0[0])));
    best.map_or((0, None), |b| (b.0, Some(b.2)))
}

/// Moves every interior point of every polyline by an independent random
/// vector of length ≤ 1/(2m); endpoints stay fixed. Points are kept inside
/// the closed ball of radius `radius` about the origin.
pub fn lift_polylines(
    dim: usize,
    paths: &[Vec<Point>],
    m: usize,
    radius: f64,
    seed: u64,
) -> Result<Vec<Vec<Point>>> {
    let (count, at) = max_shared_segment(dim, paths);
    if count > m {
        return Err(Error::TrackOverflow {
            count,
            m,
            at: at.unwrap_or_default().to_vec(dim),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 1.0 / (2.0 * m.max(1) as f64);
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let mut lifted = path.clone();
        let n = lifted.len();
        for p in lifted.iter_mut().take(n.saturating_sub(1)).skip(1) {
            let off = loop {
                let mut v = Point::ORIGIN;
                for a in 0..dim {
                    v.0[a] = rng.gen_range(-1.0..=1.0);
                }
                let s = v.norm_sq();
                if s <= 1.0 && s > 1e-6 {
                    break v.scale(reach);
                }
            };
            let mut q = *p + off;
            if q.norm() > radius {
                q = q.scale(radius / q.norm());
            }
            *p = q;
        }
        out.push(lifted);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub paths: (usize, usize),
    pub segments: (usize, usize),
    pub distance: f64,
}

/// First pair of segments from distinct polylines closer than `eps`, other
/// than at a point both polylines share as an endpoint. Segments meeting at
/// such a shared endpoint only count when they overlap along a common
/// direction. Candidates come from a uniform bucket grid.
pub fn find_intersection(dim: usize, paths: &[Vec<Point>], eps: f64) -> Option<Intersection> {
    let segs: Vec<(usize, usize, Point, Point)> = paths
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            p.windows(2)
                .enumerate()
                .map(move |(k, w)| (i, k, w[0], w[1]))
        })
        .collect();
    let cell = 1.0;
    let mut grid: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    for (s, &(_, _, a, b)) in segs.iter().enumerate() {
        let mut lo = [0i64; 4];
        let mut hi = [0i64; 4];
        for ax in 0..dim {
            lo[ax] = ((a.0[ax].min(b.0[ax]) - eps) / cell).floor() as i64;
            hi[ax] = ((a.0[ax].max(b.0[ax]) + eps) / cell).floor() as i64;
        }
        // Long segments get bucketed along their length, not their box.
        let len = a.dist(b);
        let steps = (len / (0.5 * cell)).ceil().max(1.0) as usize;
        let mut keys = HashSet::new();
        for t in 0..=steps {
            let p = a.lerp(b, t as f64 / steps as f64);
            let mut k = [0i64; 4];
            for ax in 0..dim {
                k[ax] = (p.0[ax] / cell).floor() as i64;
            }
            for_neighbors(dim, k, &mut |q| {
                if (0..dim).all(|ax| q[ax] >= lo[ax] && q[ax] <= hi[ax]) {
                    keys.insert(q);
                }
            });
        }
        for k in keys {
            grid.entry(k).or_default().push(s);
        }
    }
    let mut best: Option<Intersection> = None;
    let mut tested: HashSet<(usize, usize)> = HashSet::new();
    let mut buckets: Vec<_> = grid.iter().collect();
    buckets.sort_by_key(|(k, _)| **k);
    for (_, list) in buckets {
        for (x, &s) in list.iter().enumerate() {
            for &t in &list[x + 1..] {
                let (s, t) = (s.min(t), s.max(t));
                let (i, ki, a1, b1) = segs[s];
                let (j, kj, a2, b2) = segs[t];
                if i == j || !tested.insert((s, t)) {
                    continue;
                }
                let shared = shared_endpoint(paths, i, j, [a1, b1], [a2, b2]);
                // Non-parallel segments leaving a shared endpoint meet only there.
                let d = match shared {
                    Some((p, q1, q2)) => {
                        if (q1 - p).normalized().dot((q2 - p).normalized()) > 1.0 - 1e-12 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    }
                    None => segment_segment_dist(a1, b1, a2, b2),
                };
                if d < eps {
                    let hit = Intersection {
                        paths: (i, j),
                        segments: (ki, kj),
                        distance: d,
                    };
                    if best.map_or(true, |b| (hit.paths, hit.segments) < (b.paths, b.segments)) {
                        best = Some(hit);
                    }
                }
            }
        }
    }
    best
}

fn shared_endpoint(
    paths: &[Vec<Point>],
    i: usize,
    j: usize,
    s1: [Point; 2],
    s2: [Point; 2],
) -> Option<(Point, Point, Point)> {
    let ends_i = [paths[i][0], *paths[i].last().unwrap()];
    let ends_j = [paths[j][0], *paths[j].last().unwrap()];
    let same = |a: Point, b: Point| a.dist(b) < 1e-9;
    for &p in &ends_i {
        if !ends_j.iter().any(|&q| same(p, q)) {
            continue;
        }
        for (x, &a) in s1.iter().enumerate() {
            for (y, &b) in s2.iter().enumerate() {
                if same(a, p) && same(b, p) {
                    return Some((p, s1[1 - x], s2[1 - y]));
                }
            }
        }
    }
    None
}

fn for_neighbors(dim: usize, k: [i64; 4], f: &mut impl FnMut([i64; 4])) {
    let mut d = [-1i64; 4];
    loop {
        let mut q = k;
        for a in 0..dim {
            q[a] += d[a];
        }
        f(q);
        let mut a = 0;
        loop {
            if a == dim {
                return;
            }
            if d[a] < 1 {
                d[a] += 1;
                break;
            }
            d[a] = -1;
            a += 1;
        }
    }
}

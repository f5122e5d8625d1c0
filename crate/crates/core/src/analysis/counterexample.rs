use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_dist, Point};
use crate::voxel_domain::{Cell, VoxelDomain};

/// Largest allowed δ·N; keeps the tube's area bounded independently of N.
pub const AREA_CONSTANT: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    /// Number of turns N of the tube about the z-axis.
    pub n: usize,
    /// Tube radius δ.
    pub delta: f64,
    /// Voxel pitch.
    pub resolution: f64,
}

impl CounterexampleSpec {
    /// δ = 1/(16N) and pitch δ/3.
    pub fn new(n: usize) -> CounterexampleSpec {
        let delta = AREA_CONSTANT / n.max(1) as f64;
        CounterexampleSpec {
            n,
            delta,
            resolution: delta / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::BadCounterexample("N must be positive".into()));
        }
        if !(self.delta > 0.0) || self.delta * self.n as f64 > AREA_CONSTANT + 1e-12 {
            return Err(Error::BadCounterexample(format!(
                "δ·N = {} exceeds {AREA_CONSTANT}",
                self.delta * self.n as f64
            )));
        }
        if !(self.resolution > 0.0) || self.resolution >= self.delta / 2.0 {
            return Err(Error::ResolutionTooCoarse(format!(
                "pitch {} is not below δ/2 = {}",
                self.resolution,
                self.delta / 2.0
            )));
        }
        Ok(())
    }

    pub fn core(&self) -> CoreCurve {
        CoreCurve::new(self.n, self.delta)
    }
}

/// Core curve of the tube T_1: a short radial stub from inside the slab T_2
/// out to the helix radius at height z_hi, N counter-clockwise helix turns
/// descending to z_lo, then a radial exit through the sphere at z_lo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreCurve {
    pub n: usize,
    pub delta: f64,
    /// Helix radius √(5/8), the middle of 1/2 ≤ x² + y² ≤ 3/4.
    pub r0: f64,
    pub z_hi: f64,
    pub z_lo: f64,
    pub stub_start: f64,
    pub exit_end: f64,
}

impl CoreCurve {
    pub fn new(n: usize, delta: f64) -> CoreCurve {
        CoreCurve {
            n,
            delta,
            r0: (5.0f64 / 8.0).sqrt(),
            z_hi: 0.5 - delta,
            z_lo: 0.1,
            stub_start: 0.69,
            exit_end: 1.05,
        }
    }

    fn slope(&self) -> f64 {
        (self.z_hi - self.z_lo) / (TAU * self.n as f64)
    }

    fn turns(&self) -> f64 {
        TAU * self.n as f64
    }

    pub fn helix(&self, t: f64) -> Point {
        Point::from_slice(&[
            self.r0 * t.cos(),
            self.r0 * t.sin(),
            self.z_hi - self.slope() * t,
        ])
    }

    fn stub(&self) -> (Point, Point) {
        (
            Point::from_slice(&[self.stub_start, 0.0, self.z_hi]),
            self.helix(0.0),
        )
    }

    fn exit(&self) -> (Point, Point) {
        let end = self.helix(self.turns());
        (
            end,
            Point::from_slice(&[
                self.exit_end * end.0[0] / self.r0,
                self.exit_end * end.0[1] / self.r0,
                self.z_lo,
            ]),
        )
    }

    /// Distance from `p` to the curve when it is at most `cutoff`; otherwise
    /// some value above `cutoff`.
    pub fn distance(&self, p: Point, cutoff: f64) -> f64 {
        let (a, b) = self.stub();
        let (c, d) = self.exit();
        let mut best = point_segment_dist(p, a, b).min(point_segment_dist(p, c, d));
        let r = p.0[0].hypot(p.0[1]);
        // Helix points all lie at radius r0.
        if (r - self.r0).abs() > cutoff {
            return best.min((r - self.r0).abs());
        }
        // A helix point within `cutoff` differs in angle by at most w.
        let ratio = cutoff * cutoff / (2.0 * r.max(1e-12) * self.r0);
        let w = if ratio >= 2.0 {
            PI
        } else {
            (1.0 - ratio).acos().min(PI)
        };
        let phi = p.0[1].atan2(p.0[0]);
        let (s, top) = (self.slope(), self.turns());
        let z_of = |t: f64| self.z_hi - s * t;
        let d2 = |t: f64| {
            let q = self.helix(t);
            p.dist_sq(q)
        };
        let j_lo = ((-w - phi) / TAU).floor() as i64;
        let j_hi = ((top + w - phi) / TAU).ceil() as i64;
        for j in j_lo..=j_hi {
            let tj = phi + TAU * j as f64;
            if (p.0[2] - z_of(tj.clamp(0.0, top))).abs() > cutoff + s * w + 1e-12 {
                continue;
            }
            let (mut lo, mut hi) = ((tj - w).max(0.0), (tj + w).min(top));
            if lo > hi {
                continue;
            }
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if d2(m1) <= d2(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            best = best.min(d2(0.5 * (lo + hi)).sqrt());
        }
        best
    }

    pub fn in_tube(&self, p: Point) -> bool {
        self.distance(p, self.delta) < self.delta
    }

    /// Polyline through the curve with `per_turn` helix samples per turn.
    pub fn polyline(&self, per_turn: usize) -> Vec<Point> {
        let (a, _) = self.stub();
        let (_, d) = self.exit();
        let steps = per_turn * self.n;
        let mut out = vec![a];
        out.extend((0..=steps).map(|i| self.helix(self.turns() * i as f64 / steps as f64)));
        out.push(d);
        out
    }

    /// The xy-projection of [`Self::polyline`], as a closed loop.
    pub fn projected_loop(&self, per_turn: usize) -> Vec<[f64; 2]> {
        self.polyline(per_turn)
            .into_iter()
            .map(|p| [p.0[0], p.0[1]])
            .collect()
    }
}

/// Signed-distance-like function: negative in U_N, zero on ∂U_N. Exact for
/// the sphere and tube pieces when near them, a box bound for the slab.
pub(crate) fn u_level(core: &CoreCurve, p: Point) -> f64 {
    let delta = core.delta;
    let r = p.0[0].hypot(p.0[1]);
    let slab = (r - 0.5f64.sqrt())
        .max(0.5 - 2.0 * delta - p.0[2])
        .max(p.0[2] - 0.5);
    let tube = core.distance(p, 4.0 * delta) - delta;
    (p.norm() - 1.0).max(-slab.min(tube))
}

/// Column run-length voxel set: cell (i, j, k) spans
/// [lo + (i, j, k)·h, lo + (i + 1, j + 1, k + 1)·h]; each column stores
/// sorted, disjoint, non-touching half-open runs of k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    /// Index of the lowest cell along each axis, in units of h.
    pub offset: i64,
    pub runs: Vec<Vec<(u32, u32)>>,
}

fn merged_len(mut v: Vec<(i64, i64)>) -> i64 {
    v.sort_unstable();
    let mut total = 0;
    let mut cur: Option<(i64, i64)> = None;
    for (a, b) in v {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    total + cur.map_or(0, |(a, b)| b - a)
}

fn intersection_len(a: &[(u32, u32)], b: &[(u32, u32)]) -> i64 {
    let (mut i, mut j, mut total) = (0, 0, 0i64);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            total += (hi - lo) as i64;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

impl ColumnGrid {
    fn col(&self, i: i64, j: i64) -> &[(u32, u32)] {
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            &[]
        } else {
            &self.runs[i as usize * self.ny + j as usize]
        }
    }

    pub fn cell_count(&self) -> u64 {
        self.runs.iter().flatten().map(|r| (r.1 - r.0) as u64).sum()
    }

    /// Faces between a cell of the set and one outside it.
    pub fn face_count(&self) -> u64 {
        let mut faces = 0i64;
        for i in 0..=self.nx as i64 {
            for j in 0..=self.ny as i64 {
                let c = self.col(i, j);
                let total = |r: &[(u32, u32)]| r.iter().map(|x| (x.1 - x.0) as i64).sum::<i64>();
                faces += 2 * c.len() as i64;
                let (cx, cy) = (self.col(i - 1, j), self.col(i, j - 1));
                faces += total(c) + total(cx) - 2 * intersection_len(c, cx);
                faces += total(c) + total(cy) - 2 * intersection_len(c, cy);
            }
        }
        faces as u64
    }

    /// Euler characteristic of the union of the closed cells, V − E + F − C.
    pub fn euler_characteristic(&self) -> i64 {
        let half = |cols: &[&[(u32, u32)]]| -> i64 {
            merged_len(
                cols.iter()
                    .flat_map(|c| c.iter().map(|r| (r.0 as i64, r.1 as i64)))
                    .collect(),
            )
        };
        let closed = |cols: &[&[(u32, u32)]]| -> i64 {
            merged_len(
                cols.iter()
                    .flat_map(|c| c.iter().map(|r| (r.0 as i64, r.1 as i64 + 1)))
                    .collect(),
            )
        };
        let (mut v, mut e, mut f) = (0i64, 0i64, 0i64);
        let c = self.cell_count() as i64;
        for i in 0..=self.nx as i64 {
            for j in 0..=self.ny as i64 {
                let here = self.col(i, j);
                let x0 = self.col(i - 1, j);
                let y0 = self.col(i, j - 1);
                let xy = self.col(i - 1, j - 1);
                // Vertex column (i, j) touches four cell columns.
                v += closed(&[here, x0, y0, xy]);
                e += half(&[here, x0, y0, xy]);
                // Edges along x at (cell i, vertex j) and along y at (vertex i, cell j).
                e += closed(&[here, y0]) + closed(&[here, x0]);
                // Faces normal to z, x and y.
                f += closed(&[here]) + half(&[here, x0]) + half(&[here, y0]);
            }
        }
        v - e + f - c
    }

    /// Face-connected components of the set.
    pub fn components(&self) -> usize {
        let mut start = Vec::with_capacity(self.runs.len() + 1);
        let mut n = 0;
        for c in &self.runs {
            start.push(n);
            n += c.len();
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let join = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra.max(rb)] = ra.min(rb);
            }
        };
        for i in 0..self.nx {
            for j in 0..self.ny {
                let id = i * self.ny + j;
                for nb in [
                    (i + 1 < self.nx).then(|| (i + 1) * self.ny + j),
                    (j + 1 < self.ny).then(|| id + 1),
                ]
                .into_iter()
                .flatten()
                {
                    let (a, b) = (&self.runs[id], &self.runs[nb]);
                    let (mut x, mut y) = (0, 0);
                    while x < a.len() && y < b.len() {
                        if a[x].0.max(b[y].0) < a[x].1.min(b[y].1) {
                            join(&mut parent, start[id] + x, start[nb] + y);
                        }
                        if a[x].1 < b[y].1 {
                            x += 1;
                        } else {
                            y += 1;
                        }
                    }
                }
            }
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Point {
        let c = |t: usize| (self.offset + t as i64) as f64 * self.h + 0.5 * self.h;
        Point::from_slice(&[c(i), c(j), c(k)])
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        self.runs[i * self.ny + j]
            .iter()
            .any(|r| (r.0 as usize) <= k && k < r.1 as usize)
    }

    /// The set as a voxel domain with scale h, if it has at most `max_cells` cells.
    pub fn to_domain(&self, max_cells: u64) -> Result<VoxelDomain> {
        let count = self.cell_count();
        if count > max_cells {
            return Err(Error::BadCounterexample(format!(
                "{count} cells exceed the limit {max_cells}"
            )));
        }
        let mut cells: Vec<Cell> = Vec::with_capacity(count as usize);
        for i in 0..self.nx {
            for j in 0..self.ny {
                for r in &self.runs[i * self.ny + j] {
                    for k in r.0..r.1 {
                        cells.push([
                            self.offset + i as i64,
                            self.offset + j as i64,
                            self.offset + k as i64,
                            0,
                        ]);
                    }
                }
            }
        }
        VoxelDomain::with_scale(3, self.h, cells)
    }
}

/// Runs of a column from a per-cell mask.
fn runs_of(mask: &[bool]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < mask.len() {
        if mask[k] {
            let s = k;
            while k < mask.len() && mask[k] {
                k += 1;
            }
            out.push((s as u32, k as u32));
        } else {
            k += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleAudit {
    pub cells: u64,
    pub faces: u64,
    /// Face count times h²: the voxel measure of area(∂U_N).
    pub area: f64,
    pub euler_characteristic: i64,
    pub genus: i64,
    pub u_components: usize,
    pub t_components: usize,
    /// Separate tube crossings seen on the column at angle π, radius r0.
    pub turns_resolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub spec: CounterexampleSpec,
    pub core: CoreCurve,
    pub u: ColumnGrid,
    pub t: ColumnGrid,
    pub audit: CounterexampleAudit,
}

/// Voxelizes U_N = B³ − (T_1 ∪ T_2) by cell centers and audits the result.
pub fn generate_counterexample(spec: &CounterexampleSpec) -> Result<Counterexample> {
    spec.validate()?;
    let core = spec.core();
    let h = spec.resolution;
    let reach = core.exit_end + 2.0 * spec.delta + h;
    let m = (reach / h).ceil() as i64;
    let n = (2 * m) as usize;
    let offset = -m;
    let center = |t: usize| (offset + t as i64) as f64 * h + 0.5 * h;
    let k_of = |z: f64| ((z / h) - offset as f64 - 0.5).ceil().max(0.0) as usize;
    let delta = spec.delta;

    let mut u_runs = Vec::with_capacity(n * n);
    let mut t_runs = Vec::with_capacity(n * n);
    let mut mask_u = vec![false; n];
    let mut mask_t = vec![false; n];
    for i in 0..n {
        let x = center(i);
        for j in 0..n {
            let y = center(j);
            let r2 = x * x + y * y;
            let r = r2.sqrt();
            mask_u.iter_mut().for_each(|b| *b = false);
            mask_t.iter_mut().for_each(|b| *b = false);
            if r2 < 1.0 {
                let zb = (1.0 - r2).sqrt();
                for k in k_of(-zb)..n.min(k_of(zb)) {
                    let z = center(k);
                    if z * z + r2 < 1.0 {
                        mask_u[k] = true;
                    }
                }
            }
            if r2 <= 0.5 {
                for k in k_of(0.5 - 2.0 * delta)..n {
                    if center(k) > 0.5 {
                        break;
                    }
                    mask_t[k] = true;
                }
            }
            let near_ring = (r - core.r0).abs() < delta + h;
            let near_line = y.abs() < delta + h
                && x > core.stub_start - delta - h
                && x < core.exit_end + delta + h;
            if near_ring || near_line {
                for k in k_of(core.z_lo - delta - h)..n.min(k_of(core.z_hi + delta + h) + 1) {
                    if core.in_tube(Point::from_slice(&[x, y, center(k)])) {
                        mask_t[k] = true;
                    }
                }
            }
            for k in 0..n {
                if mask_t[k] {
                    mask_u[k] = false;
                }
            }
            u_runs.push(runs_of(&mask_u));
            t_runs.push(runs_of(&mask_t));
        }
    }
    let u = ColumnGrid {
        nx: n,
        ny: n,
        nz: n,
        h,
        offset,
        runs: u_runs,
    };
    let t = ColumnGrid {
        nx: n,
        ny: n,
        nz: n,
        h,
        offset,
        runs: t_runs,
    };

    let probe_i = (((-core.r0) / h - offset as f64 - 0.5).round().max(0.0) as usize).min(n - 1);
    let probe_j = ((-(offset as f64) - 0.5).round().max(0.0) as usize).min(n - 1);
    let turns_resolved = t.runs[probe_i * n + probe_j].len();
    let faces = u.face_count();
    let chi = u.euler_characteristic();
    let audit = CounterexampleAudit {
        cells: u.cell_count(),
        faces,
        area: faces as f64 * h * h,
        euler_characteristic: chi,
        genus: 1 - chi,
        u_components: u.components(),
        t_components: t.components(),
        turns_resolved,
    };
    // U_N is a ball: anything else means thin gaps were bridged or cut.
    if audit.t_components != 1
        || audit.u_components != 1
        || audit.turns_resolved != spec.n
        || audit.genus != 0
    {
        return Err(Error::ResolutionTooCoarse(format!(
            "T has {} components, U has {} with genus {}, {} of {} turns resolved",
            audit.t_components, audit.u_components, audit.genus, audit.turns_resolved, spec.n
        )));
    }
    Ok(Counterexample {
        spec: *spec,
        core,
        u,
        t,
        audit,
    })
}

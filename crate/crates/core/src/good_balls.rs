//! Good G-ball conditions and the recursive partition into certified pieces.
//!
//! All volumes here are face counts in lattice units (ω = 1). For a residual
//! domain W and a G-ball B:
//!
//! * `inside` = boundary faces of W whose W-side cell lies in B, the count
//!   of ∂W ∩ B;
//! * `cut` = faces between two W cells exactly one of which lies in B, the
//!   count of W ∩ ∂B.
//!
//! With these conventions removing W ∩ B from W changes the boundary count
//! by exactly `cut − inside`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::voxel_domain::{cell_center, cell_dist_sq, step, Cell, GBall, VoxelDomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    /// Boundary-dominance factor of condition (1).
    pub a: f64,
    /// Concentration factor; condition (3) bounds sub-balls by `a_tilde * a * s^(n-1)`.
    pub a_tilde: f64,
    /// Lower density of condition (2).
    pub delta: f64,
    /// Cost bound factor: Σ r_i^(n-1) < a_prime · vol(∂U).
    pub a_prime: f64,
    /// Flow capacity constant handed to the router.
    pub m_cap: u32,
}

impl PartitionConfig {
    /// Defaults: A = 8, Ã = 32, δ = min(0.01, A^-n), A' = 2 / ((1 - 1/A) δ).
    pub fn for_dim(dim: usize) -> PartitionConfig {
        let a = 8.0f64;
        Self::from_constants(a, 32.0, 0.01f64.min(a.powi(-(dim as i32))))
    }

    /// Small constants (A = 2, Ã = 32, δ = A^-n) giving many small pieces
    /// on desk-sized domains.
    pub fn fine(dim: usize) -> PartitionConfig {
        let a = 2.0f64;
        Self::from_constants(a, 32.0, a.powi(-(dim as i32)))
    }

    /// Fills in A' = 2 / ((1 - 1/A) δ) and the default flow capacity.
    pub fn from_constants(a: f64, a_tilde: f64, delta: f64) -> PartitionConfig {
        let a_prime = 2.0 / ((1.0 - 1.0 / a) * delta);
        PartitionConfig {
            a,
            a_tilde,
            delta,
            a_prime,
            m_cap: 64,
        }
    }

    /// Checks the constant relations for dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        if !(self.a > 1.0 && self.a_tilde > 1.0 && self.a_prime > 1.0) {
            return Err(Error::BadConfig(
                "a, a_tilde and a_prime must exceed 1".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::BadConfig(format!(
                "delta {} not in (0, 1)",
                self.delta
            )));
        }
        if self.m_cap == 0 {
            return Err(Error::BadConfig("m_cap must be positive".into()));
        }
        let lhs = (self.a * self.delta).powf(n / (n - 1.0));
        if lhs > self.delta * (1.0 + 1e-12) {
            return Err(Error::BadConfig(format!(
                "(A·δ)^(n/(n-1)) = {lhs} exceeds δ = {}",
                self.delta
            )));
        }
        let slack = self.a_prime * (1.0 - 1.0 / self.a) * self.delta;
        if slack <= 1.0 {
            return Err(Error::BadConfig(format!(
                "A'(1 - 1/A)δ = {slack} must exceed 1"
            )));
        }
        Ok(())
    }

    pub fn concentration_limit(&self, s: f64, dim: usize) -> f64 {
        self.a_tilde * self.a * s.powi(dim as i32 - 1)
    }
}

/// Which branch of the construction produced a ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallCase {
    Base,
    Concentrated,
    Isolated,
    Grown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBallWitness {
    pub center: Vec<f64>,
    pub radius: f64,
    pub boundary_inside: usize,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub boundary_inside: usize,
    pub cut: usize,
    pub radius: f64,
    pub witness: Option<SubBallWitness>,
}

impl ConditionReport {
    pub fn passes(&self) -> bool {
        self.cond1 && self.cond2 && self.cond3
    }
}

/// Radii of the witness family: 0.5, 1, 1.5, ... up to `max`.
pub fn witness_radii(min: f64, max: f64) -> impl Iterator<Item = f64> {
    let start = (min * 2.0).ceil().max(1.0) as i64;
    let stop = (max * 2.0).floor() as i64;
    (start..=stop).map(|k| k as f64 / 2.0)
}

/// Witness centers for a cell box `lo..=hi`: every cell center and every
/// lattice vertex, in lexicographic order of their doubled coordinates.
pub fn witness_centers(dim: usize, lo: &Cell, hi: &Cell) -> Vec<Point> {
    let mut out = Vec::new();
    let mut k = [0i64; 4];
    for a in 0..dim {
        k[a] = 2 * lo[a];
    }
    loop {
        let is_vertex = (0..dim).all(|a| k[a] % 2 == 0);
        let is_center = (0..dim).all(|a| k[a].rem_euclid(2) == 1);
        if is_vertex || is_center {
            let mut p = Point::ORIGIN;
            for a in 0..dim {
                p.0[a] = k[a] as f64 / 2.0;
            }
            out.push(p);
        }
        let mut a = dim;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if k[a] < 2 * hi[a] + 2 {
                k[a] += 1;
                break;
            }
            k[a] = 2 * lo[a];
        }
    }
}

/// Per-domain data for fast G-ball queries about many centers.
struct DomainIndex<'a> {
    w: &'a VoxelDomain,
    boundary_cells: Vec<(Cell, usize)>,
    faces: Vec<(Cell, Cell)>,
}

/// Inside/cut counts of the G-balls about one center, as functions of r.
struct CenterProfile {
    inside: Vec<(f64, usize)>,
    cut_open: Vec<f64>,
    cut_close: Vec<f64>,
}

impl<'a> DomainIndex<'a> {
    fn new(w: &'a VoxelDomain) -> Self {
        let counts = w.boundary_counts();
        let boundary_cells = w
            .cells()
            .iter()
            .zip(counts)
            .filter(|(_, n)| *n > 0)
            .map(|(&c, n)| (c, n))
            .collect();
        let faces = w
            .interior_faces()
            .map(|(c, a)| (c, step(c, a, 1)))
            .collect();
        DomainIndex {
            w,
            boundary_cells,
            faces,
        }
    }

    fn inside_profile(&self, q: Point) -> Vec<(f64, usize)> {
        let dim = self.w.dim();
        let mut v: Vec<(f64, usize)> = self
            .boundary_cells
            .iter()
            .map(|&(c, n)| (cell_dist_sq(q, c, dim), n))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0;
        for e in &mut v {
            acc += e.1;
            e.1 = acc;
        }
        v
    }

    fn profile(&self, q: Point) -> CenterProfile {
        let dim = self.w.dim();
        let mut open = Vec::with_capacity(self.faces.len());
        let mut close = Vec::with_capacity(self.faces.len());
        for &(c, d) in &self.faces {
            let (x, y) = (cell_dist_sq(q, c, dim), cell_dist_sq(q, d, dim));
            open.push(x.min(y));
            close.push(x.max(y));
        }
        open.sort_by(f64::total_cmp);
        close.sort_by(f64::total_cmp);
        CenterProfile {
            inside: self.inside_profile(q),
            cut_open: open,
            cut_close: close,
        }
    }
}

fn count_upto(sorted: &[f64], r2: f64) -> usize {
    sorted.partition_point(|&x| x <= r2)
}

fn inside_at(inside: &[(f64, usize)], r2: f64) -> usize {
    let k = inside.partition_point(|e| e.0 <= r2);
    if k == 0 {
        0
    } else {
        inside[k - 1].1
    }
}

impl CenterProfile {
    fn inside(&self, r: f64) -> usize {
        inside_at(&self.inside, r * r)
    }

    fn cut(&self, r: f64) -> usize {
        let r2 = r * r;
        count_upto(&self.cut_open, r2) - count_upto(&self.cut_close, r2)
    }
}

/// Decides conditions (1)–(3) for `ball` against residual `w`.
///
/// Condition (3) ranges over witness sub-balls (cell-center and lattice
/// vertex centers, half-integer radii s ≥ 1) whose cell set lies in `ball`.
pub fn check_conditions(w: &VoxelDomain, ball: &GBall, cfg: &PartitionConfig) -> ConditionReport {
    let index = DomainIndex::new(w);
    check_with_index(&index, ball, cfg)
}

fn check_with_index(index: &DomainIndex, ball: &GBall, cfg: &PartitionConfig) -> ConditionReport {
    let w = index.w;
    let dim = w.dim();
    let inside = ball.domain_boundary_inside(w);
    let cut = ball.domain_cut(w);
    let cond1 = inside as f64 > cfg.a * cut as f64;
    let cond2 = inside as f64 > cfg.delta * ball.radius.powi(dim as i32 - 1);
    let witness = concentrated_sub_ball(index, ball, cfg);
    ConditionReport {
        cond1,
        cond2,
        cond3: witness.is_none(),
        boundary_inside: inside,
        cut,
        radius: ball.radius,
        witness,
    }
}

fn concentrated_sub_ball(
    index: &DomainIndex,
    ball: &GBall,
    cfg: &PartitionConfig,
) -> Option<SubBallWitness> {
    let w = index.w;
    let dim = w.dim();
    let (wlo, whi) = w.bounding_box();
    let reach = ball.radius + (dim as f64).sqrt();
    let mut lo = wlo;
    let mut hi = whi;
    for a in 0..dim {
        lo[a] = lo[a].max((ball.center.0[a] - reach).floor() as i64);
        hi[a] = hi[a].min((ball.center.0[a] + reach).ceil() as i64);
        if lo[a] > hi[a] {
            return None;
        }
    }
    for q in witness_centers(dim, &lo, &hi) {
        let dq = q.dist(ball.center);
        if dq > reach {
            continue;
        }
        let prof = index.inside_profile(q);
        for s in witness_radii(1.0, reach - dq + 0.5) {
            let count = inside_at(&prof, s * s);
            let limit = cfg.concentration_limit(s, dim);
            if (count as f64) >= limit {
                let sub = GBall::new(dim, q, s);
                if sub.is_subset_of(ball) {
                    return Some(SubBallWitness {
                        center: q.to_vec(dim),
                        radius: s,
                        boundary_inside: count,
                        limit,
                    });
                }
            }
        }
    }
    None
}

/// Finds a good G-ball for `w` following the base case and Cases 1–3.
pub fn find_good_ball(
    w: &VoxelDomain,
    cfg: &PartitionConfig,
) -> Result<(GBall, BallCase, ConditionReport)> {
    let dim = w.dim();
    cfg.validate(dim)?;
    let index = DomainIndex::new(w);
    let accept = |ball: GBall, case: BallCase| -> Option<(GBall, BallCase, ConditionReport)> {
        let rep = check_with_index(&index, &ball, cfg);
        rep.passes().then_some((ball, case, rep))
    };

    if w.len() == 1 {
        let ball = GBall::new(dim, cell_center(w.cells()[0]), 2.0);
        return accept(ball, BallCase::Base)
            .ok_or_else(|| Error::NoGoodBall("single-cell base ball fails the conditions".into()));
    }

    let (lo, hi) = w.bounding_box();
    let diameter = (0..dim)
        .map(|a| ((hi[a] - lo[a] + 1) as f64).powi(2))
        .sum::<f64>()
        .sqrt();

    // Case 1: some witness ball holds too much boundary.
    let centers = witness_centers(dim, &lo, &hi);
    let mut best: Option<(f64, Point)> = None;
    for &q in &centers {
        let prof = index.inside_profile(q);
        for s in witness_radii(0.5, best.map_or(diameter, |b| b.0)) {
            if best.is_some_and(|b| s >= b.0) {
                break;
            }
            if inside_at(&prof, s * s) as f64 > cfg.concentration_limit(s, dim) {
                best = Some((s, q));
                break;
            }
        }
    }
    if let Some((mut t, mut q)) = best {
        // Shrink to a minimal ball: none of the family strictly inside it
        // satisfies the same inequality.
        'shrink: loop {
            let current = GBall::new(dim, q, t);
            for &q2 in &centers {
                if q2.dist(q) > t + (dim as f64).sqrt() {
                    continue;
                }
                let prof = index.inside_profile(q2);
                for s in witness_radii(0.5, t) {
                    if inside_at(&prof, s * s) as f64 > cfg.concentration_limit(s, dim) {
                        let cand = GBall::new(dim, q2, s);
                        if cand.cells().len() < current.cells().len() && cand.is_subset_of(&current)
                        {
                            t = s;
                            q = q2;
                            continue 'shrink;
                        }
                    }
                }
            }
            break;
        }
        if t <= dim as f64 {
            return Err(Error::NoGoodBall(format!(
                "minimal concentrated ball has radius {t} <= n = {dim}; increase a_tilde"
            )));
        }
        let ball = GBall::new(dim, q, t - dim as f64);
        return accept(ball, BallCase::Concentrated).ok_or_else(|| {
            Error::NoGoodBall(format!(
                "shrunken concentrated ball at {:?} fails",
                q.to_vec(dim)
            ))
        });
    }

    // Case 2: a small ball about a domain cell that cuts nothing.
    let r_small = cfg.delta.powf(-1.0 / (dim as f64 - 1.0));
    let profiles: Vec<(Cell, CenterProfile)> = w
        .cells()
        .iter()
        .map(|&c| (c, index.profile(cell_center(c))))
        .collect();
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for (i, (_, prof)) in profiles.iter().enumerate() {
        if let Some(r) = witness_radii(0.5, diameter + 1.0)
            .take_while(|&r| r < r_small)
            .find(|&r| prof.cut(r) == 0 && prof.inside(r) > 0)
        {
            candidates.push((r, i));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(r, i) in &candidates {
        let ball = GBall::new(dim, cell_center(profiles[i].0), r);
        if let Some(found) = accept(ball, BallCase::Isolated) {
            return Ok(found);
        }
    }

    // Case 3: grow from a deep cell until the cut drops below δ r^(n-1).
    let depth = w.depths();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| depth[j].cmp(&depth[i]).then(i.cmp(&j)));
    for &i in order.iter().take(64) {
        let prof = &profiles[i].1;
        let mut radii = vec![r_small];
        radii.extend(witness_radii(r_small, diameter + r_small + 1.0).filter(|&r| r > r_small));
        let t = radii
            .into_iter()
            .find(|&r| (prof.cut(r) as f64) < cfg.delta * r.powi(dim as i32 - 1));
        if let Some(t) = t {
            let ball = GBall::new(dim, cell_center(profiles[i].0), t);
            if let Some(found) = accept(ball, BallCase::Grown) {
                return Ok(found);
            }
        }
    }
    Err(Error::NoGoodBall(
        "no candidate centre yields a good ball; constants too loose for this domain".into(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub cells: Vec<Cell>,
    pub ball: GBall,
    pub case: BallCase,
    /// Residual component the ball was certified against.
    pub residual: Vec<Cell>,
    pub component: usize,
    pub report: ConditionReport,
}

/// Per-cut boundary ledger entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub piece: usize,
    pub boundary_before: usize,
    pub boundary_after: usize,
    pub boundary_inside: usize,
    pub cut: usize,
    pub decrease_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodBallPartition {
    pub dim: usize,
    pub pieces: Vec<Piece>,
    pub cost: f64,
    pub boundary_faces: usize,
    pub steps: Vec<StepRecord>,
}

impl GoodBallPartition {
    pub fn cost_ratio(&self) -> f64 {
        self.cost / self.boundary_faces as f64
    }

    /// Re-checks every partition invariant, returning the first violation.
    pub fn verify(
        &self,
        u: &VoxelDomain,
        cfg: &PartitionConfig,
    ) -> std::result::Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for (i, p) in self.pieces.iter().enumerate() {
            for c in &p.cells {
                if !seen.insert(*c) {
                    return Err(format!("cell {c:?} appears in two pieces"));
                }
                if !u.contains(c) {
                    return Err(format!("piece {i} holds foreign cell {c:?}"));
                }
                if !p.ball.contains(c) {
                    return Err(format!("piece {i} cell {c:?} outside its ball"));
                }
            }
            let residual =
                VoxelDomain::from_cells(self.dim, p.residual.clone()).map_err(|e| e.to_string())?;
            let rep = check_conditions(&residual, &p.ball, cfg);
            if !rep.passes() {
                return Err(format!("piece {i} ball fails replay: {rep:?}"));
            }
        }
        if seen.len() != u.len() {
            return Err(format!("pieces cover {} of {} cells", seen.len(), u.len()));
        }
        if let Some(s) = self.steps.iter().find(|s| !s.decrease_holds) {
            return Err(format!("boundary ledger violated at step {s:?}"));
        }
        let bound = cfg.a_prime * self.boundary_faces as f64;
        if self.cost >= bound {
            return Err(format!("cost {} >= bound {bound}", self.cost));
        }
        Ok(())
    }

    pub fn report(&self, cfg: &PartitionConfig) -> PartitionReport {
        PartitionReport {
            dim: self.dim,
            config: *cfg,
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceReport {
                    cells: p.cells.iter().map(|c| c[..self.dim].to_vec()).collect(),
                    center: p.ball.center.to_vec(self.dim),
                    radius: p.ball.radius,
                    case: p.case,
                    component: p.component,
                    conditions: p.report.clone(),
                })
                .collect(),
            steps: self.steps.clone(),
            cost: self.cost,
            boundary_faces: self.boundary_faces,
            cost_ratio: self.cost_ratio(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceReport {
    pub cells: Vec<Vec<i64>>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub case: BallCase,
    pub component: usize,
    pub conditions: ConditionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub dim: usize,
    pub config: PartitionConfig,
    pub pieces: Vec<PieceReport>,
    pub steps: Vec<StepRecord>,
    pub cost: f64,
    pub boundary_faces: usize,
    pub cost_ratio: f64,
}

/// Cuts `u` into pieces certified by good G-balls.
///
/// Residual components are processed in FIFO order; each cut removes at
/// least one cell, so the loop ends after at most `u.len()` steps.
pub fn partition(u: &VoxelDomain, cfg: &PartitionConfig) -> Result<GoodBallPartition> {
    let dim = u.dim();
    cfg.validate(dim)?;
    let unit = VoxelDomain::from_cells(dim, u.cells().iter().copied())?;
    let mut queue: std::collections::VecDeque<(usize, VoxelDomain)> =
        std::collections::VecDeque::new();
    let mut next_component = 0;
    for comp in unit.components() {
        queue.push_back((next_component, VoxelDomain::from_cells(dim, comp)?));
        next_component += 1;
    }
    let mut pieces = Vec::new();
    let mut steps = Vec::new();
    while let Some((component, w)) = queue.pop_front() {
        let (ball, case, report) = find_good_ball(&w, cfg)?;
        let (inside, rest): (Vec<Cell>, Vec<Cell>) =
            w.cells().iter().partition(|c| ball.contains(c));
        debug_assert!(!inside.is_empty());
        let before = w.boundary_faces().len();
        let after = match &w.restrict(|c| !ball.contains(c)) {
            Some(r) => r.boundary_faces().len(),
            None => 0,
        };
        let allowed = before as f64 - (1.0 - 1.0 / cfg.a) * report.boundary_inside as f64;
        steps.push(StepRecord {
            piece: pieces.len(),
            boundary_before: before,
            boundary_after: after,
            boundary_inside: report.boundary_inside,
            cut: report.cut,
            decrease_holds: after as f64 <= allowed + 1e-9,
        });
        pieces.push(Piece {
            cells: inside,
            ball,
            case,
            residual: w.cells().to_vec(),
            component,
            report,
        });
        if !rest.is_empty() {
            let rest = VoxelDomain::from_cells(dim, rest)?;
            for comp in rest.components() {
                queue.push_back((next_component, VoxelDomain::from_cells(dim, comp)?));
                next_component += 1;
            }
        }
    }
    let cost: f64 = pieces
        .iter()
        .map(|p| p.ball.radius.powi(dim as i32 - 1))
        .sum();
    let boundary_faces = unit.boundary_faces().len();
    let bound = cfg.a_prime * boundary_faces as f64;
    if cost >= bound {
        return Err(Error::CostBoundViolated { cost, bound });
    }
    Ok(GoodBallPartition {
        dim,
        pieces,
        cost,
        boundary_faces,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_domain::box_cells;

    fn c3(x: i64, y: i64, z: i64) -> Cell {
        [x, y, z, 0]
    }

    #[test]
    fn default_constants() {
        let cfg = PartitionConfig::for_dim(3);
        assert_eq!(cfg.a, 8.0);
        assert_eq!(cfg.a_tilde, 32.0);
        assert!((cfg.delta - 1.0 / 512.0).abs() < 1e-15);
        assert!((cfg.a_prime - 2.0 / (0.875 / 512.0)).abs() < 1e-9);
        cfg.validate(3).unwrap();
        PartitionConfig::for_dim(2).validate(2).unwrap();
        let fine = PartitionConfig::fine(3);
        assert_eq!(fine.delta, 0.125);
        assert_eq!(fine.a_prime, 32.0);
        fine.validate(3).unwrap();
        let mut bad = cfg;
        bad.delta = 0.5;
        assert!(bad.validate(3).is_err());
        let mut bad = cfg;
        bad.a_prime = 1.01;
        assert!(bad.validate(3).is_err());
    }

    #[test]
    fn single_cell_base_case() {
        let w = VoxelDomain::from_cells(3, vec![c3(0, 0, 0)]).unwrap();
        let cfg = PartitionConfig::for_dim(3);
        let ball = GBall::new(3, cell_center(c3(0, 0, 0)), 2.0);
        let rep = check_conditions(&w, &ball, &cfg);
        assert!(rep.cond1 && rep.cond2 && rep.cond3, "{rep:?}");
        assert_eq!(rep.cut, 0);
        let (b, case, _) = find_good_ball(&w, &cfg).unwrap();
        assert_eq!(case, BallCase::Base);
        assert_eq!(b.radius, 2.0);
        let p = partition(&w, &cfg).unwrap();
        assert_eq!(p.pieces.len(), 1);
        assert_eq!(p.cost, 4.0);
    }

    #[test]
    fn ball_missing_boundary_fails_cond2() {
        let w = VoxelDomain::from_cells(3, vec![c3(0, 0, 0)]).unwrap();
        let ball = GBall::new(3, Point::from_slice(&[10.5, 10.5, 10.5]), 1.0);
        let rep = check_conditions(&w, &ball, &PartitionConfig::for_dim(3));
        assert!(!rep.cond2);
    }

    #[test]
    fn small_blocks_get_certified_balls() {
        let cfg = PartitionConfig::for_dim(3);
        let block = VoxelDomain::from_cells(3, box_cells(3, &[0, 0, 0], &[2, 2, 2])).unwrap();
        let (b, _, _) = find_good_ball(&block, &cfg).unwrap();
        assert!(check_conditions(&block, &b, &cfg).passes());

        let bar = VoxelDomain::from_cells(3, box_cells(3, &[0, 0, 0], &[20, 1, 1])).unwrap();
        let (b, _, _) = find_good_ball(&bar, &cfg).unwrap();
        assert!(check_conditions(&bar, &b, &cfg).passes());
        assert!(b.radius <= cfg.delta.powf(-0.5) + 2.0f64.sqrt());
    }

    #[test]
    fn block_partition_respects_invariants() {
        let cfg = PartitionConfig::for_dim(3);
        let u = VoxelDomain::from_cells(3, box_cells(3, &[0, 0, 0], &[4, 4, 4])).unwrap();
        assert_eq!(u.boundary_faces().len(), 96);
        let p = partition(&u, &cfg).unwrap();
        p.verify(&u, &cfg).unwrap();
        assert!(p.cost < cfg.a_prime * 96.0);
    }

    #[test]
    fn fine_partition_cuts_elongated_domains() {
        let cfg = PartitionConfig::fine(3);
        let mut cells = box_cells(3, &[0, 0, 0], &[3, 3, 3]);
        cells.extend(box_cells(3, &[3, 1, 1], &[9, 2, 2]));
        cells.extend(box_cells(3, &[9, 0, 0], &[12, 3, 3]));
        let u = VoxelDomain::from_cells(3, cells).unwrap();
        let p = partition(&u, &cfg).unwrap();
        p.verify(&u, &cfg).unwrap();
        assert!(p.pieces.len() > 1);
    }

    #[test]
    fn concentrated_case_uses_shrunken_ball() {
        // A comb of parallel strips has boundary growing like r^2 inside a
        // ball of radius r, so a large ball trips the concentration limit.
        let cfg = PartitionConfig::from_constants(2.0, 8.0, 0.25);
        cfg.validate(2).unwrap();
        let mut cells = Vec::new();
        for y in (0..24).step_by(2) {
            cells.extend(box_cells(2, &[0, y], &[30, y + 1]));
        }
        cells.extend(box_cells(2, &[0, 0], &[1, 23]));
        let u = VoxelDomain::from_cells(2, cells).unwrap();
        let (ball, case, rep) = find_good_ball(&u, &cfg).unwrap();
        assert_eq!(case, BallCase::Concentrated);
        assert!(rep.passes());
        assert!(ball.radius > 0.0);
    }
}

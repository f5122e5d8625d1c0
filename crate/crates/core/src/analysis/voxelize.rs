use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::voxel_domain::{Cell, VoxelDomain};

/// Cells of pitch `pitch` whose centers lie in the box `lo..=hi` and
/// satisfy f < 0. Centers sit on pitch·Z^n, so cell k is centered at
/// k·pitch; it becomes the unit cell k of a domain with scale `pitch`.
pub fn voxelize_implicit(
    dim: usize,
    f: impl Fn(Point) -> f64,
    lo: &[f64],
    hi: &[f64],
    pitch: f64,
) -> Result<VoxelDomain> {
    if !(1..=crate::geometry::MAX_DIM).contains(&dim) || lo.len() != dim || hi.len() != dim {
        return Err(Error::BadDimension(dim));
    }
    if !(pitch > 0.0) {
        return Err(Error::BadConfig(format!("pitch {pitch} must be positive")));
    }
    let start: Vec<i64> = lo.iter().map(|x| (x / pitch).ceil() as i64).collect();
    let end: Vec<i64> = hi.iter().map(|x| (x / pitch).floor() as i64 + 1).collect();
    let mut cells = Vec::new();
    let mut k: Cell = [0; 4];
    k[..dim].copy_from_slice(&start);
    if (0..dim).any(|a| start[a] >= end[a]) {
        return Err(Error::EmptyResult);
    }
    'scan: loop {
        let mut p = Point::ORIGIN;
        for a in 0..dim {
            p.0[a] = k[a] as f64 * pitch;
        }
        if f(p) < 0.0 {
            cells.push(k);
        }
        for a in 0..dim {
            if k[a] + 1 < end[a] {
                k[a] += 1;
                continue 'scan;
            }
            k[a] = start[a];
        }
        break;
    }
    if cells.is_empty() {
        return Err(Error::EmptyResult);
    }
    VoxelDomain::with_scale(dim, pitch, cells)
}

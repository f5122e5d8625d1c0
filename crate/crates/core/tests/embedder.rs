use thick_embed::embedder::*;
use thick_embed::geometry::Point;
use thick_embed::good_balls::{partition, PartitionConfig};
use thick_embed::voxel_domain::{box_cells, Cell, VoxelDomain};

fn dumbbell() -> VoxelDomain {
    let mut cells = box_cells(3, &[0, 0, 0], &[3, 3, 3]);
    cells.extend(box_cells(3, &[9, 0, 0], &[12, 3, 3]));
    cells.extend(box_cells(3, &[3, 1, 1], &[9, 2, 2]));
    VoxelDomain::from_cells(3, cells).unwrap()
}

fn embed(u: &VoxelDomain, cfg: &PartitionConfig) -> ThickMap {
    let part = partition(u, cfg).unwrap();
    assemble(u, &part, &EmbedConfig::default()).unwrap()
}

#[test]
fn single_cell_routes_radially() {
    let u = VoxelDomain::from_cells(3, vec![[0, 0, 0, 0] as Cell]).unwrap();
    let tm = embed(&u, &PartitionConfig::for_dim(3));
    assert_eq!(tm.pieces.len(), 1);
    assert_eq!(tm.ledger.boundary_edges, 6);
    assert_eq!(tm.ledger.crossing_edges, 0);
    assert_eq!(tm.ledger.max_edge_load, 1);
    for (path, kind) in tm.edge_paths.iter().zip(&tm.edge_kinds) {
        assert_eq!(*kind, EdgeKind::Boundary(0));
        let last = path[path.len() - 1];
        let before = path[path.len() - 2];
        // Final segment is radial.
        assert!((last.normalized().dot(before.normalized()) - 1.0).abs() < 1e-12);
    }
    let rep = validate_thick_map(&tm, &u.grid_graph());
    assert!(rep.ok, "{:?}", rep.first());
}

#[test]
fn block_passes_validation() {
    let u = VoxelDomain::from_cells(3, box_cells(3, &[0, 0, 0], &[4, 4, 4])).unwrap();
    let tm = embed(&u, &PartitionConfig::for_dim(3));
    let rep = validate_thick_map(&tm, &u.grid_graph());
    assert!(rep.ok, "{:?}", rep.first());
    assert!(rep.radius_ratio < 32.0);
    assert!(tm.ledger.max_edge_load <= 64);
}

#[test]
fn dumbbell_has_crossing_edges() {
    let u = dumbbell();
    let tm = embed(&u, &PartitionConfig::fine(3));
    assert!(tm.pieces.len() > 1);
    assert!(tm.ledger.crossing_edges > 0);
    // Each routed end leaves through one face of its piece.
    for p in &tm.pieces {
        assert_eq!(p.demand, p.boundary_faces);
        assert!(p.cells > 0);
    }
    assert_eq!(tm.pieces.iter().map(|p| p.cells).sum::<usize>(), u.len());
    let ends = 2 * tm.ledger.crossing_edges;
    assert!((ends as f64) <= tm.radius * tm.radius);
    let rep = validate_thick_map(&tm, &u.grid_graph());
    assert!(rep.ok, "{:?}", rep.first());

    let lifted = lift_to_tracks(&tm, tm.ledger.max, 3).unwrap();
    assert!(find_intersection(3, &lifted.edge_paths, 1e-9).is_none());
    let rep = validate_thick_map(&lifted, &u.grid_graph());
    assert!(rep.ok, "{:?}", rep.first());
    for (a, b) in tm.edge_paths.iter().zip(&lifted.edge_paths) {
        for (p, q) in a.iter().zip(b) {
            assert!(p.dist(*q) <= 0.5 / tm.ledger.max as f64 + 1e-12);
        }
    }
}

#[test]
fn corrupted_boundary_vertex_is_caught() {
    let u = VoxelDomain::from_cells(3, box_cells(3, &[0, 0, 0], &[2, 2, 2])).unwrap();
    let g = u.grid_graph();
    let mut tm = embed(&u, &PartitionConfig::for_dim(3));
    let v = g.interior_count + 3;
    tm.vertex_images[v] = tm.vertex_images[v].scale(0.5);
    let rep = validate_thick_map(&tm, &g);
    assert!(!rep.ok);
    let first = rep.first().unwrap();
    assert_eq!(first.check, "boundary_flag");
    assert!(first.witness.contains(&format!("vertex {v} ")));
}

#[test]
fn map_file_round_trip_and_determinism() {
    let u = dumbbell();
    let g = u.grid_graph();
    let a = embed(&u, &PartitionConfig::fine(3));
    let b = embed(&u, &PartitionConfig::fine(3));
    let ja = serde_json::to_string(&a.to_file(&g)).unwrap();
    assert_eq!(ja, serde_json::to_string(&b.to_file(&g)).unwrap());
    let back: MapFile = serde_json::from_str(&ja).unwrap();
    let tm = ThickMap::from_file(&back);
    assert!(validate_thick_map(&tm, &g).ok);
    let obj = a.to_obj();
    assert_eq!(
        obj.lines().filter(|l| l.starts_with("o ")).count(),
        g.edges.len()
    );
}

fn angle(a: Point, b: Point) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

#[test]
fn fifty_mixed_balls() {
    let radii: Vec<f64> = (0..50).map(|i| 0.5 + (i % 7) as f64 * 0.75).collect();
    let mut c = 4.0;
    let p = loop {
        match pack_balls(3, &radii, c, 1.0) {
            Ok(p) => break p,
            Err(_) => c *= 1.25,
        }
    };
    for i in 0..50 {
        let (pi, ri) = (p.centers[i], 2.0 * radii[i]);
        assert!(pi.norm() + ri <= p.radius + 1e-9);
        assert!(pi.norm() >= p.radius / 2.0 - 1e-9);
        for j in 0..i {
            let (pj, rj) = (p.centers[j], 2.0 * radii[j]);
            assert!(pi.dist(pj) > ri + rj);
            // Shadows: cones from the origin over the two balls are disjoint.
            assert!(angle(pi, pj) > (ri / pi.norm()).asin() + (rj / pj.norm()).asin());
        }
    }
}

#[test]
fn congestion_one_track_lift_is_small_offset() {
    let paths = vec![
        vec![
            Point::from_slice(&[0.0, 0.0, 0.0]),
            Point::from_slice(&[0.5, 0.0, 0.0]),
            Point::from_slice(&[1.0, 0.0, 0.0]),
        ],
        vec![
            Point::from_slice(&[0.0, 3.0, 0.0]),
            Point::from_slice(&[0.5, 3.0, 0.0]),
            Point::from_slice(&[1.0, 3.0, 0.0]),
        ],
    ];
    let lifted = lift_polylines(3, &paths, 1, 10.0, 0).unwrap();
    for (a, b) in paths.iter().zip(&lifted) {
        assert_eq!(a[0], b[0]);
        assert_eq!(a[2], b[2]);
        assert!(a[1].dist(b[1]) <= 0.5);
    }
}

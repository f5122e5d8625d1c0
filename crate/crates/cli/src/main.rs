use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thick_embed::analysis::{
    dilation_witness, generate_counterexample, k_dilation, voxel_mesh, voxelize_implicit,
    winding_number, CounterexampleSpec, LinearMapSpec, TetMesh, WitnessConfig,
};
use thick_embed::embedder::{
    assemble, lift_to_tracks, validate_thick_map, EmbedConfig, MapFile, ThickMap,
};
use thick_embed::flow_router::{route_to_boundary, route_unchecked, RouteConfig};
use thick_embed::good_balls::{partition, PartitionConfig};
use thick_embed::kb_router::{kb_route, KbConfig, Matching};
use thick_embed::voxel_domain::{DomainFile, VoxelDomain};
use thick_embed::Point;

#[derive(Parser)]
#[command(
    name = "thickembed",
    about = "Thick embeddings of voxel grid graphs and U_N diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    /// |x|₂ < size
    Ball,
    /// |x|∞ < size
    Cube,
    /// size − thickness < |x|₂ < size
    Shell,
}

#[derive(Subcommand)]
enum Cmd {
    /// Voxelize an implicit shape centered at the origin.
    Voxelize {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        size: f64,
        #[arg(long, default_value_t = 1.0)]
        thickness: f64,
        #[arg(long, default_value_t = 1.0)]
        pitch: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cell count, boundary area and grid-graph sizes of a domain.
    Info { domain: PathBuf },
    /// Good-ball partition report.
    Partition {
        domain: PathBuf,
        /// PartitionConfig JSON; defaults for the domain's dimension otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Route half-grid placements to the boundary of a ball by max-flow.
    Route {
        /// Center coordinates followed by the radius, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        ball: String,
        /// JSON list of points.
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 64)]
        capacity: i64,
        /// Density constant C_S of the placement precondition.
        #[arg(long, default_value_t = 8.0)]
        density: f64,
        /// Skip the density precondition.
        #[arg(long)]
        unchecked: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized waypoint routing of a matching through B_R.
    Kbroute {
        /// Matching JSON: { "dim", "edges": [[a, b], ...], "placements": [[..], ...] }.
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        cap: usize,
        #[arg(long, default_value_t = 5)]
        retries: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Thick embedding of G(U, 1) into a ball.
    Embed {
        domain: PathBuf,
        /// JSON { "partition": PartitionConfig, "embed": EmbedConfig }, both optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write all polylines as OBJ.
        #[arg(long)]
        obj: Option<PathBuf>,
        /// Lift to disjoint tracks before writing.
        #[arg(long)]
        lift: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-check a map file against its domain.
    Validate { domain: PathBuf, map: PathBuf },
    /// Product of the k largest singular values of a matrix.
    Dilation {
        /// Row-major JSON matrix, e.g. [[1,0],[0,2]], or a path to one.
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        k: usize,
    },
    /// Winding number of a closed planar polyline about a point.
    Winding {
        /// JSON list of [x, y] points.
        #[arg(long = "loop")]
        lp: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Voxelize U_N and audit it.
    Counterexample {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        resolution: Option<f64>,
        /// Run-length voxelization with core curve and audit.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plain domain JSON (refused above 2^24 cells).
        #[arg(long)]
        domain_out: Option<PathBuf>,
        /// Tetrahedral mesh of U_N with identity images, for `witness`.
        #[arg(long)]
        mesh_out: Option<PathBuf>,
    },
    /// Fiber and winding diagnostic for a PL map B³ → U_N.
    Witness {
        /// Mesh JSON { "vertices", "tets", "images" }.
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Default, Deserialize)]
struct EmbedFile {
    partition: Option<PartitionConfig>,
    embed: Option<EmbedConfig>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, serde_json::to_string(value)?)
            .with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", serde_json::to_string_pretty(value)?) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
                r => Ok(r?),
            }
        }
    }
}

fn trim(dim: usize, paths: &[Vec<Point>]) -> Vec<Vec<Vec<f64>>> {
    paths
        .iter()
        .map(|p| p.iter().map(|q| q.to_vec(dim)).collect())
        .collect()
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {t:?}"))
        })
        .collect()
}

fn load_domain(path: &Path) -> Result<VoxelDomain> {
    Ok(VoxelDomain::from_file(&read_json::<DomainFile>(path)?)?)
}

fn spec_for(n: usize, delta: Option<f64>, resolution: Option<f64>) -> CounterexampleSpec {
    let mut spec = CounterexampleSpec::new(n);
    if let Some(d) = delta {
        spec.delta = d;
        spec.resolution = d / 3.0;
    }
    if let Some(r) = resolution {
        spec.resolution = r;
    }
    spec
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Voxelize {
            shape,
            dim,
            size,
            thickness,
            pitch,
            out,
        } => {
            let reach = size + pitch;
            let lo = vec![-reach; dim];
            let hi = vec![reach; dim];
            let d = match shape {
                Shape::Ball => voxelize_implicit(dim, |p: Point| p.norm() - size, &lo, &hi, pitch)?,
                Shape::Cube => voxelize_implicit(
                    dim,
                    |p: Point| p.0[..dim].iter().fold(0.0f64, |m, x| m.max(x.abs())) - size,
                    &lo,
                    &hi,
                    pitch,
                )?,
                Shape::Shell => voxelize_implicit(
                    dim,
                    |p: Point| (p.norm() - size + thickness / 2.0).abs() - thickness / 2.0,
                    &lo,
                    &hi,
                    pitch,
                )?,
            };
            emit(&d.to_file(), out.as_deref())
        }
        Cmd::Info { domain } => {
            let u = load_domain(&domain)?;
            let g = u.grid_graph();
            emit(
                &json!({
                    "dim": u.dim(),
                    "scale": u.scale(),
                    "cells": u.len(),
                    "boundary_faces": u.boundary_faces().len(),
                    "boundary_area": u.boundary_area(),
                    "volume": u.volume(),
                    "components": u.components().len(),
                    "grid_graph": {
                        "vertices": g.vertices.len(),
                        "interior_vertices": g.interior_count,
                        "boundary_vertices": g.vertices.len() - g.interior_count,
                        "edges": g.edges.len(),
                        "interior_edges": g.interior_edge_count(),
                    },
                }),
                None,
            )
        }
        Cmd::Partition {
            domain,
            config,
            out,
        } => {
            let u = load_domain(&domain)?;
            let cfg = match config {
                Some(p) => read_json(&p)?,
                None => PartitionConfig::for_dim(u.dim()),
            };
            let part = partition(&u, &cfg)?;
            part.verify(&u, &cfg).map_err(anyhow::Error::msg)?;
            emit(&part.report(&cfg), out.as_deref())
        }
        Cmd::Route {
            ball,
            points,
            capacity,
            density,
            unchecked,
            out,
        } => {
            let b = floats(&ball)?;
            if b.len() < 3 {
                bail!("--ball needs center coordinates and a radius");
            }
            let dim = b.len() - 1;
            let center = Point::from_slice(&b[..dim]);
            let pts: Vec<Vec<f64>> = read_json(&points)?;
            let pts: Vec<Point> = pts
                .iter()
                .map(|p| {
                    if p.len() == dim {
                        Ok(Point::from_slice(p))
                    } else {
                        bail!("point {p:?} is not {dim}-dimensional")
                    }
                })
                .collect::<Result<_>>()?;
            let frag = if unchecked {
                route_unchecked(dim, center, b[dim], &pts, capacity, |_| true)?
            } else {
                route_to_boundary(
                    dim,
                    center,
                    b[dim],
                    &pts,
                    &RouteConfig {
                        m: capacity,
                        density,
                    },
                    |_| true,
                )?
            };
            emit(
                &json!({
                    "paths": trim(dim, &frag.paths),
                    "exits": frag.exits.iter().map(|e| e.to_vec(dim)).collect::<Vec<_>>(),
                    "value": frag.value,
                    "max_edge_load": frag.max_edge_load,
                    "load_histogram": frag.load_histogram,
                }),
                out.as_deref(),
            )
        }
        Cmd::Kbroute {
            edges,
            radius,
            seed,
            cap,
            retries,
            out,
        } => {
            let m: Matching = read_json(&edges)?;
            let cfg = KbConfig {
                seed,
                congestion_cap: cap,
                max_retries: retries,
                ..KbConfig::default()
            };
            let r = kb_route(&m, radius, &cfg)?;
            emit(
                &json!({
                    "radius": r.radius,
                    "paths": trim(m.dim, &r.paths),
                    "congestion": {"max": r.report.max, "histogram": r.report.histogram,
                        "witness": r.report.witness.map(|w| w.to_vec(m.dim))},
                    "rounds": r.rounds,
                    "rerouted": r.rerouted,
                }),
                out.as_deref(),
            )
        }
        Cmd::Embed {
            domain,
            config,
            out,
            obj,
            lift,
            seed,
        } => {
            let u = load_domain(&domain)?;
            let file: EmbedFile = match config {
                Some(p) => read_json(&p)?,
                None => EmbedFile::default(),
            };
            let pcfg = file
                .partition
                .unwrap_or_else(|| PartitionConfig::for_dim(u.dim()));
            let ecfg = file.embed.unwrap_or_default();
            let part = partition(&u, &pcfg)?;
            let mut tm = assemble(&u, &part, &ecfg)?;
            if lift {
                tm = lift_to_tracks(&tm, tm.ledger.max, seed)?;
            }
            let g = u.grid_graph();
            let rep = validate_thick_map(&tm, &g);
            emit(&tm.to_file(&g), Some(&out))?;
            if let Some(o) = obj {
                fs::write(&o, tm.to_obj()).with_context(|| format!("writing {}", o.display()))?;
            }
            emit(
                &json!({"ok": rep.ok, "R": tm.radius, "radius_ratio": rep.radius_ratio, "pieces": tm.pieces.len(),
                    "congestion": rep.congestion, "issues": rep.issues.len(), "ledger": tm.ledger}),
                None,
            )
        }
        Cmd::Validate { domain, map } => {
            let u = load_domain(&domain)?;
            let tm = ThickMap::from_file(&read_json::<MapFile>(&map)?);
            let rep = validate_thick_map(&tm, &u.grid_graph());
            emit(&rep, None)?;
            if !rep.ok {
                std::process::exit(1);
            }
            Ok(())
        }
        Cmd::Dilation { matrix, k } => {
            let text = if Path::new(&matrix).exists() {
                fs::read_to_string(&matrix)?
            } else {
                matrix
            };
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&text).context("matrix must be a JSON list of rows")?;
            let a = LinearMapSpec { matrix: rows }.to_matrix()?;
            emit(&json!({"k": k, "dilation": k_dilation(&a, k)?}), None)
        }
        Cmd::Winding { lp, point } => {
            let pts: Vec<[f64; 2]> = read_json(&lp)?;
            let p = floats(&point)?;
            if p.len() != 2 {
                bail!("--point needs x,y");
            }
            emit(
                &json!({"winding": winding_number(&pts, [p[0], p[1]])?}),
                None,
            )
        }
        Cmd::Counterexample {
            n,
            delta,
            resolution,
            out,
            domain_out,
            mesh_out,
        } => {
            let spec = spec_for(n, delta, resolution);
            let c = generate_counterexample(&spec)?;
            if let Some(p) = out {
                emit(&c, Some(&p))?;
            }
            if let Some(p) = domain_out {
                emit(&c.u.to_domain(1 << 24)?.to_file(), Some(&p))?;
            }
            if let Some(p) = mesh_out {
                emit(&voxel_mesh(&c.u), Some(&p))?;
            }
            emit(&json!({"spec": spec, "audit": c.audit}), None)
        }
        Cmd::Witness {
            map,
            n,
            delta,
            resolution,
            samples,
            seed,
            tol,
        } => {
            let spec = spec_for(n, delta, resolution);
            let mesh: TetMesh = read_json(&map)?;
            let mut cfg = WitnessConfig::for_spec(&spec);
            cfg.seed = seed;
            if let Some(s) = samples {
                cfg.samples = s;
            }
            if let Some(t) = tol {
                cfg.boundary_tol = t;
            }
            emit(&dilation_witness(&mesh, &spec, &cfg)?, None)
        }
    }
}

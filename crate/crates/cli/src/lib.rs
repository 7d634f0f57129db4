//! Command-line front end and HTTP service for `organslice`.

pub mod service;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use organslice::analysis::{analyze, remove_risky, AnalyzeParams, RemovalOptions};
use organslice::bench::bench_pair;
use organslice::dataset::{generate, AxisSweep, Direction, Offsets, SweepSpec, DEFAULT_RESOLUTION};
use organslice::mesh::{load_mesh, save_mesh, LoadOptions, Mesh, MeshFormat};
use organslice::optimize::{optimize, OptimizeParams, SmoothingKind};
use organslice::slice::{rasterize_slice, slice, Axis, PlaneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Mm,
    Cm,
    M,
    In,
}

impl Units {
    /// Factor converting the file's units to millimetres.
    pub fn to_mm(self) -> f64 {
        match self {
            Units::Mm => 1.0,
            Units::Cm => 10.0,
            Units::M => 1000.0,
            Units::In => 25.4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "organslice", version, about = "Slice, analyse and simplify anatomical surface meshes")]
pub struct Cli {
    /// Length unit of the input files; everything is converted to millimetres.
    #[arg(long, value_enum, default_value = "mm", global = true)]
    pub units: Units,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print vertex, edge and face counts and basic topology.
    Info { mesh: PathBuf },
    /// Report risky vertices: errors, boundary, flat regions and small components.
    Analyze {
        mesh: PathBuf,
        /// Write the full report as JSON here instead of a summary to stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Remove small components and optionally boundary vertices.
    Repair {
        mesh: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        remove_boundary: bool,
        /// Drop every reported isolated component.
        #[arg(long)]
        remove_isolated: bool,
    },
    /// Cut the mesh with a plane.
    Slice(SliceArgs),
    /// Decimate and smooth.
    Optimize(OptimizeArgs),
    /// Render a labelled slice dataset.
    Dataset(DatasetArgs),
    /// Time slicing of the original against a decimated copy.
    Bench {
        mesh: PathBuf,
        #[arg(long, default_value = "z")]
        axis: String,
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        /// Vertex fraction kept by the optimized variant.
        #[arg(long, default_value_t = 0.5)]
        optimized: f64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Serve every mesh in a directory over HTTP.
    Serve {
        dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    pub mesh: PathBuf,
    #[arg(long, conflicts_with = "normal")]
    pub axis: Option<String>,
    /// Plane normal as `x,y,z`; normalized before use.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub normal: Option<Vector3<f64>>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub png: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: u32,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub mesh: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value = "taubin")]
    pub kind: String,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = -0.53, allow_hyphen_values = true)]
    pub mu: f64,
    /// Let decimation and smoothing move boundary vertices.
    #[arg(long)]
    pub free_boundary: bool,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    pub mesh: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON sweep specification; the flags below are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Slices per axis, evenly spread over the inner 90% of the extent.
    #[arg(long, default_value_t = 10)]
    pub per_axis: usize,
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: u32,
    #[arg(long, default_value = "")]
    pub label: String,
}

fn parse_vec3(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn load(path: &Path, units: Units) -> Result<Mesh> {
    let (mesh, _) = load_mesh(path, &LoadOptions::default()).with_context(|| format!("loading {}", path.display()))?;
    Ok(if units == Units::Mm { mesh } else { mesh.scaled(units.to_mm()) })
}

fn save(mesh: &Mesh, path: &Path) -> Result<()> {
    let format = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("obj") => MeshFormat::Obj,
        Some("stl") => MeshFormat::StlBinary,
        _ => bail!("cannot infer mesh format from {}; use .stl or .obj", path.display()),
    };
    save_mesh(mesh, path, format).with_context(|| format!("writing {}", path.display()))
}

fn model_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned())
}

pub fn run(cli: Cli) -> Result<()> {
    let units = cli.units;
    match cli.command {
        Command::Info { mesh } => {
            let m = load(&mesh, units)?;
            let t = m.topology_summary();
            println!(
                "V={} E={} F={} χ={} watertight={}",
                t.vertex_count, t.edge_count, t.face_count, t.euler_characteristic, t.is_watertight
            );
            if let Some(b) = m.bounding_box() {
                println!("bbox_min={:?} bbox_max={:?} area={:.6}", <[f64; 3]>::from(b.min.coords), <[f64; 3]>::from(b.max.coords), m.surface_area());
            }
        }
        Command::Analyze { mesh, json } => {
            let m = load(&mesh, units)?;
            let report = analyze(&m, &AnalyzeParams::defaults_for(&m))?;
            match json {
                Some(path) => std::fs::write(&path, report.to_json()).with_context(|| format!("writing {}", path.display()))?,
                None => println!(
                    "errors={} boundary={} flat={} risky={} isolated_components={} elongated_faces={}",
                    report.error_vertices.len(),
                    report.boundary_vertices.len(),
                    report.flat_vertices.len(),
                    report.risky_vertices.len(),
                    report.isolated_components.len(),
                    report.elongated_faces.len()
                ),
            }
        }
        Command::Repair { mesh, output, remove_boundary, remove_isolated } => {
            let m = load(&mesh, units)?;
            let report = analyze(&m, &AnalyzeParams::defaults_for(&m))?;
            let options = RemovalOptions {
                remove_boundary,
                components: if remove_isolated { (0..report.isolated_components.len()).collect() } else { Vec::new() },
            };
            let out = remove_risky(&m, &report, &options)?;
            save(&out, &output)?;
            println!("V={} F={} -> V={} F={}", m.vertex_count(), m.face_count(), out.vertex_count(), out.face_count());
        }
        Command::Slice(args) => run_slice(args, units)?,
        Command::Optimize(args) => {
            let m = load(&args.mesh, units)?;
            let params = OptimizeParams {
                target_vertex_fraction: args.fraction,
                smoothing_iterations: args.iterations,
                smoothing_kind: args.kind.parse::<SmoothingKind>()?,
                taubin_lambda: args.lambda,
                taubin_mu: args.mu,
                preserve_boundary: !args.free_boundary,
            };
            let out = optimize(&m, &params)?;
            save(&out, &args.output)?;
            println!("V={} F={} -> V={} F={}", m.vertex_count(), m.face_count(), out.vertex_count(), out.face_count());
        }
        Command::Dataset(args) => {
            let m = load(&args.mesh, units)?;
            let spec = match &args.spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<SweepSpec>(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => default_sweep(&m, &args)?,
            };
            let manifest = generate(&m, &spec, &args.out)?;
            println!("{} slices written to {}", manifest.records.len(), args.out.display());
        }
        Command::Bench { mesh, axis, offset, optimized, runs } => {
            let m = load(&mesh, units)?;
            let axis: Axis = axis.parse()?;
            let pair = bench_pair(&m, &model_id(&mesh), axis, offset, optimized, runs)?;
            for r in &pair {
                println!("{}", serde_json::to_string(r)?);
            }
            println!("ratio={:.4}", pair[1].wall_time / pair[0].wall_time);
        }
        Command::Serve { dir, host, port } => {
            let state = service::AppState::load_dir(&dir, units.to_mm())?;
            let addr: std::net::SocketAddr = format!("{host}:{port}").parse().with_context(|| format!("bad address {host}:{port}"))?;
            tokio::runtime::Runtime::new()?.block_on(service::serve(state, addr))?;
        }
    }
    Ok(())
}

fn default_sweep(mesh: &Mesh, args: &DatasetArgs) -> Result<SweepSpec> {
    let bbox = mesh.bounding_box().context("mesh is empty")?;
    let sweeps = if args.per_axis == 0 {
        Vec::new()
    } else {
        Axis::ALL
            .iter()
            .map(|&a| {
                let (lo, hi) = (bbox.min[a.index()], bbox.max[a.index()]);
                let pad = 0.05 * (hi - lo);
                AxisSweep {
                    direction: Direction::Axis(a),
                    offsets: Offsets::Range { start: lo + pad, stop: hi - pad, count: args.per_axis },
                }
            })
            .collect()
    };
    Ok(SweepSpec {
        model_id: model_id(&args.mesh),
        sweeps,
        resolution: args.resolution,
        label: args.label.clone(),
        seed: args.seed,
        random_direction_count: args.random,
        ..SweepSpec::default()
    })
}

fn run_slice(args: SliceArgs, units: Units) -> Result<()> {
    let m = load(&args.mesh, units)?;
    let plane = match (&args.axis, args.normal) {
        (_, Some(n)) => PlaneSpec::from_direction(n, args.offset)?,
        (Some(a), None) => PlaneSpec::axial(a.parse()?, args.offset),
        (None, None) => bail!("one of --axis or --normal is required"),
    };
    let result = slice(&m, &plane);
    println!(
        "loops={} open_chains={} segments={} net_area={:.6}",
        result.loops.len(),
        result.open_chains.len(),
        result.segments.len(),
        result.total_area()
    );
    if let Some(path) = &args.json {
        std::fs::write(path, result.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.png {
        rasterize_slice(&result, args.resolution, None)?.save_png(path)?;
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use planetex::compose::TextureMap;
use planetex::geom::{segment_planes, PolygonBoundary, ProxyPolygon, SegmentationParams};
use planetex::inpaint::{inpaint, InpaintBackend};
use planetex::io::{load_cameras, load_mesh, write_cameras, write_mesh, ProjectConfig};
use planetex::lines::Lol2Cluster;
use planetex::metrics::ssim;
use planetex::pipeline::{run_pipeline, select_plane, stitch_selected};
use planetex::raster::{Mask, Raster};
use planetex::synth::{generate_scene, SceneSpec};
use planetex::view::filter_and_project;
use planetex::{Error, Result, Scalar};

#[derive(Parser)]
#[command(name = "planetex", version, about = "Per-plane texture maps for planar proxy models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Group mesh faces into planar polygons
    Segment {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Max face-to-plane normal angle, degrees
        #[arg(long)]
        angle_tol: Option<f64>,
        /// Max vertex-to-plane distance, world units
        #[arg(long)]
        dist_tol: Option<f64>,
    },
    /// Pick the views that texture one plane
    Select {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long)]
        plane: usize,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Warp and composite the selected views into one texture
    Stitch {
        #[arg(long)]
        plane: usize,
        #[arg(long)]
        selection: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-view line hierarchy dumps
        #[arg(long)]
        dump_lols: Option<PathBuf>,
    },
    /// Fill the unobserved texels of a stitched texture in place
    Inpaint {
        #[arg(long)]
        texture: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        lol2: PathBuf,
        /// "builtin" or a service URL
        #[arg(long)]
        backend: String,
        #[arg(long)]
        seed: u64,
    },
    /// The whole pipeline: segment, select, stitch, inpaint, write
    Run {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads across planes; defaults to the config's value
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the SSIM between two images
    Eval {
        #[arg(long)]
        rendered: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Generate a synthetic ground-truth scene
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// What the select stage hands to the stitch stage.
#[derive(Serialize, Deserialize)]
struct SelectionFile {
    plane_id: usize,
    mesh: PathBuf,
    cameras: PathBuf,
    config: PathBuf,
    selected_views: Vec<usize>,
    uncovered_fraction: f64,
}

/// What the stitch stage hands to the inpaint stage.
#[derive(Serialize, Deserialize)]
struct Lol2File {
    boundary: PolygonBoundary<Scalar>,
    clusters: Vec<Lol2Cluster>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage mistakes are input errors; help and version are not.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli.cmd) {
        eprintln!("error: {e}");
        let mut src = std::error::Error::source(&e);
        while let Some(s) = src {
            eprintln!("  caused by: {s}");
            src = s.source();
        }
        std::process::exit(if e.is_input_error() { 1 } else { 2 });
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Segment {
            mesh,
            out,
            angle_tol,
            dist_tol,
        } => cmd_segment(&mesh, &out, angle_tol, dist_tol),
        Cmd::Select {
            mesh,
            cameras,
            plane,
            config,
            out,
        } => cmd_select(&mesh, &cameras, plane, &config, &out),
        Cmd::Stitch {
            plane,
            selection,
            out,
            dump_lols,
        } => cmd_stitch(plane, &selection, &out, dump_lols.as_deref()),
        Cmd::Inpaint {
            texture,
            mask,
            lol2,
            backend,
            seed,
        } => cmd_inpaint(&texture, &mask, &lol2, &backend, seed),
        Cmd::Run {
            mesh,
            cameras,
            config,
            out,
            jobs,
        } => cmd_run(&mesh, &cameras, &config, &out, jobs),
        Cmd::Eval {
            rendered,
            reference,
        } => cmd_eval(&rendered, &reference),
        Cmd::Synth { spec, seed, out } => cmd_synth(&spec, seed, &out),
    }
}

/// PLANETEX_INPAINT_URL overrides whatever backend was configured.
fn resolve_backend(configured: &str) -> InpaintBackend {
    let effective = std::env::var("PLANETEX_INPAINT_URL")
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| configured.to_string());
    if effective == "builtin" {
        InpaintBackend::Builtin
    } else {
        InpaintBackend::External { url: effective }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn find_plane(polygons: Vec<ProxyPolygon<Scalar>>, id: usize) -> Result<ProxyPolygon<Scalar>> {
    polygons.into_iter().find(|p| p.id == id).ok_or_else(|| {
        Error::Config(format!("no plane with id {id}; run `planetex segment` to list planes"))
    })
}

fn canonical(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).map_err(|e| Error::io(path, e))
}

fn cmd_segment(
    mesh_path: &Path,
    out: &Path,
    angle_tol: Option<f64>,
    dist_tol: Option<f64>,
) -> Result<()> {
    let mut params: SegmentationParams<Scalar> = SegmentationParams::default();
    if let Some(a) = angle_tol {
        params.angle_tol_deg = a;
    }
    if dist_tol.is_some() {
        params.dist_tol = dist_tol;
    }
    let mesh = load_mesh(mesh_path)?;
    let polygons = segment_planes(&mesh, &params)?;
    write_json(&polygons, out)?;
    println!("{} planes -> {}", polygons.len(), out.display());
    Ok(())
}

fn cmd_select(
    mesh_path: &Path,
    cameras_path: &Path,
    plane: usize,
    config_path: &Path,
    out: &Path,
) -> Result<()> {
    let config = ProjectConfig::from_file(config_path)?;
    let mesh = load_mesh(mesh_path)?;
    let cameras = load_cameras(cameras_path)?;
    let polygon = find_plane(segment_planes(&mesh, &config.segmentation)?, plane)?;
    let state = select_plane(&mesh, &cameras, &polygon, &config)?;
    let file = SelectionFile {
        plane_id: plane,
        mesh: canonical(mesh_path)?,
        cameras: canonical(cameras_path)?,
        config: canonical(config_path)?,
        selected_views: state.selected.iter().map(|r| r.view_id).collect(),
        uncovered_fraction: state.uncovered_fraction(),
    };
    write_json(&file, out)?;
    println!(
        "plane {plane}: {} views, uncovered {:.4} -> {}",
        file.selected_views.len(),
        file.uncovered_fraction,
        out.display()
    );
    Ok(())
}

/// Sibling path: tex.png -> tex.mask.png / tex.lol2.json.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_stitch(
    plane: usize,
    selection_path: &Path,
    out: &Path,
    dump_lols: Option<&Path>,
) -> Result<()> {
    let sel: SelectionFile = read_json(selection_path)?;
    if sel.plane_id != plane {
        return Err(Error::Config(format!(
            "selection file is for plane {}, not {plane}",
            sel.plane_id
        )));
    }
    let config = ProjectConfig::from_file(&sel.config)?;
    let mesh = load_mesh(&sel.mesh)?;
    let cameras = load_cameras(&sel.cameras)?;
    let polygon = find_plane(segment_planes(&mesh, &config.segmentation)?, plane)?;
    if sel.selected_views.is_empty() {
        return Err(Error::Config("selection file lists no views".into()));
    }
    let candidates = filter_and_project(&cameras, &polygon, &mesh, &config.selection);
    let mut regions = Vec::new();
    for id in &sel.selected_views {
        let r = candidates.iter().find(|r| r.view_id == *id).ok_or_else(|| {
            Error::Config(format!("selected view {id} does not cover plane {plane}"))
        })?;
        regions.push(r.clone());
    }
    let stitched = stitch_selected(&polygon, &regions, &config)?;
    if let Some(dir) = dump_lols {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (lols, region) in stitched.lolsets.iter().zip(&regions) {
            write_json(lols, &dir.join(format!("lols_view_{:03}.json", region.view_id)))?;
        }
    }
    stitched.texture.raster.write_png(out)?;
    let mask_path = sibling(out, "mask.png");
    stitched.texture.observed.write_png(&mask_path)?;
    let lol2_path = sibling(out, "lol2.json");
    write_json(
        &Lol2File {
            boundary: stitched.texture.boundary.clone(),
            clusters: stitched.lol2.clone(),
        },
        &lol2_path,
    )?;
    println!(
        "plane {plane}: stitched {} views, uncovered {:.4} -> {} (+ {}, {})",
        regions.len(),
        stitched.uncovered_fraction,
        out.display(),
        mask_path.display(),
        lol2_path.display()
    );
    Ok(())
}

fn cmd_inpaint(
    texture_path: &Path,
    mask_path: &Path,
    lol2_path: &Path,
    backend: &str,
    seed: u64,
) -> Result<()> {
    let raster = Raster::read_png(texture_path)?;
    let observed = Mask::read_png(mask_path)?;
    let lol2: Lol2File = read_json(lol2_path)?;
    let prov = observed
        .values()
        .iter()
        .map(|&o| if o { Some(0) } else { None })
        .collect();
    let texture = TextureMap::new(raster, observed, prov, lol2.boundary)?;
    let filled = inpaint(&texture, &lol2.clusters, &resolve_backend(backend), seed)?;
    let added = filled.observed.count() - texture.observed.count();
    filled.raster.write_png(texture_path)?;
    filled.observed.write_png(mask_path)?;
    println!("filled {added} texels -> {}", texture_path.display());
    Ok(())
}

fn cmd_run(
    mesh_path: &Path,
    cameras_path: &Path,
    config_path: &Path,
    out: &Path,
    jobs: Option<usize>,
) -> Result<()> {
    let config = ProjectConfig::from_file(config_path)?;
    let mesh = load_mesh(mesh_path)?;
    let cameras = load_cameras(cameras_path)?;
    let backend = resolve_backend(&config.inpaint_backend);
    let jobs = jobs.unwrap_or(config.workers);
    let manifest = run_pipeline(&mesh, &cameras, &config, &backend, jobs, out)?;
    println!(
        "{} planes -> {}",
        manifest.planes.len(),
        out.join(planetex::io::MANIFEST_NAME).display()
    );
    Ok(())
}

fn cmd_eval(rendered: &Path, reference: &Path) -> Result<()> {
    let a = Raster::read_png(rendered)?;
    let b = Raster::read_png(reference)?;
    println!("{:.6}", ssim(&a, &b)?);
    Ok(())
}

fn cmd_synth(spec_path: &Path, seed: u64, out: &Path) -> Result<()> {
    let spec: SceneSpec = read_json(spec_path)?;
    let scene = generate_scene(&spec, seed)?;
    let images = out.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let mut rel_paths = Vec::new();
    for cam in &scene.true_cameras {
        let rel = format!("images/view_{:03}.png", cam.id);
        cam.image.write_png(&out.join(&rel))?;
        rel_paths.push(rel);
    }
    write_mesh(&scene.mesh, &out.join("mesh.obj"))?;
    write_cameras(&scene.true_cameras, &rel_paths, &out.join("cameras_true.txt"))?;
    write_cameras(&scene.noisy_cameras, &rel_paths, &out.join("cameras_noisy.txt"))?;
    scene.texture.write_png(&out.join("truth.png"))?;
    println!(
        "{} views -> {} (mesh.obj, cameras_true.txt, cameras_noisy.txt, truth.png)",
        scene.true_cameras.len(),
        out.display()
    );
    Ok(())
}

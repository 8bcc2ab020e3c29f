use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fillight::lightgeom::{LightParamsRecord, ParamError};
use fillight::pipeline::{self, png, DatasetConfig, IngestOptions, MANIFEST_FILE};
use fillight::planar::{render_planar_targets, ChannelLayout, PlanarConfig};
use fillight::raster::Raster;
use fillight::sampling::{SamplingPolicy, Variant};
use fillight::shading::{compose_target, render_fill_light};
use fillight::{pfm, synthetic, LightParams, RenderConfig};
use fillight_service::{RenderSettings, ServiceConfig};

/// Default worker count for `dataset` and `serve`.
const WORKERS_ENV: &str = "FILLIGHT_WORKERS";

const EXIT_USAGE: u8 = 1;
const EXIT_BATCH_FAILURES: u8 = 2;

#[derive(Parser)]
#[command(name = "fillight", version, about = "Disk area fill-light renderer for portraits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one scene with one parameter file.
    Render(RenderArgs),
    /// Render a paired dataset from a tree of scenes.
    Dataset(DatasetArgs),
    /// Render planar irradiance and direction targets.
    Planar(PlanarArgs),
    /// Run the HTTP preview service.
    Serve(ServeArgs),
    /// Write procedural scenes in the ingestion layout.
    Synth(SynthArgs),
    /// Print the default sampling policy as JSON.
    Policy,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene directory holding the six asset files.
    #[arg(long)]
    scene: PathBuf,
    /// JSON light parameters (temperature_k, theta_hp_deg, z0, d_lamp, dx, dy).
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    /// Also write the carrier target with this gamma.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplier converting stored depth to pixels.
    #[arg(long, default_value_t = 1.0)]
    depth_scale: f64,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    input_root: PathBuf,
    #[arg(long)]
    out_root: PathBuf,
    /// Sampling policy JSON; defaults to the built-in policy.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "warm,white,cool")]
    variants: Vec<Variant>,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    /// Parallel image jobs [default: $FILLIGHT_WORKERS or the core count].
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the gamma-scaled input next to each record.
    #[arg(long)]
    darken: bool,
    #[arg(long, default_value_t = 1.0)]
    depth_scale: f64,
}

#[derive(Args)]
struct PlanarArgs {
    #[arg(long)]
    params: PathBuf,
    /// Output resolution (square).
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 512)]
    samples: usize,
    /// Side of the plane window in pixels.
    #[arg(long, default_value_t = 4096.0)]
    window: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Backing directory for evicted scenes and pre-staged scenes.
    #[arg(long)]
    assets_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    max_scenes: usize,
    #[arg(long, default_value_t = 256)]
    preview_samples: usize,
    /// Samples for full-quality renders.
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn read_params(path: &Path) -> Result<LightParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    // Accept either a bare parameter object or a record's params.json.
    let inner = value.get("params").cloned().unwrap_or(value);
    let record: LightParamsRecord = serde_json::from_value(inner).with_context(|| format!("parsing {}", path.display()))?;
    let errs = record.field_errors();
    if !errs.is_empty() {
        let msg: Vec<_> = errs.iter().map(ParamError::to_string).collect();
        bail!("invalid parameters in {}: {}", path.display(), msg.join("; "));
    }
    Ok(LightParams::try_from(record)?)
}

fn ingest_options(depth_scale: f64) -> IngestOptions {
    IngestOptions { depth_scale, ..Default::default() }
}

fn run_render(a: RenderArgs) -> Result<u8> {
    let params = read_params(&a.params)?;
    let root = a.scene.parent().unwrap_or(Path::new("."));
    let id = a.scene.file_name().and_then(|s| s.to_str()).context("scene path has no directory name")?;
    let scene = pipeline::load_scene(root, id, &ingest_options(a.depth_scale))?;
    let mut cfg = RenderConfig { n_samples: a.samples, ..Default::default() };
    cfg.visibility.seed = a.seed;
    let started = Instant::now();
    let res = render_fill_light(&scene, &params, &cfg)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("residual.png"), png::encode_rgb(&res.srgb))?;
    fs::write(a.out.join("residual.pfm"), pfm::encode_rgb(&res.linear))?;
    let lit = scene.image.pixels().iter().zip(res.srgb.pixels()).map(|(i, r)| [0, 1, 2].map(|c| (i[c] + r[c]).min(1.0)));
    let lit = Raster::from_vec(scene.width(), scene.height(), lit.collect()).expect("shape");
    fs::write(a.out.join("composite.png"), png::encode_rgb(&lit))?;
    if let Some(g) = a.gamma {
        fs::write(a.out.join("target.png"), png::encode_rgb(&compose_target(&scene.image, &res.srgb, g)?))?;
    }
    let q = pipeline::quality_check(&scene, &res, &Default::default());
    println!(
        "rendered {}x{} in {:.2}s, residual energy {:.3e}, {:?}",
        scene.width(),
        scene.height(),
        started.elapsed().as_secs_f64(),
        q.residual_energy,
        q.verdict
    );
    Ok(0)
}

fn run_dataset(a: DatasetArgs) -> Result<u8> {
    let policy = match &a.policy {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SamplingPolicy::from_json(&text).map_err(|e| anyhow::anyhow!("policy {}: {e}", p.display()))?
        }
        None => SamplingPolicy::default(),
    };
    let cfg = DatasetConfig {
        policy,
        seed: a.seed,
        variants: a.variants,
        render: RenderConfig { n_samples: a.samples, ..Default::default() },
        workers: a.workers.unwrap_or_else(default_workers),
        ingest: ingest_options(a.depth_scale),
        darken: a.darken,
        ..Default::default()
    };
    let started = Instant::now();
    let summary = pipeline::run_dataset(&a.input_root, &a.out_root, &cfg)?;
    println!(
        "{} image(s), {} record(s): {} pass, {} fail in {:.1}s; manifest {}",
        summary.images,
        summary.attempted,
        summary.passed,
        summary.failed,
        started.elapsed().as_secs_f64(),
        a.out_root.join(MANIFEST_FILE).display()
    );
    for (reason, n) in &summary.by_reason {
        println!("  {reason}: {n}");
    }
    Ok(if summary.failed > 0 { EXIT_BATCH_FAILURES } else { 0 })
}

fn run_planar(a: PlanarArgs) -> Result<u8> {
    let params = read_params(&a.params)?;
    let cfg = PlanarConfig {
        resolution: a.size,
        window: a.window,
        n_samples: a.samples,
        layout: ChannelLayout::Direction3,
        ..Default::default()
    };
    let t = render_planar_targets(&params, &cfg)?;
    fs::create_dir_all(&a.out)?;
    let f32s = |r: &Raster<[f64; 3]>| r.map(|p| p.map(|v| v as f32));
    fs::write(a.out.join("irradiance.pfm"), pfm::encode_rgb(&f32s(&t.irradiance)))?;
    fs::write(a.out.join("direction.pfm"), pfm::encode_rgb(&f32s(&t.direction3())))?;
    println!("wrote {0}x{0} planar targets to {1}", a.size, a.out.display());
    Ok(0)
}

fn run_serve(a: ServeArgs) -> Result<u8> {
    let workers = a.workers.unwrap_or_else(default_workers);
    let cfg = ServiceConfig {
        max_scenes: a.max_scenes,
        assets_dir: a.assets_dir,
        settings: RenderSettings {
            preview_samples: a.preview_samples,
            full: RenderConfig { n_samples: a.samples, ..Default::default() },
            ..Default::default()
        },
        workers,
        ..Default::default()
    };
    if cfg.settings.preview_samples == 0 || a.samples == 0 {
        bail!("sample counts must be positive");
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(fillight_service::serve_addr(SocketAddr::new(a.host, a.port), cfg))?;
    Ok(0)
}

fn run_synth(a: SynthArgs) -> Result<u8> {
    if a.size < 8 {
        bail!("size must be at least 8");
    }
    for i in 0..a.count {
        let id = format!("face_{i:04}");
        let scene = synthetic::face_scene(a.size, a.size, a.seed.wrapping_add(i as u64));
        pipeline::save_scene(&a.out, &id, &scene)?;
    }
    println!("wrote {} scene(s) to {}", a.count, a.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Render(a) => run_render(a),
        Command::Dataset(a) => run_dataset(a),
        Command::Planar(a) => run_planar(a),
        Command::Serve(a) => run_serve(a),
        Command::Synth(a) => run_synth(a),
        Command::Policy => {
            println!("{}", SamplingPolicy::default().to_json());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

//! Command-line front end: simulation runs, processing, detection reports,
//! calibration scoring and export.
//!
//! Every command writes its artifact atomically and leaves a
//! `<artifact>.manifest.json` next to it. Exit status is 0 on success, 1 for
//! bad usage or input, 2 when a run fails.

pub mod error;
pub mod export;
pub mod manifest;
pub mod rgr;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use voidscan::detect::{build_template_library, detect_pipeline, DetectConfig, TemplateLibrary};
use voidscan::equip::{scorecard, CalibrationSet};
use voidscan::fdtd::{build_scene, simulate_ascan, simulate_bscan, FillConfig, Scene, SceneConfig};
use voidscan::noise::add_awgn;
use voidscan::sigproc::{remove_direct_wave, run_pipeline, PipelineConfig};
use voidscan::{Radargram, Trace};

pub use error::{CliError, CliResult};
use manifest::{config_hash, write_manifest, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "voidscan", version, about = "Ground-penetrating radar simulation and road void detection")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scene description into an RGR1 radargram.
    Simulate(SimulateArgs),
    /// Run a processing pipeline over a radargram.
    Process {
        input: PathBuf,
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Detect and characterise a void; writes a JSON report.
    Detect {
        /// Preprocessed radargram (direct wave removed, time zero aligned).
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Metal-plate echo (first trace is used) recorded with the same antenna.
        #[arg(long)]
        plate: PathBuf,
        /// Template library directory written by `library build`.
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Template libraries for height identification.
    Library {
        #[command(subcommand)]
        action: LibraryCommand,
    },
    /// Score a set of metal-plate shots against the equipment limits.
    Calibrate {
        input: PathBuf,
        /// Window holding the plate echo, in ns: `start,end`.
        #[arg(long, value_delimiter = ',', required = true)]
        window_ns: Vec<f64>,
        /// JSON sidecar with `timestamps` (s) and/or `durations` (s).
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Length of the long-term stability test in seconds.
        #[arg(long, default_value_t = 7200.0)]
        horizon_s: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Export a radargram as an image or CSV.
    Export {
        #[command(subcommand)]
        format: ExportCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShotKind {
    /// Every shot of the survey.
    Bscan,
    /// One shot over a metal plate, with the direct wave removed.
    Plate,
    /// One shot in free space (the direct wave alone).
    Free,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scene: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ShotKind::Bscan)]
    pub kind: ShotKind,
    /// Subtract the free-space shot from every trace.
    #[arg(long)]
    pub remove_direct_wave: bool,
    /// Add white Gaussian noise at this signal-to-noise power ratio.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Seed of the noise generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum LibraryCommand {
    Build {
        scene: PathBuf,
        /// Void heights in metres, comma separated and increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        heights: Vec<f64>,
        #[arg(long, default_value = "air")]
        fill: String,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    Image {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Percentile of |amplitude| mapped to full scale.
        #[arg(long, default_value_t = 100.0)]
        clip: f64,
    },
    Csv {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Timestamps and batch durations accompanying a calibration file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    #[serde(default)]
    pub timestamps: Option<Vec<f64>>,
    #[serde(default)]
    pub durations: Option<Vec<f64>>,
}

pub(crate) fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_scene(bytes: &[u8]) -> CliResult<Scene> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::invalid("scene file is not UTF-8"))?;
    Ok(build_scene(&SceneConfig::from_json(text)?)?)
}

/// Inputs read by a command, kept for hashing.
struct Inputs(Vec<(PathBuf, Vec<u8>)>);

impl Inputs {
    fn new() -> Self {
        Inputs(Vec::new())
    }

    fn read(&mut self, path: &Path) -> CliResult<&[u8]> {
        let bytes = read_input(path)?;
        self.0.push((path.to_path_buf(), bytes));
        Ok(&self.0.last().expect("just pushed").1)
    }

    fn manifest(&self, command: &str, options: serde_json::Value, seed: Option<u64>, start: Instant, outputs: &[&Path]) -> RunManifest {
        let parts: Vec<(&Path, &[u8])> = self.0.iter().map(|(p, b)| (p.as_path(), b.as_slice())).collect();
        RunManifest {
            command: command.to_string(),
            inputs: self.0.iter().map(|(p, _)| p.display().to_string()).collect(),
            config_hash: config_hash(command, &options, &parts),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            details: serde_json::Value::Null,
        }
    }
}

fn first_trace(r: &Radargram) -> CliResult<Trace> {
    r.traces.first().cloned().ok_or_else(|| CliError::invalid("radargram holds no traces"))
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let scene = load_scene(inputs.read(&a.scene)?)?;
    if let Some(snr) = a.snr {
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(CliError::invalid("--snr must be positive"));
        }
    }
    let single = |s: &Scene| -> CliResult<Radargram> {
        let t = simulate_ascan(s, 0)?;
        Ok(Radargram::new(vec![t], s.survey.step.max(f64::MIN_POSITIVE), s.survey.midpoint(0))?)
    };
    let mut r = match a.kind {
        ShotKind::Bscan => {
            let r = simulate_bscan(&scene)?;
            if a.remove_direct_wave {
                remove_direct_wave(&r, &simulate_ascan(&scene.free_space(), 0)?)?
            } else {
                r
            }
        }
        ShotKind::Plate => {
            let free = simulate_ascan(&scene.free_space(), 0)?;
            let plate = simulate_ascan(&scene.metal_plate(), 0)?.minus(&free)?;
            Radargram::new(vec![plate], scene.survey.step.max(f64::MIN_POSITIVE), scene.survey.midpoint(0))?
        }
        ShotKind::Free => single(&scene.free_space())?,
    };
    if let Some(snr) = a.snr {
        for (i, t) in r.traces.iter_mut().enumerate() {
            t.samples = add_awgn(&t.samples, snr, a.seed.wrapping_add(i as u64))?;
        }
    }
    rgr::write(&a.output, &r)?;
    let options = json!({"kind": format!("{:?}", a.kind), "remove_direct_wave": a.remove_direct_wave, "snr": a.snr, "seed": a.seed});
    let m = inputs.manifest("simulate", options, a.snr.map(|_| a.seed), start, &[&a.output]);
    write_manifest(&a.output, &m)
}

fn process(input: &Path, pipeline: &Path, output: &Path) -> CliResult<()> {
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let r = rgr::decode(inputs.read(input)?)?;
    let text = std::str::from_utf8(inputs.read(pipeline)?).map_err(|_| CliError::invalid("pipeline file is not UTF-8"))?.to_string();
    let cfg = PipelineConfig::from_json(&text)?;
    let result = run_pipeline(&r, &cfg)?;
    rgr::write(output, &result.radargram)?;
    let mut m = inputs.manifest("process", json!({}), None, start, &[output]);
    m.details = json!({ "provenance": result.provenance });
    write_manifest(output, &m)
}

fn load_library(dir: &Path, inputs: &mut Inputs) -> CliResult<TemplateLibrary> {
    let path = dir.join("library.json");
    let bytes = inputs.read(&path)?;
    serde_json::from_slice(bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn detect(input: &Path, config: &Path, plate: &Path, library: Option<&Path>, output: &Path) -> CliResult<()> {
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let r = rgr::decode(inputs.read(input)?)?;
    let text = std::str::from_utf8(inputs.read(config)?).map_err(|_| CliError::invalid("detect config is not UTF-8"))?.to_string();
    let cfg = DetectConfig::from_json(&text)?;
    let plate = first_trace(&rgr::decode(inputs.read(plate)?)?)?;
    let lib = library.map(|d| load_library(d, &mut inputs)).transpose()?;
    let report = detect_pipeline(&r, &cfg, &plate, lib.as_ref())?;
    rgr::write_atomic(output, report.to_json().as_bytes())?;
    let m = inputs.manifest("detect", json!({}), None, start, &[output]);
    write_manifest(output, &m)
}

fn library_build(scene: &Path, heights: &[f64], fill: &str, output: &Path) -> CliResult<()> {
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let scene = load_scene(inputs.read(scene)?)?;
    let fill = FillConfig::Named(fill.to_string()).material()?;
    let lib = build_template_library(&scene, &fill, heights)?;
    fs::create_dir_all(output).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", output.display())))?;
    let path = output.join("library.json");
    rgr::write_atomic(&path, serde_json::to_string(&lib).expect("library serializes").as_bytes())?;
    let m = inputs.manifest("library build", json!({"heights": heights, "fill": fill.name}), None, start, &[&path]);
    write_manifest(output, &m)
}

fn calibrate(input: &Path, window_ns: &[f64], sidecar: Option<&Path>, horizon_s: f64, output: &Path) -> CliResult<()> {
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let r = rgr::decode(inputs.read(input)?)?;
    let side: Sidecar = match sidecar {
        Some(p) => {
            let bytes = inputs.read(p)?;
            serde_json::from_slice(bytes).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?
        }
        None => Sidecar::default(),
    };
    let [lo, hi] = window_ns else {
        return Err(CliError::invalid("--window-ns takes two values: start,end"));
    };
    let cs = CalibrationSet::new(r, (lo * 1e-9, hi * 1e-9), side.timestamps)?;
    let card = scorecard(&cs, side.durations.as_deref(), horizon_s)?;
    let text = serde_json::to_string_pretty(&json!({ "pass": card.pass(), "scorecard": card })).expect("scorecard serializes");
    rgr::write_atomic(output, text.as_bytes())?;
    let m = inputs.manifest("calibrate", json!({"window_ns": window_ns, "horizon_s": horizon_s}), None, start, &[output]);
    write_manifest(output, &m)
}

fn export(format: &ExportCommand) -> CliResult<()> {
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let (input, output, options) = match format {
        ExportCommand::Image { input, output, clip } => (input, output, json!({"format": "image", "clip": clip})),
        ExportCommand::Csv { input, output } => (input, output, json!({"format": "csv"})),
    };
    let r = rgr::decode(inputs.read(input)?)?;
    let bytes = match format {
        ExportCommand::Image { clip, .. } => export::export_image(&r, *clip)?,
        ExportCommand::Csv { .. } => export::export_csv(&r).into_bytes(),
    };
    rgr::write_atomic(output, &bytes)?;
    let m = inputs.manifest("export", options, None, start, &[output]);
    write_manifest(output, &m)
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::invalid("--threads must be at least 1"));
        }
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Process { input, pipeline, output } => process(input, pipeline, output),
        Command::Detect { input, config, plate, library, output } => {
            detect(input, config, plate, library.as_deref(), output)
        }
        Command::Library { action: LibraryCommand::Build { scene, heights, fill, output } } => {
            library_build(scene, heights, fill, output)
        }
        Command::Calibrate { input, window_ns, sidecar, horizon_s, output } => {
            calibrate(input, window_ns, sidecar.as_deref(), *horizon_s, output)
        }
        Command::Export { format } => export(format),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

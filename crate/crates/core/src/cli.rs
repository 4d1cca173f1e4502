//! Command-line surface: `simulate`, `pipeline`, `eval` and `ablate`.
//!
//! Exit codes: 0 success, 1 usage error, 2 malformed input, 3 internal
//! invariant violation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bev::{write_heatmap, write_pgm};
use crate::cardboard::write_cloud_csv;
use crate::config::{Aggregator, ConfigError, GridSetting, PipelineConfig};
use crate::eval::evaluate_frames;
use crate::io::{self, FrameInput, GroundXY, IoError, PredictionsFile};
use crate::pipeline::{run_pipeline, run_sweep, summarize, write_sweep_csv, PipelineError, Study};
use crate::raytrace::StandingPointMode;
use crate::simulator::{simulate, SimError};

#[derive(Debug, Parser)]
#[command(name = "mvcardboard", version, about = "Multiview pedestrian localization with cardboard point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene with ground truth and per-camera detections.
    Simulate(SimulateArgs),
    /// Localize pedestrians from a scene or detection file.
    Pipeline(PipelineArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Run a seeded parameter sweep and write one CSV row per setting and seed.
    Ablate(AblateArgs),
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON config file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid preset: wildtrack or multiviewx.
    #[arg(long)]
    pub grid: Option<String>,
    /// Camera rig preset: wildtrack_like or multiviewx_like.
    #[arg(long)]
    pub rig: Option<String>,
    /// Calibration JSON replacing the cameras of a scene.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Heatmap peak threshold in [0, 1] (default 0.8; 0.28 is tuned for the simulator).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// pillar or cluster.
    #[arg(long)]
    pub aggregator: Option<Aggregator>,
    /// Add the ground-plane point grid to the clouds.
    #[arg(long)]
    pub ground_plane: bool,
    #[arg(long, value_enum)]
    pub standing_point_mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModeArg {
    Keypoint,
    BottomCenter,
}

impl From<ModeArg> for StandingPointMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Keypoint => StandingPointMode::Keypoint,
            ModeArg::BottomCenter => StandingPointMode::BottomCenter,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub pedestrians: Option<usize>,
    /// Exact projections: no pixel noise, misses, false positives or occlusion.
    #[arg(long)]
    pub zero_noise: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scene or detection file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Also write the sampled clouds as CSV.
    #[arg(long)]
    pub write_clouds: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Predictions file, or a scene file whose pedestrians are used.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Ground truth: a scene file or a predictions-format file, one per --pred.
    #[arg(long, required = true)]
    pub gt: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: Common,
    /// standing_point, sample_rate, ground_plane, density, fixed_height or aggregator.
    #[arg(long)]
    pub study: Study,
    /// Seeds per setting.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => c.into(),
            PipelineError::Simulation(SimError::InvalidConfig(_) | SimError::UnknownPreset(_)) => {
                CliError::Usage(e.to_string())
            }
            PipelineError::TooManyViews(_) => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl Common {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(g) = &self.grid {
            cfg.grid = Some(GridSetting::Preset(g.clone()));
        }
        if let Some(r) = &self.rig {
            cfg.rig = r.clone();
        }
        if let Some(c) = &self.calibration {
            cfg.calibration = Some(c.clone());
        }
        if let Some(r) = self.sample_rate {
            cfg.sample_rate = r;
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if let Some(a) = self.aggregator {
            cfg.aggregator = a;
        }
        if self.ground_plane {
            cfg.ground_plane = true;
        }
        if let Some(m) = self.standing_point_mode {
            cfg.standing_point_mode = m.into();
        }
        Ok(cfg)
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let mut cfg = args.common.resolve()?;
    if let Some(n) = args.pedestrians {
        cfg.n_pedestrians = n;
    }
    if args.zero_noise {
        cfg.noise = crate::simulator::NoiseModel::none();
    }
    cfg.validate()?;
    let sim = cfg.simulation()?;
    // every simulator error stems from the requested settings
    let scene = simulate(&sim, &cfg.noise).map_err(|e| CliError::Usage(e.to_string()))?;
    create_dir(&args.common.out)?;
    let path = args.common.out.join("scene.json");
    io::write_scene(&path, &scene)?;
    let per_view: Vec<String> = sim
        .cameras
        .iter()
        .zip(&scene.detections)
        .map(|(c, d)| format!("{}={}", c.id, d.len()))
        .collect();
    Ok(format!(
        "wrote {}: {} pedestrians, {} detections ({})",
        path.display(),
        scene.pedestrians.len(),
        scene.detection_count(),
        per_view.join(" ")
    ))
}

pub fn cmd_pipeline(args: &PipelineArgs) -> Result<String, CliError> {
    let mut cfg = args.common.resolve()?;
    cfg.write_clouds |= args.write_clouds;
    cfg.validate()?;
    let calibration = cfg.calibration.as_deref().map(io::read_calibration).transpose()?;
    let input: FrameInput = io::read_scene(&args.scene, calibration.as_deref())?;
    let grid = match (&cfg.grid, input.grid) {
        (Some(g), _) => g.resolve()?,
        (None, Some(g)) => g,
        (None, None) => cfg.rig_grid()?,
    };
    let out = run_pipeline(&input, &grid, &cfg)?;

    let dir = &args.common.out;
    create_dir(dir)?;
    let predictions = PredictionsFile {
        frame: 0,
        points: out.predictions.iter().map(GroundXY::from).collect(),
        summary: Some(out.summary.clone()),
    };
    io::write_json(&dir.join("predictions.json"), &predictions)?;
    if let Some(hm) = &out.heatmap {
        io::write_with(&dir.join("heatmap.bin"), |w| write_heatmap(w, hm))?;
        io::write_with(&dir.join("heatmap.pgm"), |w| write_pgm(w, hm))?;
    }
    if cfg.write_clouds {
        io::write_with(&dir.join("clouds.csv"), |w| write_cloud_csv(w, &out.clouds))?;
    }
    let s = &out.summary;
    let dropped = if s.dropped.is_empty() {
        "none".to_string()
    } else {
        s.dropped.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    };
    Ok(format!(
        "{} detections, {} anchored, dropped: {dropped}; {} points; {} predictions written to {}",
        s.detections,
        s.anchored,
        s.total_points(),
        s.predictions,
        dir.display()
    ))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let cfg = args.common.resolve()?;
    cfg.validate()?;
    if args.pred.len() != args.gt.len() {
        return Err(CliError::Usage(format!(
            "{} --pred files but {} --gt files",
            args.pred.len(),
            args.gt.len()
        )));
    }
    let mut frames = Vec::with_capacity(args.pred.len());
    for (p, g) in args.pred.iter().zip(&args.gt) {
        let (_, pred) = io::read_points(p)?;
        let (_, gt) = io::read_points(g)?;
        frames.push((pred, gt));
    }
    let report = evaluate_frames(&frames, &cfg.eval);
    let dir = &args.common.out;
    create_dir(dir)?;
    io::write_with(&dir.join("report.csv"), |w| report.write_csv(w))?;
    io::write_json(&dir.join("report.json"), &report)?;
    Ok(format!(
        "MODA {:.4} MODP {:.4} P {:.4} R {:.4} (TP {} FP {} FN {} GT {})",
        report.moda, report.modp, report.precision, report.recall, report.tp, report.fp, report.fn_, report.gt
    ))
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<String, CliError> {
    let mut cfg = args.common.resolve()?;
    if let Some(n) = args.seeds {
        cfg.seeds = n;
    }
    let rows = run_sweep(args.study, &cfg)?;
    let dir = &args.common.out;
    create_dir(dir)?;
    let path = dir.join(format!("{}.csv", args.study.name()));
    io::write_with(&path, |w| write_sweep_csv(w, &rows))?;
    let mut text = format!("wrote {} ({} rows)\nsetting,runs,MODA,MODP,P,R,points", path.display(), rows.len());
    for m in summarize(&rows) {
        text.push_str(&format!(
            "\n{},{},{:.4},{:.4},{:.4},{:.4},{:.0}",
            m.setting, m.runs, m.moda, m.modp, m.precision, m.recall, m.points
        ));
    }
    Ok(text)
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Panics inside a command are reported as internal errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(message)) => {
            println!("{message}");
            0
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal invariant violated");
            3
        }
    }
}

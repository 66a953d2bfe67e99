//! `safenav` command line: scene generation, evaluation, comparison,
//! trace replay and scorer training.
//!
//! Exit codes: 0 on success, 1 when a replayed trace diverges, 2 on usage
//! or configuration errors, 3 on IO errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use safenav::graph::{agrees_top1, train_scorer, LinearScorer, TrainConfig};
use safenav::harness::report::{self, compare_csv, compare_table, run_csv, to_json, worker_count};
use safenav::harness::{collect_samples, generate_scenes, load_scenes, save_scene_set, AgentConfig, ActionTrace, HeatmapSource, Planner, Recipe};
use safenav::heatmap::PolarHeatmap;
use safenav::lidar::LidarMode;
use safenav::{Error, Pose};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIVERGED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "safenav", version, about = "Collision-aware waypoint navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scene suite into a directory.
    Gen(GenArgs),
    /// Evaluate one agent configuration over a scene set.
    Run(RunArgs),
    /// Evaluate the mask × re-selection matrix and the JPS baseline.
    Compare(CompareArgs),
    /// Re-execute a saved action trace on its scene.
    Replay(ReplayArgs),
    /// Fit linear scorer weights to oracle decisions on a scene set.
    Train(TrainArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "open")]
    recipe: RecipeName,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RecipeName {
    Open,
    Traps,
    Furniture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AgentPreset {
    Safe,
    Baseline,
    Jps,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Lidar {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
    Fused,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Args, Debug)]
struct AgentArgs {
    /// Scene file or directory of scene files.
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long, value_enum, default_value = "safe")]
    agent: AgentPreset,
    #[arg(long, value_enum)]
    mask: Option<Switch>,
    #[arg(long, value_enum)]
    reselect: Option<Switch>,
    #[arg(long, value_enum)]
    tryout: Option<Switch>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    lidar: Option<Lidar>,
    /// Height of the planar scan.
    #[arg(long)]
    sensor_height: Option<f64>,
    /// Height of the 3D fan's horizontal ray.
    #[arg(long)]
    sensor_height_3d: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dynamic_p: Option<f64>,
    /// Noisy heatmap spill in [0, 1]; 0 keeps the oracle heatmap.
    #[arg(long, allow_negative_numbers = true)]
    noise_spill: Option<f64>,
    /// Agent-relative heatmap file used at every round.
    #[arg(long, conflicts_with = "noise_spill")]
    heatmap: Option<PathBuf>,
    /// Linear scorer weights file; replaces the oracle scorer.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    step_budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    agent: AgentArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Directory to receive one action trace per clean-pass episode.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    agent: AgentArgs,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Defaults to json for --report and a table on stdout.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> safenav::Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> safenav::Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> safenav::Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                // A closed pipe (e.g. `| head`) is not an error for us.
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
                _ => Ok(()),
            }
        }
    }
}

fn agent_config(a: &AgentArgs) -> safenav::Result<AgentConfig> {
    let mut c = match a.agent {
        AgentPreset::Safe => AgentConfig::safe(),
        AgentPreset::Baseline => AgentConfig::baseline(),
        AgentPreset::Jps => AgentConfig::jps(),
    };
    if let Some(s) = a.mask {
        c.mask = s.on();
    }
    if let Some(s) = a.reselect {
        c.reselect = s.on();
    }
    if let Some(s) = a.tryout {
        c.controller.tryout_enabled = s.on();
    }
    if let Some(d) = a.delta {
        c.delta = d;
    }
    if let Some(k) = a.k {
        c.k = k;
    }
    if let Some(l) = a.lidar {
        c.lidar.mode = match l {
            Lidar::TwoD => LidarMode::TwoD,
            Lidar::ThreeD => LidarMode::ThreeD,
            Lidar::Fused => LidarMode::Fused,
        };
    }
    if let Some(h) = a.sensor_height {
        c.lidar.sensor_height = h;
    }
    if let Some(h) = a.sensor_height_3d {
        c.lidar.sensor_height_3d = h;
    }
    if let Some(p) = a.dynamic_p {
        c.dynamic_p = p;
    }
    if let Some(s) = a.noise_spill {
        c = c.with_noise(s);
    }
    if let Some(path) = &a.heatmap {
        c.heatmap = HeatmapSource::Fixed {
            label: path.display().to_string(),
            heatmap: PolarHeatmap::parse_text(&read(path)?, Pose::new(0.0, 0.0, 0.0))?,
        };
    }
    if let Some(path) = &a.weights {
        if c.planner == Planner::Jps {
            return Err(Error::Config("--weights cannot be combined with the jps agent".into()));
        }
        c.planner = Planner::Linear(LinearScorer::parse_text(&read(path)?)?);
    }
    if let Some(b) = a.step_budget {
        c.step_budget = b;
    }
    c.validate()?;
    Ok(c)
}

fn gen(args: &GenArgs) -> safenav::Result<i32> {
    let recipe = match args.recipe {
        RecipeName::Open => Recipe::open(args.count),
        RecipeName::Traps => Recipe::traps(args.count),
        RecipeName::Furniture => Recipe::furniture(args.count),
    };
    let scenes = generate_scenes(&recipe, args.seed)?;
    let paths = save_scene_set(&args.out, &scenes)?;
    eprintln!("wrote {} scenes to {}", paths.len(), args.out.display());
    Ok(EXIT_OK)
}

fn run_cmd(args: &RunArgs) -> safenav::Result<i32> {
    let config = agent_config(&args.agent)?;
    let scenes = load_scenes(&args.agent.scenes)?;
    let workers = worker_count()?;
    let eval = report::evaluate(&scenes, &config, args.agent.seed, workers)?;
    if let Some(dir) = &args.traces {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        for r in &eval.clean {
            ActionTrace::from_episode(r).save(&dir.join(format!("{}.trace.json", r.scene_id)))?;
        }
    }
    let rep = report::RunReport::new(&eval, &config, args.agent.seed)?;
    let text = match args.format {
        Format::Json => to_json(&rep)?,
        Format::Csv => run_csv(&rep),
        Format::Table => return Err(Error::Config("`run` supports --format json or csv".into())),
    };
    emit(args.report.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn compare_cmd(args: &CompareArgs) -> safenav::Result<i32> {
    let config = agent_config(&args.agent)?;
    let scenes = load_scenes(&args.agent.scenes)?;
    let rep = report::compare(&scenes, &config, args.agent.seed, worker_count()?)?;
    let format = args
        .format
        .unwrap_or(if args.report.is_some() { Format::Json } else { Format::Table });
    let text = match format {
        Format::Json => to_json(&rep)?,
        Format::Csv => compare_csv(&rep),
        Format::Table => compare_table(&rep),
    };
    emit(args.report.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn replay_cmd(args: &ReplayArgs) -> safenav::Result<i32> {
    let trace = ActionTrace::load(&args.trace)?;
    let scenes = load_scenes(&args.scenes)?;
    let scene = scenes
        .iter()
        .find(|s| s.id() == trace.scene_id)
        .ok_or_else(|| Error::Config(format!("scene `{}` not found under {}", trace.scene_id, args.scenes.display())))?;
    let r = safenav::harness::replay(scene, &trace)?;
    let end = r.poses.last().unwrap();
    let line = format!(
        "scene {} actions {} collisions {} end ({}, {}, {}) {}\n",
        scene.id(),
        r.poses.len() - 1,
        r.collisions,
        end.x,
        end.y,
        end.heading(),
        if r.matches { "matches" } else { "DIVERGES" }
    );
    emit(None, &line)?;
    Ok(if r.matches { EXIT_OK } else { EXIT_DIVERGED })
}

fn train_cmd(args: &TrainArgs) -> safenav::Result<i32> {
    let scenes = load_scenes(&args.scenes)?;
    let config = AgentConfig {
        dynamic_p: 0.0,
        ..AgentConfig::safe()
    };
    let mut samples = Vec::new();
    for s in &scenes {
        samples.extend(collect_samples(s, &config, args.seed)?.1);
    }
    if samples.is_empty() {
        return Err(Error::Config("scene set produced no training samples".into()));
    }
    let train = TrainConfig {
        iterations: args.iterations,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let scorer = train_scorer(&samples, &train)?;
    let agree = samples.iter().filter(|x| agrees_top1(&scorer, x)).count();
    eprintln!("{} samples, top-1 agreement {:.3}", samples.len(), agree as f64 / samples.len() as f64);
    write(&args.out, &scorer.to_text())?;
    Ok(EXIT_OK)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Train(a) => train_cmd(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("safenav: {e}");
            exit_code(&e)
        }
    }
}

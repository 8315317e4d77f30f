use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tafall::config::Config;
use tafall::detector::{detect_poses, evaluate, read_events, read_truth, write_events, write_windows};
use tafall::motion::MhiTracker;
use tafall::objectives::balance_mse;
use tafall::pose::{load_world_sequence, write_pose_sequence, PoseSequence, SkeletonTopology, WorldPose};
use tafall::scenario::scenario_by_name;
use tafall::stream::{record_frames, record_mhi, replay, serve, PoseProvider, ProviderFactory, Recording, ReplayPoseProvider};
use tafall::thermal::{load_scene, render_sequence, BodyThermalProfile, Scene};

#[derive(Parser)]
#[command(name = "tafall", version, about = "Thermal-array fall detection tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene file or built-in scenario to a .taf recording.
    Sim {
        /// Path to a scene TOML file, or a built-in scenario name.
        scene: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Simulator settings for built-in scenarios.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the world poses that drove the render.
        #[arg(long)]
        poses: Option<PathBuf>,
        /// Also write the truth labels of a built-in scenario.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also write the motion history of the rendered frames.
        #[arg(long)]
        mhi: Option<PathBuf>,
    },
    /// Accept sensor streams and write fall events as JSON lines.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        /// World poses to pair with incoming frames by sequence number.
        /// Without them only presence and motion history run.
        #[arg(long)]
        poses: Option<PathBuf>,
        /// Sequence number of the first pose.
        #[arg(long, default_value_t = 0)]
        first_seq: u32,
        /// Stop after this many seconds instead of running until killed.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Send a recording to a running server at its recorded pace.
    Replay {
        recording: PathBuf,
        #[arg(long)]
        to: String,
        /// Playback speed; 2 plays twice as fast.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Run the fall detector over a world pose file.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Events file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the per-window log.
        #[arg(long)]
        windows: Option<PathBuf>,
    },
    /// Score detected events against truth labels.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20.0)]
        frame_rate: f64,
    },
    /// Balance regression loss between two SMoB series in a CSV file with
    /// `predicted,target` rows; empty cells mark undefined frames.
    EvalLoss {
        #[arg(long)]
        input: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn resolve_scene(scene: &str, config: &Config) -> Result<(Scene, Option<tafall::detector::LabeledScenario>)> {
    if Path::new(scene).is_file() {
        return Ok((load_scene(scene)?, None));
    }
    let Some(s) = scenario_by_name(scene) else {
        bail!("{scene:?} is neither a scene file nor a built-in scenario");
    };
    let scene = Scene {
        script: s.poses,
        camera: s.camera,
        profile: BodyThermalProfile::default_profile(),
        params: config.sim_params(),
        sensor_id: config.sim.sensor_id,
    };
    Ok((scene, Some(s.truth)))
}

fn sim(
    scene: &str,
    output: &Path,
    config: &Config,
    poses: Option<&Path>,
    truth: Option<&Path>,
    mhi: Option<&Path>,
) -> Result<()> {
    let (scene, labels) = resolve_scene(scene, config)?;
    let frames = render_sequence(scene.script.frames(), &scene.camera, &scene.profile, &scene.params)?;
    let rate = scene.script.frame_rate();
    record_frames(&frames, scene.sensor_id, rate, BufWriter::new(File::create(output)?))?;
    eprintln!("wrote {} frames to {}", frames.len(), output.display());
    if let Some(p) = poses {
        write_pose_sequence(&scene.script, p)?;
    }
    if let Some(p) = truth {
        let Some(labels) = labels else { bail!("truth labels exist only for built-in scenarios") };
        std::fs::write(p, serde_json::to_string_pretty(&labels)?)?;
    }
    if let Some(p) = mhi {
        let mut tracker = MhiTracker::new(config.mhi)?;
        let mhis = frames.iter().map(|f| tracker.push(f).cloned()).collect::<Result<Vec<_>, _>>()?;
        record_mhi(&mhis, scene.sensor_id, rate, scene.params.first_seq_no, BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}

struct NoPoses;

impl PoseProvider for NoPoses {
    fn pose(&mut self, _: u16, _: &tafall::frame::TemperatureFrame) -> Option<WorldPose> {
        None
    }
}

fn run_serve(
    listen: &str,
    config: &Config,
    events: Option<&Path>,
    poses: Option<PoseSequence<WorldPose>>,
    first_seq: u32,
    duration: Option<f64>,
) -> Result<()> {
    let topology = SkeletonTopology::default_17();
    let providers: ProviderFactory = match poses {
        Some(seq) => {
            let replay = ReplayPoseProvider::new(&seq, first_seq);
            Arc::new(move |_| Box::new(replay.clone()) as Box<dyn PoseProvider>)
        }
        None => Arc::new(|_| Box::new(NoPoses) as Box<dyn PoseProvider>),
    };
    let sink: Option<Box<dyn Write + Send>> = match events {
        Some(p) => Some(Box::new(BufWriter::new(File::create(p)?))),
        None => Some(Box::new(std::io::stdout())),
    };
    let handle = serve(listen, config.pipeline(), topology, providers, sink)?;
    eprintln!("listening on {}", handle.local_addr());
    let start = std::time::Instant::now();
    loop {
        std::thread::sleep(Duration::from_secs(1));
        if duration.is_some_and(|d| start.elapsed().as_secs_f64() >= d) {
            break;
        }
        if start.elapsed().as_secs().is_multiple_of(10) {
            eprintln!("{}", serde_json::to_string(&handle.stats())?);
        }
    }
    let report = handle.shutdown();
    eprintln!("{}", serde_json::to_string(&report.stats)?);
    Ok(())
}

fn parse_cell(cell: &str, line: usize) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    cell.parse().map(Some).with_context(|| format!("line {line}: bad number {cell:?}"))
}

fn eval_loss(input: &Path) -> Result<f64> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(input)?;
    let (mut pred, mut target) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let (Some(a), Some(b)) = (record.get(0), record.get(1)) else { bail!("line {}: expected two columns", i + 1) };
        if i == 0 && !a.is_empty() && a.parse::<f64>().is_err() {
            continue;
        }
        pred.push(parse_cell(a, i + 1)?);
        target.push(parse_cell(b, i + 1)?);
    }
    Ok(balance_mse(&pred, &target)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sim { scene, output, config, poses, truth, mhi } => {
            let config = load_config(config.as_deref())?;
            sim(&scene, &output, &config, poses.as_deref(), truth.as_deref(), mhi.as_deref())
        }
        Command::Serve { listen, config, events, poses, first_seq, duration } => {
            let config = load_config(config.as_deref())?;
            let poses = poses.map(|p| load_world_sequence(&p, &SkeletonTopology::default_17())).transpose()?;
            run_serve(&listen, &config, events.as_deref(), poses, first_seq, duration)
        }
        Command::Replay { recording, to, rate } => {
            let rec = Recording::load(&recording).with_context(|| format!("loading {}", recording.display()))?;
            let report = replay(&rec, to.as_str(), rate)?;
            eprintln!("sent {} packets in {:.3} s", report.packets, report.wall_time.as_secs_f64());
            Ok(())
        }
        Command::Detect { input, config, output, windows } => {
            let config = load_config(config.as_deref())?;
            let poses = load_world_sequence(&input, &SkeletonTopology::default_17())?;
            let out = detect_poses(&poses, &config.detector)?;
            match output {
                Some(p) => write_events(&out.events, BufWriter::new(File::create(p)?))?,
                None => write_events(&out.events, std::io::stdout().lock())?,
            }
            if let Some(p) = windows {
                write_windows(&out.windows, BufWriter::new(File::create(p)?))?;
            }
            Ok(())
        }
        Command::Eval { pred, truth, config, frame_rate } => {
            let config = load_config(config.as_deref())?;
            let events = read_events(BufReader::new(File::open(&pred)?))?;
            let truth = read_truth(&std::fs::read_to_string(&truth)?)?;
            let report = evaluate(&events, &truth, &config.detector, config.detector.match_tolerance, Some(frame_rate));
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::EvalLoss { input } => {
            println!("{}", eval_loss(&input)?);
            Ok(())
        }
    }
}

//! `zoosim`: run servers, evaluate policies, collect demonstrations and
//! launch worker pools.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use zoosim_bench::{
    compute_metrics, report, run_episodes, seeds, Entry, ExpertTracker, HoldPolicy, OracleNavigator, PerturbationLevel,
    PidGains, PidTracker, Policy, RandomPolicy, VlmAgent, VlmConfig,
};
use zoosim_bench::{courses, BaseEndpoint, LaunchConfig, Launcher};
use zoosim_core::env::{PopulationControl, TaskConfig, TaskEnv, TaskKind, TimeDilation};
use zoosim_protocol::{fps_benchmark, serve, Client, Endpoint, Host, SharedHost};

#[derive(Parser)]
#[command(name = "zoosim", version, about = "Embodied-agent simulator and benchmark tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve one environment over TCP or a local socket.
    Serve {
        #[arg(long)]
        scene: Option<String>,
        /// Task config file or builtin name.
        #[arg(long)]
        task: Option<String>,
        #[arg(long, conflicts_with = "ipc")]
        tcp: Option<String>,
        #[arg(long)]
        ipc: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// WIDTHxHEIGHT
        #[arg(long)]
        resolution: Option<String>,
    },
    /// Evaluate a policy and write per-episode records as CSV.
    Eval {
        #[arg(long)]
        task: String,
        #[arg(long, default_value = "pid")]
        policy: String,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        distractors: usize,
        /// A number, or `none` for uncontrolled jitter.
        #[arg(long)]
        control_fps: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        perturb: u8,
        #[arg(long)]
        out: PathBuf,
        /// Also write `<stem>.csv`/`<stem>.txt` summary tables.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Collect expert demonstrations.
    Collect {
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        perturb: u8,
        #[arg(long, default_value = "tracking-flat")]
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Start `k` servers and supervise them until interrupted.
    Launch {
        #[arg(short = 'k', long)]
        k: usize,
        #[arg(long, default_value_t = 9000)]
        base_port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Use local sockets in this directory instead of TCP.
        #[arg(long)]
        ipc_dir: Option<PathBuf>,
        #[arg(long, default_value = "generator:flat:0:16x16")]
        scene: String,
        #[arg(long)]
        task: Option<PathBuf>,
        #[arg(long, default_value = "registry.json")]
        registry: PathBuf,
        /// Exit after this many seconds instead of running until killed.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Time a command against a running server.
    Fps {
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value = "vget /camera/0/lit")]
        command: String,
        #[arg(short, long, default_value_t = 1000)]
        n: usize,
    },
}

type Res<T> = Result<T, String>;

fn load_task(spec: &str) -> Res<TaskConfig> {
    if Path::new(spec).exists() {
        return TaskConfig::load(Path::new(spec)).map_err(|e| e.to_string());
    }
    courses::builtin(spec).ok_or_else(|| format!("'{spec}' is neither a file nor one of {:?}", courses::BUILTIN_NAMES))
}

fn parse_resolution(s: &str) -> Res<(u32, u32)> {
    let (w, h) = s.split_once('x').ok_or("resolution must look like 320x240")?;
    Ok((w.parse().map_err(|_| "bad width")?, h.parse().map_err(|_| "bad height")?))
}

fn parse_fps(s: Option<&str>) -> Res<Option<Option<f64>>> {
    match s {
        None => Ok(None),
        Some("none") => Ok(Some(None)),
        Some(v) => v.parse::<f64>().map(|f| Some(Some(f))).map_err(|_| format!("bad --control-fps '{v}'")),
    }
}

fn make_policy(name: &str, cfg: &TaskConfig, perturb: u8) -> Res<Box<dyn Policy>> {
    Ok(match name {
        "pid" => Box::new(PidTracker::for_config(PidGains::default(), cfg).map_err(|e| e.to_string())?),
        "expert" => Box::new(ExpertTracker::new(PerturbationLevel::new(perturb).ok_or("perturb must be 0..=3")?)),
        "oracle" => Box::new(OracleNavigator::new()),
        "random" => Box::new(RandomPolicy::default()),
        "hold" => Box::new(HoldPolicy),
        "vlm" => Box::new(VlmAgent::new(VlmConfig::from_env().map_err(|e| e.to_string())?)),
        other => return Err(format!("unknown policy '{other}'")),
    })
}

fn cmd_serve(
    scene: Option<String>,
    task: Option<String>,
    tcp: Option<String>,
    ipc: Option<PathBuf>,
    seed: u64,
    resolution: Option<String>,
) -> Res<()> {
    let mut cfg = match (&task, &scene) {
        (Some(t), _) => load_task(t)?,
        (None, Some(s)) => TaskConfig::minimal(TaskKind::Tracking, s),
        (None, None) => TaskConfig::minimal(TaskKind::Tracking, "generator:flat:0:16x16"),
    };
    if let (Some(_), Some(s)) = (&task, &scene) {
        cfg.scene = s.clone();
    }
    if let Some(r) = resolution {
        (cfg.observation.width, cfg.observation.height) = parse_resolution(&r)?;
    }
    let mut env = TaskEnv::new(cfg).map_err(|e| e.to_string())?;
    env.reset(seed).map_err(|e| e.to_string())?;
    let ep = match (tcp, ipc) {
        (_, Some(p)) => Endpoint::Local(p),
        (Some(a), None) => a.parse::<Endpoint>()?,
        (None, None) => Endpoint::Tcp("127.0.0.1:9000".into()),
    };
    let handle = serve(Arc::new(SharedHost::new(Host::new(env))), &ep).map_err(|e| e.to_string())?;
    println!("listening on {}", handle.endpoint());
    handle.wait();
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    task: &str,
    policy: &str,
    episodes: usize,
    distractors: usize,
    fps: Option<String>,
    seed: u64,
    perturb: u8,
    out: &Path,
    stem: Option<PathBuf>,
) -> Res<()> {
    let cfg = load_task(task)?;
    let kind = cfg.task;
    let max_steps = cfg.max_steps;
    let mut pol = make_policy(policy, &cfg, perturb)?;
    let core = TaskEnv::new(cfg).map_err(|e| e.to_string())?;
    let mut pop = PopulationControl::new(core, distractors).map_err(|e| e.to_string())?;
    let records = match parse_fps(fps.as_deref())? {
        Some(f) => run_episodes(&mut TimeDilation::new(pop, f), pol.as_mut(), &seeds(seed, episodes)),
        None => run_episodes(&mut pop, pol.as_mut(), &seeds(seed, episodes)),
    };
    let mut w = csv::Writer::from_path(out).map_err(|e| e.to_string())?;
    w.write_record(["seed", "return", "length", "success", "path_length", "shortest_length", "wall_time", "failure"])
        .map_err(|e| e.to_string())?;
    for r in &records {
        debug_assert!(r.check(max_steps).is_ok());
        w.write_record([
            r.seed.to_string(),
            r.episode_return.to_string(),
            r.length.to_string(),
            r.success.to_string(),
            r.path_length.to_string(),
            r.shortest_length.to_string(),
            format!("{:.3}", r.wall_time),
            r.failure.clone().unwrap_or_default(),
        ])
        .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    let m = compute_metrics(&records, kind).map_err(|e| e.to_string())?;
    println!("{policy}: ER {:.1} EL {:.1} SR {:.2} SPL {:.3} over {} episodes", m.er, m.el, m.sr, m.spl, m.n_episodes);
    if let Some(stem) = stem {
        let cond = format!("{}D/{}", distractors, fps.unwrap_or_else(|| "base".into()));
        report(&[Entry::new(policy, cond, m)], &stem).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_collect(steps: u64, perturb: u8, task: &str, seed: u64, out: &Path) -> Res<()> {
    let cfg = load_task(task)?;
    let mut env = TaskEnv::new(cfg).map_err(|e| e.to_string())?;
    let mut expert = ExpertTracker::new(PerturbationLevel::new(perturb).ok_or("perturb must be 0..=3")?);
    let s =
        zoosim_bench::collect_demonstrations(&mut env, &mut expert, &zoosim_bench::DemoOptions::new(steps, seed), out)
            .map_err(|e| e.to_string())?;
    println!("{} steps over {} episodes in {} (resumed at {})", s.steps, s.episodes, out.display(), s.resumed_from);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_launch(
    k: usize,
    base_port: u16,
    host: String,
    ipc_dir: Option<PathBuf>,
    scene: String,
    task: Option<PathBuf>,
    registry: PathBuf,
    duration: Option<f64>,
) -> Res<()> {
    let program = std::env::current_exe().map_err(|e| e.to_string())?;
    let base = match ipc_dir {
        Some(dir) => BaseEndpoint::Local { dir, stem: "zoosim".into() },
        None => BaseEndpoint::Tcp { host, port: base_port },
    };
    let mut cfg = LaunchConfig::new(program, k, base, scene, &registry);
    cfg.task = task;
    let mut l = Launcher::launch(cfg).map_err(|e| e.to_string())?;
    for w in &l.registry().workers {
        println!("worker {} pid {} seed {} at {}", w.worker, w.pid, w.seed, w.endpoint);
    }
    let t0 = std::time::Instant::now();
    while duration.is_none_or(|d| t0.elapsed().as_secs_f64() < d) {
        std::thread::sleep(Duration::from_millis(200));
        if l.poll().map_err(|e| e.to_string())? > 0 {
            log::info!("restarted workers; registry at {}", registry.display());
        }
    }
    l.shutdown().map_err(|e| e.to_string())?;
    Ok(())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn cmd_fps(endpoint: &str, command: &str, n: usize) -> Res<()> {
    let ep: Endpoint = endpoint.parse()?;
    let mut c = Client::connect(&ep).map_err(|e| e.to_string())?;
    let r = fps_benchmark(&mut c, n, |c| c.call(command).map(|_| ())).map_err(|e| e.to_string())?;
    println!("{command}: {:.1} fps (p50 {:.3} ms, p95 {:.3} ms, p99 {:.3} ms)", r.fps, ms(r.p50), ms(r.p95), ms(r.p99));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().cmd {
        Cmd::Serve { scene, task, tcp, ipc, seed, resolution } => cmd_serve(scene, task, tcp, ipc, seed, resolution),
        Cmd::Eval { task, policy, episodes, distractors, control_fps, seed, perturb, out, report } => {
            cmd_eval(&task, &policy, episodes, distractors, control_fps, seed, perturb, &out, report)
        }
        Cmd::Collect { steps, perturb, task, seed, out } => cmd_collect(steps, perturb, &task, seed, &out),
        Cmd::Launch { k, base_port, host, ipc_dir, scene, task, registry, duration } => {
            cmd_launch(k, base_port, host, ipc_dir, scene, task, registry, duration)
        }
        Cmd::Fps { endpoint, command, n } => cmd_fps(&endpoint, &command, n),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Demonstration datasets: a newline-delimited index plus raw frame files.
//!
//! Layout of an output directory:
//! - `meta.json`: base seed and policy name
//! - `index.jsonl`: one [`DemoRecord`] per line
//! - `frames/<index>_<modality>.bin`: raw frame payloads

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zoosim_core::env::{EnvError, Environment, Observation};
use zoosim_core::sensors::{Modality, RelativeState};
use zoosim_core::sim::Action;

use crate::policy::{Policy, PolicyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DemoError {
    #[error("i/o failure at {path}: {message}")]
    IoFailure { path: PathBuf, message: String },
    #[error("dataset at {0} belongs to a different run (meta.json differs)")]
    MetaMismatch(PathBuf),
    #[error("resume diverged at record {0}: policy is not deterministic")]
    ResumeMismatch(u64),
    #[error("corrupt index line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DemoError + '_ {
    move |e| DemoError::IoFailure { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub file: String,
    pub modality: Modality,
    pub width: u32,
    pub height: u32,
}

/// The observation an action was taken from, and what followed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRecord {
    pub index: u64,
    pub episode: u64,
    pub seed: u64,
    /// Step within the episode, from 0.
    pub step: u32,
    pub frames: Vec<FrameRef>,
    pub relative: RelativeState,
    pub action: Action,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    base_seed: u64,
    policy: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSummary {
    pub steps: u64,
    pub episodes: u64,
    pub resumed_from: u64,
}

/// Reads the index, ignoring a trailing partial line.
pub fn read_index(dir: &Path) -> Result<Vec<DemoRecord>, DemoError> {
    let path = dir.join("index.jsonl");
    let f = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(&path)(e)),
    };
    let mut out = Vec::new();
    let mut reader = BufReader::new(f);
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err(&path))?;
        if n == 0 || !line.ends_with('\n') {
            break;
        }
        let rec: DemoRecord = serde_json::from_str(&line)
            .map_err(|e| DemoError::Corrupt { line: out.len() + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

struct Writer {
    dir: PathBuf,
    index: File,
    len: u64,
    /// Test hook: fail the write of this record index.
    fail_at: Option<u64>,
}

impl Writer {
    fn open(dir: &Path, valid: &[DemoRecord]) -> Result<Self, DemoError> {
        let frames = dir.join("frames");
        fs::create_dir_all(&frames).map_err(io_err(&frames))?;
        let path = dir.join("index.jsonl");
        let mut bytes = 0u64;
        for r in valid {
            bytes += serde_json::to_string(r).expect("record serializes").len() as u64 + 1;
        }
        let index = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        // drop a partial trailing line from an interrupted run
        index.set_len(bytes).map_err(io_err(&path))?;
        let keep: std::collections::HashSet<String> =
            valid.iter().flat_map(|r| r.frames.iter().map(|f| f.file.clone())).collect();
        for e in fs::read_dir(&frames).map_err(io_err(&frames))?.flatten() {
            let name = format!("frames/{}", e.file_name().to_string_lossy());
            if !keep.contains(&name) {
                let _ = fs::remove_file(e.path());
            }
        }
        Ok(Self { dir: dir.to_path_buf(), index, len: bytes, fail_at: None })
    }

    fn append(&mut self, mut rec: DemoRecord, obs: &Observation) -> Result<(), DemoError> {
        let mut written = Vec::new();
        let result = (|| {
            if self.fail_at == Some(rec.index) {
                return Err(DemoError::IoFailure { path: self.dir.clone(), message: "injected failure".into() });
            }
            for f in &obs.frames {
                let name = format!("frames/{:08}_{}.bin", rec.index, f.modality.name());
                let path = self.dir.join(&name);
                written.push(path.clone());
                fs::write(&path, &f.payload).map_err(io_err(&path))?;
                rec.frames.push(FrameRef { file: name, modality: f.modality, width: f.width, height: f.height });
            }
            let mut line = serde_json::to_string(&rec).expect("record serializes");
            line.push('\n');
            let path = self.dir.join("index.jsonl");
            self.index.write_all(line.as_bytes()).map_err(io_err(&path))?;
            self.len += line.len() as u64;
            Ok(())
        })();
        if result.is_err() {
            for p in written {
                let _ = fs::remove_file(p);
            }
            let _ = self.index.set_len(self.len);
        }
        result
    }
}

/// Collection options.
#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub total_steps: u64,
    /// Episode `e` uses seed `base_seed + e`.
    pub base_seed: u64,
    pub(crate) fail_at: Option<u64>,
}

impl DemoOptions {
    pub fn new(total_steps: u64, base_seed: u64) -> Self {
        Self { total_steps, base_seed, fail_at: None }
    }

    #[doc(hidden)]
    pub fn fail_at(mut self, index: u64) -> Self {
        self.fail_at = Some(index);
        self
    }
}

/// Rolls `expert` out until the index holds exactly `total_steps` records.
/// An existing dataset in `out` is resumed by replaying its last episode.
pub fn collect_demonstrations<E: Environment + ?Sized>(
    env: &mut E,
    expert: &mut dyn Policy,
    opts: &DemoOptions,
    out: &Path,
) -> Result<DemoSummary, DemoError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let meta = Meta { base_seed: opts.base_seed, policy: expert.name().to_string() };
    let meta_path = out.join("meta.json");
    match fs::read_to_string(&meta_path) {
        Ok(s) => {
            if serde_json::from_str::<Meta>(&s).ok().as_ref() != Some(&meta) {
                return Err(DemoError::MetaMismatch(out.to_path_buf()));
            }
        }
        Err(_) => fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("meta serializes"))
            .map_err(io_err(&meta_path))?,
    }
    let mut existing = read_index(out)?;
    existing.truncate(opts.total_steps as usize);
    let resumed_from = existing.len() as u64;
    let mut writer = Writer::open(out, &existing)?;
    writer.fail_at = opts.fail_at;

    let (mut episode, replay) = match existing.last() {
        None => (0, Vec::new()),
        Some(last) if last.done => (last.episode + 1, Vec::new()),
        Some(last) => {
            let e = last.episode;
            (e, existing.iter().filter(|r| r.episode == e).cloned().collect())
        }
    };
    let mut index = resumed_from;
    let mut replay = replay.into_iter();
    while index < opts.total_steps {
        let seed = opts.base_seed + episode;
        let mut obs = env.reset(seed)?;
        expert.reset(env.core(), seed)?;
        let mut step = 0u32;
        loop {
            let action = expert.act(env.core(), &obs)?;
            let r = env.step(action)?;
            let done = r.terminated || r.truncated;
            if let Some(old) = replay.next() {
                if old.action != action || old.reward != r.reward {
                    return Err(DemoError::ResumeMismatch(old.index));
                }
            } else {
                let rec = DemoRecord {
                    index,
                    episode,
                    seed,
                    step,
                    frames: Vec::new(),
                    relative: obs.relative,
                    action,
                    reward: r.reward,
                    done,
                };
                writer.append(rec, &obs)?;
                index += 1;
            }
            step += 1;
            obs = r.observation;
            if done || index >= opts.total_steps {
                break;
            }
        }
        episode += 1;
    }
    Ok(DemoSummary { steps: index, episodes: episode, resumed_from })
}

/// Replays the stored actions of `episode` and returns the re-simulated rewards.
pub fn replay_rewards<E: Environment + ?Sized>(
    env: &mut E,
    records: &[DemoRecord],
    episode: u64,
) -> Result<Vec<f64>, DemoError> {
    let recs: Vec<&DemoRecord> = records.iter().filter(|r| r.episode == episode).collect();
    let Some(first) = recs.first() else { return Ok(Vec::new()) };
    env.reset(first.seed)?;
    let mut out = Vec::with_capacity(recs.len());
    for r in recs {
        out.push(env.step(r.action)?.reward);
    }
    Ok(out)
}

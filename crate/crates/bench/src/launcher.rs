//! Runs several simulator servers as child processes and keeps a registry file.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use zoosim_protocol::{Client, Endpoint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LaunchError {
    #[error("no free port at or above {0}")]
    PortsExhausted(u16),
    #[error("failed to start worker {worker}: {message}")]
    Spawn { worker: usize, message: String },
    #[error("worker {worker} at {endpoint} did not answer in time")]
    NotReady { worker: usize, endpoint: String },
    #[error("registry {path}: {message}")]
    Registry { path: PathBuf, message: String },
    #[error("{0} seeds given for {1} workers")]
    SeedCount(usize, usize),
}

/// Where workers listen.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseEndpoint {
    /// Worker `i` tries `host:port + i` and shifts upward past busy ports.
    Tcp { host: String, port: u16 },
    /// Worker `i` listens on `<dir>/<stem>-<i>.sock`.
    Local { dir: PathBuf, stem: String },
}

#[derive(Debug, Clone)]
pub struct LaunchConfig {
    pub program: PathBuf,
    pub k: usize,
    pub base: BaseEndpoint,
    pub scene: String,
    pub task: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub registry: PathBuf,
    pub max_restarts: u32,
    pub ready_timeout: Duration,
    pub extra_args: Vec<String>,
}

impl LaunchConfig {
    pub fn new(
        program: impl Into<PathBuf>,
        k: usize,
        base: BaseEndpoint,
        scene: impl Into<String>,
        registry: impl Into<PathBuf>,
    ) -> Self {
        Self {
            program: program.into(),
            k,
            base,
            scene: scene.into(),
            task: None,
            seeds: (0..k as u64).collect(),
            registry: registry.into(),
            max_restarts: 2,
            ready_timeout: Duration::from_secs(20),
            extra_args: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerEntry {
    pub worker: usize,
    pub endpoint: String,
    pub pid: u32,
    pub seed: u64,
    pub restarts: u32,
    /// Port first tried when the worker had to move.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifted_from: Option<u16>,
    pub alive: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub workers: Vec<WorkerEntry>,
}

impl Registry {
    pub fn load(path: &Path) -> Result<Self, LaunchError> {
        let err = |m: String| LaunchError::Registry { path: path.to_path_buf(), message: m };
        let s = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&s).map_err(|e| err(e.to_string()))
    }

    fn save(&self, path: &Path) -> Result<(), LaunchError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self).expect("registry serializes"))
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| LaunchError::Registry { path: path.to_path_buf(), message: e.to_string() })
    }
}

fn port_free(host: &str, port: u16) -> bool {
    TcpListener::bind((host, port)).is_ok()
}

/// Supervises the workers. Dropping it kills them.
#[derive(Debug)]
pub struct Launcher {
    cfg: LaunchConfig,
    children: Vec<Option<Child>>,
    registry: Registry,
    next_port: u16,
}

impl Launcher {
    pub fn launch(cfg: LaunchConfig) -> Result<Self, LaunchError> {
        if cfg.seeds.len() < cfg.k {
            return Err(LaunchError::SeedCount(cfg.seeds.len(), cfg.k));
        }
        let next_port = match &cfg.base {
            BaseEndpoint::Tcp { port, .. } => *port,
            BaseEndpoint::Local { .. } => 0,
        };
        let mut l = Self { cfg, children: Vec::new(), registry: Registry::default(), next_port };
        for i in 0..l.cfg.k {
            let (endpoint, shifted_from) = l.pick_endpoint(i)?;
            let child = l.spawn(i, &endpoint)?;
            l.registry.workers.push(WorkerEntry {
                worker: i,
                endpoint: endpoint.to_string(),
                pid: child.id(),
                seed: l.cfg.seeds[i],
                restarts: 0,
                shifted_from,
                alive: true,
            });
            l.children.push(Some(child));
        }
        l.registry.save(&l.cfg.registry)?;
        for i in 0..l.cfg.k {
            l.wait_ready(i)?;
        }
        Ok(l)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.registry.workers.iter().map(|w| w.endpoint.parse().expect("registry endpoints parse")).collect()
    }

    fn pick_endpoint(&mut self, i: usize) -> Result<(Endpoint, Option<u16>), LaunchError> {
        match &self.cfg.base {
            BaseEndpoint::Tcp { host, .. } => {
                let wanted = self.next_port;
                let mut p = wanted;
                while !port_free(host, p) {
                    p = p.checked_add(1).ok_or(LaunchError::PortsExhausted(wanted))?;
                }
                self.next_port = p.saturating_add(1);
                Ok((Endpoint::Tcp(format!("{host}:{p}")), (p != wanted).then_some(wanted)))
            }
            BaseEndpoint::Local { dir, stem } => Ok((Endpoint::Local(dir.join(format!("{stem}-{i}.sock"))), None)),
        }
    }

    fn spawn(&self, i: usize, ep: &Endpoint) -> Result<Child, LaunchError> {
        let mut cmd = Command::new(&self.cfg.program);
        cmd.arg("serve").arg("--scene").arg(&self.cfg.scene).arg("--seed").arg(self.cfg.seeds[i].to_string());
        match ep {
            Endpoint::Tcp(a) => cmd.arg("--tcp").arg(a),
            Endpoint::Local(p) => cmd.arg("--ipc").arg(p),
        };
        if let Some(t) = &self.cfg.task {
            cmd.arg("--task").arg(t);
        }
        cmd.args(&self.cfg.extra_args).stdin(Stdio::null()).stdout(Stdio::null()).stderr(Stdio::null());
        cmd.spawn().map_err(|e| LaunchError::Spawn { worker: i, message: e.to_string() })
    }

    fn wait_ready(&self, i: usize) -> Result<(), LaunchError> {
        let ep: Endpoint = self.registry.workers[i].endpoint.parse().expect("registry endpoints parse");
        let not_ready = || LaunchError::NotReady { worker: i, endpoint: ep.to_string() };
        let mut c = Client::connect_retry(&ep, self.cfg.ready_timeout).map_err(|_| not_ready())?;
        c.text("vget /env/name").map(|_| ()).map_err(|_| not_ready())
    }

    /// Restarts exited workers (at most `max_restarts` times each) and
    /// rewrites the registry. Returns how many were restarted.
    pub fn poll(&mut self) -> Result<usize, LaunchError> {
        let mut restarted = 0;
        let mut changed = false;
        for i in 0..self.children.len() {
            let exited = match self.children[i].as_mut() {
                Some(c) => !matches!(c.try_wait(), Ok(None)),
                None => false,
            };
            if !exited {
                continue;
            }
            changed = true;
            self.children[i] = None;
            if self.registry.workers[i].restarts >= self.cfg.max_restarts {
                self.registry.workers[i].alive = false;
                log::warn!("worker {i} exited and has no restarts left");
                continue;
            }
            let mut ep: Endpoint = self.registry.workers[i].endpoint.parse().expect("registry endpoints parse");
            if let (Endpoint::Tcp(addr), BaseEndpoint::Tcp { host, .. }) = (&ep, &self.cfg.base) {
                let port: u16 = addr.rsplit(':').next().and_then(|p| p.parse().ok()).unwrap_or(0);
                if !port_free(host, port) {
                    let host = host.clone();
                    self.next_port = self.next_port.max(port);
                    let (e, _) = self.pick_endpoint(i)?;
                    self.registry.workers[i].shifted_from = Some(port);
                    log::warn!("worker {i} port {port} busy on restart; moved to {e} ({host})");
                    ep = e;
                }
            }
            let child = self.spawn(i, &ep)?;
            let w = &mut self.registry.workers[i];
            w.endpoint = ep.to_string();
            w.pid = child.id();
            w.restarts += 1;
            w.alive = true;
            self.children[i] = Some(child);
            restarted += 1;
            self.registry.save(&self.cfg.registry)?;
            self.wait_ready(i)?;
        }
        if changed {
            self.registry.save(&self.cfg.registry)?;
        }
        Ok(restarted)
    }

    /// Stops every worker and records them as not alive.
    pub fn shutdown(mut self) -> Result<Registry, LaunchError> {
        self.kill_all();
        self.registry.save(&self.cfg.registry)?;
        Ok(std::mem::take(&mut self.registry))
    }

    fn kill_all(&mut self) {
        for (c, w) in self.children.iter_mut().zip(self.registry.workers.iter_mut()) {
            if let Some(mut c) = c.take() {
                let _ = c.kill();
                let _ = c.wait();
            }
            w.alive = false;
        }
    }
}

impl Drop for Launcher {
    fn drop(&mut self) {
        self.kill_all();
    }
}

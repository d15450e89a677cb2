//! Command dispatch against a task environment.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard};

use serde_json::json;
use zoosim_core::env::{ControlRate, EnvError, Observation, StepResult, TaskEnv, LEARNER_ID};
use zoosim_core::sensors::{relative_state, Frame, Modality};
use zoosim_core::sim::{Action, ContinuousMoveAction, DiscreteNavAction, EntityClass, EntityKind};
use zoosim_core::world::DoorState;
use zoosim_core::Vec3;

use crate::codec::Item;
use crate::command::{Command, Verb};

/// A task environment plus per-entity commanded actions.
pub struct Host {
    env: TaskEnv,
    /// Actions applied on every `vset /env/tick` until replaced.
    pending: BTreeMap<String, Action>,
}

fn frame_item(f: Frame) -> Item {
    Item::Frame { modality: f.modality.code(), width: f.width, height: f.height, payload: f.payload }
}

fn num(args: &[String], k: usize, what: &str) -> Result<f64, String> {
    args.get(k)
        .ok_or_else(|| format!("missing argument '{what}'"))?
        .parse::<f64>()
        .map_err(|_| format!("argument '{what}' is not a number"))
}

fn obs_json(o: &Observation) -> serde_json::Value {
    json!({
        "step": o.step,
        "relative": o.relative,
        "frames": o.frames.iter().map(|f| json!({"modality": f.modality.name(), "width": f.width, "height": f.height})).collect::<Vec<_>>(),
    })
}

fn step_json(s: &StepResult) -> serde_json::Value {
    json!({
        "reward": s.reward,
        "terminated": s.terminated,
        "truncated": s.truncated,
        "info": s.info,
        "observation": obs_json(&s.observation),
    })
}

fn env_err(e: EnvError) -> String {
    e.to_string()
}

/// Parses `vset /env/action` arguments: two numbers are a continuous action,
/// anything else names a discrete action.
pub fn parse_action(args: &[String]) -> Result<Action, String> {
    if args.len() == 2 {
        if let (Ok(a), Ok(l)) = (args[0].parse::<f64>(), args[1].parse::<f64>()) {
            return Ok(Action::Continuous(ContinuousMoveAction::new(a, l)));
        }
    }
    if args.is_empty() {
        return Err("missing action".into());
    }
    args.join(" ").parse::<DiscreteNavAction>().map(Action::Discrete)
}

impl Host {
    pub fn new(env: TaskEnv) -> Self {
        Self { env, pending: BTreeMap::new() }
    }

    pub fn env(&self) -> &TaskEnv {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut TaskEnv {
        &mut self.env
    }

    /// Executes one command. `Err` carries the error text for the response item.
    pub fn execute(&mut self, text: &str) -> Result<Item, String> {
        let cmd = Command::parse(text).map_err(|e| e.to_string())?;
        let p: Vec<&str> = cmd.path.iter().map(String::as_str).collect();
        let a = &cmd.args;
        let ok = || Ok(Item::Text("ok".into()));
        match (cmd.verb, p.as_slice()) {
            (Verb::Get, ["env", "name"]) => Ok(Item::Text(self.env.world().scene.name.clone())),
            (Verb::Get, ["env", "agents"]) => {
                Ok(Item::Text(self.env.world().entities().map(|e| e.id.as_str()).collect::<Vec<_>>().join(" ")))
            }
            (Verb::Get, ["env", "tick"]) => Ok(Item::Text(self.env.world().clock.tick_index.to_string())),
            (Verb::Set, ["env", "tick"]) => {
                let n = match a.first() {
                    Some(s) => s.parse::<u32>().map_err(|_| "tick count must be a non-negative integer".to_string())?,
                    None => 1,
                };
                let dt = self.env.world().clock.tick_dt;
                let actions: BTreeMap<String, Action> = self
                    .pending
                    .iter()
                    .filter(|(id, _)| self.env.world().entity(id).is_some())
                    .map(|(k, v)| (k.clone(), *v))
                    .collect();
                for _ in 0..n {
                    self.env.world_mut().step_world(&actions, dt).map_err(|e| e.to_string())?;
                }
                Ok(Item::Text(self.env.world().clock.tick_index.to_string()))
            }
            (Verb::Get, ["agent", id, what @ ..]) => self.get_agent(id, what, a),
            (Verb::Set, ["agent", id, "move"]) => {
                self.require_entity(id)?;
                let act = ContinuousMoveAction::unclamped(num(a, 0, "angular")?, num(a, 1, "linear")?);
                self.pending.insert(id.to_string(), Action::Continuous(act));
                ok()
            }
            (Verb::Set, ["agent", id, "action"]) => {
                self.require_entity(id)?;
                let d: DiscreteNavAction = a.join(" ").parse()?;
                self.pending.insert(id.to_string(), Action::Discrete(d));
                ok()
            }
            (Verb::Set, ["agent", id, "pose"]) => {
                let pos = Vec3::new(num(a, 0, "x")?, num(a, 1, "y")?, 0.0);
                let yaw = num(a, 2, "yaw")?;
                self.env.world_mut().place_entity(id, pos, yaw).map_err(|e| e.to_string())?;
                ok()
            }
            (Verb::Get, ["camera", id, modality]) => {
                let cam: u32 = id.parse().map_err(|_| format!("bad camera id '{id}'"))?;
                let m: Modality = modality.parse().map_err(|e: zoosim_core::sensors::SensorError| e.to_string())?;
                self.require_entity(LEARNER_ID)?;
                self.env.render_camera(cam, m).map(frame_item).map_err(env_err)
            }
            (Verb::Get, ["env", "object", id, "state"]) => {
                let o = self.env.world().scene.object(id).ok_or_else(|| format!("no such object '{id}'"))?;
                Ok(Item::Text(o.state.map_or_else(|| "none".to_string(), |s| s.to_string())))
            }
            (Verb::Set, ["env", "object", id, "state"]) => {
                let s: DoorState = a
                    .first()
                    .ok_or("missing state")?
                    .parse()
                    .map_err(|e: zoosim_core::world::WorldError| e.to_string())?;
                self.env.world_mut().set_object_state(id, s).map_err(|e| e.to_string())?;
                ok()
            }
            (Verb::Set, ["env", "spawn"]) => {
                let kind: EntityKind = a.first().ok_or("missing class")?.parse()?;
                let pos = Vec3::new(num(a, 1, "x")?, num(a, 2, "y")?, 0.0);
                let yaw = num(a, 3, "yaw")?;
                let id = a.get(4).ok_or("missing id")?;
                self.env.world_mut().spawn_entity(EntityClass::of(kind), pos, yaw, id).map_err(|e| e.to_string())?;
                ok()
            }
            (Verb::Set, ["env", "destroy"]) => {
                let id = a.first().ok_or("missing id")?;
                self.env.world_mut().destroy_entity(id).map_err(|e| e.to_string())?;
                self.pending.remove(id);
                ok()
            }
            (Verb::Set, ["env", "reset"]) => {
                let seed = a
                    .first()
                    .map(|s| s.parse::<u64>())
                    .transpose()
                    .map_err(|_| "seed must be an integer".to_string())?;
                self.pending.clear();
                let obs = self.env.reset(seed.unwrap_or(0)).map_err(env_err)?;
                Ok(Item::Text(obs_json(&obs).to_string()))
            }
            (Verb::Set, ["env", "action"]) => {
                let act = parse_action(a)?;
                let s = self.env.step(act).map_err(env_err)?;
                Ok(Item::Text(step_json(&s).to_string()))
            }
            (Verb::Get, ["env", "obs"]) => {
                self.require_entity(LEARNER_ID)?;
                Ok(Item::Text(obs_json(&self.env.observe()).to_string()))
            }
            (Verb::Get, ["env", "spec"]) => {
                let c = self.env.config();
                let cam = self.env.learner_camera();
                Ok(Item::Text(
                    json!({
                        "env_name": c.env_name,
                        "task": c.task,
                        "action_space": c.action_space(),
                        "max_steps": c.max_steps,
                        "control_rate": self.env.control_rate(),
                        "modalities": c.observation.modalities,
                        "width": cam.width,
                        "height": cam.height,
                        "cameras": self.env.camera_ids(),
                    })
                    .to_string(),
                ))
            }
            (Verb::Set, ["env", "fps"]) => {
                let v = a.first().ok_or("missing fps")?;
                let rate = if v == "none" {
                    ControlRate::Jitter
                } else {
                    ControlRate::from_fps(Some(
                        v.parse::<f64>().map_err(|_| "fps must be a number or 'none'".to_string())?,
                    ))
                };
                self.env.settings_mut().control = Some(rate);
                ok()
            }
            (Verb::Set, ["env", "distractors"]) => {
                let n: usize =
                    a.first().ok_or("missing count")?.parse().map_err(|_| "count must be an integer".to_string())?;
                let cap = self.env.spawn_capacity().saturating_sub(2);
                if n > cap {
                    return Err(EnvError::SpawnSpaceExhausted { requested: n, placed: cap }.to_string());
                }
                self.env.settings_mut().distractors = n;
                ok()
            }
            _ => Err(format!("unknown command '{}'", cmd.path_str())),
        }
    }

    fn require_entity(&self, id: &str) -> Result<(), String> {
        self.env.world().entity(id).map(|_| ()).ok_or_else(|| format!("no such entity '{id}'"))
    }

    fn get_agent(&self, id: &str, what: &[&str], args: &[String]) -> Result<Item, String> {
        let e = self.env.world().entity(id).ok_or_else(|| format!("no such entity '{id}'"))?;
        match what {
            ["pose"] => Ok(Item::Text(format!("{} {} {} {}", e.position.x, e.position.y, e.position.z, e.yaw))),
            ["color"] => Ok(Item::Text(format!("{} {} {}", e.mask_color.0, e.mask_color.1, e.mask_color.2))),
            ["stance"] => Ok(Item::Text(serde_json::to_value(e.stance).unwrap().as_str().unwrap_or("").to_string())),
            ["relstate"] => {
                let rel = match args.first() {
                    Some(other) => {
                        let o = self.env.world().entity(other).ok_or_else(|| format!("no such entity '{other}'"))?;
                        relative_state(e, o)
                    }
                    None if id == LEARNER_ID => self.env.relative(),
                    None => return Err("relstate needs a target id".into()),
                };
                Ok(Item::Text(serde_json::to_string(&rel).unwrap()))
            }
            _ => Err(format!("unknown agent query '{}'", what.join("/"))),
        }
    }
}

/// The single command queue: one lock acquisition per request.
pub struct SharedHost {
    host: Mutex<Host>,
    acquisitions: AtomicU64,
}

impl SharedHost {
    pub fn new(host: Host) -> Self {
        Self { host: Mutex::new(host), acquisitions: AtomicU64::new(0) }
    }

    pub fn lock(&self) -> MutexGuard<'_, Host> {
        self.acquisitions.fetch_add(1, Ordering::SeqCst);
        self.host.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn acquisitions(&self) -> u64 {
        self.acquisitions.load(Ordering::SeqCst)
    }
}

//! Vision-language model policy over an OpenAI-style chat-completions endpoint.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::json;
use zoosim_core::env::{Observation, TaskEnv, TaskKind};
use zoosim_core::sensors::{Frame, Modality, RelativeState};
use zoosim_core::sim::{Action, ContinuousMoveAction, DiscreteNavAction};

use crate::policy::{hold_for, Policy, PolicyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VlmError {
    #[error("vlm endpoint timed out or is unreachable: {0}")]
    Timeout(String),
    #[error("vlm endpoint returned an unusable response: {0}")]
    BadResponse(String),
    #[error("could not parse model output: {0:?}")]
    ParseFailure(String),
    #[error("missing configuration: {0}")]
    NotConfigured(String),
}

pub const TRACKING_PROMPT: &str = "You drive a robot that follows a person. Keep the person centered in the \
camera image at a distance of roughly 2.5 meters. Choose exactly one decision from: [move closer], \
[move further], [keep current], [turn left], [turn right]. Answer with nothing but one line of the form \
output: [decision].";

pub const NAVIGATION_PROMPT: &str = "You drive a robot toward a goal shown as a green marker. With the image \
you receive the goal's relative state as [Distance, Direction, Height]: meters, degrees (positive means the \
goal is to your right) and meters. Plan your next three moves, each one of: Move Forward, Move Backward, \
Turn Left, Turn Right, Jump, Crouch, Hold. Answer with nothing but one line of the form \
output: [Action1, Action2, Action3].";

#[derive(Debug, Clone, PartialEq)]
pub struct VlmConfig {
    pub url: String,
    pub key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    /// Minimum spacing between requests.
    pub min_interval: Duration,
}

impl VlmConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            key: None,
            model: "gpt-4o".into(),
            timeout: Duration::from_secs(60),
            min_interval: Duration::ZERO,
        }
    }

    /// Reads `ZOOSIM_VLM_URL`, `ZOOSIM_VLM_KEY` and optionally `ZOOSIM_VLM_MODEL`.
    pub fn from_env() -> Result<Self, VlmError> {
        let url = std::env::var("ZOOSIM_VLM_URL").map_err(|_| VlmError::NotConfigured("ZOOSIM_VLM_URL".into()))?;
        let mut c = Self::new(url);
        c.key = std::env::var("ZOOSIM_VLM_KEY").ok();
        if let Ok(m) = std::env::var("ZOOSIM_VLM_MODEL") {
            c.model = m;
        }
        Ok(c)
    }
}

/// PNG bytes of a color or mask frame.
pub fn encode_png(frame: &Frame) -> Result<Vec<u8>, VlmError> {
    if !matches!(frame.modality, Modality::Color | Modality::Mask) {
        return Err(VlmError::BadResponse(format!("{:?} frames are not images", frame.modality)));
    }
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, frame.width, frame.height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| VlmError::BadResponse(e.to_string()))?;
    w.write_image_data(&frame.payload).map_err(|e| VlmError::BadResponse(e.to_string()))?;
    w.finish().map_err(|e| VlmError::BadResponse(e.to_string()))?;
    Ok(out)
}

/// Text inside the last `[...]` of the reply, preferring one after `output:`.
fn bracketed(text: &str) -> Option<&str> {
    let lower = text.to_ascii_lowercase();
    let from = lower.rfind("output:").unwrap_or(0);
    let open = from + text[from..].find('[')?;
    let close = open + text[open..].find(']')?;
    Some(text[open + 1..close].trim())
}

pub fn parse_tracking(text: &str) -> Option<ContinuousMoveAction> {
    let d = bracketed(text)?.to_ascii_lowercase();
    let (ang, lin) = match d.split_whitespace().collect::<Vec<_>>().join(" ").as_str() {
        "move closer" => (0.0, 1.0),
        "move further" => (0.0, -1.0),
        "keep current" => (0.0, 0.0),
        "turn left" => (-30.0, 0.0),
        "turn right" => (30.0, 0.0),
        _ => return None,
    };
    Some(ContinuousMoveAction::new(ang, lin))
}

fn nav_name(s: &str) -> Option<DiscreteNavAction> {
    use DiscreteNavAction::*;
    Some(match s.trim().to_ascii_lowercase().split_whitespace().collect::<Vec<_>>().join(" ").as_str() {
        "move forward" | "forward" => Forward,
        "move backward" | "backward" => Backward,
        "turn left" => TurnLeft,
        "turn right" => TurnRight,
        "jump" => Jump,
        "crouch" => Crouch,
        "hold" | "stop" => Hold,
        _ => return None,
    })
}

pub fn parse_navigation(text: &str) -> Option<[DiscreteNavAction; 3]> {
    let parts: Vec<&str> = bracketed(text)?.split(',').collect();
    if parts.len() != 3 {
        return None;
    }
    Some([nav_name(parts[0])?, nav_name(parts[1])?, nav_name(parts[2])?])
}

pub fn relative_text(rel: &RelativeState) -> String {
    format!("[{:.2}, {:.1}, {:.2}]", rel.distance, rel.direction, rel.height)
}

/// Policy that asks a chat model for each decision. Navigation replies queue
/// three actions; the model is only called when the queue is empty.
#[derive(Debug)]
pub struct VlmAgent {
    pub config: VlmConfig,
    agent: ureq::Agent,
    queue: VecDeque<DiscreteNavAction>,
    last_call: Option<Instant>,
    parse_failures: u32,
    calls: u32,
}

impl VlmAgent {
    pub fn new(config: VlmConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Self { config, agent, queue: VecDeque::new(), last_call: None, parse_failures: 0, calls: 0 }
    }

    pub fn parse_failures(&self) -> u32 {
        self.parse_failures
    }

    pub fn calls(&self) -> u32 {
        self.calls
    }

    fn complete(&mut self, system: &str, user_text: &str, image_png: &[u8]) -> Result<String, VlmError> {
        if let Some(t) = self.last_call {
            let wait = self.config.min_interval.saturating_sub(t.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        self.last_call = Some(Instant::now());
        self.calls += 1;
        let image = base64::engine::general_purpose::STANDARD.encode(image_png);
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": [
                    {"type": "text", "text": user_text},
                    {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{image}")}}
                ]}
            ]
        });
        let mut req = self.agent.post(&self.config.url).set("Content-Type", "application/json");
        if let Some(k) = &self.config.key {
            req = req.set("Authorization", &format!("Bearer {k}"));
        }
        let resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) => return Err(VlmError::BadResponse(format!("http status {code}"))),
            Err(e) => return Err(VlmError::Timeout(e.to_string())),
        };
        let v: serde_json::Value = resp.into_json().map_err(|e| VlmError::BadResponse(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| VlmError::BadResponse("no choices[0].message.content".into()))
    }

    /// Sends the prompt, retrying once on unparsable output.
    fn ask<T>(
        &mut self,
        system: &str,
        user: &str,
        png: &[u8],
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, VlmError> {
        let mut last = String::new();
        for _ in 0..2 {
            last = self.complete(system, user, png)?;
            if let Some(v) = parse(&last) {
                return Ok(Some(v));
            }
        }
        self.parse_failures += 1;
        log::warn!("{}", VlmError::ParseFailure(last));
        Ok(None)
    }

    /// One decision for the given frame and relative state.
    pub fn decide(&mut self, task: TaskKind, color: &Frame, rel: &RelativeState) -> Result<Action, VlmError> {
        let png = encode_png(color)?;
        match task {
            TaskKind::Tracking => {
                let a =
                    self.ask(TRACKING_PROMPT, "Current view attached. What is your decision?", &png, parse_tracking)?;
                Ok(Action::Continuous(a.unwrap_or(ContinuousMoveAction::ZERO)))
            }
            TaskKind::Navigation => {
                if self.queue.is_empty() {
                    let user = format!("Current view attached. Goal relative state: {}.", relative_text(rel));
                    match self.ask(NAVIGATION_PROMPT, &user, &png, parse_navigation)? {
                        Some(acts) => self.queue.extend(acts),
                        None => return Ok(Action::Discrete(DiscreteNavAction::Hold)),
                    }
                }
                Ok(Action::Discrete(self.queue.pop_front().expect("queue refilled")))
            }
        }
    }
}

impl Policy for VlmAgent {
    fn name(&self) -> &str {
        "vlm"
    }

    fn reset(&mut self, _env: &TaskEnv, _seed: u64) -> Result<(), PolicyError> {
        self.queue.clear();
        Ok(())
    }

    fn act(&mut self, env: &TaskEnv, obs: &Observation) -> Result<Action, PolicyError> {
        let color = obs.frame(Modality::Color).ok_or(PolicyError::MissingModality(Modality::Color))?;
        let a = self.decide(env.task(), color, &obs.relative)?;
        Ok(match (a, env.config().action_space()) {
            (Action::Continuous(_), zoosim_core::env::ActionSpace::Discrete)
            | (Action::Discrete(_), zoosim_core::env::ActionSpace::Continuous) => hold_for(env.config().action_space()),
            _ => a,
        })
    }
}

pub mod mock {
    //! A scripted chat-completions server for tests.

    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::{Arc, Mutex};
    use std::thread::JoinHandle;

    #[derive(Debug, Default)]
    struct State {
        replies: Vec<String>,
        next: usize,
        requests: Vec<serde_json::Value>,
    }

    /// Replies with the scripted contents in order, repeating the last one.
    pub struct MockVlmServer {
        url: String,
        state: Arc<Mutex<State>>,
        stop: Arc<AtomicBool>,
        addr: std::net::SocketAddr,
        handle: Option<JoinHandle<()>>,
    }

    impl MockVlmServer {
        pub fn start(replies: Vec<String>) -> std::io::Result<Self> {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let state = Arc::new(Mutex::new(State { replies, ..State::default() }));
            let stop = Arc::new(AtomicBool::new(false));
            let (st, sp) = (state.clone(), stop.clone());
            let handle = std::thread::spawn(move || {
                for conn in listener.incoming() {
                    if sp.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(mut conn) = conn else { continue };
                    let _ = serve_one(&mut conn, &st);
                }
            });
            Ok(Self { url: format!("http://{addr}/v1/chat/completions"), state, stop, addr, handle: Some(handle) })
        }

        pub fn url(&self) -> &str {
            &self.url
        }

        pub fn requests(&self) -> Vec<serde_json::Value> {
            self.state.lock().unwrap().requests.clone()
        }
    }

    impl Drop for MockVlmServer {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            let _ = std::net::TcpStream::connect(self.addr);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }

    fn serve_one(conn: &mut std::net::TcpStream, state: &Mutex<State>) -> std::io::Result<()> {
        let mut reader = BufReader::new(conn.try_clone()?);
        let mut len = 0usize;
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Ok(());
            }
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0u8; len];
        reader.read_exact(&mut body)?;
        let content = {
            let mut s = state.lock().unwrap();
            s.requests.push(serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null));
            let k = s.next.min(s.replies.len().saturating_sub(1));
            s.next += 1;
            s.replies.get(k).cloned().unwrap_or_default()
        };
        let payload =
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string();
        write!(
            conn,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            payload.len(),
            payload
        )?;
        conn.flush()
    }
}

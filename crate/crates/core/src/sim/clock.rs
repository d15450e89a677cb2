use serde::{Deserialize, Serialize};

pub const BASE_TICK_HZ: f64 = 30.0;

/// Fixed-rate simulation clock. The agent acts every `control_interval` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    pub tick_index: u64,
    pub tick_dt: f64,
    pub control_interval: u32,
}

impl Default for SimClock {
    fn default() -> Self {
        Self { tick_index: 0, tick_dt: 1.0 / BASE_TICK_HZ, control_interval: 1 }
    }
}

impl SimClock {
    /// Ticks per control step for a control frequency (Hz).
    pub fn interval_for_fps(fps: f64) -> u32 {
        ((BASE_TICK_HZ / fps).round() as u32).max(1)
    }

    pub fn sim_time(&self) -> f64 {
        self.tick_index as f64 * self.tick_dt
    }
}

//! Toolkit wrappers. Each one only installs a setting on the core environment,
//! so they compose in any order.

use super::task::{AugmentationConfig, ControlRate, EnvError, Observation, StepResult, TaskEnv};
use crate::sim::Action;

pub trait Environment {
    fn core(&self) -> &TaskEnv;
    fn core_mut(&mut self) -> &mut TaskEnv;

    fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        self.core_mut().reset(seed)
    }

    fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        self.core_mut().step(action)
    }
}

impl Environment for TaskEnv {
    fn core(&self) -> &TaskEnv {
        self
    }

    fn core_mut(&mut self) -> &mut TaskEnv {
        self
    }
}

/// Adds `n` wandering Human distractors on every reset.
pub struct PopulationControl<E> {
    inner: E,
}

impl<E: Environment> PopulationControl<E> {
    pub fn new(mut inner: E, n: usize) -> Result<Self, EnvError> {
        // the learner and the target need slots too
        let capacity = inner.core().spawn_capacity().saturating_sub(2);
        if n > capacity {
            return Err(EnvError::SpawnSpaceExhausted { requested: n, placed: capacity });
        }
        inner.core_mut().settings_mut().distractors = n;
        Ok(Self { inner })
    }

    /// Removes the distractors from the live world as well.
    pub fn into_inner(mut self) -> E {
        let core = self.inner.core_mut();
        core.settings_mut().distractors = 0;
        core.despawn_distractors();
        self.inner
    }
}

impl<E: Environment> Environment for PopulationControl<E> {
    fn core(&self) -> &TaskEnv {
        self.inner.core()
    }

    fn core_mut(&mut self) -> &mut TaskEnv {
        self.inner.core_mut()
    }
}

/// Decouples the learner's control rate from the 30 Hz world tick.
pub struct TimeDilation<E> {
    inner: E,
}

impl<E: Environment> TimeDilation<E> {
    /// `fps = None` draws a random interval per step.
    pub fn new(mut inner: E, fps: Option<f64>) -> Self {
        inner.core_mut().settings_mut().control = Some(ControlRate::from_fps(fps));
        Self { inner }
    }

    pub fn into_inner(mut self) -> E {
        self.inner.core_mut().settings_mut().control = None;
        self.inner
    }
}

impl<E: Environment> Environment for TimeDilation<E> {
    fn core(&self) -> &TaskEnv {
        self.inner.core()
    }

    fn core_mut(&mut self) -> &mut TaskEnv {
        self.inner.core_mut()
    }
}

/// Re-randomizes appearance and lighting on every reset.
pub struct Augmentation<E> {
    inner: E,
}

impl<E: Environment> Augmentation<E> {
    pub fn new(mut inner: E, config: AugmentationConfig) -> Self {
        inner.core_mut().settings_mut().augmentation = Some(config);
        Self { inner }
    }

    pub fn into_inner(mut self) -> E {
        self.inner.core_mut().settings_mut().augmentation = None;
        self.inner
    }
}

impl<E: Environment> Environment for Augmentation<E> {
    fn core(&self) -> &TaskEnv {
        self.inner.core()
    }

    fn core_mut(&mut self) -> &mut TaskEnv {
        self.inner.core_mut()
    }
}

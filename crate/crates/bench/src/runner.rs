//! Episode rollouts.

use std::time::Instant;

use zoosim_core::env::Environment;

use crate::metrics::EpisodeRecord;
use crate::policy::Policy;

/// `n` consecutive seeds starting at `base`.
pub fn seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| base + k).collect()
}

/// Rolls one episode out to termination or truncation. Failures become a
/// failed record carrying the diagnostic.
pub fn run_episode<E: Environment + ?Sized>(env: &mut E, policy: &mut dyn Policy, seed: u64) -> EpisodeRecord {
    let t0 = Instant::now();
    let mut obs = match env.reset(seed) {
        Ok(o) => o,
        Err(e) => return EpisodeRecord::failed(seed, 0, 0.0, format!("reset: {e}")),
    };
    if let Err(e) = policy.reset(env.core(), seed) {
        return EpisodeRecord::failed(seed, 0, 0.0, format!("policy reset: {e}"));
    }
    let mut ret = 0.0;
    loop {
        let steps = env.core().step_count();
        let action = match policy.act(env.core(), &obs) {
            Ok(a) => a,
            Err(e) => {
                log::warn!("{} failed on seed {seed} at step {steps}: {e}", policy.name());
                return EpisodeRecord {
                    wall_time: t0.elapsed().as_secs_f64(),
                    ..EpisodeRecord::failed(seed, steps, ret, e.to_string())
                };
            }
        };
        let r = match env.step(action) {
            Ok(r) => r,
            Err(e) => {
                return EpisodeRecord {
                    wall_time: t0.elapsed().as_secs_f64(),
                    ..EpisodeRecord::failed(seed, steps, ret, format!("step: {e}"))
                };
            }
        };
        ret += r.reward;
        if r.terminated || r.truncated {
            return EpisodeRecord {
                episode_return: ret,
                length: r.info.steps,
                success: r.info.success,
                path_length: r.info.path_length,
                shortest_length: r.info.shortest_length,
                seed,
                wall_time: t0.elapsed().as_secs_f64(),
                failure: None,
            };
        }
        obs = r.observation;
    }
}

pub fn run_episodes<E: Environment + ?Sized>(
    env: &mut E,
    policy: &mut dyn Policy,
    seeds: &[u64],
) -> Vec<EpisodeRecord> {
    seeds.iter().map(|&s| run_episode(env, policy, s)).collect()
}

/// Splits `seeds` over `threads` workers, each with its own env and policy
/// from `make`. Records come back in seed order.
pub fn run_parallel<E, P, F>(make: F, seeds: &[u64], threads: usize) -> Vec<EpisodeRecord>
where
    E: Environment,
    P: Policy,
    F: Fn() -> (E, P) + Sync,
{
    let threads = threads.clamp(1, seeds.len().max(1));
    let chunk = seeds.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                let make = &make;
                s.spawn(move || {
                    let (mut env, mut policy) = make();
                    run_episodes(&mut env, &mut policy, part)
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("episode worker panicked")).collect()
    })
}

/// Worker count for [`run_parallel`].
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

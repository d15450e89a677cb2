//! Request-rate measurement.

use std::time::{Duration, Instant};

use crate::client::{Client, ClientError};

#[derive(Debug, Clone, PartialEq)]
pub struct FpsReport {
    pub n: usize,
    pub elapsed: Duration,
    pub fps: f64,
    pub p50: Duration,
    pub p95: Duration,
    pub p99: Duration,
}

pub fn fps(n: usize, elapsed: Duration) -> f64 {
    n as f64 / elapsed.as_secs_f64()
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[Duration], q: f64) -> Duration {
    if sorted.is_empty() {
        return Duration::ZERO;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn report(mut latencies: Vec<Duration>, elapsed: Duration) -> FpsReport {
    latencies.sort();
    FpsReport {
        n: latencies.len(),
        elapsed,
        fps: fps(latencies.len(), elapsed),
        p50: percentile(&latencies, 0.50),
        p95: percentile(&latencies, 0.95),
        p99: percentile(&latencies, 0.99),
    }
}

/// Runs `iteration` `n` times; each call is one measured unit (a "frame").
pub fn fps_benchmark<F>(client: &mut Client, n: usize, mut iteration: F) -> Result<FpsReport, ClientError>
where
    F: FnMut(&mut Client) -> Result<(), ClientError>,
{
    assert!(n >= 1, "n must be positive");
    let mut lat = Vec::with_capacity(n);
    let start = Instant::now();
    for _ in 0..n {
        let t = Instant::now();
        iteration(client)?;
        lat.push(t.elapsed());
    }
    Ok(report(lat, start.elapsed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(fps(1000, Duration::from_secs_f64(12.5)), 80.0);
        let r = report(vec![Duration::from_millis(2)], Duration::from_millis(4));
        assert_eq!(r.fps, 250.0);
        let lat: Vec<Duration> = (1..=100).map(Duration::from_millis).collect();
        let r = report(lat, Duration::from_secs(1));
        assert_eq!(
            (r.p50, r.p95, r.p99),
            (Duration::from_millis(50), Duration::from_millis(95), Duration::from_millis(99))
        );
    }
}

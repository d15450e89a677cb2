use std::net::TcpListener;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use zoosim_bench::{BaseEndpoint, LaunchConfig, Launcher, Registry};
use zoosim_protocol::{Client, Endpoint};

const BIN: &str = env!("CARGO_BIN_EXE_zoosim");
const SCENE: &str = "generator:flat:0:16x16";

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn tcp_config(k: usize, port: u16, registry: &Path) -> LaunchConfig {
    let mut c = LaunchConfig::new(BIN, k, BaseEndpoint::Tcp { host: "127.0.0.1".into(), port }, SCENE, registry);
    c.extra_args = vec!["--resolution".into(), "16x12".into()];
    c
}

fn answers(ep: &Endpoint) -> bool {
    Client::connect_with_timeout(ep, Duration::from_secs(2)).and_then(|mut c| c.text("vget /env/name")).is_ok()
}

#[test]
fn four_workers_are_reachable_and_registered() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("workers.json");
    let l = Launcher::launch(tcp_config(4, free_port(), &reg)).unwrap();
    let on_disk = Registry::load(&reg).unwrap();
    assert_eq!(&on_disk, l.registry());
    assert_eq!(on_disk.workers.len(), 4);
    let seeds: Vec<u64> = on_disk.workers.iter().map(|w| w.seed).collect();
    assert_eq!(seeds, vec![0, 1, 2, 3]);
    for ep in l.endpoints() {
        assert!(answers(&ep), "{ep} silent");
    }
    let eps = l.endpoints();
    let final_reg = l.shutdown().unwrap();
    assert!(final_reg.workers.iter().all(|w| !w.alive));
    assert!(Registry::load(&reg).unwrap().workers.iter().all(|w| !w.alive));
    std::thread::sleep(Duration::from_millis(200));
    assert!(eps.iter().all(|ep| !answers(ep)));
}

#[test]
fn killed_worker_is_restarted_once() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("workers.json");
    let mut l = Launcher::launch(tcp_config(2, free_port(), &reg)).unwrap();
    let victim = l.registry().workers[1].pid;
    assert!(Command::new("kill").arg("-9").arg(victim.to_string()).status().unwrap().success());
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut restarted = 0;
    while restarted == 0 && Instant::now() < deadline {
        restarted += l.poll().unwrap();
        std::thread::sleep(Duration::from_millis(50));
    }
    assert_eq!(restarted, 1);
    let w = &l.registry().workers[1];
    assert_eq!((w.restarts, w.alive), (1, true));
    assert_ne!(w.pid, victim);
    assert_eq!(l.registry().workers[0].restarts, 0);
    assert_eq!(Registry::load(&reg).unwrap().workers[1].restarts, 1);
    assert!(l.endpoints().iter().all(answers));
}

#[test]
fn zero_workers_give_an_empty_registry() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("workers.json");
    let l = Launcher::launch(tcp_config(0, free_port(), &reg)).unwrap();
    assert!(l.registry().workers.is_empty());
    assert_eq!(Registry::load(&reg).unwrap(), Registry::default());
}

#[test]
fn busy_port_shifts_the_worker() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("workers.json");
    let squatter = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = squatter.local_addr().unwrap().port();
    let l = Launcher::launch(tcp_config(2, port, &reg)).unwrap();
    let w = &l.registry().workers;
    assert_eq!(w[0].shifted_from, Some(port));
    assert_ne!(w[0].endpoint, format!("127.0.0.1:{port}"));
    assert_ne!(w[0].endpoint, w[1].endpoint);
    assert!(l.endpoints().iter().all(answers));
}

#[cfg(unix)]
#[test]
fn local_socket_workers() {
    let dir = tempfile::tempdir().unwrap();
    let base = BaseEndpoint::Local { dir: dir.path().to_path_buf(), stem: "w".into() };
    let l = Launcher::launch(LaunchConfig::new(BIN, 2, base, SCENE, dir.path().join("r.json"))).unwrap();
    for (i, ep) in l.endpoints().iter().enumerate() {
        assert_eq!(*ep, Endpoint::Local(dir.path().join(format!("w-{i}.sock"))));
        assert!(answers(ep));
    }
}

#[test]
fn eval_honors_distractors_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.csv");
    let status = Command::new(BIN)
        .args(["eval", "--task", "tracking-room", "--policy", "hold", "--episodes", "2", "--distractors", "3"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let mut rd = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rd.headers().unwrap().get(1), Some("return"));
    assert_eq!(rd.records().count(), 2);
    let over = Command::new(BIN)
        .args(["eval", "--task", "tracking-flat", "--episodes", "1", "--distractors", "100000"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!over.status.success());
}

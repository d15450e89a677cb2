use std::sync::Arc;
use std::thread;

use zoosim_core::env::{TaskConfig, TaskEnv, TaskKind};
use zoosim_protocol::codec::{decode_response, encode_request, Item, Status};
use zoosim_protocol::{serve, Client, Endpoint, Host, SharedHost};

fn shared(width: u32, height: u32) -> Arc<SharedHost> {
    let mut c = TaskConfig::minimal(TaskKind::Tracking, "generator:flat:0:16x16");
    c.observation.width = width;
    c.observation.height = height;
    let mut env = TaskEnv::new(c).unwrap();
    env.reset(0).unwrap();
    Arc::new(SharedHost::new(Host::new(env)))
}

fn tcp() -> Endpoint {
    Endpoint::Tcp("127.0.0.1:0".into())
}

#[test]
fn echo_and_frame_sizes_over_tcp() {
    let server = serve(shared(320, 240), &tcp()).unwrap();
    let mut c = Client::connect(server.endpoint()).unwrap();
    assert_eq!(c.text("vget /env/name").unwrap(), "flat-0-16x16");
    match c.call("vget /camera/0/depth").unwrap() {
        Item::Frame { width, height, payload, .. } => {
            assert_eq!((width, height), (320, 240));
            assert_eq!(payload.len(), 320 * 240 * 4);
        }
        other => panic!("{other:?}"),
    }
    server.shutdown();
}

#[test]
fn batch_is_one_round_trip_and_one_acquisition() {
    let host = shared(16, 12);
    let server = serve(host.clone(), &tcp()).unwrap();
    let mut c = Client::connect(server.endpoint()).unwrap();
    let before = host.acquisitions();
    let items =
        c.batch(&["vset /agent/agent0/move 0 1", "vget /camera/0/depth", "vget /agent/agent0/relstate"]).unwrap();
    assert_eq!(items.len(), 3);
    assert_eq!(items[0].text(), Some("ok"));
    assert!(matches!(items[1], Item::Frame { .. }));
    assert!(items[2].text().unwrap().contains("distance"));
    assert_eq!(host.acquisitions() - before, 1);
    assert_eq!(c.round_trips(), 1);

    let cmds: Vec<String> = (0..20).map(|_| "vget /env/tick".to_string()).collect();
    c.batch(&cmds).unwrap();
    assert_eq!(c.round_trips(), 2);
    for cmd in &cmds {
        c.call(cmd).unwrap();
    }
    assert_eq!(c.round_trips(), 22);
}

#[test]
fn unknown_command_is_partial() {
    let server = serve(shared(16, 12), &tcp()).unwrap();
    let mut c = Client::connect(server.endpoint()).unwrap();
    let r = c.request(&["vget /env/name", "vget /nonsense", "vget /env/tick"], true).unwrap();
    assert_eq!(r.status, Status::Partial);
    assert_eq!(r.items[0].text(), Some("flat-0-16x16"));
    assert!(r.items[1].text().unwrap().starts_with("error: "));
    assert_eq!(r.items[2].text(), Some("0"));
}

#[test]
fn request_ids_increase() {
    let server = serve(shared(16, 12), &tcp()).unwrap();
    let mut c = Client::connect(server.endpoint()).unwrap();
    let a = c.request(&["vget /env/tick"], false).unwrap().id;
    let b = c.request(&["vget /env/tick"], false).unwrap().id;
    assert!(b > a);
}

#[test]
fn bad_magic_gets_error_status() {
    let server = serve(shared(16, 12), &tcp()).unwrap();
    let mut c = Client::connect(server.endpoint()).unwrap();
    let mut bytes = encode_request(1, &["vget /env/name"]);
    bytes[..4].copy_from_slice(b"XXXX");
    let resp = decode_response(&c.round_trip_raw(&bytes).unwrap()).unwrap();
    assert_eq!(resp.status, Status::Error);
}

#[test]
fn tcp_and_local_socket_agree() {
    let dir = tempfile::tempdir().unwrap();
    let tcp_server = serve(shared(24, 16), &tcp()).unwrap();
    let ipc_server = serve(shared(24, 16), &Endpoint::Local(dir.path().join("z.sock"))).unwrap();
    let mut a = Client::connect(tcp_server.endpoint()).unwrap();
    let mut b = Client::connect(ipc_server.endpoint()).unwrap();
    let script = [
        vec!["vget /env/name"],
        vec!["vset /agent/agent0/move 10 0.5", "vset /env/tick 5", "vget /agent/agent0/pose"],
        vec!["vget /camera/0/mask", "vget /camera/0/normal"],
        vec!["vset /env/action 3 0.2"],
        vec!["vget /bogus", "vget /env/tick"],
    ];
    for (k, cmds) in script.iter().enumerate() {
        let req = encode_request(k as u32 + 1, cmds);
        assert_eq!(a.round_trip_raw(&req).unwrap(), b.round_trip_raw(&req).unwrap(), "request {k}");
    }
}

#[test]
fn concurrent_setters_serialize() {
    for trial in 0..10 {
        let host = shared(16, 12);
        let server = serve(host.clone(), &tcp()).unwrap();
        let ep = server.endpoint().clone();
        let handles: Vec<_> = [(3.5, 60.0), (12.5, -30.0)]
            .into_iter()
            .map(|(x, yaw)| {
                let ep = ep.clone();
                thread::spawn(move || {
                    let mut c = Client::connect(&ep).unwrap();
                    c.batch(&[format!("vset /agent/agent0/pose {x} 8.5 {yaw}"), "vget /agent/agent0/pose".to_string()])
                        .unwrap()
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        // each batch observed its own write
        assert_eq!(results[0][1].text().unwrap(), "3.5 8.5 0 60", "trial {trial}");
        assert_eq!(results[1][1].text().unwrap(), "12.5 8.5 0 -30", "trial {trial}");
        let mut c = Client::connect(&ep).unwrap();
        let fin = c.text("vget /agent/agent0/pose").unwrap();
        assert!(fin == "3.5 8.5 0 60" || fin == "12.5 8.5 0 -30", "{fin}");
    }
}

#[test]
fn occupied_local_endpoint_is_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let ep = Endpoint::Local(dir.path().join("busy.sock"));
    let _first = serve(shared(16, 12), &ep).unwrap();
    assert!(serve(shared(16, 12), &ep).is_err());
}

//! The same session over the in-process and TCP transports.

mod common;

use std::net::TcpListener;
use std::sync::Arc;
use std::thread;

use cdb_core::comm::{serve, TcpTransport};
use cdb_core::debugger::Session;
use cdb_core::nub::{MemorySource, Nub};
use cdb_core::vm::{Machine, SharedBuf, TargetNub};
use common::*;

const SCRIPT: [&str; 20] = [
    "spoints lookup.c",
    "print words",
    "break wf.c:17",
    "break wf.c:20",
    "break lookup.c:8.12",
    "run",
    "print c",
    "bt",
    "frame 1",
    "print buf",
    "print nosuch",
    "clear wf.c:20",
    "continue",
    "bt",
    "frame 2",
    "print argv",
    "print words",
    "clear lookup.c:8.12",
    "continue",
    "continue",
];

#[test]
fn in_process_and_tcp_agree() {
    let linked = wf();
    let (mut local, local_out) = session(&linked, WF_INPUT);
    let local_json: Vec<_> = SCRIPT.iter().flat_map(|c| local.execute(c)).map(|r| r.to_json()).collect();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let image = Arc::new(linked.image.clone());
    let remote_out = SharedBuf::default();
    let target_image = Arc::clone(&image);
    let target_out = remote_out.clone();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let machine = Machine::new(target_image, &["prog".into()], Box::new(WF_INPUT), Box::new(target_out));
        serve(stream, &mut TargetNub::new(machine)).unwrap();
    });
    let transport = TcpTransport::connect(addr).unwrap();
    let nub = Nub::new(transport, &image, Box::new(MemorySource(linked.symfiles.clone())));
    let mut remote = Session::start(nub).unwrap();
    let remote_json: Vec<_> = SCRIPT.iter().flat_map(|c| remote.execute(c)).map(|r| r.to_json()).collect();
    drop(remote);
    server.join().unwrap();

    assert_eq!(local_json.len(), SCRIPT.len());
    assert_eq!(local_json, remote_json);
    assert_eq!(local_json[18]["kind"], "exited");
    assert_eq!(local_json[19]["kind"], "error");
    assert_eq!(local_out.contents(), remote_out.contents());
}

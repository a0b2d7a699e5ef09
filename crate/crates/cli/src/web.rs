//! `cdb --serve`: a websocket carrying the `--json` objects, and static
//! assets from the same port.
//!
//! A websocket client sends one command line per text message and receives
//! one text message per JSON object, starting with the `loaded` banner.
//! Every connection gets its own session.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use cdb_core::debugger::Reply;
use cdb_core::vm::SharedBuf;
use tungstenite::Message;

use crate::repl::output_json;
use crate::AnySession;

pub type SessionFactory = Arc<dyn Fn() -> Result<(AnySession, Option<SharedBuf>), String> + Send + Sync>;

const INDEX_HTML: &str = include_str!("index.html");
const MAX_HEADER: usize = 16 * 1024;

struct Request {
    path: String,
    upgrade: bool,
    header_len: usize,
}

/// Peek at the request head without consuming it, so a websocket upgrade
/// can be handed to the handshake untouched.
fn peek_request(stream: &TcpStream) -> io::Result<Option<Request>> {
    let mut buf = vec![0u8; MAX_HEADER];
    for _ in 0..500 {
        let n = stream.peek(&mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        if let Some(end) = buf[..n].windows(4).position(|w| w == b"\r\n\r\n") {
            let head = String::from_utf8_lossy(&buf[..end]);
            let mut lines = head.lines();
            let mut parts = lines.next().unwrap_or("").split_whitespace();
            let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
            if method != "GET" {
                return Ok(None);
            }
            let upgrade = lines.any(|l| {
                let l = l.to_ascii_lowercase();
                l.starts_with("upgrade:") && l.contains("websocket")
            });
            return Ok(Some(Request { path: path.to_string(), upgrade, header_len: end + 4 }));
        }
        if n == buf.len() {
            return Ok(None);
        }
        thread::sleep(Duration::from_millis(2));
    }
    Ok(None)
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") | Some("map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// The file under `root` that `url` names, refusing anything that would
/// leave it.
fn asset_path(root: &Path, url: &str) -> Option<PathBuf> {
    let rel = url.split(['?', '#']).next()?.trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

fn respond(stream: &mut TcpStream, status: &str, ctype: &str, body: &[u8]) -> io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    stream.write_all(body)?;
    stream.flush()
}

fn serve_static(mut stream: TcpStream, req: &Request, assets: Option<&Path>) -> io::Result<()> {
    let mut head = vec![0u8; req.header_len];
    stream.read_exact(&mut head)?;
    let file = match assets {
        Some(root) => asset_path(root, &req.path).and_then(|p| std::fs::read(&p).ok().map(|b| (p, b))),
        None if matches!(req.path.as_str(), "/" | "/index.html") => {
            Some((PathBuf::from("index.html"), INDEX_HTML.as_bytes().to_vec()))
        }
        None => None,
    };
    match file {
        Some((p, body)) => respond(&mut stream, "200 OK", content_type(&p), &body),
        None => respond(&mut stream, "404 Not Found", "text/plain", b"not found\n"),
    }
}

#[allow(clippy::result_large_err)]
fn send(ws: &mut tungstenite::WebSocket<TcpStream>, v: serde_json::Value) -> tungstenite::Result<()> {
    ws.send(Message::Text(v.to_string()))
}

#[allow(clippy::result_large_err)]
fn serve_socket(stream: TcpStream, factory: &SessionFactory) -> tungstenite::Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    let (mut session, target) = match factory() {
        Ok(s) => s,
        Err(e) => {
            send(&mut ws, Reply::Error(e).to_json())?;
            return ws.close(None);
        }
    };
    send(&mut ws, session.banner().to_json())?;
    loop {
        let line = match ws.read()? {
            Message::Text(t) => t,
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        let replies = session.execute(&line);
        if let Some(out) = &target {
            let bytes = out.take();
            if !bytes.is_empty() {
                send(&mut ws, output_json(&bytes))?;
            }
        }
        for r in &replies {
            send(&mut ws, r.to_json())?;
        }
        if replies.contains(&Reply::Quit) {
            return ws.close(None);
        }
    }
}

fn handle(stream: TcpStream, factory: &SessionFactory, assets: Option<&Path>) {
    let Ok(Some(req)) = peek_request(&stream) else { return };
    if req.upgrade {
        let _ = serve_socket(stream, factory);
    } else {
        let _ = serve_static(stream, &req, assets);
    }
}

/// Accept connections forever, each on its own thread.
pub fn serve(listener: TcpListener, factory: SessionFactory, assets: Option<PathBuf>) -> io::Result<()> {
    let assets = assets.map(Arc::new);
    for stream in listener.incoming() {
        let stream = stream?;
        let factory = Arc::clone(&factory);
        let assets = assets.clone();
        thread::spawn(move || handle(stream, &factory, assets.as_deref().map(PathBuf::as_path)));
    }
    Ok(())
}

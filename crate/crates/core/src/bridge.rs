//! Live cockpit gateway: JSON snapshots out, driver input in, over a
//! WebSocket at `/drive`.
//!
//! The loop thread never blocks on the bridge. Input lands in a single-slot
//! [`Mailbox`] that the loop drains once per tick; snapshots are published
//! as finished JSON strings on a [`SnapshotBoard`] that connection threads
//! poll.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize, Serializer};
use tungstenite::{Message, WebSocket};

use crate::analysis::NearestObjects;
use crate::monitor::PhoneEventKind;
use crate::platform::SafetyState;
use crate::telemetry::{InputSource, SafetyPatch, TickInput};
use crate::vehicle::DriverInput;
use crate::world::LaneIndex;

pub const DEFAULT_WS_PORT: u16 = 47010;
pub const WS_PATH: &str = "/drive";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafetyFlags {
    pub gate_closed: bool,
    pub seatbelt_on: bool,
    pub estop_local: bool,
    pub estop_remote: bool,
    pub motion_enabled: bool,
}

impl From<SafetyState> for SafetyFlags {
    fn from(s: SafetyState) -> Self {
        Self {
            gate_closed: s.gate_closed,
            seatbelt_on: s.seatbelt_on,
            estop_local: s.estop_local,
            estop_remote: s.estop_remote,
            motion_enabled: s.motion_permitted(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Attitude {
    pub pitch: f32,
    pub roll: f32,
    pub yaw: f32,
    pub heave: f32,
}

impl From<[f32; 4]> for Attitude {
    fn from([pitch, roll, yaw, heave]: [f32; 4]) -> Self {
        Self {
            pitch,
            roll,
            yaw,
            heave,
        }
    }
}

fn lane_json<S: Serializer>(lane: &LaneIndex, s: S) -> Result<S::Ok, S::Error> {
    match lane {
        LaneIndex::Lane(k) => s.serialize_u32(*k),
        LaneIndex::OffRoad => s.serialize_str("OFF_ROAD"),
    }
}

/// Operator-facing copy of the loop state at one tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t_us: u64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub attitude: Attitude,
    pub safety: SafetyFlags,
    pub shake_active: bool,
    pub nearest: NearestObjects,
    #[serde(serialize_with = "lane_json")]
    pub lane_index: LaneIndex,
    /// Q1..Q4 at the latest touch sample.
    pub touch: [bool; 4],
    pub last_phone_event: Option<PhoneEventKind>,
    /// Prompt text while a ring is waiting for pickup.
    pub question: Option<String>,
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

impl Snapshot {
    /// `{"type":"snapshot", ...}`
    pub fn to_frame(&self) -> String {
        serde_json::to_string(&Tagged {
            kind: "snapshot",
            body: self,
        })
        .expect("snapshot serializes")
    }
}

pub fn error_frame(reason: &str) -> String {
    serde_json::json!({"type": "error", "reason": reason}).to_string()
}

/// A driver input frame. Omitted axes keep their previous value, omitted
/// toggles leave the interlock alone.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputMessage {
    pub steering: Option<f64>,
    pub throttle: Option<f64>,
    pub brake: Option<f64>,
    pub gate_closed: Option<bool>,
    pub seatbelt_on: Option<bool>,
    pub estop_local: Option<bool>,
    pub estop_remote: Option<bool>,
    /// Phone responses: pickup, touchscreen, putdown.
    #[serde(default)]
    pub phone: Vec<PhoneEventKind>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ClientFrame {
    Input(InputMessage),
}

impl InputMessage {
    /// Parses and checks a text frame from the cockpit.
    pub fn parse(text: &str) -> Result<Self, String> {
        let ClientFrame::Input(msg) = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if msg.phone.contains(&PhoneEventKind::Ring) {
            return Err("`ring` is not a driver response".into());
        }
        Ok(msg)
    }

    pub fn safety(&self) -> SafetyPatch {
        SafetyPatch {
            gate_closed: self.gate_closed,
            seatbelt_on: self.seatbelt_on,
            estop_local: self.estop_local,
            estop_remote: self.estop_remote,
        }
    }

    /// Applies the axes to a held input; the result is clamped.
    pub fn apply_to(&self, held: DriverInput) -> DriverInput {
        DriverInput::new(
            self.steering.unwrap_or(held.steering),
            self.throttle.unwrap_or(held.throttle),
            self.brake.unwrap_or(held.brake),
        )
        .clamped()
    }
}

/// Everything received since the loop last looked.
#[derive(Debug, Clone, Default, PartialEq)]
struct Pending {
    steering: Option<f64>,
    throttle: Option<f64>,
    brake: Option<f64>,
    safety: SafetyPatch,
    phone: Vec<PhoneEventKind>,
}

/// Single-slot input mailbox. Axes are last-writer-wins, toggles merge
/// field by field and phone responses accumulate so none are lost.
#[derive(Debug, Clone, Default)]
pub struct Mailbox(Arc<Mutex<Option<Pending>>>);

impl Mailbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn post(&self, msg: &InputMessage) {
        let mut slot = self.0.lock().unwrap_or_else(|p| p.into_inner());
        let p = slot.get_or_insert_with(Pending::default);
        p.steering = msg.steering.or(p.steering);
        p.throttle = msg.throttle.or(p.throttle);
        p.brake = msg.brake.or(p.brake);
        p.safety.merge(&msg.safety());
        p.phone.extend_from_slice(&msg.phone);
    }

    fn take(&self) -> Option<Pending> {
        self.0.lock().unwrap_or_else(|p| p.into_inner()).take()
    }
}

/// Input source fed by the cockpit. Holds the last input when no message
/// arrived and never runs dry.
#[derive(Debug, Clone, Default)]
pub struct LiveInput {
    mailbox: Mailbox,
    held: DriverInput,
}

impl LiveInput {
    pub fn new(mailbox: Mailbox) -> Self {
        Self {
            mailbox,
            held: DriverInput::default(),
        }
    }

    pub fn held(&self) -> DriverInput {
        self.held
    }
}

impl InputSource for LiveInput {
    fn next_input(&mut self, _tick: u64) -> Option<TickInput> {
        let Some(p) = self.mailbox.take() else {
            return Some(self.held.into());
        };
        self.held = DriverInput::new(
            p.steering.unwrap_or(self.held.steering),
            p.throttle.unwrap_or(self.held.throttle),
            p.brake.unwrap_or(self.held.brake),
        )
        .clamped();
        Some(TickInput {
            driver: self.held,
            safety: p.safety,
            phone: p.phone,
        })
    }
}

/// Latest snapshot frame, shared between the loop and connection threads.
#[derive(Debug, Clone, Default)]
pub struct SnapshotBoard(Arc<Mutex<(u64, Option<Arc<str>>)>>);

impl SnapshotBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&self, snap: &Snapshot) {
        let frame: Arc<str> = snap.to_frame().into();
        let mut g = self.0.lock().unwrap_or_else(|p| p.into_inner());
        g.0 += 1;
        g.1 = Some(frame);
    }

    /// Publication counter and frame.
    pub fn latest(&self) -> (u64, Option<Arc<str>>) {
        self.0.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

// ---- server ----------------------------------------------------------------

const POLL: Duration = Duration::from_millis(5);

/// Running WebSocket server. Dropping the handle stops the acceptor.
pub struct BridgeServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl BridgeServer {
    /// Listens on `addr`; when `ui_dir` is set, plain HTTP GETs on other
    /// paths are answered from that directory.
    pub fn start(
        addr: SocketAddr,
        mailbox: Mailbox,
        board: SnapshotBoard,
        ui_dir: Option<PathBuf>,
    ) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let acceptor = thread::Builder::new()
            .name("bridge-accept".into())
            .spawn(move || {
                while !flag.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, peer)) => {
                            let (mb, bd, ui, fl) =
                                (mailbox.clone(), board.clone(), ui_dir.clone(), flag.clone());
                            let _ = thread::Builder::new().name(format!("bridge-{peer}")).spawn(
                                move || {
                                    if let Err(e) =
                                        serve_connection(stream, mb, bd, ui.as_deref(), fl)
                                    {
                                        log::debug!("connection {peer} closed: {e}");
                                    }
                                },
                            );
                        }
                        Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
                        Err(e) => {
                            log::warn!("accept failed: {e}");
                            thread::sleep(POLL);
                        }
                    }
                }
            })?;
        log::info!("cockpit bridge listening on ws://{addr}{WS_PATH}");
        Ok(Self {
            addr,
            stop,
            acceptor: Some(acceptor),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for BridgeServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Request line path of an HTTP request head, if complete.
fn peek_path(stream: &TcpStream) -> io::Result<String> {
    let mut buf = [0u8; 2048];
    for _ in 0..400 {
        let n = stream.peek(&mut buf)?;
        if n == 0 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        let head = &buf[..n];
        if let Some(end) = head.windows(2).position(|w| w == b"\r\n") {
            let line = String::from_utf8_lossy(&head[..end]);
            let mut parts = line.split_whitespace();
            return match (parts.next(), parts.next()) {
                (Some(_method), Some(path)) => Ok(path.to_string()),
                _ => Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    "bad request line",
                )),
            };
        }
        thread::sleep(POLL);
    }
    Err(io::ErrorKind::TimedOut.into())
}

fn serve_connection(
    stream: TcpStream,
    mailbox: Mailbox,
    board: SnapshotBoard,
    ui_dir: Option<&Path>,
    stop: Arc<AtomicBool>,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let path = peek_path(&stream)?;
    let route = path.split('?').next().unwrap_or("");
    if route != WS_PATH {
        return serve_static(stream, route, ui_dir);
    }
    let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    drive_socket(ws, &mailbox, &board, &stop)
}

fn drive_socket(
    mut ws: WebSocket<TcpStream>,
    mailbox: &Mailbox,
    board: &SnapshotBoard,
    stop: &AtomicBool,
) -> io::Result<()> {
    let mut seen = board.latest().0;
    while !stop.load(Ordering::Relaxed) {
        match ws.read() {
            Ok(Message::Text(text)) => match InputMessage::parse(text.as_str()) {
                Ok(msg) => mailbox.post(&msg),
                Err(reason) => ws
                    .send(Message::text(error_frame(&reason)))
                    .map_err(io::Error::other)?,
            },
            Ok(Message::Binary(_)) => ws
                .send(Message::text(error_frame("binary frames are not accepted")))
                .map_err(io::Error::other)?,
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                return Ok(())
            }
            Err(e) => return Err(io::Error::other(e)),
        }
        let (n, frame) = board.latest();
        if n != seen {
            seen = n;
            if let Some(f) = frame {
                ws.send(Message::text(f.to_string()))
                    .map_err(io::Error::other)?;
            }
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

/// Maps a URL path to a file under `root`, refusing anything that climbs out.
fn resolve(root: &Path, route: &str) -> Option<PathBuf> {
    let rel = route.trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

fn serve_static(mut stream: TcpStream, route: &str, ui_dir: Option<&Path>) -> io::Result<()> {
    // consume the request head
    let mut buf = [0u8; 4096];
    let _ = stream.read(&mut buf)?;
    let file = ui_dir
        .and_then(|d| resolve(d, route))
        .filter(|p| p.is_file());
    match file {
        Some(p) => {
            let body = std::fs::read(&p)?;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                content_type(&p),
                body.len()
            )?;
            stream.write_all(&body)?;
        }
        None => {
            let body = b"not found\n";
            write!(
                stream,
                "HTTP/1.1 404 Not Found\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            )?;
            stream.write_all(body)?;
        }
    }
    stream.flush()
}

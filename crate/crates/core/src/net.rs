//! UDP emission of platform commands, touch samples and phone events, and a
//! listener that feeds a [`PlatformEndpoint`].

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::platform::{IngestOutcome, PlatformEndpoint, PACKET_LEN};

pub const DEFAULT_PLATFORM_PORT: u16 = 47001;
pub const DEFAULT_TOUCH_PORT: u16 = 47002;
pub const DEFAULT_PHONE_PORT: u16 = 47003;

fn resolve(addr: &str) -> io::Result<SocketAddr> {
    addr.to_socket_addrs()?.next().ok_or_else(|| {
        io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("no address for {addr}"),
        )
    })
}

/// Destinations for the three outgoing datagram streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinkAddrs {
    pub platform: SocketAddr,
    pub touch: SocketAddr,
    pub phone: SocketAddr,
}

impl Default for SinkAddrs {
    fn default() -> Self {
        let local = |port| SocketAddr::from(([127, 0, 0, 1], port));
        Self {
            platform: local(DEFAULT_PLATFORM_PORT),
            touch: local(DEFAULT_TOUCH_PORT),
            phone: local(DEFAULT_PHONE_PORT),
        }
    }
}

impl SinkAddrs {
    pub fn parse(platform: &str, touch: &str, phone: &str) -> io::Result<Self> {
        Ok(Self {
            platform: resolve(platform)?,
            touch: resolve(touch)?,
            phone: resolve(phone)?,
        })
    }
}

/// Fire-and-forget sender. Failures are counted, never fatal: the loop must
/// keep its rate whether or not anyone listens.
#[derive(Debug)]
pub struct UdpSinks {
    socket: UdpSocket,
    addrs: SinkAddrs,
    send_errors: u64,
}

impl UdpSinks {
    pub fn new(addrs: SinkAddrs) -> io::Result<Self> {
        let bind: SocketAddr = if addrs.platform.is_ipv6() {
            "[::]:0".parse().unwrap()
        } else {
            "0.0.0.0:0".parse().unwrap()
        };
        let socket = UdpSocket::bind(bind)?;
        socket.set_nonblocking(true)?;
        Ok(Self {
            socket,
            addrs,
            send_errors: 0,
        })
    }

    fn send(&mut self, bytes: &[u8], to: SocketAddr) {
        if let Err(e) = self.socket.send_to(bytes, to) {
            if self.send_errors == 0 {
                log::warn!("udp send to {to} failed: {e}");
            }
            self.send_errors += 1;
        }
    }

    pub fn send_platform(&mut self, bytes: &[u8]) {
        self.send(bytes, self.addrs.platform);
    }

    pub fn send_touch(&mut self, bytes: &[u8]) {
        self.send(bytes, self.addrs.touch);
    }

    pub fn send_phone(&mut self, bytes: &[u8]) {
        self.send(bytes, self.addrs.phone);
    }

    pub fn send_errors(&self) -> u64 {
        self.send_errors
    }
}

/// Background thread receiving command datagrams into a shared endpoint.
pub struct PlatformListener {
    addr: SocketAddr,
    endpoint: Arc<Mutex<PlatformEndpoint>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl PlatformListener {
    pub fn bind(addr: &str) -> io::Result<Self> {
        let socket = UdpSocket::bind(resolve(addr)?)?;
        socket.set_read_timeout(Some(Duration::from_millis(20)))?;
        let addr = socket.local_addr()?;
        let endpoint = Arc::new(Mutex::new(PlatformEndpoint::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let (ep, flag) = (endpoint.clone(), stop.clone());
        let thread = thread::Builder::new()
            .name("platform-endpoint".into())
            .spawn(move || {
                // one byte extra so oversize datagrams show up as bad length
                let mut buf = [0u8; PACKET_LEN + 1];
                while !flag.load(Ordering::Relaxed) {
                    match socket.recv_from(&mut buf) {
                        Ok((n, peer)) => {
                            let outcome = ep
                                .lock()
                                .unwrap_or_else(|p| p.into_inner())
                                .ingest(&buf[..n]);
                            if let IngestOutcome::Rejected(e) = outcome {
                                log::debug!("rejected datagram from {peer}: {e}");
                            }
                        }
                        Err(e)
                            if matches!(
                                e.kind(),
                                io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                            ) => {}
                        Err(e) => log::warn!("recv failed: {e}"),
                    }
                }
            })?;
        Ok(Self {
            addr,
            endpoint,
            stop,
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Copy of the endpoint state.
    pub fn endpoint(&self) -> PlatformEndpoint {
        self.endpoint
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }

    pub fn stop(mut self) -> PlatformEndpoint {
        self.halt();
        self.endpoint()
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for PlatformListener {
    fn drop(&mut self) {
        self.halt();
    }
}

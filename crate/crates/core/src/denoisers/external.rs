use std::io::{self, BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use super::noise::sample_correlated_noise;
use super::protocol::{decode_response, read_frame, write_frame, DenoiseRequest, MAX_FRAME_BYTES};
use super::{Denoiser, DenoiserResult, PrecisionVector};
use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::transforms::haar::{forward_in_place, inverse_in_place};
use crate::transforms::{ComplexImage, SubbandLayout, WaveletPyramid};

/// Where an external denoiser lives: `HOST:PORT` or `stdio:COMMAND`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenoiserEndpoint {
    Tcp(String),
    Stdio(String),
}

impl FromStr for DenoiserEndpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(cmd) = s.strip_prefix("stdio:") {
            if cmd.trim().is_empty() {
                return Err(Error::Config("stdio endpoint needs a command".into()));
            }
            return Ok(DenoiserEndpoint::Stdio(cmd.to_string()));
        }
        match s.rsplit_once(':') {
            Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => {
                Ok(DenoiserEndpoint::Tcp(s.to_string()))
            }
            _ => Err(Error::Config(format!("endpoint '{s}' is neither HOST:PORT nor stdio:COMMAND"))),
        }
    }
}

enum Connection {
    Tcp { reader: BufReader<TcpStream>, writer: BufWriter<TcpStream> },
    Stdio { child: Child, stdin: BufWriter<ChildStdin>, frames: Receiver<io::Result<Option<Vec<u8>>>> },
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Connection::Stdio { child, .. } = self {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn map_io(e: io::Error, timeout: Duration) -> Error {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout(timeout.as_millis() as u64),
        io::ErrorKind::UnexpectedEof => Error::Protocol("connection closed mid-frame".into()),
        _ => Error::Protocol(format!("transport: {e}")),
    }
}

impl Connection {
    fn open(endpoint: &DenoiserEndpoint, timeout: Duration) -> Result<Self> {
        match endpoint {
            DenoiserEndpoint::Tcp(addr) => {
                let sock = addr
                    .to_socket_addrs()
                    .map_err(|e| Error::Protocol(format!("cannot resolve {addr}: {e}")))?
                    .next()
                    .ok_or_else(|| Error::Protocol(format!("no address for {addr}")))?;
                let stream = TcpStream::connect_timeout(&sock, timeout)
                    .map_err(|e| Error::Protocol(format!("cannot connect to {addr}: {e}")))?;
                stream.set_read_timeout(Some(timeout))?;
                stream.set_write_timeout(Some(timeout))?;
                stream.set_nodelay(true)?;
                Ok(Connection::Tcp { reader: BufReader::new(stream.try_clone()?), writer: BufWriter::new(stream) })
            }
            DenoiserEndpoint::Stdio(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::Protocol(format!("cannot start '{cmd}': {e}")))?;
                let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
                let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
                // pipes have no read timeout; a reader thread hands frames over
                let (tx, rx) = mpsc::channel();
                std::thread::spawn(move || loop {
                    let frame = read_frame(&mut stdout);
                    let done = !matches!(frame, Ok(Some(_)));
                    if tx.send(frame).is_err() || done {
                        break;
                    }
                });
                Ok(Connection::Stdio { child, stdin, frames: rx })
            }
        }
    }

    fn round_trip(&mut self, payload: &[u8], timeout: Duration) -> Result<Vec<u8>> {
        let frame = match self {
            Connection::Tcp { reader, writer } => {
                write_frame(writer, payload).map_err(|e| map_io(e, timeout))?;
                read_frame(reader).map_err(|e| map_io(e, timeout))?
            }
            Connection::Stdio { stdin, frames, .. } => {
                write_frame(stdin, payload).map_err(|e| map_io(e, timeout))?;
                match frames.recv_timeout(timeout) {
                    Ok(f) => f.map_err(|e| map_io(e, timeout))?,
                    Err(RecvTimeoutError::Timeout) => return Err(Error::Timeout(timeout.as_millis() as u64)),
                    Err(RecvTimeoutError::Disconnected) => None,
                }
            }
        };
        let frame = frame.ok_or_else(|| Error::Protocol("denoiser closed the connection".into()))?;
        if frame.len() > MAX_FRAME_BYTES {
            return Err(Error::Protocol("oversized response".into()));
        }
        Ok(frame)
    }
}

/// A bare frame-level connection, for conformance testing of endpoints.
pub struct RawClient {
    conn: Connection,
    timeout: Duration,
}

impl RawClient {
    pub fn connect(endpoint: &DenoiserEndpoint, timeout: Duration) -> Result<Self> {
        Ok(RawClient { conn: Connection::open(endpoint, timeout)?, timeout })
    }

    /// Sends one payload and waits for the reply payload.
    pub fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>> {
        self.conn.round_trip(payload, self.timeout)
    }
}

/// Client for a remote corr+corr denoiser.
///
/// Each call sends `u = Psi^T r` plus `K` fresh realizations of the
/// correlated noise `Psi^T Diag(gamma)^-1/2 n`; requests on one client are
/// serialized over a single connection, reopened after transport failures.
pub struct ExternalDenoiser {
    endpoint: DenoiserEndpoint,
    layout: SubbandLayout,
    channels: usize,
    timeout: Duration,
    conn: Mutex<Option<Connection>>,
}

impl ExternalDenoiser {
    pub fn new(endpoint: DenoiserEndpoint, layout: SubbandLayout, channels: usize, timeout: Duration) -> Result<Self> {
        if channels == 0 || channels > 255 {
            return Err(Error::Config(format!("noise channel count must be in 1..=255, got {channels}")));
        }
        Ok(ExternalDenoiser { endpoint, layout, channels, timeout, conn: Mutex::new(None) })
    }

    pub fn endpoint(&self) -> &DenoiserEndpoint {
        &self.endpoint
    }

    /// Builds the request for `u` at precisions `gamma`; noise channel `k` is
    /// drawn from `seed.indexed("channel", k)`.
    pub fn build_request(&self, u: &ComplexImage, gamma: &PrecisionVector, seed: SeedTree) -> Result<DenoiseRequest> {
        if u.shape() != self.layout.shape() {
            return Err(Error::ShapeMismatch(format!(
                "image {:?} does not match layout {:?}",
                u.shape(),
                self.layout.shape()
            )));
        }
        let mut images = Vec::with_capacity(1 + self.channels);
        images.push(u.data().to_vec());
        for k in 0..self.channels {
            let n = sample_correlated_noise(&self.layout, gamma, seed.indexed("channel", k as u64))?;
            images.push(n.into_data());
        }
        Ok(DenoiseRequest { height: u.height(), width: u.width(), gammas: gamma.gammas().to_vec(), images })
    }

    /// Pixel-domain call: returns the denoised image.
    pub fn external_denoise(&self, u: &ComplexImage, gamma: &PrecisionVector, seed: SeedTree) -> Result<ComplexImage> {
        let payload = self.build_request(u, gamma, seed)?.encode()?;
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Connection::open(&self.endpoint, self.timeout)?);
        }
        let result = guard.as_mut().expect("connection").round_trip(&payload, self.timeout);
        let frame = match result {
            Ok(f) => f,
            Err(e) => {
                // the stream may be out of sync; start fresh next time
                *guard = None;
                return Err(e);
            }
        };
        let data = decode_response(&frame, u.len())?;
        ComplexImage::new(u.height(), u.width(), data)
    }
}

impl Denoiser for ExternalDenoiser {
    fn name(&self) -> &str {
        "external"
    }

    fn denoise(&self, r: &WaveletPyramid, gamma: &PrecisionVector, seed: SeedTree) -> Result<DenoiserResult> {
        if r.layout() != &self.layout {
            return Err(Error::ShapeMismatch("pyramid layout differs from the endpoint's".into()));
        }
        let mut pixels = vec![num_complex::Complex64::new(0.0, 0.0); self.layout.len()];
        inverse_in_place(&self.layout, r.coeffs(), &mut pixels);
        let u = ComplexImage::new(self.layout.height(), self.layout.width(), pixels)?;
        let x = self.external_denoise(&u, gamma, seed)?;
        let mut coeffs = vec![num_complex::Complex64::new(0.0, 0.0); self.layout.len()];
        forward_in_place(&self.layout, x.data(), &mut coeffs);
        Ok(DenoiserResult { estimate: r.with_coeffs(coeffs)?, subband_divergence: None })
    }
}

impl std::fmt::Debug for ExternalDenoiser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalDenoiser")
            .field("endpoint", &self.endpoint)
            .field("channels", &self.channels)
            .field("timeout", &self.timeout)
            .finish()
    }
}

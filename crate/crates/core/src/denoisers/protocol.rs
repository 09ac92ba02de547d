//! DNZ1 denoiser wire protocol.
//!
//! Every message travels as a frame: a u32 little-endian byte count followed
//! by that many payload bytes. Payloads:
//!
//! ```text
//! request : "DNZ1" | op u8 (0x01) | H u32 | W u32 | K u8 | L u16
//!           | L x f64 gamma | (1+K) x H*W x (f32 re, f32 im)      u first
//! response: "DNZ1" | status u8 (0 ok, 1 shape error, 2 internal)
//!           | on ok: H*W x (f32 re, f32 im)
//! ```
//!
//! The length prefix lets a server skip a malformed payload and keep the
//! connection open.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::thread::JoinHandle;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::io::{parse_f32_pairs, push_f32_pairs};

pub const MAGIC: &[u8; 4] = b"DNZ1";
pub const OP_DENOISE: u8 = 0x01;
/// Largest frame either side will accept.
pub const MAX_FRAME_BYTES: usize = 1 << 30;

const REQUEST_HEADER: usize = 4 + 1 + 4 + 4 + 1 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    ShapeError = 1,
    Internal = 2,
}

impl Status {
    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Status::Ok),
            1 => Ok(Status::ShapeError),
            2 => Ok(Status::Internal),
            c => Err(Error::Protocol(format!("unknown status code {c}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseRequest {
    pub height: usize,
    pub width: usize,
    pub gammas: Vec<f64>,
    /// `u` followed by the `K` noise channels, each `height * width` long.
    pub images: Vec<Vec<Complex64>>,
}

impl DenoiseRequest {
    pub fn num_channels(&self) -> usize {
        self.images.len().saturating_sub(1)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let n = self.height * self.width;
        let k = self.num_channels();
        if self.images.is_empty() || self.images.iter().any(|im| im.len() != n) {
            return Err(Error::ShapeMismatch(format!("request images must each hold {n} pixels")));
        }
        let k = u8::try_from(k).map_err(|_| Error::InvalidInput(format!("{k} noise channels exceed 255")))?;
        let l = u16::try_from(self.gammas.len()).map_err(|_| Error::InvalidInput("too many precisions".into()))?;
        let h = u32::try_from(self.height).map_err(|_| Error::InvalidInput("height too large".into()))?;
        let w = u32::try_from(self.width).map_err(|_| Error::InvalidInput("width too large".into()))?;
        let mut out = Vec::with_capacity(REQUEST_HEADER + 8 * self.gammas.len() + 8 * n * self.images.len());
        out.extend_from_slice(MAGIC);
        out.push(OP_DENOISE);
        out.extend_from_slice(&h.to_le_bytes());
        out.extend_from_slice(&w.to_le_bytes());
        out.push(k);
        out.extend_from_slice(&l.to_le_bytes());
        for g in &self.gammas {
            out.extend_from_slice(&g.to_le_bytes());
        }
        for im in &self.images {
            push_f32_pairs(&mut out, im);
        }
        Ok(out)
    }

    /// Parses a request payload. `max_pixels` bounds `H * W`.
    pub fn decode(buf: &[u8], max_pixels: usize) -> Result<Self> {
        if buf.len() < REQUEST_HEADER || &buf[..4] != MAGIC {
            return Err(Error::Protocol("bad magic".into()));
        }
        if buf[4] != OP_DENOISE {
            return Err(Error::Protocol(format!("unknown op {:#04x}", buf[4])));
        }
        let height = u32::from_le_bytes(buf[5..9].try_into().unwrap()) as usize;
        let width = u32::from_le_bytes(buf[9..13].try_into().unwrap()) as usize;
        let k = buf[13] as usize;
        let l = u16::from_le_bytes(buf[14..16].try_into().unwrap()) as usize;
        let n = height
            .checked_mul(width)
            .filter(|&n| n > 0 && n <= max_pixels)
            .ok_or_else(|| Error::Protocol(format!("image size {height}x{width} out of range")))?;
        if k == 0 {
            return Err(Error::Protocol("at least one noise channel is required".into()));
        }
        let expect = REQUEST_HEADER + 8 * l + 8 * n * (1 + k);
        if buf.len() != expect {
            return Err(Error::Protocol(format!("payload is {} bytes, header implies {expect}", buf.len())));
        }
        let mut pos = REQUEST_HEADER;
        let gammas =
            (0..l).map(|i| f64::from_le_bytes(buf[pos + 8 * i..pos + 8 * i + 8].try_into().unwrap())).collect();
        pos += 8 * l;
        let images = (0..=k).map(|c| parse_f32_pairs(&buf[pos + 8 * n * c..pos + 8 * n * (c + 1)])).collect();
        Ok(DenoiseRequest { height, width, gammas, images })
    }
}

pub fn encode_response(status: Status, image: Option<&[Complex64]>) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + image.map_or(0, |im| 8 * im.len()));
    out.extend_from_slice(MAGIC);
    out.push(status as u8);
    if let (Status::Ok, Some(im)) = (status, image) {
        push_f32_pairs(&mut out, im);
    }
    out
}

/// Parses a response payload for an `expected_pixels` image.
pub fn decode_response(buf: &[u8], expected_pixels: usize) -> Result<Vec<Complex64>> {
    if buf.len() < 5 || &buf[..4] != MAGIC {
        return Err(Error::Protocol("response has bad magic".into()));
    }
    match Status::from_code(buf[4])? {
        Status::ShapeError => Err(Error::RemoteShape),
        Status::Internal => Err(Error::RemoteInternal),
        Status::Ok => {
            let body = &buf[5..];
            if body.len() != 8 * expected_pixels {
                return Err(Error::Protocol(format!(
                    "response image has {} bytes, expected {}",
                    body.len(),
                    8 * expected_pixels
                )));
            }
            let img = parse_f32_pairs(body);
            if img.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Protocol("response image is not finite".into()));
            }
            Ok(img)
        }
    }
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len =
        u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated frame header")),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

/// What the loopback fixture server answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoMode {
    /// Returns `u` unchanged.
    Echo,
    /// Returns an all-zero image.
    Zeros,
}

/// Answers one request payload.
pub fn answer(payload: &[u8], mode: EchoMode, max_pixels: usize) -> Vec<u8> {
    match DenoiseRequest::decode(payload, max_pixels) {
        Err(_) => encode_response(Status::ShapeError, None),
        Ok(req) => match mode {
            EchoMode::Echo => encode_response(Status::Ok, Some(&req.images[0])),
            EchoMode::Zeros => {
                let zeros = vec![Complex64::new(0.0, 0.0); req.height * req.width];
                encode_response(Status::Ok, Some(&zeros))
            }
        },
    }
}

/// Serves frames from one stream until it closes.
pub fn serve_stream<R: Read, W: Write>(r: &mut R, w: &mut W, mode: EchoMode, max_pixels: usize) -> io::Result<()> {
    while let Some(payload) = read_frame(r)? {
        write_frame(w, &answer(&payload, mode, max_pixels))?;
    }
    Ok(())
}

/// Binds `addr` and serves connections one after another on a background
/// thread, forever. Returns the bound address.
pub fn spawn_tcp_server(addr: &str, mode: EchoMode, max_pixels: usize) -> Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let handle = std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let Ok(mut reader) = stream.try_clone() else { continue };
            let mut writer = stream;
            // a broken client must not take the server down
            let _ = serve_stream(&mut reader, &mut writer, mode, max_pixels);
        }
    });
    Ok((local, handle))
}

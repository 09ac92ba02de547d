//! Binary file formats. All integers and floats are little-endian.
//!
//! | magic  | contents                                                                    |
//! |--------|-----------------------------------------------------------------------------|
//! | `CIM1` | u32 height, u32 width, u32 flags, then (re, im) pairs, row-major;            |
//! |        | flags 0: f32 pairs, flags 1: f64 pairs                                      |
//! | `MSK1` | u32 height, u32 width, u8 kind, u32 R num, u32 R den, u32 calib, bit grid   |
//! | `KSP1` | u32 coils, u32 samples/coil, f64 gamma_w, f64 snr_db, u64 seed, f64 pairs   |
//! | `CSM1` | u32 coils, u32 height, u32 width, then f64 (re, im) pairs, coil-major       |
//!
//! The mask grid is row-major in DFT storage order, packed LSB-first, padded
//! to a whole byte.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{Acceleration, CoilMaps, MaskKind, MeasurementSet, SamplingMask};
use crate::transforms::ComplexImage;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], magic: &[u8; 4], what: &'static str) -> Result<Self> {
        if buf.len() < 4 || &buf[..4] != magic {
            return Err(Error::Format(format!("{what}: bad magic, expected {:?}", String::from_utf8_lossy(magic))));
        }
        Ok(Reader { buf, pos: 4, what })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("{}: truncated at byte {}", self.what, self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u32()? as usize;
        if v == 0 {
            return Err(Error::Format(format!("{}: zero dimension", self.what)));
        }
        Ok(v)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("{}: {} trailing bytes", self.what, self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn push_f32_pairs(out: &mut Vec<u8>, data: &[Complex64]) {
    for z in data {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
}

pub(crate) fn parse_f32_pairs(bytes: &[u8]) -> Vec<Complex64> {
    bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(f64::from(re), f64::from(im))
        })
        .collect()
}

fn push_f64_pairs(out: &mut Vec<u8>, data: &[Complex64]) {
    for z in data {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

fn read_f64_pairs(r: &mut Reader<'_>, n: usize) -> Result<Vec<Complex64>> {
    let bytes = r.take(n.checked_mul(16).ok_or_else(|| Error::Format("size overflow".into()))?)?;
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
}

pub fn encode_image(img: &ComplexImage) -> Result<Vec<u8>> {
    encode_image_with(img, false)
}

/// `double` selects f64 samples (flags 1), e.g. for ground truth that must
/// survive a round trip bit for bit.
pub fn encode_image_with(img: &ComplexImage, double: bool) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 16 * img.len());
    out.extend_from_slice(b"CIM1");
    out.extend_from_slice(&dim_u32(img.height(), "height")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(img.width(), "width")?.to_le_bytes());
    out.extend_from_slice(&(double as u32).to_le_bytes());
    if double {
        push_f64_pairs(&mut out, img.data());
    } else {
        push_f32_pairs(&mut out, img.data());
    }
    Ok(out)
}

pub fn decode_image(buf: &[u8]) -> Result<ComplexImage> {
    let mut r = Reader::new(buf, b"CIM1", "image file")?;
    let h = r.dim()?;
    let w = r.dim()?;
    let flags = r.u32()?;
    let n = h.checked_mul(w).ok_or_else(|| Error::Format("image size overflow".into()))?;
    let data = match flags {
        0 => parse_f32_pairs(r.take(n.checked_mul(8).ok_or_else(|| Error::Format("image size overflow".into()))?)?),
        1 => read_f64_pairs(&mut r, n)?,
        f => return Err(Error::Format(format!("image file: unknown flags {f}"))),
    };
    r.finish()?;
    let img = ComplexImage::new(h, w, data)?;
    img.ensure_finite("image file")?;
    Ok(img)
}

pub fn encode_mask(mask: &SamplingMask) -> Result<Vec<u8>> {
    let (h, w) = mask.shape();
    let mut out = Vec::new();
    out.extend_from_slice(b"MSK1");
    out.extend_from_slice(&dim_u32(h, "height")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(w, "width")?.to_le_bytes());
    out.push(mask.kind().code());
    out.extend_from_slice(&mask.acceleration().num.to_le_bytes());
    out.extend_from_slice(&mask.acceleration().den.to_le_bytes());
    out.extend_from_slice(&dim_u32(mask.calib(), "calibration size")?.to_le_bytes());
    let mut bytes = vec![0u8; (h * w).div_ceil(8)];
    for (k, &b) in mask.sampled().iter().enumerate() {
        if b {
            bytes[k / 8] |= 1 << (k % 8);
        }
    }
    out.extend_from_slice(&bytes);
    Ok(out)
}

pub fn decode_mask(buf: &[u8]) -> Result<SamplingMask> {
    let mut r = Reader::new(buf, b"MSK1", "mask file")?;
    let h = r.dim()?;
    let w = r.dim()?;
    let kind = MaskKind::from_code(r.u8()?)?;
    let (num, den) = (r.u32()?, r.u32()?);
    let acceleration = Acceleration::new(num, den).map_err(|e| Error::Format(e.to_string()))?;
    let calib = r.u32()? as usize;
    let n = h.checked_mul(w).ok_or_else(|| Error::Format("mask size overflow".into()))?;
    let bytes = r.take(n.div_ceil(8))?;
    r.finish()?;
    let sampled = (0..n).map(|k| bytes[k / 8] >> (k % 8) & 1 == 1).collect();
    SamplingMask::from_parts(h, w, kind, acceleration, calib, sampled)
}

pub fn encode_measurements(m: &MeasurementSet, coils: usize) -> Result<Vec<u8>> {
    if coils == 0 || m.y.len() % coils != 0 {
        return Err(Error::ShapeMismatch(format!("{} measurements do not split across {coils} coils", m.y.len())));
    }
    let mut out = Vec::with_capacity(36 + 16 * m.y.len());
    out.extend_from_slice(b"KSP1");
    out.extend_from_slice(&dim_u32(coils, "coil count")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(m.y.len() / coils, "sample count")?.to_le_bytes());
    out.extend_from_slice(&m.gamma_w.to_le_bytes());
    out.extend_from_slice(&m.snr_db.to_le_bytes());
    out.extend_from_slice(&m.seed.to_le_bytes());
    push_f64_pairs(&mut out, &m.y);
    Ok(out)
}

/// Returns the measurements and the coil count.
pub fn decode_measurements(buf: &[u8]) -> Result<(MeasurementSet, usize)> {
    let mut r = Reader::new(buf, b"KSP1", "measurement file")?;
    let coils = r.dim()?;
    let per = r.dim()?;
    let gamma_w = r.f64()?;
    let snr_db = r.f64()?;
    let seed = r.u64()?;
    let y = read_f64_pairs(&mut r, coils * per)?;
    r.finish()?;
    Ok((MeasurementSet::new(y, gamma_w, snr_db, seed)?, coils))
}

pub fn encode_coils(coils: &CoilMaps) -> Result<Vec<u8>> {
    let (h, w) = coils.shape();
    let mut out = Vec::new();
    out.extend_from_slice(b"CSM1");
    out.extend_from_slice(&dim_u32(coils.num_coils(), "coil count")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(h, "height")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(w, "width")?.to_le_bytes());
    for m in coils.maps() {
        push_f64_pairs(&mut out, m.data());
    }
    Ok(out)
}

pub fn decode_coils(buf: &[u8]) -> Result<CoilMaps> {
    let mut r = Reader::new(buf, b"CSM1", "coil file")?;
    let c = r.dim()?;
    let h = r.dim()?;
    let w = r.dim()?;
    let mut maps = Vec::with_capacity(c);
    for _ in 0..c {
        maps.push(ComplexImage::new(h, w, read_f64_pairs(&mut r, h * w)?)?);
    }
    r.finish()?;
    let support = (0..h * w).map(|n| maps.iter().map(|m| m.data()[n].norm_sqr()).sum::<f64>() > 0.5).collect();
    CoilMaps::new(maps, support).map_err(|e| Error::Format(e.to_string()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn write_image(path: &Path, img: &ComplexImage) -> Result<()> {
    write(path, &encode_image(img)?)
}

pub fn write_image_f64(path: &Path, img: &ComplexImage) -> Result<()> {
    write(path, &encode_image_with(img, true)?)
}

pub fn read_image(path: &Path) -> Result<ComplexImage> {
    decode_image(&read(path)?)
}

pub fn write_mask(path: &Path, mask: &SamplingMask) -> Result<()> {
    write(path, &encode_mask(mask)?)
}

pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    decode_mask(&read(path)?)
}

pub fn write_measurements(path: &Path, m: &MeasurementSet, coils: usize) -> Result<()> {
    write(path, &encode_measurements(m, coils)?)
}

pub fn read_measurements(path: &Path) -> Result<(MeasurementSet, usize)> {
    decode_measurements(&read(path)?)
}

pub fn write_coils(path: &Path, coils: &CoilMaps) -> Result<()> {
    write(path, &encode_coils(coils)?)
}

pub fn read_coils(path: &Path) -> Result<CoilMaps> {
    decode_coils(&read(path)?)
}

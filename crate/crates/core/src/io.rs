//! On-disk formats: PCMR covariance rasters, PVM p-value maps, PGM masks and
//! renderings, and the small `.wsample.json` sample format.
//!
//! PCMR v1 layout (little-endian): `"PCMR"`, u16 version, u32 rows, u32 cols,
//! u16 p, f64 nominal looks, then `rows·cols·p²` complex128 values (re, im)
//! with pixels row-major and matrix entries row-major.
//!
//! PVM v1 layout: `"PVM1"`, u32 rows, u32 cols, u64 reserved, four zero
//! bytes padding the header to 24, then `rows·cols` f64 values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::{ChangeMask, CovRaster, PValueMap};
use crate::error::{Error, Result};
use crate::mathcore::{HermitianMatrix, C64};
use crate::model::MatrixSample;

pub const PCMR_MAGIC: &[u8; 4] = b"PCMR";
pub const PCMR_VERSION: u16 = 1;
pub const PCMR_HEADER_LEN: usize = 24;
pub const PVM_MAGIC: &[u8; 4] = b"PVM1";
pub const PVM_VERSION: u16 = 1;
pub const PVM_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcmrHeader {
    pub rows: u32,
    pub cols: u32,
    pub dim: u16,
    pub nominal_looks: f64,
}

impl PcmrHeader {
    pub fn payload_len(&self) -> usize {
        self.rows as usize * self.cols as usize * (self.dim as usize).pow(2) * 16
    }
}

fn magic_text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Little-endian cursor over a byte slice; callers check lengths first.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn encode_raster(raster: &CovRaster) -> Vec<u8> {
    let p = raster.dim();
    let mut out = Vec::with_capacity(PCMR_HEADER_LEN + raster.pixels().len() * p * p * 16);
    out.extend_from_slice(PCMR_MAGIC);
    out.extend_from_slice(&PCMR_VERSION.to_le_bytes());
    out.extend_from_slice(&(raster.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(raster.cols() as u32).to_le_bytes());
    out.extend_from_slice(&(p as u16).to_le_bytes());
    out.extend_from_slice(&raster.nominal_looks().to_le_bytes());
    for z in raster.pixels() {
        for v in z.entries() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_raster_header(bytes: &[u8]) -> Result<PcmrHeader> {
    if bytes.len() < PCMR_HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: PCMR_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != PCMR_MAGIC {
        return Err(Error::BadMagic {
            expected: magic_text(PCMR_MAGIC),
            found: magic_text(&bytes[..4]),
        });
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u16();
    if version != PCMR_VERSION {
        return Err(Error::BadVersion(version));
    }
    Ok(PcmrHeader {
        rows: r.u32(),
        cols: r.u32(),
        dim: r.u16(),
        nominal_looks: r.f64(),
    })
}

pub fn decode_raster(bytes: &[u8]) -> Result<CovRaster> {
    let h = decode_raster_header(bytes)?;
    if h.dim == 0 {
        return Err(Error::Format("channel dimension is zero".into()));
    }
    let expected = PCMR_HEADER_LEN + h.payload_len();
    if bytes.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            actual: bytes.len(),
        });
    }
    let (rows, cols, p) = (h.rows as usize, h.cols as usize, h.dim as usize);
    let mut r = Reader {
        bytes,
        pos: PCMR_HEADER_LEN,
    };
    let mut pixels = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let data = (0..p * p).map(|_| C64::new(r.f64(), r.f64())).collect();
            let z = HermitianMatrix::from_entries(p, data).map_err(|e| match e {
                Error::NonHermitian { .. } => Error::NonHermitianPixel { row, col },
                other => other,
            })?;
            pixels.push(z);
        }
    }
    CovRaster::new(rows, cols, h.nominal_looks, pixels)
}

pub fn write_raster(raster: &CovRaster, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_raster(raster))?)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<CovRaster> {
    decode_raster(&fs::read(path)?)
}

pub fn encode_pvalue_map(map: &PValueMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(PVM_HEADER_LEN + 8 * map.values.len());
    out.extend_from_slice(PVM_MAGIC);
    out.extend_from_slice(&(map.rows as u32).to_le_bytes());
    out.extend_from_slice(&(map.cols as u32).to_le_bytes());
    out.extend_from_slice(&0u64.to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    for v in &map.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Grid part of a PVM file; the border bookkeeping is not stored.
pub fn decode_pvalue_map(bytes: &[u8]) -> Result<PValueMap> {
    if bytes.len() < PVM_HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: PVM_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != PVM_MAGIC {
        return Err(Error::BadMagic {
            expected: magic_text(PVM_MAGIC),
            found: magic_text(&bytes[..4]),
        });
    }
    let mut r = Reader { bytes, pos: 4 };
    let (rows, cols) = (r.u32() as usize, r.u32() as usize);
    let _reserved = r.u64();
    r.pos = PVM_HEADER_LEN;
    let expected = PVM_HEADER_LEN + 8 * rows * cols;
    if bytes.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            actual: bytes.len(),
        });
    }
    let values: Vec<f64> = (0..rows * cols).map(|_| r.f64()).collect();
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Format("p-value outside [0, 1]".into()));
    }
    Ok(PValueMap {
        rows,
        cols,
        values,
        border: 0,
        border_value: 1.0,
        failures: 0,
    })
}

pub fn write_pvalue_map(map: &PValueMap, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_pvalue_map(map))?)
}

pub fn read_pvalue_map(path: impl AsRef<Path>) -> Result<PValueMap> {
    decode_pvalue_map(&fs::read(path)?)
}

/// Binary (P5) 8-bit graymap.
pub fn encode_pgm(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Reads P5 or P2 graymaps with `maxval ≤ 255`; returns `(rows, cols, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |msg: &str| Error::Format(format!("pgm: {msg}"));
    let mut pos = 0;
    let next_token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = next_token(&mut pos).ok_or_else(|| bad("empty file"))?;
    if magic != "P5" && magic != "P2" {
        return Err(Error::BadMagic {
            expected: "P5".into(),
            found: magic,
        });
    }
    let num = |pos: &mut usize| -> Result<usize> {
        next_token(pos).and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad header number"))
    };
    let cols = num(&mut pos)?;
    let rows = num(&mut pos)?;
    let maxval = num(&mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit graymaps are supported"));
    }
    let n = rows * cols;
    let pixels = if magic == "P5" {
        let start = pos + 1;
        if bytes.len() < start + n {
            return Err(Error::TruncatedPayload {
                expected: start + n,
                actual: bytes.len(),
            });
        }
        bytes[start..start + n].to_vec()
    } else {
        (0..n).map(|_| num(&mut pos).map(|v| v.min(255) as u8)).collect::<Result<_>>()?
    };
    Ok((rows, cols, pixels))
}

/// 255 marks change, 0 no change.
pub fn encode_mask_pgm(mask: &ChangeMask) -> Vec<u8> {
    let px: Vec<u8> = mask.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.rows, mask.cols, &px)
}

/// Any nonzero pixel marks change.
pub fn decode_mask_pgm(bytes: &[u8]) -> Result<ChangeMask> {
    let (rows, cols, px) = decode_pgm(bytes)?;
    ChangeMask::new(rows, cols, px.into_iter().map(|v| v != 0).collect())
}

pub fn write_mask(mask: &ChangeMask, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_mask_pgm(mask))?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<ChangeMask> {
    decode_mask_pgm(&fs::read(path)?)
}

/// Darkest level reached at p-values of 1e-16 and below.
const RENDER_FLOOR_LOG10: f64 = 16.0;

/// 8-bit rendering of a p-value map: white above `cut`, and below it a ramp
/// from light gray to black as `−log₁₀ p` grows.
pub fn render_pvalue_map(map: &PValueMap, cut: f64) -> Vec<u8> {
    let top = -cut.log10();
    let px: Vec<u8> = map
        .values
        .iter()
        .map(|&p| {
            if p > cut {
                255
            } else {
                let depth = ((-p.max(1e-300).log10() - top) / (RENDER_FLOOR_LOG10 - top)).clamp(0.0, 1.0);
                (200.0 * (1.0 - depth)).round() as u8
            }
        })
        .collect();
    encode_pgm(map.rows, map.cols, &px)
}

/// Hand-writable sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub looks: Option<f64>,
    pub matrices: Vec<HermitianMatrix>,
}

impl SampleFile {
    pub fn from_sample(sample: &MatrixSample, looks: Option<f64>) -> Self {
        Self {
            p: sample.dim(),
            looks,
            matrices: sample.observations().to_vec(),
        }
    }

    pub fn into_sample(self) -> Result<MatrixSample> {
        if let Some(z) = self.matrices.iter().find(|z| z.dim() != self.p) {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: z.dim(),
            });
        }
        MatrixSample::new(self.matrices)
    }
}

pub fn write_sample_json(sample: &MatrixSample, looks: Option<f64>, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string(&SampleFile::from_sample(sample, looks))?;
    Ok(fs::write(path, text)?)
}

/// Reads a sample from `.wsample.json` or a PCMR raster (all pixels, row-major);
/// also returns the looks hint if the file carries one.
pub fn read_sample(path: impl AsRef<Path>) -> Result<(MatrixSample, Option<f64>)> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(PCMR_MAGIC) {
        let raster = decode_raster(&bytes)?;
        let looks = raster.nominal_looks();
        return Ok((MatrixSample::new(raster.pixels().to_vec())?, Some(looks)));
    }
    let file: SampleFile = serde_json::from_slice(&bytes)?;
    let looks = file.looks;
    Ok((file.into_sample()?, looks))
}

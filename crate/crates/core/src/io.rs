//! EFD1 binary fields and binary PGM images.
//!
//! EFD1 layout: the magic `EFD1`, then width, height and channel count as
//! little-endian `u32`, then `width * height * channels` little-endian `f32`
//! values, planar (all of channel 0, then channel 1, ...), each plane
//! row-major from the top row. One channel holds a scalar image, two hold a
//! vector field (`ux`, `uy`) or a ν map (`nu`, `valid`). Grid spacing is not
//! stored; fields read back on a unit grid.
//!
//! Values are stored as `f32`, so writing an `f64` field rounds it to single
//! precision. Anything already representable in `f32` round-trips bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{Grid2D, NuMap, ScalarImage, VectorField2D};

pub const EFD_MAGIC: &[u8; 4] = b"EFD1";
const HEADER_LEN: usize = 16;

/// Raw decoded EFD1 payload.
#[derive(Debug, Clone, PartialEq)]
pub struct EfdData {
    pub width: u32,
    pub height: u32,
    pub planes: Vec<Vec<f32>>,
}

/// Result of [`read_field`].
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Vector(VectorField2D),
    Scalar(ScalarImage),
}

pub fn encode_efd(width: u32, height: u32, planes: &[&[f32]]) -> Vec<u8> {
    let n = width as usize * height as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * planes.len());
    out.extend_from_slice(EFD_MAGIC);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.extend_from_slice(&(planes.len() as u32).to_le_bytes());
    for p in planes {
        assert_eq!(p.len(), n, "plane length must equal width * height");
        for v in p.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_efd(bytes: &[u8], path: &Path) -> Result<EfdData> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, "truncated header"));
    }
    if &bytes[..4] != EFD_MAGIC {
        return Err(Error::format(path, "bad magic (expected EFD1)"));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap());
    let (width, height, channels) = (word(0), word(1), word(2));
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::format(path, "zero dimension in header"));
    }
    let n = width as usize * height as usize;
    let expected = n
        .checked_mul(channels as usize)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::format(path, "header dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::format(
            path,
            format!("truncated payload: {} of {} bytes", payload.len(), expected),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            path,
            format!("payload length {} does not match header ({expected})", payload.len()),
        ));
    }
    let planes = payload
        .chunks_exact(4 * n)
        .map(|plane| {
            plane
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok(EfdData {
        width,
        height,
        planes,
    })
}

pub fn read_efd(path: impl AsRef<Path>) -> Result<EfdData> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_efd(&bytes, path)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|x| *x as f32).collect()
}

fn dims_u32(g: &Grid2D) -> (u32, u32) {
    (g.width as u32, g.height as u32)
}

fn grid_of(data: &EfdData, path: &Path) -> Result<Grid2D> {
    Grid2D::new(data.width as usize, data.height as usize)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_vector_field(field: &VectorField2D, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = dims_u32(field.grid());
    let (ux, uy) = (to_f32(field.ux()), to_f32(field.uy()));
    write_bytes(path.as_ref(), &encode_efd(w, h, &[&ux, &uy]))
}

pub fn write_scalar_efd(image: &ScalarImage, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = dims_u32(image.grid());
    write_bytes(path.as_ref(), &encode_efd(w, h, &[&to_f32(image.data())]))
}

/// Map stored as two channels: ν (zero where invalid) and validity (0 or 1).
pub fn write_nu_map(map: &NuMap, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = dims_u32(map.grid());
    let valid: Vec<f32> = map.valid().iter().map(|v| if *v { 1.0 } else { 0.0 }).collect();
    write_bytes(path.as_ref(), &encode_efd(w, h, &[&to_f32(map.nu()), &valid]))
}

pub fn read_nu_map(path: impl AsRef<Path>) -> Result<NuMap> {
    let path = path.as_ref();
    let data = read_efd(path)?;
    if data.planes.len() != 2 {
        return Err(Error::format(path, "nu map needs 2 channels"));
    }
    let grid = grid_of(&data, path)?;
    let nu = data.planes[0].iter().map(|v| *v as f64).collect();
    let valid = data.planes[1].iter().map(|v| *v != 0.0).collect();
    NuMap::new(grid, nu, valid)
}

/// Read an EFD1 file as a vector field (2 channels) or scalar image (1 channel).
pub fn read_field(path: impl AsRef<Path>) -> Result<FieldData> {
    let path = path.as_ref();
    let data = read_efd(path)?;
    let grid = grid_of(&data, path)?;
    let wrap = |e: Error| Error::format(path, e.to_string());
    let plane = |k: usize| data.planes[k].iter().map(|v| *v as f64).collect::<Vec<_>>();
    match data.planes.len() {
        1 => Ok(FieldData::Scalar(ScalarImage::new(grid, plane(0)).map_err(wrap)?)),
        2 => Ok(FieldData::Vector(
            VectorField2D::from_components(grid, plane(0), plane(1)).map_err(wrap)?,
        )),
        c => Err(Error::format(path, format!("unsupported channel count {c}"))),
    }
}

pub fn read_vector_field(path: impl AsRef<Path>) -> Result<VectorField2D> {
    let path = path.as_ref();
    match read_field(path)? {
        FieldData::Vector(v) => Ok(v),
        FieldData::Scalar(_) => Err(Error::format(path, "expected a 2-channel vector field")),
    }
}

pub fn encode_pgm(image: &ScalarImage) -> Vec<u8> {
    let g = image.grid();
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend(image.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<ScalarImage> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::format(path, "not a binary PGM (expected P5)"));
    }
    let mut num = |what: &str| -> Result<usize> {
        token()?
            .parse::<usize>()
            .map_err(|_| Error::format(path, format!("bad PGM {what}")))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(path, format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let n = w * h;
    if bytes.len() < start + n {
        return Err(Error::format(path, "truncated PGM raster"));
    }
    let grid = Grid2D::new(w, h).map_err(|e| Error::format(path, e.to_string()))?;
    let data = bytes[start..start + n]
        .iter()
        .map(|b| (*b as f64 / maxval as f64).min(1.0))
        .collect();
    ScalarImage::new(grid, data)
}

pub fn write_pgm(image: &ScalarImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(image))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ScalarImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

/// Read a scalar image from either a PGM or a single-channel EFD1 file,
/// dispatching on the leading magic bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<ScalarImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        return decode_pgm(&bytes, path);
    }
    let data = decode_efd(&bytes, path)?;
    if data.planes.len() != 1 {
        return Err(Error::format(path, "expected a single-channel image"));
    }
    let grid = grid_of(&data, path)?;
    ScalarImage::new(grid, data.planes[0].iter().map(|v| *v as f64).collect())
        .map_err(|e| Error::format(path, e.to_string()))
}

pub(crate) fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        error: e,
    })?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        error: e,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

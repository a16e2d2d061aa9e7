//! Mask and field file I/O.
//!
//! Masks are read from 8-bit grayscale PNG or binary PGM (P5). Fields use a
//! small lossless container:
//!
//! ```text
//! offset  size       content
//! 0       6          ASCII "SAUNA1"
//! 6       4          height, u32 little-endian
//! 10      4          width, u32 little-endian
//! 14      4*h*w      values, f32 little-endian, row-major
//! ```
//!
//! Fields hold `f64` in memory; saving rounds each value to the nearest
//! `f32`. Any field whose values are `f32`-representable survives a
//! save/load round trip bit-for-bit.

use std::fs;
use std::io::{self, Cursor, Write};
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};
use thiserror::Error;

use crate::grid::{BinaryMask, FieldKind, GridError, ScalarField};

pub const FIELD_MAGIC: &[u8; 6] = b"SAUNA1";
pub const FIELD_HEADER_LEN: usize = 14;
pub const DEFAULT_FG_THRESHOLD: u8 = 127;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("non-grayscale input ({0})")]
    NonGrayscale(String),
    #[error("zero dimensions")]
    ZeroDimensions,
    #[error("bad magic")]
    BadMagic,
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after payload: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: usize, found: usize },
    #[error("NaN or infinite value in payload at index {0}")]
    NonFinitePayload(usize),
    #[error("dimensions {0}x{1} do not fit in the field format")]
    TooLarge(usize, usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl IoError {
    /// True when the failure came from the filesystem rather than the file contents.
    pub fn is_os_error(&self) -> bool {
        matches!(
            self,
            IoError::Io { .. }
                | IoError::Image {
                    source: image::ImageError::IoError(_),
                    ..
                }
        )
    }
}

fn io_err(path: &Path, source: io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Reads an 8-bit grayscale PNG or PGM; intensities above `fg_threshold` become foreground.
pub fn load_mask(path: &Path, fg_threshold: u8) -> Result<BinaryMask, IoError> {
    let image_err = |source| IoError::Image {
        path: path.display().to_string(),
        source,
    };
    let img = ImageReader::open(path)
        .map_err(|e| io_err(path, e))?
        .with_guessed_format()
        .map_err(|e| io_err(path, e))?
        .decode()
        .map_err(image_err)?;
    let gray = match img {
        DynamicImage::ImageLuma8(buf) => buf,
        other => return Err(IoError::NonGrayscale(format!("{:?}", other.color()))),
    };
    let (w, h) = gray.dimensions();
    if w == 0 || h == 0 {
        return Err(IoError::ZeroDimensions);
    }
    mask_from_intensities(h as usize, w as usize, gray.as_raw(), fg_threshold)
}

pub fn mask_from_intensities(
    height: usize,
    width: usize,
    pixels: &[u8],
    fg_threshold: u8,
) -> Result<BinaryMask, IoError> {
    let data = pixels.iter().map(|&p| (p > fg_threshold) as u8).collect();
    Ok(BinaryMask::new(height, width, data)?)
}

/// Binary PGM with foreground at 255 and background at 0.
pub fn encode_mask_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.as_slice().iter().map(|&v| v * 255));
    out
}

pub fn save_mask_pgm(mask: &BinaryMask, path: &Path) -> Result<(), IoError> {
    write_atomic(path, &encode_mask_pgm(mask))
}

pub fn save_mask_png(mask: &BinaryMask, path: &Path) -> Result<(), IoError> {
    let pixels: Vec<u8> = mask.as_slice().iter().map(|&v| v * 255).collect();
    let img = image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, pixels)
        .expect("buffer length matches mask dimensions");
    write_atomic(path, &encode_png(DynamicImage::ImageLuma8(img), path)?)
}

pub(crate) fn encode_png(img: DynamicImage, path: &Path) -> Result<Vec<u8>, IoError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|source| IoError::Image {
            path: path.display().to_string(),
            source,
        })?;
    Ok(buf.into_inner())
}

pub fn encode_field(field: &ScalarField) -> Result<Vec<u8>, IoError> {
    let (h, w) = (field.height(), field.width());
    let (h32, w32) = match (u32::try_from(h), u32::try_from(w)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(IoError::TooLarge(h, w)),
    };
    let mut out = Vec::with_capacity(FIELD_HEADER_LEN + 4 * field.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&h32.to_le_bytes());
    out.extend_from_slice(&w32.to_le_bytes());
    for &v in field.as_slice() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(IoError::TooLarge(h, w));
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(out)
}

/// Decodes a field; the result is tagged [`FieldKind::Generic`].
pub fn decode_field(bytes: &[u8]) -> Result<ScalarField, IoError> {
    if bytes.len() < FIELD_MAGIC.len() || &bytes[..FIELD_MAGIC.len()] != FIELD_MAGIC {
        return Err(IoError::BadMagic);
    }
    if bytes.len() < FIELD_HEADER_LEN {
        return Err(IoError::Truncated {
            expected: FIELD_HEADER_LEN,
            found: bytes.len(),
        });
    }
    let h = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    if h == 0 || w == 0 {
        return Err(IoError::ZeroDimensions);
    }
    let expected = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(FIELD_HEADER_LEN))
        .ok_or(IoError::TooLarge(h, w))?;
    if bytes.len() < expected {
        return Err(IoError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(IoError::TrailingBytes {
            expected,
            found: bytes.len(),
        });
    }
    let mut data = Vec::with_capacity(h * w);
    for (i, chunk) in bytes[FIELD_HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(IoError::NonFinitePayload(i));
        }
        data.push(v as f64);
    }
    Ok(ScalarField::new(h, w, data, FieldKind::Generic)?)
}

pub fn save_field(field: &ScalarField, path: &Path) -> Result<(), IoError> {
    write_atomic(path, &encode_field(field)?)
}

pub fn load_field(path: &Path) -> Result<ScalarField, IoError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_field(&bytes)
}

//! Grid data model shared by every stage: binary ground-truth masks and
//! real-valued fields (distances, signed maps, predictions, images).
//!
//! Both types are row-major with a top-left origin and 0-based `(row, col)`
//! coordinates. They validate their invariants on construction and are
//! immutable afterwards.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid shape {height}x{width} for {len} values")]
    InvalidShape { height: usize, width: usize, len: usize },
    #[error("mask value {value} at index {index} is not 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("value {value} at index {index} is outside the range of a {kind} field")]
    OutOfRange { kind: FieldKind, index: usize, value: f64 },
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

fn check_shape(height: usize, width: usize, len: usize) -> Result<(), GridError> {
    if height == 0 || width == 0 || height.checked_mul(width) != Some(len) {
        return Err(GridError::InvalidShape { height, width, len });
    }
    Ok(())
}

/// A 2-D mask of {0,1} labels; 1 is foreground.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self, GridError> {
        check_shape(height, width, data.len())?;
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(GridError::NotBinary { index, value });
        }
        Ok(Self { height, width, data })
    }

    pub fn from_bools(height: usize, width: usize, data: &[bool]) -> Result<Self, GridError> {
        Self::new(height, width, data.iter().map(|&b| b as u8).collect())
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Result<Self, GridError> {
        Self::new(height, width, vec![value as u8; height * width])
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: masks have at least one pixel.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] == 1
    }

    #[inline]
    pub fn is_fg(&self, index: usize) -> bool {
        self.data[index] == 1
    }

    pub fn fg_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn fg_fraction(&self) -> f64 {
        self.fg_count() as f64 / self.len() as f64
    }

    pub fn same_shape<T: Shaped>(&self, other: &T) -> Result<(), GridError> {
        same_shape(self, other)
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.height, self.width)?;
        for row in self.data.chunks(self.width) {
            let line: String = row.iter().map(|&v| if v == 1 { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

/// What a [`ScalarField`] holds; determines the admissible value range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Unsigned distance to the opposite class, `>= 0`.
    Distance,
    /// Windowed maximum of foreground distances, `>= 0`.
    Thickness,
    /// Signed normalized boundary map in `[-1, 1]`.
    BoundaryMap,
    /// Signed normalized thickness map in `[-1, 1]`.
    ThicknessMap,
    /// Composed soft label in `[-1, 1]`.
    Sauna,
    /// Model output in `[-1, 1]`.
    Prediction,
    /// Grayscale intensity image in `[0, 1]`.
    Image,
    /// Any finite values; used for fields read from disk before their role is known.
    Generic,
}

impl FieldKind {
    pub fn is_signed_unit(self) -> bool {
        matches!(
            self,
            FieldKind::BoundaryMap | FieldKind::ThicknessMap | FieldKind::Sauna | FieldKind::Prediction
        )
    }

    fn admits(self, v: f64) -> bool {
        match self {
            FieldKind::Distance | FieldKind::Thickness => v >= 0.0,
            FieldKind::BoundaryMap | FieldKind::ThicknessMap | FieldKind::Sauna | FieldKind::Prediction => {
                (-1.0..=1.0).contains(&v)
            }
            FieldKind::Image => (0.0..=1.0).contains(&v),
            FieldKind::Generic => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Distance => "distance",
            FieldKind::Thickness => "thickness",
            FieldKind::BoundaryMap => "boundary-map",
            FieldKind::ThicknessMap => "thickness-map",
            FieldKind::Sauna => "sauna",
            FieldKind::Prediction => "prediction",
            FieldKind::Image => "image",
            FieldKind::Generic => "generic",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 2-D grid of finite reals tagged with its [`FieldKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    data: Vec<f64>,
    kind: FieldKind,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, data: Vec<f64>, kind: FieldKind) -> Result<Self, GridError> {
        check_shape(height, width, data.len())?;
        validate_values(&data, kind)?;
        Ok(Self {
            height,
            width,
            data,
            kind,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64, kind: FieldKind) -> Result<Self, GridError> {
        Self::new(height, width, vec![value; height * width], kind)
    }

    /// A 1-row field, handy for pixel-level loss evaluation.
    pub fn from_vec(data: Vec<f64>, kind: FieldKind) -> Result<Self, GridError> {
        let width = data.len();
        Self::new(1, width, data, kind)
    }

    /// Re-tags the field, validating the values against the new kind.
    pub fn with_kind(self, kind: FieldKind) -> Result<Self, GridError> {
        validate_values(&self.data, kind)?;
        Ok(Self { kind, ..self })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: fields have at least one pixel.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_shape<T: Shaped>(&self, other: &T) -> Result<(), GridError> {
        same_shape(self, other)
    }
}

fn validate_values(data: &[f64], kind: FieldKind) -> Result<(), GridError> {
    for (index, &value) in data.iter().enumerate() {
        if !value.is_finite() {
            return Err(GridError::NonFinite { index });
        }
        if !kind.admits(value) {
            return Err(GridError::OutOfRange { kind, index, value });
        }
    }
    Ok(())
}

pub trait Shaped {
    fn dims(&self) -> (usize, usize);
}

impl Shaped for BinaryMask {
    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

impl Shaped for ScalarField {
    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

pub fn same_shape<A: Shaped, B: Shaped>(a: &A, b: &B) -> Result<(), GridError> {
    let (ah, aw) = a.dims();
    let (bh, bw) = b.dims();
    if (ah, aw) != (bh, bw) {
        return Err(GridError::ShapeMismatch(ah, aw, bh, bw));
    }
    Ok(())
}

//! Netpbm grayscale (PGM, `P2`/`P5`) and color (PPM, `P3`/`P6`) images.
//!
//! Samples are normalized to `[0, 1]` by dividing by `maxval` on read and
//! quantized with round-half-up, `floor(v * maxval + 0.5)`, on write. Binary
//! rasters with `maxval > 255` use two big-endian bytes per sample.

use std::path::Path;

use crate::error::{Result, SplicError};
use crate::linalg::ImageMatrix;
use crate::sampling::BinaryMask;

/// One grayscale plane or three color planes of equal shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    channels: Vec<ImageMatrix>,
}

impl Image {
    pub fn new(channels: Vec<ImageMatrix>) -> Result<Self> {
        if channels.len() != 1 && channels.len() != 3 {
            return Err(SplicError::param(
                "channels",
                format!("expected 1 or 3 planes, got {}", channels.len()),
            ));
        }
        let shape = channels[0].shape();
        if let Some(bad) = channels.iter().find(|c| c.shape() != shape) {
            return Err(SplicError::ShapeMismatch {
                expected: shape,
                actual: bad.shape(),
            });
        }
        Ok(Self { channels })
    }

    pub fn gray(plane: ImageMatrix) -> Self {
        Self {
            channels: vec![plane],
        }
    }

    pub fn channels(&self) -> &[ImageMatrix] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<ImageMatrix> {
        self.channels
    }

    pub fn is_color(&self) -> bool {
        self.channels.len() == 3
    }

    pub fn rows(&self) -> usize {
        self.channels[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.channels[0].cols()
    }
}

/// Plain (ASCII) or raw (binary) raster encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    #[default]
    Binary,
}

impl Encoding {
    fn magic(self, color: bool) -> &'static [u8] {
        match (self, color) {
            (Encoding::Ascii, false) => b"P2",
            (Encoding::Binary, false) => b"P5",
            (Encoding::Ascii, true) => b"P3",
            (Encoding::Binary, true) => b"P6",
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> SplicError {
        SplicError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    /// Skips whitespace and `#` comments running to end of line.
    fn skip_blank(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<u64> {
        self.skip_blank();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(self.bytes[self.pos] - b'0')))
                .ok_or_else(|| self.err(format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}")));
        }
        if self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            return Err(self.err(format!("unexpected byte after {what}")));
        }
        Ok(value)
    }

    /// Next plain-raster sample, `None` at end of input.
    fn ascii_sample(&mut self) -> Result<Option<u64>> {
        self.skip_blank();
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        self.header_number("sample").map(Some)
    }
}

/// Decodes a PGM/PPM byte stream.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(cur.err("missing `P` magic"));
    }
    let (ascii, planes) = match bytes[1] {
        b'2' => (true, 1),
        b'5' => (false, 1),
        b'3' => (true, 3),
        b'6' => (false, 3),
        other => {
            cur.pos = 1;
            return Err(cur.err(format!("unsupported magic `P{}`", other as char)));
        }
    };
    cur.pos = 2;
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(cur.err("magic must be followed by whitespace"));
    }

    cur.skip_blank();
    let width_at = cur.pos;
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    if width == 0 || height == 0 {
        return Err(SplicError::Parse {
            offset: width_at,
            message: format!("zero image dimension {width}x{height}"),
        });
    }
    cur.skip_blank();
    let maxval_at = cur.pos;
    let maxval = cur.header_number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(SplicError::Parse {
            offset: maxval_at,
            message: format!("maxval {maxval} outside 1..=65535"),
        });
    }

    let samples = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(planes as u64))
        .filter(|&v| v <= usize::MAX as u64 / 2)
        .ok_or_else(|| SplicError::Parse {
            offset: width_at,
            message: "image dimensions overflow".into(),
        })? as usize;
    let (w, h) = (width as usize, height as usize);

    let values: Vec<u64> = if ascii {
        // every plain sample needs at least one byte
        if samples > bytes.len().saturating_sub(cur.pos) {
            let found = count_ascii_samples(&mut Cursor {
                bytes,
                pos: cur.pos,
            })?;
            return Err(SplicError::Truncated {
                expected: samples,
                found,
            });
        }
        let mut out = Vec::with_capacity(samples);
        for k in 0..samples {
            cur.skip_blank();
            let at = cur.pos;
            match cur.ascii_sample()? {
                Some(v) if v > maxval => {
                    return Err(SplicError::Parse {
                        offset: at,
                        message: format!("sample {v} exceeds maxval {maxval}"),
                    })
                }
                Some(v) => out.push(v),
                None => {
                    return Err(SplicError::Truncated {
                        expected: samples,
                        found: k,
                    })
                }
            }
        }
        out
    } else {
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(cur.err("expected single whitespace before raster"));
        }
        cur.pos += 1;
        let width_bytes = if maxval > 255 { 2 } else { 1 };
        let raster = &bytes[cur.pos..];
        let needed = samples * width_bytes;
        if raster.len() < needed {
            return Err(SplicError::Truncated {
                expected: samples,
                found: raster.len() / width_bytes,
            });
        }
        let mut out = Vec::with_capacity(samples);
        for k in 0..samples {
            let v = if width_bytes == 2 {
                u64::from(u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]))
            } else {
                u64::from(raster[k])
            };
            if v > maxval {
                return Err(SplicError::Parse {
                    offset: cur.pos + k * width_bytes,
                    message: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            out.push(v);
        }
        out
    };

    let scale = maxval as f64;
    let channels = (0..planes)
        .map(|c| ImageMatrix::from_fn(h, w, |i, j| values[(i * w + j) * planes + c] as f64 / scale))
        .collect();
    Ok(Image { channels })
}

fn count_ascii_samples(cur: &mut Cursor<'_>) -> Result<usize> {
    let mut n = 0;
    while cur.ascii_sample()?.is_some() {
        n += 1;
    }
    Ok(n)
}

/// Encodes an image; every value must already lie in `[0, 1]`.
///
/// `comment` lines are written as `# ...` after the magic.
pub fn encode_pnm(
    image: &Image,
    encoding: Encoding,
    maxval: u16,
    comment: Option<&str>,
) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(SplicError::param("maxval", "must be in 1..=65535"));
    }
    let (h, w) = (image.rows(), image.cols());
    let planes = image.channels.len();
    let mut samples = Vec::with_capacity(h * w * planes);
    for i in 0..h {
        for j in 0..w {
            for (c, plane) in image.channels.iter().enumerate() {
                let v = plane.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(SplicError::param(
                        "image",
                        format!("value {v} at ({i}, {j}) channel {c} outside [0, 1]"),
                    ));
                }
                samples.push(quantize(v, maxval));
            }
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(encoding.magic(image.is_color()));
    out.push(b'\n');
    if let Some(text) = comment {
        for line in text.lines() {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
    }
    out.extend_from_slice(format!("{w} {h}\n{maxval}\n").as_bytes());
    match encoding {
        Encoding::Ascii => {
            let per_line = w * planes;
            for (k, s) in samples.iter().enumerate() {
                out.extend_from_slice(s.to_string().as_bytes());
                out.push(if (k + 1) % per_line == 0 { b'\n' } else { b' ' });
            }
        }
        Encoding::Binary => {
            for s in samples {
                if maxval > 255 {
                    out.extend_from_slice(&s.to_be_bytes());
                } else {
                    out.push(s as u8);
                }
            }
        }
    }
    Ok(out)
}

/// Round-half-up quantization.
pub fn quantize(v: f64, maxval: u16) -> u16 {
    (v * f64::from(maxval) + 0.5).floor().min(f64::from(maxval)) as u16
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SplicError::io(path, e))?;
    decode_pnm(&bytes)
}

/// Writes through a sibling temp file and a rename.
pub fn write_image(
    image: &Image,
    path: impl AsRef<Path>,
    encoding: Encoding,
    maxval: u16,
    comment: Option<&str>,
) -> Result<()> {
    let bytes = encode_pnm(image, encoding, maxval, comment)?;
    write_atomic(path.as_ref(), &bytes)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| SplicError::io(path, std::io::Error::other("not a file path")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| SplicError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        SplicError::io(path, e)
    })
}

/// Reads a mask stored as a grayscale image; samples at or above half of
/// `maxval` are anchors.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let image = read_image(path)?;
    if image.is_color() {
        return Err(SplicError::param("mask", "mask files must be grayscale"));
    }
    Ok(BinaryMask::from_matrix(&image.channels[0]))
}

/// Writes a mask as a binary PGM with samples in `{0, 255}`.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_image(
        &Image::gray(mask.to_matrix()),
        path,
        Encoding::Binary,
        255,
        None,
    )
}

//! Minimal codecs: binary PGM (P5), binary PPM (P6), uncompressed 24-bit BMP.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

/// Decode an image file, dispatching on its magic bytes.
pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

pub(crate) fn decode(bytes: &[u8]) -> std::result::Result<Image, String> {
    match bytes.get(..2) {
        Some(b"P5") => decode_pnm(bytes, 1),
        Some(b"P6") => decode_pnm(bytes, 3),
        Some(b"BM") => decode_bmp(bytes),
        _ => Err("unrecognized format (expected P5, P6 or BMP)".into()),
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {what} in header"))
    }
}

fn decode_pnm(bytes: &[u8], channels: usize) -> std::result::Result<Image, String> {
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    if width == 0 || height == 0 {
        return Err("zero dimension".into());
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    if r.pos >= bytes.len() || !bytes[r.pos].is_ascii_whitespace() {
        return Err("missing raster separator".into());
    }
    let start = r.pos + 1;
    let len = width * height * channels;
    let raster = bytes
        .get(start..start + len)
        .ok_or_else(|| "truncated raster".to_string())?;
    let data = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&v| ((v as usize * 255 + maxval / 2) / maxval).min(255) as u8)
            .collect()
    };
    Ok(Image::from_raw(width, height, channels, data))
}

fn le_u16(b: &[u8], at: usize) -> std::result::Result<u16, String> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| "truncated BMP header".to_string())
}

fn le_u32(b: &[u8], at: usize) -> std::result::Result<u32, String> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| "truncated BMP header".to_string())
}

fn decode_bmp(bytes: &[u8]) -> std::result::Result<Image, String> {
    let offset = le_u32(bytes, 10)? as usize;
    let dib = le_u32(bytes, 14)?;
    if dib < 40 {
        return Err("unsupported BMP header (core header)".into());
    }
    let width = le_u32(bytes, 18)? as i32;
    let height = le_u32(bytes, 22)? as i32;
    let bpp = le_u16(bytes, 28)?;
    let compression = le_u32(bytes, 30)?;
    if bpp != 24 || compression != 0 {
        return Err(format!(
            "only uncompressed 24-bit BMP is supported (bpp {bpp}, compression {compression})"
        ));
    }
    if width <= 0 || height == 0 {
        return Err("zero dimension".into());
    }
    let w = width as usize;
    let h = height.unsigned_abs() as usize;
    let top_down = height < 0;
    let stride = (w * 3).div_ceil(4) * 4;
    if bytes.len() < offset + stride * h {
        return Err("truncated raster".into());
    }
    let mut data = vec![0u8; w * h * 3];
    for row in 0..h {
        let src_row = if top_down { row } else { h - 1 - row };
        let src = &bytes[offset + src_row * stride..offset + src_row * stride + w * 3];
        let dst = &mut data[row * w * 3..(row + 1) * w * 3];
        for (d, s) in dst.chunks_exact_mut(3).zip(src.chunks_exact(3)) {
            d[0] = s[2];
            d[1] = s[1];
            d[2] = s[0];
        }
    }
    Ok(Image::from_raw(w, h, 3, data))
}

fn write_bytes(path: &Path, header: &[u8], body: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(header)
        .and_then(|_| f.write_all(body))
        .map_err(|e| Error::io(path, e))
}

/// Write as binary PPM; gray images are expanded to RGB.
pub fn write_ppm(path: &Path, img: &Image) -> Result<()> {
    let rgb = img.to_rgb();
    let header = format!("P6\n{} {}\n255\n", rgb.width(), rgb.height());
    write_bytes(path, header.as_bytes(), rgb.data())
}

/// Write as binary PGM; RGB images are converted to luma.
pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    let gray = super::to_grayscale(img);
    let header = format!("P5\n{} {}\n255\n", gray.width(), gray.height());
    write_bytes(path, header.as_bytes(), gray.data())
}

/// Write as bottom-up, uncompressed 24-bit BMP.
pub fn write_bmp(path: &Path, img: &Image) -> Result<()> {
    let rgb = img.to_rgb();
    let (w, h) = (rgb.width(), rgb.height());
    let stride = (w * 3).div_ceil(4) * 4;
    let size = 54 + stride * h;
    let mut header = Vec::with_capacity(54);
    header.extend_from_slice(b"BM");
    header.extend_from_slice(&(size as u32).to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    header.extend_from_slice(&54u32.to_le_bytes());
    header.extend_from_slice(&40u32.to_le_bytes());
    header.extend_from_slice(&(w as i32).to_le_bytes());
    header.extend_from_slice(&(h as i32).to_le_bytes());
    header.extend_from_slice(&1u16.to_le_bytes());
    header.extend_from_slice(&24u16.to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    header.extend_from_slice(&((stride * h) as u32).to_le_bytes());
    header.extend_from_slice(&2835u32.to_le_bytes());
    header.extend_from_slice(&2835u32.to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    let mut body = vec![0u8; stride * h];
    for row in 0..h {
        let src = &rgb.data()[row * w * 3..(row + 1) * w * 3];
        let dst_row = h - 1 - row;
        let dst = &mut body[dst_row * stride..dst_row * stride + w * 3];
        for (d, s) in dst.chunks_exact_mut(3).zip(src.chunks_exact(3)) {
            d[0] = s[2];
            d[1] = s[1];
            d[2] = s[0];
        }
    }
    write_bytes(path, &header, &body)
}

//! Frames, boxes, and pixel access.
//!
//! Images are 8-bit, row-major, with either one (gray) or three (RGB)
//! interleaved channels. Everything downstream reads frames through the
//! primitives here.

mod bbox;
mod pnm;
mod sequence;

pub use bbox::{BoundingBox, PixelRect};
pub use pnm::{read_image, write_bmp, write_pgm, write_ppm};
pub use sequence::{
    load_sequence, parse_ground_truth, read_ground_truth, write_ground_truth, GroundTruth,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    /// Wrap a pixel buffer. Panics if the buffer length does not match the dimensions.
    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image must be at least 1x1");
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        assert_eq!(data.len(), width * height * channels, "pixel buffer length");
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn new_gray(width: usize, height: usize, fill: u8) -> Self {
        Self::from_raw(width, height, 1, vec![fill; width * height])
    }

    pub fn new_rgb(width: usize, height: usize, fill: [u8; 3]) -> Self {
        let data = fill.repeat(width * height);
        Self::from_raw(width, height, 3, data)
    }

    pub fn from_fn_gray(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_raw(width, height, 1, data)
    }

    pub fn from_fn_rgb(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::from_raw(width, height, 3, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Gray intensity at `(x, y)`; for RGB frames this is the luma value.
    #[inline]
    pub fn gray_at(&self, x: usize, y: usize) -> u8 {
        let p = self.pixel(x, y);
        if self.channels == 1 {
            p[0]
        } else {
            luma(p[0], p[1], p[2])
        }
    }

    /// Same frame with three channels (gray replicated).
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Image::from_raw(self.width, self.height, 3, data)
    }

    /// Full-frame box `(0, 0, width, height)`.
    pub fn full_box(&self) -> BoundingBox {
        BoundingBox::new(0.0, 0.0, self.width as f64, self.height as f64)
    }
}

/// Burn the outline of `b` into `img` (converted to RGB) with the given
/// colour and line thickness; parts outside the frame are skipped.
pub fn draw_rect(img: &mut Image, b: &BoundingBox, color: [u8; 3], thickness: usize) {
    if img.channels == 1 {
        *img = img.to_rgb();
    }
    let Some(r) = b.pixel_rect(img.width, img.height) else {
        return;
    };
    let t = thickness.max(1);
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            let edge = x < r.x0 + t || x + t >= r.x1 || y < r.y0 + t || y + t >= r.y1;
            if edge {
                img.pixel_mut(x, y).copy_from_slice(&color);
            }
        }
    }
}

/// Rec. 601 luma with round-half-up, computed in integers so it is exact.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let v = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((v + 500) / 1000).min(255) as u8
}

/// Convert to a single-channel image. Gray inputs are returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.is_gray() {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| luma(p[0], p[1], p[2]))
        .collect();
    Image::from_raw(img.width, img.height, 1, data)
}

/// Column/row source index of a nearest-neighbour resampling.
#[inline]
fn nn_source(origin: f64, extent: f64, out: usize, i: usize, limit: usize) -> usize {
    let s = (origin + (i as f64 + 0.5) * extent / out as f64).floor();
    s.clamp(0.0, (limit - 1) as f64) as usize
}

/// Source index tables for resampling box `b` to `out_w x out_h`.
pub(crate) fn resample_indices(
    img: &Image,
    b: &BoundingBox,
    out_w: usize,
    out_h: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !b.is_valid() || out_w == 0 || out_h == 0 {
        return Err(Error::InvalidBox(b.to_string()));
    }
    if b.intersection_area(&img.full_box()) <= 0.0 {
        return Err(Error::BoxOutsideImage(b.to_string()));
    }
    let xs = (0..out_w)
        .map(|i| nn_source(b.x, b.w, out_w, i, img.width))
        .collect();
    let ys = (0..out_h)
        .map(|j| nn_source(b.y, b.h, out_h, j, img.height))
        .collect();
    Ok((xs, ys))
}

/// Nearest-neighbour resampling of the window `b` into an `out_w x out_h` image.
/// Samples falling outside the frame replicate the nearest border pixel.
pub fn crop_resample(img: &Image, b: &BoundingBox, out_w: usize, out_h: usize) -> Result<Image> {
    let (xs, ys) = resample_indices(img, b, out_w, out_h)?;
    let c = img.channels;
    let mut data = Vec::with_capacity(out_w * out_h * c);
    for &sy in &ys {
        let row = &img.data[sy * img.width * c..(sy + 1) * img.width * c];
        for &sx in &xs {
            data.extend_from_slice(&row[sx * c..sx * c + c]);
        }
    }
    Ok(Image::from_raw(out_w, out_h, c, data))
}

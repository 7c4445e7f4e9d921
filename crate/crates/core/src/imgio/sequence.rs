//! Frame directories and OTB-style ground-truth files.
//!
//! A sequence directory holds one raster per frame; file names sorted
//! lexicographically define temporal order. Ground truth is one `x,y,w,h`
//! line per frame (comma, tab or space separated) in 1-based pixel
//! coordinates; it is converted to 0-based on read and back on write. A row
//! of zeros (or NaNs) marks a frame without annotation.

use std::fs;
use std::path::{Path, PathBuf};

use super::{pnm::read_image, BoundingBox, Image};
use crate::error::{Error, Result};

/// Per-frame annotation; `None` where the object is not annotated.
pub type GroundTruth = Vec<Option<BoundingBox>>;

const FRAME_EXTENSIONS: [&str; 3] = ["ppm", "pgm", "bmp"];

/// Frame files of a sequence directory in temporal order.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let supported = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false);
        if supported && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Load every frame of `dir`. All frames must share the first frame's dimensions.
pub fn load_sequence(dir: &Path) -> Result<Vec<Image>> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let paths = frame_paths(dir)?;
    if paths.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    let mut frames: Vec<Image> = Vec::with_capacity(paths.len());
    for (index, path) in paths.iter().enumerate() {
        let img = read_image(path)?;
        if let Some(first) = frames.first() {
            if img.width() != first.width() || img.height() != first.height() {
                return Err(Error::MixedDimensions {
                    index,
                    path: path.clone(),
                    got_w: img.width(),
                    got_h: img.height(),
                    want_w: first.width(),
                    want_h: first.height(),
                });
            }
        }
        frames.push(img);
    }
    Ok(frames)
}

pub fn parse_ground_truth(text: &str) -> Result<GroundTruth> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(Error::GroundTruth {
                line: i + 1,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut v = [0f64; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| Error::GroundTruth {
                line: i + 1,
                reason: format!("not a number: {f:?}"),
            })?;
        }
        let absent = v.iter().all(|&x| x == 0.0) || v.iter().any(|x| x.is_nan());
        if absent {
            out.push(None);
            continue;
        }
        if v[2] <= 0.0 || v[3] <= 0.0 {
            return Err(Error::GroundTruth {
                line: i + 1,
                reason: "non-positive width or height".into(),
            });
        }
        out.push(Some(BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3])));
    }
    Ok(out)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text)
}

pub fn format_ground_truth(gt: &[Option<BoundingBox>]) -> String {
    let mut s = String::new();
    for b in gt {
        match b {
            Some(b) => s.push_str(&format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h)),
            None => s.push_str("0,0,0,0\n"),
        }
    }
    s
}

pub fn write_ground_truth(path: &Path, gt: &[Option<BoundingBox>]) -> Result<()> {
    fs::write(path, format_ground_truth(gt)).map_err(|e| Error::io(path, e))
}

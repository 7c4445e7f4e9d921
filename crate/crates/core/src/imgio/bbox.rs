use std::fmt;

/// Axis-aligned box in pixel coordinates. `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Integer pixel span `[x0, x1) x [y0, y1)` of a box after rounding and clamping to a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[inline]
fn round_px(v: f64) -> f64 {
    (v + 0.5).floor()
}

impl BoundingBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Box of size `w x h` centered at `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.x.is_finite() && self.y.is_finite()
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// Intersection over union, in `[0, 1]`.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).min(1.0)
    }

    /// Euclidean distance between box centers.
    pub fn center_distance(&self, other: &BoundingBox) -> f64 {
        let (ax, ay) = self.center();
        let (bx, by) = other.center();
        (ax - bx).hypot(ay - by)
    }

    /// Shift the box (size unchanged) so it lies inside a `frame_w x frame_h` frame.
    /// Boxes larger than the frame are cropped to it.
    pub fn clamp_to(&self, frame_w: usize, frame_h: usize) -> BoundingBox {
        let fw = frame_w as f64;
        let fh = frame_h as f64;
        let w = self.w.min(fw);
        let h = self.h.min(fh);
        let x = self.x.clamp(0.0, fw - w);
        let y = self.y.clamp(0.0, fh - h);
        BoundingBox::new(x, y, w, h)
    }

    /// Rounded pixel span clipped to the frame; `None` when the clipped span is empty.
    pub fn pixel_rect(&self, frame_w: usize, frame_h: usize) -> Option<PixelRect> {
        let x0 = round_px(self.x).clamp(0.0, frame_w as f64) as usize;
        let y0 = round_px(self.y).clamp(0.0, frame_h as f64) as usize;
        let x1 = round_px(self.right()).clamp(0.0, frame_w as f64) as usize;
        let y1 = round_px(self.bottom()).clamp(0.0, frame_h as f64) as usize;
        (x1 > x0 && y1 > y0).then_some(PixelRect { x0, y0, x1, y1 })
    }

    /// Total order used to break ties: smaller area first, then `(x, y)` lexicographic.
    pub fn tie_order(&self, other: &BoundingBox) -> std::cmp::Ordering {
        self.area()
            .total_cmp(&other.area())
            .then(self.x.total_cmp(&other.x))
            .then(self.y.total_cmp(&other.y))
            .then(self.w.total_cmp(&other.w))
            .then(self.h.total_cmp(&other.h))
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x, self.y, self.w, self.h)
    }
}

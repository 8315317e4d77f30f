use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::frame::{quantize_celsius, TemperatureFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresenceParams {
    /// Pixels at least this much above ambient (°C) count as warm.
    pub min_delta: f64,
    /// Smaller warm components are ignored.
    pub min_area: usize,
    /// Component area (pixels) that earns full confidence.
    pub expected_body_area: f64,
}

impl Default for PresenceParams {
    fn default() -> Self {
        Self { min_delta: 2.0, min_area: 6, expected_body_area: 60.0 }
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn expanded(&self, margin: usize, width: usize, height: usize) -> BoundingBox {
        BoundingBox {
            x0: self.x0.saturating_sub(margin),
            y0: self.y0.saturating_sub(margin),
            x1: (self.x1 + margin).min(width),
            y1: (self.y1 + margin).min(height),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresenceDetection {
    pub bbox: BoundingBox,
    pub confidence: f64,
    /// Component centroid in continuous pixel coordinates.
    pub center: (f64, f64),
    pub area: usize,
}

/// Median pixel temperature, a robust room-temperature estimate when the
/// subject covers less than half the frame.
pub fn estimate_ambient(frame: &TemperatureFrame) -> f64 {
    let mut v: Vec<i16> = frame.grid.data().to_vec();
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable(mid);
    *m as f64 / 100.0
}

/// Largest 8-connected component of warm pixels. Equal areas go to the
/// component with the higher mean temperature, then to the one found first
/// in row-major order.
pub fn detect_presence(frame: &TemperatureFrame, ambient: f64, params: &PresenceParams) -> Option<PresenceDetection> {
    let (w, h) = frame.grid.dims();
    let threshold = ambient + params.min_delta;
    let warm: Vec<bool> = frame.grid.data().iter().map(|&c| c as f64 / 100.0 >= threshold).collect();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut best: Option<(usize, f64, PresenceDetection)> = None;
    for start in 0..w * h {
        if !warm[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut area, mut sum_t, mut sx, mut sy) = (0usize, 0.0, 0.0, 0.0);
        let mut bbox = BoundingBox { x0: usize::MAX, y0: usize::MAX, x1: 0, y1: 0 };
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            sum_t += frame.grid.data()[i] as f64 / 100.0;
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            bbox.x0 = bbox.x0.min(x);
            bbox.y0 = bbox.y0.min(y);
            bbox.x1 = bbox.x1.max(x + 1);
            bbox.y1 = bbox.y1.max(y + 1);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if warm[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let mean = sum_t / area as f64;
        let better = match &best {
            None => true,
            Some((a, m, _)) => area > *a || (area == *a && mean > *m),
        };
        if better {
            let det = PresenceDetection {
                bbox,
                confidence: (area as f64 / params.expected_body_area).clamp(0.0, 1.0),
                center: (sx / area as f64, sy / area as f64),
                area,
            };
            best = Some((area, mean, det));
        }
    }
    best.map(|(_, _, d)| d).filter(|d| d.area >= params.min_area.max(1))
}

/// Sets every pixel outside the detection's box, grown by `margin`, to
/// `ambient`.
pub fn mask_frame(
    frame: &TemperatureFrame,
    det: &PresenceDetection,
    margin: usize,
    ambient: f64,
) -> Result<TemperatureFrame, MotionError> {
    let (w, h) = frame.grid.dims();
    let b = det.bbox;
    if b.x0 >= b.x1 || b.y0 >= b.y1 || b.x1 > w || b.y1 > h {
        return Err(MotionError::OutOfBounds(b));
    }
    let keep = b.expanded(margin, w, h);
    let fill = quantize_celsius(ambient);
    let mut out = frame.clone();
    for y in 0..h {
        for x in 0..w {
            if !keep.contains(x, y) {
                *out.grid.get_mut(x, y) = fill;
            }
        }
    }
    Ok(out)
}

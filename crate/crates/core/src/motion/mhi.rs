use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::frame::TemperatureFrame;
use crate::grid::Grid;

/// Fixed normalization range, degrees Celsius.
pub const NORM_MIN_C: f64 = -40.0;
pub const NORM_MAX_C: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MhiParams {
    /// Sigmoid sharpness.
    pub k: f64,
    /// Activation level in normalized temperature units.
    pub theta: f64,
    /// Per-frame decay, in (0, 1).
    pub gamma: f64,
}

impl Default for MhiParams {
    fn default() -> Self {
        Self { k: 50.0, theta: 0.05, gamma: 0.9 }
    }
}

impl MhiParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(MotionError::InvalidParams(format!("k = {} must be positive", self.k)));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(MotionError::InvalidParams(format!("theta = {} must be non-negative", self.theta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(MotionError::InvalidParams(format!("gamma = {} must lie in (0, 1)", self.gamma)));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn normalize_celsius(t: f64) -> f64 {
    (t - NORM_MIN_C) / (NORM_MAX_C - NORM_MIN_C)
}

/// Motion history grid with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionHistoryImage {
    grid: Grid<f64>,
    timestamp: f64,
}

impl MotionHistoryImage {
    pub fn zeros(width: usize, height: usize, timestamp: f64) -> Self {
        Self { grid: Grid::filled(width, height, 0.0), timestamp }
    }

    pub fn new(grid: Grid<f64>, timestamp: f64) -> Result<Self, MotionError> {
        if let Some(i) = grid.data().iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(MotionError::InvalidParams(format!(
                "history value {} at index {i} is outside [0, 1]",
                grid.data()[i]
            )));
        }
        Ok(Self { grid, timestamp })
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn with_timestamp(mut self, timestamp: f64) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn max(&self) -> f64 {
        self.grid.data().iter().cloned().fold(0.0, f64::max)
    }
}

fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<(), MotionError> {
    if expected == found {
        Ok(())
    } else {
        Err(MotionError::DimensionMismatch { expected, found })
    }
}

/// `σ(k (|x_t - x_{t-1}| - θ))` per pixel on frames normalized over the
/// fixed sensor range.
pub fn soft_motion_mask(
    cur: &TemperatureFrame,
    prev: &TemperatureFrame,
    params: &MhiParams,
) -> Result<Grid<f64>, MotionError> {
    check_dims(cur.grid.dims(), prev.grid.dims())?;
    let data = cur
        .grid
        .data()
        .iter()
        .zip(prev.grid.data())
        .map(|(&a, &b)| {
            let diff = (normalize_celsius(a as f64 / 100.0) - normalize_celsius(b as f64 / 100.0)).abs();
            sigmoid(params.k * (diff - params.theta))
        })
        .collect();
    Ok(Grid::from_vec(cur.width(), cur.height(), data).expect("same size as the input"))
}

/// `M_t = max(γ M_{t-1}, m_{t-1})`. The result keeps the previous timestamp.
pub fn mhi_update(
    prev_mhi: &MotionHistoryImage,
    prev_mask: &Grid<f64>,
    gamma: f64,
) -> Result<MotionHistoryImage, MotionError> {
    check_dims(prev_mhi.grid.dims(), prev_mask.dims())?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(MotionError::InvalidParams(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    let (w, h) = prev_mhi.grid.dims();
    let data = prev_mhi.grid.data().iter().zip(prev_mask.data()).map(|(&m, &mask)| (gamma * m).max(mask)).collect();
    MotionHistoryImage::new(Grid::from_vec(w, h, data).expect("same size"), prev_mhi.timestamp)
}

/// Streaming MHI for one sensor. The history at frame `t` uses the mask of
/// frame `t - 1`, so a change shows up one frame after it happens.
#[derive(Debug, Clone)]
pub struct MhiTracker {
    params: MhiParams,
    prev_frame: Option<TemperatureFrame>,
    prev_mask: Option<Grid<f64>>,
    mhi: Option<MotionHistoryImage>,
}

impl MhiTracker {
    pub fn new(params: MhiParams) -> Result<Self, MotionError> {
        params.validate()?;
        Ok(Self { params, prev_frame: None, prev_mask: None, mhi: None })
    }

    pub fn params(&self) -> &MhiParams {
        &self.params
    }

    pub fn current(&self) -> Option<&MotionHistoryImage> {
        self.mhi.as_ref()
    }

    /// Consumes the next frame and returns the history for it. The first
    /// frame, and the frame after a size change, start from zero.
    pub fn push(&mut self, frame: &TemperatureFrame) -> Result<&MotionHistoryImage, MotionError> {
        let ts = frame.timestamp_secs();
        let same_size = self.prev_frame.as_ref().is_some_and(|p| p.grid.dims() == frame.grid.dims());
        let next = match (&self.mhi, &self.prev_mask) {
            (Some(m), Some(mask)) if same_size => mhi_update(m, mask, self.params.gamma)?.with_timestamp(ts),
            (Some(m), None) if same_size => {
                MotionHistoryImage::new(m.grid.map(|v| self.params.gamma * v), ts)?
            }
            _ => MotionHistoryImage::zeros(frame.width(), frame.height(), ts),
        };
        self.prev_mask = match &self.prev_frame {
            Some(prev) if same_size => Some(soft_motion_mask(frame, prev, &self.params)?),
            _ => None,
        };
        self.prev_frame = Some(frame.clone());
        Ok(self.mhi.insert(next))
    }

    pub fn reset(&mut self) {
        self.prev_frame = None;
        self.prev_mask = None;
        self.mhi = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(c: f64, ts_us: u64) -> TemperatureFrame {
        TemperatureFrame::uniform(4, 3, c, ts_us, 0)
    }

    #[test]
    fn identical_frames_give_the_closed_form_floor() {
        let m = soft_motion_mask(&frame(25.0, 0), &frame(25.0, 1), &MhiParams::default()).unwrap();
        let expected = 1.0 / (1.0 + 2.5f64.exp());
        assert!(m.data().iter().all(|&v| (v - expected).abs() < 1e-15));
        assert!((expected - 0.0759).abs() < 1e-4);
    }

    #[test]
    fn difference_at_theta_is_the_midpoint() {
        // 8 degrees is 0.05 of the 160 degree range
        let m = soft_motion_mask(&frame(30.0, 0), &frame(22.0, 1), &MhiParams::default()).unwrap();
        assert!(m.data().iter().all(|&v| (v - 0.5).abs() < 1e-12), "{:?}", m.data());
    }

    #[test]
    fn full_range_difference_saturates() {
        let p = MhiParams { k: 500.0, ..MhiParams::default() };
        let m = soft_motion_mask(&frame(120.0, 0), &frame(-40.0, 1), &p).unwrap();
        assert!(m.data().iter().all(|&v| v > 1.0 - 1e-9));
    }

    #[test]
    fn update_follows_the_recursion() {
        let mut mhi = MotionHistoryImage::zeros(1, 1, 0.0);
        let mut seen = Vec::new();
        for mask in [1.0, 0.0, 0.0] {
            mhi = mhi_update(&mhi, &Grid::filled(1, 1, mask), 0.9).unwrap();
            seen.push(mhi.grid().data()[0]);
        }
        assert_eq!(seen, vec![1.0, 0.9, 0.9 * 0.9]);
    }

    #[test]
    fn constant_full_mask_is_a_fixed_point() {
        let mut mhi = MotionHistoryImage::zeros(2, 2, 0.0);
        for _ in 0..50 {
            mhi = mhi_update(&mhi, &Grid::filled(2, 2, 1.0), 0.9).unwrap();
        }
        assert!(mhi.grid().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let err = soft_motion_mask(&frame(1.0, 0), &TemperatureFrame::uniform(3, 3, 1.0, 0, 0), &MhiParams::default());
        assert!(matches!(err, Err(MotionError::DimensionMismatch { .. })));
        let err = mhi_update(&MotionHistoryImage::zeros(2, 2, 0.0), &Grid::filled(3, 2, 0.0), 0.9);
        assert!(matches!(err, Err(MotionError::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(MhiTracker::new(MhiParams { gamma: 1.0, ..MhiParams::default() }).is_err());
        assert!(MhiTracker::new(MhiParams { k: 0.0, ..MhiParams::default() }).is_err());
        assert!(MhiTracker::new(MhiParams { theta: -0.1, ..MhiParams::default() }).is_err());
    }

    #[test]
    fn tracker_lags_one_frame() {
        let mut t = MhiTracker::new(MhiParams::default()).unwrap();
        assert_eq!(t.push(&frame(22.0, 0)).unwrap().max(), 0.0);
        assert_eq!(t.push(&frame(120.0, 50_000)).unwrap().max(), 0.0);
        let m = t.push(&frame(120.0, 100_000)).unwrap();
        assert!(m.max() > 0.99);
        assert!((m.timestamp() - 0.1).abs() < 1e-12);
    }
}

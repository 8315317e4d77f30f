//! Sensor frames as they travel over the wire: temperatures in signed
//! centi-degrees Celsius.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

pub const REFERENCE_WIDTH: usize = 80;
pub const REFERENCE_HEIGHT: usize = 62;
pub const REFERENCE_RATE_HZ: f64 = 20.0;

/// Sensor range, centi-degrees Celsius.
pub const SENSOR_MIN_CENTI: i16 = -4000;
pub const SENSOR_MAX_CENTI: i16 = 12000;

/// Real-valued temperature image in degrees Celsius.
pub type ThermalImage = Grid<f64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemperatureFrame {
    pub grid: Grid<i16>,
    pub timestamp_us: u64,
    pub seq_no: u32,
}

impl TemperatureFrame {
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn celsius(&self, x: usize, y: usize) -> f64 {
        f64::from(*self.grid.get(x, y)) / 100.0
    }

    pub fn to_celsius(&self) -> ThermalImage {
        self.grid.map(|&c| f64::from(c) / 100.0)
    }

    pub fn timestamp_secs(&self) -> f64 {
        self.timestamp_us as f64 * 1e-6
    }

    /// Rounds to centi-degrees and clamps into the sensor range.
    pub fn quantize(image: &ThermalImage, timestamp_us: u64, seq_no: u32) -> Self {
        let grid = image.map(|&t| quantize_celsius(t));
        Self { grid, timestamp_us, seq_no }
    }

    /// A frame holding one temperature everywhere.
    pub fn uniform(width: usize, height: usize, celsius: f64, timestamp_us: u64, seq_no: u32) -> Self {
        Self { grid: Grid::filled(width, height, quantize_celsius(celsius)), timestamp_us, seq_no }
    }
}

pub fn quantize_celsius(t: f64) -> i16 {
    let c = (t * 100.0).round();
    if c.is_nan() {
        return 0;
    }
    c.clamp(f64::from(SENSOR_MIN_CENTI), f64::from(SENSOR_MAX_CENTI)) as i16
}

pub fn seconds_to_us(t: f64) -> u64 {
    (t.max(0.0) * 1e6).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_clamps_to_sensor_range() {
        assert_eq!(quantize_celsius(21.234), 2123);
        assert_eq!(quantize_celsius(-80.0), SENSOR_MIN_CENTI);
        assert_eq!(quantize_celsius(500.0), SENSOR_MAX_CENTI);
        assert_eq!(quantize_celsius(-0.004), 0);
    }
}

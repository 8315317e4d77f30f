use serde::{Deserialize, Serialize};

use super::ThermalError;

/// Default PSF support, in multiples of the scale `a`.
pub const DEFAULT_TRUNCATION: f64 = 6.0;

/// Discrete velocity-dependent motion-blur kernel.
///
/// `taps[k]` is the weight of a displacement of `k` pixels along the motion
/// direction; `taps[0]` is the undisplaced tap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfKernel {
    taps: Vec<f64>,
    scale: f64,
}

impl PsfKernel {
    pub fn identity() -> Self {
        Self { taps: vec![1.0], scale: 0.0 }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// `a = v r τ`, in pixels.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_identity(&self) -> bool {
        self.taps.len() == 1
    }

    /// Mean displacement in pixels.
    pub fn mean(&self) -> f64 {
        self.taps.iter().enumerate().map(|(k, w)| k as f64 * w).sum()
    }
}

/// Discretizes `h(x) = exp(-x / a) / a` with `a = v r τ`, cut at
/// `truncation * a`, onto integer displacements by linear interpolation:
/// tap `k` collects `∫ h(x) max(0, 1 - |x - k|) dx`. The taps keep the mean
/// of the truncated continuous PSF, and are renormalized to unit sum.
///
/// `v` is the speed in m/s, `r` the sampling density in pixels per meter at
/// the moving surface and `tau` the sensor response time in seconds.
pub fn psf_kernel(v: f64, r: f64, tau: f64, truncation: f64) -> Result<PsfKernel, ThermalError> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(ThermalError::InvalidPsf(format!("speed {v} must be finite and non-negative")));
    }
    if !(r > 0.0 && r.is_finite() && tau > 0.0 && tau.is_finite()) {
        return Err(ThermalError::InvalidPsf(format!("r = {r} and tau = {tau} must be positive")));
    }
    if !(truncation > 0.0 && truncation.is_finite()) {
        return Err(ThermalError::InvalidPsf(format!("truncation {truncation} must be positive")));
    }
    let a = v * r * tau;
    if a == 0.0 {
        return Ok(PsfKernel::identity());
    }
    let cut = truncation * a;
    // mass and first moment of h on [0, x]
    let mass = |x: f64| -(-x / a).exp_m1();
    let moment = |x: f64| a * mass(x) - x * (-x / a).exp();
    let mut taps = Vec::with_capacity(cut.ceil() as usize + 2);
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let lo = (kf - 1.0).max(0.0);
        if lo >= cut {
            break;
        }
        let mut w = 0.0;
        let hi = kf.min(cut);
        if lo < hi {
            w += (moment(hi) - moment(lo)) - (kf - 1.0) * (mass(hi) - mass(lo));
        }
        if kf < cut {
            let hi = (kf + 1.0).min(cut);
            w += (kf + 1.0) * (mass(hi) - mass(kf)) - (moment(hi) - moment(kf));
        }
        taps.push(w.max(0.0));
        k += 1;
    }
    while taps.len() > 1 && taps.last() == Some(&0.0) {
        taps.pop();
    }
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|w| *w /= total);
    // compensated re-normalization so the sum lands within an ulp or two of 1
    let residual = 1.0 - taps.iter().sum::<f64>();
    taps[0] += residual;
    Ok(PsfKernel { taps, scale: a })
}

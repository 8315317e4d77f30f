//! Training objectives as plain numeric functions: classification cross
//! entropy, balance regression error, the combined multitask loss, the
//! contrastive InfoNCE term and the pretraining sum.

use serde::{Deserialize, Serialize};

const PROB_EPS: f64 = 1e-12;
const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no frame has both a prediction and a target")]
    NoDefinedFrames,
    #[error("zero-norm embedding")]
    ZeroNorm,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("non-finite value")]
    NonFinite,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
}

/// Embedding vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, LossError> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(LossError::NonFinite)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = LossError;

    fn try_from(v: Vec<f64>) -> Result<Self, LossError> {
        Self::new(v)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    /// Balance weight of the multitask loss.
    pub lambda: f64,
    /// Balance weight of the pretraining loss.
    pub lambda_b: f64,
    /// Contrastive weight of the pretraining loss.
    pub lambda_ctr: f64,
    /// InfoNCE temperature.
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda: 1.0, lambda_b: 1.0, lambda_ctr: 1.0, tau: 0.1 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        for (name, v) in [("lambda", self.lambda), ("lambda_b", self.lambda_b), ("lambda_ctr", self.lambda_ctr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(LossError::InvalidWeight(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(LossError::InvalidWeight(format!("tau = {} must be positive", self.tau)));
        }
        Ok(())
    }
}

/// `-[y ln p + (1 - y) ln(1 - p)]` with `p` clamped to `[1e-12, 1 - 1e-12]`.
pub fn binary_cross_entropy(p_hat: f64, y: bool) -> f64 {
    let p = p_hat.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y {
        -p.ln()
    } else {
        -(-p).ln_1p()
    }
}

/// Mean cross entropy over a batch.
pub fn mean_binary_cross_entropy(p_hat: &[f64], y: &[bool]) -> Result<f64, LossError> {
    if p_hat.len() != y.len() {
        return Err(LossError::LengthMismatch(p_hat.len(), y.len()));
    }
    if p_hat.is_empty() {
        return Err(LossError::NoDefinedFrames);
    }
    Ok(p_hat.iter().zip(y).map(|(&p, &t)| binary_cross_entropy(p, t)).sum::<f64>() / p_hat.len() as f64)
}

/// Mean squared error over the frames where both series are defined.
pub fn balance_mse(pred: &[Option<f64>], truth: &[Option<f64>]) -> Result<f64, LossError> {
    if pred.len() != truth.len() {
        return Err(LossError::LengthMismatch(pred.len(), truth.len()));
    }
    let (sum, n) = pred
        .iter()
        .zip(truth)
        .filter_map(|(p, t)| Some((p.as_ref()?, t.as_ref()?)))
        .fold((0.0, 0usize), |(s, n), (p, t)| (s + (p - t) * (p - t), n + 1));
    if n == 0 {
        return Err(LossError::NoDefinedFrames);
    }
    Ok(sum / n as f64)
}

/// `cls + λ bal`.
pub fn multitask_loss(cls: f64, bal: f64, lambda: f64) -> f64 {
    cls + lambda * bal
}

/// Cosine similarity with each norm floored at 1e-12.
pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64, LossError> {
    if a.len() != b.len() {
        return Err(LossError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok(dot / (a.norm().max(NORM_FLOOR) * b.norm().max(NORM_FLOOR)))
}

/// `-ln( exp(s(z1, z2)/τ) / Σ_k exp(s(z1, z_k)/τ) )` over the candidates
/// `{z2} ∪ negatives`, with `s` the cosine similarity.
pub fn infonce(z1: &FeatureVector, z2: &FeatureVector, negatives: &[FeatureVector], tau: f64) -> Result<f64, LossError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(LossError::InvalidWeight(format!("tau = {tau} must be positive")));
    }
    for v in std::iter::once(z1).chain(std::iter::once(z2)).chain(negatives) {
        if v.norm() == 0.0 {
            return Err(LossError::ZeroNorm);
        }
    }
    let pos = cosine_similarity(z1, z2)? / tau;
    let logits = std::iter::once(Ok(pos))
        .chain(negatives.iter().map(|n| Ok(cosine_similarity(z1, n)? / tau)))
        .collect::<Result<Vec<f64>, LossError>>()?;
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(((max - pos) + log_sum).max(0.0))
}

/// `cls + λ_b bal + λ_ctr ctr`.
pub fn pretrain_loss(cls: f64, bal: f64, ctr: f64, weights: &LossWeights) -> f64 {
    cls + weights.lambda_b * bal + weights.lambda_ctr * ctr
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bce_closed_forms() {
        assert!((binary_cross_entropy(0.5, true) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((binary_cross_entropy(0.5, false) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(binary_cross_entropy(1.0, true) <= 1e-11);
        assert!(binary_cross_entropy(0.0, false) <= 1e-11);
        assert!(binary_cross_entropy(0.0, true).is_finite());
    }

    #[test]
    fn mse_closed_forms() {
        let t = [Some(0.1), None, Some(-0.2), Some(0.05)];
        assert_eq!(balance_mse(&t, &t).unwrap(), 0.0);
        let shifted: Vec<Option<f64>> = t.iter().map(|v| v.map(|x| x + 0.3)).collect();
        assert!((balance_mse(&shifted, &t).unwrap() - 0.09).abs() < 1e-12);
        assert_eq!(balance_mse(&[None], &[Some(1.0)]), Err(LossError::NoDefinedFrames));
        assert_eq!(balance_mse(&[None], &[]), Err(LossError::LengthMismatch(1, 0)));
    }

    #[test]
    fn weighted_sums() {
        assert_eq!(multitask_loss(0.7, 5.0, 0.0), 0.7);
        assert!((multitask_loss(0.2, 0.1, 1.0) - 0.3).abs() < 1e-15);
        let w = LossWeights { lambda_b: 0.5, lambda_ctr: 0.1, ..LossWeights::default() };
        assert!((pretrain_loss(0.2, 0.4, 1.0, &w) - 0.5).abs() < 1e-15);
        let w0 = LossWeights { lambda_b: 0.0, lambda_ctr: 0.0, ..LossWeights::default() };
        assert_eq!(pretrain_loss(0.2, 0.4, 1.0, &w0), 0.2);
    }

    #[test]
    fn infonce_closed_forms() {
        let z = fv(&[1.0, 0.0]);
        let neg = fv(&[0.0, 1.0]);
        let l = infonce(&z, &z, &[neg], 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((l + (e / (e + 1.0)).ln()).abs() < 1e-12);
        let negs = vec![z.clone(); 4];
        assert!((infonce(&z, &z, &negs, 0.1).unwrap() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn infonce_rejects_bad_input() {
        let z = fv(&[1.0, 0.0]);
        assert_eq!(infonce(&z, &fv(&[0.0, 0.0]), &[], 0.1), Err(LossError::ZeroNorm));
        assert_eq!(infonce(&z, &fv(&[1.0]), &[], 0.1), Err(LossError::DimensionMismatch(2, 1)));
        assert!(infonce(&z, &z, &[], 0.0).is_err());
        assert!(FeatureVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn weights_validate() {
        assert!(LossWeights::default().validate().is_ok());
        assert!(LossWeights { tau: 0.0, ..LossWeights::default() }.validate().is_err());
        assert!(LossWeights { lambda: -1.0, ..LossWeights::default() }.validate().is_err());
    }
}

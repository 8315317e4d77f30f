use super::MotionError;

fn check(m: &[Vec<f64>], n: usize) -> Result<(), MotionError> {
    for (row, r) in m.iter().enumerate() {
        if r.len() != n {
            return Err(MotionError::Shape { row, len: r.len(), n });
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(MotionError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Row-wise `softmax(scores + bias)`, where `scores` already holds
/// `q kᵀ / √d_h`.
pub fn biased_attention(scores: &[Vec<f64>], bias: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, MotionError> {
    let n = scores.len();
    if n == 0 {
        return Err(MotionError::Shape { row: 0, len: 0, n: 0 });
    }
    if bias.len() != n {
        return Err(MotionError::Shape { row: bias.len().min(n), len: bias.len(), n });
    }
    check(scores, n)?;
    check(bias, n)?;
    let out = scores
        .iter()
        .zip(bias)
        .map(|(s, b)| {
            let logits: Vec<f64> = s.iter().zip(b).map(|(s, b)| s + b).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        })
        .collect();
    Ok(out)
}

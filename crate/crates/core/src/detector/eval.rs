use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DetectorConfig, DetectorError, FallEvent, WindowRecord};
use crate::frame::REFERENCE_RATE_HZ;

/// A true fall: the subject is falling or down over `[start, end]` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthFall {
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<f64>,
}

/// Truth labels of a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScenario {
    pub falls: Vec<TruthFall>,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallMatch {
    pub truth: usize,
    pub event: usize,
    /// Detected minus true impact time, when both are known.
    pub impact_error: Option<f64>,
}

/// Detection rate is per true fall; false-alarm rate is per evaluated
/// window outside every fall. Undefined rates are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub dr: Option<f64>,
    pub far: Option<f64>,
    pub matched_events: usize,
    pub missed_events: usize,
    /// Events that matched no true fall.
    pub false_events: usize,
    pub false_windows: usize,
    pub total_true_falls: usize,
    pub total_nonfall_windows: usize,
    pub matches: Vec<FallMatch>,
}

fn overlaps_fall(t0: f64, t1: f64, truth: &LabeledScenario, tol: f64) -> bool {
    truth.falls.iter().any(|f| t0 <= f.end + tol && t1 >= f.start - tol)
}

/// Greedy in truth order: each fall takes the earliest unused event whose
/// impact (or onset) lies within `tol` of the fall interval.
fn match_events(pred: &[FallEvent], truth: &LabeledScenario, tol: f64) -> (Vec<FallMatch>, Vec<bool>) {
    let mut used = vec![false; pred.len()];
    let mut matches = Vec::new();
    for (ti, f) in truth.falls.iter().enumerate() {
        let hit = pred.iter().enumerate().find(|(ei, e)| {
            let t = e.reference_time();
            !used[*ei] && t >= f.start - tol && t <= f.end + tol
        });
        if let Some((ei, e)) = hit {
            used[ei] = true;
            let impact_error = match (e.t_impact, f.impact) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
            matches.push(FallMatch { truth: ti, event: ei, impact_error });
        }
    }
    (matches, used)
}

fn report(matches: Vec<FallMatch>, used: &[bool], truth: &LabeledScenario, false_windows: usize, nonfall: usize) -> DetectionReport {
    let total = truth.falls.len();
    DetectionReport {
        dr: (total > 0).then(|| matches.len() as f64 / total as f64),
        far: (nonfall > 0).then(|| false_windows as f64 / nonfall as f64),
        matched_events: matches.len(),
        missed_events: total - matches.len(),
        false_events: used.iter().filter(|u| !**u).count(),
        false_windows,
        total_true_falls: total,
        total_nonfall_windows: nonfall,
        matches,
    }
}

/// Scores events against truth using the detector's window log. Windows
/// that overlap a fall (padded by `match_tolerance`) are left out of the
/// FAR; so are presence-gated windows unless the config includes them.
pub fn evaluate_with_windows(
    pred: &[FallEvent],
    windows: &[WindowRecord],
    truth: &LabeledScenario,
    config: &DetectorConfig,
    match_tolerance: f64,
) -> DetectionReport {
    let (matches, used) = match_events(pred, truth, match_tolerance);
    let nonfall: Vec<&WindowRecord> = windows
        .iter()
        .filter(|w| !overlaps_fall(w.t_start, w.t_end, truth, match_tolerance))
        .filter(|w| config.include_absent_windows || !w.gated)
        .collect();
    let false_windows = nonfall.iter().filter(|w| w.fired).count();
    report(matches, &used, truth, false_windows, nonfall.len())
}

/// Scores events against truth without a window log. Windows are
/// reconstructed from the duration at `frame_rate`, every one counts as
/// evaluated, and each unmatched event counts the non-fall windows inside
/// its span as false.
pub fn evaluate(
    pred: &[FallEvent],
    truth: &LabeledScenario,
    config: &DetectorConfig,
    match_tolerance: f64,
    frame_rate: Option<f64>,
) -> DetectionReport {
    let rate = frame_rate.unwrap_or(REFERENCE_RATE_HZ);
    let (matches, used) = match_events(pred, truth, match_tolerance);
    let frames = (truth.duration * rate).round() as usize;
    let mut spans = Vec::new();
    let mut w = 0;
    while w * config.stride + config.window_len <= frames {
        let s = w * config.stride;
        let (t0, t1) = (s as f64 / rate, (s + config.window_len - 1) as f64 / rate);
        if !overlaps_fall(t0, t1, truth, match_tolerance) {
            spans.push((t0, t1));
        }
        w += 1;
    }
    let eps = 0.5 / rate;
    let false_windows = spans
        .iter()
        .filter(|(t0, t1)| {
            pred.iter().zip(&used).any(|(e, u)| !u && *t0 >= e.span_start - eps && *t1 <= e.span_end + eps)
        })
        .count();
    report(matches, &used, truth, false_windows, spans.len())
}

pub fn write_events(events: &[FallEvent], mut w: impl Write) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_windows(windows: &[WindowRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in windows {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads FallEvent JSONL; blank lines are skipped.
pub fn read_events(r: impl BufRead) -> Result<Vec<FallEvent>, DetectorError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DetectorError::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

pub fn read_truth(text: &str) -> Result<LabeledScenario, DetectorError> {
    serde_json::from_str(text).map_err(|e| DetectorError::Parse { line: e.line(), message: e.to_string() })
}

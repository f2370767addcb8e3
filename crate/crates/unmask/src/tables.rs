//! Row types of the CSV tables and the prediction-versus-data evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unmask_core::experiments::ResultRow;
use unmask_core::model::{evaluate, Evaluation, Prediction, Variant};
use unmask_core::staircase::Track;

use crate::error::{Error, Result};

/// One measured threshold, joined to predictions on
/// `(experiment, alpha, azimuth_deg, mode, t_ms)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredRow {
    pub experiment: String,
    pub alpha: f64,
    pub azimuth_deg: f64,
    pub mode: String,
    pub t_ms: Option<f64>,
    pub threshold_db: f64,
}

fn join_key(experiment: &str, alpha: f64, azimuth_deg: f64, mode: &str, t_ms: Option<f64>) -> String {
    let t = t_ms.map_or_else(|| "-".to_string(), |t| t.to_string());
    format!("{experiment}/a{alpha}/az{azimuth_deg}/{mode}/{t}")
}

impl MeasuredRow {
    pub fn key(&self) -> String {
        join_key(&self.experiment, self.alpha, self.azimuth_deg, &self.mode, self.t_ms)
    }
}

pub fn result_key(r: &ResultRow) -> String {
    join_key(&r.experiment, r.alpha, r.azimuth_deg, &r.mode, r.t_ms)
}

/// Metrics per dataset (experiment) and variant.
pub type EvaluationReport = BTreeMap<String, BTreeMap<Variant, Evaluation>>;

/// Fits the offset and computes RMSE and Pearson correlation of the
/// predicted thresholds (`-benefit`) against the measured ones, separately
/// for each experiment and variant present in the predictions. Every
/// measured row must find a prediction for each of those variants.
pub fn evaluate_tables(predicted: &[ResultRow], measured: &[MeasuredRow]) -> Result<EvaluationReport> {
    let mut by_key: BTreeMap<(String, Variant), f64> = BTreeMap::new();
    for r in predicted {
        if by_key.insert((result_key(r), r.variant), -r.benefit_db).is_some() {
            return Err(Error::Config(format!("duplicate prediction {} ({})", result_key(r), r.variant.name())));
        }
    }
    let mut variants: BTreeMap<String, Vec<Variant>> = BTreeMap::new();
    for r in predicted {
        let v = variants.entry(r.experiment.clone()).or_default();
        if !v.contains(&r.variant) {
            v.push(r.variant);
        }
    }
    let mut unmatched = Vec::new();
    let mut pairs: BTreeMap<(String, Variant), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for m in measured {
        let Some(vs) = variants.get(&m.experiment) else {
            unmatched.push(m.key());
            continue;
        };
        for &v in vs {
            match by_key.get(&(m.key(), v)) {
                Some(&p) => {
                    let e = pairs.entry((m.experiment.clone(), v)).or_default();
                    e.0.push(p);
                    e.1.push(m.threshold_db);
                }
                None => unmatched.push(format!("{} ({})", m.key(), v.name())),
            }
        }
    }
    if !unmatched.is_empty() {
        return Err(Error::Unmatched(unmatched));
    }
    if pairs.is_empty() {
        return Err(Error::Config("no measured row matches a prediction".into()));
    }
    let mut report = EvaluationReport::new();
    for ((exp, v), (p, m)) in pairs {
        report.entry(exp).or_default().insert(v, evaluate(&p, &m)?);
    }
    Ok(report)
}

/// Text table with one line per dataset, RMSE and correlation per variant.
pub fn format_report(report: &EvaluationReport) -> String {
    let mut s = format!(
        "{:<10} {:>4} {:>10} {:>8} {:>10} {:>8}\n",
        "dataset", "n", "RMSE_fast", "r_fast", "RMSE_slow", "r_slow"
    );
    let cell = |e: Option<&Evaluation>| match e {
        Some(e) => (
            format!("{:.2}", e.rmse),
            e.pearson.map_or_else(|| "n/a".into(), |r| format!("{r:.2}")),
        ),
        None => ("-".into(), "-".into()),
    };
    for (exp, m) in report {
        let n = m.values().next().map_or(0, |e| e.n);
        let (rf, pf) = cell(m.get(&Variant::Fast));
        let (rs, ps) = cell(m.get(&Variant::Slow));
        s += &format!("{exp:<10} {n:>4} {rf:>10} {pf:>8} {rs:>10} {ps:>8}\n");
    }
    s
}

/// Long-format row of a prediction's per-band, per-frame breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionCell {
    pub frame_time_s: f64,
    pub band_hz: f64,
    pub bmld_db: f64,
    pub snr_db: f64,
    pub valid: bool,
}

pub fn prediction_cells(p: &Prediction) -> Vec<PredictionCell> {
    let mut out = Vec::with_capacity(p.centers.len() * p.frame_times.len());
    for (f, &t) in p.frame_times.iter().enumerate() {
        for (b, &hz) in p.centers.iter().enumerate() {
            out.push(PredictionCell {
                frame_time_s: t,
                band_hz: hz,
                bmld_db: p.bmld_db[b][f],
                snr_db: p.snr_db[b][f],
                valid: p.valid[b][f],
            });
        }
    }
    out
}

/// Compact summary of a prediction for JSON sidecars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub variant: Variant,
    pub benefit_db: f64,
    pub best_band_hz: f64,
    pub best_frame_time_s: f64,
    pub bands: usize,
    pub frames: usize,
}

impl PredictionSummary {
    pub fn of(p: &Prediction) -> Self {
        let band = p.best[p.best_frame].map_or(0, |(b, _)| b);
        PredictionSummary {
            variant: p.config.variant,
            benefit_db: p.benefit_db,
            best_band_hz: p.centers[band],
            best_frame_time_s: p.frame_times[p.best_frame],
            bands: p.centers.len(),
            frames: p.frame_times.len(),
        }
    }
}

/// Trial log row; `track` identifies the track in multi-track logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub track: usize,
    pub trial: usize,
    pub level: f64,
    pub interval: u32,
    pub response: u32,
    pub correct: bool,
    pub reversal: bool,
    pub step: f64,
}

pub fn trial_rows(track_index: usize, t: &Track) -> impl Iterator<Item = TrialRow> + '_ {
    t.trials.iter().map(move |tr| TrialRow {
        track: track_index,
        trial: tr.trial,
        level: tr.level,
        interval: tr.interval,
        response: tr.response,
        correct: tr.correct,
        reversal: tr.reversal,
        step: tr.step,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub track: usize,
    pub seed: u64,
    pub trials: usize,
    pub reversals: usize,
    pub converged: bool,
    pub threshold_db: Option<f64>,
}

/// Steady-state interaural coherence of one truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcSummaryRow {
    pub alpha: f64,
    pub azimuth_deg: f64,
    pub t_ms: f64,
    pub mean_ic: Option<f64>,
}

/// Short-term coherence of one frame, long format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcFrameRow {
    pub alpha: f64,
    pub azimuth_deg: f64,
    pub t_ms: f64,
    pub frame_time_s: f64,
    pub ic: Option<f64>,
}

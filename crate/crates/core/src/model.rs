//! Binaural unmasking model.
//!
//! Per band and frame, the binaural masking level difference follows the
//! equalization-cancellation closed form
//!
//! ```text
//! R = (k - cos(phi_T - phi_M)) / (k - rho_M),  k = (1 + s_e^2) exp((2 pi f s_d)^2)
//! ```
//!
//! clamped below at 1, and the better-ear SNR is added in dB. The fast
//! variant extracts cues on 24 ms frames and integrates the ratio with a
//! 300 ms leaky integrator; the slow variant extracts cues on 300 ms frames.
//! The benefit is the best band in each frame, maximized over frames.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{analyze, exp_filter, FilterbankSpec, FrameGrid, SignalCues, SILENCE_FLOOR};
use crate::math::power_db;
use crate::stimuli::BinauralSignal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Fast,
    Slow,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Fast, Variant::Slow];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fast => "fast",
            Variant::Slow => "slow",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Variant::Fast),
            "slow" => Ok(Variant::Slow),
            _ => Err(Error::Invalid(alloc::format!("unknown model variant {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub sigma_epsilon: f64,
    /// Time jitter (s).
    pub sigma_delta: f64,
    /// Hop of the 24 ms cue frames (s).
    pub fast_hop: f64,
    /// Hop of the 300 ms cue frames of the slow variant (s).
    pub slow_hop: f64,
    /// Sluggishness integrator of the fast variant (s).
    pub bmld_tau: f64,
    pub snr_tau: f64,
    /// Band centers; `None` selects integer Bark 2 to 22.
    pub filterbank: Option<FilterbankSpec>,
    /// Only 12 ms frames lying entirely inside `[start, end]` (s) compete
    /// for the maximum. Integration still runs over the whole signal.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        ModelConfig {
            variant,
            sigma_epsilon: 0.25,
            sigma_delta: 0.105e-3,
            fast_hop: 0.012,
            slow_hop: 0.150,
            bmld_tau: 0.3,
            snr_tau: 0.2,
            filterbank: None,
            window: None,
        }
    }

    pub fn fast() -> Self {
        Self::new(Variant::Fast)
    }

    pub fn slow() -> Self {
        Self::new(Variant::Slow)
    }

    pub fn with_filterbank(mut self, fb: FilterbankSpec) -> Self {
        self.filterbank = Some(fb);
        self
    }

    pub fn with_window(mut self, start: f64, end: f64) -> Self {
        self.window = Some([start, end]);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some([a, b]) = self.window {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::Invalid("evaluation window needs start < end".into()));
            }
        }
        let positive = [
            ("sigma_epsilon", self.sigma_epsilon),
            ("sigma_delta (s)", self.sigma_delta),
            ("fast hop (s)", self.fast_hop),
            ("slow hop (s)", self.slow_hop),
            ("BMLD time constant (s)", self.bmld_tau),
            ("SNR time constant (s)", self.snr_tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, v));
            }
        }
        Ok(())
    }

    pub fn k(&self, f: f64) -> f64 {
        k_factor(f, self.sigma_epsilon, self.sigma_delta)
    }
}

/// `k(f) = (1 + s_e^2) exp((2 pi f s_d)^2)`.
pub fn k_factor(f: f64, sigma_epsilon: f64, sigma_delta: f64) -> f64 {
    (1.0 + sigma_epsilon * sigma_epsilon) * (2.0 * PI * f * sigma_delta).powi(2).exp()
}

/// Linear BMLD ratio, clamped below at 1 (0 dB).
pub fn bmld_ratio(phi_t: f64, phi_m: f64, rho_m: f64, k: f64) -> f64 {
    ((k - (phi_t - phi_m).cos()) / (k - rho_m)).max(1.0)
}

/// Upper bound of the BMLD in dB for a given `k`, reached for an antiphasic
/// target in a fully coherent masker.
pub fn bmld_ceiling_db(k: f64) -> f64 {
    power_db((k + 1.0) / (k - 1.0))
}

/// `[band][frame]` values with their validity mask.
pub type MaskedMatrix = (Vec<Vec<f64>>, Vec<Vec<bool>>);

/// Better-ear SNR per band and frame, in dB after `tau` integration of the
/// linear ratio. Returns the dB matrix and the validity mask (false where the
/// masker is silent in both ears).
pub fn better_ear_snr_series(
    target: &SignalCues,
    masker: &SignalCues,
    tau: f64,
) -> Result<MaskedMatrix> {
    if target.grid != masker.grid || target.centers != masker.centers {
        return Err(Error::Invalid("target and masker cues are on different grids".into()));
    }
    let hop = target.grid.hop_seconds();
    let mut snr = Vec::with_capacity(target.bands());
    let mut valid = Vec::with_capacity(target.bands());
    for b in 0..target.bands() {
        let mut ratio = Vec::with_capacity(target.frames());
        let mut ok = Vec::with_capacity(target.frames());
        for f in 0..target.frames() {
            let mut best: Option<f64> = None;
            for ear in 0..2 {
                let pm = masker.power[ear][b][f];
                if pm >= SILENCE_FLOOR {
                    let r = target.power[ear][b][f] / pm;
                    best = Some(best.map_or(r, |v: f64| v.max(r)));
                }
            }
            ok.push(best.is_some());
            ratio.push(best.unwrap_or(0.0));
        }
        snr.push(exp_filter(&ratio, tau, hop)?.into_iter().map(power_db).collect());
        valid.push(ok);
    }
    Ok((snr, valid))
}

/// Linear BMLD ratios per band and frame; frames with a silent target or
/// masker count as no unmasking (ratio 1).
fn bmld_ratios(target: &SignalCues, masker: &SignalCues, cfg: &ModelConfig) -> Vec<Vec<f64>> {
    (0..target.bands())
        .map(|b| {
            let k = cfg.k(target.centers[b]);
            (0..target.frames())
                .map(|f| match (target.cues[b][f], masker.cues[b][f]) {
                    (Some(t), Some(m)) => bmld_ratio(t.phi, m.phi, m.rho, k),
                    _ => 1.0,
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub config: ModelConfig,
    pub benefit_db: f64,
    pub centers: Vec<f64>,
    /// Frame centers (s) of the 12 ms grid all matrices live on.
    pub frame_times: Vec<f64>,
    /// `[band][frame]`.
    pub bmld_db: Vec<Vec<f64>>,
    pub snr_db: Vec<Vec<f64>>,
    /// `[band][frame]`, false where the masker is silent.
    pub valid: Vec<Vec<bool>>,
    /// Best band and its combined benefit per frame; `None` if no band is valid.
    pub best: Vec<Option<(usize, f64)>>,
    pub best_frame: usize,
}

impl Prediction {
    /// Recomputes the benefit from the stored matrices.
    pub fn recompute_benefit(&self) -> Option<f64> {
        best_per_frame(&self.bmld_db, &self.snr_db, &self.valid)
            .into_iter()
            .flatten()
            .map(|(_, v)| v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }
}

fn best_per_frame(bmld: &[Vec<f64>], snr: &[Vec<f64>], valid: &[Vec<bool>]) -> Vec<Option<(usize, f64)>> {
    let frames = bmld.first().map_or(0, |b| b.len());
    (0..frames)
        .map(|f| {
            let mut best: Option<(usize, f64)> = None;
            for b in 0..bmld.len() {
                if !valid[b][f] {
                    continue;
                }
                let v = bmld[b][f] + snr[b][f];
                // first band wins ties
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((b, v));
                }
            }
            best
        })
        .collect()
}

/// Pads the shorter signal with zeros so both have the same length.
fn aligned(target: &BinauralSignal, masker: &BinauralSignal) -> Result<(BinauralSignal, BinauralSignal)> {
    if target.fs != masker.fs {
        return Err(Error::SampleRateMismatch {
            expected: target.fs,
            found: masker.fs,
        });
    }
    let len = target.len().max(masker.len());
    Ok((target.clone().resized(len), masker.clone().resized(len)))
}

/// Predicts the binaural benefit of `target` against `masker` (separate,
/// onset-aligned two-ear signals).
pub fn predict(target: &BinauralSignal, masker: &BinauralSignal, cfg: &ModelConfig) -> Result<Prediction> {
    cfg.validate()?;
    let (target, masker) = aligned(target, masker)?;
    if target.is_empty() {
        return Err(Error::NoValidFrame);
    }
    let fs = target.fs;
    let fb = match &cfg.filterbank {
        Some(fb) => fb.clone(),
        None => FilterbankSpec::standard(fs)?,
    };
    let fast = FrameGrid::new(fs, cfg.fast_hop, target.len())?;
    let mut grids = vec![fast.clone()];
    if cfg.variant == Variant::Slow {
        grids.push(FrameGrid::new(fs, cfg.slow_hop, target.len())?);
    }
    let t_cues = analyze(&target, &fb, &grids)?;
    let m_cues = analyze(&masker, &fb, &grids)?;

    let (snr_db, mut valid) = better_ear_snr_series(&t_cues[0], &m_cues[0], cfg.snr_tau)?;
    if let Some([a, b]) = cfg.window {
        for j in 0..fast.frames {
            let start = fast.start(j) as f64 / fs;
            let end = (fast.start(j) + fast.len) as f64 / fs;
            if start < a || end > b {
                valid.iter_mut().for_each(|band| band[j] = false);
            }
        }
    }
    let bmld_db: Vec<Vec<f64>> = match cfg.variant {
        Variant::Fast => bmld_ratios(&t_cues[0], &m_cues[0], cfg)
            .iter()
            .map(|r| Ok(exp_filter(r, cfg.bmld_tau, fast.hop_seconds())?.into_iter().map(power_db).collect()))
            .collect::<Result<_>>()?,
        Variant::Slow => {
            let slow = &grids[1];
            let held: Vec<usize> = (0..fast.frames).map(|j| slow.nearest_frame(fast.center_time(j))).collect();
            bmld_ratios(&t_cues[1], &m_cues[1], cfg)
                .iter()
                .map(|r| held.iter().map(|&s| power_db(r[s])).collect())
                .collect()
        }
    };
    let best = best_per_frame(&bmld_db, &snr_db, &valid);
    let (best_frame, benefit_db) = best
        .iter()
        .enumerate()
        .filter_map(|(f, b)| b.map(|(_, v)| (f, v)))
        .fold(None, |acc: Option<(usize, f64)>, (f, v)| match acc {
            Some((_, a)) if a >= v => acc,
            _ => Some((f, v)),
        })
        .ok_or(Error::NoValidFrame)?;
    if !benefit_db.is_finite() {
        return Err(Error::NoValidFrame);
    }
    Ok(Prediction {
        config: ModelConfig {
            filterbank: Some(fb.clone()),
            ..cfg.clone()
        },
        benefit_db,
        centers: fb.centers,
        frame_times: (0..fast.frames).map(|j| fast.center_time(j)).collect(),
        bmld_db,
        snr_db,
        valid,
        best,
        best_frame,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Added to the predictions to align them with the data (dB).
    pub offset: f64,
    pub rmse: f64,
    /// `None` when either list has zero variance.
    pub pearson: Option<f64>,
    pub n: usize,
}

/// Aligns predicted thresholds to measured ones with the least-squares
/// offset, then reports RMSE and Pearson correlation.
pub fn evaluate(predicted: &[f64], measured: &[f64]) -> Result<Evaluation> {
    if predicted.len() != measured.len() {
        return Err(Error::Invalid("predicted and measured lists differ in length".into()));
    }
    let n = predicted.len();
    if n < 2 {
        return Err(Error::Invalid("evaluation needs at least two matched values".into()));
    }
    if let Some(v) = predicted.iter().chain(measured).find(|v| !v.is_finite()) {
        return Err(Error::invalid("threshold (dB)", *v));
    }
    let nf = n as f64;
    let mp = predicted.iter().sum::<f64>() / nf;
    let mm = measured.iter().sum::<f64>() / nf;
    let offset = mm - mp;
    let rmse = (predicted
        .iter()
        .zip(measured)
        .map(|(p, m)| (p + offset - m).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, m) in predicted.iter().zip(measured) {
        let (dx, dy) = (p - mp, m - mm);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let pearson = if sxx > 0.0 && syy > 0.0 {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    } else {
        None
    };
    Ok(Evaluation { offset, rmse, pearson, n })
}

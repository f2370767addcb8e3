//! Reverberation time by Schroeder backward integration and the
//! direct-to-reverberant energy ratio.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::rir::{direct_window, Rir};
use crate::error::{Error, Result};
use crate::math::power_db;

const FIT_START_DB: f64 = -5.0;
const FIT_END_DB: f64 = -35.0;
/// Shortest decay span accepted for the line fit.
const MIN_FIT_SPAN_S: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RirAnalysis {
    /// `None` when the decay curve does not cover the fit range.
    pub rt60: Option<f64>,
    /// `+inf` for a response without any energy outside the direct window.
    pub drr_db: f64,
}

/// Schroeder energy decay curve in dB (0 dB at t = 0), summed over channels.
pub fn energy_decay_curve_db(rir: &Rir) -> Vec<f64> {
    let n = rir.len();
    let mut e = alloc::vec![0.0; n];
    for ch in &rir.channels {
        for (acc, v) in e.iter_mut().zip(ch) {
            *acc += v * v;
        }
    }
    let mut acc = 0.0;
    for v in e.iter_mut().rev() {
        acc += *v;
        *v = acc;
    }
    let total = e.first().copied().unwrap_or(0.0);
    e.iter().map(|&v| power_db(v / total)).collect()
}

/// RT60 from a least-squares line through the decay curve between -5 and
/// -35 dB (T30), extrapolated to 60 dB.
pub fn reverberation_time(rir: &Rir) -> Result<f64> {
    if !(rir.energy() > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let edc = energy_decay_curve_db(rir);
    let start = edc.iter().position(|&d| d <= FIT_START_DB).ok_or(Error::InsufficientDecay)?;
    let end = edc.iter().position(|&d| d <= FIT_END_DB).ok_or(Error::InsufficientDecay)?;
    if ((end - start) as f64) < MIN_FIT_SPAN_S * rir.fs {
        return Err(Error::InsufficientDecay);
    }
    let pts = &edc[start..=end];
    let n = pts.len() as f64;
    let t_mean = (start + end) as f64 / 2.0 / rir.fs;
    let d_mean = pts.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (k, &d) in pts.iter().enumerate() {
        let dt = (start + k) as f64 / rir.fs - t_mean;
        sxy += dt * (d - d_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::InsufficientDecay);
    }
    Ok(-60.0 / slope)
}

/// Direct-window energy over everything else, in dB. The direct window of
/// each channel is `[t_d - 0.5 ms, t_d + 1.5 ms]`; when `t_d` is unknown the
/// absolute peak of the channel is used.
pub fn direct_to_reverberant(rir: &Rir) -> Result<f64> {
    let mut direct = 0.0;
    let mut rest = 0.0;
    for (ch, td) in rir.channels.iter().zip(&rir.direct_time) {
        let t_d = match td {
            Some(t) => *t,
            None => {
                let (i, v) = ch
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .ok_or(Error::NoDirectSound)?;
                if *v == 0.0 {
                    return Err(Error::NoDirectSound);
                }
                i as f64 / rir.fs
            }
        };
        let (s, e) = direct_window(t_d, rir.fs);
        for (i, v) in ch.iter().enumerate() {
            if i >= s && i < e {
                direct += v * v;
            } else {
                rest += v * v;
            }
        }
    }
    if !(direct > 0.0) {
        return Err(Error::NoDirectSound);
    }
    if rest == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(power_db(direct / rest))
}

pub fn analyze_rir(rir: &Rir) -> Result<RirAnalysis> {
    let drr_db = direct_to_reverberant(rir)?;
    let rt60 = match reverberation_time(rir) {
        Ok(t) => Some(t),
        Err(Error::InsufficientDecay) => None,
        Err(e) => return Err(e),
    };
    Ok(RirAnalysis { rt60, drr_db })
}

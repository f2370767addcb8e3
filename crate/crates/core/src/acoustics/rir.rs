//! Sampled impulse responses: image-source synthesis with fractional
//! delays, hybrid early/tail assembly and the truncate/cut manipulations.
//!
//! All times are measured from source emission.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::ism::ImageSourceSet;
use super::tail::DiffuseTail;
use crate::error::{Error, Result};
use crate::math::{db_to_power, energy, power_db};

pub const FRACTIONAL_DELAY_TAPS: usize = 31;
/// The direct sound is protected from `t_d - 0.5 ms` ...
pub const DIRECT_PROTECT_BEFORE_S: f64 = 0.5e-3;
/// ... to `t_d + 1.5 ms`.
pub const DIRECT_PROTECT_AFTER_S: f64 = 1.5e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Manipulation {
    None,
    /// Everything after `t_ms` is zeroed.
    Truncate { t_ms: f64 },
    /// Everything between the direct sound and `t_ms` is zeroed.
    Cut { t_ms: f64 },
}

impl Manipulation {
    pub fn time_ms(&self) -> Option<f64> {
        match *self {
            Manipulation::None => None,
            Manipulation::Truncate { t_ms } | Manipulation::Cut { t_ms } => Some(t_ms),
        }
    }
}

/// One (omni) or two (left, right) channel impulse response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rir {
    pub channels: Vec<Vec<f64>>,
    pub fs: f64,
    /// Direct-sound arrival per channel; `None` when there is no direct path.
    pub direct_time: Vec<Option<f64>>,
    pub manipulation: Manipulation,
    pub tail_seed: Option<u64>,
}

impl Rir {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_binaural(&self) -> bool {
        self.channels.len() == 2
    }

    pub fn energy(&self) -> f64 {
        self.channels.iter().map(|c| energy(c)).sum()
    }

    /// Zero-pads or cuts every channel to `len` samples.
    pub fn resized(mut self, len: usize) -> Rir {
        for c in &mut self.channels {
            c.resize(len, 0.0);
        }
        self
    }

    /// End (exclusive sample index) of the protected direct region of a channel.
    pub fn direct_end(&self, channel: usize) -> Option<usize> {
        self.direct_time[channel].map(|t| direct_window(t, self.fs).1)
    }
}

/// Sample range `[start, end)` of the direct-sound protection window.
pub fn direct_window(t_d: f64, fs: f64) -> (usize, usize) {
    let start = ((t_d - DIRECT_PROTECT_BEFORE_S) * fs).floor().max(0.0) as usize;
    let end = ((t_d + DIRECT_PROTECT_AFTER_S) * fs).ceil().max(0.0) as usize;
    (start, end)
}

/// Adds a band-limited impulse of amplitude `amp` at `time_s`, realized as a
/// Hann-windowed sinc over `FRACTIONAL_DELAY_TAPS` taps. Taps that fall outside
/// `buf` are dropped.
pub fn add_fractional_impulse(buf: &mut [f64], fs: f64, time_s: f64, amp: f64) {
    let pos = time_s * fs;
    let center = pos.round() as i64;
    let half = (FRACTIONAL_DELAY_TAPS / 2) as i64;
    let width = (half + 1) as f64;
    for n in (center - half)..=(center + half) {
        if n < 0 || n as usize >= buf.len() {
            continue;
        }
        let x = n as f64 - pos;
        let window = 0.5 * (1.0 + (PI * x / width).cos());
        let s = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
        buf[n as usize] += amp * s * window;
    }
}

fn check_fs(fs: f64) -> Result<()> {
    if !(fs >= 16_000.0) || !fs.is_finite() {
        return Err(Error::invalid("sample rate (need >= 16 kHz)", fs));
    }
    Ok(())
}

/// Samples an image-source set into an omnidirectional impulse response.
/// Each image contributes `reflection / distance` at `distance / c`.
pub fn synthesize_rir(images: &ImageSourceSet, fs: f64, c: f64) -> Result<Rir> {
    check_fs(fs)?;
    if !(c > 0.0) {
        return Err(Error::invalid("speed of sound", c));
    }
    if images.is_empty() {
        return Ok(Rir {
            channels: vec![vec![0.0; FRACTIONAL_DELAY_TAPS]],
            fs,
            direct_time: vec![None],
            manipulation: Manipulation::None,
            tail_seed: None,
        });
    }
    let last = images.images.iter().map(|i| i.distance / c).fold(0.0, f64::max);
    let len = (last * fs).ceil() as usize + FRACTIONAL_DELAY_TAPS;
    let mut buf = vec![0.0; len];
    for img in &images.images {
        add_fractional_impulse(&mut buf, fs, img.distance / c, img.amplitude());
    }
    Ok(Rir {
        channels: vec![buf],
        fs,
        direct_time: vec![images.direct().map(|d| d.distance / c)],
        manipulation: Manipulation::None,
        tail_seed: None,
    })
}

/// Weight of an early image arriving at `t` given the tail onset and crossfade.
pub(crate) fn early_weight(t: f64, onset: f64, crossfade: f64) -> f64 {
    if t <= onset {
        1.0
    } else if crossfade <= 0.0 || t >= onset + crossfade {
        0.0
    } else {
        let x = (t - onset) / crossfade;
        (0.5 * PI * x).cos()
    }
}

/// Fade-in of the diffuse tail, complementary in energy to `early_weight`.
pub(crate) fn tail_weight(t: f64, onset: f64, crossfade: f64) -> f64 {
    if t < onset {
        0.0
    } else if crossfade <= 0.0 || t >= onset + crossfade {
        1.0
    } else {
        let x = (t - onset) / crossfade;
        (0.5 * PI * x).sin()
    }
}

/// Gain `g` such that `early + g * tail` has exactly the requested DRR,
/// cross terms between early part and tail included.
pub fn mix_gain<E: AsRef<[f64]>, T: AsRef<[f64]>>(
    drr_db: f64,
    early: &[E],
    tail: &[T],
    direct_time: &[Option<f64>],
    fs: f64,
) -> Result<f64> {
    // direct/rest sums of e*e, e*t and t*t
    let mut d = [0.0; 3];
    let mut r = [0.0; 3];
    for ((e, t), td) in early.iter().zip(tail).zip(direct_time) {
        let (e, t) = (e.as_ref(), t.as_ref());
        let (s, end) = td.map_or((0, 0), |t| direct_window(t, fs));
        for i in 0..e.len().max(t.len()) {
            let ev = e.get(i).copied().unwrap_or(0.0);
            let tv = t.get(i).copied().unwrap_or(0.0);
            let acc = if i >= s && i < end { &mut d } else { &mut r };
            acc[0] += ev * ev;
            acc[1] += ev * tv;
            acc[2] += tv * tv;
        }
    }
    if !(d[0] > 0.0) {
        return Err(Error::NoDirectSound);
    }
    if !(d[2] + r[2] > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let rho = db_to_power(drr_db);
    // (d0 + 2g d1 + g^2 d2) = rho (r0 + 2g r1 + g^2 r2)
    let a = d[2] - rho * r[2];
    let b = 2.0 * (d[1] - rho * r[1]);
    let c = d[0] - rho * r[0];
    let fail = || Error::TailCalibration {
        target_db: drr_db,
        early_db: power_db(d[0] / r[0]),
    };
    if c <= 0.0 {
        return Err(fail());
    }
    let g = if a.abs() < 1e-300 {
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(fail());
        }
        // a < 0 in every physical case, so this is the positive root
        (-b - disc.sqrt()) / (2.0 * a)
    };
    if !(g > 0.0) || !g.is_finite() {
        return Err(fail());
    }
    Ok(g)
}

/// Direct-window energy and remaining energy of an early rendering.
pub(crate) fn split_direct_energy(channels: &[Vec<f64>], direct_time: &[Option<f64>], fs: f64) -> (f64, f64) {
    let mut direct = 0.0;
    let mut rest = 0.0;
    for (ch, td) in channels.iter().zip(direct_time) {
        let (s, e) = td.map_or((0, 0), |t| direct_window(t, fs));
        for (i, v) in ch.iter().enumerate() {
            if i >= s && i < e {
                direct += v * v;
            } else {
                rest += v * v;
            }
        }
    }
    (direct, rest)
}

fn early_channel(images: &ImageSourceSet, fs: f64, onset: f64, xf: f64, min_len: usize) -> (Vec<f64>, Vec<Option<f64>>) {
    let c = images.speed_of_sound;
    let last = images.images.iter().map(|i| i.distance / c).filter(|&t| t < onset + xf).fold(0.0, f64::max);
    let mut early = vec![0.0; min_len.max((last * fs).ceil() as usize + FRACTIONAL_DELAY_TAPS)];
    for img in &images.images {
        let t = img.distance / c;
        let w = early_weight(t, onset, xf);
        if w > 0.0 {
            add_fractional_impulse(&mut early, fs, t, img.amplitude() * w);
        }
    }
    (early, vec![images.direct().map(|d| d.distance / c)])
}

/// Direct-window and remaining energy of the omnidirectional early part for
/// a given tail onset and crossfade.
pub(crate) fn render_early(images: &ImageSourceSet, fs: f64, onset: f64, xf: f64) -> Result<(f64, f64)> {
    check_fs(fs)?;
    let (early, direct_time) = early_channel(images, fs, onset, xf, 0);
    Ok(split_direct_energy(core::slice::from_ref(&early), &direct_time, fs))
}

/// Omnidirectional hybrid response: exact early images up to the tail onset,
/// crossfaded into the (left channel of the) diffuse tail, which is scaled to
/// meet the tail's target direct-to-reverberant ratio.
pub fn synthesize_hybrid_rir(images: &ImageSourceSet, tail: &DiffuseTail, fs: f64) -> Result<Rir> {
    check_fs(fs)?;
    if tail.fs != fs {
        return Err(Error::SampleRateMismatch {
            expected: fs,
            found: tail.fs,
        });
    }
    let c = images.speed_of_sound;
    let direct = images.direct().ok_or(Error::NoDirectSound)?;
    let t_d = direct.distance / c;
    if tail.spec.onset < t_d {
        return Err(Error::invalid("tail onset before direct sound (s)", tail.spec.onset));
    }
    let (mut early, direct_time) = early_channel(images, fs, tail.spec.onset, tail.spec.crossfade, tail.len());
    let tail_ch = &tail.channels[0];
    let gain = mix_gain(
        tail.spec.drr_db,
        core::slice::from_ref(&early),
        core::slice::from_ref(tail_ch),
        &direct_time,
        fs,
    )?;
    for (o, t) in early.iter_mut().zip(tail_ch) {
        *o += gain * t;
    }
    Ok(Rir {
        channels: vec![early],
        fs,
        direct_time,
        manipulation: Manipulation::None,
        tail_seed: Some(tail.spec.seed),
    })
}

/// Applies a truncate or cut manipulation. The region up to the end of each
/// channel's direct-protection window is always kept, so for every `t`,
/// `truncate(t) + cut(t) - head = full` sample by sample.
pub fn manipulate_rir(rir: &Rir, manipulation: Manipulation) -> Result<Rir> {
    let t_ms = match manipulation {
        Manipulation::None => return Ok(rir.clone()),
        Manipulation::Truncate { t_ms } | Manipulation::Cut { t_ms } => t_ms,
    };
    if !(t_ms >= 0.0) || !t_ms.is_finite() {
        return Err(Error::invalid("manipulation time (ms)", t_ms));
    }
    if rir.manipulation != Manipulation::None {
        return Err(Error::Invalid("impulse response is already manipulated".into()));
    }
    let t = t_ms * 1e-3;
    let mut out = rir.clone();
    out.manipulation = manipulation;
    let boundary = (t * rir.fs).round() as usize;
    for (ch, samples) in out.channels.iter_mut().enumerate() {
        let t_d = rir.direct_time[ch].ok_or(Error::NoDirectSound)?;
        let head_end = direct_window(t_d, rir.fs).1;
        let n = samples.len();
        match manipulation {
            Manipulation::Truncate { .. } => {
                if t < t_d {
                    return Err(Error::invalid("truncation time before the direct sound (ms)", t_ms));
                }
                let from = boundary.max(head_end).min(n);
                samples[from..].iter_mut().for_each(|v| *v = 0.0);
            }
            Manipulation::Cut { .. } => {
                let from = head_end.min(n);
                let to = boundary.min(n);
                if to > from {
                    samples[from..to].iter_mut().for_each(|v| *v = 0.0);
                }
            }
            Manipulation::None => unreachable!(),
        }
    }
    Ok(out)
}

//! Stochastic late reverberation for two ears.
//!
//! Two independent seeded Gaussian noises are mixed per frequency so that the
//! interaural coherence follows `sin(k d) / (k d)` with `d = 2a` (ear spacing
//! of a spherical head) and `k = 2 pi f / c`. The result is shaped with an
//! exponential envelope for the requested RT60 and faded in at `onset`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_10, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ism::ImageSourceSet;
use super::rir::{render_early, tail_weight};
use crate::error::{Error, Result};
use crate::fft::{fft_in_place, Direction};
use crate::math::{db_to_power, energy, power_db, sinc, SPEED_OF_SOUND};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub rt60: f64,
    pub drr_db: f64,
    /// Mixing time (s from emission); the tail fades in from here.
    pub onset: f64,
    pub crossfade: f64,
    pub head_radius: f64,
    pub speed_of_sound: f64,
    pub seed: u64,
    /// Total length of the tail buffer (s from emission).
    pub duration: f64,
}

impl TailSpec {
    /// Defaults used throughout: 5 ms crossfade, 8.75 cm head, and a buffer long
    /// enough for 75 dB of decay after the onset.
    pub fn new(rt60: f64, drr_db: f64, onset: f64, seed: u64) -> Self {
        TailSpec {
            rt60,
            drr_db,
            onset,
            crossfade: 0.005,
            head_radius: 0.0875,
            speed_of_sound: SPEED_OF_SOUND,
            seed,
            duration: onset + 1.25 * rt60,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rt60 > 0.0) || !self.rt60.is_finite() {
            return Err(Error::invalid("RT60 (s)", self.rt60));
        }
        if !(self.onset >= 0.0) {
            return Err(Error::invalid("tail onset (s)", self.onset));
        }
        if !(self.crossfade >= 0.0) {
            return Err(Error::invalid("crossfade (s)", self.crossfade));
        }
        if !(self.head_radius > 0.0) {
            return Err(Error::invalid("head radius (m)", self.head_radius));
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::invalid("speed of sound", self.speed_of_sound));
        }
        if !(self.duration > self.onset + self.crossfade) {
            return Err(Error::invalid("tail duration (s)", self.duration));
        }
        if !self.drr_db.is_finite() {
            return Err(Error::invalid("DRR (dB)", self.drr_db));
        }
        Ok(())
    }

    /// Model interaural coherence at frequency `f`.
    pub fn coherence(&self, f: f64) -> f64 {
        sinc(2.0 * PI * f * 2.0 * self.head_radius / self.speed_of_sound)
    }
}

/// Unscaled two-channel tail; both channels together carry unit energy.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffuseTail {
    pub spec: TailSpec,
    pub fs: f64,
    pub channels: [Vec<f64>; 2],
}

impl DiffuseTail {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn synthesize_diffuse_tail(spec: &TailSpec, fs: f64) -> Result<DiffuseTail> {
    spec.validate()?;
    if !(fs > 0.0) {
        return Err(Error::invalid("sample rate", fs));
    }
    let len = (spec.duration * fs).ceil() as usize;
    let n = len.next_power_of_two();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut a: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut b: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    fft_in_place(&mut a, Direction::Forward);
    fft_in_place(&mut b, Direction::Forward);
    for k in 0..n {
        let bin = k.min(n - k);
        let g = spec.coherence(bin as f64 * fs / n as f64);
        b[k] = a[k] * g + b[k] * (1.0 - g * g).max(0.0).sqrt();
    }
    fft_in_place(&mut a, Direction::Inverse);
    fft_in_place(&mut b, Direction::Inverse);

    let decay = 3.0 * LN_10 / spec.rt60;
    let envelope = |i: usize| {
        let t = i as f64 / fs;
        if t < spec.onset {
            0.0
        } else {
            (-decay * (t - spec.onset)).exp() * tail_weight(t, spec.onset, spec.crossfade)
        }
    };
    let mut left = vec![0.0; len];
    let mut right = vec![0.0; len];
    for i in 0..len {
        let e = envelope(i);
        left[i] = a[i].re * e;
        right[i] = b[i].re * e;
    }
    let total = energy(&left) + energy(&right);
    if !(total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let scale = 1.0 / total.sqrt();
    left.iter_mut().chain(right.iter_mut()).for_each(|v| *v *= scale);
    Ok(DiffuseTail {
        spec: spec.clone(),
        fs,
        channels: [left, right],
    })
}

/// Amplitude gain for a tail of energy `tail_energy` so that
/// `direct / (early + gain^2 * tail) = 10^(drr/10)`.
pub fn calibration_gain(drr_db: f64, direct_energy: f64, early_energy: f64, tail_energy: f64) -> Result<f64> {
    if !(direct_energy > 0.0) {
        return Err(Error::NoDirectSound);
    }
    if !(tail_energy > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let needed = direct_energy / db_to_power(drr_db) - early_energy;
    if !(needed > 0.0) {
        return Err(Error::TailCalibration {
            target_db: drr_db,
            early_db: power_db(direct_energy / early_energy),
        });
    }
    Ok((needed / tail_energy).sqrt())
}

/// Moves the mixing time earlier when the early part up to `spec.onset`
/// would carry more than `max_early_share` of the reverberant energy allowed
/// by `spec.drr_db`. `early_energy(onset)` must return the energy outside the
/// direct window of the early rendering for a given onset; `t_d` is the
/// direct arrival and `direct_energy` the energy inside the direct window.
/// Returns the spec unchanged when it already fits.
pub fn fit_tail_onset_with(
    spec: &TailSpec,
    max_early_share: f64,
    t_d: f64,
    direct_energy: f64,
    early_energy: impl Fn(f64) -> f64,
) -> Result<TailSpec> {
    spec.validate()?;
    if !(max_early_share > 0.0 && max_early_share < 1.0) {
        return Err(Error::invalid("early energy share", max_early_share));
    }
    if !(direct_energy > 0.0) {
        return Err(Error::NoDirectSound);
    }
    let budget = max_early_share * direct_energy / db_to_power(spec.drr_db);
    if early_energy(spec.onset) <= budget {
        return Ok(spec.clone());
    }
    let floor = early_energy(t_d);
    if floor > budget {
        return Err(Error::TailCalibration {
            target_db: spec.drr_db,
            early_db: power_db(direct_energy / floor),
        });
    }
    let (mut lo, mut hi) = (t_d, spec.onset);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if early_energy(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(TailSpec { onset: lo, ..spec.clone() })
}

/// `fit_tail_onset_with` for the omnidirectional hybrid response.
pub fn fit_tail_onset(images: &ImageSourceSet, spec: &TailSpec, fs: f64, max_early_share: f64) -> Result<TailSpec> {
    let direct = images.direct().ok_or(Error::NoDirectSound)?;
    let t_d = direct.arrival;
    let render = |onset: f64| render_early(images, fs, onset, spec.crossfade);
    let (e_direct, _) = render(t_d)?;
    fit_tail_onset_with(spec, max_early_share, t_d, e_direct, |onset| {
        render(onset).map_or(f64::INFINITY, |(_, rest)| rest)
    })
}

//! Auditory front end: complex gammatone filterbank on the Bark scale, Hann
//! framing, per-frame interaural cues and exponential integration.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stimuli::{bark_to_hz, critical_bandwidth, BinauralSignal};

pub const GAMMATONE_ORDER: usize = 4;

/// Frame power (re unit RMS) below which cues are not computed: -100 dB.
pub const SILENCE_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterbankSpec {
    /// Center frequencies (Hz), strictly increasing.
    pub centers: Vec<f64>,
}

impl FilterbankSpec {
    /// One filter per integer Bark from `lo` to `hi`, keeping those below
    /// Nyquist.
    pub fn bark(lo: u32, hi: u32, fs: f64) -> Result<Self> {
        let centers: Vec<f64> = (lo..=hi).map(|z| bark_to_hz(z as f64)).filter(|&f| f < fs / 2.0).collect();
        Self::new(centers, fs)
    }

    /// The default grid, integer Bark 2 to 22.
    pub fn standard(fs: f64) -> Result<Self> {
        Self::bark(2, 22, fs)
    }

    pub fn new(centers: Vec<f64>, fs: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Invalid("filterbank needs at least one band".into()));
        }
        for w in centers.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Invalid("filterbank centers must increase strictly".into()));
            }
        }
        if let Some(&f) = centers.iter().find(|&&f| !(f > 0.0 && f < fs / 2.0)) {
            return Err(Error::invalid("band center (Hz)", f));
        }
        Ok(FilterbankSpec { centers })
    }

    /// Index of the band whose center is closest to `f`.
    pub fn nearest(&self, f: f64) -> usize {
        let mut best = 0;
        for (i, c) in self.centers.iter().enumerate() {
            if (c - f).abs() < (self.centers[best] - f).abs() {
                best = i;
            }
        }
        best
    }
}

/// Complex one-pole cascade approximating a gammatone filter, with the
/// decay chosen so the equivalent rectangular bandwidth equals `bandwidth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gammatone {
    pole: Complex64,
    gain: f64,
}

impl Gammatone {
    pub fn new(center: f64, bandwidth: f64, fs: f64) -> Result<Self> {
        if !(center > 0.0 && center < fs / 2.0) {
            return Err(Error::invalid("gammatone center (Hz)", center));
        }
        if !(bandwidth > 0.0 && bandwidth < fs / 2.0) {
            return Err(Error::invalid("gammatone bandwidth (Hz)", bandwidth));
        }
        // ERB grows monotonically with the pole decay; bisect in log space
        let (mut lo, mut hi) = (1e-8f64.ln(), 5.0f64.ln());
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if erb_for_decay(mid.exp(), fs) < bandwidth {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = (0.5 * (lo + hi)).exp();
        let r = (-lambda).exp();
        Ok(Gammatone {
            pole: Complex64::from_polar(r, 2.0 * PI * center / fs),
            gain: 1.0 - r,
        })
    }

    /// Equivalent rectangular bandwidth of this filter (Hz).
    pub fn erb(&self, fs: f64) -> f64 {
        erb_for_decay(-self.pole.norm().ln(), fs)
    }

    /// Complex frequency response at `f` Hz (unity at the center).
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        let stage = self.gain / (Complex64::new(1.0, 0.0) - self.pole * z1);
        stage.powi(GAMMATONE_ORDER as i32)
    }

    /// Analytic subband signal. Scaled by two so a real sinusoid of
    /// amplitude A at the center gives a complex envelope of magnitude A.
    pub fn filter(&self, x: &[f64]) -> Vec<Complex64> {
        let mut y: Vec<Complex64> = x.iter().map(|&v| Complex64::new(2.0 * v, 0.0)).collect();
        for _ in 0..GAMMATONE_ORDER {
            let mut state = Complex64::new(0.0, 0.0);
            for v in y.iter_mut() {
                state = *v * self.gain + self.pole * state;
                *v = state;
            }
        }
        y
    }
}

/// ERB (Hz) of the normalized 4-stage cascade with pole radius
/// `r = exp(-lambda)`. Uses the closed form of the mean of
/// `(a - b cos t)^-4` over a period, `P3(a / q) / q^4` with
/// `q = sqrt(a^2 - b^2)`, here `a = 1 + r^2`, `b = 2r`, `q = 1 - r^2`.
fn erb_for_decay(lambda: f64, fs: f64) -> f64 {
    let r = (-lambda).exp();
    let q = 1.0 - r * r;
    let x = (1.0 + r * r) / q;
    let p3 = 0.5 * (5.0 * x * x * x - 3.0 * x);
    (1.0 - r).powi(8) * p3 / q.powi(4) * fs
}

/// Gammatone for band center `f` with bandwidth CB(f).
pub fn gammatone_for(f: f64, fs: f64) -> Result<Gammatone> {
    Gammatone::new(f, critical_bandwidth(f), fs)
}

/// Analytic subband signal of `x` for a gammatone at `center` with the
/// given bandwidth.
pub fn gammatone_analytic(x: &[f64], fs: f64, center: f64, bandwidth: f64) -> Result<Vec<Complex64>> {
    Ok(Gammatone::new(center, bandwidth, fs)?.filter(x))
}

/// Hann frames with 50% overlap. Frame `k` covers samples
/// `[k * hop, k * hop + len)`; samples past the signal count as zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameGrid {
    pub fs: f64,
    /// Window length in samples (even).
    pub len: usize,
    pub hop: usize,
    pub frames: usize,
}

impl FrameGrid {
    /// Grid with hop `hop_s` and window `2 * hop`, covering `signal_len`.
    pub fn new(fs: f64, hop_s: f64, signal_len: usize) -> Result<Self> {
        if !(fs > 0.0) || !(hop_s > 0.0) {
            return Err(Error::invalid("frame hop (s)", hop_s));
        }
        let hop = (hop_s * fs).round() as usize;
        if hop == 0 {
            return Err(Error::invalid("frame hop (s)", hop_s));
        }
        let len = 2 * hop;
        let frames = if signal_len <= len {
            1
        } else {
            (signal_len - len).div_ceil(hop) + 1
        };
        Ok(FrameGrid { fs, len, hop, frames })
    }

    /// 24 ms frames, 12 ms hop.
    pub fn fast(fs: f64, signal_len: usize) -> Result<Self> {
        Self::new(fs, 0.012, signal_len)
    }

    /// 300 ms frames, 150 ms hop.
    pub fn slow(fs: f64, signal_len: usize) -> Result<Self> {
        Self::new(fs, 0.150, signal_len)
    }

    /// Periodic Hann window; with 50% overlap it sums to exactly one.
    pub fn window(&self) -> Vec<f64> {
        (0..self.len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / self.len as f64).cos())
            .collect()
    }

    pub fn start(&self, frame: usize) -> usize {
        frame * self.hop
    }

    /// Center of `frame` in seconds.
    pub fn center_time(&self, frame: usize) -> f64 {
        (self.start(frame) as f64 + self.len as f64 / 2.0) / self.fs
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop as f64 / self.fs
    }

    /// Frame of this grid whose center is nearest to `t` seconds.
    pub fn nearest_frame(&self, t: f64) -> usize {
        let k = (t * self.fs - self.len as f64 / 2.0) / self.hop as f64;
        (k.round().max(0.0) as usize).min(self.frames - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterauralCue {
    /// Interaural coherence in [0, 1].
    pub rho: f64,
    /// Interaural phase difference (rad), left re right, in (-pi, pi].
    pub phi: f64,
}

/// Weighted frame statistics `(sum |l|^2, sum |r|^2, sum l conj(r))`.
fn frame_sums(l: &[Complex64], r: &[Complex64]) -> (f64, f64, Complex64) {
    let mut sll = 0.0;
    let mut srr = 0.0;
    let mut slr = Complex64::new(0.0, 0.0);
    for (a, b) in l.iter().zip(r) {
        sll += a.norm_sqr();
        srr += b.norm_sqr();
        slr += a * b.conj();
    }
    (sll, srr, slr)
}

fn cue_from_sums(sll: f64, srr: f64, slr: Complex64) -> InterauralCue {
    let g = slr / (sll * srr).sqrt();
    let mut phi = g.arg();
    if phi <= -PI {
        phi = PI;
    }
    InterauralCue {
        rho: g.norm().min(1.0),
        phi,
    }
}

/// Normalized zero-lag complex cross-correlation of two windowed analytic
/// frames. `None` when either frame's mean power is below the silence floor.
pub fn interaural_cue(left: &[Complex64], right: &[Complex64]) -> Result<Option<InterauralCue>> {
    if left.len() != right.len() || left.is_empty() {
        return Err(Error::Invalid("cue frames must be non-empty and of equal length".into()));
    }
    let (sll, srr, slr) = frame_sums(left, right);
    let n = left.len() as f64;
    // |analytic|^2 / 2 is the power of the real signal
    if sll / (2.0 * n) < SILENCE_FLOOR || srr / (2.0 * n) < SILENCE_FLOOR {
        return Ok(None);
    }
    Ok(Some(cue_from_sums(sll, srr, slr)))
}

/// First-order leaky integrator `y[n] = b y[n-1] + (1 - b) x[n]` with
/// `b = exp(-hop / tau)`, started in steady state on the first sample.
pub fn exp_filter(series: &[f64], tau: f64, hop: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !(hop > 0.0) {
        return Err(Error::invalid("integration time constant (s)", tau));
    }
    let b = (-hop / tau).exp();
    let mut y = series.first().copied().unwrap_or(0.0);
    Ok(series
        .iter()
        .map(|&x| {
            y = b * y + (1.0 - b) * x;
            y
        })
        .collect())
}

/// Per-band, per-frame ear powers and interaural cues of one signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalCues {
    pub centers: Vec<f64>,
    pub grid: FrameGrid,
    /// `[ear][band][frame]` mean power re unit RMS.
    pub power: [Vec<Vec<f64>>; 2],
    /// `[band][frame]`, `None` for silent frames.
    pub cues: Vec<Vec<Option<InterauralCue>>>,
}

impl SignalCues {
    pub fn bands(&self) -> usize {
        self.centers.len()
    }

    pub fn frames(&self) -> usize {
        self.grid.frames
    }
}

/// Runs the filterbank once per band and evaluates cues on every grid.
pub fn analyze(signal: &BinauralSignal, fb: &FilterbankSpec, grids: &[FrameGrid]) -> Result<Vec<SignalCues>> {
    for g in grids {
        if g.fs != signal.fs {
            return Err(Error::SampleRateMismatch {
                expected: signal.fs,
                found: g.fs,
            });
        }
    }
    let mut out: Vec<SignalCues> = grids
        .iter()
        .map(|g| SignalCues {
            centers: fb.centers.clone(),
            grid: g.clone(),
            power: [Vec::new(), Vec::new()],
            cues: Vec::new(),
        })
        .collect();
    let windows: Vec<Vec<f64>> = grids.iter().map(|g| g.window()).collect();
    for &fc in &fb.centers {
        let gt = gammatone_for(fc, signal.fs)?;
        let l = gt.filter(&signal.channels[0]);
        let r = gt.filter(&signal.channels[1]);
        for ((cues, grid), w) in out.iter_mut().zip(grids).zip(&windows) {
            let w2: f64 = w.iter().map(|v| v * v).sum();
            let mut pl = Vec::with_capacity(grid.frames);
            let mut pr = Vec::with_capacity(grid.frames);
            let mut cs = Vec::with_capacity(grid.frames);
            for k in 0..grid.frames {
                let s = grid.start(k);
                let mut sll = 0.0;
                let mut srr = 0.0;
                let mut slr = Complex64::new(0.0, 0.0);
                for (i, wi) in w.iter().enumerate() {
                    let n = s + i;
                    if n >= l.len() {
                        break;
                    }
                    let a = l[n] * *wi;
                    let b = r[n] * *wi;
                    sll += a.norm_sqr();
                    srr += b.norm_sqr();
                    slr += a * b.conj();
                }
                let (p_l, p_r) = (sll / (2.0 * w2), srr / (2.0 * w2));
                pl.push(p_l);
                pr.push(p_r);
                cs.push(if p_l < SILENCE_FLOOR || p_r < SILENCE_FLOOR {
                    None
                } else {
                    Some(cue_from_sums(sll, srr, slr))
                });
            }
            cues.power[0].push(pl);
            cues.power[1].push(pr);
            cues.cues.push(cs);
        }
    }
    Ok(out)
}

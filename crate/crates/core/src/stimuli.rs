//! Calibrated test signals: the harmonic complex target, band-limited
//! maskers, spatialization by convolution and level normalization.
//!
//! Levels follow one global convention: unit RMS is 100 dB SPL.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acoustics::Rir;
use crate::error::{Error, Result};
use crate::fft::{convolve, fft_in_place, Direction};
use crate::math::{db_to_amplitude, energy, power_db, rms};

/// dB SPL of a unit-RMS signal.
pub const CALIBRATION_DB_SPL: f64 = 100.0;

/// Zwicker's critical bandwidth (Hz) at `f` Hz.
pub fn critical_bandwidth(f: f64) -> f64 {
    let k = f / 1000.0;
    25.0 + 75.0 * (1.0 + 1.4 * k * k).powf(0.69)
}

/// Critical-band rate (Bark) at `f` Hz, Zwicker and Terhardt.
pub fn hz_to_bark(f: f64) -> f64 {
    13.0 * (0.00076 * f).atan() + 3.5 * (f / 7500.0).powi(2).atan()
}

/// Inverse of `hz_to_bark`, by bisection.
pub fn bark_to_hz(z: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 30_000.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if hz_to_bark(mid) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub fs: f64,
    /// dB SPL produced by unit RMS.
    pub calibration_db: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::invalid("sample rate", fs));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("sample value", *v));
        }
        Ok(Signal {
            samples,
            fs,
            calibration_db: CALIBRATION_DB_SPL,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.fs
    }

    pub fn level_db(&self) -> f64 {
        power_db(rms(&self.samples).powi(2)) + self.calibration_db
    }

    /// Scales to `level_db` dB SPL.
    pub fn set_level(&mut self, level_db: f64) -> Result<()> {
        let r = rms(&self.samples);
        if !(r > 0.0) {
            return Err(Error::ZeroEnergy);
        }
        let g = db_to_amplitude(level_db - self.calibration_db) / r;
        self.samples.iter_mut().for_each(|v| *v *= g);
        Ok(())
    }

    pub fn scale(&mut self, gain: f64) {
        self.samples.iter_mut().for_each(|v| *v *= gain);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinauralSignal {
    /// Left, right.
    pub channels: [Vec<f64>; 2],
    pub fs: f64,
    pub calibration_db: f64,
}

impl BinauralSignal {
    pub fn new(left: Vec<f64>, right: Vec<f64>, fs: f64) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Invalid("binaural channels differ in length".into()));
        }
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::invalid("sample rate", fs));
        }
        Ok(BinauralSignal {
            channels: [left, right],
            fs,
            calibration_db: CALIBRATION_DB_SPL,
        })
    }

    /// Same signal in both ears.
    pub fn diotic(signal: &Signal) -> Self {
        BinauralSignal {
            channels: [signal.samples.clone(), signal.samples.clone()],
            fs: signal.fs,
            calibration_db: signal.calibration_db,
        }
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Energy summed over both ears.
    pub fn energy(&self) -> f64 {
        energy(&self.channels[0]) + energy(&self.channels[1])
    }

    /// Level of the mean power over both ears, dB SPL.
    pub fn level_db(&self) -> f64 {
        power_db(self.energy() / (2 * self.len()) as f64) + self.calibration_db
    }

    pub fn scale(&mut self, gain: f64) {
        for ch in self.channels.iter_mut() {
            ch.iter_mut().for_each(|v| *v *= gain);
        }
    }

    /// Zero-lag normalized interaural correlation of the full signal.
    pub fn interaural_correlation(&self) -> f64 {
        let [l, r] = &self.channels;
        let lr: f64 = l.iter().zip(r).map(|(a, b)| a * b).sum();
        lr / (energy(l) * energy(r)).sqrt()
    }

    /// Pads or cuts both channels to `len` samples.
    pub fn resized(mut self, len: usize) -> Self {
        for ch in self.channels.iter_mut() {
            ch.resize(len, 0.0);
        }
        self
    }

    /// Delays both channels by `samples` zeros at the start.
    pub fn delayed(mut self, samples: usize) -> Self {
        for ch in self.channels.iter_mut() {
            let mut v = vec![0.0; samples];
            v.append(ch);
            *ch = v;
        }
        self
    }
}

/// Rising half of a Gaussian over `ramp` seconds, `sigma = ramp / 2.5`,
/// offset so it starts at exactly zero and ends at one.
pub fn gaussian_rise(t: f64, ramp: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= ramp {
        return 1.0;
    }
    let sigma = ramp / 2.5;
    let g = |x: f64| (-(x - ramp).powi(2) / (2.0 * sigma * sigma)).exp();
    let g0 = g(0.0);
    (g(t) - g0) / (1.0 - g0)
}

/// Time within the rise at which `gaussian_rise` reaches `level`.
fn gaussian_rise_crossing(level: f64, ramp: f64) -> f64 {
    let sigma = ramp / 2.5;
    let g0 = (-(ramp * ramp) / (2.0 * sigma * sigma)).exp();
    let v = level * (1.0 - g0) + g0;
    ramp - sigma * (-2.0 * v.ln()).sqrt()
}

/// Symmetric envelope: Gaussian rise, flat plateau, mirrored fall.
pub fn gaussian_envelope(len: usize, fs: f64, ramp: f64) -> Vec<f64> {
    let total = len as f64 / fs;
    let mut env = vec![0.0; len];
    // evaluated at sample centers on the first half and mirrored, so the
    // envelope is exactly time-symmetric
    for i in 0..len.div_ceil(2) {
        let t = (i as f64 + 0.5) / fs;
        let v = gaussian_rise(t, ramp).min(gaussian_rise(total - t, ramp));
        env[i] = v;
        env[len - 1 - i] = v;
    }
    env
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HarmonicPhases {
    Zero,
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HctSpec {
    pub f0: f64,
    pub first_harmonic: u32,
    pub last_harmonic: u32,
    /// Time the envelope spends at or above 90% of its maximum (s).
    pub effective_duration: f64,
    pub ramp: f64,
    pub level_db: f64,
    pub phases: HarmonicPhases,
}

impl Default for HctSpec {
    fn default() -> Self {
        HctSpec {
            f0: 50.0,
            first_harmonic: 7,
            last_harmonic: 13,
            effective_duration: 0.5,
            ramp: 0.01,
            level_db: 60.0,
            phases: HarmonicPhases::Zero,
        }
    }
}

impl HctSpec {
    pub fn frequencies(&self) -> Vec<f64> {
        (self.first_harmonic..=self.last_harmonic).map(|h| h as f64 * self.f0).collect()
    }

    /// Relative amplitudes: equal energy per critical band, since a band of
    /// width CB(f) around f holds CB(f)/f0 harmonics of power a^2 each.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.frequencies()
            .iter()
            .map(|&f| (self.f0 / critical_bandwidth(f)).sqrt())
            .collect()
    }

    /// Total duration: two ramps plus the plateau that gives the requested
    /// effective duration.
    pub fn total_duration(&self) -> f64 {
        let t90 = gaussian_rise_crossing(0.9, self.ramp);
        let plateau = self.effective_duration - 2.0 * (self.ramp - t90);
        2.0 * self.ramp + plateau
    }

    fn validate(&self, fs: f64) -> Result<()> {
        if !(self.f0 > 0.0) {
            return Err(Error::invalid("f0 (Hz)", self.f0));
        }
        if self.first_harmonic == 0 || self.last_harmonic < self.first_harmonic {
            return Err(Error::Invalid("harmonic range must be 1 <= first <= last".into()));
        }
        if !(self.ramp > 0.0) {
            return Err(Error::invalid("ramp (s)", self.ramp));
        }
        if !(self.total_duration() > 2.0 * self.ramp) {
            return Err(Error::invalid("effective duration (s)", self.effective_duration));
        }
        if !(fs >= 4000.0) || !(fs > 2.0 * self.f0 * self.last_harmonic as f64) {
            return Err(Error::invalid("sample rate", fs));
        }
        Ok(())
    }
}

/// Harmonic complex tone with Gaussian ramps at `spec.level_db`.
pub fn synth_hct(spec: &HctSpec, fs: f64) -> Result<Signal> {
    spec.validate(fs)?;
    let len = (spec.total_duration() * fs).round() as usize;
    let freqs = spec.frequencies();
    let amps = spec.amplitudes();
    let phases: Vec<f64> = match spec.phases {
        HarmonicPhases::Zero => vec![0.0; freqs.len()],
        HarmonicPhases::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..freqs.len()).map(|_| rng.random::<f64>() * 2.0 * PI).collect()
        }
    };
    let env = gaussian_envelope(len, fs, spec.ramp);
    let samples = (0..len)
        .map(|i| {
            let t = i as f64 / fs;
            let s: f64 = freqs
                .iter()
                .zip(&amps)
                .zip(&phases)
                .map(|((f, a), p)| a * (2.0 * PI * f * t + p).sin())
                .sum();
            s * env[i]
        })
        .collect();
    let mut sig = Signal::new(samples, fs)?;
    sig.set_level(spec.level_db)?;
    Ok(sig)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseShape {
    /// Power density proportional to 1 / CB(f): equal power per critical band.
    UniformExciting,
    /// Flat power density.
    White,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub duration: f64,
    pub ramp: f64,
    pub level_db: f64,
    pub seed: u64,
    pub shape: NoiseShape,
}

impl NoiseSpec {
    /// Uniform exciting noise, 250-750 Hz, 900 ms, 30 ms ramps, 60 dB SPL.
    pub fn uniform_exciting(seed: u64) -> Self {
        NoiseSpec {
            low_hz: 250.0,
            high_hz: 750.0,
            duration: 0.9,
            ramp: 0.03,
            level_db: 60.0,
            seed,
            shape: NoiseShape::UniformExciting,
        }
    }

    /// Flat-spectrum noise in `[low_hz, high_hz]`, same timing as above.
    pub fn white(low_hz: f64, high_hz: f64, seed: u64) -> Self {
        NoiseSpec {
            low_hz,
            high_hz,
            shape: NoiseShape::White,
            ..Self::uniform_exciting(seed)
        }
    }

    fn density(&self, f: f64) -> f64 {
        match self.shape {
            NoiseShape::UniformExciting => 1.0 / critical_bandwidth(f),
            NoiseShape::White => 1.0,
        }
    }
}

/// Band-limited noise by spectral synthesis: deterministic magnitudes,
/// seeded uniform random phases, Gaussian ramps, calibrated level.
pub fn synth_noise(spec: &NoiseSpec, fs: f64) -> Result<Signal> {
    if !(spec.low_hz > 0.0 && spec.high_hz > spec.low_hz) {
        return Err(Error::Invalid("noise band needs 0 < low < high".into()));
    }
    if !(spec.high_hz < fs / 2.0) {
        return Err(Error::invalid("noise upper band edge beyond Nyquist (Hz)", spec.high_hz));
    }
    if !(spec.duration > 2.0 * spec.ramp) || !(spec.ramp >= 0.0) {
        return Err(Error::invalid("noise duration (s)", spec.duration));
    }
    let len = (spec.duration * fs).round() as usize;
    let n = len.next_power_of_two();
    let df = fs / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut spec_buf = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..n / 2 {
        // draw for every bin so the phases do not depend on the band edges
        let phase = rng.random::<f64>() * 2.0 * PI;
        let f = k as f64 * df;
        if f >= spec.low_hz && f <= spec.high_hz {
            let m = spec.density(f).sqrt();
            spec_buf[k] = Complex64::from_polar(m, phase);
            spec_buf[n - k] = spec_buf[k].conj();
        }
    }
    fft_in_place(&mut spec_buf, Direction::Inverse);
    let env = if spec.ramp > 0.0 {
        gaussian_envelope(len, fs, spec.ramp)
    } else {
        vec![1.0; len]
    };
    let samples = spec_buf.iter().take(len).zip(&env).map(|(c, e)| c.re * e).collect();
    let mut sig = Signal::new(samples, fs)?;
    sig.set_level(spec.level_db)?;
    Ok(sig)
}

/// Uniform exciting noise (`spec.shape` is forced accordingly).
pub fn synth_uen(spec: &NoiseSpec, fs: f64) -> Result<Signal> {
    synth_noise(
        &NoiseSpec {
            shape: NoiseShape::UniformExciting,
            ..spec.clone()
        },
        fs,
    )
}

/// Per-ear linear convolution with a two-ear impulse response.
pub fn spatialize(signal: &Signal, brir: &Rir) -> Result<BinauralSignal> {
    if signal.fs != brir.fs {
        return Err(Error::SampleRateMismatch {
            expected: signal.fs,
            found: brir.fs,
        });
    }
    if !brir.is_binaural() {
        return Err(Error::Invalid("spatialize needs a two-channel impulse response".into()));
    }
    let left = convolve(&signal.samples, &brir.channels[0]);
    let right = convolve(&signal.samples, &brir.channels[1]);
    Ok(BinauralSignal {
        channels: [left, right],
        fs: signal.fs,
        calibration_db: signal.calibration_db,
    })
}

/// Scales every signal so its two-ear energy equals that of the first.
pub fn normalize_across_conditions(signals: &[BinauralSignal]) -> Result<Vec<BinauralSignal>> {
    let reference = signals
        .first()
        .ok_or_else(|| Error::Invalid("nothing to normalize".into()))?
        .energy();
    signals
        .iter()
        .map(|s| {
            let e = s.energy();
            if !(e > 0.0) || !(reference > 0.0) {
                return Err(Error::ZeroEnergy);
            }
            let mut out = s.clone();
            out.scale((reference / e).sqrt());
            Ok(out)
        })
        .collect()
}

//! Two-ear rendering with a rigid spherical head.
//!
//! Each path gets the Woodworth ray-tracing delay for its angle of incidence
//! on the ear and a one-pole/one-zero head-shadow filter (the Brown-Duda
//! form, `H(s) = (alpha s + beta) / (s + beta)` with `beta = 2c/a`), then a
//! band-limited fractional-delay impulse. Azimuths are in degrees, positive
//! to the listener's right.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::acoustics::{
    add_fractional_impulse, direct_window, mix_gain, early_weight, fit_tail_onset_with, DiffuseTail, ImageSource, ImageSourceSet,
    Manipulation, Rir, TailSpec, FRACTIONAL_DELAY_TAPS,
};
use crate::error::{Error, Result};
use crate::math::{Vec3, SPEED_OF_SOUND};

pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;

/// Two-ear impulse response; channel 0 is the left ear.
pub type Brir = Rir;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn index(self) -> usize {
        match self {
            Ear::Left => 0,
            Ear::Right => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    /// Head center (m).
    pub position: Vec3,
    /// Horizontal unit vector of the 0 degree direction.
    pub facing: Vec3,
    pub radius: f64,
    pub speed_of_sound: f64,
}

impl HeadModel {
    /// Head at `position` looking along the horizontal projection of `facing`.
    pub fn new(position: Vec3, facing: Vec3) -> Result<Self> {
        let flat = Vec3::new(facing.x, facing.y, 0.0);
        if !position.is_finite() || !flat.is_finite() || flat.norm() < 1e-9 {
            return Err(Error::Invalid("head facing must have a horizontal component".into()));
        }
        Ok(HeadModel {
            position,
            facing: flat.normalized(),
            radius: DEFAULT_HEAD_RADIUS,
            speed_of_sound: SPEED_OF_SOUND,
        })
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("head radius (m)", radius));
        }
        self.radius = radius;
        Ok(self)
    }

    /// Rotates the facing direction by `degrees` (positive turns right).
    pub fn turned(mut self, degrees: f64) -> Self {
        self.facing = self.direction(degrees);
        self
    }

    pub fn right(&self) -> Vec3 {
        self.facing.cross(Vec3::UP)
    }

    /// Outward axis through the given ear.
    pub fn ear_axis(&self, ear: Ear) -> Vec3 {
        match ear {
            Ear::Left => -self.right(),
            Ear::Right => self.right(),
        }
    }

    /// Horizontal unit vector at `azimuth_deg` relative to the facing direction.
    pub fn direction(&self, azimuth_deg: f64) -> Vec3 {
        let th = azimuth_deg.to_radians();
        self.facing * th.cos() + self.right() * th.sin()
    }

    /// Point at `distance` and `azimuth_deg` at ear height.
    pub fn point_at(&self, azimuth_deg: f64, distance: f64) -> Vec3 {
        self.position + self.direction(azimuth_deg) * distance
    }

    /// Azimuth of `p` in degrees, in (-180, 180].
    pub fn azimuth_of(&self, p: Vec3) -> f64 {
        let d = p - self.position;
        let az = d.dot(self.right()).atan2(d.dot(self.facing)).to_degrees();
        if az <= -180.0 {
            az + 360.0
        } else {
            az
        }
    }

    /// Angle (rad) between the ear axis and the direction towards `p`.
    pub fn incidence(&self, ear: Ear, p: Vec3) -> f64 {
        let d = (p - self.position).normalized();
        d.dot(self.ear_axis(ear)).clamp(-1.0, 1.0).acos()
    }

    /// Extra delay (s) of `ear` relative to the head center for incidence
    /// angle `gamma`: negative on the lit side, growing along the surface
    /// arc on the shadowed side.
    pub fn delay_for_incidence(&self, gamma: f64) -> f64 {
        let k = self.radius / self.speed_of_sound;
        if gamma <= FRAC_PI_2 {
            -k * gamma.cos()
        } else {
            k * (gamma - FRAC_PI_2)
        }
    }

    /// Largest possible interaural delay, `a (pi/2 + 1) / c`.
    pub fn max_itd(&self) -> f64 {
        self.radius * (FRAC_PI_2 + 1.0) / self.speed_of_sound
    }
}

/// Delay (s) of `ear` relative to the head center for a far source at
/// `azimuth_deg`, azimuth in (-180, 180].
pub fn ear_delay(head: &HeadModel, azimuth_deg: f64, ear: Ear) -> f64 {
    let p = head.position + head.direction(azimuth_deg);
    head.delay_for_incidence(head.incidence(ear, p))
}

/// Bilinear-transformed head-shadow section for one incidence angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowFilter {
    b0: f64,
    b1: f64,
    a1: f64,
}

impl ShadowFilter {
    /// Minimum high-frequency gain, reached at 150 degrees incidence.
    const ALPHA_MIN: f64 = 0.1;
    const THETA_MIN: f64 = 150.0 * PI / 180.0;

    pub fn new(gamma: f64, radius: f64, c: f64, fs: f64) -> Self {
        let alpha = (1.0 + Self::ALPHA_MIN / 2.0) + (1.0 - Self::ALPHA_MIN / 2.0) * (gamma / Self::THETA_MIN * PI).cos();
        let beta = 2.0 * c / radius;
        let k = 2.0 * fs;
        ShadowFilter {
            b0: (alpha * k + beta) / (k + beta),
            b1: (beta - alpha * k) / (k + beta),
            a1: (beta - k) / (k + beta),
        }
    }

    /// High-frequency (Nyquist) gain.
    pub fn hf_gain(&self) -> f64 {
        ((self.b0 - self.b1) / (1.0 - self.a1)).abs()
    }

    /// Number of samples after which the recursive part has decayed below 1e-10.
    pub fn settle_len(&self) -> usize {
        let r = self.a1.abs();
        if r < 1e-12 {
            1
        } else {
            ((-10.0 * core::f64::consts::LN_10) / r.ln()).ceil() as usize + 1
        }
    }

    /// Filters `x` in place, starting from rest.
    pub fn apply(&self, x: &mut [f64]) {
        let (mut x1, mut y1) = (0.0, 0.0);
        for v in x.iter_mut() {
            let y = self.b0 * *v + self.b1 * x1 - self.a1 * y1;
            x1 = *v;
            y1 = y;
            *v = y;
        }
    }
}

/// Renders one path into both ears of `out`.
fn render_path(out: &mut [Vec<f64>; 2], head: &HeadModel, fs: f64, position: Vec3, amplitude: f64) {
    let r = position.distance(head.position);
    let half = FRACTIONAL_DELAY_TAPS / 2;
    for ear in Ear::BOTH {
        let gamma = head.incidence(ear, position);
        let t = r / head.speed_of_sound + head.delay_for_incidence(gamma);
        let filter = ShadowFilter::new(gamma, head.radius, head.speed_of_sound, fs);
        let center = (t * fs).round() as i64;
        let start = center - half as i64;
        let mut kernel = vec![0.0; FRACTIONAL_DELAY_TAPS + filter.settle_len()];
        add_fractional_impulse(&mut kernel, fs, t - start as f64 / fs, amplitude);
        filter.apply(&mut kernel);
        let buf = &mut out[ear.index()];
        for (k, v) in kernel.iter().enumerate() {
            let n = start + k as i64;
            if n >= 0 && (n as usize) < buf.len() {
                buf[n as usize] += v;
            }
        }
    }
}

/// Mixing-time fit for `render_brir`: moves `spec.onset` earlier when the
/// rendered early part would leave less than `1 - max_early_share` of the
/// reverberant energy budget to the tail.
pub fn fit_brir_tail_onset(
    images: &ImageSourceSet,
    spec: &TailSpec,
    head: &HeadModel,
    fs: f64,
    max_early_share: f64,
) -> Result<TailSpec> {
    check_fs(fs)?;
    let direct = images.direct().ok_or(Error::NoDirectSound)?;
    let t_d = direct.distance / head.speed_of_sound;
    let split = |onset: f64| {
        let (out, direct_time) = render_early(images, head, fs, Some((onset, spec.crossfade)), 0);
        split_energy(&out, &direct_time, fs)
    };
    let (e_direct, _) = split(t_d);
    fit_tail_onset_with(spec, max_early_share, t_d, e_direct, |onset| split(onset).1)
}

fn rendered_len(head: &HeadModel, fs: f64, far: f64) -> usize {
    let filter = ShadowFilter::new(PI, head.radius, head.speed_of_sound, fs);
    let t = far / head.speed_of_sound + head.max_itd();
    (t * fs).ceil() as usize + FRACTIONAL_DELAY_TAPS + filter.settle_len() + 1
}

/// Renders all images weighted by the early fade `(onset, crossfade)`.
fn render_early(
    images: &ImageSourceSet,
    head: &HeadModel,
    fs: f64,
    fade: Option<(f64, f64)>,
    min_len: usize,
) -> ([Vec<f64>; 2], Vec<Option<f64>>) {
    let c = head.speed_of_sound;
    let weight = |img: &ImageSource| fade.map_or(1.0, |(onset, xf)| early_weight(img.distance / c, onset, xf));
    let far = images
        .images
        .iter()
        .filter(|i| weight(i) > 0.0)
        .map(|i| i.distance)
        .fold(0.0, f64::max);
    let len = rendered_len(head, fs, far).max(min_len);
    let mut out = [vec![0.0; len], vec![0.0; len]];
    for img in &images.images {
        let w = weight(img);
        if w > 0.0 {
            render_path(&mut out, head, fs, img.position, img.amplitude() * w);
        }
    }
    let direct_time = match images.direct() {
        Some(d) => direct_times(head, d.position),
        None => vec![None, None],
    };
    (out, direct_time)
}

/// Energy inside the per-ear direct windows and everywhere else.
fn split_energy(out: &[Vec<f64>; 2], direct_time: &[Option<f64>], fs: f64) -> (f64, f64) {
    let (mut e_direct, mut e_rest) = (0.0, 0.0);
    for (ch, td) in out.iter().zip(direct_time) {
        let (s, e) = td.map_or((0, 0), |t| direct_window(t, fs));
        for (i, v) in ch.iter().enumerate() {
            if i >= s && i < e {
                e_direct += v * v;
            } else {
                e_rest += v * v;
            }
        }
    }
    (e_direct, e_rest)
}

fn direct_times(head: &HeadModel, position: Vec3) -> Vec<Option<f64>> {
    let r = position.distance(head.position) / head.speed_of_sound;
    Ear::BOTH
        .iter()
        .map(|&e| Some(r + head.delay_for_incidence(head.incidence(e, position))))
        .collect()
}

fn check_fs(fs: f64) -> Result<()> {
    if !(fs >= 16_000.0) || !fs.is_finite() {
        return Err(Error::invalid("sample rate (need >= 16 kHz)", fs));
    }
    Ok(())
}

/// Renders an image-source set for a listener, optionally followed by a
/// diffuse tail. Early images fade out across the tail's crossfade and the
/// tail is scaled so the two-ear response meets the tail's DRR target.
pub fn render_brir(images: &ImageSourceSet, tail: Option<&DiffuseTail>, head: &HeadModel, fs: f64) -> Result<Brir> {
    check_fs(fs)?;
    if images.is_empty() {
        return Err(Error::Invalid("cannot render an empty image-source set".into()));
    }
    if images.receiver.distance(head.position) > 1e-9 {
        return Err(Error::Invalid("head position differs from the image-set receiver".into()));
    }
    if let Some(t) = tail {
        if t.fs != fs {
            return Err(Error::SampleRateMismatch {
                expected: fs,
                found: t.fs,
            });
        }
    }
    let c = head.speed_of_sound;
    let direct = images.direct();
    if let (Some(t), Some(d)) = (tail, direct) {
        if t.spec.onset < d.distance / c {
            return Err(Error::invalid("tail onset before direct sound (s)", t.spec.onset));
        }
    }
    if let Some(img) = images.images.iter().find(|i| i.distance <= head.radius) {
        return Err(Error::invalid("image distance inside the head (m)", img.distance));
    }

    let fade = tail.map(|t| (t.spec.onset, t.spec.crossfade));
    let (mut out, direct_time) = render_early(images, head, fs, fade, tail.map_or(0, |t| t.len()));
    if let Some(t) = tail {
        let gain = mix_gain(t.spec.drr_db, &out, &t.channels, &direct_time, fs)?;
        for (o, tc) in out.iter_mut().zip(&t.channels) {
            for (v, x) in o.iter_mut().zip(tc) {
                *v += gain * x;
            }
        }
    }
    let [l, r] = out;
    Ok(Rir {
        channels: vec![l, r],
        fs,
        direct_time,
        manipulation: Manipulation::None,
        tail_seed: tail.map(|t| t.spec.seed),
    })
}

/// Anechoic two-ear response of a point source at ear height.
pub fn render_point_source(azimuth_deg: f64, distance: f64, head: &HeadModel, fs: f64) -> Result<Brir> {
    check_fs(fs)?;
    if !(distance > head.radius) || !distance.is_finite() {
        return Err(Error::invalid("source distance (m), must exceed head radius", distance));
    }
    if !(azimuth_deg > -180.0 && azimuth_deg <= 180.0) {
        return Err(Error::invalid("azimuth (deg), must be in (-180, 180]", azimuth_deg));
    }
    let p = head.point_at(azimuth_deg, distance);
    let len = rendered_len(head, fs, distance);
    let mut out = [vec![0.0; len], vec![0.0; len]];
    render_path(&mut out, head, fs, p, 1.0 / distance);
    let [l, r] = out;
    Ok(Rir {
        channels: vec![l, r],
        fs,
        direct_time: direct_times(head, p),
        manipulation: Manipulation::None,
        tail_seed: None,
    })
}

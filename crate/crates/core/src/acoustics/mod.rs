//! Room acoustics: polygonal rooms, image sources with backtracking
//! visibility, hybrid impulse responses (exact early part plus a calibrated
//! stochastic tail), truncate/cut manipulations and RT60/DRR analysis.

mod analysis;
mod geometry;
mod ism;
mod rir;
mod tail;

pub use analysis::{analyze_rir, direct_to_reverberant, energy_decay_curve_db, reverberation_time, RirAnalysis};
pub use geometry::{Absorption, Face, Room, Wall, OCTAVE_BANDS_HZ};
pub use ism::{compute_image_sources, ImageSource, ImageSourceSet, IsmOptions};
pub use rir::{
    add_fractional_impulse, direct_window, manipulate_rir, mix_gain, synthesize_hybrid_rir, synthesize_rir, Manipulation,
    Rir, DIRECT_PROTECT_AFTER_S, DIRECT_PROTECT_BEFORE_S, FRACTIONAL_DELAY_TAPS,
};
pub use tail::{calibration_gain, fit_tail_onset, fit_tail_onset_with, synthesize_diffuse_tail, DiffuseTail, TailSpec};
pub(crate) use rir::early_weight;

//! Binaural unmasking in rooms: geometric room acoustics, spherical-head
//! rendering, stimulus synthesis, an auditory front end and two variants of
//! an equalization-cancellation style unmasking model (fast BMLD extraction
//! with later sluggish integration, and slow long-window extraction).
//!
//! The crate is `no_std` and only needs `alloc`. Everything is a pure
//! function of its inputs and explicit seeds; file formats and the command
//! line live in the `unmask` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod acoustics;
pub mod binaural;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod frontend;
pub mod math;
pub mod model;
pub mod staircase;
pub mod stimuli;

pub use error::{Error, Result};
pub use math::Vec3;

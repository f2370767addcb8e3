use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Corners are collinear, coincident, coplanar or produce an inverted room.
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("{what} is not strictly inside the room")]
    OutsideRoom { what: &'static str },
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error("sample rate mismatch: {expected} Hz vs {found} Hz")]
    SampleRateMismatch { expected: f64, found: f64 },
    /// The energy decay curve does not cover the -5 to -35 dB fit range.
    #[error("insufficient decay for reverberation time estimate")]
    InsufficientDecay,
    #[error("impulse response has no identifiable direct sound")]
    NoDirectSound,
    /// Early reflections alone already exceed the reverberant energy that the
    /// requested direct-to-reverberant ratio allows.
    #[error("cannot reach DRR {target_db:.2} dB: early part alone gives {early_db:.2} dB")]
    TailCalibration { target_db: f64, early_db: f64 },
    #[error("signal has zero energy")]
    ZeroEnergy,
    #[error("no valid frame left after flagging silent frames")]
    NoValidFrame,
    #[error("unsupported staircase rule {down}-down/{up}-up")]
    UnsupportedRule { down: u32, up: u32 },
    #[error("observer returned probability {0} outside [1/3, 1]")]
    ObserverContract(f64),
    #[error("condition {id}: {source}")]
    Condition { id: String, source: Box<Error> },
}

impl Error {
    pub fn invalid(name: &'static str, value: f64) -> Self {
        Error::InvalidParameter { name, value }
    }

    pub fn in_condition(self, id: impl Into<String>) -> Self {
        Error::Condition {
            id: id.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad inputs or configuration rather than by
    /// numerics (decay fits, calibration, convergence).
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Condition { source, .. } => source.is_config_error(),
            Error::InsufficientDecay
            | Error::NoDirectSound
            | Error::TailCalibration { .. }
            | Error::ZeroEnergy
            | Error::NoValidFrame
            | Error::ObserverContract(_) => false,
            _ => true,
        }
    }
}

//! Condition matrices and the end-to-end pipeline: room, image sources,
//! calibrated tail, two-ear rendering, manipulation, stimuli and the model.
//!
//! Every condition is self-contained (all seeds and calibration targets are
//! stored in its [`ConditionSpec`]), so rows can be recomputed in isolation
//! and in any order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::acoustics::{
    analyze_rir, compute_image_sources, manipulate_rir, synthesize_diffuse_tail, Absorption, IsmOptions,
    Manipulation, Room, TailSpec,
};
use crate::binaural::{fit_brir_tail_onset, render_brir, render_point_source, Brir, HeadModel, DEFAULT_HEAD_RADIUS};
use crate::error::{Error, Result};
use crate::frontend::{analyze, FilterbankSpec, FrameGrid};
use crate::math::{Vec3, SPEED_OF_SOUND};
use crate::model::{predict, ModelConfig, Prediction, Variant};
use crate::stimuli::{spatialize, synth_hct, synth_noise, BinauralSignal, HctSpec, NoiseSpec, Signal};

/// Truncation and cut times of the two built-in sweeps (ms).
pub const PAPER_TIMES_MS: [f64; 7] = [15.0, 20.0, 45.0, 75.0, 150.0, 250.0, 500.0];
pub const PAPER_ALPHAS: [f64; 2] = [0.1, 0.5];
pub const PAPER_AZIMUTHS: [f64; 2] = [0.0, 60.0];
pub const PAPER_SOURCE_DISTANCE: f64 = 5.0;
pub const PAPER_MASKER_DISTANCE: f64 = 2.4;
pub const EAR_HEIGHT: f64 = 1.4;
pub const DEFAULT_FS: f64 = 44_100.0;
pub const DEFAULT_SEED: u64 = 1;

/// Nominal mixing time of the hybrid responses (s).
pub const MIXING_TIME: f64 = 0.075;
/// Largest share of the reverberant energy budget the exact early part may use.
pub const MAX_EARLY_SHARE: f64 = 0.9;
/// Frames used for the steady-state IC start this long after the target
/// onset, so reflections up to the 75 ms truncation have all arrived.
pub const IC_SETTLE: f64 = 0.1;

pub const BRAASCH_AZIMUTHS: [f64; 3] = [0.0, 2.0, 20.0];
pub const BRAASCH_ALPHA: f64 = 0.2;
pub const ZUREK_ALPHAS: [f64; 6] = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];

/// Table of room corners (m): floor clockwise from the receiver's corner,
/// then the ceiling in the same order.
pub const PAPER_CORNERS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [0.77, 17.49, 0.15],
    [8.06, 16.71, 0.19],
    [7.24, -0.39, 0.31],
    [0.01, 0.02, 3.12],
    [0.46, 17.14, 2.84],
    [7.58, 16.49, 3.04],
    [7.01, -0.12, 3.35],
];

/// Target reverberation time of the built-in `paper` room (s).
pub fn reference_rt60(alpha: f64) -> Option<f64> {
    match alpha {
        0.1 => Some(0.736),
        0.5 => Some(0.302),
        _ => None,
    }
}

/// Target DRR of the `paper` room for the two source positions (dB).
pub fn reference_drr_db(alpha: f64, azimuth_deg: f64) -> Option<f64> {
    match (alpha, azimuth_deg) {
        (a, z) if a == 0.1 && z == 0.0 => Some(-11.8),
        (a, z) if a == 0.1 && z == 60.0 => Some(-12.3),
        (a, z) if a == 0.5 && z == 0.0 => Some(-4.2),
        (a, z) if a == 0.5 && z == 60.0 => Some(-4.9),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoomId {
    Paper,
    Braasch,
    Zurek,
}

impl RoomId {
    pub fn name(self) -> &'static str {
        match self {
            RoomId::Paper => "paper",
            RoomId::Braasch => "braasch",
            RoomId::Zurek => "zurek",
        }
    }
}

impl core::str::FromStr for RoomId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(RoomId::Paper),
            "braasch" => Ok(RoomId::Braasch),
            "zurek" => Ok(RoomId::Zurek),
            _ => Err(Error::Invalid(format!("unknown room {s:?}"))),
        }
    }
}

/// Room geometry with its listener pose.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomSetup {
    pub id: RoomId,
    pub corners: [Vec3; 8],
    pub listener: Vec3,
    pub facing: Vec3,
}

fn lerp_to_height(a: Vec3, b: Vec3, z: f64) -> Vec3 {
    let t = (z - a.z) / (b.z - a.z);
    a + (b - a) * t
}

/// Intersection of two horizontal lines `p + s u` and `q + t v`.
fn intersect_2d(p: Vec3, u: Vec3, q: Vec3, v: Vec3) -> Result<Vec3> {
    let det = u.x * v.y - u.y * v.x;
    if det.abs() < 1e-12 {
        return Err(Error::Geometry("parallel walls".into()));
    }
    let w = q - p;
    let s = (w.x * v.y - w.y * v.x) / det;
    Ok(p + u * s)
}

impl RoomSetup {
    /// The built-in `paper` room. The listener sits at ear height, 1.5 m (horizontally)
    /// from the walls through corners 1-2 and 4-1, facing along wall 1-2, so
    /// the 60 degree source lies to the right, inside the room.
    pub fn paper() -> Result<Self> {
        let c = PAPER_CORNERS.map(|[x, y, z]| Vec3::new(x, y, z));
        // wall lines at ear height
        let p1 = lerp_to_height(c[0], c[4], EAR_HEIGHT);
        let p2 = lerp_to_height(c[1], c[5], EAR_HEIGHT);
        let p4 = lerp_to_height(c[3], c[7], EAR_HEIGHT);
        let along12 = (p2 - p1).normalized();
        let along14 = (p4 - p1).normalized();
        // inward normals: each wall's normal pointing to the other wall's far end
        let inward = |u: Vec3, towards: Vec3| {
            let n = Vec3::new(-u.y, u.x, 0.0);
            if n.dot(towards) >= 0.0 {
                n
            } else {
                -n
            }
        };
        let n12 = inward(along12, along14);
        let n14 = inward(along14, along12);
        let listener = intersect_2d(p1 + n12 * 1.5, along12, p1 + n14 * 1.5, along14)?;
        Ok(RoomSetup {
            id: RoomId::Paper,
            corners: c,
            listener: Vec3::new(listener.x, listener.y, EAR_HEIGHT),
            facing: along12,
        })
    }

    /// 5 x 6 x 3 m box, listener at (2.5, 2.5, 1.4) facing +y.
    pub fn braasch() -> Self {
        RoomSetup {
            id: RoomId::Braasch,
            corners: shoebox_corners(5.0, 6.0, 3.0),
            listener: Vec3::new(2.5, 2.5, EAR_HEIGHT),
            facing: Vec3::new(0.0, 1.0, 0.0),
        }
    }

    /// 4.8 x 6.6 x 2.6 m box, listener 2.8 m from the right wall and 2.5 m
    /// from the rear wall, turned 20 degrees to the left.
    pub fn zurek() -> Self {
        let front = Vec3::new(0.0, 1.0, 0.0);
        let right = front.cross(Vec3::UP);
        let th = (-20.0f64).to_radians();
        RoomSetup {
            id: RoomId::Zurek,
            corners: shoebox_corners(4.8, 6.6, 2.6),
            listener: Vec3::new(4.8 - 2.8, 2.5, EAR_HEIGHT),
            facing: front * th.cos() + right * th.sin(),
        }
    }

    pub fn by_id(id: RoomId) -> Result<Self> {
        match id {
            RoomId::Paper => Self::paper(),
            RoomId::Braasch => Ok(Self::braasch()),
            RoomId::Zurek => Ok(Self::zurek()),
        }
    }

    pub fn room(&self, alpha: f64) -> Result<Room> {
        Room::from_corners(self.corners, Absorption::flat(alpha)?)
    }

    pub fn head(&self, radius: f64) -> Result<HeadModel> {
        HeadModel::new(self.listener, self.facing)?.with_radius(radius)
    }
}

fn shoebox_corners(lx: f64, ly: f64, lz: f64) -> [Vec3; 8] {
    [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(0.0, ly, 0.0),
        Vec3::new(lx, ly, 0.0),
        Vec3::new(lx, 0.0, 0.0),
        Vec3::new(0.0, 0.0, lz),
        Vec3::new(0.0, ly, lz),
        Vec3::new(lx, ly, lz),
        Vec3::new(lx, 0.0, lz),
    ]
}

/// Calibration target of a stochastic tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTarget {
    pub rt60: f64,
    pub drr_db: f64,
    /// Nominal mixing time before the early-energy fit (s).
    pub onset: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourcePath {
    /// Free-field direct sound only.
    Anechoic,
    /// Image sources in the room, followed by a tail when given.
    Room { tail: Option<TailTarget> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcePose {
    pub azimuth_deg: f64,
    pub distance: f64,
    pub path: SourcePath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stimulus {
    Hct(HctSpec),
    Noise(NoiseSpec),
}

impl Stimulus {
    pub fn synth(&self, fs: f64) -> Result<Signal> {
        match self {
            Stimulus::Hct(s) => synth_hct(s, fs),
            Stimulus::Noise(s) => synth_noise(s, fs),
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Stimulus::Hct(s) => s.total_duration(),
            Stimulus::Noise(s) => s.duration,
        }
    }

    pub fn ramp(&self) -> f64 {
        match self {
            Stimulus::Hct(s) => s.ramp,
            Stimulus::Noise(s) => s.ramp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub id: String,
    /// `exp1`, `exp2`, `braasch` or `zurek`.
    pub experiment: String,
    pub room: RoomId,
    pub alpha: f64,
    pub target: SourcePose,
    pub masker: SourcePose,
    /// Applied to the target response only.
    pub manipulation: Manipulation,
    pub target_stimulus: Stimulus,
    pub masker_stimulus: Stimulus,
    /// Start of the dry target relative to the dry masker (s).
    pub target_offset: f64,
    pub head_radius: f64,
    pub fs: f64,
    pub max_order: usize,
    /// Report the benefit relative to the mean of the two monaural
    /// (left-only, right-only) predictions instead of in absolute terms.
    #[serde(default)]
    pub monaural_reference: bool,
}

impl ConditionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("absorption coefficient", self.alpha));
        }
        if !(self.fs >= 16_000.0) {
            return Err(Error::invalid("sample rate", self.fs));
        }
        if !(self.target_offset >= 0.0) {
            return Err(Error::invalid("target offset (s)", self.target_offset));
        }
        for pose in [&self.target, &self.masker] {
            if !(pose.distance > self.head_radius) {
                return Err(Error::invalid("source distance (m)", pose.distance));
            }
            if let SourcePath::Room { tail: Some(t) } = &pose.path {
                if !(t.rt60 > 0.0 && t.drr_db.is_finite() && t.onset > 0.0) {
                    return Err(Error::Invalid("tail target needs RT60 > 0, finite DRR, onset > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Evaluation window on the rendered timeline: the masker's plateau,
    /// excluding its ramps, shifted by its direct arrival.
    pub fn evaluation_window(&self) -> [f64; 2] {
        let t = self.masker.distance / SPEED_OF_SOUND;
        let ramp = self.masker_stimulus.ramp();
        [t + ramp, t + self.masker_stimulus.duration() - ramp]
    }

    /// Span of the target's direct sound on the rendered timeline (s).
    pub fn target_span(&self) -> [f64; 2] {
        let start = self.target_offset + self.target.distance / SPEED_OF_SOUND;
        [start, start + self.target_stimulus.duration()]
    }

    pub fn model_config(&self, variant: Variant) -> ModelConfig {
        let [a, b] = self.evaluation_window();
        ModelConfig::new(variant).with_window(a, b)
    }
}

/// Mixes a base seed with a label into an independent 64-bit seed.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for b in label.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
    }
    // splitmix64 finalizer
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

/// Tail seed of a room: the late field is a property of the room and its
/// absorption, shared by all source positions.
pub fn room_tail_seed(base: u64, room: RoomId, alpha: f64) -> u64 {
    derive_seed(base, &format!("tail/{}/{alpha}", room.name()))
}

fn centered_offset(target: &Stimulus, masker: &Stimulus) -> f64 {
    ((masker.duration() - target.duration()) / 2.0).max(0.0)
}

/// Exp 1 (`experiment = 1`, 28 truncation conditions) or Exp 2 (14 cut
/// conditions, frontal target only).
pub fn build_paper_conditions(experiment: u8, seed: u64) -> Result<Vec<ConditionSpec>> {
    let azimuths: &[f64] = match experiment {
        1 => &PAPER_AZIMUTHS,
        2 => &PAPER_AZIMUTHS[..1],
        _ => return Err(Error::Invalid(format!("experiment must be 1 or 2, got {experiment}"))),
    };
    let target_stimulus = Stimulus::Hct(HctSpec::default());
    let masker_stimulus = Stimulus::Noise(NoiseSpec::uniform_exciting(derive_seed(seed, "masker")));
    let target_offset = centered_offset(&target_stimulus, &masker_stimulus);
    let mut out = Vec::new();
    for &alpha in &PAPER_ALPHAS {
        for &az in azimuths {
            for &t_ms in &PAPER_TIMES_MS {
                let (mode, manipulation) = if experiment == 1 {
                    ("truncate", Manipulation::Truncate { t_ms })
                } else {
                    ("cut", Manipulation::Cut { t_ms })
                };
                let tail = TailTarget {
                    rt60: reference_rt60(alpha).ok_or(Error::invalid("alpha", alpha))?,
                    drr_db: reference_drr_db(alpha, az).ok_or(Error::invalid("azimuth (deg)", az))?,
                    onset: MIXING_TIME,
                    seed: room_tail_seed(seed, RoomId::Paper, alpha),
                };
                out.push(ConditionSpec {
                    id: format!("exp{experiment}_a{alpha}_az{az}_{mode}{t_ms}"),
                    experiment: format!("exp{experiment}"),
                    room: RoomId::Paper,
                    alpha,
                    target: SourcePose {
                        azimuth_deg: az,
                        distance: PAPER_SOURCE_DISTANCE,
                        path: SourcePath::Room { tail: Some(tail) },
                    },
                    masker: SourcePose {
                        azimuth_deg: 0.0,
                        distance: PAPER_MASKER_DISTANCE,
                        path: SourcePath::Anechoic,
                    },
                    manipulation,
                    target_stimulus: target_stimulus.clone(),
                    masker_stimulus: masker_stimulus.clone(),
                    target_offset,
                    head_radius: DEFAULT_HEAD_RADIUS,
                    fs: DEFAULT_FS,
                    max_order: IsmOptions::default().max_order,
                    monaural_reference: false,
                });
            }
        }
    }
    Ok(out)
}

/// Eyring tail target for a source at `distance` in `room`; `None` for a
/// fully absorbing room.
fn eyring_tail(room: &Room, distance: f64, seed: u64) -> Option<TailTarget> {
    if room.absorption().mean() >= 1.0 {
        return None;
    }
    Some(TailTarget {
        rt60: room.eyring_rt60(SPEED_OF_SOUND),
        drr_db: room.diffuse_field_drr_db(distance),
        onset: MIXING_TIME,
        seed,
    })
}

/// Tail target used for a single source: the reference targets in the `paper`
/// room when they exist, Eyring otherwise; `None` for a fully absorbing room.
pub fn default_tail(setup: &RoomSetup, alpha: f64, azimuth_deg: f64, distance: f64, seed: u64) -> Result<Option<TailTarget>> {
    let room = setup.room(alpha)?;
    let tail_seed = room_tail_seed(seed, setup.id, alpha);
    if setup.id == RoomId::Paper && distance == PAPER_SOURCE_DISTANCE {
        if let (Some(rt60), Some(drr_db)) = (reference_rt60(alpha), reference_drr_db(alpha, azimuth_deg)) {
            return Ok(Some(TailTarget {
                rt60,
                drr_db,
                onset: MIXING_TIME,
                seed: tail_seed,
            }));
        }
    }
    Ok(eyring_tail(&room, distance, tail_seed))
}

fn broadband(duration: f64, ramp: f64, seed: u64) -> NoiseSpec {
    NoiseSpec {
        duration,
        ramp,
        ..NoiseSpec::white(200.0, 14_000.0, seed)
    }
}

/// Broadband noise target at 0, 2 and 20 degrees, 2 m, and a broadband
/// masker at 0 degrees, 2 m, both reverberant.
pub fn build_braasch_conditions(alpha: f64, reverberant_masker: bool, seed: u64) -> Result<Vec<ConditionSpec>> {
    let setup = RoomSetup::braasch();
    let room = setup.room(alpha)?;
    let tail_seed = room_tail_seed(seed, RoomId::Braasch, alpha);
    let target_stimulus = Stimulus::Noise(broadband(0.5, 0.01, derive_seed(seed, "braasch/target")));
    let masker_stimulus = Stimulus::Noise(broadband(0.9, 0.03, derive_seed(seed, "braasch/masker")));
    let target_offset = centered_offset(&target_stimulus, &masker_stimulus);
    let path = SourcePath::Room {
        tail: eyring_tail(&room, 2.0, tail_seed),
    };
    let masker_path = if reverberant_masker { path.clone() } else { SourcePath::Anechoic };
    Ok(BRAASCH_AZIMUTHS
        .iter()
        .map(|&az| ConditionSpec {
            id: format!("braasch_a{alpha}_az{az}"),
            experiment: "braasch".into(),
            room: RoomId::Braasch,
            alpha,
            target: SourcePose {
                azimuth_deg: az,
                distance: 2.0,
                path: path.clone(),
            },
            masker: SourcePose {
                azimuth_deg: 0.0,
                distance: 2.0,
                path: masker_path.clone(),
            },
            manipulation: Manipulation::None,
            target_stimulus: target_stimulus.clone(),
            masker_stimulus: masker_stimulus.clone(),
            target_offset,
            head_radius: DEFAULT_HEAD_RADIUS,
            fs: DEFAULT_FS,
            max_order: IsmOptions::default().max_order,
            monaural_reference: false,
        })
        .collect())
}

/// Third-octave noise target at 0 degrees, 1 m, reverberant, and an
/// anechoic broadband masker at 60 degrees, 1 m, for each absorption.
pub fn build_zurek_conditions(alphas: &[f64], seed: u64) -> Result<Vec<ConditionSpec>> {
    let setup = RoomSetup::zurek();
    let third = 2f64.powf(1.0 / 6.0);
    let target_stimulus = Stimulus::Noise(NoiseSpec {
        duration: 0.5,
        ramp: 0.01,
        ..NoiseSpec::white(500.0 / third, 500.0 * third, derive_seed(seed, "zurek/target"))
    });
    let masker_stimulus = Stimulus::Noise(broadband(0.9, 0.03, derive_seed(seed, "zurek/masker")));
    let target_offset = centered_offset(&target_stimulus, &masker_stimulus);
    alphas
        .iter()
        .map(|&alpha| {
            let room = setup.room(alpha)?;
            Ok(ConditionSpec {
                id: format!("zurek_a{alpha}"),
                experiment: "zurek".into(),
                room: RoomId::Zurek,
                alpha,
                target: SourcePose {
                    azimuth_deg: 0.0,
                    distance: 1.0,
                    path: SourcePath::Room {
                        tail: eyring_tail(&room, 1.0, room_tail_seed(seed, RoomId::Zurek, alpha)),
                    },
                },
                masker: SourcePose {
                    azimuth_deg: 60.0,
                    distance: 1.0,
                    path: SourcePath::Anechoic,
                },
                manipulation: Manipulation::None,
                target_stimulus: target_stimulus.clone(),
                masker_stimulus: masker_stimulus.clone(),
                target_offset,
                head_radius: DEFAULT_HEAD_RADIUS,
                fs: DEFAULT_FS,
                max_order: IsmOptions::default().max_order,
                monaural_reference: true,
            })
        })
        .collect()
}

/// Two-ear response of one source, before any manipulation.
pub fn render_source(setup: &RoomSetup, alpha: f64, pose: &SourcePose, head_radius: f64, fs: f64, max_order: usize) -> Result<Brir> {
    let head = setup.head(head_radius)?;
    let tail = match &pose.path {
        SourcePath::Anechoic => return render_point_source(pose.azimuth_deg, pose.distance, &head, fs),
        SourcePath::Room { tail } => tail,
    };
    let room = setup.room(alpha)?;
    let source = head.point_at(pose.azimuth_deg, pose.distance);
    let mut opts = IsmOptions::with_max_order(max_order);
    let spec = tail
        .as_ref()
        .map(|t| TailSpec::new(t.rt60, t.drr_db, t.onset, t.seed));
    if let Some(s) = &spec {
        opts.max_delay = Some(s.onset + s.crossfade);
    }
    let images = compute_image_sources(&room, source, head.position, &opts)?;
    match spec {
        None => render_brir(&images, None, &head, fs),
        Some(spec) => {
            let spec = fit_brir_tail_onset(&images, &spec, &head, fs, MAX_EARLY_SHARE)?;
            let tail = synthesize_diffuse_tail(&spec, fs)?;
            render_brir(&images, Some(&tail), &head, fs)
        }
    }
}

/// Rendered signals of one condition, both on the masker's timeline.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedCondition {
    pub target_brir: Brir,
    pub target: BinauralSignal,
    pub masker: BinauralSignal,
}

/// Scales `s` so its two-ear energy equals that of `reference` presented
/// diotically: the level at the listener is the stimulus' nominal level
/// regardless of the response.
fn normalize_to(s: &mut BinauralSignal, reference: &Signal) -> Result<()> {
    let want = 2.0 * crate::math::energy(&reference.samples);
    let have = s.energy();
    if !(have > 0.0) || !(want > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    s.scale((want / have).sqrt());
    Ok(())
}

pub fn render_condition(spec: &ConditionSpec) -> Result<RenderedCondition> {
    let run = || -> Result<RenderedCondition> {
        spec.validate()?;
        let setup = RoomSetup::by_id(spec.room)?;
        let full = render_source(&setup, spec.alpha, &spec.target, spec.head_radius, spec.fs, spec.max_order)?;
        let target_brir = manipulate_rir(&full, spec.manipulation)?;
        let masker_brir = render_source(&setup, spec.alpha, &spec.masker, spec.head_radius, spec.fs, spec.max_order)?;

        let dry_t = spec.target_stimulus.synth(spec.fs)?;
        let dry_m = spec.masker_stimulus.synth(spec.fs)?;
        let mut target = spatialize(&dry_t, &target_brir)?;
        normalize_to(&mut target, &dry_t)?;
        let mut masker = spatialize(&dry_m, &masker_brir)?;
        normalize_to(&mut masker, &dry_m)?;
        let target = target.delayed((spec.target_offset * spec.fs).round() as usize);
        let len = target.len().max(masker.len());
        Ok(RenderedCondition {
            target_brir,
            target: target.resized(len),
            masker: masker.resized(len),
        })
    };
    run().map_err(|e| e.in_condition(spec.id.clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub id: String,
    pub experiment: String,
    pub alpha: f64,
    pub azimuth_deg: f64,
    /// `none`, `truncate` or `cut`.
    pub mode: String,
    pub t_ms: Option<f64>,
    pub variant: Variant,
    pub benefit_db: f64,
    /// `-benefit + offset`; the offset is zero until fitted to data.
    pub threshold_db: f64,
    /// DRR of the (manipulated) target response; `+inf` when direct only.
    pub drr_db: f64,
    pub rt60_s: Option<f64>,
    /// Steady-state interaural coherence of the target in the 500 Hz band.
    pub mean_ic: Option<f64>,
    /// Mean monaural benefit subtracted from `benefit_db`, if any.
    pub monaural_db: Option<f64>,
}

pub fn mode_name(m: &Manipulation) -> &'static str {
    match m {
        Manipulation::None => "none",
        Manipulation::Truncate { .. } => "truncate",
        Manipulation::Cut { .. } => "cut",
    }
}

/// Per-frame coherence in the band nearest 500 Hz; `None` for silent frames.
pub fn ic_timeseries(signal: &BinauralSignal, grid: &FrameGrid) -> Result<Vec<Option<f64>>> {
    let fb = FilterbankSpec::new(vec![500.0], signal.fs)?;
    let cues = analyze(signal, &fb, core::slice::from_ref(grid))?;
    Ok(cues[0].cues[0].iter().map(|c| c.map(|c| c.rho)).collect())
}

/// Mean coherence over the 12 ms-hop frames lying inside `[start, end]` (s).
pub fn mean_ic_between(signal: &BinauralSignal, start: f64, end: f64) -> Result<Option<f64>> {
    let grid = FrameGrid::fast(signal.fs, signal.len())?;
    let ic = ic_timeseries(signal, &grid)?;
    let vals: Vec<f64> = (0..grid.frames)
        .filter(|&j| {
            let a = grid.start(j) as f64 / signal.fs;
            a >= start && a + grid.len as f64 / signal.fs <= end
        })
        .filter_map(|j| ic[j])
        .collect();
    Ok((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

/// Steady-state mean coherence of a condition's rendered target: from
/// `IC_SETTLE` after the direct-sound onset to the end of the dry target.
pub fn steady_state_ic(spec: &ConditionSpec, rendered: &RenderedCondition) -> Result<Option<f64>> {
    let [a, b] = spec.target_span();
    mean_ic_between(&rendered.target, a + IC_SETTLE, b)
}

/// Mean over the two ears of the benefit predicted when only that ear is
/// presented (to both model inputs, so no binaural cue is available).
pub fn monaural_benefit_db(target: &BinauralSignal, masker: &BinauralSignal, cfg: &ModelConfig) -> Result<f64> {
    let mut sum = 0.0;
    for ear in 0..2 {
        let one = |s: &BinauralSignal| BinauralSignal::new(s.channels[ear].clone(), s.channels[ear].clone(), s.fs);
        sum += predict(&one(target)?, &one(masker)?, cfg)?.benefit_db;
    }
    Ok(sum / 2.0)
}

/// Runs one condition for the requested variants (one row each).
pub fn run_condition(spec: &ConditionSpec, variants: &[Variant]) -> Result<Vec<ResultRow>> {
    let rendered = render_condition(spec)?;
    let run = || -> Result<Vec<ResultRow>> {
        let analysis = analyze_rir(&rendered.target_brir)?;
        let mean_ic = steady_state_ic(spec, &rendered)?;
        variants
            .iter()
            .map(|&v| {
                let cfg = spec.model_config(v);
                let p = predict(&rendered.target, &rendered.masker, &cfg)?;
                let monaural_db = if spec.monaural_reference {
                    Some(monaural_benefit_db(&rendered.target, &rendered.masker, &cfg)?)
                } else {
                    None
                };
                let benefit_db = p.benefit_db - monaural_db.unwrap_or(0.0);
                Ok(ResultRow {
                    id: spec.id.clone(),
                    experiment: spec.experiment.clone(),
                    alpha: spec.alpha,
                    azimuth_deg: spec.target.azimuth_deg,
                    mode: mode_name(&spec.manipulation).into(),
                    t_ms: spec.manipulation.time_ms(),
                    variant: v,
                    benefit_db,
                    threshold_db: -benefit_db,
                    drr_db: analysis.drr_db,
                    rt60_s: analysis.rt60,
                    mean_ic,
                    monaural_db,
                })
            })
            .collect()
    };
    run().map_err(|e| e.in_condition(spec.id.clone()))
}

/// Full prediction of one condition and variant, for dumping matrices.
pub fn predict_condition(spec: &ConditionSpec, variant: Variant) -> Result<Prediction> {
    let rendered = render_condition(spec)?;
    predict(&rendered.target, &rendered.masker, &spec.model_config(variant)).map_err(|e| e.in_condition(spec.id.clone()))
}

/// Runs conditions in order; rows come out grouped by condition.
pub fn run_conditions(conditions: &[ConditionSpec], variants: &[Variant]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(conditions.len() * variants.len());
    for c in conditions {
        rows.extend(run_condition(c, variants)?);
    }
    Ok(rows)
}

/// Sets every threshold to `-benefit + offset`.
pub fn apply_offset(rows: &mut [ResultRow], offset: f64) {
    for r in rows {
        r.threshold_db = -r.benefit_db + offset;
    }
}

pub fn replicate_braasch(seed: u64, variants: &[Variant]) -> Result<Vec<ResultRow>> {
    run_conditions(&build_braasch_conditions(BRAASCH_ALPHA, true, seed)?, variants)
}

pub fn replicate_zurek(seed: u64, variants: &[Variant]) -> Result<Vec<ResultRow>> {
    run_conditions(&build_zurek_conditions(&ZUREK_ALPHAS, seed)?, variants)
}

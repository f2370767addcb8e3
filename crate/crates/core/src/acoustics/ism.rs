//! Image source method for polygonal rooms.
//!
//! Images are generated by mirroring across every face the current image is
//! in front of. Each image is validated by backtracking from the receiver:
//! every reflection point must fall inside its face and, for non-convex rooms,
//! every path segment must be unobstructed. Invisible images are still
//! expanded, up to a run of `invisible_parent_limit` invisible ancestors.
//!
//! With the receiver in front of every face plane, an image's distance to the
//! receiver never decreases when it is mirrored again, so the level and delay
//! cut-offs prune whole branches safely.

use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::geometry::{Room, Wall};
use crate::error::{Error, Result};
use crate::math::{Vec3, SPEED_OF_SOUND};

const INSIDE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsmOptions {
    pub max_order: usize,
    /// Branches are cut once this many consecutive ancestors are invisible.
    pub invisible_parent_limit: usize,
    /// Images this far (dB) below the direct sound are dropped with their subtree.
    pub level_cutoff_db: f64,
    /// Optional cut-off on arrival time (s).
    pub max_delay: Option<f64>,
    pub speed_of_sound: f64,
}

impl Default for IsmOptions {
    fn default() -> Self {
        IsmOptions {
            max_order: 8,
            invisible_parent_limit: 7,
            level_cutoff_db: 80.0,
            max_delay: None,
            speed_of_sound: SPEED_OF_SOUND,
        }
    }
}

impl IsmOptions {
    pub fn with_max_order(max_order: usize) -> Self {
        IsmOptions {
            max_order,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSource {
    pub position: Vec3,
    pub order: usize,
    pub walls: Vec<Wall>,
    /// Face indices into `Room::faces`, in reflection order.
    pub faces: Vec<usize>,
    /// Product of pressure reflection factors along the path.
    pub reflection: f64,
    pub distance: f64,
    pub arrival: f64,
    pub visible: bool,
}

impl ImageSource {
    /// Free-field pressure amplitude at the receiver, `reflection / distance`.
    pub fn amplitude(&self) -> f64 {
        self.reflection / self.distance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSourceSet {
    pub source: Vec3,
    pub receiver: Vec3,
    pub speed_of_sound: f64,
    /// Visible images sorted by (order, arrival time).
    pub images: Vec<ImageSource>,
}

impl ImageSourceSet {
    pub fn direct(&self) -> Option<&ImageSource> {
        self.images.iter().find(|i| i.order == 0)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.images.iter().map(|i| i.order).max().unwrap_or(0)
    }

    /// Images arriving no later than `t` seconds.
    pub fn arriving_before(&self, t: f64) -> ImageSourceSet {
        ImageSourceSet {
            images: self.images.iter().filter(|i| i.arrival <= t).cloned().collect(),
            ..self.clone()
        }
    }
}

struct Search<'a> {
    room: &'a Room,
    source: Vec3,
    receiver: Vec3,
    opts: &'a IsmOptions,
    direct_distance: f64,
    // (face, image position) from the first reflection to the current one
    path: Vec<(usize, Vec3)>,
    out: Vec<ImageSource>,
}

pub fn compute_image_sources(
    room: &Room,
    source: Vec3,
    receiver: Vec3,
    opts: &IsmOptions,
) -> Result<ImageSourceSet> {
    if !room.contains(source) {
        return Err(Error::OutsideRoom { what: "source" });
    }
    if !room.contains(receiver) {
        return Err(Error::OutsideRoom { what: "receiver" });
    }
    if !(opts.speed_of_sound > 0.0) {
        return Err(Error::invalid("speed of sound", opts.speed_of_sound));
    }
    let direct_distance = source.distance(receiver);
    if direct_distance < 1e-9 {
        return Err(Error::Invalid("source and receiver coincide".into()));
    }

    let mut search = Search {
        room,
        source,
        receiver,
        opts,
        direct_distance,
        path: Vec::with_capacity(opts.max_order),
        out: Vec::new(),
    };

    let direct_visible = room.is_convex() || search.segment_clear(source, receiver, None, None);
    if direct_visible {
        search.out.push(ImageSource {
            position: source,
            order: 0,
            walls: Vec::new(),
            faces: Vec::new(),
            reflection: 1.0,
            distance: direct_distance,
            arrival: direct_distance / opts.speed_of_sound,
            visible: true,
        });
    }
    search.expand(source, None, 1.0, if direct_visible { 0 } else { 1 });

    let mut images = search.out;
    images.sort_by(|a, b| {
        canonical_order(a, b)
            .then(a.position.total_cmp(&b.position))
            .then_with(|| a.faces.cmp(&b.faces))
    });
    Ok(ImageSourceSet {
        source,
        receiver,
        speed_of_sound: opts.speed_of_sound,
        images,
    })
}

impl Search<'_> {
    fn expand(&mut self, image: Vec3, last_face: Option<usize>, reflection: f64, invisible_run: usize) {
        if self.path.len() >= self.opts.max_order || invisible_run >= self.opts.invisible_parent_limit.max(1) {
            return;
        }
        let c = self.opts.speed_of_sound;
        for (fi, face) in self.room.faces().iter().enumerate() {
            if Some(fi) == last_face || face.signed_distance(image) <= INSIDE_TOL {
                continue;
            }
            let child = face.mirror(image);
            let distance = child.distance(self.receiver);
            if let Some(max_delay) = self.opts.max_delay {
                if distance / c > max_delay {
                    continue;
                }
            }
            let child_reflection = reflection * face.reflection;
            let level_db = 20.0 * (child_reflection * self.direct_distance / distance).log10();
            if level_db < -self.opts.level_cutoff_db {
                continue;
            }

            self.path.push((fi, child));
            let visible = self.path_visible();
            if visible {
                let faces: Vec<usize> = self.path.iter().map(|&(f, _)| f).collect();
                self.out.push(ImageSource {
                    position: child,
                    order: self.path.len(),
                    walls: faces.iter().map(|&f| self.room.faces()[f].wall).collect(),
                    faces,
                    reflection: child_reflection,
                    distance,
                    arrival: distance / c,
                    visible: true,
                });
            }
            let run = if visible { 0 } else { invisible_run + 1 };
            self.expand(child, Some(fi), child_reflection, run);
            self.path.pop();
        }
    }

    /// Backtracks the current path from the receiver to the source.
    fn path_visible(&self) -> bool {
        let faces = self.room.faces();
        let mut point = self.receiver;
        let mut prev_face: Option<usize> = None;
        for k in (0..self.path.len()).rev() {
            let (fi, image) = self.path[k];
            let face = &faces[fi];
            let Some((t, hit)) = face.plane_intersection(point, image) else {
                return false;
            };
            if !(t > 1e-12 && t < 1.0 - 1e-12) || !face.contains(hit, 1e-9) {
                return false;
            }
            if !self.room.is_convex() && !self.segment_clear(point, hit, prev_face, Some(fi)) {
                return false;
            }
            point = hit;
            prev_face = Some(fi);
        }
        self.room.is_convex() || self.segment_clear(point, self.source, prev_face, None)
    }

    /// True if no face other than the endpoint faces cuts the segment interior.
    fn segment_clear(&self, a: Vec3, b: Vec3, skip_a: Option<usize>, skip_b: Option<usize>) -> bool {
        self.room.faces().iter().enumerate().all(|(fi, face)| {
            if Some(fi) == skip_a || Some(fi) == skip_b {
                return true;
            }
            let da = face.signed_distance(a);
            let db = face.signed_distance(b);
            if (da > 0.0) == (db > 0.0) {
                return true;
            }
            match face.plane_intersection(a, b) {
                Some((t, hit)) if t > 1e-9 && t < 1.0 - 1e-9 => !face.contains(hit, -1e-9),
                _ => true,
            }
        })
    }
}

/// Canonical ordering of image sets: by order, then arrival time.
fn canonical_order(a: &ImageSource, b: &ImageSource) -> Ordering {
    a.order.cmp(&b.order).then(a.arrival.total_cmp(&b.arrival))
}

//! Polygonal room made of eight corners and six logical walls.
//!
//! Corner order: floor corners 1-4 going around the room, ceiling corners
//! 5-8 above them in the same order. Each wall is kept as one planar convex
//! polygon when its four corners are coplanar, otherwise it is split into two
//! triangles that share the wall's absorption.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

pub const OCTAVE_BANDS_HZ: [f64; 6] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];

const PLANAR_TOL: f64 = 1e-9;
const AREA_TOL: f64 = 1e-9;

/// Absorption coefficients per octave band, 125 Hz to 4 kHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Absorption([f64; 6]);

impl Absorption {
    pub fn flat(alpha: f64) -> Result<Self> {
        Self::per_band([alpha; 6])
    }

    pub fn per_band(bands: [f64; 6]) -> Result<Self> {
        for &a in &bands {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid("absorption coefficient", a));
            }
        }
        Ok(Absorption(bands))
    }

    pub fn bands(&self) -> [f64; 6] {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / 6.0
    }

    /// Frequency-flat pressure reflection factor `sqrt(1 - alpha)`. Band
    /// values are averaged first; the rooms used here are flat anyway.
    pub fn reflection_factor(&self) -> f64 {
        (1.0 - self.mean()).max(0.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    Floor,
    Ceiling,
    /// Side through floor corners 1 and 2.
    Side12,
    Side23,
    Side34,
    Side41,
}

impl Wall {
    pub const ALL: [Wall; 6] = [
        Wall::Floor,
        Wall::Ceiling,
        Wall::Side12,
        Wall::Side23,
        Wall::Side34,
        Wall::Side41,
    ];

    fn corner_indices(self) -> [usize; 4] {
        match self {
            Wall::Floor => [0, 1, 2, 3],
            Wall::Ceiling => [4, 5, 6, 7],
            Wall::Side12 => [0, 1, 5, 4],
            Wall::Side23 => [1, 2, 6, 5],
            Wall::Side34 => [2, 3, 7, 6],
            Wall::Side41 => [3, 0, 4, 7],
        }
    }
}

/// A planar convex reflecting polygon with an inward unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub wall: Wall,
    pub vertices: Vec<Vec3>,
    pub normal: Vec3,
    offset: f64,
    pub reflection: f64,
}

impl Face {
    fn new(wall: Wall, mut vertices: Vec<Vec3>, interior: Vec3, reflection: f64) -> Result<Self> {
        let raw = (vertices[1] - vertices[0]).cross(vertices[2] - vertices[0]);
        let area2 = raw.norm();
        if area2 < AREA_TOL {
            return Err(Error::Geometry(format!("degenerate corners on {wall:?}")));
        }
        let mut normal = raw * (1.0 / area2);
        if normal.dot(interior - vertices[0]) < 0.0 {
            vertices.reverse();
            normal = -normal;
        }
        let offset = -normal.dot(vertices[0]);
        Ok(Face {
            wall,
            vertices,
            normal,
            offset,
            reflection,
        })
    }

    /// Positive on the room side of the face plane.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    pub fn mirror(&self, p: Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point on (or near) the plane lies within the polygon.
    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a).dot(self.normal) >= -tol * (b - a).norm()
        })
    }

    /// Intersection of segment `a -> b` with the face plane, as the segment
    /// parameter and the point. `None` for segments parallel to the plane.
    pub fn plane_intersection(&self, a: Vec3, b: Vec3) -> Option<(f64, Vec3)> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        let denom = da - db;
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = da / denom;
        Some((t, a + (b - a) * t))
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        (1..v.len() - 1)
            .map(|i| 0.5 * (v[i] - v[0]).cross(v[i + 1] - v[0]).norm())
            .sum()
    }

    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        let v = &self.vertices;
        (1..v.len() - 1).map(|i| [v[0], v[i], v[i + 1]]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Room {
    corners: [Vec3; 8],
    faces: Vec<Face>,
    absorption: Absorption,
    convex: bool,
}

impl Room {
    pub fn from_corners(corners: [Vec3; 8], absorption: Absorption) -> Result<Self> {
        if corners.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("non-finite corner".into()));
        }
        for i in 0..8 {
            for j in i + 1..8 {
                if corners[i].distance(corners[j]) < 1e-6 {
                    return Err(Error::Geometry(format!("corners {} and {} coincide", i + 1, j + 1)));
                }
            }
        }
        let interior = corners.iter().fold(Vec3::ZERO, |acc, &c| acc + c) * (1.0 / 8.0);
        let reflection = absorption.reflection_factor();

        let mut faces = Vec::with_capacity(12);
        for wall in Wall::ALL {
            let [a, b, c, d] = wall.corner_indices().map(|i| corners[i]);
            let normal = (b - a).cross(c - a);
            if normal.norm() < AREA_TOL {
                return Err(Error::Geometry(format!("collinear corners on {wall:?}")));
            }
            let off_plane = normal.normalized().dot(d - a).abs();
            let quad = Face::new(wall, vec![a, b, c, d], interior, reflection)?;
            if off_plane <= PLANAR_TOL && is_convex_polygon(&quad) {
                faces.push(quad);
            } else {
                faces.push(Face::new(wall, vec![a, b, c], interior, reflection)?);
                faces.push(Face::new(wall, vec![a, c, d], interior, reflection)?);
            }
        }

        for f in &faces {
            if f.signed_distance(interior) <= 1e-6 {
                return Err(Error::Geometry(format!(
                    "room centroid is not inside the half-space of {:?}",
                    f.wall
                )));
            }
        }

        let convex = faces
            .iter()
            .all(|f| corners.iter().all(|&c| f.signed_distance(c) >= -1e-9));
        let room = Room {
            corners,
            faces,
            absorption,
            convex,
        };
        if room.volume() < 1e-6 {
            return Err(Error::Geometry("room has no volume".into()));
        }
        Ok(room)
    }

    /// Axis-aligned box with one corner at the origin.
    pub fn shoebox(lx: f64, ly: f64, lz: f64, absorption: Absorption) -> Result<Self> {
        let c = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, ly, 0.0),
            Vec3::new(lx, ly, 0.0),
            Vec3::new(lx, 0.0, 0.0),
            Vec3::new(0.0, 0.0, lz),
            Vec3::new(0.0, ly, lz),
            Vec3::new(lx, ly, lz),
            Vec3::new(lx, 0.0, lz),
        ];
        Self::from_corners(c, absorption)
    }

    pub fn with_absorption(&self, absorption: Absorption) -> Result<Self> {
        Self::from_corners(self.corners, absorption)
    }

    pub fn corners(&self) -> &[Vec3; 8] {
        &self.corners
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn absorption(&self) -> Absorption {
        self.absorption
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn wall_count(&self) -> usize {
        Wall::ALL.len()
    }

    /// Triangles of the surface after splitting every polygon.
    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        self.faces.iter().flat_map(Face::triangles).collect()
    }

    pub fn centroid(&self) -> Vec3 {
        self.corners.iter().fold(Vec3::ZERO, |acc, &c| acc + c) * (1.0 / 8.0)
    }

    /// Volume as a sum of tetrahedra from the centroid to every triangle.
    pub fn volume(&self) -> f64 {
        let o = self.centroid();
        self.triangles()
            .iter()
            .map(|[a, b, c]| ((*a - o).dot((*b - o).cross(*c - o))).abs() / 6.0)
            .sum()
    }

    pub fn surface_area(&self) -> f64 {
        self.faces.iter().map(Face::area).sum()
    }

    /// Strictly inside every face half-space.
    pub fn contains(&self, p: Vec3) -> bool {
        self.faces.iter().all(|f| f.signed_distance(p) > 0.0)
    }

    /// Equivalent absorption area `-S ln(1 - alpha)` (m^2).
    pub fn eyring_absorption_area(&self) -> f64 {
        let a = self.absorption.mean().min(1.0 - 1e-12);
        -self.surface_area() * (1.0 - a).ln()
    }

    /// Eyring reverberation time `24 ln(10) V / (c A)`.
    pub fn eyring_rt60(&self, c: f64) -> f64 {
        24.0 * core::f64::consts::LN_10 * self.volume() / (c * self.eyring_absorption_area())
    }

    /// Diffuse-field direct-to-reverberant ratio at distance `r` from a source,
    /// `10 log10(A / (16 pi r^2))` with the Eyring absorption area.
    pub fn diffuse_field_drr_db(&self, r: f64) -> f64 {
        10.0 * (self.eyring_absorption_area() / (16.0 * core::f64::consts::PI * r * r)).log10()
    }
}

fn is_convex_polygon(f: &Face) -> bool {
    let n = f.vertices.len();
    (0..n).all(|i| {
        let a = f.vertices[i];
        let b = f.vertices[(i + 1) % n];
        let c = f.vertices[(i + 2) % n];
        (b - a).cross(c - b).dot(f.normal) > 0.0
    })
}

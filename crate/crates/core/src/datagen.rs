//! Synthetic shapes, style designs and test fixtures, all inside `[0,1]^3`.
//!
//! Shapes are surface samples: points are uniform with respect to area over
//! every shell, face, plane or strut. Designs and fixtures are volumetric:
//! points are uniform over a solid region.

use std::fmt;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::UnitSphere;
use rayon::prelude::*;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::io::store_auto;
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Spheres,
    Cuboids,
    Planes,
    Lattice,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [
        ShapeKind::Spheres,
        ShapeKind::Cuboids,
        ShapeKind::Planes,
        ShapeKind::Lattice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Spheres => "spheres",
            ShapeKind::Cuboids => "cuboids",
            ShapeKind::Planes => "planes",
            ShapeKind::Lattice => "lattice",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrutSection {
    Round,
    Square,
}

/// Geometry of a training shape.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeParams {
    /// Concentric spherical shells.
    Spheres { center: Point3, radii: Vec<f64> },
    /// Nested axis-aligned box surfaces sharing a centre.
    Cuboids { center: Point3, half_extents: Vec<Point3> },
    /// Full cross-sections of the cube, `(axis, offset)` each.
    Planes { planes: Vec<(usize, f64)> },
    /// Struts along the lines of a cubic grid with spacing `pitch`,
    /// centred in the cube.
    Lattice {
        pitch: f64,
        radius: f64,
        section: StrutSection,
    },
}

impl ShapeParams {
    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeParams::Spheres { .. } => ShapeKind::Spheres,
            ShapeParams::Cuboids { .. } => ShapeKind::Cuboids,
            ShapeParams::Planes { .. } => ShapeKind::Planes,
            ShapeParams::Lattice { .. } => ShapeKind::Lattice,
        }
    }

    /// Parameters drawn from the ranges used for generated datasets.
    pub fn random(kind: ShapeKind, rng: &mut impl Rng) -> ShapeParams {
        let jitter = |rng: &mut dyn RngCore| 0.5 + (rng.random::<f64>() - 0.5) * 0.1;
        match kind {
            ShapeKind::Spheres => {
                let center = Point3::new(jitter(rng), jitter(rng), jitter(rng));
                let room = 0.5 - 0.05;
                let mut r = rng.random_range(0.3..room);
                let mut radii = vec![r];
                for _ in 1..rng.random_range(1..=3) {
                    r *= rng.random_range(0.4..0.8);
                    radii.push(r);
                }
                ShapeParams::Spheres { center, radii }
            }
            ShapeKind::Cuboids => {
                let center = Point3::new(jitter(rng), jitter(rng), jitter(rng));
                let mut h = Point3::new(
                    rng.random_range(0.25..0.45),
                    rng.random_range(0.25..0.45),
                    rng.random_range(0.25..0.45),
                );
                let mut half_extents = vec![h];
                for _ in 1..rng.random_range(1..=3) {
                    h = h * rng.random_range(0.4..0.8);
                    half_extents.push(h);
                }
                ShapeParams::Cuboids { center, half_extents }
            }
            ShapeKind::Planes => {
                let count = rng.random_range(2..=3);
                let skip = rng.random_range(0..3);
                let planes = (0..3)
                    .filter(|&a| count == 3 || a != skip)
                    .map(|a| (a, rng.random_range(0.2..0.8)))
                    .collect();
                ShapeParams::Planes { planes }
            }
            ShapeKind::Lattice => {
                let pitch = [0.2, 0.25, 1.0 / 3.0][rng.random_range(0..3)];
                let radius = rng.random_range(0.01..0.03);
                let section = if rng.random() {
                    StrutSection::Round
                } else {
                    StrutSection::Square
                };
                ShapeParams::Lattice { pitch, radius, section }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let inside = |lo: f64, hi: f64| lo >= 0.0 && hi <= 1.0;
        match self {
            ShapeParams::Spheres { center, radii } => {
                if radii.is_empty() {
                    return Err(Error::invalid("at least one shell is required"));
                }
                for &r in radii {
                    let fits = (0..3).all(|a| inside(center.axis(a) - r, center.axis(a) + r));
                    if !(r > 0.0) || !fits {
                        return Err(Error::invalid(format!("shell radius {r} does not fit the unit cube")));
                    }
                }
            }
            ShapeParams::Cuboids { center, half_extents } => {
                if half_extents.is_empty() {
                    return Err(Error::invalid("at least one cuboid is required"));
                }
                for h in half_extents {
                    let fits = (0..3)
                        .all(|a| h.axis(a) > 0.0 && inside(center.axis(a) - h.axis(a), center.axis(a) + h.axis(a)));
                    if !fits {
                        return Err(Error::invalid(format!(
                            "cuboid half extents {h:?} do not fit the unit cube"
                        )));
                    }
                }
            }
            ShapeParams::Planes { planes } => {
                if planes.is_empty() {
                    return Err(Error::invalid("at least one plane is required"));
                }
                if planes.iter().any(|&(a, o)| a > 2 || !(0.0..=1.0).contains(&o)) {
                    return Err(Error::invalid("plane axes must be 0..=2 with offsets in [0, 1]"));
                }
            }
            ShapeParams::Lattice { pitch, radius, .. } => {
                if !(*pitch > 0.0 && *pitch <= 1.0) {
                    return Err(Error::invalid(format!("lattice pitch must lie in (0, 1], got {pitch}")));
                }
                if !(*radius > 0.0) || lattice_nodes(*pitch, *radius).len() < 2 {
                    return Err(Error::invalid(format!(
                        "lattice with pitch {pitch} and strut radius {radius} has no struts inside the cube"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ShapeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |p: &Point3| format!("{},{},{}", p.x, p.y, p.z);
        match self {
            ShapeParams::Spheres { center, radii } => {
                let r: Vec<String> = radii.iter().map(f64::to_string).collect();
                write!(f, "center={} radii={}", p(center), r.join(","))
            }
            ShapeParams::Cuboids { center, half_extents } => {
                let h: Vec<String> = half_extents.iter().map(p).collect();
                write!(f, "center={} half_extents={}", p(center), h.join(";"))
            }
            ShapeParams::Planes { planes } => {
                let s: Vec<String> = planes
                    .iter()
                    .map(|(a, o)| format!("{}={o}", ["x", "y", "z"][*a]))
                    .collect();
                write!(f, "planes={}", s.join(","))
            }
            ShapeParams::Lattice { pitch, radius, section } => {
                write!(f, "pitch={pitch} radius={radius} section={section:?}")
            }
        }
    }
}

/// Grid coordinates along one axis: spaced by `pitch`, centred on 0.5,
/// and at least `radius` away from the cube faces.
fn lattice_nodes(pitch: f64, radius: f64) -> Vec<f64> {
    let span = 1.0 - 2.0 * radius;
    if span < 0.0 {
        return Vec::new();
    }
    let count = (span / pitch + 1e-9).floor() as usize + 1;
    let first = 0.5 - (count - 1) as f64 * pitch * 0.5;
    (0..count).map(|i| first + i as f64 * pitch).collect()
}

/// A piece of surface that can be sampled uniformly.
enum Patch {
    Sphere {
        center: Point3,
        radius: f64,
    },
    /// Axis-aligned rectangle: `origin + s * u_len * e_u + t * v_len * e_v`.
    Rect {
        origin: Point3,
        u: usize,
        v: usize,
        u_len: f64,
        v_len: f64,
    },
    /// Lateral surface of a cylinder along `axis`.
    Tube {
        start: Point3,
        axis: usize,
        length: f64,
        radius: f64,
    },
}

impl Patch {
    fn area(&self) -> f64 {
        match *self {
            Patch::Sphere { radius, .. } => 4.0 * std::f64::consts::PI * radius * radius,
            Patch::Rect { u_len, v_len, .. } => u_len * v_len,
            Patch::Tube { length, radius, .. } => 2.0 * std::f64::consts::PI * radius * length,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Point3 {
        match *self {
            Patch::Sphere { center, radius } => {
                let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
                center + Point3::new(x, y, z) * radius
            }
            Patch::Rect {
                origin,
                u,
                v,
                u_len,
                v_len,
            } => {
                let mut c = origin.to_array();
                c[u] += rng.random::<f64>() * u_len;
                c[v] += rng.random::<f64>() * v_len;
                Point3::from_array(c)
            }
            Patch::Tube {
                start,
                axis,
                length,
                radius,
            } => {
                let angle = rng.random::<f64>() * std::f64::consts::TAU;
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut c = start.to_array();
                c[axis] += rng.random::<f64>() * length;
                c[a] += radius * angle.cos();
                c[b] += radius * angle.sin();
                Point3::from_array(c)
            }
        }
    }
}

fn box_faces(lo: Point3, hi: Point3, out: &mut Vec<Patch>) {
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let (u_len, v_len) = (hi.axis(u) - lo.axis(u), hi.axis(v) - lo.axis(v));
        for side in [lo.axis(axis), hi.axis(axis)] {
            let mut origin = lo.to_array();
            origin[axis] = side;
            out.push(Patch::Rect {
                origin: Point3::from_array(origin),
                u,
                v,
                u_len,
                v_len,
            });
        }
    }
}

fn shape_patches(params: &ShapeParams) -> Vec<Patch> {
    let mut patches = Vec::new();
    match params {
        ShapeParams::Spheres { center, radii } => {
            patches.extend(radii.iter().map(|&radius| Patch::Sphere {
                center: *center,
                radius,
            }));
        }
        ShapeParams::Cuboids { center, half_extents } => {
            for h in half_extents {
                box_faces(*center - *h, *center + *h, &mut patches);
            }
        }
        ShapeParams::Planes { planes } => {
            for &(axis, offset) in planes {
                let mut origin = [0.0; 3];
                origin[axis] = offset;
                patches.push(Patch::Rect {
                    origin: Point3::from_array(origin),
                    u: (axis + 1) % 3,
                    v: (axis + 2) % 3,
                    u_len: 1.0,
                    v_len: 1.0,
                });
            }
        }
        ShapeParams::Lattice { pitch, radius, section } => {
            let nodes = lattice_nodes(*pitch, *radius);
            let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
            let length = last - first;
            for axis in 0..3 {
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                for &ca in &nodes {
                    for &cb in &nodes {
                        let mut start = [0.0; 3];
                        start[axis] = first;
                        start[a] = ca;
                        start[b] = cb;
                        let start = Point3::from_array(start);
                        match section {
                            StrutSection::Round => patches.push(Patch::Tube {
                                start,
                                axis,
                                length,
                                radius: *radius,
                            }),
                            StrutSection::Square => {
                                // Four side faces of the square strut.
                                for (side_axis, along) in [(a, b), (b, a)] {
                                    for sign in [-1.0, 1.0] {
                                        let mut origin = start.to_array();
                                        origin[side_axis] += sign * radius;
                                        origin[along] -= radius;
                                        patches.push(Patch::Rect {
                                            origin: Point3::from_array(origin),
                                            u: axis,
                                            v: along,
                                            u_len: length,
                                            v_len: 2.0 * radius,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    patches
}

/// Sample `points` points uniformly by area over the shape's surface.
pub fn gen_shape(params: &ShapeParams, points: usize, seed: RngSeed) -> Result<PointCloud> {
    if points == 0 {
        return Err(Error::invalid("point count must be positive"));
    }
    params.validate()?;
    let patches = shape_patches(params);
    let pick = WeightedIndex::new(patches.iter().map(Patch::area))
        .map_err(|e| Error::invalid(format!("shape has no surface: {e}")))?;
    let mut rng = seed.rng();
    let pts = (0..points)
        .map(|_| {
            let p = patches[pick.sample(&mut rng)].sample(&mut rng);
            // Rounding can leave a surface point a hair outside the cube.
            Point3::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0), p.z.clamp(0.0, 1.0))
        })
        .collect();
    PointCloud::new(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    Stripes,
    Porous,
    Cuts,
}

impl DesignKind {
    pub const ALL: [DesignKind; 3] = [DesignKind::Stripes, DesignKind::Porous, DesignKind::Cuts];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Stripes => "stripes",
            DesignKind::Porous => "porous",
            DesignKind::Cuts => "cuts",
        }
    }
}

/// Planar slit cut into the cube from the face `depth_axis = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slit {
    pub axis: usize,
    pub offset: f64,
    pub width: f64,
    pub depth_axis: usize,
    pub depth: f64,
}

/// Solid regions of the unit cube used as style designs.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignParams {
    /// Slabs of thickness `thickness` repeating every `period` along
    /// `axis`, shifted by a triangle wave of height `amplitude` and
    /// wavelength `wavelength` along `wave_axis`.
    Stripes {
        axis: usize,
        period: f64,
        thickness: f64,
        wave_axis: usize,
        amplitude: f64,
        wavelength: f64,
    },
    /// The cube minus a set of balls `(center, radius)`.
    Porous { voids: Vec<(Point3, f64)> },
    /// The cube minus a set of slits.
    Cuts { slits: Vec<Slit> },
}

impl DesignParams {
    pub fn kind(&self) -> DesignKind {
        match self {
            DesignParams::Stripes { .. } => DesignKind::Stripes,
            DesignParams::Porous { .. } => DesignKind::Porous,
            DesignParams::Cuts { .. } => DesignKind::Cuts,
        }
    }

    /// The designs used by the command line tool.
    pub fn default_for(kind: DesignKind, seed: RngSeed) -> DesignParams {
        match kind {
            DesignKind::Stripes => DesignParams::Stripes {
                axis: 0,
                period: 0.125,
                thickness: 0.05,
                wave_axis: 2,
                amplitude: 0.05,
                wavelength: 0.25,
            },
            DesignKind::Porous => {
                let mut rng = seed.rng();
                let voids = (0..40)
                    .map(|_| {
                        let c = Point3::new(rng.random(), rng.random(), rng.random());
                        (c, rng.random_range(0.04..0.1))
                    })
                    .collect();
                DesignParams::Porous { voids }
            }
            DesignKind::Cuts => DesignParams::Cuts {
                slits: (1..8)
                    .map(|i| Slit {
                        axis: if i % 2 == 0 { 0 } else { 1 },
                        offset: i as f64 / 8.0,
                        width: 0.02,
                        depth_axis: 2,
                        depth: 0.3 + 0.1 * (i % 3) as f64,
                    })
                    .collect(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DesignParams::Stripes {
                axis,
                period,
                thickness,
                wave_axis,
                amplitude,
                wavelength,
            } => {
                if *axis > 2 || *wave_axis > 2 || axis == wave_axis {
                    return Err(Error::invalid("stripe axes must be distinct and in 0..=2"));
                }
                if !(*period > 0.0) || !(*thickness > 0.0 && thickness <= period) {
                    return Err(Error::invalid(format!(
                        "stripe thickness {thickness} must lie in (0, period = {period}]"
                    )));
                }
                if !(*amplitude >= 0.0) || !(*wavelength > 0.0) {
                    return Err(Error::invalid("zig-zag needs amplitude >= 0 and wavelength > 0"));
                }
            }
            DesignParams::Porous { voids } => {
                if voids.iter().any(|(c, r)| !(*r >= 0.0) || !c.is_finite()) {
                    return Err(Error::invalid("void radii must be non-negative"));
                }
            }
            DesignParams::Cuts { slits } => {
                for s in slits {
                    if s.axis > 2
                        || s.depth_axis > 2
                        || s.axis == s.depth_axis
                        || !(s.width >= 0.0)
                        || !(s.depth >= 0.0)
                    {
                        return Err(Error::invalid(format!("invalid slit {s:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether `p` (inside the unit cube) belongs to the design's solid.
    pub fn contains(&self, p: Point3) -> bool {
        match self {
            DesignParams::Stripes {
                axis,
                period,
                thickness,
                wave_axis,
                amplitude,
                wavelength,
            } => {
                let phase = (p.axis(*wave_axis) / wavelength).rem_euclid(1.0);
                let tri = 1.0 - (2.0 * phase - 1.0).abs();
                let u = p.axis(*axis) - amplitude * tri;
                u.rem_euclid(*period) < *thickness
            }
            DesignParams::Porous { voids } => voids.iter().all(|(c, r)| p.dist2(*c) >= r * r),
            DesignParams::Cuts { slits } => slits.iter().all(|s| {
                let in_slit = (p.axis(s.axis) - s.offset).abs() < 0.5 * s.width && p.axis(s.depth_axis) > 1.0 - s.depth;
                !in_slit
            }),
        }
    }
}

impl fmt::Display for DesignParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignParams::Stripes {
                axis,
                period,
                thickness,
                wave_axis,
                amplitude,
                wavelength,
            } => write!(
                f,
                "axis={axis} period={period} thickness={thickness} wave_axis={wave_axis} amplitude={amplitude} wavelength={wavelength}"
            ),
            DesignParams::Porous { voids } => write!(f, "voids={}", voids.len()),
            DesignParams::Cuts { slits } => write!(f, "slits={}", slits.len()),
        }
    }
}

/// Uniform samples from a solid region by rejection from the unit cube.
fn sample_solid(points: usize, seed: RngSeed, contains: impl Fn(Point3) -> bool) -> Result<PointCloud> {
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(points);
    let mut tries: u64 = 0;
    while out.len() < points {
        let p = Point3::new(rng.random(), rng.random(), rng.random());
        tries += 1;
        if contains(p) {
            out.push(p);
        } else if out.is_empty() && tries >= 1_000_000 {
            return Err(Error::Degenerate(
                "region has (almost) no volume inside the unit cube".into(),
            ));
        }
    }
    PointCloud::new(out)
}

/// Sample `points` points uniformly from the design's solid.
pub fn gen_design(params: &DesignParams, points: usize, seed: RngSeed) -> Result<PointCloud> {
    if points == 0 {
        return Err(Error::invalid("point count must be positive"));
    }
    params.validate()?;
    sample_solid(points, seed, |p| params.contains(p))
}

/// One generated training cloud and how it was made.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub params: ShapeParams,
    pub seed: RngSeed,
    pub cloud: PointCloud,
}

/// `count` clouds cycling through the four shape kinds, each with random
/// parameters and a seed derived from `seed`.
pub fn gen_dataset(count: usize, points: usize, seed: RngSeed) -> Result<Vec<DatasetEntry>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let kind = ShapeKind::ALL[i % ShapeKind::ALL.len()];
            let cloud_seed = seed.derive(i as u64);
            let params = ShapeParams::random(kind, &mut cloud_seed.derive(0).rng());
            let cloud = gen_shape(&params, points, cloud_seed.derive(1))?;
            Ok(DatasetEntry {
                params,
                seed: cloud_seed,
                cloud,
            })
        })
        .collect()
}

/// Write `cloud_XXXX.ply` per entry plus `manifest.txt` with one line per
/// cloud: file, kind, seed, parameters.
pub fn write_dataset(entries: &[DatasetEntry], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (i, e) in entries.iter().enumerate() {
        let name = format!("cloud_{i:04}.ply");
        store_auto(&e.cloud, dir.join(&name))?;
        manifest.push_str(&format!(
            "{name} {} seed={} {}\n",
            e.params.kind().name(),
            e.seed.0,
            e.params
        ));
    }
    let path = dir.join("manifest.txt");
    std::fs::write(&path, manifest).map_err(|e| Error::io(path, e))
}

/// Axis-aligned solid box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub lo: Point3,
    pub hi: Point3,
}

impl Block {
    pub fn volume(&self) -> f64 {
        let e = self.hi - self.lo;
        e.x * e.y * e.z
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: Point3) -> f64 {
        let d = (self.lo - p).max(p - self.hi).max(Point3::default());
        d.norm()
    }
}

/// Uniform volume samples from a union of boxes (overlaps counted once per
/// box, which slightly favours shared regions).
pub fn sample_blocks(blocks: &[Block], points: usize, seed: RngSeed) -> Result<PointCloud> {
    if points == 0 {
        return Err(Error::invalid("point count must be positive"));
    }
    let pick = WeightedIndex::new(blocks.iter().map(Block::volume))
        .map_err(|e| Error::invalid(format!("blocks have no volume: {e}")))?;
    let mut rng = seed.rng();
    let pts = (0..points)
        .map(|_| {
            let b = blocks[pick.sample(&mut rng)];
            let e = b.hi - b.lo;
            b.lo + Point3::new(
                rng.random::<f64>() * e.x,
                rng.random::<f64>() * e.y,
                rng.random::<f64>() * e.z,
            )
        })
        .collect();
    PointCloud::new(pts)
}

/// Thin vertical wall: `[0.1, 0.9] x [0.5 - t/2, 0.5 + t/2] x [0.1, 0.9]`.
pub fn wall_slab_block(thickness: f64) -> Block {
    Block {
        lo: Point3::new(0.1, 0.5 - 0.5 * thickness, 0.1),
        hi: Point3::new(0.9, 0.5 + 0.5 * thickness, 0.9),
    }
}

pub fn wall_slab(points: usize, thickness: f64, seed: RngSeed) -> Result<PointCloud> {
    sample_blocks(&[wall_slab_block(thickness)], points, seed)
}

/// A deck on two piers with a row of vertical hangers and a top chord.
pub fn bridge_blocks() -> Vec<Block> {
    let b = |lo: [f64; 3], hi: [f64; 3]| Block {
        lo: Point3::from_array(lo),
        hi: Point3::from_array(hi),
    };
    let mut blocks = vec![
        b([0.0, 0.35, 0.40], [1.0, 0.65, 0.46]),
        b([0.15, 0.40, 0.0], [0.25, 0.60, 0.40]),
        b([0.75, 0.40, 0.0], [0.85, 0.60, 0.40]),
        b([0.1, 0.35, 0.70], [0.9, 0.40, 0.74]),
        b([0.1, 0.60, 0.70], [0.9, 0.65, 0.74]),
    ];
    for i in 0..9 {
        let x = 0.1 + 0.1 * i as f64;
        blocks.push(b([x - 0.01, 0.35, 0.46], [x + 0.01, 0.40, 0.70]));
        blocks.push(b([x - 0.01, 0.60, 0.46], [x + 0.01, 0.65, 0.70]));
    }
    blocks
}

pub fn bridge(points: usize, seed: RngSeed) -> Result<PointCloud> {
    sample_blocks(&bridge_blocks(), points, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_nodes_fit() {
        let nodes = lattice_nodes(0.25, 0.02);
        assert_eq!(nodes.len(), 4);
        assert!(nodes[0] - 0.02 >= 0.0 && nodes[3] + 0.02 <= 1.0);
        assert!((nodes[1] - nodes[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        let bad = [
            ShapeParams::Spheres {
                center: Point3::splat(0.5),
                radii: vec![],
            },
            ShapeParams::Spheres {
                center: Point3::splat(0.5),
                radii: vec![0.6],
            },
            ShapeParams::Lattice {
                pitch: 1.5,
                radius: 0.01,
                section: StrutSection::Round,
            },
            ShapeParams::Lattice {
                pitch: 0.99,
                radius: 0.1,
                section: StrutSection::Round,
            },
            ShapeParams::Planes { planes: vec![(3, 0.5)] },
        ];
        for p in &bad {
            assert!(gen_shape(p, 10, RngSeed(0)).is_err(), "{p:?}");
        }
        let stripes = DesignParams::Stripes {
            axis: 0,
            period: 0.1,
            thickness: 0.2,
            wave_axis: 1,
            amplitude: 0.0,
            wavelength: 1.0,
        };
        assert!(gen_design(&stripes, 10, RngSeed(0)).is_err());
        assert!(gen_design(&DesignParams::Porous { voids: vec![] }, 0, RngSeed(0)).is_err());
    }

    #[test]
    fn planes_lie_on_planes() {
        let params = ShapeParams::Planes {
            planes: vec![(0, 0.3), (2, 0.6)],
        };
        let c = gen_shape(&params, 500, RngSeed(1)).unwrap();
        assert!(c.iter().all(|p| p.x == 0.3 || p.z == 0.6));
    }

    #[test]
    fn lattice_points_on_struts() {
        for section in [StrutSection::Round, StrutSection::Square] {
            let (pitch, radius) = (0.25, 0.02);
            let nodes = lattice_nodes(pitch, radius);
            let c = gen_shape(&ShapeParams::Lattice { pitch, radius, section }, 2000, RngSeed(2)).unwrap();
            assert!(c.within_unit_cube());
            for p in c.iter() {
                let on_some = (0..3).any(|axis| {
                    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                    nodes.iter().any(|&ca| {
                        nodes.iter().any(|&cb| {
                            let (da, db) = (p.axis(a) - ca, p.axis(b) - cb);
                            match section {
                                StrutSection::Round => ((da * da + db * db).sqrt() - radius).abs() < 1e-9,
                                StrutSection::Square => {
                                    let m = da.abs().max(db.abs());
                                    (m - radius).abs() < 1e-9
                                }
                            }
                        })
                    })
                });
                assert!(on_some, "{p:?}");
            }
        }
    }

    #[test]
    fn dataset_round_robin_and_deterministic() {
        let a = gen_dataset(8, 100, RngSeed(3)).unwrap();
        let kinds: Vec<_> = a.iter().map(|e| e.params.kind()).collect();
        assert_eq!(&kinds[..4], &ShapeKind::ALL);
        assert_eq!(&kinds[4..], &ShapeKind::ALL);
        let b = gen_dataset(8, 100, RngSeed(3)).unwrap();
        assert!(a
            .iter()
            .zip(&b)
            .all(|(x, y)| x.cloud == y.cloud && x.params == y.params));
        assert!(a.iter().all(|e| e.cloud.within_unit_cube()));
    }

    #[test]
    fn dataset_files() {
        let entries = gen_dataset(4, 50, RngSeed(4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&entries, dir.path()).unwrap();
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert_eq!(manifest.lines().count(), 4);
        assert!(manifest
            .lines()
            .next()
            .unwrap()
            .starts_with("cloud_0000.ply spheres seed="));
        assert_eq!(
            crate::io::load_auto(dir.path().join("cloud_0003.ply")).unwrap().len(),
            50
        );
    }

    #[test]
    fn fixtures_inside_cube() {
        let w = wall_slab(1000, 0.05, RngSeed(5)).unwrap();
        let block = wall_slab_block(0.05);
        assert!(w.iter().all(|p| block.distance(*p) == 0.0));
        let b = bridge(2000, RngSeed(6)).unwrap();
        assert!(b.within_unit_cube());
        assert_eq!(b.len(), 2000);
    }

    #[test]
    fn default_designs_generate() {
        for kind in DesignKind::ALL {
            let params = DesignParams::default_for(kind, RngSeed(7));
            let c = gen_design(&params, 500, RngSeed(8)).unwrap();
            assert!(c.iter().all(|p| params.contains(*p)));
        }
    }
}

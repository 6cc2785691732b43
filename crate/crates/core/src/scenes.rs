//! Synthetic box scenes and coefficient-grid sweeps.
//!
//! Scenes are built from axis-aligned boxes whose surfaces are sampled
//! uniformly. A box may be flat along one axis, which gives a wall panel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud, ViewPlane};
use crate::fireworks::{score_ray, Candidate, RngStream};
use crate::projection::{classify_ray, ImageSize, RayParams};
use crate::raster::Palette;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub label: usize,
    /// Point color; the label's palette color when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[f64; 3]>,
    pub points: usize,
}

/// Floor plus four walls of a room centred on the origin in X and Y, with
/// the floor's top face at `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomShell {
    pub extents: [f64; 3],
    pub wall_thickness: f64,
    /// Points per unit of outer surface area.
    pub point_density: f64,
    pub wall_label: usize,
    pub floor_label: usize,
}

impl RoomShell {
    fn boxes(&self) -> Vec<BoxSpec> {
        let [ex, ey, ez] = self.extents;
        let t = self.wall_thickness;
        let slab = |center: [f64; 3], size: [f64; 3], label: usize| {
            let area = 2.0 * (size[0] * size[1] + size[1] * size[2] + size[0] * size[2]);
            BoxSpec {
                center,
                size,
                label,
                color: None,
                points: ((area * self.point_density).round() as usize).max(1),
            }
        };
        vec![
            slab([0.0, 0.0, -t / 2.0], [ex, ey, t], self.floor_label),
            slab([-ex / 2.0, 0.0, ez / 2.0], [t, ey, ez], self.wall_label),
            slab([ex / 2.0, 0.0, ez / 2.0], [t, ey, ez], self.wall_label),
            slab([0.0, -ey / 2.0, ez / 2.0], [ex, t, ez], self.wall_label),
            slab([0.0, ey / 2.0, ez / 2.0], [ex, t, ez], self.wall_label),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    pub class_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<RoomShell>,
    pub boxes: Vec<BoxSpec>,
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }

    /// All boxes, room shell first.
    pub fn all_boxes(&self) -> Vec<BoxSpec> {
        let mut out = self.room.as_ref().map(RoomShell::boxes).unwrap_or_default();
        out.extend(self.boxes.iter().cloned());
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(room) = &self.room {
            let positive = |v: f64| v > 0.0;
            let valid = room.extents.iter().all(|&e| positive(e))
                && positive(room.wall_thickness)
                && positive(room.point_density);
            if !valid {
                return Err(Error::InvalidSpec(
                    "room extents, wall thickness and point density must be positive".into(),
                ));
            }
        }
        let boxes = self.all_boxes();
        for (i, b) in boxes.iter().enumerate() {
            if b.label >= self.class_count {
                return Err(Error::InvalidSpec(format!(
                    "box {i}: label {} not below class count {}",
                    b.label, self.class_count
                )));
            }
            if b.points == 0 {
                return Err(Error::InvalidSpec(format!(
                    "box {i}: needs at least one point"
                )));
            }
            if b.size.iter().any(|&s| !(s >= 0.0 && s.is_finite()))
                || b.center.iter().any(|c| !c.is_finite())
            {
                return Err(Error::InvalidSpec(format!(
                    "box {i}: non-finite or negative geometry"
                )));
            }
            if face_areas(&b.size).iter().all(|&a| a == 0.0) {
                return Err(Error::InvalidSpec(format!("box {i}: has no surface area")));
            }
            if let Some(c) = b.color {
                if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::InvalidSpec(format!("box {i}: color outside [0, 1]")));
                }
            }
        }
        let total: usize = boxes.iter().map(|b| b.points).sum();
        if total < 2 {
            return Err(Error::InvalidSpec("scene needs at least two points".into()));
        }
        Ok(())
    }
}

/// Areas of the faces normal to X, Y and Z.
fn face_areas(size: &[f64; 3]) -> [f64; 3] {
    [size[1] * size[2], size[0] * size[2], size[0] * size[1]]
}

fn sample_surface(b: &BoxSpec, rng: &mut RngStream) -> [f64; 3] {
    let areas = face_areas(&b.size);
    let total: f64 = areas.iter().sum();
    let pick = rng.uniform() * total;
    let normal = if pick < areas[0] {
        0
    } else if pick < areas[0] + areas[1] {
        1
    } else {
        2
    };
    let sign = if rng.uniform() < 0.5 { -0.5 } else { 0.5 };
    std::array::from_fn(|axis| {
        let offset = if axis == normal {
            sign
        } else {
            rng.uniform() - 0.5
        };
        b.center[axis] + offset * b.size[axis]
    })
}

/// Samples every box surface with one seeded stream, boxes in order. The
/// result is not normalized.
pub fn synth_room(spec: &SceneSpec) -> Result<PointCloud> {
    spec.validate()?;
    let palette = Palette::default();
    let mut rng = RngStream::new(spec.seed);
    let mut points = Vec::new();
    for b in spec.all_boxes() {
        let color = b.color.unwrap_or_else(|| palette.color(b.label));
        for _ in 0..b.points {
            points.push(Point::new(
                sample_surface(&b, &mut rng),
                color,
                Some(b.label),
            ));
        }
    }
    Ok(PointCloud::new(points).with_class_count(spec.class_count))
}

pub const PRESETS: [&str; 2] = ["two-wall", "room"];

/// Built-in scenes.
///
/// `two-wall`: along +X a 2 x 1.5 front panel 0.4 from the center hides a
/// smaller 1.6 x 1.2 rear panel on the far wall; a full-height back wall on
/// -X fixes the normalization extents so the panels land at depths 0.1 and
/// 0.5 after normalization.
///
/// `room`: a furnished 6 x 5 x 3 room.
pub fn preset(name: &str) -> Option<SceneSpec> {
    match name {
        "two-wall" => Some(SceneSpec {
            seed: 7,
            class_count: 3,
            room: None,
            boxes: vec![
                BoxSpec {
                    center: [-2.0, 0.0, 1.5],
                    size: [0.0, 4.0, 3.0],
                    label: 0,
                    color: Some([0.6, 0.6, 0.55]),
                    points: 6_000,
                },
                BoxSpec {
                    center: [0.4, 0.0, 1.5],
                    size: [0.1, 2.0, 1.5],
                    label: 1,
                    color: Some([0.7, 0.3, 0.2]),
                    points: 30_000,
                },
                BoxSpec {
                    center: [2.0, 0.0, 1.5],
                    size: [0.0, 1.6, 1.2],
                    label: 2,
                    color: Some([0.2, 0.4, 0.8]),
                    points: 20_000,
                },
            ],
        }),
        "room" => Some(SceneSpec {
            seed: 11,
            class_count: 6,
            room: Some(RoomShell {
                extents: [6.0, 5.0, 3.0],
                wall_thickness: 0.1,
                point_density: 400.0,
                wall_label: 0,
                floor_label: 1,
            }),
            boxes: vec![
                // table
                BoxSpec {
                    center: [1.2, 0.5, 0.75],
                    size: [1.6, 0.9, 0.05],
                    label: 2,
                    color: None,
                    points: 4_000,
                },
                // cabinet against the +X wall
                BoxSpec {
                    center: [2.6, -1.5, 0.9],
                    size: [0.6, 1.2, 1.8],
                    label: 3,
                    color: None,
                    points: 6_000,
                },
                // sofa
                BoxSpec {
                    center: [-1.8, 1.0, 0.4],
                    size: [0.9, 2.0, 0.8],
                    label: 4,
                    color: None,
                    points: 6_000,
                },
                // door panel on the -Y wall
                BoxSpec {
                    center: [-0.5, -2.45, 1.05],
                    size: [0.9, 0.0, 2.1],
                    label: 5,
                    color: None,
                    points: 3_000,
                },
            ],
        }),
        _ => None,
    }
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !start.is_finite() || !end.is_finite() {
        return Err(Error::invalid("grid needs at least one finite value"));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    let span = end - start;
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                end
            } else {
                start + span * i as f64 / last
            }
        })
        .collect())
}

/// Parses `start:end:count` into [`linspace`].
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::invalid(format!("grid `{spec}` is not start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    linspace(start, end, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa_h: f64,
    pub kappa_w: f64,
    pub semantic_fraction: f64,
    pub u_space: f64,
    pub reg_value: Option<f64>,
    pub direction: String,
    /// Set on the single highest-scoring row.
    pub best: bool,
}

/// Renders and scores every `(kappa_h, kappa_w)` pair of the grid. Rows are
/// in ascending lexicographic order; ties for the best row follow the search
/// rule of [`Candidate::beats`].
#[allow(clippy::too_many_arguments)]
pub fn sweep_grid(
    cloud: &PointCloud,
    subset: &[usize],
    plane: &ViewPlane,
    kappa_h: &[f64],
    kappa_w: &[f64],
    bounds: (f64, f64),
    size: ImageSize,
    tau: f64,
    palette: &Palette,
) -> Result<Vec<SweepRow>> {
    if kappa_h.is_empty() || kappa_w.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (hs, ws) = (sorted(kappa_h), sorted(kappa_w));
    let rays: Vec<RayParams> = hs
        .iter()
        .flat_map(|&h| ws.iter().map(move |&w| (h, w)))
        .map(|(h, w)| RayParams::new(h, w, bounds.0, bounds.1))
        .collect::<Result<_>>()?;
    let scored: Vec<Candidate> = rays
        .par_iter()
        .map(|r| score_ray(cloud, subset, plane, r, size, tau, palette))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, c) in scored.iter().enumerate() {
        if c.beats(&scored[best]) {
            best = i;
        }
    }
    Ok(scored
        .iter()
        .enumerate()
        .map(|(i, c)| SweepRow {
            kappa_h: c.kappa.kappa_h(),
            kappa_w: c.kappa.kappa_w(),
            semantic_fraction: c.semantic_fraction,
            u_space: c.u_space,
            reg_value: c.reg_value,
            direction: classify_ray(&c.kappa).name(),
            best: i == best,
        })
        .collect())
}

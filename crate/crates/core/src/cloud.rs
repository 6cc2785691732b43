//! Point cloud ingestion, normalization and per-plane preprocessing.
//!
//! Everything downstream assumes a cloud that has gone through
//! [`normalize_cloud`], so each non-degenerate axis spans exactly
//! `[-0.5, 0.5]`.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower edge of every normalized axis.
pub const NORMALIZED_MIN: f64 = -0.5;
/// Upper edge of every normalized axis.
pub const NORMALIZED_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Which half-space along the depth axis a view plane looks into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn contains(self, depth: f64) -> bool {
        match self {
            Side::Positive => depth > 0.0,
            Side::Negative => depth < 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub position: [f64; 3],
    /// RGB, each channel in `[0, 1]`.
    pub color: [f64; 3],
    pub label: Option<usize>,
}

impl Point {
    pub fn new(position: [f64; 3], color: [f64; 3], label: Option<usize>) -> Self {
        Point {
            position,
            color,
            label,
        }
    }

    pub fn coord(&self, axis: Axis) -> f64 {
        self.position[axis.index()]
    }
}

/// An ordered, immutable list of points.
///
/// Point order is ingestion order and is significant: sampling start rules and
/// render tie-breaks are defined in terms of point indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    class_count: usize,
    source_bounds: Option<[(f64, f64); 3]>,
}

impl PointCloud {
    /// Builds a raw (unnormalized) cloud. The class count is one past the
    /// largest label present, or zero when no point is labeled.
    pub fn new(points: Vec<Point>) -> Self {
        let class_count = points
            .iter()
            .filter_map(|p| p.label)
            .max()
            .map_or(0, |l| l + 1);
        PointCloud {
            points,
            class_count,
            source_bounds: None,
        }
    }

    /// Raises the class count to at least `class_count`.
    pub fn with_class_count(mut self, class_count: usize) -> Self {
        self.class_count = self.class_count.max(class_count);
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &Point {
        &self.points[index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Per-axis `(min, max)` of the raw cloud, recorded by normalization.
    pub fn source_bounds(&self) -> Option<[(f64, f64); 3]> {
        self.source_bounds
    }

    pub fn is_normalized(&self) -> bool {
        self.source_bounds.is_some()
    }

    pub fn has_labels(&self) -> bool {
        self.points.iter().all(|p| p.label.is_some())
    }

    /// Per-axis `(min, max)` of the current coordinates.
    pub fn bounds(&self) -> Option<[(f64, f64); 3]> {
        let first = self.points.first()?;
        let mut b = first.position.map(|v| (v, v));
        for p in &self.points[1..] {
            for (axis, &v) in p.position.iter().enumerate() {
                b[axis].0 = b[axis].0.min(v);
                b[axis].1 = b[axis].1.max(v);
            }
        }
        Some(b)
    }
}

/// Reads an xyz-ascii file: one `x y z r g b [label]` record per line,
/// integer colors in `0..=255`, `#` comment lines and blank lines ignored.
pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    parse_xyz_ascii(&text)
}

pub fn parse_xyz_ascii(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        points.push(parse_record(line, i + 1)?);
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PointCloud::new(points))
}

fn parse_record(line: &str, line_no: usize) -> Result<Point> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 && fields.len() != 7 {
        return Err(err(format!(
            "expected 6 or 7 fields (x y z r g b [label]), found {}",
            fields.len()
        )));
    }
    let mut position = [0.0; 3];
    for (slot, field) in position.iter_mut().zip(&fields[..3]) {
        let v: f64 = field
            .parse()
            .map_err(|_| err(format!("invalid coordinate `{field}`")))?;
        if !v.is_finite() {
            return Err(err(format!("non-finite coordinate `{field}`")));
        }
        *slot = v;
    }
    let mut color = [0.0; 3];
    for (slot, field) in color.iter_mut().zip(&fields[3..6]) {
        let c: u8 = field.parse().map_err(|_| {
            err(format!(
                "color channel `{field}` is not an integer in 0..=255"
            ))
        })?;
        *slot = f64::from(c) / 255.0;
    }
    let label = match fields.get(6) {
        Some(field) => Some(
            field
                .parse::<usize>()
                .map_err(|_| err(format!("invalid label `{field}`")))?,
        ),
        None => None,
    };
    Ok(Point::new(position, color, label))
}

/// Serializes a cloud back to xyz-ascii. Coordinates use the shortest
/// representation that parses back to the same `f64`.
pub fn write_xyz_ascii(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 40);
    for p in cloud.points() {
        let [x, y, z] = p.position;
        let [r, g, b] = p.color.map(quantize_channel);
        out.push_str(&format!("{x} {y} {z} {r} {g} {b}"));
        if let Some(label) = p.label {
            out.push_str(&format!(" {label}"));
        }
        out.push('\n');
    }
    out
}

pub(crate) fn quantize_channel(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Maps each axis independently onto `[-0.5, 0.5]`.
///
/// A degenerate axis (all values equal) maps to `0.0`. An axis that already
/// spans exactly `[-0.5, 0.5]` is left untouched, which makes the operation
/// idempotent bit-for-bit.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<PointCloud> {
    let bounds = cloud.bounds().ok_or(Error::EmptyInput)?;
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let mut q = *p;
            for (axis, &(min, max)) in bounds.iter().enumerate() {
                q.position[axis] = normalize_value(p.position[axis], min, max);
            }
            q
        })
        .collect();
    Ok(PointCloud {
        points,
        class_count: cloud.class_count,
        source_bounds: Some(cloud.source_bounds.unwrap_or(bounds)),
    })
}

fn normalize_value(v: f64, min: f64, max: f64) -> f64 {
    if min == NORMALIZED_MIN && max == NORMALIZED_MAX {
        v
    } else if max == min {
        0.0
    } else {
        (v - min) / (max - min) - 0.5
    }
}

/// One oriented projection plane: points on `side` of the depth axis are
/// projected onto the plane spanned by the height and width axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewPlane {
    pub id: usize,
    pub depth_axis: Axis,
    pub side: Side,
    pub height_axis: Axis,
    pub width_axis: Axis,
}

impl ViewPlane {
    pub fn new(
        id: usize,
        depth_axis: Axis,
        side: Side,
        height_axis: Axis,
        width_axis: Axis,
    ) -> Result<Self> {
        if depth_axis == height_axis || depth_axis == width_axis || height_axis == width_axis {
            return Err(Error::invalid(format!(
                "view plane {id}: axes must be distinct (depth {depth_axis}, height {height_axis}, width {width_axis})"
            )));
        }
        Ok(ViewPlane {
            id,
            depth_axis,
            side,
            height_axis,
            width_axis,
        })
    }

    /// Plane looking along `depth_axis` with the conventional image axes:
    /// Z is the height axis for X and Y depth, Y for Z depth.
    pub fn facing(id: usize, depth_axis: Axis, side: Side) -> Self {
        let (height_axis, width_axis) = match depth_axis {
            Axis::X => (Axis::Z, Axis::Y),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::Y, Axis::X),
        };
        ViewPlane {
            id,
            depth_axis,
            side,
            height_axis,
            width_axis,
        }
    }

    /// Parses `+X`, `-y`, ... into [`ViewPlane::facing`].
    pub fn parse_side(id: usize, s: &str) -> Result<Self> {
        let s = s.trim();
        let (side, axis) = match s.split_at_checked(1) {
            Some(("+", a)) => (Side::Positive, a),
            Some(("-", a)) => (Side::Negative, a),
            _ => {
                return Err(Error::invalid(format!(
                    "bad view plane `{s}`, expected e.g. +X"
                )))
            }
        };
        let axis = match axis.to_ascii_uppercase().as_str() {
            "X" => Axis::X,
            "Y" => Axis::Y,
            "Z" => Axis::Z,
            _ => return Err(Error::invalid(format!("bad view plane axis in `{s}`"))),
        };
        Ok(ViewPlane::facing(id, axis, side))
    }

    pub fn label(&self) -> String {
        let sign = match self.side {
            Side::Positive => '+',
            Side::Negative => '-',
        };
        format!(
            "{sign}{}({}{})",
            self.depth_axis, self.height_axis, self.width_axis
        )
    }
}

/// The first `count` planes of the order (+X, -X, +Y, -Y, +Z, -Z), numbered
/// from 1.
pub fn default_planes(count: usize) -> Result<Vec<ViewPlane>> {
    const ORDER: [(Axis, Side); 6] = [
        (Axis::X, Side::Positive),
        (Axis::X, Side::Negative),
        (Axis::Y, Side::Positive),
        (Axis::Y, Side::Negative),
        (Axis::Z, Side::Positive),
        (Axis::Z, Side::Negative),
    ];
    if count == 0 || count > ORDER.len() {
        return Err(Error::invalid(format!(
            "plane count must be in 1..={}, got {count}",
            ORDER.len()
        )));
    }
    Ok(ORDER[..count]
        .iter()
        .enumerate()
        .map(|(i, &(axis, side))| ViewPlane::facing(i + 1, axis, side))
        .collect())
}

/// Indices of points strictly on the plane's side of the depth axis, in
/// cloud order. Points with zero depth belong to neither side.
pub fn partition_view(cloud: &PointCloud, plane: &ViewPlane) -> Vec<usize> {
    cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| plane.side.contains(p.coord(plane.depth_axis)))
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Greedy max-min farthest point sampling over `subset`.
///
/// The first center is the lowest index in `subset`; each further center is
/// the unchosen point with the largest squared distance to its nearest chosen
/// center, ties going to the lower index. Duplicate indices in `subset` are
/// ignored.
pub fn farthest_point_sample(
    cloud: &PointCloud,
    subset: &[usize],
    count: usize,
) -> Result<Vec<usize>> {
    let mut order = subset.to_vec();
    order.sort_unstable();
    order.dedup();
    if let Some(&bad) = order.iter().find(|&&i| i >= cloud.len()) {
        return Err(Error::invalid(format!(
            "subset index {bad} out of range for a cloud of {} points",
            cloud.len()
        )));
    }
    if count == 0 || count > order.len() {
        return Err(Error::invalid(format!(
            "cannot sample {count} centers from a subset of {} points",
            order.len()
        )));
    }

    let positions: Vec<&[f64; 3]> = order.iter().map(|&i| &cloud.points[i].position).collect();
    let mut nearest = vec![f64::INFINITY; order.len()];
    let mut taken = vec![false; order.len()];
    let mut centers = Vec::with_capacity(count);
    let mut current = 0;
    loop {
        taken[current] = true;
        centers.push(order[current]);
        if centers.len() == count {
            break;
        }
        let mut best = None;
        let mut best_d = f64::NEG_INFINITY;
        for (k, pos) in positions.iter().enumerate() {
            if taken[k] {
                continue;
            }
            let d = squared_distance(pos, positions[current]);
            if d < nearest[k] {
                nearest[k] = d;
            }
            if nearest[k] > best_d {
                best_d = nearest[k];
                best = Some(k);
            }
        }
        current = best.expect("count <= subset size leaves an unchosen point");
    }
    Ok(centers)
}

/// Mean position of one ball-query neighborhood, with its two planar slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSummary {
    pub center_index: usize,
    pub member_count: usize,
    pub theta: [f64; 3],
    /// `(theta.x, theta.y)`
    pub theta_xy: [f64; 2],
    /// `(theta.x, theta.z)`
    pub theta_xz: [f64; 2],
}

impl BallSummary {
    fn from_mean(center_index: usize, member_count: usize, theta: [f64; 3]) -> Self {
        BallSummary {
            center_index,
            member_count,
            theta,
            theta_xy: [theta[0], theta[1]],
            theta_xz: [theta[0], theta[2]],
        }
    }
}

/// Ball query plus mean pooling: for each center, averages the positions of
/// every `subset` point within Euclidean distance `radius` (inclusive). The
/// center itself is always a member. No cap is placed on membership size.
pub fn ball_aggregate(
    cloud: &PointCloud,
    subset: &[usize],
    centers: &[usize],
    radius: f64,
) -> Result<Vec<BallSummary>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if let Some(&bad) = subset.iter().chain(centers).find(|&&i| i >= cloud.len()) {
        return Err(Error::invalid(format!("point index {bad} out of range")));
    }
    let balls = centers
        .iter()
        .map(|&c| {
            let center = &cloud.points[c].position;
            let mut sum = [0.0; 3];
            let mut members = 0usize;
            let mut has_center = false;
            for &i in subset {
                let p = &cloud.points[i].position;
                if distance(center, p) <= radius {
                    has_center |= i == c;
                    members += 1;
                    for axis in 0..3 {
                        sum[axis] += p[axis];
                    }
                }
            }
            if !has_center {
                members += 1;
                for axis in 0..3 {
                    sum[axis] += center[axis];
                }
            }
            let n = members as f64;
            BallSummary::from_mean(c, members, sum.map(|s| s / n))
        })
        .collect();
    Ok(balls)
}

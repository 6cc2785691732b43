//! Point-to-pixel mapping under straight and curved rays.
//!
//! With depth `d`, height coordinate `u` and width coordinate `v` of a point
//! under a view plane, the curved image coordinates are
//!
//! ```text
//! h = (u + kappa_h * d^2 - min) / (max - min) * H
//! w = (v + kappa_w * d^2 - min) / (max - min) * W
//! ```
//!
//! over the normalized bounds `min = -0.5`, `max = 0.5`. `kappa = (0, 0)` is
//! the straight parallel projection; `kappa_w = 0, kappa_h >= 0` is the
//! upward-only mirage projection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cloud::{Point, ViewPlane, NORMALIZED_MAX, NORMALIZED_MIN};
use crate::{Error, Result, DEFAULT_KAPPA_MAX, DEFAULT_KAPPA_MIN};

/// Output image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageSize {
    pub height: usize,
    pub width: usize,
}

impl ImageSize {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image size must be at least 1x1, got {height}x{width}"
            )));
        }
        Ok(ImageSize { height, width })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }
}

impl Default for ImageSize {
    fn default() -> Self {
        ImageSize {
            height: crate::DEFAULT_RESOLUTION,
            width: crate::DEFAULT_RESOLUTION,
        }
    }
}

/// Curvature coefficients for one view plane together with the bounds they
/// must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayParams {
    kappa_h: f64,
    kappa_w: f64,
    kappa_min: f64,
    kappa_max: f64,
}

impl RayParams {
    pub fn new(kappa_h: f64, kappa_w: f64, kappa_min: f64, kappa_max: f64) -> Result<Self> {
        if !(kappa_min.is_finite() && kappa_max.is_finite() && kappa_min < kappa_max) {
            return Err(Error::invalid(format!(
                "curvature bounds must satisfy min < max, got [{kappa_min}, {kappa_max}]"
            )));
        }
        for (name, k) in [("kappa_h", kappa_h), ("kappa_w", kappa_w)] {
            if !(kappa_min..=kappa_max).contains(&k) {
                return Err(Error::invalid(format!(
                    "{name} = {k} lies outside [{kappa_min}, {kappa_max}]"
                )));
            }
        }
        Ok(RayParams {
            kappa_h,
            kappa_w,
            kappa_min,
            kappa_max,
        })
    }

    /// Straight rays with the default `[-5, 5]` bounds.
    pub fn straight() -> Self {
        RayParams {
            kappa_h: 0.0,
            kappa_w: 0.0,
            kappa_min: DEFAULT_KAPPA_MIN,
            kappa_max: DEFAULT_KAPPA_MAX,
        }
    }

    /// Same bounds, new coefficients.
    pub fn with_kappa(&self, kappa_h: f64, kappa_w: f64) -> Result<Self> {
        Self::new(kappa_h, kappa_w, self.kappa_min, self.kappa_max)
    }

    pub fn kappa_h(&self) -> f64 {
        self.kappa_h
    }

    pub fn kappa_w(&self) -> f64 {
        self.kappa_w
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn squared_norm(&self) -> f64 {
        self.kappa_h * self.kappa_h + self.kappa_w * self.kappa_w
    }
}

/// Where a point lands on the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    /// Continuous row coordinate, nominally in `[0, H]`.
    pub h_cont: f64,
    /// Continuous column coordinate, nominally in `[0, W]`.
    pub w_cont: f64,
    /// Absolute depth-axis coordinate, used for occlusion.
    pub depth: f64,
    /// `(row, column)` when the point is in frame.
    pub cell: Option<(usize, usize)>,
}

impl PixelCoord {
    pub fn in_frame(&self) -> bool {
        self.cell.is_some()
    }
}

/// Height or width coordinate displaced by a curved ray.
#[inline]
fn bent(coord: f64, kappa: f64, depth: f64) -> f64 {
    coord + kappa * (depth * depth)
}

#[inline]
fn within_bounds(v: f64) -> bool {
    (NORMALIZED_MIN..=NORMALIZED_MAX).contains(&v)
}

#[inline]
fn to_image(v: f64, extent: usize) -> f64 {
    (v - NORMALIZED_MIN) / (NORMALIZED_MAX - NORMALIZED_MIN) * extent as f64
}

#[inline]
fn discretize(cont: f64, extent: usize) -> usize {
    (cont.floor() as usize).min(extent - 1)
}

/// Projects one point of a normalized cloud through the plane's curved rays.
///
/// Out-of-frame is reported through [`PixelCoord::cell`], never as an error.
/// The frame test is the closed-interval bound check of [`boundary_check`],
/// and a coordinate exactly on the far edge lands in the last row or column.
pub fn project_point(p: &Point, plane: &ViewPlane, ray: &RayParams, size: ImageSize) -> PixelCoord {
    let d = p.coord(plane.depth_axis);
    let hb = bent(p.coord(plane.height_axis), ray.kappa_h, d);
    let wb = bent(p.coord(plane.width_axis), ray.kappa_w, d);
    let h_cont = to_image(hb, size.height);
    let w_cont = to_image(wb, size.width);
    let cell = (within_bounds(hb) && within_bounds(wb)).then(|| {
        (
            discretize(h_cont, size.height),
            discretize(w_cont, size.width),
        )
    });
    PixelCoord {
        h_cont,
        w_cont,
        depth: d.abs(),
        cell,
    }
}

/// True iff both bent coordinates stay inside the normalized bounds.
pub fn boundary_check(p: &Point, plane: &ViewPlane, ray: &RayParams) -> bool {
    let d = p.coord(plane.depth_axis);
    within_bounds(bent(p.coord(plane.height_axis), ray.kappa_h, d))
        && within_bounds(bent(p.coord(plane.width_axis), ray.kappa_w, d))
}

/// Bending directions of a ray pair.
///
/// `up`/`down` follow the sign of `kappa_h`; `left`/`right` follow
/// `kappa_w > 0` and `kappa_w < 0` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RayDirection {
    pub up: bool,
    pub down: bool,
    pub left: bool,
    pub right: bool,
}

impl RayDirection {
    pub fn is_straight(&self) -> bool {
        !(self.up || self.down || self.left || self.right)
    }

    pub fn name(&self) -> String {
        if self.is_straight() {
            return "Straight-Line Ray".to_owned();
        }
        let vertical = if self.up {
            Some("Upward")
        } else if self.down {
            Some("Downward")
        } else {
            None
        };
        let horizontal = if self.left {
            Some("Leftward")
        } else if self.right {
            Some("Rightward")
        } else {
            None
        };
        let parts: Vec<&str> = vertical.into_iter().chain(horizontal).collect();
        format!("{}-Curve Ray", parts.join("-"))
    }
}

impl fmt::Display for RayDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn classify_ray(ray: &RayParams) -> RayDirection {
    RayDirection {
        up: ray.kappa_h > 0.0,
        down: ray.kappa_h < 0.0,
        left: ray.kappa_w > 0.0,
        right: ray.kappa_w < 0.0,
    }
}

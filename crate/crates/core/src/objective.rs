//! Utilization score, Gaussian color regularizer and training losses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::projection::RayParams;
use crate::raster::{ColorMode, RasterImage};
use crate::{Error, Result};

/// Fraction of non-black pixels in an image.
pub fn semantic_fraction(img: &RasterImage) -> f64 {
    img.semantic_pixel_count() as f64 / img.size().pixel_count() as f64
}

/// `fraction^tau`, except that a zero fraction scores zero for every `tau`
/// (including `tau = 0`).
pub fn utilization_from_fraction(fraction: f64, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("fraction {fraction} outside [0, 1]")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "tau must be a finite value >= 0, got {tau}"
        )));
    }
    if fraction == 0.0 {
        return Ok(0.0);
    }
    Ok(fraction.powf(tau))
}

/// 2D space utilization of a semantic-color render.
pub fn u_space(img: &RasterImage, tau: f64) -> Result<f64> {
    if img.mode() != ColorMode::Semantic {
        return Err(Error::invalid(
            "utilization is only defined on semantic-color images",
        ));
    }
    utilization_from_fraction(semantic_fraction(img), tau)
}

fn check_spread(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Gaussian regularizer needs a positive utilization, got {u}"
        )))
    }
}

/// Isotropic 2D Gaussian in `(kappa_h, kappa_w)` with standard deviation `u`:
/// `exp(-(kh^2 + kw^2) / (2 u^2)) / (sqrt(2 pi) u)`.
pub fn gauss_reg(kappa_h: f64, kappa_w: f64, u: f64) -> Result<f64> {
    check_spread(u)?;
    let r2 = kappa_h * kappa_h + kappa_w * kappa_w;
    Ok((-r2 / (2.0 * u * u)).exp() / ((2.0 * PI).sqrt() * u))
}

/// Partial derivatives of [`gauss_reg`] in both coefficients, holding `u`
/// fixed.
pub fn grad_gauss_reg(kappa_h: f64, kappa_w: f64, u: f64) -> Result<(f64, f64)> {
    let l = gauss_reg(kappa_h, kappa_w, u)?;
    let s = -l / (u * u);
    Ok((kappa_h * s, kappa_w * s))
}

/// Per-plane scoring summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub plane_id: usize,
    pub semantic_fraction: f64,
    pub tau: f64,
    pub u_space: f64,
    /// Regularizer peak `l(0, 0)`; `None` when the image is empty.
    pub reg_peak: Option<f64>,
    /// Regularizer at the chosen coefficients; `None` when the image is empty.
    pub reg_value: Option<f64>,
    pub kappa: RayParams,
}

impl UtilizationReport {
    pub fn new(
        plane_id: usize,
        semantic_fraction: f64,
        tau: f64,
        kappa: RayParams,
    ) -> Result<Self> {
        let u = utilization_from_fraction(semantic_fraction, tau)?;
        let (reg_peak, reg_value) = if u > 0.0 {
            (
                Some(gauss_reg(0.0, 0.0, u)?),
                Some(gauss_reg(kappa.kappa_h(), kappa.kappa_w(), u)?),
            )
        } else {
            (None, None)
        };
        Ok(UtilizationReport {
            plane_id,
            semantic_fraction,
            tau,
            u_space: u,
            reg_peak,
            reg_value,
            kappa,
        })
    }

    pub fn from_image(
        plane_id: usize,
        img: &RasterImage,
        tau: f64,
        kappa: RayParams,
    ) -> Result<Self> {
        if img.mode() != ColorMode::Semantic {
            return Err(Error::invalid(
                "utilization is only defined on semantic-color images",
            ));
        }
        Self::new(plane_id, semantic_fraction(img), tau, kappa)
    }

    /// True when the plane rendered no pixels and has no regularizer value.
    pub fn is_degenerate(&self) -> bool {
        self.reg_value.is_none()
    }
}

/// Sum of per-plane regularizer values. Planes with an empty image carry no
/// regularizer and contribute nothing.
pub fn l_sparks(reports: &[UtilizationReport]) -> f64 {
    reports.iter().filter_map(|r| r.reg_value).sum()
}

/// Cross-entropy with a `-1 / (n C)` prefactor over `n` rows of `C` logits and
/// matching one-hot target rows.
pub fn cross_entropy(logits: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    let n = logits.len();
    if n == 0 {
        return Err(Error::invalid("cross-entropy needs at least one row"));
    }
    if targets.len() != n {
        return Err(Error::invalid(format!(
            "{n} logit rows but {} target rows",
            targets.len()
        )));
    }
    let classes = logits[0].len();
    if classes < 2 {
        return Err(Error::invalid("cross-entropy needs at least two classes"));
    }
    let mut total = 0.0;
    for (i, (row, target)) in logits.iter().zip(targets).enumerate() {
        if row.len() != classes || target.len() != classes {
            return Err(Error::invalid(format!(
                "row {i} does not have {classes} entries"
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("row {i} has non-finite logits")));
        }
        let hot = target.iter().filter(|&&t| t == 1.0).count();
        if hot != 1 || target.iter().any(|&t| t != 0.0 && t != 1.0) {
            return Err(Error::invalid(format!("target row {i} is not one-hot")));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += row
            .iter()
            .zip(target)
            .map(|(v, t)| t * (v - log_norm))
            .sum::<f64>();
    }
    Ok(-total / (n * classes) as f64)
}

/// `ce + lambda * sparks`.
pub fn total_loss(ce: f64, sparks: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(ce + lambda * sparks)
}

//! Curved-ray projection of 3D point clouds into 2D images.
//!
//! A point cloud is normalized to the unit cube centred at the origin, split
//! into view planes, and rendered through rays whose height and width offsets
//! grow with the squared depth of each point. Rendered semantic images are
//! scored by how many pixels they fill, and per-plane ray parameters are
//! chosen either by a bounded Gaussian mutation search or by a small
//! attention-based predictor with loadable weights.
//!
//! Modules, bottom-up:
//!
//! * [`cloud`] ingestion, normalization, plane partition, sampling and ball pooling
//! * [`projection`] point-to-pixel mapping under straight and curved rays
//! * [`raster`] depth-buffered rendering and PPM encoding
//! * [`objective`] utilization score, Gaussian regularizer and losses
//! * [`fireworks`] seeded Gaussian mutation and the per-plane search
//! * [`predictor`] attention forward pass producing ray parameters
//! * [`scenes`] synthetic scenes and parameter-grid sweeps

pub mod cloud;
mod error;
pub mod fireworks;
pub mod objective;
pub mod predictor;
pub mod projection;
pub mod raster;
pub mod scenes;

pub use cloud::{Axis, BallSummary, Point, PointCloud, Side, ViewPlane};
pub use error::{Error, Result};
pub use fireworks::{MutationConfig, RngStream, SearchTrace};
pub use objective::UtilizationReport;
pub use predictor::{PredictorConfig, PredictorWeights};
pub use projection::{ImageSize, PixelCoord, RayDirection, RayParams};
pub use raster::{ColorMode, Palette, RasterImage};
pub use scenes::{SceneSpec, SweepRow};

/// Image resolution used throughout when nothing else is configured.
pub const DEFAULT_RESOLUTION: usize = 224;
/// Number of view planes per scene.
pub const DEFAULT_PLANES: usize = 4;
/// Farthest-point-sampling center count.
pub const DEFAULT_CENTERS: usize = 32;
/// Ball query radius.
pub const DEFAULT_RADIUS: f64 = 0.2;
/// Self/cross attention blend weight.
pub const DEFAULT_OMEGA: f64 = 0.8;
/// Lower bound on curvature coefficients.
pub const DEFAULT_KAPPA_MIN: f64 = -5.0;
/// Upper bound on curvature coefficients.
pub const DEFAULT_KAPPA_MAX: f64 = 5.0;
/// Utilization awareness exponent.
pub const DEFAULT_TAU: f64 = 0.8;
/// Weight of the sparks regularizer in the total loss.
pub const DEFAULT_LAMBDA: f64 = 0.2;

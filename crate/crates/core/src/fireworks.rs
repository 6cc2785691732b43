//! Seeded Gaussian mutation and a bounded, elitist search over per-plane ray
//! coefficients.
//!
//! A coefficient `k` mutates to `k * (1 + g)` with `g ~ N(0, 1)`. When that
//! leaves `[min, max]` it wraps to `min + (|k'| mod (max - min))`. The search
//! keeps a single best pair, proposes `population` mutations of it per
//! iteration, and scores each by the utilization of its semantic render.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, ViewPlane};
use crate::objective::{semantic_fraction, UtilizationReport};
use crate::projection::{ImageSize, RayParams};
use crate::raster::{render_view, ColorMode, Palette};
use crate::{Error, Result, DEFAULT_KAPPA_MAX, DEFAULT_KAPPA_MIN};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of stream identifiers (plane, iteration,
/// candidate, ...) into an independent child seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |h, &p| splitmix64(splitmix64(h) ^ p))
}

/// Deterministic random stream (ChaCha8).
///
/// Uniforms take the top 53 bits of a `u64` and centre them in their cell, so
/// they lie strictly inside `(0, 1)`. Normals use the cosine branch of the
/// Box-Muller transform on two such uniforms.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn derived(seed: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(seed, path))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        (lo + (hi - lo) * self.uniform()).clamp(lo, hi)
    }

    /// Standard normal draw. Not clamped.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Alias kept for call sites that read as an operation.
pub fn gaussian_sample(rng: &mut RngStream) -> f64 {
    rng.gaussian()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub seed: u64,
}

impl MutationConfig {
    pub fn new(kappa_min: f64, kappa_max: f64, seed: u64) -> Result<Self> {
        if !(kappa_min.is_finite() && kappa_max.is_finite() && kappa_min < kappa_max) {
            return Err(Error::invalid(format!(
                "mutation bounds must satisfy min < max, got [{kappa_min}, {kappa_max}]"
            )));
        }
        Ok(MutationConfig {
            kappa_min,
            kappa_max,
            seed,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        MutationConfig {
            kappa_min: DEFAULT_KAPPA_MIN,
            kappa_max: DEFAULT_KAPPA_MAX,
            seed,
        }
    }
}

/// Applies one mutation with a given normal draw `g`.
///
/// Out-of-range results wrap to `min + (|k'| mod range)`; the modulus is the
/// exact floating-point remainder, so wrapped values fall in `[min, max)`.
pub fn mutate_with(kappa: f64, g: f64, kappa_min: f64, kappa_max: f64) -> f64 {
    let raw = kappa * (1.0 + g);
    if raw >= kappa_min && raw <= kappa_max {
        return raw;
    }
    let range = kappa_max - kappa_min;
    // rounding in `min + rem` can land a hair past `max`
    (kappa_min + raw.abs() % range).clamp(kappa_min, kappa_max)
}

pub fn mutate(kappa: f64, cfg: &MutationConfig, rng: &mut RngStream) -> f64 {
    let g = rng.gaussian();
    mutate_with(kappa, g, cfg.kappa_min, cfg.kappa_max)
}

/// Mutates both coefficients of a ray, each with its own normal draw.
pub fn mutate_ray(ray: &RayParams, cfg: &MutationConfig, rng: &mut RngStream) -> Result<RayParams> {
    let kh = mutate(ray.kappa_h(), cfg, rng);
    let kw = mutate(ray.kappa_w(), cfg, rng);
    RayParams::new(kh, kw, cfg.kappa_min, cfg.kappa_max)
}

/// Search-time proposal: like [`mutate`], but a coefficient sitting exactly at
/// zero (a fixed point of the multiplicative rule) is replaced by a uniform
/// draw over the bounds.
fn propose(kappa: f64, cfg: &MutationConfig, rng: &mut RngStream) -> f64 {
    if kappa == 0.0 {
        rng.uniform_in(cfg.kappa_min, cfg.kappa_max)
    } else {
        mutate(kappa, cfg, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub size: ImageSize,
    pub tau: f64,
    pub population: usize,
    pub iterations: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            size: ImageSize::default(),
            tau: crate::DEFAULT_TAU,
            population: 16,
            iterations: 30,
        }
    }
}

/// One scored ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kappa: RayParams,
    pub semantic_fraction: f64,
    pub u_space: f64,
    pub reg_value: Option<f64>,
}

impl Candidate {
    /// Higher utilization wins; ties go to the smaller squared norm, then to
    /// the smaller `kappa_h`.
    pub fn beats(&self, other: &Candidate) -> bool {
        if self.u_space != other.u_space {
            return self.u_space > other.u_space;
        }
        let (a, b) = (self.kappa.squared_norm(), other.kappa.squared_norm());
        if a != b {
            return a < b;
        }
        self.kappa.kappa_h() < other.kappa.kappa_h()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub candidates: Vec<Candidate>,
    /// Best candidate seen up to and including this step.
    pub best: Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
    /// The plane had no points; the trace holds the initial ray at score zero.
    pub empty_subset: bool,
}

impl SearchTrace {
    pub fn best_scores(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.best.u_space).collect()
    }

    pub fn best(&self) -> &Candidate {
        &self.steps.last().expect("trace has at least one step").best
    }

    pub fn evaluations(&self) -> usize {
        self.steps.iter().map(|s| s.candidates.len()).sum()
    }
}

/// Renders one semantic image and scores it.
pub fn score_ray(
    cloud: &PointCloud,
    subset: &[usize],
    plane: &ViewPlane,
    ray: &RayParams,
    size: ImageSize,
    tau: f64,
    palette: &Palette,
) -> Result<Candidate> {
    let img = render_view(
        cloud,
        subset,
        plane,
        ray,
        size,
        ColorMode::Semantic,
        palette,
    )?;
    let report = UtilizationReport::new(plane.id, semantic_fraction(&img), tau, *ray)?;
    Ok(Candidate {
        kappa: *ray,
        semantic_fraction: report.semantic_fraction,
        u_space: report.u_space,
        reg_value: report.reg_value,
    })
}

/// Elitist single-parent mutation search for one view plane.
///
/// Step 0 scores `init` and `population - 1` mutations of it. Each of the
/// following `iterations` steps scores `population` componentwise mutations
/// of the best ray so far. Every proposal draws from its own stream derived
/// from `(seed, plane id, step, candidate)`, so results do not depend on the
/// number of worker threads.
pub fn optimize_plane(
    cloud: &PointCloud,
    subset: &[usize],
    plane: &ViewPlane,
    settings: &SearchSettings,
    cfg: &MutationConfig,
    init: &RayParams,
    palette: &Palette,
) -> Result<(RayParams, SearchTrace)> {
    if settings.population == 0 {
        return Err(Error::invalid("population must be at least 1"));
    }
    let init = RayParams::new(init.kappa_h(), init.kappa_w(), cfg.kappa_min, cfg.kappa_max)?;
    if subset.is_empty() {
        let c = Candidate {
            kappa: init,
            semantic_fraction: 0.0,
            u_space: 0.0,
            reg_value: None,
        };
        let trace = SearchTrace {
            steps: vec![TraceStep {
                candidates: vec![c],
                best: c,
            }],
            empty_subset: true,
        };
        return Ok((init, trace));
    }

    let score = |ray: &RayParams| {
        score_ray(
            cloud,
            subset,
            plane,
            ray,
            settings.size,
            settings.tau,
            palette,
        )
    };
    let stream = |step: usize, k: usize| {
        RngStream::derived(cfg.seed, &[plane.id as u64, step as u64, k as u64])
    };

    let mut steps = Vec::with_capacity(settings.iterations + 1);
    let mut best: Option<Candidate> = None;
    for step in 0..=settings.iterations {
        let parent = best.map_or(init, |b| b.kappa);
        let rays: Vec<RayParams> = (0..settings.population)
            .map(|k| {
                if step == 0 && k == 0 {
                    return Ok(init);
                }
                let mut rng = stream(step, k);
                let (kh, kw) = if step == 0 {
                    (
                        mutate(parent.kappa_h(), cfg, &mut rng),
                        mutate(parent.kappa_w(), cfg, &mut rng),
                    )
                } else {
                    (
                        propose(parent.kappa_h(), cfg, &mut rng),
                        propose(parent.kappa_w(), cfg, &mut rng),
                    )
                };
                RayParams::new(kh, kw, cfg.kappa_min, cfg.kappa_max)
            })
            .collect::<Result<_>>()?;
        let candidates: Vec<Candidate> = rays.par_iter().map(score).collect::<Result<_>>()?;
        for c in &candidates {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(*c);
            }
        }
        steps.push(TraceStep {
            candidates,
            best: best.expect("population >= 1"),
        });
    }
    let trace = SearchTrace {
        steps,
        empty_subset: false,
    };
    Ok((trace.best().kappa, trace))
}

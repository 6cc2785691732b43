//! Forward pass that turns a view plane's points into ray coefficients.
//!
//! Pipeline per plane: partition, farthest point sampling, ball pooling,
//! attention over the sequence of ball means, a 2-9-1 sigmoid MLP per branch,
//! mean pooling over balls, and an affine map of the pooled sigmoid output
//! onto the coefficient bounds. The H branch attends over `(x, z)` ball
//! slices and the W branch over `(x, y)` slices; each blends its own
//! self-attention with cross-attention into the other slice.
//!
//! Weights are loaded from JSON; there is no training loop.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::{
    ball_aggregate, farthest_point_sample, partition_view, BallSummary, PointCloud, ViewPlane,
};
use crate::fireworks::{mutate, MutationConfig, RngStream};
use crate::projection::RayParams;
use crate::{Error, Result};

pub const TOKEN_DIM: usize = 2;
pub const HIDDEN_DIM: usize = 9;

type Mat2 = [[f64; TOKEN_DIM]; TOKEN_DIM];
type Token = [f64; TOKEN_DIM];

/// Query, key and value projections, each `out x in`, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionParams {
    pub query: Mat2,
    pub key: Mat2,
    pub value: Mat2,
}

impl AttentionParams {
    pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

    pub fn zeros() -> Self {
        AttentionParams {
            query: [[0.0; 2]; 2],
            key: [[0.0; 2]; 2],
            value: [[0.0; 2]; 2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpHead {
    pub hidden_weight: [[f64; TOKEN_DIM]; HIDDEN_DIM],
    pub hidden_bias: [f64; HIDDEN_DIM],
    pub out_weight: [f64; HIDDEN_DIM],
    pub out_bias: f64,
}

impl MlpHead {
    pub fn zeros() -> Self {
        MlpHead {
            hidden_weight: [[0.0; TOKEN_DIM]; HIDDEN_DIM],
            hidden_bias: [0.0; HIDDEN_DIM],
            out_weight: [0.0; HIDDEN_DIM],
            out_bias: 0.0,
        }
    }

    /// Sigmoid after both layers; output in `(0, 1)`.
    pub fn forward(&self, x: &Token) -> f64 {
        let mut acc = self.out_bias;
        for ((row, b), w) in self
            .hidden_weight
            .iter()
            .zip(&self.hidden_bias)
            .zip(&self.out_weight)
        {
            acc += w * sigmoid(dot(row, x) + b);
        }
        sigmoid(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchWeights {
    pub self_attn: AttentionParams,
    pub cross_attn: AttentionParams,
    pub mlp: MlpHead,
}

impl BranchWeights {
    pub fn zeros() -> Self {
        BranchWeights {
            self_attn: AttentionParams::zeros(),
            cross_attn: AttentionParams::zeros(),
            mlp: MlpHead::zeros(),
        }
    }
}

/// Parameters of both branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorWeights {
    pub h: BranchWeights,
    pub w: BranchWeights,
}

/// One named tensor in the weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl PredictorWeights {
    pub fn zeros() -> Self {
        PredictorWeights {
            h: BranchWeights::zeros(),
            w: BranchWeights::zeros(),
        }
    }

    /// Uniform weights in `[-scale, scale]` from a seeded stream.
    pub fn random(seed: u64, scale: f64) -> Self {
        let mut rng = RngStream::new(seed);
        let mut tensors = Self::zeros().tensors();
        for t in tensors.values_mut() {
            for v in &mut t.data {
                *v = rng.uniform_in(-scale, scale);
            }
        }
        Self::from_tensors(&tensors).expect("layout comes from tensors")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Parses the weight file: a JSON object mapping tensor names
    /// (`h.self_attn.query`, ..., `w.mlp.1.bias`) to `{shape, data}` with
    /// row-major data. Every tensor must be present with its exact shape.
    pub fn from_json(text: &str) -> Result<Self> {
        let tensors: BTreeMap<String, Tensor> = serde_json::from_str(text)?;
        Self::from_tensors(&tensors)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.tensors()).expect("tensors serialize")
    }

    fn layout() -> Vec<(String, Vec<usize>)> {
        let mut names = Vec::new();
        for branch in ["h", "w"] {
            for block in ["self_attn", "cross_attn"] {
                for m in ["query", "key", "value"] {
                    names.push((format!("{branch}.{block}.{m}"), vec![TOKEN_DIM, TOKEN_DIM]));
                }
            }
            names.push((
                format!("{branch}.mlp.0.weight"),
                vec![HIDDEN_DIM, TOKEN_DIM],
            ));
            names.push((format!("{branch}.mlp.0.bias"), vec![HIDDEN_DIM]));
            names.push((format!("{branch}.mlp.1.weight"), vec![1, HIDDEN_DIM]));
            names.push((format!("{branch}.mlp.1.bias"), vec![1]));
        }
        names
    }

    fn tensors(&self) -> BTreeMap<String, Tensor> {
        let mut out = BTreeMap::new();
        for (name, b) in [("h", &self.h), ("w", &self.w)] {
            for (block, a) in [("self_attn", &b.self_attn), ("cross_attn", &b.cross_attn)] {
                for (m, mat) in [("query", &a.query), ("key", &a.key), ("value", &a.value)] {
                    out.insert(
                        format!("{name}.{block}.{m}"),
                        Tensor {
                            shape: vec![TOKEN_DIM, TOKEN_DIM],
                            data: mat.iter().flatten().copied().collect(),
                        },
                    );
                }
            }
            out.insert(
                format!("{name}.mlp.0.weight"),
                Tensor {
                    shape: vec![HIDDEN_DIM, TOKEN_DIM],
                    data: b.mlp.hidden_weight.iter().flatten().copied().collect(),
                },
            );
            out.insert(
                format!("{name}.mlp.0.bias"),
                Tensor {
                    shape: vec![HIDDEN_DIM],
                    data: b.mlp.hidden_bias.to_vec(),
                },
            );
            out.insert(
                format!("{name}.mlp.1.weight"),
                Tensor {
                    shape: vec![1, HIDDEN_DIM],
                    data: b.mlp.out_weight.to_vec(),
                },
            );
            out.insert(
                format!("{name}.mlp.1.bias"),
                Tensor {
                    shape: vec![1],
                    data: vec![b.mlp.out_bias],
                },
            );
        }
        out
    }

    fn from_tensors(tensors: &BTreeMap<String, Tensor>) -> Result<Self> {
        let layout = Self::layout();
        if let Some(extra) = tensors
            .keys()
            .find(|k| !layout.iter().any(|(n, _)| n == *k))
        {
            return Err(Error::config(extra.clone(), "unknown tensor"));
        }
        for (name, shape) in &layout {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::config(name.clone(), "missing tensor"))?;
            if &t.shape != shape {
                return Err(Error::config(
                    name.clone(),
                    format!("expected shape {shape:?}, found {:?}", t.shape),
                ));
            }
            let expected: usize = shape.iter().product();
            if t.data.len() != expected {
                return Err(Error::config(
                    name.clone(),
                    format!(
                        "shape {shape:?} needs {expected} values, found {}",
                        t.data.len()
                    ),
                ));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(name.clone(), "non-finite value"));
            }
        }
        let data = |name: String| &tensors[&name].data;
        let mat2 = |name: String| {
            let d = data(name);
            [[d[0], d[1]], [d[2], d[3]]]
        };
        let branch = |b: &str| {
            let attn = |block: &str| AttentionParams {
                query: mat2(format!("{b}.{block}.query")),
                key: mat2(format!("{b}.{block}.key")),
                value: mat2(format!("{b}.{block}.value")),
            };
            let w0 = data(format!("{b}.mlp.0.weight"));
            let mut hidden_weight = [[0.0; TOKEN_DIM]; HIDDEN_DIM];
            for (r, row) in hidden_weight.iter_mut().enumerate() {
                row.copy_from_slice(&w0[r * TOKEN_DIM..(r + 1) * TOKEN_DIM]);
            }
            let mut hidden_bias = [0.0; HIDDEN_DIM];
            hidden_bias.copy_from_slice(data(format!("{b}.mlp.0.bias")));
            let mut out_weight = [0.0; HIDDEN_DIM];
            out_weight.copy_from_slice(data(format!("{b}.mlp.1.weight")));
            BranchWeights {
                self_attn: attn("self_attn"),
                cross_attn: attn("cross_attn"),
                mlp: MlpHead {
                    hidden_weight,
                    hidden_bias,
                    out_weight,
                    out_bias: data(format!("{b}.mlp.1.bias"))[0],
                },
            }
        };
        Ok(PredictorWeights {
            h: branch("h"),
            w: branch("w"),
        })
    }
}

impl Default for PredictorWeights {
    fn default() -> Self {
        Self::zeros()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &Token, b: &Token) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn apply(m: &Mat2, x: &Token) -> Token {
    [dot(&m[0], x), dot(&m[1], x)]
}

/// Result of single-head scaled dot-product attention.
#[derive(Debug, Clone, PartialEq)]
pub struct Attended {
    pub outputs: Vec<Token>,
    /// `weights[i][j]`: how much query `i` attends to key `j`. Rows sum to 1.
    pub weights: Vec<Vec<f64>>,
}

/// Single-head attention with scale `1/sqrt(2)`. Queries come from
/// `query_tokens`; keys and values from `context_tokens`.
pub fn scaled_dot_product_attention(
    query_tokens: &[Token],
    context_tokens: &[Token],
    params: &AttentionParams,
) -> Result<Attended> {
    if query_tokens.is_empty() || context_tokens.is_empty() {
        return Err(Error::invalid("attention needs at least one token"));
    }
    let scale = 1.0 / (TOKEN_DIM as f64).sqrt();
    let keys: Vec<Token> = context_tokens
        .iter()
        .map(|t| apply(&params.key, t))
        .collect();
    let values: Vec<Token> = context_tokens
        .iter()
        .map(|t| apply(&params.value, t))
        .collect();
    let mut outputs = Vec::with_capacity(query_tokens.len());
    let mut weights = Vec::with_capacity(query_tokens.len());
    for t in query_tokens {
        let q = apply(&params.query, t);
        let scores: Vec<f64> = keys.iter().map(|k| dot(&q, k) * scale).collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        let row: Vec<f64> = exp.iter().map(|e| e / total).collect();
        let mut out = [0.0; TOKEN_DIM];
        for (a, v) in row.iter().zip(&values) {
            out[0] += a * v[0];
            out[1] += a * v[1];
        }
        outputs.push(out);
        weights.push(row);
    }
    Ok(Attended { outputs, weights })
}

/// Per-ball embeddings of both branches.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub mu_h: Vec<Token>,
    pub mu_w: Vec<Token>,
}

fn blend(omega: f64, own: &[Token], cross: &[Token]) -> Vec<Token> {
    own.iter()
        .zip(cross)
        .map(|(a, b)| {
            [
                omega * a[0] + (1.0 - omega) * b[0],
                omega * a[1] + (1.0 - omega) * b[1],
            ]
        })
        .collect()
}

/// Attention stage over the sequence of balls. The H branch is
/// `omega * SA(xz, xz) + (1 - omega) * CA(xz, xy)`, the W branch the same with
/// the slices swapped.
pub fn attention_embed(
    balls: &[BallSummary],
    weights: &PredictorWeights,
    omega: f64,
) -> Result<AttentionOutput> {
    if balls.is_empty() {
        return Err(Error::invalid("attention needs at least one ball"));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::invalid(format!(
            "omega must lie in [0, 1], got {omega}"
        )));
    }
    let xz: Vec<Token> = balls.iter().map(|b| b.theta_xz).collect();
    let xy: Vec<Token> = balls.iter().map(|b| b.theta_xy).collect();
    let h_self = scaled_dot_product_attention(&xz, &xz, &weights.h.self_attn)?;
    let h_cross = scaled_dot_product_attention(&xz, &xy, &weights.h.cross_attn)?;
    let w_self = scaled_dot_product_attention(&xy, &xy, &weights.w.self_attn)?;
    let w_cross = scaled_dot_product_attention(&xy, &xz, &weights.w.cross_attn)?;
    Ok(AttentionOutput {
        mu_h: blend(omega, &h_self.outputs, &h_cross.outputs),
        mu_w: blend(omega, &w_self.outputs, &w_cross.outputs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub centers: usize,
    pub radius: f64,
    pub omega: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            centers: crate::DEFAULT_CENTERS,
            radius: crate::DEFAULT_RADIUS,
            omega: crate::DEFAULT_OMEGA,
            kappa_min: crate::DEFAULT_KAPPA_MIN,
            kappa_max: crate::DEFAULT_KAPPA_MAX,
        }
    }
}

/// Mean MLP output over balls for each branch, both in `(0, 1)`.
pub fn pooled_head(out: &AttentionOutput, weights: &PredictorWeights) -> (f64, f64) {
    let mean = |tokens: &[Token], mlp: &MlpHead| {
        tokens.iter().map(|t| mlp.forward(t)).sum::<f64>() / tokens.len() as f64
    };
    (
        mean(&out.mu_h, &weights.h.mlp),
        mean(&out.mu_w, &weights.w.mlp),
    )
}

/// Predicts ray coefficients for one view plane of a normalized cloud.
///
/// When `mutation` is given, each pooled coefficient is passed once through
/// the bounded Gaussian mutation using that stream.
pub fn predict_kappa(
    cloud: &PointCloud,
    plane: &ViewPlane,
    weights: &PredictorWeights,
    cfg: &PredictorConfig,
    mutation: Option<&mut RngStream>,
) -> Result<RayParams> {
    let subset = partition_view(cloud, plane);
    if subset.len() < cfg.centers {
        return Err(Error::invalid(format!(
            "plane {} has {} points, fewer than the {} sampling centers",
            plane.id,
            subset.len(),
            cfg.centers
        )));
    }
    let centers = farthest_point_sample(cloud, &subset, cfg.centers)?;
    let balls = ball_aggregate(cloud, &subset, &centers, cfg.radius)?;
    let embedded = attention_embed(&balls, weights, cfg.omega)?;
    let (sh, sw) = pooled_head(&embedded, weights);
    let span = cfg.kappa_max - cfg.kappa_min;
    let mut kh = cfg.kappa_min + sh * span;
    let mut kw = cfg.kappa_min + sw * span;
    if let Some(rng) = mutation {
        let mcfg = MutationConfig {
            kappa_min: cfg.kappa_min,
            kappa_max: cfg.kappa_max,
            seed: 0,
        };
        kh = mutate(kh, &mcfg, rng);
        kw = mutate(kw, &mcfg, rng);
    }
    RayParams::new(kh, kw, cfg.kappa_min, cfg.kappa_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{normalize_cloud, Axis, Point, Side};
    use proptest::prelude::*;

    fn ball(theta: [f64; 3]) -> BallSummary {
        BallSummary {
            center_index: 0,
            member_count: 1,
            theta,
            theta_xy: [theta[0], theta[1]],
            theta_xz: [theta[0], theta[2]],
        }
    }

    fn grid_cloud() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..4 {
                    let p = [i as f64, j as f64 * 0.7, k as f64 * 1.3 + 0.1 * i as f64];
                    pts.push(Point::new(p, [0.5; 3], Some(k)));
                }
            }
        }
        normalize_cloud(&PointCloud::new(pts)).unwrap()
    }

    #[test]
    fn omega_one_ignores_cross_branch() {
        let mut w = PredictorWeights::random(5, 1.0);
        let balls = [
            ball([0.1, 0.2, -0.3]),
            ball([0.4, -0.1, 0.2]),
            ball([-0.2, 0.3, 0.0]),
        ];
        let a = attention_embed(&balls, &w, 1.0).unwrap();
        w.h.cross_attn = PredictorWeights::random(9, 3.0).h.cross_attn;
        w.w.cross_attn = PredictorWeights::random(10, 3.0).w.cross_attn;
        let b = attention_embed(&balls, &w, 1.0).unwrap();
        assert_eq!(a, b);
        let xz: Vec<Token> = balls.iter().map(|b| b.theta_xz).collect();
        let sa = scaled_dot_product_attention(&xz, &xz, &w.h.self_attn).unwrap();
        assert_eq!(a.mu_h, sa.outputs);
    }

    #[test]
    fn single_ball_is_value_blend() {
        let w = PredictorWeights::random(11, 1.0);
        let theta = [0.3, -0.2, 0.1];
        let omega = 0.8;
        let out = attention_embed(&[ball(theta)], &w, omega).unwrap();
        let xz = [theta[0], theta[2]];
        let xy = [theta[0], theta[1]];
        let expect_h = blend(
            omega,
            &[apply(&w.h.self_attn.value, &xz)],
            &[apply(&w.h.cross_attn.value, &xy)],
        );
        let expect_w = blend(
            omega,
            &[apply(&w.w.self_attn.value, &xy)],
            &[apply(&w.w.cross_attn.value, &xz)],
        );
        for (a, b) in out
            .mu_h
            .iter()
            .chain(&out.mu_w)
            .zip(expect_h.iter().chain(&expect_w))
        {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_attention_averages_slices() {
        let identity = AttentionParams {
            query: [[0.0; 2]; 2],
            key: [[0.0; 2]; 2],
            value: AttentionParams::IDENTITY,
        };
        let mut w = PredictorWeights::zeros();
        for b in [&mut w.h, &mut w.w] {
            b.self_attn = identity;
            b.cross_attn = identity;
        }
        let balls = [ball([0.1, 0.2, 0.3]), ball([-0.3, 0.4, -0.1])];
        let out = attention_embed(&balls, &w, 0.5).unwrap();
        let mean_xz = [(0.1 - 0.3) / 2.0, (0.3 - 0.1) / 2.0];
        let mean_xy = [(0.1 - 0.3) / 2.0, (0.2 + 0.4) / 2.0];
        for mu in out.mu_h.iter().chain(&out.mu_w) {
            for d in 0..2 {
                assert!((mu[d] - (0.5 * mean_xz[d] + 0.5 * mean_xy[d])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn attention_rejects_bad_inputs() {
        let w = PredictorWeights::zeros();
        assert!(attention_embed(&[], &w, 0.5).is_err());
        assert!(attention_embed(&[ball([0.0; 3])], &w, 1.5).is_err());
    }

    #[test]
    fn zero_weights_predict_straight_rays() {
        let cloud = grid_cloud();
        let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
        let k = predict_kappa(
            &cloud,
            &plane,
            &PredictorWeights::zeros(),
            &PredictorConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!((k.kappa_h(), k.kappa_w()), (0.0, 0.0));
    }

    #[test]
    fn mutation_is_seeded_and_bounded() {
        let cloud = grid_cloud();
        let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
        let w = PredictorWeights::random(1, 2.0);
        let cfg = PredictorConfig::default();
        let run = |seed| {
            predict_kappa(&cloud, &plane, &w, &cfg, Some(&mut RngStream::new(seed))).unwrap()
        };
        assert_eq!(run(7), run(7));
        for seed in 0..50 {
            let k = run(seed);
            assert!((-5.0..=5.0).contains(&k.kappa_h()) && (-5.0..=5.0).contains(&k.kappa_w()));
        }
        let plain = predict_kappa(&cloud, &plane, &w, &cfg, None).unwrap();
        assert_eq!(
            plain,
            predict_kappa(&cloud, &plane, &w, &cfg, None).unwrap()
        );
    }

    #[test]
    fn too_few_points_is_an_error() {
        let cloud = grid_cloud();
        let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
        let cfg = PredictorConfig {
            centers: 10_000,
            ..PredictorConfig::default()
        };
        assert!(matches!(
            predict_kappa(&cloud, &plane, &PredictorWeights::zeros(), &cfg, None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn weight_file_round_trip_and_errors() {
        let w = PredictorWeights::random(3, 1.0);
        assert_eq!(PredictorWeights::from_json(&w.to_json()).unwrap(), w);

        let mut v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        v["w.mlp.0.weight"]["shape"] = serde_json::json!([2, 9]);
        match PredictorWeights::from_json(&v.to_string()) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "w.mlp.0.weight"),
            other => panic!("expected config error, got {other:?}"),
        }

        let mut v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("h.cross_attn.key");
        match PredictorWeights::from_json(&v.to_string()) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "h.cross_attn.key"),
            other => panic!("expected config error, got {other:?}"),
        }

        let mut v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        v["h.mlp.1.bias"]["data"] = serde_json::json!([0.0, 1.0]);
        assert!(matches!(
            PredictorWeights::from_json(&v.to_string()),
            Err(Error::Config { .. })
        ));

        let mut v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        v["extra"] = serde_json::json!({"shape": [1], "data": [0.0]});
        assert!(matches!(
            PredictorWeights::from_json(&v.to_string()),
            Err(Error::Config { .. })
        ));
    }

    fn arb_balls() -> impl Strategy<Value = Vec<BallSummary>> {
        prop::collection::vec(prop::array::uniform3(-0.5f64..0.5), 1..12)
            .prop_map(|v| v.into_iter().map(ball).collect())
    }

    proptest! {
        #[test]
        fn attention_rows_are_stochastic(balls in arb_balls(), seed in any::<u64>()) {
            let w = PredictorWeights::random(seed, 4.0);
            let xz: Vec<Token> = balls.iter().map(|b| b.theta_xz).collect();
            let xy: Vec<Token> = balls.iter().map(|b| b.theta_xy).collect();
            for params in [&w.h.self_attn, &w.h.cross_attn] {
                let a = scaled_dot_product_attention(&xz, &xy, params).unwrap();
                for row in &a.weights {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn ball_order_does_not_change_pooled_head(balls in arb_balls(), seed in any::<u64>(), rot in 0usize..12) {
            let w = PredictorWeights::random(seed, 2.0);
            let mut perm = balls.clone();
            let r = rot % perm.len();
            perm.rotate_left(r);
            let a = attention_embed(&balls, &w, 0.8).unwrap();
            let b = attention_embed(&perm, &w, 0.8).unwrap();
            let mut shifted = a.mu_h.clone();
            shifted.rotate_left(r);
            for (x, y) in shifted.iter().zip(&b.mu_h) {
                prop_assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
            }
            let (ph, pw) = pooled_head(&a, &w);
            let (qh, qw) = pooled_head(&b, &w);
            prop_assert!((ph - qh).abs() < 1e-12 && (pw - qw).abs() < 1e-12);
        }
    }
}

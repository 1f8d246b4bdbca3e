//! Contrastive view generation.
//!
//! View 1 builds hyperedge features from a prompt: the member mean is
//! multiplied elementwise by an MLP applied to the similarity-reweighted
//! member mean. View 2 is a softmax-attention weighted member average. Both
//! views then get inverted feature dropout and a normalized degree column.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::ops::{cosine, elu, elu_derivative, glorot_uniform, softmax};

/// One hidden layer of width `r` with ELU, linear output of width `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptMlp {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
}

impl PromptMlp {
    pub fn glorot<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            w1: glorot_uniform(dim, dim, rng),
            b1: Array1::zeros(dim),
            w2: glorot_uniform(dim, dim, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.w2.ncols()
    }

    pub fn forward(&self, input: ArrayView1<'_, f64>) -> Array1<f64> {
        let hidden = (input.dot(&self.w1) + &self.b1).mapv(elu);
        hidden.dot(&self.w2)
    }
}

/// Affine scorer `x ↦ x·w + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionScorer {
    pub weight: Array1<f64>,
    pub bias: f64,
}

impl AttentionScorer {
    pub fn glorot<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            weight: glorot_uniform(dim, 1, rng).column(0).to_owned(),
            bias: 0.0,
        }
    }

    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        x.dot(&self.weight) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationParams {
    pub prompt: PromptMlp,
    pub scorer: AttentionScorer,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl AugmentationParams {
    pub fn glorot<R: Rng + ?Sized>(
        dim: usize,
        dropout_rate: f64,
        seed: u64,
        rng: &mut R,
    ) -> Result<Self> {
        let params = Self {
            prompt: PromptMlp::glorot(dim, rng),
            scorer: AttentionScorer::glorot(dim, rng),
            dropout_rate,
            seed,
        };
        params.validate(dim)?;
        Ok(params)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        let p = &self.prompt;
        if p.w1.dim() != (dim, dim) || p.b1.len() != dim || p.w2.dim() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "prompt MLP must map {dim} -> {dim} -> {dim}"
            )));
        }
        if self.scorer.weight.len() != dim {
            return Err(Error::Dimension(format!(
                "attention scorer expects input dim {dim}, has {}",
                self.scorer.weight.len()
            )));
        }
        Ok(())
    }
}

/// 0/1 keep-masks over the `(N+M) × r` feature block of each view.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub view1: Array2<f64>,
    pub view2: Array2<f64>,
    pub rate: f64,
}

impl DropoutMasks {
    pub fn none(rows: usize, dim: usize) -> Self {
        Self {
            view1: Array2::ones((rows, dim)),
            view2: Array2::ones((rows, dim)),
            rate: 0.0,
        }
    }

    /// Independent Bernoulli masks; each coordinate is dropped with probability `rate`.
    pub fn sample<R: Rng + ?Sized>(rows: usize, dim: usize, rate: f64, rng: &mut R) -> Self {
        if rate == 0.0 {
            return Self::none(rows, dim);
        }
        let mut draw = || {
            Array2::from_shape_simple_fn((rows, dim), || {
                if rng.random::<f64>() < rate {
                    0.0
                } else {
                    1.0
                }
            })
        };
        let view1 = draw();
        let view2 = draw();
        Self { view1, view2, rate }
    }

    /// Survivor scale of inverted dropout.
    pub fn scale(&self) -> f64 {
        1.0 / (1.0 - self.rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair {
    pub x1: Array2<f64>,
    pub x2: Array2<f64>,
    pub masks: DropoutMasks,
}

/// Parameter-free quantities derived once per hypergraph.
#[derive(Debug, Clone)]
pub struct AugmentationContext {
    pub features: Array2<f64>,
    pub hyperedges: Vec<Vec<usize>>,
    /// Member means `h_{e,raw}`, `M × r`.
    pub raw: Array2<f64>,
    /// Similarity-reweighted member means fed to the prompt MLP, `M × r`.
    pub prompt_inputs: Array2<f64>,
    /// Normalized degree of every entity, length `N+M`.
    pub degree_column: Array1<f64>,
}

impl AugmentationContext {
    pub fn new(hg: &Hypergraph) -> Result<Self> {
        let features = hg.require_features()?.clone();
        let m = hg.num_hyperedges();
        let r = features.ncols();
        let mut raw = Array2::zeros((m, r));
        let mut prompt_inputs = Array2::zeros((m, r));
        for e in 0..m {
            raw.row_mut(e).assign(&raw_hyperedge_feature(hg, e)?);
            prompt_inputs.row_mut(e).assign(&prompt_input(hg, e)?);
        }
        Ok(Self {
            features,
            hyperedges: hg.hyperedges().to_vec(),
            raw,
            prompt_inputs,
            degree_column: normalized_degrees(hg),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

fn member_rows(hg: &Hypergraph, e: usize) -> Result<(ArrayView2<'_, f64>, &[usize])> {
    let x = hg.require_features()?;
    Ok((x.view(), hg.hyperedge(e)))
}

/// `h_{e,raw}`: arithmetic mean of the member feature rows.
pub fn raw_hyperedge_feature(hg: &Hypergraph, e: usize) -> Result<Array1<f64>> {
    let (x, members) = member_rows(hg, e)?;
    Ok(mean_rows(x, members))
}

fn mean_rows(x: ArrayView2<'_, f64>, members: &[usize]) -> Array1<f64> {
    let mut acc = Array1::zeros(x.ncols());
    for &v in members {
        acc += &x.row(v);
    }
    acc / members.len() as f64
}

/// `(1/|e|) Σ cos(x_i, h_{e,raw}) · x_i`, the prompt MLP input.
pub fn prompt_input(hg: &Hypergraph, e: usize) -> Result<Array1<f64>> {
    let (x, members) = member_rows(hg, e)?;
    let raw = mean_rows(x, members);
    let mut acc = Array1::zeros(x.ncols());
    for &v in members {
        let row = x.row(v);
        acc.scaled_add(cosine(row, raw.view()), &row);
    }
    Ok(acc / members.len() as f64)
}

/// Prompt vector `p_e`.
pub fn prompt_vector(hg: &Hypergraph, e: usize, params: &AugmentationParams) -> Result<Array1<f64>> {
    Ok(params.prompt.forward(prompt_input(hg, e)?.view()))
}

/// View-1 hyperedge feature `h_{e,raw} ⊙ p_e`.
pub fn view1_hyperedge(hg: &Hypergraph, e: usize, params: &AugmentationParams) -> Result<Array1<f64>> {
    Ok(raw_hyperedge_feature(hg, e)? * prompt_vector(hg, e, params)?)
}

/// Softmax over member scores; aligned with `hg.hyperedge(e)`.
pub fn attention_weights(hg: &Hypergraph, e: usize, params: &AugmentationParams) -> Result<Vec<f64>> {
    let (x, members) = member_rows(hg, e)?;
    let scores: Vec<f64> = members.iter().map(|&v| params.scorer.score(x.row(v))).collect();
    Ok(softmax(&scores))
}

/// View-2 hyperedge feature: attention-weighted member sum.
pub fn view2_hyperedge(hg: &Hypergraph, e: usize, params: &AugmentationParams) -> Result<Array1<f64>> {
    let (x, members) = member_rows(hg, e)?;
    let alpha = attention_weights(hg, e, params)?;
    let mut acc = Array1::zeros(x.ncols());
    for (&v, &a) in members.iter().zip(&alpha) {
        acc.scaled_add(a, &x.row(v));
    }
    Ok(acc)
}

/// Min-max normalized degrees, computed separately for the node block and the
/// hyperedge block. A block whose degrees are all equal maps to 0.
pub fn normalized_degrees(hg: &Hypergraph) -> Array1<f64> {
    let (node, edge) = hg.degrees();
    let mut out = Vec::with_capacity(node.len() + edge.len());
    out.extend(min_max(&node));
    out.extend(min_max(&edge));
    Array1::from(out)
}

fn min_max(degrees: &[usize]) -> Vec<f64> {
    let lo = degrees.iter().copied().min().unwrap_or(0);
    let hi = degrees.iter().copied().max().unwrap_or(0);
    if hi == lo {
        return vec![0.0; degrees.len()];
    }
    let span = (hi - lo) as f64;
    degrees.iter().map(|&d| (d - lo) as f64 / span).collect()
}

/// Intermediate values of the batched hyperedge-view forward pass.
#[derive(Debug, Clone)]
pub struct HyperedgeViewCache {
    pub hidden_pre: Array2<f64>,
    pub hidden: Array2<f64>,
    pub prompts: Array2<f64>,
    /// Attention weights per hyperedge, aligned with member order.
    pub attention: Vec<Vec<f64>>,
    pub view1: Array2<f64>,
    pub view2: Array2<f64>,
}

/// Gradients of the augmentation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub scorer_weight: Array1<f64>,
    pub scorer_bias: f64,
}

/// Computes `h_{e,1}` and `h_{e,2}` for every hyperedge at once.
pub fn hyperedge_views(ctx: &AugmentationContext, params: &AugmentationParams) -> HyperedgeViewCache {
    let mlp = &params.prompt;
    let hidden_pre = ctx.prompt_inputs.dot(&mlp.w1) + &mlp.b1;
    let hidden = hidden_pre.mapv(elu);
    let prompts = hidden.dot(&mlp.w2);
    let view1 = &ctx.raw * &prompts;

    let scores: Array1<f64> = ctx.features.dot(&params.scorer.weight) + params.scorer.bias;
    let mut view2 = Array2::zeros((ctx.num_hyperedges(), ctx.dim()));
    let mut attention = Vec::with_capacity(ctx.num_hyperedges());
    for (e, members) in ctx.hyperedges.iter().enumerate() {
        let s: Vec<f64> = members.iter().map(|&v| scores[v]).collect();
        let alpha = softmax(&s);
        let mut row = view2.row_mut(e);
        for (&v, &a) in members.iter().zip(&alpha) {
            row.scaled_add(a, &ctx.features.row(v));
        }
        attention.push(alpha);
    }

    HyperedgeViewCache {
        hidden_pre,
        hidden,
        prompts,
        attention,
        view1,
        view2,
    }
}

/// Back-propagates gradients w.r.t. `h_{e,1}` / `h_{e,2}` (both `M × r`).
pub fn hyperedge_views_backward(
    ctx: &AugmentationContext,
    params: &AugmentationParams,
    cache: &HyperedgeViewCache,
    grad_view1: ArrayView2<'_, f64>,
    grad_view2: ArrayView2<'_, f64>,
) -> AugmentationGrads {
    let mlp = &params.prompt;
    let grad_prompts = &grad_view1 * &ctx.raw;
    let w2 = cache.hidden.t().dot(&grad_prompts);
    let grad_hidden = grad_prompts.dot(&mlp.w2.t());
    let grad_pre = grad_hidden * &cache.hidden_pre.mapv(elu_derivative);
    let w1 = ctx.prompt_inputs.t().dot(&grad_pre);
    let b1 = grad_pre.sum_axis(Axis(0));

    let mut scorer_weight = Array1::zeros(ctx.dim());
    let mut scorer_bias = 0.0;
    for (e, members) in ctx.hyperedges.iter().enumerate() {
        let alpha = &cache.attention[e];
        let g = grad_view2.row(e);
        let grad_alpha: Vec<f64> = members.iter().map(|&v| g.dot(&ctx.features.row(v))).collect();
        let mean: f64 = alpha.iter().zip(&grad_alpha).map(|(a, ga)| a * ga).sum();
        for ((&v, &a), &ga) in members.iter().zip(alpha).zip(&grad_alpha) {
            let grad_score = a * (ga - mean);
            scorer_weight.scaled_add(grad_score, &ctx.features.row(v));
            scorer_bias += grad_score;
        }
    }

    AugmentationGrads {
        w1,
        b1,
        w2,
        scorer_weight,
        scorer_bias,
    }
}

/// Stacks node rows over hyperedge rows, applies an inverted-dropout mask to
/// the feature block and appends the degree column (never dropped).
pub fn assemble_view(
    nodes: ArrayView2<'_, f64>,
    hyperedges: ArrayView2<'_, f64>,
    mask: ArrayView2<'_, f64>,
    scale: f64,
    degree_column: &Array1<f64>,
) -> Array2<f64> {
    let n = nodes.nrows();
    let rows = n + hyperedges.nrows();
    let r = nodes.ncols();
    let mut out = Array2::zeros((rows, r + 1));
    out.slice_mut(s![..n, ..r]).assign(&nodes);
    out.slice_mut(s![n.., ..r]).assign(&hyperedges);
    {
        let mut block = out.slice_mut(s![.., ..r]);
        block *= &mask;
        block *= scale;
    }
    out.column_mut(r).assign(degree_column);
    out
}

/// Both layer-0 inputs from already computed hyperedge views.
pub fn views_from_cache(
    ctx: &AugmentationContext,
    cache: &HyperedgeViewCache,
    masks: DropoutMasks,
) -> ViewPair {
    let scale = masks.scale();
    let x1 = assemble_view(
        ctx.features.view(),
        cache.view1.view(),
        masks.view1.view(),
        scale,
        &ctx.degree_column,
    );
    let x2 = assemble_view(
        ctx.features.view(),
        cache.view2.view(),
        masks.view2.view(),
        scale,
        &ctx.degree_column,
    );
    ViewPair { x1, x2, masks }
}

/// Builds both views with dropout masks drawn from `params.seed`.
pub fn build_views(hg: &Hypergraph, params: &AugmentationParams) -> Result<ViewPair> {
    let ctx = AugmentationContext::new(hg)?;
    params.validate(ctx.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let masks = DropoutMasks::sample(hg.num_entities(), ctx.dim(), params.dropout_rate, &mut rng);
    let cache = hyperedge_views(&ctx, params);
    Ok(views_from_cache(&ctx, &cache, masks))
}

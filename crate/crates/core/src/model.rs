//! The full differentiable pipeline: hyperedge views → two-view encoder →
//! total loss, with hand-written reverse-mode gradients for every trainable
//! block.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augmentation::{
    hyperedge_views, hyperedge_views_backward, views_from_cache, AugmentationContext,
    AugmentationGrads, AugmentationParams, DropoutMasks, ViewPair,
};
use crate::bipartite::BipartiteExpansion;
use crate::encoder::{backward_view, forward_view, Embeddings, EncoderParams, Filter};
use crate::error::Result;
use crate::hypergraph::Hypergraph;
use crate::objectives::{total_loss_with_grad, LossReport, LossWeights};
use crate::ops::Activation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HonorModel {
    pub augmentation: AugmentationParams,
    pub encoder: EncoderParams,
}

/// Shape of a freshly initialized model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub gammas: Vec<f64>,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub untie_views: bool,
    pub filter: Filter,
    pub seed: u64,
}

impl HonorModel {
    /// Glorot initialization; augmentation parameters are drawn first.
    pub fn init<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        let augmentation =
            AugmentationParams::glorot(spec.feature_dim, spec.dropout_rate, spec.seed, rng)?;
        let mut encoder = EncoderParams::glorot(
            spec.feature_dim + 1,
            spec.hidden_dim,
            &spec.gammas,
            spec.activation,
            spec.untie_views,
            rng,
        )?;
        encoder.filter = spec.filter;
        Ok(Self {
            augmentation,
            encoder,
        })
    }

    /// Named flat views of every trainable block, in a fixed order.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let a = &self.augmentation;
        let mut out: Vec<(String, &[f64])> = vec![
            ("prompt.w1".into(), slice(&a.prompt.w1)),
            ("prompt.b1".into(), a.prompt.b1.as_slice().expect("contiguous")),
            ("prompt.w2".into(), slice(&a.prompt.w2)),
            ("scorer.weight".into(), a.scorer.weight.as_slice().expect("contiguous")),
            ("scorer.bias".into(), std::slice::from_ref(&a.scorer.bias)),
        ];
        for (l, layer) in self.encoder.layers.iter().enumerate() {
            out.push((format!("encoder.w{l}"), slice(&layer.weight)));
        }
        if let Some(ws) = &self.encoder.view2_weights {
            for (l, w) in ws.iter().enumerate() {
                out.push((format!("encoder.view2.w{l}"), slice(w)));
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let a = &mut self.augmentation;
        let mut out: Vec<&mut [f64]> = vec![
            slice_mut(&mut a.prompt.w1),
            a.prompt.b1.as_slice_mut().expect("contiguous"),
            slice_mut(&mut a.prompt.w2),
            a.scorer.weight.as_slice_mut().expect("contiguous"),
            std::slice::from_mut(&mut a.scorer.bias),
        ];
        for layer in &mut self.encoder.layers {
            out.push(slice_mut(&mut layer.weight));
        }
        if let Some(ws) = &mut self.encoder.view2_weights {
            for w in ws {
                out.push(slice_mut(w));
            }
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are stored contiguously")
}

fn slice_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are stored contiguously")
}

/// Gradients laid out like [`HonorModel::blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub augmentation: AugmentationGrads,
    pub encoder: Vec<Array2<f64>>,
    pub encoder_view2: Option<Vec<Array2<f64>>>,
}

impl ModelGrads {
    pub fn blocks(&self) -> Vec<&[f64]> {
        let a = &self.augmentation;
        let mut out: Vec<&[f64]> = vec![
            slice(&a.w1),
            a.b1.as_slice().expect("contiguous"),
            slice(&a.w2),
            a.scorer_weight.as_slice().expect("contiguous"),
            std::slice::from_ref(&a.scorer_bias),
        ];
        out.extend(self.encoder.iter().map(slice));
        if let Some(ws) = &self.encoder_view2 {
            out.extend(ws.iter().map(slice));
        }
        out
    }
}

/// Everything about one hypergraph that stays fixed during training.
#[derive(Debug, Clone)]
pub struct TrainingContext {
    pub augmentation: AugmentationContext,
    pub expansion: BipartiteExpansion,
    pub memberships: Vec<(usize, usize)>,
    pub num_nodes: usize,
}

impl TrainingContext {
    pub fn new(hg: &Hypergraph) -> Result<Self> {
        Ok(Self {
            augmentation: AugmentationContext::new(hg)?,
            expansion: BipartiteExpansion::new(hg),
            memberships: hg.memberships(),
            num_nodes: hg.num_nodes(),
        })
    }

    pub fn num_entities(&self) -> usize {
        self.expansion.num_vertices()
    }

    pub fn feature_dim(&self) -> usize {
        self.augmentation.dim()
    }

    pub fn no_dropout(&self) -> DropoutMasks {
        DropoutMasks::none(self.num_entities(), self.feature_dim())
    }
}

/// Both views and their embeddings for given masks.
pub fn embed(
    model: &HonorModel,
    ctx: &TrainingContext,
    masks: DropoutMasks,
    lambda3: f64,
) -> Result<(ViewPair, Embeddings)> {
    let cache = hyperedge_views(&ctx.augmentation, &model.augmentation);
    let views = views_from_cache(&ctx.augmentation, &cache, masks);
    let z1 = forward_view(&views.x1, &ctx.expansion, &model.encoder, 1)?.output;
    let z2 = forward_view(&views.x2, &ctx.expansion, &model.encoder, 2)?.output;
    let emb = Embeddings::fuse(z1, z2, lambda3, ctx.num_nodes);
    Ok((views, emb))
}

/// Inference embeddings: dropout disabled.
pub fn infer(model: &HonorModel, ctx: &TrainingContext, lambda3: f64) -> Result<Embeddings> {
    Ok(embed(model, ctx, ctx.no_dropout(), lambda3)?.1)
}

pub fn loss(
    model: &HonorModel,
    ctx: &TrainingContext,
    masks: &DropoutMasks,
    weights: &LossWeights,
) -> Result<LossReport> {
    let (_, emb) = embed(model, ctx, masks.clone(), weights.lambda3)?;
    crate::objectives::total_loss(
        emb.z1.view(),
        emb.z2.view(),
        ctx.num_nodes,
        &ctx.memberships,
        weights,
    )
}

/// Loss and gradients of every trainable block for fixed dropout masks.
pub fn loss_and_grad(
    model: &HonorModel,
    ctx: &TrainingContext,
    masks: &DropoutMasks,
    weights: &LossWeights,
) -> Result<(LossReport, ModelGrads)> {
    let cache = hyperedge_views(&ctx.augmentation, &model.augmentation);
    let views = views_from_cache(&ctx.augmentation, &cache, masks.clone());
    let trace1 = forward_view(&views.x1, &ctx.expansion, &model.encoder, 1)?;
    let trace2 = forward_view(&views.x2, &ctx.expansion, &model.encoder, 2)?;

    let (report, g1, g2) = total_loss_with_grad(
        trace1.output.view(),
        trace2.output.view(),
        ctx.num_nodes,
        &ctx.memberships,
        weights,
    )?;

    let (mut enc1, gx1) = backward_view(&trace1, &ctx.expansion, &model.encoder, 1, g1);
    let (enc2, gx2) = backward_view(&trace2, &ctx.expansion, &model.encoder, 2, g2);
    let encoder_view2 = if model.encoder.view2_weights.is_some() {
        Some(enc2)
    } else {
        for (a, b) in enc1.iter_mut().zip(&enc2) {
            *a += b;
        }
        None
    };

    let n = ctx.num_nodes;
    let r = ctx.feature_dim();
    let scale = masks.scale();
    let edge_grad = |gx: &Array2<f64>, mask: &Array2<f64>| -> Array2<f64> {
        let mut g = gx.slice(s![n.., ..r]).to_owned();
        g *= &mask.slice(s![n.., ..]);
        g *= scale;
        g
    };
    let grad_view1 = edge_grad(&gx1, &masks.view1);
    let grad_view2 = edge_grad(&gx2, &masks.view2);
    let augmentation = hyperedge_views_backward(
        &ctx.augmentation,
        &model.augmentation,
        &cache,
        grad_view1.view(),
        grad_view2.view(),
    );

    Ok((
        report,
        ModelGrads {
            augmentation,
            encoder: enc1,
            encoder_view2,
        },
    ))
}

/// Per-hyperedge prompt weight `φ_e`: the mean entry of the prompt vector.
pub fn prompt_weights(model: &HonorModel, ctx: &TrainingContext) -> Array1<f64> {
    hyperedge_views(&ctx.augmentation, &model.augmentation)
        .prompts
        .mean_axis(ndarray::Axis(1))
        .unwrap_or_else(|| Array1::zeros(ctx.augmentation.num_hyperedges()))
}

/// Attention weights `α_{i,e}` aligned with [`Hypergraph::memberships`].
pub fn membership_attention(model: &HonorModel, ctx: &TrainingContext) -> Vec<f64> {
    hyperedge_views(&ctx.augmentation, &model.augmentation)
        .attention
        .into_iter()
        .flatten()
        .collect()
}

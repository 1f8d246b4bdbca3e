//! Bipartite message-passing encoder with the `(I − γL̂)` filter.
//!
//! Each layer transforms features first and then propagates:
//! `σ[(I − γL̂) · (X W)]`. Hidden layers use the configured activation; the
//! last layer is linear.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augmentation::ViewPair;
use crate::bipartite::BipartiteExpansion;
use crate::error::{Error, Result};
use crate::ops::{glorot_uniform, Activation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    /// `I − γL̂`.
    #[default]
    HighPass,
    /// `(I + Â) / 2`, a smoothing ablation that ignores γ.
    LowPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderLayer {
    pub weight: Array2<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layers: Vec<EncoderLayer>,
    /// Separate view-2 weights when the views are untied.
    pub view2_weights: Option<Vec<Array2<f64>>>,
    pub activation: Activation,
    pub filter: Filter,
}

impl EncoderParams {
    /// Glorot-initialized encoder `input_dim → hidden_dim → … → hidden_dim`.
    pub fn glorot<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_dim: usize,
        gammas: &[f64],
        activation: Activation,
        untied: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Config("encoder needs at least one layer".into()));
        }
        let dims: Vec<usize> = std::iter::once(input_dim)
            .chain(std::iter::repeat_n(hidden_dim, gammas.len()))
            .collect();
        let layers = gammas
            .iter()
            .enumerate()
            .map(|(l, &gamma)| EncoderLayer {
                weight: glorot_uniform(dims[l], dims[l + 1], rng),
                gamma,
            })
            .collect();
        let view2_weights = untied.then(|| {
            (0..gammas.len())
                .map(|l| glorot_uniform(dims[l], dims[l + 1], rng))
                .collect()
        });
        let params = Self {
            layers,
            view2_weights,
            activation,
            filter: Filter::HighPass,
        };
        params.validate(input_dim)?;
        Ok(params)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.ncols())
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        let mut d = input_dim;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weight.nrows() != d {
                return Err(Error::Dimension(format!(
                    "layer {l} expects input dim {}, receives {d}",
                    layer.weight.nrows()
                )));
            }
            if !(0.0..=1.0).contains(&layer.gamma) {
                return Err(Error::Config(format!(
                    "gamma must lie in [0, 1], layer {l} has {}",
                    layer.gamma
                )));
            }
            d = layer.weight.ncols();
        }
        if let Some(w2) = &self.view2_weights {
            if w2.len() != self.layers.len()
                || w2.iter().zip(&self.layers).any(|(a, b)| a.dim() != b.weight.dim())
            {
                return Err(Error::Dimension("untied view-2 weights must mirror view 1".into()));
            }
        }
        Ok(())
    }

    /// Weights applied to view `k` (1 or 2).
    pub fn weights_for_view(&self, view: usize) -> Vec<&Array2<f64>> {
        match (&self.view2_weights, view) {
            (Some(w2), 2) => w2.iter().collect(),
            _ => self.layers.iter().map(|l| &l.weight).collect(),
        }
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            Activation::Identity
        } else {
            self.activation
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub z1: Array2<f64>,
    pub z2: Array2<f64>,
    /// `z1 + λ₃ z2`.
    pub z: Array2<f64>,
    pub lambda3: f64,
    pub num_nodes: usize,
}

impl Embeddings {
    pub fn fuse(z1: Array2<f64>, z2: Array2<f64>, lambda3: f64, num_nodes: usize) -> Self {
        let mut z = z2.clone();
        z *= lambda3;
        z += &z1;
        Self {
            z1,
            z2,
            z,
            lambda3,
            num_nodes,
        }
    }

    pub fn nodes(&self) -> ArrayView2<'_, f64> {
        self.z.slice(ndarray::s![..self.num_nodes, ..])
    }

    pub fn hyperedges(&self) -> ArrayView2<'_, f64> {
        self.z.slice(ndarray::s![self.num_nodes.., ..])
    }
}

fn apply_filter(
    expansion: &BipartiteExpansion,
    filter: Filter,
    x: ArrayView2<'_, f64>,
    gamma: f64,
) -> Array2<f64> {
    match filter {
        Filter::HighPass => expansion.highpass(x, gamma),
        Filter::LowPass => expansion.highpass(x, 0.5),
    }
}

/// One layer: `σ[(I − γL̂) · (X W)]`.
pub fn highpass_layer(
    x_in: ArrayView2<'_, f64>,
    weight: ArrayView2<'_, f64>,
    gamma: f64,
    expansion: &BipartiteExpansion,
    activation: Activation,
) -> Result<Array2<f64>> {
    check_layer_shapes(x_in, weight, expansion)?;
    let transformed = x_in.dot(&weight);
    Ok(activation.apply_all(&expansion.highpass(transformed.view(), gamma)))
}

fn check_layer_shapes(
    x_in: ArrayView2<'_, f64>,
    weight: ArrayView2<'_, f64>,
    expansion: &BipartiteExpansion,
) -> Result<()> {
    if x_in.ncols() != weight.nrows() {
        return Err(Error::Dimension(format!(
            "input has {} columns, weight has {} rows",
            x_in.ncols(),
            weight.nrows()
        )));
    }
    if x_in.nrows() != expansion.num_vertices() {
        return Err(Error::Dimension(format!(
            "input has {} rows, expansion has {} vertices",
            x_in.nrows(),
            expansion.num_vertices()
        )));
    }
    Ok(())
}

/// Per-layer values kept for the backward pass of one view.
#[derive(Debug, Clone)]
pub struct ViewTrace {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

pub fn forward_view(
    x: &Array2<f64>,
    expansion: &BipartiteExpansion,
    params: &EncoderParams,
    view: usize,
) -> Result<ViewTrace> {
    let weights = params.weights_for_view(view);
    let mut inputs = Vec::with_capacity(weights.len());
    let mut pre_activations = Vec::with_capacity(weights.len());
    let mut current = x.clone();
    for (l, (w, layer)) in weights.iter().zip(&params.layers).enumerate() {
        check_layer_shapes(current.view(), w.view(), expansion)?;
        let transformed = current.dot(*w);
        let pre = apply_filter(expansion, params.filter, transformed.view(), layer.gamma);
        let out = params.activation_for(l).apply_all(&pre);
        inputs.push(std::mem::replace(&mut current, out));
        pre_activations.push(pre);
    }
    Ok(ViewTrace {
        inputs,
        pre_activations,
        output: current,
    })
}

/// Per-layer weight gradients and the input gradient of one view, given
/// `∂L/∂output`.
pub fn backward_view(
    trace: &ViewTrace,
    expansion: &BipartiteExpansion,
    params: &EncoderParams,
    view: usize,
    grad_output: Array2<f64>,
) -> (Vec<Array2<f64>>, Array2<f64>) {
    let weights = params.weights_for_view(view);
    let mut grads = vec![Array2::zeros((0, 0)); weights.len()];
    let mut grad = grad_output;
    for l in (0..weights.len()).rev() {
        let act = params.activation_for(l);
        let grad_pre = if act == Activation::Identity {
            grad
        } else {
            grad * &trace.pre_activations[l].mapv(|v| act.derivative(v))
        };
        // The filter is symmetric, so its adjoint is itself.
        let grad_transformed =
            apply_filter(expansion, params.filter, grad_pre.view(), params.layers[l].gamma);
        grads[l] = trace.inputs[l].t().dot(&grad_transformed);
        grad = grad_transformed.dot(&weights[l].t());
    }
    (grads, grad)
}

/// Encodes both views (shared weights unless untied) and fuses them.
pub fn encode(
    views: &ViewPair,
    expansion: &BipartiteExpansion,
    params: &EncoderParams,
    lambda3: f64,
) -> Result<Embeddings> {
    let z1 = forward_view(&views.x1, expansion, params, 1)?.output;
    let z2 = forward_view(&views.x2, expansion, params, 2)?.output;
    Ok(Embeddings::fuse(z1, z2, lambda3, expansion.num_nodes()))
}

//! Full-batch Adam training and the finite-difference gradient harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::augmentation::DropoutMasks;
use crate::encoder::{Embeddings, Filter};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::model::{infer, loss, loss_and_grad, HonorModel, ModelSpec, TrainingContext};
use crate::objectives::{LossReport, LossWeights};
use crate::ops::Activation;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
}

/// Every knob of a training run. Unknown keys are rejected on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub gamma: Vec<f64>,
    pub dropout_rate: f64,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub activation: Activation,
    pub untie_views: bool,
    pub filter: Filter,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            seed: 0,
            optimizer: Optimizer::Adam,
            tau: 0.5,
            lambda1: 1e-4,
            lambda2: 1e-5,
            lambda3: 1.0,
            gamma: vec![0.5, 0.5],
            dropout_rate: 0.2,
            hidden_dim: 64,
            num_layers: 2,
            activation: Activation::Elu,
            untie_views: false,
            filter: Filter::HighPass,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.gamma.len() != self.num_layers {
            return Err(Error::Config(format!(
                "gamma has {} entries but num_layers is {}",
                self.gamma.len(),
                self.num_layers
            )));
        }
        if self.gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::Config("every gamma must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("dropout_rate must lie in [0, 1)".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            tau: self.tau,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
        }
    }

    pub fn model_spec(&self, feature_dim: usize) -> ModelSpec {
        ModelSpec {
            feature_dim,
            hidden_dim: self.hidden_dim,
            gammas: self.gamma.clone(),
            activation: self.activation,
            dropout_rate: self.dropout_rate,
            untie_views: self.untie_views,
            filter: self.filter,
            seed: self.seed,
        }
    }
}

/// Adam with L2 weight decay folded into the gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient block mismatch");
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        }
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step);
        let bias2 = 1.0 - self.beta2.powi(self.step);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            for i in 0..p.len() {
                let grad = g[i] + self.weight_decay * p[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * grad;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * grad * grad;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: HonorModel,
    /// Inference embeddings of the initial parameters.
    pub initial_embeddings: Embeddings,
    /// Inference embeddings (dropout off) after the last update.
    pub final_embeddings: Embeddings,
    pub loss_history: Vec<LossReport>,
    pub config: TrainConfig,
}

/// Deterministic given `config.seed`: one stream initializes parameters, a
/// second one draws the per-epoch dropout masks.
pub fn train(hg: &Hypergraph, config: &TrainConfig) -> Result<TrainedModel> {
    let ctx = TrainingContext::new(hg)?;
    train_with_context(&ctx, config)
}

pub fn train_with_context(ctx: &TrainingContext, config: &TrainConfig) -> Result<TrainedModel> {
    train_observed(ctx, config, |_, _| {})
}

/// Like [`train_with_context`], calling `observer(epoch, report)` after every
/// epoch's loss is computed.
pub fn train_observed(
    ctx: &TrainingContext,
    config: &TrainConfig,
    mut observer: impl FnMut(usize, &LossReport),
) -> Result<TrainedModel> {
    config.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mask_rng = ChaCha8Rng::seed_from_u64(config.seed);
    mask_rng.set_stream(1);

    let mut model = HonorModel::init(&config.model_spec(ctx.feature_dim()), &mut init_rng)?;
    let weights = config.loss_weights();
    let initial_embeddings = infer(&model, ctx, config.lambda3)?;

    let mut adam = Adam::new(config.learning_rate, config.weight_decay);
    let mut loss_history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let masks = DropoutMasks::sample(
            ctx.num_entities(),
            ctx.feature_dim(),
            config.dropout_rate,
            &mut mask_rng,
        );
        let (report, grads) = loss_and_grad(&model, ctx, &masks, &weights)?;
        if !report.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                value: report.total,
            });
        }
        observer(epoch, &report);
        loss_history.push(report);
        adam.step(model.blocks_mut(), grads.blocks());
    }

    let final_embeddings = infer(&model, ctx, config.lambda3)?;
    Ok(TrainedModel {
        model,
        initial_embeddings,
        final_embeddings,
        loss_history,
        config: config.clone(),
    })
}

/// Settings of the finite-difference check on a tiny fixed instance
/// (4 nodes, 3 hyperedges, 3 features).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub seed: u64,
    pub activation: Activation,
    pub hidden_dim: usize,
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub gamma: Vec<f64>,
    pub dropout_rate: f64,
    pub untie_views: bool,
    pub zero_features: bool,
    pub step: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            activation: Activation::Elu,
            hidden_dim: 4,
            tau: 0.5,
            lambda1: 0.5,
            lambda2: 0.01,
            lambda3: 0.7,
            gamma: vec![0.4, 0.8],
            dropout_rate: 0.25,
            untie_views: false,
            zero_features: false,
            step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockCheck {
    pub name: String,
    pub size: usize,
    /// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)`; 0 when both
    /// norms are below `1e-10`.
    pub relative_error: f64,
    pub max_abs_error: f64,
    pub analytic_norm: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub max_relative_error: f64,
    pub all_finite: bool,
    pub loss: f64,
}

/// The fixed tiny hypergraph used by [`gradient_check`].
pub fn gradcheck_hypergraph(seed: u64, zero_features: bool) -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = if zero_features {
        ndarray::Array2::zeros((4, 3))
    } else {
        ndarray::Array2::from_shape_simple_fn((4, 3), || StandardNormal.sample(&mut rng))
    };
    Hypergraph::new(
        4,
        vec![vec![0, 1, 2], vec![1, 3], vec![0, 2, 3]],
        Some(features),
        None,
    )
    .expect("fixed instance is valid")
}

/// Central differences against the analytic gradient of the total loss, with
/// dropout masks held fixed.
pub fn gradient_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    if config.hidden_dim == 0 || config.gamma.is_empty() {
        return Err(Error::Config("gradient check needs a non-empty encoder".into()));
    }
    let hg = gradcheck_hypergraph(config.seed, config.zero_features);
    let ctx = TrainingContext::new(&hg)?;
    let spec = ModelSpec {
        feature_dim: ctx.feature_dim(),
        hidden_dim: config.hidden_dim,
        gammas: config.gamma.clone(),
        activation: config.activation,
        dropout_rate: config.dropout_rate,
        untie_views: config.untie_views,
        filter: Filter::HighPass,
        seed: config.seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let model = HonorModel::init(&spec, &mut rng)?;
    let masks = DropoutMasks::sample(ctx.num_entities(), ctx.feature_dim(), config.dropout_rate, &mut rng);
    let weights = LossWeights {
        tau: config.tau,
        lambda1: config.lambda1,
        lambda2: config.lambda2,
        lambda3: config.lambda3,
    };

    let (report, grads) = loss_and_grad(&model, &ctx, &masks, &weights)?;
    let analytic: Vec<Vec<f64>> = grads.blocks().into_iter().map(<[f64]>::to_vec).collect();
    let names: Vec<String> = model.blocks().into_iter().map(|(n, _)| n).collect();

    let h = config.step;
    let mut blocks = Vec::with_capacity(names.len());
    for (k, name) in names.into_iter().enumerate() {
        let size = analytic[k].len();
        let mut numeric = vec![0.0; size];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let mut plus = model.clone();
            plus.blocks_mut()[k][i] += h;
            let mut minus = model.clone();
            minus.blocks_mut()[k][i] -= h;
            let fp = loss(&plus, &ctx, &masks, &weights)?.total;
            let fm = loss(&minus, &ctx, &masks, &weights)?.total;
            *slot = (fp - fm) / (2.0 * h);
        }
        blocks.push(compare(name, &analytic[k], &numeric));
    }

    let max_relative_error = blocks.iter().map(|b| b.relative_error).fold(0.0, f64::max);
    let all_finite = blocks.iter().all(|b| b.finite) && report.is_finite();
    Ok(GradCheckReport {
        blocks,
        max_relative_error,
        all_finite,
        loss: report.total,
    })
}

fn compare(name: String, analytic: &[f64], numeric: &[f64]) -> BlockCheck {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let a_norm = norm(&mut analytic.iter().copied());
    let n_norm = norm(&mut numeric.iter().copied());
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, b)| a - b));
    let scale = a_norm.max(n_norm);
    let relative_error = if scale < 1e-10 { 0.0 } else { diff / scale };
    let max_abs_error = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    BlockCheck {
        name,
        size: analytic.len(),
        relative_error,
        max_abs_error,
        analytic_norm: a_norm,
        finite: analytic.iter().chain(numeric).all(|v| v.is_finite()),
    }
}

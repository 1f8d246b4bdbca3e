//! Hypergraph representation learning for heterophilic data: label-mixing
//! metrics, learned hyperedge views, a high-pass bipartite encoder trained
//! with a two-view contrastive objective, frozen-embedding evaluation and a
//! stochastic block model lab.

pub mod artifacts;
pub mod augmentation;
pub mod bipartite;
pub mod datasets;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod heterophily;
pub mod hsbm;
pub mod hypergraph;
pub mod lab;
pub mod model;
pub mod objectives;
pub mod spectral;
pub mod ops;
pub mod trainer;

pub use bipartite::BipartiteExpansion;
pub use encoder::{Embeddings, EncoderParams, Filter};
pub use error::{Error, Result};
pub use heterophily::{heterophily_report, label_entropy, pairwise_ratio, HeterophilyReport, PairNormalizer};
pub use hypergraph::{load_hypergraph, EdgelistOptions, Hypergraph, InputFormat};
pub use model::{HonorModel, TrainingContext};
pub use objectives::{LossReport, LossWeights};
pub use ops::Activation;
pub use trainer::{
    gradient_check, train, train_observed, train_with_context, GradCheckConfig, GradCheckReport, TrainConfig, TrainedModel,
};

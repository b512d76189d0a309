//! Task-specific adaptation of frozen multimodal embeddings.
//!
//! Small ReLU projection heads are trained with a pairwise supervised
//! contrastive loss on top of precomputed embeddings, then compared against
//! the raw embeddings and PCA projections with several downstream
//! classifiers under stratified cross-validation.

pub mod config;
pub mod contrastive;
pub mod data;
pub mod error;
pub mod eval;
pub mod net;
pub mod pca;
pub mod pipeline;
pub mod rng;

pub use config::TrainConfig;
pub use contrastive::{
    adapt, adapt_with, build_pairs, contrastive_loss, pair_logit, train_head, Adapted, Pair, PairBatch, Schedule,
    TrainLog, TrainedHead,
};
pub use data::{
    concat_modalities, generate_synthetic, load_dataset, save_dataset, save_embeddings, EmbeddingMatrix, MultimodalDataset,
    Nonlinearity, SynthSpec,
};
pub use error::{Error, Result};
pub use net::{init_head, optimizer_step, Gradients, Network, OptimizerState, ProjectionHead};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use pipeline::{apply, fit_pca_pipeline, AdaptedPipeline, Mode, Projection};

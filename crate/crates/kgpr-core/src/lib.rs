//! Knowledge-graph triplet retrieval engine.
//!
//! The pipeline manufactures question/triplet training pairs directly from a
//! knowledge graph (masked triplet prompting plus neighbor/negative sampling),
//! pretrains a two-tower encoder with a two-margin ranking objective, and
//! serves top-K triplet retrieval over the trained index.
//!
//! Modules follow the pipeline stages:
//!
//! - [`kg`]: triplet store, TSV ingestion, adjacency index, sampling primitives
//! - [`augment`]: masked triplet prompting and training-set construction
//! - [`llm`]: optional chat-completion client for LLM-generated questions
//! - [`encoder`]: hashed-embedding mean-pool towers and checkpoints
//! - [`training`]: margin losses, analytic gradients, AdamW, epoch loop
//! - [`retrieval`]: triplet index, exhaustive top-K scoring, subgraph assembly
//! - [`eval`]: leakage-free splits, Recall@K / MRR / ordering statistics
//! - [`pipeline`]: one-seed end-to-end run producing a self-contained report

pub mod augment;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod hash;
pub mod kg;
pub mod llm;
pub mod pipeline;
pub mod retrieval;
pub mod rng;
pub mod training;

pub use augment::{
    build_dataset, mask_triplet, read_dataset, write_dataset, DatasetConfig, MaskSlot,
    MaskedTriplet, QuestionGenerator, SkipReport, SyntheticQuestion, TrainingExample,
};
pub use encoder::{
    cosine, encode, encode_question, encode_triplet, serialize_triplet, tokenize, Checkpoint,
    CheckpointMeta, Embedding, EncoderConfig, TowerParams,
};
pub use error::{Error, Result};
pub use eval::{evaluate, k_sweep, split_dataset, EvalReport, KSweepRow, OrderingStats};
pub use kg::{generate_synthetic_graph, KnowledgeGraph, Triplet, TripletId};
pub use retrieval::{
    assemble_subgraph, retrieve_topk, RetrievalResult, ScoredTriplet, TripletIndex,
};
pub use rng::RngState;
pub use training::{
    adamw_step, backward, example_gradients, margin_loss, total_loss, train, ExampleGrads,
    LossPoint, MarginConfig, OptimizerConfig, OptimizerState, SparseGrad, TrainConfig,
};

//! Time-indexed frames, state-space embeddings and library/prediction splits.

mod embedding;
mod frame;

pub use embedding::{
    build_delay_embedding, build_generalized_embedding, split_library_prediction, Coordinate,
    Embedding, EmbeddingSpec, TimeRange,
};
pub use frame::{format_value, Frame, TIME_COLUMN};

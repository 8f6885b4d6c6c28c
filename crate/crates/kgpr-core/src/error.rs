//! Crate-wide error type.

use crate::kg::TripletId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },

    #[error("graph is empty: no valid triplets")]
    EmptyGraph,

    #[error("triplet id {id} does not belong to this graph")]
    UnknownTriplet { id: TripletId },

    #[error(
        "infeasible synthetic graph: requested {requested} triplets but only {max} distinct \
         (head, relation, tail) combinations with head != tail exist"
    )]
    InfeasibleGraph { requested: u64, max: u64 },

    #[error("cannot encode text with no alphanumeric tokens")]
    EmptyTokens,

    #[error("degenerate embedding: norm {norm:e} is below {min:e}")]
    DegenerateEmbedding { norm: f64, min: f64 },

    #[error("question generation failed for triplet {triplet_id}: {message}")]
    Generator {
        triplet_id: TripletId,
        message: String,
    },

    #[error("{path}:{line}: dataset schema violation: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(
        "checkpoint fingerprint mismatch: index was built from {expected:#018x}, \
         queried with {actual:#018x}"
    )]
    FingerprintMismatch { expected: u64, actual: u64 },

    #[error("bad file format in {path}: {message}")]
    BadFormat { path: String, message: String },

    #[error("split would leave the {0} side empty")]
    EmptySplit(&'static str),

    #[error("example {index}: {source}")]
    AtExample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_example(index: usize, source: Error) -> Self {
        Error::AtExample {
            index,
            source: Box::new(source),
        }
    }
}

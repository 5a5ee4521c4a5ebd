//! Core building blocks for classifying the structure function of chapters
//! in academic articles: corpus handling, lexical and positional features,
//! classical classifiers, a linear-chain CRF, evaluation metrics and
//! corpus analytics.

pub mod analysis;
pub mod artifact;
pub mod classic;
pub mod corpus;
pub mod crf;
pub mod digest;
pub mod error;
pub mod features;
pub mod metrics;
pub mod pipeline;
pub mod split;
pub mod synth;

pub use corpus::{Article, Chapter, Label};
pub use error::{Error, ErrorKind, Result};

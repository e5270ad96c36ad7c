//! Graph-infused transformer language modeling.
//!
//! This crate implements a sentence-level language model that jointly
//! predicts tokens and a word-level dependency graph. The graph is built
//! incrementally while decoding; degree, distance and depth features are
//! extracted from the partial graph into per-token feature tapes and
//! injected into the attention keys of a Transformer-XL style network.
//! Inference marginalizes over candidate graphs with a beam, which yields
//! an exact lower bound on the sentence probability.
//!
//! Modules:
//! - [`graph`]: incremental word graph, feature extraction, tapes
//! - [`tensor`]: dense f64 tensors with reverse-mode autodiff and a
//!   finite-difference gradient checker
//! - [`model`]: the network (attention, word representations, biaffine
//!   edge scorer, dependency-count head)
//! - [`train`]: teacher-forced training loop and loss
//! - [`infer`]: beam search, marginal bounds, perplexity, generation,
//!   parsing, minimal-pair evaluation
//! - [`corpus`]: corpus format, tokenizer, vocabulary, toy grammar
//! - [`cli`]: the `gilt` command-line entry point
//!
//! The `parallel` feature (on by default) runs batch gradient
//! accumulation, beam scoring and corpus-wide evaluation on rayon;
//! without it every code path falls back to equivalent sequential loops
//! producing bit-identical results.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod infer;
pub mod model;
pub mod par;
pub mod tensor;
pub mod train;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

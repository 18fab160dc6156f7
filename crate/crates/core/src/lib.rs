//! Fine-grained domain relevance of terms.
//!
//! Core terms (with descriptions and categories) and fringe terms (bare
//! strings) are linked into a graph by retrieving core descriptions for every
//! term. Core terms are labeled automatically from a category tree, and a graph
//! convolutional model (CFL, or the hierarchical HiCFL) propagates relevance to
//! fringe terms. New terms can be attached and scored without retraining.
//!
//! ```no_run
//! use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
//! use termrel::pipeline::{prepare, Setup};
//!
//! let ds = generate_synthetic_dataset(&SyntheticSpec::default(), 1).unwrap();
//! let labels = ds.hierarchy.label(&ds.records).unwrap();
//! let prepared = prepare(&ds.records, &ds.vectors, &labels, &[], &Setup::default()).unwrap();
//! let (params, _log) = prepared.train().unwrap();
//! let scores = prepared.score_all(&params).unwrap();
//! ```

pub mod annotation;
pub mod benchmark;
mod codec;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod index;
pub mod model;
pub mod pipeline;
pub mod sparse;
pub mod text;

pub use error::{Error, Result};

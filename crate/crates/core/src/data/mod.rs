//! On-disk inputs: term inventories, word vectors, category trees, plus the
//! synthetic dataset generator used for tests and benchmarks.

mod records;
pub mod synthetic;
mod tree;
mod vectors;

pub use records::{load_term_records, parse_term_records, write_term_records, TermRecord};
pub use synthetic::{generate_synthetic_dataset, SyntheticDataset, SyntheticSpec};
pub use tree::{load_category_tree, CategoryTree};
pub use vectors::{load_word_vectors, write_word_vectors, WordVectorTable};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

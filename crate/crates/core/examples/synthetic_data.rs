//! Generate a planted three-level dataset and write it in the CLI's formats.
//!
//! `cargo run --example synthetic_data -- [out-dir]`

use termrel::data::synthetic::class_sizes;
use termrel::data::{generate_synthetic_dataset, SyntheticSpec};

fn main() -> termrel::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic-data".into());
    let spec = SyntheticSpec::default();
    let ds = generate_synthetic_dataset(&spec, 1)?;
    let cores = ds.records.iter().filter(|r| r.is_core).count();
    println!("{} terms, {cores} core", ds.records.len());
    for (class, n) in class_sizes(&ds, &spec) {
        println!("  {class:<4} {n}");
    }
    let sample = ds.records.iter().find(|r| r.is_core).expect("a core term");
    let preview: String = sample.description.chars().take(100).collect();
    println!("sample core `{}`: {preview}...", sample.surface);
    ds.write(&out)?;
    println!("wrote {out}/terms.tsv, docs/, vectors.txt, tree.tsv, hierarchy.tsv, truth.tsv");
    Ok(())
}

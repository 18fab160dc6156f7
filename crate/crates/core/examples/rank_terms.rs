//! Rank every term by relevance and print selected rank bands.
//!
//! `cargo run --release --example rank_terms -- 1-10,101-105`

use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::eval::{format_ranking, parse_bands, rank_report};
use termrel::model::TrainConfig;
use termrel::pipeline::{prepare, Setup};

fn main() -> termrel::Result<()> {
    let bands = parse_bands(&std::env::args().nth(1).unwrap_or_else(|| "1-10,101-105".into()))?;
    let spec = SyntheticSpec::with_levels(&[("cs", 200), ("ai", 80), ("ml", 30)]);
    let ds = generate_synthetic_dataset(&spec, 8)?;
    let labels = ds.hierarchy.label(&ds.records)?;
    let setup = Setup {
        train: TrainConfig {
            epochs: 60,
            learning_rate: 0.001,
            ..TrainConfig::default()
        },
        ..Setup::default()
    };
    let prepared = prepare(&ds.records, &ds.vectors, &labels, &[], &setup)?;
    let (params, _) = prepared.train()?;
    let scores = prepared.score_all(&params)?;
    let ranked = rank_report(scores.as_slice().expect("contiguous"), &prepared.records, &bands)?;
    print!("{}", format_ranking(&ranked));
    Ok(())
}

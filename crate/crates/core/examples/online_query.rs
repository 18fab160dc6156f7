//! Score terms that were not in the inventory at training time.
//!
//! `cargo run --release --example online_query -- "ml3 ml7" "bg2 w5"`

use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::model::TrainConfig;
use termrel::pipeline::{prepare, Setup};

fn main() -> termrel::Result<()> {
    let mut queries: Vec<String> = std::env::args().skip(1).collect();
    if queries.is_empty() {
        queries = vec!["ml3 ml7".into(), "ai1 ai4".into(), "cs2 cs9".into(), "bg2 bg5".into()];
    }
    let spec = SyntheticSpec::with_levels(&[("cs", 200), ("ai", 80), ("ml", 30)]);
    let ds = generate_synthetic_dataset(&spec, 6)?;
    let labels = ds.hierarchy.label(&ds.records)?;
    let setup = Setup {
        train: TrainConfig {
            epochs: 60,
            learning_rate: 0.001,
            ..TrainConfig::default()
        },
        ..Setup::default()
    };
    let mut prepared = prepare(&ds.records, &ds.vectors, &labels, &[], &setup)?;
    let (params, _) = prepared.train()?;

    for q in &queries {
        let known = prepared.records.len();
        let id = prepared.attach(q, &ds.vectors)?;
        let links = prepared.graph.in_degree(id);
        // Only the two-hop neighborhood is evaluated.
        let score = prepared.score_terms(&params, &[id])?[0];
        let state = if id < known { "known" } else { "attached" };
        println!("{q:<12} {state:<9} {links} links  score {score:.4}");
    }
    Ok(())
}

//! Save a trained model, reload it from its checkpoint, and check the scores.
//!
//! `cargo run --release --example checkpoint`

use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::model::{load_checkpoint, save_checkpoint, TrainConfig};
use termrel::pipeline::{load_inputs, prepare, restore, RunConfig, Setup};

fn main() -> termrel::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = SyntheticSpec::with_levels(&[("cs", 150), ("ai", 60), ("ml", 25)]);
    let ds = generate_synthetic_dataset(&spec, 3)?;
    ds.write(dir.path().join("data"))?;
    let labels = ds.hierarchy.label(&ds.records)?;
    labels.write(dir.path().join("labels.tsv"))?;

    let config = RunConfig {
        terms: dir.path().join("data/terms.tsv"),
        vectors: dir.path().join("data/vectors.txt"),
        labels: dir.path().join("labels.tsv"),
        positives: None,
        setup: Setup {
            train: TrainConfig {
                epochs: 20,
                ..TrainConfig::default()
            },
            ..Setup::default()
        },
    };
    let loaded = load_inputs(&config)?;
    let prepared = prepare(&loaded.records, &loaded.vectors, &loaded.labels, &[], &config.setup)?;
    let (params, _) = prepared.train()?;
    let before = prepared.score_all(&params)?;

    let path = dir.path().join("model.ckpt");
    save_checkpoint(&path, &prepared.checkpoint(params, &config, dir.path())?)?;
    println!("checkpoint: {} bytes", std::fs::metadata(&path).map_or(0, |m| m.len()));

    let run = restore(load_checkpoint(&path)?, dir.path())?;
    let after = run.prepared.score_all(&run.checkpoint.params)?;
    let worst = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("input hash {}", run.checkpoint.input_hash);
    println!("{} terms rescored, max difference {worst:e}", after.len());
    Ok(())
}

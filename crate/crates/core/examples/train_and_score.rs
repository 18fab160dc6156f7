//! Train CFL and HiCFL on auto-labeled core terms and score held-out terms.
//!
//! `cargo run --release --example train_and_score`

use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::eval::{pr_auc, roc_auc, MetricReport};
use termrel::model::TrainConfig;
use termrel::pipeline::{prepare, Mode, Setup};

fn main() -> termrel::Result<()> {
    let spec = SyntheticSpec::with_levels(&[("cs", 300), ("ai", 120), ("ml", 50)]);
    let ds = generate_synthetic_dataset(&spec, 4)?;
    let labels = ds.hierarchy.label(&ds.records)?;
    let truth = ds.truth.last().expect("levels");

    let mut report = MetricReport::default();
    for mode in [Mode::Cfl, Mode::HiCfl] {
        let setup = Setup {
            mode,
            train: TrainConfig {
                epochs: 60,
                learning_rate: 0.001,
                seed: 4,
                ..TrainConfig::default()
            },
            ..Setup::default()
        };
        let prepared = prepare(&ds.records, &ds.vectors, &labels, &[], &setup)?;
        let (params, log) = prepared.train()?;
        let scores = prepared.score_all(&params)?;
        // Held out: demoted test cores plus every fringe term.
        let ids = prepared.held_out_ids();
        let s: Vec<f64> = ids.iter().map(|&i| scores[i]).collect();
        let y: Vec<bool> = ids.iter().map(|&i| truth[i]).collect();
        let name = format!("{mode:?}").to_lowercase();
        report.insert(format!("{name}.best_epoch"), log.best_epoch as f64);
        report.insert(format!("{name}.roc_auc"), roc_auc(&s, &y)?);
        report.insert(format!("{name}.pr_auc"), pr_auc(&s, &y)?);
    }
    print!("{}", report.to_key_values());
    Ok(())
}

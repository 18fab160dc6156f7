//! Feature-only baselines against the graph model, plus relative domain frequency.
//!
//! `cargo run --release --example baselines`

use std::collections::HashMap;

use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::eval::{rdf_score, roc_auc, train_baseline, BaselineKind};
use termrel::model::TrainConfig;
use termrel::pipeline::{prepare, Mode, Setup};

fn main() -> termrel::Result<()> {
    let spec = SyntheticSpec::with_levels(&[("cs", 300), ("ai", 120), ("ml", 50)]);
    let ds = generate_synthetic_dataset(&spec, 5)?;
    let labels = ds.hierarchy.label(&ds.records)?;
    let truth = ds.truth.last().expect("levels");
    let train = TrainConfig {
        epochs: 60,
        learning_rate: 0.001,
        seed: 5,
        ..TrainConfig::default()
    };
    let setup = Setup {
        mode: Mode::Cfl,
        train: train.clone(),
        ..Setup::default()
    };
    let prepared = prepare(&ds.records, &ds.vectors, &labels, &[], &setup)?;
    let ids = prepared.held_out_ids();
    let y: Vec<bool> = ids.iter().map(|&i| truth[i]).collect();
    let auc = |scores: &[f64]| roc_auc(&ids.iter().map(|&i| scores[i]).collect::<Vec<_>>(), &y);

    let x = prepared.features.values.view();
    for kind in [BaselineKind::LogisticRegression, BaselineKind::Mlp] {
        let out = train_baseline(kind, &train, x, &prepared.supervision, &prepared.validation)?;
        println!("{:<4} ROC-AUC {:.4}", kind.name(), auc(out.scores.as_slice().expect("contiguous"))?);
    }
    let (params, _) = prepared.train()?;
    println!("cfl  ROC-AUC {:.4}", auc(prepared.score_all(&params)?.as_slice().expect("contiguous"))?);

    // Relative domain frequency needs corpus counts, which the graph models do not.
    let specific = HashMap::from([("kernel".to_string(), 30.0), ("bread".to_string(), 1.0)]);
    let general = HashMap::from([("kernel".to_string(), 40.0), ("bread".to_string(), 50.0)]);
    for (term, s) in rdf_score(&["kernel", "bread"], &specific, &general) {
        println!("rdf  {term:<6} {s:.3}");
    }
    Ok(())
}

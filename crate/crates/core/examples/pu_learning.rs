//! Learn a narrow domain from ten positives, with its parents auto-labeled.
//!
//! `cargo run --release --example pu_learning`

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::eval::{pr_auc, roc_auc};
use termrel::model::TrainConfig;
use termrel::pipeline::{prepare, Mode, Setup};

fn main() -> termrel::Result<()> {
    let spec = SyntheticSpec::with_levels(&[("cs", 300), ("ai", 120), ("ml", 50)]);
    let ds = generate_synthetic_dataset(&spec, 2)?;
    // Only cs and ai are labeled; ml is the target.
    let labels = ds.hierarchy.label(&ds.records)?.truncated(2);
    let mut pool = ds.deepest_core_positives();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let positives: Vec<String> = pool[..10].iter().map(|&i| ds.records[i].surface.clone()).collect();

    let setup = Setup {
        mode: Mode::Pu,
        holdout: false,
        train: TrainConfig {
            epochs: 100,
            learning_rate: 0.001,
            ..TrainConfig::default()
        },
        ..Setup::default()
    };
    let prepared = prepare(&ds.records, &ds.vectors, &labels, &positives, &setup)?;
    let pu = prepared.pu.as_ref().expect("PU mode");
    println!(
        "{} positives, {} reliable negatives, {} unlabeled core terms",
        pu.positives.len(),
        pu.reliable_negatives.len(),
        pu.unlabeled.len()
    );
    let (params, _) = prepared.train()?;
    let scores = prepared.score_all(&params)?;

    let truth = &ds.truth[2];
    let ids: Vec<usize> = (0..ds.records.len()).filter(|i| !pu.positives.contains(i)).collect();
    let s: Vec<f64> = ids.iter().map(|&i| scores[i]).collect();
    let y: Vec<bool> = ids.iter().map(|&i| truth[i]).collect();
    println!("hidden ml terms: ROC-AUC {:.3}, PR-AUC {:.3}", roc_auc(&s, &y)?, pr_auc(&s, &y)?);

    let mut order = ids.clone();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    println!("top unlabeled terms:");
    for &i in &order[..10] {
        let mark = if truth[i] { "ml" } else { "" };
        println!("  {:.3}  {:<20} {mark}", scores[i], ds.records[i].surface);
    }
    Ok(())
}

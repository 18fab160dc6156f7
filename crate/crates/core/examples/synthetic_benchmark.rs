//! Graph models against feature-only baselines on planted synthetic data.
//!
//! `cargo run --release --example synthetic_benchmark -- [seeds] [epochs]`

use termrel::benchmark::{benchmark_config, pu_run, supervised_run};
use termrel::data::SyntheticSpec;

fn main() -> termrel::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));
    let mut train = benchmark_config();
    if let Some(e) = args.next() {
        train.epochs = e.parse().expect("epoch count");
    }
    let spec = SyntheticSpec::default();
    println!("seed\theld_out\tlr\tmlp\tcfl\thicfl\tseconds");
    for seed in 1..=seeds {
        let r = supervised_run(&spec, seed, &train)?;
        println!(
            "{seed}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.1}",
            r.held_out, r.lr.roc, r.mlp.roc, r.cfl.roc, r.hicfl.roc, r.seconds
        );
    }
    println!("\nseed\thidden\ttop_decile\thicfl_pu_pr\tmlp_pu_pr\tseconds");
    for seed in 1..=seeds {
        let r = pu_run(&spec, seed, 20, &train)?;
        println!(
            "{seed}\t{}\t{:.3}\t{:.4}\t{:.4}\t{:.1}",
            r.hidden_positives, r.hicfl_top_decile_recall, r.hicfl.pr, r.mlp.pr, r.seconds
        );
    }
    Ok(())
}

//! Paired runs on planted synthetic data: graph models against feature-only
//! baselines, and PU learning of the narrowest domain from a few positives.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{generate_synthetic_dataset, SyntheticDataset, SyntheticSpec};
use crate::error::Result;
use crate::eval::{pr_auc, roc_auc, train_baseline, BaselineKind};
use crate::model::TrainConfig;
use crate::pipeline::{prepare, Mode, Setup};

/// ROC-AUC and PR-AUC on held-out terms at the narrowest level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aucs {
    pub roc: f64,
    pub pr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupervisedResult {
    pub seed: u64,
    pub held_out: usize,
    pub lr: Aucs,
    pub mlp: Aucs,
    pub cfl: Aucs,
    pub hicfl: Aucs,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PuResult {
    pub seed: u64,
    pub hidden_positives: usize,
    /// Share of hidden positives scored above the 90th percentile.
    pub hicfl_top_decile_recall: f64,
    pub hicfl: Aucs,
    pub mlp: Aucs,
    pub seconds: f64,
}

/// Training settings for the synthetic benchmarks: defaults except a smaller
/// learning rate and a shorter budget. At 0.01 the PU model, which has no
/// validation split to stop it, saturates: many terms score exactly 1 and the
/// top of the ranking becomes a tie.
pub fn benchmark_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.001,
        epochs: 100,
        ..TrainConfig::default()
    }
}

fn aucs(scores: &[f64], ids: &[usize], truth: &[bool]) -> Result<Aucs> {
    let s: Vec<f64> = ids.iter().map(|&i| scores[i]).collect();
    let y: Vec<bool> = ids.iter().map(|&i| truth[i]).collect();
    Ok(Aucs {
        roc: roc_auc(&s, &y)?,
        pr: pr_auc(&s, &y)?,
    })
}

pub fn dataset(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticDataset> {
    generate_synthetic_dataset(spec, seed)
}

/// Trains LR, MLP, CFL and HiCFL on the same split and features, and scores
/// the held-out test terms and all fringe terms against the planted truth
/// at the narrowest level.
pub fn supervised_run(spec: &SyntheticSpec, seed: u64, train: &TrainConfig) -> Result<SupervisedResult> {
    let start = Instant::now();
    let ds = dataset(spec, seed)?;
    let labels = ds.hierarchy.label(&ds.records)?;
    let truth = ds.truth.last().expect("at least one level");
    let mut setup = Setup {
        mode: Mode::Cfl,
        train: TrainConfig {
            seed,
            ..train.clone()
        },
        ..Setup::default()
    };
    let cfl_prep = prepare(&ds.records, &ds.vectors, &labels, &[], &setup)?;
    let held_out = cfl_prep.held_out_ids();
    let (cfl_params, _) = cfl_prep.train()?;
    let cfl = aucs(cfl_prep.score_all(&cfl_params)?.as_slice().expect("contiguous"), &held_out, truth)?;

    let x = cfl_prep.features.values.view();
    let mut base = Vec::new();
    for kind in [BaselineKind::LogisticRegression, BaselineKind::Mlp] {
        let out = train_baseline(kind, &setup.train, x, &cfl_prep.supervision, &cfl_prep.validation)?;
        base.push(aucs(out.scores.as_slice().expect("contiguous"), &held_out, truth)?);
    }

    setup.mode = Mode::HiCfl;
    let hi_prep = prepare(&ds.records, &ds.vectors, &labels, &[], &setup)?;
    debug_assert_eq!(hi_prep.held_out_ids(), held_out);
    let (hi_params, _) = hi_prep.train()?;
    let hicfl = aucs(hi_prep.score_all(&hi_params)?.as_slice().expect("contiguous"), &held_out, truth)?;

    Ok(SupervisedResult {
        seed,
        held_out: held_out.len(),
        lr: base[0],
        mlp: base[1],
        cfl,
        hicfl,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Hides the narrowest level, gives `positives` of its core terms, trains
/// HiCFL-PU and an MLP on the same PU targets, and scores every other term.
pub fn pu_run(spec: &SyntheticSpec, seed: u64, positives: usize, train: &TrainConfig) -> Result<PuResult> {
    let start = Instant::now();
    let ds = dataset(spec, seed)?;
    let depth = ds.truth.len();
    let labels = ds.hierarchy.label(&ds.records)?.truncated(depth - 1);
    let truth = &ds.truth[depth - 1];

    let mut pool = ds.deepest_core_positives();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut given: Vec<usize> = pool.into_iter().take(positives).collect();
    given.sort_unstable();
    let surfaces: Vec<String> = given.iter().map(|&i| ds.records[i].surface.clone()).collect();

    let setup = Setup {
        mode: Mode::Pu,
        train: TrainConfig {
            seed,
            ..train.clone()
        },
        ..Setup::default()
    };
    let prep = prepare(&ds.records, &ds.vectors, &labels, &surfaces, &setup)?;
    let eval_ids: Vec<usize> = (0..ds.records.len()).filter(|i| given.binary_search(i).is_err()).collect();
    let (params, _) = prep.train()?;
    let scores = prep.score_all(&params)?;
    let scores = scores.as_slice().expect("contiguous");
    let hicfl = aucs(scores, &eval_ids, truth)?;

    let mut pool: Vec<f64> = eval_ids.iter().map(|&i| scores[i]).collect();
    pool.sort_by(f64::total_cmp);
    let cut = pool[((pool.len() as f64) * 0.9).floor() as usize];
    let hidden: Vec<usize> = eval_ids.iter().copied().filter(|&i| truth[i]).collect();
    let above = hidden.iter().filter(|&&i| scores[i] > cut).count();

    let target = crate::model::Supervision {
        targets: vec![prep.supervision.target_level().to_vec()],
    };
    let mlp_out = train_baseline(BaselineKind::Mlp, &setup.train, prep.features.values.view(), &target, &[])?;
    let mlp = aucs(mlp_out.scores.as_slice().expect("contiguous"), &eval_ids, truth)?;

    Ok(PuResult {
        seed,
        hidden_positives: hidden.len(),
        hicfl_top_decile_recall: above as f64 / hidden.len() as f64,
        hicfl,
        mlp,
        seconds: start.elapsed().as_secs_f64(),
    })
}

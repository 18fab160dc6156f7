mod common;

use common::random_adjacency;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use termrel::data::{generate_synthetic_dataset, SyntheticSpec};
use termrel::model::{
    masked_bce, model_loss, train, Adam, Checkpoint, ForwardMode, ModelKind, ModelParams, Supervision, TrainConfig,
    PROB_CLAMP,
};
use termrel::pipeline::{auc_pair, prepare, Mode, Setup};
use termrel::sparse::CsrMatrix;
use termrel::Error;

fn small_config() -> TrainConfig {
    TrainConfig {
        hidden: 12,
        epochs: 25,
        ..TrainConfig::default()
    }
}

struct Instance {
    adj: CsrMatrix,
    x: Array2<f64>,
    supervision: Supervision,
}

/// Labels follow the sign of the first two features, so they are learnable.
fn instance(n: usize, levels: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = random_adjacency(n, n * 2, &mut rng);
    let x = Array2::from_shape_fn((n, 6), |_| StandardNormal.sample(&mut rng));
    let targets = (0..levels)
        .map(|l| (0..n).map(|i| Some(x[[i, 0]] + 0.5 * l as f64 > 0.0 && (l == 0 || x[[i, 1]] > -0.5 * l as f64))).collect())
        .collect();
    Instance {
        adj,
        x,
        supervision: Supervision { targets },
    }
}

fn trained(kind: ModelKind, seed: u64) -> (Instance, ModelParams) {
    let inst = instance(40, kind_levels(kind), seed);
    let out = train(kind, &small_config(), &inst.adj, inst.x.view(), &inst.supervision, &[]).unwrap();
    (inst, out.params)
}

fn kind_levels(kind: ModelKind) -> usize {
    match kind {
        ModelKind::Cfl => 1,
        ModelKind::HiCfl { levels } => levels,
    }
}

#[test]
fn masked_bce_matches_direct_sum() {
    let logits = Array1::from(vec![-2.0, 0.3, 40.0, -40.0, 1.0]);
    let targets = [Some(true), None, Some(false), Some(true), Some(false)];
    let (loss, grad) = masked_bce(&logits, &targets).unwrap();
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut want = 0.0;
    for (i, t) in targets.iter().enumerate() {
        if let Some(y) = t {
            let z = sig(logits[i]).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            want -= if *y { z.ln() } else { (1.0 - z).ln() };
            assert!((grad[i] - (sig(logits[i]) - f64::from(u8::from(*y)))).abs() < 1e-15);
        } else {
            assert_eq!(grad[i], 0.0);
        }
    }
    assert!((loss - want).abs() < 1e-12);
    // The clamp bounds each term.
    assert!(loss <= 2.0 * -(PROB_CLAMP.ln()) + 10.0);
}

#[test]
fn masked_bce_rejects_an_empty_mask() {
    let err = masked_bce(&Array1::zeros(3), &[None, None, None]).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn zero_epochs_return_the_initialization() {
    let inst = instance(20, 2, 1);
    let config = TrainConfig {
        epochs: 0,
        hidden: 8,
        seed: 9,
        ..TrainConfig::default()
    };
    let kind = ModelKind::HiCfl { levels: 2 };
    let out = train(kind, &config, &inst.adj, inst.x.view(), &inst.supervision, &[]).unwrap();
    let init = ModelParams::init(&config.architecture(kind, 6), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(out.params, init);
    assert!(out.log.epochs.is_empty());
}

#[test]
fn loss_decreases_over_the_first_epochs() {
    for kind in [ModelKind::Cfl, ModelKind::HiCfl { levels: 3 }] {
        let inst = instance(60, kind_levels(kind), 4);
        let config = TrainConfig {
            epochs: 10,
            hidden: 16,
            ..TrainConfig::default()
        };
        let out = train(kind, &config, &inst.adj, inst.x.view(), &inst.supervision, &[]).unwrap();
        let first = out.log.epochs.first().unwrap().loss;
        let last = out.log.epochs.last().unwrap().loss;
        assert!(last < first, "{kind:?}: {first} -> {last}");
    }
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let (_, a) = trained(ModelKind::HiCfl { levels: 2 }, 5);
    let (_, b) = trained(ModelKind::HiCfl { levels: 2 }, 5);
    assert_eq!(a, b);
}

#[test]
fn local_scoring_equals_full_scoring() {
    for kind in [ModelKind::Cfl, ModelKind::HiCfl { levels: 3 }] {
        let (inst, params) = trained(kind, 6);
        let all = params.score_all(&inst.adj, inst.x.view()).unwrap();
        let ids: Vec<usize> = vec![0, 7, 13, 39, 7];
        let local = params.score_terms(&inst.adj, inst.x.view(), &ids).unwrap();
        for (&i, s) in ids.iter().zip(&local) {
            assert!((all[i] - s).abs() < 1e-12, "{kind:?} node {i}");
        }
    }
}

#[test]
fn scores_are_probabilities_and_blend_by_alpha() {
    let (inst, mut params) = trained(ModelKind::HiCfl { levels: 3 }, 7);
    let (out, _) = params.forward(&inst.adj, inst.x.view(), ForwardMode::Inference).unwrap();
    assert!(out.z.iter().chain(out.z_local.iter().flatten()).all(|&z| z > 0.0 && z < 1.0));
    assert!(out.scores.iter().all(|&s| (0.0..=1.0).contains(&s)));
    let product = out.z_local.iter().fold(Array1::<f64>::ones(out.z.len()), |acc, z| acc * z);
    for alpha in [0.0, 1.0, 0.3] {
        params.alpha = alpha;
        let s = params.score_all(&inst.adj, inst.x.view()).unwrap();
        for i in 0..s.len() {
            let want = alpha * out.z[i] + (1.0 - alpha) * product[i];
            assert!((s[i] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn cfl_score_is_its_probability() {
    let (inst, params) = trained(ModelKind::Cfl, 8);
    let (out, _) = params.forward(&inst.adj, inst.x.view(), ForwardMode::Inference).unwrap();
    assert_eq!(out.scores, out.z);
    assert!(out.z_local.is_empty());
}

#[test]
fn zero_weights_give_half_probabilities() {
    for kind in [ModelKind::Cfl, ModelKind::HiCfl { levels: 2 }] {
        let (inst, mut params) = trained(kind, 9);
        params.visit_mut(&mut |name, t| {
            if !name.contains(".bn.") {
                t.fill(0.0);
            }
        });
        let (out, _) = params.forward(&inst.adj, inst.x.view(), ForwardMode::Inference).unwrap();
        assert!(out.z.iter().all(|&z| z == 0.5));
        let want = match kind {
            ModelKind::Cfl => 0.5,
            ModelKind::HiCfl { .. } => 0.5 * 0.5 + 0.5 * 0.25,
        };
        assert!(out.scores.iter().all(|&s| (s - want).abs() < 1e-15));
    }
}

#[test]
fn two_node_path_matches_hand_computation() {
    let adj = CsrMatrix::from_rows(2, vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]]);
    let x = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 3.0, -1.0]).unwrap();
    let config = TrainConfig {
        hidden: 3,
        gcn_layers: 1,
        batch_norm: false,
        ..TrainConfig::default()
    };
    let mut params = ModelParams::init(&config.architecture(ModelKind::Cfl, 2), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let w = params.gcn[0].linear.weight.clone();
    params.gcn[0].linear.bias.fill(0.25);
    let (out, cache) = params.forward(&adj, x.view(), ForwardMode::Inference).unwrap();
    // Both rows aggregate to the mean of the two feature rows.
    let mean = [2.0, 0.5];
    let logit = w[[0, 0]] * mean[0] + w[[0, 1]] * mean[1] + 0.25;
    for i in 0..2 {
        assert!((cache.logits[i] - logit).abs() < 1e-12);
        assert!((out.z[i] - 1.0 / (1.0 + (-logit).exp())).abs() < 1e-12);
    }
}

#[test]
fn permuting_nodes_permutes_outputs() {
    let (inst, params) = trained(ModelKind::HiCfl { levels: 2 }, 10);
    let n = inst.x.nrows();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let rows = (0..n)
        .map(|new| {
            let (cols, vals) = inst.adj.row(perm[new]);
            cols.iter().zip(vals).map(|(&c, &v)| (inv[c], v)).collect()
        })
        .collect();
    let adj = CsrMatrix::from_rows(n, rows);
    let x = Array2::from_shape_fn(inst.x.dim(), |(i, j)| inst.x[[perm[i], j]]);
    let a = params.score_all(&inst.adj, inst.x.view()).unwrap();
    let b = params.score_all(&adj, x.view()).unwrap();
    for new in 0..n {
        assert!((b[new] - a[perm[new]]).abs() < 1e-12);
    }
}

#[test]
fn adam_first_step_moves_each_weight_by_the_learning_rate() {
    let (inst, params) = trained(ModelKind::Cfl, 11);
    let (_, cache) = params
        .forward(&inst.adj, inst.x.view(), ForwardMode::Training { dropout: None })
        .unwrap();
    let (_, g, gl) = model_loss(&params, &cache, &inst.supervision).unwrap();
    let grads = params.backward(&inst.adj, &cache, &g, &gl);
    let config = small_config();
    let mut stepped = params.clone();
    Adam::new(&params, &config).step(&mut stepped, &grads);
    for (((_, before), (_, after)), (_, grad)) in params.flatten().iter().zip(stepped.flatten()).zip(grads.flatten()) {
        for i in 0..before.len() {
            // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε).
            let want = before[i] - config.learning_rate * grad[i] / (grad[i].abs() + config.adam_eps);
            assert!((after[i] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn cfl_fits_noise_free_synthetic_data() {
    let spec = SyntheticSpec {
        noise: 0.0,
        ..SyntheticSpec::with_levels(&[("cs", 120), ("ai", 50), ("ml", 20)])
    };
    let ds = generate_synthetic_dataset(&spec, 1).unwrap();
    let labels = ds.hierarchy.label(&ds.records).unwrap();
    let setup = Setup {
        mode: Mode::Cfl,
        holdout: false,
        train: TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        },
        ..Setup::default()
    };
    let prep = prepare(&ds.records, &ds.vectors, &labels, &[], &setup).unwrap();
    let (params, _) = prep.train().unwrap();
    let s = prep.score_all(&params).unwrap();
    let train: Vec<(usize, bool)> = prep.supervision.target_level().iter().enumerate().filter_map(|(i, y)| y.map(|y| (i, y))).collect();
    let (roc, _) = auc_pair(s.as_slice().unwrap(), &train).unwrap();
    assert!(roc > 0.99, "{roc}");
}

#[test]
fn validation_picks_the_best_epoch() {
    let inst = instance(60, 1, 13);
    let validation: Vec<(usize, bool)> = (0..60).step_by(3).map(|i| (i, inst.supervision.targets[0][i].unwrap())).collect();
    let out = train(ModelKind::Cfl, &small_config(), &inst.adj, inst.x.view(), &inst.supervision, &validation).unwrap();
    let best = out.log.best_epoch;
    let best_pr = out.log.epochs[best - 1].val_pr_auc.unwrap();
    for r in &out.log.epochs {
        let pr = r.val_pr_auc.unwrap();
        assert!(pr < best_pr || (pr == best_pr && r.epoch >= best));
    }
    let s = out.params.score_terms(&inst.adj, inst.x.view(), &validation.iter().map(|v| v.0).collect::<Vec<_>>()).unwrap();
    let y: Vec<bool> = validation.iter().map(|v| v.1).collect();
    assert!((termrel::eval::pr_auc(&s, &y).unwrap() - best_pr).abs() < 1e-12);
}

#[test]
fn training_rejects_levels_without_positives() {
    let inst = instance(20, 1, 14);
    let none = Supervision {
        targets: vec![vec![Some(false); 20]],
    };
    let err = train(ModelKind::Cfl, &small_config(), &inst.adj, inst.x.view(), &none, &[]).unwrap_err();
    assert!(matches!(err, Error::Training(_)));
}

#[test]
fn checkpoint_round_trips_byte_for_byte() {
    for kind in [ModelKind::Cfl, ModelKind::HiCfl { levels: 3 }] {
        let (_, params) = trained(kind, 15);
        let ckpt = Checkpoint {
            params,
            meta: "{\"note\":\"x\"}".into(),
            input_hash: "ab".repeat(32),
        };
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.to_bytes(), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        termrel::model::save_checkpoint(&path, &ckpt).unwrap();
        assert_eq!(termrel::model::load_checkpoint(&path).unwrap(), ckpt);
    }
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let (_, params) = trained(ModelKind::HiCfl { levels: 2 }, 16);
    let bytes = Checkpoint {
        params,
        meta: String::new(),
        input_hash: String::new(),
    }
    .to_bytes();
    for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::CorruptCheckpoint(_))), "cut {cut}");
    }
    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::CorruptCheckpoint(_))));
    let mut long = bytes;
    long.push(0);
    assert!(matches!(Checkpoint::from_bytes(&long), Err(Error::CorruptCheckpoint(_))));
}

//! Losses, Adam and the full-batch training loop.

use ndarray::{Array1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Architecture, ForwardCache, ForwardMode, ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::eval::metrics::{pr_auc, roc_auc};
use crate::sparse::CsrMatrix;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the log.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub hidden: usize,
    pub gcn_layers: usize,
    pub alpha: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_norm: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 300,
            dropout: 0.5,
            hidden: 256,
            gcn_layers: 2,
            alpha: 0.5,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_norm: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.hidden == 0 || self.gcn_layers == 0 {
            return Err(Error::InvalidArgument("hidden size and layer count must be positive".into()));
        }
        Ok(())
    }

    pub fn architecture(&self, kind: ModelKind, input_dim: usize) -> Architecture {
        Architecture {
            kind,
            input_dim,
            hidden_dim: self.hidden,
            gcn_layers: self.gcn_layers,
            batch_norm: self.batch_norm,
            alpha: self.alpha,
        }
    }
}

/// Per-level training targets; `None` leaves a node out of that level's loss.
///
/// CFL trains on the last level only. HiCFL needs one entry per hierarchy
/// level, and its global head is trained on the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    pub targets: Vec<Vec<Option<bool>>>,
}

impl Supervision {
    pub fn levels(&self) -> usize {
        self.targets.len()
    }

    pub fn target_level(&self) -> &[Option<bool>] {
        self.targets.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Summed, clamped binary cross-entropy over the nodes with a target, and its
/// gradient with respect to the logits.
pub fn masked_bce(logits: &Array1<f64>, targets: &[Option<bool>]) -> Result<(f64, Array1<f64>)> {
    if logits.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} logits for {} targets",
            logits.len(),
            targets.len()
        )));
    }
    let mut loss = 0.0;
    let mut grad = Array1::zeros(logits.len());
    let mut any = false;
    for (i, t) in targets.iter().enumerate() {
        let Some(y) = *t else { continue };
        any = true;
        let z = super::layers::sigmoid(logits[i]);
        let zc = z.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let y = if y { 1.0 } else { 0.0 };
        loss -= y * zc.ln() + (1.0 - y) * (1.0 - zc).ln();
        // The clamp only guards the logarithm; the gradient stays z - y so
        // saturated units can recover.
        grad[i] = z - y;
    }
    if !any {
        return Err(Error::InvalidArgument("loss mask is empty".into()));
    }
    Ok((loss, grad))
}

/// Loss and logit gradients for either model kind.
pub fn model_loss(
    params: &ModelParams,
    cache: &ForwardCache,
    supervision: &Supervision,
) -> Result<(f64, Array1<f64>, Vec<Array1<f64>>)> {
    match params.kind {
        ModelKind::Cfl => {
            let (loss, g) = masked_bce(&cache.logits, supervision.target_level())?;
            Ok((loss, g, Vec::new()))
        }
        ModelKind::HiCfl { levels } => {
            if supervision.levels() != levels {
                return Err(Error::InvalidArgument(format!(
                    "HiCFL with {levels} levels given labels for {}",
                    supervision.levels()
                )));
            }
            let (mut loss, g) = masked_bce(&cache.logits, supervision.target_level())?;
            let mut locals = Vec::with_capacity(levels);
            for (l, targets) in supervision.targets.iter().enumerate() {
                let (lv, gl) = masked_bce(&cache.local_logits[l], targets)?;
                loss += lv;
                locals.push(gl);
            }
            Ok((loss, g, locals))
        }
    }
}

/// Loss and parameter gradients with batch statistics and no dropout.
pub fn loss_and_gradients(
    params: &ModelParams,
    adj: &CsrMatrix,
    x: ArrayView2<'_, f64>,
    supervision: &Supervision,
) -> Result<(f64, ModelParams)> {
    let (_, cache) = params.forward(adj, x, ForwardMode::Training { dropout: None })?;
    let (loss, g, gl) = model_loss(params, &cache, supervision)?;
    Ok((loss, params.backward(adj, &cache, &g, &gl)))
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, config: &TrainConfig) -> Self {
        let shapes: Vec<Vec<f64>> = params.flatten().into_iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Adam {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.adam_eps,
            step: 0,
            v: shapes.clone(),
            m: shapes,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let grads = grads.flatten();
        let mut k = 0;
        params.visit_mut(&mut |_, p| {
            let g = &grads[k].1;
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
            k += 1;
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_roc_auc: Option<f64>,
    pub val_pr_auc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; 0 means the initialization.
    pub best_epoch: usize,
}

impl TrainLog {
    /// One JSON object per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e).expect("log serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
}

/// Full-batch training with Adam. With a validation set, returns the
/// parameters of the epoch with the best validation PR-AUC (earliest on ties);
/// otherwise the last epoch.
pub fn train(
    kind: ModelKind,
    config: &TrainConfig,
    adj: &CsrMatrix,
    x: ArrayView2<'_, f64>,
    supervision: &Supervision,
    validation: &[(usize, bool)],
) -> Result<TrainOutcome> {
    config.validate()?;
    if let ModelKind::HiCfl { levels } = kind {
        if supervision.levels() != levels {
            return Err(Error::InvalidArgument(format!(
                "HiCFL with {levels} levels given labels for {}",
                supervision.levels()
            )));
        }
    }
    let supervised: &[Vec<Option<bool>>] = match kind {
        ModelKind::Cfl => std::slice::from_ref(supervision.targets.last().ok_or_else(|| {
            Error::InvalidArgument("no supervision levels".into())
        })?),
        ModelKind::HiCfl { .. } => &supervision.targets,
    };
    for (l, t) in supervised.iter().enumerate() {
        if t.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "level {l} has {} targets for {} nodes",
                t.len(),
                x.nrows()
            )));
        }
        if !t.contains(&Some(true)) {
            return Err(Error::Training(format!("no positive labels at supervised level {l}")));
        }
    }
    if let Some(&(bad, _)) = validation.iter().find(|(i, _)| *i >= x.nrows()) {
        return Err(Error::UnknownNode(bad));
    }
    let use_validation = validation.iter().any(|v| v.1) && validation.iter().any(|v| !v.1);
    let val_ids: Vec<usize> = validation.iter().map(|v| v.0).collect();
    let val_labels: Vec<bool> = validation.iter().map(|v| v.1).collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(1);
    let mut params = ModelParams::init(&config.architecture(kind, x.ncols()), &mut init_rng)?;
    let mut adam = Adam::new(&params, config);
    let mut log = TrainLog::default();
    let mut best: Option<(f64, ModelParams)> = None;

    for epoch in 1..=config.epochs {
        let dropout = (config.dropout > 0.0).then_some((config.dropout, &mut dropout_rng));
        let (_, cache) = params.forward(adj, x, ForwardMode::Training { dropout })?;
        let (loss, g, gl) = model_loss(&params, &cache, supervision)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss became {loss} at epoch {epoch}; try a smaller learning rate than {}",
                config.learning_rate
            )));
        }
        let grads = params.backward(adj, &cache, &g, &gl);
        params.update_running_stats(&cache);
        adam.step(&mut params, &grads);

        let mut record = EpochRecord {
            epoch,
            loss,
            val_roc_auc: None,
            val_pr_auc: None,
        };
        if use_validation {
            let scores = params.score_terms(adj, x, &val_ids)?;
            let pr = pr_auc(&scores, &val_labels)?;
            record.val_roc_auc = Some(roc_auc(&scores, &val_labels)?);
            record.val_pr_auc = Some(pr);
            if best.as_ref().is_none_or(|(b, _)| pr > *b) {
                best = Some((pr, params.clone()));
                log.best_epoch = epoch;
            }
        } else {
            log.best_epoch = epoch;
        }
        log::debug!(
            "epoch {epoch} loss {loss:.6} val_pr_auc {}",
            record.val_pr_auc.map_or("-".into(), |v| format!("{v:.4}"))
        );
        log.epochs.push(record);
    }
    if let Some((_, p)) = best {
        params = p;
    }
    Ok(TrainOutcome { params, log })
}

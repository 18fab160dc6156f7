//! Feature-only baselines trained with the same engine and protocol as CFL.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{train, ModelKind, ModelParams, Supervision, TrainConfig, TrainLog};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    /// A single sigmoid unit.
    LogisticRegression,
    /// One hidden ReLU layer with dropout.
    Mlp,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::LogisticRegression => "lr",
            BaselineKind::Mlp => "mlp",
        }
    }

    /// The training config for this baseline derived from the main one: no
    /// batch norm, and no hidden layer for logistic regression.
    pub fn config(self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            gcn_layers: match self {
                BaselineKind::LogisticRegression => 1,
                BaselineKind::Mlp => 2,
            },
            batch_norm: false,
            ..base.clone()
        }
    }
}

/// Identity "graph": every node sees only itself.
pub fn identity_adjacency(n: usize) -> CsrMatrix {
    CsrMatrix::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
}

pub struct BaselineOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
    pub scores: Array1<f64>,
}

/// Trains a baseline on the CFL supervision (last level) and scores every row.
pub fn train_baseline(
    kind: BaselineKind,
    base: &TrainConfig,
    x: ArrayView2<'_, f64>,
    supervision: &Supervision,
    validation: &[(usize, bool)],
) -> Result<BaselineOutcome> {
    let adj = identity_adjacency(x.nrows());
    let out = train(ModelKind::Cfl, &kind.config(base), &adj, x, supervision, validation)?;
    let scores = out.params.score_all(&adj, x)?;
    Ok(BaselineOutcome {
        params: out.params,
        log: out.log,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::roc_auc;
    use ndarray::Array2;

    #[test]
    fn logistic_regression_separates_planted_features() {
        let n = 60;
        let x = Array2::from_shape_fn((n, 3), |(i, j)| {
            let sign = if i % 3 == 0 { 1.0 } else { -1.0 };
            if j == 0 {
                sign
            } else {
                ((i * 7 + j * 13) % 11) as f64 / 11.0
            }
        });
        let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let targets = labels.iter().map(|&y| Some(y)).collect();
        let sup = Supervision {
            targets: vec![targets],
        };
        let cfg = TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        };
        let out = train_baseline(BaselineKind::LogisticRegression, &cfg, x.view(), &sup, &[]).unwrap();
        assert_eq!(roc_auc(out.scores.as_slice().unwrap(), &labels).unwrap(), 1.0);
        assert_eq!(out.params.gcn.len(), 1);
        assert!(out.params.gcn[0].norm.is_none());
    }
}

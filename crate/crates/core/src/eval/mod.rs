//! Splits, metrics, baselines and ranking reports.

mod baselines;
pub mod metrics;
mod report;
mod splits;

pub use baselines::{identity_adjacency, train_baseline, BaselineKind, BaselineOutcome};
pub use metrics::{pr_auc, roc_auc, MetricReport};
pub use report::{format_ranking, parse_bands, rank_report, rank_terms, rdf_score, write_ranking, Band, RankedTerm};
pub use splits::{make_splits, SplitPlan, SplitRatios};

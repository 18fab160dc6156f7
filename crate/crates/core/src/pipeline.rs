//! End-to-end runs: labels → held-out split → index → graph → features →
//! training, and the reverse trip from a checkpoint back to a scoring setup.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotation::{build_label_matrix, build_pu_labels, load_labels, LabelMatrix, PULabelSet};
use crate::data::{load_term_records, load_word_vectors, TermRecord, WordVectorTable};
use crate::error::{Error, Result};
use crate::eval::{make_splits, pr_auc, roc_auc, SplitPlan, SplitRatios};
use crate::features::{build_feature_matrix, FeatureMatrix, FeatureSource};
use crate::graph::{CoreFringeGraph, DEFAULT_K};
use crate::index::CoreIndex;
use crate::model::{train, Checkpoint, ModelKind, ModelParams, Supervision, TrainConfig, TrainLog};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cfl,
    #[default]
    HiCfl,
    /// HiCFL on a target domain below the labeled hierarchy, known only from
    /// a handful of positive terms.
    Pu,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cfl" => Ok(Mode::Cfl),
            "hicfl" => Ok(Mode::HiCfl),
            "pu" => Ok(Mode::Pu),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}` (cfl, hicfl, pu)"))),
        }
    }
}

/// How the model is set up and trained; independent of where inputs live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub mode: Mode,
    pub k: usize,
    pub train: TrainConfig,
    pub ratios: SplitRatios,
    pub stratify: bool,
    /// Target level for CFL (and the deepest level HiCFL uses); defaults to
    /// the last labeled level.
    pub level: Option<usize>,
    /// Evaluate on held-out terms demoted to fringe; off in PU mode.
    pub holdout: bool,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            mode: Mode::default(),
            k: DEFAULT_K,
            train: TrainConfig::default(),
            ratios: SplitRatios::default(),
            stratify: true,
            level: None,
            holdout: true,
        }
    }
}

/// A [`Setup`] plus input locations, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub terms: PathBuf,
    pub vectors: PathBuf,
    /// `term-id<TAB>level<TAB>0|1` labels from the annotate stage.
    pub labels: PathBuf,
    pub positives: Option<PathBuf>,
    pub setup: Setup,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            terms: "terms.tsv".into(),
            vectors: "vectors.txt".into(),
            labels: "labels.tsv".into(),
            positives: None,
            setup: Setup::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.setup.k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        self.setup.train.validate()?;
        if self.setup.mode == Mode::Pu && self.positives.is_none() {
            return Err(Error::InvalidArgument("PU mode needs a positives file".into()));
        }
        Ok(())
    }

    fn map_paths(&self, f: impl Fn(&Path) -> Result<PathBuf>) -> Result<Self> {
        Ok(RunConfig {
            terms: f(&self.terms)?,
            vectors: f(&self.vectors)?,
            labels: f(&self.labels)?,
            positives: self.positives.as_deref().map(&f).transpose()?,
            setup: self.setup.clone(),
        })
    }

    /// Copy with every path made relative to `base`, so a run directory can
    /// be moved together with its inputs.
    pub fn relative_to(&self, base: &Path) -> Result<Self> {
        let base = std::path::absolute(base).map_err(|e| Error::io(base, e))?;
        self.map_paths(|p| Ok(relative_path(&std::path::absolute(p).map_err(|e| Error::io(p, e))?, &base)))
    }

    /// Inverse of [`RunConfig::relative_to`].
    pub fn resolved_from(&self, base: &Path) -> Result<Self> {
        self.map_paths(|p| Ok(base.join(p)))
    }
}

fn relative_path(path: &Path, base: &Path) -> PathBuf {
    let p: Vec<_> = path.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = p.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &p[common..] {
        out.push(c);
    }
    out
}

/// Everything needed to train: inputs after held-out demotion.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub setup: Setup,
    /// Records as the model sees them (held-out cores demoted to fringe).
    pub records: Vec<TermRecord>,
    /// Whether each term was a core term before demotion.
    pub originally_core: Vec<bool>,
    pub labels: LabelMatrix,
    pub index: CoreIndex,
    pub graph: CoreFringeGraph,
    pub adjacency: CsrMatrix,
    pub features: FeatureMatrix,
    pub kind: ModelKind,
    pub supervision: Supervision,
    /// `(id, label)` pairs used for model selection.
    pub validation: Vec<(usize, bool)>,
    pub splits: Option<SplitPlan>,
    pub pu: Option<PULabelSet>,
    /// Index of the level whose labels the score targets (the PU target is
    /// one past the labeled levels).
    pub target_level: usize,
}

/// Labels, split, demote, and build the graph and features.
pub fn prepare(
    records: &[TermRecord],
    vectors: &WordVectorTable,
    labels: &LabelMatrix,
    positives: &[String],
    setup: &Setup,
) -> Result<Prepared> {
    if labels.node_count() != records.len() {
        return Err(Error::Dimension(format!(
            "{} labeled rows for {} terms",
            labels.node_count(),
            records.len()
        )));
    }
    if labels.levels() == 0 {
        return Err(Error::InvalidArgument("no label levels".into()));
    }
    let deepest = setup.level.unwrap_or(labels.levels() - 1);
    if deepest >= labels.levels() {
        return Err(Error::InvalidArgument(format!(
            "level {deepest} requested but only {} are labeled",
            labels.levels()
        )));
    }
    let labels = labels.truncated(deepest + 1);
    let n = records.len();
    let mut records = records.to_vec();
    let originally_core: Vec<bool> = records.iter().map(|r| r.is_core).collect();

    let train_mask = |allowed: &dyn Fn(usize) -> bool, level: usize| -> Vec<Option<bool>> {
        (0..n).map(|i| if allowed(i) { labels.get(level, i) } else { None }).collect()
    };

    let (kind, supervision, validation, splits, pu, target_level) = match setup.mode {
        Mode::Cfl | Mode::HiCfl => {
            let labeled: Vec<(usize, bool)> = labels
                .labeled_ids()
                .into_iter()
                .map(|i| (i, labels.get(deepest, i).expect("labeled")))
                .collect();
            let (train_ids, validation, splits) = if setup.holdout {
                let plan = make_splits(&labeled, setup.ratios, setup.train.seed, setup.stratify)?;
                for &i in &plan.demoted() {
                    records[i].demote();
                }
                let validation = plan.validation.iter().map(|&i| (i, labels.get(deepest, i).expect("labeled"))).collect();
                (plan.train.clone(), validation, Some(plan))
            } else {
                (labeled.iter().map(|v| v.0).collect::<BTreeSet<usize>>(), Vec::new(), None)
            };
            let allowed = |i: usize| train_ids.contains(&i);
            let (kind, targets) = if setup.mode == Mode::Cfl {
                (ModelKind::Cfl, vec![train_mask(&allowed, deepest)])
            } else {
                let targets = (0..=deepest).map(|l| train_mask(&allowed, l)).collect();
                (ModelKind::HiCfl { levels: deepest + 1 }, targets)
            };
            (kind, Supervision { targets }, validation, splits, None, deepest)
        }
        Mode::Pu => {
            let pu = build_pu_labels(&labels, &records, positives)?;
            let mut targets: Vec<Vec<Option<bool>>> = (0..=deepest).map(|l| train_mask(&|_| true, l)).collect();
            let mut target = vec![None; n];
            for &i in &pu.positives {
                target[i] = Some(true);
            }
            for &i in &pu.reliable_negatives {
                target[i] = Some(false);
            }
            targets.push(target);
            let level = pu.target_level;
            (
                ModelKind::HiCfl { levels: deepest + 2 },
                Supervision { targets },
                Vec::new(),
                None,
                Some(pu),
                level,
            )
        }
    };

    let index = CoreIndex::build(&records)?;
    let graph = CoreFringeGraph::build(&records, &index, setup.k)?;
    let adjacency = graph.normalize().matrix;
    let features = build_feature_matrix(&records, FeatureSource::Compositional(vectors))?;
    Ok(Prepared {
        setup: setup.clone(),
        records,
        originally_core,
        labels,
        index,
        graph,
        adjacency,
        features,
        kind,
        supervision,
        validation,
        splits,
        pu,
        target_level,
    })
}

/// Hex SHA-256 over the graph edges and the feature matrix.
pub fn input_hash(graph: &CoreFringeGraph, features: &FeatureMatrix) -> String {
    let mut h = Sha256::new();
    h.update((graph.node_count() as u64).to_le_bytes());
    h.update((graph.k() as u64).to_le_bytes());
    for (s, d) in graph.edges() {
        h.update((s as u64).to_le_bytes());
        h.update((d as u64).to_le_bytes());
    }
    h.update((features.dim() as u64).to_le_bytes());
    for v in features.values.iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Prepared {
    pub fn train(&self) -> Result<(ModelParams, TrainLog)> {
        let out = train(
            self.kind,
            &self.setup.train,
            &self.adjacency,
            self.features.values.view(),
            &self.supervision,
            &self.validation,
        )?;
        Ok((out.params, out.log))
    }

    pub fn input_hash(&self) -> String {
        input_hash(&self.graph, &self.features)
    }

    pub fn score_all(&self, params: &ModelParams) -> Result<Array1<f64>> {
        params.score_all(&self.adjacency, self.features.values.view())
    }

    /// Test-split ids with their target-level labels.
    pub fn test_set(&self) -> Vec<(usize, bool)> {
        match &self.splits {
            Some(plan) => plan
                .test
                .iter()
                .map(|&i| (i, self.labels.get(self.target_level, i).expect("labeled")))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Terms never used in training: the held-out split plus original fringe
    /// terms.
    pub fn held_out_ids(&self) -> Vec<usize> {
        let held: BTreeSet<usize> = self.splits.as_ref().map(SplitPlan::demoted).unwrap_or_default();
        let test: BTreeSet<usize> = self.splits.as_ref().map(|p| p.test.clone()).unwrap_or_default();
        (0..self.records.len())
            .filter(|&i| test.contains(&i) || (!self.originally_core[i] && !held.contains(&i)))
            .collect()
    }

    /// Adds an unseen term as a fringe node with its feature row, returning
    /// its id (or the existing id for a known surface).
    pub fn attach(&mut self, surface: &str, vectors: &WordVectorTable) -> Result<usize> {
        let before = self.records.len();
        let id = self.graph.attach_fringe(&mut self.records, &self.index, surface)?;
        if self.records.len() > before {
            self.features.extend(&self.records, FeatureSource::Compositional(vectors))?;
            self.adjacency = self.graph.normalize().matrix;
            self.originally_core.push(false);
        }
        Ok(id)
    }

    /// Scores through the local neighborhood only.
    pub fn score_terms(&self, params: &ModelParams, ids: &[usize]) -> Result<Vec<f64>> {
        params.score_terms(&self.adjacency, self.features.values.view(), ids)
    }

    /// Packs trained parameters with what is needed to rebuild this setup;
    /// input paths are stored relative to `checkpoint_dir`.
    pub fn checkpoint(&self, params: ModelParams, config: &RunConfig, checkpoint_dir: &Path) -> Result<Checkpoint> {
        let meta = CheckpointMeta {
            config: config.relative_to(checkpoint_dir)?,
            splits: self.splits.clone(),
        };
        Ok(Checkpoint {
            params,
            meta: serde_json::to_string(&meta).map_err(|e| Error::Format(e.to_string()))?,
            input_hash: self.input_hash(),
        })
    }
}

/// `(ROC-AUC, PR-AUC)` of `scores` on the given `(id, label)` pairs.
pub fn auc_pair(scores: &[f64], set: &[(usize, bool)]) -> Result<(f64, f64)> {
    let s: Vec<f64> = set.iter().map(|&(i, _)| scores[i]).collect();
    let y: Vec<bool> = set.iter().map(|&(_, y)| y).collect();
    Ok((roc_auc(&s, &y)?, pr_auc(&s, &y)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: RunConfig,
    pub splits: Option<SplitPlan>,
}

impl CheckpointMeta {
    pub fn parse(meta: &str) -> Result<Self> {
        serde_json::from_str(meta).map_err(|e| Error::CorruptCheckpoint(format!("metadata: {e}")))
    }
}

/// Inputs loaded from the files named by a [`RunConfig`].
pub struct Loaded {
    pub records: Vec<TermRecord>,
    pub vectors: WordVectorTable,
    pub labels: LabelMatrix,
    pub positives: Vec<String>,
}

pub fn load_inputs(config: &RunConfig) -> Result<Loaded> {
    config.validate()?;
    let records = load_term_records(&config.terms)?;
    let vectors = load_word_vectors(&config.vectors)?;
    let raw = load_labels(&config.labels, records.len())?;
    let levels = raw.len();
    let labels = build_label_matrix(raw, levels)?;
    let positives = match &config.positives {
        Some(p) => crate::annotation::load_positives(p)?,
        None => Vec::new(),
    };
    Ok(Loaded {
        records,
        vectors,
        labels,
        positives,
    })
}

/// A trained run that can score terms.
pub struct Restored {
    pub loaded: Loaded,
    pub prepared: Prepared,
    pub checkpoint: Checkpoint,
    pub meta: CheckpointMeta,
}

/// Rebuilds the training-time graph and features from a checkpoint's
/// metadata. Warns when they no longer hash to what the model was trained on.
pub fn restore(checkpoint: Checkpoint, checkpoint_dir: &Path) -> Result<Restored> {
    let mut meta = CheckpointMeta::parse(&checkpoint.meta)?;
    meta.config = meta.config.resolved_from(checkpoint_dir)?;
    let loaded = load_inputs(&meta.config)?;
    let prepared = prepare(
        &loaded.records,
        &loaded.vectors,
        &loaded.labels,
        &loaded.positives,
        &meta.config.setup,
    )?;
    if prepared.splits != meta.splits {
        log::warn!("held-out split differs from the one recorded at training time");
    }
    if prepared.input_hash() != checkpoint.input_hash {
        log::warn!("graph or features changed since training; scores may not match");
    }
    Ok(Restored {
        loaded,
        prepared,
        checkpoint,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_dataset, SyntheticSpec};

    fn small() -> crate::data::SyntheticDataset {
        let spec = SyntheticSpec::with_levels(&[("a", 120), ("b", 50)]);
        generate_synthetic_dataset(&spec, 1).unwrap()
    }

    #[test]
    fn demoted_terms_leave_the_index() {
        let ds = small();
        let labels = ds.hierarchy.label(&ds.records).unwrap();
        let p = prepare(&ds.records, &ds.vectors, &labels, &[], &Setup::default()).unwrap();
        let plan = p.splits.as_ref().unwrap();
        for &i in &plan.demoted() {
            assert!(!p.records[i].is_core);
            assert!(p.index.doc_length(i).is_none());
            assert!(p.supervision.targets.iter().all(|t| t[i].is_none()));
        }
        assert_eq!(p.kind, ModelKind::HiCfl { levels: 2 });
        assert_eq!(p.validation.len(), plan.validation.len());
    }

    #[test]
    fn pu_mode_appends_the_target_level() {
        let ds = small();
        let labels = ds.hierarchy.label(&ds.records).unwrap().truncated(1);
        let positives: Vec<String> = ds.deepest_core_positives()[..10]
            .iter()
            .map(|&i| ds.records[i].surface.clone())
            .collect();
        let setup = Setup {
            mode: Mode::Pu,
            ..Setup::default()
        };
        let p = prepare(&ds.records, &ds.vectors, &labels, &positives, &setup).unwrap();
        assert_eq!(p.kind, ModelKind::HiCfl { levels: 2 });
        assert_eq!(p.target_level, 1);
        let target = &p.supervision.targets[1];
        assert_eq!(target.iter().filter(|t| **t == Some(true)).count(), 10);
        let pu = p.pu.as_ref().unwrap();
        assert!(pu.reliable_negatives.iter().all(|&i| target[i] == Some(false)));
        assert!(pu.unlabeled.iter().all(|&i| target[i].is_none()));
    }

    #[test]
    fn relative_paths_round_trip() {
        let cfg = RunConfig {
            terms: "/data/set/terms.tsv".into(),
            ..RunConfig::default()
        };
        let rel = cfg.relative_to(Path::new("/data/run1")).unwrap();
        assert_eq!(rel.terms, PathBuf::from("../set/terms.tsv"));
        let back = rel.resolved_from(Path::new("/data/run1")).unwrap();
        assert_eq!(back.terms, PathBuf::from("/data/run1/../set/terms.tsv"));
    }

    #[test]
    fn mode_parses() {
        assert_eq!("HiCFL".parse::<Mode>().unwrap(), Mode::HiCfl);
        assert!("gcn".parse::<Mode>().is_err());
    }
}

//! Planted-structure datasets that stand in for an encyclopedia + corpus.
//!
//! Terms fall into nested domains (e.g. `cs ⊃ ai ⊃ ml`) plus a background class
//! that belongs to none. Every class owns a small vocabulary. A term's surface
//! is built from words of its class, and a core term's description mentions the
//! surfaces of other terms, mostly from its own class. Word vectors place each
//! class near a signed corner of the level axes: the broadest axis is noise free
//! by default (see `broad_jitter`), the deeper ones are jittered, so narrow
//! domains are hard to read off the features alone and the mention graph
//! carries the missing signal.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{read_to_string, write_term_records, write_word_vectors, CategoryTree, TermRecord, WordVectorTable};
use crate::annotation::{write_hierarchy_config, DomainHierarchy, LevelConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// `(name, count)` per level, broadest first; counts are nested positives.
    pub levels: Vec<(String, usize)>,
    /// Terms outside every domain.
    pub background: usize,
    pub core_ratio: f64,
    pub dim: usize,
    /// Probability that a surface word or a description mention is drawn from
    /// another class.
    pub noise: f64,
    pub vocab_per_class: usize,
    pub filler_vocab: usize,
    pub mentions_per_doc: usize,
    pub filler_per_doc: usize,
    /// Standard deviation of word-vector jitter on the level axes below the first.
    pub level_jitter: f64,
    /// Standard deviation of word-vector jitter on the first level axis.
    pub broad_jitter: f64,
    /// Standard deviation of the remaining (uninformative) dimensions.
    pub nuisance_jitter: f64,
    pub categories_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            levels: vec![("cs".into(), 800), ("ai".into(), 300), ("ml".into(), 120)],
            background: 800,
            core_ratio: 0.5,
            dim: 32,
            noise: 0.1,
            vocab_per_class: 60,
            filler_vocab: 200,
            mentions_per_doc: 8,
            filler_per_doc: 24,
            level_jitter: 2.0,
            broad_jitter: 0.0,
            nuisance_jitter: 1.0,
            categories_per_class: 4,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    /// Spec with the given nested level sizes and default everything else; the
    /// background count follows the broadest level.
    pub fn with_levels(levels: &[(&str, usize)]) -> Self {
        SyntheticSpec {
            levels: levels.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
            background: levels.first().map_or(0, |l| l.1),
            ..Default::default()
        }
    }

    /// Parses `key=value` lines. `levels` is written `cs:800,ai:300,ml:120`.
    pub fn parse(content: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        let mut background_set = false;
        for (lineno, line) in content.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Format(format!("line {}: bad value for `{key}`: `{value}`", lineno + 1));
            match key {
                "levels" => {
                    spec.levels = value
                        .split(',')
                        .map(|item| {
                            let (n, c) = item.split_once(':').ok_or_else(bad)?;
                            Ok((n.trim().to_string(), c.trim().parse().map_err(|_| bad())?))
                        })
                        .collect::<Result<_>>()?;
                }
                "background" => {
                    spec.background = value.parse().map_err(|_| bad())?;
                    background_set = true;
                }
                "core_ratio" => spec.core_ratio = value.parse().map_err(|_| bad())?,
                "dim" | "d" => spec.dim = value.parse().map_err(|_| bad())?,
                "noise" => spec.noise = value.parse().map_err(|_| bad())?,
                "vocab_per_class" | "vocab" => spec.vocab_per_class = value.parse().map_err(|_| bad())?,
                "filler_vocab" => spec.filler_vocab = value.parse().map_err(|_| bad())?,
                "mentions_per_doc" => spec.mentions_per_doc = value.parse().map_err(|_| bad())?,
                "filler_per_doc" => spec.filler_per_doc = value.parse().map_err(|_| bad())?,
                "level_jitter" => spec.level_jitter = value.parse().map_err(|_| bad())?,
                "broad_jitter" => spec.broad_jitter = value.parse().map_err(|_| bad())?,
                "nuisance_jitter" => spec.nuisance_jitter = value.parse().map_err(|_| bad())?,
                "categories_per_class" => spec.categories_per_class = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::Format(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        if !background_set {
            spec.background = spec.levels.first().map_or(0, |l| l.1);
        }
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("synthetic depth must be at least 1".into()));
        }
        if !(self.core_ratio > 0.0 && self.core_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "core ratio {} outside (0, 1]",
                self.core_ratio
            )));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidArgument(format!("noise {} outside [0, 1)", self.noise)));
        }
        if self.dim < self.levels.len() {
            return Err(Error::InvalidArgument(format!(
                "dimension {} smaller than the number of levels",
                self.dim
            )));
        }
        if self.vocab_per_class < 2 || self.filler_vocab == 0 {
            return Err(Error::InvalidArgument("vocabulary too small".into()));
        }
        if self.levels.windows(2).any(|w| w[1].1 > w[0].1) || self.levels.iter().any(|l| l.1 == 0) {
            return Err(Error::InvalidArgument("level counts must be positive and non-increasing".into()));
        }
        let mut names = HashSet::new();
        for (name, _) in &self.levels {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) || !names.insert(name) {
                return Err(Error::InvalidArgument(format!("bad level name `{name}`")));
            }
            if name == "bg" || name == "w" {
                return Err(Error::InvalidArgument(format!("reserved level name `{name}`")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub records: Vec<TermRecord>,
    pub tree: CategoryTree,
    pub vectors: WordVectorTable,
    pub hierarchy_config: Vec<LevelConfig>,
    pub hierarchy: DomainHierarchy,
    /// Ground-truth membership per level for every node, core and fringe.
    pub truth: Vec<Vec<bool>>,
    /// Deepest level each term belongs to plus one; 0 for background.
    pub classes: Vec<usize>,
}

impl SyntheticDataset {
    /// Writes `terms.tsv`, `docs/`, `vectors.txt`, `tree.tsv`, `hierarchy.tsv` and
    /// `truth.tsv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_term_records(dir.join("terms.tsv"), &self.records)?;
        write_word_vectors(dir.join("vectors.txt"), &self.vectors)?;
        self.tree.write(dir.join("tree.tsv"))?;
        write_hierarchy_config(dir.join("hierarchy.tsv"), &self.hierarchy_config)?;
        let mut truth = String::new();
        for node in 0..self.records.len() {
            for (level, labels) in self.truth.iter().enumerate() {
                truth.push_str(&format!("{node}\t{level}\t{}\n", u8::from(labels[node])));
            }
        }
        let p = dir.join("truth.tsv");
        std::fs::write(&p, truth).map_err(|e| Error::io(&p, e))
    }

    /// Core terms positive at the deepest level, in id order.
    pub fn deepest_core_positives(&self) -> Vec<usize> {
        let last = self.truth.len() - 1;
        self.records
            .iter()
            .filter(|r| r.is_core && self.truth[last][r.id])
            .map(|r| r.id)
            .collect()
    }
}

fn class_prefix(spec: &SyntheticSpec, class: usize) -> &str {
    if class == 0 {
        "bg"
    } else {
        &spec.levels[class - 1].0
    }
}

fn pick_class(rng: &mut ChaCha8Rng, own: usize, classes: usize, noise: f64) -> usize {
    if classes > 1 && rng.random::<f64>() < noise {
        let other = rng.random_range(0..classes - 1);
        if other >= own {
            other + 1
        } else {
            other
        }
    } else {
        own
    }
}

pub fn generate_synthetic_dataset(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = spec.levels.len();
    let n_classes = depth + 1;

    let mut class_counts = vec![spec.background];
    for l in 0..depth {
        let next = spec.levels.get(l + 1).map_or(0, |x| x.1);
        class_counts.push(spec.levels[l].1 - next);
    }

    // Class and core flag per term, then shuffled so ids interleave classes.
    let mut slots: Vec<(usize, bool)> = Vec::new();
    for (class, &count) in class_counts.iter().enumerate() {
        let cores = ((count as f64) * spec.core_ratio).round() as usize;
        slots.extend((0..count).map(|i| (class, i < cores)));
    }
    slots.shuffle(&mut rng);
    let n = slots.len();
    if n == 0 {
        return Err(Error::InvalidArgument("synthetic dataset would be empty".into()));
    }

    let vocab: Vec<Vec<String>> = (0..n_classes)
        .map(|c| (0..spec.vocab_per_class).map(|j| format!("{}{j}", class_prefix(spec, c))).collect())
        .collect();
    let filler: Vec<String> = (0..spec.filler_vocab).map(|j| format!("w{j}")).collect();

    // Surfaces: two class words, a third when pairs run out.
    let mut used = HashSet::new();
    let mut surfaces = Vec::with_capacity(n);
    for &(class, _) in &slots {
        let mut attempt = 0;
        let surface = loop {
            let words = if attempt < 50 { 2 } else { 3 };
            let s: Vec<&str> = (0..words)
                .map(|_| {
                    let c = pick_class(&mut rng, class, n_classes, spec.noise);
                    vocab[c][rng.random_range(0..vocab[c].len())].as_str()
                })
                .collect();
            if s.windows(2).any(|w| w[0] == w[1]) {
                attempt += 1;
                continue;
            }
            let s = s.join(" ");
            if used.insert(s.clone()) {
                break s;
            }
            attempt += 1;
            if attempt > 10_000 {
                return Err(Error::InvalidArgument("vocabulary too small for unique surfaces".into()));
            }
        };
        surfaces.push(surface);
    }

    let members: Vec<Vec<usize>> = (0..n_classes)
        .map(|c| (0..n).filter(|&i| slots[i].0 == c).collect())
        .collect();

    // Category tree: level roots chained, leaf topics under each class's root,
    // background topics under a separate root.
    let mut tree = CategoryTree::new();
    for l in 1..depth {
        tree.add_edge(&spec.levels[l - 1].0, &spec.levels[l].0)?;
    }
    let topic = |c: usize, j: usize| format!("{}-topic-{j}", class_prefix(spec, c));
    for c in 0..n_classes {
        let parent = if c == 0 { "other" } else { spec.levels[c - 1].0.as_str() };
        for j in 0..spec.categories_per_class.max(1) {
            tree.add_edge(parent, &topic(c, j))?;
        }
    }

    let mut records = Vec::with_capacity(n);
    for (id, &(class, is_core)) in slots.iter().enumerate() {
        if !is_core {
            records.push(TermRecord::fringe(id, &surfaces[id]));
            continue;
        }
        let mut segments: Vec<String> = Vec::new();
        for _ in 0..spec.mentions_per_doc {
            let c = pick_class(&mut rng, class, n_classes, spec.noise);
            let pool = if members[c].is_empty() { &members[class] } else { &members[c] };
            let mut target = pool[rng.random_range(0..pool.len())];
            if target == id && pool.len() > 1 {
                target = pool[(pool.iter().position(|&t| t == id).unwrap() + 1) % pool.len()];
            }
            if target != id {
                segments.push(surfaces[target].clone());
            }
        }
        for _ in 0..spec.filler_per_doc {
            if rng.random::<bool>() {
                segments.push(filler[rng.random_range(0..filler.len())].clone());
            } else {
                let c = pick_class(&mut rng, class, n_classes, spec.noise);
                segments.push(vocab[c][rng.random_range(0..vocab[c].len())].clone());
            }
        }
        segments.shuffle(&mut rng);
        let description = format!("{} . {}", surfaces[id], segments.join(" . "));
        let n_cats = 1 + rng.random_range(0..2usize);
        let mut cats: Vec<String> = (0..n_cats)
            .map(|_| topic(class, rng.random_range(0..spec.categories_per_class.max(1))))
            .collect();
        cats.sort();
        cats.dedup();
        let cat_refs: Vec<&str> = cats.iter().map(String::as_str).collect();
        records.push(TermRecord::core(id, &surfaces[id], &description, &cat_refs));
    }

    // Word vectors.
    let jitter = Normal::new(0.0, spec.level_jitter.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let broad = Normal::new(0.0, spec.broad_jitter.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let nuisance = Normal::new(0.0, spec.nuisance_jitter.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut vectors = WordVectorTable::new(spec.dim)?;
    for (c, words) in vocab.iter().enumerate() {
        for w in words {
            let mut v = vec![0.0; spec.dim];
            for (l, x) in v.iter_mut().enumerate().take(depth) {
                let sign = if c > l { 1.0 } else { -1.0 };
                *x = sign + match l {
                    0 if spec.broad_jitter > 0.0 => broad.sample(&mut rng),
                    0 => 0.0,
                    _ => jitter.sample(&mut rng),
                };
            }
            for x in v.iter_mut().skip(depth) {
                *x = nuisance.sample(&mut rng);
            }
            vectors.insert(w.clone(), v)?;
        }
    }
    for w in &filler {
        let v = (0..spec.dim).map(|_| nuisance.sample(&mut rng)).collect();
        vectors.insert(w.clone(), v)?;
    }

    let hierarchy_config: Vec<LevelConfig> = spec
        .levels
        .iter()
        .enumerate()
        .map(|(l, (name, _))| LevelConfig {
            name: name.clone(),
            root: name.clone(),
            depth: if l == 0 { 3 } else { 2 },
        })
        .collect();
    let hierarchy = DomainHierarchy::resolve(&hierarchy_config, &tree)?;
    let classes: Vec<usize> = slots.iter().map(|s| s.0).collect();
    let truth = (0..depth).map(|l| classes.iter().map(|&c| c > l).collect()).collect();

    Ok(SyntheticDataset {
        records,
        tree,
        vectors,
        hierarchy_config,
        hierarchy,
        truth,
        classes,
    })
}

/// Class sizes by name, for reporting.
pub fn class_sizes(ds: &SyntheticDataset, spec: &SyntheticSpec) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for &c in &ds.classes {
        *out.entry(class_prefix(spec, c).to_string()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            levels: vec![("cs".into(), 80), ("ai".into(), 30), ("ml".into(), 12)],
            background: 80,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_a_fixed_seed() {
        let a = generate_synthetic_dataset(&small(), 7).unwrap();
        let b = generate_synthetic_dataset(&small(), 7).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.vectors, b.vectors);
        assert_eq!(a.truth, b.truth);
        let c = generate_synthetic_dataset(&small(), 8).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn labels_are_nested() {
        let ds = generate_synthetic_dataset(&small(), 3).unwrap();
        for l in 1..ds.truth.len() {
            for i in 0..ds.records.len() {
                assert!(!ds.truth[l][i] || ds.truth[l - 1][i]);
            }
        }
        assert_eq!(ds.truth[2].iter().filter(|&&y| y).count(), 12);
        assert_eq!(ds.truth[0].iter().filter(|&&y| y).count(), 80);
    }

    #[test]
    fn annotation_recovers_core_truth() {
        let ds = generate_synthetic_dataset(&small(), 5).unwrap();
        let labels = ds.hierarchy.label(&ds.records).unwrap();
        for r in ds.records.iter().filter(|r| r.is_core) {
            for l in 0..3 {
                assert_eq!(labels.get(l, r.id), Some(ds.truth[l][r.id]));
            }
        }
    }

    #[test]
    fn core_ratio_and_depth_are_validated() {
        let mut s = small();
        s.core_ratio = 0.0;
        assert!(generate_synthetic_dataset(&s, 1).is_err());
        s.core_ratio = 1.5;
        assert!(generate_synthetic_dataset(&s, 1).is_err());
        let mut s = small();
        s.levels.clear();
        assert!(generate_synthetic_dataset(&s, 1).is_err());
    }

    #[test]
    fn parses_key_value_config() {
        let s = SyntheticSpec::parse("levels=cs:800, ai:300,ml:120\ncore_ratio=0.5\nd=32\nnoise=0.05 # comment\nseed=7\n").unwrap();
        assert_eq!(s.levels[1], ("ai".to_string(), 300));
        assert_eq!(s.background, 800);
        assert_eq!(s.dim, 32);
        assert_eq!(s.noise, 0.05);
        assert!(SyntheticSpec::parse("bogus=1").is_err());
    }
}

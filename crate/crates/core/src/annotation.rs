//! Automatic labeling of core terms from category membership, hierarchy label
//! matrices, and positive-unlabeled label sets with reliable negatives.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::data::{read_to_string, CategoryTree, TermRecord};
use crate::error::{Error, Result};
use crate::text::normalize_surface;

/// One level of a domain hierarchy such as CS → AI → ML.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainLevel {
    pub name: String,
    pub root: String,
    pub depth: usize,
    pub gold: BTreeSet<String>,
}

/// Ordered levels, broadest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainHierarchy {
    pub levels: Vec<DomainLevel>,
}

/// `level-name<TAB>root-category<TAB>depth`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelConfig {
    pub name: String,
    pub root: String,
    pub depth: usize,
}

impl DomainHierarchy {
    /// Collects the gold subcategories of every level from the tree.
    pub fn resolve(config: &[LevelConfig], tree: &CategoryTree) -> Result<Self> {
        if config.is_empty() {
            return Err(Error::InvalidArgument("hierarchy needs at least one level".into()));
        }
        let levels = config
            .iter()
            .map(|c| {
                Ok(DomainLevel {
                    name: c.name.clone(),
                    root: normalize_surface(&c.root),
                    depth: c.depth,
                    gold: collect_gold_subcategories(tree, &c.root, c.depth)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DomainHierarchy { levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Labels every level and repairs monotonicity.
    pub fn label(&self, records: &[TermRecord]) -> Result<LabelMatrix> {
        let raw = self.levels.iter().map(|l| annotate(records, &l.gold)).collect();
        build_label_matrix(raw, self.depth())
    }
}

pub fn load_hierarchy_config(path: impl AsRef<Path>) -> Result<Vec<LevelConfig>> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let mut levels = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(path, lineno, "expected `level-name<TAB>root-category<TAB>depth`"));
        }
        let depth = cols[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(path, lineno, format!("bad depth `{}`", cols[2])))?;
        levels.push(LevelConfig {
            name: cols[0].trim().to_string(),
            root: cols[1].trim().to_string(),
            depth,
        });
    }
    if levels.is_empty() {
        return Err(Error::Format(format!("{}: no hierarchy levels", path.display())));
    }
    Ok(levels)
}

pub fn write_hierarchy_config(path: impl AsRef<Path>, levels: &[LevelConfig]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for l in levels {
        let _ = writeln!(out, "{}\t{}\t{}", l.name, l.root, l.depth);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Breadth-first collection of categories within `depth` edges of `root`.
pub fn collect_gold_subcategories(tree: &CategoryTree, root: &str, depth: usize) -> Result<BTreeSet<String>> {
    Ok(tree.descendants_within(root, depth)?.into_iter().collect())
}

/// A core term is positive when its surface or any listed category is gold.
/// Fringe terms get `None`.
pub fn annotate(records: &[TermRecord], gold: &BTreeSet<String>) -> Vec<Option<bool>> {
    records
        .iter()
        .map(|r| {
            r.is_core.then(|| {
                gold.contains(&normalize_surface(&r.surface))
                    || r.categories.iter().any(|c| gold.contains(&normalize_surface(c)))
            })
        })
        .collect()
}

/// Per-level binary labels over core terms, monotone down the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    labels: Vec<Vec<bool>>,
    labeled: Vec<bool>,
    /// How many raw labels were demoted by the monotonicity repair.
    pub demoted: usize,
}

impl LabelMatrix {
    pub fn levels(&self) -> usize {
        self.labels.len()
    }

    pub fn node_count(&self) -> usize {
        self.labeled.len()
    }

    pub fn is_labeled(&self, node: usize) -> bool {
        self.labeled[node]
    }

    /// Label of `node` at `level`; `None` for unlabeled (fringe) nodes.
    pub fn get(&self, level: usize, node: usize) -> Option<bool> {
        self.labeled[node].then(|| self.labels[level][node])
    }

    /// Dense 0/1 vector for a level; unlabeled nodes read as 0.
    pub fn level(&self, level: usize) -> &[bool] {
        &self.labels[level]
    }

    pub fn labeled_ids(&self) -> Vec<usize> {
        (0..self.labeled.len()).filter(|&i| self.labeled[i]).collect()
    }

    /// Restricts labels to the first `levels` levels.
    pub fn truncated(&self, levels: usize) -> LabelMatrix {
        LabelMatrix {
            labels: self.labels[..levels].to_vec(),
            labeled: self.labeled.clone(),
            demoted: self.demoted,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for node in 0..self.node_count() {
            if !self.labeled[node] {
                continue;
            }
            for (level, labels) in self.labels.iter().enumerate() {
                let _ = writeln!(out, "{node}\t{level}\t{}", u8::from(labels[node]));
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Stacks per-level labels and forces `y(l+1) <= y(l)`.
pub fn build_label_matrix(raw: Vec<Vec<Option<bool>>>, expected_levels: usize) -> Result<LabelMatrix> {
    if raw.len() != expected_levels {
        return Err(Error::InvalidArgument(format!(
            "{} label levels given for a hierarchy of depth {expected_levels}",
            raw.len()
        )));
    }
    let Some(first) = raw.first() else {
        return Err(Error::InvalidArgument("no label levels".into()));
    };
    let n = first.len();
    let labeled: Vec<bool> = first.iter().map(Option::is_some).collect();
    for (l, level) in raw.iter().enumerate() {
        if level.len() != n {
            return Err(Error::Dimension(format!("level {l} has {} labels, expected {n}", level.len())));
        }
        if level.iter().zip(&labeled).any(|(y, &m)| y.is_some() != m) {
            return Err(Error::InvalidArgument(format!("level {l} labels a different node set")));
        }
    }
    let mut labels: Vec<Vec<bool>> = raw
        .into_iter()
        .map(|level| level.into_iter().map(|y| y.unwrap_or(false)).collect())
        .collect();
    let mut demoted = 0;
    for l in 1..labels.len() {
        let (parents, rest) = labels.split_at_mut(l);
        let parent = &parents[l - 1];
        for (y, &p) in rest[0].iter_mut().zip(parent) {
            if *y && !p {
                *y = false;
                demoted += 1;
            }
        }
    }
    Ok(LabelMatrix {
        labels,
        labeled,
        demoted,
    })
}

/// Reads `term-id<TAB>level<TAB>0|1` lines into per-level optional labels over
/// `node_count` nodes.
pub fn load_labels(path: impl AsRef<Path>, node_count: usize) -> Result<Vec<Vec<Option<bool>>>> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let mut levels: Vec<Vec<Option<bool>>> = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parsed = (cols.len() == 3)
            .then(|| {
                Some((
                    cols[0].parse::<usize>().ok()?,
                    cols[1].parse::<usize>().ok()?,
                    match cols[2] {
                        "0" => false,
                        "1" => true,
                        _ => return None,
                    },
                ))
            })
            .flatten();
        let Some((node, level, y)) = parsed else {
            return Err(Error::parse(path, lineno, "expected `term-id<TAB>level<TAB>0|1`"));
        };
        if node >= node_count {
            return Err(Error::parse(path, lineno, format!("term id {node} out of range")));
        }
        while levels.len() <= level {
            levels.push(vec![None; node_count]);
        }
        levels[level][node] = Some(y);
    }
    Ok(levels)
}

/// Supervision for a target domain known only through a few positives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PULabelSet {
    /// Index the target occupies in the hierarchy (one below the last labeled level).
    pub target_level: usize,
    pub positives: BTreeSet<usize>,
    pub reliable_negatives: BTreeSet<usize>,
    pub unlabeled: BTreeSet<usize>,
}

/// Positives are the given surfaces; every core term negative at the deepest
/// labeled level becomes a reliable negative; other core terms stay unlabeled.
pub fn build_pu_labels<S: AsRef<str>>(
    matrix: &LabelMatrix,
    records: &[TermRecord],
    positives: &[S],
) -> Result<PULabelSet> {
    if matrix.levels() == 0 {
        return Err(Error::InvalidArgument("PU learning needs at least one labeled level".into()));
    }
    let lookup: HashMap<&str, usize> = records.iter().map(|r| (r.surface.as_str(), r.id)).collect();
    let mut misses = Vec::new();
    let mut pos = BTreeSet::new();
    for s in positives {
        let key = normalize_surface(s.as_ref());
        match lookup.get(key.as_str()) {
            Some(&id) => {
                pos.insert(id);
            }
            None => misses.push(key),
        }
    }
    if !misses.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "positive terms not found: {}",
            misses.join(", ")
        )));
    }
    let last = matrix.levels() - 1;
    let mut reliable_negatives = BTreeSet::new();
    let mut unlabeled = BTreeSet::new();
    for id in matrix.labeled_ids() {
        if pos.contains(&id) {
            continue;
        }
        if matrix.get(last, id) == Some(false) {
            reliable_negatives.insert(id);
        } else {
            unlabeled.insert(id);
        }
    }
    Ok(PULabelSet {
        target_level: matrix.levels(),
        positives: pos,
        reliable_negatives,
        unlabeled,
    })
}

/// Reads one surface per line.
pub fn load_positives(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let seen: &mut HashSet<String> = &mut HashSet::new();
    Ok(content
        .lines()
        .map(normalize_surface)
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect())
}

//! The core-anchored semantic graph: every term links in from the core terms
//! retrieved for its surface, first by exact phrase match and then, when too
//! few links were found, by plain relevance ranking.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{read_to_string, TermRecord};
use crate::error::{Error, Result};
use crate::index::CoreIndex;
use crate::sparse::CsrMatrix;
use crate::text::normalize_surface;

pub const DEFAULT_K: usize = 5;

/// Directed graph whose edges run from a retrieved core term to the query term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreFringeGraph {
    k: usize,
    /// Sources linking into each node, in retrieval order.
    in_links: Vec<Vec<usize>>,
    /// Whether the relevance-ranked second pass ran for the node.
    backfilled: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct GraphHeader {
    format: String,
    version: u32,
    n: usize,
    k: usize,
    backfilled: Vec<usize>,
}

/// Incoming links for one surface by the two-pass rule.
fn link_term(index: &CoreIndex, surface: &str, self_id: usize, k: usize) -> Result<(Vec<usize>, bool)> {
    let mut links = Vec::new();
    let exact = match index.search(surface, true, 2 * k) {
        Ok(hits) => hits,
        Err(Error::EmptyQuery) => {
            log::warn!("term `{surface}` has no indexable tokens; left unlinked");
            return Ok((links, true));
        }
        Err(e) => return Err(e),
    };
    links.extend(exact.into_iter().map(|(u, _)| u).filter(|&u| u != self_id));
    if links.len() >= k {
        return Ok((links, false));
    }
    for (u, _) in index.search(surface, false, 2 * k)? {
        if links.len() >= k {
            break;
        }
        if u != self_id && !links.contains(&u) {
            links.push(u);
        }
    }
    Ok((links, true))
}

impl CoreFringeGraph {
    pub fn build(records: &[TermRecord], index: &CoreIndex, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.id != i {
                return Err(Error::Validation(format!("record {i} has id {}", r.id)));
            }
        }
        let mut in_links = Vec::with_capacity(records.len());
        let mut backfilled = Vec::with_capacity(records.len());
        for r in records {
            let (links, bf) = link_term(index, &r.surface, r.id, k)?;
            in_links.push(links);
            backfilled.push(bf);
        }
        for &u in index.core_ids() {
            if u >= records.len() {
                return Err(Error::Validation(format!("index refers to core id {u} beyond the inventory")));
            }
        }
        Ok(CoreFringeGraph {
            k,
            in_links,
            backfilled,
        })
    }

    /// Adds an unseen term as a fringe node and links it with the same two-pass
    /// rule. Returns the existing id when the surface is already present.
    pub fn attach_fringe(&mut self, records: &mut Vec<TermRecord>, index: &CoreIndex, surface: &str) -> Result<usize> {
        if records.len() != self.node_count() {
            return Err(Error::Validation(format!(
                "graph has {} nodes but {} records were given",
                self.node_count(),
                records.len()
            )));
        }
        let surface = normalize_surface(surface);
        if surface.is_empty() {
            return Err(Error::EmptyQuery);
        }
        if let Some(r) = records.iter().find(|r| r.surface == surface) {
            return Ok(r.id);
        }
        let id = records.len();
        let (links, bf) = link_term(index, &surface, id, self.k)?;
        records.push(TermRecord::fringe(id, &surface));
        self.in_links.push(links);
        self.backfilled.push(bf);
        Ok(id)
    }

    pub fn node_count(&self) -> usize {
        self.in_links.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn in_links(&self, node: usize) -> &[usize] {
        &self.in_links[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_links[node].len()
    }

    pub fn backfilled(&self, node: usize) -> bool {
        self.backfilled[node]
    }

    /// All `(src, dst)` edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .in_links
            .iter()
            .enumerate()
            .flat_map(|(dst, srcs)| srcs.iter().map(move |&s| (s, dst)))
            .collect();
        e.sort_unstable();
        e
    }

    /// Undirected neighbor sets (no self loops), sorted.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.node_count()];
        for (s, d) in self.edges() {
            if s != d {
                sets[s].insert(d);
                sets[d].insert(s);
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Symmetric renormalized adjacency with self loops:
    /// `Â_ij = 1 / sqrt((deg_i + 1)(deg_j + 1))`.
    pub fn normalize(&self) -> NormAdjacency {
        let nbrs = self.neighbors();
        let scale: Vec<f64> = nbrs.iter().map(|n| 1.0 / ((n.len() + 1) as f64).sqrt()).collect();
        let rows = nbrs
            .iter()
            .enumerate()
            .map(|(i, ns)| {
                let mut row = Vec::with_capacity(ns.len() + 1);
                row.push((i, scale[i] * scale[i]));
                row.extend(ns.iter().map(|&j| (j, scale[i] * scale[j])));
                row
            })
            .collect();
        NormAdjacency {
            matrix: CsrMatrix::from_rows(self.node_count(), rows),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let header = GraphHeader {
            format: "termrel-graph".into(),
            version: 1,
            n: self.node_count(),
            k: self.k,
            backfilled: (0..self.node_count()).filter(|&i| self.backfilled[i]).collect(),
        };
        let mut out = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        out.push('\n');
        for (dst, srcs) in self.in_links.iter().enumerate() {
            for s in srcs {
                let _ = writeln!(out, "{s}\t{dst}");
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = read_to_string(path)?;
        let mut lines = content.lines();
        let header: GraphHeader = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::parse(path, 1, format!("bad graph header: {e}")))?;
        if header.format != "termrel-graph" || header.version != 1 {
            return Err(Error::parse(path, 1, "unsupported graph format"));
        }
        let mut in_links = vec![Vec::new(); header.n];
        let mut backfilled = vec![false; header.n];
        for &b in &header.backfilled {
            *backfilled
                .get_mut(b)
                .ok_or_else(|| Error::parse(path, 1, "backfill flag out of range"))? = true;
        }
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let (s, d) = line
                .split_once('\t')
                .and_then(|(s, d)| Some((s.parse::<usize>().ok()?, d.parse::<usize>().ok()?)))
                .filter(|&(s, d)| s < header.n && d < header.n && s != d)
                .ok_or_else(|| Error::parse(path, lineno, "expected `src<TAB>dst` within range"))?;
            in_links[d].push(s);
        }
        Ok(CoreFringeGraph {
            k: header.k,
            in_links,
            backfilled,
        })
    }
}

/// `Â`, the symmetric normalized adjacency with self loops.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdjacency {
    pub matrix: CsrMatrix,
}

impl NormAdjacency {
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn isolated_node_has_unit_self_loop() {
        let g = CoreFringeGraph {
            k: 5,
            in_links: vec![vec![]],
            backfilled: vec![true],
        };
        let a = g.normalize();
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.matrix.nnz(), 1);
    }

    #[test]
    fn two_node_edge_normalizes_to_halves() {
        let g = CoreFringeGraph {
            k: 5,
            in_links: vec![vec![], vec![0]],
            backfilled: vec![true, true],
        };
        let a = g.normalize();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((a.get(i, j) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn exhausted_backfill_sets_flag() {
        let records = vec![
            TermRecord::core(0, "alpha", "something about zeta", &[]),
            TermRecord::core(1, "beta", "more zeta here", &[]),
            TermRecord::core(2, "gamma", "unrelated words only", &[]),
            TermRecord::fringe(3, "zeta function"),
        ];
        let idx = CoreIndex::build(&records).unwrap();
        let g = CoreFringeGraph::build(&records, &idx, 5).unwrap();
        assert_eq!(g.in_degree(3), 2);
        assert!(g.backfilled(3));
    }

    #[test]
    fn k_must_be_positive() {
        let records = vec![TermRecord::core(0, "a", "a b", &[])];
        let idx = CoreIndex::build(&records).unwrap();
        assert!(CoreFringeGraph::build(&records, &idx, 0).is_err());
    }

    #[test]
    fn attaching_a_known_surface_is_idempotent() {
        let mut records = vec![
            TermRecord::core(0, "alpha", "alpha beta", &[]),
            TermRecord::fringe(1, "beta"),
        ];
        let idx = CoreIndex::build(&records).unwrap();
        let mut g = CoreFringeGraph::build(&records, &idx, 5).unwrap();
        let before = g.clone();
        assert_eq!(g.attach_fringe(&mut records, &idx, "  Beta ").unwrap(), 1);
        assert_eq!(g, before);
        assert_eq!(records.len(), 2);
        let id = g.attach_fringe(&mut records, &idx, "alpha gamma").unwrap();
        assert_eq!(id, 2);
        assert_eq!(g.in_links(2), &[0]);
    }

    #[test]
    fn text_round_trip() {
        let records = vec![
            TermRecord::core(0, "alpha", "alpha beta gamma", &[]),
            TermRecord::core(1, "beta", "beta gamma", &[]),
            TermRecord::fringe(2, "gamma"),
        ];
        let idx = CoreIndex::build(&records).unwrap();
        let g = CoreFringeGraph::build(&records, &idx, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.tsv");
        g.write(&p).unwrap();
        assert_eq!(CoreFringeGraph::load(&p).unwrap(), g);
    }

    proptest! {
        #[test]
        fn normalized_adjacency_is_symmetric_with_matching_pattern(
            n in 1usize..25,
            raw in prop::collection::vec((0usize..25, 0usize..25), 0..60),
        ) {
            let mut in_links = vec![Vec::new(); n];
            for (s, d) in raw {
                let (s, d) = (s % n, d % n);
                if s != d && !in_links[d].contains(&s) {
                    in_links[d].push(s);
                }
            }
            let g = CoreFringeGraph { k: 5, in_links, backfilled: vec![false; n] };
            let a = g.normalize();
            let nb = g.neighbors();
            for (i, nb_i) in nb.iter().enumerate() {
                prop_assert!(a.get(i, i) > 0.0);
                for j in 0..n {
                    prop_assert_eq!(a.get(i, j), a.get(j, i));
                    let linked = i == j || nb_i.contains(&j);
                    prop_assert_eq!(a.get(i, j) != 0.0, linked);
                }
            }
        }
    }
}

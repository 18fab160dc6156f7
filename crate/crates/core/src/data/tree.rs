use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::read_to_string;
use crate::error::{Error, Result};
use crate::text::normalize_surface;

/// Category graph given as parent→child edges. Called a tree, but cycles and
/// multiple parents are accepted; traversals track visited nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryTree {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    children: Vec<Vec<usize>>,
}

impl CategoryTree {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.lookup.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.lookup.insert(name.to_string(), i);
        self.children.push(Vec::new());
        i
    }

    /// Adds a parent→child edge; names are normalized like term surfaces.
    pub fn add_edge(&mut self, parent: &str, child: &str) -> Result<()> {
        let parent = normalize_surface(parent);
        let child = normalize_surface(child);
        if parent.is_empty() || child.is_empty() {
            return Err(Error::Validation("blank category name".into()));
        }
        if parent == child {
            return Err(Error::Validation(format!("self-edge on category `{parent}`")));
        }
        let p = self.intern(&parent);
        let c = self.intern(&child);
        if self.children[p].contains(&c) {
            return Err(Error::Validation(format!("duplicate edge `{parent}` -> `{child}`")));
        }
        self.children[p].push(c);
        self.edges.push((p, c));
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains_key(&normalize_surface(name))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .iter()
            .map(|&(p, c)| (self.names[p].as_str(), self.names[c].as_str()))
    }

    /// Names reachable from `root` within `depth` edges (breadth first), root included.
    pub fn descendants_within(&self, root: &str, depth: usize) -> Result<HashSet<String>> {
        let root = normalize_surface(root);
        let &start = self
            .lookup
            .get(&root)
            .ok_or_else(|| Error::InvalidArgument(format!("root category `{root}` not in tree")))?;
        let mut seen = vec![false; self.names.len()];
        seen[start] = true;
        let mut frontier = vec![start];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &node in &frontier {
                for &child in &self.children[node] {
                    if !seen[child] {
                        seen[child] = true;
                        next.push(child);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.names[i].clone())
            .collect())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (p, c) in self.edges() {
            let _ = writeln!(out, "{p}\t{c}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Loads a `parent<TAB>child` edge list.
pub fn load_category_tree(path: impl AsRef<Path>) -> Result<CategoryTree> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let mut tree = CategoryTree::new();
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(path, lineno, "expected `parent<TAB>child`"));
        }
        tree.add_edge(cols[0], cols[1]).map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}:{lineno}: {m}", path.display())),
            other => other,
        })?;
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(content: &str) -> Result<CategoryTree> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tree.tsv");
        std::fs::write(&p, content).unwrap();
        load_category_tree(&p)
    }

    #[test]
    fn chain_has_three_nodes_two_edges() {
        let t = load_str("A\tB\nB\tC\n").unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.edge_count(), 2);
    }

    #[test]
    fn cycle_is_accepted_and_traversal_terminates() {
        let t = load_str("A\tB\nB\tA\n").unwrap();
        let got = t.descendants_within("A", 5).unwrap();
        assert_eq!(got, ["a", "b"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn duplicate_edge_rejected() {
        assert!(matches!(load_str("A\tB\nA\tB\n"), Err(Error::Validation(_))));
    }

    #[test]
    fn self_edge_and_blank_rejected() {
        assert!(matches!(load_str("A\tA\n"), Err(Error::Validation(_))));
        assert!(matches!(load_str("A\t \n"), Err(Error::Validation(_))));
    }
}

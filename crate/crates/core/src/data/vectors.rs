use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::read_to_string;
use crate::error::{Error, Result};

/// Token → vector lookup with a single shared dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("vector dimension must be positive".into()));
        }
        Ok(WordVectorTable {
            dim,
            vectors: HashMap::new(),
        })
    }

    /// Inserts or overwrites a token's vector.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Format(format!(
                "vector of dimension {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Tokens in sorted order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.vectors.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }
}

/// Loads `token v1 ... vd` lines. Later lines for the same token win.
pub fn load_word_vectors(path: impl AsRef<Path>) -> Result<WordVectorTable> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let mut table: Option<WordVectorTable> = None;
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("non-numeric field `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, lineno, "non-finite vector entry"));
        }
        let table = match &mut table {
            Some(t) => t,
            None => table.insert(
                WordVectorTable::new(values.len())
                    .map_err(|_| Error::parse(path, lineno, "line has no vector values"))?,
            ),
        };
        if values.len() != table.dim {
            return Err(Error::Format(format!(
                "{}:{lineno}: dimension {} differs from {}",
                path.display(),
                values.len(),
                table.dim
            )));
        }
        table.vectors.insert(token.to_string(), values);
    }
    table.ok_or_else(|| Error::Format(format!("{}: no vectors", path.display())))
}

/// Writes the table in sorted token order with shortest round-trip float formatting.
pub fn write_word_vectors(path: impl AsRef<Path>, table: &WordVectorTable) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for token in table.tokens() {
        out.push_str(token);
        for v in &table.vectors[token] {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(content: &str) -> Result<WordVectorTable> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, content).unwrap();
        load_word_vectors(&p)
    }

    #[test]
    fn two_lines_of_dimension_three() {
        let t = load_str("deep 1 0 0\nlearning 0 2 0.5\n").unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("learning"), Some(&[0.0, 2.0, 0.5][..]));
    }

    #[test]
    fn hundred_dimensional_line() {
        let vals: Vec<String> = (0..100).map(|i| format!("{}", i as f64 / 100.0)).collect();
        let t = load_str(&format!("learning {}\n", vals.join(" "))).unwrap();
        assert_eq!(t.dim(), 100);
    }

    #[test]
    fn empty_file_has_no_vectors() {
        let err = load_str("").unwrap_err();
        assert!(err.to_string().contains("no vectors"));
    }

    #[test]
    fn inconsistent_dimension_is_a_format_error() {
        assert!(matches!(load_str("a 1 2\nb 1 2 3\n"), Err(Error::Format(_))));
    }

    #[test]
    fn non_numeric_field_is_a_parse_error() {
        assert!(matches!(load_str("a 1 x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn later_duplicates_overwrite() {
        let t = load_str("a 1 2\na 3 4\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some(&[3.0, 4.0][..]));
    }
}

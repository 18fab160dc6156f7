use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use super::read_to_string;
use crate::error::{Error, Result};
use crate::text::normalize_surface;

/// One term of the inventory. Core terms carry a description document and the
/// names of the categories their page belongs to; fringe terms carry neither.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermRecord {
    pub id: usize,
    pub surface: String,
    pub is_core: bool,
    pub description: String,
    /// Normalized category names.
    pub categories: Vec<String>,
    /// Where the description came from, relative to the inventory file. Empty for
    /// fringe terms and for records built in memory.
    pub description_path: String,
}

impl TermRecord {
    pub fn core(id: usize, surface: &str, description: &str, categories: &[&str]) -> Self {
        TermRecord {
            id,
            surface: normalize_surface(surface),
            is_core: true,
            description: description.to_string(),
            categories: categories.iter().map(|c| normalize_surface(c)).collect(),
            description_path: String::new(),
        }
    }

    pub fn fringe(id: usize, surface: &str) -> Self {
        TermRecord {
            id,
            surface: normalize_surface(surface),
            is_core: false,
            description: String::new(),
            categories: Vec::new(),
            description_path: String::new(),
        }
    }

    /// Drops the description and categories, turning a core term into a fringe one.
    pub fn demote(&mut self) {
        self.is_core = false;
        self.description.clear();
        self.categories.clear();
        self.description_path.clear();
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.surface.is_empty() {
            return Err(Error::Validation(format!("term {} has an empty surface", self.id)));
        }
        if self.is_core && self.description.trim().is_empty() {
            return Err(Error::Validation(format!(
                "core term `{}` has an empty description",
                self.surface
            )));
        }
        if !self.is_core && (!self.description.is_empty() || !self.categories.is_empty()) {
            return Err(Error::Validation(format!(
                "fringe term `{}` must not carry a description or categories",
                self.surface
            )));
        }
        Ok(())
    }
}

/// Loads a `surface<TAB>core|fringe<TAB>description-path<TAB>categories` inventory.
/// Description paths are resolved relative to the inventory's directory.
pub fn load_term_records(path: impl AsRef<Path>) -> Result<Vec<TermRecord>> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_term_records(&content, path, |rel| {
        let doc = base.join(rel);
        read_to_string(&doc)
    })
}

/// Parses inventory text; `read_description` resolves a description path to its
/// document text.
pub fn parse_term_records<F>(content: &str, path: &Path, mut read_description: F) -> Result<Vec<TermRecord>>
where
    F: FnMut(&str) -> Result<String>,
{
    let mut records: Vec<TermRecord> = Vec::new();
    let mut by_surface: HashMap<String, usize> = HashMap::new();

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let surface = normalize_surface(cols[0]);
        if surface.is_empty() {
            return Err(Error::Validation(format!(
                "{}:{lineno}: empty surface",
                path.display()
            )));
        }
        let is_core = match cols[1].trim() {
            "core" => true,
            "fringe" => false,
            other => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("second column must be `core` or `fringe`, found `{other}`"),
                ))
            }
        };
        let desc_path = cols[2].trim();
        let categories: Vec<String> = cols[3]
            .split(';')
            .map(normalize_surface)
            .filter(|c| !c.is_empty())
            .collect();

        let record = if is_core {
            if desc_path.is_empty() {
                return Err(Error::Validation(format!(
                    "{}:{lineno}: core term `{surface}` has no description path",
                    path.display()
                )));
            }
            TermRecord {
                id: 0,
                surface: surface.clone(),
                is_core: true,
                description: read_description(desc_path)?,
                categories,
                description_path: desc_path.to_string(),
            }
        } else {
            if !desc_path.is_empty() || !categories.is_empty() {
                return Err(Error::Validation(format!(
                    "{}:{lineno}: fringe term `{surface}` must not have a description or categories",
                    path.display()
                )));
            }
            TermRecord::fringe(0, &surface)
        };

        match by_surface.get(&surface) {
            Some(&existing) if records[existing].is_core && is_core => {
                return Err(Error::Validation(format!(
                    "{}:{lineno}: duplicate core surface `{surface}`",
                    path.display()
                )));
            }
            Some(&existing) => {
                if is_core {
                    warn!("{}:{lineno}: `{surface}` listed as fringe earlier; upgrading to core", path.display());
                    let id = records[existing].id;
                    records[existing] = TermRecord { id, ..record };
                } else {
                    warn!("{}:{lineno}: duplicate fringe surface `{surface}` dropped", path.display());
                }
            }
            None => {
                let id = records.len();
                by_surface.insert(surface, id);
                records.push(TermRecord { id, ..record });
            }
        }
    }

    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

/// Writes an inventory TSV. Core records without a `description_path` get their
/// description written to `docs/<id>.txt` next to the inventory.
pub fn write_term_records(path: impl AsRef<Path>, records: &[TermRecord]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = String::new();
    for r in records {
        let desc = if r.is_core {
            if r.description_path.is_empty() {
                let rel = format!("docs/{}.txt", r.id);
                let full: PathBuf = base.join(&rel);
                if let Some(dir) = full.parent() {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                std::fs::write(&full, &r.description).map_err(|e| Error::io(&full, e))?;
                rel
            } else {
                r.description_path.clone()
            }
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.surface,
            if r.is_core { "core" } else { "fringe" },
            desc,
            r.categories.join(";")
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(content: &str) -> Result<Vec<TermRecord>> {
        parse_term_records(content, Path::new("terms.tsv"), |p| Ok(format!("text of {p}")))
    }

    #[test]
    fn single_core_record() {
        let recs = parse("machine learning\tcore\tdoc0.txt\tMachine learning;Artificial intelligence\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].is_core);
        assert_eq!(recs[0].categories, vec!["machine learning", "artificial intelligence"]);
        assert_eq!(recs[0].description, "text of doc0.txt");
    }

    #[test]
    fn fringe_record_has_no_description() {
        let recs = parse("few-shot learning\tfringe\t\t\n").unwrap();
        assert!(!recs[0].is_core);
        assert!(recs[0].description.is_empty());
        assert!(recs[0].categories.is_empty());
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let err = parse("a\tcore\td.txt\tx\nb\tfringe\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_core_surface_is_rejected() {
        let err = parse("a b\tcore\t1.txt\t\nA  B\tcore\t2.txt\t\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn empty_surface_is_rejected() {
        assert!(matches!(parse("  \tfringe\t\t\n"), Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_fringe_is_deduplicated_and_ids_stay_contiguous() {
        let recs = parse("x\tfringe\t\t\nx\tfringe\t\t\ny\tfringe\t\t\n").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs.iter().map(|r| r.id).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            TermRecord::core(0, "Deep Learning", "neural networks with many layers", &["Machine learning"]),
            TermRecord::fringe(1, "few-shot  learning"),
        ];
        let path = dir.path().join("terms.tsv");
        write_term_records(&path, &records).unwrap();
        let loaded = load_term_records(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].surface, "deep learning");
        assert_eq!(loaded[0].description, records[0].description);
        assert_eq!(loaded[1].surface, "few-shot learning");
        let first = std::fs::read_to_string(&path).unwrap();
        write_term_records(&path, &loaded).unwrap();
        assert_eq!(first, std::fs::read_to_string(&path).unwrap());
    }
}

//! Exact-phrase and BM25-ranked retrieval over core-term descriptions.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::data::TermRecord;
use crate::error::{Error, Result};
use crate::text::{normalize_surface, tokenize};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

const INDEX_MAGIC: &[u8] = b"TRIX1";

#[derive(Debug, Clone, PartialEq)]
struct Posting {
    doc: usize,
    positions: Vec<u32>,
}

/// Inverted index over the descriptions of core terms. Internal document
/// numbers follow ascending term id, so ordering by either is the same.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreIndex {
    term_ids: Vec<usize>,
    surfaces: HashMap<String, usize>,
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<usize>,
    avg_doc_length: f64,
    pub k1: f64,
    pub b: f64,
}

/// Bm25 term weight with Lucene's non-negative idf.
pub fn bm25_term(tf: f64, df: f64, doc_count: f64, doc_len: f64, avg_len: f64, k1: f64, b: f64) -> f64 {
    let idf = (1.0 + (doc_count - df + 0.5) / (df + 0.5)).ln();
    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avg_len))
}

impl CoreIndex {
    pub fn build(records: &[TermRecord]) -> Result<Self> {
        Self::build_with(records, DEFAULT_K1, DEFAULT_B)
    }

    pub fn build_with(records: &[TermRecord], k1: f64, b: f64) -> Result<Self> {
        let mut cores: Vec<&TermRecord> = records.iter().filter(|r| r.is_core).collect();
        if cores.is_empty() {
            return Err(Error::EmptyCore);
        }
        cores.sort_by_key(|r| r.id);
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(cores.len());
        let mut surfaces = HashMap::new();
        for (doc, r) in cores.iter().enumerate() {
            surfaces.insert(normalize_surface(&r.surface), doc);
            let tokens = tokenize(&r.description);
            doc_lengths.push(tokens.len());
            let mut by_token: HashMap<String, Vec<u32>> = HashMap::new();
            for (pos, t) in tokens.into_iter().enumerate() {
                by_token.entry(t).or_default().push(pos as u32);
            }
            for (t, positions) in by_token {
                postings.entry(t).or_default().push(Posting { doc, positions });
            }
        }
        let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / doc_lengths.len() as f64;
        Ok(CoreIndex {
            term_ids: cores.iter().map(|r| r.id).collect(),
            surfaces,
            postings,
            doc_lengths,
            avg_doc_length,
            k1,
            b,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.term_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    /// Term ids of the indexed core terms, ascending.
    pub fn core_ids(&self) -> &[usize] {
        &self.term_ids
    }

    /// `(core term id, term frequency)` for a token; empty when unseen.
    pub fn postings(&self, token: &str) -> Vec<(usize, usize)> {
        self.postings
            .get(token)
            .map(|ps| ps.iter().map(|p| (self.term_ids[p.doc], p.positions.len())).collect())
            .unwrap_or_default()
    }

    pub fn doc_length(&self, term_id: usize) -> Option<usize> {
        self.term_ids.binary_search(&term_id).ok().map(|d| self.doc_lengths[d])
    }

    fn phrase_docs(&self, tokens: &[String]) -> BTreeSet<usize> {
        let mut lists = Vec::with_capacity(tokens.len());
        for t in tokens {
            match self.postings.get(t) {
                Some(ps) => lists.push(ps),
                None => return BTreeSet::new(),
            }
        }
        let mut out = BTreeSet::new();
        'docs: for first in lists[0] {
            let mut rest = Vec::with_capacity(lists.len() - 1);
            for list in &lists[1..] {
                match list.binary_search_by_key(&first.doc, |p| p.doc) {
                    Ok(i) => rest.push(&list[i].positions),
                    Err(_) => continue 'docs,
                }
            }
            let hit = first.positions.iter().any(|&start| {
                rest.iter()
                    .enumerate()
                    .all(|(i, pos)| pos.binary_search(&(start + i as u32 + 1)).is_ok())
            });
            if hit {
                out.insert(first.doc);
            }
        }
        out
    }

    /// Ranked `(core term id, score)` pairs, best first, ties by ascending id.
    ///
    /// With `exact`, only documents containing the query as a contiguous phrase,
    /// or whose own surface equals the query, are candidates. Otherwise any
    /// document sharing a token (or the surface match) is.
    pub fn search(&self, query: &str, exact: bool, limit: usize) -> Result<Vec<(usize, f64)>> {
        if limit == 0 {
            return Err(Error::InvalidArgument("search limit must be at least 1".into()));
        }
        let normalized = normalize_surface(query);
        let tokens = tokenize(&normalized);
        if tokens.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut unique: Vec<&String> = Vec::new();
        for t in &tokens {
            if !unique.contains(&t) {
                unique.push(t);
            }
        }

        let mut candidates = if exact {
            self.phrase_docs(&tokens)
        } else {
            unique
                .iter()
                .filter_map(|t| self.postings.get(*t))
                .flat_map(|ps| ps.iter().map(|p| p.doc))
                .collect()
        };
        if let Some(&doc) = self.surfaces.get(&normalized) {
            candidates.insert(doc);
        }

        let n = self.doc_count() as f64;
        let mut scores: HashMap<usize, f64> = candidates.iter().map(|&d| (d, 0.0)).collect();
        for t in unique {
            let Some(ps) = self.postings.get(t) else { continue };
            let df = ps.len() as f64;
            for p in ps {
                if let Some(s) = scores.get_mut(&p.doc) {
                    *s += bm25_term(
                        p.positions.len() as f64,
                        df,
                        n,
                        self.doc_lengths[p.doc] as f64,
                        self.avg_doc_length,
                        self.k1,
                        self.b,
                    );
                }
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(limit);
        Ok(ranked.into_iter().map(|(d, s)| (self.term_ids[d], s)).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(INDEX_MAGIC);
        w.f64(self.k1);
        w.f64(self.b);
        w.usize(self.term_ids.len());
        let mut by_doc: Vec<&str> = vec![""; self.term_ids.len()];
        for (s, &d) in &self.surfaces {
            by_doc[d] = s;
        }
        for ((&id, &len), surface) in self.term_ids.iter().zip(&self.doc_lengths).zip(&by_doc) {
            w.usize(id);
            w.usize(len);
            w.str(surface);
        }
        let mut tokens: Vec<&String> = self.postings.keys().collect();
        tokens.sort();
        w.usize(tokens.len());
        for t in tokens {
            w.str(t);
            let ps = &self.postings[t];
            w.usize(ps.len());
            for p in ps {
                w.usize(p.doc);
                w.usize(p.positions.len());
                for &pos in &p.positions {
                    w.u64(pos as u64);
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, INDEX_MAGIC, |m| Error::Format(format!("index file: {m}")))?;
        let k1 = r.f64()?;
        let b = r.f64()?;
        let docs = r.len(24)?;
        let mut term_ids = Vec::with_capacity(docs);
        let mut doc_lengths = Vec::with_capacity(docs);
        let mut surfaces = HashMap::new();
        for d in 0..docs {
            term_ids.push(r.usize()?);
            doc_lengths.push(r.usize()?);
            surfaces.insert(r.str()?, d);
        }
        let n_tokens = r.len(16)?;
        let mut postings = HashMap::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            let t = r.str()?;
            let n = r.len(16)?;
            let mut ps = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = r.usize()?;
                if doc >= docs {
                    return Err(Error::Format("index file: posting refers to unknown doc".into()));
                }
                let np = r.len(8)?;
                let positions = (0..np).map(|_| r.u64().map(|p| p as u32)).collect::<Result<_>>()?;
                ps.push(Posting { doc, positions });
            }
            postings.insert(t, ps);
        }
        r.finish()?;
        if docs == 0 {
            return Err(Error::EmptyCore);
        }
        let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / docs as f64;
        Ok(CoreIndex {
            term_ids,
            surfaces,
            postings,
            doc_lengths,
            avg_doc_length,
            k1,
            b,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

//! Ranked term listings and frequency-ratio scoring.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::TermRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RankedTerm {
    /// 1-based.
    pub rank: usize,
    pub id: usize,
    pub surface: String,
    pub score: f64,
    pub core: bool,
}

/// Band of 1-based inclusive ranks, e.g. `(101, 110)`.
pub type Band = (usize, usize);

/// Terms in descending score order, ties by ascending id.
pub fn rank_terms(scores: &[f64], records: &[TermRecord]) -> Result<Vec<RankedTerm>> {
    if scores.len() != records.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} terms",
            scores.len(),
            records.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(r, i)| RankedTerm {
            rank: r + 1,
            id: i,
            surface: records[i].surface.clone(),
            score: scores[i],
            core: records[i].is_core,
        })
        .collect())
}

/// The full ranking, or only the requested bands.
pub fn rank_report(scores: &[f64], records: &[TermRecord], bands: &[Band]) -> Result<Vec<RankedTerm>> {
    let ranked = rank_terms(scores, records)?;
    if bands.is_empty() {
        return Ok(ranked);
    }
    let mut out = Vec::new();
    for &(lo, hi) in bands {
        if lo == 0 || lo > hi || hi > ranked.len() {
            return Err(Error::InvalidArgument(format!(
                "band {lo}-{hi} outside ranks 1-{}",
                ranked.len()
            )));
        }
        out.extend_from_slice(&ranked[lo - 1..hi]);
    }
    Ok(out)
}

/// Parses `1-10,101-110`.
pub fn parse_bands(spec: &str) -> Result<Vec<Band>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|part| {
            let (a, b) = part
                .trim()
                .split_once('-')
                .ok_or_else(|| Error::InvalidArgument(format!("band `{part}` is not `lo-hi`")))?;
            let p = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("band `{part}` is not `lo-hi`")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

/// `rank<TAB>surface<TAB>score<TAB>core|fringe` lines.
pub fn format_ranking(ranked: &[RankedTerm]) -> String {
    let mut out = String::new();
    for t in ranked {
        let kind = if t.core { "core" } else { "fringe" };
        let _ = writeln!(out, "{}\t{}\t{}\t{kind}", t.rank, t.surface, t.score);
    }
    out
}

pub fn write_ranking(path: impl AsRef<Path>, ranked: &[RankedTerm]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_ranking(ranked)).map_err(|e| Error::io(path, e))
}

/// Relative domain frequency `freq_s / freq_g`. Terms absent from the
/// specific table score 0; terms without a positive general frequency are
/// dropped with a warning.
pub fn rdf_score<S: AsRef<str>>(
    terms: &[S],
    freq_specific: &HashMap<String, f64>,
    freq_general: &HashMap<String, f64>,
) -> Vec<(String, f64)> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let t = t.as_ref();
        match freq_general.get(t) {
            Some(&g) if g > 0.0 => {
                let s = freq_specific.get(t).copied().unwrap_or(0.0);
                out.push((t.to_string(), s / g));
            }
            _ => log::warn!("`{t}` has no general-corpus frequency; skipped"),
        }
    }
    out
}

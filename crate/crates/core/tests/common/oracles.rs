//! Brute-force reference implementations.

use std::collections::BTreeSet;

use termrel::data::TermRecord;

/// ROC-AUC by sweeping every threshold and integrating the ROC curve with
/// trapezoids.
pub fn roc_auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(f64::INFINITY);
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let point = |t: f64| {
        let tp = (0..scores.len()).filter(|&i| scores[i] >= t && labels[i]).count() as f64;
        let fp = (0..scores.len()).filter(|&i| scores[i] >= t && !labels[i]).count() as f64;
        (fp / neg, tp / pos)
    };
    let mut area = 0.0;
    let mut prev = point(thresholds[0]);
    for &t in &thresholds[1..] {
        let cur = point(t);
        area += (cur.0 - prev.0) * (cur.1 + prev.1) / 2.0;
        prev = cur;
    }
    area
}

/// Average precision: at every threshold, recall gained times precision.
pub fn pr_auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let tp = (0..scores.len()).filter(|&i| scores[i] >= t && labels[i]).count() as f64;
        let predicted = (0..scores.len()).filter(|&i| scores[i] >= t).count() as f64;
        let recall = tp / pos;
        ap += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    ap
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Scores every core description against the query with BM25 by direct
/// counting, and decides phrase containment by scanning token windows.
pub fn bm25_rank(records: &[TermRecord], query: &str, exact: bool, k1: f64, b: f64) -> Vec<(usize, f64)> {
    let docs: Vec<(usize, Vec<String>, &str)> = records
        .iter()
        .filter(|r| r.is_core)
        .map(|r| (r.id, tokens(&r.description), r.surface.as_str()))
        .collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.1.len() as f64).sum::<f64>() / n;
    let q = tokens(query);
    let q_norm = query.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let unique: BTreeSet<&String> = q.iter().collect();
    let mut out = Vec::new();
    for (id, toks, surface) in &docs {
        let surface_hit = *surface == q_norm;
        let phrase = toks.windows(q.len()).any(|w| w == q.as_slice());
        let shares = toks.iter().any(|t| unique.contains(t));
        let candidate = surface_hit || if exact { phrase } else { shares };
        if !candidate {
            continue;
        }
        let mut score = 0.0;
        for t in &unique {
            let tf = toks.iter().filter(|x| x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|d| d.1.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let dl = toks.len() as f64;
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        out.push((*id, score));
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// Exact-match links (up to 2k, never self), then relevance backfill to k.
pub fn two_pass_edges(records: &[TermRecord], k: usize) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for r in records {
        let mut links: Vec<usize> = bm25_rank(records, &r.surface, true, 1.2, 0.75)
            .into_iter()
            .take(2 * k)
            .map(|(u, _)| u)
            .filter(|&u| u != r.id)
            .collect();
        if links.len() < k {
            for (u, _) in bm25_rank(records, &r.surface, false, 1.2, 0.75).into_iter().take(2 * k) {
                if links.len() >= k {
                    break;
                }
                if u != r.id && !links.contains(&u) {
                    links.push(u);
                }
            }
        }
        edges.extend(links.into_iter().map(|u| (u, r.id)));
    }
    edges
}

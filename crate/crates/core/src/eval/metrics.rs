//! Ranking metrics and metric files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidArgument(format!("score {s} is not a number")));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    Ok((pos, neg))
}

/// Groups of tied scores in descending score order, as (positives, negatives).
fn tie_groups(scores: &[f64], labels: &[bool]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        if prev != Some(scores[i]) {
            groups.push((0, 0));
            prev = Some(scores[i]);
        }
        let g = groups.last_mut().expect("group pushed");
        if labels[i] {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Probability that a random positive outranks a random negative, ties 0.5.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut wins = 0.0;
    let mut neg_above = 0usize;
    for (p, n) in tie_groups(scores, labels) {
        wins += (p * (neg - neg_above - n)) as f64 + 0.5 * (p * n) as f64;
        neg_above += n;
    }
    Ok(wins / (pos as f64 * neg as f64))
}

/// Average precision: `Σ (R_k - R_{k-1}) P_k` over descending score thresholds.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    for (p, n) in tie_groups(scores, labels) {
        tp += p;
        fp += n;
        if p > 0 {
            ap += (p as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

/// Named metric values written as `key=value` lines or JSON.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub values: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn insert(&mut self, key: impl Into<String>, value: f64) {
        self.values.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.values).expect("finite metrics serialize");
        s.push('\n');
        s
    }

    /// Writes `<stem>.txt` (key=value) and `<stem>.json`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let kv = dir.join(format!("{stem}.txt"));
        std::fs::write(&kv, self.to_key_values()).map_err(|e| Error::io(&kv, e))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))
    }
}

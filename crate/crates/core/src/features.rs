//! Node feature matrix: compositional sums of word vectors, or term embeddings
//! looked up directly by surface.

use ndarray::Array2;

use crate::data::{TermRecord, WordVectorTable};
use crate::error::{Error, Result};
use crate::text::surface_words;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Compositional,
    Direct,
}

/// Where features come from.
#[derive(Debug, Clone, Copy)]
pub enum FeatureSource<'a> {
    /// Sum of the word vectors of a surface's words.
    Compositional(&'a WordVectorTable),
    /// Whole-term embeddings keyed by surface with spaces replaced by `_`.
    /// Missing terms fall back to `fallback` compositionally, else to zeros.
    Direct {
        terms: &'a WordVectorTable,
        fallback: Option<&'a WordVectorTable>,
    },
}

impl FeatureSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            FeatureSource::Compositional(t) => t.dim(),
            FeatureSource::Direct { terms, .. } => terms.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let FeatureSource::Direct {
            terms,
            fallback: Some(fb),
        } = self
        {
            if terms.dim() != fb.dim() {
                return Err(Error::Dimension(format!(
                    "term embeddings have dimension {} but word vectors {}",
                    terms.dim(),
                    fb.dim()
                )));
            }
        }
        Ok(())
    }

    /// Feature row for one surface, and whether nothing in the source covered it.
    pub fn row(&self, surface: &str) -> (Vec<f64>, bool) {
        match *self {
            FeatureSource::Compositional(table) => compositional_embedding(surface, table),
            FeatureSource::Direct { terms, fallback } => {
                let key = surface.replace(' ', "_");
                match (terms.get(&key), fallback) {
                    (Some(v), _) => (v.to_vec(), false),
                    (None, Some(fb)) => compositional_embedding(surface, fb),
                    (None, None) => (vec![0.0; terms.dim()], true),
                }
            }
        }
    }
}

/// Element-wise sum of the vectors of the surface's words; unknown words add
/// nothing. The flag is true when no word was found.
pub fn compositional_embedding(surface: &str, table: &WordVectorTable) -> (Vec<f64>, bool) {
    let mut out = vec![0.0; table.dim()];
    let mut found = false;
    for w in surface_words(surface) {
        if let Some(v) = table.get(w) {
            found = true;
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
    }
    (out, !found)
}

/// `n × d` node features, rows aligned with node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub provenance: Provenance,
    /// Rows for which the source had nothing (left as zeros).
    pub uncovered: usize,
    pub l2_normalized: bool,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Appends rows for records `self.rows()..` (online attachment).
    pub fn extend(&mut self, records: &[TermRecord], source: FeatureSource<'_>) -> Result<()> {
        source.validate()?;
        if source.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "source dimension {} differs from matrix dimension {}",
                source.dim(),
                self.dim()
            )));
        }
        for r in &records[self.rows()..] {
            let (mut row, uncovered) = source.row(&r.surface);
            if self.l2_normalized {
                l2_normalize(&mut row);
            }
            self.uncovered += usize::from(uncovered);
            self.values
                .push_row(ndarray::ArrayView1::from(&row))
                .map_err(|e| Error::Dimension(e.to_string()))?;
        }
        Ok(())
    }
}

fn l2_normalize(row: &mut [f64]) {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|x| *x /= norm);
    }
}

pub fn build_feature_matrix(records: &[TermRecord], source: FeatureSource<'_>) -> Result<FeatureMatrix> {
    build_feature_matrix_with(records, source, false)
}

pub fn build_feature_matrix_with(
    records: &[TermRecord],
    source: FeatureSource<'_>,
    l2_normalize_rows: bool,
) -> Result<FeatureMatrix> {
    source.validate()?;
    let mut m = FeatureMatrix {
        values: Array2::zeros((0, source.dim())),
        provenance: match source {
            FeatureSource::Compositional(_) => Provenance::Compositional,
            FeatureSource::Direct { .. } => Provenance::Direct,
        },
        uncovered: 0,
        l2_normalized: l2_normalize_rows,
    };
    m.extend(records, source)?;
    if m.uncovered > 0 {
        log::info!("{} of {} terms have no feature coverage", m.uncovered, m.rows());
    }
    if m.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite feature value".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> WordVectorTable {
        let mut t = WordVectorTable::new(2).unwrap();
        t.insert("deep", vec![1.0, 0.0]).unwrap();
        t.insert("learning", vec![0.0, 2.0]).unwrap();
        t
    }

    #[test]
    fn two_token_sum_and_order_invariance() {
        let t = table();
        assert_eq!(compositional_embedding("deep learning", &t), (vec![1.0, 2.0], false));
        assert_eq!(compositional_embedding("learning deep", &t), (vec![1.0, 2.0], false));
        assert_eq!(compositional_embedding("quantum chemistry", &t), (vec![0.0, 0.0], true));
    }

    #[test]
    fn matrix_has_one_row_per_record() {
        let mut t = WordVectorTable::new(4).unwrap();
        t.insert("a", vec![1.0; 4]).unwrap();
        let recs = vec![
            TermRecord::fringe(0, "a"),
            TermRecord::fringe(1, "b"),
            TermRecord::fringe(2, "a a"),
        ];
        let m = build_feature_matrix(&recs, FeatureSource::Compositional(&t)).unwrap();
        assert_eq!(m.values.dim(), (3, 4));
        assert_eq!(m.uncovered, 1);
        assert_eq!(m.values.row(2).to_vec(), vec![2.0; 4]);
    }

    #[test]
    fn direct_mode_falls_back_per_term() {
        let mut terms = WordVectorTable::new(2).unwrap();
        terms.insert("deep_learning", vec![9.0, 9.0]).unwrap();
        let words = table();
        let recs = vec![TermRecord::fringe(0, "deep learning"), TermRecord::fringe(1, "learning")];
        let src = FeatureSource::Direct {
            terms: &terms,
            fallback: Some(&words),
        };
        let m = build_feature_matrix(&recs, src).unwrap();
        assert_eq!(m.values.row(0).to_vec(), vec![9.0, 9.0]);
        assert_eq!(m.values.row(1).to_vec(), vec![0.0, 2.0]);
        let bare = FeatureSource::Direct {
            terms: &terms,
            fallback: None,
        };
        let m = build_feature_matrix(&recs, bare).unwrap();
        assert_eq!(m.values.row(1).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_between_sources() {
        let terms = WordVectorTable::new(3).unwrap();
        let words = table();
        let src = FeatureSource::Direct {
            terms: &terms,
            fallback: Some(&words),
        };
        assert!(matches!(build_feature_matrix(&[], src), Err(Error::Dimension(_))));
    }

    #[test]
    fn online_rows_use_the_same_rule() {
        let t = table();
        let mut recs = vec![TermRecord::fringe(0, "deep")];
        let mut m = build_feature_matrix(&recs, FeatureSource::Compositional(&t)).unwrap();
        recs.push(TermRecord::fringe(1, "learning deep"));
        m.extend(&recs, FeatureSource::Compositional(&t)).unwrap();
        let full = build_feature_matrix(&recs, FeatureSource::Compositional(&t)).unwrap();
        assert_eq!(m, full);
    }
}

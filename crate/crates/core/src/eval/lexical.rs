//! Word translation (unrestricted precision@1) and word similarity.

use std::io::BufRead;

use crate::corpus::WordKey;
use crate::error::{Error, Result};
use crate::space::EmbeddingSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationReport {
    /// Correct / all queries; absent queries count as errors.
    pub accuracy: f64,
    pub covered: usize,
    pub total: usize,
}

impl TranslationReport {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

/// Nearest neighbour of the source word over the whole target-edition
/// vocabulary must equal the gold target.
pub fn word_translation_p1(space: &EmbeddingSpace, pairs: &[(WordKey, WordKey)]) -> TranslationReport {
    let mut correct = 0;
    let mut covered = 0;
    for (src, tgt) in pairs {
        let Some(nn) = space.nearest(src, tgt.edition(), 1) else {
            continue;
        };
        covered += 1;
        if nn.first().is_some_and(|n| &n.key == tgt) {
            correct += 1;
        }
    }
    TranslationReport {
        accuracy: if pairs.is_empty() { 0.0 } else { correct as f64 / pairs.len() as f64 },
        covered,
        total: pairs.len(),
    }
}

/// `src-word-key\ttgt-word-key` per line.
pub fn read_translation_pairs<R: BufRead>(reader: R, name: &str) -> Result<Vec<(WordKey, WordKey)>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [src, tgt] = fields[..] else {
            return Err(Error::parse(name, n + 1, "expected src-word-key\\ttgt-word-key"));
        };
        let parse = |s: &str| s.parse::<WordKey>().map_err(|e| Error::parse(name, n + 1, e.to_string()));
        out.push((parse(src)?, parse(tgt)?));
    }
    Ok(out)
}

/// `key1\tkey2\tscore` per line.
pub fn read_similarity_pairs<R: BufRead>(reader: R, name: &str) -> Result<Vec<(WordKey, WordKey, f64)>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [a, b, score] = fields[..] else {
            return Err(Error::parse(name, n + 1, "expected key1\\tkey2\\tscore"));
        };
        let parse = |s: &str| s.parse::<WordKey>().map_err(|e| Error::parse(name, n + 1, e.to_string()));
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::parse(name, n + 1, "non-numeric score"))?;
        out.push((parse(a)?, parse(b)?, score));
    }
    Ok(out)
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    let denom = (va * vb).sqrt();
    (denom > 0.0).then(|| cov / denom)
}

/// Spearman's ρ: Pearson correlation of average ranks. `None` when either
/// side is constant or fewer than two values are given.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityReport {
    pub rho: f64,
    pub covered: usize,
    pub total: usize,
}

impl SimilarityReport {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }
}

/// Spearman correlation between cosine and gold score over the pairs whose
/// words are both in the space.
pub fn word_similarity(space: &EmbeddingSpace, pairs: &[(WordKey, WordKey, f64)]) -> Result<SimilarityReport> {
    let (cos, gold): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .filter_map(|(a, b, g)| space.cosine(a, b).map(|c| (c, *g)))
        .unzip();
    if cos.len() < 2 {
        return Err(Error::Evaluation(format!(
            "word similarity needs at least 2 covered pairs, found {}",
            cos.len()
        )));
    }
    let rho = spearman(&cos, &gold)
        .ok_or_else(|| Error::Evaluation("word similarity undefined for constant scores".into()))?;
    Ok(SimilarityReport {
        rho,
        covered: cos.len(),
        total: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> WordKey {
        s.parse().unwrap()
    }

    fn space() -> EmbeddingSpace {
        let rows = [
            ("enge:a", vec![1.0, 0.0]),
            ("enge:b", vec![0.0, 1.0]),
            ("enge:c", vec![1.0, 1.0]),
            ("fra1:a", vec![1.0, 0.0]),
            ("fra1:b", vec![0.0, 1.0]),
        ];
        EmbeddingSpace::from_rows(2, rows.into_iter().map(|(k, v)| (key(k), v))).unwrap()
    }

    #[test]
    fn perfect_translation() {
        let pairs = vec![(key("enge:a"), key("fra1:a")), (key("enge:b"), key("fra1:b"))];
        let r = word_translation_p1(&space(), &pairs);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.coverage(), 1.0);
    }

    #[test]
    fn absent_query_is_an_error() {
        let pairs = vec![(key("enge:a"), key("fra1:a")), (key("enge:zzz"), key("fra1:b"))];
        let r = word_translation_p1(&space(), &pairs);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.covered, 1);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn spearman_extremes() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 35.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_none());
        assert!(spearman(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn similarity_coverage_and_errors() {
        let s = space();
        let pairs = vec![
            (key("enge:a"), key("fra1:a"), 10.0),
            (key("enge:a"), key("enge:c"), 5.0),
            (key("enge:a"), key("enge:b"), 0.0),
            (key("enge:a"), key("enge:q"), 3.0),
        ];
        let r = word_similarity(&s, &pairs).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
        assert_eq!((r.covered, r.total), (3, 4));
        assert!(word_similarity(&s, &pairs[2..]).is_err());
    }

    #[test]
    fn file_parsing() {
        let t = read_translation_pairs("enge:a\tfra1:a\n".as_bytes(), "m").unwrap();
        assert_eq!(t.len(), 1);
        assert!(read_translation_pairs("enge:a fra1:a\n".as_bytes(), "m").is_err());
        let s = read_similarity_pairs("enge:a\tenge:b\t7.5\n".as_bytes(), "m").unwrap();
        assert_eq!(s[0].2, 7.5);
        assert!(read_similarity_pairs("enge:a\tenge:b\tx\n".as_bytes(), "m").is_err());
    }
}

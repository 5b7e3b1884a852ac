//! LibSVM text format: `<label> <idx>:<val> <idx>:<val> ...` with 1-based
//! ascending feature indices.

use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseRow {
    /// `-1.0` or `+1.0`.
    pub label: f64,
    /// 0-based, strictly increasing.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| v * x[i]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<SparseRow>,
    pub dim: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Gaussian features with roughly half the entries zeroed, labels from a
    /// random linear model with a fraction `label_noise` of labels flipped.
    pub fn synthetic_logistic(rows: usize, dim: usize, label_noise: f64, seed: u64) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let rows = (0..rows)
            .map(|_| {
                let mut indices = Vec::new();
                let mut values = Vec::new();
                let mut dense = vec![0.0; dim];
                for (j, slot) in dense.iter_mut().enumerate() {
                    if rng.random::<f64>() < 0.5 {
                        let v: f64 = StandardNormal.sample(&mut rng);
                        *slot = v;
                        indices.push(j);
                        values.push(v);
                    }
                }
                let mut label = if dot(&dense, &truth) >= 0.0 { 1.0 } else { -1.0 };
                if rng.random::<f64>() < label_noise {
                    label = -label;
                }
                SparseRow { label, indices, values }
            })
            .collect();
        Self { rows, dim }
    }
}

fn parse_label(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse { line, message: format!("bad label {tok:?}") })?;
    match v {
        v if v == 1.0 => Ok(1.0),
        v if v == -1.0 || v == 0.0 => Ok(-1.0),
        _ => Err(Error::Parse { line, message: format!("label {tok:?} is not one of -1, 0, +1") }),
    }
}

/// Reads a LibSVM file. `dim_override` pads the dimension beyond the
/// largest index seen; it may not truncate.
pub fn parse_libsvm<R: BufRead>(reader: R, dim_override: Option<usize>) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let label = parse_label(toks.next().unwrap_or_default(), lineno)?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in toks {
            let bad = |what: &str| Error::Parse { line: lineno, message: format!("{what} in {tok:?}") };
            let (i, v) = tok.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let i: usize = i.parse().map_err(|_| bad("bad index"))?;
            let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
            if i == 0 {
                return Err(bad("index 0 (indices are 1-based)"));
            }
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            if indices.last().is_some_and(|&last| last >= i - 1) {
                return Err(bad("non-ascending index"));
            }
            indices.push(i - 1);
            values.push(v);
        }
        if let Some(&last) = indices.last() {
            dim = dim.max(last + 1);
        }
        rows.push(SparseRow { label, indices, values });
    }
    if let Some(d) = dim_override {
        if d < dim {
            return Err(Error::Contract(format!(
                "dimension override {d} is below the largest feature index {dim}"
            )));
        }
        dim = d;
    }
    Ok(SparseDataset { rows, dim })
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub shards: Vec<SparseDataset>,
    pub discarded: Vec<SparseRow>,
}

/// Shuffles the rows with `rng` and splits them into `n` shards of
/// `⌊rows / n⌋` rows, returning the leftover rows too.
pub fn partition_with_remainder<R: Rng + ?Sized>(
    data: &SparseDataset,
    n: usize,
    rng: &mut R,
) -> Result<Partition> {
    if n == 0 || n > data.len() {
        return Err(Error::Contract(format!("cannot split {} rows among {n} clients", data.len())));
    }
    let mut rows = data.rows.clone();
    rows.shuffle(rng);
    let m = rows.len() / n;
    let discarded = rows.split_off(m * n);
    let mut it = rows.into_iter();
    let shards =
        (0..n).map(|_| SparseDataset { rows: it.by_ref().take(m).collect(), dim: data.dim }).collect();
    Ok(Partition { shards, discarded })
}

/// [`partition_with_remainder`] without the leftovers.
pub fn partition<R: Rng + ?Sized>(data: &SparseDataset, n: usize, rng: &mut R) -> Result<Vec<SparseDataset>> {
    partition_with_remainder(data, n, rng).map(|p| p.shards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn parse(s: &str) -> Result<SparseDataset> {
        parse_libsvm(s.as_bytes(), None)
    }

    #[test]
    fn basic_line() {
        let d = parse("+1 3:0.5 7:1.2\n").unwrap();
        assert_eq!(d.rows.len(), 1);
        assert_eq!(d.rows[0].label, 1.0);
        assert_eq!(d.rows[0].indices, vec![2, 6]);
        assert_eq!(d.rows[0].values, vec![0.5, 1.2]);
        assert_eq!(d.dim, 7);
    }

    #[test]
    fn empty_feature_row_and_blank_lines() {
        let d = parse("-1\n\n0 1:2\n").unwrap();
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rows[0].label, -1.0);
        assert!(d.rows[0].indices.is_empty());
        assert_eq!(d.rows[1].label, -1.0);
    }

    #[test]
    fn malformed_value_reports_line() {
        match parse("1 2:a").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
        match parse("1 1:1\n1 3:1 2:1\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(parse("2 1:1").is_err());
        assert!(parse("1 0:1").is_err());
        assert!(parse("1 4").is_err());
        assert!(parse("1 1:1 1:2").is_err());
    }

    #[test]
    fn dimension_override() {
        let d = parse_libsvm("1 3:1\n".as_bytes(), Some(300)).unwrap();
        assert_eq!(d.dim, 300);
        assert!(parse_libsvm("1 3:1\n".as_bytes(), Some(2)).is_err());
    }

    fn rows(k: usize) -> SparseDataset {
        SparseDataset {
            rows: (0..k)
                .map(|i| SparseRow { label: 1.0, indices: vec![0], values: vec![i as f64] })
                .collect(),
            dim: 1,
        }
    }

    #[test]
    fn partition_sizes() {
        let p = partition_with_remainder(&rows(10), 3, &mut substream(1, 0)).unwrap();
        assert!(p.shards.iter().all(|s| s.len() == 3));
        assert_eq!(p.discarded.len(), 1);
        let p = partition_with_remainder(&rows(9), 3, &mut substream(1, 0)).unwrap();
        assert!(p.shards.iter().all(|s| s.len() == 3));
        assert!(p.discarded.is_empty());
        assert!(partition(&rows(2), 3, &mut substream(1, 0)).is_err());
    }

    #[test]
    fn partition_is_deterministic_and_preserves_rows() {
        let data = rows(23);
        let a = partition_with_remainder(&data, 4, &mut substream(5, 0)).unwrap();
        let b = partition_with_remainder(&data, 4, &mut substream(5, 0)).unwrap();
        assert_eq!(a.shards, b.shards);
        let mut seen: Vec<f64> = a
            .shards
            .iter()
            .flat_map(|s| s.rows.iter())
            .chain(a.discarded.iter())
            .map(|r| r.values[0])
            .collect();
        seen.sort_by(f64::total_cmp);
        let want: Vec<f64> = (0..23).map(|i| i as f64).collect();
        assert_eq!(seen, want);
    }
}

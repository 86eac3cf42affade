//! Unit-normalized multilingual embedding spaces, exact cosine search and
//! least-squares linear maps between spaces.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::corpus::{EditionId, WordKey};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub key: WordKey,
    pub cosine: f64,
}

/// Word keys mapped to ℓ2-normalized vectors, partitioned by edition.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    keys: Vec<WordKey>,
    data: Vec<f64>,
    index: HashMap<WordKey, usize>,
    editions: BTreeMap<EditionId, Vec<usize>>,
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl EmbeddingSpace {
    pub fn empty(dim: usize) -> Self {
        EmbeddingSpace {
            dim,
            keys: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            editions: BTreeMap::new(),
        }
    }

    /// Build a space, normalizing every row. Zero or non-finite rows and
    /// duplicate keys are rejected.
    pub fn from_rows<I>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (WordKey, Vec<f64>)>,
    {
        let mut space = EmbeddingSpace::empty(dim);
        for (key, v) in rows {
            space.push(key, v)?;
        }
        Ok(space)
    }

    fn push(&mut self, key: WordKey, mut v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        if !normalize(&mut v) {
            return Err(Error::Format(format!("vector for {key} cannot be normalized")));
        }
        if self.index.contains_key(&key) {
            return Err(Error::Format(format!("duplicate key {key}")));
        }
        let i = self.keys.len();
        self.index.insert(key.clone(), i);
        self.editions.entry(key.edition()).or_default().push(i);
        self.keys.push(key);
        self.data.extend(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[WordKey] {
        &self.keys
    }

    pub fn contains(&self, key: &WordKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &WordKey) -> Option<&[f64]> {
        self.index.get(key).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WordKey, &[f64])> + '_ {
        self.keys.iter().enumerate().map(|(i, k)| (k, self.row(i)))
    }

    pub fn editions(&self) -> Vec<EditionId> {
        self.editions.keys().copied().collect()
    }

    pub fn edition_keys(&self, edition: EditionId) -> impl Iterator<Item = &WordKey> + '_ {
        self.editions
            .get(&edition)
            .into_iter()
            .flatten()
            .map(|&i| &self.keys[i])
    }

    pub fn edition_len(&self, edition: EditionId) -> usize {
        self.editions.get(&edition).map_or(0, Vec::len)
    }

    pub fn cosine(&self, a: &WordKey, b: &WordKey) -> Option<f64> {
        Some(dot(self.get(a)?, self.get(b)?))
    }

    /// Top-`k` words of `target` by cosine with `query`, ties broken by key
    /// order. The query itself is skipped when it belongs to `target`.
    /// `None` when the query is not in the space.
    pub fn nearest(&self, query: &WordKey, target: EditionId, k: usize) -> Option<Vec<Neighbor>> {
        let qi = *self.index.get(query)?;
        Some(self.nearest_to(self.row(qi), target, k, Some(qi)))
    }

    /// Top-`k` words of `target` by cosine with an arbitrary vector.
    pub fn nearest_to(&self, v: &[f64], target: EditionId, k: usize, skip: Option<usize>) -> Vec<Neighbor> {
        let Some(rows) = self.editions.get(&target) else {
            return Vec::new();
        };
        let mut scored: Vec<(f64, usize)> = rows
            .iter()
            .filter(|&&i| Some(i) != skip)
            .map(|&i| (dot(v, self.row(i)), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then_with(|| self.keys[a.1].cmp(&self.keys[b.1]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored
            .into_iter()
            .map(|(cosine, i)| Neighbor {
                key: self.keys[i].clone(),
                cosine,
            })
            .collect()
    }

    /// The subspace holding only `editions`.
    pub fn restrict(&self, editions: &[EditionId]) -> EmbeddingSpace {
        let rows = self
            .iter()
            .filter(|(k, _)| editions.contains(&k.edition()))
            .map(|(k, v)| (k.clone(), v.to_vec()));
        EmbeddingSpace::from_rows(self.dim, rows).expect("rows of a valid space")
    }

    /// Union of spaces with disjoint keys.
    pub fn merge<'a, I>(dim: usize, spaces: I) -> Result<EmbeddingSpace>
    where
        I: IntoIterator<Item = &'a EmbeddingSpace>,
    {
        let mut out = EmbeddingSpace::empty(dim);
        for s in spaces {
            for (k, v) in s.iter() {
                out.push(k.clone(), v.to_vec())?;
            }
        }
        Ok(out)
    }

    /// Text format: `<vocab> <dim>` header, then `<word-key> <v1> ... <vdim>`.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for (k, v) in self.iter() {
            line.clear();
            line.push_str(&k.to_token());
            for x in v {
                write!(line, " {x:.8e}").expect("write to string");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Read the text format. Vectors are re-normalized on load.
    pub fn load<R: BufRead>(reader: R, name: &str) -> Result<EmbeddingSpace> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(name, 1, "missing header"))?
            .map_err(|e| Error::io(name, e))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(name, 1, "header must be <vocab> <dim>"))?;
        let [vocab, dim] = nums[..] else {
            return Err(Error::parse(name, 1, "header must be <vocab> <dim>"));
        };
        let mut space = EmbeddingSpace::empty(dim);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = n + 2;
            let mut fields = line.split_whitespace();
            let key = fields.next().unwrap_or_default();
            let key = WordKey::from_token(key).map_err(|e| Error::parse(name, lineno, e.to_string()))?;
            let v: Vec<f64> = fields
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(name, lineno, "non-numeric vector component"))?;
            space
                .push(key, v)
                .map_err(|e| Error::parse(name, lineno, e.to_string()))?;
        }
        if space.len() != vocab {
            return Err(Error::Format(format!(
                "{name}: header announces {vocab} rows, found {}",
                space.len()
            )));
        }
        Ok(space)
    }
}

/// `W` with `X·W ≈ Y` mapping a source space onto a target space.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub w: DMatrix<f64>,
    pub source: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapFit {
    pub map: LinearMap,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Minimum-norm least-squares solution `W = X⁺Y` via the SVD of `X`.
pub fn fit_linear_map(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<MapFit> {
    if x.nrows() == 0 {
        return Err(Error::Empty("no transformation words".into()));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.nrows(),
        });
    }
    let (n, d) = x.shape();
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = f64::EPSILON * n.max(d) as f64 * smax;
    let mut rank = 0;
    let mut s_inv = DMatrix::zeros(s.len(), s.len());
    for (i, &sv) in s.iter().enumerate() {
        if sv > tol {
            s_inv[(i, i)] = 1.0 / sv;
            rank += 1;
        }
    }
    let pinv = v_t.transpose() * s_inv * u.transpose();
    let w = pinv * y;
    let rank_deficient = rank < d;
    if rank_deficient {
        log::warn!("transformation matrix has rank {rank} < {d}; returning the minimum-norm solution");
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite transformation matrix".into()));
    }
    Ok(MapFit {
        map: LinearMap {
            w,
            source: String::new(),
            target: String::new(),
        },
        rank,
        rank_deficient,
    })
}

/// Fit a map from `source` onto `target` over the keys both spaces share,
/// optionally restricted to one edition.
pub fn fit_between(
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
    edition: Option<EditionId>,
) -> Result<MapFit> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: source.dim(),
        });
    }
    let mut shared: Vec<&WordKey> = source
        .keys()
        .iter()
        .filter(|k| edition.is_none_or(|e| k.edition() == e) && target.contains(k))
        .collect();
    shared.sort();
    let d = source.dim();
    let x = DMatrix::from_fn(shared.len(), d, |i, j| source.get(shared[i]).unwrap()[j]);
    let y = DMatrix::from_fn(shared.len(), d, |i, j| target.get(shared[i]).unwrap()[j]);
    fit_linear_map(&x, &y)
}

/// Multiply every row by `W` and re-normalize.
pub fn apply_map(space: &EmbeddingSpace, map: &LinearMap) -> Result<EmbeddingSpace> {
    let d = space.dim();
    if map.w.nrows() != d || map.w.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: map.w.nrows(),
        });
    }
    let rows = space.iter().map(|(k, v)| {
        let mapped = (0..d)
            .map(|j| (0..d).map(|i| v[i] * map.w[(i, j)]).sum())
            .collect();
        (k.clone(), mapped)
    });
    EmbeddingSpace::from_rows(d, rows)
}

impl LinearMap {
    /// `<d>` header then `d` rows of `d` decimals.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.w.nrows();
        writeln!(out, "{d}")?;
        for i in 0..d {
            let row: Vec<String> = (0..d).map(|j| format!("{:.17e}", self.w[(i, j)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R, name: &str) -> Result<LinearMap> {
        let mut lines = reader.lines();
        let d: usize = lines
            .next()
            .ok_or_else(|| Error::parse(name, 1, "missing header"))?
            .map_err(|e| Error::io(name, e))?
            .trim()
            .parse()
            .map_err(|_| Error::parse(name, 1, "header must be <d>"))?;
        let mut values = Vec::with_capacity(d * d);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(name, n + 2, "non-numeric entry"))?;
            if row.len() != d {
                return Err(Error::parse(name, n + 2, format!("expected {d} entries")));
            }
            values.extend(row);
        }
        if values.len() != d * d {
            return Err(Error::Format(format!("{name}: expected {d} rows")));
        }
        Ok(LinearMap {
            w: DMatrix::from_row_slice(d, d, &values),
            source: String::new(),
            target: String::new(),
        })
    }
}

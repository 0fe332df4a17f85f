//! Edge heatmaps and the sparse graphs derived from them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::{CostMatrix, DEPOT};

/// Largest value a heatmap entry may hold.
pub const MAX_HEAT: f64 = 1.0 - 1e-9;
/// Default sparsification threshold.
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

/// `n x n` edge scores in `[0, 1)`, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    n: usize,
    values: Vec<f64>,
    directed: bool,
}

impl Heatmap {
    /// Validates `values` (row-major). Entries must lie in `[0, 1]`; a value
    /// of exactly 1 is clamped to [`MAX_HEAT`]. The diagonal is zeroed.
    pub fn new(n: usize, mut values: Vec<f64>, directed: bool) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidHeatmap(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = &mut values[i * n + j];
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::InvalidHeatmap(format!(
                        "entry ({i}, {j}) = {v} is outside [0, 1)"
                    )));
                }
                *v = if i == j { 0.0 } else { v.min(MAX_HEAT) };
            }
        }
        let hm = Heatmap { n, values, directed };
        if !directed {
            if let Some((i, j)) = hm.first_asymmetry() {
                return Err(Error::InvalidHeatmap(format!(
                    "entries ({i}, {j}) and ({j}, {i}) differ in an undirected heatmap"
                )));
            }
        }
        Ok(hm)
    }

    pub fn from_fn(n: usize, directed: bool, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Heatmap::new(n, values, directed)
    }

    fn first_asymmetry(&self) -> Option<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .find(|&(i, j)| self.get(i, j) != self.get(j, i))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry-wise `max(h_ij, h_ji)`.
    pub fn symmetrize(&self) -> Heatmap {
        let n = self.n;
        let mut values = self.values.clone();
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = self.get(i, j).max(self.get(j, i));
            }
        }
        Heatmap {
            n,
            values,
            directed: false,
        }
    }

    /// Dense text format, one row per line.
    pub fn to_dense_text(&self) -> String {
        let mut out = format!("dense {}{}\n", self.n, if self.directed { " directed" } else { "" });
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Sparse text format listing the nonzero entries.
    pub fn to_sparse_text(&self) -> String {
        let mut out = format!("sparse {}{}\n", self.n, if self.directed { " directed" } else { "" });
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {v}");
                }
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_dense_text()).map_err(|e| Error::io(path, e))
    }

    /// Reads a dense or sparse heatmap file and checks it has `n` nodes.
    pub fn read(path: impl AsRef<Path>, n: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_heatmap(&text, n).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }
}

/// Parses the text heatmap format. In an undirected sparse file an entry
/// listed in only one direction is mirrored.
pub fn parse_heatmap(text: &str, n: usize) -> Result<Heatmap> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: "<heatmap>".into(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty heatmap file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let (format, declared, directed) = match tokens.as_slice() {
        [f, size] => (*f, *size, false),
        [f, size, "directed"] => (*f, *size, true),
        _ => {
            return Err(perr(
                hline,
                format!("bad header '{header}', expected '<dense|sparse> <n> [directed]'"),
            ))
        }
    };
    let declared: usize = declared
        .parse()
        .map_err(|_| perr(hline, format!("bad node count '{declared}'")))?;
    if declared != n {
        return Err(Error::InvalidHeatmap(format!(
            "heatmap declares {declared} nodes, instance has {n}"
        )));
    }

    let parse_value = |line: usize, tok: &str| -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| perr(line, format!("bad number '{tok}'")))
    };
    let range_check = |i: usize, j: usize, v: f64| -> Result<()> {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(Error::InvalidHeatmap(format!(
                "entry ({i}, {j}) = {v} is outside [0, 1)"
            )))
        }
    };

    let mut values = vec![0.0; n * n];
    match format {
        "dense" => {
            let mut rows = 0;
            for (lno, line) in lines {
                if rows == n {
                    return Err(perr(lno, format!("more than {n} rows")));
                }
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != n {
                    return Err(perr(lno, format!("expected {n} values, got {}", toks.len())));
                }
                for (j, tok) in toks.iter().enumerate() {
                    let v = parse_value(lno, tok)?;
                    range_check(rows, j, v)?;
                    values[rows * n + j] = v;
                }
                rows += 1;
            }
            if rows != n {
                return Err(Error::InvalidHeatmap(format!("expected {n} rows, got {rows}")));
            }
        }
        "sparse" => {
            let mut seen = vec![false; n * n];
            for (lno, line) in lines {
                let toks: Vec<&str> = line.split_whitespace().collect();
                let [i, j, v] = toks.as_slice() else {
                    return Err(perr(lno, format!("expected 'i j h', got '{line}'")));
                };
                let idx = |tok: &str| -> Result<usize> {
                    match tok.parse::<usize>() {
                        Ok(k) if k < n => Ok(k),
                        _ => Err(perr(lno, format!("bad node index '{tok}'"))),
                    }
                };
                let (i, j) = (idx(i)?, idx(j)?);
                let v = parse_value(lno, v)?;
                range_check(i, j, v)?;
                values[i * n + j] = v;
                seen[i * n + j] = true;
            }
            if !directed {
                for i in 0..n {
                    for j in 0..n {
                        if seen[i * n + j] && !seen[j * n + i] {
                            values[j * n + i] = values[i * n + j];
                        }
                    }
                }
            }
        }
        other => return Err(perr(hline, format!("unknown heatmap format '{other}'"))),
    }
    Heatmap::new(n, values, directed)
}

/// Row-normalized cost heuristic `c_ij / max_k c_ik`, optionally inverted to
/// `1 - c_ij / max_k c_ik`. Off-diagonal entries are clamped into
/// `[1e-9, 1 - 1e-9]`. The result is directed.
pub fn cost_heatmap(costs: &CostMatrix, invert: bool) -> Result<Heatmap> {
    let n = costs.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let row = costs.row(i);
        let max = row.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::InvalidHeatmap(format!(
                "all nodes coincide with node {i}; cost heatmap undefined"
            )));
        }
        for j in 0..n {
            if i != j {
                let r = row[j] / max;
                let v = if invert { 1.0 - r } else { r };
                values[i * n + j] = v.clamp(1e-9, MAX_HEAT);
            }
        }
    }
    Heatmap::new(n, values, true)
}

/// Out-adjacency restricted to a subset of edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    out: Vec<Vec<u32>>,
    words: usize,
    bits: Vec<u64>,
}

impl SparseGraph {
    fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        SparseGraph {
            out: vec![Vec::new(); n],
            words,
            bits: vec![0; n * words],
        }
    }

    /// Builds a graph from an edge predicate; self loops are never added.
    pub fn from_fn(n: usize, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = SparseGraph::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && keep(i, j) {
                    g.set(i, j);
                }
            }
        }
        g.finish()
    }

    pub fn complete(n: usize) -> Self {
        SparseGraph::from_fn(n, |_, _| true)
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn finish(mut self) -> Self {
        let n = self.out.len();
        for i in 0..n {
            self.out[i] = (0..n).filter(|&j| self.has_edge(i, j)).map(|j| j as u32).collect();
        }
        self
    }

    /// Adds `(i, depot)` and `(depot, i)` for every node.
    pub fn with_depot_edges(mut self) -> Self {
        for i in 0..self.out.len() {
            if i != DEPOT {
                self.set(i, DEPOT);
                self.set(DEPOT, i);
            }
        }
        self.finish()
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn out_edges(&self, i: usize) -> &[u32] {
        &self.out[i]
    }

    /// Adjacency row of `i` as packed bit words.
    #[inline]
    pub fn out_bits(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j as usize)))
    }
}

/// Keeps edge `(i, j)` iff `h_ij >= threshold`.
pub fn sparsify_threshold(heat: &Heatmap, threshold: f64) -> SparseGraph {
    SparseGraph::from_fn(heat.len(), |i, j| heat.get(i, j) >= threshold)
}

/// Each node's `k` nearest neighbours (ties to the lower index), with every
/// chosen edge added in both directions.
pub fn sparsify_knn(costs: &CostMatrix, k: usize, vrp: bool) -> Result<SparseGraph> {
    let n = costs.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "knn must be in 1..={}, got {k}",
            n - 1
        )));
    }
    let mut keep = vec![false; n * n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        let row = costs.row(i);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        for &j in &order[..k] {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
    }
    let g = SparseGraph::from_fn(n, |i, j| keep[i * n + j]);
    Ok(if vrp { g.with_depot_edges() } else { g })
}

/// How the expansion graph is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sparsity {
    Complete,
    Threshold(f64),
    Knn(usize),
}

impl Default for Sparsity {
    fn default() -> Self {
        Sparsity::Threshold(DEFAULT_THRESHOLD)
    }
}

impl Sparsity {
    pub fn build(&self, heat: &Heatmap, costs: &CostMatrix, vrp: bool) -> Result<SparseGraph> {
        let g = match *self {
            Sparsity::Complete => SparseGraph::complete(heat.len()),
            Sparsity::Threshold(t) => {
                if !(0.0..1.0).contains(&t) {
                    return Err(Error::InvalidArgument(format!(
                        "threshold must be in [0, 1), got {t}"
                    )));
                }
                sparsify_threshold(heat, t)
            }
            Sparsity::Knn(k) => return sparsify_knn(costs, k, vrp),
        };
        Ok(if vrp { g.with_depot_edges() } else { g })
    }

    pub fn label(&self) -> String {
        match self {
            Sparsity::Complete => "complete".into(),
            Sparsity::Threshold(t) => format!("threshold={t}"),
            Sparsity::Knn(k) => format!("knn={k}"),
        }
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Workload and strategy matrices for the matrix mechanism.
//!
//! A workload `A` is released as `B (C X + Z)` for a factorization `A = B C`.
//! Rows of `C` index noise vectors. The binary-tree factorization is kept
//! implicit so that large horizons never materialize dense `B` or `C`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Dense row-major `f64` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `max_ij |self - other|`.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `C^T C`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for (i, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in row.iter().enumerate() {
                    g.data[i * self.cols + j] += a * b;
                }
            }
        }
        g
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self[(i, j)] == 0.0))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Sparse matrix row as `(column, value)` pairs with nonzero values.
pub type SparseRow = Vec<(usize, f64)>;

fn sparse(row: &[f64]) -> SparseRow {
    row.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, &v)| (j, v))
        .collect()
}

/// Lower-triangular all-ones matrix.
pub fn prefix_workload(t_star: usize) -> Matrix {
    let mut a = Matrix::zeros(t_star, t_star);
    for i in 0..t_star {
        for j in 0..=i {
            a[(i, j)] = 1.0;
        }
    }
    a
}

#[derive(Clone, Debug, PartialEq)]
pub enum Workload {
    Prefix(usize),
    Dense(Matrix),
}

impl Workload {
    pub fn t_star(&self) -> usize {
        match self {
            Workload::Prefix(t) => *t,
            Workload::Dense(m) => m.rows(),
        }
    }

    pub fn row(&self, t: usize) -> SparseRow {
        match self {
            Workload::Prefix(_) => (0..=t).map(|j| (j, 1.0)).collect(),
            Workload::Dense(m) => sparse(m.row(t)),
        }
    }

    pub fn dense(&self) -> Matrix {
        match self {
            Workload::Prefix(t) => prefix_workload(*t),
            Workload::Dense(m) => m.clone(),
        }
    }

    pub fn row_norm(&self, t: usize) -> f64 {
        self.row(t).iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Binary-tree (Honaker) factorization of the prefix workload over
/// `t_star = 2^h` steps.
///
/// Rows of `C` are tree nodes listed level by level, leaves first and the
/// root last. Node `j` at level `l` covers steps `[j 2^l, (j+1) 2^l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HonakerTree {
    t_star: usize,
    height: u32,
}

impl HonakerTree {
    pub fn new(t_star: usize) -> Result<Self> {
        if t_star == 0 || !t_star.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(t_star));
        }
        Ok(HonakerTree {
            t_star,
            height: t_star.trailing_zeros(),
        })
    }

    pub fn t_star(&self) -> usize {
        self.t_star
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn nodes(&self) -> usize {
        2 * self.t_star - 1
    }

    pub fn node_index(&self, level: u32, j: usize) -> usize {
        2 * self.t_star - 2 * (self.t_star >> level) + j
    }

    /// Inverse of [`node_index`](Self::node_index).
    pub fn node_position(&self, index: usize) -> (u32, usize) {
        let mut level = 0;
        let mut offset = 0;
        while index >= offset + (self.t_star >> level) {
            offset += self.t_star >> level;
            level += 1;
        }
        (level, index - offset)
    }

    /// Leaf interval `[lo, hi)` of a node.
    pub fn node_interval(&self, index: usize) -> (usize, usize) {
        let (level, j) = self.node_position(index);
        (j << level, (j + 1) << level)
    }

    /// Canonical dyadic nodes covering steps `[0, t]`.
    pub fn b_row(&self, t: usize) -> SparseRow {
        let m = t + 1;
        let mut start = 0;
        let mut out = Vec::new();
        for level in (0..=self.height).rev() {
            if m & (1 << level) != 0 {
                out.push((self.node_index(level, start >> level), 1.0));
                start += 1 << level;
            }
        }
        out
    }

    pub fn dense_b(&self) -> Matrix {
        let mut b = Matrix::zeros(self.t_star, self.nodes());
        for t in 0..self.t_star {
            for (v, x) in self.b_row(t) {
                b[(t, v)] = x;
            }
        }
        b
    }

    pub fn dense_c(&self) -> Matrix {
        let mut c = Matrix::zeros(self.nodes(), self.t_star);
        for v in 0..self.nodes() {
            let (lo, hi) = self.node_interval(v);
            for j in lo..hi {
                c[(v, j)] = 1.0;
            }
        }
        c
    }

    /// `C^T C`: entry `(i, j)` counts nodes containing both leaves.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.t_star, self.t_star);
        for i in 0..self.t_star {
            for j in 0..self.t_star {
                let split = usize::BITS - (i ^ j).leading_zeros();
                g[(i, j)] = (self.height + 1 - split) as f64;
            }
        }
        g
    }
}

/// `(B, C, schedule)` of the binary-tree factorization.
pub fn honaker_tree(t_star: usize) -> Result<(Matrix, Matrix, NoiseSchedule)> {
    let tree = HonakerTree::new(t_star)?;
    let rows: Vec<SparseRow> = (0..t_star).map(|t| tree.b_row(t)).collect();
    Ok((
        tree.dense_b(),
        tree.dense_c(),
        NoiseSchedule::from_rows(&rows, tree.nodes()),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Tree(HonakerTree),
    Dense { b: Matrix, c: Matrix },
}

impl Strategy {
    /// Number of noise vectors (rows of `C`).
    pub fn rank(&self) -> usize {
        match self {
            Strategy::Tree(t) => t.nodes(),
            Strategy::Dense { c, .. } => c.rows(),
        }
    }

    pub fn b_row(&self, t: usize) -> SparseRow {
        match self {
            Strategy::Tree(tree) => tree.b_row(t),
            Strategy::Dense { b, .. } => sparse(b.row(t)),
        }
    }

    pub fn dense_b(&self) -> Matrix {
        match self {
            Strategy::Tree(t) => t.dense_b(),
            Strategy::Dense { b, .. } => b.clone(),
        }
    }

    pub fn dense_c(&self) -> Matrix {
        match self {
            Strategy::Tree(t) => t.dense_c(),
            Strategy::Dense { c, .. } => c.clone(),
        }
    }

    pub fn gram(&self) -> Matrix {
        match self {
            Strategy::Tree(t) => t.gram(),
            Strategy::Dense { c, .. } => c.gram(),
        }
    }
}

/// Workload, strategy and participation schema for one training run.
#[derive(Clone, Debug)]
pub struct FactorizationPlan {
    pub t_star: usize,
    pub min_sep: usize,
    pub workload: Workload,
    pub strategy: Strategy,
    sensitivity: OnceLock<f64>,
}

impl PartialEq for FactorizationPlan {
    fn eq(&self, other: &Self) -> bool {
        self.t_star == other.t_star
            && self.min_sep == other.min_sep
            && self.workload == other.workload
            && self.strategy == other.strategy
    }
}

impl FactorizationPlan {
    /// Binary-tree factorization of the prefix workload.
    pub fn honaker(t_star: usize, min_sep: usize) -> Result<Self> {
        Ok(FactorizationPlan {
            t_star,
            min_sep: min_sep.max(1),
            workload: Workload::Prefix(t_star),
            strategy: Strategy::Tree(HonakerTree::new(t_star)?),
            sensitivity: OnceLock::new(),
        })
    }

    /// Dense factorization, verified against `workload` to `tolerance`.
    pub fn dense(
        workload: Workload,
        b: Matrix,
        c: Matrix,
        min_sep: usize,
        tolerance: f64,
    ) -> Result<Self> {
        let t_star = workload.t_star();
        if b.rows() != t_star || c.cols() != t_star || b.cols() != c.rows() {
            return Err(Error::FactorizationFormat(format!(
                "B is {}x{}, C is {}x{}, workload is {t_star}x{t_star}",
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            )));
        }
        let residual = workload.dense().max_abs_diff(&b.matmul(&c)?)?;
        if residual > tolerance || residual.is_nan() {
            return Err(Error::FactorizationResidual {
                residual,
                tolerance,
            });
        }
        Ok(FactorizationPlan {
            t_star,
            min_sep: min_sep.max(1),
            workload,
            strategy: Strategy::Dense { b, c },
            sensitivity: OnceLock::new(),
        })
    }

    pub fn rank(&self) -> usize {
        self.strategy.rank()
    }

    pub fn b_row(&self, t: usize) -> SparseRow {
        self.strategy.b_row(t)
    }

    /// `B[t, :] - B[t-1, :]` (with `B[-1, :] = 0`).
    pub fn b_row_delta(&self, t: usize) -> SparseRow {
        let mut acc = Vec::new();
        let cur = self.b_row(t);
        let prev = if t == 0 { Vec::new() } else { self.b_row(t - 1) };
        let touched: std::collections::BTreeSet<usize> =
            cur.iter().chain(&prev).map(|(v, _)| *v).collect();
        for v in touched {
            let get = |r: &SparseRow| r.iter().find(|(j, _)| *j == v).map_or(0.0, |(_, x)| *x);
            let d = get(&cur) - get(&prev);
            if d != 0.0 {
                acc.push((v, d));
            }
        }
        acc
    }

    pub fn b_row_norm(&self, t: usize) -> f64 {
        self.b_row(t).iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn max_b_row_norm(&self) -> f64 {
        (0..self.t_star).map(|t| self.b_row_norm(t)).fold(0.0, f64::max)
    }

    pub fn max_a_row_norm(&self) -> f64 {
        (0..self.t_star)
            .map(|t| self.workload.row_norm(t))
            .fold(0.0, f64::max)
    }

    pub fn b_frobenius_sq(&self) -> f64 {
        (0..self.t_star)
            .map(|t| self.b_row_norm(t).powi(2))
            .sum()
    }

    /// Noise lifetimes for releasing `B Z` directly.
    pub fn full_schedule(&self) -> NoiseSchedule {
        let rows: Vec<SparseRow> = (0..self.t_star).map(|t| self.b_row(t)).collect();
        NoiseSchedule::from_rows(&rows, self.rank())
    }

    /// Noise lifetimes for releasing the increments `(B[t] - B[t-1]) Z`.
    pub fn delta_schedule(&self) -> NoiseSchedule {
        let rows: Vec<SparseRow> = (0..self.t_star).map(|t| self.b_row_delta(t)).collect();
        NoiseSchedule::from_rows(&rows, self.rank())
    }

    /// Sensitivity under `min_sep`-separated participation, computed once.
    pub fn sensitivity(&self) -> f64 {
        *self
            .sensitivity
            .get_or_init(|| sensitivity_from_gram(&self.strategy.gram(), self.min_sep))
    }

    /// `sens(C) * ||B||_F^2`, or with the sensitivity squared.
    pub fn loss(&self, squared: bool) -> f64 {
        let s = self.sensitivity();
        let s = if squared { s * s } else { s };
        s * self.b_frobenius_sq()
    }

    /// Serializes as `DMMFAC v1 T* r b` followed by rows of `B` then `C`.
    pub fn to_text(&self) -> String {
        let b = self.strategy.dense_b();
        let c = self.strategy.dense_c();
        let mut s = format!("DMMFAC v1 {} {} {}\n", self.t_star, b.cols(), self.min_sep);
        for m in [&b, &c] {
            for i in 0..m.rows() {
                let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Parses a factorization file and verifies it against `workload`.
pub fn parse_factorization(text: &str, workload: Option<Workload>, tolerance: f64) -> Result<FactorizationPlan> {
    let fmt = |m: String| Error::FactorizationFormat(m);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| fmt("empty file".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 5 || header[0] != "DMMFAC" || header[1] != "v1" {
        return Err(fmt(format!("bad header {:?}", header.join(" "))));
    }
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| fmt(format!("bad {what} {s:?} in header")))
    };
    let t_star = num(header[2], "T*")?;
    let rank = num(header[3], "r")?;
    let min_sep = num(header[4], "b")?;
    if t_star == 0 || rank == 0 {
        return Err(fmt("T* and r must be positive".into()));
    }

    let mut values = Vec::with_capacity(2 * t_star * rank);
    for (lineno, line) in lines.enumerate() {
        for tok in line.split_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .map_err(|_| fmt(format!("bad number {tok:?} on data line {}", lineno + 1)))?,
            );
        }
    }
    if values.len() != 2 * t_star * rank {
        return Err(Error::DimensionMismatch {
            expected: 2 * t_star * rank,
            got: values.len(),
        });
    }
    let c_data = values.split_off(t_star * rank);
    let b = Matrix {
        rows: t_star,
        cols: rank,
        data: values,
    };
    let c = Matrix {
        rows: rank,
        cols: t_star,
        data: c_data,
    };
    let workload = workload.unwrap_or(Workload::Prefix(t_star));
    FactorizationPlan::dense(workload, b, c, min_sep, tolerance)
}

pub fn load_factorization(path: &Path, workload: Option<Workload>, tolerance: f64) -> Result<FactorizationPlan> {
    parse_factorization(&std::fs::read_to_string(path)?, workload, tolerance)
}

/// Birth and last use of each noise vector under a coefficient schedule.
///
/// Noise vector `v` is sampled at the first step whose coefficient row uses
/// it and must be carried forward until the last such step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoiseSchedule {
    pub t_star: usize,
    /// `None` for noise vectors no step uses.
    pub birth: Vec<Option<usize>>,
    pub last_use: Vec<Option<usize>>,
}

impl NoiseSchedule {
    pub fn from_rows(rows: &[SparseRow], rank: usize) -> Self {
        let mut birth = vec![None; rank];
        let mut last_use = vec![None; rank];
        for (t, row) in rows.iter().enumerate() {
            for &(v, _) in row {
                birth[v].get_or_insert(t);
                last_use[v] = Some(t);
            }
        }
        NoiseSchedule {
            t_star: rows.len(),
            birth,
            last_use,
        }
    }

    /// Noise vectors first used at step `t`.
    pub fn born_at(&self, t: usize) -> Vec<usize> {
        (0..self.birth.len())
            .filter(|&v| self.birth[v] == Some(t))
            .collect()
    }

    /// Noise vectors held at the end of step `t` for a later step.
    pub fn live_after(&self, t: usize) -> Vec<usize> {
        (0..self.birth.len())
            .filter(|&v| matches!((self.birth[v], self.last_use[v]), (Some(b), Some(l)) if b <= t && l > t))
            .collect()
    }

    pub fn max_live(&self) -> usize {
        (0..self.t_star)
            .map(|t| self.live_after(t).len())
            .max()
            .unwrap_or(0)
    }
}

/// Largest sum over patterns containing `q` of `W[p, q]`, for every `q`.
fn rho(w: &Matrix, b: usize) -> Vec<f64> {
    let n = w.rows();
    (0..n)
        .map(|q| {
            let col = |p: usize| w[(p, q)];
            // Best chain ending at or before each index, left of q.
            let mut left = 0.0f64;
            if q >= b {
                let mut best = vec![0.0f64; q + 1 - b];
                for p in 0..=(q - b) {
                    let prev = if p >= b { best[p - b] } else { 0.0 };
                    let here = col(p) + prev.max(0.0);
                    best[p] = if p > 0 { best[p - 1].max(here) } else { here };
                }
                left = best[q - b].max(0.0);
            }
            let mut right = 0.0f64;
            if q + b < n {
                let len = n - (q + b);
                let mut best = vec![0.0f64; len];
                for k in (0..len).rev() {
                    let p = q + b + k;
                    let next = if k + b < len { best[k + b] } else { 0.0 };
                    let here = col(p) + next.max(0.0);
                    best[k] = if k + 1 < len { best[k + 1].max(here) } else { here };
                }
                right = best[0].max(0.0);
            }
            col(q) + left + right
        })
        .collect()
}

/// `max_j` over separated patterns within `[j, n)` of the additive weights,
/// with the argmax chain.
fn suffix_best(weights: &[f64], b: usize) -> Vec<f64> {
    let n = weights.len();
    let mut best = vec![0.0f64; n + 1];
    for j in (0..n).rev() {
        let take = weights[j] + if j + b <= n { best[j + b] } else { 0.0 };
        best[j] = best[j + 1].max(take);
    }
    best
}

fn pattern_value(w: &Matrix, pattern: &[usize]) -> f64 {
    pattern
        .iter()
        .map(|&p| pattern.iter().map(|&q| w[(p, q)]).sum::<f64>())
        .sum()
}

struct Search<'a> {
    w: &'a Matrix,
    b: usize,
    rho: Vec<f64>,
    best: f64,
}

impl Search<'_> {
    fn descend(&mut self, last: usize, cur: f64, cross: &mut [f64]) {
        let n = self.w.rows();
        let start = last + self.b;
        if start >= n {
            return;
        }
        let weights: Vec<f64> = (start..n).map(|q| 2.0 * cross[q] + self.rho[q]).collect();
        let suffix = suffix_best(&weights, self.b);
        if cur + suffix[0] <= self.best {
            return;
        }
        let mut order: Vec<usize> = (start..n).collect();
        order.sort_by(|&x, &y| {
            let bx = weights[x - start] + suffix.get(x - start + self.b).copied().unwrap_or(0.0);
            let by = weights[y - start] + suffix.get(y - start + self.b).copied().unwrap_or(0.0);
            by.total_cmp(&bx)
        });
        for q in order {
            let k = q - start;
            let bound = cur + weights[k] + suffix.get(k + self.b).copied().unwrap_or(0.0);
            if bound <= self.best {
                continue;
            }
            let next = cur + 2.0 * cross[q] + self.w[(q, q)];
            if next > self.best {
                self.best = next;
            }
            for (p, c) in cross.iter_mut().enumerate() {
                *c += self.w[(q, p)];
            }
            self.descend(q, next, cross);
            for (p, c) in cross.iter_mut().enumerate() {
                *c -= self.w[(q, p)];
            }
        }
    }
}

/// `max` over `b`-separated participation patterns of `sqrt(sum |G_ij|)`.
///
/// Exact branch and bound. Bounds come from additive relaxations in which
/// each index carries the largest column sum it can reach in any pattern.
pub fn sensitivity_from_gram(gram: &Matrix, min_sep: usize) -> f64 {
    let b = min_sep.max(1);
    let n = gram.rows();
    if n == 0 {
        return 0.0;
    }
    let mut w = gram.clone();
    w.data.iter_mut().for_each(|v| *v = v.abs());
    let rho = rho(&w, b);

    let greedy: Vec<usize> = (0..n).step_by(b).collect();
    let mut best = pattern_value(&w, &greedy);
    // Pattern maximizing the additive relaxation.
    let suffix = suffix_best(&rho, b);
    let mut relaxed = Vec::new();
    let mut j = 0;
    while j < n {
        let take = rho[j] + suffix.get(j + b).copied().unwrap_or(0.0);
        if take >= suffix[j + 1] && take > 0.0 {
            relaxed.push(j);
            j += b;
        } else {
            j += 1;
        }
    }
    best = best.max(pattern_value(&w, &relaxed));
    for q in 0..n {
        best = best.max(w[(q, q)]);
    }

    let mut search = Search { w: &w, b, rho, best };
    let mut cross = vec![0.0; n];
    // Root: the first participation may be any index.
    for q in 0..n {
        let weights: Vec<f64> = (q..n).map(|p| search.rho[p]).collect();
        let bound = suffix_best(&weights, b)[0];
        if bound <= search.best {
            continue;
        }
        let cur = w[(q, q)];
        for (p, c) in cross.iter_mut().enumerate() {
            *c = w[(q, p)];
        }
        search.descend(q, cur, &mut cross);
    }
    search.best.sqrt()
}

pub fn sensitivity(c: &Matrix, min_sep: usize) -> f64 {
    sensitivity_from_gram(&c.gram(), min_sep)
}

/// Exhaustive enumeration of separated patterns; exponential in `T*`.
pub fn sensitivity_brute_force(c: &Matrix, min_sep: usize) -> f64 {
    let mut w = c.gram();
    w.data.iter_mut().for_each(|v| *v = v.abs());
    let n = w.rows();
    let b = min_sep.max(1);
    let mut best = 0.0f64;
    for mask in 1u64..(1u64 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if idx.windows(2).any(|p| p[1] - p[0] < b) {
            continue;
        }
        best = best.max(pattern_value(&w, &idx));
    }
    best.sqrt()
}

/// `sens(C) * ||B||_F^2`, or with the sensitivity squared.
pub fn loss(b: &Matrix, c: &Matrix, min_sep: usize, squared: bool) -> f64 {
    let s = sensitivity(c, min_sep);
    let s = if squared { s * s } else { s };
    s * b.frobenius_sq()
}

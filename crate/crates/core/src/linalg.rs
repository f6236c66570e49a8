//! Sparse vectors and matrices over the rationals with exact elimination.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::rational::Rational;

/// A sparse vector: strictly increasing indices, no stored zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseVec {
    entries: Vec<(usize, Rational)>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec::default()
    }

    /// Builds from arbitrary (index, value) pairs, summing duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        let mut map: BTreeMap<usize, Rational> = BTreeMap::new();
        for (i, v) in pairs {
            *map.entry(i).or_default() += v;
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<usize, Rational>) -> Self {
        SparseVec {
            entries: map.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn unit(i: usize) -> Self {
        SparseVec {
            entries: vec![(i, Rational::one())],
        }
    }

    pub fn entries(&self) -> &[(usize, Rational)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.entries.iter().map(|(i, v)| (*i, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> Rational {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => self.entries[k].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn leading(&self) -> Option<(usize, &Rational)> {
        self.entries.first().map(|(i, v)| (*i, v))
    }

    pub fn scale(&self, s: &Rational) -> SparseVec {
        if s.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(i, v)| (*i, v * s)).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SparseVec, s: &Rational) -> SparseVec {
        if s.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((i, x)), Some((j, y))) => {
                    if i < j {
                        out.push((*i, x.clone()));
                        a.next();
                    } else if j < i {
                        out.push((*j, y * s));
                        b.next();
                    } else {
                        let v = x + &(y * s);
                        if !v.is_zero() {
                            out.push((*i, v));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some((i, x)), None) => {
                    out.push((*i, x.clone()));
                    a.next();
                }
                (None, Some((j, y))) => {
                    out.push((*j, y * s));
                    b.next();
                }
                (None, None) => break,
            }
        }
        SparseVec { entries: out }
    }

    pub fn dot(&self, other: &SparseVec) -> Rational {
        let mut acc = Rational::zero();
        let (mut a, mut b) = (0, 0);
        while a < self.entries.len() && b < other.entries.len() {
            let (i, x) = &self.entries[a];
            let (j, y) = &other.entries[b];
            if i < j {
                a += 1;
            } else if j < i {
                b += 1;
            } else {
                acc += x * y;
                a += 1;
                b += 1;
            }
        }
        acc
    }
}

/// Sparse matrix stored by rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

/// Errors from matrix operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: {0}x{1} times {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![SparseVec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            data: (0..n).map(SparseVec::unit).collect(),
        }
    }

    pub fn diagonal(d: &[Rational]) -> Self {
        let n = d.len();
        Self::from_triplets(n, n, d.iter().enumerate().map(|(i, v)| (i, i, v.clone())))
    }

    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Rational)>,
    ) -> Self {
        let mut maps: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); rows];
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of bounds");
            *maps[r].entry(c).or_default() += v;
        }
        SparseMatrix {
            rows,
            cols,
            data: maps.into_iter().map(SparseVec::from_map).collect(),
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<SparseVec>) -> Self {
        debug_assert!(rows.iter().all(|r| r.iter().all(|(c, _)| c < cols)));
        SparseMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        }
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut trip = Vec::new();
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter() {
                trip.push((i, j, v.clone()));
            }
        }
        Self::from_triplets(rows, columns.len(), trip)
    }

    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                trip.push((i, j, v.clone()));
            }
        }
        Self::from_triplets(rows.len(), cols, trip)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.data[i]
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.data[r].get(c)
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_zero())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); self.cols];
        for (i, j, v) in self.triplets() {
            cols[j].push((i, v.clone()));
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            data: cols.into_iter().map(|entries| SparseVec { entries }).collect(),
        }
    }

    /// Column `j` as a sparse vector.
    pub fn column(&self, j: usize) -> SparseVec {
        SparseVec {
            entries: self
                .data
                .iter()
                .enumerate()
                .filter_map(|(i, r)| {
                    let v = r.get(j);
                    (!v.is_zero()).then_some((i, v))
                })
                .collect(),
        }
    }

    pub fn columns(&self) -> Vec<SparseVec> {
        self.transpose().data
    }

    pub fn mul_vec(&self, v: &SparseVec) -> SparseVec {
        SparseVec::from_pairs(self.data.iter().enumerate().filter_map(|(i, r)| {
            let d = r.dot(v);
            (!d.is_zero()).then_some((i, d))
        }))
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(
                self.rows, self.cols, other.rows, other.cols,
            ));
        }
        let mut data = Vec::with_capacity(self.rows);
        for r in &self.data {
            let mut acc = SparseVec::new();
            for (k, v) in r.iter() {
                acc = acc.add_scaled(&other.data[k], v);
            }
            data.push(acc);
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.transpose() == *self
    }

    /// Submatrix picking the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_pos = BTreeMap::new();
        for (k, &c) in cols.iter().enumerate() {
            col_pos.insert(c, k);
        }
        let data = rows
            .iter()
            .map(|&r| {
                SparseVec::from_pairs(
                    self.data[r]
                        .iter()
                        .filter_map(|(c, v)| col_pos.get(&c).map(|&k| (k, v.clone()))),
                )
            })
            .collect();
        SparseMatrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        exact_rank(self)
    }

    /// Basis of the right kernel `{x : A x = 0}`.
    pub fn kernel(&self) -> Vec<SparseVec> {
        let mut ech = Echelon::tracked();
        let mut out = Vec::new();
        for (j, col) in self.columns().into_iter().enumerate() {
            let (rem, combo) = ech.reduce_tracked(&col);
            if rem.is_zero() {
                // col_j = Σ combo_i col_i  =>  e_j - combo is in the kernel
                out.push(SparseVec::unit(j).add_scaled(&combo, &-Rational::one()));
            } else {
                ech.insert_reduced(rem, SparseVec::unit(j).add_scaled(&combo, &-Rational::one()));
            }
        }
        out
    }
}

/// Rank over the rationals by incremental row echelon reduction; sparsest rows
/// are inserted first to limit fill-in.
pub fn exact_rank(m: &SparseMatrix) -> usize {
    let mut order: Vec<usize> = (0..m.nrows()).filter(|&i| !m.row(i).is_zero()).collect();
    order.sort_by_key(|&i| m.row(i).len());
    let mut ech = Echelon::new();
    for i in order {
        ech.insert(m.row(i));
    }
    ech.rank()
}

/// Inertia `(pos, neg, null)` of a symmetric matrix by congruence reduction.
pub fn exact_signature(g: &SparseMatrix) -> Result<(usize, usize, usize), LinalgError> {
    if !g.is_symmetric() {
        return Err(LinalgError::NotSymmetric);
    }
    let n = g.nrows();
    let mut a: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; n];
    for (i, j, v) in g.triplets() {
        a[i][j] = v.clone();
    }
    let mut alive: Vec<usize> = (0..n).collect();
    let (mut pos, mut neg) = (0, 0);
    while !alive.is_empty() {
        let pivot = alive.iter().copied().find(|&i| !a[i][i].is_zero());
        let p = match pivot {
            Some(p) => p,
            None => {
                // No usable diagonal: combine i <- i + j for an off-diagonal pair.
                let pair = alive.iter().copied().find_map(|i| {
                    alive
                        .iter()
                        .copied()
                        .find(|&j| j != i && !a[i][j].is_zero())
                        .map(|j| (i, j))
                });
                let Some((i, j)) = pair else { break };
                for &k in &alive {
                    let v = &a[i][k] + &a[j][k];
                    a[i][k] = v;
                }
                for &k in &alive {
                    let v = &a[k][i] + &a[k][j];
                    a[k][i] = v;
                }
                i
            }
        };
        let d = a[p][p].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        alive.retain(|&k| k != p);
        let row_p: Vec<(usize, Rational)> = alive
            .iter()
            .filter(|&&k| !a[p][k].is_zero())
            .map(|&k| (k, &a[p][k] / &d))
            .collect();
        for &(i, ref f) in &row_p {
            for &k in &alive {
                if a[p][k].is_zero() {
                    continue;
                }
                let v = &a[i][k] - &(f * &a[p][k]);
                a[i][k] = v;
            }
        }
    }
    Ok((pos, neg, n - pos - neg))
}

/// Incremental row echelon form. Each stored row has leading entry 1 at its
/// pivot column. Optionally each row carries the combination of inserted
/// generators it equals.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    pivots: BTreeMap<usize, (SparseVec, SparseVec)>,
    tracked: bool,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn tracked() -> Self {
        Echelon {
            pivots: BTreeMap::new(),
            tracked: true,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    fn reduce_inner(&self, v: &SparseVec) -> (SparseVec, SparseVec) {
        let mut work: BTreeMap<usize, Rational> = v.iter().map(|(i, x)| (i, x.clone())).collect();
        let mut combo = SparseVec::new();
        let mut cursor = 0usize;
        loop {
            let next = work
                .range(cursor..)
                .find(|(c, _)| self.pivots.contains_key(c))
                .map(|(c, x)| (*c, x.clone()));
            let Some((c, x)) = next else { break };
            let (row, track) = &self.pivots[&c];
            for (k, y) in row.iter() {
                let e = work.entry(k).or_default();
                *e -= &(&x * y);
                if e.is_zero() {
                    work.remove(&k);
                }
            }
            if self.tracked {
                combo = combo.add_scaled(track, &x);
            }
            cursor = c + 1;
        }
        (SparseVec::from_map(work), combo)
    }

    /// Remainder of `v` after eliminating every pivot column.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        self.reduce_inner(v).0
    }

    /// `(remainder, combo)` with `v = remainder + Σ combo_g · generator_g`.
    pub fn reduce_tracked(&self, v: &SparseVec) -> (SparseVec, SparseVec) {
        self.reduce_inner(v)
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Inserts `v`; returns whether it was independent of the current rows.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let rem = self.reduce(v);
        if rem.is_zero() {
            return false;
        }
        self.insert_reduced(rem, SparseVec::new());
        true
    }

    /// Inserts generator number `id`, returning whether it was independent.
    pub fn insert_generator(&mut self, v: &SparseVec, id: usize) -> bool {
        let (rem, combo) = self.reduce_tracked(v);
        if rem.is_zero() {
            return false;
        }
        let track = SparseVec::unit(id).add_scaled(&combo, &-Rational::one());
        self.insert_reduced(rem, track);
        true
    }

    fn insert_reduced(&mut self, rem: SparseVec, track: SparseVec) {
        let (c, lead) = rem.leading().map(|(c, x)| (c, x.clone())).expect("nonzero");
        let inv = lead.recip();
        self.pivots.insert(c, (rem.scale(&inv), track.scale(&inv)));
    }
}

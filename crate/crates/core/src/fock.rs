//! Fock-type modules: the ghost module Λ (λ = 2), bosonic Fock modules
//! `F_{k,l}(α)`, the Virasoro vacuum module `M(κ)`, and tensor products of
//! these. States are graded by (fermion degree, weight, momentum) and every
//! slice has a finite canonical basis.
//!
//! Ghost basis states are `b(−n₁)⋯b(−n_i) c(−m₁)⋯c(−m_j) 𝟙` with
//! `n₁ > ⋯ > n_i ≥ 1` and `m₁ > ⋯ > m_j ≥ 1`. Boson states are monomials in
//! `j^a(−n)` on `|α⟩`; Virasoro states are `L_{−p₁}⋯L_{−p_k} v₀` with
//! `p₁ ≥ ⋯ ≥ p_k ≥ 2`, where `L_m = L(m+1)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use hashbrown::HashMap;

use crate::algebra::{make_bc_system, make_heisenberg, make_virasoro, tensor, trivial_algebra, AlgebraSpec};
use crate::error::{Error, Result};
use crate::expr::{Factor, Monomial, OperatorExpr};
use crate::linalg::SparseMatrix;
use crate::rational::{binomial, falling, Rational};
use crate::wick::WickEngine;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModuleFactor {
    /// Ghost Fock module of the bc system with λ = 2.
    Ghost,
    /// `F_{k,l}(α)` with `η = diag(1^k, (−1)^l)`.
    Boson { k: usize, l: usize, alpha: Vec<Rational> },
    /// `M(κ)`: Verma module quotient by `L_{−1} v₀`.
    VirasoroVacuum { kappa: Rational },
}

impl ModuleFactor {
    fn algebra(&self) -> AlgebraSpec {
        match self {
            ModuleFactor::Ghost => make_bc_system(2),
            ModuleFactor::Boson { k, l, .. } => make_heisenberg(*k, *l).expect("k + l ≥ 1"),
            ModuleFactor::VirasoroVacuum { kappa } => make_virasoro(kappa.clone()),
        }
    }

    fn min_weight(&self) -> Rational {
        match self {
            ModuleFactor::Ghost => Rational::from_integer(-1),
            ModuleFactor::Boson { k, alpha, .. } => half_norm(*k, alpha),
            ModuleFactor::VirasoroVacuum { .. } => Rational::zero(),
        }
    }
}

/// `α·α/2` for `η = diag(1^k, (−1)^l)`.
pub fn half_norm(k: usize, alpha: &[Rational]) -> Rational {
    let mut s = Rational::zero();
    for (i, a) in alpha.iter().enumerate() {
        let sq = a * a;
        if i < k {
            s += sq;
        } else {
            s -= sq;
        }
    }
    s * Rational::new(1, 2)
}

/// Tensor product of module factors, acted on by the tensor product of the
/// factor algebras (in the same order).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModuleSpec {
    factors: Vec<ModuleFactor>,
}

pub fn make_ghost_fock() -> ModuleSpec {
    ModuleSpec {
        factors: vec![ModuleFactor::Ghost],
    }
}

pub fn make_fock(k: usize, l: usize, alpha: Vec<Rational>) -> Result<ModuleSpec> {
    if k + l == 0 {
        return Err(Error::InvalidArgument("Fock module needs k + l ≥ 1".into()));
    }
    if alpha.len() != k + l {
        return Err(Error::DimensionMismatch(format!(
            "momentum has {} components, expected {}",
            alpha.len(),
            k + l
        )));
    }
    Ok(ModuleSpec {
        factors: vec![ModuleFactor::Boson { k, l, alpha }],
    })
}

pub fn make_virasoro_vacuum(kappa: Rational) -> ModuleSpec {
    ModuleSpec {
        factors: vec![ModuleFactor::VirasoroVacuum { kappa }],
    }
}

pub fn tensor_modules(a: &ModuleSpec, b: &ModuleSpec) -> ModuleSpec {
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().cloned());
    ModuleSpec { factors }
}

impl ModuleSpec {
    pub fn new(factors: Vec<ModuleFactor>) -> Self {
        ModuleSpec { factors }
    }

    /// The zero-factor module `ℂ`.
    pub fn trivial() -> Self {
        ModuleSpec { factors: vec![] }
    }

    pub fn factors(&self) -> &[ModuleFactor] {
        &self.factors
    }

    pub fn has_ghosts(&self) -> bool {
        self.factors.first() == Some(&ModuleFactor::Ghost)
    }

    /// The module without a leading ghost factor.
    pub fn matter(&self) -> ModuleSpec {
        let skip = usize::from(self.has_ghosts());
        ModuleSpec {
            factors: self.factors[skip..].to_vec(),
        }
    }

    /// Tensor product of the factor algebras.
    pub fn algebra(&self) -> AlgebraSpec {
        let mut a = trivial_algebra();
        for (i, f) in self.factors.iter().enumerate() {
            a = if i == 0 { f.algebra() } else { tensor(&a, &f.algebra()) };
        }
        a
    }

    /// Total central charge of the Virasoro action.
    pub fn kappa(&self) -> Rational {
        self.factors
            .iter()
            .map(|f| match f {
                ModuleFactor::Ghost => Rational::from_integer(-26),
                ModuleFactor::Boson { k, l, .. } => Rational::from_integer((k + l) as i64),
                ModuleFactor::VirasoroVacuum { kappa } => kappa.clone(),
            })
            .sum()
    }

    /// Concatenated boson momenta.
    pub fn momentum(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for f in &self.factors {
            if let ModuleFactor::Boson { alpha, .. } = f {
                out.extend(alpha.iter().cloned());
            }
        }
        out
    }

    pub fn min_weight(&self) -> Rational {
        self.factors.iter().map(|f| f.min_weight()).sum()
    }

    pub fn key(&self, fermion: i64, weight: Rational) -> SliceKey {
        SliceKey {
            fermion,
            weight,
            momentum: self.momentum(),
        }
    }

    /// Canonical basis of the slice, sorted ascending.
    pub fn basis(&self, fermion: i64, weight: &Rational) -> Vec<BasisState> {
        let mins: Vec<Rational> = self.factors.iter().map(|f| f.min_weight()).collect();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.basis_rec(0, &mins, fermion, weight.clone(), &mut cur, &mut out);
        out.sort();
        out
    }

    fn basis_rec(
        &self,
        i: usize,
        mins: &[Rational],
        fermion: i64,
        weight: Rational,
        cur: &mut Vec<FactorState>,
        out: &mut Vec<BasisState>,
    ) {
        if i == self.factors.len() {
            if fermion == 0 && weight.is_zero() {
                out.push(BasisState(cur.clone()));
            }
            return;
        }
        let rest_min: Rational = mins[i + 1..].iter().sum();
        let max_here = &weight - &rest_min;
        let mut level = 0i64;
        loop {
            let w = &mins[i] + &Rational::from_integer(level);
            if w > max_here {
                break;
            }
            let last = i + 1 == self.factors.len();
            if !last || w == weight {
                for (p, st) in factor_states(&self.factors[i], &w) {
                    if last && p != fermion {
                        continue;
                    }
                    cur.push(st);
                    self.basis_rec(i + 1, mins, fermion - p, &weight - &w, cur, out);
                    cur.pop();
                }
            }
            level += 1;
        }
    }

    pub fn slice(&self, fermion: i64, weight: &Rational) -> Slice {
        Slice::new(self.key(fermion, weight.clone()), self.basis(fermion, weight))
    }

    pub fn slice_dim(&self, fermion: i64, weight: &Rational) -> usize {
        self.basis(fermion, weight).len()
    }

    /// Dimension of the weight space summed over fermion degrees.
    pub fn weight_dim(&self, weight: &Rational) -> usize {
        let (lo, hi) = self.fermion_range(weight);
        (lo..=hi).map(|p| self.slice_dim(p, weight)).sum()
    }

    /// Range of fermion degrees that can occur at this weight.
    pub fn fermion_range(&self, weight: &Rational) -> (i64, i64) {
        if !self.has_ghosts() {
            return (0, 0);
        }
        let ghost_max = (weight - &self.matter().min_weight()).floor();
        let ghost_max = i64::try_from(ghost_max).unwrap_or(i64::MAX / 4);
        // j c's weigh at least j(j−3)/2, i b's at least i(i+3)/2, and c(−1) gives −1
        let mut hi = 0i64;
        while (hi + 1) * (hi - 2) / 2 <= ghost_max {
            hi += 1;
        }
        let mut lo = 0i64;
        while (lo + 1) * (lo + 4) / 2 - 1 <= ghost_max {
            lo += 1;
        }
        (-lo, hi)
    }

    pub fn weight_of(&self, s: &BasisState) -> Rational {
        s.0.iter()
            .zip(&self.factors)
            .map(|(st, f)| factor_weight(f, st))
            .sum()
    }

    pub fn fermion_of(&self, s: &BasisState) -> i64 {
        s.0.iter().map(factor_fermion).sum()
    }

    /// The vacuum `𝟙 ⊗ |α⟩ ⊗ v₀ ⋯`.
    pub fn vacuum(&self) -> BasisState {
        BasisState(
            self.factors
                .iter()
                .map(|f| match f {
                    ModuleFactor::Ghost => FactorState::Ghost { b: vec![], c: vec![] },
                    ModuleFactor::Boson { .. } => FactorState::Boson(vec![]),
                    ModuleFactor::VirasoroVacuum { .. } => FactorState::Virasoro(vec![]),
                })
                .collect(),
        )
    }
}

/// `(fermion, weight, momentum)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceKey {
    pub fermion: i64,
    pub weight: Rational,
    pub momentum: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorState {
    /// Mode magnitudes `n` of `b(−n)` and `m` of `c(−m)`, each strictly
    /// decreasing.
    Ghost { b: Vec<u32>, c: Vec<u32> },
    /// `(level, flavor)` of each `j^flavor(−level)`, sorted descending.
    Boson(Vec<(u32, u16)>),
    /// Parts `p` of `L_{−p}`, weakly decreasing, each at least 2.
    Virasoro(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState(pub Vec<FactorState>);

fn factor_weight(f: &ModuleFactor, st: &FactorState) -> Rational {
    match f {
        ModuleFactor::Boson { k, alpha, .. } => &half_norm(*k, alpha) + &Rational::from_integer(state_level(st)),
        _ => Rational::from_integer(state_level(st)),
    }
}

/// Weight of a factor state without the momentum term `α·α/2`.
fn state_level(st: &FactorState) -> i64 {
    match st {
        FactorState::Ghost { b, c } => {
            b.iter().map(|&n| n as i64 + 1).sum::<i64>() + c.iter().map(|&m| m as i64 - 2).sum::<i64>()
        }
        FactorState::Boson(ms) => ms.iter().map(|(n, _)| *n as i64).sum(),
        FactorState::Virasoro(ps) => ps.iter().map(|&p| p as i64).sum(),
    }
}

fn factor_fermion(st: &FactorState) -> i64 {
    match st {
        FactorState::Ghost { b, c } => c.len() as i64 - b.len() as i64,
        _ => 0,
    }
}

/// Factor states of exactly the given weight, with their fermion degrees.
fn factor_states(f: &ModuleFactor, weight: &Rational) -> Vec<(i64, FactorState)> {
    match f {
        ModuleFactor::Ghost => {
            let Some(w) = weight.to_i64() else { return vec![] };
            if !weight.is_integer() {
                return vec![];
            }
            let mut out = Vec::new();
            // b's have weight n+1 ≥ 2, c's weight m−2 ≥ −1
            for cs in c_sets_up_to(w) {
                let wc: i64 = cs.iter().map(|&m| m as i64 - 2).sum();
                let wb = w - wc;
                for bs in distinct_sets_exact(wb, 1) {
                    let p = cs.len() as i64 - bs.len() as i64;
                    out.push((p, FactorState::Ghost { b: bs, c: cs.clone() }));
                }
            }
            out
        }
        ModuleFactor::Boson { k, l, alpha } => {
            let level = weight - &half_norm(*k, alpha);
            if !level.is_integer() || level.is_negative() {
                return vec![];
            }
            let n = level.to_i64().unwrap_or(0);
            colored_multisets(n, k + l)
                .into_iter()
                .map(|m| (0, FactorState::Boson(m)))
                .collect()
        }
        ModuleFactor::VirasoroVacuum { .. } => {
            if !weight.is_integer() || weight.is_negative() {
                return vec![];
            }
            let n = weight.to_i64().unwrap_or(0);
            crate::partitions::enumerate_partitions(n, 2, false)
                .into_iter()
                .map(|p| (0, FactorState::Virasoro(p.into_iter().map(|x| x as u32).collect())))
                .collect()
        }
    }
}

/// Strictly decreasing sequences of `n ≥ 1` with `Σ (n + shift) = total`.
fn distinct_sets_exact(total: i64, shift: i64) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    fn rec(rem: i64, max: i64, shift: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            out.push(cur.clone());
        }
        let mut n = max;
        while n >= 1 {
            if n + shift <= rem {
                cur.push(n as u32);
                rec(rem - n - shift, n - 1, shift, cur, out);
                cur.pop();
            }
            n -= 1;
        }
    }
    if total >= 0 {
        let mut cur = Vec::new();
        rec(total, total.max(0) + 1, shift, &mut cur, &mut out);
    }
    out
}

/// Strictly decreasing sequences of `m ≥ 1` with `Σ (m − 2) ≤ max_total`
/// (c-ghost weights).
fn c_sets_up_to(max_total: i64) -> Vec<Vec<u32>> {
    // only m = 1 lowers the sum, so the parts ≥ 3 may use max_total + 1
    let mut big = Vec::new();
    fn rec(top: i64, budget: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        out.push(cur.clone());
        let mut m = top;
        while m >= 3 {
            if m - 2 <= budget {
                cur.push(m as u32);
                rec(m - 1, budget - (m - 2), cur, out);
                cur.pop();
            }
            m -= 1;
        }
    }
    if max_total >= -1 {
        rec(max_total + 3, max_total + 1, &mut Vec::new(), &mut big);
    }
    let mut out = Vec::new();
    for s in big {
        let w: i64 = s.iter().map(|&m| m as i64 - 2).sum();
        for (tail, dw) in [(&[][..], 0), (&[1u32][..], -1), (&[2u32][..], 0), (&[2u32, 1][..], -1)] {
            if w + dw <= max_total {
                let mut v = s.clone();
                v.extend_from_slice(tail);
                out.push(v);
            }
        }
    }
    out
}

/// Multisets of `(level, flavor)` with total level `n`, sorted descending.
fn colored_multisets(n: i64, colors: usize) -> Vec<Vec<(u32, u16)>> {
    let mut out = Vec::new();
    fn rec(
        rem: i64,
        max: (u32, u16),
        colors: usize,
        cur: &mut Vec<(u32, u16)>,
        out: &mut Vec<Vec<(u32, u16)>>,
    ) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        let mut level = (max.0 as i64).min(rem);
        while level >= 1 {
            let top_flavor = if level as u32 == max.0 { max.1 } else { colors as u16 - 1 };
            for fl in (0..=top_flavor).rev() {
                cur.push((level as u32, fl));
                rec(rem - level, (level as u32, fl), colors, cur, out);
                cur.pop();
            }
            level -= 1;
        }
    }
    if n >= 0 && colors > 0 {
        let mut cur = Vec::new();
        rec(n, (n.max(0) as u32, colors as u16 - 1), colors, &mut cur, &mut out);
    }
    out
}

/// A slice with its basis and an index for lookup.
#[derive(Clone, Debug)]
pub struct Slice {
    pub key: SliceKey,
    pub basis: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl Slice {
    pub fn new(key: SliceKey, basis: Vec<BasisState>) -> Self {
        let index = basis.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Slice { key, basis, index }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Coordinates of a vector lying in this slice.
    pub fn coordinates(&self, v: &StateVector) -> Result<crate::linalg::SparseVec> {
        let mut pairs = Vec::with_capacity(v.len());
        for (s, c) in v.terms() {
            let i = self
                .index_of(s)
                .ok_or_else(|| Error::InvalidArgument("vector leaves the slice".into()))?;
            pairs.push((i, c.clone()));
        }
        Ok(crate::linalg::SparseVec::from_pairs(pairs))
    }

    pub fn vector(&self, coords: &crate::linalg::SparseVec) -> StateVector {
        let mut v = StateVector::zero();
        for (i, c) in coords.iter() {
            v.add_term(&self.basis[i], c);
        }
        v
    }
}

/// Finite linear combination of basis states.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateVector(BTreeMap<BasisState, Rational>);

impl StateVector {
    pub fn zero() -> Self {
        StateVector::default()
    }

    pub fn basis(s: BasisState) -> Self {
        let mut m = BTreeMap::new();
        m.insert(s, Rational::one());
        StateVector(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisState, &Rational)> {
        self.0.iter()
    }

    pub fn coefficient(&self, s: &BasisState) -> Rational {
        self.0.get(s).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, s: &BasisState, c: &Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.get_mut(s) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.0.remove(s);
                }
            }
            None => {
                self.0.insert(s.clone(), c.clone());
            }
        }
    }

    pub fn add_scaled(&mut self, other: &StateVector, c: &Rational) {
        for (s, v) in &other.0 {
            self.add_term(s, &(v * c));
        }
    }

    pub fn scale(&self, c: &Rational) -> StateVector {
        let mut out = StateVector::zero();
        out.add_scaled(self, c);
        out
    }
}

type Terms = Vec<(BasisState, Rational)>;

/// Memo entries kept per actor before the memo is dropped.
const CACHE_LIMIT: usize = 1 << 16;

/// Mode actions on a module, with per-instance memoization. Not `Sync`: use
/// one actor per thread.
#[derive(Debug)]
pub struct ModeActor {
    module: ModuleSpec,
    algebra: AlgebraSpec,
    min_w: Rational,
    /// Sum of the momentum terms `α·α/2` of the boson factors.
    offset: Rational,
    /// generator → (factor, local generator)
    gen_factor: Vec<(usize, usize)>,
    odd: Vec<bool>,
    gen_weight: Vec<Rational>,
    cache: RefCell<HashMap<(Monomial, i64, BasisState), Terms>>,
    vir_cache: RefCell<HashMap<(usize, i64, Vec<u32>), Vec<(Vec<u32>, Rational)>>>,
}

impl ModeActor {
    pub fn new(module: &ModuleSpec) -> Self {
        let algebra = module.algebra();
        let mut gen_factor = Vec::new();
        for (fi, f) in module.factors.iter().enumerate() {
            let n = match f {
                ModuleFactor::Ghost => 2,
                ModuleFactor::Boson { k, l, .. } => k + l,
                ModuleFactor::VirasoroVacuum { .. } => 1,
            };
            for local in 0..n {
                gen_factor.push((fi, local));
            }
        }
        let gens = algebra.generators();
        ModeActor {
            min_w: module.min_weight(),
            offset: module
                .factors
                .iter()
                .map(|f| match f {
                    ModuleFactor::Boson { k, alpha, .. } => half_norm(*k, alpha),
                    _ => Rational::zero(),
                })
                .sum(),
            odd: gens.iter().map(|g| g.is_odd()).collect(),
            gen_weight: gens.iter().map(|g| g.degree.weight.clone()).collect(),
            module: module.clone(),
            algebra,
            gen_factor,
            cache: RefCell::new(HashMap::new()),
            vir_cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn module(&self) -> &ModuleSpec {
        &self.module
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    /// `u(n)` applied to a vector.
    pub fn apply(&self, u: &OperatorExpr, n: i64, v: &StateVector) -> Result<StateVector> {
        let mut out = StateVector::zero();
        for (s, c) in v.terms() {
            for (m, cu) in u.terms() {
                for (t, x) in self.apply_mono(m, n, s)? {
                    out.add_term(&t, &(&(c * cu) * &x));
                }
            }
        }
        Ok(out)
    }

    pub fn apply_state(&self, u: &OperatorExpr, n: i64, s: &BasisState) -> Result<StateVector> {
        self.apply(u, n, &StateVector::basis(s.clone()))
    }

    /// Matrix of `u(n)` from `source` to `target` (rows index `target`).
    /// Components landing outside `target` are an error.
    pub fn mode_matrix(&self, u: &OperatorExpr, n: i64, source: &Slice, target: &Slice) -> Result<SparseMatrix> {
        let mut trip = Vec::new();
        for (j, s) in source.basis.iter().enumerate() {
            let img = self.apply_state(u, n, s)?;
            for (t, c) in img.terms() {
                let i = target.index_of(t).ok_or_else(|| {
                    Error::UnsupportedAction(format!("mode {n} maps outside slice {:?}", target.key))
                })?;
                trip.push((i, j, c.clone()));
            }
        }
        Ok(SparseMatrix::from_triplets(target.dim(), source.dim(), trip))
    }

    /// Target slice of `u(n)` on `source` for homogeneous `u`.
    pub fn target_slice(&self, u: &OperatorExpr, n: i64, source: &Slice) -> Result<Slice> {
        let d = self
            .algebra
            .degree(u)?
            .unwrap_or_else(|| crate::grading::BiDegree::new(0, 0));
        let w = &(&source.key.weight + &d.weight) - &Rational::from_integer(n + 1);
        Ok(self.module.slice(source.key.fermion + d.fermion, &w))
    }

    fn mono_weight(&self, m: &[Factor]) -> Rational {
        let mut w = Rational::zero();
        for f in m {
            w += &self.gen_weight[f.gen];
            w += Rational::from_integer(f.derivs as i64);
        }
        w
    }

    fn apply_mono(&self, m: &[Factor], n: i64, s: &BasisState) -> Result<Terms> {
        if m.is_empty() {
            return Ok(if n == -1 { vec![(s.clone(), Rational::one())] } else { vec![] });
        }
        let w = &self.offset + &Rational::from_integer(s.0.iter().map(state_level).sum());
        let out_w = &(&w + &self.mono_weight(m)) - &Rational::from_integer(n + 1);
        if out_w < self.min_w {
            return Ok(vec![]);
        }
        if m.len() == 1 {
            return self.apply_factor(m[0], n, s);
        }
        let key = (m.to_vec(), n, s.clone());
        if let Some(r) = self.cache.borrow().get(&key) {
            return Ok(r.clone());
        }
        let a = &m[..1];
        let rest = &m[1..];
        let wa = self.mono_weight(a);
        let wr = self.mono_weight(rest);
        let mut acc: BTreeMap<BasisState, Rational> = BTreeMap::new();
        let mut push = |t: BasisState, c: Rational| {
            let e = acc.entry(t).or_default();
            *e += c;
        };
        // Σ_{k<0} a(k) rest(n−k−1) s
        let kmin = (&(&Rational::from_integer(n) - &w) - &(&wr - &self.min_w)).floor();
        let kmin = i64::try_from(kmin).unwrap_or(i64::MIN / 4);
        for k in kmin..0 {
            for (t, c) in self.apply_mono(rest, n - k - 1, s)? {
                for (t2, c2) in self.apply_mono(a, k, &t)? {
                    push(t2, &c * &c2);
                }
            }
        }
        // ± Σ_{k≥0} rest(n−k−1) a(k) s
        let sign = {
            let pa = a.iter().filter(|f| self.odd[f.gen]).count();
            let pr = rest.iter().filter(|f| self.odd[f.gen]).count();
            if pa * pr % 2 == 1 { -Rational::one() } else { Rational::one() }
        };
        let kmax = (&(&(&w + &wa) - &Rational::one()) - &self.min_w).floor();
        let kmax = i64::try_from(kmax).unwrap_or(-1);
        for k in 0..=kmax {
            for (t, c) in self.apply_mono(a, k, s)? {
                for (t2, c2) in self.apply_mono(rest, n - k - 1, &t)? {
                    push(t2, &(&c * &c2) * &sign);
                }
            }
        }
        let out: Terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, out.clone());
        Ok(out)
    }

    /// `(∂^d g)(n) = (−1)^d n(n−1)⋯(n−d+1) g(n−d)`.
    fn apply_factor(&self, f: Factor, n: i64, s: &BasisState) -> Result<Terms> {
        let mut c = falling(n, f.derivs);
        if c.is_zero() {
            return Ok(vec![]);
        }
        if f.derivs % 2 == 1 {
            c = -c;
        }
        let mut out = self.generator_mode(f.gen, n - f.derivs as i64, s)?;
        for (_, x) in out.iter_mut() {
            *x = &*x * &c;
        }
        Ok(out)
    }

    /// Raw generator mode `g(n)` on a basis state.
    pub fn generator_mode(&self, g: usize, n: i64, s: &BasisState) -> Result<Terms> {
        let (fi, local) = *self
            .gen_factor
            .get(g)
            .ok_or_else(|| Error::UnsupportedAction(format!("generator #{g}")))?;
        let mut sign = Rational::one();
        if self.odd[g] {
            let before: i64 = s.0[..fi].iter().map(factor_fermion).sum();
            if before % 2 != 0 {
                sign = -sign;
            }
        }
        let st = &s.0[fi];
        let local_terms: Vec<(FactorState, Rational)> = match (&self.module.factors[fi], st) {
            (ModuleFactor::Ghost, FactorState::Ghost { b, c }) => ghost_mode(local, n, b, c).into_iter().collect(),
            (ModuleFactor::Boson { k, alpha, .. }, FactorState::Boson(ms)) => boson_mode(*k, alpha, local, n, ms),
            (ModuleFactor::VirasoroVacuum { kappa }, FactorState::Virasoro(ps)) => self
                .vir_apply(fi, kappa, n - 1, ps)
                .into_iter()
                .map(|(p, c)| (FactorState::Virasoro(p), c))
                .collect(),
            _ => unreachable!("state does not match module factor"),
        };
        Ok(local_terms
            .into_iter()
            .map(|(fs, c)| {
                let mut t = s.clone();
                t.0[fi] = fs;
                (t, &c * &sign)
            })
            .collect())
    }

    /// Mode `L(n) = L_{n−1}` of the sum of the non-ghost factors' Virasoro
    /// elements.
    pub fn matter_virasoro_mode(&self, n: i64, s: &BasisState) -> StateVector {
        let n = n - 1;
        let mut out = StateVector::zero();
        for (fi, f) in self.module.factors.iter().enumerate() {
            let local: Vec<(FactorState, Rational)> = match (f, &s.0[fi]) {
                (ModuleFactor::Ghost, _) => continue,
                (ModuleFactor::Boson { k, l, alpha }, FactorState::Boson(ms)) => sugawara(*k, *k + *l, alpha, n, ms),
                (ModuleFactor::VirasoroVacuum { kappa }, FactorState::Virasoro(ps)) => self
                    .vir_apply(fi, kappa, n, ps)
                    .into_iter()
                    .map(|(p, c)| (FactorState::Virasoro(p), c))
                    .collect(),
                _ => unreachable!("state does not match module factor"),
            };
            for (fs, c) in local {
                let mut t = s.clone();
                t.0[fi] = fs;
                out.add_term(&t, &c);
            }
        }
        out
    }

    /// `L_m` on a PBW state of `M(κ)`.
    fn vir_apply(&self, fi: usize, kappa: &Rational, m: i64, parts: &[u32]) -> Vec<(Vec<u32>, Rational)> {
        let key = (fi, m, parts.to_vec());
        if let Some(r) = self.vir_cache.borrow().get(&key) {
            return r.clone();
        }
        let out = if parts.is_empty() {
            if m <= -2 {
                vec![(vec![(-m) as u32], Rational::one())]
            } else {
                vec![]
            }
        } else {
            let p1 = parts[0] as i64;
            let rest = &parts[1..];
            if -m >= p1 {
                let mut v = vec![(-m) as u32];
                v.extend_from_slice(parts);
                vec![(v, Rational::one())]
            } else {
                // L_m L_{−p} X = L_{−p} L_m X + (m + p) L_{m−p} X + κ/12 (m³ − m) δ_{m,p} X
                let mut acc: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
                for (x, c) in self.vir_apply(fi, kappa, m, rest) {
                    for (y, c2) in self.vir_apply(fi, kappa, -p1, &x) {
                        *acc.entry(y).or_default() += &c * &c2;
                    }
                }
                if m + p1 != 0 {
                    let coef = Rational::from_integer(m + p1);
                    for (y, c) in self.vir_apply(fi, kappa, m - p1, rest) {
                        *acc.entry(y).or_default() += &c * &coef;
                    }
                }
                if m == p1 {
                    let coef = kappa * &Rational::new(m * m * m - m, 12);
                    *acc.entry(rest.to_vec()).or_default() += coef;
                }
                acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
            }
        };
        self.vir_cache.borrow_mut().insert(key, out.clone());
        out
    }

    /// `g(n)† = g(2‖g‖ − 2 − n)`.
    pub fn adjoint_mode(&self, g: usize, n: i64) -> (usize, i64) {
        let w = self.gen_weight[g].to_i64().expect("integral generator weight");
        (g, 2 * w - 2 - n)
    }

    /// Hermitean form on basis states: product of the factor forms.
    pub fn form(&self, s: &BasisState, t: &BasisState) -> Rational {
        let mut out = Rational::one();
        for (fi, (a, b)) in s.0.iter().zip(&t.0).enumerate() {
            let v = match (&self.module.factors[fi], a, b) {
                (ModuleFactor::Ghost, FactorState::Ghost { .. }, FactorState::Ghost { .. }) => ghost_form(a, b),
                (ModuleFactor::Boson { k, .. }, FactorState::Boson(x), FactorState::Boson(y)) => boson_form(*k, x, y),
                (ModuleFactor::VirasoroVacuum { kappa }, FactorState::Virasoro(x), FactorState::Virasoro(y)) => {
                    self.vir_form(fi, kappa, x, y)
                }
                _ => unreachable!("state does not match module factor"),
            };
            if v.is_zero() {
                return v;
            }
            out = &out * &v;
        }
        out
    }

    pub fn form_vectors(&self, u: &StateVector, v: &StateVector) -> Rational {
        let mut acc = Rational::zero();
        for (s, a) in u.terms() {
            for (t, b) in v.terms() {
                let f = self.form(s, t);
                if !f.is_zero() {
                    acc += &(a * b) * &f;
                }
            }
        }
        acc
    }

    fn vir_form(&self, fi: usize, kappa: &Rational, x: &[u32], y: &[u32]) -> Rational {
        if x.iter().sum::<u32>() != y.iter().sum::<u32>() {
            return Rational::zero();
        }
        // ⟨L_{−p1}⋯v₀, w⟩ = ⟨v₀, ⋯L_{p2} L_{p1} w⟩
        let mut cur: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        cur.insert(y.to_vec(), Rational::one());
        for &p in x {
            let mut next: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
            for (st, c) in &cur {
                for (t, c2) in self.vir_apply(fi, kappa, p as i64, st) {
                    *next.entry(t).or_default() += c * &c2;
                }
            }
            cur = next.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        }
        cur.get(&Vec::new()).cloned().unwrap_or_default()
    }

    /// Gram matrix of the form on a slice paired with itself.
    pub fn gram_matrix(&self, slice: &Slice) -> SparseMatrix {
        self.gram_between(slice, slice)
    }

    /// `G[i][j] = ⟨left_i, right_j⟩`.
    pub fn gram_between(&self, left: &Slice, right: &Slice) -> SparseMatrix {
        let mut buckets: HashMap<Vec<FormKey>, Vec<usize>> = HashMap::new();
        for (j, t) in right.basis.iter().enumerate() {
            buckets.entry(self.form_key(t)).or_default().push(j);
        }
        let mut trip = Vec::new();
        for (i, s) in left.basis.iter().enumerate() {
            let Some(js) = buckets.get(&self.form_key(s)) else { continue };
            for &j in js {
                let f = self.form(s, &right.basis[j]);
                if !f.is_zero() {
                    trip.push((i, j, f));
                }
            }
        }
        SparseMatrix::from_triplets(left.dim(), right.dim(), trip)
    }

    /// States with different keys are orthogonal.
    fn form_key(&self, s: &BasisState) -> Vec<FormKey> {
        self.module
            .factors
            .iter()
            .zip(&s.0)
            .map(|(f, st)| match st {
                FactorState::Boson(ms) => FormKey::Exact(ms.clone()),
                _ => FormKey::Weight(factor_weight(f, st)),
            })
            .collect()
    }

    /// Module-wide minimum weight used to truncate mode sums.
    pub fn min_weight(&self) -> &Rational {
        &self.min_w
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum FormKey {
    Exact(Vec<(u32, u16)>),
    Weight(Rational),
}

/// Ghost generator mode: `local = 0` is `b`, `1` is `c`.
fn ghost_mode(local: usize, n: i64, b: &[u32], c: &[u32]) -> Option<(FactorState, Rational)> {
    let sgn = |k: usize| if k % 2 == 0 { Rational::one() } else { -Rational::one() };
    match (local, n < 0) {
        (0, true) => {
            let m = (-n) as u32;
            if b.contains(&m) {
                return None;
            }
            let pos = b.iter().filter(|&&x| x > m).count();
            let mut nb = b.to_vec();
            nb.insert(pos, m);
            Some((FactorState::Ghost { b: nb, c: c.to_vec() }, sgn(pos)))
        }
        (0, false) => {
            // {b(n), c(−n−1)} = 1
            let m = (n + 1) as u32;
            let t = c.iter().position(|&x| x == m)?;
            let mut nc = c.to_vec();
            nc.remove(t);
            Some((FactorState::Ghost { b: b.to_vec(), c: nc }, sgn(b.len() + t)))
        }
        (1, true) => {
            let m = (-n) as u32;
            if c.contains(&m) {
                return None;
            }
            let pos = c.iter().filter(|&&x| x > m).count();
            let mut nc = c.to_vec();
            nc.insert(pos, m);
            Some((FactorState::Ghost { b: b.to_vec(), c: nc }, sgn(b.len() + pos)))
        }
        (1, false) => {
            let m = (n + 1) as u32;
            let t = b.iter().position(|&x| x == m)?;
            let mut nb = b.to_vec();
            nb.remove(t);
            Some((FactorState::Ghost { b: nb, c: c.to_vec() }, sgn(t)))
        }
        _ => unreachable!("ghost factor has two generators"),
    }
}

/// `½ Σ_a η_aa Σ_i :j^a(i) j^a(n−i):` on a boson state.
fn sugawara(k: usize, rank: usize, alpha: &[Rational], n: i64, ms: &[(u32, u16)]) -> Vec<(FactorState, Rational)> {
    let top = ms.first().map_or(0, |x| x.0 as i64);
    let half = Rational::new(1, 2);
    let mut acc: BTreeMap<FactorState, Rational> = BTreeMap::new();
    for a in 0..rank {
        let coef = if a < k { half.clone() } else { -half.clone() };
        for i in n - top..=top {
            let (lo, hi) = if i <= n - i { (i, n - i) } else { (n - i, i) };
            for (x, c) in boson_mode(k, alpha, a, hi, ms) {
                let FactorState::Boson(xs) = &x else { unreachable!() };
                for (y, c2) in boson_mode(k, alpha, a, lo, xs) {
                    *acc.entry(y).or_default() += &(&c * &c2) * &coef;
                }
            }
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn boson_mode(k: usize, alpha: &[Rational], a: usize, n: i64, ms: &[(u32, u16)]) -> Vec<(FactorState, Rational)> {
    let eta = if a < k { 1 } else { -1 };
    match n.cmp(&0) {
        core::cmp::Ordering::Less => {
            let e = ((-n) as u32, a as u16);
            let pos = ms.iter().filter(|&&x| x > e).count();
            let mut v = ms.to_vec();
            v.insert(pos, e);
            vec![(FactorState::Boson(v), Rational::one())]
        }
        core::cmp::Ordering::Equal => {
            if alpha[a].is_zero() {
                vec![]
            } else {
                vec![(FactorState::Boson(ms.to_vec()), alpha[a].clone())]
            }
        }
        core::cmp::Ordering::Greater => {
            let e = (n as u32, a as u16);
            let count = ms.iter().filter(|&&x| x == e).count() as i64;
            if count == 0 {
                return vec![];
            }
            let pos = ms.iter().position(|&x| x == e).expect("present");
            let mut v = ms.to_vec();
            v.remove(pos);
            vec![(FactorState::Boson(v), Rational::from_integer(count * n * eta))]
        }
    }
}

fn boson_form(k: usize, x: &[(u32, u16)], y: &[(u32, u16)]) -> Rational {
    if x != y {
        return Rational::zero();
    }
    let mut out = Rational::one();
    let mut i = 0;
    while i < x.len() {
        let mut j = i;
        while j < x.len() && x[j] == x[i] {
            j += 1;
        }
        let (n, a) = x[i];
        let eta = if (a as usize) < k { 1 } else { -1 };
        let mult = (j - i) as u32;
        out = &out * &crate::rational::factorial(mult);
        out = &out * &Rational::from_integer(n as i64 * eta).pow(mult);
        i = j;
    }
    out
}

/// `⟨x, y⟩ = ε(x† y)` with `b(n)† = b(2−n)`, `c(n)† = c(−n−4)` and `ε` the
/// coefficient of `c(−3)c(−1)𝟙`. This is the form of the relative complex:
/// every mode except `b(1)` is adjoint to its dagger.
fn ghost_form(x: &FactorState, y: &FactorState) -> Rational {
    let (FactorState::Ghost { b: xb, c: xc }, FactorState::Ghost { b: yb, c: yc }) = (x, y) else {
        unreachable!()
    };
    if xc.len() + yc.len() != xb.len() + yb.len() + 2 {
        return Rational::zero();
    }
    // x = b(−n1)⋯c(−m1)⋯𝟙; x† applies o1† first, where o1 is the leftmost.
    let mut ops: Vec<(usize, i64)> = Vec::new();
    for &n in xb {
        ops.push((0, 2 + n as i64));
    }
    for &m in xc {
        ops.push((1, m as i64 - 4));
    }
    let mut cur: Vec<(Vec<u32>, Vec<u32>, Rational)> = vec![(yb.clone(), yc.clone(), Rational::one())];
    for (g, n) in ops {
        let mut next = Vec::new();
        for (b, c, coef) in cur {
            if let Some((FactorState::Ghost { b: nb, c: nc }, s)) = ghost_mode(g, n, &b, &c) {
                next.push((nb, nc, &coef * &s));
            }
        }
        cur = next;
    }
    let mut acc = Rational::zero();
    for (b, c, coef) in cur {
        if b.is_empty() && c == [3, 1] {
            acc += coef;
        }
    }
    acc
}

/// Outcome of [`check_commutative`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutativityReport {
    pub checked: usize,
    /// `(m, k, state)` of the first failing mode pair.
    pub first_failure: Option<(i64, i64, BasisState)>,
}

impl CommutativityReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Compares the commutator `[u(m), v(k)]` computed from the module action
/// with `Σ_j C(m,j) (u∘_j v)(m+k−j)` from the engine's OPE, on every basis
/// state of weight at most `min + depth` and `|m|, |k| ≤ depth`.
pub fn check_commutative(
    engine: &WickEngine,
    actor: &ModeActor,
    u: &OperatorExpr,
    v: &OperatorExpr,
    depth: i64,
) -> Result<CommutativityReport> {
    if depth <= 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let alg = engine.algebra();
    let du = alg.degree(u)?.unwrap_or_else(|| crate::grading::BiDegree::new(0, 0));
    let dv = alg.degree(v)?.unwrap_or_else(|| crate::grading::BiDegree::new(0, 0));
    let sign = if du.is_odd() && dv.is_odd() { -Rational::one() } else { Rational::one() };
    let ope = engine.ope(u, v)?;
    let module = actor.module();
    let mut checked = 0;
    for level in 0..=depth {
        let w = &module.min_weight() + &Rational::from_integer(level);
        let (lo, hi) = module.fermion_range(&w);
        for p in lo..=hi {
            for s in module.basis(p, &w) {
                let sv = StateVector::basis(s.clone());
                for m in -depth..=depth {
                    for k in -depth..=depth {
                        let vs = actor.apply(v, k, &sv)?;
                        let mut lhs = actor.apply(u, m, &vs)?;
                        let us = actor.apply(u, m, &sv)?;
                        let vus = actor.apply(v, k, &us)?;
                        lhs.add_scaled(&vus, &-sign.clone());
                        let mut rhs = StateVector::zero();
                        for (j, p_j) in &ope {
                            let c = binomial(m, *j as u32);
                            if c.is_zero() {
                                continue;
                            }
                            rhs.add_scaled(&actor.apply(p_j, m + k - j, &sv)?, &c);
                        }
                        checked += 1;
                        if lhs != rhs {
                            return Ok(CommutativityReport {
                                checked,
                                first_failure: Some((m, k, s)),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(CommutativityReport {
        checked,
        first_failure: None,
    })
}

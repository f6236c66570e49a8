//! BRST current, anomaly, and the cohomology of `Λ ⊗ M`.

use alloc::collections::BTreeMap;
use core::cell::RefCell;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{AlgebraSpec, Family};
use crate::error::{Error, Result};
use crate::expr::{Factor, OperatorExpr};
use crate::fock::{
    make_ghost_fock, tensor_modules, BasisState, FactorState, ModeActor, ModuleSpec, Slice, SliceKey,
    StateVector,
};
use crate::linalg::{Echelon, SparseMatrix, SparseVec};
use crate::rational::Rational;
use crate::wick::WickEngine;

fn check_ghost_block(alg: &AlgebraSpec) -> Result<()> {
    match alg.blocks().first() {
        Some(b) if b.family == Family::Bc { lambda: 2 } && b.start == 0 => Ok(()),
        _ => Err(Error::InvalidArgument(
            "BRST current needs a bc system with λ = 2 as the first tensor factor".into(),
        )),
    }
}

/// The ghost Virasoro element `−:∂b c: − 2:b ∂c:` (λ = 2).
fn ghost_virasoro() -> OperatorExpr {
    let mut x = OperatorExpr::term(-Rational::one(), vec![Factor::new(0, 1), Factor::new(1, 0)]);
    x.add_term(&Rational::from_integer(-2), &[Factor::new(0, 0), Factor::new(1, 1)]);
    x
}

/// Matter Virasoro element: total minus the ghost part.
pub fn matter_virasoro(alg: &AlgebraSpec) -> Result<OperatorExpr> {
    check_ghost_block(alg)?;
    let total = alg.virasoro().ok_or(Error::NoVirasoro)?;
    Ok(total - &ghost_virasoro())
}

/// `J = :c L: + :b :c ∂c::` for `alg = bc(2) ⊗ matter`.
pub fn brst_current(eng: &WickEngine) -> Result<OperatorExpr> {
    let alg = eng.algebra();
    let l = matter_virasoro(alg)?;
    let b = OperatorExpr::generator(0);
    let c = OperatorExpr::generator(1);
    let dc = eng.derivative(&c)?;
    let cl = eng.wick(&c, &l)?;
    let bcdc = eng.wick(&b, &eng.wick(&c, &dc)?)?;
    Ok(&cl + &bcdc)
}

/// `J ∘₀ J` computed by the engine.
pub fn anomaly(eng: &WickEngine) -> Result<OperatorExpr> {
    let j = brst_current(eng)?;
    eng.prod(&j, &j, 0)
}

/// `(3/2) ∂(:∂²c c:) + (κ − 26)/12 :∂³c c:` with the algebra's (possibly
/// symbolic) central charge, where `κ` is the matter central charge.
pub fn anomaly_expected(eng: &WickEngine) -> Result<OperatorExpr> {
    let alg = eng.algebra();
    check_ghost_block(alg)?;
    let c = OperatorExpr::generator(1);
    let d2c = eng.derivative_n(&c, 2)?;
    let d3c = eng.derivative_n(&c, 3)?;
    let first = eng.derivative(&eng.wick(&d2c, &c)?)?.scale(&Rational::new(3, 2));
    // total κ includes −26 from the ghosts
    let matter_kappa = alg.kappa() + &OperatorExpr::scalar(Rational::from_integer(26));
    let coef = (&matter_kappa - &OperatorExpr::scalar(Rational::from_integer(26))).scale(&Rational::new(1, 12));
    let second = eng.wick(&coef, &eng.wick(&d3c, &c)?)?;
    Ok(&first + &second)
}

/// Dimensions and representatives of one cohomology slice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyResult {
    pub key: SliceKey,
    pub dim_c: usize,
    pub dim_z: usize,
    pub dim_b: usize,
    pub dim_h: usize,
    pub representatives: Vec<StateVector>,
}

/// `Λ ⊗ M` with `Q = J(0)`.
#[derive(Debug)]
pub struct BrstComplex {
    matter: ModuleSpec,
    module: ModuleSpec,
    actor: ModeActor,
    current: OperatorExpr,
    kappa: Rational,
    ghost_actor: ModeActor,
    matter_actor: ModeActor,
    /// `:b :c ∂c::` in the ghost algebra.
    ghost_current: OperatorExpr,
    /// `(k, m) ↦ L_m(−k−1) m` on matter states.
    l_cache: RefCell<BTreeMap<(i64, BasisState), StateVector>>,
    g_cache: RefCell<BTreeMap<BasisState, StateVector>>,
}

/// Entries kept in each differential memo before it is dropped.
const MEMO_LIMIT: usize = 1 << 17;

impl BrstComplex {
    /// Builds the complex; a total central charge other than 0 (matter κ ≠ 26)
    /// is an error unless `allow_anomaly`.
    pub fn new(matter: &ModuleSpec, allow_anomaly: bool) -> Result<Self> {
        if matter.has_ghosts() {
            return Err(Error::InvalidArgument("matter module already contains ghosts".into()));
        }
        let kappa = matter.kappa();
        if kappa != Rational::from_integer(26) && !allow_anomaly {
            return Err(Error::Anomalous(kappa.to_string()));
        }
        let module = tensor_modules(&make_ghost_fock(), matter);
        let alg = module.algebra();
        let eng = WickEngine::new(&alg)?;
        let current = brst_current(&eng)?;
        let ghosts = make_ghost_fock();
        let ghost_alg = ghosts.algebra();
        let geng = WickEngine::new(&ghost_alg)?;
        let (b, c) = (OperatorExpr::generator(0), OperatorExpr::generator(1));
        let ghost_current = geng.wick(&b, &geng.wick(&c, &geng.derivative(&c)?)?)?;
        let matter_actor = ModeActor::new(matter);
        matter_actor.algebra().virasoro().ok_or(Error::NoVirasoro)?;
        Ok(BrstComplex {
            matter: matter.clone(),
            actor: ModeActor::new(&module),
            module,
            current,
            kappa,
            ghost_actor: ModeActor::new(&ghosts),
            matter_actor,
            ghost_current,
            l_cache: RefCell::new(BTreeMap::new()),
            g_cache: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn matter(&self) -> &ModuleSpec {
        &self.matter
    }

    pub fn module(&self) -> &ModuleSpec {
        &self.module
    }

    pub fn actor(&self) -> &ModeActor {
        &self.actor
    }

    pub fn current(&self) -> &OperatorExpr {
        &self.current
    }

    pub fn matter_kappa(&self) -> &Rational {
        &self.kappa
    }

    pub fn slice(&self, p: i64, w: &Rational) -> Slice {
        self.module.slice(p, w)
    }

    /// Matrix of `Q` from `source` to `target` (same weight, degree + 1).
    pub fn differential_between(&self, source: &Slice, target: &Slice) -> Result<SparseMatrix> {
        if target.key.fermion != source.key.fermion + 1 || target.key.weight != source.key.weight {
            return Err(Error::InvalidArgument("Q maps (p, w) to (p + 1, w)".into()));
        }
        // J(0) = Σ_k c(k) ⊗ L_m(−k−1) + (:b c ∂c:)(0) ⊗ 1, since c and L_m
        // sit in different tensor factors
        let ghost_min = Rational::from_integer(-1);
        let matter_min = self.matter.min_weight();
        let mut l_cache = self.l_cache.borrow_mut();
        let mut g_cache = self.g_cache.borrow_mut();
        if l_cache.len() > MEMO_LIMIT {
            l_cache.clear();
        }
        if g_cache.len() > MEMO_LIMIT {
            g_cache.clear();
        }
        let mut trip = Vec::new();
        for (j, s) in source.basis.iter().enumerate() {
            let g = BasisState(vec![s.0[0].clone()]);
            let m = BasisState(s.0[1..].to_vec());
            let wg = self.ghost_actor.module().weight_of(&g);
            let wm = self.matter.weight_of(&m);
            let mut col: BTreeMap<BasisState, Rational> = BTreeMap::new();
            let mut push = |gs: &BasisState, ms: &BasisState, c: Rational| {
                let mut st = gs.0.clone();
                st.extend(ms.0.iter().cloned());
                *col.entry(BasisState(st)).or_default() += c;
            };
            // c(k) lowers the weight by k + 2, L_m(−k−1) raises it by k + 2
            let kmin = i64::try_from((&(&matter_min - &wm) - &Rational::from_integer(2)).ceil()).unwrap_or(0);
            let kmax = i64::try_from((&wg - &ghost_min).floor()).unwrap_or(0) - 2;
            for k in kmin..=kmax {
                let cg = self.ghost_actor.generator_mode(1, k, &g)?;
                if cg.is_empty() {
                    continue;
                }
                let key = (k, m.clone());
                if !l_cache.contains_key(&key) {
                    let v = self.matter_actor.matter_virasoro_mode(-k - 1, &m);
                    l_cache.insert(key.clone(), v);
                }
                let lm = &l_cache[&key];
                for (g2, c1) in &cg {
                    for (m2, c2) in lm.terms() {
                        push(g2, m2, c1 * c2);
                    }
                }
            }
            if !g_cache.contains_key(&g) {
                let v = self.ghost_actor.apply(&self.ghost_current, 0, &StateVector::basis(g.clone()))?;
                g_cache.insert(g.clone(), v);
            }
            for (g2, c) in g_cache[&g].terms() {
                push(g2, &m, c.clone());
            }
            for (t, c) in col {
                if c.is_zero() {
                    continue;
                }
                let i = target.index_of(&t).ok_or_else(|| {
                    Error::UnsupportedAction(format!("Q maps outside slice {:?}", target.key))
                })?;
                trip.push((i, j, c));
            }
        }
        Ok(SparseMatrix::from_triplets(target.dim(), source.dim(), trip))
    }

    /// `Q : C^{p,w} → C^{p+1,w}`.
    pub fn differential(&self, p: i64, w: &Rational) -> Result<SparseMatrix> {
        self.differential_between(&self.slice(p, w), &self.slice(p + 1, w))
    }

    /// `b(1)` (the zero mode `b_0`) on a slice.
    pub fn b1_matrix(&self, p: i64, w: &Rational) -> Result<SparseMatrix> {
        let b = OperatorExpr::generator(0);
        self.actor.mode_matrix(&b, 1, &self.slice(p, w), &self.slice(p - 1, w))
    }

    /// Total `L_0 = L(1)` on a slice.
    pub fn l0_matrix(&self, p: i64, w: &Rational) -> Result<SparseMatrix> {
        let l = self.actor.algebra().virasoro().ok_or(Error::NoVirasoro)?.clone();
        let s = self.slice(p, w);
        self.actor.mode_matrix(&l, 1, &s, &s)
    }

    /// Whether `Q ∘ Q` vanishes on `C^{p,w}`.
    pub fn q_squared_vanishes(&self, p: i64, w: &Rational) -> Result<bool> {
        let q1 = self.differential(p, w)?;
        let q2 = self.differential(p + 1, w)?;
        Ok(q2.mul(&q1)?.is_zero())
    }

    /// Cohomology at `(p, w)`; representatives are computed when `reps`.
    pub fn cohomology_slice(&self, p: i64, w: &Rational, reps: bool) -> Result<CohomologyResult> {
        let prev = self.slice(p - 1, w);
        let here = self.slice(p, w);
        let next = self.slice(p + 1, w);
        let q_in = self.differential_between(&prev, &here)?;
        let q_out = self.differential_between(&here, &next)?;
        cohomology_from(here, &q_in, &q_out, reps)
    }

    /// Cohomology over `weights × fermions`.
    pub fn cohomology(
        &self,
        weights: &[Rational],
        fermions: core::ops::RangeInclusive<i64>,
        reps: bool,
    ) -> Result<Vec<CohomologyResult>> {
        let mut out = Vec::new();
        for w in weights {
            for p in fermions.clone() {
                out.push(self.cohomology_slice(p, w, reps)?);
            }
        }
        Ok(out)
    }

    /// Weight-0 states annihilated by `b(1)`: those without `c(−2)`.
    pub fn relative_slice(&self, p: i64) -> Slice {
        let full = self.slice(p, &Rational::zero());
        let basis: Vec<BasisState> = full
            .basis
            .into_iter()
            .filter(|s| match &s.0[0] {
                FactorState::Ghost { c, .. } => !c.contains(&2),
                _ => true,
            })
            .collect();
        Slice::new(full.key, basis)
    }

    /// Relative cohomology `H_Δ^p` on `ker b(1) ∩ ker L₀`.
    pub fn relative_cohomology(&self, p: i64, reps: bool) -> Result<CohomologyResult> {
        let prev = self.relative_slice(p - 1);
        let here = self.relative_slice(p);
        let next = self.relative_slice(p + 1);
        let q_in = self.differential_between(&prev, &here)?;
        let q_out = self.differential_between(&here, &next)?;
        cohomology_from(here, &q_in, &q_out, reps)
    }

    /// `⟨r_i, r_j⟩` for vectors `r_i` in `slice`.
    pub fn representative_gram(&self, slice: &Slice, reps: &[StateVector]) -> Result<SparseMatrix> {
        let g = self.actor.gram_matrix(slice);
        let cols = reps.iter().map(|r| slice.coordinates(r)).collect::<Result<Vec<_>>>()?;
        let r = SparseMatrix::from_columns(slice.dim(), &cols);
        Ok(r.transpose().mul(&g)?.mul(&r)?)
    }

    /// `c(−1)𝟙 ⊗ v` (`ghosts = [1]`) or `c(−2)c(−1)𝟙 ⊗ v` (`ghosts = [2, 1]`).
    pub fn attach_ghosts(&self, ghosts: &[u32], v: &StateVector) -> StateVector {
        let mut out = StateVector::zero();
        for (s, c) in v.terms() {
            let mut st = vec![FactorState::Ghost {
                b: vec![],
                c: ghosts.to_vec(),
            }];
            st.extend(s.0.iter().cloned());
            out.add_term(&BasisState(st), c);
        }
        out
    }
}

fn cohomology_from(here: Slice, q_in: &SparseMatrix, q_out: &SparseMatrix, reps: bool) -> Result<CohomologyResult> {
    let dim_c = here.dim();
    let dim_b = q_in.rank();
    let rank_out = q_out.rank();
    let dim_z = dim_c - rank_out;
    let dim_h = dim_z - dim_b;
    let mut representatives = Vec::new();
    if reps && dim_h > 0 {
        let mut ech = Echelon::new();
        for col in q_in.columns() {
            ech.insert(&col);
        }
        for z in q_out.kernel() {
            if ech.insert(&z) {
                representatives.push(here.vector(&z));
            }
        }
        debug_assert_eq!(representatives.len(), dim_h);
    }
    Ok(CohomologyResult {
        key: here.key,
        dim_c,
        dim_z,
        dim_b,
        dim_h,
        representatives,
    })
}

/// `𝔓(M) = M[1]^{Vir₊} / N(M)` on a matter module.
#[derive(Clone, Debug)]
pub struct PhysicalSpace {
    /// The weight-1 slice of `M`.
    pub slice: Slice,
    /// Basis of `ker L₁ ∩ ker L₂`.
    pub invariants: Vec<SparseVec>,
    /// Basis of `N(M) = (L₋₁M[0] + L₋₂M[−1]) ∩ invariants`.
    pub null: Vec<SparseVec>,
    /// Invariants completing `null` to a basis; they represent `𝔓(M)`.
    pub representatives: Vec<SparseVec>,
}

impl PhysicalSpace {
    pub fn dim(&self) -> usize {
        self.representatives.len()
    }
}

pub fn physical_space(matter: &ModuleSpec) -> Result<PhysicalSpace> {
    let actor = ModeActor::new(matter);
    let l = actor.algebra().virasoro().ok_or(Error::NoVirasoro)?.clone();
    let one = Rational::one();
    let m1 = matter.slice(0, &one);
    let m0 = matter.slice(0, &Rational::zero());
    let mm1 = matter.slice(0, &Rational::from_integer(-1));
    // L_n = L(n + 1)
    let l1 = actor.mode_matrix(&l, 2, &m1, &m0)?;
    let l2 = actor.mode_matrix(&l, 3, &m1, &mm1)?;
    let stacked = stack_rows(&l1, &l2);
    let invariants = stacked.kernel();
    let lm1 = actor.mode_matrix(&l, 0, &m0, &m1)?;
    let lm2 = actor.mode_matrix(&l, -1, &mm1, &m1)?;
    let mut gens = lm1.columns();
    gens.extend(lm2.columns());
    let g = SparseMatrix::from_columns(m1.dim(), &gens);
    // combinations of the generators that are invariant
    let combos = stacked.mul(&g)?.kernel();
    let mut ech = Echelon::new();
    let mut null = Vec::new();
    for c in combos {
        let v = g.mul_vec(&c);
        if ech.insert(&v) {
            null.push(v);
        }
    }
    let mut representatives = Vec::new();
    for v in &invariants {
        if ech.insert(v) {
            representatives.push(v.clone());
        }
    }
    Ok(PhysicalSpace {
        slice: m1,
        invariants,
        null,
        representatives,
    })
}

fn stack_rows(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    let mut rows: Vec<SparseVec> = (0..a.nrows()).map(|i| a.row(i).clone()).collect();
    rows.extend((0..b.nrows()).map(|i| b.row(i).clone()));
    SparseMatrix::from_rows(a.ncols(), rows)
}

/// Rank data for `ν : 𝔓(M) → H^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuReport {
    pub degree: i64,
    pub physical_dim: usize,
    pub cohomology_dim: usize,
    /// Dimension of the image of the invariants in cohomology.
    pub image_dim: usize,
    /// Every image is a cocycle.
    pub lands_in_cocycles: bool,
    /// `N(M)` maps into coboundaries, so the map factors through `𝔓(M)`.
    pub kills_null: bool,
    /// Images of the representatives, as vectors in `C^{p,0}`.
    pub images: Vec<StateVector>,
}

impl NuReport {
    pub fn injective(&self) -> bool {
        self.kills_null && self.image_dim == self.physical_dim
    }

    pub fn surjective(&self) -> bool {
        self.lands_in_cocycles && self.image_dim == self.cohomology_dim
    }

    pub fn bijective(&self) -> bool {
        self.injective() && self.surjective()
    }
}

/// `ν₁ : v ↦ c(−1)v` and `ν₂ : v ↦ c(−2)c(−1)v` at weight 0.
pub fn nu_maps(cx: &BrstComplex, phys: &PhysicalSpace) -> Result<(NuReport, NuReport)> {
    Ok((nu_report(cx, phys, 1, &[1])?, nu_report(cx, phys, 2, &[2, 1])?))
}

fn nu_report(cx: &BrstComplex, phys: &PhysicalSpace, p: i64, ghosts: &[u32]) -> Result<NuReport> {
    let w = Rational::zero();
    let prev = cx.slice(p - 1, &w);
    let here = cx.slice(p, &w);
    let next = cx.slice(p + 1, &w);
    let q_in = cx.differential_between(&prev, &here)?;
    let q_out = cx.differential_between(&here, &next)?;
    let coh = cohomology_from(here.clone(), &q_in, &q_out, false)?;
    let mut ech = Echelon::new();
    for col in q_in.columns() {
        ech.insert(&col);
    }
    let image = |v: &SparseVec| -> Result<SparseVec> {
        let sv = phys.slice.vector(v);
        here.coordinates(&cx.attach_ghosts(ghosts, &sv))
    };
    let mut kills_null = true;
    for v in &phys.null {
        if !ech.contains(&image(v)?) {
            kills_null = false;
        }
    }
    let mut lands = true;
    let mut image_dim = 0;
    let mut images = Vec::new();
    for v in &phys.representatives {
        let x = image(v)?;
        if !q_out.mul_vec(&x).is_zero() {
            lands = false;
        }
        if ech.insert(&x) {
            image_dim += 1;
        }
        images.push(here.vector(&x));
    }
    Ok(NuReport {
        degree: p,
        physical_dim: phys.dim(),
        cohomology_dim: coh.dim_h,
        image_dim,
        lands_in_cocycles: lands,
        kills_null,
        images,
    })
}

/// Name of a slice for messages.
pub fn describe(key: &SliceKey) -> alloc::string::String {
    format!("(p={}, w={})", key.fermion, key.weight)
}

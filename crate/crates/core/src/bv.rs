//! The BV algebra on the cohomology `H^*(O)` of the operator-side complex
//! `C^*(O) = bc(λ=2) ⊗ O` with differential `Q u = J ∘₀ u`.
//!
//! Classes are represented by cycles. Two cycles are equal as classes iff
//! their difference is a boundary; at weight 0 this is decided by exact rank,
//! at weight `w ≠ 0` by the homotopy `[Q, b∘₁] = L∘₁ = w`, which gives the
//! explicit preimage `x = Q(b∘₁x)/w` of every boundary.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::RefCell;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{make_bc_system, tensor, AlgebraSpec};
use crate::brst::brst_current;
use crate::error::{Error, Result};
use crate::expr::{Monomial, OperatorExpr};
use crate::linalg::{Echelon, SparseMatrix, SparseVec};
use crate::rational::Rational;
use crate::wick::WickEngine;

#[derive(Debug)]
struct SliceData {
    basis: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

/// `C^*(O)` for a matter QOA `O` of central charge 26.
#[derive(Debug)]
pub struct OperatorComplex {
    eng: WickEngine,
    current: OperatorExpr,
    slices: RefCell<HashMap<(i64, i64), Rc<SliceData>>>,
    boundaries: RefCell<HashMap<(i64, i64), Rc<Echelon>>>,
}

/// A cohomology class given by a cycle of fermion degree `degree` and weight 0
/// (or any weight, for the homological triviality checks).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyClass {
    pub degree: i64,
    pub rep: OperatorExpr,
}

impl CohomologyClass {
    pub fn new(degree: i64, rep: OperatorExpr) -> Self {
        CohomologyClass { degree, rep }
    }
}

/// Dimensions and representatives of `H^{p}(O)` at one weight.
#[derive(Clone, Debug)]
pub struct OperatorCohomology {
    pub degree: i64,
    pub weight: i64,
    pub dim_c: usize,
    pub dim_h: usize,
    pub representatives: Vec<OperatorExpr>,
}

fn sign(e: i64) -> Rational {
    if e.rem_euclid(2) == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

impl OperatorComplex {
    /// Builds `bc(2) ⊗ matter`; matter central charge other than 26 is an
    /// error.
    pub fn new(matter: &AlgebraSpec) -> Result<Self> {
        match matter.kappa_value() {
            Some(k) if k == Rational::from_integer(26) => {}
            Some(k) => return Err(Error::Anomalous(k.to_string())),
            None => return Err(Error::InvalidArgument("matter central charge must be numeric".into())),
        }
        let alg = tensor(&make_bc_system(2), matter);
        let eng = WickEngine::new(&alg)?;
        let current = brst_current(&eng)?;
        Ok(OperatorComplex {
            eng,
            current,
            slices: RefCell::new(HashMap::new()),
            boundaries: RefCell::new(HashMap::new()),
        })
    }

    pub fn engine(&self) -> &WickEngine {
        &self.eng
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        self.eng.algebra()
    }

    pub fn current(&self) -> &OperatorExpr {
        &self.current
    }

    pub fn b(&self) -> OperatorExpr {
        OperatorExpr::generator(0)
    }

    pub fn c(&self) -> OperatorExpr {
        OperatorExpr::generator(1)
    }

    /// `Q u = J ∘₀ u`.
    pub fn differential(&self, u: &OperatorExpr) -> Result<OperatorExpr> {
        self.eng.prod(&self.current, u, 0)
    }

    /// `(p, w)` of a nonzero homogeneous expression.
    pub fn bidegree(&self, u: &OperatorExpr) -> Result<Option<(i64, i64)>> {
        Ok(match self.algebra().degree(u)? {
            None => None,
            Some(d) => {
                let w = d.weight.to_i64().ok_or(Error::NonHomogeneous)?;
                Some((d.fermion, w))
            }
        })
    }

    fn slice(&self, p: i64, w: i64) -> Result<Rc<SliceData>> {
        if let Some(s) = self.slices.borrow().get(&(p, w)) {
            return Ok(s.clone());
        }
        let basis = self.algebra().basis_enumerate(w, p)?;
        let index = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let s = Rc::new(SliceData { basis, index });
        self.slices.borrow_mut().insert((p, w), s.clone());
        Ok(s)
    }

    pub fn slice_basis(&self, p: i64, w: i64) -> Result<Vec<Monomial>> {
        Ok(self.slice(p, w)?.basis.clone())
    }

    fn coordinates(&self, s: &SliceData, u: &OperatorExpr) -> Result<SparseVec> {
        let mut pairs = Vec::with_capacity(u.len());
        for (m, c) in u.terms() {
            let i = s
                .index
                .get(m)
                .ok_or_else(|| Error::DimensionMismatch("expression leaves the slice".into()))?;
            pairs.push((*i, c.clone()));
        }
        Ok(SparseVec::from_pairs(pairs))
    }

    fn expr(&self, s: &SliceData, v: &SparseVec) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (i, c) in v.iter() {
            out.add_term(c, &s.basis[i]);
        }
        out
    }

    /// Matrix of `Q : C^{p,w} → C^{p+1,w}`.
    pub fn differential_matrix(&self, p: i64, w: i64) -> Result<SparseMatrix> {
        let src = self.slice(p, w)?;
        let dst = self.slice(p + 1, w)?;
        let mut cols = Vec::with_capacity(src.basis.len());
        for m in &src.basis {
            let q = self.differential(&OperatorExpr::term(Rational::one(), m.clone()))?;
            cols.push(self.coordinates(&dst, &q)?);
        }
        Ok(SparseMatrix::from_columns(dst.basis.len(), &cols))
    }

    fn boundary_space(&self, p: i64, w: i64) -> Result<Rc<Echelon>> {
        if let Some(e) = self.boundaries.borrow().get(&(p, w)) {
            return Ok(e.clone());
        }
        let q = self.differential_matrix(p - 1, w)?;
        let mut ech = Echelon::new();
        for col in q.columns() {
            ech.insert(&col);
        }
        let e = Rc::new(ech);
        self.boundaries.borrow_mut().insert((p, w), e.clone());
        Ok(e)
    }

    /// `H^{p}(O)` at weight `w`, with representatives completing the
    /// boundaries inside the cycles.
    pub fn cohomology(&self, p: i64, w: i64) -> Result<OperatorCohomology> {
        let here = self.slice(p, w)?;
        let q_out = self.differential_matrix(p, w)?;
        let mut ech = (*self.boundary_space(p, w)?).clone();
        let mut representatives = Vec::new();
        for z in q_out.kernel() {
            if ech.insert(&z) {
                representatives.push(self.expr(&here, &z));
            }
        }
        Ok(OperatorCohomology {
            degree: p,
            weight: w,
            dim_c: here.basis.len(),
            dim_h: representatives.len(),
            representatives,
        })
    }

    /// Whether `x` is `Q` of something, component by bidegree.
    pub fn is_boundary(&self, x: &OperatorExpr) -> Result<bool> {
        let mut parts: BTreeMap<(i64, i64), OperatorExpr> = BTreeMap::new();
        for (m, c) in x.terms() {
            let d = self.algebra().monomial_degree(m);
            let w = d.weight.to_i64().ok_or(Error::NonHomogeneous)?;
            parts.entry((d.fermion, w)).or_insert_with(OperatorExpr::zero).add_term(c, m);
        }
        for ((p, w), part) in parts {
            let ok = if w == 0 {
                let s = self.slice(p, 0)?;
                let v = self.coordinates(&s, &part)?;
                self.boundary_space(p, 0)?.contains(&v)
            } else {
                let h = self.eng.prod(&self.b(), &part, 1)?;
                let back = self.differential(&h)?.scale(&Rational::new(1, w));
                back == part
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_cycle(&self, x: &OperatorExpr) -> Result<bool> {
        Ok(self.differential(x)?.is_zero())
    }

    pub fn same_class(&self, x: &CohomologyClass, y: &CohomologyClass) -> Result<bool> {
        self.is_boundary(&(&x.rep - &y.rep))
    }

    pub fn unit(&self) -> CohomologyClass {
        CohomologyClass::new(0, OperatorExpr::one())
    }

    /// `u · v = u ∘₋₁ v`.
    pub fn dot(&self, u: &CohomologyClass, v: &CohomologyClass) -> Result<CohomologyClass> {
        self.product(Product::Wick, u, v)
    }

    pub fn product(&self, prod: Product, u: &CohomologyClass, v: &CohomologyClass) -> Result<CohomologyClass> {
        Ok(CohomologyClass::new(
            u.degree + v.degree,
            self.eng.prod(&u.rep, &v.rep, prod.index())?,
        ))
    }

    /// `Δu = b ∘₁ u`.
    pub fn bv_delta(&self, u: &CohomologyClass) -> Result<CohomologyClass> {
        Ok(CohomologyClass::new(u.degree - 1, self.eng.prod(&self.b(), &u.rep, 1)?))
    }

    /// `{u, v} = (−1)^{|u|} (Δ(uv) − (Δu)v − (−1)^{|u|} u(Δv))`.
    pub fn bv_bracket(&self, u: &CohomologyClass, v: &CohomologyClass) -> Result<CohomologyClass> {
        self.bracket_with(Product::Wick, u, v)
    }

    fn bracket_with(&self, prod: Product, u: &CohomologyClass, v: &CohomologyClass) -> Result<CohomologyClass> {
        let uv = self.product(prod, u, v)?;
        let mut x = self.bv_delta(&uv)?.rep;
        x = &x - &self.product(prod, &self.bv_delta(u)?, v)?.rep;
        x.add_scaled(&self.product(prod, u, &self.bv_delta(v)?)?.rep, &-sign(u.degree));
        Ok(CohomologyClass::new(u.degree + v.degree - 1, x.scale(&sign(u.degree))))
    }

    /// `(−1)^{|u|} (b ∘₀ u) ∘₀ v`, the bracket on `H¹`.
    pub fn bracket_via_circle(&self, u: &CohomologyClass, v: &CohomologyClass) -> Result<CohomologyClass> {
        let bu = self.eng.prod(&self.b(), &u.rep, 0)?;
        let x = self.eng.prod(&bu, &v.rep, 0)?.scale(&sign(u.degree));
        Ok(CohomologyClass::new(u.degree + v.degree - 1, x))
    }

    /// A random boundary of bidegree `(p, w)`.
    fn random_boundary(&self, rng: &mut ChaCha8Rng, p: i64, w: i64) -> Result<OperatorExpr> {
        let src = self.slice(p - 1, w)?;
        let mut out = OperatorExpr::zero();
        if src.basis.is_empty() {
            return Ok(out);
        }
        for _ in 0..2 {
            let m = &src.basis[rng.gen_range(0..src.basis.len())];
            let c = Rational::from_integer(rng.gen_range(-3i64..=3));
            let q = self.differential(&OperatorExpr::term(Rational::one(), m.clone()))?;
            out.add_scaled(&q, &c);
        }
        Ok(out)
    }
}

/// The binary operation used as the product in the axiom suite. Only `Wick`
/// is the BV product; `Circle(n)` exists as a negative control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Product {
    Wick,
    Circle(i64),
}

impl Product {
    fn index(self) -> i64 {
        match self {
            Product::Wick => -1,
            Product::Circle(n) => n,
        }
    }
}

/// Outcome of one axiom over all sampled tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomResult {
    pub name: String,
    pub checked: usize,
    pub passed: usize,
    pub first_failure: Option<String>,
}

impl AxiomResult {
    pub fn ok(&self) -> bool {
        self.checked > 0 && self.passed == self.checked
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BvReport {
    pub samples: usize,
    pub seed: u64,
    /// `dim H^p(O)` at weight 0 for `p = 0, 1, 2, 3`.
    pub cohomology_dims: Vec<usize>,
    pub axioms: Vec<AxiomResult>,
}

impl BvReport {
    pub fn passed(&self) -> bool {
        self.axioms.iter().all(|a| a.ok())
    }

    pub fn axiom(&self, name: &str) -> Option<&AxiomResult> {
        self.axioms.iter().find(|a| a.name == name)
    }
}

/// Options for [`verify_bv_axioms`].
#[derive(Clone, Copy, Debug)]
pub struct BvOptions {
    pub samples: usize,
    pub seed: u64,
    /// Largest `|w|` for the `∘ₙ` triviality checks (`w = −n−1`).
    pub max_weight: i64,
    pub product: Product,
}

impl Default for BvOptions {
    fn default() -> Self {
        BvOptions {
            samples: 50,
            seed: 0x5eed,
            max_weight: 4,
            product: Product::Wick,
        }
    }
}

struct Tally {
    results: Vec<AxiomResult>,
}

impl Tally {
    fn record(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        let r = match self.results.iter_mut().find(|r| r.name == name) {
            Some(r) => r,
            None => {
                self.results.push(AxiomResult {
                    name: name.into(),
                    checked: 0,
                    passed: 0,
                    first_failure: None,
                });
                self.results.last_mut().unwrap()
            }
        };
        r.checked += 1;
        if ok {
            r.passed += 1;
        } else if r.first_failure.is_none() {
            r.first_failure = Some(detail());
        }
    }
}

/// Randomized BV axiom suite on weight-0 classes of `cx`.
pub fn verify_bv_axioms(cx: &OperatorComplex, opts: &BvOptions) -> Result<BvReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reps: Vec<Vec<OperatorExpr>> = Vec::new();
    for p in 0..=3 {
        reps.push(cx.cohomology(p, 0)?.representatives);
    }
    let cohomology_dims: Vec<usize> = reps.iter().map(|r| r.len()).collect();
    let degrees: Vec<i64> = (0..=3).filter(|&p| !reps[p as usize].is_empty()).collect();
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("weight-0 cohomology is zero".into()));
    }
    let sample_in = |rng: &mut ChaCha8Rng, p: i64, shift: bool| -> Result<CohomologyClass> {
        let basis = &reps[p as usize];
        let mut x = OperatorExpr::zero();
        for r in basis {
            let c = Rational::from_integer(rng.gen_range(-2i64..=2));
            x.add_scaled(r, &c);
        }
        if x.is_zero() {
            x = basis[rng.gen_range(0..basis.len())].clone();
        }
        if shift {
            x = &x + &cx.random_boundary(rng, p, 0)?;
        }
        Ok(CohomologyClass::new(p, x))
    };
    let sample = |rng: &mut ChaCha8Rng, shift: bool| -> Result<CohomologyClass> {
        let p = degrees[rng.gen_range(0..degrees.len())];
        sample_in(rng, p, shift)
    };
    let mut t = Tally { results: Vec::new() };
    let prod = opts.product;
    let dot = |u: &CohomologyClass, v: &CohomologyClass| cx.product(prod, u, v);
    let bra = |u: &CohomologyClass, v: &CohomologyClass| cx.bracket_with(prod, u, v);
    let eq = |x: &OperatorExpr, y: &OperatorExpr| cx.is_boundary(&(x - y));
    let show = |c: &CohomologyClass| c.rep.render(&cx.algebra().names());

    for _ in 0..opts.samples {
        let u = sample(&mut rng, false)?;
        let v = sample(&mut rng, false)?;
        let s = sample(&mut rng, false)?;
        let (du, dv) = (u.degree, v.degree);

        let one = cx.unit();
        let lhs = dot(&one, &u)?;
        t.record("unit", eq(&lhs.rep, &u.rep)?, || format!("1·u ≠ u for u = {}", show(&u)));

        let uv = dot(&u, &v)?;
        let vu = dot(&v, &u)?;
        let ok = uv.degree == du + dv && eq(&uv.rep, &vu.rep.scale(&sign(du * dv)))?;
        t.record("commutativity", ok, || format!("u = {}, v = {}", show(&u), show(&v)));

        let a = dot(&uv, &s)?;
        let b = dot(&u, &dot(&v, &s)?)?;
        t.record("associativity", eq(&a.rep, &b.rep)?, || {
            format!("u = {}, v = {}, t = {}", show(&u), show(&v), show(&s))
        });

        let cyc = cx.is_cycle(&uv.rep)? && cx.is_cycle(&cx.bv_delta(&u)?.rep)? && cx.is_cycle(&bra(&u, &v)?.rep)?;
        t.record("closure", cyc, || format!("u = {}, v = {}", show(&u), show(&v)));

        let ddu = cx.bv_delta(&cx.bv_delta(&u)?)?;
        let ok = cx.bv_delta(&u)?.degree == du - 1 && cx.is_boundary(&ddu.rep)? && cx.bv_delta(&one)?.rep.is_zero();
        t.record("delta_squared", ok, || format!("Δ²u ∉ B for u = {}", show(&u)));

        let uv_b = bra(&u, &v)?;
        let vu_b = bra(&v, &u)?;
        let mut x = uv_b.rep.clone();
        x.add_scaled(&vu_b.rep, &sign((du - 1) * (dv - 1)));
        let ok = uv_b.degree == du + dv - 1 && cx.is_boundary(&x)?;
        t.record("antisymmetry", ok, || format!("u = {}, v = {}", show(&u), show(&v)));

        // {u,{v,t}} = {{u,v},t} + (−1)^{(|u|−1)(|v|−1)} {v,{u,t}}
        let l = bra(&u, &bra(&v, &s)?)?;
        let r1 = bra(&uv_b, &s)?;
        let r2 = bra(&v, &bra(&u, &s)?)?;
        let mut x = &l.rep - &r1.rep;
        x.add_scaled(&r2.rep, &-sign((du - 1) * (dv - 1)));
        t.record("jacobi", cx.is_boundary(&x)?, || {
            format!("u = {}, v = {}, t = {}", show(&u), show(&v), show(&s))
        });

        // {u, v·t} = {u,v}·t + (−1)^{(|u|−1)|v|} v·{u,t}
        let l = bra(&u, &dot(&v, &s)?)?;
        let r1 = dot(&uv_b, &s)?;
        let r2 = dot(&v, &bra(&u, &s)?)?;
        let mut x = &l.rep - &r1.rep;
        x.add_scaled(&r2.rep, &-sign((du - 1) * dv));
        t.record("leibniz", cx.is_boundary(&x)?, || {
            format!("u = {}, v = {}, t = {}", show(&u), show(&v), show(&s))
        });

        // Δ(uvt) = Δ(uv)t + (−1)^{|u|}uΔ(vt) + (−1)^{(|u|+1)|v|}vΔ(ut)
        //          − Δ(u)vt − (−1)^{|u|}uΔ(v)t − (−1)^{|u|+|v|}uvΔ(t)
        let dl = |x: &CohomologyClass| cx.bv_delta(x);
        let uvt = dot(&uv, &s)?;
        let mut x = dl(&uvt)?.rep;
        x = &x - &dot(&dl(&uv)?, &s)?.rep;
        x.add_scaled(&dot(&u, &dl(&dot(&v, &s)?)?)?.rep, &-sign(du));
        x.add_scaled(&dot(&v, &dl(&dot(&u, &s)?)?)?.rep, &-sign((du + 1) * dv));
        x = &x + &dot(&dot(&dl(&u)?, &v)?, &s)?.rep;
        x.add_scaled(&dot(&dot(&u, &dl(&v)?)?, &s)?.rep, &sign(du));
        x.add_scaled(&dot(&uv, &dl(&s)?)?.rep, &sign(du + dv));
        t.record("second_order", cx.is_boundary(&x)?, || {
            format!("u = {}, v = {}, t = {}", show(&u), show(&v), show(&s))
        });

        // representative independence
        let u2 = CohomologyClass::new(du, &u.rep + &cx.random_boundary(&mut rng, du, 0)?);
        let v2 = CohomologyClass::new(dv, &v.rep + &cx.random_boundary(&mut rng, dv, 0)?);
        let ok = eq(&dot(&u2, &v2)?.rep, &uv.rep)?
            && eq(&cx.bv_delta(&u2)?.rep, &cx.bv_delta(&u)?.rep)?
            && eq(&bra(&u2, &v2)?.rep, &uv_b.rep)?;
        t.record("representative_independence", ok, || {
            format!("u = {}, v = {}", show(&u), show(&v))
        });

        // ∘ₙ for n ≠ −1 is trivial on classes
        let mut ok = true;
        let mut bad = 0i64;
        for w in -opts.max_weight..=opts.max_weight {
            let n = -w - 1;
            if n == -1 {
                continue;
            }
            let x = cx.eng.prod(&u.rep, &v.rep, n)?;
            if !cx.is_boundary(&x)? {
                ok = false;
                bad = n;
                break;
            }
        }
        t.record("circle_triviality", ok, || {
            format!("u ∘{} v ∉ B for u = {}, v = {}", bad, show(&u), show(&v))
        });

    }
    if degrees.contains(&1) {
        for _ in 0..opts.samples {
            let u = sample_in(&mut rng, 1, true)?;
            let v = sample_in(&mut rng, 1, true)?;
            let x = bra(&u, &v)?;
            let y = cx.bracket_via_circle(&u, &v)?;
            t.record("bracket_routes", eq(&x.rep, &y.rep)?, || {
                format!("u = {}, v = {}", show(&u), show(&v))
            });
        }
    }
    Ok(BvReport {
        samples: opts.samples,
        seed: opts.seed,
        cohomology_dims,
        axioms: t.results,
    })
}

/// Checks `{c u, c v} = c (−u ∘₀ v)` as classes for weight-1 primaries
/// `u`, `v` of the matter algebra (generators of weight 1).
pub fn check_nu1_homomorphism(cx: &OperatorComplex) -> Result<AxiomResult> {
    let alg = cx.algebra();
    let mut prim = Vec::new();
    for (i, g) in alg.generators().iter().enumerate() {
        if i >= 2 && !alg.is_parameter(i) && g.degree.weight == Rational::one() && g.degree.fermion == 0 {
            prim.push(OperatorExpr::generator(i));
        }
    }
    let c = cx.c();
    let mut r = AxiomResult {
        name: "nu1_homomorphism".into(),
        checked: 0,
        passed: 0,
        first_failure: None,
    };
    for u in &prim {
        for v in &prim {
            let cu = CohomologyClass::new(1, cx.eng.wick(&c, u)?);
            let cv = CohomologyClass::new(1, cx.eng.wick(&c, v)?);
            let lhs = cx.bv_bracket(&cu, &cv)?;
            let rhs = cx.eng.wick(&c, &cx.eng.prod(u, v, 0)?.scale(&-Rational::one()))?;
            r.checked += 1;
            if cx.is_boundary(&(&lhs.rep - &rhs))? {
                r.passed += 1;
            } else if r.first_failure.is_none() {
                r.first_failure = Some(format!("{} , {}", u.render(&alg.names()), v.render(&alg.names())));
            }
        }
    }
    Ok(r)
}

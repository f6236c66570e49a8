//! Generator/OPE descriptions of commutative operator algebras and the
//! built-in families: bc ghosts, Virasoro, Heisenberg and current algebras.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{Factor, Monomial, OperatorExpr};
use crate::grading::BiDegree;
use crate::linalg::{exact_signature, SparseMatrix};
use crate::rational::Rational;
use crate::wick::WickEngine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// An ordinary quantum operator.
    Field,
    /// A central constant of weight 0 (used to carry a symbolic central
    /// charge); all its OPEs and derivatives vanish.
    Parameter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub name: String,
    pub degree: BiDegree,
    pub kind: GeneratorKind,
}

impl Generator {
    pub fn is_odd(&self) -> bool {
        self.degree.is_odd()
    }
}

/// Which family a contiguous block of generators came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Bc { lambda: i64 },
    Virasoro,
    Heisenberg { k: usize, l: usize },
    Parameter,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub family: Family,
    pub start: usize,
    pub len: usize,
}

/// Generators, OPE table (`ope[(g, h)][n] = g ∘_n h` for `n ≥ 0`), optional
/// Virasoro element and central charge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraSpec {
    pub name: String,
    generators: Vec<Generator>,
    ope: BTreeMap<(usize, usize), Vec<OperatorExpr>>,
    virasoro: Option<OperatorExpr>,
    kappa: OperatorExpr,
    blocks: Vec<Block>,
}

impl AlgebraSpec {
    /// Empty custom algebra, to be filled with [`add_generator`](Self::add_generator)
    /// and [`set_ope`](Self::set_ope).
    pub fn new(name: impl Into<String>) -> Self {
        AlgebraSpec {
            name: name.into(),
            generators: Vec::new(),
            ope: BTreeMap::new(),
            virasoro: None,
            kappa: OperatorExpr::zero(),
            blocks: Vec::new(),
        }
    }

    pub fn add_generator(&mut self, name: impl Into<String>, degree: BiDegree) -> Result<usize> {
        self.push_generator(name.into(), degree, GeneratorKind::Field, Family::Custom)
    }

    pub fn add_parameter(&mut self, name: impl Into<String>) -> Result<usize> {
        self.push_generator(name.into(), BiDegree::new(0, 0), GeneratorKind::Parameter, Family::Parameter)
    }

    fn push_generator(
        &mut self,
        name: String,
        degree: BiDegree,
        kind: GeneratorKind,
        family: Family,
    ) -> Result<usize> {
        if self.index_of(&name).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate generator `{name}`")));
        }
        let idx = self.generators.len();
        self.generators.push(Generator { name, degree, kind });
        match self.blocks.last_mut() {
            Some(b) if b.family == family && b.family == Family::Custom => b.len += 1,
            _ => self.blocks.push(Block {
                family,
                start: idx,
                len: 1,
            }),
        }
        Ok(idx)
    }

    /// Sets the polar coefficients `g ∘_n h`, `n = 0, 1, …`.
    pub fn set_ope(&mut self, g: usize, h: usize, poles: Vec<OperatorExpr>) {
        let mut poles = poles;
        while poles.last().is_some_and(|p| p.is_zero()) {
            poles.pop();
        }
        self.ope.insert((g, h), poles);
    }

    pub fn set_virasoro(&mut self, element: OperatorExpr, kappa: OperatorExpr) {
        self.virasoro = Some(element);
        self.kappa = kappa;
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, g: usize) -> &Generator {
        &self.generators[g]
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    pub fn gen(&self, name: &str) -> Result<OperatorExpr> {
        self.index_of(name)
            .map(OperatorExpr::generator)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    pub fn is_odd(&self, g: usize) -> bool {
        self.generators[g].is_odd()
    }

    pub fn is_parameter(&self, g: usize) -> bool {
        self.generators[g].kind == GeneratorKind::Parameter
    }

    pub fn ope_entry(&self, g: usize, h: usize) -> Option<&[OperatorExpr]> {
        self.ope.get(&(g, h)).map(Vec::as_slice)
    }

    pub fn ope_table(&self) -> &BTreeMap<(usize, usize), Vec<OperatorExpr>> {
        &self.ope
    }

    pub fn virasoro(&self) -> Option<&OperatorExpr> {
        self.virasoro.as_ref()
    }

    /// Central charge as an expression (a scalar unless symbolic).
    pub fn kappa(&self) -> &OperatorExpr {
        &self.kappa
    }

    pub fn kappa_value(&self) -> Option<Rational> {
        self.kappa.as_scalar()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn factor_degree(&self, f: &Factor) -> BiDegree {
        let d = &self.generators[f.gen].degree;
        BiDegree::new(d.fermion, &d.weight + &Rational::from_integer(f.derivs as i64))
    }

    pub fn monomial_degree(&self, m: &[Factor]) -> BiDegree {
        m.iter()
            .fold(BiDegree::new(0, 0), |acc, f| acc + self.factor_degree(f))
    }

    /// Common bidegree of all terms; `None` for the zero expression.
    pub fn degree(&self, e: &OperatorExpr) -> Result<Option<BiDegree>> {
        let mut out: Option<BiDegree> = None;
        for (m, _) in e.terms() {
            let d = self.monomial_degree(m);
            match &out {
                None => out = Some(d),
                Some(o) if *o == d => {}
                Some(_) => return Err(Error::NonHomogeneous),
            }
        }
        Ok(out)
    }

    /// Lower bound on the weight of any nonzero element: sum over fermionic
    /// generators of the negative weights of their derivatives.
    pub fn min_weight(&self) -> Result<Rational> {
        let mut total = Rational::zero();
        for g in &self.generators {
            if g.kind == GeneratorKind::Parameter {
                continue;
            }
            if g.is_odd() {
                let mut w = g.degree.weight.clone();
                while w.is_negative() {
                    total += &w;
                    w += Rational::one();
                }
            } else if !g.degree.weight.is_positive() {
                return Err(Error::UnboundedWeights(g.name.clone()));
            }
        }
        Ok(total)
    }

    /// Canonical monomial basis of the bidegree slice, in lexicographically
    /// descending order. Only freely generated families are supported;
    /// parameters are coefficients, so this is a basis over `ℚ[κ]`.
    pub fn basis_enumerate(&self, weight: i64, fermion: i64) -> Result<Vec<Monomial>> {
        if let Some(b) = self.blocks.iter().find(|b| b.family == Family::Custom) {
            return Err(Error::UnsupportedFamily(format!("{:?}", b.family)));
        }
        let min_w = self.min_weight()?;
        let target = Rational::from_integer(weight);
        let mut slots: Vec<(Factor, BiDegree, bool)> = Vec::new();
        for (gi, g) in self.generators.iter().enumerate() {
            if g.kind == GeneratorKind::Parameter {
                continue;
            }
            let mut d = 0u32;
            loop {
                let w = &g.degree.weight + &Rational::from_integer(d as i64);
                if !w.is_negative() && w > &target - &min_w {
                    break;
                }
                slots.push((Factor::new(gi, d), BiDegree::new(g.degree.fermion, w), g.is_odd()));
                d += 1;
            }
        }
        slots.sort_by(|a, b| a.0.cmp(&b.0));
        // Most negative weight still reachable from slot i onwards.
        let mut neg_suffix = vec![Rational::zero(); slots.len() + 1];
        for i in (0..slots.len()).rev() {
            let w = &slots[i].1.weight;
            neg_suffix[i] = if slots[i].2 && w.is_negative() {
                &neg_suffix[i + 1] + w
            } else {
                neg_suffix[i + 1].clone()
            };
        }
        let mut out = Vec::new();
        let mut cur = Vec::new();
        enumerate_slots(
            &slots,
            &neg_suffix,
            0,
            Rational::zero(),
            0,
            &target,
            fermion,
            &mut cur,
            &mut out,
        );
        out.sort();
        out.reverse();
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate_slots(
    slots: &[(Factor, BiDegree, bool)],
    neg_suffix: &[Rational],
    i: usize,
    w: Rational,
    f: i64,
    target: &Rational,
    fermion: i64,
    cur: &mut Monomial,
    out: &mut Vec<Monomial>,
) {
    if &w + &neg_suffix[i] > *target {
        return;
    }
    if i == slots.len() {
        if w == *target && f == fermion {
            out.push(cur.clone());
        }
        return;
    }
    let (factor, deg, odd) = &slots[i];
    // multiplicity zero
    enumerate_slots(slots, neg_suffix, i + 1, w.clone(), f, target, fermion, cur, out);
    let max_mult = if *odd { 1 } else { usize::MAX };
    let mut mult = 0usize;
    let mut w2 = w;
    let mut f2 = f;
    while mult < max_mult {
        mult += 1;
        w2 = &w2 + &deg.weight;
        f2 += deg.fermion;
        cur.push(*factor);
        if !deg.weight.is_positive() && !*odd {
            // weight-0 bosons would repeat forever; they are rejected by min_weight
            break;
        }
        if &w2 + &neg_suffix[i + 1] > *target {
            cur.truncate(cur.len() - mult);
            return;
        }
        enumerate_slots(slots, neg_suffix, i + 1, w2.clone(), f2, target, fermion, cur, out);
    }
    cur.truncate(cur.len() - mult);
}

/// bc system with `‖b‖ = λ`, `‖c‖ = 1 − λ`, Virasoro element
/// `(1−λ):∂b c: − λ:b ∂c:` and `κ = −12λ² + 12λ − 2`.
pub fn make_bc_system(lambda: i64) -> AlgebraSpec {
    let mut a = AlgebraSpec::new(format!("bc({lambda})"));
    a.generators = vec![
        Generator {
            name: "b".into(),
            degree: BiDegree::new(-1, lambda),
            kind: GeneratorKind::Field,
        },
        Generator {
            name: "c".into(),
            degree: BiDegree::new(1, 1 - lambda),
            kind: GeneratorKind::Field,
        },
    ];
    a.blocks = vec![Block {
        family: Family::Bc { lambda },
        start: 0,
        len: 2,
    }];
    a.set_ope(0, 1, vec![OperatorExpr::one()]);
    a.set_ope(1, 0, vec![OperatorExpr::one()]);
    a.set_ope(0, 0, vec![]);
    a.set_ope(1, 1, vec![]);
    let mut x = OperatorExpr::term(
        Rational::from_integer(1 - lambda),
        vec![Factor::new(0, 1), Factor::new(1, 0)],
    );
    x.add_term(&Rational::from_integer(-lambda), &[Factor::new(0, 0), Factor::new(1, 1)]);
    let kappa = Rational::from_integer(-12 * lambda * lambda + 12 * lambda - 2);
    a.set_virasoro(x, OperatorExpr::scalar(kappa));
    a
}

fn virasoro_poles(l: usize, top: OperatorExpr) -> Vec<OperatorExpr> {
    vec![
        OperatorExpr::term(Rational::one(), vec![Factor::new(l, 1)]),
        OperatorExpr::generator(l).scale(&Rational::from_integer(2)),
        OperatorExpr::zero(),
        top.scale(&Rational::new(1, 2)),
    ]
}

/// `O_κ(L)`: one generator of weight 2 with `L∘₃L = κ/2`, `L∘₁L = 2L`,
/// `L∘₀L = ∂L`.
pub fn make_virasoro(kappa: Rational) -> AlgebraSpec {
    let mut a = AlgebraSpec::new(format!("vir({kappa})"));
    a.generators = vec![Generator {
        name: "L".into(),
        degree: BiDegree::new(0, 2),
        kind: GeneratorKind::Field,
    }];
    a.blocks = vec![Block {
        family: Family::Virasoro,
        start: 0,
        len: 1,
    }];
    a.set_ope(0, 0, virasoro_poles(0, OperatorExpr::one().scale(&kappa)));
    a.set_virasoro(OperatorExpr::generator(0), OperatorExpr::scalar(kappa));
    a
}

/// Virasoro algebra whose central charge is the central parameter named
/// `param`.
pub fn make_virasoro_symbolic(param: &str) -> AlgebraSpec {
    let mut a = AlgebraSpec::new(format!("vir({param})"));
    a.generators = vec![
        Generator {
            name: "L".into(),
            degree: BiDegree::new(0, 2),
            kind: GeneratorKind::Field,
        },
        Generator {
            name: param.into(),
            degree: BiDegree::new(0, 0),
            kind: GeneratorKind::Parameter,
        },
    ];
    a.blocks = vec![
        Block {
            family: Family::Virasoro,
            start: 0,
            len: 1,
        },
        Block {
            family: Family::Parameter,
            start: 1,
            len: 1,
        },
    ];
    let k = OperatorExpr::generator(1);
    a.set_ope(0, 0, virasoro_poles(0, k.clone()));
    a.set_virasoro(OperatorExpr::generator(0), k);
    a
}

/// Heisenberg algebra of `k + l` bosons with `η = diag(1^k, (−1)^l)`,
/// Virasoro element `½ Σ η_aa :j^a j^a:` and `κ = k + l`.
pub fn make_heisenberg(k: usize, l: usize) -> Result<AlgebraSpec> {
    let n = k + l;
    if n == 0 {
        return Err(Error::InvalidArgument("Heisenberg algebra needs k + l ≥ 1".into()));
    }
    let mut a = AlgebraSpec::new(format!("heis({k},{l})"));
    for i in 0..n {
        a.generators.push(Generator {
            name: format!("j{}", i + 1),
            degree: BiDegree::new(0, 1),
            kind: GeneratorKind::Field,
        });
    }
    a.blocks = vec![Block {
        family: Family::Heisenberg { k, l },
        start: 0,
        len: n,
    }];
    let eta = |i: usize| if i < k { 1 } else { -1 };
    let mut vir = OperatorExpr::zero();
    for i in 0..n {
        for j in 0..n {
            let poles = if i == j {
                vec![OperatorExpr::zero(), OperatorExpr::scalar(Rational::from_integer(eta(i)))]
            } else {
                vec![]
            };
            a.set_ope(i, j, poles);
        }
        vir.add_term(&Rational::new(eta(i), 2), &[Factor::new(i, 0), Factor::new(i, 0)]);
    }
    a.set_virasoro(vir, OperatorExpr::scalar(Rational::from_integer(n as i64)));
    Ok(a)
}

/// Current algebra of a Lie algebra with structure constants
/// `[X_i, X_j] = Σ_k f[i][j][k] X_k` and invariant form `B`:
/// `X_i∘₁X_j = B_ij`, `X_i∘₀X_j = [X_i, X_j]`. No Virasoro element is attached.
pub fn make_current_algebra(
    names: &[&str],
    structure: &[Vec<Vec<Rational>>],
    form: &[Vec<Rational>],
) -> Result<AlgebraSpec> {
    let n = names.len();
    let shape_ok = structure.len() == n
        && structure.iter().all(|r| r.len() == n && r.iter().all(|c| c.len() == n))
        && form.len() == n
        && form.iter().all(|r| r.len() == n);
    if !shape_ok {
        return Err(Error::DimensionMismatch("structure constants / form".into()));
    }
    let mut a = AlgebraSpec::new("current");
    for name in names {
        a.add_generator(*name, BiDegree::new(0, 1))?;
    }
    for i in 0..n {
        for j in 0..n {
            let mut br = OperatorExpr::zero();
            for (k, c) in structure[i][j].iter().enumerate() {
                br.add_term(c, &[Factor::new(k, 0)]);
            }
            a.set_ope(i, j, vec![br, OperatorExpr::scalar(form[i][j].clone())]);
        }
    }
    Ok(a)
}

/// The algebra spanned by `1` alone, with Virasoro element `0` and `κ = 0`.
pub fn trivial_algebra() -> AlgebraSpec {
    let mut a = AlgebraSpec::new("trivial");
    a.set_virasoro(OperatorExpr::zero(), OperatorExpr::zero());
    a
}

/// Tensor product: generators of `a` then `b` (clashing names of `b` get a
/// `_2` suffix), cross OPEs zero, Virasoro elements and central charges add.
/// Central parameters with the same name are identified.
pub fn tensor(a: &AlgebraSpec, b: &AlgebraSpec) -> AlgebraSpec {
    let mut out = a.clone();
    out.name = format!("{}*{}", a.name, b.name);
    let offset = a.generators.len();
    let mut map = Vec::with_capacity(b.generators.len());
    for g in &b.generators {
        if g.kind == GeneratorKind::Parameter {
            if let Some(j) = a.index_of(&g.name).filter(|&j| a.is_parameter(j)) {
                map.push(j);
                continue;
            }
        }
        let mut name = g.name.clone();
        while out.index_of(&name).is_some() {
            name.push_str("_2");
        }
        map.push(out.generators.len());
        out.generators.push(Generator {
            name,
            degree: g.degree.clone(),
            kind: g.kind,
        });
    }
    for blk in &b.blocks {
        let start = map[blk.start];
        if start < offset {
            continue;
        }
        out.blocks.push(Block {
            family: blk.family.clone(),
            start,
            len: blk.len,
        });
    }
    for ((g, h), poles) in &b.ope {
        out.ope.insert(
            (map[*g], map[*h]),
            poles.iter().map(|p| p.reindex(|x| map[x])).collect(),
        );
    }
    for g in 0..offset {
        for h in offset..out.generators.len() {
            out.ope.entry((g, h)).or_default();
            out.ope.entry((h, g)).or_default();
        }
    }
    out.virasoro = match (&a.virasoro, &b.virasoro) {
        (Some(x), Some(y)) => Some(x + &y.reindex(|x| map[x])),
        _ => None,
    };
    out.kappa = &a.kappa + &b.kappa.reindex(|x| map[x]);
    out
}

/// Outcome of [`verify_conformal_structure`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConformalReport {
    pub kappa: OperatorExpr,
    /// `(condition, passed)` rows.
    pub checks: Vec<(String, bool)>,
}

impl ConformalReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Checks the Virasoro self-OPE of the distinguished element with the
/// declared `κ`, and `L∘₁g = ‖g‖g`, `L∘₀g = ∂g` for every generator.
pub fn verify_conformal_structure(a: &AlgebraSpec) -> Result<ConformalReport> {
    let l = a.virasoro().ok_or(Error::NoVirasoro)?.clone();
    let eng = WickEngine::new(a)?;
    let mut checks = Vec::new();
    let expected = [
        (3, a.kappa().scale(&Rational::new(1, 2))),
        (2, OperatorExpr::zero()),
        (1, l.scale(&Rational::from_integer(2))),
        (0, eng.derivative(&l)?),
    ];
    for (n, want) in expected {
        let got = eng.circle_product(&l, &l, n)?;
        checks.push((format!("L o{n} L"), got == want));
    }
    for n in 4..8 {
        let got = eng.circle_product(&l, &l, n)?;
        checks.push((format!("L o{n} L"), got.is_zero()));
    }
    for (gi, g) in a.generators().iter().enumerate() {
        if g.kind == GeneratorKind::Parameter {
            continue;
        }
        let u = OperatorExpr::generator(gi);
        let w = g.degree.weight.clone();
        let got1 = eng.circle_product(&l, &u, 1)?;
        checks.push((format!("L o1 {} = {} {}", g.name, w, g.name), got1 == u.scale(&w)));
        let got0 = eng.circle_product(&l, &u, 0)?;
        checks.push((format!("L o0 {} = d{}", g.name, g.name), got0 == eng.derivative(&u)?));
    }
    Ok(ConformalReport {
        kappa: a.kappa().clone(),
        checks,
    })
}

/// Even integral lattice given by its Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    gram: Vec<Vec<i64>>,
    hyperbolic: bool,
}

impl LatticeSpec {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self> {
        let r = gram.len();
        if gram.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidLattice("Gram matrix is not square".into()));
        }
        for i in 0..r {
            if gram[i][i] % 2 != 0 {
                return Err(Error::InvalidLattice("odd diagonal entry".into()));
            }
            for j in 0..r {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::InvalidLattice("Gram matrix is not symmetric".into()));
                }
            }
        }
        let m = SparseMatrix::from_dense(
            &gram
                .iter()
                .map(|row| row.iter().map(|&x| Rational::from_integer(x)).collect())
                .collect::<Vec<_>>(),
        );
        let (pos, neg, null) = exact_signature(&m)?;
        let hyperbolic = r >= 1 && null == 0 && neg == 1 && pos == r - 1;
        Ok(LatticeSpec { gram, hyperbolic })
    }

    /// The even unimodular hyperbolic plane `II_{1,1}`.
    pub fn ii11() -> Self {
        LatticeSpec::new(vec![vec![0, -1], vec![-1, 0]]).expect("valid lattice")
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    /// Signature `(r − 1, 1)`.
    pub fn is_hyperbolic(&self) -> bool {
        self.hyperbolic
    }

    /// `α·α / 2` (an integer, the lattice being even).
    pub fn half_norm(&self, v: &[i64]) -> Result<i64> {
        if v.len() != self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in rank {} lattice",
                v.len(),
                self.rank()
            )));
        }
        let mut s = 0i64;
        for i in 0..v.len() {
            for j in 0..v.len() {
                s += v[i] * self.gram[i][j] * v[j];
            }
        }
        Ok(s / 2)
    }
}

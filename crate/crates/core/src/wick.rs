//! Circle products `u ∘_n v` of normal-ordered expressions.
//!
//! Products are computed by structural recursion on monomials:
//!
//! * `(∂^k g) ∘_n v = (−1)^k n(n−1)⋯(n−k+1) g ∘_{n−k} v` for `n ≥ 0`, and
//!   `u ∘_n v = :(∂^{−n−1}u) v: / (−n−1)!` for `n < 0`;
//! * `g ∘_n :w r: = ± :w (g ∘_n r): + Σ_j C(n,j) (g ∘_j w) ∘_{n−1−j} r`;
//! * `(:a b:) ∘_n v = Σ_j a ∘_{−1−j} (b ∘_{n+j} v) ± Σ_j b ∘_{n−1−j} (a ∘_j v)`;
//! * moving a factor past a smaller one inside a Wick product adds
//!   `Σ_j (−1)^j (f ∘_j w) ∘_{−2−j} r`.
//!
//! All sums are finite because a product of weight below the algebra's
//! minimal weight vanishes. Missing OPE entries are filled in by
//! skew-symmetry.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;

use hashbrown::HashMap;

use crate::algebra::AlgebraSpec;
use crate::error::{Error, Result};
use crate::expr::{Factor, Monomial, OperatorExpr};
use crate::grading::koszul;
use crate::rational::{binomial, factorial, falling, Rational};

type ProdKey = (Monomial, Monomial, i64);

/// Memoizing product engine over one algebra. Not `Sync`: use one engine per
/// thread.
#[derive(Debug)]
pub struct WickEngine {
    alg: AlgebraSpec,
    min_w: Rational,
    odd: Vec<bool>,
    param: Vec<bool>,
    weight: Vec<Rational>,
    cache: RefCell<HashMap<ProdKey, OperatorExpr>>,
    table: RefCell<HashMap<(usize, usize, i64), OperatorExpr>>,
}

impl WickEngine {
    pub fn new(alg: &AlgebraSpec) -> Result<Self> {
        let min_w = alg.min_weight()?;
        let gens = alg.generators();
        Ok(WickEngine {
            alg: alg.clone(),
            min_w,
            odd: gens.iter().map(|g| g.is_odd()).collect(),
            param: (0..gens.len()).map(|i| alg.is_parameter(i)).collect(),
            weight: gens.iter().map(|g| g.degree.weight.clone()).collect(),
            cache: RefCell::new(HashMap::new()),
            table: RefCell::new(HashMap::new()),
        })
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.alg
    }

    pub fn min_weight(&self) -> &Rational {
        &self.min_w
    }

    fn mono_weight(&self, m: &[Factor]) -> Rational {
        let mut w = Rational::zero();
        for f in m {
            w += &self.weight[f.gen];
            w += Rational::from_integer(f.derivs as i64);
        }
        w
    }

    fn mono_parity(&self, m: &[Factor]) -> i64 {
        m.iter().filter(|f| self.odd[f.gen]).count() as i64
    }

    /// `u ∘_n v` for homogeneous `u`, `v`.
    pub fn circle_product(&self, u: &OperatorExpr, v: &OperatorExpr, n: i64) -> Result<OperatorExpr> {
        self.alg.degree(u)?;
        self.alg.degree(v)?;
        self.prod(u, v, n)
    }

    /// Bilinear extension of the monomial product; no homogeneity check.
    pub fn prod(&self, u: &OperatorExpr, v: &OperatorExpr, n: i64) -> Result<OperatorExpr> {
        let mut out = OperatorExpr::zero();
        for (mu, cu) in u.terms() {
            for (mv, cv) in v.terms() {
                let p = self.prod_mono(mu, mv, n)?;
                out.add_scaled(&p, &(cu * cv));
            }
        }
        Ok(out)
    }

    /// Wick product `:u v: = u ∘_{−1} v`.
    pub fn wick(&self, u: &OperatorExpr, v: &OperatorExpr) -> Result<OperatorExpr> {
        self.prod(u, v, -1)
    }

    /// `∂u = u ∘_{−2} 1`.
    pub fn derivative(&self, u: &OperatorExpr) -> Result<OperatorExpr> {
        self.prod(u, &OperatorExpr::one(), -2)
    }

    pub fn derivative_n(&self, u: &OperatorExpr, k: u32) -> Result<OperatorExpr> {
        let mut x = u.clone();
        for _ in 0..k {
            x = self.derivative(&x)?;
        }
        Ok(x)
    }

    /// Nonzero polar coefficients `{n ≥ 0 ↦ u ∘_n v}`.
    pub fn ope(&self, u: &OperatorExpr, v: &OperatorExpr) -> Result<BTreeMap<i64, OperatorExpr>> {
        let mut top = -1i64;
        for (mu, _) in u.terms() {
            for (mv, _) in v.terms() {
                let bound = &(&self.mono_weight(mu) + &self.mono_weight(mv)) - &self.min_w;
                let b = bound.floor();
                top = top.max(i64::try_from(b).unwrap_or(i64::MAX) - 1);
            }
        }
        let mut out = BTreeMap::new();
        for n in 0..=top {
            let p = self.prod(u, v, n)?;
            if !p.is_zero() {
                out.insert(n, p);
            }
        }
        Ok(out)
    }

    /// Right-nested Wick product `:f1 :f2 ⋯ fk::` of arbitrary factors,
    /// brought into canonical form.
    pub fn normal_order(&self, raw: &[Factor]) -> Result<OperatorExpr> {
        for f in raw {
            if f.gen >= self.odd.len() {
                return Err(Error::UnknownGenerator(alloc::format!("#{}", f.gen)));
            }
        }
        let mut acc = OperatorExpr::one();
        for f in raw.iter().rev() {
            let single = self.single(*f);
            acc = self.prod(&single, &acc, -1)?;
        }
        Ok(acc)
    }

    /// `∂^k g` as an expression (zero for derivatives of a central parameter).
    pub fn single(&self, f: Factor) -> OperatorExpr {
        if self.param[f.gen] && f.derivs > 0 {
            OperatorExpr::zero()
        } else {
            OperatorExpr::term(Rational::one(), alloc::vec![f])
        }
    }

    fn prod_mono(&self, u: &[Factor], v: &[Factor], n: i64) -> Result<OperatorExpr> {
        if u.is_empty() {
            return Ok(if n == -1 {
                OperatorExpr::term(Rational::one(), v.to_vec())
            } else {
                OperatorExpr::zero()
            });
        }
        let w = &(&self.mono_weight(u) + &self.mono_weight(v)) - &Rational::from_integer(n + 1);
        if w < self.min_w {
            return Ok(OperatorExpr::zero());
        }
        let key = (u.to_vec(), v.to_vec(), n);
        if let Some(r) = self.cache.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = self.prod_mono_uncached(u, v, n)?;
        self.cache.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    /// `Σ_m c_m · (u ∘_n m)` over the terms of `y`.
    fn prod_mono_expr(&self, u: &[Factor], y: &OperatorExpr, n: i64) -> Result<OperatorExpr> {
        let mut out = OperatorExpr::zero();
        for (m, c) in y.terms() {
            out.add_scaled(&self.prod_mono(u, m, n)?, c);
        }
        Ok(out)
    }

    /// `Σ_m c_m · (m ∘_n v)` over the terms of `x`.
    fn prod_expr_mono(&self, x: &OperatorExpr, v: &[Factor], n: i64) -> Result<OperatorExpr> {
        let mut out = OperatorExpr::zero();
        for (m, c) in x.terms() {
            out.add_scaled(&self.prod_mono(m, v, n)?, c);
        }
        Ok(out)
    }

    fn prod_mono_uncached(&self, u: &[Factor], v: &[Factor], n: i64) -> Result<OperatorExpr> {
        if u.len() > 1 {
            return self.prod_composite(u, v, n);
        }
        let f = u[0];
        if n < 0 {
            let m = (-n - 1) as u32;
            if self.param[f.gen] && f.derivs + m > 0 {
                return Ok(OperatorExpr::zero());
            }
            let g = Factor::new(f.gen, f.derivs + m);
            let r = self.insert(g, v)?;
            return Ok(r.scale(&factorial(m).recip()));
        }
        if self.param[f.gen] {
            return Ok(OperatorExpr::zero());
        }
        if f.derivs > 0 {
            let k = f.derivs;
            let c = falling(n, k);
            if c.is_zero() {
                return Ok(OperatorExpr::zero());
            }
            let c = if k % 2 == 1 { -c } else { c };
            let r = self.prod_mono(&[Factor::new(f.gen, 0)], v, n - k as i64)?;
            return Ok(r.scale(&c));
        }
        let g = f.gen;
        match v.len() {
            0 => Ok(OperatorExpr::zero()),
            1 => {
                let h = v[0];
                if self.param[h.gen] {
                    return Ok(OperatorExpr::zero());
                }
                if h.derivs == 0 {
                    return self.table(g, h.gen, n);
                }
                // g ∘_n ∂b = ∂(g ∘_n b) + n g ∘_{n−1} b
                let b = [Factor::new(h.gen, h.derivs - 1)];
                let first = self.prod_mono(&[f], &b, n)?;
                let mut out = self.derivative(&first)?;
                if n > 0 {
                    let second = self.prod_mono(&[f], &b, n - 1)?;
                    out.add_scaled(&second, &Rational::from_integer(n));
                }
                Ok(out)
            }
            _ => {
                let w = v[0];
                let r = &v[1..];
                let sign = koszul(self.odd[g] as i64, self.odd[w.gen] as i64);
                let inner = self.prod_mono(&[f], r, n)?;
                let mut out = self.prod_mono_expr(&[w], &inner, -1)?;
                if sign < 0 {
                    out = -&out;
                }
                for j in 0..=n {
                    let gw = self.prod_mono(&[f], &[w], j)?;
                    if gw.is_zero() {
                        continue;
                    }
                    let t = self.prod_expr_mono(&gw, r, n - 1 - j)?;
                    out.add_scaled(&t, &binomial(n, j as u32));
                }
                Ok(out)
            }
        }
    }

    /// `(:a b:) ∘_n v` with `a = u[0]`, `b = u[1..]`.
    fn prod_composite(&self, u: &[Factor], v: &[Factor], n: i64) -> Result<OperatorExpr> {
        let a = &u[..1];
        let b = &u[1..];
        let wa = self.mono_weight(a);
        let wb = self.mono_weight(b);
        let wv = self.mono_weight(v);
        let mut out = OperatorExpr::zero();
        // Σ_j a ∘_{−1−j} (b ∘_{n+j} v)
        let mut j = 0i64;
        while &(&wb + &wv) - &Rational::from_integer(n + j + 1) >= self.min_w {
            let inner = self.prod_mono(b, v, n + j)?;
            if !inner.is_zero() {
                out.add_scaled(&self.prod_mono_expr(a, &inner, -1 - j)?, &Rational::one());
            }
            j += 1;
        }
        // ± Σ_j b ∘_{n−1−j} (a ∘_j v)
        let sign = Rational::from_integer(koszul(self.mono_parity(a), self.mono_parity(b)));
        let mut j = 0i64;
        while &(&wa + &wv) - &Rational::from_integer(j + 1) >= self.min_w {
            let inner = self.prod_mono(a, v, j)?;
            if !inner.is_zero() {
                out.add_scaled(&self.prod_mono_expr(b, &inner, n - 1 - j)?, &sign);
            }
            j += 1;
        }
        Ok(out)
    }

    /// `:f v:` for a single factor `f`.
    fn insert(&self, f: Factor, v: &[Factor]) -> Result<OperatorExpr> {
        let Some(&w) = v.first() else {
            return Ok(self.single(f));
        };
        let r = &v[1..];
        if f < w || (f == w && !self.odd[f.gen]) {
            let mut m = Vec::with_capacity(v.len() + 1);
            m.push(f);
            m.extend_from_slice(v);
            return Ok(OperatorExpr::term(Rational::one(), m));
        }
        let mut out = OperatorExpr::zero();
        if f == w {
            // :f :f r:: = ½ Σ_j (−1)^j (f ∘_j f) ∘_{−2−j} r for odd f
            let half = Rational::new(1, 2);
            let mut j = 0i64;
            loop {
                let ff = self.prod_mono(&[f], &[f], j)?;
                if ff.is_zero() && self.past_bound(&[f], &[f], j) {
                    break;
                }
                let t = self.prod_expr_mono(&ff, r, -2 - j)?;
                let c = if j % 2 == 0 { half.clone() } else { -half.clone() };
                out.add_scaled(&t, &c);
                j += 1;
            }
            return Ok(out);
        }
        // f > w: :f :w r:: = ± :w :f r:: + Σ_j (−1)^j (f ∘_j w) ∘_{−2−j} r
        let sign = koszul(self.odd[f.gen] as i64, self.odd[w.gen] as i64);
        let fr = self.prod_mono(&[f], r, -1)?;
        out.add_scaled(&self.prod_mono_expr(&[w], &fr, -1)?, &Rational::from_integer(sign));
        let mut j = 0i64;
        loop {
            let fw = self.prod_mono(&[f], &[w], j)?;
            if fw.is_zero() && self.past_bound(&[f], &[w], j) {
                break;
            }
            let t = self.prod_expr_mono(&fw, r, -2 - j)?;
            let c = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
            out.add_scaled(&t, &c);
            j += 1;
        }
        Ok(out)
    }

    fn past_bound(&self, u: &[Factor], v: &[Factor], n: i64) -> bool {
        &(&self.mono_weight(u) + &self.mono_weight(v)) - &Rational::from_integer(n + 1) < self.min_w
    }

    /// `g ∘_n h` for generators, `n ≥ 0`, from the table or by skew-symmetry
    /// `g ∘_n h = ± Σ_j (−1)^{n+j+1} ∂^j (h ∘_{n+j} g) / j!`.
    fn table(&self, g: usize, h: usize, n: i64) -> Result<OperatorExpr> {
        if self.param[g] || self.param[h] {
            return Ok(OperatorExpr::zero());
        }
        if let Some(poles) = self.alg.ope_entry(g, h) {
            return Ok(poles.get(n as usize).cloned().unwrap_or_default());
        }
        if let Some(r) = self.table.borrow().get(&(g, h, n)) {
            return Ok(r.clone());
        }
        let poles = self.alg.ope_entry(h, g).ok_or_else(|| {
            let names = self.alg.names();
            Error::MissingOpe(names[g].clone(), names[h].clone())
        })?;
        let sign = koszul(self.odd[g] as i64, self.odd[h] as i64);
        let mut out = OperatorExpr::zero();
        for (m, p) in poles.iter().enumerate().skip(n as usize) {
            let j = m as i64 - n;
            let d = self.derivative_n(p, j as u32)?;
            let mut c = factorial(j as u32).recip();
            if (n + j + 1) % 2 != 0 {
                c = -c;
            }
            if sign < 0 {
                c = -c;
            }
            out.add_scaled(&d, &c);
        }
        self.table.borrow_mut().insert((g, h, n), out.clone());
        Ok(out)
    }
}

//! Normal-ordered operator expressions.
//!
//! A [`Monomial`] is a right-nested Wick product `:f1 :f2 ⋯ fk::` of
//! derivatives of generators, kept in canonical order: generator index
//! ascending, then derivative order descending. The empty monomial is the
//! identity operator. Only the Wick engine creates non-trivial monomials, since
//! reordering factors can produce correction terms.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::rational::Rational;

/// `∂^derivs` applied to generator number `gen`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub gen: usize,
    pub derivs: u32,
}

impl Factor {
    pub fn new(gen: usize, derivs: u32) -> Self {
        Factor { gen, derivs }
    }

    /// Sort key: generator ascending, then derivative order descending.
    pub fn key(&self) -> (usize, core::cmp::Reverse<u32>) {
        (self.gen, core::cmp::Reverse(self.derivs))
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// Canonically ordered factor list.
pub type Monomial = Vec<Factor>;

/// Whether factors are in canonical order (fermionic repeats are never
/// canonical; `odd(gen)` reports generator parity).
pub fn is_canonical(m: &[Factor], odd: impl Fn(usize) -> bool) -> bool {
    m.windows(2).all(|w| w[0] < w[1] || (w[0] == w[1] && !odd(w[0].gen)))
}

/// Finite linear combination of canonical monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr::default()
    }

    /// The identity operator `1`.
    pub fn one() -> Self {
        Self::scalar(Rational::one())
    }

    pub fn scalar(c: Rational) -> Self {
        Self::term(c, Monomial::new())
    }

    /// A single generator (no derivatives).
    pub fn generator(gen: usize) -> Self {
        Self::term(Rational::one(), alloc::vec![Factor::new(gen, 0)])
    }

    /// `c · m`; the caller guarantees `m` is canonical.
    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        OperatorExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Scalar value if the expression is a multiple of `1`.
    pub fn as_scalar(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::new()).cloned(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &[Factor]) -> Rational {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, c: &Rational, m: &[Factor]) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(m);
                }
            }
            None => {
                self.terms.insert(m.to_vec(), c.clone());
            }
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, other: &OperatorExpr, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (m, v) in &other.terms {
            self.add_term(&(v * c), m);
        }
    }

    pub fn scale(&self, c: &Rational) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        out.add_scaled(self, c);
        out
    }

    /// Rewrites generator indices through `map` (used when embedding into a
    /// tensor product, where relative order is preserved).
    pub fn reindex(&self, map: impl Fn(usize) -> usize) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (m, c) in &self.terms {
            let mm: Monomial = m.iter().map(|f| Factor::new(map(f.gen), f.derivs)).collect();
            out.add_term(c, &mm);
        }
        out
    }

    /// Renders with generator names, e.g. `3/2 :(d^3c c): + dL`.
    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut s = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if k > 0 {
                s.push_str(if neg { " - " } else { " + " });
            } else if neg {
                s.push('-');
            }
            let a = c.abs();
            let body = render_monomial(m, names);
            if m.is_empty() {
                let _ = write!(s, "{a}");
            } else if a.is_one() {
                s.push_str(&body);
            } else {
                let _ = write!(s, "{a} {body}");
            }
        }
        s
    }
}

/// `d^2b`, `:(dc c):`, or `1`.
pub fn render_monomial(m: &[Factor], names: &[String]) -> String {
    let factor = |f: &Factor| {
        let name = names.get(f.gen).map(String::as_str).unwrap_or("?");
        match f.derivs {
            0 => String::from(name),
            1 => alloc::format!("d{name}"),
            k => alloc::format!("d^{k}{name}"),
        }
    };
    match m.len() {
        0 => String::from("1"),
        1 => factor(&m[0]),
        _ => {
            let parts: Vec<String> = m.iter().map(factor).collect();
            alloc::format!(":({}):", parts.join(" "))
        }
    }
}

impl core::ops::Add<&OperatorExpr> for &OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl core::ops::Sub<&OperatorExpr> for &OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Rational::one());
        out
    }
}

impl core::ops::Neg for &OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(&-Rational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn names() -> Vec<String> {
        vec!["b".to_string(), "c".to_string()]
    }

    #[test]
    fn factor_order() {
        assert!(Factor::new(0, 3) < Factor::new(0, 1));
        assert!(Factor::new(0, 0) < Factor::new(1, 5));
        let odd = |_| true;
        assert!(is_canonical(&[Factor::new(0, 1), Factor::new(1, 0)], odd));
        assert!(!is_canonical(&[Factor::new(1, 0), Factor::new(1, 0)], odd));
        assert!(is_canonical(&[Factor::new(1, 0), Factor::new(1, 0)], |_| false));
    }

    #[test]
    fn rendering() {
        let mut e = OperatorExpr::term(Rational::new(3, 2), vec![Factor::new(1, 3), Factor::new(1, 0)]);
        e.add_term(&Rational::from_integer(-1), &[Factor::new(0, 1)]);
        e.add_term(&Rational::from_integer(2), &[]);
        assert_eq!(e.render(&names()), "2 - db + 3/2 :(d^3c c):");
        assert_eq!(OperatorExpr::zero().render(&names()), "0");
    }

    #[test]
    fn cancellation_removes_terms() {
        let mut e = OperatorExpr::generator(0);
        e.add_scaled(&OperatorExpr::generator(0), &Rational::from_integer(-1));
        assert!(e.is_zero());
        assert_eq!(OperatorExpr::one().as_scalar(), Some(Rational::one()));
        assert_eq!(OperatorExpr::generator(1).as_scalar(), None);
    }
}

//! Text syntax for operator expressions.
//!
//! ```text
//! expr    = [sign] term { sign term } ;
//! sign    = "+" | "-" ;
//! term    = coeff [ ["*"] factor ] | factor ;
//! coeff   = digits [ "/" digits ] ;
//! factor  = wick | deriv | group | name ;
//! wick    = ":(" factor factor { factor } "):" ;
//! deriv   = "d" [ "^" digits ] factor ;
//! group   = "(" expr ")" ;
//! name    = letter { letter | digit | "_" } ;
//! ```
//!
//! Wick products nest to the right: `:(a b c):` is `:a :b c::`. A name that
//! is not a generator but starts with `d` is read as a derivative, so `dc`,
//! `ddc` and `d^2c` all work. The output of [`OperatorExpr::render`] parses
//! back to the same expression.

use std::collections::BTreeMap;
use std::fmt;

use qoa_core::expr::is_canonical;
use qoa_core::{Factor, OperatorExpr, Rational, WickEngine};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.pos + 1, self.message)
    }
}

/// How products of factors are formed.
enum Mode<'a> {
    /// Full Wick calculus through an engine.
    Engine(&'a WickEngine),
    /// Factors are concatenated and must already be in canonical order. Used
    /// for OPE tables, which have to be read before an engine exists.
    Literal { names: &'a [String], odd: &'a [bool] },
}

/// Named expressions that may appear in place of generators.
pub type Macros = BTreeMap<String, OperatorExpr>;

/// Parses `src` in the algebra of `eng`.
pub fn parse_expr(src: &str, eng: &WickEngine, macros: &Macros) -> Result<OperatorExpr, ParseError> {
    let mut p = Parser {
        src,
        pos: 0,
        mode: Mode::Engine(eng),
        macros,
    };
    p.parse_all()
}

/// Parses a linear combination of canonical monomials without an engine.
pub fn parse_literal(src: &str, names: &[String], odd: &[bool]) -> Result<OperatorExpr, ParseError> {
    let macros = Macros::new();
    let mut p = Parser {
        src,
        pos: 0,
        mode: Mode::Literal { names, odd },
        macros: &macros,
    };
    p.parse_all()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    mode: Mode<'a>,
    macros: &'a Macros,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos,
            message: msg.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(ch) = self.rest().chars().next() {
            if ch.is_whitespace() {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn parse_all(&mut self) -> Result<OperatorExpr, ParseError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return self.err(self.pos, format!("unexpected `{}`", self.rest().chars().next().unwrap()));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<OperatorExpr, ParseError> {
        let mut out = OperatorExpr::zero();
        let mut sign = Rational::one();
        if self.eat("-") {
            sign = -Rational::one();
        } else {
            self.eat("+");
        }
        loop {
            let t = self.term()?;
            out.add_scaled(&t, &sign);
            if self.eat("+") {
                sign = Rational::one();
            } else if self.at_minus() {
                self.pos += 1;
                sign = -Rational::one();
            } else {
                return Ok(out);
            }
        }
    }

    fn at_minus(&mut self) -> bool {
        self.peek() == Some('-')
    }

    fn term(&mut self) -> Result<OperatorExpr, ParseError> {
        match self.peek() {
            Some(ch) if ch.is_ascii_digit() => {
                let c = self.coeff()?;
                let starts_factor = matches!(self.peek(), Some(ch) if ch == '*' || ch == '(' || ch == ':' || ch.is_alphabetic());
                if !starts_factor {
                    return Ok(OperatorExpr::scalar(c));
                }
                self.eat("*");
                Ok(self.factor()?.scale(&c))
            }
            _ => self.factor(),
        }
    }

    fn digits(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let n = self.rest().chars().take_while(|c| c.is_ascii_digit()).count();
        if n == 0 {
            return self.err(start, "expected a number");
        }
        self.pos += n;
        Ok(&self.src[start..self.pos])
    }

    fn coeff(&mut self) -> Result<Rational, ParseError> {
        let start = self.pos;
        let num = self.digits()?;
        let mut text = num.to_string();
        let save = self.pos;
        if self.eat("/") {
            match self.digits() {
                Ok(d) => {
                    text.push('/');
                    text.push_str(d);
                }
                Err(_) => self.pos = save,
            }
        }
        match text.parse::<Rational>() {
            Ok(r) => Ok(r),
            Err(e) => self.err(start, e.to_string()),
        }
    }

    fn factor(&mut self) -> Result<OperatorExpr, ParseError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        if self.eat(":(") {
            let mut items = Vec::new();
            while !self.eat("):") {
                if self.peek().is_none() {
                    return self.err(start, "unterminated Wick product `:(`");
                }
                items.push((self.pos, self.factor()?));
            }
            if items.len() < 2 {
                return self.err(start, "a Wick product needs at least two factors");
            }
            let (_, mut acc) = items.pop().unwrap();
            while let Some((pos, left)) = items.pop() {
                acc = self.product(pos, &left, &acc)?;
            }
            return Ok(acc);
        }
        if self.eat("(") {
            let e = self.expr()?;
            if !self.eat(")") {
                return self.err(self.pos, "expected `)`");
            }
            return Ok(e);
        }
        match self.peek() {
            Some(ch) if ch.is_alphabetic() || ch == '_' => {}
            Some(ch) => return self.err(start, format!("unexpected `{ch}`")),
            None => return self.err(start, "unexpected end of input"),
        }
        let n = self
            .rest()
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .map(char::len_utf8)
            .sum::<usize>();
        let name = &self.src[self.pos..self.pos + n];
        self.pos += n;
        self.resolve(start, name)
    }

    fn resolve(&mut self, start: usize, name: &str) -> Result<OperatorExpr, ParseError> {
        if let Some(e) = self.lookup(name) {
            return Ok(e);
        }
        if name == "d" {
            let mut k = 1u32;
            if self.rest().starts_with('^') {
                self.pos += 1;
                let at = self.pos;
                k = match self.digits()?.parse() {
                    Ok(k) => k,
                    Err(_) => return self.err(at, "derivative order too large"),
                };
            }
            let inner = self.factor()?;
            return self.derive(start, &inner, k);
        }
        if let Some(rest) = name.strip_prefix('d') {
            if !rest.is_empty() {
                let inner = self.resolve(start + 1, rest)?;
                return self.derive(start, &inner, 1);
            }
        }
        self.err(start, format!("unknown name `{name}`"))
    }

    fn lookup(&self, name: &str) -> Option<OperatorExpr> {
        if let Some(e) = self.macros.get(name) {
            return Some(e.clone());
        }
        let idx = match &self.mode {
            Mode::Engine(eng) => eng.algebra().index_of(name),
            Mode::Literal { names, .. } => names.iter().position(|n| n == name),
        }?;
        Some(OperatorExpr::generator(idx))
    }

    fn derive(&self, pos: usize, e: &OperatorExpr, k: u32) -> Result<OperatorExpr, ParseError> {
        match &self.mode {
            Mode::Engine(eng) => eng.derivative_n(e, k).or_else(|err| self.err(pos, err.to_string())),
            Mode::Literal { .. } => {
                let mut out = OperatorExpr::zero();
                for (m, c) in e.terms() {
                    if m.len() != 1 {
                        return self.err(pos, "derivatives of products are not allowed in literal tables");
                    }
                    out.add_term(c, &[Factor::new(m[0].gen, m[0].derivs + k)]);
                }
                Ok(out)
            }
        }
    }

    fn product(&self, pos: usize, u: &OperatorExpr, v: &OperatorExpr) -> Result<OperatorExpr, ParseError> {
        match &self.mode {
            Mode::Engine(eng) => {
                // bilinear over terms, so sums of mixed degree are fine
                let mut out = OperatorExpr::zero();
                for (a, ca) in u.terms() {
                    let a = OperatorExpr::term(Rational::one(), a.clone());
                    for (b, cb) in v.terms() {
                        let b = OperatorExpr::term(Rational::one(), b.clone());
                        let w = eng.wick(&a, &b).or_else(|err| self.err(pos, err.to_string()))?;
                        out.add_scaled(&w, &(ca * cb));
                    }
                }
                Ok(out)
            }
            Mode::Literal { odd, .. } => {
                let mut out = OperatorExpr::zero();
                for (a, ca) in u.terms() {
                    for (b, cb) in v.terms() {
                        let mut m = a.clone();
                        m.extend(b.iter().cloned());
                        if !is_canonical(&m, |g| odd[g]) {
                            return self.err(pos, "monomials in OPE tables must be written in canonical order");
                        }
                        out.add_term(&(ca * cb), &m);
                    }
                }
                Ok(out)
            }
        }
    }
}

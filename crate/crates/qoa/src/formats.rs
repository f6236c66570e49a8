//! JSON forms of expressions and declarative algebra definitions.
//!
//! Expressions serialize as a list of terms,
//! `[{"coeff": "3/2", "factors": [{"gen": "c", "derivs": 3}, {"gen": "c", "derivs": 0}]}]`,
//! in canonical order. Algebra definitions are JSON or TOML documents
//! validated against `schemas/algebra.schema.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qoa_core::algebra::AlgebraSpec;
use qoa_core::grading::BiDegree;
use qoa_core::{Factor, OperatorExpr, Rational, WickEngine};

use crate::parse::{parse_literal, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Core(#[from] qoa_core::Error),
    #[error("{context}: {error}")]
    Parse { context: String, error: ParseError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorJson {
    pub gen: String,
    pub derivs: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: String,
    pub factors: Vec<FactorJson>,
}

pub fn expr_to_json(e: &OperatorExpr, alg: &AlgebraSpec) -> Vec<TermJson> {
    e.terms()
        .map(|(m, c)| TermJson {
            coeff: c.to_string(),
            factors: m
                .iter()
                .map(|f| FactorJson {
                    gen: alg.generator(f.gen).name.clone(),
                    derivs: f.derivs,
                })
                .collect(),
        })
        .collect()
}

/// Reads terms back; factors out of canonical order are normal-ordered.
pub fn expr_from_json(terms: &[TermJson], eng: &WickEngine) -> Result<OperatorExpr, FormatError> {
    let alg = eng.algebra();
    let mut out = OperatorExpr::zero();
    for t in terms {
        let c: Rational = t.coeff.parse().map_err(|e: qoa_core::rational::ParseRationalError| FormatError::Invalid(e.to_string()))?;
        let mut raw = Vec::with_capacity(t.factors.len());
        for f in &t.factors {
            let g = alg
                .index_of(&f.gen)
                .ok_or_else(|| FormatError::Core(qoa_core::Error::UnknownGenerator(f.gen.clone())))?;
            raw.push(Factor::new(g, f.derivs));
        }
        out.add_scaled(&eng.normal_order(&raw)?, &c);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDef {
    pub name: String,
    pub fermion: i64,
    /// Rational weight, as a string or integer.
    pub weight: NumberOrString,
    #[serde(default)]
    pub parameter: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOrString {
    Int(i64),
    Text(String),
}

impl NumberOrString {
    fn rational(&self) -> Result<Rational, FormatError> {
        match self {
            NumberOrString::Int(n) => Ok(Rational::from_integer(*n)),
            NumberOrString::Text(s) => s.parse().map_err(|_| FormatError::Invalid(format!("bad rational `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpeDef {
    pub left: String,
    pub right: String,
    /// `poles[n] = left ∘_n right`, each in the expression syntax with
    /// monomials written in canonical order.
    pub poles: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDef {
    pub name: String,
    pub generators: Vec<GeneratorDef>,
    #[serde(default)]
    pub ope: Vec<OpeDef>,
    #[serde(default)]
    pub virasoro: Option<String>,
    #[serde(default)]
    pub kappa: Option<String>,
}

impl AlgebraDef {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, FormatError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `.json` or `.toml` by extension.
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            Some("json") => Self::from_json(&text),
            _ => Err(FormatError::Invalid(format!("{}: expected a .json or .toml file", path.display()))),
        }
    }

    pub fn build(&self) -> Result<AlgebraSpec, FormatError> {
        let mut a = AlgebraSpec::new(self.name.clone());
        for g in &self.generators {
            if g.parameter {
                a.add_parameter(g.name.clone())?;
            } else {
                a.add_generator(g.name.clone(), BiDegree::new(g.fermion, g.weight.rational()?))?;
            }
        }
        let names = a.names();
        let odd: Vec<bool> = (0..names.len()).map(|g| a.is_odd(g)).collect();
        let lit = |ctx: &str, s: &str| {
            parse_literal(s, &names, &odd).map_err(|error| FormatError::Parse {
                context: ctx.to_string(),
                error,
            })
        };
        let idx = |name: &str| {
            a.index_of(name)
                .ok_or_else(|| FormatError::Core(qoa_core::Error::UnknownGenerator(name.into())))
        };
        let mut table = Vec::new();
        for o in &self.ope {
            let (g, h) = (idx(&o.left)?, idx(&o.right)?);
            let mut poles = Vec::new();
            for (n, p) in o.poles.iter().enumerate() {
                poles.push(lit(&format!("{} ∘{} {}", o.left, n, o.right), p)?);
            }
            table.push((g, h, poles));
        }
        for (g, h, poles) in table {
            a.set_ope(g, h, poles);
        }
        if let Some(v) = &self.virasoro {
            let kappa = match &self.kappa {
                Some(k) => lit("kappa", k)?,
                None => return Err(FormatError::Invalid("a Virasoro element needs `kappa`".into())),
            };
            a.set_virasoro(lit("virasoro", v)?, kappa);
        }
        Ok(a)
    }
}

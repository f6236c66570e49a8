//! Built-in algebras and modules by name.
//!
//! Algebras: `bc` (λ = 2), `bc:λ`, `vir:κ` (κ rational, or a name for a
//! symbolic central charge), `heis:k,l`, or a path to a `.json`/`.toml`
//! definition. Modules: `ghost`, `fock:k,l`, `vac:κ`. Both join tensor
//! factors with `+`.

use std::path::Path;

use qoa_core::algebra::{make_bc_system, make_heisenberg, make_virasoro, make_virasoro_symbolic, tensor, AlgebraSpec};
use qoa_core::fock::{make_fock, make_ghost_fock, make_virasoro_vacuum, tensor_modules, ModuleFactor, ModuleSpec};
use qoa_core::Rational;

use crate::formats::AlgebraDef;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Format(#[from] crate::formats::FormatError),
    #[error(transparent)]
    Core(#[from] qoa_core::Error),
}

fn pair(s: &str) -> Result<(usize, usize), CatalogError> {
    let bad = || CatalogError::Invalid(format!("expected `k,l`, got `{s}`"));
    let (k, l) = s.split_once(',').ok_or_else(bad)?;
    Ok((k.trim().parse().map_err(|_| bad())?, l.trim().parse().map_err(|_| bad())?))
}

fn rational(s: &str) -> Result<Rational, CatalogError> {
    s.trim()
        .parse()
        .map_err(|_| CatalogError::Invalid(format!("expected a rational, got `{s}`")))
}

fn one_algebra(item: &str) -> Result<AlgebraSpec, CatalogError> {
    let item = item.trim();
    if item.ends_with(".json") || item.ends_with(".toml") {
        return Ok(AlgebraDef::load(Path::new(item))?.build()?);
    }
    let (head, arg) = match item.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (item, None),
    };
    match (head, arg) {
        ("bc", None) => Ok(make_bc_system(2)),
        ("bc", Some(l)) => Ok(make_bc_system(
            l.trim()
                .parse()
                .map_err(|_| CatalogError::Invalid(format!("bad λ `{l}`")))?,
        )),
        ("vir", Some(k)) => match k.trim().parse::<Rational>() {
            Ok(k) => Ok(make_virasoro(k)),
            Err(_) if k.chars().all(|c| c.is_alphanumeric() || c == '_') && !k.is_empty() => {
                Ok(make_virasoro_symbolic(k.trim()))
            }
            Err(_) => Err(CatalogError::Invalid(format!("bad central charge `{k}`"))),
        },
        ("heis", Some(kl)) => {
            let (k, l) = pair(kl)?;
            Ok(make_heisenberg(k, l)?)
        }
        _ => Err(CatalogError::Unknown {
            kind: "algebra",
            name: item.into(),
        }),
    }
}

/// Tensor product of the `+`-separated items.
pub fn algebra(spec: &str) -> Result<AlgebraSpec, CatalogError> {
    let mut out: Option<AlgebraSpec> = None;
    for item in spec.split('+') {
        let a = one_algebra(item)?;
        out = Some(match out {
            None => a,
            Some(prev) => tensor(&prev, &a),
        });
    }
    out.ok_or_else(|| CatalogError::Invalid("empty algebra".into()))
}

/// `α = (n, 1, 0, …, 0, n−1)` has `α·α/2 = n` for `k ≥ 2`, `l ≥ 1`.
pub fn momentum_with_half_norm(k: usize, l: usize, n: i64) -> Result<Vec<Rational>, CatalogError> {
    if k < 2 || l < 1 {
        return Err(CatalogError::Invalid("--half-norm needs k ≥ 2 and l ≥ 1".into()));
    }
    let mut a = vec![Rational::zero(); k + l];
    a[0] = Rational::from_integer(n);
    a[1] = Rational::one();
    a[k] = Rational::from_integer(n - 1);
    Ok(a)
}

/// Parses `1,1,0,…` (or `0` for the zero vector of any length).
pub fn parse_momentum(s: &str, len: usize) -> Result<Vec<Rational>, CatalogError> {
    if s.trim() == "0" {
        return Ok(vec![Rational::zero(); len]);
    }
    let v = s.split(',').map(rational).collect::<Result<Vec<_>, _>>()?;
    if v.len() != len {
        return Err(CatalogError::Invalid(format!("momentum has {} components, expected {len}", v.len())));
    }
    Ok(v)
}

/// Momentum choice for the (single) boson factor of a module.
#[derive(Clone, Debug)]
pub enum Momentum {
    Zero,
    Explicit(String),
    HalfNorm(i64),
}

pub fn module(spec: &str, momentum: &Momentum) -> Result<ModuleSpec, CatalogError> {
    let mut out = ModuleSpec::trivial();
    let mut bosons = 0;
    for item in spec.split('+') {
        let item = item.trim();
        let (head, arg) = match item.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (item, None),
        };
        let m = match (head, arg) {
            ("ghost", None) => make_ghost_fock(),
            ("vac", Some(k)) => make_virasoro_vacuum(rational(k)?),
            ("fock", Some(kl)) => {
                let (k, l) = pair(kl)?;
                bosons += 1;
                let alpha = match momentum {
                    Momentum::Zero => vec![Rational::zero(); k + l],
                    Momentum::Explicit(s) => parse_momentum(s, k + l)?,
                    Momentum::HalfNorm(n) => momentum_with_half_norm(k, l, *n)?,
                };
                make_fock(k, l, alpha)?
            }
            _ => {
                return Err(CatalogError::Unknown {
                    kind: "module",
                    name: item.into(),
                })
            }
        };
        out = tensor_modules(&out, &m);
    }
    if bosons > 1 && !matches!(momentum, Momentum::Zero) {
        return Err(CatalogError::Invalid("a momentum needs exactly one fock factor".into()));
    }
    if out.factors().is_empty() {
        return Err(CatalogError::Invalid("empty module".into()));
    }
    Ok(out)
}

/// Human-readable name of a module, e.g. `fock(25,1)[1,1,0,…]`.
pub fn module_name(m: &ModuleSpec) -> String {
    m.factors()
        .iter()
        .map(|f| match f {
            ModuleFactor::Ghost => "ghost".to_string(),
            ModuleFactor::Boson { k, l, alpha } => {
                let a: Vec<String> = alpha.iter().map(|x| x.to_string()).collect();
                format!("fock({k},{l})[{}]", a.join(","))
            }
            ModuleFactor::VirasoroVacuum { kappa } => format!("vac({kappa})"),
        })
        .collect::<Vec<_>>()
        .join("+")
}

#[cfg(test)]
mod tests {
    use super::*;
    use qoa_core::fock::half_norm;

    #[test]
    fn half_norm_presets() {
        for n in -3..=3 {
            let a = momentum_with_half_norm(25, 1, n).unwrap();
            assert_eq!(half_norm(25, &a), Rational::from_integer(n));
        }
    }

    #[test]
    fn algebra_names() {
        assert_eq!(algebra("bc+vir:26").unwrap().kappa_value(), Some(Rational::from_integer(0)));
        assert_eq!(algebra("heis:25,1").unwrap().kappa_value(), Some(Rational::from_integer(26)));
        assert_eq!(algebra("vir:k").unwrap().kappa_value(), None);
        assert!(algebra("su2").is_err());
        assert!(algebra("heis:3").is_err());
    }

    #[test]
    fn module_names() {
        let m = module("vac:24+fock:1,1", &Momentum::Zero).unwrap();
        assert_eq!(module_name(&m), "vac(24)+fock(1,1)[0,0]");
        assert!(module("fock:25,1", &Momentum::Explicit("1,2".into())).is_err());
    }
}

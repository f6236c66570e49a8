//! The work behind each CLI subcommand, returning structured results that the
//! binary renders.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qoa_core::algebra::{tensor, AlgebraSpec, LatticeSpec};
use qoa_core::brst::{brst_current, BrstComplex, CohomologyResult};
use qoa_core::bv::{check_nu1_homomorphism, verify_bv_axioms, BvOptions, OperatorComplex, Product};
use qoa_core::fock::{BasisState, FactorState, ModuleFactor, ModuleSpec, Slice, StateVector};
use qoa_core::qseries::{j_series, j_series_convolution, QSeries};
use qoa_core::{Error, OperatorExpr, Rational, SparseMatrix, WickEngine};

use crate::cache::{Cache, Triplets};
use crate::catalog::module_name;
use crate::formats::{expr_to_json, TermJson};
use crate::parse::{parse_expr, Macros, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot parse {what}: {error}")]
    Parse { what: &'static str, error: ParseError },
    #[error(transparent)]
    Catalog(#[from] crate::catalog::CatalogError),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, CommandError>;

// ---------------------------------------------------------------- ope

#[derive(Clone, Debug, Serialize)]
pub struct OpeRow {
    pub n: i64,
    pub rendered: String,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpeTable {
    pub algebra: String,
    pub left: String,
    pub right: String,
    /// Polar part `u ∘ₙ v`, `n ≥ 0`, descending; zero products omitted.
    pub poles: Vec<OpeRow>,
    /// `u ∘₋₁ v`.
    pub wick: OpeRow,
}

/// `J` (BRST current) and `T` (total Virasoro element) when the algebra has a
/// λ = 2 ghost block in front and no generators with those names.
pub fn standard_macros(eng: &WickEngine) -> Macros {
    let alg = eng.algebra();
    let mut m = Macros::new();
    if alg.index_of("J").is_none() {
        if let Ok(j) = brst_current(eng) {
            m.insert("J".into(), j);
        }
    }
    if alg.index_of("T").is_none() {
        if let Some(t) = alg.virasoro() {
            m.insert("T".into(), t.clone());
        }
    }
    m
}

/// Algebra for `ope`: `algebra`, or `bc ⊗ matter` when `matter` is given.
pub fn ope_algebra(algebra: &AlgebraSpec, matter: Option<&AlgebraSpec>) -> AlgebraSpec {
    match matter {
        Some(m) => tensor(algebra, m),
        None => algebra.clone(),
    }
}

pub fn cmd_ope(alg: &AlgebraSpec, left: &str, right: &str) -> Result<OpeTable> {
    let eng = WickEngine::new(alg)?;
    let macros = standard_macros(&eng);
    let u = parse_expr(left, &eng, &macros).map_err(|error| CommandError::Parse { what: "--left", error })?;
    let v = parse_expr(right, &eng, &macros).map_err(|error| CommandError::Parse { what: "--right", error })?;
    let names = alg.names();
    let row = |n: i64, e: &OperatorExpr| OpeRow {
        n,
        rendered: e.render(&names),
        terms: expr_to_json(e, alg),
    };
    let ope = eng.ope(&u, &v)?;
    let poles = ope.iter().rev().map(|(n, e)| row(*n, e)).collect();
    let wick = row(-1, &eng.prod(&u, &v, -1)?);
    Ok(OpeTable {
        algebra: alg.name.clone(),
        left: u.render(&names),
        right: v.render(&names),
        poles,
        wick,
    })
}

// ---------------------------------------------------------------- cohomology

#[derive(Clone, Debug)]
pub struct CohomologyConfig {
    pub matter: ModuleSpec,
    pub weights: Vec<Rational>,
    /// Fermion range; the full range of each weight when `None`.
    pub fermions: Option<(i64, i64)>,
    pub relative: bool,
    pub allow_anomaly: bool,
    pub representatives: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StateTerm {
    pub coeff: String,
    pub state: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyRow {
    pub p: i64,
    pub weight: String,
    pub momentum: Vec<String>,
    pub dim_c: usize,
    pub dim_z: usize,
    pub dim_b: usize,
    pub dim_h: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representatives: Option<Vec<Vec<StateTerm>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyTable {
    pub module: String,
    pub relative: bool,
    pub matter_kappa: String,
    pub rows: Vec<CohomologyRow>,
    pub checks: Vec<Check>,
}

impl CohomologyTable {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn row(&self, p: i64, w: &Rational) -> Option<&CohomologyRow> {
        self.rows.iter().find(|r| r.p == p && r.weight == w.to_string())
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("p\tweight\tmomentum\tdim_C\tdim_Z\tdim_B\tdim_H\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t[{}]\t{}\t{}\t{}\t{}\n",
                r.p,
                r.weight,
                r.momentum.join(","),
                r.dim_c,
                r.dim_z,
                r.dim_b,
                r.dim_h
            ));
        }
        s
    }
}

/// Cached per-slice data: dimension and the outgoing differential.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct SliceRecord {
    basis: Vec<String>,
    differential: Triplets,
    rank: usize,
}

fn slice_of(cx: &BrstComplex, relative: bool, p: i64, w: &Rational) -> Slice {
    if relative {
        cx.relative_slice(p)
    } else {
        cx.slice(p, w)
    }
}

fn compute_record(cx: &BrstComplex, relative: bool, p: i64, w: &Rational) -> Result<(SliceRecord, SparseMatrix)> {
    let here = slice_of(cx, relative, p, w);
    let next = slice_of(cx, relative, p + 1, w);
    let q = cx.differential_between(&here, &next)?;
    let m = cx.module();
    let rec = SliceRecord {
        basis: here.basis.iter().map(|s| state_label(m, s)).collect(),
        differential: Triplets::from_matrix(&q),
        rank: q.rank(),
    };
    Ok((rec, q))
}

pub fn cmd_cohomology(cfg: &CohomologyConfig, cache: &Cache) -> Result<CohomologyTable> {
    let cx = BrstComplex::new(&cfg.matter, cfg.allow_anomaly)?;
    let module = module_name(&cfg.matter);
    if cfg.relative && cfg.weights.iter().any(|w| !w.is_zero()) {
        return Err(CommandError::Invalid("the relative complex lives at weight 0".into()));
    }
    let mut ranges = Vec::new();
    for w in &cfg.weights {
        let (lo, hi) = match cfg.fermions {
            Some(r) => r,
            None => cx.module().fermion_range(w),
        };
        ranges.push((w.clone(), lo, hi));
    }
    // every slice whose outgoing differential is needed
    let mut jobs: Vec<(i64, Rational)> = Vec::new();
    for (w, lo, hi) in &ranges {
        for p in lo - 1..=*hi + 1 {
            jobs.push((p, w.clone()));
        }
    }
    let key = |p: i64, w: &Rational| format!("{module}|relative={}|p={p}|w={w}", cfg.relative);
    let matter = cfg.matter.clone();
    let relative = cfg.relative;
    let allow = cfg.allow_anomaly;
    let computed: Vec<Result<(SliceRecord, SparseMatrix)>> = jobs
        .par_iter()
        .map_init(
            || BrstComplex::new(&matter, allow),
            |cx, (p, w)| {
                let k = key(*p, w);
                if let Some(rec) = cache.get::<SliceRecord>("brst-slice", &k) {
                    if let Some(q) = rec.differential.to_matrix() {
                        return Ok((rec, q));
                    }
                }
                let cx = cx.as_ref().map_err(|e| CommandError::Core(e.clone()))?;
                let (rec, q) = compute_record(cx, relative, *p, w)?;
                cache.put("brst-slice", &k, &rec);
                Ok((rec, q))
            },
        )
        .collect();
    let mut records: BTreeMap<(Rational, i64), (SliceRecord, SparseMatrix)> = BTreeMap::new();
    for ((p, w), r) in jobs.iter().zip(computed) {
        records.insert((w.clone(), *p), r?);
    }
    let momentum: Vec<String> = cfg.matter.momentum().iter().map(|a| a.to_string()).collect();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut q2_ok = true;
    let mut q2_detail = String::new();
    for (w, lo, hi) in &ranges {
        let (mut euler_c, mut euler_h) = (0i64, 0i64);
        for p in *lo..=*hi {
            let (rec_in, q_in) = &records[&(w.clone(), p - 1)];
            let (rec, q_out) = &records[&(w.clone(), p)];
            let dim_c = rec.basis.len();
            let dim_b = rec_in.rank;
            let dim_z = dim_c - rec.rank;
            let squared = q_out.mul(q_in).map_err(Error::from)?;
            if !squared.is_zero() && q2_ok {
                q2_ok = false;
                q2_detail = format!("Q² ≠ 0 on (p={}, w={w})", p - 1);
            }
            let dim_h = dim_z.saturating_sub(dim_b);
            let sign = if p.rem_euclid(2) == 0 { 1 } else { -1 };
            euler_c += sign * dim_c as i64;
            euler_h += sign * dim_h as i64;
            let representatives = if cfg.representatives && dim_h > 0 {
                let res = if cfg.relative {
                    cx.relative_cohomology(p, true)?
                } else {
                    cx.cohomology_slice(p, w, true)?
                };
                Some(render_reps(&cx, &res))
            } else {
                None
            };
            rows.push(CohomologyRow {
                p,
                weight: w.to_string(),
                momentum: momentum.clone(),
                dim_c,
                dim_z,
                dim_b,
                dim_h,
                representatives,
            });
        }
        // the last outgoing differential must also square to zero
        let (_, q_last) = &records[&(w.clone(), *hi + 1)];
        let (_, q_prev) = &records[&(w.clone(), *hi)];
        if !q_last.mul(q_prev).map_err(Error::from)?.is_zero() && q2_ok {
            q2_ok = false;
            q2_detail = format!("Q² ≠ 0 on (p={hi}, w={w})");
        }
        let full = cx.module().fermion_range(w);
        if cfg.fermions.is_none() || (*lo <= full.0 && *hi >= full.1) {
            let ok = euler_c == euler_h;
            checks.push(Check {
                name: format!("euler_poincare(w={w})"),
                passed: ok,
                detail: format!("Σ(−1)^p dim C = {euler_c}, Σ(−1)^p dim H = {euler_h}"),
            });
        }
    }
    checks.insert(
        0,
        Check {
            name: "q_squared".into(),
            passed: q2_ok,
            detail: if q2_ok { "Q² = 0 on all computed slices".into() } else { q2_detail },
        },
    );
    Ok(CohomologyTable {
        module,
        relative: cfg.relative,
        matter_kappa: cx.matter_kappa().to_string(),
        rows,
        checks,
    })
}

fn render_reps(cx: &BrstComplex, res: &CohomologyResult) -> Vec<Vec<StateTerm>> {
    res.representatives.iter().map(|v| state_terms(cx.module(), v)).collect()
}

pub fn state_terms(m: &ModuleSpec, v: &StateVector) -> Vec<StateTerm> {
    v.terms()
        .map(|(s, c)| StateTerm {
            coeff: c.to_string(),
            state: state_label(m, s),
        })
        .collect()
}

/// Modes applied to the vacuum, in the `u(n)` convention: `b(−n)`, `c(−m)`,
/// `jₐ(−n)` and `L(1−p)` for the Virasoro `L_{−p}`; `|0⟩` alone is the vacuum.
pub fn state_label(m: &ModuleSpec, s: &BasisState) -> String {
    let mut parts = Vec::new();
    for (f, st) in m.factors().iter().zip(&s.0) {
        match (f, st) {
            (ModuleFactor::Ghost, FactorState::Ghost { b, c }) => {
                parts.extend(b.iter().map(|n| format!("b(-{n})")));
                parts.extend(c.iter().map(|n| format!("c(-{n})")));
            }
            (_, FactorState::Boson(modes)) => {
                parts.extend(modes.iter().map(|(n, a)| format!("j{}(-{n})", a + 1)));
            }
            (_, FactorState::Virasoro(ps)) => {
                parts.extend(ps.iter().map(|p| format!("L({})", 1 - *p as i64)));
            }
            _ => parts.push("?".into()),
        }
    }
    parts.push("|0>".into());
    parts.join(" ")
}

// ---------------------------------------------------------------- monster-dims

#[derive(Clone, Debug, Serialize)]
pub struct MonsterRow {
    pub m: i64,
    pub n: i64,
    pub half_norm: i64,
    pub multiplicity: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonsterTable {
    pub gram: Vec<Vec<i64>>,
    pub order: i64,
    pub rows: Vec<MonsterRow>,
    pub checks: Vec<Check>,
}

impl MonsterTable {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("m\tn\talpha.alpha/2\tmultiplicity\n");
        for r in &self.rows {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", r.m, r.n, r.half_norm, r.multiplicity));
        }
        s
    }
}

/// Coefficient of `q^{−α·α/2}` in `j − 744` for `α = (m, n)` over the given
/// ranges; `α = 0` is skipped. `j` is computed two ways, which must agree.
pub fn cmd_monster_dims(
    lattice: &LatticeSpec,
    ms: std::ops::RangeInclusive<i64>,
    ns: std::ops::RangeInclusive<i64>,
    order: i64,
) -> Result<MonsterTable> {
    if lattice.rank() != 2 {
        return Err(CommandError::Invalid("monster-dims needs a rank-2 Gram matrix".into()));
    }
    if !lattice.is_hyperbolic() {
        return Err(CommandError::Invalid("Gram matrix is not hyperbolic (signature (1,1) required)".into()));
    }
    let mut cells = Vec::new();
    let mut need = order;
    for m in ms {
        for n in ns.clone() {
            if m == 0 && n == 0 {
                continue;
            }
            let h = lattice.half_norm(&[m, n])?;
            need = need.max(-h + 1);
            cells.push((m, n, h));
        }
    }
    let a = j_series(need, true);
    let b = j_series_convolution(need, true);
    let agree = series_agree(&a, &b, need);
    let mut rows = Vec::new();
    for (m, n, h) in cells {
        let e = -h;
        let mult = if e < -1 { Rational::zero() } else { a.coefficient_int(e)? };
        rows.push(MonsterRow {
            m,
            n,
            half_norm: h,
            multiplicity: mult.to_string(),
        });
    }
    Ok(MonsterTable {
        gram: lattice.gram().to_vec(),
        order: need,
        rows,
        checks: vec![Check {
            name: "j_routes_agree".into(),
            passed: agree,
            detail: format!("E₄³/Δ and E₄³·Σp₂₄(n)qⁿ⁻¹ compared through q^{}", need - 1),
        }],
    })
}

fn series_agree(a: &QSeries, b: &QSeries, order: i64) -> bool {
    (-1..order).all(|k| a.coefficient_int(k).ok() == b.coefficient_int(k).ok() && a.coefficient_int(k).is_ok())
}

// ---------------------------------------------------------------- bv-audit

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AxiomJson {
    pub name: String,
    pub checked: usize,
    pub passed: usize,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BvAudit {
    pub matter: String,
    pub samples: usize,
    pub seed: u64,
    pub product: String,
    pub cohomology_dims: Vec<usize>,
    pub passed: bool,
    pub axioms: Vec<AxiomJson>,
}

pub fn cmd_bv_audit(matter: &AlgebraSpec, opts: &BvOptions) -> Result<BvAudit> {
    let cx = OperatorComplex::new(matter)?;
    let rep = verify_bv_axioms(&cx, opts)?;
    let mut axioms: Vec<AxiomJson> = rep
        .axioms
        .iter()
        .map(|a| AxiomJson {
            name: a.name.clone(),
            checked: a.checked,
            passed: a.passed,
            first_failure: a.first_failure.clone(),
        })
        .collect();
    if opts.product == Product::Wick && rep.cohomology_dims.get(1).is_some_and(|&d| d > 0) {
        let nu = check_nu1_homomorphism(&cx)?;
        if nu.checked > 0 {
            axioms.push(AxiomJson {
                name: nu.name,
                checked: nu.checked,
                passed: nu.passed,
                first_failure: nu.first_failure,
            });
        }
    }
    let passed = axioms.iter().all(|a| a.checked > 0 && a.passed == a.checked);
    Ok(BvAudit {
        matter: matter.name.clone(),
        samples: rep.samples,
        seed: rep.seed,
        product: match opts.product {
            Product::Wick => "wick".into(),
            Product::Circle(n) => format!("circle:{n}"),
        },
        cohomology_dims: rep.cohomology_dims,
        passed,
        axioms,
    })
}

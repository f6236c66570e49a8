//! Acceptance suite. Run with `cargo test -p qoa --test acceptance`; prints
//! one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use qoa::catalog::momentum_with_half_norm;
use qoa_core::algebra::{make_bc_system, make_heisenberg, make_virasoro, make_virasoro_symbolic, tensor, AlgebraSpec};
use qoa_core::brst::{nu_maps, physical_space, BrstComplex};
use qoa_core::bv::{verify_bv_axioms, BvOptions, OperatorComplex};
use qoa_core::expr::is_canonical;
use qoa_core::fock::{make_fock, make_ghost_fock, make_virasoro_vacuum, tensor_modules, ModeActor, ModuleSpec, StateVector};
use qoa_core::qseries::{
    euler_poincare_signature, ghost_relative_signature, j_series, j_series_convolution, module_signature_series,
};
use qoa_core::{exact_signature, Factor, OperatorExpr, Rational, SparseMatrix, SparseVec, WickEngine};

type Outcome = Result<String, String>;

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- oracles

/// Coefficients of `∏_{n≥1} (1 − qⁿ)^{−colors}` up to `q^max`.
fn colored_partitions(colors: usize, max: usize) -> Vec<u128> {
    let mut a = vec![0u128; max + 1];
    a[0] = 1;
    for _ in 0..colors {
        for part in 1..=max {
            for n in part..=max {
                a[n] += a[n - part];
            }
        }
    }
    a
}

/// `p₂₄(n)`, zero for negative `n`.
fn p24(n: i64) -> usize {
    if n < 0 {
        return 0;
    }
    colored_partitions(24, n as usize)[n as usize] as usize
}

fn sigma(n: i64, k: u32) -> Rational {
    let mut s = r(0);
    for d in 1..=n {
        if n % d == 0 {
            s += r(d).pow(k);
        }
    }
    s
}

fn series_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().min(b.len());
    let mut out = vec![r(0); n];
    for i in 0..n {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += &a[i] * &b[j];
        }
    }
    out
}

fn series_inv(a: &[Rational]) -> Vec<Rational> {
    let n = a.len();
    let inv0 = a[0].recip();
    let mut out = vec![r(0); n];
    out[0] = inv0.clone();
    for k in 1..n {
        let mut s = r(0);
        for i in 1..=k {
            s += &a[i] * &out[k - i];
        }
        out[k] = -(&s * &inv0);
    }
    out
}

/// `j − 744` as coefficients of `q^{−1}, q⁰, …, q^{order}` from
/// `j = 1728 E₄³ / (E₄³ − E₆²)`.
fn j_oracle(order: i64) -> Vec<Rational> {
    let n = (order + 3) as usize;
    let e4: Vec<Rational> = (0..n as i64)
        .map(|k| if k == 0 { r(1) } else { &r(240) * &sigma(k, 3) })
        .collect();
    let e6: Vec<Rational> = (0..n as i64)
        .map(|k| if k == 0 { r(1) } else { &r(-504) * &sigma(k, 5) })
        .collect();
    let e4c = series_mul(&series_mul(&e4, &e4), &e4);
    let e6s = series_mul(&e6, &e6);
    // E₄³ − E₆² = q · D(q)
    let d: Vec<Rational> = (1..n).map(|k| &e4c[k] - &e6s[k]).collect();
    let mut jq = series_mul(&e4c[..n - 1], &series_inv(&d));
    for x in jq.iter_mut() {
        *x = &*x * &r(1728);
    }
    jq[1] -= r(744);
    jq.truncate((order + 2) as usize);
    jq
}

/// `n(n−1)⋯(n−k+1)/k!` for any integer `n`.
fn gen_binomial(n: i64, k: i64) -> Rational {
    let mut c = r(1);
    for i in 0..k {
        c = &(&c * &r(n - i)) / &r(i + 1);
    }
    c
}

/// `(u ∘ₙ v)(m) s` from the Borcherds identity,
/// `Σ_j (−1)^j C(n,j) [u(n−j) v(m+j) − (−1)^n ε v(m+n−j) u(j)] s`,
/// summed until both products vanish for weight reasons.
fn brute_mode(
    act: &ModeActor,
    alg: &AlgebraSpec,
    u: &OperatorExpr,
    v: &OperatorExpr,
    n: i64,
    m: i64,
    s: &StateVector,
    level: i64,
) -> Result<StateVector, String> {
    let du = alg.degree(u).map_err(fail)?.ok_or("u = 0")?;
    let dv = alg.degree(v).map_err(fail)?.ok_or("v = 0")?;
    let wu = du.weight.to_i64().ok_or("non-integral weight")?;
    let wv = dv.weight.to_i64().ok_or("non-integral weight")?;
    let eps = if du.fermion.rem_euclid(2) == 1 && dv.fermion.rem_euclid(2) == 1 { -1 } else { 1 };
    let sign_n = if n.rem_euclid(2) == 0 { 1 } else { -1 };
    // `level` is the weight of s above the module minimum; v(m+j)s = 0 once
    // level + wv − m − j − 1 < 0, likewise u(j)s
    let bound_v = level + wv - m - 1;
    let bound_u = level + wu - 1;
    let mut top = bound_v.max(bound_u);
    if n >= 0 {
        top = top.min(n);
    }
    let mut out = StateVector::zero();
    for j in 0..=top.max(-1) {
        let c = gen_binomial(n, j);
        if c.is_zero() {
            continue;
        }
        let c = if j % 2 == 0 { c } else { -c };
        let vs = act.apply(v, m + j, s).map_err(fail)?;
        let first = act.apply(u, n - j, &vs).map_err(fail)?;
        out.add_scaled(&first, &c);
        let us = act.apply(u, j, s).map_err(fail)?;
        let second = act.apply(v, m + n - j, &us).map_err(fail)?;
        out.add_scaled(&second, &(&c * &r(-sign_n * eps)));
    }
    Ok(out)
}

fn fock26(half_norm: Option<i64>) -> ModuleSpec {
    let alpha = match half_norm {
        None => vec![r(0); 26],
        Some(h) => momentum_with_half_norm(25, 1, h).unwrap(),
    };
    make_fock(25, 1, alpha).unwrap()
}

fn label(h: Option<i64>) -> String {
    match h {
        None => "α=0".into(),
        Some(h) => format!("α·α/2={h}"),
    }
}

/// The momenta of the weight-0 cohomology checks: zero and presets with these `α·α/2`.
const HALF_NORMS: [Option<i64>; 5] = [None, Some(1), Some(0), Some(-1), Some(-2)];

// -------------------------------------------------------------- criteria

fn c1_anomaly() -> Outcome {
    let a = tensor(&make_bc_system(2), &make_virasoro_symbolic("k"));
    let e = WickEngine::new(&a).map_err(fail)?;
    let idx = |n: &str| a.index_of(n).ok_or_else(|| format!("no generator {n}"));
    let (b, c, l, k) = (idx("b")?, idx("c")?, idx("L")?, idx("k")?);
    let g = OperatorExpr::generator;
    let dc = e.derivative(&g(c)).map_err(fail)?;
    let j = &e.wick(&g(c), &g(l)).map_err(fail)? + &e.wick(&g(b), &e.wick(&g(c), &dc).map_err(fail)?).map_err(fail)?;
    let got = e.prod(&j, &j, 0).map_err(fail)?;
    // (3/2)(∂³c c + ∂²c ∂c) + (k − 26)/12 ∂³c c, term by term
    let no = |fs: &[(usize, u32)]| -> Result<OperatorExpr, String> {
        let raw: Vec<Factor> = fs.iter().map(|&(g, d)| Factor::new(g, d)).collect();
        e.normal_order(&raw).map_err(fail)
    };
    let mut want = no(&[(c, 3), (c, 0)])?.scale(&(&Rational::new(3, 2) - &Rational::new(26, 12)));
    want.add_scaled(&no(&[(c, 2), (c, 1)])?, &Rational::new(3, 2));
    want.add_scaled(&no(&[(k, 0), (c, 3), (c, 0)])?, &Rational::new(1, 12));
    ensure(got == want, || format!("J∘₀J = {} ≠ {}", got.render(&a.names()), want.render(&a.names())))?;
    Ok(format!("J∘₀J = {}", got.render(&a.names())))
}

fn c2_nilpotency() -> Outcome {
    let mut slices = 0;
    let momenta = [None, Some(1), Some(0), Some(-1)];
    for h in momenta {
        let cx = BrstComplex::new(&fock26(h), false).map_err(fail)?;
        for w in -3..=3 {
            let (lo, hi) = cx.module().fermion_range(&r(w));
            let mut prev = cx.differential(lo - 1, &r(w)).map_err(fail)?;
            for p in lo..=hi {
                let next = cx.differential(p, &r(w)).map_err(fail)?;
                ensure(next.mul(&prev).map_err(fail)?.is_zero(), || {
                    format!("Q² ≠ 0 at {} p={p} w={w}", label(h))
                })?;
                prev = next;
                slices += 1;
            }
        }
    }
    // a κ = 24 matter sector: Q² first fails where the anomaly's zero mode acts
    let m24 = make_fock(23, 1, vec![r(0); 24]).unwrap();
    let bad = BrstComplex::new(&m24, true).map_err(fail)?;
    let mut witness = None;
    'outer: for w in -1..=3 {
        let (lo, hi) = bad.module().fermion_range(&r(w));
        for p in lo..=hi {
            if !bad.q_squared_vanishes(p, &r(w)).map_err(fail)? {
                witness = Some((p, w));
                break 'outer;
            }
        }
    }
    let (p, w) = witness.ok_or("κ=24 surrogate has Q² = 0 on every slice with w ≤ 3")?;
    Ok(format!(
        "{slices} slices over {} momenta vanish; κ=24 surrogate Q² ≠ 0 at p={p} w={w}",
        momenta.len()
    ))
}

/// `dim H^p` at weight 0 for every momentum of [`HALF_NORMS`].
fn weight0_dims() -> Result<BTreeMap<String, Vec<(i64, usize)>>, String> {
    let modules: Vec<(String, ModuleSpec)> = HALF_NORMS.iter().map(|&h| (label(h), fock26(h))).collect();
    let mut tasks = Vec::new();
    for (i, (_, m)) in modules.iter().enumerate() {
        let module = tensor_modules(&make_ghost_fock(), m);
        let (lo, hi) = module.fermion_range(&r(0));
        for p in lo..=hi {
            tasks.push((i, p));
        }
    }
    let results: Vec<(usize, i64, Result<usize, String>)> = tasks
        .par_iter()
        .map_init(HashMap::new, |cache: &mut HashMap<usize, BrstComplex>, &(i, p)| {
            let cx = cache
                .entry(i)
                .or_insert_with(|| BrstComplex::new(&modules[i].1, false).unwrap());
            (i, p, cx.cohomology_slice(p, &r(0), false).map(|c| c.dim_h).map_err(fail))
        })
        .collect();
    let mut out: BTreeMap<String, Vec<(i64, usize)>> = BTreeMap::new();
    for (i, p, d) in results {
        out.entry(modules[i].0.clone()).or_default().push((p, d?));
    }
    for v in out.values_mut() {
        v.sort();
    }
    Ok(out)
}

static H1_DIMS: Mutex<BTreeMap<String, usize>> = Mutex::new(BTreeMap::new());

fn c3_pattern() -> Outcome {
    let oracle: Vec<usize> = (0..4).map(p24).collect();
    ensure(oracle == [1, 24, 324, 3200], || format!("p₂₄ oracle {oracle:?}"))?;
    let dims = weight0_dims()?;
    let mut summary = Vec::new();
    for h in HALF_NORMS {
        let name = label(h);
        let got = &dims[&name];
        let want = |p: i64| -> usize {
            match h {
                None => [1, 26, 26, 1].get(p as usize).copied().filter(|_| p >= 0).unwrap_or(0),
                Some(h) if p == 1 || p == 2 => p24(1 - h),
                Some(_) => 0,
            }
        };
        for &(p, d) in got {
            ensure(d == want(p), || format!("{name}: dim H^{p} = {d}, expected {}", want(p)))?;
        }
        let h1 = got.iter().find(|x| x.0 == 1).map(|x| x.1).unwrap_or(0);
        H1_DIMS.lock().unwrap().insert(name.clone(), h1);
        let nz: Vec<String> = got.iter().filter(|x| x.1 > 0).map(|(p, d)| format!("H^{p}={d}")).collect();
        summary.push(format!("{name}: {}", nz.join(" ")));
    }
    Ok(summary.join("; "))
}

fn c4_nu() -> Outcome {
    let reports: Vec<(String, Result<String, String>)> = HALF_NORMS
        .par_iter()
        .map(|&h| {
            let run = || -> Result<String, String> {
                let m = fock26(h);
                let phys = physical_space(&m).map_err(fail)?;
                let cx = BrstComplex::new(&m, false).map_err(fail)?;
                let (n1, n2) = nu_maps(&cx, &phys).map_err(fail)?;
                for n in [&n1, &n2] {
                    ensure(n.lands_in_cocycles && n.kills_null, || {
                        format!("ν{} is not a well-defined map into cohomology", n.degree)
                    })?;
                    ensure(n.image_dim == n.cohomology_dim, || {
                        format!("ν{} has rank {} onto H^{} of dim {}", n.degree, n.image_dim, n.degree, n.cohomology_dim)
                    })?;
                }
                Ok(format!("rank ν₁={} ν₂={} (dim 𝔓={})", n1.image_dim, n2.image_dim, phys.dim()))
            };
            (label(h), run())
        })
        .collect();
    let mut out = Vec::new();
    for (name, rep) in reports {
        out.push(format!("{name}: {}", rep.map_err(|e| format!("{name}: {e}"))?));
    }
    Ok(out.join("; "))
}

fn c5_relative() -> Outcome {
    let surrogate = tensor_modules(&make_virasoro_vacuum(r(24)), &make_fock(1, 1, vec![r(0), r(0)]).unwrap());
    let cx = BrstComplex::new(&surrogate, false).map_err(fail)?;
    let rel: Vec<usize> = (0..=2)
        .map(|p| cx.relative_cohomology(p, false).map(|c| c.dim_h))
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    ensure(rel == [1, 2, 1], || format!("M(24)⊗F_{{1,1}}(0): H_Δ = {rel:?}"))?;
    for p in [-1, 3] {
        let d = cx.relative_cohomology(p, false).map_err(fail)?.dim_h;
        ensure(d == 0, || format!("M(24)⊗F_{{1,1}}(0): H_Δ^{p} = {d}"))?;
    }
    let cx0 = BrstComplex::new(&fock26(None), false).map_err(fail)?;
    let rel0: Vec<usize> = (0..=2)
        .map(|p| cx0.relative_cohomology(p, false).map(|c| c.dim_h))
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    ensure(rel0 == [1, 26, 1], || format!("F_{{25,1}}(0): H_Δ = {rel0:?}"))?;
    let h1 = H1_DIMS.lock().unwrap().clone();
    let mut parts = vec![format!("α=0: M(24)⊗F_{{1,1}} {rel:?}, F_{{25,1}} {rel0:?}")];
    let res: Vec<(Option<i64>, Result<(usize, usize), String>)> = HALF_NORMS[1..]
        .par_iter()
        .map(|&h| {
            let run = || -> Result<(usize, usize), String> {
                let cx = BrstComplex::new(&fock26(h), false).map_err(fail)?;
                let d1 = cx.relative_cohomology(1, false).map_err(fail)?.dim_h;
                let d0 = cx.relative_cohomology(0, false).map_err(fail)?.dim_h;
                let d2 = cx.relative_cohomology(2, false).map_err(fail)?.dim_h;
                ensure(d0 == 0 && d2 == 0, || format!("H_Δ^0={d0}, H_Δ^2={d2}"))?;
                let full = match h1.get(&label(h)) {
                    Some(&d) => d,
                    None => cx.cohomology_slice(1, &r(0), false).map_err(fail)?.dim_h,
                };
                Ok((d1, full))
            };
            (h, run())
        })
        .collect();
    for (h, x) in res {
        let (d1, full) = x.map_err(|e| format!("{}: {e}", label(h)))?;
        ensure(d1 == full, || format!("{}: dim H_Δ¹ = {d1} ≠ dim H¹ = {full}", label(h)))?;
        parts.push(format!("{}: H_Δ¹=H¹={d1}", label(h)));
    }
    Ok(parts.join("; "))
}

fn c6_monster() -> Outcome {
    let order = 64;
    let oracle = j_oracle(order);
    let coeff = |e: i64| -> Rational {
        if e < -1 {
            r(0)
        } else {
            oracle[(e + 1) as usize].clone()
        }
    };
    ensure(coeff(1) == r(196884) && coeff(2) == r(21493760) && coeff(-1) == r(1), || {
        "E₄/E₆ oracle is off".into()
    })?;
    let a = j_series(order + 1, true);
    let b = j_series_convolution(order + 1, true);
    for e in -1..=order {
        let (x, y) = (a.coefficient_int(e).map_err(fail)?, b.coefficient_int(e).map_err(fail)?);
        ensure(x == coeff(e) && y == coeff(e), || format!("q^{e}: E₄³/Δ {x}, convolution {y}, oracle {}", coeff(e)))?;
    }
    let out = Command::new(env!("CARGO_BIN_EXE_qoa"))
        .args(["--no-cache", "monster-dims", "--ii11", "--m", "-8..8", "--n", "-8..8", "--order", "64", "--format", "json"])
        .output()
        .map_err(fail)?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let t: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(fail)?;
    let rows = t["rows"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 17 * 17 - 1, || format!("{} rows", rows.len()))?;
    let mut seen = BTreeMap::new();
    for row in rows {
        let (m, n) = (row["m"].as_i64().unwrap(), row["n"].as_i64().unwrap());
        let got: Rational = row["multiplicity"].as_str().unwrap().parse().map_err(fail)?;
        ensure(got == coeff(m * n), || format!("({m},{n}): {got} ≠ coef q^{} = {}", m * n, coeff(m * n)))?;
        seen.insert((m, n), got);
    }
    ensure(seen[&(1, 1)] == r(196884), || "row (1,1)".into())?;
    for k in (-8..=8).filter(|&k| k != 0) {
        ensure(seen[&(k, 0)].is_zero() && seen[&(0, k)].is_zero(), || format!("lightlike row at {k}"))?;
    }
    ensure(seen[&(8, 8)] == coeff(64), || "row (8,8)".into())?;
    Ok(format!(
        "{} rows match; three j routes agree through q^{order}; (1,1)={} (8,8)={}",
        rows.len(),
        seen[&(1, 1)],
        seen[&(8, 8)]
    ))
}

fn c7_no_ghost() -> Outcome {
    let res: Vec<(Option<i64>, Result<String, String>)> = [Some(1), Some(0), Some(-1)]
        .par_iter()
        .map(|&h| {
            let run = || -> Result<String, String> {
                let m = fock26(h);
                let cx = BrstComplex::new(&m, false).map_err(fail)?;
                let coh = cx.relative_cohomology(1, true).map_err(fail)?;
                let slice = cx.relative_slice(1);
                let g = cx.representative_gram(&slice, &coh.representatives).map_err(fail)?;
                let (pos, neg, null) = exact_signature(&g).map_err(fail)?;
                ensure(neg == 0 && null == 0 && pos == coh.dim_h, || {
                    format!("inertia ({pos},{neg},{null}) on {} classes", coh.dim_h)
                })?;
                let blocks = [ghost_relative_signature(4), module_signature_series(&m, 4).map_err(fail)?];
                let ep = euler_poincare_signature(&blocks).map_err(fail)?;
                ensure(ep == r(pos as i64), || format!("signature prediction {ep} ≠ {pos}"))?;
                ensure(coh.dim_h == p24(1 - h.unwrap()), || format!("dim {}", coh.dim_h))?;
                Ok(format!("inertia ({pos},{neg},{null}), predicted {ep}"))
            };
            (h, run())
        })
        .collect();
    let mut out = Vec::new();
    for (h, x) in res {
        out.push(format!("{}: {}", label(h), x.map_err(|e| format!("{}: {e}", label(h)))?));
    }
    Ok(out.join("; "))
}

fn c8_bv() -> Outcome {
    const REQUIRED: [&str; 8] = [
        "delta_squared",
        "antisymmetry",
        "jacobi",
        "leibniz",
        "second_order",
        "associativity",
        "commutativity",
        "circle_triviality",
    ];
    let mut out = Vec::new();
    for (name, alg) in [("Vir(26)", make_virasoro(r(26))), ("Heis(25,1)", make_heisenberg(25, 1).unwrap())] {
        let cx = OperatorComplex::new(&alg).map_err(fail)?;
        let opts = BvOptions {
            samples: 50,
            max_weight: 4,
            ..BvOptions::default()
        };
        let rep = verify_bv_axioms(&cx, &opts).map_err(fail)?;
        for a in &rep.axioms {
            ensure(a.ok(), || format!("{name}: {} failed: {:?}", a.name, a.first_failure))?;
        }
        let mut least = usize::MAX;
        for req in REQUIRED {
            let a = rep.axiom(req).ok_or_else(|| format!("{name}: {req} not checked"))?;
            ensure(a.checked >= 50, || format!("{name}: {req} checked on {} tuples", a.checked))?;
            least = least.min(a.checked);
        }
        out.push(format!("{name}: {} axioms, ≥{least} tuples each", rep.axioms.len()));
    }
    Ok(out.join("; "))
}

/// `(weight, fermion) ↦ dim` of `∏_{n≥0} (1 + y q^{λ+n})(1 + y⁻¹ q^{1−λ+n})`.
fn bc_oracle(lambda: i64, max_w: i64) -> BTreeMap<(i64, i64), u64> {
    let mut acc: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    acc.insert((0, 0), 1);
    for n in 0..max_w + 4 {
        for (w, f) in [(lambda + n, -1), (1 - lambda + n, 1)] {
            let mut next = acc.clone();
            for (&(aw, af), &c) in &acc {
                if aw + w <= max_w + 2 {
                    *next.entry((aw + w, af + f)).or_default() += c;
                }
            }
            acc = next;
        }
    }
    acc
}

fn c9_bases() -> Outcome {
    let bc = make_bc_system(2);
    let oracle = bc_oracle(2, 12);
    let mut states = 0usize;
    for w in -1..=12 {
        for p in -5..=5 {
            let basis = bc.basis_enumerate(w, p).map_err(fail)?;
            let want = oracle.get(&(w, p)).copied().unwrap_or(0) as usize;
            ensure(basis.len() == want, || format!("O(b,c) at w={w} p={p}: {} ≠ {want}", basis.len()))?;
            ensure(basis.iter().all(|m| is_canonical(m, |g| bc.is_odd(g))), || "non-canonical basis".into())?;
            states += want;
        }
    }
    // ∏_{n≥2} (1 − qⁿ)^{−1}
    let mut vir = vec![0u64; 13];
    vir[0] = 1;
    for part in 2..=12 {
        for n in part..=12 {
            vir[n] += vir[n - part];
        }
    }
    for alg in [make_virasoro(r(26)), make_virasoro_symbolic("k")] {
        for w in 0..=12 {
            let got = alg.basis_enumerate(w as i64, 0).map_err(fail)?.len() as u64;
            ensure(got == vir[w], || format!("{}: weight {w}: {got} ≠ {}", alg.name, vir[w]))?;
        }
    }
    // closure: products of basis monomials expand in the target slice basis
    let mut pairs = 0;
    for (alg, slices) in [
        (bc.clone(), vec![(-1, 1), (0, 0), (1, 0), (2, -1), (2, 1), (3, 0)]),
        (make_virasoro(r(26)), vec![(2, 0), (4, 0), (5, 0), (6, 0)]),
        (make_virasoro_symbolic("k"), vec![(2, 0), (4, 0), (6, 0)]),
    ] {
        let e = WickEngine::new(&alg).map_err(fail)?;
        for &(w1, p1) in &slices {
            for &(w2, p2) in &slices {
                let b1 = alg.basis_enumerate(w1, p1).map_err(fail)?;
                let b2 = alg.basis_enumerate(w2, p2).map_err(fail)?;
                for u in b1.iter().step_by(2).take(3) {
                    for v in b2.iter().step_by(3).take(3) {
                        let u = OperatorExpr::term(r(1), u.clone());
                        let v = OperatorExpr::term(r(1), v.clone());
                        for n in -2..=3 {
                            let x = e.circle_product(&u, &v, n).map_err(fail)?;
                            let tw = w1 + w2 - n - 1;
                            let target = alg.basis_enumerate(tw, p1 + p2).map_err(fail)?;
                            for (mono, _) in x.terms() {
                                let mono: Vec<Factor> = mono.iter().copied().filter(|f| !alg.is_parameter(f.gen)).collect();
                                ensure(target.contains(&mono), || {
                                    format!("{}: product leaves slice ({tw},{})", alg.name, p1 + p2)
                                })?;
                            }
                            pairs += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{states} bc states and Vir dims through weight 12; {pairs} products closed"))
}

fn c10_modes() -> Outcome {
    let modules = [
        ("Λ⊗M(26)", tensor_modules(&make_ghost_fock(), &make_virasoro_vacuum(r(26)))),
        (
            "Λ⊗F_{1,1}(1,1/2)",
            tensor_modules(&make_ghost_fock(), &make_fock(1, 1, vec![r(1), Rational::new(1, 2)]).unwrap()),
        ),
    ];
    let mut matrices = 0usize;
    let mut products = 0usize;
    for (name, module) in &modules {
        let act = ModeActor::new(module);
        let alg = act.algebra().clone();
        let e = WickEngine::new(&alg).map_err(fail)?;
        let g = OperatorExpr::generator;
        let mut elems: Vec<OperatorExpr> = (0..alg.generators().len())
            .filter(|&i| !alg.is_parameter(i))
            .map(g)
            .collect();
        let (b, c) = (g(0), g(1));
        elems.push(e.wick(&b, &c).map_err(fail)?);
        elems.push(e.derivative(&c).map_err(fail)?);
        elems.push(alg.virasoro().ok_or("no Virasoro element")?.clone());
        let min = module.min_weight();
        let mut slices = Vec::new();
        for level in 0.. {
            let w = &min + &r(level);
            if w > r(4) {
                break;
            }
            let (lo, hi) = module.fermion_range(&w);
            for p in lo..=hi {
                let s = module.slice(p, &w);
                if s.dim() > 0 {
                    slices.push((level, s));
                }
            }
        }
        for u in &elems {
            for v in &elems {
                for n in -2..=3 {
                    let prod = e.circle_product(u, v, n).map_err(fail)?;
                    products += 1;
                    for m in -2..=3 {
                        for (level, src) in &slices {
                            let cols: Vec<StateVector> = src
                                .basis
                                .iter()
                                .map(|s| brute_mode(&act, &alg, u, v, n, m, &StateVector::basis(s.clone()), *level))
                                .collect::<Result<_, _>>()?;
                            if prod.is_zero() {
                                ensure(cols.iter().all(|c| c.is_zero()), || {
                                    format!("{name}: u∘{n}v = 0 but its mode {m} acts on w={}", src.key.weight)
                                })?;
                                continue;
                            }
                            let tgt = act.target_slice(&prod, m, src).map_err(fail)?;
                            let sym = act.mode_matrix(&prod, m, src, &tgt).map_err(fail)?;
                            let coords: Vec<SparseVec> =
                                cols.iter().map(|c| tgt.coordinates(c)).collect::<Result<_, _>>().map_err(fail)?;
                            let brute = SparseMatrix::from_columns(tgt.dim(), &coords);
                            ensure(brute == sym, || {
                                format!(
                                    "{name}: ({} ∘{n} {})({m}) differs on slice w={} p={}",
                                    u.render(&alg.names()),
                                    v.render(&alg.names()),
                                    src.key.weight,
                                    src.key.fermion
                                )
                            })?;
                            matrices += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{products} products, {matrices} slice matrices agree"))
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("1 symbolic anomaly J∘₀J", Duration::from_secs(1), c1_anomaly),
        ("2 Q² = 0 for |w| ≤ 3, κ=24 detected", Duration::from_secs(60), c2_nilpotency),
        ("3 weight-0 cohomology pattern", Duration::from_secs(600), c3_pattern),
        ("4 ν₁, ν₂ full rank", Duration::from_secs(600), c4_nu),
        ("5 relative cohomology", Duration::from_secs(600), c5_relative),
        ("6 monster-dims vs j − 744", Duration::from_secs(10), c6_monster),
        ("7 no-ghost Gram and signature", Duration::from_secs(600), c7_no_ghost),
        ("8 BV axiom suite", Duration::from_secs(600), c8_bv),
        ("9 graded dimensions and closure", Duration::from_secs(600), c9_bases),
        ("10 symbolic ∘ₙ vs mode brute force", Duration::from_secs(600), c10_modes),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let t = start.elapsed();
        let res = match res {
            Ok(d) if t > limit => Err(format!("took {:.2?}, limit {:.0?}; {d}", t, limit)),
            r => r,
        };
        match res {
            Ok(d) => println!("PASS  {name}  [{:.2?} / {:.0?}]  {d}", t, limit),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}  [{:.2?} / {:.0?}]  {e}", t, limit);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

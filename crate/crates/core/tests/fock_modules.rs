use qoa_core::fock::{
    check_commutative, make_fock, make_ghost_fock, make_virasoro_vacuum, tensor_modules, ModeActor, ModuleSpec,
    StateVector,
};
use qoa_core::qseries::{module_character, module_signature_series};
use qoa_core::{exact_signature, OperatorExpr, Rational, SparseMatrix, WickEngine};

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// `Σ_n a_n qⁿ = ∏_{n≥1} (1 − qⁿ)^{−colors}`, by repeated geometric series.
fn colored(colors: usize, max: usize) -> Vec<u128> {
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

fn modules() -> Vec<(ModuleSpec, i64)> {
    vec![
        (make_ghost_fock(), 10),
        (make_fock(1, 1, vec![r(1), r(0)]).unwrap(), 10),
        (make_fock(1, 1, vec![Rational::new(1, 2), Rational::new(1, 3)]).unwrap(), 10),
        (make_fock(3, 1, vec![r(0), r(1), r(0), r(1)]).unwrap(), 8),
        (make_fock(25, 1, vec![r(0); 26]).unwrap(), 3),
        (make_virasoro_vacuum(r(24)), 10),
        (tensor_modules(&make_ghost_fock(), &make_fock(1, 1, vec![r(0), r(0)]).unwrap()), 6),
        (
            tensor_modules(
                &make_ghost_fock(),
                &tensor_modules(&make_virasoro_vacuum(r(24)), &make_fock(1, 1, vec![r(1), r(1)]).unwrap()),
            ),
            5,
        ),
    ]
}

#[test]
fn characters_match_slice_dimensions() {
    for (m, depth) in modules() {
        let ch = module_character(&m, 12).unwrap();
        let lo = m.min_weight();
        for k in 0..=depth {
            let w = &lo + &r(k);
            assert_eq!(ch.coefficient(&w).unwrap(), r(m.weight_dim(&w) as i64), "{:?} at {w}", m.factors());
        }
    }
}

#[test]
fn boson_characters_against_partition_oracle() {
    let m = make_fock(25, 1, vec![r(0); 26]).unwrap();
    let want = colored(26, 3);
    for (n, d) in want.iter().enumerate() {
        assert_eq!(m.weight_dim(&r(n as i64)) as u128, *d);
    }
    let m = make_fock(1, 1, vec![r(2), r(1)]).unwrap();
    let want = colored(2, 10);
    let h = Rational::new(3, 2);
    for (n, d) in want.iter().enumerate() {
        assert_eq!(m.weight_dim(&(&h + &r(n as i64))) as u128, *d);
    }
}

#[test]
fn ghost_two_colored_distinct_parts() {
    // b(−n) has weight n+1 and c(−m) weight m−2; expand the product directly
    let g = make_ghost_fock();
    let mut series = std::collections::BTreeMap::<(i64, i64), u64>::new();
    series.insert((0, 0), 1);
    let mut modes = Vec::new();
    for n in 1..=12 {
        modes.push((n + 1, -1));
        modes.push((n - 2, 1));
    }
    for (w, f) in modes {
        let cur = series.clone();
        for ((aw, af), c) in cur {
            *series.entry((aw + w, af + f)).or_default() += c;
        }
    }
    for w in -1..=8 {
        for p in -3..=4 {
            let want = series.get(&(w, p)).copied().unwrap_or(0);
            assert_eq!(g.slice_dim(p, &r(w)) as u64, want, "w={w} p={p}");
        }
    }
}

#[test]
fn signatures_match_gram_matrices() {
    for m in [
        make_fock(1, 1, vec![r(1), r(0)]).unwrap(),
        make_fock(1, 1, vec![r(0), r(0)]).unwrap(),
        make_fock(2, 1, vec![r(1), r(0), r(1)]).unwrap(),
    ] {
        let act = ModeActor::new(&m);
        let sg = module_signature_series(&m, 10).unwrap();
        for k in 0..=6 {
            let w = &m.min_weight() + &r(k);
            let s = m.slice(0, &w);
            let (p, n, z) = exact_signature(&act.gram_matrix(&s)).unwrap();
            assert_eq!(z, 0);
            assert_eq!(r(p as i64 - n as i64), sg.coefficient(&w).unwrap());
        }
    }
}

#[test]
fn l0_is_the_weight() {
    for (m, _) in modules().into_iter().take(7) {
        let act = ModeActor::new(&m);
        let l = act.algebra().virasoro().unwrap().clone();
        for k in 0..=2 {
            let w = &m.min_weight() + &r(k);
            let (lo, hi) = m.fermion_range(&w);
            for p in lo..=hi {
                let s = m.slice(p, &w);
                let l0 = act.mode_matrix(&l, 1, &s, &s).unwrap();
                let want = SparseMatrix::diagonal(&vec![w.clone(); s.dim()]);
                assert_eq!(l0, want);
            }
        }
    }
}

#[test]
fn modes_are_adjoint_for_the_form() {
    // ⟨g(n)x, y⟩ = ⟨x, g(n)† y⟩ on all pairs of low basis states
    let m = tensor_modules(&make_ghost_fock(), &make_fock(1, 1, vec![r(1), r(0)]).unwrap());
    let act = ModeActor::new(&m);
    let mut states = Vec::new();
    for k in 0..=3 {
        let w = &m.min_weight() + &r(k);
        let (lo, hi) = m.fermion_range(&w);
        for p in lo..=hi {
            states.extend(m.basis(p, &w));
        }
    }
    let mut checked = 0;
    for g in 0..4 {
        for n in -3..=4 {
            if g == 0 && n == 1 {
                // b(1) = b₀ pairs through the c(−2) zero mode; the form is the
                // relative one
                continue;
            }
            let (h, n2) = act.adjoint_mode(g, n);
            let u = OperatorExpr::generator(g);
            let ud = OperatorExpr::generator(h);
            for x in &states {
                let gx = act.apply(&u, n, &StateVector::basis(x.clone())).unwrap();
                for y in &states {
                    let gy = act.apply(&ud, n2, &StateVector::basis(y.clone())).unwrap();
                    let lhs = act.form_vectors(&gx, &StateVector::basis(y.clone()));
                    let rhs = act.form_vectors(&StateVector::basis(x.clone()), &gy);
                    assert_eq!(lhs, rhs, "g={g} n={n}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn virasoro_vacuum_gram_at_weight_four() {
    // basis L₋₄v₀, L₋₂²v₀ with Gram [[5κ, 3κ], [3κ, κ(8+κ)/2]]
    let kappa = r(24);
    let m = make_virasoro_vacuum(kappa.clone());
    let act = ModeActor::new(&m);
    let s = m.slice(0, &r(4));
    assert_eq!(s.dim(), 2);
    let g = act.gram_matrix(&s);
    assert!(g.is_symmetric());
    let half = &kappa * &Rational::new(1, 2);
    let mut entries = vec![g.get(0, 0), g.get(0, 1), g.get(1, 1)];
    entries.sort();
    let mut want = vec![&r(10) * &half, &r(6) * &half, &(&half * &kappa) + &(&r(8) * &half)];
    want.sort();
    assert_eq!(entries, want);
}

#[test]
fn mode_actions_commute_with_the_ope() {
    let m = tensor_modules(&make_ghost_fock(), &make_fock(1, 1, vec![r(1), r(0)]).unwrap());
    let act = ModeActor::new(&m);
    let eng = WickEngine::new(act.algebra()).unwrap();
    let b = OperatorExpr::generator(0);
    let c = OperatorExpr::generator(1);
    let l = act.algebra().virasoro().unwrap().clone();
    let bc = eng.wick(&b, &c).unwrap();
    for (u, v) in [(&b, &c), (&l, &c), (&l, &l), (&bc, &l)] {
        let rep = check_commutative(&eng, &act, u, v, 2).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure);
        assert!(rep.checked > 0);
    }
}

#[test]
fn mode_leaving_target_slice_is_an_error() {
    let m = make_fock(1, 1, vec![r(0), r(0)]).unwrap();
    let act = ModeActor::new(&m);
    let s = m.slice(0, &r(1));
    let j = OperatorExpr::generator(0);
    assert!(act.mode_matrix(&j, -1, &s, &s).is_err());
    let t = act.target_slice(&j, -1, &s).unwrap();
    assert_eq!(t.key.weight, r(2));
}

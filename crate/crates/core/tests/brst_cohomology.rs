use qoa_core::algebra::{make_bc_system, make_heisenberg, make_virasoro, make_virasoro_symbolic, tensor};
use qoa_core::brst::{anomaly, anomaly_expected, brst_current, matter_virasoro, nu_maps, physical_space, BrstComplex};
use qoa_core::fock::{make_fock, make_virasoro_vacuum, tensor_modules, BasisState, FactorState, ModuleSpec};
use qoa_core::{Error, Factor, OperatorExpr, Rational, SparseMatrix, WickEngine};

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn mono(fs: &[(usize, u32)]) -> Vec<Factor> {
    fs.iter().map(|&(g, d)| Factor::new(g, d)).collect()
}

fn fock26(entries: &[(usize, i64)]) -> ModuleSpec {
    let mut a = vec![r(0); 26];
    for &(i, x) in entries {
        a[i] = r(x);
    }
    make_fock(25, 1, a).unwrap()
}

#[test]
fn anomaly_with_symbolic_central_charge() {
    let a = tensor(&make_bc_system(2), &make_virasoro_symbolic("k"));
    let e = WickEngine::new(&a).unwrap();
    let got = anomaly(&e).unwrap();
    assert_eq!(got, anomaly_expected(&e).unwrap());
    // (3/2)(:∂³c c: + :∂²c ∂c:) + (k − 26)/12 :∂³c c: expanded by hand
    let mut want = OperatorExpr::term(Rational::new(-2, 3), mono(&[(1, 3), (1, 0)]));
    want.add_term(&Rational::new(1, 12), &mono(&[(1, 3), (1, 0), (3, 0)]));
    want.add_term(&Rational::new(3, 2), &mono(&[(1, 2), (1, 1)]));
    assert_eq!(got, want);
}

#[test]
fn anomaly_numeric_matter() {
    let a = tensor(&make_bc_system(2), &make_heisenberg(25, 1).unwrap());
    let e = WickEngine::new(&a).unwrap();
    let got = anomaly(&e).unwrap();
    let c = OperatorExpr::generator(1);
    let d2c = e.derivative_n(&c, 2).unwrap();
    let total_derivative = e.derivative(&e.wick(&d2c, &c).unwrap()).unwrap().scale(&Rational::new(3, 2));
    assert_eq!(got, total_derivative);

    let a = tensor(&make_bc_system(2), &make_virasoro(r(24)));
    let e = WickEngine::new(&a).unwrap();
    let got = anomaly(&e).unwrap();
    let mut want = OperatorExpr::term(Rational::new(3, 2) - Rational::new(1, 6), mono(&[(1, 3), (1, 0)]));
    want.add_term(&Rational::new(3, 2), &mono(&[(1, 2), (1, 1)]));
    assert_eq!(got, want);
}

#[test]
fn cartan_identity() {
    let a = tensor(&make_bc_system(2), &make_virasoro(r(26)));
    let e = WickEngine::new(&a).unwrap();
    let j = brst_current(&e).unwrap();
    let b = OperatorExpr::generator(0);
    let ope = e.ope(&j, &b).unwrap();
    assert_eq!(ope[&0], a.virasoro().unwrap().clone());
    // the second-order pole is the ghost-number current −:bc:
    assert_eq!(ope[&1], OperatorExpr::term(r(-1), mono(&[(0, 0), (1, 0)])));
    assert_eq!(ope.len(), 2);
    assert_eq!(a.degree(&j).unwrap().unwrap().fermion, 1);
    assert_eq!(a.degree(&j).unwrap().unwrap().weight, r(1));
}

#[test]
fn cartan_identity_fixes_the_charge() {
    // x = s :cL: + t :bc∂c: + u ∂²c with x∘₀b = L_total forces s = t = 1;
    // ∂²c is a total derivative, so Q = x∘₀ does not depend on u
    let a = tensor(&make_bc_system(2), &make_virasoro(r(26)));
    let e = WickEngine::new(&a).unwrap();
    let b = OperatorExpr::generator(0);
    let c = OperatorExpr::generator(1);
    let lm = matter_virasoro(&a).unwrap();
    let cl = e.wick(&c, &lm).unwrap();
    let bcdc = e.wick(&b, &e.wick(&c, &e.derivative(&c).unwrap()).unwrap()).unwrap();
    let d2c = e.derivative_n(&c, 2).unwrap();
    let images: Vec<OperatorExpr> = [&cl, &bcdc, &d2c].iter().map(|x| e.prod(x, &b, 0).unwrap()).collect();
    let total = a.virasoro().unwrap().clone();
    let ghost = &total - &lm;
    assert_eq!(images[0], lm);
    assert_eq!(images[1], ghost);
    assert!(images[2].is_zero());
    assert!(!lm.is_zero() && !ghost.is_zero());
    for v in [&b, &c, &cl, &lm] {
        assert!(e.prod(&d2c, v, 0).unwrap().is_zero());
    }
}

#[test]
fn nilpotency_and_anomaly_detection() {
    let cx = BrstComplex::new(&fock26(&[(0, 1), (1, 1)]), false).unwrap();
    for w in -1..=2 {
        let (lo, hi) = cx.module().fermion_range(&r(w));
        for p in lo..=hi {
            assert!(cx.q_squared_vanishes(p, &r(w)).unwrap(), "p={p} w={w}");
        }
    }
    let m24 = make_fock(23, 1, vec![r(0); 24]).unwrap();
    assert!(matches!(BrstComplex::new(&m24, false), Err(Error::Anomalous(_))));
    let bad = BrstComplex::new(&m24, true).unwrap();
    // (:∂³c c:)(0) acts on b(−1)𝟙 ⊗ |0⟩ at weight 2
    let w = r(2);
    let (lo, hi) = bad.module().fermion_range(&w);
    assert!((lo..=hi).any(|p| !bad.q_squared_vanishes(p, &w).unwrap()));
    assert!(bad.q_squared_vanishes(0, &r(0)).unwrap());
}

#[test]
fn q_b1_homotopy_is_l0() {
    let cx = BrstComplex::new(&fock26(&[(0, 1), (25, 1)]), false).unwrap();
    for w in [r(-1), r(0), r(1)] {
        let (lo, hi) = cx.module().fermion_range(&w);
        for p in lo..=hi {
            let q_here = cx.differential(p, &w).unwrap();
            let b_next = cx.b1_matrix(p + 1, &w).unwrap();
            let b_here = cx.b1_matrix(p, &w).unwrap();
            let q_prev = cx.differential(p - 1, &w).unwrap();
            let lhs = b_next.mul(&q_here).unwrap();
            let rhs = q_prev.mul(&b_here).unwrap();
            let l0 = cx.l0_matrix(p, &w).unwrap();
            let mut sum = Vec::new();
            for i in 0..l0.nrows() {
                for j in 0..l0.ncols() {
                    let x = &lhs.get(i, j) + &rhs.get(i, j);
                    if !x.is_zero() {
                        sum.push((i, j, x));
                    }
                }
            }
            assert_eq!(SparseMatrix::from_triplets(l0.nrows(), l0.ncols(), sum), l0, "p={p} w={w}");
        }
    }
}

#[test]
fn b1_is_exact() {
    // ker b(1) = im b(1) on every slice
    let cx = BrstComplex::new(&fock26(&[(0, 1), (1, 1)]), false).unwrap();
    for w in [r(0), r(1)] {
        let (lo, hi) = cx.module().fermion_range(&w);
        for p in lo..=hi {
            let here = cx.b1_matrix(p, &w).unwrap();
            let above = cx.b1_matrix(p + 1, &w).unwrap();
            assert_eq!(here.ncols() - here.rank(), above.rank(), "p={p} w={w}");
        }
    }
}

fn dims(cx: &BrstComplex, w: i64) -> Vec<(i64, usize)> {
    let w = r(w);
    let (lo, hi) = cx.module().fermion_range(&w);
    (lo..=hi)
        .map(|p| (p, cx.cohomology_slice(p, &w, false).unwrap().dim_h))
        .collect()
}

#[test]
fn cohomology_pattern_tachyon_and_lightlike() {
    for (alpha, want) in [(fock26(&[(0, 1), (1, 1)]), 1usize), (fock26(&[(0, 1), (25, 1)]), 24)] {
        let cx = BrstComplex::new(&alpha, false).unwrap();
        for (p, d) in dims(&cx, 0) {
            let expect = if p == 1 || p == 2 { want } else { 0 };
            assert_eq!(d, expect, "p={p}");
        }
        for w in [-1, 1] {
            assert!(dims(&cx, w).iter().all(|&(_, d)| d == 0), "weight {w}");
        }
        let rel = cx.relative_cohomology(1, false).unwrap();
        assert_eq!(rel.dim_h, want);
        for p in [0, 2] {
            assert_eq!(cx.relative_cohomology(p, false).unwrap().dim_h, 0);
        }
    }
}

#[test]
fn cohomology_at_zero_momentum() {
    let cx = BrstComplex::new(&fock26(&[]), false).unwrap();
    let d: Vec<(i64, usize)> = dims(&cx, 0).into_iter().filter(|&(_, d)| d > 0).collect();
    assert_eq!(d, vec![(0, 1), (1, 26), (2, 26), (3, 1)]);
    let h0 = cx.cohomology_slice(0, &r(0), true).unwrap();
    let vac = cx.module().vacuum();
    assert_eq!(h0.representatives.len(), 1);
    assert_eq!(h0.representatives[0].terms().map(|(s, _)| s.clone()).collect::<Vec<_>>(), vec![vac]);
    let h3 = cx.cohomology_slice(3, &r(0), true).unwrap();
    let top = BasisState(vec![
        FactorState::Ghost {
            b: vec![],
            c: vec![3, 2, 1],
        },
        FactorState::Boson(vec![]),
    ]);
    assert_eq!(h3.representatives[0].terms().map(|(s, _)| s.clone()).collect::<Vec<_>>(), vec![top]);
    let rel: Vec<usize> = (0..=2).map(|p| cx.relative_cohomology(p, false).unwrap().dim_h).collect();
    assert_eq!(rel, vec![1, 26, 1]);
}

#[test]
fn euler_poincare_per_slice() {
    let cx = BrstComplex::new(&fock26(&[(0, 1), (25, 1)]), false).unwrap();
    for w in [r(0), r(1)] {
        let (lo, hi) = cx.module().fermion_range(&w);
        let mut chain = 0i64;
        let mut coh = 0i64;
        for p in lo..=hi {
            let res = cx.cohomology_slice(p, &w, false).unwrap();
            let s = if p % 2 == 0 { 1 } else { -1 };
            chain += s * res.dim_c as i64;
            coh += s * res.dim_h as i64;
            assert_eq!(res.dim_z - res.dim_b, res.dim_h);
        }
        assert_eq!(chain, coh);
    }
}

#[test]
fn relative_dims_for_central_charge_two_surrogate() {
    // M(24) ⊗ F_{1,1}(0) has the character of a central-charge-2 factor
    let m = tensor_modules(&make_virasoro_vacuum(r(24)), &make_fock(1, 1, vec![r(0), r(0)]).unwrap());
    let cx = BrstComplex::new(&m, false).unwrap();
    let rel: Vec<usize> = (0..=2).map(|p| cx.relative_cohomology(p, false).unwrap().dim_h).collect();
    assert_eq!(rel, vec![1, 2, 1]);
}

#[test]
fn physical_spaces_and_nu_maps() {
    assert_eq!(physical_space(&make_virasoro_vacuum(r(26))).unwrap().dim(), 0);
    for (m, want) in [(fock26(&[(0, 1), (1, 1)]), 1usize), (fock26(&[(0, 1), (25, 1)]), 24)] {
        let phys = physical_space(&m).unwrap();
        assert_eq!(phys.dim(), want);
        let cx = BrstComplex::new(&m, false).unwrap();
        let (n1, n2) = nu_maps(&cx, &phys).unwrap();
        assert!(n1.bijective() && n2.bijective());
        assert!(n1.lands_in_cocycles && n2.lands_in_cocycles);
    }
    let m = fock26(&[]);
    let phys = physical_space(&m).unwrap();
    let cx = BrstComplex::new(&m, false).unwrap();
    let (n1, _) = nu_maps(&cx, &phys).unwrap();
    assert!(n1.injective());
}

#[test]
fn factorized_differential_matches_mode_action() {
    let m24 = tensor_modules(&make_virasoro_vacuum(r(24)), &make_fock(1, 1, vec![r(1), Rational::new(1, 2)]).unwrap());
    for (m, anomalous) in [(fock26(&[(0, 1), (1, 1)]), false), (fock26(&[]), false), (m24, false), (make_fock(23, 1, vec![r(0); 24]).unwrap(), true)] {
        let cx = BrstComplex::new(&m, anomalous).unwrap();
        for w in -1..=2 {
            let w = r(w);
            let (lo, hi) = cx.module().fermion_range(&w);
            for p in lo - 1..=hi {
                let (src, tgt) = (cx.slice(p, &w), cx.slice(p + 1, &w));
                let generic = cx.actor().mode_matrix(cx.current(), 0, &src, &tgt).unwrap();
                assert_eq!(cx.differential(p, &w).unwrap(), generic, "p={p} w={w}");
            }
        }
    }
}

#[test]
fn relative_euler_poincare_dimension() {
    use qoa_core::qseries::{euler_poincare_dim, ghost_relative_supercharacter, module_character};
    // the surviving classes sit in odd degree, so the supertrace is −dim H_Δ¹
    for m in [fock26(&[(0, 1), (1, 1)]), fock26(&[(0, 1), (25, 1)])] {
        let blocks = [ghost_relative_supercharacter(4), module_character(&m, 4).unwrap()];
        let ep = euler_poincare_dim(&blocks).unwrap();
        let cx = BrstComplex::new(&m, false).unwrap();
        let h1 = cx.relative_cohomology(1, false).unwrap().dim_h as i64;
        assert_eq!(ep, r(-h1));
    }
}

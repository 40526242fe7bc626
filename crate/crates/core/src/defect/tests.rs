use std::collections::BTreeMap;

use super::*;
use crate::groups::{build_extension, CocycleRule};

fn f2() -> Group {
    Group::free(2).unwrap()
}

fn w(s: &str) -> Word {
    Word::parse(s).unwrap()
}

fn e(s: &str) -> Element {
    Element::Word(w(s))
}

fn uv() -> QMap {
    QMap::middle_uv(f2(), w("aabaa"), w("bbabb")).unwrap()
}

fn heis_lift() -> QMap {
    let h = Group::heisenberg(1).unwrap();
    let base = h.as_extension().unwrap().base().clone();
    QMap::hom_lift(f2(), h, vec![base.parse("(1,0)").unwrap(), base.parse("(0,1)").unwrap()]).unwrap()
}

fn brooks(s: &str) -> QMap {
    QMap::brooks(f2(), w(s)).unwrap()
}

fn perturbed_identity() -> QMap {
    QMap::point_perturbation(QMap::identity(f2()).unwrap(), BTreeMap::from([(e("ab"), e("aba"))])).unwrap()
}

fn exhaustive(radius: u32) -> PairEnumeration {
    PairEnumeration::Exhaustive { radius }
}

fn opts() -> ScanOptions {
    ScanOptions::default()
}

fn s3() -> Group {
    Group::permutation(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap()
}

#[test]
fn middle_defect_example() {
    let d = pair_defect(&uv(), &e("aa"), &e("baa"), DefectClass::Middle, 0).unwrap();
    assert_eq!(d, PairDefect::Element { value: e("aabaa"), norm: 5 });
}

#[test]
fn ulam_defect_at_identity() {
    for y in f2().enumerate_ball(3).unwrap().elements {
        let d = pair_defect(&uv(), &f2().identity(), &y, DefectClass::Ulam, 0).unwrap();
        assert_eq!(d.element(), Some(&f2().identity()));
    }
}

#[test]
fn ulam_witness_family_grows() {
    let (u, v) = (w("aabaa"), w("bbabb"));
    for k in 1..=10i64 {
        let y = Element::Word(w("baa").multiply(&v.pow(k)));
        let d = pair_defect(&uv(), &e("aa"), &y, DefectClass::Ulam, 0).unwrap();
        let expected = v.pow(-k).multiply(&u).multiply(&v.pow(k));
        assert_eq!(d, PairDefect::Element { value: Element::Word(expected), norm: 5 + 10 * k as u64 });
    }
}

#[test]
fn homomorphism_has_trivial_defect_set() {
    let r = defect_set(&heis_lift(), &exhaustive(3), DefectClass::Ulam, opts()).unwrap();
    assert_eq!(r.defects, vec!["<0;(0,0)>"]);
    assert!(r.radius_table.iter().all(|row| row.distinct == 1));
    assert_eq!(r.stable_from, Some(0));
}

#[test]
fn carry_section_defects() {
    let e2 = build_extension(Group::integers(), Group::cyclic(2), CocycleRule::Carry { modulus: 2 }).unwrap();
    let base = e2.as_extension().unwrap().base().clone();
    let s = QMap::section_lift(e2, QMap::identity(base).unwrap()).unwrap();
    let r = defect_set(&s, &exhaustive(1), DefectClass::Ulam, opts()).unwrap();
    assert_eq!(r.pairs, 4);
    assert_eq!(r.defects, vec!["<0;0>", "<-1;0>"]);
}

/// Distinct Ulam defects among pairs of norm at most `r`, by direct loops.
fn oracle_counts(f: &QMap, radius: u32) -> Vec<usize> {
    let g = f.domain().clone();
    let ball = g.enumerate_ball(radius).unwrap();
    let mut first: BTreeMap<Element, u32> = BTreeMap::new();
    for (x, dx) in ball.elements.iter().zip(&ball.depths) {
        for (y, dy) in ball.elements.iter().zip(&ball.depths) {
            let fx = f.evaluate(x).unwrap();
            let fy = f.evaluate(y).unwrap();
            let fxy = f.evaluate(&g.multiply(x, y).unwrap()).unwrap();
            let h = f.target();
            let d = h.multiply(&h.invert(&h.multiply(&fx, &fy).unwrap()).unwrap(), &fxy).unwrap();
            let r = *dx.max(dy);
            first.entry(d).and_modify(|v| *v = (*v).min(r)).or_insert(r);
        }
    }
    (0..=radius).map(|r| first.values().filter(|&&v| v <= r).count()).collect()
}

#[test]
fn middle_uv_ulam_table_matches_oracle() {
    let r = defect_set(&uv(), &exhaustive(5), DefectClass::Ulam, opts()).unwrap();
    let counts: Vec<usize> = r.radius_table.iter().map(|row| row.distinct).collect();
    assert_eq!(counts, oracle_counts(&uv(), 5));
    // u = aabaa overlaps itself, so aaba·abaa already yields u² at radius 4
    assert_eq!(counts, vec![1, 1, 1, 5, 9, 9]);
    assert!(r.defects.contains(&"aabaaaabaa".to_string()));
}

#[test]
fn middle_uv_middle_defects_within_bound() {
    let r = defect_set(&uv(), &exhaustive(5), DefectClass::Middle, opts()).unwrap();
    assert!(r.max_norm.unwrap() <= 75);
}

#[test]
fn ulam_is_conjugate_of_middle() {
    let g = f2();
    for f in [uv(), perturbed_identity(), brooks_composite()] {
        let h = f.target().clone();
        for x in g.enumerate_ball(3).unwrap().elements.iter().step_by(3) {
            for y in g.enumerate_ball(3).unwrap().elements.iter() {
                let u = pair_defect(&f, x, y, DefectClass::Ulam, 0).unwrap();
                let m = pair_defect(&f, x, y, DefectClass::Middle, 0).unwrap();
                let fy = f.evaluate(y).unwrap();
                assert_eq!(u.element().unwrap(), &h.conjugate(&fy, m.element().unwrap()).unwrap());
            }
        }
    }
}

fn brooks_composite() -> QMap {
    QMap::compose(QMap::identity(f2()).unwrap(), uv()).unwrap()
}

#[test]
fn decomposition_radii_are_ordered() {
    let f = uv();
    let g = f2();
    let elems = g.enumerate_ball(2).unwrap().elements;
    for x in &elems {
        for y in &elems {
            let m = pair_defect(&f, x, y, DefectClass::Middle, 0).unwrap().norm().unwrap();
            let geo = pair_defect(&f, x, y, DefectClass::Geometric, 5).unwrap();
            let alg = pair_defect(&f, x, y, DefectClass::Algebraic, 3).unwrap();
            let geo_r = geo.norm().expect("middle defect has norm ≤ 5");
            assert!(geo_r <= m);
            if let Some(a) = alg.norm() {
                assert!(a <= geo_r);
            }
            if let PairDefect::Decomposition { parts, .. } = &geo {
                let fx = f.evaluate(x).unwrap();
                let fy = f.evaluate(y).unwrap();
                let rhs = g.multiply_all([&fx, &parts[0], &fy, &parts[1]]).unwrap();
                assert_eq!(rhs, f.evaluate(&g.multiply(x, y).unwrap()).unwrap());
            }
        }
    }
}

#[test]
fn geometric_report_counts_exceeded_pairs() {
    let r = defect_set(&perturbed_identity(), &exhaustive(2), DefectClass::Geometric, ScanOptions { rho: 0, ..opts() }).unwrap();
    assert!(r.exceeded > 0);
    let r = defect_set(&perturbed_identity(), &exhaustive(2), DefectClass::Geometric, ScanOptions { rho: 2, ..opts() }).unwrap();
    assert_eq!(r.exceeded, 0);
}

#[test]
fn random_scans_are_reproducible() {
    let en = PairEnumeration::Random { count: 500, max_len: 8, seed: 7 };
    let a = serde_json::to_string(&defect_set(&uv(), &en, DefectClass::Ulam, opts()).unwrap()).unwrap();
    let b = serde_json::to_string(&defect_set(&uv(), &en, DefectClass::Ulam, opts()).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = PairEnumeration::Random { count: 500, max_len: 8, seed: 8 };
    let c = serde_json::to_string(&defect_set(&uv(), &other, DefectClass::Ulam, opts()).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn pair_cap_is_reported() {
    let r = defect_set(&uv(), &exhaustive(6), DefectClass::Ulam, ScanOptions { pair_cap: 1000, ..opts() });
    assert!(matches!(r, Err(DefectError::PairCap { .. })));
}

#[test]
fn subgroup_ball_examples() {
    let g = s3();
    let id = subgroup_ball(&[g.identity()], &g, 3, 100).unwrap();
    assert_eq!(id.elements, vec![g.identity()]);
    assert!(id.closed);
    let t = g.parse("[1,0,2]").unwrap();
    let b = subgroup_ball(&[t.clone()], &g, 2, 100).unwrap();
    assert_eq!(b.elements.len(), 2);
    assert!(b.closed);
    let c = subgroup_closure(&[t, g.parse("[0,2,1]").unwrap()], &g, 100).unwrap();
    assert_eq!(c.elements.len(), 6);
}

#[test]
fn subgroup_ball_in_free_group_is_monotone_and_open() {
    let g = f2();
    let mut prev = 0;
    for n in 0..4 {
        let b = subgroup_ball(&[e("ab")], &g, n, 1000).unwrap();
        assert_eq!(b.elements.len(), 2 * n as usize + 1);
        assert!(b.elements.len() > prev || n == 0);
        assert!(!b.closed);
        prev = b.elements.len();
    }
}

#[test]
fn identity_audit_on_homomorphisms_and_central_perturbations() {
    let a = identity_audit(&heis_lift(), &exhaustive(3), opts()).unwrap();
    assert!(a.passed, "{a:?}");
    assert_eq!(a.defects, 1);
    let p = QMap::central_perturbation(heis_lift(), brooks("ab")).unwrap();
    let a = identity_audit(&p, &exhaustive(4), opts()).unwrap();
    assert!(a.passed, "{a:?}");
}

#[test]
fn identity_audit_on_point_perturbation_checks_inverse() {
    let a = identity_audit(&perturbed_identity(), &exhaustive(2), opts()).unwrap();
    let inv = a.checks.iter().find(|c| c.name == "inverse").unwrap();
    assert!(inv.checked > 0);
    assert!(inv.passed);
}

#[test]
fn hs_probe_identity_matches_brooks_scans() {
    let id = QMap::identity(f2()).unwrap();
    let r = hs_probe(&id, 2, &exhaustive(3), opts()).unwrap();
    assert_eq!(r.probes.len(), 16);
    for row in &r.probes {
        let own = defect_set(&brooks(&row.word), &exhaustive(3), DefectClass::Ulam, opts()).unwrap();
        assert_eq!(row.radius_table.len(), own.radius_table.len());
        for (rr, row_own) in row.radius_table.iter().zip(&own.radius_table) {
            // defects of a quasimorphism into Z: |d| is its norm
            assert_eq!(Some(*rr), row_own.max_norm);
        }
    }
}

#[test]
fn hs_probe_middle_uv_is_small() {
    let r = hs_probe(&uv(), 2, &exhaustive(4), opts()).unwrap();
    for row in &r.probes {
        assert!(row.radius_table.windows(2).all(|p| p[0] <= p[1]), "{row:?}");
    }
    let a = r.probes.iter().find(|p| p.word == "a").unwrap();
    let g = f2();
    let ball = g.enumerate_ball(4).unwrap();
    let phi = |x: &Element| brooks_value(&w("a"), uv().evaluate(x).unwrap().as_word().unwrap());
    let mut oracle = vec![0u64; 5];
    for (x, dx) in ball.elements.iter().zip(&ball.depths) {
        for (y, dy) in ball.elements.iter().zip(&ball.depths) {
            let v = (phi(&g.multiply(x, y).unwrap()) - phi(x) - phi(y)).unsigned_abs();
            for slot in oracle.iter_mut().skip(*dx.max(dy) as usize) {
                *slot = (*slot).max(v);
            }
        }
    }
    assert_eq!(a.radius_table, oracle);
    assert_eq!(oracle, vec![0, 0, 0, 4, 8]);
}

#[test]
fn hs_probe_needs_free_target() {
    assert!(hs_probe(&heis_lift(), 2, &exhaustive(1), opts()).is_err());
}

#[test]
fn composition_and_product_containments() {
    let c = QMap::compose(brooks("ab"), uv()).unwrap();
    let r = composition_containment(&c, &exhaustive(3), opts()).unwrap();
    assert!(r.passed, "{r:?}");
    let p = QMap::product(vec![brooks("ab"), uv(), perturbed_identity()]).unwrap();
    let r = product_factorization(&p, &exhaustive(3), opts()).unwrap();
    assert!(r.passed, "{r:?}");
}

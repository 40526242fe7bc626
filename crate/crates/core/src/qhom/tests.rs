use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::words::words_of_length;

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

fn hom_to_z2() -> QMap {
    let z2 = Group::free_abelian(2);
    QMap::generator_hom(f2(), z2.clone(), vec![z2.parse("(1,0)").unwrap(), z2.parse("(0,1)").unwrap()]).unwrap()
}

fn heis_lift() -> QMap {
    let h = Group::heisenberg(1).unwrap();
    let base = h.as_extension().unwrap().base().clone();
    QMap::hom_lift(f2(), h, vec![base.parse("(1,0)").unwrap(), base.parse("(0,1)").unwrap()]).unwrap()
}

fn brooks_ab() -> QMap {
    QMap::brooks(f2(), w("ab")).unwrap()
}

fn ball(r: u32) -> Vec<Element> {
    f2().enumerate_ball(r).unwrap().elements
}

#[test]
fn construct_examples() {
    uv();
    match QMap::middle_uv(f2(), w("ab"), w("ba")) {
        Err(MapError::Overlap(wit)) => assert!(!wit.shared.is_empty()),
        other => panic!("expected overlap, got {other:?}"),
    }
    let z = Group::integers();
    let bad = QMap::compose(brooks_ab(), brooks_ab());
    assert!(matches!(bad, Err(MapError::Composability { .. })));
    assert!(matches!(
        QMap::generator_hom(z.clone(), z.clone(), vec![Element::integer(1)]),
        Err(MapError::NotFreeDomain { .. })
    ));
    assert!(QMap::brooks(f2(), w("aba")).is_ok());
    assert!(matches!(QMap::brooks(f2(), w("abA")), Err(MapError::Word(WordError::NotCyclicallyReduced(_)))));
    assert!(QMap::brooks(f2(), Word::identity()).is_err());
}

#[test]
fn evaluate_examples() {
    let p = QMap::product(vec![brooks_ab(), QMap::brooks(f2(), w("ba")).unwrap()]).unwrap();
    // "abba": one "ab" at 0, no "BA"; one "ba" at 2, no "AB"
    assert_eq!(
        p.evaluate(&e("abba")).unwrap(),
        Element::Tuple(vec![Element::integer(1), Element::integer(1)])
    );

    let id = QMap::identity(f2()).unwrap();
    let pert = QMap::point_perturbation(id, BTreeMap::from([(e("ab"), e("aba"))])).unwrap();
    assert_eq!(pert.evaluate(&e("ab")).unwrap(), e("aba"));
    assert_eq!(pert.evaluate(&e("ba")).unwrap(), e("ba"));

    let h = Group::heisenberg(1).unwrap();
    let s = QMap::section_lift(h.clone(), hom_to_z2()).unwrap();
    assert_eq!(s.evaluate(&e("ab")).unwrap(), h.parse("<0;(1,1)>").unwrap());
}

#[test]
fn brooks_examples() {
    assert_eq!(brooks_value(&w("ab"), &w("ababab")), 3);
    assert_eq!(brooks_value(&w("ab"), &Word::identity()), 0);
    assert_eq!(brooks_value(&w("ab"), &w("BA")), -1);
    // overlapping occurrences all count
    assert_eq!(brooks_value(&w("aa"), &w("aaaa")), 3);
}

#[test]
fn brooks_is_odd() {
    for x in ball(5) {
        let x = x.as_word().unwrap().clone();
        assert_eq!(brooks_value(&w("ab"), &x.inverse()), -brooks_value(&w("ab"), &x));
    }
}

#[test]
fn middle_value_examples() {
    let (u, v) = (w("aabaa"), w("bbabb"));
    assert_eq!(middle_uv_value(&u, &v, &u.pow(2)).word, u.pow(2));
    assert_eq!(middle_uv_value(&u, &v, &w("aa")).word, Word::identity());
    let uv_word = u.multiply(&v);
    assert_eq!(uv_word, w("aabaabbabb"));
    let m = middle_uv_value(&u, &v, &uv_word);
    assert_eq!(m.word, uv_word);
    assert_eq!(m.patterns, vec![0, 2]);
    assert_eq!(alpha_abelianize(&middle_uv_value(&u, &v, &u.pow(3)).patterns), 3);
    assert_eq!(alpha_abelianize(&middle_uv_value(&u, &v, &v.pow(2)).patterns), 0);
    assert_eq!(alpha_abelianize(&m.patterns), 1);
}

#[test]
fn middle_value_inverts_and_abelianizes_to_brooks() {
    let (u, v) = (w("aabaa"), w("bbabb"));
    let f = uv();
    for n in 0..=7 {
        for x in words_of_length(2, n) {
            let m = f.middle_value(&Element::Word(x.clone())).unwrap();
            assert_eq!(middle_uv_value(&u, &v, &x.inverse()).word, m.word.inverse(), "{x}");
            assert_eq!(alpha_abelianize(&m.patterns), brooks_value(&u, &x), "{x}");
        }
    }
}

#[test]
fn hom_lift_examples() {
    let f = heis_lift();
    let h = f.target().clone();
    assert_eq!(f.evaluate(&e("ab")).unwrap(), h.parse("<1;(1,1)>").unwrap());
    assert_eq!(f.evaluate(&e("")).unwrap(), h.identity());
    let p = QMap::central_perturbation(f.clone(), brooks_ab()).unwrap();
    assert_eq!(f.evaluate(&e("abab")).unwrap(), h.parse("<2;(2,2)>").unwrap());
    assert_eq!(p.evaluate(&e("abab")).unwrap(), h.parse("<4;(2,2)>").unwrap());
}

#[test]
fn hom_lift_is_multiplicative() {
    let f = heis_lift();
    let h = f.target().clone();
    let g = f2();
    for x in ball(3) {
        for y in ball(3) {
            let lhs = f.evaluate(&g.multiply(&x, &y).unwrap()).unwrap();
            let rhs = h.multiply(&f.evaluate(&x).unwrap(), &f.evaluate(&y).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn lift_difference_examples() {
    let f1 = heis_lift();
    let f2m = QMap::central_perturbation(f1.clone(), brooks_ab()).unwrap();
    let sample = ball(4);
    let d = lift_difference(f1.clone(), f2m, &sample).unwrap();
    for x in &sample {
        assert_eq!(d.evaluate(x).unwrap(), brooks_ab().evaluate(x).unwrap());
    }
    let same = lift_difference(f1.clone(), f1.clone(), &sample).unwrap();
    assert!(sample.iter().all(|x| same.evaluate(x).unwrap() == Element::integer(0)));

    let h = f1.target().clone();
    let base = h.as_extension().unwrap().base().clone();
    let other = QMap::hom_lift(f2(), h, vec![base.parse("(1,0)").unwrap(), base.parse("(1,1)").unwrap()]).unwrap();
    match lift_difference(f1, other, &sample) {
        Err(MapError::ProjectionsDisagree(x)) => assert_eq!(x, "b"),
        other => panic!("expected disagreement, got {other:?}"),
    }
}

#[test]
fn compose_evaluates_inner_then_outer() {
    let c = QMap::compose(brooks_ab(), uv()).unwrap();
    for x in ball(4) {
        let inner = uv().evaluate(&x).unwrap();
        assert_eq!(c.evaluate(&x).unwrap(), brooks_ab().evaluate(&inner).unwrap());
    }
}

#[test]
fn point_table_requires_every_element() {
    let z4 = Group::cyclic(4);
    let mut t: BTreeMap<Element, Element> = (0..4).map(|i| (Element::integer(i), Element::integer(0))).collect();
    assert!(QMap::point_table(z4.clone(), z4.clone(), t.clone()).is_ok());
    t.remove(&Element::integer(3));
    assert!(matches!(QMap::point_table(z4.clone(), z4, t), Err(MapError::MissingPoint(_))));
}

#[test]
fn coset_retraction_projection() {
    let z4 = Group::cyclic(4);
    let table = (0..4).map(|i| (Element::integer(i), Element::integer(i))).collect();
    let id = QMap::point_table(z4.clone(), z4.clone(), table).unwrap();
    let r = QMap::post_project(
        id,
        Projection::CosetRetraction {
            kernel: [0, 2].map(Element::integer).into_iter().collect(),
            representatives: vec![Element::integer(0), Element::integer(1)],
        },
    )
    .unwrap();
    let got: Vec<i64> = (0..4).map(|i| r.evaluate(&Element::integer(i)).unwrap().as_integer().unwrap()).collect();
    assert_eq!(got, vec![0, 0, 2, 2]);
}

#[test]
fn evaluate_rejects_foreign_elements() {
    assert!(brooks_ab().evaluate(&Element::integer(1)).is_err());
    assert!(brooks_ab().evaluate(&e("c")).is_err());
}

fn arb_word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((1usize..=2, any::<bool>()), 0..max)
        .prop_map(|ls| Word::reduce(&ls.into_iter().map(|(g, i)| Letter::new(g, i).unwrap()).collect::<Vec<_>>()))
}

use crate::words::Letter;

proptest! {
    #[test]
    fn middle_value_is_product_of_patterns(x in arb_word(30)) {
        let (u, v) = (w("aabaa"), w("bbabb"));
        let m = middle_uv_value(&u, &v, &x);
        let pats = pattern_set(&u, &v);
        let prod = m.patterns.iter().fold(Word::identity(), |acc, &p| acc.multiply(&pats[p]));
        prop_assert_eq!(prod, m.word);
    }

    #[test]
    fn brooks_changes_sign_under_inversion(x in arb_word(30)) {
        prop_assert_eq!(brooks_value(&w("aab"), &x.inverse()), -brooks_value(&w("aab"), &x));
    }
}

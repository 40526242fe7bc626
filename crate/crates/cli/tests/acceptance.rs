//! Acceptance suite: one line per criterion, exact arithmetic throughout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use qhom::defect::{
    composition_containment, defect_set, identity_audit, middle_defect, pair_defect, product_factorization,
    ulam_defect, DefectClass, PairDefect, PairEnumeration, ScanOptions,
};
use qhom::groups::{build_extension, CocycleRule, Element, Group};
use qhom::qhom::{alpha_abelianize, brooks_value, lift_difference, middle_uv_value, Evaluate, QMap};
use qhom::structure::{constructibility_decompose, quasi_split_roundtrip};
use qhom::words::Word;
use qhom_cli::{run, ExperimentSpec, RunOptions};

type Outcome = Result<String, String>;

fn w(s: &str) -> Word {
    Word::parse(s).unwrap()
}

fn f2() -> Group {
    Group::free(2).unwrap()
}

fn exhaustive(radius: u32) -> PairEnumeration {
    PairEnumeration::Exhaustive { radius }
}

fn opts() -> ScanOptions {
    ScanOptions::default()
}

fn uv() -> QMap {
    QMap::middle_uv(f2(), w("aabaa"), w("bbabb")).unwrap()
}

fn brooks(s: &str) -> QMap {
    QMap::brooks(f2(), w(s)).unwrap()
}

fn s3() -> Group {
    Group::permutation(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap()
}

fn hom_s3() -> QMap {
    let s = s3();
    QMap::generator_hom(f2(), s.clone(), vec![s.parse("[1,0,2]").unwrap(), s.parse("[1,2,0]").unwrap()]).unwrap()
}

fn quaternion() -> Group {
    let v4 = Group::abelian(vec![2, 2]);
    let (i, j, k) = (v4.parse("(1,0)").unwrap(), v4.parse("(0,1)").unwrap(), v4.parse("(1,1)").unwrap());
    let mut entries = BTreeMap::new();
    for (x, y) in [(&i, &i), (&j, &j), (&k, &k), (&j, &i), (&k, &j), (&i, &k)] {
        entries.insert((x.clone(), y.clone()), vec![1]);
    }
    build_extension(Group::cyclic(2), v4, CocycleRule::Table(entries)).unwrap()
}

fn q8_section() -> QMap {
    let q = quaternion();
    let v4 = q.as_extension().unwrap().base().clone();
    let h = QMap::generator_hom(f2(), v4.clone(), vec![v4.parse("(1,0)").unwrap(), v4.parse("(0,1)").unwrap()]).unwrap();
    QMap::section_lift(q, h).unwrap()
}

fn z8_section() -> QMap {
    let t: Vec<Vec<u32>> = (0..8).map(|i| (0..8).map(|j| (i + j) % 8).collect()).collect();
    let z8 = Group::table(&t, Some(&[1])).unwrap();
    let z2 = Group::cyclic(2);
    let table = z8
        .enumerate_all()
        .unwrap()
        .into_iter()
        .map(|x| {
            let label: i64 = z8.format(&x).parse().unwrap();
            (x, Element::integer(label % 2))
        })
        .collect();
    let reduce = QMap::point_table(z8, z2.clone(), table).unwrap();
    let z4 = build_extension(Group::cyclic(2), z2.clone(), CocycleRule::Carry { modulus: 2 }).unwrap();
    let section = QMap::section_lift(z4, QMap::identity(z2).unwrap()).unwrap();
    QMap::compose(section, reduce).unwrap()
}

fn heis_lift(n: usize) -> QMap {
    let h = Group::heisenberg(n).unwrap();
    let images = (0..2 * n)
        .map(|i| Element::Vector((0..2 * n).map(|j| i64::from(i == j)).collect()))
        .collect();
    QMap::hom_lift(Group::free(2 * n).unwrap(), h, images).unwrap()
}

fn perturbed_lift() -> QMap {
    QMap::central_perturbation(heis_lift(1), brooks("ab")).unwrap()
}

fn point_perturbation() -> QMap {
    let id = QMap::identity(f2()).unwrap();
    QMap::point_perturbation(id, BTreeMap::from([(Element::Word(w("ab")), Element::Word(w("aba")))])).unwrap()
}

/// Occurrences of `pat` in `host` at every position, as plain strings.
fn count_str(host: &str, pat: &str) -> i64 {
    let (h, p) = (host.as_bytes(), pat.as_bytes());
    if p.len() > h.len() {
        return 0;
    }
    (0..=h.len() - p.len()).filter(|&i| &h[i..i + p.len()] == p).count() as i64
}

fn invert_str(s: &str) -> String {
    s.chars()
        .rev()
        .map(|c| if c.is_ascii_lowercase() { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
        .collect()
}

fn brooks_oracle(pat: &str, x: &str) -> i64 {
    count_str(x, pat) - count_str(x, &invert_str(pat))
}

fn criterion_1() -> Outcome {
    let (u, v) = (w("aabaa"), w("bbabb"));
    let ball = f2().enumerate_ball(6).unwrap().elements;
    let words: Vec<Word> = ball.iter().map(|x| x.as_word().unwrap().clone()).collect();
    let index: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let values: Vec<Word> = words.iter().map(|x| middle_uv_value(&u, &v, x).word).collect();
    let mut max = 0;
    let mut pairs = 0u64;
    for (i, x) in words.iter().enumerate() {
        let fx_inv = values[i].inverse();
        for (j, y) in words.iter().enumerate() {
            let xy = x.multiply(y);
            let fxy = match index.get(&xy) {
                Some(&k) => values[k].clone(),
                None => middle_uv_value(&u, &v, &xy).word,
            };
            let d = fx_inv.multiply(&fxy).multiply(&values[j].inverse());
            max = max.max(d.len());
            pairs += 1;
        }
    }
    let lib = defect_set(&uv(), &exhaustive(6), DefectClass::Middle, opts()).map_err(|e| e.to_string())?;
    let lib_max = lib.max_norm.unwrap_or(0) as usize;
    if max <= 75 && lib_max == max && lib.pairs as u64 == pairs {
        Ok(format!("max middle defect norm {max} ≤ 75 over {pairs} pairs (oracle and scan agree)"))
    } else {
        Err(format!("oracle max {max}, scan max {lib_max}, pairs {pairs}/{}", lib.pairs))
    }
}

fn criterion_2() -> Outcome {
    let f = uv();
    let g = f2();
    for n in 1..=20i64 {
        for (base, fixed) in [("aabaa", true), ("bbabb", true), ("a", false), ("b", false)] {
            let x = w(base).pow(n);
            let y = f.evaluate(&Element::Word(x.clone())).map_err(|e| e.to_string())?;
            let expected = if fixed { Element::Word(x.clone()) } else { g.identity() };
            if y != expected {
                return Err(format!("f({x}) = {}", g.format(&y)));
            }
        }
    }
    Ok("f(uⁿ) = uⁿ, f(vⁿ) = vⁿ, f(aⁿ) = f(bⁿ) = 1 for n = 1..20".into())
}

fn criterion_3() -> Outcome {
    let (u, v) = (w("aabaa"), w("bbabb"));
    let ball = f2().enumerate_ball(8).unwrap().elements;
    for x in &ball {
        let x = x.as_word().unwrap();
        let alpha = alpha_abelianize(&middle_uv_value(&u, &v, x).patterns);
        let oracle = brooks_oracle("aabaa", &x.to_string());
        if alpha != oracle || brooks_value(&u, x) != oracle {
            return Err(format!("at {x}: α∘f = {alpha}, occurrence count {oracle}"));
        }
    }
    Ok(format!("α∘f = Brooks(u) on all {} words of length ≤ 8", ball.len()))
}

fn catalog() -> Vec<(&'static str, QMap)> {
    vec![
        ("middle_uv", uv()),
        ("brooks(ab)", brooks("ab")),
        ("hom F2→S3", hom_s3()),
        ("hom_lift", heis_lift(1)),
        ("central_perturbation", perturbed_lift()),
        ("section into Q8", q8_section()),
        ("Z/8 section composite", z8_section()),
        ("point_perturbation", point_perturbation()),
        ("product", QMap::product(vec![brooks("ab"), brooks("ba")]).unwrap()),
        ("compose", QMap::compose(brooks("ab"), uv()).unwrap()),
    ]
}

fn criterion_4() -> Outcome {
    let mut pairs = 0;
    for (name, f) in catalog() {
        let (g, h) = (f.domain().clone(), f.target().clone());
        let ball = g.enumerate_ball(3).unwrap().elements;
        let vals: Vec<Element> = ball.iter().map(|x| f.evaluate(x).unwrap()).collect();
        for (x, fx) in ball.iter().zip(&vals) {
            for (y, fy) in ball.iter().zip(&vals) {
                let fxy = f.evaluate(&g.multiply(x, y).unwrap()).unwrap();
                let ulam = ulam_defect(&h, fx, fy, &fxy).unwrap();
                let middle = middle_defect(&h, fx, fy, &fxy).unwrap();
                if ulam != h.conjugate(fy, &middle).unwrap() {
                    return Err(format!("{name} at ({}, {})", g.format(x), g.format(y)));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("Ulam = f(y)⁻¹·middle·f(y) on {pairs} pairs across {} maps", catalog().len()))
}

fn criterion_5() -> Outcome {
    let f = uv();
    let mut norms = Vec::new();
    for k in 1..=10usize {
        let y = Element::Word(w(&format!("baa{}", "bbabb".repeat(k))));
        let expected = w(&format!("{}aabaa{}", "BBABB".repeat(k), "bbabb".repeat(k)));
        match pair_defect(&f, &Element::Word(w("aa")), &y, DefectClass::Ulam, 8).map_err(|e| e.to_string())? {
            PairDefect::Element { value: Element::Word(d), norm } if d == expected && norm == 5 + 10 * k as u64 => {
                norms.push(norm)
            }
            other => return Err(format!("k = {k}: {other:?}")),
        }
    }
    Ok(format!("D(aa, baa·vᵏ) = v⁻ᵏuvᵏ with norms {norms:?}"))
}

fn criterion_6() -> Outcome {
    let en = exhaustive(4);
    let mut lines = Vec::new();
    let composites = [
        ("brooks(ab)∘f_uv", QMap::compose(brooks("ab"), uv()).unwrap()),
        ("f_uv∘f_uv", QMap::compose(uv(), uv()).unwrap()),
        ("hom_s3∘perturbation", QMap::compose(hom_s3(), point_perturbation()).unwrap()),
    ];
    for (name, c) in composites {
        let r = composition_containment(&c, &en, opts()).map_err(|e| e.to_string())?;
        if !r.passed {
            return Err(format!("{name}: {:?}", r.witness));
        }
        lines.push(format!("{name} ({} pairs)", r.pairs));
    }
    let products = [
        ("brooks(ab)×brooks(ba)", QMap::product(vec![brooks("ab"), brooks("ba")]).unwrap()),
        ("f_uv×brooks(ab)", QMap::product(vec![uv(), brooks("ab")]).unwrap()),
        ("hom_s3×hom_lift", QMap::product(vec![hom_s3(), heis_lift(1)]).unwrap()),
    ];
    for (name, p) in products {
        let r = product_factorization(&p, &en, opts()).map_err(|e| e.to_string())?;
        if !r.passed {
            return Err(format!("{name}: {:?}", r.witness));
        }
        lines.push(format!("{name} ({} pairs)", r.pairs));
    }
    Ok(lines.join(", "))
}

fn criterion_7() -> Outcome {
    let catalog = [
        ("brooks(ab)", brooks("ab")),
        ("hom F2→S3", hom_s3()),
        ("hom_lift", heis_lift(1)),
        ("central_perturbation", perturbed_lift()),
        ("section into Q8", q8_section()),
        ("Z/8 section composite", z8_section()),
        ("product", QMap::product(vec![brooks("ab"), brooks("ba")]).unwrap()),
    ];
    let mut names = Vec::new();
    for (name, f) in catalog {
        let a = identity_audit(&f, &exhaustive(4), opts()).map_err(|e| e.to_string())?;
        if !a.passed {
            let failed: Vec<_> = a.checks.iter().filter(|c| !c.passed).map(|c| (c.name, c.witness.clone())).collect();
            return Err(format!("{name}: {failed:?}"));
        }
        names.push(name);
    }
    Ok(format!("ε, inverse, conjugation and quasi-action identities hold for {}", names.join(", ")))
}

fn carry(n: u64, fiber: Group) -> Group {
    build_extension(fiber, Group::cyclic(n), CocycleRule::Carry { modulus: n }).unwrap()
}

fn criterion_8() -> Outcome {
    let mut cases = vec![(Group::heisenberg(1).unwrap(), 4, 2), (Group::heisenberg(2).unwrap(), 4, 1)];
    for n in [2u64, 3, 4] {
        cases.push((carry(n, Group::cyclic(n)), 4, 4));
        cases.push((carry(n, Group::integers()), 4, 3));
    }
    let mut checked = 0;
    for (e, radius, pair_radius) in &cases {
        let c = e.as_extension().unwrap();
        let elems = if e.is_finite() { e.enumerate_all().unwrap() } else { e.enumerate_ball(*radius).unwrap().elements };
        for b in &elems {
            let Element::Pair { fiber, base } = b else { unreachable!() };
            let q = c.fiber_part(&e.multiply(&e.invert(b).unwrap(), &c.section(base)).unwrap()).unwrap();
            if q != c.fiber().invert(&Element::Vector(fiber.clone())).unwrap() {
                return Err(format!("{e}: q({}) = {q:?}", e.format(b)));
            }
        }
        let audit = quasi_split_roundtrip(e, *radius, *pair_radius).map_err(|x| x.to_string())?;
        if !(audit.q_formula && audit.left_inverse && audit.right_inverse) {
            return Err(format!("{e}: {:?}", audit.failures));
        }
        checked += audit.elements_checked;
    }
    Ok(format!("q = −a, F′∘F = id, F∘F′ = id on {} extensions ({checked} elements)", cases.len()))
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    for n in [2u64, 3, 4] {
        let e = carry(n, Group::integers());
        let base = Group::cyclic(n);
        let s = QMap::section_lift(e.clone(), QMap::identity(base).unwrap()).unwrap();
        let r = defect_set(&s, &exhaustive(n as u32), DefectClass::Ulam, opts()).map_err(|x| x.to_string())?;
        let oracle: BTreeSet<String> = (0..n)
            .flat_map(|x| (0..n).map(move |y| format!("<{};0>", -i64::from(x + y >= n))))
            .collect();
        let got: BTreeSet<String> = r.defects.iter().cloned().collect();
        if got.len() > 2 || got != oracle {
            return Err(format!("carry {n}: {got:?} vs {oracle:?}"));
        }
        parts.push(format!("carry {n}: {}", got.len()));
    }
    let h = Group::heisenberg(1).unwrap();
    let z2 = Group::free_abelian(2);
    let s = QMap::section_lift(h, QMap::identity(z2).unwrap()).unwrap();
    let r = defect_set(&s, &exhaustive(8), DefectClass::Ulam, opts()).map_err(|x| x.to_string())?;
    let mut norms = Vec::new();
    for radius in [2u32, 4, 6, 8] {
        let row = r.radius_table.iter().find(|row| row.radius == radius).ok_or("missing row")?;
        let oracle = {
            let mut m = 0i64;
            let rr = i64::from(radius);
            for x1 in -rr..=rr {
                for x2 in -(rr - x1.abs())..=(rr - x1.abs()) {
                    for y1 in -rr..=rr {
                        let y2 = rr - y1.abs();
                        m = m.max((x1 * y2 - x2 * y1).abs());
                    }
                }
            }
            (m as f64).sqrt().ceil() as u64
        };
        if row.max_norm != Some(oracle) || row.witness.is_none() {
            return Err(format!("radius {radius}: {:?} vs {oracle}", row.max_norm));
        }
        norms.push(oracle);
    }
    if !norms.windows(2).all(|p| p[0] < p[1]) {
        return Err(format!("norms {norms:?} not increasing"));
    }
    Ok(format!("{}; symplectic section max norms {norms:?} at radii 2,4,6,8", parts.join(", ")))
}

fn criterion_10() -> Outcome {
    let f1 = heis_lift(1);
    let f2m = perturbed_lift();
    let g = f1.domain().clone();
    let h = f1.target().clone();
    let c = h.as_extension().unwrap();
    let ball = g.enumerate_ball(4).unwrap().elements;
    let delta = lift_difference(f1.clone(), f2m.clone(), &ball).map_err(|e| e.to_string())?;
    for x in &ball {
        let oracle = brooks_oracle("ab", &g.format(x));
        if delta.evaluate(x).unwrap() != Element::integer(oracle) {
            return Err(format!("δ({}) differs", g.format(x)));
        }
    }
    let mut psi_defects = BTreeSet::new();
    for x in &ball {
        for y in &ball {
            let xy = g.multiply(x, y).unwrap();
            let d = brooks_oracle("ab", &g.format(&xy)) - brooks_oracle("ab", &g.format(x)) - brooks_oracle("ab", &g.format(y));
            psi_defects.insert(-d);
        }
    }
    let r = defect_set(&f2m, &exhaustive(4), DefectClass::Ulam, opts()).map_err(|e| e.to_string())?;
    let gens = h.generators();
    let mut fibers = BTreeSet::new();
    for d in &r.elements {
        if c.project(d).unwrap() != c.base().identity()
            || gens.iter().any(|s| h.multiply(d, s).unwrap() != h.multiply(s, d).unwrap())
        {
            return Err(format!("{} is not central", h.format(d)));
        }
        fibers.insert(c.fiber_part(d).unwrap().as_integer().unwrap());
    }
    if fibers != psi_defects {
        return Err(format!("fiber coordinates {fibers:?} vs −D(ψ) {psi_defects:?}"));
    }
    Ok(format!("δ = Brooks(ab) on {} elements; D(f₂) central with fibers {fibers:?} = −D(ψ)", ball.len()))
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (name, f, is_hom) in [("hom F2→S3", hom_s3(), true), ("Z/8 section composite", z8_section(), false), ("section into Q8", q8_section(), false)] {
        let r = constructibility_decompose(&f, &exhaustive(4), opts()).map_err(|e| e.to_string())?;
        let ok = r.delta_o_central && r.defects_o_within_delta_o && r.quotient_homomorphism && r.values_normalize;
        if !ok {
            return Err(format!("{name}: {}", r.status));
        }
        if is_hom && (r.delta.len() != 1 || !r.projected_equals_f) {
            return Err(format!("{name}: Δ = {:?}", r.delta));
        }
        parts.push(format!("{name}: |Δ| = {}, |H_o/Δ_o| = {}", r.delta.len(), r.quotient.len()));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(parts.join("; "))
}

fn criterion_12() -> Outcome {
    let f = point_perturbation();
    let g = f2();
    let x0 = w("ab");
    let a = w("aba").inverse().multiply(&x0);
    let ball = g.enumerate_ball(8).unwrap();
    let mut best = vec![0usize; 9];
    for (y, &depth) in ball.elements.iter().zip(&ball.depths) {
        let yw = y.as_word().unwrap();
        if yw.len() == 0 || *yw == x0 {
            continue;
        }
        let fy = f.evaluate(y).unwrap();
        let x0y = Element::Word(x0.multiply(yw));
        let d = ulam_defect(&g, &f.evaluate(&Element::Word(x0.clone())).unwrap(), &fy, &f.evaluate(&x0y).unwrap()).unwrap();
        let expected = Element::Word(yw.inverse().multiply(&a).multiply(yw));
        if d != expected {
            return Err(format!("D(ab, {yw}) = {}", g.format(&d)));
        }
        let n = expected.as_word().unwrap().len();
        best[depth as usize] = best[depth as usize].max(n);
    }
    let mut norms = Vec::new();
    let mut acc = 0;
    for (r, b) in best.iter().enumerate() {
        acc = acc.max(*b);
        if r >= 2 {
            norms.push(acc);
        }
    }
    if !norms.windows(2).all(|p| p[0] < p[1]) {
        return Err(format!("norms {norms:?}"));
    }
    let spec: ExperimentSpec = serde_json::from_str(r#"{"name":"perturbation_rigidity"}"#).unwrap();
    let report = run(&spec, RunOptions::default()).map_err(|e| e.to_string())?;
    if !report.pass {
        return Err(format!("{:?}", report.assertions));
    }
    Ok(format!("D(ab, y) = y⁻¹·{a}·y; max norms {norms:?} at radii 2..8"))
}

fn criterion_13() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for p in &files {
        let spec = qhom_cli::load_experiment(p).map_err(|e| e.to_string())?;
        let a = run(&spec, RunOptions::default()).map_err(|e| e.to_string())?.to_json();
        let b = run(&spec, RunOptions::default()).map_err(|e| e.to_string())?.to_json();
        if a != b {
            return Err(format!("{} differs between runs", p.display()));
        }
    }
    Ok(format!("{} shipped experiment reports are byte-identical across runs", files.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("middle-defect bound", criterion_1),
        ("fixed points", criterion_2),
        ("Brooks identity", criterion_3),
        ("Ulam/middle conjugation", criterion_4),
        ("Ulam witness growth", criterion_5),
        ("composition/product containments", criterion_6),
        ("defect identities", criterion_7),
        ("quasi-split round trip", criterion_8),
        ("bounded vs unbounded cocycle", criterion_9),
        ("lift difference", criterion_10),
        ("constructibility pipeline", criterion_11),
        ("perturbation rigidity", criterion_12),
        ("determinism", criterion_13),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.2}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

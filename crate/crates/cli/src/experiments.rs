//! The experiment catalog and the report format.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use qhom::defect::{
    defect_set, hs_probe, pair_defect, ulam_defect, DefectClass, PairDefect, PairEnumeration,
    ScanOptions,
};
use qhom::groups::{Element, Group};
use qhom::qhom::{lift_difference, Evaluate, QMap};
use qhom::structure::{constructibility_decompose, quasi_split_roundtrip};

use crate::error::{running, CliError, Result};
use crate::spec::{
    build_group, build_map, Decompose, DefectScan, Experiment, ExperimentSpec, GroupSpec, Growth, HeisenbergLift,
    HsProbe, MapSpec, MiddleVsUlam, PerturbationRigidity, QuasisplitAudit,
};

pub const REPORT_SCHEMA: &str = "qh-report/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub experiment: &'static str,
    pub spec: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub timing: bool,
    pub scan: ScanOptions,
}

struct Outcome {
    results: Value,
    assertions: Vec<Assertion>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn run(spec: &ExperimentSpec, options: RunOptions) -> Result<Report> {
    let experiment = spec.experiment()?;
    let start = Instant::now();
    let opts = options.scan;
    let out = match &experiment {
        Experiment::MiddleVsUlam(p) => middle_vs_ulam(p, opts)?,
        Experiment::PerturbationRigidity(p) => perturbation_rigidity(p)?,
        Experiment::HeisenbergLift(p) => heisenberg_lift(p, opts)?,
        Experiment::QuasisplitAudit(p) => quasisplit_audit(p, opts)?,
        Experiment::Decompose(p) => decompose(p, opts)?,
        Experiment::DefectScan(p) => defect_scan(p, opts)?,
        Experiment::HsProbe(p) => probe(p, opts)?,
    };
    let pass = out.assertions.iter().all(|a| a.passed);
    Ok(Report {
        schema: REPORT_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: spec.name.as_str(),
        spec: to_value(spec),
        timing: options.timing.then(|| Timing {
            elapsed_ms: start.elapsed().as_millis(),
        }),
        results: out.results,
        assertions: out.assertions,
        pass,
    })
}

/// Builds every group and map named by the spec without running scans.
pub fn check(spec: &ExperimentSpec) -> Result<()> {
    match spec.experiment()? {
        Experiment::MiddleVsUlam(p) => {
            let f = middle_map(&p)?;
            let g = f.domain();
            for (k, s) in [("x", &p.x), ("y", &p.y)] {
                g.parse(s).map_err(crate::error::building(&format!("/parameters/{k}")))?;
            }
        }
        Experiment::PerturbationRigidity(p) => {
            rigidity_map(&p)?;
        }
        Experiment::HeisenbergLift(p) => {
            heisenberg_maps(&p)?;
        }
        Experiment::QuasisplitAudit(p) => {
            extension_of(&p.extension)?;
        }
        Experiment::Decompose(p) => {
            build_map(&p.map, "/parameters/map")?;
        }
        Experiment::DefectScan(p) => {
            build_map(&p.map, "/parameters/map")?;
        }
        Experiment::HsProbe(p) => {
            let f = build_map(&p.map, "/parameters/map")?;
            if f.target().free_rank().is_none() {
                return Err(CliError::spec("/parameters/map", "probes need a map into a free group"));
            }
        }
    }
    Ok(())
}

fn free2() -> GroupSpec {
    GroupSpec::Free { rank: 2 }
}

fn middle_map(p: &MiddleVsUlam) -> Result<QMap> {
    build_map(
        &MapSpec::MiddleUv {
            domain: free2(),
            u: p.u.clone(),
            v: p.v.clone(),
        },
        "/parameters",
    )
}

fn middle_vs_ulam(p: &MiddleVsUlam, opts: ScanOptions) -> Result<Outcome> {
    let f = middle_map(p)?;
    let g = f.domain().clone();
    let word = |s: &str| g.parse(s).map_err(running);
    let (u, v) = (word(&p.u)?, word(&p.v)?);
    let l = g.norm(&u).map_err(running)?.max(g.norm(&v).map_err(running)?);
    let bound = 3 * l * l;

    let middle = defect_set(&f, &PairEnumeration::Exhaustive { radius: p.radius }, DefectClass::Middle, opts)
        .map_err(running)?;
    let ulam = defect_set(&f, &PairEnumeration::Exhaustive { radius: p.ulam_radius }, DefectClass::Ulam, opts)
        .map_err(running)?;

    let x = word(&p.x)?;
    let y0 = word(&p.y)?;
    let ulam_at = |y: &Element| -> Result<(Element, u64)> {
        match pair_defect(&f, &x, y, DefectClass::Ulam, opts.rho).map_err(running)? {
            PairDefect::Element { value, norm } => Ok((value, norm)),
            other => Err(CliError::Runtime(format!("unexpected defect shape {other:?}"))),
        }
    };
    let (d0, _) = ulam_at(&y0)?;
    let v_inv = g.invert(&v).map_err(running)?;
    let mut rows = Vec::new();
    let mut conjugates = true;
    let mut norms = Vec::new();
    for k in 0..=p.k_max {
        let vk = g.pow(&v, i64::from(k)).map_err(running)?;
        let vk_inv = g.pow(&v_inv, i64::from(k)).map_err(running)?;
        let yk = g.multiply(&y0, &vk).map_err(running)?;
        let (dk, norm) = ulam_at(&yk)?;
        let expected = g.multiply_all([&vk_inv, &d0, &vk]).map_err(running)?;
        let matches = dk == expected;
        if k >= 1 {
            conjugates &= matches;
            norms.push(norm);
        }
        rows.push(json!({
            "k": k,
            "y": g.format(&yk),
            "defect": g.format(&dk),
            "norm": norm,
            "equals_conjugate": matches,
        }));
    }
    let increasing = norms.windows(2).all(|w| w[0] < w[1]);
    let max_middle = middle.max_norm.unwrap_or(0);
    Ok(Outcome {
        results: json!({
            "map": f.describe(),
            "bound": bound,
            "middle": to_value(&middle),
            "ulam": to_value(&ulam),
            "ulam_note": ulam.stability_note(),
            "witness_family": {
                "x": g.format(&x),
                "base_defect": g.format(&d0),
                "rows": rows,
            },
        }),
        assertions: vec![
            Assertion::new(
                "middle_bound",
                max_middle <= bound,
                format!("max middle defect norm {max_middle} vs 3L² = {bound} over {} pairs", middle.pairs),
            ),
            Assertion::new(
                "witness_conjugates",
                conjugates,
                format!("defect at (x, y·vᵏ) equals v⁻ᵏ·{}·vᵏ for k = 1..{}", g.format(&d0), p.k_max),
            ),
            Assertion::new("witness_norms_increase", increasing, format!("norms {norms:?}")),
        ],
    })
}

fn rigidity_map(p: &PerturbationRigidity) -> Result<QMap> {
    let mut overrides = std::collections::BTreeMap::new();
    overrides.insert(p.point.clone(), p.image.clone());
    build_map(
        &MapSpec::PointPerturbation {
            base: Box::new(MapSpec::Identity { group: free2() }),
            overrides,
        },
        "/parameters",
    )
}

fn perturbation_rigidity(p: &PerturbationRigidity) -> Result<Outcome> {
    let f = rigidity_map(p)?;
    let g = f.domain().clone();
    let x0 = g.parse(&p.point).map_err(running)?;
    let fx0 = f.evaluate(&x0).map_err(running)?;
    // generic defects at (x₀, y) are y⁻¹·a·y
    let a = g.multiply(&g.invert(&fx0).map_err(running)?, &x0).map_err(running)?;
    let mut radii = p.radii.clone();
    radii.sort_unstable();
    radii.dedup();
    let top = radii.last().copied().unwrap_or(0);
    let ball = g.enumerate_ball(top).map_err(running)?;
    let mut max_at = vec![(0u64, None::<String>); top as usize + 1];
    let mut exceptions = Vec::new();
    let mut mismatches = Vec::new();
    let mut generic = 0usize;
    for (y, &depth) in ball.elements.iter().zip(&ball.depths) {
        let fy = f.evaluate(y).map_err(running)?;
        let x0y = g.multiply(&x0, y).map_err(running)?;
        let fx0y = f.evaluate(&x0y).map_err(running)?;
        let d = ulam_defect(&g, &fx0, &fy, &fx0y).map_err(running)?;
        let norm = g.norm(&d).map_err(running)?;
        let slot = &mut max_at[depth as usize];
        if norm > slot.0 {
            *slot = (norm, Some(g.format(y)));
        }
        if fy == *y && fx0y == x0y {
            generic += 1;
            let expected = g.conjugate(y, &a).map_err(running)?;
            if d != expected {
                mismatches.push(g.format(y));
            }
        } else {
            exceptions.push(json!({"y": g.format(y), "defect": g.format(&d)}));
        }
    }
    let mut rows = Vec::new();
    let mut best = (0u64, None::<String>);
    let mut norms = Vec::new();
    for r in 0..=top {
        if max_at[r as usize].0 > best.0 {
            best = max_at[r as usize].clone();
        }
        if radii.contains(&r) {
            norms.push(best.0);
            rows.push(json!({"radius": r, "max_norm": best.0, "witness_y": best.1}));
        }
    }
    let strict = norms.windows(2).all(|w| w[0] < w[1]);
    mismatches.truncate(16);
    Ok(Outcome {
        results: json!({
            "map": f.describe(),
            "point": g.format(&x0),
            "conjugated": g.format(&a),
            "generic_pairs": generic,
            "exceptions": exceptions,
            "mismatches": mismatches,
            "radius_table": rows,
        }),
        assertions: vec![
            Assertion::new(
                "conjugation_formula",
                mismatches.is_empty(),
                format!("D(x₀, y) = y⁻¹·{}·y on {generic} generic pairs", g.format(&a)),
            ),
            Assertion::new("strict_growth", strict, format!("max norms {norms:?} at radii {radii:?}")),
        ],
    })
}

fn heisenberg_maps(p: &HeisenbergLift) -> Result<(QMap, QMap, QMap)> {
    let rank = 2 * p.n;
    let domain = GroupSpec::Free { rank };
    let extension = GroupSpec::Heisenberg { n: p.n };
    let base_images = (0..rank)
        .map(|i| {
            let v: Vec<String> = (0..rank).map(|j| if i == j { "1".into() } else { "0".into() }).collect();
            format!("({})", v.join(","))
        })
        .collect();
    let lift = MapSpec::HomLift {
        domain: domain.clone(),
        extension,
        base_images,
    };
    let psi = MapSpec::Brooks {
        domain,
        word: p.psi_word.clone(),
    };
    let f1 = build_map(&lift, "/parameters")?;
    let psi = build_map(&psi, "/parameters/psi_word")?;
    let f2 = QMap::central_perturbation(f1.clone(), psi.clone()).map_err(running)?;
    Ok((f1, f2, psi))
}

fn heisenberg_lift(p: &HeisenbergLift, opts: ScanOptions) -> Result<Outcome> {
    let (f1, f2, psi) = heisenberg_maps(p)?;
    let (g, h) = (f1.domain().clone(), f1.target().clone());
    let cocycle = h.as_extension().expect("heisenberg");
    let en = PairEnumeration::Exhaustive { radius: p.radius };
    let sample = g.enumerate_ball(p.radius).map_err(running)?.elements;
    let delta = lift_difference(f1.clone(), f2.clone(), &sample).map_err(running)?;
    let mut diff_witness = None;
    for x in &sample {
        if delta.evaluate(x).map_err(running)? != psi.evaluate(x).map_err(running)? {
            diff_witness = Some(g.format(x));
            break;
        }
    }
    let d1 = defect_set(&f1, &en, DefectClass::Ulam, opts).map_err(running)?;
    let d2 = defect_set(&f2, &en, DefectClass::Ulam, opts).map_err(running)?;
    let dpsi = defect_set(&psi, &en, DefectClass::Ulam, opts).map_err(running)?;
    let gens = h.generators();
    let mut central = true;
    let mut fibers = BTreeSet::new();
    for d in &d2.elements {
        for s in &gens {
            central &= h.multiply(d, s).map_err(running)? == h.multiply(s, d).map_err(running)?;
        }
        central &= cocycle.project(d).map_err(running)? == cocycle.base().identity();
        fibers.insert(cocycle.fiber_part(d).map_err(running)?);
    }
    let z = cocycle.fiber();
    let neg: BTreeSet<Element> = dpsi.elements.iter().map(|e| z.invert(e)).collect::<Result<_, _>>().map_err(running)?;
    let fiber_text: Vec<String> = fibers.iter().map(|e| z.format(e)).collect();
    let neg_text: Vec<String> = neg.iter().map(|e| z.format(e)).collect();
    Ok(Outcome {
        results: json!({
            "lift": f1.describe(),
            "perturbed": f2.describe(),
            "psi": psi.describe(),
            "sample": sample.len(),
            "lift_defects": d1.defects,
            "perturbed_defects": to_value(&d2),
            "psi_defects": dpsi.defects,
            "fiber_coordinates": fiber_text,
            "negated_psi_defects": neg_text,
            "difference_witness": diff_witness,
        }),
        assertions: vec![
            Assertion::new(
                "lift_is_homomorphism",
                d1.elements == vec![h.identity()],
                format!("D(f₁) = {:?}", d1.defects),
            ),
            Assertion::new(
                "difference_equals_psi",
                diff_witness.is_none(),
                format!("δ = f₂·f₁⁻¹ agrees with {} on {} elements", psi.describe(), sample.len()),
            ),
            Assertion::new("perturbed_defects_central", central, format!("{} defects", d2.elements.len())),
            Assertion::new(
                "fiber_coordinates_are_negated_psi_defects",
                fibers == neg,
                format!("{fiber_text:?} vs {neg_text:?}"),
            ),
        ],
    })
}

fn extension_of(spec: &GroupSpec) -> Result<Group> {
    let e = build_group(spec, "/parameters/extension")?;
    if e.as_extension().is_none() {
        return Err(CliError::spec("/parameters/extension", format!("{e} is not a central extension")));
    }
    Ok(e)
}

fn quasisplit_audit(p: &QuasisplitAudit, opts: ScanOptions) -> Result<Outcome> {
    let e = extension_of(&p.extension)?;
    let cocycle = e.as_extension().expect("checked");
    let audit = quasi_split_roundtrip(&e, p.radius, p.pair_radius).map_err(running)?;
    let base = cocycle.base().clone();
    let section = QMap::section_lift(e.clone(), QMap::identity(base).map_err(running)?).map_err(running)?;
    let mut radii = p.section_radii.clone();
    radii.sort_unstable();
    radii.dedup();
    let top = radii.last().copied().unwrap_or(0);
    let rep = defect_set(&section, &PairEnumeration::Exhaustive { radius: top }, DefectClass::Ulam, opts)
        .map_err(running)?;
    let rows: Vec<_> = radii
        .iter()
        .map(|&r| {
            rep.radius_table
                .iter()
                .rev()
                .find(|row| row.radius <= r)
                .map(|row| (r, row.distinct, row.max_norm.unwrap_or(0), row.witness.clone()))
                .unwrap_or((r, 0, 0, None))
        })
        .collect();
    let mut assertions = vec![
        Assertion::new("q_formula", audit.q_formula, "q((a, c)) = −a"),
        Assertion::new("left_inverse", audit.left_inverse, "F′∘F = id"),
        Assertion::new("right_inverse", audit.right_inverse, "F∘F′ = id"),
        Assertion::new(
            "defect_in_cocycle_image",
            audit.defect_in_cocycle_image,
            format!("{} pairs", audit.pairs_checked),
        ),
    ];
    match p.expect {
        Some(Growth::Bounded) => {
            let n = rows.len();
            let ok = n >= 2 && rows[n - 1].1 == rows[n - 2].1;
            let counts: Vec<usize> = rows.iter().map(|r| r.1).collect();
            assertions.push(Assertion::new("section_defects_bounded", ok, format!("distinct counts {counts:?}")));
        }
        Some(Growth::Unbounded) => {
            let norms: Vec<u64> = rows.iter().map(|r| r.2).collect();
            let ok = norms.len() >= 2 && norms.windows(2).all(|w| w[0] < w[1]);
            assertions.push(Assertion::new("section_defects_grow", ok, format!("max norms {norms:?}")));
        }
        None => {}
    }
    Ok(Outcome {
        results: json!({
            "audit": to_value(&audit),
            "section": {
                "map": section.describe(),
                "defects": rep.defects,
                "note": rep.stability_note(),
                "rows": rows.iter().map(|(r, d, m, w)| json!({"radius": r, "distinct": d, "max_norm": m, "witness": w})).collect::<Vec<_>>(),
            },
        }),
        assertions,
    })
}

fn decompose(p: &Decompose, opts: ScanOptions) -> Result<Outcome> {
    let f = build_map(&p.map, "/parameters/map")?;
    let rep = constructibility_decompose(&f, &PairEnumeration::Exhaustive { radius: p.radius }, opts)
        .map_err(running)?;
    let assertions = vec![
        Assertion::new("values_normalize", rep.values_normalize, "f-values lie in N_H(Δ)"),
        Assertion::new("delta_o_central", rep.delta_o_central, "Δ_{f_o} is central in H_o"),
        Assertion::new("defects_within_delta_o", rep.defects_o_within_delta_o, "D(f_o) ⊆ Δ_{f_o}"),
        Assertion::new(
            "quotient_homomorphism",
            rep.quotient_homomorphism,
            "H_o → H_o/Δ_{f_o} composed with f_o has trivial defect",
        ),
    ];
    Ok(Outcome {
        results: to_value(&rep),
        assertions,
    })
}

fn defect_scan(p: &DefectScan, opts: ScanOptions) -> Result<Outcome> {
    let f = build_map(&p.map, "/parameters/map")?;
    let opts = ScanOptions {
        rho: p.rho.unwrap_or(opts.rho),
        ..opts
    };
    let rep = defect_set(&f, &p.enumeration, p.class, opts).map_err(running)?;
    let mut assertions = Vec::new();
    if let Some(b) = p.max_norm_at_most {
        let m = rep.max_norm;
        assertions.push(Assertion::new(
            "max_norm_at_most",
            m.is_some_and(|m| m <= b) && rep.exceeded == 0,
            format!("max norm {m:?} vs {b}"),
        ));
    }
    let note = rep.stability_note();
    let mut results = to_value(&rep);
    results["note"] = Value::String(note);
    Ok(Outcome { results, assertions })
}

fn probe(p: &HsProbe, opts: ScanOptions) -> Result<Outcome> {
    let f = build_map(&p.map, "/parameters/map")?;
    let rep = hs_probe(&f, p.k, &PairEnumeration::Exhaustive { radius: p.radius }, opts).map_err(running)?;
    Ok(Outcome {
        results: to_value(&rep),
        assertions: Vec::new(),
    })
}

//! JSON schemas for groups, maps and experiments, and their construction.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qhom::defect::{DefectClass, PairEnumeration};
use qhom::groups::{build_extension, CocycleRule, Element, Group};
use qhom::qhom::{Evaluate, MapError, Projection, QMap};
use qhom::structure::{closure, FiniteGroupView};
use qhom::words::Word;

use crate::error::{building, CliError, Diagnostic, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Free {
        rank: usize,
    },
    FreeAbelian {
        rank: usize,
    },
    Cyclic {
        order: u64,
    },
    /// `ℤ/m₁ × … × ℤ/mₖ`, with `0` standing for `ℤ`.
    Abelian {
        orders: Vec<u64>,
    },
    FinitePerm {
        degree: usize,
        /// One-line image arrays.
        generators: Vec<Vec<u32>>,
    },
    FiniteTable {
        table: Vec<Vec<u32>>,
        #[serde(default)]
        generators: Option<Vec<u32>>,
    },
    Product {
        factors: Vec<GroupSpec>,
    },
    Extension {
        fiber: Box<GroupSpec>,
        base: Box<GroupSpec>,
        cocycle: CocycleSpec,
    },
    Heisenberg {
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleSpec {
    Symplectic { n: usize },
    Carry { modulus: u64 },
    Table { entries: Vec<CocycleEntry> },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleEntry {
    pub x: String,
    pub y: String,
    pub value: Vec<i64>,
}

fn free2() -> GroupSpec {
    GroupSpec::Free { rank: 2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    GeneratorHom {
        domain: GroupSpec,
        target: GroupSpec,
        images: Vec<String>,
    },
    Identity {
        group: GroupSpec,
    },
    PointTable {
        domain: GroupSpec,
        target: GroupSpec,
        table: BTreeMap<String, String>,
    },
    Brooks {
        #[serde(default = "free2")]
        domain: GroupSpec,
        word: String,
    },
    MiddleUv {
        #[serde(default = "free2")]
        domain: GroupSpec,
        u: String,
        v: String,
    },
    SectionLift {
        extension: GroupSpec,
        inner: Box<MapSpec>,
    },
    HomLift {
        domain: GroupSpec,
        extension: GroupSpec,
        base_images: Vec<String>,
    },
    CentralPerturbation {
        base: Box<MapSpec>,
        psi: Box<MapSpec>,
    },
    Product {
        factors: Vec<MapSpec>,
    },
    Compose {
        outer: Box<MapSpec>,
        inner: Box<MapSpec>,
    },
    PostProject {
        inner: Box<MapSpec>,
        projection: ProjectionSpec,
    },
    PointPerturbation {
        base: Box<MapSpec>,
        overrides: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectionSpec {
    /// Nearest point in the subgroup generated by `generators` of a finite
    /// target.
    Nearest { generators: Vec<String> },
    /// `k·hᵢ ↦ k` for the listed kernel elements and coset representatives.
    CosetRetraction {
        kernel: Vec<String>,
        representatives: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    MiddleVsUlam,
    PerturbationRigidity,
    HeisenbergLift,
    QuasisplitAudit,
    Decompose,
    DefectScan,
    HsProbe,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::MiddleVsUlam => "middle_vs_ulam",
            ExperimentName::PerturbationRigidity => "perturbation_rigidity",
            ExperimentName::HeisenbergLift => "heisenberg_lift",
            ExperimentName::QuasisplitAudit => "quasisplit_audit",
            ExperimentName::Decompose => "decompose",
            ExperimentName::DefectScan => "defect_scan",
            ExperimentName::HsProbe => "hs_probe",
        }
    }
}

/// Top-level experiment file. `parameters` is checked against the schema of
/// the named experiment in a second pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    #[serde(default = "empty_object")]
    pub parameters: Value,
    #[serde(default)]
    pub output: Option<String>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn default_u() -> String {
    "aabaa".into()
}
fn default_v() -> String {
    "bbabb".into()
}
fn default_x() -> String {
    "aa".into()
}
fn default_y() -> String {
    "baa".into()
}
fn six() -> u32 {
    6
}
fn five() -> u32 {
    5
}
fn four() -> u32 {
    4
}
fn three() -> u32 {
    3
}
fn ten() -> u32 {
    10
}
fn probe_len() -> usize {
    3
}
fn one() -> usize {
    1
}
fn ab() -> String {
    "ab".into()
}
fn aba() -> String {
    "aba".into()
}
fn radii_2_to_8() -> Vec<u32> {
    (2..=8).collect()
}
fn even_radii() -> Vec<u32> {
    vec![2, 4, 6, 8]
}
fn ulam() -> DefectClass {
    DefectClass::Ulam
}
fn exhaustive4() -> PairEnumeration {
    PairEnumeration::Exhaustive { radius: 4 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiddleVsUlam {
    #[serde(default = "default_u")]
    pub u: String,
    #[serde(default = "default_v")]
    pub v: String,
    /// Exhaustive radius of the middle-defect scan.
    #[serde(default = "six")]
    pub radius: u32,
    /// Exhaustive radius of the Ulam-defect table.
    #[serde(default = "five")]
    pub ulam_radius: u32,
    #[serde(default = "default_x")]
    pub x: String,
    #[serde(default = "default_y")]
    pub y: String,
    #[serde(default = "ten")]
    pub k_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationRigidity {
    #[serde(default = "ab")]
    pub point: String,
    #[serde(default = "aba")]
    pub image: String,
    #[serde(default = "radii_2_to_8")]
    pub radii: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergLift {
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "ab")]
    pub psi_word: String,
    #[serde(default = "four")]
    pub radius: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Distinct section defects agree at the last two radii.
    Bounded,
    /// Section defect max norm strictly increases across the radii.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasisplitAudit {
    pub extension: GroupSpec,
    #[serde(default = "four")]
    pub radius: u32,
    #[serde(default = "three")]
    pub pair_radius: u32,
    #[serde(default = "even_radii")]
    pub section_radii: Vec<u32>,
    #[serde(default)]
    pub expect: Option<Growth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decompose {
    pub map: MapSpec,
    #[serde(default = "four")]
    pub radius: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectScan {
    pub map: MapSpec,
    #[serde(default = "ulam")]
    pub class: DefectClass,
    #[serde(default = "exhaustive4")]
    pub enumeration: PairEnumeration,
    #[serde(default)]
    pub rho: Option<u32>,
    #[serde(default)]
    pub max_norm_at_most: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsProbe {
    pub map: MapSpec,
    #[serde(default = "probe_len")]
    pub k: usize,
    #[serde(default = "three")]
    pub radius: u32,
}

/// A parsed experiment with typed parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    MiddleVsUlam(MiddleVsUlam),
    PerturbationRigidity(PerturbationRigidity),
    HeisenbergLift(HeisenbergLift),
    QuasisplitAudit(QuasisplitAudit),
    Decompose(Decompose),
    DefectScan(DefectScan),
    HsProbe(HsProbe),
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Points unknown-tag and unknown-field errors at the offending key.
fn refine_pointer(root: Option<&Value>, pointer: String, message: &str) -> String {
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(field) = rest.split('`').next() {
            return format!("{pointer}/{}", field.replace('~', "~0").replace('/', "~1"));
        }
    }
    let Some(node) = root.and_then(|r| r.pointer(&pointer)) else {
        return pointer;
    };
    if let Some(obj) = node.as_object() {
        for tag in ["kind", "rule", "mode", "name"] {
            if let Some(Value::String(s)) = obj.get(tag) {
                if message.contains(&format!("unknown variant `{s}`")) {
                    return format!("{pointer}/{tag}");
                }
            }
        }
    }
    pointer
}

fn decode<T: serde::de::DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize::<_, T>(value).map_err(|e| {
        let message = e.inner().to_string();
        let local = pointer_of(e.path());
        let pointer = refine_pointer(Some(value), local, &message);
        CliError::spec(format!("{prefix}{pointer}"), message)
    })
}

/// Parses JSON text into `T`, reporting JSON pointers and line numbers.
pub fn parse_text<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    match serde_path_to_error::deserialize::<_, T>(&mut de) {
        Ok(v) => {
            de.end().map_err(|e| syntax(&e))?;
            Ok(v)
        }
        Err(e) => {
            let inner = e.inner();
            if inner.is_syntax() || inner.is_eof() {
                return Err(syntax(inner));
            }
            let message = strip_position(&inner.to_string());
            let root: Option<Value> = serde_json::from_str(text).ok();
            let pointer = refine_pointer(root.as_ref(), pointer_of(e.path()), &message);
            let mut d = Diagnostic::at(pointer, message);
            d.line = Some(inner.line());
            d.column = Some(inner.column());
            Err(CliError::Spec(vec![d]))
        }
    }
}

fn syntax(e: &serde_json::Error) -> CliError {
    let mut d = Diagnostic::at("", strip_position(&e.to_string()));
    d.line = Some(e.line());
    d.column = Some(e.column());
    CliError::Spec(vec![d])
}

fn strip_position(s: &str) -> String {
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s.to_string(),
    }
}

impl ExperimentSpec {
    pub fn experiment(&self) -> Result<Experiment> {
        let p = &self.parameters;
        const AT: &str = "/parameters";
        Ok(match self.name {
            ExperimentName::MiddleVsUlam => Experiment::MiddleVsUlam(decode(p, AT)?),
            ExperimentName::PerturbationRigidity => Experiment::PerturbationRigidity(decode(p, AT)?),
            ExperimentName::HeisenbergLift => Experiment::HeisenbergLift(decode(p, AT)?),
            ExperimentName::QuasisplitAudit => Experiment::QuasisplitAudit(decode(p, AT)?),
            ExperimentName::Decompose => Experiment::Decompose(decode(p, AT)?),
            ExperimentName::DefectScan => Experiment::DefectScan(decode(p, AT)?),
            ExperimentName::HsProbe => Experiment::HsProbe(decode(p, AT)?),
        })
    }
}

fn parse_in(g: &Group, text: &str, pointer: &str) -> Result<Element> {
    g.parse(text).map_err(building(pointer))
}

fn word_in(g: &Group, text: &str, pointer: &str) -> Result<Word> {
    match parse_in(g, text, pointer)? {
        Element::Word(w) => Ok(w),
        _ => Err(CliError::spec(pointer, format!("{g} is not a free group"))),
    }
}

pub fn build_group(spec: &GroupSpec, at: &str) -> Result<Group> {
    let err = building(at);
    Ok(match spec {
        GroupSpec::Free { rank } => Group::free(*rank).map_err(err)?,
        GroupSpec::FreeAbelian { rank } => Group::free_abelian(*rank),
        GroupSpec::Cyclic { order } => {
            if *order == 0 {
                return Err(CliError::spec(format!("{at}/order"), "order must be positive; use free_abelian for ℤ"));
            }
            Group::cyclic(*order)
        }
        GroupSpec::Abelian { orders } => Group::abelian(orders.clone()),
        GroupSpec::FinitePerm { degree, generators } => Group::permutation(*degree, generators).map_err(err)?,
        GroupSpec::FiniteTable { table, generators } => Group::table(table, generators.as_deref()).map_err(err)?,
        GroupSpec::Product { factors } => Group::product(
            factors
                .iter()
                .enumerate()
                .map(|(i, f)| build_group(f, &format!("{at}/factors/{i}")))
                .collect::<Result<_>>()?,
        ),
        GroupSpec::Extension { fiber, base, cocycle } => {
            let a = build_group(fiber, &format!("{at}/fiber"))?;
            let c = build_group(base, &format!("{at}/base"))?;
            let cat = format!("{at}/cocycle");
            let rule = match cocycle {
                CocycleSpec::Symplectic { n } => CocycleRule::Symplectic { n: *n },
                CocycleSpec::Carry { modulus } => CocycleRule::Carry { modulus: *modulus },
                CocycleSpec::Zero => CocycleRule::Zero,
                CocycleSpec::Table { entries } => {
                    let mut map = BTreeMap::new();
                    for (i, e) in entries.iter().enumerate() {
                        let ep = format!("{cat}/entries/{i}");
                        let x = parse_in(&c, &e.x, &format!("{ep}/x"))?;
                        let y = parse_in(&c, &e.y, &format!("{ep}/y"))?;
                        map.insert((x, y), e.value.clone());
                    }
                    CocycleRule::Table(map)
                }
            };
            build_extension(a, c, rule).map_err(building(&cat))?
        }
        GroupSpec::Heisenberg { n } => Group::heisenberg(*n).map_err(err)?,
    })
}

fn table_of(domain: &Group, target: &Group, t: &BTreeMap<String, String>, at: &str) -> Result<BTreeMap<Element, Element>> {
    t.iter()
        .map(|(k, v)| {
            let p = format!("{at}/{}", k.replace('~', "~0").replace('/', "~1"));
            Ok((parse_in(domain, k, &p)?, parse_in(target, v, &p)?))
        })
        .collect()
}

fn map_err(at: &str) -> impl Fn(MapError) -> CliError + '_ {
    move |e| match e {
        MapError::Overlap(w) => {
            let mut d = Diagnostic::at(at, "u and v overlap");
            d.witness = Some(format!("{} / {} share {} ({:?})", w.first, w.second, w.shared, w.kind));
            CliError::Spec(vec![d])
        }
        other => building(at)(other),
    }
}

pub fn build_map(spec: &MapSpec, at: &str) -> Result<QMap> {
    let sub = |k: &str| format!("{at}/{k}");
    let err = map_err(at);
    Ok(match spec {
        MapSpec::GeneratorHom { domain, target, images } => {
            let g = build_group(domain, &sub("domain"))?;
            let h = build_group(target, &sub("target"))?;
            let ims = images
                .iter()
                .enumerate()
                .map(|(i, s)| parse_in(&h, s, &format!("{at}/images/{i}")))
                .collect::<Result<_>>()?;
            QMap::generator_hom(g, h, ims).map_err(err)?
        }
        MapSpec::Identity { group } => QMap::identity(build_group(group, &sub("group"))?).map_err(err)?,
        MapSpec::PointTable { domain, target, table } => {
            let g = build_group(domain, &sub("domain"))?;
            let h = build_group(target, &sub("target"))?;
            let t = table_of(&g, &h, table, &sub("table"))?;
            QMap::point_table(g, h, t).map_err(err)?
        }
        MapSpec::Brooks { domain, word } => {
            let g = build_group(domain, &sub("domain"))?;
            let w = word_in(&g, word, &sub("word"))?;
            QMap::brooks(g, w).map_err(err)?
        }
        MapSpec::MiddleUv { domain, u, v } => {
            let g = build_group(domain, &sub("domain"))?;
            let u = word_in(&g, u, &sub("u"))?;
            let v = word_in(&g, v, &sub("v"))?;
            QMap::middle_uv(g, u, v).map_err(err)?
        }
        MapSpec::SectionLift { extension, inner } => {
            let e = build_group(extension, &sub("extension"))?;
            QMap::section_lift(e, build_map(inner, &sub("inner"))?).map_err(err)?
        }
        MapSpec::HomLift { domain, extension, base_images } => {
            let g = build_group(domain, &sub("domain"))?;
            let e = build_group(extension, &sub("extension"))?;
            let base = e
                .as_extension()
                .ok_or_else(|| CliError::spec(sub("extension"), "not a central extension"))?
                .base()
                .clone();
            let ims = base_images
                .iter()
                .enumerate()
                .map(|(i, s)| parse_in(&base, s, &format!("{at}/base_images/{i}")))
                .collect::<Result<_>>()?;
            QMap::hom_lift(g, e, ims).map_err(err)?
        }
        MapSpec::CentralPerturbation { base, psi } => {
            QMap::central_perturbation(build_map(base, &sub("base"))?, build_map(psi, &sub("psi"))?).map_err(err)?
        }
        MapSpec::Product { factors } => QMap::product(
            factors
                .iter()
                .enumerate()
                .map(|(i, f)| build_map(f, &format!("{at}/factors/{i}")))
                .collect::<Result<_>>()?,
        )
        .map_err(err)?,
        MapSpec::Compose { outer, inner } => {
            QMap::compose(build_map(outer, &sub("outer"))?, build_map(inner, &sub("inner"))?).map_err(err)?
        }
        MapSpec::PostProject { inner, projection } => {
            let f = build_map(inner, &sub("inner"))?;
            let h = f.target().clone();
            let pp = sub("projection");
            let proj = match projection {
                ProjectionSpec::Nearest { generators } => {
                    let view = FiniteGroupView::new(h.clone()).map_err(building(&pp))?;
                    let gens = generators
                        .iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let p = format!("{pp}/generators/{i}");
                            let x = parse_in(&h, s, &p)?;
                            view.index_of(&x).map_err(building(&p))
                        })
                        .collect::<Result<Vec<u32>>>()?;
                    let subgroup = closure(&view, &gens);
                    Projection::Nearest {
                        view: Arc::new(view),
                        subgroup,
                    }
                }
                ProjectionSpec::CosetRetraction { kernel, representatives } => {
                    let parse_all = |xs: &[String], k: &str| -> Result<Vec<Element>> {
                        xs.iter()
                            .enumerate()
                            .map(|(i, s)| parse_in(&h, s, &format!("{pp}/{k}/{i}")))
                            .collect()
                    };
                    Projection::CosetRetraction {
                        kernel: parse_all(kernel, "kernel")?.into_iter().collect(),
                        representatives: parse_all(representatives, "representatives")?,
                    }
                }
            };
            QMap::post_project(f, proj).map_err(err)?
        }
        MapSpec::PointPerturbation { base, overrides } => {
            let f = build_map(base, &sub("base"))?;
            let t = table_of(f.domain(), f.target(), overrides, &sub("overrides"))?;
            QMap::point_perturbation(f, t).map_err(err)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(text: &str) -> Group {
        build_group(&parse_text::<GroupSpec>(text).unwrap(), "").unwrap()
    }

    #[test]
    fn group_specs_build() {
        assert_eq!(group(r#"{"kind":"free","rank":2}"#).free_rank(), Some(2));
        let s3 = group(r#"{"kind":"finite_perm","degree":3,"generators":[[1,0,2],[1,2,0]]}"#);
        assert_eq!(s3.order().unwrap(), 6);
        let h = group(r#"{"kind":"extension","fiber":{"kind":"free_abelian","rank":1},"base":{"kind":"free_abelian","rank":2},"cocycle":{"rule":"symplectic","n":1}}"#);
        assert_eq!(h.multiply(&h.parse("<0;(1,0)>").unwrap(), &h.parse("<0;(0,1)>").unwrap()).unwrap(), h.parse("<1;(1,1)>").unwrap());
        let z4 = group(r#"{"kind":"finite_table","table":[[0,1,2,3],[1,2,3,0],[2,3,0,1],[3,0,1,2]]}"#);
        assert_eq!(z4.order().unwrap(), 4);
    }

    #[test]
    fn specs_round_trip_through_json() {
        let m: MapSpec = parse_text(r#"{"rule":"brooks","word":"ab"}"#).unwrap();
        assert_eq!(m, MapSpec::Brooks { domain: free2(), word: "ab".into() });
        let back: MapSpec = serde_json::from_value(serde_json::to_value(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn semantic_errors_carry_pointers() {
        let bad: MapSpec = parse_text(
            r#"{"rule":"generator_hom","domain":{"kind":"free","rank":2},"target":{"kind":"cyclic","order":3},"images":["1","7x"]}"#,
        )
        .unwrap();
        match build_map(&bad, "") {
            Err(CliError::Spec(d)) => assert_eq!(d[0].pointer, "/images/1"),
            other => panic!("{other:?}"),
        }
        let cocycle: GroupSpec = parse_text(
            r#"{"kind":"extension","fiber":{"kind":"cyclic","order":2},"base":{"kind":"cyclic","order":2},"cocycle":{"rule":"table","entries":[{"x":"0","y":"1","value":[1]}]}}"#,
        )
        .unwrap();
        match build_group(&cocycle, "/g") {
            Err(CliError::Spec(d)) => assert_eq!(d[0].pointer, "/g/cocycle"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_locate_tags_and_lines() {
        match parse_text::<GroupSpec>("{\n  \"kind\": \"torus\"\n}") {
            Err(CliError::Spec(d)) => {
                assert_eq!(d[0].pointer, "/kind");
                assert!(d[0].line.is_some());
            }
            other => panic!("{other:?}"),
        }
        let spec: ExperimentSpec = parse_text(r#"{"name":"hs_probe","parameters":{"map":{"rule":"brooks","word":"ab"},"k":"x"}}"#).unwrap();
        match spec.experiment() {
            Err(CliError::Spec(d)) => assert_eq!(d[0].pointer, "/parameters/k"),
            other => panic!("{other:?}"),
        }
    }
}

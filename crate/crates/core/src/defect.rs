//! Defects of quasihomomorphism candidates over finite pair scans.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{Ball, Element, Group, GroupError};
use crate::qhom::{brooks_value, Evaluate, MapError, QMap, Rule};
use crate::words::{words_of_length, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefectError {
    #[error("scan needs {pairs} pairs, above the cap of {cap}")]
    PairCap { pairs: u128, cap: u128 },
    #[error("subgroup ball exceeds {cap} elements")]
    BallCap { cap: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

pub type Result<T, E = DefectError> = std::result::Result<T, E>;

pub const DEFAULT_PAIR_CAP: u128 = 20_000_000;
pub const DEFAULT_SEARCH_RADIUS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectClass {
    Ulam,
    Middle,
    Geometric,
    Algebraic,
}

impl FromStr for DefectClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ulam" => Ok(DefectClass::Ulam),
            "middle" => Ok(DefectClass::Middle),
            "geometric" => Ok(DefectClass::Geometric),
            "algebraic" => Ok(DefectClass::Algebraic),
            _ => Err(format!("unknown defect class {s:?}")),
        }
    }
}

impl fmt::Display for DefectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DefectClass::Ulam => "ulam",
            DefectClass::Middle => "middle",
            DefectClass::Geometric => "geometric",
            DefectClass::Algebraic => "algebraic",
        };
        f.write_str(s)
    }
}

/// Which ordered pairs `(x, y)` a scan visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairEnumeration {
    /// Every pair from the word-metric ball of the given radius.
    Exhaustive { radius: u32 },
    /// `count` pairs of random elements of length at most `max_len`.
    Random { count: usize, max_len: u32, seed: u64 },
}

#[derive(Debug, Clone)]
enum Pairs {
    All,
    List(Vec<(u32, u32)>),
}

/// Materialized scan: the domain elements involved and the pairs to visit.
#[derive(Debug, Clone)]
pub struct PairScan {
    elements: Vec<Element>,
    depths: Vec<u32>,
    index: HashMap<Element, usize>,
    pairs: Pairs,
    radius: u32,
}

fn random_element(domain: &Group, gens: &[Element], len: u32, rng: &mut ChaCha8Rng) -> Result<Element> {
    if let Some(rank) = domain.free_rank() {
        let mut letters: Vec<Letter> = Vec::with_capacity(len as usize);
        while letters.len() < len as usize {
            let g = rng.gen_range(1..=rank);
            let l = Letter::new(g, rng.gen_bool(0.5)).map_err(MapError::from)?;
            if letters.last() == Some(&l.inverse()) {
                continue;
            }
            letters.push(l);
        }
        return Ok(Element::Word(Word::reduce(&letters)));
    }
    let mut x = domain.identity();
    for _ in 0..len {
        if gens.is_empty() {
            break;
        }
        x = domain.multiply(&x, &gens[rng.gen_range(0..gens.len())])?;
    }
    Ok(x)
}

impl PairScan {
    pub fn new(domain: &Group, enumeration: &PairEnumeration, pair_cap: u128) -> Result<Self> {
        match *enumeration {
            PairEnumeration::Exhaustive { radius } => {
                let ball = domain.enumerate_ball(radius)?;
                let n = ball.len() as u128;
                if n * n > pair_cap {
                    return Err(DefectError::PairCap {
                        pairs: n * n,
                        cap: pair_cap,
                    });
                }
                let index = ball.elements.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
                Ok(PairScan {
                    elements: ball.elements,
                    depths: ball.depths,
                    index,
                    pairs: Pairs::All,
                    radius,
                })
            }
            PairEnumeration::Random { count, max_len, seed } => {
                if count as u128 > pair_cap {
                    return Err(DefectError::PairCap {
                        pairs: count as u128,
                        cap: pair_cap,
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let gens = domain.generators();
                let mut elements = Vec::new();
                let mut index: HashMap<Element, usize> = HashMap::new();
                let mut slot = |x: Element, elements: &mut Vec<Element>| -> usize {
                    *index.entry(x.clone()).or_insert_with(|| {
                        elements.push(x);
                        elements.len() - 1
                    })
                };
                let mut list = Vec::with_capacity(count);
                for _ in 0..count {
                    let lx = rng.gen_range(0..=max_len);
                    let x = random_element(domain, &gens, lx, &mut rng)?;
                    let ly = rng.gen_range(0..=max_len);
                    let y = random_element(domain, &gens, ly, &mut rng)?;
                    let i = slot(x, &mut elements);
                    let j = slot(y, &mut elements);
                    list.push((i as u32, j as u32));
                }
                let depths = elements
                    .iter()
                    .map(|x| domain.norm(x).map(|n| n.min(u32::MAX as u64) as u32))
                    .collect::<Result<Vec<_>, _>>()?;
                let index = elements.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
                Ok(PairScan {
                    elements,
                    depths,
                    index,
                    pairs: Pairs::List(list),
                    radius: max_len,
                })
            }
        }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn depth(&self, i: usize) -> u32 {
        self.depths[i]
    }

    pub fn position(&self, x: &Element) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn pair_count(&self) -> usize {
        match &self.pairs {
            Pairs::All => self.elements.len() * self.elements.len(),
            Pairs::List(l) => l.len(),
        }
    }

    /// Radius at which a pair first appears in the scan.
    pub fn pair_radius(&self, i: usize, j: usize) -> u32 {
        self.depths[i].max(self.depths[j])
    }

    /// Parallel fold over all pairs. `merge` must be associative; results
    /// are combined in pair order.
    pub fn fold<A, I, S, M>(&self, init: I, step: S, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        S: Fn(&mut A, usize, usize) -> Result<()> + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        let n = self.elements.len();
        match &self.pairs {
            Pairs::All => (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut acc = init();
                    for j in 0..n {
                        step(&mut acc, i, j)?;
                    }
                    Ok(acc)
                })
                .try_reduce(&init, |a, b| Ok(merge(a, b))),
            Pairs::List(list) => list
                .par_chunks(1024)
                .map(|chunk| {
                    let mut acc = init();
                    for &(i, j) in chunk {
                        step(&mut acc, i as usize, j as usize)?;
                    }
                    Ok(acc)
                })
                .try_reduce(&init, |a, b| Ok(merge(a, b))),
        }
    }

    /// Sequential visit in pair order.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize) -> Result<()>) -> Result<()> {
        match &self.pairs {
            Pairs::All => {
                for i in 0..self.elements.len() {
                    for j in 0..self.elements.len() {
                        f(i, j)?;
                    }
                }
            }
            Pairs::List(list) => {
                for &(i, j) in list {
                    f(i as usize, j as usize)?;
                }
            }
        }
        Ok(())
    }
}

/// `f` evaluated on every scanned element, plus inverses of the values.
pub struct ScanValues {
    pub values: Vec<Element>,
    pub inverses: Vec<Element>,
}

pub fn evaluate_scan<F: Evaluate + ?Sized>(f: &F, scan: &PairScan) -> Result<ScanValues> {
    let values = scan
        .elements
        .par_iter()
        .map(|x| f.evaluate(x))
        .collect::<Result<Vec<_>, _>>()?;
    let inverses = values
        .par_iter()
        .map(|y| f.target().invert(y))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScanValues { values, inverses })
}

/// Outcome of one pair under one defect class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairDefect {
    /// Ulam or middle defect with its norm.
    Element { value: Element, norm: u64 },
    /// Geometric `[s₂, s₃]` or algebraic `[s₁, s₂, s₃]` factors at the
    /// least radius that admits them.
    Decomposition { radius: u32, parts: Vec<Element> },
    /// No decomposition within the search radius.
    Exceeds { cap: u32 },
}

impl PairDefect {
    pub fn norm(&self) -> Option<u64> {
        match self {
            PairDefect::Element { norm, .. } => Some(*norm),
            PairDefect::Decomposition { radius, .. } => Some(u64::from(*radius)),
            PairDefect::Exceeds { .. } => None,
        }
    }

    pub fn element(&self) -> Option<&Element> {
        match self {
            PairDefect::Element { value, .. } => Some(value),
            _ => None,
        }
    }
}

pub fn ulam_defect(target: &Group, fx: &Element, fy: &Element, fxy: &Element) -> Result<Element> {
    let inv = target.invert(&target.multiply(fx, fy)?)?;
    Ok(target.multiply(&inv, fxy)?)
}

pub fn middle_defect(target: &Group, fx: &Element, fy: &Element, fxy: &Element) -> Result<Element> {
    let left = target.left_divide(fx, fxy)?;
    Ok(target.multiply(&left, &target.invert(fy)?)?)
}

fn norm_or_max(target: &Group, x: &Element) -> u64 {
    target.norm(x).unwrap_or(u64::MAX)
}

/// Searches geometric or algebraic decompositions over `ball` (which must
/// have radius at least `rho`).
fn search_decomposition(
    target: &Group,
    class: DefectClass,
    fx: &Element,
    fy: &Element,
    fxy: &Element,
    ball: &Ball,
    rho: u32,
) -> Result<PairDefect> {
    let fy_inv = target.invert(fy)?;
    let fx_inv = target.invert(fx)?;
    for m in 0..=rho {
        let within = &ball.elements[..ball.count_within(m)];
        match class {
            DefectClass::Geometric => {
                for s2 in within {
                    // s₃ = f(y)⁻¹ s₂⁻¹ f(x)⁻¹ f(xy)
                    let s3 = target.multiply_all([&fy_inv, &target.invert(s2)?, &fx_inv, fxy])?;
                    if norm_or_max(target, &s3) <= u64::from(m) {
                        return Ok(PairDefect::Decomposition {
                            radius: m,
                            parts: vec![s2.clone(), s3],
                        });
                    }
                }
            }
            DefectClass::Algebraic => {
                for s1 in within {
                    let s1fx = target.multiply(s1, fx)?;
                    for s2 in within {
                        let prefix = target.multiply_all([&s1fx, s2, fy])?;
                        let s3 = target.left_divide(&prefix, fxy)?;
                        if norm_or_max(target, &s3) <= u64::from(m) {
                            return Ok(PairDefect::Decomposition {
                                radius: m,
                                parts: vec![s1.clone(), s2.clone(), s3],
                            });
                        }
                    }
                }
            }
            _ => unreachable!("only decomposition classes search"),
        }
    }
    Ok(PairDefect::Exceeds { cap: rho })
}

fn defect_from_values(
    target: &Group,
    class: DefectClass,
    fx: &Element,
    fy: &Element,
    fxy: &Element,
    ball: Option<&Ball>,
    rho: u32,
) -> Result<PairDefect> {
    match class {
        DefectClass::Ulam | DefectClass::Middle => {
            let value = if class == DefectClass::Ulam {
                ulam_defect(target, fx, fy, fxy)?
            } else {
                middle_defect(target, fx, fy, fxy)?
            };
            let norm = target.norm(&value)?;
            Ok(PairDefect::Element { value, norm })
        }
        _ => search_decomposition(target, class, fx, fy, fxy, ball.expect("ball prepared"), rho),
    }
}

/// Defect of `f` at `(x, y)`. Geometric and algebraic classes search
/// factors of norm at most `rho`.
pub fn pair_defect<F: Evaluate + ?Sized>(
    f: &F,
    x: &Element,
    y: &Element,
    class: DefectClass,
    rho: u32,
) -> Result<PairDefect> {
    let (g, h) = (f.domain(), f.target());
    let fx = f.evaluate(x)?;
    let fy = f.evaluate(y)?;
    let fxy = f.evaluate(&g.multiply(x, y)?)?;
    let ball = match class {
        DefectClass::Geometric | DefectClass::Algebraic => Some(h.enumerate_ball(rho)?),
        _ => None,
    };
    defect_from_values(h, class, &fx, &fy, &fxy, ball.as_ref(), rho)
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub pair_cap: u128,
    /// Search radius for geometric and algebraic decompositions.
    pub rho: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            pair_cap: DEFAULT_PAIR_CAP,
            rho: DEFAULT_SEARCH_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub x: String,
    pub y: String,
    pub defect: String,
    pub norm: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RadiusRow {
    pub radius: u32,
    /// Distinct defects among pairs with both norms at most `radius`.
    pub distinct: usize,
    pub max_norm: Option<u64>,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub class: DefectClass,
    pub map: String,
    pub enumeration: PairEnumeration,
    pub pairs: usize,
    /// Distinct defects in canonical order (text encoding).
    pub defects: Vec<String>,
    pub max_norm: Option<u64>,
    pub radius_table: Vec<RadiusRow>,
    /// Pairs with no decomposition within the search radius.
    pub exceeded: usize,
    /// Least radius from which the distinct count stays constant through
    /// the end of the scan, if that happens strictly before the last radius.
    pub stable_from: Option<u32>,
    #[serde(skip)]
    pub elements: Vec<Element>,
}

impl DefectReport {
    pub fn defect_set(&self) -> BTreeSet<Element> {
        self.elements.iter().cloned().collect()
    }

    pub fn stability_note(&self) -> String {
        match self.stable_from {
            Some(r) => format!("stable within scanned range from radius {r}"),
            None => "not stable within scanned range".into(),
        }
    }
}

type PairKey = (u32, usize, usize);

#[derive(Default)]
struct Acc {
    first: HashMap<Element, PairKey>,
    // per exact pair radius: (norm, i, j, defect)
    best: BTreeMap<u32, (u64, usize, usize, Element)>,
    exceeded: usize,
}

fn better(a: &(u64, usize, usize, Element), b: &(u64, usize, usize, Element)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2))
}

impl Acc {
    fn record(&mut self, key: PairKey, defect: Element, norm: u64) {
        let (r, i, j) = key;
        let cand = (norm, i, j, defect.clone());
        match self.best.get(&r) {
            Some(cur) if !better(&cand, cur) => {}
            _ => {
                self.best.insert(r, cand);
            }
        }
        self.first
            .entry(defect)
            .and_modify(|k| {
                if key < *k {
                    *k = key
                }
            })
            .or_insert(key);
    }

    fn merge(mut self, other: Acc) -> Acc {
        for (d, k) in other.first {
            self.first
                .entry(d)
                .and_modify(|cur| {
                    if k < *cur {
                        *cur = k
                    }
                })
                .or_insert(k);
        }
        for (r, cand) in other.best {
            match self.best.get(&r) {
                Some(cur) if !better(&cand, cur) => {}
                _ => {
                    self.best.insert(r, cand);
                }
            }
        }
        self.exceeded += other.exceeded;
        self
    }
}

/// Formats a defect: Ulam/middle elements in the target encoding,
/// decompositions as `[s₂,s₃]` or `[s₁,s₂,s₃]`.
fn format_defect(target: &Group, d: &Element) -> String {
    match d {
        Element::Tuple(parts) if !target.contains(d) => {
            format!("[{}]", target.format_all(parts).join(","))
        }
        _ => target.format(d),
    }
}

/// Scans the defect set of `f` for one class.
pub fn defect_set<F: Evaluate + ?Sized>(
    f: &F,
    enumeration: &PairEnumeration,
    class: DefectClass,
    options: ScanOptions,
) -> Result<DefectReport> {
    let scan = PairScan::new(f.domain(), enumeration, options.pair_cap)?;
    defect_set_on(f, &scan, enumeration, class, options)
}

pub fn defect_set_on<F: Evaluate + ?Sized>(
    f: &F,
    scan: &PairScan,
    enumeration: &PairEnumeration,
    class: DefectClass,
    options: ScanOptions,
) -> Result<DefectReport> {
    let (g, h) = (f.domain(), f.target());
    let vals = evaluate_scan(f, scan)?;
    let ball = match class {
        DefectClass::Geometric | DefectClass::Algebraic => Some(h.enumerate_ball(options.rho)?),
        _ => None,
    };
    let acc = scan.fold(
        Acc::default,
        |acc, i, j| {
            let xy = g.multiply(&scan.elements[i], &scan.elements[j])?;
            let fxy = match scan.position(&xy) {
                Some(k) => vals.values[k].clone(),
                None => f.evaluate(&xy)?,
            };
            let key = (scan.pair_radius(i, j), i, j);
            match class {
                DefectClass::Ulam => {
                    let d = h.multiply_all([&vals.inverses[j], &vals.inverses[i], &fxy])?;
                    let n = h.norm(&d)?;
                    acc.record(key, d, n);
                }
                DefectClass::Middle => {
                    let d = h.multiply_all([&vals.inverses[i], &fxy, &vals.inverses[j]])?;
                    let n = h.norm(&d)?;
                    acc.record(key, d, n);
                }
                _ => match search_decomposition(
                    h,
                    class,
                    &vals.values[i],
                    &vals.values[j],
                    &fxy,
                    ball.as_ref().expect("prepared"),
                    options.rho,
                )? {
                    PairDefect::Decomposition { radius, parts } => {
                        acc.record(key, Element::Tuple(parts), u64::from(radius))
                    }
                    _ => acc.exceeded += 1,
                },
            }
            Ok(())
        },
        Acc::merge,
    )?;

    let mut elements: Vec<(u64, Element)> = acc
        .first
        .keys()
        .map(|d| {
            let n = match (class, d) {
                (DefectClass::Geometric | DefectClass::Algebraic, _) => acc
                    .best
                    .values()
                    .find(|b| b.3 == *d)
                    .map(|b| b.0)
                    .unwrap_or_else(|| decomposition_radius(h, d)),
                _ => norm_or_max(h, d),
            };
            (n, d.clone())
        })
        .collect();
    elements.sort();
    let elements: Vec<Element> = elements.into_iter().map(|(_, d)| d).collect();

    let mut rows = Vec::new();
    let mut best: Option<&(u64, usize, usize, Element)> = None;
    let mut first_radii: Vec<u32> = acc.first.values().map(|k| k.0).collect();
    first_radii.sort_unstable();
    let top = scan.radius();
    for r in 0..=top {
        if let Some(cand) = acc.best.get(&r) {
            if best.is_none_or(|b| better(cand, b)) {
                best = Some(cand);
            }
        }
        rows.push(RadiusRow {
            radius: r,
            distinct: first_radii.partition_point(|&fr| fr <= r),
            max_norm: best.map(|b| b.0),
            witness: best.map(|b| Witness {
                x: g.format(&scan.elements[b.1]),
                y: g.format(&scan.elements[b.2]),
                defect: format_defect(h, &b.3),
                norm: b.0,
            }),
        });
    }
    let last = rows.last().map(|r| r.distinct);
    let stable_from = rows
        .iter()
        .position(|row| Some(row.distinct) == last)
        .map(|p| p as u32)
        .filter(|&p| p < top);

    Ok(DefectReport {
        class,
        map: describe(f),
        enumeration: *enumeration,
        pairs: scan.pair_count(),
        defects: elements.iter().map(|d| format_defect(h, d)).collect(),
        max_norm: best.map(|b| b.0),
        radius_table: rows,
        exceeded: acc.exceeded,
        stable_from,
        elements,
    })
}

fn decomposition_radius(target: &Group, d: &Element) -> u64 {
    match d {
        Element::Tuple(parts) => parts.iter().map(|p| norm_or_max(target, p)).max().unwrap_or(0),
        _ => 0,
    }
}

fn describe<F: Evaluate + ?Sized>(f: &F) -> String {
    format!("{} -> {}", f.domain(), f.target())
}

/// Products of at most `radius` elements of `D ∪ D⁻¹`.
#[derive(Debug, Clone, Serialize)]
pub struct SubgroupBall {
    #[serde(skip)]
    pub generators: Vec<Element>,
    pub radius: u32,
    #[serde(skip)]
    pub elements: Vec<Element>,
    /// `D̂ₙ₊₁ = D̂ₙ`, so the ball is the whole subgroup `⟨D⟩`.
    pub closed: bool,
}

impl SubgroupBall {
    pub fn contains(&self, x: &Element) -> bool {
        self.elements.binary_search(x).is_ok()
    }
}

fn sym_set(target: &Group, d: &[Element]) -> Result<Vec<Element>> {
    let mut s: BTreeSet<Element> = BTreeSet::new();
    for x in d {
        target.check(x)?;
        s.insert(x.clone());
        s.insert(target.invert(x)?);
    }
    Ok(s.into_iter().collect())
}

pub fn subgroup_ball(d: &[Element], target: &Group, n: u32, cap: usize) -> Result<SubgroupBall> {
    let gens = sym_set(target, d)?;
    let mut set: BTreeSet<Element> = BTreeSet::from([target.identity()]);
    let mut frontier: Vec<Element> = vec![target.identity()];
    let mut closed = false;
    for step in 0..=n {
        let mut next = Vec::new();
        for x in &frontier {
            for s in &gens {
                let y = target.multiply(x, s)?;
                if !set.contains(&y) {
                    next.push(y);
                }
            }
        }
        next.sort();
        next.dedup();
        if next.is_empty() {
            closed = true;
            break;
        }
        if step == n {
            break;
        }
        if set.len() + next.len() > cap {
            return Err(DefectError::BallCap { cap });
        }
        set.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(SubgroupBall {
        generators: d.to_vec(),
        radius: n,
        elements: set.into_iter().collect(),
        closed,
    })
}

/// Iterates products until closure; the result is `⟨D⟩`.
pub fn subgroup_closure(d: &[Element], target: &Group, cap: usize) -> Result<SubgroupBall> {
    let mut ball = subgroup_ball(d, target, u32::MAX, cap)?;
    ball.radius = ball.elements.len() as u32;
    Ok(ball)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityAudit {
    pub defects: usize,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
    pub note: Option<String>,
}

/// `{a·b : a, b ∈ D}`.
fn products(target: &Group, a: &[Element], b: &[Element]) -> Result<HashSet<Element>> {
    let mut out = HashSet::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.insert(target.multiply(x, y)?);
        }
    }
    Ok(out)
}

/// Membership in `D²D⁻¹` via `t ∈ D²D⁻¹ ⟺ ∃ e ∈ D²: t⁻¹e ∈ D`.
fn in_d2_dinv(target: &Group, t: &Element, d2: &[Element], d: &HashSet<Element>) -> Result<bool> {
    let t_inv = target.invert(t)?;
    for e in d2 {
        if d.contains(&target.multiply(&t_inv, e)?) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Checks the ε-identity, the inverse identity, conjugation into `D²D⁻¹`,
/// and the quasi-action bound, all against the defect set of the same scan.
pub fn identity_audit<F: Evaluate + ?Sized>(
    f: &F,
    enumeration: &PairEnumeration,
    options: ScanOptions,
) -> Result<IdentityAudit> {
    let (g, h) = (f.domain(), f.target());
    let scan = PairScan::new(g, enumeration, options.pair_cap)?;
    let report = defect_set_on(f, &scan, enumeration, DefectClass::Ulam, options)?;
    let d_list = report.elements.clone();
    let d: HashSet<Element> = d_list.iter().cloned().collect();
    let vals = evaluate_scan(f, &scan)?;
    let mut checks = Vec::new();

    // f(1)⁻¹ ∈ D
    let eps_inv = h.invert(&f.evaluate(&g.identity())?)?;
    checks.push(IdentityCheck {
        name: "epsilon",
        passed: d.contains(&eps_inv),
        checked: 1,
        witness: (!d.contains(&eps_inv)).then(|| h.format(&eps_inv)),
    });

    // f(x⁻¹)⁻¹ f(x)⁻¹ ∈ D ∪ D²
    let d2_set = products(h, &d_list, &d_list)?;
    let mut witness = None;
    let mut checked = 0;
    for (i, x) in scan.elements().iter().enumerate() {
        let xi = g.invert(x)?;
        let fxi = match scan.position(&xi) {
            Some(k) => vals.values[k].clone(),
            None => f.evaluate(&xi)?,
        };
        let t = h.multiply(&h.invert(&fxi)?, &vals.inverses[i])?;
        checked += 1;
        if !d.contains(&t) && !d2_set.contains(&t) {
            witness = Some(format!("x = {}: {}", g.format(x), h.format(&t)));
            break;
        }
    }
    checks.push(IdentityCheck {
        name: "inverse",
        passed: witness.is_none(),
        checked,
        witness,
    });

    // h⁻¹ s h ∈ D²D⁻¹ for h ∈ f(scan), s ∈ D
    let mut d2: Vec<Element> = d2_set.into_iter().collect();
    d2.sort();
    let mut hs: Vec<Element> = vals.values.clone();
    hs.sort();
    hs.dedup();
    let conj = hs
        .par_iter()
        .map(|hv| -> Result<(usize, Option<String>)> {
            let mut n = 0;
            for s in &d_list {
                let t = h.conjugate(hv, s)?;
                n += 1;
                if !in_d2_dinv(h, &t, &d2, &d)? {
                    return Ok((n, Some(format!("h = {}, s = {}", h.format(hv), h.format(s)))));
                }
            }
            Ok((n, None))
        })
        .collect::<Result<Vec<_>>>()?;
    let checked = conj.iter().map(|c| c.0).sum();
    let witness = conj.into_iter().find_map(|c| c.1);
    checks.push(IdentityCheck {
        name: "conjugation",
        passed: witness.is_none(),
        checked,
        witness,
    });

    // (f(x)f(y)h)⁻¹ f(xy)h ∈ D²D⁻¹, using the first pair realizing each defect.
    let mut reps: BTreeMap<Element, (usize, usize)> = BTreeMap::new();
    scan.for_each(|i, j| {
        if reps.len() == d_list.len() {
            return Ok(());
        }
        let xy = g.multiply(&scan.elements()[i], &scan.elements()[j])?;
        let fxy = match scan.position(&xy) {
            Some(k) => vals.values[k].clone(),
            None => f.evaluate(&xy)?,
        };
        let dd = ulam_defect(h, &vals.values[i], &vals.values[j], &fxy)?;
        reps.entry(dd).or_insert((i, j));
        Ok(())
    })?;
    let reps: Vec<(usize, usize)> = reps.into_values().collect();
    let qa = hs
        .par_iter()
        .map(|hv| -> Result<(usize, Option<String>)> {
            let mut n = 0;
            for &(i, j) in &reps {
                let (x, y) = (&scan.elements()[i], &scan.elements()[j]);
                let fxy = f.evaluate(&g.multiply(x, y)?)?;
                let left = h.multiply_all([&vals.values[i], &vals.values[j], hv])?;
                let right = h.multiply(&fxy, hv)?;
                let t = h.left_divide(&left, &right)?;
                n += 1;
                if !in_d2_dinv(h, &t, &d2, &d)? {
                    return Ok((
                        n,
                        Some(format!("x = {}, y = {}, h = {}", g.format(x), g.format(y), h.format(hv))),
                    ));
                }
            }
            Ok((n, None))
        })
        .collect::<Result<Vec<_>>>()?;
    let checked = qa.iter().map(|c| c.0).sum();
    let witness = qa.into_iter().find_map(|c| c.1);
    checks.push(IdentityCheck {
        name: "quasi_action",
        passed: witness.is_none(),
        checked,
        witness,
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(IdentityAudit {
        defects: d_list.len(),
        checks,
        passed,
        note: (!passed).then(|| "failures are relative to the scanned defect set, which may be incomplete".into()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeRow {
    pub word: String,
    /// Max of `|φ∘f(xy) − φ∘f(x) − φ∘f(y)|` over pairs of radius at most `r`.
    pub radius_table: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HsProbeReport {
    pub max_probe_length: usize,
    pub pairs: usize,
    pub probes: Vec<ProbeRow>,
}

/// Cyclically reduced words of length `1..=k`.
pub fn probe_words(rank: usize, k: usize) -> Vec<Word> {
    (1..=k)
        .flat_map(|n| words_of_length(rank, n))
        .filter(Word::is_cyclically_reduced)
        .collect()
}

/// Composes `f` with Brooks quasimorphisms on its free target and tabulates
/// their defects.
pub fn hs_probe<F: Evaluate + ?Sized>(
    f: &F,
    k: usize,
    enumeration: &PairEnumeration,
    options: ScanOptions,
) -> Result<HsProbeReport> {
    let rank = f.target().free_rank().ok_or_else(|| {
        DefectError::Invalid(format!("probes need a free target, got {}", f.target()))
    })?;
    let g = f.domain();
    let scan = PairScan::new(g, enumeration, options.pair_cap)?;
    let vals = evaluate_scan(f, &scan)?;
    let probes = probe_words(rank, k);
    let top = scan.radius() as usize;
    let word = |x: &Element| -> Result<Word> {
        x.as_word()
            .cloned()
            .ok_or_else(|| DefectError::Invalid("probe value is not a word".into()))
    };
    let words: Vec<Word> = vals.values.iter().map(word).collect::<Result<_>>()?;
    let phi: Vec<Vec<i64>> = probes
        .iter()
        .map(|p| words.iter().map(|w| brooks_value(p, w)).collect())
        .collect();
    let tables = scan.fold(
        || vec![vec![0u64; top + 1]; probes.len()],
        |acc, i, j| {
            let xy = g.multiply(&scan.elements()[i], &scan.elements()[j])?;
            let fxy = match scan.position(&xy) {
                Some(kk) => words[kk].clone(),
                None => word(&f.evaluate(&xy)?)?,
            };
            let r = (scan.pair_radius(i, j) as usize).min(top);
            for (p, pw) in probes.iter().enumerate() {
                let v = (brooks_value(pw, &fxy) - phi[p][i] - phi[p][j]).unsigned_abs();
                if v > acc[p][r] {
                    acc[p][r] = v;
                }
            }
            Ok(())
        },
        |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x = (*x).max(y);
                }
            }
            a
        },
    )?;
    let probes = probes
        .iter()
        .zip(tables)
        .map(|(w, mut t)| {
            for r in 1..t.len() {
                t[r] = t[r].max(t[r - 1]);
            }
            ProbeRow {
                word: w.to_string(),
                radius_table: t,
            }
        })
        .collect();
    Ok(HsProbeReport {
        max_probe_length: k,
        pairs: scan.pair_count(),
        probes,
    })
}

/// Result of an elementwise containment check between defect sets.
#[derive(Debug, Clone, Serialize)]
pub struct ContainmentReport {
    pub relation: String,
    pub pairs: usize,
    pub passed: bool,
    pub witness: Option<String>,
    pub composite_defects: usize,
}

/// Verifies `D(f₂∘f₁) ⊆ D(f₂)·f₂(D(f₁))·D(f₂)` pairwise: every composite
/// defect is exhibited as `e₂·f₂(d)·e₁` with `d = D₁(x,y)`,
/// `e₂ = D₂(f₁x, f₁y)` and `e₁ = D₂(f₁x·f₁y, d)`.
pub fn composition_containment(
    composite: &QMap,
    enumeration: &PairEnumeration,
    options: ScanOptions,
) -> Result<ContainmentReport> {
    let (outer, inner) = match composite.rule() {
        Rule::Compose { outer, inner } => (outer.as_ref(), inner.as_ref()),
        _ => return Err(DefectError::Invalid("expected a composition".into())),
    };
    let g = composite.domain();
    let (k, h) = (inner.target(), outer.target());
    let scan = PairScan::new(g, enumeration, options.pair_cap)?;
    let inner_vals = evaluate_scan(inner, &scan)?;
    let (bad, defects) = scan.fold(
        || (None::<(usize, usize)>, HashSet::new()),
        |acc, i, j| {
            let (x, y) = (&scan.elements()[i], &scan.elements()[j]);
            let xy = g.multiply(x, y)?;
            let (f1x, f1y) = (&inner_vals.values[i], &inner_vals.values[j]);
            let f1xy = inner.evaluate(&xy)?;
            let d = ulam_defect(k, f1x, f1y, &f1xy)?;
            let prod = k.multiply(f1x, f1y)?;
            let (o_x, o_y, o_p) = (outer.evaluate(f1x)?, outer.evaluate(f1y)?, outer.evaluate(&prod)?);
            let o_d = outer.evaluate(&d)?;
            let e2 = ulam_defect(h, &o_x, &o_y, &o_p)?;
            let e1 = ulam_defect(h, &o_p, &o_d, &outer.evaluate(&k.multiply(&prod, &d)?)?)?;
            let c = ulam_defect(h, &composite.evaluate(x)?, &composite.evaluate(y)?, &composite.evaluate(&xy)?)?;
            if c != h.multiply_all([&e2, &o_d, &e1])? && acc.0.is_none_or(|w| (i, j) < w) {
                acc.0 = Some((i, j));
            }
            acc.1.insert(c);
            Ok(())
        },
        |mut a, b| {
            a.0 = match (a.0, b.0) {
                (Some(p), Some(q)) => Some(p.min(q)),
                (p, q) => p.or(q),
            };
            a.1.extend(b.1);
            a
        },
    )?;
    Ok(ContainmentReport {
        relation: "D(f2∘f1) ⊆ D(f2)·f2(D(f1))·D(f2)".into(),
        pairs: scan.pair_count(),
        passed: bad.is_none(),
        witness: bad.map(|(i, j)| format!("({}, {})", g.format(&scan.elements()[i]), g.format(&scan.elements()[j]))),
        composite_defects: defects.len(),
    })
}

/// Verifies that the defect of a product map is the tuple of factor
/// defects at every pair, and that `D(f)` projects onto each `D(fᵢ)`.
pub fn product_factorization(
    product: &QMap,
    enumeration: &PairEnumeration,
    options: ScanOptions,
) -> Result<ContainmentReport> {
    let factors = match product.rule() {
        Rule::Product(fs) => fs,
        _ => return Err(DefectError::Invalid("expected a product map".into())),
    };
    let g = product.domain();
    let scan = PairScan::new(g, enumeration, options.pair_cap)?;
    let all = defect_set_on(product, &scan, enumeration, DefectClass::Ulam, options)?;
    let mut witness = None;
    scan.for_each(|i, j| {
        if witness.is_some() {
            return Ok(());
        }
        let (x, y) = (&scan.elements()[i], &scan.elements()[j]);
        let whole = pair_defect(product, x, y, DefectClass::Ulam, 0)?;
        let parts = factors
            .iter()
            .map(|f| pair_defect(f, x, y, DefectClass::Ulam, 0).map(|d| d.element().cloned().expect("ulam")))
            .collect::<Result<Vec<_>>>()?;
        if whole.element() != Some(&Element::Tuple(parts)) {
            witness = Some(format!("({}, {})", g.format(x), g.format(y)));
        }
        Ok(())
    })?;
    for (idx, f) in factors.iter().enumerate() {
        if witness.is_some() {
            break;
        }
        let own = defect_set_on(f, &scan, enumeration, DefectClass::Ulam, options)?.defect_set();
        let projected: BTreeSet<Element> = all
            .elements
            .iter()
            .map(|d| match d {
                Element::Tuple(xs) => xs[idx].clone(),
                other => other.clone(),
            })
            .collect();
        if projected != own {
            witness = Some(format!("projection {idx} differs from the factor's defect set"));
        }
    }
    Ok(ContainmentReport {
        relation: "D(f1 x ... x fn) = (D(f1), ..., D(fn)) pairwise".into(),
        pairs: scan.pair_count(),
        passed: witness.is_none(),
        witness,
        composite_defects: all.elements.len(),
    })
}

#[cfg(test)]
mod tests;

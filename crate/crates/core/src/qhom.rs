//! Quasihomomorphism candidates: a domain, a target, and an evaluation rule.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::groups::{Element, Group, GroupError};
use crate::structure::FiniteGroupView;
use crate::words::{
    count_occurrences, find_occurrences, pattern_set, verify_nonoverlapping, NonOverlapCertificate,
    OverlapWitness, Word, WordError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("{rule} requires a free domain, got {domain}")]
    NotFreeDomain { rule: &'static str, domain: String },
    #[error("{rule} requires a finite domain, got {domain}")]
    NotFiniteDomain { rule: &'static str, domain: String },
    #[error("patterns overlap: {} / {} share {}", .0.first, .0.second, .0.shared)]
    Overlap(OverlapWitness),
    #[error("cannot compose: inner target {inner_target} differs from outer domain {outer_domain}")]
    Composability {
        inner_target: String,
        outer_domain: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("point table has no entry for {0}")]
    MissingPoint(String),
    #[error("lifts project differently at {0}")]
    ProjectionsDisagree(String),
    #[error("value {0} is outside every coset K·h")]
    OutsideCosets(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Word(#[from] WordError),
}

pub type Result<T, E = MapError> = std::result::Result<T, E>;

/// Anything that can be evaluated pointwise between two groups.
pub trait Evaluate: Sync {
    fn domain(&self) -> &Group;
    fn target(&self) -> &Group;
    fn evaluate(&self, x: &Element) -> Result<Element>;
}

/// How a [`Rule::PostProject`] map moves values into a subgroup.
#[derive(Debug, Clone)]
pub enum Projection {
    /// Closest element of `subgroup` under the view's word metric; ties go to
    /// the least canonical index.
    Nearest {
        view: Arc<FiniteGroupView>,
        subgroup: Vec<u32>,
    },
    /// `k·hᵢ ↦ k`, with `i` the least index for which `value·hᵢ⁻¹ ∈ K`.
    CosetRetraction {
        kernel: std::collections::BTreeSet<Element>,
        representatives: Vec<Element>,
    },
}

#[derive(Debug, Clone)]
pub enum Rule {
    GeneratorHom {
        images: Vec<Element>,
        inverse_images: Vec<Element>,
    },
    PointTable(BTreeMap<Element, Element>),
    /// `x ↦ x` on a group with neither a free basis nor a finite table.
    Identity,
    Brooks(Word),
    MiddleUv {
        u: Word,
        v: Word,
        patterns: [Word; 4],
        certificate: NonOverlapCertificate,
    },
    SectionLift(Box<QMap>),
    /// Generator images in the base `C`, lifted to `(0, h(a))` and extended
    /// multiplicatively.
    HomLift {
        base_images: Vec<Element>,
        lifted: Vec<Element>,
        lifted_inverses: Vec<Element>,
    },
    CentralPerturbation {
        base: Box<QMap>,
        psi: Box<QMap>,
    },
    Product(Vec<QMap>),
    Compose {
        outer: Box<QMap>,
        inner: Box<QMap>,
    },
    PostProject {
        inner: Box<QMap>,
        projection: Projection,
    },
    PointPerturbation {
        base: Box<QMap>,
        overrides: BTreeMap<Element, Element>,
    },
}

#[derive(Debug, Clone)]
pub struct QMap {
    domain: Group,
    target: Group,
    rule: Rule,
}

fn require_free(rule: &'static str, g: &Group) -> Result<usize> {
    g.free_rank().ok_or_else(|| MapError::NotFreeDomain {
        rule,
        domain: g.to_string(),
    })
}

impl QMap {
    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Homomorphism from a free group given by the images of `a, b, ...`.
    pub fn generator_hom(domain: Group, target: Group, images: Vec<Element>) -> Result<Self> {
        let rank = require_free("generator_hom", &domain)?;
        if images.len() != rank {
            return Err(MapError::Invalid(format!(
                "{} generator images for rank {rank}",
                images.len()
            )));
        }
        for x in &images {
            target.check(x)?;
        }
        let inverse_images = images
            .iter()
            .map(|x| target.invert(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QMap {
            domain,
            target,
            rule: Rule::GeneratorHom {
                images,
                inverse_images,
            },
        })
    }

    /// Identity map on a free or finite group.
    pub fn identity(group: Group) -> Result<Self> {
        if let Some(rank) = group.free_rank() {
            let images = (1..=rank)
                .map(|g| Word::generator(g).map(Element::Word))
                .collect::<Result<Vec<_>, _>>()?;
            return QMap::generator_hom(group.clone(), group, images);
        }
        if group.is_finite() {
            let table = group.enumerate_all()?.into_iter().map(|x| (x.clone(), x)).collect();
            return QMap::point_table(group.clone(), group, table);
        }
        Ok(QMap {
            domain: group.clone(),
            target: group,
            rule: Rule::Identity,
        })
    }

    pub fn point_table(domain: Group, target: Group, table: BTreeMap<Element, Element>) -> Result<Self> {
        if !domain.is_finite() {
            return Err(MapError::NotFiniteDomain {
                rule: "point_table",
                domain: domain.to_string(),
            });
        }
        for x in domain.enumerate_all()? {
            match table.get(&x) {
                Some(y) => target.check(y)?,
                None => return Err(MapError::MissingPoint(domain.format(&x))),
            }
        }
        if table.len() != domain.order().unwrap_or(0) as usize {
            return Err(MapError::Invalid("point table has entries outside the domain".into()));
        }
        Ok(QMap {
            domain,
            target,
            rule: Rule::PointTable(table),
        })
    }

    /// Brooks quasimorphism `x ↦ #w(x) − #w⁻¹(x)` into ℤ.
    pub fn brooks(domain: Group, w: Word) -> Result<Self> {
        let rank = require_free("brooks", &domain)?;
        w.check_rank(rank)?;
        if w.is_empty() {
            return Err(WordError::Empty.into());
        }
        if !w.is_cyclically_reduced() {
            return Err(WordError::NotCyclicallyReduced(w.to_string()).into());
        }
        Ok(QMap {
            domain,
            target: Group::integers(),
            rule: Rule::Brooks(w),
        })
    }

    /// The map `f_{u,v}` sending a word to the ordered product of its
    /// occurrences of `u^{±1}, v^{±1}`.
    pub fn middle_uv(domain: Group, u: Word, v: Word) -> Result<Self> {
        let rank = require_free("middle_uv", &domain)?;
        u.check_rank(rank)?;
        v.check_rank(rank)?;
        let certificate = verify_nonoverlapping(&u, &v)?;
        if let Some(w) = &certificate.witness {
            return Err(MapError::Overlap(w.clone()));
        }
        let patterns = pattern_set(&u, &v);
        Ok(QMap {
            target: domain.clone(),
            domain,
            rule: Rule::MiddleUv {
                u,
                v,
                patterns,
                certificate,
            },
        })
    }

    /// `s ∘ inner` for the section `s(c) = (0, c)` of `extension`.
    pub fn section_lift(extension: Group, inner: QMap) -> Result<Self> {
        let cocycle = extension
            .as_extension()
            .ok_or_else(|| MapError::Invalid(format!("{extension} is not a central extension")))?;
        if inner.target != *cocycle.base() {
            return Err(MapError::Composability {
                inner_target: inner.target.to_string(),
                outer_domain: cocycle.base().to_string(),
            });
        }
        Ok(QMap {
            domain: inner.domain.clone(),
            target: extension,
            rule: Rule::SectionLift(Box::new(inner)),
        })
    }

    /// Lifts the homomorphism `a ↦ h(a) ∈ C` to the extension generator-wise.
    pub fn hom_lift(domain: Group, extension: Group, base_images: Vec<Element>) -> Result<Self> {
        let rank = require_free("hom_lift", &domain)?;
        let cocycle = extension
            .as_extension()
            .ok_or_else(|| MapError::Invalid(format!("{extension} is not a central extension")))?;
        if base_images.len() != rank {
            return Err(MapError::Invalid(format!(
                "{} generator images for rank {rank}",
                base_images.len()
            )));
        }
        for c in &base_images {
            cocycle.base().check(c)?;
        }
        let lifted: Vec<Element> = base_images.iter().map(|c| cocycle.section(c)).collect();
        let lifted_inverses = lifted
            .iter()
            .map(|x| extension.invert(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QMap {
            domain,
            target: extension,
            rule: Rule::HomLift {
                base_images,
                lifted,
                lifted_inverses,
            },
        })
    }

    /// `x ↦ base(x) · ψ(x)` with `ψ(x)` placed in the central fiber.
    pub fn central_perturbation(base: QMap, psi: QMap) -> Result<Self> {
        let cocycle = base
            .target
            .as_extension()
            .ok_or_else(|| MapError::Invalid("central perturbation needs an extension target".into()))?;
        if psi.domain != base.domain {
            return Err(MapError::Invalid("perturbation domain differs from base domain".into()));
        }
        if psi.target != *cocycle.fiber() {
            return Err(MapError::Composability {
                inner_target: psi.target.to_string(),
                outer_domain: cocycle.fiber().to_string(),
            });
        }
        Ok(QMap {
            domain: base.domain.clone(),
            target: base.target.clone(),
            rule: Rule::CentralPerturbation {
                base: Box::new(base),
                psi: Box::new(psi),
            },
        })
    }

    pub fn product(factors: Vec<QMap>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| MapError::Invalid("empty product".into()))?;
        if factors.iter().any(|f| f.domain != first.domain) {
            return Err(MapError::Invalid("product factors have different domains".into()));
        }
        Ok(QMap {
            domain: first.domain.clone(),
            target: Group::product(factors.iter().map(|f| f.target.clone()).collect()),
            rule: Rule::Product(factors),
        })
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: QMap, inner: QMap) -> Result<Self> {
        if inner.target != outer.domain {
            return Err(MapError::Composability {
                inner_target: inner.target.to_string(),
                outer_domain: outer.domain.to_string(),
            });
        }
        Ok(QMap {
            domain: inner.domain.clone(),
            target: outer.target.clone(),
            rule: Rule::Compose {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
        })
    }

    pub fn post_project(inner: QMap, projection: Projection) -> Result<Self> {
        match &projection {
            Projection::Nearest { view, subgroup } => {
                if *view.group() != inner.target {
                    return Err(MapError::Invalid("projection view is not the target group".into()));
                }
                if subgroup.is_empty() {
                    return Err(MapError::Invalid("empty projection subgroup".into()));
                }
            }
            Projection::CosetRetraction {
                kernel,
                representatives,
            } => {
                for x in kernel.iter().chain(representatives) {
                    inner.target.check(x)?;
                }
                if representatives.is_empty() {
                    return Err(MapError::Invalid("no coset representatives".into()));
                }
            }
        }
        Ok(QMap {
            domain: inner.domain.clone(),
            target: inner.target.clone(),
            rule: Rule::PostProject {
                inner: Box::new(inner),
                projection,
            },
        })
    }

    /// `base` with finitely many values replaced.
    pub fn point_perturbation(base: QMap, overrides: BTreeMap<Element, Element>) -> Result<Self> {
        for (x, y) in &overrides {
            base.domain.check(x)?;
            base.target.check(y)?;
        }
        Ok(QMap {
            domain: base.domain.clone(),
            target: base.target.clone(),
            rule: Rule::PointPerturbation {
                base: Box::new(base),
                overrides,
            },
        })
    }

    /// Value of `f_{u,v}` with its pattern sequence, when this is a middle map.
    pub fn middle_value(&self, x: &Element) -> Option<MiddleValue> {
        match (&self.rule, x) {
            (Rule::MiddleUv { patterns, .. }, Element::Word(w)) => Some(middle_value_with(patterns, w)),
            _ => None,
        }
    }

    /// Short human-readable description of the rule tree.
    pub fn describe(&self) -> String {
        self.to_string()
    }
}

impl Evaluate for QMap {
    fn domain(&self) -> &Group {
        &self.domain
    }

    fn target(&self) -> &Group {
        &self.target
    }

    fn evaluate(&self, x: &Element) -> Result<Element> {
        self.domain.check(x)?;
        self.eval_unchecked(x)
    }
}

impl QMap {
    fn eval_unchecked(&self, x: &Element) -> Result<Element> {
        match &self.rule {
            Rule::GeneratorHom {
                images,
                inverse_images,
            } => self.extend_over_word(x, images, inverse_images),
            Rule::PointTable(table) => table
                .get(x)
                .cloned()
                .ok_or_else(|| MapError::MissingPoint(self.domain.format(x))),
            Rule::Identity => Ok(x.clone()),
            Rule::Brooks(w) => Ok(Element::integer(brooks_value(w, word_of(x)?))),
            Rule::MiddleUv { patterns, .. } => {
                Ok(Element::Word(middle_value_with(patterns, word_of(x)?).word))
            }
            Rule::SectionLift(inner) => {
                let c = inner.eval_unchecked(x)?;
                Ok(self.target.as_extension().expect("checked").section(&c))
            }
            Rule::HomLift {
                lifted,
                lifted_inverses,
                ..
            } => self.extend_over_word(x, lifted, lifted_inverses),
            Rule::CentralPerturbation { base, psi } => {
                let b = base.eval_unchecked(x)?;
                let a = psi.eval_unchecked(x)?;
                let central = self.target.as_extension().expect("checked").include(&a)?;
                Ok(self.target.multiply(&b, &central)?)
            }
            Rule::Product(factors) => Ok(Element::Tuple(
                factors
                    .iter()
                    .map(|f| f.eval_unchecked(x))
                    .collect::<Result<Vec<_>>>()?,
            )),
            Rule::Compose { outer, inner } => outer.eval_unchecked(&inner.eval_unchecked(x)?),
            Rule::PostProject { inner, projection } => {
                let y = inner.eval_unchecked(x)?;
                project(&self.target, projection, &y)
            }
            Rule::PointPerturbation { base, overrides } => match overrides.get(x) {
                Some(y) => Ok(y.clone()),
                None => base.eval_unchecked(x),
            },
        }
    }

    fn extend_over_word(&self, x: &Element, images: &[Element], inverses: &[Element]) -> Result<Element> {
        let w = word_of(x)?;
        let mut acc = self.target.identity();
        for l in w.letters() {
            let img = if l.is_inverse() {
                &inverses[l.generator() - 1]
            } else {
                &images[l.generator() - 1]
            };
            acc = self.target.multiply(&acc, img)?;
        }
        Ok(acc)
    }
}

fn project(target: &Group, projection: &Projection, y: &Element) -> Result<Element> {
    match projection {
        Projection::Nearest { view, subgroup } => {
            let i = view.index_of(y)?;
            Ok(view.element(view.nearest_point(i, subgroup)).clone())
        }
        Projection::CosetRetraction {
            kernel,
            representatives,
        } => {
            for h in representatives {
                let k = target.multiply(y, &target.invert(h)?)?;
                if kernel.contains(&k) {
                    return Ok(k);
                }
            }
            Err(MapError::OutsideCosets(target.format(y)))
        }
    }
}

fn word_of(x: &Element) -> Result<&Word> {
    x.as_word()
        .ok_or_else(|| MapError::Invalid(format!("expected a free-group word, got {x:?}")))
}

impl fmt::Display for QMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::GeneratorHom { images, .. } => {
                let parts: Vec<String> = images.iter().map(|x| self.target.format(x)).collect();
                write!(f, "hom[{}]", parts.join(","))
            }
            Rule::PointTable(t) => write!(f, "table[{} points]", t.len()),
            Rule::Identity => write!(f, "id"),
            Rule::Brooks(w) => write!(f, "brooks({w})"),
            Rule::MiddleUv { u, v, .. } => write!(f, "middle_uv({u},{v})"),
            Rule::SectionLift(inner) => write!(f, "section∘{inner}"),
            Rule::HomLift { base_images, .. } => {
                let base = self.target.as_extension().expect("checked").base();
                let parts: Vec<String> = base_images.iter().map(|x| base.format(x)).collect();
                write!(f, "hom_lift[{}]", parts.join(","))
            }
            Rule::CentralPerturbation { base, psi } => write!(f, "{base}·{psi}"),
            Rule::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|q| q.to_string()).collect();
                write!(f, "({})", parts.join(", "))
            }
            Rule::Compose { outer, inner } => write!(f, "{outer}∘{inner}"),
            Rule::PostProject { inner, projection } => match projection {
                Projection::Nearest { .. } => write!(f, "nearest∘{inner}"),
                Projection::CosetRetraction { .. } => write!(f, "retract∘{inner}"),
            },
            Rule::PointPerturbation { base, overrides } => {
                write!(f, "{base}+{} overrides", overrides.len())
            }
        }
    }
}

/// `(#occurrences of w in x) − (#occurrences of w⁻¹ in x)`, counting every
/// positioned match.
pub fn brooks_value(w: &Word, x: &Word) -> i64 {
    count_occurrences(x, w) as i64 - count_occurrences(x, &w.inverse()) as i64
}

/// Value of `f_{u,v}`: the reduced product of the matched patterns together
/// with their ids (0 = u, 1 = u⁻¹, 2 = v, 3 = v⁻¹) in order of appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiddleValue {
    pub word: Word,
    pub patterns: Vec<usize>,
}

pub fn middle_uv_value(u: &Word, v: &Word, x: &Word) -> MiddleValue {
    middle_value_with(&pattern_set(u, v), x)
}

fn middle_value_with(patterns: &[Word; 4], x: &Word) -> MiddleValue {
    let occ = find_occurrences(x, patterns);
    let mut word = Word::identity();
    let mut ids = Vec::with_capacity(occ.len());
    for o in occ {
        word = word.multiply(&patterns[o.pattern_id]);
        ids.push(o.pattern_id);
    }
    MiddleValue { word, patterns: ids }
}

/// The homomorphism `⟨u, v⟩ → ℤ` with `u ↦ 1`, `v ↦ 0`, read off the pattern
/// sequence.
pub fn alpha_abelianize(patterns: &[usize]) -> i64 {
    patterns
        .iter()
        .map(|&p| match p {
            0 => 1,
            1 => -1,
            _ => 0,
        })
        .sum()
}

/// Pointwise quotient `δ(g) = f₂(g)·f₁(g)⁻¹` of two lifts of the same map
/// into a central extension; a map into the fiber.
#[derive(Debug, Clone)]
pub struct LiftDifference {
    first: QMap,
    second: QMap,
    fiber: Group,
}

impl LiftDifference {
    pub fn first(&self) -> &QMap {
        &self.first
    }

    pub fn second(&self) -> &QMap {
        &self.second
    }
}

impl Evaluate for LiftDifference {
    fn domain(&self) -> &Group {
        &self.first.domain
    }

    fn target(&self) -> &Group {
        &self.fiber
    }

    fn evaluate(&self, x: &Element) -> Result<Element> {
        let e = &self.first.target;
        let cocycle = e.as_extension().expect("checked in lift_difference");
        let d = e.multiply(&self.second.evaluate(x)?, &e.invert(&self.first.evaluate(x)?)?)?;
        match cocycle.fiber_part(&d) {
            Ok(a) => Ok(a),
            Err(_) => Err(MapError::ProjectionsDisagree(self.first.domain.format(x))),
        }
    }
}

/// Checks that `f₁` and `f₂` project to the same map on `sample` and that
/// every quotient is central, then returns the quotient map.
pub fn lift_difference(f1: QMap, f2: QMap, sample: &[Element]) -> Result<LiftDifference> {
    if f1.domain != f2.domain || f1.target != f2.target {
        return Err(MapError::Invalid("lifts must share domain and target".into()));
    }
    let e = f1.target.clone();
    let cocycle = e
        .as_extension()
        .ok_or_else(|| MapError::Invalid("lift difference needs an extension target".into()))?;
    let gens = e.generators();
    for g in sample {
        let (y1, y2) = (f1.evaluate(g)?, f2.evaluate(g)?);
        if cocycle.project(&y1)? != cocycle.project(&y2)? {
            return Err(MapError::ProjectionsDisagree(f1.domain.format(g)));
        }
        let d = e.multiply(&y2, &e.invert(&y1)?)?;
        for s in &gens {
            if e.multiply(&d, s)? != e.multiply(s, &d)? {
                return Err(MapError::Invalid(format!(
                    "quotient at {} is not central",
                    f1.domain.format(g)
                )));
            }
        }
    }
    Ok(LiftDifference {
        fiber: cocycle.fiber().clone(),
        first: f1,
        second: f2,
    })
}

#[cfg(test)]
mod tests;

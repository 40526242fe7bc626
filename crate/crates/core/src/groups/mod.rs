//! Group realizations with a uniform interface: free groups, abelian groups,
//! finite permutation/table groups, central extensions by a 2-cocycle, and
//! direct products.
//!
//! Every element is carried in canonical form, so equality of [`Element`]s is
//! equality in the group.

mod extension;
mod finite;
mod text;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::words::{Letter, Word, WordError};

pub use extension::{symplectic_form, Cocycle, CocycleRule};
pub use finite::{FiniteGroup, FiniteLabel};

/// Default cap on the order of finite groups and on exhaustive enumerations.
pub const DEFAULT_ORDER_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("element {element} does not belong to {group}")]
    Mismatch { element: String, group: String },
    #[error("integer overflow in group arithmetic")]
    Overflow,
    #[error("order cap {cap} exceeded")]
    CapExceeded { cap: usize },
    #[error("element {0} is outside the subgroup generated by the declared generators")]
    NotGenerated(String),
    #[error("{0} is not finite")]
    NotFinite(String),
    #[error("invalid group: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cocycle is not normalized at {0}")]
    NotNormalized(String),
    #[error("cocycle identity fails at ({0}, {1}, {2})")]
    CocycleIdentity(String, String, String),
    #[error("cannot parse {text:?} as an element of {group}: {reason}")]
    Parse {
        text: String,
        group: String,
        reason: String,
    },
    #[error(transparent)]
    Word(#[from] WordError),
}

pub type Result<T, E = GroupError> = std::result::Result<T, E>;

/// Canonical payload of a group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Word(Word),
    Vector(Vec<i64>),
    /// Index into the canonical element order of a finite group.
    Finite(u32),
    /// `(a, c)` with `a` in the central fiber and `c` in the base.
    Pair { fiber: Vec<i64>, base: Box<Element> },
    Tuple(Vec<Element>),
}

impl Element {
    pub fn as_word(&self) -> Option<&Word> {
        match self {
            Element::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[i64]> {
        match self {
            Element::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// The single integer of a rank-1 abelian element.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Element::Vector(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    pub fn integer(n: i64) -> Self {
        Element::Vector(vec![n])
    }
}

impl From<Word> for Element {
    fn from(w: Word) -> Self {
        Element::Word(w)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum GroupKind {
    Free { rank: usize },
    /// Product of cyclic groups; order 0 denotes an infinite cyclic factor.
    Abelian { orders: Vec<u64> },
    Finite(FiniteGroup),
    Extension(Cocycle),
    Product(Vec<Group>),
}

/// Shared, immutable handle to a group.
#[derive(Clone, PartialEq, Eq)]
pub struct Group(Arc<GroupKind>);

/// Elements within word-metric distance `radius` of the identity, in BFS
/// order (depth, then canonical payload).
#[derive(Debug, Clone)]
pub struct Ball {
    pub radius: u32,
    pub elements: Vec<Element>,
    pub depths: Vec<u32>,
    index: HashMap<Element, usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, x: &Element) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &Element) -> bool {
        self.index.contains_key(x)
    }

    /// Number of elements at depth at most `r`.
    pub fn count_within(&self, r: u32) -> usize {
        self.depths.partition_point(|&d| d <= r)
    }
}

impl Group {
    pub fn new(kind: GroupKind) -> Self {
        Group(Arc::new(kind))
    }

    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > crate::words::MAX_RANK {
            return Err(WordError::BadRank(rank).into());
        }
        Ok(Group::new(GroupKind::Free { rank }))
    }

    pub fn free_abelian(rank: usize) -> Self {
        Group::new(GroupKind::Abelian {
            orders: vec![0; rank],
        })
    }

    /// The integers, target of quasimorphisms.
    pub fn integers() -> Self {
        Group::free_abelian(1)
    }

    pub fn abelian(orders: Vec<u64>) -> Self {
        Group::new(GroupKind::Abelian { orders })
    }

    pub fn cyclic(n: u64) -> Self {
        Group::abelian(vec![n])
    }

    /// Permutation group on `0..degree` generated by one-line image arrays.
    pub fn permutation(degree: usize, generators: &[Vec<u32>]) -> Result<Self> {
        Self::permutation_with_cap(degree, generators, DEFAULT_ORDER_CAP)
    }

    pub fn permutation_with_cap(degree: usize, generators: &[Vec<u32>], cap: usize) -> Result<Self> {
        Ok(Group::new(GroupKind::Finite(FiniteGroup::from_permutations(
            degree, generators, cap,
        )?)))
    }

    /// Finite group from a full multiplication table `table[i][j] = i·j`.
    pub fn table(table: &[Vec<u32>], generators: Option<&[u32]>) -> Result<Self> {
        Self::table_with_cap(table, generators, DEFAULT_ORDER_CAP)
    }

    pub fn table_with_cap(table: &[Vec<u32>], generators: Option<&[u32]>, cap: usize) -> Result<Self> {
        Ok(Group::new(GroupKind::Finite(FiniteGroup::from_table(
            table, generators, cap,
        )?)))
    }

    pub fn product(factors: Vec<Group>) -> Self {
        Group::new(GroupKind::Product(factors))
    }

    /// Integer Heisenberg group of dimension `2n + 1`.
    pub fn heisenberg(n: usize) -> Result<Self> {
        build_extension(
            Group::integers(),
            Group::free_abelian(2 * n),
            CocycleRule::Symplectic { n },
        )
    }

    pub fn kind(&self) -> &GroupKind {
        &self.0
    }

    pub fn free_rank(&self) -> Option<usize> {
        match self.kind() {
            GroupKind::Free { rank } => Some(*rank),
            _ => None,
        }
    }

    pub fn is_free(&self) -> bool {
        self.free_rank().is_some()
    }

    pub fn as_extension(&self) -> Option<&Cocycle> {
        match self.kind() {
            GroupKind::Extension(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self.kind() {
            GroupKind::Free { .. } => false,
            GroupKind::Abelian { orders } => orders.iter().all(|&m| m > 0),
            GroupKind::Finite(_) => true,
            GroupKind::Extension(c) => c.fiber().is_finite() && c.base().is_finite(),
            GroupKind::Product(fs) => fs.iter().all(Group::is_finite),
        }
    }

    pub fn identity(&self) -> Element {
        match self.kind() {
            GroupKind::Free { .. } => Element::Word(Word::identity()),
            GroupKind::Abelian { orders } => Element::Vector(vec![0; orders.len()]),
            GroupKind::Finite(g) => Element::Finite(g.identity()),
            GroupKind::Extension(c) => Element::Pair {
                fiber: vec![0; c.fiber_rank()],
                base: Box::new(c.base().identity()),
            },
            GroupKind::Product(fs) => Element::Tuple(fs.iter().map(Group::identity).collect()),
        }
    }

    /// Structural membership test on the payload.
    pub fn contains(&self, x: &Element) -> bool {
        match (self.kind(), x) {
            (GroupKind::Free { rank }, Element::Word(w)) => w.max_generator() <= *rank,
            (GroupKind::Abelian { orders }, Element::Vector(v)) => abelian_contains(orders, v),
            (GroupKind::Finite(g), Element::Finite(i)) => (*i as usize) < g.order(),
            (GroupKind::Extension(c), Element::Pair { fiber, base }) => {
                c.fiber().contains(&Element::Vector(fiber.clone())) && c.base().contains(base)
            }
            (GroupKind::Product(fs), Element::Tuple(xs)) => {
                fs.len() == xs.len() && fs.iter().zip(xs).all(|(g, x)| g.contains(x))
            }
            _ => false,
        }
    }

    pub fn check(&self, x: &Element) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GroupError::Mismatch {
                element: format!("{x:?}"),
                group: self.to_string(),
            })
        }
    }

    pub fn multiply(&self, x: &Element, y: &Element) -> Result<Element> {
        match (self.kind(), x, y) {
            (GroupKind::Free { .. }, Element::Word(a), Element::Word(b)) => {
                Ok(Element::Word(a.multiply(b)))
            }
            (GroupKind::Abelian { orders }, Element::Vector(a), Element::Vector(b))
                if a.len() == orders.len() && b.len() == orders.len() =>
            {
                Ok(Element::Vector(abelian_add(orders, a, b)?))
            }
            (GroupKind::Finite(g), Element::Finite(a), Element::Finite(b)) => {
                Ok(Element::Finite(g.multiply(*a, *b)))
            }
            (GroupKind::Extension(c), Element::Pair { .. }, Element::Pair { .. }) => c.multiply(x, y),
            (GroupKind::Product(fs), Element::Tuple(a), Element::Tuple(b))
                if a.len() == fs.len() && b.len() == fs.len() =>
            {
                let parts = fs
                    .iter()
                    .zip(a.iter().zip(b))
                    .map(|(g, (p, q))| g.multiply(p, q))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Element::Tuple(parts))
            }
            _ => Err(self.mismatch(x, y)),
        }
    }

    pub fn invert(&self, x: &Element) -> Result<Element> {
        match (self.kind(), x) {
            (GroupKind::Free { .. }, Element::Word(a)) => Ok(Element::Word(a.inverse())),
            (GroupKind::Abelian { orders }, Element::Vector(a)) if a.len() == orders.len() => {
                Ok(Element::Vector(abelian_neg(orders, a)?))
            }
            (GroupKind::Finite(g), Element::Finite(a)) => Ok(Element::Finite(g.inverse(*a))),
            (GroupKind::Extension(c), Element::Pair { .. }) => c.invert(x),
            (GroupKind::Product(fs), Element::Tuple(a)) if a.len() == fs.len() => {
                let parts = fs
                    .iter()
                    .zip(a)
                    .map(|(g, p)| g.invert(p))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Element::Tuple(parts))
            }
            _ => Err(self.mismatch(x, x)),
        }
    }

    /// `x⁻¹ y`.
    pub fn left_divide(&self, x: &Element, y: &Element) -> Result<Element> {
        self.multiply(&self.invert(x)?, y)
    }

    pub fn multiply_all<'a>(&self, xs: impl IntoIterator<Item = &'a Element>) -> Result<Element> {
        let mut acc = self.identity();
        for x in xs {
            acc = self.multiply(&acc, x)?;
        }
        Ok(acc)
    }

    pub fn conjugate(&self, h: &Element, x: &Element) -> Result<Element> {
        // h⁻¹ x h
        self.multiply(&self.left_divide(h, x)?, h)
    }

    pub fn pow(&self, x: &Element, n: i64) -> Result<Element> {
        let base = if n < 0 { self.invert(x)? } else { x.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.multiply(&acc, &base)?;
        }
        Ok(acc)
    }

    /// Reduced length, ℓ₁ norm, word length, or the extension pseudo-norm.
    pub fn norm(&self, x: &Element) -> Result<u64> {
        match (self.kind(), x) {
            (GroupKind::Free { .. }, Element::Word(w)) => Ok(w.len() as u64),
            (GroupKind::Abelian { orders }, Element::Vector(v)) if v.len() == orders.len() => {
                Ok(orders.iter().zip(v).map(|(&m, &c)| cyclic_norm(m, c)).sum())
            }
            (GroupKind::Finite(g), Element::Finite(i)) => g
                .depth(*i)
                .map(u64::from)
                .ok_or_else(|| GroupError::NotGenerated(self.format(x))),
            (GroupKind::Extension(c), Element::Pair { fiber, base }) => c.norm(fiber, base),
            (GroupKind::Product(fs), Element::Tuple(xs)) if xs.len() == fs.len() => {
                let mut total = 0;
                for (g, p) in fs.iter().zip(xs) {
                    total += g.norm(p)?;
                }
                Ok(total)
            }
            _ => Err(self.mismatch(x, x)),
        }
    }

    /// Declared generating set, closed under inversion, identity removed,
    /// in canonical order.
    pub fn generators(&self) -> Vec<Element> {
        let mut gens: Vec<Element> = match self.kind() {
            GroupKind::Free { rank } => (1..=*rank)
                .flat_map(|g| {
                    [false, true].map(|inv| {
                        Element::Word(Word::reduce(&[Letter::new(g, inv).expect("rank checked")]))
                    })
                })
                .collect(),
            GroupKind::Abelian { orders } => {
                let mut out = Vec::new();
                for (i, &m) in orders.iter().enumerate() {
                    for s in [1i64, -1] {
                        let mut v = vec![0i64; orders.len()];
                        v[i] = reduce_mod(m, s);
                        out.push(Element::Vector(v));
                    }
                }
                out
            }
            GroupKind::Finite(g) => g.generators().iter().map(|&i| Element::Finite(i)).collect(),
            GroupKind::Extension(c) => c.generators(),
            GroupKind::Product(fs) => {
                let ids: Vec<Element> = fs.iter().map(Group::identity).collect();
                let mut out = Vec::new();
                for (i, g) in fs.iter().enumerate() {
                    for gen in g.generators() {
                        let mut parts = ids.clone();
                        parts[i] = gen;
                        out.push(Element::Tuple(parts));
                    }
                }
                out
            }
        };
        let id = self.identity();
        gens.retain(|g| *g != id);
        gens.sort();
        gens.dedup();
        gens
    }

    /// BFS ball of radius `radius` over the declared generators.
    pub fn enumerate_ball(&self, radius: u32) -> Result<Ball> {
        self.enumerate_ball_capped(radius, usize::MAX)
    }

    pub fn enumerate_ball_capped(&self, radius: u32, cap: usize) -> Result<Ball> {
        let gens = self.generators();
        let id = self.identity();
        let mut seen: HashSet<Element> = HashSet::from([id.clone()]);
        let mut elements = vec![id];
        let mut depths = vec![0];
        let mut layer_start = 0;
        for d in 1..=radius {
            let mut next = Vec::new();
            for x in &elements[layer_start..] {
                for g in &gens {
                    let y = self.multiply(x, g)?;
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            if elements.len() + next.len() > cap {
                return Err(GroupError::CapExceeded { cap });
            }
            next.sort();
            layer_start = elements.len();
            depths.extend(std::iter::repeat_n(d, next.len()));
            elements.extend(next);
        }
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(Ball {
            radius,
            elements,
            depths,
            index,
        })
    }

    /// All elements of a finite group, in canonical order. For table groups
    /// with a non-generating declared set, elements outside the generated
    /// subgroup come last.
    pub fn enumerate_all(&self) -> Result<Vec<Element>> {
        self.enumerate_all_capped(DEFAULT_ORDER_CAP)
    }

    pub fn enumerate_all_capped(&self, cap: usize) -> Result<Vec<Element>> {
        if !self.is_finite() {
            return Err(GroupError::NotFinite(self.to_string()));
        }
        if let GroupKind::Finite(g) = self.kind() {
            if g.order() > cap {
                return Err(GroupError::CapExceeded { cap });
            }
            return Ok((0..g.order() as u32).map(Element::Finite).collect());
        }
        // Declared generators generate every other finite kind.
        let ball = self.enumerate_ball_capped(u32::MAX, cap)?;
        Ok(ball.elements)
    }

    /// Exact group order for finite kinds.
    pub fn order(&self) -> Option<u64> {
        match self.kind() {
            GroupKind::Free { .. } => None,
            GroupKind::Abelian { orders } => {
                orders.iter().try_fold(1u64, |acc, &m| (m > 0).then(|| acc.checked_mul(m)).flatten())
            }
            GroupKind::Finite(g) => Some(g.order() as u64),
            GroupKind::Extension(c) => c.fiber().order()?.checked_mul(c.base().order()?),
            GroupKind::Product(fs) => fs
                .iter()
                .try_fold(1u64, |acc, g| acc.checked_mul(g.order()?)),
        }
    }

    pub fn format(&self, x: &Element) -> String {
        text::format(self, x)
    }

    pub fn parse(&self, s: &str) -> Result<Element> {
        text::parse(self, s)
    }

    pub fn format_all<'a>(&self, xs: impl IntoIterator<Item = &'a Element>) -> Vec<String> {
        xs.into_iter().map(|x| self.format(x)).collect()
    }

    /// Sorts by (norm, payload) and removes duplicates.
    pub fn canonical_sort(&self, xs: &mut Vec<Element>) {
        xs.sort_by_cached_key(|x| (self.norm(x).unwrap_or(u64::MAX), x.clone()));
        xs.dedup();
    }

    fn mismatch(&self, x: &Element, y: &Element) -> GroupError {
        let bad = if self.contains(x) { y } else { x };
        GroupError::Mismatch {
            element: format!("{bad:?}"),
            group: self.to_string(),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            GroupKind::Free { rank } => write!(f, "F{rank}"),
            GroupKind::Abelian { orders } => {
                let parts: Vec<String> = orders
                    .iter()
                    .map(|&m| if m == 0 { "Z".into() } else { format!("Z/{m}") })
                    .collect();
                if parts.is_empty() {
                    write!(f, "1")
                } else {
                    write!(f, "{}", parts.join("x"))
                }
            }
            GroupKind::Finite(g) => write!(f, "finite group of order {}", g.order()),
            GroupKind::Extension(c) => write!(f, "E[{} by {}, {}]", c.base(), c.fiber(), c.rule().name()),
            GroupKind::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| g.to_string()).collect();
                write!(f, "({})", parts.join(" x "))
            }
        }
    }
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({self})")
    }
}

/// Central extension `E_ω` of `base` by the abelian `fiber`, after checking
/// that `ω` is a normalized 2-cocycle.
pub fn build_extension(fiber: Group, base: Group, rule: CocycleRule) -> Result<Group> {
    let cocycle = Cocycle::new(fiber, base, rule)?;
    cocycle.verify()?;
    Ok(Group::new(GroupKind::Extension(cocycle)))
}

pub(crate) fn reduce_mod(m: u64, c: i64) -> i64 {
    if m == 0 {
        c
    } else {
        c.rem_euclid(m as i64)
    }
}

fn cyclic_norm(m: u64, c: i64) -> u64 {
    if m == 0 {
        c.unsigned_abs()
    } else {
        let c = c as u64;
        c.min(m - c)
    }
}

fn abelian_contains(orders: &[u64], v: &[i64]) -> bool {
    v.len() == orders.len()
        && orders
            .iter()
            .zip(v)
            .all(|(&m, &c)| m == 0 || (0..m as i64).contains(&c))
}

pub(crate) fn abelian_add(orders: &[u64], a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    orders
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&m, (&x, &y))| {
            if m == 0 {
                x.checked_add(y).ok_or(GroupError::Overflow)
            } else {
                Ok(((x as i128 + y as i128).rem_euclid(m as i128)) as i64)
            }
        })
        .collect()
}

pub(crate) fn abelian_neg(orders: &[u64], a: &[i64]) -> Result<Vec<i64>> {
    orders
        .iter()
        .zip(a)
        .map(|(&m, &x)| {
            if m == 0 {
                x.checked_neg().ok_or(GroupError::Overflow)
            } else {
                Ok(reduce_mod(m, -x))
            }
        })
        .collect()
}

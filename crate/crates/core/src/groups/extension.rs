use std::collections::BTreeMap;

use super::{abelian_add, abelian_neg, reduce_mod, Element, Group, GroupError, GroupKind, Result};

/// Standard symplectic pairing `Σᵢ x₂ᵢ₋₁ y₂ᵢ − x₂ᵢ y₂ᵢ₋₁` (1-based coordinates).
pub fn symplectic_form(x: &[i64], y: &[i64]) -> Result<i64> {
    if x.len() != y.len() {
        return Err(GroupError::DimensionMismatch(x.len(), y.len()));
    }
    if x.len() % 2 != 0 {
        return Err(GroupError::Invalid(format!("odd dimension {}", x.len())));
    }
    let mut acc: i64 = 0;
    for i in (0..x.len()).step_by(2) {
        let term = x[i]
            .checked_mul(y[i + 1])
            .zip(x[i + 1].checked_mul(y[i]))
            .and_then(|(p, q)| p.checked_sub(q))
            .ok_or(GroupError::Overflow)?;
        acc = acc.checked_add(term).ok_or(GroupError::Overflow)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CocycleRule {
    /// Symplectic form on `ℤ²ⁿ` with values in a rank-1 fiber.
    Symplectic { n: usize },
    /// Carry cocycle on `ℤ/N`: 1 when the representatives overflow `N`.
    Carry { modulus: u64 },
    /// Explicit values on a finite base; missing entries are zero.
    Table(BTreeMap<(Element, Element), Vec<i64>>),
    Zero,
}

impl CocycleRule {
    pub fn name(&self) -> &'static str {
        match self {
            CocycleRule::Symplectic { .. } => "symplectic",
            CocycleRule::Carry { .. } => "carry",
            CocycleRule::Table(_) => "table",
            CocycleRule::Zero => "zero",
        }
    }
}

/// Normalized 2-cocycle `ω: C × C → A` together with its base `C` and
/// abelian fiber `A`; the data of a central extension.
#[derive(Debug, PartialEq, Eq)]
pub struct Cocycle {
    fiber: Group,
    fiber_orders: Vec<u64>,
    base: Group,
    rule: CocycleRule,
}

fn ceil_sqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r.saturating_mul(r) > x {
        r -= 1;
    }
    while r.saturating_mul(r) < x {
        r += 1;
    }
    r
}

impl Cocycle {
    pub fn new(fiber: Group, base: Group, rule: CocycleRule) -> Result<Self> {
        let fiber_orders = match fiber.kind() {
            GroupKind::Abelian { orders } => orders.clone(),
            _ => return Err(GroupError::Invalid(format!("fiber {fiber} is not abelian"))),
        };
        let rank_one = |name: &str| {
            if fiber_orders.len() == 1 {
                Ok(())
            } else {
                Err(GroupError::Invalid(format!("{name} cocycle needs a rank-1 fiber")))
            }
        };
        let mut rule = rule;
        match (&mut rule, base.kind()) {
            (CocycleRule::Symplectic { n }, GroupKind::Abelian { orders }) => {
                if *n == 0 || orders.len() != 2 * *n || orders.iter().any(|&m| m != 0) {
                    return Err(GroupError::Invalid(format!(
                        "symplectic cocycle needs base Z^{}, got {base}",
                        2 * *n
                    )));
                }
                rank_one("symplectic")?;
            }
            (CocycleRule::Carry { modulus }, GroupKind::Abelian { orders }) => {
                if *modulus == 0 || orders[..] != [*modulus] {
                    return Err(GroupError::Invalid(format!(
                        "carry cocycle needs base Z/{modulus}, got {base}"
                    )));
                }
                rank_one("carry")?;
            }
            (CocycleRule::Table(entries), _) => {
                if !base.is_finite() {
                    return Err(GroupError::Invalid("table cocycle needs a finite base".into()));
                }
                for ((x, y), v) in entries.iter_mut() {
                    base.check(x)?;
                    base.check(y)?;
                    if v.len() != fiber_orders.len() {
                        return Err(GroupError::DimensionMismatch(v.len(), fiber_orders.len()));
                    }
                    for (c, &m) in v.iter_mut().zip(&fiber_orders) {
                        *c = reduce_mod(m, *c);
                    }
                }
            }
            (CocycleRule::Zero, _) => {}
            (r, _) => {
                return Err(GroupError::Invalid(format!(
                    "{} cocycle is not defined on {base}",
                    r.name()
                )))
            }
        }
        Ok(Cocycle {
            fiber,
            fiber_orders,
            base,
            rule,
        })
    }

    pub fn fiber(&self) -> &Group {
        &self.fiber
    }

    pub fn fiber_orders(&self) -> &[u64] {
        &self.fiber_orders
    }

    pub fn fiber_rank(&self) -> usize {
        self.fiber_orders.len()
    }

    pub fn base(&self) -> &Group {
        &self.base
    }

    pub fn rule(&self) -> &CocycleRule {
        &self.rule
    }

    /// `ω(c₁, c₂)` as a canonical fiber vector.
    pub fn value(&self, c1: &Element, c2: &Element) -> Result<Vec<i64>> {
        let raw = match &self.rule {
            CocycleRule::Symplectic { .. } => {
                let (x, y) = (vector(c1)?, vector(c2)?);
                vec![symplectic_form(x, y)?]
            }
            CocycleRule::Carry { modulus } => {
                let (x, y) = (vector(c1)?[0], vector(c2)?[0]);
                vec![i64::from(x + y >= *modulus as i64)]
            }
            CocycleRule::Table(entries) => entries
                .get(&(c1.clone(), c2.clone()))
                .cloned()
                .unwrap_or_else(|| vec![0; self.fiber_rank()]),
            CocycleRule::Zero => vec![0; self.fiber_rank()],
        };
        Ok(raw
            .into_iter()
            .zip(&self.fiber_orders)
            .map(|(c, &m)| reduce_mod(m, c))
            .collect())
    }

    /// Checks normalization and the cocycle identity
    /// `ω(c₁,c₂) + ω(c₁c₂,c₃) = ω(c₂,c₃) + ω(c₁,c₂c₃)`: exhaustively when the
    /// base has at most 64 elements, otherwise on all triples from the first
    /// 64 elements of the radius-2 ball.
    pub fn verify(&self) -> Result<()> {
        let sample: Vec<Element> = match self.base.order() {
            Some(n) if n <= 64 => self.base.enumerate_all()?,
            _ => {
                let mut b = self.base.enumerate_ball(2)?.elements;
                b.truncate(64);
                b
            }
        };
        let zero = vec![0; self.fiber_rank()];
        let id = self.base.identity();
        for c in &sample {
            if self.value(&id, c)? != zero || self.value(c, &id)? != zero {
                return Err(GroupError::NotNormalized(self.base.format(c)));
            }
        }
        let add = |a: &[i64], b: &[i64]| abelian_add(&self.fiber_orders, a, b);
        for c1 in &sample {
            for c2 in &sample {
                let c12 = self.base.multiply(c1, c2)?;
                let w12 = self.value(c1, c2)?;
                for c3 in &sample {
                    let c23 = self.base.multiply(c2, c3)?;
                    let lhs = add(&w12, &self.value(&c12, c3)?)?;
                    let rhs = add(&self.value(c2, c3)?, &self.value(c1, &c23)?)?;
                    if lhs != rhs {
                        return Err(GroupError::CocycleIdentity(
                            self.base.format(c1),
                            self.base.format(c2),
                            self.base.format(c3),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn multiply(&self, x: &Element, y: &Element) -> Result<Element> {
        let (a1, c1) = self.split(x)?;
        let (a2, c2) = self.split(y)?;
        let twist = self.value(c1, c2)?;
        let fiber = abelian_add(&self.fiber_orders, &abelian_add(&self.fiber_orders, a1, a2)?, &twist)?;
        Ok(Element::Pair {
            fiber,
            base: Box::new(self.base.multiply(c1, c2)?),
        })
    }

    pub(crate) fn invert(&self, x: &Element) -> Result<Element> {
        let (a, c) = self.split(x)?;
        let c_inv = self.base.invert(c)?;
        let twist = self.value(c, &c_inv)?;
        let neg = abelian_neg(&self.fiber_orders, &abelian_add(&self.fiber_orders, a, &twist)?)?;
        Ok(Element::Pair {
            fiber: neg,
            base: Box::new(c_inv),
        })
    }

    /// Base norm plus `⌈√|aⱼ|⌉` per infinite fiber coordinate and cyclic word
    /// length per finite one. Proper, but not a word metric.
    pub(crate) fn norm(&self, fiber: &[i64], base: &Element) -> Result<u64> {
        let mut total = self.base.norm(base)?;
        for (&c, &m) in fiber.iter().zip(&self.fiber_orders) {
            total += if m == 0 {
                ceil_sqrt(c.unsigned_abs())
            } else {
                let c = c as u64;
                c.min(m - c)
            };
        }
        Ok(total)
    }

    pub(crate) fn generators(&self) -> Vec<Element> {
        let zero = vec![0; self.fiber_rank()];
        let mut out: Vec<Element> = self
            .base
            .generators()
            .into_iter()
            .map(|g| Element::Pair {
                fiber: zero.clone(),
                base: Box::new(g),
            })
            .collect();
        for g in self.fiber.generators() {
            if let Element::Vector(v) = g {
                out.push(Element::Pair {
                    fiber: v,
                    base: Box::new(self.base.identity()),
                });
            }
        }
        out
    }

    /// Section `s(c) = (0, c)`.
    pub fn section(&self, c: &Element) -> Element {
        Element::Pair {
            fiber: vec![0; self.fiber_rank()],
            base: Box::new(c.clone()),
        }
    }

    /// Inclusion of the central fiber, `a ↦ (a, 1)`.
    pub fn include(&self, a: &Element) -> Result<Element> {
        self.fiber.check(a)?;
        Ok(Element::Pair {
            fiber: vector(a)?.to_vec(),
            base: Box::new(self.base.identity()),
        })
    }

    /// Projection `p(a, c) = c`.
    pub fn project(&self, b: &Element) -> Result<Element> {
        Ok(self.split(b)?.1.clone())
    }

    /// Fiber coordinate of an element whose base part is the identity.
    pub fn fiber_part(&self, b: &Element) -> Result<Element> {
        let (a, c) = self.split(b)?;
        if *c != self.base.identity() {
            return Err(GroupError::Mismatch {
                element: format!("{b:?}"),
                group: format!("central fiber {}", self.fiber),
            });
        }
        Ok(Element::Vector(a.to_vec()))
    }

    fn split<'a>(&self, x: &'a Element) -> Result<(&'a [i64], &'a Element)> {
        match x {
            Element::Pair { fiber, base } if fiber.len() == self.fiber_rank() => Ok((fiber, base)),
            _ => Err(GroupError::Mismatch {
                element: format!("{x:?}"),
                group: "central extension".into(),
            }),
        }
    }
}

fn vector(x: &Element) -> Result<&[i64]> {
    x.as_vector().ok_or_else(|| GroupError::Mismatch {
        element: format!("{x:?}"),
        group: "abelian base".into(),
    })
}

//! Text encoding of elements.
//!
//! | kind        | form                  | example        |
//! |-------------|-----------------------|----------------|
//! | free        | letters, `""` = 1     | `aabA`         |
//! | abelian     | `n` (rank 1), `(..)`  | `-3`, `(3,-4)` |
//! | permutation | one-line images       | `[1,0,2]`      |
//! | table       | row index             | `5`            |
//! | extension   | `<fiber;base>`        | `<1;(1,1)>`    |
//! | product     | `{x;y;...}`           | `{ab;3}`       |

use super::{reduce_mod, Element, FiniteLabel, Group, GroupError, GroupKind, Result};
use crate::words::Word;

pub(super) fn format(g: &Group, x: &Element) -> String {
    match (g.kind(), x) {
        (GroupKind::Free { .. }, Element::Word(w)) => w.to_string(),
        (GroupKind::Abelian { .. }, Element::Vector(v)) => format_vector(v),
        (GroupKind::Finite(f), Element::Finite(i)) if (*i as usize) < f.order() => match f.label(*i) {
            FiniteLabel::Perm(p) => {
                let parts: Vec<String> = p.iter().map(|j| j.to_string()).collect();
                format!("[{}]", parts.join(","))
            }
            FiniteLabel::Index(r) => r.to_string(),
        },
        (GroupKind::Extension(c), Element::Pair { fiber, base }) => {
            format!("<{};{}>", format_vector(fiber), format(c.base(), base))
        }
        (GroupKind::Product(fs), Element::Tuple(xs)) if fs.len() == xs.len() => {
            let parts: Vec<String> = fs.iter().zip(xs).map(|(f, x)| format(f, x)).collect();
            format!("{{{}}}", parts.join(";"))
        }
        _ => format!("{x:?}"),
    }
}

fn format_vector(v: &[i64]) -> String {
    if v.len() == 1 {
        v[0].to_string()
    } else {
        let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

fn err(g: &Group, text: &str, reason: impl Into<String>) -> GroupError {
    GroupError::Parse {
        text: text.to_string(),
        group: g.to_string(),
        reason: reason.into(),
    }
}

/// Splits on `sep` at bracket depth zero.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' | '{' | '<' => depth += 1,
            ')' | ']' | '}' | '>' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn strip<'a>(s: &'a str, open: char, close: char) -> Option<&'a str> {
    s.strip_prefix(open)?.strip_suffix(close)
}

fn parse_vector(g: &Group, text: &str, orders: &[u64]) -> Result<Vec<i64>> {
    let s = text.trim();
    let inner = match strip(s, '(', ')') {
        Some(inner) => inner,
        None if orders.len() == 1 => s,
        None => return Err(err(g, text, "expected (c1,...,cn)")),
    };
    let comps: Vec<&str> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').collect()
    };
    if comps.len() != orders.len() {
        return Err(err(g, text, format!("expected {} coordinates", orders.len())));
    }
    comps
        .iter()
        .zip(orders)
        .map(|(c, &m)| {
            c.trim()
                .parse::<i64>()
                .map(|v| reduce_mod(m, v))
                .map_err(|e| err(g, text, e.to_string()))
        })
        .collect()
}

pub(super) fn parse(g: &Group, text: &str) -> Result<Element> {
    let s = text.trim();
    match g.kind() {
        GroupKind::Free { rank } => Ok(Element::Word(Word::parse_in_rank(s, *rank)?)),
        GroupKind::Abelian { orders } => Ok(Element::Vector(parse_vector(g, text, orders)?)),
        GroupKind::Finite(f) => {
            let label = if let Some(inner) = strip(s, '[', ']') {
                let images = inner
                    .split(',')
                    .map(|c| c.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| err(g, text, e.to_string()))?;
                FiniteLabel::Perm(images)
            } else {
                FiniteLabel::Index(s.parse::<u32>().map_err(|e| err(g, text, e.to_string()))?)
            };
            f.find(&label)
                .map(Element::Finite)
                .ok_or_else(|| err(g, text, "not an element of the group"))
        }
        GroupKind::Extension(c) => {
            let inner = strip(s, '<', '>').ok_or_else(|| err(g, text, "expected <fiber;base>"))?;
            let parts = split_top(inner, ';');
            if parts.len() != 2 {
                return Err(err(g, text, "expected <fiber;base>"));
            }
            let fiber = parse_vector(c.fiber(), parts[0], c.fiber_orders())?;
            let base = parse(c.base(), parts[1])?;
            Ok(Element::Pair {
                fiber,
                base: Box::new(base),
            })
        }
        GroupKind::Product(fs) => {
            let inner = strip(s, '{', '}').ok_or_else(|| err(g, text, "expected {x;y;...}"))?;
            let parts = split_top(inner, ';');
            if parts.len() != fs.len() {
                return Err(err(g, text, format!("expected {} components", fs.len())));
            }
            let xs = fs
                .iter()
                .zip(parts)
                .map(|(f, p)| parse(f, p))
                .collect::<Result<Vec<_>>>()?;
            Ok(Element::Tuple(xs))
        }
    }
}

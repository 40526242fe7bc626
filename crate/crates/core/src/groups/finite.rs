use std::collections::HashMap;

use super::{GroupError, Result};

/// External name of a finite-group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FiniteLabel {
    /// One-line image array on `0..degree`.
    Perm(Vec<u32>),
    /// Row index in a user-supplied multiplication table.
    Index(u32),
}

/// Largest order for which the full multiplication table is cached.
const TABLE_LIMIT: usize = 2048;

/// Finite group with elements numbered in canonical order: generated
/// elements by (word length, label), then any elements the declared
/// generators do not reach, by label.
#[derive(Debug)]
pub struct FiniteGroup {
    labels: Vec<FiniteLabel>,
    index: HashMap<FiniteLabel, u32>,
    table: Option<Vec<u32>>,
    inverse: Vec<u32>,
    depth: Vec<Option<u32>>,
    generators: Vec<u32>,
    identity: u32,
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.generators == other.generators && self.table == other.table
    }
}

impl Eq for FiniteGroup {}

/// `(x·y)[i] = y[x[i]]`: apply `x` first.
pub(crate) fn compose(x: &[u32], y: &[u32]) -> Vec<u32> {
    x.iter().map(|&i| y[i as usize]).collect()
}

fn invert_perm(x: &[u32]) -> Vec<u32> {
    let mut out = vec![0; x.len()];
    for (i, &j) in x.iter().enumerate() {
        out[j as usize] = i as u32;
    }
    out
}

fn is_permutation(x: &[u32], degree: usize) -> bool {
    if x.len() != degree {
        return false;
    }
    let mut seen = vec![false; degree];
    for &j in x {
        if j as usize >= degree || seen[j as usize] {
            return false;
        }
        seen[j as usize] = true;
    }
    true
}

impl FiniteGroup {
    pub(crate) fn from_permutations(degree: usize, generators: &[Vec<u32>], cap: usize) -> Result<Self> {
        if degree == 0 {
            return Err(GroupError::Invalid("permutation degree must be positive".into()));
        }
        for g in generators {
            if !is_permutation(g, degree) {
                return Err(GroupError::Invalid(format!(
                    "{g:?} is not a permutation of 0..{degree}"
                )));
            }
        }
        let id: Vec<u32> = (0..degree as u32).collect();
        let mut gens: Vec<Vec<u32>> = generators
            .iter()
            .flat_map(|g| [g.clone(), invert_perm(g)])
            .filter(|g| *g != id)
            .collect();
        gens.sort();
        gens.dedup();

        let mut index: HashMap<FiniteLabel, u32> = HashMap::new();
        let mut perms: Vec<Vec<u32>> = vec![id.clone()];
        let mut depth = vec![Some(0)];
        index.insert(FiniteLabel::Perm(id), 0);
        let mut layer_start = 0;
        let mut d = 0;
        loop {
            d += 1;
            let mut next: Vec<Vec<u32>> = Vec::new();
            for x in &perms[layer_start..] {
                for g in &gens {
                    let y = compose(x, g);
                    let label = FiniteLabel::Perm(y.clone());
                    if !index.contains_key(&label) {
                        index.insert(label, u32::MAX);
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            if perms.len() + next.len() > cap {
                return Err(GroupError::CapExceeded { cap });
            }
            next.sort();
            layer_start = perms.len();
            for y in next {
                index.insert(FiniteLabel::Perm(y.clone()), perms.len() as u32);
                perms.push(y);
                depth.push(Some(d));
            }
        }

        let n = perms.len();
        let lookup = |p: &Vec<u32>, index: &HashMap<FiniteLabel, u32>| index[&FiniteLabel::Perm(p.clone())];
        let inverse: Vec<u32> = perms.iter().map(|p| lookup(&invert_perm(p), &index)).collect();
        let table = (n <= TABLE_LIMIT).then(|| {
            let mut t = Vec::with_capacity(n * n);
            for x in &perms {
                for y in &perms {
                    t.push(lookup(&compose(x, y), &index));
                }
            }
            t
        });
        let mut generators: Vec<u32> = gens.iter().map(|g| lookup(g, &index)).collect();
        generators.sort_unstable();
        Ok(FiniteGroup {
            labels: perms.into_iter().map(FiniteLabel::Perm).collect(),
            index,
            table,
            inverse,
            depth,
            generators,
            identity: 0,
        })
    }

    pub(crate) fn from_table(table: &[Vec<u32>], generators: Option<&[u32]>, cap: usize) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(GroupError::Invalid("empty multiplication table".into()));
        }
        if n > cap {
            return Err(GroupError::CapExceeded { cap });
        }
        for (i, row) in table.iter().enumerate() {
            if !is_permutation(row, n) {
                return Err(GroupError::Invalid(format!("row {i} is not a permutation of 0..{n}")));
            }
        }
        for j in 0..n {
            let col: Vec<u32> = table.iter().map(|r| r[j]).collect();
            if !is_permutation(&col, n) {
                return Err(GroupError::Invalid(format!("column {j} is not a permutation of 0..{n}")));
            }
        }
        let mul = |a: u32, b: u32| table[a as usize][b as usize];
        let e = (0..n as u32)
            .find(|&e| (0..n as u32).all(|x| mul(e, x) == x && mul(x, e) == x))
            .ok_or_else(|| GroupError::Invalid("table has no identity".into()))?;
        // Exhaustive for small tables, a fixed stride through triples otherwise.
        let triples = (n as u64).pow(3);
        let stride = (triples / 2_000_000).max(1);
        let mut t = 0u64;
        while t < triples {
            let (a, b, c) = (
                (t / (n as u64 * n as u64)) as u32,
                ((t / n as u64) % n as u64) as u32,
                (t % n as u64) as u32,
            );
            if mul(mul(a, b), c) != mul(a, mul(b, c)) {
                return Err(GroupError::Invalid(format!("not associative at ({a}, {b}, {c})")));
            }
            t += stride;
        }
        let raw_inverse: Vec<u32> = (0..n as u32)
            .map(|a| (0..n as u32).find(|&b| mul(a, b) == e).expect("latin square"))
            .collect();

        let declared: Vec<u32> = match generators {
            Some(gs) => {
                if let Some(&bad) = gs.iter().find(|&&g| g as usize >= n) {
                    return Err(GroupError::Invalid(format!("generator {bad} outside table of order {n}")));
                }
                gs.to_vec()
            }
            None => (0..n as u32).collect(),
        };
        let mut gens: Vec<u32> = declared
            .iter()
            .flat_map(|&g| [g, raw_inverse[g as usize]])
            .filter(|&g| g != e)
            .collect();
        gens.sort_unstable();
        gens.dedup();

        // BFS depths on raw labels.
        let mut raw_depth: Vec<Option<u32>> = vec![None; n];
        raw_depth[e as usize] = Some(0);
        let mut frontier = vec![e];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &x in &frontier {
                for &g in &gens {
                    let y = mul(x, g);
                    if raw_depth[y as usize].is_none() {
                        raw_depth[y as usize] = Some(d);
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&x| (raw_depth[x as usize].is_none(), raw_depth[x as usize], x));
        let mut canon = vec![0u32; n];
        for (pos, &raw) in order.iter().enumerate() {
            canon[raw as usize] = pos as u32;
        }
        let mut ctable = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                ctable[canon[a] as usize * n + canon[b] as usize] = canon[table[a][b] as usize];
            }
        }
        let labels: Vec<FiniteLabel> = order.iter().map(|&raw| FiniteLabel::Index(raw)).collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
        let mut generators: Vec<u32> = gens.iter().map(|&g| canon[g as usize]).collect();
        generators.sort_unstable();
        Ok(FiniteGroup {
            labels,
            index,
            table: Some(ctable),
            inverse: order.iter().map(|&raw| canon[raw_inverse[raw as usize] as usize]).collect(),
            depth: order.iter().map(|&raw| raw_depth[raw as usize]).collect(),
            generators,
            identity: canon[e as usize],
        })
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn multiply(&self, a: u32, b: u32) -> u32 {
        match &self.table {
            Some(t) => t[a as usize * self.order() + b as usize],
            None => match (&self.labels[a as usize], &self.labels[b as usize]) {
                (FiniteLabel::Perm(x), FiniteLabel::Perm(y)) => {
                    self.index[&FiniteLabel::Perm(compose(x, y))]
                }
                _ => unreachable!("table groups always cache their table"),
            },
        }
    }

    pub fn inverse(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    pub fn depth(&self, a: u32) -> Option<u32> {
        self.depth[a as usize]
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn label(&self, a: u32) -> &FiniteLabel {
        &self.labels[a as usize]
    }

    pub fn find(&self, label: &FiniteLabel) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn is_permutation_group(&self) -> bool {
        matches!(self.labels.first(), Some(FiniteLabel::Perm(_)))
    }
}

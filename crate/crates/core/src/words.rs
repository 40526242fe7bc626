//! Free-group words over the alphabet `a, b, c, ...` (inverses `A, B, C, ...`).
//!
//! Words are stored as flat letter arrays and kept freely reduced. Equality of
//! group elements is letter-sequence equality of reduced forms.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Largest rank expressible in the text alphabet.
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid letter {0:?}: expected a-z or A-Z")]
    InvalidChar(char),
    #[error("generator index {index} outside rank {rank}")]
    GeneratorOutOfRange { index: usize, rank: usize },
    #[error("rank {0} not supported (must be 1..=26)")]
    BadRank(usize),
    #[error("word {0:?} is not freely reduced")]
    NotReduced(String),
    #[error("word {0:?} is not cyclically reduced")]
    NotCyclicallyReduced(String),
    #[error("empty word where a nonempty word is required")]
    Empty,
    #[error("degenerate pattern set: {0}")]
    Degenerate(String),
}

/// A generator or its inverse. Stored as `+g` / `-g` with `g` 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(i8);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Result<Self, WordError> {
        if generator == 0 || generator > MAX_RANK {
            return Err(WordError::GeneratorOutOfRange {
                index: generator,
                rank: MAX_RANK,
            });
        }
        let g = generator as i8;
        Ok(Letter(if inverse { -g } else { g }))
    }

    pub fn generator(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    /// `+1` or `-1`.
    pub fn sign(self) -> i8 {
        self.0.signum()
    }

    pub fn inverse(self) -> Self {
        Letter(-self.0)
    }

    pub fn from_char(c: char) -> Result<Self, WordError> {
        if c.is_ascii_lowercase() {
            Letter::new((c as u8 - b'a') as usize + 1, false)
        } else if c.is_ascii_uppercase() {
            Letter::new((c as u8 - b'A') as usize + 1, true)
        } else {
            Err(WordError::InvalidChar(c))
        }
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + (self.generator() - 1) as u8) as char
    }

    fn key(self) -> (usize, bool) {
        (self.generator(), self.is_inverse())
    }
}

// a < A < b < B < ...
impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce(raw: &[Letter]) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
        for &l in raw {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Wraps letters that are already reduced; rejects anything else.
    pub fn from_reduced(letters: Vec<Letter>) -> Result<Self, WordError> {
        let w = Word(letters);
        if w.letters().windows(2).any(|p| p[0] == p[1].inverse()) {
            return Err(WordError::NotReduced(w.to_string()));
        }
        Ok(w)
    }

    pub fn generator(index: usize) -> Result<Self, WordError> {
        Ok(Word(vec![Letter::new(index, false)?]))
    }

    /// Parses the text form and reduces it. `""` and `"1"` denote the identity.
    pub fn parse(text: &str) -> Result<Self, WordError> {
        let text = text.trim();
        if text.is_empty() || text == "1" {
            return Ok(Word::identity());
        }
        let letters = text
            .chars()
            .map(Letter::from_char)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word::reduce(&letters))
    }

    /// Parses and checks every generator index against `rank`.
    pub fn parse_in_rank(text: &str, rank: usize) -> Result<Self, WordError> {
        let w = Word::parse(text)?;
        w.check_rank(rank)?;
        Ok(w)
    }

    pub fn check_rank(&self, rank: usize) -> Result<(), WordError> {
        match self.0.iter().find(|l| l.generator() > rank) {
            Some(l) => Err(WordError::GeneratorOutOfRange {
                index: l.generator(),
                rank,
            }),
            None => Ok(()),
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest generator index used (0 for the identity).
    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.generator()).max().unwrap_or(0)
    }

    pub fn multiply(&self, other: &Word) -> Word {
        let x = &self.0;
        let y = &other.0;
        let mut k = 0;
        while k < x.len() && k < y.len() && x[x.len() - 1 - k] == y[k].inverse() {
            k += 1;
        }
        let mut out = Vec::with_capacity(x.len() + y.len() - 2 * k);
        out.extend_from_slice(&x[..x.len() - k]);
        out.extend_from_slice(&y[k..]);
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.multiply(&base);
        }
        out
    }

    /// Strips matching inverse pairs from the two ends.
    pub fn cyclic_reduce(&self) -> Word {
        let l = &self.0;
        let mut i = 0;
        let mut j = l.len();
        while j - i >= 2 && l[i] == l[j - 1].inverse() {
            i += 1;
            j -= 1;
        }
        Word(l[i..j].to_vec())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(&f), Some(&l)) => self.0.len() == 1 || f != l.inverse(),
            _ => true,
        }
    }

    /// True when `pattern` occurs at `start`.
    pub fn matches_at(&self, pattern: &Word, start: usize) -> bool {
        start + pattern.len() <= self.len() && self.0[start..start + pattern.len()] == pattern.0[..]
    }

    pub fn contains_factor(&self, pattern: &Word) -> Option<usize> {
        if pattern.len() > self.len() {
            return None;
        }
        (0..=self.len() - pattern.len()).find(|&s| self.matches_at(pattern, s))
    }

    pub fn prefix(&self, k: usize) -> Word {
        Word(self.0[..k].to_vec())
    }

    pub fn suffix(&self, k: usize) -> Word {
        Word(self.0[self.0.len() - k..].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({:?})", self.to_string())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A positioned match of `patterns[pattern_id]` in a host word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Occurrence {
    pub start: usize,
    pub pattern_id: usize,
}

/// All positioned matches of all patterns, ordered by start index.
///
/// Overlapping matches of the same pattern are all reported.
pub fn find_occurrences(host: &Word, patterns: &[Word]) -> Vec<Occurrence> {
    let mut out = Vec::new();
    for start in 0..host.len() {
        for (pattern_id, p) in patterns.iter().enumerate() {
            if !p.is_empty() && host.matches_at(p, start) {
                out.push(Occurrence { start, pattern_id });
            }
        }
    }
    out
}

/// Number of positioned (possibly overlapping) occurrences of `pattern`.
pub fn count_occurrences(host: &Word, pattern: &Word) -> usize {
    if pattern.is_empty() || pattern.len() > host.len() {
        return 0;
    }
    (0..=host.len() - pattern.len())
        .filter(|&s| host.matches_at(pattern, s))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    SuffixPrefix,
    Factor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapWitness {
    pub first: Word,
    pub second: Word,
    pub shared: Word,
    pub kind: OverlapKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonOverlapCertificate {
    pub ok: bool,
    pub witness: Option<OverlapWitness>,
}

/// The pattern list `[u, u⁻¹, v, v⁻¹]` in that order.
pub fn pattern_set(u: &Word, v: &Word) -> [Word; 4] {
    [u.clone(), u.inverse(), v.clone(), v.inverse()]
}

/// Suffix/prefix and factor test between distinct elements of `{u, u⁻¹, v, v⁻¹}`.
///
/// A pair accepted here cannot have copies of distinct patterns sharing a
/// letter in any word. The converse is not claimed.
pub fn verify_nonoverlapping(u: &Word, v: &Word) -> Result<NonOverlapCertificate, WordError> {
    for w in [u, v] {
        if w.is_empty() {
            return Err(WordError::Empty);
        }
        if !w.is_cyclically_reduced() {
            return Err(WordError::NotCyclicallyReduced(w.to_string()));
        }
    }
    if u == v || *u == v.inverse() {
        return Err(WordError::Degenerate(format!(
            "{u} and {v} coincide up to inversion"
        )));
    }
    let t = pattern_set(u, v);
    for (i, first) in t.iter().enumerate() {
        for (j, second) in t.iter().enumerate() {
            if i == j {
                continue;
            }
            if second.len() <= first.len() && first.contains_factor(second).is_some() {
                return Ok(NonOverlapCertificate {
                    ok: false,
                    witness: Some(OverlapWitness {
                        first: first.clone(),
                        second: second.clone(),
                        shared: second.clone(),
                        kind: OverlapKind::Factor,
                    }),
                });
            }
            let max_k = first.len().min(second.len());
            for k in 1..max_k {
                if first.letters()[first.len() - k..] == second.letters()[..k] {
                    return Ok(NonOverlapCertificate {
                        ok: false,
                        witness: Some(OverlapWitness {
                            first: first.clone(),
                            second: second.clone(),
                            shared: first.suffix(k),
                            kind: OverlapKind::SuffixPrefix,
                        }),
                    });
                }
            }
        }
    }
    Ok(NonOverlapCertificate {
        ok: true,
        witness: None,
    })
}

/// Every reduced word of length exactly `n` over `rank` generators, in
/// lexicographic letter order.
pub fn words_of_length(rank: usize, n: usize) -> Vec<Word> {
    let alphabet: Vec<Letter> = (1..=rank)
        .flat_map(|g| [Letter(g as i8), Letter(-(g as i8))])
        .collect();
    let mut layer = vec![Word::identity()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(layer.len() * (2 * rank).max(1));
        for w in &layer {
            for &l in &alphabet {
                if w.0.last() == Some(&l.inverse()) {
                    continue;
                }
                let mut letters = w.0.clone();
                letters.push(l);
                next.push(Word(letters));
            }
        }
        layer = next;
    }
    layer
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn raw(s: &str) -> Vec<Letter> {
        s.chars().map(|c| Letter::from_char(c).unwrap()).collect()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(Word::reduce(&raw("aA")), Word::identity());
        assert_eq!(Word::reduce(&raw("abBA")), Word::identity());
        assert_eq!(Word::reduce(&raw("aabB")), w("aa"));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert_eq!(Word::parse("a1"), Err(WordError::InvalidChar('1')));
        assert_eq!(Word::parse("a b"), Err(WordError::InvalidChar(' ')));
        assert!(matches!(
            Word::parse_in_rank("abc", 2),
            Err(WordError::GeneratorOutOfRange { index: 3, rank: 2 })
        ));
        assert!(Word::from_reduced(raw("abB")).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(w("ab").multiply(&w("BA")), Word::identity());
        assert_eq!(w("aab").inverse(), w("BAA"));
        assert_eq!(w("Aba").cyclic_reduce(), w("b"));
        assert_eq!(w("abA").cyclic_reduce(), w("b"));
        assert!(w("aabaa").is_cyclically_reduced());
        assert!(!w("abA").is_cyclically_reduced());
        assert_eq!(w("aabaa").pow(2).to_string(), "aabaaaabaa");
        assert_eq!(w("ab").pow(-2), w("BABA"));
    }

    #[test]
    fn letter_order() {
        let mut ls = raw("BbAa");
        ls.sort();
        assert_eq!(ls, raw("aAbB"));
    }

    #[test]
    fn occurrences_examples() {
        let t = pattern_set(&w("aabaa"), &w("bbabb"));
        let occ = find_occurrences(&w("aabaa").pow(2), &t);
        assert_eq!(
            occ,
            vec![
                Occurrence { start: 0, pattern_id: 0 },
                Occurrence { start: 5, pattern_id: 0 }
            ]
        );
        assert!(find_occurrences(&w("ab"), &t).is_empty());
        let occ = find_occurrences(&w("aabaabbabb"), &t);
        assert_eq!(
            occ,
            vec![
                Occurrence { start: 0, pattern_id: 0 },
                Occurrence { start: 5, pattern_id: 2 }
            ]
        );
    }

    #[test]
    fn overlapping_same_pattern_is_counted() {
        // aba occurs at 0 and 2 in ababa
        assert_eq!(count_occurrences(&w("ababa"), &w("aba")), 2);
        assert_eq!(count_occurrences(&w("ababab"), &w("ab")), 3);
        assert_eq!(count_occurrences(&w(""), &w("ab")), 0);
    }

    #[test]
    fn nonoverlap_examples() {
        let c = verify_nonoverlapping(&w("aabaa"), &w("bbabb")).unwrap();
        assert!(c.ok);
        assert!(c.witness.is_none());

        let c = verify_nonoverlapping(&w("ab"), &w("ba")).unwrap();
        assert!(!c.ok);
        let wit = c.witness.unwrap();
        assert_eq!(wit.kind, OverlapKind::SuffixPrefix);
        assert_eq!(wit.first, w("ab"));
        assert_eq!(wit.second, w("ba"));
        assert_eq!(wit.shared, w("b"));

        let c = verify_nonoverlapping(&w("aabaa"), &w("aba")).unwrap();
        assert!(!c.ok);
        let wit = c.witness.unwrap();
        assert_eq!(wit.kind, OverlapKind::Factor);
        assert_eq!(wit.shared, w("aba"));
    }

    #[test]
    fn nonoverlap_preconditions() {
        assert!(matches!(
            verify_nonoverlapping(&w("abA"), &w("bbabb")),
            Err(WordError::NotCyclicallyReduced(_))
        ));
        assert!(matches!(
            verify_nonoverlapping(&w("ab"), &w("BA")),
            Err(WordError::Degenerate(_))
        ));
        assert_eq!(verify_nonoverlapping(&w(""), &w("b")), Err(WordError::Empty));
    }

    #[test]
    fn nonoverlap_family_m_ge_2() {
        for m in 2..6 {
            let u = w("a").pow(m).multiply(&w("b")).multiply(&w("a").pow(m));
            let v = w("b").pow(m).multiply(&w("a")).multiply(&w("b").pow(m));
            assert!(verify_nonoverlapping(&u, &v).unwrap().ok, "m = {m}");
        }
    }

    #[test]
    fn word_counts() {
        assert_eq!(words_of_length(2, 0).len(), 1);
        assert_eq!(words_of_length(2, 1).len(), 4);
        assert_eq!(words_of_length(2, 3).len(), 36);
        assert!(words_of_length(2, 4).iter().all(|x| x.len() == 4));
    }

    // All words of length <= 5 in rank 2: 1 + 4 + 12 + 36 + 108 + 324 = 485.
    fn all_short_words() -> Vec<Word> {
        (0..=5).flat_map(|n| words_of_length(2, n)).collect()
    }

    #[test]
    fn group_axioms_exhaustive_rank2_len5() {
        let ws = all_short_words();
        assert_eq!(ws.len(), 485);
        for x in &ws {
            assert_eq!(x.inverse().inverse(), *x);
            assert!(x.multiply(&x.inverse()).is_empty());
            assert!(x.inverse().multiply(x).is_empty());
        }
        // associativity over a thinned triple set to keep the run short
        let thin: Vec<&Word> = ws.iter().step_by(4).collect();
        for x in &thin {
            for y in &thin {
                let xy = x.multiply(y);
                assert!(xy.len() <= x.len() + y.len());
                for z in &thin {
                    assert_eq!(xy.multiply(z), x.multiply(&y.multiply(z)));
                }
            }
        }
    }

    #[test]
    fn nonoverlapping_patterns_never_share_positions() {
        let u = w("aabaa");
        let v = w("bbabb");
        let t = pattern_set(&u, &v);
        for n in 0..=9 {
            for host in words_of_length(2, n) {
                let occ = find_occurrences(&host, &t);
                for (i, a) in occ.iter().enumerate() {
                    for b in &occ[i + 1..] {
                        if a.pattern_id != b.pattern_id {
                            let a_end = a.start + t[a.pattern_id].len();
                            assert!(b.start >= a_end, "{host}: {a:?} {b:?}");
                        }
                    }
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn raw_letters() -> impl Strategy<Value = Vec<Letter>> {
            prop::collection::vec((1usize..=3, any::<bool>()), 0..24).prop_map(|v| {
                v.into_iter()
                    .map(|(g, inv)| Letter::new(g, inv).unwrap())
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn reduce_is_idempotent(s in raw_letters()) {
                let r = Word::reduce(&s);
                prop_assert_eq!(Word::reduce(r.letters()), r.clone());
                prop_assert!(r.len() <= s.len());
            }

            #[test]
            fn multiply_is_reduced_concatenation(a in raw_letters(), b in raw_letters()) {
                let x = Word::reduce(&a);
                let y = Word::reduce(&b);
                let cat: Vec<Letter> = x.letters().iter().chain(y.letters()).copied().collect();
                prop_assert_eq!(x.multiply(&y), Word::reduce(&cat));
                prop_assert!(x.multiply(&y).len() <= x.len() + y.len());
            }

            #[test]
            fn text_roundtrip(a in raw_letters()) {
                let x = Word::reduce(&a);
                prop_assert_eq!(Word::parse(&x.to_string()).unwrap(), x);
            }
        }
    }
}

//! Hereditarily finite sets: the decoded side of every coding in the crate.
//!
//! Values are kept extensional by construction: element vectors are sorted
//! and deduplicated, so structural equality is set equality and the derived
//! `Ord` gives a stable total order used for canonical enumerations.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HfError {
    #[error("set literal parse error at byte {pos}: {msg}")]
    Literal { pos: usize, msg: String },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HFSet {
    elems: Vec<HFSet>,
}

impl HFSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I: IntoIterator<Item = HFSet>>(items: I) -> Self {
        let mut elems: Vec<HFSet> = items.into_iter().collect();
        elems.sort();
        elems.dedup();
        HFSet { elems }
    }

    pub fn elems(&self) -> &[HFSet] {
        &self.elems
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn contains(&self, x: &HFSet) -> bool {
        self.elems.binary_search(x).is_ok()
    }

    pub fn insert(&mut self, x: HFSet) {
        if let Err(i) = self.elems.binary_search(&x) {
            self.elems.insert(i, x);
        }
    }

    pub fn is_subset(&self, other: &HFSet) -> bool {
        self.elems.iter().all(|e| other.contains(e))
    }

    pub fn union(&self, other: &HFSet) -> HFSet {
        HFSet::new(self.elems.iter().chain(other.elems.iter()).cloned())
    }

    /// Union of the elements: the set-theoretic union of this set.
    pub fn big_union(&self) -> HFSet {
        HFSet::new(self.elems.iter().flat_map(|e| e.elems.iter().cloned()))
    }

    pub fn singleton(x: HFSet) -> HFSet {
        HFSet { elems: vec![x] }
    }

    /// Von Neumann numeral n = {0, 1, ..., n-1}.
    pub fn vn(n: usize) -> HFSet {
        let mut cur = HFSet::empty();
        let mut all: Vec<HFSet> = Vec::with_capacity(n);
        for _ in 0..n {
            all.push(cur.clone());
            cur = HFSet::new(all.iter().cloned());
        }
        cur
    }

    /// If this set is a von Neumann numeral, its value.
    pub fn as_vn(&self) -> Option<usize> {
        let n = self.elems.len();
        (*self == HFSet::vn(n)).then_some(n)
    }

    /// Kuratowski pair {{a}, {a, b}}.
    pub fn kpair(a: HFSet, b: HFSet) -> HFSet {
        let first = HFSet::singleton(a.clone());
        let both = HFSet::new([a, b]);
        HFSet::new([first, both])
    }

    /// Decomposes a Kuratowski pair.
    pub fn as_kpair(&self) -> Option<(HFSet, HFSet)> {
        match self.elems.as_slice() {
            [x] => {
                // {{a}} encodes the pair (a, a).
                match x.elems.as_slice() {
                    [a] => Some((a.clone(), a.clone())),
                    _ => None,
                }
            }
            [x, y] => {
                let (small, big) = if x.len() <= y.len() { (x, y) } else { (y, x) };
                match (small.elems.as_slice(), big.elems.as_slice()) {
                    ([a], [p, q]) if p == a || q == a => {
                        let b = if p == a { q } else { p };
                        Some((a.clone(), b.clone()))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Tuple object: the function {<i, x_i> : i < n} with numeral indices.
    pub fn seq_object(items: &[HFSet]) -> HFSet {
        HFSet::new(
            items
                .iter()
                .enumerate()
                .map(|(i, x)| HFSet::kpair(HFSet::vn(i), x.clone())),
        )
    }

    /// Decomposes a tuple object of any arity (including 0).
    pub fn as_seq(&self) -> Option<Vec<HFSet>> {
        let mut slots: Vec<Option<HFSet>> = vec![None; self.elems.len()];
        for e in &self.elems {
            let (i, x) = e.as_kpair()?;
            let idx = i.as_vn()?;
            if idx >= slots.len() {
                return None;
            }
            match &slots[idx] {
                Some(_) => return None,
                None => slots[idx] = Some(x),
            }
        }
        slots.into_iter().collect()
    }

    pub fn rank(&self) -> usize {
        self.elems.iter().map(|e| e.rank() + 1).max().unwrap_or(0)
    }

    /// Transitive closure, excluding the set itself, canonically ordered.
    pub fn tc(&self) -> Vec<HFSet> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<&HFSet> = self.elems.iter().collect();
        while let Some(s) = stack.pop() {
            if seen.insert(s.clone()) {
                stack.extend(s.elems.iter());
            }
        }
        let mut out: Vec<HFSet> = seen.into_iter().collect();
        sort_canonical(&mut out);
        out
    }

    pub fn powerset(&self) -> Vec<HFSet> {
        let n = self.elems.len();
        assert!(n <= 16, "powerset beyond desk scale");
        (0..(1usize << n))
            .map(|mask| {
                HFSet::new(
                    self.elems
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, e)| e.clone()),
                )
            })
            .collect()
    }
}

/// Rank-first canonical order used for all universe enumerations.
pub fn sort_canonical(items: &mut [HFSet]) {
    items.sort_by(|a, b| a.rank().cmp(&b.rank()).then_with(|| a.cmp(b)));
}

/// The cumulative level V_n as a canonically ordered list. |V_0| = 1 would
/// count the empty level; here V_n is the set of sets of rank < n, so
/// |V_1| = 1, |V_2| = 2, |V_3| = 4, |V_4| = 16.
pub fn v_level(n: usize) -> Vec<HFSet> {
    let mut level = vec![HFSet::empty()];
    for _ in 1..n {
        let ground = HFSet::new(level.iter().cloned());
        level = ground.powerset();
    }
    sort_canonical(&mut level);
    level
}

impl fmt::Display for HFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for HFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses a set literal: `{}`, `{{}}`, `{{},{{}}}`.
pub fn parse_hfset(s: &str) -> Result<HFSet, HfError> {
    let bytes = s.as_bytes();
    let mut pos = 0usize;
    let v = parse_set_at(bytes, &mut pos)?;
    skip_ws(bytes, &mut pos);
    if pos != bytes.len() {
        return Err(HfError::Literal { pos, msg: "trailing input".into() });
    }
    Ok(v)
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while bytes.get(*pos).is_some_and(|b| b.is_ascii_whitespace()) {
        *pos += 1;
    }
}

fn parse_set_at(bytes: &[u8], pos: &mut usize) -> Result<HFSet, HfError> {
    skip_ws(bytes, pos);
    if bytes.get(*pos) != Some(&b'{') {
        return Err(HfError::Literal { pos: *pos, msg: "expected '{'".into() });
    }
    *pos += 1;
    let mut elems = Vec::new();
    loop {
        skip_ws(bytes, pos);
        match bytes.get(*pos) {
            Some(b'}') => {
                *pos += 1;
                return Ok(HFSet::new(elems));
            }
            Some(b'{') => {
                elems.push(parse_set_at(bytes, pos)?);
                skip_ws(bytes, pos);
                match bytes.get(*pos) {
                    Some(b',') => *pos += 1,
                    Some(b'}') => {}
                    _ => {
                        return Err(HfError::Literal {
                            pos: *pos,
                            msg: "expected ',' or '}'".into(),
                        })
                    }
                }
            }
            _ => {
                return Err(HfError::Literal {
                    pos: *pos,
                    msg: "expected '{' or '}'".into(),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e() -> HFSet {
        HFSet::empty()
    }

    #[test]
    fn extensionality_by_construction() {
        let a = HFSet::new([e(), HFSet::singleton(e()), e()]);
        let b = HFSet::new([HFSet::singleton(e()), e()]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn numerals() {
        assert_eq!(HFSet::vn(0), e());
        assert_eq!(HFSet::vn(1), HFSet::singleton(e()));
        assert_eq!(HFSet::vn(2).len(), 2);
        for n in 0..6 {
            assert_eq!(HFSet::vn(n).as_vn(), Some(n));
            assert_eq!(HFSet::vn(n).rank(), n);
        }
        // {1} is not a numeral.
        assert_eq!(HFSet::singleton(HFSet::vn(1)).as_vn(), None);
    }

    #[test]
    fn kuratowski_pairs() {
        let a = HFSet::vn(1);
        let b = HFSet::vn(2);
        let p = HFSet::kpair(a.clone(), b.clone());
        assert_eq!(p.as_kpair(), Some((a.clone(), b.clone())));
        let q = HFSet::kpair(a.clone(), a.clone());
        assert_eq!(q.len(), 1);
        assert_eq!(q.as_kpair(), Some((a.clone(), a.clone())));
        // Order matters.
        let r = HFSet::kpair(b.clone(), a.clone());
        assert_eq!(r.as_kpair(), Some((b, a)));
        // Non-pairs decode to None.
        assert_eq!(e().as_kpair(), None);
        assert_eq!(HFSet::vn(3).as_kpair(), None);
    }

    #[test]
    fn tuple_objects() {
        let items = [e(), HFSet::vn(2), HFSet::singleton(HFSet::vn(1))];
        let t = HFSet::seq_object(&items);
        assert_eq!(t.as_seq().unwrap(), items.to_vec());
        assert_eq!(HFSet::seq_object(&[]).as_seq().unwrap(), Vec::<HFSet>::new());
        // A duplicated index is not a tuple.
        let bad = HFSet::new([
            HFSet::kpair(HFSet::vn(0), e()),
            HFSet::kpair(HFSet::vn(0), HFSet::vn(1)),
        ]);
        assert_eq!(bad.as_seq(), None);
        // An index gap is not a tuple.
        let gap = HFSet::new([HFSet::kpair(HFSet::vn(1), e())]);
        assert_eq!(gap.as_seq(), None);
    }

    #[test]
    fn rank_and_tc() {
        let two = HFSet::vn(2);
        assert_eq!(two.rank(), 2);
        let tc = two.tc();
        assert_eq!(tc, vec![e(), HFSet::vn(1)]);
        let pair = HFSet::kpair(e(), HFSet::vn(1));
        // tc = {0}, {0,{0}} elements flattened: 0, {0}, {0} union...
        assert!(pair.tc().contains(&e()));
        assert!(pair.tc().contains(&HFSet::vn(1)));
    }

    #[test]
    fn v_level_sizes() {
        assert_eq!(v_level(1).len(), 1);
        assert_eq!(v_level(2).len(), 2);
        assert_eq!(v_level(3).len(), 4);
        assert_eq!(v_level(4).len(), 16);
        // Transitive: every element of a member is a member.
        let v4 = v_level(4);
        for s in &v4 {
            for x in s.elems() {
                assert!(v4.contains(x));
            }
        }
        // Canonical order is rank-first.
        let ranks: Vec<usize> = v4.iter().map(|s| s.rank()).collect();
        let mut sorted = ranks.clone();
        sorted.sort();
        assert_eq!(ranks, sorted);
    }

    #[test]
    fn literal_roundtrip() {
        for text in ["{}", "{{}}", "{{},{{}}}", "{{{}},{{},{{}}}}"] {
            let v = parse_hfset(text).unwrap();
            assert_eq!(v.to_string(), text);
        }
        assert_eq!(parse_hfset("{}").unwrap(), e());
        assert_eq!(parse_hfset("{ { } , { { } } }").unwrap(), HFSet::vn(2));
        for bad in ["", "{", "}", "{}}", "{,}", "{a}"] {
            assert!(parse_hfset(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn union_operations() {
        let a = HFSet::new([e(), HFSet::vn(1)]);
        let b = HFSet::new([HFSet::vn(1), HFSet::vn(2)]);
        assert_eq!(a.union(&b).len(), 3);
        let nested = HFSet::new([a.clone(), b.clone()]);
        assert_eq!(nested.big_union(), a.union(&b));
        assert!(a.is_subset(&a.union(&b)));
    }
}

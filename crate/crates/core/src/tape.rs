//! Transfinite bit tapes and the codings of ordinal sets on them.
//!
//! A tape is a 0/1-valued function on an initial segment of the ordinals,
//! represented symbolically: a set of isolated 1 positions plus a set of
//! `(01)^w` blocks, each covering an omega-length interval. This closes the
//! representation under every coding used here while staying exact.
//!
//! Codings (least significant structure first):
//!   set code      member bit at 2*a+1 for each member a, then the
//!                 terminator 11 at b+1, b+2 where b = sup(2*a+2);
//!   pair <a, X>   set code of X, then a zeros, then a single 1;
//!   sequence      concatenated pair codes, closed by 1111.
//!
//! Decoding scans for the least adjacent 11 pair, so arbitrary bits after a
//! well-formed code never change its meaning.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ordinal::{ord_sup, Ordinal, OrdinalBound, OrdinalError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TapeError {
    #[error("malformed code: {0}")]
    Malformed(String),
    #[error("operation needs a finite set but the set has an infinite block")]
    InfiniteSet,
    #[error("sequence index {index} out of range (length {len})")]
    IndexOutOfRange { index: u64, len: u64 },
    #[error("tape has no token rendering: {0}")]
    PrintUnsupported(String),
    #[error("tape literal parse error at byte {pos}: {msg}")]
    Literal { pos: usize, msg: String },
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

type Result<T> = std::result::Result<T, TapeError>;

/// Position of the member bit for ordinal `a`: 2*a + 1 (ordinal product,
/// so limits are fixed: 2*w = w).
pub fn member_position(a: &Ordinal) -> Ordinal {
    double(a).succ()
}

/// 2*a as an ordinal product: limit part fixed, finite part doubled.
fn double(a: &Ordinal) -> Ordinal {
    a.limit_part().add(&Ordinal::nat(2 * a.finite_part()))
}

/// Inverse of `member_position` when the finite part is odd.
fn member_of_position(p: &Ordinal) -> Option<Ordinal> {
    let f = p.finite_part();
    if f % 2 == 1 {
        Some(p.limit_part().add(&Ordinal::nat((f - 1) / 2)))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Sets of ordinals representable on a tape: finitely many omega-length rows
// plus finitely many isolated elements.
// ---------------------------------------------------------------------------

/// A set of ordinals built from full rows `[r, r+w)` and single elements.
/// Canonical: rows have distinct limit parts (least start wins) and no
/// single lies inside a row.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct OrdSet {
    rows: BTreeSet<Ordinal>,
    singles: BTreeSet<Ordinal>,
}

impl OrdSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_elems<I: IntoIterator<Item = Ordinal>>(items: I) -> Self {
        let mut s = Self::empty();
        for o in items {
            s.insert(o);
        }
        s
    }

    /// The set of all ordinals below w.
    pub fn below_omega() -> Self {
        let mut s = Self::empty();
        s.insert_row(Ordinal::zero());
        s
    }

    fn row_covering(&self, a: &Ordinal) -> Option<&Ordinal> {
        let la = a.limit_part();
        self.rows.iter().find(|r| r.limit_part() == la && **r <= *a)
    }

    pub fn contains(&self, a: &Ordinal) -> bool {
        self.singles.contains(a) || self.row_covering(a).is_some()
    }

    pub fn insert(&mut self, a: Ordinal) {
        if self.row_covering(&a).is_none() {
            self.singles.insert(a);
        }
    }

    /// Adds the full interval [start, start + w).
    pub fn insert_row(&mut self, start: Ordinal) {
        let l = start.limit_part();
        if let Some(existing) = self.rows.iter().find(|r| r.limit_part() == l).cloned() {
            if existing <= start {
                return;
            }
            self.rows.remove(&existing);
        }
        self.singles
            .retain(|s| !(s.limit_part() == l && *s >= start));
        self.rows.insert(start);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.singles.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.rows.is_empty()
    }

    /// All elements, smallest first; refuses infinite sets.
    pub fn elements(&self) -> Result<Vec<Ordinal>> {
        if !self.is_finite() {
            return Err(TapeError::InfiniteSet);
        }
        Ok(self.singles.iter().cloned().collect())
    }

    pub fn rows(&self) -> impl Iterator<Item = &Ordinal> {
        self.rows.iter()
    }

    pub fn singles(&self) -> impl Iterator<Item = &Ordinal> {
        self.singles.iter()
    }

    /// Inserts the interval [a, b), decomposed into rows and singles.
    /// Desk-scale caps keep the representation small: at most 64 rows and
    /// 4096 singles per interval.
    pub fn insert_interval(&mut self, a: &Ordinal, b: &Ordinal) -> Result<()> {
        let mut cur = a.clone();
        let mut rows_added = 0u32;
        while cur < *b {
            if cur.limit_part() == b.limit_part() {
                let span = cur.sub_from(b).expect("cur < b").finite_part();
                if span > 4096 {
                    return Err(OrdinalError::Unrepresentable(
                        "interval with more than 4096 isolated elements",
                    )
                    .into());
                }
                for i in 0..span {
                    self.insert(cur.add(&Ordinal::nat(i)));
                }
                break;
            }
            self.insert_row(cur.clone());
            cur = cur.limit_part().add(&Ordinal::omega());
            rows_added += 1;
            if rows_added > 64 {
                return Err(OrdinalError::Unrepresentable(
                    "interval spanning more than 64 omega-rows",
                )
                .into());
            }
        }
        Ok(())
    }
}

impl fmt::Display for OrdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(Ordinal, String)> = Vec::new();
        for r in &self.rows {
            let end = r.limit_part().add(&Ordinal::omega());
            parts.push((r.clone(), format!("{r}..{end}")));
        }
        for s in &self.singles {
            parts.push((s.clone(), s.to_string()));
        }
        parts.sort();
        let body: Vec<String> = parts.into_iter().map(|(_, t)| t).collect();
        write!(f, "{{{}}}", body.join(","))
    }
}

/// Parses an ordinal-set literal: `{}`, `{0,2,w+1}`, `{0..w}`, `{..w,w}`.
/// An item `x..y` denotes the interval [x, y); `..y` abbreviates `0..y`.
pub fn parse_ordset(s: &str) -> Result<OrdSet> {
    let t = s.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| TapeError::Literal {
            pos: 0,
            msg: "expected a {...} set literal".into(),
        })?;
    let mut set = OrdSet::empty();
    for raw in inner.split(',') {
        let item = raw.trim();
        if item.is_empty() {
            if inner.trim().is_empty() {
                break;
            }
            return Err(TapeError::Literal {
                pos: 0,
                msg: "empty item in set literal".into(),
            });
        }
        if let Some(idx) = item.find("..") {
            let (lo, hi) = item.split_at(idx);
            let hi = &hi[2..];
            let a = if lo.trim().is_empty() {
                Ordinal::zero()
            } else {
                crate::ordinal::parse_ordinal(lo.trim())?
            };
            let b = crate::ordinal::parse_ordinal(hi.trim())?;
            set.insert_interval(&a, &b)?;
        } else {
            set.insert(crate::ordinal::parse_ordinal(item)?);
        }
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// Tapes.
// ---------------------------------------------------------------------------

/// A bit tape over an ordinal-length domain. `ones` are isolated 1 cells;
/// each element of `blocks` is the start of a `(01)^w` block covering
/// [start, start+w) with 1s at odd offsets. Invariants: blocks are disjoint,
/// no isolated 1 lies inside a block, and everything sits below `length`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BitTape {
    ones: BTreeSet<Ordinal>,
    blocks: BTreeSet<Ordinal>,
    length: Ordinal,
}

impl BitTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn length(&self) -> &Ordinal {
        &self.length
    }

    fn block_covering(&self, p: &Ordinal) -> Option<&Ordinal> {
        let lp = p.limit_part();
        self.blocks
            .iter()
            .find(|s| is_in_block(s, &lp, p))
    }

    /// The bit at position `p` (0 beyond the length).
    pub fn bit(&self, p: &Ordinal) -> bool {
        if self.ones.contains(p) {
            return true;
        }
        match self.block_covering(p) {
            Some(s) => {
                let off = s.sub_from(p).expect("p inside block").finite_part();
                off % 2 == 1
            }
            None => false,
        }
    }

    fn ensure_len(&mut self, beyond: &Ordinal) {
        if self.length <= *beyond {
            self.length = beyond.succ();
        }
    }

    pub fn set_one(&mut self, p: Ordinal) {
        self.ensure_len(&p);
        if self.block_covering(&p).is_none() {
            self.ones.insert(p);
        }
    }

    /// Installs a `(01)^w` block at `start`, absorbing isolated cells in its
    /// range. Overlapping distinct blocks are a caller bug.
    pub fn set_block(&mut self, start: Ordinal) {
        let l = start.limit_part();
        let end = l.add(&Ordinal::omega());
        assert!(
            !self
                .blocks
                .iter()
                .any(|s| s.limit_part() == l && *s != start),
            "overlapping (01)^w blocks"
        );
        self.ones
            .retain(|p| !(p.limit_part() == l && *p >= start));
        self.blocks.insert(start.clone());
        if self.length < end {
            self.length = end;
        }
    }

    /// Extends the length to at least `len` (trailing zeros).
    pub fn pad_to(&mut self, len: &Ordinal) {
        if self.length < *len {
            self.length = len.clone();
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = &Ordinal> {
        self.ones.iter()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Ordinal> {
        self.blocks.iter()
    }

    /// Appends `other`, shifting its positions by this tape's length.
    pub fn concat(&mut self, other: &BitTape) {
        let off = self.length.clone();
        for p in &other.ones {
            self.ones.insert(off.add(p));
        }
        for s in &other.blocks {
            self.blocks.insert(off.add(s));
        }
        self.length = off.add(&other.length);
    }

    /// The sub-tape [start, end), rebased to position 0. Fails if a block
    /// straddles either boundary.
    pub fn slice(&self, start: &Ordinal, end: &Ordinal) -> Result<BitTape> {
        let mut out = BitTape::new();
        for s in &self.blocks {
            let top = s.limit_part().add(&Ordinal::omega());
            if top <= *start || *s >= *end {
                continue;
            }
            if *s < *start || top > *end {
                return Err(TapeError::Malformed(
                    "block straddles a slice boundary".into(),
                ));
            }
            out.blocks.insert(start.sub_from(s).expect("s >= start"));
        }
        for p in &self.ones {
            if *p >= *start && *p < *end {
                out.ones.insert(start.sub_from(p).expect("p >= start"));
            }
        }
        out.length = start.sub_from(end).unwrap_or_else(|_| Ordinal::zero());
        Ok(out)
    }

    /// Least position >= `from` holding a 1, if any.
    pub fn next_one(&self, from: &Ordinal) -> Option<Ordinal> {
        let single = self.ones.iter().find(|p| **p >= *from).cloned();
        let mut block_hit: Option<Ordinal> = None;
        for s in &self.blocks {
            let top = s.limit_part().add(&Ordinal::omega());
            if top <= *from {
                continue;
            }
            let first = if *s >= *from {
                s.succ()
            } else {
                // Inside the block: next odd offset at or after `from`.
                let off = s.sub_from(from).expect("from > s").finite_part();
                let odd = if off % 2 == 1 { off } else { off + 1 };
                s.add(&Ordinal::nat(odd))
            };
            if first < top {
                block_hit = Some(match block_hit {
                    Some(b) if b <= first => b,
                    _ => first,
                });
            }
        }
        match (single, block_hit) {
            (None, b) => b,
            (s, None) => s,
            (Some(s), Some(b)) => Some(if s <= b { s } else { b }),
        }
    }

    /// Least position p >= `from` with bits 1 at both p and p+1. Inside
    /// well-formed codes this is always a pair of isolated cells.
    pub fn first_adjacent_ones(&self, from: &Ordinal) -> Option<Ordinal> {
        let mut prev: Option<&Ordinal> = None;
        for p in self.ones.iter() {
            if let Some(q) = prev {
                if q.succ() == *p && *q >= *from {
                    return Some(q.clone());
                }
            }
            prev = Some(p);
        }
        None
    }
}

fn is_in_block(start: &Ordinal, p_limit: &Ordinal, p: &Ordinal) -> bool {
    start.limit_part() == *p_limit && *start <= *p
}

// ---------------------------------------------------------------------------
// Tape literals: tokens 0, 1, (01)^w, (0)^w concatenated left to right.
// ---------------------------------------------------------------------------

pub fn parse_tape(s: &str) -> Result<BitTape> {
    let bytes = s.as_bytes();
    let mut tape = BitTape::new();
    let mut cursor = Ordinal::zero();
    let mut i = 0usize;
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' => i += 1,
            b'0' => {
                cursor = cursor.succ();
                i += 1;
            }
            b'1' => {
                tape.set_one(cursor.clone());
                cursor = cursor.succ();
                i += 1;
            }
            b'(' => {
                let rest = &s[i..];
                if let Some(r) = rest.strip_prefix("(01)^w") {
                    tape.set_block(cursor.clone());
                    cursor = cursor.limit_part().add(&Ordinal::omega());
                    i = s.len() - r.len();
                } else if let Some(r) = rest.strip_prefix("(0)^w") {
                    cursor = cursor.limit_part().add(&Ordinal::omega());
                    i = s.len() - r.len();
                } else {
                    return Err(TapeError::Literal {
                        pos: i,
                        msg: "expected (01)^w or (0)^w".into(),
                    });
                }
            }
            _ => {
                return Err(TapeError::Literal {
                    pos: i,
                    msg: "expected 0, 1, (01)^w or (0)^w".into(),
                })
            }
        }
    }
    if tape.length < cursor {
        tape.length = cursor;
    }
    Ok(tape)
}

impl BitTape {
    /// Token rendering, built by walking the gaps between 1 cells. Tapes
    /// whose zero gaps span w^2 or more have no rendering in this language.
    pub fn to_token_string(&self) -> Result<String> {
        let mut events: Vec<(Ordinal, bool)> = Vec::new();
        for p in &self.ones {
            events.push((p.clone(), false));
        }
        for s in &self.blocks {
            events.push((s.clone(), true));
        }
        events.sort();
        let mut out = String::new();
        let mut cursor = Ordinal::zero();
        for (p, is_block) in events {
            write_zero_gap(&mut out, &cursor, &p)?;
            if is_block {
                out.push_str("(01)^w");
                cursor = p.limit_part().add(&Ordinal::omega());
            } else {
                out.push('1');
                cursor = p.succ();
            }
        }
        write_zero_gap(&mut out, &cursor, &self.length)?;
        Ok(out)
    }
}

fn write_zero_gap(out: &mut String, from: &Ordinal, to: &Ordinal) -> Result<()> {
    if to < from {
        return Err(TapeError::Malformed("events beyond tape length".into()));
    }
    let gap = from.sub_from(to).expect("to >= from");
    let limit = gap.limit_part();
    if !limit.is_zero() {
        let rows = omega_multiple(&limit).ok_or_else(|| {
            TapeError::PrintUnsupported(format!("zero gap of length {gap}"))
        })?;
        for _ in 0..rows {
            out.push_str("(0)^w");
        }
    }
    let f = gap.finite_part();
    if f > 1 << 16 {
        return Err(TapeError::PrintUnsupported(format!(
            "zero gap of finite length {f}"
        )));
    }
    for _ in 0..f {
        out.push('0');
    }
    Ok(())
}

/// If `l` = w * k for small finite k, returns k.
fn omega_multiple(l: &Ordinal) -> Option<u64> {
    let omega = Ordinal::omega();
    let mut count = 0u64;
    let mut acc = Ordinal::zero();
    while acc < *l {
        acc = acc.add(&omega);
        count += 1;
        if count > 64 {
            return None;
        }
    }
    (acc == *l).then_some(count)
}

// ---------------------------------------------------------------------------
// Set codes.
// ---------------------------------------------------------------------------

/// Supremum of 2*a + 2 over the members: the start of the terminator block.
fn code_sup(set: &OrdSet) -> Ordinal {
    let mut cands: Vec<Ordinal> = Vec::new();
    for s in set.singles() {
        cands.push(double(s).add(&Ordinal::nat(2)));
    }
    for r in set.rows() {
        cands.push(r.limit_part().add(&Ordinal::omega()));
    }
    ord_sup(cands.iter())
}

/// Encodes a set of ordinals: 1 at 2*a+1 per member, terminator 11 at
/// b+1, b+2, total length b+3.
pub fn encode_ordset(set: &OrdSet, bound: &OrdinalBound) -> Result<BitTape> {
    let beta = code_sup(set);
    let mut tape = BitTape::new();
    for r in set.rows() {
        tape.set_block(double(r));
    }
    for s in set.singles() {
        tape.set_one(member_position(s));
    }
    tape.set_one(beta.succ());
    tape.set_one(beta.add(&Ordinal::nat(2)));
    tape.length = beta.add(&Ordinal::nat(3));
    bound.check(tape.length.clone())?;
    Ok(tape)
}

/// Outcome of decoding a set-code prefix: the set, the terminator base b,
/// and the prefix length b+3.
struct SetPrefix {
    set: OrdSet,
    consumed: Ordinal,
}

fn decode_set_prefix(tape: &BitTape) -> Result<SetPrefix> {
    let q = tape
        .first_adjacent_ones(&Ordinal::zero())
        .ok_or_else(|| TapeError::Malformed("no 11 terminator found".into()))?;
    let beta = q
        .pred()
        .ok_or_else(|| TapeError::Malformed("terminator at position 0".into()))?;
    if tape.bit(&beta) {
        return Err(TapeError::Malformed(
            "cell before the terminator must be 0".into(),
        ));
    }
    let mut set = OrdSet::empty();
    for s in tape.blocks() {
        let top = s.limit_part().add(&Ordinal::omega());
        if *s >= beta {
            continue;
        }
        if top > beta {
            return Err(TapeError::Malformed(
                "block straddles the terminator".into(),
            ));
        }
        if s.finite_part() % 2 != 0 {
            return Err(TapeError::Malformed(
                "member block at an odd position".into(),
            ));
        }
        let row = s.limit_part().add(&Ordinal::nat(s.finite_part() / 2));
        set.insert_row(row);
    }
    for p in tape.ones() {
        if *p >= beta {
            continue;
        }
        match member_of_position(p) {
            Some(a) => set.insert(a),
            None => {
                return Err(TapeError::Malformed(format!(
                    "member bit at even position {p}"
                )))
            }
        }
    }
    Ok(SetPrefix {
        set,
        consumed: beta.add(&Ordinal::nat(3)),
    })
}

/// Decodes a set code, ignoring any bits beyond the terminator.
pub fn decode_ordset(tape: &BitTape) -> Result<OrdSet> {
    let p = decode_set_prefix(tape)?;
    // Bits beyond the prefix are deliberately ignored; blocks straddling
    // the terminator were already rejected.
    Ok(p.set)
}

/// Membership test straight off the tape: the member bit of `a` is set and
/// lies below the terminator.
pub fn tape_member(a: &Ordinal, tape: &BitTape) -> Result<bool> {
    let q = tape
        .first_adjacent_ones(&Ordinal::zero())
        .ok_or_else(|| TapeError::Malformed("no 11 terminator found".into()))?;
    let beta = q
        .pred()
        .ok_or_else(|| TapeError::Malformed("terminator at position 0".into()))?;
    let p = member_position(a);
    Ok(p < beta && tape.bit(&p))
}

// ---------------------------------------------------------------------------
// Pair codes <a, X> with a an ordinal, X a set of ordinals.
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LowPair {
    pub index: Ordinal,
    pub set: OrdSet,
}

pub fn encode_lowpair(pair: &LowPair, bound: &OrdinalBound) -> Result<BitTape> {
    let mut tape = encode_ordset(&pair.set, bound)?;
    let mark = tape.length.add(&pair.index);
    tape.set_one(mark.clone());
    tape.length = mark.succ();
    bound.check(tape.length.clone())?;
    Ok(tape)
}

struct PairPrefix {
    pair: LowPair,
    consumed: Ordinal,
}

fn decode_pair_prefix(tape: &BitTape) -> Result<PairPrefix> {
    let sp = decode_set_prefix(tape)?;
    let mark = tape.next_one(&sp.consumed).ok_or_else(|| {
        TapeError::Malformed("pair code missing its index mark".into())
    })?;
    let index = sp.consumed.sub_from(&mark).expect("mark >= prefix end");
    Ok(PairPrefix {
        pair: LowPair { index, set: sp.set },
        consumed: mark.succ(),
    })
}

pub fn decode_lowpair(tape: &BitTape) -> Result<LowPair> {
    Ok(decode_pair_prefix(tape)?.pair)
}

// ---------------------------------------------------------------------------
// Sequence codes: concatenated pair codes closed by 1111.
// ---------------------------------------------------------------------------

pub fn encode_seq(items: &[LowPair], bound: &OrdinalBound) -> Result<BitTape> {
    let mut tape = BitTape::new();
    for item in items {
        let part = encode_lowpair(item, bound)?;
        tape.concat(&part);
    }
    let base = tape.length.clone();
    for i in 0..4 {
        tape.set_one(base.add(&Ordinal::nat(i)));
    }
    tape.length = base.add(&Ordinal::nat(4));
    bound.check(tape.length.clone())?;
    Ok(tape)
}

/// Decodes a sequence code, ignoring bits beyond the closing 1111.
pub fn decode_seq(tape: &BitTape) -> Result<Vec<LowPair>> {
    let mut items = Vec::new();
    let mut cursor = Ordinal::zero();
    loop {
        if tape.bit(&cursor) {
            for i in 1..4u64 {
                if !tape.bit(&cursor.add(&Ordinal::nat(i))) {
                    return Err(TapeError::Malformed(
                        "sequence closer must be 1111".into(),
                    ));
                }
            }
            return Ok(items);
        }
        if cursor >= tape.length {
            return Err(TapeError::Malformed(
                "sequence ran past the end of the tape".into(),
            ));
        }
        let rest = tape.slice(&cursor, &tape.length)?;
        let pp = decode_pair_prefix(&rest)?;
        items.push(pp.pair);
        cursor = cursor.add(&pp.consumed);
        if items.len() > 1 << 16 {
            return Err(TapeError::Malformed("sequence too long".into()));
        }
    }
}

pub fn seq_len(tape: &BitTape) -> Result<u64> {
    Ok(decode_seq(tape)?.len() as u64)
}

pub fn seq_index(tape: &BitTape, i: u64) -> Result<LowPair> {
    let items = decode_seq(tape)?;
    let len = items.len() as u64;
    items
        .into_iter()
        .nth(i as usize)
        .ok_or(TapeError::IndexOutOfRange { index: i, len })
}

pub fn seq_append(tape: &BitTape, item: &LowPair, bound: &OrdinalBound) -> Result<BitTape> {
    let mut items = decode_seq(tape)?;
    items.push(item.clone());
    encode_seq(&items, bound)
}

pub fn seq_remove(tape: &BitTape, i: u64, bound: &OrdinalBound) -> Result<BitTape> {
    let mut items = decode_seq(tape)?;
    let len = items.len() as u64;
    if i >= len {
        return Err(TapeError::IndexOutOfRange { index: i, len });
    }
    items.remove(i as usize);
    encode_seq(&items, bound)
}

// ---------------------------------------------------------------------------
// Set-level operations that ride on the codes.
// ---------------------------------------------------------------------------

/// Image of a coded finite set under `f`, re-encoded.
pub fn tape_image<F>(tape: &BitTape, bound: &OrdinalBound, mut f: F) -> Result<BitTape>
where
    F: FnMut(&Ordinal) -> Result<Ordinal>,
{
    let set = decode_ordset(tape)?;
    let elems = set.elements()?;
    let mut out = OrdSet::empty();
    for e in &elems {
        out.insert(f(e)?);
    }
    encode_ordset(&out, bound)
}

/// Least member of a coded finite set satisfying `pred`, if any.
pub fn tape_bounded_search<P>(tape: &BitTape, mut pred: P) -> Result<Option<Ordinal>>
where
    P: FnMut(&Ordinal) -> Result<bool>,
{
    let set = decode_ordset(tape)?;
    for e in set.elements()? {
        if pred(&e)? {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::parse_ordinal;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn n(v: u64) -> Ordinal {
        Ordinal::nat(v)
    }

    fn w() -> Ordinal {
        Ordinal::omega()
    }

    fn bound() -> OrdinalBound {
        OrdinalBound::default()
    }

    fn set_of(items: &[u64]) -> OrdSet {
        OrdSet::from_elems(items.iter().map(|v| n(*v)))
    }

    #[test]
    fn empty_set_code_is_011() {
        let t = encode_ordset(&OrdSet::empty(), &bound()).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "011");
        assert_eq!(decode_ordset(&t).unwrap(), OrdSet::empty());
    }

    #[test]
    fn singleton_zero_code_is_01011() {
        let t = encode_ordset(&set_of(&[0]), &bound()).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "01011");
        assert_eq!(decode_ordset(&t).unwrap(), set_of(&[0]));
    }

    #[test]
    fn omega_code_is_block_then_011() {
        let t = encode_ordset(&OrdSet::below_omega(), &bound()).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "(01)^w011");
        assert_eq!(t.length, w().add(&n(3)));
        assert_eq!(decode_ordset(&t).unwrap(), OrdSet::below_omega());
    }

    #[test]
    fn infinite_member_positions() {
        // {w}: member bit at w+1, terminator from beta = w+2.
        let mut s = OrdSet::empty();
        s.insert(w());
        let t = encode_ordset(&s, &bound()).unwrap();
        assert!(t.bit(&w().add(&n(1))));
        assert!(!t.bit(&w()));
        assert!(t.bit(&w().add(&n(3))));
        assert!(t.bit(&w().add(&n(4))));
        assert_eq!(t.length, w().add(&n(5)));
        assert_eq!(decode_ordset(&t).unwrap(), s);
    }

    #[test]
    fn pair_codes_match_fixed_examples() {
        let b = bound();
        let p = |index: u64, set: OrdSet| LowPair { index: n(index), set };
        let t = encode_lowpair(&p(0, OrdSet::empty()), &b).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "0111");
        let t = encode_lowpair(&p(2, OrdSet::empty()), &b).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "011001");
        let t = encode_lowpair(&p(0, set_of(&[0])), &b).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "010111");
        for (i, s) in [(0u64, set_of(&[])), (5, set_of(&[1, 3])), (2, set_of(&[0]))] {
            let pair = p(i, s);
            let t = encode_lowpair(&pair, &b).unwrap();
            assert_eq!(decode_lowpair(&t).unwrap(), pair);
        }
    }

    #[test]
    fn empty_sequence_is_1111() {
        let t = encode_seq(&[], &bound()).unwrap();
        assert_eq!(t.to_token_string().unwrap(), "1111");
        assert_eq!(decode_seq(&t).unwrap(), Vec::new());
    }

    #[test]
    fn append_to_empty_sequence() {
        let t = encode_seq(&[], &bound()).unwrap();
        let item = LowPair { index: n(0), set: OrdSet::empty() };
        let t2 = seq_append(&t, &item, &bound()).unwrap();
        assert_eq!(t2.to_token_string().unwrap(), "01111111");
        assert_eq!(decode_seq(&t2).unwrap(), vec![item]);
    }

    #[test]
    fn sequence_roundtrip_and_index() {
        let b = bound();
        let items = vec![
            LowPair { index: n(3), set: set_of(&[1, 4]) },
            LowPair { index: w(), set: OrdSet::below_omega() },
            LowPair { index: n(0), set: set_of(&[2]) },
        ];
        let t = encode_seq(&items, &b).unwrap();
        assert_eq!(decode_seq(&t).unwrap(), items);
        assert_eq!(seq_len(&t).unwrap(), 3);
        for (i, item) in items.iter().enumerate() {
            assert_eq!(&seq_index(&t, i as u64).unwrap(), item);
        }
        assert!(matches!(
            seq_index(&t, 3),
            Err(TapeError::IndexOutOfRange { index: 3, len: 3 })
        ));
        let t2 = seq_remove(&t, 1, &b).unwrap();
        assert_eq!(
            decode_seq(&t2).unwrap(),
            vec![items[0].clone(), items[2].clone()]
        );
    }

    #[test]
    fn decoding_ignores_trailing_bits() {
        let b = bound();
        let base = encode_ordset(&set_of(&[0, 2]), &b).unwrap();
        let decoded = decode_ordset(&base).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let mut t = base.clone();
            let tail_len = rng.gen_range(1..20);
            let mut pos = t.length.clone();
            for _ in 0..tail_len {
                if rng.gen_bool(0.5) {
                    t.set_one(pos.clone());
                } else {
                    t.length = pos.succ();
                }
                pos = pos.succ();
            }
            assert_eq!(decode_ordset(&t).unwrap(), decoded);
        }
    }

    #[test]
    fn malformed_codes_are_rejected() {
        // Leading 11: terminator would sit at position 0.
        let t = parse_tape("11").unwrap();
        assert!(decode_ordset(&t).is_err());
        // No terminator at all.
        let t = parse_tape("0101").unwrap();
        assert!(decode_ordset(&t).is_err());
        // Member bit at an even position below the terminator.
        let t = parse_tape("1011").unwrap();
        assert!(decode_ordset(&t).is_err());
        // Cell before the terminator must be 0: "0111" as a set code has
        // beta = 0 with bit(0) = 0, fine; craft bit(beta) = 1 instead.
        let t = parse_tape("010110011").unwrap();
        // ones at 1,3,4 -> first adjacent pair (3,4), beta = 2, bit(2) = 0; decodes {0}.
        assert_eq!(decode_ordset(&t).unwrap(), set_of(&[0]));
    }

    #[test]
    fn tape_member_reads_bits_directly() {
        let b = bound();
        let mut s = set_of(&[0, 3]);
        s.insert(w().add(&n(2)));
        let t = encode_ordset(&s, &b).unwrap();
        assert!(tape_member(&n(0), &t).unwrap());
        assert!(!tape_member(&n(1), &t).unwrap());
        assert!(tape_member(&n(3), &t).unwrap());
        assert!(tape_member(&w().add(&n(2)), &t).unwrap());
        assert!(!tape_member(&w(), &t).unwrap());
        // Members of a full row are present.
        let t = encode_ordset(&OrdSet::below_omega(), &b).unwrap();
        for k in 0..20 {
            assert!(tape_member(&n(k), &t).unwrap());
        }
        assert!(!tape_member(&w(), &t).unwrap());
    }

    #[test]
    fn image_and_search_on_finite_codes() {
        let b = bound();
        let t = encode_ordset(&set_of(&[1, 2, 5]), &b).unwrap();
        let img = tape_image(&t, &b, |o| Ok(o.add(&n(1)))).unwrap();
        assert_eq!(decode_ordset(&img).unwrap(), set_of(&[2, 3, 6]));
        let hit = tape_bounded_search(&t, |o| Ok(*o >= n(2))).unwrap();
        assert_eq!(hit, Some(n(2)));
        let miss = tape_bounded_search(&t, |o| Ok(*o >= n(9))).unwrap();
        assert_eq!(miss, None);
        // Infinite sets refuse element-wise operations.
        let t = encode_ordset(&OrdSet::below_omega(), &b).unwrap();
        assert!(matches!(
            tape_image(&t, &b, |o| Ok(o.clone())),
            Err(TapeError::InfiniteSet)
        ));
    }

    #[test]
    fn ordset_roundtrips_random() {
        let b = bound();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let mut s = OrdSet::empty();
            for _ in 0..rng.gen_range(0..8) {
                let limit_k = rng.gen_range(0..3u64);
                let fin = rng.gen_range(0..6u64);
                let o = w().mul(&n(limit_k)).add(&n(fin));
                s.insert(o);
            }
            if rng.gen_bool(0.3) {
                s.insert_row(w().mul(&n(rng.gen_range(0..3u64))));
            }
            let t = encode_ordset(&s, &b).unwrap();
            assert_eq!(decode_ordset(&t).unwrap(), s, "set {s}");
        }
    }

    #[test]
    fn ordset_literals() {
        assert_eq!(parse_ordset("{}").unwrap(), OrdSet::empty());
        assert_eq!(parse_ordset("{0,2,5}").unwrap(), set_of(&[0, 2, 5]));
        assert_eq!(parse_ordset("{..w}").unwrap(), OrdSet::below_omega());
        assert_eq!(parse_ordset("{0..w}").unwrap(), OrdSet::below_omega());
        let mut s = OrdSet::below_omega();
        s.insert(w().add(&n(1)));
        assert_eq!(parse_ordset("{..w,w+1}").unwrap(), s);
        // Interval covering two rows.
        let two = parse_ordset("{0..w*2}").unwrap();
        assert!(two.contains(&n(5)));
        assert!(two.contains(&w().add(&n(9))));
        assert!(!two.contains(&w().mul(&n(2))));
        // Singles squeezed between a row start and its limit.
        let s = parse_ordset("{w+3..w+6}").unwrap();
        assert_eq!(
            s,
            OrdSet::from_elems([w().add(&n(3)), w().add(&n(4)), w().add(&n(5))])
        );
        // Display is re-parseable.
        for text in ["{}", "{0,2,5}", "{0..w}", "{0..w,w+1,w*2..w*3}"] {
            let parsed = parse_ordset(text).unwrap();
            let printed = parsed.to_string();
            assert_eq!(parse_ordset(&printed).unwrap(), parsed);
        }
    }

    #[test]
    fn tape_literal_roundtrip() {
        for text in ["", "011", "01011", "(01)^w011", "0111", "1111", "(0)^w1"] {
            let t = parse_tape(text).unwrap();
            assert_eq!(t.to_token_string().unwrap(), text);
        }
        assert!(parse_tape("(01)^x").is_err());
        assert!(parse_tape("2").is_err());
    }

    #[test]
    fn slice_and_concat_agree() {
        let b = bound();
        let items = vec![
            LowPair { index: n(1), set: set_of(&[0]) },
            LowPair { index: n(0), set: OrdSet::below_omega() },
        ];
        let t = encode_seq(&items, &b).unwrap();
        // Slicing off the first pair code leaves a decodable remainder.
        let first = encode_lowpair(&items[0], &b).unwrap();
        let rest = t.slice(&first.length, &t.length).unwrap();
        let tail = decode_seq(&rest).unwrap();
        assert_eq!(tail, vec![items[1].clone()]);
    }

    #[test]
    fn infinite_index_pairs_roundtrip() {
        let b = bound();
        let pair = LowPair {
            index: parse_ordinal("w*2+3").unwrap(),
            set: set_of(&[1]),
        };
        let t = encode_lowpair(&pair, &b).unwrap();
        assert_eq!(decode_lowpair(&t).unwrap(), pair);
    }
}

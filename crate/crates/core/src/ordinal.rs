//! Exact ordinal arithmetic below a configurable bound (default w^w).
//!
//! Ordinals are kept in Cantor normal form: a sum of terms w^e * c with
//! strictly decreasing exponents and coefficients >= 1. Addition and
//! multiplication are the usual non-commutative operations. On top of the
//! arithmetic sits the canonical pairing of ordinals: order pairs by their
//! maximum, then lexicographically, and take the rank of a pair in that
//! well-ordering. The rank function and its inverse are exact, not sampled.

use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Coefficients accepted from external text. Internal arithmetic works in
/// u64 with u128 intermediates; capping parsed inputs keeps desk-scale
/// computations far away from coefficient wraparound.
pub const COEFF_INPUT_CAP: u64 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("ordinal {value} is not below the bound {bound}")]
    BoundOverflow { value: String, bound: String },
    #[error("subtraction underflow: minuend is smaller than subtrahend")]
    Underflow,
    #[error("value not representable at this scale: {0}")]
    Unrepresentable(&'static str),
    #[error("ordinal notation parse error at byte {pos}: {msg}")]
    Notation { pos: usize, msg: String },
}

/// An ordinal in Cantor normal form. `terms` holds (exponent, coefficient)
/// pairs with strictly decreasing exponents and nonzero coefficients; the
/// empty list is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(Self::zero(), n)] }
        }
    }

    pub fn omega() -> Self {
        Ordinal { terms: vec![(Self::nat(1), 1)] }
    }

    /// w^exp (single-term power of omega).
    pub fn w_pow(exp: Ordinal) -> Self {
        Ordinal { terms: vec![(exp, 1)] }
    }

    /// w^exp * coeff, normalized (coeff 0 gives zero).
    pub fn w_term(exp: Ordinal, coeff: u64) -> Self {
        if coeff == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(exp, coeff)] }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.len() <= 1 && self.terms.first().map_or(true, |(e, _)| e.is_zero())
    }

    pub fn as_nat(&self) -> Option<u64> {
        if self.is_zero() {
            Some(0)
        } else if self.is_finite() {
            Some(self.terms[0].1)
        } else {
            None
        }
    }

    fn leading(&self) -> Option<&(Ordinal, u64)> {
        self.terms.first()
    }

    /// The finite tail of the normal form (0 if none).
    pub fn finite_part(&self) -> u64 {
        match self.terms.last() {
            Some((e, c)) if e.is_zero() => *c,
            _ => 0,
        }
    }

    /// Everything except the finite tail; zero or a limit ordinal.
    pub fn limit_part(&self) -> Ordinal {
        let keep: Vec<_> = self
            .terms
            .iter()
            .filter(|(e, _)| !e.is_zero())
            .cloned()
            .collect();
        Ordinal { terms: keep }
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && self.finite_part() == 0
    }

    pub fn is_successor(&self) -> bool {
        self.finite_part() > 0
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::nat(1))
    }

    /// Predecessor of a successor ordinal.
    pub fn pred(&self) -> Option<Ordinal> {
        let f = self.finite_part();
        if f == 0 {
            return None;
        }
        let mut terms: Vec<_> = self.terms.clone();
        let last = terms.last_mut().unwrap();
        if last.1 == 1 {
            terms.pop();
        } else {
            last.1 -= 1;
        }
        Some(Ordinal { terms })
    }

    /// Ordinal addition: the right operand's leading term absorbs the
    /// smaller tail of the left operand.
    pub fn add(&self, rhs: &Ordinal) -> Ordinal {
        let Some((re, rc)) = rhs.leading() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, u64)> = Vec::new();
        for (e, c) in &self.terms {
            match e.cmp(re) {
                Ordering::Greater => terms.push((e.clone(), *c)),
                Ordering::Equal => {
                    terms.push((e.clone(), checked_coeff_add(*c, *rc)));
                    terms.extend(rhs.terms[1..].iter().cloned());
                    return Ordinal { terms };
                }
                Ordering::Less => break,
            }
        }
        terms.extend(rhs.terms.iter().cloned());
        Ordinal { terms }
    }

    /// Ordinal multiplication, distributing over the right operand's terms.
    pub fn mul(&self, rhs: &Ordinal) -> Ordinal {
        if self.is_zero() || rhs.is_zero() {
            return Ordinal::zero();
        }
        let (e1, c1) = self.leading().unwrap();
        let mut acc = Ordinal::zero();
        for (f, d) in &rhs.terms {
            let piece = if f.is_zero() {
                // Right factor finite: scale the leading coefficient, keep the tail.
                let mut terms = vec![(e1.clone(), checked_coeff_mul(*c1, *d))];
                terms.extend(self.terms[1..].iter().cloned());
                Ordinal { terms }
            } else {
                Ordinal::w_term(e1.add(f), *d)
            };
            acc = acc.add(&piece);
        }
        acc
    }

    /// Left subtraction: the unique c with self + c = rhs, defined for
    /// self <= rhs.
    pub fn sub_from(&self, rhs: &Ordinal) -> Result<Ordinal, OrdinalError> {
        let mut a = self.terms.as_slice();
        let mut b = rhs.terms.as_slice();
        loop {
            match (a.first(), b.first()) {
                (None, _) => return Ok(Ordinal { terms: b.to_vec() }),
                (Some(_), None) => return Err(OrdinalError::Underflow),
                (Some((ea, ca)), Some((eb, cb))) => match ea.cmp(eb) {
                    Ordering::Less => return Ok(Ordinal { terms: b.to_vec() }),
                    Ordering::Greater => return Err(OrdinalError::Underflow),
                    Ordering::Equal => match ca.cmp(cb) {
                        Ordering::Less => {
                            let mut terms = vec![(eb.clone(), cb - ca)];
                            terms.extend(b[1..].iter().cloned());
                            return Ok(Ordinal { terms });
                        }
                        Ordering::Greater => return Err(OrdinalError::Underflow),
                        Ordering::Equal => {
                            a = &a[1..];
                            b = &b[1..];
                        }
                    },
                },
            }
        }
    }

    /// Finite residue: finite_part(self) mod k, for cyclic indexing.
    pub fn fin_mod(&self, k: u64) -> u64 {
        debug_assert!(k > 0);
        self.finite_part() % k
    }
}

fn checked_coeff_add(a: u64, b: u64) -> u64 {
    a.checked_add(b).expect("CNF coefficient overflow (beyond desk scale)")
}

fn checked_coeff_mul(a: u64, b: u64) -> u64 {
    a.checked_mul(b).expect("CNF coefficient overflow (beyond desk scale)")
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut i = 0;
        loop {
            match (self.terms.get(i), other.terms.get(i)) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((ea, ca)), Some((eb, cb))) => {
                    match ea.cmp(eb).then(ca.cmp(cb)) {
                        Ordering::Equal => i += 1,
                        ord => return ord,
                    }
                }
            }
        }
    }
}

/// Supremum of a finite family (max, or zero when empty).
pub fn ord_sup<'a, I: IntoIterator<Item = &'a Ordinal>>(items: I) -> Ordinal {
    items
        .into_iter()
        .max()
        .cloned()
        .unwrap_or_else(Ordinal::zero)
}

/// Exclusive upper bound for ordinal values, a runtime configuration knob.
#[derive(Clone, PartialEq, Eq)]
pub struct OrdinalBound {
    limit: Ordinal,
}

impl Default for OrdinalBound {
    fn default() -> Self {
        OrdinalBound { limit: Ordinal::w_pow(Ordinal::omega()) }
    }
}

impl OrdinalBound {
    pub fn new(limit: Ordinal) -> Self {
        OrdinalBound { limit }
    }

    pub fn limit(&self) -> &Ordinal {
        &self.limit
    }

    pub fn admits(&self, o: &Ordinal) -> bool {
        *o < self.limit
    }

    pub fn check(&self, o: Ordinal) -> Result<Ordinal, OrdinalError> {
        if self.admits(&o) {
            Ok(o)
        } else {
            Err(OrdinalError::BoundOverflow {
                value: o.to_string(),
                bound: self.limit.to_string(),
            })
        }
    }
}

impl fmt::Debug for OrdinalBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrdinalBound(< {})", self.limit)
    }
}

// ---------------------------------------------------------------------------
// Canonical pairing: rank of a pair in the (max, then lexicographic) order.
// ---------------------------------------------------------------------------

/// Sum of (nu*2 + 1) over nu < base+count for finite count, minus the part
/// below base. Exact partial sums of the block lengths.
fn rank_sum_finite(prefix: &Ordinal, m: u64) -> Ordinal {
    if m == 0 {
        return Ordinal::zero();
    }
    let limit = prefix.limit_part();
    let t = prefix.finite_part();
    if limit.is_zero() {
        // (t+m)^2 - t^2 computed in u128 to dodge wraparound.
        let t = t as u128;
        let m = m as u128;
        let v = (t + m) * (t + m) - t * t;
        let v: u64 = v.try_into().expect("pair rank beyond u64 coefficient range");
        Ordinal::nat(v)
    } else {
        // Terms (L + s)*2 + 1 telescope to L*(2m) + (t+m).
        limit
            .mul(&Ordinal::nat(checked_coeff_mul(2, m)))
            .add(&Ordinal::nat(checked_coeff_add(t, m)))
    }
}

/// Sum of (nu*2 + 1) over nu in [prefix, prefix + w^e) for e >= 1.
fn rank_sum_omega_power(prefix: &Ordinal, e: &Ordinal) -> Ordinal {
    debug_assert!(!e.is_zero());
    let limit = prefix.limit_part();
    let power = Ordinal::w_pow(e.clone());
    if limit >= power {
        limit.mul(&power)
    } else {
        // sup of partial sums collapses to w^(2e - 1).
        let two_e = e.mul(&Ordinal::nat(2));
        let exp = two_e.pred().expect("2e is a successor for finite e, else absorbed");
        Ordinal::w_pow(exp)
    }
}

/// Rank of the set of pairs with maximum < mu: the order type of mu x mu
/// under the canonical well-ordering.
pub fn pair_rank_base(mu: &Ordinal) -> Ordinal {
    let mut acc = Ordinal::zero();
    let mut prefix = Ordinal::zero();
    for (e, c) in &mu.terms {
        if e.is_zero() {
            acc = acc.add(&rank_sum_finite(&prefix, *c));
            prefix = prefix.add(&Ordinal::nat(*c));
        } else {
            // One explicit step, then the remaining c-1 blocks are constant:
            // each contributes w^(M+e) where M = max(lead exp, e).
            let first = rank_sum_omega_power(&prefix, e);
            acc = acc.add(&first);
            prefix = prefix.add(&Ordinal::w_pow(e.clone()));
            if *c > 1 {
                let lead = prefix
                    .leading()
                    .map(|(le, _)| le.clone())
                    .unwrap_or_else(Ordinal::zero);
                let m = if lead > *e { lead } else { e.clone() };
                let per_block = Ordinal::w_pow(m.add(e));
                acc = acc.add(&per_block.mul(&Ordinal::nat(c - 1)));
                prefix = prefix.add(&Ordinal::w_term(e.clone(), c - 1));
            }
        }
    }
    acc
}

/// Rank of (a, b) in the canonical well-ordering of pairs: all pairs with a
/// smaller maximum come first, then within the max = m block the pairs
/// (c, m) for c < m in order of c, then (m, d) for d <= m in order of d.
pub fn godel_pair(a: &Ordinal, b: &Ordinal) -> Ordinal {
    let m = if a >= b { a } else { b };
    let base = pair_rank_base(m);
    let offset = if a < m { a.clone() } else { m.add(b) };
    base.add(&offset)
}

/// Bound-checked pairing.
pub fn godel_pair_within(
    a: &Ordinal,
    b: &Ordinal,
    bound: &OrdinalBound,
) -> Result<Ordinal, OrdinalError> {
    bound.check(godel_pair(a, b))
}

/// Inverse of `godel_pair`. Exact for ranks whose leading exponent is
/// finite (always the case below the default bound w^w).
pub fn godel_unpair(o: &Ordinal) -> Result<(Ordinal, Ordinal), OrdinalError> {
    let max_exp = match o.leading() {
        None => Ordinal::zero(),
        Some((e, _)) => {
            if e.as_nat().is_none() {
                return Err(OrdinalError::Unrepresentable(
                    "pair rank with transfinite CNF exponent",
                ));
            }
            e.clone()
        }
    };
    // Greedy digit construction of the largest m with pair_rank_base(m) <= o.
    let mut m = Ordinal::zero();
    let mut e = max_exp.as_nat().unwrap_or(0) as i64;
    while e >= 0 {
        let exp = Ordinal::nat(e as u64);
        let fits = |k: u64| -> bool {
            let cand = m.add(&Ordinal::w_term(exp.clone(), k));
            pair_rank_base(&cand) <= *o
        };
        // Doubling then binary search for the largest admissible coefficient.
        if fits(1) {
            let mut lo = 1u64;
            let mut hi = 2u64;
            while fits(hi) {
                lo = hi;
                match hi.checked_mul(2) {
                    Some(next) => hi = next,
                    None => {
                        return Err(OrdinalError::Unrepresentable(
                            "pair rank coefficient beyond u64",
                        ))
                    }
                }
            }
            while lo + 1 < hi {
                let mid = lo + (hi - lo) / 2;
                if fits(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            m = m.add(&Ordinal::w_term(exp.clone(), lo));
        }
        e -= 1;
    }
    let offset = pair_rank_base(&m).sub_from(o).expect("rank base <= o by construction");
    if offset < m {
        Ok((offset, m))
    } else {
        let b = m.sub_from(&offset).expect("offset >= m in second block");
        debug_assert!(b <= m, "rank inside the max = m block");
        Ok((m, b))
    }
}

// ---------------------------------------------------------------------------
// Text notation: 0, 5, w, w+3, w*2, w^2*3+w+1, w^(w+1)*2, ...
// ---------------------------------------------------------------------------

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                out.push('+');
            }
            Ordinal::fmt_term(e, *c, &mut out);
        }
        f.write_str(&out)
    }
}

impl Ordinal {
    fn fmt_term(e: &Ordinal, c: u64, out: &mut String) {
        if e.is_zero() {
            out.push_str(&c.to_string());
            return;
        }
        if e.as_nat() == Some(1) {
            out.push('w');
        } else {
            out.push_str("w^");
            let bare = e.as_nat().is_some() || *e == Ordinal::omega();
            if bare {
                out.push_str(&e.to_string());
            } else {
                out.push('(');
                out.push_str(&e.to_string());
                out.push(')');
            }
        }
        if c != 1 {
            out.push('*');
            out.push_str(&c.to_string());
        }
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parse the canonical ordinal notation.
pub fn parse_ordinal(s: &str) -> Result<Ordinal, OrdinalError> {
    let mut p = Parser { bytes: s.as_bytes(), pos: 0 };
    p.skip_ws();
    let o = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input"));
    }
    Ok(o)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> OrdinalError {
        OrdinalError::Notation { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_nat(&mut self) -> Result<u64, OrdinalError> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let n: u64 = text.parse().map_err(|_| self.err("number too large"))?;
        if n >= COEFF_INPUT_CAP {
            return Err(self.err("coefficient above the input cap 2^32"));
        }
        Ok(n)
    }

    fn parse_sum(&mut self) -> Result<Ordinal, OrdinalError> {
        let mut acc = self.parse_term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                self.skip_ws();
                let t = self.parse_term()?;
                acc = acc.add(&t);
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Ordinal, OrdinalError> {
        self.skip_ws();
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let exp = if self.eat(b'^') {
                    self.parse_exp_factor()?
                } else {
                    Ordinal::nat(1)
                };
                let coeff = if self.eat(b'*') { self.parse_nat()? } else { 1 };
                if coeff == 0 {
                    return Ok(Ordinal::zero());
                }
                Ok(Ordinal::w_term(exp, coeff))
            }
            Some(b) if b.is_ascii_digit() => Ok(Ordinal::nat(self.parse_nat()?)),
            _ => Err(self.err("expected 'w' or a number")),
        }
    }

    fn parse_exp_factor(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'w') => {
                self.pos += 1;
                Ok(Ordinal::omega())
            }
            Some(b) if b.is_ascii_digit() => Ok(Ordinal::nat(self.parse_nat()?)),
            _ => Err(self.err("expected an exponent")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w() -> Ordinal {
        Ordinal::omega()
    }

    fn n(v: u64) -> Ordinal {
        Ordinal::nat(v)
    }

    #[test]
    fn finite_arithmetic_matches_naturals() {
        for a in 0..64u64 {
            for b in 0..64u64 {
                assert_eq!(n(a).add(&n(b)).as_nat(), Some(a + b));
                assert_eq!(n(a).mul(&n(b)).as_nat(), Some(a * b));
                assert_eq!(n(a).cmp(&n(b)), a.cmp(&b));
            }
        }
    }

    #[test]
    fn addition_absorbs_smaller_left_tails() {
        assert_eq!(n(3).add(&w()), w());
        assert_eq!(w().add(&n(3)).to_string(), "w+3");
        assert_eq!(w().add(&w()).to_string(), "w*2");
        let a = parse_ordinal("w^2+w*3+5").unwrap();
        let b = parse_ordinal("w*2+1").unwrap();
        assert_eq!(a.add(&b).to_string(), "w^2+w*5+1");
    }

    #[test]
    fn multiplication_known_values() {
        assert_eq!(n(2).mul(&w()), w());
        assert_eq!(w().mul(&n(2)).to_string(), "w*2");
        assert_eq!(w().mul(&w()).to_string(), "w^2");
        let a = parse_ordinal("w+1").unwrap();
        assert_eq!(a.mul(&a).to_string(), "w^2+w+1");
        let b = parse_ordinal("w^2*3+w").unwrap();
        assert_eq!(b.mul(&n(2)).to_string(), "w^2*6+w");
        assert_eq!(b.mul(&w()).to_string(), "w^3");
    }

    #[test]
    fn subtraction_inverts_addition() {
        let samples = ["0", "1", "7", "w", "w+3", "w*2", "w^2*3+w+1", "w^3+w^2"];
        for sa in samples {
            for sb in samples {
                let a = parse_ordinal(sa).unwrap();
                let b = parse_ordinal(sb).unwrap();
                let s = a.add(&b);
                let back = a.sub_from(&s).unwrap();
                assert_eq!(a.add(&back), s, "{sa} + x = {sa}+{sb}");
            }
        }
        assert!(w().sub_from(&n(3)).is_err());
    }

    #[test]
    fn sup_is_max_or_zero() {
        assert_eq!(ord_sup([]), n(0));
        let items = [w(), n(4)];
        assert_eq!(ord_sup(items.iter()), w());
    }

    #[test]
    fn predecessor_and_limits() {
        assert!(w().is_limit());
        assert!(!n(5).is_limit());
        assert_eq!(n(5).pred(), Some(n(4)));
        assert_eq!(w().pred(), None);
        assert_eq!(parse_ordinal("w+1").unwrap().pred(), Some(w()));
    }

    /// Independent oracle: enumerate finite pairs in the canonical order
    /// (by max, then lexicographically) and take positions.
    fn enumerate_pairs(limit: u64) -> Vec<(u64, u64)> {
        let mut pairs = Vec::new();
        for m in 0..limit {
            for c in 0..m {
                pairs.push((c, m));
            }
            for d in 0..=m {
                pairs.push((m, d));
            }
        }
        pairs
    }

    #[test]
    fn pairing_matches_enumeration_oracle() {
        let pairs = enumerate_pairs(16);
        for (rank, (a, b)) in pairs.iter().enumerate() {
            let got = godel_pair(&n(*a), &n(*b));
            assert_eq!(got.as_nat(), Some(rank as u64), "rank of ({a},{b})");
        }
    }

    #[test]
    fn pairing_frozen_values() {
        assert_eq!(godel_pair(&n(0), &n(0)), n(0));
        assert_eq!(godel_pair(&n(1), &n(0)), n(2));
        assert_eq!(godel_pair(&n(2), &n(2)), n(8));
        assert_eq!(godel_pair(&n(0), &n(1)), n(1));
        assert_eq!(godel_pair(&n(1), &n(2)), n(5));
    }

    #[test]
    fn unpair_roundtrip_exhaustive_finite() {
        for a in 0..64u64 {
            for b in 0..64u64 {
                let r = godel_pair(&n(a), &n(b));
                let (x, y) = godel_unpair(&r).unwrap();
                assert_eq!((x, y), (n(a), n(b)), "roundtrip at ({a},{b})");
            }
        }
    }

    #[test]
    fn unpair_roundtrip_transfinite_samples() {
        let samples = [
            "0", "1", "5", "w", "w+1", "w+7", "w*2", "w*2+1", "w^2", "w^2+w*3+4",
            "w^3+1", "w^3*2+w^2",
        ];
        for sa in samples {
            for sb in samples {
                let a = parse_ordinal(sa).unwrap();
                let b = parse_ordinal(sb).unwrap();
                let r = godel_pair(&a, &b);
                let (x, y) = godel_unpair(&r).unwrap();
                assert_eq!((x, y), (a, b), "roundtrip at ({sa},{sb})");
            }
        }
    }

    #[test]
    fn pairing_monotone_along_blocks() {
        // Ranks within and across max-blocks are consecutive from 0.
        let pairs = enumerate_pairs(12);
        let mut prev: Option<Ordinal> = None;
        for (a, b) in pairs {
            let r = godel_pair(&n(a), &n(b));
            match prev {
                None => assert!(r.is_zero()),
                Some(p) => assert_eq!(p.succ(), r),
            }
            prev = Some(r);
        }
    }

    #[test]
    fn rank_base_known_values() {
        assert_eq!(pair_rank_base(&w()), w());
        assert_eq!(pair_rank_base(&w().mul(&n(2))).to_string(), "w^2");
        assert_eq!(pair_rank_base(&parse_ordinal("w^2").unwrap()).to_string(), "w^3");
        assert_eq!(pair_rank_base(&parse_ordinal("w^3").unwrap()).to_string(), "w^5");
        // Finite: gamma(m) = m^2.
        for m in 0..32u64 {
            assert_eq!(pair_rank_base(&n(m)).as_nat(), Some(m * m));
        }
    }

    #[test]
    fn bound_checks_fire_loudly() {
        let bound = OrdinalBound::default();
        assert!(bound.admits(&parse_ordinal("w^3*7").unwrap()));
        assert!(!bound.admits(&Ordinal::w_pow(w())));
        let huge = Ordinal::w_pow(w());
        assert!(matches!(
            bound.check(huge),
            Err(OrdinalError::BoundOverflow { .. })
        ));
        // Pairing near the bound overflows the bound, loudly.
        let a = parse_ordinal("w^3").unwrap();
        let r = godel_pair_within(&a, &a, &OrdinalBound::new(parse_ordinal("w^4").unwrap()));
        assert!(matches!(r, Err(OrdinalError::BoundOverflow { .. })));
    }

    #[test]
    fn notation_rejects_garbage() {
        for bad in ["", "x", "w^", "w**2", "1+", "w^(w", "w^2*", "9999999999999999999"] {
            assert!(parse_ordinal(bad).is_err(), "{bad:?} should fail");
        }
    }

    fn arb_ordinal(depth: u32) -> impl Strategy<Value = Ordinal> {
        // Exponent lists built decreasing; depth bounds exponent nesting.
        let exp = if depth == 0 {
            (0u64..4).prop_map(Ordinal::nat).boxed()
        } else {
            prop_oneof![
                (0u64..4).prop_map(Ordinal::nat),
                (0u64..3).prop_map(|k| Ordinal::omega().add(&Ordinal::nat(k))),
            ]
            .boxed()
        };
        proptest::collection::vec((exp, 1u64..5), 0..4).prop_map(|mut terms| {
            terms.sort_by(|a, b| b.0.cmp(&a.0));
            terms.dedup_by(|a, b| a.0 == b.0);
            let mut acc = Ordinal::zero();
            for (e, c) in terms {
                acc = acc.add(&Ordinal::w_term(e, c));
            }
            acc
        })
    }

    proptest! {
        #[test]
        fn notation_roundtrip(o in arb_ordinal(1)) {
            let text = o.to_string();
            let back = parse_ordinal(&text).unwrap();
            prop_assert_eq!(back, o);
        }

        #[test]
        fn add_is_associative(a in arb_ordinal(0), b in arb_ordinal(0), c in arb_ordinal(0)) {
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        }

        #[test]
        fn mul_left_distributes(a in arb_ordinal(0), b in arb_ordinal(0), c in arb_ordinal(0)) {
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        #[test]
        fn pair_roundtrip_prop(a in arb_ordinal(0), b in arb_ordinal(0)) {
            let r = godel_pair(&a, &b);
            let (x, y) = godel_unpair(&r).unwrap();
            prop_assert_eq!((x, y), (a, b));
        }
    }
}

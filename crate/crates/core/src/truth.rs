//! Two independent truth evaluators, kept deliberately far apart so each
//! can serve as the other's oracle.
//!
//! `eval_delta0` handles bounded formulas only. Its atoms go through the
//! code machinery: equality is an isomorphism search between membership
//! graphs, membership is a node match followed by an edge check. Bounded
//! quantifiers are recognized structurally and range over the members of
//! their bound.
//!
//! `eval_bruteforce` is a plain Tarskian evaluator over an explicit finite
//! universe. Atoms compare hereditarily finite sets directly; quantifiers
//! range over tuples from the universe. Its only concession to feasibility
//! is sound guard pruning: a single-variable quantifier in guard shape
//! ranges over members-of-the-bound intersected with the universe, which
//! never changes the value.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::code::{build_code, build_iso, decode_match};
use crate::formula::{
    as_bounded, BoundedView, Context, Formula, FormulaSeq, Term, VarId,
};
use crate::hfset::{sort_canonical, HFSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TruthError {
    #[error("formula is not bounded: {0}")]
    NotDelta0(String),
    #[error("variable x{0} has no value")]
    UnboundVariable(VarId),
}

pub type Assignment = BTreeMap<VarId, HFSet>;

fn resolve(t: &Term, assign: &Assignment) -> Result<HFSet, TruthError> {
    match t {
        Term::Const(s) => Ok(s.clone()),
        Term::Var(v) => assign
            .get(v)
            .cloned()
            .ok_or(TruthError::UnboundVariable(*v)),
    }
}

// ---------------------------------------------------------------------------
// Bounded evaluation through the code machinery.
// ---------------------------------------------------------------------------

/// Evaluates a bounded formula. Atoms are decided on membership graphs:
/// a = b by finding an isomorphism of their codes, a in b by matching a's
/// distinguished node into b's graph and checking the edge.
pub fn eval_delta0(f: &Formula, assign: &Assignment) -> Result<bool, TruthError> {
    match f {
        Formula::Bottom => Ok(false),
        Formula::Eq(a, b) => {
            let (x, y) = (resolve(a, assign)?, resolve(b, assign)?);
            Ok(build_iso(&build_code(&x), &build_code(&y)).is_ok())
        }
        Formula::Mem(a, b) => {
            let (x, y) = (resolve(a, assign)?, resolve(b, assign)?);
            let cx = build_code(&x);
            let cy = build_code(&y);
            Ok(match decode_match(&cx, &cy) {
                Some(beta) => cy.pre().children(cy.rho()).contains(&beta),
                None => false,
            })
        }
        Formula::Implies(p, q) => {
            Ok(!eval_delta0(p, assign)? || eval_delta0(q, assign)?)
        }
        Formula::Conj(seq) => {
            for (_, part) in seq.representatives() {
                if !eval_delta0(part, assign)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Disj(seq) => {
            for (_, part) in seq.representatives() {
                if eval_delta0(part, assign)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Exists(..) | Formula::Forall(..) => match as_bounded(f) {
            Some(BoundedView::ForallIn { ctx, bound, body }) => {
                let b = resolve(&bound, assign)?;
                for binding in tuple_members(&b, ctx) {
                    let inner = extend(assign, ctx, &binding);
                    if !eval_delta0(body, &inner)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Some(BoundedView::ExistsIn { ctx, bound, body }) => {
                let b = resolve(&bound, assign)?;
                for binding in tuple_members(&b, ctx) {
                    let inner = extend(assign, ctx, &binding);
                    if eval_delta0(body, &inner)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            None => Err(TruthError::NotDelta0(f.to_string())),
        },
    }
}

/// The tuples of `bound` visible to a width-w bounded quantifier: members
/// themselves at width 1, members that are w-tuples otherwise.
fn tuple_members(bound: &HFSet, ctx: &Context) -> Vec<Vec<HFSet>> {
    let w = ctx.width();
    let mut out = Vec::new();
    for m in bound.elems() {
        if w == 1 {
            out.push(vec![m.clone()]);
        } else if let Some(tuple) = m.as_seq() {
            if tuple.len() == w {
                out.push(tuple);
            }
        }
    }
    out
}

fn extend(assign: &Assignment, ctx: &Context, values: &[HFSet]) -> Assignment {
    let mut inner = assign.clone();
    for (v, x) in ctx.0.iter().zip(values.iter()) {
        inner.insert(*v, x.clone());
    }
    inner
}

// ---------------------------------------------------------------------------
// Brute-force evaluation over an explicit universe.
// ---------------------------------------------------------------------------

/// Tarskian truth over a finite universe. Quantified tuples range over the
/// universe; `(ex (x) (and (mem x t) ...))` and `(all (x) (imp (mem x t)
/// ...))` are pruned to members of t that lie in the universe, which is an
/// identity on truth values.
pub fn eval_bruteforce(
    f: &Formula,
    universe: &[HFSet],
    assign: &Assignment,
) -> Result<bool, TruthError> {
    match f {
        Formula::Bottom => Ok(false),
        Formula::Eq(a, b) => Ok(resolve(a, assign)? == resolve(b, assign)?),
        Formula::Mem(a, b) => {
            let (x, y) = (resolve(a, assign)?, resolve(b, assign)?);
            Ok(y.contains(&x))
        }
        Formula::Implies(p, q) => {
            Ok(!eval_bruteforce(p, universe, assign)? || eval_bruteforce(q, universe, assign)?)
        }
        Formula::Conj(seq) => {
            for (_, part) in seq.representatives() {
                if !eval_bruteforce(part, universe, assign)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Disj(seq) => {
            for (_, part) in seq.representatives() {
                if eval_bruteforce(part, universe, assign)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Exists(ctx, body) => {
            if let Some((x, members, rest)) = guard_pruned(f, universe, assign)? {
                for m in members {
                    let mut inner = assign.clone();
                    inner.insert(x, m);
                    if eval_bruteforce(rest, universe, &inner)? {
                        return Ok(true);
                    }
                }
                return Ok(false);
            }
            let mut cursor = TupleCursor::new(ctx.width(), universe.len());
            while let Some(idx) = cursor.next() {
                let inner = extend_by_indices(assign, ctx, universe, idx);
                if eval_bruteforce(body, universe, &inner)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Forall(ctx, body) => {
            if let Some((x, members, rest)) = guard_pruned(f, universe, assign)? {
                for m in members {
                    let mut inner = assign.clone();
                    inner.insert(x, m);
                    if !eval_bruteforce(rest, universe, &inner)? {
                        return Ok(false);
                    }
                }
                return Ok(true);
            }
            let mut cursor = TupleCursor::new(ctx.width(), universe.len());
            while let Some(idx) = cursor.next() {
                let inner = extend_by_indices(assign, ctx, universe, idx);
                if !eval_bruteforce(body, universe, &inner)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

type Pruned<'a> = (VarId, Vec<HFSet>, &'a Formula);

/// Detects the single-variable guard shapes and returns the variable, the
/// guard-satisfying values from the universe, and the residual body.
fn guard_pruned<'a>(
    f: &'a Formula,
    universe: &[HFSet],
    assign: &Assignment,
) -> Result<Option<Pruned<'a>>, TruthError> {
    let (x, guard, rest) = match f {
        Formula::Exists(ctx, body) => {
            let [x] = ctx.0.as_slice() else { return Ok(None) };
            let Formula::Conj(FormulaSeq::Listed(parts)) = body.as_ref() else {
                return Ok(None);
            };
            let [guard, rest] = parts.as_slice() else {
                return Ok(None);
            };
            (*x, guard, rest)
        }
        Formula::Forall(ctx, body) => {
            let [x] = ctx.0.as_slice() else { return Ok(None) };
            let Formula::Implies(guard, rest) = body.as_ref() else {
                return Ok(None);
            };
            (*x, guard.as_ref(), rest.as_ref())
        }
        _ => return Ok(None),
    };
    let Formula::Mem(Term::Var(mv), bound) = guard else {
        return Ok(None);
    };
    if *mv != x || bound.var_id() == Some(x) {
        return Ok(None);
    }
    let b = resolve(bound, assign)?;
    let members: Vec<HFSet> = b
        .elems()
        .iter()
        .filter(|m| universe.contains(m))
        .cloned()
        .collect();
    Ok(Some((x, members, rest)))
}

fn extend_by_indices(
    assign: &Assignment,
    ctx: &Context,
    universe: &[HFSet],
    idx: &[usize],
) -> Assignment {
    let mut inner = assign.clone();
    for (v, i) in ctx.0.iter().zip(idx.iter()) {
        inner.insert(*v, universe[*i].clone());
    }
    inner
}

/// Odometer over width-w index tuples below a base.
struct TupleCursor {
    width: usize,
    base: usize,
    state: Vec<usize>,
    started: bool,
    done: bool,
}

impl TupleCursor {
    fn new(width: usize, base: usize) -> Self {
        TupleCursor {
            width,
            base,
            state: vec![0; width],
            started: false,
            done: base == 0 && width > 0,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.state);
        }
        for i in (0..self.width).rev() {
            self.state[i] += 1;
            if self.state[i] < self.base {
                return Some(&self.state);
            }
            self.state[i] = 0;
        }
        self.done = true;
        None
    }
}

// ---------------------------------------------------------------------------
// Universe construction.
// ---------------------------------------------------------------------------

/// Canonically ordered transitive closure of the given sets, including the
/// sets themselves.
pub fn close_transitive<I: IntoIterator<Item = HFSet>>(sets: I) -> Vec<HFSet> {
    let mut all = std::collections::BTreeSet::new();
    for s in sets {
        for t in s.tc() {
            all.insert(t);
        }
        all.insert(s);
    }
    let mut out: Vec<HFSet> = all.into_iter().collect();
    sort_canonical(&mut out);
    out
}

/// A sentence's brute-force universe: the base closed under transitive
/// closure together with the sentence's constants and theirs.
pub fn sentence_universe(base: &[HFSet], f: &Formula) -> Vec<HFSet> {
    let mut sets: Vec<HFSet> = base.to_vec();
    collect_constants(f, &mut sets);
    close_transitive(sets)
}

fn collect_constants(f: &Formula, out: &mut Vec<HFSet>) {
    let term = |t: &Term, out: &mut Vec<HFSet>| {
        if let Term::Const(s) = t {
            out.push(s.clone());
        }
    };
    match f {
        Formula::Bottom => {}
        Formula::Mem(a, b) | Formula::Eq(a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::Implies(p, q) => {
            collect_constants(p, out);
            collect_constants(q, out);
        }
        Formula::Conj(seq) | Formula::Disj(seq) => {
            let parts = match seq {
                FormulaSeq::Listed(v) => v.as_slice(),
                FormulaSeq::Cyclic { cycle, .. } => cycle.as_slice(),
            };
            for p in parts {
                collect_constants(p, out);
            }
        }
        Formula::Exists(_, body) | Formula::Forall(_, body) => {
            collect_constants(body, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{
        func_with_ordinal_domain, is_kpair, make_bounded_exists, make_bounded_forall,
        parse_formula,
    };
    use crate::hfset::v_level;

    fn ev0(s: &str) -> bool {
        eval_delta0(&parse_formula(s).unwrap(), &Assignment::new()).unwrap()
    }

    fn evb(s: &str, universe: &[HFSet]) -> bool {
        eval_bruteforce(&parse_formula(s).unwrap(), universe, &Assignment::new()).unwrap()
    }

    #[test]
    fn atoms_through_codes() {
        assert!(ev0("(mem {} {{}})"));
        assert!(!ev0("(mem {{}} {{}})"));
        assert!(ev0("(eq {{}} {{}})"));
        assert!(!ev0("(eq {} {{}})"));
        assert!(!ev0("(bot)"));
    }

    #[test]
    fn connectives_and_empty_families() {
        assert!(ev0("(and)"));
        assert!(!ev0("(or)"));
        assert!(ev0("(imp (bot) (bot))"));
        assert!(!ev0("(imp (and) (bot))"));
        assert!(ev0("(or (bot) (eq {} {}))"));
    }

    #[test]
    fn cyclic_families_evaluate_by_representatives() {
        assert!(ev0("(and-cyclic \"w\" (eq {} {}) (imp (bot) (bot)))"));
        assert!(!ev0("(and-cyclic \"w\" (eq {} {}) (bot))"));
        assert!(ev0("(or-cyclic \"w+1\" (bot) (eq {} {}))"));
    }

    #[test]
    fn bounded_quantifiers_range_over_members() {
        // Every member of {0,1} that is nonempty contains 0.
        assert!(ev0("(all (x0) (imp (mem x0 {{},{{}}}) (or (eq x0 {}) (mem {} x0))))"));
        assert!(ev0("(ex (x0) (and (mem x0 {{},{{}}}) (eq x0 {{}})))"));
        assert!(!ev0("(ex (x0) (and (mem x0 {}) (eq x0 x0)))"));
        // Unbounded quantifier refuses.
        let f = parse_formula("(ex (x0) (eq x0 x0))").unwrap();
        assert!(matches!(
            eval_delta0(&f, &Assignment::new()),
            Err(TruthError::NotDelta0(_))
        ));
        // Unbound free variable refuses.
        let f = parse_formula("(mem x0 {})").unwrap();
        assert!(matches!(
            eval_delta0(&f, &Assignment::new()),
            Err(TruthError::UnboundVariable(0))
        ));
    }

    #[test]
    fn brute_force_matches_on_simple_sentences() {
        let u = v_level(4);
        for s in [
            "(mem {} {{}})",
            "(mem {{}} {{}})",
            "(eq {{}} {{}})",
            "(and (eq {} {}) (mem {} {{}}))",
            "(all (x0) (imp (mem x0 {{},{{}}}) (or (eq x0 {}) (mem {} x0))))",
            "(ex (x0) (and (mem x0 {{},{{}}}) (eq x0 {{}})))",
        ] {
            assert_eq!(ev0(s), evb(s, &u), "{s}");
        }
    }

    #[test]
    fn brute_force_handles_unbounded_quantifiers() {
        let u = v_level(3);
        // Some member of the universe is empty.
        assert!(evb("(ex (x0) (eq x0 {}))", &u));
        // Not everything is empty.
        assert!(!evb("(all (x0) (eq x0 {}))", &u));
        // Pairs: there exist distinct elements.
        assert!(evb("(ex (x0 x1) (imp (eq x0 x1) (bot)))", &u));
    }

    #[test]
    fn kpair_formula_matches_decoder() {
        let u = close_transitive(
            v_level(3)
                .into_iter()
                .chain([HFSet::kpair(HFSet::vn(1), HFSet::vn(2))]),
        );
        let formula = is_kpair(&Term::Var(0), &Term::Var(1), &Term::Var(2));
        for p in &u {
            for a in &u {
                for b in &u {
                    let want = p.as_kpair() == Some((a.clone(), b.clone()));
                    let mut assign = Assignment::new();
                    assign.insert(0, p.clone());
                    assign.insert(1, a.clone());
                    assign.insert(2, b.clone());
                    let got = eval_delta0(&formula, &assign).unwrap();
                    assert_eq!(got, want, "p={p} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn function_formula_matches_direct_check() {
        // Oracle: f is a set of kpairs, first components exactly an
        // ordinal d, single-valued.
        fn oracle(f: &HFSet, d: &HFSet) -> bool {
            if d.as_vn().is_none() {
                return false;
            }
            let mut firsts = Vec::new();
            for p in f.elems() {
                match p.as_kpair() {
                    Some((a, _)) => firsts.push(a),
                    None => return false,
                }
            }
            for a in &firsts {
                if !d.contains(a) {
                    return false;
                }
            }
            for x in d.elems() {
                if !firsts.contains(x) {
                    return false;
                }
            }
            let mut seen: BTreeMap<HFSet, HFSet> = BTreeMap::new();
            for p in f.elems() {
                let (a, b) = p.as_kpair().unwrap();
                if let Some(prev) = seen.get(&a) {
                    if *prev != b {
                        return false;
                    }
                }
                seen.insert(a, b);
            }
            true
        }
        let formula = func_with_ordinal_domain(&Term::Var(0), &Term::Var(1));
        let candidates = [
            (HFSet::empty(), HFSet::vn(0), true),
            (HFSet::seq_object(&[HFSet::vn(1)]), HFSet::vn(1), true),
            (
                HFSet::seq_object(&[HFSet::vn(1), HFSet::empty()]),
                HFSet::vn(2),
                true,
            ),
            // Wrong domain size.
            (HFSet::seq_object(&[HFSet::vn(1)]), HFSet::vn(2), false),
            // Not a set of pairs.
            (HFSet::vn(2), HFSet::vn(1), false),
            // Domain not an ordinal.
            (
                HFSet::singleton(HFSet::kpair(HFSet::vn(1), HFSet::empty())),
                HFSet::singleton(HFSet::vn(1)),
                false,
            ),
            // Double-valued at 0.
            (
                HFSet::new([
                    HFSet::kpair(HFSet::vn(0), HFSet::vn(1)),
                    HFSet::kpair(HFSet::vn(0), HFSet::vn(2)),
                ]),
                HFSet::vn(1),
                false,
            ),
        ];
        for (f, d, expect) in candidates {
            assert_eq!(oracle(&f, &d), expect, "oracle sanity for f={f} d={d}");
            let mut assign = Assignment::new();
            assign.insert(0, f.clone());
            assign.insert(1, d.clone());
            let got = eval_delta0(&formula, &assign).unwrap();
            assert_eq!(got, expect, "f={f} d={d}");
        }
    }

    #[test]
    fn wide_bounded_quantifiers_see_tuple_members() {
        // y holds the 2-tuples (0, 1) and (1, 1) plus a non-tuple decoy.
        let t01 = HFSet::seq_object(&[HFSet::vn(0), HFSet::vn(1)]);
        let t11 = HFSet::seq_object(&[HFSet::vn(1), HFSet::vn(1)]);
        let y = HFSet::new([t01.clone(), t11.clone(), HFSet::vn(1)]);
        let ctx = Context::new(vec![0, 1]);
        // All tuple members end in 1.
        let all_end_one = make_bounded_forall(
            ctx.clone(),
            Term::Const(y.clone()),
            Formula::Eq(Term::Var(1), Term::Const(HFSet::vn(1))),
        )
        .unwrap();
        // Some tuple member starts with 1.
        let some_start_one = make_bounded_exists(
            ctx.clone(),
            Term::Const(y.clone()),
            Formula::Eq(Term::Var(0), Term::Const(HFSet::vn(1))),
        )
        .unwrap();
        // Some tuple member starts with 2: false.
        let some_start_two = make_bounded_exists(
            ctx,
            Term::Const(y.clone()),
            Formula::Eq(Term::Var(0), Term::Const(HFSet::vn(2))),
        )
        .unwrap();
        let empty = Assignment::new();
        assert!(eval_delta0(&all_end_one, &empty).unwrap());
        assert!(eval_delta0(&some_start_one, &empty).unwrap());
        assert!(!eval_delta0(&some_start_two, &empty).unwrap());
        // Brute force agrees on a universe containing the witnesses.
        let u = sentence_universe(&v_level(4), &all_end_one);
        assert!(eval_bruteforce(&all_end_one, &u, &empty).unwrap());
        assert!(eval_bruteforce(&some_start_one, &u, &empty).unwrap());
        assert!(!eval_bruteforce(&some_start_two, &u, &empty).unwrap());
    }

    #[test]
    fn universe_closure_is_transitive() {
        let u = sentence_universe(
            &v_level(3),
            &parse_formula("(mem {{{}},{{},{{}}}} x0)").unwrap(),
        );
        for s in &u {
            for m in s.elems() {
                assert!(u.contains(m), "member {m} of {s} escaped the universe");
            }
        }
    }
}

//! The formula language: first-order set theory with ordinal-indexed
//! conjunctions and disjunctions and tuple quantifiers.
//!
//! Connective sequences come in two shapes: `Listed` (finitely many parts,
//! given outright) and `Cyclic` (an ordinal-length family whose part at
//! index i is cycle[finite_part(i) mod k]). These are the only generators,
//! so every family here has a decidable presentation by construction.
//!
//! Quantifiers bind tuples of variables. A quantifier over a tuple is
//! bounded when its body follows the guard discipline: for a single
//! variable the guard is plain membership in a term; for wider tuples the
//! guard is the tuple-membership expansion built by `expand_with_base`,
//! which this module can also recognize structurally, so substitution
//! commutes with classification.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::hfset::HFSet;
use crate::ordinal::Ordinal;

pub type VarId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("formula parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("tuple expansion supports widths 1..=8, got {0}")]
    WidthUnsupported(usize),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(VarId),
    Const(HFSet),
}

impl Term {
    pub fn var_id(&self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        }
    }
}

/// A tuple of distinct bound variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Context(pub Vec<VarId>);

impl Context {
    pub fn new(vars: Vec<VarId>) -> Self {
        let mut seen = BTreeSet::new();
        assert!(
            vars.iter().all(|v| seen.insert(*v)),
            "context variables must be distinct"
        );
        Context(vars)
    }

    pub fn one(v: VarId) -> Self {
        Context(vec![v])
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.contains(&v)
    }
}

/// An ordinal-indexed family of formulas with a finite presentation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FormulaSeq {
    Listed(Vec<Formula>),
    Cyclic { len: Ordinal, cycle: Vec<Formula> },
}

impl FormulaSeq {
    pub fn len(&self) -> Ordinal {
        match self {
            FormulaSeq::Listed(v) => Ordinal::nat(v.len() as u64),
            FormulaSeq::Cyclic { len, .. } => len.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len().is_zero()
    }

    /// The part at an ordinal index, when the index is in range.
    pub fn part(&self, i: &Ordinal) -> Option<&Formula> {
        if *i >= self.len() {
            return None;
        }
        match self {
            FormulaSeq::Listed(v) => v.get(i.as_nat()? as usize),
            FormulaSeq::Cyclic { cycle, .. } => {
                let k = cycle.len() as u64;
                if k == 0 {
                    None
                } else {
                    cycle.get(i.fin_mod(k) as usize)
                }
            }
        }
    }

    /// One representative index per distinct part. Covers the whole family:
    /// every index holds a formula equal to some representative's.
    pub fn representatives(&self) -> Vec<(Ordinal, &Formula)> {
        let mut seen: Vec<&Formula> = Vec::new();
        let mut out = Vec::new();
        let indices: Vec<Ordinal> = match self {
            FormulaSeq::Listed(v) => (0..v.len() as u64).map(Ordinal::nat).collect(),
            FormulaSeq::Cyclic { len, cycle } => {
                let upper = match len.as_nat() {
                    Some(n) => n.min(cycle.len() as u64),
                    None => cycle.len() as u64,
                };
                (0..upper).map(Ordinal::nat).collect()
            }
        };
        for i in indices {
            let f = self.part(&i).expect("index in range");
            if !seen.contains(&f) {
                seen.push(f);
                out.push((i, f));
            }
        }
        out
    }

    /// Indices exercised by verification: all of them for listed families,
    /// two cycles' worth plus transfinite spot checks for cyclic ones.
    pub fn sample_indices(&self) -> Vec<Ordinal> {
        match self {
            FormulaSeq::Listed(v) => (0..v.len() as u64).map(Ordinal::nat).collect(),
            FormulaSeq::Cyclic { len, cycle } => {
                let k = cycle.len() as u64;
                let finite_upper = match len.as_nat() {
                    Some(n) => n.min(2 * k.max(1)),
                    None => 2 * k.max(1),
                };
                let mut out: Vec<Ordinal> =
                    (0..finite_upper).map(Ordinal::nat).collect();
                let omega = Ordinal::omega();
                for extra in 0..2u64 {
                    let idx = omega.add(&Ordinal::nat(extra));
                    if idx < *len {
                        out.push(idx);
                    }
                }
                out
            }
        }
    }

    fn parts_syntactic(&self) -> &[Formula] {
        match self {
            FormulaSeq::Listed(v) => v,
            FormulaSeq::Cyclic { cycle, .. } => cycle,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Bottom,
    Mem(Term, Term),
    Eq(Term, Term),
    Implies(Box<Formula>, Box<Formula>),
    Conj(FormulaSeq),
    Disj(FormulaSeq),
    Exists(Context, Box<Formula>),
    Forall(Context, Box<Formula>),
}

impl Formula {
    pub fn top() -> Formula {
        Formula::Conj(FormulaSeq::Listed(vec![]))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Implies(Box::new(f), Box::new(Formula::Bottom))
    }

    pub fn conj(parts: Vec<Formula>) -> Formula {
        Formula::Conj(FormulaSeq::Listed(parts))
    }

    pub fn disj(parts: Vec<Formula>) -> Formula {
        Formula::Disj(FormulaSeq::Listed(parts))
    }

    pub fn imp(p: Formula, q: Formula) -> Formula {
        Formula::Implies(Box::new(p), Box::new(q))
    }

    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<VarId>, out: &mut BTreeSet<VarId>) {
        let term = |t: &Term, bound: &Vec<VarId>, out: &mut BTreeSet<VarId>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(*v);
                }
            }
        };
        match self {
            Formula::Bottom => {}
            Formula::Mem(a, b) | Formula::Eq(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::Implies(p, q) => {
                p.collect_free(bound, out);
                q.collect_free(bound, out);
            }
            Formula::Conj(seq) | Formula::Disj(seq) => {
                for f in seq.parts_syntactic() {
                    f.collect_free(bound, out);
                }
            }
            Formula::Exists(ctx, body) | Formula::Forall(ctx, body) => {
                let n = bound.len();
                bound.extend(ctx.0.iter().copied());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Whether any connective family has transfinite length.
    pub fn is_infinitary(&self) -> bool {
        match self {
            Formula::Bottom | Formula::Mem(..) | Formula::Eq(..) => false,
            Formula::Implies(p, q) => p.is_infinitary() || q.is_infinitary(),
            Formula::Conj(seq) | Formula::Disj(seq) => {
                !seq.len().is_finite()
                    || seq.parts_syntactic().iter().any(|f| f.is_infinitary())
            }
            Formula::Exists(_, body) | Formula::Forall(_, body) => body.is_infinitary(),
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution.
// ---------------------------------------------------------------------------

fn subst_term(t: &Term, map: &BTreeMap<VarId, Term>) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
    }
}

/// Capture-unaware substitution: safe whenever the replacement terms are
/// constants, which is the only use in this crate.
pub fn substitute(f: &Formula, map: &BTreeMap<VarId, Term>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Bottom => Formula::Bottom,
        Formula::Mem(a, b) => Formula::Mem(subst_term(a, map), subst_term(b, map)),
        Formula::Eq(a, b) => Formula::Eq(subst_term(a, map), subst_term(b, map)),
        Formula::Implies(p, q) => Formula::imp(substitute(p, map), substitute(q, map)),
        Formula::Conj(seq) => Formula::Conj(subst_seq(seq, map)),
        Formula::Disj(seq) => Formula::Disj(subst_seq(seq, map)),
        Formula::Exists(ctx, body) => {
            let inner = shadowed(map, ctx);
            Formula::Exists(ctx.clone(), Box::new(substitute(body, &inner)))
        }
        Formula::Forall(ctx, body) => {
            let inner = shadowed(map, ctx);
            Formula::Forall(ctx.clone(), Box::new(substitute(body, &inner)))
        }
    }
}

fn shadowed(map: &BTreeMap<VarId, Term>, ctx: &Context) -> BTreeMap<VarId, Term> {
    map.iter()
        .filter(|(v, _)| !ctx.contains(**v))
        .map(|(v, t)| (*v, t.clone()))
        .collect()
}

fn subst_seq(seq: &FormulaSeq, map: &BTreeMap<VarId, Term>) -> FormulaSeq {
    match seq {
        FormulaSeq::Listed(v) => {
            FormulaSeq::Listed(v.iter().map(|f| substitute(f, map)).collect())
        }
        FormulaSeq::Cyclic { len, cycle } => FormulaSeq::Cyclic {
            len: len.clone(),
            cycle: cycle.iter().map(|f| substitute(f, map)).collect(),
        },
    }
}

/// Substitutes sets for the context variables.
pub fn subst_sets(f: &Formula, ctx: &Context, values: &[HFSet]) -> Formula {
    assert_eq!(ctx.width(), values.len(), "context and values must align");
    let map: BTreeMap<VarId, Term> = ctx
        .0
        .iter()
        .zip(values.iter())
        .map(|(v, s)| (*v, Term::Const(s.clone())))
        .collect();
    substitute(f, &map)
}

// ---------------------------------------------------------------------------
// The tuple-membership expansion and its library of bounded formulas.
// ---------------------------------------------------------------------------

/// Sequential variable allocator for freshly bound helper variables.
struct VarAlloc(VarId);

impl VarAlloc {
    fn fresh(&mut self) -> VarId {
        let v = self.0;
        self.0 += 1;
        v
    }
}

fn v(id: VarId) -> Term {
    Term::Var(id)
}

/// Bounded universal over one variable: (all (x) (imp (mem x t) body)).
pub fn bforall(x: VarId, bound: Term, body: Formula) -> Formula {
    Formula::Forall(
        Context::one(x),
        Box::new(Formula::imp(Formula::Mem(v(x), bound), body)),
    )
}

/// Bounded existential over one variable: (ex (x) (and (mem x t) body)).
pub fn bexists(x: VarId, bound: Term, body: Formula) -> Formula {
    Formula::Exists(
        Context::one(x),
        Box::new(Formula::conj(vec![Formula::Mem(v(x), bound), body])),
    )
}

/// q = {a}: a in q and nothing else is.
fn set_is_singleton(q: VarId, a: &Term, alloc: &mut VarAlloc) -> Formula {
    let r = alloc.fresh();
    Formula::conj(vec![
        Formula::Mem(a.clone(), v(q)),
        bforall(r, v(q), Formula::Eq(v(r), a.clone())),
    ])
}

/// q = {a, b}.
fn set_is_pair(q: VarId, a: &Term, b: &Term, alloc: &mut VarAlloc) -> Formula {
    let r = alloc.fresh();
    Formula::conj(vec![
        Formula::Mem(a.clone(), v(q)),
        Formula::Mem(b.clone(), v(q)),
        bforall(
            r,
            v(q),
            Formula::disj(vec![Formula::Eq(v(r), a.clone()), Formula::Eq(v(r), b.clone())]),
        ),
    ])
}

/// p is the Kuratowski pair of a and b. Purely bounded.
fn is_kpair_with(p: &Term, a: &Term, b: &Term, alloc: &mut VarAlloc) -> Formula {
    let q1 = alloc.fresh();
    let all_q = {
        let q = alloc.fresh();
        let sing = set_is_singleton(q, a, alloc);
        let pair = set_is_pair(q, a, b, alloc);
        bforall(q, p.clone(), Formula::disj(vec![sing, pair]))
    };
    let has_sing = {
        let body = set_is_singleton(q1, a, alloc);
        bexists(q1, p.clone(), body)
    };
    let has_pair = {
        let q2 = alloc.fresh();
        let body = set_is_pair(q2, a, b, alloc);
        bexists(q2, p.clone(), body)
    };
    Formula::conj(vec![all_q, has_sing, has_pair])
}

/// Public form with automatically allocated helper variables.
pub fn is_kpair(p: &Term, a: &Term, b: &Term) -> Formula {
    let mut alloc = VarAlloc(fresh_above(&[p, a, b]));
    is_kpair_with(p, a, b, &mut alloc)
}

fn fresh_above(terms: &[&Term]) -> VarId {
    terms
        .iter()
        .filter_map(|t| t.var_id())
        .max()
        .map_or(0, |m| m + 1)
}

/// f(z) = x, bounded in f: some pair in f couples z with x.
fn apply_eq_with(f: &Term, z: &Term, x: &Term, alloc: &mut VarAlloc) -> Formula {
    let p = alloc.fresh();
    let body = is_kpair_with(&v(p), z, x, alloc);
    bexists(p, f.clone(), body)
}

/// d is transitive and every member of d is transitive: d is an ordinal
/// under foundation, which the decoded universe guarantees.
fn is_ordinal_with(d: &Term, alloc: &mut VarAlloc) -> Formula {
    let x = alloc.fresh();
    let y = alloc.fresh();
    let z = alloc.fresh();
    let d_transitive = bforall(
        x,
        d.clone(),
        bforall(y, v(x), Formula::Mem(v(y), d.clone())),
    );
    let x2 = alloc.fresh();
    let members_transitive = bforall(
        x2,
        d.clone(),
        bforall(y, v(x2), bforall(z, v(y), Formula::Mem(v(z), v(x2)))),
    );
    Formula::conj(vec![d_transitive, members_transitive])
}

/// f is a function whose domain is the ordinal d. Purely bounded.
fn func_with_ordinal_domain_with(f: &Term, d: &Term, alloc: &mut VarAlloc) -> Formula {
    let ordinal_d = is_ordinal_with(d, alloc);
    // Every element of f is a pair whose first component lies in d.
    let pairs_over_d = {
        let p = alloc.fresh();
        let q = alloc.fresh();
        let a = alloc.fresh();
        let q2 = alloc.fresh();
        let b = alloc.fresh();
        let inner = Formula::conj(vec![
            is_kpair_with(&v(p), &v(a), &v(b), alloc),
            Formula::Mem(v(a), d.clone()),
        ]);
        bforall(
            p,
            f.clone(),
            bexists(q, v(p), bexists(a, v(q), bexists(q2, v(p), bexists(b, v(q2), inner)))),
        )
    };
    // Every point of d has a value.
    let total = {
        let a = alloc.fresh();
        let p = alloc.fresh();
        let q = alloc.fresh();
        let b = alloc.fresh();
        let inner = is_kpair_with(&v(p), &v(a), &v(b), alloc);
        bforall(
            a,
            d.clone(),
            bexists(p, f.clone(), bexists(q, v(p), bexists(b, v(q), inner))),
        )
    };
    // At most one value per point.
    let single_valued = {
        let p1 = alloc.fresh();
        let p2 = alloc.fresh();
        let q1 = alloc.fresh();
        let a1 = alloc.fresh();
        let r1 = alloc.fresh();
        let b1 = alloc.fresh();
        let q2 = alloc.fresh();
        let a2 = alloc.fresh();
        let r2 = alloc.fresh();
        let b2 = alloc.fresh();
        let kp1 = is_kpair_with(&v(p1), &v(a1), &v(b1), alloc);
        let kp2 = is_kpair_with(&v(p2), &v(a2), &v(b2), alloc);
        let hyp = Formula::conj(vec![kp1, kp2, Formula::Eq(v(a1), v(a2))]);
        let core = Formula::imp(hyp, Formula::Eq(v(b1), v(b2)));
        bforall(
            p1,
            f.clone(),
            bforall(
                p2,
                f.clone(),
                bforall(
                    q1,
                    v(p1),
                    bforall(
                        a1,
                        v(q1),
                        bforall(
                            r1,
                            v(p1),
                            bforall(
                                b1,
                                v(r1),
                                bforall(
                                    q2,
                                    v(p2),
                                    bforall(
                                        a2,
                                        v(q2),
                                        bforall(r2, v(p2), bforall(b2, v(r2), core)),
                                    ),
                                ),
                            ),
                        ),
                    ),
                ),
            ),
        )
    };
    Formula::conj(vec![ordinal_d, pairs_over_d, total, single_valued])
}

/// Public form with automatically allocated helper variables.
pub fn func_with_ordinal_domain(f: &Term, d: &Term) -> Formula {
    let mut alloc = VarAlloc(fresh_above(&[f, d]));
    func_with_ordinal_domain_with(f, d, &mut alloc)
}

/// The tuple-membership formula: the tuple (x_0..x_{w-1}) belongs to y,
/// spelled out as "some function f in y has ordinal domain d enumerated by
/// an epsilon-chain z_0 in z_1 in ... covering d, with f(z_j) = x_j".
/// Each binder carries its own restricting conjunct first, so a
/// backtracking evaluator discards candidates before touching the inner
/// quantifiers. `base` is the first helper variable index; the builder and
/// the matcher must agree on it, so the matcher reads it off the outermost
/// binder.
pub fn expand_with_base(xs: &[Term], y: &Term, base: VarId) -> Formula {
    let w = xs.len();
    let f = base;
    let d = base + 1;
    let zs: Vec<VarId> = (0..w as u64).map(|j| base + 2 + j).collect();
    let cover = base + 2 + w as u64;
    let mut alloc = VarAlloc(base + 3 + w as u64);

    let func = func_with_ordinal_domain_with(&v(f), &v(d), &mut alloc);
    let points = Formula::conj(
        (0..w)
            .map(|j| {
                Formula::conj(vec![
                    Formula::Mem(v(zs[j]), v(d)),
                    apply_eq_with(&v(f), &v(zs[j]), &xs[j], &mut alloc),
                ])
            })
            .collect(),
    );
    let mut chain = Vec::new();
    for j in 0..w {
        for jp in 0..j {
            chain.push(Formula::Mem(v(zs[jp]), v(zs[j])));
        }
    }
    let covering = bforall(
        cover,
        v(d),
        Formula::disj(zs.iter().map(|z| Formula::Eq(v(*z), v(cover))).collect()),
    );
    let z_part = Formula::Exists(
        Context::new(zs.clone()),
        Box::new(Formula::conj(vec![points, Formula::conj(chain), covering])),
    );
    let d_part = Formula::Exists(
        Context::one(d),
        Box::new(Formula::conj(vec![func, z_part])),
    );
    Formula::Exists(
        Context::one(f),
        Box::new(Formula::conj(vec![Formula::Mem(v(f), y.clone()), d_part])),
    )
}

/// Builds the expansion with helper variables above everything in sight.
pub fn expand_seq_membership(xs: &[Term], y: &Term) -> Formula {
    let mut refs: Vec<&Term> = xs.iter().collect();
    refs.push(y);
    expand_with_base(xs, y, fresh_above(&refs))
}

/// Recognizes a tuple-membership expansion guarding the given context
/// variables, returning the bound term. The base is read off the outermost
/// binder and the candidate is rebuilt for structural comparison.
pub fn match_seq_expansion(guard: &Formula, ctx: &Context) -> Option<Term> {
    let Formula::Exists(fctx, inner1) = guard else {
        return None;
    };
    let [f] = fctx.0.as_slice() else { return None };
    let base = *f;
    let Formula::Conj(FormulaSeq::Listed(parts)) = inner1.as_ref() else {
        return None;
    };
    let Some(Formula::Mem(ft, y)) = parts.first() else {
        return None;
    };
    if ft.var_id() != Some(base) {
        return None;
    }
    let xs: Vec<Term> = ctx.0.iter().map(|vid| Term::Var(*vid)).collect();
    let rebuilt = expand_with_base(&xs, y, base);
    if rebuilt != *guard {
        return None;
    }
    // Helpers must be fresh relative to the quantified tuple and the bound.
    let w = ctx.width() as u64;
    let helper_top = base + 3 + w + 64;
    for vid in base..helper_top {
        if ctx.contains(vid) {
            return None;
        }
    }
    if let Term::Var(yv) = y {
        if *yv >= base || ctx.contains(*yv) {
            return None;
        }
    }
    Some(y.clone())
}

// ---------------------------------------------------------------------------
// Bounded quantifier constructors and the bounded-pattern view.
// ---------------------------------------------------------------------------

/// Bounded universal over a tuple: single variables use plain membership,
/// wider tuples use the expansion guard.
pub fn make_bounded_forall(
    ctx: Context,
    bound: Term,
    body: Formula,
) -> Result<Formula, FormulaError> {
    let guard = tuple_guard(&ctx, &bound)?;
    Ok(Formula::Forall(ctx, Box::new(Formula::imp(guard, body))))
}

/// Bounded existential over a tuple.
pub fn make_bounded_exists(
    ctx: Context,
    bound: Term,
    body: Formula,
) -> Result<Formula, FormulaError> {
    let guard = tuple_guard(&ctx, &bound)?;
    Ok(Formula::Exists(
        ctx,
        Box::new(Formula::conj(vec![guard, body])),
    ))
}

fn tuple_guard(ctx: &Context, bound: &Term) -> Result<Formula, FormulaError> {
    if let Term::Var(b) = bound {
        assert!(!ctx.contains(*b), "bound must not be quantified over");
    }
    match ctx.width() {
        1 => Ok(Formula::Mem(Term::Var(ctx.0[0]), bound.clone())),
        w if (2..=8).contains(&w) => {
            let xs: Vec<Term> = ctx.0.iter().map(|vd| Term::Var(*vd)).collect();
            let mut refs: Vec<&Term> = xs.iter().collect();
            refs.push(bound);
            let base = fresh_above(&refs).max(ctx.0.iter().max().map_or(0, |m| m + 1));
            Ok(expand_with_base(&xs, bound, base))
        }
        w => Err(FormulaError::WidthUnsupported(w)),
    }
}

/// A quantifier in guard discipline, decomposed.
pub enum BoundedView<'a> {
    ForallIn { ctx: &'a Context, bound: Term, body: &'a Formula },
    ExistsIn { ctx: &'a Context, bound: Term, body: &'a Formula },
}

/// Recognizes bounded quantifiers, including expansion guards.
pub fn as_bounded(f: &Formula) -> Option<BoundedView<'_>> {
    match f {
        Formula::Forall(ctx, body) => {
            let Formula::Implies(guard, rest) = body.as_ref() else {
                return None;
            };
            let bound = guard_bound(guard, ctx)?;
            Some(BoundedView::ForallIn { ctx, bound, body: rest })
        }
        Formula::Exists(ctx, body) => {
            let Formula::Conj(FormulaSeq::Listed(parts)) = body.as_ref() else {
                return None;
            };
            let [guard, rest] = parts.as_slice() else {
                return None;
            };
            let bound = guard_bound(guard, ctx)?;
            Some(BoundedView::ExistsIn { ctx, bound, body: rest })
        }
        _ => None,
    }
}

fn guard_bound(guard: &Formula, ctx: &Context) -> Option<Term> {
    match ctx.width() {
        1 => match guard {
            Formula::Mem(Term::Var(x), bound) if *x == ctx.0[0] => {
                if bound.var_id() == Some(*x) {
                    None
                } else {
                    Some(bound.clone())
                }
            }
            _ => None,
        },
        _ => match_seq_expansion(guard, ctx),
    }
}

// ---------------------------------------------------------------------------
// Classification.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Fragment {
    /// All quantifiers bounded.
    Delta0,
    /// One unbounded existential tuple over a Delta0 matrix.
    Sigma1,
    /// Anything else.
    General,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Classification {
    pub fragment: Fragment,
    pub infinitary: bool,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match (self.fragment, self.infinitary) {
            (Fragment::Delta0, false) => "delta0-fin",
            (Fragment::Sigma1, false) => "sigma1-fin",
            (Fragment::General, false) => "general-fin",
            (Fragment::Delta0, true) => "delta0-inf",
            (Fragment::Sigma1, true) => "sigma1-inf",
            (Fragment::General, true) => "general-inf",
        }
    }
}

pub fn is_delta0(f: &Formula) -> bool {
    match f {
        Formula::Bottom | Formula::Mem(..) | Formula::Eq(..) => true,
        Formula::Implies(p, q) => is_delta0(p) && is_delta0(q),
        Formula::Conj(seq) | Formula::Disj(seq) => {
            seq.parts_syntactic().iter().all(is_delta0)
        }
        Formula::Exists(..) | Formula::Forall(..) => match as_bounded(f) {
            Some(BoundedView::ForallIn { body, .. })
            | Some(BoundedView::ExistsIn { body, .. }) => is_delta0(body),
            None => false,
        },
    }
}

pub fn classify(f: &Formula) -> Classification {
    let infinitary = f.is_infinitary();
    let fragment = if is_delta0(f) {
        Fragment::Delta0
    } else if let Formula::Exists(_, body) = f {
        if is_delta0(body) {
            Fragment::Sigma1
        } else {
            Fragment::General
        }
    } else {
        Fragment::General
    };
    Classification { fragment, infinitary }
}

// ---------------------------------------------------------------------------
// Text form: s-expressions.
// ---------------------------------------------------------------------------

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(id) => write!(f, "x{id}"),
            Term::Const(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Bottom => write!(out, "(bot)"),
            Formula::Mem(a, b) => write!(out, "(mem {a} {b})"),
            Formula::Eq(a, b) => write!(out, "(eq {a} {b})"),
            Formula::Implies(p, q) => write!(out, "(imp {p} {q})"),
            Formula::Conj(seq) => write_seq(out, "and", seq),
            Formula::Disj(seq) => write_seq(out, "or", seq),
            Formula::Exists(ctx, body) => write_quant(out, "ex", ctx, body),
            Formula::Forall(ctx, body) => write_quant(out, "all", ctx, body),
        }
    }
}

fn write_seq(out: &mut fmt::Formatter<'_>, op: &str, seq: &FormulaSeq) -> fmt::Result {
    match seq {
        FormulaSeq::Listed(parts) => {
            write!(out, "({op}")?;
            for p in parts {
                write!(out, " {p}")?;
            }
            write!(out, ")")
        }
        FormulaSeq::Cyclic { len, cycle } => {
            write!(out, "({op}-cyclic \"{len}\"")?;
            for p in cycle {
                write!(out, " {p}")?;
            }
            write!(out, ")")
        }
    }
}

fn write_quant(
    out: &mut fmt::Formatter<'_>,
    op: &str,
    ctx: &Context,
    body: &Formula,
) -> fmt::Result {
    write!(out, "({op} (")?;
    for (i, v) in ctx.0.iter().enumerate() {
        if i > 0 {
            write!(out, " ")?;
        }
        write!(out, "x{v}")?;
    }
    write!(out, ") {body})")
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
    Quoted(String),
    Braced(String),
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b'"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' {
                    j += 1;
                }
                if j == bytes.len() {
                    return Err(FormulaError::Parse {
                        pos: i,
                        msg: "unterminated quote".into(),
                    });
                }
                out.push((i, Tok::Quoted(s[start..j].to_string())));
                i = j + 1;
            }
            b'{' => {
                let start = i;
                let mut depth = 0i32;
                let mut j = i;
                while j < bytes.len() {
                    match bytes[j] {
                        b'{' => depth += 1,
                        b'}' => {
                            depth -= 1;
                            if depth == 0 {
                                j += 1;
                                break;
                            }
                        }
                        _ => {}
                    }
                    j += 1;
                }
                if depth != 0 {
                    return Err(FormulaError::Parse {
                        pos: start,
                        msg: "unbalanced braces".into(),
                    });
                }
                out.push((start, Tok::Braced(s[start..j].to_string())));
                i = j;
            }
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                out.push((start, Tok::Atom(s[start..i].to_string())));
            }
        }
    }
    Ok(out)
}

struct FormulaParser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl FormulaParser {
    fn err<T>(&self, msg: &str) -> Result<T, FormulaError> {
        let pos = self.toks.get(self.pos).map_or(usize::MAX, |(p, _)| *p);
        Err(FormulaError::Parse { pos, msg: msg.to_string() })
    }

    fn next(&mut self) -> Option<&(usize, Tok)> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_open(&mut self) -> Result<(), FormulaError> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Open)) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected '('"),
        }
    }

    fn expect_close(&mut self) -> Result<(), FormulaError> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Close)) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected ')'"),
        }
    }

    fn at_close(&self) -> bool {
        matches!(self.toks.get(self.pos), Some((_, Tok::Close)))
    }

    fn parse_term(&mut self) -> Result<Term, FormulaError> {
        match self.next() {
            Some((pos, Tok::Atom(a))) => {
                let (pos, a) = (*pos, a.clone());
                if let Some(num) = a.strip_prefix('x') {
                    let id: VarId = num.parse().map_err(|_| FormulaError::Parse {
                        pos,
                        msg: format!("bad variable '{a}'"),
                    })?;
                    Ok(Term::Var(id))
                } else {
                    Err(FormulaError::Parse {
                        pos,
                        msg: format!("expected a term, got '{a}'"),
                    })
                }
            }
            Some((pos, Tok::Braced(b))) => {
                let (pos, b) = (*pos, b.clone());
                let set = crate::hfset::parse_hfset(&b).map_err(|e| FormulaError::Parse {
                    pos,
                    msg: format!("bad set constant: {e}"),
                })?;
                Ok(Term::Const(set))
            }
            _ => self.err("expected a term"),
        }
    }

    fn parse_context(&mut self) -> Result<Context, FormulaError> {
        self.expect_open()?;
        let mut vars = Vec::new();
        while !self.at_close() {
            match self.parse_term()? {
                Term::Var(id) => vars.push(id),
                Term::Const(_) => return self.err("context must list variables"),
            }
        }
        self.expect_close()?;
        let mut seen = BTreeSet::new();
        if !vars.iter().all(|v| seen.insert(*v)) {
            return self.err("context variables must be distinct");
        }
        Ok(Context(vars))
    }

    fn parse_formula(&mut self) -> Result<Formula, FormulaError> {
        self.expect_open()?;
        let head = match self.next() {
            Some((_, Tok::Atom(a))) => a.clone(),
            _ => return self.err("expected an operator"),
        };
        let f = match head.as_str() {
            "bot" => Formula::Bottom,
            "mem" => {
                let a = self.parse_term()?;
                let b = self.parse_term()?;
                Formula::Mem(a, b)
            }
            "eq" => {
                let a = self.parse_term()?;
                let b = self.parse_term()?;
                Formula::Eq(a, b)
            }
            "imp" => {
                let p = self.parse_formula()?;
                let q = self.parse_formula()?;
                Formula::imp(p, q)
            }
            "and" | "or" => {
                let mut parts = Vec::new();
                while !self.at_close() {
                    parts.push(self.parse_formula()?);
                }
                if head == "and" {
                    Formula::conj(parts)
                } else {
                    Formula::disj(parts)
                }
            }
            "and-cyclic" | "or-cyclic" => {
                let len = match self.next() {
                    Some((pos, Tok::Quoted(q))) => {
                        let (pos, q) = (*pos, q.clone());
                        crate::ordinal::parse_ordinal(&q).map_err(|e| {
                            FormulaError::Parse { pos, msg: format!("bad length: {e}") }
                        })?
                    }
                    _ => return self.err("expected a quoted ordinal length"),
                };
                let mut cycle = Vec::new();
                while !self.at_close() {
                    cycle.push(self.parse_formula()?);
                }
                if cycle.is_empty() {
                    return self.err("cyclic family needs at least one part");
                }
                let seq = FormulaSeq::Cyclic { len, cycle };
                if head == "and-cyclic" {
                    Formula::Conj(seq)
                } else {
                    Formula::Disj(seq)
                }
            }
            "ex" | "all" => {
                let ctx = self.parse_context()?;
                let body = self.parse_formula()?;
                if head == "ex" {
                    Formula::Exists(ctx, Box::new(body))
                } else {
                    Formula::Forall(ctx, Box::new(body))
                }
            }
            other => {
                return self.err(&format!("unknown operator '{other}'"));
            }
        };
        self.expect_close()?;
        Ok(f)
    }
}

pub fn parse_formula(s: &str) -> Result<Formula, FormulaError> {
    let toks = tokenize(s)?;
    let mut p = FormulaParser { toks, pos: 0 };
    let f = p.parse_formula()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfset::parse_hfset;

    fn c(s: &str) -> Term {
        Term::Const(parse_hfset(s).unwrap())
    }

    #[test]
    fn display_and_parse_roundtrip() {
        let samples = [
            "(bot)",
            "(mem x0 {})",
            "(eq {{}} x3)",
            "(imp (bot) (mem x0 x1))",
            "(and)",
            "(or (eq x0 x0) (bot))",
            "(ex (x0 x1) (mem x0 x1))",
            "(all (x2) (imp (mem x2 {{}}) (eq x2 {})))",
            "(and-cyclic \"w\" (mem x0 x1) (bot))",
            "(or-cyclic \"w+2\" (eq x0 x0))",
        ];
        for s in samples {
            let f = parse_formula(s).unwrap();
            assert_eq!(f.to_string(), s);
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        }
        for bad in ["", "(", "(mem x0)", "(frob)", "(ex x0 (bot))", "(and-cyclic w (bot))"] {
            assert!(parse_formula(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn free_variables_respect_binding() {
        let f = parse_formula("(ex (x0) (and (mem x0 x1) (eq x0 x2)))").unwrap();
        let fv = f.free_vars();
        assert_eq!(fv, BTreeSet::from([1, 2]));
        let g = parse_formula("(all (x1) (imp (mem x1 x1) (mem x0 x1)))").unwrap();
        assert_eq!(g.free_vars(), BTreeSet::from([0]));
    }

    #[test]
    fn substitution_shadows_bound_variables() {
        let f = parse_formula("(and (mem x0 x1) (ex (x0) (mem x0 x1)))").unwrap();
        let out = subst_sets(&f, &Context::new(vec![0, 1]), &[
            parse_hfset("{}").unwrap(),
            parse_hfset("{{}}").unwrap(),
        ]);
        assert_eq!(
            out.to_string(),
            "(and (mem {} {{}}) (ex (x0) (mem x0 {{}})))"
        );
    }

    #[test]
    fn cyclic_parts_and_samples() {
        let p = parse_formula("(bot)").unwrap();
        let q = parse_formula("(eq x0 x0)").unwrap();
        let seq = FormulaSeq::Cyclic {
            len: Ordinal::omega().add(&Ordinal::nat(2)),
            cycle: vec![p.clone(), q.clone()],
        };
        assert_eq!(seq.part(&Ordinal::nat(0)), Some(&p));
        assert_eq!(seq.part(&Ordinal::nat(3)), Some(&q));
        assert_eq!(seq.part(&Ordinal::omega()), Some(&p));
        assert_eq!(seq.part(&Ordinal::omega().add(&Ordinal::nat(1))), Some(&q));
        assert_eq!(seq.part(&Ordinal::omega().add(&Ordinal::nat(2))), None);
        let reps = seq.representatives();
        assert_eq!(reps.len(), 2);
        let samples = seq.sample_indices();
        assert!(samples.contains(&Ordinal::omega()));
        assert!(samples.iter().all(|i| *i < seq.len()));
        // Finite cyclic family shorter than its cycle.
        let seq = FormulaSeq::Cyclic { len: Ordinal::nat(1), cycle: vec![p.clone(), q] };
        assert_eq!(seq.representatives().len(), 1);
    }

    #[test]
    fn infinitary_detection() {
        let fin = parse_formula("(and (bot) (bot))").unwrap();
        assert!(!fin.is_infinitary());
        let inf = parse_formula("(and-cyclic \"w\" (bot))").unwrap();
        assert!(inf.is_infinitary());
        let nested = Formula::imp(inf, Formula::Bottom);
        assert!(nested.is_infinitary());
        let fin_cyclic = parse_formula("(and-cyclic \"3\" (bot))").unwrap();
        assert!(!fin_cyclic.is_infinitary());
    }

    #[test]
    fn bounded_single_variable_patterns() {
        let f = make_bounded_forall(Context::one(0), c("{{}}"), Formula::Eq(v(0), c("{}")))
            .unwrap();
        assert!(is_delta0(&f));
        match as_bounded(&f) {
            Some(BoundedView::ForallIn { ctx, bound, .. }) => {
                assert_eq!(ctx.0, vec![0]);
                assert_eq!(bound, c("{{}}"));
            }
            _ => panic!("should recognize bounded forall"),
        }
        let g = make_bounded_exists(Context::one(1), Term::Var(0), Formula::Bottom).unwrap();
        assert!(is_delta0(&g));
        // Unbounded quantifier is not delta0.
        let h = parse_formula("(ex (x0) (eq x0 x0))").unwrap();
        assert!(!is_delta0(&h));
        // Self-bounded membership does not count.
        let bad = parse_formula("(all (x0) (imp (mem x0 x0) (bot)))").unwrap();
        assert!(!is_delta0(&bad));
    }

    #[test]
    fn expansion_matches_itself() {
        let ctx = Context::new(vec![0, 1]);
        let xs = vec![Term::Var(0), Term::Var(1)];
        let y = Term::Var(2);
        let guard = expand_seq_membership(&xs, &y);
        assert_eq!(match_seq_expansion(&guard, &ctx), Some(y.clone()));
        // Matching under the wrong context fails.
        assert_eq!(match_seq_expansion(&guard, &Context::new(vec![0, 3])), None);
        // A perturbed guard fails.
        if let Formula::Exists(fc, body) = &guard {
            let twisted = Formula::Exists(fc.clone(), Box::new(Formula::imp((**body).clone(), Formula::Bottom)));
            assert_eq!(match_seq_expansion(&twisted, &ctx), None);
        }
    }

    #[test]
    fn wide_bounded_quantifiers_are_delta0() {
        let ctx = Context::new(vec![0, 1]);
        let f = make_bounded_forall(
            ctx.clone(),
            c("{}"),
            Formula::Eq(Term::Var(0), Term::Var(1)),
        )
        .unwrap();
        assert!(is_delta0(&f), "expansion-guarded forall");
        let g = make_bounded_exists(ctx, c("{}"), Formula::Bottom).unwrap();
        assert!(is_delta0(&g), "expansion-guarded exists");
        // Width 0 and width 9 are refused.
        assert!(make_bounded_forall(Context::new(vec![]), c("{}"), Formula::Bottom).is_err());
        assert!(make_bounded_forall(
            Context::new((0..9).collect()),
            c("{}"),
            Formula::Bottom
        )
        .is_err());
    }

    #[test]
    fn substitution_commutes_with_classification() {
        // A bounded wide quantifier keeps its pattern when outer variables
        // are replaced by constants.
        let ctx = Context::new(vec![0, 1]);
        let f = make_bounded_exists(ctx, Term::Var(9), Formula::Eq(Term::Var(0), Term::Var(1)))
            .unwrap();
        assert!(!is_delta0(&f) || f.free_vars().contains(&9));
        let g = subst_sets(&f, &Context::one(9), &[parse_hfset("{{}}").unwrap()]);
        assert!(is_delta0(&g), "substituted form stays recognizable");
        assert!(g.free_vars().is_empty());
    }

    #[test]
    fn library_formulas_are_delta0() {
        let p = is_kpair(&Term::Var(0), &Term::Var(1), &Term::Var(2));
        assert!(is_delta0(&p));
        let f = func_with_ordinal_domain(&Term::Var(0), &Term::Var(1));
        assert!(is_delta0(&f));
        assert_eq!(f.free_vars(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn classification_labels() {
        let d0 = parse_formula("(mem {} {{}})").unwrap();
        assert_eq!(classify(&d0).label(), "delta0-fin");
        let s1 = parse_formula("(ex (x0) (eq x0 {}))").unwrap();
        assert_eq!(classify(&s1).fragment, Fragment::Sigma1);
        let gen = parse_formula("(all (x0) (eq x0 x0))").unwrap();
        assert_eq!(classify(&gen).fragment, Fragment::General);
        let s1_inf = Formula::Exists(
            Context::one(0),
            Box::new(Formula::Conj(FormulaSeq::Cyclic {
                len: Ordinal::omega(),
                cycle: vec![Formula::Eq(Term::Var(0), Term::Var(0))],
            })),
        );
        let cls = classify(&s1_inf);
        assert_eq!(cls.fragment, Fragment::Sigma1);
        assert!(cls.infinitary);
        assert_eq!(cls.label(), "sigma1-inf");
    }
}

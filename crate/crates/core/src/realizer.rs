//! Realiser programs and their semantics.
//!
//! A realiser is a closed program term plus a set-code parameter. This module
//! provides the term language and its deterministic big-step interpreter, a
//! finite enumerated universe of set codes that serves as the quantification
//! domain, a bounded verifier for the realisability clauses, an extensional
//! single-valuedness check layered on top of it, direct realiser
//! constructions for true equalities and memberships, a universal synthesis
//! procedure for the decidable formula fragments, and branch/witness
//! extraction from realised disjunctions and existentials.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::code::{
    adjoin_code, build_code, build_code_scrambled, check_iso, decode_set, kpair_code,
    pair_set_code, seq_object_code, singleton_code, union_code, vn_code, Code, CodeIso,
};
use crate::formula::{
    as_bounded, classify, subst_sets, substitute, BoundedView, Formula, FormulaSeq, Fragment,
    Term, VarId,
};
use crate::hfset::{v_level, HFSet};
use crate::ordinal::{Ordinal, OrdinalBound};
use crate::tape::BitTape;
use crate::truth::{close_transitive, eval_bruteforce, eval_delta0, Assignment, TruthError};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Interpreter failures. Running out of fuel is always kept distinct from a
/// genuinely stuck program, so resource exhaustion can never be mistaken for
/// a semantic refusal.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("out of fuel")]
    OutOfFuel,
    #[error("stuck: {0}")]
    Stuck(String),
}

/// Failures of the realisability operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizeError {
    /// The requested realiser does not exist (the statement is false).
    #[error("refused: no realiser exists for the given statement")]
    Refused,
    /// The formula lies outside the fragment the synthesiser can decide.
    #[error("not in a synthesisable fragment: {0}")]
    NotInFragment(String),
    /// Verification needs a closed formula.
    #[error("formula has free variables: verification needs a sentence")]
    NotSentence,
    /// The formula shape does not match the requested operation.
    #[error("formula shape mismatch: {0}")]
    Shape(String),
    #[error("interpreter: {0}")]
    Eval(#[from] EvalError),
    #[error("truth engine: {0}")]
    Truth(#[from] TruthError),
}

// ---------------------------------------------------------------------------
// Values and environments
// ---------------------------------------------------------------------------

/// Runtime values of the realiser language.
#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    Code(Code),
    Ord(Ordinal),
    Tape(BitTape),
    Fml(Formula),
    Pair(Rc<Val>, Rc<Val>),
    List(Rc<Vec<Val>>),
    Closure { body: Rc<RTerm>, env: Env },
}

impl Val {
    pub fn pair(a: Val, b: Val) -> Val {
        Val::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn ord(n: u64) -> Val {
        Val::Ord(Ordinal::nat(n))
    }

    fn kind(&self) -> &'static str {
        match self {
            Val::Code(_) => "code",
            Val::Ord(_) => "ordinal",
            Val::Tape(_) => "tape",
            Val::Fml(_) => "formula",
            Val::Pair(..) => "pair",
            Val::List(_) => "list",
            Val::Closure { .. } => "closure",
        }
    }
}

/// Persistent evaluation environment (de Bruijn indexed, innermost first).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Env(Option<Rc<EnvNode>>);

#[derive(Debug, PartialEq)]
struct EnvNode {
    head: Val,
    tail: Env,
}

impl Env {
    pub fn empty() -> Env {
        Env(None)
    }

    pub fn push(&self, v: Val) -> Env {
        Env(Some(Rc::new(EnvNode {
            head: v,
            tail: self.clone(),
        })))
    }

    fn get(&self, i: u32) -> Option<&Val> {
        let mut cur = self;
        let mut i = i;
        loop {
            let node = cur.0.as_deref()?;
            if i == 0 {
                return Some(&node.head);
            }
            i -= 1;
            cur = &node.tail;
        }
    }
}

// ---------------------------------------------------------------------------
// Program terms
// ---------------------------------------------------------------------------

/// Primitive operations: direct calls into the set-code, truth and tape
/// layers, plus bounded synthesis/recursion helpers. Every primitive is
/// deterministic and total up to explicit stuck/fuel outcomes.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimOp {
    /// (code, code) → list of (node, node) pairs: the bijection witnessing
    /// that the two codes denote the same set; stuck otherwise.
    BuildIso,
    /// (code, code) → 1 if the codes denote equal sets, else 0.
    IsoTest,
    /// (element code, set code) → child node of the set code denoting the
    /// element; stuck when the element is not a member.
    DecodeMatch,
    /// (code, node ordinal) → the code re-rooted at that node.
    AtNode,
    /// (code) → least raw child node of the root; stuck on an empty set.
    /// Deliberately order-sensitive: the answer depends on the code, not
    /// just on the set it denotes.
    FirstChild,
    /// (code) → least raw child whose denoted set is disjoint from the
    /// denoted root; stuck on an empty set. Order-sensitive like FirstChild.
    MinimalChild,
    /// (container code, code a, code b) → 1 if a's first occurrence among
    /// the container's members precedes b's in raw node order, else 0.
    RawBefore,
    /// (code) → code of the strict raw precedence relation on the root's
    /// distinct members, as a set of ordered pairs. Order-sensitive.
    OrderCode,
    /// (code) → code of the singleton of the denoted set.
    SingletonCode,
    /// (code, code) → code of the unordered pair of the denoted sets.
    PairSetCode,
    /// (set code, element code) → code of set ∪ {element}.
    AdjoinCode,
    /// (code, code) → code of the ordered pair of the denoted sets.
    KPairCode,
    /// (list of codes) → code of the sequence object over the denoted sets.
    SeqCode,
    /// (code) → code of the union of the denoted set's members.
    UnionCode,
    /// (code) → canonical code of the denoted set.
    CanonCode,
    /// (ordinal n) → canonical code of the n-th von Neumann numeral.
    VnCode,
    /// (code) → n when the denoted set is the n-th von Neumann numeral.
    OrdOfVn,
    /// (code) → list of essential-domain nodes, ascending.
    EssdomList,
    /// (code) → list of raw child nodes of the root, ascending.
    ChildList,
    /// () → list of every code in the ambient enumerated universe.
    UnivCodes,
    /// (list of (code, v) pairs, code) → the v whose key denotes the same
    /// set as the probe code; stuck when absent.
    Lookup,
    /// (list, init, f) → left fold, applying f to (accumulator, item) pairs.
    Fold,
    /// (ordinal, tape) → 1 if the ordinal is a member of the ordinal set
    /// coded on the tape, else 0.
    TapeMember,
    /// (ordinal, tape) → the bit at that position (0 or 1).
    TapeBit,
    /// (formula) → truth value (1/0) of a closed bounded-quantifier formula.
    EvalTruth,
    /// (formula, code₁..codeₖ) → a realiser value for the formula with the
    /// k listed variables replaced by the decoded arguments; stuck when the
    /// instance is false or not synthesisable.
    Synth { vars: Vec<VarId> },
    /// (formula, sequence code) → as Synth, but the k components come from
    /// a single coded sequence of length `vars.len()`.
    SynthSeq { vars: Vec<VarId> },
    /// (formula φ with free `var`, code b, realiser r of the recursion
    /// premise) → a realiser of φ at b's set, built by walking the denoted
    /// set's transitive closure in rank order and feeding r at each stage a
    /// table-backed realiser of "φ holds at every member so far".
    Induct { var: VarId },
    /// (formula φ(x,y), code w, realiser s of "every member x of w has a y
    /// with φ") → pair of a code of the collected witness set w' and a
    /// realiser sending each member code of w to a witness-in-w' statement.
    Collect { xvar: VarId, yvar: VarId },
    /// (formula φ with free `var`, code w) → canonical code of the subset
    /// of w's members satisfying φ.
    Separate { var: VarId },
}

/// Program terms, de Bruijn indexed.
#[derive(Debug, Clone, PartialEq)]
pub enum RTerm {
    ConstCode(Code),
    ConstOrd(Ordinal),
    ConstTape(BitTape),
    ConstFml(Formula),
    /// The realiser's code parameter.
    Param,
    Var(u32),
    Lam(Rc<RTerm>),
    App(Rc<RTerm>, Rc<RTerm>),
    Pair(Rc<RTerm>, Rc<RTerm>),
    Fst(Rc<RTerm>),
    Snd(Rc<RTerm>),
    List(Vec<RTerm>),
    /// Select the arm whose label equals the scrutinised ordinal; arms do
    /// not bind. Falls through to `default` when no label matches.
    CaseOrd {
        scrut: Rc<RTerm>,
        arms: Vec<(Ordinal, RTerm)>,
        default: Option<Rc<RTerm>>,
    },
    /// Select arm number (finite part of the scrutinised ordinal) mod the
    /// arm count; total on all ordinals.
    CaseMod {
        scrut: Rc<RTerm>,
        arms: Vec<RTerm>,
    },
    Prim(PrimOp, Vec<RTerm>),
}

impl RTerm {
    pub fn lam(body: RTerm) -> RTerm {
        RTerm::Lam(Rc::new(body))
    }

    pub fn app(f: RTerm, x: RTerm) -> RTerm {
        RTerm::App(Rc::new(f), Rc::new(x))
    }

    pub fn pair(a: RTerm, b: RTerm) -> RTerm {
        RTerm::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn fst(t: RTerm) -> RTerm {
        RTerm::Fst(Rc::new(t))
    }

    pub fn snd(t: RTerm) -> RTerm {
        RTerm::Snd(Rc::new(t))
    }

    pub fn ord(n: u64) -> RTerm {
        RTerm::ConstOrd(Ordinal::nat(n))
    }

    /// Largest free de Bruijn index plus one; 0 for closed terms.
    pub fn free_above(&self) -> u32 {
        fn go(t: &RTerm, depth: u32) -> u32 {
            match t {
                RTerm::Var(i) => {
                    if *i >= depth {
                        i - depth + 1
                    } else {
                        0
                    }
                }
                RTerm::Lam(b) => go(b, depth + 1),
                RTerm::App(a, b) | RTerm::Pair(a, b) => go(a, depth).max(go(b, depth)),
                RTerm::Fst(a) | RTerm::Snd(a) => go(a, depth),
                RTerm::List(items) => items.iter().map(|i| go(i, depth)).max().unwrap_or(0),
                RTerm::CaseOrd {
                    scrut,
                    arms,
                    default,
                } => {
                    let mut m = go(scrut, depth);
                    for (_, a) in arms {
                        m = m.max(go(a, depth));
                    }
                    if let Some(d) = default {
                        m = m.max(go(d, depth));
                    }
                    m
                }
                RTerm::CaseMod { scrut, arms } => {
                    let mut m = go(scrut, depth);
                    for a in arms {
                        m = m.max(go(a, depth));
                    }
                    m
                }
                RTerm::Prim(_, args) => args.iter().map(|a| go(a, depth)).max().unwrap_or(0),
                _ => 0,
            }
        }
        go(self, 0)
    }

    pub fn is_closed(&self) -> bool {
        self.free_above() == 0
    }
}

/// A realiser: a closed program term together with a set-code parameter the
/// program can consult via `Param`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realizer {
    pub program: RTerm,
    pub parameter: Code,
}

impl Realizer {
    /// Wraps a closed program with the empty-set code as parameter.
    pub fn new(program: RTerm) -> Realizer {
        Realizer {
            program,
            parameter: build_code(&HFSet::empty()),
        }
    }

    pub fn with_parameter(program: RTerm, parameter: Code) -> Realizer {
        Realizer { program, parameter }
    }
}

/// The constant program realising true equalities: maps any pair of codes
/// of equal sets to the node bijection between them.
pub fn eq_program() -> RTerm {
    RTerm::lam(RTerm::Prim(
        PrimOp::BuildIso,
        vec![RTerm::fst(RTerm::Var(0)), RTerm::snd(RTerm::Var(0))],
    ))
}

/// The constant program realising true memberships: maps a code pair (a, b)
/// to the matching child node of b together with an equality realiser.
pub fn mem_program() -> RTerm {
    RTerm::lam(RTerm::pair(
        RTerm::Prim(
            PrimOp::DecodeMatch,
            vec![RTerm::fst(RTerm::Var(0)), RTerm::snd(RTerm::Var(0))],
        ),
        eq_program(),
    ))
}

// ---------------------------------------------------------------------------
// Code universes
// ---------------------------------------------------------------------------

pub const DEFAULT_RANK: usize = 3;
pub const DEFAULT_SCRAMBLES: u64 = 2;
pub const DEFAULT_FUEL: u64 = 2_000_000;

/// A finite, element-closed family of sets with one canonical and several
/// scrambled codes each: the quantification domain for verification, and
/// the search space for witness synthesis.
#[derive(Debug, Clone)]
pub struct CodeUniverse {
    sets: Vec<HFSet>,
    entries: Vec<Vec<Code>>,
    scrambles: u64,
    pub fuel: u64,
}

impl CodeUniverse {
    /// Builds the universe over the cumulative level of the given rank,
    /// together with all length-2 sequence objects over the previous level,
    /// closed under elements.
    pub fn new(rank: usize, scrambles: u64, fuel: u64) -> CodeUniverse {
        let base = v_level(rank);
        let comp = v_level(rank.saturating_sub(1));
        let mut all: Vec<HFSet> = base;
        for a in &comp {
            for b in &comp {
                all.push(HFSet::seq_object(&[a.clone(), b.clone()]));
            }
        }
        let sets = close_transitive(all);
        let entries = sets
            .iter()
            .map(|x| Self::standard_codes(x, scrambles))
            .collect();
        CodeUniverse {
            sets,
            entries,
            scrambles,
            fuel,
        }
    }

    fn standard_codes(x: &HFSet, scrambles: u64) -> Vec<Code> {
        let mut v = vec![build_code(x)];
        for seed in 1..=scrambles {
            v.push(build_code_scrambled(x, seed));
        }
        v
    }

    pub fn sets(&self) -> &[HFSet] {
        &self.sets
    }

    pub fn contains_set(&self, x: &HFSet) -> bool {
        self.sets.iter().any(|s| s == x)
    }

    /// All stored codes of the given set; sets outside the universe get a
    /// fresh standard family, so constants in formulas are always exercised
    /// on several codes.
    pub fn codes_of(&self, x: &HFSet) -> Vec<Code> {
        for (s, codes) in self.sets.iter().zip(&self.entries) {
            if s == x {
                return codes.clone();
            }
        }
        Self::standard_codes(x, self.scrambles)
    }

    pub fn all_codes(&self) -> Vec<Code> {
        self.entries.iter().flatten().cloned().collect()
    }

    /// Registers extra codes for a set, first adding the set (and its
    /// elements) with standard codes if absent. The codes must denote the
    /// set.
    pub fn add_codes(&mut self, x: &HFSet, extra: Vec<Code>) -> Result<(), RealizeError> {
        for c in &extra {
            if decode_set(c) != *x {
                return Err(RealizeError::Shape(
                    "added code does not denote the given set".into(),
                ));
            }
        }
        if !self.contains_set(x) {
            let mut members: Vec<HFSet> = x.elems().to_vec();
            members.push(x.clone());
            for m in close_transitive(members) {
                if !self.contains_set(&m) {
                    self.entries.push(Self::standard_codes(&m, self.scrambles));
                    self.sets.push(m);
                }
            }
        }
        for (s, codes) in self.sets.iter().zip(self.entries.iter_mut()) {
            if s == x {
                codes.extend(extra);
                return Ok(());
            }
        }
        unreachable!("set was inserted above")
    }

    /// Sequence objects of the given length present in the universe, with
    /// their components.
    pub fn tuple_sets(&self, width: usize) -> Vec<(HFSet, Vec<HFSet>)> {
        let mut out = Vec::new();
        for s in &self.sets {
            if let Some(items) = s.as_seq() {
                if items.len() == width {
                    out.push((s.clone(), items));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Interpreter
// ---------------------------------------------------------------------------

struct Ev<'a> {
    u: &'a CodeUniverse,
    param: &'a Code,
    fuel: u64,
}

impl Ev<'_> {
    fn tick(&mut self, n: u64) -> Result<(), EvalError> {
        if self.fuel < n {
            self.fuel = 0;
            return Err(EvalError::OutOfFuel);
        }
        self.fuel -= n;
        Ok(())
    }
}

fn stuck<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Stuck(msg.into()))
}

fn eval(t: &RTerm, env: &Env, ev: &mut Ev) -> Result<Val, EvalError> {
    ev.tick(1)?;
    match t {
        RTerm::ConstCode(c) => Ok(Val::Code(c.clone())),
        RTerm::ConstOrd(o) => Ok(Val::Ord(o.clone())),
        RTerm::ConstTape(b) => Ok(Val::Tape(b.clone())),
        RTerm::ConstFml(f) => Ok(Val::Fml(f.clone())),
        RTerm::Param => Ok(Val::Code(ev.param.clone())),
        RTerm::Var(i) => match env.get(*i) {
            Some(v) => Ok(v.clone()),
            None => stuck(format!("unbound variable {i}")),
        },
        RTerm::Lam(body) => Ok(Val::Closure {
            body: body.clone(),
            env: env.clone(),
        }),
        RTerm::App(f, x) => {
            let fv = eval(f, env, ev)?;
            let xv = eval(x, env, ev)?;
            apply(&fv, xv, ev)
        }
        RTerm::Pair(a, b) => Ok(Val::pair(eval(a, env, ev)?, eval(b, env, ev)?)),
        RTerm::Fst(p) => match eval(p, env, ev)? {
            Val::Pair(a, _) => Ok((*a).clone()),
            v => stuck(format!("first projection of a {}", v.kind())),
        },
        RTerm::Snd(p) => match eval(p, env, ev)? {
            Val::Pair(_, b) => Ok((*b).clone()),
            v => stuck(format!("second projection of a {}", v.kind())),
        },
        RTerm::List(items) => {
            let mut out = Vec::with_capacity(items.len());
            for i in items {
                out.push(eval(i, env, ev)?);
            }
            Ok(Val::List(Rc::new(out)))
        }
        RTerm::CaseOrd {
            scrut,
            arms,
            default,
        } => {
            let s = eval(scrut, env, ev)?;
            let o = match s {
                Val::Ord(o) => o,
                v => return stuck(format!("ordinal case on a {}", v.kind())),
            };
            for (label, arm) in arms {
                if *label == o {
                    return eval(arm, env, ev);
                }
            }
            match default {
                Some(d) => eval(d, env, ev),
                None => stuck(format!("no case arm for ordinal {o}")),
            }
        }
        RTerm::CaseMod { scrut, arms } => {
            let s = eval(scrut, env, ev)?;
            let o = match s {
                Val::Ord(o) => o,
                v => return stuck(format!("ordinal case on a {}", v.kind())),
            };
            if arms.is_empty() {
                return stuck("modular case with no arms");
            }
            let idx = o.fin_mod(arms.len() as u64) as usize;
            eval(&arms[idx], env, ev)
        }
        RTerm::Prim(op, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval(a, env, ev)?);
            }
            prim(op, vals, ev)
        }
    }
}

fn apply(f: &Val, arg: Val, ev: &mut Ev) -> Result<Val, EvalError> {
    ev.tick(1)?;
    match f {
        Val::Closure { body, env } => eval(body, &env.push(arg), ev),
        v => stuck(format!("applied a {}", v.kind())),
    }
}

fn want_code(v: &Val) -> Result<&Code, EvalError> {
    match v {
        Val::Code(c) => Ok(c),
        other => stuck(format!("expected a code, got a {}", other.kind())),
    }
}

fn want_ord(v: &Val) -> Result<&Ordinal, EvalError> {
    match v {
        Val::Ord(o) => Ok(o),
        other => stuck(format!("expected an ordinal, got a {}", other.kind())),
    }
}

fn want_fml(v: &Val) -> Result<&Formula, EvalError> {
    match v {
        Val::Fml(f) => Ok(f),
        other => stuck(format!("expected a formula, got a {}", other.kind())),
    }
}

fn want_list(v: &Val) -> Result<&[Val], EvalError> {
    match v {
        Val::List(items) => Ok(items),
        other => stuck(format!("expected a list, got a {}", other.kind())),
    }
}

fn want_tape(v: &Val) -> Result<&BitTape, EvalError> {
    match v {
        Val::Tape(t) => Ok(t),
        other => stuck(format!("expected a tape, got a {}", other.kind())),
    }
}

fn want_node(o: &Ordinal) -> Result<u64, EvalError> {
    match o.as_nat() {
        Some(n) => Ok(n),
        None => stuck("node index must be finite"),
    }
}

fn code_op(r: Result<Code, crate::code::CodeError>) -> Result<Val, EvalError> {
    match r {
        Ok(c) => Ok(Val::Code(c)),
        Err(e) => stuck(format!("code operation failed: {e}")),
    }
}

fn bool_ord(b: bool) -> Val {
    Val::ord(u64::from(b))
}

fn arity(vals: &[Val], n: usize, op: &str) -> Result<(), EvalError> {
    if vals.len() == n {
        Ok(())
    } else {
        stuck(format!("{op} expects {n} arguments, got {}", vals.len()))
    }
}

/// Root children in raw order, deduplicated by denotation (first occurrence
/// wins).
fn distinct_members_in_raw_order(c: &Code) -> Result<Vec<HFSet>, EvalError> {
    let mut out: Vec<HFSet> = Vec::new();
    for n in c.pre().children(c.rho()) {
        let child = c
            .at_node(*n)
            .map_err(|e| EvalError::Stuck(format!("re-rooting failed: {e}")))?;
        let d = decode_set(&child);
        if !out.contains(&d) {
            out.push(d);
        }
    }
    Ok(out)
}

fn prim(op: &PrimOp, vals: Vec<Val>, ev: &mut Ev) -> Result<Val, EvalError> {
    ev.tick(1)?;
    match op {
        PrimOp::BuildIso => {
            arity(&vals, 2, "build-iso")?;
            let a = want_code(&vals[0])?;
            let b = want_code(&vals[1])?;
            ev.tick(a.domain() + b.domain())?;
            match crate::code::build_iso(a, b) {
                Ok(iso) => {
                    let items = iso
                        .map
                        .iter()
                        .map(|(k, v)| Val::pair(Val::ord(*k), Val::ord(*v)))
                        .collect();
                    Ok(Val::List(Rc::new(items)))
                }
                Err(e) => stuck(format!("no code isomorphism: {e}")),
            }
        }
        PrimOp::IsoTest => {
            arity(&vals, 2, "iso-test")?;
            let a = want_code(&vals[0])?;
            let b = want_code(&vals[1])?;
            ev.tick(a.domain() + b.domain())?;
            Ok(bool_ord(decode_set(a) == decode_set(b)))
        }
        PrimOp::DecodeMatch => {
            arity(&vals, 2, "decode-match")?;
            let a = want_code(&vals[0])?;
            let b = want_code(&vals[1])?;
            ev.tick(a.domain() + b.domain())?;
            match crate::code::decode_match(a, b) {
                Some(node) => Ok(Val::ord(node)),
                None => stuck("no member node matches the element code"),
            }
        }
        PrimOp::AtNode => {
            arity(&vals, 2, "at-node")?;
            let c = want_code(&vals[0])?;
            let node = want_node(want_ord(&vals[1])?)?;
            code_op(c.at_node(node))
        }
        PrimOp::FirstChild => {
            arity(&vals, 1, "first-child")?;
            let c = want_code(&vals[0])?;
            match c.pre().children(c.rho()).iter().next() {
                Some(n) => Ok(Val::ord(*n)),
                None => stuck("first child of an empty set code"),
            }
        }
        PrimOp::MinimalChild => {
            arity(&vals, 1, "minimal-child")?;
            let c = want_code(&vals[0])?;
            let root = decode_set(c);
            for n in c.pre().children(c.rho()) {
                let child = c
                    .at_node(*n)
                    .map_err(|e| EvalError::Stuck(format!("re-rooting failed: {e}")))?;
                let d = decode_set(&child);
                if d.elems().iter().all(|z| !root.contains(z)) {
                    return Ok(Val::ord(*n));
                }
            }
            stuck("minimal child of an empty set code")
        }
        PrimOp::RawBefore => {
            arity(&vals, 3, "raw-before")?;
            let c = want_code(&vals[0])?;
            let a = decode_set(want_code(&vals[1])?);
            let b = decode_set(want_code(&vals[2])?);
            let members = distinct_members_in_raw_order(c)?;
            let pa = members.iter().position(|m| *m == a);
            let pb = members.iter().position(|m| *m == b);
            match (pa, pb) {
                (Some(x), Some(y)) => Ok(bool_ord(x < y)),
                _ => stuck("raw-before: a probe set is not a member"),
            }
        }
        PrimOp::OrderCode => {
            arity(&vals, 1, "order-code")?;
            let c = want_code(&vals[0])?;
            let members = distinct_members_in_raw_order(c)?;
            let mut pairs: Vec<HFSet> = Vec::new();
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    pairs.push(HFSet::kpair(members[i].clone(), members[j].clone()));
                }
            }
            Ok(Val::Code(build_code(&HFSet::new(pairs))))
        }
        PrimOp::SingletonCode => {
            arity(&vals, 1, "singleton-code")?;
            code_op(singleton_code(want_code(&vals[0])?))
        }
        PrimOp::PairSetCode => {
            arity(&vals, 2, "pair-set-code")?;
            code_op(pair_set_code(want_code(&vals[0])?, want_code(&vals[1])?))
        }
        PrimOp::AdjoinCode => {
            arity(&vals, 2, "adjoin-code")?;
            code_op(adjoin_code(want_code(&vals[0])?, want_code(&vals[1])?))
        }
        PrimOp::KPairCode => {
            arity(&vals, 2, "kpair-code")?;
            code_op(kpair_code(want_code(&vals[0])?, want_code(&vals[1])?))
        }
        PrimOp::SeqCode => {
            arity(&vals, 1, "seq-code")?;
            let items = want_list(&vals[0])?;
            let mut codes = Vec::with_capacity(items.len());
            for i in items {
                codes.push(want_code(i)?.clone());
            }
            let refs: Vec<&Code> = codes.iter().collect();
            code_op(seq_object_code(&refs))
        }
        PrimOp::UnionCode => {
            arity(&vals, 1, "union-code")?;
            code_op(union_code(want_code(&vals[0])?))
        }
        PrimOp::CanonCode => {
            arity(&vals, 1, "canon-code")?;
            Ok(Val::Code(build_code(&decode_set(want_code(&vals[0])?))))
        }
        PrimOp::VnCode => {
            arity(&vals, 1, "vn-code")?;
            let n = want_node(want_ord(&vals[0])?)?;
            code_op(vn_code(n as usize))
        }
        PrimOp::OrdOfVn => {
            arity(&vals, 1, "ord-of-vn")?;
            match decode_set(want_code(&vals[0])?).as_vn() {
                Some(n) => Ok(Val::ord(n as u64)),
                None => stuck("the code does not denote a von Neumann numeral"),
            }
        }
        PrimOp::EssdomList => {
            arity(&vals, 1, "essdom")?;
            let c = want_code(&vals[0])?;
            let items = c.essdom().into_iter().map(Val::ord).collect();
            Ok(Val::List(Rc::new(items)))
        }
        PrimOp::ChildList => {
            arity(&vals, 1, "child-list")?;
            let c = want_code(&vals[0])?;
            let items = c.child_nodes().into_iter().map(Val::ord).collect();
            Ok(Val::List(Rc::new(items)))
        }
        PrimOp::UnivCodes => {
            arity(&vals, 0, "univ-codes")?;
            let items = ev.u.all_codes().into_iter().map(Val::Code).collect();
            Ok(Val::List(Rc::new(items)))
        }
        PrimOp::Lookup => {
            arity(&vals, 2, "lookup")?;
            let items = want_list(&vals[0])?;
            let key = decode_set(want_code(&vals[1])?);
            for item in items {
                ev.tick(1)?;
                if let Val::Pair(k, v) = item {
                    if decode_set(want_code(k)?) == key {
                        return Ok((**v).clone());
                    }
                }
            }
            stuck("lookup key not present in the table")
        }
        PrimOp::Fold => {
            arity(&vals, 3, "fold")?;
            let items = want_list(&vals[0])?.to_vec();
            let mut acc = vals[1].clone();
            let f = vals[2].clone();
            for item in items {
                acc = apply(&f, Val::pair(acc, item), ev)?;
            }
            Ok(acc)
        }
        PrimOp::TapeMember => {
            arity(&vals, 2, "tape-member")?;
            let o = want_ord(&vals[0])?;
            let t = want_tape(&vals[1])?;
            match crate::tape::tape_member(o, t) {
                Ok(b) => Ok(bool_ord(b)),
                Err(e) => stuck(format!("tape membership failed: {e}")),
            }
        }
        PrimOp::TapeBit => {
            arity(&vals, 2, "tape-bit")?;
            let o = want_ord(&vals[0])?;
            let t = want_tape(&vals[1])?;
            Ok(bool_ord(t.bit(o)))
        }
        PrimOp::EvalTruth => {
            arity(&vals, 1, "eval-truth")?;
            let f = want_fml(&vals[0])?;
            ev.tick(16)?;
            match eval_delta0(f, &Assignment::new()) {
                Ok(b) => Ok(bool_ord(b)),
                Err(e) => stuck(format!("truth evaluation failed: {e}")),
            }
        }
        PrimOp::Synth { vars } => {
            arity(&vals, 1 + vars.len(), "synth")?;
            let template = want_fml(&vals[0])?.clone();
            let mut map = BTreeMap::new();
            for (var, val) in vars.iter().zip(&vals[1..]) {
                let x = decode_set(want_code(val)?);
                map.insert(*var, Term::Const(x));
            }
            let closed = substitute(&template, &map);
            synth_value(&closed, ev)
        }
        PrimOp::SynthSeq { vars } => {
            arity(&vals, 2, "synth-seq")?;
            let template = want_fml(&vals[0])?.clone();
            let seq = decode_set(want_code(&vals[1])?);
            let items = match seq.as_seq() {
                Some(items) if items.len() == vars.len() => items,
                _ => {
                    return stuck(format!(
                        "synth-seq: argument does not decode to a sequence of length {}",
                        vars.len()
                    ))
                }
            };
            let mut map = BTreeMap::new();
            for (var, x) in vars.iter().zip(items) {
                map.insert(*var, Term::Const(x));
            }
            let closed = substitute(&template, &map);
            synth_value(&closed, ev)
        }
        PrimOp::Induct { var } => {
            arity(&vals, 3, "induct")?;
            let x = decode_set(want_code(&vals[1])?);
            let r = vals[2].clone();
            let _ = var;
            prim_induct(&x, &r, ev)
        }
        PrimOp::Collect { xvar, yvar } => {
            arity(&vals, 3, "collect")?;
            let w = decode_set(want_code(&vals[1])?);
            let s = vals[2].clone();
            let _ = (xvar, yvar);
            prim_collect(&w, &s, ev)
        }
        PrimOp::Separate { var } => {
            arity(&vals, 2, "separate")?;
            let phi = want_fml(&vals[0])?;
            let w = decode_set(want_code(&vals[1])?);
            let mut kept = Vec::new();
            for z in w.elems() {
                ev.tick(4)?;
                let mut map = BTreeMap::new();
                map.insert(*var, Term::Const(z.clone()));
                let inst = substitute(phi, &map);
                match eval_delta0(&inst, &Assignment::new()) {
                    Ok(true) => kept.push(z.clone()),
                    Ok(false) => {}
                    Err(e) => return stuck(format!("separation predicate: {e}")),
                }
            }
            Ok(Val::Code(build_code(&HFSet::new(kept))))
        }
    }
}

/// Synthesises a realiser for a closed formula and evaluates it to a value,
/// inside an already-running interpretation (fuel is shared).
fn synth_value(closed: &Formula, ev: &mut Ev) -> Result<Val, EvalError> {
    ev.tick(16)?;
    match phi_build(closed, ev.u) {
        Ok(term) => eval(&term, &Env::empty(), ev),
        Err(RealizeError::Eval(e)) => Err(e),
        Err(e) => stuck(format!("synthesis failed: {e}")),
    }
}

/// Builds a table-backed value behaving like "a realiser for every keyed
/// set": applied to a key's code and then to anything, it returns the
/// stored value for that key.
fn table_realizer(table: &[Val]) -> Val {
    Val::Closure {
        body: Rc::new(RTerm::lam(RTerm::Prim(
            PrimOp::Lookup,
            vec![RTerm::Var(2), RTerm::Var(1)],
        ))),
        env: Env::empty().push(Val::List(Rc::new(table.to_vec()))),
    }
}

fn prim_induct(x: &HFSet, r: &Val, ev: &mut Ev) -> Result<Val, EvalError> {
    // Walk the transitive closure in rank order, so each stage only consults
    // realisers already tabled. Any order compatible with membership works.
    let mut order: Vec<HFSet> = x.tc();
    if !order.iter().any(|z| z == x) {
        order.push(x.clone());
    }
    order.sort_by_key(|z| z.rank());
    let mut table: Vec<Val> = Vec::new();
    let mut last: Option<Val> = None;
    for z in &order {
        ev.tick(8)?;
        let prem = apply(r, Val::Code(build_code(z)), ev)?;
        let all_members = table_realizer(&table);
        let rz = apply(&prem, all_members, ev)?;
        table.push(Val::pair(Val::Code(build_code(z)), rz.clone()));
        last = Some(rz);
    }
    match last {
        Some(v) => Ok(v),
        None => stuck("recursion over an empty traversal"),
    }
}

fn prim_collect(w: &HFSet, s: &Val, ev: &mut Ev) -> Result<Val, EvalError> {
    let mem_val = eval(&mem_program(), &Env::empty(), ev)?;
    let mut witnesses: Vec<HFSet> = Vec::new();
    let mut table: Vec<Val> = Vec::new();
    for x in w.elems() {
        ev.tick(8)?;
        let a = build_code(x);
        let impl_r = apply(s, Val::Code(a.clone()), ev)?;
        let ex = apply(&impl_r, mem_val.clone(), ev)?;
        let p = apply(&ex, Val::ord(0), ev)?;
        let (cy, sy) = match p {
            Val::Pair(cy, sy) => ((*cy).clone(), (*sy).clone()),
            v => return stuck(format!("witness pair expected, got a {}", v.kind())),
        };
        let y = decode_set(want_code(&cy)?);
        witnesses.push(y);
        // Existential value for this member: ignores its argument and
        // returns the witness code with a two-part realiser (membership in
        // the collected set, then the carried matrix realiser).
        let conj = Val::Closure {
            body: Rc::new(RTerm::CaseOrd {
                scrut: Rc::new(RTerm::Var(0)),
                arms: vec![
                    (Ordinal::zero(), RTerm::Var(2)),
                    (Ordinal::nat(1), RTerm::Var(1)),
                ],
                default: None,
            }),
            env: Env::empty().push(mem_val.clone()).push(sy),
        };
        let exists_val = Val::Closure {
            body: Rc::new(RTerm::pair(RTerm::Var(2), RTerm::Var(1))),
            env: Env::empty().push(cy).push(conj),
        };
        table.push(Val::pair(Val::Code(a), exists_val));
    }
    let wprime = HFSet::new(witnesses);
    let inner = table_realizer(&table);
    Ok(Val::pair(Val::Code(build_code(&wprime)), inner))
}

/// Runs a realiser on one argument under the universe's fuel budget.
pub fn interpret(r: &Realizer, arg: &Val, u: &CodeUniverse) -> Result<Val, EvalError> {
    let mut ev = Ev {
        u,
        param: &r.parameter,
        fuel: u.fuel,
    };
    let f = eval(&r.program, &Env::empty(), &mut ev)?;
    apply(&f, arg.clone(), &mut ev)
}

/// Evaluates a realiser's program to its value (usually a closure).
pub fn realizer_value(r: &Realizer, u: &CodeUniverse) -> Result<Val, EvalError> {
    let mut ev = Ev {
        u,
        param: &r.parameter,
        fuel: u.fuel,
    };
    eval(&r.program, &Env::empty(), &mut ev)
}

/// Image of a coded finite ordinal set under a realiser used as the mapping
/// program: each element is fed to the realiser and must come back as an
/// ordinal.
pub fn tape_image_realizer(
    r: &Realizer,
    tape: &BitTape,
    bound: &OrdinalBound,
    u: &CodeUniverse,
) -> Result<BitTape, RealizeError> {
    let out = crate::tape::tape_image(tape, bound, |o| {
        let v = interpret(r, &Val::Ord(o.clone()), u).map_err(|e| {
            crate::ordinal::OrdinalError::Unrepresentable(match e {
                EvalError::OutOfFuel => "mapping program ran out of fuel",
                EvalError::Stuck(_) => "mapping program got stuck",
            })
        })?;
        match v {
            Val::Ord(o) => Ok(o),
            _ => Err(crate::ordinal::OrdinalError::Unrepresentable(
                "mapping program returned a non-ordinal",
            )
            .into()),
        }
    });
    out.map_err(|e| RealizeError::Shape(format!("tape image failed: {e}")))
}

/// Least element of a coded finite ordinal set accepted by a realiser used
/// as the predicate program (any nonzero ordinal output counts as yes).
pub fn tape_search_realizer(
    r: &Realizer,
    tape: &BitTape,
    u: &CodeUniverse,
) -> Result<Option<Ordinal>, RealizeError> {
    let out = crate::tape::tape_bounded_search(tape, |o| {
        let v = interpret(r, &Val::Ord(o.clone()), u).map_err(|_| {
            crate::ordinal::OrdinalError::Unrepresentable("predicate program failed")
        })?;
        match v {
            Val::Ord(o) => Ok(!o.is_zero()),
            _ => Err(crate::ordinal::OrdinalError::Unrepresentable(
                "predicate program returned a non-ordinal",
            )
            .into()),
        }
    });
    out.map_err(|e| RealizeError::Shape(format!("tape search failed: {e}")))
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Clause-by-clause bounded verifier. Universal clauses are relativised to
/// the finite code universe; the implication clause quantifies over a
/// candidate pool combining synthesised realisers with a small adversarial
/// library — a deliberate, documented under-approximation of "every
/// realiser of the antecedent".
pub struct Verifier<'a> {
    u: &'a CodeUniverse,
    pools: RefCell<BTreeMap<String, Rc<Vec<Val>>>>,
    empty_param: Code,
}

/// Cap on memoised antecedent pools; beyond it pools are rebuilt on demand.
const POOL_CACHE_CAP: usize = 50_000;

impl<'a> Verifier<'a> {
    pub fn new(u: &'a CodeUniverse) -> Verifier<'a> {
        Verifier {
            u,
            pools: RefCell::new(BTreeMap::new()),
            empty_param: build_code(&HFSet::empty()),
        }
    }

    /// As `new`, but parameter references inside checked values resolve to
    /// the given code instead of the empty set's. Pool candidates never
    /// mention the parameter, so this only affects the value under check.
    pub fn with_param(u: &'a CodeUniverse, param: Code) -> Verifier<'a> {
        Verifier {
            u,
            pools: RefCell::new(BTreeMap::new()),
            empty_param: param,
        }
    }

    /// Applies a value under a fresh fuel budget. Stuck programs are
    /// reported as `None` (the clause fails); fuel exhaustion is an error.
    pub(crate) fn apply1(&self, f: &Val, arg: Val) -> Result<Option<Val>, RealizeError> {
        let mut ev = Ev {
            u: self.u,
            param: &self.empty_param,
            fuel: self.u.fuel,
        };
        match apply(f, arg, &mut ev) {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::Stuck(_)) => Ok(None),
            Err(EvalError::OutOfFuel) => Err(EvalError::OutOfFuel.into()),
        }
    }

    fn const_set(t: &Term) -> Result<HFSet, RealizeError> {
        match t {
            Term::Const(x) => Ok(x.clone()),
            Term::Var(_) => Err(RealizeError::NotSentence),
        }
    }

    fn eval_closed(&self, t: &RTerm) -> Result<Option<Val>, RealizeError> {
        let mut ev = Ev {
            u: self.u,
            param: &self.empty_param,
            fuel: self.u.fuel,
        };
        match eval(t, &Env::empty(), &mut ev) {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::Stuck(_)) => Ok(None),
            Err(EvalError::OutOfFuel) => Err(EvalError::OutOfFuel.into()),
        }
    }

    /// Candidate realiser values for an antecedent. Atomic antecedents get
    /// exactly the direct construction when true (no library member can
    /// realise an atom). Compound antecedents get a synthesised realiser
    /// when the statement is true over the universe, plus whichever library
    /// members genuinely realise the formula.
    pub(crate) fn pool(&self, phi: &Formula) -> Result<Rc<Vec<Val>>, RealizeError> {
        if let Formula::Eq(x, y) = phi {
            let (xs, ys) = (Self::const_set(x)?, Self::const_set(y)?);
            let mut vals = Vec::new();
            if xs == ys {
                if let Some(v) = self.eval_closed(&eq_program())? {
                    vals.push(v);
                }
            }
            return Ok(Rc::new(vals));
        }
        if let Formula::Mem(x, y) = phi {
            let (xs, ys) = (Self::const_set(x)?, Self::const_set(y)?);
            let mut vals = Vec::new();
            if ys.contains(&xs) {
                if let Some(v) = self.eval_closed(&mem_program())? {
                    vals.push(v);
                }
            }
            return Ok(Rc::new(vals));
        }
        let key = phi.to_string();
        if let Some(hit) = self.pools.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let mut vals = Vec::new();
        // A synthesised realiser joins the pool only when the statement is
        // true with quantifiers relativised to the universe, which is
        // exactly the soundness condition for the synthesis output here.
        let true_over_universe =
            eval_bruteforce(phi, self.u.sets(), &Assignment::new()).unwrap_or(false);
        if true_over_universe {
            if let Ok(term) = phi_build(phi, self.u) {
                if let Some(v) = self.eval_closed(&term)? {
                    vals.push(v);
                }
            }
        }
        for prog in adversarial_library() {
            if let Some(v) = self.eval_closed(&prog)? {
                if self.check(&v, phi)? {
                    vals.push(v);
                }
            }
        }
        let rc = Rc::new(vals);
        let mut pools = self.pools.borrow_mut();
        if pools.len() < POOL_CACHE_CAP {
            pools.insert(key, rc.clone());
        }
        Ok(rc)
    }

    /// The realisability clauses, relativised to the universe.
    pub fn check(&self, v: &Val, phi: &Formula) -> Result<bool, RealizeError> {
        match phi {
            Formula::Bottom => Ok(false),
            Formula::Eq(x, y) => {
                let xs = Self::const_set(x)?;
                let ys = Self::const_set(y)?;
                for a in self.u.codes_of(&xs) {
                    for b in self.u.codes_of(&ys) {
                        let arg = Val::pair(Val::Code(a.clone()), Val::Code(b.clone()));
                        let Some(out) = self.apply1(v, arg)? else {
                            return Ok(false);
                        };
                        if !valid_iso(&a, &b, &out) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            Formula::Mem(x, y) => {
                let xs = Self::const_set(x)?;
                let ys = Self::const_set(y)?;
                for a in self.u.codes_of(&xs) {
                    for b in self.u.codes_of(&ys) {
                        let arg = Val::pair(Val::Code(a.clone()), Val::Code(b.clone()));
                        let Some(out) = self.apply1(v, arg)? else {
                            return Ok(false);
                        };
                        let Val::Pair(alpha, s) = out else {
                            return Ok(false);
                        };
                        let Val::Ord(alpha) = &*alpha else {
                            return Ok(false);
                        };
                        let Some(node) = alpha.as_nat() else {
                            return Ok(false);
                        };
                        if !b.pre().children(b.rho()).contains(&node) {
                            return Ok(false);
                        }
                        let Ok(sub) = b.at_node(node) else {
                            return Ok(false);
                        };
                        let denoted = decode_set(&sub);
                        let eqf = Formula::Eq(Term::Const(xs.clone()), Term::Const(denoted));
                        if !self.check(&s, &eqf)? {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            Formula::Implies(p, q) => {
                let pool = self.pool(p)?;
                for s in pool.iter() {
                    let Some(w) = self.apply1(v, s.clone())? else {
                        return Ok(false);
                    };
                    if !self.check(&w, q)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Conj(seq) => {
                for idx in seq.sample_indices() {
                    let part = seq.part(&idx).expect("sampled index is in range");
                    let Some(w) = self.apply1(v, Val::Ord(idx.clone()))? else {
                        return Ok(false);
                    };
                    if !self.check(&w, part)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Disj(seq) => {
                let Some(out) = self.apply1(v, Val::ord(0))? else {
                    return Ok(false);
                };
                let Val::Pair(gamma, s) = out else {
                    return Ok(false);
                };
                let Val::Ord(gamma) = &*gamma else {
                    return Ok(false);
                };
                let Some(part) = seq.part(gamma) else {
                    return Ok(false);
                };
                self.check(&s, part)
            }
            Formula::Exists(ctx, body) => {
                let width = ctx.width();
                let Some(out) = self.apply1(v, Val::ord(0))? else {
                    return Ok(false);
                };
                let Val::Pair(code, s) = out else {
                    return Ok(false);
                };
                let Val::Code(code) = &*code else {
                    return Ok(false);
                };
                let x = decode_set(code);
                let tuple: Vec<HFSet> = if width == 1 {
                    vec![x]
                } else {
                    match x.as_seq() {
                        Some(items) if items.len() == width => items,
                        _ => return Ok(false),
                    }
                };
                let inst = subst_sets(body, ctx, &tuple);
                self.check(&s, &inst)
            }
            Formula::Forall(ctx, body) => {
                let width = ctx.width();
                if width == 1 {
                    for xs in self.u.sets() {
                        let inst = subst_sets(body, ctx, std::slice::from_ref(xs));
                        for c in self.u.codes_of(xs) {
                            let Some(w) = self.apply1(v, Val::Code(c))? else {
                                return Ok(false);
                            };
                            if !self.check(&w, &inst)? {
                                return Ok(false);
                            }
                        }
                    }
                } else {
                    for (tuple_set, items) in self.u.tuple_sets(width) {
                        let inst = subst_sets(body, ctx, &items);
                        for c in self.u.codes_of(&tuple_set) {
                            let Some(w) = self.apply1(v, Val::Code(c))? else {
                                return Ok(false);
                            };
                            if !self.check(&w, &inst)? {
                                return Ok(false);
                            }
                        }
                    }
                }
                Ok(true)
            }
        }
    }

    /// Extensional shape of a realiser's behaviour on a formula, used by
    /// the single-valuedness check. `None` signals an observed dependence
    /// on code presentation (or a stuck application).
    fn meaning(&self, v: &Val, phi: &Formula) -> Result<Option<Meaning>, RealizeError> {
        match phi {
            Formula::Bottom => Ok(None),
            Formula::Eq(..) | Formula::Mem(..) => Ok(Some(Meaning::Opaque)),
            Formula::Implies(p, q) => {
                let pool = self.pool(p)?;
                match pool.first() {
                    None => Ok(Some(Meaning::Opaque)),
                    Some(s) => {
                        let Some(w) = self.apply1(v, s.clone())? else {
                            return Ok(None);
                        };
                        self.meaning(&w, q)
                    }
                }
            }
            Formula::Conj(seq) => {
                let mut parts = Vec::new();
                for idx in seq.sample_indices() {
                    let part = seq.part(&idx).expect("sampled index is in range");
                    let Some(w) = self.apply1(v, Val::Ord(idx.clone()))? else {
                        return Ok(None);
                    };
                    let Some(m) = self.meaning(&w, part)? else {
                        return Ok(None);
                    };
                    parts.push(m);
                }
                Ok(Some(Meaning::Node(parts)))
            }
            Formula::Disj(seq) => {
                let Some(out) = self.apply1(v, Val::ord(0))? else {
                    return Ok(None);
                };
                let Val::Pair(gamma, s) = out else {
                    return Ok(None);
                };
                let Val::Ord(gamma) = &*gamma else {
                    return Ok(None);
                };
                let Some(part) = seq.part(gamma) else {
                    return Ok(None);
                };
                let Some(m) = self.meaning(&s, part)? else {
                    return Ok(None);
                };
                Ok(Some(Meaning::Node(vec![Meaning::Branch(gamma.clone()), m])))
            }
            Formula::Exists(ctx, body) => {
                let width = ctx.width();
                let Some(out) = self.apply1(v, Val::ord(0))? else {
                    return Ok(None);
                };
                let Val::Pair(code, s) = out else {
                    return Ok(None);
                };
                let Val::Code(code) = &*code else {
                    return Ok(None);
                };
                let x = decode_set(code);
                let tuple: Vec<HFSet> = if width == 1 {
                    vec![x.clone()]
                } else {
                    match x.as_seq() {
                        Some(items) if items.len() == width => items,
                        _ => return Ok(None),
                    }
                };
                let inst = subst_sets(body, ctx, &tuple);
                let Some(m) = self.meaning(&s, &inst)? else {
                    return Ok(None);
                };
                Ok(Some(Meaning::Node(vec![Meaning::Set(x), m])))
            }
            Formula::Forall(ctx, body) => {
                let width = ctx.width();
                let groups: Vec<(Vec<Code>, Vec<HFSet>)> = if width == 1 {
                    self.u
                        .sets()
                        .iter()
                        .map(|xs| (self.u.codes_of(xs), vec![xs.clone()]))
                        .collect()
                } else {
                    self.u
                        .tuple_sets(width)
                        .into_iter()
                        .map(|(t, items)| (self.u.codes_of(&t), items))
                        .collect()
                };
                let mut per_set = Vec::new();
                for (codes, items) in groups {
                    let inst = subst_sets(body, ctx, &items);
                    let mut first: Option<Meaning> = None;
                    for c in codes {
                        let Some(w) = self.apply1(v, Val::Code(c))? else {
                            return Ok(None);
                        };
                        let Some(m) = self.meaning(&w, &inst)? else {
                            return Ok(None);
                        };
                        match &first {
                            None => first = Some(m),
                            Some(f) => {
                                if *f != m {
                                    // The observable output varies across
                                    // codes of a single set.
                                    return Ok(None);
                                }
                            }
                        }
                    }
                    if let Some(f) = first {
                        per_set.push(f);
                    }
                }
                Ok(Some(Meaning::Node(per_set)))
            }
        }
    }
}

/// Extensional behaviour summary used by the single-valuedness check.
#[derive(Debug, Clone, PartialEq)]
pub enum Meaning {
    /// No code-valued output at this clause.
    Opaque,
    /// Chosen disjunct index.
    Branch(Ordinal),
    /// Denotation of an emitted code.
    Set(HFSet),
    /// Composite of sub-clause behaviours.
    Node(Vec<Meaning>),
}

fn valid_iso(a: &Code, b: &Code, out: &Val) -> bool {
    let Val::List(items) = out else { return false };
    let mut map = BTreeMap::new();
    for item in items.iter() {
        let Val::Pair(k, v) = item else { return false };
        let (Val::Ord(k), Val::Ord(v)) = (&**k, &**v) else {
            return false;
        };
        let (Some(k), Some(v)) = (k.as_nat(), v.as_nat()) else {
            return false;
        };
        map.insert(k, v);
    }
    check_iso(a, b, &CodeIso { map })
}

/// Small library of structurally plausible but unprincipled programs thrown
/// at every compound antecedent; only the ones that genuinely realise the
/// antecedent join the candidate pool.
fn adversarial_library() -> Vec<RTerm> {
    vec![
        RTerm::lam(RTerm::Var(0)),
        RTerm::lam(RTerm::ord(0)),
        RTerm::lam(RTerm::pair(RTerm::ord(0), RTerm::Var(0))),
        RTerm::lam(RTerm::ConstCode(build_code(&HFSet::empty()))),
        RTerm::lam(RTerm::fst(RTerm::Var(0))),
    ]
}

/// Checks that a realiser satisfies the realisability clauses for a closed
/// formula over the universe. Fuel exhaustion is reported as an error,
/// never as plain failure.
pub fn verify(r: &Realizer, phi: &Formula, u: &CodeUniverse) -> Result<bool, RealizeError> {
    if !phi.free_vars().is_empty() {
        return Err(RealizeError::NotSentence);
    }
    let v = match realizer_value(r, u) {
        Ok(v) => v,
        Err(EvalError::Stuck(_)) => return Ok(false),
        Err(e @ EvalError::OutOfFuel) => return Err(e.into()),
    };
    Verifier::with_param(u, r.parameter.clone()).check(&v, phi)
}

/// Verification plus extensional single-valuedness: on top of the clauses,
/// every code-emitting step must look the same (after decoding) no matter
/// which code of each quantified set the realiser receives.
pub fn verify_uniform(
    r: &Realizer,
    phi: &Formula,
    u: &CodeUniverse,
) -> Result<bool, RealizeError> {
    if !verify(r, phi, u)? {
        return Ok(false);
    }
    let v = match realizer_value(r, u) {
        Ok(v) => v,
        Err(EvalError::Stuck(_)) => return Ok(false),
        Err(e @ EvalError::OutOfFuel) => return Err(e.into()),
    };
    Ok(Verifier::with_param(u, r.parameter.clone())
        .meaning(&v, phi)?
        .is_some())
}

// ---------------------------------------------------------------------------
// Direct constructions
// ---------------------------------------------------------------------------

/// Realiser of the equality of two sets; refused when they differ.
pub fn realize_eq(x: &HFSet, y: &HFSet) -> Result<Realizer, RealizeError> {
    if x == y {
        Ok(Realizer::new(eq_program()))
    } else {
        Err(RealizeError::Refused)
    }
}

/// Realiser of the membership of x in y; refused when x is not a member.
pub fn realize_mem(x: &HFSet, y: &HFSet) -> Result<Realizer, RealizeError> {
    if y.contains(x) {
        Ok(Realizer::new(mem_program()))
    } else {
        Err(RealizeError::Refused)
    }
}

// ---------------------------------------------------------------------------
// Universal synthesis
// ---------------------------------------------------------------------------

/// Synthesises a realiser for a formula (closed under the given assignment)
/// in the bounded or one-existential fragments, finitary or infinitary.
/// Succeeds exactly on true statements; anything outside those fragments is
/// rejected with a fragment error.
pub fn phi_universal(
    phi: &Formula,
    assign: &Assignment,
    u: &CodeUniverse,
) -> Result<Realizer, RealizeError> {
    let mut map = BTreeMap::new();
    for (var, val) in assign {
        map.insert(*var, Term::Const(val.clone()));
    }
    let closed = substitute(phi, &map);
    if !closed.free_vars().is_empty() {
        return Err(RealizeError::NotSentence);
    }
    let cls = classify(&closed);
    match cls.fragment {
        Fragment::General => Err(RealizeError::NotInFragment(cls.label().to_string())),
        Fragment::Delta0 => {
            if !eval_delta0(&closed, &Assignment::new())? {
                return Err(RealizeError::Refused);
            }
            Ok(Realizer::new(phi_build(&closed, u)?))
        }
        Fragment::Sigma1 => Ok(Realizer::new(phi_build(&closed, u)?)),
    }
}

/// Structural synthesis on a closed formula. Callers ensure the formula is
/// true (the public entry point decides bounded truth up front; existential
/// search decides instances as it goes), so every constructed branch is
/// sound; unsatisfiable branches surface as refusal.
pub(crate) fn phi_build(phi: &Formula, u: &CodeUniverse) -> Result<RTerm, RealizeError> {
    match phi {
        Formula::Bottom => Err(RealizeError::Refused),
        Formula::Eq(Term::Const(x), Term::Const(y)) => {
            if x == y {
                Ok(eq_program())
            } else {
                Err(RealizeError::Refused)
            }
        }
        Formula::Mem(Term::Const(x), Term::Const(y)) => {
            if y.contains(x) {
                Ok(mem_program())
            } else {
                Err(RealizeError::Refused)
            }
        }
        Formula::Eq(..) | Formula::Mem(..) => Err(RealizeError::NotSentence),
        Formula::Implies(p, q) => {
            if !eval_delta0(p, &Assignment::new())? {
                // No realiser of the antecedent exists; anything works.
                Ok(RTerm::lam(RTerm::Var(0)))
            } else {
                let qt = phi_build(q, u)?;
                Ok(RTerm::lam(qt))
            }
        }
        Formula::Conj(seq) => match seq {
            FormulaSeq::Listed(parts) => {
                let mut arms = Vec::with_capacity(parts.len());
                for (i, part) in parts.iter().enumerate() {
                    arms.push((Ordinal::nat(i as u64), phi_build(part, u)?));
                }
                Ok(RTerm::lam(RTerm::CaseOrd {
                    scrut: Rc::new(RTerm::Var(0)),
                    arms,
                    default: None,
                }))
            }
            FormulaSeq::Cyclic { cycle, .. } => {
                let mut arms = Vec::with_capacity(cycle.len());
                for part in cycle {
                    arms.push(phi_build(part, u)?);
                }
                Ok(RTerm::lam(RTerm::CaseMod {
                    scrut: Rc::new(RTerm::Var(0)),
                    arms,
                }))
            }
        },
        Formula::Disj(seq) => {
            for idx in seq.sample_indices() {
                let part = seq.part(&idx).expect("sampled index is in range");
                if eval_delta0(part, &Assignment::new())? {
                    let inner = phi_build(part, u)?;
                    return Ok(RTerm::lam(RTerm::pair(RTerm::ConstOrd(idx), inner)));
                }
            }
            Err(RealizeError::Refused)
        }
        Formula::Exists(ctx, body) => {
            let width = ctx.width();
            let candidates: Vec<Vec<HFSet>> = match as_bounded(phi) {
                Some(BoundedView::ExistsIn { bound, .. }) => {
                    let b = match bound {
                        Term::Const(b) => b,
                        Term::Var(_) => return Err(RealizeError::NotSentence),
                    };
                    bound_tuples(&b, width)
                }
                _ => universe_tuples(u, width),
            };
            for tuple in candidates {
                let inst = subst_sets(body, ctx, &tuple);
                if eval_delta0(&inst, &Assignment::new())? {
                    let inner = phi_build(&inst, u)?;
                    let wit = witness_code(&tuple);
                    return Ok(RTerm::lam(RTerm::pair(RTerm::ConstCode(wit), inner)));
                }
            }
            Err(RealizeError::Refused)
        }
        Formula::Forall(ctx, body) => {
            // The program synthesises the instance realiser at application
            // time from whatever code it receives.
            let vars = ctx.0.clone();
            let template = (**body).clone();
            let op = if ctx.width() == 1 {
                PrimOp::Synth { vars }
            } else {
                PrimOp::SynthSeq { vars }
            };
            Ok(RTerm::lam(RTerm::Prim(
                op,
                vec![RTerm::ConstFml(template), RTerm::Var(0)],
            )))
        }
    }
}

/// Tuples available to a bounded existential: the bound's members at width
/// one, member sequences of the right length otherwise.
fn bound_tuples(bound: &HFSet, width: usize) -> Vec<Vec<HFSet>> {
    if width == 1 {
        bound.elems().iter().map(|m| vec![m.clone()]).collect()
    } else {
        bound
            .elems()
            .iter()
            .filter_map(|m| m.as_seq())
            .filter(|items| items.len() == width)
            .collect()
    }
}

fn universe_tuples(u: &CodeUniverse, width: usize) -> Vec<Vec<HFSet>> {
    let sets = u.sets();
    let mut out = Vec::new();
    if sets.is_empty() || width == 0 {
        return out;
    }
    let mut idx = vec![0usize; width];
    loop {
        out.push(idx.iter().map(|i| sets[*i].clone()).collect());
        let mut k = width;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sets.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// One set's canonical code at width one, the sequence object's code
/// otherwise.
pub(crate) fn witness_code(tuple: &[HFSet]) -> Code {
    if tuple.len() == 1 {
        build_code(&tuple[0])
    } else {
        build_code(&HFSet::seq_object(tuple))
    }
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// From a realiser of a disjunction, the chosen branch index and a realiser
/// of that branch (as a derived program re-running the original).
pub fn extract_disjunct(
    r: &Realizer,
    phi: &Formula,
    u: &CodeUniverse,
) -> Result<(Ordinal, Realizer), RealizeError> {
    let Formula::Disj(seq) = phi else {
        return Err(RealizeError::Shape("a disjunction is required".into()));
    };
    let out = interpret(r, &Val::ord(0), u)?;
    let Val::Pair(gamma, _) = out else {
        return Err(RealizeError::Shape(
            "the realiser did not produce a tagged branch".into(),
        ));
    };
    let Val::Ord(gamma) = &*gamma else {
        return Err(RealizeError::Shape(
            "the branch tag is not an ordinal".into(),
        ));
    };
    if seq.part(gamma).is_none() {
        return Err(RealizeError::Shape(
            "the branch index is outside the disjunction".into(),
        ));
    }
    let program = RTerm::snd(RTerm::app(r.program.clone(), RTerm::ord(0)));
    Ok((
        gamma.clone(),
        Realizer::with_parameter(program, r.parameter.clone()),
    ))
}

/// From a realiser of an existential, the witness code and a realiser of
/// the instantiated body (as a derived program re-running the original).
pub fn extract_witness(
    r: &Realizer,
    phi: &Formula,
    u: &CodeUniverse,
) -> Result<(Code, Realizer), RealizeError> {
    let Formula::Exists(..) = phi else {
        return Err(RealizeError::Shape("an existential is required".into()));
    };
    let out = interpret(r, &Val::ord(0), u)?;
    let Val::Pair(code, _) = out else {
        return Err(RealizeError::Shape(
            "the realiser did not produce a witness pair".into(),
        ));
    };
    let Val::Code(code) = &*code else {
        return Err(RealizeError::Shape("the witness is not a code".into()));
    };
    let program = RTerm::snd(RTerm::app(r.program.clone(), RTerm::ord(0)));
    Ok((
        code.clone(),
        Realizer::with_parameter(program, r.parameter.clone()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::PreCode;
    use crate::formula::{parse_formula, Context};
    use crate::tape::{encode_ordset, OrdSet};

    fn small_universe() -> CodeUniverse {
        CodeUniverse::new(2, 2, 400_000)
    }

    fn fml(s: &str) -> Formula {
        parse_formula(s).expect("formula literal parses")
    }

    #[test]
    fn interpret_identity_constant_and_pairing() {
        let u = small_universe();
        let c = build_code(&HFSet::vn(2));
        let id = Realizer::new(RTerm::lam(RTerm::Var(0)));
        let out = interpret(&id, &Val::Code(c.clone()), &u).unwrap();
        assert_eq!(out, Val::Code(c.clone()));
        let konst = Realizer::new(RTerm::lam(RTerm::ord(7)));
        assert_eq!(
            interpret(&konst, &Val::Code(c), &u).unwrap(),
            Val::ord(7)
        );
        let tag = Realizer::new(RTerm::lam(RTerm::pair(RTerm::ord(0), RTerm::Var(0))));
        assert_eq!(
            interpret(&tag, &Val::ord(3), &u).unwrap(),
            Val::pair(Val::ord(0), Val::ord(3))
        );
    }

    #[test]
    fn parameter_is_visible_to_programs() {
        let u = small_universe();
        let p = build_code(&HFSet::singleton(HFSet::empty()));
        let r = Realizer::with_parameter(RTerm::lam(RTerm::Param), p.clone());
        let out = interpret(&r, &Val::ord(0), &u).unwrap();
        assert_eq!(out, Val::Code(p));
    }

    #[test]
    fn fuel_and_stuckness_are_distinguished() {
        let mut u = small_universe();
        u.fuel = 3;
        let r = Realizer::new(RTerm::lam(RTerm::Prim(
            PrimOp::CanonCode,
            vec![RTerm::Prim(PrimOp::CanonCode, vec![RTerm::Var(0)])],
        )));
        let err = interpret(&r, &Val::Code(build_code(&HFSet::vn(3))), &u).unwrap_err();
        assert_eq!(err, EvalError::OutOfFuel);

        let u = small_universe();
        let bad = Realizer::new(RTerm::lam(RTerm::fst(RTerm::Var(0))));
        let err = interpret(&bad, &Val::ord(0), &u).unwrap_err();
        assert!(matches!(err, EvalError::Stuck(_)));
    }

    #[test]
    fn universe_is_element_closed_and_codes_decode() {
        let u = small_universe();
        for s in u.sets() {
            let codes = u.codes_of(s);
            assert!(codes.len() >= 3, "canonical plus two scrambles for {s}");
            for c in &codes {
                assert_eq!(decode_set(c), *s);
            }
            for m in s.elems() {
                assert!(u.contains_set(m), "member {m} of {s} missing");
            }
        }
        let big = HFSet::vn(5);
        assert!(!u.contains_set(&big));
        assert!(u.codes_of(&big).len() >= 3);
    }

    #[test]
    fn equality_realizer_agrees_with_equality() {
        let u = small_universe();
        let e = HFSet::empty();
        let s = HFSet::singleton(e.clone());
        let r = realize_eq(&e, &e).unwrap();
        assert!(verify(
            &r,
            &Formula::Eq(Term::Const(e.clone()), Term::Const(e.clone())),
            &u
        )
        .unwrap());
        let r = realize_eq(&s, &s).unwrap();
        assert!(verify(
            &r,
            &Formula::Eq(Term::Const(s.clone()), Term::Const(s.clone())),
            &u
        )
        .unwrap());
        assert_eq!(realize_eq(&e, &s).unwrap_err(), RealizeError::Refused);
        let r = realize_eq(&e, &e).unwrap();
        assert!(!verify(&r, &Formula::Eq(Term::Const(e), Term::Const(s)), &u).unwrap());
    }

    #[test]
    fn membership_realizer_agrees_with_membership() {
        let u = small_universe();
        let e = HFSet::empty();
        let s = HFSet::singleton(e.clone());
        let v2 = HFSet::vn(2);
        let r = realize_mem(&e, &s).unwrap();
        assert!(verify(
            &r,
            &Formula::Mem(Term::Const(e.clone()), Term::Const(s.clone())),
            &u
        )
        .unwrap());
        let r = realize_mem(&s, &v2).unwrap();
        assert!(verify(
            &r,
            &Formula::Mem(Term::Const(s.clone()), Term::Const(v2)),
            &u
        )
        .unwrap());
        assert_eq!(realize_mem(&e, &e).unwrap_err(), RealizeError::Refused);
        let bad = Realizer::new(RTerm::lam(RTerm::Var(0)));
        assert!(!verify(&bad, &Formula::Mem(Term::Const(e), Term::Const(s)), &u).unwrap());
    }

    #[test]
    fn verification_requires_sentences_and_rejects_bottom() {
        let u = small_universe();
        let r = Realizer::new(RTerm::lam(RTerm::Var(0)));
        assert!(!verify(&r, &Formula::Bottom, &u).unwrap());
        let open = Formula::Eq(Term::Var(0), Term::Var(0));
        assert_eq!(
            verify(&r, &open, &u).unwrap_err(),
            RealizeError::NotSentence
        );
    }

    #[test]
    fn synthesis_matches_truth_on_bounded_sentences() {
        let u = small_universe();
        let cases = [
            ("(eq {} {})", true),
            ("(mem {} {{}})", true),
            ("(mem {} {})", false),
            ("(and (eq {} {}) (mem {} {{}}))", true),
            ("(and (eq {} {}) (mem {} {}))", false),
            ("(or (mem {} {}) (eq {} {}))", true),
            ("(or (mem {} {}) (bot))", false),
            ("(imp (eq {} {}) (mem {} {{}}))", true),
            ("(imp (mem {} {}) (bot))", true),
            ("(imp (eq {} {}) (mem {} {}))", false),
            ("(all (x0) (imp (mem x0 {{}}) (eq x0 {})))", true),
            ("(all (x0) (imp (mem x0 {{},{{}}}) (eq x0 {})))", false),
            ("(ex (x0) (and (mem x0 {{}}) (eq x0 {})))", true),
            ("(ex (x0) (and (mem x0 {{}}) (mem {} x0)))", false),
        ];
        for (text, truth) in cases {
            let phi = fml(text);
            let res = phi_universal(&phi, &Assignment::new(), &u);
            if truth {
                let r = res.unwrap_or_else(|e| panic!("synthesis failed on {text}: {e}"));
                assert!(
                    verify(&r, &phi, &u).unwrap(),
                    "synthesised realiser fails verification on {text}"
                );
                assert!(
                    verify_uniform(&r, &phi, &u).unwrap(),
                    "synthesised realiser fails single-valuedness on {text}"
                );
            } else {
                assert_eq!(res.unwrap_err(), RealizeError::Refused, "on {text}");
            }
        }
    }

    #[test]
    fn synthesis_flags_fragment_violations() {
        let u = small_universe();
        let phi = fml("(all (x0) (eq x0 x0))");
        assert!(matches!(
            phi_universal(&phi, &Assignment::new(), &u),
            Err(RealizeError::NotInFragment(_))
        ));
        let open = Formula::Eq(Term::Var(3), Term::Var(3));
        assert_eq!(
            phi_universal(&open, &Assignment::new(), &u).unwrap_err(),
            RealizeError::NotSentence
        );
        let mut assign = Assignment::new();
        assign.insert(3, HFSet::empty());
        assert!(phi_universal(&open, &assign, &u).is_ok());
    }

    #[test]
    fn sigma1_witness_decodes_to_the_unique_solution() {
        let u = small_universe();
        let phi = fml("(ex (x0) (eq x0 {{}}))");
        let r = phi_universal(&phi, &Assignment::new(), &u).unwrap();
        assert!(verify(&r, &phi, &u).unwrap());
        let (wit, inner) = extract_witness(&r, &phi, &u).unwrap();
        assert_eq!(decode_set(&wit), HFSet::singleton(HFSet::empty()));
        let inst = fml("(eq {{}} {{}})");
        assert!(verify(&inner, &inst, &u).unwrap());
    }

    #[test]
    fn width_two_witnesses_decode_as_sequences() {
        let u = small_universe();
        let e = HFSet::empty();
        let s = HFSet::singleton(e.clone());
        let body = Formula::conj(vec![
            Formula::Eq(Term::Var(0), Term::Const(e.clone())),
            Formula::Eq(Term::Var(1), Term::Const(s.clone())),
        ]);
        let phi = Formula::Exists(Context::new(vec![0, 1]), Box::new(body));
        let r = phi_universal(&phi, &Assignment::new(), &u).unwrap();
        assert!(verify(&r, &phi, &u).unwrap());
        let (wit, _) = extract_witness(&r, &phi, &u).unwrap();
        assert_eq!(decode_set(&wit), HFSet::seq_object(&[e, s]));
    }

    #[test]
    fn cyclic_conjunctions_are_realised_across_limit_samples() {
        let u = small_universe();
        let phi = Formula::Conj(FormulaSeq::Cyclic {
            len: Ordinal::omega().mul(&Ordinal::nat(2)),
            cycle: vec![fml("(eq {} {})"), fml("(mem {} {{}})")],
        });
        let r = phi_universal(&phi, &Assignment::new(), &u).unwrap();
        assert!(verify(&r, &phi, &u).unwrap());
        let bad = Realizer::new(RTerm::lam(RTerm::ord(0)));
        assert!(!verify(&bad, &phi, &u).unwrap());
    }

    #[test]
    fn implication_clause_quarantines_wrong_consequents() {
        let u = small_universe();
        let phi = fml("(imp (eq {} {}) (mem {} {}))");
        let pass = Realizer::new(RTerm::lam(RTerm::Var(0)));
        assert!(!verify(&pass, &phi, &u).unwrap());
        let phi = fml("(imp (eq {} {}) (eq {} {}))");
        assert!(verify(&pass, &phi, &u).unwrap());
    }

    #[test]
    fn single_valuedness_separates_code_sensitive_choices() {
        let mut u = small_universe();
        // Two codes of {∅, {∅}} whose raw child order disagrees.
        let v2 = HFSet::vn(2);
        let flip_a = {
            // node 0 = ∅; node 1 = {∅} (edge: member 0 inside container 1).
            let pre = PreCode::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
            Code::new(pre, 2).unwrap()
        };
        let flip_b = {
            // node 0 = {∅} (edge: member 1 inside container 0); node 1 = ∅.
            let pre = PreCode::new(3, &[(1, 0), (0, 2), (1, 2)]).unwrap();
            Code::new(pre, 2).unwrap()
        };
        assert_eq!(decode_set(&flip_a), v2);
        assert_eq!(decode_set(&flip_b), v2);
        u.add_codes(&v2, vec![flip_a, flip_b]).unwrap();

        let family = HFSet::singleton(v2.clone());
        let phi = Formula::Forall(
            Context::one(0),
            Box::new(Formula::imp(
                Formula::Mem(Term::Var(0), Term::Const(family)),
                Formula::Exists(
                    Context::one(1),
                    Box::new(Formula::conj(vec![
                        Formula::Mem(Term::Var(1), Term::Var(0)),
                        Formula::Eq(Term::Var(1), Term::Var(1)),
                    ])),
                ),
            )),
        );
        // Picking the raw-first member: sound, but code-sensitive.
        let picker = Realizer::new(RTerm::lam(RTerm::lam(RTerm::lam(RTerm::pair(
            RTerm::Prim(
                PrimOp::AtNode,
                vec![
                    RTerm::Var(2),
                    RTerm::Prim(PrimOp::FirstChild, vec![RTerm::Var(2)]),
                ],
            ),
            RTerm::lam(RTerm::CaseOrd {
                scrut: Rc::new(RTerm::Var(0)),
                arms: vec![
                    (Ordinal::zero(), mem_program()),
                    (Ordinal::nat(1), eq_program()),
                ],
                default: None,
            }),
        )))));
        assert!(verify(&picker, &phi, &u).unwrap());
        assert!(!verify_uniform(&picker, &phi, &u).unwrap());
        // The synthesised realiser decides by decoded value only.
        let synth = phi_universal(&phi, &Assignment::new(), &u).unwrap();
        assert!(verify(&synth, &phi, &u).unwrap());
        assert!(verify_uniform(&synth, &phi, &u).unwrap());
    }

    #[test]
    fn branch_extraction_returns_reverifying_realisers() {
        let u = small_universe();
        let phi = fml("(or (eq {} {}) (bot))");
        let r = phi_universal(&phi, &Assignment::new(), &u).unwrap();
        let (idx, branch) = extract_disjunct(&r, &phi, &u).unwrap();
        assert_eq!(idx, Ordinal::zero());
        assert!(verify(&branch, &fml("(eq {} {})"), &u).unwrap());

        let phi = fml("(or (bot) (mem {} {{}}))");
        let hand = Realizer::new(RTerm::lam(RTerm::pair(RTerm::ord(1), mem_program())));
        assert!(verify(&hand, &phi, &u).unwrap());
        let (idx, branch) = extract_disjunct(&hand, &phi, &u).unwrap();
        assert_eq!(idx, Ordinal::nat(1));
        assert!(verify(&branch, &fml("(mem {} {{}})"), &u).unwrap());
    }

    #[test]
    fn tape_adapters_drive_programs_over_ordinal_sets() {
        let u = small_universe();
        let bound = OrdinalBound::new(Ordinal::w_pow(Ordinal::nat(2)));
        let set = OrdSet::from_elems(vec![Ordinal::nat(0), Ordinal::nat(2)]);
        let tape = encode_ordset(&set, &bound).unwrap();
        let id = Realizer::new(RTerm::lam(RTerm::Var(0)));
        let image = tape_image_realizer(&id, &tape, &bound, &u).unwrap();
        assert_eq!(image, tape);
        let nonzero = Realizer::new(RTerm::lam(RTerm::CaseOrd {
            scrut: Rc::new(RTerm::Var(0)),
            arms: vec![(Ordinal::zero(), RTerm::ord(0))],
            default: Some(Rc::new(RTerm::ord(1))),
        }));
        let hit = tape_search_realizer(&nonzero, &tape, &u).unwrap();
        assert_eq!(hit, Some(Ordinal::nat(2)));
    }

    #[test]
    fn order_sensitive_primitives_reflect_raw_layout() {
        let u = small_universe();
        let v2 = HFSet::vn(2);
        let prog = Realizer::new(RTerm::lam(RTerm::Prim(
            PrimOp::OrderCode,
            vec![RTerm::Var(0)],
        )));
        let out = interpret(&prog, &Val::Code(build_code(&v2)), &u).unwrap();
        let Val::Code(order) = out else {
            panic!("order-code returns a code")
        };
        // A strict total order on the two distinct members: one pair.
        assert_eq!(decode_set(&order).elems().len(), 1);
    }
}

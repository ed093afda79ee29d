//! Glued verification: realisability strengthened by a provability oracle.
//!
//! The glued relation keeps every clause of the plain verifier except two:
//! an implication realiser must *also* have its implication endorsed by the
//! oracle, and a universal realiser must have its universal endorsed. When
//! the oracle cannot answer, the verdict degrades from yes to unknown — it
//! never upgrades. Everything here is restricted to the finitary language
//! (singleton quantifier blocks, finite listed connectives).
//!
//! The oracle is a finite formula database plus two built-in answer
//! sources: decode-level truth for closed atomic sentences (the elementary
//! diagram of the set constants), and a bounded saturation of the database
//! under the basic inference rules (conjunction splitting and forming,
//! disjunction forming, modus ponens, identity implications).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::formula::{parse_formula, subst_sets, Formula, FormulaSeq, Term};

use crate::ordinal::Ordinal;
use crate::realizer::{
    extract_disjunct, realizer_value, CodeUniverse, RealizeError, Realizer, Val,
    Verifier,
};

// ---------------------------------------------------------------------------
// Three-valued verdicts
// ---------------------------------------------------------------------------

/// A three-valued answer: definite yes, definite no, or undetermined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }

    /// Three-valued conjunction: no dominates, then unknown.
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Unknown, _) | (_, Tri::Unknown) => Tri::Unknown,
            (Tri::Yes, Tri::Yes) => Tri::Yes,
        }
    }
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tri::Yes => write!(f, "1"),
            Tri::No => write!(f, "0"),
            Tri::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug, Error)]
pub enum GluedError {
    #[error("glued verification is restricted to the finitary language")]
    NotFinitary,
    #[error("oracle database line {line}: {msg}")]
    Database { line: usize, msg: String },
    #[error("oracle database: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Realize(#[from] RealizeError),
}

/// Finitary formulas: singleton quantifier blocks and finite listed
/// connective sequences all the way down.
pub fn is_finitary(phi: &Formula) -> bool {
    match phi {
        Formula::Bottom | Formula::Mem(..) | Formula::Eq(..) => true,
        Formula::Implies(p, q) => is_finitary(p) && is_finitary(q),
        Formula::Conj(seq) | Formula::Disj(seq) => match seq {
            FormulaSeq::Listed(parts) => parts.iter().all(is_finitary),
            FormulaSeq::Cyclic { .. } => false,
        },
        Formula::Exists(ctx, body) | Formula::Forall(ctx, body) => {
            ctx.width() == 1 && is_finitary(body)
        }
    }
}

// ---------------------------------------------------------------------------
// Provability oracle
// ---------------------------------------------------------------------------

/// A finite, monotone formula database with a three-valued query interface.
///
/// `proves` answers yes for database members (after the last saturation),
/// and decides closed atomic sentences outright from the denoted sets —
/// the elementary-diagram facts need no database entry. Every other query
/// is unknown: the oracle never guesses.
#[derive(Debug, Clone, Default)]
pub struct ProvabilityOracle {
    facts: BTreeSet<Formula>,
}

/// Hard cap on database growth during saturation, keeping desk-scale
/// queries desk-scale.
const SATURATION_CAP: usize = 4_096;

impl ProvabilityOracle {
    pub fn new() -> ProvabilityOracle {
        ProvabilityOracle::default()
    }

    pub fn from_formulas(facts: impl IntoIterator<Item = Formula>) -> ProvabilityOracle {
        ProvabilityOracle {
            facts: facts.into_iter().collect(),
        }
    }

    /// Parses a database: one formula per line, blank lines and `#`
    /// comments skipped.
    pub fn parse(text: &str) -> Result<ProvabilityOracle, GluedError> {
        let mut facts = BTreeSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let phi = parse_formula(line).map_err(|e| GluedError::Database {
                line: idx + 1,
                msg: e.to_string(),
            })?;
            facts.insert(phi);
        }
        Ok(ProvabilityOracle { facts })
    }

    pub fn load(path: &Path) -> Result<ProvabilityOracle, GluedError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Adds one formula. The database only grows.
    pub fn insert(&mut self, phi: Formula) {
        self.facts.insert(phi);
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Formula> {
        self.facts.iter()
    }

    /// Closes the database under a bounded number of rounds of the basic
    /// rules: conjunction elimination and (subformula-guided) introduction,
    /// disjunction introduction toward subformula targets, modus ponens,
    /// and identity implications over database subformulas. Growth stops at
    /// a fixed cap, keeping saturation total and monotone.
    pub fn saturate(&mut self, rounds: usize) {
        for _ in 0..rounds {
            if self.facts.len() >= SATURATION_CAP {
                break;
            }
            let mut new_facts: Vec<Formula> = Vec::new();
            let targets = self.subformula_closure();

            for phi in &self.facts {
                // Conjunction elimination.
                if let Formula::Conj(FormulaSeq::Listed(parts)) = phi {
                    for p in parts {
                        if !self.facts.contains(p) {
                            new_facts.push(p.clone());
                        }
                    }
                }
                // Modus ponens.
                if let Formula::Implies(p, q) = phi {
                    if self.facts.contains(p) && !self.facts.contains(q) {
                        new_facts.push((**q).clone());
                    }
                }
            }
            for t in &targets {
                match t {
                    // Conjunction introduction toward a known shape.
                    Formula::Conj(FormulaSeq::Listed(parts)) => {
                        if !parts.is_empty()
                            && !self.facts.contains(t)
                            && parts.iter().all(|p| self.facts.contains(p))
                        {
                            new_facts.push(t.clone());
                        }
                    }
                    // Disjunction introduction toward a known shape.
                    Formula::Disj(FormulaSeq::Listed(parts)) => {
                        if !self.facts.contains(t)
                            && parts.iter().any(|p| self.facts.contains(p))
                        {
                            new_facts.push(t.clone());
                        }
                    }
                    _ => {}
                }
            }
            // Identity implications over every known subformula.
            for t in &targets {
                let id = Formula::imp(t.clone(), t.clone());
                if !self.facts.contains(&id) {
                    new_facts.push(id);
                }
            }

            if new_facts.is_empty() {
                break;
            }
            for f in new_facts {
                if self.facts.len() >= SATURATION_CAP {
                    break;
                }
                self.facts.insert(f);
            }
        }
    }

    fn subformula_closure(&self) -> BTreeSet<Formula> {
        fn walk(f: &Formula, out: &mut BTreeSet<Formula>) {
            out.insert(f.clone());
            match f {
                Formula::Bottom | Formula::Mem(..) | Formula::Eq(..) => {}
                Formula::Implies(p, q) => {
                    walk(p, out);
                    walk(q, out);
                }
                Formula::Conj(FormulaSeq::Listed(parts))
                | Formula::Disj(FormulaSeq::Listed(parts)) => {
                    for p in parts {
                        walk(p, out);
                    }
                }
                Formula::Conj(FormulaSeq::Cyclic { cycle, .. })
                | Formula::Disj(FormulaSeq::Cyclic { cycle, .. }) => {
                    for p in cycle {
                        walk(p, out);
                    }
                }
                Formula::Exists(_, body) | Formula::Forall(_, body) => walk(body, out),
            }
        }
        let mut out = BTreeSet::new();
        for f in &self.facts {
            walk(f, &mut out);
        }
        out
    }

    /// Three-valued provability: database membership says yes; closed
    /// atomic sentences are decided from the denoted sets; everything else
    /// is unknown.
    pub fn proves(&self, phi: &Formula) -> Tri {
        if self.facts.contains(phi) {
            return Tri::Yes;
        }
        match phi {
            Formula::Eq(Term::Const(a), Term::Const(b)) => Tri::from_bool(a == b),
            Formula::Mem(Term::Const(a), Term::Const(b)) => Tri::from_bool(b.contains(a)),
            Formula::Bottom => Tri::No,
            _ => Tri::Unknown,
        }
    }
}

// ---------------------------------------------------------------------------
// Glued verification
// ---------------------------------------------------------------------------

/// Verifies a realiser under the glued clauses: plain verification with
/// the implication and universal clauses additionally consulting the
/// oracle. Unknown oracle answers make the verdict unknown unless some
/// executable clause already fails outright.
pub fn verify_glued(
    r: &Realizer,
    phi: &Formula,
    oracle: &ProvabilityOracle,
    u: &CodeUniverse,
) -> Result<Tri, GluedError> {
    if !is_finitary(phi) {
        return Err(GluedError::NotFinitary);
    }
    if !phi.free_vars().is_empty() {
        return Err(RealizeError::NotSentence.into());
    }
    let ver = Verifier::with_param(u, r.parameter.clone());
    let v = match realizer_value(r, u) {
        Ok(v) => v,
        Err(crate::realizer::EvalError::Stuck(_)) => return Ok(Tri::No),
        Err(e) => return Err(RealizeError::from(e).into()),
    };
    let glued = GluedVerifier { ver, oracle, u };
    Ok(glued.check(&v, phi)?)
}

struct GluedVerifier<'a> {
    ver: Verifier<'a>,
    oracle: &'a ProvabilityOracle,
    u: &'a CodeUniverse,
}

impl GluedVerifier<'_> {
    fn check(&self, v: &Val, phi: &Formula) -> Result<Tri, RealizeError> {
        match phi {
            // Atomic clauses are untouched by the gluing.
            Formula::Bottom | Formula::Eq(..) | Formula::Mem(..) => {
                Ok(Tri::from_bool(self.ver.check(v, phi)?))
            }
            Formula::Implies(p, q) => {
                let endorsed = self.oracle.proves(phi);
                let mut behaved = Tri::Yes;
                for s in self.ver.pool(p)?.iter() {
                    let Some(w) = self.ver.apply1(v, s.clone())? else {
                        behaved = Tri::No;
                        break;
                    };
                    behaved = behaved.and(self.check(&w, q)?);
                    if behaved == Tri::No {
                        break;
                    }
                }
                Ok(endorsed.and(behaved))
            }
            Formula::Conj(seq) => {
                let mut out = Tri::Yes;
                for idx in seq.sample_indices() {
                    let part = seq.part(&idx).expect("sampled index is in range");
                    let Some(w) = self.ver.apply1(v, Val::Ord(idx.clone()))? else {
                        return Ok(Tri::No);
                    };
                    out = out.and(self.check(&w, part)?);
                    if out == Tri::No {
                        break;
                    }
                }
                Ok(out)
            }
            Formula::Disj(seq) => {
                let Some(out) = self.ver.apply1(v, Val::ord(0))? else {
                    return Ok(Tri::No);
                };
                let Val::Pair(gamma, s) = out else {
                    return Ok(Tri::No);
                };
                let Val::Ord(gamma) = &*gamma else {
                    return Ok(Tri::No);
                };
                let Some(part) = seq.part(gamma) else {
                    return Ok(Tri::No);
                };
                self.check(&s, part)
            }
            Formula::Exists(ctx, body) => {
                let Some(out) = self.ver.apply1(v, Val::ord(0))? else {
                    return Ok(Tri::No);
                };
                let Val::Pair(code, s) = out else {
                    return Ok(Tri::No);
                };
                let Val::Code(code) = &*code else {
                    return Ok(Tri::No);
                };
                let x = crate::code::decode_set(code);
                let inst = subst_sets(body, ctx, std::slice::from_ref(&x));
                self.check(&s, &inst)
            }
            Formula::Forall(ctx, body) => {
                let endorsed = self.oracle.proves(phi);
                let mut behaved = Tri::Yes;
                'outer: for xs in self.u.sets() {
                    let inst = subst_sets(body, ctx, std::slice::from_ref(xs));
                    for c in self.u.codes_of(xs) {
                        let Some(w) = self.ver.apply1(v, Val::Code(c))? else {
                            behaved = Tri::No;
                            break 'outer;
                        };
                        behaved = behaved.and(self.check(&w, &inst)?);
                        if behaved == Tri::No {
                            break 'outer;
                        }
                    }
                }
                Ok(endorsed.and(behaved))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Disjunction-property extraction
// ---------------------------------------------------------------------------

/// From a glued realiser of a finitary disjunction: the branch it selects
/// and a realiser of that branch, re-verified under the same oracle. The
/// verdict of the re-verification rides along — extraction is the
/// executable half of the disjunction property, and the caller sees
/// exactly how much the oracle could confirm.
pub fn dp_extract(
    r: &Realizer,
    phi: &Formula,
    oracle: &ProvabilityOracle,
    u: &CodeUniverse,
) -> Result<(Ordinal, Realizer, Tri), GluedError> {
    if !is_finitary(phi) {
        return Err(GluedError::NotFinitary);
    }
    let Formula::Disj(seq) = phi else {
        return Err(RealizeError::Shape("a disjunction is required".into()).into());
    };
    let (index, branch_realizer) = extract_disjunct(r, phi, u)?;
    let part = seq
        .part(&index)
        .expect("extract_disjunct validated the index")
        .clone();
    let verdict = verify_glued(&branch_realizer, &part, oracle, u)?;
    Ok((index, branch_realizer, verdict))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Context, VarId};
    use crate::hfset::HFSet;
    use crate::realizer::{eq_program, verify, RTerm, DEFAULT_FUEL};

    fn universe() -> CodeUniverse {
        CodeUniverse::new(2, 1, DEFAULT_FUEL)
    }

    fn fml(text: &str) -> Formula {
        parse_formula(text).expect("well-formed formula")
    }

    fn eq_empty() -> Formula {
        Formula::Eq(
            Term::Const(HFSet::empty()),
            Term::Const(HFSet::empty()),
        )
    }

    #[test]
    fn closed_atomics_answer_from_the_denoted_sets() {
        let oracle = ProvabilityOracle::new();
        assert_eq!(oracle.proves(&eq_empty()), Tri::Yes);
        let wrong = Formula::Eq(
            Term::Const(HFSet::empty()),
            Term::Const(HFSet::vn(1)),
        );
        assert_eq!(oracle.proves(&wrong), Tri::No);
        let member = Formula::Mem(
            Term::Const(HFSet::empty()),
            Term::Const(HFSet::vn(1)),
        );
        assert_eq!(oracle.proves(&member), Tri::Yes);
        assert_eq!(oracle.proves(&Formula::Bottom), Tri::No);
        assert_eq!(oracle.proves(&fml("(all (x0) (eq x0 x0))")), Tri::Unknown);
    }

    #[test]
    fn atomic_sentences_verify_without_any_database() {
        let u = universe();
        let oracle = ProvabilityOracle::new();
        let r = Realizer::new(eq_program());
        assert_eq!(
            verify_glued(&r, &eq_empty(), &oracle, &u).expect("verdict"),
            Tri::Yes
        );
    }

    #[test]
    fn unendorsed_implications_never_reach_yes() {
        let u = universe();
        let oracle = ProvabilityOracle::new();
        let phi = Formula::imp(eq_empty(), eq_empty());
        let r = Realizer::new(RTerm::lam(RTerm::Var(0)));
        // Plain verification accepts; glued degrades to unknown.
        assert_eq!(verify(&r, &phi, &u), Ok(true));
        assert_eq!(
            verify_glued(&r, &phi, &oracle, &u).expect("verdict"),
            Tri::Unknown
        );
    }

    #[test]
    fn endorsed_implications_verify() {
        let u = universe();
        let phi = Formula::imp(eq_empty(), eq_empty());
        let oracle = ProvabilityOracle::from_formulas([phi.clone()]);
        let r = Realizer::new(RTerm::lam(RTerm::Var(0)));
        assert_eq!(
            verify_glued(&r, &phi, &oracle, &u).expect("verdict"),
            Tri::Yes
        );
    }

    #[test]
    fn endorsed_universals_verify_and_unendorsed_stay_unknown() {
        let u = universe();
        let phi = fml("(all (x0) (eq x0 x0))");
        let r = Realizer::new(RTerm::lam(eq_program()));
        assert_eq!(verify(&r, &phi, &u), Ok(true));
        let empty = ProvabilityOracle::new();
        assert_eq!(
            verify_glued(&r, &phi, &empty, &u).expect("verdict"),
            Tri::Unknown
        );
        let oracle = ProvabilityOracle::from_formulas([phi.clone()]);
        assert_eq!(
            verify_glued(&r, &phi, &oracle, &u).expect("verdict"),
            Tri::Yes
        );
    }

    #[test]
    fn misbehaving_realisers_fail_even_when_endorsed() {
        let u = universe();
        let wrong = Formula::Eq(
            Term::Const(HFSet::empty()),
            Term::Const(HFSet::vn(1)),
        );
        let phi = Formula::imp(eq_empty(), wrong);
        let oracle = ProvabilityOracle::from_formulas([phi.clone()]);
        let r = Realizer::new(RTerm::lam(RTerm::Var(0)));
        assert_eq!(
            verify_glued(&r, &phi, &oracle, &u).expect("verdict"),
            Tri::No
        );
    }

    #[test]
    fn glued_yes_implies_plain_verification() {
        let u = universe();
        let ident = Formula::imp(eq_empty(), eq_empty());
        let all_eq = fml("(all (x0) (eq x0 x0))");
        let fixtures: Vec<(Realizer, Formula)> = vec![
            (Realizer::new(eq_program()), eq_empty()),
            (Realizer::new(RTerm::lam(RTerm::Var(0))), ident.clone()),
            (Realizer::new(RTerm::lam(eq_program())), all_eq.clone()),
        ];
        let oracle = ProvabilityOracle::from_formulas([ident, all_eq]);
        for (r, phi) in fixtures {
            let verdict = verify_glued(&r, &phi, &oracle, &u).expect("verdict");
            assert_eq!(verdict, Tri::Yes);
            assert_eq!(verify(&r, &phi, &u), Ok(true), "plain must accept {phi}");
        }
    }

    #[test]
    fn growing_the_database_never_downgrades() {
        let u = universe();
        let phi = Formula::imp(eq_empty(), eq_empty());
        let r = Realizer::new(RTerm::lam(RTerm::Var(0)));
        let mut oracle = ProvabilityOracle::new();
        let before = verify_glued(&r, &phi, &oracle, &u).expect("verdict");
        assert_eq!(before, Tri::Unknown);
        oracle.insert(phi.clone());
        let after = verify_glued(&r, &phi, &oracle, &u).expect("verdict");
        assert_eq!(after, Tri::Yes);
    }

    #[test]
    fn saturation_applies_the_basic_rules() {
        let a = eq_empty();
        let b = Formula::Mem(
            Term::Const(HFSet::empty()),
            Term::Const(HFSet::vn(1)),
        );
        // Conjunction elimination.
        let mut oracle =
            ProvabilityOracle::from_formulas([Formula::conj(vec![a.clone(), b.clone()])]);
        oracle.saturate(2);
        assert_eq!(oracle.proves(&a), Tri::Yes);
        assert_eq!(oracle.proves(&b), Tri::Yes);
        // Modus ponens.
        let c = Formula::disj(vec![a.clone(), Formula::Bottom]);
        let mut oracle =
            ProvabilityOracle::from_formulas([a.clone(), Formula::imp(a.clone(), c.clone())]);
        assert_eq!(oracle.proves(&c), Tri::Unknown);
        oracle.saturate(2);
        assert_eq!(oracle.proves(&c), Tri::Yes);
        // Identity implications over subformulas.
        assert_eq!(oracle.proves(&Formula::imp(a.clone(), a.clone())), Tri::Yes);
        // Disjunction introduction toward a known shape: c = a ∨ ⊥ was a
        // subformula target, derivable already from a alone.
        let mut oracle = ProvabilityOracle::from_formulas([
            a.clone(),
            Formula::imp(c.clone(), c.clone()),
        ]);
        oracle.saturate(2);
        assert_eq!(oracle.proves(&c), Tri::Yes);
        // Conjunction introduction toward a known shape.
        let conj = Formula::conj(vec![a.clone(), b.clone()]);
        let mut oracle = ProvabilityOracle::from_formulas([
            a.clone(),
            b.clone(),
            Formula::imp(conj.clone(), conj.clone()),
        ]);
        oracle.saturate(2);
        assert_eq!(oracle.proves(&conj), Tri::Yes);
    }

    #[test]
    fn database_files_parse_one_formula_per_line() {
        let text = "# identity endorsements\n(imp (eq {} {}) (eq {} {}))\n\n(all (x0) (eq x0 x0))\n";
        let oracle = ProvabilityOracle::parse(text).expect("parses");
        assert_eq!(oracle.len(), 2);
        assert_eq!(
            oracle.proves(&fml("(all (x0) (eq x0 x0))")),
            Tri::Yes
        );
        let bad = ProvabilityOracle::parse("(eq {} {})\n(not-a-formula");
        assert!(matches!(bad, Err(GluedError::Database { line: 2, .. })));
    }

    #[test]
    fn dp_extract_returns_the_selected_branch() {
        let u = universe();
        let left = eq_empty();
        let phi = Formula::disj(vec![left.clone(), Formula::Bottom]);
        // λ_. ⟨0, equality realiser⟩
        let r = Realizer::new(RTerm::lam(RTerm::pair(RTerm::ord(0), eq_program())));
        let oracle = ProvabilityOracle::new();
        let (idx, branch, verdict) = dp_extract(&r, &phi, &oracle, &u).expect("extracts");
        assert_eq!(idx, Ordinal::nat(0));
        assert_eq!(verdict, Tri::Yes);
        assert_eq!(verify(&branch, &left, &u), Ok(true));

        let psi = Formula::disj(vec![Formula::Bottom, left.clone()]);
        let r2 = Realizer::new(RTerm::lam(RTerm::pair(RTerm::ord(1), eq_program())));
        let (idx2, branch2, verdict2) = dp_extract(&r2, &psi, &oracle, &u).expect("extracts");
        assert_eq!(idx2, Ordinal::nat(1));
        assert_eq!(verdict2, Tri::Yes);
        assert_eq!(verify(&branch2, &left, &u), Ok(true));
    }

    #[test]
    fn infinitary_inputs_are_refused() {
        let u = universe();
        let oracle = ProvabilityOracle::new();
        let wide: Formula = Formula::Forall(
            Context::new(vec![0 as VarId, 1 as VarId]),
            Box::new(Formula::Eq(Term::Var(0), Term::Var(1))),
        );
        let r = Realizer::new(RTerm::lam(eq_program()));
        assert!(matches!(
            verify_glued(&r, &wide, &oracle, &u),
            Err(GluedError::NotFinitary)
        ));
        assert!(matches!(
            dp_extract(&r, &wide, &oracle, &u),
            Err(GluedError::NotFinitary)
        ));
    }
}

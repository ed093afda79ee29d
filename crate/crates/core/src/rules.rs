//! Sequent-level combinators: given realisers of premise sequents, build a
//! realiser of the conclusion sequent by explicit program construction.
//!
//! A sequent `φ ⊢_x ψ` stands for the sentence `∀x(φ → ψ)` (or the bare
//! implication when the context is empty), and its realiser follows the
//! verifier's conventions: with a context it takes the context-tuple code
//! first, then a realiser of the antecedent, and returns a realiser of the
//! consequent.
//!
//! Premise realisers are spliced into the output as closed program terms, so
//! every premise must carry the same parameter code; the output carries that
//! shared parameter. Tree-shaped rules (`walking`,
//! `transfinite_transitivity`) additionally drive the premise realisers
//! through the interpreter to discover which branches they select.

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::code::{build_code, Code};
use crate::formula::{substitute, Context, Formula, FormulaSeq, Term, VarId};
use crate::hfset::HFSet;
use crate::ordinal::Ordinal;
use crate::realizer::{
    eq_program, realizer_value, witness_code, CodeUniverse, EvalError, PrimOp, RTerm,
    RealizeError, Realizer, Val, Verifier,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("rule expects {expected} premises, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("premise shape: {0}")]
    Shape(String),
    #[error("premise realisers carry different parameters")]
    ParameterMismatch,
    #[error("context form not supported at this scale: {0}")]
    UnsupportedContext(String),
    #[error("bar does not cover the tree at node {0:?}")]
    BarNotCovering(Vec<u64>),
    #[error(transparent)]
    Realize(#[from] RealizeError),
}

type Result<T> = std::result::Result<T, RuleError>;

// ---------------------------------------------------------------------------
// Sequents.
// ---------------------------------------------------------------------------

/// `antecedent ⊢_ctx consequent`; an empty context means a closed sequent.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequent {
    pub ctx: Context,
    pub antecedent: Formula,
    pub consequent: Formula,
}

impl Sequent {
    pub fn new(ctx: Context, antecedent: Formula, consequent: Formula) -> Sequent {
        Sequent {
            ctx,
            antecedent,
            consequent,
        }
    }

    pub fn closed(antecedent: Formula, consequent: Formula) -> Sequent {
        Sequent::new(Context::new(vec![]), antecedent, consequent)
    }

    /// The sentence the sequent stands for.
    pub fn formula(&self) -> Formula {
        let imp = Formula::imp(self.antecedent.clone(), self.consequent.clone());
        if self.ctx.width() == 0 {
            imp
        } else {
            Formula::Forall(self.ctx.clone(), Box::new(imp))
        }
    }
}

/// A sequent together with a realiser of its sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub sequent: Sequent,
    pub realizer: Realizer,
}

impl Derivation {
    pub fn new(sequent: Sequent, realizer: Realizer) -> Derivation {
        Derivation { sequent, realizer }
    }
}

// ---------------------------------------------------------------------------
// Rule specifications.
// ---------------------------------------------------------------------------

/// A rule application: the rule's identity together with the side data its
/// program construction needs. Axiom-shaped rules take no premises.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleSpec {
    /// `φ ⊢_x φ`.
    Identity { ctx: Context, phi: Formula },
    /// From `φ ⊢_x ψ` infer `φ[s/x] ⊢_y ψ[s/x]`. Supported substitutions:
    /// all-constant terms (closing the sequent) or a single-variable rename.
    Substitution { terms: Vec<Term> },
    /// From `φ ⊢_x ψ` and `ψ ⊢_x θ` infer `φ ⊢_x θ`.
    Cut,
    /// `⊤ ⊢_v v = v`.
    EqualityRefl { var: VarId },
    /// `(lhs = rhs) ∧ φ[lhs/hole] ⊢_ctx φ[rhs/hole]`.
    EqualitySubst {
        ctx: Context,
        lhs: Term,
        rhs: Term,
        template: Formula,
        hole: VarId,
    },
    /// `⋀φᵢ ⊢_ctx φ_index`.
    ConjElim {
        ctx: Context,
        conj: Formula,
        index: Ordinal,
    },
    /// From `{φ ⊢_x ψᵢ}ᵢ` infer `φ ⊢_x ⋀ψᵢ` (listed conjunction).
    ConjIntro,
    /// As ConjIntro, but the premises are one cycle of a cyclic conjunction
    /// of the given length.
    ConjIntroCyclic { len: Ordinal },
    /// `φ_index ⊢_ctx ⋁φᵢ`.
    DisjIntro {
        ctx: Context,
        disj: Formula,
        index: Ordinal,
    },
    /// From `{φᵢ ⊢_x θ}ᵢ` infer `⋁φᵢ ⊢_x θ` (listed disjunction).
    DisjElim,
    /// As DisjElim for one cycle of a cyclic disjunction.
    DisjElimCyclic { len: Ordinal },
    /// From `φ ∧ ψ ⊢_x η` infer `φ ⊢_x ψ → η` (currying).
    ImpIntro,
    /// From `φ ⊢_x ψ → η` infer `φ ∧ ψ ⊢_x η` (uncurrying).
    ImpElim,
    /// From `φ ⊢_y ψ` (y not free in ψ) infer `∃y φ ⊢ ψ`.
    ExistsElim,
    /// From `∃y φ ⊢ ψ` infer `φ ⊢_y ψ`.
    ExistsIntro,
    /// From `φ ⊢_y ψ` (y not free in φ) infer `φ ⊢ ∀y ψ`.
    ForallIntro,
    /// From `φ ⊢ ∀y ψ` infer `φ ⊢_y ψ`.
    ForallElim,
    /// `⋀ᵢ(φ ∨ ψᵢ) ⊢_ctx φ ∨ ⋀ᵢψᵢ`.
    SmallDistributivity {
        ctx: Context,
        phi: Formula,
        psis: Vec<Formula>,
    },
}

impl RuleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RuleSpec::Identity { .. } => "identity",
            RuleSpec::Substitution { .. } => "substitution",
            RuleSpec::Cut => "cut",
            RuleSpec::EqualityRefl { .. } => "equality-refl",
            RuleSpec::EqualitySubst { .. } => "equality-subst",
            RuleSpec::ConjElim { .. } => "conj-elim",
            RuleSpec::ConjIntro => "conj-intro",
            RuleSpec::ConjIntroCyclic { .. } => "conj-intro-cyclic",
            RuleSpec::DisjIntro { .. } => "disj-intro",
            RuleSpec::DisjElim => "disj-elim",
            RuleSpec::DisjElimCyclic { .. } => "disj-elim-cyclic",
            RuleSpec::ImpIntro => "imp-intro",
            RuleSpec::ImpElim => "imp-elim",
            RuleSpec::ExistsElim => "exists-elim",
            RuleSpec::ExistsIntro => "exists-intro",
            RuleSpec::ForallIntro => "forall-intro",
            RuleSpec::ForallElim => "forall-elim",
            RuleSpec::SmallDistributivity { .. } => "small-distributivity",
        }
    }
}

// ---------------------------------------------------------------------------
// Small term helpers.
// ---------------------------------------------------------------------------

fn v(i: u32) -> RTerm {
    RTerm::Var(i)
}

fn case_ord(scrut: RTerm, arms: Vec<(Ordinal, RTerm)>, default: Option<RTerm>) -> RTerm {
    RTerm::CaseOrd {
        scrut: Rc::new(scrut),
        arms,
        default: default.map(Rc::new),
    }
}

fn case_mod(scrut: RTerm, arms: Vec<RTerm>) -> RTerm {
    RTerm::CaseMod {
        scrut: Rc::new(scrut),
        arms,
    }
}

/// Wraps a closed core as a sequent realiser for the given context width.
fn wrap_ctx(width: usize, core: RTerm) -> RTerm {
    if width == 0 {
        core
    } else {
        RTerm::lam(core)
    }
}

fn default_parameter() -> Code {
    build_code(&HFSet::empty())
}

fn shared_parameter(premises: &[Derivation]) -> Result<Code> {
    let mut params = premises.iter().map(|d| &d.realizer.parameter);
    match params.next() {
        None => Ok(default_parameter()),
        Some(first) => {
            if params.all(|p| p == first) {
                Ok(first.clone())
            } else {
                Err(RuleError::ParameterMismatch)
            }
        }
    }
}

fn want_premises(premises: &[Derivation], expected: usize) -> Result<()> {
    if premises.len() == expected {
        Ok(())
    } else {
        Err(RuleError::Arity {
            expected,
            got: premises.len(),
        })
    }
}

fn shape(msg: impl Into<String>) -> RuleError {
    RuleError::Shape(msg.into())
}

fn listed_parts(f: &Formula, what: &str) -> Result<Vec<Formula>> {
    let seq = match f {
        Formula::Conj(s) | Formula::Disj(s) => s,
        _ => return Err(shape(format!("expected a {what}"))),
    };
    match seq {
        FormulaSeq::Listed(parts) => Ok(parts.clone()),
        FormulaSeq::Cyclic { .. } => Err(shape(format!("expected a listed {what}"))),
    }
}

// ---------------------------------------------------------------------------
// The combinator.
// ---------------------------------------------------------------------------

/// Builds the conclusion sequent and its realiser from a rule application
/// and realised premises.
pub fn sequent_combinator(spec: &RuleSpec, premises: &[Derivation]) -> Result<Derivation> {
    let parameter = shared_parameter(premises)?;
    match spec {
        RuleSpec::Identity { ctx, phi } => {
            want_premises(premises, 0)?;
            let program = wrap_ctx(ctx.width(), RTerm::lam(v(0)));
            Ok(Derivation::new(
                Sequent::new(ctx.clone(), phi.clone(), phi.clone()),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::Substitution { terms } => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            let width = prem.sequent.ctx.width();
            if width == 0 || width != terms.len() {
                return Err(shape(
                    "substitution needs one term per premise context variable",
                ));
            }
            let map: BTreeMap<VarId, Term> = prem
                .sequent
                .ctx
                .0
                .iter()
                .cloned()
                .zip(terms.iter().cloned())
                .collect();
            let ante = substitute(&prem.sequent.antecedent, &map);
            let cons = substitute(&prem.sequent.consequent, &map);
            let p = prem.realizer.program.clone();
            if terms.iter().all(|t| matches!(t, Term::Const(_))) {
                let sets: Vec<HFSet> = terms
                    .iter()
                    .map(|t| match t {
                        Term::Const(s) => s.clone(),
                        Term::Var(_) => unreachable!("checked constant"),
                    })
                    .collect();
                let code = witness_code(&sets);
                let program = RTerm::app(p, RTerm::ConstCode(code));
                return Ok(Derivation::new(
                    Sequent::closed(ante, cons),
                    Realizer { program, parameter },
                ));
            }
            if let [Term::Var(y)] = terms.as_slice() {
                let program = RTerm::lam(RTerm::lam(RTerm::app(RTerm::app(p, v(1)), v(0))));
                return Ok(Derivation::new(
                    Sequent::new(Context::one(*y), ante, cons),
                    Realizer { program, parameter },
                ));
            }
            Err(RuleError::UnsupportedContext(
                "substitution supports constant instances or a single-variable rename".into(),
            ))
        }
        RuleSpec::Cut => {
            want_premises(premises, 2)?;
            let (a, b) = (&premises[0], &premises[1]);
            if a.sequent.ctx != b.sequent.ctx {
                return Err(shape("cut premises must share their context"));
            }
            if a.sequent.consequent != b.sequent.antecedent {
                return Err(shape("cut premises must agree on the cut formula"));
            }
            let (p1, p2) = (
                a.realizer.program.clone(),
                b.realizer.program.clone(),
            );
            let width = a.sequent.ctx.width();
            let program = if width == 0 {
                RTerm::lam(RTerm::app(p2, RTerm::app(p1, v(0))))
            } else {
                RTerm::lam(RTerm::lam(RTerm::app(
                    RTerm::app(p2, v(1)),
                    RTerm::app(RTerm::app(p1, v(1)), v(0)),
                )))
            };
            Ok(Derivation::new(
                Sequent::new(
                    a.sequent.ctx.clone(),
                    a.sequent.antecedent.clone(),
                    b.sequent.consequent.clone(),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::EqualityRefl { var } => {
            want_premises(premises, 0)?;
            let program = RTerm::lam(RTerm::lam(eq_program()));
            Ok(Derivation::new(
                Sequent::new(
                    Context::one(*var),
                    Formula::top(),
                    Formula::Eq(Term::Var(*var), Term::Var(*var)),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::EqualitySubst {
            ctx,
            lhs,
            rhs,
            template,
            hole,
        } => {
            want_premises(premises, 0)?;
            let with = |t: &Term| {
                let mut m = BTreeMap::new();
                m.insert(*hole, t.clone());
                substitute(template, &m)
            };
            let ante = Formula::conj(vec![
                Formula::Eq(lhs.clone(), rhs.clone()),
                with(lhs),
            ]);
            let program = wrap_ctx(ctx.width(), RTerm::lam(RTerm::app(v(0), RTerm::ord(1))));
            Ok(Derivation::new(
                Sequent::new(ctx.clone(), ante, with(rhs)),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ConjElim { ctx, conj, index } => {
            want_premises(premises, 0)?;
            let Formula::Conj(seq) = conj else {
                return Err(shape("conj-elim needs a conjunction"));
            };
            let Some(part) = seq.part(index) else {
                return Err(shape("conj-elim index out of range"));
            };
            let part = part.clone();
            let core = RTerm::lam(RTerm::app(v(0), RTerm::ConstOrd(index.clone())));
            let program = wrap_ctx(ctx.width(), core);
            Ok(Derivation::new(
                Sequent::new(ctx.clone(), conj.clone(), part),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ConjIntro => {
            if premises.is_empty() {
                return Err(RuleError::Arity {
                    expected: 1,
                    got: 0,
                });
            }
            let ctx = premises[0].sequent.ctx.clone();
            let phi = premises[0].sequent.antecedent.clone();
            let mut parts = Vec::new();
            for d in premises {
                if d.sequent.ctx != ctx || d.sequent.antecedent != phi {
                    return Err(shape(
                        "conj-intro premises must share context and antecedent",
                    ));
                }
                parts.push(d.sequent.consequent.clone());
            }
            let width = ctx.width();
            let arms: Vec<(Ordinal, RTerm)> = premises
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let p = d.realizer.program.clone();
                    let body = if width == 0 {
                        RTerm::app(p, v(1))
                    } else {
                        RTerm::app(RTerm::app(p, v(2)), v(1))
                    };
                    (Ordinal::nat(i as u64), body)
                })
                .collect();
            let core = RTerm::lam(RTerm::lam(case_ord(v(0), arms, None)));
            let program = wrap_ctx(width, core);
            Ok(Derivation::new(
                Sequent::new(ctx, phi, Formula::Conj(FormulaSeq::Listed(parts))),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ConjIntroCyclic { len } => {
            if premises.is_empty() {
                return Err(RuleError::Arity {
                    expected: 1,
                    got: 0,
                });
            }
            let ctx = premises[0].sequent.ctx.clone();
            let phi = premises[0].sequent.antecedent.clone();
            let mut cycle = Vec::new();
            for d in premises {
                if d.sequent.ctx != ctx || d.sequent.antecedent != phi {
                    return Err(shape(
                        "conj-intro premises must share context and antecedent",
                    ));
                }
                cycle.push(d.sequent.consequent.clone());
            }
            let width = ctx.width();
            let arms: Vec<RTerm> = premises
                .iter()
                .map(|d| {
                    let p = d.realizer.program.clone();
                    if width == 0 {
                        RTerm::app(p, v(1))
                    } else {
                        RTerm::app(RTerm::app(p, v(2)), v(1))
                    }
                })
                .collect();
            let core = RTerm::lam(RTerm::lam(case_mod(v(0), arms)));
            let program = wrap_ctx(width, core);
            Ok(Derivation::new(
                Sequent::new(
                    ctx,
                    phi,
                    Formula::Conj(FormulaSeq::Cyclic {
                        len: len.clone(),
                        cycle,
                    }),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::DisjIntro { ctx, disj, index } => {
            want_premises(premises, 0)?;
            let Formula::Disj(seq) = disj else {
                return Err(shape("disj-intro needs a disjunction"));
            };
            let Some(part) = seq.part(index) else {
                return Err(shape("disj-intro index out of range"));
            };
            let part = part.clone();
            let core = RTerm::lam(RTerm::lam(RTerm::pair(
                RTerm::ConstOrd(index.clone()),
                v(1),
            )));
            let program = wrap_ctx(ctx.width(), core);
            Ok(Derivation::new(
                Sequent::new(ctx.clone(), part, disj.clone()),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::DisjElim => {
            if premises.is_empty() {
                return Err(RuleError::Arity {
                    expected: 1,
                    got: 0,
                });
            }
            let ctx = premises[0].sequent.ctx.clone();
            let theta = premises[0].sequent.consequent.clone();
            let mut parts = Vec::new();
            for d in premises {
                if d.sequent.ctx != ctx || d.sequent.consequent != theta {
                    return Err(shape(
                        "disj-elim premises must share context and consequent",
                    ));
                }
                parts.push(d.sequent.antecedent.clone());
            }
            let width = ctx.width();
            let tagged = |e: RTerm| RTerm::app(e, RTerm::ord(0));
            let arms: Vec<(Ordinal, RTerm)> = premises
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let p = d.realizer.program.clone();
                    let inner = RTerm::snd(tagged(v(0)));
                    let body = if width == 0 {
                        RTerm::app(p, inner)
                    } else {
                        RTerm::app(RTerm::app(p, v(1)), inner)
                    };
                    (Ordinal::nat(i as u64), body)
                })
                .collect();
            let core = RTerm::lam(case_ord(RTerm::fst(tagged(v(0))), arms, None));
            let program = wrap_ctx(width, core);
            Ok(Derivation::new(
                Sequent::new(ctx, Formula::Disj(FormulaSeq::Listed(parts)), theta),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::DisjElimCyclic { len } => {
            if premises.is_empty() {
                return Err(RuleError::Arity {
                    expected: 1,
                    got: 0,
                });
            }
            let ctx = premises[0].sequent.ctx.clone();
            let theta = premises[0].sequent.consequent.clone();
            let mut cycle = Vec::new();
            for d in premises {
                if d.sequent.ctx != ctx || d.sequent.consequent != theta {
                    return Err(shape(
                        "disj-elim premises must share context and consequent",
                    ));
                }
                cycle.push(d.sequent.antecedent.clone());
            }
            let width = ctx.width();
            let tagged = |e: RTerm| RTerm::app(e, RTerm::ord(0));
            let arms: Vec<RTerm> = premises
                .iter()
                .map(|d| {
                    let p = d.realizer.program.clone();
                    let inner = RTerm::snd(tagged(v(0)));
                    if width == 0 {
                        RTerm::app(p, inner)
                    } else {
                        RTerm::app(RTerm::app(p, v(1)), inner)
                    }
                })
                .collect();
            let core = RTerm::lam(case_mod(RTerm::fst(tagged(v(0))), arms));
            let program = wrap_ctx(width, core);
            Ok(Derivation::new(
                Sequent::new(
                    ctx,
                    Formula::Disj(FormulaSeq::Cyclic {
                        len: len.clone(),
                        cycle,
                    }),
                    theta,
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ImpIntro => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            let parts = listed_parts(&prem.sequent.antecedent, "two-part conjunction")?;
            let [phi, psi] = parts.as_slice() else {
                return Err(shape("imp-intro needs a two-part conjunction antecedent"));
            };
            let eta = prem.sequent.consequent.clone();
            let p = prem.realizer.program.clone();
            let width = prem.sequent.ctx.width();
            let pairfn = RTerm::lam(case_ord(
                v(0),
                vec![(Ordinal::zero(), v(2)), (Ordinal::nat(1), v(1))],
                None,
            ));
            let core = if width == 0 {
                RTerm::lam(RTerm::lam(RTerm::app(p, pairfn)))
            } else {
                RTerm::lam(RTerm::lam(RTerm::app(RTerm::app(p, v(2)), pairfn)))
            };
            let program = wrap_ctx(width, core);
            Ok(Derivation::new(
                Sequent::new(
                    prem.sequent.ctx.clone(),
                    phi.clone(),
                    Formula::imp(psi.clone(), eta),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ImpElim => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            let Formula::Implies(psi, eta) = &prem.sequent.consequent else {
                return Err(shape("imp-elim needs an implication consequent"));
            };
            let phi = prem.sequent.antecedent.clone();
            let p = prem.realizer.program.clone();
            let width = prem.sequent.ctx.width();
            let head = if width == 0 {
                p
            } else {
                RTerm::app(p, v(1))
            };
            let core = RTerm::lam(RTerm::app(
                RTerm::app(head, RTerm::app(v(0), RTerm::ord(0))),
                RTerm::app(v(0), RTerm::ord(1)),
            ));
            let program = wrap_ctx(width, core);
            Ok(Derivation::new(
                Sequent::new(
                    prem.sequent.ctx.clone(),
                    Formula::conj(vec![phi, (**psi).clone()]),
                    (**eta).clone(),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ExistsElim => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            let y = prem.sequent.ctx.clone();
            if y.width() == 0 {
                return Err(shape("exists-elim needs a nonempty premise context"));
            }
            let psi = prem.sequent.consequent.clone();
            if y.0.iter().any(|var| psi.free_vars().contains(var)) {
                return Err(shape("exists-elim: context variable free in consequent"));
            }
            let p = prem.realizer.program.clone();
            let opened = RTerm::app(v(0), RTerm::ord(0));
            let program = RTerm::lam(RTerm::app(
                RTerm::app(p, RTerm::fst(opened.clone())),
                RTerm::snd(opened),
            ));
            Ok(Derivation::new(
                Sequent::closed(
                    Formula::Exists(y, Box::new(prem.sequent.antecedent.clone())),
                    psi,
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ExistsIntro => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            if prem.sequent.ctx.width() != 0 {
                return Err(shape("exists-intro needs a closed premise sequent"));
            }
            let Formula::Exists(y, phi) = &prem.sequent.antecedent else {
                return Err(shape("exists-intro needs an existential antecedent"));
            };
            let p = prem.realizer.program.clone();
            let program = RTerm::lam(RTerm::lam(RTerm::app(
                p,
                RTerm::lam(RTerm::pair(v(2), v(1))),
            )));
            Ok(Derivation::new(
                Sequent::new(
                    y.clone(),
                    (**phi).clone(),
                    prem.sequent.consequent.clone(),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ForallIntro => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            let y = prem.sequent.ctx.clone();
            if y.width() == 0 {
                return Err(shape("forall-intro needs a nonempty premise context"));
            }
            let phi = prem.sequent.antecedent.clone();
            if y.0.iter().any(|var| phi.free_vars().contains(var)) {
                return Err(shape("forall-intro: context variable free in antecedent"));
            }
            let p = prem.realizer.program.clone();
            let program = RTerm::lam(RTerm::lam(RTerm::app(RTerm::app(p, v(0)), v(1))));
            Ok(Derivation::new(
                Sequent::closed(
                    phi,
                    Formula::Forall(y, Box::new(prem.sequent.consequent.clone())),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::ForallElim => {
            want_premises(premises, 1)?;
            let prem = &premises[0];
            if prem.sequent.ctx.width() != 0 {
                return Err(shape("forall-elim needs a closed premise sequent"));
            }
            let Formula::Forall(y, psi) = &prem.sequent.consequent else {
                return Err(shape("forall-elim needs a universal consequent"));
            };
            let p = prem.realizer.program.clone();
            let program = RTerm::lam(RTerm::lam(RTerm::app(RTerm::app(p, v(0)), v(1))));
            Ok(Derivation::new(
                Sequent::new(
                    y.clone(),
                    prem.sequent.antecedent.clone(),
                    (**psi).clone(),
                ),
                Realizer { program, parameter },
            ))
        }
        RuleSpec::SmallDistributivity { ctx, phi, psis } => {
            want_premises(premises, 0)?;
            let ante = Formula::conj(
                psis.iter()
                    .map(|psi| Formula::disj(vec![phi.clone(), psi.clone()]))
                    .collect(),
            );
            let cons = Formula::disj(vec![phi.clone(), Formula::conj(psis.clone())]);
            let n = psis.len();
            // u(i)(0) at a given binder depth for u.
            let probe = |uvar: u32, i: usize| {
                RTerm::app(
                    RTerm::app(v(uvar), RTerm::ord(i as u64)),
                    RTerm::ord(0),
                )
            };
            // Fall-through: no branch chose the left disjunct, so every
            // component realises its ψ.
            let all_arms: Vec<(Ordinal, RTerm)> = (0..n)
                .map(|j| (Ordinal::nat(j as u64), RTerm::snd(probe(2, j))))
                .collect();
            let mut chain = RTerm::lam(RTerm::pair(
                RTerm::ord(1),
                RTerm::lam(case_ord(v(0), all_arms, None)),
            ));
            for i in (0..n).rev() {
                let take_left = RTerm::lam(RTerm::pair(RTerm::ord(0), RTerm::snd(probe(1, i))));
                chain = case_ord(
                    RTerm::fst(probe(0, i)),
                    vec![(Ordinal::zero(), take_left)],
                    Some(chain),
                );
            }
            let program = wrap_ctx(ctx.width(), RTerm::lam(chain));
            Ok(Derivation::new(
                Sequent::new(ctx.clone(), ante, cons),
                Realizer { program, parameter },
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Tree-shaped rules: bars, walking, transfinite transitivity.
// ---------------------------------------------------------------------------

/// A finitely branching, finite-depth tree of formulas with a bar. Nodes are
/// sequences over `0..gamma`; `labels` assigns φ_f to every node up to
/// `depth`; `bar` lists the minimal covering nodes in listed order.
#[derive(Debug, Clone)]
pub struct TreeSpec {
    pub gamma: u64,
    pub depth: u32,
    pub labels: BTreeMap<Vec<u64>, Formula>,
    pub bar: Vec<Vec<u64>>,
}

impl TreeSpec {
    /// `⋀_{f∈B} ⋁_{β<|f|} φ_{f|β+1}` — the conjunction the walk consumes.
    pub fn antecedent(&self) -> Result<Formula> {
        let mut conj = Vec::new();
        for f in &self.bar {
            let mut parts = Vec::new();
            for beta in 0..f.len() {
                parts.push(self.label(&f[..beta + 1])?.clone());
            }
            conj.push(Formula::disj(parts));
        }
        Ok(Formula::conj(conj))
    }

    pub fn root(&self) -> Result<&Formula> {
        self.label(&[])
    }

    fn label(&self, f: &[u64]) -> Result<&Formula> {
        self.labels
            .get(f)
            .ok_or_else(|| shape(format!("no formula at node {f:?}")))
    }

    fn validate(&self) -> Result<()> {
        if self.gamma == 0 {
            return Err(shape("tree must branch"));
        }
        for f in &self.bar {
            if f.is_empty() || f.len() > self.depth as usize {
                return Err(shape("bar nodes must be nonempty and within depth"));
            }
            if f.iter().any(|&j| j >= self.gamma) {
                return Err(shape("bar node outside branching width"));
            }
        }
        Ok(())
    }
}

/// Walks the tree per the dual-distributivity construction: extract the
/// partial realiser map from `r`, then descend and retract until a realiser
/// of φ_∅ appears. `succ` maps each interior node f to a realiser of
/// `⋀_g φ_g → φ_f` over f's direct successors g; `limit` maps limit-length
/// nodes to their retraction premises `φ_f → ⋁_{α<|f|} φ_{f|α}` — at finite
/// depth every node length is a successor, so these are never consulted
/// (retraction past a limit stage is `limit_retract`, tested on its own).
pub fn walking(
    u: &CodeUniverse,
    r: &Realizer,
    tree: &TreeSpec,
    succ: &BTreeMap<Vec<u64>, Realizer>,
    limit: &BTreeMap<Vec<u64>, Realizer>,
) -> Result<Realizer> {
    tree.validate()?;
    for s in succ.values().chain(limit.values()) {
        if s.parameter != r.parameter {
            return Err(RuleError::ParameterMismatch);
        }
    }
    let ver = Verifier::with_param(u, r.parameter.clone());
    let rv = realizer_value(r, u).map_err(relabel_eval)?;

    // Extraction: which disjunct does r select at each bar component?
    let mut dom: BTreeMap<Vec<u64>, RTerm> = BTreeMap::new();
    for (k, f) in tree.bar.iter().enumerate() {
        let e = ver
            .apply1(&rv, Val::ord(k as u64))?
            .ok_or_else(|| shape(format!("antecedent realiser stuck at component {k}")))?;
        let t = ver
            .apply1(&e, Val::ord(0))?
            .ok_or_else(|| shape(format!("disjunction realiser stuck at component {k}")))?;
        let Val::Pair(beta, _) = &t else {
            return Err(shape("disjunction realiser must emit an indexed pair"));
        };
        let Val::Ord(beta) = &**beta else {
            return Err(shape("disjunct index must be an ordinal"));
        };
        let Some(beta) = beta.as_nat() else {
            return Err(shape("disjunct index out of range"));
        };
        if beta as usize >= f.len() {
            return Err(shape("disjunct index out of range"));
        }
        let node = f[..beta as usize + 1].to_vec();
        let prog = RTerm::snd(RTerm::app(
            RTerm::app(r.program.clone(), RTerm::ord(k as u64)),
            RTerm::ord(0),
        ));
        dom.entry(node).or_insert(prog);
    }

    // The walk. Finite trees reach the root or crash on an uncovered branch.
    let mut f: Vec<u64> = Vec::new();
    let budget = 4 * (tree.labels.len() + 2) * (tree.gamma as usize + 1);
    for _ in 0..budget {
        if dom.contains_key(&[][..]) {
            break;
        }
        if dom.contains_key(&f[..]) {
            // Successor retraction; finite lengths have no limit stage.
            f.pop();
            continue;
        }
        if f.len() >= tree.depth as usize {
            return Err(RuleError::BarNotCovering(f));
        }
        let missing: Vec<u64> = (0..tree.gamma)
            .filter(|j| {
                let mut g = f.clone();
                g.push(*j);
                !dom.contains_key(&g)
            })
            .collect();
        if missing.is_empty() {
            let arms: Vec<(Ordinal, RTerm)> = (0..tree.gamma)
                .map(|j| {
                    let mut g = f.clone();
                    g.push(j);
                    (Ordinal::nat(j), dom[&g].clone())
                })
                .collect();
            let conj_prog = RTerm::lam(case_ord(v(0), arms, None));
            let prem = succ
                .get(&f)
                .ok_or_else(|| shape(format!("no successor premise at node {f:?}")))?;
            let prog = RTerm::app(prem.program.clone(), conj_prog);
            dom.insert(f.clone(), prog);
        } else {
            f.push(missing[0]);
        }
    }
    let program = dom
        .remove(&[][..])
        .ok_or_else(|| shape("walk did not reach the root"))?;
    Ok(Realizer {
        program,
        parameter: r.parameter.clone(),
    })
}

/// The limit retraction step of the walk (the only stage that consults the
/// limit premises): from `r2 ⊩ φ_f → ⋁_{α<β} φ_{f|α}` and a realiser of
/// φ_f, recover some earlier stage α together with its realiser.
pub fn limit_retract(
    u: &CodeUniverse,
    r2: &Realizer,
    rf: &Realizer,
) -> Result<(Ordinal, Realizer)> {
    if r2.parameter != rf.parameter {
        return Err(RuleError::ParameterMismatch);
    }
    let ver = Verifier::with_param(u, r2.parameter.clone());
    let r2v = realizer_value(r2, u).map_err(relabel_eval)?;
    let rfv = realizer_value(rf, u).map_err(relabel_eval)?;
    let e = ver
        .apply1(&r2v, rfv)?
        .ok_or_else(|| shape("limit premise stuck on the stage realiser"))?;
    let t = ver
        .apply1(&e, Val::ord(0))?
        .ok_or_else(|| shape("limit disjunction stuck"))?;
    let Val::Pair(alpha, _) = &t else {
        return Err(shape("limit disjunction must emit an indexed pair"));
    };
    let Val::Ord(alpha) = &**alpha else {
        return Err(shape("limit disjunct index must be an ordinal"));
    };
    let program = RTerm::snd(RTerm::app(
        RTerm::app(r2.program.clone(), rf.program.clone()),
        RTerm::ord(0),
    ));
    Ok((
        alpha.clone(),
        Realizer {
            program,
            parameter: r2.parameter.clone(),
        },
    ))
}

fn relabel_eval(e: EvalError) -> RuleError {
    RuleError::Realize(RealizeError::from(e))
}

// ---------------------------------------------------------------------------
// Transfinite transitivity.
// ---------------------------------------------------------------------------

/// Tree data for the transitivity rule: every non-root node g carries a
/// fresh variable x_g and a formula φ_g whose free variables lie along g's
/// chain; the root formula is closed.
#[derive(Debug, Clone)]
pub struct TransSpec {
    pub gamma: u64,
    pub depth: u32,
    pub root: Formula,
    pub xvars: BTreeMap<Vec<u64>, VarId>,
    pub labels: BTreeMap<Vec<u64>, Formula>,
    pub bar: Vec<Vec<u64>>,
}

impl TransSpec {
    fn chain_vars(&self, f: &[u64]) -> Result<Vec<VarId>> {
        (1..=f.len())
            .map(|k| {
                self.xvars
                    .get(&f[..k])
                    .copied()
                    .ok_or_else(|| shape(format!("no variable at node {:?}", &f[..k])))
            })
            .collect()
    }

    fn label(&self, f: &[u64]) -> Result<&Formula> {
        if f.is_empty() {
            return Ok(&self.root);
        }
        self.labels
            .get(f)
            .ok_or_else(|| shape(format!("no formula at node {f:?}")))
    }

    fn is_bar(&self, f: &[u64]) -> Option<usize> {
        self.bar.iter().position(|b| b == f)
    }

    fn covered(&self, f: &[u64]) -> bool {
        if self.is_bar(f).is_some() {
            return true;
        }
        if f.len() >= self.depth as usize {
            return false;
        }
        (0..self.gamma).all(|j| {
            let mut g = f.to_vec();
            g.push(j);
            self.covered(&g)
        })
    }

    /// The conclusion consequent: one disjunct per bar node f, packaging the
    /// existential chain over f's path with the conjunction of its labels.
    pub fn consequent(&self) -> Result<Formula> {
        let mut parts = Vec::new();
        for f in &self.bar {
            let vars = self.chain_vars(f)?;
            let mut conj = Vec::new();
            for k in 1..=f.len() {
                conj.push(self.label(&f[..k])?.clone());
            }
            parts.push(Formula::Exists(
                Context::new(vars),
                Box::new(Formula::conj(conj)),
            ));
        }
        Ok(Formula::disj(parts))
    }

    pub fn conclusion(&self) -> Result<Sequent> {
        Ok(Sequent::closed(self.root.clone(), self.consequent()?))
    }
}

/// Variable indices at tree depth d (stack `u_0, c_1, u_1, …, c_d, u_d`,
/// innermost last), plus `shift` extra binders crossed inside a branch.
fn u_at(d: usize, k: usize, shift: u32) -> RTerm {
    v(2 * (d - k) as u32 + shift)
}

fn c_at(d: usize, k: usize, shift: u32) -> RTerm {
    v(2 * (d - k) as u32 + 1 + shift)
}

/// Builds a realiser of the transitivity conclusion by forward-walking the
/// tree: at each node the premise chooses a successor disjunct and yields a
/// witness; at the bar the collected codes and stage realisers assemble the
/// selected disjunct.
pub fn transfinite_transitivity(
    u: &CodeUniverse,
    spec: &TransSpec,
    premises: &BTreeMap<Vec<u64>, Realizer>,
) -> Result<Derivation> {
    let _ = u;
    if spec.gamma == 0 {
        return Err(shape("tree must branch"));
    }
    // Degenerate bar at the root: the conclusion collapses onto φ_∅ and the
    // premise realiser of its covering disjunction passes through unchanged.
    if spec.bar.iter().any(|f| f.is_empty()) {
        return Ok(Derivation::new(
            Sequent::closed(spec.root.clone(), spec.root.clone()),
            Realizer::new(RTerm::lam(v(0))),
        ));
    }
    if !spec.covered(&[]) {
        let mut f = Vec::new();
        while spec.is_bar(&f).is_none() && f.len() < spec.depth as usize {
            let missing = (0..spec.gamma).find(|j| {
                let mut g = f.clone();
                g.push(*j);
                !spec.covered(&g)
            });
            match missing {
                Some(j) => f.push(j),
                None => break,
            }
        }
        return Err(RuleError::BarNotCovering(f));
    }
    let mut params: Vec<&Code> = premises.values().map(|r| &r.parameter).collect();
    params.dedup();
    if params.len() > 1 {
        return Err(RuleError::ParameterMismatch);
    }
    let parameter = params
        .first()
        .map(|c| (*c).clone())
        .unwrap_or_else(default_parameter);

    let program = RTerm::lam(node_prog(spec, premises, &[], 0)?);
    Ok(Derivation::new(
        spec.conclusion()?,
        Realizer { program, parameter },
    ))
}

fn node_prog(
    spec: &TransSpec,
    premises: &BTreeMap<Vec<u64>, Realizer>,
    f: &[u64],
    d: usize,
) -> Result<RTerm> {
    let prem = premises
        .get(f)
        .ok_or_else(|| shape(format!("no premise at node {f:?}")))?;
    let p = prem.program.clone();
    // Apply the premise to the chain code (its sequent context), then to the
    // current stage realiser u_d.
    let imp = match d {
        0 => p,
        1 => RTerm::app(p, c_at(d, 1, 0)),
        _ => {
            let cs: Vec<RTerm> = (1..=d).map(|k| c_at(d, k, 0)).collect();
            RTerm::app(p, RTerm::Prim(PrimOp::SeqCode, vec![RTerm::List(cs)]))
        }
    };
    let e = RTerm::app(imp, u_at(d, d, 0));
    let t = RTerm::app(e, RTerm::ord(0));
    let mut arms = Vec::new();
    for j in 0..spec.gamma {
        let mut g = f.to_vec();
        g.push(j);
        if spec.label(&g).is_err() {
            continue;
        }
        let rest = if let Some(k) = spec.is_bar(&g) {
            bar_thunk(d + 1, k)
        } else {
            node_prog(spec, premises, &g, d + 1)?
        };
        // Bind (c_{d+1}, u_{d+1}) from the existential the premise emitted.
        let wpair = RTerm::app(RTerm::snd(t.clone()), RTerm::ord(0));
        let branch = RTerm::app(
            RTerm::app(
                RTerm::lam(RTerm::lam(rest)),
                RTerm::fst(wpair.clone()),
            ),
            RTerm::snd(wpair),
        );
        arms.push((Ordinal::nat(j), branch));
    }
    Ok(case_ord(RTerm::fst(t), arms, None))
}

/// At a bar node of depth δ: emit the conclusion disjunct — tag k, then the
/// packaged existential chain (codes joined into one witness, stages joined
/// into one conjunction realiser).
fn bar_thunk(delta: usize, k: usize) -> RTerm {
    // Inside λz.pair(k, λz'.pair(WIT, CONJ)): shifts 1 and 2; CONJ adds one.
    let wit = if delta == 1 {
        c_at(delta, 1, 2)
    } else {
        let cs: Vec<RTerm> = (1..=delta).map(|i| c_at(delta, i, 2)).collect();
        RTerm::Prim(PrimOp::SeqCode, vec![RTerm::List(cs)])
    };
    let conj_arms: Vec<(Ordinal, RTerm)> = (0..delta)
        .map(|beta| (Ordinal::nat(beta as u64), u_at(delta, beta + 1, 3)))
        .collect();
    let conj = RTerm::lam(case_ord(v(0), conj_arms, None));
    RTerm::lam(RTerm::pair(
        RTerm::ord(k as u64),
        RTerm::lam(RTerm::pair(wit, conj)),
    ))
}

// ---------------------------------------------------------------------------

//! Deterministic pseudo-random formula corpora.
//!
//! A corpus is a labelled list of closed sentences: a fixed cover block
//! guaranteeing at least one formula per connective, followed by seeded
//! random sentences from the bounded (Δ₀) and one-existential (Σ₁)
//! fragments. Identical parameters give byte-identical text, so corpora
//! can be regenerated instead of stored.
//!
//! The same building blocks back the sampled acceptance checks: random
//! sets, random bounded sentences, and random existential sentences, all
//! driven by a caller-owned seeded generator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{
    bexists, bforall, classify, parse_formula, Context, Formula, FormulaError, Term, VarId,
};
use crate::hfset::HFSet;

/// One corpus line: a classification label and the sentence itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub label: &'static str,
    pub formula: Formula,
}

impl CorpusEntry {
    fn of(formula: Formula) -> CorpusEntry {
        CorpusEntry {
            label: classify(&formula).label(),
            formula,
        }
    }
}

// ---------------------------------------------------------------------------
// Random building blocks
// ---------------------------------------------------------------------------

/// A random hereditarily finite set of rank at most `rank`, biased small so
/// bounded quantifiers stay cheap to expand.
pub fn random_set(rng: &mut impl Rng, rank: usize) -> HFSet {
    if rank == 0 {
        return HFSet::empty();
    }
    let n = match rng.gen_range(0..10) {
        0..=3 => 0,
        4..=6 => 1,
        7..=8 => 2,
        _ => 3,
    };
    HFSet::new((0..n).map(|_| random_set(rng, rank - 1)))
}

fn random_term(rng: &mut impl Rng, scope: &[VarId], rank: usize) -> Term {
    if !scope.is_empty() && rng.gen_bool(0.5) {
        Term::Var(scope[rng.gen_range(0..scope.len())])
    } else {
        Term::Const(random_set(rng, rank))
    }
}

fn random_atom(rng: &mut impl Rng, scope: &[VarId], rank: usize) -> Formula {
    let a = random_term(rng, scope, rank);
    let b = random_term(rng, scope, rank);
    match rng.gen_range(0..20) {
        0 => Formula::Bottom,
        1..=10 => Formula::Mem(a, b),
        _ => Formula::Eq(a, b),
    }
}

fn random_delta0_inner(
    rng: &mut impl Rng,
    depth: u32,
    rank: usize,
    scope: &mut Vec<VarId>,
    next_var: &mut VarId,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atom(rng, scope, rank);
    }
    match rng.gen_range(0..100) {
        0..=29 => {
            let n = rng.gen_range(2..=3);
            Formula::conj(
                (0..n)
                    .map(|_| random_delta0_inner(rng, depth - 1, rank, scope, next_var))
                    .collect(),
            )
        }
        30..=54 => {
            let n = rng.gen_range(2..=3);
            Formula::disj(
                (0..n)
                    .map(|_| random_delta0_inner(rng, depth - 1, rank, scope, next_var))
                    .collect(),
            )
        }
        55..=69 => {
            let p = random_delta0_inner(rng, depth - 1, rank, scope, next_var);
            let q = random_delta0_inner(rng, depth - 1, rank, scope, next_var);
            Formula::imp(p, q)
        }
        70..=84 => {
            let x = *next_var;
            *next_var += 1;
            let bound = random_term(rng, scope, rank);
            scope.push(x);
            let body = random_delta0_inner(rng, depth - 1, rank, scope, next_var);
            scope.pop();
            bforall(x, bound, body)
        }
        _ => {
            let x = *next_var;
            *next_var += 1;
            let bound = random_term(rng, scope, rank);
            scope.push(x);
            let body = random_delta0_inner(rng, depth - 1, rank, scope, next_var);
            scope.pop();
            bexists(x, bound, body)
        }
    }
}

/// A closed random sentence with every quantifier bounded (single-variable
/// blocks only).
pub fn random_delta0(rng: &mut impl Rng, depth: u32, rank: usize) -> Formula {
    let mut scope = Vec::new();
    let mut next_var = 0;
    random_delta0_inner(rng, depth, rank, &mut scope, &mut next_var)
}

/// As `random_delta0`, but with the given variables free in the result
/// (each free variable is offered wherever a term is drawn).
pub fn random_delta0_with_scope(
    rng: &mut impl Rng,
    depth: u32,
    rank: usize,
    scope: &[VarId],
) -> Formula {
    let mut scope = scope.to_vec();
    let mut next_var = scope.iter().max().map_or(0, |m| m + 1);
    random_delta0_inner(rng, depth, rank, &mut scope, &mut next_var)
}

/// A closed random existential sentence: one unbounded quantifier block
/// (width 1, occasionally 2) over a bounded matrix.
pub fn random_sigma1(rng: &mut impl Rng, depth: u32, rank: usize) -> Formula {
    let width = if rng.gen_bool(0.2) { 2 } else { 1 };
    let vars: Vec<VarId> = (0..width).collect();
    let mut scope = vars.clone();
    let mut next_var = width as VarId;
    let matrix = random_delta0_inner(rng, depth, rank, &mut scope, &mut next_var);
    Formula::Exists(Context::new(vars), Box::new(matrix))
}

/// A Δ₀/Σ₁ mix, weighted toward the bounded fragment.
pub fn random_sentence(rng: &mut impl Rng, depth: u32, rank: usize) -> Formula {
    if rng.gen_bool(0.7) {
        random_delta0(rng, depth, rank)
    } else {
        random_sigma1(rng, depth, rank)
    }
}

// ---------------------------------------------------------------------------
// Corpus assembly
// ---------------------------------------------------------------------------

/// Small fixed sentences covering every connective: bottom, membership,
/// equality, implication, conjunction, disjunction, existential, universal.
fn cover_block() -> Vec<Formula> {
    let e = HFSet::empty;
    let s = || HFSet::singleton(HFSet::empty());
    vec![
        Formula::Eq(Term::Const(e()), Term::Const(e())),
        Formula::Mem(Term::Const(e()), Term::Const(s())),
        Formula::imp(Formula::Bottom, Formula::Eq(Term::Const(e()), Term::Const(e()))),
        Formula::conj(vec![
            Formula::Eq(Term::Const(e()), Term::Const(e())),
            Formula::Mem(Term::Const(e()), Term::Const(s())),
        ]),
        Formula::disj(vec![
            Formula::Bottom,
            Formula::Eq(Term::Const(e()), Term::Const(e())),
        ]),
        bexists(0, Term::Const(s()), Formula::Eq(Term::Var(0), Term::Const(e()))),
        bforall(0, Term::Const(s()), Formula::Eq(Term::Var(0), Term::Var(0))),
        Formula::Exists(
            Context::one(0),
            Box::new(Formula::Eq(Term::Var(0), Term::Const(e()))),
        ),
    ]
}

/// Builds a labelled corpus: the connective cover block first, then seeded
/// random Δ₀/Σ₁ sentences up to `count` lines in total (never fewer than
/// the cover block itself).
pub fn generate_corpus(seed: u64, depth: u32, rank: usize, count: usize) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries: Vec<CorpusEntry> = cover_block().into_iter().map(CorpusEntry::of).collect();
    while entries.len() < count {
        entries.push(CorpusEntry::of(random_sentence(&mut rng, depth, rank)));
    }
    entries
}

/// The corpus file body: one `<label> <sentence>` line per entry.
pub fn corpus_text(entries: &[CorpusEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(e.label);
        out.push(' ');
        out.push_str(&e.formula.to_string());
        out.push('\n');
    }
    out
}

/// Splits one corpus line back into its label and sentence.
pub fn parse_corpus_line(line: &str) -> Result<(String, Formula), FormulaError> {
    let (label, rest) = line.split_once(' ').unwrap_or(("", line));
    Ok((label.to_string(), parse_formula(rest)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::classify;

    #[test]
    fn corpora_are_deterministic() {
        let a = corpus_text(&generate_corpus(0, 2, 2, 64));
        let b = corpus_text(&generate_corpus(0, 2, 2, 64));
        assert_eq!(a, b);
        let c = corpus_text(&generate_corpus(1, 2, 2, 64));
        assert_ne!(a, c, "different seeds give different corpora");
    }

    #[test]
    fn labels_agree_with_classification_after_a_round_trip() {
        let entries = generate_corpus(7, 3, 2, 80);
        let text = corpus_text(&entries);
        for line in text.lines() {
            let (label, f) = parse_corpus_line(line).expect("line parses");
            assert_eq!(classify(&f).label(), label, "line: {line}");
        }
    }

    #[test]
    fn every_connective_appears() {
        let entries = generate_corpus(0, 2, 2, 8);
        let text = corpus_text(&entries);
        for op in ["(bot)", "(mem ", "(eq ", "(imp ", "(and ", "(or ", "(ex ", "(all "] {
            assert!(text.contains(op), "missing connective {op}");
        }
    }

    #[test]
    fn sentences_are_closed_and_in_fragment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = random_delta0(&mut rng, 3, 2);
            assert!(d.free_vars().is_empty(), "open sentence: {d}");
            assert!(crate::formula::is_delta0(&d), "not bounded: {d}");
            let s = random_sigma1(&mut rng, 2, 2);
            assert!(s.free_vars().is_empty(), "open sentence: {s}");
            assert!(
                matches!(
                    classify(&s).fragment,
                    crate::formula::Fragment::Delta0 | crate::formula::Fragment::Sigma1
                ),
                "outside the target fragments: {s}"
            );
        }
    }
}

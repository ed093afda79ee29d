//! Textual s-expression syntax for realiser programs.
//!
//! Program terms print and parse as s-expressions so fixtures and CLI
//! invocations can carry them as plain text:
//!
//! ```text
//! (lam (pair (var 0) (ord w*2+1)))
//! (build-iso (fst (var 0)) (snd (var 0)))
//! (synth (x0 x1) (fml (mem x0 x1)) (var 0))
//! (realizer (lam (var 0)) "code(0; ; 1)")
//! ```
//!
//! Code and tape constants ride inside quoted strings (their own literal
//! notations use parentheses and semicolons); formulas embed directly as one
//! balanced parenthesis group; ordinals appear bare (their notation never
//! contains whitespace).

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::code::parse_code;
use crate::formula::{parse_formula, VarId};
use crate::ordinal::{parse_ordinal, Ordinal};
use crate::realizer::{PrimOp, RTerm, Realizer};
use crate::tape::{parse_tape, BitTape};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at byte {pos}: {msg}")]
pub struct RSyntaxError {
    pub pos: usize,
    pub msg: String,
}

type Result<T> = std::result::Result<T, RSyntaxError>;

// ---------------------------------------------------------------------------
// Primitive-name table (payload-free primitives only).
// ---------------------------------------------------------------------------

static PLAIN_PRIMS: &[(&str, PrimOp)] = &[
    ("build-iso", PrimOp::BuildIso),
    ("iso-test", PrimOp::IsoTest),
    ("decode-match", PrimOp::DecodeMatch),
    ("at-node", PrimOp::AtNode),
    ("first-child", PrimOp::FirstChild),
    ("minimal-child", PrimOp::MinimalChild),
    ("raw-before", PrimOp::RawBefore),
    ("order-code", PrimOp::OrderCode),
    ("singleton-code", PrimOp::SingletonCode),
    ("pair-set-code", PrimOp::PairSetCode),
    ("adjoin-code", PrimOp::AdjoinCode),
    ("kpair-code", PrimOp::KPairCode),
    ("seq-code", PrimOp::SeqCode),
    ("union-code", PrimOp::UnionCode),
    ("canon-code", PrimOp::CanonCode),
    ("vn-code", PrimOp::VnCode),
    ("ord-of-vn", PrimOp::OrdOfVn),
    ("essdom-list", PrimOp::EssdomList),
    ("child-list", PrimOp::ChildList),
    ("univ-codes", PrimOp::UnivCodes),
    ("lookup", PrimOp::Lookup),
    ("fold", PrimOp::Fold),
    ("tape-member", PrimOp::TapeMember),
    ("tape-bit", PrimOp::TapeBit),
    ("eval-truth", PrimOp::EvalTruth),
];

fn plain_name(op: &PrimOp) -> Option<&'static str> {
    PLAIN_PRIMS
        .iter()
        .find(|(_, p)| p == op)
        .map(|(name, _)| *name)
}

fn plain_by_name(name: &str) -> Option<PrimOp> {
    PLAIN_PRIMS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| p.clone())
}

// ---------------------------------------------------------------------------
// Printing.
// ---------------------------------------------------------------------------

impl fmt::Display for RTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RTerm::ConstCode(c) => write!(f, "(code \"{c}\")"),
            RTerm::ConstOrd(o) => write!(f, "(ord {o})"),
            RTerm::ConstTape(t) => write_tape(f, t),
            RTerm::ConstFml(phi) => write!(f, "(fml {phi})"),
            RTerm::Param => write!(f, "(param)"),
            RTerm::Var(n) => write!(f, "(var {n})"),
            RTerm::Lam(b) => write!(f, "(lam {b})"),
            RTerm::App(a, b) => write!(f, "(app {a} {b})"),
            RTerm::Pair(a, b) => write!(f, "(pair {a} {b})"),
            RTerm::Fst(a) => write!(f, "(fst {a})"),
            RTerm::Snd(a) => write!(f, "(snd {a})"),
            RTerm::List(items) => {
                write!(f, "(list")?;
                for t in items {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
            RTerm::CaseOrd {
                scrut,
                arms,
                default,
            } => {
                write!(f, "(case-ord {scrut}")?;
                for (o, t) in arms {
                    write!(f, " ({o} {t})")?;
                }
                if let Some(d) = default {
                    write!(f, " (else {d})")?;
                }
                write!(f, ")")
            }
            RTerm::CaseMod { scrut, arms } => {
                write!(f, "(case-mod {scrut}")?;
                for t in arms {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
            RTerm::Prim(op, args) => {
                match op {
                    PrimOp::Synth { vars } => {
                        write!(f, "(synth ")?;
                        write_vars(f, vars)?;
                    }
                    PrimOp::SynthSeq { vars } => {
                        write!(f, "(synth-seq ")?;
                        write_vars(f, vars)?;
                    }
                    PrimOp::Induct { var } => write!(f, "(induct x{var}")?,
                    PrimOp::Collect { xvar, yvar } => {
                        write!(f, "(collect x{xvar} x{yvar}")?
                    }
                    PrimOp::Separate { var } => write!(f, "(separate x{var}")?,
                    other => {
                        let name = plain_name(other).expect("every payload-free primitive is in the name table");
                        write!(f, "({name}")?;
                    }
                }
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_vars(f: &mut fmt::Formatter<'_>, vars: &[VarId]) -> fmt::Result {
    write!(f, "(")?;
    for (i, v) in vars.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "x{v}")?;
    }
    write!(f, ")")
}

fn write_tape(f: &mut fmt::Formatter<'_>, t: &BitTape) -> fmt::Result {
    match t.to_token_string() {
        Ok(lit) => write!(f, "(tape \"{lit}\")"),
        Err(_) => {
            // Gap structure outside the token language: list the raw cells.
            write!(f, "(tape-raw {} (ones", t.length())?;
            for o in t.ones() {
                write!(f, " {o}")?;
            }
            write!(f, ") (rows")?;
            for r in t.blocks() {
                write!(f, " {r}")?;
            }
            write!(f, "))")
        }
    }
}

impl fmt::Display for Realizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(realizer {} \"{}\")", self.program, self.parameter)
    }
}

// ---------------------------------------------------------------------------
// Parsing.
// ---------------------------------------------------------------------------

/// Parses a program term, requiring the whole input to be consumed.
pub fn parse_rterm(s: &str) -> Result<RTerm> {
    let mut p = P { s, pos: 0 };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != s.len() {
        return Err(p.err("trailing input after term"));
    }
    Ok(t)
}

/// Parses a realiser: either `(realizer TERM "code(...)")` or a bare
/// program term, which gets the empty-set code as parameter.
pub fn parse_realizer(s: &str) -> Result<Realizer> {
    let mut p = P { s, pos: 0 };
    p.skip_ws();
    let save = p.pos;
    if p.looking_at_form("realizer") {
        p.expect(b'(')?;
        p.skip_ws();
        let _ = p.word();
        let program = p.term()?;
        p.skip_ws();
        let code_pos = p.pos;
        let lit = p.quoted()?;
        let parameter = parse_code(&lit).map_err(|e| RSyntaxError {
            pos: code_pos,
            msg: format!("bad parameter code: {e}"),
        })?;
        p.skip_ws();
        p.expect(b')')?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input after realizer"));
        }
        return Ok(Realizer {
            program,
            parameter,
        });
    }
    p.pos = save;
    let t = p.term()?;
    p.skip_ws();
    if p.pos != s.len() {
        return Err(p.err("trailing input after term"));
    }
    Ok(Realizer::new(t))
}

struct P<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> P<'a> {
    fn err(&self, msg: &str) -> RSyntaxError {
        RSyntaxError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self
            .s
            .as_bytes()
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.as_bytes().get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", b as char)))
        }
    }

    /// True when the input at the cursor is `(` followed by `head`.
    fn looking_at_form(&mut self, head: &str) -> bool {
        let save = self.pos;
        self.skip_ws();
        let mut ok = false;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            self.skip_ws();
            let w = self.word();
            ok = w == head;
        }
        self.pos = save;
        ok
    }

    /// Reads a head word: letters, digits, `-`, `_`.
    fn word(&mut self) -> &'a str {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
        {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    /// Reads an ordinal token: no whitespace, parentheses balanced within
    /// the token, stopping at whitespace or `)` at depth 0.
    fn ordinal(&mut self) -> Result<Ordinal> {
        self.skip_ws();
        let start = self.pos;
        let mut depth = 0u32;
        while let Some(b) = self.peek() {
            match b {
                b'(' => {
                    depth += 1;
                    self.pos += 1;
                }
                b')' if depth == 0 => break,
                b')' => {
                    depth -= 1;
                    self.pos += 1;
                }
                b if b.is_ascii_whitespace() && depth == 0 => break,
                _ => self.pos += 1,
            }
        }
        if self.pos == start {
            return Err(self.err("expected an ordinal"));
        }
        parse_ordinal(&self.s[start..self.pos]).map_err(|e| RSyntaxError {
            pos: start,
            msg: format!("bad ordinal: {e}"),
        })
    }

    /// Reads a `"..."` string (the quoted literals never contain quotes).
    fn quoted(&mut self) -> Result<String> {
        self.skip_ws();
        if self.peek() != Some(b'"') {
            return Err(self.err("expected a quoted literal"));
        }
        self.pos += 1;
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b == b'"' {
                let out = self.s[start..self.pos].to_string();
                self.pos += 1;
                return Ok(out);
            }
            self.pos += 1;
        }
        Err(self.err("unterminated quoted literal"))
    }

    /// Captures one balanced `(...)` group verbatim, parens included.
    fn balanced_group(&mut self) -> Result<&'a str> {
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Err(self.err("expected a parenthesised group"));
        }
        let start = self.pos;
        let mut depth = 0u32;
        while let Some(b) = self.peek() {
            match b {
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return Ok(&self.s[start..self.pos]);
                    }
                }
                _ => {}
            }
            self.pos += 1;
        }
        Err(self.err("unbalanced parentheses"))
    }

    /// Reads an `xN` variable token.
    fn varid(&mut self) -> Result<VarId> {
        self.skip_ws();
        let start = self.pos;
        let w = self.word();
        let digits = w.strip_prefix('x').ok_or_else(|| RSyntaxError {
            pos: start,
            msg: "expected a variable like x0".to_string(),
        })?;
        digits.parse().map_err(|_| RSyntaxError {
            pos: start,
            msg: "expected a variable like x0".to_string(),
        })
    }

    /// Reads `(xA xB ...)`.
    fn var_list(&mut self) -> Result<Vec<VarId>> {
        self.expect(b'(')?;
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(out);
            }
            out.push(self.varid()?);
        }
    }

    /// Parses sub-terms until the enclosing `)`, consuming it.
    fn terms_until_close(&mut self) -> Result<Vec<RTerm>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(_) => out.push(self.term()?),
                None => return Err(self.err("unterminated form")),
            }
        }
    }

    fn term(&mut self) -> Result<RTerm> {
        self.expect(b'(')?;
        self.skip_ws();
        let head_pos = self.pos;
        let head = self.word().to_string();
        match head.as_str() {
            "param" => {
                self.expect(b')')?;
                Ok(RTerm::Param)
            }
            "var" => {
                self.skip_ws();
                let at = self.pos;
                let n: u32 = self.word().parse().map_err(|_| RSyntaxError {
                    pos: at,
                    msg: "expected a variable index".to_string(),
                })?;
                self.expect(b')')?;
                Ok(RTerm::Var(n))
            }
            "lam" => {
                let b = self.term()?;
                self.expect(b')')?;
                Ok(RTerm::lam(b))
            }
            "app" => {
                let a = self.term()?;
                let b = self.term()?;
                self.expect(b')')?;
                Ok(RTerm::app(a, b))
            }
            "pair" => {
                let a = self.term()?;
                let b = self.term()?;
                self.expect(b')')?;
                Ok(RTerm::pair(a, b))
            }
            "fst" => {
                let a = self.term()?;
                self.expect(b')')?;
                Ok(RTerm::fst(a))
            }
            "snd" => {
                let a = self.term()?;
                self.expect(b')')?;
                Ok(RTerm::snd(a))
            }
            "list" => Ok(RTerm::List(self.terms_until_close()?)),
            "ord" => {
                let o = self.ordinal()?;
                self.expect(b')')?;
                Ok(RTerm::ConstOrd(o))
            }
            "code" => {
                let at = self.pos;
                let lit = self.quoted()?;
                let c = parse_code(&lit).map_err(|e| RSyntaxError {
                    pos: at,
                    msg: format!("bad code literal: {e}"),
                })?;
                self.expect(b')')?;
                Ok(RTerm::ConstCode(c))
            }
            "tape" => {
                let at = self.pos;
                let lit = self.quoted()?;
                let t = parse_tape(&lit).map_err(|e| RSyntaxError {
                    pos: at,
                    msg: format!("bad tape literal: {e}"),
                })?;
                self.expect(b')')?;
                Ok(RTerm::ConstTape(t))
            }
            "tape-raw" => {
                let len = self.ordinal()?;
                self.expect(b'(')?;
                self.skip_ws();
                if self.word() != "ones" {
                    return Err(self.err("expected (ones ...)"));
                }
                let mut tape = BitTape::new();
                loop {
                    self.skip_ws();
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    tape.set_one(self.ordinal()?);
                }
                self.expect(b'(')?;
                self.skip_ws();
                if self.word() != "rows" {
                    return Err(self.err("expected (rows ...)"));
                }
                loop {
                    self.skip_ws();
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    tape.set_block(self.ordinal()?);
                }
                tape.pad_to(&len);
                self.expect(b')')?;
                Ok(RTerm::ConstTape(tape))
            }
            "fml" => {
                let at = self.pos;
                let group = self.balanced_group()?;
                let phi = parse_formula(group).map_err(|e| RSyntaxError {
                    pos: at,
                    msg: format!("bad formula: {e}"),
                })?;
                self.expect(b')')?;
                Ok(RTerm::ConstFml(phi))
            }
            "case-ord" => {
                let scrut = self.term()?;
                let mut arms = Vec::new();
                let mut default = None;
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'(') => {
                            if self.looking_at_form("else") {
                                self.expect(b'(')?;
                                self.skip_ws();
                                let _ = self.word();
                                let d = self.term()?;
                                self.expect(b')')?;
                                default = Some(Rc::new(d));
                            } else {
                                self.expect(b'(')?;
                                let label = self.ordinal()?;
                                let body = self.term()?;
                                self.expect(b')')?;
                                arms.push((label, body));
                            }
                        }
                        _ => return Err(self.err("expected a case arm")),
                    }
                }
                Ok(RTerm::CaseOrd {
                    scrut: Rc::new(scrut),
                    arms,
                    default,
                })
            }
            "case-mod" => {
                let scrut = self.term()?;
                let arms = self.terms_until_close()?;
                Ok(RTerm::CaseMod {
                    scrut: Rc::new(scrut),
                    arms,
                })
            }
            "synth" => {
                let vars = self.var_list()?;
                let args = self.terms_until_close()?;
                Ok(RTerm::Prim(PrimOp::Synth { vars }, args))
            }
            "synth-seq" => {
                let vars = self.var_list()?;
                let args = self.terms_until_close()?;
                Ok(RTerm::Prim(PrimOp::SynthSeq { vars }, args))
            }
            "induct" => {
                let var = self.varid()?;
                let args = self.terms_until_close()?;
                Ok(RTerm::Prim(PrimOp::Induct { var }, args))
            }
            "collect" => {
                let xvar = self.varid()?;
                let yvar = self.varid()?;
                let args = self.terms_until_close()?;
                Ok(RTerm::Prim(PrimOp::Collect { xvar, yvar }, args))
            }
            "separate" => {
                let var = self.varid()?;
                let args = self.terms_until_close()?;
                Ok(RTerm::Prim(PrimOp::Separate { var }, args))
            }
            other => match plain_by_name(other) {
                Some(op) => Ok(RTerm::Prim(op, self.terms_until_close()?)),
                None => Err(RSyntaxError {
                    pos: head_pos,
                    msg: format!("unknown form '{other}'"),
                }),
            },
        }
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_code_scrambled;
    use crate::hfset::HFSet;
    use crate::realizer::eq_program;

    fn rt(t: &RTerm) {
        let text = t.to_string();
        let back = parse_rterm(&text)
            .unwrap_or_else(|e| panic!("reparse of {text} failed: {e}"));
        assert_eq!(&back, t, "round trip changed {text}");
    }

    #[test]
    fn every_constructor_round_trips() {
        let v2 = HFSet::vn(2);
        let mut tape = BitTape::new();
        tape.set_one(Ordinal::nat(1));
        tape.set_block(Ordinal::omega());
        let samples = vec![
            RTerm::Param,
            RTerm::Var(3),
            RTerm::lam(RTerm::Var(0)),
            RTerm::app(RTerm::lam(RTerm::Var(0)), RTerm::Param),
            RTerm::pair(RTerm::ord(0), RTerm::ord(1)),
            RTerm::fst(RTerm::Param),
            RTerm::snd(RTerm::Param),
            RTerm::List(vec![RTerm::ord(2), RTerm::Param]),
            RTerm::ConstOrd(
                Ordinal::w_pow(Ordinal::omega().add(&Ordinal::nat(1))).mul(&Ordinal::nat(2)),
            ),
            RTerm::ConstCode(build_code_scrambled(&v2, 7)),
            RTerm::ConstTape(tape),
            RTerm::ConstFml(parse_formula("(all (x0) (imp (mem x0 {{}}) (eq x0 {})))").unwrap()),
            RTerm::CaseOrd {
                scrut: Rc::new(RTerm::Var(0)),
                arms: vec![
                    (Ordinal::zero(), RTerm::ord(5)),
                    (Ordinal::omega(), RTerm::Param),
                ],
                default: Some(Rc::new(RTerm::ord(9))),
            },
            RTerm::CaseOrd {
                scrut: Rc::new(RTerm::Var(0)),
                arms: vec![(Ordinal::nat(1), RTerm::ord(0))],
                default: None,
            },
            RTerm::CaseMod {
                scrut: Rc::new(RTerm::Var(0)),
                arms: vec![RTerm::ord(0), RTerm::ord(1)],
            },
        ];
        for t in &samples {
            rt(t);
        }
    }

    #[test]
    fn every_primitive_round_trips() {
        for (_, op) in PLAIN_PRIMS {
            rt(&RTerm::Prim(op.clone(), vec![RTerm::Var(0), RTerm::Var(1)]));
        }
        rt(&RTerm::Prim(
            PrimOp::Synth { vars: vec![0, 2] },
            vec![RTerm::ConstFml(parse_formula("(eq x0 x2)").unwrap()), RTerm::Var(0)],
        ));
        rt(&RTerm::Prim(
            PrimOp::SynthSeq { vars: vec![1, 3] },
            vec![RTerm::ConstFml(parse_formula("(eq x1 x3)").unwrap()), RTerm::Var(0)],
        ));
        rt(&RTerm::Prim(
            PrimOp::Induct { var: 4 },
            vec![RTerm::ConstFml(parse_formula("(eq x4 x4)").unwrap())],
        ));
        rt(&RTerm::Prim(
            PrimOp::Collect { xvar: 0, yvar: 1 },
            vec![RTerm::ConstFml(parse_formula("(mem x0 x1)").unwrap())],
        ));
        rt(&RTerm::Prim(
            PrimOp::Separate { var: 0 },
            vec![RTerm::ConstFml(parse_formula("(eq x0 {})").unwrap()), RTerm::Param],
        ));
    }

    #[test]
    fn handwritten_fixture_parses_to_the_expected_term() {
        let text = "
            (lam
              (case-ord (fst (var 0))
                (0 (pair (ord 0) (var 0)))
                (w (param))
                (else (build-iso (fst (var 0)) (snd (var 0))))))";
        let t = parse_rterm(text).unwrap();
        let RTerm::Lam(body) = &t else {
            panic!("expected a lambda");
        };
        let RTerm::CaseOrd { arms, default, .. } = body.as_ref() else {
            panic!("expected a case");
        };
        assert_eq!(arms.len(), 2);
        assert_eq!(arms[1].0, Ordinal::omega());
        assert!(default.is_some());
        rt(&t);
    }

    #[test]
    fn realizer_form_carries_its_parameter() {
        let r = Realizer {
            program: eq_program(),
            parameter: build_code_scrambled(&HFSet::vn(1), 3),
        };
        let text = r.to_string();
        let back = parse_realizer(&text).unwrap();
        assert_eq!(back, r);
        // A bare program is accepted and gets the default parameter.
        let bare = parse_realizer("(lam (var 0))").unwrap();
        assert_eq!(bare, Realizer::new(RTerm::lam(RTerm::Var(0))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_rterm("(lam (vr 0))").unwrap_err();
        assert_eq!(e.pos, 6);
        assert!(e.msg.contains("unknown form"));
        let e = parse_rterm("(ord wo)").unwrap_err();
        assert!(e.msg.contains("bad ordinal"));
        let e = parse_rterm("(lam (var 0)) junk").unwrap_err();
        assert!(e.msg.contains("trailing"));
        assert!(parse_rterm("(lam (var 0)").is_err());
        assert!(parse_rterm("(code \"code(0; ; 1)\"").is_err());
        assert!(parse_rterm("(fml (eq {} {})) ").is_ok());
    }
}

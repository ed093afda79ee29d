//! A transfinite machine simulator: four ordinal-length tapes, classical
//! finite-state programs, inferior-limit behavior at limit stages.
//!
//! Successor stages behave exactly like an ordinary multi-tape Turing
//! machine. At a limit stage every cell takes the inferior limit of its
//! earlier values, every head the inferior limit of its positions, and the
//! state the inferior limit of the state indices. Moving left from cell 0
//! stays at 0; moving left from a limit cell jumps to 0.
//!
//! Limit stages are crossed symbolically rather than by transfinite
//! iteration: inside each omega-block the simulator looks for one of two
//! certificates of eventually-stable behavior — an exact configuration
//! repeat (the tail is periodic, so the inferior limit is the pointwise
//! minimum over the cycle), or a change-free window that repeats a state
//! while heads only advance over all-zero territory (the tail replays the
//! window shifted, so advancing heads limit out to the next limit ordinal
//! and everything else is frozen). Anything unrecognized is reported as
//! out-of-budget, never guessed.
//!
//! Two shipped programs — a membership-bit tester and a sequence-append
//! copier — are checked cell-for-cell against the host tape codec by
//! `otm_reference_suite`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::ordinal::{Ordinal, OrdinalBound};
use crate::tape::{
    encode_lowpair, encode_ordset, encode_seq, seq_append, tape_member, BitTape, LowPair,
    OrdSet,
};

pub const TAPE_COUNT: usize = 4;
pub const TAPE_INPUT: usize = 0;
pub const TAPE_PARAM: usize = 1;
pub const TAPE_SCRATCH: usize = 2;
pub const TAPE_OUTPUT: usize = 3;

pub type StateId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OtmError {
    #[error("transitions {first} and {second} for state {state} can read the same bits")]
    Ambiguous { state: StateId, first: usize, second: usize },
    #[error("state {0} is halting but has an outgoing transition")]
    HaltingOutgoing(StateId),
    #[error("no start state declared")]
    NoStart,
    #[error("program line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no transition from state {state} reading {read}")]
    MissingTransition { state: StateId, read: String },
    #[error("a written 0 cannot mask a 1 from the initial tape content")]
    UnrepresentableTape,
}

type Result<T> = std::result::Result<T, OtmError>;

// ---------------------------------------------------------------------------
// Programs.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Move {
    Left,
    Right,
    Stay,
}

/// One transition: fires in `state` when every tape's read pattern matches
/// (`None` matches either bit). Writes `None` leave the cell unchanged.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub state: StateId,
    pub read: [Option<bool>; TAPE_COUNT],
    pub write: [Option<bool>; TAPE_COUNT],
    pub moves: [Move; TAPE_COUNT],
    pub next: StateId,
}

impl Transition {
    fn matches(&self, state: StateId, bits: &[bool; TAPE_COUNT]) -> bool {
        self.state == state
            && self
                .read
                .iter()
                .zip(bits.iter())
                .all(|(pat, b)| pat.is_none() || *pat == Some(*b))
    }

    fn overlaps(&self, other: &Transition) -> bool {
        self.state == other.state
            && self.read.iter().zip(other.read.iter()).all(|(a, b)| {
                match (a, b) {
                    (Some(x), Some(y)) => x == y,
                    _ => true,
                }
            })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OtmProgram {
    start: StateId,
    halting: BTreeSet<StateId>,
    transitions: Vec<Transition>,
}

impl OtmProgram {
    /// Builds a program, rejecting nondeterminism (two transitions of one
    /// state whose read patterns can both match) and transitions out of
    /// halting states.
    pub fn new(
        start: StateId,
        halting: BTreeSet<StateId>,
        transitions: Vec<Transition>,
    ) -> Result<Self> {
        for (i, t) in transitions.iter().enumerate() {
            if halting.contains(&t.state) {
                return Err(OtmError::HaltingOutgoing(t.state));
            }
            for (j, u) in transitions.iter().enumerate().take(i) {
                if t.overlaps(u) {
                    return Err(OtmError::Ambiguous {
                        state: t.state,
                        first: j,
                        second: i,
                    });
                }
            }
        }
        Ok(OtmProgram {
            start,
            halting,
            transitions,
        })
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn is_halting(&self, s: StateId) -> bool {
        self.halting.contains(&s)
    }

    /// Every state mentioned anywhere in the program.
    pub fn states(&self) -> BTreeSet<StateId> {
        let mut out: BTreeSet<StateId> = self.halting.clone();
        out.insert(self.start);
        for t in &self.transitions {
            out.insert(t.state);
            out.insert(t.next);
        }
        out
    }

    fn find(&self, state: StateId, bits: &[bool; TAPE_COUNT]) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.matches(state, bits))
    }
}

// ---------------------------------------------------------------------------
// Program text format: `start N`, `halt N`, and one transition per line as
//   state READ -> WRITE MOVES next
// with READ/WRITE four chars from {0,1,_} and MOVES four from {L,R,S},
// one field position per tape (input, parameter, scratch, output).
// ---------------------------------------------------------------------------

pub fn parse_program(text: &str) -> Result<OtmProgram> {
    let mut start: Option<StateId> = None;
    let mut halting = BTreeSet::new();
    let mut transitions = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let err = |msg: &str| OtmError::Parse {
            line,
            msg: msg.into(),
        };
        let state_num = |s: &str| {
            s.parse::<StateId>().map_err(|_| OtmError::Parse {
                line,
                msg: format!("bad state number {s:?}"),
            })
        };
        match fields.as_slice() {
            ["start", n] => {
                if start.is_some() {
                    return Err(err("start declared twice"));
                }
                start = Some(state_num(n)?);
            }
            ["halt", n] => {
                halting.insert(state_num(n)?);
            }
            [st, read, "->", write, moves, next] => {
                transitions.push(Transition {
                    state: state_num(st)?,
                    read: parse_bits(read).ok_or_else(|| err("read field must be [01_]{4}"))?,
                    write: parse_bits(write)
                        .ok_or_else(|| err("write field must be [01_]{4}"))?,
                    moves: parse_moves(moves)
                        .ok_or_else(|| err("move field must be [LRS]{4}"))?,
                    next: state_num(next)?,
                });
            }
            _ => return Err(err("expected `start N`, `halt N`, or a transition")),
        }
    }
    OtmProgram::new(start.ok_or(OtmError::NoStart)?, halting, transitions)
}

fn parse_bits(s: &str) -> Option<[Option<bool>; TAPE_COUNT]> {
    let mut out = [None; TAPE_COUNT];
    if s.len() != TAPE_COUNT {
        return None;
    }
    for (i, c) in s.chars().enumerate() {
        out[i] = match c {
            '0' => Some(false),
            '1' => Some(true),
            '_' => None,
            _ => return None,
        };
    }
    Some(out)
}

fn parse_moves(s: &str) -> Option<[Move; TAPE_COUNT]> {
    let mut out = [Move::Stay; TAPE_COUNT];
    if s.len() != TAPE_COUNT {
        return None;
    }
    for (i, c) in s.chars().enumerate() {
        out[i] = match c {
            'L' => Move::Left,
            'R' => Move::Right,
            'S' => Move::Stay,
            _ => return None,
        };
    }
    Some(out)
}

impl fmt::Display for OtmProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start {}", self.start)?;
        for h in &self.halting {
            writeln!(f, "halt {h}")?;
        }
        for t in &self.transitions {
            let bits = |pats: &[Option<bool>; TAPE_COUNT]| -> String {
                pats.iter()
                    .map(|p| match p {
                        Some(false) => '0',
                        Some(true) => '1',
                        None => '_',
                    })
                    .collect()
            };
            let moves: String = t
                .moves
                .iter()
                .map(|m| match m {
                    Move::Left => 'L',
                    Move::Right => 'R',
                    Move::Stay => 'S',
                })
                .collect();
            writeln!(
                f,
                "{} {} -> {} {} {}",
                t.state,
                bits(&t.read),
                bits(&t.write),
                moves,
                t.next
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Configurations.
// ---------------------------------------------------------------------------

/// Total bit assignment for one tape: an immutable initial content plus a
/// canonical overlay of rewritten cells (entries always differ from the
/// initial bit). `high` is one past the largest cell ever written.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TapeView {
    base: BitTape,
    overlay: BTreeMap<Ordinal, bool>,
    high: Ordinal,
}

impl TapeView {
    pub fn from_tape(t: &BitTape) -> Self {
        TapeView {
            base: t.clone(),
            overlay: BTreeMap::new(),
            high: Ordinal::zero(),
        }
    }

    pub fn blank() -> Self {
        Self::from_tape(&BitTape::new())
    }

    pub fn bit(&self, p: &Ordinal) -> bool {
        match self.overlay.get(p) {
            Some(v) => *v,
            None => self.base.bit(p),
        }
    }

    /// Writes a bit; reports whether the cell's value changed.
    pub fn write(&mut self, p: &Ordinal, v: bool) -> bool {
        let bump = p.succ();
        if self.high < bump {
            self.high = bump;
        }
        let old = self.bit(p);
        if self.base.bit(p) == v {
            self.overlay.remove(p);
        } else {
            self.overlay.insert(p.clone(), v);
        }
        old != v
    }

    /// True if any cell at or beyond `from` holds a 1.
    fn one_at_or_beyond(&self, from: &Ordinal) -> bool {
        if self
            .overlay
            .range(from.clone()..)
            .any(|(_, v)| *v)
        {
            return true;
        }
        match self.base.next_one(from) {
            Some(p) => !matches!(self.overlay.get(&p), Some(false)),
            None => false,
        }
    }

    /// Renders the full content as a tape of length `high`. Fails when a
    /// written 0 masks a 1 coming from the initial content, which the
    /// symbolic tape cannot express.
    pub fn to_bittape(&self) -> Result<BitTape> {
        if self.overlay.values().any(|v| !*v) {
            return Err(OtmError::UnrepresentableTape);
        }
        let mut out = self.base.clone();
        for (p, _) in self.overlay.iter() {
            out.set_one(p.clone());
        }
        out.pad_to(&self.high);
        Ok(out)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MachineConfig {
    pub tapes: [TapeView; TAPE_COUNT],
    pub heads: [Ordinal; TAPE_COUNT],
    pub state: StateId,
    pub stage: Ordinal,
}

impl MachineConfig {
    pub fn initial(prog: &OtmProgram, input: &BitTape, param: &BitTape) -> Self {
        MachineConfig {
            tapes: [
                TapeView::from_tape(input),
                TapeView::from_tape(param),
                TapeView::blank(),
                TapeView::blank(),
            ],
            heads: std::array::from_fn(|_| Ordinal::zero()),
            state: prog.start(),
            stage: Ordinal::zero(),
        }
    }

    pub fn reads(&self) -> [bool; TAPE_COUNT] {
        std::array::from_fn(|i| self.tapes[i].bit(&self.heads[i]))
    }

    /// Equality key ignoring the stage and the high-water marks: state,
    /// head positions, and full tape contents.
    fn content_key(&self) -> ConfigKey {
        (
            self.state,
            self.heads.clone(),
            std::array::from_fn(|i| {
                self.tapes[i]
                    .overlay
                    .iter()
                    .map(|(p, v)| (p.clone(), *v))
                    .collect()
            }),
        )
    }
}

type ConfigKey = (StateId, [Ordinal; TAPE_COUNT], [Vec<(Ordinal, bool)>; TAPE_COUNT]);

impl fmt::Display for MachineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} state {} heads [", self.stage, self.state)?;
        for (i, h) in self.heads.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, "] writes [")?;
        for (i, t) in self.tapes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", t.overlay.len())?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// Successor steps.
// ---------------------------------------------------------------------------

pub enum StepResult {
    Next(MachineConfig),
    Halted,
}

fn move_head(h: &Ordinal, m: Move) -> Ordinal {
    match m {
        Move::Stay => h.clone(),
        Move::Right => h.succ(),
        // Left from 0 stays at 0; left from a limit jumps to 0.
        Move::Left => h.pred().unwrap_or_else(Ordinal::zero),
    }
}

/// One successor-stage transition. `Halted` when the configuration is
/// already in a halting state; an error when no transition matches.
pub fn otm_step(cfg: &MachineConfig, prog: &OtmProgram) -> Result<StepResult> {
    if prog.is_halting(cfg.state) {
        return Ok(StepResult::Halted);
    }
    let bits = cfg.reads();
    let t = prog.find(cfg.state, &bits).ok_or_else(|| {
        let read: String = bits.iter().map(|b| if *b { '1' } else { '0' }).collect();
        OtmError::MissingTransition {
            state: cfg.state,
            read,
        }
    })?;
    let mut next = cfg.clone();
    for i in 0..TAPE_COUNT {
        let v = t.write[i].unwrap_or(bits[i]);
        next.tapes[i].write(&cfg.heads[i], v);
        next.heads[i] = move_head(&cfg.heads[i], t.moves[i]);
    }
    next.state = t.next;
    next.stage = cfg.stage.succ();
    Ok(StepResult::Next(next))
}

// ---------------------------------------------------------------------------
// Limit stages.
// ---------------------------------------------------------------------------

/// A certificate describing the cofinal behavior below a limit stage.
#[derive(Clone, Debug)]
pub enum LimitHistory {
    /// The listed configurations repeat verbatim forever (first config
    /// follows the last again). Cell values, heads, and states are all
    /// eventually periodic, so each inferior limit is a minimum over the
    /// cycle.
    Periodic { cycle: Vec<MachineConfig> },
    /// The window's step pattern replays forever shifted along the tapes:
    /// first and last configuration share a state, no cell ever changes,
    /// and each head either stays put or climbs without bound over all-zero
    /// cells. Climbing heads limit out to the next limit ordinal; the rest
    /// of the configuration is frozen (wiggling heads take their window
    /// minimum, the inferior limit of a periodic position sequence).
    Advancing { window: Vec<MachineConfig> },
}

/// The configuration at a limit stage: pointwise inferior limits of cell
/// values, head positions, and state indices, as described by the history.
pub fn otm_limit(history: &LimitHistory, stage: Ordinal) -> MachineConfig {
    match history {
        LimitHistory::Periodic { cycle } => {
            assert!(!cycle.is_empty(), "empty cycle");
            let mut out = cycle[0].clone();
            out.state = cycle.iter().map(|c| c.state).min().unwrap();
            for i in 0..TAPE_COUNT {
                out.heads[i] = cycle
                    .iter()
                    .map(|c| c.heads[i].clone())
                    .min()
                    .unwrap();
                // A cell's value cycles; its inferior limit is the minimum,
                // i.e. it is 1 only if 1 in every configuration of the cycle.
                let mut touched: BTreeSet<Ordinal> = BTreeSet::new();
                for c in cycle {
                    touched.extend(c.tapes[i].overlay.keys().cloned());
                }
                for p in touched {
                    let v = cycle.iter().all(|c| c.tapes[i].bit(&p));
                    out.tapes[i].write(&p, v);
                }
                out.tapes[i].high = cycle
                    .iter()
                    .map(|c| c.tapes[i].high.clone())
                    .max()
                    .unwrap();
            }
            out.stage = stage;
            out
        }
        LimitHistory::Advancing { window } => {
            assert!(window.len() >= 2, "window needs its two endpoints");
            let first = &window[0];
            let last = window.last().unwrap();
            let mut out = first.clone();
            out.state = window.iter().map(|c| c.state).min().unwrap();
            for i in 0..TAPE_COUNT {
                let low = window
                    .iter()
                    .map(|c| c.heads[i].clone())
                    .min()
                    .unwrap();
                out.heads[i] = if last.heads[i] > first.heads[i] {
                    low.limit_part().add(&Ordinal::omega())
                } else {
                    low
                };
                out.tapes[i].high = window
                    .iter()
                    .map(|c| c.tapes[i].high.clone())
                    .max()
                    .unwrap();
            }
            out.stage = stage;
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Full runs.
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RunOutcome {
    Halted { output: BitTape, stage: Ordinal },
    OutOfBudget { stage: Ordinal },
    Crashed { stage: Ordinal, state: StateId, read: String },
}

impl RunOutcome {
    pub fn output(&self) -> Option<&BitTape> {
        match self {
            RunOutcome::Halted { output, .. } => Some(output),
            _ => None,
        }
    }
}

/// Caps on the symbolic search, distinct from the ordinal budget: how many
/// successor steps to attempt inside one omega-block before giving up, and
/// how many limit crossings to attempt in total.
#[derive(Clone, Copy, Debug)]
pub struct RunLimits {
    pub steps_per_block: u64,
    pub crossings: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            steps_per_block: 1 << 16,
            crossings: 512,
        }
    }
}

pub fn otm_run(
    prog: &OtmProgram,
    input: &BitTape,
    param: &BitTape,
    budget: &Ordinal,
) -> RunOutcome {
    otm_run_with(prog, input, param, budget, RunLimits::default(), |_| {})
}

/// Simulates up to the ordinal budget. `trace` sees every configuration:
/// the initial one, each successor result, and each limit-stage result.
pub fn otm_run_with(
    prog: &OtmProgram,
    input: &BitTape,
    param: &BitTape,
    budget: &Ordinal,
    limits: RunLimits,
    mut trace: impl FnMut(&MachineConfig),
) -> RunOutcome {
    let mut cfg = MachineConfig::initial(prog, input, param);
    trace(&cfg);
    let mut crossings = 0u64;
    loop {
        match run_block(prog, cfg, budget, limits, &mut trace) {
            BlockResult::Done(outcome) => return outcome,
            BlockResult::Crossed(next) => {
                cfg = next;
                trace(&cfg);
                crossings += 1;
                if prog.is_halting(cfg.state) {
                    // Unreachable under pure liminf semantics (the limit
                    // state was already visited cofinally), kept for safety.
                    let output = match cfg.tapes[TAPE_OUTPUT].to_bittape() {
                        Ok(t) => t,
                        Err(_) => BitTape::new(),
                    };
                    return RunOutcome::Halted {
                        output,
                        stage: cfg.stage,
                    };
                }
                if cfg.stage >= *budget {
                    return RunOutcome::OutOfBudget { stage: cfg.stage };
                }
                if crossings >= limits.crossings {
                    return RunOutcome::OutOfBudget { stage: cfg.stage };
                }
            }
        }
    }
}

enum BlockResult {
    Done(RunOutcome),
    Crossed(MachineConfig),
}

/// Runs successor steps inside one omega-block until halt, crash, budget
/// exhaustion, or a recognized limit certificate.
fn run_block(
    prog: &OtmProgram,
    start: MachineConfig,
    budget: &Ordinal,
    limits: RunLimits,
    trace: &mut impl FnMut(&MachineConfig),
) -> BlockResult {
    let block_base = start.stage.clone();
    let next_limit = block_base.limit_part().add(&Ordinal::omega());
    let mut history: Vec<MachineConfig> = vec![start];
    let mut seen: HashMap<ConfigKey, usize> = HashMap::new();
    seen.insert(history[0].content_key(), 0);
    // Advancing-window bookkeeping: for each state, the earliest offset at
    // which it occurred since the last content change, plus running head
    // minima since the block began (restarted on content changes).
    let mut state_first: HashMap<StateId, usize> = HashMap::new();
    state_first.insert(history[0].state, 0);
    let mut last_change = 0usize;

    loop {
        let cur = history.last().unwrap();
        if prog.is_halting(cur.state) {
            let output = match cur.tapes[TAPE_OUTPUT].to_bittape() {
                Ok(t) => t,
                Err(_) => BitTape::new(),
            };
            return BlockResult::Done(RunOutcome::Halted {
                output,
                stage: cur.stage.clone(),
            });
        }
        if cur.stage >= *budget {
            return BlockResult::Done(RunOutcome::OutOfBudget {
                stage: cur.stage.clone(),
            });
        }
        if history.len() as u64 > limits.steps_per_block {
            return BlockResult::Done(RunOutcome::OutOfBudget {
                stage: cur.stage.clone(),
            });
        }
        let next = match otm_step(cur, prog) {
            Ok(StepResult::Next(c)) => c,
            Ok(StepResult::Halted) => unreachable!("halting handled above"),
            Err(OtmError::MissingTransition { state, read }) => {
                return BlockResult::Done(RunOutcome::Crashed {
                    stage: cur.stage.clone(),
                    state,
                    read,
                });
            }
            Err(_) => unreachable!("otm_step only fails on missing transitions"),
        };
        trace(&next);
        let changed = (0..TAPE_COUNT).any(|i| next.tapes[i].overlay != cur.tapes[i].overlay);
        let offset = history.len();
        history.push(next);
        let cur = history.last().unwrap();
        if changed {
            last_change = offset;
            state_first.clear();
        }

        // Certificate 1: exact configuration repeat — the tail is periodic.
        let key = cur.content_key();
        if let Some(&i) = seen.get(&key) {
            // Budget check: the crossing lands exactly at the block's limit.
            if next_limit > *budget {
                return BlockResult::Done(RunOutcome::OutOfBudget {
                    stage: cur.stage.clone(),
                });
            }
            let cycle = history[i..offset + 1].to_vec();
            let limit_cfg = otm_limit(&LimitHistory::Periodic { cycle }, next_limit);
            return BlockResult::Crossed(limit_cfg);
        }
        seen.insert(key, offset);

        // Certificate 2: change-free advancing window.
        match state_first.get(&cur.state) {
            None => {
                state_first.insert(cur.state, offset);
            }
            Some(&i) if i >= last_change && offset - i <= 4096 => {
                let window = &history[i..offset + 1];
                let first = &window[0];
                let last = window.last().unwrap();
                let mut ok = true;
                let mut some_advance = false;
                for t in 0..TAPE_COUNT {
                    if last.heads[t] < first.heads[t] {
                        ok = false;
                        break;
                    }
                    if last.heads[t] > first.heads[t] {
                        some_advance = true;
                        let low = window.iter().map(|c| c.heads[t].clone()).min().unwrap();
                        if last.tapes[t].one_at_or_beyond(&low) {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && some_advance {
                    if next_limit > *budget {
                        return BlockResult::Done(RunOutcome::OutOfBudget {
                            stage: cur.stage.clone(),
                        });
                    }
                    let limit_cfg = otm_limit(
                        &LimitHistory::Advancing {
                            window: window.to_vec(),
                        },
                        next_limit,
                    );
                    return BlockResult::Crossed(limit_cfg);
                }
                // Keep the older snapshot when the heads moved backwards:
                // a later window may still qualify.
            }
            Some(_) => {
                state_first.insert(cur.state, offset);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shipped machine programs.
// ---------------------------------------------------------------------------

/// Membership-bit tester. Input: a set code. Parameter: the members of a
/// finite ordinal n written as bits (n ones from cell 0). Walks two input
/// cells per parameter one to reach cell 2n+1, then distinguishes a member
/// bit from the first terminator one by peeking the next cell (a member bit
/// is followed by 0, the terminator by its second 1). Output cell 0 gets
/// the membership bit.
pub const MEMBER_PROGRAM: &str = "\
# membership-bit tester: tapes are input, parameter, scratch, output
start 0
halt 9
0 _1__ -> ____ RRSS 1      # n not reached: advance input twice, parameter once
1 ____ -> ____ RSSS 0
0 _0__ -> ____ RSSS 2      # n reached at cell 2n: step to the member bit
2 0___ -> ___0 SSSS 9      # bit 0: not a member
2 1___ -> ____ RSSS 3      # bit 1: member bit or terminator start, peek ahead
3 0___ -> ___1 SSSS 9      # isolated one: genuine member bit
3 1___ -> ___0 SSSS 9      # adjacent ones: terminator, so out of range
";

/// Sequence-append copier. Input: a sequence code (pair codes closed by
/// 1111). Parameter: one pair code. Copies the existing pair codes to the
/// output, consumes the closer, copies the parameter's pair code, writes a
/// fresh closer, halts. Pair codes are tracked structurally: set code up to
/// its adjacent-ones terminator, then zeros, then the single index mark.
pub const APPEND_PROGRAM: &str = "\
# sequence-append copier: tapes are input, parameter, scratch, output
start 10
halt 40
10 1___ -> ____ RSSS 11    # closer begins: verify its remaining ones
10 0___ -> ___0 RSSR 12    # a pair code begins: copy it structurally
11 1___ -> ____ RSSS 15
15 1___ -> ____ RSSS 16
16 1___ -> ____ SSSS 22    # closer verified; append the parameter item
12 0___ -> ___0 RSSR 12    # set code, previous bit 0
12 1___ -> ___1 RSSR 13
13 0___ -> ___0 RSSR 12    # set code, previous bit 1
13 1___ -> ___1 RSSR 14    # adjacent ones: terminator copied
14 0___ -> ___0 RSSR 14    # index zeros
14 1___ -> ___1 RSSR 10    # index mark copied; next pair code or closer
22 _0__ -> ___0 SRSR 22    # same copier, reading the parameter tape
22 _1__ -> ___1 SRSR 23
23 _0__ -> ___0 SRSR 22
23 _1__ -> ___1 SRSR 24
24 _0__ -> ___0 SRSR 24
24 _1__ -> ___1 SRSR 30    # parameter pair code copied; write the closer
30 ____ -> ___1 SSSR 31
31 ____ -> ___1 SSSR 32
32 ____ -> ___1 SSSR 33
33 ____ -> ___1 SSSR 40
";

/// Copies one set code (through its adjacent-ones terminator) from the
/// input tape to the output tape, then halts.
pub const COPIER_PROGRAM: &str = "\
start 0
halt 9
0 0___ -> ___0 RSSR 0
0 1___ -> ___1 RSSR 1
1 0___ -> ___0 RSSR 0
1 1___ -> ___1 SSSS 9
";

/// Moves the input head right forever without writing: the head positions
/// climb through every omega-block, so the run can only end out-of-budget.
pub const RIGHT_MOVER_PROGRAM: &str = "\
start 0
halt 9
0 ____ -> ____ RSSS 0
";

/// Alternates the first scratch cell between 1 and 0 forever in a two-state
/// loop; at limit stages that cell's inferior limit is 0.
pub const BLINKER_PROGRAM: &str = "\
start 2
halt 9
2 ____ -> __1_ SSSS 3
3 ____ -> __0_ SSSS 2
";

// ---------------------------------------------------------------------------
// Machine/host agreement.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct AgreementReport {
    pub cases: u64,
    pub disagreements: Vec<String>,
}

impl AgreementReport {
    pub fn agreed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub member: AgreementReport,
    pub append: AgreementReport,
}

impl SuiteReport {
    pub fn agreed(&self) -> bool {
        self.member.agreed() && self.append.agreed()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "membership tester: {}/{} agree",
            self.member.cases - self.member.disagreements.len() as u64,
            self.member.cases
        )?;
        for d in &self.member.disagreements {
            writeln!(f, "  disagrees: {d}")?;
        }
        writeln!(
            f,
            "sequence append: {}/{} agree",
            self.append.cases - self.append.disagreements.len() as u64,
            self.append.cases
        )?;
        for d in &self.append.disagreements {
            writeln!(f, "  disagrees: {d}")?;
        }
        Ok(())
    }
}

fn suite_bound() -> OrdinalBound {
    OrdinalBound::new(Ordinal::w_pow(Ordinal::nat(3)))
}

fn all_small_sets() -> Vec<OrdSet> {
    let mut out = Vec::new();
    for mask in 0u32..256 {
        let mut s = OrdSet::empty();
        for a in 0..8 {
            if mask & (1 << a) != 0 {
                s.insert(Ordinal::nat(a));
            }
        }
        out.push(s);
    }
    out
}

/// n ones from cell 0: the members of the finite ordinal n as tape bits.
fn ordinal_param(n: u64) -> BitTape {
    let mut t = BitTape::new();
    for i in 0..n {
        t.set_one(Ordinal::nat(i));
    }
    t
}

/// Checks a membership-tester program against the host codec on every set
/// code over ordinals below 8, for every test ordinal below 8.
pub fn member_agreement_report(prog: &OtmProgram) -> AgreementReport {
    let bound = suite_bound();
    let budget = Ordinal::omega();
    let mut report = AgreementReport::default();
    for set in all_small_sets() {
        let code = encode_ordset(&set, &bound).expect("small set encodes");
        for n in 0..8u64 {
            report.cases += 1;
            let want = tape_member(&Ordinal::nat(n), &code).expect("valid code");
            let got = match otm_run(prog, &code, &ordinal_param(n), &budget) {
                RunOutcome::Halted { output, .. } => Some(output.bit(&Ordinal::zero())),
                _ => None,
            };
            if got != Some(want) {
                report
                    .disagreements
                    .push(format!("set {set} ordinal {n}: host {want}, machine {got:?}"));
            }
        }
    }
    report
}

/// Checks a sequence-append program against the host codec: every item
/// (set over ordinals below 8 paired with an index below 8) appended to the
/// empty sequence, plus appends onto nonempty sequences.
pub fn append_agreement_report(prog: &OtmProgram) -> AgreementReport {
    let bound = suite_bound();
    let budget = Ordinal::omega();
    let mut report = AgreementReport::default();
    let empty_seq = encode_seq(&[], &bound).expect("empty sequence encodes");
    let sets = all_small_sets();
    let check = |seq: &BitTape, item: &LowPair, report: &mut AgreementReport| {
        report.cases += 1;
        let want = seq_append(seq, item, &bound).expect("append encodes");
        let param = encode_lowpair(item, &bound).expect("item encodes");
        let got = otm_run(prog, seq, &param, &budget);
        if got.output() != Some(&want) {
            report.disagreements.push(format!(
                "append index {} set {} onto {} cells: machine differs",
                item.index,
                item.set,
                seq.length()
            ));
        }
    };
    for set in &sets {
        for n in 0..8u64 {
            let item = LowPair {
                index: Ordinal::nat(n),
                set: set.clone(),
            };
            check(&empty_seq, &item, &mut report);
        }
    }
    // Appends onto nonempty sequences: a smaller grid, two items deep.
    for (i, set) in sets.iter().enumerate().step_by(37) {
        let first = LowPair {
            index: Ordinal::nat((i % 8) as u64),
            set: set.clone(),
        };
        let seq1 = encode_seq(std::slice::from_ref(&first), &bound).expect("encodes");
        for (j, other) in sets.iter().enumerate().step_by(61) {
            let item = LowPair {
                index: Ordinal::nat((j % 8) as u64),
                set: other.clone(),
            };
            check(&seq1, &item, &mut report);
        }
    }
    report
}

/// Runs the shipped machine programs against the host tape codec.
pub fn otm_reference_suite() -> SuiteReport {
    let member = parse_program(MEMBER_PROGRAM).expect("shipped program parses");
    let append = parse_program(APPEND_PROGRAM).expect("shipped program parses");
    SuiteReport {
        member: member_agreement_report(&member),
        append: append_agreement_report(&append),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::parse_tape;

    fn run_text(prog: &str, input: &str, budget: Ordinal) -> RunOutcome {
        let p = parse_program(prog).unwrap();
        let t = parse_tape(input).unwrap();
        otm_run(&p, &t, &BitTape::new(), &budget)
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in [
            MEMBER_PROGRAM,
            APPEND_PROGRAM,
            COPIER_PROGRAM,
            RIGHT_MOVER_PROGRAM,
            BLINKER_PROGRAM,
        ] {
            let p = parse_program(text).unwrap();
            let q = parse_program(&p.to_string()).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn parser_rejects_bad_programs() {
        assert!(matches!(
            parse_program("halt 1\n0 ____ -> ____ SSSS 1"),
            Err(OtmError::NoStart)
        ));
        assert!(matches!(
            parse_program("start 0\n0 __ -> ____ SSSS 1"),
            Err(OtmError::Parse { .. })
        ));
        // Overlapping reads for one state.
        assert!(matches!(
            parse_program("start 0\n0 1___ -> ____ SSSS 1\n0 _1__ -> ____ SSSS 2"),
            Err(OtmError::Ambiguous { state: 0, .. })
        ));
        // Outgoing transition from a halting state.
        assert!(matches!(
            parse_program("start 0\nhalt 1\n1 ____ -> ____ SSSS 0"),
            Err(OtmError::HaltingOutgoing(1))
        ));
    }

    #[test]
    fn single_step_semantics() {
        // Always-halt program: the initial configuration is final.
        let p = parse_program("start 0\nhalt 0").unwrap();
        let cfg = MachineConfig::initial(&p, &BitTape::new(), &BitTape::new());
        assert!(matches!(otm_step(&cfg, &p), Ok(StepResult::Halted)));

        // Write 1 and move right.
        let p = parse_program("start 0\nhalt 1\n0 0___ -> 1___ RSSS 1").unwrap();
        let cfg = MachineConfig::initial(&p, &BitTape::new(), &BitTape::new());
        match otm_step(&cfg, &p).unwrap() {
            StepResult::Next(c) => {
                assert_eq!(c.heads[TAPE_INPUT], Ordinal::nat(1));
                assert!(c.tapes[TAPE_INPUT].bit(&Ordinal::zero()));
                assert_eq!(c.state, 1);
                assert_eq!(c.stage, Ordinal::nat(1));
            }
            StepResult::Halted => panic!("should step"),
        }

        // No matching transition: crash, distinct from halting.
        let p = parse_program("start 0\nhalt 1\n0 1___ -> ____ SSSS 1").unwrap();
        let cfg = MachineConfig::initial(&p, &BitTape::new(), &BitTape::new());
        assert!(matches!(
            otm_step(&cfg, &p),
            Err(OtmError::MissingTransition { state: 0, .. })
        ));
    }

    #[test]
    fn limit_rule_examples() {
        let p = parse_program(BLINKER_PROGRAM).unwrap();
        let c0 = MachineConfig::initial(&p, &BitTape::new(), &BitTape::new());
        let StepResult::Next(c1) = otm_step(&c0, &p).unwrap() else {
            panic!()
        };
        // Alternating cell values have inferior limit 0; the alternating
        // states settle on the smaller index.
        let lim = otm_limit(
            &LimitHistory::Periodic {
                cycle: vec![c0.clone(), c1.clone()],
            },
            Ordinal::omega(),
        );
        assert!(!lim.tapes[TAPE_SCRATCH].bit(&Ordinal::zero()));
        assert_eq!(lim.state, 2);
        assert_eq!(lim.stage, Ordinal::omega());

        // Eventually constant heads stay put.
        let lim = otm_limit(
            &LimitHistory::Periodic {
                cycle: vec![c0.clone()],
            },
            Ordinal::omega(),
        );
        assert_eq!(lim.heads[TAPE_INPUT], Ordinal::zero());

        // Strictly climbing head positions limit to omega.
        let p = parse_program(RIGHT_MOVER_PROGRAM).unwrap();
        let c0 = MachineConfig::initial(&p, &BitTape::new(), &BitTape::new());
        let StepResult::Next(c1) = otm_step(&c0, &p).unwrap() else {
            panic!()
        };
        let lim = otm_limit(
            &LimitHistory::Advancing {
                window: vec![c0, c1],
            },
            Ordinal::omega(),
        );
        assert_eq!(lim.heads[TAPE_INPUT], Ordinal::omega());
        assert_eq!(lim.heads[TAPE_OUTPUT], Ordinal::zero());
    }

    #[test]
    fn copier_copies_a_set_code() {
        match run_text(COPIER_PROGRAM, "011", Ordinal::omega()) {
            RunOutcome::Halted { output, stage } => {
                assert_eq!(output, parse_tape("011").unwrap());
                assert!(stage < Ordinal::omega());
            }
            other => panic!("expected halt, got {other:?}"),
        }
    }

    #[test]
    fn right_mover_runs_out_of_any_budget() {
        let w2 = Ordinal::omega().mul(&Ordinal::nat(2));
        match run_text(RIGHT_MOVER_PROGRAM, "", w2.clone()) {
            RunOutcome::OutOfBudget { stage } => assert_eq!(stage, w2),
            other => panic!("expected out-of-budget, got {other:?}"),
        }
        // The blinker also never halts; its repeat is caught as a cycle.
        match run_text(BLINKER_PROGRAM, "", w2.clone()) {
            RunOutcome::OutOfBudget { stage } => assert_eq!(stage, w2),
            other => panic!("expected out-of-budget, got {other:?}"),
        }
    }

    #[test]
    fn limit_crossing_matches_manual_liminf() {
        // Capture the configuration the run produces at stage omega and
        // compare it with the liminf computed from the successor steps.
        let p = parse_program(RIGHT_MOVER_PROGRAM).unwrap();
        let mut at_omega: Option<MachineConfig> = None;
        otm_run_with(
            &p,
            &BitTape::new(),
            &BitTape::new(),
            &Ordinal::omega().mul(&Ordinal::nat(2)),
            RunLimits::default(),
            |c| {
                if c.stage == Ordinal::omega() && at_omega.is_none() {
                    at_omega = Some(c.clone());
                }
            },
        );
        let got = at_omega.expect("run crosses omega");
        assert_eq!(got.state, 0);
        assert_eq!(got.heads[TAPE_INPUT], Ordinal::omega());
        assert_eq!(got.heads[TAPE_SCRATCH], Ordinal::zero());
        // And it keeps climbing after the crossing: at omega+1 the head
        // sits at omega+1.
        let StepResult::Next(after) = otm_step(&got, &p).unwrap() else {
            panic!()
        };
        assert_eq!(after.heads[TAPE_INPUT], Ordinal::omega().succ());
    }

    #[test]
    fn runs_are_deterministic_and_budget_monotone() {
        let code = parse_tape("0101011").unwrap();
        let p = parse_program(MEMBER_PROGRAM).unwrap();
        let a = otm_run(&p, &code, &ordinal_param(1), &Ordinal::omega());
        let b = otm_run(&p, &code, &ordinal_param(1), &Ordinal::omega());
        assert_eq!(a, b);
        // Halting runs keep their output under any larger budget.
        let big = otm_run(
            &p,
            &code,
            &ordinal_param(1),
            &Ordinal::omega().mul(&Ordinal::nat(7)),
        );
        assert_eq!(a, big);
        // A too-small finite budget is out-of-budget rather than wrong.
        match otm_run(&p, &code, &ordinal_param(1), &Ordinal::nat(1)) {
            RunOutcome::OutOfBudget { .. } => {}
            other => panic!("expected out-of-budget, got {other:?}"),
        }
    }

    #[test]
    fn member_machine_on_the_fixed_example() {
        let p = parse_program(MEMBER_PROGRAM).unwrap();
        let code = parse_tape("01011").unwrap();
        match otm_run(&p, &code, &ordinal_param(0), &Ordinal::omega()) {
            RunOutcome::Halted { output, .. } => {
                assert!(output.bit(&Ordinal::zero()));
            }
            other => panic!("expected halt, got {other:?}"),
        }
    }

    #[test]
    fn reference_suite_agrees_everywhere() {
        let report = otm_reference_suite();
        assert!(report.agreed(), "{report}");
        assert_eq!(report.member.cases, 2048);
        assert!(report.append.cases > 2048);
    }

    #[test]
    fn corrupted_program_is_reported_not_hidden() {
        // Swap the member tester's peek branches: terminator and member
        // bits trade answers.
        let corrupted = MEMBER_PROGRAM
            .replace("3 0___ -> ___1 SSSS 9", "3 0___ -> ___0 SSSS 9 #")
            .replace("3 1___ -> ___0 SSSS 9", "3 1___ -> ___1 SSSS 9 #");
        let p = parse_program(&corrupted).unwrap();
        let report = member_agreement_report(&p);
        assert!(!report.agreed());
        assert!(!report.disagreements.is_empty());
        assert!(report.disagreements.len() < report.cases as usize);
    }
}

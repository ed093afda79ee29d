//! Set codes: sets presented as well-founded membership graphs.
//!
//! A pre-code is a digraph on nodes 0..domain whose edge b -> g says
//! "node b is a member of node g"; edges are stored externally as the
//! pair ranks g(b, g). A code additionally fixes a distinguished node
//! `rho` and demands the graph be extensional (distinct nodes have
//! distinct child sets), well-founded, and a transitive-closure picture:
//! exactly one node is a member of nothing (the top) and every node is
//! reachable from it. `rho` may differ from the top, which is how one
//! code carries bystander structure around the set it denotes.
//!
//! Everything here works on the graphs themselves; the collapse to
//! hereditarily finite sets exists as an independent oracle for tests
//! and truth evaluation, not as a subroutine of the graph algorithms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hfset::{sort_canonical, HFSet};
use crate::ordinal::{godel_pair, godel_unpair, Ordinal, OrdinalError};

const DOMAIN_CAP: u64 = 65_536;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("edge endpoint {node} outside domain {domain}")]
    EdgeOutOfRange { node: u64, domain: u64 },
    #[error("membership graph has a cycle")]
    Cyclic,
    #[error("nodes {0} and {1} have identical children (not extensional)")]
    NotExtensional(u64, u64),
    #[error("graph has {0} top nodes, expected exactly 1")]
    TopCount(usize),
    #[error("node {0} is not reachable from the top")]
    Unreachable(u64),
    #[error("distinguished node {rho} outside domain {domain}")]
    RhoOutOfRange { rho: u64, domain: u64 },
    #[error("codes are not isomorphic: {0}")]
    NotIsomorphic(String),
    #[error("domain {0} exceeds the supported size")]
    TooLarge(u64),
    #[error("code literal parse error: {0}")]
    Literal(String),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

type Result<T> = std::result::Result<T, CodeError>;

/// Membership digraph on nodes 0..domain. `children[g]` lists the members
/// of node g. Construction checks bounds and well-foundedness only.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PreCode {
    domain: u64,
    children: Vec<BTreeSet<u64>>,
}

impl PreCode {
    pub fn new(domain: u64, edges: &[(u64, u64)]) -> Result<Self> {
        if domain > DOMAIN_CAP {
            return Err(CodeError::TooLarge(domain));
        }
        let mut children = vec![BTreeSet::new(); domain as usize];
        for (b, g) in edges {
            if *b >= domain {
                return Err(CodeError::EdgeOutOfRange { node: *b, domain });
            }
            if *g >= domain {
                return Err(CodeError::EdgeOutOfRange { node: *g, domain });
            }
            children[*g as usize].insert(*b);
        }
        let pre = PreCode { domain, children };
        pre.heights()?;
        Ok(pre)
    }

    /// Builds from the external form: a domain ordinal and pair ranks.
    pub fn from_ordinal_pairs<'a, I>(domain: &Ordinal, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Ordinal>,
    {
        let d = domain
            .as_nat()
            .ok_or(OrdinalError::Unrepresentable("infinite code domain"))?;
        let mut edges = Vec::new();
        for p in pairs {
            let (b, g) = godel_unpair(p)?;
            let b = b
                .as_nat()
                .ok_or(OrdinalError::Unrepresentable("infinite node index"))?;
            let g = g
                .as_nat()
                .ok_or(OrdinalError::Unrepresentable("infinite node index"))?;
            edges.push((b, g));
        }
        PreCode::new(d, &edges)
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn domain_ordinal(&self) -> Ordinal {
        Ordinal::nat(self.domain)
    }

    pub fn children(&self, node: u64) -> &BTreeSet<u64> {
        &self.children[node as usize]
    }

    /// The stored edges as pair ranks g(member, container).
    pub fn pair_ordinals(&self) -> BTreeSet<Ordinal> {
        let mut out = BTreeSet::new();
        for (g, members) in self.children.iter().enumerate() {
            for b in members {
                out.insert(godel_pair(&Ordinal::nat(*b), &Ordinal::nat(g as u64)));
            }
        }
        out
    }

    /// Height of each node (empty nodes at 0); errors on a cycle.
    fn heights(&self) -> Result<Vec<u64>> {
        let n = self.domain as usize;
        let mut height = vec![u64::MAX; n];
        // 0 = unvisited, 1 = in progress, 2 = done.
        let mut state = vec![0u8; n];
        for start in 0..n {
            if state[start] == 2 {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((v, expanded)) = stack.pop() {
                if expanded {
                    let h = self.children[v]
                        .iter()
                        .map(|c| height[*c as usize] + 1)
                        .max()
                        .unwrap_or(0);
                    height[v] = h;
                    state[v] = 2;
                    continue;
                }
                if state[v] == 2 {
                    continue;
                }
                if state[v] == 1 {
                    return Err(CodeError::Cyclic);
                }
                state[v] = 1;
                stack.push((v, true));
                for c in &self.children[v] {
                    let c = *c as usize;
                    if state[c] == 1 {
                        return Err(CodeError::Cyclic);
                    }
                    if state[c] == 0 {
                        stack.push((c, false));
                    }
                }
            }
        }
        Ok(height)
    }

    /// Nodes that are members of nothing.
    fn tops(&self) -> Vec<u64> {
        let mut is_member = vec![false; self.domain as usize];
        for members in &self.children {
            for b in members {
                is_member[*b as usize] = true;
            }
        }
        (0..self.domain).filter(|v| !is_member[*v as usize]).collect()
    }

    fn check_code_shape(&self) -> Result<()> {
        if self.domain == 0 {
            return Err(CodeError::TopCount(0));
        }
        for a in 0..self.domain as usize {
            for b in (a + 1)..self.domain as usize {
                if self.children[a] == self.children[b] {
                    return Err(CodeError::NotExtensional(a as u64, b as u64));
                }
            }
        }
        let tops = self.tops();
        if tops.len() != 1 {
            return Err(CodeError::TopCount(tops.len()));
        }
        let reach = self.descendants(tops[0]);
        for v in 0..self.domain {
            if !reach.contains(&v) {
                return Err(CodeError::Unreachable(v));
            }
        }
        Ok(())
    }

    /// All nodes reachable from `start` along member edges, plus `start`.
    fn descendants(&self, start: u64) -> BTreeSet<u64> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(self.children[v as usize].iter().copied());
            }
        }
        seen
    }
}

/// A validated code: a shaped pre-code plus the distinguished node whose
/// collapse the code denotes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Code {
    pre: Rc<PreCode>,
    rho: u64,
}

impl PartialOrd for Code {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Code {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.rho, &self.pre.children, self.pre.domain).cmp(&(
            other.rho,
            &other.pre.children,
            other.pre.domain,
        ))
    }
}

impl Code {
    pub fn new(pre: PreCode, rho: u64) -> Result<Self> {
        if rho >= pre.domain {
            return Err(CodeError::RhoOutOfRange { rho, domain: pre.domain });
        }
        pre.check_code_shape()?;
        Ok(Code { pre: Rc::new(pre), rho })
    }

    pub fn rho(&self) -> u64 {
        self.rho
    }

    pub fn rho_ordinal(&self) -> Ordinal {
        Ordinal::nat(self.rho)
    }

    pub fn pre(&self) -> &PreCode {
        &self.pre
    }

    pub fn domain(&self) -> u64 {
        self.pre.domain
    }

    /// Members of the distinguished node, ascending.
    pub fn child_nodes(&self) -> Vec<u64> {
        self.pre.children(self.rho).iter().copied().collect()
    }

    /// The same graph focused on another node.
    pub fn at_node(&self, node: u64) -> Result<Code> {
        if node >= self.pre.domain {
            return Err(CodeError::RhoOutOfRange { rho: node, domain: self.pre.domain });
        }
        Ok(Code { pre: Rc::clone(&self.pre), rho: node })
    }

    /// Nodes the denoted set actually depends on: descendants of rho.
    pub fn essdom(&self) -> BTreeSet<u64> {
        self.pre.descendants(self.rho)
    }

    /// Drops bystander nodes, renumbering the survivors in ascending order.
    pub fn restrict_to_essdom(&self) -> Code {
        let keep = self.essdom();
        let index: BTreeMap<u64, u64> = keep
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i as u64))
            .collect();
        let mut children = vec![BTreeSet::new(); keep.len()];
        for v in &keep {
            let tgt = &mut children[index[v] as usize];
            for c in self.pre.children(*v) {
                tgt.insert(index[c]);
            }
        }
        let pre = PreCode { domain: keep.len() as u64, children };
        Code { pre: Rc::new(pre), rho: index[&self.rho] }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .pre
            .pair_ordinals()
            .iter()
            .map(|p| p.to_string())
            .collect();
        write!(
            f,
            "code({}; {}; {})",
            self.rho,
            pairs.join(","),
            self.pre.domain
        )
    }
}

/// Parses `code(rho; pair,pair,...; domain)` with pair ranks in ordinal
/// notation.
pub fn parse_code(s: &str) -> Result<Code> {
    let t = s.trim();
    let inner = t
        .strip_prefix("code(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| CodeError::Literal("expected code(rho; pairs; domain)".into()))?;
    let parts: Vec<&str> = inner.split(';').collect();
    if parts.len() != 3 {
        return Err(CodeError::Literal(
            "expected three ;-separated fields".into(),
        ));
    }
    let rho: u64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CodeError::Literal("bad rho".into()))?;
    let mut pairs = Vec::new();
    for p in parts[1].split(',') {
        let p = p.trim();
        if p.is_empty() {
            continue;
        }
        pairs.push(
            crate::ordinal::parse_ordinal(p)
                .map_err(|e| CodeError::Literal(format!("bad pair rank: {e}")))?,
        );
    }
    let domain = crate::ordinal::parse_ordinal(parts[2].trim())
        .map_err(|e| CodeError::Literal(format!("bad domain: {e}")))?;
    let pre = PreCode::from_ordinal_pairs(&domain, pairs.iter())?;
    Code::new(pre, rho)
}

// ---------------------------------------------------------------------------
// Building codes from sets and collapsing codes to sets.
// ---------------------------------------------------------------------------

/// Canonical code of a set: nodes are tc({x}) in rank-first order, so the
/// set itself is the last node and also the top.
pub fn build_code(x: &HFSet) -> Code {
    let mut nodes = x.tc();
    nodes.push(x.clone());
    sort_canonical(&mut nodes);
    let index: BTreeMap<&HFSet, u64> = nodes
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i as u64))
        .collect();
    let mut children = vec![BTreeSet::new(); nodes.len()];
    for (g, s) in nodes.iter().enumerate() {
        for m in s.elems() {
            children[g].insert(index[m]);
        }
    }
    let pre = PreCode { domain: nodes.len() as u64, children };
    Code { pre: Rc::new(pre), rho: nodes.len() as u64 - 1 }
}

/// A code of `x` with a seeded disguise: possibly wrapped in a larger set
/// (leaving bystander nodes outside the essential domain) and with node
/// indices permuted. Collapses to exactly `x`.
pub fn build_code_scrambled(x: &HFSet, seed: u64) -> Code {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let junk_pool = [
        HFSet::vn(1),
        HFSet::vn(2),
        HFSet::vn(3),
        HFSet::singleton(HFSet::vn(2)),
        HFSet::new([HFSet::vn(1), HFSet::singleton(HFSet::vn(1))]),
    ];
    let base = if rng.gen_bool(0.6) {
        let mut wrapper = vec![x.clone()];
        for _ in 0..rng.gen_range(1..=2) {
            wrapper.push(junk_pool.choose(&mut rng).unwrap().clone());
        }
        HFSet::new(wrapper)
    } else {
        x.clone()
    };
    let canonical = build_code(&base);
    // Locate x among the nodes of the wrapper's code.
    let collapsed = collapse_all(canonical.pre());
    let rho_x = collapsed
        .iter()
        .position(|s| s == x)
        .expect("x is in tc of its wrapper") as u64;
    let n = canonical.domain() as usize;
    let mut perm: Vec<u64> = (0..n as u64).collect();
    perm.shuffle(&mut rng);
    let mut children = vec![BTreeSet::new(); n];
    for (g, members) in canonical.pre().children.iter().enumerate() {
        let tgt = &mut children[perm[g] as usize];
        for b in members {
            tgt.insert(perm[*b as usize]);
        }
    }
    let pre = PreCode { domain: n as u64, children };
    Code { pre: Rc::new(pre), rho: perm[rho_x as usize] }
}

/// Mostowski collapse of every node. This is the independent oracle the
/// graph algorithms are tested against.
pub fn collapse_all(pre: &PreCode) -> Vec<HFSet> {
    let n = pre.domain as usize;
    let mut out: Vec<Option<HFSet>> = vec![None; n];
    let mut stack: Vec<(u64, bool)> = (0..pre.domain).map(|v| (v, false)).collect();
    while let Some((v, expanded)) = stack.pop() {
        if out[v as usize].is_some() {
            continue;
        }
        if expanded {
            let elems = pre
                .children(v)
                .iter()
                .map(|c| out[*c as usize].clone().expect("children collapse first"));
            out[v as usize] = Some(HFSet::new(elems));
        } else {
            stack.push((v, true));
            for c in pre.children(v) {
                if out[*c as usize].is_none() {
                    stack.push((*c, false));
                }
            }
        }
    }
    out.into_iter().map(|o| o.expect("all collapsed")).collect()
}

/// The set a code denotes.
pub fn decode_set(c: &Code) -> HFSet {
    collapse_all(c.pre())[c.rho as usize].clone()
}

// ---------------------------------------------------------------------------
// Cross-code equality and matching, by graph recursion alone.
// ---------------------------------------------------------------------------

/// Memoized decoded-equality of node `a` in one graph and node `b` in
/// another: mutual refinement of child matchings.
struct CrossEq<'a> {
    left: &'a PreCode,
    right: &'a PreCode,
    memo: HashMap<(u64, u64), bool>,
}

impl<'a> CrossEq<'a> {
    fn new(left: &'a PreCode, right: &'a PreCode) -> Self {
        CrossEq { left, right, memo: HashMap::new() }
    }

    fn eq(&mut self, a: u64, b: u64) -> bool {
        if let Some(v) = self.memo.get(&(a, b)) {
            return *v;
        }
        let forward = self.subset(a, b);
        let result = forward && self.superset(a, b);
        self.memo.insert((a, b), result);
        result
    }

    /// Every member of `a` is decoded-equal to some member of `b`.
    fn subset(&mut self, a: u64, b: u64) -> bool {
        let members: Vec<u64> = self.left.children(a).iter().copied().collect();
        let targets: Vec<u64> = self.right.children(b).iter().copied().collect();
        members
            .iter()
            .all(|m| targets.iter().any(|t| self.eq(*m, *t)))
    }

    fn superset(&mut self, a: u64, b: u64) -> bool {
        let members: Vec<u64> = self.right.children(b).iter().copied().collect();
        let targets: Vec<u64> = self.left.children(a).iter().copied().collect();
        members
            .iter()
            .all(|m| targets.iter().any(|t| self.rev_eq(*t, *m)))
    }

    fn rev_eq(&mut self, a: u64, b: u64) -> bool {
        self.eq(a, b)
    }
}

/// Whether node `alpha` of `a` and node `beta` of `b` collapse to the same
/// set.
pub fn nodes_decode_equal(a: &Code, alpha: u64, b: &Code, beta: u64) -> bool {
    CrossEq::new(a.pre(), b.pre()).eq(alpha, beta)
}

/// Whether the member set of `alpha` in `a` is included in the member set
/// of `beta` in `b`, after collapsing.
pub fn node_subset(a: &Code, alpha: u64, b: &Code, beta: u64) -> bool {
    CrossEq::new(a.pre(), b.pre()).subset(alpha, beta)
}

/// Least node of `b` collapsing to the same set as node `alpha` of `a`.
pub fn match_node(a: &Code, alpha: u64, b: &Code) -> Option<u64> {
    let mut cx = CrossEq::new(a.pre(), b.pre());
    (0..b.domain()).find(|beta| cx.eq(alpha, *beta))
}

/// Least node of `b` collapsing to the set `a` denotes.
pub fn decode_match(a: &Code, b: &Code) -> Option<u64> {
    match_node(a, a.rho(), b)
}

// ---------------------------------------------------------------------------
// Isomorphisms between codes.
// ---------------------------------------------------------------------------

/// A node mapping witnessing that two codes denote the same set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CodeIso {
    pub map: BTreeMap<u64, u64>,
}

/// Builds the unique decoded-equality isomorphism from essdom(a) onto
/// essdom(b), or reports why none exists. Succeeds exactly when the two
/// codes denote the same set.
pub fn build_iso(a: &Code, b: &Code) -> Result<CodeIso> {
    let ess_a = a.essdom();
    let ess_b = b.essdom();
    let mut cx = CrossEq::new(a.pre(), b.pre());
    if !cx.eq(a.rho(), b.rho()) {
        return Err(CodeError::NotIsomorphic(
            "distinguished nodes denote different sets".into(),
        ));
    }
    let mut map = BTreeMap::new();
    for alpha in &ess_a {
        let image = ess_b.iter().find(|beta| cx.eq(*alpha, **beta));
        match image {
            Some(beta) => {
                map.insert(*alpha, *beta);
            }
            None => {
                return Err(CodeError::NotIsomorphic(format!(
                    "node {alpha} has no counterpart"
                )))
            }
        }
    }
    let iso = CodeIso { map };
    if !check_iso(a, b, &iso) {
        return Err(CodeError::NotIsomorphic("mapping failed validation".into()));
    }
    Ok(iso)
}

/// Validates a claimed isomorphism: a bijection essdom(a) -> essdom(b)
/// sending rho to rho and preserving membership in both directions.
pub fn check_iso(a: &Code, b: &Code, iso: &CodeIso) -> bool {
    let ess_a = a.essdom();
    let ess_b = b.essdom();
    if iso.map.len() != ess_a.len() || ess_a.len() != ess_b.len() {
        return false;
    }
    let mut seen = BTreeSet::new();
    for (x, y) in &iso.map {
        if !ess_a.contains(x) || !ess_b.contains(y) || !seen.insert(*y) {
            return false;
        }
    }
    if iso.map.get(&a.rho()) != Some(&b.rho()) {
        return false;
    }
    for x in &ess_a {
        for c in a.pre().children(*x) {
            // Children of essential nodes are essential.
            let (cx, xx) = (iso.map[c], iso.map[x]);
            if !b.pre().children(xx).contains(&cx) {
                return false;
            }
        }
        let y = iso.map[x];
        if b.pre().children(y).len() != a.pre().children(*x).len() {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Graph surgery: merging, unions, adjunction. All of it works on edges and
// a final extensional quotient, never on collapsed sets.
// ---------------------------------------------------------------------------

/// Raw graph under construction; may be non-extensional until normalized.
struct RawGraph {
    children: Vec<BTreeSet<u64>>,
}

impl RawGraph {
    fn new() -> Self {
        RawGraph { children: Vec::new() }
    }

    fn add_node(&mut self) -> u64 {
        self.children.push(BTreeSet::new());
        self.children.len() as u64 - 1
    }

    /// Copies the essential part of `c`, returning the node its rho landed
    /// on.
    fn import(&mut self, c: &Code) -> u64 {
        let r = c.restrict_to_essdom();
        let offset = self.children.len() as u64;
        for members in &r.pre.children {
            self.children
                .push(members.iter().map(|b| b + offset).collect());
        }
        r.rho + offset
    }

    fn add_edge(&mut self, member: u64, container: u64) {
        self.children[container as usize].insert(member);
    }

    /// Quotients by decoded equality, restricts to descendants of `top`,
    /// renumbers, and validates. The result denotes the collapse of `top`.
    fn normalize(self, top: u64) -> Result<Code> {
        let pre = PreCode {
            domain: self.children.len() as u64,
            children: self.children,
        };
        pre.heights()?;
        let n = pre.domain;
        // Equivalence classes of decoded equality inside one graph.
        let mut cx = CrossEq::new(&pre, &pre);
        let mut class_of: Vec<u64> = (0..n).collect();
        for i in 0..n {
            for j in 0..i {
                if class_of[j as usize] == j && cx.eq(i, j) {
                    class_of[i as usize] = j;
                    break;
                }
            }
        }
        // Lift edges to classes.
        let mut class_children: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
        for g in 0..n {
            let entry = class_children.entry(class_of[g as usize]).or_default();
            for b in pre.children(g) {
                entry.insert(class_of[*b as usize]);
            }
        }
        // Restrict to descendants of top's class.
        let top_class = class_of[top as usize];
        let mut keep = BTreeSet::new();
        let mut stack = vec![top_class];
        while let Some(v) = stack.pop() {
            if keep.insert(v) {
                if let Some(ch) = class_children.get(&v) {
                    stack.extend(ch.iter().copied());
                }
            }
        }
        let index: BTreeMap<u64, u64> = keep
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i as u64))
            .collect();
        let mut children = vec![BTreeSet::new(); keep.len()];
        for v in &keep {
            let tgt = &mut children[index[v] as usize];
            if let Some(ch) = class_children.get(v) {
                for b in ch {
                    tgt.insert(index[b]);
                }
            }
        }
        let pre = PreCode { domain: keep.len() as u64, children };
        Code::new(pre, index[&top_class])
    }
}

/// Code of the set whose members are exactly the sets the parts denote.
pub fn merge_codes(parts: &[&Code]) -> Result<Code> {
    let mut raw = RawGraph::new();
    let roots: Vec<u64> = parts.iter().map(|c| raw.import(c)).collect();
    let top = raw.add_node();
    for r in roots {
        raw.add_edge(r, top);
    }
    raw.normalize(top)
}

/// Code of {A} for the set A that `a` denotes.
pub fn singleton_code(a: &Code) -> Result<Code> {
    merge_codes(&[a])
}

/// Code of {A, B}.
pub fn pair_set_code(a: &Code, b: &Code) -> Result<Code> {
    merge_codes(&[a, b])
}

/// Code of the Kuratowski pair {{A}, {A, B}}.
pub fn kpair_code(a: &Code, b: &Code) -> Result<Code> {
    let s = singleton_code(a)?;
    let p = pair_set_code(a, b)?;
    pair_set_code(&s, &p)
}

/// Code of A ∪ {B}.
pub fn adjoin_code(a: &Code, b: &Code) -> Result<Code> {
    let mut raw = RawGraph::new();
    let ra = raw.import(a);
    let rb = raw.import(b);
    let top = raw.add_node();
    let a_children: Vec<u64> = raw.children[ra as usize].iter().copied().collect();
    for c in a_children {
        raw.add_edge(c, top);
    }
    raw.add_edge(rb, top);
    raw.normalize(top)
}

/// Code of the union of the members of A.
pub fn union_code(a: &Code) -> Result<Code> {
    let mut raw = RawGraph::new();
    let ra = raw.import(a);
    let top = raw.add_node();
    let members: Vec<u64> = raw.children[ra as usize].iter().copied().collect();
    for m in members {
        let grand: Vec<u64> = raw.children[m as usize].iter().copied().collect();
        for g in grand {
            raw.add_edge(g, top);
        }
    }
    raw.normalize(top)
}

/// Code of the von Neumann numeral n, grown by adjunction.
pub fn vn_code(n: usize) -> Result<Code> {
    let mut cur = merge_codes(&[])?;
    for _ in 0..n {
        let prev = cur.clone();
        cur = adjoin_code(&prev, &prev)?;
    }
    Ok(cur)
}

/// Code of the tuple object {<i, X_i> : i < n} over the given codes.
pub fn seq_object_code(items: &[&Code]) -> Result<Code> {
    let mut pairs = Vec::new();
    for (i, x) in items.iter().enumerate() {
        let idx = vn_code(i)?;
        pairs.push(kpair_code(&idx, x)?);
    }
    let refs: Vec<&Code> = pairs.iter().collect();
    merge_codes(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfset::v_level;
    use crate::ordinal::parse_ordinal;

    fn e() -> HFSet {
        HFSet::empty()
    }

    fn ords(vals: &[&str]) -> BTreeSet<Ordinal> {
        vals.iter().map(|v| parse_ordinal(v).unwrap()).collect()
    }

    #[test]
    fn canonical_codes_of_small_sets() {
        let c = build_code(&e());
        assert_eq!(c.domain(), 1);
        assert_eq!(c.rho(), 0);
        assert!(c.pre().pair_ordinals().is_empty());

        let c = build_code(&HFSet::singleton(e()));
        assert_eq!(c.domain(), 2);
        assert_eq!(c.rho(), 1);
        assert_eq!(c.pre().pair_ordinals(), ords(&["1"]));

        let c = build_code(&HFSet::singleton(HFSet::singleton(e())));
        assert_eq!(c.domain(), 3);
        assert_eq!(c.rho(), 2);
        assert_eq!(c.pre().pair_ordinals(), ords(&["1", "5"]));
    }

    #[test]
    fn decode_inverts_build_on_low_levels() {
        for x in v_level(4) {
            assert_eq!(decode_set(&build_code(&x)), x, "set {x}");
        }
    }

    #[test]
    fn decode_inverts_build_on_deeper_samples() {
        let samples = [
            HFSet::vn(4),
            HFSet::kpair(HFSet::vn(2), HFSet::vn(3)),
            HFSet::seq_object(&[e(), HFSet::vn(2), HFSet::vn(1)]),
            HFSet::new([HFSet::vn(3), HFSet::singleton(HFSet::vn(2))]),
        ];
        for x in samples {
            assert_eq!(decode_set(&build_code(&x)), x, "set {x}");
        }
    }

    #[test]
    fn scrambled_codes_decode_to_the_same_set() {
        for (i, x) in v_level(4).into_iter().enumerate() {
            for seed in 0..6u64 {
                let c = build_code_scrambled(&x, seed * 31 + i as u64);
                assert_eq!(decode_set(&c), x, "set {x} seed {seed}");
                // Bystanders may exist; the essential part never grows
                // beyond the full graph.
                assert!(c.essdom().len() as u64 <= c.domain());
            }
        }
    }

    #[test]
    fn essdom_restriction_preserves_decode() {
        let x = HFSet::vn(3);
        let c = build_code_scrambled(&x, 99);
        let r = c.restrict_to_essdom();
        assert_eq!(decode_set(&r), x);
        assert_eq!(r.domain() as usize, c.essdom().len());
        // Restricted code's top is its rho.
        assert_eq!(r.essdom().len() as u64, r.domain());
    }

    #[test]
    fn match_node_agrees_with_collapse_oracle() {
        let sets = v_level(4);
        for (i, x) in sets.iter().enumerate() {
            for (j, y) in sets.iter().enumerate() {
                let a = build_code_scrambled(x, (i * 37 + j) as u64);
                let b = build_code_scrambled(y, (j * 53 + i + 1) as u64);
                let col_a = collapse_all(a.pre());
                let col_b = collapse_all(b.pre());
                for alpha in 0..a.domain() {
                    let got = match_node(&a, alpha, &b);
                    let want = (0..b.domain())
                        .find(|beta| col_b[*beta as usize] == col_a[alpha as usize]);
                    assert_eq!(got, want, "{x} vs {y} at node {alpha}");
                }
            }
        }
    }

    #[test]
    fn match_fails_when_no_counterpart_exists() {
        let a = build_code(&HFSet::singleton(e()));
        let b = build_code(&e());
        assert_eq!(decode_match(&a, &b), None);
        assert_eq!(decode_match(&b, &a), Some(0));
    }

    #[test]
    fn iso_exists_exactly_for_equal_decodes() {
        let sets = v_level(3);
        for (i, x) in sets.iter().enumerate() {
            for (j, y) in sets.iter().enumerate() {
                let a = build_code_scrambled(x, (i * 7 + j) as u64 + 100);
                let b = build_code_scrambled(y, (j * 11 + i) as u64 + 200);
                let iso = build_iso(&a, &b);
                if x == y {
                    let iso = iso.expect("same decode must be isomorphic");
                    assert!(check_iso(&a, &b, &iso));
                } else {
                    assert!(iso.is_err(), "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn corrupted_iso_fails_validation() {
        let x = HFSet::vn(3);
        let a = build_code_scrambled(&x, 5);
        let b = build_code_scrambled(&x, 6);
        let iso = build_iso(&a, &b).unwrap();
        // Swap two images.
        let mut broken = iso.clone();
        let keys: Vec<u64> = broken.map.keys().copied().collect();
        if keys.len() >= 2 {
            let (k1, k2) = (keys[0], keys[1]);
            let (v1, v2) = (broken.map[&k1], broken.map[&k2]);
            broken.map.insert(k1, v2);
            broken.map.insert(k2, v1);
            assert!(!check_iso(&a, &b, &broken));
        }
        // Drop an entry.
        let mut broken = iso.clone();
        let k = *broken.map.keys().next().unwrap();
        broken.map.remove(&k);
        assert!(!check_iso(&a, &b, &broken));
    }

    #[test]
    fn merge_collapses_to_the_set_of_parts() {
        let sets = v_level(3);
        for (i, x) in sets.iter().enumerate() {
            for (j, y) in sets.iter().enumerate() {
                let a = build_code_scrambled(x, (i + 300) as u64);
                let b = build_code_scrambled(y, (j + 400) as u64);
                let m = merge_codes(&[&a, &b]).unwrap();
                assert_eq!(decode_set(&m), HFSet::new([x.clone(), y.clone()]));
            }
        }
        assert_eq!(decode_set(&merge_codes(&[]).unwrap()), e());
    }

    #[test]
    fn surgery_matches_set_operations() {
        let x = HFSet::vn(2);
        let y = HFSet::singleton(HFSet::vn(1));
        let a = build_code_scrambled(&x, 17);
        let b = build_code_scrambled(&y, 18);
        assert_eq!(decode_set(&singleton_code(&a).unwrap()), HFSet::singleton(x.clone()));
        assert_eq!(
            decode_set(&kpair_code(&a, &b).unwrap()),
            HFSet::kpair(x.clone(), y.clone())
        );
        assert_eq!(
            decode_set(&adjoin_code(&a, &b).unwrap()),
            HFSet::new(x.elems().iter().cloned().chain([y.clone()]))
        );
        // Union folds members' members together.
        let fam = HFSet::new([x.clone(), y.clone()]);
        let f = build_code_scrambled(&fam, 19);
        assert_eq!(decode_set(&union_code(&f).unwrap()), fam.big_union());
        // Union of {{0}} collapses onto an interior node.
        let g = build_code(&HFSet::singleton(HFSet::singleton(e())));
        assert_eq!(decode_set(&union_code(&g).unwrap()), HFSet::singleton(e()));
    }

    #[test]
    fn numeral_and_tuple_codes() {
        for n in 0..5 {
            assert_eq!(decode_set(&vn_code(n).unwrap()), HFSet::vn(n));
        }
        let items = [e(), HFSet::vn(2)];
        let codes: Vec<Code> = items.iter().map(build_code).collect();
        let refs: Vec<&Code> = codes.iter().collect();
        let t = seq_object_code(&refs).unwrap();
        assert_eq!(decode_set(&t), HFSet::seq_object(&items));
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        // Cycle.
        assert!(matches!(
            PreCode::new(2, &[(0, 1), (1, 0)]),
            Err(CodeError::Cyclic)
        ));
        // Edge out of range.
        assert!(matches!(
            PreCode::new(1, &[(0, 3)]),
            Err(CodeError::EdgeOutOfRange { .. })
        ));
        // Two separate roots above a shared base: extensional, two tops.
        let pre = PreCode::new(4, &[(0, 1), (0, 2), (1, 2), (1, 3)]).unwrap();
        assert!(matches!(Code::new(pre, 0), Err(CodeError::TopCount(2))));
        // Not extensional: nodes 1 and 2 have the same single child.
        let pre = PreCode::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert!(matches!(
            Code::new(pre, 3),
            Err(CodeError::NotExtensional(1, 2))
        ));
        // Unreachable node.
        let pre = PreCode::new(3, &[(0, 2), (1, 0)]).unwrap();
        // node 1 is a member of 0 which is a member of 2 (top); all
        // reachable, so this one validates.
        assert!(Code::new(pre, 2).is_ok());
    }

    #[test]
    fn literal_roundtrip() {
        let samples = [
            build_code(&e()),
            build_code(&HFSet::vn(2)),
            build_code_scrambled(&HFSet::vn(3), 4),
        ];
        for c in samples {
            let text = c.to_string();
            let back = parse_code(&text).unwrap();
            assert_eq!(back.rho(), c.rho());
            assert_eq!(back.pre().pair_ordinals(), c.pre().pair_ordinals());
            assert_eq!(decode_set(&back), decode_set(&c));
        }
        assert!(parse_code("code(0; 1)").is_err());
        assert!(parse_code("nope").is_err());
        // Literal with an edge creating a cycle is rejected.
        assert!(parse_code("code(0; 0; 1)").is_err());
    }

    #[test]
    fn child_navigation() {
        let x = HFSet::new([e(), HFSet::vn(1), HFSet::vn(2)]);
        let c = build_code(&x);
        let kids = c.child_nodes();
        assert_eq!(kids.len(), 3);
        let col = collapse_all(c.pre());
        for k in kids {
            let sub = c.at_node(k).unwrap();
            assert_eq!(decode_set(&sub), col[k as usize]);
            assert!(x.contains(&col[k as usize]));
        }
    }
}

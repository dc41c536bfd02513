//! Relation alphabets and binary Horn-clause rule sets.
//!
//! A rule `[a, b] => c` states that an `a`-edge followed by a `b`-edge implies
//! a `c`-edge between the outer endpoints. Every relation has an inverse under
//! the alphabet's involution; symmetric relations are their own inverse.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl From<u32> for RelationId {
    fn from(v: u32) -> Self {
        RelationId(v)
    }
}

/// The relation symbols `0..K` together with their inverse map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationAlphabet {
    inverse: Vec<RelationId>,
}

impl RelationAlphabet {
    /// Builds an alphabet from an explicit inverse map, checking that it is a
    /// total involution over `0..inverse.len()`.
    pub fn from_inverse(inverse: Vec<RelationId>) -> Result<Self> {
        let k = inverse.len();
        if k == 0 {
            return Err(Error::input("relation alphabet is empty"));
        }
        for (r, &inv) in inverse.iter().enumerate() {
            if inv.index() >= k {
                return Err(Error::input(format!(
                    "inverse of r{r} is {inv}, outside alphabet of size {k}"
                )));
            }
            if inverse[inv.index()].index() != r {
                return Err(Error::input(format!(
                    "inverse map is not an involution at r{r}"
                )));
            }
        }
        Ok(RelationAlphabet { inverse })
    }

    /// Every relation symmetric.
    pub fn all_symmetric(k: usize) -> Self {
        RelationAlphabet {
            inverse: (0..k as u32).map(RelationId).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.inverse.len()
    }

    pub fn inverse(&self, r: RelationId) -> RelationId {
        self.inverse[r.index()]
    }

    pub fn is_symmetric(&self, r: RelationId) -> bool {
        self.inverse(r) == r
    }

    pub fn contains(&self, r: RelationId) -> bool {
        r.index() < self.size()
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.size() as u32).map(RelationId)
    }

    pub fn symmetric_count(&self) -> usize {
        self.relations().filter(|&r| self.is_symmetric(r)).count()
    }

    pub fn inverse_map(&self) -> &[RelationId] {
        &self.inverse
    }
}

/// Draws an alphabet of `k` relations where `ceil(k * symmetric_fraction)`
/// are self-inverse and the rest are paired. An odd leftover becomes
/// symmetric as well.
pub fn generate_alphabet<R: Rng + ?Sized>(
    k: usize,
    symmetric_fraction: f64,
    rng: &mut R,
) -> Result<RelationAlphabet> {
    if k < 2 {
        return Err(Error::config(format!(
            "relation count K must be >= 2, got {k}"
        )));
    }
    if !(0.0..=1.0).contains(&symmetric_fraction) {
        return Err(Error::config(format!(
            "symmetric_fraction must lie in [0, 1], got {symmetric_fraction}"
        )));
    }
    let mut symmetric = ((k as f64) * symmetric_fraction).ceil() as usize;
    if (k - symmetric) % 2 == 1 {
        symmetric += 1;
    }

    let mut ids: Vec<u32> = (0..k as u32).collect();
    ids.shuffle(rng);
    let mut inverse = vec![RelationId(0); k];
    for &r in &ids[..symmetric] {
        inverse[r as usize] = RelationId(r);
    }
    for pair in ids[symmetric..].chunks_exact(2) {
        inverse[pair[0] as usize] = RelationId(pair[1]);
        inverse[pair[1] as usize] = RelationId(pair[0]);
    }
    RelationAlphabet::from_inverse(inverse)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryRule {
    pub body: [RelationId; 2],
    pub head: RelationId,
}

impl BinaryRule {
    pub fn new(
        first: impl Into<RelationId>,
        second: impl Into<RelationId>,
        head: impl Into<RelationId>,
    ) -> Self {
        BinaryRule {
            body: [first.into(), second.into()],
            head: head.into(),
        }
    }

    pub fn head_in_body(&self) -> bool {
        self.body[0] == self.head || self.body[1] == self.head
    }
}

impl fmt::Display for BinaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] => {}",
            self.body[0].0, self.body[1].0, self.head.0
        )
    }
}

/// `[a, b] => c` becomes `[inv(b), inv(a)] => inv(c)`.
pub fn invert_rule(rule: &BinaryRule, alphabet: &RelationAlphabet) -> BinaryRule {
    BinaryRule {
        body: [
            alphabet.inverse(rule.body[1]),
            alphabet.inverse(rule.body[0]),
        ],
        head: alphabet.inverse(rule.head),
    }
}

/// An ordered list of binary rules over an alphabet, with a dense
/// composition table for lookups.
///
/// Construction does not enforce consistency; use [`check_consistency`].
/// When two rules share a body the composition table keeps the first.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RuleSetDoc", into = "RuleSetDoc")]
pub struct RuleSet {
    alphabet: RelationAlphabet,
    rules: Vec<BinaryRule>,
    table: Vec<Option<RelationId>>,
}

impl PartialEq for RuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.rules == other.rules
    }
}

impl Eq for RuleSet {}

impl RuleSet {
    pub fn new(alphabet: RelationAlphabet, rules: Vec<BinaryRule>) -> Result<Self> {
        let k = alphabet.size();
        let mut table = vec![None; k * k];
        for rule in &rules {
            for r in [rule.body[0], rule.body[1], rule.head] {
                if !alphabet.contains(r) {
                    return Err(Error::input(format!(
                        "rule {rule} references {r}, outside alphabet of size {k}"
                    )));
                }
            }
            let slot = &mut table[rule.body[0].index() * k + rule.body[1].index()];
            if slot.is_none() {
                *slot = Some(rule.head);
            }
        }
        Ok(RuleSet {
            alphabet,
            rules,
            table,
        })
    }

    pub fn alphabet(&self) -> &RelationAlphabet {
        &self.alphabet
    }

    pub fn rules(&self) -> &[BinaryRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Head of the rule whose body is `(a, b)`, if any.
    pub fn compose(&self, a: RelationId, b: RelationId) -> Option<RelationId> {
        let k = self.alphabet.size();
        if a.index() >= k || b.index() >= k {
            return None;
        }
        self.table[a.index() * k + b.index()]
    }

    /// Distinct heads in ascending order.
    pub fn heads(&self) -> Vec<RelationId> {
        let mut heads: Vec<_> = self.rules.iter().map(|r| r.head).collect();
        heads.sort_unstable();
        heads.dedup();
        heads
    }

    /// The rules at `indices`, in that order, over the same alphabet.
    pub fn subset(&self, indices: &[usize]) -> Result<RuleSet> {
        let rules = indices
            .iter()
            .map(|&i| {
                self.rules.get(i).copied().ok_or_else(|| {
                    Error::input(format!(
                        "rule index {i} out of range ({} rules)",
                        self.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RuleSet::new(self.alphabet.clone(), rules)
    }

    /// Same rules, reordered by `order` (a permutation of `0..len`).
    pub fn reordered(&self, order: &[usize]) -> Result<RuleSet> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() {
            return Err(Error::input("reordering is not a permutation"));
        }
        for &i in order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::input("reordering is not a permutation"));
            }
        }
        self.subset(order)
    }
}

#[derive(Serialize, Deserialize)]
struct RuleSetDoc {
    #[serde(rename = "K")]
    k: usize,
    inverse: Vec<RelationId>,
    rules: Vec<BinaryRule>,
}

impl TryFrom<RuleSetDoc> for RuleSet {
    type Error = Error;

    fn try_from(doc: RuleSetDoc) -> Result<Self> {
        if doc.inverse.len() != doc.k {
            return Err(Error::input(format!(
                "K = {} but inverse map has {} entries",
                doc.k,
                doc.inverse.len()
            )));
        }
        RuleSet::new(RelationAlphabet::from_inverse(doc.inverse)?, doc.rules)
    }
}

impl From<RuleSet> for RuleSetDoc {
    fn from(rs: RuleSet) -> Self {
        RuleSetDoc {
            k: rs.alphabet.size(),
            inverse: rs.alphabet.inverse,
            rules: rs.rules,
        }
    }
}

/// Synthesizes a consistent, inverse-closed rule set.
///
/// Candidate triples `(a, b, c)` are visited in an rng-permuted order.
/// Candidates with `c` in the body are rejected; a candidate whose body is
/// free is added together with its inverse. When the inverse's body is
/// already taken, the rule holding that body is removed along with its own
/// inverse, and the candidate is dropped since its inverse cannot be placed.
/// A final sweep walks the survivors in insertion order and keeps each
/// rule/inverse group only if its dependency arcs (body -> head) leave the
/// dependency digraph acyclic.
pub fn generate_rules<R: Rng + ?Sized>(alphabet: &RelationAlphabet, rng: &mut R) -> RuleSet {
    let k = alphabet.size() as u32;
    let mut candidates: Vec<BinaryRule> = Vec::with_capacity((k * k * k) as usize);
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                candidates.push(BinaryRule::new(a, b, c));
            }
        }
    }
    candidates.shuffle(rng);

    let mut slots: Vec<Option<BinaryRule>> = Vec::new();
    let mut by_body: HashMap<[RelationId; 2], usize> = HashMap::new();

    let remove = |slots: &mut Vec<Option<BinaryRule>>,
                  by_body: &mut HashMap<[RelationId; 2], usize>,
                  rule: BinaryRule| {
        if let Some(&slot) = by_body.get(&rule.body) {
            if slots[slot] == Some(rule) {
                slots[slot] = None;
                by_body.remove(&rule.body);
            }
        }
    };

    for cand in candidates {
        if cand.head_in_body() || by_body.contains_key(&cand.body) {
            continue;
        }
        by_body.insert(cand.body, slots.len());
        slots.push(Some(cand));

        let inv = invert_rule(&cand, alphabet);
        if inv == cand {
            continue;
        }
        match by_body.get(&inv.body) {
            None => {
                by_body.insert(inv.body, slots.len());
                slots.push(Some(inv));
            }
            Some(&slot) => {
                let earlier = slots[slot].expect("body index points at a live rule");
                remove(&mut slots, &mut by_body, earlier);
                remove(&mut slots, &mut by_body, invert_rule(&earlier, alphabet));
                remove(&mut slots, &mut by_body, cand);
            }
        }
    }

    let survivors: Vec<BinaryRule> = slots.into_iter().flatten().collect();
    let rules = drop_cyclic_groups(alphabet, survivors);
    if rules.is_empty() {
        log::warn!("rule generation over {k} relations produced an empty rule set");
    }
    RuleSet::new(alphabet.clone(), rules).expect("generated rules stay inside the alphabet")
}

fn drop_cyclic_groups(alphabet: &RelationAlphabet, rules: Vec<BinaryRule>) -> Vec<BinaryRule> {
    let k = alphabet.size();
    let mut graph = DependencyGraph::new(k);
    let mut decided: HashMap<BinaryRule, bool> = HashMap::new();
    let mut kept = Vec::with_capacity(rules.len());

    for rule in &rules {
        if let Some(&keep) = decided.get(rule) {
            if keep {
                kept.push(*rule);
            }
            continue;
        }
        let inv = invert_rule(rule, alphabet);
        let group: &[BinaryRule] = if inv == *rule {
            &[*rule]
        } else {
            &[*rule, inv]
        };
        let arcs: Vec<(usize, usize)> = group
            .iter()
            .flat_map(|r| {
                [
                    (r.body[0].index(), r.head.index()),
                    (r.body[1].index(), r.head.index()),
                ]
            })
            .collect();
        let keep = graph.try_add_all(&arcs);
        for r in group {
            decided.insert(*r, keep);
        }
        if keep {
            kept.push(*rule);
        }
    }
    kept
}

struct DependencyGraph {
    succ: Vec<Vec<usize>>,
}

impl DependencyGraph {
    fn new(k: usize) -> Self {
        DependencyGraph {
            succ: vec![Vec::new(); k],
        }
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.succ.len()];
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            stack.extend(self.succ[n].iter().copied());
        }
        false
    }

    /// Adds every arc or none of them.
    fn try_add_all(&mut self, arcs: &[(usize, usize)]) -> bool {
        let mut added: Vec<(usize, usize)> = Vec::new();
        for &(from, to) in arcs {
            if self.reaches(to, from) {
                for (f, _) in added.into_iter().rev() {
                    self.succ[f].pop();
                }
                return false;
            }
            self.succ[from].push(to);
            added.push((from, to));
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    DuplicateBody {
        body: [RelationId; 2],
        heads: Vec<RelationId>,
    },
    HeadInBody {
        rule: BinaryRule,
    },
    MissingInverse {
        rule: BinaryRule,
        expected: BinaryRule,
    },
    DependencyCycle {
        relations: Vec<RelationId>,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateBody { body, heads } => {
                let heads: Vec<String> = heads.iter().map(|h| h.0.to_string()).collect();
                write!(
                    f,
                    "duplicate body [{}, {}] with heads {{{}}}",
                    body[0].0,
                    body[1].0,
                    heads.join(", ")
                )
            }
            Diagnostic::HeadInBody { rule } => write!(f, "head appears in body: {rule}"),
            Diagnostic::MissingInverse { rule, expected } => {
                write!(f, "rule {rule} has no inverse (expected {expected})")
            }
            Diagnostic::DependencyCycle { relations } => {
                let rels: Vec<String> = relations.iter().map(|r| r.0.to_string()).collect();
                write!(
                    f,
                    "dependency cycle among relations {{{}}}",
                    rels.join(", ")
                )
            }
        }
    }
}

/// Reports every violation of body uniqueness, head/body disjointness,
/// inverse closure and dependency acyclicity. Self-loops in the dependency
/// digraph are already covered by head-in-body and are not repeated as cycles.
pub fn check_consistency(rules: &RuleSet) -> Vec<Diagnostic> {
    let alphabet = rules.alphabet();
    let mut diags = Vec::new();

    let mut by_body: BTreeMap<[RelationId; 2], Vec<RelationId>> = BTreeMap::new();
    for r in rules.rules() {
        by_body.entry(r.body).or_default().push(r.head);
    }
    for (body, heads) in by_body.iter().filter(|(_, h)| h.len() > 1) {
        diags.push(Diagnostic::DuplicateBody {
            body: *body,
            heads: heads.clone(),
        });
    }

    for r in rules.rules().iter().filter(|r| r.head_in_body()) {
        diags.push(Diagnostic::HeadInBody { rule: *r });
    }

    let present: std::collections::HashSet<BinaryRule> = rules.rules().iter().copied().collect();
    for r in rules.rules() {
        let expected = invert_rule(r, alphabet);
        if !present.contains(&expected) {
            diags.push(Diagnostic::MissingInverse { rule: *r, expected });
        }
    }

    let k = alphabet.size();
    let mut succ = vec![Vec::new(); k];
    for r in rules.rules() {
        for b in r.body {
            if b != r.head {
                succ[b.index()].push(r.head.index());
            }
        }
    }
    for component in strongly_connected_components(&succ) {
        if component.len() > 1 {
            diags.push(Diagnostic::DependencyCycle {
                relations: component
                    .into_iter()
                    .map(|i| RelationId(i as u32))
                    .collect(),
            });
        }
    }
    diags
}

/// Kosaraju; each component sorted ascending, components ordered by their
/// smallest member.
fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut pred = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some((node, next)) = stack.pop() {
            if next < succ[node].len() {
                stack.push((node, next + 1));
                let child = succ[node][next];
                if !seen[child] {
                    seen[child] = true;
                    stack.push((child, 0));
                }
            } else {
                order.push(node);
            }
        }
    }

    let mut comp = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = Vec::new();
        let mut stack = vec![root];
        comp[root] = id;
        while let Some(node) = stack.pop() {
            members.push(node);
            for &p in &pred[node] {
                if comp[p] == usize::MAX {
                    comp[p] = id;
                    stack.push(p);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components.sort_by_key(|c| c[0]);
    components
}

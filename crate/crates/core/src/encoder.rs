//! Word encoding of budgeted abstract configurations, configuration
//! automata, and the reduction of `→_A` reachability from an automaton
//! language to reachability in a lazily generated transfer net.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::acptpn::BudgetConfig;
use crate::aptpn::{AbstractConfig, AgedToken, Group};
use crate::ptpn::PtpnNet;
use crate::sdtn::{
    fire_transition, reach_bounded, MarkedSystem, Marking, Multiset, ReachBudget, SdtnTransition,
    StatePredicate, Target, Verdict, Witness,
};

/// A letter of the configuration alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// Control-state with budget.
    State(usize, u64),
    /// A token `(p, k)`.
    Token(AgedToken),
    /// Group separator.
    Hash,
    /// Region separator.
    Dollar,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::State(q, y) => write!(f, "<q{q},{y}>"),
            Symbol::Token(t) => write!(f, "(p{},{})", t.place, t.age),
            Symbol::Hash => write!(f, "#"),
            Symbol::Dollar => write!(f, "$"),
        }
    }
}

/// Renders a word with single spaces between letters.
pub fn word_to_string(word: &[Symbol]) -> String {
    word.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The finite alphabet for a net and budget bound `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    pub symbols: Vec<Symbol>,
}

impl Alphabet {
    pub fn new(net: &PtpnNet, v: u64) -> Self {
        let mut symbols = Vec::new();
        for q in 0..net.states().len() {
            for y in 0..=v {
                symbols.push(Symbol::State(q, y));
            }
        }
        symbols.extend(token_symbols(net).into_iter().map(Symbol::Token));
        symbols.push(Symbol::Hash);
        symbols.push(Symbol::Dollar);
        Alphabet { symbols }
    }
}

/// Every token `(p, k)` with `k ≤ cmax + 1`, in order.
pub fn token_symbols(net: &PtpnNet) -> Vec<AgedToken> {
    let cmax = net.cmax();
    let mut v: Vec<AgedToken> = (0..net.places().len())
        .flat_map(|p| (0..=cmax + 1).map(move |k| AgedToken::new(p, k)))
        .collect();
    v.sort();
    v
}

/// Errors raised by decoding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("malformed encoding: {0}")]
    Malformed(String),
}

/// Encodes `((q, y), ⟨b_-m … b_-1, b_0, b_1 … b_n⟩)` as
/// `(q,y) b_n # … # b_1 $ b_0 $ b_-1 # … # b_-m`.
pub fn enc(b: &BudgetConfig) -> Vec<Symbol> {
    let a = &b.config;
    let mut w = vec![Symbol::State(a.state, b.budget)];
    let push_groups = |w: &mut Vec<Symbol>, groups: &mut dyn Iterator<Item = &Group>| {
        for (i, g) in groups.enumerate() {
            if i > 0 {
                w.push(Symbol::Hash);
            }
            w.extend(g.iter().map(|t| Symbol::Token(*t)));
        }
    };
    push_groups(&mut w, &mut a.low.iter().rev());
    w.push(Symbol::Dollar);
    w.extend(a.center.iter().map(|t| Symbol::Token(*t)));
    w.push(Symbol::Dollar);
    push_groups(&mut w, &mut a.high.iter().rev());
    w
}

/// Inverts [`enc`]; groups come back sorted.
pub fn dec(word: &[Symbol]) -> Result<BudgetConfig, EncodeError> {
    let bad = |s: &str| EncodeError::Malformed(s.to_string());
    let (&first, rest) = word.split_first().ok_or_else(|| bad("empty word"))?;
    let Symbol::State(q, y) = first else {
        return Err(bad("word must start with a control-state"));
    };
    let parts: Vec<&[Symbol]> = rest.split(|s| *s == Symbol::Dollar).collect();
    if parts.len() != 3 {
        return Err(bad("expected exactly two $ separators"));
    }
    let tokens = |part: &[Symbol]| -> Result<Group, EncodeError> {
        let mut g = Vec::with_capacity(part.len());
        for s in part {
            match s {
                Symbol::Token(t) => g.push(*t),
                _ => return Err(bad("unexpected letter inside a group")),
            }
        }
        g.sort();
        Ok(g)
    };
    let groups = |part: &[Symbol]| -> Result<Vec<Group>, EncodeError> {
        if part.is_empty() {
            return Ok(vec![]);
        }
        let mut gs = Vec::new();
        for chunk in part.split(|s| *s == Symbol::Hash) {
            if chunk.is_empty() {
                return Err(bad("empty group"));
            }
            gs.push(tokens(chunk)?);
        }
        gs.reverse();
        Ok(gs)
    };
    let low = groups(parts[0])?;
    let center = tokens(parts[1])?;
    let high = groups(parts[2])?;
    Ok(BudgetConfig {
        budget: y,
        config: AbstractConfig::normalized(q, high, center, low),
    })
}

/// A nondeterministic automaton with ε-edges (`None` labels).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub initial: usize,
    pub finals: BTreeSet<usize>,
    pub edges: Vec<Vec<(Option<Symbol>, usize)>>,
}

#[derive(Debug, Clone, Copy)]
struct Frag {
    start: usize,
    end: usize,
}

#[derive(Default)]
struct Builder {
    edges: Vec<Vec<(Option<Symbol>, usize)>>,
}

impl Builder {
    fn state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn edge(&mut self, a: usize, s: Option<Symbol>, b: usize) {
        self.edges[a].push((s, b));
    }

    fn eps(&mut self) -> Frag {
        let s = self.state();
        Frag { start: s, end: s }
    }

    fn lit(&mut self, sym: Symbol) -> Frag {
        let (a, b) = (self.state(), self.state());
        self.edge(a, Some(sym), b);
        Frag { start: a, end: b }
    }

    fn cat(&mut self, parts: Vec<Frag>) -> Frag {
        let mut it = parts.into_iter();
        let Some(mut acc) = it.next() else {
            return self.eps();
        };
        for f in it {
            self.edge(acc.end, None, f.start);
            acc = Frag {
                start: acc.start,
                end: f.end,
            };
        }
        acc
    }

    fn alt(&mut self, a: Frag, b: Frag) -> Frag {
        let (s, e) = (self.state(), self.state());
        self.edge(s, None, a.start);
        self.edge(s, None, b.start);
        self.edge(a.end, None, e);
        self.edge(b.end, None, e);
        Frag { start: s, end: e }
    }

    fn star(&mut self, a: Frag) -> Frag {
        let s = self.state();
        self.edge(s, None, a.start);
        self.edge(a.end, None, s);
        Frag { start: s, end: s }
    }

    /// Sorted words over `alphabet` that contain `required` as a
    /// sub-multiset, with every other letter satisfying `extra`.
    fn group(
        &mut self,
        alphabet: &[AgedToken],
        required: &Group,
        extra: &dyn Fn(AgedToken) -> bool,
        allow_empty: bool,
    ) -> Frag {
        let end = self.state();
        let mut ids: HashMap<(usize, Option<usize>), usize> = HashMap::new();
        let start = self.state();
        ids.insert((0, None), start);
        let mut queue = VecDeque::from([(0usize, None::<usize>)]);
        while let Some((i, last)) = queue.pop_front() {
            let from = ids[&(i, last)];
            if i == required.len() && (allow_empty || last.is_some()) {
                self.edge(from, None, end);
            }
            for (idx, &a) in alphabet.iter().enumerate().skip(last.unwrap_or(0)) {
                let next = if i < required.len() && a == required[i] {
                    Some(i + 1)
                } else if extra(a) && (i == required.len() || a < required[i]) {
                    Some(i)
                } else {
                    None
                };
                let Some(j) = next else { continue };
                let key = (j, Some(idx));
                let to = match ids.get(&key) {
                    Some(&s) => s,
                    None => {
                        let s = self.state();
                        ids.insert(key, s);
                        queue.push_back(key);
                        s
                    }
                };
                self.edge(from, Some(Symbol::Token(a)), to);
            }
        }
        Frag { start, end }
    }

    fn finish(self, f: Frag) -> Nfa {
        Nfa {
            initial: f.start,
            finals: BTreeSet::from([f.end]),
            edges: self.edges,
        }
    }
}

impl Nfa {
    /// Accepts exactly `word`.
    pub fn singleton(word: &[Symbol]) -> Self {
        let mut b = Builder::default();
        let parts = word.iter().map(|&s| b.lit(s)).collect();
        let f = b.cat(parts);
        b.finish(f)
    }

    /// Accepts nothing.
    pub fn empty_language() -> Self {
        Nfa {
            initial: 0,
            finals: BTreeSet::new(),
            edges: vec![vec![]],
        }
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    fn closure(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &(l, t) in &self.edges[s] {
                if l.is_none() && out.insert(t) {
                    stack.push(t);
                }
            }
        }
        out
    }

    /// Membership test.
    pub fn accepts(&self, word: &[Symbol]) -> bool {
        let mut cur = self.closure(&BTreeSet::from([self.initial]));
        for s in word {
            let next: BTreeSet<usize> = cur
                .iter()
                .flat_map(|&q| {
                    self.edges[q]
                        .iter()
                        .filter(|(l, _)| *l == Some(*s))
                        .map(|&(_, t)| t)
                })
                .collect();
            cur = self.closure(&next);
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|q| self.finals.contains(q))
    }

    /// Language union.
    pub fn union(&self, other: &Nfa) -> Nfa {
        let off = self.edges.len();
        let mut edges = self.edges.clone();
        edges.extend(
            other
                .edges
                .iter()
                .map(|es| es.iter().map(|&(l, t)| (l, t + off)).collect()),
        );
        let init = edges.len();
        edges.push(vec![(None, self.initial), (None, other.initial + off)]);
        let finals = self
            .finals
            .iter()
            .copied()
            .chain(other.finals.iter().map(|f| f + off))
            .collect();
        Nfa {
            initial: init,
            finals,
            edges,
        }
    }

    /// Equivalent automaton without ε-edges.
    pub fn eps_free(&self) -> Nfa {
        let n = self.edges.len();
        let mut edges = vec![Vec::new(); n];
        let mut finals = BTreeSet::new();
        for (s, out) in edges.iter_mut().enumerate() {
            let cl = self.closure(&BTreeSet::from([s]));
            if cl.iter().any(|q| self.finals.contains(q)) {
                finals.insert(s);
            }
            let mut seen = BTreeSet::new();
            for &q in &cl {
                for &(l, t) in &self.edges[q] {
                    if l.is_some() && seen.insert((l, t)) {
                        out.push((l, t));
                    }
                }
            }
        }
        Nfa {
            initial: self.initial,
            finals,
            edges,
        }
    }

    /// Product automaton for the intersection.
    pub fn intersect(&self, other: &Nfa) -> Nfa {
        let (a, b) = (self.eps_free(), other.eps_free());
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Vec<(Option<Symbol>, usize)>> = vec![vec![]];
        let mut finals = BTreeSet::new();
        ids.insert((a.initial, b.initial), 0);
        let mut queue = VecDeque::from([(a.initial, b.initial)]);
        while let Some((x, y)) = queue.pop_front() {
            let id = ids[&(x, y)];
            if a.finals.contains(&x) && b.finals.contains(&y) {
                finals.insert(id);
            }
            for &(l, tx) in &a.edges[x] {
                for &(m, ty) in &b.edges[y] {
                    if l != m {
                        continue;
                    }
                    let to = *ids.entry((tx, ty)).or_insert_with(|| {
                        edges.push(vec![]);
                        queue.push_back((tx, ty));
                        edges.len() - 1
                    });
                    edges[id].push((l, to));
                }
            }
        }
        Nfa {
            initial: 0,
            finals,
            edges,
        }
    }

    /// Complement with respect to `alphabet*`, by subset construction.
    pub fn complement(&self, alphabet: &Alphabet) -> Nfa {
        let mut ids: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        let mut edges: Vec<Vec<(Option<Symbol>, usize)>> = vec![vec![]];
        let mut finals = BTreeSet::new();
        let start = self.closure(&BTreeSet::from([self.initial]));
        ids.insert(start.clone(), 0);
        let mut queue = VecDeque::from([start]);
        while let Some(set) = queue.pop_front() {
            let id = ids[&set];
            if !set.iter().any(|q| self.finals.contains(q)) {
                finals.insert(id);
            }
            for &sym in &alphabet.symbols {
                let next: BTreeSet<usize> = set
                    .iter()
                    .flat_map(|&q| {
                        self.edges[q]
                            .iter()
                            .filter(|(l, _)| *l == Some(sym))
                            .map(|&(_, t)| t)
                    })
                    .collect();
                let next = self.closure(&next);
                let to = match ids.get(&next) {
                    Some(&t) => t,
                    None => {
                        edges.push(vec![]);
                        ids.insert(next.clone(), edges.len() - 1);
                        queue.push_back(next);
                        edges.len() - 1
                    }
                };
                edges[id].push((Some(sym), to));
            }
        }
        Nfa {
            initial: 0,
            finals,
            edges,
        }
    }

    /// States from which some final state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let n = self.edges.len();
        let mut rev = vec![Vec::new(); n];
        for (s, es) in self.edges.iter().enumerate() {
            for &(_, t) in es {
                rev[t].push(s);
            }
        }
        let mut ok = vec![false; n];
        let mut stack: Vec<usize> = self.finals.iter().copied().collect();
        for &f in &stack {
            ok[f] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !ok[p] {
                    ok[p] = true;
                    stack.push(p);
                }
            }
        }
        ok
    }

    /// Emptiness of the language.
    pub fn is_empty(&self) -> bool {
        !self.coreachable()[self.initial]
    }

    /// For each state, how many token letters a path to a final state can
    /// still read.
    pub fn token_capacity(&self) -> Vec<Capacity> {
        let n = self.edges.len();
        let live = self.coreachable();
        let reach_from = |s: usize| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(x) = stack.pop() {
                for &(_, t) in &self.edges[x] {
                    if live[t] && !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            seen
        };
        let mut unbounded = vec![false; n];
        for s in (0..n).filter(|&s| live[s]) {
            let on_cycle = self.edges[s]
                .iter()
                .any(|&(l, t)| live[t] && matches!(l, Some(Symbol::Token(_))) && reach_from(t)[s]);
            if on_cycle {
                unbounded[s] = true;
            }
        }
        // Anything that reaches an unbounded state is unbounded.
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if live[s]
                    && !unbounded[s]
                    && self.edges[s].iter().any(|&(_, t)| live[t] && unbounded[t])
                {
                    unbounded[s] = true;
                    changed = true;
                }
            }
        }
        let mut best: Vec<Option<u32>> = (0..n)
            .map(|s| self.finals.contains(&s).then_some(0))
            .collect();
        for _ in 0..=n {
            let mut changed = false;
            for s in (0..n).filter(|&s| live[s] && !unbounded[s]) {
                for &(l, t) in &self.edges[s] {
                    if let Some(bt) = best[t] {
                        let w = bt + u32::from(matches!(l, Some(Symbol::Token(_))));
                        if best[s].is_none_or(|b| w > b) {
                            best[s] = Some(w);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (0..n)
            .map(|s| {
                if !live[s] {
                    Capacity::Dead
                } else if unbounded[s] {
                    Capacity::Unbounded
                } else {
                    Capacity::AtMost(best[s].unwrap_or(0))
                }
            })
            .collect()
    }
}

/// How many more token letters an automaton state can still produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Dead,
    AtMost(u32),
    Unbounded,
}

fn group_list(
    b: &mut Builder,
    alphabet: &[AgedToken],
    required: &[Group],
    free: &dyn Fn(AgedToken) -> bool,
) -> Frag {
    // (F #)* G1 (# F)* # G2 (# F)* … # Gs (# F)*, or ε | F (# F)* if s = 0.
    let any_free = |b: &mut Builder| b.group(alphabet, &vec![], free, false);
    let sep_free = |b: &mut Builder| {
        let h = b.lit(Symbol::Hash);
        let f = any_free(b);
        let c = b.cat(vec![h, f]);
        b.star(c)
    };
    if required.is_empty() {
        let f = any_free(b);
        let rest = sep_free(b);
        let nonempty = b.cat(vec![f, rest]);
        let e = b.eps();
        return b.alt(e, nonempty);
    }
    let mut parts = Vec::new();
    let f = any_free(b);
    let h = b.lit(Symbol::Hash);
    let lead = b.cat(vec![f, h]);
    parts.push(b.star(lead));
    for (i, r) in required.iter().enumerate() {
        if i > 0 {
            parts.push(b.lit(Symbol::Hash));
        }
        parts.push(b.group(alphabet, r, free, false));
        parts.push(sep_free(b));
    }
    b.cat(parts)
}

/// Automaton for the upward closure of `configs` under `≤^f`.
pub fn automaton_uc(net: &PtpnNet, configs: &[BudgetConfig]) -> Nfa {
    let alphabet = token_symbols(net);
    let free = |t: AgedToken| !net.is_cost_place(t.place);
    let mut result: Option<Nfa> = None;
    for c in configs {
        let mut b = Builder::default();
        let a = &c.config;
        let head = b.lit(Symbol::State(a.state, c.budget));
        let low: Vec<Group> = a.low.iter().rev().cloned().collect();
        let high: Vec<Group> = a.high.iter().rev().cloned().collect();
        let lo = group_list(&mut b, &alphabet, &low, &free);
        let d1 = b.lit(Symbol::Dollar);
        let center = b.group(&alphabet, &a.center, &free, true);
        let d2 = b.lit(Symbol::Dollar);
        let hi = group_list(&mut b, &alphabet, &high, &free);
        let f = b.cat(vec![head, lo, d1, center, d2, hi]);
        let nfa = b.finish(f);
        result = Some(match result {
            None => nfa,
            Some(r) => r.union(&nfa),
        });
    }
    result.unwrap_or_else(Nfa::empty_language)
}

/// Automaton accepting the encodings of every configuration with budget `≤ v`.
pub fn automaton_universal(net: &PtpnNet, v: u64) -> Nfa {
    let alphabet = token_symbols(net);
    let any = |_: AgedToken| true;
    let mut b = Builder::default();
    let (s, e) = (b.state(), b.state());
    for q in 0..net.states().len() {
        for y in 0..=v {
            b.edge(s, Some(Symbol::State(q, y)), e);
        }
    }
    let head = Frag { start: s, end: e };
    let lo = group_list(&mut b, &alphabet, &[], &any);
    let d1 = b.lit(Symbol::Dollar);
    let center = b.group(&alphabet, &vec![], &any, true);
    let d2 = b.lit(Symbol::Dollar);
    let hi = group_list(&mut b, &alphabet, &[], &any);
    let f = b.cat(vec![head, lo, d1, center, d2, hi]);
    b.finish(f)
}

/// Mode of the simulating net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Reading the control-state letter.
    Init,
    /// Reading low groups; the cover choice of the current group.
    InitLow(GroupCover),
    /// Reading the integer-age group.
    InitZero,
    /// Simulating steps.
    Sim,
    /// Type 1 step: covering low group `j` from the center, then the transfer.
    Type1(Option<u8>),
    /// Type 2 step: promoting pending high tokens.
    Type2Move,
    /// Type 2 step: reading the next high group from the automaton.
    Type2Emit,
    /// Reading the remaining high groups at the end.
    Final2(GroupCover),
    /// Covering the center and high groups of the target from places.
    Final1,
}

/// Which target group the group being read is matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupCover {
    /// No letter of the current group read yet.
    Fresh,
    /// Matched against target group `j`, or unmatched.
    Chosen(Option<u8>),
}

/// State of the embedded automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AState {
    Run(usize),
    /// The word has ended in a final state.
    Done,
}

/// A control-state of the simulating net: a valuation of its variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Control {
    pub mode: Mode,
    /// Simulated control-state and budget.
    pub nstate: (usize, u64),
    pub astate: AState,
    /// One bit per token of the target configuration.
    pub flags: u64,
    /// Pending read debts per `(p, k)`.
    pub rdebt: Vec<u8>,
    /// No token entered the integer places since the last transfer.
    pub center_empty: bool,
}

/// What a token letter or a place token was used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Use {
    /// Placed into a place.
    Place,
    /// Reserved for target token `flag`.
    Cover(u8),
    /// Paid an input debt.
    Pay,
    /// Dropped as a surplus free token.
    Discard,
}

/// Label of a simulating-net transition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimStep {
    ReadState(usize, u64),
    LowToken(AgedToken, Use),
    GroupEnd,
    RegionEnd,
    CenterToken(AgedToken),
    /// Discrete transition `t`, with the tokens taken on debt.
    Discrete {
        transition: usize,
        debts: Vec<AgedToken>,
    },
    Type1Start(Option<u8>),
    Type1Cover(AgedToken, u8),
    Type1Transfer,
    Type2Start,
    Type2Move(AgedToken),
    Type2EmitStart,
    Type2Token(AgedToken, Use),
    Type2End,
    WordEnd,
    FinalStart,
    FinalToken(AgedToken, Use),
    FinalCover(AgedToken, u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    High(usize),
    Center,
    Low(usize),
}

/// The simulating transfer net, generated on demand.
///
/// Places are `z(p,k)`, `low(p,k)`, `high(p,k)` and `idebt(p,k)` for every
/// place `p` and age `k ≤ cmax + 1`. The only transfer moves every
/// `z(p,k)` into `low(p,k)`.
pub struct SimNet<'a> {
    net: &'a PtpnNet,
    nfa: Nfa,
    capacity: Vec<Capacity>,
    target: BudgetConfig,
    flags: Vec<(Region, AgedToken)>,
    ages: u32,
    rmax: u8,
    transfer: Vec<(usize, usize)>,
}

const Z: usize = 0;
const LOW: usize = 1;
const HIGH: usize = 2;
const IDEBT: usize = 3;

/// Builds the simulating net for automaton `a` and target `c_fin`.
pub fn build_sdtn<'a>(net: &'a PtpnNet, a: &Nfa, c_fin: &BudgetConfig) -> SimNet<'a> {
    let nfa = a.eps_free();
    let capacity = nfa.token_capacity();
    let cf = &c_fin.config;
    let mut flags = Vec::new();
    for (i, g) in cf.high.iter().enumerate() {
        flags.extend(g.iter().map(|t| (Region::High(i), *t)));
    }
    flags.extend(cf.center.iter().map(|t| (Region::Center, *t)));
    for (i, g) in cf.low.iter().enumerate() {
        flags.extend(g.iter().map(|t| (Region::Low(i), *t)));
    }
    assert!(flags.len() <= 64, "target configuration too large");
    let rmax = net
        .transitions()
        .iter()
        .flat_map(|t| {
            (0..net.places().len()).map(move |p| t.read.iter().filter(|a| a.place == p).count())
        })
        .max()
        .unwrap_or(0) as u8;
    let ages = net.cmax() + 2;
    let mut sim = SimNet {
        net,
        nfa,
        capacity,
        target: c_fin.clone(),
        flags,
        ages,
        rmax,
        transfer: Vec::new(),
    };
    sim.transfer = (0..net.places().len())
        .flat_map(|p| (0..ages).map(move |k| AgedToken::new(p, k)))
        .map(|t| (sim.place(Z, t), sim.place(LOW, t)))
        .collect();
    sim
}

impl SimNet<'_> {
    /// Index of place `family(p, k)`.
    fn place(&self, family: usize, t: AgedToken) -> usize {
        (family * self.net.places().len() + t.place) * self.ages as usize + t.age as usize
    }

    fn token_of(&self, idx: usize) -> AgedToken {
        let within = idx % (self.net.places().len() * self.ages as usize);
        AgedToken::new(
            within / self.ages as usize,
            (within % self.ages as usize) as u32,
        )
    }

    fn rindex(&self, t: AgedToken) -> usize {
        t.place * self.ages as usize + t.age as usize
    }

    /// Number of places, `4 · |P| · (cmax + 2)`.
    pub fn place_count(&self) -> usize {
        4 * self.net.places().len() * self.ages as usize
    }

    /// The transfer relation.
    pub fn transfer(&self) -> &[(usize, usize)] {
        &self.transfer
    }

    /// Largest read-arc multiplicity between a place and a transition.
    pub fn rmax(&self) -> u8 {
        self.rmax
    }

    /// Number of target tokens (cover flags).
    pub fn flag_count(&self) -> usize {
        self.flags.len()
    }

    /// Upper bound on the number of distinct control-states.
    pub fn control_bound(&self) -> f64 {
        let groups = (self
            .target
            .config
            .high
            .len()
            .max(self.target.config.low.len())
            + 2) as f64;
        let modes = 5.0 + 3.0 * groups;
        let nstate = (self.net.states().len() as f64) * (self.target.budget.max(1) as f64 + 64.0);
        let astate = self.nfa.num_states() as f64 + 1.0;
        let flags = 2f64.powi(self.flags.len() as i32);
        let rdebt =
            (self.rmax as f64 + 1.0).powi((self.net.places().len() * self.ages as usize) as i32);
        modes * nstate * astate * flags * rdebt * 2.0
    }

    /// The single initial configuration with all places empty.
    pub fn init(&self) -> (Control, Marking) {
        let c = Control {
            mode: Mode::Init,
            nstate: (0, 0),
            astate: AState::Run(self.nfa.initial),
            flags: 0,
            rdebt: vec![0; self.net.places().len() * self.ages as usize],
            center_empty: true,
        };
        (c, vec![0; self.place_count()])
    }

    /// The final constraint: target control-state, every target token
    /// covered, no debt, the word finished, no surplus cost token.
    pub fn final_target(&self) -> Target<Control> {
        let want = (self.target.config.state, self.target.budget);
        let all = if self.flags.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.flags.len()) - 1
        };
        let pred = StatePredicate {
            name: "final".to_string(),
            test: std::sync::Arc::new(move |c: &Control| {
                c.mode == Mode::Final1
                    && c.nstate == want
                    && c.flags == all
                    && c.astate == AState::Done
                    && c.rdebt.iter().all(|&d| d == 0)
            }),
        };
        let mut parts = vec![Target::StateWhere(pred)];
        for t in token_symbols(self.net) {
            parts.push(Target::Exactly(self.place(IDEBT, t), 0));
            if self.net.is_cost_place(t.place) {
                for fam in [Z, LOW, HIGH] {
                    parts.push(Target::Exactly(self.place(fam, t), 0));
                }
            }
        }
        Target::And(parts)
    }

    fn has(&self, c: &Control, i: usize) -> bool {
        c.flags >> i & 1 == 1
    }

    fn min_assigned(&self, c: &Control, low: bool) -> usize {
        let n = if low {
            self.target.config.low.len()
        } else {
            self.target.config.high.len()
        };
        self.flags
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.has(c, i))
            .filter_map(|(_, (r, _))| match (r, low) {
                (Region::Low(j), true) | (Region::High(j), false) => Some(*j),
                _ => None,
            })
            .min()
            .unwrap_or(n)
    }

    /// First uncovered flag for token `t` in region `r`.
    fn free_flag(&self, flags: u64, r: Region, t: AgedToken) -> Option<usize> {
        self.flags
            .iter()
            .enumerate()
            .position(|(i, &(rr, tt))| rr == r && tt == t && flags >> i & 1 == 0)
    }

    fn reserved(&self, flags: u64, t: AgedToken) -> usize {
        self.flags
            .iter()
            .enumerate()
            .filter(|&(i, &(r, tt))| matches!(r, Region::Low(_)) && tt == t && flags >> i & 1 == 1)
            .count()
    }

    fn plus(&self, t: AgedToken) -> AgedToken {
        AgedToken::new(t.place, (t.age + 1).min(self.ages - 1))
    }

    fn symbols_from(&self, a: AState) -> Vec<(Symbol, usize)> {
        match a {
            AState::Run(s) => self.nfa.edges[s]
                .iter()
                .filter_map(|&(l, t)| l.map(|l| (l, t)))
                .collect(),
            AState::Done => vec![],
        }
    }

    fn accepting(&self, a: AState) -> bool {
        matches!(a, AState::Run(s) if self.nfa.finals.contains(&s))
    }

    /// Debts outstanding that the rest of the word must still pay for.
    fn viable(&self, c: &Control, m: &Marking) -> bool {
        let owed: u64 = c.rdebt.iter().map(|&d| d as u64).sum::<u64>()
            + token_symbols(self.net)
                .into_iter()
                .map(|t| m[self.place(IDEBT, t)] as u64)
                .sum::<u64>();
        match c.astate {
            AState::Done => owed == 0,
            AState::Run(s) => match self.capacity[s] {
                Capacity::Dead => false,
                Capacity::AtMost(n) => owed <= n as u64,
                Capacity::Unbounded => true,
            },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &self,
        from: &Control,
        m: &Marking,
        to: Control,
        input: Multiset,
        output: Multiset,
        transfer: bool,
        label: SimStep,
        out: &mut Vec<(SimStep, Control, Marking)>,
    ) {
        let t = SdtnTransition {
            name: String::new(),
            from: from.clone(),
            to,
            input: norm(input),
            output: norm(output),
            transfer,
        };
        if let Some((c, m2)) = fire_transition(&self.transfer, from, m, &t) {
            if transfer {
                assert!(
                    self.transfer.iter().all(|&(sr, _)| m2[sr] == 0),
                    "integer places must be empty after the transfer"
                );
            }
            if self.viable(&c, &m2) {
                out.push((label, c, m2));
            }
        }
    }

    fn discrete(&self, c: &Control, m: &Marking, out: &mut Vec<(SimStep, Control, Marking)>) {
        #[derive(Clone, Copy)]
        enum Src {
            Place(usize, AgedToken),
            Debt(AgedToken),
            Reserved(AgedToken),
        }
        #[derive(Clone, Copy)]
        enum Dst {
            Place(usize, AgedToken),
            Cover(usize, AgedToken),
        }
        let (q, y) = c.nstate;
        for (ti, tr) in self.net.transitions().iter().enumerate() {
            if tr.source != q || tr.cost > y {
                continue;
            }
            let src_options = |arc: &crate::ptpn::Arc, read: bool| {
                let mut v = Vec::new();
                for k in 0..self.ages {
                    let t = AgedToken::new(arc.place, k);
                    if arc.interval.contains_int(k) && m[self.place(Z, t)] > 0 {
                        v.push(Src::Place(Z, t));
                    }
                    if arc.interval.models_eps(k) {
                        for fam in [LOW, HIGH] {
                            if m[self.place(fam, t)] > 0 {
                                v.push(Src::Place(fam, t));
                            }
                        }
                        if c.astate != AState::Done {
                            v.push(Src::Debt(t));
                        }
                        if read && self.reserved(c.flags, t) > 0 {
                            v.push(Src::Reserved(t));
                        }
                    }
                }
                v
            };
            let mut per: Vec<Vec<Src>> = tr.input.iter().map(|a| src_options(a, false)).collect();
            per.extend(tr.read.iter().map(|a| src_options(a, true)));
            if per.iter().any(Vec::is_empty) {
                continue;
            }
            let n_in = tr.input.len();
            let dst_options: Vec<Vec<Dst>> = tr
                .output
                .iter()
                .map(|arc| {
                    let mut v = Vec::new();
                    for k in 0..self.ages {
                        let t = AgedToken::new(arc.place, k);
                        if arc.interval.contains_int(k) {
                            v.push(Dst::Place(Z, t));
                        }
                        if arc.interval.models_eps(k) {
                            v.push(Dst::Place(LOW, t));
                            v.push(Dst::Place(HIGH, t));
                            for j in 0..self.target.config.low.len() {
                                if self.target.config.low[j].contains(&t) {
                                    v.push(Dst::Cover(j, t));
                                }
                            }
                        }
                    }
                    v
                })
                .collect();
            let srcs = product(&per);
            let dsts = product(&dst_options);
            for s in &srcs {
                let mut input: Multiset = Vec::new();
                let mut output: Multiset = Vec::new();
                let mut in_debt: BTreeMap<AgedToken, u8> = BTreeMap::new();
                let mut read_debt: BTreeMap<AgedToken, u8> = BTreeMap::new();
                let mut reserved_use: BTreeMap<AgedToken, usize> = BTreeMap::new();
                let mut debts = Vec::new();
                for (i, src) in s.iter().enumerate() {
                    let read = i >= n_in;
                    match *src {
                        Src::Place(fam, t) => {
                            input.push((self.place(fam, t), 1));
                            if read {
                                output.push((self.place(fam, t), 1));
                            }
                        }
                        Src::Debt(t) => {
                            if read {
                                *read_debt.entry(t).or_default() += 1;
                            } else {
                                *in_debt.entry(t).or_default() += 1;
                                output.push((self.place(IDEBT, t), 1));
                                debts.push(t);
                            }
                        }
                        Src::Reserved(t) => *reserved_use.entry(t).or_default() += 1,
                    }
                }
                if reserved_use
                    .iter()
                    .any(|(&t, &n)| self.reserved(c.flags, t) < n)
                {
                    continue;
                }
                let mut base = c.clone();
                base.nstate = (tr.target, y - tr.cost);
                for t in token_symbols(self.net) {
                    let r = self.rindex(t);
                    let paid = in_debt.get(&t).copied().unwrap_or(0);
                    let need = read_debt.get(&t).copied().unwrap_or(0);
                    base.rdebt[r] = base.rdebt[r].saturating_sub(paid).max(need);
                }
                debts.sort();
                'outs: for d in &dsts {
                    let mut next = base.clone();
                    let mut output = output.clone();
                    for dst in d {
                        match *dst {
                            Dst::Place(fam, t) => {
                                output.push((self.place(fam, t), 1));
                                if fam == Z {
                                    next.center_empty = false;
                                }
                            }
                            Dst::Cover(j, t) => match self.free_flag(next.flags, Region::Low(j), t)
                            {
                                Some(f) => next.flags |= 1 << f,
                                None => continue 'outs,
                            },
                        }
                    }
                    let label = SimStep::Discrete {
                        transition: ti,
                        debts: debts.clone(),
                    };
                    self.emit(c, m, next, input.clone(), output, false, label, out);
                }
            }
        }
    }
}

fn norm(m: Multiset) -> Multiset {
    let mut acc: BTreeMap<usize, u32> = BTreeMap::new();
    for (p, c) in m {
        *acc.entry(p).or_default() += c;
    }
    acc.into_iter().collect()
}

fn product<T: Copy>(per: &[Vec<T>]) -> Vec<Vec<T>> {
    per.iter().fold(vec![vec![]], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect()
    })
}

impl MarkedSystem for SimNet<'_> {
    type Control = Control;
    type Label = SimStep;

    fn num_places(&self) -> usize {
        self.place_count()
    }

    fn successors(&self, c: &Control, m: &Marking) -> Vec<(SimStep, Control, Marking)> {
        let mut out = Vec::new();
        let with = |mode: Mode, a: usize| Control {
            mode,
            astate: AState::Run(a),
            ..c.clone()
        };
        match c.mode {
            Mode::Init => {
                for (sym, a) in self.symbols_from(c.astate) {
                    if let Symbol::State(q, y) = sym {
                        let mut n = with(Mode::InitLow(GroupCover::Fresh), a);
                        n.nstate = (q, y);
                        self.emit(
                            c,
                            m,
                            n,
                            vec![],
                            vec![],
                            false,
                            SimStep::ReadState(q, y),
                            &mut out,
                        );
                    }
                }
            }
            Mode::InitLow(cover) => {
                for (sym, a) in self.symbols_from(c.astate) {
                    match sym {
                        Symbol::Token(t) => {
                            let choices: Vec<Option<u8>> = match cover {
                                GroupCover::Fresh => {
                                    let mut v = vec![None];
                                    v.extend(
                                        (0..self.min_assigned(c, true)).map(|j| Some(j as u8)),
                                    );
                                    v
                                }
                                GroupCover::Chosen(j) => vec![j],
                            };
                            for j in choices {
                                let n = with(Mode::InitLow(GroupCover::Chosen(j)), a);
                                self.emit(
                                    c,
                                    m,
                                    n.clone(),
                                    vec![],
                                    vec![(self.place(LOW, t), 1)],
                                    false,
                                    SimStep::LowToken(t, Use::Place),
                                    &mut out,
                                );
                                if let Some(j) = j {
                                    if let Some(f) =
                                        self.free_flag(c.flags, Region::Low(j as usize), t)
                                    {
                                        let mut n = n;
                                        n.flags |= 1 << f;
                                        self.emit(
                                            c,
                                            m,
                                            n,
                                            vec![],
                                            vec![],
                                            false,
                                            SimStep::LowToken(t, Use::Cover(f as u8)),
                                            &mut out,
                                        );
                                    }
                                }
                            }
                        }
                        Symbol::Hash if cover != GroupCover::Fresh => {
                            self.emit(
                                c,
                                m,
                                with(Mode::InitLow(GroupCover::Fresh), a),
                                vec![],
                                vec![],
                                false,
                                SimStep::GroupEnd,
                                &mut out,
                            );
                        }
                        Symbol::Dollar => {
                            self.emit(
                                c,
                                m,
                                with(Mode::InitZero, a),
                                vec![],
                                vec![],
                                false,
                                SimStep::RegionEnd,
                                &mut out,
                            );
                        }
                        _ => {}
                    }
                }
            }
            Mode::InitZero => {
                for (sym, a) in self.symbols_from(c.astate) {
                    match sym {
                        Symbol::Token(t) => {
                            let mut n = with(Mode::InitZero, a);
                            n.center_empty = false;
                            self.emit(
                                c,
                                m,
                                n,
                                vec![],
                                vec![(self.place(Z, t), 1)],
                                false,
                                SimStep::CenterToken(t),
                                &mut out,
                            );
                        }
                        Symbol::Dollar => {
                            self.emit(
                                c,
                                m,
                                with(Mode::Sim, a),
                                vec![],
                                vec![],
                                false,
                                SimStep::RegionEnd,
                                &mut out,
                            );
                        }
                        _ => {}
                    }
                }
            }
            Mode::Sim => {
                self.discrete(c, m, &mut out);
                let mut starts = vec![None];
                starts.extend((0..self.min_assigned(c, true)).map(|j| Some(j as u8)));
                for j in starts {
                    let n = Control {
                        mode: Mode::Type1(j),
                        ..c.clone()
                    };
                    self.emit(
                        c,
                        m,
                        n,
                        vec![],
                        vec![],
                        false,
                        SimStep::Type1Start(j),
                        &mut out,
                    );
                }
                if c.center_empty {
                    let n = Control {
                        mode: Mode::Type2Move,
                        ..c.clone()
                    };
                    self.emit(
                        c,
                        m,
                        n,
                        vec![],
                        vec![],
                        false,
                        SimStep::Type2Start,
                        &mut out,
                    );
                }
                if c.nstate == (self.target.config.state, self.target.budget) {
                    let mode = if c.astate == AState::Done {
                        Mode::Final1
                    } else {
                        Mode::Final2(GroupCover::Fresh)
                    };
                    self.emit(
                        c,
                        m,
                        Control { mode, ..c.clone() },
                        vec![],
                        vec![],
                        false,
                        SimStep::FinalStart,
                        &mut out,
                    );
                }
            }
            Mode::Type1(j) => {
                if let Some(j) = j {
                    for (f, &(r, t)) in self.flags.iter().enumerate() {
                        if r == Region::Low(j as usize) && self.free_flag(c.flags, r, t) == Some(f)
                        {
                            let mut n = c.clone();
                            n.flags |= 1 << f;
                            self.emit(
                                c,
                                m,
                                n,
                                vec![(self.place(Z, t), 1)],
                                vec![],
                                false,
                                SimStep::Type1Cover(t, f as u8),
                                &mut out,
                            );
                        }
                    }
                }
                let n = Control {
                    mode: Mode::Sim,
                    center_empty: true,
                    ..c.clone()
                };
                self.emit(
                    c,
                    m,
                    n,
                    vec![],
                    vec![],
                    true,
                    SimStep::Type1Transfer,
                    &mut out,
                );
            }
            Mode::Type2Move => {
                for (i, &k) in m.iter().enumerate() {
                    if k > 0 && i / (self.net.places().len() * self.ages as usize) == HIGH {
                        let t = self.token_of(i);
                        self.emit(
                            c,
                            m,
                            c.clone(),
                            vec![(i, 1)],
                            vec![(self.place(Z, self.plus(t)), 1)],
                            false,
                            SimStep::Type2Move(t),
                            &mut out,
                        );
                    }
                }
                let back = Control {
                    mode: Mode::Sim,
                    center_empty: false,
                    ..c.clone()
                };
                self.emit(
                    c,
                    m,
                    back,
                    vec![],
                    vec![],
                    false,
                    SimStep::Type2End,
                    &mut out,
                );
                if c.astate != AState::Done {
                    let n = Control {
                        mode: Mode::Type2Emit,
                        ..c.clone()
                    };
                    self.emit(
                        c,
                        m,
                        n,
                        vec![],
                        vec![],
                        false,
                        SimStep::Type2EmitStart,
                        &mut out,
                    );
                }
            }
            Mode::Type2Emit => {
                for (sym, a) in self.symbols_from(c.astate) {
                    match sym {
                        Symbol::Token(t) => {
                            let n = with(Mode::Type2Emit, a);
                            let idebt = self.place(IDEBT, t);
                            self.emit(
                                c,
                                m,
                                n.clone(),
                                vec![(idebt, 1)],
                                vec![],
                                false,
                                SimStep::Type2Token(t, Use::Pay),
                                &mut out,
                            );
                            let mut stay = n;
                            let r = self.rindex(t);
                            stay.rdebt[r] = stay.rdebt[r].saturating_sub(1);
                            stay.center_empty = false;
                            self.emit(
                                c,
                                m,
                                stay,
                                vec![],
                                vec![(self.place(Z, self.plus(t)), 1)],
                                false,
                                SimStep::Type2Token(t, Use::Place),
                                &mut out,
                            );
                        }
                        Symbol::Hash => {
                            let n = Control {
                                center_empty: false,
                                ..with(Mode::Sim, a)
                            };
                            self.emit(c, m, n, vec![], vec![], false, SimStep::GroupEnd, &mut out);
                        }
                        _ => {}
                    }
                }
                if self.accepting(c.astate) {
                    let n = Control {
                        mode: Mode::Sim,
                        astate: AState::Done,
                        center_empty: false,
                        ..c.clone()
                    };
                    self.emit(c, m, n, vec![], vec![], false, SimStep::WordEnd, &mut out);
                }
            }
            Mode::Final2(cover) => {
                for (sym, a) in self.symbols_from(c.astate) {
                    match sym {
                        Symbol::Token(t) => {
                            let choices: Vec<Option<u8>> = match cover {
                                GroupCover::Fresh => {
                                    let mut v = vec![None];
                                    v.extend(
                                        (0..self.min_assigned(c, false)).map(|j| Some(j as u8)),
                                    );
                                    v
                                }
                                GroupCover::Chosen(j) => vec![j],
                            };
                            for j in choices {
                                let n = with(Mode::Final2(GroupCover::Chosen(j)), a);
                                self.emit(
                                    c,
                                    m,
                                    n.clone(),
                                    vec![(self.place(IDEBT, t), 1)],
                                    vec![],
                                    false,
                                    SimStep::FinalToken(t, Use::Pay),
                                    &mut out,
                                );
                                let mut stay = n;
                                let r = self.rindex(t);
                                stay.rdebt[r] = stay.rdebt[r].saturating_sub(1);
                                if !self.net.is_cost_place(t.place) {
                                    self.emit(
                                        c,
                                        m,
                                        stay.clone(),
                                        vec![],
                                        vec![],
                                        false,
                                        SimStep::FinalToken(t, Use::Discard),
                                        &mut out,
                                    );
                                }
                                if let Some(j) = j {
                                    if let Some(f) =
                                        self.free_flag(c.flags, Region::High(j as usize), t)
                                    {
                                        stay.flags |= 1 << f;
                                        self.emit(
                                            c,
                                            m,
                                            stay,
                                            vec![],
                                            vec![],
                                            false,
                                            SimStep::FinalToken(t, Use::Cover(f as u8)),
                                            &mut out,
                                        );
                                    }
                                }
                            }
                        }
                        Symbol::Hash if cover != GroupCover::Fresh => {
                            self.emit(
                                c,
                                m,
                                with(Mode::Final2(GroupCover::Fresh), a),
                                vec![],
                                vec![],
                                false,
                                SimStep::GroupEnd,
                                &mut out,
                            );
                        }
                        _ => {}
                    }
                }
                if self.accepting(c.astate) {
                    let n = Control {
                        mode: Mode::Final1,
                        astate: AState::Done,
                        ..c.clone()
                    };
                    self.emit(c, m, n, vec![], vec![], false, SimStep::WordEnd, &mut out);
                }
            }
            Mode::Final1 => {
                for (f, &(r, t)) in self.flags.iter().enumerate() {
                    if self.free_flag(c.flags, r, t) != Some(f) {
                        continue;
                    }
                    let fam = match r {
                        Region::Center => Z,
                        Region::High(_) => HIGH,
                        Region::Low(_) => continue,
                    };
                    let mut n = c.clone();
                    n.flags |= 1 << f;
                    self.emit(
                        c,
                        m,
                        n,
                        vec![(self.place(fam, t), 1)],
                        vec![],
                        false,
                        SimStep::FinalCover(t, f as u8),
                        &mut out,
                    );
                }
            }
        }
        let mut seen = HashSet::new();
        out.retain(|(_, c, m)| seen.insert((c.clone(), m.clone())));
        out
    }
}

/// Result of [`oracle_exists_init`].
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub verdict: Verdict,
    /// The target reached and the simulating run, on yes.
    pub witness: Option<(BudgetConfig, Witness<Control, SimStep>)>,
    /// Configurations explored over all targets.
    pub explored: usize,
}

/// Decides (within `budget`) whether some configuration encoded by a word of
/// `a` reaches the upward closure of `u` by `→_A` steps.
pub fn oracle_exists_init(
    net: &PtpnNet,
    a: &Nfa,
    u: &[BudgetConfig],
    budget: ReachBudget,
) -> OracleOutcome {
    if a.is_empty() || u.is_empty() {
        return OracleOutcome {
            verdict: Verdict::No,
            witness: None,
            explored: 0,
        };
    }
    let mut explored = 0;
    let mut unknown = false;
    for c_fin in u {
        let sim = build_sdtn(net, a, c_fin);
        let out = reach_bounded(&sim, &[sim.init()], &sim.final_target(), budget);
        explored += out.explored;
        match out.verdict {
            Verdict::Yes => {
                return OracleOutcome {
                    verdict: Verdict::Yes,
                    witness: Some((c_fin.clone(), out.witness.expect("yes has a witness"))),
                    explored,
                }
            }
            Verdict::Unknown => unknown = true,
            Verdict::No => {}
        }
    }
    OracleOutcome {
        verdict: if unknown {
            Verdict::Unknown
        } else {
            Verdict::No
        },
        witness: None,
        explored,
    }
}

/// Reconstructs the initial configuration read by a simulating run.
pub fn witness_initial_word(w: &Witness<Control, SimStep>) -> Vec<Symbol> {
    let mut word = Vec::new();
    for (l, _, _) in &w.steps {
        match l {
            SimStep::ReadState(q, y) => word.push(Symbol::State(*q, *y)),
            SimStep::LowToken(t, _)
            | SimStep::CenterToken(t)
            | SimStep::Type2Token(t, _)
            | SimStep::FinalToken(t, _) => word.push(Symbol::Token(*t)),
            SimStep::RegionEnd => word.push(Symbol::Dollar),
            SimStep::GroupEnd => word.push(Symbol::Hash),
            _ => {}
        }
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acptpn::{a_successors, leq, OrderKind};
    use crate::aptpn::example;
    use crate::ptpn::{running_example, Arc, Interval, Transition};

    fn b(y: u64, a: AbstractConfig) -> BudgetConfig {
        BudgetConfig {
            budget: y,
            config: a,
        }
    }

    fn tok(p: usize, k: u32) -> AgedToken {
        AgedToken::new(p, k)
    }

    #[test]
    fn empty_shape_encoding() {
        let w = enc(&b(2, AbstractConfig::integral(1, vec![])));
        assert_eq!(w, vec![Symbol::State(1, 2), Symbol::Dollar, Symbol::Dollar]);
        assert_eq!(word_to_string(&w), "<q1,2> $ $");
    }

    #[test]
    fn c1_encoding_layout() {
        // Hand application: state, low groups from the last to the first,
        // $, center, $, high groups from the last to the first.
        let c1 = example::c1();
        let w = enc(&b(3, c1.clone()));
        let mut expect = vec![Symbol::State(c1.state, 3)];
        for (i, g) in c1.low.iter().rev().enumerate() {
            if i > 0 {
                expect.push(Symbol::Hash);
            }
            expect.extend(g.iter().map(|t| Symbol::Token(*t)));
        }
        expect.push(Symbol::Dollar);
        expect.extend(c1.center.iter().map(|t| Symbol::Token(*t)));
        expect.push(Symbol::Dollar);
        for (i, g) in c1.high.iter().rev().enumerate() {
            if i > 0 {
                expect.push(Symbol::Hash);
            }
            expect.extend(g.iter().map(|t| Symbol::Token(*t)));
        }
        assert_eq!(w, expect);
        assert_eq!(dec(&w).unwrap(), b(3, c1));
    }

    #[test]
    fn malformed_words_rejected() {
        let s = Symbol::State(0, 0);
        assert!(dec(&[s, Symbol::Dollar]).is_err());
        assert!(dec(&[s, Symbol::Dollar, Symbol::Dollar, Symbol::Dollar]).is_err());
        assert!(dec(&[s, Symbol::Hash, Symbol::Dollar, Symbol::Dollar]).is_err());
        assert!(dec(&[Symbol::Dollar, Symbol::Dollar]).is_err());
    }

    #[test]
    fn universal_rejects_bad_shapes() {
        let net = running_example();
        let u = automaton_universal(&net, 2);
        let s = Symbol::State(0, 1);
        let t = Symbol::Token(tok(0, 1));
        assert!(u.accepts(&[s, Symbol::Dollar, Symbol::Dollar]));
        assert!(u.accepts(&[s, t, Symbol::Hash, t, Symbol::Dollar, t, Symbol::Dollar, t]));
        assert!(!u.accepts(&[s, Symbol::Dollar, Symbol::Dollar, Symbol::Dollar]));
        assert!(!u.accepts(&[
            s,
            Symbol::Hash,
            Symbol::Hash,
            Symbol::Dollar,
            Symbol::Dollar
        ]));
        assert!(!u.accepts(&[
            s,
            t,
            Symbol::Hash,
            Symbol::Hash,
            t,
            Symbol::Dollar,
            Symbol::Dollar
        ]));
        // Unsorted group.
        let t2 = Symbol::Token(tok(1, 0));
        assert!(!u.accepts(&[s, t2, t, Symbol::Dollar, Symbol::Dollar]));
    }

    #[test]
    fn algebra_basics() {
        let net = running_example();
        let alpha = Alphabet::new(&net, 1);
        let w = enc(&b(1, example::c1()));
        let one = Nfa::singleton(&w);
        assert!(one.accepts(&w));
        assert!(!one.accepts(&w[..w.len() - 1]));
        assert!(one.intersect(&one.complement(&alpha)).is_empty());
        assert!(!one.is_empty());
        assert!(one.complement(&alpha).accepts(&w[..2]));
    }

    #[test]
    fn upward_closure_membership() {
        // Free place p0, cost place p1.
        let net = PtpnNet::new(
            vec!["q".into()],
            vec![("p0".into(), 0), ("p1".into(), 1)],
            vec![],
        )
        .unwrap();
        let base = b(
            1,
            AbstractConfig::normalized(0, vec![vec![tok(1, 0)]], vec![], vec![]),
        );
        let a = automaton_uc(&net, std::slice::from_ref(&base));
        let bigger = b(
            1,
            AbstractConfig::normalized(
                0,
                vec![vec![tok(0, 1)], vec![tok(0, 1), tok(1, 0)]],
                vec![tok(0, 0)],
                vec![vec![tok(0, 1)]],
            ),
        );
        assert!(leq(&net, OrderKind::Free, &base, &bigger).is_some());
        assert!(a.accepts(&enc(&bigger)));
        let with_cost = b(
            1,
            AbstractConfig::normalized(0, vec![vec![tok(1, 0)]], vec![tok(1, 1)], vec![]),
        );
        assert!(!a.accepts(&enc(&with_cost)));
        let empty = automaton_uc(&net, &[b(0, AbstractConfig::integral(0, vec![]))]);
        assert!(empty.accepts(&enc(&b(
            0,
            AbstractConfig::normalized(0, vec![vec![tok(0, 1)]], vec![], vec![])
        ))));
        assert!(!empty.accepts(&enc(&b(0, AbstractConfig::integral(0, vec![tok(1, 0)])))));
    }

    fn one_transition_net() -> PtpnNet {
        // q0 --t (consume p0 with age in [0,1], produce p1 with age 0)--> q1
        let any = Interval::new(0, Some(1), true, true).unwrap();
        let zero = Interval::new(0, Some(0), true, true).unwrap();
        let t = Transition {
            name: "t".into(),
            source: 0,
            target: 1,
            input: vec![Arc::new(0, any)],
            read: vec![],
            output: vec![Arc::new(1, zero)],
            cost: 1,
        };
        PtpnNet::new(
            vec!["q0".into(), "q1".into()],
            vec![("p0".into(), 0), ("p1".into(), 0)],
            vec![t],
        )
        .unwrap()
    }

    fn direct(net: &PtpnNet, init: &BudgetConfig, u: &BudgetConfig) -> bool {
        let mut seen = HashSet::from([init.clone()]);
        let mut queue = VecDeque::from([init.clone()]);
        while let Some(x) = queue.pop_front() {
            if leq(net, OrderKind::Free, u, &x).is_some() {
                return true;
            }
            for (y, _) in a_successors(net, &x) {
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        false
    }

    #[test]
    fn place_count_and_transfer() {
        let net = one_transition_net();
        let init = b(
            1,
            AbstractConfig::normalized(0, vec![vec![tok(0, 1)]], vec![], vec![]),
        );
        let sim = build_sdtn(&net, &Nfa::singleton(&enc(&init)), &init);
        assert_eq!(
            sim.place_count(),
            4 * net.places().len() * (net.cmax() as usize + 2)
        );
        assert_eq!(
            sim.transfer().len(),
            net.places().len() * (net.cmax() as usize + 2)
        );
        assert_eq!(sim.flag_count(), 1);
    }

    #[test]
    fn zero_step_yes() {
        let net = running_example();
        let c = b(2, example::c1());
        let out = oracle_exists_init(
            &net,
            &Nfa::singleton(&enc(&c)),
            std::slice::from_ref(&c),
            ReachBudget::default(),
        );
        assert_eq!(out.verdict, Verdict::Yes);
    }

    #[test]
    fn high_token_consumed_on_debt() {
        // The token sits in a high group; the transition consumes it.
        let net = one_transition_net();
        let init = b(
            1,
            AbstractConfig::normalized(0, vec![vec![tok(0, 0)]], vec![], vec![]),
        );
        let goal = b(0, AbstractConfig::integral(1, vec![tok(1, 0)]));
        assert!(direct(&net, &init, &goal));
        let out = oracle_exists_init(
            &net,
            &Nfa::singleton(&enc(&init)),
            &[goal],
            ReachBudget::default(),
        );
        assert_eq!(out.verdict, Verdict::Yes);
        let (_, w) = out.witness.unwrap();
        let debts: usize = w
            .steps
            .iter()
            .map(|(l, _, _)| {
                if let SimStep::Discrete { debts, .. } = l {
                    debts.len()
                } else {
                    0
                }
            })
            .sum();
        let pays = w
            .steps
            .iter()
            .filter(|(l, _, _)| {
                matches!(
                    l,
                    SimStep::Type2Token(_, Use::Pay) | SimStep::FinalToken(_, Use::Pay)
                )
            })
            .count();
        assert_eq!(debts, pays);
        assert_eq!(witness_initial_word(&w), enc(&init));
    }

    #[test]
    fn wrong_state_is_no() {
        let net = one_transition_net();
        let init = b(1, AbstractConfig::integral(1, vec![tok(0, 0)]));
        let goal = b(0, AbstractConfig::integral(1, vec![tok(1, 0)]));
        assert!(!direct(&net, &init, &goal));
        let out = oracle_exists_init(
            &net,
            &Nfa::singleton(&enc(&init)),
            &[goal],
            ReachBudget::default(),
        );
        assert_eq!(out.verdict, Verdict::No);
    }

    #[test]
    fn unbounded_language_is_unknown() {
        // Every configuration of q0 with budget 1: unboundedly many letters.
        let net = one_transition_net();
        let a = automaton_uc(&net, &[b(1, AbstractConfig::integral(0, vec![]))]);
        let goal = b(9, AbstractConfig::integral(1, vec![]));
        let out = oracle_exists_init(
            &net,
            &a,
            &[goal],
            ReachBudget {
                max_tokens: 3,
                max_states: 20_000,
                jobs: 1,
            },
        );
        assert_eq!(out.verdict, Verdict::Unknown);
    }
}

//! Cost-threshold and cost-optimality decision procedures over the budgeted
//! abstraction, and the translations used for lower bounds.
//!
//! `cost_threshold` runs a bounded forward search over budgeted abstract
//! configurations and, when that is inconclusive (or when asked to
//! cross-check), the phase construction whose oracles are built here.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::acptpn::{
    a_successors, apply_budget_step, b_successors, budget_successors, cost_tokens, in_up_c, leq,
    leq_config, lift, BudgetConfig, OrderKind,
};
use crate::aptpn::{
    apply_timed, discrete_successors, AbstractConfig, AbstractStep, AgedToken, Group, Slot,
};
use crate::encoder::{
    automaton_uc, automaton_universal, oracle_exists_init, Alphabet, Nfa, Symbol,
};
use crate::ptpn::{Arc, Interval, PtpnError, PtpnNet, Transition};
use crate::sdtn::{InhibitorNet, ReachBudget, SdtnConfig, Verdict};
use crate::wqo::{minimize, phase_reachable, PhaseBudget, PhaseOutcome, PhaseStructure, Tri};

/// Errors raised when building instances or translations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Ptpn(#[from] PtpnError),
    #[error("unknown control-state index {0}")]
    UnknownState(usize),
    #[error("the {0} marking must be empty")]
    NonEmptyMarking(&'static str),
}

/// A cost-threshold question: can `q_fin` be reached from the initial
/// configuration with cost at most `v`?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdInstance {
    pub net: PtpnNet,
    pub q_init: usize,
    pub q_fin: usize,
    pub v: u64,
    /// Initial abstract configuration; its state is `q_init`.
    pub init: AbstractConfig,
}

impl ThresholdInstance {
    /// Instance starting from the empty marking in `q_init`.
    pub fn new(net: PtpnNet, q_init: usize, q_fin: usize, v: u64) -> Result<Self, SolverError> {
        let init = AbstractConfig::integral(q_init, vec![]);
        Self::with_init(net, init, q_fin, v)
    }

    /// Instance starting from an arbitrary abstract configuration.
    pub fn with_init(
        net: PtpnNet,
        init: AbstractConfig,
        q_fin: usize,
        v: u64,
    ) -> Result<Self, SolverError> {
        for q in [init.state, q_fin] {
            if q >= net.states().len() {
                return Err(SolverError::UnknownState(q));
            }
        }
        Ok(ThresholdInstance {
            q_init: init.state,
            net,
            q_fin,
            v,
            init,
        })
    }

    /// The same question for another threshold.
    pub fn with_threshold(&self, v: u64) -> Self {
        ThresholdInstance { v, ..self.clone() }
    }

    /// The initial budgeted configuration `(init, v)`.
    pub fn start(&self) -> BudgetConfig {
        lift(self.v, &self.init, self.v).expect("budget equals threshold")
    }
}

/// When the phase construction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Never.
    Off,
    /// Only when the forward search is inconclusive.
    Fallback,
    /// Always, reporting disagreements in the diagnostics.
    CrossCheck,
}

/// Resource caps for the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    /// Stored configurations per search.
    pub max_states: usize,
    /// Configurations with more tokens are pruned.
    pub max_tokens: u32,
    /// Iterations of the phase construction.
    pub phase_iterations: usize,
    /// Rounds of the basis enumeration in the phase construction.
    pub enumeration_rounds: usize,
    /// Largest configuration size listed by the basis enumeration.
    pub enumeration_tokens: usize,
    /// Largest basis kept during backward saturation.
    pub saturation_cap: usize,
    /// Largest threshold tried by [`cost_optimal`].
    pub vmax: u64,
    /// Worker threads for the automata oracle.
    pub jobs: usize,
    pub phase: PhaseMode,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_states: 1_000_000,
            max_tokens: 12,
            phase_iterations: 50,
            enumeration_rounds: 64,
            enumeration_tokens: 3,
            saturation_cap: 2_000,
            vmax: 64,
            jobs: 1,
            phase: PhaseMode::Fallback,
        }
    }
}

impl SolverBudget {
    fn reach(&self) -> ReachBudget {
        ReachBudget {
            max_tokens: self.max_tokens,
            max_states: self.max_states,
            jobs: self.jobs.max(1),
        }
    }
}

/// A budgeted abstract run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractTrace {
    pub start: BudgetConfig,
    pub steps: Vec<(AbstractStep, BudgetConfig)>,
}

impl AbstractTrace {
    /// The last configuration.
    pub fn last(&self) -> &BudgetConfig {
        self.steps.last().map_or(&self.start, |(_, c)| c)
    }

    /// Total cost: the difference between the first and last budgets.
    pub fn cost(&self) -> u64 {
        self.start.budget - self.last().budget
    }
}

/// Replays a trace under the budget discipline; returns the last
/// configuration when every step is enabled and lands on the recorded one.
pub fn replay_witness(net: &PtpnNet, trace: &AbstractTrace) -> Option<BudgetConfig> {
    let mut cur = trace.start.clone();
    for (step, recorded) in &trace.steps {
        let next = apply_budget_step(net, &cur, step)?;
        if &next != recorded {
            return None;
        }
        cur = next;
    }
    Some(cur)
}

/// Resources consumed and sub-verdicts of one threshold query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics {
    /// Verdict of the forward search.
    pub forward: Verdict,
    /// Configurations stored by the forward search.
    pub explored: usize,
    /// The forward search dropped configurations above the token bound.
    pub pruned: bool,
    /// The forward search hit the state budget.
    pub exhausted_budget: bool,
    /// Outcome of the phase construction, when it ran.
    pub phase: Option<PhaseOutcome>,
    /// Calls to the automata oracle.
    pub oracle_calls: usize,
    /// Simulation states explored by the automata oracle.
    pub oracle_explored: usize,
    /// The two procedures gave opposite conclusive answers.
    pub disagreement: bool,
    /// Remaining budget at the end of the witness.
    pub final_budget: Option<u64>,
}

/// Answer of [`cost_threshold`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub answer: Verdict,
    pub witness: Option<AbstractTrace>,
    pub diagnostics: Diagnostics,
}

struct Search {
    verdict: Verdict,
    path: Option<AbstractTrace>,
    explored: usize,
    pruned: bool,
    exhausted: bool,
}

/// Breadth-first search from `starts` until `goal` holds.
fn forward_search(
    net: &PtpnNet,
    starts: &[BudgetConfig],
    goal: impl Fn(&BudgetConfig) -> bool,
    succ: impl Fn(&PtpnNet, &BudgetConfig) -> Vec<(BudgetConfig, AbstractStep)>,
    max_tokens: u32,
    max_states: usize,
) -> Search {
    let mut nodes: Vec<(BudgetConfig, Option<(usize, AbstractStep)>)> = Vec::new();
    let mut index: HashMap<BudgetConfig, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut pruned = false;
    let path = |nodes: &Vec<(BudgetConfig, Option<(usize, AbstractStep)>)>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((p, s)) = &nodes[i].1 {
            steps.push((s.clone(), nodes[i].0.clone()));
            i = *p;
        }
        steps.reverse();
        AbstractTrace {
            start: nodes[i].0.clone(),
            steps,
        }
    };
    for s in starts {
        if index.contains_key(s) {
            continue;
        }
        if s.config.size() > max_tokens as usize {
            pruned = true;
            continue;
        }
        index.insert(s.clone(), nodes.len());
        queue.push_back(nodes.len());
        nodes.push((s.clone(), None));
    }
    while let Some(i) = queue.pop_front() {
        if goal(&nodes[i].0) {
            let explored = nodes.len();
            return Search {
                verdict: Verdict::Yes,
                path: Some(path(&nodes, i)),
                explored,
                pruned,
                exhausted: false,
            };
        }
        let cur = nodes[i].0.clone();
        for (next, step) in succ(net, &cur) {
            if index.contains_key(&next) {
                continue;
            }
            if next.config.size() > max_tokens as usize {
                pruned = true;
                continue;
            }
            if nodes.len() >= max_states {
                return Search {
                    verdict: Verdict::Unknown,
                    path: None,
                    explored: nodes.len(),
                    pruned,
                    exhausted: true,
                };
            }
            index.insert(next.clone(), nodes.len());
            queue.push_back(nodes.len());
            nodes.push((next, Some((i, step))));
        }
    }
    let verdict = if pruned {
        Verdict::Unknown
    } else {
        Verdict::No
    };
    Search {
        verdict,
        path: None,
        explored: nodes.len(),
        pruned,
        exhausted: false,
    }
}

fn tri(v: Verdict) -> Tri {
    match v {
        Verdict::Yes => Tri::Yes,
        Verdict::No => Tri::No,
        Verdict::Unknown => Tri::Unknown,
    }
}

fn verdict(t: Tri) -> Verdict {
    match t {
        Tri::Yes => Verdict::Yes,
        Tri::No => Verdict::No,
        Tri::Unknown => Verdict::Unknown,
    }
}

/// Every way of adding `tok` to `a`: into the center, into an existing group,
/// or as a new group in any gap. The flag tells whether the age is integral.
pub fn insertions(a: &AbstractConfig, tok: AgedToken) -> Vec<(AbstractConfig, bool)> {
    let mut out = Vec::new();
    let mut c = a.clone();
    c.center.push(tok);
    out.push((
        AbstractConfig::normalized(c.state, c.high, c.center, c.low),
        true,
    ));
    let side = |groups: &Vec<Group>,
                put: &dyn Fn(Vec<Group>) -> AbstractConfig,
                out: &mut Vec<(AbstractConfig, bool)>| {
        for i in 0..groups.len() {
            let mut gs = groups.clone();
            gs[i].push(tok);
            out.push((put(gs), false));
        }
        for j in 0..=groups.len() {
            let mut gs = groups.clone();
            gs.insert(j, vec![tok]);
            out.push((put(gs), false));
        }
    };
    side(
        &a.high,
        &|gs| AbstractConfig::normalized(a.state, gs, a.center.clone(), a.low.clone()),
        &mut out,
    );
    side(
        &a.low,
        &|gs| AbstractConfig::normalized(a.state, a.high.clone(), a.center.clone(), gs),
        &mut out,
    );
    out
}

/// Ages a token may have had before one increment.
fn plus_inverse(t: AgedToken, cmax: u32) -> Vec<AgedToken> {
    let mut v = Vec::new();
    if t.age >= 1 {
        v.push(AgedToken::new(t.place, t.age - 1));
    }
    if t.age == cmax + 1 {
        v.push(t);
    }
    v
}

/// Every group `g` with `plus(g) = group`.
fn group_preimages(group: &Group, cmax: u32) -> Vec<Group> {
    let mut acc: BTreeSet<Group> = BTreeSet::from([vec![]]);
    for &t in group {
        let opts = plus_inverse(t, cmax);
        acc = acc
            .iter()
            .flat_map(|g| {
                opts.iter().map(move |&o| {
                    let mut h = g.clone();
                    h.push(o);
                    h.sort();
                    h
                })
            })
            .collect();
    }
    acc.into_iter().collect()
}

/// Every list of groups obtained by choosing a preimage for each group.
fn groups_preimages(groups: &[Group], cmax: u32) -> Vec<Vec<Group>> {
    let mut acc: Vec<Vec<Group>> = vec![vec![]];
    for g in groups {
        let pre = group_preimages(g, cmax);
        acc = acc
            .iter()
            .flat_map(|prefix| {
                pre.iter().map(move |p| {
                    let mut v = prefix.clone();
                    v.push(p.clone());
                    v
                })
            })
            .collect();
    }
    acc
}

fn fits(iv: &Interval, age: u32, integral: bool) -> bool {
    if integral {
        iv.contains_int(age)
    } else {
        iv.models_eps(age)
    }
}

/// Adds one token per arc, each anywhere its interval allows.
fn add_extras(
    net: &PtpnNet,
    base: BTreeSet<AbstractConfig>,
    arcs: &[&Arc],
) -> BTreeSet<AbstractConfig> {
    let mut cur = base;
    for arc in arcs {
        let mut next = BTreeSet::new();
        for c in &cur {
            for age in 0..=net.cmax() + 1 {
                for (d, integral) in insertions(c, AgedToken::new(arc.place, age)) {
                    if fits(&arc.interval, age, integral) {
                        next.insert(d);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Removes tokens at `(slot, index)` positions and drops emptied groups.
fn remove_positions(a: &AbstractConfig, state: usize, pos: &[(Slot, usize)]) -> AbstractConfig {
    let keep = |slot: Slot, g: &Group| -> Group {
        g.iter()
            .enumerate()
            .filter(|(i, _)| !pos.contains(&(slot, *i)))
            .map(|(_, t)| *t)
            .collect()
    };
    AbstractConfig::normalized(
        state,
        a.high
            .iter()
            .enumerate()
            .map(|(i, g)| keep(Slot::High(i), g))
            .collect(),
        keep(Slot::Center, &a.center),
        a.low
            .iter()
            .enumerate()
            .map(|(i, g)| keep(Slot::Low(i), g))
            .collect(),
    )
}

/// Minimal predecessors (under `≤^fc`) of `↑beta` by one firing of `t`.
pub fn min_pre_discrete(net: &PtpnNet, v: u64, beta: &BudgetConfig, t: usize) -> Vec<BudgetConfig> {
    let tr = &net.transitions()[t];
    if tr.target != beta.config.state || beta.budget + tr.cost > v {
        return Vec::new();
    }
    let positions: Vec<(Slot, usize, AgedToken)> = beta
        .config
        .slots()
        .into_iter()
        .flat_map(|(s, g)| {
            g.iter()
                .enumerate()
                .map(move |(i, t)| (s, i, *t))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut removals: BTreeSet<Vec<(Slot, usize)>> = BTreeSet::new();
    fn rec(
        j: usize,
        arcs: &[Arc],
        positions: &[(Slot, usize, AgedToken)],
        chosen: &mut Vec<(Slot, usize)>,
        out: &mut BTreeSet<Vec<(Slot, usize)>>,
    ) {
        if j == arcs.len() {
            let mut c = chosen.clone();
            c.sort();
            out.insert(c);
            return;
        }
        rec(j + 1, arcs, positions, chosen, out);
        for &(s, i, tok) in positions {
            if tok.place == arcs[j].place
                && !chosen.contains(&(s, i))
                && fits(&arcs[j].interval, tok.age, s == Slot::Center)
            {
                chosen.push((s, i));
                rec(j + 1, arcs, positions, chosen, out);
                chosen.pop();
            }
        }
    }
    rec(0, &tr.output, &positions, &mut vec![], &mut removals);
    let bases: BTreeSet<AbstractConfig> = removals
        .iter()
        .map(|r| remove_positions(&beta.config, tr.source, r))
        .collect();
    let mut cands = BTreeSet::new();
    for mask in 0..(1usize << tr.read.len()) {
        let mut extra: Vec<&Arc> = tr.input.iter().collect();
        extra.extend(
            tr.read
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a),
        );
        cands.extend(add_extras(net, bases.clone(), &extra));
    }
    let budget = beta.budget + tr.cost;
    let verified: Vec<BudgetConfig> = cands
        .into_iter()
        .filter(|c| {
            discrete_successors(net, c, t)
                .expect("index in range")
                .iter()
                .any(|(s, _)| leq_config(net, OrderKind::Any, &beta.config, s).is_some())
        })
        .map(|config| BudgetConfig { budget, config })
        .collect();
    minimize(&verified, |a, b| leq(net, OrderKind::Any, a, b).is_some())
}

/// Minimal predecessors (under `≤^fc`) of `↑beta` by timed steps of types 1 and 2.
pub fn min_pre_fast(net: &PtpnNet, beta: &BudgetConfig) -> Vec<BudgetConfig> {
    let b = &beta.config;
    let mut cands: Vec<(AbstractConfig, AbstractStep)> = Vec::new();
    if b.center.is_empty() && !b.low.is_empty() {
        let c = AbstractConfig::normalized(
            b.state,
            b.high.clone(),
            b.low[0].clone(),
            b.low[1..].to_vec(),
        );
        cands.push((c, AbstractStep::Type1));
    }
    if !b.center.is_empty() {
        for pre in group_preimages(&b.center, net.cmax()) {
            let mut high = b.high.clone();
            high.push(pre);
            cands.push((
                AbstractConfig::normalized(b.state, high, vec![], b.low.clone()),
                AbstractStep::Type2,
            ));
        }
    }
    let verified: Vec<BudgetConfig> = cands
        .into_iter()
        .filter(|(c, s)| {
            apply_timed(net, c, s).is_ok_and(|d| leq_config(net, OrderKind::Any, b, &d).is_some())
        })
        .map(|(config, _)| BudgetConfig {
            budget: beta.budget,
            config,
        })
        .collect();
    minimize(&verified, |a, b| leq(net, OrderKind::Any, a, b).is_some())
}

/// Minimal predecessors (under `≤^fc`) of `↑beta` by one `→_A` step.
pub fn min_pre_a(net: &PtpnNet, v: u64, beta: &BudgetConfig) -> Vec<BudgetConfig> {
    let mut all = min_pre_fast(net, beta);
    for t in 0..net.transitions().len() {
        all.extend(min_pre_discrete(net, v, beta, t));
    }
    minimize(&all, |a, b| leq(net, OrderKind::Any, a, b).is_some())
}

/// Minimal predecessors (under `≤^f`) of `↑x` by one timed step of type 3
/// or 4, restricted to the upward closure of the cost-only configurations.
pub fn min_pre_slow(net: &PtpnNet, v: u64, x: &BudgetConfig) -> Vec<BudgetConfig> {
    let cmax = net.cmax();
    let a = &x.config;
    let rate = a.storage_rate(net);
    if x.budget + rate > v {
        return Vec::new();
    }
    let budget = x.budget + rate;
    let mut cands: BTreeSet<AbstractConfig> = BTreeSet::new();
    let lows_t3 = groups_preimages(&a.low, cmax);
    let center_pre = if a.center.is_empty() {
        vec![]
    } else {
        group_preimages(&a.center, cmax)
    };
    for i in 0..=a.high.len() {
        let h1 = groups_preimages(&a.high[..i], cmax);
        let mut splits: Vec<(Group, Vec<Group>)> = vec![(vec![], a.high[i..].to_vec())];
        if i < a.high.len() {
            splits.push((a.high[i].clone(), a.high[i + 1..].to_vec()));
        }
        for (center, h3) in &splits {
            for high in &h1 {
                if a.center.is_empty() {
                    for lo in &lows_t3 {
                        let mut low = h3.clone();
                        low.extend(lo.iter().cloned());
                        cands.insert(AbstractConfig::normalized(
                            a.state,
                            high.clone(),
                            center.clone(),
                            low,
                        ));
                    }
                }
                for cp in &center_pre {
                    for lo in &lows_t3 {
                        let mut low = h3.clone();
                        low.push(cp.clone());
                        low.extend(lo.iter().cloned());
                        cands.insert(AbstractConfig::normalized(
                            a.state,
                            high.clone(),
                            center.clone(),
                            low,
                        ));
                    }
                }
            }
        }
    }
    let verified: Vec<BudgetConfig> = cands
        .into_iter()
        .map(|config| BudgetConfig { budget, config })
        .filter(|c| in_up_c(net, v, c))
        .filter(|c| {
            b_successors(net, c)
                .iter()
                .any(|(d, _)| leq(net, OrderKind::Free, x, d).is_some())
        })
        .collect();
    minimize(&verified, |a, b| leq(net, OrderKind::Free, a, b).is_some())
}

/// Every configuration obtained from `k` by adding at most `extra` tokens on
/// cost places.
fn cost_extensions(
    net: &PtpnNet,
    k: &BudgetConfig,
    extra: usize,
    cap: usize,
) -> Option<Vec<BudgetConfig>> {
    let cost_places: Vec<usize> = (0..net.places().len())
        .filter(|&p| net.is_cost_place(p))
        .collect();
    let mut all: BTreeSet<AbstractConfig> = BTreeSet::from([k.config.clone()]);
    let mut layer = all.clone();
    for _ in 0..extra {
        let mut next = BTreeSet::new();
        for c in &layer {
            for &p in &cost_places {
                for age in 0..=net.cmax() + 1 {
                    for (d, _) in insertions(c, AgedToken::new(p, age)) {
                        next.insert(d);
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        if all.len() > cap {
            return None;
        }
        layer = next;
    }
    Some(
        all.into_iter()
            .map(|config| BudgetConfig {
                budget: k.budget,
                config,
            })
            .collect(),
    )
}

/// Automaton accepting words with at most `v` tokens on cost places.
fn cost_letters_at_most(net: &PtpnNet, v: u64) -> Nfa {
    let alphabet = Alphabet::new(net, v);
    let n = v as usize + 1;
    let mut edges = vec![Vec::new(); n];
    for (i, out) in edges.iter_mut().enumerate() {
        for s in &alphabet.symbols {
            match s {
                Symbol::Token(t) if net.is_cost_place(t.place) => {
                    if i + 1 < n {
                        out.push((Some(*s), i + 1));
                    }
                }
                _ => out.push((Some(*s), i)),
            }
        }
    }
    Nfa {
        initial: 0,
        finals: (0..n).collect(),
        edges,
    }
}

/// The phase structure of a threshold instance: `→_A` are discrete steps and
/// timed steps of types 1 and 2, `→_B` are timed steps of types 3 and 4, the
/// order is `≤^f`, and `C` holds the cost-only configurations of size `≤ v`.
pub struct ThresholdPhase<'a> {
    pub instance: &'a ThresholdInstance,
    pub budget: SolverBudget,
    pub oracle_calls: usize,
    pub oracle_explored: usize,
    levels: Vec<Vec<AbstractConfig>>,
}

impl<'a> ThresholdPhase<'a> {
    pub fn new(instance: &'a ThresholdInstance, budget: SolverBudget) -> Self {
        ThresholdPhase {
            instance,
            budget,
            oracle_calls: 0,
            oracle_explored: 0,
            levels: vec![],
        }
    }

    fn net(&self) -> &'a PtpnNet {
        &self.instance.net
    }

    /// Minimal elements (under `≤^fc`) of the configurations reaching the
    /// final state by `→_A` steps; `None` when the cap is exceeded.
    pub fn saturate_final(&self) -> Option<Vec<BudgetConfig>> {
        let net = self.net();
        let v = self.instance.v;
        let any = |a: &BudgetConfig, b: &BudgetConfig| leq(net, OrderKind::Any, a, b).is_some();
        let mut basis: Vec<BudgetConfig> = (0..=v)
            .map(|y| BudgetConfig {
                budget: y,
                config: AbstractConfig::integral(self.instance.q_fin, vec![]),
            })
            .collect();
        let mut work: Vec<BudgetConfig> = basis.clone();
        while let Some(b) = work.pop() {
            if !basis.contains(&b) {
                continue;
            }
            for p in min_pre_a(net, v, &b) {
                if basis.iter().any(|x| any(x, &p)) {
                    continue;
                }
                if p.config.size() > self.budget.max_tokens as usize {
                    return None;
                }
                basis.retain(|x| !any(&p, x));
                basis.push(p.clone());
                work.push(p);
                if basis.len() > self.budget.saturation_cap {
                    return None;
                }
            }
        }
        basis.sort();
        Some(basis)
    }

    fn level(&mut self, r: usize) -> Vec<AbstractConfig> {
        let net = self.net();
        if self.levels.is_empty() {
            self.levels.push(vec![AbstractConfig::integral(0, vec![])]);
        }
        while self.levels.len() <= r {
            let last = self.levels.last().expect("nonempty");
            let mut next = BTreeSet::new();
            for c in last {
                for p in 0..net.places().len() {
                    for age in 0..=net.cmax() + 1 {
                        for (d, _) in insertions(c, AgedToken::new(p, age)) {
                            next.insert(d);
                        }
                    }
                }
            }
            self.levels.push(next.into_iter().collect());
        }
        self.levels[r].clone()
    }
}

impl PhaseStructure for ThresholdPhase<'_> {
    type State = BudgetConfig;

    fn leq(&self, a: &BudgetConfig, b: &BudgetConfig) -> bool {
        leq(self.net(), OrderKind::Free, a, b).is_some()
    }

    fn init_reaches_final(&mut self) -> Tri {
        let q = self.instance.q_fin;
        let s = forward_search(
            self.net(),
            &[self.instance.start()],
            |b| b.config.state == q,
            a_successors,
            self.budget.max_tokens,
            self.budget.max_states,
        );
        tri(s.verdict)
    }

    fn final_basis(&mut self) -> Option<Vec<BudgetConfig>> {
        let net = self.net();
        let v = self.instance.v;
        let sat = self.saturate_final()?;
        let mut all = Vec::new();
        for k in &sat {
            let ct = cost_tokens(net, &k.config) as u64;
            if ct > v {
                continue;
            }
            all.extend(cost_extensions(
                net,
                k,
                (v - ct) as usize,
                self.budget.saturation_cap,
            )?);
            if all.len() > self.budget.saturation_cap * 8 {
                return None;
            }
        }
        all.retain(|c| in_up_c(net, v, c));
        Some(minimize(&all, |a, b| {
            leq(net, OrderKind::Free, a, b).is_some()
        }))
    }

    fn pre_b_basis(&mut self, x: &[BudgetConfig]) -> Option<Vec<BudgetConfig>> {
        let net = self.net();
        let all: Vec<BudgetConfig> = x
            .iter()
            .flat_map(|b| min_pre_slow(net, self.instance.v, b))
            .collect();
        Some(minimize(&all, |a, b| {
            leq(net, OrderKind::Free, a, b).is_some()
        }))
    }

    fn pre_a_member(&mut self, s: &BudgetConfig, u: &[BudgetConfig]) -> Tri {
        let net = self.net();
        let r = forward_search(
            net,
            std::slice::from_ref(s),
            |b| u.iter().any(|x| leq(net, OrderKind::Free, x, b).is_some()),
            a_successors,
            self.budget.max_tokens,
            self.budget.max_states,
        );
        tri(r.verdict)
    }

    fn pre_a_outside(&mut self, x: &[BudgetConfig], u: &[BudgetConfig]) -> Tri {
        let net = self.net();
        let v = self.instance.v;
        let alphabet = Alphabet::new(net, v);
        let c = automaton_universal(net, v).intersect(&cost_letters_at_most(net, v));
        let a = automaton_uc(net, x).complement(&alphabet).intersect(&c);
        let out = oracle_exists_init(net, &a, u, self.budget.reach());
        self.oracle_calls += 1;
        self.oracle_explored += out.explored;
        tri(out.verdict)
    }

    fn enumerate_up_c(&mut self, r: usize) -> Vec<BudgetConfig> {
        if r > self.budget.enumeration_tokens {
            return Vec::new();
        }
        let net = self.net();
        let v = self.instance.v;
        let states = net.states().len();
        let shapes = self.level(r);
        let mut out = Vec::new();
        for shape in shapes {
            if cost_tokens(net, &shape) as u64 > v {
                continue;
            }
            for q in 0..states {
                for y in 0..=v {
                    let mut config = shape.clone();
                    config.state = q;
                    out.push(BudgetConfig { budget: y, config });
                }
            }
        }
        out
    }

    fn init(&self) -> BudgetConfig {
        self.instance.start()
    }
}

/// Decides (within the budget) whether `q_fin` is reachable with cost at most
/// `v`. A yes answer always carries a replayable witness.
pub fn cost_threshold(instance: &ThresholdInstance, budget: &SolverBudget) -> SolveResult {
    let start = instance.start();
    let mut diagnostics = Diagnostics {
        forward: Verdict::Unknown,
        explored: 0,
        pruned: false,
        exhausted_budget: false,
        phase: None,
        oracle_calls: 0,
        oracle_explored: 0,
        disagreement: false,
        final_budget: None,
    };
    if start.config.state == instance.q_fin {
        diagnostics.forward = Verdict::Yes;
        diagnostics.final_budget = Some(start.budget);
        return SolveResult {
            answer: Verdict::Yes,
            witness: Some(AbstractTrace {
                start,
                steps: vec![],
            }),
            diagnostics,
        };
    }
    let q = instance.q_fin;
    let s = forward_search(
        &instance.net,
        &[start],
        |b| b.config.state == q,
        budget_successors,
        budget.max_tokens,
        budget.max_states,
    );
    diagnostics.forward = s.verdict;
    diagnostics.explored = s.explored;
    diagnostics.pruned = s.pruned;
    diagnostics.exhausted_budget = s.exhausted;
    diagnostics.final_budget = s.path.as_ref().map(|p| p.last().budget);
    let run_phase = match budget.phase {
        PhaseMode::Off => false,
        PhaseMode::Fallback => s.verdict == Verdict::Unknown,
        PhaseMode::CrossCheck => true,
    };
    let mut answer = s.verdict;
    if run_phase {
        let mut p = ThresholdPhase::new(instance, *budget);
        let out = phase_reachable(
            &mut p,
            PhaseBudget {
                max_iterations: budget.phase_iterations,
                enumeration_rounds: budget.enumeration_rounds,
            },
        );
        diagnostics.oracle_calls = p.oracle_calls;
        diagnostics.oracle_explored = p.oracle_explored;
        let pv = verdict(out.answer);
        diagnostics.disagreement = matches!(
            (s.verdict, pv),
            (Verdict::Yes, Verdict::No) | (Verdict::No, Verdict::Yes)
        );
        if s.verdict == Verdict::Unknown && pv == Verdict::No {
            answer = Verdict::No;
        }
        diagnostics.phase = Some(out);
    }
    SolveResult {
        answer,
        witness: s.path,
        diagnostics,
    }
}

/// Optimal cost of reaching a control-state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptCost {
    Finite(u64),
    Infinity,
    Unknown,
}

/// Answer of [`cost_optimal`] with every threshold verdict computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalResult {
    pub cost: OptCost,
    /// Verdict of the zero-cost reachability check.
    pub reachable: Verdict,
    /// `(v, verdict)` for each threshold tried.
    pub thresholds: Vec<(u64, Verdict)>,
    /// Witness for the optimal threshold.
    pub witness: Option<AbstractTrace>,
}

/// Least `v` for which the threshold question answers yes.
pub fn cost_optimal(
    net: &PtpnNet,
    init: &AbstractConfig,
    q_fin: usize,
    budget: &SolverBudget,
) -> Result<OptimalResult, SolverError> {
    let free = net.with_costs(|_| 0, |_| 0);
    let reach = cost_threshold(
        &ThresholdInstance::with_init(free, init.clone(), q_fin, 0)?,
        budget,
    );
    let mut res = OptimalResult {
        cost: OptCost::Unknown,
        reachable: reach.answer,
        thresholds: vec![],
        witness: None,
    };
    match reach.answer {
        Verdict::No => {
            res.cost = OptCost::Infinity;
            return Ok(res);
        }
        Verdict::Unknown => return Ok(res),
        Verdict::Yes => {}
    }
    let base = ThresholdInstance::with_init(net.clone(), init.clone(), q_fin, 0)?;
    for v in 0..=budget.vmax {
        let r = cost_threshold(&base.with_threshold(v), budget);
        res.thresholds.push((v, r.answer));
        match r.answer {
            Verdict::Yes => {
                res.cost = OptCost::Finite(v);
                res.witness = r.witness;
                return Ok(res);
            }
            Verdict::Unknown => return Ok(res),
            Verdict::No => {}
        }
    }
    Ok(res)
}

/// Names of the control-states and places added by
/// [`translate_inhibitor_to_ptpn`].
pub const FINAL_STATE: &str = "q_final";
pub const WAIT_STATE_1: &str = "q_wait1";
pub const WAIT_STATE_2: &str = "q_wait2";
pub const WAIT_PLACE_1: &str = "p_wait1";
pub const WAIT_PLACE_2: &str = "p_wait2";

/// Translates control-state reachability of an inhibitor net (from and to the
/// empty marking) into the question whether the optimal cost is zero.
///
/// Original places cost 1, everything else is free. Inputs on the inhibitor
/// place must have age exactly 0; the inhibited transition waits a positive
/// delay between consuming its inputs and producing its outputs; reaching the
/// target then requires a further wait of one time unit.
pub fn translate_inhibitor_to_ptpn(
    net: &InhibitorNet,
    init: &SdtnConfig,
    fin: &SdtnConfig,
) -> Result<ThresholdInstance, SolverError> {
    if init.marking.iter().any(|&k| k > 0) {
        return Err(SolverError::NonEmptyMarking("initial"));
    }
    if fin.marking.iter().any(|&k| k > 0) {
        return Err(SolverError::NonEmptyMarking("final"));
    }
    let nq = net.states().len();
    for q in [init.state, fin.state] {
        if q >= nq {
            return Err(SolverError::UnknownState(q));
        }
    }
    let np = net.places().len();
    let (pi, ti) = net.inhibitor();
    let (q_final, q_wait1, q_wait2) = (nq, nq + 1, nq + 2);
    let (p_wait1, p_wait2) = (np, np + 1);
    let mut states: Vec<String> = net.states().to_vec();
    states.extend([FINAL_STATE, WAIT_STATE_1, WAIT_STATE_2].map(String::from));
    let mut places: Vec<(String, u64)> = net.places().iter().map(|p| (p.clone(), 1)).collect();
    places.push((WAIT_PLACE_1.into(), 0));
    places.push((WAIT_PLACE_2.into(), 0));
    let zero = Interval::closed(0, 0);
    let arcs = |ms: &[(usize, u32)], input: bool| -> Vec<Arc> {
        ms.iter()
            .flat_map(|&(p, k)| {
                let iv = if !input || p == pi {
                    zero
                } else {
                    Interval::at_least(0)
                };
                std::iter::repeat_n(Arc::new(p, iv), k as usize)
            })
            .collect()
    };
    let mut transitions = Vec::new();
    for (i, t) in net.transitions().iter().enumerate() {
        if i == ti {
            transitions.push(Transition {
                name: format!("{}_start", t.name),
                source: t.from,
                target: q_wait1,
                input: arcs(&t.input, true),
                read: vec![],
                output: vec![Arc::new(p_wait1, zero)],
                cost: 0,
            });
            transitions.push(Transition {
                name: format!("{}_end", t.name),
                source: q_wait1,
                target: t.to,
                input: vec![Arc::new(p_wait1, Interval::new(0, Some(1), false, true)?)],
                read: vec![],
                output: arcs(&t.output, false),
                cost: 0,
            });
        } else {
            transitions.push(Transition {
                name: t.name.clone(),
                source: t.from,
                target: t.to,
                input: arcs(&t.input, true),
                read: vec![],
                output: arcs(&t.output, false),
                cost: 0,
            });
        }
    }
    transitions.push(Transition {
        name: "wait_start".into(),
        source: fin.state,
        target: q_wait2,
        input: vec![],
        read: vec![],
        output: vec![Arc::new(p_wait2, zero)],
        cost: 0,
    });
    transitions.push(Transition {
        name: "wait_end".into(),
        source: q_wait2,
        target: q_final,
        input: vec![Arc::new(p_wait2, Interval::closed(1, 1))],
        read: vec![],
        output: vec![],
        cost: 0,
    });
    let ptpn = PtpnNet::new(states, places, transitions)?;
    ThresholdInstance::new(ptpn, init.state, q_final, 0)
}

/// Control-state reachability of a timed Petri net as a zero-threshold
/// question on the same net with every cost set to zero.
pub fn translate_tpn_to_ptpn(
    tpn: &PtpnNet,
    q_init: usize,
    q_fin: usize,
) -> Result<ThresholdInstance, SolverError> {
    ThresholdInstance::new(tpn.with_costs(|_| 0, |_| 0), q_init, q_fin, 0)
}

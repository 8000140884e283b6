//! Simultaneous-disjoint-transfer nets, Petri nets with one inhibitor arc,
//! the reductions between them, generalized reachability targets, and a
//! bounded explicit-state reachability engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ptpn::{rat_int, Rat};

/// A marking as a dense count vector indexed by place.
pub type Marking = Vec<u32>;

/// A multiset of places as sorted `(place, count)` pairs with positive counts.
pub type Multiset = Vec<(usize, u32)>;

/// Normalizes a list of places (with repetition) into a [`Multiset`].
pub fn multiset(places: &[usize]) -> Multiset {
    let mut m: BTreeMap<usize, u32> = BTreeMap::new();
    for &p in places {
        *m.entry(p).or_default() += 1;
    }
    m.into_iter().collect()
}

/// Adds `extra` to a multiset.
pub fn multiset_add(a: &Multiset, extra: &Multiset) -> Multiset {
    let mut m: BTreeMap<usize, u32> = a.iter().copied().collect();
    for &(p, c) in extra {
        *m.entry(p).or_default() += c;
    }
    m.into_iter().filter(|&(_, c)| c > 0).collect()
}

fn count_in(m: &Multiset, p: usize) -> u32 {
    m.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, c)| c)
}

/// Errors raised by net construction and firing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdtnError {
    #[error("unknown state index {0}")]
    UnknownState(usize),
    #[error("unknown place index {0}")]
    UnknownPlace(usize),
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
    #[error("transfer pairs {0:?} and {1:?} are neither equal nor disjoint")]
    OverlappingTransfer((usize, usize), (usize, usize)),
    #[error("transfer transition {0} touches transfer place {1}")]
    TransferTouchesArc(String, usize),
    #[error("transition {0} is not enabled")]
    Disabled(String),
    #[error("marking has {got} entries, the net has {expected} places")]
    MarkingSize { got: usize, expected: usize },
}

/// A transition `(q1, q2, I, O)`; transfer transitions also apply the
/// global transfer relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SdtnTransition<C> {
    pub name: String,
    pub from: C,
    pub to: C,
    pub input: Multiset,
    pub output: Multiset,
    pub transfer: bool,
}

/// A simultaneous-disjoint-transfer net with explicit control-states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdtnNet {
    states: Vec<String>,
    places: Vec<String>,
    transitions: Vec<SdtnTransition<usize>>,
    transfer: Vec<(usize, usize)>,
}

/// Checks the disjointness restrictions of a transfer relation against the
/// transfer transitions.
pub fn check_disjointness<C>(
    transfer: &[(usize, usize)],
    transitions: &[SdtnTransition<C>],
) -> Result<(), SdtnError> {
    for (i, a) in transfer.iter().enumerate() {
        for b in &transfer[i + 1..] {
            let distinct: BTreeSet<usize> = [a.0, a.1, b.0, b.1].into_iter().collect();
            if a != b && distinct.len() != 4 {
                return Err(SdtnError::OverlappingTransfer(*a, *b));
            }
        }
        if a.0 == a.1 {
            return Err(SdtnError::OverlappingTransfer(*a, *a));
        }
    }
    for t in transitions.iter().filter(|t| t.transfer) {
        for &(sr, tg) in transfer {
            for p in [sr, tg] {
                if count_in(&t.input, p) > 0 || count_in(&t.output, p) > 0 {
                    return Err(SdtnError::TransferTouchesArc(t.name.clone(), p));
                }
            }
        }
    }
    Ok(())
}

impl SdtnNet {
    /// Builds a net, validating indices and the disjointness restrictions.
    pub fn new(
        states: Vec<String>,
        places: Vec<String>,
        transitions: Vec<SdtnTransition<usize>>,
        transfer: Vec<(usize, usize)>,
    ) -> Result<Self, SdtnError> {
        for t in &transitions {
            for s in [t.from, t.to] {
                if s >= states.len() {
                    return Err(SdtnError::UnknownState(s));
                }
            }
            for &(p, _) in t.input.iter().chain(&t.output) {
                if p >= places.len() {
                    return Err(SdtnError::UnknownPlace(p));
                }
            }
        }
        for &(a, b) in &transfer {
            for p in [a, b] {
                if p >= places.len() {
                    return Err(SdtnError::UnknownPlace(p));
                }
            }
        }
        let mut transfer = transfer;
        transfer.sort();
        transfer.dedup();
        check_disjointness(&transfer, &transitions)?;
        Ok(SdtnNet {
            states,
            places,
            transitions,
            transfer,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[SdtnTransition<usize>] {
        &self.transitions
    }

    /// The global transfer relation.
    pub fn transfer(&self) -> &[(usize, usize)] {
        &self.transfer
    }
}

/// A configuration `(q, M)` of an explicit net.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SdtnConfig {
    pub state: usize,
    pub marking: Marking,
}

impl SdtnConfig {
    pub fn new(state: usize, marking: Marking) -> Self {
        SdtnConfig { state, marking }
    }
}

/// Fires `t` from `(q, m)` under the transfer relation; `None` if disabled.
pub fn fire_transition<C: Clone + PartialEq>(
    transfer: &[(usize, usize)],
    q: &C,
    m: &Marking,
    t: &SdtnTransition<C>,
) -> Option<(C, Marking)> {
    if &t.from != q || t.input.iter().any(|&(p, c)| m[p] < c) {
        return None;
    }
    let mut next = m.clone();
    for &(p, c) in &t.input {
        next[p] -= c;
    }
    for &(p, c) in &t.output {
        next[p] += c;
    }
    if t.transfer {
        for &(sr, tg) in transfer {
            next[tg] += next[sr];
            next[sr] = 0;
        }
        assert!(
            transfer.iter().all(|&(sr, _)| next[sr] == 0),
            "transfer sources must be empty"
        );
    }
    Some((t.to.clone(), next))
}

/// Fires transition `t` of an explicit net.
pub fn fire_sdtn(net: &SdtnNet, config: &SdtnConfig, t: usize) -> Result<SdtnConfig, SdtnError> {
    let tr = net
        .transitions
        .get(t)
        .ok_or(SdtnError::UnknownTransition(t))?;
    if config.marking.len() != net.places.len() {
        return Err(SdtnError::MarkingSize {
            got: config.marking.len(),
            expected: net.places.len(),
        });
    }
    fire_transition(&net.transfer, &config.state, &config.marking, tr)
        .map(|(state, marking)| SdtnConfig { state, marking })
        .ok_or_else(|| SdtnError::Disabled(tr.name.clone()))
}

/// An ordinary Petri net transition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PnTransition {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub input: Multiset,
    pub output: Multiset,
}

/// A Petri net with control-states and one inhibitor arc `(p^i, t^i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InhibitorNet {
    states: Vec<String>,
    places: Vec<String>,
    transitions: Vec<PnTransition>,
    inhibitor: (usize, usize),
}

impl InhibitorNet {
    /// Builds a net, validating indices.
    pub fn new(
        states: Vec<String>,
        places: Vec<String>,
        transitions: Vec<PnTransition>,
        inhibitor: (usize, usize),
    ) -> Result<Self, SdtnError> {
        for t in &transitions {
            for s in [t.from, t.to] {
                if s >= states.len() {
                    return Err(SdtnError::UnknownState(s));
                }
            }
            for &(p, _) in t.input.iter().chain(&t.output) {
                if p >= places.len() {
                    return Err(SdtnError::UnknownPlace(p));
                }
            }
        }
        if inhibitor.0 >= places.len() {
            return Err(SdtnError::UnknownPlace(inhibitor.0));
        }
        if inhibitor.1 >= transitions.len() {
            return Err(SdtnError::UnknownTransition(inhibitor.1));
        }
        Ok(InhibitorNet {
            states,
            places,
            transitions,
            inhibitor,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[PnTransition] {
        &self.transitions
    }

    /// The inhibitor pair `(place, transition)`.
    pub fn inhibitor(&self) -> (usize, usize) {
        self.inhibitor
    }

    /// Fires transition `t`; the inhibited transition needs an empty `p^i`.
    pub fn fire(&self, config: &SdtnConfig, t: usize) -> Result<SdtnConfig, SdtnError> {
        let tr = self
            .transitions
            .get(t)
            .ok_or(SdtnError::UnknownTransition(t))?;
        let blocked = t == self.inhibitor.1 && config.marking[self.inhibitor.0] > 0;
        if blocked
            || tr.from != config.state
            || tr.input.iter().any(|&(p, c)| config.marking[p] < c)
        {
            return Err(SdtnError::Disabled(tr.name.clone()));
        }
        let mut m = config.marking.clone();
        for &(p, c) in &tr.input {
            m[p] -= c;
        }
        for &(p, c) in &tr.output {
            m[p] += c;
        }
        Ok(SdtnConfig {
            state: tr.to,
            marking: m,
        })
    }
}

/// A transition system over `(control, marking)` pairs.
pub trait MarkedSystem: Sync {
    type Control: Clone + Eq + Hash + fmt::Debug + Send + Sync;
    type Label: Clone + fmt::Debug + Send + Sync;

    /// Number of places.
    fn num_places(&self) -> usize;

    /// All one-step successors.
    fn successors(
        &self,
        q: &Self::Control,
        m: &Marking,
    ) -> Vec<(Self::Label, Self::Control, Marking)>;
}

impl MarkedSystem for SdtnNet {
    type Control = usize;
    type Label = usize;

    fn num_places(&self) -> usize {
        self.places.len()
    }

    fn successors(&self, q: &usize, m: &Marking) -> Vec<(usize, usize, Marking)> {
        self.transitions
            .iter()
            .enumerate()
            .filter_map(|(i, t)| fire_transition(&self.transfer, q, m, t).map(|(s, m)| (i, s, m)))
            .collect()
    }
}

impl MarkedSystem for InhibitorNet {
    type Control = usize;
    type Label = usize;

    fn num_places(&self) -> usize {
        self.places.len()
    }

    fn successors(&self, q: &usize, m: &Marking) -> Vec<(usize, usize, Marking)> {
        let cfg = SdtnConfig {
            state: *q,
            marking: m.clone(),
        };
        (0..self.transitions.len())
            .filter_map(|t| self.fire(&cfg, t).ok().map(|c| (t, c.state, c.marking)))
            .collect()
    }
}

/// A named predicate on control-states; stands for the finite disjunction
/// of the control-states it accepts.
#[derive(Clone)]
pub struct StatePredicate<C> {
    pub name: String,
    pub test: Arc<dyn Fn(&C) -> bool + Send + Sync>,
}

impl<C> fmt::Debug for StatePredicate<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StatePredicate({})", self.name)
    }
}

/// Boolean combination of control-state and token-count constraints.
#[derive(Debug, Clone)]
pub enum Target<C> {
    True,
    False,
    /// control-state = q
    State(C),
    /// control-state satisfies a predicate
    StateWhere(StatePredicate<C>),
    /// exactly k tokens on p
    Exactly(usize, u32),
    /// at least k tokens on p
    AtLeast(usize, u32),
    Not(Box<Target<C>>),
    And(Vec<Target<C>>),
    Or(Vec<Target<C>>),
}

impl<C: PartialEq> Target<C> {
    /// Evaluates the constraint on a configuration.
    pub fn holds(&self, q: &C, m: &Marking) -> bool {
        match self {
            Target::True => true,
            Target::False => false,
            Target::State(s) => s == q,
            Target::StateWhere(p) => (p.test)(q),
            Target::Exactly(p, k) => m[*p] == *k,
            Target::AtLeast(p, k) => m[*p] >= *k,
            Target::Not(t) => !t.holds(q, m),
            Target::And(ts) => ts.iter().all(|t| t.holds(q, m)),
            Target::Or(ts) => ts.iter().any(|t| t.holds(q, m)),
        }
    }
}

impl Target<usize> {
    /// The exact configuration `(q, M)`.
    pub fn exact(config: &SdtnConfig) -> Self {
        let mut v = vec![Target::State(config.state)];
        v.extend(
            config
                .marking
                .iter()
                .enumerate()
                .map(|(p, &k)| Target::Exactly(p, k)),
        );
        Target::And(v)
    }
}

/// Resource caps for [`reach_bounded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReachBudget {
    /// Configurations with more tokens than this are pruned.
    pub max_tokens: u32,
    /// Maximum number of stored configurations.
    pub max_states: usize,
    /// Worker threads for frontier expansion.
    pub jobs: usize,
}

impl Default for ReachBudget {
    fn default() -> Self {
        ReachBudget {
            max_tokens: 12,
            max_states: 1_000_000,
            jobs: 1,
        }
    }
}

/// Three-valued verdict of a bounded search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

/// A firing sequence from an initial configuration.
#[derive(Debug, Clone)]
pub struct Witness<C, L> {
    pub init: (C, Marking),
    pub steps: Vec<(L, C, Marking)>,
}

/// Result of [`reach_bounded`] with diagnostics.
#[derive(Debug, Clone)]
pub struct ReachOutcome<C, L> {
    pub verdict: Verdict,
    pub witness: Option<Witness<C, L>>,
    pub explored: usize,
    /// Some successor exceeded the token bound.
    pub pruned: bool,
    /// The state budget ran out.
    pub exhausted_budget: bool,
}

struct Node<C, L> {
    control: C,
    marking: Marking,
    parent: Option<(usize, L)>,
}

/// Breadth-first search for a configuration satisfying `target`.
///
/// Yes comes with a witness. No is returned only when the reachable state
/// space was explored completely: no configuration was pruned by the token
/// bound and the state budget was not hit. Otherwise the answer is unknown.
pub fn reach_bounded<S: MarkedSystem>(
    sys: &S,
    inits: &[(S::Control, Marking)],
    target: &Target<S::Control>,
    budget: ReachBudget,
) -> ReachOutcome<S::Control, S::Label> {
    let mut nodes: Vec<Node<S::Control, S::Label>> = Vec::new();
    let mut index: HashMap<(S::Control, Marking), usize> = HashMap::new();
    let mut pruned = false;
    let witness = |nodes: &Vec<Node<S::Control, S::Label>>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((p, l)) = &nodes[i].parent {
            steps.push((
                l.clone(),
                nodes[i].control.clone(),
                nodes[i].marking.clone(),
            ));
            i = *p;
        }
        steps.reverse();
        Witness {
            init: (nodes[i].control.clone(), nodes[i].marking.clone()),
            steps,
        }
    };
    let tokens = |m: &Marking| m.iter().map(|&c| c as u64).sum::<u64>();
    for (q, m) in inits {
        if tokens(m) > budget.max_tokens as u64 {
            pruned = true;
            continue;
        }
        if index.contains_key(&(q.clone(), m.clone())) {
            continue;
        }
        index.insert((q.clone(), m.clone()), nodes.len());
        nodes.push(Node {
            control: q.clone(),
            marking: m.clone(),
            parent: None,
        });
        if target.holds(q, m) {
            let w = witness(&nodes, nodes.len() - 1);
            return ReachOutcome {
                verdict: Verdict::Yes,
                witness: Some(w),
                explored: nodes.len(),
                pruned,
                exhausted_budget: false,
            };
        }
    }
    let mut frontier: Vec<usize> = (0..nodes.len()).collect();
    while !frontier.is_empty() {
        let expanded = expand(sys, &nodes, &frontier, budget.jobs.max(1));
        let mut next = Vec::new();
        for (parent, succs) in frontier.iter().zip(expanded) {
            for (l, q, m) in succs {
                if tokens(&m) > budget.max_tokens as u64 {
                    pruned = true;
                    continue;
                }
                let key = (q, m);
                if index.contains_key(&key) {
                    continue;
                }
                if nodes.len() >= budget.max_states {
                    return ReachOutcome {
                        verdict: Verdict::Unknown,
                        witness: None,
                        explored: nodes.len(),
                        pruned,
                        exhausted_budget: true,
                    };
                }
                let (q, m) = key;
                index.insert((q.clone(), m.clone()), nodes.len());
                let hit = target.holds(&q, &m);
                nodes.push(Node {
                    control: q,
                    marking: m,
                    parent: Some((*parent, l)),
                });
                if hit {
                    let w = witness(&nodes, nodes.len() - 1);
                    return ReachOutcome {
                        verdict: Verdict::Yes,
                        witness: Some(w),
                        explored: nodes.len(),
                        pruned,
                        exhausted_budget: false,
                    };
                }
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
    }
    let verdict = if pruned {
        Verdict::Unknown
    } else {
        Verdict::No
    };
    ReachOutcome {
        verdict,
        witness: None,
        explored: nodes.len(),
        pruned,
        exhausted_budget: false,
    }
}

type Succs<S> = Vec<(
    <S as MarkedSystem>::Label,
    <S as MarkedSystem>::Control,
    Marking,
)>;

fn expand<S: MarkedSystem>(
    sys: &S,
    nodes: &[Node<S::Control, S::Label>],
    frontier: &[usize],
    jobs: usize,
) -> Vec<Succs<S>> {
    if jobs <= 1 || frontier.len() < 64 {
        return frontier
            .iter()
            .map(|&i| sys.successors(&nodes[i].control, &nodes[i].marking))
            .collect();
    }
    let chunk = frontier.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = frontier
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&i| sys.successors(&nodes[i].control, &nodes[i].marking))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Feasibility of `{x ≥ 0 : A x ≤ b}` by a two-phase simplex with Bland's
/// rule over exact rationals. Returns a feasible point.
pub fn lp_feasible(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let artificial: Vec<usize> = (0..m).filter(|&i| b[i].is_negative()).collect();
    let cols = n + m + artificial.len();
    let mut tab: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    for i in 0..m {
        let neg = b[i].is_negative();
        let sign = if neg { -Rat::one() } else { Rat::one() };
        let mut row = vec![Rat::zero(); cols + 1];
        for j in 0..n {
            row[j] = &a[i][j] * &sign;
        }
        row[n + i] = sign.clone();
        row[cols] = &b[i] * &sign;
        if neg {
            let k = n + m + artificial.iter().position(|&r| r == i).expect("listed");
            row[k] = Rat::one();
            basis[i] = k;
        } else {
            basis[i] = n + i;
        }
        tab.push(row);
    }
    // Phase-one objective: minimize the sum of artificials.
    let mut obj = vec![Rat::zero(); cols + 1];
    for &i in &artificial {
        for j in 0..=cols {
            obj[j] = &obj[j] - &tab[i][j];
        }
    }
    for &i in &artificial {
        let k = basis[i];
        obj[k] = Rat::zero();
    }
    while let Some(enter) = (0..cols).find(|&j| obj[j].is_negative()) {
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if tab[i][enter].is_positive() {
                let ratio = &tab[i][cols] / &tab[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave?;
        let pivot = tab[r][enter].clone();
        for x in tab[r].iter_mut() {
            *x = &*x / &pivot;
        }
        let prow = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                for j in 0..=cols {
                    row[j] = &row[j] - &(&f * &prow[j]);
                }
            }
        }
        let f = obj[enter].clone();
        for j in 0..=cols {
            obj[j] = &obj[j] - &(&f * &prow[j]);
        }
        basis[r] = enter;
    }
    if !obj[cols].is_zero() {
        return None;
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &k) in basis.iter().enumerate() {
        if k < n {
            x[k] = tab[i][cols].clone();
        }
    }
    Some(x)
}

/// A place weighting `y ≥ 1` that no transition increases (transfers move
/// tokens to places of no larger weight). Its existence bounds every run.
pub fn structural_invariant(
    num_places: usize,
    effects: &[Vec<i64>],
    transfer: &[(usize, usize)],
) -> Option<Vec<Rat>> {
    // Substitute y = 1 + x with x ≥ 0.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for e in effects {
        a.push(e.iter().map(|&c| rat_int(c)).collect::<Vec<_>>());
        b.push(rat_int(-e.iter().sum::<i64>()));
    }
    for &(sr, tg) in transfer {
        let mut row = vec![Rat::zero(); num_places];
        row[tg] = Rat::one();
        row[sr] = -Rat::one();
        a.push(row);
        b.push(Rat::zero());
    }
    if a.is_empty() {
        return Some(vec![Rat::one(); num_places]);
    }
    lp_feasible(&a, &b).map(|x| x.into_iter().map(|v| v + Rat::one()).collect())
}

fn effect(num_places: usize, input: &Multiset, output: &Multiset) -> Vec<i64> {
    let mut e = vec![0i64; num_places];
    for &(p, c) in input {
        e[p] -= c as i64;
    }
    for &(p, c) in output {
        e[p] += c as i64;
    }
    e
}

/// Token bound implied by a structural invariant, if one exists.
pub fn structural_bound(weights: &[Rat], marking: &Marking) -> u64 {
    let total: Rat = weights
        .iter()
        .zip(marking)
        .map(|(w, &c)| w * rat_int(c as i64))
        .sum();
    let floor = total.floor().to_integer();
    u64::try_from(floor).unwrap_or(u64::MAX)
}

impl SdtnNet {
    /// Place invariant witnessing structural boundedness, if any.
    pub fn structural_invariant(&self) -> Option<Vec<Rat>> {
        let effects: Vec<Vec<i64>> = self
            .transitions
            .iter()
            .map(|t| effect(self.places.len(), &t.input, &t.output))
            .collect();
        structural_invariant(self.places.len(), &effects, &self.transfer)
    }
}

impl InhibitorNet {
    /// Place invariant witnessing structural boundedness, if any.
    pub fn structural_invariant(&self) -> Option<Vec<Rat>> {
        let effects: Vec<Vec<i64>> = self
            .transitions
            .iter()
            .map(|t| effect(self.places.len(), &t.input, &t.output))
            .collect();
        structural_invariant(self.places.len(), &effects, &[])
    }
}

/// Result of translating a net with its initial and final configurations.
#[derive(Debug, Clone)]
pub struct Translated<N> {
    pub net: N,
    pub init: SdtnConfig,
    pub fin: SdtnConfig,
}

/// Layout of the places and states added by [`sdtn_to_inhibitor`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InhibitorLayout {
    /// The place `p^i` mirroring the transfer sources.
    pub mirror: usize,
    /// `p(q)` for each original control-state `q`.
    pub return_places: Vec<usize>,
    /// The drain state `q^i`.
    pub drain: usize,
    /// The routing state, present when transfers return to several states.
    pub route: Option<usize>,
}

/// Simulates transfers step by step in a net with one inhibitor arc.
pub fn sdtn_to_inhibitor(
    net: &SdtnNet,
    init: &SdtnConfig,
    fin: &SdtnConfig,
) -> (Translated<InhibitorNet>, InhibitorLayout) {
    let np = net.places.len();
    let nq = net.states.len();
    let sources: BTreeSet<usize> = net.transfer.iter().map(|&(s, _)| s).collect();
    let mirror = np;
    let return_places: Vec<usize> = (0..nq).map(|q| np + 1 + q).collect();
    let mut places = net.places.clone();
    places.push("p_i".to_string());
    places.extend(net.states.iter().map(|q| format!("p_ret_{q}")));
    let drain = nq;
    let mut states = net.states.clone();
    states.push("q_i".to_string());
    let targets: BTreeSet<usize> = net
        .transitions
        .iter()
        .filter(|t| t.transfer)
        .map(|t| t.to)
        .collect();
    let route = (targets.len() > 1).then(|| {
        states.push("q_route".to_string());
        nq + 1
    });
    let mirror_of = |m: &Multiset| sources.iter().map(|&s| count_in(m, s)).sum::<u32>();
    let with_mirror = |m: &Multiset| {
        let c = mirror_of(m);
        if c == 0 {
            m.clone()
        } else {
            multiset_add(m, &vec![(mirror, c)])
        }
    };
    let mut transitions = Vec::new();
    for t in &net.transitions {
        let input = with_mirror(&t.input);
        let output = with_mirror(&t.output);
        if t.transfer {
            transitions.push(PnTransition {
                name: format!("{}_start", t.name),
                from: t.from,
                to: drain,
                input,
                output: multiset_add(&output, &vec![(return_places[t.to], 1)]),
            });
        } else {
            transitions.push(PnTransition {
                name: t.name.clone(),
                from: t.from,
                to: t.to,
                input,
                output,
            });
        }
    }
    for &(sr, tg) in &net.transfer {
        transitions.push(PnTransition {
            name: format!("move_{}_{}", net.places[sr], net.places[tg]),
            from: drain,
            to: drain,
            input: multiset(&[sr, mirror]),
            output: multiset(&[tg]),
        });
    }
    let inhibited = transitions.len();
    match route {
        None => {
            let q2 = targets.iter().next().copied().unwrap_or(0);
            transitions.push(PnTransition {
                name: "return".to_string(),
                from: drain,
                to: q2,
                input: multiset(&[return_places[q2]]),
                output: vec![],
            });
        }
        Some(r) => {
            transitions.push(PnTransition {
                name: "return".to_string(),
                from: drain,
                to: r,
                input: vec![],
                output: vec![],
            });
            for &q in &targets {
                transitions.push(PnTransition {
                    name: format!("route_{}", net.states[q]),
                    from: r,
                    to: q,
                    input: multiset(&[return_places[q]]),
                    output: vec![],
                });
            }
        }
    }
    let lift = |c: &SdtnConfig| {
        let mut m = c.marking.clone();
        m.push(sources.iter().map(|&s| c.marking[s]).sum());
        m.extend(std::iter::repeat_n(0, nq));
        SdtnConfig {
            state: c.state,
            marking: m,
        }
    };
    let inet = InhibitorNet::new(states, places, transitions, (mirror, inhibited))
        .expect("construction is well-formed");
    (
        Translated {
            net: inet,
            init: lift(init),
            fin: lift(fin),
        },
        InhibitorLayout {
            mirror,
            return_places,
            drain,
            route,
        },
    )
}

/// Replaces the inhibited transition by a transfer of `p^i` into a fresh
/// trap place `p_x`; unfaithful firings leave `p_x` nonempty for good.
///
/// Returns the translation and the index of `p_x`.
pub fn inhibitor_to_sdtn(
    net: &InhibitorNet,
    init: &SdtnConfig,
    fin: &SdtnConfig,
) -> (Translated<SdtnNet>, usize) {
    let (pi, ti) = net.inhibitor;
    let px = net.places.len();
    let mut places = net.places.clone();
    places.push("p_x".to_string());
    let mut states = net.states.clone();
    let mut transitions = Vec::new();
    for (i, t) in net.transitions.iter().enumerate() {
        if i != ti {
            transitions.push(SdtnTransition {
                name: t.name.clone(),
                from: t.from,
                to: t.to,
                input: t.input.clone(),
                output: t.output.clone(),
                transfer: false,
            });
            continue;
        }
        if count_in(&t.input, pi) > 0 {
            // Needs p^i empty and nonempty at once: never enabled.
            continue;
        }
        let produced = count_in(&t.output, pi);
        let output: Multiset = t.output.iter().copied().filter(|&(p, _)| p != pi).collect();
        if produced == 0 {
            transitions.push(SdtnTransition {
                name: t.name.clone(),
                from: t.from,
                to: t.to,
                input: t.input.clone(),
                output,
                transfer: true,
            });
        } else {
            let mid = states.len();
            states.push(format!("{}_mid", t.name));
            transitions.push(SdtnTransition {
                name: t.name.clone(),
                from: t.from,
                to: mid,
                input: t.input.clone(),
                output,
                transfer: true,
            });
            transitions.push(SdtnTransition {
                name: format!("{}_refill", t.name),
                from: mid,
                to: t.to,
                input: vec![],
                output: vec![(pi, produced)],
                transfer: false,
            });
        }
    }
    let lift = |c: &SdtnConfig| {
        let mut m = c.marking.clone();
        m.push(0);
        SdtnConfig {
            state: c.state,
            marking: m,
        }
    };
    let snet = SdtnNet::new(states, places, transitions, vec![(pi, px)])
        .expect("single transfer pair is disjoint");
    (
        Translated {
            net: snet,
            init: lift(init),
            fin: lift(fin),
        },
        px,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lit {
    State(usize),
    Exactly(usize, u32),
    AtLeast(usize, u32),
}

fn dnf(t: &Target<usize>, negate: bool, states: usize) -> Vec<Vec<Lit>> {
    let or = |parts: Vec<Vec<Vec<Lit>>>| parts.into_iter().flatten().collect::<Vec<_>>();
    let and = |parts: Vec<Vec<Vec<Lit>>>| {
        parts
            .into_iter()
            .fold(vec![vec![]], |acc: Vec<Vec<Lit>>, p| {
                acc.iter()
                    .flat_map(|c| p.iter().map(move |d| c.iter().chain(d).copied().collect()))
                    .collect()
            })
    };
    match (t, negate) {
        (Target::True, false) | (Target::False, true) => vec![vec![]],
        (Target::True, true) | (Target::False, false) => vec![],
        (Target::State(q), false) => vec![vec![Lit::State(*q)]],
        (Target::State(q), true) => (0..states)
            .filter(|s| s != q)
            .map(|s| vec![Lit::State(s)])
            .collect(),
        (Target::StateWhere(_), _) => panic!("predicate atoms are not supported by the surgery"),
        (Target::Exactly(p, k), false) => vec![vec![Lit::Exactly(*p, *k)]],
        (Target::Exactly(p, k), true) => {
            let mut v: Vec<Vec<Lit>> = (0..*k).map(|j| vec![Lit::Exactly(*p, j)]).collect();
            v.push(vec![Lit::AtLeast(*p, k + 1)]);
            v
        }
        (Target::AtLeast(p, k), false) => vec![vec![Lit::AtLeast(*p, *k)]],
        (Target::AtLeast(p, k), true) => (0..*k).map(|j| vec![Lit::Exactly(*p, j)]).collect(),
        (Target::Not(x), n) => dnf(x, !n, states),
        (Target::And(xs), false) | (Target::Or(xs), true) => {
            and(xs.iter().map(|x| dnf(x, negate, states)).collect())
        }
        (Target::Or(xs), false) | (Target::And(xs), true) => {
            or(xs.iter().map(|x| dnf(x, negate, states)).collect())
        }
    }
}

/// Reduces a generalized target to reaching `(q', ∅)` in an extended net.
///
/// Each satisfiable clause of the disjunctive normal form gets a gadget that
/// consumes the exact token counts it demands and drains places that are
/// bounded only from below or unconstrained. Returns the net and `q'`.
pub fn target_surgery(net: &SdtnNet, target: &Target<usize>) -> (SdtnNet, usize) {
    let np = net.places.len();
    let nq = net.states.len();
    let mut states = net.states.clone();
    let q_end = states.len();
    states.push("q_goal".to_string());
    let mut transitions = net.transitions.clone();
    for (ci, clause) in dnf(target, false, nq).into_iter().enumerate() {
        let mut allowed: BTreeSet<usize> = (0..nq).collect();
        let mut exact: BTreeMap<usize, u32> = BTreeMap::new();
        let mut lower: BTreeMap<usize, u32> = BTreeMap::new();
        let mut ok = true;
        for lit in clause {
            match lit {
                Lit::State(q) => allowed.retain(|&s| s == q),
                Lit::Exactly(p, k) => {
                    if exact.insert(p, k).is_some_and(|old| old != k) {
                        ok = false;
                    }
                }
                Lit::AtLeast(p, k) => {
                    let e = lower.entry(p).or_default();
                    *e = (*e).max(k);
                }
            }
        }
        for (p, k) in &exact {
            if lower.get(p).is_some_and(|l| l > k) {
                ok = false;
            }
        }
        if !ok || allowed.is_empty() {
            continue;
        }
        let stage = |i: usize, states: &mut Vec<String>| {
            states.push(format!("q_c{ci}_s{i}"));
            states.len() - 1
        };
        let first = stage(0, &mut states);
        for &q in &allowed {
            transitions.push(SdtnTransition {
                name: format!("enter_c{ci}_{}", net.states[q]),
                from: q,
                to: first,
                input: vec![],
                output: vec![],
                transfer: false,
            });
        }
        let mut cur = first;
        for p in 0..np {
            let (need, drain) = match exact.get(&p) {
                Some(&k) => (k, false),
                None => (lower.get(&p).copied().unwrap_or(0), true),
            };
            let nxt = stage(p + 1, &mut states);
            transitions.push(SdtnTransition {
                name: format!("take_c{ci}_{}", net.places[p]),
                from: cur,
                to: nxt,
                input: if need > 0 { vec![(p, need)] } else { vec![] },
                output: vec![],
                transfer: false,
            });
            if drain {
                transitions.push(SdtnTransition {
                    name: format!("drain_c{ci}_{}", net.places[p]),
                    from: nxt,
                    to: nxt,
                    input: vec![(p, 1)],
                    output: vec![],
                    transfer: false,
                });
            }
            cur = nxt;
        }
        transitions.push(SdtnTransition {
            name: format!("finish_c{ci}"),
            from: cur,
            to: q_end,
            input: vec![],
            output: vec![],
            transfer: false,
        });
    }
    let extended = SdtnNet::new(
        states,
        net.places.clone(),
        transitions,
        net.transfer.clone(),
    )
    .expect("gadgets avoid transfer places");
    (extended, q_end)
}

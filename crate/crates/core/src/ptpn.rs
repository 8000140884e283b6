//! Priced timed Petri nets: syntax, exact continuous-time semantics and costs.
//!
//! Token ages and delays are exact rationals. Ages above `cmax` are kept
//! verbatim here; truncation only happens in the abstract encoding.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number used for ages, delays and costs.
pub type Rat = BigRational;

/// Builds the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Builds the integer rational `n`.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Fractional part of a nonnegative rational.
pub fn frac(x: &Rat) -> Rat {
    x - x.floor()
}

/// Integer part of a nonnegative rational, saturating at `u32::MAX`.
pub fn floor_u32(x: &Rat) -> u32 {
    x.floor().to_integer().to_u32().unwrap_or(u32::MAX)
}

/// Errors raised by the concrete semantics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PtpnError {
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
    #[error("unknown place index {0}")]
    UnknownPlace(usize),
    #[error("unknown control-state index {0}")]
    UnknownState(usize),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("delay must be strictly positive")]
    NonPositiveDelay,
    #[error("negative token age")]
    NegativeAge,
    #[error("invalid binding: {0}")]
    InvalidBinding(String),
    #[error("delta must lie in (0, 1/5]")]
    DeltaOutOfRange,
}

/// A time interval with natural bounds; `hi = None` stands for infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: Option<u32>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// Validating constructor.
    pub fn new(
        lo: u32,
        hi: Option<u32>,
        lo_closed: bool,
        hi_closed: bool,
    ) -> Result<Self, PtpnError> {
        let iv = Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        match hi {
            None if hi_closed => Err(PtpnError::InvalidInterval(format!(
                "{iv}: infinite bound cannot be closed"
            ))),
            Some(h) if h < lo => Err(PtpnError::InvalidInterval(format!(
                "{iv}: lower bound exceeds upper bound"
            ))),
            Some(h) if h == lo && !(lo_closed && hi_closed) => Err(PtpnError::InvalidInterval(
                format!("{iv}: empty point interval"),
            )),
            _ => Ok(iv),
        }
    }

    /// `[lo, hi]`.
    pub fn closed(lo: u32, hi: u32) -> Self {
        Self::new(lo, Some(hi), true, true).expect("valid closed interval")
    }

    /// `[lo, inf)`.
    pub fn at_least(lo: u32) -> Self {
        Interval {
            lo,
            hi: None,
            lo_closed: true,
            hi_closed: false,
        }
    }

    /// Exact membership of a rational age.
    pub fn contains(&self, x: &Rat) -> bool {
        let lo = rat_int(self.lo as i64);
        let lo_ok = if self.lo_closed { *x >= lo } else { *x > lo };
        let hi_ok = match self.hi {
            None => true,
            Some(h) => {
                let h = rat_int(h as i64);
                if self.hi_closed {
                    *x <= h
                } else {
                    *x < h
                }
            }
        };
        lo_ok && hi_ok
    }

    /// Membership of the integer age `k`.
    ///
    /// Also correct for the abstract age `cmax + 1`, since every finite bound
    /// is at most `cmax`.
    pub fn contains_int(&self, k: u32) -> bool {
        let lo_ok = if self.lo_closed {
            k >= self.lo
        } else {
            k > self.lo
        };
        let hi_ok = match self.hi {
            None => true,
            Some(h) => {
                if self.hi_closed {
                    k <= h
                } else {
                    k < h
                }
            }
        };
        lo_ok && hi_ok
    }

    /// The `k ⊨ I` test: `k + e ∈ I` for every (equivalently some) `0 < e < 1`.
    ///
    /// | lower bound | upper bound | holds iff |
    /// |---|---|---|
    /// | `[lo` or `(lo` | `hi)` or `hi]` | `lo <= k < hi` |
    /// | `[lo` or `(lo` | `inf)` | `lo <= k` |
    pub fn models_eps(&self, k: u32) -> bool {
        self.lo <= k && self.hi.is_none_or(|h| k < h)
    }

    /// Largest finite integer occurring as a bound.
    pub fn max_bound(&self) -> u32 {
        self.hi.unwrap_or(self.lo).max(self.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        match self.hi {
            None => write!(f, "{open}{},inf)", self.lo),
            Some(h) => {
                let close = if self.hi_closed { ']' } else { ')' };
                write!(f, "{open}{},{h}{close}", self.lo)
            }
        }
    }
}

impl FromStr for Interval {
    type Err = PtpnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PtpnError::InvalidInterval(s.to_string());
        let t = s.trim();
        if t.len() < 5 {
            return Err(bad());
        }
        let lo_closed = match t.as_bytes()[0] {
            b'[' => true,
            b'(' => false,
            _ => return Err(bad()),
        };
        let hi_closed = match t.as_bytes()[t.len() - 1] {
            b']' => true,
            b')' => false,
            _ => return Err(bad()),
        };
        let body = &t[1..t.len() - 1];
        let (a, b) = body.split_once(',').ok_or_else(bad)?;
        let lo: u32 = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim();
        let hi = if b == "inf" || b == "∞" {
            None
        } else {
            Some(b.parse::<u32>().map_err(|_| bad())?)
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }
}

/// An arc between a place and a transition labelled with an interval.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub place: usize,
    pub interval: Interval,
}

impl Arc {
    pub fn new(place: usize, interval: Interval) -> Self {
        Arc { place, interval }
    }
}

/// A transition `(source, target, In, Read, Out)` with its firing cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub input: Vec<Arc>,
    pub read: Vec<Arc>,
    pub output: Vec<Arc>,
    pub cost: u64,
}

/// A priced timed Petri net. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtpnNet {
    states: Vec<String>,
    places: Vec<String>,
    place_costs: Vec<u64>,
    transitions: Vec<Transition>,
    cmax: u32,
}

impl PtpnNet {
    /// Builds a net, checking that every index is in range and names are unique.
    pub fn new(
        states: Vec<String>,
        places: Vec<(String, u64)>,
        transitions: Vec<Transition>,
    ) -> Result<Self, PtpnError> {
        let mut seen = BTreeSet::new();
        for name in states.iter().chain(places.iter().map(|(p, _)| p)) {
            if !seen.insert(name.clone()) {
                return Err(PtpnError::DuplicateName(name.clone()));
            }
        }
        let mut tnames = BTreeSet::new();
        for t in &transitions {
            if !tnames.insert(t.name.clone()) {
                return Err(PtpnError::DuplicateName(t.name.clone()));
            }
            for s in [t.source, t.target] {
                if s >= states.len() {
                    return Err(PtpnError::UnknownState(s));
                }
            }
            for a in t.input.iter().chain(&t.read).chain(&t.output) {
                if a.place >= places.len() {
                    return Err(PtpnError::UnknownPlace(a.place));
                }
                Interval::new(
                    a.interval.lo,
                    a.interval.hi,
                    a.interval.lo_closed,
                    a.interval.hi_closed,
                )?;
            }
        }
        let cmax = transitions
            .iter()
            .flat_map(|t| t.input.iter().chain(&t.read).chain(&t.output))
            .map(|a| a.interval.max_bound())
            .max()
            .unwrap_or(0);
        let (places, place_costs) = places.into_iter().unzip();
        Ok(PtpnNet {
            states,
            places,
            place_costs,
            transitions,
            cmax,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, t: usize) -> Result<&Transition, PtpnError> {
        self.transitions
            .get(t)
            .ok_or(PtpnError::UnknownTransition(t))
    }

    pub fn place_cost(&self, p: usize) -> u64 {
        self.place_costs[p]
    }

    pub fn place_costs(&self) -> &[u64] {
        &self.place_costs
    }

    /// Largest finite integer on any arc interval (0 if there is none).
    pub fn cmax(&self) -> u32 {
        self.cmax
    }

    /// True for cost-places (`cost(p) > 0`).
    pub fn is_cost_place(&self, p: usize) -> bool {
        self.place_costs[p] > 0
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|s| s == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    /// Largest place cost.
    pub fn max_place_cost(&self) -> u64 {
        self.place_costs.iter().copied().max().unwrap_or(0)
    }

    /// Copy of the net with every place and transition cost replaced.
    pub fn with_costs(
        &self,
        place_cost: impl Fn(usize) -> u64,
        transition_cost: impl Fn(usize) -> u64,
    ) -> PtpnNet {
        let mut net = self.clone();
        for p in 0..net.place_costs.len() {
            net.place_costs[p] = place_cost(p);
        }
        for (i, t) in net.transitions.iter_mut().enumerate() {
            t.cost = transition_cost(i);
        }
        net
    }
}

/// A token identified by its place and exact age.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub place: usize,
    pub age: Rat,
}

impl Token {
    pub fn new(place: usize, age: Rat) -> Self {
        Token { place, age }
    }
}

/// A concrete configuration: control-state plus a marking kept as a sorted multiset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConcreteConfig {
    pub state: usize,
    marking: Vec<Token>,
}

impl ConcreteConfig {
    pub fn new(state: usize, mut marking: Vec<Token>) -> Result<Self, PtpnError> {
        if marking.iter().any(|t| t.age.is_negative()) {
            return Err(PtpnError::NegativeAge);
        }
        marking.sort();
        Ok(ConcreteConfig { state, marking })
    }

    pub fn marking(&self) -> &[Token] {
        &self.marking
    }

    /// Number of tokens.
    pub fn size(&self) -> usize {
        self.marking.len()
    }

    /// Every age increased by `x`.
    pub fn delayed(&self, x: &Rat) -> ConcreteConfig {
        let marking = self
            .marking
            .iter()
            .map(|t| Token::new(t.place, &t.age + x))
            .collect();
        ConcreteConfig {
            state: self.state,
            marking,
        }
    }
}

/// The chosen input, read and output tokens of a discrete step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Firing {
    pub transition: usize,
    pub input: Vec<Token>,
    pub read: Vec<Token>,
    pub output: Vec<Token>,
}

/// One step of a concrete computation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConcreteStep {
    Timed(Rat),
    Discrete(Firing),
}

/// Bipartite matching of tokens to arcs (place-preserving, age inside interval).
///
/// Returns `witness[i]` = arc index matched to token `i` when a bijection exists.
pub fn match_tokens(tokens: &[Token], arcs: &[Arc]) -> Option<Vec<usize>> {
    if tokens.len() != arcs.len() {
        return None;
    }
    let fits = |ti: usize, ai: usize| {
        tokens[ti].place == arcs[ai].place && arcs[ai].interval.contains(&tokens[ti].age)
    };
    let matched = kuhn(tokens.len(), arcs.len(), fits)?;
    Some(matched)
}

/// Maximum bipartite matching saturating the left side; returns left→right.
pub(crate) fn kuhn(
    left: usize,
    right: usize,
    fits: impl Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    fn augment(
        l: usize,
        right: usize,
        fits: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for r in 0..right {
            if !seen[r] && fits(l, r) {
                seen[r] = true;
                if owner[r].is_none_or(|o| augment(o, right, fits, seen, owner)) {
                    owner[r] = Some(l);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; right];
    for l in 0..left {
        let mut seen = vec![false; right];
        if !augment(l, right, &fits, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut out = vec![0; left];
    for (r, o) in owner.iter().enumerate() {
        if let Some(l) = o {
            out[*l] = r;
        }
    }
    Some(out)
}

/// True iff the control-state matches and disjoint `I, R` inside the marking
/// match `In` and `Read`.
pub fn enabled(net: &PtpnNet, config: &ConcreteConfig, t: usize) -> Result<bool, PtpnError> {
    let tr = net.transition(t)?;
    if tr.source != config.state {
        return Ok(false);
    }
    let arcs: Vec<&Arc> = tr.input.iter().chain(&tr.read).collect();
    let m = config.marking();
    let fits =
        |a: usize, k: usize| m[k].place == arcs[a].place && arcs[a].interval.contains(&m[k].age);
    Ok(kuhn(arcs.len(), m.len(), fits).is_some())
}

/// Removes the multiset `part` from `whole`; `None` if not contained.
pub(crate) fn multiset_minus<T: Ord + Clone>(whole: &[T], part: &[T]) -> Option<Vec<T>> {
    let mut rest: Vec<T> = whole.to_vec();
    rest.sort();
    for x in part {
        let pos = rest.binary_search(x).ok()?;
        rest.remove(pos);
    }
    Some(rest)
}

/// Applies one step.
pub fn fire(
    net: &PtpnNet,
    config: &ConcreteConfig,
    step: &ConcreteStep,
) -> Result<ConcreteConfig, PtpnError> {
    match step {
        ConcreteStep::Timed(x) => {
            if !x.is_positive() {
                return Err(PtpnError::NonPositiveDelay);
            }
            Ok(config.delayed(x))
        }
        ConcreteStep::Discrete(f) => {
            let tr = net.transition(f.transition)?;
            if tr.source != config.state {
                return Err(PtpnError::InvalidBinding(format!(
                    "transition {} needs another control-state",
                    tr.name
                )));
            }
            if match_tokens(&f.input, &tr.input).is_none() {
                return Err(PtpnError::InvalidBinding(
                    "input tokens do not match the input arcs".into(),
                ));
            }
            if match_tokens(&f.read, &tr.read).is_none() {
                return Err(PtpnError::InvalidBinding(
                    "read tokens do not match the read arcs".into(),
                ));
            }
            if match_tokens(&f.output, &tr.output).is_none() {
                return Err(PtpnError::InvalidBinding(
                    "output tokens do not match the output arcs".into(),
                ));
            }
            let mut used = f.input.clone();
            used.extend(f.read.iter().cloned());
            let mut rest = multiset_minus(config.marking(), &used).ok_or_else(|| {
                PtpnError::InvalidBinding("bound tokens are not in the marking".into())
            })?;
            rest.extend(f.read.iter().cloned());
            rest.extend(f.output.iter().cloned());
            ConcreteConfig::new(tr.target, rest)
        }
    }
}

/// Storage cost rate `Σ_p |M(p)|·cost(p)` of a marking.
pub fn storage_rate(net: &PtpnNet, marking: &[Token]) -> u64 {
    marking.iter().map(|t| net.place_cost(t.place)).sum()
}

/// Cost of one step, validating it first.
pub fn step_cost(
    net: &PtpnNet,
    config: &ConcreteConfig,
    step: &ConcreteStep,
) -> Result<Rat, PtpnError> {
    fire(net, config, step)?;
    Ok(match step {
        ConcreteStep::Timed(x) => x * rat_int(storage_rate(net, config.marking()) as i64),
        ConcreteStep::Discrete(f) => rat_int(net.transition(f.transition)?.cost as i64),
    })
}

/// Replays a trace, returning every visited configuration (including the start).
pub fn replay(
    net: &PtpnNet,
    init: &ConcreteConfig,
    trace: &[ConcreteStep],
) -> Result<Vec<ConcreteConfig>, PtpnError> {
    let mut out = vec![init.clone()];
    for step in trace {
        let next = fire(net, out.last().expect("nonempty"), step)?;
        out.push(next);
    }
    Ok(out)
}

/// Sum of step costs along a trace.
pub fn trace_cost(
    net: &PtpnNet,
    init: &ConcreteConfig,
    trace: &[ConcreteStep],
) -> Result<Rat, PtpnError> {
    let mut total = Rat::zero();
    let mut cur = init.clone();
    for step in trace {
        total += step_cost(net, &cur, step)?;
        cur = fire(net, &cur, step)?;
    }
    Ok(total)
}

/// Decomposition of a marking by fractional parts.
///
/// `high` holds `M_{-m} … M_{-1}` (fractions ≥ 1/2, increasing), `zero` holds
/// `M_0`, and `low` holds `M_1 … M_n` (fractions in (0, 1/2), increasing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub high: Vec<Vec<Token>>,
    pub zero: Vec<Token>,
    pub low: Vec<Vec<Token>>,
}

impl Decomposition {
    /// All parts in index order `-m … n`.
    pub fn parts(&self) -> impl Iterator<Item = &Vec<Token>> {
        self.high
            .iter()
            .chain(std::iter::once(&self.zero))
            .chain(self.low.iter())
    }

    /// `M_{-1}`, if present.
    pub fn last_high(&self) -> Option<&Vec<Token>> {
        self.high.last()
    }
}

/// Splits a marking into its fractional-part classes.
pub fn decompose(marking: &[Token]) -> Decomposition {
    let half = rat(1, 2);
    let mut tokens: Vec<(Rat, Token)> = marking.iter().map(|t| (frac(&t.age), t.clone())).collect();
    tokens.sort();
    let mut high: Vec<Vec<Token>> = Vec::new();
    let mut zero = Vec::new();
    let mut low: Vec<Vec<Token>> = Vec::new();
    let mut last: Option<Rat> = None;
    for (f, t) in tokens {
        if f.is_zero() {
            zero.push(t);
            continue;
        }
        let bucket = if f >= half { &mut high } else { &mut low };
        if last.as_ref() == Some(&f) {
            bucket.last_mut().expect("open class").push(t);
        } else {
            bucket.push(vec![t]);
            last = Some(f);
        }
    }
    Decomposition { high, zero, low }
}

fn check_delta(delta: &Rat) -> Result<(), PtpnError> {
    if !delta.is_positive() || *delta > rat(1, 5) {
        return Err(PtpnError::DeltaOutOfRange);
    }
    Ok(())
}

/// Every age has fractional part `< delta` or `> 1 - delta`. Any positive
/// `delta < 1/2` is accepted so that the abstraction can test `2/5`-form.
pub fn in_form(marking: &[Token], delta: &Rat) -> bool {
    let one = Rat::one();
    marking.iter().all(|t| {
        let f = frac(&t.age);
        f < *delta || f > &one - delta
    })
}

/// δ-form of a marking, for `δ ∈ (0, 1/5]`.
pub fn is_delta_form(marking: &[Token], delta: &Rat) -> Result<bool, PtpnError> {
    check_delta(delta)?;
    Ok(in_form(marking, delta))
}

/// δ-form of a computation: outputs of discrete steps are in δ-form and every
/// delay lies in `(0, δ) ∪ (1-δ, 1)`.
pub fn is_delta_form_trace(
    net: &PtpnNet,
    init: &ConcreteConfig,
    trace: &[ConcreteStep],
    delta: &Rat,
) -> Result<bool, PtpnError> {
    check_delta(delta)?;
    replay(net, init, trace)?;
    let one = Rat::one();
    Ok(trace.iter().all(|s| match s {
        ConcreteStep::Timed(x) => (x.is_positive() && x < delta) || (*x > &one - delta && *x < one),
        ConcreteStep::Discrete(f) => in_form(&f.output, delta),
    }))
}

/// Fractional part of `M_{-1}`, or `1/2` if there is no such class.
fn high_eps(dec: &Decomposition) -> Rat {
    dec.last_high()
        .map(|g| frac(&g[0].age))
        .unwrap_or_else(|| rat(1, 2))
}

/// Whether the timed step of length `x` from `config` is detailed.
pub fn is_detailed(config: &ConcreteConfig, x: &Rat) -> bool {
    if !x.is_positive() {
        return false;
    }
    let dec = decompose(config.marking());
    let gap = Rat::one() - high_eps(&dec);
    *x < gap || (dec.zero.is_empty() && *x == gap)
}

/// Replaces long timed steps by sequences of detailed steps with the same
/// total delay. Endpoints and cost are unchanged.
pub fn refine_to_detailed(
    net: &PtpnNet,
    init: &ConcreteConfig,
    trace: &[ConcreteStep],
) -> Result<Vec<ConcreteStep>, PtpnError> {
    let mut out = Vec::new();
    let mut cur = init.clone();
    for step in trace {
        match step {
            ConcreteStep::Timed(x) => {
                if !x.is_positive() {
                    return Err(PtpnError::NonPositiveDelay);
                }
                let mut left = x.clone();
                while left.is_positive() {
                    let d = if is_detailed(&cur, &left) {
                        left.clone()
                    } else {
                        let dec = decompose(cur.marking());
                        let gap = Rat::one() - high_eps(&dec);
                        if dec.zero.is_empty() {
                            gap
                        } else {
                            gap / rat_int(2)
                        }
                    };
                    cur = cur.delayed(&d);
                    left -= &d;
                    out.push(ConcreteStep::Timed(d));
                }
            }
            ConcreteStep::Discrete(_) => {
                cur = fire(net, &cur, step)?;
                out.push(step.clone());
            }
        }
    }
    Ok(out)
}

/// Enumerates discrete firings of `t`, drawing output ages from
/// `k + f` for `k ∈ 0..=cmax+1` and fractional parts `f` in `palette`.
pub fn enumerate_firings(
    net: &PtpnNet,
    config: &ConcreteConfig,
    t: usize,
    palette: &[Rat],
) -> Result<Vec<Firing>, PtpnError> {
    let tr = net.transition(t)?;
    if tr.source != config.state {
        return Ok(Vec::new());
    }
    let arcs: Vec<&Arc> = tr.input.iter().chain(&tr.read).collect();
    let m = config.marking();
    let mut bindings: BTreeSet<(Vec<Token>, Vec<Token>)> = BTreeSet::new();
    let mut chosen = Vec::new();
    let mut used = vec![false; m.len()];
    select_tokens(
        &arcs,
        m,
        tr.input.len(),
        &mut chosen,
        &mut used,
        &mut bindings,
    );
    if bindings.is_empty() {
        return Ok(Vec::new());
    }
    let mut ages = BTreeSet::new();
    for k in 0..=net.cmax() + 1 {
        for f in palette {
            ages.insert(rat_int(k as i64) + f);
        }
    }
    let per_arc: Vec<Vec<Token>> = tr
        .output
        .iter()
        .map(|a| {
            ages.iter()
                .filter(|x| a.interval.contains(x))
                .map(|x| Token::new(a.place, x.clone()))
                .collect()
        })
        .collect();
    let mut outputs: BTreeSet<Vec<Token>> = BTreeSet::new();
    product(&per_arc, &mut Vec::new(), &mut outputs);
    let mut result = Vec::new();
    for (input, read) in &bindings {
        for out in &outputs {
            result.push(Firing {
                transition: t,
                input: input.clone(),
                read: read.clone(),
                output: out.clone(),
            });
        }
    }
    Ok(result)
}

fn select_tokens(
    arcs: &[&Arc],
    m: &[Token],
    n_in: usize,
    chosen: &mut Vec<usize>,
    used: &mut [bool],
    acc: &mut BTreeSet<(Vec<Token>, Vec<Token>)>,
) {
    if chosen.len() == arcs.len() {
        let mut input: Vec<Token> = chosen[..n_in].iter().map(|&i| m[i].clone()).collect();
        let mut read: Vec<Token> = chosen[n_in..].iter().map(|&i| m[i].clone()).collect();
        input.sort();
        read.sort();
        acc.insert((input, read));
        return;
    }
    let arc = arcs[chosen.len()];
    for i in 0..m.len() {
        if !used[i] && m[i].place == arc.place && arc.interval.contains(&m[i].age) {
            used[i] = true;
            chosen.push(i);
            select_tokens(arcs, m, n_in, chosen, used, acc);
            chosen.pop();
            used[i] = false;
        }
    }
}

fn product(per_arc: &[Vec<Token>], cur: &mut Vec<Token>, acc: &mut BTreeSet<Vec<Token>>) {
    if cur.len() == per_arc.len() {
        let mut v = cur.clone();
        v.sort();
        acc.insert(v);
        return;
    }
    for tok in &per_arc[cur.len()] {
        cur.push(tok.clone());
        product(per_arc, cur, acc);
        cur.pop();
    }
}

/// The running example net: two control-states, three places, two transitions.
pub fn running_example() -> PtpnNet {
    let iv = |s: &str| s.parse::<Interval>().expect("valid interval");
    let t1 = Transition {
        name: "t1".into(),
        source: 0,
        target: 1,
        input: vec![Arc::new(0, iv("(0,3]"))],
        read: vec![],
        output: vec![Arc::new(1, iv("[1,5)")), Arc::new(2, iv("(2,inf)"))],
        cost: 1,
    };
    let t2 = Transition {
        name: "t2".into(),
        source: 1,
        target: 0,
        input: vec![Arc::new(2, iv("[1,4)"))],
        read: vec![Arc::new(1, iv("[2,2]"))],
        output: vec![Arc::new(0, iv("[0,inf)"))],
        cost: 3,
    };
    PtpnNet::new(
        vec!["q1".into(), "q2".into()],
        vec![("p1".into(), 3), ("p2".into(), 2), ("p3".into(), 0)],
        vec![t1, t2],
    )
    .expect("running example is well formed")
}

//! The region-like abstraction of δ-form configurations: encoding, discrete
//! and timed abstract successors, abstract costs and concretization.
//!
//! An abstract marking is `⟨b_{-m} … b_{-1}, b_0, b_1 … b_n⟩`: groups of
//! integer-aged tokens ordered by the fractional parts they stand for.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ptpn::{
    decompose, fire, floor_u32, frac, in_form, rat, rat_int, ConcreteConfig, ConcreteStep, Firing,
    PtpnError, PtpnNet, Rat, Token,
};

/// Errors raised by the abstraction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AptpnError {
    #[error(transparent)]
    Ptpn(#[from] PtpnError),
    #[error("configuration is not in 2/5-form")]
    NotInForm,
    #[error("empty group in an abstract configuration")]
    EmptyGroup,
    #[error("step {0} is not applicable")]
    NotApplicable(String),
    #[error("realization failed at step {step}: {reason}")]
    Realize { step: usize, reason: String },
}

/// A token with an integer age in `0..=cmax+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgedToken {
    pub place: usize,
    pub age: u32,
}

impl AgedToken {
    pub fn new(place: usize, age: u32) -> Self {
        AgedToken { place, age }
    }
}

/// A group of tokens sharing one fractional part, kept sorted.
pub type Group = Vec<AgedToken>;

/// Position of a group inside an abstract configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    /// `high[i]`, where `high[0]` is `b_{-m}`.
    High(usize),
    Center,
    /// `low[i]`, where `low[0]` is `b_1`.
    Low(usize),
}

/// An abstract configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractConfig {
    pub state: usize,
    pub high: Vec<Group>,
    pub center: Group,
    pub low: Vec<Group>,
}

impl AbstractConfig {
    /// Validating constructor; sorts every group.
    pub fn new(
        state: usize,
        high: Vec<Group>,
        center: Group,
        low: Vec<Group>,
    ) -> Result<Self, AptpnError> {
        if high.iter().chain(low.iter()).any(|g| g.is_empty()) {
            return Err(AptpnError::EmptyGroup);
        }
        Ok(Self::normalized(state, high, center, low))
    }

    /// Sorts groups and drops empty ones.
    pub(crate) fn normalized(
        state: usize,
        high: Vec<Group>,
        mut center: Group,
        low: Vec<Group>,
    ) -> Self {
        let fix = |gs: Vec<Group>| {
            gs.into_iter()
                .filter(|g| !g.is_empty())
                .map(|mut g| {
                    g.sort();
                    g
                })
                .collect()
        };
        center.sort();
        AbstractConfig {
            state,
            high: fix(high),
            center,
            low: fix(low),
        }
    }

    /// Configuration with only integer-age tokens.
    pub fn integral(state: usize, center: Group) -> Self {
        Self::normalized(state, vec![], center, vec![])
    }

    /// Number of tokens.
    pub fn size(&self) -> usize {
        self.tokens().count()
    }

    /// Every token, in slot order.
    pub fn tokens(&self) -> impl Iterator<Item = &AgedToken> {
        self.high
            .iter()
            .flatten()
            .chain(self.center.iter())
            .chain(self.low.iter().flatten())
    }

    /// Every (slot, group) pair in index order `-m … n`.
    pub fn slots(&self) -> Vec<(Slot, &Group)> {
        let mut v: Vec<(Slot, &Group)> = self
            .high
            .iter()
            .enumerate()
            .map(|(i, g)| (Slot::High(i), g))
            .collect();
        v.push((Slot::Center, &self.center));
        v.extend(self.low.iter().enumerate().map(|(i, g)| (Slot::Low(i), g)));
        v
    }

    /// The group in `slot`.
    pub fn group(&self, slot: Slot) -> &Group {
        match slot {
            Slot::High(i) => &self.high[i],
            Slot::Center => &self.center,
            Slot::Low(i) => &self.low[i],
        }
    }

    /// Storage cost rate `Σ cost(p)` over every token.
    pub fn storage_rate(&self, net: &PtpnNet) -> u64 {
        self.tokens().map(|t| net.place_cost(t.place)).sum()
    }
}

impl fmt::Display for AbstractConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let group = |g: &Group| {
            let inner: Vec<String> = g
                .iter()
                .map(|t| format!("p{}:{}", t.place, t.age))
                .collect();
            format!("[{}]", inner.join(" "))
        };
        let high: Vec<String> = self.high.iter().map(group).collect();
        let low: Vec<String> = self.low.iter().map(group).collect();
        write!(
            f,
            "q{} <{} | {} | {}>",
            self.state,
            high.join(" "),
            group(&self.center),
            low.join(" ")
        )
    }
}

/// A labelled abstract step. Discrete labels carry their witness.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbstractStep {
    Discrete(DiscreteWitness),
    Type1,
    Type2,
    Type3(usize),
    Type4(usize),
}

impl AbstractStep {
    /// Types 3 and 4 are the steps that consume a time unit.
    pub fn is_slow(&self) -> bool {
        matches!(self, AbstractStep::Type3(_) | AbstractStep::Type4(_))
    }
}

impl fmt::Display for AbstractStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractStep::Discrete(w) => write!(f, "disc t{}", w.transition),
            AbstractStep::Type1 => write!(f, "type1"),
            AbstractStep::Type2 => write!(f, "type2"),
            AbstractStep::Type3(k) => write!(f, "type3({k})"),
            AbstractStep::Type4(k) => write!(f, "type4({k})"),
        }
    }
}

/// Witness of a discrete abstract step.
///
/// `input` and `read` refer to source slots; `output` refers to target slots;
/// `injection` maps every surviving source group to its target group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscreteWitness {
    pub transition: usize,
    pub input: Vec<(Slot, AgedToken)>,
    pub read: Vec<(Slot, AgedToken)>,
    pub output: Vec<(Slot, AgedToken)>,
    pub injection: Vec<(Slot, Slot)>,
}

/// Abstract age of a concrete age: `min(⌊x⌋, cmax + 1)`.
pub fn abstract_age(x: &Rat, cmax: u32) -> u32 {
    floor_u32(x).min(cmax + 1)
}

/// The increment `b⁺`, capped at `cmax + 1`.
pub fn plus(group: &Group, cmax: u32) -> Group {
    let mut g: Group = group
        .iter()
        .map(|t| AgedToken::new(t.place, (t.age + 1).min(cmax + 1)))
        .collect();
    g.sort();
    g
}

/// Encodes a configuration in 2/5-form.
pub fn encode(net: &PtpnNet, config: &ConcreteConfig) -> Result<AbstractConfig, AptpnError> {
    if !in_form(config.marking(), &rat(2, 5)) {
        return Err(AptpnError::NotInForm);
    }
    let cmax = net.cmax();
    let dec = decompose(config.marking());
    let conv = |g: &Vec<Token>| {
        g.iter()
            .map(|t| AgedToken::new(t.place, abstract_age(&t.age, cmax)))
            .collect::<Group>()
    };
    Ok(AbstractConfig::normalized(
        config.state,
        dec.high.iter().map(conv).collect(),
        conv(&dec.zero),
        dec.low.iter().map(conv).collect(),
    ))
}

/// All abstract timed successors with their step label.
pub fn timed_successors(net: &PtpnNet, a: &AbstractConfig) -> Vec<(AbstractConfig, AbstractStep)> {
    let mut out = Vec::new();
    for step in timed_kinds(a) {
        let next = apply_timed(net, a, &step).expect("kind is applicable");
        out.push((next, step));
    }
    out
}

/// Timed step labels applicable to `a`.
pub fn timed_kinds(a: &AbstractConfig) -> Vec<AbstractStep> {
    let mut v = vec![AbstractStep::Type1];
    if a.center.is_empty() && !a.high.is_empty() {
        v.push(AbstractStep::Type2);
    }
    let n = a.low.len();
    v.extend((0..=n).map(AbstractStep::Type3));
    v.extend((0..n).map(AbstractStep::Type4));
    v
}

/// Applies one abstract timed step.
pub fn apply_timed(
    net: &PtpnNet,
    a: &AbstractConfig,
    step: &AbstractStep,
) -> Result<AbstractConfig, AptpnError> {
    let cmax = net.cmax();
    let n = a.low.len();
    let raised = |gs: &[Group]| gs.iter().map(|g| plus(g, cmax)).collect::<Vec<_>>();
    let with_center = |k: usize| {
        let mut high = raised(&a.high);
        if !a.center.is_empty() {
            high.push(a.center.clone());
        }
        high.extend(a.low[..k].iter().cloned());
        high
    };
    match *step {
        AbstractStep::Type1 => {
            let mut low = Vec::new();
            if !a.center.is_empty() {
                low.push(a.center.clone());
            }
            low.extend(a.low.iter().cloned());
            Ok(AbstractConfig {
                state: a.state,
                high: a.high.clone(),
                center: vec![],
                low,
            })
        }
        AbstractStep::Type2 if a.center.is_empty() && !a.high.is_empty() => {
            let mut high = a.high.clone();
            let last = high.pop().expect("nonempty");
            Ok(AbstractConfig {
                state: a.state,
                high,
                center: plus(&last, cmax),
                low: a.low.clone(),
            })
        }
        AbstractStep::Type3(k) if k <= n => Ok(AbstractConfig {
            state: a.state,
            high: with_center(k),
            center: vec![],
            low: raised(&a.low[k..]),
        }),
        AbstractStep::Type4(k) if k < n => Ok(AbstractConfig {
            state: a.state,
            high: with_center(k),
            center: plus(&a.low[k], cmax),
            low: raised(&a.low[k + 1..]),
        }),
        _ => Err(AptpnError::NotApplicable(step.to_string())),
    }
}

/// Cost of one abstract step; types 3 and 4 count a full time unit.
pub fn abstract_step_cost(
    net: &PtpnNet,
    a: &AbstractConfig,
    step: &AbstractStep,
) -> Result<u64, AptpnError> {
    match step {
        AbstractStep::Discrete(w) => Ok(net.transition(w.transition)?.cost),
        AbstractStep::Type1 | AbstractStep::Type2 => {
            apply_timed(net, a, step)?;
            Ok(0)
        }
        AbstractStep::Type3(_) | AbstractStep::Type4(_) => {
            apply_timed(net, a, step)?;
            Ok(a.storage_rate(net))
        }
    }
}

/// Every successor of `a`, discrete and timed.
pub fn successors(net: &PtpnNet, a: &AbstractConfig) -> Vec<(AbstractConfig, AbstractStep)> {
    let mut v = Vec::new();
    for t in 0..net.transitions().len() {
        v.extend(discrete_successors(net, a, t).expect("transition index in range"));
    }
    v.extend(timed_successors(net, a));
    v
}

/// Distinct configurations reachable by one discrete step of `t`.
pub fn discrete_successor_configs(
    net: &PtpnNet,
    a: &AbstractConfig,
    t: usize,
) -> Result<BTreeSet<AbstractConfig>, AptpnError> {
    Ok(discrete_successors(net, a, t)?
        .into_iter()
        .map(|(c, _)| c)
        .collect())
}

/// An output token's abstract destination before placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum OutKind {
    Center,
    Frac,
}

/// Discrete successors of `t`, each with a witness. Deduplicated.
pub fn discrete_successors(
    net: &PtpnNet,
    a: &AbstractConfig,
    t: usize,
) -> Result<Vec<(AbstractConfig, AbstractStep)>, AptpnError> {
    let tr = net.transition(t)?;
    if tr.source != a.state {
        return Ok(Vec::new());
    }
    let cmax = net.cmax();
    let bindings = bind_arcs(a, &tr.input, &tr.read);
    if bindings.is_empty() {
        return Ok(Vec::new());
    }
    let per_arc: Vec<Vec<(OutKind, AgedToken)>> = tr
        .output
        .iter()
        .map(|arc| {
            let mut v = Vec::new();
            for k in 0..=cmax + 1 {
                if arc.interval.contains_int(k) {
                    v.push((OutKind::Center, AgedToken::new(arc.place, k)));
                }
                if arc.interval.models_eps(k) {
                    v.push((OutKind::Frac, AgedToken::new(arc.place, k)));
                }
            }
            v
        })
        .collect();
    let mut outs: BTreeSet<Vec<(OutKind, AgedToken)>> = BTreeSet::new();
    cartesian(&per_arc, &mut Vec::new(), &mut outs);
    let mut result: BTreeSet<(AbstractConfig, AbstractStep)> = BTreeSet::new();
    for (input, read) in &bindings {
        let mut work_high: Vec<WorkGroup> = Vec::new();
        let mut work_low: Vec<WorkGroup> = Vec::new();
        let mut center = a.center.clone();
        for (slot, g) in a.slots() {
            let mut g = g.clone();
            for (s, tok) in input {
                if *s == slot {
                    let pos = g
                        .iter()
                        .position(|x| x == tok)
                        .expect("bound token present");
                    g.remove(pos);
                }
            }
            match slot {
                Slot::Center => center = g,
                Slot::High(_) if !g.is_empty() => work_high.push(WorkGroup {
                    origin: Some(slot),
                    tokens: g,
                    outs: vec![],
                }),
                Slot::Low(_) if !g.is_empty() => work_low.push(WorkGroup {
                    origin: Some(slot),
                    tokens: g,
                    outs: vec![],
                }),
                _ => {}
            }
        }
        for out in &outs {
            let mut c = center.clone();
            let mut center_outs = Vec::new();
            let mut frac_outs = Vec::new();
            for (kind, tok) in out {
                match kind {
                    OutKind::Center => {
                        c.push(*tok);
                        center_outs.push(*tok);
                    }
                    OutKind::Frac => frac_outs.push(*tok),
                }
            }
            c.sort();
            let base = Placement {
                high: work_high.clone(),
                low: work_low.clone(),
            };
            let mut placements = Vec::new();
            place(&frac_outs, base, &mut placements);
            for p in placements {
                let (config, step) = p.finish(tr.target, &c, &center_outs, t, input, read);
                result.insert((config, step));
            }
        }
    }
    Ok(result.into_iter().collect())
}

#[derive(Debug, Clone)]
struct WorkGroup {
    origin: Option<Slot>,
    tokens: Group,
    outs: Vec<AgedToken>,
}

#[derive(Debug, Clone)]
struct Placement {
    high: Vec<WorkGroup>,
    low: Vec<WorkGroup>,
}

impl Placement {
    fn finish(
        self,
        target: usize,
        center: &Group,
        center_outs: &[AgedToken],
        t: usize,
        input: &[(Slot, AgedToken)],
        read: &[(Slot, AgedToken)],
    ) -> (AbstractConfig, AbstractStep) {
        let mut output: Vec<(Slot, AgedToken)> =
            center_outs.iter().map(|tok| (Slot::Center, *tok)).collect();
        let mut injection = vec![(Slot::Center, Slot::Center)];
        let mut collect = |gs: Vec<WorkGroup>, mk: fn(usize) -> Slot| {
            gs.into_iter()
                .enumerate()
                .map(|(i, g)| {
                    if let Some(o) = g.origin {
                        injection.push((o, mk(i)));
                    }
                    output.extend(g.outs.iter().map(|tok| (mk(i), *tok)));
                    let mut all = g.tokens;
                    all.extend(g.outs);
                    all.sort();
                    all
                })
                .collect::<Vec<Group>>()
        };
        let high = collect(self.high, Slot::High);
        let low = collect(self.low, Slot::Low);
        output.sort();
        injection.sort();
        let mut input = input.to_vec();
        let mut read = read.to_vec();
        input.sort();
        read.sort();
        let config = AbstractConfig {
            state: target,
            high,
            center: center.clone(),
            low,
        };
        (
            config,
            AbstractStep::Discrete(DiscreteWitness {
                transition: t,
                input,
                read,
                output,
                injection,
            }),
        )
    }
}

fn place(tokens: &[AgedToken], p: Placement, acc: &mut Vec<Placement>) {
    let Some((tok, rest)) = tokens.split_first() else {
        acc.push(p);
        return;
    };
    for side in 0..2 {
        let len = if side == 0 { p.high.len() } else { p.low.len() };
        for i in 0..len {
            let mut q = p.clone();
            let list = if side == 0 { &mut q.high } else { &mut q.low };
            list[i].outs.push(*tok);
            place(rest, q, acc);
        }
        for i in 0..=len {
            let mut q = p.clone();
            let list = if side == 0 { &mut q.high } else { &mut q.low };
            list.insert(
                i,
                WorkGroup {
                    origin: None,
                    tokens: vec![],
                    outs: vec![*tok],
                },
            );
            place(rest, q, acc);
        }
    }
}

fn cartesian<T: Clone + Ord>(per: &[Vec<T>], cur: &mut Vec<T>, acc: &mut BTreeSet<Vec<T>>) {
    if cur.len() == per.len() {
        let mut v = cur.clone();
        v.sort();
        acc.insert(v);
        return;
    }
    for x in &per[cur.len()] {
        cur.push(x.clone());
        cartesian(per, cur, acc);
        cur.pop();
    }
}

type Binding = (Vec<(Slot, AgedToken)>, Vec<(Slot, AgedToken)>);

/// Injective assignments of In and Read arcs to tokens of `a`.
fn bind_arcs(
    a: &AbstractConfig,
    input: &[crate::ptpn::Arc],
    read: &[crate::ptpn::Arc],
) -> BTreeSet<Binding> {
    let mut pool: Vec<(Slot, AgedToken, usize)> = Vec::new();
    for (slot, g) in a.slots() {
        for tok in g {
            match pool.last_mut() {
                Some((s, t, c)) if *s == slot && t == tok => *c += 1,
                _ => pool.push((slot, *tok, 1)),
            }
        }
    }
    let arcs: Vec<&crate::ptpn::Arc> = input.iter().chain(read).collect();
    let mut acc = BTreeSet::new();
    fn rec(
        arcs: &[&crate::ptpn::Arc],
        n_in: usize,
        pool: &mut [(Slot, AgedToken, usize)],
        chosen: &mut Vec<(Slot, AgedToken)>,
        acc: &mut BTreeSet<Binding>,
    ) {
        if chosen.len() == arcs.len() {
            let mut i = chosen[..n_in].to_vec();
            let mut r = chosen[n_in..].to_vec();
            i.sort();
            r.sort();
            acc.insert((i, r));
            return;
        }
        let arc = arcs[chosen.len()];
        for idx in 0..pool.len() {
            let (slot, tok, count) = pool[idx];
            if count == 0 || tok.place != arc.place {
                continue;
            }
            let fits = if slot == Slot::Center {
                arc.interval.contains_int(tok.age)
            } else {
                arc.interval.models_eps(tok.age)
            };
            if fits {
                pool[idx].2 -= 1;
                chosen.push((slot, tok));
                rec(arcs, n_in, pool, chosen, acc);
                chosen.pop();
                pool[idx].2 += 1;
            }
        }
    }
    rec(&arcs, input.len(), &mut pool, &mut Vec::new(), &mut acc);
    acc
}

/// Applies a labelled abstract step, checking that it is a successor.
pub fn apply(
    net: &PtpnNet,
    a: &AbstractConfig,
    step: &AbstractStep,
) -> Result<AbstractConfig, AptpnError> {
    match step {
        AbstractStep::Discrete(w) => discrete_successors(net, a, w.transition)?
            .into_iter()
            .find(|(_, s)| s == step)
            .map(|(c, _)| c)
            .ok_or_else(|| AptpnError::NotApplicable(step.to_string())),
        _ => apply_timed(net, a, step),
    }
}

/// Concretizes an abstract trace from an integral start into a detailed
/// δ-form concrete trace whose configurations encode to the abstract ones.
pub fn realize(
    net: &PtpnNet,
    start: &AbstractConfig,
    trace: &[AbstractStep],
    delta: &Rat,
) -> Result<(ConcreteConfig, Vec<ConcreteStep>), AptpnError> {
    if !start.high.is_empty() || !start.low.is_empty() {
        return Err(AptpnError::Realize {
            step: 0,
            reason: "start configuration has fractional groups".into(),
        });
    }
    if !delta.is_positive() || *delta > rat(1, 5) {
        return Err(PtpnError::DeltaOutOfRange.into());
    }
    let init_tokens = start
        .center
        .iter()
        .map(|t| Token::new(t.place, rat_int(t.age as i64)))
        .collect();
    let init = ConcreteConfig::new(start.state, init_tokens)?;
    let n = trace.len();
    let mut cur = init.clone();
    let mut abs = start.clone();
    let mut steps = Vec::with_capacity(n);
    let one = Rat::one();
    let two = rat_int(2);
    for (i, step) in trace.iter().enumerate() {
        let fail = |reason: String| AptpnError::Realize { step: i, reason };
        let di = delta
            * Rat::new(
                one.numer().clone(),
                num_bigint::BigInt::from(2).pow((n - i) as u32),
            );
        let dec = decompose(cur.marking());
        let eps_high = dec.last_high().map(|g| frac(&g[0].age));
        let eps_low: Vec<Rat> = dec.low.iter().map(|g| frac(&g[0].age)).collect();
        let concrete = match step {
            AbstractStep::Type1 => {
                let cap = match &eps_high {
                    Some(e) => (&one - e).min(di.clone()),
                    None => di.clone(),
                };
                ConcreteStep::Timed(cap / &two)
            }
            AbstractStep::Type2 => {
                let e = eps_high.ok_or_else(|| fail("type 2 needs a high group".into()))?;
                ConcreteStep::Timed(&one - e)
            }
            AbstractStep::Type3(k) => {
                let k = *k;
                let upper = if k == 0 {
                    one.clone()
                } else {
                    &one - &eps_low[k - 1]
                };
                let next = if k < eps_low.len() {
                    eps_low[k].clone()
                } else {
                    di.clone()
                };
                let lower = (&one - &di).max(&one - next);
                ConcreteStep::Timed((lower + upper) / &two)
            }
            AbstractStep::Type4(k) => {
                let e = eps_low
                    .get(*k)
                    .ok_or_else(|| fail("type 4 index out of range".into()))?;
                ConcreteStep::Timed(&one - e)
            }
            AbstractStep::Discrete(w) => {
                ConcreteStep::Discrete(concretize_discrete(net, &cur, w, &di).map_err(fail)?)
            }
        };
        let next_abs = apply(net, &abs, step)?;
        let next = fire(net, &cur, &concrete).map_err(|e| fail(e.to_string()))?;
        let enc = encode(net, &next).map_err(|e| fail(e.to_string()))?;
        if enc != next_abs {
            return Err(fail(format!("encoding {enc} differs from {next_abs}")));
        }
        steps.push(concrete);
        cur = next;
        abs = next_abs;
    }
    Ok((init, steps))
}

fn concretize_discrete(
    net: &PtpnNet,
    cur: &ConcreteConfig,
    w: &DiscreteWitness,
    di: &Rat,
) -> Result<Firing, String> {
    let cmax = net.cmax();
    let dec = decompose(cur.marking());
    let concrete_group = |slot: Slot| -> &Vec<Token> {
        match slot {
            Slot::High(i) => &dec.high[i],
            Slot::Center => &dec.zero,
            Slot::Low(i) => &dec.low[i],
        }
    };
    let mut used: Vec<Token> = Vec::new();
    let mut pick = |slot: Slot, tok: &AgedToken| -> Result<Token, String> {
        let g = concrete_group(slot);
        let mut avail = g.clone();
        for u in &used {
            if let Some(p) = avail.iter().position(|x| x == u) {
                avail.remove(p);
            }
        }
        let c = avail
            .into_iter()
            .find(|x| x.place == tok.place && abstract_age(&x.age, cmax) == tok.age)
            .ok_or_else(|| format!("no concrete token for {tok:?} in {slot:?}"))?;
        used.push(c.clone());
        Ok(c)
    };
    let input = w
        .input
        .iter()
        .map(|(s, t)| pick(*s, t))
        .collect::<Result<Vec<_>, _>>()?;
    let read = w
        .read
        .iter()
        .map(|(s, t)| pick(*s, t))
        .collect::<Result<Vec<_>, _>>()?;
    // Fractional part of every target group.
    let next_di = di * rat_int(2);
    let one = Rat::one();
    let assign = |len: usize, is_high: bool| -> Vec<Rat> {
        let mut fr: Vec<Option<Rat>> = vec![None; len];
        for (src, dst) in &w.injection {
            let Some(t0) = concrete_group(*src).first() else {
                continue;
            };
            let f = frac(&t0.age);
            match (dst, is_high) {
                (Slot::High(j), true) | (Slot::Low(j), false) => fr[*j] = Some(f),
                _ => {}
            }
        }
        let (lo, hi) = if is_high {
            (&one - &next_di, one.clone())
        } else {
            (Rat::zero(), next_di.clone())
        };
        fill_gaps(&fr, &lo, &hi)
    };
    let high_len = w
        .output
        .iter()
        .filter_map(|(s, _)| {
            if let Slot::High(j) = s {
                Some(j + 1)
            } else {
                None
            }
        })
        .max()
        .unwrap_or(0);
    let low_len = w
        .output
        .iter()
        .filter_map(|(s, _)| {
            if let Slot::Low(j) = s {
                Some(j + 1)
            } else {
                None
            }
        })
        .max()
        .unwrap_or(0);
    let high_len = high_len.max(
        w.injection
            .iter()
            .filter_map(|(_, d)| {
                if let Slot::High(j) = d {
                    Some(j + 1)
                } else {
                    None
                }
            })
            .max()
            .unwrap_or(0),
    );
    let low_len = low_len.max(
        w.injection
            .iter()
            .filter_map(|(_, d)| {
                if let Slot::Low(j) = d {
                    Some(j + 1)
                } else {
                    None
                }
            })
            .max()
            .unwrap_or(0),
    );
    let hf = assign(high_len, true);
    let lf = assign(low_len, false);
    let output = w
        .output
        .iter()
        .map(|(s, t)| {
            let f = match s {
                Slot::High(j) => hf[*j].clone(),
                Slot::Center => Rat::zero(),
                Slot::Low(j) => lf[*j].clone(),
            };
            Token::new(t.place, rat_int(t.age as i64) + f)
        })
        .collect();
    Ok(Firing {
        transition: w.transition,
        input,
        read,
        output,
    })
}

/// Fills unknown entries of an increasing sequence with evenly spaced values
/// strictly between their known neighbours (or the bounds `lo`, `hi`).
fn fill_gaps(known: &[Option<Rat>], lo: &Rat, hi: &Rat) -> Vec<Rat> {
    let mut out: Vec<Rat> = Vec::with_capacity(known.len());
    let mut i = 0;
    while i < known.len() {
        if let Some(v) = &known[i] {
            out.push(v.clone());
            i += 1;
            continue;
        }
        let start = i;
        while i < known.len() && known[i].is_none() {
            i += 1;
        }
        let left = if start == 0 {
            lo.clone()
        } else {
            out[start - 1].clone()
        };
        let right = if i < known.len() {
            known[i].clone().expect("known")
        } else {
            hi.clone()
        };
        let count = (i - start) as i64;
        for j in 1..=count {
            out.push(&left + (&right - &left) * rat(j, count + 1));
        }
    }
    out
}

/// Sum of abstract step costs along a trace.
pub fn abstract_trace_cost(
    net: &PtpnNet,
    start: &AbstractConfig,
    trace: &[AbstractStep],
) -> Result<u64, AptpnError> {
    let mut cur = start.clone();
    let mut total = 0;
    for s in trace {
        total += abstract_step_cost(net, &cur, s)?;
        cur = apply(net, &cur, s)?;
    }
    Ok(total)
}

/// Fixtures reproducing the worked abstraction example on the running net.
pub mod example {
    use super::*;

    fn g(tokens: &[(usize, u32)]) -> Group {
        let mut v: Group = tokens.iter().map(|&(p, a)| AgedToken::new(p, a)).collect();
        v.sort();
        v
    }

    /// The concrete configuration `c` (state `q1`).
    pub fn concrete() -> ConcreteConfig {
        let t = |p: usize, n: i64, d: i64| Token::new(p, rat(n, d));
        ConcreteConfig::new(
            0,
            vec![
                t(0, 21, 10),
                t(0, 1, 1),
                t(0, 285, 100),
                t(0, 39, 10),
                t(1, 11, 10),
                t(1, 91, 10),
                t(1, 1, 1),
                t(1, 985, 100),
                t(2, 81, 10),
                t(2, 85, 100),
                t(2, 29, 10),
                t(2, 49, 10),
                t(2, 9, 1),
            ],
        )
        .expect("valid configuration")
    }

    pub fn c1() -> AbstractConfig {
        AbstractConfig::normalized(
            0,
            vec![g(&[(0, 2), (1, 6), (2, 0)]), g(&[(0, 3), (2, 2), (2, 4)])],
            g(&[(0, 1), (1, 1), (2, 6)]),
            vec![g(&[(0, 2), (1, 1), (1, 6), (2, 6)])],
        )
    }

    pub fn c2() -> AbstractConfig {
        AbstractConfig::normalized(
            0,
            vec![g(&[(0, 2), (1, 6), (2, 0)]), g(&[(0, 3), (2, 2), (2, 4)])],
            vec![],
            vec![
                g(&[(0, 1), (1, 1), (2, 6)]),
                g(&[(0, 2), (1, 1), (1, 6), (2, 6)]),
            ],
        )
    }

    pub fn c3() -> AbstractConfig {
        AbstractConfig::normalized(
            0,
            vec![g(&[(0, 2), (1, 6), (2, 0)])],
            g(&[(0, 4), (2, 3), (2, 5)]),
            vec![
                g(&[(0, 1), (1, 1), (2, 6)]),
                g(&[(0, 2), (1, 1), (1, 6), (2, 6)]),
            ],
        )
    }

    pub fn c4() -> AbstractConfig {
        AbstractConfig::normalized(
            0,
            vec![
                g(&[(0, 3), (1, 6), (2, 1)]),
                g(&[(0, 4), (2, 3), (2, 5)]),
                g(&[(0, 1), (1, 1), (2, 6)]),
            ],
            vec![],
            vec![g(&[(0, 3), (1, 2), (1, 6), (2, 6)])],
        )
    }

    pub fn c5() -> AbstractConfig {
        AbstractConfig::normalized(
            0,
            vec![g(&[(0, 3), (1, 6), (2, 1)]), g(&[(0, 4), (2, 3), (2, 5)])],
            g(&[(0, 2), (1, 2), (2, 6)]),
            vec![g(&[(0, 3), (1, 2), (1, 6), (2, 6)])],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::example::*;
    use super::*;
    use crate::ptpn::{running_example, trace_cost, Arc, Interval, Transition};

    #[test]
    fn encoding_reproduces_c1() {
        let net = running_example();
        assert_eq!(net.cmax(), 5);
        assert_eq!(encode(&net, &concrete()).unwrap(), c1());
        let ints = ConcreteConfig::new(1, vec![Token::new(0, rat(7, 1)), Token::new(2, rat(2, 1))])
            .unwrap();
        assert_eq!(
            encode(&net, &ints).unwrap(),
            AbstractConfig::integral(1, vec![AgedToken::new(0, 6), AgedToken::new(2, 2)])
        );
        let off = ConcreteConfig::new(0, vec![Token::new(0, rat(1, 2))]).unwrap();
        assert_eq!(encode(&net, &off), Err(AptpnError::NotInForm));
    }

    #[test]
    fn timed_goldens() {
        let net = running_example();
        assert_eq!(
            apply_timed(&net, &c1(), &AbstractStep::Type1).unwrap(),
            c2()
        );
        assert_eq!(
            apply_timed(&net, &c2(), &AbstractStep::Type2).unwrap(),
            c3()
        );
        assert_eq!(
            apply_timed(&net, &c3(), &AbstractStep::Type3(1)).unwrap(),
            c4()
        );
        assert_eq!(
            apply_timed(&net, &c3(), &AbstractStep::Type4(0)).unwrap(),
            c5()
        );
        assert!(apply_timed(&net, &c1(), &AbstractStep::Type2).is_err());
        assert!(apply_timed(&net, &c3(), &AbstractStep::Type4(2)).is_err());
    }

    #[test]
    fn concrete_delays_of_the_example_match_the_abstract_steps() {
        let net = running_example();
        let c = concrete();
        let after1 = c.delayed(&rat(1, 100));
        assert_eq!(encode(&net, &after1).unwrap(), c2());
        let after2 = after1.delayed(&rat(9, 100));
        assert_eq!(encode(&net, &after2).unwrap(), c3());
        assert_eq!(encode(&net, &after2.delayed(&rat(85, 100))).unwrap(), c4());
        assert_eq!(encode(&net, &after2.delayed(&rat(9, 10))).unwrap(), c5());
    }

    #[test]
    fn abstract_costs() {
        let net = running_example();
        // Place costs summed over the 13 tokens of c3.
        let oracle: u64 = c3().tokens().map(|t| [3u64, 2, 0][t.place]).sum();
        assert_eq!(
            abstract_step_cost(&net, &c3(), &AbstractStep::Type3(1)).unwrap(),
            oracle
        );
        assert_eq!(oracle, 20);
        assert_eq!(
            abstract_step_cost(&net, &c1(), &AbstractStep::Type1).unwrap(),
            0
        );
    }

    #[test]
    fn plus_is_idempotent_at_the_cap() {
        let g = vec![AgedToken::new(0, 6), AgedToken::new(1, 5)];
        assert_eq!(
            plus(&g, 5),
            vec![AgedToken::new(0, 6), AgedToken::new(1, 6)]
        );
        assert_eq!(plus(&plus(&g, 5), 5), plus(&g, 5));
    }

    #[test]
    fn first_step_of_the_example_trace_is_simulated() {
        let net = running_example();
        // The first configuration of the trace is not in 2/5-form, so use a
        // nearby δ-form configuration with the same structure.
        let t = |p: usize, n: i64, d: i64| Token::new(p, rat(n, d));
        let start = ConcreteConfig::new(
            0,
            vec![
                t(0, 31, 10),
                t(0, 31, 10),
                t(0, 29, 10),
                t(1, 69, 10),
                t(2, 1, 10),
                t(2, 1, 10),
            ],
        )
        .unwrap();
        let firing = Firing {
            transition: 0,
            input: vec![t(0, 29, 10)],
            read: vec![],
            output: vec![t(1, 13, 10), t(2, 22, 10)],
        };
        let next = fire(&net, &start, &ConcreteStep::Discrete(firing)).unwrap();
        let succ = discrete_successor_configs(&net, &encode(&net, &start).unwrap(), 0).unwrap();
        assert!(succ.contains(&encode(&net, &next).unwrap()));
    }

    #[test]
    fn empty_transition_changes_only_the_state() {
        let net = PtpnNet::new(
            vec!["a".into(), "b".into()],
            vec![("p".into(), 1)],
            vec![Transition {
                name: "e".into(),
                source: 0,
                target: 1,
                input: vec![],
                read: vec![],
                output: vec![],
                cost: 0,
            }],
        )
        .unwrap();
        let a = AbstractConfig::new(
            0,
            vec![vec![AgedToken::new(0, 0)]],
            vec![],
            vec![vec![AgedToken::new(0, 1)]],
        )
        .unwrap();
        let succ = discrete_successor_configs(&net, &a, 0).unwrap();
        assert_eq!(succ.len(), 1);
        let b = succ.into_iter().next().unwrap();
        assert_eq!(b, AbstractConfig { state: 1, ..a });
    }

    #[test]
    fn one_new_token_has_2n_plus_1_low_positions_and_one_high() {
        let iv: Interval = "(0,1)".parse().unwrap();
        let net = PtpnNet::new(
            vec!["q".into()],
            vec![("p".into(), 0)],
            vec![Transition {
                name: "mk".into(),
                source: 0,
                target: 0,
                input: vec![],
                read: vec![],
                output: vec![Arc::new(0, iv)],
                cost: 0,
            }],
        )
        .unwrap();
        for n in 0..4usize {
            let low: Vec<Group> = (0..n).map(|_| vec![AgedToken::new(0, 0)]).collect();
            let a = AbstractConfig::new(0, vec![], vec![], low).unwrap();
            let succ = discrete_successor_configs(&net, &a, 0).unwrap();
            // Oracle: join any of n low groups, or open a new group at any of
            // n+1 low gaps or the single empty high gap; joined groups with
            // identical content coincide.
            let mut oracle: BTreeSet<AbstractConfig> = BTreeSet::new();
            for i in 0..n {
                let mut l = a.low.clone();
                l[i].push(AgedToken::new(0, 0));
                oracle.insert(AbstractConfig::normalized(0, vec![], vec![], l));
            }
            for i in 0..=n {
                let mut l = a.low.clone();
                l.insert(i, vec![AgedToken::new(0, 0)]);
                oracle.insert(AbstractConfig::normalized(0, vec![], vec![], l));
            }
            oracle.insert(AbstractConfig::normalized(
                0,
                vec![vec![AgedToken::new(0, 0)]],
                vec![],
                a.low.clone(),
            ));
            assert_eq!(succ, oracle, "n={n}");
            let positions = discrete_successors(&net, &a, 0).unwrap().len();
            assert_eq!(positions, 2 * n + 2, "n={n}");
        }
    }

    #[test]
    fn realization_of_the_abstract_example() {
        let net = running_example();
        let start = AbstractConfig::integral(0, vec![AgedToken::new(0, 1), AgedToken::new(2, 0)]);
        let trace = vec![
            AbstractStep::Type1,
            AbstractStep::Type3(1),
            AbstractStep::Type2,
        ];
        let delta = rat(1, 5);
        let (init, steps) = realize(&net, &start, &trace, &delta).unwrap();
        assert_eq!(steps.len(), 3);
        let concrete_cost = trace_cost(&net, &init, &steps).unwrap();
        let abs_cost = abstract_trace_cost(&net, &start, &trace).unwrap();
        let bound = rat_int(3) * &delta * rat_int(2) * rat_int(3);
        assert!((concrete_cost - rat_int(abs_cost as i64)).abs() <= bound);
        let (_, none) = realize(&net, &start, &[], &delta).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn discrete_steps_are_realized() {
        let net = running_example();
        let start = AbstractConfig::integral(0, vec![AgedToken::new(0, 1)]);
        let succ = discrete_successors(&net, &start, 0).unwrap();
        assert!(!succ.is_empty());
        for (target, step) in succ {
            let (init, steps) = realize(&net, &start, &[step], &rat(1, 5)).unwrap();
            let end = fire(&net, &init, &steps[0]).unwrap();
            assert_eq!(encode(&net, &end).unwrap(), target);
        }
    }
}

//! Abstract configurations carrying a remaining cost budget, their
//! transitions, and the quasi-orders that add tokens on free places, on cost
//! places, or on any places.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::aptpn::{
    apply_timed, discrete_successors, timed_kinds, AbstractConfig, AbstractStep, AptpnError, Group,
    Slot,
};
use crate::ptpn::PtpnNet;

/// Errors raised by budgeted configurations and the orders.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcptpnError {
    #[error(transparent)]
    Aptpn(#[from] AptpnError),
    #[error("budget {budget} exceeds the threshold {v}")]
    BudgetOutOfRange { budget: u64, v: u64 },
    #[error("inconsistent order witness: {0}")]
    BadWitness(String),
}

/// An abstract configuration whose control-state carries a remaining budget.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BudgetConfig {
    pub budget: u64,
    pub config: AbstractConfig,
}

impl fmt::Display for BudgetConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y={} {}", self.budget, self.config)
    }
}

/// Attaches budget `y ≤ v` to an abstract configuration.
pub fn lift(v: u64, a: &AbstractConfig, y: u64) -> Result<BudgetConfig, AcptpnError> {
    if y > v {
        return Err(AcptpnError::BudgetOutOfRange { budget: y, v });
    }
    Ok(BudgetConfig {
        budget: y,
        config: a.clone(),
    })
}

/// Successors under discrete steps and timed steps of types 1 and 2.
pub fn a_successors(net: &PtpnNet, b: &BudgetConfig) -> Vec<(BudgetConfig, AbstractStep)> {
    let mut out = Vec::new();
    for (t, tr) in net.transitions().iter().enumerate() {
        if tr.cost > b.budget {
            continue;
        }
        for (c, s) in discrete_successors(net, &b.config, t).expect("index in range") {
            out.push((
                BudgetConfig {
                    budget: b.budget - tr.cost,
                    config: c,
                },
                s,
            ));
        }
    }
    for s in timed_kinds(&b.config) {
        if matches!(s, AbstractStep::Type1 | AbstractStep::Type2) {
            let c = apply_timed(net, &b.config, &s).expect("applicable");
            out.push((
                BudgetConfig {
                    budget: b.budget,
                    config: c,
                },
                s,
            ));
        }
    }
    out
}

/// Successors under timed steps of types 3 and 4 (budget permitting).
pub fn b_successors(net: &PtpnNet, b: &BudgetConfig) -> Vec<(BudgetConfig, AbstractStep)> {
    let z = b.config.storage_rate(net);
    if z > b.budget {
        return Vec::new();
    }
    timed_kinds(&b.config)
        .into_iter()
        .filter(AbstractStep::is_slow)
        .map(|s| {
            let c = apply_timed(net, &b.config, &s).expect("applicable");
            (
                BudgetConfig {
                    budget: b.budget - z,
                    config: c,
                },
                s,
            )
        })
        .collect()
}

/// All budgeted successors.
pub fn budget_successors(net: &PtpnNet, b: &BudgetConfig) -> Vec<(BudgetConfig, AbstractStep)> {
    let mut v = a_successors(net, b);
    v.extend(b_successors(net, b));
    v
}

/// Applies one labelled step under the budget discipline.
pub fn apply_budget_step(
    net: &PtpnNet,
    b: &BudgetConfig,
    step: &AbstractStep,
) -> Option<BudgetConfig> {
    budget_successors(net, b)
        .into_iter()
        .find(|(_, s)| s == step)
        .map(|(c, _)| c)
}

/// Number of tokens on cost places.
pub fn cost_tokens(net: &PtpnNet, a: &AbstractConfig) -> usize {
    a.tokens().filter(|t| net.is_cost_place(t.place)).count()
}

/// Membership in the upward closure (w.r.t. `≤^f`) of the finite set of
/// cost-place-only configurations with at most `v` tokens.
pub fn in_up_c(net: &PtpnNet, v: u64, b: &BudgetConfig) -> bool {
    b.budget <= v && cost_tokens(net, &b.config) as u64 <= v
}

/// Which places the larger configuration may add tokens on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderKind {
    /// Free places only (`≤^f`).
    Free,
    /// Cost places only (`≤^c`).
    Cost,
    /// Any place (`≤^fc`).
    Any,
}

impl OrderKind {
    fn allows(self, net: &PtpnNet, place: usize) -> bool {
        match self {
            OrderKind::Free => !net.is_cost_place(place),
            OrderKind::Cost => net.is_cost_place(place),
            OrderKind::Any => true,
        }
    }

    fn allows_group(self, net: &PtpnNet, g: &Group) -> bool {
        g.iter().all(|t| self.allows(net, t.place))
    }
}

/// Witness of `β ≤ γ`: a group injection `β → γ` and per-group residuals
/// aligned with the groups of `γ`. Unmapped groups of `γ` are entirely residual.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderWitness {
    pub injection: Vec<(Slot, Slot)>,
    pub high: Vec<Group>,
    pub center: Group,
    pub low: Vec<Group>,
}

impl OrderWitness {
    /// The empty addition on `β`.
    pub fn identity(beta: &AbstractConfig) -> Self {
        let mut injection: Vec<(Slot, Slot)> = (0..beta.high.len())
            .map(|i| (Slot::High(i), Slot::High(i)))
            .collect();
        injection.push((Slot::Center, Slot::Center));
        injection.extend((0..beta.low.len()).map(|i| (Slot::Low(i), Slot::Low(i))));
        OrderWitness {
            injection,
            high: vec![vec![]; beta.high.len()],
            center: vec![],
            low: vec![vec![]; beta.low.len()],
        }
    }

    /// Every residual token.
    pub fn tokens(&self) -> impl Iterator<Item = &crate::aptpn::AgedToken> {
        self.high
            .iter()
            .flatten()
            .chain(self.center.iter())
            .chain(self.low.iter().flatten())
    }
}

/// `small ⊆ big` as sorted multisets; returns `big − small`.
pub(crate) fn msub(big: &Group, small: &Group) -> Option<Group> {
    let mut out = Vec::with_capacity(big.len().saturating_sub(small.len()));
    let mut j = 0;
    for x in big {
        if j < small.len() && small[j] == *x {
            j += 1;
        } else if j < small.len() && small[j] < *x {
            return None;
        } else {
            out.push(*x);
        }
    }
    if j == small.len() {
        Some(out)
    } else {
        None
    }
}

/// Sorted multiset sum.
pub(crate) fn madd(a: &Group, b: &Group) -> Group {
    let mut v = a.clone();
    v.extend(b.iter().copied());
    v.sort();
    v
}

/// Lexicographically least strictly monotone alignment of `bs` into `cs`.
fn align(net: &PtpnNet, kind: OrderKind, bs: &[Group], cs: &[Group]) -> Option<Vec<usize>> {
    let fits =
        |i: usize, j: usize| msub(&cs[j], &bs[i]).is_some_and(|d| kind.allows_group(net, &d));
    let pure = |j: usize| kind.allows_group(net, &cs[j]);
    let mut dead: HashSet<(usize, usize)> = HashSet::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        from: usize,
        bs: usize,
        cs: usize,
        fits: &dyn Fn(usize, usize) -> bool,
        pure: &dyn Fn(usize) -> bool,
        dead: &mut HashSet<(usize, usize)>,
        acc: &mut Vec<usize>,
    ) -> bool {
        if i == bs {
            return (from..cs).all(pure);
        }
        if dead.contains(&(i, from)) {
            return false;
        }
        let mut j = from;
        while j + (bs - i) <= cs {
            if fits(i, j) {
                acc.push(j);
                if rec(i + 1, j + 1, bs, cs, fits, pure, dead, acc) {
                    return true;
                }
                acc.pop();
            }
            if !pure(j) {
                break;
            }
            j += 1;
        }
        dead.insert((i, from));
        false
    }
    let mut acc = Vec::new();
    if rec(0, 0, bs.len(), cs.len(), &fits, &pure, &mut dead, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

/// Decides `β ≤ γ` for the given kind, returning the lexicographically least
/// witness. Budgets and control-states must coincide.
pub fn leq(
    net: &PtpnNet,
    kind: OrderKind,
    beta: &BudgetConfig,
    gamma: &BudgetConfig,
) -> Option<OrderWitness> {
    if beta.budget != gamma.budget {
        return None;
    }
    leq_config(net, kind, &beta.config, &gamma.config)
}

/// As [`leq`] on configurations without budgets.
pub fn leq_config(
    net: &PtpnNet,
    kind: OrderKind,
    b: &AbstractConfig,
    c: &AbstractConfig,
) -> Option<OrderWitness> {
    if b.state != c.state || b.size() > c.size() {
        return None;
    }
    let center = msub(&c.center, &b.center)?;
    if !kind.allows_group(net, &center) {
        return None;
    }
    let hi = align(net, kind, &b.high, &c.high)?;
    let lo = align(net, kind, &b.low, &c.low)?;
    let mut injection: Vec<(Slot, Slot)> = hi
        .iter()
        .enumerate()
        .map(|(i, &j)| (Slot::High(i), Slot::High(j)))
        .collect();
    injection.push((Slot::Center, Slot::Center));
    injection.extend(
        lo.iter()
            .enumerate()
            .map(|(i, &j)| (Slot::Low(i), Slot::Low(j))),
    );
    let residual = |bs: &[Group], cs: &[Group], map: &[usize]| {
        let mut r = cs.to_vec();
        for (i, &j) in map.iter().enumerate() {
            r[j] = msub(&cs[j], &bs[i]).expect("aligned");
        }
        r
    };
    Some(OrderWitness {
        injection,
        high: residual(&b.high, &c.high, &hi),
        center,
        low: residual(&b.low, &c.low, &lo),
    })
}

/// Source group of each high and low target group, if any.
type GroupMaps = (Vec<Option<usize>>, Vec<Option<usize>>);

fn check_injection(w: &OrderWitness, beta: &AbstractConfig) -> Result<GroupMaps, AcptpnError> {
    let bad = |s: &str| AcptpnError::BadWitness(s.to_string());
    let mut hi: Vec<Option<usize>> = vec![None; w.high.len()];
    let mut lo: Vec<Option<usize>> = vec![None; w.low.len()];
    let mut seen_center = false;
    let mut mapped_hi = vec![false; beta.high.len()];
    let mut mapped_lo = vec![false; beta.low.len()];
    for &(src, dst) in &w.injection {
        match (src, dst) {
            (Slot::Center, Slot::Center) => seen_center = true,
            (Slot::High(i), Slot::High(j))
                if i < beta.high.len() && j < w.high.len() && hi[j].is_none() && !mapped_hi[i] =>
            {
                hi[j] = Some(i);
                mapped_hi[i] = true;
            }
            (Slot::Low(i), Slot::Low(j))
                if i < beta.low.len() && j < w.low.len() && lo[j].is_none() && !mapped_lo[i] =>
            {
                lo[j] = Some(i);
                mapped_lo[i] = true;
            }
            _ => {
                return Err(bad(
                    "injection pairs must map high to high, center to center, low to low",
                ))
            }
        }
    }
    if !seen_center || mapped_hi.contains(&false) || mapped_lo.contains(&false) {
        return Err(bad("injection is not total"));
    }
    for map in [&hi, &lo] {
        let order: Vec<usize> = map.iter().flatten().copied().collect();
        if order.windows(2).any(|p| p[0] >= p[1]) {
            return Err(bad("injection is not strictly monotone"));
        }
    }
    Ok((hi, lo))
}

/// Builds `γ = α ⊕ β` where `α` is given as a witness over `γ`'s groups.
pub fn oplus(
    net: &PtpnNet,
    kind: OrderKind,
    alpha: &OrderWitness,
    beta: &AbstractConfig,
) -> Result<AbstractConfig, AcptpnError> {
    if !alpha.tokens().all(|t| kind.allows(net, t.place)) {
        return Err(AcptpnError::BadWitness(
            "addition uses a place outside the order's place set".into(),
        ));
    }
    let (hi, lo) = check_injection(alpha, beta)?;
    let build =
        |res: &[Group], map: &[Option<usize>], src: &[Group]| -> Result<Vec<Group>, AcptpnError> {
            res.iter()
                .zip(map)
                .map(|(r, m)| {
                    let g = match m {
                        Some(i) => madd(&src[*i], r),
                        None => r.clone(),
                    };
                    if g.is_empty() {
                        Err(AcptpnError::BadWitness(
                            "unmapped residual group is empty".into(),
                        ))
                    } else {
                        Ok(g)
                    }
                })
                .collect()
        };
    Ok(AbstractConfig {
        state: beta.state,
        high: build(&alpha.high, &hi, &beta.high)?,
        center: madd(&beta.center, &alpha.center),
        low: build(&alpha.low, &lo, &beta.low)?,
    })
}

/// Recovers the addition `α` with `α ⊕ β = γ` along a given injection.
pub fn decompose_oplus(
    net: &PtpnNet,
    kind: OrderKind,
    beta: &AbstractConfig,
    gamma: &AbstractConfig,
    injection: &[(Slot, Slot)],
) -> Result<OrderWitness, AcptpnError> {
    let bad = |s: &str| AcptpnError::BadWitness(s.to_string());
    if beta.state != gamma.state {
        return Err(bad("control-states differ"));
    }
    let shell = OrderWitness {
        injection: injection.to_vec(),
        high: gamma.high.clone(),
        center: vec![],
        low: gamma.low.clone(),
    };
    let (hi, lo) = check_injection(&shell, beta)?;
    let diff =
        |cs: &[Group], map: &[Option<usize>], bs: &[Group]| -> Result<Vec<Group>, AcptpnError> {
            cs.iter()
                .zip(map)
                .map(|(c, m)| match m {
                    Some(i) => msub(c, &bs[*i]).ok_or_else(|| bad("mapped group is not contained")),
                    None => Ok(c.clone()),
                })
                .collect()
        };
    let w = OrderWitness {
        injection: shell.injection,
        high: diff(&gamma.high, &hi, &beta.high)?,
        center: msub(&gamma.center, &beta.center).ok_or_else(|| bad("center is not contained"))?,
        low: diff(&gamma.low, &lo, &beta.low)?,
    };
    if !w.tokens().all(|t| kind.allows(net, t.place)) {
        return Err(bad("residual uses a place outside the order's place set"));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aptpn::example::{c1, c3, c4};
    use crate::aptpn::AgedToken;
    use crate::ptpn::running_example;

    fn lifted(a: AbstractConfig, y: u64) -> BudgetConfig {
        BudgetConfig {
            budget: y,
            config: a,
        }
    }

    #[test]
    fn type3_needs_budget_for_storage() {
        let net = running_example();
        let b = lifted(c3(), 19);
        assert!(b_successors(&net, &b).is_empty());
        let b = lifted(c3(), 20);
        let succ = b_successors(&net, &b);
        assert!(succ
            .iter()
            .any(|(c, s)| *s == AbstractStep::Type3(1) && c.config == c4() && c.budget == 0));
        let one = lifted(AbstractConfig::integral(0, vec![AgedToken::new(0, 0)]), 0);
        assert!(b_successors(&net, &one).is_empty());
    }

    #[test]
    fn zero_cost_steps_keep_the_budget() {
        let net = running_example().with_costs(|_| 0, |_| 0);
        let b = lifted(AbstractConfig::integral(0, vec![AgedToken::new(0, 1)]), 4);
        for (c, _) in budget_successors(&net, &b) {
            assert_eq!(c.budget, 4);
        }
    }

    #[test]
    fn lift_range() {
        let a = c1();
        assert_eq!(
            lift(5, &a, 6),
            Err(AcptpnError::BudgetOutOfRange { budget: 6, v: 5 })
        );
        assert_eq!(lift(0, &a, 0).unwrap().budget, 0);
    }

    #[test]
    fn free_additions_and_round_trip() {
        let net = running_example();
        let beta = lifted(c1(), 3);
        assert_eq!(
            leq(&net, OrderKind::Free, &beta, &beta),
            Some(OrderWitness::identity(&beta.config))
        );
        // Add free (p3, 6) tokens to the center and a new low group.
        let mut g = c1();
        g.center.push(AgedToken::new(2, 6));
        g.center.sort();
        g.low.push(vec![AgedToken::new(2, 6)]);
        let gamma = lifted(g.clone(), 3);
        let w = leq(&net, OrderKind::Free, &beta, &gamma).expect("free addition");
        let back = oplus(&net, OrderKind::Free, &w, &beta.config).unwrap();
        assert_eq!(back, g);
        let again = decompose_oplus(&net, OrderKind::Free, &beta.config, &g, &w.injection).unwrap();
        assert_eq!(again, w);
        // A cost-place addition breaks the free order but not the general one.
        let mut h = c1();
        h.high[0].push(AgedToken::new(0, 2));
        h.high[0].sort();
        let eta = lifted(h, 3);
        assert!(leq(&net, OrderKind::Free, &beta, &eta).is_none());
        assert!(leq(&net, OrderKind::Any, &beta, &eta).is_some());
        assert!(leq(&net, OrderKind::Cost, &beta, &eta).is_some());
    }

    #[test]
    fn empty_addition_and_bad_witness() {
        let net = running_example();
        let b = c1();
        assert_eq!(
            oplus(&net, OrderKind::Free, &OrderWitness::identity(&b), &b).unwrap(),
            b
        );
        // The new leading high group holds a cost token and is left unmapped.
        let mut bigger = b.clone();
        bigger.high.insert(0, vec![AgedToken::new(0, 1)]);
        let inj: Vec<(Slot, Slot)> = OrderWitness::identity(&b)
            .injection
            .into_iter()
            .map(|(s, d)| match d {
                Slot::High(j) => (s, Slot::High(j + 1)),
                _ => (s, d),
            })
            .collect();
        assert!(decompose_oplus(&net, OrderKind::Any, &b, &bigger, &inj).is_ok());
        assert!(decompose_oplus(&net, OrderKind::Free, &b, &bigger, &inj).is_err());
    }

    #[test]
    fn budget_mismatch_is_incomparable() {
        let net = running_example();
        assert!(leq(&net, OrderKind::Any, &lifted(c1(), 1), &lifted(c1(), 2)).is_none());
    }

    #[test]
    fn cost_additions_can_block_slow_steps() {
        let net = running_example();
        let small = lifted(AbstractConfig::integral(0, vec![AgedToken::new(1, 0)]), 2);
        let big = lifted(
            AbstractConfig::integral(0, vec![AgedToken::new(1, 0), AgedToken::new(0, 0)]),
            2,
        );
        assert!(leq(&net, OrderKind::Cost, &small, &big).is_some());
        assert!(!b_successors(&net, &small).is_empty());
        assert!(b_successors(&net, &big).is_empty());
    }
}

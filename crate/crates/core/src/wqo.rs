//! Upward-closed sets over well-quasi-orders: minimal bases, the generalized
//! Valk–Jantzen construction, the classic vector version, and the abstract
//! phase construction with three-valued oracles.

use std::fmt;

/// Three-valued verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    /// From a definite boolean.
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }

    /// Disjunction: yes dominates, then unknown.
    pub fn or(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::Yes, _) | (_, Tri::Yes) => Tri::Yes,
            (Tri::No, Tri::No) => Tri::No,
            _ => Tri::Unknown,
        }
    }
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Unknown => "unknown",
        })
    }
}

/// Minimal antichain with the same upward closure. Keeps the first
/// representative of each equivalence class.
pub fn minimize<T: Clone>(elements: &[T], leq: impl Fn(&T, &T) -> bool) -> Vec<T> {
    let mut basis: Vec<T> = Vec::new();
    for x in elements {
        if basis.iter().any(|b| leq(b, x)) {
            continue;
        }
        basis.retain(|b| !leq(x, b));
        basis.push(x.clone());
    }
    basis
}

/// `x ∈ ↑basis`.
pub fn in_upward<T>(basis: &[T], x: &T, leq: impl Fn(&T, &T) -> bool) -> bool {
    basis.iter().any(|b| leq(b, x))
}

/// `↑a ⊆ ↑b` for finite bases.
pub fn dominated<T>(a: &[T], b: &[T], leq: impl Fn(&T, &T) -> bool) -> bool {
    a.iter().all(|x| b.iter().any(|y| leq(y, x)))
}

/// Why a generalized Valk–Jantzen run stopped without a basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GvjFailure {
    /// The oracle answered unknown.
    OracleUnknown,
    /// The oracle claimed a missing element but enumeration rounds ran out.
    EnumerationExhausted { rounds: usize },
}

/// Generalized Valk–Jantzen: grows `X ⊆ V` until the oracle reports
/// `V ⊆ ↑X`, then minimizes.
///
/// `enumerate(r)` lists the elements of `V` found in round `r`; every element
/// of `V` must appear in some round. `oracle(X)` decides `∃v ∈ V. v ∉ ↑X`.
pub fn gvj<T: Clone>(
    mut enumerate: impl FnMut(usize) -> Vec<T>,
    mut oracle: impl FnMut(&[T]) -> Tri,
    leq: impl Fn(&T, &T) -> bool,
    max_rounds: usize,
) -> Result<Vec<T>, GvjFailure> {
    let mut x: Vec<T> = Vec::new();
    loop {
        match oracle(&x) {
            Tri::No => return Ok(minimize(&x, &leq)),
            Tri::Unknown => return Err(GvjFailure::OracleUnknown),
            Tri::Yes => {
                let found = (0..=max_rounds)
                    .find_map(|r| enumerate(r).into_iter().find(|v| !in_upward(&x, v, &leq)));
                match found {
                    Some(v) => x.push(v),
                    None => return Err(GvjFailure::EnumerationExhausted { rounds: max_rounds }),
                }
            }
        }
    }
}

/// Componentwise order on vectors.
pub fn vec_leq(a: &[u64], b: &[u64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x <= y)
}

/// A vector over `ℕ ∪ {ω}`; `None` is `ω`.
pub type OmegaVec = Vec<Option<u64>>;

/// Ideals whose union is the complement of `↑basis` in `ℕ^k`.
fn complement_ideals(k: usize, basis: &[Vec<u64>]) -> Vec<OmegaVec> {
    let mut ideals: Vec<OmegaVec> = vec![vec![None; k]];
    for b in basis {
        let mut next: Vec<OmegaVec> = Vec::new();
        for u in &ideals {
            for i in 0..k {
                if b[i] == 0 {
                    continue;
                }
                let cap = b[i] - 1;
                let mut w = u.clone();
                w[i] = Some(w[i].map_or(cap, |x| x.min(cap)));
                next.push(w);
            }
        }
        let le = |a: &OmegaVec, b: &OmegaVec| {
            a.iter().zip(b).all(|(x, y)| {
                matches!((x, y), (_, None)) || matches!((x, y), (Some(p), Some(q)) if p <= q)
            })
        };
        let mut kept: Vec<OmegaVec> = Vec::new();
        for w in next {
            if kept.iter().any(|k| le(&w, k)) {
                continue;
            }
            kept.retain(|k| !le(k, &w));
            kept.push(w);
        }
        ideals = kept;
    }
    ideals
}

/// Classic Valk–Jantzen: minimal elements of an upward-closed `V ⊆ ℕ^k`
/// from the oracle `u ↦ (u↓ ∩ V ≠ ∅)`.
///
/// `omega_cap` bounds the values tried for `ω` coordinates when a witness is
/// being localized; `None` is returned if it is too small.
pub fn valk_jantzen(
    k: usize,
    mut oracle: impl FnMut(&OmegaVec) -> bool,
    omega_cap: u64,
) -> Option<Vec<Vec<u64>>> {
    let mut basis: Vec<Vec<u64>> = Vec::new();
    loop {
        let ideal = complement_ideals(k, &basis).into_iter().find(|u| oracle(u));
        let Some(u) = ideal else {
            return Some(basis);
        };
        let n = (0..=omega_cap).find(|&n| {
            let w: OmegaVec = u.iter().map(|x| Some(x.unwrap_or(n))).collect();
            oracle(&w)
        })?;
        let mut w: Vec<u64> = u.iter().map(|x| x.unwrap_or(n)).collect();
        for i in 0..k {
            while w[i] > 0 {
                let mut t = w.clone();
                t[i] -= 1;
                if oracle(&t.iter().map(|&x| Some(x)).collect()) {
                    w = t;
                } else {
                    break;
                }
            }
        }
        basis.push(w);
    }
}

/// Subsequence (Higman) embedding of words.
pub fn subword_leq<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// Oracles of an abstract phase structure `(S, C, ≤, →_A, →_B, init, F)`.
///
/// Every method may answer unknown (`Tri::Unknown` or `None`).
pub trait PhaseStructure {
    type State: Clone + fmt::Debug;

    /// The quasi-order `≤`.
    fn leq(&self, a: &Self::State, b: &Self::State) -> bool;

    /// `init →_A* F`.
    fn init_reaches_final(&mut self) -> Tri;

    /// Minimal elements of `Pre*_A(F) ∩ ↑C`.
    fn final_basis(&mut self) -> Option<Vec<Self::State>>;

    /// Minimal elements of `Pre_B(↑X)`.
    fn pre_b_basis(&mut self, x: &[Self::State]) -> Option<Vec<Self::State>>;

    /// `s ∈ Pre*_A(↑U)`.
    fn pre_a_member(&mut self, s: &Self::State, u: &[Self::State]) -> Tri;

    /// `∃z ∈ ↑C \ ↑X. z →_A* ↑U`.
    fn pre_a_outside(&mut self, x: &[Self::State], u: &[Self::State]) -> Tri;

    /// Elements of `↑C` listed in round `r`; every element appears eventually.
    fn enumerate_up_c(&mut self, r: usize) -> Vec<Self::State>;

    /// The initial state.
    fn init(&self) -> Self::State;
}

/// Resource caps for the phase construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseBudget {
    pub max_iterations: usize,
    pub enumeration_rounds: usize,
}

impl Default for PhaseBudget {
    fn default() -> Self {
        PhaseBudget {
            max_iterations: 50,
            enumeration_rounds: 64,
        }
    }
}

/// Verdict of the phase construction with diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseOutcome {
    pub answer: Tri,
    pub iterations: usize,
    pub basis_sizes: Vec<usize>,
    pub note: String,
}

/// Decides `init →* F` by the abstract phase construction.
pub fn phase_reachable<P: PhaseStructure>(p: &mut P, budget: PhaseBudget) -> PhaseOutcome {
    let direct = p.init_reaches_final();
    if direct == Tri::Yes {
        return PhaseOutcome {
            answer: Tri::Yes,
            iterations: 0,
            basis_sizes: vec![],
            note: "reached without slow steps".into(),
        };
    }
    let unknown = |iterations: usize, sizes: Vec<usize>, note: &str| PhaseOutcome {
        answer: Tri::Unknown,
        iterations,
        basis_sizes: sizes,
        note: note.to_string(),
    };
    let Some(u1p) = p.final_basis() else {
        return unknown(0, vec![], "final basis unavailable");
    };
    let Some(mut u) = p.pre_b_basis(&u1p) else {
        return unknown(0, vec![], "slow-step predecessor basis unavailable");
    };
    u = minimize(&u, |a, b| p.leq(a, b));
    let mut sizes = vec![u.len()];
    let mut iterations = 1;
    loop {
        if u.is_empty() {
            break;
        }
        if iterations > budget.max_iterations {
            return unknown(iterations, sizes, "iteration budget exhausted");
        }
        let current = u.clone();
        let next_prime = {
            let cell = std::cell::RefCell::new(&mut *p);
            let res = gvj(
                |r| {
                    let mut q = cell.borrow_mut();
                    let cands = q.enumerate_up_c(r);
                    cands
                        .into_iter()
                        .filter(|s| q.pre_a_member(s, &current) == Tri::Yes)
                        .collect()
                },
                |x| cell.borrow_mut().pre_a_outside(x, &current),
                |a, b| cell.borrow().leq(a, b),
                budget.enumeration_rounds,
            );
            match res {
                Ok(b) => b,
                Err(GvjFailure::OracleUnknown) => {
                    return unknown(iterations, sizes, "reachability oracle unknown")
                }
                Err(GvjFailure::EnumerationExhausted { .. }) => {
                    return unknown(iterations, sizes, "enumeration exhausted")
                }
            }
        };
        let Some(pre) = p.pre_b_basis(&next_prime) else {
            return unknown(iterations, sizes, "slow-step predecessor basis unavailable");
        };
        let mut all = pre;
        all.extend(u.iter().cloned());
        let next = minimize(&all, |a, b| p.leq(a, b));
        assert!(
            dominated(&u, &next, |a, b| p.leq(a, b)),
            "upward closures must grow"
        );
        iterations += 1;
        sizes.push(next.len());
        let converged = dominated(&next, &u, |a, b| p.leq(a, b));
        u = next;
        if converged {
            break;
        }
    }
    let init = p.init();
    let via_slow = if u.is_empty() {
        Tri::No
    } else {
        p.pre_a_member(&init, &u)
    };
    let answer = direct.or(via_slow);
    PhaseOutcome {
        answer,
        iterations,
        basis_sizes: sizes,
        note: "converged".into(),
    }
}

/// A bounded two-counter family used to exercise the phase construction.
pub mod toy {
    use std::collections::{BTreeSet, VecDeque};

    use super::*;

    /// Counter system over `ℕ²` with vector transitions. `→_A` steps are
    /// enabled whenever the result is nonnegative; `→_B` steps additionally
    /// need source and target in `↑C`.
    #[derive(Debug, Clone)]
    pub struct CounterSystem {
        pub a_moves: Vec<[i64; 2]>,
        pub b_moves: Vec<[i64; 2]>,
        pub c: Vec<[u64; 2]>,
        pub init: [u64; 2],
        pub target: [u64; 2],
    }

    fn add(s: [u64; 2], d: [i64; 2]) -> Option<[u64; 2]> {
        let x = s[0] as i64 + d[0];
        let y = s[1] as i64 + d[1];
        (x >= 0 && y >= 0).then_some([x as u64, y as u64])
    }

    fn le(a: &[u64; 2], b: &[u64; 2]) -> bool {
        a[0] <= b[0] && a[1] <= b[1]
    }

    fn join(a: [u64; 2], b: [u64; 2]) -> [u64; 2] {
        [a[0].max(b[0]), a[1].max(b[1])]
    }

    impl CounterSystem {
        fn in_up_c(&self, s: &[u64; 2]) -> bool {
            self.c.iter().any(|c| le(c, s))
        }

        fn b_step(&self, s: [u64; 2], d: [i64; 2]) -> Option<[u64; 2]> {
            let t = add(s, d)?;
            (self.in_up_c(&s) && self.in_up_c(&t)).then_some(t)
        }

        fn forward(&self, from: [u64; 2], with_b: bool, goal: &dyn Fn(&[u64; 2]) -> bool) -> bool {
            let mut seen = BTreeSet::from([from]);
            let mut queue = VecDeque::from([from]);
            while let Some(s) = queue.pop_front() {
                if goal(&s) {
                    return true;
                }
                let mut next: Vec<[u64; 2]> =
                    self.a_moves.iter().filter_map(|d| add(s, *d)).collect();
                if with_b {
                    next.extend(self.b_moves.iter().filter_map(|d| self.b_step(s, *d)));
                }
                for t in next {
                    if seen.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
            false
        }

        /// Ground truth by explicit search (the moves never raise the sum).
        pub fn bfs_reachable(&self) -> bool {
            self.forward(self.init, true, &|s| le(&self.target, s))
        }

        fn pre_a_star(&self, basis: &[[u64; 2]]) -> Vec<[u64; 2]> {
            let mut cur = minimize(basis, le);
            loop {
                let mut all = cur.clone();
                for m in &cur {
                    for d in &self.a_moves {
                        let need = [0, 1].map(|i| (m[i] as i64 - d[i]).max(-d[i]).max(0) as u64);
                        all.push(need);
                    }
                }
                let next = minimize(&all, le);
                if dominated(&next, &cur, le) {
                    return cur;
                }
                cur = next;
            }
        }

        fn restrict_to_up_c(&self, basis: &[[u64; 2]]) -> Vec<[u64; 2]> {
            let all: Vec<[u64; 2]> = basis
                .iter()
                .flat_map(|b| self.c.iter().map(move |c| join(*b, *c)))
                .collect();
            minimize(&all, le)
        }
    }

    impl PhaseStructure for CounterSystem {
        type State = [u64; 2];

        fn leq(&self, a: &[u64; 2], b: &[u64; 2]) -> bool {
            le(a, b)
        }

        fn init_reaches_final(&mut self) -> Tri {
            Tri::from_bool(self.forward(self.init, false, &|s| le(&self.target, s)))
        }

        fn final_basis(&mut self) -> Option<Vec<[u64; 2]>> {
            let pre = self.pre_a_star(&[self.target]);
            Some(self.restrict_to_up_c(&pre))
        }

        fn pre_b_basis(&mut self, x: &[[u64; 2]]) -> Option<Vec<[u64; 2]>> {
            let mut all = Vec::new();
            for m in x {
                for d in &self.b_moves {
                    for c1 in &self.c {
                        for c2 in &self.c {
                            let goal = join(*m, *c2);
                            let need =
                                [0, 1].map(|i| (goal[i] as i64 - d[i]).max(-d[i]).max(0) as u64);
                            all.push(join(need, *c1));
                        }
                    }
                }
            }
            Some(minimize(&all, le))
        }

        fn pre_a_member(&mut self, s: &[u64; 2], u: &[[u64; 2]]) -> Tri {
            Tri::from_bool(self.forward(*s, false, &|t| u.iter().any(|m| le(m, t))))
        }

        fn pre_a_outside(&mut self, x: &[[u64; 2]], u: &[[u64; 2]]) -> Tri {
            let v = self.restrict_to_up_c(&self.pre_a_star(u));
            Tri::from_bool(v.iter().any(|b| !x.iter().any(|m| le(m, b))))
        }

        fn enumerate_up_c(&mut self, r: usize) -> Vec<[u64; 2]> {
            let r = r as u64;
            let mut v = Vec::new();
            for a in 0..=r {
                for b in 0..=r {
                    if (a == r || b == r) && self.in_up_c(&[a, b]) {
                        v.push([a, b]);
                    }
                }
            }
            v
        }

        fn init(&self) -> [u64; 2] {
            self.init
        }
    }
}

#[cfg(test)]
mod tests {
    use super::toy::CounterSystem;
    use super::*;

    #[test]
    fn minimize_examples() {
        let v = minimize(&[vec![1, 2], vec![2, 2], vec![3, 0]], |a, b| vec_leq(a, b));
        assert_eq!(v, vec![vec![1, 2], vec![3, 0]]);
        assert!(minimize::<Vec<u64>>(&[], |a, b| vec_leq(a, b)).is_empty());
        let w = minimize(&["ab".to_string(), "aab".to_string()], |a, b| {
            subword_leq(a.as_bytes(), b.as_bytes())
        });
        assert_eq!(w, vec!["ab".to_string()]);
    }

    fn grid(r: usize) -> Vec<Vec<u64>> {
        let r = r as u64;
        (0..=r)
            .flat_map(|a| (0..=r).map(move |b| vec![a, b]))
            .filter(|v| v[0] == r || v[1] == r)
            .collect()
    }

    #[test]
    fn gvj_on_vectors() {
        let gens = vec![vec![1, 2], vec![3, 0]];
        let in_v = |v: &Vec<u64>| gens.iter().any(|g| vec_leq(g, v));
        let oracle = |x: &[Vec<u64>]| {
            let all: Vec<Vec<u64>> = (0..=10).flat_map(grid).collect();
            Tri::from_bool(
                all.iter()
                    .any(|v| in_v(v) && !in_upward(x, v, |a, b| vec_leq(a, b))),
            )
        };
        let basis = gvj(
            |r| grid(r).into_iter().filter(|v| in_v(v)).collect(),
            oracle,
            |a, b| vec_leq(a, b),
            10,
        )
        .unwrap();
        let mut sorted = basis.clone();
        sorted.sort();
        assert_eq!(sorted, gens);
        // Whole domain.
        let all = gvj(
            grid,
            |x| Tri::from_bool(x.is_empty()),
            |a, b| vec_leq(a, b),
            10,
        )
        .unwrap();
        assert_eq!(all, vec![vec![0, 0]]);
        assert_eq!(
            gvj(grid, |_| Tri::Unknown, |a, b| vec_leq(a, b), 3),
            Err(GvjFailure::OracleUnknown)
        );
    }

    #[test]
    fn gvj_on_words() {
        let words = |r: usize| -> Vec<Vec<u8>> {
            (0..1u32 << r)
                .map(|bits| {
                    (0..r)
                        .map(|i| if bits >> i & 1 == 1 { b'b' } else { b'a' })
                        .collect()
                })
                .collect()
        };
        let gen = b"ab".to_vec();
        let in_v = |w: &Vec<u8>| subword_leq(&gen, w);
        let oracle = |x: &[Vec<u8>]| {
            let found = (0..=6)
                .flat_map(words)
                .any(|w| in_v(&w) && !in_upward(x, &w, |a, b| subword_leq(a, b)));
            Tri::from_bool(found)
        };
        let basis = gvj(
            |r| words(r).into_iter().filter(|w| in_v(w)).collect(),
            oracle,
            |a, b| subword_leq(a, b),
            6,
        )
        .unwrap();
        assert_eq!(basis, vec![gen.clone()]);
    }

    #[test]
    fn valk_jantzen_examples() {
        let oracle = |gens: Vec<Vec<u64>>| {
            move |u: &OmegaVec| {
                gens.iter()
                    .any(|g| g.iter().zip(u).all(|(x, y)| y.is_none_or(|y| *x <= y)))
            }
        };
        assert_eq!(
            valk_jantzen(2, oracle(vec![vec![2, 1]]), 10),
            Some(vec![vec![2, 1]])
        );
        assert_eq!(valk_jantzen(2, oracle(vec![]), 10), Some(vec![]));
        let mut b = valk_jantzen(
            3,
            oracle(vec![vec![1, 0, 2], vec![0, 3, 0], vec![2, 0, 1]]),
            10,
        )
        .unwrap();
        b.sort();
        assert_eq!(b, vec![vec![0, 3, 0], vec![1, 0, 2], vec![2, 0, 1]]);
    }

    fn toy(b_moves: Vec<[i64; 2]>, target: [u64; 2]) -> CounterSystem {
        CounterSystem {
            a_moves: vec![[-1, 1], [1, -1], [-2, 0]],
            b_moves,
            c: vec![[1, 1]],
            init: [4, 0],
            target,
        }
    }

    #[test]
    fn phase_without_slow_steps_is_plain_reachability() {
        let mut s = toy(vec![], [0, 3]);
        let out = phase_reachable(&mut s, PhaseBudget::default());
        assert_eq!(out.answer, Tri::from_bool(s.bfs_reachable()));
        let mut t = toy(vec![], [9, 9]);
        assert_eq!(
            phase_reachable(&mut t, PhaseBudget::default()).answer,
            Tri::No
        );
    }

    #[test]
    fn phase_matches_bfs_with_a_guarded_step() {
        for target in [[0, 3], [3, 1], [1, 3], [5, 0], [2, 2]] {
            let mut s = CounterSystem {
                a_moves: vec![[-1, 0], [0, -1], [1, -2]],
                b_moves: vec![[-1, 1], [2, -2]],
                c: vec![[1, 1], [2, 0]],
                init: [3, 1],
                target,
            };
            let expect = Tri::from_bool(s.bfs_reachable());
            let out = phase_reachable(&mut s, PhaseBudget::default());
            assert_eq!(out.answer, expect, "target {target:?}");
        }
    }
}

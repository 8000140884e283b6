//! Feasibility constraints of a computation skeleton, recognition of PTPN
//! constraint matrices, brute-force total unimodularity and vertex enumeration.
//!
//! Variables are ordered `y_1 … y_m` (birth ages) followed by `x_1 … x_n`
//! (delays). Every row is normalized to `coeffs · v ≤ rhs` or `< rhs`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ptpn::{
    fire, floor_u32, ConcreteConfig, ConcreteStep, Interval, PtpnError, PtpnNet, Rat, Token,
};

/// Default bound on matrix dimensions for the brute-force checks.
pub const DEFAULT_TU_CAP: usize = 8;

/// Variable cap for vertex enumeration.
pub const VERTEX_VAR_CAP: usize = 8;

/// Errors raised by the constraint machinery.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolytopeError {
    #[error(transparent)]
    Trace(#[from] PtpnError),
    #[error("matrix of size {rows}x{cols} exceeds the brute-force cap {cap}")]
    OverCap {
        rows: usize,
        cols: usize,
        cap: usize,
    },
    #[error("ragged matrix")]
    Ragged,
}

/// One normalized inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintRow {
    pub coeffs: Vec<i64>,
    pub rhs: i64,
    pub strict: bool,
}

impl ConstraintRow {
    /// Evaluates the row at `point`.
    pub fn holds(&self, point: &[Rat]) -> bool {
        let lhs: Rat = self
            .coeffs
            .iter()
            .zip(point)
            .map(|(c, v)| v * Rat::from_integer(BigInt::from(*c)))
            .sum();
        let rhs = Rat::from_integer(BigInt::from(self.rhs));
        if self.strict {
            lhs < rhs
        } else {
            lhs <= rhs
        }
    }
}

/// What a column stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Variable {
    /// Birth age of a token: initial tokens have index `None`, created tokens
    /// carry the index of the creating step.
    Birth { token: Token, step: Option<usize> },
    /// Delay of the timed step with this index in the trace.
    Delay { step: usize },
}

/// A constraint system `M · v ≤ c` with per-row strictness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub m: usize,
    pub n: usize,
    pub variables: Vec<Variable>,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintSystem {
    /// The integer matrix `M`.
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.rows.iter().map(|r| r.coeffs.clone()).collect()
    }

    /// True iff `point` satisfies every row, strictness included.
    pub fn satisfied_by(&self, point: &[Rat]) -> bool {
        self.rows.iter().all(|r| r.holds(point))
    }

    /// True iff `point` satisfies the closure (all rows non-strict).
    pub fn closure_satisfied_by(&self, point: &[Rat]) -> bool {
        self.rows.iter().all(|r| {
            ConstraintRow {
                strict: false,
                ..r.clone()
            }
            .holds(point)
        })
    }
}

struct Live {
    token: Token,
    var: usize,
    timed_before: usize,
}

/// Builds the constraint system of a trace together with the trace's own
/// `(y, x)` vector.
///
/// Initial tokens get a birth variable bounded by `[a,a]` for an integer age
/// `a`, otherwise by `(⌊a⌋, ⌈a⌉)`.
pub fn build_constraints(
    net: &PtpnNet,
    init: &ConcreteConfig,
    trace: &[ConcreteStep],
) -> Result<(ConstraintSystem, Vec<Rat>), PolytopeError> {
    struct Use {
        var: usize,
        first_timed: usize,
        len: usize,
        interval: Interval,
    }
    let mut births: Vec<(Variable, Rat, Interval)> = Vec::new();
    let mut live: Vec<Live> = Vec::new();
    for t in init.marking() {
        let lo = floor_u32(&t.age);
        let iv = if t.age.is_integer() {
            Interval::closed(lo, lo)
        } else {
            Interval::new(lo, Some(lo + 1), false, false).expect("unit interval")
        };
        live.push(Live {
            token: t.clone(),
            var: births.len(),
            timed_before: 0,
        });
        births.push((
            Variable::Birth {
                token: t.clone(),
                step: None,
            },
            t.age.clone(),
            iv,
        ));
    }
    let mut delays: Vec<(usize, Rat)> = Vec::new();
    let mut uses: Vec<Use> = Vec::new();
    let mut cur = init.clone();
    for (si, step) in trace.iter().enumerate() {
        let next = fire(net, &cur, step)?;
        match step {
            ConcreteStep::Timed(x) => {
                for l in live.iter_mut() {
                    l.token.age += x;
                }
                delays.push((si, x.clone()));
            }
            ConcreteStep::Discrete(f) => {
                let tr = net.transition(f.transition)?;
                let bind = |tokens: &[Token], arcs: &[crate::ptpn::Arc]| {
                    crate::ptpn::match_tokens(tokens, arcs).expect("validated by fire")
                };
                let in_w = bind(&f.input, &tr.input);
                let rd_w = bind(&f.read, &tr.read);
                let mut consumed = Vec::new();
                let mut taken = vec![false; live.len()];
                for (tokens, witness, arcs, consume) in [
                    (&f.input, &in_w, &tr.input, true),
                    (&f.read, &rd_w, &tr.read, false),
                ] {
                    for (ti, tok) in tokens.iter().enumerate() {
                        let li = (0..live.len())
                            .find(|&i| !taken[i] && live[i].token == *tok)
                            .expect("token is live");
                        taken[li] = true;
                        let l = &live[li];
                        uses.push(Use {
                            var: l.var,
                            first_timed: l.timed_before,
                            len: delays.len() - l.timed_before,
                            interval: arcs[witness[ti]].interval,
                        });
                        if consume {
                            consumed.push(li);
                        }
                    }
                }
                consumed.sort_unstable();
                for li in consumed.into_iter().rev() {
                    live.remove(li);
                }
                let out_w = bind(&f.output, &tr.output);
                for (oi, tok) in f.output.iter().enumerate() {
                    live.push(Live {
                        token: tok.clone(),
                        var: births.len(),
                        timed_before: delays.len(),
                    });
                    births.push((
                        Variable::Birth {
                            token: tok.clone(),
                            step: Some(si),
                        },
                        tok.age.clone(),
                        tr.output[out_w[oi]].interval,
                    ));
                }
            }
        }
        cur = next;
    }
    let m = births.len();
    let n = delays.len();
    let width = m + n;
    // (block key, block length, row)
    let mut keyed: Vec<(usize, usize, ConstraintRow)> = Vec::new();
    let bound_rows = |var: Option<usize>, first: usize, len: usize, iv: &Interval| {
        let mut rows = Vec::new();
        let mut up = vec![0i64; width];
        if let Some(j) = var {
            up[j] = 1;
        }
        for c in up.iter_mut().skip(m + first).take(len) {
            *c = 1;
        }
        let down: Vec<i64> = up.iter().map(|c| -c).collect();
        rows.push(ConstraintRow {
            coeffs: down,
            rhs: -(iv.lo as i64),
            strict: !iv.lo_closed,
        });
        if let Some(h) = iv.hi {
            rows.push(ConstraintRow {
                coeffs: up,
                rhs: h as i64,
                strict: !iv.hi_closed,
            });
        }
        rows
    };
    for (j, (_, _, iv)) in births.iter().enumerate() {
        for r in bound_rows(Some(j), 0, 0, iv) {
            keyed.push((j, 0, r));
        }
    }
    for u in &uses {
        for r in bound_rows(Some(u.var), u.first_timed, u.len, &u.interval) {
            keyed.push((u.var, u.len, r));
        }
    }
    for i in 0..n {
        let mut coeffs = vec![0i64; width];
        coeffs[m + i] = -1;
        keyed.push((
            m,
            1,
            ConstraintRow {
                coeffs,
                rhs: 0,
                strict: true,
            },
        ));
    }
    keyed.sort_by_key(|(k, l, _)| (*k, *l));
    let mut variables: Vec<Variable> = births.iter().map(|(v, _, _)| v.clone()).collect();
    variables.extend(delays.iter().map(|(s, _)| Variable::Delay { step: *s }));
    let mut point: Vec<Rat> = births.into_iter().map(|(_, a, _)| a).collect();
    point.extend(delays.into_iter().map(|(_, x)| x));
    let rows = keyed.into_iter().map(|(_, _, r)| r).collect();
    Ok((
        ConstraintSystem {
            m,
            n,
            variables,
            rows,
        },
        point,
    ))
}

/// Recognizes PTPN constraint matrices with `m` birth and `n` delay columns.
pub fn is_ptpn_constraint_matrix(matrix: &[Vec<i64>], m: usize, n: usize) -> bool {
    let mut start: Vec<Option<usize>> = vec![None; m];
    for row in matrix {
        if row.len() != m + n || row.iter().any(|c| !(-1..=1).contains(c)) {
            return false;
        }
        let ys: Vec<usize> = (0..m).filter(|&j| row[j] != 0).collect();
        let xs = &row[m..];
        let nz: Vec<usize> = (0..n).filter(|&i| xs[i] != 0).collect();
        let contiguous = nz.windows(2).all(|w| w[1] == w[0] + 1);
        if !contiguous {
            return false;
        }
        match ys.as_slice() {
            [] => {
                if let Some(&first) = nz.first() {
                    if nz.iter().any(|&i| xs[i] != xs[first]) {
                        return false;
                    }
                }
            }
            [j] => {
                let alpha = row[*j];
                if nz.iter().any(|&i| xs[i] != alpha) {
                    return false;
                }
                if let Some(&first) = nz.first() {
                    match start[*j] {
                        None => start[*j] = Some(first),
                        Some(k) if k != first => return false,
                        _ => {}
                    }
                }
            }
            _ => return false,
        }
    }
    true
}

/// Exact determinant by fraction-free elimination.
pub fn determinant(matrix: &[Vec<i64>]) -> BigInt {
    let k = matrix.len();
    if k == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = matrix
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for c in 0..k {
        if a[c][c].is_zero() {
            match (c + 1..k).find(|&r| !a[r][c].is_zero()) {
                Some(r) => {
                    a.swap(c, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for r in c + 1..k {
            for j in c + 1..k {
                let v = (&a[r][j] * &a[c][c] - &a[r][c] * &a[c][j]) / &prev;
                a[r][j] = v;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[c][c].clone();
    }
    sign * &a[k - 1][k - 1]
}

fn small_det(rows: &[usize], cols: &[usize], matrix: &[Vec<i64>]) -> Option<i128> {
    let k = rows.len();
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| matrix[r][c] as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for c in 0..k {
        if a[c][c] == 0 {
            match (c + 1..k).find(|&r| a[r][c] != 0) {
                Some(r) => {
                    a.swap(c, r);
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for r in c + 1..k {
            for j in c + 1..k {
                let v = a[r][j]
                    .checked_mul(a[c][c])?
                    .checked_sub(a[r][c].checked_mul(a[c][j])?)?;
                a[r][j] = v / prev;
            }
            a[r][c] = 0;
        }
        prev = a[c][c];
    }
    Some(sign * a[k - 1][k - 1])
}

fn combinations(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            if !rec(i + 1, n, k, cur, f) {
                return false;
            }
            cur.pop();
        }
        true
    }
    rec(0, n, k, &mut Vec::new(), f)
}

/// Total unimodularity by enumerating every square minor. Both dimensions must
/// be at most [`DEFAULT_TU_CAP`].
pub fn is_totally_unimodular(matrix: &[Vec<i64>]) -> Result<bool, PolytopeError> {
    is_totally_unimodular_capped(matrix, DEFAULT_TU_CAP)
}

/// As [`is_totally_unimodular`] with an explicit dimension cap.
pub fn is_totally_unimodular_capped(
    matrix: &[Vec<i64>],
    cap: usize,
) -> Result<bool, PolytopeError> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(PolytopeError::Ragged);
    }
    if rows > cap || cols > cap {
        return Err(PolytopeError::OverCap { rows, cols, cap });
    }
    for k in 1..=rows.min(cols) {
        let ok = combinations(rows, k, &mut |rs| {
            let rs = rs.to_vec();
            combinations(cols, k, &mut |cs| {
                let d = match small_det(&rs, cs, matrix) {
                    Some(d) => BigInt::from(d),
                    None => {
                        let sub: Vec<Vec<i64>> = rs
                            .iter()
                            .map(|&r| cs.iter().map(|&c| matrix[r][c]).collect())
                            .collect();
                        determinant(&sub)
                    }
                };
                d.abs() <= BigInt::one()
            })
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Solves the square system `a · v = b` exactly; `None` if singular.
fn solve(a: &[Vec<i64>], b: &[i64]) -> Option<Vec<Rat>> {
    let k = a.len();
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            r.iter()
                .map(|&v| Rat::from_integer(BigInt::from(v)))
                .chain(std::iter::once(Rat::from_integer(BigInt::from(bi))))
                .collect()
        })
        .collect();
    for c in 0..k {
        let p = (c..k).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        let piv = m[c][c].clone();
        for x in m[c].iter_mut().skip(c) {
            *x = &*x / &piv;
        }
        let prow = m[c].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&prow).skip(c) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[k].clone()).collect())
}

/// Vertices of the closure `{v | M v ≤ c}` by basis enumeration.
pub fn enumerate_vertices(system: &ConstraintSystem) -> Result<Vec<Vec<Rat>>, PolytopeError> {
    let k = system.m + system.n;
    if k > VERTEX_VAR_CAP {
        return Err(PolytopeError::OverCap {
            rows: system.rows.len(),
            cols: k,
            cap: VERTEX_VAR_CAP,
        });
    }
    let mut out: Vec<Vec<Rat>> = Vec::new();
    if k == 0 {
        return Ok(out);
    }
    let rows = &system.rows;
    combinations(rows.len(), k, &mut |rs| {
        let a: Vec<Vec<i64>> = rs.iter().map(|&r| rows[r].coeffs.clone()).collect();
        let b: Vec<i64> = rs.iter().map(|&r| rows[r].rhs).collect();
        if let Some(v) = solve(&a, &b) {
            if system.closure_satisfied_by(&v) && !out.contains(&v) {
                out.push(v);
            }
        }
        true
    });
    Ok(out)
}

/// True iff every coordinate is an integer.
pub fn is_integral(point: &[Rat]) -> bool {
    point.iter().all(|v| v.is_integer())
}

/// Converts an integral point to `i64`s.
pub fn to_i64(point: &[Rat]) -> Option<Vec<i64>> {
    point
        .iter()
        .map(|v| {
            if v.is_integer() {
                v.to_integer().to_i64()
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptpn::{rat, running_example, Arc, Firing, Transition};

    #[test]
    fn displayed_example_matrix_is_accepted() {
        let m = vec![
            vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![1, 0, 0, 0, 0, 1, 1, 1, 0, 0],
            vec![1, 0, 0, 0, 0, 1, 1, 1, 1, 0],
            vec![0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![0, -1, 0, 0, -1, -1, 0, 0, 0, 0],
            vec![0, 1, 0, 0, 1, 1, 1, 1, 0, 0],
        ];
        assert!(is_ptpn_constraint_matrix(&m, 4, 6));
        assert!(is_totally_unimodular_capped(&m, 10).unwrap());
    }

    #[test]
    fn recognizer_edge_cases() {
        assert!(!is_ptpn_constraint_matrix(&[vec![1, 0, 0, 1, 0, 1]], 1, 5));
        assert!(is_ptpn_constraint_matrix(&[vec![0; 5], vec![0; 5]], 2, 3));
        // Inconsistent block start for y_1.
        assert!(!is_ptpn_constraint_matrix(
            &[vec![1, 1, 0], vec![1, 0, 1]],
            1,
            2
        ));
        // Two birth variables in one row.
        assert!(!is_ptpn_constraint_matrix(&[vec![1, 1, 0]], 2, 1));
        // Mixed signs.
        assert!(!is_ptpn_constraint_matrix(&[vec![1, -1, 0]], 1, 2));
    }

    #[test]
    fn unimodularity_examples() {
        assert!(!is_totally_unimodular(&[vec![1, 1], vec![-1, 1]]).unwrap());
        let id: Vec<Vec<i64>> = (0..4)
            .map(|i| (0..4).map(|j| i64::from(i == j)).collect())
            .collect();
        assert!(is_totally_unimodular(&id).unwrap());
        assert!(matches!(
            is_totally_unimodular(&vec![vec![0; 9]; 9]),
            Err(PolytopeError::OverCap { .. })
        ));
        assert_eq!(determinant(&[vec![2, 1], vec![1, 3]]), BigInt::from(5));
    }

    #[test]
    fn one_token_one_delay_skeleton() {
        let iv = |s: &str| s.parse::<Interval>().unwrap();
        let net = PtpnNet::new(
            vec!["q".into()],
            vec![("p".into(), 1)],
            vec![
                Transition {
                    name: "mk".into(),
                    source: 0,
                    target: 0,
                    input: vec![],
                    read: vec![],
                    output: vec![Arc::new(0, iv("[0,1]"))],
                    cost: 0,
                },
                Transition {
                    name: "use".into(),
                    source: 0,
                    target: 0,
                    input: vec![Arc::new(0, iv("[1,2)"))],
                    read: vec![],
                    output: vec![],
                    cost: 0,
                },
            ],
        )
        .unwrap();
        let init = ConcreteConfig::new(0, vec![]).unwrap();
        let trace = vec![
            ConcreteStep::Discrete(Firing {
                transition: 0,
                input: vec![],
                read: vec![],
                output: vec![Token::new(0, rat(1, 2))],
            }),
            ConcreteStep::Timed(rat(3, 4)),
            ConcreteStep::Discrete(Firing {
                transition: 1,
                input: vec![Token::new(0, rat(5, 4))],
                read: vec![],
                output: vec![],
            }),
        ];
        let (sys, point) = build_constraints(&net, &init, &trace).unwrap();
        assert_eq!((sys.m, sys.n), (1, 1));
        let expect = vec![
            ConstraintRow {
                coeffs: vec![-1, 0],
                rhs: 0,
                strict: false,
            },
            ConstraintRow {
                coeffs: vec![1, 0],
                rhs: 1,
                strict: false,
            },
            ConstraintRow {
                coeffs: vec![-1, -1],
                rhs: -1,
                strict: false,
            },
            ConstraintRow {
                coeffs: vec![1, 1],
                rhs: 2,
                strict: true,
            },
            ConstraintRow {
                coeffs: vec![0, -1],
                rhs: 0,
                strict: true,
            },
        ];
        assert_eq!(sys.rows, expect);
        assert!(sys.satisfied_by(&point));
        for v in enumerate_vertices(&sys).unwrap() {
            assert!(is_integral(&v));
        }
    }

    #[test]
    fn example_trace_vector_satisfies_its_system() {
        let net = running_example();
        let tok = |p, n, d| Token::new(p, rat(n, d));
        let init = ConcreteConfig::new(
            0,
            vec![
                tok(0, 31, 10),
                tok(0, 31, 10),
                tok(0, 5, 2),
                tok(1, 13, 2),
                tok(2, 1, 10),
                tok(2, 1, 10),
            ],
        )
        .unwrap();
        let trace = vec![
            ConcreteStep::Discrete(Firing {
                transition: 0,
                input: vec![tok(0, 5, 2)],
                read: vec![],
                output: vec![tok(1, 13, 10), tok(2, 22, 10)],
            }),
            ConcreteStep::Timed(rat(7, 10)),
            ConcreteStep::Discrete(Firing {
                transition: 1,
                input: vec![tok(2, 29, 10)],
                read: vec![tok(1, 2, 1)],
                output: vec![tok(0, 92, 10)],
            }),
            ConcreteStep::Timed(rat(13, 10)),
        ];
        let (sys, point) = build_constraints(&net, &init, &trace).unwrap();
        assert_eq!((sys.m, sys.n), (9, 2));
        assert!(sys.satisfied_by(&point));
        assert!(is_ptpn_constraint_matrix(&sys.matrix(), sys.m, sys.n));
        // No row bounds the open-ended (2,inf) or [0,inf) outputs from above.
        let p3_var = sys
            .variables
            .iter()
            .position(|v| matches!(v, Variable::Birth { token, step: Some(0) } if token.place == 2))
            .unwrap();
        assert!(
            sys.rows
                .iter()
                .filter(|r| r.coeffs[p3_var] == 1 && r.coeffs[sys.m..].iter().all(|&c| c == 0))
                .count()
                == 0
        );
    }
}

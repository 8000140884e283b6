//! Text formats for nets, configurations, traces and abstract witnesses.
//!
//! Every document is line based; `#` starts a comment. Rationals are written
//! as `num/den` (integers and finite decimals are also accepted on input).
//! Printing a parsed canonical document reproduces it byte for byte.

use std::fmt::Write as _;

use ptpn::acptpn::BudgetConfig;
use ptpn::aptpn::{AbstractConfig, AbstractStep, AgedToken, Group};
use ptpn::ptpn::{
    rat, rat_int, Arc, ConcreteConfig, ConcreteStep, Firing, Interval, PtpnNet, Rat, Token,
    Transition,
};
use ptpn::sdtn::{InhibitorNet, Multiset, PnTransition, SdtnConfig, SdtnNet, SdtnTransition};
use thiserror::Error;

/// A parse or semantic error with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

type Res<T> = Result<T, ParseError>;

#[derive(Debug, Clone, Copy)]
struct Word<'a> {
    text: &'a str,
    col: usize,
}

/// One non-empty source line split into words; brackets are words of their own.
#[derive(Debug, Clone)]
struct Line<'a> {
    no: usize,
    indented: bool,
    words: Vec<Word<'a>>,
    pos: usize,
    end_col: usize,
}

impl<'a> Line<'a> {
    fn err<T>(&self, col: usize, msg: impl Into<String>) -> Res<T> {
        Err(ParseError {
            line: self.no,
            col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<Word<'a>> {
        self.words.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Res<Word<'a>> {
        match self.words.get(self.pos) {
            Some(w) => {
                self.pos += 1;
                Ok(*w)
            }
            None => self.err(self.end_col, format!("expected {what}")),
        }
    }

    fn expect(&mut self, kw: &str) -> Res<()> {
        let w = self.next(&format!("`{kw}`"))?;
        if w.text != kw {
            return self.err(w.col, format!("expected `{kw}`, found `{}`", w.text));
        }
        Ok(())
    }

    fn eat(&mut self, kw: &str) -> bool {
        if self.peek().is_some_and(|w| w.text == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn done(&self) -> Res<()> {
        match self.peek() {
            None => Ok(()),
            Some(w) => self.err(w.col, format!("unexpected `{}`", w.text)),
        }
    }

    fn rest(&mut self) -> Vec<Word<'a>> {
        let r = self.words[self.pos..].to_vec();
        self.pos = self.words.len();
        r
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Res<T> {
        let w = self.next(what)?;
        w.text
            .parse()
            .or_else(|_| self.err(w.col, format!("expected {what}, found `{}`", w.text)))
    }
}

fn lines(src: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut words = Vec::new();
        let mut start: Option<usize> = None;
        for (j, ch) in body.char_indices() {
            let is_sep = ch.is_whitespace() || ch == '[' || ch == ']';
            if is_sep {
                if let Some(s) = start.take() {
                    words.push(Word {
                        text: &body[s..j],
                        col: s + 1,
                    });
                }
                if ch == '[' || ch == ']' {
                    words.push(Word {
                        text: &body[j..j + 1],
                        col: j + 1,
                    });
                }
            } else if start.is_none() {
                start = Some(j);
            }
        }
        if let Some(s) = start {
            words.push(Word {
                text: &body[s..],
                col: s + 1,
            });
        }
        if !words.is_empty() {
            let indented = raw.starts_with(' ') || raw.starts_with('\t');
            out.push(Line {
                no: i + 1,
                indented,
                words,
                pos: 0,
                end_col: body.len() + 1,
            });
        }
    }
    out
}

/// Parses `num/den`, an integer, or a finite decimal.
pub fn parse_rat(s: &str) -> Option<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.parse().ok()?;
        let d: i64 = d.parse().ok()?;
        return (d > 0).then(|| rat(n, d));
    }
    if let Some((i, f)) = s.split_once('.') {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) || f.len() > 15 {
            return None;
        }
        let neg = i.starts_with('-');
        let ip: i64 = if i.is_empty() || i == "-" {
            0
        } else {
            i.parse().ok()?
        };
        let den = 10i64.pow(f.len() as u32);
        let fp: i64 = f.parse().ok()?;
        let num = ip.abs().checked_mul(den)?.checked_add(fp)?;
        return Some(rat(if neg { -num } else { num }, den));
    }
    s.parse::<i64>().ok().map(rat_int)
}

/// Prints a rational as `num/den`, or as an integer when the denominator is one.
pub fn print_rat(x: &Rat) -> String {
    if x.is_integer() {
        return x.numer().to_string();
    }
    format!("{}/{}", x.numer(), x.denom())
}

/// Prints a rational as `num/den`, keeping a denominator of one.
pub fn fraction(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Decimal rendering for human-readable summaries.
pub fn decimal(x: &Rat, digits: u32) -> String {
    let scale = rat_int(10i64.pow(digits));
    let scaled = (x * &scale).round();
    let neg = scaled < rat_int(0);
    let mag = if neg { -scaled } else { scaled };
    let int = (&mag / &scale).floor();
    let frac = (&mag - &int * &scale).to_integer();
    let mut s = format!("{}{}", if neg { "-" } else { "" }, int.to_integer());
    let f = format!("{:0>width$}", frac.to_string(), width = digits as usize);
    let f = f.trim_end_matches('0');
    if !f.is_empty() {
        s.push('.');
        s.push_str(f);
    }
    s
}

/// The kind of a net document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetDocument {
    Ptpn(PtpnDoc),
    Sdtn(SdtnDoc),
    Inhibitor(InhibitorDoc),
}

/// A priced timed Petri net with an optional threshold query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtpnDoc {
    pub net: PtpnNet,
    pub query: Option<Query>,
}

/// `query FROM TO V`: reach `TO` from the empty marking in `FROM` with cost at most `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub from: usize,
    pub to: usize,
    pub v: u64,
}

/// A transfer net with optional initial and final configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdtnDoc {
    pub net: SdtnNet,
    pub init: Option<SdtnConfig>,
    pub fin: Option<SdtnConfig>,
}

/// An inhibitor net with optional initial and final configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InhibitorDoc {
    pub net: InhibitorNet,
    pub init: Option<SdtnConfig>,
    pub fin: Option<SdtnConfig>,
}

fn index_of(names: &[String], w: Word, what: &str, line: &Line) -> Res<usize> {
    names.iter().position(|n| n == w.text).map_or_else(
        || line.err(w.col, format!("unknown {what} `{}`", w.text)),
        Ok,
    )
}

fn check_name(w: Word, line: &Line) -> Res<String> {
    let ok = !w.text.is_empty()
        && w.text
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '-' || c == '.')
        && !["->", "=>"].contains(&w.text);
    if ok {
        Ok(w.text.to_string())
    } else {
        line.err(w.col, format!("invalid name `{}`", w.text))
    }
}

struct Header {
    states: Vec<String>,
}

fn parse_states(line: &mut Line) -> Res<Header> {
    line.expect("states")?;
    let mut states = Vec::new();
    for w in line.rest() {
        let n = check_name(w, line)?;
        if states.contains(&n) {
            return line.err(w.col, format!("duplicate state `{n}`"));
        }
        states.push(n);
    }
    if states.is_empty() {
        return line.err(line.end_col, "expected at least one state");
    }
    Ok(Header { states })
}

/// `STATE [PLACE=COUNT]*`
fn parse_marked(line: &mut Line, states: &[String], places: &[String]) -> Res<SdtnConfig> {
    let w = line.next("a control-state")?;
    let state = index_of(states, w, "control-state", line)?;
    let mut marking = vec![0u32; places.len()];
    for w in line.rest() {
        let Some((p, k)) = w.text.split_once('=') else {
            return line.err(w.col, format!("expected PLACE=COUNT, found `{}`", w.text));
        };
        let pw = Word {
            text: p,
            col: w.col,
        };
        let pi = index_of(places, pw, "place", line)?;
        let k: u32 = k
            .parse()
            .or_else(|_| line.err(w.col, format!("invalid count in `{}`", w.text)))?;
        marking[pi] += k;
    }
    Ok(SdtnConfig::new(state, marking))
}

fn print_marked(c: &SdtnConfig, states: &[String], places: &[String]) -> String {
    let mut s = states[c.state].clone();
    for (p, &k) in c.marking.iter().enumerate() {
        if k > 0 {
            let _ = write!(s, " {}={}", places[p], k);
        }
    }
    s
}

fn parse_transition_head(line: &mut Line, states: &[String]) -> Res<(String, usize, usize)> {
    line.expect("transition")?;
    let name = check_name(line.next("a transition name")?, line)?;
    let w = line.next("a source state")?;
    let from = index_of(states, w, "control-state", line)?;
    line.expect("->")?;
    let w = line.next("a target state")?;
    let to = index_of(states, w, "control-state", line)?;
    Ok((name, from, to))
}

/// Parses any net document.
pub fn parse_net(src: &str) -> Res<NetDocument> {
    let mut ls = lines(src);
    if ls.is_empty() {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "empty document".into(),
        });
    }
    let kind = ls[0].next("a net kind")?;
    ls[0].done()?;
    match kind.text {
        "ptpn" => parse_ptpn(&mut ls[1..]).map(NetDocument::Ptpn),
        "sdtn" => parse_untimed(&mut ls[1..], true).map(|(n, init, fin)| {
            NetDocument::Sdtn(SdtnDoc {
                net: n.0.expect("sdtn"),
                init,
                fin,
            })
        }),
        "inhibitor" => parse_untimed(&mut ls[1..], false).map(|(n, init, fin)| {
            NetDocument::Inhibitor(InhibitorDoc {
                net: n.1.expect("inhibitor"),
                init,
                fin,
            })
        }),
        other => ls[0].err(
            kind.col,
            format!("unknown net kind `{other}` (expected ptpn, sdtn or inhibitor)"),
        ),
    }
}

fn parse_ptpn(ls: &mut [Line]) -> Res<PtpnDoc> {
    let Some(first) = ls.first_mut() else {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "missing `states` line".into(),
        });
    };
    let header = parse_states(first)?;
    let states = header.states;
    let mut places: Vec<(String, u64)> = Vec::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut query = None;
    let mut i = 1;
    while i < ls.len() {
        let line = &mut ls[i];
        let head = line.peek().expect("nonempty").text;
        match head {
            "place" if !line.indented => {
                line.next("place")?;
                let w = line.next("a place name")?;
                let name = check_name(w, line)?;
                if places.iter().any(|(n, _)| *n == name) {
                    return line.err(w.col, format!("duplicate place `{name}`"));
                }
                line.expect("cost")?;
                let c: u64 = line.number("a cost")?;
                line.done()?;
                places.push((name, c));
                i += 1;
            }
            "transition" if !line.indented => {
                let names: Vec<String> = places.iter().map(|(n, _)| n.clone()).collect();
                let (name, from, to) = parse_transition_head(line, &states)?;
                line.expect("cost")?;
                let cost: u64 = line.number("a cost")?;
                line.done()?;
                let mut t = Transition {
                    name,
                    source: from,
                    target: to,
                    input: vec![],
                    read: vec![],
                    output: vec![],
                    cost,
                };
                i += 1;
                while i < ls.len() && ls[i].indented {
                    let al = &mut ls[i];
                    let role = al.next("an arc role")?;
                    let w = al.next("a place")?;
                    let p = index_of(&names, w, "place", al)?;
                    let parts = al.rest();
                    let Some(first) = parts.first() else {
                        return al.err(al.end_col, "expected an interval");
                    };
                    let text: String = parts.iter().map(|w| w.text).collect();
                    let interval: Interval = text
                        .parse()
                        .or_else(|e| al.err(first.col, format!("{e}")))?;
                    let arc = Arc::new(p, interval);
                    match role.text {
                        "in" => t.input.push(arc),
                        "read" => t.read.push(arc),
                        "out" => t.output.push(arc),
                        other => {
                            return al.err(
                                role.col,
                                format!("unknown arc role `{other}` (expected in, read or out)"),
                            )
                        }
                    }
                    i += 1;
                }
                transitions.push(t);
            }
            "query" if !line.indented => {
                line.next("query")?;
                let w = line.next("a source state")?;
                let from = index_of(&states, w, "control-state", line)?;
                let w = line.next("a target state")?;
                let to = index_of(&states, w, "control-state", line)?;
                let v: u64 = line.number("a threshold")?;
                line.done()?;
                query = Some(Query { from, to, v });
                i += 1;
            }
            _ => {
                let w = line.peek().expect("nonempty");
                return line.err(w.col, format!("unexpected `{}`", w.text));
            }
        }
    }
    let net = PtpnNet::new(states, places, transitions).map_err(|e| ParseError {
        line: 1,
        col: 1,
        msg: e.to_string(),
    })?;
    Ok(PtpnDoc { net, query })
}

type Untimed = (Option<SdtnNet>, Option<InhibitorNet>);

fn parse_untimed(
    ls: &mut [Line],
    sdtn: bool,
) -> Res<(Untimed, Option<SdtnConfig>, Option<SdtnConfig>)> {
    let Some(first) = ls.first_mut() else {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "missing `states` line".into(),
        });
    };
    let states = parse_states(first)?.states;
    let mut places: Vec<String> = Vec::new();
    let mut transitions: Vec<SdtnTransition<usize>> = Vec::new();
    let mut transfer = Vec::new();
    let mut inhibitor: Option<(usize, Word, usize)> = None;
    let mut init = None;
    let mut fin = None;
    let mut i = 1;
    while i < ls.len() {
        let line = &mut ls[i];
        let head = line.peek().expect("nonempty");
        match head.text {
            "places" if !line.indented => {
                line.next("places")?;
                for w in line.rest() {
                    let n = check_name(w, line)?;
                    if places.contains(&n) {
                        return line.err(w.col, format!("duplicate place `{n}`"));
                    }
                    places.push(n);
                }
                i += 1;
            }
            "transition" if !line.indented => {
                let name_col = line.words[1.min(line.words.len() - 1)].col;
                let (name, from, to) = parse_transition_head(line, &states)?;
                if transitions.iter().any(|t| t.name == name) {
                    return line.err(name_col, format!("duplicate transition `{name}`"));
                }
                let is_transfer = line.eat("transfer");
                if is_transfer && !sdtn {
                    return line.err(head.col, "transfer transitions need an sdtn document");
                }
                line.done()?;
                let mut t = SdtnTransition {
                    name,
                    from,
                    to,
                    input: Multiset::new(),
                    output: Multiset::new(),
                    transfer: is_transfer,
                };
                i += 1;
                while i < ls.len() && ls[i].indented {
                    let al = &mut ls[i];
                    let role = al.next("an arc role")?;
                    let w = al.next("a place")?;
                    let p = index_of(&places, w, "place", al)?;
                    let k: u32 = al.number("a multiplicity")?;
                    al.done()?;
                    let target = match role.text {
                        "in" => &mut t.input,
                        "out" => &mut t.output,
                        other => {
                            return al.err(
                                role.col,
                                format!("unknown arc role `{other}` (expected in or out)"),
                            )
                        }
                    };
                    add_to(target, p, k);
                    i += 1;
                }
                transitions.push(t);
            }
            "transfer" if !line.indented && sdtn => {
                line.next("transfer")?;
                let w = line.next("a source place")?;
                let a = index_of(&places, w, "place", line)?;
                line.expect("->")?;
                let w = line.next("a target place")?;
                let b = index_of(&places, w, "place", line)?;
                line.done()?;
                transfer.push((a, b));
                i += 1;
            }
            "inhibitor" if !line.indented && !sdtn => {
                line.next("inhibitor")?;
                let w = line.next("a place")?;
                let p = index_of(&places, w, "place", line)?;
                let tw = line.next("a transition")?;
                line.done()?;
                inhibitor = Some((p, tw, line.no));
                i += 1;
            }
            "init" | "final" if !line.indented => {
                line.next("keyword")?;
                let c = parse_marked(line, &states, &places)?;
                if head.text == "init" {
                    init = Some(c);
                } else {
                    fin = Some(c);
                }
                i += 1;
            }
            _ => return line.err(head.col, format!("unexpected `{}`", head.text)),
        }
    }
    let sem = |e: String| ParseError {
        line: 1,
        col: 1,
        msg: e,
    };
    if sdtn {
        let net =
            SdtnNet::new(states, places, transitions, transfer).map_err(|e| sem(e.to_string()))?;
        Ok(((Some(net), None), init, fin))
    } else {
        let Some((p, tw, no)) = inhibitor else {
            return Err(sem("missing `inhibitor PLACE TRANSITION` line".into()));
        };
        let t = transitions
            .iter()
            .position(|t| t.name == tw.text)
            .ok_or_else(|| ParseError {
                line: no,
                col: tw.col,
                msg: format!("unknown transition `{}`", tw.text),
            })?;
        let pn = transitions
            .into_iter()
            .map(|t| PnTransition {
                name: t.name,
                from: t.from,
                to: t.to,
                input: t.input,
                output: t.output,
            })
            .collect();
        let net = InhibitorNet::new(states, places, pn, (p, t)).map_err(|e| sem(e.to_string()))?;
        Ok(((None, Some(net)), init, fin))
    }
}

fn add_to(ms: &mut Multiset, p: usize, k: u32) {
    if let Some(e) = ms.iter_mut().find(|(q, _)| *q == p) {
        e.1 += k;
    } else {
        ms.push((p, k));
        ms.sort();
    }
}

/// Prints a net document in canonical form.
pub fn print_net(doc: &NetDocument) -> String {
    match doc {
        NetDocument::Ptpn(d) => print_ptpn(d),
        NetDocument::Sdtn(d) => {
            let n = &d.net;
            let mut s = String::from("sdtn\n");
            print_untimed_body(
                &mut s,
                n.states(),
                n.places(),
                n.transitions().iter().map(|t| {
                    (
                        t.name.as_str(),
                        t.from,
                        t.to,
                        &t.input,
                        &t.output,
                        t.transfer,
                    )
                }),
            );
            for &(a, b) in n.transfer() {
                let _ = writeln!(s, "transfer {} -> {}", n.places()[a], n.places()[b]);
            }
            print_configs(&mut s, &d.init, &d.fin, n.states(), n.places());
            s
        }
        NetDocument::Inhibitor(d) => {
            let n = &d.net;
            let mut s = String::from("inhibitor\n");
            print_untimed_body(
                &mut s,
                n.states(),
                n.places(),
                n.transitions()
                    .iter()
                    .map(|t| (t.name.as_str(), t.from, t.to, &t.input, &t.output, false)),
            );
            let (p, t) = n.inhibitor();
            let _ = writeln!(s, "inhibitor {} {}", n.places()[p], n.transitions()[t].name);
            print_configs(&mut s, &d.init, &d.fin, n.states(), n.places());
            s
        }
    }
}

fn print_ptpn(d: &PtpnDoc) -> String {
    let n = &d.net;
    let mut s = String::from("ptpn\n");
    let _ = writeln!(s, "states {}", n.states().join(" "));
    for (p, name) in n.places().iter().enumerate() {
        let _ = writeln!(s, "place {} cost {}", name, n.place_cost(p));
    }
    for t in n.transitions() {
        let _ = writeln!(
            s,
            "transition {} {} -> {} cost {}",
            t.name,
            n.states()[t.source],
            n.states()[t.target],
            t.cost
        );
        for (role, arcs) in [("in", &t.input), ("read", &t.read), ("out", &t.output)] {
            for a in arcs {
                let _ = writeln!(s, "  {} {} {}", role, n.places()[a.place], a.interval);
            }
        }
    }
    if let Some(q) = d.query {
        let _ = writeln!(
            s,
            "query {} {} {}",
            n.states()[q.from],
            n.states()[q.to],
            q.v
        );
    }
    s
}

fn print_untimed_body<'a>(
    s: &mut String,
    states: &[String],
    places: &[String],
    transitions: impl Iterator<Item = (&'a str, usize, usize, &'a Multiset, &'a Multiset, bool)>,
) {
    let _ = writeln!(s, "states {}", states.join(" "));
    let _ = writeln!(s, "places {}", places.join(" "));
    for (name, from, to, input, output, transfer) in transitions {
        let _ = writeln!(
            s,
            "transition {} {} -> {}{}",
            name,
            states[from],
            states[to],
            if transfer { " transfer" } else { "" }
        );
        for (role, ms) in [("in", input), ("out", output)] {
            for &(p, k) in ms {
                let _ = writeln!(s, "  {} {} {}", role, places[p], k);
            }
        }
    }
}

fn print_configs(
    s: &mut String,
    init: &Option<SdtnConfig>,
    fin: &Option<SdtnConfig>,
    states: &[String],
    places: &[String],
) {
    if let Some(c) = init {
        let _ = writeln!(s, "init {}", print_marked(c, states, places));
    }
    if let Some(c) = fin {
        let _ = writeln!(s, "final {}", print_marked(c, states, places));
    }
}

fn parse_token(w: Word, net: &PtpnNet, line: &Line) -> Res<Token> {
    let Some((p, a)) = w.text.split_once(':') else {
        return line.err(w.col, format!("expected PLACE:AGE, found `{}`", w.text));
    };
    let place = index_of(
        net.places(),
        Word {
            text: p,
            col: w.col,
        },
        "place",
        line,
    )?;
    let age = parse_rat(a).map_or_else(
        || line.err(w.col + p.len() + 1, format!("invalid age `{a}`")),
        Ok,
    )?;
    if age < rat_int(0) {
        return line.err(w.col + p.len() + 1, "negative age");
    }
    Ok(Token::new(place, age))
}

fn print_token(t: &Token, net: &PtpnNet) -> String {
    format!("{}:{}", net.places()[t.place], print_rat(&t.age))
}

fn parse_token_list(line: &mut Line, net: &PtpnNet) -> Res<Vec<Token>> {
    line.expect("[")?;
    let mut v = Vec::new();
    loop {
        let w = line.next("a token or `]`")?;
        if w.text == "]" {
            return Ok(v);
        }
        v.push(parse_token(w, net, line)?);
    }
}

fn print_token_list(ts: &[Token], net: &PtpnNet) -> String {
    let inner: Vec<String> = ts.iter().map(|t| print_token(t, net)).collect();
    format!("[{}]", inner.join(" "))
}

fn parse_concrete_body(line: &mut Line, net: &PtpnNet) -> Res<ConcreteConfig> {
    let w = line.next("a control-state")?;
    let state = index_of(net.states(), w, "control-state", line)?;
    let mut toks = Vec::new();
    for w in line.rest() {
        toks.push(parse_token(w, net, line)?);
    }
    ConcreteConfig::new(state, toks).or_else(|e| line.err(1, e.to_string()))
}

fn print_concrete_body(c: &ConcreteConfig, net: &PtpnNet) -> String {
    let mut s = net.states()[c.state].clone();
    for t in c.marking() {
        s.push(' ');
        s.push_str(&print_token(t, net));
    }
    s
}

/// Parses `config STATE PLACE:AGE ...`.
pub fn parse_config(src: &str, net: &PtpnNet) -> Res<ConcreteConfig> {
    let mut ls = lines(src);
    let Some(line) = ls.first_mut() else {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "empty document".into(),
        });
    };
    line.expect("config")?;
    let c = parse_concrete_body(line, net)?;
    if let Some(extra) = ls.get(1) {
        return extra.err(1, "unexpected line after the configuration");
    }
    Ok(c)
}

/// Prints a concrete configuration document.
pub fn print_config(c: &ConcreteConfig, net: &PtpnNet) -> String {
    format!("config {}\n", print_concrete_body(c, net))
}

/// A concrete trace with its declared total cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDocument {
    pub init: ConcreteConfig,
    pub steps: Vec<ConcreteStep>,
    pub cost: Option<Rat>,
}

/// Parses a trace document against a net.
pub fn parse_trace(src: &str, net: &PtpnNet) -> Res<TraceDocument> {
    let mut ls = lines(src);
    let Some(first) = ls.first_mut() else {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "empty document".into(),
        });
    };
    first.expect("trace")?;
    first.done()?;
    let mut init = None;
    let mut steps = Vec::new();
    let mut cost = None;
    for line in ls.iter_mut().skip(1) {
        let head = line.next("a keyword")?;
        match head.text {
            "init" if init.is_none() => init = Some(parse_concrete_body(line, net)?),
            "delay" => {
                let w = line.next("a delay")?;
                let d = parse_rat(w.text).map_or_else(
                    || line.err(w.col, format!("invalid delay `{}`", w.text)),
                    Ok,
                )?;
                line.done()?;
                steps.push(ConcreteStep::Timed(d));
            }
            "fire" => {
                let w = line.next("a transition")?;
                let t = net.transition_index(w.text).map_or_else(
                    || line.err(w.col, format!("unknown transition `{}`", w.text)),
                    Ok,
                )?;
                line.expect("in")?;
                let input = parse_token_list(line, net)?;
                line.expect("read")?;
                let read = parse_token_list(line, net)?;
                line.expect("out")?;
                let output = parse_token_list(line, net)?;
                line.done()?;
                steps.push(ConcreteStep::Discrete(Firing {
                    transition: t,
                    input,
                    read,
                    output,
                }));
            }
            "cost" if cost.is_none() => {
                let w = line.next("a cost")?;
                cost =
                    Some(parse_rat(w.text).map_or_else(
                        || line.err(w.col, format!("invalid cost `{}`", w.text)),
                        Ok,
                    )?);
                line.done()?;
            }
            other => return line.err(head.col, format!("unexpected `{other}`")),
        }
    }
    let init = init.ok_or(ParseError {
        line: 1,
        col: 1,
        msg: "missing `init` line".into(),
    })?;
    Ok(TraceDocument { init, steps, cost })
}

/// Prints a trace document.
pub fn print_trace(doc: &TraceDocument, net: &PtpnNet) -> String {
    let mut s = String::from("trace\n");
    let _ = writeln!(s, "init {}", print_concrete_body(&doc.init, net));
    for step in &doc.steps {
        match step {
            ConcreteStep::Timed(d) => {
                let _ = writeln!(s, "delay {}", print_rat(d));
            }
            ConcreteStep::Discrete(f) => {
                let _ = writeln!(
                    s,
                    "fire {} in {} read {} out {}",
                    net.transitions()[f.transition].name,
                    print_token_list(&f.input, net),
                    print_token_list(&f.read, net),
                    print_token_list(&f.output, net)
                );
            }
        }
    }
    if let Some(c) = &doc.cost {
        let _ = writeln!(s, "cost {}", print_rat(c));
    }
    s
}

fn parse_group(line: &mut Line, net: &PtpnNet) -> Res<Group> {
    line.expect("[")?;
    let mut g = Vec::new();
    loop {
        let w = line.next("a token or `]`")?;
        if w.text == "]" {
            g.sort();
            return Ok(g);
        }
        let Some((p, a)) = w.text.split_once(':') else {
            return line.err(w.col, format!("expected PLACE:AGE, found `{}`", w.text));
        };
        let place = index_of(
            net.places(),
            Word {
                text: p,
                col: w.col,
            },
            "place",
            line,
        )?;
        let age: u32 = a
            .parse()
            .or_else(|_| line.err(w.col, format!("invalid abstract age `{a}`")))?;
        if age > net.cmax() + 1 {
            return line.err(
                w.col,
                format!("abstract age {age} exceeds cmax + 1 = {}", net.cmax() + 1),
            );
        }
        g.push(AgedToken::new(place, age));
    }
}

fn print_group(g: &Group, net: &PtpnNet) -> String {
    let inner: Vec<String> = g
        .iter()
        .map(|t| format!("{}:{}", net.places()[t.place], t.age))
        .collect();
    format!("[{}]", inner.join(" "))
}

fn parse_groups(line: &mut Line, net: &PtpnNet) -> Res<Vec<Group>> {
    let mut gs = Vec::new();
    while line.peek().is_some_and(|w| w.text == "[") {
        let col = line.peek().expect("peeked").col;
        let g = parse_group(line, net)?;
        if g.is_empty() {
            return line.err(col, "fractional groups must be non-empty");
        }
        gs.push(g);
    }
    Ok(gs)
}

/// Body: `STATE high [..]* center [..] low [..]* [budget Y]`.
fn parse_abstract_body(line: &mut Line, net: &PtpnNet) -> Res<(AbstractConfig, Option<u64>)> {
    let w = line.next("a control-state")?;
    let state = index_of(net.states(), w, "control-state", line)?;
    line.expect("high")?;
    let high = parse_groups(line, net)?;
    line.expect("center")?;
    let center = parse_group(line, net)?;
    line.expect("low")?;
    let low = parse_groups(line, net)?;
    let budget = if line.eat("budget") {
        Some(line.number("a budget")?)
    } else {
        None
    };
    line.done()?;
    let a =
        AbstractConfig::new(state, high, center, low).or_else(|e| line.err(1, e.to_string()))?;
    Ok((a, budget))
}

/// Prints the body of an abstract configuration.
pub fn print_abstract_body(a: &AbstractConfig, budget: Option<u64>, net: &PtpnNet) -> String {
    let mut s = format!("{} high", net.states()[a.state]);
    for g in &a.high {
        s.push(' ');
        s.push_str(&print_group(g, net));
    }
    let _ = write!(s, " center {} low", print_group(&a.center, net));
    for g in &a.low {
        s.push(' ');
        s.push_str(&print_group(g, net));
    }
    if let Some(y) = budget {
        let _ = write!(s, " budget {y}");
    }
    s
}

/// Parses `aconfig STATE high ... center [..] low ... [budget Y]`.
pub fn parse_abstract(src: &str, net: &PtpnNet) -> Res<(AbstractConfig, Option<u64>)> {
    let mut ls = lines(src);
    let Some(line) = ls.first_mut() else {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "empty document".into(),
        });
    };
    line.expect("aconfig")?;
    let r = parse_abstract_body(line, net)?;
    if let Some(extra) = ls.get(1) {
        return extra.err(1, "unexpected line after the configuration");
    }
    Ok(r)
}

/// Prints an abstract configuration document.
pub fn print_abstract(a: &AbstractConfig, budget: Option<u64>, net: &PtpnNet) -> String {
    format!("aconfig {}\n", print_abstract_body(a, budget, net))
}

/// A step label as written in witness documents.
pub fn step_label(step: &AbstractStep, net: &PtpnNet) -> String {
    match step {
        AbstractStep::Discrete(w) => format!("fire {}", net.transitions()[w.transition].name),
        AbstractStep::Type1 => "type1".into(),
        AbstractStep::Type2 => "type2".into(),
        AbstractStep::Type3(k) => format!("type3 {k}"),
        AbstractStep::Type4(k) => format!("type4 {k}"),
    }
}

/// A budgeted abstract run: start and every visited configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessDocument {
    pub v: u64,
    pub start: BudgetConfig,
    pub steps: Vec<(String, BudgetConfig)>,
}

/// Parses a witness document.
pub fn parse_witness(src: &str, net: &PtpnNet) -> Res<WitnessDocument> {
    let mut ls = lines(src);
    let Some(first) = ls.first_mut() else {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: "empty document".into(),
        });
    };
    first.expect("witness")?;
    first.expect("v")?;
    let v: u64 = first.number("a threshold")?;
    first.done()?;
    let mut start = None;
    let mut steps = Vec::new();
    for line in ls.iter_mut().skip(1) {
        let head = line.next("a keyword")?;
        let budgeted = |line: &mut Line| -> Res<BudgetConfig> {
            let (config, b) = parse_abstract_body(line, net)?;
            let budget = b.map_or_else(|| line.err(line.end_col, "expected `budget Y`"), Ok)?;
            Ok(BudgetConfig { budget, config })
        };
        match head.text {
            "start" if start.is_none() => start = Some(budgeted(line)?),
            "step" => {
                let mut label = Vec::new();
                while let Some(w) = line.peek() {
                    if w.text == "=>" {
                        break;
                    }
                    label.push(w.text);
                    line.pos += 1;
                }
                line.expect("=>")?;
                steps.push((label.join(" "), budgeted(line)?));
            }
            other => return line.err(head.col, format!("unexpected `{other}`")),
        }
    }
    let start = start.ok_or(ParseError {
        line: 1,
        col: 1,
        msg: "missing `start` line".into(),
    })?;
    Ok(WitnessDocument { v, start, steps })
}

/// Prints a witness document.
pub fn print_witness(doc: &WitnessDocument, net: &PtpnNet) -> String {
    let mut s = format!("witness v {}\n", doc.v);
    let _ = writeln!(
        s,
        "start {}",
        print_abstract_body(&doc.start.config, Some(doc.start.budget), net)
    );
    for (label, c) in &doc.steps {
        let _ = writeln!(
            s,
            "step {} => {}",
            label,
            print_abstract_body(&c.config, Some(c.budget), net)
        );
    }
    s
}

//! Subcommand definitions and their implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptpn::acptpn::{budget_successors, BudgetConfig};
use ptpn::aptpn::{encode, successors, AbstractConfig, AbstractStep};
use ptpn::polytope::{
    build_constraints, enumerate_vertices, is_integral, is_ptpn_constraint_matrix,
    is_totally_unimodular_capped, PolytopeError,
};
use ptpn::ptpn::{replay, trace_cost, PtpnNet};
use ptpn::sdtn::{inhibitor_to_sdtn, sdtn_to_inhibitor, Verdict};
use ptpn::solver::{
    cost_optimal, cost_threshold, translate_inhibitor_to_ptpn, AbstractTrace, OptCost, PhaseMode,
    SolverBudget, ThresholdInstance,
};
use thiserror::Error;

use crate::format::{
    decimal, fraction, parse_abstract, parse_config, parse_net, parse_trace, parse_witness,
    print_abstract, print_abstract_body, print_net, print_rat, step_label, InhibitorDoc,
    NetDocument, ParseError, PtpnDoc, Query, SdtnDoc, WitnessDocument,
};

/// Exit code for yes / success.
pub const EXIT_YES: i32 = 0;
/// Exit code for no.
pub const EXIT_NO: i32 = 1;
/// Exit code for unknown.
pub const EXIT_UNKNOWN: i32 = 2;
/// Exit code for command-line usage errors.
pub const EXIT_USAGE: i32 = 64;
/// Exit code for malformed or inconsistent input documents.
pub const EXIT_DATA: i32 = 65;
/// Exit code for unreadable input files.
pub const EXIT_NO_INPUT: i32 = 66;
/// Exit code for unwritable output files.
pub const EXIT_CANT_CREATE: i32 = 73;

/// Errors reported by the command layer.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    /// The process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } => EXIT_NO_INPUT,
            CliError::Write { .. } => EXIT_CANT_CREATE,
            CliError::Parse { .. } | CliError::Data(_) => EXIT_DATA,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

/// Output style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

/// Which successors `step-abstract` lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepKind {
    Discrete,
    Type1,
    Type2,
    Type3,
    Type4,
    Timed,
    All,
}

/// Target of `translate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TranslateTarget {
    Sdtn,
    Inhibitor,
    Ptpn,
}

/// When the phase construction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Off,
    Fallback,
    CrossCheck,
}

/// Budget and output flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Token bound for bounded searches.
    #[arg(long, global = true, default_value_t = 12)]
    pub bound: u32,
    /// Maximum stored configurations per search.
    #[arg(long = "state-budget", global = true, default_value_t = 1_000_000)]
    pub state_budget: usize,
    /// Iteration cap of the phase construction.
    #[arg(long = "phase-iters", global = true, default_value_t = 50)]
    pub phase_iters: usize,
    /// Largest threshold tried by solve-optimal.
    #[arg(long, global = true, default_value_t = 64)]
    pub vmax: u64,
    /// Worker threads for internal searches.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
}

/// Toolkit for priced timed Petri nets.
#[derive(Debug, Parser)]
#[command(name = "ptpn", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

/// The subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a trace (or an abstract witness) and print its cost.
    Simulate {
        #[arg(long)]
        net: PathBuf,
        /// A `trace` or `witness` document.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Print the abstract encoding of a concrete configuration.
    EncodeAptpn {
        #[arg(long)]
        net: PathBuf,
        /// A `config` document.
        #[arg(long)]
        config: PathBuf,
    },
    /// List abstract successors of a given kind.
    StepAbstract {
        #[arg(long)]
        net: PathBuf,
        /// An `aconfig` document; with `budget Y` the budgeted rules apply.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = StepKind::All)]
        kind: StepKind,
    },
    /// Decide whether the target is reachable with cost at most v.
    SolveThreshold {
        #[arg(long)]
        net: PathBuf,
        /// Source control-state (defaults to the document's query).
        #[arg(long)]
        from: Option<String>,
        /// Target control-state (defaults to the document's query).
        #[arg(long)]
        to: Option<String>,
        /// Threshold (defaults to the document's query).
        #[arg(long)]
        v: Option<u64>,
        /// Initial configuration (`aconfig` or `config` document).
        #[arg(long)]
        init: Option<PathBuf>,
        /// Where to write the witness on yes.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PhaseArg::Fallback)]
        phase: PhaseArg,
    },
    /// Compute the optimal cost of reaching the target.
    SolveOptimal {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PhaseArg::Fallback)]
        phase: PhaseArg,
    },
    /// Convert between transfer nets, inhibitor nets and priced nets.
    Translate {
        #[arg(long)]
        net: PathBuf,
        #[arg(long = "to", value_enum)]
        target: TranslateTarget,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the constraint system of a trace and check its matrix.
    CheckMatrix {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Largest dimension for the brute-force minor check.
        #[arg(long = "tu-cap", default_value_t = 12)]
        tu_cap: usize,
    },
}

/// Text to print and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub code: i32,
    pub text: String,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn parsed<T>(path: &Path, r: Result<T, ParseError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn load_net(path: &Path) -> Result<NetDocument, CliError> {
    let src = read(path)?;
    parsed(path, parse_net(&src))
}

fn load_ptpn(path: &Path) -> Result<PtpnDoc, CliError> {
    match load_net(path)? {
        NetDocument::Ptpn(d) => Ok(d),
        _ => Err(CliError::Usage(format!(
            "{}: expected a ptpn document",
            path.display()
        ))),
    }
}

fn budget(opts: &GlobalOpts, phase: PhaseArg) -> SolverBudget {
    SolverBudget {
        max_states: opts.state_budget,
        max_tokens: opts.bound,
        phase_iterations: opts.phase_iters,
        vmax: opts.vmax,
        jobs: opts.jobs,
        phase: match phase {
            PhaseArg::Off => PhaseMode::Off,
            PhaseArg::Fallback => PhaseMode::Fallback,
            PhaseArg::CrossCheck => PhaseMode::CrossCheck,
        },
        ..SolverBudget::default()
    }
}

/// Key/value output in either style.
struct Out {
    format: Format,
    text: String,
}

impl Out {
    fn new(format: Format) -> Self {
        Out {
            format,
            text: String::new(),
        }
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        match self.format {
            Format::Human => writeln!(self.text, "{} = {}", key.replace('_', " "), value),
            Format::Machine => writeln!(self.text, "{key}={value}"),
        }
        .expect("writing to a string");
    }

    fn human(&mut self, line: impl std::fmt::Display) {
        if self.format == Format::Human {
            writeln!(self.text, "{line}").expect("writing to a string");
        }
    }

    fn raw(&mut self, line: impl std::fmt::Display) {
        writeln!(self.text, "{line}").expect("writing to a string");
    }

    fn done(self, code: i32) -> Report {
        Report {
            code,
            text: self.text,
        }
    }
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Yes => "yes",
        Verdict::No => "no",
        Verdict::Unknown => "unknown",
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Yes => EXIT_YES,
        Verdict::No => EXIT_NO,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Simulate { net, trace } => simulate(opts, net, trace),
        Command::EncodeAptpn { net, config } => encode_aptpn(opts, net, config),
        Command::StepAbstract { net, config, kind } => step_abstract(opts, net, config, *kind),
        Command::SolveThreshold {
            net,
            from,
            to,
            v,
            init,
            witness,
            phase,
        } => solve_threshold(
            opts,
            net,
            from.as_deref(),
            to.as_deref(),
            *v,
            init.as_deref(),
            witness.as_deref(),
            *phase,
        ),
        Command::SolveOptimal {
            net,
            from,
            to,
            init,
            witness,
            phase,
        } => solve_optimal(
            opts,
            net,
            from.as_deref(),
            to.as_deref(),
            init.as_deref(),
            witness.as_deref(),
            *phase,
        ),
        Command::Translate { net, target, out } => translate(net, *target, out.as_deref()),
        Command::CheckMatrix { net, trace, tu_cap } => check_matrix(opts, net, trace, *tu_cap),
    }
}

fn simulate(opts: &GlobalOpts, net_path: &Path, trace_path: &Path) -> Result<Report, CliError> {
    let doc = load_ptpn(net_path)?;
    let net = &doc.net;
    let src = read(trace_path)?;
    let mut out = Out::new(opts.format);
    if src
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with("witness"))
    {
        let w = parsed(trace_path, parse_witness(&src, net))?;
        let last = replay_abstract(net, &w)?;
        let cost = w.start.budget - last.budget;
        out.kv("cost", cost);
        out.kv("remaining_budget", last.budget);
        out.kv("threshold", w.v);
        out.kv("within_budget", if cost <= w.v { "yes" } else { "no" });
        out.kv("final_state", &net.states()[last.config.state]);
        return Ok(out.done(if cost <= w.v { EXIT_YES } else { EXIT_NO }));
    }
    let t = parsed(trace_path, parse_trace(&src, net))?;
    let configs = replay(net, &t.init, &t.steps)
        .map_err(|e| CliError::Data(format!("{}: {e}", trace_path.display())))?;
    let cost = trace_cost(net, &t.init, &t.steps).map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(declared) = &t.cost {
        if *declared != cost {
            return Err(CliError::Data(format!(
                "{}: declared cost {} differs from the recomputed cost {}",
                trace_path.display(),
                print_rat(declared),
                print_rat(&cost)
            )));
        }
    }
    out.kv("cost", fraction(&cost));
    out.human(format!("cost (decimal) = {}", decimal(&cost, 6)));
    out.kv("steps", t.steps.len());
    let last = configs.last().expect("replay includes the start");
    out.kv("final_state", &net.states()[last.state]);
    Ok(out.done(EXIT_YES))
}

/// Replays a witness document under the budgeted rules.
pub fn replay_abstract(net: &PtpnNet, w: &WitnessDocument) -> Result<BudgetConfig, CliError> {
    if w.start.budget > w.v {
        return Err(CliError::Data(format!(
            "start budget {} exceeds the threshold {}",
            w.start.budget, w.v
        )));
    }
    let mut cur = w.start.clone();
    for (i, (label, recorded)) in w.steps.iter().enumerate() {
        let found = budget_successors(net, &cur)
            .into_iter()
            .any(|(c, s)| &c == recorded && step_label(&s, net) == *label);
        if !found {
            return Err(CliError::Data(format!(
                "witness step {} (`{label}`) does not replay",
                i + 1
            )));
        }
        cur = recorded.clone();
    }
    Ok(cur)
}

fn encode_aptpn(
    opts: &GlobalOpts,
    net_path: &Path,
    config_path: &Path,
) -> Result<Report, CliError> {
    let doc = load_ptpn(net_path)?;
    let net = &doc.net;
    let src = read(config_path)?;
    let c = parsed(config_path, parse_config(&src, net))?;
    let a =
        encode(net, &c).map_err(|e| CliError::Data(format!("{}: {e}", config_path.display())))?;
    let mut out = Out::new(opts.format);
    match opts.format {
        Format::Machine => out.raw(print_abstract(&a, None, net).trim_end()),
        Format::Human => {
            out.raw(format!("state {}", net.states()[a.state]));
            let m = a.high.len() as i64;
            for (i, g) in a.high.iter().enumerate() {
                out.raw(format!("b{} = {}", i as i64 - m, group_text(g, net)));
            }
            out.raw(format!("b0 = {}", group_text(&a.center, net)));
            for (i, g) in a.low.iter().enumerate() {
                out.raw(format!("b{} = {}", i + 1, group_text(g, net)));
            }
        }
    }
    Ok(out.done(EXIT_YES))
}

fn group_text(g: &[ptpn::aptpn::AgedToken], net: &PtpnNet) -> String {
    let inner: Vec<String> = g
        .iter()
        .map(|t| format!("{}:{}", net.places()[t.place], t.age))
        .collect();
    format!("[{}]", inner.join(" "))
}

fn kind_matches(kind: StepKind, s: &AbstractStep) -> bool {
    match kind {
        StepKind::All => true,
        StepKind::Discrete => matches!(s, AbstractStep::Discrete(_)),
        StepKind::Type1 => matches!(s, AbstractStep::Type1),
        StepKind::Type2 => matches!(s, AbstractStep::Type2),
        StepKind::Type3 => matches!(s, AbstractStep::Type3(_)),
        StepKind::Type4 => matches!(s, AbstractStep::Type4(_)),
        StepKind::Timed => !matches!(s, AbstractStep::Discrete(_)),
    }
}

fn step_abstract(
    opts: &GlobalOpts,
    net_path: &Path,
    config_path: &Path,
    kind: StepKind,
) -> Result<Report, CliError> {
    let doc = load_ptpn(net_path)?;
    let net = &doc.net;
    let src = read(config_path)?;
    let (a, y) = parsed(config_path, parse_abstract(&src, net))?;
    let succ: Vec<(AbstractConfig, Option<u64>, AbstractStep)> = match y {
        Some(budget) => budget_successors(net, &BudgetConfig { budget, config: a })
            .into_iter()
            .map(|(c, s)| (c.config, Some(c.budget), s))
            .collect(),
        None => successors(net, &a)
            .into_iter()
            .map(|(c, s)| (c, None, s))
            .collect(),
    };
    let mut lines: Vec<String> = succ
        .iter()
        .filter(|(_, _, s)| kind_matches(kind, s))
        .map(|(c, b, s)| {
            format!(
                "step {} => {}",
                step_label(s, net),
                print_abstract_body(c, *b, net)
            )
        })
        .collect();
    lines.sort();
    lines.dedup();
    let mut out = Out::new(opts.format);
    out.kv("successors", lines.len());
    for l in lines {
        out.raw(l);
    }
    Ok(out.done(EXIT_YES))
}

fn state_arg(
    net: &PtpnNet,
    name: Option<&str>,
    fallback: Option<usize>,
    what: &str,
) -> Result<usize, CliError> {
    match name {
        Some(n) => net
            .state_index(n)
            .ok_or_else(|| CliError::Usage(format!("unknown control-state `{n}`"))),
        None => fallback.ok_or_else(|| {
            CliError::Usage(format!("missing --{what} and the document has no query"))
        }),
    }
}

fn load_init(
    net: &PtpnNet,
    path: Option<&Path>,
    q_init: usize,
) -> Result<AbstractConfig, CliError> {
    let Some(path) = path else {
        return Ok(AbstractConfig::integral(q_init, vec![]));
    };
    let src = read(path)?;
    let first = src.split_whitespace().next().unwrap_or("");
    let a = if first == "config" {
        let c = parsed(path, parse_config(&src, net))?;
        encode(net, &c).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
    } else {
        parsed(path, parse_abstract(&src, net))?.0
    };
    if a.state != q_init {
        return Err(CliError::Usage(format!(
            "initial configuration is in `{}`, not in the source state",
            net.states()[a.state]
        )));
    }
    Ok(a)
}

fn witness_doc(net: &PtpnNet, v: u64, w: &AbstractTrace) -> WitnessDocument {
    WitnessDocument {
        v,
        start: w.start.clone(),
        steps: w
            .steps
            .iter()
            .map(|(s, c)| (step_label(s, net), c.clone()))
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_threshold(
    opts: &GlobalOpts,
    net_path: &Path,
    from: Option<&str>,
    to: Option<&str>,
    v: Option<u64>,
    init: Option<&Path>,
    witness: Option<&Path>,
    phase: PhaseArg,
) -> Result<Report, CliError> {
    let doc = load_ptpn(net_path)?;
    let net = doc.net.clone();
    let q = doc.query;
    let q_init = state_arg(&net, from, q.map(|q| q.from), "from")?;
    let q_fin = state_arg(&net, to, q.map(|q| q.to), "to")?;
    let v = v
        .or(q.map(|q| q.v))
        .ok_or_else(|| CliError::Usage("missing --v and the document has no query".into()))?;
    let a = load_init(&net, init, q_init)?;
    let inst = ThresholdInstance::with_init(net.clone(), a, q_fin, v)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let r = cost_threshold(&inst, &budget(opts, phase));
    let mut out = Out::new(opts.format);
    out.kv("answer", verdict_word(r.answer));
    let d = &r.diagnostics;
    out.kv("forward_search", verdict_word(d.forward));
    out.kv("explored", d.explored);
    out.kv("pruned", d.pruned);
    out.kv("state_budget_hit", d.exhausted_budget);
    match &d.phase {
        Some(p) => {
            out.kv("phase", p.answer);
            out.kv("phase_iterations", p.iterations);
            out.kv("phase_note", &p.note);
            out.kv("oracle_calls", d.oracle_calls);
        }
        None => out.kv("phase", "not run"),
    }
    if d.disagreement {
        out.kv("disagreement", true);
    }
    if let Some(w) = &r.witness {
        out.kv("witness_steps", w.steps.len());
        out.kv("witness_cost", w.cost());
        out.kv("remaining_budget", w.last().budget);
        if let Some(path) = witness {
            write(
                path,
                &crate::format::print_witness(&witness_doc(&net, v, w), &net),
            )?;
            out.kv("witness_file", path.display());
        }
    }
    Ok(out.done(verdict_code(r.answer)))
}

fn solve_optimal(
    opts: &GlobalOpts,
    net_path: &Path,
    from: Option<&str>,
    to: Option<&str>,
    init: Option<&Path>,
    witness: Option<&Path>,
    phase: PhaseArg,
) -> Result<Report, CliError> {
    let doc = load_ptpn(net_path)?;
    let net = doc.net.clone();
    let q = doc.query;
    let q_init = state_arg(&net, from, q.map(|q| q.from), "from")?;
    let q_fin = state_arg(&net, to, q.map(|q| q.to), "to")?;
    let a = load_init(&net, init, q_init)?;
    let r = cost_optimal(&net, &a, q_fin, &budget(opts, phase))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = Out::new(opts.format);
    let code = match r.cost {
        OptCost::Finite(c) => {
            out.kv("optimal", c);
            EXIT_YES
        }
        OptCost::Infinity => {
            out.kv("optimal", "infinity");
            EXIT_NO
        }
        OptCost::Unknown => {
            out.kv("optimal", "unknown");
            EXIT_UNKNOWN
        }
    };
    out.kv("reachable", verdict_word(r.reachable));
    let tried: Vec<String> = r
        .thresholds
        .iter()
        .map(|(v, a)| format!("{v}:{}", verdict_word(*a)))
        .collect();
    out.kv(
        "thresholds",
        if tried.is_empty() {
            "none".to_string()
        } else {
            tried.join(",")
        },
    );
    if let (Some(w), OptCost::Finite(c)) = (&r.witness, r.cost) {
        if let Some(path) = witness {
            write(
                path,
                &crate::format::print_witness(&witness_doc(&net, c, w), &net),
            )?;
            out.kv("witness_file", path.display());
        }
    }
    Ok(out.done(code))
}

fn translate(
    net_path: &Path,
    target: TranslateTarget,
    out_path: Option<&Path>,
) -> Result<Report, CliError> {
    let doc = load_net(net_path)?;
    let need = |c: &Option<ptpn::sdtn::SdtnConfig>, what: &str| {
        c.clone().ok_or_else(|| {
            CliError::Usage(format!(
                "{}: the document needs an `{what}` line",
                net_path.display()
            ))
        })
    };
    let result =
        match (&doc, target) {
            (NetDocument::Sdtn(d), TranslateTarget::Inhibitor) => {
                let (t, _) =
                    sdtn_to_inhibitor(&d.net, &need(&d.init, "init")?, &need(&d.fin, "final")?);
                NetDocument::Inhibitor(InhibitorDoc {
                    net: t.net,
                    init: Some(t.init),
                    fin: Some(t.fin),
                })
            }
            (NetDocument::Inhibitor(d), TranslateTarget::Sdtn) => {
                let (t, _) =
                    inhibitor_to_sdtn(&d.net, &need(&d.init, "init")?, &need(&d.fin, "final")?);
                NetDocument::Sdtn(SdtnDoc {
                    net: t.net,
                    init: Some(t.init),
                    fin: Some(t.fin),
                })
            }
            (NetDocument::Inhibitor(d), TranslateTarget::Ptpn) => {
                let inst = translate_inhibitor_to_ptpn(
                    &d.net,
                    &need(&d.init, "init")?,
                    &need(&d.fin, "final")?,
                )
                .map_err(|e| CliError::Data(format!("{}: {e}", net_path.display())))?;
                NetDocument::Ptpn(PtpnDoc {
                    net: inst.net,
                    query: Some(Query {
                        from: inst.q_init,
                        to: inst.q_fin,
                        v: inst.v,
                    }),
                })
            }
            _ => return Err(CliError::Usage(
                "supported translations: sdtn -> inhibitor, inhibitor -> sdtn, inhibitor -> ptpn"
                    .into(),
            )),
        };
    let text = print_net(&result);
    match out_path {
        Some(p) => {
            write(p, &text)?;
            Ok(Report {
                code: EXIT_YES,
                text: format!("wrote {}\n", p.display()),
            })
        }
        None => Ok(Report {
            code: EXIT_YES,
            text,
        }),
    }
}

fn check_matrix(
    opts: &GlobalOpts,
    net_path: &Path,
    trace_path: &Path,
    tu_cap: usize,
) -> Result<Report, CliError> {
    let doc = load_ptpn(net_path)?;
    let net = &doc.net;
    let src = read(trace_path)?;
    let t = parsed(trace_path, parse_trace(&src, net))?;
    let (sys, point) = build_constraints(net, &t.init, &t.steps)
        .map_err(|e| CliError::Data(format!("{}: {e}", trace_path.display())))?;
    let matrix = sys.matrix();
    let mut out = Out::new(opts.format);
    let mut failed = false;
    out.kv("rows", matrix.len());
    out.kv("columns", sys.m + sys.n);
    let shape = is_ptpn_constraint_matrix(&matrix, sys.m, sys.n);
    failed |= !shape;
    out.kv("constraint_matrix_shape", if shape { "yes" } else { "no" });
    let holds = sys.satisfied_by(&point);
    failed |= !holds;
    out.kv("trace_point_satisfies", if holds { "yes" } else { "no" });
    match is_totally_unimodular_capped(&matrix, tu_cap) {
        Ok(tu) => {
            failed |= !tu;
            out.kv("totally_unimodular", if tu { "yes" } else { "no" });
        }
        Err(PolytopeError::OverCap { .. }) => out.kv("totally_unimodular", "skipped (over cap)"),
        Err(e) => return Err(CliError::Data(e.to_string())),
    }
    match enumerate_vertices(&sys) {
        Ok(vs) => {
            let all = vs.iter().all(|v| is_integral(v));
            failed |= !all;
            out.kv("vertices", vs.len());
            out.kv("vertices_integral", if all { "yes" } else { "no" });
        }
        Err(PolytopeError::OverCap { .. }) => out.kv("vertices", "skipped (over cap)"),
        Err(e) => return Err(CliError::Data(e.to_string())),
    }
    Ok(out.done(if failed { EXIT_NO } else { EXIT_YES }))
}

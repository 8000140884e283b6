//! End-to-end runs of the `ptpn` binary.

use std::path::PathBuf;
use std::process::Command;

use ptpn::acptpn::{budget_successors, BudgetConfig};
use ptpn::aptpn::{example, AbstractStep};
use ptpn::ptpn::running_example;
use ptpn_cli::format::{parse_witness, print_abstract, print_abstract_body, step_label};

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ptpn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn ptpn(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ptpn"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn simulate_reports_the_trace_cost() {
    let (code, out, _) = ptpn(&[
        "simulate",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        &fixture("running_example.trace"),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("cost = 279/10\n"), "{out}");
    assert!(out.contains("cost (decimal) = 27.9\n"), "{out}");
    let (code, out, _) = ptpn(&[
        "--format",
        "machine",
        "simulate",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        &fixture("running_example.trace"),
    ]);
    assert_eq!(code, 0);
    assert!(
        out.starts_with("cost=279/10\nsteps=4\nfinal_state=q1\n"),
        "{out}"
    );
}

#[test]
fn machine_output_keeps_integral_denominators() {
    let trace = scratch("integral.trace");
    std::fs::write(&trace, "trace\ninit q1 p1:1\ndelay 1\n").unwrap();
    let (code, out, _) = ptpn(&[
        "--format",
        "machine",
        "simulate",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("cost=3/1\n"), "{out}");
}

#[test]
fn simulate_rejects_a_wrong_declared_cost() {
    let wrong = scratch("wrong.trace");
    std::fs::write(
        &wrong,
        std::fs::read_to_string(fixture("running_example.trace"))
            .unwrap()
            .replace("cost 279/10", "cost 28"),
    )
    .unwrap();
    let (code, _, err) = ptpn(&[
        "simulate",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        wrong.to_str().unwrap(),
    ]);
    assert_eq!(code, 65);
    assert!(err.contains("declared cost 28"), "{err}");
}

#[test]
fn exit_codes_for_usage_and_io_errors() {
    assert_eq!(ptpn(&["--help"]).0, 0);
    assert_eq!(ptpn(&["--version"]).0, 0);
    assert_eq!(ptpn(&["frobnicate"]).0, 64);
    assert_eq!(
        ptpn(&["simulate", "--net", &fixture("running_example.net")]).0,
        64
    );
    assert_eq!(
        ptpn(&["simulate", "--net", "/nonexistent/net", "--trace", "x"]).0,
        66
    );
    let (code, _, err) = ptpn(&[
        "simulate",
        "--net",
        &fixture("running_example.trace"),
        "--trace",
        "x",
    ]);
    assert_eq!(code, 65);
    assert!(err.contains("line 1, column 1"), "{err}");
    assert_eq!(
        ptpn(&[
            "translate",
            "--net",
            &fixture("running_example.net"),
            "--to",
            "sdtn"
        ])
        .0,
        64
    );
}

#[test]
fn encode_matches_the_library() {
    let net = running_example();
    let (code, out, _) = ptpn(&[
        "--format",
        "machine",
        "encode-aptpn",
        "--net",
        &fixture("running_example.net"),
        "--config",
        &fixture("c1.config"),
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, print_abstract(&example::c1(), None, &net));
    let (_, human, _) = ptpn(&[
        "encode-aptpn",
        "--net",
        &fixture("running_example.net"),
        "--config",
        &fixture("c1.config"),
    ]);
    assert!(human.starts_with("state q1\nb-2 = "), "{human}");
}

#[test]
fn step_abstract_lists_the_budgeted_successors() {
    let net = running_example();
    let start = BudgetConfig {
        budget: 5,
        config: example::c1(),
    };
    let path = scratch("c1.aconfig");
    std::fs::write(
        &path,
        print_abstract(&start.config, Some(start.budget), &net),
    )
    .unwrap();
    let (code, out, _) = ptpn(&[
        "step-abstract",
        "--net",
        &fixture("running_example.net"),
        "--config",
        path.to_str().unwrap(),
        "--kind",
        "discrete",
    ]);
    assert_eq!(code, 0);
    let mut expected: Vec<String> = budget_successors(&net, &start)
        .into_iter()
        .filter(|(_, s)| matches!(s, AbstractStep::Discrete(_)))
        .map(|(c, s)| {
            format!(
                "step {} => {}",
                step_label(&s, &net),
                print_abstract_body(&c.config, Some(c.budget), &net)
            )
        })
        .collect();
    expected.sort();
    expected.dedup();
    assert!(!expected.is_empty());
    let listed: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(
        listed,
        expected.iter().map(String::as_str).collect::<Vec<_>>()
    );
    assert_eq!(
        out.lines().next().unwrap(),
        format!("successors = {}", expected.len())
    );
}

#[test]
fn threshold_witness_replays() {
    let w = scratch("c1.witness");
    let (code, out, _) = ptpn(&[
        "--bound",
        "16",
        "solve-threshold",
        "--net",
        &fixture("running_example.net"),
        "--init",
        &fixture("c1.config"),
        "--witness",
        w.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("answer = yes\n"), "{out}");
    let net = running_example();
    let doc = parse_witness(&std::fs::read_to_string(&w).unwrap(), &net).unwrap();
    assert_eq!(doc.v, 28);
    assert_eq!(doc.steps.last().unwrap().1.config.state, 1);
    let (code, out, _) = ptpn(&[
        "simulate",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        w.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("within budget = yes"), "{out}");
}

#[test]
fn empty_start_cannot_fire_anything() {
    let (code, out, _) = ptpn(&["solve-threshold", "--net", &fixture("running_example.net")]);
    assert_eq!(code, 1, "{out}");
    let (code, out, _) = ptpn(&[
        "solve-optimal",
        "--net",
        &fixture("running_example.net"),
        "--vmax",
        "4",
    ]);
    assert_eq!(code, 1, "{out}");
    assert!(out.starts_with("optimal = infinity\n"), "{out}");
}

#[test]
fn optimal_from_c1_is_one_firing_of_t1() {
    // c1 holds an integral p1 token of age 1, so t1 fires at once for its transition cost.
    let (code, out, _) = ptpn(&[
        "--bound",
        "16",
        "solve-optimal",
        "--net",
        &fixture("running_example.net"),
        "--init",
        &fixture("c1.config"),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("optimal = 1\n"), "{out}");
    assert!(out.contains("thresholds = 0:no,1:yes"), "{out}");
}

#[test]
fn inhibitor_instance_translates_to_a_zero_threshold_query() {
    let net = scratch("drain.net");
    let (code, _, _) = ptpn(&[
        "translate",
        "--net",
        &fixture("drain.inh"),
        "--to",
        "ptpn",
        "--out",
        net.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&net).unwrap();
    assert!(text.ends_with("query q0 q_final 0\n"), "{text}");
    let (code, out, _) = ptpn(&["solve-threshold", "--net", net.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = ptpn(&[
        "--format",
        "machine",
        "solve-optimal",
        "--net",
        net.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("optimal=0\n"), "{out}");
}

#[test]
fn transfer_and_inhibitor_translations_chain() {
    let inh = scratch("counter.inh");
    assert_eq!(
        ptpn(&[
            "translate",
            "--net",
            &fixture("counter.sdtn"),
            "--to",
            "inhibitor",
            "--out",
            inh.to_str().unwrap()
        ])
        .0,
        0
    );
    let (code, back, _) = ptpn(&["translate", "--net", inh.to_str().unwrap(), "--to", "sdtn"]);
    assert_eq!(code, 0);
    assert!(back.starts_with("sdtn\n"), "{back}");
    assert!(back.contains("transfer p_i -> p_x\n"), "{back}");
    assert!(back.ends_with("init q0\nfinal q1 p1=2\n"), "{back}");
    let (code, _, err) = ptpn(&["translate", "--net", inh.to_str().unwrap(), "--to", "ptpn"]);
    assert_eq!(code, 65);
    assert!(err.contains("final marking must be empty"), "{err}");
}

#[test]
fn matrix_checks_on_a_short_trace() {
    let (code, out, _) = ptpn(&[
        "--format",
        "machine",
        "check-matrix",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        &fixture("short.trace"),
    ]);
    assert_eq!(code, 0, "{out}");
    for line in [
        "constraint_matrix_shape=yes",
        "trace_point_satisfies=yes",
        "totally_unimodular=yes",
        "vertices_integral=yes",
    ] {
        assert!(out.lines().any(|l| l == line), "{line} missing in {out}");
    }
    let (code, out, _) = ptpn(&[
        "check-matrix",
        "--net",
        &fixture("running_example.net"),
        "--trace",
        &fixture("running_example.trace"),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(
        out.contains("totally unimodular = skipped (over cap)"),
        "{out}"
    );
}

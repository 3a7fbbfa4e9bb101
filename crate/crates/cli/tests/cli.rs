use std::path::PathBuf;
use std::process::{Command, Output};

fn case(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigma-he"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON document")
}

#[test]
fn missing_case_is_an_input_error() {
    let o = run(&["solve", "no/such/case.m"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_flags_are_input_errors() {
    let c = case("two_bus.m");
    assert_eq!(run(&["solve", &c, "--order", "0"]).status.code(), Some(1));
    assert_eq!(run(&["solve", &c, "--method", "taylor"]).status.code(), Some(1));
    assert_eq!(run(&["trace", &c, "--from", "2", "--to", "1"]).status.code(), Some(1));
    assert_eq!(run(&["trace", &c, "--step", "0"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate", &c]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn solve_ieee14_at_unit_load() {
    let o = run(&["solve", &case("ieee14.m"), "--s", "1.0", "--order", "30"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["buses"].as_array().unwrap().len(), 14);
    assert!(doc["max_mismatch"].as_f64().unwrap() < 1e-8);
    assert_eq!(doc["status"], "converged");
}

#[test]
fn solve_at_zero_load_gives_vertex_offset() {
    let o = run(&["solve", &case("mesh4_pq.m"), "--s", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    for b in doc["buses"].as_array().unwrap() {
        if b["kind"] != "swing" {
            assert_eq!(b["delta"].as_f64().unwrap(), 0.25);
            assert_eq!(b["sigma_re"].as_f64().unwrap(), 0.0);
        }
    }
}

#[test]
fn solve_past_collapse_exits_infeasible() {
    let o = run(&["solve", &case("two_bus.m"), "--s", "9"]);
    assert_eq!(o.status.code(), Some(2));
    let doc = json(&o);
    assert_ne!(doc["status"], "converged");
}

#[test]
fn two_bus_trace_is_linear_in_s() {
    let c = case("two_bus.m");
    let o = run(&["trace", &c, "--from", "0.1", "--to", "1.0", "--step", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("s,bus,sigma_re,sigma_im,delta,vm,va_deg,q_gen,stage")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').take(4).map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!((r[2] - 0.05 * r[0]).abs() < 1e-11);
        assert!((r[3] - 0.10 * r[0]).abs() < 1e-11);
    }
}

#[test]
fn empty_range_samples_once_per_bus() {
    let o = run(&["trace", &case("ieee14.m"), "--from", "0.5", "--to", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1 + 13);
}

#[test]
fn trace_with_limits_echoes_switches() {
    let o = run(&[
        "trace",
        &case("ieee14.m"),
        "--q-limits",
        "--to",
        "1.4",
        "--step",
        "0.02",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let switches: Vec<&str> = text.lines().filter(|l| l.starts_with("# switch")).collect();
    assert!(!switches.is_empty());
    assert!(switches[0].starts_with("# switch bus=2 s=1.07"));
    assert!(switches[0].ends_with("limit=qmax"));
}

#[test]
fn trace_into_collapse_exits_two_but_writes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let o = run(&[
        "trace",
        &case("two_bus.m"),
        "--to",
        "9",
        "--step",
        "0.5",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(&path).unwrap();
    let last: f64 = text.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last > 1.0 && last < 8.09, "{last}");
    // only the final file is left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn margins() {
    let o = run(&["margin", &case("two_bus.m"), "--to", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert!((doc["s_critical"].as_f64().unwrap() - 8.0902).abs() < 1e-3);
    assert_eq!(doc["limiting_bus"], 2);
    assert_eq!(doc["status"], "boundary crossing");

    let doc = json(&run(&["margin", &case("no_load.m")]));
    assert_eq!(doc["status"], "no collapse in range");
    assert!(doc["s_critical"].is_null());

    let off = json(&run(&["margin", &case("ieee14.m"), "--to", "6"]));
    let on = json(&run(&["margin", &case("ieee14.m"), "--to", "6", "--q-limits"]));
    assert!(on["s_critical"].as_f64().unwrap() < off["s_critical"].as_f64().unwrap());
    assert_eq!(off["ranking"].as_array().unwrap().len(), 13);
    assert_eq!(off["ranking"][0]["bus"], off["limiting_bus"]);
}

#[test]
fn plot_element_counts() {
    let svg = stdout(&run(&["plot", &case("two_bus.m"), "--to", "2"]));
    assert_eq!(svg.matches("<polyline class=\"trajectory\"").count(), 1);
    assert_eq!(svg.matches("<path class=\"boundary\"").count(), 1);
    assert!(svg.trim_end().ends_with("</svg>"));

    let svg = stdout(&run(&["plot", &case("ieee14.m")]));
    assert_eq!(svg.matches("<polyline class=\"trajectory\"").count(), 13);
    assert_eq!(svg.matches("<circle class=\"switch\"").count(), 0);

    let svg = stdout(&run(&["plot", &case("ieee14.m"), "--q-limits", "--to", "1.4"]));
    assert!(svg.matches("<circle class=\"switch\"").count() >= 1);
}

#[test]
fn oracle_agreement_and_divergence() {
    let doc = json(&run(&["oracle", &case("ieee14.m"), "--s", "1"]));
    assert_eq!(doc["status"], "ok");
    assert!(doc["max_deviation"].as_f64().unwrap() < 1e-6);

    let doc = json(&run(&["oracle", &case("two_bus.m"), "--s", "1"]));
    assert!(doc["max_deviation"].as_f64().unwrap() < 1e-10);

    // past the nose Newton fails; the embedded voltages are still reported
    let o = run(&["oracle", &case("ieee14.m"), "--s", "4.1"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["status"], "oracle diverged");
    assert_eq!(doc["buses"].as_array().unwrap().len(), 14);
    assert!(doc["buses"][4]["vm_he"].as_f64().is_some());
}

#[test]
fn json_and_matpower_inputs_agree() {
    let a = json(&run(&["solve", &case("ieee14.m")]));
    let b = json(&run(&["solve", &case("ieee14.json")]));
    for (x, y) in a["buses"].as_array().unwrap().iter().zip(b["buses"].as_array().unwrap()) {
        assert_eq!(x["bus"], y["bus"]);
        for key in ["vm", "va_deg"] {
            let d = x[key].as_f64().unwrap() - y[key].as_f64().unwrap();
            assert!(d.abs() < 1e-9, "{key}");
        }
    }
}

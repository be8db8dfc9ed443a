use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;

use reset_ldp::output::{csv_cell_to_json, estimate_row, Table, ESTIMATE_COLUMNS};
use reset_ldp::plot::plot_rate_curve;
use reset_ldp::{execute, parse_config, run_cli};
use reset_ldp_core::rare_event::{EstimateResult, Method};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_reset-ldp"));
    c.env_remove("RESET_LDP_SEED");
    c
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["reset-ldp"];
    full.extend_from_slice(args);
    let code = run_cli(full, None, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn error_kind(stderr: &str) -> String {
    let v: Value = serde_json::from_str(stderr.trim()).expect("error JSON on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn binary_exit_codes() {
    let ok = bin().args(["bound-check", "--lambda", "1", "--delta", "0", "--c", "0.5", "--T", "10"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let csv = String::from_utf8(ok.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",true"), "{csv}");

    let bad = bin().args(["estimate", "--frobnicate"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_kind(&String::from_utf8(bad.stderr).unwrap()), "config");

    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["estimate", "--path", "linear:1", "--T", "2"][..],
        &["estimate", "--path", "spiral:1", "--epsilon", "0.1"],
        &["validate-kernel", "--kernel", "power", "--alpha", "-2"],
        &["validate-kernel", "--kernel", "power"],
        &["validate-kernel", "--probes", "0,1"],
        &["sup-law", "--workers", "0"],
        &["converge", "--path", "linear:1", "--epsilon", "0.2", "--T", "8,4"],
        &["bound-check", "--svg", "x.svg"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert_eq!(error_kind(&err), "config");
    }
}

#[test]
fn runtime_errors_exit_3() {
    for args in [
        // Importance sampling needs a positive center.
        &["estimate", "--path", "linear:-1", "--epsilon", "0.2", "--n", "10", "--method", "importance"][..],
        &["bound-check", "--delta", "1"],
        &["sup-law", "--phi", "sqrt_loglog", "--n", "5"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 3, "{args:?}: {err}");
        assert_eq!(error_kind(&err), "runtime");
    }
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("exp.toml");
    std::fs::write(
        &file,
        "experiment = \"estimate\"\nseed = 5\npath = \"linear:0.5\"\nepsilon = 0.3\nT = [2.0]\nn_replicas = 50\n\n[kernel]\ntype = \"power\"\nalpha = 2.0\n",
    )
    .unwrap();
    let f = file.to_str().unwrap();
    let cfg = parse_config(["reset-ldp", "run", "--config", f], None).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.t_grid, vec![2.0]);
    assert_eq!(cfg.kernel, reset_ldp_core::kernels::KernelSpec::Power { alpha: 2.0 });
    let cfg = parse_config(["reset-ldp", "run", "--config", f], Some("9")).unwrap();
    assert_eq!(cfg.seed, 9);
    let cfg = parse_config(["reset-ldp", "estimate", "--config", f, "--seed", "11"], Some("9")).unwrap();
    assert_eq!(cfg.seed, 11);
    assert!(parse_config(["reset-ldp", "run", "--config", f], Some("x")).is_err());
    // Subcommand must agree with the file.
    assert!(parse_config(["reset-ldp", "converge", "--config", f], None).is_err());

    std::fs::write(&file, "experiment = \"estimate\"\nsede = 5\n").unwrap();
    let e = parse_config(["reset-ldp", "run", "--config", f], None).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("sede"), "{e}");
}

#[test]
fn env_seed_reaches_binary() {
    let args = ["estimate", "--path", "linear:0.5", "--epsilon", "0.3", "--T", "2", "--n", "200"];
    let a = bin().args(args).env("RESET_LDP_SEED", "17").output().unwrap();
    let b = bin().args(args).args(["--seed", "17"]).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn outputs_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut produced = Vec::new();
    for w in ["1", "4"] {
        let csv = dir.path().join(format!("{w}.csv"));
        let json = dir.path().join(format!("{w}.json"));
        let svg = dir.path().join(format!("{w}.svg"));
        let (code, _, err) = run(&[
            "estimate", "--path", "linear:0.5", "--lambda", "0.5", "--epsilon", "0.3", "--T", "1,2",
            "--n", "3000", "--method", "importance", "--seed", "8", "--workers", w,
            "--csv", csv.to_str().unwrap(), "--json", json.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        produced.push([csv, json, svg].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(produced[0], produced[1]);
}

#[test]
fn converge_appends_predicted_row() {
    let cfg = parse_config(
        ["reset-ldp", "converge", "--path", "linear:0.5", "--lambda", "0.5", "--epsilon", "0.3", "--T", "1,2", "--n", "500"],
        None,
    )
    .unwrap();
    let report = execute(&cfg).unwrap();
    let art = report.render().unwrap();
    let last = art.csv.lines().last().unwrap();
    assert!(last.starts_with("predicted,,0.3,0.5,uniform,"), "{last}");
    assert!(last.contains(",0.625,0.625,0.625,"), "{last}");
    let json: Value = serde_json::from_str(&art.json).unwrap();
    assert_eq!(json["predicted_rate"], 0.625);
    assert_eq!(json["functional"], "rate_positive");
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn validate_kernel_report() {
    let cfg = parse_config(["reset-ldp", "validate-kernel", "--kernel", "uniform", "--probes", "-1000,-1,1,1000"], None).unwrap();
    let json: Value = serde_json::from_str(&execute(&cfg).unwrap().render().unwrap().json).unwrap();
    assert_eq!(json["diagnostics"]["all_pass"], true);
    let d = json["diagnostics"]["report"]["measured_delta"]["bounded"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 1e-6);
}

fn result(t: f64, rate: f64) -> EstimateResult {
    EstimateResult {
        method: Method::Direct,
        is_mode: None,
        t,
        epsilon: 0.2,
        lambda: 1.0,
        kernel: "uniform".into(),
        n_replicas: 100,
        hits: 10,
        estimate: (-rate * t).exp(),
        ci_low: (-(rate + 0.1) * t).exp(),
        ci_high: (-(rate - 0.1) * t).exp(),
        empirical_rate: rate,
        rate_lo: rate - 0.1,
        rate_hi: rate + 0.1,
        rate_is_lower_bound: false,
        ess: None,
        unreliable: false,
        seed: 1,
    }
}

#[test]
fn svg_shapes() {
    assert!(plot_rate_curve(&[], Some(1.0)).is_err());
    let one = plot_rate_curve(&[result(4.0, 0.7)], Some(0.625)).unwrap();
    assert!(one.starts_with("<svg") && one.ends_with("</svg>\n"));
    assert!(one.contains(r#"width="800" height="500""#));
    assert_eq!(one.matches("<circle").count(), 1);
    assert_eq!(one.matches("stroke-dasharray").count(), 1);
    let rows: Vec<_> = [(4.0, 1.0), (8.0, 0.8), (16.0, 0.7)].iter().map(|&(t, r)| result(t, r)).collect();
    let a = plot_rate_curve(&rows, Some(0.625)).unwrap();
    assert_eq!(a, plot_rate_curve(&rows, Some(0.625)).unwrap());
    assert_eq!(a.matches("<circle").count(), 3);
}

fn finite_or_special() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |x| x.is_finite()),
        1 => Just(f64::INFINITY),
        1 => -1e3f64..1e3,
    ]
}

proptest! {
    #[test]
    fn csv_rows_round_trip_through_json(
        vals in proptest::collection::vec(finite_or_special(), 8),
        ess in proptest::option::of(0.0f64..1e6),
        n in 1u64..u64::MAX,
        seed in any::<u64>(),
    ) {
        let mut r = result(vals[0].abs().max(1e-3), vals[1]);
        r.epsilon = vals[2];
        r.estimate = vals[3];
        r.ci_low = vals[4];
        r.ci_high = vals[5];
        r.rate_lo = vals[6];
        r.rate_hi = vals[7];
        r.ess = ess;
        r.n_replicas = n;
        r.seed = seed;
        let mut table = Table::new(&ESTIMATE_COLUMNS);
        table.push(estimate_row(&r));
        let csv_text = table.to_csv().unwrap();
        let json = table.json_rows();
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        prop_assert_eq!(&header, &ESTIMATE_COLUMNS.map(String::from).to_vec());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.unwrap();
            for (col, cell) in header.iter().zip(rec.iter()) {
                prop_assert_eq!(&csv_cell_to_json(cell), &json[i][col.as_str()], "column {}", col);
            }
        }
    }
}

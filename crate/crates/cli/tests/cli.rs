use std::fs::File;
use std::path::Path;
use std::process::{Command, Output};

use qbound::scenario::{ResultRow, ResultTable, Strategy};
use qbound::sdp::SdpaProblem;

fn qbound(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbound")).current_dir(dir).args(args).output().expect("binary runs")
}

fn table(path: &Path) -> ResultTable {
    ResultTable::read_csv(File::open(path).unwrap()).unwrap()
}

const SMALL: &[&str] =
    &["--rows", "1", "--cols", "2", "--moment-size", "4", "--shots", "1000,100000", "--repeats", "3"];

#[test]
fn energy_rows_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let mut args = vec!["bound-energy", "--seed", "11", "--out", out];
        args.extend_from_slice(SMALL);
        let o = qbound(dir.path(), &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        table(&dir.path().join(out))
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a.rows.len(), 2 * 3 * 3);
    let strip = |t: &ResultTable| -> Vec<ResultRow> {
        t.rows.iter().cloned().map(|r| ResultRow { wall_time: 0.0, ..r }).collect()
    };
    assert_eq!(strip(&a), strip(&b));
    let first = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(first.starts_with("#schema=qbound.rows.v1\nscenario,strategy,n_tot,repeat,lb,ub,status,wall_time,delta\n"));
}

#[test]
fn two_sided_rows_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bound-heat",
        "--budget",
        "30",
        "--rows",
        "1",
        "--cols",
        "2",
        "--moment-size",
        "8",
        "--shots",
        "1000,100000",
        "--repeats",
        "3",
        "--json",
        "s.json",
    ];
    let o = qbound(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = table(&dir.path().join("results.csv"));
    for r in &t.rows {
        if let (Some(lb), Some(ub)) = (r.lb, r.ub) {
            assert!(lb <= ub + 1e-7, "{r:?}");
        }
        if r.strategy == Strategy::Sdp {
            assert_eq!(r.delta, 0.0);
        }
    }
    let summary: serde_json::Value = serde_json::from_reader(File::open(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["num_qubits"], 2);
    assert!(summary["exact"].as_f64().is_some());
}

#[test]
fn confidence_sweep_orders_purity_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep-confidence", "--out", "conf.csv"];
    args.extend_from_slice(&["--preset", "fig7-desk", "--shots", "100000", "--repeats", "2"]);
    let o = qbound(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let groups = table(&dir.path().join("conf.csv")).groups();
    assert_eq!(groups.len(), 3);
    // delta 0.32, 0.05, 0.003: bounds may only loosen as confidence grows
    let lbs: Vec<f64> = groups.iter().map(|g| g.mean_lb.unwrap()).collect();
    assert!(groups.windows(2).all(|w| w[0].delta > w[1].delta));
    assert!(lbs.windows(2).all(|w| w[1] <= w[0] + 1e-7), "{lbs:?}");
}

#[test]
fn export_writes_parsable_sdpa() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        qbound(dir.path(), &["export-sdpa", "--preset", "fig7-desk", "--strategy", "sdp_measure", "--sdpa", "p.dat-s"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("p.dat-s")).unwrap();
    let p = SdpaProblem::parse(&text).unwrap();
    assert!(p.num_vars > 0 && !p.entries.is_empty());
}

#[test]
fn configuration_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sweep-shots"],
        vec!["sweep-shots", "--preset", "fig99"],
        vec!["sweep-shots", "--config", "missing.toml"],
        vec!["bound-energy", "--delta", "1.5"],
        vec!["bound-energy", "--rows", "1", "--cols", "2", "--measured", "500"],
        vec!["oracle", "--preset", "fig4", "--shots", "0"],
    ] {
        let o = qbound(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn oracle_prints_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sq.toml"),
        r#"
        name = "sq"
        shots = [1000]
        [model]
        kind = "single_qubit"
        rate_up = 1.56518e-4
        rate_down = 1.156518e-3
        [objective]
        kind = "custom"
        terms = [[1.0, "Z1"]]
        "#,
    )
    .unwrap();
    let o = qbound(dir.path(), &["oracle", "--config", "sq.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let value: f64 = text.split_whitespace().last().unwrap().parse().unwrap();
    let want = (1.56518e-4 - 1.156518e-3) / (1.56518e-4 + 1.156518e-3);
    assert!((value - want).abs() < 1e-9, "{value} vs {want}");
}

use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowrank-bench")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Drops the seconds column, the only one allowed to vary between runs.
fn without_timing(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 3).map(|(_, f)| f.to_string()).collect())
        .collect()
}

#[test]
fn identical_configs_give_identical_csv() {
    let args = ["--generate", "gaussian:6x5x4:2", "--algos", "amm,mamm,rank1-amm,newton2", "--ranks", "2,2,2", "--seeds", "0,1,2"];
    let (a, b) = (bench(&args), bench(&args));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let (a, b) = (stdout(&a), stdout(&b));
    assert_eq!(a.lines().next().unwrap(), "algorithm,seed,iters,seconds,hs_norm,residual,stop_reason");
    assert_eq!(a.lines().count(), 1 + 4 * 3 + 4);
    assert_eq!(without_timing(&a), without_timing(&b));
}

#[test]
fn generated_file_is_read_back_without_being_modified() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.tnsr");
    let p = path.to_str().unwrap();
    assert!(bench(&["generate", "lowrank:6x6x6:2,2,2:0:3", "--out", p, "--format", "binary"]).status.success());
    let before = std::fs::read(&path).unwrap();
    let out_csv = dir.path().join("runs.csv");
    let traces = dir.path().join("traces");
    let o = bench(&[
        "--input",
        p,
        "--algos",
        "amm,mamm",
        "--ranks",
        "2,2,2",
        "--seeds",
        "0..3",
        "--max-iters",
        "100",
        "--fit-tol",
        "1e-12",
        "--out",
        out_csv.to_str().unwrap(),
        "--trace-dir",
        traces.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&path).unwrap(), before);

    let text = std::fs::read_to_string(&out_csv).unwrap();
    let norm = {
        let t = lowrank::tensor::io::read_any(&before).unwrap();
        t.hs_norm()
    };
    for line in text.lines().skip(1) {
        let hs: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((hs - norm).abs() < 1e-6, "{line}");
    }
    check_monotone(&traces.join("amm-seed1.csv"));
    check_monotone(&traces.join("mamm-seed2.csv"));
}

fn check_monotone(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.len() >= 2);
    assert!(values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
}

#[test]
fn config_errors_exit_with_two() {
    for args in [
        &["--generate", "gaussian:3x3x3:1", "--algos", "nope"][..],
        &["--generate", "gaussian:3x3x3:1", "--ranks", "5,1,1"],
        &["--generate", "bogus"],
        &["--input", "/definitely/missing/file"],
        &["--generate", "gaussian:3x3x3:1", "--input", "x"],
        &["rank222", "--samples", "10"],
        &["best222", "--generate", "gaussian:3x3:1"],
    ] {
        assert_eq!(bench(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn rank222_reports_a_fraction_near_pi_over_four() {
    let o = bench(&["rank222", "--samples", "4000", "--seed", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let fields: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let p: f64 = fields[2].parse().unwrap();
    let se: f64 = fields[3].parse().unwrap();
    assert!((p - std::f64::consts::FRAC_PI_4).abs() < 4.0 * se);
}

#[test]
fn best222_prints_the_core_and_its_rank() {
    let o = bench(&["best222", "--generate", "gaussian:5x5x5:2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rank = out.lines().next().unwrap();
    assert!(rank == "core_rank,2" || rank == "core_rank,3", "{rank}");
    let core = lowrank::tensor::io::parse_text(&out.lines().skip(2).collect::<Vec<_>>().join("\n")).unwrap();
    assert_eq!(core.shape(), &[2, 2, 2]);
}

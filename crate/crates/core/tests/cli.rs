use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcselect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcselect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec!["simulate", "--type", "1", "--noise", "1", "--rep", "1", "--seed", seed];
    args.extend(["--output", path_str(&out)]);
    let res = pcselect(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", "42");
    let b = simulate(dir.path(), "b.csv", "42");
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 1024);
    assert!(text.lines().all(|l| l.split(',').count() == 10));

    let c = simulate(dir.path(), "c.csv", "43");
    assert_ne!(text, fs::read_to_string(c).unwrap());
}

#[test]
fn cv_curve_has_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "m.csv", "42");
    let res = pcselect(&[
        "cv",
        "--input",
        path_str(&input),
        "--method",
        "ppca-rkf-ign",
        "--seed",
        "1",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,criterion,selected"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    let ks: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ks, (1..=9).collect::<Vec<_>>());
    assert_eq!(rows.iter().filter(|r| r[2] == "1").count(), 1);
    let selected = rows.iter().find(|r| r[2] == "1").unwrap();
    let best = rows
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(selected[1].parse::<f64>().unwrap(), best);
}

#[test]
fn cv_accepts_latin_plan_and_window() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectra.csv");
    let labels: Vec<String> = (0..8).map(|i| format!("{:?}", 280.0 + 5.0 * i as f64)).collect();
    let mut text = labels.join(",") + "\n";
    for row in 0..4 * 4 * 3 {
        let a = (row % 7) as f64;
        let b = (row % 5) as f64;
        let cells: Vec<String> = (0..8)
            .map(|j| {
                format!(
                    "{:?}",
                    a * (j as f64 + 1.0) + b * (8.0 - j as f64) + 0.01 * ((row * 31 + j * 17) % 13) as f64
                )
            })
            .collect();
        text += &(cells.join(",") + "\n");
    }
    fs::write(&path, text).unwrap();
    let res = pcselect(&[
        "cv",
        "--input",
        path_str(&path),
        "--header",
        "--window",
        "285:310",
        "--method",
        "pca-ekf-ctri",
        "--plan",
        "latin:4x3",
        "--center",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    // Window keeps labels 285..310, six columns, so k runs 1..5.
    assert_eq!(String::from_utf8(res.stdout).unwrap().lines().count(), 6);

    let wrong_grid = pcselect(&[
        "cv",
        "--input",
        path_str(&path),
        "--header",
        "--method",
        "pca-ekf-ctri",
        "--plan",
        "latin:5x3",
    ]);
    assert_eq!(wrong_grid.status.code(), Some(2));
}

fn accuracy_from_records(text: &str) -> HashMap<(String, String, String), (usize, usize)> {
    let truth = [4usize, 8, 12, 15];
    let mut out: HashMap<_, (usize, usize)> = HashMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let s: usize = f[0].parse().unwrap();
        let entry = out
            .entry((f[0].to_string(), f[1].to_string(), f[3].to_string()))
            .or_default();
        entry.1 += 1;
        if f[4].parse::<usize>().ok() == Some(truth[s - 1]) {
            entry.0 += 1;
        }
    }
    out
}

#[test]
fn bench_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("desk.cfg");
    fs::write(
        &cfg,
        "# small desk run\ntypes = 1\nnoise_levels = 1, 6\nreps = 4\nmethods = all\nfolds = 16\nseed = 5\n",
    )
    .unwrap();
    let records = dir.path().join("records.csv");
    let res = pcselect(&["bench", "--config", path_str(&cfg), "--output", path_str(&records)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rec_text = fs::read_to_string(&records).unwrap();
    assert_eq!(rec_text.lines().count(), 1 + 2 * 4 * 3);
    let summary_path = dir.path().join("records.csv.summary.csv");
    let bench_summary = fs::read_to_string(&summary_path).unwrap();

    let res = pcselect(&["report", "--records", path_str(&records)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = String::from_utf8(res.stdout).unwrap();
    assert_eq!(report, bench_summary);
    assert!(
        report.lines().any(|l| l == "accuracy,1,6,pca-ekf-ctri,,0.0"),
        "{report}"
    );

    let expected = accuracy_from_records(&rec_text);
    let mut checked = 0;
    for line in report.lines().filter(|l| l.starts_with("accuracy,")) {
        let f: Vec<&str> = line.split(',').collect();
        let (hits, n) = expected[&(f[1].to_string(), f[2].to_string(), f[3].to_string())];
        assert_eq!(f[5].parse::<f64>().unwrap(), hits as f64 / n as f64, "{line}");
        checked += 1;
    }
    assert_eq!(checked, 6);

    // Histogram counts sum to the repetition count in every cell.
    let mut totals: HashMap<String, usize> = HashMap::new();
    for line in report.lines().filter(|l| l.starts_with("histogram,")) {
        let f: Vec<&str> = line.split(',').collect();
        *totals.entry(f[1..4].join(",")).or_default() += f[5].parse::<usize>().unwrap();
    }
    assert_eq!(totals.len(), 6);
    assert!(totals.values().all(|&n| n == 4));
}

#[test]
fn bench_selections_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(
        &cfg,
        "types = 2\nnoise_levels = 3\nreps = 3\nmethods = pca-ekf-ctri, ppca-ekf-ign\nsamples = 256\n",
    )
    .unwrap();
    let strip = |o: Output| -> Vec<String> {
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(5);
                f.join(",")
            })
            .collect()
    };
    let a = strip(pcselect(&["bench", "--config", path_str(&cfg), "--seed", "9"]));
    let b = strip(pcselect(&[
        "bench",
        "--config",
        path_str(&cfg),
        "--seed",
        "9",
        "--threads",
        "2",
    ]));
    assert_eq!(a.len(), 7);
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    assert_eq!(pcselect(&["--frobnicate"]).status.code(), Some(1));
    assert_eq!(pcselect(&["cv", "--method", "pca-ekf-ctri"]).status.code(), Some(1));
    assert_eq!(
        pcselect(&["cv", "--input", "x.csv", "--method", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(
        pcselect(&["cv", "--input", "/no/such/file.csv", "--method", "pca-ekf-ctri"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "types = 1\ncolour = blue\n").unwrap();
    let res = pcselect(&["bench", "--config", path_str(&cfg)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2,3\n4,5\n").unwrap();
    let res = pcselect(&["cv", "--input", path_str(&ragged), "--method", "pca-ekf-ctri"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
}

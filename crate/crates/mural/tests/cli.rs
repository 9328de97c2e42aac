use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mural::cli::read_matrix;
use mural::io::{read_matrix_bin, write_matrix_csv};
use mural_core::metrics::silhouette;

fn mural(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mural")).args(args).env_remove("MURAL_THREADS").output().expect("spawn mural")
}

fn ok(args: &[&str]) -> String {
    let o = mural(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> String {
    let o = mural(args);
    assert_eq!(o.status.code(), Some(code), "{args:?}");
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates a small Swiss roll into `dir/g` and fits a forest into `dir/f`.
fn fitted(dir: &Path, n: usize) -> (PathBuf, PathBuf, PathBuf) {
    let g = dir.join("g");
    ok(&["gen", "swissroll", "--n", &n.to_string(), "--seed", "3", "--out", s(&g)]);
    let f = dir.join("f");
    ok(&["fit", s(&g.join("data.csv")), "--schema", s(&g.join("schema.txt")), "--trees", "12", "--seed", "7", "--out", s(&f)]);
    (g.join("data.csv"), g.join("schema.txt"), f.join("forest.mural"))
}

#[test]
fn fit_reports_missingness_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, forest) = fitted(dir.path(), 400);
    let report = fs::read_to_string(forest.with_file_name("missingness.txt")).unwrap();
    assert_eq!(report.matches("\tMNAR").count(), 1, "{report}");
    assert_eq!(report.matches("\tRandom").count(), 2, "{report}");

    let again = dir.path().join("again");
    ok(&["fit", s(&data), "--schema", s(&schema), "--trees", "12", "--seed", "7", "--out", s(&again)]);
    assert_eq!(fs::read(&forest).unwrap(), fs::read(again.join("forest.mural")).unwrap());

    // The resolved config alone reproduces every artifact.
    let golden = dir.path().join("golden");
    ok(&["fit", "--config", s(&forest.with_file_name("resolved-config.toml")), "--out", s(&golden)]);
    for name in ["forest.mural", "missingness.txt", "missingness.json"] {
        assert_eq!(fs::read(forest.with_file_name(name)).unwrap(), fs::read(golden.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn input_errors_exit_one_on_a_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope-schema.txt");
    let err = fails(&["fit", "x.csv", "--schema", s(&missing), "--out", s(dir.path())], 1);
    assert!(err.contains("nope-schema.txt"), "{err}");
    let err = fails(&["eval", "--experiment", "table9", "--out", s(dir.path())], 1);
    assert!(err.contains("table9"), "{err}");
    fails(&["dist", s(&dir.path().join("none.mural")), "x.csv", "--out", s(dir.path())], 1);
    fails(&["fit", "--trees", "0", "--out", s(dir.path())], 1);
}

#[test]
fn dist_writes_symmetric_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["gen", "swissroll", "--n", "10", "--complete", "--out", s(&g)]);
    let text = fs::read_to_string(g.join("data.csv")).unwrap();
    fs::write(g.join("data.csv"), text.lines().take(6).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    let f = dir.path().join("f");
    ok(&["fit", s(&g.join("data.csv")), "--schema", s(&g.join("schema.txt")), "--trees", "4", "--min-leaf", "1", "--out", s(&f)]);
    let d = dir.path().join("d");
    ok(&["dist", s(&f.join("forest.mural")), s(&g.join("data.csv")), "--out", s(&d)]);
    let text = fs::read_to_string(d.join("distance.csv")).unwrap();
    let m = read_matrix(&d.join("distance.csv")).unwrap();
    assert_eq!(m.n(), 5);
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next(), Some(",0,1,2,3,4"));
    for i in 0..5 {
        assert_eq!(m.get(i, i), 0.0);
        for j in 0..5 {
            assert_eq!(m.get(i, j), m.get(j, i));
        }
    }

    let b = dir.path().join("b");
    ok(&["dist", s(&f.join("forest.mural")), s(&g.join("data.csv")), "--format", "bin", "--affinity", "--out", s(&b)]);
    let (n, bin) = read_matrix_bin(fs::read(b.join("distance.bin")).unwrap().as_slice()).unwrap();
    assert_eq!((n, bin.as_slice()), (5, m.as_slice()));
    let (_, p) = read_matrix_bin(fs::read(b.join("diffusion.bin")).unwrap().as_slice()).unwrap();
    for row in p.chunks(5) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn tswd_cohorts() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _, forest) = fitted(dir.path(), 300);
    let t = dir.path().join("t");
    let out = ok(&["tswd", s(&forest), s(&data), "--cohort-a", "x2>0", "--cohort-b", "x2>0", "--allow-overlap", "--out", s(&t)]);
    assert!(out.contains("tswd_mean: 0.0\n"), "{out}");
    assert!(fs::read_to_string(t.join("importance.csv")).unwrap().starts_with("variable,share\n"));

    let err = fails(&["tswd", s(&forest), s(&data), "--cohort-a", "x2>0", "--cohort-b", "x2>0", "--out", s(&t)], 1);
    assert!(err.contains("overlap"), "{err}");
    let err = fails(&["tswd", s(&forest), s(&data), "--cohort-a", "x2 >> 1", "--cohort-b", "x2<0", "--out", s(&t)], 1);
    assert!(err.contains("x2 >> 1"), "{err}");
    let out = ok(&["tswd", s(&forest), s(&data), "--cohort-a", "x2>10", "--cohort-b", "x2<=10", "--per-tree", "--out", s(&t)]);
    assert!(out.contains("per_tree:\n"));
}

#[test]
fn eval_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| -> Vec<String> {
        ["eval", "--experiment", "ablation", "--knob", "trees", "--values", "2,4", "--seeds", "2", "--n", "150", "--out", s(out)]
            .map(String::from)
            .to_vec()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    ok(&["--threads", "1"].into_iter().chain(args(&b).iter().map(String::as_str)).collect::<Vec<_>>());
    for name in ["report.txt", "report.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let text = fs::read_to_string(a.join("report.txt")).unwrap();
    assert!(text.contains("trees=2") && text.contains("MeanImputation") && text.contains("P@5"), "{text}");

    let c = dir.path().join("c");
    ok(&["eval", "--config", s(&a.join("resolved-config.toml")), "--out", s(&c)]);
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(c.join("report.csv")).unwrap());
}

#[test]
fn cluster_block_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let n = 8;
    let block = |i: usize| usize::from(i >= 3);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                data[i * n + j] = if block(i) == block(j) { 0.1 + 0.01 * ((i + j) % 3) as f64 } else { 5.0 };
            }
        }
    }
    let path = dir.path().join("toy.csv");
    write_matrix_csv(n, &data, fs::File::create(&path).unwrap()).unwrap();
    let out_dir = dir.path().join("c");
    let out = ok(&["cluster", "--distance", s(&path), "--k", "2", "--bandwidth", "fixed:1.0", "--out", s(&out_dir)]);
    let labels: Vec<usize> = fs::read_to_string(out_dir.join("labels.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for i in 0..n {
        assert_eq!(labels[i] == labels[0], block(i) == 0, "{labels:?}");
    }
    let expected = silhouette(&read_matrix(&path).unwrap(), &labels).unwrap();
    assert!(out.contains(&format!("silhouette: {expected:?}\n")), "{out}");
    assert_eq!(fs::read_to_string(out_dir.join("silhouette.txt")).unwrap(), format!("{expected:?}\n"));
    let err = fails(&["cluster", "--distance", s(&path), "--k", "9", "--out", s(&out_dir)], 1);
    assert!(err.contains('9'), "{err}");
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qsmat::dense::DenseMatrix;
use qsmat::ffield::{PrimeField, SeededRng};
use qsmat::io::{read_dense, read_generator, write_dense};
use tempfile::TempDir;

fn qstool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qstool")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    qstool(args).status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, n: usize, order: usize, seed: u64) -> PathBuf {
    let out = path(dir, name);
    let (n, order, seed) = (n.to_string(), order.to_string(), seed.to_string());
    assert_eq!(code(&["gen", "--n", &n, "--s", &order, "--seed", &seed, "--out", s(&out)]), 0);
    out
}

#[test]
fn verify_accepts_its_own_builds() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.txt", 48, 3, 1);
    assert_eq!(code(&["verify", "--in", s(&a)]), 0);
    for format in ["sss", "hss", "bruhat"] {
        let g = path(&dir, &format!("{format}.gen"));
        assert_eq!(code(&["build", "--format", format, "--in", s(&a), "--out", s(&g)]), 0);
        assert_eq!(code(&["verify", "--in", s(&a), "--rhs", s(&g)]), 0);
        let back = path(&dir, &format!("{format}.dense"));
        assert_eq!(code(&["expand", "--in", s(&g), "--out", s(&back)]), 0);
        assert_eq!(fs::read_to_string(&back).unwrap(), fs::read_to_string(&a).unwrap());
    }
}

#[test]
fn verify_reports_mismatch() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.txt", 30, 2, 1);
    let b = gen(&dir, "b.txt", 30, 2, 2);
    let g = path(&dir, "b.gen");
    assert_eq!(code(&["build", "--format", "sss", "--in", s(&b), "--out", s(&g)]), 0);
    assert_eq!(code(&["verify", "--in", s(&a), "--rhs", s(&g)]), 1);
}

#[test]
fn order_of_diagonal_is_zero() {
    let dir = TempDir::new().unwrap();
    let f = PrimeField::default();
    let d = DenseMatrix::from_fn(9, 9, f, |i, j| if i == j { f.elem(i as u64 + 1) } else { f.elem(0) });
    let file = path(&dir, "d.txt");
    fs::write(&file, write_dense(&d)).unwrap();
    let out = qstool(&["order", "--in", s(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0\n");
}

#[test]
fn hss_below_twice_the_order_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.txt", 64, 4, 5);
    let out = path(&dir, "h.gen");
    assert_eq!(code(&["build", "--format", "hss", "--block", "7", "--in", s(&a), "--out", s(&out)]), 4);
    assert_eq!(code(&["build", "--format", "hss", "--block", "8", "--in", s(&a), "--out", s(&out)]), 0);
}

#[test]
fn malformed_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.txt");
    fs::write(&bad, "2 2 131071\n1 2\n3\n").unwrap();
    assert_eq!(code(&["order", "--in", s(&bad)]), 3);
    fs::write(&bad, "SSS 4 2 131071 2\n0 0\n").unwrap();
    assert_eq!(code(&["expand", "--in", s(&bad)]), 3);
    assert_eq!(code(&["order", "--in", s(&path(&dir, "missing.txt"))]), 3);
    assert_eq!(code(&["build", "--format", "dense", "--in", s(&bad)]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["gen", "--n", "8", "--s", "2", "--field-p", "12"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn apply_matches_dense_product() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.txt", 40, 3, 7);
    let f = PrimeField::default();
    let b = DenseMatrix::random(40, 5, f, &mut SeededRng::new(3));
    let rhs = path(&dir, "b.txt");
    fs::write(&rhs, write_dense(&b)).unwrap();
    let want = read_dense(&fs::read_to_string(&a).unwrap()).unwrap().mul(&b).unwrap();
    for format in ["sss", "hss", "bruhat"] {
        let g = path(&dir, "g.gen");
        let c = path(&dir, "c.txt");
        assert_eq!(code(&["build", "--format", format, "--in", s(&a), "--out", s(&g)]), 0);
        assert_eq!(code(&["apply", "--in", s(&g), "--rhs", s(&rhs), "--out", s(&c)]), 0);
        assert_eq!(read_dense(&fs::read_to_string(&c).unwrap()).unwrap(), want, "{format}");
    }
}

#[test]
fn add_and_mul_follow_dense_route() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.txt", 36, 2, 1);
    let b = gen(&dir, "b.txt", 36, 2, 2);
    let da = read_dense(&fs::read_to_string(&a).unwrap()).unwrap();
    let db = read_dense(&fs::read_to_string(&b).unwrap()).unwrap();
    let out = path(&dir, "out.gen");
    for format in ["sss", "bruhat"] {
        let (ga, gb) = (path(&dir, "ga"), path(&dir, "gb"));
        for (m, g) in [(&a, &ga), (&b, &gb)] {
            let args = ["build", "--format", format, "--block", "2", "--in", s(m), "--out", s(g)];
            assert_eq!(code(&args), 0);
        }
        assert_eq!(code(&["add", "--in", s(&ga), "--rhs", s(&gb), "--out", s(&out)]), 0);
        let sum = read_generator(&fs::read_to_string(&out).unwrap()).unwrap().expand();
        assert_eq!(sum, da.add(&db).unwrap(), "{format}");
        if format == "sss" {
            assert_eq!(code(&["mul", "--in", s(&ga), "--rhs", s(&gb), "--out", s(&out)]), 0);
            let prod = read_generator(&fs::read_to_string(&out).unwrap()).unwrap().expand();
            assert_eq!(prod, da.mul(&db).unwrap());
        } else {
            assert_eq!(code(&["mul", "--in", s(&ga), "--rhs", s(&gb), "--out", s(&out)]), 2);
        }
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let runs: Vec<Vec<String>> = (0..2)
        .map(|k| {
            let m = path(&dir, &format!("m{k}.txt"));
            let args = ["gen", "--n", "120", "--s", "3", "--density", "0.05", "--seed", "11", "--out", s(&m)];
            assert_eq!(code(&args), 0);
            let g = path(&dir, &format!("g{k}.gen"));
            assert_eq!(code(&["build", "--format", "bruhat", "--in", s(&m), "--seed", "4", "--out", s(&g)]), 0);
            vec![fs::read_to_string(&m).unwrap(), fs::read_to_string(&g).unwrap()]
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

fn bench_rows(args: &[&str]) -> Vec<Vec<String>> {
    let out = qstool(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("op,format,n,s,t,rep,seconds,storage_elems"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn bench_single_cell() {
    let rows = bench_rows(&["bench", "--n", "64", "--s", "4", "--reps", "1", "--format", "sss", "--ops", "build"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..6], ["build", "sss", "64", "4", "4", "0"]);
    assert!(rows[0][6].parse::<f64>().unwrap() > 0.0);
    assert!(rows[0][7].parse::<usize>().unwrap() > 0);
}

#[test]
fn bench_counts_every_cell() {
    let rows = bench_rows(&["bench", "--n", "96", "--s", "2,4,6", "--reps", "5", "--ops", "build,apply", "--seed", "3"]);
    for format in ["sss", "hss", "bruhat"] {
        assert_eq!(rows.iter().filter(|r| r[1] == format).count(), 2 * 3 * 5);
    }
    // Storage is a property of the instance, so it repeats across timing runs.
    let again = bench_rows(&["bench", "--n", "96", "--s", "2,4,6", "--reps", "5", "--ops", "build,apply", "--seed", "3"]);
    let strip = |r: &Vec<String>| [&r[..6], &r[7..]].concat();
    assert_eq!(rows.iter().map(strip).collect::<Vec<_>>(), again.iter().map(strip).collect::<Vec<_>>());
    assert_eq!(code(&["bench", "--n", "32", "--s", "2", "--format", "hss", "--ops", "add"]), 2);
}

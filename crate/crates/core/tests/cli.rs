use cvhss::baselines::horner_eval;
use cvhss::cli::{read_complex_csv, write_complex_csv};
use cvhss::numeric::{RngStream, C64};
use cvhss::transforms::Polynomial;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn cvhss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvhss")).args(args).output().expect("binary runs")
}

fn write(path: &Path, z: &[C64]) {
    write_complex_csv(std::fs::File::create(path).unwrap(), z, false).unwrap();
}

fn read(bytes: &[u8]) -> Vec<C64> {
    read_complex_csv(bytes, false).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(-0.0), Just(f64::MIN_POSITIVE / 4.0)]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn csv_round_trip_is_bit_exact(z in prop::collection::vec((finite(), finite()), 0..40), header in any::<bool>()) {
        let z: Vec<C64> = z.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let mut buf = Vec::new();
        write_complex_csv(&mut buf, &z, header).unwrap();
        let back = read_complex_csv(buf.as_slice(), header).unwrap();
        prop_assert_eq!(back.len(), z.len());
        for (a, b) in back.iter().zip(&z) {
            prop_assert_eq!((a.re.to_bits(), a.im.to_bits()), (b.re.to_bits(), b.im.to_bits()));
        }
    }
}

#[test]
fn polyeval_and_interp_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(5);
    let n = 128;
    let s: Vec<C64> =
        (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5 + rng.uniform(-0.2, 0.2)) / n as f64)).collect();
    let p: Vec<C64> = (0..n).map(|_| rng.complex_gaussian()).collect();
    let (knots, coeffs, values) = (dir.path().join("s.csv"), dir.path().join("p.csv"), dir.path().join("v.csv"));
    write(&knots, &s);
    write(&coeffs, &p);

    let out = cvhss(&["polyeval", "--coeffs", coeffs.to_str().unwrap(), "--knots", knots.to_str().unwrap(), "--xi", "1e-10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read(&out.stdout);
    let exact = horner_eval(&Polynomial::from_vec(p.clone()), &s);
    let err = v.iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-7, "{err:e}");

    write(&values, &v);
    let fitted = dir.path().join("q.csv");
    let out = cvhss(&[
        "interp",
        "--values",
        values.to_str().unwrap(),
        "--knots",
        knots.to_str().unwrap(),
        "--out",
        fitted.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let q = read(&std::fs::read(&fitted).unwrap());
    let d: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let pn: f64 = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!(d <= 1e-6 * pn, "{:e}", d / pn);
}

#[test]
fn cauchy_commands_agree_with_direct_sums() {
    let dir = tempfile::tempdir().unwrap();
    let s = [C64::new(2.0, 0.0), C64::new(0.0, 3.0)];
    let t = [C64::new(0.5, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let u = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-2.0, 0.5)];
    let paths: Vec<_> = ["s", "t", "u"].iter().map(|n| dir.path().join(format!("{n}.csv"))).collect();
    for (path, z) in paths.iter().zip([&s[..], &t, &u]) {
        write_complex_csv(std::fs::File::create(path).unwrap(), z, true).unwrap();
    }
    let out = cvhss(&[
        "cauchy-matvec",
        "--s",
        paths[0].to_str().unwrap(),
        "--t",
        paths[1].to_str().unwrap(),
        "--u",
        paths[2].to_str().unwrap(),
        "--header",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.starts_with(b"re,im\n"));
    let v = read_complex_csv(out.stdout.as_slice(), true).unwrap();
    for (i, a) in s.iter().enumerate() {
        let exact: C64 = t.iter().zip(&u).map(|(b, x)| x / (a - b)).sum();
        assert!((v[i] - exact).norm() <= 1e-14);
    }
}

#[test]
fn rank_experiment_markdown_layout() {
    let out = cvhss(&["rank-exp", "--n", "256", "--k", "4,16", "--h", "0", "--trials", "2", "--format", "md"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let table: Vec<&str> = text.lines().filter(|l| l.starts_with('|')).collect();
    assert!(table.len() >= 2 + 3, "{text}");
    assert!(table[0].contains("k=4") && table[0].contains("k=16"), "{}", table[0]);
    assert!(table[1].chars().all(|c| matches!(c, '|' | '-' | ':' | ' ')));
    let columns = table[0].matches('|').count();
    assert!(table.iter().all(|l| l.matches('|').count() == columns));

    let json = cvhss(&["rank-exp", "--n", "256", "--k", "16", "--h", "0", "--trials", "1", "--format", "json"]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["kind"], "rank");
    assert_eq!(value["cells"].as_array().unwrap().len(), 3);
}

#[test]
fn selftest_and_exit_codes() {
    let out = cvhss(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(cvhss(&["polyeval", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(cvhss(&["rank-exp", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(cvhss(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2,3\n").unwrap();
    let out = cvhss(&["polyeval", "--coeffs", bad.to_str().unwrap(), "--knots", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

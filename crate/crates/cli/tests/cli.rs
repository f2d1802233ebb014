use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vcodec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcodec")).args(args).output().expect("spawn vcodec")
}

fn ok(args: &[&str]) -> String {
    let out = vcodec(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn gen(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let p = path(dir, name);
    let mut args = vec!["gen", "--out", &p, "--rows", "64", "--cols", "96"];
    args.extend_from_slice(extra);
    ok(&args);
    p
}

fn field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line:?}"))
        .to_string()
}

#[test]
fn compress_decompress_meets_target() {
    let dir = TempDir::new().unwrap();
    let w = gen(&dir, "w.vctn", &["--outlier-scale", "50", "--seed", "3"]);
    let bs = path(&dir, "w.vcbs");
    let summary = ok(&["compress", "--in", &w, "--target-mse", "0.01", "--rotate", "--out", &bs]);
    let floor: bool = field(&summary, "floor_limited").parse().unwrap();
    let back = path(&dir, "back.vctn");
    let line = ok(&["decompress", "--in", &bs, "--out", &back, "--reference", &w]);
    let mse: f64 = field(&line, "mse").parse().unwrap();
    assert!(floor || mse <= 0.01, "{mse}");
    assert!(Path::new(&back).exists());
}

#[test]
fn ablate_report_has_four_rows() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.vctn", &[]);
    let r = path(&dir, "r.csv");
    ok(&["ablate", "--in", &t, "--target-mse", "0.01", "--report", &r]);
    let text = std::fs::read_to_string(&r).unwrap();
    assert!(text.starts_with("# vcodec "));
    assert!(text.contains("# command: vcodec ablate"));
    let rows = vcodec::rate::read_csv(&text).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].bits_per_value, 8.0);
    assert_eq!(rows[0].stage_set, "baseline");
}

#[test]
fn json_reports_parse() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.vctn", &[]);
    let r = path(&dir, "s.json");
    ok(&["sweep", "--in", &t, "--qps", "0,24,48", "--report", &r]);
    let text = std::fs::read_to_string(&r).unwrap();
    let rows = vcodec::rate::read_json(&text).unwrap();
    assert_eq!(rows.iter().map(|r| r.qp).collect::<Vec<_>>(), vec![0, 24, 48]);
    assert!(rows.windows(2).all(|w| w[1].bytes <= w[0].bytes));
}

#[test]
fn energy_and_codec_ratio() {
    assert_eq!(ok(&["hw-model", "energy", "--comm", "nccl", "--codec", "t264", "--ratio", "5"]).trim(), "4.32");
    assert_eq!(ok(&["hw-model", "codec-ratio"]).trim(), "31.7");
    assert_eq!(
        ok(&["hw-model", "plan", "--model-bytes", "1e9", "--gpu-memory-gb", "8", "--devices", "4"]).trim(),
        "pipeline_stages=1 data_parallel_degree=4"
    );
}

#[test]
fn dist_sim_memory() {
    let out = ok(&["dist-sim", "memory"]);
    assert!(out.contains("fits,true"), "{out}");
    assert!(out.contains("activation_ratio,4.5×"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.vctn", &["--seed", "9"]);
    let t2 = gen(&dir, "t2.vctn", &["--seed", "9"]);
    assert_eq!(std::fs::read(&t).unwrap(), std::fs::read(&t2).unwrap());
    let (a, b) = (path(&dir, "a.vcbs"), path(&dir, "b.vcbs"));
    ok(&["compress", "--in", &t, "--target-bits", "3", "--out", &a, "--threads", "1"]);
    ok(&["compress", "--in", &t, "--target-bits", "3", "--out", &b, "--threads", "1"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.vctn", &[]);
    let out = path(&dir, "x.vcbs");

    let unknown = vcodec(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    let err = String::from_utf8(unknown.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[usage]: "));

    let both = vcodec(&["compress", "--in", &t, "--out", &out, "--target-mse", "0.1", "--target-bits", "2"]);
    assert_eq!(both.status.code(), Some(2));

    let missing = vcodec(&["compress", "--in", &path(&dir, "nope.vctn"), "--out", &out, "--target-bits", "2"]);
    assert_eq!(missing.status.code(), Some(3));

    std::fs::write(path(&dir, "junk.vcbs"), b"VCBSgarbage").unwrap();
    let junk = vcodec(&["decompress", "--in", &path(&dir, "junk.vcbs"), "--out", &out]);
    assert_eq!(junk.status.code(), Some(3));

    let tiny = vcodec(&["compress", "--in", &t, "--out", &out, "--target-bits", "0.001"]);
    assert_eq!(tiny.status.code(), Some(4));
    assert!(String::from_utf8(tiny.stderr).unwrap().starts_with("error[infeasible]: "));
}

#[test]
fn grad_sim_table() {
    let out = ok(&["grad-sim", "--rows", "64", "--cols", "64", "--steps", "10,3000"]);
    assert!(out.contains("# average_nominal_bits: 10.09375"));
    let data: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "step,phase,nominal_bits,base_bits,residual_bits,total_bits,mse");
    assert_eq!(data.len(), 3);
}

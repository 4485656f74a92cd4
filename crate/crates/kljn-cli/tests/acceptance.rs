//! Acceptance gate, command side: rerunning any command with identical
//! flags and seed must reproduce every output file byte for byte.

use std::path::Path;
use std::process::Command;

fn run(args: &[&str], dir: &Path) {
    let out = Command::new(env!("CARGO_BIN_EXE_kljn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn kljn");
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
}

fn assert_identical(dir_a: &Path, dir_b: &Path, names: &[&str]) {
    for name in names {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn criterion_10_byte_identical_reruns() {
    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec!["simulate", "--state", "LH", "--noise", "stable", "--alpha", "1.5",
                 "--n", "2048", "--seed", "11", "--out", "sim.csv"],
            vec!["sim.csv", "sim.csv.manifest.json"],
        ),
        (
            vec!["figure", "--id", "2", "--out-dir", ".", "--n", "1024", "--seed", "12"],
            vec!["fig2_LH.csv", "fig2_HL.csv", "manifest.json"],
        ),
        (
            vec!["attack", "--distinguisher", "tail-quadrant", "--noise", "stable",
                 "--alpha", "1.0", "--episodes", "50", "--n", "1024", "--seed", "13",
                 "--out", "attack.json"],
            vec!["attack.json", "attack.json.manifest.json"],
        ),
        (
            vec!["keyexchange", "--bits", "16", "--samples-per-bit", "512",
                 "--eve", "corr-sign", "--seed", "14",
                 "--out", "kx.json", "--periods-out", "periods.csv"],
            vec!["kx.json", "periods.csv", "kx.json.manifest.json"],
        ),
        (
            vec!["cf-check", "--noise", "stable", "--alpha", "0.5", "--n", "8192",
                 "--seed", "15", "--out", "cf.csv"],
            vec!["cf.csv", "cf.csv.manifest.json"],
        ),
    ];
    for (args, outputs) in &cases {
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        run(args, first.path());
        run(args, second.path());
        assert_identical(first.path(), second.path(), outputs);
    }
    println!("[PASS] criterion 10: all 5 commands byte-identical across reruns");
}

//! End-to-end tests of the `bdfd` binary: file formats, exit codes, and
//! reproducible simulation output.

use std::path::{Path, PathBuf};
use std::process::Command;

use bdfd_core::channel::{rayleigh_mimo_channel, ChannelModel};
use bdfd_core::linalg::CMatrix;
use bdfd_core::rng::{stream, StreamPurpose};
use bdfd_core::sim;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdfd"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bdfd_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_channel(dir: &Path, p: usize, k: usize, seed: u64) -> PathBuf {
    let h = rayleigh_mimo_channel(p, k, &mut stream(seed, 0, StreamPurpose::Channel));
    let path = dir.join("H.txt");
    sim::save_matrix(&path, &h).unwrap();
    path
}

#[test]
fn design_writes_a_consistent_transceiver() {
    let dir = workdir("design");
    let hpath = write_channel(&dir, 4, 3, 11);
    let out = dir.join("t.txt");
    let status = bin()
        .args([
            "design",
            "--channel",
            hpath.to_str().unwrap(),
            "--rvv",
            "0.25",
            "--M",
            "3",
            "--p0",
            "3.0",
            "--kind",
            "OPT_ZF_BDFD",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    // Reload and verify the zero-forcing constraint W H F = B + I.
    let t = sim::load_transceiver(&out).unwrap();
    let h = sim::load_matrix(&hpath).unwrap();
    let lhs = &t.w * &h * &t.f;
    let rhs = &t.b + CMatrix::identity(3, 3);
    assert!((lhs - rhs).norm() < 1e-9);
    let ch = ChannelModel::with_awgn(h, 0.25).unwrap();
    let power = t.power();
    assert!((power - 3.0).abs() < 1e-9 * 3.0);
    drop(ch);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_preset_is_reproducible_and_parseable() {
    let dir = workdir("sim");
    let out1 = dir.join("a.csv");
    let out2 = dir.join("b.csv");
    for (out, workers) in [(&out1, "1"), (&out2, "3")] {
        let status = bin()
            .args([
                "simulate",
                "--preset",
                "mimo33",
                "--channels",
                "8",
                "--blocks",
                "4",
                "--seed",
                "77",
                "--workers",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "CSV differs between worker counts");

    let text = String::from_utf8(a).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "scheme,snr_db,feedback_mode,bits,errors,ber,stderr,predicted_mse,predicted_ber_bound,gmi_bits"
    );
    // 8 schemes x 11 SNR points x 2 modes data lines.
    let data = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count() - 1;
    assert_eq!(data, 8 * 11 * 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_accepts_config_files() {
    let dir = workdir("cfg");
    let cfg_path = dir.join("sweep.cfg");
    let mut cfg = bdfd_core::sim::scenario_preset("mimo34").unwrap();
    cfg.channels_per_point = 5;
    cfg.blocks_per_channel = 3;
    cfg.snr_db_grid = vec![5.0, 10.0];
    std::fs::write(&cfg_path, cfg.to_config_text()).unwrap();
    let out = dir.join("r.csv");
    let status = bin()
        .args([
            "simulate",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_prints_a_table() {
    let dir = workdir("analyze");
    let hpath = write_channel(&dir, 4, 3, 13);
    let output = bin()
        .args([
            "analyze",
            "--channel",
            hpath.to_str().unwrap(),
            "--rvv",
            "0.5",
            "--M",
            "3",
            "--p0",
            "3.0",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("closed-form optimal MSE"));
    assert!(text.contains("OPT_MMSE_BDFD"));
    assert!(text.contains("gmi_bits"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_match_error_classes() {
    let dir = workdir("codes");

    // Usage error: missing required arguments.
    let status = bin().args(["simulate"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    // Usage error: unknown preset name.
    let status = bin()
        .args(["simulate", "--preset", "bogus", "--out", "/tmp/x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // I/O error: channel file does not exist.
    let status = bin()
        .args([
            "design",
            "--channel",
            dir.join("missing.txt").to_str().unwrap(),
            "--rvv",
            "1.0",
            "--M",
            "2",
            "--p0",
            "2.0",
            "--kind",
            "OPT_ZF_BDFD",
            "--out",
            dir.join("t.txt").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // Numerical/design error: ZF design on a rank-deficient channel.
    let h = CMatrix::from_row_slice(
        2,
        2,
        &[
            num_complex::Complex64::new(1.0, 0.0),
            num_complex::Complex64::new(0.0, 0.0),
            num_complex::Complex64::new(1.0, 0.0),
            num_complex::Complex64::new(0.0, 0.0),
        ],
    );
    let hpath = dir.join("rank1.txt");
    sim::save_matrix(&hpath, &h).unwrap();
    let status = bin()
        .args([
            "design",
            "--channel",
            hpath.to_str().unwrap(),
            "--rvv",
            "1.0",
            "--M",
            "2",
            "--p0",
            "2.0",
            "--kind",
            "OPT_ZF_BDFD",
            "--out",
            dir.join("t.txt").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}

use std::process::Command;

use prf_core::sampling::table_means;
use prf_core::{GridConfig, InitialMeasure, ScaledParams};

fn prf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prf"))
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = prf().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn unknown_flag_exits_2() {
    let out = prf().args(["tables", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameter_exits_2() {
    let out = prf().args(["density", "-t", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn expected_tables_match_library() {
    let out = prf()
        .args(["tables", "--expected", "-t", "0.3", "--theta-s", "4", "--theta-r", "2", "--gamma", "1", "-m", "5", "-n", "7"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = GridConfig::default().grid_for(0.3).unwrap();
    let e = table_means(
        5,
        7,
        &ScaledParams::new(0.3, 4.0, 0.0).unwrap(),
        &ScaledParams::new(0.3, 2.0, 1.0).unwrap(),
        &InitialMeasure::equilibrium(4.0, 0.0).unwrap(),
        &InitialMeasure::equilibrium(2.0, 1.0).unwrap(),
        &grid,
    )
    .unwrap();
    let expected = serde_json::to_string_pretty(&e).unwrap() + "\n";
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn outputs_are_reproducible_and_carry_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = prf()
            .args(["simulate", "--kind", "poisson", "-t", "0.3", "--theta-s", "4", "--theta-r", "2", "-m", "3", "-n", "3"])
            .args(["--loci", "4", "--seed", "7", "--format", "tsv", "--intervals", "100", "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a");
    let b = run("b");
    let ta = std::fs::read_to_string(a.join("tables.tsv")).unwrap();
    assert_eq!(ta, std::fs::read_to_string(b.join("tables.tsv")).unwrap());
    assert_eq!(prf_core::table::parse_tables_tsv(&ta).unwrap().len(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["settings"]["grid"]["intervals"], 100);
}

#[test]
fn count_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = dir.path().join("aln.fasta");
    std::fs::write(&fasta, ">a\nGGAAAA\n>b\nGGAAAA\n>c\nGGGAAA\n>d\nGGGAAC\n").unwrap();
    let out = prf()
        .args(["tables", "--count", "--format", "tsv", "--species1", "a,b", "--species2", "c,d", "--fasta"])
        .arg(&fasta)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("silent\t1\t0\t0\nreplacement\t0\t1\t0\n"), "{text}");

    let sims = dir.path().join("sims");
    let out = prf()
        .args(["simulate", "--kind", "poisson", "-t", "0.3", "--theta-s", "4", "--theta-r", "2", "--gamma", "1"])
        .args(["-m", "5", "-n", "5", "--loci", "10", "--format", "json", "--intervals", "100", "--out"])
        .arg(&sims)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = prf()
        .args(["fit", "--gamma-map", "shared", "--theta-s-map", "shared", "--theta-r-map", "shared", "--in"])
        .arg(sims.join("tables.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: prf_core::FitResult = serde_json::from_slice(&out.stdout).unwrap();
    assert!(fit.log_likelihood.is_finite());
    assert!(fit.t > 0.0 && fit.theta_s.len() == 1);
}

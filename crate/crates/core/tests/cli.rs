//! End-to-end runs of the command-line entry point.

use std::path::PathBuf;

use wsn_fusion::harness::cli_main;

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenarios", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn out(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("wsn-fusion-{}-{name}", std::process::id()))
}

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("wsn-fusion").chain(args.iter().copied()))
}

fn header(path: &PathBuf) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    std::fs::remove_file(path).ok();
    text.lines().next().unwrap().to_string()
}

#[test]
fn optimize_smoke() {
    assert_eq!(
        run(&[
            "optimize",
            "--variant",
            "joint",
            "--ptot",
            "10",
            "--seed",
            "1"
        ]),
        0
    );
    assert_eq!(run(&["optimize", "--variant", "sc3", "--ptot", "-4"]), 0);
}

#[test]
fn sweep_writes_the_bound_columns() {
    let path = out("sweep.csv");
    let code = run(&[
        "sweep",
        "--scenario",
        &scenario("bound_curves.toml"),
        "--trials",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(header(&path).starts_with("ptot_db,D,D1,D2,D3,se_D,"));
}

#[test]
fn gaps_writes_the_factor_columns() {
    let path = out("gaps.csv");
    let code = run(&[
        "gaps",
        "--scenario",
        &scenario("gap_factors.toml"),
        "--trials",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(header(&path), "ptot_db,g_t_05,g_t_25,g_t_60,g_c,g_d");
}

#[test]
fn traces_cover_every_cluster() {
    let path = out("traces.csv");
    let code = run(&[
        "scenario",
        "--scenario",
        &scenario("three_cluster_gamma_c.toml"),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(text.lines().count(), 1 + 3 * 41);
}

#[test]
fn missing_scenario_is_a_configuration_error() {
    assert_eq!(run(&["sweep", "--scenario", "/nonexistent/x.toml"]), 2);
}

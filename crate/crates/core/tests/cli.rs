use std::path::Path;
use std::process::{Command, Output};

fn locctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locctl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let p = dir.join("a.cfg");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_verify_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "[experiment]\nkind = sweep-q\nseeds = 2\n[network]\nnodes = 30\n[control]\nn = 2\nm = 2\nq = 0..2\n",
    );
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = locctl(&["run", "--config", &cfg, "--out", out_s, "--threads", "2", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(out.join("config.txt")).unwrap().contains("master_seed = 7"));
    assert_eq!(code(&locctl(&["verify", out_s])), 0);

    let svg = dir.path().join("q.svg");
    let agg = out.join("aggregate.csv");
    let o = locctl(&["plot", agg.to_str().unwrap(), "--kind", "sweep", "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    // Tampering is a validation failure.
    let text = std::fs::read_to_string(&agg).unwrap().replacen(",0,", ",1,", 1);
    std::fs::write(&agg, text).unwrap();
    assert_eq!(code(&locctl(&["verify", out_s])), 1);
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "[experiment]\nkind = sweep-q\nfoo = 1\n");
    let o = locctl(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("foo"));
    assert_eq!(code(&locctl(&["run"])), 1);
    assert_eq!(code(&locctl(&["frobnicate"])), 1);
    let empty = dir.path().join("e.csv");
    std::fs::write(&empty, "rank,magnitude\n").unwrap();
    let svg = dir.path().join("e.svg");
    let o = locctl(&["plot", empty.to_str().unwrap(), "--kind", "ordered", "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!svg.exists());
}

#[test]
fn runtime_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // Every realization fails: the ERN is far below the giant-component threshold.
    let cfg = write_cfg(
        dir.path(),
        "[experiment]\nkind = sweep-q\nseeds = 1\n[network]\nnodes = 30\nmean_degree = 0.01\n",
    );
    let out = dir.path().join("run");
    let o = locctl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(out.join("runs.csv").exists());
    let missing = dir.path().join("nowhere");
    assert_eq!(code(&locctl(&["verify", missing.to_str().unwrap()])), 2);
}

#[test]
fn gen_net_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    let o = locctl(&["gen-net", "--network", "rgn", "--nodes", "60", "--seed", "3", "--out", net.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = localized_control::sparse::read_matrix_market(net.join("A.mtx")).unwrap();
    let g = localized_control::network::Graph::read_edge_list(net.join("network.edges")).unwrap();
    assert_eq!(a.rows(), 3 * g.node_count());

    let grid_file = dir.path().join("small.grid");
    let o = locctl(&["grid", "--synthetic", "4", "12", "--out", grid_file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("grid");
    let o = locctl(&[
        "grid",
        "--grid-file",
        grid_file.to_str().unwrap(),
        "--f",
        "3",
        "--q",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["controlled.csv", "uncontrolled.csv", "sins.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

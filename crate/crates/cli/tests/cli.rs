use assert_cmd::Command;

fn surfmimo() -> Command {
    Command::cargo_bin("surfmimo").unwrap()
}

#[test]
fn version_names_presets() {
    let out = surfmimo()
        .arg("--version")
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let s = String::from_utf8(out).unwrap();
    assert!(s.contains("material presets 1") && s.contains("MCS table 1"), "{s}");
}

#[test]
fn usage_errors_exit_2() {
    surfmimo().args(["channel", "--bogus"]).assert().code(2);
    surfmimo().arg("frobnicate").assert().code(2);
    surfmimo().args(["aggregate", "--scenario", "3"]).assert().code(2);
}

#[test]
fn missing_scene_file_exits_5() {
    surfmimo()
        .args(["channel", "--scene", "/nonexistent/scene.toml"])
        .assert()
        .code(5);
}

#[test]
fn bad_config_exits_3_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(
        &path,
        "[surface]\nwidth_m = 2.0\nheight_m = 0.5\nmaterial = \"spraypaint\"\nbogus = 1\n",
    )
    .unwrap();
    let out = surfmimo()
        .args(["channel", "--scene"])
        .arg(&path)
        .assert()
        .code(3)
        .get_output()
        .stderr
        .clone();
    let s = String::from_utf8(out).unwrap();
    assert!(s.contains("line 5"), "{s}");
}

#[test]
fn unknown_band_exits_2() {
    surfmimo().args(["channel", "--band", "60ghz:1"]).assert().code(2);
}

#[test]
fn channel_output_feeds_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let csi = dir.path().join("csi.csv");
    surfmimo()
        .args([
            "channel",
            "--mode",
            "surface-2x2",
            "--distance-ft",
            "4",
            "--subcarriers",
            "16",
            "--grid",
            "16",
            "-o",
        ])
        .arg(&csi)
        .assert()
        .success();
    let out = surfmimo()
        .args(["analyze", "--snr", "60", "--csi"])
        .arg(&csi)
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let s = String::from_utf8(out).unwrap();
    assert!(s.starts_with("# surfmimo results\n# kind: analysis\n"), "{s}");
    let row = s.lines().last().unwrap();
    assert!(row.starts_with("MIMO-2x2,60.0,"), "{row}");
}

#[test]
fn analyze_rejects_a_sweep_file() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    surfmimo()
        .args(["sweep", "--mode", "siso", "--distances-ft", "2", "-o"])
        .arg(&sweep)
        .assert()
        .success();
    surfmimo()
        .args(["analyze", "--snr", "20", "--csi"])
        .arg(&sweep)
        .assert()
        .code(5);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let run = |seed: &str| {
        surfmimo()
            .args(["share", "--slots", "2000", "--seed", seed])
            .assert()
            .success()
            .get_output()
            .stdout
            .clone()
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn plot_script_needs_an_output_file() {
    surfmimo().args(["pulse", "--plot-script", "x.gp"]).assert().code(2);
}

#[test]
fn plot_script_references_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let gp = dir.path().join("p.gp");
    surfmimo()
        .args(["pulse", "--horizon-ns", "100", "-o"])
        .arg(&csv)
        .arg("--plot-script")
        .arg(&gp)
        .assert()
        .success();
    let script = std::fs::read_to_string(&gp).unwrap();
    assert!(script.contains(&csv.display().to_string()));
}

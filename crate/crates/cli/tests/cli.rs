use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_aoa-pla"));
    c.env_remove("AOA_PLA_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find(|l| l.starts_with(key))
        .and_then(|l| l.split('=').nth(1))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn reproduce_fig3_is_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let csv: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let out = d.path().to_str().unwrap();
            let o = run(&["reproduce", "fig3", "--seed", "7", "--out", out]);
            assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
            assert!(stdout(&o).contains("[PASS] theory_sim_gap"));
            assert!(d.path().join("fig3__7.svg").exists());
            std::fs::read(d.path().join("fig3__7.csv")).unwrap()
        })
        .collect();
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn reproduce_writes_nothing_else() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("nested");
    let o = run(&[
        "--out",
        out.to_str().unwrap(),
        "reproduce",
        "fig5",
        "--set",
        "trials=50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["fig5__2024.csv", "fig5__2024.svg"]);
}

#[test]
fn output_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = bin()
        .env("AOA_PLA_OUT", d.path())
        .args(["reproduce", "fig3d_same", "--seed", "3"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.path().join("fig3d_same__3.csv").exists());
}

#[test]
fn reproduce_rejects_unknown_figure_and_parameter() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let o = run(&["--out", out, "reproduce", "fig4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig4"));
    let o = run(&["--out", out, "reproduce", "fig5", "--set", "colour=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn attack_opt_aligned() {
    let o = run(&[
        "attack-opt",
        "--M",
        "16",
        "--theta",
        "0.4",
        "--theta-hat",
        "0.4",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(field(&s, "beta*"), 1.0);
    assert_eq!(field(&s, "phi*"), 0.0);
    assert!(field(&s, "gap zeta* - floor").abs() < 1e-12);
}

#[test]
fn attack_opt_misaligned_is_stationary() {
    let o = run(&[
        "attack-opt",
        "--M",
        "16",
        "--theta",
        "0.4",
        "--theta-hat",
        "0.2",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(field(&s, "gradient residual") <= 1e-9);
    assert!(field(&s, "gap zeta* - floor") > 0.0);
    let beta = field(&s, "beta*");
    assert!(beta > 0.0 && beta < 1.0);
}

#[test]
fn attack_opt_accepts_degrees() {
    let rad = stdout(&run(&[
        "attack-opt",
        "--M",
        "8",
        "--theta",
        "0.5",
        "--theta-hat",
        "0.3",
    ]));
    let deg = stdout(&run(&[
        "attack-opt",
        "--M",
        "8",
        "--theta",
        &format!("{}deg", 0.5f64.to_degrees()),
        "--theta-hat",
        "0.3",
    ]));
    assert!((field(&rad, "zeta*") - field(&deg, "zeta*")).abs() < 1e-12);
}

#[test]
fn invalid_flag_names_the_flag() {
    let o = run(&["attack-opt", "--theta-hat", "0.1", "--bogus", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bogus"));
    assert!(stderr(&o).contains("Usage"));
    let o = run(&["music", "--M", "many"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--M"));
}

#[test]
fn music_from_synth_and_from_file_agree() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let a = run(&[
        "--out",
        out,
        "music",
        "--M",
        "8",
        "--theta",
        "-0.3",
        "--snr-db",
        "5",
        "--snapshots",
        "200",
        "--save-block",
        "block.txt",
        "--spectrum",
        "spec.csv",
    ]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = run(&[
        "music",
        "--input",
        d.path().join("block.txt").to_str().unwrap(),
    ]);
    assert!(b.status.success(), "{}", stderr(&b));
    let line = |s: String| {
        s.lines()
            .find(|l| l.starts_with("source 0"))
            .unwrap()
            .to_string()
    };
    assert_eq!(line(stdout(&a)), line(stdout(&b)));
    assert!(line(stdout(&a)).contains("angle = -0.3"));
    let spec = std::fs::read_to_string(d.path().join("spec.csv")).unwrap();
    assert_eq!(spec.lines().next(), Some("angle_rad,pseudospectrum"));
    assert_eq!(spec.lines().count(), 1 + 3143);
}

#[test]
fn music_reads_handwritten_block() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("b.txt");
    // a(0) for M = 2, twice.
    std::fs::write(&p, "2 2\n1+0j,1+0j\n1.0+0.0j,1.0-0.0j\n").unwrap();
    let o = run(&["music", "--input", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("angle = 0 rad"));
    std::fs::write(&p, "2 2\n1+0j\n").unwrap();
    assert_eq!(
        run(&["music", "--input", p.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

fn enroll(acl: &Path) {
    let o = run(&[
        "enroll",
        "--acl",
        acl.to_str().unwrap(),
        "--identity",
        "alice",
        "--theta",
        "0.4",
        "--M",
        "16",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let acl = d.path().join("acl.txt");
    enroll(&acl);
    let acl = acl.to_str().unwrap();
    let o = run(&[
        "verify",
        "--acl",
        acl,
        "--identity",
        "alice",
        "--theta",
        "0.4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("ACCEPT"));
    let o = run(&[
        "verify",
        "--acl",
        acl,
        "--identity",
        "alice",
        "--attacker-angles",
        "0.2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("REJECT"));
    let o = run(&[
        "verify",
        "--acl",
        acl,
        "--identity",
        "alice",
        "--attacker-angles",
        "0.4,0.4",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "aligned attacker with unit aggregate passes"
    );
    let o = run(&[
        "verify",
        "--acl",
        acl,
        "--identity",
        "mallory",
        "--theta",
        "0.4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mallory"));
    let o = run(&[
        "verify",
        "--acl",
        "/nonexistent/acl",
        "--identity",
        "alice",
        "--theta",
        "0.4",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "[array]\nnum_elements = 16\n[scenario]\ntheta = 0.4\n[noise]\nsnr_legit_db = 15\nsnr_attacker_db = 15\n").unwrap();
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "attack-opt",
        "--theta-hat",
        "0.4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "M"), 16.0);
    assert!((field(&stdout(&o), "zeta*") - 2.0 * 10f64.powf(-1.5)).abs() < 1e-12);

    std::fs::write(&cfg, "[array]\nnum_elementz = 16\n").unwrap();
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "attack-opt",
        "--theta-hat",
        "0.4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("array.num_elementz"));
}

#[test]
fn config_overrides_reach_the_figure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "[experiment]\nfigure = fig7\nseed = 11\n[overrides]\ntrials = 100\nattacker_antennas = 1,2,3\n").unwrap();
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.path().to_str().unwrap(),
        "reproduce",
    ]);
    let csv = std::fs::read_to_string(d.path().join("fig7__11.csv")).unwrap();
    assert!(csv.contains("# param.trials=100"), "{}", stderr(&o));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
}

#[test]
fn sweep_far_frr_writes_csv() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out",
        d.path().to_str().unwrap(),
        "sweep-far-frr",
        "--M",
        "8",
        "--theta",
        "0.4",
        "--attacker-angles",
        "0.1",
        "--snapshots",
        "200",
        "--trials",
        "40",
        "--thresholds",
        "0.01,0.05,1.0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("far_frr__2024.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "threshold_rad,far,frr");
    assert_eq!(rows.len(), 4);
    assert!(
        rows[3].starts_with("1,1,"),
        "everything passes a 1 rad threshold: {}",
        rows[3]
    );
}

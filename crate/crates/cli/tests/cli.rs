use std::process::Command;

fn hdpg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdpg"))
}

#[test]
fn solve_writes_csv_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small darcy run\nexample = 1\nscheme = hdpg\nk0 = 3\nN_u = 6\nN_uhat = 3\nN_p = 10\nr = 0.6\n").unwrap();
    let out = dir.path().join("out.csv");
    let dump = dir.path().join("system.txt");
    let status = hdpg()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--seed-list", "0,1"])
        .arg("--out")
        .arg(&out)
        .arg("--dump-system")
        .arg(&dump)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("example,scheme,h,k0,N_u,N_uhat,N_p,r,eta,tau,M,dof,rows,seeds,e0_p"));
    assert!(lines[1].contains(",270,411,0;1,"), "{}", lines[1]);
    assert!(std::fs::metadata(&dump).unwrap().len() > 0);
}

#[test]
fn overrides_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "example = 1\nk0 = 3\nN_u = 6\nN_uhat = 3\nN_p = 10\n").unwrap();
    let out = hdpg()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--seed-list", "3", "--set", "scheme=hdpg-reduced", "--quad-order", "9"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("1,hdpg-reduced,"));
    assert!(text.contains(",162,"));
}

#[test]
fn bad_combination_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "example = 1\nscheme = brinkman\n").unwrap();
    let out = hdpg().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not apply"));
    let out = hdpg().args(["reproduce", "--table", "9"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn reproduce_first_rows_of_table1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.csv");
    let status = hdpg()
        .args(["reproduce", "--table", "1", "--limit", "2", "--seed-list", "0"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
}

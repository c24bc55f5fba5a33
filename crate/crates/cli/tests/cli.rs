use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dcdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcdc"))
        .args(args)
        .output()
        .unwrap()
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dcdc-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &[u8]) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const K4: &str = r#"{"vertices":[0,1,2,3],"edges":[[0,1],[0,2],[0,3],[1,2],[1,3],[2,3]],
 "rotation":{"0":[0,2,1],"1":[3,4,0],"2":[1,5,3],"3":[2,4,5]}}"#;

#[test]
fn k4_pipeline() {
    let dir = workdir("k4");
    let g = write(&dir, "k4.json", K4.as_bytes());
    let out = dcdc(&["eardecomp", &g]);
    assert_eq!(out.status.code(), Some(0));
    let ed = write(&dir, "ed.json", &out.stdout);

    let out = dcdc(&["build-h", &g, &ed]);
    assert_eq!(out.status.code(), Some(0));
    let dump = write(&dir, "dump.json", &out.stdout);

    let out = dcdc(&["search", &dump, &dump]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "superb");
    let cover = write(
        &dir,
        "cover.json",
        report["dcdc"].to_string().as_bytes(),
    );
    assert_eq!(dcdc(&["verify-dcdc", &g, &cover]).status.code(), Some(0));
    assert_eq!(dcdc(&["verify-dcdc", &dump, &cover]).status.code(), Some(1));

    assert_eq!(dcdc(&["planar", &g, &ed, &g]).status.code(), Some(0));

    let out = dcdc(&["closure", &dump, &dump, "--budget", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0]["op"], "start");
    assert!(lines[1..].iter().all(|l| l["parent"] == lines[0]["hash"]));

    let out = dcdc(&["export-dot", &dump]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("graph G {"));
}

#[test]
fn reduce_lists_choices() {
    let dir = workdir("reduce");
    let m = write(
        &dir,
        "m.json",
        br#"{"edges":[[0,1],[1,2],[1,3],[2,3],[2,0],[3,0]],"arcs":[],"forbidden":[]}"#,
    );
    let out = dcdc(&["reduce", &m, "--u", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let list: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(list.len(), 2);
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(dcdc(&["export-dot", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(dcdc(&["reduce"]).status.code(), Some(2));
    let dir = workdir("bad");
    let not_cubic = write(&dir, "p.json", br#"{"vertices":[0,1],"edges":[[0,1]]}"#);
    assert_eq!(dcdc(&["eardecomp", &not_cubic]).status.code(), Some(2));
}

use std::process::Command;

fn beamsel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beamsel"))
}

#[test]
fn gen_scene_and_map_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let st = beamsel().args(["gen-scene", "--profile", "paper", "--seed", "9", "--out", out]).status().unwrap();
    assert!(st.success());
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["data"]["master_seed"], 9);
    assert_eq!(cfg["profile"], "paper");
    let st = beamsel()
        .args(["map", "--device", "F", "--n-fib", "25", "--az-steps", "8", "--el-steps", "4", "--out", out])
        .status()
        .unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(dir.path().join("map/F_n25_regions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 32);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = |args: &[&str]| beamsel().args(args).output().unwrap().status.code();
    assert_eq!(code(&["train", "--profile", "lab", "--out", out]), Some(2));
    assert_eq!(code(&["train", "--out", out]), Some(2));
    assert_eq!(code(&["eval", "--mismatch", "EF-F", "--out", out]), Some(2));
    assert_eq!(code(&["train", "--config", dir.path().join("none.json").to_str().unwrap()]), Some(3));
    std::fs::write(dir.path().join("bad.json"), "{").unwrap();
    assert_eq!(code(&["train", "--config", dir.path().join("bad.json").to_str().unwrap()]), Some(2));
    assert_eq!(code(&["map", "--device", "G", "--out", out]), Some(2));
}

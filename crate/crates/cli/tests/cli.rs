use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thickembed"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn domain_pipeline() {
    let d = scratch("cube.json");
    let m = scratch("cube_map.json");
    let p = scratch("cube_part.json");
    let ds = d.to_str().unwrap();
    assert!(
        run(&["voxelize", "--shape", "cube", "--size", "1.5", "--out", ds])
            .status
            .success()
    );
    let info = json(&run(&["info", ds]));
    assert_eq!(info["cells"], 27);
    assert_eq!(info["boundary_faces"], 54);
    assert_eq!(info["grid_graph"]["edges"], 54 + 54);

    assert!(run(&["partition", ds, "--out", p.to_str().unwrap()])
        .status
        .success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert!(report["cost_ratio"].as_f64().unwrap() > 0.0);

    let summary = json(&run(&["embed", ds, "--out", m.to_str().unwrap(), "--lift"]));
    assert_eq!(summary["ok"], true);
    let check = json(&run(&["validate", ds, m.to_str().unwrap()]));
    assert_eq!(check["ok"], true);
}

#[test]
fn dilation_and_winding() {
    let d = json(&run(&[
        "dilation",
        "--matrix",
        "[[2,0,0],[0,3,0],[0,0,0.5]]",
        "--k",
        "2",
    ]));
    assert!((d["dilation"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    assert!(!run(&["dilation", "--matrix", "[[1,0],[0,1]]", "--k", "3"])
        .status
        .success());

    let lp = scratch("square.json");
    std::fs::write(&lp, "[[-1,-1],[1,-1],[1,1],[-1,1]]").unwrap();
    let w = json(&run(&[
        "winding",
        "--loop",
        lp.to_str().unwrap(),
        "--point",
        "0.2,-0.3",
    ]));
    assert_eq!(w["winding"], 1);
    assert!(
        !run(&["winding", "--loop", lp.to_str().unwrap(), "--point", "1,0"])
            .status
            .success()
    );
}

#[test]
fn route_and_kbroute() {
    let pts = scratch("pts.json");
    std::fs::write(&pts, "[[0,0],[0,0],[0.5,0]]").unwrap();
    let r = json(&run(&[
        "route",
        "--ball",
        "0,0,4",
        "--points",
        pts.to_str().unwrap(),
        "--capacity",
        "2",
    ]));
    assert_eq!(r["value"], 3);
    assert_eq!(r["paths"][0][0].as_array().unwrap().len(), 2);

    let m = scratch("matching.json");
    std::fs::write(
        &m,
        r#"{"dim": 3, "edges": [[0, 1]], "placements": [[3, 0, 0], [-3, 0, 0]]}"#,
    )
    .unwrap();
    let k = json(&run(&[
        "kbroute",
        "--edges",
        m.to_str().unwrap(),
        "--radius",
        "3",
        "--seed",
        "1",
    ]));
    assert_eq!(k["paths"][0].as_array().unwrap().len(), 4);
    assert_eq!(k["congestion"]["max"], 1);
}

#[test]
fn counterexample_spec_errors() {
    let out = run(&["counterexample", "--N", "2", "--resolution", "0.05"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pitch"));
}

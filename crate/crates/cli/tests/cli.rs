use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use projkit::pipeline::RunReport;
use projkit::projection::ProjectionDump;
use projkit::{Ext, Verdict};
use serde_json::Value;

fn projkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projkit"))
        .args(args)
        .env_remove("PROJKIT_WORKERS")
        .output()
        .expect("run projkit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn t23(dir: &Path, trunc: &str) -> String {
    let d = dir.join("t23");
    let o = projkit(&["generate", "bass_serre", "2", "3", "38", "--truncation", trunc, "--out", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    d.to_str().unwrap().to_string()
}

fn report(path: &Path) -> RunReport {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn params_prints_the_constants() {
    let o = projkit(&["params", "--delta", "1", "--rho", "38"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("R=16 theta=121 K=363 M=3146 L=16132"), "{s}");
    assert!(s.contains("[65536 vs 52796]"), "{s}");

    let o = projkit(&["params", "--delta", "1", "--rho", "37"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("rho_bound"));
}

#[test]
fn generate_rejects_trivial_factors() {
    let dir = tempfile::tempdir().unwrap();
    let o = projkit(&["generate", "bass_serre", "1", "1", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nontrivial"));
}

#[test]
fn generate_cycle_writes_twelve_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let o = projkit(&["generate", "cycle", "12", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let space: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("space.json")).unwrap()).unwrap();
    assert_eq!(space["kind"], "graph");
    assert_eq!(space["vertices"].as_array().unwrap().len(), 12);
    assert_eq!(space["edges"].as_array().unwrap().len(), 12);
}

#[test]
fn pipeline_certifies_t23_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "4");
    let out = dir.path().join("run.json");
    let o = projkit(&["pipeline", "-i", &inst, "--report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("certificate: Z/2 * Z/3"));
    let r = report(&out);
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.replayed_verdict(), r.verdict);
    let again: RunReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(again.replayed_verdict(), r.verdict);
}

#[test]
fn pipeline_halts_on_separation() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "3");
    let fam = Path::new(&inst).join("family.json");
    let mut spec: Value = serde_json::from_str(&fs::read_to_string(&fam).unwrap()).unwrap();
    spec["rho"] = 40.into();
    fs::write(&fam, spec.to_string()).unwrap();
    let out = dir.path().join("run.json");
    let o = projkit(&["pipeline", "-i", &inst, "--report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r.halted.as_deref(), Some("family"));
    assert!(r.section("axioms").is_none());
}

/// Sections minus their timings.
fn verdict_table(r: &RunReport) -> Vec<(String, Vec<(String, Verdict, u64, u64)>)> {
    r.sections
        .iter()
        .map(|s| {
            let reps = s
                .reports
                .iter()
                .map(|x| (x.check.clone(), x.verdict, x.checked, x.violations))
                .collect();
            (s.name.clone(), reps)
        })
        .collect()
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "4");
    let run = |w: &str| {
        let out = dir.path().join(format!("run{w}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_projkit"))
            .args(["pipeline", "-i", &inst, "--report", out.to_str().unwrap()])
            .env("PROJKIT_WORKERS", w)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        report(&out)
    };
    let (a, b) = (run("1"), run("4"));
    assert_eq!(verdict_table(&a), verdict_table(&b));
    let witnesses = |r: &RunReport| r.sections.iter().flat_map(|s| s.reports.clone()).map(|x| x.witnesses).collect::<Vec<_>>();
    assert_eq!(witnesses(&a), witnesses(&b));
}

#[test]
fn injected_strong_axiom_violation_replays() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "4");
    let dump_path = dir.path().join("d.json");
    let o = projkit(&["project", "-i", &inst, "-o", dump_path.to_str().unwrap()]);
    assert!(o.status.success());
    let mut dump: ProjectionDump = serde_json::from_str(&fs::read_to_string(&dump_path).unwrap()).unwrap();
    let ix = |l: &str| dump.apices.iter().position(|a| a.label == l).unwrap();
    // K[e] and K[h1] sit on different branches at H[e], so d_H[e] between
    // them is large; perturbing d_K[e](K[h1], H[k1]) breaks the strong axiom
    let (y, z, w) = (ix("K[e]"), ix("K[h1]"), ix("H[k1]"));
    dump.overrides.push((y, z, w, Ext::Fin(999)));
    fs::write(&dump_path, serde_json::to_string(&dump).unwrap()).unwrap();

    let rep_path = dir.path().join("ax.json");
    let o = projkit(&[
        "check-axioms",
        "--data",
        dump_path.to_str().unwrap(),
        "--strong",
        "--report",
        rep_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&rep_path);
    let strong = r.report("P2+").unwrap();
    assert_eq!(strong.verdict, Verdict::Fail);
    assert!(strong.witnesses.iter().any(|x| x.indices[1] == y));

    let o = projkit(&[
        "check-axioms",
        "--data",
        dump_path.to_str().unwrap(),
        "--replay",
        rep_path.to_str().unwrap(),
        "--window-radius",
        "0",
        "--json",
    ]);
    let again: RunReport = serde_json::from_str(&stdout(&o)).unwrap();
    let rep = again.report("replay").unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.checked > 0);
}

#[test]
fn windmill_exports_skeletons_and_canoe() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "6");
    let dots = dir.path().join("dots");
    let canoe = dir.path().join("canoe.json");
    let o = projkit(&[
        "windmill",
        "-i",
        &inst,
        "--stages",
        "2",
        "--window",
        "6",
        "--dot-dir",
        dots.to_str().unwrap(),
        "--canoe",
        "K[e]",
        "H[k1.h1.k1]",
        "--canoe-out",
        canoe.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(fs::read_to_string(dots.join("skeleton-1.dot")).unwrap().starts_with("graph skeleton"));
    let o = projkit(&["canoe-validate", "-i", &inst, "--path", canoe.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn classify_reports_each_element() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "6");
    let o = projkit(&["classify", "-i", &inst, "h1", "k2", "h1.k1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: RunReport = serde_json::from_str(&stdout(&o)).unwrap();
    let c = &r.output["classification"];
    assert_eq!(c["h1"]["kind"], "elliptic");
    assert_eq!(c["k2"]["kind"], "elliptic");
    assert_eq!(c["h1.k1"]["kind"], "loxodromic");
}

#[test]
fn export_dot_highlights_a_standard_path() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t23(dir.path(), "4");
    let o = projkit(&["export-dot", "-i", &inst, "complex", "--path", "H[e]", "H[k1.h1.k1]"]);
    assert!(o.status.success());
    let dot = stdout(&o);
    assert!(dot.starts_with("graph {"));
    // four edges on the path H[e] K[e] H[k1] K[k1.h1] H[k1.h1.k1]
    assert_eq!(dot.matches("color=red").count(), 4);
}

#[test]
fn usage_errors_exit_one() {
    let o = projkit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = projkit(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

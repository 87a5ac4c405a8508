//! End-to-end acceptance run: one line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use projkit::axioms::{check_all, check_p2plus, replay, P2_PLUS};
use projkit::complex::{bgi_audit, build_complex, standard_path_suite, tree_canonical_form, ProjectionComplex};
use projkit::constants::{derive_parameters, validate_parameters};
use projkit::family::{check_spinning, rotation_bound, spinning_bound_audit, RotatingFamily, DEFAULT_WORD_BOUND};
use projkit::instance::{Instance, Loaded};
use projkit::metric::BassSerreSpace;
use projkit::pipeline::{instance_parameters, rotating_family, run_pipeline, PipelineOptions};
use projkit::projection::{build_projection_data, ProjectionData, Window};
use projkit::windmill::{certify_free_product, classify_element, run_windmill, Classification, Skeleton};
use projkit::{Ext, Verdict};
use serde_json::json;

type Outcome = Result<String, String>;

struct T23 {
    loaded: Loaded,
    fam: RotatingFamily,
    data: Arc<ProjectionData>,
    pc: ProjectionComplex,
}

impl T23 {
    fn new(trunc: u32) -> T23 {
        let loaded = Instance::bass_serre(2, 3, 38, trunc).unwrap().load().unwrap();
        let p = instance_parameters(&loaded).unwrap().params;
        let fam = rotating_family(&loaded, &p).unwrap();
        let data = Arc::new(build_projection_data(&fam.family, p.theta));
        let pc = build_complex(data.clone(), p.k, Window::all(&data)).unwrap();
        T23 { loaded, fam, data, pc }
    }

    fn base(&self) -> usize {
        self.loaded.base
    }

    fn window(&self, radius: usize) -> Window {
        Window::p_ball(&self.data, self.base(), radius, self.pc.k)
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() < limit, format!("took {:?}, target {limit:?}", t.elapsed()))
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let p = derive_parameters(1, 38).map_err(|e| e.to_string())?;
    ensure(
        (p.r, p.theta, p.k, p.m, p.l) == (16, 121, 363, 3146, 16132),
        format!("got R={} θ={} K={} M={} L={}", p.r, p.theta, p.k, p.m, p.l),
    )?;
    let ledger = validate_parameters(&p);
    ensure(ledger.verdict == Verdict::Pass, "ledger has a failing line")?;
    let line = ledger.line("sufficient_check").ok_or("no sufficient_check line")?;
    // 2^(16/1) and 4·13199·1 as printed in the source
    ensure(line.lhs == "65536" && line.rhs == "52796", format!("{} vs {}", line.lhs, line.rhs))?;
    ensure(line.verdict == Verdict::Pass, "65536 > 52796 not reproduced")?;
    within(t, Duration::from_secs(1))?;
    Ok(format!("R=16 θ=121 K=363 M=3146 L=16132; 65536 > 52796 ({:?})", t.elapsed()))
}

fn criterion_2(t23: &T23) -> Outcome {
    let t = Instant::now();
    let w = t23.window(6);
    let reps = check_all(&t23.data, Some(t23.loaded.space.graph()), &w, true);
    let mut parts = Vec::new();
    for r in &reps {
        ensure(
            r.verdict == Verdict::Pass && r.violations == 0 && r.skipped == 0,
            r.summary_line(),
        )?;
        parts.push(format!("{} {}", r.check, r.checked));
    }
    ensure(reps.len() == 4, "expected P1, P2, P3, P2+")?;
    within(t, Duration::from_secs(120))?;
    Ok(format!("{} apices in window; checked {} ({:?})", w.len(), parts.join(", "), t.elapsed()))
}

fn bipartite_colors(labels: &[String]) -> Vec<u8> {
    labels.iter().map(|l| u8::from(l.starts_with('K'))).collect()
}

fn criterion_3(t23: &T23, trunc: u32) -> Outcome {
    let t = Instant::now();
    // oracle: the plain Bass-Serre tree at the same truncation
    let tree = BassSerreSpace::new(2, 3, 1, trunc).map_err(|e| e.to_string())?;
    let g = tree.graph();
    let adj: Vec<Vec<usize>> = (0..g.len()).map(|p| g.neighbors(p).to_vec()).collect();
    let verts: Vec<usize> = (0..g.len()).collect();
    let want = tree_canonical_form(&adj, &bipartite_colors(g.labels()), &verts).ok_or("oracle is not a tree")?;
    let got = tree_canonical_form(t23.pc.adjacency(), &bipartite_colors(&t23.data.labels), t23.pc.vertices())
        .ok_or("P is not a tree")?;
    ensure(got == want, "canonical forms differ")?;
    within(t, Duration::from_secs(30))?;
    Ok(format!("P ≅ tree on {} vertices ({:?})", g.len(), t.elapsed()))
}

fn criterion_4(t23: &T23) -> Outcome {
    let w = t23.window(6);
    let local = ProjectionComplex::unchecked(t23.data.clone(), t23.pc.k, w.clone());
    let reps = standard_path_suite(&local).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for r in &reps {
        ensure(r.violations == 0 && r.verdict == Verdict::Pass, r.summary_line())?;
        if r.check == "tripod" {
            let ex = &r.stamps["max_exceptional"];
            ensure(*ex == json!(0), format!("tripod has up to {ex} exceptional vertices"))?;
        }
        parts.push(format!("{} {}", r.check, r.checked));
    }
    Ok(format!("{} apices; {}", w.len(), parts.join(", ")))
}

fn criterion_5(t23: &T23) -> Outcome {
    let w = t23.window(6);
    let local = ProjectionComplex::unchecked(t23.data.clone(), t23.pc.k, w.clone());
    let r = bgi_audit(&local, &w.members, 6);
    ensure(r.verdict == Verdict::Pass, r.summary_line())?;
    ensure(r.stamps["M"] == json!(3146), "M stamp")?;
    let max = &r.stamps["max_observed"];
    Ok(format!(
        "max observed {} ≤ M = 3146 over {} geodesic prefixes; within θ: {}",
        max, r.checked, r.stamps["max_within_theta"]
    ))
}

fn criterion_6(t23: &T23) -> Outcome {
    let w = t23.window(6);
    let r = check_spinning(&t23.fam, &t23.data, 16132, &w, DEFAULT_WORD_BOUND);
    ensure(r.verdict == Verdict::Pass, r.summary_line())?;
    ensure(r.stamps["min_observed"] == json!(Ext::Inf), format!("min observed {}", r.stamps["min_observed"]))?;
    let b = spinning_bound_audit(&t23.fam, &t23.data, &w);
    ensure(rotation_bound(16, 1) == 16374, "rotation bound")?;
    ensure(b.verdict == Verdict::Pass, b.summary_line())?;
    Ok(format!("min d_a(b, gb) = ∞ ≥ 16132 over {} triples; 16374 also met", r.checked))
}

fn criterion_7(t23: &T23) -> Outcome {
    let t = Instant::now();
    let wm = run_windmill(&t23.pc, &t23.fam, t23.base(), 2, 8).map_err(|e| e.to_string())?;
    ensure(wm.truncated.is_none(), format!("truncated: {:?}", wm.truncated))?;
    let cert = certify_free_product(&wm).map_err(|e| e.to_string())?;
    ensure(cert.stages.len() == 2, "two stages of evidence")?;
    for ev in &cert.stages {
        ensure(ev.skeleton.is_tree, format!("stage {} skeleton is not a tree", ev.stage))?;
        ensure(
            matches!(ev.edge_stabilizers.verdict, Verdict::Pass | Verdict::Vacuous),
            ev.edge_stabilizers.summary_line(),
        )?;
    }
    let names: BTreeSet<String> = cert.factor_names().into_iter().collect();
    ensure(
        names == BTreeSet::from(["Z/2".to_string(), "Z/3".to_string()]),
        format!("factors {names:?}"),
    )?;
    let cv = &cert.cross_validation;
    let words = cv.stamps["words"].as_u64().unwrap_or(0);
    ensure(cv.verdict == Verdict::Pass && cv.violations == 0, cv.summary_line())?;
    ensure(words >= 100, format!("only {words} words"))?;
    within(t, Duration::from_secs(300))?;
    let stabs: Vec<String> = cert.stages.iter().map(|e| e.edge_stabilizers.verdict.to_string()).collect();
    Ok(format!(
        "{} on {} apices; skeleton trees at both stages, edge stabilizers {}; {} words, 0 collisions ({:?})",
        cert.product(),
        wm.window.len(),
        stabs.join("/"),
        words,
        t.elapsed()
    ))
}

fn criterion_8(t23: &T23) -> Outcome {
    let wm = run_windmill(&t23.pc, &t23.fam, t23.base(), 2, 8).map_err(|e| e.to_string())?;
    let act = &t23.fam.action;
    for gen in ["h1", "k1", "k2"] {
        let g = act.parse(gen).map_err(|e| e.to_string())?;
        let c = classify_element(&wm, &g, 8, DEFAULT_WORD_BOUND);
        ensure(matches!(c, Classification::Elliptic { .. }), format!("{gen}: {c:?}"))?;
    }
    let g = act.parse("h1.k1").map_err(|e| e.to_string())?;
    let Classification::Loxodromic { orbit } = classify_element(&wm, &g, 8, DEFAULT_WORD_BOUND) else {
        return Err("hk is not loxodromic".into());
    };
    ensure(orbit.len() == 8, "orbit rows for n = 1..8")?;
    let mut p_rows = 0;
    for row in &orbit {
        let d = row.space_distance.ok_or(format!("n={} has no space distance", row.n))?;
        ensure(d >= 2 * (row.n as u64 - 1), format!("n={}: d = {d}", row.n))?;
        if let (Some(dp), Some(m)) = (row.p_distance, row.skeleton_distance) {
            ensure(4 * dp + 2 >= m, format!("n={}: d_P = {dp}, m = {m}", row.n))?;
            p_rows += 1;
        }
    }
    ensure(p_rows > 0, "no orbit point stayed in the window")?;
    Ok(format!(
        "h, k elliptic; hk loxodromic, space bound for n ≤ 8, d_P ≥ (m-2)/4 on the {p_rows} orbit points inside the window"
    ))
}

fn criterion_9(t23: &T23) -> Outcome {
    // injected strong-axiom violation
    let mut data = (*t23.data).clone();
    let ix = |l: &str| data.index_of(l).unwrap();
    let (y, z, w) = (ix("K[e]"), ix("K[h1]"), ix("H[k1]"));
    data.override_distance(y, z, w, Ext::Fin(999));
    let win = Window::all(&data);
    let r = check_p2plus(&data, &win);
    ensure(r.verdict == Verdict::Fail, "injected violation missed")?;
    let wit = r.witnesses.first().ok_or("no witness")?;
    let again = replay(&data, P2_PLUS, wit, None).map_err(|e| e.to_string())?;
    ensure(again == wit.values, "witness does not replay")?;

    // merged translates
    let wm = run_windmill(&t23.pc, &t23.fam, t23.base(), 1, 6).map_err(|e| e.to_string())?;
    let mut cover: Vec<BTreeSet<usize>> = wm.stages[1].translates.iter().map(|t| t.members()).collect();
    let (a, b) = (0..cover.len())
        .flat_map(|i| (i + 1..cover.len()).map(move |j| (i, j)))
        .find(|&(i, j)| !cover[i].is_disjoint(&cover[j]))
        .ok_or("no overlapping translates")?;
    let extra = cover[b].clone();
    cover[a].extend(extra);
    let cert = Skeleton::from_cover(&cover).certificate();
    ensure(!cert.is_tree, "merged cover still certified as a tree")?;

    // separation below the bound
    let err = derive_parameters(1, 37).err().ok_or("ρ = 37 accepted")?;
    ensure(err.to_string().contains("rho_bound"), err.to_string())?;
    Ok(format!(
        "P2+ injection caught and replayed; merged cover has overlap {}; ρ=37 rejected",
        cert.max_overlap
    ))
}

fn criterion_10() -> Outcome {
    let loaded = Instance::bass_serre(2, 2, 38, 8).unwrap().load().unwrap();
    let opts = PipelineOptions {
        stages: 2,
        radius: 6,
        axiom_radius: 6,
        word_bound: DEFAULT_WORD_BOUND,
    };
    let rr = run_pipeline(&loaded, &opts);
    let bad: Vec<String> = rr
        .sections
        .iter()
        .flat_map(|s| &s.reports)
        .filter(|r| !matches!(r.verdict, Verdict::Pass | Verdict::Vacuous))
        .map(|r| r.summary_line())
        .collect();
    ensure(bad.is_empty() && rr.halted.is_none(), bad.join("; "))?;
    let cert = rr.certificate.as_ref().ok_or("no certificate")?;
    ensure(cert.product() == "Z/2 * Z/2", cert.product())?;
    ensure(cert.stages.iter().all(|e| e.skeleton.line_shaped), "skeleton not line-shaped")?;
    Ok(format!("{} with line-shaped skeletons; all audits pass", cert.product()))
}

fn main() {
    let t = Instant::now();
    let t23_6 = T23::new(6);
    let t23_8 = T23::new(8);
    let results: BTreeMap<u32, Outcome> = BTreeMap::from([
        (1, criterion_1()),
        (2, criterion_2(&t23_8)),
        (3, criterion_3(&t23_6, 6)),
        (4, criterion_4(&t23_8)),
        (5, criterion_5(&t23_8)),
        (6, criterion_6(&t23_8)),
        (7, criterion_7(&t23_8)),
        (8, criterion_8(&t23_8)),
        (9, criterion_9(&t23_6)),
        (10, criterion_10()),
    ]);
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n:>2}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {msg}");
            }
        }
    }
    println!("acceptance: {} of {} criteria pass ({:?})", results.len() - failed, results.len(), t.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

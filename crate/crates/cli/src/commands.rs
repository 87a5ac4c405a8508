use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use projkit::axioms::{check_all, replay};
use projkit::canoe::{distance_lower_bound, endpoints_audit, validate_canoe, CanoePath, CanoePathFile};
use projkit::complex::{bgi_audit, build_complex, dist4_audit_all, qg_audit, standard_path_suite, ProjectionComplex};
use projkit::constants::{delta_log2_delta, derive_parameters, validate_parameters, ParameterSet};
use projkit::instance::{Instance, ACTION_FILE, FAMILY_FILE, SPACE_FILE};
use projkit::pipeline::{
    certificate_report, complex_report, ledger_report, run_pipeline, windmill_reports, PipelineOptions, RunReport,
    Section,
};
use projkit::projection::{diam_audit, ProjectionData, Window};
use projkit::windmill::{canoe_between, certify_free_product, classify_element, run_windmill, Classification, Windmill};
use projkit::{Report, Verdict};
use serde_json::json;

use crate::context::{Context, Source};
use crate::{DotKind, Outcome};

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn generate(kind: &str, params: &[u64], out: &Path, truncation: u32, subdivision: usize) -> Result<Outcome> {
    let started = Instant::now();
    let want = |n: usize, usage: &str| -> Result<()> {
        if params.len() != n {
            bail!("generate {kind} takes {usage}");
        }
        Ok(())
    };
    let inst = match kind {
        "bass_serre" | "bass-serre" => {
            want(3, "H K S (factor orders and subdivision)")?;
            Instance::bass_serre(params[0] as u32, params[1] as u32, params[2] as u32, truncation)?
        }
        "cycle" => {
            want(1, "N")?;
            Instance::cycle(params[0] as usize, subdivision)?
        }
        "grid" => {
            want(2, "W H")?;
            Instance::grid(params[0] as usize, params[1] as usize, subdivision)?
        }
        "tree" => {
            want(2, "ARITY DEPTH")?;
            Instance::tree(params[0] as usize, params[1] as usize, subdivision)?
        }
        other => bail!("unknown instance kind {other:?}; expected bass_serre, cycle, grid or tree"),
    };
    inst.write(out)?;
    let files: Vec<String> = [SPACE_FILE, ACTION_FILE, FAMILY_FILE]
        .iter()
        .map(|f| out.join(f).display().to_string())
        .collect();
    let mut rep = RunReport::new("generate");
    rep.output.insert("files".into(), json!(files));
    let mut written = Report::new("generate").stamp("files", &files);
    written.checked = files.len() as u64;
    rep.push(Section::new("generate", vec![written.finish()], started));
    let text = files.iter().map(|f| format!("wrote {f}")).collect();
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn params(delta: u64, rho: u64, r: Option<u64>, theta: Option<u64>) -> Result<Outcome> {
    let started = Instant::now();
    let mut rep = RunReport::new("params");
    let mut text = Vec::new();
    let d = delta.max(1);
    let theta = theta.unwrap_or(121 * d);
    let r = r.unwrap_or_else(|| delta_log2_delta(d).0 + 16 * d);
    let mut p = ParameterSet::from_core(delta, rho, r, theta, 3 * theta);
    if let Err(e) = derive_parameters(delta, rho) {
        text.push(format!("derive_parameters: {e}"));
        p.notes.push(e.to_string());
    }
    let ledger = validate_parameters(&p);
    text.push(format!(
        "delta={} rho={} R={} theta={} K={} M={} L={} C={} spin_bound={}",
        p.delta, p.rho, p.r, p.theta, p.k, p.m, p.l, p.c, p.spin_bound
    ));
    for l in &ledger.lines {
        text.push(format!("  {:<28} {:<8} {}  [{} vs {}]", l.name, l.verdict, l.statement, l.lhs, l.rhs));
    }
    rep.params = Some(p);
    rep.push(Section::new("parameters", vec![ledger_report(&ledger)], started));
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn project(src: &Source, out: Option<&Path>) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("project");
    rep.params = Some(ctx.params.clone());
    let mut text = Vec::new();
    if let Some(path) = out {
        write(path, &serde_json::to_string_pretty(&ctx.data.to_dump())?)?;
        text.push(format!("wrote {}", path.display()));
    }
    let t = Instant::now();
    let mut audit = diam_audit(&ctx.data, &Window::all(&ctx.data));
    audit.set_stamp("apices", ctx.data.len());
    audit.set_stamp("empty_projections", ctx.data.empty_projection_count());
    rep.push(Section::new("projection", vec![audit], t));
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn check_axioms(
    src: &Source,
    data: Option<&Path>,
    radius: Option<usize>,
    strong: bool,
    replay_from: Option<&Path>,
) -> Result<Outcome> {
    let started = Instant::now();
    let mut rep = RunReport::new("check-axioms");
    let ctx;
    let (data, space, base, k) = match data {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut d = ProjectionData::from_dump(serde_json::from_str(&text)?)?;
            if let Some(t) = src.theta {
                d = d.with_theta(t);
            }
            let base = match &src.base {
                Some(l) => d.index_of(l)?,
                None => 0,
            };
            let k = 3 * d.theta;
            (Arc::new(d), None, base, k)
        }
        None => {
            ctx = Context::new(src)?;
            rep.params = Some(ctx.params.clone());
            (ctx.data.clone(), Some(ctx.loaded.space.graph()), ctx.base(), ctx.params.k)
        }
    };
    let window = match radius {
        Some(r) => Window::p_ball(&data, base, r, k),
        None => Window::all(&data),
    };
    rep.windows.insert("axioms".into(), window.description.clone());
    let t = Instant::now();
    rep.push(Section::new("axioms", check_all(&data, space, &window, strong), t));
    if let Some(path) = replay_from {
        let t = Instant::now();
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let old: RunReport = serde_json::from_str(&text)?;
        let mut check = Report::new("replay");
        for r in old.sections.iter().flat_map(|s| &s.reports) {
            for w in &r.witnesses {
                let Ok(values) = replay(&data, &r.check, w, space) else {
                    check.skipped += 1;
                    continue;
                };
                check.checked += 1;
                if values != w.values {
                    let mut w2 = w.clone();
                    w2.detail = format!("{}: stored {:?}, recomputed {:?}", r.check, w.values, values);
                    w2.values = values;
                    check.violation(w2);
                }
            }
        }
        check.set_stamp("replayed_verdict", old.replayed_verdict());
        check.set_stamp("stored_verdict", old.verdict);
        if old.replayed_verdict() != old.verdict {
            check.violations += 1;
            check.note("stored verdict differs from the one its reports imply");
        }
        rep.push(Section::new("replay", vec![check.finish()], t));
    }
    Ok(Outcome::new(rep.finish(started), Vec::new()))
}

fn complex(ctx: &Context, k: Option<u64>, radius: Option<usize>) -> Result<ProjectionComplex> {
    Ok(build_complex(
        ctx.data.clone(),
        k.unwrap_or(ctx.params.k),
        ctx.window(radius),
    )?)
}

pub fn build_pc(src: &Source, k: Option<u64>, radius: Option<usize>, dot: Option<&Path>) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("build-pc");
    rep.params = Some(ctx.params.clone());
    let pc = complex(&ctx, k, radius)?;
    rep.windows.insert("complex".into(), pc.window.description.clone());
    let mut text = Vec::new();
    if let Some(path) = dot {
        write(path, &pc.to_dot(&[]))?;
        text.push(format!("wrote {}", path.display()));
    }
    rep.push(Section::new("complex", vec![complex_report(&pc)], started));
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn standard_path(
    src: &Source,
    x: Option<&str>,
    z: Option<&str>,
    radius: Option<usize>,
    suite: bool,
    dot: Option<&Path>,
) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("standard-path");
    rep.params = Some(ctx.params.clone());
    let pc = complex(&ctx, None, radius)?;
    rep.windows.insert("complex".into(), pc.window.description.clone());
    let mut text = Vec::new();
    let mut highlight = Vec::new();
    match (x, z) {
        (Some(x), Some(z)) => {
            let t = Instant::now();
            let (xi, zi) = (ctx.apex(x)?, ctx.apex(z)?);
            let path = pc.standard_path(xi, zi)?;
            let labels = pc.labels(&path.vertices);
            text.push(labels.join(" -> "));
            highlight = path.edges();
            rep.output.insert("path".into(), json!(labels));
            rep.push(Section::new("path", vec![qg_audit(&pc, xi, zi)?], t));
        }
        (None, None) => {}
        _ => bail!("give both endpoints or neither"),
    }
    if suite {
        let t = Instant::now();
        let mut reports = standard_path_suite(&pc)?;
        reports.push(dist4_audit_all(&pc));
        rep.push(Section::new("suite", reports, t));
    }
    if let Some(path) = dot {
        write(path, &pc.to_dot(&highlight))?;
        text.push(format!("wrote {}", path.display()));
    }
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn bgi(src: &Source, radius: Option<usize>, max_len: usize) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("bgi-audit");
    rep.params = Some(ctx.params.clone());
    let pc = complex(&ctx, None, radius)?;
    rep.windows.insert("complex".into(), pc.window.description.clone());
    let t = Instant::now();
    rep.push(Section::new("bgi", vec![bgi_audit(&pc, &pc.window.members, max_len)], t));
    Ok(Outcome::new(rep.finish(started), Vec::new()))
}

pub fn canoe_validate(src: &Source, path: &Path, c: Option<u64>) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("canoe-validate");
    rep.params = Some(ctx.params.clone());
    let pc = complex(&ctx, None, None)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: CanoePathFile = serde_json::from_str(&text)?;
    let canoe = CanoePath::from_file(&pc, &file)?;
    let c = c.unwrap_or(ctx.params.c);
    let t = Instant::now();
    rep.push(Section::new(
        "canoe",
        vec![
            validate_canoe(&pc, &canoe, c),
            endpoints_audit(&pc, &canoe, c),
            distance_lower_bound(&pc, &canoe, c),
        ],
        t,
    ));
    Ok(Outcome::new(rep.finish(started), Vec::new()))
}

fn windmill_for<'a>(
    ctx: &'a Context,
    pc: &'a ProjectionComplex,
    v0: Option<&str>,
    stages: usize,
    radius: usize,
) -> Result<Windmill<'a>> {
    let v0 = match v0 {
        Some(l) => ctx.apex(l)?,
        None => ctx.base(),
    };
    Ok(run_windmill(pc, &ctx.fam, v0, stages, radius)?)
}

pub fn windmill(
    src: &Source,
    v0: Option<&str>,
    stages: usize,
    radius: usize,
    dot_dir: Option<&Path>,
    canoe: Option<&[String]>,
    canoe_out: Option<&Path>,
) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("windmill");
    rep.params = Some(ctx.params.clone());
    let pc = complex(&ctx, None, None)?;
    let t = Instant::now();
    let wm = windmill_for(&ctx, &pc, v0, stages, radius)?;
    rep.windows.insert("windmill".into(), wm.window.description.clone());
    rep.push(Section::new("windmill", windmill_reports(&wm), t));
    let mut text = Vec::new();
    for s in &wm.stages {
        text.push(format!(
            "stage {}: |W| = {}, |N| = {}, {} translates, orbit reps {:?}",
            s.k,
            s.w.len(),
            s.n.len(),
            s.translates.len(),
            wm.labels(&s.orbit_reps)
        ));
    }
    if let Some(dir) = dot_dir {
        fs::create_dir_all(dir)?;
        for s in &wm.stages {
            if let Some(sk) = &s.skeleton {
                let path = dir.join(format!("skeleton-{}.dot", s.k));
                write(&path, &sk.to_dot(&pc.data.labels))?;
                text.push(format!("wrote {}", path.display()));
            }
        }
    }
    if stages > 0 {
        let t = Instant::now();
        match certify_free_product(&wm) {
            Ok(cert) => {
                text.push(format!("certificate: {}", cert.product()));
                rep.push(Section::new("certificate", vec![certificate_report(&cert)], t));
                rep.certificate = Some(cert);
            }
            Err(e) => rep.halt(Section::new(
                "certificate",
                vec![projkit::pipeline::error_report("certificate", &e)],
                t,
            )),
        }
    }
    if let Some(ends) = canoe {
        let t = Instant::now();
        let (x, y) = (ctx.apex(&ends[0])?, ctx.apex(&ends[1])?);
        let path = canoe_between(&wm, x, y, ctx.params.c)?;
        let file = path.to_file(&pc);
        if let Some(out) = canoe_out {
            write(out, &serde_json::to_string_pretty(&file)?)?;
            text.push(format!("wrote {}", out.display()));
        }
        rep.output.insert("canoe".into(), serde_json::to_value(&file)?);
        rep.push(Section::new("canoe", vec![validate_canoe(&pc, &path, ctx.params.c)], t));
    }
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn classify(
    src: &Source,
    elements: &[String],
    n_max: u32,
    stages: usize,
    radius: usize,
    word_bound: usize,
) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("classify");
    rep.params = Some(ctx.params.clone());
    let pc = complex(&ctx, None, None)?;
    let wm = windmill_for(&ctx, &pc, None, stages, radius)?;
    rep.windows.insert("windmill".into(), wm.window.description.clone());
    let t = Instant::now();
    let mut reports = Vec::new();
    let mut text = Vec::new();
    let mut results = serde_json::Map::new();
    for e in elements {
        let g = ctx.fam.action.parse(e)?;
        let c = classify_element(&wm, &g, n_max, word_bound);
        let mut r = Report::new(format!("classify {e}"));
        r.checked = 1;
        let line = match &c {
            Classification::Elliptic { apex, conjugator } => {
                format!("{e}: elliptic, fixes {conjugator} . {apex}")
            }
            Classification::Loxodromic { orbit } => format!("{e}: loxodromic ({} orbit rows)", orbit.len()),
            Classification::Unresolved { reason, .. } => {
                r.verdict = Verdict::Partial;
                r.note(reason.clone());
                format!("{e}: unresolved, {reason}")
            }
        };
        r.set_stamp("classification", &c);
        text.push(line);
        results.insert(e.clone(), serde_json::to_value(&c)?);
        reports.push(r.finish());
    }
    rep.output.insert("classification".into(), serde_json::Value::Object(results));
    rep.push(Section::new("classify", reports, t));
    Ok(Outcome::new(rep.finish(started), text))
}

pub fn pipeline(src: &Source, opts: PipelineOptions) -> Result<Outcome> {
    let loaded = src.load()?;
    let rep = run_pipeline(&loaded, &opts);
    let mut text = Vec::new();
    if let Some(c) = &rep.certificate {
        text.push(format!("certificate: {}", c.product()));
    }
    Ok(Outcome::new(rep, text))
}

fn space_dot(ctx: &Context) -> String {
    let g = ctx.loaded.space.graph();
    let mut s = String::from("graph space {\n");
    for p in 0..g.len() {
        let shape = if ctx.fam.apex_index(p).is_some() { "doublecircle" } else { "point" };
        s.push_str(&format!("  {p} [label=\"{}\", shape={shape}];\n", g.label(p)));
    }
    for (u, v) in g.edges() {
        s.push_str(&format!("  {u} -- {v};\n"));
    }
    s.push_str("}\n");
    s
}

pub fn export_dot(
    src: &Source,
    what: DotKind,
    out: Option<&Path>,
    radius: Option<usize>,
    path: Option<&[String]>,
    stage: usize,
    window: usize,
) -> Result<Outcome> {
    let started = Instant::now();
    let ctx = Context::new(src)?;
    let mut rep = RunReport::new("export-dot");
    rep.params = Some(ctx.params.clone());
    let dot = match what {
        DotKind::Space => space_dot(&ctx),
        DotKind::Complex => {
            let pc = complex(&ctx, None, radius)?;
            let highlight = match path {
                Some(ends) => pc.standard_path(ctx.apex(&ends[0])?, ctx.apex(&ends[1])?)?.edges(),
                None => Vec::new(),
            };
            pc.to_dot(&highlight)
        }
        DotKind::Skeleton => {
            let pc = complex(&ctx, None, None)?;
            let wm = windmill_for(&ctx, &pc, None, stage, window)?;
            let Some(sk) = wm.stages.get(stage).and_then(|s| s.skeleton.as_ref()) else {
                bail!("no skeleton at stage {stage}");
            };
            sk.to_dot(&pc.data.labels)
        }
    };
    let mut outcome = Outcome::new(rep.finish(started), Vec::new());
    match out {
        Some(p) => {
            write(p, &dot)?;
            outcome.text.push(format!("wrote {}", p.display()));
        }
        None => outcome.raw = Some(dot),
    }
    Ok(outcome)
}

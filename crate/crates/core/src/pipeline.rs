//! End-to-end run from instance files to the free-product certificate,
//! and the machine-readable run report shared with the command line.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::axioms::check_all;
use crate::complex::{bgi_audit, build_complex, standard_path_suite, ProjectionComplex};
use crate::constants::{delta_log2_delta, validate_parameters, ParameterLedger, ParameterSet};
use crate::error::{Error, Result};
use crate::family::{
    check_spinning, check_very_rotating, projection_equivariance_audit, spinning_bound_audit, RotatingFamily,
    DEFAULT_WORD_BOUND,
};
use crate::instance::Loaded;
use crate::projection::{build_projection_data, diam_audit, ApexFamily, ProjectionData, Window};
use crate::report::{Report, Verdict, Witness};
use crate::windmill::{certify_free_product, run_windmill, FreeProductCertificate, Windmill};

/// Geodesic length bound for the bounded geodesic image audit.
pub const BGI_MAX_LENGTH: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub stages: usize,
    /// P-radius of the windmill window around the base.
    pub radius: usize,
    /// P-radius of the window the axiom and spinning checks quantify over.
    pub axiom_radius: usize,
    pub word_bound: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            stages: 2,
            radius: 6,
            axiom_radius: 6,
            word_bound: DEFAULT_WORD_BOUND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub verdict: Verdict,
    pub reports: Vec<Report>,
    pub elapsed_ms: u64,
}

impl Section {
    pub fn new(name: &str, reports: Vec<Report>, started: Instant) -> Section {
        Section {
            name: name.into(),
            verdict: Verdict::combine(reports.iter().map(|r| r.verdict)),
            reports,
            elapsed_ms: started.elapsed().as_millis() as u64,
        }
    }
}

/// Everything one command produced. Verdicts are recomputable from the
/// embedded reports alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParameterSet>,
    pub windows: BTreeMap<String, String>,
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<FreeProductCertificate>,
    /// Extra command output (paths, classifications, skeletons ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub output: BTreeMap<String, Value>,
    /// Name of the section a hard failure stopped the run in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted: Option<String>,
    pub verdict: Verdict,
    pub elapsed_ms: u64,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> RunReport {
        RunReport {
            command: command.into(),
            params: None,
            windows: BTreeMap::new(),
            sections: Vec::new(),
            certificate: None,
            output: BTreeMap::new(),
            halted: None,
            verdict: Verdict::Vacuous,
            elapsed_ms: 0,
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn halt(&mut self, section: Section) {
        self.halted = Some(section.name.clone());
        self.sections.push(section);
    }

    /// The overall verdict derived from the sections' reports.
    pub fn replayed_verdict(&self) -> Verdict {
        if self.halted.is_some() {
            return Verdict::Fail;
        }
        Verdict::combine(
            self.sections
                .iter()
                .map(|s| Verdict::combine(s.reports.iter().map(|r| r.verdict))),
        )
    }

    pub fn finish(mut self, started: Instant) -> RunReport {
        self.verdict = self.replayed_verdict();
        self.elapsed_ms = started.elapsed().as_millis() as u64;
        self
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn report(&self, check: &str) -> Option<&Report> {
        self.sections.iter().flat_map(|s| &s.reports).find(|r| r.check == check)
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// A single failed report carrying an error message.
pub fn error_report(check: &str, err: &Error) -> Report {
    let mut rep = Report::new(check);
    rep.checked = 1;
    rep.violation(Witness {
        indices: Vec::new(),
        labels: Vec::new(),
        values: Vec::new(),
        detail: err.to_string(),
    });
    rep.finish()
}

pub fn ledger_report(ledger: &ParameterLedger) -> Report {
    let mut rep = Report::new("parameters");
    for l in &ledger.lines {
        rep.checked += 1;
        if l.verdict == Verdict::Fail {
            rep.violation(Witness {
                indices: Vec::new(),
                labels: vec![l.name.clone()],
                values: Vec::new(),
                detail: format!("{}: lhs {} vs rhs {}", l.statement, l.lhs, l.rhs),
            });
        }
    }
    rep.notes.extend(ledger.params.notes.iter().cloned());
    rep.set_stamp("ledger", &ledger.lines);
    rep.finish()
}

/// The constants for an instance: declared `R` and `θ` when present,
/// otherwise the standard choice `θ = 121δ`, `K = 3θ`,
/// `R = ⌊δ log₂ δ⌋ + 16δ`. The separation defaults to the measured one.
pub fn instance_parameters(loaded: &Loaded) -> Result<ParameterLedger> {
    let delta = loaded.delta()?.max(1);
    let rho = match loaded.spec.family.rho {
        Some(r) => r,
        None => measured_separation(loaded).unwrap_or_else(|| {
            // a single apex imposes no separation; take the least admissible value
            let (dlog, _) = delta_log2_delta(delta);
            2 * dlog + 38 * delta + 1
        }),
    };
    let fam = &loaded.spec.family;
    let theta = fam.theta.unwrap_or(121 * delta);
    let r = fam.r.unwrap_or_else(|| delta_log2_delta(delta).0 + 16 * delta);
    let mut p = ParameterSet::from_core(delta, rho, r, theta, 3 * theta);
    if !delta_log2_delta(delta).1 && fam.r.is_none() {
        p.notes.push(format!("log2({delta}) is irrational; R uses the floor"));
    }
    Ok(validate_parameters(&p))
}

fn measured_separation(loaded: &Loaded) -> Option<u64> {
    ApexFamily {
        space: loaded.space.clone(),
        apices: loaded.apices.clone(),
        rho: 0,
        r: 1,
        delta: 1,
    }
    .separation()
    .map(|s| s.2)
}

/// Validated apex family and rotation subgroups under `p`.
pub fn rotating_family(loaded: &Loaded, p: &ParameterSet) -> Result<RotatingFamily> {
    let fam = ApexFamily::new(loaded.space.clone(), loaded.apices.clone(), p.rho, p.r, p.delta)?;
    match &loaded.generators {
        None => RotatingFamily::with_stabilizers(fam, loaded.action.clone()),
        Some(g) => RotatingFamily::new(fam, loaded.action.clone(), g.clone()),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Instant) {
    let t = Instant::now();
    (f(), t)
}

/// Runs every stage in order and stops at the first hard failure.
pub fn run_pipeline(loaded: &Loaded, opts: &PipelineOptions) -> RunReport {
    let started = Instant::now();
    let mut out = RunReport::new("pipeline");
    out.output.insert("options".into(), serde_json::to_value(opts).unwrap_or(Value::Null));

    let t = Instant::now();
    let ledger = match instance_parameters(loaded) {
        Ok(l) => l,
        Err(e) => {
            out.halt(Section::new("parameters", vec![error_report("parameters", &e)], t));
            return out.finish(started);
        }
    };
    let p = ledger.params.clone();
    out.params = Some(p.clone());
    let sec = Section::new("parameters", vec![ledger_report(&ledger)], t);
    if sec.verdict == Verdict::Fail {
        out.halt(sec);
        return out.finish(started);
    }
    out.push(sec);

    let (fam, t) = timed(|| rotating_family(loaded, &p));
    let fam = match fam {
        Ok(f) => f,
        Err(e) => {
            out.halt(Section::new("family", vec![error_report("family", &e)], t));
            return out.finish(started);
        }
    };
    let mut rep = Report::new("family")
        .stamp("apices", fam.len())
        .stamp("rho", p.rho)
        .stamp("R", p.r)
        .stamp("delta", p.delta)
        .stamp("group_orders", fam.groups.iter().map(Vec::len).collect::<Vec<_>>());
    rep.checked = fam.len() as u64;
    out.push(Section::new("family", vec![rep.finish()], t));

    let t = Instant::now();
    let data = Arc::new(build_projection_data(&fam.family, p.theta));
    let all = Window::all(&data);
    let mut rep = diam_audit(&data, &all);
    rep.set_stamp("empty_projections", data.empty_projection_count());
    out.push(Section::new("projection", vec![rep], t));

    let t = Instant::now();
    let window = Window::p_ball(&data, loaded.base, opts.axiom_radius, p.k);
    out.windows.insert("axioms".into(), window.description.clone());
    let sec = Section::new("axioms", check_all(&data, Some(loaded.space.graph()), &window, true), t);
    let failed = sec.verdict == Verdict::Fail;
    if failed {
        out.halt(sec);
        return out.finish(started);
    }
    out.push(sec);

    let t = Instant::now();
    let (pc, local) = match complexes(&data, p.k, &window) {
        Ok(x) => x,
        Err(e) => {
            out.halt(Section::new("complex", vec![error_report("complex", &e)], t));
            return out.finish(started);
        }
    };
    let mut reports = vec![complex_report(&pc)];
    match standard_path_suite(&local) {
        Ok(rs) => reports.extend(rs),
        Err(e) => reports.push(error_report("standard-paths", &e)),
    }
    reports.push(bgi_audit(&local, &window.members, BGI_MAX_LENGTH));
    let sec = Section::new("complex", reports, t);
    if sec.verdict == Verdict::Fail {
        out.halt(sec);
        return out.finish(started);
    }
    out.push(sec);

    let t = Instant::now();
    let reports = vec![
        check_very_rotating(&fam, &window),
        check_spinning(&fam, &data, p.l, &window, opts.word_bound),
        spinning_bound_audit(&fam, &data, &window),
        projection_equivariance_audit(&fam, &data, &window, opts.word_bound),
    ];
    let sec = Section::new("spinning", reports, t);
    if sec.verdict == Verdict::Fail {
        out.halt(sec);
        return out.finish(started);
    }
    out.push(sec);

    let t = Instant::now();
    let wm = match run_windmill(&pc, &fam, loaded.base, opts.stages, opts.radius) {
        Ok(w) => w,
        Err(e) => {
            out.halt(Section::new("windmill", vec![error_report("windmill", &e)], t));
            return out.finish(started);
        }
    };
    out.windows.insert("windmill".into(), wm.window.description.clone());
    let sec = Section::new("windmill", windmill_reports(&wm), t);
    let failed = sec.verdict == Verdict::Fail;
    out.push(sec);
    if failed {
        out.halted = Some("windmill".into());
        return out.finish(started);
    }

    let t = Instant::now();
    if opts.stages == 0 {
        let mut rep = Report::new("certificate");
        rep.verdict = Verdict::NotApplicable;
        rep.note("no stages beyond W_0 were requested");
        out.push(Section::new("certificate", vec![rep.finish()], t));
        return out.finish(started);
    }
    match certify_free_product(&wm) {
        Ok(cert) => {
            out.push(Section::new("certificate", vec![certificate_report(&cert)], t));
            out.certificate = Some(cert);
        }
        Err(e) => out.halt(Section::new("certificate", vec![error_report("certificate", &e)], t)),
    }
    out.finish(started)
}

/// The complex on every apex, and the one restricted to the audit window.
pub fn complexes(
    data: &Arc<ProjectionData>,
    k: u64,
    window: &Window,
) -> Result<(ProjectionComplex, ProjectionComplex)> {
    let pc = build_complex(data.clone(), k, Window::all(data))?;
    let local = ProjectionComplex::unchecked(data.clone(), k, window.clone());
    Ok((pc, local))
}

pub fn complex_report(pc: &ProjectionComplex) -> Report {
    let dist = pc.distances_from(pc.vertices()[0]);
    let connected = pc.vertices().iter().all(|&v| dist[v] != usize::MAX);
    let mut rep = Report::new("complex")
        .stamp("K", pc.k)
        .stamp("theta", pc.theta())
        .stamp("vertices", pc.vertices().len())
        .stamp("edges", pc.edges().len())
        .stamp("connected", connected);
    rep.checked = 1;
    rep.finish()
}

pub fn windmill_reports(wm: &Windmill<'_>) -> Vec<Report> {
    let mut out = Vec::new();
    for s in &wm.stages {
        let mut rep = Report::new(format!("windmill-stage-{}", s.k))
            .stamp("W", s.w.len())
            .stamp("N", s.n.len())
            .stamp("translates", s.translates.len())
            .stamp("orbit_reps", wm.labels(&s.orbit_reps))
            .stamp("touches_boundary", s.touches_boundary);
        rep.checked = 1;
        if let Some(sk) = &s.skeleton {
            let cert = sk.certificate();
            rep.set_stamp("skeleton", &cert);
            if !cert.is_tree || cert.max_overlap > 1 {
                rep.violation(Witness {
                    indices: vec![s.k],
                    labels: Vec::new(),
                    values: Vec::new(),
                    detail: format!(
                        "skeleton is not a tree: {} components, {} vertices, {} edges, overlap {}",
                        cert.components, cert.vertices, cert.edges, cert.max_overlap
                    ),
                });
            }
        }
        out.push(rep.finish());
    }
    if let Some(t) = &wm.truncated {
        let mut rep = Report::new("windmill-truncation");
        rep.verdict = Verdict::Partial;
        rep.note(t.clone());
        out.push(rep.finish());
    }
    out
}

pub fn certificate_report(cert: &FreeProductCertificate) -> Report {
    let mut rep = Report::new("certificate")
        .stamp("product", cert.product())
        .stamp("factors", cert.factor_names())
        .stamp("window", &cert.window)
        .stamp("cross_validation", cert.cross_validation.verdict);
    rep.checked = cert.stages.len() as u64;
    if let Some(t) = &cert.truncated {
        rep.verdict = Verdict::Partial;
        rep.note(t.clone());
    }
    rep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;

    fn t23(trunc: u32) -> Loaded {
        Instance::bass_serre(2, 3, 38, trunc).unwrap().load().unwrap()
    }

    #[test]
    fn t23_end_to_end() {
        let rr = run_pipeline(&t23(6), &PipelineOptions::default());
        assert_eq!(rr.halted, None, "{:#?}", rr.sections.last());
        assert_eq!(rr.verdict, Verdict::Pass);
        let cert = rr.certificate.as_ref().unwrap();
        let mut names = cert.factor_names();
        names.sort();
        assert_eq!(names, ["Z/2", "Z/3"]);
        let p = rr.params.unwrap();
        assert_eq!((p.r, p.theta, p.k, p.m, p.l), (16, 121, 363, 3146, 16132));
    }

    #[test]
    fn separation_failure_halts_at_family() {
        let mut inst = Instance::bass_serre(2, 3, 38, 4).unwrap();
        // declared separation above the real one
        inst.family.rho = Some(40);
        let rr = run_pipeline(&inst.load().unwrap(), &PipelineOptions::default());
        assert_eq!(rr.halted.as_deref(), Some("family"));
        assert_eq!(rr.verdict, Verdict::Fail);
        assert!(rr.section("projection").is_none());
    }

    #[test]
    fn low_separation_halts_at_parameters() {
        let mut inst = Instance::bass_serre(2, 3, 38, 4).unwrap();
        inst.family.rho = Some(37);
        let rr = run_pipeline(&inst.load().unwrap(), &PipelineOptions::default());
        assert_eq!(rr.halted.as_deref(), Some("parameters"));
        let rep = rr.report("parameters").unwrap();
        assert!(rep.witnesses.iter().any(|w| w.labels == ["rho_bound"]));
    }

    #[test]
    fn zero_stages_reports_w0_only() {
        let opts = PipelineOptions {
            stages: 0,
            ..PipelineOptions::default()
        };
        let rr = run_pipeline(&t23(4), &opts);
        assert_eq!(rr.halted, None);
        let wm = rr.section("windmill").unwrap();
        assert_eq!(wm.reports.len(), 1);
        assert_eq!(wm.reports[0].check, "windmill-stage-0");
        assert!(rr.certificate.is_none());
        assert_eq!(rr.report("certificate").unwrap().verdict, Verdict::NotApplicable);
    }

    #[test]
    fn report_round_trip_keeps_verdicts() {
        let rr = run_pipeline(&t23(4), &PipelineOptions::default());
        let json = serde_json::to_string(&rr).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.verdict, rr.verdict);
        assert_eq!(back.replayed_verdict(), rr.verdict);
        let v = |r: &RunReport| r.sections.iter().map(|s| (s.name.clone(), s.verdict)).collect::<Vec<_>>();
        assert_eq!(v(&back), v(&rr));
    }
}

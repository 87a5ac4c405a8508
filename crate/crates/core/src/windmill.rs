//! Windmills, their skeletons and the free-product certificate.
//!
//! Everything happens inside a P-ball around the base vertex. Translates of
//! a finite `N_{k-1}` are keyed by the exact labels of their points, so two
//! translates coincide iff their keys agree even when parts of them fall
//! outside the finite view.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use petgraph::algo::connected_components;
use petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};

use crate::canoe::{validate_canoe, CanoePath};
use crate::complex::ProjectionComplex;
use crate::error::{Error, Result};
use crate::family::{check_spinning, RotatingFamily, DEFAULT_WORD_BOUND};
use crate::group::{alternating_words, Element};
use crate::projection::{bfs_lists, Window};
use crate::report::{Report, Verdict, Witness};

/// Syllable bound for normal-form cross-validation.
pub const CROSS_CHECK_SYLLABLES: usize = 8;

#[derive(Clone, Debug)]
pub struct Translate {
    pub element: Element,
    /// `(window apex, source in N_{k-1})` with `apex = element · source`.
    pub points: Vec<(usize, usize)>,
    pub key: Vec<String>,
}

impl Translate {
    pub fn members(&self) -> BTreeSet<usize> {
        self.points.iter().map(|p| p.0).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub k: usize,
    pub w: Vec<usize>,
    pub n: Vec<usize>,
    /// Nontrivial elements of the vertex groups generating `G_k`.
    pub generators: Vec<Element>,
    /// `O_k`: least-index representatives of the `G_k`-orbits in
    /// `N_k − W_k`.
    pub orbit_reps: Vec<usize>,
    /// For each vertex of `N_k − W_k`: its representative and an element of
    /// `G_k` carrying the representative to it.
    pub orbit_witness: BTreeMap<usize, (usize, Element)>,
    /// Cover of `W_k` by translates of `N_{k-1}`; empty at stage 0.
    pub translates: Vec<Translate>,
    pub skeleton: Option<Skeleton>,
    /// `N_k` reaches the window's edge.
    pub touches_boundary: bool,
}

impl Stage {
    pub fn fresh(&self) -> Vec<usize> {
        let w: BTreeSet<usize> = self.w.iter().copied().collect();
        self.n.iter().copied().filter(|v| !w.contains(v)).collect()
    }
}

pub struct Windmill<'a> {
    pub pc: &'a ProjectionComplex,
    pub fam: &'a RotatingFamily,
    pub v0: usize,
    pub radius: usize,
    pub window: Window,
    pub stages: Vec<Stage>,
    /// Set when the window cut a stage short.
    pub truncated: Option<String>,
    pub notes: Vec<String>,
    dist0: Vec<usize>,
    by_label: HashMap<String, usize>,
}

/// Runs `stages` steps of the windmill recursion inside the P-ball of
/// `radius` around `v0`. Checks spinning at `L = 4M + K + 1` on the window
/// first.
pub fn run_windmill<'a>(
    pc: &'a ProjectionComplex,
    fam: &'a RotatingFamily,
    v0: usize,
    stages: usize,
    radius: usize,
) -> Result<Windmill<'a>> {
    if fam.len() != pc.data.len() {
        return Err(Error::Windmill("family and projection data index different apex sets".into()));
    }
    let dist0 = bfs_lists(pc.adjacency(), v0);
    let members: Vec<usize> = pc.vertices().iter().copied().filter(|&v| dist0[v] <= radius).collect();
    let window = Window::from_members(
        members,
        format!("P-ball of radius {radius} around {}", pc.data.labels[v0]),
    );
    let threshold = 4 * (8 * pc.k + 2 * pc.theta()) + pc.k;
    let spin = check_spinning(fam, &pc.data, threshold as i64 + 1, &window, DEFAULT_WORD_BOUND);
    if spin.verdict == Verdict::Fail {
        return Err(Error::Windmill(format!("spinning precondition fails: {}", spin.summary_line())));
    }
    let by_label = pc
        .data
        .labels
        .iter()
        .enumerate()
        .filter(|(i, _)| window.contains(*i))
        .map(|(i, l)| (l.clone(), i))
        .collect();
    let mut wm = Windmill {
        pc,
        fam,
        v0,
        radius,
        window,
        stages: Vec::new(),
        truncated: None,
        notes: Vec::new(),
        dist0,
        by_label,
    };
    wm.stage_zero();
    for k in 1..=stages {
        match wm.next_stage(k) {
            Ok(s) => wm.stages.push(s),
            Err(msg) => {
                wm.truncated = Some(msg);
                break;
            }
        }
    }
    Ok(wm)
}

impl<'a> Windmill<'a> {
    fn nontrivial(&self, v: usize) -> impl Iterator<Item = &Element> {
        self.fam.nontrivial(v)
    }

    fn label_of(&self, g: &Element, v: usize) -> String {
        self.fam.action.image_label(g, self.fam.family.apices[v])
    }

    /// Window index of `g·v`, if it lies in the window.
    fn image(&self, g: &Element, v: usize) -> Option<usize> {
        self.by_label.get(&self.label_of(g, v)).copied()
    }

    fn neighborhood(&self, w: &[usize]) -> (Vec<usize>, bool) {
        let mut n: BTreeSet<usize> = w.iter().copied().collect();
        for &v in w {
            n.extend(self.pc.neighbors(v).iter().filter(|&&u| self.window.contains(u)));
        }
        let touches = n.iter().any(|&v| self.dist0[v] >= self.radius);
        (n.into_iter().collect(), touches)
    }

    fn orbits(&self, fresh: &[usize], gens: &[Element]) -> (Vec<usize>, BTreeMap<usize, (usize, Element)>) {
        let inside: BTreeSet<usize> = fresh.iter().copied().collect();
        let mut witness: BTreeMap<usize, (usize, Element)> = BTreeMap::new();
        let mut reps = Vec::new();
        for &start in fresh {
            if witness.contains_key(&start) {
                continue;
            }
            reps.push(start);
            witness.insert(start, (start, self.fam.action.identity()));
            let mut queue = VecDeque::from([(start, self.fam.action.identity())]);
            while let Some((v, g)) = queue.pop_front() {
                for s in gens {
                    let Some(u) = self.image(s, v) else { continue };
                    if inside.contains(&u) && !witness.contains_key(&u) {
                        let h = self.fam.action.mul(s, &g);
                        witness.insert(u, (start, h.clone()));
                        queue.push_back((u, h));
                    }
                }
            }
        }
        (reps, witness)
    }

    fn stage_zero(&mut self) {
        let v0 = self.v0;
        let generators: Vec<Element> = self.nontrivial(v0).cloned().collect();
        let (n, touches) = self.neighborhood(&[v0]);
        let fresh: Vec<usize> = n.iter().copied().filter(|&v| v != v0).collect();
        let (orbit_reps, orbit_witness) = self.orbits(&fresh, &generators);
        self.stages.push(Stage {
            k: 0,
            w: vec![v0],
            n,
            generators,
            orbit_reps,
            orbit_witness,
            translates: Vec::new(),
            skeleton: None,
            touches_boundary: touches,
        });
    }

    fn next_stage(&self, k: usize) -> std::result::Result<Stage, String> {
        let prev = &self.stages[k - 1];
        let fresh = prev.fresh();
        let generators: Vec<Element> = prev
            .n
            .iter()
            .flat_map(|&v| self.nontrivial(v).cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let translates = if fresh.is_empty() {
            // N_{k-1} = W_{k-1}, so G_k = G_{k-1} stabilizes it: one translate
            vec![Translate {
                element: self.fam.action.identity(),
                points: prev.n.iter().map(|&v| (v, v)).collect(),
                key: prev.n.iter().map(|&v| self.pc.data.labels[v].clone()).collect(),
            }]
        } else {
            if prev.touches_boundary {
                return Err(format!(
                    "stage {k}: N_{} reaches the edge of the window and still grows",
                    k - 1
                ));
            }
            self.enumerate_translates(&prev.n, &fresh)
        };
        let mut w: BTreeSet<usize> = BTreeSet::new();
        for t in &translates {
            w.extend(t.points.iter().map(|p| p.0));
        }
        let w: Vec<usize> = w.into_iter().collect();
        let (n, touches) = self.neighborhood(&w);
        let wset: BTreeSet<usize> = w.iter().copied().collect();
        let next_fresh: Vec<usize> = n.iter().copied().filter(|v| !wset.contains(v)).collect();
        let (orbit_reps, orbit_witness) = self.orbits(&next_fresh, &generators);
        let cover: Vec<BTreeSet<usize>> = translates.iter().map(|t| t.members()).collect();
        Ok(Stage {
            k,
            w,
            n,
            generators,
            orbit_reps,
            orbit_witness,
            skeleton: Some(Skeleton::from_cover(&cover)),
            translates,
            touches_boundary: touches,
        })
    }

    /// Translates of the finite set `base` reached through intersection
    /// points inside the window.
    fn enumerate_translates(&self, base: &[usize], fresh: &[usize]) -> Vec<Translate> {
        let act = &self.fam.action;
        let make = |g: Element| -> Translate {
            let mut key: Vec<String> = base.iter().map(|&u| self.label_of(&g, u)).collect();
            key.sort();
            let points = base
                .iter()
                .filter_map(|&u| self.image(&g, u).map(|v| (v, u)))
                .collect();
            Translate { element: g, points, key }
        };
        let mut out = vec![make(act.identity())];
        let mut seen: BTreeSet<Vec<String>> = BTreeSet::from([out[0].key.clone()]);
        let mut i = 0;
        while i < out.len() {
            let g = out[i].element.clone();
            for &v in fresh {
                // g·v is where g·N and g·h·N meet
                if self.image(&g, v).is_none() {
                    continue;
                }
                for h in self.nontrivial(v) {
                    let t = make(act.mul(&g, h));
                    if seen.insert(t.key.clone()) {
                        out.push(t);
                    }
                }
            }
            i += 1;
        }
        out
    }

    pub fn last(&self) -> &Stage {
        self.stages.last().expect("stage 0 always exists")
    }

    pub fn labels(&self, v: &[usize]) -> Vec<String> {
        self.pc.labels(v)
    }
}

/// Bipartite incidence graph of a cover: translates, then points lying in
/// at least two translates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub translates: usize,
    pub points: Vec<usize>,
    /// `(translate, position in points)`.
    pub edges: Vec<(usize, usize)>,
    /// Largest overlap between two distinct translates.
    pub max_overlap: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCertificate {
    pub vertices: usize,
    pub edges: usize,
    pub components: usize,
    pub is_tree: bool,
    pub max_overlap: usize,
    pub line_shaped: bool,
}

impl Skeleton {
    pub fn from_cover(cover: &[BTreeSet<usize>]) -> Skeleton {
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for t in cover {
            for &v in t {
                *count.entry(v).or_default() += 1;
            }
        }
        let points: Vec<usize> = count.into_iter().filter(|&(_, c)| c >= 2).map(|(v, _)| v).collect();
        let pos: HashMap<usize, usize> = points.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges = Vec::new();
        for (i, t) in cover.iter().enumerate() {
            for v in t {
                if let Some(&j) = pos.get(v) {
                    edges.push((i, j));
                }
            }
        }
        let mut max_overlap = 0;
        for i in 0..cover.len() {
            for j in i + 1..cover.len() {
                max_overlap = max_overlap.max(cover[i].intersection(&cover[j]).count());
            }
        }
        Skeleton {
            translates: cover.len(),
            points,
            edges,
            max_overlap,
        }
    }

    pub fn graph(&self) -> UnGraph<(), ()> {
        let mut g = UnGraph::with_capacity(self.translates + self.points.len(), self.edges.len());
        for _ in 0..self.translates + self.points.len() {
            g.add_node(());
        }
        for &(t, p) in &self.edges {
            g.add_edge((t as u32).into(), ((self.translates + p) as u32).into(), ());
        }
        g
    }

    pub fn certificate(&self) -> TreeCertificate {
        let g = self.graph();
        let vertices = g.node_count();
        let components = connected_components(&g);
        let is_tree = vertices > 0 && components == 1 && g.edge_count() + 1 == vertices;
        TreeCertificate {
            vertices,
            edges: g.edge_count(),
            components,
            is_tree,
            max_overlap: self.max_overlap,
            line_shaped: g.node_indices().all(|n| g.neighbors(n).count() <= 2),
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.translates + self.points.len()];
        for &(t, p) in &self.edges {
            adj[t].push(self.translates + p);
            adj[self.translates + p].push(t);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Skeleton distance between two intersection points.
    pub fn point_distance(&self, a: usize, b: usize) -> Option<usize> {
        let ia = self.points.iter().position(|&v| v == a)?;
        let ib = self.points.iter().position(|&v| v == b)?;
        let d = bfs_lists(&self.adjacency(), self.translates + ia)[self.translates + ib];
        (d != usize::MAX).then_some(d)
    }

    pub fn to_dot(&self, labels: &[String]) -> String {
        let mut s = String::from("graph skeleton {\n");
        for t in 0..self.translates {
            s.push_str(&format!("  t{t} [shape=box, label=\"T{t}\"];\n"));
        }
        for (i, &v) in self.points.iter().enumerate() {
            s.push_str(&format!("  p{i} [label=\"{}\"];\n", labels[v]));
        }
        for &(t, p) in &self.edges {
            s.push_str(&format!("  t{t} -- p{p};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// `g·N_{k-1} ∩ N_{k-1} = {v}` for nontrivial `g ∈ G_v`, `v` fresh at
/// stage `k − 1`. Other inputs are not applicable.
pub fn intersection_audit(wm: &Windmill<'_>, k: usize, g: &Element, v: usize) -> Report {
    let mut rep = Report::new("translate-intersection").stamp("stage", k).stamp("window", &wm.window.description);
    let applicable = k >= 1
        && k <= wm.stages.len()
        && wm.stages[k - 1].fresh().contains(&v)
        && wm.fam.groups[v].contains(g)
        && !wm.fam.action.is_identity(g);
    if !applicable {
        rep.verdict = Verdict::NotApplicable;
        return rep.finish();
    }
    let base = &wm.stages[k - 1].n;
    let mine: BTreeSet<String> = base.iter().map(|&u| wm.pc.data.labels[u].clone()).collect();
    let theirs: BTreeSet<String> = base.iter().map(|&u| wm.label_of(g, u)).collect();
    let common: Vec<&String> = mine.intersection(&theirs).collect();
    rep.checked += 1;
    if common.len() != 1 || *common[0] != wm.pc.data.labels[v] {
        rep.violation(Witness {
            indices: vec![v],
            labels: vec![wm.pc.data.labels[v].clone()],
            values: vec![],
            detail: format!("intersection is {:?}", common),
        });
    }
    rep.finish()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub apex: String,
    /// `-1` for the base vertex.
    pub stage: i64,
    pub order: usize,
    pub name: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageEvidence {
    pub stage: usize,
    pub decomposition: String,
    pub skeleton: TreeCertificate,
    pub edge_stabilizers: Report,
    pub generation: Report,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeProductCertificate {
    pub window: String,
    pub factors: Vec<FactorEntry>,
    pub stages: Vec<StageEvidence>,
    pub cross_validation: Report,
    pub truncated: Option<String>,
}

impl FreeProductCertificate {
    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    pub fn product(&self) -> String {
        if self.factors.is_empty() {
            "1".into()
        } else {
            self.factor_names().join(" * ")
        }
    }
}

fn group_name(wm: &Windmill<'_>, v: usize) -> String {
    let g = &wm.fam.groups[v];
    let n = g.len();
    if n == 1 {
        return "1".into();
    }
    let cyclic = g.iter().any(|x| wm.fam.action.order(x, n as u32) == Some(n as u32));
    if cyclic {
        format!("Z/{n}")
    } else {
        format!("G{n}")
    }
}

fn evidence(wm: &Windmill<'_>, stage: &Stage, bound: usize) -> StageEvidence {
    let act = &wm.fam.action;
    let prev = &wm.stages[stage.k - 1];
    let skeleton = stage.skeleton.as_ref().expect("stages after 0 have skeletons");
    let cert = skeleton.certificate();

    let mut stabs = Report::new("edge-stabilizers").stamp("stage", stage.k).stamp("syllable_bound", bound);
    let ball = act.subgroup_ball(&stage.generators, bound);
    let base = &prev.n;
    for &(t, p) in &skeleton.edges {
        let tr = &stage.translates[t];
        let v = skeleton.points[p];
        for s in &ball {
            if act.is_identity(s) || wm.image(s, v) != Some(v) {
                continue;
            }
            stabs.checked += 1;
            let st = act.mul(s, &tr.element);
            let mut key: Vec<String> = base.iter().map(|&u| wm.label_of(&st, u)).collect();
            key.sort();
            if key == tr.key {
                stabs.violation(Witness {
                    indices: vec![v],
                    labels: vec![wm.pc.data.labels[v].clone()],
                    values: vec![],
                    detail: format!("{} fixes the edge at translate {t}", act.format(s)),
                });
            }
        }
    }

    // every generator group G_v (v ∈ N_{k-1}) is a conjugate of G_{k-1}'s
    // generators or of an orbit representative's group
    let mut gen = Report::new("generation").stamp("stage", stage.k);
    let source_of: BTreeMap<usize, (Element, usize)> = prev
        .translates
        .iter()
        .flat_map(|t| t.points.iter().map(move |&(v, u)| (v, (t.element.clone(), u))))
        .collect();
    for &v in base {
        let (g, u) = if let Some((rep, g)) = prev.orbit_witness.get(&v) {
            (g.clone(), *rep)
        } else if let Some((g, u)) = source_of.get(&v) {
            (g.clone(), *u)
        } else if v == wm.v0 {
            (act.identity(), v)
        } else {
            gen.violation(Witness {
                indices: vec![v],
                labels: vec![wm.pc.data.labels[v].clone()],
                values: vec![],
                detail: "no witness for this vertex".into(),
            });
            continue;
        };
        gen.checked += 1;
        let conj: BTreeSet<Element> = wm.fam.groups[u].iter().map(|x| act.conjugate(&g, x)).collect();
        let target: BTreeSet<Element> = wm.fam.groups[v].iter().cloned().collect();
        if conj != target {
            gen.violation(Witness {
                indices: vec![u, v],
                labels: wm.labels(&[u, v]),
                values: vec![],
                detail: format!("G_v is not the conjugate by {}", act.format(&g)),
            });
        }
    }
    let reps: Vec<String> = prev.orbit_reps.iter().map(|&o| format!("G_{}", wm.pc.data.labels[o])).collect();
    let decomposition = if reps.is_empty() {
        format!("G_{} = G_{}", stage.k, stage.k - 1)
    } else {
        format!("G_{} = G_{} * {}", stage.k, stage.k - 1, reps.join(" * "))
    };
    StageEvidence {
        stage: stage.k,
        decomposition,
        skeleton: cert,
        edge_stabilizers: stabs.finish(),
        generation: gen.finish(),
    }
}

/// Normal forms up to `syllables` act distinctly on the base vertex modulo
/// its stabilizer.
pub fn cross_validate(wm: &Windmill<'_>, syllables: usize) -> Report {
    let mut rep = Report::new("normal-form-cross-check").stamp("syllables", syllables);
    let Some(group) = wm.fam.action.free_product_group() else {
        rep.verdict = Verdict::NotApplicable;
        rep.note("no normal forms for permutation actions");
        return rep.finish();
    };
    let words = alternating_words(&group, syllables);
    rep.set_stamp("words", words.len());
    let act = &wm.fam.action;
    let p0 = wm.fam.family.apices[wm.v0];
    let images: Vec<String> = words
        .iter()
        .map(|w| act.image_label(&Element::Word(w.clone()), p0))
        .collect();
    let stab: BTreeSet<&Element> = wm.fam.groups[wm.v0].iter().collect();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            rep.checked += 1;
            if images[i] != images[j] {
                continue;
            }
            let (u, w) = (Element::Word(words[i].clone()), Element::Word(words[j].clone()));
            let diff = act.mul(&act.inverse(&u), &w);
            if !stab.contains(&diff) {
                rep.violation(Witness {
                    indices: vec![i, j],
                    labels: vec![words[i].to_string(), words[j].to_string()],
                    values: vec![],
                    detail: format!("both send the base vertex to {}", images[i]),
                });
            }
        }
    }
    rep.finish()
}

/// Collects the evidence for `G ≅ *_{v ∈ O} G_v` inside the window. Errors
/// with a diagnostic if any piece fails.
pub fn certify_free_product(wm: &Windmill<'_>) -> Result<FreeProductCertificate> {
    let mut factors = vec![FactorEntry {
        apex: wm.pc.data.labels[wm.v0].clone(),
        stage: -1,
        order: wm.fam.groups[wm.v0].len(),
        name: group_name(wm, wm.v0),
    }];
    let mut stages = Vec::new();
    for s in &wm.stages[1..] {
        let prev = &wm.stages[s.k - 1];
        for &o in &prev.orbit_reps {
            factors.push(FactorEntry {
                apex: wm.pc.data.labels[o].clone(),
                stage: prev.k as i64,
                order: wm.fam.groups[o].len(),
                name: group_name(wm, o),
            });
        }
        let ev = evidence(wm, s, DEFAULT_WORD_BOUND);
        let ok = ev.skeleton.is_tree
            && ev.skeleton.max_overlap <= 1
            && ev.edge_stabilizers.verdict != Verdict::Fail
            && ev.generation.verdict != Verdict::Fail;
        if !ok {
            return Err(Error::Windmill(format!(
                "stage {} evidence fails: tree {}, overlap {}, {}, {}",
                s.k,
                ev.skeleton.is_tree,
                ev.skeleton.max_overlap,
                ev.edge_stabilizers.summary_line(),
                ev.generation.summary_line()
            )));
        }
        stages.push(ev);
    }
    let cross = cross_validate(wm, CROSS_CHECK_SYLLABLES);
    if cross.verdict == Verdict::Fail {
        return Err(Error::Windmill(cross.summary_line()));
    }
    Ok(FreeProductCertificate {
        window: wm.window.description.clone(),
        factors,
        stages,
        cross_validation: cross,
        truncated: wm.truncated.clone(),
    })
}

/// Shortest path from `a` to `b` inside `set`, least ids first.
fn path_within(wm: &Windmill<'_>, set: &BTreeSet<usize>, a: usize, b: usize) -> Option<Vec<usize>> {
    let mut prev: BTreeMap<usize, usize> = BTreeMap::from([(a, a)]);
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        if u == b {
            break;
        }
        for &w in wm.pc.neighbors(u) {
            if set.contains(&w) && !prev.contains_key(&w) {
                prev.insert(w, u);
                queue.push_back(w);
            }
        }
    }
    prev.get(&b)?;
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

/// A `c`-canoeing path from `x` to `y` in the last stage's windmill whose
/// large-angle points are the translate intersection points it crosses.
pub fn canoe_between(wm: &Windmill<'_>, x: usize, y: usize, c: u64) -> Result<CanoePath> {
    let stage = wm.last();
    if x == y {
        return Err(Error::Canoe("endpoints coincide".into()));
    }
    if !stage.w.contains(&x) || !stage.w.contains(&y) {
        return Err(Error::Canoe("endpoints must lie in the windmill".into()));
    }
    let cover: Vec<BTreeSet<usize>> = if stage.translates.is_empty() {
        vec![stage.w.iter().copied().collect()]
    } else {
        stage.translates.iter().map(|t| t.members()).collect()
    };
    let sk = Skeleton::from_cover(&cover);
    let adj = sk.adjacency();
    let node = |v: usize| -> usize {
        match sk.points.iter().position(|&p| p == v) {
            Some(i) => sk.translates + i,
            None => cover.iter().position(|t| t.contains(&v)).expect("vertex of W_k lies in a translate"),
        }
    };
    let (sx, sy) = (node(x), node(y));
    // skeleton path, least ids first
    let mut prev = vec![usize::MAX; adj.len()];
    prev[sx] = sx;
    let mut queue = VecDeque::from([sx]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if prev[w] == usize::MAX {
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    if prev[sy] == usize::MAX {
        return Err(Error::Canoe("skeleton is disconnected".into()));
    }
    let mut chain = vec![sy];
    while *chain.last().unwrap() != sx {
        chain.push(prev[*chain.last().unwrap()]);
    }
    chain.reverse();
    // waypoints: x, crossing points, y; each leg inside one translate
    let mut waypoints = vec![x];
    let mut legs: Vec<usize> = Vec::new();
    let mut current: Option<usize> = (sx < sk.translates).then_some(sx);
    for &n in &chain {
        if n < sk.translates {
            current = Some(n);
            continue;
        }
        let v = sk.points[n - sk.translates];
        if v != *waypoints.last().unwrap() {
            legs.push(current.expect("points alternate with translates"));
            waypoints.push(v);
        }
    }
    if *waypoints.last().unwrap() != y {
        legs.push(current.expect("y lies in a translate"));
        waypoints.push(y);
    }
    let mut vertices = vec![x];
    let mut junctions = Vec::new();
    for (i, w) in waypoints.windows(2).enumerate() {
        let leg = path_within(wm, &cover[legs[i]], w[0], w[1])
            .ok_or_else(|| Error::Canoe(format!("translate {} is not connected", legs[i])))?;
        if i > 0 {
            junctions.push(vertices.len() - 1);
        }
        vertices.extend_from_slice(&leg[1..]);
    }
    let path = CanoePath::new(vertices, junctions, Vec::new())?;
    let rep = validate_canoe(wm.pc, &path, c);
    if rep.verdict == Verdict::Fail {
        return Err(Error::Canoe(format!("constructed path does not validate: {}", rep.summary_line())));
    }
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Elliptic { apex: String, conjugator: String },
    Loxodromic { orbit: Vec<OrbitRow> },
    Unresolved { reason: String, orbit: Vec<OrbitRow> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub n: u32,
    pub space_distance: Option<u64>,
    pub space_bound: u64,
    pub p_distance: Option<usize>,
    pub skeleton_distance: Option<usize>,
}

/// Elliptic if `g` lies in some `G_c` up to conjugation by words of at most
/// `word_bound` syllables; otherwise tests orbit growth for `n ≤ n_max`.
pub fn classify_element(wm: &Windmill<'_>, g: &Element, n_max: u32, word_bound: usize) -> Classification {
    let act = &wm.fam.action;
    if act.is_identity(g) {
        return Classification::Elliptic {
            apex: wm.pc.data.labels[wm.v0].clone(),
            conjugator: act.format(g),
        };
    }
    for &c in &wm.window.members {
        if wm.fam.groups[c].contains(g) {
            return Classification::Elliptic {
                apex: wm.pc.data.labels[c].clone(),
                conjugator: act.format(&act.identity()),
            };
        }
    }
    let mut reps = vec![wm.v0];
    for s in &wm.stages {
        reps.extend(&s.orbit_reps);
    }
    for s in act.ball(word_bound) {
        let h = act.mul(&act.mul(&act.inverse(&s), g), &s);
        for &o in &reps {
            if wm.fam.groups[o].contains(&h) {
                return Classification::Elliptic {
                    apex: wm.label_of(&s, o),
                    conjugator: act.format(&s),
                };
            }
        }
    }
    let delta = wm.fam.family.delta.max(1);
    let skeleton = wm.stages.iter().rev().filter_map(|s| s.skeleton.as_ref()).find(|s| s.translates > 1);
    let x0 = skeleton
        .and_then(|sk| sk.points.iter().copied().min_by_key(|&v| (wm.dist0[v], v)))
        .unwrap_or(wm.v0);
    let p0 = wm.fam.family.apices[x0];
    let dp = bfs_lists(wm.pc.adjacency(), x0);
    let mut orbit = Vec::new();
    let mut ok = true;
    for n in 1..=n_max {
        let gn = act.pow(g, n);
        let space_distance = act.displacement(&gn, p0);
        let space_bound = 2 * delta * (n as u64 - 1);
        let target = wm.image(&gn, x0);
        let p_distance = target.map(|t| dp[t]).filter(|&d| d != usize::MAX);
        let skeleton_distance = match (skeleton, target) {
            (Some(sk), Some(t)) => sk.point_distance(x0, t),
            _ => None,
        };
        ok &= space_distance.is_some_and(|d| d > 0 && d >= space_bound);
        if let (Some(d), Some(m)) = (p_distance, skeleton_distance) {
            ok &= 4 * d + 2 >= m;
        }
        orbit.push(OrbitRow {
            n,
            space_distance,
            space_bound,
            p_distance,
            skeleton_distance,
        });
    }
    if ok {
        Classification::Loxodromic { orbit }
    } else {
        Classification::Unresolved {
            reason: "orbit growth bounds not met within the tested range".into(),
            orbit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;
    use crate::group::GroupAction;
    use crate::metric::bass_serre::BassSerreSpace;
    use crate::metric::{cycle_graph, GeodesicSpace};
    use crate::projection::{build_projection_data, ApexFamily};
    use std::sync::Arc;

    pub(crate) fn instance(h: u32, k: u32, trunc: u32) -> (ProjectionComplex, RotatingFamily) {
        let bs = BassSerreSpace::new(h, k, 38, trunc).unwrap();
        let apices = bs.vertex_ids();
        let space = Arc::new(GeodesicSpace::BassSerre(bs));
        let fam = ApexFamily::new(space.clone(), apices, 38, 16, 1).unwrap();
        let data = Arc::new(build_projection_data(&fam, 121));
        let w = Window::all(&data);
        let pc = build_complex(data, 363, w).unwrap();
        let rf = RotatingFamily::with_stabilizers(fam, GroupAction::free_product(space)).unwrap();
        (pc, rf)
    }

    fn ix(pc: &ProjectionComplex, l: &str) -> usize {
        pc.data.index_of(l).unwrap()
    }

    #[test]
    fn stage_zero_on_t23() {
        let (pc, rf) = instance(2, 3, 6);
        let v0 = ix(&pc, "H[e]");
        let wm = run_windmill(&pc, &rf, v0, 0, 6).unwrap();
        let s = &wm.stages[0];
        // oracle: the P-neighbours of H[e] are the two K-cosets K and hK
        let mut want = vec![v0, ix(&pc, "K[e]"), ix(&pc, "K[h1]")];
        want.sort();
        assert_eq!(s.n, want);
        assert_eq!(s.orbit_reps.len(), 1);
        assert_eq!(s.orbit_witness.len(), 2);
    }

    #[test]
    fn two_stages_on_t23() {
        let (pc, rf) = instance(2, 3, 6);
        let v0 = ix(&pc, "H[e]");
        let wm = run_windmill(&pc, &rf, v0, 2, 6).unwrap();
        assert_eq!(wm.stages.len(), 3);
        assert!(wm.truncated.is_none());
        let s1 = &wm.stages[1];
        assert_eq!(s1.w.len(), wm.window.len());
        // stage 1 cover: stars of H-vertices, skeleton is the tree again
        for t in &s1.translates {
            assert!(t.key.len() == 3 && t.key.iter().filter(|l| l.starts_with('H')).count() == 1);
        }
        let cert = s1.skeleton.as_ref().unwrap().certificate();
        assert!(cert.is_tree);
        assert_eq!(cert.max_overlap, 1);
        assert_eq!(wm.stages[2].translates.len(), 1);
        for i in 0..2 {
            let (a, b) = (&wm.stages[i], &wm.stages[i + 1]);
            assert!(a.w.iter().all(|v| a.n.contains(v)));
            assert!(a.n.iter().all(|v| b.w.contains(v)));
        }
        let c = certify_free_product(&wm).unwrap();
        assert_eq!(c.factor_names(), vec!["Z/2", "Z/3"]);
        assert_eq!(c.cross_validation.stamps["words"], serde_json::json!(106));
        assert_eq!(c.cross_validation.violations, 0);
        assert_eq!(c.stages[0].edge_stabilizers.verdict, Verdict::Pass);
        // one translate at stage 2: no skeleton edges to stabilize
        assert_eq!(c.stages[1].edge_stabilizers.verdict, Verdict::Vacuous);
    }

    #[test]
    fn infinite_dihedral_is_a_line() {
        let (pc, rf) = instance(2, 2, 8);
        let v0 = ix(&pc, "H[e]");
        let wm = run_windmill(&pc, &rf, v0, 2, 8).unwrap();
        let c = certify_free_product(&wm).unwrap();
        assert_eq!(c.product(), "Z/2 * Z/2");
        assert!(c.stages.iter().all(|s| s.skeleton.line_shaped && s.skeleton.is_tree));
    }

    #[test]
    fn intersections_of_translates() {
        let (pc, rf) = instance(2, 3, 6);
        let v0 = ix(&pc, "H[e]");
        let wm = run_windmill(&pc, &rf, v0, 1, 6).unwrap();
        let k = ix(&pc, "K[e]");
        let k1 = rf.action.parse("k1").unwrap();
        assert_eq!(intersection_audit(&wm, 1, &k1, k).verdict, Verdict::Pass);
        assert_eq!(intersection_audit(&wm, 1, &rf.action.identity(), k).verdict, Verdict::NotApplicable);
        // h1.k1 sends K[e] to K[h1], so that translate meets N_0 once
        let n0 = &wm.stages[0].n;
        let mine: BTreeSet<String> = n0.iter().map(|&u| pc.data.labels[u].clone()).collect();
        let meet = |w: &str| {
            let g = rf.action.parse(w).unwrap();
            let image: BTreeSet<String> = n0.iter().map(|&u| wm.label_of(&g, u)).collect();
            image.intersection(&mine).count()
        };
        assert_eq!(meet("h1.k1"), 1);
        // k1 · (h1.k1.h1): two factors from G_K[e] and G_K[h1], disjoint
        assert_eq!(meet("k1.h1.k1.h1"), 0);
    }

    #[test]
    fn merged_translates_make_a_cycle() {
        let (pc, rf) = instance(2, 3, 6);
        let wm = run_windmill(&pc, &rf, ix(&pc, "H[e]"), 1, 6).unwrap();
        let mut cover: Vec<BTreeSet<usize>> = wm.stages[1].translates.iter().map(|t| t.members()).collect();
        assert!(Skeleton::from_cover(&cover).certificate().is_tree);
        // glue two intersection points of one translate into a second set
        let both: BTreeSet<usize> = [ix(&pc, "K[e]"), ix(&pc, "K[h1]")].into();
        cover.push(both);
        let cert = Skeleton::from_cover(&cover).certificate();
        assert!(!cert.is_tree);
        assert!(Skeleton::from_cover(&[BTreeSet::from([1, 2])]).certificate().is_tree);
    }

    #[test]
    fn canoes_in_the_windmill() {
        let (pc, rf) = instance(2, 3, 6);
        let wm = run_windmill(&pc, &rf, ix(&pc, "H[e]"), 1, 6).unwrap();
        let c = 12948;
        let same = canoe_between(&wm, ix(&pc, "K[e]"), ix(&pc, "K[h1]"), c).unwrap();
        assert!(same.junctions.is_empty());
        // across the intersection point K[e]
        let p = canoe_between(&wm, ix(&pc, "H[e]"), ix(&pc, "H[k1]"), c).unwrap();
        assert_eq!(p.large_angle_points(), vec![ix(&pc, "K[e]")]);
        let far = canoe_between(&wm, ix(&pc, "H[e]"), ix(&pc, "H[k1.h1.k1]"), c).unwrap();
        assert_eq!(far.junctions.len(), 2);
        let (x, y) = far.endpoints();
        assert!(pc.distance(x, y).unwrap() >= 1);
    }

    #[test]
    fn classification() {
        let (pc, rf) = instance(2, 3, 8);
        let wm = run_windmill(&pc, &rf, ix(&pc, "H[e]"), 2, 8).unwrap();
        let a = &rf.action;
        for s in ["h1", "k1", "k2", "k1.h1.k2"] {
            let c = classify_element(&wm, &a.parse(s).unwrap(), 8, 6);
            assert!(matches!(c, Classification::Elliptic { .. }), "{s}: {c:?}");
        }
        let hk = a.parse("h1.k1").unwrap();
        let Classification::Loxodromic { orbit } = classify_element(&wm, &hk, 8, 6) else { panic!() };
        // oracle: hk translates the tree by 2 edges of length 38
        for row in &orbit {
            assert_eq!(row.space_distance, Some(76 * row.n as u64));
        }
        assert!(orbit.iter().any(|r| r.skeleton_distance.is_some()));
        assert!(matches!(
            classify_element(&wm, &a.identity(), 3, 2),
            Classification::Elliptic { .. }
        ));
    }

    #[test]
    fn single_apex_has_one_factor() {
        let g = cycle_graph(12);
        let refl: Vec<u32> = (0..12).map(|i| ((12 - i) % 12) as u32).collect();
        let space = Arc::new(GeodesicSpace::Graph(g));
        let action = GroupAction::permutations(space.clone(), vec![Element::Perm(refl.clone())]).unwrap();
        let fam = ApexFamily::exploratory(space, vec![0], 3, 1).unwrap();
        let data = Arc::new(build_projection_data(&fam, 121));
        let w = Window::all(&data);
        let pc = ProjectionComplex::unchecked(data, 363, w);
        let rf = RotatingFamily::new(fam, action, vec![vec![Element::Perm(refl)]]).unwrap();
        let wm = run_windmill(&pc, &rf, 0, 1, 4).unwrap();
        let c = certify_free_product(&wm).unwrap();
        assert_eq!(c.factor_names(), vec!["Z/2"]);
        assert_eq!(c.cross_validation.verdict, Verdict::NotApplicable);
    }
}

//! The projection complex, standard paths and their audits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use petgraph::dot::{Config, Dot};
use petgraph::graph::UnGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axioms::{check_p1, check_p2plus};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::projection::{bfs_lists, edge_rule_adjacency, ProjectionData, Window};
use crate::report::{Report, Verdict, Witness};

#[derive(Clone, Debug)]
pub struct ProjectionComplex {
    pub data: Arc<ProjectionData>,
    pub k: u64,
    pub window: Window,
    /// Indexed by apex index; vertices outside the window have no edges.
    adj: Vec<Vec<usize>>,
}

/// Builds `P(Y, θ, K)` on the window after checking `K ≥ 3θ`, P1 and P2+
/// there.
pub fn build_complex(data: Arc<ProjectionData>, k: u64, window: Window) -> Result<ProjectionComplex> {
    if k < 3 * data.theta {
        return Err(Error::AxiomPrecondition(format!(
            "K = {k} is below 3 theta = {}",
            3 * data.theta
        )));
    }
    for rep in [check_p1(&data, &window), check_p2plus(&data, &window)] {
        if rep.verdict == Verdict::Fail {
            return Err(Error::AxiomPrecondition(rep.summary_line()));
        }
    }
    Ok(ProjectionComplex::unchecked(data, k, window))
}

impl ProjectionComplex {
    /// Applies the edge rule without checking any axiom.
    pub fn unchecked(data: Arc<ProjectionData>, k: u64, window: Window) -> ProjectionComplex {
        let members = &window.members;
        let sub = edge_rule_adjacency(&data, k, members);
        let mut adj = vec![Vec::new(); data.len()];
        for &x in members {
            adj[x] = sub[x].iter().copied().filter(|&z| window.contains(z)).collect();
        }
        ProjectionComplex { data, k, window, adj }
    }

    pub fn theta(&self) -> u64 {
        self.data.theta
    }

    pub fn vertices(&self) -> &[usize] {
        &self.window.members
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacent(&self, x: usize, z: usize) -> bool {
        self.adj[x].binary_search(&z).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &x in &self.window.members {
            for &z in &self.adj[x] {
                if x < z {
                    out.push((x, z));
                }
            }
        }
        out
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    /// BFS distances from `v`; `usize::MAX` when unreachable.
    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        bfs_lists(&self.adj, v)
    }

    pub fn distance(&self, x: usize, z: usize) -> Option<usize> {
        let d = self.distances_from(x)[z];
        (d != usize::MAX).then_some(d)
    }

    /// Distance rows for every window vertex.
    pub fn all_distances(&self) -> BTreeMap<usize, Vec<usize>> {
        self.window
            .members
            .par_iter()
            .map(|&v| (v, self.distances_from(v)))
            .collect()
    }

    /// `Y_K(X,Z)`, unordered.
    pub fn large_set(&self, x: usize, z: usize) -> Vec<usize> {
        let d = &self.data;
        self.window
            .members
            .iter()
            .copied()
            .filter(|&y| {
                y != x
                    && y != z
                    && !d.projection_empty(y, x)
                    && !d.projection_empty(y, z)
                    && d.d(y, x, z).exceeds(self.k)
            })
            .collect()
    }

    /// `{X} ∪ Y_K(X,Z) ∪ {Z}` in order, with `Y₁ < Y₂` iff
    /// `d_{Y₁}(X, Y₂) > K`. Errors if that relation is not a strict total
    /// order or a consecutive pair is not adjacent.
    pub fn standard_path(&self, x: usize, z: usize) -> Result<StandardPath> {
        let d = &self.data;
        if x == z {
            return Err(Error::AxiomPrecondition("standard path needs X != Z".into()));
        }
        if d.projection_empty(x, z) || self.distance(x, z).is_none() {
            return Err(Error::DifferentComponents(d.labels[x].clone(), d.labels[z].clone()));
        }
        let set = self.large_set(x, z);
        let before = |a: usize, b: usize| !d.projection_empty(a, b) && d.d(a, x, b).exceeds(self.k);
        let mut rank = Vec::with_capacity(set.len());
        for &a in &set {
            let mut r = 0;
            for &b in &set {
                if a == b {
                    continue;
                }
                let (ab, ba) = (before(a, b), before(b, a));
                if ab == ba {
                    return Err(Error::OrderNotTotal(format!(
                        "{} and {} are {} between {} and {}",
                        d.labels[a],
                        d.labels[b],
                        if ab { "mutually ordered" } else { "incomparable" },
                        d.labels[x],
                        d.labels[z]
                    )));
                }
                if ba {
                    r += 1;
                }
            }
            rank.push((r, a));
        }
        rank.sort_unstable();
        if rank.iter().enumerate().any(|(i, &(r, _))| r != i) {
            return Err(Error::OrderNotTotal(format!(
                "order on Y_K({}, {}) is not transitive",
                d.labels[x], d.labels[z]
            )));
        }
        let mut vertices = vec![x];
        vertices.extend(rank.into_iter().map(|(_, a)| a));
        vertices.push(z);
        for w in vertices.windows(2) {
            if !self.adjacent(w[0], w[1]) {
                return Err(Error::PathNotAdjacent(
                    d.labels[x].clone(),
                    d.labels[z].clone(),
                    d.labels[w[0]].clone(),
                    d.labels[w[1]].clone(),
                ));
            }
        }
        Ok(StandardPath { x, z, vertices })
    }

    pub fn labels(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|&v| self.data.labels[v].clone()).collect()
    }

    /// DOT rendering; `highlight` edges are drawn in red.
    pub fn to_dot(&self, highlight: &[(usize, usize)]) -> String {
        let mut g: UnGraph<String, bool> = UnGraph::default();
        let mut node = BTreeMap::new();
        for &v in &self.window.members {
            node.insert(v, g.add_node(self.data.labels[v].clone()));
        }
        for (x, z) in self.edges() {
            let hot = highlight.contains(&(x, z)) || highlight.contains(&(z, x));
            g.add_edge(node[&x], node[&z], hot);
        }
        let edge_attr = |_: &UnGraph<String, bool>, e: petgraph::graph::EdgeReference<'_, bool>| {
            if *e.weight() {
                "color=red, penwidth=2".to_string()
            } else {
                String::new()
            }
        };
        let node_attr = |_: &UnGraph<String, bool>, _| String::new();
        format!(
            "{:?}",
            Dot::with_attr_getters(&g, &[Config::EdgeNoLabel], &edge_attr, &node_attr)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardPath {
    pub x: usize,
    pub z: usize,
    /// Endpoints included.
    pub vertices: Vec<usize>,
}

impl StandardPath {
    pub fn interior(&self) -> &[usize] {
        &self.vertices[1..self.vertices.len() - 1]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.vertices.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn reversed(&self) -> StandardPath {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        StandardPath {
            x: self.z,
            z: self.x,
            vertices,
        }
    }
}

fn witness(pc: &ProjectionComplex, idx: &[usize], values: Vec<Ext>, detail: String) -> Witness {
    Witness {
        indices: idx.to_vec(),
        labels: pc.labels(idx),
        values,
        detail,
    }
}

fn stamped(pc: &ProjectionComplex, name: &str) -> Report {
    Report::new(name)
        .stamp("theta", pc.theta())
        .stamp("K", pc.k)
        .stamp("window", &pc.window.description)
}

/// When `d_Y(X,Z) > K`: `Y_K(X,Y)`, then `Y`, then `Y_K(Y,Z)` is
/// `Y_K(X,Z)` as an ordered list.
pub fn concat_audit(pc: &ProjectionComplex, x: usize, y: usize, z: usize) -> Result<Report> {
    let mut rep = stamped(pc, "concatenation");
    let d = &pc.data;
    if x == y || y == z || x == z || d.projection_empty(y, x) || d.projection_empty(y, z) || !d.d(y, x, z).exceeds(pc.k) {
        rep.verdict = Verdict::NotApplicable;
        return Ok(rep.finish());
    }
    let whole = pc.standard_path(x, z)?;
    let left = pc.standard_path(x, y)?;
    let right = pc.standard_path(y, z)?;
    let mut cat = left.interior().to_vec();
    cat.push(y);
    cat.extend_from_slice(right.interior());
    rep.checked += 1;
    if cat != whole.interior() {
        rep.violation(witness(
            pc,
            &[x, y, z],
            vec![d.d(y, x, z)],
            format!("concatenation {:?} != standard path {:?}", pc.labels(&cat), pc.labels(whole.interior())),
        ));
    }
    Ok(rep.finish())
}

/// `Y_K(X,Z)` lies in `Y_K(X,Y) ∪ Y_K(Y,Z)` (endpoints included) up to at
/// most two consecutive vertices.
pub fn tripod_audit(pc: &ProjectionComplex, x: usize, y: usize, z: usize) -> Result<Report> {
    let mut rep = stamped(pc, "tripod");
    if x == y || y == z || x == z {
        rep.verdict = Verdict::NotApplicable;
        return Ok(rep.finish());
    }
    let whole = pc.standard_path(x, z)?;
    let left = pc.standard_path(x, y)?;
    let right = pc.standard_path(y, z)?;
    let positions: Vec<usize> = whole
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| !left.vertices.contains(v) && !right.vertices.contains(v))
        .map(|(i, _)| i)
        .collect();
    rep.checked += 1;
    rep.set_stamp("exceptional", positions.len());
    let consecutive = positions.len() < 2 || positions[1] == positions[0] + 1;
    if positions.len() > 2 || !consecutive {
        let ex: Vec<usize> = positions.iter().map(|&i| whole.vertices[i]).collect();
        rep.violation(witness(
            pc,
            &[x, y, z],
            vec![Ext::Fin(ex.len() as u64)],
            format!("exceptional vertices {:?}", pc.labels(&ex)),
        ));
    }
    Ok(rep.finish())
}

/// `⌊n/2⌋ + 1 ≤ d_P(X,Z) ≤ n` with `n = |Y_K(X,Z)| + 1`.
pub fn qg_audit(pc: &ProjectionComplex, x: usize, z: usize) -> Result<Report> {
    let mut rep = stamped(pc, "quasi-geodesic");
    let n = pc.standard_path(x, z)?.interior().len() + 1;
    let dp = pc
        .distance(x, z)
        .ok_or_else(|| Error::DifferentComponents(pc.data.labels[x].clone(), pc.data.labels[z].clone()))?;
    rep.checked += 1;
    rep.set_stamp("n", n);
    rep.set_stamp("d_P", dp);
    if dp < n / 2 + 1 || dp > n {
        rep.violation(witness(
            pc,
            &[x, z],
            vec![Ext::Fin(n as u64), Ext::Fin(dp as u64)],
            format!("d_P = {dp} outside [{}, {n}]", n / 2 + 1),
        ));
    }
    Ok(rep.finish())
}

/// For adjacent `X, Z` and `Y` at P-distance at least 4 from both:
/// `d_Y(X,W) = d_Y(Z,W)`. `W` equal to `Y`, `X` or `Z` is not applicable.
pub fn dist4_audit(pc: &ProjectionComplex, x: usize, z: usize, y: usize, w: usize) -> Report {
    let mut rep = stamped(pc, "distance-4");
    let far = |a: usize| pc.distance(y, a).is_none_or(|d| d >= 4);
    let d = &pc.data;
    if !pc.adjacent(x, z) || !far(x) || !far(z) || w == y || w == x || w == z {
        rep.verdict = Verdict::NotApplicable;
        return rep.finish();
    }
    if d.projection_empty(y, x) || d.projection_empty(y, z) || d.projection_empty(y, w) {
        rep.skipped += 1;
        return rep.finish();
    }
    rep.checked += 1;
    let (a, b) = (d.d(y, x, w), d.d(y, z, w));
    if a != b {
        rep.violation(witness(pc, &[x, z, y, w], vec![a, b], format!("d_Y(X,W) = {a} != d_Y(Z,W) = {b}")));
    }
    rep.finish()
}

/// Runs [`dist4_audit`] over every applicable configuration in the window.
pub fn dist4_audit_all(pc: &ProjectionComplex) -> Report {
    let dists = pc.all_distances();
    let far = |y: usize, a: usize| dists[&y][a] >= 4;
    let parts: Vec<Report> = pc
        .window
        .members
        .par_iter()
        .map(|&y| {
            let mut rep = Report::new("distance-4");
            let d = &pc.data;
            for (x, z) in pc.edges() {
                if !far(y, x) || !far(y, z) || d.projection_empty(y, x) || d.projection_empty(y, z) {
                    continue;
                }
                for &w in &pc.window.members {
                    if w == y || w == x || w == z || d.projection_empty(y, w) {
                        continue;
                    }
                    rep.checked += 1;
                    let (a, b) = (d.d(y, x, w), d.d(y, z, w));
                    if a != b {
                        rep.violation(witness(pc, &[x, z, y, w], vec![a, b], format!("d_Y(X,W) = {a} != d_Y(Z,W) = {b}")));
                    }
                }
            }
            rep
        })
        .collect();
    let mut rep = stamped(pc, "distance-4");
    for p in parts {
        rep.absorb(p);
    }
    rep.finish()
}

/// Largest `d_Y(γ(0), γ(t))` over P-geodesics `γ` of length at most
/// `max_len` in the window that avoid `Y`, for every window vertex `Y`.
///
/// A vertex `v` at P-distance `t` from `X₀` is a prefix endpoint of such a
/// geodesic iff it is reached from `X₀` through BFS layers avoiding `Y`, so
/// the maximum is taken over those `(X₀, v)` pairs without listing
/// geodesics.
pub fn bgi_audit(pc: &ProjectionComplex, ys: &[usize], max_len: usize) -> Report {
    let bound = 8 * pc.k + 2 * pc.theta();
    let dists = pc.all_distances();
    let members = &pc.window.members;
    let parts: Vec<(Report, Ext)> = ys
        .par_iter()
        .map(|&y| {
            let mut rep = Report::new("bgi");
            let mut max = Ext::ZERO;
            let d = &pc.data;
            for &x0 in members {
                if x0 == y || d.projection_empty(y, x0) {
                    continue;
                }
                let dx = &dists[&x0];
                let mut layer: Vec<usize> = vec![x0];
                let mut good = vec![false; d.len()];
                good[x0] = true;
                for t in 0..=max_len {
                    if t > 0 {
                        let mut next = Vec::new();
                        for &u in &layer {
                            for &v in pc.neighbors(u) {
                                if v != y && dx[v] == t && !good[v] {
                                    good[v] = true;
                                    next.push(v);
                                }
                            }
                        }
                        layer = next;
                    }
                    for &v in &layer {
                        if d.projection_empty(y, v) {
                            rep.skipped += 1;
                            continue;
                        }
                        rep.checked += 1;
                        let val = d.d(y, x0, v);
                        max = max.max(val);
                        if val.exceeds(bound) {
                            rep.violation(witness(
                                pc,
                                &[y, x0, v],
                                vec![val],
                                format!("prefix projection {val} > M = {bound} at length {t}"),
                            ));
                        }
                    }
                    if layer.is_empty() {
                        break;
                    }
                }
            }
            (rep, max)
        })
        .collect();
    let max = parts.iter().map(|p| p.1).max().unwrap_or(Ext::ZERO);
    let mut rep = stamped(pc, "bgi")
        .stamp("M", bound)
        .stamp("max_length", max_len)
        .stamp("avoided_vertices", ys.len());
    for p in parts {
        rep.absorb(p.0);
    }
    let mut rep = rep.finish();
    rep.set_stamp("max_observed", max);
    rep.set_stamp("max_within_theta", !max.exceeds(pc.theta()));
    rep
}

/// Standard-path audits over every pair and triple of the window.
pub fn standard_path_suite(pc: &ProjectionComplex) -> Result<Vec<Report>> {
    let m = &pc.window.members;
    let pairs: Vec<(usize, usize)> = m
        .iter()
        .flat_map(|&x| m.iter().filter(move |&&z| z != x).map(move |&z| (x, z)))
        .collect();
    let mut qg = stamped(pc, "quasi-geodesic");
    let mut symmetric = stamped(pc, "standard-path-symmetry");
    let results: Vec<Result<(Report, bool)>> = pairs
        .par_iter()
        .map(|&(x, z)| {
            let rep = qg_audit(pc, x, z)?;
            let sym = pc.standard_path(x, z)?.reversed() == pc.standard_path(z, x)?;
            Ok((rep, sym))
        })
        .collect();
    for r in results {
        let (rep, sym) = r?;
        qg.absorb(rep);
        symmetric.checked += 1;
        if !sym {
            symmetric.violations += 1;
        }
    }
    let triples: Vec<(usize, usize, usize)> = m
        .iter()
        .flat_map(|&x| m.iter().flat_map(move |&y| m.iter().map(move |&z| (x, y, z))))
        .filter(|&(x, y, z)| x != y && y != z && x != z)
        .collect();
    let parts: Vec<Result<(Report, Report)>> = triples
        .par_iter()
        .map(|&(x, y, z)| Ok((concat_audit(pc, x, y, z)?, tripod_audit(pc, x, y, z)?)))
        .collect();
    let mut concat = stamped(pc, "concatenation");
    let mut tripod = stamped(pc, "tripod");
    let mut max_exceptional = 0;
    for p in parts {
        let (c, t) = p?;
        if c.verdict == Verdict::NotApplicable {
            concat.skipped += 1;
        } else {
            concat.absorb(c);
        }
        let ex = t.stamps.get("exceptional").and_then(|v| v.as_u64()).unwrap_or(0);
        max_exceptional = max_exceptional.max(ex);
        tripod.absorb(t);
    }
    tripod.set_stamp("max_exceptional", max_exceptional);
    Ok(vec![qg.finish(), symmetric.finish(), concat.finish(), tripod.finish()])
}

/// AHU canonical form of a coloured tree; `None` if the graph is not a
/// tree. `vertices` selects the vertex set.
pub fn tree_canonical_form(adj: &[Vec<usize>], colors: &[u8], vertices: &[usize]) -> Option<String> {
    let n = vertices.len();
    if n == 0 {
        return Some(String::new());
    }
    let inside = |v: usize| vertices.binary_search(&v).is_ok();
    let edge_count: usize = vertices
        .iter()
        .map(|&v| adj[v].iter().filter(|&&w| inside(w)).count())
        .sum::<usize>()
        / 2;
    if edge_count + 1 != n {
        return None;
    }
    let mut degree: BTreeMap<usize, usize> = vertices
        .iter()
        .map(|&v| (v, adj[v].iter().filter(|&&w| inside(w)).count()))
        .collect();
    let mut leaves: Vec<usize> = degree.iter().filter(|(_, &d)| d <= 1).map(|(&v, _)| v).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= leaves.len();
        let mut next = Vec::new();
        for &l in &leaves {
            for &w in &adj[l] {
                if let Some(d) = degree.get_mut(&w) {
                    if *d > 1 {
                        *d -= 1;
                        if *d == 1 {
                            next.push(w);
                        }
                    }
                }
            }
            degree.insert(l, 0);
        }
        leaves = next;
    }
    fn rooted(adj: &[Vec<usize>], colors: &[u8], inside: &dyn Fn(usize) -> bool, v: usize, parent: usize) -> String {
        let mut kids: Vec<String> = adj[v]
            .iter()
            .filter(|&&w| w != parent && inside(w))
            .map(|&w| rooted(adj, colors, inside, w, v))
            .collect();
        kids.sort();
        let mut s = String::new();
        let _ = write!(s, "({}", colors[v]);
        for k in kids {
            s.push_str(&k);
        }
        s.push(')');
        s
    }
    leaves
        .iter()
        .map(|&c| rooted(adj, colors, &inside, c, usize::MAX))
        .min()
}

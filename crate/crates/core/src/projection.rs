//! Sphere projections onto apices and the projection distances `d_p`.
//!
//! For an apex `p` and a point `a`, `π_p(a)` is the set of points where
//! geodesics `[p,a]` cross the sphere `S_p = {z : d(p,z) = R}`. A point `z`
//! lies on some geodesic `[p,a]` at distance `R` from `p` exactly when
//! `d(p,z) = R` and `d(z,a) = d(p,a) - R`, so the union over all geodesics is
//! computed without enumerating them. Distances inside `S_p` are taken in the
//! path metric of `X \ B_R(p)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::metric::geodesic::{all_geodesics, first_geodesic};
use crate::metric::{GeodesicSpace, GraphSpace, PointId, UNREACHED};
use crate::report::{Report, Verdict, Witness};

/// Apex set of a rotating family together with the sphere radius.
#[derive(Clone, Debug)]
pub struct ApexFamily {
    pub space: Arc<GeodesicSpace>,
    pub apices: Vec<PointId>,
    pub rho: u64,
    pub r: u64,
    pub delta: u64,
}

impl ApexFamily {
    /// Validates separation and `2 + 2δ ≤ R ≤ ρ/2 - 3δ`.
    pub fn new(
        space: Arc<GeodesicSpace>,
        apices: Vec<PointId>,
        rho: u64,
        r: u64,
        delta: u64,
    ) -> Result<ApexFamily> {
        let delta = delta.max(1);
        let lo = 2 + 2 * delta;
        let hi = (rho / 2) as i64 - 3 * delta as i64;
        if r < lo || (r as i64) > hi {
            return Err(Error::RadiusOutOfRange {
                radius: r,
                lo,
                hi,
                delta,
                rho,
            });
        }
        let fam = ApexFamily::exploratory(space, apices, r, delta)?;
        fam.check_separation(rho)?;
        Ok(ApexFamily { rho, ..fam })
    }

    /// Skips the separation and radius-interval checks; only requires every
    /// apex pair in one component to be at least `R` apart so spheres make
    /// sense. Used to probe small graphs where the interval is empty.
    pub fn exploratory(space: Arc<GeodesicSpace>, apices: Vec<PointId>, r: u64, delta: u64) -> Result<ApexFamily> {
        let n = space.graph().len();
        if let Some(&bad) = apices.iter().find(|&&p| p >= n) {
            return Err(Error::UnknownPoint(bad.to_string()));
        }
        let mut sorted = apices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != apices.len() {
            return Err(Error::Instance("repeated apex".into()));
        }
        if r == 0 {
            return Err(Error::Parameters("sphere radius must be positive".into()));
        }
        let fam = ApexFamily {
            space,
            apices,
            rho: 0,
            r,
            delta: delta.max(1),
        };
        let sep = fam.separation();
        if let Some((a, b, d)) = sep {
            if d < r {
                let g = fam.space.graph();
                return Err(Error::Separation(g.label(a).into(), g.label(b).into(), d, r));
            }
        }
        Ok(ApexFamily {
            rho: sep.map_or(u64::MAX, |s| s.2),
            ..fam
        })
    }

    /// Closest pair of apices in a common component.
    pub fn separation(&self) -> Option<(PointId, PointId, u64)> {
        let g = self.space.graph();
        let rows: Vec<Vec<u32>> = self.apices.par_iter().map(|&p| g.bfs(p)).collect();
        let mut best: Option<(PointId, PointId, u64)> = None;
        for (i, row) in rows.iter().enumerate() {
            for &b in &self.apices[i + 1..] {
                let d = row[b];
                if d != UNREACHED && best.is_none_or(|x| (d as u64) < x.2) {
                    best = Some((self.apices[i], b, d as u64));
                }
            }
        }
        best
    }

    fn check_separation(&self, rho: u64) -> Result<()> {
        if let Some((a, b, d)) = self.separation() {
            if d < rho {
                let g = self.space.graph();
                return Err(Error::Separation(g.label(a).into(), g.label(b).into(), d, rho));
            }
        }
        Ok(())
    }
}

/// Sphere `S_p` with its complement-metric distance table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sphere {
    pub labels: Vec<String>,
    /// Point ids in the source space; empty when loaded without one.
    pub ids: Vec<PointId>,
    pub dist: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionData {
    pub theta: u64,
    pub delta: u64,
    pub r: u64,
    pub labels: Vec<String>,
    /// Apex point ids in the source space, when known.
    pub points: Vec<PointId>,
    pub spheres: Vec<Sphere>,
    /// `proj[p][a]`: indices into `spheres[p]`.
    pub proj: Vec<Vec<Vec<u32>>>,
    /// Hand-set distances that replace computed ones (negative controls).
    pub overrides: Vec<(usize, usize, usize, Ext)>,
    table: Vec<u32>,
}

/// Builds the projection data of an apex family.
pub fn build_projection_data(fam: &ApexFamily, theta: u64) -> ProjectionData {
    let g = fam.space.graph();
    let r = fam.r;
    let rows: Vec<Vec<u32>> = fam.apices.par_iter().map(|&p| g.bfs(p)).collect();
    let per_apex: Vec<(Sphere, Vec<Vec<u32>>)> = (0..fam.apices.len())
        .into_par_iter()
        .map(|i| {
            let p = fam.apices[i];
            let from_p = &rows[i];
            let ids = g.sphere(p, r);
            let inside = |v: PointId| from_p[v] != UNREACHED && (from_p[v] as u64) < r;
            let dist: Vec<Vec<u32>> = ids
                .iter()
                .map(|&z| {
                    let row = g.bfs_avoiding(z, inside);
                    ids.iter().map(|&w| row[w]).collect()
                })
                .collect();
            let proj = fam
                .apices
                .iter()
                .enumerate()
                .map(|(j, &a)| {
                    let dpa = from_p[a];
                    if j == i || dpa == UNREACHED || (dpa as u64) < r {
                        return Vec::new();
                    }
                    let want = dpa - r as u32;
                    ids.iter()
                        .enumerate()
                        .filter(|&(_, &z)| rows[j][z] == want)
                        .map(|(k, _)| k as u32)
                        .collect()
                })
                .collect();
            let labels = ids.iter().map(|&z| g.label(z).to_string()).collect();
            (Sphere { labels, ids, dist }, proj)
        })
        .collect();
    let (spheres, proj) = per_apex.into_iter().unzip();
    ProjectionData::assemble(
        theta,
        fam.delta,
        r,
        fam.apices.iter().map(|&p| g.label(p).to_string()).collect(),
        fam.apices.clone(),
        spheres,
        proj,
        Vec::new(),
    )
}

impl ProjectionData {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        theta: u64,
        delta: u64,
        r: u64,
        labels: Vec<String>,
        points: Vec<PointId>,
        spheres: Vec<Sphere>,
        proj: Vec<Vec<Vec<u32>>>,
        overrides: Vec<(usize, usize, usize, Ext)>,
    ) -> ProjectionData {
        let n = labels.len();
        let mut data = ProjectionData {
            theta,
            delta,
            r,
            labels,
            points,
            spheres,
            proj,
            overrides: Vec::new(),
            table: vec![0; n * n * n],
        };
        let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|p| data.compute_row(p)).collect();
        for (p, row) in rows.into_iter().enumerate() {
            data.table[p * n * n..(p + 1) * n * n].copy_from_slice(&row);
        }
        for (p, a, b, v) in overrides {
            data.override_distance(p, a, b, v);
        }
        data
    }

    fn compute_row(&self, p: usize) -> Vec<u32> {
        let n = self.len();
        let dist = &self.spheres[p].dist;
        let mut row = vec![0u32; n * n];
        for a in 0..n {
            if a == p {
                continue;
            }
            let pa = &self.proj[p][a];
            for b in a..n {
                if b == p {
                    continue;
                }
                let pb = &self.proj[p][b];
                let v = if pa.is_empty() || pb.is_empty() {
                    UNREACHED
                } else {
                    let mut m = 0;
                    for &x in pa.iter().chain(pb) {
                        for &y in pa.iter().chain(pb) {
                            m = m.max(dist[x as usize][y as usize]);
                        }
                    }
                    m
                };
                row[a * n + b] = v;
                row[b * n + a] = v;
            }
        }
        row
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))
    }

    /// Index of the apex sitting at a point of the source space.
    pub fn index_of_point(&self, p: PointId) -> Option<usize> {
        self.points.iter().position(|&q| q == p)
    }

    /// `d_p(a, b)` without argument checks; `Inf` when a projection is
    /// empty.
    #[inline]
    pub fn d(&self, p: usize, a: usize, b: usize) -> Ext {
        let n = self.len();
        Ext::from_raw(self.table[(p * n + a) * n + b])
    }

    pub fn proj_distance(&self, p: usize, a: usize, b: usize) -> Result<Ext> {
        let n = self.len();
        for i in [p, a, b] {
            if i >= n {
                return Err(Error::UnknownPoint(i.to_string()));
            }
        }
        if p == a || p == b {
            return Err(Error::DegenerateProjection(
                self.labels[p].clone(),
                self.labels[a].clone(),
                self.labels[b].clone(),
            ));
        }
        Ok(self.d(p, a, b))
    }

    pub fn projection_empty(&self, p: usize, a: usize) -> bool {
        self.proj[p][a].is_empty()
    }

    /// Diameter of `π_p(a)` in the complement metric.
    pub fn diam(&self, p: usize, a: usize) -> Ext {
        self.d(p, a, a)
    }

    pub fn projection_labels(&self, p: usize, a: usize) -> Vec<&str> {
        self.proj[p][a]
            .iter()
            .map(|&i| self.spheres[p].labels[i as usize].as_str())
            .collect()
    }

    /// Number of ordered pairs `(p, a)`, `p ≠ a`, with empty projection.
    pub fn empty_projection_count(&self) -> u64 {
        let n = self.len();
        let mut c = 0;
        for p in 0..n {
            for a in 0..n {
                if a != p && self.projection_empty(p, a) {
                    c += 1;
                }
            }
        }
        c
    }

    /// Replaces `π_p(a)` and recomputes every `d_p`.
    pub fn set_projection(&mut self, p: usize, a: usize, points: Vec<u32>) {
        self.proj[p][a] = points;
        let n = self.len();
        let row = self.compute_row(p);
        self.table[p * n * n..(p + 1) * n * n].copy_from_slice(&row);
        let overrides = std::mem::take(&mut self.overrides);
        for (q, x, y, v) in overrides {
            self.override_distance(q, x, y, v);
        }
    }

    /// Forces `d_p(a,b) = d_p(b,a) = v`.
    pub fn override_distance(&mut self, p: usize, a: usize, b: usize, v: Ext) {
        let n = self.len();
        let raw = match v {
            Ext::Fin(x) => x.min(UNREACHED as u64 - 1) as u32,
            Ext::Inf => UNREACHED,
        };
        self.table[(p * n + a) * n + b] = raw;
        self.table[(p * n + b) * n + a] = raw;
        self.overrides.retain(|o| (o.0, o.1, o.2) != (p, a, b));
        self.overrides.push((p, a, b, v));
    }

    /// Same data with a different projection constant.
    pub fn with_theta(&self, theta: u64) -> ProjectionData {
        ProjectionData {
            theta,
            ..self.clone()
        }
    }

    pub fn same_index_set(&self, other: &ProjectionData) -> bool {
        self.labels == other.labels
    }

    pub fn to_dump(&self) -> ProjectionDump {
        let n = self.len();
        ProjectionDump {
            theta: self.theta,
            delta: self.delta,
            radius: self.r,
            apices: (0..n)
                .map(|p| DumpApex {
                    label: self.labels[p].clone(),
                    point: self.points.get(p).copied(),
                    sphere: self.spheres[p].labels.clone(),
                    sphere_dist: self.spheres[p]
                        .dist
                        .iter()
                        .map(|r| r.iter().map(|&d| Ext::from_raw(d)).collect())
                        .collect(),
                    projections: (0..n)
                        .filter(|&a| a != p)
                        .map(|a| (a, self.proj[p][a].iter().map(|&i| i as usize).collect()))
                        .collect(),
                })
                .collect(),
            overrides: self.overrides.clone(),
        }
    }

    pub fn from_dump(dump: ProjectionDump) -> Result<ProjectionData> {
        let n = dump.apices.len();
        let mut labels = Vec::with_capacity(n);
        let mut points = Vec::new();
        let mut spheres = Vec::with_capacity(n);
        let mut proj = Vec::with_capacity(n);
        for (p, apex) in dump.apices.into_iter().enumerate() {
            let m = apex.sphere.len();
            if apex.sphere_dist.len() != m || apex.sphere_dist.iter().any(|r| r.len() != m) {
                return Err(Error::Instance(format!(
                    "sphere distance table of apex {} is not {m}x{m}",
                    apex.label
                )));
            }
            let mut row = vec![Vec::new(); n];
            for (a, pts) in apex.projections {
                if a >= n || a == p || pts.iter().any(|&i| i >= m) {
                    return Err(Error::Instance(format!(
                        "bad projection entry ({a}, {pts:?}) at apex {}",
                        apex.label
                    )));
                }
                row[a] = pts.into_iter().map(|i| i as u32).collect();
            }
            proj.push(row);
            if let Some(pt) = apex.point {
                points.push(pt);
            }
            let dist = apex
                .sphere_dist
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|d| match d {
                            Ext::Fin(x) => (*x).min(UNREACHED as u64 - 1) as u32,
                            Ext::Inf => UNREACHED,
                        })
                        .collect()
                })
                .collect();
            spheres.push(Sphere {
                labels: apex.sphere,
                ids: Vec::new(),
                dist,
            });
            labels.push(apex.label);
        }
        if points.len() != n {
            points.clear();
        }
        Ok(ProjectionData::assemble(
            dump.theta,
            dump.delta,
            dump.radius,
            labels,
            points,
            spheres,
            proj,
            dump.overrides,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpApex {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<PointId>,
    pub sphere: Vec<String>,
    pub sphere_dist: Vec<Vec<Ext>>,
    /// `(a, indices into sphere)` for every other apex `a`.
    pub projections: Vec<(usize, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDump {
    pub theta: u64,
    pub delta: u64,
    #[serde(rename = "R")]
    pub radius: u64,
    pub apices: Vec<DumpApex>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<(usize, usize, usize, Ext)>,
}

/// `π_p(a)` by explicit geodesic enumeration, as point ids, plus whether the
/// enumeration was exhaustive.
pub fn projection_by_geodesics(
    space: &GraphSpace,
    p: PointId,
    a: PointId,
    r: u64,
    cap: usize,
) -> Result<(Vec<PointId>, bool)> {
    let geos = all_geodesics(space, p, a, cap)?;
    let mut pts: Vec<PointId> = geos
        .paths
        .iter()
        .filter_map(|path| path.get(r as usize).copied())
        .collect();
    pts.sort_unstable();
    pts.dedup();
    Ok((pts, geos.exhaustive))
}

/// Apex subset used to bound universal quantifiers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub members: Vec<usize>,
    pub description: String,
}

impl Window {
    pub fn all(data: &ProjectionData) -> Window {
        Window {
            members: (0..data.len()).collect(),
            description: format!("all {} apices", data.len()),
        }
    }

    pub fn from_members(members: Vec<usize>, description: impl Into<String>) -> Window {
        let mut members = members;
        members.sort_unstable();
        members.dedup();
        Window {
            members,
            description: description.into(),
        }
    }

    /// Apices within `radius` of `center` in the edge-rule graph at `K`.
    pub fn p_ball(data: &ProjectionData, center: usize, radius: usize, k: u64) -> Window {
        let adj = edge_rule_adjacency(data, k, &(0..data.len()).collect::<Vec<_>>());
        let dist = bfs_lists(&adj, center);
        let members = (0..data.len()).filter(|&v| dist[v] <= radius).collect();
        Window {
            members,
            description: format!("P-ball of radius {radius} around {} at K={k}", data.labels[center]),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// BFS on adjacency lists; `usize::MAX` for unreachable.
pub fn bfs_lists(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[src] = 0;
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// `X ~ Z` iff `d_Y(X,Z) ≤ K` for every `Y` in `quantifier`. `Y` with an
/// empty projection of `X` or `Z` does not obstruct; `X`, `Z` whose mutual
/// projections are empty (different components) are never joined.
pub fn edge_rule_adjacency(data: &ProjectionData, k: u64, quantifier: &[usize]) -> Vec<Vec<usize>> {
    let n = data.len();
    (0..n)
        .into_par_iter()
        .map(|x| {
            (0..n)
                .filter(|&z| {
                    z != x
                        && !data.projection_empty(x, z)
                        && quantifier.iter().all(|&y| {
                            y == x
                                || y == z
                                || data.projection_empty(y, x)
                                || data.projection_empty(y, z)
                                || !data.d(y, x, z).exceeds(k)
                        })
                })
                .collect()
        })
        .collect()
}

/// Every `(c, a, b)` with `a, b ≠ c` drawn from the window.
pub fn window_triples(w: &Window) -> Vec<(usize, usize, usize)> {
    let m = &w.members;
    let mut out = Vec::new();
    for &c in m {
        for &a in m {
            for &b in m {
                if a != c && b != c && a <= b {
                    out.push((a, b, c));
                }
            }
        }
    }
    out
}

/// For samples `(a, b, c)`: when some geodesic `[a,b]` misses the open ball
/// `B_{R+2δ}(c)`, require `d_c(a,b) ≤ 4δ`.
pub fn bounded_proj_audit(
    data: &ProjectionData,
    space: &GraphSpace,
    samples: &[(usize, usize, usize)],
) -> Report {
    let bound = 4 * data.delta;
    let radius = data.r + 2 * data.delta;
    let parts: Vec<Report> = samples
        .par_iter()
        .map(|&(a, b, c)| {
            let mut rep = Report::new("bounded-projection");
            if a == c || b == c || data.points.is_empty() {
                rep.skipped += 1;
                return rep;
            }
            if data.projection_empty(c, a) || data.projection_empty(c, b) {
                rep.skipped += 1;
                return rep;
            }
            let (pa, pb, pc) = (data.points[a], data.points[b], data.points[c]);
            let from_c = space.bfs(pc);
            let inside = |v: PointId| from_c[v] != UNREACHED && (from_c[v] as u64) < radius;
            if inside(pa) || inside(pb) {
                rep.skipped += 1;
                return rep;
            }
            let direct = space.bfs(pa)[pb];
            let around = space.bfs_avoiding(pa, inside)[pb];
            if direct == UNREACHED || around != direct {
                // every geodesic meets the ball
                rep.skipped += 1;
                return rep;
            }
            rep.checked += 1;
            let v = data.d(c, a, b);
            if v.exceeds(bound) {
                rep.violation(Witness {
                    indices: vec![c, a, b],
                    labels: vec![data.labels[c].clone(), data.labels[a].clone(), data.labels[b].clone()],
                    values: vec![v],
                    detail: format!("geodesic misses B_{radius}(c) but d_c(a,b) = {v} > {bound}"),
                });
            }
            rep
        })
        .collect();
    let mut rep = Report::new("bounded-projection")
        .stamp("bound", bound)
        .stamp("ball_radius", radius)
        .stamp("delta", data.delta);
    for p in parts {
        rep.absorb(p);
    }
    let mut rep = rep.finish();
    if rep.checked == 0 && rep.violations == 0 {
        rep.verdict = Verdict::NotApplicable;
    }
    rep
}

/// Largest projection diameter, against `4δ`.
pub fn diam_audit(data: &ProjectionData, window: &Window) -> Report {
    let bound = 4 * data.delta;
    let mut rep = Report::new("projection-diameter")
        .stamp("bound", bound)
        .stamp("window", &window.description);
    let mut max = Ext::ZERO;
    for &p in &window.members {
        for &a in &window.members {
            if a == p {
                continue;
            }
            if data.projection_empty(p, a) {
                rep.skipped += 1;
                continue;
            }
            rep.checked += 1;
            let d = data.diam(p, a);
            max = max.max(d);
            if d.exceeds(bound) {
                rep.violation(Witness {
                    indices: vec![p, a],
                    labels: vec![data.labels[p].clone(), data.labels[a].clone()],
                    values: vec![d],
                    detail: format!("diam pi_p(a) = {d} > {bound}"),
                });
            }
        }
    }
    rep.set_stamp("max_diameter", max);
    if rep.skipped > 0 {
        let s = rep.skipped;
        rep.note(format!("{s} empty projections skipped"));
    }
    rep.finish()
}

/// Points of `[x, z]` (one chosen geodesic) used to localise apices with
/// large projections.
pub fn chosen_geodesic(space: &GraphSpace, x: PointId, z: PointId) -> Option<Vec<PointId>> {
    first_geodesic(space, x, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::bass_serre::BassSerreSpace;
    use crate::metric::{cycle_graph, path_graph, subdivide, GeodesicSpace};

    /// Unsubdivided vertices of a small Bass-Serre tree.
    pub(crate) fn tree_data(h: u32, k: u32, trunc: u32) -> (Arc<GeodesicSpace>, ProjectionData) {
        let bs = BassSerreSpace::new(h, k, 38, trunc).unwrap();
        let apices = bs.vertex_ids();
        let space = Arc::new(GeodesicSpace::BassSerre(bs));
        let fam = ApexFamily::new(space.clone(), apices, 38, 16, 1).unwrap();
        (space, build_projection_data(&fam, 121))
    }

    #[test]
    fn family_validation() {
        let space = Arc::new(GeodesicSpace::Graph(subdivide(&path_graph(3), 38)));
        let g = space.graph();
        let apices = vec![g.id("p0").unwrap(), g.id("p1").unwrap(), g.id("p2").unwrap()];
        assert!(ApexFamily::new(space.clone(), apices.clone(), 38, 16, 1).is_ok());
        assert!(matches!(
            ApexFamily::new(space.clone(), apices.clone(), 38, 17, 1),
            Err(Error::RadiusOutOfRange { .. })
        ));
        assert!(matches!(
            ApexFamily::new(space.clone(), apices.clone(), 39, 16, 1),
            Err(Error::Separation(..))
        ));
        let close = vec![g.id("p0").unwrap(), g.id("p0~p1@3").unwrap()];
        assert!(ApexFamily::exploratory(space, close, 16, 1).is_err());
    }

    #[test]
    fn tree_projections_are_single_points() {
        let (space, data) = tree_data(2, 3, 3);
        let g = space.graph();
        for p in 0..data.len() {
            for a in 0..data.len() {
                if a == p {
                    continue;
                }
                assert_eq!(data.proj[p][a].len(), 1);
                assert_eq!(data.diam(p, a), Ext::ZERO);
                // direct trace: the point of [p,a] at distance R from p
                let path = first_geodesic(g, data.points[p], data.points[a]).unwrap();
                let z = data.spheres[p].ids[data.proj[p][a][0] as usize];
                assert_eq!(path[16], z);
            }
        }
    }

    #[test]
    fn tree_branches_give_infinity() {
        let (space, data) = tree_data(2, 3, 3);
        let GeodesicSpace::BassSerre(bs) = &*space else { unreachable!() };
        let g = space.graph();
        let oracle = |p: usize, a: usize, b: usize| -> Ext {
            let (pp, pa, pb) = (data.points[p], data.points[a], data.points[b]);
            let za = first_geodesic(g, pp, pa).unwrap()[16];
            let zb = first_geodesic(g, pp, pb).unwrap()[16];
            crate::metric::complement_distance(g, pp, 16, za, zb).unwrap()
        };
        let _ = bs;
        let n = data.len();
        let mut saw_inf = false;
        for p in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if a == p || b == p {
                        continue;
                    }
                    let d = data.proj_distance(p, a, b).unwrap();
                    assert_eq!(d, oracle(p, a, b));
                    assert_eq!(d, data.d(p, b, a));
                    saw_inf |= d == Ext::Inf;
                }
            }
        }
        assert!(saw_inf);
        assert!(data.proj_distance(0, 0, 1).is_err());
    }

    #[test]
    fn cycle_projections_match_geodesic_enumeration() {
        let g = cycle_graph(40);
        let apices = vec![0, 10, 20, 30];
        let space = Arc::new(GeodesicSpace::Graph(g.clone()));
        let fam = ApexFamily::exploratory(space, apices.clone(), 4, 1).unwrap();
        let data = build_projection_data(&fam, 121);
        for (i, &p) in apices.iter().enumerate() {
            for (j, &a) in apices.iter().enumerate() {
                if i == j {
                    continue;
                }
                let (want, exhaustive) = projection_by_geodesics(&g, p, a, 4, 1000).unwrap();
                assert!(exhaustive);
                let mut got: Vec<PointId> = data.proj[i][j]
                    .iter()
                    .map(|&k| data.spheres[i].ids[k as usize])
                    .collect();
                got.sort_unstable();
                assert_eq!(got, want);
            }
        }
        // antipodal apex: both sphere points, joined the long way round
        assert_eq!(data.diam(0, 2), Ext::Fin(40 - 8));
    }

    #[test]
    fn disconnected_apices_have_empty_projections() {
        let g = GraphSpace::from_edges(
            (0..4).map(|i| format!("v{i}")),
            &[(0, 1)],
        )
        .unwrap();
        let space = Arc::new(GeodesicSpace::Graph(g));
        let fam = ApexFamily::exploratory(space, vec![0, 2], 1, 1).unwrap();
        let data = build_projection_data(&fam, 1);
        assert!(data.projection_empty(0, 1));
        assert_eq!(data.empty_projection_count(), 2);
        let rep = diam_audit(&data, &Window::all(&data));
        assert_eq!(rep.verdict, Verdict::Vacuous);
        assert_eq!(rep.skipped, 2);
    }

    #[test]
    fn dump_round_trip() {
        let (_, mut data) = tree_data(2, 2, 3);
        data.override_distance(0, 1, 2, Ext::Fin(7));
        let json = serde_json::to_string(&data.to_dump()).unwrap();
        let back = ProjectionData::from_dump(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.d(0, 1, 2), Ext::Fin(7));
        for p in 0..data.len() {
            for a in 0..data.len() {
                for b in 0..data.len() {
                    assert_eq!(back.d(p, a, b), data.d(p, a, b));
                }
            }
        }
    }

    #[test]
    fn bounded_projection_on_tree_and_cycle() {
        let (space, data) = tree_data(2, 3, 3);
        let w = Window::all(&data);
        let rep = bounded_proj_audit(&data, space.graph(), &window_triples(&w));
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.checked > 0);

        // 80-cycle with δ_op = 1 is far from 1-hyperbolic: the arc 20..40
        // clears B_6(0), yet 40 is antipodal to 0 and projects to both sphere
        // points, which the complement metric puts 72 apart.
        let g = cycle_graph(80);
        let apices = vec![0, 20, 40, 60];
        let cspace = Arc::new(GeodesicSpace::Graph(g.clone()));
        let fam = ApexFamily::exploratory(cspace, apices, 4, 1).unwrap();
        let cdata = build_projection_data(&fam, 121);
        let oracle = crate::metric::complement_distance(&g, 0, 4, 4, 76).unwrap();
        assert_eq!(oracle, Ext::Fin(72));
        assert_eq!(cdata.d(0, 1, 2), oracle);
        let rep = bounded_proj_audit(&cdata, &g, &[(1, 2, 0), (1, 3, 0)]);
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.witnesses[0].indices, vec![0, 1, 2]);
        assert_eq!(rep.witnesses[0].values, vec![oracle]);
        // (20, 60) also has a geodesic through 40 that clears the ball
        assert_eq!((rep.checked, rep.violations), (2, 2));
        let rep = bounded_proj_audit(&cdata, &g, &[(2, 2, 1)]);
        assert_eq!(rep.verdict, Verdict::Pass);
        // a = b = 40 seen from 20: trivial geodesic far from the ball
        let rep = bounded_proj_audit(&cdata, &g, &[(2, 0, 1)]);
        // every geodesic 40 -> 0 passes 20 or 60; the one through 20 meets
        // B_6(20), the one through 60 does not
        assert_eq!(rep.checked, 1);
    }

    #[test]
    fn p_ball_window_on_tree() {
        let (_, data) = tree_data(2, 3, 8);
        // tree radius 8 has 91 vertices; P is the tree
        assert_eq!(data.len(), 91);
        let w = Window::p_ball(&data, 0, 6, 363);
        assert_eq!(w.len(), 43);
    }
}

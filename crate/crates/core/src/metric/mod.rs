//! Exact geodesic metric spaces with unit-length edges.
//!
//! Every space is a finite graph view: either an explicit graph or a
//! truncation of a lazy Bass-Serre tree (see [`bass_serre`]). Non-unit edge
//! lengths are modelled by subdivision.

pub mod bass_serre;
pub mod complement;
pub mod format;
pub mod geodesic;
pub mod thin;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::ext::Ext;

pub use bass_serre::{BassSerreSpace, PointKey, VertexKey};
pub use complement::{complement_distance, detour_audit, DetourReport, DetourSample};
pub use geodesic::{all_geodesics, geodesic_points_at, Geodesics, DEFAULT_GEODESIC_CAP};
pub use thin::{thin_delta, ThinTriangleReport};

pub type PointId = usize;

/// Marker for "not reached" in raw BFS rows.
pub const UNREACHED: u32 = u32::MAX;

/// An explicit finite graph with labelled vertices and unit edges.
#[derive(Clone, Debug)]
pub struct GraphSpace {
    labels: Vec<String>,
    index: HashMap<String, PointId>,
    adj: Vec<Vec<PointId>>,
}

impl GraphSpace {
    pub fn from_edges<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        edges: &[(PointId, PointId)],
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Instance(format!("duplicate vertex label {l:?}")));
            }
        }
        let mut adj = vec![Vec::new(); labels.len()];
        for &(u, v) in edges {
            if u >= labels.len() || v >= labels.len() {
                return Err(Error::UnknownPoint(format!("{}", u.max(v))));
            }
            if u == v {
                return Err(Error::Instance(format!("self-loop at {}", labels[u])));
            }
            if !adj[u].contains(&v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        Ok(GraphSpace { labels, index, adj })
    }

    pub fn from_labelled_edges(labels: Vec<String>, edges: &[(String, String)]) -> Result<Self> {
        let lookup: HashMap<&str, PointId> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut raw = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let ia = *lookup.get(a.as_str()).ok_or_else(|| Error::UnknownPoint(a.clone()))?;
            let ib = *lookup.get(b.as_str()).ok_or_else(|| Error::UnknownPoint(b.clone()))?;
            raw.push((ia, ib));
        }
        GraphSpace::from_edges(labels, &raw)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.labels[p]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id(&self, label: &str) -> Result<PointId> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))
    }

    pub fn neighbors(&self, p: PointId) -> &[PointId] {
        &self.adj[p]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (PointId, PointId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    fn check(&self, p: PointId) -> Result<()> {
        if p < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(p.to_string()))
        }
    }

    /// Raw BFS row from `src`; unreachable entries hold [`UNREACHED`].
    pub fn bfs(&self, src: PointId) -> Vec<u32> {
        self.bfs_avoiding(src, |_| false)
    }

    /// BFS that never enters a blocked vertex. `src` itself is always entered.
    pub fn bfs_avoiding(&self, src: PointId, blocked: impl Fn(PointId) -> bool) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.len()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            for &v in &self.adj[u] {
                if dist[v] == UNREACHED && !blocked(v) {
                    dist[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Exact shortest-path length, `Inf` across components.
    pub fn distance(&self, x: PointId, y: PointId) -> Result<Ext> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(Ext::ZERO);
        }
        Ok(Ext::from_raw(self.bfs(x)[y]))
    }

    /// Points of the open ball `B_r(p)`.
    pub fn open_ball(&self, p: PointId, r: u64) -> Vec<PointId> {
        let row = self.bfs(p);
        (0..self.len())
            .filter(|&v| row[v] != UNREACHED && (row[v] as u64) < r)
            .collect()
    }

    /// Points at distance exactly `r` from `p`.
    pub fn sphere(&self, p: PointId, r: u64) -> Vec<PointId> {
        let row = self.bfs(p);
        (0..self.len()).filter(|&v| row[v] as u64 == r).collect()
    }

    /// Component id for each vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.len()];
        let mut next = 0;
        for s in 0..self.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let row = self.bfs(s);
            for (v, &d) in row.iter().enumerate() {
                if d != UNREACHED {
                    comp[v] = next;
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_forest(&self) -> bool {
        let comps = self.components();
        let n_comp = comps.iter().copied().max().map_or(0, |m| m + 1);
        self.edge_count() + n_comp == self.len()
    }
}

/// Row cache for repeated distance lookups inside one computation.
///
/// Each row is a plain BFS; caching never changes results.
pub struct DistanceCache<'a> {
    space: &'a GraphSpace,
    rows: HashMap<PointId, Vec<u32>>,
}

impl<'a> DistanceCache<'a> {
    pub fn new(space: &'a GraphSpace) -> Self {
        DistanceCache {
            space,
            rows: HashMap::new(),
        }
    }

    pub fn row(&mut self, p: PointId) -> &[u32] {
        let space = self.space;
        self.rows.entry(p).or_insert_with(|| space.bfs(p))
    }

    pub fn raw(&mut self, x: PointId, y: PointId) -> u32 {
        if let Some(r) = self.rows.get(&y) {
            return r[x];
        }
        self.row(x)[y]
    }

    pub fn dist(&mut self, x: PointId, y: PointId) -> Ext {
        Ext::from_raw(self.raw(x, y))
    }
}

/// Either kind of backend behind one type.
#[derive(Clone, Debug)]
pub enum GeodesicSpace {
    Graph(GraphSpace),
    BassSerre(BassSerreSpace),
}

impl GeodesicSpace {
    pub fn graph(&self) -> &GraphSpace {
        match self {
            GeodesicSpace::Graph(g) => g,
            GeodesicSpace::BassSerre(b) => b.graph(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeodesicSpace::Graph(_) => "graph",
            GeodesicSpace::BassSerre(_) => "bass_serre",
        }
    }

    pub fn is_tree_backend(&self) -> bool {
        match self {
            GeodesicSpace::Graph(g) => g.is_forest(),
            GeodesicSpace::BassSerre(_) => true,
        }
    }
}

/// Path graph `p0 - p1 - ... - p{n-1}`.
pub fn path_graph(n: usize) -> GraphSpace {
    let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    GraphSpace::from_edges(labels, &edges).expect("path graph")
}

/// Cycle graph on `n ≥ 3` vertices labelled `c0..`.
pub fn cycle_graph(n: usize) -> GraphSpace {
    let labels: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    GraphSpace::from_edges(labels, &edges).expect("cycle graph")
}

/// `w × h` grid graph, vertex `(x, y)` labelled `gX_Y`.
pub fn grid_graph(w: usize, h: usize) -> GraphSpace {
    let labels: Vec<String> = (0..h)
        .flat_map(|y| (0..w).map(move |x| format!("g{x}_{y}")))
        .collect();
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let id = y * w + x;
            if x + 1 < w {
                edges.push((id, id + 1));
            }
            if y + 1 < h {
                edges.push((id, id + w));
            }
        }
    }
    GraphSpace::from_edges(labels, &edges).expect("grid graph")
}

/// Subdivides every edge of `g` into `s` unit edges. Original vertices keep
/// their labels; new points are labelled `u~v@i`.
pub fn subdivide(g: &GraphSpace, s: usize) -> GraphSpace {
    assert!(s >= 1);
    let mut labels: Vec<String> = g.labels().to_vec();
    let mut edges = Vec::new();
    for (u, v) in g.edges() {
        let mut prev = u;
        for i in 1..s {
            let id = labels.len();
            labels.push(format!("{}~{}@{i}", g.label(u), g.label(v)));
            edges.push((prev, id));
            prev = id;
        }
        edges.push((prev, v));
    }
    GraphSpace::from_edges(labels, &edges).expect("subdivision")
}

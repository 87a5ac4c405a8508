//! Lazy Bass-Serre tree of `H * K` with subdivided edges.
//!
//! Vertices are cosets `gH` and `gK`, keyed by the canonical coset
//! representative (the normal form of `g` with any trailing letter of the
//! coset's factor removed). The edge labelled `g` joins `gH` to `gK` and is
//! subdivided into `s` unit segments; interior points carry the offset from
//! the `gH` end. Group elements act by left multiplication, exactly and
//! without truncation. A finite [`GraphSpace`] view of the ball of a given
//! tree radius around the base vertex `H` serves all BFS-based queries.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metric::{GraphSpace, PointId};
use crate::word::{Factor, FreeProduct, Word};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexKey {
    pub factor: Factor,
    pub rep: Word,
}

impl VertexKey {
    pub fn coset(factor: Factor, g: &Word) -> VertexKey {
        VertexKey {
            factor,
            rep: g.strip_trailing(factor),
        }
    }

    pub fn base(factor: Factor) -> VertexKey {
        VertexKey {
            factor,
            rep: Word::identity(),
        }
    }
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.factor, self.rep)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointKey {
    Vertex(VertexKey),
    /// Point on edge `edge` at `offset ∈ 1..s` from the `edge·H` end.
    Interior { edge: Word, offset: u32 },
}

impl fmt::Display for PointKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointKey::Vertex(v) => v.fmt(f),
            PointKey::Interior { edge, offset } => write!(f, "E[{edge}]@{offset}"),
        }
    }
}

impl FromStr for PointKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<PointKey> {
        let bad = || Error::UnknownPoint(s.to_string());
        let (head, rest) = s.split_once('[').ok_or_else(bad)?;
        let (inner, tail) = rest.split_once(']').ok_or_else(bad)?;
        let word: Word = inner.parse()?;
        match head {
            "H" | "K" if tail.is_empty() => {
                let factor = if head == "H" { Factor::H } else { Factor::K };
                Ok(PointKey::Vertex(VertexKey { factor, rep: word }))
            }
            "E" => {
                let offset = tail
                    .strip_prefix('@')
                    .and_then(|o| o.parse().ok())
                    .ok_or_else(bad)?;
                Ok(PointKey::Interior { edge: word, offset })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BassSerreSpace {
    group: FreeProduct,
    subdivision: u32,
    truncation: u32,
    graph: GraphSpace,
    keys: Vec<PointKey>,
    index: HashMap<PointKey, PointId>,
}

impl BassSerreSpace {
    /// Builds the lazy tree with a finite view of every vertex within tree
    /// distance `truncation` of the base vertex `H`, plus the subdivided edges
    /// between them.
    pub fn new(h_order: u32, k_order: u32, subdivision: u32, truncation: u32) -> Result<Self> {
        let group = FreeProduct::new(h_order, k_order)?;
        if subdivision == 0 {
            return Err(Error::Instance("subdivision must be positive".into()));
        }
        let mut keys = Vec::new();
        let mut index = HashMap::new();
        let mut depth = Vec::new();
        let mut queue = VecDeque::new();

        let base = PointKey::Vertex(VertexKey::base(Factor::H));
        index.insert(base.clone(), 0);
        keys.push(base);
        depth.push(0u32);
        queue.push_back(0usize);

        let mut edges = Vec::new();
        while let Some(u) = queue.pop_front() {
            let PointKey::Vertex(v) = keys[u].clone() else {
                unreachable!()
            };
            if depth[u] == truncation {
                continue;
            }
            for (edge, other) in incident(&group, &v) {
                let other = PointKey::Vertex(other);
                if index.contains_key(&other) {
                    continue;
                }
                let id = keys.len();
                index.insert(other.clone(), id);
                keys.push(other);
                depth.push(depth[u] + 1);
                queue.push_back(id);
                edges.push((u, id, edge, v.factor));
            }
        }

        let mut adjacency = Vec::new();
        for (u, w, edge, from) in edges {
            // Walk from the H end to the K end.
            let (h_end, k_end) = if from == Factor::H { (u, w) } else { (w, u) };
            let mut prev = h_end;
            for offset in 1..subdivision {
                let key = PointKey::Interior {
                    edge: edge.clone(),
                    offset,
                };
                let id = keys.len();
                index.insert(key.clone(), id);
                keys.push(key);
                adjacency.push((prev, id));
                prev = id;
            }
            adjacency.push((prev, k_end));
        }
        let labels: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        let graph = GraphSpace::from_edges(labels, &adjacency)?;
        Ok(BassSerreSpace {
            group,
            subdivision,
            truncation,
            graph,
            keys,
            index,
        })
    }

    pub fn group(&self) -> &FreeProduct {
        &self.group
    }

    pub fn subdivision(&self) -> u32 {
        self.subdivision
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn graph(&self) -> &GraphSpace {
        &self.graph
    }

    pub fn key(&self, p: PointId) -> &PointKey {
        &self.keys[p]
    }

    pub fn locate(&self, key: &PointKey) -> Option<PointId> {
        self.index.get(key).copied()
    }

    pub fn base_vertex(&self, factor: Factor) -> PointKey {
        PointKey::Vertex(VertexKey::base(factor))
    }

    /// Ids of the unsubdivided vertices in the view.
    pub fn vertex_ids(&self) -> Vec<PointId> {
        (0..self.keys.len())
            .filter(|&p| matches!(self.keys[p], PointKey::Vertex(_)))
            .collect()
    }

    /// Left action of a group element on a point.
    pub fn act(&self, g: &Word, x: &PointKey) -> PointKey {
        match x {
            PointKey::Vertex(v) => {
                PointKey::Vertex(VertexKey::coset(v.factor, &self.group.mul(g, &v.rep)))
            }
            PointKey::Interior { edge, offset } => PointKey::Interior {
                edge: self.group.mul(g, edge),
                offset: *offset,
            },
        }
    }

    /// Generators `w f w⁻¹` of the stabilizer `w F w⁻¹` of the vertex `wF`,
    /// one per nontrivial element of `F`.
    pub fn stabilizer(&self, v: &VertexKey) -> Vec<Word> {
        let inv = self.group.inverse(&v.rep);
        (1..self.group.order(v.factor))
            .map(|p| {
                let mid = self.group.mul(&v.rep, &self.group.letter(v.factor, p));
                self.group.mul(&mid, &inv)
            })
            .collect()
    }

    /// Exact distance between lazy points, independent of the view.
    pub fn lazy_distance(&self, x: &PointKey, y: &PointKey) -> u64 {
        let s = self.subdivision as u64;
        let ends = |p: &PointKey| -> Vec<(VertexKey, u64)> {
            match p {
                PointKey::Vertex(v) => vec![(v.clone(), 0)],
                PointKey::Interior { edge, offset } => vec![
                    (VertexKey::coset(Factor::H, edge), *offset as u64),
                    (VertexKey::coset(Factor::K, edge), s - *offset as u64),
                ],
            }
        };
        if let (
            PointKey::Interior { edge: e1, offset: o1 },
            PointKey::Interior { edge: e2, offset: o2 },
        ) = (x, y)
        {
            if e1 == e2 {
                return o1.abs_diff(*o2) as u64;
            }
        }
        let mut best = u64::MAX;
        for (a, oa) in ends(x) {
            for (b, ob) in ends(y) {
                best = best.min(oa + ob + s * tree_distance(&a, &b) as u64);
            }
        }
        best
    }
}

/// Edges at a vertex and the vertex at their far end.
pub fn incident(group: &FreeProduct, v: &VertexKey) -> Vec<(Word, VertexKey)> {
    (0..group.order(v.factor))
        .map(|p| {
            let edge = group.mul(&v.rep, &group.letter(v.factor, p));
            let other = VertexKey::coset(v.factor.other(), &edge);
            (edge, other)
        })
        .collect()
}

/// Vertices on the tree geodesic from the base vertex `H` to `v`, inclusive.
pub fn path_from_base(v: &VertexKey) -> Vec<VertexKey> {
    let letters = v.rep.letters();
    let mut path = vec![VertexKey::base(Factor::H)];
    let first_is_k = letters.first().map(|l| l.factor) == Some(Factor::K);
    if first_is_k || (letters.is_empty() && v.factor == Factor::K) {
        path.push(VertexKey::base(Factor::K));
    }
    for (i, l) in letters.iter().enumerate() {
        path.push(VertexKey {
            factor: l.factor.other(),
            rep: v.rep.prefix(i + 1),
        });
    }
    debug_assert_eq!(path.last(), Some(v));
    path
}

/// Distance between vertices of the unsubdivided tree.
pub fn tree_distance(a: &VertexKey, b: &VertexKey) -> usize {
    let pa = path_from_base(a);
    let pb = path_from_base(b);
    let common = pa.iter().zip(&pb).take_while(|(x, y)| x == y).count();
    pa.len() + pb.len() - 2 * common
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::Ext;

    fn t23(trunc: u32) -> BassSerreSpace {
        BassSerreSpace::new(2, 3, 38, trunc).unwrap()
    }

    #[test]
    fn valences_match_factor_orders() {
        let bs = BassSerreSpace::new(2, 3, 1, 4).unwrap();
        let g = bs.graph();
        for p in bs.vertex_ids() {
            let PointKey::Vertex(v) = bs.key(p) else { unreachable!() };
            let depth = tree_distance(&VertexKey::base(Factor::H), v);
            if depth < 4 {
                let want = bs.group().order(v.factor) as usize;
                assert_eq!(g.neighbors(p).len(), want, "{v}");
            }
        }
        assert!(g.is_forest());
    }

    #[test]
    fn truncation_sizes() {
        // layers 1, 2, 4, 4, 8, 8, 16
        let bs = BassSerreSpace::new(2, 3, 1, 6).unwrap();
        assert_eq!(bs.vertex_ids().len(), 43);
    }

    #[test]
    fn hk_translate_of_base() {
        let bs = t23(3);
        let g = bs.group().parse("h1.k1").unwrap();
        let base = bs.base_vertex(Factor::H);
        let moved = bs.act(&g, &base);
        assert_eq!(moved.to_string(), "H[h1.k1]");
        let (a, b) = (bs.locate(&base).unwrap(), bs.locate(&moved).unwrap());
        // BFS on the view
        assert_eq!(bs.graph().distance(a, b).unwrap(), Ext::Fin(76));
        assert_eq!(bs.lazy_distance(&base, &moved), 76);
    }

    #[test]
    fn stabilizers_fix_their_vertex() {
        let bs = t23(3);
        for p in bs.vertex_ids() {
            let PointKey::Vertex(v) = bs.key(p).clone() else { unreachable!() };
            for g in bs.stabilizer(&v) {
                assert_eq!(bs.act(&g, bs.key(p)), PointKey::Vertex(v.clone()));
            }
        }
    }

    #[test]
    fn h_swaps_the_base_k_neighbours() {
        let bs = t23(2);
        let h = bs.group().letter(Factor::H, 1);
        let k_base = bs.base_vertex(Factor::K);
        assert_eq!(bs.act(&h, &k_base).to_string(), "K[h1]");
        assert_eq!(bs.act(&h, &bs.base_vertex(Factor::H)), bs.base_vertex(Factor::H));
    }

    #[test]
    fn lazy_distance_matches_bfs_oracle() {
        let bs = BassSerreSpace::new(2, 3, 3, 4).unwrap();
        let g = bs.graph();
        for x in 0..g.len() {
            let row = g.bfs(x);
            for y in 0..g.len() {
                assert_eq!(
                    bs.lazy_distance(bs.key(x), bs.key(y)),
                    row[y] as u64,
                    "{} {}",
                    bs.key(x),
                    bs.key(y)
                );
            }
        }
    }

    #[test]
    fn vertex_distance_scales_with_subdivision() {
        let coarse = BassSerreSpace::new(2, 3, 1, 5).unwrap();
        let fine = BassSerreSpace::new(2, 3, 38, 5).unwrap();
        for a in coarse.vertex_ids() {
            let row = coarse.graph().bfs(a);
            let fa = fine.locate(coarse.key(a)).unwrap();
            let frow = fine.graph().bfs(fa);
            for b in coarse.vertex_ids() {
                let fb = fine.locate(coarse.key(b)).unwrap();
                assert_eq!(frow[fb], 38 * row[b]);
            }
        }
    }

    #[test]
    fn keys_round_trip_through_text() {
        let bs = BassSerreSpace::new(2, 3, 4, 3).unwrap();
        for p in 0..bs.graph().len() {
            let parsed: PointKey = bs.graph().label(p).parse().unwrap();
            assert_eq!(&parsed, bs.key(p));
        }
    }

    #[test]
    fn action_is_an_isometry_and_homomorphism() {
        let bs = BassSerreSpace::new(2, 3, 5, 3).unwrap();
        let gp = *bs.group();
        let words: Vec<Word> = ["h1", "k1", "k2.h1", "h1.k1.h1"]
            .iter()
            .map(|s| gp.parse(s).unwrap())
            .collect();
        let pts: Vec<PointKey> = (0..bs.graph().len()).step_by(7).map(|p| bs.key(p).clone()).collect();
        for g in &words {
            for h in &words {
                for x in &pts {
                    let gh = gp.mul(g, h);
                    assert_eq!(bs.act(&gh, x), bs.act(g, &bs.act(h, x)));
                }
            }
            for x in &pts {
                for y in &pts {
                    assert_eq!(
                        bs.lazy_distance(&bs.act(g, x), &bs.act(g, y)),
                        bs.lazy_distance(x, y)
                    );
                }
            }
        }
    }
}

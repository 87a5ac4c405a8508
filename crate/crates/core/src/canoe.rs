//! Angles and canoeing paths in the projection complex.

use serde::{Deserialize, Serialize};

use crate::complex::ProjectionComplex;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::report::{Report, Verdict, Witness};

/// A path in P cut into segments at its large-angle points. Each segment is
/// a geodesic, or two geodesics joined at `split`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanoePath {
    pub vertices: Vec<usize>,
    /// Positions of the large-angle points, strictly increasing and
    /// strictly inside the path.
    pub junctions: Vec<usize>,
    /// Positions where a segment changes from one geodesic to the next.
    pub splits: Vec<usize>,
}

/// On-disk form: apex labels and positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanoePathFile {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub junctions: Vec<usize>,
    #[serde(default)]
    pub splits: Vec<usize>,
}

impl CanoePath {
    pub fn new(vertices: Vec<usize>, junctions: Vec<usize>, splits: Vec<usize>) -> Result<CanoePath> {
        let n = vertices.len();
        if n == 0 {
            return Err(Error::Canoe("empty path".into()));
        }
        for list in [&junctions, &splits] {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Canoe("positions must be strictly increasing".into()));
            }
            if let Some(&p) = list.iter().find(|&&p| p == 0 || p + 1 >= n) {
                return Err(Error::IndexOutOfRange(p, n));
            }
        }
        if let Some(p) = splits.iter().find(|p| junctions.contains(p)) {
            return Err(Error::Canoe(format!("position {p} is both a junction and a split")));
        }
        let path = CanoePath {
            vertices,
            junctions,
            splits,
        };
        if let Some(i) = path.segments().iter().position(|s| s.2.len() > 1) {
            return Err(Error::Canoe(format!("segment {i} has more than one split")));
        }
        Ok(path)
    }

    /// One geodesic, no large-angle points.
    pub fn geodesic(vertices: Vec<usize>) -> Result<CanoePath> {
        CanoePath::new(vertices, Vec::new(), Vec::new())
    }

    pub fn from_file(pc: &ProjectionComplex, f: &CanoePathFile) -> Result<CanoePath> {
        let vertices = f
            .vertices
            .iter()
            .map(|l| pc.data.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        CanoePath::new(vertices, f.junctions.clone(), f.splits.clone())
    }

    pub fn to_file(&self, pc: &ProjectionComplex) -> CanoePathFile {
        CanoePathFile {
            vertices: pc.labels(&self.vertices),
            junctions: self.junctions.clone(),
            splits: self.splits.clone(),
        }
    }

    /// `(start, end, splits)` positions of each segment.
    pub fn segments(&self) -> Vec<(usize, usize, Vec<usize>)> {
        let mut cuts = vec![0];
        cuts.extend(&self.junctions);
        cuts.push(self.vertices.len() - 1);
        cuts.windows(2)
            .map(|w| {
                let inner = self.splits.iter().copied().filter(|&p| p > w[0] && p < w[1]).collect();
                (w[0], w[1], inner)
            })
            .collect()
    }

    pub fn large_angle_points(&self) -> Vec<usize> {
        self.junctions.iter().map(|&p| self.vertices[p]).collect()
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.vertices[0], *self.vertices.last().unwrap())
    }

    /// The contiguous subpath between positions `a ≤ b`.
    pub fn subpath(&self, a: usize, b: usize) -> Result<CanoePath> {
        if a > b || b >= self.vertices.len() {
            return Err(Error::IndexOutOfRange(b, self.vertices.len()));
        }
        let inside = |p: &usize| *p > a && *p < b;
        CanoePath::new(
            self.vertices[a..=b].to_vec(),
            self.junctions.iter().copied().filter(inside).map(|p| p - a).collect(),
            self.splits.iter().copied().filter(inside).map(|p| p - a).collect(),
        )
    }
}

/// `d_{X_i}(X_{i-1}, X_{i+1})`.
pub fn angle(pc: &ProjectionComplex, path: &[usize], i: usize) -> Result<Ext> {
    if i == 0 || i + 1 >= path.len() {
        return Err(Error::IndexOutOfRange(i, path.len()));
    }
    pc.data.proj_distance(path[i], path[i - 1], path[i + 1])
}

fn witness(pc: &ProjectionComplex, idx: &[usize], values: Vec<Ext>, detail: impl Into<String>) -> Witness {
    Witness {
        indices: idx.to_vec(),
        labels: pc.labels(idx),
        values,
        detail: detail.into(),
    }
}

fn is_geodesic(pc: &ProjectionComplex, seg: &[usize]) -> bool {
    pc.distance(seg[0], *seg.last().unwrap()) == Some(seg.len() - 1)
}

/// Segments embedded and (bi)geodesic, consecutive vertices adjacent, and
/// angle at least `c` at every junction.
pub fn validate_canoe(pc: &ProjectionComplex, path: &CanoePath, c: u64) -> Report {
    let mut rep = Report::new("canoe")
        .stamp("C", c)
        .stamp("large_angle_points", path.junctions.len());
    let v = &path.vertices;
    for (i, w) in v.windows(2).enumerate() {
        rep.checked += 1;
        if !pc.adjacent(w[0], w[1]) {
            rep.violation(witness(pc, w, vec![], format!("step {i} is not an edge of P")));
        }
    }
    for (start, end, splits) in path.segments() {
        let seg = &v[start..=end];
        rep.checked += 1;
        if start == end {
            rep.violation(witness(pc, seg, vec![], "degenerate segment"));
            continue;
        }
        let mut sorted = seg.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seg.len() {
            rep.violation(witness(pc, &[seg[0], seg[seg.len() - 1]], vec![], "segment is not embedded"));
        }
        let pieces: Vec<&[usize]> = match splits.first() {
            None => vec![seg],
            Some(&s) => vec![&v[start..=s], &v[s..=end]],
        };
        for piece in pieces {
            rep.checked += 1;
            if !is_geodesic(pc, piece) {
                rep.violation(witness(
                    pc,
                    &[piece[0], piece[piece.len() - 1]],
                    vec![Ext::Fin(piece.len() as u64 - 1)],
                    "segment piece is not a P-geodesic",
                ));
            }
        }
    }
    for &j in &path.junctions {
        rep.checked += 1;
        match angle(pc, v, j) {
            Ok(a) if a.exceeds(c.saturating_sub(1)) || c == 0 => {}
            Ok(a) => rep.violation(witness(pc, &[v[j]], vec![a], format!("angle {a} < C at position {j}"))),
            Err(e) => rep.violation(witness(pc, &[v[j]], vec![], format!("angle undefined: {e}"))),
        }
    }
    rep.finish()
}

/// `4M + K` with `M = 8K + 2θ`.
pub fn canoe_threshold(pc: &ProjectionComplex) -> u64 {
    4 * (8 * pc.k + 2 * pc.theta()) + pc.k
}

fn validated(pc: &ProjectionComplex, path: &CanoePath, c: u64, name: &str) -> std::result::Result<Report, Report> {
    let threshold = canoe_threshold(pc);
    let rep = Report::new(name).stamp("C", c).stamp("threshold", threshold);
    if c <= threshold {
        let mut rep = rep;
        rep.verdict = Verdict::NotApplicable;
        rep.note(format!("C = {c} does not exceed 4M + K = {threshold}"));
        return Err(rep.finish());
    }
    let v = validate_canoe(pc, path, c);
    if v.verdict == Verdict::Fail {
        let mut rep = rep;
        rep.verdict = Verdict::NotApplicable;
        rep.note(format!("path is not {c}-canoeing: {}", v.summary_line()));
        return Err(rep.finish());
    }
    Ok(rep)
}

/// For `C > 4M + K`: the path is embedded, its endpoints differ, and every
/// large-angle point lies on the standard path between them.
pub fn endpoints_audit(pc: &ProjectionComplex, path: &CanoePath, c: u64) -> Report {
    let mut rep = match validated(pc, path, c, "canoe-endpoints") {
        Ok(r) => r,
        Err(r) => return r,
    };
    let (x, z) = path.endpoints();
    rep.checked += 1;
    let mut sorted = path.vertices.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != path.vertices.len() {
        rep.violation(witness(pc, &[x, z], vec![], "path is not embedded"));
    }
    rep.checked += 1;
    if x == z {
        rep.violation(witness(pc, &[x], vec![], "endpoints coincide"));
        return rep.finish();
    }
    match pc.standard_path(x, z) {
        Ok(sp) => {
            for v in path.large_angle_points() {
                rep.checked += 1;
                if !sp.vertices.contains(&v) {
                    rep.violation(witness(pc, &[x, z, v], vec![], "large-angle point off the standard path"));
                }
            }
        }
        Err(e) => rep.violation(witness(pc, &[x, z], vec![], format!("no standard path: {e}"))),
    }
    rep.finish()
}

/// For `C > 4M + K` with `k` large-angle points: `d_P(X, Y) ≥ k/2`.
pub fn distance_lower_bound(pc: &ProjectionComplex, path: &CanoePath, c: u64) -> Report {
    let mut rep = match validated(pc, path, c, "canoe-distance") {
        Ok(r) => r,
        Err(r) => return r,
    };
    let (x, z) = path.endpoints();
    let k = path.junctions.len();
    rep.set_stamp("k", k);
    rep.checked += 1;
    match pc.distance(x, z) {
        Some(d) => {
            rep.set_stamp("d_P", d);
            if 2 * d < k {
                rep.violation(witness(pc, &[x, z], vec![Ext::Fin(d as u64)], format!("d_P = {d} < {k}/2")));
            }
        }
        None => rep.violation(witness(pc, &[x, z], vec![], "endpoints in different components")),
    }
    rep.finish()
}

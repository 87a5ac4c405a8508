//! Thin-triangle constant over sampled triangles.
//!
//! For a triangle with vertices `a, b, c` the tripod map identifies the point
//! at distance `t` from `a` on `[a,b]` with the point at distance `t` from `a`
//! on `[a,c]`, for `t` up to the Gromov product `(b|c)_a`. The worst pair over
//! every choice of geodesic sides is found without enumerating geodesics:
//! the points at distance `t` from `a` on *some* geodesic `[a,b]` are exactly
//! `{z : d(a,z) = t, d(z,b) = d(a,b) - t}`.

use serde::{Deserialize, Serialize};

use crate::metric::geodesic::{geodesic_points_at, geodesic_through};
use crate::metric::{DistanceCache, GraphSpace, PointId, UNREACHED};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinWitness {
    pub triple: [PointId; 3],
    /// Vertex of the triangle whose cusp realises the constant.
    pub corner: PointId,
    /// Distance from `corner` of the identified pair.
    pub t: u32,
    pub points: (PointId, PointId),
    /// The two sides through `points`, starting at `corner`.
    pub sides: (Vec<PointId>, Vec<PointId>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThinTriangleReport {
    pub delta: u64,
    pub witness: Option<ThinWitness>,
    pub triangles_checked: usize,
    /// Triples spanning more than one component.
    pub skipped: Vec<[PointId; 3]>,
    /// Always true: the constant is certified on the sample only, over
    /// vertex points of the sides.
    pub certified_on_sample: bool,
}

/// Smallest `δ` making every sampled triangle `δ`-thin over all geodesic
/// choices.
pub fn thin_delta(space: &GraphSpace, sample: &[[PointId; 3]]) -> ThinTriangleReport {
    let mut cache = DistanceCache::new(space);
    let mut best: Option<(u32, ThinWitness)> = None;
    let mut checked = 0;
    let mut skipped = Vec::new();

    for &tri in sample {
        let [a, b, c] = tri;
        let (ab, ac, bc) = (cache.raw(a, b), cache.raw(a, c), cache.raw(b, c));
        if ab == UNREACHED || ac == UNREACHED || bc == UNREACHED {
            skipped.push(tri);
            continue;
        }
        checked += 1;
        for (corner, p, q) in [(a, b, c), (b, a, c), (c, a, b)] {
            let dcp = cache.raw(corner, p);
            let dcq = cache.raw(corner, q);
            let dpq = cache.raw(p, q);
            // Only vertex points: half-integer tripod centres are skipped.
            let leg = (dcp + dcq - dpq) / 2;
            let rc = cache.row(corner).to_vec();
            let rp = cache.row(p).to_vec();
            let rq = cache.row(q).to_vec();
            for t in 1..=leg {
                let on_p = geodesic_points_at(&rc, &rp, dcp, t);
                let on_q = geodesic_points_at(&rc, &rq, dcq, t);
                for &z in &on_p {
                    for &w in &on_q {
                        let d = cache.raw(z, w);
                        if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                            let sides = (
                                geodesic_through(space, corner, z, p).unwrap_or_default(),
                                geodesic_through(space, corner, w, q).unwrap_or_default(),
                            );
                            best = Some((
                                d,
                                ThinWitness {
                                    triple: tri,
                                    corner,
                                    t,
                                    points: (z, w),
                                    sides,
                                },
                            ));
                        }
                    }
                }
            }
        }
    }

    let (delta, witness) = match best {
        Some((d, w)) => (d as u64, Some(w)),
        None => (0, None),
    };
    ThinTriangleReport {
        delta,
        witness,
        triangles_checked: checked,
        skipped,
        certified_on_sample: true,
    }
}

/// Every unordered triple of the given points, in index order.
pub fn all_triples(points: &[PointId]) -> Vec<[PointId; 3]> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            for k in j + 1..points.len() {
                out.push([points[i], points[j], points[k]]);
            }
        }
    }
    out
}

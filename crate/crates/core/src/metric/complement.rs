//! Path metric on the complement of an open ball, and detour audits.

use serde::{Deserialize, Serialize};

use crate::constants::{at_least_pow2_frac, pow2_frac_floor};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::metric::{GraphSpace, PointId, UNREACHED};
use crate::report::Verdict;

/// Distance from `x` to `y` in `X \ B_r(p)`; `Inf` when the ball separates
/// them.
pub fn complement_distance(
    space: &GraphSpace,
    p: PointId,
    r: u64,
    x: PointId,
    y: PointId,
) -> Result<Ext> {
    let from_p = space.bfs(p);
    let inside = |v: PointId| from_p[v] != UNREACHED && (from_p[v] as u64) < r;
    for q in [x, y] {
        if q >= space.len() {
            return Err(Error::UnknownPoint(q.to_string()));
        }
        if inside(q) {
            return Err(Error::InsideBall(
                space.label(q).to_string(),
                r,
                space.label(p).to_string(),
            ));
        }
    }
    if x == y {
        return Ok(Ext::ZERO);
    }
    Ok(Ext::from_raw(space.bfs_avoiding(x, inside)[y]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetourSample {
    pub x: PointId,
    pub y: PointId,
    pub m: PointId,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetourEntry {
    pub sample: DetourSample,
    pub radius: u64,
    pub min_detour: Ext,
    /// `floor(2^((R-1)/δ))`.
    pub bound_floor: u64,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetourReport {
    pub delta_op: u64,
    pub verdict: Verdict,
    pub entries: Vec<DetourEntry>,
}

/// Checks that every path from `x` to `y` outside `B_R(m)` has length at
/// least `2^((R-1)/δ)`, where `d(x,y) = 2R` and `m` is a geodesic midpoint.
///
/// The minimal detour is the complement distance, computed exactly by BFS on
/// the graph with the open ball removed.
pub fn detour_audit(space: &GraphSpace, delta_op: u64, samples: &[DetourSample]) -> DetourReport {
    let delta = delta_op.max(1);
    let mut entries = Vec::new();
    for &s in samples {
        let dx = space.bfs(s.x);
        let dm = space.bfs(s.m);
        let (dxy, dxm, dmy) = (dx[s.y], dx[s.m], dm[s.y]);
        if dxy == UNREACHED || dxm == UNREACHED || dxm != dmy || dxm + dmy != dxy || dxm == 0 {
            entries.push(DetourEntry {
                sample: s,
                radius: 0,
                min_detour: Ext::Inf,
                bound_floor: 0,
                verdict: Verdict::NotApplicable,
                note: "m is not the midpoint of a geodesic of positive even length".into(),
            });
            continue;
        }
        let r = dxm as u64;
        let detour = complement_distance(space, s.m, r, s.x, s.y).expect("sphere points lie outside the open ball");
        let bound_floor = pow2_frac_floor(r - 1, delta);
        let (verdict, note) = match detour {
            Ext::Inf => (
                Verdict::Vacuous,
                "disconnected: bound holds vacuously".to_string(),
            ),
            Ext::Fin(len) if at_least_pow2_frac(len, r - 1, delta) => {
                (Verdict::Pass, format!("detour {len} >= 2^(({r}-1)/{delta})"))
            }
            Ext::Fin(len) => (
                Verdict::Fail,
                format!("detour {len} < 2^(({r}-1)/{delta})"),
            ),
        };
        entries.push(DetourEntry {
            sample: s,
            radius: r,
            min_detour: detour,
            bound_floor,
            verdict,
            note,
        });
    }
    let verdict = Verdict::combine(entries.iter().map(|e| e.verdict));
    DetourReport {
        delta_op: delta,
        verdict,
        entries,
    }
}

//! Geodesic enumeration along BFS layers.

use crate::error::{Error, Result};
use crate::metric::{GraphSpace, PointId, UNREACHED};

pub const DEFAULT_GEODESIC_CAP: usize = 10_000;

#[derive(Clone, Debug)]
pub struct Geodesics {
    pub paths: Vec<Vec<PointId>>,
    /// Total number of geodesics (saturating).
    pub total: u128,
    /// False when `total` exceeded the cap and `paths` is a partial list.
    pub exhaustive: bool,
}

/// Every geodesic from `x` to `y`, up to `cap` paths.
///
/// Exceeding the cap is reported through `exhaustive = false`; the returned
/// list then holds the first `cap` paths in lexicographic vertex order.
pub fn all_geodesics(space: &GraphSpace, x: PointId, y: PointId, cap: usize) -> Result<Geodesics> {
    let dx = space.bfs(x);
    if dx[y] == UNREACHED {
        return Err(Error::DifferentComponents(
            space.label(x).to_string(),
            space.label(y).to_string(),
        ));
    }
    let dy = space.bfs(y);
    let total = count_from(space, &dx, &dy, x, y);

    let mut paths = Vec::new();
    let mut stack = vec![x];
    walk(space, &dy, y, &mut stack, &mut paths, cap);
    Ok(Geodesics {
        exhaustive: total <= cap as u128,
        total,
        paths,
    })
}

fn walk(
    space: &GraphSpace,
    dy: &[u32],
    y: PointId,
    stack: &mut Vec<PointId>,
    out: &mut Vec<Vec<PointId>>,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    let u = *stack.last().unwrap();
    if u == y {
        out.push(stack.clone());
        return;
    }
    for &v in space.neighbors(u) {
        if dy[v] != UNREACHED && dy[v] + 1 == dy[u] {
            stack.push(v);
            walk(space, dy, y, stack, out, cap);
            stack.pop();
        }
    }
}

/// Number of geodesics from `x` to `y` by dynamic programming over layers.
fn count_from(space: &GraphSpace, dx: &[u32], dy: &[u32], x: PointId, y: PointId) -> u128 {
    let d = dx[y];
    let mut layer: Vec<Vec<PointId>> = vec![Vec::new(); d as usize + 1];
    for v in 0..space.len() {
        if dx[v] != UNREACHED && dy[v] != UNREACHED && dx[v] + dy[v] == d {
            layer[dx[v] as usize].push(v);
        }
    }
    let mut count = vec![0u128; space.len()];
    count[x] = 1;
    for t in 1..=d as usize {
        for &v in &layer[t] {
            let mut c = 0u128;
            for &u in space.neighbors(v) {
                if dx[u] != UNREACHED && dx[u] + 1 == dx[v] {
                    c = c.saturating_add(count[u]);
                }
            }
            count[v] = c;
        }
    }
    count[y]
}

/// Points at distance `t` from `x` lying on some geodesic `[x, y]`, given
/// BFS rows from both ends.
pub fn geodesic_points_at(dx: &[u32], dy: &[u32], y_from_x: u32, t: u32) -> Vec<PointId> {
    (0..dx.len())
        .filter(|&v| dx[v] == t && dy[v] != UNREACHED && dx[v] + dy[v] == y_from_x)
        .collect()
}

/// One geodesic from `x` to `y` passing through `via`, which must lie on
/// some geodesic.
pub fn geodesic_through(
    space: &GraphSpace,
    x: PointId,
    via: PointId,
    y: PointId,
) -> Option<Vec<PointId>> {
    let first = first_geodesic(space, x, via)?;
    let second = first_geodesic(space, via, y)?;
    let total = space.bfs(x)[y];
    if (first.len() + second.len() - 2) as u32 != total {
        return None;
    }
    let mut path = first;
    path.extend_from_slice(&second[1..]);
    Some(path)
}

/// Lexicographically first geodesic from `x` to `y`.
pub fn first_geodesic(space: &GraphSpace, x: PointId, y: PointId) -> Option<Vec<PointId>> {
    let dy = space.bfs(y);
    if dy[x] == UNREACHED {
        return None;
    }
    let mut path = vec![x];
    let mut u = x;
    while u != y {
        u = *space
            .neighbors(u)
            .iter()
            .find(|&&v| dy[v] != UNREACHED && dy[v] + 1 == dy[u])?;
        path.push(u);
    }
    Some(path)
}

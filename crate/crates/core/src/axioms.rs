//! Projection axioms, the strong axiom and the upgrade contract, checked
//! exhaustively over a window of apices.
//!
//! Every witness stores apex indices and the values it measured, in the order
//! [`replay`] recomputes them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::metric::{GraphSpace, PointId};
use crate::projection::{chosen_geodesic, ProjectionData, Window};
use crate::report::{Report, Verdict, Witness};

pub const P1: &str = "P1";
pub const P2: &str = "P2";
pub const P3: &str = "P3";
pub const P2_PLUS: &str = "P2+";
pub const UPGRADE: &str = "upgrade-contract";

fn labels(data: &ProjectionData, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| data.labels[i].clone()).collect()
}

fn base(data: &ProjectionData, check: &str, window: &Window) -> Report {
    Report::new(check)
        .stamp("theta", data.theta)
        .stamp("window", &window.description)
        .stamp("window_size", window.len())
}

fn merge(mut rep: Report, parts: Vec<Report>) -> Report {
    for p in parts {
        rep.absorb(p);
    }
    if rep.skipped > 0 {
        let s = rep.skipped;
        rep.note(format!("{s} instances skipped for empty projections"));
    }
    rep.finish()
}

/// `diam π_Y(X) ≤ θ` for `X ≠ Y`.
pub fn check_p1(data: &ProjectionData, window: &Window) -> Report {
    let m = &window.members;
    let parts: Vec<Report> = m
        .par_iter()
        .map(|&y| {
            let mut rep = Report::new(P1);
            for &x in m {
                if x == y {
                    continue;
                }
                if data.projection_empty(y, x) {
                    rep.skipped += 1;
                    continue;
                }
                rep.checked += 1;
                let d = data.diam(y, x);
                if d.exceeds(data.theta) {
                    rep.violation(Witness {
                        indices: vec![y, x],
                        labels: labels(data, &[y, x]),
                        values: vec![d],
                        detail: format!("diam pi_Y(X) = {d} > theta = {}", data.theta),
                    });
                }
            }
            rep
        })
        .collect();
    merge(base(data, P1, window), parts)
}

/// Behrstock inequality: `d_Y(X,Z) > θ ⇒ d_X(Y,Z) ≤ θ`.
pub fn check_p2(data: &ProjectionData, window: &Window) -> Report {
    let m = &window.members;
    let t = data.theta;
    let parts: Vec<Report> = m
        .par_iter()
        .map(|&y| {
            let mut rep = Report::new(P2);
            for &x in m {
                for &z in m {
                    if x == y || z == y || x == z {
                        continue;
                    }
                    if data.projection_empty(y, x)
                        || data.projection_empty(y, z)
                        || data.projection_empty(x, y)
                        || data.projection_empty(x, z)
                    {
                        rep.skipped += 1;
                        continue;
                    }
                    rep.checked += 1;
                    let a = data.d(y, x, z);
                    if a.exceeds(t) {
                        let b = data.d(x, y, z);
                        if b.exceeds(t) {
                            rep.violation(Witness {
                                indices: vec![y, x, z],
                                labels: labels(data, &[y, x, z]),
                                values: vec![a, b],
                                detail: format!("d_Y(X,Z) = {a} > {t} and d_X(Y,Z) = {b} > {t}"),
                            });
                        }
                    }
                }
            }
            rep
        })
        .collect();
    merge(base(data, P2, window), parts)
}

/// `{Y : d_Y(X,Z) > θ}` inside the window.
pub fn large_projection_set(data: &ProjectionData, x: usize, z: usize, theta: u64, window: &Window) -> Vec<usize> {
    window
        .members
        .iter()
        .copied()
        .filter(|&y| {
            y != x
                && y != z
                && !data.projection_empty(y, x)
                && !data.projection_empty(y, z)
                && data.d(y, x, z).exceeds(theta)
        })
        .collect()
}

fn distance_to_path(space: &GraphSpace, p: PointId, path: &[PointId]) -> Ext {
    let row = space.bfs(p);
    path.iter()
        .map(|&q| Ext::from_raw(row[q]))
        .min()
        .unwrap_or(Ext::Inf)
}

/// For each pair, lists the apices with large projection and, when the
/// geometry is supplied, checks each lies within `R + 2δ` of a chosen
/// geodesic `[X,Z]`. Without geometry the set is only enumerated.
pub fn check_p3(
    data: &ProjectionData,
    space: Option<&GraphSpace>,
    pairs: &[(usize, usize)],
    window: &Window,
) -> Report {
    let reach = data.r + 2 * data.delta;
    let geometric = space.is_some() && !data.points.is_empty();
    let parts: Vec<Report> = pairs
        .par_iter()
        .map(|&(x, z)| {
            let mut rep = Report::new(P3);
            if x == z {
                rep.skipped += 1;
                rep.note(format!("degenerate pair ({}, {}) rejected", data.labels[x], data.labels[z]));
                return rep;
            }
            let set = large_projection_set(data, x, z, data.theta, window);
            rep.checked += 1;
            let Some(space) = space.filter(|_| geometric) else {
                return rep;
            };
            let Some(path) = chosen_geodesic(space, data.points[x], data.points[z]) else {
                rep.skipped += 1;
                return rep;
            };
            for y in set {
                let d = distance_to_path(space, data.points[y], &path);
                if d.exceeds(reach) {
                    rep.violation(Witness {
                        indices: vec![x, z, y],
                        labels: labels(data, &[x, z, y]),
                        values: vec![data.d(y, x, z), d],
                        detail: format!("d_Y(X,Z) > theta but Y is {d} from [X,Z], beyond {reach}"),
                    });
                }
            }
            rep
        })
        .collect();
    let mut rep = base(data, P3, window)
        .stamp("pairs", pairs.len())
        .stamp("localisation_radius", reach)
        .stamp("geometric", geometric);
    rep.checked = 0;
    merge(rep, parts)
}

/// Every unordered pair of distinct window members.
pub fn window_pairs(window: &Window) -> Vec<(usize, usize)> {
    let m = &window.members;
    let mut out = Vec::new();
    for (i, &x) in m.iter().enumerate() {
        for &z in &m[i + 1..] {
            out.push((x, z));
        }
    }
    out
}

/// Strong axiom: `d_X(Y,Z) > θ ⇒ d_Y(Z,W) = d_Y(X,W)` for distinct
/// `X, Y, Z, W`.
pub fn check_p2plus(data: &ProjectionData, window: &Window) -> Report {
    let m = &window.members;
    let t = data.theta;
    let parts: Vec<Report> = m
        .par_iter()
        .map(|&x| {
            let mut rep = Report::new(P2_PLUS);
            for &y in m {
                if y == x || data.projection_empty(x, y) || data.projection_empty(y, x) {
                    continue;
                }
                for &z in m {
                    if z == x || z == y || data.projection_empty(x, z) {
                        continue;
                    }
                    let a = data.d(x, y, z);
                    if !a.exceeds(t) {
                        rep.checked += (m.len() - 3) as u64;
                        continue;
                    }
                    for &w in m {
                        if w == x || w == y || w == z {
                            continue;
                        }
                        if data.projection_empty(y, z) || data.projection_empty(y, w) {
                            rep.skipped += 1;
                            continue;
                        }
                        rep.checked += 1;
                        let (b, c) = (data.d(y, z, w), data.d(y, x, w));
                        if b != c {
                            rep.violation(Witness {
                                indices: vec![x, y, z, w],
                                labels: labels(data, &[x, y, z, w]),
                                values: vec![a, b, c],
                                detail: format!("d_X(Y,Z) = {a} > {t} but d_Y(Z,W) = {b} != d_Y(X,W) = {c}"),
                            });
                        }
                    }
                }
            }
            rep
        })
        .collect();
    merge(base(data, P2_PLUS, window), parts)
}

/// `data_prime` must satisfy P1, P2+ and P3 at `θ' = 11θ` and stay within
/// `2θ` of `data` everywhere in the window.
pub fn verify_upgrade_contract(
    data: &ProjectionData,
    data_prime: &ProjectionData,
    space: Option<&GraphSpace>,
    window: &Window,
) -> Result<Report> {
    if !data.same_index_set(data_prime) {
        return Err(Error::IndexMismatch);
    }
    let theta = data.theta;
    let upgraded = data_prime.with_theta(11 * theta);
    let sub = [
        check_p1(&upgraded, window),
        check_p2plus(&upgraded, window),
        check_p3(&upgraded, space, &window_pairs(window), window),
    ];
    let slack_bound = 2 * theta;
    let m = &window.members;
    let parts: Vec<(Report, u64)> = m
        .par_iter()
        .map(|&y| {
            let mut rep = Report::new(UPGRADE);
            let mut slack = 0u64;
            for &x in m {
                for &z in m {
                    if x == y || z == y || x > z {
                        continue;
                    }
                    if data.projection_empty(y, x) || data.projection_empty(y, z) {
                        rep.skipped += 1;
                        continue;
                    }
                    rep.checked += 1;
                    let (d, dp) = (data.d(y, x, z), data_prime.d(y, x, z));
                    match d.abs_diff(dp) {
                        Some(s) if s <= slack_bound => slack = slack.max(s),
                        _ => rep.violation(Witness {
                            indices: vec![y, x, z],
                            labels: labels(data, &[y, x, z]),
                            values: vec![d, dp],
                            detail: format!("|d - d'| exceeds 2 theta = {slack_bound}"),
                        }),
                    }
                }
            }
            (rep, slack)
        })
        .collect();
    let slack = parts.iter().map(|p| p.1).max().unwrap_or(0);
    let mut rep = base(data, UPGRADE, window)
        .stamp("theta_prime", 11 * theta)
        .stamp("slack_bound", slack_bound);
    for s in &sub {
        rep.set_stamp(&format!("{}_verdict", s.check), s.verdict);
        if s.verdict == Verdict::Fail {
            rep.violations += s.violations;
            rep.witnesses.extend(s.witnesses.iter().cloned().map(|mut w| {
                w.detail = format!("{} at theta'={}: {}", s.check, 11 * theta, w.detail);
                w
            }));
        }
    }
    let mut rep = merge(rep, parts.into_iter().map(|p| p.0).collect());
    rep.set_stamp("max_slack", slack);
    Ok(rep)
}

/// Recomputes the values stored in a witness of `check`.
pub fn replay(data: &ProjectionData, check: &str, w: &Witness, space: Option<&GraphSpace>) -> Result<Vec<Ext>> {
    let i = &w.indices;
    let need = |n: usize| {
        if i.len() == n {
            Ok(())
        } else {
            Err(Error::Instance(format!("{check} witness needs {n} indices")))
        }
    };
    match check {
        P1 => {
            need(2)?;
            Ok(vec![data.proj_distance(i[0], i[1], i[1])?])
        }
        P2 => {
            need(3)?;
            Ok(vec![
                data.proj_distance(i[0], i[1], i[2])?,
                data.proj_distance(i[1], i[0], i[2])?,
            ])
        }
        P2_PLUS => {
            need(4)?;
            Ok(vec![
                data.proj_distance(i[0], i[1], i[2])?,
                data.proj_distance(i[1], i[2], i[3])?,
                data.proj_distance(i[1], i[0], i[3])?,
            ])
        }
        P3 => {
            need(3)?;
            let space = space.ok_or_else(|| Error::Instance("P3 replay needs the space".into()))?;
            let path = chosen_geodesic(space, data.points[i[0]], data.points[i[1]])
                .ok_or_else(|| Error::DifferentComponents(data.labels[i[0]].clone(), data.labels[i[1]].clone()))?;
            Ok(vec![
                data.proj_distance(i[2], i[0], i[1])?,
                distance_to_path(space, data.points[i[2]], &path),
            ])
        }
        other => Err(Error::Instance(format!("no replay for check {other}"))),
    }
}

/// Runs P1, P2, P3 (all window pairs) and optionally P2+.
pub fn check_all(data: &ProjectionData, space: Option<&GraphSpace>, window: &Window, strong: bool) -> Vec<Report> {
    let mut out = vec![
        check_p1(data, window),
        check_p2(data, window),
        check_p3(data, space, &window_pairs(window), window),
    ];
    if strong {
        out.push(check_p2plus(data, window));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::bass_serre::BassSerreSpace;
    use crate::metric::{path_graph, subdivide, GeodesicSpace};
    use crate::projection::{build_projection_data, ApexFamily};
    use std::sync::Arc;

    fn tree(trunc: u32) -> (Arc<GeodesicSpace>, ProjectionData) {
        let bs = BassSerreSpace::new(2, 3, 38, trunc).unwrap();
        let apices = bs.vertex_ids();
        let space = Arc::new(GeodesicSpace::BassSerre(bs));
        let fam = ApexFamily::new(space.clone(), apices, 38, 16, 1).unwrap();
        (space.clone(), build_projection_data(&fam, 121))
    }

    /// Three apices on a subdivided path; `d_p1(p0, p2) = ∞`.
    fn line3() -> ProjectionData {
        let g = subdivide(&path_graph(3), 38);
        let apices = vec![g.id("p0").unwrap(), g.id("p1").unwrap(), g.id("p2").unwrap()];
        let fam = ApexFamily::new(Arc::new(GeodesicSpace::Graph(g)), apices, 38, 16, 1).unwrap();
        build_projection_data(&fam, 121)
    }

    #[test]
    fn tree_passes_everything() {
        let (space, data) = tree(4);
        let w = Window::all(&data);
        for rep in check_all(&data, Some(space.graph()), &w, true) {
            assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.summary_line());
            assert_eq!(rep.violations, 0);
        }
    }

    #[test]
    fn tree_passes_at_theta_zero() {
        let (space, data) = tree(3);
        let data = data.with_theta(0);
        let w = Window::all(&data);
        for rep in check_all(&data, Some(space.graph()), &w, true) {
            assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.summary_line());
        }
    }

    #[test]
    fn p1_injected_diameter() {
        let mut data = line3();
        data.override_distance(1, 0, 0, Ext::Fin(122));
        let rep = check_p1(&data, &Window::all(&data));
        assert_eq!(rep.verdict, Verdict::Fail);
        let w = &rep.witnesses[0];
        assert_eq!(w.indices, vec![1, 0]);
        assert_eq!(replay(&data, P1, w, None).unwrap(), w.values);
    }

    #[test]
    fn empty_index_set_is_vacuous() {
        let data = line3();
        let w = Window::from_members(vec![], "empty");
        assert_eq!(check_p1(&data, &w).verdict, Verdict::Vacuous);
        assert_eq!(check_p2plus(&data, &w).verdict, Verdict::Vacuous);
    }

    #[test]
    fn p2_branch_geometry_and_violation() {
        let mut data = line3();
        // d_p1(p0,p2) = ∞ and d_p0(p1,p2) = 0
        assert_eq!(data.d(1, 0, 2), Ext::Inf);
        assert_eq!(data.d(0, 1, 2), Ext::ZERO);
        let w = Window::all(&data);
        assert_eq!(check_p2(&data, &w).verdict, Verdict::Pass);
        data.override_distance(0, 1, 2, Ext::Fin(500));
        let rep = check_p2(&data, &w);
        assert_eq!(rep.verdict, Verdict::Fail);
        let wit = &rep.witnesses[0];
        assert_eq!(wit.indices, vec![0, 1, 2]);
        assert_eq!(replay(&data, P2, wit, None).unwrap(), wit.values);
    }

    #[test]
    fn p3_sets_on_tree() {
        let (space, data) = tree(4);
        let GeodesicSpace::BassSerre(bs) = &*space else { unreachable!() };
        let w = Window::all(&data);
        let base = data.index_of("H[e]").unwrap();
        let pid = |s: &str| data.index_of_point(bs.locate(&s.parse().unwrap()).unwrap()).unwrap();
        let adj = pid("K[e]");
        assert!(large_projection_set(&data, base, adj, 121, &w).is_empty());
        // H[e] - K[e] - H[k1] - K[k1.h1] : three edges apart
        let far = pid("K[k1.h1]");
        let mut set = large_projection_set(&data, base, far, 121, &w);
        set.sort_unstable();
        let mut want = vec![adj, pid("H[k1]")];
        want.sort_unstable();
        assert_eq!(set, want);
        let rep = check_p3(&data, Some(space.graph()), &[(base, far), (base, base)], &w);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.skipped, 1);
        assert!(rep.notes.iter().any(|n| n.contains("degenerate")));
    }

    #[test]
    fn p2plus_perturbation_detected_and_replayable() {
        let (_, mut data) = tree(3);
        let w = Window::all(&data);
        // move one projection point to another branch of the sphere
        let (p, a) = (0, 1);
        let cur = data.proj[p][a][0];
        let other = (0..data.spheres[p].labels.len() as u32).find(|&k| k != cur).unwrap();
        data.set_projection(p, a, vec![other]);
        let rep = check_p2plus(&data, &w);
        assert_eq!(rep.verdict, Verdict::Fail);
        for wit in &rep.witnesses {
            assert_eq!(replay(&data, P2_PLUS, wit, None).unwrap(), wit.values);
        }
    }

    #[test]
    fn upgrade_contract() {
        let (_, data) = tree(3);
        let w = Window::all(&data);
        let rep = verify_upgrade_contract(&data, &data, None, &w).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.stamps["max_slack"], serde_json::json!(0));

        let mut shifted = data.clone();
        let (y, x, z) = (0, 1, 1);
        let d = data.d(y, x, z).finite().unwrap();
        shifted.override_distance(y, x, z, Ext::Fin(d + 2 * 121 + 1));
        assert_eq!(verify_upgrade_contract(&data, &shifted, None, &w).unwrap().verdict, Verdict::Fail);
        let mut edge = data.clone();
        edge.override_distance(y, x, z, Ext::Fin(d + 2 * 121));
        let rep = verify_upgrade_contract(&data, &edge, None, &w).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        // every measured d' stays above d - 2θ
        assert_eq!(rep.stamps["max_slack"], serde_json::json!(242));

        let zero = data.with_theta(0);
        assert_eq!(verify_upgrade_contract(&zero, &zero, None, &w).unwrap().verdict, Verdict::Pass);
        let mut off = zero.clone();
        off.override_distance(y, x, z, Ext::Fin(d + 1));
        assert_eq!(verify_upgrade_contract(&zero, &off, None, &w).unwrap().verdict, Verdict::Fail);

        let other = line3();
        assert!(matches!(
            verify_upgrade_contract(&data, &other, None, &w),
            Err(Error::IndexMismatch)
        ));
    }
}

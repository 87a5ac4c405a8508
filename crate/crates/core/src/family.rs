//! Rotating families: apices with finite vertex groups, and the rotation and
//! spinning conditions on them.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::constants::{at_least_pow2_frac, pow2_frac_floor};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::group::{Element, GroupAction};
use crate::metric::bass_serre::PointKey;
use crate::metric::{GeodesicSpace, PointId, UNREACHED};
use crate::projection::{ApexFamily, ProjectionData, Window};
use crate::report::{Report, Verdict, Witness};

/// Default syllable bound for conditions quantified over the whole group.
pub const DEFAULT_WORD_BOUND: usize = 6;

#[derive(Clone, Debug)]
pub struct RotatingFamily {
    pub family: ApexFamily,
    pub action: GroupAction,
    /// Generators of `G_c`, indexed like `family.apices`.
    pub generators: Vec<Vec<Element>>,
    /// All elements of `G_c`, sorted, identity included.
    pub groups: Vec<Vec<Element>>,
    index: HashMap<PointId, usize>,
}

impl RotatingFamily {
    pub fn new(family: ApexFamily, action: GroupAction, generators: Vec<Vec<Element>>) -> Result<RotatingFamily> {
        if generators.len() != family.apices.len() {
            return Err(Error::Group(format!(
                "{} subgroup lists for {} apices",
                generators.len(),
                family.apices.len()
            )));
        }
        let groups = generators
            .par_iter()
            .map(|g| action.closure(g))
            .collect::<Result<Vec<_>>>()?;
        let index = family.apices.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        Ok(RotatingFamily {
            family,
            action,
            generators,
            groups,
            index,
        })
    }

    /// `G_c` is the full stabilizer of `c`.
    pub fn with_stabilizers(family: ApexFamily, action: GroupAction) -> Result<RotatingFamily> {
        let gens = family
            .apices
            .iter()
            .map(|&c| {
                let mut s = action.stabilizer(c)?;
                s.retain(|g| !action.is_identity(g));
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        RotatingFamily::new(family, action, gens)
    }

    pub fn len(&self) -> usize {
        self.family.apices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.apices.is_empty()
    }

    pub fn apex_index(&self, p: PointId) -> Option<usize> {
        self.index.get(&p).copied()
    }

    pub fn label(&self, i: usize) -> &str {
        self.family.space.graph().label(self.family.apices[i])
    }

    /// Image of apex `i` under `g` as an apex index. `Ok(None)` when the
    /// image leaves the finite view, `Err` when it lands on a non-apex.
    pub fn act_apex(&self, g: &Element, i: usize) -> Result<Option<usize>, PointId> {
        match self.action.act(g, self.family.apices[i]) {
            None => Ok(None),
            Some(q) => self.apex_index(q).map(Some).ok_or(q),
        }
    }

    pub fn nontrivial(&self, i: usize) -> impl Iterator<Item = &Element> {
        self.groups[i].iter().filter(|g| !self.action.is_identity(g))
    }

    fn conjugated_group(&self, g: &Element, i: usize) -> BTreeSet<Element> {
        self.groups[i].iter().map(|x| self.action.conjugate(g, x)).collect()
    }

    fn witness(&self, idx: &[usize], values: Vec<Ext>, detail: String) -> Witness {
        Witness {
            indices: idx.to_vec(),
            labels: idx.iter().map(|&i| self.label(i).to_string()).collect(),
            values,
            detail,
        }
    }
}

/// Whether the finite view contains every neighbour of `p`.
fn complete_at(space: &GeodesicSpace, p: PointId) -> bool {
    match space {
        GeodesicSpace::BassSerre(bs) => match bs.key(p) {
            PointKey::Vertex(v) => bs.graph().neighbors(p).len() == bs.group().order(v.factor) as usize,
            PointKey::Interior { .. } => true,
        },
        GeodesicSpace::Graph(_) => true,
    }
}

/// Whether `B_radius(p)` in the view is the true ball.
pub fn ball_is_complete(space: &GeodesicSpace, p: PointId, radius: u64) -> bool {
    let row = space.graph().bfs(p);
    row.iter()
        .enumerate()
        .all(|(q, &d)| d == UNREACHED || d as u64 >= radius || complete_at(space, q))
}

/// (a-1) invariance of the apex set, (a-2) `G_c` fixes `c`, (a-3)
/// `G_{gc} = g G_c g⁻¹`, for group elements in the ball of `word_bound`.
pub fn check_rotating(fam: &RotatingFamily, word_bound: usize, window: &Window) -> Report {
    let ball = fam.action.ball(word_bound);
    let parts: Vec<Report> = window
        .members
        .par_iter()
        .map(|&c| {
            let mut rep = Report::new("rotating");
            for g in &fam.groups[c] {
                rep.checked += 1;
                if fam.action.act(g, fam.family.apices[c]) != Some(fam.family.apices[c]) {
                    rep.violation(fam.witness(&[c], vec![], format!("(a-2): {} moves the apex", fam.action.format(g))));
                }
            }
            for g in &ball {
                match fam.act_apex(g, c) {
                    Ok(None) => rep.skipped += 1,
                    Err(q) => {
                        rep.checked += 1;
                        rep.violation(fam.witness(
                            &[c],
                            vec![],
                            format!(
                                "(a-1): {} maps the apex to non-apex {}",
                                fam.action.format(g),
                                fam.family.space.graph().label(q)
                            ),
                        ));
                    }
                    Ok(Some(gc)) => {
                        rep.checked += 1;
                        let conj = fam.conjugated_group(g, c);
                        let target: BTreeSet<Element> = fam.groups[gc].iter().cloned().collect();
                        if conj != target {
                            rep.violation(fam.witness(
                                &[c, gc],
                                vec![],
                                format!("(a-3): conjugate of G_c by {} is not G_gc", fam.action.format(g)),
                            ));
                        }
                    }
                }
            }
            rep
        })
        .collect();
    let mut rep = Report::new("rotating")
        .stamp("word_bound", word_bound)
        .stamp("window", &window.description);
    for p in parts {
        rep.absorb(p);
    }
    if rep.skipped > 0 {
        rep.note(format!("{} images left the finite view and were skipped", rep.skipped));
    }
    rep.finish()
}

fn rows_for(fam: &RotatingFamily, points: &BTreeSet<PointId>) -> HashMap<PointId, Vec<u32>> {
    let g = fam.family.space.graph();
    points.par_iter().map(|&p| (p, g.bfs(p))).collect()
}

/// For `c`, nontrivial `g ∈ G_c` and apices `x ≠ c`: some geodesic from `x`
/// to `gx` meets the closed ball `B₁(c)`.
pub fn check_fairly_rotating(fam: &RotatingFamily, window: &Window) -> Report {
    let mut points: BTreeSet<PointId> = window.members.iter().map(|&i| fam.family.apices[i]).collect();
    let mut triples = Vec::new();
    let mut skipped = 0u64;
    for &c in &window.members {
        for g in fam.nontrivial(c) {
            for &x in &window.members {
                if x == c {
                    continue;
                }
                match fam.action.act(g, fam.family.apices[x]) {
                    Some(gx) => {
                        points.insert(gx);
                        triples.push((c, g, x, gx));
                    }
                    None => skipped += 1,
                }
            }
        }
    }
    let rows = rows_for(fam, &points);
    let parts: Vec<Option<Witness>> = triples
        .par_iter()
        .map(|&(c, g, x, gx)| {
            let (dc, dx, dg) = (
                &rows[&fam.family.apices[c]],
                &rows[&fam.family.apices[x]],
                &rows[&gx],
            );
            let total = dx[gx];
            let hit = total != UNREACHED
                && (0..dc.len()).any(|z| dc[z] <= 1 && dx[z] != UNREACHED && dg[z] != UNREACHED && dx[z] + dg[z] == total);
            (!hit).then(|| {
                fam.witness(
                    &[c, x],
                    vec![Ext::from_raw(total)],
                    format!("no geodesic from x to {}·x meets B_1(c)", fam.action.format(g)),
                )
            })
        })
        .collect();
    let mut rep = Report::new("fairly-rotating").stamp("window", &window.description);
    rep.checked = triples.len() as u64;
    rep.skipped = skipped;
    for w in parts.into_iter().flatten() {
        rep.violation(w);
    }
    rep.finish()
}

/// Points `x, y` in the annulus `[20δ, 40δ]` around `c` with
/// `d(gx, y) ≤ 15δ` for nontrivial `g ∈ G_c`: every geodesic from `x` to `y`
/// passes through `c`. Apices whose `40δ` ball is cut by the view are
/// skipped.
pub fn check_very_rotating(fam: &RotatingFamily, window: &Window) -> Report {
    let delta = fam.family.delta.max(1);
    let space = &*fam.family.space;
    let g = space.graph();
    let parts: Vec<Report> = window
        .members
        .par_iter()
        .map(|&c| {
            let mut rep = Report::new("very-rotating");
            let pc = fam.family.apices[c];
            if !ball_is_complete(space, pc, 40 * delta) {
                rep.skipped += 1;
                return rep;
            }
            let dc = g.bfs(pc);
            let annulus: Vec<PointId> = (0..g.len())
                .filter(|&q| dc[q] != UNREACHED && (20 * delta..=40 * delta).contains(&(dc[q] as u64)))
                .collect();
            let mut avoid_rows: HashMap<PointId, (Vec<u32>, Vec<u32>)> = HashMap::new();
            for h in fam.nontrivial(c) {
                for &x in &annulus {
                    let Some(hx) = fam.action.act(h, x) else {
                        rep.skipped += 1;
                        continue;
                    };
                    let dhx = g.bfs(hx);
                    for &y in &annulus {
                        if dhx[y] == UNREACHED || dhx[y] as u64 > 15 * delta {
                            continue;
                        }
                        let (full, avoiding) = avoid_rows
                            .entry(x)
                            .or_insert_with(|| (g.bfs(x), g.bfs_avoiding(x, |q| q == pc)));
                        rep.checked += 1;
                        if avoiding[y] == full[y] {
                            rep.violation(fam.witness(
                                &[c],
                                vec![Ext::from_raw(full[y])],
                                format!(
                                    "geodesic {} -> {} avoids c (g = {})",
                                    g.label(x),
                                    g.label(y),
                                    fam.action.format(h)
                                ),
                            ));
                        }
                    }
                }
            }
            rep
        })
        .collect();
    let mut rep = Report::new("very-rotating")
        .stamp("delta", delta)
        .stamp("window", &window.description);
    for p in parts {
        rep.absorb(p);
    }
    rep.finish()
}

/// Smallest `d_a(b, gb)` over window apices `a ≠ b` and nontrivial
/// `g ∈ G_a`, with the triple attaining it. `checked` counts triples.
fn spin_minimum(fam: &RotatingFamily, data: &ProjectionData, window: &Window) -> (Report, Option<(Ext, Witness)>) {
    let parts: Vec<(Report, Option<(Ext, Witness)>)> = window
        .members
        .par_iter()
        .map(|&a| {
            let mut rep = Report::new("spin");
            let mut best: Option<(Ext, Witness)> = None;
            for g in fam.nontrivial(a) {
                for &b in &window.members {
                    if b == a {
                        continue;
                    }
                    let gb = match fam.act_apex(g, b) {
                        Ok(Some(gb)) => gb,
                        _ => {
                            rep.skipped += 1;
                            continue;
                        }
                    };
                    if data.projection_empty(a, b) || data.projection_empty(a, gb) {
                        rep.skipped += 1;
                        continue;
                    }
                    rep.checked += 1;
                    let v = data.d(a, b, gb);
                    if best.as_ref().is_none_or(|(m, _)| v < *m) {
                        let w = fam.witness(&[a, b, gb], vec![v], format!("g = {}", fam.action.format(g)));
                        best = Some((v, w));
                    }
                }
            }
            (rep, best)
        })
        .collect();
    let mut rep = Report::new("spin");
    let mut best: Option<(Ext, Witness)> = None;
    for (r, b) in parts {
        rep.absorb(r);
        if let Some((v, w)) = b {
            if best.as_ref().is_none_or(|(m, bw)| v < *m || (v == *m && w < *bw)) {
                best = Some((v, w));
            }
        }
    }
    (rep, best)
}

/// `d_a(b, gb) ≥ L` for nontrivial `g ∈ G_a`, plus equivariance of the
/// vertex groups at `word_bound`.
pub fn check_spinning(fam: &RotatingFamily, data: &ProjectionData, l: i64, window: &Window, word_bound: usize) -> Report {
    let (mut rep, best) = spin_minimum(fam, data, window);
    rep.check = "spinning".into();
    rep.set_stamp("L", l);
    rep.set_stamp("window", &window.description);
    let min = best.as_ref().map(|b| b.0);
    rep.set_stamp("min_observed", min);
    if let Some((v, w)) = best {
        if l > 0 && !v.exceeds(l as u64 - 1) {
            rep.violation(w);
        }
    }
    let eq = check_rotating(fam, word_bound, window);
    rep.set_stamp("equivariance", eq.verdict);
    rep.checked += eq.checked;
    rep.violations += eq.violations;
    rep.witnesses.extend(eq.witnesses);
    rep.finish()
}

/// The rotation lower bound `2^((R−2)/δ) − 4 − 6δ`, floored.
pub fn rotation_bound(r: u64, delta: u64) -> i64 {
    pow2_frac_floor(r.saturating_sub(2), delta) as i64 - 4 - 6 * delta as i64
}

/// Every observed `d_a(b, gb)` meets `2^((R−2)/δ) − 4 − 6δ`. Requires the
/// family to be fairly rotating; otherwise not applicable.
pub fn spinning_bound_audit(fam: &RotatingFamily, data: &ProjectionData, window: &Window) -> Report {
    let (r, delta) = (fam.family.r, fam.family.delta.max(1));
    let fairly = check_fairly_rotating(fam, window);
    let mut rep = Report::new("spinning-bound")
        .stamp("bound", rotation_bound(r, delta))
        .stamp("fairly_rotating", fairly.verdict)
        .stamp("window", &window.description);
    if fairly.verdict == Verdict::Fail {
        rep.verdict = Verdict::NotApplicable;
        rep.note("family is not fairly rotating");
        return rep.finish();
    }
    let (spin, best) = spin_minimum(fam, data, window);
    rep.checked = spin.checked;
    rep.skipped = spin.skipped;
    rep.set_stamp("min_observed", best.as_ref().map(|b| b.0));
    if let Some((Ext::Fin(v), w)) = best {
        if !at_least_pow2_frac(v + 4 + 6 * delta, r.saturating_sub(2), delta) {
            rep.violation(w);
        }
    }
    rep.finish()
}

/// `g·π_X(Y) = π_{gX}(gY)` as point sets, for `g` in the ball of
/// `word_bound` and `X ≠ Y` in the window.
pub fn projection_equivariance_audit(fam: &RotatingFamily, data: &ProjectionData, window: &Window, word_bound: usize) -> Report {
    let ball = fam.action.ball(word_bound);
    let parts: Vec<Report> = ball
        .par_iter()
        .map(|g| {
            let mut rep = Report::new("projection-equivariance");
            for &x in &window.members {
                let Ok(Some(gx)) = fam.act_apex(g, x) else {
                    rep.skipped += 1;
                    continue;
                };
                for &y in &window.members {
                    if y == x {
                        continue;
                    }
                    let Ok(Some(gy)) = fam.act_apex(g, y) else {
                        rep.skipped += 1;
                        continue;
                    };
                    let image: Option<BTreeSet<PointId>> = data.proj[x][y]
                        .iter()
                        .map(|&k| fam.action.act(g, data.spheres[x].ids[k as usize]))
                        .collect();
                    let Some(image) = image else {
                        rep.skipped += 1;
                        continue;
                    };
                    let target: BTreeSet<PointId> =
                        data.proj[gx][gy].iter().map(|&k| data.spheres[gx].ids[k as usize]).collect();
                    rep.checked += 1;
                    if image != target {
                        rep.violation(fam.witness(&[x, y], vec![], format!("fails for g = {}", fam.action.format(g))));
                    }
                }
            }
            rep
        })
        .collect();
    let mut rep = Report::new("projection-equivariance").stamp("word_bound", word_bound);
    for p in parts {
        rep.absorb(p);
    }
    rep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::bass_serre::BassSerreSpace;
    use crate::metric::{cycle_graph, subdivide};
    use crate::projection::build_projection_data;
    use std::sync::Arc;

    fn t23(trunc: u32) -> (RotatingFamily, ProjectionData) {
        let bs = BassSerreSpace::new(2, 3, 38, trunc).unwrap();
        let apices = bs.vertex_ids();
        let space = Arc::new(GeodesicSpace::BassSerre(bs));
        let fam = ApexFamily::new(space.clone(), apices, 38, 16, 1).unwrap();
        let data = build_projection_data(&fam, 121);
        let rf = RotatingFamily::with_stabilizers(fam, GroupAction::free_product(space)).unwrap();
        (rf, data)
    }

    fn base(rf: &RotatingFamily, s: &str) -> usize {
        let GeodesicSpace::BassSerre(bs) = &*rf.family.space else { unreachable!() };
        rf.apex_index(bs.locate(&s.parse().unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn stabilizer_family_rotates() {
        let (rf, data) = t23(4);
        let w = Window::all(&data);
        let h = base(&rf, "H[e]");
        assert_eq!(rf.groups[h].len(), 2);
        assert_eq!(rf.groups[base(&rf, "K[e]")].len(), 3);
        let rep = check_rotating(&rf, 3, &w);
        assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.summary_line());
        assert!(rep.skipped > 0);
    }

    #[test]
    fn broken_group_fails_a2() {
        let (mut rf, data) = t23(3);
        let h = base(&rf, "H[e]");
        let k = base(&rf, "K[e]");
        rf.groups[h] = rf.groups[k].clone();
        let rep = check_rotating(&rf, 2, &Window::all(&data));
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.witnesses.iter().any(|w| w.detail.starts_with("(a-2)")));
    }

    #[test]
    fn trivial_groups_pass_vacuously() {
        let (rf, data) = t23(2);
        let trivial = RotatingFamily::new(rf.family.clone(), rf.action.clone(), vec![Vec::new(); rf.len()]).unwrap();
        let w = Window::all(&data);
        assert_eq!(check_fairly_rotating(&trivial, &w).verdict, Verdict::Vacuous);
        assert_eq!(check_spinning(&trivial, &data, 16132, &w, 2).stamps["min_observed"], serde_json::Value::Null);
    }

    #[test]
    fn tree_rotation_conditions() {
        let (rf, data) = t23(4);
        let w = Window::all(&data);
        let fr = check_fairly_rotating(&rf, &w);
        assert_eq!(fr.verdict, Verdict::Pass);
        let vr = check_very_rotating(&rf, &w);
        assert_eq!(vr.verdict, Verdict::Pass, "{}", vr.summary_line());
        // base vertices are deep enough for the 40δ ball; leaves are not
        assert!(vr.checked > 0 && vr.skipped > 0);
    }

    #[test]
    fn spinning_on_tree_is_infinite() {
        let (rf, data) = t23(4);
        let w = Window::all(&data);
        let rep = check_spinning(&rf, &data, 16132, &w, 3);
        assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.summary_line());
        assert_eq!(rep.stamps["min_observed"], serde_json::json!("inf"));
        assert_eq!(check_spinning(&rf, &data, 0, &w, 1).verdict, Verdict::Pass);
        let b = spinning_bound_audit(&rf, &data, &w);
        assert_eq!(b.stamps["bound"], serde_json::json!(16374));
        assert_eq!(b.verdict, Verdict::Pass);
        assert_eq!(rotation_bound(16, 1), 16374);
    }

    #[test]
    fn finite_spin_below_l_fails() {
        let (rf, data) = t23(3);
        let mut data = data;
        let a = base(&rf, "H[e]");
        let b = base(&rf, "K[e]");
        let g = rf.nontrivial(a).next().unwrap().clone();
        let gb = rf.act_apex(&g, b).unwrap().unwrap();
        data.override_distance(a, b, gb, Ext::Fin(100));
        let rep = check_spinning(&rf, &data, 16132, &Window::all(&data), 1);
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.witnesses[0].values, vec![Ext::Fin(100)]);
        assert_eq!(spinning_bound_audit(&rf, &data, &Window::all(&data)).verdict, Verdict::Fail);
    }

    #[test]
    fn projections_are_equivariant() {
        let (rf, data) = t23(3);
        let rep = projection_equivariance_audit(&rf, &data, &Window::all(&data), 3);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.checked > 100);
    }

    #[test]
    fn reflected_cycle_is_not_very_rotating() {
        // C_100 with the reflection fixing vertex 0: x at 30 and y at -30
        // are 40 apart the other way round, so their geodesic misses 0.
        let n = 100;
        let g = cycle_graph(n);
        let refl: Vec<u32> = (0..n).map(|i| ((n - i) % n) as u32).collect();
        let space = Arc::new(GeodesicSpace::Graph(g));
        let action = GroupAction::permutations(space.clone(), vec![Element::Perm(refl.clone())]).unwrap();
        let fam = ApexFamily::exploratory(space, vec![0], 16, 1).unwrap();
        let rf = RotatingFamily::new(fam, action, vec![vec![Element::Perm(refl)]]).unwrap();
        let w = Window::from_members(vec![0], "apex 0");
        let rep = check_very_rotating(&rf, &w);
        assert_eq!(rep.verdict, Verdict::Fail);
        // oracle: on a cycle every geodesic from x to y contains 0 iff the
        // arc through 0 is strictly the shorter one
        let cyc = |a: usize, b: usize| a.abs_diff(b).min(n - a.abs_diff(b));
        let ann: Vec<usize> = (0..n).filter(|&i| (20..=40).contains(&cyc(0, i))).collect();
        let mut bad = 0;
        for &x in &ann {
            for &y in &ann {
                if cyc((n - x) % n, y) > 15 {
                    continue;
                }
                let (lo, hi) = (x.min(y), x.max(y));
                // the arc lo..hi avoids 0; the other arc contains it
                let avoiding = hi - lo;
                if avoiding <= n - avoiding {
                    bad += 1;
                }
            }
        }
        assert!(bad > 0);
        assert_eq!(rep.violations, bad);
        // the fixed point still lies on a geodesic from x to gx for x = 30
        assert_eq!(check_fairly_rotating(&rf, &w).verdict, Verdict::Vacuous);
    }

    #[test]
    fn ball_completeness_on_views() {
        let (rf, _) = t23(2);
        let GeodesicSpace::BassSerre(bs) = &*rf.family.space else { unreachable!() };
        let h = bs.locate(&"H[e]".parse().unwrap()).unwrap();
        assert!(ball_is_complete(&rf.family.space, h, 38));
        assert!(!ball_is_complete(&rf.family.space, h, 77));
        let g = GeodesicSpace::Graph(subdivide(&cycle_graph(3), 2));
        assert!(ball_is_complete(&g, 0, 100));
    }
}

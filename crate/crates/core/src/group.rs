//! Group elements and their actions on spaces.
//!
//! Two backends: normal-form words in `Z/n * Z/m` acting on the lazy
//! Bass-Serre tree by left multiplication, and permutation groups acting on
//! explicit graphs by automorphisms.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::bass_serre::PointKey;
use crate::metric::{GeodesicSpace, PointId};
use crate::word::{Factor, FreeProduct, Word};

/// Largest subgroup closure we are willing to enumerate.
pub const CLOSURE_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Word(Word),
    /// Images of point ids, indexed by point id.
    Perm(Vec<u32>),
}

impl Element {
    pub fn as_word(&self) -> Option<&Word> {
        match self {
            Element::Word(w) => Some(w),
            Element::Perm(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpec {
    FreeProduct { h_order: u32, k_order: u32 },
    /// Each generator lists the image label of every vertex, in vertex order,
    /// separated by spaces.
    Permutation { generators: Vec<String> },
}

#[derive(Clone, Debug)]
pub struct GroupAction {
    space: Arc<GeodesicSpace>,
    kind: ActionKind,
}

#[derive(Clone, Debug)]
enum ActionKind {
    FreeProduct(FreeProduct),
    Perm(Vec<Element>),
}

impl GroupAction {
    pub fn from_spec(space: Arc<GeodesicSpace>, spec: &ActionSpec) -> Result<GroupAction> {
        match (spec, &*space) {
            (ActionSpec::FreeProduct { h_order, k_order }, GeodesicSpace::BassSerre(bs)) => {
                let g = FreeProduct::new(*h_order, *k_order)?;
                if g != *bs.group() {
                    return Err(Error::Group(format!(
                        "action is Z/{h_order} * Z/{k_order} but the tree is built for Z/{} * Z/{}",
                        bs.group().h_order,
                        bs.group().k_order
                    )));
                }
                Ok(GroupAction::free_product(space.clone()))
            }
            (ActionSpec::Permutation { generators }, GeodesicSpace::Graph(_)) => {
                let mut act = GroupAction {
                    space: space.clone(),
                    kind: ActionKind::Perm(Vec::new()),
                };
                let gens = generators
                    .iter()
                    .map(|s| act.parse(s))
                    .collect::<Result<Vec<_>>>()?;
                act.kind = ActionKind::Perm(gens);
                Ok(act)
            }
            (spec, space) => Err(Error::Group(format!(
                "action {spec:?} does not fit a {} space",
                space.kind()
            ))),
        }
    }

    /// The natural action of the free product on its Bass-Serre tree.
    pub fn free_product(space: Arc<GeodesicSpace>) -> GroupAction {
        let GeodesicSpace::BassSerre(bs) = &*space else {
            panic!("free product action needs a Bass-Serre space");
        };
        let g = *bs.group();
        GroupAction {
            space,
            kind: ActionKind::FreeProduct(g),
        }
    }

    pub fn permutations(space: Arc<GeodesicSpace>, generators: Vec<Element>) -> Result<GroupAction> {
        let act = GroupAction {
            space,
            kind: ActionKind::Perm(Vec::new()),
        };
        for g in &generators {
            act.check_automorphism(g)?;
        }
        Ok(GroupAction {
            kind: ActionKind::Perm(generators),
            ..act
        })
    }

    pub fn space(&self) -> &Arc<GeodesicSpace> {
        &self.space
    }

    pub fn free_product_group(&self) -> Option<FreeProduct> {
        match &self.kind {
            ActionKind::FreeProduct(g) => Some(*g),
            ActionKind::Perm(_) => None,
        }
    }

    pub fn spec(&self) -> ActionSpec {
        match &self.kind {
            ActionKind::FreeProduct(g) => ActionSpec::FreeProduct {
                h_order: g.h_order,
                k_order: g.k_order,
            },
            ActionKind::Perm(gens) => ActionSpec::Permutation {
                generators: gens.iter().map(|g| self.format(g)).collect(),
            },
        }
    }

    pub fn identity(&self) -> Element {
        match &self.kind {
            ActionKind::FreeProduct(_) => Element::Word(Word::identity()),
            ActionKind::Perm(_) => {
                Element::Perm((0..self.space.graph().len() as u32).collect())
            }
        }
    }

    pub fn is_identity(&self, g: &Element) -> bool {
        *g == self.identity()
    }

    /// Ambient generators: every nontrivial factor letter, or the given
    /// permutations.
    pub fn generators(&self) -> Vec<Element> {
        match &self.kind {
            ActionKind::FreeProduct(g) => g.factor_letters().into_iter().map(Element::Word).collect(),
            ActionKind::Perm(gens) => gens.clone(),
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        match (&self.kind, a, b) {
            (ActionKind::FreeProduct(g), Element::Word(x), Element::Word(y)) => Element::Word(g.mul(x, y)),
            // (ab)(p) = a(b(p))
            (ActionKind::Perm(_), Element::Perm(x), Element::Perm(y)) => {
                Element::Perm(y.iter().map(|&p| x[p as usize]).collect())
            }
            _ => panic!("element kind does not match the action"),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match (&self.kind, a) {
            (ActionKind::FreeProduct(g), Element::Word(x)) => Element::Word(g.inverse(x)),
            (ActionKind::Perm(_), Element::Perm(x)) => {
                let mut inv = vec![0u32; x.len()];
                for (i, &p) in x.iter().enumerate() {
                    inv[p as usize] = i as u32;
                }
                Element::Perm(inv)
            }
            _ => panic!("element kind does not match the action"),
        }
    }

    pub fn pow(&self, a: &Element, n: u32) -> Element {
        (0..n).fold(self.identity(), |acc, _| self.mul(&acc, a))
    }

    pub fn conjugate(&self, g: &Element, x: &Element) -> Element {
        self.mul(&self.mul(g, x), &self.inverse(g))
    }

    /// Image of a point of the finite view; `None` when it leaves the view.
    pub fn act(&self, g: &Element, p: PointId) -> Option<PointId> {
        match (&*self.space, g) {
            (GeodesicSpace::BassSerre(bs), Element::Word(w)) => bs.locate(&bs.act(w, bs.key(p))),
            (GeodesicSpace::Graph(_), Element::Perm(x)) => x.get(p).map(|&q| q as usize),
            _ => panic!("element kind does not match the action"),
        }
    }

    /// Exact distance `d(p, g·p)`, also when `g·p` leaves the finite view of
    /// a lazy tree.
    pub fn displacement(&self, g: &Element, p: PointId) -> Option<u64> {
        match (&*self.space, g) {
            (GeodesicSpace::BassSerre(bs), Element::Word(w)) => {
                let key = bs.key(p);
                Some(bs.lazy_distance(key, &bs.act(w, key)))
            }
            _ => {
                let q = self.act(g, p)?;
                self.space.graph().distance(p, q).ok()?.finite()
            }
        }
    }

    /// Label of `g·p`. Exact on lazy trees even when the image leaves the
    /// finite view.
    pub fn image_label(&self, g: &Element, p: PointId) -> String {
        match (&*self.space, g) {
            (GeodesicSpace::BassSerre(bs), Element::Word(w)) => bs.act(w, bs.key(p)).to_string(),
            _ => {
                let q = self.act(g, p).expect("permutations act on every point");
                self.space.graph().label(q).to_string()
            }
        }
    }

    /// Smallest `n ≥ 1` with `gⁿ = 1`, if at most `cap`.
    pub fn order(&self, g: &Element, cap: u32) -> Option<u32> {
        let mut x = g.clone();
        for n in 1..=cap {
            if self.is_identity(&x) {
                return Some(n);
            }
            x = self.mul(&x, g);
        }
        None
    }

    /// Elements of `⟨gens⟩` reached by products whose every prefix has at
    /// most `bound` syllables (at most `bound` factors for permutations).
    pub fn subgroup_ball(&self, gens: &[Element], bound: usize) -> Vec<Element> {
        let mut seen: BTreeSet<Element> = BTreeSet::new();
        seen.insert(self.identity());
        let mut frontier = vec![self.identity()];
        let mut depth = 0;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for x in &frontier {
                for g in gens {
                    let y = self.mul(x, g);
                    let ok = match self.syllables(&y) {
                        Some(n) => n <= bound,
                        None => depth <= bound,
                    };
                    if ok && seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().collect()
    }

    /// Syllable length for words; `None` for permutations.
    pub fn syllables(&self, g: &Element) -> Option<usize> {
        g.as_word().map(|w| w.len())
    }

    pub fn format(&self, g: &Element) -> String {
        match g {
            Element::Word(w) => w.to_string(),
            Element::Perm(x) => {
                let g = self.space.graph();
                x.iter().map(|&p| g.label(p as usize)).collect::<Vec<_>>().join(" ")
            }
        }
    }

    pub fn parse(&self, s: &str) -> Result<Element> {
        match &self.kind {
            ActionKind::FreeProduct(g) => Ok(Element::Word(g.parse(s)?)),
            ActionKind::Perm(_) => {
                let g = self.space.graph();
                let images = s
                    .split_whitespace()
                    .map(|l| g.id(l).map(|p| p as u32))
                    .collect::<Result<Vec<_>>>()?;
                if images.len() != g.len() {
                    return Err(Error::Group(format!(
                        "permutation lists {} images for {} vertices",
                        images.len(),
                        g.len()
                    )));
                }
                let e = Element::Perm(images);
                self.check_automorphism(&e)?;
                Ok(e)
            }
        }
    }

    fn check_automorphism(&self, e: &Element) -> Result<()> {
        let Element::Perm(x) = e else {
            return Err(Error::Group("expected a permutation".into()));
        };
        let g = self.space.graph();
        let distinct: HashSet<u32> = x.iter().copied().collect();
        if x.len() != g.len() || distinct.len() != x.len() || x.iter().any(|&p| p as usize >= g.len()) {
            return Err(Error::Group("not a permutation of the vertex set".into()));
        }
        for (u, v) in g.edges() {
            let (a, b) = (x[u] as usize, x[v] as usize);
            if !g.neighbors(a).contains(&b) {
                return Err(Error::Group(format!(
                    "permutation maps edge {}-{} to a non-edge",
                    g.label(u),
                    g.label(v)
                )));
            }
        }
        Ok(())
    }

    /// Every element of the subgroup generated by `gens`, sorted, identity
    /// included. Errors if the subgroup has more than [`CLOSURE_CAP`]
    /// elements.
    pub fn closure(&self, gens: &[Element]) -> Result<Vec<Element>> {
        let mut seen: BTreeSet<Element> = BTreeSet::new();
        let id = self.identity();
        seen.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = self.mul(&x, g);
                if seen.insert(y.clone()) {
                    if seen.len() > CLOSURE_CAP {
                        return Err(Error::Group(format!(
                            "subgroup closure exceeds {CLOSURE_CAP} elements"
                        )));
                    }
                    queue.push_back(y);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// The stabilizer of a point: exact for trees, by enumerating the whole
    /// (finite) group for permutation actions.
    pub fn stabilizer(&self, p: PointId) -> Result<Vec<Element>> {
        match (&*self.space, &self.kind) {
            (GeodesicSpace::BassSerre(bs), ActionKind::FreeProduct(_)) => {
                let mut out = vec![Element::Word(Word::identity())];
                if let PointKey::Vertex(v) = bs.key(p) {
                    out.extend(bs.stabilizer(v).into_iter().map(Element::Word));
                }
                out.sort();
                Ok(out)
            }
            _ => {
                let all = self.closure(&self.generators())?;
                Ok(all.into_iter().filter(|g| self.act(g, p) == Some(p)).collect())
            }
        }
    }

    /// Distinct elements expressible as products of at most `bound` ambient
    /// generators (for words: reduced words of at most `bound` syllables).
    pub fn ball(&self, bound: usize) -> Vec<Element> {
        let gens = self.generators();
        let mut seen: BTreeSet<Element> = BTreeSet::new();
        let mut frontier = vec![self.identity()];
        seen.insert(self.identity());
        for _ in 0..bound {
            let mut next = Vec::new();
            for x in &frontier {
                for g in &gens {
                    let y = self.mul(x, g);
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().collect()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Word(w) => w.fmt(f),
            Element::Perm(x) => {
                let s: Vec<String> = x.iter().map(|p| p.to_string()).collect();
                write!(f, "({})", s.join(" "))
            }
        }
    }
}

/// Reduced alternating words with at most `syllables` letters, in
/// shortlex order.
pub fn alternating_words(group: &FreeProduct, syllables: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..syllables {
        let mut next = Vec::new();
        for w in &frontier {
            for f in [Factor::H, Factor::K] {
                if w.last_factor() == Some(f) {
                    continue;
                }
                for p in 1..group.order(f) {
                    next.push(group.mul(w, &group.letter(f, p)));
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::bass_serre::{BassSerreSpace, VertexKey};
    use crate::metric::cycle_graph;

    fn t23() -> GroupAction {
        let bs = BassSerreSpace::new(2, 3, 38, 4).unwrap();
        GroupAction::free_product(Arc::new(GeodesicSpace::BassSerre(bs)))
    }

    fn bs(a: &GroupAction) -> &BassSerreSpace {
        let GeodesicSpace::BassSerre(b) = &**a.space() else { unreachable!() };
        b
    }

    #[test]
    fn identity_fixes_everything() {
        let a = t23();
        let e = a.identity();
        for p in 0..a.space().graph().len() {
            assert_eq!(a.act(&e, p), Some(p));
        }
    }

    #[test]
    fn h_fixes_base_and_swaps_k_neighbours() {
        let a = t23();
        let b = bs(&a);
        let h = a.parse("h1").unwrap();
        let base = b.locate(&b.base_vertex(Factor::H)).unwrap();
        assert_eq!(a.act(&h, base), Some(base));
        // coset oracle: h·K = hK, the other K-neighbour of H
        let k0 = b.locate(&b.base_vertex(Factor::K)).unwrap();
        let hk = b.locate(&PointKey::Vertex(VertexKey::coset(Factor::K, &b.group().parse("h1").unwrap()))).unwrap();
        assert_eq!(a.act(&h, k0), Some(hk));
        assert_eq!(a.act(&h, hk), Some(k0));
    }

    #[test]
    fn action_is_isometric_homomorphism() {
        let a = t23();
        let g = a.space().graph();
        let words = a.ball(3);
        let pts: Vec<PointId> = bs(&a).vertex_ids().into_iter().take(15).collect();
        for u in words.iter().take(12) {
            for w in words.iter().take(12) {
                let uw = a.mul(u, w);
                for &p in &pts {
                    let lhs = a.act(&uw, p);
                    let rhs = a.act(w, p).and_then(|q| a.act(u, q));
                    if let (Some(l), Some(r)) = (lhs, rhs) {
                        assert_eq!(l, r);
                    }
                }
            }
            for &p in &pts {
                for &q in &pts {
                    if let (Some(gp), Some(gq)) = (a.act(u, p), a.act(u, q)) {
                        assert_eq!(g.distance(gp, gq).unwrap(), g.distance(p, q).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn stabilizers_are_conjugate_factors() {
        let a = t23();
        let b = bs(&a);
        let base_k = b.locate(&b.base_vertex(Factor::K)).unwrap();
        let st = a.stabilizer(base_k).unwrap();
        assert_eq!(st.len(), 3);
        for g in &st {
            assert_eq!(a.act(g, base_k), Some(base_k));
        }
        // interior points have trivial stabilizers
        let interior = (0..a.space().graph().len())
            .find(|&p| matches!(b.key(p), PointKey::Interior { .. }))
            .unwrap();
        assert_eq!(a.stabilizer(interior).unwrap().len(), 1);
    }

    #[test]
    fn word_counts() {
        let g = FreeProduct::new(2, 3).unwrap();
        // 1 + 3 + 4 + 6 + 8 + 12 + 16 + 24 + 32
        assert_eq!(alternating_words(&g, 8).len(), 106);
        let d = FreeProduct::new(2, 2).unwrap();
        assert_eq!(alternating_words(&d, 3).len(), 1 + 2 + 2 + 2);
        assert_eq!(t23().ball(2).len(), 1 + 3 + 4);
    }

    #[test]
    fn cycle_rotations() {
        let space = Arc::new(GeodesicSpace::Graph(cycle_graph(6)));
        let rot = Element::Perm(vec![1, 2, 3, 4, 5, 0]);
        let a = GroupAction::permutations(space.clone(), vec![rot.clone()]).unwrap();
        assert_eq!(a.closure(std::slice::from_ref(&rot)).unwrap().len(), 6);
        assert_eq!(a.stabilizer(0).unwrap().len(), 1);
        assert_eq!(a.format(&rot), "c1 c2 c3 c4 c5 c0");
        assert_eq!(a.parse("c1 c2 c3 c4 c5 c0").unwrap(), rot);
        assert_eq!(a.displacement(&rot, 0), Some(1));
        let bad = Element::Perm(vec![0, 2, 1, 3, 4, 5]);
        assert!(GroupAction::permutations(space, vec![bad]).is_err());
    }
}

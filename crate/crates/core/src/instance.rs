//! Instance directories: `space.json`, `action.json` and `family.json`.
//!
//! A family file names the apices, the rotation subgroups and, optionally,
//! the constants. Anything left out is measured from the space.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{ActionSpec, Element, GroupAction};
use crate::metric::format::SpaceSpec;
use crate::metric::thin::all_triples;
use crate::metric::{cycle_graph, grid_graph, subdivide, thin_delta, GeodesicSpace, GraphSpace, PointId};
use crate::word::FreeProduct;

pub const SPACE_FILE: &str = "space.json";
pub const ACTION_FILE: &str = "action.json";
pub const FAMILY_FILE: &str = "family.json";

/// Above this many points the thinness constant must be declared.
pub const THIN_SAMPLE_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApexKeyword {
    /// Every vertex of the unsubdivided graph or tree.
    Vertices,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ApexSpec {
    Keyword(ApexKeyword),
    Labels(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupKeyword {
    /// `G_c` is the full stabilizer of `c`.
    Stabilizers,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubgroupSpec {
    Keyword(SubgroupKeyword),
    /// Generators per apex label; apices not listed get the trivial group.
    Explicit(BTreeMap<String, Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub apices: ApexSpec,
    pub subgroups: SubgroupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<u64>,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<u64>,
    /// Base apex for windows and the windmill; defaults to the first apex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub space: SpaceSpec,
    pub action: ActionSpec,
    pub family: FamilySpec,
}

/// An instance with its space built and labels resolved.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub spec: Instance,
    pub space: Arc<GeodesicSpace>,
    pub action: GroupAction,
    pub apices: Vec<PointId>,
    /// `None` means full stabilizers.
    pub generators: Option<Vec<Vec<Element>>>,
    /// Index into `apices`.
    pub base: usize,
}

impl Instance {
    /// `Z/h * Z/k` on its Bass-Serre tree with edges subdivided `s` times.
    pub fn bass_serre(h: u32, k: u32, s: u32, truncation: u32) -> Result<Instance> {
        FreeProduct::new(h, k).map_err(|e| Error::Instance(e.to_string()))?;
        if s == 0 {
            return Err(Error::Instance("subdivision must be at least 1".into()));
        }
        Ok(Instance {
            space: SpaceSpec::BassSerre {
                h_order: h,
                k_order: k,
                subdivision: s,
                truncation_syllables: truncation,
            },
            action: ActionSpec::FreeProduct { h_order: h, k_order: k },
            family: FamilySpec {
                apices: ApexSpec::Keyword(ApexKeyword::Vertices),
                subgroups: SubgroupSpec::Keyword(SubgroupKeyword::Stabilizers),
                rho: Some(s as u64),
                delta: None,
                r: None,
                theta: None,
                base: Some("H[e]".into()),
            },
        })
    }

    /// `n`-cycle with the reflection fixing `c0`; one apex at `c0`.
    pub fn cycle(n: usize, s: usize) -> Result<Instance> {
        if n < 3 {
            return Err(Error::Instance(format!("a cycle needs at least 3 vertices, got {n}")));
        }
        let base = cycle_graph(n);
        let perm: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        Instance::explicit(&base, s, &[perm], vec!["c0".into()])
    }

    /// `w × h` grid; the diagonal reflection when square. One apex at the
    /// corner `g0_0`.
    pub fn grid(w: usize, h: usize, s: usize) -> Result<Instance> {
        if w == 0 || h == 0 {
            return Err(Error::Instance("grid sides must be positive".into()));
        }
        let base = grid_graph(w, h);
        let perms = if w == h {
            vec![(0..w * h).map(|id| (id % w) * w + id / w).collect()]
        } else {
            Vec::new()
        };
        Instance::explicit(&base, s, &perms, vec!["g0_0".into()])
    }

    /// Rooted tree with `arity` children per vertex and the given depth,
    /// vertices labelled by child paths (`t`, `t.0`, `t.0.1`, ...). The
    /// action rotates the root's subtrees; every vertex is an apex.
    pub fn tree(arity: usize, depth: usize, s: usize) -> Result<Instance> {
        if arity < 2 || depth == 0 {
            return Err(Error::Instance("a tree needs arity at least 2 and positive depth".into()));
        }
        let mut labels = vec!["t".to_string()];
        let mut edges = Vec::new();
        let mut layer = vec![0usize];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &p in &layer {
                for c in 0..arity {
                    let id = labels.len();
                    labels.push(format!("{}.{c}", labels[p]));
                    edges.push((p, id));
                    next.push(id);
                }
            }
            layer = next;
        }
        let base = GraphSpace::from_edges(labels.clone(), &edges)?;
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let rot: Vec<usize> = labels
            .iter()
            .map(|l| match l.split_once('.') {
                None => 0,
                Some((_, rest)) => {
                    let (first, tail) = rest.split_once('.').map_or((rest, None), |(a, b)| (a, Some(b)));
                    let c = (first.parse::<usize>().expect("child index") + 1) % arity;
                    let image = match tail {
                        None => format!("t.{c}"),
                        Some(t) => format!("t.{c}.{t}"),
                    };
                    index[image.as_str()]
                }
            })
            .collect();
        let mut inst = Instance::explicit(&base, s, &[rot], labels)?;
        inst.family.apices = ApexSpec::Keyword(ApexKeyword::Vertices);
        inst.family.base = Some("t".into());
        Ok(inst)
    }

    /// Subdivides `base` and lifts vertex permutations to the subdivision.
    fn explicit(base: &GraphSpace, s: usize, perms: &[Vec<usize>], apices: Vec<String>) -> Result<Instance> {
        if s == 0 {
            return Err(Error::Instance("subdivision must be at least 1".into()));
        }
        let g = subdivide(base, s);
        let generators = perms.iter().map(|p| lift(base, &g, s, p)).collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            space: SpaceSpec::from_graph(&g),
            action: ActionSpec::Permutation { generators },
            family: FamilySpec {
                base: apices.first().cloned(),
                apices: ApexSpec::Labels(apices),
                subgroups: SubgroupSpec::Keyword(SubgroupKeyword::Stabilizers),
                rho: None,
                delta: None,
                r: None,
                theta: None,
            },
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(SPACE_FILE), serde_json::to_string_pretty(&self.space)?)?;
        fs::write(dir.join(ACTION_FILE), serde_json::to_string_pretty(&self.action)?)?;
        fs::write(dir.join(FAMILY_FILE), serde_json::to_string_pretty(&self.family)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Instance> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| Error::Instance(format!("{}: {e}", dir.join(name).display())))
        };
        Ok(Instance {
            space: serde_json::from_str(&read(SPACE_FILE)?)?,
            action: serde_json::from_str(&read(ACTION_FILE)?)?,
            family: serde_json::from_str(&read(FAMILY_FILE)?)?,
        })
    }

    pub fn load(self) -> Result<Loaded> {
        let space = Arc::new(self.space.build()?);
        let action = GroupAction::from_spec(space.clone(), &self.action)?;
        let g = space.graph();
        let apices = match (&self.family.apices, &*space) {
            (ApexSpec::Keyword(ApexKeyword::Vertices), GeodesicSpace::BassSerre(bs)) => bs.vertex_ids(),
            (ApexSpec::Keyword(ApexKeyword::Vertices), GeodesicSpace::Graph(g)) => {
                (0..g.len()).filter(|&p| !g.label(p).contains('~')).collect()
            }
            (ApexSpec::Labels(ls), _) => ls.iter().map(|l| g.id(l)).collect::<Result<Vec<_>>>()?,
        };
        if apices.is_empty() {
            return Err(Error::Instance("the family has no apices".into()));
        }
        let generators = match &self.family.subgroups {
            SubgroupSpec::Keyword(SubgroupKeyword::Stabilizers) => None,
            SubgroupSpec::Explicit(map) => {
                for l in map.keys() {
                    let p = g.id(l)?;
                    if !apices.contains(&p) {
                        return Err(Error::Instance(format!("subgroup given for non-apex {l}")));
                    }
                }
                let gens = apices
                    .iter()
                    .map(|&p| {
                        map.get(g.label(p))
                            .map(|ws| ws.iter().map(|w| action.parse(w)).collect::<Result<Vec<_>>>())
                            .unwrap_or_else(|| Ok(Vec::new()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(gens)
            }
        };
        let base = match &self.family.base {
            None => 0,
            Some(l) => {
                let p = g.id(l)?;
                apices
                    .iter()
                    .position(|&a| a == p)
                    .ok_or_else(|| Error::Instance(format!("base {l} is not an apex")))?
            }
        };
        Ok(Loaded {
            spec: self,
            space,
            action,
            apices,
            generators,
            base,
        })
    }
}

impl Loaded {
    /// The declared thinness constant, 0 on trees, otherwise measured over
    /// every vertex triple of a small space.
    pub fn delta(&self) -> Result<u64> {
        if let Some(d) = self.spec.family.delta {
            return Ok(d);
        }
        if self.space.is_tree_backend() {
            return Ok(0);
        }
        let g = self.space.graph();
        if g.len() > THIN_SAMPLE_LIMIT {
            return Err(Error::Instance(format!(
                "{} points is too many to measure thinness exhaustively; declare delta in {FAMILY_FILE}",
                g.len()
            )));
        }
        let pts: Vec<PointId> = (0..g.len()).collect();
        Ok(thin_delta(g, &all_triples(&pts)).delta)
    }
}

/// Lifts a vertex permutation of `base` to its `s`-fold subdivision, as an
/// image-label string in point order.
fn lift(base: &GraphSpace, sub: &GraphSpace, s: usize, perm: &[usize]) -> Result<String> {
    let image = |p: PointId| -> Result<String> {
        let l = sub.label(p);
        let Some((ends, i)) = l.rsplit_once('@') else {
            return Ok(base.label(perm[base.id(l)?]).to_string());
        };
        let (u, v) = ends
            .split_once('~')
            .ok_or_else(|| Error::Instance(format!("bad subdivision label {l}")))?;
        let i: usize = i.parse().map_err(|_| Error::Instance(format!("bad subdivision label {l}")))?;
        let (pu, pv) = (base.label(perm[base.id(u)?]), base.label(perm[base.id(v)?]));
        let fwd = format!("{pu}~{pv}@{i}");
        if sub.id(&fwd).is_ok() {
            Ok(fwd)
        } else {
            let back = format!("{pv}~{pu}@{}", s - i);
            sub.id(&back)?;
            Ok(back)
        }
    };
    let images = (0..sub.len()).map(image).collect::<Result<Vec<_>>>()?;
    Ok(images.join(" "))
}

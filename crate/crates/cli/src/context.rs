//! Turning command-line inputs into a loaded instance and its projection data.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::Args;
use projkit::constants::ParameterSet;
use projkit::family::RotatingFamily;
use projkit::group::ActionSpec;
use projkit::instance::{ApexKeyword, ApexSpec, FamilySpec, Instance, Loaded, SubgroupKeyword, SubgroupSpec};
use projkit::metric::format::SpaceSpec;
use projkit::pipeline::{instance_parameters, rotating_family};
use projkit::projection::{build_projection_data, ProjectionData, Window};
use projkit::Verdict;

/// Where the instance comes from, plus overrides of the family file.
#[derive(Args, Clone, Debug, Default)]
pub struct Source {
    /// Directory holding space.json, action.json and family.json.
    #[arg(long, short = 'i')]
    pub instance: Option<PathBuf>,
    /// Space file; overrides the instance directory's.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub action: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// `vertices` or a comma-separated list of apex labels.
    #[arg(long)]
    pub apices: Option<String>,
    #[arg(long)]
    pub rho: Option<u64>,
    #[arg(long)]
    pub delta: Option<u64>,
    #[arg(long = "R")]
    pub r: Option<u64>,
    #[arg(long)]
    pub theta: Option<u64>,
    /// Base apex label.
    #[arg(long)]
    pub base: Option<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Source {
    pub fn instance(&self) -> Result<Instance> {
        let dir_inst = match &self.instance {
            Some(d) => Some(Instance::read(d)?),
            None => None,
        };
        let space: SpaceSpec = match (&self.space, &dir_inst) {
            (Some(p), _) => read_json(p)?,
            (None, Some(i)) => i.space.clone(),
            (None, None) => bail!("give --instance or --space"),
        };
        let action: ActionSpec = match (&self.action, &dir_inst) {
            (Some(p), _) => read_json(p)?,
            (None, Some(i)) => i.action.clone(),
            (None, None) => match &space {
                SpaceSpec::BassSerre { h_order, k_order, .. } => ActionSpec::FreeProduct {
                    h_order: *h_order,
                    k_order: *k_order,
                },
                SpaceSpec::Graph { .. } => ActionSpec::Permutation { generators: Vec::new() },
            },
        };
        let mut family: FamilySpec = match (&self.family, &dir_inst) {
            (Some(p), _) => read_json(p)?,
            (None, Some(i)) => i.family.clone(),
            (None, None) => FamilySpec {
                apices: ApexSpec::Keyword(ApexKeyword::Vertices),
                subgroups: SubgroupSpec::Keyword(SubgroupKeyword::Stabilizers),
                rho: None,
                delta: None,
                r: None,
                theta: None,
                base: None,
            },
        };
        if let Some(a) = &self.apices {
            family.apices = if a == "vertices" {
                ApexSpec::Keyword(ApexKeyword::Vertices)
            } else {
                ApexSpec::Labels(a.split(',').map(|s| s.trim().to_string()).collect())
            };
            if !matches!(family.subgroups, SubgroupSpec::Keyword(_)) {
                family.subgroups = SubgroupSpec::Keyword(SubgroupKeyword::Stabilizers);
            }
        }
        family.rho = self.rho.or(family.rho);
        family.delta = self.delta.or(family.delta);
        family.r = self.r.or(family.r);
        family.theta = self.theta.or(family.theta);
        family.base = self.base.clone().or(family.base);
        Ok(Instance { space, action, family })
    }

    pub fn load(&self) -> Result<Loaded> {
        Ok(self.instance()?.load()?)
    }
}

/// A loaded instance with validated constants, family and projection data.
pub struct Context {
    pub loaded: Loaded,
    pub params: ParameterSet,
    pub fam: RotatingFamily,
    pub data: Arc<ProjectionData>,
}

impl Context {
    pub fn new(src: &Source) -> Result<Context> {
        let loaded = src.load()?;
        let ledger = instance_parameters(&loaded)?;
        if ledger.verdict == Verdict::Fail {
            let bad: Vec<String> = ledger
                .lines
                .iter()
                .filter(|l| l.verdict == Verdict::Fail)
                .map(|l| format!("{} ({}: lhs {}, rhs {})", l.name, l.statement, l.lhs, l.rhs))
                .collect();
            bail!("parameters rejected: {}", bad.join("; "));
        }
        let params = ledger.params;
        let fam = rotating_family(&loaded, &params)?;
        let data = Arc::new(build_projection_data(&fam.family, params.theta));
        Ok(Context {
            loaded,
            params,
            fam,
            data,
        })
    }

    pub fn base(&self) -> usize {
        self.loaded.base
    }

    /// P-ball around the base, or every apex.
    pub fn window(&self, radius: Option<usize>) -> Window {
        match radius {
            Some(r) => Window::p_ball(&self.data, self.base(), r, self.params.k),
            None => Window::all(&self.data),
        }
    }

    pub fn apex(&self, label: &str) -> Result<usize> {
        Ok(self.data.index_of(label)?)
    }
}

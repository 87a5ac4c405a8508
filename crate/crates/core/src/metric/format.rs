//! JSON space descriptions.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metric::{BassSerreSpace, GeodesicSpace, GraphSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Graph {
        vertices: Vec<Value>,
        edges: Vec<(Value, Value)>,
    },
    BassSerre {
        h_order: u32,
        k_order: u32,
        subdivision: u32,
        truncation_syllables: u32,
    },
}

fn label(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Instance(format!("vertex ids must be strings or numbers, got {other}"))),
    }
}

impl SpaceSpec {
    pub fn build(&self) -> Result<GeodesicSpace> {
        match self {
            SpaceSpec::Graph { vertices, edges } => {
                let labels = vertices.iter().map(label).collect::<Result<Vec<_>>>()?;
                let edges = edges
                    .iter()
                    .map(|(a, b)| Ok((label(a)?, label(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GeodesicSpace::Graph(GraphSpace::from_labelled_edges(labels, &edges)?))
            }
            SpaceSpec::BassSerre {
                h_order,
                k_order,
                subdivision,
                truncation_syllables,
            } => Ok(GeodesicSpace::BassSerre(BassSerreSpace::new(
                *h_order,
                *k_order,
                *subdivision,
                *truncation_syllables,
            )?)),
        }
    }

    pub fn from_graph(g: &GraphSpace) -> SpaceSpec {
        SpaceSpec::Graph {
            vertices: g.labels().iter().cloned().map(Value::String).collect(),
            edges: g
                .edges()
                .map(|(u, v)| {
                    (
                        Value::String(g.label(u).to_string()),
                        Value::String(g.label(v).to_string()),
                    )
                })
                .collect(),
        }
    }
}

//! Versioned JSON documents for automata, switched systems, coupled models
//! and co-simulation configurations.
//!
//! Every document carries a `"schema"` string; readers reject unknown
//! versions instead of guessing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Automaton, AutomatonError, Edge, Symbol};
use crate::css::{Css, CssError};
use crate::linalg::{LinalgError, Matrix};
use crate::models::{CosimConfig, CoupledLinearPair, LinearSimulator, ModelError};

pub const AUTOMATON_SCHEMA: &str = "switchprune/automaton/v1";
pub const CSS_SCHEMA: &str = "switchprune/css/v1";
pub const MODEL_SCHEMA: &str = "switchprune/model/v1";
pub const CONFIG_SCHEMA: &str = "switchprune/cosim-configs/v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected schema {expected:?}, found {found:?}")]
    Schema { expected: &'static str, found: String },
    #[error("{what} has a row of length {got}, expected {expected}")]
    RowLength {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("{what} has {got} rows, expected {expected}")]
    RowCount {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Css(#[from] CssError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_schema(found: &str, expected: &'static str) -> Result<(), IoError> {
    if found == expected {
        Ok(())
    } else {
        Err(IoError::Schema {
            expected,
            found: found.to_string(),
        })
    }
}

/// Edges are `[src, dst, label]` with node indices into `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomatonDoc {
    pub schema: String,
    pub m: Symbol,
    pub nodes: Vec<String>,
    pub edges: Vec<[u64; 3]>,
}

impl AutomatonDoc {
    pub fn from_automaton(g: &Automaton) -> Self {
        AutomatonDoc {
            schema: AUTOMATON_SCHEMA.into(),
            m: g.m(),
            nodes: g.names().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| [e.src as u64, e.dst as u64, e.label as u64])
                .collect(),
        }
    }

    pub fn to_automaton(&self) -> Result<Automaton, IoError> {
        check_schema(&self.schema, AUTOMATON_SCHEMA)?;
        let edges = self
            .edges
            .iter()
            .map(|[s, d, a]| {
                let label = Symbol::try_from(*a).unwrap_or(Symbol::MAX);
                Edge::new(*s as usize, *d as usize, label)
            })
            .collect();
        Ok(Automaton::new(self.nodes.clone(), self.m, edges)?)
    }
}

/// Mode matrices and the constraining automaton. A missing automaton means
/// unconstrained switching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CssDoc {
    pub schema: String,
    pub modes: Vec<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub automaton: Option<AutomatonDoc>,
}

impl CssDoc {
    pub fn from_css(s: &Css) -> Self {
        CssDoc {
            schema: CSS_SCHEMA.into(),
            modes: s.modes().to_vec(),
            automaton: Some(AutomatonDoc::from_automaton(s.graph())),
        }
    }

    pub fn to_css(&self) -> Result<Css, IoError> {
        check_schema(&self.schema, CSS_SCHEMA)?;
        Ok(match &self.automaton {
            Some(a) => Css::new(self.modes.clone(), a.to_automaton()?)?,
            None => Css::unconstrained(self.modes.clone())?,
        })
    }
}

/// `ẋ = Ax + Bu`, `y = Cx + Du` with explicit dimensions, so that blocks
/// with a zero dimension are written as `[]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorDoc {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

fn block(what: &str, rows: &[Vec<f64>], r: usize, c: usize) -> Result<Matrix, IoError> {
    // A block with no columns may be written with or without empty rows.
    if c == 0 && rows.is_empty() {
        return Ok(Matrix::zeros(r, 0));
    }
    if rows.len() != r {
        return Err(IoError::RowCount {
            what: what.into(),
            expected: r,
            got: rows.len(),
        });
    }
    let mut data = Vec::with_capacity(r * c);
    for row in rows {
        if row.len() != c {
            return Err(IoError::RowLength {
                what: what.into(),
                expected: c,
                got: row.len(),
            });
        }
        data.extend_from_slice(row);
    }
    Ok(Matrix::new(r, c, data)?)
}

impl SimulatorDoc {
    pub fn from_simulator(s: &LinearSimulator) -> Self {
        SimulatorDoc {
            states: s.states(),
            inputs: s.inputs(),
            outputs: s.outputs(),
            a: s.a.to_rows(),
            b: s.b.to_rows(),
            c: s.c.to_rows(),
            d: s.d.to_rows(),
        }
    }

    pub fn to_simulator(&self, tag: &str) -> Result<LinearSimulator, IoError> {
        let (n, m, p) = (self.states, self.inputs, self.outputs);
        Ok(LinearSimulator {
            a: block(&format!("A{tag}"), &self.a, n, n)?,
            b: block(&format!("B{tag}"), &self.b, n, m)?,
            c: block(&format!("C{tag}"), &self.c, p, n)?,
            d: block(&format!("D{tag}"), &self.d, p, m)?,
        })
    }
}

/// Two simulators coupled by `u1 = y2`, `u2 = y1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub schema: String,
    pub simulator1: SimulatorDoc,
    pub simulator2: SimulatorDoc,
}

impl ModelDoc {
    pub fn from_pair(p: &CoupledLinearPair) -> Self {
        ModelDoc {
            schema: MODEL_SCHEMA.into(),
            simulator1: SimulatorDoc::from_simulator(&p.s1),
            simulator2: SimulatorDoc::from_simulator(&p.s2),
        }
    }

    pub fn to_pair(&self) -> Result<CoupledLinearPair, IoError> {
        check_schema(&self.schema, MODEL_SCHEMA)?;
        Ok(CoupledLinearPair::new(
            self.simulator1.to_simulator("1")?,
            self.simulator2.to_simulator("2")?,
        )?)
    }
}

/// One configuration per mode, in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub schema: String,
    pub modes: Vec<CosimConfig>,
}

impl ConfigDoc {
    pub fn new(modes: Vec<CosimConfig>) -> Self {
        ConfigDoc {
            schema: CONFIG_SCHEMA.into(),
            modes,
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        check_schema(&self.schema, CONFIG_SCHEMA)?;
        if self.modes.is_empty() {
            return Err(ModelError::NoModes.into());
        }
        for c in &self.modes {
            c.steps()?;
        }
        Ok(())
    }
}

pub fn read_automaton(text: &str) -> Result<Automaton, IoError> {
    serde_json::from_str::<AutomatonDoc>(text)?.to_automaton()
}

pub fn write_automaton(g: &Automaton) -> String {
    serde_json::to_string_pretty(&AutomatonDoc::from_automaton(g)).expect("automaton documents serialize")
}

pub fn read_css(text: &str) -> Result<Css, IoError> {
    serde_json::from_str::<CssDoc>(text)?.to_css()
}

pub fn write_css(s: &Css) -> String {
    serde_json::to_string_pretty(&CssDoc::from_css(s)).expect("css documents serialize")
}

pub fn read_model(text: &str) -> Result<CoupledLinearPair, IoError> {
    serde_json::from_str::<ModelDoc>(text)?.to_pair()
}

pub fn read_configs(text: &str) -> Result<Vec<CosimConfig>, IoError> {
    let doc: ConfigDoc = serde_json::from_str(text)?;
    doc.validate()?;
    Ok(doc.modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{pendulum_pair, PendulumParams};

    #[test]
    fn automaton_round_trip() {
        let g = Automaton::with_node_count(
            3,
            2,
            vec![Edge::new(2, 0, 1), Edge::new(0, 1, 2), Edge::new(1, 2, 1), Edge::new(0, 0, 1)],
        )
        .unwrap();
        let back = read_automaton(&write_automaton(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = r#"{"schema": "switchprune/automaton/v9", "m": 1, "nodes": ["q"], "edges": [[0, 0, 1]]}"#;
        assert!(matches!(read_automaton(text), Err(IoError::Schema { .. })));
    }

    #[test]
    fn css_without_automaton_is_unconstrained() {
        let text = r#"{"schema": "switchprune/css/v1", "modes": [[[2.0]], [[0.5]]]}"#;
        let s = read_css(text).unwrap();
        assert_eq!(s.graph().edge_count(), 2);
        assert_eq!(read_css(&write_css(&s)).unwrap(), s);
    }

    #[test]
    fn pendulum_model_round_trip_keeps_empty_blocks() {
        let p = pendulum_pair(&PendulumParams::default()).unwrap();
        assert_eq!(p.s1.states(), 0);
        let text = serde_json::to_string(&ModelDoc::from_pair(&p)).unwrap();
        assert_eq!(read_model(&text).unwrap(), p);
    }

    #[test]
    fn ragged_block_is_an_error() {
        let doc = SimulatorDoc {
            states: 1,
            inputs: 1,
            outputs: 1,
            a: vec![vec![0.0]],
            b: vec![vec![1.0, 2.0]],
            c: vec![vec![1.0]],
            d: vec![vec![0.0]],
        };
        assert!(matches!(doc.to_simulator("1"), Err(IoError::RowLength { .. })));
    }

    #[test]
    fn configs_must_divide() {
        let text = r#"{"schema": "switchprune/cosim-configs/v1", "modes": [
            {"method1": "forward_euler", "h1": 0.1, "method2": "midpoint", "h2": 0.03, "H": 0.1}]}"#;
        assert!(matches!(read_configs(text), Err(IoError::Model(ModelError::NotDivisible { .. }))));
    }
}

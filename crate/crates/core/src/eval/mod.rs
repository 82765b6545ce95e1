//! State evaluation: graph encoding, the built-in hashed-feature model, a
//! uniform evaluator and a client for external evaluators.

mod external;
mod features;
mod graph;
mod linear;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::GameState;
use crate::search::Oracle;

pub use external::{ExternalEvaluator, Transport};
pub use features::{feature_extract, SparseFeatures, DEFAULT_FEATURE_DIM};
pub use graph::{encode_graph, GraphNode, NodeKind, StateGraph};
pub use linear::{FeatureModel, FORMAT_VERSION};

/// Prover-centric value in (-1, 1) and a policy over the whole action space.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub policy: Vec<f64>,
}

impl Evaluation {
    pub fn uniform(action_space: usize) -> Evaluation {
        Evaluation {
            value: 0.0,
            policy: vec![1.0 / action_space as f64; action_space],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    ProverWon,
    AdversaryWon,
    Auxiliary,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::ProverWon, Part::AdversaryWon, Part::Auxiliary];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub graph: StateGraph,
    pub policy_target: Vec<f64>,
    pub value_target: f64,
    pub value_weight: f64,
    pub part: Part,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluator transport failure: {0}")]
    Transport(String),
    #[error("evaluator protocol error: {0}")]
    Protocol(String),
    #[error("{0} is not supported by this evaluator")]
    Unsupported(&'static str),
    #[error("empty batch")]
    EmptyBatch,
    #[error("action space mismatch: evaluator has {expected}, got {found}")]
    ActionSpace { expected: usize, found: usize },
    #[error("parameter file: {0}")]
    Format(String),
    #[error("parameter file version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid evaluator spec `{0}`")]
    Spec(String),
}

impl EvalError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, EvalError::Transport(_))
    }
}

/// A state evaluator. Evaluation takes `&self` so one evaluator can serve
/// concurrent playouts; training needs exclusive access.
pub trait Evaluator: Send + Sync {
    fn name(&self) -> String;

    fn action_space(&self) -> usize;

    /// One evaluation per graph, in order.
    fn evaluate_batch(&self, graphs: &[StateGraph]) -> Result<Vec<Evaluation>, EvalError>;

    /// One gradient step.
    fn train_batch(&mut self, _examples: &[TrainExample]) -> Result<LossReport, EvalError> {
        Err(EvalError::Unsupported("training"))
    }

    fn save_params(&self, _path: &Path) -> Result<(), EvalError> {
        Err(EvalError::Unsupported("saving"))
    }

    fn load_params(&mut self, _path: &Path) -> Result<(), EvalError> {
        Err(EvalError::Unsupported("loading"))
    }

    fn is_trainable(&self) -> bool {
        false
    }
}

impl<E: Evaluator + ?Sized> Oracle<GameState> for E {
    fn evaluate(&self, position: &GameState) -> Result<Evaluation, EvalError> {
        let mut out = self.evaluate_batch(&[encode_graph(position)])?;
        out.pop().ok_or_else(|| EvalError::Protocol("no evaluation returned".into()))
    }
}

/// Value 0 and a uniform policy everywhere.
#[derive(Clone, Debug)]
pub struct UniformEvaluator {
    action_space: usize,
}

impl UniformEvaluator {
    pub fn new(action_space: usize) -> Self {
        UniformEvaluator { action_space }
    }
}

impl Evaluator for UniformEvaluator {
    fn name(&self) -> String {
        "uniform".into()
    }

    fn action_space(&self) -> usize {
        self.action_space
    }

    fn evaluate_batch(&self, graphs: &[StateGraph]) -> Result<Vec<Evaluation>, EvalError> {
        if graphs.is_empty() {
            return Err(EvalError::EmptyBatch);
        }
        Ok(graphs.iter().map(|_| Evaluation::uniform(self.action_space)).collect())
    }
}

/// Builds an evaluator from a spec string:
///
/// * `uniform`
/// * `feature` (fresh zero-weight model) or `feature:<params file>`
/// * `external:<host>:<port>` (TCP) or `external:exec:<command line>`
pub fn evaluator_from_spec(spec: &str, action_space: usize) -> Result<Box<dyn Evaluator>, EvalError> {
    match spec.split_once(':') {
        None if spec == "uniform" => Ok(Box::new(UniformEvaluator::new(action_space))),
        None if spec == "feature" => Ok(Box::new(FeatureModel::new(action_space, DEFAULT_FEATURE_DIM))),
        Some(("feature", path)) => {
            let model = FeatureModel::load(Path::new(path))?;
            if model.action_space() != action_space {
                return Err(EvalError::ActionSpace {
                    expected: action_space,
                    found: model.action_space(),
                });
            }
            Ok(Box::new(model))
        }
        Some(("external", rest)) => {
            let transport = match rest.split_once(':') {
                Some(("exec", cmd)) if !cmd.trim().is_empty() => Transport::Exec(cmd.to_string()),
                Some((host, port)) if port.parse::<u16>().is_ok() => Transport::Tcp(format!("{host}:{port}")),
                _ => return Err(EvalError::Spec(spec.to_string())),
            };
            Ok(Box::new(ExternalEvaluator::connect(transport, action_space, 3)?))
        }
        _ => Err(EvalError::Spec(spec.to_string())),
    }
}

//! Linear policy/value model over hashed features.
//!
//! For features `x` (unit norm, sparse):
//!
//! ```text
//! logit[a] = pbias[a] + sum_i x_i * wp[h(i, a)]
//! policy   = softmax(logit)
//! value    = tanh(vbias + sum_i x_i * wv[i])
//! ```
//!
//! `h(i, a)` mixes the feature slot with the action so the policy head
//! shares one table of `dim` weights across all actions. The loss of a
//! batch is the mean over its examples of
//! `weight * (value - target)^2 - sum_a target_a * log(policy_a)`.
//!
//! Parameter layout for gradient access: `wv[0..dim]`, `wp[0..dim]`,
//! `pbias[0..action_space]`, `vbias`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::features::{feature_extract, fnv1a, SparseFeatures};
use super::{EvalError, Evaluation, Evaluator, LossReport, StateGraph, TrainExample};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"ADVLFEAT";

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureModel {
    action_space: usize,
    dim: usize,
    wv: Vec<f64>,
    wp: Vec<f64>,
    pbias: Vec<f64>,
    vbias: f64,
    pub learning_rate: f64,
}

fn policy_slot(slot: u32, action: usize, dim: usize) -> usize {
    let mixed = (slot as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (action as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    (mixed.rotate_left(29).wrapping_mul(0xff51_afd7_ed55_8ccd) >> 11) as usize % dim
}

struct Forward {
    features: SparseFeatures,
    value: f64,
    policy: Vec<f64>,
}

impl FeatureModel {
    /// Zero-initialised model: value 0 and a uniform policy everywhere.
    pub fn new(action_space: usize, dim: usize) -> FeatureModel {
        assert!(action_space > 0 && dim > 0);
        FeatureModel {
            action_space,
            dim,
            wv: vec![0.0; dim],
            wp: vec![0.0; dim],
            pbias: vec![0.0; action_space],
            vbias: 0.0,
            learning_rate: 1e-2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_params(&self) -> usize {
        2 * self.dim + self.action_space + 1
    }

    pub fn param(&self, i: usize) -> f64 {
        let d = self.dim;
        match i {
            _ if i < d => self.wv[i],
            _ if i < 2 * d => self.wp[i - d],
            _ if i < 2 * d + self.action_space => self.pbias[i - 2 * d],
            _ => self.vbias,
        }
    }

    pub fn set_param(&mut self, i: usize, x: f64) {
        let d = self.dim;
        match i {
            _ if i < d => self.wv[i] = x,
            _ if i < 2 * d => self.wp[i - d] = x,
            _ if i < 2 * d + self.action_space => self.pbias[i - 2 * d] = x,
            _ => self.vbias = x,
        }
    }

    fn forward(&self, graph: &StateGraph) -> Forward {
        let features = feature_extract(graph, self.dim);
        let value = (self.vbias + features.dot(&self.wv)).tanh();
        let mut logits = self.pbias.clone();
        for &(i, x) in &features.entries {
            for (a, l) in logits.iter_mut().enumerate() {
                *l += x * self.wp[policy_slot(i, a, self.dim)];
            }
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        Forward {
            features,
            value,
            policy: exp.into_iter().map(|e| e / sum).collect(),
        }
    }

    fn check(&self, examples: &[TrainExample]) -> Result<(), EvalError> {
        if examples.is_empty() {
            return Err(EvalError::EmptyBatch);
        }
        for e in examples {
            if e.policy_target.len() != self.action_space {
                return Err(EvalError::ActionSpace {
                    expected: self.action_space,
                    found: e.policy_target.len(),
                });
            }
        }
        Ok(())
    }

    /// Batch loss split into its policy and value parts.
    pub fn loss(&self, examples: &[TrainExample]) -> Result<LossReport, EvalError> {
        self.check(examples)?;
        let mut report = LossReport::default();
        for e in examples {
            let f = self.forward(&e.graph);
            report.value_loss += e.value_weight * (f.value - e.value_target).powi(2);
            report.policy_loss += cross_entropy(&e.policy_target, &f.policy);
        }
        let n = examples.len() as f64;
        report.value_loss /= n;
        report.policy_loss /= n;
        Ok(report)
    }

    /// Loss and its gradient as sparse `(parameter index, derivative)` pairs
    /// in increasing index order.
    pub fn loss_and_gradient(&self, examples: &[TrainExample]) -> Result<(LossReport, Vec<(usize, f64)>), EvalError> {
        self.check(examples)?;
        let n = examples.len() as f64;
        let d = self.dim;
        let mut grad: HashMap<usize, f64> = HashMap::new();
        let mut report = LossReport::default();
        for e in examples {
            let f = self.forward(&e.graph);
            report.value_loss += e.value_weight * (f.value - e.value_target).powi(2);
            report.policy_loss += cross_entropy(&e.policy_target, &f.policy);
            let ds = 2.0 * e.value_weight * (f.value - e.value_target) * (1.0 - f.value * f.value) / n;
            if ds != 0.0 {
                for &(i, x) in &f.features.entries {
                    *grad.entry(i as usize).or_insert(0.0) += ds * x;
                }
                *grad.entry(2 * d + self.action_space).or_insert(0.0) += ds;
            }
            let target_mass: f64 = e.policy_target.iter().sum();
            for a in 0..self.action_space {
                let dl = (target_mass * f.policy[a] - e.policy_target[a]) / n;
                if dl == 0.0 {
                    continue;
                }
                *grad.entry(2 * d + a).or_insert(0.0) += dl;
                for &(i, x) in &f.features.entries {
                    *grad.entry(d + policy_slot(i, a, d)).or_insert(0.0) += dl * x;
                }
            }
        }
        report.value_loss /= n;
        report.policy_loss /= n;
        let mut grad: Vec<(usize, f64)> = grad.into_iter().collect();
        grad.sort_by_key(|&(i, _)| i);
        Ok((report, grad))
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        let mut bytes = Vec::with_capacity(32 + 8 * self.num_params());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        bytes.extend_from_slice(&(self.action_space as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.dim as u64).to_le_bytes());
        bytes.extend_from_slice(&self.learning_rate.to_le_bytes());
        for i in 0..self.num_params() {
            bytes.extend_from_slice(&self.param(i).to_le_bytes());
        }
        let checksum = fnv1a(&bytes);
        bytes.extend_from_slice(&checksum.to_le_bytes());
        let io = |source| EvalError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&bytes).map_err(io)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureModel, EvalError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| EvalError::Io {
                path: path.display().to_string(),
                source,
            })?;
        let bad = |m: &str| EvalError::Format(m.to_string());
        if bytes.len() < 44 || &bytes[..8] != MAGIC {
            return Err(bad("not a feature model file"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if fnv1a(body).to_le_bytes() != tail {
            return Err(bad("checksum mismatch"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(EvalError::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let action_space = u64_at(12) as usize;
        let dim = u64_at(20) as usize;
        if action_space == 0 || dim == 0 {
            return Err(bad("empty model"));
        }
        let mut model = FeatureModel::new(action_space, dim);
        model.learning_rate = f64::from_bits(u64_at(28));
        if body.len() != 36 + 8 * model.num_params() {
            return Err(bad("length does not match header"));
        }
        for i in 0..model.num_params() {
            model.set_param(i, f64::from_bits(u64_at(36 + 8 * i)));
        }
        Ok(model)
    }
}

fn cross_entropy(target: &[f64], policy: &[f64]) -> f64 {
    target
        .iter()
        .zip(policy)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| -t * p.max(f64::MIN_POSITIVE).ln())
        .sum()
}

impl Evaluator for FeatureModel {
    fn name(&self) -> String {
        format!("feature(dim={})", self.dim)
    }

    fn action_space(&self) -> usize {
        self.action_space
    }

    fn evaluate_batch(&self, graphs: &[StateGraph]) -> Result<Vec<Evaluation>, EvalError> {
        if graphs.is_empty() {
            return Err(EvalError::EmptyBatch);
        }
        Ok(graphs
            .iter()
            .map(|g| {
                let f = self.forward(g);
                Evaluation {
                    value: f.value,
                    policy: f.policy,
                }
            })
            .collect())
    }

    /// One SGD step; reports the loss before the step.
    fn train_batch(&mut self, examples: &[TrainExample]) -> Result<LossReport, EvalError> {
        let (report, grad) = self.loss_and_gradient(examples)?;
        for (i, g) in grad {
            let x = self.param(i) - self.learning_rate * g;
            self.set_param(i, x);
        }
        Ok(report)
    }

    fn save_params(&self, path: &Path) -> Result<(), EvalError> {
        self.save(path)
    }

    fn load_params(&mut self, path: &Path) -> Result<(), EvalError> {
        *self = FeatureModel::load(path)?;
        Ok(())
    }

    fn is_trainable(&self) -> bool {
        true
    }
}

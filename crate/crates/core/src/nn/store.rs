use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Named model parameters with their gradient buffers and Adam state.
///
/// Entries are kept in a sorted map so that iteration order, and with it the
/// optimizer update order and the serialized byte stream, is deterministic.
#[derive(Clone, Debug, Default)]
pub struct ParameterStore {
    entries: BTreeMap<String, Param>,
}

#[derive(Clone, Debug)]
struct Param {
    value: Tensor,
    grad: Tensor,
    moment1: Tensor,
    moment2: Tensor,
    steps: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let name = name.into();
        assert!(
            !self.entries.contains_key(&name),
            "duplicate parameter name {name}"
        );
        let grad = Tensor::zeros_like(&value);
        let moment1 = Tensor::zeros_like(&value);
        let moment2 = Tensor::zeros_like(&value);
        self.entries.insert(
            name,
            Param {
                value,
                grad,
                moment1,
                moment2,
                steps: 0,
            },
        );
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn tensor(&self, name: &str) -> &Tensor {
        &self
            .entries
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .value
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut Tensor {
        &mut self
            .entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .value
    }

    pub fn grad(&self, name: &str) -> &Tensor {
        &self
            .entries
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .grad
    }

    pub fn add_grad(&mut self, name: &str, g: &Tensor) {
        self.entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .grad
            .add_assign(g);
    }

    pub fn zero_grads(&mut self) {
        for p in self.entries.values_mut() {
            p.grad.fill(0.0);
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn parameter_count(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    /// Global L2 norm of all gradients.
    pub fn grad_norm(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|p| p.grad.data())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales all gradients so their global norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for p in self.entries.values_mut() {
                p.grad.data_mut().iter_mut().for_each(|g| *g *= scale);
            }
        }
        norm
    }

    /// One bias-corrected Adam update over every parameter, in place.
    /// Gradients are consumed (reset to zero) afterwards.
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        for p in self.entries.values_mut() {
            p.steps += 1;
            let t = p.steps as i32;
            let bc1 = 1.0 - cfg.beta1.powi(t);
            let bc2 = 1.0 - cfg.beta2.powi(t);
            let value = p.value.data_mut();
            let grad = p.grad.data_mut();
            let m = p.moment1.data_mut();
            let v = p.moment2.data_mut();
            for i in 0..value.len() {
                let g = grad[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
                grad[i] = 0.0;
            }
        }
    }

    pub fn to_document(&self, hyperparams: serde_json::Value) -> ModelDocument {
        let tensors = self
            .entries
            .iter()
            .map(|(name, p)| {
                (
                    name.clone(),
                    TensorRecord {
                        shape: p.value.shape().to_vec(),
                        data: p.value.data().to_vec(),
                    },
                )
            })
            .collect();
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            hyperparams,
            tensors,
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<(Self, serde_json::Value)> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unknown format version {} (expected {})",
                doc.format_version, MODEL_FORMAT_VERSION
            )));
        }
        let mut store = ParameterStore::new();
        for (name, rec) in doc.tensors {
            if rec.shape.iter().product::<usize>() != rec.data.len() {
                return Err(Error::ModelFormat(format!(
                    "tensor {name} has {} values but shape {:?}",
                    rec.data.len(),
                    rec.shape
                )));
            }
            store.insert(name, Tensor::new(rec.shape, rec.data));
        }
        Ok((store, doc.hyperparams))
    }

    pub fn save(&self, path: &Path, hyperparams: serde_json::Value) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let writer = BufWriter::new(file);
        serde_json::to_writer(writer, &self.to_document(hyperparams))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let doc: ModelDocument = serde_json::from_reader(reader)?;
        Self::from_document(doc)
    }

    /// Serialized form, used by the determinism checks.
    pub fn to_json_string(&self, hyperparams: serde_json::Value) -> String {
        serde_json::to_string(&self.to_document(hyperparams)).expect("model serialization")
    }
}

/// On-disk model schema shared by all networks.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub hyperparams: serde_json::Value,
    pub tensors: BTreeMap<String, TensorRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

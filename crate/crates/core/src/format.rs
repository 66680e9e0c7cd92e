//! Instance JSON files.
//!
//! ```json
//! {
//!   "variable_ids": [0, 1],
//!   "linear_terms": [{"id": 0, "coeff": -1.0}],
//!   "quadratic_terms": [{"id_head": 0, "id_tail": 1, "coeff": -1.0}],
//!   "variable_domain": "spin",
//!   "offset": 0.0,
//!   "metadata": {}
//! }
//! ```
//!
//! Ids are external labels; they are mapped to dense indices by their
//! position in the sorted `variable_ids` list. Only nonzero linear terms are
//! written; every quadratic term is written so the graph is preserved.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{BoolModel, IsingModel, Metadata};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Spin,
    Boolean,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinearTerm {
    id: usize,
    coeff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct QuadraticTerm {
    id_head: usize,
    id_tail: usize,
    coeff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    variable_ids: Vec<usize>,
    linear_terms: Vec<LinearTerm>,
    quadratic_terms: Vec<QuadraticTerm>,
    variable_domain: Domain,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    metadata: Metadata,
}

/// A model read from or written to an instance file.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Spin { model: IsingModel, offset: f64 },
    Boolean(BoolModel),
}

impl Instance {
    pub fn spin(model: IsingModel) -> Self {
        Instance::Spin { model, offset: 0.0 }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Instance::Spin { .. } => Domain::Spin,
            Instance::Boolean(_) => Domain::Boolean,
        }
    }

    /// Ising view plus the constant separating the file's objective from `E(σ)`.
    pub fn into_ising(self) -> (IsingModel, f64) {
        match self {
            Instance::Spin { model, offset } => (model, offset),
            Instance::Boolean(b) => {
                let (model, k) = b.to_ising();
                (model, k)
            }
        }
    }

    /// Boolean view; the offset is folded into the model.
    pub fn into_boolean(self) -> BoolModel {
        match self {
            Instance::Spin { model, offset } => {
                let b = model.to_boolean();
                let labels = b.labels().to_vec();
                let metadata = b.metadata().clone();
                let quadratic: Vec<_> = b.quadratic().iter().map(|e| (e.i, e.j, e.coupling)).collect();
                BoolModel::new(b.node_count(), quadratic, b.linear().to_vec(), b.offset() + offset)
                    .and_then(|m| m.with_labels(labels))
                    .expect("converted model is well formed")
                    .with_metadata(metadata)
            }
            Instance::Boolean(b) => b,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = match self {
            Instance::Spin { model, offset } => InstanceFile {
                variable_ids: model.labels().to_vec(),
                linear_terms: linear_terms(model.labels(), model.fields()),
                quadratic_terms: quadratic_terms(
                    model.labels(),
                    model.edges().iter().map(|e| (e.i, e.j, e.coupling)),
                ),
                variable_domain: Domain::Spin,
                offset: *offset,
                metadata: model.metadata().clone(),
            },
            Instance::Boolean(b) => InstanceFile {
                variable_ids: b.labels().to_vec(),
                linear_terms: linear_terms(b.labels(), b.linear()),
                quadratic_terms: quadratic_terms(
                    b.labels(),
                    b.quadratic().iter().map(|e| (e.i, e.j, e.coupling)),
                ),
                variable_domain: Domain::Boolean,
                offset: b.offset(),
                metadata: b.metadata().clone(),
            },
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.variable_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInstance(
                "variable_ids must be sorted and unique".into(),
            ));
        }
        let index: HashMap<usize, usize> = file
            .variable_ids
            .iter()
            .enumerate()
            .map(|(pos, &id)| (id, pos))
            .collect();
        let lookup = |id: usize| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::InvalidInstance(format!("term references unknown id {id}")))
        };
        let n = file.variable_ids.len();
        let mut linear = vec![0.0; n];
        for t in &file.linear_terms {
            let i = lookup(t.id)?;
            if linear[i] != 0.0 {
                return Err(Error::InvalidInstance(format!("duplicate linear term for id {}", t.id)));
            }
            linear[i] = t.coeff;
        }
        let mut quadratic = Vec::with_capacity(file.quadratic_terms.len());
        for t in &file.quadratic_terms {
            if t.id_head >= t.id_tail {
                return Err(Error::InvalidInstance(format!(
                    "quadratic term ({}, {}) must have id_head < id_tail",
                    t.id_head, t.id_tail
                )));
            }
            quadratic.push((lookup(t.id_head)?, lookup(t.id_tail)?, t.coeff));
        }
        Ok(match file.variable_domain {
            Domain::Spin => Instance::Spin {
                model: IsingModel::new(n, quadratic, linear)?
                    .with_labels(file.variable_ids)?
                    .with_metadata(file.metadata),
                offset: file.offset,
            },
            Domain::Boolean => Instance::Boolean(
                BoolModel::new(n, quadratic, linear, file.offset)?
                    .with_labels(file.variable_ids)?
                    .with_metadata(file.metadata),
            ),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}

fn linear_terms(labels: &[usize], coeffs: &[f64]) -> Vec<LinearTerm> {
    labels
        .iter()
        .zip(coeffs)
        .filter(|(_, &c)| c != 0.0)
        .map(|(&id, &coeff)| LinearTerm { id, coeff })
        .collect()
}

fn quadratic_terms(
    labels: &[usize],
    terms: impl Iterator<Item = (usize, usize, f64)>,
) -> Vec<QuadraticTerm> {
    terms
        .map(|(i, j, coeff)| QuadraticTerm {
            id_head: labels[i],
            id_tail: labels[j],
            coeff,
        })
        .collect()
}

/// Reads an instance and returns its Ising view; boolean files are converted.
pub fn load_ising(path: impl AsRef<Path>) -> Result<IsingModel> {
    Ok(Instance::load(path)?.into_ising().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::Spins;

    #[test]
    fn spin_round_trip_with_labels() {
        let model = IsingModel::new(3, [(0, 1, -1.0), (1, 2, 0.2)], vec![0.0, -1.0, 0.1])
            .unwrap()
            .with_labels(vec![4, 9, 130])
            .unwrap();
        let text = Instance::spin(model.clone()).to_json_string().unwrap();
        let back = Instance::from_json_str(&text).unwrap();
        assert_eq!(back, Instance::spin(model));
        assert!(text.contains("\"id_head\": 9"));
    }

    #[test]
    fn boolean_file_becomes_ising() {
        let text = r#"{"variable_ids":[0,1],"linear_terms":[{"id":0,"coeff":-2.0},{"id":1,"coeff":-2.0}],
            "quadratic_terms":[{"id_head":0,"id_tail":1,"coeff":4.0}],"variable_domain":"boolean","offset":1.0}"#;
        let inst = Instance::from_json_str(text).unwrap();
        assert_eq!(inst.domain(), Domain::Boolean);
        let (m, k) = inst.into_ising();
        assert_eq!(m.edges()[0].coupling, 1.0);
        assert_eq!(k, 0.0);
        assert_eq!(m.energy(&Spins::uniform(2, 1)).unwrap(), 1.0);
    }

    #[test]
    fn rejects_malformed_files() {
        let unsorted = r#"{"variable_ids":[1,0],"linear_terms":[],"quadratic_terms":[],"variable_domain":"spin"}"#;
        assert!(Instance::from_json_str(unsorted).is_err());
        let unknown = r#"{"variable_ids":[0],"linear_terms":[{"id":5,"coeff":1}],"quadratic_terms":[],"variable_domain":"spin"}"#;
        assert!(Instance::from_json_str(unknown).is_err());
        let reversed = r#"{"variable_ids":[0,1],"linear_terms":[],"quadratic_terms":[{"id_head":1,"id_tail":0,"coeff":1}],"variable_domain":"spin"}"#;
        assert!(Instance::from_json_str(reversed).is_err());
        assert!(Instance::from_json_str("{").is_err());
    }

    #[test]
    fn full_precision_survives() {
        let model = IsingModel::new(2, [(0, 1, 0.1 + 0.2)], vec![1.0 / 3.0, -2.0 / 7.0]).unwrap();
        let text = Instance::spin(model.clone()).to_json_string().unwrap();
        assert_eq!(Instance::from_json_str(&text).unwrap(), Instance::spin(model));
    }
}

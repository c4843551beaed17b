//! Runtime model selection: built-in families registered by name plus JSON
//! model-definition files.
//!
//! A model definition file is a JSON document with fields `dim`, `param_dim`,
//! `kind ∈ {"builtin", "affine"}`; builtin documents carry a `tag` (and
//! optional `params`), affine documents carry a base matrix `rho0` and
//! direction matrices `B`, with complex entries encoded as two-element arrays
//! `[re, im]`.

use std::path::Path;
use std::sync::Arc;

use serde_json::Value;

use crate::linalg::{c64, CMatrix};
use crate::model::builtin::{AffineModel, BlochBall, ProductNonIid, Pure1d, SpinCoherent};
use crate::model::Model;
use crate::{Error, Result};

/// A model resolved from a name or definition file. Product families are not
/// single-system models and are carried separately.
#[derive(Clone)]
pub enum LoadedModel {
    Single(Arc<dyn Model>),
    Product(Arc<ProductNonIid>),
}

impl LoadedModel {
    /// The single-system model, or an error for product families.
    pub fn single(&self) -> Result<Arc<dyn Model>> {
        match self {
            LoadedModel::Single(m) => Ok(m.clone()),
            LoadedModel::Product(_) => Err(Error::ModelSpec(
                "this operation needs a single-system model; product_non_iid is a site sequence"
                    .into(),
            )),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            LoadedModel::Single(m) => m.param_dim(),
            LoadedModel::Product(p) => p.param_dim(),
        }
    }
}

type Factory = fn(&Value) -> Result<LoadedModel>;

struct Entry {
    name: &'static str,
    summary: &'static str,
    build: Factory,
}

/// Registry of built-in model families keyed by tag.
pub struct ModelRegistry {
    entries: Vec<Entry>,
}

fn num_param(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::ModelSpec(format!("parameter `{key}` must be a number"))),
    }
}

impl ModelRegistry {
    pub fn builtin() -> Self {
        Self {
            entries: vec![
                Entry {
                    name: "pure_1d",
                    summary: "one-parameter pure qubit family, Bloch vector (tanh t, 0, sech t)",
                    build: |_| Ok(LoadedModel::Single(Arc::new(Pure1d))),
                },
                Entry {
                    name: "spin_coherent",
                    summary: "pure qubit family over the open unit disk (two parameters)",
                    build: |_| Ok(LoadedModel::Single(Arc::new(SpinCoherent))),
                },
                Entry {
                    name: "bloch_ball",
                    summary: "full qubit family over the open unit ball (three parameters)",
                    build: |_| Ok(LoadedModel::Single(Arc::new(BlochBall))),
                },
                Entry {
                    name: "product_non_iid",
                    summary:
                        "site sequence of contracted Bloch models, gamma_k = 1 - c*ratio^(k-1)",
                    build: |params| {
                        let c = num_param(params, "c", 0.5)?;
                        let ratio = num_param(params, "ratio", 0.5)?;
                        Ok(LoadedModel::Product(Arc::new(ProductNonIid::new(
                            c, ratio,
                        )?)))
                    },
                },
            ],
        }
    }

    pub fn names(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }

    /// Instantiate a registered family by tag.
    pub fn build(&self, tag: &str, params: &Value) -> Result<LoadedModel> {
        let entry = self.entries.iter().find(|e| e.name == tag).ok_or_else(|| {
            Error::ModelSpec(format!(
                "unknown builtin model `{tag}`; known tags: {}",
                self.entries
                    .iter()
                    .map(|e| e.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
        (entry.build)(params)
    }

    /// Resolve a CLI model argument: a registered tag, or a path to a model
    /// definition file.
    pub fn resolve(&self, spec: &str) -> Result<LoadedModel> {
        if self.entries.iter().any(|e| e.name == spec) {
            return self.build(spec, &Value::Null);
        }
        let path = Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::ModelSpec(format!("cannot read model file {spec}: {e}")))?;
            return self.load_document(&text);
        }
        Err(Error::ModelSpec(format!(
            "`{spec}` is neither a builtin model tag nor an existing model file"
        )))
    }

    /// Parse a JSON model definition document.
    pub fn load_document(&self, text: &str) -> Result<LoadedModel> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::ModelSpec(format!("model file is not valid JSON: {e}")))?;
        let kind = doc
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::ModelSpec("model file needs a string field `kind`".into()))?;
        let dim = doc
            .get("dim")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::ModelSpec("model file needs an integer field `dim`".into()))?
            as usize;
        let param_dim = doc
            .get("param_dim")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| {
                Error::ModelSpec("model file needs an integer field `param_dim`".into())
            })? as usize;

        let loaded = match kind {
            "builtin" => {
                let tag = doc.get("tag").and_then(|v| v.as_str()).ok_or_else(|| {
                    Error::ModelSpec("builtin model file needs a string field `tag`".into())
                })?;
                let default = Value::Object(Default::default());
                let params = doc.get("params").unwrap_or(&default);
                self.build(tag, params)?
            }
            "affine" => {
                let rho0 = parse_matrix(doc.get("rho0").ok_or_else(|| {
                    Error::ModelSpec("affine model file needs a matrix field `rho0`".into())
                })?)?;
                let dirs_val = doc.get("B").and_then(|v| v.as_array()).ok_or_else(|| {
                    Error::ModelSpec("affine model file needs an array field `B`".into())
                })?;
                let dirs = dirs_val
                    .iter()
                    .map(parse_matrix)
                    .collect::<Result<Vec<_>>>()?;
                LoadedModel::Single(Arc::new(AffineModel::new(rho0, dirs)?))
            }
            other => {
                return Err(Error::ModelSpec(format!(
                    "unknown model kind `{other}` (expected \"builtin\" or \"affine\")"
                )))
            }
        };

        // Cross-check the declared shapes.
        let (got_dim, got_pd) = match &loaded {
            LoadedModel::Single(m) => (m.hilbert_dim(), m.param_dim()),
            LoadedModel::Product(p) => (p.hilbert_dim(), p.param_dim()),
        };
        if got_dim != dim || got_pd != param_dim {
            return Err(Error::ModelSpec(format!(
                "declared dim/param_dim ({dim}, {param_dim}) do not match the model ({got_dim}, {got_pd})"
            )));
        }
        Ok(loaded)
    }
}

/// Parse a matrix with complex entries encoded as `[re, im]` pairs.
pub fn parse_matrix(v: &Value) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::ModelSpec("matrix must be an array of rows".into()))?;
    let nrows = rows.len();
    let mut data: Vec<Vec<crate::linalg::C64>> = Vec::with_capacity(nrows);
    for row in rows {
        let cols = row
            .as_array()
            .ok_or_else(|| Error::ModelSpec("matrix row must be an array".into()))?;
        let mut out = Vec::with_capacity(cols.len());
        for entry in cols {
            let pair = entry
                .as_array()
                .ok_or_else(|| Error::ModelSpec("matrix entry must be [re, im]".into()))?;
            if pair.len() != 2 {
                return Err(Error::ModelSpec("matrix entry must be [re, im]".into()));
            }
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| Error::ModelSpec("matrix entry parts must be numbers".into()))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| Error::ModelSpec("matrix entry parts must be numbers".into()))?;
            out.push(c64(re, im));
        }
        data.push(out);
    }
    let ncols = data.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 || data.iter().any(|r| r.len() != ncols) {
        return Err(Error::ModelSpec(
            "matrix rows must be nonempty and equal length".into(),
        ));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| data[i][j]))
}

/// Serialize a complex matrix in the `[re, im]` file encoding.
pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            serde_json::json!([z.re, z.im])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::approx_eq;
    use crate::model::state_at;

    #[test]
    fn registry_resolves_builtins() {
        let reg = ModelRegistry::builtin();
        let m = reg.resolve("bloch_ball").unwrap().single().unwrap();
        assert_eq!(m.param_dim(), 3);
        assert!(reg.resolve("no_such_model").is_err());
    }

    #[test]
    fn affine_document_round_trip() {
        let doc = r#"{
            "dim": 2, "param_dim": 1, "kind": "affine",
            "rho0": [[[0.8, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.2, 0.0]]],
            "B": [[[[0.0, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.0, 0.0]]]]
        }"#;
        let reg = ModelRegistry::builtin();
        let m = reg.load_document(doc).unwrap().single().unwrap();
        let rho = state_at(m.as_ref(), &[0.1]).unwrap();
        let mut expected = CMatrix::zeros(2, 2);
        expected[(0, 0)] = c64(0.8, 0.0);
        expected[(1, 1)] = c64(0.2, 0.0);
        expected[(0, 1)] = c64(0.05, 0.0);
        expected[(1, 0)] = c64(0.05, 0.0);
        assert!(approx_eq(rho.matrix(), &expected, 1e-14));
        // positivity enforced at evaluation time
        assert!(state_at(m.as_ref(), &[5.0]).is_err());
    }

    #[test]
    fn product_params_are_validated() {
        let reg = ModelRegistry::builtin();
        let doc = r#"{"dim": 2, "param_dim": 3, "kind": "builtin", "tag": "product_non_iid",
                      "params": {"c": 1.5}}"#;
        assert!(reg.load_document(doc).is_err());
    }
}

//! Python bindings: train, load and query generative forests.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use gefs::bench::config::LeafKind;
use gefs::bench::metrics;
use gefs::bench::model::{load_model, save_model, SavedModel};
use gefs::convert::{rf_to_gef, CombineMode, GeF};
use gefs::data::{load_csv, standardize, PartialInstance, Schema};
use gefs::forest::{learn_forest, ForestParams};
use gefs::inference;

fn to_py(e: gefs::Error) -> PyErr {
    match e {
        gefs::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

pub fn parse_mode(mode: &str) -> PyResult<CombineMode> {
    match mode {
        "gef" => Ok(CombineMode::AverageConditionals),
        "gefplus" => Ok(CombineMode::UniformMixture),
        _ => Err(PyValueError::new_err(format!("mode must be 'gef' or 'gefplus', got {mode:?}"))),
    }
}

/// A trained forest and its circuit form, queried in raw feature units.
/// Categorical values are category indices; `None` marks a missing value.
#[pyclass(module = "gefs_py", frozen)]
pub struct Model {
    inner: SavedModel,
}

impl Model {
    fn gef(&self) -> PyResult<&GeF> {
        self.inner
            .gef
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("model holds no converted forest"))
    }

    fn query(&self, row: Vec<Option<f64>>) -> PyResult<PartialInstance> {
        let q = PartialInstance::new(row);
        q.validate(&self.inner.schema).map_err(to_py)?;
        Ok(match &self.inner.stats {
            Some(s) => s.apply_instance(&q),
            None => q,
        })
    }
}

#[pymethods]
impl Model {
    /// Learns a forest on a labelled CSV and converts it.
    #[staticmethod]
    #[pyo3(signature = (data, schema=None, n_trees=100, seed=0, leaf="factorized", mode="gef"))]
    fn train(
        data: PathBuf,
        schema: Option<PathBuf>,
        n_trees: usize,
        seed: u64,
        leaf: &str,
        mode: &str,
    ) -> PyResult<Self> {
        let mode = parse_mode(mode)?;
        let leaf: LeafKind = leaf.parse().map_err(to_py)?;
        let schema_path = schema.unwrap_or_else(|| {
            let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            data.with_file_name(format!("{stem}.schema.toml"))
        });
        let schema = Arc::new(Schema::load(&schema_path).map_err(to_py)?);
        let raw = load_csv(&data, schema).map_err(to_py)?;
        let (train, _, stats) = standardize(&raw, &[]);
        let params = ForestParams {
            n_trees,
            ..ForestParams::default()
        };
        let forest = learn_forest(&train, &params, seed).map_err(to_py)?;
        let gef = rf_to_gef(&forest, &train, &leaf.model_for(&train), mode).map_err(to_py)?;
        Ok(Model {
            inner: SavedModel {
                schema: raw.schema().clone(),
                stats: Some(stats),
                forest: Some(forest),
                gef: Some(gef),
            },
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model {
            inner: load_model(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model(&self.inner, path).map_err(to_py)
    }

    /// Copy combining the same trees in another mode.
    fn with_mode(&self, mode: &str) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        inner.gef = Some(self.gef()?.clone().with_mode(parse_mode(mode)?));
        Ok(Model { inner })
    }

    #[getter]
    fn mode(&self) -> PyResult<&'static str> {
        Ok(self.gef()?.mode().name())
    }

    #[getter]
    fn n_trees(&self) -> PyResult<usize> {
        Ok(self.gef()?.n_trees())
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        let s = &self.inner.schema;
        (0..s.n_features()).map(|f| s.feature_name(f).to_string()).collect()
    }

    #[getter]
    fn class_labels(&self) -> Vec<String> {
        self.inner.schema.class_labels().to_vec()
    }

    fn predict_proba(&self, row: Vec<Option<f64>>) -> PyResult<Vec<f64>> {
        Ok(inference::predict(self.gef()?, &self.query(row)?).probs)
    }

    fn predict(&self, row: Vec<Option<f64>>) -> PyResult<usize> {
        Ok(inference::predict(self.gef()?, &self.query(row)?).class)
    }

    /// `log p(x_o)` of the observed (standardized) features; needs mode
    /// "gefplus".
    fn log_density(&self, row: Vec<Option<f64>>) -> PyResult<f64> {
        inference::outlier_score(self.gef()?, &self.query(row)?).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        match &self.inner.gef {
            Some(g) => format!("Model(mode={:?}, n_trees={}, leaves={:?})", g.mode().name(), g.n_trees(), g.leaf_model()),
            None => "Model(forest only)".into(),
        }
    }
}

/// Probability that an in-distribution score beats an outlier score.
#[pyfunction]
fn auc_roc(in_scores: Vec<f64>, out_scores: Vec<f64>) -> PyResult<f64> {
    metrics::auc_roc(&in_scores, &out_scores).map_err(to_py)
}

#[pymodule]
fn gefs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(auc_roc, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_parse() {
        assert_eq!(parse_mode("gef").unwrap(), CombineMode::AverageConditionals);
        assert_eq!(parse_mode("gefplus").unwrap(), CombineMode::UniformMixture);
    }
}

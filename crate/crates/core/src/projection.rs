//! Linear 2D projection of instances: a model names d features, normalizes
//! each one, and maps the normalized vector through a 2×d matrix to plane
//! coordinates (Z1, Z2). Models serialize to JSON so a fitted pipeline can
//! be replayed on new instances; a built-in reference model ships with the
//! crate.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{catalog, FeatureVector};
use crate::metadata::MetadataTable;
use crate::pipeline::prelim::FeatureTransform;

/// Input normalization applied before the matrix. `Identity` is the
/// contract that callers feed already-normalized values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTransform {
    Identity,
    PerFeature(Vec<FeatureTransform>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub feature_names: Vec<String>,
    /// Row-major: `matrix[0]` produces Z1, `matrix[1]` produces Z2.
    pub matrix: Vec<Vec<f64>>,
    pub transform: ModelTransform,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("model matrix must have exactly 2 rows, found {0}")]
    BadRowCount(usize),
    #[error("matrix row {row} has {len} entries for {d} named features")]
    BadRowLength { row: usize, len: usize, d: usize },
    #[error("transform covers {len} features but the model names {d}")]
    BadTransformLength { len: usize, d: usize },
    #[error("transform for `{0}` has sd = 0")]
    ZeroSd(String),
    #[error("`{0}` is not a known feature name")]
    UnknownFeature(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ProjectError {
    #[error("missing features: {}", .0.join(", "))]
    MissingFeatures(Vec<String>),
}

impl ProjectionModel {
    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let d = self.d();
        if self.matrix.len() != 2 {
            return Err(ModelError::BadRowCount(self.matrix.len()));
        }
        for (row, r) in self.matrix.iter().enumerate() {
            if r.len() != d {
                return Err(ModelError::BadRowLength { row, len: r.len(), d });
            }
        }
        if let ModelTransform::PerFeature(ts) = &self.transform {
            if ts.len() != d {
                return Err(ModelError::BadTransformLength { len: ts.len(), d });
            }
            for (t, name) in ts.iter().zip(&self.feature_names) {
                if t.sd == 0.0 {
                    return Err(ModelError::ZeroSd(name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Check that every model feature is in the extraction catalog. Not part
    /// of `validate`: fitted models may legitimately name columns of an
    /// external metadata table that the extractor never produces.
    pub fn check_catalog(&self) -> Result<(), ModelError> {
        let known = catalog();
        for name in &self.feature_names {
            if !known.contains(name) {
                return Err(ModelError::UnknownFeature(name.clone()));
            }
        }
        Ok(())
    }

    fn normalized(&self, j: usize, x: f64) -> f64 {
        match &self.transform {
            ModelTransform::Identity => x,
            ModelTransform::PerFeature(ts) => ts[j].apply(x),
        }
    }

    /// Project raw values already ordered like `feature_names`.
    pub fn project_values(&self, values: &[f64]) -> [f64; 2] {
        debug_assert_eq!(values.len(), self.d());
        let mut z = [0.0f64; 2];
        for (j, &x) in values.iter().enumerate() {
            let v = self.normalized(j, x);
            z[0] += self.matrix[0][j] * v;
            z[1] += self.matrix[1][j] * v;
        }
        z
    }

    /// Project via a name lookup. Every model feature must resolve to a
    /// finite value; the error lists all that do not.
    pub fn project_with(&self, get: impl Fn(&str) -> Option<f64>) -> Result<[f64; 2], ProjectError> {
        let mut values = Vec::with_capacity(self.d());
        let mut missing = Vec::new();
        for name in &self.feature_names {
            match get(name) {
                Some(v) if v.is_finite() => values.push(v),
                _ => missing.push(name.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(ProjectError::MissingFeatures(missing));
        }
        Ok(self.project_values(&values))
    }

    pub fn project(&self, fv: &FeatureVector) -> Result<[f64; 2], ProjectError> {
        self.project_with(|name| fv.get(name))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("projection model serializes")
    }

    pub fn from_json(text: &str) -> Result<ProjectionModel, ModelError> {
        let model: ProjectionModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(std::fs::write(path, self.to_json() + "\n")?)
    }

    pub fn load(path: &Path) -> Result<ProjectionModel, ModelError> {
        ProjectionModel::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One projected table: coordinates for every complete row, and per-row
/// missing-feature reports for the rest.
#[derive(Debug, Clone)]
pub struct BatchProjection {
    pub instances: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub excluded: Vec<(String, Vec<String>)>,
}

/// Project every table row that carries all model features; incomplete rows
/// land in the exclusion report instead of being dropped silently.
pub fn project_batch(model: &ProjectionModel, table: &MetadataTable) -> BatchProjection {
    let col_of: Vec<Option<usize>> = model
        .feature_names
        .iter()
        .map(|name| table.feature_names.iter().position(|n| n == name))
        .collect();
    let rows: Vec<Result<[f64; 2], Vec<String>>> = (0..table.n_instances())
        .into_par_iter()
        .map(|i| {
            model
                .project_with(|name| {
                    let j = model.feature_names.iter().position(|n| n == name)?;
                    col_of[j].and_then(|c| table.features[i][c])
                })
                .map_err(|ProjectError::MissingFeatures(names)| names)
        })
        .collect();
    let mut out = BatchProjection {
        instances: Vec::new(),
        coords: Vec::new(),
        excluded: Vec::new(),
    };
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok(z) => {
                out.instances.push(table.instances[i].clone());
                out.coords.push(z);
            }
            Err(missing) => out.excluded.push((table.instances[i].clone(), missing)),
        }
    }
    out
}

/// The reference projection shipped with the crate: 23 structural and
/// probing features with fixed coefficients, identity transform (inputs
/// must already be normalized to the space the coefficients were fitted in).
pub fn builtin_model() -> ProjectionModel {
    const COEFFS: [(&str, f64, f64); 23] = [
        ("NN3_sd", -0.93, -0.34),
        ("ND8_var", -0.29, 0.73),
        ("P5_mean", -0.67, 0.62),
        ("NN3_skew", -1.23, 0.89),
        ("P6_sd", -1.07, 0.19),
        ("P4_mean", -0.91, 0.80),
        ("P11_skew", -0.45, 0.35),
        ("ND2", -0.58, 0.50),
        ("NN2_max", -0.43, 0.96),
        ("NN2_skew", -0.52, 1.12),
        ("VRP4", -0.65, 0.48),
        ("P10_mean", -0.48, 0.86),
        ("MST3_median", -0.57, 0.86),
        ("ND5_mean", 0.82, 0.61),
        ("P7_var", 0.42, 1.12),
        ("P2_mean", 0.52, 0.85),
        ("P1_mean", -0.48, 0.32),
        ("P3_mean", 0.56, 0.73),
        ("G2", 0.61, 0.93),
        ("P6_skew", 0.11, 0.74),
        ("P9_mean", 0.51, 0.66),
        ("P5_skew", -0.19, 0.36),
        ("MST2_mean", -0.42, 1.63),
    ];
    ProjectionModel {
        feature_names: COEFFS.iter().map(|&(n, _, _)| n.to_string()).collect(),
        matrix: vec![
            COEFFS.iter().map(|&(_, a, _)| a).collect(),
            COEFFS.iter().map(|&(_, _, b)| b).collect(),
        ],
        transform: ModelTransform::Identity,
    }
}

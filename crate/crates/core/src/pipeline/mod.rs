//! The instance-space pipeline. Three stages run in a fixed order:
//! preparation (clamping/transform/labeling), feature selection
//! (correlation filter, clustering, combination search), and projection
//! fitting. The exported model composes every per-column normalization the
//! stages applied, so raw feature values of unseen instances land in the
//! same plane as the fitted ones.

pub mod forest;
pub mod kmeans;
pub mod pca;
pub mod pilot;
pub mod prelim;
pub mod sifted;

use indexmap::IndexMap;
use thiserror::Error;

use crate::metadata::MetadataTable;
use crate::projection::{ModelTransform, ProjectionModel};

use pilot::{pilot as fit_projection, PilotConfig, PilotError, PilotResult};
use prelim::{prelim, PrelimConfig, PrelimResult};
use sifted::{sifted, SiftedConfig, SiftedError, SiftedResult};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub epsilon: f64,
    pub k: usize,
    pub ntry: usize,
    pub seed: u64,
    pub phi_max: bool,
    pub phi_bnd: bool,
    pub phi_nrm: bool,
    pub phi_num: bool,
    pub transform: bool,
    pub budget: usize,
    pub corr_threshold: f64,
    /// Correlation-filter performance values: transformed (stage order) or
    /// raw. Switchable because either reading is defensible.
    pub sifted_on_transformed: bool,
    pub ksweep_max: usize,
}

impl PipelineConfig {
    pub fn new(epsilon: f64, k: usize, ntry: usize, seed: u64) -> PipelineConfig {
        PipelineConfig {
            epsilon,
            k,
            ntry,
            seed,
            phi_max: false,
            phi_bnd: false,
            phi_nrm: false,
            phi_num: false,
            transform: false,
            budget: 10_000,
            corr_threshold: 0.5,
            sifted_on_transformed: true,
            ksweep_max: 30,
        }
    }

    /// Parse a flat `key = value` file; `#` starts a comment. `epsilon`,
    /// `k`, `ntry` and `seed` are required, everything else has defaults.
    pub fn parse(text: &str) -> Result<PipelineConfig, ConfigError> {
        let mut pairs: IndexMap<String, (String, usize)> = IndexMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Malformed { line });
            };
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Malformed { line });
            }
            if pairs.insert(key.clone(), (value, line)).is_some() {
                return Err(ConfigError::Duplicate { key, line });
            }
        }

        fn parsed<T: std::str::FromStr>(
            entry: Option<(String, usize)>,
            key: &'static str,
        ) -> Result<Option<T>, ConfigError> {
            match entry {
                None => Ok(None),
                Some((value, line)) => value.parse().map(Some).map_err(|_| ConfigError::BadValue {
                    key,
                    line,
                    value,
                }),
            }
        }
        fn required<T>(value: Option<T>, key: &'static str) -> Result<T, ConfigError> {
            value.ok_or(ConfigError::Missing(key))
        }

        let cfg = PipelineConfig {
            epsilon: required(parsed(pairs.shift_remove("epsilon"), "epsilon")?, "epsilon")?,
            k: required(parsed(pairs.shift_remove("k"), "k")?, "k")?,
            ntry: required(parsed(pairs.shift_remove("ntry"), "ntry")?, "ntry")?,
            seed: required(parsed(pairs.shift_remove("seed"), "seed")?, "seed")?,
            phi_max: parsed(pairs.shift_remove("phi_max"), "phi_max")?.unwrap_or(false),
            phi_bnd: parsed(pairs.shift_remove("phi_bnd"), "phi_bnd")?.unwrap_or(false),
            phi_nrm: parsed(pairs.shift_remove("phi_nrm"), "phi_nrm")?.unwrap_or(false),
            phi_num: parsed(pairs.shift_remove("phi_num"), "phi_num")?.unwrap_or(false),
            transform: parsed(pairs.shift_remove("transform"), "transform")?.unwrap_or(false),
            budget: parsed(pairs.shift_remove("budget"), "budget")?.unwrap_or(10_000),
            corr_threshold: parsed(pairs.shift_remove("corr_threshold"), "corr_threshold")?
                .unwrap_or(0.5),
            sifted_on_transformed: parsed(
                pairs.shift_remove("sifted_on_transformed"),
                "sifted_on_transformed",
            )?
            .unwrap_or(true),
            ksweep_max: parsed(pairs.shift_remove("ksweep_max"), "ksweep_max")?.unwrap_or(30),
        };
        if cfg.budget == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if let Some((key, (_, line))) = pairs.shift_remove_index(0) {
            return Err(ConfigError::Unknown { key, line });
        }
        Ok(cfg)
    }

    /// One-line `key=value` rendering of every setting, for logs.
    pub fn summary(&self) -> String {
        format!(
            "epsilon={} k={} ntry={} seed={} phi_max={} phi_bnd={} phi_nrm={} phi_num={} \
             transform={} budget={} corr_threshold={} sifted_on_transformed={} ksweep_max={}",
            self.epsilon,
            self.k,
            self.ntry,
            self.seed,
            self.phi_max,
            self.phi_bnd,
            self.phi_nrm,
            self.phi_num,
            self.transform,
            self.budget,
            self.corr_threshold,
            self.sifted_on_transformed,
            self.ksweep_max
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line} is not `key = value`")]
    Malformed { line: usize },
    #[error("config key `{key}` on line {line} repeats an earlier setting")]
    Duplicate { key: String, line: usize },
    #[error("missing required config key `{0}`")]
    Missing(&'static str),
    #[error("config key `{key}` on line {line} has unusable value `{value}`")]
    BadValue {
        key: &'static str,
        line: usize,
        value: String,
    },
    #[error("unknown config key `{key}` on line {line}")]
    Unknown { key: String, line: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(
        "{kept} complete instances for k = {k}; projection fitting needs more instances than selected features"
    )]
    TooFewRows { kept: usize, k: usize },
    #[error(transparent)]
    Sifted(#[from] SiftedError),
    #[error(transparent)]
    Pilot(#[from] PilotError),
}

pub struct PipelineOutput {
    pub prelim: PrelimResult,
    pub sifted: SiftedResult,
    pub pilot: PilotResult,
    /// Selected feature names in model column order.
    pub selected: Vec<String>,
    /// Maps raw feature values of the selected features to (Z1, Z2).
    pub model: ProjectionModel,
}

/// Column z-score with sample sd. Constant columns are only centered.
/// Returns the transformed rows plus per-column (mean, sd).
fn zscore_columns(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<(f64, f64)>) {
    let n = rows.len();
    let m = if n > 0 { rows[0].len() } else { 0 };
    let mut stats = Vec::with_capacity(m);
    for j in 0..m {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = if n < 2 {
            0.0
        } else {
            rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        };
        let sd = var.sqrt();
        stats.push((mean, if sd > 0.0 { sd } else { 1.0 }));
    }
    let out = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&stats)
                .map(|(&x, &(mean, sd))| (x - mean) / sd)
                .collect()
        })
        .collect();
    (out, stats)
}

pub fn run_pipeline(
    table: &MetadataTable,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    eprintln!("pipeline config: {}", cfg.summary());

    let pre = prelim(
        table,
        &PrelimConfig {
            epsilon: cfg.epsilon,
            phi_max: cfg.phi_max,
            phi_bnd: cfg.phi_bnd,
            phi_nrm: cfg.phi_nrm,
            transform: cfg.transform,
        },
    );
    let kept = pre.table.instances.len();
    if kept <= cfg.k {
        return Err(PipelineError::TooFewRows { kept, k: cfg.k });
    }

    let unwrap_rows = |rows: &[Vec<Option<f64>>]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().map(|c| c.expect("prepared table is complete")).collect())
            .collect()
    };
    let features = unwrap_rows(&pre.table.features);
    let performance = unwrap_rows(&pre.table.performance);
    let y_corr = if cfg.sifted_on_transformed {
        performance.clone()
    } else {
        pre.raw_performance.clone()
    };

    let sift = sifted(
        &features,
        &pre.table.feature_names,
        &y_corr,
        &pre.labels,
        &SiftedConfig {
            k: cfg.k,
            corr_threshold: cfg.corr_threshold,
            budget: cfg.budget,
            ksweep_max: cfg.ksweep_max,
            forest: Default::default(),
        },
        cfg.seed,
    )?;

    let chosen_rows: Vec<Vec<f64>> = features
        .iter()
        .map(|r| sift.chosen.iter().map(|&j| r[j]).collect())
        .collect();
    let (fbar, fstats) = zscore_columns(&chosen_rows);
    let (ybar, _) = zscore_columns(&performance);
    let fit = fit_projection(
        &fbar,
        &ybar,
        &PilotConfig {
            ntry: cfg.ntry,
            phi_num: cfg.phi_num,
        },
        cfg.seed,
    )?;

    let selected: Vec<String> = sift
        .chosen
        .iter()
        .map(|&j| pre.table.feature_names[j].clone())
        .collect();
    let transforms = sift
        .chosen
        .iter()
        .zip(&fstats)
        .map(|(&j, &(mean, sd))| pre.transforms[j].then_zscore(mean, sd))
        .collect();
    let model = ProjectionModel {
        feature_names: selected.clone(),
        matrix: fit.a.clone(),
        transform: ModelTransform::PerFeature(transforms),
    };

    Ok(PipelineOutput {
        prelim: pre,
        sifted: sift,
        pilot: fit,
        selected,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn full_config_parses() {
        let text = "\
# run settings
epsilon = 0.15   # threshold
k = 23
ntry = 30
seed = 42
phi_bnd = true
transform = true
budget = 500
corr_threshold = 0.4
sifted_on_transformed = false
ksweep_max = 10
";
        let cfg = PipelineConfig::parse(text).unwrap();
        let mut expected = PipelineConfig::new(0.15, 23, 30, 42);
        expected.phi_bnd = true;
        expected.transform = true;
        expected.budget = 500;
        expected.corr_threshold = 0.4;
        expected.sifted_on_transformed = false;
        expected.ksweep_max = 10;
        assert_eq!(cfg, expected);
    }

    #[test]
    fn omitted_keys_take_defaults() {
        let cfg = PipelineConfig::parse("epsilon=0.2\nk=3\nntry=5\nseed=1\n").unwrap();
        assert_eq!(cfg, PipelineConfig::new(0.2, 3, 5, 1));
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = PipelineConfig::parse("epsilon=0.2\nk=3\nseed=1\n").unwrap_err();
        assert_eq!(err, ConfigError::Missing("ntry"));
        assert!(err.to_string().contains("ntry"));
    }

    #[test]
    fn bad_lines_are_rejected_with_positions() {
        assert_eq!(
            PipelineConfig::parse("epsilon=0.2\nwhat is this\n").unwrap_err(),
            ConfigError::Malformed { line: 2 }
        );
        assert_eq!(
            PipelineConfig::parse("epsilon=0.2\nepsilon=0.3\n").unwrap_err(),
            ConfigError::Duplicate { key: "epsilon".into(), line: 2 }
        );
        assert_eq!(
            PipelineConfig::parse("epsilon=0.2\nk=maybe\nntry=5\nseed=1\n").unwrap_err(),
            ConfigError::BadValue { key: "k", line: 2, value: "maybe".into() }
        );
        assert_eq!(
            PipelineConfig::parse("epsilon=0.2\nk=3\nntry=5\nseed=1\nepsilonn=0.2\n").unwrap_err(),
            ConfigError::Unknown { key: "epsilonn".into(), line: 5 }
        );
        assert_eq!(
            PipelineConfig::parse("epsilon=0.2\nk=3\nntry=5\nseed=1\nbudget=0\n").unwrap_err(),
            ConfigError::ZeroBudget
        );
    }

    #[test]
    fn summary_echoes_reference_parameters_verbatim() {
        let cfg = PipelineConfig::parse("epsilon = 0.15\nk = 23\nntry = 30\nseed = 0\n").unwrap();
        let s = cfg.summary();
        for token in ["epsilon=0.15", "k=23", "ntry=30", "seed=0"] {
            assert!(s.contains(token), "summary `{s}` lacks `{token}`");
        }
    }

    /// n instances, 10 features, `algos` performance columns. Performance
    /// follows features 2 and 7 closely, everything else is noise.
    fn synthetic_table(n: usize, algos: usize) -> MetadataTable {
        let mut rng = crate::streams::stream(21, crate::streams::TAG_SYNTHETIC, 40);
        let d = 10;
        let mut features = Vec::new();
        let mut performance = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
            // The combined column comes first so a single-algorithm table
            // still correlates with both planted features.
            let mut perf = vec![
                0.5 * (row[2] + row[7]) + rng.gen_range(-0.05..0.05),
                row[2] + rng.gen_range(-0.05..0.05),
                row[7] + rng.gen_range(-0.05..0.05),
            ];
            perf.truncate(algos);
            features.push(row.into_iter().map(Some).collect());
            performance.push(perf.into_iter().map(Some).collect());
        }
        MetadataTable {
            instances: (0..n).map(|i| format!("syn{i:03}")).collect(),
            sources: vec!["syn".into(); n],
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            algorithm_names: (0..algos).map(|j| format!("alg{j}")).collect(),
            features,
            performance,
        }
    }

    fn assert_model_reproduces_coordinates(table: &MetadataTable, out: &PipelineOutput) {
        let col_of = |name: &str| {
            table
                .feature_names
                .iter()
                .position(|n| n == name)
                .expect("selected feature exists in the input table")
        };
        for (i, inst) in out.prelim.table.instances.iter().enumerate() {
            let row = table.instances.iter().position(|n| n == inst).unwrap();
            let z = out
                .model
                .project_with(|name| table.features[row][col_of(name)])
                .unwrap();
            for axis in 0..2 {
                assert!(
                    (z[axis] - out.pilot.z[i][axis]).abs() < 1e-9,
                    "instance {inst} axis {axis}: model {} vs fit {}",
                    z[axis],
                    out.pilot.z[i][axis]
                );
            }
        }
    }

    #[test]
    fn end_to_end_smoke_is_deterministic_and_reexportable() {
        let table = synthetic_table(50, 3);
        let cfg = PipelineConfig::new(0.0, 2, 5, 11);
        let out = run_pipeline(&table, &cfg).unwrap();
        assert_eq!(out.pilot.z.len(), 50);
        let mut picked = out.selected.clone();
        picked.sort();
        assert_eq!(picked, vec!["f2", "f7"], "planted features should be selected");
        assert!(out.sifted.best_oob < 0.3, "OOB {}", out.sifted.best_oob);
        assert!(!out.sifted.kmetrics.is_empty() || out.sifted.surviving.len() == 2);
        assert_model_reproduces_coordinates(&table, &out);

        let again = run_pipeline(&table, &cfg).unwrap();
        assert_eq!(out.pilot.z, again.pilot.z, "same seed, same coordinates");
        assert_eq!(out.selected, again.selected);

        // Fitted models survive JSON re-export even though their feature
        // names are table columns, not catalog entries.
        let reloaded = crate::projection::ProjectionModel::from_json(&out.model.to_json()).unwrap();
        assert_eq!(reloaded, out.model);
    }

    #[test]
    fn transform_path_model_still_reproduces_coordinates() {
        let table = synthetic_table(50, 3);
        let mut cfg = PipelineConfig::new(0.0, 2, 5, 13);
        cfg.transform = true;
        let out = run_pipeline(&table, &cfg).unwrap();
        match &out.model.transform {
            ModelTransform::PerFeature(ts) => {
                assert!(ts.iter().all(|t| t.lambda.is_some()), "power step recorded")
            }
            ModelTransform::Identity => panic!("pipeline models carry explicit transforms"),
        }
        assert_model_reproduces_coordinates(&table, &out);
    }

    #[test]
    fn single_algorithm_table_runs() {
        let table = synthetic_table(40, 1);
        // Performance tracks f2 only; keep both planted clusters by letting
        // k follow the survivors.
        let cfg = PipelineConfig::new(0.0, 2, 4, 17);
        match run_pipeline(&table, &cfg) {
            Ok(out) => assert_eq!(out.pilot.z.len(), 40),
            Err(PipelineError::Sifted(SiftedError::TooFewSurvivors(s))) => {
                panic!("one algorithm still yields survivors, got {s}")
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn more_features_than_instances_is_rejected() {
        // 3 rows, every feature a copy of performance.
        let features: Vec<Vec<Option<f64>>> = (0..3)
            .map(|i| vec![Some(i as f64); 3])
            .collect();
        let performance: Vec<Vec<Option<f64>>> = (0..3).map(|i| vec![Some(i as f64)]).collect();
        let table = MetadataTable {
            instances: (0..3).map(|i| format!("i{i}")).collect(),
            sources: vec!["s".into(); 3],
            feature_names: (0..3).map(|j| format!("f{j}")).collect(),
            algorithm_names: vec!["a".into()],
            features,
            performance,
        };
        let cfg = PipelineConfig::new(0.5, 3, 2, 1);
        assert!(matches!(
            run_pipeline(&table, &cfg),
            Err(PipelineError::TooFewRows { kept: 3, k: 3 })
        ));
    }
}

//! Metadata table: one row per instance, feature columns and per-algorithm
//! performance columns, round-tripped through the `Instances,Source,
//! feature_<name>...,algo_<name>...` CSV convention.

use std::path::Path;

use thiserror::Error;

use crate::features::Extraction;

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: header must start with `Instances,Source`, found `{found}`")]
    BadHeader { path: String, found: String },
    #[error("{path}: column `{name}` is neither feature_<name> nor algo_<name>")]
    UnknownColumn { path: String, name: String },
    #[error("{path} row {row}, column `{column}`: malformed number `{token}`")]
    MalformedNumber {
        path: String,
        row: usize,
        column: String,
        token: String,
    },
    #[error("{path} row {row}: expected {expected} fields, found {found}")]
    RowWidth {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// Instances × (features, algorithms) data. Cells are `None` where a value
/// could not be computed; the pipeline excludes such rows and reports them.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataTable {
    pub instances: Vec<String>,
    pub sources: Vec<String>,
    /// Bare feature names, without the `feature_` column prefix.
    pub feature_names: Vec<String>,
    /// Bare algorithm names, without the `algo_` column prefix.
    pub algorithm_names: Vec<String>,
    /// `features[i][j]`: feature `j` of instance `i`.
    pub features: Vec<Vec<Option<f64>>>,
    /// `performance[i][a]`: algorithm `a` on instance `i`.
    pub performance: Vec<Vec<Option<f64>>>,
}

impl MetadataTable {
    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    /// Indices of rows with every feature and performance cell present.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.instances.len())
            .filter(|&i| {
                self.features[i].iter().all(Option::is_some)
                    && self.performance[i].iter().all(Option::is_some)
            })
            .collect()
    }

    /// Assemble a table from feature extractions, without performance
    /// columns. Column order follows the first extraction; instances missing
    /// a feature get an empty cell.
    pub fn from_extractions(extractions: &[Extraction]) -> MetadataTable {
        let mut feature_names: Vec<String> = Vec::new();
        for ex in extractions {
            for name in ex.features.names() {
                if !feature_names.iter().any(|n| n == name) {
                    feature_names.push(name.to_string());
                }
            }
        }
        let mut instances = Vec::new();
        let mut sources = Vec::new();
        let mut features = Vec::new();
        for ex in extractions {
            instances.push(ex.features.instance_name.clone());
            sources.push(source_from_name(&ex.features.instance_name));
            features.push(feature_names.iter().map(|n| ex.features.get(n)).collect());
        }
        MetadataTable {
            instances,
            sources,
            feature_names,
            algorithm_names: Vec::new(),
            features,
            performance: vec![Vec::new(); extractions.len()],
        }
    }
}

/// Source-set tag derived from an instance name: its leading alphabetic
/// run (`X-n101-k25` → `X`, `Golden_1` → `Golden`), or `unknown`.
pub fn source_from_name(name: &str) -> String {
    let run: String = name.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    if run.is_empty() {
        "unknown".to_string()
    } else {
        run
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn read_metadata_csv(path: &Path) -> Result<MetadataTable, MetadataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| wrap_csv(path, e))?;
    let headers = rdr.headers().map_err(|e| wrap_csv(path, e))?.clone();
    let cols: Vec<String> = headers.iter().map(str::to_string).collect();
    if cols.len() < 2 || cols[0] != "Instances" || cols[1] != "Source" {
        return Err(MetadataError::BadHeader {
            path: path_str(path),
            found: cols.iter().take(2).cloned().collect::<Vec<_>>().join(","),
        });
    }
    // Classify the data columns; order within each group is preserved.
    let mut feature_cols = Vec::new(); // (column index, bare name)
    let mut algo_cols = Vec::new();
    for (ci, col) in cols.iter().enumerate().skip(2) {
        if let Some(bare) = col.strip_prefix("feature_") {
            feature_cols.push((ci, bare.to_string()));
        } else if let Some(bare) = col.strip_prefix("algo_") {
            algo_cols.push((ci, bare.to_string()));
        } else {
            return Err(MetadataError::UnknownColumn {
                path: path_str(path),
                name: col.clone(),
            });
        }
    }

    let mut table = MetadataTable {
        instances: Vec::new(),
        sources: Vec::new(),
        feature_names: feature_cols.iter().map(|(_, n)| n.clone()).collect(),
        algorithm_names: algo_cols.iter().map(|(_, n)| n.clone()).collect(),
        features: Vec::new(),
        performance: Vec::new(),
    };

    for (ri, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| wrap_csv(path, e))?;
        let row = ri + 2;
        if record.len() != cols.len() {
            return Err(MetadataError::RowWidth {
                path: path_str(path),
                row,
                expected: cols.len(),
                found: record.len(),
            });
        }
        let cell = |(ci, name): &(usize, String)| -> Result<Option<f64>, MetadataError> {
            parse_cell(path, row, name, record.get(*ci).unwrap_or(""))
        };
        table.instances.push(record.get(0).unwrap_or("").to_string());
        table.sources.push(record.get(1).unwrap_or("").to_string());
        table.features.push(feature_cols.iter().map(cell).collect::<Result<_, _>>()?);
        table.performance.push(algo_cols.iter().map(cell).collect::<Result<_, _>>()?);
    }
    Ok(table)
}

fn parse_cell(path: &Path, row: usize, column: &str, token: &str) -> Result<Option<f64>, MetadataError> {
    if token.is_empty() || token.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    token
        .parse::<f64>()
        .map(Some)
        .map_err(|_| MetadataError::MalformedNumber {
            path: path_str(path),
            row,
            column: column.to_string(),
            token: token.to_string(),
        })
}

pub fn write_metadata_csv(table: &MetadataTable, path: &Path) -> Result<(), MetadataError> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| wrap_csv(path, e))?;
    let mut header = vec!["Instances".to_string(), "Source".to_string()];
    header.extend(table.feature_names.iter().map(|n| format!("feature_{n}")));
    header.extend(table.algorithm_names.iter().map(|n| format!("algo_{n}")));
    wtr.write_record(&header).map_err(|e| wrap_csv(path, e))?;
    for i in 0..table.instances.len() {
        let mut rec = vec![table.instances[i].clone(), table.sources[i].clone()];
        rec.extend(table.features[i].iter().map(fmt_cell));
        rec.extend(table.performance[i].iter().map(fmt_cell));
        wtr.write_record(&rec).map_err(|e| wrap_csv(path, e))?;
    }
    wtr.flush().map_err(|e| MetadataError::Io {
        path: path_str(path),
        source: e,
    })?;
    Ok(())
}

fn fmt_cell(v: &Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) => x.to_string(),
    }
}

fn wrap_csv(path: &Path, e: csv::Error) -> MetadataError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return MetadataError::Io {
                path: path_str(path),
                source: io,
            };
        }
        unreachable!()
    }
    MetadataError::Csv {
        path: path_str(path),
        source: e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> MetadataTable {
        MetadataTable {
            instances: vec!["X-n101-k25".into(), "A-n32-k5".into()],
            sources: vec!["X".into(), "A".into()],
            feature_names: vec!["customers".into(), "ND2".into()],
            algorithm_names: vec!["hgs".into(), "lkh".into()],
            features: vec![vec![Some(100.0), Some(3.5)], vec![Some(31.0), None]],
            performance: vec![vec![Some(0.01), Some(0.2)], vec![Some(0.05), Some(0.15)]],
        }
    }

    #[test]
    fn csv_round_trip_preserves_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        let table = sample_table();
        write_metadata_csv(&table, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("Instances,Source,feature_customers,feature_ND2,algo_hgs,algo_lkh\n"));
        let back = read_metadata_csv(&path).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn missing_cells_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        write_metadata_csv(&sample_table(), &path).unwrap();
        let back = read_metadata_csv(&path).unwrap();
        assert_eq!(back.features[1][1], None);
        assert_eq!(back.complete_rows(), vec![0]);
    }

    #[test]
    fn header_and_columns_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        std::fs::write(&path, "Name,Source,feature_a\nx,S,1\n").unwrap();
        assert!(matches!(
            read_metadata_csv(&path),
            Err(MetadataError::BadHeader { .. })
        ));
        std::fs::write(&path, "Instances,Source,weird_a\nx,S,1\n").unwrap();
        assert!(matches!(
            read_metadata_csv(&path),
            Err(MetadataError::UnknownColumn { .. })
        ));
        std::fs::write(&path, "Instances,Source,feature_a\nx,S,oops\n").unwrap();
        assert!(matches!(
            read_metadata_csv(&path),
            Err(MetadataError::MalformedNumber { row: 2, .. })
        ));
    }

    #[test]
    fn source_tags_follow_leading_letters() {
        assert_eq!(source_from_name("X-n101-k25"), "X");
        assert_eq!(source_from_name("Golden_12"), "Golden");
        assert_eq!(source_from_name("123abc"), "unknown");
        assert_eq!(source_from_name(""), "unknown");
    }

    #[test]
    fn extraction_assembly_uses_feature_order() {
        let inst = crate::instance::Instance {
            name: "B-n5-k2".into(),
            comment: None,
            dimension: 5,
            capacity: 10,
            depot_index: 0,
            coords: Some(vec![(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 5.0)]),
            demands: vec![0, 2, 3, 4, 5],
            edge_weight_type: crate::instance::EdgeWeightType::Euc2d,
            explicit_matrix: None,
        };
        let ex = crate::features::extract_all(&inst, &Default::default(), 1);
        let table = MetadataTable::from_extractions(std::slice::from_ref(&ex));
        assert_eq!(table.instances, vec!["B-n5-k2"]);
        assert_eq!(table.sources, vec!["B"]);
        assert_eq!(table.feature_names[0], "customers");
        assert_eq!(table.features[0][0], Some(4.0));
        assert!(table.algorithm_names.is_empty());
    }
}

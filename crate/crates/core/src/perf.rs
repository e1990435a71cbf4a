//! Performance scoring: the primal gap of an incumbent against the
//! best-known solution, and the time-normalized primal integral (PI) of an
//! incumbent trajectory. Lower PI is better; the pipeline labels an
//! (instance, algorithm) pair "good" when its PI clears a threshold.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("time limit must be positive, got {0}")]
    BadTimeLimit(f64),
    #[error("best-known value must be finite, got {0}")]
    BadBks(f64),
    #[error("incumbent times must be strictly increasing within [0, T]; offending t = {0}")]
    BadTime(f64),
    #[error("incumbent values must be non-increasing; {later} follows {earlier}")]
    ValueIncreased { earlier: f64, later: f64 },
    #[error("incumbent value must be finite, got {0}")]
    BadValue(f64),
}

/// Time-stamped incumbent values of one solver run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, value)` pairs, strictly increasing in `t`, non-increasing in
    /// value, all within `[0, time_limit]`.
    pub points: Vec<(f64, f64)>,
    pub time_limit: f64,
    pub bks: f64,
}

impl Trajectory {
    pub fn new(points: Vec<(f64, f64)>, time_limit: f64, bks: f64) -> Result<Trajectory, TrajectoryError> {
        if !(time_limit > 0.0 && time_limit.is_finite()) {
            return Err(TrajectoryError::BadTimeLimit(time_limit));
        }
        if !bks.is_finite() {
            return Err(TrajectoryError::BadBks(bks));
        }
        let mut prev_t = -1.0f64;
        let mut prev_v = f64::INFINITY;
        for &(t, v) in &points {
            if !t.is_finite() || t < 0.0 || t > time_limit || t <= prev_t {
                return Err(TrajectoryError::BadTime(t));
            }
            if !v.is_finite() {
                return Err(TrajectoryError::BadValue(v));
            }
            if v > prev_v {
                return Err(TrajectoryError::ValueIncreased { earlier: prev_v, later: v });
            }
            prev_t = t;
            prev_v = v;
        }
        Ok(Trajectory { points, time_limit, bks })
    }
}

/// Scale-free distance between an incumbent and the best-known value.
/// `None` (no incumbent) and sign disagreement both count as the worst
/// gap of 1.
pub fn primal_gap(value: Option<f64>, bks: f64) -> f64 {
    match value {
        None => 1.0,
        Some(v) => {
            if v == 0.0 && bks == 0.0 {
                0.0
            } else if v * bks < 0.0 {
                1.0
            } else {
                (v - bks).abs() / v.abs().max(bks.abs())
            }
        }
    }
}

/// Integral of the primal gap over `[0, T]`, divided by `T`. The gap is 1
/// before the first incumbent; the last incumbent is held until `T`. An
/// empty trajectory scores 1.
pub fn primal_integral(traj: &Trajectory) -> f64 {
    if traj.points.is_empty() {
        return 1.0;
    }
    let mut acc = traj.points[0].0; // gap 1 from t = 0 to the first incumbent
    for (i, &(t, v)) in traj.points.iter().enumerate() {
        let t_next = traj.points.get(i + 1).map_or(traj.time_limit, |p| p.0);
        acc += primal_gap(Some(v), traj.bks) * (t_next - t);
    }
    acc / traj.time_limit
}

/// Threshold labeling of a performance value: minimization treats `y` as a
/// cost (good when `y ≤ epsilon`), maximization as a reward (good when
/// `y ≥ epsilon`).
pub fn label_good(y: f64, epsilon: f64, maximize: bool) -> bool {
    if maximize {
        y >= epsilon
    } else {
        y <= epsilon
    }
}

/// Instances × algorithms PI matrix; `None` marks pairs whose trajectory
/// could not be scored.
#[derive(Debug, Clone)]
pub struct PerformanceTable {
    pub instances: Vec<String>,
    pub algorithms: Vec<String>,
    /// `pi[i][a]` for instance `i`, algorithm `a`.
    pub pi: Vec<Vec<Option<f64>>>,
}

impl PerformanceTable {
    /// Good-label matrix; unscored pairs are never good.
    pub fn good_labels(&self, epsilon: f64, maximize: bool) -> Vec<Vec<bool>> {
        self.pi
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v.map_or(false, |y| label_good(y, epsilon, maximize)))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum PerfError {
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
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        path: String,
        expected: &'static str,
        found: String,
    },
    #[error("{path} row {row}: malformed number `{token}`")]
    MalformedNumber { path: String, row: usize, token: String },
    #[error("{path}: {source}")]
    InvalidTrajectory {
        path: String,
        #[source]
        source: TrajectoryError,
    },
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn parse_field(path: &Path, row: usize, token: &str) -> Result<f64, PerfError> {
    token.trim().parse().map_err(|_| PerfError::MalformedNumber {
        path: path_str(path),
        row,
        token: token.to_string(),
    })
}

/// Read a `t,value` incumbent CSV. Rows past the time limit are dropped:
/// the integral only runs to `T`, so they cannot contribute.
pub fn read_trajectory_csv(path: &Path, bks: f64, time_limit: f64) -> Result<Trajectory, PerfError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| wrap_csv(path, e))?;
    let headers = rdr.headers().map_err(|e| wrap_csv(path, e))?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != ["t", "value"] {
        return Err(PerfError::BadHeader {
            path: path_str(path),
            expected: "t,value",
            found: found.join(","),
        });
    }
    let mut points = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| wrap_csv(path, e))?;
        let row = i + 2; // 1-based, after the header
        let t = parse_field(path, row, record.get(0).unwrap_or(""))?;
        let v = parse_field(path, row, record.get(1).unwrap_or(""))?;
        if t <= time_limit {
            points.push((t, v));
        }
    }
    Trajectory::new(points, time_limit, bks).map_err(|source| PerfError::InvalidTrajectory {
        path: path_str(path),
        source,
    })
}

fn wrap_csv(path: &Path, e: csv::Error) -> PerfError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return PerfError::Io {
                path: path_str(path),
                source: io,
            };
        }
        unreachable!()
    }
    PerfError::Csv {
        path: path_str(path),
        source: e,
    }
}

/// One row of a scoring manifest: which trajectory file scores which
/// (instance, algorithm) pair, and with what reference values.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub instance: String,
    pub algorithm: String,
    pub bks: f64,
    pub timelimit: f64,
    /// As written in the manifest; resolve relative entries against the
    /// manifest's directory.
    pub path: String,
}

impl ManifestRow {
    pub fn resolve_path(&self, manifest_path: &Path) -> std::path::PathBuf {
        let p = Path::new(&self.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, PerfError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| wrap_csv(path, e))?;
    let headers = rdr.headers().map_err(|e| wrap_csv(path, e))?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != ["instance", "algorithm", "bks", "timelimit", "path"] {
        return Err(PerfError::BadHeader {
            path: path_str(path),
            expected: "instance,algorithm,bks,timelimit,path",
            found: found.join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| wrap_csv(path, e))?;
        let row = i + 2;
        rows.push(ManifestRow {
            instance: record.get(0).unwrap_or("").to_string(),
            algorithm: record.get(1).unwrap_or("").to_string(),
            bks: parse_field(path, row, record.get(2).unwrap_or(""))?,
            timelimit: parse_field(path, row, record.get(3).unwrap_or(""))?,
            path: record.get(4).unwrap_or("").to_string(),
        });
    }
    Ok(rows)
}

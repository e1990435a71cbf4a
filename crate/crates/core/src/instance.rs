//! CVRPLib/TSPLIB instance parsing, validation, and distance computation.
//!
//! Exactly two distance semantics are supported: `EUC_2D` (coordinates,
//! nearest-integer rounding) and `EXPLICIT` (`FULL_MATRIX` or `LOWER_ROW`).
//! Anything else is rejected loudly — a silently wrong distance matrix
//! corrupts every downstream feature.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("missing required header or section: {0}")]
    MissingSection(String),
    #[error("line {line}: malformed number `{token}`")]
    MalformedNumber { line: usize, token: String },
    #[error("{section}: expected {expected} entries, found {got}")]
    DimensionMismatch { section: String, expected: usize, got: usize },
    #[error("unsupported EDGE_WEIGHT_TYPE `{0}` (only EUC_2D and EXPLICIT are accepted)")]
    UnsupportedEdgeWeightType(String),
    #[error("unsupported EDGE_WEIGHT_FORMAT `{0}` (only FULL_MATRIX and LOWER_ROW are accepted)")]
    UnsupportedEdgeWeightFormat(String),
    #[error("unsupported section `{0}`")]
    UnsupportedSection(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeWeightType {
    Euc2d,
    Explicit,
}

/// A validated CVRP instance. Node indices are 0-based internally; the
/// file format's 1-based ids are translated on the way in and out.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub comment: Option<String>,
    pub dimension: usize,
    pub capacity: u64,
    pub depot_index: usize,
    pub coords: Option<Vec<(f64, f64)>>,
    pub demands: Vec<u64>,
    pub edge_weight_type: EdgeWeightType,
    pub explicit_matrix: Option<Vec<Vec<f64>>>,
}

impl Instance {
    pub fn parse(text: &str) -> Result<Instance, ParseError> {
        parse_instance(text)
    }

    /// Number of customers (all nodes except the depot).
    pub fn customer_count(&self) -> usize {
        self.dimension - 1
    }

    /// 0-based indices of all customer nodes.
    pub fn customer_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dimension).filter(move |&i| i != self.depot_index)
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().sum()
    }

    /// Trivial lower bound on the route count: ⌈Σdemand / Q⌉, at least 1.
    pub fn min_vehicles(&self) -> u64 {
        self.total_demand().div_ceil(self.capacity).max(1)
    }

    /// Materialize the full symmetric distance matrix.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.dimension;
        let mut d = vec![0.0; n * n];
        match self.edge_weight_type {
            EdgeWeightType::Euc2d => {
                let coords = self.coords.as_ref().expect("EUC_2D instance without coords");
                for i in 0..n {
                    for j in (i + 1)..n {
                        let dist = euc_2d(coords[i], coords[j]);
                        d[i * n + j] = dist;
                        d[j * n + i] = dist;
                    }
                }
            }
            EdgeWeightType::Explicit => {
                let m = self.explicit_matrix.as_ref().expect("EXPLICIT instance without matrix");
                for i in 0..n {
                    d[i * n..(i + 1) * n].copy_from_slice(&m[i]);
                }
            }
        }
        DistanceMatrix { n, d }
    }

    /// Serialize back to the TSPLIB text form parsed by [`parse_instance`].
    /// `EXPLICIT` matrices are always written as `FULL_MATRIX`.
    pub fn to_tsplib(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME : {}", self.name);
        if let Some(c) = &self.comment {
            let _ = writeln!(s, "COMMENT : {c}");
        }
        let _ = writeln!(s, "TYPE : CVRP");
        let _ = writeln!(s, "DIMENSION : {}", self.dimension);
        match self.edge_weight_type {
            EdgeWeightType::Euc2d => {
                let _ = writeln!(s, "EDGE_WEIGHT_TYPE : EUC_2D");
            }
            EdgeWeightType::Explicit => {
                let _ = writeln!(s, "EDGE_WEIGHT_TYPE : EXPLICIT");
                let _ = writeln!(s, "EDGE_WEIGHT_FORMAT : FULL_MATRIX");
            }
        }
        let _ = writeln!(s, "CAPACITY : {}", self.capacity);
        if self.edge_weight_type == EdgeWeightType::Euc2d {
            let _ = writeln!(s, "NODE_COORD_SECTION");
            for (i, (x, y)) in self.coords.as_ref().unwrap().iter().enumerate() {
                let _ = writeln!(s, "{} {x} {y}", i + 1);
            }
        } else {
            let _ = writeln!(s, "EDGE_WEIGHT_SECTION");
            for row in self.explicit_matrix.as_ref().unwrap() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", cells.join(" "));
            }
            if let Some(coords) = &self.coords {
                let _ = writeln!(s, "DISPLAY_DATA_SECTION");
                for (i, (x, y)) in coords.iter().enumerate() {
                    let _ = writeln!(s, "{} {x} {y}", i + 1);
                }
            }
        }
        let _ = writeln!(s, "DEMAND_SECTION");
        for (i, d) in self.demands.iter().enumerate() {
            let _ = writeln!(s, "{} {d}", i + 1);
        }
        let _ = writeln!(s, "DEPOT_SECTION");
        let _ = writeln!(s, "{}", self.depot_index + 1);
        let _ = writeln!(s, "-1");
        let _ = writeln!(s, "EOF");
        s
    }

    fn validate(&self) -> Result<(), ParseError> {
        if self.dimension < 2 {
            return Err(ParseError::Invalid("DIMENSION must be at least 2 (depot plus one customer)".into()));
        }
        if self.capacity == 0 {
            return Err(ParseError::Invalid("CAPACITY must be positive".into()));
        }
        if self.depot_index >= self.dimension {
            return Err(ParseError::Invalid(format!(
                "depot id {} out of range 1..={}",
                self.depot_index + 1,
                self.dimension
            )));
        }
        if self.demands.len() != self.dimension {
            return Err(ParseError::DimensionMismatch {
                section: "DEMAND_SECTION".into(),
                expected: self.dimension,
                got: self.demands.len(),
            });
        }
        if self.demands[self.depot_index] != 0 {
            return Err(ParseError::Invalid(format!(
                "depot demand must be 0, found {}",
                self.demands[self.depot_index]
            )));
        }
        for (i, &dem) in self.demands.iter().enumerate() {
            if i != self.depot_index && dem > self.capacity {
                return Err(ParseError::Invalid(format!(
                    "demand {dem} of node {} exceeds capacity {}",
                    i + 1,
                    self.capacity
                )));
            }
        }
        if let Some(coords) = &self.coords {
            if coords.len() != self.dimension {
                return Err(ParseError::DimensionMismatch {
                    section: "NODE_COORD_SECTION".into(),
                    expected: self.dimension,
                    got: coords.len(),
                });
            }
            for &(x, y) in coords {
                if !x.is_finite() || !y.is_finite() {
                    return Err(ParseError::Invalid("non-finite coordinate".into()));
                }
            }
        }
        match self.edge_weight_type {
            EdgeWeightType::Euc2d => {
                if self.coords.is_none() {
                    return Err(ParseError::MissingSection("NODE_COORD_SECTION".into()));
                }
            }
            EdgeWeightType::Explicit => {
                let m = self
                    .explicit_matrix
                    .as_ref()
                    .ok_or_else(|| ParseError::MissingSection("EDGE_WEIGHT_SECTION".into()))?;
                if m.len() != self.dimension || m.iter().any(|r| r.len() != self.dimension) {
                    return Err(ParseError::DimensionMismatch {
                        section: "EDGE_WEIGHT_SECTION".into(),
                        expected: self.dimension * self.dimension,
                        got: m.iter().map(Vec::len).sum(),
                    });
                }
                for i in 0..self.dimension {
                    if m[i][i] != 0.0 {
                        return Err(ParseError::Invalid(format!("explicit matrix diagonal nonzero at node {}", i + 1)));
                    }
                    for j in 0..self.dimension {
                        let v = m[i][j];
                        if !v.is_finite() || v < 0.0 {
                            return Err(ParseError::Invalid(format!(
                                "explicit matrix entry ({},{}) is {v}",
                                i + 1,
                                j + 1
                            )));
                        }
                        if m[i][j] != m[j][i] {
                            return Err(ParseError::Invalid(format!(
                                "explicit matrix asymmetric at ({},{})",
                                i + 1,
                                j + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// TSPLIB nearest-integer Euclidean distance.
pub fn euc_2d(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt().round()
}

/// Full symmetric distance matrix with zero diagonal, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> DistanceMatrix {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        let mut d = Vec::with_capacity(n * n);
        for row in &rows {
            d.extend_from_slice(row);
        }
        DistanceMatrix { n, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    /// Strict upper-triangle entries (i < j), row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.at(i, j));
            }
        }
        out
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut name: Option<String> = None;
    let mut comment: Option<String> = None;
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<u64> = None;
    let mut ewt_raw: Option<String> = None;
    let mut ewf_raw: Option<String> = None;
    let mut node_coords: Option<Vec<(usize, f64, f64)>> = None;
    let mut display_coords: Option<Vec<(usize, f64, f64)>> = None;
    let mut demand_rows: Option<Vec<(usize, u64)>> = None;
    let mut depot_ids: Option<Vec<usize>> = None;
    let mut weight_tokens: Option<Vec<f64>> = None;

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if line == "EOF" {
            break;
        }
        if let Some(pos) = line.find(':') {
            let key = line[..pos].trim().to_ascii_uppercase();
            let value = line[pos + 1..].trim().to_string();
            match key.as_str() {
                "NAME" => name = Some(value),
                "COMMENT" => comment = Some(value),
                "DIMENSION" => dimension = Some(parse_num::<usize>(&value, i + 1)?),
                "CAPACITY" => capacity = Some(parse_num::<u64>(&value, i + 1)?),
                "EDGE_WEIGHT_TYPE" => ewt_raw = Some(value),
                "EDGE_WEIGHT_FORMAT" => ewf_raw = Some(value),
                // TYPE, DISPLAY_DATA_TYPE, NODE_COORD_TYPE, etc. carry no
                // information we act on; tolerate them.
                _ => {}
            }
            i += 1;
            continue;
        }
        match line {
            "NODE_COORD_SECTION" => {
                let (rows, next) = read_coord_rows(&lines, i + 1)?;
                node_coords = Some(rows);
                i = next;
            }
            "DISPLAY_DATA_SECTION" => {
                let (rows, next) = read_coord_rows(&lines, i + 1)?;
                display_coords = Some(rows);
                i = next;
            }
            "DEMAND_SECTION" => {
                let (rows, next) = read_demand_rows(&lines, i + 1)?;
                demand_rows = Some(rows);
                i = next;
            }
            "DEPOT_SECTION" => {
                let (ids, next) = read_depot_ids(&lines, i + 1)?;
                depot_ids = Some(ids);
                i = next;
            }
            "EDGE_WEIGHT_SECTION" => {
                let (tokens, next) = read_number_stream(&lines, i + 1)?;
                weight_tokens = Some(tokens);
                i = next;
            }
            other => return Err(ParseError::UnsupportedSection(other.to_string())),
        }
    }

    let name = name.ok_or_else(|| ParseError::MissingSection("NAME".into()))?;
    let dimension = dimension.ok_or_else(|| ParseError::MissingSection("DIMENSION".into()))?;
    let capacity = capacity.ok_or_else(|| ParseError::MissingSection("CAPACITY".into()))?;
    let ewt_raw = ewt_raw.ok_or_else(|| ParseError::MissingSection("EDGE_WEIGHT_TYPE".into()))?;
    let edge_weight_type = match ewt_raw.as_str() {
        "EUC_2D" => EdgeWeightType::Euc2d,
        "EXPLICIT" => EdgeWeightType::Explicit,
        other => return Err(ParseError::UnsupportedEdgeWeightType(other.to_string())),
    };

    let coords = match (&node_coords, &display_coords) {
        (Some(rows), _) => Some(assemble_coords(rows, dimension, "NODE_COORD_SECTION")?),
        (None, Some(rows)) => Some(assemble_coords(rows, dimension, "DISPLAY_DATA_SECTION")?),
        (None, None) => None,
    };

    let demand_rows = demand_rows.ok_or_else(|| ParseError::MissingSection("DEMAND_SECTION".into()))?;
    if demand_rows.len() != dimension {
        return Err(ParseError::DimensionMismatch {
            section: "DEMAND_SECTION".into(),
            expected: dimension,
            got: demand_rows.len(),
        });
    }
    let mut demands = vec![None; dimension];
    for &(id, dem) in &demand_rows {
        let idx = check_id(id, dimension, "DEMAND_SECTION")?;
        if demands[idx].replace(dem).is_some() {
            return Err(ParseError::Invalid(format!("duplicate demand entry for node {id}")));
        }
    }
    let demands: Vec<u64> = demands.into_iter().map(Option::unwrap).collect();

    let depot_index = match depot_ids {
        None => 0,
        Some(ids) => match ids.as_slice() {
            [] => 0,
            [one] => check_id(*one, dimension, "DEPOT_SECTION")?,
            many => {
                return Err(ParseError::Invalid(format!(
                    "expected a single depot, found {}",
                    many.len()
                )))
            }
        },
    };

    let explicit_matrix = if edge_weight_type == EdgeWeightType::Explicit {
        let tokens = weight_tokens.ok_or_else(|| ParseError::MissingSection("EDGE_WEIGHT_SECTION".into()))?;
        let format = ewf_raw.ok_or_else(|| ParseError::MissingSection("EDGE_WEIGHT_FORMAT".into()))?;
        Some(build_explicit_matrix(&format, &tokens, dimension)?)
    } else {
        None
    };

    let inst = Instance {
        name,
        comment,
        dimension,
        capacity,
        depot_index,
        coords,
        demands,
        edge_weight_type,
        explicit_matrix,
    };
    inst.validate()?;
    Ok(inst)
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize) -> Result<T, ParseError> {
    token.parse().map_err(|_| ParseError::MalformedNumber {
        line,
        token: token.to_string(),
    })
}

fn is_data_line(line: &str) -> bool {
    matches!(line.chars().next(), Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
}

fn read_coord_rows(lines: &[&str], mut i: usize) -> Result<(Vec<(usize, f64, f64)>, usize), ParseError> {
    let mut rows = Vec::new();
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if !is_data_line(line) {
            break;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(ParseError::Invalid(format!(
                "line {}: expected `id x y`, found {} fields",
                i + 1,
                toks.len()
            )));
        }
        rows.push((
            parse_num::<usize>(toks[0], i + 1)?,
            parse_num::<f64>(toks[1], i + 1)?,
            parse_num::<f64>(toks[2], i + 1)?,
        ));
        i += 1;
    }
    Ok((rows, i))
}

fn read_demand_rows(lines: &[&str], mut i: usize) -> Result<(Vec<(usize, u64)>, usize), ParseError> {
    let mut rows = Vec::new();
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if !is_data_line(line) {
            break;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(ParseError::Invalid(format!(
                "line {}: expected `id demand`, found {} fields",
                i + 1,
                toks.len()
            )));
        }
        rows.push((parse_num::<usize>(toks[0], i + 1)?, parse_num::<u64>(toks[1], i + 1)?));
        i += 1;
    }
    Ok((rows, i))
}

fn read_depot_ids(lines: &[&str], mut i: usize) -> Result<(Vec<usize>, usize), ParseError> {
    let mut ids = Vec::new();
    'outer: while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if !is_data_line(line) {
            break;
        }
        for tok in line.split_whitespace() {
            if tok == "-1" {
                i += 1;
                break 'outer;
            }
            ids.push(parse_num::<usize>(tok, i + 1)?);
        }
        i += 1;
    }
    Ok((ids, i))
}

fn read_number_stream(lines: &[&str], mut i: usize) -> Result<(Vec<f64>, usize), ParseError> {
    let mut out = Vec::new();
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if !is_data_line(line) {
            break;
        }
        for tok in line.split_whitespace() {
            out.push(parse_num::<f64>(tok, i + 1)?);
        }
        i += 1;
    }
    Ok((out, i))
}

fn check_id(id: usize, dimension: usize, section: &str) -> Result<usize, ParseError> {
    if id == 0 || id > dimension {
        return Err(ParseError::Invalid(format!(
            "{section}: node id {id} out of range 1..={dimension}"
        )));
    }
    Ok(id - 1)
}

fn assemble_coords(rows: &[(usize, f64, f64)], dimension: usize, section: &str) -> Result<Vec<(f64, f64)>, ParseError> {
    if rows.len() != dimension {
        return Err(ParseError::DimensionMismatch {
            section: section.into(),
            expected: dimension,
            got: rows.len(),
        });
    }
    let mut coords = vec![None; dimension];
    for &(id, x, y) in rows {
        let idx = check_id(id, dimension, section)?;
        if coords[idx].replace((x, y)).is_some() {
            return Err(ParseError::Invalid(format!("{section}: duplicate entry for node {id}")));
        }
    }
    Ok(coords.into_iter().map(Option::unwrap).collect())
}

fn build_explicit_matrix(format: &str, tokens: &[f64], n: usize) -> Result<Vec<Vec<f64>>, ParseError> {
    let mut m = vec![vec![0.0; n]; n];
    match format {
        "FULL_MATRIX" => {
            if tokens.len() != n * n {
                return Err(ParseError::DimensionMismatch {
                    section: "EDGE_WEIGHT_SECTION".into(),
                    expected: n * n,
                    got: tokens.len(),
                });
            }
            for i in 0..n {
                m[i].copy_from_slice(&tokens[i * n..(i + 1) * n]);
            }
        }
        "LOWER_ROW" => {
            // One row per node 2..=n; row for node i holds d(i, 1..i-1).
            let expected = n * (n - 1) / 2;
            if tokens.len() != expected {
                return Err(ParseError::DimensionMismatch {
                    section: "EDGE_WEIGHT_SECTION".into(),
                    expected,
                    got: tokens.len(),
                });
            }
            let mut it = tokens.iter();
            for i in 1..n {
                for j in 0..i {
                    let v = *it.next().unwrap();
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
        }
        other => return Err(ParseError::UnsupportedEdgeWeightFormat(other.to_string())),
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TRIANGLE: &str = "\
NAME : tri
TYPE : CVRP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 10
NODE_COORD_SECTION
1 0 0
2 3 4
3 0 5
DEMAND_SECTION
1 0
2 1
3 1
DEPOT_SECTION
1
-1
EOF
";

    #[test]
    fn parses_three_node_triangle() {
        let inst = parse_instance(TRIANGLE).unwrap();
        assert_eq!(inst.dimension, 3);
        assert_eq!(inst.capacity, 10);
        assert_eq!(inst.depot_index, 0);
        assert_eq!(inst.demands, vec![0, 1, 1]);
        let d = inst.distance_matrix();
        assert_eq!(d.at(0, 1), 5.0);
        assert_eq!(d.at(1, 0), 5.0);
        assert_eq!(d.at(0, 2), 5.0);
    }

    #[test]
    fn sqrt_two_rounds_to_one() {
        assert_eq!(euc_2d((0.0, 0.0), (1.0, 1.0)), 1.0);
    }

    #[test]
    fn demand_count_mismatch_detected() {
        let doc = TRIANGLE.replace("1 0\n2 1\n3 1\n", "1 0\n2 1\n");
        match parse_instance(&doc) {
            Err(ParseError::DimensionMismatch { section, expected, got }) => {
                assert_eq!(section, "DEMAND_SECTION");
                assert_eq!(expected, 3);
                assert_eq!(got, 2);
            }
            other => panic!("expected DimensionMismatch, got {other:?}"),
        }
    }

    #[test]
    fn explicit_full_matrix_verbatim() {
        let doc = "\
NAME : exp
DIMENSION : 3
EDGE_WEIGHT_TYPE : EXPLICIT
EDGE_WEIGHT_FORMAT : FULL_MATRIX
CAPACITY : 5
EDGE_WEIGHT_SECTION
0 1.5 2
1.5 0 2.5
2 2.5 0
DEMAND_SECTION
1 0
2 1
3 2
DEPOT_SECTION
1
-1
EOF
";
        let inst = parse_instance(doc).unwrap();
        let d = inst.distance_matrix();
        assert_eq!(d.at(0, 1), 1.5);
        assert_eq!(d.at(1, 2), 2.5);
        assert_eq!(d.at(2, 0), 2.0);
        assert_eq!(d.at(0, 0), 0.0);
    }

    #[test]
    fn explicit_lower_row() {
        let doc = "\
NAME : low
DIMENSION : 3
EDGE_WEIGHT_TYPE : EXPLICIT
EDGE_WEIGHT_FORMAT : LOWER_ROW
CAPACITY : 5
EDGE_WEIGHT_SECTION
1
2 3
DEMAND_SECTION
1 0
2 1
3 2
DEPOT_SECTION
1
-1
EOF
";
        let inst = parse_instance(doc).unwrap();
        let d = inst.distance_matrix();
        assert_eq!(d.at(1, 0), 1.0);
        assert_eq!(d.at(2, 0), 2.0);
        assert_eq!(d.at(2, 1), 3.0);
        assert_eq!(d.at(1, 2), 3.0);
    }

    #[test]
    fn rejects_unknown_edge_weight_type() {
        let doc = TRIANGLE.replace("EUC_2D", "CEIL_2D");
        assert!(matches!(
            parse_instance(&doc),
            Err(ParseError::UnsupportedEdgeWeightType(t)) if t == "CEIL_2D"
        ));
    }

    #[test]
    fn rejects_unknown_edge_weight_format() {
        let doc = "\
NAME : x
DIMENSION : 2
EDGE_WEIGHT_TYPE : EXPLICIT
EDGE_WEIGHT_FORMAT : LOWER_DIAG_ROW
CAPACITY : 5
EDGE_WEIGHT_SECTION
0 1 1 0
DEMAND_SECTION
1 0
2 1
DEPOT_SECTION
1
-1
EOF
";
        assert!(matches!(
            parse_instance(doc),
            Err(ParseError::UnsupportedEdgeWeightFormat(f)) if f == "LOWER_DIAG_ROW"
        ));
    }

    #[test]
    fn rejects_unknown_section() {
        let doc = TRIANGLE.replace("DEPOT_SECTION\n1\n-1\n", "TOUR_SECTION\n1\n-1\n");
        assert!(matches!(parse_instance(&doc), Err(ParseError::UnsupportedSection(_))));
    }

    #[test]
    fn depot_defaults_to_first_node() {
        let doc = TRIANGLE.replace("DEPOT_SECTION\n1\n-1\n", "");
        let inst = parse_instance(&doc).unwrap();
        assert_eq!(inst.depot_index, 0);
    }

    #[test]
    fn rejects_multiple_depots() {
        let doc = TRIANGLE.replace("DEPOT_SECTION\n1\n-1\n", "DEPOT_SECTION\n1\n2\n-1\n");
        assert!(matches!(parse_instance(&doc), Err(ParseError::Invalid(_))));
    }

    #[test]
    fn rejects_nonzero_depot_demand() {
        let doc = TRIANGLE.replace("1 0\n2 1\n", "1 2\n2 1\n");
        assert!(matches!(parse_instance(&doc), Err(ParseError::Invalid(_))));
    }

    #[test]
    fn rejects_demand_above_capacity() {
        let doc = TRIANGLE.replace("2 1\n", "2 11\n");
        assert!(matches!(parse_instance(&doc), Err(ParseError::Invalid(_))));
    }

    #[test]
    fn missing_capacity_reported() {
        let doc = TRIANGLE.replace("CAPACITY : 10\n", "");
        assert!(matches!(
            parse_instance(&doc),
            Err(ParseError::MissingSection(s)) if s == "CAPACITY"
        ));
    }

    #[test]
    fn malformed_number_carries_line() {
        let doc = TRIANGLE.replace("2 3 4", "2 3 x4");
        match parse_instance(&doc) {
            Err(ParseError::MalformedNumber { token, .. }) => assert_eq!(token, "x4"),
            other => panic!("expected MalformedNumber, got {other:?}"),
        }
    }

    #[test]
    fn parsing_is_pure() {
        let a = parse_instance(TRIANGLE).unwrap();
        let b = parse_instance(TRIANGLE).unwrap();
        assert_eq!(a, b);
    }

    fn arb_euc_instance() -> impl Strategy<Value = Instance> {
        (2usize..10, 1u64..500).prop_flat_map(|(n, cap)| {
            (
                "[A-Za-z][A-Za-z0-9-]{0,10}",
                proptest::option::of("[A-Za-z0-9,.-]{1,12}"),
                prop::collection::vec((-1e5f64..1e5, -1e5f64..1e5), n),
                prop::collection::vec(0..=cap, n),
                0..n,
            )
                .prop_map(move |(name, comment, coords, mut demands, depot)| {
                    demands[depot] = 0;
                    Instance {
                        name,
                        comment,
                        dimension: n,
                        capacity: cap,
                        depot_index: depot,
                        coords: Some(coords),
                        demands,
                        edge_weight_type: EdgeWeightType::Euc2d,
                        explicit_matrix: None,
                    }
                })
        })
    }

    fn arb_explicit_instance() -> impl Strategy<Value = Instance> {
        (2usize..8, 1u64..500).prop_flat_map(|(n, cap)| {
            (
                "[A-Za-z][A-Za-z0-9-]{0,10}",
                prop::collection::vec(0.0f64..1e5, n * (n - 1) / 2),
                prop::collection::vec(0..=cap, n),
                proptest::option::of(prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), n)),
            )
                .prop_map(move |(name, tri, mut demands, coords)| {
                    demands[0] = 0;
                    let mut m = vec![vec![0.0; n]; n];
                    let mut it = tri.iter();
                    for i in 1..n {
                        for j in 0..i {
                            let v = *it.next().unwrap();
                            m[i][j] = v;
                            m[j][i] = v;
                        }
                    }
                    Instance {
                        name,
                        comment: None,
                        dimension: n,
                        capacity: cap,
                        depot_index: 0,
                        coords,
                        demands,
                        edge_weight_type: EdgeWeightType::Explicit,
                        explicit_matrix: Some(m),
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn euc_round_trip(inst in arb_euc_instance()) {
            let parsed = parse_instance(&inst.to_tsplib()).unwrap();
            prop_assert_eq!(parsed, inst);
        }

        #[test]
        fn explicit_round_trip(inst in arb_explicit_instance()) {
            let parsed = parse_instance(&inst.to_tsplib()).unwrap();
            prop_assert_eq!(parsed, inst);
        }

        #[test]
        fn distance_matrix_symmetric_zero_diag(inst in arb_euc_instance()) {
            let d = inst.distance_matrix();
            for i in 0..d.n() {
                prop_assert_eq!(d.at(i, i), 0.0);
                for j in 0..d.n() {
                    prop_assert_eq!(d.at(i, j), d.at(j, i));
                    prop_assert!(d.at(i, j) >= 0.0);
                }
            }
        }
    }
}

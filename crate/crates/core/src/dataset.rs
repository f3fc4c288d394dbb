//! Loading and validation of the 64 x 9 human response table.
//!
//! File format: comma-separated, UTF-8, header
//! `code,Aac,Eac,Iac,Oac,Aca,Eca,Ica,Oca,NVC` followed by one row per
//! syllogism with percentages. Optional `p1,p2` columns (e.g. `Aab`, `Ebc`)
//! override the default figure convention for that row.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::syllogism::{
    enumerate_syllogisms, Premise, ResponseType, Syllogism, N_RESPONSES, N_SYLLOGISMS,
};
use crate::Distribution;

/// Accepted range for the raw percentage sum of a row.
pub const ROW_SUM_MIN: f64 = 97.0;
pub const ROW_SUM_MAX: f64 = 103.0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}: column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("{} data problem(s):\n{}", .0.len(), DisplayIssues(.0))]
    Invalid(Vec<DataIssue>),
    #[error("row {0} has no response mass")]
    AllZero(String),
}

/// One content problem found while validating a table. Row numbers are
/// 1-based data rows (the header is row 0).
#[derive(Debug, Clone, PartialEq)]
pub enum DataIssue {
    MissingCode(String),
    DuplicateCode { code: String, row: usize },
    NegativeCell {
        row: usize,
        code: String,
        column: &'static str,
        value: f64,
    },
    RowSum { row: usize, code: String, sum: f64 },
    RowCount(usize),
}

impl fmt::Display for DataIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataIssue::MissingCode(c) => write!(f, "missing syllogism {c}"),
            DataIssue::DuplicateCode { code, row } => {
                write!(f, "row {row}: duplicate syllogism {code}")
            }
            DataIssue::NegativeCell {
                row,
                code,
                column,
                value,
            } => write!(f, "row {row} ({code}), column {column}: negative value {value}"),
            DataIssue::RowSum { row, code, sum } => write!(
                f,
                "row {row} ({code}): percentages sum to {sum}, outside [{ROW_SUM_MIN}, {ROW_SUM_MAX}]"
            ),
            DataIssue::RowCount(n) => write!(f, "expected {N_SYLLOGISMS} rows, found {n}"),
        }
    }
}

struct DisplayIssues<'a>(&'a [DataIssue]);

impl fmt::Display for DisplayIssues<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanRow {
    pub syllogism: Syllogism,
    /// Raw percentages in response-column order.
    pub percentages: [f64; N_RESPONSES],
    /// 1-based row number in the source file (0 when built in memory).
    pub source_row: usize,
}

impl HumanRow {
    pub fn code(&self) -> String {
        self.syllogism.code()
    }

    pub fn sum(&self) -> f64 {
        self.percentages.iter().sum()
    }
}

/// Human response matrix. After [`load_table`] it holds exactly the 64
/// canonical items in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanMatrix {
    pub rows: Vec<HumanRow>,
}

impl HumanMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads a table without enforcing content invariants. Structural
    /// problems (missing columns, unparsable cells) are still errors.
    pub fn read_unchecked<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let code_col = find("code").ok_or_else(|| DataError::MissingColumn("code".into()))?;
        let mut resp_cols = [0usize; N_RESPONSES];
        for (slot, label) in resp_cols.iter_mut().zip(ResponseType::LABELS) {
            *slot = find(label).ok_or_else(|| DataError::MissingColumn(label.into()))?;
        }
        let premise_cols = match (find("p1"), find("p2")) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            (Some(_), None) => return Err(DataError::MissingColumn("p2".into())),
            (None, Some(_)) => return Err(DataError::MissingColumn("p1".into())),
        };

        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let code = rec.get(code_col).unwrap_or("");
            let mut syllogism = Syllogism::parse(code).map_err(|e| DataError::BadRow {
                row,
                message: e.to_string(),
            })?;
            if let Some((c1, c2)) = premise_cols {
                let p1 = rec.get(c1).unwrap_or("");
                let p2 = rec.get(c2).unwrap_or("");
                if !p1.is_empty() || !p2.is_empty() {
                    let parse = |s: &str| {
                        s.parse::<Premise>().map_err(|e| DataError::BadRow {
                            row,
                            message: e.to_string(),
                        })
                    };
                    syllogism = syllogism
                        .with_premises(parse(p1)?, parse(p2)?)
                        .map_err(|e| DataError::BadRow {
                            row,
                            message: format!("premise quantifier disagrees with code {code}: {e}"),
                        })?;
                }
            }
            let mut percentages = [0.0; N_RESPONSES];
            for (k, &col) in resp_cols.iter().enumerate() {
                let raw = rec.get(col).unwrap_or("");
                percentages[k] = raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DataError::NonNumeric {
                        row,
                        column: ResponseType::LABELS[k].to_string(),
                        value: raw.to_string(),
                    })?;
            }
            rows.push(HumanRow {
                syllogism,
                percentages,
                source_row: row,
            });
        }
        Ok(HumanMatrix { rows })
    }

    /// Content problems: row count, missing or duplicate codes, negative
    /// cells, row sums outside the tolerance band.
    pub fn issues(&self) -> Vec<DataIssue> {
        let mut issues = Vec::new();
        if self.rows.len() != N_SYLLOGISMS {
            issues.push(DataIssue::RowCount(self.rows.len()));
        }
        let mut seen: HashMap<String, usize> = HashMap::new();
        for r in &self.rows {
            let code = r.code();
            if seen.insert(code.clone(), r.source_row).is_some() {
                issues.push(DataIssue::DuplicateCode {
                    code: code.clone(),
                    row: r.source_row,
                });
            }
            for (k, &v) in r.percentages.iter().enumerate() {
                if v < 0.0 {
                    issues.push(DataIssue::NegativeCell {
                        row: r.source_row,
                        code: code.clone(),
                        column: ResponseType::LABELS[k],
                        value: v,
                    });
                }
            }
            let sum = r.sum();
            if !(ROW_SUM_MIN..=ROW_SUM_MAX).contains(&sum) {
                issues.push(DataIssue::RowSum {
                    row: r.source_row,
                    code,
                    sum,
                });
            }
        }
        for s in enumerate_syllogisms() {
            if !seen.contains_key(&s.code()) {
                issues.push(DataIssue::MissingCode(s.code()));
            }
        }
        issues
    }

    /// Validates and reorders rows into canonical enumeration order.
    pub fn into_canonical(mut self) -> Result<Self, DataError> {
        let issues = self.issues();
        if !issues.is_empty() {
            return Err(DataError::Invalid(issues));
        }
        self.rows.sort_by_key(|r| r.syllogism.canonical_index());
        Ok(self)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, DataError> {
        Self::read_unchecked(reader)?.into_canonical()
    }

    /// Writes the table in the input file format; explicit premise columns
    /// are always written so a reload reproduces the same premises.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["code"];
        header.extend(ResponseType::LABELS);
        header.extend(["p1", "p2"]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.code()];
            rec.extend(r.percentages.iter().map(|v| v.to_string()));
            rec.push(r.syllogism.premise1.to_string());
            rec.push(r.syllogism.premise2.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| DataError::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn syllogisms(&self) -> Vec<Syllogism> {
        self.rows.iter().map(|r| r.syllogism).collect()
    }

    pub fn codes(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.code()).collect()
    }
}

/// Loads, validates, and canonically orders a human response table.
pub fn load_table(path: impl AsRef<Path>) -> Result<HumanMatrix, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    HumanMatrix::from_reader(std::io::BufReader::new(file))
}

/// Percentages / 100, renormalized to sum to exactly one. Zero cells stay
/// exactly zero.
pub fn normalize_row(percentages: &[f64; N_RESPONSES]) -> Option<Distribution> {
    let mut p = [0.0; N_RESPONSES];
    for (dst, &v) in p.iter_mut().zip(percentages) {
        *dst = v / 100.0;
    }
    let s: f64 = p.iter().sum();
    if s <= 0.0 {
        return None;
    }
    for v in &mut p {
        *v /= s;
    }
    Some(p)
}

pub fn to_targets(m: &HumanMatrix) -> Result<Vec<Distribution>, DataError> {
    m.rows
        .iter()
        .map(|r| normalize_row(&r.percentages).ok_or_else(|| DataError::AllZero(r.code())))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub rows: usize,
    pub row_sum_min: f64,
    pub row_sum_max: f64,
    /// Rows whose raw sum is not exactly 100 and are rescaled by `to_targets`.
    pub renormalized_rows: usize,
    pub zero_cells: usize,
    pub column_totals: [f64; N_RESPONSES],
    pub issues: Vec<DataIssue>,
}

impl ValidationSummary {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            writeln!(f, "{} rows OK", self.rows)?;
        } else {
            writeln!(f, "{} rows, {} problem(s)", self.rows, self.issues.len())?;
            for issue in &self.issues {
                writeln!(f, "  {issue}")?;
            }
        }
        writeln!(
            f,
            "row sums: min {:.4}, max {:.4}; {} row(s) renormalized",
            self.row_sum_min, self.row_sum_max, self.renormalized_rows
        )?;
        writeln!(f, "zero cells: {}", self.zero_cells)?;
        write!(f, "column totals:")?;
        for (label, t) in ResponseType::LABELS.iter().zip(&self.column_totals) {
            write!(f, " {label}={t:.2}")?;
        }
        Ok(())
    }
}

pub fn validate_report(m: &HumanMatrix) -> ValidationSummary {
    let sums: Vec<f64> = m.rows.iter().map(HumanRow::sum).collect();
    let mut column_totals = [0.0; N_RESPONSES];
    let mut zero_cells = 0;
    for r in &m.rows {
        for (t, &v) in column_totals.iter_mut().zip(&r.percentages) {
            *t += v;
            if v == 0.0 {
                zero_cells += 1;
            }
        }
    }
    ValidationSummary {
        rows: m.rows.len(),
        row_sum_min: sums.iter().copied().fold(f64::INFINITY, f64::min),
        row_sum_max: sums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        renormalized_rows: sums.iter().filter(|&&s| s != 100.0).count(),
        zero_cells,
        column_totals,
        issues: m.issues(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_csv(skip: Option<&str>, tweak: impl Fn(&str, &mut [f64; 9])) -> String {
        let mut s = String::from("code,Aac,Eac,Iac,Oac,Aca,Eca,Ica,Oca,NVC\n");
        for syl in enumerate_syllogisms().iter().rev() {
            let code = syl.code();
            if Some(code.as_str()) == skip {
                continue;
            }
            let mut row = [100.0 / 9.0; 9];
            tweak(&code, &mut row);
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{},{}\n", code, cells.join(",")));
        }
        s
    }

    #[test]
    fn loads_and_reorders() {
        let m = HumanMatrix::from_reader(uniform_csv(None, |_, _| {}).as_bytes()).unwrap();
        assert_eq!(m.len(), 64);
        assert_eq!(m.rows[0].code(), "AA1");
        assert_eq!(m.rows[63].code(), "OO4");
    }

    #[test]
    fn missing_row_names_code() {
        let err = HumanMatrix::from_reader(uniform_csv(Some("OO4"), |_, _| {}).as_bytes())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing syllogism OO4"), "{msg}");
    }

    #[test]
    fn row_sum_99_is_accepted_and_renormalized() {
        let csv = uniform_csv(None, |code, row| {
            if code == "IE1" {
                *row = [11.0; 9];
            }
        });
        let m = HumanMatrix::from_reader(csv.as_bytes()).unwrap();
        let summary = validate_report(&m);
        assert!(summary.is_ok());
        assert!(summary.renormalized_rows >= 1);
        let targets = to_targets(&m).unwrap();
        let ie1 = Syllogism::parse("IE1").unwrap().canonical_index();
        for p in targets[ie1] {
            assert!((p - 1.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn row_sum_out_of_band_names_row() {
        let csv = uniform_csv(None, |code, row| {
            if code == "EA2" {
                row[0] -= 3.5;
            }
        });
        let err = HumanMatrix::from_reader(csv.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(EA2)") && msg.contains("96.5"), "{msg}");
    }

    #[test]
    fn negative_cell_reports_coordinates() {
        let csv = uniform_csv(None, |code, row| {
            if code == "AI3" {
                row[3] = -1.0;
                row[4] += 1.0;
            }
        });
        let m = HumanMatrix::read_unchecked(csv.as_bytes()).unwrap();
        let summary = validate_report(&m);
        assert!(!summary.is_ok());
        let row = m.rows.iter().find(|r| r.code() == "AI3").unwrap().source_row;
        assert!(summary.issues.contains(&DataIssue::NegativeCell {
            row,
            code: "AI3".into(),
            column: "Oac",
            value: -1.0
        }));
    }

    #[test]
    fn structural_errors() {
        let err = HumanMatrix::read_unchecked("code,Aac,Eac,Iac,Oac,Aca,Eca,Ica,Oca\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(ref c) if c == "NVC"));
        let bad = "code,Aac,Eac,Iac,Oac,Aca,Eca,Ica,Oca,NVC\nAA1,x,0,0,0,0,0,0,0,100\n";
        let err = HumanMatrix::read_unchecked(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { row: 1, ref column, .. } if column == "Aac"));
        let dup = format!("{}AA1,100,0,0,0,0,0,0,0,0\n", uniform_csv(None, |_, _| {}));
        let err = HumanMatrix::from_reader(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate syllogism AA1"));
    }

    #[test]
    fn target_examples() {
        let one_hot = normalize_row(&[100.0, 0., 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        assert_eq!(one_hot, [1.0, 0., 0., 0., 0., 0., 0., 0., 0.]);

        let raw = [60.0, 5.0, 10.0, 0.0, 5.0, 0.0, 10.0, 0.0, 10.0];
        let p = normalize_row(&raw).unwrap();
        // by hand: entries / 100
        let expected = [0.60, 0.05, 0.10, 0.0, 0.05, 0.0, 0.10, 0.0, 0.10];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(p[3], 0.0);
        assert!(normalize_row(&[0.0; 9]).is_none());
    }

    #[test]
    fn uniform_column_totals() {
        let m = HumanMatrix::from_reader(uniform_csv(None, |_, _| {}).as_bytes()).unwrap();
        let s = validate_report(&m);
        for t in s.column_totals {
            assert!((t - 64.0 / 9.0 * 100.0).abs() < 1e-9);
        }
        assert!(s.row_sum_min >= ROW_SUM_MIN && s.row_sum_max <= ROW_SUM_MAX);
        assert!(s.to_string().starts_with("64 rows OK"));
    }

    #[test]
    fn explicit_premise_columns_override_figure() {
        let mut csv = String::from("code,Aac,Eac,Iac,Oac,Aca,Eca,Ica,Oca,NVC,p1,p2\n");
        for s in enumerate_syllogisms() {
            let (p1, p2) = if s.code() == "AE1" {
                ("Aba".to_string(), "Ebc".to_string())
            } else {
                (String::new(), String::new())
            };
            csv.push_str(&format!("{},100,0,0,0,0,0,0,0,0,{},{}\n", s.code(), p1, p2));
        }
        let m = HumanMatrix::from_reader(csv.as_bytes()).unwrap();
        let ae1 = &m.rows[Syllogism::parse("AE1").unwrap().canonical_index()];
        assert_eq!(ae1.syllogism.premise1.to_string(), "Aba");
        assert_ne!(ae1.syllogism.encode(), Syllogism::parse("AE1").unwrap().encode());
    }

    #[test]
    fn csv_round_trip() {
        let csv = uniform_csv(None, |code, row| {
            if code.starts_with('E') {
                row[1] = 0.1 + 0.2;
                row[5] = 1e-7;
            }
        });
        let m = HumanMatrix::read_unchecked(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = HumanMatrix::read_unchecked(buf.as_slice()).unwrap();
        assert_eq!(
            m.rows.iter().map(|r| (r.syllogism, r.percentages)).collect::<Vec<_>>(),
            back.rows.iter().map(|r| (r.syllogism, r.percentages)).collect::<Vec<_>>()
        );
    }
}

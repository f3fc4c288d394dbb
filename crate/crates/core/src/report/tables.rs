//! CSV/JSON artifacts. Every CSV starts with a `# config_hash: <hex>` line;
//! JSON documents carry a `config_hash` field. State numbers in files are
//! 1-based.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::interpret::{AblationRow, StateProbe, SweepRow};
use crate::stats::{FoldPlan, Metrics};
use crate::syllogism::{ResponseType, N_RESPONSES};
use crate::Distribution;

use super::ReportError;

const HASH_PREFIX: &str = "# config_hash: ";

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn header_line(hash: &str) -> String {
    format!("{HASH_PREFIX}{hash}\n")
}

fn split_hash(path: &Path, text: &str) -> Result<String, ReportError> {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix(HASH_PREFIX))
        .map(|h| h.trim().to_string())
        .ok_or_else(|| ReportError::BadTable {
            path: path.display().to_string(),
            message: "missing config_hash header".into(),
        })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

pub fn to_csv_string<T: Serialize>(hash: &str, rows: &[T]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let here = Path::new("<memory>");
    for r in rows {
        w.serialize(r).map_err(csv_err(here))?;
    }
    let body = w.into_inner().map_err(|e| ReportError::BadTable {
        path: here.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(header_line(hash) + &String::from_utf8_lossy(&body))
}

pub fn write_csv<T: Serialize>(path: &Path, hash: &str, rows: &[T]) -> Result<(), ReportError> {
    let text = to_csv_string(hash, rows)?;
    std::fs::write(path, text).map_err(|e| ReportError::io(path, e))
}

/// Returns the embedded config hash and the rows.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<(String, Vec<T>), ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    let hash = split_hash(path, &text)?;
    let rows = reader(&text)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(csv_err(path))?;
    Ok((hash, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ReportError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// A labelled numeric matrix (predictions, gate weights, activations) with
/// free-form columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl MatrixTable {
    pub fn from_distributions(row_labels: Vec<String>, rows: &[Distribution]) -> Self {
        MatrixTable {
            row_labels,
            col_labels: ResponseType::LABELS.iter().map(|s| s.to_string()).collect(),
            values: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn distributions(&self) -> Result<Vec<Distribution>, ReportError> {
        self.values
            .iter()
            .map(|r| {
                <Distribution>::try_from(r.as_slice()).map_err(|_| ReportError::BadTable {
                    path: "<matrix>".into(),
                    message: format!("expected {N_RESPONSES} columns, got {}", r.len()),
                })
            })
            .collect()
    }

    pub fn to_csv_string(&self, hash: &str) -> Result<String, ReportError> {
        let here = Path::new("<memory>");
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["item".to_string()];
        header.extend(self.col_labels.iter().cloned());
        w.write_record(&header).map_err(csv_err(here))?;
        for (label, row) in self.row_labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err(here))?;
        }
        let body = w.into_inner().map_err(|e| ReportError::BadTable {
            path: here.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(header_line(hash) + &String::from_utf8_lossy(&body))
    }

    pub fn write(&self, path: &Path, hash: &str) -> Result<(), ReportError> {
        std::fs::write(path, self.to_csv_string(hash)?).map_err(|e| ReportError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<(String, Self), ReportError> {
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        let hash = split_hash(path, &text)?;
        let mut rdr = reader(&text);
        let headers = rdr.headers().map_err(csv_err(path))?.clone();
        let col_labels: Vec<String> = headers.iter().skip(1).map(String::from).collect();
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err(path))?;
            row_labels.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|c| {
                    c.parse::<f64>().map_err(|_| ReportError::BadTable {
                        path: path.display().to_string(),
                        message: format!("non-numeric cell {c:?}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            values.push(row);
        }
        Ok((
            hash,
            MatrixTable {
                row_labels,
                col_labels,
                values,
            },
        ))
    }
}

// --- cv artifacts ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsOut {
    pub r: f64,
    pub rmse: f64,
    pub mae: f64,
}

impl From<Metrics> for MetricsOut {
    fn from(m: Metrics) -> Self {
        MetricsOut {
            r: m.r,
            rmse: m.rmse,
            mae: m.mae,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySummary {
    pub pathway: String,
    pub aggregate: MetricsOut,
    pub fold_mean_r: f64,
    pub fold_sd_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvMetricsDoc {
    pub config_hash: String,
    pub items: usize,
    /// The single fold plan every model family was trained and tested on.
    pub fold_plan: FoldPlan,
    pub pathways: Vec<PathwaySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCorrelationRow {
    pub fold: usize,
    pub test_items: usize,
    pub direct: f64,
    pub intuition: f64,
    pub deliberation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTypeRow {
    pub response: String,
    /// Empty where the column was constant.
    pub direct: Option<f64>,
    pub intuition: Option<f64>,
    pub deliberation: Option<f64>,
    pub deliberation_minus_intuition: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDeltaRow {
    pub rank: usize,
    pub code: String,
    pub rmse_intuition: f64,
    pub rmse_deliberation: f64,
    /// Positive when deliberation is closer to the human row.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub comparison: String,
    pub mean_difference: f64,
    /// Empty when the fold differences have zero variance.
    pub t: Option<f64>,
    pub df: usize,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub pathway: String,
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub width: f64,
    pub resamples: usize,
    pub seed: u64,
    pub redraws: usize,
}

// --- canonical / interpret artifacts --------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDoc {
    pub config_hash: String,
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalMetricsDoc {
    pub config_hash: String,
    pub seed: u64,
    pub train_items: usize,
    pub test_items: usize,
    pub intuition: MetricsOut,
    pub deliberation: MetricsOut,
    pub gain: f64,
    pub final_intuition_loss: f64,
    pub final_deliberation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateWinnerRow {
    pub state: usize,
    pub train_wins: usize,
    pub test_wins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateItemRow {
    pub code: String,
    pub partition: String,
    pub winner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateProbeRow {
    pub state: usize,
    pub partition: String,
    #[serde(rename = "Aac")]
    pub aac: f64,
    #[serde(rename = "Eac")]
    pub eac: f64,
    #[serde(rename = "Iac")]
    pub iac: f64,
    #[serde(rename = "Oac")]
    pub oac: f64,
    #[serde(rename = "Aca")]
    pub aca: f64,
    #[serde(rename = "Eca")]
    pub eca: f64,
    #[serde(rename = "Ica")]
    pub ica: f64,
    #[serde(rename = "Oca")]
    pub oca: f64,
    #[serde(rename = "NVC")]
    pub nvc: f64,
}

impl StateProbeRow {
    pub fn new(probe: &StateProbe, partition: &str) -> Self {
        let m = probe.mean;
        StateProbeRow {
            state: probe.state + 1,
            partition: partition.to_string(),
            aac: m[0],
            eac: m[1],
            iac: m[2],
            oac: m[3],
            aca: m[4],
            eca: m[5],
            ica: m[6],
            oca: m[7],
            nvc: m[8],
        }
    }

    pub fn distribution(&self) -> Distribution {
        [
            self.aac, self.eac, self.iac, self.oac, self.aca, self.eca, self.ica, self.oca,
            self.nvc,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationOutRow {
    /// `none` for the baseline, else the removed 1-based state.
    pub removed: String,
    pub test_r: f64,
    pub r_drop: f64,
    pub test_rmse: f64,
    pub rmse_increase: f64,
}

impl From<&AblationRow> for AblationOutRow {
    fn from(a: &AblationRow) -> Self {
        AblationOutRow {
            removed: a.removed.map_or("none".into(), |s| (s + 1).to_string()),
            test_r: a.r,
            r_drop: a.r_drop,
            test_rmse: a.rmse,
            rmse_increase: a.rmse_increase,
        }
    }
}

/// One seed of the stability sweep. A failed seed leaves the numeric cells
/// empty and carries `error: ...` in `dead_states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutRow {
    pub seed: u64,
    pub intuition_r: Option<f64>,
    pub deliberation_r: Option<f64>,
    pub gain: Option<f64>,
    pub dominant_state: Option<usize>,
    /// 1-based states joined by `;`.
    pub dead_states: String,
    pub oac_leaning_state: Option<usize>,
    pub strongest_ablation_state: Option<usize>,
}

impl From<&SweepRow> for SweepOutRow {
    fn from(row: &SweepRow) -> Self {
        match &row.outcome {
            Ok(s) => SweepOutRow {
                seed: row.seed,
                intuition_r: Some(s.intuition_r),
                deliberation_r: Some(s.deliberation_r),
                gain: Some(s.gain),
                dominant_state: Some(s.dominant + 1),
                dead_states: s
                    .dead
                    .iter()
                    .map(|d| (d + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                oac_leaning_state: Some(s.oac_leaning + 1),
                strongest_ablation_state: Some(s.strongest_ablation + 1),
            },
            Err(e) => SweepOutRow {
                seed: row.seed,
                intuition_r: None,
                deliberation_r: None,
                gain: None,
                dominant_state: None,
                dead_states: format!("error: {e}"),
                oac_leaning_state: None,
                strongest_ablation_state: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRoleRow {
    pub state: usize,
    /// Role labels joined by `;`, empty when none apply.
    pub roles: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub intuition: f64,
    pub deliberation: f64,
}

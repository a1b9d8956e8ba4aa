//! Dataset CSV persistence, run configuration schemas and canonical JSON
//! output shared by the command-line tools.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::eval::ExperimentConfig;
use crate::explain::ExplainConfig;
use crate::forest::ForestConfig;
use crate::survival::{SurvivalDataset, SurvivalRecord};
use crate::synth::GeneratorConfig;

/// Version stamp on every config and result file this crate emits.
pub const FORMAT_VERSION: u32 = 1;

/// Load a dataset from CSV with header `f1,...,fd,time,event`; `event` is
/// 0 (censored) or 1 (event). Row order is preserved.
pub fn load_dataset_csv(path: &Path) -> Result<SurvivalDataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[cols.len() - 2] != "time" || cols[cols.len() - 1] != "event" {
        return Err(SurvError::InvalidConfig(
            "CSV header must end with columns `time,event`".into(),
        ));
    }
    let d = cols.len() - 2;
    for (k, c) in cols[..d].iter().enumerate() {
        let expected = format!("f{}", k + 1);
        if *c != expected {
            return Err(SurvError::InvalidConfig(format!(
                "feature column {} named `{c}`, expected `{expected}`",
                k + 1
            )));
        }
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let rownum = i + 1;
        let cell = |column: &str, idx: usize| -> Result<f64> {
            let raw = row.get(idx).ok_or_else(|| SurvError::CsvCell {
                row: rownum,
                column: column.to_string(),
                message: "missing cell".into(),
            })?;
            raw.trim().parse::<f64>().map_err(|_| SurvError::CsvCell {
                row: rownum,
                column: column.to_string(),
                message: format!("not a number: `{raw}`"),
            })
        };
        let mut features = Vec::with_capacity(d);
        for k in 0..d {
            features.push(cell(&format!("f{}", k + 1), k)?);
        }
        let time = cell("time", d)?;
        if time < 0.0 {
            return Err(SurvError::CsvCell {
                row: rownum,
                column: "time".into(),
                message: format!("negative time {time}"),
            });
        }
        let event = match cell("event", d + 1)? {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => {
                return Err(SurvError::CsvCell {
                    row: rownum,
                    column: "event".into(),
                    message: format!("event must be 0 or 1, got {v}"),
                })
            }
        };
        records.push(SurvivalRecord::new(features, event, time));
    }
    SurvivalDataset::new(records)
}

/// Numbers are written with 17 significant digits, enough for a bit-exact
/// f64 round trip.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_dataset_csv(path: &Path, dataset: &SurvivalDataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let d = dataset.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("f{k}")).collect();
    header.push("time".into());
    header.push("event".into());
    writer.write_record(&header)?;
    for r in dataset.records() {
        let mut row: Vec<String> = r.features.iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(r.time));
        row.push(if r.event { "1" } else { "0" }.into());
        writer.write_record(&row)?;
    }
    writer.flush().map_err(SurvError::Io)?;
    Ok(())
}

/// Serialize with sorted object keys and no volatile fields, so identical
/// inputs yield byte-identical files.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json maps are ordered by key, so a Value round trip sorts.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, canonical_json(value)?).map_err(SurvError::Io)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(SurvError::Io)?;
    Ok(serde_json::from_str(&text)?)
}

fn check_version(format_version: u32) -> Result<()> {
    if format_version != FORMAT_VERSION {
        return Err(SurvError::InvalidConfig(format!(
            "unsupported format_version {format_version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

/// Config file for `generate`: either a named preset or a full generator
/// description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRunConfig {
    pub format_version: u32,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    pub seed: u64,
}

impl GenerateRunConfig {
    pub fn resolve(&self) -> Result<GeneratorConfig> {
        check_version(self.format_version)?;
        let mut cfg = match (&self.preset, &self.generator) {
            (Some(name), None) => GeneratorConfig::preset(name, self.seed)?,
            (None, Some(g)) => g.clone(),
            _ => {
                return Err(SurvError::InvalidConfig(
                    "specify exactly one of `preset` or `generator`".into(),
                ))
            }
        };
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Config file for `train-blackbox`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub format_version: u32,
    pub dataset: String,
    pub forest: ForestConfig,
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)
    }
}

/// Config file for `explain` and `export-curves`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRunConfig {
    pub format_version: u32,
    pub dataset: String,
    pub blackbox: String,
    pub method: String,
    /// Explicit anchor points (feature vectors).
    #[serde(default)]
    pub anchors: Vec<Vec<f64>>,
    /// Row indices into the dataset, appended to `anchors`.
    #[serde(default)]
    pub anchor_indices: Vec<usize>,
    #[serde(default)]
    pub explain: ExplainConfig,
}

impl ExplainRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        if self.anchors.is_empty() && self.anchor_indices.is_empty() {
            return Err(SurvError::InvalidConfig(
                "no anchors given (set `anchors` or `anchor_indices`)".into(),
            ));
        }
        Ok(())
    }
}

/// Config file for `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRunConfig {
    pub format_version: u32,
    pub experiment: ExperimentConfig,
}

impl EvaluateRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)
    }
}

/// Config file for `export-curves`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportCurvesRunConfig {
    pub format_version: u32,
    /// Path to an explanation result file written by `explain`.
    pub result: String,
}

impl ExportCurvesRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)
    }
}

/// On-disk wrapper for a ground-truth sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub format_version: u32,
    pub truth: crate::synth::GroundTruth,
}

/// On-disk wrapper for one explanation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format_version: u32,
    pub result: crate::explain::ExplanationResult,
}

impl ResultFile {
    pub fn check(&self) -> Result<()> {
        check_version(self.format_version)
    }
}

/// On-disk wrapper for the evaluation reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub reports: Vec<crate::eval::MetricsReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_clustered_dataset;

    #[test]
    fn well_formed_csv_round_trips_bit_exactly() {
        let cfg = GeneratorConfig::preset("2c5f", 7).unwrap();
        let (ds, _) = gen_clustered_dataset(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        save_dataset_csv(&path, &ds).unwrap();
        let loaded = load_dataset_csv(&path).unwrap();
        assert_eq!(ds.records(), loaded.records());
    }

    #[test]
    fn small_csv_parses_with_correct_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("small.csv");
        fs::write(&path, "f1,f2,time,event\n0.5,1.0,2.0,1\n0.1,-0.2,3.5,0\n1.5,0.0,0.5,1\n")
            .unwrap();
        let ds = load_dataset_csv(&path).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert!(!ds.record(1).event);
    }

    #[test]
    fn bad_event_value_names_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut body = String::from("f1,time,event\n");
        for i in 0..5 {
            body.push_str(&format!("0.{i},1.{i},{}\n", if i == 4 { 2 } else { 1 }));
        }
        fs::write(&path, body).unwrap();
        let err = load_dataset_csv(&path).unwrap_err().to_string();
        assert!(err.contains("row 5") && err.contains("column event"), "{err}");
    }

    #[test]
    fn non_numeric_cell_and_negative_time_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        fs::write(&p1, "f1,time,event\nabc,1.0,1\n").unwrap();
        let err = load_dataset_csv(&p1).unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("column f1"), "{err}");

        let p2 = dir.path().join("b.csv");
        fs::write(&p2, "f1,time,event\n0.5,-1.0,1\n").unwrap();
        let err = load_dataset_csv(&p2).unwrap_err().to_string();
        assert!(err.contains("column time"), "{err}");
    }

    #[test]
    fn misnamed_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        fs::write(&path, "x1,time,event\n0.5,1.0,1\n").unwrap();
        assert!(load_dataset_csv(&path).is_err());
    }

    #[test]
    fn canonical_json_sorts_keys_and_is_stable() {
        #[derive(Serialize)]
        struct Unordered {
            zebra: u32,
            alpha: u32,
        }
        let s = canonical_json(&Unordered { zebra: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zebra").unwrap());
        let t = canonical_json(&Unordered { zebra: 1, alpha: 2 }).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn run_configs_reject_unknown_fields_and_bad_versions() {
        let err = serde_json::from_str::<GenerateRunConfig>(
            r#"{"format_version":1,"preset":"2c5f","seed":1,"bogus":true}"#,
        );
        assert!(err.is_err());
        let cfg: GenerateRunConfig =
            serde_json::from_str(r#"{"format_version":9,"preset":"2c5f","seed":1}"#).unwrap();
        assert!(cfg.resolve().is_err());
        let cfg: GenerateRunConfig =
            serde_json::from_str(r#"{"format_version":1,"preset":"2c5f","seed":1}"#).unwrap();
        assert!(cfg.resolve().is_ok());
    }
}

//! Columnar CSV export of ensembles with a JSON sidecar.
//!
//! Columns, in order: `passage_time`, `overshoot`, `censored`,
//! `sup_horizon`, one `pos_at_<t>` per checkpoint, then `passage_bracket`,
//! `terminal_position`, `late_passage_time`, `late_passage_bracket` and
//! `late_overshoot` (the crossing found past the horizon). Missing values are
//! empty cells; numbers carry 17 significant digits, so a written ensemble
//! reads back bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ensemble::{EnsembleSettings, PassageEnsemble};
use super::record::{Passage, PassageRecord};

const LEADING: [&str; 4] = ["passage_time", "overshoot", "censored", "sup_horizon"];
const TRAILING: [&str; 5] = [
    "passage_bracket",
    "terminal_position",
    "late_passage_time",
    "late_passage_bracket",
    "late_overshoot",
];

/// Contents of the JSON file written next to an ensemble CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub settings: EnsembleSettings,
    pub seeds: Vec<u64>,
    pub n_records: usize,
    pub censored_count: usize,
    /// Free-form echo of the configuration that produced the run.
    #[serde(default)]
    pub config: serde_json::Value,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn ensemble_header(checkpoints: &[f64]) -> Vec<String> {
    LEADING
        .iter()
        .map(|s| s.to_string())
        .chain(checkpoints.iter().map(|t| format!("pos_at_{t}")))
        .chain(TRAILING.iter().map(|s| s.to_string()))
        .collect()
}

pub fn ensemble_to_csv(ens: &PassageEnsemble) -> String {
    let mut out = ensemble_header(&ens.settings.checkpoints).join(",");
    out.push('\n');
    for r in &ens.records {
        let p = r.passage;
        let c = r.continuation;
        let mut cells = vec![
            opt(p.map(|p| p.time)),
            opt(p.map(|p| p.overshoot)),
            u8::from(r.is_censored()).to_string(),
            num(r.sup_horizon),
        ];
        cells.extend(r.positions.iter().map(|v| opt(*v)));
        cells.extend([
            opt(p.map(|p| p.bracket)),
            opt(r.terminal),
            opt(c.map(|p| p.time)),
            opt(c.map(|p| p.bracket)),
            opt(c.map(|p| p.overshoot)),
        ]);
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir` and returns both paths.
pub fn write_ensemble(
    ens: &PassageEnsemble,
    dir: &Path,
    stem: &str,
    config: serde_json::Value,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&csv, ensemble_to_csv(ens)).map_err(|e| Error::io(&csv, e))?;
    let sidecar = EnsembleSidecar {
        settings: ens.settings.clone(),
        seeds: ens.seeds.clone(),
        n_records: ens.len(),
        censored_count: ens.censored_count,
        config,
    };
    fs::write(&json, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|e| Error::io(&json, e))?;
    Ok((csv, json))
}

/// Reads an ensemble back from `<stem>.csv` and its sidecar.
pub fn read_ensemble(csv_path: &Path) -> Result<PassageEnsemble> {
    let json_path = csv_path.with_extension("json");
    let sidecar: EnsembleSidecar =
        serde_json::from_str(&fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?)?;
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let records = parse_records(&text, &sidecar.settings.checkpoints).map_err(|message| Error::Format {
        path: csv_path.to_path_buf(),
        message,
    })?;
    if records.len() != sidecar.n_records {
        return Err(Error::Format {
            path: csv_path.to_path_buf(),
            message: format!("{} rows, sidecar announces {}", records.len(), sidecar.n_records),
        });
    }
    Ok(PassageEnsemble {
        censored_count: records.iter().filter(|r| r.is_censored()).count(),
        settings: sidecar.settings,
        seeds: sidecar.seeds,
        records,
    })
}

fn parse_records(text: &str, checkpoints: &[f64]) -> std::result::Result<Vec<PassageRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let want = ensemble_header(checkpoints).join(",");
    if header != want {
        return Err(format!("header `{header}` does not match `{want}`"));
    }
    let k = checkpoints.len();
    let width = LEADING.len() + k + TRAILING.len();
    lines
        .enumerate()
        .map(|(i, line)| {
            let row = i + 2;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width {
                return Err(format!("line {row}: {} fields, expected {width}", cells.len()));
            }
            let get = |j: usize| -> std::result::Result<Option<f64>, String> {
                match cells[j] {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|e| format!("line {row}, column {}: {e}", j + 1)),
                }
            };
            let need = |j: usize| get(j)?.ok_or_else(|| format!("line {row}: column {} is empty", j + 1));
            let passage = match (get(0)?, get(1)?, get(4 + k)?) {
                (Some(time), Some(overshoot), Some(bracket)) => Some(Passage { time, bracket, overshoot }),
                (None, None, None) => None,
                _ => return Err(format!("line {row}: incomplete passage")),
            };
            let continuation = match (get(6 + k)?, get(7 + k)?, get(8 + k)?) {
                (Some(time), Some(bracket), Some(overshoot)) => Some(Passage { time, bracket, overshoot }),
                (None, None, None) => None,
                _ => return Err(format!("line {row}: incomplete late passage")),
            };
            let censored = match cells[2] {
                "0" => false,
                "1" => true,
                s => return Err(format!("line {row}: censored flag `{s}`")),
            };
            if censored != passage.is_none() {
                return Err(format!("line {row}: censored flag contradicts passage columns"));
            }
            Ok(PassageRecord {
                passage,
                positions: (4..4 + k).map(get).collect::<std::result::Result<_, _>>()?,
                sup_horizon: need(3)?,
                terminal: get(5 + k)?,
                continuation,
            })
        })
        .collect()
}

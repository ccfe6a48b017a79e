//! CSV curves and the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Curve, Outcome, Summary};

pub const CSV_HEADER: &str = "t,algorithm,oracle,averaging,mean_excess_risk,stderr,n_seeds";
pub const CSV_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: u64,
    pub algorithm: String,
    pub oracle: String,
    pub averaging: String,
    pub mean_excess_risk: f64,
    pub stderr: f64,
    pub n_seeds: usize,
}

/// Flattens curves into rows sorted by algorithm then `t`; oracle and
/// averaging break the remaining ties.
pub fn rows(curves: &[Curve]) -> Vec<CurveRow> {
    let mut out: Vec<CurveRow> = curves
        .iter()
        .flat_map(|c| {
            (0..c.t.len()).map(move |i| CurveRow {
                t: c.t[i],
                algorithm: c.label.clone(),
                oracle: c.oracle.to_string(),
                averaging: c.averaging.to_string(),
                mean_excess_risk: c.mean[i],
                stderr: c.stderr[i],
                n_seeds: c.n_seeds[i],
            })
        })
        .collect();
    out.sort_by(|a, b| {
        (&a.algorithm, a.t, &a.oracle, &a.averaging).cmp(&(&b.algorithm, b.t, &b.oracle, &b.averaging))
    });
    out
}

pub fn write_csv<W: std::io::Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!(
            "{}: expected header `{CSV_HEADER}`, found `{}`",
            path.display(),
            header.join(",")
        )));
    }
    Ok(rdr.deserialize().collect::<std::result::Result<Vec<CurveRow>, _>>()?)
}

pub fn summary_to_json(s: &Summary) -> Result<String> {
    Ok(serde_json::to_string_pretty(s)?)
}

pub fn summary_from_json(text: &str) -> Result<Summary> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `curves.csv` and `summary.json` under `dir`, creating it if needed.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(CSV_FILE);
    let mut buf = Vec::new();
    write_csv(&rows(&outcome.curves), &mut buf)?;
    fs::write(&csv_path, buf).map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join(SUMMARY_FILE);
    let mut json = summary_to_json(&outcome.summary)?;
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path, json_path))
}

/// Groups rows by `(algorithm, oracle, averaging)` in order of first appearance.
pub fn group_rows(rows: &[CurveRow]) -> Vec<((String, String, String), Vec<&CurveRow>)> {
    let mut groups: Vec<((String, String, String), Vec<&CurveRow>)> = Vec::new();
    for r in rows {
        let key = (r.algorithm.clone(), r.oracle.clone(), r.averaging.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
}

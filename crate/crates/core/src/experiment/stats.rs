//! Per-point aggregation of `runs.csv` and its verification.

use std::path::Path;

use crate::error::{Error, Result};

/// Columns identifying a parameter point.
pub const KEY_COLUMNS: [&str; 9] = [
    "kind",
    "network",
    "preset",
    "requested_nodes",
    "fraction",
    "f",
    "q",
    "delta",
    "input_map",
];

/// Numeric per-run columns, aggregated per point.
pub const METRIC_COLUMNS: [&str; 20] = [
    "nodes",
    "kappa",
    "fill_w",
    "fill_x",
    "fill_q",
    "fill_r",
    "eps",
    "eps_nonlinear",
    "uncontrolled",
    "sin_q_mean",
    "sin_q_median",
    "sin_q_max",
    "sin_r_mean",
    "sin_r_median",
    "sin_r_max",
    "rank_deficient",
    "bandwidth",
    "lambda",
    "violations",
    "dim",
];

/// Header of `runs.csv`.
pub fn run_header() -> Vec<&'static str> {
    let mut h: Vec<&str> = KEY_COLUMNS.to_vec();
    h.extend(["seed_index", "seed", "status"]);
    h.extend(METRIC_COLUMNS);
    h
}

/// Header of `aggregate.csv`.
pub fn aggregate_header() -> Vec<String> {
    let mut h: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.push("runs".into());
    h.push("failed".into());
    for m in METRIC_COLUMNS {
        for stat in ["mean", "stderr", "median"] {
            h.push(format!("{m}_{stat}"));
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

/// Mean, standard error of the mean and median; `None` for no values.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    let k = values.len();
    if k == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let stderr = if k > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    Some(Summary {
        count: k,
        mean,
        stderr,
        median,
    })
}

/// Aggregate rows (as strings) from `runs.csv` rows, points in order of
/// first appearance.
pub fn aggregate_records(header: &[String], rows: &[Vec<String>]) -> Result<Vec<Vec<String>>> {
    let idx = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation("runs.csv", format!("missing column `{name}`")))
    };
    let key_idx: Vec<usize> = KEY_COLUMNS.iter().map(|k| idx(k)).collect::<Result<_>>()?;
    let metric_idx: Vec<usize> = METRIC_COLUMNS.iter().map(|k| idx(k)).collect::<Result<_>>()?;
    let status_idx = idx("status")?;

    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: Vec<Vec<&Vec<String>>> = Vec::new();
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::validation("runs.csv", format!("row has {} cells, header {}", row.len(), header.len())));
        }
        let key: Vec<String> = key_idx.iter().map(|&i| row[i].clone()).collect();
        match order.iter().position(|k| *k == key) {
            Some(p) => groups[p].push(row),
            None => {
                order.push(key);
                groups.push(vec![row]);
            }
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for (key, members) in order.into_iter().zip(groups) {
        let ok: Vec<&&Vec<String>> = members.iter().filter(|r| r[status_idx] == "ok").collect();
        let mut rec = key;
        rec.push(members.len().to_string());
        rec.push((members.len() - ok.len()).to_string());
        for &mi in &metric_idx {
            let values: Vec<f64> = ok
                .iter()
                .filter(|r| !r[mi].is_empty())
                .map(|r| {
                    r[mi]
                        .parse::<f64>()
                        .map_err(|e| Error::validation("runs.csv", format!("`{}`: {e}", r[mi])))
                })
                .collect::<Result<_>>()?;
            match summarize(&values) {
                Some(s) => {
                    rec.push(s.mean.to_string());
                    rec.push(s.stderr.to_string());
                    rec.push(s.median.to_string());
                }
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Header and rows of a CSV file as strings.
pub fn read_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

pub fn write_csv<S: AsRef<str>>(path: impl AsRef<Path>, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.iter().map(|s| s.as_ref()))?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of [`verify_outputs`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub points: usize,
    /// Points whose recomputed aggregate row differs from the file.
    pub mismatches: Vec<usize>,
}

impl Verification {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recomputes `aggregate.csv` from `runs.csv` in `dir` and compares cell by cell.
pub fn verify_outputs(dir: impl AsRef<Path>) -> Result<Verification> {
    let dir = dir.as_ref();
    let (header, rows) = read_csv(dir.join("runs.csv"))?;
    let (agg_header, agg_rows) = read_csv(dir.join("aggregate.csv"))?;
    if agg_header != aggregate_header() {
        return Err(Error::validation("aggregate.csv", "unexpected header"));
    }
    let expected = aggregate_records(&header, &rows)?;
    let mut mismatches: Vec<usize> = expected
        .iter()
        .zip(&agg_rows)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i)
        .collect();
    let (short, long) = (expected.len().min(agg_rows.len()), expected.len().max(agg_rows.len()));
    mismatches.extend(short..long);
    Ok(Verification {
        points: expected.len(),
        mismatches,
    })
}

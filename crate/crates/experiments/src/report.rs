use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};
use crate::metrics::{summarize, Summary};

/// One per-repetition value; a row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub sweep: String,
    pub framework: String,
    pub rep: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub sweep: String,
    pub framework: String,
    pub metric: String,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Realized hidden fraction of the test masks at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HiddenFraction {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Hyperparameters found by one EM fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmRecord {
    pub sweep: String,
    pub rep: usize,
    pub framework: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    pub p: Vec<f64>,
    pub sigma2: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: String,
    pub seed: u64,
    pub repetitions: usize,
    pub frameworks: Vec<String>,
    pub aggregates: Vec<Aggregate>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub hidden_fraction: BTreeMap<String, HiddenFraction>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, serde_json::Value>,
    pub runtime_seconds: f64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub curves: Vec<CurveRow>,
    pub em: Vec<EmRecord>,
}

/// Summaries of `rows` per (sweep, framework, metric), in order of first
/// appearance.
pub fn aggregate(rows: &[CurveRow]) -> Vec<Aggregate> {
    let mut order: Vec<(&str, &str, &str)> = Vec::new();
    let mut values: BTreeMap<(&str, &str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = (r.sweep.as_str(), r.framework.as_str(), r.metric.as_str());
        values
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.value);
    }
    order
        .into_iter()
        .map(|key| Aggregate {
            sweep: key.0.to_string(),
            framework: key.1.to_string(),
            metric: key.2.to_string(),
            summary: summarize(&values[&key]),
        })
        .collect()
}

impl Outcome {
    /// Per-repetition values of one curve, in repetition order.
    pub fn values(&self, sweep: &str, framework: &str, metric: &str) -> Vec<f64> {
        let mut rows: Vec<&CurveRow> = self
            .curves
            .iter()
            .filter(|r| r.sweep == sweep && r.framework == framework && r.metric == metric)
            .collect();
        rows.sort_by_key(|r| r.rep);
        rows.into_iter().map(|r| r.value).collect()
    }

    pub fn summary(&self, sweep: &str, framework: &str, metric: &str) -> Option<Summary> {
        self.report
            .aggregates
            .iter()
            .find(|a| a.sweep == sweep && a.framework == framework && a.metric == metric)
            .map(|a| a.summary)
    }

    pub fn curves_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| ExperimentError::io(Path::new("curves.csv"), e);
        w.write_record(["sweep", "framework", "rep", "metric", "value"]).map_err(fail)?;
        for r in &self.curves {
            w.write_record([&r.sweep, &r.framework, &r.rep.to_string(), &r.metric, &format!("{:e}", r.value)])
                .map_err(fail)?;
        }
        w.into_inner().map_err(|e| ExperimentError::io(Path::new("curves.csv"), e))
    }

    /// Writes `report.json`, `curves.csv` and, when there are EM fits,
    /// `em.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        let put = |name: &str, bytes: Vec<u8>| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| ExperimentError::io(&path, e))
        };
        put("report.json", pretty_json(&self.report, dir)?)?;
        put("curves.csv", self.curves_csv()?)?;
        if !self.em.is_empty() {
            put("em.json", pretty_json(&self.em, dir)?)?;
        }
        Ok(())
    }
}

fn pretty_json<T: Serialize>(value: &T, dir: &Path) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| ExperimentError::io(dir, e))?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sweep: &str, fw: &str, rep: usize, value: f64) -> CurveRow {
        CurveRow {
            sweep: sweep.into(),
            framework: fw.into(),
            rep,
            metric: "m".into(),
            value,
        }
    }

    #[test]
    fn aggregates_keep_first_appearance_order() {
        let rows = [row("b", "GRP", 0, 1.0), row("a", "GRP", 0, 2.0), row("b", "GRP", 1, 3.0)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].sweep, "b");
        assert_eq!(agg[0].summary.mean, 2.0);
        assert_eq!(agg[1].summary.count, 1);
    }

    #[test]
    fn csv_round_trips_values() {
        let curves = vec![row("s", "TV", 1, 0.1 + 0.2), row("s", "TV", 0, -3.5)];
        let outcome = Outcome {
            report: Report {
                kind: "denoise".into(),
                seed: 0,
                repetitions: 2,
                frameworks: vec!["TV".into()],
                aggregates: aggregate(&curves),
                hidden_fraction: BTreeMap::new(),
                notes: BTreeMap::new(),
                runtime_seconds: 0.0,
                config: ExperimentConfig::default(),
            },
            curves,
            em: Vec::new(),
        };
        assert_eq!(outcome.values("s", "TV", "m"), vec![-3.5, 0.1 + 0.2]);
        let text = String::from_utf8(outcome.curves_csv().unwrap()).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let parsed: Vec<f64> = reader.records().map(|r| r.unwrap()[4].parse().unwrap()).collect();
        assert_eq!(parsed, vec![0.1 + 0.2, -3.5]);
    }
}

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::Method;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: Method,
    pub step_or_rate: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Per-point summaries plus every per-trial value behind them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub metric: String,
    pub methods: Vec<Method>,
    /// Step numbers (1-based) or transfer rates.
    pub points: Vec<f64>,
    pub rows: Vec<ReportRow>,
    /// `per_trial[method][point][trial]`.
    pub per_trial: BTreeMap<Method, Vec<Vec<f64>>>,
    pub config: serde_json::Value,
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of a difference of two independent means.
pub fn pooled_stderr(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

impl ExperimentReport {
    /// Builds rows from `values[method][point][trial]`.
    pub(crate) fn from_values(
        experiment: &str,
        metric: &str,
        points: Vec<f64>,
        per_trial: BTreeMap<Method, Vec<Vec<f64>>>,
        config: serde_json::Value,
    ) -> Self {
        let mut rows = Vec::new();
        for (&method, by_point) in &per_trial {
            for (&point, values) in points.iter().zip(by_point) {
                let (mean, stderr) = mean_stderr(values);
                rows.push(ReportRow {
                    method,
                    step_or_rate: point,
                    mean,
                    stderr,
                    trials: values.len(),
                });
            }
        }
        ExperimentReport {
            schema_version: crate::theory::verify::SCHEMA_VERSION,
            experiment: experiment.to_string(),
            metric: metric.to_string(),
            methods: per_trial.keys().copied().collect(),
            points,
            rows,
            per_trial,
            config,
        }
    }

    pub fn row(&self, method: Method, point_index: usize) -> Option<&ReportRow> {
        let point = *self.points.get(point_index)?;
        self.rows.iter().find(|r| r.method == method && r.step_or_rate == point)
    }

    pub fn means(&self, method: Method) -> Vec<f64> {
        (0..self.points.len()).filter_map(|i| self.row(method, i).map(|r| r.mean)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::io("<report>", std::io::Error::other(e));
        out.write_record(["method", "step_or_rate", "mean", "stderr", "trials"]).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([
                r.method.name().to_string(),
                r.step_or_rate.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
                r.trials.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<report>", e))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::InvalidData(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_is_sd_over_root_trials() {
        let mut per = BTreeMap::new();
        per.insert(Method::LassoSingle, vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let r = ExperimentReport::from_values("x", "l2_error", vec![1.0], per, serde_json::Value::Null);
        let row = r.row(Method::LassoSingle, 0).unwrap();
        assert_eq!(row.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((row.stderr - sd / 2.0).abs() < 1e-15);
        let csv = r.to_csv_string().unwrap();
        assert_eq!(csv.lines().next().unwrap(), "method,step_or_rate,mean,stderr,trials");
        assert!(csv.lines().nth(1).unwrap().starts_with("lasso_single,1,2.5,"));
    }
}

//! Seed-aggregated metric tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub method: String,
    pub metric: String,
    /// One value per seed, in seed order.
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std_dev: f64,
}

impl MetricSummary {
    pub fn new(method: impl Into<String>, metric: impl Into<String>, values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / n };
        let std_dev = if values.len() < 2 { 0.0 } else { (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt() };
        MetricSummary { method: method.into(), metric: metric.into(), values, mean, std_dev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment: String,
    pub seeds: Vec<u64>,
    /// TOML snapshot of the settings that produced the report.
    pub config: String,
    pub rows: Vec<MetricSummary>,
    /// Only filled in when timing was requested, so that reports stay
    /// byte-reproducible by default.
    pub wall_clock_seconds: Option<f64>,
}

impl EvalReport {
    pub fn summary(&self, method: &str, metric: &str) -> Option<&MetricSummary> {
        self.rows.iter().find(|r| r.method == method && r.metric == metric)
    }

    pub fn methods(&self) -> Vec<&str> {
        first_seen(self.rows.iter().map(|r| r.method.as_str()))
    }

    pub fn metrics(&self) -> Vec<&str> {
        first_seen(self.rows.iter().map(|r| r.metric.as_str()))
    }

    /// Method-by-metric table of `mean ± std`, followed by the config.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        writeln!(out, "experiment: {}", self.experiment).unwrap();
        writeln!(out, "seeds: {}", seeds.join(",")).unwrap();
        if let Some(s) = self.wall_clock_seconds {
            writeln!(out, "wall_clock_seconds: {s:.1}").unwrap();
        }
        out.push('\n');
        let metrics = self.metrics();
        let methods = self.methods();
        let mut cells: Vec<Vec<String>> =
            vec![std::iter::once("method".to_string()).chain(metrics.iter().map(|m| m.to_string())).collect()];
        for method in &methods {
            let mut line = vec![method.to_string()];
            for metric in &metrics {
                line.push(match self.summary(method, metric) {
                    Some(s) => format!("{:.3} ± {:.3}", s.mean, s.std_dev),
                    None => "-".to_string(),
                });
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..cells[0].len()).map(|c| cells.iter().map(|l| l[c].chars().count()).max().unwrap_or(0)).collect();
        for line in &cells {
            let padded: Vec<String> = line.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
            writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
        }
        if !self.config.is_empty() {
            out.push_str("\n[config]\n");
            out.push_str(&self.config);
            if !self.config.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }

    /// Long format: `method,metric,mean,std_dev,seed_<s>...`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("method,metric,mean,std_dev");
        for s in &self.seeds {
            write!(out, ",seed_{s}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{},{:?},{:?}", r.method, r.metric, r.mean, r.std_dev).unwrap();
            for v in &r.values {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen: Vec<&str> = Vec::new();
    for i in items {
        if !seen.contains(&i) {
            seen.push(i);
        }
    }
    seen
}

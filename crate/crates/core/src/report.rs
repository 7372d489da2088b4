//! Per-run metrics, cross-seed aggregation and CSV output.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub message_id: String,
    pub created_at: f64,
    pub delivered_at: f64,
    pub hops: u32,
}

/// Counters and delivery log of one simulation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub protocol: String,
    pub seed: u64,
    pub n_created: u64,
    pub n_delivered: u64,
    /// Completed copy transfers, final delivery hops included.
    pub n_relayed: u64,
    pub n_dropped_overflow: u64,
    pub n_dropped_ttl: u64,
    pub n_aborted: u64,
    /// Completed transfers whose copy the receiver already had.
    pub n_discarded: u64,
    pub deliveries: Vec<DeliveryRecord>,
}

impl RunReport {
    pub fn n_dropped(&self) -> u64 {
        self.n_dropped_overflow + self.n_dropped_ttl
    }
}

pub fn delivery_probability(r: &RunReport) -> Option<f64> {
    (r.n_created > 0).then(|| r.n_delivered as f64 / r.n_created as f64)
}

pub fn overhead_ratio(r: &RunReport) -> Option<f64> {
    (r.n_delivered > 0).then(|| (r.n_relayed as f64 - r.n_delivered as f64) / r.n_delivered as f64)
}

pub fn average_delay(r: &RunReport) -> Option<f64> {
    if r.deliveries.is_empty() {
        return None;
    }
    let sum: f64 = r.deliveries.iter().map(|d| d.delivered_at - d.created_at).sum();
    Some(sum / r.deliveries.len() as f64)
}

pub fn average_hops(r: &RunReport) -> Option<f64> {
    if r.deliveries.is_empty() {
        return None;
    }
    let sum: u64 = r.deliveries.iter().map(|d| d.hops as u64).sum();
    Some(sum as f64 / r.deliveries.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    DeliveryProb,
    AvgDelay,
    OverheadRatio,
    AvgHops,
    Dropped,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::DeliveryProb,
        Metric::AvgDelay,
        Metric::OverheadRatio,
        Metric::AvgHops,
        Metric::Dropped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::DeliveryProb => "delivery_prob",
            Metric::AvgDelay => "avg_delay",
            Metric::OverheadRatio => "overhead_ratio",
            Metric::AvgHops => "avg_hops",
            Metric::Dropped => "dropped",
        }
    }
}

/// Table-row view of one run; `None` marks an undefined metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub protocol: String,
    pub seed: u64,
    pub delivery_prob: Option<f64>,
    pub avg_delay: Option<f64>,
    pub overhead_ratio: Option<f64>,
    pub avg_hops: Option<f64>,
    pub dropped: Option<f64>,
}

impl RunMetrics {
    pub fn from_report(r: &RunReport) -> Self {
        Self {
            protocol: r.protocol.clone(),
            seed: r.seed,
            delivery_prob: delivery_probability(r),
            avg_delay: average_delay(r),
            overhead_ratio: overhead_ratio(r),
            avg_hops: average_hops(r),
            dropped: Some(r.n_dropped() as f64),
        }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::DeliveryProb => self.delivery_prob,
            Metric::AvgDelay => self.avg_delay,
            Metric::OverheadRatio => self.overhead_ratio,
            Metric::AvgHops => self.avg_hops,
            Metric::Dropped => self.dropped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: Option<f64>,
    /// Population standard deviation (divisor N).
    pub sd: Option<f64>,
    pub count: usize,
    /// Runs left out because the metric was undefined for them.
    pub excluded: usize,
}

impl SummaryStats {
    pub fn from_values(values: &[Option<f64>]) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let excluded = values.len() - defined.len();
        if defined.is_empty() {
            return Self {
                mean: None,
                sd: None,
                count: 0,
                excluded,
            };
        }
        let n = defined.len() as f64;
        let mean = defined.iter().sum::<f64>() / n;
        let var = defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            sd: Some(var.sqrt()),
            count: defined.len(),
            excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSummary {
    pub protocol: String,
    pub runs: usize,
    /// Indexed like [`Metric::ALL`].
    pub stats: Vec<SummaryStats>,
}

impl ProtocolSummary {
    pub fn stat(&self, m: Metric) -> &SummaryStats {
        let i = Metric::ALL.iter().position(|&x| x == m).expect("metric listed in ALL");
        &self.stats[i]
    }
}

/// Mean and population sd per metric, one summary per protocol in order of
/// first appearance.
pub fn aggregate(runs: &[RunMetrics]) -> Vec<ProtocolSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if !order.contains(&r.protocol.as_str()) {
            order.push(&r.protocol);
        }
    }
    order
        .into_iter()
        .map(|p| {
            let rows: Vec<&RunMetrics> = runs.iter().filter(|r| r.protocol == p).collect();
            let stats = Metric::ALL
                .iter()
                .map(|&m| SummaryStats::from_values(&rows.iter().map(|r| r.get(m)).collect::<Vec<_>>()))
                .collect();
            ProtocolSummary {
                protocol: p.to_string(),
                runs: rows.len(),
                stats,
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `runs.csv`, `summary.csv`, `deliveries.csv` and one
/// `plot_<metric>.csv` per metric into `dir`. Returns the written paths.
pub fn write_outputs(reports: &[RunReport], summary: &[ProtocolSummary], dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let metrics: Vec<RunMetrics> = reports.iter().map(RunMetrics::from_report).collect();
    let mut written = Vec::new();

    let path = dir.join("runs.csv");
    write_csv(
        &path,
        &[
            "protocol",
            "seed",
            "delivery_prob",
            "avg_delay",
            "overhead_ratio",
            "avg_hops",
            "dropped",
            "dropped_overflow",
            "dropped_ttl",
            "created",
            "delivered",
            "relayed",
            "aborted",
            "discarded",
        ],
        reports.iter().zip(&metrics).map(|(r, m)| {
            vec![
                r.protocol.clone(),
                r.seed.to_string(),
                cell(m.delivery_prob),
                cell(m.avg_delay),
                cell(m.overhead_ratio),
                cell(m.avg_hops),
                r.n_dropped().to_string(),
                r.n_dropped_overflow.to_string(),
                r.n_dropped_ttl.to_string(),
                r.n_created.to_string(),
                r.n_delivered.to_string(),
                r.n_relayed.to_string(),
                r.n_aborted.to_string(),
                r.n_discarded.to_string(),
            ]
        }),
    )?;
    written.push(path);

    let path = dir.join("summary.csv");
    let mut header = vec!["protocol".to_string(), "runs".to_string()];
    for m in Metric::ALL {
        for suffix in ["mean", "sd", "excluded"] {
            header.push(format!("{}_{suffix}", m.name()));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &path,
        &header_refs,
        summary.iter().map(|s| {
            let mut row = vec![s.protocol.clone(), s.runs.to_string()];
            for st in &s.stats {
                row.push(cell(st.mean));
                row.push(cell(st.sd));
                row.push(st.excluded.to_string());
            }
            row
        }),
    )?;
    written.push(path);

    let path = dir.join("deliveries.csv");
    write_csv(
        &path,
        &["protocol", "seed", "message_id", "created_at", "delivered_at", "delay", "hops"],
        reports.iter().flat_map(|r| {
            r.deliveries.iter().map(move |d| {
                vec![
                    r.protocol.clone(),
                    r.seed.to_string(),
                    d.message_id.clone(),
                    d.created_at.to_string(),
                    d.delivered_at.to_string(),
                    (d.delivered_at - d.created_at).to_string(),
                    d.hops.to_string(),
                ]
            })
        }),
    )?;
    written.push(path);

    for m in Metric::ALL {
        let path = dir.join(format!("plot_{}.csv", m.name()));
        write_csv(
            &path,
            &["protocol", "seed", "value"],
            metrics
                .iter()
                .map(|r| vec![r.protocol.clone(), r.seed.to_string(), cell(r.get(m))]),
        )?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(created: u64, delivered: u64, relayed: u64) -> RunReport {
        RunReport {
            protocol: "EpidemicRouter".into(),
            n_created: created,
            n_delivered: delivered,
            n_relayed: relayed,
            ..Default::default()
        }
    }

    fn delivered(delays: &[(f64, f64, u32)]) -> RunReport {
        RunReport {
            n_created: 10,
            n_delivered: delays.len() as u64,
            n_relayed: 50,
            deliveries: delays
                .iter()
                .enumerate()
                .map(|(i, &(c, d, h))| DeliveryRecord {
                    message_id: format!("m{i}"),
                    created_at: c,
                    delivered_at: d,
                    hops: h,
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn delivery_probability_values() {
        assert!((delivery_probability(&report(37, 15, 0)).unwrap() - 0.405405).abs() < 1e-6);
        assert_eq!(delivery_probability(&report(37, 0, 0)), Some(0.0));
        assert!((delivery_probability(&report(37, 1, 0)).unwrap() - 0.027027).abs() < 1e-6);
        assert_eq!(delivery_probability(&report(0, 0, 0)), None);
    }

    #[test]
    fn overhead_values() {
        assert_eq!(overhead_ratio(&report(37, 1, 3567)), Some(3566.0));
        assert_eq!(overhead_ratio(&report(37, 4, 4)), Some(0.0));
        assert_eq!(overhead_ratio(&report(37, 0, 99)), None);
    }

    #[test]
    fn delay_and_hops() {
        let r = delivered(&[(10.0, 565.4, 2)]);
        assert!((average_delay(&r).unwrap() - 555.4).abs() < 1e-9);
        assert_eq!(average_hops(&r), Some(2.0));
        let r = delivered(&[(0.0, 100.0, 1), (50.0, 350.0, 3)]);
        assert_eq!(average_delay(&r), Some(200.0));
        assert_eq!(average_hops(&r), Some(2.0));
        let r = delivered(&[]);
        assert_eq!(average_delay(&r), None);
        assert_eq!(average_hops(&r), None);
    }

    #[test]
    fn single_run_aggregate_is_exact() {
        let r = delivered(&[(0.0, 100.0, 1), (50.0, 351.0, 4)]);
        let m = RunMetrics::from_report(&r);
        let s = aggregate(std::slice::from_ref(&m));
        assert_eq!(s.len(), 1);
        for metric in Metric::ALL {
            assert_eq!(s[0].stat(metric).mean, m.get(metric));
            assert_eq!(s[0].stat(metric).sd, Some(0.0));
        }
    }

    #[test]
    fn undefined_values_are_excluded_and_counted() {
        let s = SummaryStats::from_values(&[Some(1.0), None, Some(3.0)]);
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.sd, Some(1.0));
        assert_eq!((s.count, s.excluded), (2, 1));
        let s = SummaryStats::from_values(&[None, None]);
        assert_eq!(s.mean, None);
        assert_eq!(s.excluded, 2);
    }
}

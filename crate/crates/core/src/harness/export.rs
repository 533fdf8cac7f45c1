//! CSV and JSON exporters for metrics, plot tables, and beam maps.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::study::MetricRow;
use crate::antenna::{coverage_diagnostic, Device};
use crate::beamcore::Dataset;
use crate::sphgrid::Direction;
use crate::{Error, Result};

pub fn write_metrics<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn save_metrics(rows: &[MetricRow], path: &Path) -> Result<()> {
    write_metrics(rows, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    read_metrics(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Seed statistics of one (experiment, metric, n) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub experiment: String,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub seeds: usize,
}

/// Plot-ready table, sorted by experiment, metric, then n.
pub fn plot_points(rows: &[MetricRow]) -> Vec<PlotPoint> {
    let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.seed != "mean") {
        groups
            .entry((r.experiment.clone(), r.metric.clone(), r.n))
            .or_default()
            .push(r.value);
    }
    groups
        .into_iter()
        .map(|((experiment, metric, n), v)| PlotPoint {
            experiment,
            metric,
            n,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            seeds: v.len(),
        })
        .collect()
}

pub fn save_plot_data(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in plot_points(rows) {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Grid map with directions and the beams left without grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibMapExport {
    pub device: String,
    pub n_fib: usize,
    pub directions: Vec<Direction>,
    pub beam_of_point: Vec<usize>,
    pub partition: Vec<Vec<usize>>,
    pub uncovered_beams: Vec<usize>,
}

pub fn fib_map_export(device: &Device) -> Result<FibMapExport> {
    let fm = device.require_fib_map()?;
    Ok(FibMapExport {
        device: device.id().to_string(),
        n_fib: fm.n_fib(),
        directions: fm.grid.points().to_vec(),
        beam_of_point: fm.beam_of_point.clone(),
        partition: fm.partition.clone(),
        uncovered_beams: coverage_diagnostic(device)?,
    })
}

/// Fraction of samples whose best UT beam is `j`, for every beam.
pub fn best_beam_histogram(ds: &Dataset, n_beams: usize) -> Result<Vec<f64>> {
    if ds.is_empty() {
        return Err(Error::invalid("histogram of an empty dataset"));
    }
    let mut h = vec![0.0; n_beams];
    for s in &ds.samples {
        *h.get_mut(s.j_star)
            .ok_or_else(|| Error::invalid(format!("beam {} outside a {n_beams}-beam codebook", s.j_star)))? += 1.0;
    }
    let n = ds.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    Ok(h)
}

pub fn save_histogram(h: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["beam", "fraction"])?;
    for (j, v) in h.iter().enumerate() {
        w.write_record([j.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::Design;
    use crate::harness::generate::{device_with_grid, Generator, Split};
    use crate::harness::config::{ExperimentConfig, Profile};

    fn row(seed: &str, n: usize, value: f64) -> MetricRow {
        MetricRow {
            experiment: "matched:E:agnostic".into(),
            seed: seed.into(),
            n,
            metric: "misalignment".into(),
            value,
            sample_count: 1000,
        }
    }

    #[test]
    fn metrics_roundtrip_exactly() {
        let rows = vec![row("0", 5, 0.1 + 0.2), row("1", 5, 1.0 / 3.0), row("mean", 5, 0.316_666_666_666_666_7)];
        let mut buf = Vec::new();
        write_metrics(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("experiment,seed,n,metric,value,sample_count\n"));
        assert_eq!(read_metrics(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn plot_points_ignore_mean_rows() {
        let rows = vec![row("0", 5, 0.2), row("1", 5, 0.4), row("mean", 5, 9.0), row("0", 1, 0.5)];
        let p = plot_points(&rows);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].n, 1);
        assert!((p[1].mean - 0.3).abs() < 1e-15);
        assert_eq!((p[1].min, p[1].max, p[1].seeds), (0.2, 0.4, 2));
    }

    #[test]
    fn map_exports() {
        let d = device_with_grid(Design::E, 100).unwrap();
        let fm = fib_map_export(&d).unwrap();
        assert_eq!(fm.beam_of_point.len(), 100);
        assert_eq!(fm.uncovered_beams, vec![10]);
        let json = serde_json::to_string(&fm).unwrap();
        assert_eq!(serde_json::from_str::<FibMapExport>(&json).unwrap(), fm);

        let cfg = ExperimentConfig::indoor(Profile::Desk);
        let ds = Generator::new(cfg.data).unwrap().generate(&d, 50, Split::Train).unwrap();
        let h = best_beam_histogram(&ds, d.n_beams()).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

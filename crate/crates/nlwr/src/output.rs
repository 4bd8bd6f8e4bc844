//! CSV writers for run results.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::measures::{actual_split_ratios, MeasureReport};
use crate::scheme::Trajectory;

fn fmt(value: f64) -> String {
    // adding zero folds -0.0 into 0.0 before printing
    (value + 0.0).to_string()
}

fn density_csv(path: &Path, traj: &Trajectory, rho: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["road", "x", "rho"])?;
    for (ri, cells) in rho.iter().enumerate() {
        let id = traj.roads[ri].id;
        for (i, &value) in cells.iter().enumerate() {
            let x = (i as f64 + 0.5) * traj.dx;
            w.write_record([id.to_string(), fmt(x), fmt(value)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn measures_csv(path: &Path, report: &MeasureReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "value"])?;
    w.write_record(["outflow".to_string(), fmt(report.outflow)])?;
    w.write_record([
        "total_travel_time".to_string(),
        fmt(report.total_travel_time),
    ])?;
    w.write_record(["congestion".to_string(), fmt(report.congestion)])?;
    for (id, v) in &report.per_road_ttt {
        w.write_record([format!("ttt_road_{id}"), fmt(*v)])?;
    }
    for (id, v) in &report.per_road_congestion {
        w.write_record([format!("cm_road_{id}"), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

fn ratios_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "junction", "out_road", "ratio"])?;
    for ji in 0..traj.junctions.len() {
        for s in actual_split_ratios(traj, ji) {
            w.write_record([
                fmt(s.t),
                ji.to_string(),
                s.out_road.to_string(),
                s.ratio.map(fmt).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write the full result set of a run into `dir`: one density profile per
/// requested snapshot, the final profile, the measures, and the realized
/// split ratios. Returns the files written.
pub fn write_results(
    traj: &Trajectory,
    report: &MeasureReport,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for snap in &traj.snapshots {
        let path = dir.join(format!("snapshot_{}.csv", snap.requested_t));
        density_csv(&path, traj, &snap.rho)?;
        written.push(path);
    }
    let path = dir.join("final.csv");
    density_csv(&path, traj, &traj.final_state.rho)?;
    written.push(path);
    let path = dir.join("measures.csv");
    measures_csv(&path, report)?;
    written.push(path);
    let path = dir.join("ratios.csv");
    ratios_csv(&path, traj)?;
    written.push(path);
    Ok(written)
}

/// Single-profile CSV with `x,rho` rows.
pub fn write_profile_csv(path: impl AsRef<Path>, xs: &[f64], rho: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["x", "rho"])?;
    for (x, r) in xs.iter().zip(rho) {
        w.write_record([fmt(*x), fmt(*r)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a kernel-range sweep; `eta` of `None` marks the local
/// reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta: Option<f64>,
    pub outflow: f64,
    pub total_travel_time: f64,
    pub congestion: f64,
}

pub fn write_sweep_csv(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["eta", "outflow", "total_travel_time", "congestion"])?;
    for row in rows {
        w.write_record([
            row.eta.map(fmt).unwrap_or_else(|| "local".to_string()),
            fmt(row.outflow),
            fmt(row.total_travel_time),
            fmt(row.congestion),
        ])?;
    }
    w.flush()?;
    Ok(())
}

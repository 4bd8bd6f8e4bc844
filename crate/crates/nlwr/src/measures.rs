//! Evaluation functionals over recorded trajectories: outflow, travel
//! time, congestion, split ratios, and distances between runs.
//!
//! Time integrals use the left endpoint of each step, matching the
//! first-order accuracy of the marching scheme.

use crate::error::{Error, Result};
use crate::network::Network;
use crate::grid::State;
use crate::scheme::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub outflow: f64,
    pub total_travel_time: f64,
    pub congestion: f64,
    pub per_road_ttt: Vec<(u32, f64)>,
    pub per_road_congestion: Vec<(u32, f64)>,
}

/// Mass that left the network, integrated over the run.
pub fn outflow(traj: &Trajectory) -> f64 {
    let Some(r) = traj.outflow_road else {
        return 0.0;
    };
    // + 0.0 folds the -0.0 an empty sum produces
    traj.steps.iter().map(|s| s.dt * s.outflux[r]).sum::<f64>() + 0.0
}

/// Integral of the total mass on the listed roads over the run.
pub fn total_travel_time(traj: &Trajectory, ids: &[u32]) -> f64 {
    let rs: Vec<usize> = ids.iter().filter_map(|&id| traj.road_position(id)).collect();
    traj.steps
        .iter()
        .map(|s| s.dt * rs.iter().map(|&r| s.mass[r]).sum::<f64>())
        .sum::<f64>()
        + 0.0
}

/// Time spent below half the free-flow speed, aggregated per road: the
/// positive part of mass minus flux normalized by the reference speed,
/// integrated in time. The positive part is taken per road and step, after
/// the spatial integral.
pub fn congestion(traj: &Trajectory, ids: &[u32]) -> f64 {
    ids.iter()
        .filter_map(|&id| traj.road_position(id))
        .map(|r| {
            let v_ref = 0.5 * traj.roads[r].v_max;
            traj.steps
                .iter()
                .map(|s| s.dt * (s.mass[r] - s.flux_integral[r] / v_ref).max(0.0))
                .sum::<f64>()
        })
        .sum::<f64>()
        + 0.0
}

/// The three headline measures plus per-road breakdowns, taken over the
/// real (non-artificial) roads. The travel-time sum also leaves out the
/// outflow road: it only drains the network, and time spent on it is time
/// after leaving.
pub fn report(traj: &Trajectory) -> MeasureReport {
    let real: Vec<u32> = traj
        .roads
        .iter()
        .filter(|r| !r.artificial)
        .map(|r| r.id)
        .collect();
    let drain = traj.outflow_road.map(|r| traj.roads[r].id);
    let traveled: Vec<u32> = real
        .iter()
        .copied()
        .filter(|&id| Some(id) != drain)
        .collect();
    MeasureReport {
        outflow: outflow(traj),
        total_travel_time: total_travel_time(traj, &traveled),
        congestion: congestion(traj, &real),
        per_road_ttt: real
            .iter()
            .map(|&id| (id, total_travel_time(traj, &[id])))
            .collect(),
        per_road_congestion: real.iter().map(|&id| (id, congestion(traj, &[id]))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    pub t: f64,
    pub out_road: u32,
    /// Fraction of the vertex throughput entering this road; absent while
    /// nothing crosses the vertex.
    pub ratio: Option<f64>,
}

const RATIO_FLOOR: f64 = 1e-12;

/// Realized split fractions at a junction, one sample per outgoing road
/// and step.
pub fn actual_split_ratios(traj: &Trajectory, junction: usize) -> Vec<RatioSample> {
    let Some(jc) = traj.junctions.get(junction) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for s in &traj.steps {
        let total: f64 = jc.incoming.iter().map(|&e| s.outflux[e]).sum();
        for &o in &jc.outgoing {
            out.push(RatioSample {
                t: s.t,
                out_road: traj.roads[o].id,
                ratio: (total >= RATIO_FLOOR).then(|| s.influx[o] / total),
            });
        }
    }
    out
}

fn nearest(traj: &Trajectory, time: f64) -> (f64, &Vec<Vec<f64>>) {
    let mut best_t = traj.final_state.time;
    let mut best = &traj.final_state.rho;
    let mut gap = (time - best_t).abs();
    for s in &traj.snapshots {
        let g = (time - s.t).abs();
        if g < gap {
            gap = g;
            best_t = s.t;
            best = &s.rho;
        }
    }
    (best_t, best)
}

/// L1 distance between two runs on one road, read from the snapshots
/// nearest to the requested time (the final state counts as a snapshot).
/// The runs must share the grid on that road.
pub fn l1_distance(a: &Trajectory, b: &Trajectory, road_id: u32, time: f64) -> Result<f64> {
    let (ra, rb) = match (a.road_position(road_id), b.road_position(road_id)) {
        (Some(ra), Some(rb)) => (ra, rb),
        _ => {
            return Err(Error::Config(format!(
                "road {road_id} is not part of both runs"
            )))
        }
    };
    if (a.dx - b.dx).abs() > 1e-12 * a.dx.abs().max(b.dx.abs()) {
        return Err(Error::Config(format!(
            "grids differ: dx {} versus {}",
            a.dx, b.dx
        )));
    }
    let (_, rho_a) = nearest(a, time);
    let (_, rho_b) = nearest(b, time);
    if rho_a[ra].len() != rho_b[rb].len() {
        return Err(Error::Config(format!(
            "road {road_id} has {} cells in one run and {} in the other",
            rho_a[ra].len(),
            rho_b[rb].len()
        )));
    }
    Ok(rho_a[ra]
        .iter()
        .zip(&rho_b[rb])
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.dx)
}

/// Total variation of the state across the network: cell-to-cell jumps
/// within each road plus the jump over every vertex between each incoming
/// road's end and each outgoing road's start.
pub fn tv_seminorm(state: &State, net: &Network) -> f64 {
    let index = net.road_index();
    let mut tv = 0.0;
    for rho in &state.rho {
        for w in rho.windows(2) {
            tv += (w[1] - w[0]).abs();
        }
    }
    for j in &net.junctions {
        for &e in &j.incoming {
            let tail = *state.rho[index[&e]].last().unwrap();
            for &o in &j.outgoing {
                tv += (state.rho[index[&o]][0] - tail).abs();
            }
        }
    }
    tv
}

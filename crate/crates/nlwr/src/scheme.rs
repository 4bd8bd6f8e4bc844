//! Upwind finite-volume scheme for the nonlocal model, time-step control,
//! and the shared simulation driver.
//!
//! Index conventions follow the vertex-relative frame: every vertex sits at
//! a cell interface; cells on an incoming road carry indices j < 0 counting
//! toward the vertex, cells on an outgoing road carry j >= 0. A road that
//! connects two vertices plays both parts at once; its look-ahead windows
//! are short enough (the kernel range is shorter than the road) that the
//! two frames never interfere.

use crate::coupling::{
    coupling_one_to_one, coupling_one_to_two_distribution, coupling_one_to_two_maxflux,
    coupling_two_to_one_maxflux, coupling_two_to_one_priority,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, State};
use crate::kernel::{gamma_weights, QuadratureWeights};
use crate::network::{CouplingTag, Network, Road, Topology, VelocityLaw};
use crate::scenario::{Model, Scenario};

/// Which side of a vertex a cell index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Incoming,
    Outgoing,
}

/// Kernel-weighted average of the road's own downstream velocity, seen from
/// cell `j` in the vertex-relative frame.
///
/// On the incoming side the window is cut off at the vertex, so it shrinks
/// as the cell approaches it and is empty at the last cell (j = -1). On the
/// outgoing side the window may begin at the vertex; indices j < 0 query
/// the first cells of the road, which is how influx velocities are formed.
/// Empty windows give 0.
pub fn discrete_velocity(
    road: &Road,
    side: Side,
    j: i64,
    rho_road: &[f64],
    weights: &QuadratureWeights,
) -> Result<f64> {
    let n = rho_road.len() as i64;
    let nw = weights.n_eta as i64;
    let law = road.law;
    match side {
        Side::Incoming => {
            if !(-n..0).contains(&j) {
                return Err(Error::Domain(format!(
                    "incoming cell index {j} outside [{}, -1]",
                    -n
                )));
            }
            let kmax = (-j - 2).min(nw - 1);
            let mut v = 0.0;
            for k in 0..=kmax {
                v += weights.gamma[k as usize] * law.v(rho_road[(n + j + k + 1) as usize]);
            }
            Ok(v)
        }
        Side::Outgoing => {
            if j >= n {
                return Err(Error::Domain(format!("cell index {j} beyond the road")));
            }
            let k0 = (-j - 1).max(0);
            if k0 < nw && j + nw > n - 1 {
                return Err(Error::Domain(format!(
                    "window of cell {j} leaves the road ({n} cells, window {nw})"
                )));
            }
            let mut v = 0.0;
            for k in k0..nw {
                v += weights.gamma[k as usize] * law.v(rho_road[(j + k + 1) as usize]);
            }
            Ok(v)
        }
    }
}

/// Time-step selection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CflMode {
    /// Worst-case bound: dx / (gamma_0 ||v'|| ||rho|| + 2 ||v||) with the
    /// density norm taken from the road capacities.
    Strict,
    /// Same bound with a single velocity term in the denominator.
    Relaxed,
    /// The strict formula, but the density norm is recomputed from the
    /// current state every step.
    #[default]
    Adaptive,
}

impl CflMode {
    pub fn parse(s: &str) -> Result<CflMode> {
        match s {
            "strict" => Ok(CflMode::Strict),
            "relaxed" => Ok(CflMode::Relaxed),
            "adaptive" => Ok(CflMode::Adaptive),
            other => Err(Error::Config(format!(
                "unknown CFL mode {other:?}; use strict, relaxed or adaptive"
            ))),
        }
    }
}

/// Largest stable time step for the given state.
pub fn cfl_dt(net: &Network, state: &State, weights: &QuadratureWeights, mode: CflMode) -> f64 {
    let v_norm = net.roads.iter().map(|r| r.law.v_max).fold(0.0, f64::max);
    let dv_norm = net.roads.iter().map(|r| r.law.dv_abs()).fold(0.0, f64::max);
    let rho_norm = match mode {
        CflMode::Adaptive => state.max_density(),
        _ => net.roads.iter().map(|r| r.law.rho_max).fold(0.0, f64::max),
    };
    let c = if mode == CflMode::Relaxed { 1.0 } else { 2.0 };
    weights.dx / (weights.gamma0() * dv_norm * rho_norm + c * v_norm)
}

// ---------------------------------------------------------------------------
// engine infrastructure shared by the nonlocal, local and limit solvers

#[derive(Debug, Clone)]
pub(crate) struct RoadCtx {
    pub id: u32,
    pub law: VelocityLaw,
    pub n: usize,
    pub artificial: bool,
    /// Junction the road leaves, if any.
    pub up: Option<usize>,
    /// Junction the road feeds, if any.
    pub down: Option<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct JunctionCtx {
    pub tag: CouplingTag,
    pub inc: Vec<usize>,
    pub out: Vec<usize>,
    pub alpha: [f64; 2],
    pub q: [f64; 2],
}

#[derive(Debug, Clone)]
pub(crate) struct EngineCore {
    pub roads: Vec<RoadCtx>,
    pub junctions: Vec<JunctionCtx>,
    pub dx: f64,
    pub v_norm: f64,
    pub dv_norm: f64,
    pub rho_cap: f64,
}

impl EngineCore {
    pub fn new(net: &Network, grid: &GridSpec) -> Result<EngineCore> {
        let topo = Topology::build(net)?;
        if grid.cells.len() != net.roads.len() {
            return Err(Error::Config(
                "grid does not match the network's road count".to_string(),
            ));
        }
        let roads = net
            .roads
            .iter()
            .enumerate()
            .map(|(i, r)| RoadCtx {
                id: r.id,
                law: r.law,
                n: grid.cells[i],
                artificial: r.is_artificial,
                up: topo.upstream[i],
                down: topo.downstream[i],
            })
            .collect();
        let junctions = net
            .junctions
            .iter()
            .map(|j| {
                let map = |ids: &[u32]| ids.iter().map(|id| topo.index_of[id]).collect();
                let pad = |v: &Option<Vec<f64>>| {
                    let mut a = [0.0; 2];
                    if let Some(v) = v {
                        for (slot, &x) in a.iter_mut().zip(v) {
                            *slot = x;
                        }
                    }
                    a
                };
                JunctionCtx {
                    tag: j.coupling,
                    inc: map(&j.incoming),
                    out: map(&j.outgoing),
                    alpha: pad(&j.distribution),
                    q: pad(&j.priority),
                }
            })
            .collect();
        Ok(EngineCore {
            roads,
            junctions,
            dx: grid.dx,
            v_norm: net.roads.iter().map(|r| r.law.v_max).fold(0.0, f64::max),
            dv_norm: net.roads.iter().map(|r| r.law.dv_abs()).fold(0.0, f64::max),
            rho_cap: net.roads.iter().map(|r| r.law.rho_max).fold(0.0, f64::max),
        })
    }
}

#[derive(Debug, Default)]
pub(crate) struct RunLog {
    pub warnings: Vec<String>,
    priority_zero_seen: bool,
}

impl RunLog {
    pub fn warn_priority_zero(&mut self) {
        if !self.priority_zero_seen {
            self.priority_zero_seen = true;
            let msg = "priority merge saw an empty companion boundary; its flux is blocked until traffic arrives there".to_string();
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
    }
}

pub(crate) trait Engine {
    fn core(&self) -> &EngineCore;
    /// Fill `fx[road][i]` with the flux through interface `i` of each road
    /// (interface i sits between cells i-1 and i; 0 and n are the ends).
    fn fluxes(&mut self, state: &State, fx: &mut [Vec<f64>], log: &mut RunLog);
    fn dt_bound(&self, state: &State, mode: CflMode) -> f64;
    /// Upper admissible density on a road; exceeding it aborts the run.
    fn density_cap(&self, road: usize) -> f64 {
        self.core().roads[road].law.rho_max
    }
}

// ---------------------------------------------------------------------------
// the nonlocal engine

pub(crate) struct NonlocalEngine {
    core: EngineCore,
    weights: QuadratureWeights,
    /// Per junction and outgoing road: look-ahead velocities of that road
    /// seen from the incoming side, indexed by distance to the vertex.
    vx: Vec<Vec<Vec<f64>>>,
}

impl NonlocalEngine {
    pub fn new(net: &Network, grid: &GridSpec, weights: &QuadratureWeights) -> Result<Self> {
        let core = EngineCore::new(net, grid)?;
        let vx = core
            .junctions
            .iter()
            .map(|j| j.out.iter().map(|_| vec![0.0; weights.n_eta]).collect())
            .collect();
        Ok(NonlocalEngine {
            core,
            weights: weights.clone(),
            vx,
        })
    }

    /// Flux contribution of an incoming road's cell at window position `m`
    /// (m = 0 is the last cell before the vertex).
    fn vertex_term(
        &self,
        ji: usize,
        road: usize,
        rho_cell: f64,
        m: usize,
        state: &State,
        log: &mut RunLog,
    ) -> f64 {
        let jc = &self.core.junctions[ji];
        let rmax = |r: usize| self.core.roads[r].law.rho_max;
        match jc.tag {
            CouplingTag::OneToOne => {
                coupling_one_to_one(rho_cell, rmax(jc.out[0]), self.vx[ji][0][m])
            }
            CouplingTag::OneToTwoMaxflux => coupling_one_to_two_maxflux(
                rho_cell,
                (jc.alpha[0], jc.alpha[1]),
                (rmax(jc.out[0]), rmax(jc.out[1])),
                (self.vx[ji][0][m], self.vx[ji][1][m]),
            ),
            CouplingTag::OneToTwoDistribution => coupling_one_to_two_distribution(
                rho_cell,
                (jc.alpha[0], jc.alpha[1]),
                (rmax(jc.out[0]), rmax(jc.out[1])),
                (self.vx[ji][0][m], self.vx[ji][1][m]),
            ),
            CouplingTag::TwoToOneMaxflux => {
                let (q_self, _, other) = companion(jc, road);
                let rho_other = *state.rho[other].last().unwrap();
                coupling_two_to_one_maxflux(
                    rho_cell,
                    rho_other,
                    q_self,
                    rmax(jc.out[0]),
                    self.vx[ji][0][m],
                )
            }
            CouplingTag::TwoToOnePriority => {
                let (q_self, q_other, other) = companion(jc, road);
                let rho_other = *state.rho[other].last().unwrap();
                if rho_other <= 0.0 {
                    log.warn_priority_zero();
                }
                coupling_two_to_one_priority(
                    rho_cell,
                    rho_other,
                    q_self,
                    q_other,
                    rmax(jc.out[0]),
                    self.vx[ji][0][m],
                )
            }
        }
    }

    /// Influx through the upstream interface of an outgoing road.
    fn influx_into(&self, ji: usize, road: usize, state: &State, log: &mut RunLog) -> f64 {
        let jc = &self.core.junctions[ji];
        let oi = jc.out.iter().position(|&o| o == road).unwrap();
        let last = |r: usize| *state.rho[r].last().unwrap();
        match jc.tag {
            CouplingTag::OneToOne | CouplingTag::TwoToOneMaxflux | CouplingTag::TwoToOnePriority => {
                jc.inc
                    .iter()
                    .map(|&e| self.vertex_term(ji, e, last(e), 0, state, log))
                    .sum()
            }
            CouplingTag::OneToTwoMaxflux => {
                let rho_in = last(jc.inc[0]);
                let cap = self.core.roads[road].law.rho_max;
                (jc.alpha[oi] * rho_in).min(cap) * self.vx[ji][oi][0]
            }
            CouplingTag::OneToTwoDistribution => {
                jc.alpha[oi] * self.vertex_term(ji, jc.inc[0], last(jc.inc[0]), 0, state, log)
            }
        }
    }
}

fn companion(jc: &JunctionCtx, road: usize) -> (f64, f64, usize) {
    if jc.inc[0] == road {
        (jc.q[0], jc.q[1], jc.inc[1])
    } else {
        (jc.q[1], jc.q[0], jc.inc[0])
    }
}

impl Engine for NonlocalEngine {
    fn core(&self) -> &EngineCore {
        &self.core
    }

    fn fluxes(&mut self, state: &State, fx: &mut [Vec<f64>], log: &mut RunLog) {
        let nw = self.weights.n_eta;
        {
            // look-ahead velocities of each junction's outgoing roads
            let core = &self.core;
            let g = &self.weights.gamma;
            for (ji, jc) in core.junctions.iter().enumerate() {
                for (oi, &o) in jc.out.iter().enumerate() {
                    let law = core.roads[o].law;
                    let rho = &state.rho[o];
                    let n = rho.len();
                    for (m, slot) in self.vx[ji][oi].iter_mut().enumerate() {
                        let mut s = 0.0;
                        for k in m..nw {
                            s += g[k] * law.v(rho[(k - m).min(n - 1)]);
                        }
                        *slot = s;
                    }
                }
            }
        }

        for ri in 0..self.core.roads.len() {
            let rc = self.core.roads[ri].clone();
            let n = rc.n;
            let rho = &state.rho[ri];
            let g = &self.weights.gamma;
            match rc.down {
                Some(ji) => {
                    for i in 0..n {
                        let mut v_own = 0.0;
                        if i + 1 < n {
                            let upper = (n - i - 2).min(nw - 1);
                            for k in 0..=upper {
                                v_own += g[k] * rc.law.v(rho[i + k + 1]);
                            }
                        }
                        let mut f = rho[i] * v_own;
                        if n - 1 - i < nw {
                            f += self.vertex_term(ji, ri, rho[i], n - 1 - i, state, log);
                        }
                        fx[ri][i + 1] = f;
                    }
                }
                None => {
                    // open end: the window sees the last cell repeated
                    for i in 0..n {
                        let mut v_own = 0.0;
                        for k in 0..nw {
                            v_own += g[k] * rc.law.v(rho[(i + k + 1).min(n - 1)]);
                        }
                        fx[ri][i + 1] = rho[i] * v_own;
                    }
                }
            }
            fx[ri][0] = match rc.up {
                Some(ji) => self.influx_into(ji, ri, state, log),
                None => {
                    // open end: ghost cell repeating the first value
                    let mut v = 0.0;
                    for k in 0..nw {
                        v += g[k] * rc.law.v(rho[k.min(n - 1)]);
                    }
                    rho[0] * v
                }
            };
        }
    }

    fn dt_bound(&self, state: &State, mode: CflMode) -> f64 {
        let rho_norm = match mode {
            CflMode::Adaptive => state.max_density(),
            _ => self.core.rho_cap,
        };
        let c = if mode == CflMode::Relaxed { 1.0 } else { 2.0 };
        self.core.dx / (self.weights.gamma0() * self.core.dv_norm * rho_norm + c * self.core.v_norm)
    }
}

// ---------------------------------------------------------------------------
// stepping and the shared driver

const BOUND_SLACK: f64 = 1e-12;

fn apply_update(state: &mut State, fx: &[Vec<f64>], dt: f64, dx: f64) {
    let lambda = dt / dx;
    for (rho, f) in state.rho.iter_mut().zip(fx) {
        for (i, cell) in rho.iter_mut().enumerate() {
            *cell -= lambda * (f[i + 1] - f[i]);
        }
    }
    state.time += dt;
}

fn check_bounds(state: &State, engine: &dyn Engine) -> Result<()> {
    for (ri, rho) in state.rho.iter().enumerate() {
        let cap = engine.density_cap(ri) + BOUND_SLACK;
        for (i, &value) in rho.iter().enumerate() {
            if !(value.is_finite() && value >= -BOUND_SLACK && value <= cap) {
                return Err(Error::OutOfBounds {
                    time: state.time,
                    road: engine.core().roads[ri].id,
                    cell: i,
                    value,
                });
            }
        }
    }
    Ok(())
}

/// One conservative update of the nonlocal scheme. The density bounds are
/// checked afterwards; a violation reports the offending cell, which is the
/// symptom of a time step above the stable bound.
pub fn step(
    state: &State,
    net: &Network,
    weights: &QuadratureWeights,
    dt: f64,
) -> Result<State> {
    let grid = GridSpec {
        dx: weights.dx,
        n_eta: weights.n_eta,
        cells: state.rho.iter().map(Vec::len).collect(),
    };
    let mut engine = NonlocalEngine::new(net, &grid, weights)?;
    let mut fx: Vec<Vec<f64>> = grid.cells.iter().map(|&n| vec![0.0; n + 1]).collect();
    let mut log = RunLog::default();
    engine.fluxes(state, &mut fx, &mut log);
    let mut next = state.clone();
    apply_update(&mut next, &fx, dt, grid.dx);
    check_bounds(&next, &engine)?;
    Ok(next)
}

/// Flux through the downstream interface of cell `j` of a road, in the
/// vertex-relative frame of the given junction. Incoming roads accept
/// j in [-n, -1]; outgoing roads accept j in [-1, n-1], where j = -1 is
/// the vertex interface itself (the road's influx).
pub fn numerical_flux(
    net: &Network,
    junction: usize,
    road_id: u32,
    j: i64,
    state: &State,
    weights: &QuadratureWeights,
) -> Result<f64> {
    let grid = GridSpec {
        dx: weights.dx,
        n_eta: weights.n_eta,
        cells: state.rho.iter().map(Vec::len).collect(),
    };
    let mut engine = NonlocalEngine::new(net, &grid, weights)?;
    let jc = net
        .junctions
        .get(junction)
        .ok_or_else(|| Error::Config(format!("no junction {junction}")))?;
    let topo = Topology::build(net)?;
    let ri = *topo
        .index_of
        .get(&road_id)
        .ok_or_else(|| Error::Config(format!("no road {road_id}")))?;
    let n = grid.cells[ri] as i64;
    let interface = if jc.incoming.contains(&road_id) && (-n..0).contains(&j) {
        (n + j + 1) as usize
    } else if jc.outgoing.contains(&road_id) && (-1..n).contains(&j) {
        (j + 1) as usize
    } else {
        return Err(Error::Domain(format!(
            "cell {j} of road {road_id} is not addressed by junction {junction}"
        )));
    };
    let mut fx: Vec<Vec<f64>> = grid.cells.iter().map(|&n| vec![0.0; n + 1]).collect();
    let mut log = RunLog::default();
    engine.fluxes(state, &mut fx, &mut log);
    Ok(fx[ri][interface])
}

// ---------------------------------------------------------------------------
// trajectories

#[derive(Debug, Clone)]
pub struct RoadMeta {
    pub id: u32,
    pub cells: usize,
    pub v_max: f64,
    pub rho_max: f64,
    pub artificial: bool,
    pub upstream: Option<usize>,
    pub downstream: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct JunctionMeta {
    /// Road indices, not ids.
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

/// Per-step bookkeeping captured while marching; enough to reconstruct
/// every measure without storing full states.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Time at the start of the step.
    pub t: f64,
    pub dt: f64,
    /// Per-road mass at the start of the step.
    pub mass: Vec<f64>,
    /// Per-road spatial integral of the cell outflow fluxes.
    pub flux_integral: Vec<f64>,
    /// Flux through each road's upstream boundary.
    pub influx: Vec<f64>,
    /// Flux through each road's downstream boundary.
    pub outflux: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested_t: f64,
    /// Time of the step actually captured (nearest step, no interpolation).
    pub t: f64,
    pub rho: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dx: f64,
    pub roads: Vec<RoadMeta>,
    pub junctions: Vec<JunctionMeta>,
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: State,
    /// Road whose downstream boundary flux is the system outflow.
    pub outflow_road: Option<usize>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn road_position(&self, id: u32) -> Option<usize> {
        self.roads.iter().position(|r| r.id == id)
    }
}

pub(crate) fn run(
    engine: &mut dyn Engine,
    initial: &State,
    horizon: f64,
    mode: CflMode,
    snapshot_times: &[f64],
    outflow_road: Option<usize>,
) -> Result<Trajectory> {
    let dx = engine.core().dx;
    let nr = engine.core().roads.len();
    let mut state = initial.clone();
    state.time = 0.0;
    let mut fx: Vec<Vec<f64>> = engine
        .core()
        .roads
        .iter()
        .map(|r| vec![0.0; r.n + 1])
        .collect();
    let mut log = RunLog::default();
    let mut steps = Vec::new();
    let mut snapshots = Vec::new();

    let mut wanted: Vec<f64> = snapshot_times.to_vec();
    wanted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut si = 0;
    while si < wanted.len() && wanted[si] <= 0.0 {
        snapshots.push(Snapshot {
            requested_t: wanted[si],
            t: 0.0,
            rho: state.rho.clone(),
        });
        si += 1;
    }

    let t_end = horizon.max(0.0);
    let eps = 1e-12 * t_end.max(1.0);
    let mut prev_rho = state.rho.clone();

    while state.time < t_end - eps {
        let dt = engine.dt_bound(&state, mode).min(t_end - state.time);
        engine.fluxes(&state, &mut fx, &mut log);

        let mut mass = Vec::with_capacity(nr);
        let mut flux_integral = Vec::with_capacity(nr);
        let mut influx = Vec::with_capacity(nr);
        let mut outflux = Vec::with_capacity(nr);
        for r in 0..nr {
            mass.push(state.rho[r].iter().sum::<f64>() * dx);
            flux_integral.push(fx[r][1..].iter().sum::<f64>() * dx);
            influx.push(fx[r][0]);
            outflux.push(*fx[r].last().unwrap());
        }
        let t0 = state.time;
        steps.push(StepRecord {
            t: t0,
            dt,
            mass,
            flux_integral,
            influx,
            outflux,
        });

        prev_rho.clone_from(&state.rho);
        apply_update(&mut state, &fx, dt, dx);
        check_bounds(&state, engine)?;

        while si < wanted.len() && wanted[si] <= state.time + eps {
            let ts = wanted[si];
            let (t, rho) = if ts - t0 <= state.time - ts {
                (t0, &prev_rho)
            } else {
                (state.time, &state.rho)
            };
            snapshots.push(Snapshot {
                requested_t: ts,
                t,
                rho: rho.clone(),
            });
            si += 1;
        }
    }

    while si < wanted.len() {
        snapshots.push(Snapshot {
            requested_t: wanted[si],
            t: state.time,
            rho: state.rho.clone(),
        });
        si += 1;
    }

    let roads = engine
        .core()
        .roads
        .iter()
        .map(|r| RoadMeta {
            id: r.id,
            cells: r.n,
            v_max: r.law.v_max,
            rho_max: r.law.rho_max,
            artificial: r.artificial,
            upstream: r.up,
            downstream: r.down,
        })
        .collect();
    let junctions = engine
        .core()
        .junctions
        .iter()
        .map(|j| JunctionMeta {
            incoming: j.inc.clone(),
            outgoing: j.out.clone(),
        })
        .collect();

    Ok(Trajectory {
        dx,
        roads,
        junctions,
        steps,
        snapshots,
        final_state: state,
        outflow_road,
        warnings: log.warnings,
    })
}

/// Run the scenario's model from its initial data to its horizon.
pub fn simulate(sc: &Scenario, mode: CflMode) -> Result<Trajectory> {
    match sc.config.model {
        Model::NonlocalMaxflux | Model::NonlocalDistribution => {
            let weights = gamma_weights(&sc.config.kernel, sc.grid.dx)?;
            let mut engine = NonlocalEngine::new(&sc.net, &sc.grid, &weights)?;
            run(
                &mut engine,
                &sc.initial,
                sc.config.horizon,
                mode,
                &sc.config.outputs.snapshots,
                sc.outflow_road,
            )
        }
        Model::LocalMaxflux | Model::LocalDistribution => {
            crate::local::simulate_local(sc, sc.config.model.family().into())
        }
        Model::LimitMaxflux | Model::LimitDistribution => crate::limit::simulate_limit(sc, mode),
    }
}

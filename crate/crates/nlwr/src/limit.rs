//! The infinite-kernel limit of the nonlocal model. As the look-ahead
//! range grows, the nonlocal velocity of an outgoing road flattens to its
//! empty-road speed, and each incoming road is left with an autonomous
//! flux function given by its vertex coupling at those speeds.

use crate::coupling::{
    coupling_one_to_one, coupling_one_to_two_distribution, coupling_one_to_two_maxflux,
    coupling_two_to_one_maxflux, coupling_two_to_one_priority,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, State};
use crate::network::{CouplingTag, Network};
use crate::scenario::Scenario;
use crate::scheme::{run, CflMode, Engine, EngineCore, RunLog, Trajectory};

/// Limit flux of a 1-to-1 vertex: the incoming density is clipped to the
/// outgoing capacity and moves at the outgoing empty-road speed.
pub fn limit_flux_1to1(rho: f64, v2_0: f64, rho_max2: f64) -> f64 {
    rho.min(rho_max2) * v2_0
}

/// Exact solution of the limit model's Riemann problem at a 1-to-1 vertex
/// placed at x = 0, evaluated at time `t` and position `x`. `rho_l` fills
/// the incoming road, `rho_r` the outgoing one.
pub fn riemann_limit_1to1(
    rho_l: f64,
    rho_r: f64,
    rho_max2: f64,
    v2_0: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    if !(rho_max2 > 0.0 && rho_max2.is_finite()) || !(v2_0 >= 0.0 && v2_0.is_finite()) {
        return Err(Error::Domain(
            "outgoing road needs a positive capacity and a finite speed".to_string(),
        ));
    }
    if !(rho_l.is_finite() && rho_l >= 0.0) {
        return Err(Error::Domain(format!("left state {rho_l} out of range")));
    }
    if !(rho_r.is_finite() && (0.0..=rho_max2).contains(&rho_r)) {
        return Err(Error::Domain(format!(
            "right state {rho_r} outside [0, {rho_max2}]"
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time {t} out of range")));
    }
    if x < 0.0 {
        Ok(rho_l)
    } else if x < v2_0 * t {
        Ok(rho_l.min(rho_max2))
    } else {
        Ok(rho_r)
    }
}

/// Data feeding a limit coupling evaluation. For merges, `rho` belongs to
/// the road under consideration and `rho_other` to its companion; `q` is
/// ordered the same way. Outgoing-road pairs list the junction's roads in
/// order, with only the first entry read at single-outgoing vertices.
#[derive(Debug, Clone, Copy, Default)]
pub struct LimitInputs {
    pub rho: f64,
    pub rho_other: f64,
    pub alpha: (f64, f64),
    pub q: (f64, f64),
    pub rho_max_out: (f64, f64),
    /// Empty-road speeds v(0) of the outgoing roads.
    pub v_out: (f64, f64),
}

/// Limit coupling flux of an incoming road: the nonlocal coupling with all
/// look-ahead velocities replaced by the outgoing empty-road speeds.
pub fn limit_coupling_flux(tag: CouplingTag, inp: &LimitInputs) -> f64 {
    match tag {
        CouplingTag::OneToOne => coupling_one_to_one(inp.rho, inp.rho_max_out.0, inp.v_out.0),
        CouplingTag::OneToTwoMaxflux => {
            coupling_one_to_two_maxflux(inp.rho, inp.alpha, inp.rho_max_out, inp.v_out)
        }
        CouplingTag::OneToTwoDistribution => {
            coupling_one_to_two_distribution(inp.rho, inp.alpha, inp.rho_max_out, inp.v_out)
        }
        CouplingTag::TwoToOneMaxflux => coupling_two_to_one_maxflux(
            inp.rho,
            inp.rho_other,
            inp.q.0,
            inp.rho_max_out.0,
            inp.v_out.0,
        ),
        CouplingTag::TwoToOnePriority => coupling_two_to_one_priority(
            inp.rho,
            inp.rho_other,
            inp.q.0,
            inp.q.1,
            inp.rho_max_out.0,
            inp.v_out.0,
        ),
    }
}

pub(crate) struct LimitEngine {
    core: EngineCore,
}

impl LimitEngine {
    pub fn new(net: &Network, grid: &GridSpec) -> Result<LimitEngine> {
        Ok(LimitEngine {
            core: EngineCore::new(net, grid)?,
        })
    }

    fn inputs(&self, ji: usize, road: usize, rho_cell: f64, state: &State) -> LimitInputs {
        let jc = &self.core.junctions[ji];
        let out_law = |slot: usize| {
            jc.out
                .get(slot)
                .map(|&o| self.core.roads[o].law)
                .unwrap_or(self.core.roads[jc.out[0]].law)
        };
        let (l0, l1) = (out_law(0), out_law(1));
        let mut inp = LimitInputs {
            rho: rho_cell,
            alpha: (jc.alpha[0], jc.alpha[1]),
            q: (jc.q[0], jc.q[1]),
            rho_max_out: (l0.rho_max, l1.rho_max),
            v_out: (l0.v_max, l1.v_max),
            ..Default::default()
        };
        if jc.inc.len() == 2 {
            let (q_self, q_other, other) = if jc.inc[0] == road {
                (jc.q[0], jc.q[1], jc.inc[1])
            } else {
                (jc.q[1], jc.q[0], jc.inc[0])
            };
            inp.q = (q_self, q_other);
            inp.rho_other = *state.rho[other].last().unwrap();
        }
        inp
    }

    fn phi(&self, ji: usize, road: usize, rho_cell: f64, state: &State, log: &mut RunLog) -> f64 {
        let jc = &self.core.junctions[ji];
        let inp = self.inputs(ji, road, rho_cell, state);
        if jc.tag == CouplingTag::TwoToOnePriority && inp.rho_other <= 0.0 {
            log.warn_priority_zero();
        }
        limit_coupling_flux(jc.tag, &inp)
    }

    fn influx_into(&self, ji: usize, road: usize, state: &State, log: &mut RunLog) -> f64 {
        let jc = &self.core.junctions[ji];
        let oi = jc.out.iter().position(|&o| o == road).unwrap();
        let last = |r: usize| *state.rho[r].last().unwrap();
        match jc.tag {
            CouplingTag::OneToOne | CouplingTag::TwoToOneMaxflux | CouplingTag::TwoToOnePriority => {
                jc.inc
                    .iter()
                    .map(|&e| self.phi(ji, e, last(e), state, log))
                    .sum()
            }
            CouplingTag::OneToTwoMaxflux => {
                let law = self.core.roads[road].law;
                (jc.alpha[oi] * last(jc.inc[0])).min(law.rho_max) * law.v_max
            }
            CouplingTag::OneToTwoDistribution => {
                jc.alpha[oi] * self.phi(ji, jc.inc[0], last(jc.inc[0]), state, log)
            }
        }
    }
}

impl Engine for LimitEngine {
    fn core(&self) -> &EngineCore {
        &self.core
    }

    fn fluxes(&mut self, state: &State, fx: &mut [Vec<f64>], log: &mut RunLog) {
        for (ri, rc) in self.core.roads.iter().enumerate() {
            let rho = &state.rho[ri];
            let n = rc.n;
            match rc.down {
                Some(ji) => {
                    for i in 0..n {
                        fx[ri][i + 1] = self.phi(ji, ri, rho[i], state, log);
                    }
                }
                None => {
                    for i in 0..n {
                        fx[ri][i + 1] = rho[i] * rc.law.v_max;
                    }
                }
            }
            fx[ri][0] = match rc.up {
                Some(ji) => self.influx_into(ji, ri, state, log),
                None => match rc.down {
                    // ghost cell repeating the first value, under the
                    // road's own flux function
                    Some(ji) => self.phi(ji, ri, rho[0], state, log),
                    None => rho[0] * rc.law.v_max,
                },
            };
        }
    }

    fn dt_bound(&self, _state: &State, _mode: CflMode) -> f64 {
        self.core.dx / (2.0 * self.core.v_norm)
    }

    fn density_cap(&self, _road: usize) -> f64 {
        // the limit couplings carry no feedback from congested outgoing
        // roads back upstream, so queues can exceed the road capacity;
        // only finiteness and nonnegativity are enforced
        f64::INFINITY
    }
}

pub fn simulate_limit(sc: &Scenario, mode: CflMode) -> Result<Trajectory> {
    let mut engine = LimitEngine::new(&sc.net, &sc.grid)?;
    run(
        &mut engine,
        &sc.initial,
        sc.config.horizon,
        mode,
        &sc.config.outputs.snapshots,
        sc.outflow_road,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Junction, Road, VelocityLaw};
    use approx::assert_relative_eq;

    #[test]
    fn clipped_transport_flux() {
        assert_relative_eq!(limit_flux_1to1(0.8, 1.0, 0.5), 0.5);
        assert_relative_eq!(limit_flux_1to1(0.3, 1.0, 0.5), 0.3);
        assert_relative_eq!(limit_flux_1to1(0.3, 2.0, 0.5), 0.6);
    }

    #[test]
    fn riemann_profile_with_saturated_left_state() {
        let sol = |t: f64, x: f64| riemann_limit_1to1(0.8, 0.0, 0.5, 1.0, t, x).unwrap();
        assert_eq!(sol(2.0, -1.0), 0.8);
        assert_eq!(sol(2.0, 1.0), 0.5);
        assert_eq!(sol(2.0, 3.0), 0.0);
        assert_eq!(sol(0.0, 0.5), 0.0);
        assert_eq!(sol(0.0, -0.5), 0.8);
    }

    #[test]
    fn riemann_profile_with_small_left_state() {
        let sol = |t: f64, x: f64| riemann_limit_1to1(0.3, 0.1, 0.5, 1.0, t, x).unwrap();
        assert_eq!(sol(2.0, 1.0), 0.3);
        assert_eq!(sol(2.0, 3.0), 0.1);
    }

    #[test]
    fn riemann_rejects_right_state_over_capacity() {
        assert!(riemann_limit_1to1(0.3, 0.6, 0.5, 1.0, 1.0, 0.0).is_err());
        assert!(riemann_limit_1to1(-0.1, 0.0, 0.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn coupling_flux_matches_the_clipped_transport() {
        let inp = LimitInputs {
            rho: 0.9,
            rho_max_out: (0.75, 0.0),
            v_out: (1.0 / 3.0, 0.0),
            ..Default::default()
        };
        let f = limit_coupling_flux(CouplingTag::OneToOne, &inp);
        assert_relative_eq!(f, 0.25, max_relative = 1e-12);
        assert_eq!(f, limit_flux_1to1(0.9, 1.0 / 3.0, 0.75));
    }

    #[test]
    fn saturated_feeder_and_filled_receiver_are_steady() {
        let law = |v_max: f64, rho_max: f64| VelocityLaw { v_max, rho_max };
        let net = Network {
            roads: vec![
                Road {
                    id: 1,
                    a: 0.0,
                    b: 1.0,
                    law: law(1.0, 1.0),
                    is_artificial: true,
                },
                Road {
                    id: 2,
                    a: 0.0,
                    b: 1.0,
                    law: law(1.0, 0.5),
                    is_artificial: true,
                },
            ],
            junctions: vec![Junction {
                incoming: vec![1],
                outgoing: vec![2],
                coupling: CouplingTag::OneToOne,
                distribution: None,
                priority: None,
            }],
        };
        let grid = GridSpec {
            dx: 0.1,
            n_eta: 1,
            cells: vec![10, 10],
        };
        let mut engine = LimitEngine::new(&net, &grid).unwrap();
        let state = State {
            time: 0.0,
            rho: vec![vec![0.8; 10], vec![0.5; 10]],
        };
        let mut fx = vec![vec![0.0; 11], vec![0.0; 11]];
        let mut log = RunLog::default();
        engine.fluxes(&state, &mut fx, &mut log);
        for f in fx.iter().flatten() {
            assert_relative_eq!(*f, 0.5, max_relative = 1e-12);
        }
    }
}

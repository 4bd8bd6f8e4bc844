//! Classical (local) LWR baseline: Godunov fluxes on the roads and
//! demand/supply coupling at the vertices.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, State};
use crate::network::{Junction, Network, VelocityLaw};
use crate::scenario::{ModelFamily, Scenario};
use crate::scheme::{run, CflMode, Engine, EngineCore, RunLog, Trajectory};

/// Demand/supply decomposition of a road's flux function. The critical
/// density sits at half capacity for the linear velocity law.
#[derive(Debug, Clone, Copy)]
pub struct DemandSupply {
    law: VelocityLaw,
    sigma: f64,
}

impl DemandSupply {
    pub fn new(law: VelocityLaw) -> DemandSupply {
        DemandSupply {
            law,
            sigma: 0.5 * law.rho_max,
        }
    }

    /// Maximum of the flux function, attained at the critical density.
    pub fn cap(&self) -> f64 {
        self.sigma * self.law.v(self.sigma)
    }

    pub(crate) fn d(&self, rho: f64) -> f64 {
        if rho <= self.sigma {
            rho * self.law.v(rho)
        } else {
            self.cap()
        }
    }

    pub(crate) fn s(&self, rho: f64) -> f64 {
        if rho <= self.sigma {
            self.cap()
        } else {
            rho * self.law.v(rho)
        }
    }

    fn check(&self, rho: f64) -> Result<()> {
        if !(rho.is_finite() && (0.0..=self.law.rho_max).contains(&rho)) {
            return Err(Error::Domain(format!(
                "density {rho} outside [0, {}]",
                self.law.rho_max
            )));
        }
        Ok(())
    }
}

/// Largest flux the road can send forward from density `rho`.
pub fn demand(ds: &DemandSupply, rho: f64) -> Result<f64> {
    ds.check(rho)?;
    Ok(ds.d(rho))
}

/// Largest flux the road can absorb at density `rho`.
pub fn supply(ds: &DemandSupply, rho: f64) -> Result<f64> {
    ds.check(rho)?;
    Ok(ds.s(rho))
}

/// Godunov flux through an interface with the given left and right states.
pub fn godunov_flux(ds: &DemandSupply, left: f64, right: f64) -> f64 {
    ds.d(left).min(ds.s(right))
}

/// Which family of junction rules the local model mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalVariant {
    Maxflux,
    Distribution,
}

impl From<ModelFamily> for LocalVariant {
    fn from(f: ModelFamily) -> LocalVariant {
        match f {
            ModelFamily::Maxflux => LocalVariant::Maxflux,
            ModelFamily::Distribution => LocalVariant::Distribution,
        }
    }
}

/// Boundary fluxes at a vertex of the local model. Returns the fluxes of
/// the incoming and outgoing roads in the junction's own road order.
///
/// `rho_in` holds the last-cell densities of the incoming roads, `rho_out`
/// the first-cell densities of the outgoing ones. The split fractions and
/// priorities are read from the junction itself; the variant picks between
/// the maximum-flux and the distribution/priority rule set.
pub fn local_junction_fluxes(
    junction: &Junction,
    ds_in: &[DemandSupply],
    ds_out: &[DemandSupply],
    rho_in: &[f64],
    rho_out: &[f64],
    variant: LocalVariant,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = junction.incoming.len();
    let n = junction.outgoing.len();
    if ds_in.len() != m || rho_in.len() != m || ds_out.len() != n || rho_out.len() != n {
        return Err(Error::Config(
            "junction data does not match its road lists".to_string(),
        ));
    }
    let dem: Vec<f64> = ds_in.iter().zip(rho_in).map(|(ds, &r)| ds.d(r)).collect();
    let sup: Vec<f64> = ds_out.iter().zip(rho_out).map(|(ds, &r)| ds.s(r)).collect();
    match (m, n) {
        (1, 1) => {
            let f = dem[0].min(sup[0]);
            Ok((vec![f], vec![f]))
        }
        (1, 2) => {
            let alpha = junction
                .distribution
                .as_deref()
                .ok_or_else(|| Error::Config("1-to-2 vertex without split fractions".into()))?;
            match variant {
                LocalVariant::Maxflux => {
                    let f: Vec<f64> = (0..2).map(|e| (alpha[e] * dem[0]).min(sup[e])).collect();
                    Ok((vec![f[0] + f[1]], f))
                }
                LocalVariant::Distribution => {
                    if alpha.iter().any(|&a| a <= 0.0) {
                        return Err(Error::Config(
                            "distribution rule needs positive split fractions".into(),
                        ));
                    }
                    let f1 = dem[0].min(sup[0] / alpha[0]).min(sup[1] / alpha[1]);
                    Ok((vec![f1], vec![alpha[0] * f1, alpha[1] * f1]))
                }
            }
        }
        (2, 1) => {
            let q = junction
                .priority
                .as_deref()
                .ok_or_else(|| Error::Config("2-to-1 vertex without priorities".into()))?;
            let f: Vec<f64> = match variant {
                LocalVariant::Maxflux => (0..2)
                    .map(|e| dem[e].min((q[e] * sup[0]).max(sup[0] - dem[1 - e])))
                    .collect(),
                LocalVariant::Distribution => (0..2)
                    .map(|e| {
                        dem[e]
                            .min(q[e] / q[1 - e] * dem[1 - e])
                            .min(q[e] * sup[0])
                    })
                    .collect(),
            };
            Ok((f.clone(), vec![f[0] + f[1]]))
        }
        _ => Err(Error::Config(format!(
            "no local rule for a {m}-to-{n} vertex"
        ))),
    }
}

pub(crate) struct LocalEngine {
    core: EngineCore,
    ds: Vec<DemandSupply>,
    junctions: Vec<Junction>,
    variant: LocalVariant,
}

impl LocalEngine {
    pub fn new(net: &Network, grid: &GridSpec, variant: LocalVariant) -> Result<LocalEngine> {
        Ok(LocalEngine {
            core: EngineCore::new(net, grid)?,
            ds: net.roads.iter().map(|r| DemandSupply::new(r.law)).collect(),
            junctions: net.junctions.clone(),
            variant,
        })
    }
}

impl Engine for LocalEngine {
    fn core(&self) -> &EngineCore {
        &self.core
    }

    fn fluxes(&mut self, state: &State, fx: &mut [Vec<f64>], _log: &mut RunLog) {
        for (ri, rc) in self.core.roads.iter().enumerate() {
            let rho = &state.rho[ri];
            let ds = &self.ds[ri];
            let n = rc.n;
            for i in 1..n {
                fx[ri][i] = godunov_flux(ds, rho[i - 1], rho[i]);
            }
            if rc.up.is_none() {
                fx[ri][0] = godunov_flux(ds, rho[0], rho[0]);
            }
            if rc.down.is_none() {
                fx[ri][n] = godunov_flux(ds, rho[n - 1], rho[n - 1]);
            }
        }
        for (ji, jc) in self.core.junctions.iter().enumerate() {
            let ds_in: Vec<DemandSupply> = jc.inc.iter().map(|&e| self.ds[e]).collect();
            let ds_out: Vec<DemandSupply> = jc.out.iter().map(|&o| self.ds[o]).collect();
            let rho_in: Vec<f64> = jc.inc.iter().map(|&e| *state.rho[e].last().unwrap()).collect();
            let rho_out: Vec<f64> = jc.out.iter().map(|&o| state.rho[o][0]).collect();
            let (fi, fo) = local_junction_fluxes(
                &self.junctions[ji],
                &ds_in,
                &ds_out,
                &rho_in,
                &rho_out,
                self.variant,
            )
            .expect("junction validated before the run");
            for (&e, f) in jc.inc.iter().zip(fi) {
                let last = self.core.roads[e].n;
                fx[e][last] = f;
            }
            for (&o, f) in jc.out.iter().zip(fo) {
                fx[o][0] = f;
            }
        }
    }

    fn dt_bound(&self, _state: &State, _mode: CflMode) -> f64 {
        // the classical Godunov bound; mode switches only affect the
        // nonlocal scheme
        self.core.dx / (2.0 * self.core.v_norm)
    }
}

pub fn simulate_local(sc: &Scenario, variant: LocalVariant) -> Result<Trajectory> {
    let mut engine = LocalEngine::new(&sc.net, &sc.grid, variant)?;
    run(
        &mut engine,
        &sc.initial,
        sc.config.horizon,
        CflMode::Strict,
        &sc.config.outputs.snapshots,
        sc.outflow_road,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CouplingTag;
    use approx::assert_relative_eq;

    fn ds_half() -> DemandSupply {
        DemandSupply::new(VelocityLaw {
            v_max: 0.5,
            rho_max: 1.0,
        })
    }

    #[test]
    fn demand_supply_around_the_critical_density() {
        let ds = ds_half();
        assert_relative_eq!(demand(&ds, 0.4).unwrap(), 0.12, max_relative = 1e-12);
        assert_relative_eq!(supply(&ds, 0.4).unwrap(), 0.125, max_relative = 1e-12);
        assert_relative_eq!(demand(&ds, 0.8).unwrap(), 0.125, max_relative = 1e-12);
        assert_relative_eq!(supply(&ds, 0.8).unwrap(), 0.08, max_relative = 1e-12);
        assert!(demand(&ds, 1.2).is_err());
        assert!(supply(&ds, f64::NAN).is_err());
    }

    #[test]
    fn godunov_flux_cases() {
        let ds = ds_half();
        assert_relative_eq!(godunov_flux(&ds, 0.4, 0.4), 0.12, max_relative = 1e-12);
        assert_relative_eq!(godunov_flux(&ds, 1.0, 0.0), 0.125, max_relative = 1e-12);
        assert_eq!(godunov_flux(&ds, 0.0, 1.0), 0.0);
    }

    fn junction_2to1(q: (f64, f64)) -> Junction {
        Junction {
            incoming: vec![1, 2],
            outgoing: vec![3],
            coupling: CouplingTag::TwoToOnePriority,
            distribution: None,
            priority: Some(vec![q.0, q.1]),
        }
    }

    fn junction_1to2(alpha: (f64, f64)) -> Junction {
        Junction {
            incoming: vec![1],
            outgoing: vec![2, 3],
            coupling: CouplingTag::OneToTwoDistribution,
            distribution: Some(vec![alpha.0, alpha.1]),
            priority: None,
        }
    }

    #[test]
    fn priority_merge_fluxes() {
        let j = junction_2to1((0.8, 0.2));
        let ds = vec![ds_half(); 2];
        let (fi, fo) = local_junction_fluxes(
            &j,
            &ds,
            &[ds_half()],
            &[0.4, 0.4],
            &[0.4],
            LocalVariant::Distribution,
        )
        .unwrap();
        assert_relative_eq!(fi[0], 0.1, max_relative = 1e-12);
        assert_relative_eq!(fi[1], 0.025, max_relative = 1e-12);
        assert_relative_eq!(fo[0], 0.125, max_relative = 1e-12);
        assert_eq!(fo[0], fi[0] + fi[1]);
    }

    #[test]
    fn distribution_split_fluxes() {
        let j = junction_1to2((0.5, 0.5));
        let (fi, fo) = local_junction_fluxes(
            &j,
            &[ds_half()],
            &[ds_half(); 2],
            &[0.4],
            &[0.4, 0.4],
            LocalVariant::Distribution,
        )
        .unwrap();
        assert_relative_eq!(fi[0], 0.12, max_relative = 1e-12);
        assert_relative_eq!(fo[0], 0.06, max_relative = 1e-12);
        assert_relative_eq!(fo[1], 0.06, max_relative = 1e-12);
    }

    #[test]
    fn maxflux_split_takes_each_branch_to_its_cap() {
        let j = junction_1to2((0.2, 0.8));
        // second branch congested: its supply is the binding constraint
        let (fi, fo) = local_junction_fluxes(
            &j,
            &[ds_half()],
            &[ds_half(); 2],
            &[0.4],
            &[0.4, 0.9],
            LocalVariant::Maxflux,
        )
        .unwrap();
        assert_relative_eq!(fo[0], 0.024, max_relative = 1e-12);
        assert_relative_eq!(fo[1], 0.045, max_relative = 1e-12);
        assert_relative_eq!(fi[0], 0.069, max_relative = 1e-12);
    }

    #[test]
    fn merge_maxflux_uses_leftover_capacity() {
        let j = junction_2to1((0.8, 0.2));
        // first road nearly empty: the second may exceed its priority share
        let ds = vec![ds_half(); 2];
        let (fi, fo) = local_junction_fluxes(
            &j,
            &ds,
            &[ds_half()],
            &[0.02, 0.5],
            &[0.0],
            LocalVariant::Maxflux,
        )
        .unwrap();
        let d1 = 0.02 * 0.5 * 0.98;
        assert_relative_eq!(fi[0], d1, max_relative = 1e-12);
        assert_relative_eq!(fi[1], 0.125 - d1, max_relative = 1e-12);
        assert_relative_eq!(fo[0], 0.125, max_relative = 1e-12);
    }

    #[test]
    fn uniform_free_road_is_steady() {
        use crate::network::Road;
        let net = Network {
            roads: vec![Road {
                id: 7,
                a: 0.0,
                b: 1.0,
                law: VelocityLaw {
                    v_max: 0.5,
                    rho_max: 1.0,
                },
                is_artificial: true,
            }],
            junctions: vec![],
        };
        let grid = GridSpec {
            dx: 0.1,
            n_eta: 1,
            cells: vec![10],
        };
        let mut engine = LocalEngine::new(&net, &grid, LocalVariant::Maxflux).unwrap();
        let state = State {
            time: 0.0,
            rho: vec![vec![0.4; 10]],
        };
        let mut fx = vec![vec![0.0; 11]];
        let mut log = RunLog::default();
        engine.fluxes(&state, &mut fx, &mut log);
        for f in &fx[0] {
            assert_relative_eq!(*f, 0.12, max_relative = 1e-12);
        }
    }
}

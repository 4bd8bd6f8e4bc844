//! Scenario files: the JSON description of a network, its discretization,
//! initial data and run parameters, and the assembly of a runnable scenario.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, State};
use crate::kernel::Kernel;
use crate::network::{
    validate_network, CouplingTag, Junction, Network, Road, VelocityLaw, Violation,
};

/// Solver and junction-rule selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    NonlocalMaxflux,
    NonlocalDistribution,
    LocalMaxflux,
    LocalDistribution,
    LimitMaxflux,
    LimitDistribution,
}

/// The two families of junction rules a model can mirror: maximum flux
/// through the vertex, or fluxes tied to fixed split/priority parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Maxflux,
    Distribution,
}

impl Model {
    pub fn family(self) -> ModelFamily {
        match self {
            Model::NonlocalMaxflux | Model::LocalMaxflux | Model::LimitMaxflux => {
                ModelFamily::Maxflux
            }
            Model::NonlocalDistribution | Model::LocalDistribution | Model::LimitDistribution => {
                ModelFamily::Distribution
            }
        }
    }

    pub const ALL: [Model; 6] = [
        Model::NonlocalMaxflux,
        Model::NonlocalDistribution,
        Model::LocalMaxflux,
        Model::LocalDistribution,
        Model::LimitMaxflux,
        Model::LimitDistribution,
    ];
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Model::NonlocalMaxflux => "nonlocal-maxflux",
            Model::NonlocalDistribution => "nonlocal-distribution",
            Model::LocalMaxflux => "local-maxflux",
            Model::LocalDistribution => "local-distribution",
            Model::LimitMaxflux => "limit",
            Model::LimitDistribution => "limit-distribution",
        };
        f.write_str(s)
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Model> {
        match s {
            "nonlocal-maxflux" => Ok(Model::NonlocalMaxflux),
            "nonlocal-distribution" => Ok(Model::NonlocalDistribution),
            "local-maxflux" => Ok(Model::LocalMaxflux),
            "local-distribution" => Ok(Model::LocalDistribution),
            "limit" | "limit-maxflux" => Ok(Model::LimitMaxflux),
            "limit-distribution" => Ok(Model::LimitDistribution),
            other => Err(Error::Config(format!(
                "unknown model {other:?}; use nonlocal-maxflux, nonlocal-distribution, \
                 local-maxflux, local-distribution or limit"
            ))),
        }
    }
}

impl Serialize for Model {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Model {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Model, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSpec {
    pub id: u32,
    pub length: f64,
    pub v_max: f64,
    pub rho_max: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub artificial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSpec {
    pub incoming: Vec<u32>,
    pub outgoing: Vec<u32>,
    /// Explicit coupling; left out, the junction follows the model family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<f64>>,
}

fn default_l_art() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dx: f64,
    /// Length given to artificial boundary roads.
    #[serde(default = "default_l_art")]
    pub l_art: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub road: u32,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPlan {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    /// Road whose downstream boundary counts as the network exit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outflow_road: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub roads: Vec<RoadSpec>,
    pub junctions: Vec<JunctionSpec>,
    pub kernel: Kernel,
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: Vec<InitialSpec>,
    pub model: Model,
    pub horizon: f64,
    #[serde(default)]
    pub outputs: OutputPlan,
}

impl ScenarioConfig {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(path.display().to_string(), e.to_string()))
}

pub fn save_scenario(path: impl AsRef<Path>, config: &ScenarioConfig) -> Result<()> {
    std::fs::write(path, config.to_json()?)?;
    Ok(())
}

/// The nine-road benchmark network: a chain that splits twice and merges
/// twice around a pair of alternative routes, with artificial boundary
/// roads feeding and draining it.
pub fn builtin_diamond() -> ScenarioConfig {
    let road = |id: u32, length: f64, v_max: f64, rho: f64, artificial: bool| {
        (
            RoadSpec {
                id,
                length,
                v_max,
                rho_max: 1.0,
                artificial,
            },
            InitialSpec {
                road: id,
                pieces: vec![Piece {
                    from: 0.0,
                    to: length,
                    rho,
                }],
            },
        )
    };
    let specs = [
        road(0, 2.0, 0.5, 0.4, true),
        road(1, 1.0, 0.5, 0.4, false),
        road(2, 1.0, 2.0, 0.4, false),
        road(3, 1.0, 2.0, 0.4, false),
        road(4, 1.0, 0.5, 0.8, false),
        road(5, 1.0, 2.0, 0.4, false),
        road(6, 1.0, 0.5, 0.8, false),
        road(7, 1.0, 1.0, 0.2, false),
        road(8, 2.0, 1.0, 0.2, true),
    ];
    let (roads, initial) = specs.into_iter().unzip();
    let j = |inc: &[u32], out: &[u32], d: Option<(f64, f64)>, p: Option<(f64, f64)>| JunctionSpec {
        incoming: inc.to_vec(),
        outgoing: out.to_vec(),
        coupling: None,
        distribution: d.map(|(a, b)| vec![a, b]),
        priority: p.map(|(a, b)| vec![a, b]),
    };
    ScenarioConfig {
        roads,
        junctions: vec![
            j(&[0], &[1], None, None),
            j(&[1], &[2, 3], Some((0.5, 0.5)), None),
            j(&[2], &[4, 5], Some((0.2, 0.8)), None),
            j(&[3, 4], &[6], None, Some((0.8, 0.2))),
            j(&[5, 6], &[7], None, Some((0.8, 0.2))),
            j(&[7], &[8], None, None),
        ],
        kernel: Kernel::LinearDecreasing { eta: 0.5 },
        grid: GridConfig {
            dx: 0.01,
            l_art: 2.0,
        },
        initial,
        model: Model::NonlocalMaxflux,
        horizon: 20.0,
        outputs: OutputPlan {
            snapshots: vec![],
            outflow_road: Some(7),
            dir: None,
        },
    }
}

fn resolve_tag(spec: &JunctionSpec, family: ModelFamily) -> CouplingTag {
    if let Some(tag) = spec.coupling {
        return tag;
    }
    match (spec.incoming.len(), spec.outgoing.len(), family) {
        (1, 2, ModelFamily::Maxflux) => CouplingTag::OneToTwoMaxflux,
        (1, 2, ModelFamily::Distribution) => CouplingTag::OneToTwoDistribution,
        (2, 1, ModelFamily::Maxflux) => CouplingTag::TwoToOneMaxflux,
        (2, 1, ModelFamily::Distribution) => CouplingTag::TwoToOnePriority,
        // 1-to-1 vertices; impossible shapes are flagged by validation
        _ => CouplingTag::OneToOne,
    }
}

fn effective_length(road: &RoadSpec, grid: &GridConfig) -> f64 {
    if road.artificial {
        grid.l_art
    } else {
        road.length
    }
}

/// Network described by a scenario, with junction rules resolved against
/// the model family.
pub fn build_network(config: &ScenarioConfig) -> Network {
    let roads = config
        .roads
        .iter()
        .map(|r| Road {
            id: r.id,
            a: 0.0,
            b: effective_length(r, &config.grid),
            law: VelocityLaw {
                v_max: r.v_max,
                rho_max: r.rho_max,
            },
            is_artificial: r.artificial,
        })
        .collect();
    let junctions = config
        .junctions
        .iter()
        .map(|spec| Junction {
            incoming: spec.incoming.clone(),
            outgoing: spec.outgoing.clone(),
            coupling: resolve_tag(spec, config.model.family()),
            distribution: spec.distribution.clone(),
            priority: spec.priority.clone(),
        })
        .collect();
    Network { roads, junctions }
}

fn push(out: &mut Vec<Violation>, code: &'static str, message: String) {
    out.push(Violation { code, message });
}

/// All configuration problems, including those of the network the scenario
/// describes. An empty list means the scenario can be built and run.
pub fn validate_scenario(config: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(config.horizon.is_finite() && config.horizon >= 0.0) {
        push(
            &mut out,
            "horizon",
            format!("horizon {} is not a nonnegative time", config.horizon),
        );
    }
    let dx = config.grid.dx;
    let grid_ok = dx.is_finite() && dx > 0.0;
    if !grid_ok {
        push(&mut out, "grid-step", format!("dx {dx} must be positive"));
    }
    if !(config.grid.l_art.is_finite() && config.grid.l_art > 0.0) {
        push(
            &mut out,
            "grid-step",
            format!("artificial road length {} must be positive", config.grid.l_art),
        );
    }
    let divides = |len: f64| {
        let ratio = len / dx;
        (ratio - ratio.round()).abs() <= 1e-6 * ratio.round().max(1.0)
    };
    if grid_ok {
        let eta = config.kernel.eta();
        if eta.is_finite() && eta > 0.0 && !divides(eta) {
            push(
                &mut out,
                "grid-step",
                format!("kernel range {eta} is not a whole number of cells of size {dx}"),
            );
        }
        for r in &config.roads {
            let len = effective_length(r, &config.grid);
            if len.is_finite() && len > 0.0 && !divides(len) {
                push(
                    &mut out,
                    "grid-step",
                    format!("road {}: length {len} is not a whole number of cells", r.id),
                );
            }
        }
    }
    for init in &config.initial {
        let Some(road) = config.roads.iter().find(|r| r.id == init.road) else {
            push(
                &mut out,
                "initial-road",
                format!("initial data for unknown road {}", init.road),
            );
            continue;
        };
        for p in &init.pieces {
            if !(p.from.is_finite() && p.to.is_finite() && p.from < p.to) {
                push(
                    &mut out,
                    "initial-range",
                    format!("road {}: piece [{}, {}) is empty", init.road, p.from, p.to),
                );
            }
            if !(p.rho.is_finite() && (0.0..=road.rho_max).contains(&p.rho)) {
                push(
                    &mut out,
                    "initial-density",
                    format!(
                        "road {}: density {} outside [0, {}]",
                        init.road, p.rho, road.rho_max
                    ),
                );
            }
        }
    }
    if let Some(id) = config.outputs.outflow_road {
        if !config.roads.iter().any(|r| r.id == id) {
            push(
                &mut out,
                "outflow-road",
                format!("outflow road {id} does not exist"),
            );
        }
    }
    let net = build_network(config);
    out.extend(validate_network(&net, config.kernel.eta()));
    out
}

/// A validated, runnable scenario: the network, its grid, and the sampled
/// initial state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub net: Network,
    pub grid: GridSpec,
    pub initial: State,
    /// Index of the road whose boundary outflux is the network outflow.
    pub outflow_road: Option<usize>,
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Scenario> {
        let violations = validate_scenario(&config);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        let net = build_network(&config);
        let n_eta = (config.kernel.eta() / config.grid.dx).round() as usize;
        let grid = GridSpec::build(&net, config.grid.dx, n_eta)?;
        let initial = sample_initial(&config, &net, &grid);
        let outflow_road = resolve_outflow(&config, &net);
        Ok(Scenario {
            config,
            net,
            grid,
            initial,
            outflow_road,
        })
    }
}

fn sample_initial(config: &ScenarioConfig, net: &Network, grid: &GridSpec) -> State {
    let index = net.road_index();
    let mut state = State::zero(grid);
    for init in &config.initial {
        let ri = index[&init.road];
        for (i, cell) in state.rho[ri].iter_mut().enumerate() {
            let x = grid.center(i);
            for p in &init.pieces {
                if p.from <= x && x < p.to {
                    *cell = p.rho;
                }
            }
        }
    }
    state
}

fn resolve_outflow(config: &ScenarioConfig, net: &Network) -> Option<usize> {
    let index = net.road_index();
    if let Some(id) = config.outputs.outflow_road {
        return Some(index[&id]);
    }
    let is_artificial = |id: u32| net.roads[index[&id]].is_artificial;
    // a single real road draining into purely artificial roads, or failing
    // that, a single real road with an open downstream end
    let drains: Vec<usize> = net
        .roads
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_artificial)
        .filter(|(_, r)| {
            net.junctions
                .iter()
                .any(|j| j.incoming.contains(&r.id) && j.outgoing.iter().all(|&o| is_artificial(o)))
        })
        .map(|(i, _)| i)
        .collect();
    if drains.len() == 1 {
        return Some(drains[0]);
    }
    let open: Vec<usize> = net
        .roads
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_artificial)
        .filter(|(_, r)| !net.junctions.iter().any(|j| j.incoming.contains(&r.id)))
        .map(|(i, _)| i)
        .collect();
    if open.len() == 1 {
        return Some(open[0]);
    }
    None
}

//! Road-network data model: velocity laws, roads, junctions, and validation
//! of the modeling assumptions.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine velocity law `v(rho) = v_max * (1 - rho / rho_max)`.
///
/// The family is fixed so that the norms `||v||` and `||v'||` entering the
/// time-step bound are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityLaw {
    pub v_max: f64,
    pub rho_max: f64,
}

impl VelocityLaw {
    /// Unchecked evaluation. Solver internals call this on densities that
    /// stay inside `[0, rho_max]` up to the scheme's rounding slack.
    #[inline]
    pub(crate) fn v(&self, rho: f64) -> f64 {
        self.v_max * (1.0 - rho / self.rho_max)
    }

    /// `|v'|`, constant for the affine family.
    #[inline]
    pub fn dv_abs(&self) -> f64 {
        self.v_max / self.rho_max
    }
}

/// Velocity at the given density, with a domain check.
pub fn eval_velocity(law: &VelocityLaw, rho: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho <= law.rho_max) {
        return Err(Error::Domain(format!(
            "density {rho} outside [0, {}]",
            law.rho_max
        )));
    }
    Ok(law.v(rho))
}

/// A directed road segment. Artificial roads stand in for half-infinite
/// feeders and sinks; they exist so that no boundary condition has to be
/// posed at a vertex, and `b` is a configurable truncation of infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: u32,
    pub a: f64,
    pub b: f64,
    pub law: VelocityLaw,
    pub is_artificial: bool,
}

impl Road {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Coupling rule attached to a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingTag {
    OneToOne,
    OneToTwoMaxflux,
    OneToTwoDistribution,
    TwoToOneMaxflux,
    TwoToOnePriority,
}

impl CouplingTag {
    /// (incoming, outgoing) road counts this rule applies to.
    pub fn arity(self) -> (usize, usize) {
        match self {
            CouplingTag::OneToOne => (1, 1),
            CouplingTag::OneToTwoMaxflux | CouplingTag::OneToTwoDistribution => (1, 2),
            CouplingTag::TwoToOneMaxflux | CouplingTag::TwoToOnePriority => (2, 1),
        }
    }
}

impl fmt::Display for CouplingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CouplingTag::OneToOne => "one_to_one",
            CouplingTag::OneToTwoMaxflux => "one_to_two_maxflux",
            CouplingTag::OneToTwoDistribution => "one_to_two_distribution",
            CouplingTag::TwoToOneMaxflux => "two_to_one_maxflux",
            CouplingTag::TwoToOnePriority => "two_to_one_priority",
        };
        f.write_str(s)
    }
}

/// A vertex joining up to two incoming and up to two outgoing roads, with
/// `incoming.len() * outgoing.len() <= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub incoming: Vec<u32>,
    pub outgoing: Vec<u32>,
    pub coupling: CouplingTag,
    /// Split fractions onto the outgoing roads; present exactly when there
    /// are two of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
    /// Merge priorities of the incoming roads; present exactly when there
    /// are two of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub roads: Vec<Road>,
    pub junctions: Vec<Junction>,
}

impl Network {
    pub fn road_index(&self) -> HashMap<u32, usize> {
        self.roads
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id, i))
            .collect()
    }
}

/// A broken modeling assumption. Violations are data: validation collects
/// every one of them instead of failing on the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    fn new(code: &'static str, message: String) -> Self {
        Violation { code, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

const SUM_TOL: f64 = 1e-9;

/// Check every modeling assumption of the network against the kernel range
/// `eta`. Returns an empty list exactly when the network is usable.
pub fn validate_network(net: &Network, eta: f64) -> Vec<Violation> {
    let mut out = Vec::new();

    if !(eta > 0.0) || !eta.is_finite() {
        out.push(Violation::new(
            "kernel-range",
            format!("eta must be positive and finite, got {eta}"),
        ));
    }

    let mut seen = HashMap::new();
    for (i, road) in net.roads.iter().enumerate() {
        if let Some(prev) = seen.insert(road.id, i) {
            out.push(Violation::new(
                "duplicate-id",
                format!("road id {} used at positions {prev} and {i}", road.id),
            ));
        }
        let law = road.law;
        if !(law.v_max > 0.0) || !law.v_max.is_finite() {
            out.push(Violation::new(
                "velocity-law",
                format!("road {}: v_max must be positive, got {}", road.id, law.v_max),
            ));
        }
        if !(law.rho_max > 0.0) || !law.rho_max.is_finite() {
            out.push(Violation::new(
                "velocity-law",
                format!(
                    "road {}: rho_max must be positive, got {}",
                    road.id, law.rho_max
                ),
            ));
        }
        if !(road.b > road.a) {
            out.push(Violation::new(
                "road-extent",
                format!("road {}: b = {} must exceed a = {}", road.id, road.b, road.a),
            ));
        } else if !road.is_artificial && eta >= road.length() {
            out.push(Violation::new(
                "kernel-exceeds-road",
                format!(
                    "road {}: kernel range {eta} must be shorter than the road ({})",
                    road.id,
                    road.length()
                ),
            ));
        }
    }

    let index = net.road_index();
    // appearances of each road id on the incoming / outgoing side of vertices
    let mut in_count: HashMap<u32, usize> = HashMap::new();
    let mut out_count: HashMap<u32, usize> = HashMap::new();

    for (j, junction) in net.junctions.iter().enumerate() {
        let m = junction.incoming.len();
        let n = junction.outgoing.len();
        if !(1..=2).contains(&m) || !(1..=2).contains(&n) || m * n > 2 {
            out.push(Violation::new(
                "junction-shape",
                format!("junction {j}: {m}-to-{n} vertices are not supported"),
            ));
        }
        let mut local = HashMap::new();
        for &id in junction.incoming.iter().chain(&junction.outgoing) {
            if !index.contains_key(&id) {
                out.push(Violation::new(
                    "unknown-road",
                    format!("junction {j}: road {id} does not exist"),
                ));
            }
            if local.insert(id, ()).is_some() {
                out.push(Violation::new(
                    "repeated-road",
                    format!("junction {j}: road {id} appears twice"),
                ));
            }
        }
        for &id in &junction.incoming {
            *in_count.entry(id).or_default() += 1;
        }
        for &id in &junction.outgoing {
            *out_count.entry(id).or_default() += 1;
        }

        if junction.coupling.arity() != (m, n) {
            out.push(Violation::new(
                "coupling-arity",
                format!(
                    "junction {j}: coupling {} does not fit a {m}-to-{n} vertex",
                    junction.coupling
                ),
            ));
        }

        match (&junction.distribution, n) {
            (Some(alpha), 2) => {
                if alpha.len() != 2 {
                    out.push(Violation::new(
                        "distribution-row",
                        format!("junction {j}: expected 2 split fractions, got {}", alpha.len()),
                    ));
                } else {
                    if alpha.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
                        out.push(Violation::new(
                            "distribution-row",
                            format!("junction {j}: split fractions {alpha:?} outside [0, 1]"),
                        ));
                    }
                    if (alpha.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
                        out.push(Violation::new(
                            "distribution-row",
                            format!("junction {j}: split fractions {alpha:?} do not sum to 1"),
                        ));
                    }
                    if junction.coupling == CouplingTag::OneToTwoDistribution
                        && alpha.iter().any(|&a| a <= 0.0)
                    {
                        out.push(Violation::new(
                            "distribution-zero",
                            format!(
                                "junction {j}: the exact-distribution rule divides by the split fractions, so they must be positive"
                            ),
                        ));
                    }
                }
            }
            (Some(_), _) => out.push(Violation::new(
                "distribution-unexpected",
                format!("junction {j}: split fractions given but there is one outgoing road"),
            )),
            (None, 2) => out.push(Violation::new(
                "distribution-missing",
                format!("junction {j}: two outgoing roads need split fractions"),
            )),
            (None, _) => {}
        }

        match (&junction.priority, m) {
            (Some(q), 2) => {
                if q.len() != 2 {
                    out.push(Violation::new(
                        "priority-vector",
                        format!("junction {j}: expected 2 priorities, got {}", q.len()),
                    ));
                } else {
                    if q.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                        out.push(Violation::new(
                            "priority-vector",
                            format!("junction {j}: priorities {q:?} must lie strictly inside (0, 1)"),
                        ));
                    }
                    if (q.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
                        out.push(Violation::new(
                            "priority-vector",
                            format!("junction {j}: priorities {q:?} do not sum to 1"),
                        ));
                    }
                }
            }
            (Some(_), _) => out.push(Violation::new(
                "priority-unexpected",
                format!("junction {j}: priorities given but there is one incoming road"),
            )),
            (None, 2) => out.push(Violation::new(
                "priority-missing",
                format!("junction {j}: two incoming roads need priorities"),
            )),
            (None, _) => {}
        }
    }

    for road in &net.roads {
        let inc = in_count.get(&road.id).copied().unwrap_or(0);
        let outc = out_count.get(&road.id).copied().unwrap_or(0);
        if inc > 1 || outc > 1 {
            out.push(Violation::new(
                "road-degree",
                format!(
                    "road {}: attached to {inc} vertices downstream and {outc} upstream; at most one each",
                    road.id
                ),
            ));
        }
        if !net.junctions.is_empty() && !road.is_artificial && !(inc == 1 && outc == 1) {
            let touches_artificial = net.junctions.iter().any(|j| {
                let here = j.incoming.contains(&road.id) || j.outgoing.contains(&road.id);
                here && j
                    .incoming
                    .iter()
                    .chain(&j.outgoing)
                    .any(|id| index.get(id).is_some_and(|&k| net.roads[k].is_artificial))
            });
            if !touches_artificial {
                out.push(Violation::new(
                    "dangling-road",
                    format!(
                        "road {}: both ends must meet a vertex unless the road borders an artificial one",
                        road.id
                    ),
                ));
            }
        }
    }

    if net.roads.len() > 1 {
        // roads are connected when they share a vertex
        let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
        for junction in &net.junctions {
            let ids: Vec<u32> = junction
                .incoming
                .iter()
                .chain(&junction.outgoing)
                .copied()
                .collect();
            for &a in &ids {
                for &b in &ids {
                    if a != b {
                        adj.entry(a).or_default().push(b);
                    }
                }
            }
        }
        let mut visited = HashMap::new();
        let mut stack = vec![net.roads[0].id];
        while let Some(id) = stack.pop() {
            if visited.insert(id, ()).is_none() {
                if let Some(next) = adj.get(&id) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        if net.roads.iter().any(|r| !visited.contains_key(&r.id)) {
            out.push(Violation::new(
                "disconnected",
                "the road graph is not connected".to_string(),
            ));
        }
    }

    out
}

/// Per-road vertex attachment, resolved from road ids to indices.
#[derive(Debug, Clone)]
pub struct Topology {
    pub index_of: HashMap<u32, usize>,
    /// Junction index at each road's upstream end (the road leaves it).
    pub upstream: Vec<Option<usize>>,
    /// Junction index at each road's downstream end (the road feeds it).
    pub downstream: Vec<Option<usize>>,
}

impl Topology {
    pub fn build(net: &Network) -> Result<Topology> {
        let index_of = net.road_index();
        let mut upstream = vec![None; net.roads.len()];
        let mut downstream = vec![None; net.roads.len()];
        for (j, junction) in net.junctions.iter().enumerate() {
            for &id in &junction.incoming {
                let &r = index_of
                    .get(&id)
                    .ok_or_else(|| Error::Config(format!("junction {j}: unknown road {id}")))?;
                if downstream[r].replace(j).is_some() {
                    return Err(Error::Config(format!(
                        "road {id} feeds more than one vertex"
                    )));
                }
            }
            for &id in &junction.outgoing {
                let &r = index_of
                    .get(&id)
                    .ok_or_else(|| Error::Config(format!("junction {j}: unknown road {id}")))?;
                if upstream[r].replace(j).is_some() {
                    return Err(Error::Config(format!(
                        "road {id} leaves more than one vertex"
                    )));
                }
            }
        }
        Ok(Topology {
            index_of,
            upstream,
            downstream,
        })
    }
}

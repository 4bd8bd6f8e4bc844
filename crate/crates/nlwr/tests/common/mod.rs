//! Builders shared by the integration suites.

#![allow(dead_code)]

use nlwr::kernel::Kernel;
use nlwr::network::CouplingTag;
use nlwr::scenario::{
    GridConfig, InitialSpec, JunctionSpec, Model, OutputPlan, Piece, RoadSpec, ScenarioConfig,
};
use nlwr::scheme::{CflMode, Trajectory};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn road(id: u32, length: f64, v_max: f64, rho_max: f64) -> RoadSpec {
    RoadSpec {
        id,
        length,
        v_max,
        rho_max,
        artificial: false,
    }
}

pub fn uniform(road: u32, to: f64, rho: f64) -> InitialSpec {
    InitialSpec {
        road,
        pieces: vec![Piece {
            from: 0.0,
            to,
            rho,
        }],
    }
}

/// `|mass change - time integral of the boundary flux balance|` over a full
/// run, with junction interfaces left to cancel internally.
pub fn conservation_residual(traj: &Trajectory) -> f64 {
    let Some(first) = traj.steps.first() else {
        return 0.0;
    };
    let initial: f64 = first.mass.iter().sum();
    let last = traj.final_state.total_mass(traj.dx);
    let mut boundary = 0.0;
    for step in &traj.steps {
        let mut net = 0.0;
        for (r, meta) in traj.roads.iter().enumerate() {
            if meta.upstream.is_none() {
                net += step.influx[r];
            }
            if meta.downstream.is_none() {
                net -= step.outflux[r];
            }
        }
        boundary += step.dt * net;
    }
    ((last - initial) - boundary).abs()
}

pub struct Trial {
    pub config: ScenarioConfig,
    pub mode: CflMode,
    pub tag: CouplingTag,
}

const TAGS: [CouplingTag; 5] = [
    CouplingTag::OneToOne,
    CouplingTag::OneToTwoMaxflux,
    CouplingTag::OneToTwoDistribution,
    CouplingTag::TwoToOneMaxflux,
    CouplingTag::TwoToOnePriority,
];

/// Single-junction scenario with randomized geometry, laws, and initial data.
/// The coupling and the CFL mode cycle deterministically with the seed so a
/// batch covers every combination.
pub fn random_junction_trial(seed: u64) -> Trial {
    let tag = TAGS[(seed % 5) as usize];
    let mode = if (seed / 5) % 2 == 0 {
        CflMode::Strict
    } else {
        CflMode::Relaxed
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6c_7772 ^ seed);
    let dx = 0.05;

    let (n_in, n_out) = match tag {
        CouplingTag::OneToOne => (1, 1),
        CouplingTag::OneToTwoMaxflux | CouplingTag::OneToTwoDistribution => (1, 2),
        CouplingTag::TwoToOneMaxflux | CouplingTag::TwoToOnePriority => (2, 1),
    };

    let mut roads = Vec::new();
    let mut initial = Vec::new();
    for id in 1..=(n_in + n_out) as u32 {
        let cells = rng.random_range(12..=30);
        let length = cells as f64 * dx;
        let rho_max = rng.random_range(0.5..1.5);
        roads.push(road(id, length, rng.random_range(0.3..2.5), rho_max));

        let cuts = rng.random_range(1..=3);
        let mut from = 0.0;
        let mut pieces = Vec::new();
        for p in 0..cuts {
            let to = if p == cuts - 1 {
                length
            } else {
                rng.random_range(from..length)
            };
            let rho = match rng.random_range(0..10) {
                0 => 0.0,
                1 => rho_max,
                _ => rng.random_range(0.0..rho_max),
            };
            pieces.push(Piece { from, to, rho });
            from = to;
        }
        initial.push(InitialSpec {
            road: id,
            pieces,
        });
    }

    // Free outer ends are only allowed next to an artificial road; one per
    // junction is enough.
    roads[0].artificial = true;
    let l_art = roads[0].length;

    let split = rng.random_range(0.1..0.9);
    let junction = JunctionSpec {
        incoming: (1..=n_in as u32).collect(),
        outgoing: (n_in as u32 + 1..=(n_in + n_out) as u32).collect(),
        coupling: Some(tag),
        distribution: (n_out == 2).then(|| vec![split, 1.0 - split]),
        priority: (n_in == 2).then(|| vec![split, 1.0 - split]),
    };

    Trial {
        config: ScenarioConfig {
            roads,
            junctions: vec![junction],
            kernel: Kernel::LinearDecreasing {
                eta: rng.random_range(2..=8) as f64 * dx,
            },
            grid: GridConfig { dx, l_art },
            initial,
            model: Model::NonlocalMaxflux,
            horizon: 2.0,
            outputs: OutputPlan::default(),
        },
        mode,
        tag,
    }
}

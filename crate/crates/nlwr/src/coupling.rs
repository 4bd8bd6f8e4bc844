//! Vertex couplings for the nonlocal model.
//!
//! Each function gives the flux contribution of one incoming road's cell
//! inside the transition area ahead of a vertex. The speeds `v` are the
//! look-ahead velocities of the outgoing roads evaluated at that cell's
//! window position, so the same formulas serve every cell of the transition
//! area as well as the vertex interface itself.

/// Single outgoing road: pass what fits under its capacity.
pub fn coupling_one_to_one(rho_cell: f64, rho_max_out: f64, v_out: f64) -> f64 {
    rho_cell.min(rho_max_out) * v_out
}

/// Two outgoing roads, maximum-flow rule: each branch takes its share of
/// the traffic up to its own capacity, independently.
pub fn coupling_one_to_two_maxflux(
    rho_cell: f64,
    alpha: (f64, f64),
    rho_max: (f64, f64),
    v: (f64, f64),
) -> f64 {
    (alpha.0 * rho_cell).min(rho_max.0) * v.0 + (alpha.1 * rho_cell).min(rho_max.1) * v.1
}

/// Two outgoing roads, exact-distribution rule: the total flux is throttled
/// so that the prescribed split is honored even when one branch clogs.
/// Requires positive split fractions.
pub fn coupling_one_to_two_distribution(
    rho_cell: f64,
    alpha: (f64, f64),
    rho_max: (f64, f64),
    v: (f64, f64),
) -> f64 {
    (rho_cell * (alpha.0 * v.0 + alpha.1 * v.1))
        .min(rho_max.0 * v.0 / alpha.0)
        .min(rho_max.1 * v.1 / alpha.1)
}

/// Two incoming roads, maximum-flow rule, seen from one of them: take the
/// guaranteed share of the outgoing capacity, or whatever the other road
/// leaves free, whichever is larger. `rho_other_boundary` is the companion
/// road's density at its last cell before the vertex.
pub fn coupling_two_to_one_maxflux(
    rho_cell: f64,
    rho_other_boundary: f64,
    q_self: f64,
    rho_max_out: f64,
    v_out: f64,
) -> f64 {
    rho_cell
        .min((q_self * rho_max_out).max(rho_max_out - rho_other_boundary))
        * v_out
}

/// Two incoming roads, priority rule, seen from one of them: the merge
/// always honors the priority split, pacing each road against the other's
/// boundary density. Degenerates to zero flux when the companion boundary
/// is empty.
pub fn coupling_two_to_one_priority(
    rho_cell: f64,
    rho_other_boundary: f64,
    q_self: f64,
    q_other: f64,
    rho_max_out: f64,
    v_out: f64,
) -> f64 {
    rho_cell
        .min(q_self * rho_max_out)
        .min(q_self / q_other * rho_other_boundary)
        * v_out
}

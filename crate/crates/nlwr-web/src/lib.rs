//! Browser bindings: a handful of solver entry points exported through
//! wasm-bindgen for the static demo page in `www/`.

use nlwr::kernel::{gamma_weights, Kernel};
use nlwr::limit::riemann_limit_1to1;
use nlwr::measures::report;
use nlwr::scenario::{builtin_diamond, Scenario};
use nlwr::scheme::{simulate, CflMode};
use nlwr::{Error, Result};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn riemann_samples(
    rho_l: f64,
    rho_r: f64,
    rho_max2: f64,
    v2: f64,
    t: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<Vec<f64>> {
    if points < 2 || !(x_max > x_min) {
        return Err(Error::Config(format!(
            "need at least two sample points and x_max > x_min, got {points} on [{x_min}, {x_max}]"
        )));
    }
    let step = (x_max - x_min) / (points - 1) as f64;
    (0..points)
        .map(|i| riemann_limit_1to1(rho_l, rho_r, rho_max2, v2, t, x_min + i as f64 * step))
        .collect()
}

fn weights(family: &str, eta: f64, dx: f64) -> Result<Vec<f64>> {
    let kernel = match family {
        "linear-decreasing" => Kernel::LinearDecreasing { eta },
        "constant" => Kernel::Constant { eta },
        other => {
            return Err(Error::Config(format!(
                "unknown kernel family {other:?}; use linear-decreasing or constant"
            )))
        }
    };
    Ok(gamma_weights(&kernel, dx)?.gamma)
}

fn diamond_json(model: &str, eta: f64, dx: f64, horizon: f64) -> Result<String> {
    let mut config = builtin_diamond();
    config.model = model.parse()?;
    config.kernel = config.kernel.with_eta(eta);
    config.grid.dx = dx;
    config.horizon = horizon;
    let sc = Scenario::build(config)?;
    let traj = simulate(&sc, CflMode::Adaptive)?;
    let rep = report(&traj);
    let roads: Vec<_> = traj
        .roads
        .iter()
        .enumerate()
        .map(|(r, meta)| {
            json!({
                "id": meta.id,
                "artificial": meta.artificial,
                "v_max": meta.v_max,
                "rho_max": meta.rho_max,
                "rho": traj.final_state.rho[r],
            })
        })
        .collect();
    Ok(json!({
        "dx": traj.dx,
        "steps": traj.steps.len(),
        "measures": {
            "outflow": rep.outflow,
            "total_travel_time": rep.total_travel_time,
            "congestion": rep.congestion,
        },
        "roads": roads,
    })
    .to_string())
}

/// Exact limit-model solution of a 1-to-1 Riemann problem, sampled on an
/// even grid from `x_min` to `x_max`.
#[wasm_bindgen]
pub fn riemann_profile(
    rho_l: f64,
    rho_r: f64,
    rho_max2: f64,
    v2: f64,
    t: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    Ok(riemann_samples(
        rho_l, rho_r, rho_max2, v2, t, x_min, x_max, points,
    )?)
}

/// Per-cell quadrature weights of a look-ahead kernel.
#[wasm_bindgen]
pub fn kernel_weights(family: &str, eta: f64, dx: f64) -> std::result::Result<Vec<f64>, JsError> {
    Ok(weights(family, eta, dx)?)
}

/// Run the built-in benchmark network and return measures plus the final
/// density of every road, as JSON.
#[wasm_bindgen]
pub fn diamond_run(
    model: &str,
    eta: f64,
    dx: f64,
    horizon: f64,
) -> std::result::Result<String, JsError> {
    Ok(diamond_json(model, eta, dx, horizon)?)
}

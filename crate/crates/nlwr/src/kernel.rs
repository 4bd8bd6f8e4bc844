//! Look-ahead kernels and their exact per-cell integrals.
//!
//! The discrete velocities weight downstream cells with
//! `gamma_k = integral of omega over [k dx, (k+1) dx]`. The weights are
//! computed from closed-form antiderivatives, not numerical quadrature, so
//! that their unit sum and monotonicity survive in floating point; the
//! stability analysis of the scheme leans on both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight function with support `[0, eta]`, nonincreasing and of unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Kernel {
    /// `omega(x) = 2 (eta - x) / eta^2`.
    LinearDecreasing { eta: f64 },
    /// `omega(x) = 1 / eta`.
    Constant { eta: f64 },
    /// Piecewise-linear tabulation `(x, omega(x))` on `[0, eta]`. Must be
    /// nonincreasing; renormalized to unit mass, with a warning when the
    /// tabulated mass is off by more than 1e-9.
    TabulatedPiecewiseLinear { eta: f64, points: Vec<(f64, f64)> },
}

impl Kernel {
    pub fn eta(&self) -> f64 {
        match *self {
            Kernel::LinearDecreasing { eta }
            | Kernel::Constant { eta }
            | Kernel::TabulatedPiecewiseLinear { eta, .. } => eta,
        }
    }

    /// The same kernel shape stretched to a new range. Tabulated kernels are
    /// rescaled in x and compensated in height so the mass is unchanged.
    pub fn with_eta(&self, eta: f64) -> Kernel {
        match self {
            Kernel::LinearDecreasing { .. } => Kernel::LinearDecreasing { eta },
            Kernel::Constant { .. } => Kernel::Constant { eta },
            Kernel::TabulatedPiecewiseLinear { eta: old, points } => {
                let scale = eta / old;
                Kernel::TabulatedPiecewiseLinear {
                    eta,
                    points: points.iter().map(|&(x, w)| (x * scale, w / scale)).collect(),
                }
            }
        }
    }
}

/// Exact kernel integrals over the grid cells of one look-ahead window.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    pub gamma: Vec<f64>,
    pub dx: f64,
    pub n_eta: usize,
}

impl QuadratureWeights {
    pub fn eta(&self) -> f64 {
        self.n_eta as f64 * self.dx
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma[0]
    }
}

/// Integrate the kernel over each cell of the window. The kernel range must
/// be an integer number of cells.
pub fn gamma_weights(kernel: &Kernel, dx: f64) -> Result<QuadratureWeights> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::Config(format!("dx must be positive, got {dx}")));
    }
    let eta = kernel.eta();
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Config(format!(
            "kernel range must be positive, got {eta}"
        )));
    }
    let ratio = eta / dx;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Config(format!(
            "kernel range {eta} is not an integer multiple of dx = {dx}"
        )));
    }
    let n_eta = rounded as usize;

    let gamma = match kernel {
        Kernel::LinearDecreasing { .. } => {
            let mass_below = |x: f64| (2.0 * eta * x - x * x) / (eta * eta);
            (0..n_eta)
                .map(|k| mass_below((k + 1) as f64 * dx) - mass_below(k as f64 * dx))
                .collect()
        }
        Kernel::Constant { .. } => vec![1.0 / n_eta as f64; n_eta],
        Kernel::TabulatedPiecewiseLinear { points, .. } => {
            tabulated_gamma(points, eta, dx, n_eta)?
        }
    };

    Ok(QuadratureWeights { gamma, dx, n_eta })
}

fn tabulated_gamma(points: &[(f64, f64)], eta: f64, dx: f64, n_eta: usize) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::Config(
            "tabulated kernel needs at least two points".to_string(),
        ));
    }
    let tol = 1e-9 * eta;
    if points[0].0.abs() > tol {
        return Err(Error::Config(format!(
            "tabulated kernel must start at x = 0, got {}",
            points[0].0
        )));
    }
    if (points[points.len() - 1].0 - eta).abs() > tol {
        return Err(Error::Config(format!(
            "tabulated kernel must end at x = eta = {eta}, got {}",
            points[points.len() - 1].0
        )));
    }
    for pair in points.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::Config(
                "tabulated kernel abscissas must be strictly increasing".to_string(),
            ));
        }
        if pair[1].1 > pair[0].1 + 1e-12 * pair[0].1.abs().max(1.0) {
            return Err(Error::Config(
                "tabulated kernel must be nonincreasing".to_string(),
            ));
        }
    }
    if points.iter().any(|&(_, w)| w < 0.0 || !w.is_finite()) {
        return Err(Error::Config(
            "tabulated kernel values must be finite and nonnegative".to_string(),
        ));
    }

    // exact integral of the piecewise-linear interpolant over each cell
    let value_at = |x: f64| -> f64 {
        match points.iter().position(|&(px, _)| px >= x) {
            Some(0) => points[0].1,
            Some(i) => {
                let (x0, w0) = points[i - 1];
                let (x1, w1) = points[i];
                w0 + (w1 - w0) * (x - x0) / (x1 - x0)
            }
            None => points[points.len() - 1].1,
        }
    };
    let mut gamma = vec![0.0; n_eta];
    for (k, slot) in gamma.iter_mut().enumerate() {
        let lo = k as f64 * dx;
        let hi = ((k + 1) as f64 * dx).min(eta);
        let mut acc = 0.0;
        // break the cell at every tabulation point inside it
        let mut cut = lo;
        for &(px, _) in points.iter().filter(|&&(px, _)| px > lo && px < hi) {
            acc += (px - cut) * 0.5 * (value_at(cut) + value_at(px));
            cut = px;
        }
        acc += (hi - cut) * 0.5 * (value_at(cut) + value_at(hi));
        *slot = acc;
    }

    let mass: f64 = gamma.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Config(
            "tabulated kernel must have positive mass".to_string(),
        ));
    }
    if (mass - 1.0).abs() > 1e-9 {
        log::warn!("tabulated kernel mass is {mass}; renormalizing to 1");
    }
    for g in &mut gamma {
        *g /= mass;
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_kernel_splits_evenly() {
        let w = gamma_weights(&Kernel::Constant { eta: 1.0 }, 0.25).unwrap();
        assert_eq!(w.n_eta, 4);
        assert_eq!(w.gamma, vec![0.25; 4]);
    }

    #[test]
    fn linear_kernel_two_cells() {
        let w = gamma_weights(&Kernel::LinearDecreasing { eta: 0.5 }, 0.25).unwrap();
        assert_eq!(w.gamma, vec![0.75, 0.25]);
    }

    #[test]
    fn linear_kernel_fine_grid() {
        let w = gamma_weights(&Kernel::LinearDecreasing { eta: 0.5 }, 0.01).unwrap();
        assert_eq!(w.n_eta, 50);
        assert_relative_eq!(w.gamma0(), 0.0396, max_relative = 1e-12);
        assert_relative_eq!(w.gamma.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for pair in w.gamma.windows(2) {
            assert!(pair[1] <= pair[0] && pair[1] >= 0.0);
        }
    }

    #[test]
    fn non_integer_window_is_rejected() {
        assert!(gamma_weights(&Kernel::LinearDecreasing { eta: 0.5 }, 0.03).is_err());
        assert!(gamma_weights(&Kernel::Constant { eta: 0.7 }, 0.75).is_err());
    }

    #[test]
    fn tabulated_linear_matches_closed_form() {
        let eta = 0.5;
        let tab = Kernel::TabulatedPiecewiseLinear {
            eta,
            points: vec![(0.0, 2.0 / eta), (eta, 0.0)],
        };
        // omega(0) = 2/eta = 4 for eta = 0.5
        let wt = gamma_weights(&tab, 0.01).unwrap();
        let wl = gamma_weights(&Kernel::LinearDecreasing { eta }, 0.01).unwrap();
        for (a, b) in wt.gamma.iter().zip(&wl.gamma) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn tabulated_must_be_nonincreasing() {
        let bad = Kernel::TabulatedPiecewiseLinear {
            eta: 1.0,
            points: vec![(0.0, 0.5), (0.5, 2.0), (1.0, 0.0)],
        };
        assert!(gamma_weights(&bad, 0.25).is_err());
    }

    #[test]
    fn stretching_a_tabulated_kernel_keeps_its_mass() {
        let tab = Kernel::TabulatedPiecewiseLinear {
            eta: 1.0,
            points: vec![(0.0, 1.5), (0.4, 1.0), (1.0, 0.25)],
        };
        let w1 = gamma_weights(&tab, 0.1).unwrap();
        let w2 = gamma_weights(&tab.with_eta(2.0), 0.2).unwrap();
        assert_eq!(w1.gamma.len(), w2.gamma.len());
        for (a, b) in w1.gamma.iter().zip(&w2.gamma) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
}

//! One-dimensional Coulomb machinery for neutral charge profiles.
//!
//! For a charge difference `f` with `∫f = 0`:
//!
//! ```text
//! W_f(x) = ∫_{−∞}^x f,    D₁(f) = 4π ∫ W_f²,    Φ_f(x) = −4π ∫_0^x W_f
//! ```
//!
//! so that `−Φ_f'' = 4πf`, `Φ_f' → 0` at both ends and `Φ_f(0) = 0`.
//! All integrals use the cumulative trapezoidal rule on the grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid1d::GridFunction;

/// Relative neutrality tolerance `|∫f| ≤ NEUTRALITY_TOL · ‖f‖₁`.
pub const NEUTRALITY_TOL: f64 = 1e-8;

/// A charge difference with zero total charge.
#[derive(Clone, Debug, PartialEq)]
pub struct NeutralCharge {
    f: GridFunction,
}

impl NeutralCharge {
    /// Checks neutrality, then subtracts the mean so the discrete integral
    /// vanishes to rounding and `W_f` returns to zero at the right end.
    pub fn new(f: GridFunction) -> Result<Self> {
        Self::with_scale(f, 0.0)
    }

    /// Like [`NeutralCharge::new`], with tolerance `NEUTRALITY_TOL · max(‖f‖₁, scale)`.
    ///
    /// Useful for `ρ − μ` close to zero, where `‖f‖₁` alone would demand
    /// cancellation below rounding level of `ρ` and `μ`.
    pub fn with_scale(f: GridFunction, scale: f64) -> Result<Self> {
        let integral = f.integral();
        let tolerance = NEUTRALITY_TOL * f.l1_norm().max(scale);
        if !integral.is_finite() || integral.abs() > tolerance {
            return Err(Error::Neutrality {
                integral,
                tolerance,
            });
        }
        let mean = integral / f.grid().length();
        Ok(NeutralCharge {
            f: f.map(|v| v - mean),
        })
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }
}

/// Cumulative trapezoidal integral from the left end, `W(−L/2) = 0`.
pub fn primitive(f: &GridFunction) -> GridFunction {
    let h = f.grid().spacing();
    let v = f.values();
    let mut w = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    w.push(acc);
    for pair in v.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        w.push(acc);
    }
    GridFunction::new(*f.grid(), w).expect("primitive preserves length")
}

/// Interaction energy `D₁(f) = 4π ∫ W_f²`.
pub fn d1_energy(f: &NeutralCharge) -> f64 {
    let w = primitive(&f.f);
    let w2: Vec<f64> = w.values().iter().map(|x| x * x).collect();
    4.0 * PI * f.f.grid().quadrature(&w2)
}

/// Mean-field potential `Φ_f(x) = −4π ∫_0^x W_f`, integrated outward from the center node.
pub fn mean_field(f: &NeutralCharge) -> GridFunction {
    let grid = *f.f.grid();
    let w = primitive(&f.f);
    let w = w.values();
    let h = grid.spacing();
    let c = grid.center_index();
    let mut phi = vec![0.0; grid.npoints()];
    for i in c + 1..grid.npoints() {
        phi[i] = phi[i - 1] - 2.0 * PI * h * (w[i - 1] + w[i]);
    }
    for i in (0..c).rev() {
        phi[i] = phi[i + 1] + 2.0 * PI * h * (w[i] + w[i + 1]);
    }
    GridFunction::new(grid, phi).expect("potential preserves length")
}

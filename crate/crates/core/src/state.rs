//! Reduced states in spectral form, background charge profiles, and the energy functional
//!
//! ```text
//! E(G) = ½ Tr(−Δ G) + Tr F(b, G) + ½ D₁(ρ_G − μ)
//! ```

use crate::error::{Error, Result};
use crate::grid1d::{Grid, GridFunction, TridiagonalOperator};
use crate::hartree::{d1_energy, NeutralCharge};
use crate::penalty::Penalty;

/// Occupations below this value are dropped when a state is built.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Orthonormality tolerance for orbitals.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// `G = Σ g_j |ψ_j⟩⟨ψ_j|` with `g_j > 0` descending and orthonormal `ψ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    grid: Grid,
    occupations: Vec<f64>,
    orbitals: Vec<GridFunction>,
}

impl ReducedState {
    pub fn empty(grid: Grid) -> Self {
        ReducedState {
            grid,
            occupations: Vec::new(),
            orbitals: Vec::new(),
        }
    }

    /// Drops occupations below [`RANK_CUTOFF`], sorts the rest in descending
    /// order (stable) and checks orthonormality of the kept orbitals.
    pub fn new(grid: Grid, occupations: Vec<f64>, orbitals: Vec<GridFunction>) -> Result<Self> {
        if occupations.len() != orbitals.len() {
            return Err(Error::Shape {
                expected: occupations.len(),
                actual: orbitals.len(),
            });
        }
        let mut pairs = Vec::with_capacity(occupations.len());
        for (g, psi) in occupations.into_iter().zip(orbitals) {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::domain("occupation g_j", "finite and >= 0", g));
            }
            if *psi.grid() != grid {
                return Err(Error::State("orbital lives on a different grid".into()));
            }
            if g >= RANK_CUTOFF {
                pairs.push((g, psi));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (occupations, orbitals): (Vec<f64>, Vec<GridFunction>) = pairs.into_iter().unzip();
        for i in 0..orbitals.len() {
            for j in 0..=i {
                let d = orbitals[i].dot(&orbitals[j])?;
                let target = if i == j { 1.0 } else { 0.0 };
                if (d - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::State(format!(
                        "orbitals {j} and {i} are not orthonormal (overlap {d:e})"
                    )));
                }
            }
        }
        Ok(ReducedState {
            grid,
            occupations,
            orbitals,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn orbitals(&self) -> &[GridFunction] {
        &self.orbitals
    }

    pub fn rank(&self) -> usize {
        self.occupations.len()
    }

    pub fn trace(&self) -> f64 {
        self.occupations.iter().sum()
    }

    /// `ρ(x) = Σ g_j |ψ_j(x)|²`.
    pub fn density(&self) -> GridFunction {
        let mut rho = vec![0.0; self.grid.npoints()];
        for (g, psi) in self.occupations.iter().zip(&self.orbitals) {
            for (r, p) in rho.iter_mut().zip(psi.values()) {
                *r += g * p * p;
            }
        }
        GridFunction::new(self.grid, rho).expect("density has grid length")
    }

    /// `Σ g_j ⟨ψ_j, T ψ_j⟩`, where `T` already carries the factor ½.
    pub fn kinetic_energy(&self, t: &TridiagonalOperator) -> Result<f64> {
        if t.dim() != self.grid.interior_len() {
            return Err(Error::Shape {
                expected: self.grid.interior_len(),
                actual: t.dim(),
            });
        }
        let mut sum = 0.0;
        for (g, psi) in self.occupations.iter().zip(&self.orbitals) {
            sum += g * t.matrix_element(psi, psi)?;
        }
        Ok(sum)
    }

    /// `Tr F(b, G) = Σ F(b, g_j)`.
    pub fn penalty_energy(&self, penalty: &Penalty) -> Result<f64> {
        self.occupations.iter().map(|&g| penalty.value(g)).sum()
    }
}

/// Background density `μ ≥ 0` carrying total charge `ν` per unit surface.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeProfile {
    mu: GridFunction,
    nu: f64,
}

impl ChargeProfile {
    /// Validates a tabulated background already sampled on the grid.
    pub fn new(mu: GridFunction, nu: f64) -> Result<Self> {
        Self::check_nu(nu)?;
        if let Some(&bad) = mu.values().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain("background density mu", "finite and >= 0", bad));
        }
        let total = mu.integral();
        if (total - nu).abs() > 1e-10 * nu {
            return Err(Error::Config(format!(
                "background integrates to {total}, expected nu = {nu}"
            )));
        }
        Ok(ChargeProfile { mu, nu })
    }

    /// Gaussian `exp(−(x − center)²/(2 width²))` scaled so that `∫μ = ν`.
    pub fn gaussian(grid: &Grid, nu: f64, center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::domain("gaussian width", "> 0", width));
        }
        if !center.is_finite() {
            return Err(Error::domain("gaussian center", "finite", center));
        }
        Self::normalized(grid.from_fn(|x| (-(x - center).powi(2) / (2.0 * width * width)).exp()), nu)
    }

    /// Constant density on `[−halfwidth, halfwidth]`, scaled so that `∫μ = ν`.
    pub fn uniform(grid: &Grid, nu: f64, halfwidth: f64) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(Error::domain("uniform halfwidth", "> 0", halfwidth));
        }
        Self::normalized(grid.from_fn(|x| if x.abs() <= halfwidth { 1.0 } else { 0.0 }), nu)
    }

    /// Linear interpolation of samples `(x_i, μ_i)` onto the grid, zero
    /// outside the sampled range, scaled so that `∫μ = ν`.
    pub fn tabulated(grid: &Grid, nu: f64, xs: &[f64], values: &[f64]) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::Shape {
                expected: xs.len(),
                actual: values.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::Config("tabulated profile needs at least two samples".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("tabulated abscissae must be strictly increasing".into()));
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain("tabulated density", "finite and >= 0", bad));
        }
        let mu = grid.from_fn(|x| {
            if x < xs[0] || x > xs[xs.len() - 1] {
                return 0.0;
            }
            let j = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
            let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
            values[j - 1] + t * (values[j] - values[j - 1])
        });
        Self::normalized(mu, nu)
    }

    fn check_nu(nu: f64) -> Result<()> {
        if nu.is_finite() && nu > 0.0 {
            Ok(())
        } else {
            Err(Error::domain("total charge nu", "finite and > 0", nu))
        }
    }

    fn normalized(shape: GridFunction, nu: f64) -> Result<Self> {
        Self::check_nu(nu)?;
        let total = shape.integral();
        if !(total > 0.0) {
            return Err(Error::Config("background profile has no weight on the grid".into()));
        }
        Ok(ChargeProfile {
            mu: shape.map(|v| v * nu / total),
            nu,
        })
    }

    pub fn mu(&self) -> &GridFunction {
        &self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> &Grid {
        self.mu.grid()
    }
}

/// Energy per unit surface split into its three contributions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub penalty: f64,
    pub hartree: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, penalty: f64, hartree: f64) -> Self {
        EnergyBreakdown {
            kinetic,
            penalty,
            hartree,
            total: kinetic + penalty + hartree,
        }
    }
}

/// `½ D₁(f)` for `f = ρ − μ`, with neutrality judged against the total charge scale.
pub(crate) fn hartree_energy(rho: &GridFunction, profile: &ChargeProfile) -> Result<f64> {
    let f = rho.sub(profile.mu())?;
    let charge = NeutralCharge::with_scale(f, profile.nu())?;
    Ok(0.5 * d1_energy(&charge))
}

/// Evaluates the three energy terms of `G` against the background `profile`.
pub fn total_energy(
    penalty: &Penalty,
    state: &ReducedState,
    profile: &ChargeProfile,
    kinetic: &TridiagonalOperator,
) -> Result<EnergyBreakdown> {
    let k = state.kinetic_energy(kinetic)?;
    let p = state.penalty_energy(penalty)?;
    let h = hartree_energy(&state.density(), profile)?;
    Ok(EnergyBreakdown::new(k, p, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::{FieldStrength, SpinMode};
    use std::f64::consts::PI;

    fn box_state(g: &Grid, occ: &[f64]) -> ReducedState {
        let e = g.kinetic_operator().eigensolve(g, occ.len()).unwrap();
        ReducedState::new(*g, occ.to_vec(), e.vectors).unwrap()
    }

    #[test]
    fn density_examples() {
        let g = Grid::new(4.0, 201).unwrap();
        let empty = ReducedState::empty(g);
        assert!(empty.density().values().iter().all(|&v| v == 0.0));
        let s = box_state(&g, &[0.7]);
        assert!((s.density().integral() - 0.7).abs() < 1e-12);
        let s = box_state(&g, &[1.0, 1.0]);
        assert!((s.density().integral() - 2.0).abs() < 1e-12);
        assert!(s.density().values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn state_normalizes_ordering_and_rank() {
        let g = Grid::new(4.0, 101).unwrap();
        let e = g.kinetic_operator().eigensolve(&g, 3).unwrap();
        let s = ReducedState::new(g, vec![0.2, 1e-14, 0.9], e.vectors.clone()).unwrap();
        assert_eq!(s.occupations(), &[0.9, 0.2]);
        assert_eq!(s.orbitals()[0], e.vectors[2]);
        assert_eq!(s.rank(), 2);
        let twice = vec![e.vectors[0].clone(), e.vectors[0].clone()];
        assert!(ReducedState::new(g, vec![1.0, 1.0], twice).is_err());
        assert!(ReducedState::new(g, vec![-1.0], vec![e.vectors[0].clone()]).is_err());
    }

    #[test]
    fn kinetic_examples() {
        let l = 3.0;
        let g = Grid::new(l, 601).unwrap();
        let t = g.kinetic_operator();
        assert_eq!(ReducedState::empty(g).kinetic_energy(&t).unwrap(), 0.0);
        let s = box_state(&g, &[1.0]);
        let exact = PI * PI / (2.0 * l * l);
        assert!((s.kinetic_energy(&t).unwrap() - exact).abs() < 1e-4 * exact);
        let s2 = box_state(&g, &[2.0]);
        assert!((s2.kinetic_energy(&t).unwrap() - 2.0 * s.kinetic_energy(&t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn penalty_examples() {
        let g = Grid::new(4.0, 101).unwrap();
        let p = Penalty::new(FieldStrength::new(1.0).unwrap(), SpinMode::Spinless);
        assert_eq!(ReducedState::empty(g).penalty_energy(&p).unwrap(), 0.0);
        let s = box_state(&g, &[1.0 / (4.0 * PI)]);
        assert!((s.penalty_energy(&p).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-15);
        let s = box_state(&g, &[0.1, 0.05, 0.01]);
        assert!((s.penalty_energy(&p).unwrap() - 0.5 * 0.16).abs() < 1e-15);
    }

    #[test]
    fn perfect_screening_has_no_hartree_energy() {
        let g = Grid::new(6.0, 201).unwrap();
        let s = box_state(&g, &[0.6, 0.4]);
        let profile = ChargeProfile::new(s.density(), s.trace()).unwrap();
        let p = Penalty::new(FieldStrength::new(2.0).unwrap(), SpinMode::Spinless);
        let e = total_energy(&p, &s, &profile, &g.kinetic_operator()).unwrap();
        assert_eq!(e.hartree, 0.0);
        assert_eq!(e.total, e.kinetic + e.penalty + e.hartree);
    }

    #[test]
    fn profiles_are_normalized() {
        let g = Grid::new(10.0, 401).unwrap();
        let p = ChargeProfile::gaussian(&g, 1.3, 0.5, 0.8).unwrap();
        assert!((p.mu().integral() - 1.3).abs() < 1e-12);
        let p = ChargeProfile::uniform(&g, 2.0, 1.0).unwrap();
        assert!((p.mu().integral() - 2.0).abs() < 1e-12);
        let p = ChargeProfile::tabulated(&g, 1.0, &[-1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((p.mu().integral() - 1.0).abs() < 1e-12);
        assert!((p.mu().values()[g.center_index()] - 1.0).abs() < 1e-12);
        assert!(ChargeProfile::gaussian(&g, 0.0, 0.0, 1.0).is_err());
        assert!(ChargeProfile::uniform(&g, 1.0, -1.0).is_err());
        assert!(ChargeProfile::tabulated(&g, 1.0, &[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(ChargeProfile::new(g.zeros(), 1.0).is_err());
    }
}

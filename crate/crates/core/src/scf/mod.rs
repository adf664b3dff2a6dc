//! Self-consistent minimization of the reduced energy over states with `Tr G = ν`.
//!
//! Each iteration builds `Φ` from the input density and diagonalizes
//! `H = −½Δ + Φ`. The occupations are then relaxed exactly on the computed
//! bands, with the Hartree term included, and the output density is mixed
//! back with Anderson acceleration.

mod mixing;
mod occupations;
mod relax;
mod residual;

pub use occupations::{occupations_from_spectrum, smoothed_occupations, DEGENERACY_TOL};
pub use residual::{el_residual, ElResidual};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid1d::{GridFunction, TridiagonalOperator};
use crate::hartree::{mean_field, primitive, NeutralCharge};
use crate::penalty::{FieldStrength, Penalty, SmoothingParams, SpinMode};
use crate::state::{total_energy, ChargeProfile, EnergyBreakdown, ReducedState, RANK_CUTOFF};
use mixing::Mixer;
use relax::OccupationProblem;

/// Largest default band count.
pub const MAX_DEFAULT_BANDS: usize = 40;

/// Starting point of the iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum InitialGuess {
    /// `ρ₀ = μ`, so the first Hamiltonian is the free one.
    #[default]
    Neutral,
    /// First Hamiltonian `−½Δ + V` with a seeded random smooth potential.
    RandomPotential { seed: u64, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScfConfig {
    pub b: FieldStrength,
    pub spin: SpinMode,
    pub profile: ChargeProfile,
    /// Bands per iteration; `None` picks `min(⌈2πν/b⌉ + 10, 40)`.
    pub nbands: Option<usize>,
    pub smoothing: Option<SmoothingParams>,
    pub mixing_alpha: f64,
    /// Anderson history length; 0 gives plain linear mixing.
    pub mixing_depth: usize,
    pub max_iterations: usize,
    /// Bound on `‖ρ_out − ρ_in‖₁`.
    pub density_tol: f64,
    pub residual_tol: f64,
    pub initial: InitialGuess,
}

impl ScfConfig {
    pub fn new(b: FieldStrength, profile: ChargeProfile) -> Self {
        ScfConfig {
            b,
            spin: SpinMode::Spinless,
            profile,
            nbands: None,
            smoothing: None,
            mixing_alpha: 0.3,
            mixing_depth: 8,
            max_iterations: 500,
            density_tol: 1e-10,
            residual_tol: 1e-8,
            initial: InitialGuess::Neutral,
        }
    }

    pub fn penalty(&self) -> Penalty {
        Penalty::new(self.b, self.spin)
    }

    /// Number of bands actually computed.
    pub fn effective_nbands(&self) -> usize {
        let dim = self.profile.grid().interior_len();
        let wanted = self.nbands.unwrap_or_else(|| {
            if self.b.is_zero() {
                MAX_DEFAULT_BANDS
            } else {
                let levels = (std::f64::consts::TAU * self.profile.nu() / self.b.value()).ceil();
                if levels >= MAX_DEFAULT_BANDS as f64 {
                    MAX_DEFAULT_BANDS
                } else {
                    (levels as usize + 10).min(MAX_DEFAULT_BANDS)
                }
            }
        });
        wanted.min(dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mixing_alpha > 0.0 && self.mixing_alpha <= 1.0) {
            return Err(Error::domain("mixing_alpha", "in (0, 1]", self.mixing_alpha));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.density_tol > 0.0) {
            return Err(Error::domain("density_tol", "> 0", self.density_tol));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::domain("residual_tol", "> 0", self.residual_tol));
        }
        if let Some(n) = self.nbands {
            if n == 0 || n > self.profile.grid().interior_len() {
                return Err(Error::EigenRange {
                    requested: n,
                    dimension: self.profile.grid().interior_len(),
                });
            }
        }
        if let InitialGuess::RandomPotential { amplitude, .. } = self.initial {
            if !amplitude.is_finite() {
                return Err(Error::domain("initial potential amplitude", "finite", amplitude));
            }
        }
        Ok(())
    }
}

/// One line of the convergence history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Energy of the output state with the exact penalty.
    pub energy: f64,
    /// Objective being minimized: the smoothed energy in smoothed mode.
    pub objective: f64,
    pub density_change: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScfResult {
    pub state: ReducedState,
    pub lambda: f64,
    pub energy: EnergyBreakdown,
    /// Smoothed energy when smoothing is active.
    pub objective: f64,
    pub residual: ElResidual,
    /// Computed band energies of the last Hamiltonian, ascending.
    pub eigenvalues: Vec<f64>,
    /// Occupations aligned with `eigenvalues` (zeros included).
    pub band_occupations: Vec<f64>,
    pub density: GridFunction,
    pub potential: GridFunction,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub nbands: usize,
}

struct Iterate {
    lambda: f64,
    eigenvalues: Vec<f64>,
    occupations: Vec<f64>,
    orbitals: Vec<GridFunction>,
    density: GridFunction,
}

struct Solver<'a> {
    cfg: &'a ScfConfig,
    penalty: Penalty,
    kinetic: TridiagonalOperator,
    nbands: usize,
}

impl Solver<'_> {
    fn smoothed(&self) -> Option<SmoothingParams> {
        self.cfg.smoothing.filter(|_| !self.cfg.b.is_zero())
    }

    fn potential(&self, rho: &GridFunction) -> Result<GridFunction> {
        let f = rho.sub(self.cfg.profile.mu())?;
        Ok(mean_field(&NeutralCharge::with_scale(f, self.cfg.profile.nu())?))
    }

    /// Diagonalizes `−½Δ + V` and fills the bands.
    fn step(&self, potential: &GridFunction) -> Result<Iterate> {
        let grid = *self.cfg.profile.grid();
        let h = self.kinetic.add_potential(potential)?;
        let eig = h.eigensolve(&grid, self.nbands)?;
        let nu = self.cfg.profile.nu();
        let (lambda, occupations) = match self.smoothed() {
            Some(s) => smoothed_occupations(&self.penalty, s, &eig.values, nu)?,
            None => {
                let (_, warm) = occupations_from_spectrum(&self.penalty, &eig.values, nu)?;
                self.relax(&eig.vectors, &warm)?
            }
        };
        let mut rho = vec![0.0; grid.npoints()];
        for (g, psi) in occupations.iter().zip(&eig.vectors) {
            for (r, p) in rho.iter_mut().zip(psi.values()) {
                *r += g * p * p;
            }
        }
        Ok(Iterate {
            lambda,
            eigenvalues: eig.values,
            occupations,
            orbitals: eig.vectors,
            density: GridFunction::new(grid, rho)?,
        })
    }

    /// Exact minimization over occupations on fixed orbitals, Hartree term
    /// included. Returns `λ` in the gauge of the output Hamiltonian.
    fn relax(&self, orbitals: &[GridFunction], warm: &[f64]) -> Result<(f64, Vec<f64>)> {
        let grid = *self.cfg.profile.grid();
        let nu = self.cfg.profile.nu();
        let m = orbitals.len();
        let mu = self.cfg.profile.mu().values();
        let c = orbitals
            .iter()
            .map(|psi| self.kinetic.matrix_element(psi, psi))
            .collect::<Result<Vec<_>>>()?;
        let w: Vec<GridFunction> = orbitals
            .iter()
            .map(|psi| {
                let v = psi.values().iter().zip(mu).map(|(p, m)| p * p - m / nu).collect();
                primitive(&GridFunction::new(grid, v).expect("same grid"))
            })
            .collect();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut prod = vec![0.0; grid.npoints()];
        for i in 0..m {
            for j in 0..=i {
                for ((p, x), y) in prod.iter_mut().zip(w[i].values()).zip(w[j].values()) {
                    *p = x * y;
                }
                let v = 4.0 * std::f64::consts::PI * grid.quadrature(&prod);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let relaxed = OccupationProblem {
            penalty: &self.penalty,
            c,
            a,
            nu,
        }
        .solve(warm)?;
        // The gradient c + A g differs from the Rayleigh quotients of the
        // output Hamiltonian by a constant; shift λ by it.
        let rho: Vec<f64> = {
            let mut r = vec![0.0; grid.npoints()];
            for (g, psi) in relaxed.g.iter().zip(orbitals) {
                for (x, p) in r.iter_mut().zip(psi.values()) {
                    *x += g * p * p;
                }
            }
            r
        };
        let h_out = self.kinetic.add_potential(&self.potential(&GridFunction::new(grid, rho)?)?)?;
        let eps0 = h_out.matrix_element(&orbitals[0], &orbitals[0])?;
        Ok((relaxed.lambda + eps0 - relaxed.gradient[0], relaxed.g))
    }

    fn objective(&self, state: &ReducedState, energy: &EnergyBreakdown) -> Result<f64> {
        match self.smoothed() {
            Some(s) => {
                let mut p = 0.0;
                for &g in state.occupations() {
                    p += self.penalty.smooth(g, s)?.0;
                }
                Ok(energy.kinetic + p + energy.hartree)
            }
            None => Ok(energy.total),
        }
    }

    fn random_potential(&self, seed: u64, amplitude: f64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = self.cfg.profile.grid();
        let l = grid.length();
        let modes: Vec<(f64, f64)> = (1..=6)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        grid.from_fn(|x| {
            let u = (x + 0.5 * l) / l;
            amplitude
                * modes
                    .iter()
                    .enumerate()
                    .map(|(m, (a, phase))| a * ((m + 1) as f64 * std::f64::consts::PI * u + phase).sin())
                    .sum::<f64>()
        })
    }

    /// Energy, objective and residual of an output iterate.
    fn assess(&self, it: &Iterate) -> Result<(ReducedState, EnergyBreakdown, f64, GridFunction, ElResidual)> {
        let grid = *self.cfg.profile.grid();
        let state = ReducedState::new(grid, it.occupations.clone(), it.orbitals.clone())?;
        let energy = total_energy(&self.penalty, &state, &self.cfg.profile, &self.kinetic)?;
        let objective = self.objective(&state, &energy)?;
        let potential = self.potential(&it.density)?;
        let h = self.kinetic.add_potential(&potential)?;
        let residual = el_residual(
            &self.penalty,
            self.cfg.smoothing,
            &h,
            it.lambda,
            &it.occupations,
            &it.orbitals,
        )?;
        Ok((state, energy, objective, potential, residual))
    }

    fn finish(&self, it: Iterate, history: Vec<IterationRecord>, converged: bool) -> Result<ScfResult> {
        let (state, energy, objective, potential, residual) = self.assess(&it)?;
        Ok(ScfResult {
            state,
            lambda: it.lambda,
            energy,
            objective,
            residual,
            eigenvalues: it.eigenvalues,
            band_occupations: it.occupations,
            density: it.density,
            potential,
            iterations: history.len(),
            history,
            converged,
            nbands: self.nbands,
        })
    }
}

/// Runs the self-consistent iteration.
///
/// Non-convergence is not an error: the iterate with the smallest density
/// change is returned with `converged = false`. A converged result whose
/// highest computed band is occupied is reported as
/// [`Error::InsufficientBands`].
pub fn scf_solve(cfg: &ScfConfig) -> Result<ScfResult> {
    cfg.validate()?;
    let grid = *cfg.profile.grid();
    let solver = Solver {
        cfg,
        penalty: cfg.penalty(),
        kinetic: grid.kinetic_operator(),
        nbands: cfg.effective_nbands(),
    };
    let mut rho_in = match cfg.initial {
        InitialGuess::Neutral => cfg.profile.mu().clone(),
        InitialGuess::RandomPotential { seed, amplitude } => {
            solver.step(&solver.random_potential(seed, amplitude))?.density
        }
    };
    let weights: Vec<f64> = (0..grid.npoints())
        .map(|i| {
            if i == 0 || i + 1 == grid.npoints() {
                0.5 * grid.spacing()
            } else {
                grid.spacing()
            }
        })
        .collect();
    let mut mixer = Mixer::new(cfg.mixing_alpha, cfg.mixing_depth, weights);
    let mut history = Vec::new();
    let mut best: Option<(f64, Iterate)> = None;
    for iteration in 1..=cfg.max_iterations {
        let it = solver.step(&solver.potential(&rho_in)?)?;
        let diff = it.density.sub(&rho_in)?;
        let change = diff.l1_norm();
        let (_, energy, objective, _, residual) = solver.assess(&it)?;
        let residual = residual.value();
        history.push(IterationRecord {
            iteration,
            energy: energy.total,
            objective,
            density_change: change,
            residual,
        });
        if change < cfg.density_tol && residual < cfg.residual_tol {
            check_bands(&it, grid.interior_len())?;
            return solver.finish(it, history, true);
        }
        let next = mixer.next(rho_in.values(), diff.values());
        if best.as_ref().is_none_or(|(c, _)| change < *c) {
            best = Some((change, it));
        }
        rho_in = GridFunction::new(grid, next)?;
    }
    let (_, it) = best.expect("at least one iteration ran");
    solver.finish(it, history, false)
}

fn check_bands(it: &Iterate, dim: usize) -> Result<()> {
    let top = *it.occupations.last().expect("bands computed");
    if it.occupations.len() < dim && top > RANK_CUTOFF {
        return Err(Error::InsufficientBands {
            band: it.occupations.len() - 1,
            occupation: top,
        });
    }
    Ok(())
}

/// The same iteration with the zero-field penalty `c·g²`.
pub fn reference_b0_solve(cfg: &ScfConfig) -> Result<ScfResult> {
    let mut zero = cfg.clone();
    zero.b = FieldStrength::ZERO;
    zero.smoothing = None;
    scf_solve(&zero)
}

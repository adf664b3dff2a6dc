//! Landau-level numerics in the gauge `A = (0, b x₁)`.
//!
//! Eigenfunctions of the level `n` are Wigner-type transforms
//!
//! ```text
//! W(φ_n, g)(x₁, x₂) = (2π)^{−1/2} ∫ e^{−i k x₂} φ_n(x₁ − k/b) g(k) dk
//! ```
//!
//! with `φ_n(x) = b^{1/4} ψ_n(√b x)` the normalized Hermite functions.
//! Everything here is discretized on uniform grids: an `x₁` grid, a `k`
//! grid with spacing `b·dx₁` (so that `k/b` shifts land on `x₁` nodes), and
//! the dual `x₂` grid of the discrete Fourier transform along `k`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid1d::Grid;
use crate::penalty::{FieldStrength, LevelOccupations, Penalty};
use crate::state::ReducedState;

/// Default highest Landau level kept in a basis.
pub const DEFAULT_NMAX: usize = 12;

/// Grid spacing in magnetic lengths `1/√b`.
const STEP_IN_MAGNETIC_LENGTHS: f64 = 0.3;

/// Values below this fraction of the peak count as negligible at grid edges.
const EDGE_TOL: f64 = 1e-10;

/// `ψ_0, …, ψ_nmax` at `s` via the normalized three-term recurrence.
pub fn hermite_functions(nmax: usize, s: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(nmax + 1);
    psi.push(PI.powf(-0.25) * (-0.5 * s * s).exp());
    if nmax >= 1 {
        psi.push(2f64.sqrt() * s * psi[0]);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * s * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// Hermite functions `φ_n` scaled to the field, on an `x₁` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteBasis {
    b: FieldStrength,
    nmax: usize,
    x1: Grid,
}

impl HermiteBasis {
    pub fn new(b: FieldStrength, nmax: usize, x1: Grid) -> Result<Self> {
        if b.is_zero() {
            return Err(Error::domain("field strength b", "> 0 for Landau levels", 0.0));
        }
        Ok(HermiteBasis { b, nmax, x1 })
    }

    /// Basis whose `x₁` grid covers every `φ_n(x₁ − k/b)`, `n ≤ nmax`,
    /// for `|k| ≤ k_support`, with spacing 0.3 magnetic lengths.
    pub fn sized_for(b: FieldStrength, nmax: usize, k_support: f64) -> Result<Self> {
        if b.is_zero() {
            return Err(Error::domain("field strength b", "> 0 for Landau levels", 0.0));
        }
        if !(k_support.is_finite() && k_support >= 0.0) {
            return Err(Error::domain("k support", "finite and >= 0", k_support));
        }
        let bv = b.value();
        let step = STEP_IN_MAGNETIC_LENGTHS / bv.sqrt();
        let half = k_support / bv + Self::tail(bv, nmax);
        let cells = (half / step).ceil() as usize;
        let x1 = Grid::new(2.0 * cells as f64 * step, 2 * cells + 1)?;
        Self::new(b, nmax, x1)
    }

    /// Distance `8 √((2 nmax + 1)/b)` beyond which every `φ_n` is negligible.
    fn tail(b: f64, nmax: usize) -> f64 {
        8.0 * ((2 * nmax + 1) as f64 / b).sqrt()
    }

    pub fn field(&self) -> FieldStrength {
        self.b
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn x1_grid(&self) -> &Grid {
        &self.x1
    }

    /// `φ_n(x) = b^{1/4} ψ_n(√b x)`.
    pub fn phi(&self, n: usize, x: f64) -> Result<f64> {
        if n > self.nmax {
            return Err(Error::LevelRange { n, nmax: self.nmax });
        }
        let b = self.b.value();
        Ok(b.powf(0.25) * hermite_functions(n, b.sqrt() * x)[n])
    }

    fn phi_unchecked(&self, n: usize, x: f64) -> f64 {
        let b = self.b.value();
        b.powf(0.25) * hermite_functions(n, b.sqrt() * x)[n]
    }

    /// `φ_n` sampled on the `x₁` grid.
    pub fn sampled(&self, n: usize) -> Result<Vec<f64>> {
        self.x1.nodes().iter().map(|&x| self.phi(n, x)).collect()
    }

    /// Extent `K = b·X₁ + 8√b √(2 nmax + 1)` of the `k` grid, `X₁ = L₁/2`.
    pub fn k_extent(&self) -> f64 {
        let b = self.b.value();
        b * self.x1.half_length() + 8.0 * (b * (2 * self.nmax + 1) as f64).sqrt()
    }

    /// Symmetric `k` grid on `[−K, K]` (rounded up) with spacing `b·dx₁`.
    pub fn k_grid(&self) -> Grid {
        let dk = self.b.value() * self.x1.spacing();
        let cells = (self.k_extent() / dk).ceil() as usize;
        Grid::new(2.0 * cells as f64 * dk, 2 * cells + 1).expect("k grid is valid")
    }
}

/// Trapezoid weights (in units of the spacing) for `n` nodes.
fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

fn check_len(g: &[Complex64], k: &Grid) -> Result<()> {
    if g.len() != k.npoints() {
        return Err(Error::Shape {
            expected: k.npoints(),
            actual: g.len(),
        });
    }
    Ok(())
}

fn peak(g: &[Complex64]) -> f64 {
    g.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Checks that `g` is negligible at both ends of the `k` grid and that
/// `φ_n(x₁ − k/b)` stays inside the `x₁` grid wherever `g` is not.
fn check_coverage(basis: &HermiteBasis, g: &[Complex64], k: &Grid) -> Result<()> {
    let top = peak(g);
    if top == 0.0 {
        return Ok(());
    }
    let n = g.len();
    let edge = g[0].norm().max(g[n - 1].norm());
    if edge > EDGE_TOL * top {
        return Err(Error::Coverage(format!(
            "g is {:.3e} of its peak at the k-grid edge",
            edge / top
        )));
    }
    let b = basis.b.value();
    let reach = (0..n)
        .filter(|&j| g[j].norm() > EDGE_TOL * top)
        .map(|j| k.node(j).abs() / b)
        .fold(0.0, f64::max);
    let needed = reach + HermiteBasis::tail(b, basis.nmax);
    if needed > basis.x1.half_length() * (1.0 + 1e-12) {
        return Err(Error::Coverage(format!(
            "x1 grid half-length {} < required {needed}",
            basis.x1.half_length()
        )));
    }
    Ok(())
}

/// Sampled transform `W(x₁_i, x₂_m)`, row-major in `x₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    x1: Grid,
    x2_step: f64,
    nx2: usize,
    values: Vec<Complex64>,
}

impl PhaseSpaceField {
    pub fn x1_grid(&self) -> &Grid {
        &self.x1
    }

    pub fn x2_step(&self) -> f64 {
        self.x2_step
    }

    /// `x₂` nodes `m·dx₂` for `m = −⌊N/2⌋, …, ⌈N/2⌉ − 1`.
    pub fn x2_nodes(&self) -> Vec<f64> {
        let half = (self.nx2 / 2) as f64;
        (0..self.nx2).map(|m| (m as f64 - half) * self.x2_step).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x1.npoints(), self.nx2)
    }

    pub fn get(&self, i: usize, m: usize) -> Complex64 {
        self.values[i * self.nx2 + m]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `∫∫ conj(self)·other`: trapezoid in `x₁`, periodic sum in `x₂`.
    pub fn inner(&self, other: &PhaseSpaceField) -> Result<Complex64> {
        if self.x1 != other.x1 || self.nx2 != other.nx2 || self.x2_step != other.x2_step {
            return Err(Error::Shape {
                expected: self.values.len(),
                actual: other.values.len(),
            });
        }
        let n1 = self.x1.npoints();
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n1 {
            let row = i * self.nx2..(i + 1) * self.nx2;
            let s: Complex64 = self.values[row.clone()]
                .iter()
                .zip(&other.values[row])
                .map(|(a, b)| a.conj() * b)
                .sum();
            total += s * trapezoid_weight(i, n1);
        }
        Ok(total * self.x1.spacing() * self.x2_step)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(0.0)
    }
}

/// `W(φ_n, g)` on the `x₁` grid times the dual `x₂` grid, via FFT along `k`.
///
/// `g` is sampled on `basis.k_grid()`.
pub fn wigner(basis: &HermiteBasis, n: usize, g: &[Complex64]) -> Result<PhaseSpaceField> {
    if n > basis.nmax {
        return Err(Error::LevelRange { n, nmax: basis.nmax });
    }
    let k = basis.k_grid();
    check_len(g, &k)?;
    check_coverage(basis, g, &k)?;
    let nk = k.npoints();
    let dk = k.spacing();
    let x1 = *basis.x1_grid();
    let n1 = x1.npoints();
    // φ_n(x₁_i − k_j/b) = φ_n((i − c₁ − j + c_k)·dx₁) since dk = b·dx₁.
    let c1 = x1.center_index() as i64;
    let ck = k.center_index() as i64;
    let span = (n1 as i64 + nk as i64) as usize;
    let offset = nk as i64 - 1;
    let phi_table: Vec<f64> = (0..span)
        .map(|t| basis.phi_unchecked(n, (t as i64 - offset - c1 + ck) as f64 * x1.spacing()))
        .collect();

    let nx2 = nk;
    let x2_step = TAU / (nx2 as f64 * dk);
    let half = (nx2 / 2) as i64;
    let prefactor = dk / TAU.sqrt();
    // Output index m ↔ x₂ = (m − half)·dx₂; DFT index q = (m − half) mod N.
    // The node k_j = (j − c_k)·dk contributes the phase e^{2πi c_k q / N}.
    let phase: Vec<Complex64> = (0..nx2)
        .map(|q| {
            let arg = TAU * ((ck as usize * q) % nx2) as f64 / nx2 as f64;
            Complex64::from_polar(prefactor, arg)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(nk);
    let mut values = vec![Complex64::new(0.0, 0.0); n1 * nx2];
    let mut buf = vec![Complex64::new(0.0, 0.0); nk];
    for i in 0..n1 {
        for (j, slot) in buf.iter_mut().enumerate() {
            let t = (i as i64 - j as i64 + offset) as usize;
            *slot = g[j] * (phi_table[t] * trapezoid_weight(j, nk));
        }
        fft.process(&mut buf);
        let row = &mut values[i * nx2..(i + 1) * nx2];
        for (m, out) in row.iter_mut().enumerate() {
            let q = (m as i64 - half).rem_euclid(nx2 as i64) as usize;
            *out = buf[q] * phase[q];
        }
    }
    Ok(PhaseSpaceField {
        x1,
        x2_step,
        nx2,
        values,
    })
}

/// `W(φ_n, g)` at a single point by direct trapezoidal quadrature in `k`.
pub fn wigner_at(basis: &HermiteBasis, n: usize, g: &[Complex64], x: [f64; 2]) -> Result<Complex64> {
    if n > basis.nmax {
        return Err(Error::LevelRange { n, nmax: basis.nmax });
    }
    let k = basis.k_grid();
    check_len(g, &k)?;
    let b = basis.b.value();
    let nk = k.npoints();
    let sum: Complex64 = (0..nk)
        .map(|j| {
            let kj = k.node(j);
            Complex64::from_polar(1.0, -kj * x[1])
                * g[j]
                * (basis.phi_unchecked(n, x[0] - kj / b) * trapezoid_weight(j, nk))
        })
        .sum();
    Ok(sum * (k.spacing() / TAU.sqrt()))
}

/// `⟨g₁, g₂⟩` on the `k` grid by the trapezoidal rule.
pub fn k_inner(k: &Grid, g1: &[Complex64], g2: &[Complex64]) -> Result<Complex64> {
    check_len(g1, k)?;
    check_len(g2, k)?;
    let n = g1.len();
    let s: Complex64 = (0..n)
        .map(|j| g1[j].conj() * g2[j] * trapezoid_weight(j, n))
        .sum();
    Ok(s * k.spacing())
}

/// Both sides of the Moyal identity and their distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoyalCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abserr: f64,
}

/// Compares `⟨W(φ_{n₁}, g₁), W(φ_{n₂}, g₂)⟩` with `⟨φ_{n₁}, φ_{n₂}⟩⟨g₁, g₂⟩`.
pub fn moyal_check(
    basis: &HermiteBasis,
    n1: usize,
    g1: &[Complex64],
    n2: usize,
    g2: &[Complex64],
) -> Result<MoyalCheck> {
    let lhs = wigner(basis, n1, g1)?.inner(&wigner(basis, n2, g2)?)?;
    let p1 = basis.sampled(n1)?;
    let p2 = basis.sampled(n2)?;
    let prod: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a * b).collect();
    let phi_inner = basis.x1_grid().quadrature(&prod);
    let rhs = k_inner(&basis.k_grid(), g1, g2)? * phi_inner;
    Ok(MoyalCheck {
        lhs,
        rhs,
        abserr: (lhs - rhs).norm(),
    })
}

/// Diagonal of the projector kernel onto level `n`, `(1/2π) ∫ φ_n(x₁ − k/b)² dk`.
///
/// The value does not depend on `x₂`; `x₁` must lie on the basis grid range.
pub fn projector_density(basis: &HermiteBasis, n: usize, x: [f64; 2]) -> Result<f64> {
    if n > basis.nmax {
        return Err(Error::LevelRange { n, nmax: basis.nmax });
    }
    if !(x[0].abs() <= basis.x1.half_length()) || !x[1].is_finite() {
        return Err(Error::Coverage(format!(
            "point x1 = {} lies outside [-{h}, {h}]",
            x[0],
            h = basis.x1.half_length()
        )));
    }
    let k = basis.k_grid();
    let b = basis.b.value();
    let nk = k.npoints();
    let sum: f64 = (0..nk)
        .map(|j| basis.phi_unchecked(n, x[0] - k.node(j) / b).powi(2) * trapezoid_weight(j, nk))
        .sum();
    Ok(sum * k.spacing() / TAU)
}

/// Translation vector `R = (R₁, R₂)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TranslationVector {
    pub r1: f64,
    pub r2: f64,
}

/// Induced action `g ↦ e^{−ibR₁R₂} e^{ikR₂} g(k − bR₁)` on the `k` grid.
///
/// The shift `bR₁` is rounded to the nearest multiple of `dk`; the vector
/// actually applied is returned alongside the translated samples.
pub fn translate_action(
    basis: &HermiteBasis,
    r: TranslationVector,
    g: &[Complex64],
) -> Result<(Vec<Complex64>, TranslationVector)> {
    let k = basis.k_grid();
    check_len(g, &k)?;
    if !(r.r1.is_finite() && r.r2.is_finite()) {
        return Err(Error::domain("translation", "finite", r.r1 + r.r2));
    }
    let b = basis.b.value();
    let dk = k.spacing();
    let nk = k.npoints() as i64;
    let shift = (b * r.r1 / dk).round();
    if shift.abs() >= nk as f64 {
        return Err(Error::Coverage(format!("shift of {shift} nodes exceeds the k grid")));
    }
    let shift = shift as i64;
    let top = peak(g);
    let lost = (0..nk)
        .filter(|&j| j + shift < 0 || j + shift >= nk)
        .map(|j| g[j as usize].norm())
        .fold(0.0, f64::max);
    if top > 0.0 && lost > EDGE_TOL * top {
        return Err(Error::Coverage(format!(
            "translation pushes {:.3e} of the peak off the k grid",
            lost / top
        )));
    }
    let applied = TranslationVector {
        r1: shift as f64 * dk / b,
        r2: r.r2,
    };
    let global = Complex64::from_polar(1.0, -b * applied.r1 * applied.r2);
    let out = (0..nk)
        .map(|j| {
            let src = j - shift;
            if src < 0 || src >= nk {
                return Complex64::new(0.0, 0.0);
            }
            global * Complex64::from_polar(1.0, k.node(j as usize) * r.r2) * g[src as usize]
        })
        .collect();
    Ok((out, applied))
}

/// A complex Gaussian packet `a·exp(−(k − c)²/(2w²) + i p k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub amplitude: Complex64,
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
}

impl GaussianPacket {
    pub fn eval(&self, k: f64) -> Complex64 {
        let u = (k - self.center) / self.width;
        self.amplitude * Complex64::from_polar((-0.5 * u * u).exp(), self.momentum * k)
    }
}

/// Sum of packets sampled on a `k` grid.
pub fn sample_packets(k: &Grid, packets: &[GaussianPacket]) -> Vec<Complex64> {
    k.nodes()
        .iter()
        .map(|&x| packets.iter().map(|p| p.eval(x)).sum())
        .collect()
}

/// Landau-level decomposition of a reduced state.
#[derive(Clone, Debug, PartialEq)]
pub struct Unfolding {
    /// Optimal fillings for each orbital, in the state's order.
    pub levels: Vec<LevelOccupations>,
    /// `(b/4π) Σ_j Σ_n w_n ε_n m_j(n)`.
    pub level_energy: f64,
    /// `(b/2π) Σ_j Σ_n w_n m_j(n)`, the trace per unit surface.
    pub trace_per_surface: f64,
}

/// Fills the Landau levels of every orbital of `state` optimally.
pub fn unfold_state(penalty: &Penalty, state: &ReducedState) -> Result<Unfolding> {
    let levels = state
        .occupations()
        .iter()
        .map(|&g| penalty.optimal_levels(g))
        .collect::<Result<Vec<_>>>()?;
    let level_energy = levels.iter().map(|m| penalty.level_energy_sum(m)).sum();
    let density = penalty.field().level_density();
    let trace_per_surface = levels
        .iter()
        .map(|m| density * m.weighted_count(penalty.spin()))
        .sum();
    Ok(Unfolding {
        levels,
        level_energy,
        trace_per_surface,
    })
}

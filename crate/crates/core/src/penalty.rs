//! Magnetic kinetic penalty `F(b, g)` and everything derived from it.
//!
//! For a field strength `b > 0` the penalty is the per-area kinetic cost of
//! packing an areal occupation `g` into Landau levels of energy `b(2n + 1)`,
//! each of areal capacity `b / 2π`:
//!
//! ```text
//! F(b, g) = π g² + b²/(4π) {x}(1 − {x}),    x = 2π g / b
//!         = b²/(4π) (x(1 + 2⌊x⌋) − ⌊x⌋ − ⌊x⌋²)
//! ```
//!
//! The function is convex and piecewise linear in `g` with kinks on the
//! lattice `(b/2π)ℕ₀`. The spin variant uses the Zeeman-split ladder
//! `2nb` where the lowest level holds `b/2π` and every other level `b/π`.
//!
//! Both variants share the same staircase geometry for the subdifferential:
//! plateau `k` sits at slope `y_k = y_0 + k·b` and spans occupations
//! `[edge(k), edge(k + 1)]`. [`Penalty`] exposes that geometry directly so
//! callers can reason about exact lattice points.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Relative tolerance used to snap occupations and slopes onto the kink lattice.
pub const KINK_TOL: f64 = 1e-12;

/// Magnitude `b ≥ 0` of the perpendicular magnetic field.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct FieldStrength(f64);

impl FieldStrength {
    pub const ZERO: FieldStrength = FieldStrength(0.0);

    pub fn new(b: f64) -> Result<Self> {
        if b.is_finite() && b >= 0.0 {
            Ok(FieldStrength(b))
        } else {
            Err(Error::domain("field strength b", "finite and >= 0", b))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// Areal density `b/2π` carried by one fully occupied Landau level.
    #[inline]
    pub fn level_density(self) -> f64 {
        self.0 / TAU
    }
}

/// Whether the Zeeman-split (spin) ladder is used.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SpinMode {
    #[default]
    Spinless,
    Zeeman,
}

impl SpinMode {
    pub fn from_flag(spin: bool) -> Self {
        if spin {
            SpinMode::Zeeman
        } else {
            SpinMode::Spinless
        }
    }

    pub fn is_spin(self) -> bool {
        self == SpinMode::Zeeman
    }

    /// Coefficient `c` of the Thomas-Fermi term `c·g²` (π without spin, π/2 with).
    #[inline]
    pub fn thomas_fermi(self) -> f64 {
        match self {
            SpinMode::Spinless => PI,
            SpinMode::Zeeman => PI / 2.0,
        }
    }

    /// Energy of Landau level `n`: `b(2n+1)`, or `2nb` on the Zeeman ladder.
    pub fn level_energy(self, b: FieldStrength, n: usize) -> f64 {
        match self {
            SpinMode::Spinless => b.0 * (2 * n + 1) as f64,
            SpinMode::Zeeman => b.0 * (2 * n) as f64,
        }
    }

    /// Degeneracy of level `n` in units of `b/2π`.
    pub fn level_weight(self, n: usize) -> f64 {
        match (self, n) {
            (SpinMode::Spinless, _) | (SpinMode::Zeeman, 0) => 1.0,
            (SpinMode::Zeeman, _) => 2.0,
        }
    }
}

/// Value of the penalty together with its one-sided derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyEval {
    pub value: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

impl PenaltyEval {
    /// `y ∈ [f⁻(g), f⁺(g)]`, compared exactly.
    pub fn contains(&self, y: f64) -> bool {
        self.left_slope <= y && y <= self.right_slope
    }
}

/// Closed interval `[h⁻(y), h⁺(y)]` of admissible occupations for a gap `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FillInterval {
    pub lower: f64,
    pub upper: f64,
}

impl FillInterval {
    fn point(g: f64) -> Self {
        FillInterval { lower: g, upper: g }
    }

    pub fn is_singleton(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Exact membership test.
    pub fn contains(&self, g: f64) -> bool {
        self.lower <= g && g <= self.upper
    }

    pub fn distance(&self, g: f64) -> f64 {
        (self.lower - g).max(g - self.upper).max(0.0)
    }
}

/// Relative half-width `delta ∈ (0, ½)` of the kink-smoothing windows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingParams {
    delta: f64,
}

impl SmoothingParams {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta < 0.5 {
            Ok(SmoothingParams { delta })
        } else {
            Err(Error::domain("smoothing delta", "in (0, 1/2)", delta))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { delta: 0.05 }
    }
}

/// Fillings `m(n) ∈ [0, 1]` of the Landau levels for one orbital.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelOccupations(Vec<f64>);

impl LevelOccupations {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = m.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::domain("level filling m(n)", "in [0, 1]", bad));
        }
        Ok(LevelOccupations(m))
    }

    pub fn fillings(&self) -> &[f64] {
        &self.0
    }

    /// Filling of level `n` (zero beyond the stored support).
    pub fn get(&self, n: usize) -> f64 {
        self.0.get(n).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ w_n m(n)` in units of the level density `b/2π`.
    pub fn weighted_count(&self, spin: SpinMode) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(n, m)| spin.level_weight(n) * m)
            .sum()
    }
}

/// `(b/4π) Σ_n w_n ε_n m(n)`: per-area Landau-level energy of one orbital.
pub fn level_energy_sum(b: FieldStrength, m: &LevelOccupations, spin: SpinMode) -> f64 {
    let sum: f64 = m
        .fillings()
        .iter()
        .enumerate()
        .map(|(n, &mn)| spin.level_weight(n) * spin.level_energy(b, n) * mn)
        .sum();
    b.value() / (2.0 * TAU) * sum
}

/// Spinless penalty `F(b, g)`.
pub fn eval_f(b: FieldStrength, g: f64) -> Result<f64> {
    Penalty::new(b, SpinMode::Spinless).value(g)
}

/// Penalty `F^spin(b, g)` on the Zeeman-split ladder.
pub fn eval_f_spin(b: FieldStrength, g: f64) -> Result<f64> {
    Penalty::new(b, SpinMode::Zeeman).value(g)
}

/// Position of an occupation relative to the kink lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Location {
    /// On lattice point `edge(k)`.
    Edge(u64),
    /// Strictly inside plateau `k`, i.e. `edge(k) < g < edge(k+1)`.
    Interior(u64),
}

/// The penalty for a given field and spin mode.
///
/// For `b = 0` every method falls back to the Thomas-Fermi limit `c·g²`
/// (`c = π`, or `π/2` with spin), which is smooth; its subdifferential is
/// the single slope `2cg` and its fill map `max(0, y/2c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty {
    b: FieldStrength,
    spin: SpinMode,
}

impl Penalty {
    pub fn new(b: FieldStrength, spin: SpinMode) -> Self {
        Penalty { b, spin }
    }

    pub fn field(&self) -> FieldStrength {
        self.b
    }

    pub fn spin(&self) -> SpinMode {
        self.spin
    }

    fn check_g(g: f64) -> Result<()> {
        if g.is_finite() && g >= 0.0 {
            Ok(())
        } else {
            Err(Error::domain("occupation g", "finite and >= 0", g))
        }
    }

    fn require_field(&self) -> Result<f64> {
        if self.b.is_zero() {
            Err(Error::domain("field strength b", "> 0 for Landau levels", 0.0))
        } else {
            Ok(self.b.value())
        }
    }

    /// Occupation `edge(k)` at the left end of plateau `k`.
    ///
    /// Spinless: `k·b/2π`. Spin: `0` for `k = 0`, else `(2k − 1)·b/2π`.
    pub fn edge(&self, k: u64) -> f64 {
        let b = self.b.value();
        match self.spin {
            SpinMode::Spinless => k as f64 * b / TAU,
            SpinMode::Zeeman if k == 0 => 0.0,
            SpinMode::Zeeman => (2 * k - 1) as f64 * b / TAU,
        }
    }

    /// Slope `y_k` of the penalty on plateau `k`: `(2k+1)b/2`, or `kb` with spin.
    pub fn plateau_slope(&self, k: u64) -> f64 {
        let b = self.b.value();
        match self.spin {
            SpinMode::Spinless => (2 * k + 1) as f64 * b / 2.0,
            SpinMode::Zeeman => k as f64 * b,
        }
    }

    pub(crate) fn locate(&self, g: f64) -> Location {
        let x = g / self.b.level_density();
        let tol = KINK_TOL * x.max(1.0);
        match self.spin {
            SpinMode::Spinless => {
                let r = x.round();
                if (x - r).abs() <= tol {
                    Location::Edge(r as u64)
                } else {
                    Location::Interior(x.floor() as u64)
                }
            }
            SpinMode::Zeeman => {
                if x <= tol {
                    return Location::Edge(0);
                }
                let r = ((x + 1.0) / 2.0).round().max(1.0);
                if (x - (2.0 * r - 1.0)).abs() <= tol {
                    Location::Edge(r as u64)
                } else if x < 1.0 {
                    Location::Interior(0)
                } else {
                    Location::Interior(((x + 1.0) / 2.0).floor() as u64)
                }
            }
        }
    }

    /// Lower and upper Thomas-Fermi bounds at `g`:
    /// `πg² ≤ F ≤ πg² + b²/16π`, or `π/2 g² − b²/8π ≤ F^spin ≤ π/2 g²`.
    pub fn bounds(&self, g: f64) -> (f64, f64) {
        let b = self.b.value();
        let tf = self.spin.thomas_fermi() * g * g;
        match self.spin {
            SpinMode::Spinless => (tf, tf + b * b / (16.0 * PI)),
            SpinMode::Zeeman => (tf - b * b / (8.0 * PI), tf),
        }
    }

    /// Penalty value, evaluated through the floor-based closed form.
    pub fn value(&self, g: f64) -> Result<f64> {
        Self::check_g(g)?;
        if self.b.is_zero() {
            return Ok(self.spin.thomas_fermi() * g * g);
        }
        let b = self.b.value();
        let x = g / self.b.level_density();
        Ok(match self.spin {
            SpinMode::Spinless => {
                let k = x.floor();
                b * b / (4.0 * PI) * (x * (1.0 + 2.0 * k) - k - k * k)
            }
            SpinMode::Zeeman => {
                let y = 0.5 * x + 0.5;
                let k = y.floor();
                b * b / TAU * k * (2.0 * y - k - 1.0)
            }
        })
    }

    /// Value and exact one-sided derivatives; `f⁻(0) := 0`.
    pub fn subdiff(&self, g: f64) -> Result<PenaltyEval> {
        let value = self.value(g)?;
        if self.b.is_zero() {
            let slope = 2.0 * self.spin.thomas_fermi() * g;
            return Ok(PenaltyEval {
                value,
                left_slope: slope,
                right_slope: slope,
            });
        }
        let (left_slope, right_slope) = match self.locate(g) {
            Location::Edge(0) => (0.0, self.plateau_slope(0)),
            Location::Edge(k) => (self.plateau_slope(k - 1), self.plateau_slope(k)),
            Location::Interior(k) => (self.plateau_slope(k), self.plateau_slope(k)),
        };
        Ok(PenaltyEval {
            value,
            left_slope,
            right_slope,
        })
    }

    /// Set-valued inverse `h_b(y)` of the subdifferential, extended by `{0}` for `y < 0`.
    pub fn fill(&self, y: f64) -> Result<FillInterval> {
        if !y.is_finite() {
            return Err(Error::domain("gap y", "finite", y));
        }
        if self.b.is_zero() {
            return Ok(FillInterval::point(
                (y / (2.0 * self.spin.thomas_fermi())).max(0.0),
            ));
        }
        let b = self.b.value();
        let t = (y - self.plateau_slope(0)) / b;
        let r = t.round();
        if r >= 0.0 && (t - r).abs() <= KINK_TOL * t.abs().max(1.0) {
            let k = r as u64;
            return Ok(FillInterval {
                lower: self.edge(k),
                upper: self.edge(k + 1),
            });
        }
        if t < 0.0 {
            return Ok(FillInterval::point(0.0));
        }
        Ok(FillInterval::point(self.edge(t.floor() as u64 + 1)))
    }

    /// L∞ distance from `(g, y)` to the graph of the subdifferential.
    ///
    /// Zero iff `y ∈ [f⁻(g), f⁺(g)]` (or `g = 0` and `y ≤ f⁺(0)`, the
    /// extension of `h_b` below zero). Unlike `dist(g, h_b(y))` this is
    /// continuous in `y` across plateau slopes.
    pub fn graph_distance(&self, g: f64, y: f64) -> f64 {
        let p = (g, y);
        if self.b.is_zero() {
            let slope = 2.0 * self.spin.thomas_fermi();
            let far = g.abs() + y.abs() + 1.0;
            let line = linf_segment(p, (0.0, 0.0), (far, slope * far));
            let ray = linf_segment(p, (0.0, -far - y.abs()), (0.0, 0.0));
            return line.min(ray);
        }
        let b = self.b.value();
        let kg = match self.locate(g.max(0.0)) {
            Location::Edge(k) | Location::Interior(k) => k as i64,
        };
        let ky = ((y - self.plateau_slope(0)) / b).floor().max(0.0) as i64;
        let lo = kg.min(ky) - 1;
        let hi = kg.max(ky) + 1;
        let mut best = f64::INFINITY;
        for k in lo.max(0)..=hi {
            let k = k as u64;
            let (e0, e1, yk) = (self.edge(k), self.edge(k + 1), self.plateau_slope(k));
            best = best.min(linf_segment(p, (e0, yk), (e1, yk)));
            let (ylo, x) = if k == 0 {
                (y.min(0.0) - 1.0, 0.0)
            } else {
                (self.plateau_slope(k - 1), e0)
            };
            best = best.min(linf_segment(p, (x, ylo), (x, yk)));
        }
        best
    }

    /// Smooth strictly convex surrogate and its derivative.
    ///
    /// Each kink is replaced by a quadratic on a window of half-width
    /// `δ·b/2π` that matches value and slope at the window edges; the
    /// result is then mixed with the Thomas-Fermi term,
    /// `F^δ = (1 − δ)·F_blend + δ·c g²`, which makes it strictly convex.
    /// The uniform error is at most `δ b²/4π`.
    pub fn smooth(&self, g: f64, s: SmoothingParams) -> Result<(f64, f64)> {
        Self::check_g(g)?;
        let tf = self.spin.thomas_fermi();
        if self.b.is_zero() {
            return Ok((tf * g * g, 2.0 * tf * g));
        }
        let delta = s.delta();
        let (blend, blend_slope) = self.blend(g, delta)?;
        Ok((
            (1.0 - delta) * blend + delta * tf * g * g,
            (1.0 - delta) * blend_slope + delta * 2.0 * tf * g,
        ))
    }

    fn nearest_edge(&self, g: f64) -> u64 {
        let x = g / self.b.level_density();
        match self.spin {
            SpinMode::Spinless => x.round() as u64,
            SpinMode::Zeeman if x < 0.5 => 0,
            SpinMode::Zeeman => ((x + 1.0) / 2.0).round().max(1.0) as u64,
        }
    }

    fn blend(&self, g: f64, delta: f64) -> Result<(f64, f64)> {
        let w = delta * self.b.level_density();
        let k = self.nearest_edge(g);
        let p = self.edge(k);
        if (g - p).abs() < w {
            let left = if k == 0 { 0.0 } else { self.plateau_slope(k - 1) };
            let jump = self.plateau_slope(k) - left;
            let u = g - p + w;
            let value = self.value(p)? + left * (g - p) + jump * u * u / (4.0 * w);
            let slope = left + jump * u / (2.0 * w);
            Ok((value, slope))
        } else {
            let eval = self.subdiff(g)?;
            Ok((eval.value, eval.right_slope))
        }
    }

    /// Unique `g ≥ 0` with `(F^δ)'(g) = y`, or `0` when `y` is below the minimal slope.
    pub fn inverse_smooth_derivative(&self, y: f64, s: SmoothingParams) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::domain("gap y", "finite", y));
        }
        let tf = self.spin.thomas_fermi();
        if self.b.is_zero() {
            return Ok((y / (2.0 * tf)).max(0.0));
        }
        let derivative = |g: f64| self.smooth(g, s).map(|(_, d)| d);
        if y <= derivative(0.0)? {
            return Ok(0.0);
        }
        let mut lo = 0.0_f64;
        // (F^δ)' ≥ 2δ c g, so the root lies below y / (2 δ c).
        let mut hi = y / (2.0 * s.delta() * tf);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if derivative(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Optimal Landau-level fillings for an orbital of occupation `g` (bathtub filling).
    pub fn optimal_levels(&self, g: f64) -> Result<LevelOccupations> {
        Self::check_g(g)?;
        let b = self.require_field()?;
        let x = g / (b / TAU);
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() <= KINK_TOL * v.max(1.0) {
                r
            } else {
                v
            }
        };
        let (full, frac) = match self.spin {
            SpinMode::Spinless => {
                let x = snap(x);
                let k = x.floor();
                (k as usize, x - k)
            }
            SpinMode::Zeeman => {
                let x = snap(x);
                if x < 1.0 {
                    (0, x)
                } else {
                    let y = snap(0.5 * x + 0.5);
                    let k = y.floor();
                    (k as usize, y - k)
                }
            }
        };
        let mut m = vec![1.0; full];
        if frac > 0.0 {
            m.push(frac);
        }
        LevelOccupations::new(m)
    }

    /// Landau-level energy of a filling, `(b/4π) Σ w_n ε_n m(n)`.
    pub fn level_energy_sum(&self, m: &LevelOccupations) -> f64 {
        level_energy_sum(self.b, m, self.spin)
    }
}

/// L∞ distance from point `p` to the segment `[a, c]` in the plane.
fn linf_segment(p: (f64, f64), a: (f64, f64), c: (f64, f64)) -> f64 {
    let (dx, dy) = (c.0 - a.0, c.1 - a.1);
    let (rx, ry) = (p.0 - a.0, p.1 - a.1);
    let at = |s: f64| (rx - s * dx).abs().max((ry - s * dy).abs());
    // The objective is convex piecewise linear in s; its minimum sits at an
    // endpoint, a zero of one component, or where both components balance.
    let mut candidates = [0.0, 1.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN];
    if dx != 0.0 {
        candidates[2] = rx / dx;
    }
    if dy != 0.0 {
        candidates[3] = ry / dy;
    }
    if dx != dy {
        candidates[4] = (rx - ry) / (dx - dy);
    }
    if dx != -dy {
        candidates[5] = (rx + ry) / (dx + dy);
    }
    candidates
        .iter()
        .filter(|s| s.is_finite())
        .map(|&s| at(s.clamp(0.0, 1.0)))
        .fold(f64::INFINITY, f64::min)
}

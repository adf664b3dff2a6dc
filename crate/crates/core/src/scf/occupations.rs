//! Occupation numbers from a spectrum and a chemical potential.

use crate::error::{Error, Result};
use crate::penalty::{FillInterval, Penalty, SmoothingParams};

/// Relative tolerance under which eigenvalues are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

fn check_inputs(eps: &[f64], nu: f64) -> Result<()> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::domain("total charge nu", "finite and > 0", nu));
    }
    if eps.is_empty() {
        return Err(Error::EigenRange {
            requested: 0,
            dimension: 0,
        });
    }
    if eps.windows(2).any(|w| !(w[0] <= w[1])) || eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::State("eigenvalues must be finite and ascending".into()));
    }
    Ok(())
}

/// Chemical potential `λ` and occupations `g_j ∈ h_b(λ − ε_j)` with `Σ g_j = ν`.
///
/// `λ` is the smallest value at which the summed fill intervals reach `ν`.
/// If `ν` falls strictly inside that sum, the slack goes to the lowest
/// eigenvalues first, split equally inside a degenerate group. For `b = 0`
/// the quadratic fill `max(0, (λ − ε)/2c)` is solved in closed form.
pub fn occupations_from_spectrum(penalty: &Penalty, eps: &[f64], nu: f64) -> Result<(f64, Vec<f64>)> {
    check_inputs(eps, nu)?;
    if penalty.field().is_zero() {
        return Ok(water_filling(2.0 * penalty.spin().thomas_fermi(), eps, nu));
    }
    let b = penalty.field().value();
    let scale = eps.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    let groups = degenerate_groups(eps, DEGENERACY_TOL * scale);
    let reps: Vec<f64> = groups.iter().map(|r| eps[r.start]).collect();

    let upper_sum = |lambda: f64| -> Result<f64> {
        let mut s = 0.0;
        for (r, &e) in groups.iter().zip(&reps) {
            s += r.len() as f64 * penalty.fill(lambda - e)?.upper;
        }
        Ok(s)
    };

    let e0 = eps[0];
    let mut lo = e0 + penalty.plateau_slope(0) - b;
    let levels = (std::f64::consts::TAU * nu / b).ceil() + 1.0;
    let mut hi = e0 + penalty.plateau_slope(0) + b * levels;
    debug_assert!(upper_sum(lo)? < nu);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if upper_sum(mid)? >= nu {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // λ is a breakpoint ε + y_k: pick the one that `hi` converged to.
    let mut lambda = hi;
    let mut best = f64::INFINITY;
    for &e in &reps {
        let k = ((hi - e - penalty.plateau_slope(0)) / b).round();
        if k < 0.0 {
            continue;
        }
        let candidate = e + penalty.plateau_slope(k as u64);
        let d = (candidate - hi).abs();
        if d < best {
            best = d;
            lambda = candidate;
        }
    }
    let intervals = fill_groups(penalty, &reps, lambda)?;
    let intervals = if bracket_ok(&groups, &intervals, nu) {
        intervals
    } else {
        lambda = hi;
        fill_groups(penalty, &reps, hi)?
    };
    Ok((lambda, distribute(&groups, &intervals, nu)))
}

fn fill_groups(penalty: &Penalty, reps: &[f64], lambda: f64) -> Result<Vec<FillInterval>> {
    reps.iter().map(|&e| penalty.fill(lambda - e)).collect()
}

fn bracket_ok(groups: &[std::ops::Range<usize>], intervals: &[FillInterval], nu: f64) -> bool {
    let (mut lo, mut hi) = (0.0, 0.0);
    for (r, iv) in groups.iter().zip(intervals) {
        lo += r.len() as f64 * iv.lower;
        hi += r.len() as f64 * iv.upper;
    }
    let tol = 1e-12 * nu;
    lo <= nu + tol && nu <= hi + tol
}

/// Lower ends everywhere, then slack to the lowest groups with room.
fn distribute(groups: &[std::ops::Range<usize>], intervals: &[FillInterval], nu: f64) -> Vec<f64> {
    let n = groups.last().map_or(0, |r| r.end);
    let mut g = vec![0.0; n];
    let mut slack = nu;
    for (r, iv) in groups.iter().zip(intervals) {
        for j in r.clone() {
            g[j] = iv.lower;
        }
        slack -= r.len() as f64 * iv.lower;
    }
    for (r, iv) in groups.iter().zip(intervals) {
        if slack <= 0.0 {
            break;
        }
        let room = iv.width();
        if room <= 0.0 {
            continue;
        }
        let take = (slack / r.len() as f64).min(room);
        for j in r.clone() {
            g[j] += take;
        }
        slack -= take * r.len() as f64;
    }
    // Absorb rounding so that Σ g = ν holds to the last bits.
    if slack != 0.0 {
        if let Some(j) = (0..n).find(|&j| g[j] + slack >= 0.0 && g[j] > 0.0) {
            g[j] += slack;
        }
    }
    g
}

/// Consecutive runs of eigenvalues closer than `tol` to the first of the run.
pub(crate) fn degenerate_groups(eps: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for j in 1..=eps.len() {
        if j == eps.len() || eps[j] - eps[start] > tol {
            groups.push(start..j);
            start = j;
        }
    }
    groups
}

/// `g_j = max(0, (λ − ε_j)/slope)` with `Σ g_j = ν`.
fn water_filling(slope: f64, eps: &[f64], nu: f64) -> (f64, Vec<f64>) {
    let mut sum = 0.0;
    let mut lambda = eps[0] + slope * nu;
    for r in 1..=eps.len() {
        sum += eps[r - 1];
        lambda = (slope * nu + sum) / r as f64;
        if r == eps.len() || lambda <= eps[r] {
            break;
        }
    }
    let mut g: Vec<f64> = eps.iter().map(|&e| ((lambda - e) / slope).max(0.0)).collect();
    let total: f64 = g.iter().sum();
    if let Some(j) = g.iter().position(|&v| v > 0.0) {
        g[j] += nu - total;
    }
    (lambda, g)
}

/// Smoothed filling `g_j = [(F^δ)']⁻¹(λ − ε_j)` with `λ` found by bisection.
pub fn smoothed_occupations(
    penalty: &Penalty,
    smoothing: SmoothingParams,
    eps: &[f64],
    nu: f64,
) -> Result<(f64, Vec<f64>)> {
    check_inputs(eps, nu)?;
    let fill = |lambda: f64| -> Result<Vec<f64>> {
        eps.iter()
            .map(|&e| penalty.inverse_smooth_derivative(lambda - e, smoothing))
            .collect()
    };
    let total = |lambda: f64| fill(lambda).map(|g| g.iter().sum::<f64>());
    let slope_at = |g: f64| penalty.smooth(g, smoothing).map(|(_, d)| d);
    let mut lo = eps[0] + slope_at(0.0)?;
    let mut hi = eps[0] + slope_at(nu)?;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid)? >= nu {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut g = fill(lambda)?;
    let sum: f64 = g.iter().sum();
    if let Some(j) = g.iter().position(|&v| v > 0.0) {
        g[j] = (g[j] + nu - sum).max(0.0);
    }
    Ok((lambda, g))
}

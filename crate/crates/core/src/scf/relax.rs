//! Exact occupation relaxation on a fixed set of orbitals.
//!
//! With the orbitals `ψ_j` held fixed, the energy of `G = Σ g_j |ψ_j⟩⟨ψ_j|`
//! restricted to `Σ g_j = ν` is
//!
//! ```text
//! q(g) = Σ c_j g_j + ½ gᵀ A g + Σ F(g_j)
//! ```
//!
//! with `c_j = ⟨ψ_j, T ψ_j⟩` and `A` the Hartree couplings of the neutral
//! profiles `ψ_j² − μ/ν`. `A` is positive definite, so the minimizer is
//! unique. It is found by a primal active-set method over the linear pieces
//! of `F`: every occupation is either free inside one segment or pinned at
//! a kink.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::penalty::{Location, Penalty};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    /// Inside segment `k`, between kinks `k` and `k + 1`.
    Free(u64),
    /// Pinned at kink `e`.
    Fixed(u64),
}

/// One linear (or, at zero field, quadratic) piece of the penalty.
struct Piece {
    lo: f64,
    hi: f64,
    slope: f64,
    curvature: f64,
}

struct Pieces<'a> {
    penalty: &'a Penalty,
}

impl Pieces<'_> {
    fn zero_field(&self) -> bool {
        self.penalty.field().is_zero()
    }

    fn piece(&self, k: u64) -> Piece {
        if self.zero_field() {
            Piece {
                lo: 0.0,
                hi: f64::INFINITY,
                slope: 0.0,
                curvature: 2.0 * self.penalty.spin().thomas_fermi(),
            }
        } else {
            Piece {
                lo: self.penalty.edge(k),
                hi: self.penalty.edge(k + 1),
                slope: self.penalty.plateau_slope(k),
                curvature: 0.0,
            }
        }
    }

    fn kink(&self, e: u64) -> f64 {
        if self.zero_field() {
            0.0
        } else {
            self.penalty.edge(e)
        }
    }

    /// Admissible range of `λ − s_j` at kink `e`; `g ≥ 0` makes it unbounded below at 0.
    fn kink_slopes(&self, e: u64) -> (f64, f64) {
        let left = if e == 0 {
            f64::NEG_INFINITY
        } else {
            self.penalty.plateau_slope(e - 1)
        };
        let right = if self.zero_field() {
            0.0
        } else {
            self.penalty.plateau_slope(e)
        };
        (left, right)
    }

    fn classify(&self, g: f64) -> Status {
        if self.zero_field() {
            return if g <= 0.0 { Status::Fixed(0) } else { Status::Free(0) };
        }
        match self.penalty.locate(g.max(0.0)) {
            Location::Edge(e) => Status::Fixed(e),
            Location::Interior(k) => Status::Free(k),
        }
    }
}

/// Minimizer of the occupation problem and its multiplier.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Relaxed {
    pub g: Vec<f64>,
    /// Multiplier of `Σ g = ν` in the gauge of `c + A g`.
    pub lambda: f64,
    /// Gradient `c + A g` of the smooth part at the minimizer.
    pub gradient: Vec<f64>,
}

pub(crate) struct OccupationProblem<'a> {
    pub penalty: &'a Penalty,
    pub c: Vec<f64>,
    pub a: DMatrix<f64>,
    pub nu: f64,
}

impl OccupationProblem<'_> {
    fn gradient(&self, g: &[f64]) -> Vec<f64> {
        let gv = DVector::from_column_slice(g);
        let ag = &self.a * gv;
        self.c.iter().zip(ag.iter()).map(|(c, x)| c + x).collect()
    }

    /// Minimizes from a feasible warm start (`Σ warm = ν`, `warm ≥ 0`).
    pub fn solve(&self, warm: &[f64]) -> Result<Relaxed> {
        let m = self.c.len();
        if warm.len() != m || self.a.nrows() != m || self.a.ncols() != m {
            return Err(Error::Shape {
                expected: m,
                actual: warm.len(),
            });
        }
        let pieces = Pieces { penalty: self.penalty };
        let mut g = warm.to_vec();
        let mut status: Vec<Status> = g.iter().map(|&x| pieces.classify(x)).collect();
        for (gj, st) in g.iter_mut().zip(&status) {
            if let Status::Fixed(e) = st {
                *gj = pieces.kink(*e);
            }
        }
        let max_steps = 200_000 + 100 * m;
        for _ in 0..max_steps {
            let free: Vec<usize> = (0..m).filter(|&j| matches!(status[j], Status::Free(_))).collect();
            let s = self.gradient(&g);
            let scale = s
                .iter()
                .fold(1.0_f64, |acc, x| acc.max(x.abs()))
                .max(self.penalty.field().value());
            let tol = 1e-12 * scale;

            if free.is_empty() {
                // The multiplier ranges over an interval; pick its midpoint or
                // move mass between the two most constrained occupations.
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                let (mut arg_lo, mut arg_hi) = (0, 0);
                for j in 0..m {
                    let Status::Fixed(e) = status[j] else { unreachable!() };
                    let (l, r) = pieces.kink_slopes(e);
                    if s[j] + l > lo {
                        lo = s[j] + l;
                        arg_lo = j;
                    }
                    if s[j] + r < hi {
                        hi = s[j] + r;
                        arg_hi = j;
                    }
                }
                if lo <= hi + tol {
                    let lambda = if lo.is_finite() { 0.5 * (lo + hi) } else { hi };
                    return Ok(Relaxed { g, lambda, gradient: s });
                }
                let Status::Fixed(ea) = status[arg_lo] else { unreachable!() };
                let Status::Fixed(eb) = status[arg_hi] else { unreachable!() };
                status[arg_lo] = Status::Free(ea - 1);
                status[arg_hi] = Status::Free(eb);
                continue;
            }

            let (target, lambda) = self.face_minimizer(&pieces, &status, &free, &g)?;
            let mut tau = 1.0;
            let mut blocking: Option<(usize, u64)> = None;
            for (idx, &j) in free.iter().enumerate() {
                let Status::Free(k) = status[j] else { unreachable!() };
                let piece = pieces.piece(k);
                let d = target[idx] - g[j];
                let t = if target[idx] > piece.hi && d > 0.0 {
                    Some(((piece.hi - g[j]) / d, k + 1))
                } else if target[idx] < piece.lo && d < 0.0 {
                    Some(((piece.lo - g[j]) / d, k))
                } else {
                    None
                };
                if let Some((t, e)) = t {
                    let t = t.clamp(0.0, 1.0);
                    if t < tau || blocking.is_none() {
                        tau = t;
                        blocking = Some((j, e));
                    }
                }
            }
            match blocking {
                Some((jb, e)) => {
                    for (idx, &j) in free.iter().enumerate() {
                        g[j] += tau * (target[idx] - g[j]);
                    }
                    g[jb] = pieces.kink(e);
                    status[jb] = Status::Fixed(e);
                }
                None => {
                    for (idx, &j) in free.iter().enumerate() {
                        let Status::Free(k) = status[j] else { unreachable!() };
                        let piece = pieces.piece(k);
                        g[j] = target[idx].clamp(piece.lo, piece.hi);
                    }
                    let s = self.gradient(&g);
                    let mut worst = tol;
                    let mut release: Option<(usize, Status)> = None;
                    for j in 0..m {
                        let Status::Fixed(e) = status[j] else { continue };
                        let (l, r) = pieces.kink_slopes(e);
                        let v = lambda - s[j];
                        if v - r > worst {
                            worst = v - r;
                            release = Some((j, Status::Free(e)));
                        } else if l - v > worst {
                            worst = l - v;
                            release = Some((j, Status::Free(e - 1)));
                        }
                    }
                    match release {
                        Some((j, st)) => status[j] = st,
                        None => return Ok(Relaxed { g, lambda, gradient: s }),
                    }
                }
            }
        }
        Err(Error::State("occupation relaxation did not terminate".into()))
    }

    /// Solves the equality-constrained problem with free occupations
    /// unrestricted inside their pieces.
    fn face_minimizer(
        &self,
        pieces: &Pieces<'_>,
        status: &[Status],
        free: &[usize],
        g: &[f64],
    ) -> Result<(Vec<f64>, f64)> {
        let nf = free.len();
        let mut fixed_sum = 0.0;
        let mut is_free = vec![false; g.len()];
        for &j in free {
            is_free[j] = true;
        }
        for (j, &gj) in g.iter().enumerate() {
            if !is_free[j] {
                fixed_sum += gj;
            }
        }
        let mut kkt = DMatrix::<f64>::zeros(nf + 1, nf + 1);
        let mut rhs = DVector::<f64>::zeros(nf + 1);
        for (r, &j) in free.iter().enumerate() {
            let Status::Free(k) = status[j] else { unreachable!() };
            let piece = pieces.piece(k);
            for (c, &i) in free.iter().enumerate() {
                kkt[(r, c)] = self.a[(j, i)];
            }
            kkt[(r, r)] += piece.curvature;
            kkt[(r, nf)] = -1.0;
            kkt[(nf, r)] = 1.0;
            let mut b = -self.c[j] - piece.slope;
            for (i, &gi) in g.iter().enumerate() {
                if !is_free[i] {
                    b -= self.a[(j, i)] * gi;
                }
            }
            rhs[r] = b;
        }
        rhs[nf] = self.nu - fixed_sum;
        let lu = kkt.clone().lu();
        let sol = match lu.solve(&rhs) {
            Some(x) if x.iter().all(|v| v.is_finite()) => x,
            _ => {
                let ridge = 1e-14 * self.a.diagonal().amax().max(1.0);
                for r in 0..nf {
                    kkt[(r, r)] += ridge;
                }
                kkt.lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::State("singular occupation system".into()))?
            }
        };
        Ok((sol.rows(0, nf).iter().copied().collect(), sol[nf]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::{FieldStrength, SpinMode};

    fn problem(penalty: &Penalty, c: Vec<f64>, a: DMatrix<f64>, nu: f64) -> OccupationProblem<'_> {
        OccupationProblem { penalty, c, a, nu }
    }

    fn objective(p: &OccupationProblem<'_>, g: &[f64]) -> f64 {
        let gv = DVector::from_column_slice(g);
        let quad = 0.5 * gv.dot(&(&p.a * &gv));
        let lin: f64 = p.c.iter().zip(g).map(|(c, x)| c * x).sum();
        let pen: f64 = g.iter().map(|&x| p.penalty.value(x).unwrap()).sum();
        lin + quad + pen
    }

    fn check_kkt(p: &OccupationProblem<'_>, r: &Relaxed) {
        let sum: f64 = r.g.iter().sum();
        assert!((sum - p.nu).abs() < 1e-12);
        for (j, &gj) in r.g.iter().enumerate() {
            assert!(gj >= 0.0);
            let y = r.lambda - r.gradient[j];
            assert!(p.penalty.graph_distance(gj, y) < 1e-10, "j={j} g={gj} y={y}");
        }
    }

    #[test]
    fn zero_coupling_reduces_to_filling() {
        let pen = Penalty::new(FieldStrength::new(1.0).unwrap(), SpinMode::Spinless);
        let p = problem(&pen, vec![0.0, 0.3, 2.0], DMatrix::zeros(3, 3), 0.5);
        let r = p.solve(&[0.5, 0.0, 0.0]).unwrap();
        check_kkt(&p, &r);
    }

    #[test]
    fn coupled_problem_beats_perturbations() {
        let pen = Penalty::new(FieldStrength::new(0.4).unwrap(), SpinMode::Spinless);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.5, 0.3, 0.1, 0.3, 1.0]);
        let p = problem(&pen, vec![-0.2, 0.1, 0.4], a, 1.0);
        let r = p.solve(&[1.0, 0.0, 0.0]).unwrap();
        check_kkt(&p, &r);
        let best = objective(&p, &r.g);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (1, 0), (2, 0)] {
            for t in [1e-3_f64, 1e-2, 0.1] {
                let mut g = r.g.clone();
                let d = t.min(g[i]);
                g[i] -= d;
                g[j] += d;
                assert!(objective(&p, &g) >= best - 1e-13);
            }
        }
    }

    #[test]
    fn zero_field_quadratic() {
        let pen = Penalty::new(FieldStrength::ZERO, SpinMode::Spinless);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]);
        let p = problem(&pen, vec![0.0, 0.5], a, 1.0);
        let r = p.solve(&[1.0, 0.0]).unwrap();
        check_kkt(&p, &r);
        assert!(r.g[1] > 0.0);
    }

    #[test]
    fn spin_ladder() {
        let pen = Penalty::new(FieldStrength::new(0.3).unwrap(), SpinMode::Zeeman);
        let a = DMatrix::from_row_slice(2, 2, &[0.7, 0.1, 0.1, 0.9]);
        let p = problem(&pen, vec![0.0, 0.05], a, 0.8);
        let r = p.solve(&[0.8, 0.0]).unwrap();
        check_kkt(&p, &r);
    }
}

//! Density mixing: linear damping, optionally accelerated by Anderson extrapolation.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// Anderson (type II) mixing on quadrature-weighted densities.
///
/// With `depth = 0` this is plain linear mixing `x ← x + α r`.
pub(crate) struct Mixer {
    alpha: f64,
    depth: usize,
    weights: Vec<f64>,
    previous: Option<(Vec<f64>, Vec<f64>)>,
    dx: VecDeque<Vec<f64>>,
    dr: VecDeque<Vec<f64>>,
}

impl Mixer {
    pub fn new(alpha: f64, depth: usize, weights: Vec<f64>) -> Self {
        Mixer {
            alpha,
            depth,
            weights,
            previous: None,
            dx: VecDeque::new(),
            dr: VecDeque::new(),
        }
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| w * x * y)
            .sum()
    }

    pub fn reset(&mut self) {
        self.previous = None;
        self.dx.clear();
        self.dr.clear();
    }

    /// Next input from the current input `x` and residual `r = F(x) − x`.
    pub fn next(&mut self, x: &[f64], r: &[f64]) -> Vec<f64> {
        let alpha = self.alpha;
        if self.depth == 0 {
            return x.iter().zip(r).map(|(a, b)| a + alpha * b).collect();
        }
        if let Some((px, pr)) = self.previous.take() {
            self.dx.push_back(x.iter().zip(&px).map(|(a, b)| a - b).collect());
            self.dr.push_back(r.iter().zip(&pr).map(|(a, b)| a - b).collect());
            if self.dx.len() > self.depth {
                self.dx.pop_front();
                self.dr.pop_front();
            }
        }
        self.previous = Some((x.to_vec(), r.to_vec()));
        let mut out: Vec<f64> = x.iter().zip(r).map(|(a, b)| a + alpha * b).collect();
        let k = self.dr.len();
        if k == 0 {
            return out;
        }
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            for j in 0..=i {
                let v = self.dot(&self.dr[i], &self.dr[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            rhs[i] = self.dot(&self.dr[i], r);
        }
        let ridge = 1e-12 * gram.diagonal().amax().max(f64::MIN_POSITIVE);
        for i in 0..k {
            gram[(i, i)] += ridge;
        }
        let Some(gamma) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            self.reset();
            return out;
        };
        for i in 0..k {
            let gi = gamma[i];
            for ((o, dx), dr) in out.iter_mut().zip(&self.dx[i]).zip(&self.dr[i]) {
                *o -= gi * (dx + alpha * dr);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_mixing_without_history() {
        let mut m = Mixer::new(0.5, 0, vec![1.0; 2]);
        assert_eq!(m.next(&[1.0, 2.0], &[2.0, -2.0]), vec![2.0, 1.0]);
    }

    #[test]
    fn anderson_solves_linear_fixed_point() {
        // F(x) = M x + c with a stiff contraction-free M.
        let mmat = [[-5.0, 1.0], [0.5, -20.0]];
        let c = [1.0, 2.0];
        let f = |x: &[f64]| -> Vec<f64> {
            (0..2)
                .map(|i| mmat[i][0] * x[0] + mmat[i][1] * x[1] + c[i])
                .collect()
        };
        let mut mixer = Mixer::new(0.05, 5, vec![1.0; 2]);
        let mut x = vec![0.0, 0.0];
        for _ in 0..40 {
            let fx = f(&x);
            let r: Vec<f64> = fx.iter().zip(&x).map(|(a, b)| a - b).collect();
            if r.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-13 {
                break;
            }
            x = mixer.next(&x, &r);
        }
        let fx = f(&x);
        assert!((fx[0] - x[0]).abs() < 1e-10 && (fx[1] - x[1]).abs() < 1e-10);
    }
}

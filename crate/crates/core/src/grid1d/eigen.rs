//! Lowest eigenpairs of a symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
//! iteration with a pivoted LU factorization of `T − λI`. Each vector is
//! reorthogonalized against the ones already found, which keeps nearly
//! degenerate pairs orthogonal.

const INVERSE_ITERATIONS: usize = 3;

/// Returns the `k` smallest eigenvalues (ascending) and unit eigenvectors.
pub(super) fn lowest(d: &[f64], e: &[f64], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = d.len();
    let norm = (0..n)
        .map(|i| {
            d[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let emax2 = e.iter().fold(0.0_f64, |m, x| m.max(x * x));
    let pivmin = f64::MIN_POSITIVE * emax2.max(1.0);

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 2.0 * f64::EPSILON * norm + pivmin;
    lo -= pad;
    hi += pad;

    let mut values = Vec::with_capacity(k);
    let mut left = lo;
    for i in 0..k {
        let v = bisect(d, e, i, left, hi, pivmin);
        values.push(v);
        left = v - pad;
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &lambda in &values {
        let lu = TridiagonalLu::factor(d, e, lambda, norm);
        let mut x = start_vector(n);
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve(&mut x);
            orthogonalize(&mut x, &vectors);
            normalize(&mut x);
        }
        fix_sign(&mut x);
        vectors.push(x);
    }
    (values, vectors)
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - x - e[i - 1] * e[i - 1] / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalue `index` (0-based) by bisection on `[lo, hi]`.
fn bisect(d: &[f64], e: &[f64], index: usize, mut lo: f64, mut hi: f64, pivmin: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pivmin;
        if hi - lo <= tol {
            break;
        }
        if sturm_count(d, e, mid, pivmin) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn start_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect()
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for v in basis {
            let c: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi -= c * vi;
            }
        }
    }
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        x[0] = 1.0;
        return;
    }
    let norm = scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
}

fn fix_sign(x: &mut [f64]) {
    let tol = 1e-10 * x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > tol) {
        if *first < 0.0 {
            for v in x.iter_mut() {
                *v = -*v;
            }
        }
    }
}

/// LU factorization with partial pivoting of `T − σI`.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    pivot: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], sigma: f64, norm: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - sigma).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut pivot = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                pivot[i] = true;
            }
        }
        // σ is an eigenvalue to working precision, so exact zero pivots can occur.
        let tiny = f64::EPSILON * norm;
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagonalLu { dl, d, du, du2, pivot }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.pivot[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        // Rescale to avoid overflow when σ sits on an eigenvalue.
        let m = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m > 0.0 && m.is_finite() {
            for v in b.iter_mut() {
                *v /= m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let (v, x) = lowest(&[2.0, 2.0], &[1.0], 2);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
        let s = 0.5_f64.sqrt();
        assert!((x[0][0] - s).abs() < 1e-14 && (x[0][1] + s).abs() < 1e-14);
        assert!((x[1][0] - s).abs() < 1e-14 && (x[1][1] - s).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let (v, x) = lowest(&[4.0], &[], 1);
        assert!((v[0] - 4.0).abs() <= 4.0 * f64::EPSILON * 4.0);
        assert_eq!(x, vec![vec![1.0]]);
    }

    #[test]
    fn lu_solves_general_system() {
        let d = [1.0, -2.0, 0.5, 3.0, 1e-3];
        let e = [4.0, 0.1, -2.0, 7.0];
        let lu = TridiagonalLu::factor(&d, &e, 0.3, 10.0);
        let x_true = [1.0, -1.0, 2.0, 0.5, 3.0];
        let mut b: Vec<f64> = (0..5)
            .map(|i| {
                let mut y = (d[i] - 0.3) * x_true[i];
                if i > 0 {
                    y += e[i - 1] * x_true[i - 1];
                }
                if i < 4 {
                    y += e[i] * x_true[i + 1];
                }
                y
            })
            .collect();
        lu.solve(&mut b);
        // `solve` rescales by the max entry; compare directions.
        let ratio = x_true[4] / b[4];
        for i in 0..5 {
            assert!((b[i] * ratio - x_true[i]).abs() < 1e-12);
        }
    }
}

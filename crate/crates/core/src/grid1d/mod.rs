//! Uniform grid on `[−L/2, L/2]`, grid functions, and symmetric tridiagonal operators.
//!
//! Functions vanish at both ends of the box. Operators therefore act on the
//! `npoints − 2` interior nodes only, and eigenvectors are returned padded
//! with the two zero boundary values.

mod eigen;

use crate::error::{Error, Result};

/// Uniform symmetric grid. `npoints` is odd so that `x = 0` is a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    half_length: f64,
    npoints: usize,
}

impl Grid {
    /// Grid of total length `length` with `npoints` nodes (odd, at least 3).
    pub fn new(length: f64, npoints: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("length must be positive and finite, got {length}")));
        }
        if npoints < 3 || npoints.is_multiple_of(2) {
            return Err(Error::Grid(format!("npoints must be odd and at least 3, got {npoints}")));
        }
        Ok(Grid {
            half_length: 0.5 * length,
            npoints,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn npoints(&self) -> usize {
        self.npoints
    }

    /// Number of interior nodes, the dimension of every operator on this grid.
    pub fn interior_len(&self) -> usize {
        self.npoints - 2
    }

    pub fn spacing(&self) -> f64 {
        self.length() / (self.npoints - 1) as f64
    }

    /// Index of the node at `x = 0`.
    pub fn center_index(&self) -> usize {
        self.npoints / 2
    }

    pub fn node(&self, i: usize) -> f64 {
        let c = self.center_index() as f64;
        (i as f64 - c) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.npoints).map(|i| self.node(i)).collect()
    }

    /// Trapezoidal rule for `∫ f dx` over the box.
    pub fn quadrature(&self, values: &[f64]) -> f64 {
        let n = values.len();
        if n < 2 {
            return 0.0;
        }
        let inner: f64 = values[1..n - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction {
            grid: *self,
            values: vec![0.0; self.npoints],
        }
    }

    pub fn from_fn(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.npoints).map(|i| f(self.node(i))).collect(),
        }
    }

    /// `−½ d²/dx²` with the three-point stencil on interior nodes.
    pub fn kinetic_operator(&self) -> TridiagonalOperator {
        let h2 = self.spacing() * self.spacing();
        let m = self.interior_len();
        TridiagonalOperator {
            diagonal: vec![1.0 / h2; m],
            offdiagonal: vec![-0.5 / h2; m.saturating_sub(1)],
        }
    }

    /// Second difference `(f[i−1] − 2f[i] + f[i+1]) / h²` at interior nodes.
    pub fn second_difference(&self, values: &[f64]) -> Vec<f64> {
        let h2 = self.spacing() * self.spacing();
        values
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]) / h2)
            .collect()
    }
}

/// Values sampled at every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.npoints() {
            return Err(Error::Shape {
                expected: grid.npoints(),
                actual: values.len(),
            });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integral(&self) -> f64 {
        self.grid.quadrature(&self.values)
    }

    /// `∫ f g dx` by the trapezoidal rule.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        self.check_same(other)?;
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(self.grid.quadrature(&prod))
    }

    pub fn l1_norm(&self) -> f64 {
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        self.grid.quadrature(&abs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `f(self, other)`.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_same(other)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape {
                expected: self.grid.npoints(),
                actual: other.grid.npoints(),
            });
        }
        Ok(())
    }

    /// Interior values, the coordinates operators act on.
    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }
}

/// Lowest eigenvalues in ascending order with quadrature-normalized eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<GridFunction>,
}

/// Real symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    diagonal: Vec<f64>,
    offdiagonal: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diagonal: Vec<f64>, offdiagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() || offdiagonal.len() + 1 != diagonal.len() {
            return Err(Error::Shape {
                expected: diagonal.len().saturating_sub(1),
                actual: offdiagonal.len(),
            });
        }
        Ok(TridiagonalOperator {
            diagonal,
            offdiagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn offdiagonal(&self) -> &[f64] {
        &self.offdiagonal
    }

    /// Adds the interior values of `v` to the diagonal.
    pub fn add_potential(&self, v: &GridFunction) -> Result<Self> {
        if v.len() != self.dim() + 2 {
            return Err(Error::Shape {
                expected: self.dim() + 2,
                actual: v.len(),
            });
        }
        let diagonal = self
            .diagonal
            .iter()
            .zip(v.interior())
            .map(|(d, p)| d + p)
            .collect();
        Ok(TridiagonalOperator {
            diagonal,
            offdiagonal: self.offdiagonal.clone(),
        })
    }

    /// Matrix-vector product on an interior-length vector.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Shape {
                expected: n,
                actual: x.len(),
            });
        }
        let (d, e) = (&self.diagonal, &self.offdiagonal);
        Ok((0..n)
            .map(|i| {
                let mut y = d[i] * x[i];
                if i > 0 {
                    y += e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += e[i] * x[i + 1];
                }
                y
            })
            .collect())
    }

    /// `∫ a (H b) dx` for grid functions vanishing at the box ends.
    pub fn matrix_element(&self, a: &GridFunction, b: &GridFunction) -> Result<f64> {
        a.check_same(b)?;
        let hb = self.apply(b.interior())?;
        let s: f64 = a.interior().iter().zip(&hb).map(|(x, y)| x * y).sum();
        Ok(a.grid().spacing() * s)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut r = self.diagonal[i].abs();
                if i > 0 {
                    r += self.offdiagonal[i - 1].abs();
                }
                if i + 1 < n {
                    r += self.offdiagonal[i].abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Lowest `k` eigenpairs; eigenvectors live on `grid` with zero boundary values.
    pub fn eigensolve(&self, grid: &Grid, k: usize) -> Result<Eigenpairs> {
        if grid.interior_len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                actual: grid.interior_len(),
            });
        }
        if k == 0 || k > self.dim() {
            return Err(Error::EigenRange {
                requested: k,
                dimension: self.dim(),
            });
        }
        let (values, raw) = eigen::lowest(&self.diagonal, &self.offdiagonal, k);
        let scale = 1.0 / grid.spacing().sqrt();
        let vectors = raw
            .into_iter()
            .map(|v| {
                let mut values = Vec::with_capacity(grid.npoints());
                values.push(0.0);
                values.extend(v.iter().map(|x| x * scale));
                values.push(0.0);
                GridFunction { grid: *grid, values }
            })
            .collect();
        Ok(Eigenpairs { values, vectors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_examples() {
        let g = Grid::new(2.0, 3).unwrap();
        assert_eq!(g.nodes(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(Grid::new(10.0, 5).unwrap().spacing(), 2.5);
        assert!(Grid::new(1.0, 2).is_err());
        assert!(Grid::new(1.0, 4).is_err());
        assert!(Grid::new(0.0, 5).is_err());
        assert!(Grid::new(-1.0, 5).is_err());
    }

    #[test]
    fn nodes_symmetric() {
        let g = Grid::new(7.3, 101).unwrap();
        let x = g.nodes();
        assert_eq!(x[g.center_index()], 0.0);
        for i in 0..x.len() {
            assert!((x[i] + x[x.len() - 1 - i]).abs() < 1e-14);
        }
        assert!((x[0] + 3.65).abs() < 1e-14);
    }

    #[test]
    fn quadrature_examples() {
        let g = Grid::new(2.0, 3).unwrap();
        assert_eq!(g.from_fn(|_| 1.0).integral(), 2.0);
        let g = Grid::new(2.0, 201).unwrap();
        assert!(g.from_fn(|x| x).integral().abs() < 1e-15);
        assert!((g.from_fn(|x| x * x).integral() - 2.0 / 3.0).abs() < 1e-4);
        assert!((g.from_fn(|x| 3.0 * x + 2.0).integral() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn kinetic_stencil() {
        let g = Grid::new(2.0, 3).unwrap();
        let t = g.kinetic_operator();
        assert_eq!(t.diagonal(), &[1.0]);
        let g = Grid::new(4.0, 5).unwrap();
        let t = g.kinetic_operator();
        assert_eq!(t.diagonal(), &[1.0, 1.0, 1.0]);
        assert_eq!(t.offdiagonal(), &[-0.5, -0.5]);
        let lin = g.from_fn(|x| 2.0 * x - 1.0);
        assert!(g.second_difference(lin.values()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn box_ground_state() {
        let l = 3.0;
        let g = Grid::new(l, 401).unwrap();
        let e = g.kinetic_operator().eigensolve(&g, 3).unwrap();
        for (n, &v) in e.values.iter().enumerate() {
            let exact = PI * PI * ((n + 1) * (n + 1)) as f64 / (2.0 * l * l);
            assert!((v - exact).abs() < 1e-3 * exact);
        }
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let g = Grid::new(5.0, 51).unwrap();
        let t = g.kinetic_operator();
        let a = t.eigensolve(&g, 5).unwrap();
        let same = t.add_potential(&g.zeros()).unwrap();
        assert_eq!(same, t);
        let b = t.add_potential(&g.from_fn(|_| 2.5)).unwrap().eigensolve(&g, 5).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((y - x - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let g = Grid::new(16.0, 1601).unwrap();
        let h = g.kinetic_operator().add_potential(&g.from_fn(|x| 0.5 * x * x)).unwrap();
        let e = h.eigensolve(&g, 2).unwrap();
        assert!((e.values[0] - 0.5).abs() < 1e-3);
        assert!((e.values[1] - 1.5).abs() < 1e-3);
    }

    #[test]
    fn add_potential_shape_mismatch() {
        let g = Grid::new(5.0, 51).unwrap();
        let other = Grid::new(5.0, 53).unwrap();
        assert!(g.kinetic_operator().add_potential(&other.zeros()).is_err());
    }

    #[test]
    fn eigensolve_range() {
        let g = Grid::new(5.0, 11).unwrap();
        let t = g.kinetic_operator();
        assert!(t.eigensolve(&g, 0).is_err());
        assert!(t.eigensolve(&g, 10).is_err());
        assert!(t.eigensolve(&g, 9).is_ok());
    }

    #[test]
    fn full_spectrum_trace_and_orthonormality() {
        let g = Grid::new(4.0, 41).unwrap();
        let h = g
            .kinetic_operator()
            .add_potential(&g.from_fn(|x| (3.0 * x).sin() + x * x))
            .unwrap();
        let e = h.eigensolve(&g, h.dim()).unwrap();
        let trace: f64 = h.diagonal().iter().sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-8);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for i in 0..e.vectors.len() {
            for j in 0..e.vectors.len() {
                let d = e.vectors[i].dot(&e.vectors[j]).unwrap();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((d - target).abs() < 1e-10, "({i},{j}) {d}");
            }
        }
        let norm = h.norm();
        for (v, psi) in e.values.iter().zip(&e.vectors) {
            let hp = h.apply(psi.interior()).unwrap();
            let r = hp
                .iter()
                .zip(psi.interior())
                .map(|(a, b)| (a - v * b).abs())
                .fold(0.0, f64::max);
            assert!(r <= 1e-10 * norm * psi.max_abs());
        }
    }

    #[test]
    fn eigenvector_sign_convention() {
        let g = Grid::new(4.0, 41).unwrap();
        let e = g.kinetic_operator().eigensolve(&g, 6).unwrap();
        for psi in &e.vectors {
            let tol = 1e-10 * psi.max_abs();
            let first = psi.values().iter().find(|v| v.abs() > tol).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn box_convergence_is_second_order() {
        let l = 2.0;
        let exact = PI * PI / (2.0 * l * l);
        let err = |n: usize| {
            let g = Grid::new(l, n).unwrap();
            g.kinetic_operator().eigensolve(&g, 1).unwrap().values[0] - exact
        };
        let (e1, e2, e3) = (err(51), err(101), err(201));
        let r1 = (e1 / e2).abs().log2();
        let r2 = (e2 / e3).abs().log2();
        assert!((1.9..2.1).contains(&r1) && (1.9..2.1).contains(&r2), "{r1} {r2}");
    }
}

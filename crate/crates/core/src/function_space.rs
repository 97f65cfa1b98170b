//! Discretized `L²[0,1]` primitives.
//!
//! Every function lives on a right-endpoint uniform grid `t_j = j/T`,
//! `j = 1..T`, and every integral is the Riemann sum with weight `1/T`.
//! With this rule projection onto a discretely orthonormal basis and
//! reconstruction from coefficients are exact inverses of each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `j/T`, `j = 1..T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    len: usize,
}

impl Grid {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Argument("grid needs at least one point".into()));
        }
        Ok(Self { len })
    }

    /// Number of grid points `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Quadrature weight `1/T`.
    #[inline]
    pub fn weight(&self) -> f64 {
        1.0 / self.len as f64
    }

    /// The `j`-th point, zero based: `(j + 1) / T`.
    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        (j + 1) as f64 / self.len as f64
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |j| self.point(j))
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::Dimension(format!(
                "grid with {} points vs grid with {} points",
                self.len, other.len
            )));
        }
        Ok(())
    }
}

/// A real function on `[0,1]` sampled at the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Grid,
    values: Vec<f64>,
}

impl Curve {
    /// Wraps sampled values. All values must be finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "curve has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite curve value at index {j}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(grid, grid.points().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Curve {
        Curve::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise square, `x²(t)`.
    pub fn squared(&self) -> Curve {
        self.map(|v| v * v)
    }

    pub fn scaled(&self, c: f64) -> Curve {
        self.map(|v| c * v)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Curve) -> Result<Curve> {
        self.grid.check_same(&other.grid)?;
        Ok(Curve::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.axpy(-1.0, other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Curve) -> Result<Curve> {
        self.grid.check_same(&other.grid)?;
        Ok(Curve::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        ))
    }

    /// Pointwise mean of a non-empty sample.
    pub fn mean(sample: &[Curve]) -> Result<Curve> {
        let first = sample
            .first()
            .ok_or_else(|| Error::Argument("mean of an empty sample".into()))?;
        let mut acc = vec![0.0; first.grid.len()];
        for c in sample {
            first.grid.check_same(&c.grid)?;
            for (a, v) in acc.iter_mut().zip(&c.values) {
                *a += v;
            }
        }
        let inv = 1.0 / sample.len() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(Curve::from_raw(first.grid, acc))
    }
}

/// A bivariate kernel `K(t,s)` on the grid, stored row-major:
/// entry `(j,k)` is `K(t_j, t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    grid: Grid,
    values: Vec<f64>,
}

impl Kernel2D {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let t = grid.len();
        if values.len() != t * t {
            return Err(Error::Dimension(format!(
                "kernel has {} entries, expected {}x{}",
                values.len(),
                t,
                t
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite kernel entry at ({}, {})",
                i / t,
                i % t
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let t = grid.len();
        let mut values = Vec::with_capacity(t * t);
        for j in 0..t {
            let tj = grid.point(j);
            values.extend(grid.points().map(|sk| f(tj, sk)));
        }
        Self::from_raw(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len() * grid.len()])
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Row-major entries.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.grid.len() + k]
    }

    /// Row `j`, i.e. `K(t_j, ·)`.
    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        let t = self.grid.len();
        &self.values[j * t..(j + 1) * t]
    }

    pub fn scaled(&self, c: f64) -> Kernel2D {
        Kernel2D::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Kernel2D) -> Result<Kernel2D> {
        self.grid.check_same(&other.grid)?;
        Ok(Kernel2D::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `⟨f, g⟩ = (1/T) Σ_j f(t_j) g(t_j)`.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(dot(&f.values, &g.values) * f.grid.weight())
}

pub fn l2_norm(f: &Curve) -> f64 {
    (dot(&f.values, &f.values) * f.grid.weight()).sqrt()
}

/// `max_j |f(t_j)|`.
pub fn sup_norm(f: &Curve) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Hilbert–Schmidt norm `sqrt((1/T²) Σ_{j,k} K(t_j,t_k)²)`.
pub fn hs_norm(k: &Kernel2D) -> f64 {
    dot(&k.values, &k.values).sqrt() * k.grid.weight()
}

/// Integral operator: `g(t_j) = (1/T) Σ_k K(t_j,t_k) f(t_k)`.
pub fn apply_kernel(k: &Kernel2D, f: &Curve) -> Result<Curve> {
    k.grid.check_same(&f.grid)?;
    let w = k.grid.weight();
    let t = k.grid.len();
    let values = k
        .values
        .chunks_exact(t)
        .map(|row| dot(row, &f.values) * w)
        .collect();
    Ok(Curve::from_raw(k.grid, values))
}

/// `c(t_j) = (1/T) Σ_k K(t_j,t_k)`, the kernel applied to the constant one.
pub fn row_integrate(k: &Kernel2D) -> Curve {
    let w = k.grid.weight();
    let t = k.grid.len();
    let values = k
        .values
        .chunks_exact(t)
        .map(|row| row.iter().sum::<f64>() * w)
        .collect();
    Curve::from_raw(k.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(t: usize) -> Grid {
        Grid::new(t).unwrap()
    }

    fn phi1(t: f64) -> f64 {
        30f64.sqrt() * t * (1.0 - t)
    }

    #[test]
    fn grid_points_are_right_endpoints() {
        let g = grid(285);
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts.len(), 285);
        assert_eq!(pts[0], 1.0 / 285.0);
        assert_eq!(pts[284], 1.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let g = grid(285);
        let p = Curve::from_fn(g, phi1);
        assert_abs_diff_eq!(inner_product(&p, &p).unwrap(), 1.0, epsilon = 1e-4);
        let z = Curve::zeros(g);
        assert_eq!(inner_product(&z, &p).unwrap(), 0.0);
        let one = Curve::constant(g, 1.0);
        assert_eq!(inner_product(&one, &one).unwrap(), 1.0);
    }

    #[test]
    fn grid_mismatch_is_dimension_error() {
        let a = Curve::zeros(grid(10));
        let b = Curve::zeros(grid(11));
        assert!(matches!(inner_product(&a, &b), Err(Error::Dimension(_))));
        let k = Kernel2D::zeros(grid(11));
        assert!(matches!(apply_kernel(&k, &a), Err(Error::Dimension(_))));
    }

    #[test]
    fn curve_rejects_non_finite_and_bad_length() {
        let g = grid(3);
        assert!(Curve::new(g, vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(Curve::new(g, vec![1.0]).is_err());
        assert!(Kernel2D::new(g, vec![0.0; 8]).is_err());
    }

    #[test]
    fn norms() {
        let g = grid(285);
        assert_abs_diff_eq!(l2_norm(&Curve::from_fn(g, phi1)), 1.0, epsilon = 1e-4);
        assert_eq!(l2_norm(&Curve::zeros(g)), 0.0);
        assert_abs_diff_eq!(l2_norm(&Curve::constant(g, -2.5)), 2.5, epsilon = 1e-14);

        let bump = Curve::from_fn(g, |t| 4.0 * t * (1.0 - t));
        // nearest grid point to 1/2 is 142/285 or 143/285
        let tstar = 142.0 / 285.0;
        assert_abs_diff_eq!(sup_norm(&bump), 4.0 * tstar * (1.0 - tstar), epsilon = 1e-15);
        assert!(sup_norm(&bump) >= 0.9999);
        assert_eq!(sup_norm(&Curve::zeros(g)), 0.0);
        assert_eq!(sup_norm(&Curve::constant(g, -3.0)), 3.0);
    }

    #[test]
    fn hs_norm_examples() {
        let g = grid(285);
        let k = |c: f64| Kernel2D::from_fn(g, move |t, s| c * t * (1.0 - t) * s * (1.0 - s));
        assert_abs_diff_eq!(hs_norm(&k(12.0)), 0.4, epsilon = 1e-3);
        assert_abs_diff_eq!(hs_norm(&k(24.0)), 0.8, epsilon = 2e-3);
        assert_eq!(hs_norm(&Kernel2D::zeros(g)), 0.0);
    }

    #[test]
    fn apply_kernel_examples() {
        let g = grid(285);
        let k = Kernel2D::from_fn(g, |t, s| 12.0 * t * (1.0 - t) * s * (1.0 - s));
        let out = apply_kernel(&k, &Curve::constant(g, 1.0)).unwrap();
        for (x, t) in out.values().iter().zip(g.points()) {
            assert_abs_diff_eq!(*x, 2.0 * t * (1.0 - t), epsilon = 1e-4);
        }
        let z = apply_kernel(&Kernel2D::zeros(g), &Curve::constant(g, 1.0)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let proj = Kernel2D::from_fn(g, |t, s| phi1(t) * phi1(s));
        let p = Curve::from_fn(g, phi1);
        let out = apply_kernel(&proj, &p).unwrap();
        for (a, b) in out.values().iter().zip(p.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-3);
        }
    }

    #[test]
    fn row_integrate_examples() {
        let g = grid(285);
        let k = Kernel2D::from_fn(g, |t, s| 24.0 * t * (1.0 - t) * s * (1.0 - s));
        let c = row_integrate(&k);
        for (x, t) in c.values().iter().zip(g.points()) {
            assert_abs_diff_eq!(*x, 4.0 * t * (1.0 - t), epsilon = 1e-4);
        }
        assert_abs_diff_eq!(sup_norm(&c), 1.0, epsilon = 1e-3);
        assert!(row_integrate(&Kernel2D::zeros(g)).values().iter().all(|&v| v == 0.0));
        let ones = row_integrate(&Kernel2D::from_fn(g, |_, _| 1.0));
        assert!(ones.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let applied = apply_kernel(&k, &Curve::constant(g, 1.0)).unwrap();
        for (a, b) in c.values().iter().zip(applied.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn quadrature_consistency_for_endpoint_vanishing_cubics() {
        // exact integrals via Beta functions
        let cases: [(fn(f64) -> f64, f64); 3] = [
            (|t| t * (1.0 - t), 1.0 / 30.0),
            (|t| t * t * (1.0 - t), 1.0 / 105.0),
            (|t| t * (1.0 - t) * (1.0 + t), 1.0 / 30.0 + 2.0 / 60.0 + 1.0 / 105.0),
        ];
        for t_len in [16usize, 50, 285] {
            let g = grid(t_len);
            for (f, exact) in cases {
                let c = Curve::from_fn(g, f);
                let ip = inner_product(&c, &c).unwrap();
                assert!(
                    (ip - exact).abs() <= 5.0 / (t_len * t_len) as f64,
                    "T={t_len}: {ip} vs {exact}"
                );
            }
        }
    }

    fn curve_strategy(t: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, t)
    }

    proptest! {
        #[test]
        fn apply_kernel_is_linear(
            kv in prop::collection::vec(-3.0f64..3.0, 64),
            f in curve_strategy(8),
            h in curve_strategy(8),
            a in -4.0f64..4.0,
            b in -4.0f64..4.0,
        ) {
            let g = grid(8);
            let k = Kernel2D::new(g, kv).unwrap();
            let f = Curve::new(g, f).unwrap();
            let h = Curve::new(g, h).unwrap();
            let combo = f.scaled(a).axpy(b, &h).unwrap();
            let lhs = apply_kernel(&k, &combo).unwrap();
            let rhs = apply_kernel(&k, &f).unwrap().scaled(a)
                .axpy(b, &apply_kernel(&k, &h).unwrap()).unwrap();
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn operator_norm_bounded_by_hs_norm(
            kv in prop::collection::vec(-3.0f64..3.0, 100),
            f in curve_strategy(10),
        ) {
            let g = grid(10);
            let k = Kernel2D::new(g, kv).unwrap();
            let f = Curve::new(g, f).unwrap();
            let lhs = l2_norm(&apply_kernel(&k, &f).unwrap());
            prop_assert!(lhs <= hs_norm(&k) * l2_norm(&f) * (1.0 + 1e-12) + 1e-15);
        }

        #[test]
        fn hs_norm_is_weighted_frobenius(kv in prop::collection::vec(-3.0f64..3.0, 36)) {
            let g = grid(6);
            let expected = (kv.iter().map(|v| v * v).sum::<f64>() / 36.0).sqrt();
            let zero = kv.iter().all(|&v| v == 0.0);
            let n = hs_norm(&Kernel2D::new(g, kv).unwrap());
            prop_assert!((n - expected).abs() <= 1e-12 * (1.0 + expected));
            prop_assert!(n >= 0.0);
            prop_assert_eq!(n == 0.0, zero);
        }
    }
}

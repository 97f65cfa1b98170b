//! Repeated application of one integral operator.
//!
//! Simulation applies the same two kernels thousands of times. When a kernel
//! has low numerical rank (every kernel built from an `M`-function basis has
//! rank at most `M`) it is stored as a sum of `r` separable terms and applied
//! in `O(rT)` instead of `O(T²)`.

use nalgebra::DMatrix;

use crate::function_space::{dot, Curve, Grid, Kernel2D};

/// Singular values below this fraction of the largest one are dropped.
const RANK_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
enum Repr {
    Zero,
    Dense(Vec<f64>),
    /// `K(t_j,t_k) = Σ_r left[r][j] · right[r][k] · T`
    LowRank {
        left: Vec<Vec<f64>>,
        right: Vec<Vec<f64>>,
    },
}

/// A kernel prepared for fast application to many curves.
#[derive(Debug, Clone)]
pub struct IntegralOperator {
    grid: Grid,
    repr: Repr,
}

impl IntegralOperator {
    pub fn new(kernel: &Kernel2D) -> Self {
        let grid = kernel.grid();
        let t = grid.len();
        if kernel.values().iter().all(|&v| v == 0.0) {
            return Self {
                grid,
                repr: Repr::Zero,
            };
        }
        let m = DMatrix::from_row_slice(t, t, kernel.values());
        let svd = m.svd(true, true);
        let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&r| svd.singular_values[r] > RANK_TOL * smax)
            .collect();
        if keep.len() * 4 > t {
            return Self {
                grid,
                repr: Repr::Dense(kernel.values().to_vec()),
            };
        }
        let w = grid.weight();
        let left = keep
            .iter()
            .map(|&r| (0..t).map(|j| u[(j, r)] * svd.singular_values[r]).collect())
            .collect();
        let right = keep
            .iter()
            .map(|&r| (0..t).map(|k| v_t[(r, k)] * w).collect())
            .collect();
        Self {
            grid,
            repr: Repr::LowRank { left, right },
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Numerical rank used for application (`T` when stored dense).
    pub fn rank(&self) -> usize {
        match &self.repr {
            Repr::Zero => 0,
            Repr::Dense(_) => self.grid.len(),
            Repr::LowRank { left, .. } => left.len(),
        }
    }

    /// `out[j] += (1/T) Σ_k K(t_j,t_k) x[k]`.
    pub fn apply_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.grid.len());
        debug_assert_eq!(out.len(), self.grid.len());
        match &self.repr {
            Repr::Zero => {}
            Repr::Dense(values) => {
                let w = self.grid.weight();
                for (o, row) in out.iter_mut().zip(values.chunks_exact(self.grid.len())) {
                    *o += dot(row, x) * w;
                }
            }
            Repr::LowRank { left, right } => {
                for (l, r) in left.iter().zip(right) {
                    let c = dot(r, x);
                    for (o, lj) in out.iter_mut().zip(l) {
                        *o += c * lj;
                    }
                }
            }
        }
    }

    pub fn apply(&self, f: &Curve) -> Curve {
        let mut out = vec![0.0; self.grid.len()];
        self.apply_add(f.values(), &mut out);
        Curve::from_raw(self.grid, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::apply_kernel;

    #[test]
    fn low_rank_matches_dense_application() {
        let g = Grid::new(97).unwrap();
        let k = Kernel2D::from_fn(g, |t, s| {
            12.0 * t * (1.0 - t) * s * (1.0 - s) + (3.0 * t).sin() * s * s
        });
        let op = IntegralOperator::new(&k);
        assert_eq!(op.rank(), 2);
        let f = Curve::from_fn(g, |t| (5.0 * t).cos() + t);
        let a = op.apply(&f);
        let b = apply_kernel(&k, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn full_rank_falls_back_to_dense() {
        let g = Grid::new(20).unwrap();
        let k = Kernel2D::from_fn(g, |t, s| (-(t - s).abs()).exp());
        let op = IntegralOperator::new(&k);
        assert_eq!(op.rank(), 20);
        let f = Curve::from_fn(g, |t| t * t);
        assert_eq!(op.apply(&f), apply_kernel(&k, &f).unwrap());
    }

    #[test]
    fn zero_kernel() {
        let g = Grid::new(5).unwrap();
        let op = IntegralOperator::new(&Kernel2D::zeros(g));
        assert_eq!(op.rank(), 0);
        assert_eq!(op.apply(&Curve::constant(g, 2.0)), Curve::zeros(g));
    }
}

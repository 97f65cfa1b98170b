//! Orthonormal function systems and coefficient maps.
//!
//! Analytic systems are sampled on the grid and then Gram–Schmidt corrected
//! under the discrete inner product, so `project` and `reconstruct_curve`
//! are exact inverses on `ℝ^M` up to rounding.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{dot, inner_product, Curve, Grid, Kernel2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `1, √2 cos 2πkt, √2 sin 2πkt, …`
    Fourier,
    /// Clamped uniform B-splines of degree `min(3, M-1)`.
    Bspline,
    /// `t(1-t)·P_m(2t-1)` with Legendre `P_m`; the first element is
    /// `√30·t(1-t)`.
    Bridge,
    /// Empirical eigenfunctions of a sample covariance.
    Fpca,
    /// User supplied functions.
    Custom,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Fourier => "fourier",
            BasisKind::Bspline => "bspline",
            BasisKind::Bridge => "bridge",
            BasisKind::Fpca => "fpca",
            BasisKind::Custom => "custom",
        })
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(BasisKind::Fourier),
            "bspline" => Ok(BasisKind::Bspline),
            "bridge" => Ok(BasisKind::Bridge),
            "fpca" => Ok(BasisKind::Fpca),
            "custom" => Ok(BasisKind::Custom),
            other => Err(Error::Argument(format!("unknown basis kind `{other}`"))),
        }
    }
}

/// `M` discretely orthonormal functions on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    grid: Grid,
    kind: BasisKind,
    functions: Vec<Curve>,
    eigenvalues: Option<Vec<f64>>,
}

impl BasisSet {
    /// Orthonormalizes arbitrary functions (in the given order).
    pub fn from_functions(grid: Grid, functions: Vec<Curve>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::Argument("a basis needs at least one function".into()));
        }
        if functions.len() > grid.len() {
            return Err(Error::Rank(format!(
                "{} functions exceed grid size {}",
                functions.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            kind: BasisKind::Custom,
            functions: gram_schmidt(grid, functions)?,
            eigenvalues: None,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Number of functions `M`.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[Curve] {
        &self.functions
    }

    /// Full empirical spectrum (fPCA bases only), nonincreasing.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// Gram matrix under the discrete inner product.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |a, b| {
            inner_product(&self.functions[a], &self.functions[b]).expect("same grid")
        })
    }

    /// Returns a copy with `φ_m` replaced by `-φ_m`.
    pub fn with_flipped_sign(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.functions[m] = out.functions[m].scaled(-1.0);
        out
    }
}

/// Modified Gram–Schmidt, applied twice for stability.
fn gram_schmidt(grid: Grid, functions: Vec<Curve>) -> Result<Vec<Curve>> {
    let w = grid.weight();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(functions.len());
    for (idx, f) in functions.into_iter().enumerate() {
        if f.grid() != grid {
            return Err(Error::Dimension(format!("basis function {idx} is on another grid")));
        }
        let mut v = f.into_values();
        let original = (dot(&v, &v) * w).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = dot(&v, q) * w;
                v.iter_mut().zip(q).for_each(|(x, qx)| *x -= c * qx);
            }
        }
        let norm = (dot(&v, &v) * w).sqrt();
        if !(norm > 1e-10 * original.max(f64::MIN_POSITIVE)) {
            return Err(Error::Rank(format!(
                "basis function {idx} is linearly dependent on its predecessors"
            )));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        out.push(v);
    }
    Ok(out.into_iter().map(|v| Curve::from_raw(grid, v)).collect())
}

/// Builds an analytic basis of size `m` on `grid`.
pub fn make_basis(kind: BasisKind, m: usize, grid: Grid) -> Result<BasisSet> {
    if m == 0 {
        return Err(Error::Argument("basis size must be at least 1".into()));
    }
    if m > grid.len() {
        return Err(Error::Rank(format!(
            "basis size {m} exceeds grid size {}",
            grid.len()
        )));
    }
    let raw: Vec<Curve> = match kind {
        BasisKind::Fourier => (0..m)
            .map(|i| {
                let k = (i + 1) / 2;
                let freq = 2.0 * PI * k as f64;
                match i {
                    0 => Curve::constant(grid, 1.0),
                    _ if i % 2 == 1 => Curve::from_fn(grid, |t| 2f64.sqrt() * (freq * t).cos()),
                    _ => Curve::from_fn(grid, |t| 2f64.sqrt() * (freq * t).sin()),
                }
            })
            .collect(),
        BasisKind::Bspline => bspline_columns(grid, m),
        BasisKind::Bridge => (0..m)
            .map(|i| Curve::from_fn(grid, |t| t * (1.0 - t) * legendre(i, 2.0 * t - 1.0)))
            .collect(),
        BasisKind::Fpca | BasisKind::Custom => {
            return Err(Error::Argument(format!(
                "`{kind}` bases are data driven; use fpca() or BasisSet::from_functions()"
            )))
        }
    };
    let mut basis = BasisSet::from_functions(grid, raw)?;
    basis.kind = kind;
    Ok(basis)
}

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn bspline_columns(grid: Grid, m: usize) -> Vec<Curve> {
    let degree = (m - 1).min(3);
    let interior = m - degree - 1;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..=interior).map(|i| i as f64 / (interior + 1) as f64));
    knots.extend(std::iter::repeat(1.0).take(degree + 1));

    let rows: Vec<Vec<f64>> = grid.points().map(|t| bspline_row(&knots, degree, m, t)).collect();
    (0..m)
        .map(|i| Curve::from_raw(grid, rows.iter().map(|r| r[i]).collect()))
        .collect()
}

/// Cox–de Boor evaluation of all `m` basis splines at `t`.
fn bspline_row(knots: &[f64], degree: usize, m: usize, t: f64) -> Vec<f64> {
    let nspan = knots.len() - 1;
    // zeroth degree indicators; the last non-degenerate span is closed at 1
    let last = (0..nspan)
        .rev()
        .find(|&i| knots[i] < knots[i + 1])
        .expect("non-degenerate knot vector");
    let mut b: Vec<f64> = (0..nspan)
        .map(|i| {
            let inside = knots[i] <= t && t < knots[i + 1];
            let closing = i == last && t == knots[i + 1];
            if inside || closing {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for p in 1..=degree {
        let next: Vec<f64> = (0..nspan - p)
            .map(|i| {
                let mut v = 0.0;
                let d1 = knots[i + p] - knots[i];
                if d1 > 0.0 {
                    v += (t - knots[i]) / d1 * b[i];
                }
                let d2 = knots[i + p + 1] - knots[i + 1];
                if d2 > 0.0 {
                    v += (knots[i + p + 1] - t) / d2 * b[i + 1];
                }
                v
            })
            .collect();
        b = next;
    }
    b.truncate(m);
    b
}

/// Full spectral decomposition of a sample's empirical covariance kernel.
#[derive(Debug, Clone)]
pub struct FpcaDecomposition {
    grid: Grid,
    mean: Curve,
    /// Nonincreasing.
    eigenvalues: Vec<f64>,
    /// Unit `L²` eigenfunctions, same order as `eigenvalues`.
    eigenfunctions: Vec<Curve>,
    rank: usize,
}

impl FpcaDecomposition {
    /// Eigendecomposition of `(1/T) D̂` where
    /// `D̂(t_j,t_k) = (1/n) Σ_i (x_i − x̄)(t_j) (x_i − x̄)(t_k)`.
    pub fn new(sample: &[Curve]) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::Argument(format!(
                "fPCA needs at least 2 curves, got {}",
                sample.len()
            )));
        }
        let grid = sample[0].grid();
        let t = grid.len();
        let n = sample.len();
        let mean = Curve::mean(sample)?;
        let centered = DMatrix::from_fn(n, t, |i, j| sample[i].values()[j] - mean.values()[j]);
        let scale = 1.0 / (n as f64 * t as f64);
        let op = (centered.transpose() * &centered) * scale;
        let eig = SymmetricEigen::new(op);

        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

        let second_moment = sample
            .iter()
            .map(|c| dot(c.values(), c.values()))
            .sum::<f64>()
            * scale;
        let lmax = eigenvalues[0].max(0.0);
        let tol = (1e-10 * lmax).max(1e-13 * second_moment).max(f64::MIN_POSITIVE);
        let rank = eigenvalues.iter().take_while(|&&l| l > tol).count();

        let root_t = (t as f64).sqrt();
        let eigenfunctions = order
            .iter()
            .map(|&i| {
                let v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
                let pivot = v.iter().enumerate().fold(0, |best, (j, x)| {
                    if x.abs() > v[best].abs() {
                        j
                    } else {
                        best
                    }
                });
                let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
                Curve::from_raw(grid, v.iter().map(|x| sign * root_t * x).collect())
            })
            .collect();

        Ok(Self {
            grid,
            mean,
            eigenvalues,
            eigenfunctions,
            rank,
        })
    }

    pub fn mean(&self) -> &Curve {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[Curve] {
        &self.eigenfunctions
    }

    /// Number of eigenvalues that are numerically nonzero.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Cumulative explained-variance shares, negative eigenvalues clipped.
    pub fn cumulative_explained(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        let mut acc = 0.0;
        self.eigenvalues
            .iter()
            .map(|l| {
                acc += l.max(0.0);
                if total > 0.0 {
                    acc / total
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Smallest `M` whose cumulative share reaches `threshold`, capped at `cap`.
    pub fn select_m(&self, threshold: f64, cap: usize) -> usize {
        let cum = self.cumulative_explained();
        let m = cum.iter().position(|&c| c >= threshold).map_or(cum.len(), |i| i + 1);
        m.clamp(1, cap.max(1)).min(self.rank.max(1))
    }

    /// The leading `m` eigenfunctions as a basis.
    pub fn basis(&self, m: usize) -> Result<BasisSet> {
        if m == 0 {
            return Err(Error::Argument("basis size must be at least 1".into()));
        }
        if m > self.rank {
            return Err(Error::Rank(format!(
                "requested M = {m} but the sample covariance has numerical rank {}; attainable M: 1..={}",
                self.rank, self.rank
            )));
        }
        Ok(BasisSet {
            grid: self.grid,
            kind: BasisKind::Fpca,
            functions: self.eigenfunctions[..m].to_vec(),
            eigenvalues: Some(self.eigenvalues.clone()),
        })
    }
}

/// Functional principal components of `sample`, top `m` eigenfunctions.
pub fn fpca(sample: &[Curve], m: usize) -> Result<BasisSet> {
    if let Some(c) = sample.first() {
        if m > sample.len().min(c.grid().len()) {
            return Err(Error::Rank(format!(
                "M = {m} exceeds min(n, T) = {}",
                sample.len().min(c.grid().len())
            )));
        }
    }
    FpcaDecomposition::new(sample)?.basis(m)
}

/// Coefficients `⟨f, φ_m⟩`.
pub fn project(f: &Curve, basis: &BasisSet) -> Result<Vec<f64>> {
    basis.functions.iter().map(|phi| inner_product(f, phi)).collect()
}

/// `Σ_m c_m φ_m`.
pub fn reconstruct_curve(coefs: &[f64], basis: &BasisSet) -> Result<Curve> {
    if coefs.len() != basis.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a basis of size {}",
            coefs.len(),
            basis.len()
        )));
    }
    let mut out = vec![0.0; basis.grid.len()];
    for (c, phi) in coefs.iter().zip(&basis.functions) {
        out.iter_mut().zip(phi.values()).for_each(|(o, p)| *o += c * p);
    }
    Ok(Curve::from_raw(basis.grid, out))
}

/// `K(t,s) = Σ_{m,m'} C_{mm'} φ_m(t) φ_{m'}(s)`.
pub fn reconstruct_kernel(coefs: &DMatrix<f64>, basis: &BasisSet) -> Result<Kernel2D> {
    let m = basis.len();
    if coefs.nrows() != m || coefs.ncols() != m {
        return Err(Error::Dimension(format!(
            "{}x{} coefficients for a basis of size {m}",
            coefs.nrows(),
            coefs.ncols()
        )));
    }
    let t = basis.grid.len();
    // rows of C·Φ(s): one curve per m
    let right: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..t)
                .map(|k| (0..m).map(|b| coefs[(a, b)] * basis.functions[b].values()[k]).sum())
                .collect()
        })
        .collect();
    let mut values = vec![0.0; t * t];
    for (a, r) in right.iter().enumerate() {
        let phi = basis.functions[a].values();
        for (j, row) in values.chunks_exact_mut(t).enumerate() {
            let pj = phi[j];
            row.iter_mut().zip(r).for_each(|(v, x)| *v += pj * x);
        }
    }
    Ok(Kernel2D::from_raw(basis.grid, values))
}

/// `C_{mm'} = ⟨⟨K, φ_m ⊗ φ_{m'}⟩⟩`.
pub fn project_kernel(kernel: &Kernel2D, basis: &BasisSet) -> Result<DMatrix<f64>> {
    if kernel.grid() != basis.grid {
        return Err(Error::Dimension("kernel and basis grids differ".into()));
    }
    let m = basis.len();
    let w = basis.grid.weight();
    // K φ_{m'} for each m'
    let applied: Vec<Vec<f64>> = basis
        .functions
        .iter()
        .map(|phi| {
            (0..basis.grid.len())
                .map(|j| dot(kernel.row(j), phi.values()) * w)
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(m, m, |a, b| {
        dot(basis.functions[a].values(), &applied[b]) * w
    }))
}

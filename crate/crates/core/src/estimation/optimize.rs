//! Projected BFGS over the compact parameter set.
//!
//! The box and the Frobenius ball on `B` are handled by projection along
//! the search path; `|det A| ≥ c1` by a logarithmic barrier with a weight
//! small enough to leave interior minimizers in place.

use nalgebra::{DMatrix, DVector};

use super::recursion::{objective_and_gradient, walk_with_jacobians, CoefSeries};
use super::theta::{ThetaBounds, Theta};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// When the line search fails along a freshly seeded direction, the start
/// still counts as converged if that step predicted a decrease below this
/// many rounding units of the objective: no representable progress is left.
const ROUNDING_UNITS: f64 = 100.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    pub gtol: f64,
    pub barrier_weight: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub pg_norm: f64,
    pub message: String,
}

pub(crate) struct Problem<'a> {
    series: &'a CoefSeries,
    bounds: ThetaBounds,
    m: usize,
    mu: f64,
}

impl<'a> Problem<'a> {
    pub fn new(series: &'a CoefSeries, bounds: ThetaBounds) -> Self {
        Self {
            series,
            bounds,
            m: series.dim(),
            mu: 0.0,
        }
    }

    fn b_range(&self) -> std::ops::Range<usize> {
        let m = self.m;
        m + m * m..m + 2 * m * m
    }

    fn a_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        DMatrix::from_row_slice(m, m, &x[m..m + m * m])
    }

    pub fn project(&self, x: &mut [f64]) {
        let lim = self.bounds.box_bound;
        x.iter_mut().for_each(|v| *v = v.clamp(-lim, lim));
        let r = self.b_range();
        let norm = x[r.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > self.bounds.c2 {
            let s = self.bounds.c2 / norm;
            x[r].iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Objective, barrier-augmented value and gradient; `None` outside the
    /// barrier's domain.
    fn evaluate(&self, x: &[f64]) -> Option<(f64, f64, Vec<f64>)> {
        let a = self.a_matrix(x);
        let det = a.determinant();
        let gap = det.abs() - self.bounds.c1;
        if !(gap > 0.0) {
            return None;
        }
        let theta = Theta::from_flat(self.m, x).ok()?;
        let (obj, mut grad) = objective_and_gradient(&theta, self.series).ok()?;
        if !obj.is_finite() {
            return None;
        }
        let mut value = obj;
        if self.mu > 0.0 {
            value -= self.mu * gap.ln();
            // ∂|det A|/∂A = |det A| A^{-T}
            if let Some(inv) = a.clone().try_inverse() {
                let m = self.m;
                for r in 0..m {
                    for c in 0..m {
                        grad[m + r * m + c] -= self.mu * det.abs() * inv[(c, r)] / gap;
                    }
                }
            }
        }
        Some((obj, value, grad))
    }

    /// Inverse of the Gauss–Newton matrix `2 Σ JᵢᵀJᵢ`, used as the starting
    /// inverse-Hessian estimate. Falls back to a scaled identity when it is
    /// numerically singular.
    fn gauss_newton_inverse(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let theta = Theta::from_flat(self.m, x).ok()?;
        let p = x.len();
        let mut q = DMatrix::zeros(p, p);
        walk_with_jacobians(&theta, self.series, |_, _, jac| q += jac.tr_mul(jac));
        q *= 2.0;
        let ridge = 1e-10 * q.trace() / p as f64;
        for i in 0..p {
            q[(i, i)] += ridge;
        }
        q.cholesky().map(|c| c.inverse())
    }

    fn on_ball(&self, x: &[f64]) -> bool {
        let bsq: f64 = x[self.b_range()].iter().map(|v| v * v).sum();
        bsq.sqrt() >= self.bounds.c2 * (1.0 - 1e-10)
    }

    /// Keeps the `B` block of a direction inside the ball to first order.
    /// While the constraint binds (the gradient pushes `B` outwards) the
    /// whole radial part is removed, since an inward component would raise
    /// the objective; otherwise only an outward part is.
    fn tangent(&self, x: &[f64], g: &[f64], dir: &mut [f64]) {
        if !self.on_ball(x) {
            return;
        }
        let r = self.b_range();
        let bsq: f64 = x[r.clone()].iter().map(|v| v * v).sum();
        let binding = x[r.clone()].iter().zip(&g[r.clone()]).map(|(a, b)| a * b).sum::<f64>() < 0.0;
        let radial: f64 = x[r.clone()].iter().zip(&dir[r.clone()]).map(|(a, b)| a * b).sum();
        if radial > 0.0 || binding {
            let c = radial / bsq;
            for k in r {
                dir[k] -= c * x[k];
            }
        }
    }

    /// Gradient with the components that push against active bounds removed.
    fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let lim = self.bounds.box_bound;
        let mut pg: Vec<f64> = x
            .iter()
            .zip(g)
            .map(|(&xv, &gv)| {
                if (xv >= lim && gv < 0.0) || (xv <= -lim && gv > 0.0) {
                    0.0
                } else {
                    gv
                }
            })
            .collect();
        let r = self.b_range();
        let bsq: f64 = x[r.clone()].iter().map(|v| v * v).sum();
        if self.on_ball(x) {
            let radial: f64 = x[r.clone()].iter().zip(&pg[r.clone()]).map(|(a, b)| a * b).sum();
            if radial < 0.0 {
                let c = radial / bsq;
                for k in r {
                    pg[k] -= c * x[k];
                }
            }
        }
        pg
    }

    pub fn minimize(&mut self, start: &[f64], settings: &Settings) -> Outcome {
        let mut x = start.to_vec();
        self.project(&mut x);
        let fail = |x: Vec<f64>, message: &str| Outcome {
            x,
            objective: f64::INFINITY,
            converged: false,
            iterations: 0,
            pg_norm: f64::INFINITY,
            message: message.to_string(),
        };
        // barrier weight relative to the objective scale at the start
        self.mu = 0.0;
        let Some((obj0, _, _)) = self.evaluate(&x) else {
            return fail(x, "start violates |det A| > c1");
        };
        self.mu = settings.barrier_weight * obj0.max(f64::MIN_POSITIVE);
        let (mut obj, mut f, mut g) = self.evaluate(&x).expect("feasible start");

        let p = x.len();
        // `seeded`: H is the Gauss–Newton seed (or its identity fallback)
        // and has not been updated yet
        let seed = |x: &[f64]| match self.gauss_newton_inverse(x) {
            Some(h) => (h, false),
            None => (DMatrix::<f64>::identity(p, p), true),
        };
        let (mut h, mut identity) = seed(&x);
        let mut seeded = true;
        let pg0 = norm(&self.projected_gradient(&x, &g));
        let reference = pg0.max(f64::MIN_POSITIVE);
        let mut pg_norm = pg0;
        let mut message = String::from("iteration limit reached");
        let mut converged = false;
        let mut iterations = 0;

        while iterations < settings.max_iter {
            let pg = self.projected_gradient(&x, &g);
            pg_norm = norm(&pg);
            if pg_norm <= settings.gtol * reference {
                converged = true;
                message = "projected gradient below tolerance".into();
                break;
            }
            iterations += 1;

            let pgv = DVector::from_column_slice(&pg);
            let mut dir: Vec<f64> = (-(&h * &pgv)).iter().copied().collect();
            self.tangent(&x, &g, &mut dir);
            if dot(&dir, &pg) >= 0.0 {
                (h, identity) = seed(&x);
                seeded = true;
                dir = (-(&h * &pgv)).iter().copied().collect();
                self.tangent(&x, &g, &mut dir);
                if dot(&dir, &pg) >= 0.0 {
                    h = DMatrix::identity(p, p);
                    identity = true;
                    dir = pg.iter().map(|v| -v).collect();
                }
            }
            let predicted = -0.5 * dot(&pg, &dir);
            // never try to move further than the parameter scale in one step
            let cap = (1.0 + norm(&x)) / norm(&dir).max(f64::MIN_POSITIVE);
            let cap = if identity { 0.1 * cap } else { cap };
            dir.iter_mut().for_each(|v| *v *= cap.min(1.0));

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                self.project(&mut trial);
                let disp: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let slope = dot(&g, &disp);
                if slope < 0.0 {
                    if let Some((tobj, tf, tg)) = self.evaluate(&trial) {
                        if tf <= f + ARMIJO * slope {
                            accepted = Some((trial, disp, tobj, tf, tg));
                            break;
                        }
                    }
                }
                step *= 0.5;
            }

            let Some((xn, s, objn, fnew, gn)) = accepted else {
                if !seeded {
                    (h, identity) = seed(&x);
                    seeded = true;
                    continue;
                }
                converged = pg_norm <= settings.gtol * reference
                    || predicted <= ROUNDING_UNITS * f64::EPSILON * f.abs().max(f64::MIN_POSITIVE);
                message = if converged {
                    "objective stationary to machine precision".into()
                } else {
                    "line search failed".into()
                };
                break;
            };

            // differences of projected gradients carry the curvature of the
            // ball boundary, which raw gradient differences miss
            let pgn = self.projected_gradient(&xn, &gn);
            let yv: Vec<f64> = pgn.iter().zip(&pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-12 * norm(&s) * norm(&yv) {
                let sv = DVector::from_vec(s);
                let yvv = DVector::from_vec(yv);
                if seeded && identity {
                    h = DMatrix::identity(p, p) * (sy / yvv.norm_squared());
                }
                let rho = 1.0 / sy;
                let hy = &h * &yvv;
                let yhy = yvv.dot(&hy);
                // H ← H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
                h -= (&hy * sv.transpose() + &sv * hy.transpose()) * rho;
                h += (&sv * sv.transpose()) * (rho * rho * yhy + rho);
                seeded = false;
                identity = false;
            }
            x = xn;
            obj = objn;
            f = fnew;
            g = gn;
        }
        if iterations >= settings.max_iter && !converged {
            pg_norm = norm(&self.projected_gradient(&x, &g));
            converged = pg_norm <= settings.gtol * reference;
        }
        Outcome {
            x,
            objective: obj,
            converged,
            iterations,
            pg_norm,
            message,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

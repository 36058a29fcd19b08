//! Box-constrained minimization of the linearized residual
//! `sum_k a_k S_k - V^delta` over `0 <= a_k <= upper_k`.
//!
//! The Frobenius problem is a convex quadratic in `a`; it is solved with
//! accelerated projected gradient on the Gram matrix `G_kl = <S_k, S_l>_F`.
//! All products are dense nalgebra kernels run on one thread, so results are
//! bitwise reproducible.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matfun::{sym_eig, sym_eigenvalues, SymmetricMatrix};
use crate::ntd::{MeasurementMatrix, SensitivityMatrix};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;
/// Iterations without progress after which the subgradient method stops.
pub const SPECTRAL_STALL_WINDOW: usize = 5_000;
pub const DEFAULT_TIKHONOV_LAMBDA: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionProblem {
    pub s: Vec<DMatrix<f64>>,
    pub v_target: DMatrix<f64>,
    pub upper: Vec<f64>,
}

impl ReconstructionProblem {
    pub fn new(s: Vec<DMatrix<f64>>, v_target: DMatrix<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = v_target.nrows();
        if !v_target.is_square() {
            return Err(Error::Dimension(format!(
                "target matrix is {}x{}",
                v_target.nrows(),
                v_target.ncols()
            )));
        }
        if s.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "{} sensitivity matrices but {} bounds",
                s.len(),
                upper.len()
            )));
        }
        if let Some(k) = s.iter().position(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Dimension(format!(
                "sensitivity matrix {k} is {}x{}, target is {n}x{n}",
                s[k].nrows(),
                s[k].ncols()
            )));
        }
        if let Some(k) = upper.iter().position(|u| !(*u >= 0.0 && u.is_finite())) {
            return Err(Error::Domain(format!(
                "upper bound {k} must be finite and >= 0, got {}",
                upper[k]
            )));
        }
        Ok(Self { s, v_target, upper })
    }

    pub fn from_parts(
        s: &[SensitivityMatrix],
        v: &MeasurementMatrix,
        upper: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            s.iter().map(|m| m.entries.clone()).collect(),
            v.entries.clone(),
            upper,
        )
    }

    pub fn num_pixels(&self) -> usize {
        self.s.len()
    }

    /// `sum_k a_k S_k - V`.
    pub fn residual(&self, a: &[f64]) -> DMatrix<f64> {
        let mut r = -&self.v_target;
        for (sk, &ak) in self.s.iter().zip(a) {
            if ak != 0.0 {
                r += sk * ak;
            }
        }
        r
    }

    fn clip(&self, a: &mut DVector<f64>) {
        for (x, &u) in a.iter_mut().zip(&self.upper) {
            *x = x.clamp(0.0, u);
        }
    }
}

/// Design matrix with column `k` equal to `S_k` flattened row-major, and the
/// target `V` flattened row-major.
pub fn vectorize(problem: &ReconstructionProblem) -> (DMatrix<f64>, DVector<f64>) {
    let n = problem.v_target.nrows();
    let row_major = |m: &DMatrix<f64>| DVector::from_iterator(n * n, m.transpose().iter().copied());
    let mut design = DMatrix::zeros(n * n, problem.s.len());
    for (k, sk) in problem.s.iter().enumerate() {
        design.set_column(k, &row_major(sk));
    }
    (design, row_major(&problem.v_target))
}

/// Inverse of [`vectorize`] for one column.
pub fn unvectorize(column: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, column)
}

/// `||sum_k a_k S_k - V||_F`.
pub fn objective(problem: &ReconstructionProblem, a: &[f64]) -> f64 {
    problem.residual(a).norm()
}

/// `||sum_k a_k S_k - V||_2`.
pub fn spectral_objective(problem: &ReconstructionProblem, a: &[f64]) -> Result<f64> {
    let r = SymmetricMatrix::symmetrize(&problem.residual(a))?;
    let ev = sym_eigenvalues(&r)?;
    Ok(ev.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub coefficients: Vec<f64>,
    /// Residual norm at `coefficients`: Frobenius for the quadratic solvers,
    /// spectral for [`solve_spectral`].
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// Gram matrix and right-hand side of the normal equations.
struct Quadratic {
    g: DMatrix<f64>,
    b: DVector<f64>,
}

impl Quadratic {
    fn new(problem: &ReconstructionProblem) -> (Self, f64) {
        let (design, target) = vectorize(problem);
        let g = design.tr_mul(&design);
        let b = design.tr_mul(&target);
        (Self { g, b }, target.norm())
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.g * a - &self.b
    }

    /// `1/2 a^T G a - b^T a`, which differs from `1/2 ||S a - vec||^2` by a constant.
    fn value(&self, a: &DVector<f64>) -> f64 {
        0.5 * a.dot(&(&self.g * a)) - self.b.dot(a)
    }
}

fn kkt(problem: &ReconstructionProblem, a: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    let mut step = a - grad;
    problem.clip(&mut step);
    (a - step).norm()
}

/// Accelerated projected gradient for `min 1/2 ||S a - vec||^2` on the box.
pub fn solve_box_ls(
    problem: &ReconstructionProblem,
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    solve_box_ls_traced(problem, opts).map(|(r, _)| r)
}

/// As [`solve_box_ls`], also returning the quadratic value after each
/// accepted iteration.
pub fn solve_box_ls_traced(
    problem: &ReconstructionProblem,
    opts: &SolverOptions,
) -> Result<(ReconstructionResult, Vec<f64>)> {
    opts.validate()?;
    let p = problem.num_pixels();
    let (quad, target_norm) = Quadratic::new(problem);
    let threshold = opts.tol * (1.0 + target_norm);
    let mut x = DVector::zeros(p);
    let mut trace = Vec::new();

    let lipschitz = if p == 0 {
        0.0
    } else {
        sym_eig(&SymmetricMatrix::symmetrize(&quad.g)?)?.max()
    };
    let finish = |x: DVector<f64>, iterations: usize, converged: bool, kkt_residual: f64, trace| {
        let coefficients: Vec<f64> = x.iter().copied().collect();
        let objective = objective(problem, &coefficients);
        Ok((
            ReconstructionResult {
                coefficients,
                objective,
                iterations,
                converged,
                kkt_residual,
            },
            trace,
        ))
    };
    let residual0 = kkt(problem, &x, &quad.gradient(&x));
    if !(lipschitz > 0.0) || residual0 <= threshold {
        return finish(x, 0, residual0 <= threshold, residual0, trace);
    }
    let step = 1.0 / lipschitz;

    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut fx = quad.value(&x);
    let mut last_kkt = residual0;
    for iter in 1..=opts.max_iter {
        let mut next = &y - quad.gradient(&y) * step;
        problem.clip(&mut next);
        let mut f_next = quad.value(&next);
        if f_next > fx {
            // Momentum overshot: restart from x with a plain projected step.
            t = 1.0;
            next = &x - quad.gradient(&x) * step;
            problem.clip(&mut next);
            f_next = quad.value(&next);
            if f_next > fx {
                // No descent left at working precision.
                return finish(x, iter, last_kkt <= threshold, last_kkt, trace);
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
        fx = f_next;
        trace.push(fx);

        last_kkt = kkt(problem, &x, &quad.gradient(&x));
        if last_kkt <= threshold {
            return finish(x, iter, true, last_kkt, trace);
        }
    }
    finish(x, opts.max_iter, false, last_kkt, trace)
}

/// Unconstrained `min ||S a - vec||^2 + lambda ||a||^2`.
pub fn solve_tikhonov(
    problem: &ReconstructionProblem,
    lambda: f64,
) -> Result<ReconstructionResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "Tikhonov lambda must be positive, got {lambda}"
        )));
    }
    let p = problem.num_pixels();
    let (quad, _) = Quadratic::new(problem);
    let system = &quad.g + DMatrix::identity(p, p) * lambda;
    let chol = system
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            index: 0,
            pivot: lambda,
        })?;
    let a = chol.solve(&quad.b);
    let kkt_residual = (&system * &a - &quad.b).norm();
    let coefficients: Vec<f64> = a.iter().copied().collect();
    Ok(ReconstructionResult {
        objective: objective(problem, &coefficients),
        coefficients,
        iterations: 0,
        converged: true,
        kkt_residual,
    })
}

/// Spectral value and a subgradient of `||R(a)||_2` at `a`.
fn spectral_subgradient(problem: &ReconstructionProblem, a: &[f64]) -> Result<(f64, DVector<f64>)> {
    let eig = sym_eig(&SymmetricMatrix::symmetrize(&problem.residual(a))?)?;
    let n = eig.values.len();
    let top = if eig.values[0].abs() >= eig.values[n - 1].abs() {
        0
    } else {
        n - 1
    };
    let lambda = eig.values[top];
    let v = eig.vectors.column(top);
    let sign = if lambda >= 0.0 { 1.0 } else { -1.0 };
    let g = DVector::from_iterator(
        problem.num_pixels(),
        problem.s.iter().map(|sk| sign * v.dot(&(sk * v))),
    );
    Ok((lambda.abs(), g))
}

/// Projected subgradient for `min ||sum a_k S_k - V||_2` on the box with
/// normalized steps `c / sqrt(t)`, `c = max_k upper_k / 2`. Returns the best
/// iterate. Converges when the best value improved by less than
/// `tol (1 + best)` over the last [`SPECTRAL_STALL_WINDOW`] iterations.
/// `kkt_residual` is the projected-subgradient norm at the best iterate.
pub fn solve_spectral(
    problem: &ReconstructionProblem,
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    opts.validate()?;
    let p = problem.num_pixels();
    if problem.v_target.nrows() == 0 {
        return Err(Error::Dimension("empty target matrix".into()));
    }
    let c = 0.5 * problem.upper.iter().fold(0.0_f64, |m, &u| m.max(u));
    let mut x = DVector::<f64>::zeros(p);
    let (mut best_val, mut g) = spectral_subgradient(problem, x.as_slice())?;
    let mut best = x.clone();
    let mut best_grad = g.clone();
    let mut anchor = best_val;
    let mut anchor_iter = 0;
    let mut iterations = 0;
    let mut converged = p == 0 || c == 0.0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let gn = g.norm();
        if gn == 0.0 {
            converged = true;
            break;
        }
        x -= &g * (c / (iterations as f64).sqrt() / gn);
        problem.clip(&mut x);
        let (val, grad) = spectral_subgradient(problem, x.as_slice())?;
        if val < best_val {
            best_val = val;
            best.copy_from(&x);
            best_grad.copy_from(&grad);
        }
        g = grad;
        if anchor - best_val > opts.tol * (1.0 + best_val) {
            anchor = best_val;
            anchor_iter = iterations;
        } else if iterations - anchor_iter >= SPECTRAL_STALL_WINDOW {
            converged = true;
        }
    }
    Ok(ReconstructionResult {
        kkt_residual: kkt(problem, &best, &best_grad),
        coefficients: best.iter().copied().collect(),
        objective: best_val,
        iterations,
        converged,
    })
}

//! Principal eigenpairs of the conjugated periodic operator
//!
//! ```text
//! A psi = d psi'' - (2 mu d + g) psi' + (d mu^2 + g mu + m) psi,   psi(x + L) = psi(x)
//! ```
//!
//! discretized with second-order central differences on a [`PeriodicGrid`]. Under
//! the grid condition enforced by [`discretize`] the matrix is irreducible with
//! positive off-diagonals, so its rightmost eigenvalue is real and simple with a
//! positive eigenvector, and `(s I - A)^{-1}` is entrywise positive for every `s`
//! above it.

use crate::banded::Tridiagonal;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EigenProblem {
    d: GridFunction,
    g: GridFunction,
    m: GridFunction,
    mu: f64,
}

impl EigenProblem {
    pub fn new(d: GridFunction, g: GridFunction, m: GridFunction, mu: f64) -> Result<Self> {
        let n = d.grid().len();
        if g.grid().len() != n || m.grid().len() != n || g.grid().period() != d.grid().period()
            || m.grid().period() != d.grid().period()
        {
            return Err(Error::validation("grid", "d, g and m must share one grid"));
        }
        if !mu.is_finite() {
            return Err(Error::validation("mu", "must be finite"));
        }
        if d.min() <= 0.0 {
            return Err(Error::validation(
                "d",
                format!("diffusion must be positive, min is {}", d.min()),
            ));
        }
        Ok(Self { d, g, m, mu })
    }

    /// Constant-coefficient problem on `grid`.
    pub fn constant(grid: PeriodicGrid, d: f64, g: f64, m: f64, mu: f64) -> Result<Self> {
        Self::new(
            GridFunction::constant(grid, d),
            GridFunction::constant(grid, g),
            GridFunction::constant(grid, m),
            mu,
        )
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self {
            mu,
            ..self.clone()
        }
    }

    pub fn with_potential(&self, m: GridFunction) -> Result<Self> {
        Self::new(self.d.clone(), self.g.clone(), m, self.mu)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.d.grid()
    }

    pub fn d(&self) -> &GridFunction {
        &self.d
    }

    pub fn g(&self) -> &GridFunction {
        &self.g
    }

    pub fn m(&self) -> &GridFunction {
        &self.m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Zeroth-order coefficient `d mu^2 + g mu + m` at each node.
    pub fn potential(&self) -> Vec<f64> {
        let mu = self.mu;
        self.d
            .values()
            .iter()
            .zip(self.g.values())
            .zip(self.m.values())
            .map(|((d, g), m)| d * mu * mu + g * mu + m)
            .collect()
    }

    fn drift_bound(&self) -> f64 {
        self.d
            .values()
            .iter()
            .zip(self.g.values())
            .fold(0.0f64, |acc, (d, g)| acc.max((2.0 * self.mu * d + g).abs()))
    }

    /// Smallest node count satisfying `h < 2 min(d) / max|2 mu d + g|`.
    pub fn min_admissible_points(&self) -> usize {
        let drift = self.drift_bound();
        if drift == 0.0 {
            return crate::grid::MIN_POINTS;
        }
        let ratio = self.grid().period() * drift / (2.0 * self.d.min());
        (ratio.floor() as usize + 1).max(crate::grid::MIN_POINTS)
    }
}

/// Finite-difference matrix `A_h` with periodic wraparound.
pub fn discretize(problem: &EigenProblem) -> Result<Tridiagonal> {
    let grid = problem.grid();
    let n = grid.len();
    let h = grid.spacing();
    let drift = problem.drift_bound();
    if drift > 0.0 && h >= 2.0 * problem.d.min() / drift {
        return Err(Error::GridTooCoarse {
            n,
            min_n: problem.min_admissible_points(),
        });
    }
    let mu = problem.mu;
    let pot = problem.potential();
    let mut lower = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for j in 0..n {
        let d = problem.d.values()[j];
        let b = 2.0 * mu * d + problem.g.values()[j];
        let dd = d / (h * h);
        let bb = b / (2.0 * h);
        lower.push(dd + bb);
        diag.push(-2.0 * dd + pot[j]);
        upper.push(dd - bb);
    }
    Ok(Tridiagonal::new(lower, diag, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Perron iteration on the positive resolvent `(s I - A)^{-1}`, with the shift
    /// kept above the Collatz-Wielandt upper bound.
    #[default]
    Resolvent,
    /// Perron iteration on `A + sigma I`, followed by one inverse-iteration polish.
    ShiftedPower,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iter: Option<usize>,
    pub method: Method,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            max_iter: None,
            method: Method::Resolvent,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Positive eigenvector, `max = 1`.
    pub psi: GridFunction,
    /// `||A psi - lambda psi||_inf`.
    pub residual: f64,
    /// Collatz-Wielandt bracket `min_j (A psi)_j / psi_j <= lambda <= max_j (...)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

pub fn principal_eigenpair(problem: &EigenProblem, tol: f64) -> Result<EigenPair> {
    principal_eigenpair_with(problem, &EigenOptions::with_tol(tol))
}

pub fn principal_eigenvalue(problem: &EigenProblem) -> Result<f64> {
    Ok(principal_eigenpair(problem, DEFAULT_TOL)?.lambda)
}

pub fn principal_eigenpair_with(problem: &EigenProblem, opts: &EigenOptions) -> Result<EigenPair> {
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tol", "must be positive"));
    }
    let a = discretize(problem)?;
    if is_uniform(problem) {
        // circulant matrix: constants are the Perron vector, eigenvalue is the potential
        let lambda = problem.potential()[0];
        return finish(problem, &a, lambda, vec![1.0; a.len()], 0, opts);
    }
    let (lambda, x, iterations) = match opts.method {
        Method::Resolvent => resolvent_iteration(&a, opts)?,
        Method::ShiftedPower => power_iteration(&a, opts)?,
    };
    finish(problem, &a, lambda, x, iterations, opts)
}

fn finish(
    problem: &EigenProblem,
    a: &Tridiagonal,
    lambda: f64,
    mut x: Vec<f64>,
    iterations: usize,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    normalize_max(&mut x);
    if let Some(j) = x.iter().position(|&v| v <= 0.0) {
        return Err(Error::Internal(format!(
            "principal eigenvector has nonpositive entry {} at node {j}",
            x[j]
        )));
    }
    let mut ax = vec![0.0; x.len()];
    a.apply_cyclic(&x, &mut ax);
    let residual = ax
        .iter()
        .zip(&x)
        .fold(0.0f64, |m, (y, v)| m.max((y - lambda * v).abs()));
    let bracket = collatz_wielandt(&ax, &x);
    if !(residual <= opts.residual_tol) {
        return Err(Error::Internal(format!(
            "eigen residual {residual:e} exceeds tolerance {:e}",
            opts.residual_tol
        )));
    }
    Ok(EigenPair {
        lambda,
        psi: GridFunction::new(*problem.grid(), x)?,
        residual,
        bracket,
        iterations,
    })
}

fn is_uniform(problem: &EigenProblem) -> bool {
    let flat = |f: &GridFunction| f.values().iter().all(|&v| v == f.values()[0]);
    flat(&problem.d) && flat(&problem.g) && flat(&problem.m)
}

fn normalize_max(x: &mut [f64]) {
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(im, m), (i, v)| if v.abs() > m { (i, v.abs()) } else { (im, m) });
    let scale = x[imax];
    for v in x.iter_mut() {
        *v /= scale;
    }
}

fn collatz_wielandt(ax: &[f64], x: &[f64]) -> (f64, f64) {
    ax.iter()
        .zip(x)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (y, v)| {
            let r = y / v;
            (lo.min(r), hi.max(r))
        })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Eigenvalue increments below this are roundoff noise in `A_h`.
fn roundoff_floor(norm_a: f64) -> f64 {
    4.0 * f64::EPSILON * norm_a
}

fn matrix_norm(a: &Tridiagonal) -> f64 {
    (0..a.len())
        .map(|i| a.lower[i].abs() + a.diag[i].abs() + a.upper[i].abs())
        .fold(0.0f64, f64::max)
}

/// Perron iteration on `(s I - A)^{-1}`. Returns `(lambda, eigenvector, iterations)`.
fn resolvent_iteration(a: &Tridiagonal, opts: &EigenOptions) -> Result<(f64, Vec<f64>, usize)> {
    let n = a.len();
    let cap = opts.max_iter.unwrap_or(500);
    let norm_a = matrix_norm(a);

    let mut x = vec![1.0; n];
    let mut ax = a.row_sums_cyclic();
    let (mut lo, mut hi) = collatz_wielandt(&ax, &x);
    if hi - lo <= opts.tol {
        return Ok((0.5 * (lo + hi), x, 0));
    }

    let mut prev = hi;
    let mut increment = f64::INFINITY;
    for it in 1..=cap {
        let shift = hi + (hi - lo).max(1e-7 * (1.0 + hi.abs()));
        let mut y = x.clone();
        a.shifted_negation(shift).factor_cyclic()?.solve_in_place(&mut y);
        let estimate = shift - dot(&x, &x) / dot(&x, &y);
        normalize_max(&mut y);
        x = y;
        a.apply_cyclic(&x, &mut ax);
        if x.iter().all(|&v| v > 0.0) {
            (lo, hi) = collatz_wielandt(&ax, &x);
        } else {
            lo = estimate;
            hi = estimate;
        }
        increment = (estimate - prev).abs();
        prev = estimate;
        let tol = opts.tol.max(roundoff_floor(norm_a));
        let xmin = x.iter().copied().fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE);
        let floor = 1e3 * f64::EPSILON * (norm_a + shift.abs()) / xmin + opts.tol;
        if increment < tol && hi - lo <= floor {
            return Ok((estimate, x, it));
        }
    }
    Err(Error::NoConvergence {
        what: "resolvent Perron iteration",
        iterations: cap,
        increment,
    })
}

fn power_iteration(a: &Tridiagonal, opts: &EigenOptions) -> Result<(f64, Vec<f64>, usize)> {
    let n = a.len();
    let cap = opts.max_iter.unwrap_or(200 * n);
    // off-diagonals d/h^2 +- b/2h sum to 2d/h^2 per row
    let sigma = 2.0
        * (0..n)
            .map(|i| {
                let offdiag = a.lower[i] + a.upper[i];
                let pot = a.diag[i] + offdiag;
                offdiag + pot.abs()
            })
            .fold(0.0f64, f64::max);
    let mut b = a.clone();
    for v in b.diag.iter_mut() {
        *v += sigma;
    }
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut prev = f64::INFINITY;
    let mut increment = f64::INFINITY;
    let mut lambda = f64::NAN;
    let mut converged = None;
    let tol = opts.tol.max(roundoff_floor(matrix_norm(a) + sigma));
    for it in 1..=cap {
        b.apply_cyclic(&x, &mut y);
        lambda = dot(&x, &y) / dot(&x, &x) - sigma;
        increment = (lambda - prev).abs();
        prev = lambda;
        std::mem::swap(&mut x, &mut y);
        normalize_max(&mut x);
        if increment < tol {
            converged = Some(it);
            break;
        }
    }
    let Some(iterations) = converged else {
        return Err(Error::NoConvergence {
            what: "shifted power iteration",
            iterations: cap,
            increment,
        });
    };
    // polish: one inverse-iteration step at the converged shift
    let shift = lambda + opts.tol.max(1e-12 * (1.0 + lambda.abs()));
    let mut z = x.clone();
    if a.shifted_negation(shift).factor_cyclic().map(|f| f.solve_in_place(&mut z)).is_ok()
        && z.iter().all(|v| v.is_finite())
    {
        normalize_max(&mut z);
        if z.iter().all(|&v| v > 0.0) {
            x = z;
            a.apply_cyclic(&x, &mut y);
            lambda = dot(&x, &y) / dot(&x, &x);
        }
    }
    Ok((lambda, x, iterations + 1))
}

/// Solves `(shift I - A_h) phi = rhs` for `shift` above the principal eigenvalue.
pub fn resolvent_solve(problem: &EigenProblem, shift: f64, rhs: &GridFunction) -> Result<GridFunction> {
    if rhs.grid().len() != problem.grid().len() {
        return Err(Error::validation("rhs", "grid mismatch"));
    }
    if rhs.min() < 0.0 || rhs.max() <= 0.0 {
        return Err(Error::validation("rhs", "must be nonnegative and not identically zero"));
    }
    let bound = principal_eigenpair(problem, 1e-12)?.lambda;
    if !(shift > bound) {
        return Err(Error::ResolventShift { shift, bound });
    }
    let a = discretize(problem)?;
    let m = a.shifted_negation(shift);
    let factor = m.factor_cyclic()?;
    let mut phi = rhs.values().to_vec();
    factor.solve_in_place(&mut phi);

    let rhs_norm = rhs.max_abs();
    let residual = |phi: &[f64]| {
        let mut r = vec![0.0; phi.len()];
        m.apply_cyclic(phi, &mut r);
        for (ri, b) in r.iter_mut().zip(rhs.values()) {
            *ri = b - *ri;
        }
        r
    };
    // one step of iterative refinement if the direct solve is off
    let r = residual(&phi);
    if r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) > 1e-12 * rhs_norm {
        let mut corr = r;
        factor.solve_in_place(&mut corr);
        for (p, c) in phi.iter_mut().zip(corr) {
            *p += c;
        }
    }
    if let Some(j) = phi.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Internal(format!(
            "resolvent solution not positive at node {j} ({})",
            phi[j]
        )));
    }
    GridFunction::new(*problem.grid(), phi)
}

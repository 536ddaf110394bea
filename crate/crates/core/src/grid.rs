//! Uniform periodic grids, grid functions and the declarative coefficient format.
//!
//! A [`PeriodicGrid`] carries the habitat period `L` and `n` nodes `x_j = jL/n`,
//! `j = 0..n`. Coefficients are described by [`PeriodicCoefficient`] and turned
//! into node values with [`sample`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;
pub const DEFAULT_POINTS: usize = 256;

/// Relative slack used when deciding whether a node sits on a breakpoint.
const BREAK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    period: f64,
    n_points: usize,
}

impl PeriodicGrid {
    pub fn new(period: f64, n_points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::validation("L", format!("period must be positive, got {period}")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::validation(
                "n",
                format!("need at least {MIN_POINTS} grid points, got {n_points}"),
            ));
        }
        Ok(Self { period, n_points })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.period / self.n_points as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.node(j))
    }

    /// Same period, `factor` times as many nodes. Old node `j` becomes node `factor * j`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.period, self.n_points * factor)
    }
}

/// An `L`-periodic scalar coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PeriodicCoefficient {
    Constant {
        value: f64,
    },
    /// `a0 + sum_k cos[k] cos(2pi(k+1)x/L) + sum_k sin[k] sin(2pi(k+1)x/L)`
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Right-open intervals `[breaks[i], breaks[i+1])`, the last one wrapping to `L`.
    #[serde(rename = "piecewise")]
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Values at `m` uniform nodes on `[0, L)`, linearly interpolated.
    Samples { values: Vec<f64> },
}

impl PeriodicCoefficient {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn fourier(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self::Fourier { a0, cos, sin }
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        Self::PiecewiseConstant { breaks, values }
    }

    pub fn samples(values: Vec<f64>) -> Self {
        Self::Samples { values }
    }

    /// Checks the variant's invariants against the period `L`. `field` names the
    /// coefficient in error messages.
    pub fn validate(&self, period: f64, field: &str) -> Result<()> {
        let finite = |xs: &[f64], what: &str| -> Result<()> {
            match xs.iter().position(|v| !v.is_finite()) {
                Some(i) => Err(Error::validation(
                    format!("{field}.{what}[{i}]"),
                    "value is not finite",
                )),
                None => Ok(()),
            }
        };
        match self {
            Self::Constant { value } => finite(std::slice::from_ref(value), "value"),
            Self::Fourier { a0, cos, sin } => {
                finite(std::slice::from_ref(a0), "a0")?;
                finite(cos, "cos")?;
                finite(sin, "sin")
            }
            Self::PiecewiseConstant { breaks, values } => {
                if values.is_empty() {
                    return Err(Error::validation(format!("{field}.values"), "must not be empty"));
                }
                if breaks.len() != values.len() {
                    return Err(Error::validation(
                        format!("{field}.breaks"),
                        format!("expected {} breakpoints, got {}", values.len(), breaks.len()),
                    ));
                }
                finite(breaks, "breaks")?;
                finite(values, "values")?;
                if breaks[0] != 0.0 {
                    return Err(Error::validation(format!("{field}.breaks"), "first breakpoint must be 0"));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::validation(
                        format!("{field}.breaks"),
                        "breakpoints must be strictly increasing",
                    ));
                }
                if breaks[breaks.len() - 1] >= period {
                    return Err(Error::validation(
                        format!("{field}.breaks"),
                        format!("breakpoints must lie in [0, {period})"),
                    ));
                }
                Ok(())
            }
            Self::Samples { values } => {
                if values.is_empty() {
                    return Err(Error::validation(format!("{field}.values"), "must not be empty"));
                }
                finite(values, "values")
            }
        }
    }

    /// Evaluates at an arbitrary `x`, wrapping into `[0, L)`. Assumes `validate` passed.
    pub fn evaluate(&self, x: f64, period: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Fourier { a0, cos, sin } => {
                let w = 2.0 * PI * x / period;
                let c: f64 = cos
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * w).cos())
                    .sum();
                let s: f64 = sin
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b * ((k + 1) as f64 * w).sin())
                    .sum();
                a0 + c + s
            }
            Self::PiecewiseConstant { breaks, values } => {
                let slack = BREAK_SLACK * period;
                let mut r = wrap(x, period);
                if r >= period - slack {
                    r = 0.0;
                }
                let idx = breaks
                    .iter()
                    .rposition(|&b| r >= b - slack)
                    .unwrap_or(0);
                values[idx]
            }
            Self::Samples { values } => {
                let m = values.len();
                let pos = wrap(x, period) / period * m as f64;
                let i = (pos.floor() as usize).min(m - 1);
                let frac = pos - i as f64;
                let next = values[(i + 1) % m];
                values[i] + frac * (next - values[i])
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::Fourier { cos, sin, .. } => cos.iter().chain(sin).all(|c| *c == 0.0),
            Self::PiecewiseConstant { values, .. } | Self::Samples { values } => {
                values.windows(2).all(|w| w[0] == w[1])
            }
        }
    }
}

fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        r - period
    } else {
        r
    }
}

/// Node values of a periodic function on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("values[{j}]"), "value is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        periodic_mean(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with a function on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid.len(), other.grid.len(), "grid mismatch");
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `x -> f(-x)`: node `j` takes the value at node `(n - j) mod n`.
    pub fn reflected(&self) -> Self {
        let n = self.values.len();
        Self {
            grid: self.grid,
            values: (0..n).map(|j| self.values[(n - j) % n]).collect(),
        }
    }

    /// Largest node-wise deviation from `other`.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn sample(coeff: &PeriodicCoefficient, grid: &PeriodicGrid) -> Result<GridFunction> {
    coeff.validate(grid.period(), "coefficient")?;
    GridFunction::from_fn(*grid, |x| coeff.evaluate(x, grid.period()))
}

/// Node average, which on a uniform periodic grid is the trapezoidal rule for `(1/L) int_0^L f`.
pub fn periodic_mean(f: &GridFunction) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

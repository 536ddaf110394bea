//! Tridiagonal and cyclic-tridiagonal matrices with direct solvers.
//!
//! Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`. In the cyclic
//! case `lower[0]` couples to `x[n-1]` and `upper[n-1]` couples to `x[0]`; in the
//! plain case those two entries are ignored.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(
            lower.len() == diag.len() && upper.len() == diag.len(),
            "band length mismatch"
        );
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `shift * I - self`.
    pub fn shifted_negation(&self, shift: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|v| -v).collect(),
            diag: self.diag.iter().map(|v| shift - v).collect(),
            upper: self.upper.iter().map(|v| -v).collect(),
        }
    }

    /// `I - dt * self`.
    pub fn implicit_euler(&self, dt: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|v| -dt * v).collect(),
            diag: self.diag.iter().map(|v| 1.0 - dt * v).collect(),
            upper: self.upper.iter().map(|v| -dt * v).collect(),
        }
    }

    pub fn row_sums_cyclic(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.lower[i] + self.diag[i] + self.upper[i])
            .collect()
    }

    pub fn apply_cyclic(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let prev = x[(i + n - 1) % n];
            let next = x[(i + 1) % n];
            out[i] = self.lower[i] * prev + self.diag[i] * x[i] + self.upper[i] * next;
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            out[i] = v;
        }
    }

    /// Dense copy with wraparound corners, mainly for tests.
    pub fn to_dense_cyclic(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] += self.diag[i];
            a[i][(i + n - 1) % n] += self.lower[i];
            a[i][(i + 1) % n] += self.upper[i];
        }
        a
    }

    pub fn factor(&self) -> Result<ThomasFactor> {
        ThomasFactor::new(&self.lower, &self.diag, &self.upper)
    }

    pub fn factor_cyclic(&self) -> Result<CyclicFactor> {
        CyclicFactor::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_cyclic(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor_cyclic()?.solve_in_place(&mut x);
        Ok(x)
    }
}

/// LU factors of a plain tridiagonal matrix (Thomas algorithm, no pivoting).
#[derive(Debug, Clone)]
pub struct ThomasFactor {
    lower: Vec<f64>,
    pivot: Vec<f64>,
    gamma: Vec<f64>,
}

impl ThomasFactor {
    fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut pivot = vec![0.0; n];
        let mut gamma = vec![0.0; n];
        let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * gamma[i - 1]
            };
            if !p.is_finite() || p.abs() <= 1e-300 * scale {
                return Err(Error::Singular { row: i });
            }
            pivot[i] = p;
            if i + 1 < n {
                gamma[i] = upper[i] / p;
            }
        }
        Ok(Self {
            lower: lower.to_vec(),
            pivot,
            gamma,
        })
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivot
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.pivot.len();
        x[0] /= self.pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.gamma[i] * x[i + 1];
        }
    }
}

/// Cyclic solve through a Sherman-Morrison correction of the two corner entries.
#[derive(Debug, Clone)]
pub struct CyclicFactor {
    base: ThomasFactor,
    z: Vec<f64>,
    v_last: f64,
    denom: f64,
}

impl CyclicFactor {
    fn new(a: &Tridiagonal) -> Result<Self> {
        let n = a.len();
        if n < 3 {
            return Err(Error::validation("n", "cyclic solve needs at least 3 rows"));
        }
        let alpha = a.lower[0];
        let beta = a.upper[n - 1];
        let gamma = -a.diag[0];
        if gamma == 0.0 {
            return Err(Error::Singular { row: 0 });
        }
        let mut diag = a.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;
        let mut lower = a.lower.clone();
        lower[0] = 0.0;
        let mut upper = a.upper.clone();
        upper[n - 1] = 0.0;
        let base = ThomasFactor::new(&lower, &diag, &upper)?;

        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = beta;
        base.solve_in_place(&mut z);
        let v_last = alpha / gamma;
        let denom = 1.0 + z[0] + v_last * z[n - 1];
        if !denom.is_finite() || denom == 0.0 {
            return Err(Error::Singular { row: n - 1 });
        }
        Ok(Self {
            base,
            z,
            v_last,
            denom,
        })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        self.base.solve_in_place(x);
        let factor = (x[0] + self.v_last * x[n - 1]) / self.denom;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi -= factor * zi;
        }
    }
}

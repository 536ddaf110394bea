//! Two-patch habitat with closed-form dispersion relation.
//!
//! Good patch `[0, l1)` with growth 1, bad patch `[l1, l)` with growth `a < 1`.
//! With the steady state of species 2 replaced by the growth itself, species 1
//! invades with potential `(1 - c) a(x)` and unit diffusion. Writing
//! `q1^2 = lambda - (1 - c)` and `q2^2 = lambda - a (1 - c)`, the monodromy of
//! `phi'' = (lambda - potential) phi` has half-trace
//!
//! ```text
//! G(lambda) = C1 C2 + (q1^2 + q2^2) / 2 * S1 S2,   C = cosh(q l),  S = sinh(q l) / q
//! ```
//!
//! and `cosh(mu l) = G(lambda)` ties the decay rate to the eigenvalue.

use serde::{Deserialize, Serialize};

use crate::eigen::EigenProblem;
use crate::error::{Error, Result};
use crate::grid::{sample, GridFunction, PeriodicCoefficient, PeriodicGrid};
use crate::model::CompetitionModel;
use crate::speeds::{min_speed_of, LambdaCurve, SpeedResult};

const SERIES_THRESHOLD: f64 = 1e-3;
const DERIVATIVE_STEP: f64 = 1e-6;
const ROOT_TOL: f64 = 1e-10;
const LAMBDA_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HabitatSpec {
    pub l1: f64,
    pub l2: f64,
    pub a: f64,
    pub c: f64,
    pub d2: f64,
}

impl HabitatSpec {
    pub fn new(l1: f64, l2: f64, a: f64, c: f64, d2: f64) -> Result<Self> {
        let spec = Self { l1, l2, a, c, d2 };
        spec.validate()?;
        Ok(spec)
    }

    /// `l1 = l2 = 0.5, a = 0.5, c = 0.5, d2 = 2`.
    pub fn reference() -> Self {
        Self {
            l1: 0.5,
            l2: 0.5,
            a: 0.5,
            c: 0.5,
            d2: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.l1, self.l2, self.a, self.c, self.d2].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("habitat", "parameters must be finite"));
        }
        if !(self.l1 > 0.0) {
            return Err(Error::validation("l1", "must be positive"));
        }
        if !(self.l2 > 0.0) {
            return Err(Error::validation("l2", "must be positive"));
        }
        if !(self.a < 1.0) {
            return Err(Error::validation("a", "bad-patch growth must be below 1"));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::validation("c", "must lie in [0, 1]"));
        }
        if !(self.d2 > 1.0) {
            return Err(Error::validation("d2", "must exceed d1 = 1"));
        }
        if !(self.a_bar() > 0.0) {
            return Err(Error::validation("a", format!("mean growth {} must be positive", self.a_bar())));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.l1 + self.l2
    }

    pub fn a_bar(&self) -> f64 {
        (self.l1 + self.a * self.l2) / self.period()
    }

    pub fn growth(&self) -> PeriodicCoefficient {
        PeriodicCoefficient::piecewise(vec![0.0, self.l1], vec![1.0, self.a])
    }

    /// `(1 - c) a(x)`, the invasion potential with `u2*` replaced by `a`.
    pub fn approximate_potential(&self) -> PeriodicCoefficient {
        let k = 1.0 - self.c;
        PeriodicCoefficient::piecewise(vec![0.0, self.l1], vec![k, k * self.a])
    }

    pub fn model(&self, n: usize) -> Result<CompetitionModel> {
        CompetitionModel::shared_resource(self.growth(), self.c, 1.0, self.d2, self.period(), n)
    }

    /// Species-1 invasion curve on an `n`-point grid with the approximate potential.
    pub fn approximate_curve(&self, n: usize) -> Result<LambdaCurve> {
        let grid = PeriodicGrid::new(self.period(), n)?;
        let m = sample(&self.approximate_potential(), &grid)?;
        Ok(LambdaCurve::new(EigenProblem::new(
            GridFunction::constant(grid, 1.0),
            GridFunction::constant(grid, 0.0),
            m,
            0.0,
        )?))
    }

    pub fn grid_speed(&self, n: usize) -> Result<SpeedResult> {
        min_speed_of(&self.approximate_curve(n)?, None)
    }
}

/// `(cosh(q l), sinh(q l) / q)` for `q^2` of either sign, continuous through 0.
fn patch_propagator(q2: f64, l: f64) -> (f64, f64) {
    let z = q2 * l * l;
    if z.abs() < SERIES_THRESHOLD {
        let c = 1.0 + z / 2.0 + z * z / 24.0 + z * z * z / 720.0;
        let s = l * (1.0 + z / 6.0 + z * z / 120.0 + z * z * z / 5040.0);
        (c, s)
    } else if q2 > 0.0 {
        let q = q2.sqrt();
        ((q * l).cosh(), (q * l).sinh() / q)
    } else {
        let q = (-q2).sqrt();
        ((q * l).cos(), (q * l).sin() / q)
    }
}

fn branch(q2: f64, l: f64) -> &'static str {
    let z = q2 * l * l;
    if z.abs() < SERIES_THRESHOLD {
        "series"
    } else if q2 > 0.0 {
        "hyperbolic"
    } else {
        "trigonometric"
    }
}

pub fn squared_wavenumbers(spec: &HabitatSpec, lambda: f64) -> (f64, f64) {
    (lambda - (1.0 - spec.c), lambda - spec.a * (1.0 - spec.c))
}

#[allow(non_snake_case)]
pub fn G_of_lambda(spec: &HabitatSpec, lambda: f64) -> f64 {
    let (q1, q2) = squared_wavenumbers(spec, lambda);
    let (c1, s1) = patch_propagator(q1, spec.l1);
    let (c2, s2) = patch_propagator(q2, spec.l2);
    c1 * c2 + 0.5 * (q1 + q2) * s1 * s2
}

/// `acosh(G) / l`; `None` where `G < 1`.
pub fn mu_of_lambda(spec: &HabitatSpec, lambda: f64) -> Option<f64> {
    let g = G_of_lambda(spec, lambda);
    if !(g >= 1.0) {
        return None;
    }
    let gm1 = g - 1.0;
    Some(((gm1 + (gm1 * (g + 1.0)).sqrt()).ln_1p()) / spec.period())
}

pub fn small_period_speed(spec: &HabitatSpec) -> f64 {
    2.0 * ((1.0 - spec.c) * spec.a_bar()).sqrt()
}

/// Largest root of `G = 1`: the principal eigenvalue at zero decay rate.
pub fn lambda_min(spec: &HabitatSpec) -> Result<f64> {
    let top = 1.0 - spec.c;
    let bottom = top * spec.a_bar();
    let above = |l: f64| G_of_lambda(spec, l) > 1.0;
    let mut hi = top + 1.0;
    if !above(hi) {
        return Err(Error::Internal("dispersion relation below 1 above the potential".into()));
    }
    let steps = 400;
    let span = hi - bottom;
    let mut lo = None;
    for i in 1..=steps {
        let l = hi - span * i as f64 / steps as f64;
        if !above(l) {
            lo = Some(l);
            break;
        }
        hi = l;
    }
    let Some(mut lo) = lo else {
        return Err(Error::Internal("no band edge found below the potential".into()));
    };
    while hi - lo > 1e-15 * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn mu_derivative(spec: &HabitatSpec, lambda: f64, floor: f64) -> Option<f64> {
    let mut h = DERIVATIVE_STEP * lambda.abs().max(1e-3);
    if lambda - h <= floor {
        h = 0.5 * (lambda - floor);
    }
    Some((mu_of_lambda(spec, lambda + h)? - mu_of_lambda(spec, lambda - h)?) / (2.0 * h))
}

/// `mu'(lambda) lambda / mu(lambda) - 1`.
pub fn stationarity(spec: &HabitatSpec, lambda: f64, floor: f64) -> Option<f64> {
    let mu = mu_of_lambda(spec, lambda)?;
    if mu <= 0.0 {
        return None;
    }
    Some(mu_derivative(spec, lambda, floor)? * lambda / mu - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionResult {
    pub lambda0: f64,
    pub mu0: f64,
    pub c0_plus: f64,
    pub lambda_min: f64,
    pub stationarity_residual: f64,
    pub branch_notes: String,
}

pub fn dispersion_speed(spec: &HabitatSpec) -> Result<DispersionResult> {
    spec.validate()?;
    let floor = lambda_min(spec)?;
    if floor <= 0.0 {
        return Err(Error::NoPositiveSpeed { lambda: floor });
    }
    let s = |l: f64| stationarity(spec, l, floor);
    let mut table = Vec::new();
    let mut lo = floor + 1e-6;
    let mut width = 1e-6;
    let s_lo = s(lo).ok_or_else(|| Error::StationaryNotBracketed { table: vec![] })?;
    table.push((lo, s_lo));
    if s_lo <= 0.0 {
        return Err(Error::StationaryNotBracketed { table });
    }
    let mut hi;
    loop {
        width *= 2.0;
        hi = floor + width;
        if hi > LAMBDA_CAP {
            return Err(Error::StationaryNotBracketed { table });
        }
        let Some(v) = s(hi) else {
            return Err(Error::StationaryNotBracketed { table });
        };
        table.push((hi, v));
        if v < 0.0 {
            break;
        }
        lo = hi;
    }
    while hi - lo > ROOT_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        match s(mid) {
            Some(v) if v > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return Err(Error::StationaryNotBracketed { table }),
        }
    }
    let lambda0 = 0.5 * (lo + hi);
    let mu0 = mu_of_lambda(spec, lambda0).ok_or_else(|| Error::Internal("mu undefined at root".into()))?;
    let residual = s(lambda0).unwrap_or(f64::NAN).abs();
    let (q1, q2) = squared_wavenumbers(spec, lambda0);
    Ok(DispersionResult {
        lambda0,
        mu0,
        c0_plus: lambda0 / mu0,
        lambda_min: floor,
        stationarity_residual: residual,
        branch_notes: format!(
            "good patch {}, bad patch {}",
            branch(q1, spec.l1),
            branch(q2, spec.l2)
        ),
    })
}

/// Rows `(lambda, G, mu, s)` over `[from, to]`; `mu` and `s` are NaN where undefined.
pub fn dispersion_table(spec: &HabitatSpec, from: f64, to: f64, points: usize) -> Result<Vec<[f64; 4]>> {
    let floor = lambda_min(spec)?;
    let points = points.max(2);
    Ok((0..points)
        .map(|i| {
            let l = from + (to - from) * i as f64 / (points - 1) as f64;
            [
                l,
                G_of_lambda(spec, l),
                mu_of_lambda(spec, l).unwrap_or(f64::NAN),
                if l > floor { stationarity(spec, l, floor).unwrap_or(f64::NAN) } else { f64::NAN },
            ]
        })
        .collect())
}

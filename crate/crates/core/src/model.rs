//! Two-species Lotka-Volterra competition in a periodic habitat:
//!
//! ```text
//! u1_t = L1 u1 + u1 (b1 - a11 u1 - a12 u2)
//! u2_t = L2 u2 + u2 (b2 - a21 u1 - a22 u2),     Li u = di u'' - gi u'
//! ```
//!
//! The config schema, semi-trivial steady states, the cooperative transform
//! `v1 = u1, v2 = u2* - u2` and the basic hypothesis checks live here.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::banded::Tridiagonal;
use crate::eigen::{self, EigenProblem};
use crate::error::{Error, Result};
use crate::grid::{sample, GridFunction, PeriodicCoefficient, PeriodicGrid, DEFAULT_POINTS};

pub const STEADY_TOL: f64 = 1e-9;
pub const STEADY_TIME_CAP: f64 = 1e4;

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn zero_coefficient() -> PeriodicCoefficient {
    PeriodicCoefficient::constant(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub d: PeriodicCoefficient,
    #[serde(default = "zero_coefficient")]
    pub g: PeriodicCoefficient,
    pub b: PeriodicCoefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetitionConfig {
    pub a11: PeriodicCoefficient,
    pub a12: PeriodicCoefficient,
    pub a21: PeriodicCoefficient,
    pub a22: PeriodicCoefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(rename = "L")]
    pub period: f64,
    #[serde(default = "default_points")]
    pub n: usize,
    pub species1: SpeciesConfig,
    pub species2: SpeciesConfig,
    pub competition: CompetitionConfig,
}

const REQUIRED_PATHS: &[&str] = &[
    "L",
    "species1",
    "species1.d",
    "species1.b",
    "species2",
    "species2.d",
    "species2.b",
    "competition",
    "competition.a11",
    "competition.a12",
    "competition.a21",
    "competition.a22",
];

impl ModelConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::validation("config", format!("malformed JSON: {e}")))?;
        Self::from_json_value(&value)
    }

    /// Deserializes after checking that every required key is present, so a missing
    /// field is reported by its dotted path.
    pub fn from_json_value(value: &Value) -> Result<Self> {
        for path in REQUIRED_PATHS {
            let mut node = value;
            for key in path.split('.') {
                node = match node.get(key) {
                    Some(v) => v,
                    None => return Err(Error::validation(*path, "missing required field")),
                };
            }
        }
        for species in ["species1", "species2"] {
            for key in ["d", "g", "b"] {
                check_coefficient_shape(value, &format!("{species}.{key}"))?;
            }
        }
        for key in ["a11", "a12", "a21", "a22"] {
            check_coefficient_shape(value, &format!("competition.{key}"))?;
        }
        let config: ModelConfig = serde_json::from_value(value.clone())
            .map_err(|e| Error::validation("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::validation("L", "period must be positive and finite"));
        }
        PeriodicGrid::new(self.period, self.n)?;
        for (name, c) in self.coefficients() {
            c.validate(self.period, name)?;
        }
        Ok(())
    }

    pub fn coefficients(&self) -> [(&'static str, &PeriodicCoefficient); 10] {
        [
            ("species1.d", &self.species1.d),
            ("species1.g", &self.species1.g),
            ("species1.b", &self.species1.b),
            ("species2.d", &self.species2.d),
            ("species2.g", &self.species2.g),
            ("species2.b", &self.species2.b),
            ("competition.a11", &self.competition.a11),
            ("competition.a12", &self.competition.a12),
            ("competition.a21", &self.competition.a21),
            ("competition.a22", &self.competition.a22),
        ]
    }
}

fn check_coefficient_shape(root: &Value, path: &str) -> Result<()> {
    let mut node = root;
    for key in path.split('.') {
        match node.get(key) {
            Some(v) => node = v,
            None => return Ok(()),
        }
    }
    let Some(obj) = node.as_object() else {
        return Err(Error::validation(path, "coefficient must be an object with a \"kind\""));
    };
    let Some(kind) = obj.get("kind").and_then(Value::as_str) else {
        return Err(Error::validation(format!("{path}.kind"), "missing required field"));
    };
    let required: &[&str] = match kind {
        "constant" => &["value"],
        "fourier" => &["a0"],
        "piecewise" => &["breaks", "values"],
        "samples" => &["values"],
        other => {
            return Err(Error::validation(
                format!("{path}.kind"),
                format!("unknown coefficient kind {other:?}"),
            ))
        }
    };
    for key in required {
        if !obj.contains_key(*key) {
            return Err(Error::validation(format!("{path}.{key}"), "missing required field"));
        }
    }
    Ok(())
}

/// Sampled coefficients of one species.
#[derive(Debug, Clone)]
pub struct Species {
    pub d: GridFunction,
    pub g: GridFunction,
    pub b: GridFunction,
}

impl Species {
    pub fn problem(&self, potential: GridFunction, mu: f64) -> Result<EigenProblem> {
        EigenProblem::new(self.d.clone(), self.g.clone(), potential, mu)
    }

    /// `x -> -x`: even parts stay, advection changes sign.
    pub fn reflected(&self) -> Self {
        Self {
            d: self.d.reflected(),
            g: self.g.reflected().map(|v| -v),
            b: self.b.reflected(),
        }
    }
}

/// Positive periodic solution of `L u + u (c - e u) = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct SteadyState {
    pub u: GridFunction,
    /// Marching time before the Newton polish.
    pub converged_in: f64,
    /// `||L u + u (c - e u)||_inf` on the grid.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStates {
    pub u1_star: GridFunction,
    pub u2_star: GridFunction,
    pub converged_in: (f64, f64),
    pub residuals: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct CompetitionModel {
    config: ModelConfig,
    grid: PeriodicGrid,
    species: [Species; 2],
    a11: GridFunction,
    a12: GridFunction,
    a21: GridFunction,
    a22: GridFunction,
    steady: [OnceLock<Result<SteadyState>>; 2],
}

impl CompetitionModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let grid = PeriodicGrid::new(config.period, config.n)?;
        let s = |c: &PeriodicCoefficient| sample(c, &grid);
        let species = [
            Species {
                d: s(&config.species1.d)?,
                g: s(&config.species1.g)?,
                b: s(&config.species1.b)?,
            },
            Species {
                d: s(&config.species2.d)?,
                g: s(&config.species2.g)?,
                b: s(&config.species2.b)?,
            },
        ];
        for (i, sp) in species.iter().enumerate() {
            if sp.d.min() <= 0.0 {
                return Err(Error::validation(
                    format!("species{}.d", i + 1),
                    format!("diffusion must be positive, sampled min {}", sp.d.min()),
                ));
            }
        }
        let comp = &config.competition;
        let a = [s(&comp.a11)?, s(&comp.a12)?, s(&comp.a21)?, s(&comp.a22)?];
        for (name, f) in ["a11", "a12", "a21", "a22"].iter().zip(&a) {
            if f.min() <= 0.0 {
                return Err(Error::validation(
                    format!("competition.{name}"),
                    format!("competition coefficients must be positive, sampled min {}", f.min()),
                ));
            }
        }
        let [a11, a12, a21, a22] = a;
        Ok(Self {
            config,
            grid,
            species,
            a11,
            a12,
            a21,
            a22,
            steady: Default::default(),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::new(ModelConfig::from_json_str(text)?)
    }

    /// Homogeneous model `u1 (r1 (1 - u1 - a1 u2))`, `u2 (r2 (1 - a2 u1 - u2))`.
    pub fn homogeneous(params: HomogeneousParams, period: f64, n: usize) -> Result<Self> {
        let c = PeriodicCoefficient::constant;
        let HomogeneousParams { d1, d2, r1, r2, a1, a2 } = params;
        Self::new(ModelConfig {
            period,
            n,
            species1: SpeciesConfig { d: c(d1), g: c(0.0), b: c(r1) },
            species2: SpeciesConfig { d: c(d2), g: c(0.0), b: c(r2) },
            competition: CompetitionConfig {
                a11: c(r1),
                a12: c(r1 * a1),
                a21: c(r2 * a2),
                a22: c(r2),
            },
        })
    }

    /// Shared growth `a(x)`, `u1 (a - u1 - c u2)`, `u2 (a - u1 - u2)`, constant diffusion, no advection.
    pub fn shared_resource(
        a: PeriodicCoefficient,
        c: f64,
        d1: f64,
        d2: f64,
        period: f64,
        n: usize,
    ) -> Result<Self> {
        let k = PeriodicCoefficient::constant;
        Self::new(ModelConfig {
            period,
            n,
            species1: SpeciesConfig { d: k(d1), g: k(0.0), b: a.clone() },
            species2: SpeciesConfig { d: k(d2), g: k(0.0), b: a },
            competition: CompetitionConfig {
                a11: k(1.0),
                a12: k(c),
                a21: k(1.0),
                a22: k(1.0),
            },
        })
    }

    /// Same coefficients sampled on `n` nodes per period.
    pub fn with_points(&self, n: usize) -> Result<Self> {
        Self::new(ModelConfig {
            n,
            ..self.config.clone()
        })
    }

    /// The habitat mirrored by `x -> -x`, sampled on the same grid.
    pub fn reflected(&self) -> Result<Self> {
        let samples = |f: &GridFunction| PeriodicCoefficient::samples(f.values().to_vec());
        let [s1, s2] = [self.species[0].reflected(), self.species[1].reflected()];
        let conf = |s: &Species| SpeciesConfig {
            d: samples(&s.d),
            g: samples(&s.g),
            b: samples(&s.b),
        };
        Self::new(ModelConfig {
            period: self.config.period,
            n: self.config.n,
            species1: conf(&s1),
            species2: conf(&s2),
            competition: CompetitionConfig {
                a11: samples(&self.a11.reflected()),
                a12: samples(&self.a12.reflected()),
                a21: samples(&self.a21.reflected()),
                a22: samples(&self.a22.reflected()),
            },
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn period(&self) -> f64 {
        self.grid.period()
    }

    /// `index` is 1 or 2.
    pub fn species(&self, index: usize) -> &Species {
        &self.species[index - 1]
    }

    pub fn a11(&self) -> &GridFunction {
        &self.a11
    }

    pub fn a12(&self) -> &GridFunction {
        &self.a12
    }

    pub fn a21(&self) -> &GridFunction {
        &self.a21
    }

    pub fn a22(&self) -> &GridFunction {
        &self.a22
    }

    fn self_limitation(&self, index: usize) -> &GridFunction {
        if index == 1 {
            &self.a11
        } else {
            &self.a22
        }
    }

    /// Semi-trivial steady state of species `index` alone, cached.
    pub fn steady_state(&self, index: usize) -> Result<&SteadyState> {
        self.steady[index - 1]
            .get_or_init(|| {
                let s = self.species(index);
                logistic_steady_state_sampled(&s.d, &s.g, &s.b, self.self_limitation(index), STEADY_TOL)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn u1_star(&self) -> Result<&GridFunction> {
        Ok(&self.steady_state(1)?.u)
    }

    pub fn u2_star(&self) -> Result<&GridFunction> {
        Ok(&self.steady_state(2)?.u)
    }

    pub fn steady_states(&self) -> Result<SteadyStates> {
        let (s1, s2) = rayon::join(|| self.steady_state(1).cloned(), || self.steady_state(2).cloned());
        let (s1, s2) = (s1?, s2?);
        Ok(SteadyStates {
            u1_star: s1.u,
            u2_star: s2.u,
            converged_in: (s1.converged_in, s2.converged_in),
            residuals: (s1.residual, s2.residual),
        })
    }

    /// Transport-diffusion matrix of species `index` (zero potential, `mu = 0`).
    pub fn transport_matrix(&self, index: usize) -> Result<Tridiagonal> {
        let s = self.species(index);
        eigen::discretize(&s.problem(GridFunction::constant(self.grid, 0.0), 0.0)?)
    }

    pub fn build_cooperative(&self) -> Result<CooperativeModel> {
        let u1 = self.u1_star()?.clone();
        let u2 = self.u2_star()?.clone();
        let s1 = &self.species[0];
        let s2 = &self.species[1];
        let lin1 = s1.b.zip_with(&self.a12.zip_with(&u2, |a, u| a * u), |b, au| b - au);
        let lin2 = s2.b.zip_with(&self.a22.zip_with(&u2, |a, u| 2.0 * a * u), |b, au| b - au);
        let source2 = self.a21.zip_with(&u2, |a, u| a * u);
        Ok(CooperativeModel {
            transport: [self.transport_matrix(1)?, self.transport_matrix(2)?],
            d: [s1.d.clone(), s2.d.clone()],
            g: [s1.g.clone(), s2.g.clone()],
            linear: [lin1, lin2],
            source2,
            a11: self.a11.clone(),
            a12: self.a12.clone(),
            a21: self.a21.clone(),
            a22: self.a22.clone(),
            beta: (u1, u2),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousParams {
    pub d1: f64,
    pub d2: f64,
    pub r1: f64,
    pub r2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl HomogeneousParams {
    /// `d1 = 1, d2 = 1.5, r1 = r2 = 1, a1 = 0.5, a2 = 1`.
    pub fn reference() -> Self {
        Self {
            d1: 1.0,
            d2: 1.5,
            r1: 1.0,
            r2: 1.0,
            a1: 0.5,
            a2: 1.0,
        }
    }
}

/// Solves `L u + u (c - e u) = 0` for the positive periodic state.
pub fn logistic_steady_state(
    d: &PeriodicCoefficient,
    g: &PeriodicCoefficient,
    c: &PeriodicCoefficient,
    e: &PeriodicCoefficient,
    grid: &PeriodicGrid,
    tol: f64,
) -> Result<GridFunction> {
    for (name, coeff) in [("d", d), ("g", g), ("c", c), ("e", e)] {
        coeff.validate(grid.period(), name)?;
    }
    let s = |k: &PeriodicCoefficient| sample(k, grid);
    Ok(logistic_steady_state_sampled(&s(d)?, &s(g)?, &s(c)?, &s(e)?, tol)?.u)
}

pub fn logistic_steady_state_sampled(
    d: &GridFunction,
    g: &GridFunction,
    c: &GridFunction,
    e: &GridFunction,
    tol: f64,
) -> Result<SteadyState> {
    if e.min() <= 0.0 {
        return Err(Error::validation("e", "self-limitation must be positive"));
    }
    let grid = *d.grid();
    let lambda = eigen::principal_eigenvalue(&EigenProblem::new(d.clone(), g.clone(), c.clone(), 0.0)?)?;
    if lambda <= 0.0 {
        return Err(Error::Extinction { lambda });
    }
    let a = eigen::discretize(&EigenProblem::new(
        d.clone(),
        g.clone(),
        GridFunction::constant(grid, 0.0),
        0.0,
    )?)?;
    let (c, e) = (c.values(), e.values());
    let n = grid.len();

    let uniform = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if uniform(d.values()) && uniform(g.values()) && uniform(c) && uniform(e) {
        return Ok(SteadyState {
            u: GridFunction::constant(grid, c[0] / e[0]),
            converged_in: 0.0,
            residual: 0.0,
        });
    }

    let rhs = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        a.apply_cyclic(u, &mut out);
        for j in 0..n {
            out[j] += u[j] * (c[j] - e[j] * u[j]);
        }
        out
    };
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let start = 1e-3 * c.iter().zip(e).map(|(c, e)| c / e).fold(0.0f64, f64::max).max(1.0);
    let mut u = vec![start; n];
    let cmax = c.iter().copied().fold(0.0f64, f64::max);
    let dt = 0.5 / cmax.max(1e-3);
    let mut t = 0.0;
    let mut rate = f64::INFINITY;
    let mut marched = false;
    let mut polish_tol = tol;
    loop {
        while t < STEADY_TIME_CAP {
            let mut m = a.implicit_euler(dt);
            for j in 0..n {
                m.diag[j] -= dt * (c[j] - e[j] * u[j]);
            }
            let next = m.solve_cyclic(&u)?;
            rate = next.iter().zip(&u).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs())) / dt;
            u = next;
            t += dt;
            if rate < polish_tol {
                marched = true;
                break;
            }
        }
        if !marched {
            return Err(Error::SteadyStateNotReached {
                t_cap: STEADY_TIME_CAP,
                rate,
            });
        }

        // Newton on F(u) = A u + u (c - e u)
        let mut w = u.clone();
        let mut res = sup(&rhs(&w));
        for _ in 0..30 {
            if res <= 1e-13 * (1.0 + sup(&w)) * (1.0 + sup(&a.diag)) {
                break;
            }
            let mut jac = a.clone();
            for j in 0..n {
                jac.diag[j] += c[j] - 2.0 * e[j] * w[j];
            }
            let f = rhs(&w);
            let Ok(delta) = jac.solve_cyclic(&f) else { break };
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(x, dx)| x - dx).collect();
            let trial_res = sup(&rhs(&trial));
            if !(trial_res < res) {
                break;
            }
            w = trial;
            res = trial_res;
        }
        let floor = 64.0 * f64::EPSILON * sup(&a.diag) * 2.0 * sup(&w);
        if w.iter().all(|&v| v > 0.0) && res <= floor.max(1e-9) {
            return Ok(SteadyState {
                u: GridFunction::new(grid, w)?,
                converged_in: t,
                residual: res,
            });
        }
        if polish_tol <= 1e-14 {
            return Err(Error::SteadyStateNotReached {
                t_cap: STEADY_TIME_CAP,
                rate,
            });
        }
        // Newton failed to polish: march further before retrying
        polish_tol *= 1e-3;
        marched = false;
    }
}

/// Coefficients of the cooperative system in `v1 = u1`, `v2 = u2* - u2`:
///
/// ```text
/// v1_t = L1 v1 + v1 (b1 - a12 u2* - a11 v1 + a12 v2)
/// v2_t = L2 v2 + a21 u2* v1 + v2 (b2 - 2 a22 u2*) - a21 v1 v2 + a22 v2^2
/// ```
#[derive(Debug, Clone)]
pub struct CooperativeModel {
    pub transport: [Tridiagonal; 2],
    pub d: [GridFunction; 2],
    pub g: [GridFunction; 2],
    /// `b1 - a12 u2*` and `b2 - 2 a22 u2*`.
    pub linear: [GridFunction; 2],
    /// `a21 u2*`.
    pub source2: GridFunction,
    pub a11: GridFunction,
    pub a12: GridFunction,
    pub a21: GridFunction,
    pub a22: GridFunction,
    /// `(u1*, u2*)`, the image of E1.
    pub beta: (GridFunction, GridFunction),
}

impl CooperativeModel {
    pub fn to_cooperative(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v2 = self.beta.1.values().iter().zip(u2).map(|(s, u)| s - u).collect();
        (u1.to_vec(), v2)
    }

    pub fn from_cooperative(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u2 = self.beta.1.values().iter().zip(v2).map(|(s, v)| s - v).collect();
        (v1.to_vec(), u2)
    }

    /// Reaction terms at node `j`.
    pub fn reaction(&self, j: usize, v1: f64, v2: f64) -> (f64, f64) {
        let f1 = v1 * (self.linear[0].values()[j] - self.a11.values()[j] * v1 + self.a12.values()[j] * v2);
        let f2 = self.source2.values()[j] * v1 + v2 * self.linear[1].values()[j]
            - self.a21.values()[j] * v1 * v2
            + self.a22.values()[j] * v2 * v2;
        (f1, f2)
    }

    /// Off-diagonal partials `(df1/dv2, df2/dv1)` at node `j`.
    pub fn coupling(&self, j: usize, v1: f64, v2: f64) -> (f64, f64) {
        (
            self.a12.values()[j] * v1,
            self.source2.values()[j] - self.a21.values()[j] * v2,
        )
    }

    pub fn rhs(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = v1.len();
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        self.transport[0].apply_cyclic(v1, &mut r1);
        self.transport[1].apply_cyclic(v2, &mut r2);
        for j in 0..n {
            let (f1, f2) = self.reaction(j, v1[j], v2[j]);
            r1[j] += f1;
            r2[j] += f2;
        }
        (r1, r2)
    }

    /// Smallest off-diagonal partial over a `samples x samples` lattice of each
    /// node's box `[0, beta]`. Nonnegative means the system is cooperative there.
    pub fn min_coupling(&self, samples: usize) -> f64 {
        let steps = samples.max(2) - 1;
        let mut worst = f64::INFINITY;
        for j in 0..self.beta.0.values().len() {
            let (b1, b2) = (self.beta.0.values()[j], self.beta.1.values()[j]);
            for p in 0..=steps {
                for q in 0..=steps {
                    let v1 = b1 * p as f64 / steps as f64;
                    let v2 = b2 * q as f64 / steps as f64;
                    let (c12, c21) = self.coupling(j, v1, v2);
                    worst = worst.min(c12).min(c21);
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub lambda_1: f64,
    pub lambda_2: f64,
    /// `lambda(d1, g1, b1 - a12 u2*)`; absent when species 2 has no steady state.
    pub lambda_h2: Option<f64>,
    pub h1_species1: bool,
    pub h1_species2: bool,
    pub h1: bool,
    pub h2: bool,
    /// (H2) forces `lambda(d1, g1, b1) > 0`.
    pub h1_species1_implied: bool,
    pub holds: bool,
}

pub fn hypothesis_h1_h2(model: &CompetitionModel) -> Result<HypothesisReport> {
    let lam = |i: usize| -> Result<f64> {
        let s = model.species(i);
        eigen::principal_eigenvalue(&s.problem(s.b.clone(), 0.0)?)
    };
    let (lambda_1, lambda_2) = rayon::join(|| lam(1), || lam(2));
    let (lambda_1, lambda_2) = (lambda_1?, lambda_2?);
    let lambda_h2 = if lambda_2 > 0.0 {
        let s = model.species(1);
        let u2 = model.u2_star()?;
        let pot = s.b.zip_with(&model.a12().zip_with(u2, |a, u| a * u), |b, au| b - au);
        Some(eigen::principal_eigenvalue(&s.problem(pot, 0.0)?)?)
    } else {
        None
    };
    let h1_species1 = lambda_1 > 0.0;
    let h1_species2 = lambda_2 > 0.0;
    let h2 = lambda_h2.is_some_and(|l| l > 0.0);
    Ok(HypothesisReport {
        lambda_1,
        lambda_2,
        lambda_h2,
        h1_species1,
        h1_species2,
        h1: h1_species1 && h1_species2,
        h2,
        h1_species1_implied: h2,
        holds: h1_species1 && h1_species2 && h2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct H3Report {
    pub verified: bool,
    /// `"homogeneous"`, `"shared-resource"` or `"assumed, not verified"`.
    pub status: String,
    pub detail: String,
}

/// Absence of periodic coexistence states, certified only in the two model
/// classes where it is provable here; otherwise reported as assumed.
pub fn hypothesis_h3(model: &CompetitionModel) -> H3Report {
    let flat = |f: &GridFunction| f.values().iter().all(|&v| v == f.values()[0]);
    let s1 = model.species(1);
    let s2 = model.species(2);
    let all_flat = [&s1.d, &s1.g, &s1.b, &s2.d, &s2.g, &s2.b]
        .into_iter()
        .chain([model.a11(), model.a12(), model.a21(), model.a22()])
        .all(flat);
    if all_flat {
        let v = |f: &GridFunction| f.values()[0];
        let (b1, b2) = (v(&s1.b), v(&s2.b));
        let (a11, a12, a21, a22) = (v(model.a11()), v(model.a12()), v(model.a21()), v(model.a22()));
        let det = a11 * a22 - a12 * a21;
        if det != 0.0 && b1 > 0.0 && b2 > 0.0 {
            let u = (b1 * a22 - a12 * b2) / det;
            let w = (a11 * b2 - a21 * b1) / det;
            if u > 0.0 && w > 0.0 {
                return H3Report {
                    verified: false,
                    status: "violated".into(),
                    detail: format!("constant coexistence state ({u}, {w})"),
                };
            }
            return H3Report {
                verified: true,
                status: "homogeneous".into(),
                detail: format!("no positive constant coexistence state; interior solution ({u}, {w})"),
            };
        }
    }

    let d_flat = flat(&s1.d) && flat(&s2.d);
    let shared = d_flat
        && s1.d.values()[0] < s2.d.values()[0]
        && s1.g.max_abs() == 0.0
        && s2.g.max_abs() == 0.0
        && s1.b == s2.b
        && !flat(&s1.b)
        && s1.b.mean() >= 0.0
        && model.a11().values().iter().all(|&v| v == 1.0)
        && model.a21().values().iter().all(|&v| v == 1.0)
        && model.a22().values().iter().all(|&v| v == 1.0)
        && flat(model.a12())
        && (0.0..=1.0).contains(&model.a12().values()[0]);
    if shared {
        return H3Report {
            verified: true,
            status: "shared-resource".into(),
            detail: "non-constant shared growth with nonnegative mean, d1 < d2, 0 <= c <= 1".into(),
        };
    }
    H3Report {
        verified: false,
        status: "assumed, not verified".into(),
        detail: "no certificate available for this coefficient class".into(),
    }
}

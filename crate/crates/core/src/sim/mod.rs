//! Time-dependent solver for the competition system, front tracking and
//! wave-profile extraction.
//!
//! Two topologies are supported: a truncated line `[x_min, x_max]` with
//! zero-flux ends, used for invasion runs, and a single period with periodic
//! ends, used for attractivity runs.

mod front;
mod profile;
mod stepper;

pub use front::{measure_speed, measure_speed_levels, FrontTrace, BOUNDARY_GUARD_CELLS};
pub use profile::{extract_profile, ProfileDiagnostics, WaveProfile, REGISTRATION_TOL};
pub use stepper::{reaction, Simulation, CLIP_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicCoefficient;
use crate::model::CompetitionModel;

/// Distance below which a periodic run counts as having reached `E1`.
pub const ATTRACTIVITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Imex,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Mirror ghost nodes: zero gradient at both ends.
    #[default]
    Reflecting,
    /// Ghost nodes scaled by the semi-trivial steady state, so that `E1` and
    /// `E2` restricted to the domain are exact fixed points.
    RelativeReflecting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialCondition {
    /// `u1 = u1*` on `x <= front` and zero beyond; `u2 = u2*` everywhere.
    Invasion {
        #[serde(default)]
        front: f64,
    },
    /// Periodic functions of `x`.
    Periodic {
        u1: PeriodicCoefficient,
        u2: PeriodicCoefficient,
    },
    /// `(f1 u1*, f2 u2*)`.
    Fractions { u1: f64, u2: f64 },
    /// Node values, one per simulation node.
    Custom { u1: Vec<f64>, u2: Vec<f64> },
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::Invasion { front: 0.0 }
    }
}

fn default_domain() -> (f64, f64) {
    (-50.0, 150.0)
}
fn default_dx() -> f64 {
    0.05
}
fn default_t_final() -> f64 {
    80.0
}
fn default_output() -> f64 {
    0.5
}
fn default_theta() -> f64 {
    0.5
}
fn default_fit_fraction() -> f64 {
    0.5
}
fn default_profile_periods() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_domain")]
    pub domain: (f64, f64),
    #[serde(default = "default_dx")]
    pub dx: f64,
    /// `None` selects the automatic step.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_output")]
    pub output_interval: f64,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Trailing fraction of the time window used for the speed fit.
    #[serde(default = "default_fit_fraction")]
    pub fit_fraction: f64,
    /// Whole periods spanned by profile snapshots.
    #[serde(default = "default_profile_periods")]
    pub profile_periods: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            domain: default_domain(),
            dx: default_dx(),
            dt: None,
            t_final: default_t_final(),
            output_interval: default_output(),
            initial: InitialCondition::default(),
            boundary: Boundary::default(),
            scheme: Scheme::default(),
            theta: default_theta(),
            fit_fraction: default_fit_fraction(),
            profile_periods: default_profile_periods(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self, period: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < 0.0 && 0.0 < hi) {
            return Err(Error::validation("domain", "need x_min < 0 < x_max"));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::validation("dx", "must be positive"));
        }
        let per = period / self.dx;
        if (per - per.round()).abs() > 1e-12 * per.max(1.0) || per.round() < 1.0 {
            return Err(Error::validation("dx", "must divide the period"));
        }
        let span = (hi - lo) / self.dx;
        if (span - span.round()).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::validation("domain", "length must be a multiple of dx"));
        }
        if (lo / self.dx - (lo / self.dx).round()).abs() > 1e-9 * (lo / self.dx).abs().max(1.0) {
            return Err(Error::validation("domain", "x_min must be a multiple of dx"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::validation("dt", "must be positive or auto"));
            }
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::validation("t_final", "must be positive"));
        }
        if !(self.output_interval > 0.0) {
            return Err(Error::validation("output_interval", "must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::validation("theta", "must lie in (0, 1)"));
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) {
            return Err(Error::validation("fit_fraction", "must lie in (0, 1]"));
        }
        if self.profile_periods == 0 {
            return Err(Error::validation("profile_periods", "must be at least 1"));
        }
        Ok(())
    }

    /// Nodes per period.
    pub fn points_per_period(&self, period: f64) -> usize {
        (period / self.dx).round() as usize
    }

    pub fn node_count(&self) -> usize {
        ((self.domain.1 - self.domain.0) / self.dx).round() as usize + 1
    }

    /// Notes on domain sizing; never fatal.
    pub fn warnings(&self, period: f64, expected_speed: Option<f64>) -> Vec<String> {
        let mut out = Vec::new();
        let len = self.domain.1 - self.domain.0;
        if len < 20.0 * period {
            out.push(format!("domain length {len} is shorter than 20 periods"));
        }
        if let Some(c) = expected_speed {
            let reach = self.initial_front() + c * self.t_final;
            if reach > self.domain.1 - BOUNDARY_GUARD_CELLS as f64 * self.dx {
                out.push(format!("front may reach the right boundary (expected position {reach:.3})"));
            }
        }
        out
    }

    fn initial_front(&self) -> f64 {
        match self.initial {
            InitialCondition::Invasion { front } => front,
            _ => 0.0,
        }
    }
}

/// Distance-to-`E1` series from a run on one period.
#[derive(Debug, Clone, Serialize)]
pub struct AttractivityRun {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub final_distance: f64,
    pub min_distance: f64,
    /// First output time with distance below [`ATTRACTIVITY_TOL`].
    pub reached_at: Option<f64>,
    pub dt: f64,
}

impl AttractivityRun {
    pub fn rows(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.times.iter().zip(&self.distances).map(|(&t, &d)| [t, d])
    }
}

/// Integrates periodic initial data on one period (the model's own grid) and
/// records `max |u - E1|` every `output_interval`.
pub fn run_periodic_ivp(
    model: &CompetitionModel,
    u1: &[f64],
    u2: &[f64],
    t_final: f64,
    dt: Option<f64>,
    output_interval: f64,
) -> Result<AttractivityRun> {
    let n = model.grid().len();
    if u1.len() != n || u2.len() != n {
        return Err(Error::validation("initial", "need one value per grid node"));
    }
    if u1.iter().chain(u2).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::validation("initial", "values must be finite and nonnegative"));
    }
    if u1.iter().all(|&v| v == 0.0) {
        return Err(Error::validation("initial.u1", "must not vanish identically"));
    }
    if !(t_final > 0.0) || !(output_interval > 0.0) {
        return Err(Error::validation("t_final", "horizon and output interval must be positive"));
    }
    let mut sim = Simulation::periodic(model, u1.to_vec(), u2.to_vec(), dt)?;
    let star = model.u1_star()?.values().to_vec();
    let distance = |sim: &Simulation| {
        let (v1, v2) = sim.state();
        v1.iter()
            .zip(&star)
            .zip(v2)
            .map(|((a, b), c)| (a - b).abs().max(c.abs()))
            .fold(0.0, f64::max)
    };
    let mut times = vec![0.0];
    let mut distances = vec![distance(&sim)];
    let outputs = (t_final / output_interval).round().max(1.0) as usize;
    for k in 1..=outputs {
        let target = (k as f64 * output_interval).min(t_final);
        sim.advance_to(target)?;
        times.push(target);
        distances.push(distance(&sim));
    }
    let reached_at = times
        .iter()
        .zip(&distances)
        .find(|(_, &d)| d < ATTRACTIVITY_TOL)
        .map(|(&t, _)| t);
    Ok(AttractivityRun {
        final_distance: *distances.last().unwrap(),
        min_distance: distances.iter().copied().fold(f64::INFINITY, f64::min),
        reached_at,
        dt: sim.dt(),
        times,
        distances,
    })
}

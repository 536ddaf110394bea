use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CompetitionModel;

use super::{InitialCondition, Simulation, SimulationConfig};

/// Minimum distance, in cells, between a tracked front and the right end.
pub const BOUNDARY_GUARD_CELLS: usize = 5;

/// Front positions of one level set and the fitted speed.
#[derive(Debug, Clone, Serialize)]
pub struct FrontTrace {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub theta: f64,
    pub level: f64,
    pub fitted_speed: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
    /// Largest backward jump between consecutive outputs after the first half.
    pub max_retreat: f64,
}

impl FrontTrace {
    pub fn rows(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.times.iter().zip(&self.positions).map(|(&t, &x)| [t, x])
    }

    /// Position at `t` by linear interpolation of the recorded trace.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let k = self.times.iter().position(|&s| s >= t)?;
        if k == 0 || self.times[k] == t {
            return Some(self.positions[k]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Some(self.positions[k - 1] + w * (self.positions[k] - self.positions[k - 1]))
    }
}

/// Rightmost crossing of `level` by `u`, linearly interpolated between nodes.
/// `None` when `u` is below `level` everywhere.
pub(crate) fn rightmost_crossing(x: &[f64], u: &[f64], level: f64) -> Option<f64> {
    let i = u.iter().rposition(|&v| v >= level)?;
    if i + 1 == u.len() {
        return Some(x[i]);
    }
    let drop = u[i] - u[i + 1];
    let w = if drop > 0.0 { (u[i] - level) / drop } else { 0.0 };
    Some(x[i] + w * (x[i + 1] - x[i]))
}

/// Least-squares line through `(t, x)`; returns slope and RMS residual.
fn fit_line(t: &[f64], x: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let stx: f64 = t.iter().zip(x).map(|(a, b)| (a - tm) * (b - xm)).sum();
    let slope = stx / stt;
    let rss: f64 = t
        .iter()
        .zip(x)
        .map(|(a, b)| (b - xm - slope * (a - tm)).powi(2))
        .sum();
    (slope, (rss / n).sqrt())
}

pub fn measure_speed(model: &CompetitionModel, config: &SimulationConfig) -> Result<FrontTrace> {
    Ok(measure_speed_levels(model, config, &[config.theta])?.remove(0))
}

/// One invasion run tracked at several threshold fractions.
pub fn measure_speed_levels(
    model: &CompetitionModel,
    config: &SimulationConfig,
    thetas: &[f64],
) -> Result<Vec<FrontTrace>> {
    if !matches!(config.initial, InitialCondition::Invasion { .. }) {
        return Err(Error::validation("initial", "speed measurement needs invasion data"));
    }
    if thetas.is_empty() || thetas.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::validation("theta", "must lie in (0, 1)"));
    }
    let mut sim = Simulation::new(model, config)?;
    let (u1_star, _) = sim.steady_states();
    let floor = u1_star.iter().copied().fold(f64::INFINITY, f64::min);
    let levels: Vec<f64> = thetas.iter().map(|t| t * floor).collect();
    let x_guard = *sim.nodes().last().unwrap() - BOUNDARY_GUARD_CELLS as f64 * sim.spacing();

    let outputs = (config.t_final / config.output_interval).round().max(2.0) as usize;
    let mut times = Vec::with_capacity(outputs + 1);
    let mut positions = vec![Vec::with_capacity(outputs + 1); levels.len()];
    for k in 0..=outputs {
        let t = (k as f64 * config.output_interval).min(config.t_final);
        sim.advance_to(t)?;
        times.push(t);
        for (lvl, pos) in levels.iter().zip(positions.iter_mut()) {
            let p = rightmost_crossing(sim.nodes(), sim.state().0, *lvl).ok_or(Error::NoFront)?;
            if p > x_guard {
                return Err(Error::BoundaryContaminated {
                    time: t,
                    position: p,
                    cells: BOUNDARY_GUARD_CELLS,
                });
            }
            pos.push(p);
        }
    }

    let t_b = config.t_final;
    let t_a = t_b * (1.0 - config.fit_fraction);
    let start = times.iter().position(|&t| t >= t_a - 1e-12).unwrap();
    if times.len() - start < 3 {
        return Err(Error::validation("fit_fraction", "fit window holds fewer than three outputs"));
    }
    let half = times.len() / 2;
    Ok(thetas
        .iter()
        .zip(levels)
        .zip(positions)
        .map(|((&theta, level), pos)| {
            let (fitted_speed, fit_residual) = fit_line(&times[start..], &pos[start..]);
            let max_retreat = pos[half..]
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(0.0, f64::max);
            FrontTrace {
                times: times.clone(),
                positions: pos,
                theta,
                level,
                fitted_speed,
                fit_window: (times[start], t_b),
                fit_residual,
                max_retreat,
            }
        })
        .collect())
}

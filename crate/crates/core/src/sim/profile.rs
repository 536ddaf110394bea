use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CompetitionModel;

use super::front::rightmost_crossing;
use super::{InitialCondition, Simulation, SimulationConfig, BOUNDARY_GUARD_CELLS};

/// Registration residual above which a profile is flagged as not converged.
pub const REGISTRATION_TOL: f64 = 1e-2;
/// Slack for monotonicity checks beyond adjacent cells.
const MONOTONE_SLACK: f64 = 1e-8;
/// Periods beyond the initial block excluded from the profile. Nodes in the
/// block start populated by the invader and are never crossed by the front.
const BLOCK_MARGIN_PERIODS: f64 = 5.0;
/// Nodes already behind the front at this fraction of the horizon were
/// crossed while the front was still forming and are excluded as well.
const FORMATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct ProfileDiagnostics {
    /// Largest increase of `u1` along `xi` between cells two or more apart.
    pub u1_increase: f64,
    /// Largest decrease of `u2` along `xi` between cells two or more apart.
    pub u2_decrease: f64,
    pub u1_nonincreasing: bool,
    pub u2_nondecreasing: bool,
    /// `max |u - (u1*, 0)|` on the smallest-`xi` row.
    pub left_edge_error: f64,
    /// `max |u - (0, u2*)|` on the largest-`xi` row.
    pub right_edge_error: f64,
    /// Largest spread across phases at fixed `xi`.
    pub phase_variation: f64,
    /// Largest spread across snapshots in the same bin.
    pub registration_residual: f64,
    pub converged: bool,
}

/// Profile `V(xi, phase)` on the lattice `xi_grid x x_phase`.
#[derive(Debug, Clone, Serialize)]
pub struct WaveProfile {
    pub xi_grid: Vec<f64>,
    pub x_phase: Vec<f64>,
    /// `u1[row][phase]`.
    pub u1: Vec<Vec<f64>>,
    pub u2: Vec<Vec<f64>>,
    pub speed_used: f64,
    /// Start of the snapshot window and the front position there.
    pub t_start: f64,
    pub reference_position: f64,
    pub diagnostics: ProfileDiagnostics,
}

impl WaveProfile {
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.xi_grid.iter().enumerate().flat_map(move |(j, &xi)| {
            self.x_phase
                .iter()
                .enumerate()
                .map(move |(p, &ph)| [xi, ph, self.u1[j][p], self.u2[j][p]])
        })
    }
}

#[derive(Clone, Copy)]
struct Bin {
    count: usize,
    sum: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Default for Bin {
    fn default() -> Self {
        Self {
            count: 0,
            sum: [0.0; 2],
            lo: [f64::INFINITY; 2],
            hi: [f64::NEG_INFINITY; 2],
        }
    }
}

/// Samples the late-time invasion solution at `t_a + (k L + q dx) / c` for
/// `k < profile_periods` and every node offset `q` of one period, so that
/// snapshot `(k, q)` is the wave shifted by `k L + q dx`, and bins the
/// registered values by `(xi, x mod L)`.
pub fn extract_profile(model: &CompetitionModel, config: &SimulationConfig, speed: f64) -> Result<WaveProfile> {
    let InitialCondition::Invasion { front } = config.initial else {
        return Err(Error::validation("initial", "profile extraction needs invasion data"));
    };
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::validation("speed", "must be positive"));
    }
    let period = model.period();
    let mut sim = Simulation::new(model, config)?;
    let n_per = config.points_per_period(period);
    let dx = sim.spacing();
    let periods = config.profile_periods;
    let t_a = config.t_final - periods as f64 * period / speed;
    if t_a <= 0.0 {
        return Err(Error::validation("t_final", "too short for the requested snapshot window"));
    }
    let n = sim.nodes().len();
    let margin = BOUNDARY_GUARD_CELLS;
    let x_guard = sim.nodes()[n - 1] - margin as f64 * dx;
    let (u1_star, u2_star) = sim.steady_states();
    let level = config.theta * u1_star.iter().copied().fold(f64::INFINITY, f64::min);
    let star_by_phase = {
        let mut s = vec![[0.0; 2]; n_per];
        for (i, &p) in sim.period_index().iter().enumerate() {
            s[p] = [u1_star[i], u2_star[i]];
        }
        s
    };

    sim.advance_to(FORMATION_FRACTION * config.t_final)?;
    let formed = rightmost_crossing(sim.nodes(), sim.state().0, level).ok_or(Error::NoFront)?;
    sim.advance_to(t_a)?;
    let x_a = rightmost_crossing(sim.nodes(), sim.state().0, level).ok_or(Error::NoFront)?;
    let x_min = sim.nodes()[0];
    let i_a = ((x_a - x_min) / dx).round() as i64;
    let first = sim
        .nodes()
        .iter()
        .position(|&x| x >= formed.max(front + BLOCK_MARGIN_PERIODS * period))
        .unwrap_or(n)
        .max(margin);
    if first + margin >= n {
        return Err(Error::validation("domain", "no room beyond the initial block"));
    }
    let lead = (periods * n_per) as i64;
    let j_min = first as i64 - i_a - lead;
    let j_max = (n - 1 - margin) as i64 - i_a;
    let rows = (j_max - j_min + 1) as usize;
    let mut bins = vec![Bin::default(); rows * n_per];

    for k in 0..periods {
        for q in 0..n_per {
            let t = t_a + ((k * n_per + q) as f64 * dx) / speed;
            sim.advance_to(t)?;
            let (u1, u2) = sim.state();
            if let Some(p) = rightmost_crossing(sim.nodes(), u1, level) {
                if p > x_guard {
                    return Err(Error::BoundaryContaminated {
                        time: t,
                        position: p,
                        cells: margin,
                    });
                }
            }
            let shift = i_a + (k * n_per + q) as i64;
            for i in first..n - margin {
                let j = i as i64 - shift;
                let b = &mut bins[(j - j_min) as usize * n_per + sim.period_index()[i]];
                b.count += 1;
                for (c, v) in [u1[i], u2[i]].into_iter().enumerate() {
                    b.sum[c] += v;
                    b.lo[c] = b.lo[c].min(v);
                    b.hi[c] = b.hi[c].max(v);
                }
            }
        }
    }

    let complete: Vec<usize> = (0..rows)
        .filter(|&r| bins[r * n_per..(r + 1) * n_per].iter().all(|b| b.count == periods))
        .collect();
    if complete.len() < 2 {
        return Err(Error::validation("domain", "too small to hold a registered profile"));
    }
    let offset = x_min + i_a as f64 * dx - x_a;
    let mut xi_grid = Vec::with_capacity(complete.len());
    let mut u1 = Vec::with_capacity(complete.len());
    let mut u2 = Vec::with_capacity(complete.len());
    let mut registration: f64 = 0.0;
    for &r in &complete {
        xi_grid.push(offset + (r as i64 + j_min) as f64 * dx);
        let row = &bins[r * n_per..(r + 1) * n_per];
        u1.push(row.iter().map(|b| b.sum[0] / periods as f64).collect::<Vec<_>>());
        u2.push(row.iter().map(|b| b.sum[1] / periods as f64).collect::<Vec<_>>());
        for b in row {
            registration = registration.max(b.hi[0] - b.lo[0]).max(b.hi[1] - b.lo[1]);
        }
    }

    let column = |field: &Vec<Vec<f64>>, p: usize| field.iter().map(|r| r[p]).collect::<Vec<_>>();
    let mut u1_increase: f64 = 0.0;
    let mut u2_decrease: f64 = 0.0;
    for p in 0..n_per {
        u1_increase = u1_increase.max(far_increase(&column(&u1, p)));
        let neg: Vec<f64> = column(&u2, p).iter().map(|v| -v).collect();
        u2_decrease = u2_decrease.max(far_increase(&neg));
    }
    let spread = |r: &Vec<f64>| {
        r.iter().copied().fold(f64::NEG_INFINITY, f64::max) - r.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let phase_variation = u1.iter().chain(&u2).map(spread).fold(0.0, f64::max);
    let last = complete.len() - 1;
    let left_edge_error = (0..n_per)
        .map(|p| (u1[0][p] - star_by_phase[p][0]).abs().max(u2[0][p].abs()))
        .fold(0.0, f64::max);
    let right_edge_error = (0..n_per)
        .map(|p| u1[last][p].abs().max((u2[last][p] - star_by_phase[p][1]).abs()))
        .fold(0.0, f64::max);

    Ok(WaveProfile {
        xi_grid,
        x_phase: (0..n_per).map(|p| p as f64 * dx).collect(),
        u1,
        u2,
        speed_used: speed,
        t_start: t_a,
        reference_position: x_a,
        diagnostics: ProfileDiagnostics {
            u1_increase,
            u2_decrease,
            u1_nonincreasing: u1_increase <= MONOTONE_SLACK,
            u2_nondecreasing: u2_decrease <= MONOTONE_SLACK,
            left_edge_error,
            right_edge_error,
            phase_variation,
            registration_residual: registration,
            converged: registration <= REGISTRATION_TOL,
        },
    })
}

/// `max_{k >= j + 2} (v[k] - v[j])`, clamped at zero: increases between
/// adjacent cells are tolerated, any longer-range increase is not.
pub(crate) fn far_increase(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut suffix = vec![f64::NEG_INFINITY; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1].max(v[k]);
    }
    (0..n - 2).map(|j| suffix[j + 2] - v[j]).fold(0.0, f64::max)
}

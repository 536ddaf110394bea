use crate::banded::{CyclicFactor, ThomasFactor, Tridiagonal};
use crate::error::{Error, Result};
use crate::model::CompetitionModel;

use super::{Boundary, InitialCondition, Scheme, SimulationConfig};

/// Undershoots below `-CLIP_TOL` are counted when clipped to zero.
pub const CLIP_TOL: f64 = 1e-10;
const CLIP_FRACTION: f64 = 1e-3;
/// Diagonal of the implicit transport tableau.
const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone)]
enum Factor {
    Line(ThomasFactor),
    Ring(CyclicFactor),
}

impl Factor {
    fn new(m: &Tridiagonal, ring: bool) -> Result<Self> {
        Ok(if ring {
            Self::Ring(m.factor_cyclic()?)
        } else {
            Self::Line(m.factor()?)
        })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            Self::Line(f) => f.solve_in_place(x),
            Self::Ring(f) => f.solve_in_place(x),
        }
    }
}

/// Per-node Lotka-Volterra coefficients.
#[derive(Debug, Clone, Copy)]
struct Local {
    b1: f64,
    b2: f64,
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
}

impl Local {
    #[inline]
    fn rhs(&self, u1: f64, u2: f64) -> (f64, f64) {
        reaction(
            (self.b1, self.b2),
            [self.a11, self.a12, self.a21, self.a22],
            u1,
            u2,
        )
    }

    fn jacobian_diagonal(&self, u1: f64, u2: f64) -> (f64, f64) {
        (
            self.b1 - 2.0 * self.a11 * u1 - self.a12 * u2,
            self.b2 - self.a21 * u1 - 2.0 * self.a22 * u2,
        )
    }
}

/// Kinetic terms `(u1 (b1 - a11 u1 - a12 u2), u2 (b2 - a21 u1 - a22 u2))`.
#[inline]
pub fn reaction(b: (f64, f64), a: [f64; 4], u1: f64, u2: f64) -> (f64, f64) {
    (
        u1 * (b.0 - a[0] * u1 - a[1] * u2),
        u2 * (b.1 - a[2] * u1 - a[3] * u2),
    )
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct Simulation {
    x: Vec<f64>,
    dx: f64,
    period_index: Vec<usize>,
    ring: bool,
    scheme: Scheme,
    dt: f64,
    transport: [Tridiagonal; 2],
    factors: Option<[Factor; 2]>,
    local: Vec<Local>,
    u_star: [Vec<f64>; 2],
    bounds: [f64; 2],
    u: [Vec<f64>; 2],
    t: f64,
    steps: usize,
    clipped: usize,
    overshoot: f64,
}

impl Simulation {
    /// Truncated-line run described by `config`. Coefficients and steady
    /// states are taken from the model resampled on the simulation spacing.
    pub fn new(model: &CompetitionModel, config: &SimulationConfig) -> Result<Self> {
        let period = model.period();
        config.validate(period)?;
        let n_per = config.points_per_period(period);
        let model = if model.grid().len() == n_per {
            model.clone()
        } else {
            model.with_points(n_per)?
        };
        let dx = config.dx;
        let (x_min, _) = config.domain;
        let n = config.node_count();
        let offset = (x_min / dx).round() as i64;
        let x: Vec<f64> = (0..n).map(|i| (offset + i as i64) as f64 * dx).collect();
        let period_index: Vec<usize> = (0..n)
            .map(|i| (offset + i as i64).rem_euclid(n_per as i64) as usize)
            .collect();
        let star = [model.u1_star()?.values().to_vec(), model.u2_star()?.values().to_vec()];
        let u_star = [
            period_index.iter().map(|&p| star[0][p]).collect::<Vec<_>>(),
            period_index.iter().map(|&p| star[1][p]).collect::<Vec<_>>(),
        ];

        let mut transport = [model.transport_matrix(1)?, model.transport_matrix(2)?];
        for (k, t) in transport.iter_mut().enumerate() {
            let mut line = Tridiagonal::new(
                period_index.iter().map(|&p| t.lower[p]).collect(),
                period_index.iter().map(|&p| t.diag[p]).collect(),
                period_index.iter().map(|&p| t.upper[p]).collect(),
            );
            let (left, right) = match config.boundary {
                Boundary::Reflecting => (1.0, 1.0),
                Boundary::RelativeReflecting => {
                    let s = &star[k];
                    let at = |j: i64| s[j.rem_euclid(n_per as i64) as usize];
                    let last = offset + n as i64 - 1;
                    (at(offset - 1) / at(offset + 1), at(last + 1) / at(last - 1))
                }
            };
            line.upper[0] += left * line.lower[0];
            line.lower[0] = 0.0;
            line.lower[n - 1] += right * line.upper[n - 1];
            line.upper[n - 1] = 0.0;
            *t = line;
        }

        let (u1, u2) = match &config.initial {
            InitialCondition::Invasion { front } => (
                x.iter()
                    .zip(&u_star[0])
                    .map(|(&xi, &s)| if xi <= front + 1e-9 * dx { s } else { 0.0 })
                    .collect(),
                u_star[1].clone(),
            ),
            InitialCondition::Periodic { u1, u2 } => {
                u1.validate(period, "initial.u1")?;
                u2.validate(period, "initial.u2")?;
                (
                    x.iter().map(|&xi| u1.evaluate(xi, period)).collect(),
                    x.iter().map(|&xi| u2.evaluate(xi, period)).collect(),
                )
            }
            InitialCondition::Fractions { u1, u2 } => (
                u_star[0].iter().map(|s| u1 * s).collect(),
                u_star[1].iter().map(|s| u2 * s).collect(),
            ),
            InitialCondition::Custom { u1, u2 } => {
                if u1.len() != n || u2.len() != n {
                    return Err(Error::validation("initial", format!("custom data needs {n} values per species")));
                }
                (u1.clone(), u2.clone())
            }
        };
        let local = period_index.iter().map(|&p| local_at(&model, p)).collect();
        Self::assemble(
            x,
            dx,
            period_index,
            false,
            (config.scheme, config.dt, transport_scales(&model)),
            transport,
            local,
            u_star,
            [u1, u2],
        )
    }

    /// Run on one period of the model's own grid with periodic ends.
    pub fn periodic(model: &CompetitionModel, u1: Vec<f64>, u2: Vec<f64>, dt: Option<f64>) -> Result<Self> {
        let grid = model.grid();
        let n = grid.len();
        if u1.len() != n || u2.len() != n {
            return Err(Error::validation("initial", "need one value per grid node"));
        }
        let x = grid.nodes().collect();
        let u_star = [model.u1_star()?.values().to_vec(), model.u2_star()?.values().to_vec()];
        let transport = [model.transport_matrix(1)?, model.transport_matrix(2)?];
        let local = (0..n).map(|p| local_at(model, p)).collect();
        Self::assemble(
            x,
            grid.spacing(),
            (0..n).collect(),
            true,
            (Scheme::Imex, dt, transport_scales(model)),
            transport,
            local,
            u_star,
            [u1, u2],
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        x: Vec<f64>,
        dx: f64,
        period_index: Vec<usize>,
        ring: bool,
        (scheme, dt, scales): (Scheme, Option<f64>, (f64, f64)),
        transport: [Tridiagonal; 2],
        local: Vec<Local>,
        u_star: [Vec<f64>; 2],
        u: [Vec<f64>; 2],
    ) -> Result<Self> {
        if u.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation("initial", "values must be finite and nonnegative"));
        }
        let max_of = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let capacity = |f: &dyn Fn(&Local) -> f64| local.iter().map(f).fold(0.0, f64::max);
        let bounds = [
            capacity(&|l: &Local| l.b1 / l.a11).max(max_of(&u[0])),
            capacity(&|l: &Local| l.b2 / l.a22).max(max_of(&u[1])),
        ];
        let mut sim = Self {
            x,
            dx,
            period_index,
            ring,
            scheme,
            dt: 0.0,
            transport,
            factors: None,
            local,
            u_star,
            bounds,
            u,
            t: 0.0,
            steps: 0,
            clipped: 0,
            overshoot: 0.0,
        };
        sim.dt = match dt {
            Some(v) => v,
            None => sim.auto_dt(scales),
        };
        if scheme == Scheme::Imex {
            sim.factors = Some(sim.factor(sim.dt)?);
        }
        Ok(sim)
    }

    fn factor(&self, dt: f64) -> Result<[Factor; 2]> {
        Ok([
            Factor::new(&self.transport[0].implicit_euler(GAMMA * dt), self.ring)?,
            Factor::new(&self.transport[1].implicit_euler(GAMMA * dt), self.ring)?,
        ])
    }

    /// Accuracy cap for the implicit scheme, tightened by the explicit
    /// diffusion limit when the explicit scheme is selected.
    fn auto_dt(&self, (d_max, g_max): (f64, f64)) -> f64 {
        let h = self.dx;
        let mut jac: f64 = 0.0;
        let [m1, m2] = self.bounds;
        for l in &self.local {
            for (u1, u2) in [(0.0, 0.0), (m1, 0.0), (0.0, m2), (m1, m2)] {
                let (j1, j2) = l.jacobian_diagonal(u1, u2);
                jac = jac.max(j1.abs()).max(j2.abs());
            }
        }
        let mut dt = (h / (2.0 * g_max + 1.0)).min(0.25 / jac.max(1e-12));
        if self.scheme == Scheme::Explicit {
            dt = dt.min(0.9 * h * h / (2.0 * d_max.max(1e-300)));
        }
        dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    /// Index into one period for every node.
    pub fn period_index(&self) -> &[usize] {
        &self.period_index
    }

    pub fn state(&self) -> (&[f64], &[f64]) {
        (&self.u[0], &self.u[1])
    }

    /// Semi-trivial steady states at the simulation nodes.
    pub fn steady_states(&self) -> (&[f64], &[f64]) {
        (&self.u_star[0], &self.u_star[1])
    }

    /// Undershoots clipped so far.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    /// Largest excess over the invariant-region bound seen so far.
    pub fn overshoot(&self) -> f64 {
        self.overshoot
    }

    pub fn bounds(&self) -> [f64; 2] {
        self.bounds
    }

    /// One step of the configured length.
    pub fn step(&mut self) -> Result<()> {
        self.step_by(self.dt)
    }

    /// One step of length `h`.
    pub fn step_by(&mut self, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::validation("dt", "step must be positive"));
        }
        match self.scheme {
            Scheme::Imex => {
                if h == self.dt {
                    let f = self.factors.take().expect("factored at construction");
                    self.imex_stages(h, &f);
                    self.factors = Some(f);
                } else {
                    let f = self.factor(h)?;
                    self.imex_stages(h, &f);
                }
            }
            Scheme::Explicit => self.forward_euler(h),
        }
        self.steps += 1;
        self.t += h;
        self.audit()
    }

    /// Steps until `time() == t` exactly, shortening the final step if needed.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let eps = 1e-12 * t.abs().max(1.0);
        while self.t + self.dt <= t + eps {
            self.step()?;
        }
        let rest = t - self.t;
        if rest > eps {
            self.step_by(rest)?;
        }
        self.t = self.t.max(t);
        Ok(())
    }

    /// Additive Runge-Kutta step: classical RK4 for the kinetics paired with
    /// an L-stable singly diagonal implicit tableau (diagonal `GAMMA`, same
    /// stage times) for transport. Equilibria of the semi-discrete system
    /// are fixed points of the step.
    fn imex_stages(&mut self, h: f64, f: &[Factor; 2]) {
        let n = self.x.len();
        let g = GAMMA;
        let beta = 0.5 - g;
        let rest = 1.0 - 2.0 * g - beta;
        let u0 = self.u.clone();
        let kin = |sim: &Self, u: &[Vec<f64>; 2]| {
            let mut out = [vec![0.0; n], vec![0.0; n]];
            for i in 0..n {
                let (a, b) = sim.local[i].rhs(u[0][i], u[1][i]);
                out[0][i] = a;
                out[1][i] = b;
            }
            out
        };
        let lin = |sim: &Self, u: &[Vec<f64>; 2]| {
            let mut out = [vec![0.0; n], vec![0.0; n]];
            for k in 0..2 {
                if sim.ring {
                    sim.transport[k].apply_cyclic(&u[k], &mut out[k]);
                } else {
                    sim.transport[k].apply(&u[k], &mut out[k]);
                }
            }
            out
        };
        let stage = |terms: &[(f64, &[Vec<f64>; 2])]| {
            let mut u = u0.clone();
            for k in 0..2 {
                for (w, t) in terms {
                    for (v, x) in u[k].iter_mut().zip(&t[k]) {
                        *v += h * w * x;
                    }
                }
                f[k].solve_in_place(&mut u[k]);
            }
            u
        };
        let f1 = kin(self, &u0);
        let g1 = lin(self, &u0);
        let u2 = stage(&[(0.5, &f1), (0.5 - g, &g1)]);
        let f2 = kin(self, &u2);
        let g2 = lin(self, &u2);
        let u3 = stage(&[(0.5, &f2), (0.5 - g, &g1)]);
        let f3 = kin(self, &u3);
        let g3 = lin(self, &u3);
        let u4 = stage(&[(1.0, &f3), (g, &g1), (beta, &g2), (rest, &g3)]);
        let f4 = kin(self, &u4);
        // The transport weights equal the last implicit row, so the update is
        // the last stage plus the difference of kinetic weights.
        for k in 0..2 {
            for i in 0..n {
                self.u[k][i] = u4[k][i]
                    + h * (f1[k][i] / 6.0 + f2[k][i] / 3.0 - 2.0 * f3[k][i] / 3.0 + f4[k][i] / 6.0);
            }
        }
    }

    fn forward_euler(&mut self, h: f64) {
        let n = self.x.len();
        let mut lin = [vec![0.0; n], vec![0.0; n]];
        for k in 0..2 {
            if self.ring {
                self.transport[k].apply_cyclic(&self.u[k], &mut lin[k]);
            } else {
                self.transport[k].apply(&self.u[k], &mut lin[k]);
            }
        }
        let [u1, u2] = &mut self.u;
        for i in 0..n {
            let (f1, f2) = self.local[i].rhs(u1[i], u2[i]);
            u1[i] += h * (lin[0][i] + f1);
            u2[i] += h * (lin[1][i] + f2);
        }
    }

    fn audit(&mut self) -> Result<()> {
        let mut count = 0;
        for k in 0..2 {
            let bound = self.bounds[k];
            for v in self.u[k].iter_mut() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { step: self.steps });
                }
                if *v < 0.0 {
                    if *v < -CLIP_TOL {
                        count += 1;
                    }
                    *v = 0.0;
                }
                self.overshoot = self.overshoot.max(*v - bound);
            }
        }
        self.clipped += count;
        let nodes = 2 * self.x.len();
        if count as f64 > CLIP_FRACTION * nodes as f64 {
            return Err(Error::ClipOverflow {
                step: self.steps,
                count,
                nodes,
            });
        }
        Ok(())
    }
}

/// Largest diffusion and largest advection speed over both species.
fn transport_scales(model: &CompetitionModel) -> (f64, f64) {
    let s = [model.species(1), model.species(2)];
    (
        s[0].d.max().max(s[1].d.max()),
        s[0].g.max_abs().max(s[1].g.max_abs()),
    )
}

fn local_at(model: &CompetitionModel, p: usize) -> Local {
    Local {
        b1: model.species(1).b.values()[p],
        b2: model.species(2).b.values()[p],
        a11: model.a11().values()[p],
        a12: model.a12().values()[p],
        a21: model.a21().values()[p],
        a22: model.a22().values()[p],
    }
}

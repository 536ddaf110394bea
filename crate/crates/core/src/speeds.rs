//! Spreading speeds `inf_{mu > 0} lambda(mu) / mu` of the linearized families, the
//! auxiliary speed conditions (H4)/(H5) and the linear-determinacy certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, EigenOptions, EigenProblem};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::CompetitionModel;

/// Eigenvalue tolerance used inside speed searches.
pub const SPEED_EIGEN_TOL: f64 = 1e-12;
/// Relative width at which golden-section search stops.
pub const SEARCH_REL_WIDTH: f64 = 1e-10;
pub const BRACKET_CAP: f64 = 1e3;
pub const D2_MARGIN: f64 = -1e-10;
pub const H5_STEPS: (f64, f64) = (1e-3, 5e-4);
pub const H5_ZERO_TOL: f64 = 5e-7;

/// Linearized eigenvalue families of the competition model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `(d1, g1, b1)`: species 1 alone.
    Lambda1,
    /// `(d2, g2, b2 - a22 u2*)`: linearization of species 2 at its steady state.
    Lambda2,
    /// `(d1, g1, b1 - a12 u2*)`: invasion of species 1 into E2.
    Lambda0,
    /// `(d2, g2, b2 - 2 a22 u2*)`: the `v2` equation of the cooperative system at 0.
    LambdaBar,
    /// `(d2, g2, b2)`: species 2 alone.
    Species2,
}

impl Family {
    pub fn species(self) -> usize {
        match self {
            Family::Lambda1 | Family::Lambda0 => 1,
            _ => 2,
        }
    }

    pub fn potential(self, model: &CompetitionModel) -> Result<GridFunction> {
        let s = model.species(self.species());
        Ok(match self {
            Family::Lambda1 | Family::Species2 => s.b.clone(),
            Family::Lambda2 => s.b.zip_with(&model.a22().zip_with(model.u2_star()?, |a, u| a * u), |b, v| b - v),
            Family::Lambda0 => s.b.zip_with(&model.a12().zip_with(model.u2_star()?, |a, u| a * u), |b, v| b - v),
            Family::LambdaBar => s.b.zip_with(&model.a22().zip_with(model.u2_star()?, |a, u| a * u), |b, v| b - 2.0 * v),
        })
    }

    pub fn problem(self, model: &CompetitionModel, mu: f64) -> Result<EigenProblem> {
        model.species(self.species()).problem(self.potential(model)?, mu)
    }
}

/// `mu -> lambda(sign * mu)` for one eigenproblem family.
#[derive(Debug, Clone)]
pub struct LambdaCurve {
    problem: EigenProblem,
    sign: f64,
    opts: EigenOptions,
}

impl LambdaCurve {
    pub fn new(problem: EigenProblem) -> Self {
        Self {
            problem,
            sign: 1.0,
            opts: EigenOptions::with_tol(SPEED_EIGEN_TOL),
        }
    }

    pub fn of(model: &CompetitionModel, family: Family) -> Result<Self> {
        Ok(Self::new(family.problem(model, 0.0)?))
    }

    /// The leftward curve `mu -> lambda(-mu)`.
    pub fn leftward(self) -> Self {
        Self {
            sign: -self.sign,
            ..self
        }
    }

    pub fn problem(&self) -> &EigenProblem {
        &self.problem
    }

    pub fn eval(&self, mu: f64) -> Result<f64> {
        Ok(eigen::principal_eigenpair_with(&self.problem.with_mu(self.sign * mu), &self.opts)?.lambda)
    }

    /// `(mu, lambda)` pairs, evaluated concurrently.
    pub fn sample(&self, mus: &[f64]) -> Result<Vec<(f64, f64)>> {
        mus.par_iter().map(|&mu| Ok((mu, self.eval(mu)?))).collect()
    }
}

pub fn lambda_of_mu(model: &CompetitionModel, family: Family, mu: f64) -> Result<f64> {
    LambdaCurve::of(model, family)?.eval(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedResult {
    pub c: f64,
    pub mu0: f64,
    pub lambda0: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

impl SpeedResult {
    /// Smallest `lambda(mu) / mu - c` at the two ends of the final bracket.
    pub fn local_margin(&self, curve: &LambdaCurve) -> Result<f64> {
        let (lo, hi) = self.bracket;
        let delta = (hi - lo).max(1e-6 * self.mu0);
        let mut worst = f64::INFINITY;
        for mu in [self.mu0 - delta, self.mu0 + delta] {
            if mu > 0.0 {
                worst = worst.min(curve.eval(mu)? / mu - self.c);
            }
        }
        Ok(worst)
    }
}

pub fn min_speed(model: &CompetitionModel, family: Family, mu_hint: Option<f64>) -> Result<SpeedResult> {
    min_speed_of(&LambdaCurve::of(model, family)?, mu_hint)
}

/// Minimizes `lambda(mu) / mu` over `mu > 0` by bracket doubling and golden-section search.
pub fn min_speed_of(curve: &LambdaCurve, mu_hint: Option<f64>) -> Result<SpeedResult> {
    minimize_ratio(|mu| curve.eval(mu), mu_hint)
}

pub fn minimize_ratio(lambda: impl Fn(f64) -> Result<f64>, mu_hint: Option<f64>) -> Result<SpeedResult> {
    let mut evaluations = 0usize;
    let mut eval = |mu: f64| -> Result<f64> {
        evaluations += 1;
        lambda(mu)
    };
    let at_zero = eval(0.0)?;
    if at_zero <= 0.0 {
        return Err(Error::NoPositiveSpeed { lambda: at_zero });
    }
    let mut q = |mu: f64| -> Result<f64> { Ok(eval(mu)? / mu) };

    let mut hi = mu_hint.filter(|m| *m > 0.0 && m.is_finite()).unwrap_or(1.0);
    let mut q_hi = q(hi)?;
    loop {
        let next = 2.0 * hi;
        let q_next = q(next)?;
        if q_next >= q_hi {
            hi = next;
            break;
        }
        if next > BRACKET_CAP {
            return Err(Error::MonotoneObjective {
                mu: next,
                estimate: q_next,
            });
        }
        hi = next;
        q_hi = q_next;
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = 0.0f64;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = q(x1)?;
    let mut f2 = q(x2)?;
    while b - a > SEARCH_REL_WIDTH * 0.5 * (a + b) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = q(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = q(x2)?;
        }
    }
    let mu0 = if f1 <= f2 { x1 } else { x2 };
    let lambda0 = eval(mu0)?;
    Ok(SpeedResult {
        c: lambda0 / mu0,
        mu0,
        lambda0,
        bracket: (a, b),
        evaluations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct H4Report {
    pub c1_plus: SpeedResult,
    pub c2_minus: SpeedResult,
    pub sum: f64,
    pub holds: bool,
}

/// Rightward speed of species 1 alone plus leftward speed of species 2 alone must be positive.
pub fn check_h4(model: &CompetitionModel) -> Result<H4Report> {
    let right = LambdaCurve::of(model, Family::Lambda1)?;
    let left = LambdaCurve::of(model, Family::Species2)?.leftward();
    let (c1, c2) = rayon::join(|| min_speed_of(&right, None), || min_speed_of(&left, None));
    let (c1_plus, c2_minus) = (c1?, c2?);
    let sum = c1_plus.c + c2_minus.c;
    Ok(H4Report {
        c1_plus,
        c2_minus,
        sum,
        holds: sum > 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct H5Report {
    pub lambda2_at_zero: f64,
    /// Secant slopes `(lambda2(mu) - lambda2(0)) / mu` at the two steps.
    pub secants: (f64, f64),
    /// Richardson extrapolation `2 s(mu/2) - s(mu)`.
    pub slope_at_zero: f64,
    pub c1_plus: f64,
    pub holds: bool,
}

pub fn check_h5(model: &CompetitionModel) -> Result<H5Report> {
    let curve = LambdaCurve::of(model, Family::Lambda2)?;
    let lambda2_at_zero = curve.eval(0.0)?;
    if lambda2_at_zero.abs() > H5_ZERO_TOL {
        return Err(Error::SteadyStateInconsistency { lambda: lambda2_at_zero });
    }
    let (coarse, fine) = H5_STEPS;
    let secant = |mu: f64| -> Result<f64> { Ok((curve.eval(mu)? - lambda2_at_zero) / mu) };
    let secants = (secant(coarse)?, secant(fine)?);
    let slope_at_zero = 2.0 * secants.1 - secants.0;
    let c1_plus = min_speed(model, Family::Lambda1, None)?.c;
    Ok(H5Report {
        lambda2_at_zero,
        secants,
        slope_at_zero,
        c1_plus,
        holds: slope_at_zero <= c1_plus + 1e-6,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterminacyCertificate {
    pub speed: SpeedResult,
    pub lambda0_mu0: f64,
    pub lambda_bar_mu0: f64,
    pub d1_holds: bool,
    pub phi1_star: GridFunction,
    /// Resolvent image `(lambda0(mu0) - A2)^{-1} (a21 u2* phi1*)`; absent when (D1) fails.
    pub phi2_star: Option<GridFunction>,
    /// `min_x (phi1*/phi2* - max(a12/a11, a22/a21))`.
    pub ratio_min: Option<f64>,
    pub d2_holds: bool,
    pub linearly_determinate: bool,
}

pub fn determinacy_certificate(model: &CompetitionModel) -> Result<DeterminacyCertificate> {
    let speed = min_speed(model, Family::Lambda0, None)?;
    certificate_at(model, speed)
}

pub fn certificate_at(model: &CompetitionModel, speed: SpeedResult) -> Result<DeterminacyCertificate> {
    let opts = EigenOptions::with_tol(SPEED_EIGEN_TOL);
    let first = eigen::principal_eigenpair_with(&Family::Lambda0.problem(model, speed.mu0)?, &opts)?;
    let bar_problem = Family::LambdaBar.problem(model, speed.mu0)?;
    let lambda_bar_mu0 = eigen::principal_eigenpair_with(&bar_problem, &opts)?.lambda;
    let lambda0_mu0 = first.lambda;
    let d1_holds = lambda0_mu0 > lambda_bar_mu0;
    let phi1 = first.psi;

    let (phi2_star, ratio_min) = if d1_holds {
        let rhs = model
            .a21()
            .zip_with(model.u2_star()?, |a, u| a * u)
            .zip_with(&phi1, |au, p| au * p);
        let phi2 = eigen::resolvent_solve(&bar_problem, lambda0_mu0, &rhs)?;
        let ratio = (0..phi1.values().len())
            .map(|j| {
                let bound = (model.a12().values()[j] / model.a11().values()[j])
                    .max(model.a22().values()[j] / model.a21().values()[j]);
                phi1.values()[j] / phi2.values()[j] - bound
            })
            .fold(f64::INFINITY, f64::min);
        (Some(phi2), Some(ratio))
    } else {
        (None, None)
    };
    let d2_holds = ratio_min.is_some_and(|r| r >= D2_MARGIN);
    Ok(DeterminacyCertificate {
        speed,
        lambda0_mu0,
        lambda_bar_mu0,
        d1_holds,
        phi1_star: phi1,
        phi2_star,
        ratio_min,
        d2_holds,
        linearly_determinate: d1_holds && d2_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    /// Certified lower bound for the slowest spreading speed.
    pub c0_plus: SpeedResult,
}

pub fn lower_bound_report(model: &CompetitionModel) -> Result<LowerBoundReport> {
    Ok(LowerBoundReport {
        c0_plus: min_speed(model, Family::Lambda0, None)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicCoefficient;
    use crate::model::{HomogeneousParams, ModelConfig};

    fn reference() -> CompetitionModel {
        CompetitionModel::homogeneous(HomogeneousParams::reference(), 1.0, 32).unwrap()
    }

    fn sine_model(n: usize) -> CompetitionModel {
        CompetitionModel::shared_resource(PeriodicCoefficient::fourier(1.0, vec![], vec![0.5]), 0.5, 1.0, 2.0, 1.0, n)
            .unwrap()
    }

    #[test]
    fn homogeneous_families_are_closed_form() {
        let m = reference();
        for mu in [0.0, 0.3, 1.1] {
            assert!((lambda_of_mu(&m, Family::Lambda0, mu).unwrap() - (mu * mu + 0.5)).abs() < 1e-12);
            assert!((lambda_of_mu(&m, Family::LambdaBar, mu).unwrap() - (1.5 * mu * mu - 1.0)).abs() < 1e-12);
        }
        assert!(lambda_of_mu(&m, Family::Lambda2, 0.0).unwrap().abs() < 5e-7);
        assert!(lambda_of_mu(&sine_model(128), Family::Lambda2, 0.0).unwrap().abs() < 5e-7);
    }

    #[test]
    fn homogeneous_speed() {
        let s = min_speed(&reference(), Family::Lambda0, None).unwrap();
        assert!((s.c - 2.0 * 0.5f64.sqrt()).abs() < 1e-6);
        assert!((s.mu0 - 0.5f64.sqrt()).abs() < 1e-6);
        assert_eq!(s.c, s.lambda0 / s.mu0);
    }

    #[test]
    fn kpp_speed() {
        let g = crate::grid::PeriodicGrid::new(1.0, 16).unwrap();
        let curve = LambdaCurve::new(EigenProblem::constant(g, 1.0, 0.0, 1.0, 0.0).unwrap());
        let s = min_speed_of(&curve, None).unwrap();
        assert!((s.c - 2.0).abs() < 1e-9 && (s.mu0 - 1.0).abs() < 1e-4);
        assert!(s.local_margin(&curve).unwrap() >= -1e-8);
    }

    #[test]
    fn speed_errors() {
        let g = crate::grid::PeriodicGrid::new(1.0, 16).unwrap();
        let dead = LambdaCurve::new(EigenProblem::constant(g, 1.0, 0.0, -0.5, 0.0).unwrap());
        assert!(matches!(min_speed_of(&dead, None), Err(Error::NoPositiveSpeed { .. })));
        // lambda = 1e-8 mu^2 + 1 has its minimizing rate at 1e4, past the cap
        let g = crate::grid::PeriodicGrid::new(1.0, 4096).unwrap();
        let slow = LambdaCurve::new(EigenProblem::constant(g, 1e-8, 0.0, 1.0, 0.0).unwrap());
        let r = min_speed_of(&slow, None);
        assert!(matches!(r, Err(Error::MonotoneObjective { .. })), "{r:?}");
    }

    /// Brute-force scan oracle over 2000 points in (0, 5].
    #[test]
    fn heterogeneous_speed_matches_scan() {
        let m = sine_model(256);
        let curve = LambdaCurve::of(&m, Family::Lambda0).unwrap();
        let s = min_speed_of(&curve, None).unwrap();
        let mus: Vec<f64> = (1..=2000).map(|i| 5.0 * i as f64 / 2000.0).collect();
        let scan = curve
            .sample(&mus)
            .unwrap()
            .into_iter()
            .map(|(mu, l)| l / mu)
            .fold(f64::INFINITY, f64::min);
        assert!((s.c - scan).abs() < 1e-5, "{} vs {}", s.c, scan);
        assert!(s.c <= scan + 1e-12);
    }

    #[test]
    fn supporting_line_property() {
        use rand::{Rng, SeedableRng};
        let m = sine_model(128);
        let curve = LambdaCurve::of(&m, Family::Lambda0).unwrap();
        let s = min_speed_of(&curve, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mus: Vec<f64> = (0..50).map(|_| rng.random_range(1e-3..4.0 * s.mu0)).collect();
        for (mu, l) in curve.sample(&mus).unwrap() {
            assert!(l - s.c * mu >= -1e-8, "mu {mu}: {}", l - s.c * mu);
        }
        assert!(s.local_margin(&curve).unwrap() >= -1e-8);
    }

    #[test]
    fn h4_examples() {
        let p = HomogeneousParams::reference();
        let r = check_h4(&reference()).unwrap();
        assert!((r.c1_plus.c - 2.0 * (p.d1 * p.r1).sqrt()).abs() < 1e-8);
        assert!((r.c2_minus.c - 2.0 * (p.d2 * p.r2).sqrt()).abs() < 1e-8);
        assert!(r.holds);

        let mut c: ModelConfig = reference().config().clone();
        c.species2.d = PeriodicCoefficient::constant(1.0);
        c.species1.g = PeriodicCoefficient::constant(5.0);
        c.species2.g = PeriodicCoefficient::constant(5.0);
        c.n = 64;
        let r = check_h4(&CompetitionModel::new(c).unwrap()).unwrap();
        assert!((r.c1_plus.c - 7.0).abs() < 1e-8, "{}", r.c1_plus.c);
        assert!((r.c2_minus.c + 3.0).abs() < 1e-8, "{}", r.c2_minus.c);
        assert!(r.holds && (r.sum - 4.0).abs() < 1e-7);
    }

    #[test]
    fn h5_even_models() {
        let r = check_h5(&reference()).unwrap();
        assert!(r.slope_at_zero.abs() < 1e-5 && r.holds);
        let r = check_h5(&sine_model(256)).unwrap();
        assert!(r.slope_at_zero.abs() < 1e-5 && r.holds, "{r:?}");
    }

    #[test]
    fn h5_divergence_form() {
        // d2 = 1 + 0.3 cos, g2 = -d2' = 0.6 pi sin; nonconstant growth
        let mut c = sine_model(512).config().clone();
        c.species2.d = PeriodicCoefficient::fourier(1.0, vec![0.3], vec![]);
        c.species2.g = PeriodicCoefficient::fourier(0.0, vec![], vec![0.6 * std::f64::consts::PI]);
        let r = check_h5(&CompetitionModel::new(c).unwrap()).unwrap();
        assert!(r.slope_at_zero.abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn reference_certificate() {
        let cert = determinacy_certificate(&reference()).unwrap();
        assert!(cert.d1_holds && cert.d2_holds && cert.linearly_determinate);
        assert!((cert.lambda0_mu0 - 1.0).abs() < 1e-7);
        assert!((cert.lambda_bar_mu0 + 0.25).abs() < 1e-7);
        let phi2 = cert.phi2_star.unwrap();
        for (a, b) in phi2.values().iter().zip(cert.phi1_star.values()) {
            assert!((a / b - 0.8).abs() < 1e-8);
        }
        assert!((cert.ratio_min.unwrap() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn fast_second_diffuser_breaks_d2() {
        let p = HomogeneousParams { d2: 2.5, ..HomogeneousParams::reference() };
        let cert = determinacy_certificate(&CompetitionModel::homogeneous(p, 1.0, 32).unwrap()).unwrap();
        assert!(cert.d1_holds && !cert.d2_holds && !cert.linearly_determinate);
    }

    /// The homogeneous closed-form condition, evaluated directly.
    fn closed_form_condition(ratio: f64, a1: f64, a2: f64, rr: f64) -> (bool, f64) {
        let first = 2.0 - ratio;
        let second = rr * (2.0 - ratio) - (a1 * a2 - 1.0) / (1.0 - a1);
        (first >= 0.0 && second >= 0.0, first.abs().min(second.abs()))
    }

    #[test]
    fn strong_competitor_matches_closed_form() {
        let p = HomogeneousParams { a2: 10.0, ..HomogeneousParams::reference() };
        let cert = determinacy_certificate(&CompetitionModel::homogeneous(p, 1.0, 16).unwrap()).unwrap();
        let (want, _) = closed_form_condition(p.d2 / p.d1, p.a1, p.a2, p.r1 / p.r2);
        assert_eq!(cert.linearly_determinate, want);
        assert!(!want);
    }

    #[test]
    fn certificate_reproduces_closed_form_on_lattice() {
        let ratios = [0.5, 1.0, 1.7, 2.3, 3.0];
        let a1s = [0.1, 0.3, 0.5, 0.7, 0.9];
        let a2s = [0.4, 0.9, 1.35, 2.1, 5.5];
        let rrs = [0.3, 0.6, 1.0, 1.8, 3.0];
        let mut points = Vec::new();
        for &ratio in &ratios {
            for &a1 in &a1s {
                for &a2 in &a2s {
                    for &rr in &rrs {
                        points.push((ratio, a1, a2, rr));
                    }
                }
            }
        }
        assert_eq!(points.len(), 625);
        let mismatches: Vec<_> = points
            .par_iter()
            .filter_map(|&(ratio, a1, a2, rr)| {
                let (want, margin) = closed_form_condition(ratio, a1, a2, rr);
                assert!(margin > 1e-3, "lattice point on a tie");
                let p = HomogeneousParams { d1: 1.0, d2: ratio, r1: rr, r2: 1.0, a1, a2 };
                let cert = determinacy_certificate(&CompetitionModel::homogeneous(p, 1.0, 16).unwrap()).unwrap();
                (cert.linearly_determinate != want).then_some((ratio, a1, a2, rr))
            })
            .collect();
        assert!(mismatches.is_empty(), "{mismatches:?}");
    }

    #[test]
    fn diffusive_scaling_multiplies_speed() {
        let m = sine_model(128);
        let base = min_speed(&m, Family::Lambda1, None).unwrap().c;
        let s = 1.7;
        let mut c = m.config().clone();
        c.period *= s;
        c.species1.d = PeriodicCoefficient::constant(s * s);
        let scaled = min_speed(&CompetitionModel::new(c).unwrap(), Family::Lambda1, None).unwrap().c;
        assert!((scaled - s * base).abs() < 1e-8 * scaled, "{scaled} vs {}", s * base);
    }
}

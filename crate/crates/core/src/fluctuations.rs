//! Rescaled overlap fluctuations `xi_12 = sqrt(N) (q_12 - q_bar)`.
//!
//! `A = <xi_12^2>`, `B = <xi_12 xi_13>` and `C = <xi_12 xi_34>` evolve along the
//! replica-symmetric interpolation by a closed quadratic system. In the
//! annealed regime `B = C = 0` and `A(t) = 1 / (sigma^-4 - beta^2 t)`. For
//! `q_bar > 0` the integrator output is a Gaussian-ansatz prediction only.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{rs_optimal_qbar, sigma};
use crate::error::{Error, Result};
use crate::model::{gibbs_weight, ModelParams};
use crate::montecarlo::{direction_seed, map_samples, sample_disorder, weight_replicas, McConfig, McEstimate};
use crate::rng::Purpose;

pub const DEFAULT_STEPS: usize = 10_000;
/// `A` above this counts as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t: f64,
}

/// `(omega(z), omega(z^2))` for one site at `t = 0` with cavity field `J'`.
pub fn cavity_moments(beta: f64, lambda: f64, q_bar: f64, j_prime: f64) -> Result<(f64, f64)> {
    if !(q_bar >= 0.0) {
        return Err(Error::Domain(format!("q_bar must be >= 0, got {q_bar}")));
    }
    let s2 = sigma(beta, lambda, q_bar)?.powi(2);
    Ok((beta * q_bar.sqrt() * s2 * j_prime, s2 + beta * beta * q_bar * s2 * s2 * j_prime * j_prime))
}

pub fn initial_conditions(beta: f64, lambda: f64, q_bar: f64) -> Result<CorrelationTriple> {
    if !(q_bar >= 0.0) {
        return Err(Error::Domain(format!("q_bar must be >= 0, got {q_bar}")));
    }
    let s2 = sigma(beta, lambda, q_bar)?.powi(2);
    let b2 = beta * beta;
    let quartic = 3.0 * b2 * b2 * q_bar * q_bar * s2.powi(4);
    let qq = q_bar * q_bar;
    Ok(CorrelationTriple {
        a: s2 * s2 + 2.0 * b2 * q_bar * s2.powi(3) + quartic - qq,
        b: b2 * q_bar * s2.powi(3) + quartic - qq,
        c: quartic - qq,
        t: 0.0,
    })
}

pub fn ode_rhs(tr: &CorrelationTriple, beta: f64) -> (f64, f64, f64) {
    let (a, b, c) = (tr.a, tr.b, tr.c);
    let b2 = beta * beta;
    (
        b2 * (a * a - 4.0 * b * b + 3.0 * c * c),
        b2 * (2.0 * a * b - 6.0 * b * c + 6.0 * c * c - 2.0 * b * b),
        b2 * (0.5 * a * c + 4.0 * b * b - 16.0 * b * c + 10.0 * c * c),
    )
}

fn rk4_step(y: &CorrelationTriple, beta: f64, h: f64) -> CorrelationTriple {
    let shift = |k: (f64, f64, f64), f: f64| CorrelationTriple { a: y.a + f * k.0, b: y.b + f * k.1, c: y.c + f * k.2, t: y.t };
    let k1 = ode_rhs(y, beta);
    let k2 = ode_rhs(&shift(k1, 0.5 * h), beta);
    let k3 = ode_rhs(&shift(k2, 0.5 * h), beta);
    let k4 = ode_rhs(&shift(k3, h), beta);
    CorrelationTriple {
        a: y.a + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        b: y.b + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        c: y.c + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        t: y.t + h,
    }
}

/// Fixed-step RK4 from [`initial_conditions`] to `t_end`. A blow-up is
/// reported with the time extrapolated from the last accepted state as
/// `t + A / A'`, exact for the annealed solution.
pub fn integrate_triple(beta: f64, lambda: f64, q_bar: f64, t_end: f64, n_steps: usize) -> Result<CorrelationTriple> {
    if !(0.0..=1.0).contains(&t_end) {
        return Err(Error::InvalidArgument(format!("t_end must lie in [0, 1], got {t_end}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let mut y = initial_conditions(beta, lambda, q_bar)?;
    if t_end == 0.0 {
        return Ok(y);
    }
    let h = t_end / n_steps as f64;
    for k in 0..n_steps {
        let full = rk4_step(&y, beta, h);
        let half = rk4_step(&rk4_step(&y, beta, 0.5 * h), beta, 0.5 * h);
        let scale = half.a.abs().max(1.0);
        let disagree = (full.a - half.a).abs().max((full.b - half.b).abs()).max((full.c - half.c).abs()) / scale;
        let finite = half.a.is_finite() && half.b.is_finite() && half.c.is_finite();
        if !finite || half.a > BLOWUP_THRESHOLD || disagree > 1e-3 {
            let slope = ode_rhs(&y, beta).0;
            let t_star = if slope > 0.0 { y.t + y.a / slope } else { y.t + h };
            return Err(Error::Divergence {
                t: t_star,
                reason: format!(
                    "A = {:.3e} at t = {:.6} (step disagreement {disagree:.1e}); extrapolated blow-up at t = {t_star:.6}",
                    y.a, y.t
                ),
            });
        }
        y = half;
        y.t = (k + 1) as f64 * h;
    }
    Ok(y)
}

/// `lim <xi_12^2> = 1 / ((1 - lambda)^2 - beta^2)` in the annealed regime.
pub fn annealed_susceptibility(beta: f64, lambda: f64) -> Result<f64> {
    if !(beta >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid beta {beta} or lambda {lambda}")));
    }
    if beta >= 1.0 - lambda {
        return Err(Error::Divergence {
            t: (1.0 - lambda).powi(2) / (beta * beta),
            reason: format!("critical line reached: beta = {beta} >= 1 - lambda = {}", 1.0 - lambda),
        });
    }
    Ok(1.0 / ((1.0 - lambda).powi(2) - beta * beta))
}

/// `N <(q_12 - q_bar*)^2>` from two replicas, disorder averaged.
pub fn mc_xi_second_moment(p: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    p.validate()?;
    cfg.validate()?;
    let q_bar = rs_optimal_qbar(p.beta, p.lambda);
    let n = p.n_sites as f64;
    let values = map_samples(cfg.n_disorder, |i| {
        let j = sample_disorder(p.n_sites, cfg.seed, i);
        let w = gibbs_weight(&j, p)?;
        let sa = direction_seed(cfg, j.seed, Purpose::DirectionsA);
        let sb = direction_seed(cfg, j.seed, Purpose::DirectionsB);
        let pw = weight_replicas(&w, cfg, sa, sb, 2)?.powers;
        Ok(n * (pw[1] - 2.0 * q_bar * pw[0] + q_bar * q_bar))
    })?;
    Ok(McEstimate::from_samples(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::Scheme;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn cavity_examples() {
        let (m, s) = cavity_moments(0.7, 0.2, 0.0, 1.3).unwrap();
        assert_eq!(m, 0.0);
        assert_relative_eq!(s, 1.0 / 0.8, epsilon = 1e-15);
        let (m, s) = cavity_moments(2.0, 0.0, 0.25, 1.0).unwrap();
        assert_relative_eq!(m, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s, 0.75, epsilon = 1e-15);
        let (m, s) = cavity_moments(2.0, 0.0, 0.25, 0.0).unwrap();
        assert_eq!(m, 0.0);
        assert_relative_eq!(s, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn initial_examples() {
        let t = initial_conditions(0.8, 0.3, 0.0).unwrap();
        assert_relative_eq!(t.a, 1.0 / 0.49, epsilon = 1e-14);
        assert_eq!((t.b, t.c), (0.0, 0.0));
        assert_eq!(initial_conditions(0.5, 0.0, 0.0).unwrap().a, 1.0);
    }

    #[test]
    fn initial_conditions_match_monte_carlo_over_cavity_field() {
        let mut pts = stream_rng(3, Purpose::Restart, 0);
        for point in 0..20u64 {
            let beta = pts.random_range(0.1..2.5);
            let lambda = pts.random_range(-1.0..0.8);
            let q_bar = pts.random_range(0.0..1.5);
            let mut rng = stream_rng(17, Purpose::CavityFields, point);
            let n = 1_000_000;
            let (mut sa, mut sb, mut sc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for i in 0..n {
                let j: f64 = rng.sample(StandardNormal);
                let (m1, m2) = cavity_moments(beta, lambda, q_bar, j).unwrap();
                sa[i] = m2 * m2 - q_bar * q_bar;
                sb[i] = m2 * m1 * m1 - q_bar * q_bar;
                sc[i] = m1.powi(4) - q_bar * q_bar;
            }
            let exact = initial_conditions(beta, lambda, q_bar).unwrap();
            for (v, target) in [(sa, exact.a), (sb, exact.b), (sc, exact.c)] {
                let e = McEstimate::from_samples(&v);
                assert!(e.brackets(target, 4.0, 1e-12), "point {point}: {e:?} vs {target}");
            }
        }
    }

    #[test]
    fn rhs_examples() {
        let t = |a, b, c| CorrelationTriple { a, b, c, t: 0.0 };
        assert_eq!(ode_rhs(&t(0.0, 0.0, 0.0), 1.0), (0.0, 0.0, 0.0));
        assert_eq!(ode_rhs(&t(1.0, 0.0, 0.0), 1.0), (1.0, 0.0, 0.0));
        assert_eq!(ode_rhs(&t(1.0, 1.0, 1.0), 1.0), (0.0, 0.0, -1.5));
    }

    #[test]
    fn annealed_solution() {
        let r = integrate_triple(0.5, 0.0, 0.0, 1.0, DEFAULT_STEPS).unwrap();
        assert_relative_eq!(r.a, 4.0 / 3.0, epsilon = 1e-12);
        assert_eq!((r.b, r.c, r.t), (0.0, 0.0, 1.0));
        let start = integrate_triple(0.5, 0.3, 0.0, 0.0, 10).unwrap();
        assert_eq!(start, initial_conditions(0.5, 0.3, 0.0).unwrap());
        assert_relative_eq!(start.a, 1.0 / 0.49, epsilon = 1e-14);
        let mut rng = stream_rng(5, Purpose::Restart, 1);
        for _ in 0..50 {
            let lambda = rng.random_range(-1.0..0.9);
            let beta = rng.random_range(0.0..0.95) * (1.0 - lambda);
            let r = integrate_triple(beta, lambda, 0.0, 1.0, DEFAULT_STEPS).unwrap();
            let exact = annealed_susceptibility(beta, lambda).unwrap();
            assert!((r.a - exact).abs() <= 1e-8, "{beta} {lambda}: {} vs {exact}", r.a);
            assert_eq!((r.b, r.c), (0.0, 0.0));
        }
    }

    #[test]
    fn blow_up_is_located() {
        for (beta, lambda, steps) in [(1.2f64, 0.0f64, DEFAULT_STEPS), (0.9, 0.3, 1000), (2.0, -0.5, 5000)] {
            let t_star = (1.0 - lambda).powi(2) / (beta * beta);
            let h = 1.0 / steps as f64;
            match integrate_triple(beta, lambda, 0.0, 1.0, steps) {
                Err(Error::Divergence { t, .. }) => assert!((t - t_star).abs() <= h, "{t} vs {t_star}"),
                other => panic!("expected divergence, got {other:?}"),
            }
        }
    }

    #[test]
    fn susceptibility_examples() {
        assert_relative_eq!(annealed_susceptibility(0.5, 0.0).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(annealed_susceptibility(1e-9, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(annealed_susceptibility(0.6, 0.2).unwrap(), 1.0 / 0.28, epsilon = 1e-12);
        assert!(matches!(annealed_susceptibility(1.0, 0.0), Err(Error::Divergence { .. })));
    }

    #[test]
    fn free_xi_moment_is_one() {
        for n in [1, 3, 8] {
            let cfg = McConfig { n_disorder: 4, n_directions: 512, radial_points: 256, seed: 1, scheme: Scheme::QuadratureIfSmall };
            let e = mc_xi_second_moment(&ModelParams::new(0.0, 0.0, n).unwrap(), &cfg).unwrap();
            assert_relative_eq!(e.mean, 1.0, max_relative = if n <= 3 { 1e-10 } else { 0.1 });
        }
    }
}

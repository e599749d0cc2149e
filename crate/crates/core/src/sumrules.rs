//! Interpolation arguments at finite `N`.
//!
//! The replica-symmetric interpolation replaces a fraction `1 - t` of the
//! two-body interaction by cavity fields `beta sqrt(q_bar) J'_i` and a mass
//! shift `c = -beta^2 q_bar`; its pressure `phi_N(t)` satisfies
//! `phi_N(1) = A_N` and `phi'_N(t) = beta^2 q_bar^2/4 - (beta^2/4) <(q_12 - q_bar)^2>_t`.
//! The thermodynamic interpolation joins two independent subsystems into one
//! and is nondecreasing in `t`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{rs_trial_pressure, sigma};
use crate::error::{Error, Result};
use crate::gibbs::LogWeight;
use crate::model::{coupling_form, gibbs_weight, DisorderSample, ModelParams, SpinConfig};
use crate::montecarlo::{
    direction_seed, map_samples, sample_disorder, sample_disorder_for, weight_partition, weight_replicas, McConfig,
    McEstimate,
};
use crate::rng::{stream_rng, Purpose};

pub const DEFAULT_T_GRID: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsInterpolationSpec {
    pub t: f64,
    pub q_bar: f64,
    /// Always `-beta^2 q_bar`.
    pub c: f64,
    /// Cavity fields for [`rs_interpolating_weight`]; the estimators draw
    /// fresh fields with every disorder sample.
    pub cavity_fields: Vec<f64>,
}

impl RsInterpolationSpec {
    pub fn new(t: f64, q_bar: f64, beta: f64, cavity_fields: Vec<f64>) -> Result<Self> {
        let spec = RsInterpolationSpec { t, q_bar, c: -beta * beta * q_bar, cavity_fields };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {}", self.t)));
        }
        if !(self.q_bar >= 0.0) || !self.q_bar.is_finite() {
            return Err(Error::InvalidArgument(format!("q_bar must be finite and >= 0, got {}", self.q_bar)));
        }
        Ok(())
    }

    fn check_against(&self, p: &ModelParams) -> Result<()> {
        self.check()?;
        let c = -p.beta * p.beta * self.q_bar;
        if (self.c - c).abs() > 1e-12 * c.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("c = {} must equal -beta^2 q_bar = {c}", self.c)));
        }
        Ok(())
    }
}

fn check_interpolation_params(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.h != 0.0 {
        return Err(Error::InvalidArgument("interpolations are implemented at h = 0".into()));
    }
    if p.diagonal_removed {
        return Err(Error::InvalidArgument("interpolations use the model with its diagonal".into()));
    }
    Ok(())
}

fn interpolating_weight(j: &DisorderSample, j_prime: &[f64], p: &ModelParams, t: f64, q_bar: f64) -> Result<LogWeight> {
    let n = p.n_sites;
    if j_prime.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: j_prime.len() });
    }
    let cav = p.beta * (1.0 - t).sqrt() * q_bar.sqrt();
    Ok(LogWeight::single_block(
        coupling_form(j, p)? * t.sqrt(),
        DVector::from_iterator(n, j_prime.iter().map(|v| cav * v)),
        0.5 * p.lambda - 0.5 * (1.0 - t) * p.beta * p.beta * q_bar,
        t * p.beta * p.beta / (4.0 * n as f64),
    ))
}

/// Log-weight of the `t`-interpolated measure for one `(J, J')`.
pub fn rs_interpolating_weight(j: &DisorderSample, p: &ModelParams, spec: &RsInterpolationSpec) -> Result<LogWeight> {
    check_interpolation_params(p)?;
    spec.check_against(p)?;
    interpolating_weight(j, &spec.cavity_fields, p, spec.t, spec.q_bar)
}

fn cavity_fields(n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Purpose::CavityFields, index);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `phi_N(0) = log sigma + beta^2 q_bar sigma^2 / 2`.
pub fn rs_interpolation_start(beta: f64, lambda: f64, q_bar: f64) -> Result<f64> {
    let s = sigma(beta, lambda, q_bar)?;
    Ok(s.ln() + 0.5 * beta * beta * q_bar * s * s)
}

/// `phi_N(t)`. Disorder sample `i` uses the same `J` as [`crate::montecarlo::quenched_pressure`].
pub fn rs_interpolating_pressure(p: &ModelParams, spec: &RsInterpolationSpec, cfg: &McConfig) -> Result<McEstimate> {
    check_interpolation_params(p)?;
    spec.check_against(p)?;
    cfg.validate()?;
    if spec.t == 0.0 {
        return Ok(McEstimate::exact(rs_interpolation_start(p.beta, p.lambda, spec.q_bar)?, cfg.n_disorder));
    }
    let n = p.n_sites;
    let values = map_samples(cfg.n_disorder, |i| {
        let j = sample_disorder(n, cfg.seed, i);
        let w = interpolating_weight(&j, &cavity_fields(n, cfg.seed, i), p, spec.t, spec.q_bar)?;
        Ok(weight_partition(&w, cfg, direction_seed(cfg, j.seed, Purpose::DirectionsA))?.log_z / n as f64)
    })?;
    Ok(McEstimate::from_samples(&values))
}

/// `<(q_12 - q_bar)^2>_t` for disorder sample `i`.
fn fluctuation_term(p: &ModelParams, cfg: &McConfig, i: u64, j: &DisorderSample, t: f64, q_bar: f64) -> Result<f64> {
    let w = interpolating_weight(j, &cavity_fields(p.n_sites, cfg.seed, i), p, t, q_bar)?;
    let sa = direction_seed(cfg, j.seed, Purpose::DirectionsA);
    let sb = direction_seed(cfg, j.seed, Purpose::DirectionsB);
    let pw = weight_replicas(&w, cfg, sa, sb, 2)?.powers;
    Ok(pw[1] - 2.0 * q_bar * pw[0] + q_bar * q_bar)
}

/// `phi'_N(t)` from two-replica overlap moments.
pub fn rs_interpolation_derivative(p: &ModelParams, spec: &RsInterpolationSpec, cfg: &McConfig) -> Result<McEstimate> {
    check_interpolation_params(p)?;
    spec.check_against(p)?;
    cfg.validate()?;
    let b2 = p.beta * p.beta;
    let q = spec.q_bar;
    let values = map_samples(cfg.n_disorder, |i| {
        let j = sample_disorder(p.n_sites, cfg.seed, i);
        Ok(0.25 * b2 * q * q - 0.25 * b2 * fluctuation_term(p, cfg, i, &j, spec.t, q)?)
    })?;
    Ok(McEstimate::from_samples(&values))
}

fn trapezoid_weights(points: usize) -> Vec<f64> {
    let h = 1.0 / (points - 1) as f64;
    (0..points).map(|k| if k == 0 || k + 1 == points { 0.5 * h } else { h }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    /// `A_N - [A~ - (beta^2/4) int_0^1 <(q_12 - q_bar)^2>_t dt]`, per-sample paired.
    pub residual: McEstimate,
    pub quenched: McEstimate,
    /// `(beta^2/4)` times the trapezoid integral of the fluctuation term.
    pub fluctuation_integral: McEstimate,
    pub trial_pressure: f64,
    /// Richardson estimate of the trapezoid error; zero when the grid cannot be halved.
    pub trapezoid_error: f64,
}

pub fn rs_sum_rule(p: &ModelParams, q_bar: f64, cfg: &McConfig, t_grid: usize) -> Result<SumRuleReport> {
    check_interpolation_params(p)?;
    cfg.validate()?;
    if t_grid < 2 {
        return Err(Error::InvalidArgument(format!("t_grid needs at least 2 points, got {t_grid}")));
    }
    let trial = rs_trial_pressure(p.beta, p.lambda, q_bar)?;
    let n = p.n_sites;
    let b2 = p.beta * p.beta;
    let ts: Vec<f64> = (0..t_grid).map(|k| k as f64 / (t_grid - 1) as f64).collect();
    let weights = trapezoid_weights(t_grid);
    let coarse = (t_grid % 2 == 1 && t_grid >= 5).then(|| trapezoid_weights(t_grid.div_ceil(2)));
    let samples = map_samples(cfg.n_disorder, |i| {
        let j = sample_disorder(n, cfg.seed, i);
        let log_z = weight_partition(&gibbs_weight(&j, p)?, cfg, direction_seed(cfg, j.seed, Purpose::DirectionsA))?.log_z;
        let f = ts.iter().map(|&t| fluctuation_term(p, cfg, i, &j, t, q_bar)).collect::<Result<Vec<_>>>()?;
        let fine: f64 = f.iter().zip(&weights).map(|(v, w)| v * w).sum();
        let half = coarse
            .as_ref()
            .map(|cw| f.iter().step_by(2).zip(cw).map(|(v, w)| v * w).sum::<f64>())
            .unwrap_or(fine);
        Ok((log_z / n as f64, 0.25 * b2 * fine, 0.25 * b2 * half))
    })?;
    let quenched: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let integral: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let residual: Vec<f64> = samples.iter().map(|s| s.0 - trial + s.1).collect();
    let m = samples.len() as f64;
    let fine_mean = integral.iter().sum::<f64>() / m;
    let half_mean = samples.iter().map(|s| s.2).sum::<f64>() / m;
    Ok(SumRuleReport {
        residual: McEstimate::from_samples(&residual),
        quenched: McEstimate::from_samples(&quenched),
        fluctuation_integral: McEstimate::from_samples(&integral),
        trial_pressure: trial,
        trapezoid_error: (fine_mean - half_mean).abs() / 3.0,
    })
}

pub fn rs_sum_rule_residual(p: &ModelParams, q_bar: f64, cfg: &McConfig, t_grid: usize) -> Result<McEstimate> {
    Ok(rs_sum_rule(p, q_bar, cfg, t_grid)?.residual)
}

/// `(q_N, q_N1, q_N2)` for one configuration pair split after `n1` sites;
/// `q_N = (N1/N) q_N1 + (N2/N) q_N2` holds exactly.
pub fn overlap_decomposition(z1: &SpinConfig, z2: &SpinConfig, n1: usize) -> Result<(f64, f64, f64)> {
    let n = z1.len();
    if z2.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z2.len() });
    }
    if n1 == 0 || n1 >= n {
        return Err(Error::InvalidArgument(format!("split {n1} must lie strictly inside 0..{n}")));
    }
    let dot = |r: std::ops::Range<usize>| -> f64 {
        z1.as_slice()[r.clone()].iter().zip(&z2.as_slice()[r]).map(|(a, b)| a * b).sum()
    };
    let (d1, d2) = (dot(0..n1), dot(n1..n));
    Ok(((d1 + d2) / n as f64, d1 / n1 as f64, d2 / (n - n1) as f64))
}

fn thermo_weight(
    j: &DisorderSample,
    j1: &DisorderSample,
    j2: &DisorderSample,
    p: &ModelParams,
    t: f64,
) -> Result<LogWeight> {
    let (n1, n2) = (j1.n, j2.n);
    let n = n1 + n2;
    let b2 = p.beta * p.beta;
    let mut k = coupling_form(j, p)? * t.sqrt();
    let s = (1.0 - t).sqrt();
    let k1 = coupling_form(j1, &p.with_n(n1))? * s;
    let k2 = coupling_form(j2, &p.with_n(n2))? * s;
    let mut top = k.view_mut((0, 0), (n1, n1));
    top += &k1;
    let mut bottom = k.view_mut((n1, n1), (n2, n2));
    bottom += &k2;
    let cross = t * b2 / (4.0 * n as f64);
    let quartic = DMatrix::from_row_slice(
        2,
        2,
        &[cross + (1.0 - t) * b2 / (4.0 * n1 as f64), cross, cross, cross + (1.0 - t) * b2 / (4.0 * n2 as f64)],
    );
    Ok(LogWeight {
        coupling: k,
        field: DVector::from_element(n, p.beta * p.h),
        mass: 0.5 * p.lambda,
        blocks: vec![n1, n2],
        quartic,
    })
}

/// Disorder-averaged `(<q_N^2>, <q_N1^2>, <q_N2^2>)` and the derivative
/// `-(beta^2/4)(<q_N^2> - (N1/N) <q_N1^2> - (N2/N) <q_N2^2>)`, paired per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub derivative: McEstimate,
    pub whole: McEstimate,
    pub first: McEstimate,
    pub second: McEstimate,
}

pub fn thermo_interpolation(n1: usize, n2: usize, p: &ModelParams, t: f64, cfg: &McConfig) -> Result<ThermoReport> {
    check_interpolation_params(p)?;
    cfg.validate()?;
    if n1 == 0 || n2 == 0 || n1 + n2 != p.n_sites {
        return Err(Error::InvalidArgument(format!(
            "subsystem sizes {n1} + {n2} must be positive and sum to N = {}",
            p.n_sites
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {t}")));
    }
    let n = p.n_sites;
    let (f1, f2) = (n1 as f64 / n as f64, n2 as f64 / n as f64);
    let b2 = p.beta * p.beta;
    let samples = map_samples(cfg.n_disorder, |i| {
        let j = sample_disorder_for(n, cfg.seed, Purpose::Disorder, i);
        let j1 = sample_disorder_for(n1, cfg.seed, Purpose::BlockDisorderA, i);
        let j2 = sample_disorder_for(n2, cfg.seed, Purpose::BlockDisorderB, i);
        let w = thermo_weight(&j, &j1, &j2, p, t)?;
        let sa = direction_seed(cfg, j.seed, Purpose::DirectionsA);
        let sb = direction_seed(cfg, j.seed, Purpose::DirectionsB);
        let pair = weight_replicas(&w, cfg, sa, sb, 2)?;
        let (a, b) = (&pair.first, &pair.second);
        let lin = a.overlap_mean(b, 0..n) - f1 * a.overlap_mean(b, 0..n1) - f2 * a.overlap_mean(b, n1..n);
        if lin.abs() > 1e-12 * (1.0 + a.second.trace() * b.second.trace() / n as f64) {
            return Err(Error::Numeric(format!("overlap decomposition violated by {lin}")));
        }
        let q = a.overlap_square(b, 0..n);
        let q1 = a.overlap_square(b, 0..n1);
        let q2 = a.overlap_square(b, n1..n);
        Ok((-0.25 * b2 * (q - f1 * q1 - f2 * q2), q, q1, q2))
    })?;
    let col = |f: fn(&(f64, f64, f64, f64)) -> f64| McEstimate::from_samples(&samples.iter().map(f).collect::<Vec<_>>());
    Ok(ThermoReport { derivative: col(|s| s.0), whole: col(|s| s.1), first: col(|s| s.2), second: col(|s| s.3) })
}

pub fn thermo_interpolation_derivative(
    n1: usize,
    n2: usize,
    p: &ModelParams,
    t: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(thermo_interpolation(n1, n2, p, t, cfg)?.derivative)
}

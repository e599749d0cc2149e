//! Closed-form pressures: annealed, replica symmetric, spherical and the
//! spherical-shell lower bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Annealed,
    Condensed,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Annealed => "annealed",
            Regime::Condensed => "condensed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsSolution {
    pub q_bar: f64,
    pub sigma: f64,
    pub pressure: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSolution {
    pub r_squared: f64,
    pub value: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")))
    }
}

fn check_positive_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {beta}")))
    }
}

pub fn annealed_pressure(beta: f64, lambda: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(lambda < 1.0) {
        return Err(Error::Domain(format!("annealed pressure undefined for lambda >= 1 (lambda = {lambda})")));
    }
    Ok(-0.5 * (-lambda).ln_1p())
}

fn check_annealed_params(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if !(p.lambda < 1.0) {
        return Err(Error::Domain(format!("E Z diverges for lambda >= 1 (lambda = {})", p.lambda)));
    }
    if p.h != 0.0 {
        return Err(Error::InvalidArgument("closed forms assume h = 0".into()));
    }
    Ok(())
}

/// `E_J Z_N = (1 - lambda)^{-N/2}`, exact at every `N`.
pub fn annealed_mean_partition_finite_n(p: &ModelParams) -> Result<f64> {
    check_annealed_params(p)?;
    if p.diagonal_removed {
        return Err(Error::InvalidArgument(
            "use annealed_mean_partition_prime_finite_n for the diagonal-removed model".into(),
        ));
    }
    Ok((1.0 - p.lambda).powf(-(p.n_sites as f64) / 2.0))
}

/// `E_J Z'_N = (1 - lambda)^{-N/2} (E_z exp(-beta^2 z^4 / (4 N (1 - lambda)^2)))^N`.
pub fn annealed_mean_partition_prime_finite_n(p: &ModelParams) -> Result<f64> {
    Ok(annealed_log_mean_partition_prime_finite_n(p)?.exp())
}

/// Logarithm of [`annealed_mean_partition_prime_finite_n`], finite for large `N`.
pub fn annealed_log_mean_partition_prime_finite_n(p: &ModelParams) -> Result<f64> {
    check_annealed_params(p)?;
    let n = p.n_sites as f64;
    let g = p.beta * p.beta / (4.0 * n * (1.0 - p.lambda).powi(2));
    let norm = (2.0 / std::f64::consts::PI).sqrt();
    let f = |z: f64| norm * (-0.5 * z * z - g * z.powi(4)).exp();
    let opts = AdaptiveOptions { rel_tol: 1e-13, abs_tol: 0.0, max_intervals: 2000 };
    let one_site = integrate(f, 0.0, 14.0, opts)?.value;
    Ok(n * (one_site.ln() - 0.5 * (-p.lambda).ln_1p()))
}

/// Ties at `beta = 1 - lambda` count as annealed.
pub fn is_annealed_region(beta: f64, lambda: f64) -> bool {
    beta <= 1.0 - lambda
}

pub fn second_moment_bound(beta_lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta_lambda) {
        return Err(Error::Domain(format!("second-moment bound needs 0 <= beta_lambda < 1, got {beta_lambda}")));
    }
    Ok(1.0 / (1.0 - beta_lambda * beta_lambda).sqrt())
}

/// `(1 - lambda + beta^2 q)^{-1/2}` on the domain `1 - lambda + beta^2 q > 0`.
pub fn sigma(beta: f64, lambda: f64, q_bar: f64) -> Result<f64> {
    let d = 1.0 - lambda + beta * beta * q_bar;
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "outside D: 1 - lambda + beta^2 q = {d} must be positive (beta {beta}, lambda {lambda}, q {q_bar})"
        )));
    }
    Ok(d.powf(-0.5))
}

fn check_q(q_bar: f64) -> Result<()> {
    if q_bar >= 0.0 && q_bar.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("q must be finite and >= 0, got {q_bar}")))
    }
}

pub fn rs_trial_pressure(beta: f64, lambda: f64, q_bar: f64) -> Result<f64> {
    check_beta(beta)?;
    check_q(q_bar)?;
    let s = sigma(beta, lambda, q_bar)?;
    let b2 = beta * beta;
    Ok(s.ln() + 0.5 * b2 * q_bar * s * s + 0.25 * b2 * q_bar * q_bar)
}

pub fn rs_trial_gradient(beta: f64, lambda: f64, q_bar: f64) -> Result<f64> {
    check_beta(beta)?;
    check_q(q_bar)?;
    let s = sigma(beta, lambda, q_bar)?;
    let b2 = beta * beta;
    Ok(0.5 * b2 * q_bar * (1.0 - b2 * s.powi(4)))
}

pub fn rs_optimal_qbar(beta: f64, lambda: f64) -> f64 {
    if is_annealed_region(beta, lambda) {
        0.0
    } else {
        (beta - (1.0 - lambda)) / (beta * beta)
    }
}

pub fn rs_pressure(beta: f64, lambda: f64) -> Result<RsSolution> {
    check_beta(beta)?;
    if is_annealed_region(beta, lambda) {
        if !(lambda < 1.0) {
            return Err(Error::Domain(format!("no annealed branch for lambda >= 1 (lambda = {lambda})")));
        }
        let s = sigma(beta, lambda, 0.0)?;
        return Ok(RsSolution { q_bar: 0.0, sigma: s, pressure: s.ln(), regime: Regime::Annealed });
    }
    let q = rs_optimal_qbar(beta, lambda);
    let s = sigma(beta, lambda, q)?;
    let trial = rs_trial_pressure(beta, lambda, q)?;
    let condensed = -0.5 * beta.ln() + 0.5 * beta * q + 0.25 * beta * beta * q * q;
    if (trial - condensed).abs() > 1e-12 * trial.abs().max(1.0) {
        return Err(Error::Numeric(format!("condensed branch mismatch: {trial} vs {condensed}")));
    }
    Ok(RsSolution { q_bar: q, sigma: s, pressure: trial, regime: Regime::Condensed })
}

pub fn spherical_pressure(beta: f64, r: f64) -> Result<f64> {
    check_positive_beta(beta)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let x = beta * r * r;
    Ok(if x < 1.0 {
        0.25 * x * x
    } else {
        x - r.ln() - 0.5 * beta.ln() - 0.75
    })
}

/// Minimizer and minimum of the spherical variational problem over `q in [0, 1]`.
pub fn spherical_variational(beta: f64) -> Result<(f64, f64)> {
    check_positive_beta(beta)?;
    let q = if beta < 1.0 { 0.0 } else { 1.0 - 1.0 / beta };
    let value = 0.5 * (q / (1.0 - q) + (-q).ln_1p() + 0.5 * beta * beta * (1.0 - q * q));
    Ok((q, value))
}

pub fn shell_objective(beta: f64, lambda: f64, r_squared: f64) -> Result<f64> {
    check_positive_beta(beta)?;
    if !(r_squared > 0.0) {
        return Err(Error::InvalidArgument(format!("R^2 must be positive, got {r_squared}")));
    }
    let r2 = r_squared;
    Ok(if beta * r2 < 1.0 {
        0.5 * (lambda - 1.0) * r2 + 0.5 * r2.ln() + 0.5
    } else {
        beta * r2 - 0.25 * beta * beta * r2 * r2 + 0.5 * (lambda - 1.0) * r2 - 0.5 * beta.ln() - 0.25
    })
}

/// Stationary point of the shell objective; checked against the RS pressure.
pub fn shell_lower_bound(beta: f64, lambda: f64) -> Result<ShellSolution> {
    check_positive_beta(beta)?;
    let r_squared = if is_annealed_region(beta, lambda) {
        if !(lambda < 1.0) {
            return Err(Error::Domain(format!("no stationary shell radius at beta {beta}, lambda {lambda}")));
        }
        1.0 / (1.0 - lambda)
    } else {
        (2.0 * beta + lambda - 1.0) / (beta * beta)
    };
    let value = shell_objective(beta, lambda, r_squared)?;
    let rs = rs_pressure(beta, lambda)?.pressure;
    if (value - rs).abs() > 1e-10 * rs.abs().max(1.0) {
        return Err(Error::Numeric(format!("shell bound {value} differs from RS pressure {rs}")));
    }
    Ok(ShellSolution { r_squared, value })
}

//! Acceptance suite.
//!
//! Each criterion evaluates library results against its tolerance and
//! reports what it expected and what it got. [`Level::Fast`] runs the
//! deterministic criteria only; [`Level::Full`] adds the Monte Carlo campaigns
//! at their full sample sizes.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{
    annealed_pressure, is_annealed_region, rs_optimal_qbar, rs_pressure, rs_trial_gradient, rs_trial_pressure,
    shell_lower_bound,
};
use crate::error::Result;
use crate::fluctuations::{annealed_susceptibility, integrate_triple, mc_xi_second_moment, DEFAULT_STEPS};
use crate::model::ModelParams;
use crate::montecarlo::{
    annealed_mean_partition_mc, quenched_pressure, second_moment_ratio_mc, superadditivity_check, McConfig, Scheme,
};
use crate::parisi::{
    parisi_closed_form, parisi_ode_solve, rs_order_parameter, rsb_infimum_search, rsb_pressure_functional,
    stationarity_residual, PiecewiseOrderParameter,
};
use crate::rng::{stream_rng, Purpose};
use crate::sumrules::{rs_sum_rule, DEFAULT_T_GRID};

/// Master seed for every random choice the suite makes.
pub const SUITE_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub got: String,
    pub tolerance: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

struct Outcome {
    passed: bool,
    expected: String,
    got: String,
    tolerance: String,
}

fn outcome(passed: bool, expected: impl Into<String>, got: impl Into<String>, tolerance: impl Into<String>) -> Outcome {
    Outcome { passed, expected: expected.into(), got: got.into(), tolerance: tolerance.into() }
}

fn mc(n_disorder: usize, seed: u64) -> McConfig {
    McConfig { n_disorder, n_directions: 1024, radial_points: 512, seed, scheme: Scheme::QuadratureIfSmall }
}

fn grid_beta(i: usize) -> f64 {
    3.0 * (i + 1) as f64 / 50.0
}

fn grid_lambda(k: usize) -> f64 {
    -1.0 + 1.9 * k as f64 / 49.0
}

fn main_equality() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for k in 0..50 {
            let (beta, lambda) = (grid_beta(i), grid_lambda(k));
            let gap = (shell_lower_bound(beta, lambda)?.value - rs_pressure(beta, lambda)?.pressure).abs();
            worst = worst.max(gap);
        }
    }
    Ok(outcome(worst <= 1e-10, "max |shell - RS| = 0", format!("{worst:.3e}"), "1e-10"))
}

fn annealed_coincidence() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for i in 0..50 {
        for k in 0..50 {
            let (beta, lambda) = (grid_beta(i), grid_lambda(k));
            if is_annealed_region(beta, lambda) && lambda < 1.0 {
                cells += 1;
                worst = worst.max((rs_pressure(beta, lambda)?.pressure - annealed_pressure(beta, lambda)?).abs());
            }
        }
    }
    Ok(outcome(worst <= 1e-12, format!("RS = annealed on {cells} cells"), format!("{worst:.3e}"), "1e-12"))
}

const RSB_POINTS: [(f64, f64); 10] = [
    (0.5, 0.0),
    (1.0, 0.0),
    (2.0, 0.0),
    (3.0, 0.0),
    (1.5, 0.3),
    (0.8, -0.5),
    (2.5, -1.0),
    (0.3, 0.6),
    (1.2, 0.9),
    (0.6, 0.5),
];

fn rsb_collapse() -> Result<Outcome> {
    let (mut search_gap, mut rs_gap): (f64, f64) = (0.0, 0.0);
    for (beta, lambda) in RSB_POINTS {
        let rs = rs_pressure(beta, lambda)?;
        let (_, v) = rsb_infimum_search(beta, lambda, 3, 16)?;
        search_gap = search_gap.max((v - rs.pressure).abs());
        let at_rs = rsb_pressure_functional(beta, lambda, &rs_order_parameter(rs.q_bar)?)?;
        rs_gap = rs_gap.max((at_rs - rs.pressure).abs());
    }
    Ok(outcome(
        search_gap <= 1e-6 && rs_gap <= 1e-12,
        "infimum = RS at 10 points",
        format!("search {search_gap:.3e}, RS order parameter {rs_gap:.3e}"),
        "1e-6 / 1e-12",
    ))
}

fn parisi_consistency() -> Result<Outcome> {
    let mut rng = stream_rng(SUITE_SEED, Purpose::Restart, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.random_range(1..=5);
        let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0)).collect();
        let mut m: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        q.sort_by(f64::total_cmp);
        m.sort_by(f64::total_cmp);
        let x = PiecewiseOrderParameter::new(q, m)?;
        let beta = rng.random_range(0.1..3.0);
        let lambda = rng.random_range(-1.0..0.9);
        let cf = parisi_closed_form(beta, lambda, &x)?;
        worst = worst.max((cf - parisi_ode_solve(beta, lambda, &x, DEFAULT_STEPS)?).abs());
    }
    Ok(outcome(worst <= 1e-8, "closed form = RK4", format!("{worst:.3e}"), "1e-8"))
}

fn annealed_identity(level: Level) -> Result<Outcome> {
    let samples = if level == Level::Full { 10_000 } else { 1_000 };
    let mut passed = true;
    let mut got = Vec::new();
    for lambda in [0.0, 0.5] {
        for n in [1usize, 2, 4] {
            let p = ModelParams::new(0.5, lambda, n)?;
            let e = annealed_mean_partition_mc(&p, &mc(samples, SUITE_SEED))?;
            let target = (1.0f64 - lambda).powf(-(n as f64) / 2.0);
            passed &= e.brackets(target, 3.0, 0.0);
            got.push(format!("N={n},l={lambda}: {:.4}+-{:.4} (exact {target:.4})", e.mean, e.std_error));
        }
    }
    Ok(outcome(passed, "E Z_N = (1-lambda)^(-N/2)", got.join("; "), "3 SE"))
}

fn upper_bounds() -> Result<Outcome> {
    let mut passed = true;
    let mut got = Vec::new();
    for n in [2usize, 3] {
        for beta in [0.5, 1.5] {
            let p = ModelParams::new(beta, 0.0, n)?;
            let e = quenched_pressure(&p, &mc(200, SUITE_SEED))?;
            let rs = rs_pressure(beta, 0.0)?.pressure;
            let ann = annealed_pressure(beta, 0.0)?;
            passed &= e.mean <= rs + 3.0 * e.std_error && e.mean <= ann + 3.0 * e.std_error;
            got.push(format!("N={n},b={beta}: {:.4}+-{:.4} (RS {rs:.4})", e.mean, e.std_error));
        }
    }
    Ok(outcome(passed, "A_N <= RS <= annealed", got.join("; "), "3 SE"))
}

fn superadditivity() -> Result<Outcome> {
    let mut passed = true;
    let mut got = Vec::new();
    for (n1, n2) in [(1usize, 2usize), (2, 2)] {
        for beta in [0.5, 0.8] {
            let p = ModelParams::new(beta, 0.0, n1 + n2)?;
            let g = superadditivity_check(n1, n2, &p, &mc(200, SUITE_SEED))?;
            passed &= g.mean >= -3.0 * g.std_error;
            got.push(format!("({n1},{n2}),b={beta}: {:.4}+-{:.4}", g.mean, g.std_error));
        }
    }
    Ok(outcome(passed, "gap >= 0", got.join("; "), "-3 SE"))
}

fn sum_rule() -> Result<Outcome> {
    let mut passed = true;
    let mut got = Vec::new();
    for (beta, q) in [(0.5, 0.0), (1.5, rs_optimal_qbar(1.5, 0.0))] {
        let p = ModelParams::new(beta, 0.0, 2)?;
        let r = rs_sum_rule(&p, q, &mc(2000, SUITE_SEED), DEFAULT_T_GRID)?;
        passed &= r.residual.brackets(0.0, 3.0, 0.0);
        got.push(format!(
            "b={beta}: {:.2e}+-{:.2e} (trapezoid {:.1e})",
            r.residual.mean, r.residual.std_error, r.trapezoid_error
        ));
    }
    Ok(outcome(passed, "residual = 0", got.join("; "), "3 SE"))
}

fn susceptibility_ode() -> Result<(bool, f64)> {
    let mut rng = stream_rng(SUITE_SEED, Purpose::Restart, 9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let lambda = rng.random_range(-1.0..0.9);
        let beta = rng.random_range(0.0..0.95) * (1.0 - lambda);
        let a = integrate_triple(beta, lambda, 0.0, 1.0, DEFAULT_STEPS)?.a;
        worst = worst.max((a - annealed_susceptibility(beta, lambda)?).abs());
    }
    Ok((worst <= 1e-8, worst))
}

fn susceptibility(level: Level) -> Result<Outcome> {
    let (ode_ok, worst) = susceptibility_ode()?;
    if level == Level::Fast {
        return Ok(outcome(ode_ok, "A(1) = 1/((1-l)^2-b^2)", format!("ODE {worst:.3e}"), "1e-8"));
    }
    let target = annealed_susceptibility(0.5, 0.0)?;
    let mut dists = Vec::new();
    let mut got = vec![format!("ODE {worst:.3e}")];
    let mut last = None;
    for n in [8usize, 16, 32] {
        let e = mc_xi_second_moment(&ModelParams::new(0.5, 0.0, n)?, &mc(2000, SUITE_SEED))?;
        dists.push((e.mean - target).abs());
        got.push(format!("N={n}: {:.4}+-{:.4}", e.mean, e.std_error));
        last = Some(e);
    }
    let e32 = last.expect("three sizes");
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    let lands = dists[2] <= (3.0 * e32.std_error).max(0.1);
    Ok(outcome(ode_ok && decreasing && lands, format!("-> {target:.4}"), got.join("; "), "1e-8; max(0.1, 3 SE)"))
}

fn second_moment() -> Result<Outcome> {
    let mut passed = true;
    let mut got = Vec::new();
    for n in [4usize, 8, 16] {
        let p = ModelParams::new(0.6, 0.0, n)?.with_diagonal_removed(true);
        let e = second_moment_ratio_mc(&p, &mc(2000, SUITE_SEED))?;
        passed &= e.mean <= 1.25 + 3.0 * e.std_error;
        got.push(format!("N={n}: {:.4}+-{:.4}", e.mean, e.std_error));
    }
    Ok(outcome(passed, "ratio <= 1.25", got.join("; "), "3 SE"))
}

fn gradient_stationarity() -> Result<Outcome> {
    let mut rng = stream_rng(SUITE_SEED, Purpose::Restart, 11);
    let h = 1e-6;
    let mut grad: f64 = 0.0;
    for _ in 0..100 {
        let beta = rng.random_range(0.05..3.0);
        let lambda = rng.random_range(-1.0..0.9);
        let q = rng.random_range(2.0 * h..3.0);
        let fd = (rs_trial_pressure(beta, lambda, q + h)? - rs_trial_pressure(beta, lambda, q - h)?) / (2.0 * h);
        grad = grad.max((fd - rs_trial_gradient(beta, lambda, q)?).abs());
    }
    let mut stat: f64 = 0.0;
    let mut found = 0;
    while found < 20 {
        let beta = rng.random_range(0.05..3.0);
        let lambda = rng.random_range(-1.0..0.9);
        if is_annealed_region(beta, lambda) {
            continue;
        }
        found += 1;
        let x = rs_order_parameter(rs_optimal_qbar(beta, lambda))?;
        stat = stat.max(stationarity_residual(beta, lambda, &x)?);
    }
    Ok(outcome(
        grad <= 1e-7 && stat <= 1e-12,
        "gradient = FD; D(q) = beta sigma^2",
        format!("gradient {grad:.3e}, stationarity {stat:.3e}"),
        "1e-7 / 1e-12",
    ))
}

type Check = fn(Level) -> Result<Outcome>;

const CRITERIA: [(u8, &str, bool, f64, Check); 11] = [
    (1, "shell bound equals RS pressure", false, 1.0, |_| main_equality()),
    (2, "annealed coincidence", false, 1.0, |_| annealed_coincidence()),
    (3, "RSB collapse to RS", false, 30.0, |_| rsb_collapse()),
    (4, "Parisi closed form vs ODE", false, 10.0, |_| parisi_consistency()),
    (5, "finite-N annealed identity", true, 120.0, annealed_identity),
    (6, "RS and annealed upper bounds", true, 300.0, |_| upper_bounds()),
    (7, "superadditivity", true, 300.0, |_| superadditivity()),
    (8, "RS sum rule", true, 300.0, |_| sum_rule()),
    (9, "fluctuation susceptibility", false, 601.0, susceptibility),
    (10, "second-moment bound", true, 300.0, |_| second_moment()),
    (11, "gradient and stationarity", false, 1.0, |_| gradient_stationarity()),
];

/// Criterion ids run at `level`.
pub fn criteria(level: Level) -> Vec<u8> {
    CRITERIA.iter().filter(|c| level == Level::Full || !c.2).map(|c| c.0).collect()
}

/// Runs one criterion; numeric failures count as a failed check.
pub fn run_criterion(id: u8, level: Level) -> Option<CriterionResult> {
    let (id, name, _, budget, check) = *CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let out = check(level).unwrap_or_else(|e| outcome(false, "no error", format!("error: {e}"), "-"));
    Some(CriterionResult {
        id,
        name: name.to_string(),
        passed: out.passed,
        expected: out.expected,
        got: out.got,
        tolerance: out.tolerance,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds: budget,
    })
}

pub fn run(level: Level) -> Vec<CriterionResult> {
    criteria(level).into_iter().filter_map(|id| run_criterion(id, level)).collect()
}

impl CriterionResult {
    /// `criterion <id> PASS|FAIL <name>: got ... | expected ... | tol ... | time`
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: got {} | expected {} | tol {} | {:.1}s of {:.0}s",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.got,
            self.expected,
            self.tolerance,
            self.seconds,
            self.budget_seconds
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_select_criteria() {
        assert_eq!(criteria(Level::Fast), vec![1, 2, 3, 4, 9, 11]);
        assert_eq!(criteria(Level::Full), (1..=11).collect::<Vec<_>>());
        assert!(run_criterion(12, Level::Fast).is_none());
    }

    #[test]
    fn deterministic_criteria_pass() {
        for id in [1, 2, 4, 11] {
            let r = run_criterion(id, Level::Fast).unwrap();
            assert!(r.passed, "{}", r.line());
        }
    }
}

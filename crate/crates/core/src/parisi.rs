//! Broken replica-symmetry functional for piecewise-constant order parameters.
//!
//! An order parameter with `K` levels is given by `0 <= q_1 <= ... <= q_K = Q`
//! and `0 <= m_1 <= ... <= m_K <= 1`; `x(q) = m_a` on `[q_{a-1}, q_a)` with
//! `q_0 = 0`. Write `s = beta^2 sigma(Q)^2`, `X(q) = int_q^Q x` and
//! `D(q) = 1 - s X(q)`. The Parisi solution at the origin is
//! `f(0,0) = (s/2) int_0^Q dq / D(q)`, integrated level by level in closed form.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_forms::sigma;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose};

/// Denominators at or below this are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOrderParameter", into = "RawOrderParameter")]
pub struct PiecewiseOrderParameter {
    q: Vec<f64>,
    m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawOrderParameter {
    q: Vec<f64>,
    m: Vec<f64>,
}

impl TryFrom<RawOrderParameter> for PiecewiseOrderParameter {
    type Error = Error;

    fn try_from(raw: RawOrderParameter) -> Result<Self> {
        PiecewiseOrderParameter::new(raw.q, raw.m)
    }
}

impl From<PiecewiseOrderParameter> for RawOrderParameter {
    fn from(x: PiecewiseOrderParameter) -> Self {
        RawOrderParameter { q: x.q, m: x.m }
    }
}

impl PiecewiseOrderParameter {
    pub fn new(q: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if q.is_empty() || q.len() != m.len() {
            return Err(Error::InvalidArgument(format!(
                "need K >= 1 levels with matching q and m (got {} and {})",
                q.len(),
                m.len()
            )));
        }
        if q.iter().chain(&m).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("order parameter entries must be finite".into()));
        }
        if q[0] < 0.0 || q.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(format!("q levels must be >= 0 and nondecreasing: {q:?}")));
        }
        if m[0] < 0.0 || m[m.len() - 1] > 1.0 || m.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(format!("m levels must be nondecreasing in [0, 1]: {m:?}")));
        }
        Ok(PiecewiseOrderParameter { q, m })
    }

    /// `x = m` on all of `[0, Q]`.
    pub fn constant(m: f64, q_max: f64) -> Result<Self> {
        Self::new(vec![q_max], vec![m])
    }

    pub fn levels(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn q_max(&self) -> f64 {
        self.q[self.q.len() - 1]
    }

    fn lower(&self, a: usize) -> f64 {
        if a == 0 { 0.0 } else { self.q[a - 1] }
    }

    pub fn x_at(&self, q: f64) -> f64 {
        for a in 0..self.levels() {
            if q < self.q[a] {
                return self.m[a];
            }
        }
        1.0
    }

    /// `X(q) = int_q^Q x(u) du` for `q` in `[0, Q]`.
    pub fn cumulative(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.levels() {
            let lo = self.lower(a).max(q);
            if self.q[a] > lo {
                acc += self.m[a] * (self.q[a] - lo);
            }
        }
        acc
    }

    /// `q_0 = 0` followed by every `q_a`.
    fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(0.0).chain(self.q.iter().copied())
    }
}

pub fn rs_order_parameter(q_bar: f64) -> Result<PiecewiseOrderParameter> {
    if !(q_bar >= 0.0) || !q_bar.is_finite() {
        return Err(Error::InvalidArgument(format!("q_bar must be finite and >= 0, got {q_bar}")));
    }
    PiecewiseOrderParameter::new(vec![q_bar, q_bar], vec![0.0, 1.0])
}

fn scale(beta: f64, lambda: f64, x: &PiecewiseOrderParameter) -> Result<(f64, f64)> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    let sig = sigma(beta, lambda, x.q_max())?;
    Ok((sig, beta * beta * sig * sig))
}

fn check_denominator(x: &PiecewiseOrderParameter, s: f64) -> Result<()> {
    let d0 = 1.0 - s * x.cumulative(0.0);
    if d0 <= SINGULAR_TOL {
        return Err(Error::SingularFunctional { q: 0.0, denominator: d0 });
    }
    Ok(())
}

/// `1/b(q) = 1/s - X(q)`.
pub fn parisi_b_profile(beta: f64, lambda: f64, x: &PiecewiseOrderParameter, q: f64) -> Result<f64> {
    let (_, s) = scale(beta, lambda, x)?;
    if !(0.0..=x.q_max()).contains(&q) {
        return Err(Error::InvalidArgument(format!("q = {q} outside [0, {}]", x.q_max())));
    }
    let d = 1.0 - s * x.cumulative(q);
    if d <= SINGULAR_TOL {
        return Err(Error::SingularFunctional { q, denominator: d });
    }
    Ok(s / d)
}

/// `f(0,0)` from the per-level exact integral.
pub fn parisi_closed_form(beta: f64, lambda: f64, x: &PiecewiseOrderParameter) -> Result<f64> {
    let (_, s) = scale(beta, lambda, x)?;
    check_denominator(x, s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for a in 0..x.levels() {
        let width = x.q[a] - x.lower(a);
        if width == 0.0 {
            continue;
        }
        let d_top = 1.0 - s * x.cumulative(x.q[a]);
        let m = x.m[a];
        total += if m == 0.0 { width / d_top } else { -(-s * m * width / d_top).ln_1p() / (s * m) };
    }
    Ok(0.5 * s * total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiProfile {
    /// Ascending grid on `[0, Q]`.
    pub q: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Largest relative gap between the stepped `b` and its exact level solution.
    pub b_reference_error: f64,
}

/// RK4 for `b' = -x b^2`, `a' = -b/2`, from `a(Q) = 0`, `b(Q) = s` down to 0,
/// with `n_steps` steps on every level of positive width.
pub fn parisi_ode_profile(
    beta: f64,
    lambda: f64,
    x: &PiecewiseOrderParameter,
    n_steps: usize,
) -> Result<ParisiProfile> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let (_, s) = scale(beta, lambda, x)?;
    check_denominator(x, s)?;
    let mut qs = vec![x.q_max()];
    let mut av = vec![0.0];
    let mut bv = vec![s];
    let (mut a_cur, mut b_cur) = (0.0, s);
    let mut worst: f64 = 0.0;
    for lvl in (0..x.levels()).rev() {
        let (lo, hi) = (x.lower(lvl), x.q[lvl]);
        if hi <= lo {
            continue;
        }
        let m = x.m[lvl];
        let h = (hi - lo) / n_steps as f64;
        let rhs = |b: f64| (-0.5 * b, -m * b * b);
        for k in 0..n_steps {
            // stepping backwards in q
            let (ka1, kb1) = rhs(b_cur);
            let (ka2, kb2) = rhs(b_cur - 0.5 * h * kb1);
            let (ka3, kb3) = rhs(b_cur - 0.5 * h * kb2);
            let (ka4, kb4) = rhs(b_cur - h * kb3);
            a_cur -= h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
            b_cur -= h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
            let q = hi - (k + 1) as f64 * h;
            if !b_cur.is_finite() || b_cur > 1e12 {
                return Err(Error::SingularFunctional { q, denominator: s / b_cur });
            }
            let exact = s / (1.0 - s * x.cumulative(q.max(0.0)));
            worst = worst.max(((b_cur - exact) / exact).abs());
            qs.push(q.max(0.0));
            av.push(a_cur);
            bv.push(b_cur);
        }
    }
    qs.reverse();
    av.reverse();
    bv.reverse();
    Ok(ParisiProfile { q: qs, a: av, b: bv, b_reference_error: worst })
}

/// `a(0)` from [`parisi_ode_profile`].
pub fn parisi_ode_solve(beta: f64, lambda: f64, x: &PiecewiseOrderParameter, n_steps: usize) -> Result<f64> {
    Ok(parisi_ode_profile(beta, lambda, x, n_steps)?.a[0])
}

/// `-(beta^2/2) int_0^Q q x(q) dq + beta^2 Q^2 / 4`, also evaluated as
/// `(beta^2/4) sum_a (m_{a+1} - m_a) q_a^2` with `m_{K+1} = 1`.
pub fn rsb_entropy_term(beta: f64, x: &PiecewiseOrderParameter) -> Result<f64> {
    let b2 = beta * beta;
    let qm = x.q_max();
    let integral: f64 = (0..x.levels()).map(|a| 0.5 * x.m[a] * (x.q[a].powi(2) - x.lower(a).powi(2))).sum();
    let direct = -0.5 * b2 * integral + 0.25 * b2 * qm * qm;
    let discrete = 0.25
        * b2
        * (0..x.levels())
            .map(|a| {
                let next = if a + 1 < x.levels() { x.m[a + 1] } else { 1.0 };
                (next - x.m[a]) * x.q[a] * x.q[a]
            })
            .sum::<f64>();
    if (direct - discrete).abs() > 1e-12 * direct.abs().max(1.0) {
        return Err(Error::Numeric(format!("entropy forms disagree: {direct} vs {discrete}")));
    }
    Ok(discrete)
}

pub fn rsb_pressure_functional(beta: f64, lambda: f64, x: &PiecewiseOrderParameter) -> Result<f64> {
    let (sig, _) = scale(beta, lambda, x)?;
    Ok(sig.ln() + parisi_closed_form(beta, lambda, x)? + rsb_entropy_term(beta, x)?)
}

/// `max_{q in [0,Q]} |D(q) - beta sigma(Q)^2|`; `D` is piecewise linear so
/// the maximum sits at a breakpoint.
pub fn stationarity_residual(beta: f64, lambda: f64, x: &PiecewiseOrderParameter) -> Result<f64> {
    let (sig, s) = scale(beta, lambda, x)?;
    let target = beta * sig * sig;
    Ok(x.breakpoints().map(|q| (1.0 - s * x.cumulative(q) - target).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfimumOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Upper limit of the search range for `Q`.
    pub q_max: f64,
    pub max_sweeps: usize,
}

impl Default for InfimumOptions {
    fn default() -> Self {
        InfimumOptions { restarts: 16, seed: 0, q_max: 10.0, max_sweeps: 400 }
    }
}

/// Search coordinates: `Q`, fractions `t_1 <= ... <= t_{K-1}` with
/// `q_a = Q t_a`, and `m_1 <= ... <= m_K`.
#[derive(Clone)]
struct Point {
    big_q: f64,
    t: Vec<f64>,
    m: Vec<f64>,
}

impl Point {
    fn order_parameter(&self) -> Result<PiecewiseOrderParameter> {
        let mut q: Vec<f64> = self.t.iter().map(|t| (self.big_q * t).min(self.big_q)).collect();
        q.push(self.big_q);
        for i in 1..q.len() {
            if q[i] < q[i - 1] {
                q[i] = q[i - 1];
            }
        }
        PiecewiseOrderParameter::new(q, self.m.clone())
    }
}

fn objective(beta: f64, lambda: f64, p: &Point) -> f64 {
    p.order_parameter()
        .and_then(|x| rsb_pressure_functional(beta, lambda, &x))
        .unwrap_or(f64::INFINITY)
}

fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = 1e-13 * (hi - lo).abs();
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // endpoints matter: optima often sit on the boundary
    [(lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd)]
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
}

fn descend(beta: f64, lambda: f64, mut p: Point, opts: &InfimumOptions) -> (Point, f64) {
    let mut value = objective(beta, lambda, &p);
    let k = p.m.len();
    for _ in 0..opts.max_sweeps {
        let before = value;
        {
            let (x, v) = golden_section(
                |v| {
                    let mut c = p.clone();
                    c.big_q = v;
                    objective(beta, lambda, &c)
                },
                0.0,
                opts.q_max,
            );
            if v <= value {
                p.big_q = x;
                value = v;
            }
        }
        for i in 0..k - 1 {
            let lo = if i == 0 { 0.0 } else { p.t[i - 1] };
            let hi = if i + 2 < k { p.t[i + 1] } else { 1.0 };
            let (x, v) = golden_section(
                |v| {
                    let mut c = p.clone();
                    c.t[i] = v;
                    objective(beta, lambda, &c)
                },
                lo,
                hi,
            );
            if v <= value {
                p.t[i] = x;
                value = v;
            }
        }
        for i in 0..k {
            let lo = if i == 0 { 0.0 } else { p.m[i - 1] };
            let hi = if i + 1 < k { p.m[i + 1] } else { 1.0 };
            let (x, v) = golden_section(
                |v| {
                    let mut c = p.clone();
                    c.m[i] = v;
                    objective(beta, lambda, &c)
                },
                lo,
                hi,
            );
            if v <= value {
                p.m[i] = x;
                value = v;
            }
        }
        if before - value <= 1e-15 * value.abs().max(1.0) {
            break;
        }
    }
    (p, value)
}

/// Minimizes the functional over `K`-level order parameters by projected
/// coordinate descent from seeded random starts.
pub fn rsb_infimum_search_with(
    beta: f64,
    lambda: f64,
    k_levels: usize,
    opts: &InfimumOptions,
) -> Result<(PiecewiseOrderParameter, f64)> {
    if k_levels == 0 || opts.restarts == 0 {
        return Err(Error::InvalidArgument("need k_levels >= 1 and restarts >= 1".into()));
    }
    if !(opts.q_max > 0.0) || !opts.q_max.is_finite() {
        return Err(Error::InvalidArgument(format!("q_max must be positive, got {}", opts.q_max)));
    }
    sigma(beta, lambda, 0.0)?;
    let runs: Vec<(Point, f64)> = (0..opts.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(opts.seed, Purpose::Restart, r);
            let mut t: Vec<f64> = (0..k_levels - 1).map(|_| rng.random::<f64>()).collect();
            t.sort_by(f64::total_cmp);
            let mut m: Vec<f64> = (0..k_levels).map(|_| rng.random::<f64>()).collect();
            m.sort_by(f64::total_cmp);
            let start = Point { big_q: rng.random::<f64>() * opts.q_max, t, m };
            descend(beta, lambda, start, opts)
        })
        .collect();
    let mut best: Option<(Point, f64)> = None;
    for (p, v) in runs {
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((p, v));
        }
    }
    let (p, v) = best.expect("restarts >= 1");
    if !v.is_finite() {
        return Err(Error::Numeric("no admissible order parameter found".into()));
    }
    Ok((p.order_parameter()?, v))
}

pub fn rsb_infimum_search(
    beta: f64,
    lambda: f64,
    k_levels: usize,
    restarts: usize,
) -> Result<(PiecewiseOrderParameter, f64)> {
    rsb_infimum_search_with(beta, lambda, k_levels, &InfimumOptions { restarts, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{annealed_pressure, rs_optimal_qbar, rs_pressure, rs_trial_pressure};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn validation() {
        assert!(PiecewiseOrderParameter::new(vec![], vec![]).is_err());
        assert!(PiecewiseOrderParameter::new(vec![0.5, 0.2], vec![0.1, 0.2]).is_err());
        assert!(PiecewiseOrderParameter::new(vec![0.2, 0.5], vec![0.4, 0.2]).is_err());
        assert!(PiecewiseOrderParameter::new(vec![0.2], vec![1.5]).is_err());
        assert!(rs_order_parameter(-0.1).is_err());
        let x: PiecewiseOrderParameter = serde_json::from_str(r#"{"q":[0.1,0.3],"m":[0.2,0.7]}"#).unwrap();
        assert_eq!(x.levels(), 2);
        assert_eq!(serde_json::to_string(&x).unwrap(), r#"{"q":[0.1,0.3],"m":[0.2,0.7]}"#);
        assert!(serde_json::from_str::<PiecewiseOrderParameter>(r#"{"q":[0.3,0.1],"m":[0.2,0.7]}"#).is_err());
    }

    #[test]
    fn functional_examples() {
        let rs = rs_order_parameter(0.25).unwrap();
        assert_relative_eq!(rsb_pressure_functional(2.0, 0.0, &rs).unwrap(), -0.034074, epsilon = 1e-6);
        let zero = rs_order_parameter(0.0).unwrap();
        assert_eq!(rsb_pressure_functional(1.0, 0.0, &zero).unwrap(), 0.0);
        let one = PiecewiseOrderParameter::constant(1.0, 0.5).unwrap();
        assert_relative_eq!(parisi_b_profile(1.0, 0.0, &one, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        let free = PiecewiseOrderParameter::constant(0.0, 1.0).unwrap();
        assert_relative_eq!(parisi_ode_solve(1.0, 0.0, &free, 10_000).unwrap(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(rsb_entropy_term(1.0, &rs_order_parameter(0.5).unwrap()).unwrap(), 0.0625, epsilon = 1e-15);
        assert_eq!(rsb_entropy_term(2.0, &PiecewiseOrderParameter::constant(1.0, 0.7).unwrap()).unwrap(), 0.0);
        assert!(stationarity_residual(2.0, 0.0, &rs).unwrap() < 1e-12);
    }

    #[test]
    fn x_equal_one_gives_the_annealed_value() {
        for (beta, lambda, q) in [(0.7, 0.2, 0.3), (2.0, -0.5, 1.5)] {
            let one = PiecewiseOrderParameter::constant(1.0, q).unwrap();
            assert_relative_eq!(
                rsb_pressure_functional(beta, lambda, &one).unwrap(),
                annealed_pressure(beta, lambda).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn singular_denominator_is_rejected() {
        // lambda > 1 lets s X(0) exceed one
        let x = PiecewiseOrderParameter::constant(1.0, 4.0).unwrap();
        assert!(matches!(
            rsb_pressure_functional(1.0, 1.5, &x),
            Err(Error::SingularFunctional { .. })
        ));
        assert!(parisi_ode_solve(1.0, 1.5, &x, 100).is_err());
    }

    #[test]
    fn ode_profile_tracks_exact_b() {
        let x = PiecewiseOrderParameter::new(vec![0.2, 0.5, 0.9], vec![0.1, 0.4, 0.8]).unwrap();
        let prof = parisi_ode_profile(1.5, 0.1, &x, 2000).unwrap();
        assert!(prof.b_reference_error < 1e-12);
        assert_eq!(prof.q[0], 0.0);
        assert_relative_eq!(prof.a[0], parisi_closed_form(1.5, 0.1, &x).unwrap(), epsilon = 1e-12);
        for (q, b) in prof.q.iter().zip(&prof.b).step_by(97) {
            assert_relative_eq!(*b, parisi_b_profile(1.5, 0.1, &x, *q).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn infimum_search_recovers_rs() {
        for (beta, lambda) in [(2.0, 0.0), (0.5, 0.0), (1.5, 0.3)] {
            let (x, v) = rsb_infimum_search(beta, lambda, 3, 16).unwrap();
            let rs = rs_pressure(beta, lambda).unwrap();
            assert!((v - rs.pressure).abs() <= 1e-6, "beta {beta}: {v} vs {}", rs.pressure);
            // levels with m = 1 at the top leave the value unchanged, so only the
            // width with m < 1 is pinned
            let below_one = x.q().iter().zip(x.m()).filter(|(_, m)| **m < 1.0 - 1e-6).map(|(q, _)| *q).fold(0.0, f64::max);
            assert!(below_one <= rs.q_bar + 1e-3, "{x:?}");
        }
        let a = rsb_infimum_search(2.0, 0.0, 2, 4).unwrap();
        let b = rsb_infimum_search(2.0, 0.0, 2, 4).unwrap();
        assert_eq!(a, b);
    }

    fn order_parameter() -> impl Strategy<Value = PiecewiseOrderParameter> {
        (1usize..5).prop_flat_map(|k| {
            (prop::collection::vec(0.0f64..2.0, k), prop::collection::vec(0.0f64..=1.0, k)).prop_map(|(mut q, mut m)| {
                q.sort_by(f64::total_cmp);
                m.sort_by(f64::total_cmp);
                PiecewiseOrderParameter::new(q, m).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_ode(x in order_parameter(), beta in 0.1f64..3.0, lambda in -1.0f64..0.9) {
            let cf = parisi_closed_form(beta, lambda, &x).unwrap();
            let ode = parisi_ode_solve(beta, lambda, &x, 10_000).unwrap();
            prop_assert!((cf - ode).abs() <= 1e-8 * cf.abs().max(1.0));
        }

        #[test]
        fn rs_reduction(q in 0.0f64..3.0, beta in 0.1f64..3.0, lambda in -1.0f64..0.9) {
            let rs = rs_order_parameter(q).unwrap();
            let a = rsb_pressure_functional(beta, lambda, &rs).unwrap();
            prop_assert!((a - rs_trial_pressure(beta, lambda, q).unwrap()).abs() <= 1e-12 * a.abs().max(1.0));
            let zero = PiecewiseOrderParameter::constant(0.0, q.max(1e-9)).unwrap();
            let b = rsb_pressure_functional(beta, lambda, &zero).unwrap();
            prop_assert!((b - rs_trial_pressure(beta, lambda, q.max(1e-9)).unwrap()).abs() <= 1e-12 * b.abs().max(1.0));
        }

        #[test]
        fn monotone_in_level_values(x in order_parameter(), beta in 0.1f64..3.0, lambda in -1.0f64..0.9, bump in 0.0f64..0.5, level in 0usize..4) {
            let level = level % x.levels();
            let mut m = x.m().to_vec();
            for v in m.iter_mut().skip(level) {
                *v = (*v + bump).min(1.0);
            }
            let y = PiecewiseOrderParameter::new(x.q().to_vec(), m).unwrap();
            let fx = parisi_closed_form(beta, lambda, &x).unwrap();
            let fy = parisi_closed_form(beta, lambda, &y).unwrap();
            prop_assert!(fy >= fx - 1e-14);
        }

        #[test]
        fn rs_is_a_lower_bound(x in order_parameter(), beta in 0.1f64..3.0, lambda in -1.0f64..0.9) {
            let a = rsb_pressure_functional(beta, lambda, &x).unwrap();
            prop_assert!(a >= rs_pressure(beta, lambda).unwrap().pressure - 1e-9);
        }

        #[test]
        fn stationary_at_rs_optimum(beta in 0.1f64..3.0, lambda in -1.0f64..0.9) {
            prop_assume!(beta > 1.0 - lambda + 1e-6);
            let x = rs_order_parameter(rs_optimal_qbar(beta, lambda)).unwrap();
            prop_assert!(stationarity_residual(beta, lambda, &x).unwrap() <= 1e-10);
        }
    }
}

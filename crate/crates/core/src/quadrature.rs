//! One-dimensional quadrature building blocks: Gauss–Legendre rules,
//! adaptive Gauss–Kronrod (7/15) integration, and the exponentially scaled
//! modified Bessel function `I0`.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached rule; computing large rules is O(n^2).
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let x = self.nodes.iter().map(|t| mid + half * t).collect();
        let w = self.weights.iter().map(|w| half * w).collect();
        (x, w)
    }

    /// Composite rule: `panels` equal panels on `[a, b]`, this rule on each.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let lo = a + h * p as f64;
            let (x, w) = self.on_interval(lo, lo + h);
            xs.extend(x);
            ws.extend(w);
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod abscissae and weights (15 points), Gauss weights (7 points).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`:
/// the segment with the largest error estimate is bisected until the summed
/// estimate falls below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (value, error) = kronrod15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand on [{a}, {b}] (value {total}, error {total_err})"
            )));
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not converge on [{a}, {b}] after {} intervals: \
                 estimate {total:.6e}, error {total_err:.3e}, tolerance {tol:.3e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to machine resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, error, intervals: heap.len() })
}

/// `exp(-|x|) I0(x)`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 25.0 {
        let y = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= y / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next < 1e-17 * sum || next > term {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// `ln Gamma(n / 2)` for a positive integer `n`.
pub fn ln_gamma_half(n: usize) -> f64 {
    assert!(n >= 1);
    let (mut acc, mut k) = if n.is_multiple_of(2) { (0.0, 2usize) } else { (0.5 * PI.ln(), 1usize) };
    // Gamma(k/2 + 1) = (k/2) Gamma(k/2)
    while k < n {
        acc += (k as f64 / 2.0).ln();
        k += 2;
    }
    acc
}

/// Log-density of `|z|` for `z` a standard Gaussian vector in `n` dimensions.
pub fn ln_chi_density(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    let norm = (0.5 * nf - 1.0) * std::f64::consts::LN_2 + ln_gamma_half(n);
    let rad = if n == 1 { 0.0 } else { (nf - 1.0) * r.ln() };
    rad - 0.5 * r * r - norm
}

/// Log-sum-exp of a slice; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 63] {
            let rule = GaussLegendre::get(n);
            let sum_w: f64 = rule.weights.iter().sum();
            assert_relative_eq!(sum_w, 2.0, epsilon = 1e-13);
            // x^(2n-2) integrates to 2/(2n-1)
            let deg = 2 * n - 2;
            let val: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert_relative_eq!(val, 2.0 / (deg as f64 + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn large_rule_is_accurate() {
        let rule = GaussLegendre::get(512);
        let (x, w) = rule.on_interval(0.0, PI);
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert_relative_eq!(val, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn adaptive_handles_peaked_integrands() {
        let opts = AdaptiveOptions { rel_tol: 1e-13, ..Default::default() };
        let r = integrate(|x| (-x * x / 2.0).exp(), -12.0, 12.0, opts).unwrap();
        assert_relative_eq!(r.value, (2.0 * PI).sqrt(), epsilon = 1e-12);
        let r = integrate(|x| 1.0 / (1e-3 + x * x), -1.0, 1.0, opts).unwrap();
        let exact = 2.0 * (1.0 / 1e-3f64.sqrt()) * (1.0 / 1e-3f64.sqrt()).atan();
        assert_relative_eq!(r.value, exact, epsilon = 1e-11);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let opts = AdaptiveOptions { rel_tol: 1e-15, abs_tol: 0.0, max_intervals: 3 };
        assert!(integrate(|x| (50.0 * x).sin().abs(), 0.0, 10.0, opts).is_err());
    }

    #[test]
    fn i0e_matches_trapezoid_oracle() {
        // exp(-x) I0(x) = (1/pi) int_0^pi exp(-x (1 - cos t)) dt, trapezoid is spectral here.
        for &x in &[0.0, 1e-3, 0.5, 3.0, 12.0, 24.9, 25.1, 60.0, 400.0] {
            let m = 4000;
            let h = PI / m as f64;
            let mut s = 0.5 * (1.0 + (-2.0f64 * x).exp());
            for k in 1..m {
                s += (-x * (1.0 - (k as f64 * h).cos())).exp();
            }
            let oracle = s * h / PI;
            assert_relative_eq!(bessel_i0e(x), oracle, max_relative = 1e-13);
        }
    }

    #[test]
    fn chi_density_normalizes() {
        for n in 1..=6 {
            let opts = AdaptiveOptions { rel_tol: 1e-13, ..Default::default() };
            let r = integrate(|r| ln_chi_density(n, r).exp(), 0.0, 20.0, opts).unwrap();
            assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ln_gamma_half_values() {
        assert_relative_eq!(ln_gamma_half(1), PI.sqrt().ln(), epsilon = 1e-15);
        assert_relative_eq!(ln_gamma_half(2), 0.0, epsilon = 1e-15);
        assert_relative_eq!(ln_gamma_half(5), (0.75 * PI.sqrt()).ln(), epsilon = 1e-15);
        assert_relative_eq!(ln_gamma_half(8), 6f64.ln(), epsilon = 1e-15);
    }
}

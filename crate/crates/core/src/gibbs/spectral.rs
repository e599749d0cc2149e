//! Deterministic `log Z` for small field-free single-block weights.
//!
//! In the eigenbasis of `K` the weight depends on `z` only through the
//! squared projections, so the angular average at fixed radius reduces to at
//! most one bounded integral of a Bessel function and the radius is handled
//! by adaptive Gauss–Kronrod quadrature against the chi density.

use nalgebra::SymmetricEigen;

use super::{envelope, LogWeight};
use crate::error::{Error, Result};
use crate::quadrature::{bessel_i0e, integrate, ln_chi_density, AdaptiveOptions};

/// Largest dimension handled here.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Relative tolerance of the outer radial integral.
    pub rel_tol: f64,
    /// Log-drop of the radial envelope below its peak at the truncation radius.
    pub tail_drop: f64,
    pub max_intervals: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { rel_tol: 1e-12, tail_drop: 40.0, max_intervals: 4000 }
    }
}

/// `E_u exp(s (u.K u - k1))` for `u` uniform on the sphere, eigenvalues sorted
/// descending.
fn angular_mean(kappa: &[f64], s: f64) -> Result<f64> {
    match kappa.len() {
        1 => Ok(1.0),
        2 => Ok(bessel_i0e(0.5 * s * (kappa[0] - kappa[1]))),
        3 => {
            let (k1, k2, k3) = (kappa[0], kappa[1], kappa[2]);
            // u_1 = t is uniform on [-1, 1]; the remaining circle gives I0.
            let inner = |t: f64| {
                let w = 1.0 - t * t;
                (-s * w * (k1 - k2)).exp() * bessel_i0e(0.5 * s * w * (k2 - k3))
            };
            let opts = AdaptiveOptions { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 2000 };
            Ok(integrate(inner, 0.0, 1.0, opts)?.value)
        }
        n => Err(Error::InvalidArgument(format!("spectral quadrature supports N <= {MAX_DIM}, got {n}"))),
    }
}

pub fn log_partition(w: &LogWeight, opts: &SpectralOptions) -> Result<f64> {
    w.validate()?;
    let n = w.n();
    if n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("spectral quadrature supports N <= {MAX_DIM}, got {n}")));
    }
    if w.has_field() || w.blocks.len() != 1 {
        return Err(Error::InvalidArgument(
            "spectral quadrature needs a field-free single-block weight".into(),
        ));
    }
    let sym = (&w.coupling + w.coupling.transpose()) * 0.5;
    let mut kappa: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    kappa.sort_by(|a, b| b.total_cmp(a));
    let gamma = w.quartic[(0, 0)];
    let c = kappa[0] + w.mass;
    let env = envelope(n, c - 0.5, 0.0, gamma, opts.tail_drop)?;
    let radial = |r: f64| ln_chi_density(n, r) + c * r * r - gamma * r.powi(4);
    let shift = if env.peak_r > 0.0 { radial(env.peak_r) } else { radial(0.0) };
    let mut failure = None;
    let integrand = |r: f64| {
        if n > 1 && r == 0.0 {
            return 0.0;
        }
        let s = r * r;
        match angular_mean(&kappa, s) {
            Ok(a) => (radial(r) - shift).exp() * a,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let aopts = AdaptiveOptions { rel_tol: opts.rel_tol, abs_tol: 0.0, max_intervals: opts.max_intervals };
    let result = integrate(integrand, 0.0, env.cutoff, aopts);
    if let Some(e) = failure {
        return Err(e);
    }
    let value = result?.value;
    if !(value > 0.0) {
        return Err(Error::Numeric(format!("radial integral is not positive: {value}")));
    }
    Ok(shift + value.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn weight(k: DMatrix<f64>, mass: f64, gamma: f64) -> LogWeight {
        let n = k.nrows();
        LogWeight::single_block(k, DVector::zeros(n), mass, gamma)
    }

    #[test]
    fn free_gaussian_with_mass() {
        // E exp(m |z|^2) = (1 - 2m)^{-N/2}
        for n in 1..=3 {
            let w = weight(DMatrix::zeros(n, n), 0.25, 0.0);
            let got = log_partition(&w, &SpectralOptions::default()).unwrap();
            assert_relative_eq!(got, -(n as f64) / 2.0 * 0.5f64.ln(), max_relative = 1e-11);
        }
    }

    #[test]
    fn anisotropic_gaussian_matches_determinant() {
        let k = DMatrix::from_row_slice(3, 3, &[0.2, 0.05, 0.0, 0.05, -0.3, 0.1, 0.0, 0.1, 0.1]);
        let w = weight(k.clone(), 0.0, 0.0);
        let got = log_partition(&w, &SpectralOptions::default()).unwrap();
        let det = (DMatrix::identity(3, 3) - k * 2.0).determinant();
        assert_relative_eq!(got, -0.5 * det.ln(), max_relative = 1e-11);
    }

    #[test]
    fn one_dimensional_quartic_matches_trapezoid() {
        let (k, gamma) = (0.7, 0.25);
        let w = weight(DMatrix::from_element(1, 1, k), 0.0, gamma);
        let got = log_partition(&w, &SpectralOptions::default()).unwrap();
        let n = 200_000;
        let h = 24.0 / n as f64;
        let sum: f64 = (0..=n)
            .map(|i| {
                let z = -12.0 + i as f64 * h;
                let f = (-0.5 * z * z + k * z * z - gamma * z.powi(4)).exp();
                if i == 0 || i == n { 0.5 * f } else { f }
            })
            .sum();
        let oracle = (sum * h / (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert_relative_eq!(got, oracle, max_relative = 1e-10);
    }
}

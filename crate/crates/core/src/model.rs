//! Hamiltonian, regularized Boltzmann exponent, overlaps and per-sample
//! log-partition evaluators of the Gaussian spin glass.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gibbs::{radial, spectral, tensor, LogWeight};
use crate::montecarlo::{direction_seed, McConfig, Scheme};
use crate::rng::{rng_from_seed, Purpose};

/// Largest system handled by deterministic quadrature.
pub const QUADRATURE_MAX_N: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub lambda: f64,
    pub h: f64,
    pub n_sites: usize,
    /// Selects the partition function without diagonal couplings.
    pub diagonal_removed: bool,
}

impl ModelParams {
    pub fn new(beta: f64, lambda: f64, n_sites: usize) -> Result<Self> {
        let p = ModelParams { beta, lambda, h: 0.0, n_sites, diagonal_removed: false };
        p.validate()?;
        Ok(p)
    }

    pub fn with_field(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_diagonal_removed(mut self, removed: bool) -> Self {
        self.diagonal_removed = removed;
        self
    }

    pub fn with_n(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    /// `beta = 0` is accepted as the free limit.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !self.lambda.is_finite() || !self.h.is_finite() {
            return Err(Error::InvalidArgument("lambda and h must be finite".into()));
        }
        if self.n_sites == 0 {
            return Err(Error::InvalidArgument("n_sites must be >= 1".into()));
        }
        Ok(())
    }

    /// `beta / (1 - lambda)`.
    pub fn beta_lambda(&self) -> f64 {
        self.beta / (1.0 - self.lambda)
    }
}

/// Square matrix of i.i.d. standard normal couplings, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSample {
    pub n: usize,
    pub couplings: Vec<f64>,
    pub seed: u64,
}

impl DisorderSample {
    /// Draws the matrix from a generator keyed by `seed`.
    pub fn generate(n: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let couplings = (0..n * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        DisorderSample { n, couplings, seed }
    }

    pub fn from_rows(n: usize, couplings: Vec<f64>, seed: u64) -> Result<Self> {
        check_dim(n * n, couplings.len())?;
        if couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("couplings must be finite".into()));
        }
        Ok(DisorderSample { n, couplings, seed })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.couplings)
    }

    /// `(J + J^T) / 2`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let m = self.matrix();
        (&m + m.transpose()) * 0.5
    }

    /// Little-endian `n: u64`, `seed: u64`, then the row-major entries.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.couplings.len());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for c in &self.couplings {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |k: usize| -> Result<[u8; 8]> {
            bytes
                .get(8 * k..8 * k + 8)
                .map(|s| s.try_into().expect("slice of length 8"))
                .ok_or_else(|| Error::InvalidArgument("truncated disorder record".into()))
        };
        let n = u64::from_le_bytes(word(0)?) as usize;
        let seed = u64::from_le_bytes(word(1)?);
        let expected = n
            .checked_mul(n)
            .and_then(|m| m.checked_mul(8))
            .and_then(|m| m.checked_add(16))
            .ok_or_else(|| Error::InvalidArgument("disorder size overflows".into()))?;
        if bytes.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: bytes.len() });
        }
        let couplings = (0..n * n).map(|k| word(k + 2).map(f64::from_le_bytes)).collect::<Result<_>>()?;
        DisorderSample::from_rows(n, couplings, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConfig {
    z: Vec<f64>,
}

impl SpinConfig {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("spin configuration has non-finite entries".into()));
        }
        Ok(SpinConfig { z })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPartitionResult {
    pub log_z: f64,
    pub method: Method,
    pub std_error: f64,
}

fn check_sizes(z: &SpinConfig, j: &DisorderSample, p: &ModelParams) -> Result<()> {
    p.validate()?;
    check_dim(p.n_sites, j.n)?;
    check_dim(p.n_sites, z.len())
}

pub fn hamiltonian(z: &SpinConfig, j: &DisorderSample, p: &ModelParams) -> Result<f64> {
    check_sizes(z, j, p)?;
    let n = p.n_sites;
    let z = z.as_slice();
    let field = p.h * z.iter().sum::<f64>();
    if p.diagonal_removed {
        let mut acc = 0.0;
        for i in 0..n {
            for k in i + 1..n {
                let jhat = (j.get(i, k) + j.get(k, i)) / std::f64::consts::SQRT_2;
                acc += jhat * z[i] * z[k];
            }
        }
        Ok(-acc / (n as f64).sqrt() - field)
    } else {
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += j.get(i, k) * z[i] * z[k];
            }
        }
        Ok(-acc / (2.0 * n as f64).sqrt() - field)
    }
}

pub fn regularized_exponent(z: &SpinConfig, j: &DisorderSample, p: &ModelParams) -> Result<f64> {
    let h = hamiltonian(z, j, p)?;
    let sq = z.norm_sq();
    Ok(-p.beta * h - p.beta * p.beta / (4.0 * p.n_sites as f64) * sq * sq + 0.5 * p.lambda * sq)
}

pub fn overlap(z1: &SpinConfig, z2: &SpinConfig) -> Result<f64> {
    check_dim(z1.len(), z2.len())?;
    if z1.is_empty() {
        return Err(Error::InvalidArgument("overlap of empty configurations".into()));
    }
    let dot: f64 = z1.as_slice().iter().zip(z2.as_slice()).map(|(a, b)| a * b).sum();
    Ok(dot / z1.len() as f64)
}

/// Matrix `K` with `-beta H` (two-body part) `= z.K z`.
pub fn coupling_form(j: &DisorderSample, p: &ModelParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    check_dim(p.n_sites, j.n)?;
    let mut k = j.symmetrized() * (p.beta / (2.0 * p.n_sites as f64).sqrt());
    if p.diagonal_removed {
        k.fill_diagonal(0.0);
    }
    Ok(k)
}

/// The Boltzmann factor of the model as a log-weight over the Gaussian base measure.
pub fn gibbs_weight(j: &DisorderSample, p: &ModelParams) -> Result<LogWeight> {
    let k = coupling_form(j, p)?;
    let n = p.n_sites;
    Ok(LogWeight::single_block(
        k,
        DVector::from_element(n, p.beta * p.h),
        0.5 * p.lambda,
        p.beta * p.beta / (4.0 * n as f64),
    ))
}

/// Deterministic `log Z` of a weight with `N <= 3`.
pub(crate) fn weight_log_partition_quadrature(w: &LogWeight) -> Result<f64> {
    if w.n() > QUADRATURE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "quadrature supports N <= {QUADRATURE_MAX_N}, got {}",
            w.n()
        )));
    }
    if !w.has_field() && w.blocks.len() == 1 {
        spectral::log_partition(w, &spectral::SpectralOptions::default())
    } else {
        Ok(tensor::integrate(w, &tensor::TensorOptions::default(), 0)?.log_z)
    }
}

pub fn log_partition_quadrature(j: &DisorderSample, p: &ModelParams) -> Result<LogPartitionResult> {
    let w = gibbs_weight(j, p)?;
    Ok(LogPartitionResult { log_z: weight_log_partition_quadrature(&w)?, method: Method::Quadrature, std_error: 0.0 })
}

pub fn log_partition_mc(j: &DisorderSample, p: &ModelParams, cfg: &McConfig) -> Result<LogPartitionResult> {
    cfg.validate()?;
    let w = gibbs_weight(j, p)?;
    let seed = direction_seed(cfg, j.seed, Purpose::DirectionsA);
    let est = radial::estimate(&w, &radial::RadialOptions::new(cfg.n_directions, cfg.radial_points, seed))?;
    Ok(LogPartitionResult { log_z: est.log_z, method: Method::MonteCarlo, std_error: est.log_z_se })
}

/// Quadrature when the configuration and size allow it, otherwise Monte Carlo.
pub fn log_partition(j: &DisorderSample, p: &ModelParams, cfg: &McConfig) -> Result<LogPartitionResult> {
    if cfg.scheme == Scheme::QuadratureIfSmall && p.n_sites <= QUADRATURE_MAX_N {
        log_partition_quadrature(j, p)
    } else {
        log_partition_mc(j, p, cfg)
    }
}

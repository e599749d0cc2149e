//! Quenched-disorder sampling engine.
//!
//! Every estimator maps disorder-sample indices to per-sample values in
//! parallel, collects them in index order and reduces sequentially, so results
//! are bit-identical for any worker count. Error bars are between-sample
//! standard errors; within-sample Monte Carlo noise is part of that variance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{radial, tensor, LogWeight, ReplicaMoments};
use crate::model::{gibbs_weight, weight_log_partition_quadrature, DisorderSample, ModelParams, QUADRATURE_MAX_N};
use crate::rng::{derive_seed, stream_seed, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    QuadratureIfSmall,
    RadialMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_disorder: usize,
    pub n_directions: usize,
    pub radial_points: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_disorder: 200, n_directions: 1024, radial_points: 512, seed: 0, scheme: Scheme::QuadratureIfSmall }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_disorder == 0 || self.n_directions == 0 || self.radial_points == 0 {
            return Err(Error::InvalidArgument(format!(
                "sample counts must be >= 1 (n_disorder {}, n_directions {}, radial_points {})",
                self.n_disorder, self.n_directions, self.radial_points
            )));
        }
        Ok(())
    }

    pub(crate) fn use_quadrature(&self, n: usize) -> bool {
        self.scheme == Scheme::QuadratureIfSmall && n <= QUADRATURE_MAX_N
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { mean, std_error, n_samples: n }
    }

    pub fn exact(value: f64, n_samples: usize) -> Self {
        McEstimate { mean: value, std_error: 0.0, n_samples }
    }

    /// `|mean - target| <= k * std_error + slack`.
    pub fn brackets(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + slack
    }
}

/// Ratio `E[a] / E[b]^2` with a delta-method standard error, from paired samples.
pub(crate) fn ratio_of_square(a: &[f64], b: &[f64]) -> McEstimate {
    let n = a.len();
    let nf = n as f64;
    let ma = a.iter().sum::<f64>() / nf;
    let mb = b.iter().sum::<f64>() / nf;
    let mean = ma / (mb * mb);
    if n < 2 {
        return McEstimate::exact(mean, n);
    }
    let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        vaa += (x - ma) * (x - ma);
        vbb += (y - mb) * (y - mb);
        vab += (x - ma) * (y - mb);
    }
    let d = nf - 1.0;
    let (vaa, vbb, vab) = (vaa / d, vbb / d, vab / d);
    let ga = 1.0 / (mb * mb);
    let gb = -2.0 * ma / (mb * mb * mb);
    let var = (ga * ga * vaa + gb * gb * vbb + 2.0 * ga * gb * vab).max(0.0) / nf;
    McEstimate { mean, std_error: var.sqrt(), n_samples: n }
}

pub fn sample_disorder(n: usize, seed: u64, index: u64) -> DisorderSample {
    DisorderSample::generate(n, stream_seed(seed, Purpose::Disorder, index))
}

pub(crate) fn sample_disorder_for(n: usize, seed: u64, purpose: Purpose, index: u64) -> DisorderSample {
    DisorderSample::generate(n, stream_seed(seed, purpose, index))
}

/// Seed of a direction stream for one disorder sample.
pub(crate) fn direction_seed(cfg: &McConfig, sample_seed: u64, purpose: Purpose) -> u64 {
    derive_seed(cfg.seed, &[purpose as u64, sample_seed])
}

/// Runs `f` over `0..n` in parallel, keeping index order. Failed samples are
/// skipped; more than 1% failures is an error.
pub(crate) fn map_samples<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = (0..n as u64).into_par_iter().map(&f).collect();
    let mut out = Vec::with_capacity(n);
    let mut first_err = None;
    let mut skipped = 0usize;
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                skipped += 1;
                first_err.get_or_insert(e);
            }
        }
    }
    if skipped * 100 > n || out.is_empty() {
        return Err(Error::Numeric(format!(
            "{skipped} of {n} disorder samples failed; first failure: {}",
            first_err.map(|e| e.to_string()).unwrap_or_default()
        )));
    }
    Ok(out)
}

/// Per-sample partition-function summary.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PartitionSample {
    /// Estimate of `log Z` (bias corrected under Monte Carlo).
    pub log_z: f64,
    /// Log of an unbiased estimate of `Z`.
    pub log_mean: f64,
    /// Log of an unbiased estimate of `Z^2`.
    pub log_square: f64,
}

pub(crate) fn weight_partition(w: &LogWeight, cfg: &McConfig, seed: u64) -> Result<PartitionSample> {
    if cfg.use_quadrature(w.n()) {
        let l = weight_log_partition_quadrature(w)?;
        Ok(PartitionSample { log_z: l, log_mean: l, log_square: 2.0 * l })
    } else {
        let est = radial::estimate(w, &radial::RadialOptions::new(cfg.n_directions, cfg.radial_points, seed))?;
        Ok(PartitionSample { log_z: est.log_z, log_mean: est.log_mean, log_square: est.log_split_product })
    }
}

/// Moments of two independent replicas under one disorder sample.
#[derive(Debug, Clone)]
pub(crate) struct ReplicaPair {
    pub first: ReplicaMoments,
    pub second: ReplicaMoments,
    /// `<q_12^k>` for `k = 1..=max_power`.
    pub powers: Vec<f64>,
}

pub(crate) fn weight_replicas(
    w: &LogWeight,
    cfg: &McConfig,
    seed_a: u64,
    seed_b: u64,
    max_power: usize,
) -> Result<ReplicaPair> {
    let n = w.n();
    if cfg.use_quadrature(n) {
        let t = tensor::integrate(w, &tensor::TensorOptions::default(), max_power)?;
        let powers = t.overlap_powers();
        return Ok(ReplicaPair { first: t.moments.clone(), second: t.moments, powers });
    }
    let mut oa = radial::RadialOptions::new(cfg.n_directions, cfg.radial_points, seed_a);
    oa.moments = true;
    if max_power > 2 {
        oa.radial_powers = max_power;
    }
    let mut ob = oa;
    ob.seed = seed_b;
    let ea = radial::estimate(w, &oa)?;
    let eb = radial::estimate(w, &ob)?;
    let first = ea.moments.clone().expect("moments requested");
    let second = eb.moments.clone().expect("moments requested");
    let powers = if max_power > 2 {
        radial::overlap_powers(&ea, &eb, max_power)
    } else {
        let all = 0..n;
        [first.overlap_mean(&second, all.clone()), first.overlap_square(&second, all)]
            .into_iter()
            .take(max_power)
            .collect()
    };
    Ok(ReplicaPair { first, second, powers })
}

fn model_partition(p: &ModelParams, cfg: &McConfig, purpose: Purpose, index: u64) -> Result<PartitionSample> {
    let j = sample_disorder_for(p.n_sites, cfg.seed, purpose, index);
    let w = gibbs_weight(&j, p)?;
    weight_partition(&w, cfg, direction_seed(cfg, j.seed, Purpose::DirectionsA))
}

/// `(1/N) E log Z_N`.
pub fn quenched_pressure(p: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    p.validate()?;
    cfg.validate()?;
    let n = p.n_sites as f64;
    let values = map_samples(cfg.n_disorder, |i| Ok(model_partition(p, cfg, Purpose::Disorder, i)?.log_z / n))?;
    Ok(McEstimate::from_samples(&values))
}

/// Disorder average of `Z_N` itself.
pub fn annealed_mean_partition_mc(p: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    p.validate()?;
    cfg.validate()?;
    let values = map_samples(cfg.n_disorder, |i| Ok(model_partition(p, cfg, Purpose::Disorder, i)?.log_mean.exp()))?;
    Ok(McEstimate::from_samples(&values))
}

/// `E(Z'^2) / E(Z')^2` for the diagonal-removed partition function.
pub fn second_moment_ratio_mc(p: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    p.validate()?;
    cfg.validate()?;
    if !p.diagonal_removed {
        return Err(Error::InvalidArgument("second-moment ratio is defined for the diagonal-removed model".into()));
    }
    if p.beta_lambda() >= 1.0 || p.lambda >= 1.0 {
        return Err(Error::Domain(format!("second-moment ratio needs beta_lambda < 1, got {}", p.beta_lambda())));
    }
    let samples = map_samples(cfg.n_disorder, |i| {
        let s = model_partition(p, cfg, Purpose::Disorder, i)?;
        Ok((s.log_square.exp(), s.log_mean.exp()))
    })?;
    let (sq, z): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    Ok(ratio_of_square(&sq, &z))
}

/// `<q_12^k>` for `k = 1..=max_power`, disorder-averaged.
pub fn replica_overlap_moments(p: &ModelParams, cfg: &McConfig, max_power: usize) -> Result<Vec<McEstimate>> {
    p.validate()?;
    cfg.validate()?;
    if max_power == 0 {
        return Err(Error::InvalidArgument("max_power must be >= 1".into()));
    }
    let samples = map_samples(cfg.n_disorder, |i| {
        let j = sample_disorder(p.n_sites, cfg.seed, i);
        let w = gibbs_weight(&j, p)?;
        let seeds = (direction_seed(cfg, j.seed, Purpose::DirectionsA), direction_seed(cfg, j.seed, Purpose::DirectionsB));
        Ok(weight_replicas(&w, cfg, seeds.0, seeds.1, max_power)?.powers)
    })?;
    Ok((0..max_power)
        .map(|k| McEstimate::from_samples(&samples.iter().map(|s| s[k]).collect::<Vec<_>>()))
        .collect())
}

/// `N A_N - N1 A_N1 - N2 A_N2` with independent disorder for the three systems.
pub fn superadditivity_check(n1: usize, n2: usize, p: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    p.validate()?;
    cfg.validate()?;
    if n1 == 0 || n2 == 0 || n1 + n2 != p.n_sites {
        return Err(Error::InvalidArgument(format!(
            "subsystem sizes {n1} + {n2} must be positive and sum to N = {}",
            p.n_sites
        )));
    }
    let p1 = p.with_n(n1);
    let p2 = p.with_n(n2);
    let values = map_samples(cfg.n_disorder, |i| {
        let whole = model_partition(p, cfg, Purpose::Disorder, i)?.log_z;
        let a = model_partition(&p1, cfg, Purpose::SubsystemA, i)?.log_z;
        let b = model_partition(&p2, cfg, Purpose::SubsystemB, i)?.log_z;
        Ok(whole - a - b)
    })?;
    Ok(McEstimate::from_samples(&values))
}

/// Persisted result of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: ModelParams,
    pub cfg: McConfig,
    pub estimates: std::collections::BTreeMap<String, McEstimate>,
    pub git_describe: String,
    pub timestamp: String,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records serialize")
    }

    /// `name,mean,std_error,n_samples` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,mean,std_error,n_samples\n");
        for (k, e) in &self.estimates {
            out.push_str(&format!("{k},{},{},{}\n", e.mean, e.std_error, e.n_samples));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n_disorder: usize) -> McConfig {
        McConfig { n_disorder, n_directions: 256, radial_points: 256, seed: 42, scheme: Scheme::QuadratureIfSmall }
    }

    #[test]
    fn disorder_samples_are_deterministic_and_standard() {
        assert_eq!(sample_disorder(2, 1, 0), sample_disorder(2, 1, 0));
        assert_ne!(sample_disorder(2, 1, 0).couplings, sample_disorder(2, 1, 1).couplings);
        let entries: Vec<f64> = (0..1000).flat_map(|i| sample_disorder(10, 5, i).couplings).collect();
        let n = entries.len() as f64;
        let mean = entries.iter().sum::<f64>() / n;
        let var = entries.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn free_limits_are_exact() {
        for n in [2, 5] {
            let p = ModelParams::new(0.0, 0.5, n).unwrap();
            let q = quenched_pressure(&p, &cfg(8)).unwrap();
            assert_relative_eq!(q.mean, -0.5 * 0.5f64.ln(), max_relative = 1e-12);
            assert!(q.std_error < 1e-12);
            let z = annealed_mean_partition_mc(&p, &cfg(8)).unwrap();
            assert_relative_eq!(z.mean, 0.5f64.powf(-(n as f64) / 2.0), max_relative = 1e-12);
            let m = replica_overlap_moments(&p.with_field(0.0), &cfg(4), 2).unwrap();
            assert!(m[0].mean.abs() < 1e-12);
            // the lambda term rescales the free variance to 1/(1-lambda)
            assert_relative_eq!(m[1].mean, 4.0 / n as f64, max_relative = 1e-9);
        }
        let p = ModelParams::new(0.0, 0.0, 4).unwrap();
        let m = replica_overlap_moments(&p, &cfg(4), 2).unwrap();
        assert_relative_eq!(m[1].mean, 0.25, max_relative = 1e-10);
        let g = superadditivity_check(2, 2, &p, &cfg(4)).unwrap();
        assert!(g.mean.abs() < 1e-12);
        let r = second_moment_ratio_mc(&p.with_diagonal_removed(true), &cfg(4)).unwrap();
        assert_relative_eq!(r.mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let p = ModelParams::new(0.7, 0.0, 4).unwrap();
        let c = McConfig { n_disorder: 6, n_directions: 64, radial_points: 128, seed: 9, scheme: Scheme::RadialMc };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| quenched_pressure(&p, &c)).unwrap();
        let b = three.install(|| quenched_pressure(&p, &c)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rs_bound_holds_at_small_size() {
        let p = ModelParams::new(0.5, 0.0, 2).unwrap();
        let q = quenched_pressure(&p, &cfg(100)).unwrap();
        assert!(q.mean <= 3.0 * q.std_error);
    }

    #[test]
    fn skip_policy() {
        let ok = map_samples(200, |i| if i == 0 { Err(Error::Numeric("x".into())) } else { Ok(i) }).unwrap();
        assert_eq!(ok.len(), 199);
        assert!(map_samples(200, |i| if i < 3 { Err(Error::Numeric("x".into())) } else { Ok(i) }).is_err());
    }

    #[test]
    fn delta_method_ratio() {
        let a = [1.0, 1.0, 1.0];
        let b = [1.0, 1.0, 1.0];
        let r = ratio_of_square(&a, &b);
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_error, 0.0);
    }
}

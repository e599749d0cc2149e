//! Radial-spherical Monte Carlo for Gibbs weights of any size.
//!
//! Writing `z = r u` per block, the radius is integrated on a fixed
//! Gauss–Legendre grid against the chi density while the directions are
//! sampled. Directions come in Haar-random orthonormal frames used with both
//! signs, so each frame averages every quadratic form in `u` exactly; frames
//! are the independent units of the estimator.
//!
//! A single block samples directions from an angular central Gaussian whose
//! precision is the quadratic part of the weight plus a self-consistent
//! quartic shift; each direction carries its inverse proposal density.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{envelope, LogWeight, ReplicaMoments};
use crate::error::{Error, Result};
use crate::quadrature::{ln_chi_density, GaussLegendre};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy)]
pub struct RadialOptions {
    /// Requested number of directions; rounded up to an even number of whole frames.
    pub directions: usize,
    /// Gauss–Legendre points on the radial interval (per block: an eighth, at least 32).
    pub radial_points: usize,
    pub tail_drop: f64,
    pub seed: u64,
    /// Accumulate conditional moments for overlap estimates.
    pub moments: bool,
    /// Keep per-direction summaries with radial moments up to this power,
    /// for higher overlap powers (single block only; 0 disables).
    pub radial_powers: usize,
}

impl RadialOptions {
    pub fn new(directions: usize, radial_points: usize, seed: u64) -> Self {
        RadialOptions { directions, radial_points, tail_drop: 42.0, seed, moments: false, radial_powers: 0 }
    }
}

/// One sampled direction: its normalized weight and conditional radial
/// moments `E[r^k | u]`, `k = 0..=max_power`.
#[derive(Debug, Clone)]
pub struct DirectionSummary {
    pub weight: f64,
    pub u: Vec<f64>,
    pub radial: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RadialEstimate {
    /// Bias-corrected estimate of `log Z`.
    pub log_z: f64,
    /// Delta-method standard error of `log Z`.
    pub log_z_se: f64,
    /// Log of the unbiased estimate of `Z`.
    pub log_mean: f64,
    /// Log of the product of the two half-sample means: unbiased for `Z^2`.
    pub log_split_product: f64,
    pub frames: usize,
    pub moments: Option<ReplicaMoments>,
    pub directions: Vec<DirectionSummary>,
}

fn haar_frame<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

struct Grid {
    r: Vec<f64>,
    /// `ln chi(r) + ln w + mass r^2`
    base: Vec<f64>,
}

fn radial_grid(dim: usize, points: usize, cutoff: f64, mass: f64) -> Grid {
    let (r, w) = GaussLegendre::get(points).on_interval(0.0, cutoff);
    let base = r
        .iter()
        .zip(&w)
        .map(|(&r, &w)| ln_chi_density(dim, r) + w.ln() + mass * r * r)
        .collect();
    Grid { r, base }
}

/// Per-direction accumulator over frames.
struct Accumulator {
    frame_means: Vec<f64>,
    total: f64,
    mean: Vec<f64>,
    second: Vec<f64>,
    kept: Vec<DirectionSummary>,
}

impl Accumulator {
    fn new(n: usize, moments: bool) -> Self {
        Accumulator {
            frame_means: Vec::new(),
            total: 0.0,
            mean: if moments { vec![0.0; n] } else { Vec::new() },
            second: if moments { vec![0.0; n * n] } else { Vec::new() },
            kept: Vec::new(),
        }
    }
}

pub fn estimate(w: &LogWeight, opts: &RadialOptions) -> Result<RadialEstimate> {
    w.validate()?;
    if opts.directions == 0 || opts.radial_points == 0 {
        return Err(Error::InvalidArgument("radial estimator needs directions >= 1 and radial points >= 1".into()));
    }
    let sym = (&w.coupling + w.coupling.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let kappa_max = eig.eigenvalues.max();
    let mut rng = rng_from_seed(opts.seed);
    let n = w.n();
    let mut acc = Accumulator::new(n, opts.moments);
    let shift = match w.blocks.len() {
        1 => {
            let proposal = Proposal::new(&eig, w.mass, w.quartic[(0, 0)]);
            single_block(w, &sym, kappa_max, &proposal, opts, &mut rng, &mut acc)?
        }
        _ => two_blocks(w, &sym, kappa_max, opts, &mut rng, &mut acc)?,
    };
    finish(acc, shift, n)
}

/// Angular central Gaussian `u = L e / |L e|` with `e` uniform and
/// `L L^T = (P + 4 gamma a)^{-1}`, `P = (1 - 2 mass) I - 2 K`, where
/// `a = tr (P + 4 gamma a)^{-1}` is the mean-field `E r^2`.
struct Proposal {
    factor: Option<DMatrix<f64>>,
    half_log_det: f64,
    /// Upper bound of `-ln q(u)`.
    log_inv_q_max: f64,
}

impl Proposal {
    fn new(eig: &SymmetricEigen<f64, nalgebra::Dyn>, mass: f64, gamma: f64) -> Self {
        let p: Vec<f64> = eig.eigenvalues.iter().map(|k| 1.0 - 2.0 * mass - 2.0 * k).collect();
        let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let precision = if gamma > 0.0 {
            let resid = |a: f64| a - p.iter().map(|pk| 1.0 / (pk + 4.0 * gamma * a)).sum::<f64>();
            let mut lo = (-p_min / (4.0 * gamma)).max(0.0);
            let mut hi = lo.max(1.0);
            while resid(hi) < 0.0 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if resid(mid) < 0.0 { lo = mid } else { hi = mid }
            }
            let a = hi;
            Some(p.iter().map(|pk| pk + 4.0 * gamma * a).collect::<Vec<_>>())
        } else if p_min > 0.0 {
            Some(p)
        } else {
            None
        };
        match precision {
            Some(prec) if prec.iter().all(|v| *v > 0.0 && v.is_finite()) => {
                let scale = DVector::from_iterator(prec.len(), prec.iter().map(|v| v.powf(-0.5)));
                let factor = &eig.eigenvectors * DMatrix::from_diagonal(&scale);
                let half_log_det = 0.5 * prec.iter().map(|v| v.ln()).sum::<f64>();
                let top = prec.iter().copied().fold(0.0, f64::max);
                let log_inv_q_max = 0.5 * prec.len() as f64 * top.ln() - half_log_det;
                Proposal { factor: Some(factor), half_log_det, log_inv_q_max }
            }
            _ => Proposal { factor: None, half_log_det: 0.0, log_inv_q_max: 0.0 },
        }
    }

    /// Maps a uniform frame to proposal directions; returns the directions and
    /// `-ln q(u)` relative to the uniform measure for each column.
    fn transform(&self, frame: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
        let n = frame.nrows();
        match &self.factor {
            None => (frame, vec![0.0; n]),
            Some(l) => {
                let mut x = l * frame;
                let mut log_inv_q = Vec::with_capacity(n);
                for mut col in x.column_iter_mut() {
                    let norm = col.norm();
                    col /= norm;
                    // q(u) = det(Sigma)^{-1/2} |L e|^N with det(Sigma)^{-1/2} = prod sqrt(prec)
                    log_inv_q.push(-(self.half_log_det + n as f64 * norm.ln()));
                }
                (x, log_inv_q)
            }
        }
    }
}

fn frame_count(directions: usize, per_frame: usize) -> usize {
    let f = directions.div_ceil(per_frame).max(2);
    f + f % 2
}

fn single_block<R: Rng>(
    w: &LogWeight,
    sym: &DMatrix<f64>,
    kappa_max: f64,
    proposal: &Proposal,
    opts: &RadialOptions,
    rng: &mut R,
    acc: &mut Accumulator,
) -> Result<f64> {
    let n = w.n();
    let gamma = w.quartic[(0, 0)];
    let b_norm = w.field.norm();
    let env = envelope(n, kappa_max + w.mass - 0.5, b_norm, gamma, opts.tail_drop)?;
    let grid = radial_grid(n, opts.radial_points, env.cutoff, w.mass);
    let shift = grid
        .r
        .iter()
        .zip(&grid.base)
        .map(|(&r, &b)| b + kappa_max * r * r + b_norm * r - gamma * r.powi(4))
        .fold(f64::NEG_INFINITY, f64::max)
        + proposal.log_inv_q_max;
    let quart: Vec<f64> = grid.r.iter().zip(&grid.base).map(|(&r, &b)| b - gamma * r.powi(4) - shift).collect();
    let per_frame = 2 * n;
    let frames = frame_count(opts.directions, per_frame);
    let max_power = opts.radial_powers;
    let mut u = vec![0.0; n];
    for _ in 0..frames {
        let (q, log_inv_q) = proposal.transform(haar_frame(n, rng));
        let kq = sym * &q;
        let mut frame_sum = 0.0;
        for col in 0..n {
            let a = q.column(col).dot(&kq.column(col));
            let bq = w.field.dot(&q.column(col));
            let liq = log_inv_q[col];
            for sign in [1.0, -1.0] {
                let bb = sign * bq;
                let (mut y, mut m1, mut m2) = (0.0, 0.0, 0.0);
                let mut powers = vec![0.0; max_power + 1];
                for (j, &r) in grid.r.iter().enumerate() {
                    let e = (quart[j] + a * r * r + bb * r + liq).exp();
                    y += e;
                    m1 += e * r;
                    m2 += e * r * r;
                    if max_power > 0 {
                        let mut rp = 1.0;
                        for p in powers.iter_mut() {
                            *p += e * rp;
                            rp *= r;
                        }
                    }
                }
                if !y.is_finite() {
                    return Err(Error::Numeric("non-finite radial sum".into()));
                }
                frame_sum += y;
                if opts.moments || max_power > 0 {
                    for i in 0..n {
                        u[i] = sign * q[(i, col)];
                    }
                }
                if opts.moments {
                    for i in 0..n {
                        acc.mean[i] += m1 * u[i];
                        for k in i..n {
                            acc.second[i * n + k] += m2 * u[i] * u[k];
                        }
                    }
                }
                if max_power > 0 && y > 0.0 {
                    let radial = powers.iter().map(|p| p / y).collect();
                    acc.kept.push(DirectionSummary { weight: y, u: u.clone(), radial });
                }
            }
        }
        acc.total += frame_sum;
        acc.frame_means.push(frame_sum / per_frame as f64);
    }
    Ok(shift)
}

fn two_blocks<R: Rng>(
    w: &LogWeight,
    sym: &DMatrix<f64>,
    kappa_max: f64,
    opts: &RadialOptions,
    rng: &mut R,
    acc: &mut Accumulator,
) -> Result<f64> {
    let n = w.n();
    let (n1, n2) = (w.blocks[0], w.blocks[1]);
    let ranges = w.block_ranges();
    let floor = w.quartic_floor();
    let points = (opts.radial_points / 8).max(32);
    let b1 = w.field.rows(0, n1).norm();
    let b2 = w.field.rows(n1, n2).norm();
    let g1 = envelope(n1, kappa_max + w.mass - 0.5, b1, floor, opts.tail_drop)?;
    let g2 = envelope(n2, kappa_max + w.mass - 0.5, b2, floor, opts.tail_drop)?;
    let grid1 = radial_grid(n1, points, g1.cutoff, w.mass);
    let grid2 = radial_grid(n2, points, g2.cutoff, w.mass);
    let (q11, q12, q22) = (w.quartic[(0, 0)], w.quartic[(0, 1)] + w.quartic[(1, 0)], w.quartic[(1, 1)]);
    let mut shift = f64::NEG_INFINITY;
    for (i, &r1) in grid1.r.iter().enumerate() {
        for (j, &r2) in grid2.r.iter().enumerate() {
            let v = grid1.base[i] + grid2.base[j] + kappa_max * (r1 * r1 + r2 * r2) + b1 * r1 + b2 * r2
                - q11 * r1.powi(4)
                - q12 * r1 * r1 * r2 * r2
                - q22 * r2.powi(4);
            shift = shift.max(v);
        }
    }
    let lcm = n1 / gcd(n1, n2) * n2;
    let per_frame = 4 * lcm;
    let frames = frame_count(opts.directions, per_frame);
    let mut u = vec![0.0; n];
    let mut row1 = vec![0.0; grid1.r.len()];
    let mut row2 = vec![0.0; grid2.r.len()];
    for _ in 0..frames {
        let qa = haar_frame(n1, rng);
        let qb = haar_frame(n2, rng);
        let mut frame_sum = 0.0;
        for pair in 0..lcm {
            let ua = qa.column(pair % n1).into_owned();
            let ub = qb.column(pair % n2).into_owned();
            let k_a = sym.view((0, 0), (n1, n1));
            let k_ab = sym.view((0, n1), (n1, n2));
            let k_b = sym.view((n1, n1), (n2, n2));
            let a11 = ua.dot(&(k_a * &ua));
            let a12 = ua.dot(&(k_ab * &ub));
            let a22 = ub.dot(&(k_b * &ub));
            let f1 = w.field.rows(0, n1).dot(&ua);
            let f2 = w.field.rows(n1, n2).dot(&ub);
            for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                for (i, &r1) in grid1.r.iter().enumerate() {
                    row1[i] = grid1.base[i] + a11 * r1 * r1 + s1 * f1 * r1 - q11 * r1.powi(4);
                }
                for (j, &r2) in grid2.r.iter().enumerate() {
                    row2[j] = grid2.base[j] + a22 * r2 * r2 + s2 * f2 * r2 - q22 * r2.powi(4) - shift;
                }
                let cross = 2.0 * s1 * s2 * a12;
                let (mut y, mut e1, mut e2, mut e11, mut e12, mut e22) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for (i, &r1) in grid1.r.iter().enumerate() {
                    let (mut s, mut sr2, mut sr22) = (0.0, 0.0, 0.0);
                    for (j, &r2) in grid2.r.iter().enumerate() {
                        let e = (row1[i] + row2[j] + r1 * r2 * (cross - q12 * r1 * r2)).exp();
                        s += e;
                        sr2 += e * r2;
                        sr22 += e * r2 * r2;
                    }
                    y += s;
                    e1 += s * r1;
                    e11 += s * r1 * r1;
                    e2 += sr2;
                    e12 += sr2 * r1;
                    e22 += sr22;
                }
                if !y.is_finite() {
                    return Err(Error::Numeric("non-finite radial sum".into()));
                }
                frame_sum += y;
                if opts.moments {
                    for i in 0..n1 {
                        u[i] = s1 * ua[i];
                    }
                    for j in 0..n2 {
                        u[n1 + j] = s2 * ub[j];
                    }
                    for i in 0..n {
                        let in_a = ranges[0].contains(&i);
                        acc.mean[i] += if in_a { e1 } else { e2 } * u[i];
                        for k in i..n {
                            let m = match (in_a, ranges[0].contains(&k)) {
                                (true, true) => e11,
                                (false, false) => e22,
                                _ => e12,
                            };
                            acc.second[i * n + k] += m * u[i] * u[k];
                        }
                    }
                }
            }
        }
        acc.total += frame_sum;
        acc.frame_means.push(frame_sum / per_frame as f64);
    }
    Ok(shift)
}

fn finish(acc: Accumulator, shift: f64, n: usize) -> Result<RadialEstimate> {
    let f = acc.frame_means.len();
    let nf = f as f64;
    let mean = acc.frame_means.iter().sum::<f64>() / nf;
    if !(mean > 0.0) {
        return Err(Error::Numeric(format!("radial estimator mean is {mean}; shift {shift}")));
    }
    let var = acc.frame_means.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let half = f / 2;
    let mean_a = acc.frame_means[..half].iter().sum::<f64>() / half as f64;
    let mean_b = acc.frame_means[half..].iter().sum::<f64>() / (f - half) as f64;
    let rel_var = var / (nf * mean * mean);
    let moments = if acc.mean.is_empty() {
        None
    } else {
        let t = acc.total;
        let m = DVector::from_iterator(n, acc.mean.iter().map(|v| v / t));
        let s = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            acc.second[a * n + b] / t
        });
        Some(ReplicaMoments { mean: m, second: s })
    };
    let total = acc.total;
    let directions = acc
        .kept
        .into_iter()
        .map(|mut d| {
            d.weight /= total;
            d
        })
        .collect();
    Ok(RadialEstimate {
        log_z: shift + mean.ln() + 0.5 * rel_var,
        log_z_se: rel_var.sqrt(),
        log_mean: shift + mean.ln(),
        log_split_product: 2.0 * shift + (mean_a * mean_b).ln(),
        frames: f,
        moments,
        directions,
    })
}

/// `<q_12^k>`, `k = 1..=max_power`, from two independent direction streams
/// of the same single-block measure.
pub fn overlap_powers(a: &RadialEstimate, b: &RadialEstimate, max_power: usize) -> Vec<f64> {
    let n = a.directions.first().map_or(1, |d| d.u.len()) as f64;
    let mut out = vec![0.0; max_power];
    for da in &a.directions {
        for db in &b.directions {
            let dot: f64 = da.u.iter().zip(&db.u).map(|(x, y)| x * y).sum();
            let w = da.weight * db.weight;
            let mut dk = 1.0;
            for (k, slot) in out.iter_mut().enumerate() {
                dk *= dot;
                *slot += w * da.radial[k + 1] * db.radial[k + 1] * dk;
            }
        }
    }
    for (k, slot) in out.iter_mut().enumerate() {
        *slot /= n.powi(k as i32 + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{spectral, tensor};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        (&a + a.transpose()) * scale
    }

    #[test]
    fn free_measure_is_exact() {
        for n in [1, 3, 8] {
            let w = LogWeight::single_block(DMatrix::zeros(n, n), DVector::zeros(n), 0.25, 0.0);
            let mut opts = RadialOptions::new(16, 512, 3);
            opts.moments = true;
            let est = estimate(&w, &opts).unwrap();
            assert_relative_eq!(est.log_z, -(n as f64) / 2.0 * 0.5f64.ln(), max_relative = 1e-12);
            assert!(est.log_z_se < 1e-12);
            let m = est.moments.unwrap();
            assert!(m.mean.amax() < 1e-12);
            assert_relative_eq!(m.second, DMatrix::identity(n, n) * 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn agrees_with_quadrature_within_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=3 {
            let k = random_sym(n, 0.5, &mut rng);
            let w = LogWeight::single_block(k, DVector::zeros(n), 0.0, 0.1);
            let exact = spectral::log_partition(&w, &Default::default()).unwrap();
            let est = estimate(&w, &RadialOptions::new(600, 512, 21)).unwrap();
            assert!((est.log_z - exact).abs() < 4.0 * est.log_z_se + 1e-10, "{} vs {exact}", est.log_z);
        }
    }

    #[test]
    fn two_block_moments_match_tensor_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = LogWeight {
            coupling: random_sym(3, 0.4, &mut rng),
            field: DVector::from_vec(vec![0.3, 0.0, -0.1]),
            mass: 0.0,
            blocks: vec![1, 2],
            quartic: DMatrix::from_row_slice(2, 2, &[0.15, 0.05, 0.05, 0.1]),
        };
        let t = tensor::integrate(&w, &tensor::TensorOptions::default(), 0).unwrap();
        let mut opts = RadialOptions::new(4000, 512, 4);
        opts.moments = true;
        let est = estimate(&w, &opts).unwrap();
        assert!((est.log_z - t.log_z).abs() < 4.0 * est.log_z_se + 1e-9);
        let m = est.moments.unwrap();
        assert!((m.second.clone() - t.moments.second.clone()).amax() < 0.05);
        assert!((m.mean.clone() - t.moments.mean.clone()).amax() < 0.05);
    }

    #[test]
    fn overlap_powers_of_free_measure() {
        let n = 4;
        let w = LogWeight::single_block(DMatrix::zeros(n, n), DVector::zeros(n), 0.0, 0.0);
        let mut a = RadialOptions::new(8, 256, 1);
        a.radial_powers = 2;
        let mut b = a;
        b.seed = 2;
        let ea = estimate(&w, &a).unwrap();
        let eb = estimate(&w, &b).unwrap();
        let p = overlap_powers(&ea, &eb, 2);
        assert!(p[0].abs() < 1e-12);
        assert_relative_eq!(p[1], 1.0 / n as f64, max_relative = 1e-10);
    }
}

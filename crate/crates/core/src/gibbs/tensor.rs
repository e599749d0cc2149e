//! Tensor-product Gauss–Legendre quadrature in the eigenbasis of `K`.
//!
//! Works for any weight with `N <= 3` (fields, two blocks) and returns the
//! Gibbs moments alongside `log Z`. Each axis gets a composite rule whose
//! panel width follows the local curvature of a separable upper envelope.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{envelope, monomials, LogWeight, ReplicaMoments};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct TensorOptions {
    pub nodes_per_panel: usize,
    /// Panel width in units of the estimated local standard deviation.
    pub panel_width: f64,
    pub tail_drop: f64,
    pub max_panels: usize,
}

impl Default for TensorOptions {
    fn default() -> Self {
        TensorOptions { nodes_per_panel: 10, panel_width: 1.0, tail_drop: 42.0, max_panels: 160 }
    }
}

#[derive(Debug, Clone)]
pub struct TensorResult {
    pub log_z: f64,
    pub moments: ReplicaMoments,
    /// `omega(z^alpha)` for every multiset `alpha` of each degree `1..=max_degree`,
    /// with the multinomial multiplicity of `alpha`.
    pub monomials: Vec<Vec<(Vec<usize>, f64, f64)>>,
}

impl TensorResult {
    /// `<q_12^k>` for two independent replicas of this measure, `k = 1..=max_degree`.
    pub fn overlap_powers(&self) -> Vec<f64> {
        let n = self.moments.mean.len() as f64;
        self.monomials
            .iter()
            .enumerate()
            .map(|(i, level)| {
                let k = (i + 1) as i32;
                level.iter().map(|(_, mult, m)| mult * m * m).sum::<f64>() / n.powi(k)
            })
            .collect()
    }
}

struct Axis {
    y: Vec<f64>,
    /// Separable log-contribution, including the log quadrature weight.
    sep: Vec<f64>,
}

pub fn integrate(w: &LogWeight, opts: &TensorOptions, max_degree: usize) -> Result<TensorResult> {
    w.validate()?;
    let n = w.n();
    if n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("tensor quadrature supports N <= {MAX_DIM}, got {n}")));
    }
    let sym = (&w.coupling + w.coupling.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let rot: DMatrix<f64> = eig.eigenvectors.clone();
    let kappa: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let b_rot: DVector<f64> = rot.transpose() * &w.field;
    let gamma = w.quartic_floor();

    // Curvature of the quartic at the dominant mode, used to narrow
    // transverse panel widths.
    let mut mode_sq = 0.0;
    let mut axes_env = Vec::with_capacity(n);
    for k in 0..n {
        let c = kappa[k] + w.mass - 0.5;
        let env = envelope(1, c, b_rot[k].abs(), gamma, opts.tail_drop)?;
        mode_sq = f64::max(mode_sq, env.peak_r * env.peak_r);
        axes_env.push((c, env));
    }

    let rule = GaussLegendre::get(opts.nodes_per_panel);
    let mut axes = Vec::with_capacity(n);
    let mut bound = 0.0;
    for (k, (c, env)) in axes_env.iter().enumerate() {
        let y0 = env.peak_r;
        let curv_axis = -(2.0 * c - 12.0 * gamma * y0 * y0);
        let curv_mode = -2.0 * c + 4.0 * gamma * mode_sq;
        let curv = curv_axis.max(curv_mode);
        let sd = if curv > 0.0 { curv.powf(-0.5) } else { gamma.max(1e-300).powf(-0.25) };
        let l = env.cutoff;
        let panels = ((2.0 * l / (opts.panel_width * sd)).ceil() as usize).clamp(4, opts.max_panels);
        let (y, wts) = rule.composite(-l, l, panels);
        let sep = y
            .iter()
            .zip(&wts)
            .map(|(&y, &wt)| c * y * y + b_rot[k] * y + wt.ln())
            .collect();
        bound += env.peak_value + wts.iter().map(|w| w.ln()).fold(f64::NEG_INFINITY, f64::max);
        axes.push(Axis { y, sep });
    }
    // Upper bound of the log-integrand: the full quartic dominates the sum
    // of per-axis quartics.
    let shift = bound;

    let monos: Vec<Vec<(Vec<usize>, f64)>> = (1..=max_degree).map(|d| monomials(n, d)).collect();
    let mut mono_acc: Vec<Vec<f64>> = monos.iter().map(|l| vec![0.0; l.len()]).collect();
    let mut total = 0.0;
    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    let ranges = w.block_ranges();
    let mut idx = vec![0usize; n];
    let mut z = vec![0.0; n];
    let mut yv = vec![0.0; n];
    let mut block_sq = vec![0.0; ranges.len()];
    'outer: loop {
        let mut sep = 0.0;
        for k in 0..n {
            yv[k] = axes[k].y[idx[k]];
            sep += axes[k].sep[idx[k]];
        }
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += rot[(i, k)] * yv[k];
            }
            z[i] = acc;
        }
        for (bi, r) in ranges.iter().enumerate() {
            block_sq[bi] = z[r.clone()].iter().map(|v| v * v).sum();
        }
        let v = (sep - w.quartic_of(&block_sq) - shift).exp();
        if v > 0.0 {
            total += v;
            for i in 0..n {
                mean[i] += v * z[i];
                for j in i..n {
                    second[i * n + j] += v * z[i] * z[j];
                }
            }
            for (level, acc) in monos.iter().zip(mono_acc.iter_mut()) {
                for ((alpha, _), slot) in level.iter().zip(acc.iter_mut()) {
                    *slot += v * alpha.iter().map(|&i| z[i]).product::<f64>();
                }
            }
        }
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].y.len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numeric(format!("tensor quadrature sum is {total}")));
    }
    let log_z = shift + total.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let mean = DVector::from_iterator(n, mean.iter().map(|m| m / total));
    let second = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        second[a * n + b] / total
    });
    let monomials = monos
        .into_iter()
        .zip(mono_acc)
        .map(|(level, acc)| {
            level
                .into_iter()
                .zip(acc)
                .map(|((alpha, mult), s)| (alpha, mult, s / total))
                .collect()
        })
        .collect();
    Ok(TensorResult { log_z, moments: ReplicaMoments { mean, second }, monomials })
}

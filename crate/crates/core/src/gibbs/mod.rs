//! Integration engine for soft-spin Gibbs weights.
//!
//! A [`LogWeight`] describes the log-density of a Boltzmann factor relative to
//! the standard Gaussian base measure on `R^N`:
//!
//! ```text
//! z.K z + b.z + mass |z|^2 - sum_{B,B'} G[B,B'] |z_B|^2 |z_B'|^2
//! ```
//!
//! where the sites are split into at most two contiguous blocks `B`. Every
//! partition function in the crate (original model, diagonal-removed model,
//! both interpolations) has this shape. Three evaluators are provided:
//!
//! * [`spectral`]: rotation to the eigenbasis of `K` plus radial/angular
//!   adaptive quadrature; `N <= 3`, no field, one block. Returns `log Z` only.
//! * [`tensor`]: tensor-product composite Gauss–Legendre grid in the eigenbasis;
//!   `N <= 3`, any weight. Returns `log Z` and the first two moments.
//! * [`radial`]: stratified radial-spherical Monte Carlo for any `N`.

pub mod radial;
pub mod spectral;
pub mod tensor;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogWeight {
    /// Symmetric quadratic-form matrix `K`.
    pub coupling: DMatrix<f64>,
    /// Linear field `b`.
    pub field: DVector<f64>,
    /// Coefficient of `|z|^2`.
    pub mass: f64,
    /// Sizes of the contiguous site blocks (one or two entries).
    pub blocks: Vec<usize>,
    /// Symmetric, entrywise nonnegative quartic matrix over blocks.
    pub quartic: DMatrix<f64>,
}

impl LogWeight {
    pub fn single_block(coupling: DMatrix<f64>, field: DVector<f64>, mass: f64, quartic: f64) -> Self {
        let n = coupling.nrows();
        LogWeight {
            coupling,
            field,
            mass,
            blocks: vec![n],
            quartic: DMatrix::from_element(1, 1, quartic),
        }
    }

    pub fn n(&self) -> usize {
        self.coupling.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.coupling.ncols() != n {
            return Err(Error::InvalidArgument("coupling matrix must be square and nonempty".into()));
        }
        crate::error::check_dim(n, self.field.len())?;
        if self.blocks.is_empty() || self.blocks.len() > 2 || self.blocks.iter().sum::<usize>() != n {
            return Err(Error::InvalidArgument(format!(
                "blocks {:?} must be one or two positive sizes summing to {n}",
                self.blocks
            )));
        }
        if self.blocks.contains(&0) {
            return Err(Error::InvalidArgument("empty block".into()));
        }
        let nb = self.blocks.len();
        if self.quartic.nrows() != nb || self.quartic.ncols() != nb {
            return Err(Error::InvalidArgument("quartic matrix must be blocks x blocks".into()));
        }
        if self.quartic.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidArgument("quartic coefficients must be nonnegative".into()));
        }
        if self.coupling.iter().chain(self.field.iter()).any(|v| !v.is_finite()) || !self.mass.is_finite() {
            return Err(Error::InvalidArgument("non-finite weight coefficients".into()));
        }
        Ok(())
    }

    pub fn has_field(&self) -> bool {
        self.field.iter().any(|b| *b != 0.0)
    }

    /// Half-open site ranges of the blocks.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|&len| {
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }

    /// Quartic term given the squared block radii.
    pub(crate) fn quartic_of(&self, block_sq: &[f64]) -> f64 {
        let nb = self.blocks.len();
        let mut acc = 0.0;
        for a in 0..nb {
            for b in 0..nb {
                acc += self.quartic[(a, b)] * block_sq[a] * block_sq[b];
            }
        }
        acc
    }

    /// Largest `g` with `quartic >= g |z|^4` for every `z`: the minimum of
    /// `p.G p` over the probability simplex.
    pub fn quartic_floor(&self) -> f64 {
        match self.blocks.len() {
            1 => self.quartic[(0, 0)],
            _ => {
                let (a, b, c) = (self.quartic[(0, 0)], self.quartic[(0, 1)], self.quartic[(1, 1)]);
                // p = (s, 1 - s): a s^2 + 2 b s (1 - s) + c (1 - s)^2
                let f = |s: f64| a * s * s + 2.0 * b * s * (1.0 - s) + c * (1.0 - s) * (1.0 - s);
                let curv = a - 2.0 * b + c;
                let mut best = f(0.0).min(f(1.0));
                if curv > 0.0 {
                    let s = (c - b) / curv;
                    if (0.0..=1.0).contains(&s) {
                        best = best.min(f(s));
                    }
                }
                best.max(0.0)
            }
        }
    }

    /// `z.K z + b.z + mass |z|^2 - quartic`, without the Gaussian base measure.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        let n = self.n();
        let mut quad = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| self.coupling[(i, j)] * z[j]).sum();
            quad += z[i] * row;
        }
        let lin: f64 = self.field.iter().zip(z).map(|(b, z)| b * z).sum();
        let sq: Vec<f64> = self
            .block_ranges()
            .into_iter()
            .map(|r| z[r].iter().map(|v| v * v).sum())
            .collect();
        let total: f64 = sq.iter().sum();
        quad + lin + self.mass * total - self.quartic_of(&sq)
    }
}

/// First and second moments of a single replica, `omega(z)` and `omega(z z^T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaMoments {
    pub mean: DVector<f64>,
    pub second: DMatrix<f64>,
}

impl ReplicaMoments {
    /// `<q_12>` over a site range, with replica 1 described by `self` and
    /// replica 2 by `other` (independent copies under the same disorder).
    pub fn overlap_mean(&self, other: &ReplicaMoments, sites: std::ops::Range<usize>) -> f64 {
        let len = sites.len() as f64;
        sites.map(|i| self.mean[i] * other.mean[i]).sum::<f64>() / len
    }

    /// `<q_12^2>` over a site range: `sum_ij omega(z_i z_j) omega'(z_i z_j) / len^2`.
    pub fn overlap_square(&self, other: &ReplicaMoments, sites: std::ops::Range<usize>) -> f64 {
        let len = sites.len() as f64;
        let mut acc = 0.0;
        for i in sites.clone() {
            for j in sites.clone() {
                acc += self.second[(i, j)] * other.second[(i, j)];
            }
        }
        acc / (len * len)
    }
}

/// Largest stationary point and tail cut of the one-dimensional log-envelope
/// `g(r) = (d - 1) ln r + c r^2 + b r - gamma r^4` on `r >= 0` (`b >= 0`).
///
/// `r g'(r)` is a quartic polynomial with exactly one sign change in its
/// coefficients, so `g` is unimodal and bisection on `g'` is safe.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Envelope {
    pub peak_r: f64,
    pub peak_value: f64,
    pub cutoff: f64,
}

pub(crate) fn envelope(dim: usize, c: f64, b: f64, gamma: f64, drop: f64) -> Result<Envelope> {
    let d1 = dim as f64 - 1.0;
    if gamma <= 0.0 && c >= 0.0 {
        return Err(Error::Numeric(format!(
            "Gibbs weight is not integrable: radial coefficient {c} >= 0 without quartic confinement"
        )));
    }
    let g = |r: f64| {
        let lead = if d1 > 0.0 { d1 * r.ln() } else { 0.0 };
        lead + c * r * r + b * r - gamma * r * r * r * r
    };
    // p(r) = r g'(r) = d1 + b r + 2 c r^2 - 4 gamma r^4
    let p = |r: f64| d1 + b * r + 2.0 * c * r * r - 4.0 * gamma * r.powi(4);
    let peak_r = if d1 == 0.0 && b == 0.0 && c <= 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while p(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e150 {
                return Err(Error::Numeric("envelope peak search diverged".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let peak_value = if peak_r == 0.0 { 0.0 } else { g(peak_r) };
    let target = peak_value - drop;
    let mut hi = peak_r.max(1.0) * 2.0;
    while g(hi) > target {
        hi *= 1.5;
        if hi > 1e150 {
            return Err(Error::Numeric("envelope tail search diverged".into()));
        }
    }
    let mut lo = peak_r;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(Envelope { peak_r, peak_value, cutoff: hi })
}

/// Enumerates multisets of size `degree` drawn from `0..n` as nondecreasing
/// index tuples, with their multinomial multiplicities.
pub(crate) fn monomials(n: usize, degree: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(n: usize, degree: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == degree {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, degree, i, cur, out);
            cur.pop();
        }
    }
    let mut tuples = Vec::new();
    rec(n, degree, 0, &mut Vec::new(), &mut tuples);
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    tuples
        .into_iter()
        .map(|t| {
            let mut mult = fact(degree);
            let mut i = 0;
            while i < t.len() {
                let mut j = i;
                while j < t.len() && t[j] == t[i] {
                    j += 1;
                }
                mult /= fact(j - i);
                i = j;
            }
            (t, mult)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn envelope_is_unimodal_and_cut() {
        let env = envelope(3, 0.2, 0.5, 0.1, 40.0).unwrap();
        assert!(env.peak_r > 0.0 && env.cutoff > env.peak_r);
        let g = |r: f64| 2.0 * r.ln() + 0.2 * r * r + 0.5 * r - 0.1 * r.powi(4);
        assert_relative_eq!(g(env.peak_r), env.peak_value, epsilon = 1e-12);
        assert!(g(env.cutoff) <= env.peak_value - 40.0 + 1e-9);
        assert!(g(env.peak_r * 1.01) < env.peak_value);
        assert!(envelope(2, 0.1, 0.0, 0.0, 40.0).is_err());
    }

    #[test]
    fn monomial_multiplicities_sum_to_power() {
        for n in 1..=3 {
            for d in 1..=4 {
                let total: f64 = monomials(n, d).iter().map(|(_, m)| m).sum();
                assert_relative_eq!(total, (n as f64).powi(d as i32));
            }
        }
    }

    #[test]
    fn quartic_floor_two_blocks() {
        let w = LogWeight {
            coupling: DMatrix::zeros(2, 2),
            field: DVector::zeros(2),
            mass: 0.0,
            blocks: vec![1, 1],
            quartic: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        };
        // min of s^2 + (1-s)^2 is 1/2
        assert_relative_eq!(w.quartic_floor(), 0.5, epsilon = 1e-15);
    }
}

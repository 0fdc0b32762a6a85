//! Maximum-likelihood estimation of `(Σ, L)`.
//!
//! `Σ̂` is the sample mean. `L̂` is the root of the score
//! `g(L) = p log L + mean(log|Z_k|) − log|Σ̂| − ψ_p⁽⁰⁾(L)`, solved by
//! Newton-Raphson safeguarded with bisection on a bracket established first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{multivariate_polygamma, HermitianMatrix};
use crate::model::{MatrixSample, WishartParams};

/// Residual tolerance on the score.
pub const SCORE_TOLERANCE: f64 = 1e-10;
/// Step tolerance (relative to the iterate).
pub const STEP_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100;
/// Upper end of the admissible search range for `L̂`.
pub const MAX_LOOKS: f64 = 1e6;

/// How the number of looks enters an estimate or a test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LooksMode {
    /// `L` is known and held fixed.
    Known(f64),
    /// `L` is estimated by maximum likelihood.
    Estimated,
}

impl LooksMode {
    pub fn is_known(&self) -> bool {
        matches!(self, LooksMode::Known(_))
    }
}

/// ML estimate of a sample's parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MLEstimate {
    pub params: WishartParams,
    pub sample_size: usize,
    /// `N⁻¹ Σ log|Z_k|`; only computed when `L` is estimated.
    pub mean_logdet: Option<f64>,
}

/// Entrywise mean of the observations.
pub fn estimate_sigma(sample: &MatrixSample) -> Result<HermitianMatrix> {
    let obs = sample.observations();
    if obs.is_empty() {
        return Err(Error::EmptySample);
    }
    let w = 1.0 / obs.len() as f64;
    let mut acc = HermitianMatrix::zeros(sample.dim());
    for z in obs {
        acc.add_scaled_assign(z, w)?;
    }
    Ok(acc)
}

/// `N⁻¹ Σ log|Z_k|`.
pub fn mean_logdet(sample: &MatrixSample) -> Result<f64> {
    let obs = sample.observations();
    if obs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut acc = 0.0;
    for z in obs {
        acc += z.logdet()?;
    }
    Ok(acc / obs.len() as f64)
}

/// The score `g(L)` given `log_ratio = mean(log|Z_k|) − log|Σ̂|`.
pub fn score(dim: usize, looks: f64, log_ratio: f64) -> Result<f64> {
    Ok(dim as f64 * looks.ln() + log_ratio - multivariate_polygamma(0, dim, looks)?)
}

/// `g′(L) = p / L − ψ_p⁽¹⁾(L)`.
pub fn score_derivative(dim: usize, looks: f64) -> Result<f64> {
    Ok(dim as f64 / looks - multivariate_polygamma(1, dim, looks)?)
}

/// Solves the score equation for `L̂` starting from `init`.
pub fn estimate_looks(sample: &MatrixSample, sigma_hat: &HermitianMatrix, init: f64) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::domain("estimating the number of looks needs at least two observations"));
    }
    let log_ratio = mean_logdet(sample)? - sigma_hat.logdet()?;
    solve_looks(sample.dim(), log_ratio, init)
}

/// Root of `g(L) = 0` for a given log-ratio.
///
/// `g` decreases from `+∞` at `L = p − 1` towards `log_ratio` as `L → ∞`, so a
/// finite root exists iff `log_ratio < 0`; a sample of identical matrices has
/// `log_ratio = 0` and is reported as [`Error::NoConvergence`].
pub fn solve_looks(dim: usize, log_ratio: f64, init: f64) -> Result<f64> {
    let floor = (dim - 1) as f64;
    if !log_ratio.is_finite() {
        return Err(Error::domain("non-finite log-determinant ratio"));
    }
    let g = |l: f64| score(dim, l, log_ratio);

    let mut lo = floor + 0.01;
    while g(lo)? <= 0.0 {
        let next = floor + (lo - floor) * 1e-3;
        if next - floor < 1e-12 {
            return Err(Error::domain("score has no root above p - 1"));
        }
        lo = next;
    }
    let mut hi = 100.0f64.max(lo * 2.0);
    while g(hi)? > 0.0 {
        if hi >= MAX_LOOKS {
            return Err(Error::NoConvergence {
                iterations: MAX_ITERATIONS,
            });
        }
        hi = (hi * 10.0).min(MAX_LOOKS);
    }

    let mut l = if init > lo && init < hi { init } else { 0.5 * (lo + hi) };
    for _ in 0..MAX_ITERATIONS {
        let gl = g(l)?;
        if gl.abs() < SCORE_TOLERANCE {
            return Ok(l);
        }
        if gl > 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let newton = l - gl / score_derivative(dim, l)?;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - l).abs() < STEP_TOLERANCE * l.max(1.0) {
            return Ok(next);
        }
        l = next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Default Newton start when no nominal looks are known.
pub fn default_init(dim: usize) -> f64 {
    dim as f64 + 1.0
}

/// Joint ML estimate. In known-looks mode `Σ̂` is returned with `L` unchanged.
pub fn estimate(sample: &MatrixSample, mode: LooksMode) -> Result<MLEstimate> {
    let sigma = estimate_sigma(sample)?;
    match mode {
        LooksMode::Known(looks) => Ok(MLEstimate {
            params: WishartParams::new(sigma, looks)?,
            sample_size: sample.len(),
            mean_logdet: None,
        }),
        LooksMode::Estimated => {
            if sample.len() < 2 {
                return Err(Error::domain("estimating the number of looks needs at least two observations"));
            }
            let mld = mean_logdet(sample)?;
            let looks = solve_looks(sample.dim(), mld - sigma.logdet()?, default_init(sample.dim()))?;
            Ok(MLEstimate {
                params: WishartParams::new(sigma, looks)?,
                sample_size: sample.len(),
                mean_logdet: Some(mld),
            })
        }
    }
}

/// Like [`estimate`] with an explicit Newton start for `L̂`.
pub fn estimate_with_init(sample: &MatrixSample, init_looks: f64) -> Result<MLEstimate> {
    let sigma = estimate_sigma(sample)?;
    let mld = mean_logdet(sample)?;
    let looks = estimate_looks(sample, &sigma, init_looks)?;
    Ok(MLEstimate {
        params: WishartParams::new(sigma, looks)?,
        sample_size: sample.len(),
        mean_logdet: Some(mld),
    })
}

/// Estimate under the null hypothesis that both samples share `(Σ, L)`.
pub fn pooled_estimate(a: &MatrixSample, b: &MatrixSample, mode: LooksMode) -> Result<MLEstimate> {
    estimate(&a.concat(b)?, mode)
}

/// Pools two existing estimates without revisiting the observations; equal to
/// [`pooled_estimate`] on the concatenated sample.
pub fn pool_estimates(a: &MLEstimate, b: &MLEstimate, mode: LooksMode) -> Result<MLEstimate> {
    let (n1, n2) = (a.sample_size as f64, b.sample_size as f64);
    let n = n1 + n2;
    let mut sigma = a.params.sigma().scale(n1 / n);
    sigma.add_scaled_assign(b.params.sigma(), n2 / n)?;
    match mode {
        LooksMode::Known(looks) => Ok(MLEstimate {
            params: WishartParams::new(sigma, looks)?,
            sample_size: a.sample_size + b.sample_size,
            mean_logdet: None,
        }),
        LooksMode::Estimated => {
            let (m1, m2) = match (a.mean_logdet, b.mean_logdet) {
                (Some(m1), Some(m2)) => (m1, m2),
                _ => return Err(Error::domain("pooling in estimated-looks mode needs cached log-determinants")),
            };
            let mld = (n1 * m1 + n2 * m2) / n;
            let init = 0.5 * (a.params.looks() + b.params.looks());
            let looks = solve_looks(sigma.dim(), mld - sigma.logdet()?, init)?;
            Ok(MLEstimate {
                params: WishartParams::new(sigma, looks)?,
                sample_size: a.sample_size + b.sample_size,
                mean_logdet: Some(mld),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample, RngSeed};
    use crate::presets::flevoland_b1;

    fn b1_sample(n: usize, seed: u64) -> MatrixSample {
        sample(&WishartParams::new(flevoland_b1(), 4.0).unwrap(), n, RngSeed(seed)).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let a = flevoland_b1();
        let s = MatrixSample::new(vec![a.clone(); 4]).unwrap();
        assert!(estimate_sigma(&s).unwrap().max_abs_diff(&a) < 1e-18);
        let s = MatrixSample::new(vec![
            HermitianMatrix::from_real_diagonal(&[1.0]),
            HermitianMatrix::from_real_diagonal(&[3.0]),
        ])
        .unwrap();
        assert_eq!(estimate_sigma(&s).unwrap(), HermitianMatrix::from_real_diagonal(&[2.0]));
        assert_eq!(MatrixSample::new(vec![]).unwrap_err(), Error::EmptySample);
    }

    #[test]
    fn sigma_is_consistent() {
        let b1 = flevoland_b1();
        let s = b1_sample(10_000, 21);
        let est = estimate_sigma(&s).unwrap();
        assert!(est.max_abs_diff(&b1) / b1.max_abs() < 0.05);
    }

    #[test]
    fn looks_recovered_from_synthetic_sample() {
        let s = b1_sample(5000, 22);
        let e = estimate(&s, LooksMode::Estimated).unwrap();
        let l = e.params.looks();
        assert!((3.8..=4.2).contains(&l), "L̂ = {l}");
        let ratio = e.mean_logdet.unwrap() - e.params.sigma().logdet().unwrap();
        let g = score(3, l, ratio).unwrap();
        assert!(g.abs() < 1e-9);
        assert!(score_derivative(3, l).unwrap() < 0.0);
        // The starting point does not change the root.
        let e2 = estimate_with_init(&s, 2.5).unwrap();
        let e3 = estimate_with_init(&s, 5e5).unwrap();
        assert!((e2.params.looks() - l).abs() < 1e-8);
        assert!((e3.params.looks() - l).abs() < 1e-8);
    }

    #[test]
    fn degenerate_and_boundary_samples() {
        let s = MatrixSample::new(vec![flevoland_b1(); 10]).unwrap();
        assert!(matches!(estimate(&s, LooksMode::Estimated), Err(Error::NoConvergence { .. })));

        let one = MatrixSample::new(vec![flevoland_b1()]).unwrap();
        assert!(estimate(&one, LooksMode::Estimated).is_err());
        let known = estimate(&one, LooksMode::Known(4.0)).unwrap();
        assert_eq!(known.params.sigma(), &flevoland_b1());
        assert_eq!(known.params.looks(), 4.0);
    }

    #[test]
    fn score_decreases_above_p() {
        for p in 1..=4 {
            let mut prev = f64::INFINITY;
            for k in 0..200 {
                let l = p as f64 + 0.05 + k as f64 * 0.5;
                let g = score(p, l, -0.3).unwrap();
                assert!(g < prev);
                assert!(score_derivative(p, l).unwrap() < 0.0);
                prev = g;
            }
        }
    }

    #[test]
    fn scaling_equivariance() {
        let s = b1_sample(2000, 23);
        let e = estimate(&s, LooksMode::Estimated).unwrap();
        let e10 = estimate(&s.scaled(10.0), LooksMode::Estimated).unwrap();
        assert!(e10.params.sigma().max_abs_diff(&e.params.sigma().scale(10.0)) < 1e-14);
        assert!((e10.params.looks() - e.params.looks()).abs() < 1e-8);
    }

    #[test]
    fn pooled_examples() {
        let a = flevoland_b1();
        let s = MatrixSample::new(vec![a.clone(); 3]).unwrap();
        let p = pooled_estimate(&s, &s, LooksMode::Known(4.0)).unwrap();
        assert!(p.params.sigma().max_abs_diff(&a) < 1e-16);

        let i = HermitianMatrix::identity(3);
        let s1 = MatrixSample::new(vec![i.clone(); 4]).unwrap();
        let s3 = MatrixSample::new(vec![i.scale(3.0); 4]).unwrap();
        let p = pooled_estimate(&s1, &s3, LooksMode::Known(4.0)).unwrap();
        assert!(p.params.sigma().max_abs_diff(&i.scale(2.0)) < 1e-15);

        let x = b1_sample(1500, 24);
        let y = b1_sample(1500, 25);
        let p = pooled_estimate(&x, &y, LooksMode::Estimated).unwrap();
        assert!((p.params.looks() - 4.0).abs() < 0.4);

        let ex = estimate(&x, LooksMode::Estimated).unwrap();
        let ey = estimate(&y, LooksMode::Estimated).unwrap();
        let q = pool_estimates(&ex, &ey, LooksMode::Estimated).unwrap();
        assert!(q.params.sigma().max_abs_diff(p.params.sigma()) < 1e-15);
        assert!((q.params.looks() - p.params.looks()).abs() < 1e-8);
    }

    #[test]
    fn concat_mean_is_weighted_mean() {
        let x = b1_sample(7, 26);
        let y = b1_sample(19, 27);
        let pooled = estimate_sigma(&x.concat(&y).unwrap()).unwrap();
        let mut weighted = estimate_sigma(&x).unwrap().scale(7.0 / 26.0);
        weighted.add_scaled_assign(&estimate_sigma(&y).unwrap(), 19.0 / 26.0).unwrap();
        assert!(pooled.max_abs_diff(&weighted) < 1e-17);
    }
}

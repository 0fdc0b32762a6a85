//! Closed-form information measures of the scaled complex Wishart law:
//! symmetrized Kullback-Leibler distance, Shannon and Rényi entropies and the
//! asymptotic variances of their plug-in estimators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{lngamma, multivariate_polygamma, HermitianMatrix};
use crate::model::WishartParams;

/// Rényi order used throughout unless overridden.
pub const DEFAULT_RENYI_ORDER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyKind {
    Shannon,
    Renyi(f64),
}

/// Kronecker convention for the quadratic form `vec(Σ⁻¹)* K vec(Σ⁻¹)` in the
/// entropy variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KronConvention {
    /// `K = Σᵀ ⊗ Σ`; the form equals `tr(Σ⁻¹ Σ Σ⁻¹ Σ) = p`.
    #[default]
    Transposed,
    /// `K = Σ ⊗ Σ` taken literally.
    Literal,
}

fn check_same_dim(a: &WishartParams, b: &WishartParams) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Symmetrized KL distance `½[D(θ₁‖θ₂) + D(θ₂‖θ₁)]`.
pub fn kl_distance(a: &WishartParams, b: &WishartParams) -> Result<f64> {
    check_same_dim(a, b)?;
    let p = a.dim();
    let pf = p as f64;
    let (l1, l2) = (a.looks(), b.looks());
    let c1 = a.sigma().cholesky()?;
    let c2 = b.sigma().cholesky()?;
    let shape_term = if l1 == l2 {
        0.0
    } else {
        (l1 - l2) / 2.0
            * (c1.logdet() - c2.logdet() - pf * (l1 / l2).ln() + multivariate_polygamma(0, p, l1)?
                - multivariate_polygamma(0, p, l2)?)
    };
    let traces = l2 * c2.inverse().trace_product(a.sigma())? + l1 * c1.inverse().trace_product(b.sigma())?;
    Ok(shape_term - pf * (l1 + l2) / 2.0 + traces / 2.0)
}

/// Shannon entropy `H_S(Σ, L)`.
pub fn shannon_entropy(params: &WishartParams) -> Result<f64> {
    let p = params.dim();
    let pf = p as f64;
    let l = params.looks();
    let mut lg = 0.0;
    for k in 0..p {
        lg += lngamma(l - k as f64)?;
    }
    Ok(pf * (pf - 1.0) / 2.0 * PI.ln() - pf * pf * l.ln() + pf * params.sigma().logdet()? + pf * l
        + (pf - l) * multivariate_polygamma(0, p, l)?
        + lg)
}

/// `q = L + (1 − β)(p − L)`.
pub fn renyi_shape(params: &WishartParams, order: f64) -> f64 {
    let l = params.looks();
    l + (1.0 - order) * (params.dim() as f64 - l)
}

fn check_renyi(params: &WishartParams, order: f64) -> Result<f64> {
    if !(order > 0.0) || order == 1.0 || !order.is_finite() {
        return Err(Error::domain(format!("Rényi order must be positive and different from 1 (got {order})")));
    }
    let q = renyi_shape(params, order);
    if !(q > (params.dim() - 1) as f64) {
        return Err(Error::domain(format!(
            "Rényi order {order} too far from 1 for L = {}, p = {} (q = {q})",
            params.looks(),
            params.dim()
        )));
    }
    Ok(q)
}

/// Rényi entropy of order `β`.
pub fn renyi_entropy(params: &WishartParams, order: f64) -> Result<f64> {
    let q = check_renyi(params, order)?;
    let p = params.dim();
    let pf = p as f64;
    let l = params.looks();
    let mut lg = 0.0;
    for i in 0..p {
        let fi = i as f64;
        lg += lngamma(q - fi)? - order * lngamma(l - fi)?;
    }
    Ok(pf * (pf - 1.0) / 2.0 * PI.ln() - pf * pf * l.ln() + pf * params.sigma().logdet()?
        - pf * q * order.ln() / (1.0 - order)
        + lg / (1.0 - order))
}

pub fn entropy(params: &WishartParams, kind: EntropyKind) -> Result<f64> {
    match kind {
        EntropyKind::Shannon => shannon_entropy(params),
        EntropyKind::Renyi(order) => renyi_entropy(params, order),
    }
}

/// `vec(Σ⁻¹)* K vec(Σ⁻¹)` with `K` chosen by `convention`.
pub fn covariance_quadratic_form(sigma: &HermitianMatrix, convention: KronConvention) -> Result<f64> {
    let inv = sigma.inverse()?;
    let left = match convention {
        KronConvention::Transposed => sigma.transpose(),
        KronConvention::Literal => sigma.clone(),
    };
    let form = left.kron(sigma).quadratic_form(&inv.vec())?;
    Ok(form.re)
}

/// Asymptotic variance of `√N [H(θ̂) − H(θ)]`.
pub fn entropy_variance(params: &WishartParams, kind: EntropyKind, convention: KronConvention) -> Result<f64> {
    let p = params.dim();
    let pf = p as f64;
    let l = params.looks();
    let trigamma_sum = multivariate_polygamma(1, p, l)?;
    let curvature = trigamma_sum - pf / l;
    if !(curvature > 0.0) {
        return Err(Error::domain(format!("ψ_p⁽¹⁾(L) − p/L must be positive (got {curvature})")));
    }
    let looks_gradient = match kind {
        EntropyKind::Shannon => (pf - l) * trigamma_sum + pf - pf * pf / l,
        EntropyKind::Renyi(order) => {
            let q = check_renyi(params, order)?;
            order / (1.0 - order) * (multivariate_polygamma(0, p, q)? - multivariate_polygamma(0, p, l)?)
                - pf * order * order.ln() / (1.0 - order)
                - pf * pf / l
        }
    };
    let sigma_term = pf * pf / l * covariance_quadratic_form(params.sigma(), convention)?;
    Ok(looks_gradient * looks_gradient / curvature + sigma_term)
}

//! Two-sample (and r-sample) tests of `H₀: θ₁ = θ₂` built on the likelihood
//! ratio, the symmetrized Kullback-Leibler distance and the Shannon and Rényi
//! entropies. Every statistic is referred to its asymptotic χ² law.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate, pool_estimates, LooksMode, MLEstimate};
use crate::infotheory::{entropy, entropy_variance, kl_distance, EntropyKind, KronConvention, DEFAULT_RENYI_ORDER};
use crate::mathcore::{chi2_sf, ln_multivariate_gamma};
use crate::model::MatrixSample;

/// Statistics closer to zero than this are round-off and reported as zero.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Lr,
    Kl,
    Shannon,
    Renyi(f64),
}

impl Method {
    /// The four methods compared throughout, Rényi at its default order.
    pub const ALL: [Method; 4] = [Method::Lr, Method::Kl, Method::Shannon, Method::Renyi(DEFAULT_RENYI_ORDER)];

    pub fn entropy_kind(&self) -> Option<EntropyKind> {
        match *self {
            Method::Shannon => Some(EntropyKind::Shannon),
            Method::Renyi(order) => Some(EntropyKind::Renyi(order)),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Lr => write!(f, "lr"),
            Method::Kl => write!(f, "kl"),
            Method::Shannon => write!(f, "shannon"),
            Method::Renyi(order) => write!(f, "renyi{order}"),
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `lr`, `kl`, `shannon`, `renyi` (default order) or `renyi<β>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(Method::Lr),
            "kl" => Ok(Method::Kl),
            "shannon" | "s" => Ok(Method::Shannon),
            "renyi" | "r" => Ok(Method::Renyi(DEFAULT_RENYI_ORDER)),
            other => other
                .strip_prefix("renyi")
                .and_then(|b| b.trim_start_matches(['=', ':']).parse::<f64>().ok())
                .map(Method::Renyi)
                .ok_or_else(|| Error::Format(format!("unknown method {s:?}"))),
        }
    }
}

/// Knobs that are not fixed by the test definitions themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestOptions {
    /// Denominator `h′(0) φ″(1)` of the KL statistic.
    pub kl_normalization: f64,
    pub kron: KronConvention,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            kl_normalization: 1.0,
            kron: KronConvention::Transposed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub method: Method,
    pub looks_mode: LooksMode,
}

impl TestResult {
    fn new(statistic: f64, df: f64, method: Method, looks_mode: LooksMode) -> Result<Self> {
        if !statistic.is_finite() {
            return Err(Error::domain(format!("{method} statistic is not finite")));
        }
        let statistic = if statistic.abs() < ROUNDOFF_FLOOR { 0.0 } else { statistic.max(0.0) };
        Ok(Self {
            statistic,
            df,
            p_value: chi2_sf(statistic, df)?,
            method,
            looks_mode,
        })
    }
}

/// Reject at level `alpha` iff the p-value does not exceed it.
pub fn decide(result: &TestResult, alpha: f64) -> bool {
    result.p_value <= alpha
}

fn parameter_df(dim: usize, mode: LooksMode) -> f64 {
    let p2 = (dim * dim) as f64;
    if mode.is_known() {
        p2
    } else {
        p2 + 1.0
    }
}

fn check_pair(a: &MLEstimate, b: &MLEstimate) -> Result<()> {
    if a.params.dim() != b.params.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.params.dim(),
            found: b.params.dim(),
        });
    }
    Ok(())
}

/// Likelihood-ratio statistic `−2 log λ` from per-sample estimates.
///
/// With known looks the density normalizers and trace terms cancel and
/// `S = −2L [N₁ log|Σ̂₁| + N₂ log|Σ̂₂| − (N₁+N₂) log|Σ̂_c|]`.
pub fn lr_from_estimates(a: &MLEstimate, b: &MLEstimate, mode: LooksMode) -> Result<TestResult> {
    check_pair(a, b)?;
    let pooled = pool_estimates(a, b, mode)?;
    let (n1, n2) = (a.sample_size as f64, b.sample_size as f64);
    let ld1 = a.params.sigma().logdet()?;
    let ld2 = b.params.sigma().logdet()?;
    let ldc = pooled.params.sigma().logdet()?;
    let log_lambda = match mode {
        LooksMode::Known(looks) => looks * (n1 * ld1 + n2 * ld2 - (n1 + n2) * ldc),
        LooksMode::Estimated => {
            let p = a.params.dim();
            let pf = p as f64;
            let (l1, l2, lc) = (a.params.looks(), b.params.looks(), pooled.params.looks());
            let (m1, m2) = match (a.mean_logdet, b.mean_logdet) {
                (Some(m1), Some(m2)) => (m1, m2),
                _ => return Err(Error::domain("estimated-looks LR needs cached log-determinants")),
            };
            let a_p = pf * ((n1 + n2) * lc * lc.ln() - n1 * l1 * l1.ln() - n2 * l2 * l2.ln())
                + n1 * ln_multivariate_gamma(p, l1)?
                + n2 * ln_multivariate_gamma(p, l2)?
                - (n1 + n2) * ln_multivariate_gamma(p, lc)?;
            // Sums over observations of tr(A Z_i) equal N tr(A Σ̂).
            let inv1 = a.params.sigma().inverse()?;
            let inv2 = b.params.sigma().inverse()?;
            let invc = pooled.params.sigma().inverse()?;
            let tr1 = n1 * (l1 * inv1.trace_product(a.params.sigma())? - lc * invc.trace_product(a.params.sigma())?);
            let tr2 = n2 * (l2 * inv2.trace_product(b.params.sigma())? - lc * invc.trace_product(b.params.sigma())?);
            a_p + n1 * l1 * ld1 + n2 * l2 * ld2 - (n1 + n2) * lc * ldc
                + (lc - l1) * n1 * m1
                + (lc - l2) * n2 * m2
                + tr1
                + tr2
        }
    };
    TestResult::new(-2.0 * log_lambda, parameter_df(a.params.dim(), mode), Method::Lr, mode)
}

pub fn lr_statistic(a: &MatrixSample, b: &MatrixSample, mode: LooksMode) -> Result<TestResult> {
    lr_from_estimates(&estimate(a, mode)?, &estimate(b, mode)?, mode)
}

/// `log λ` evaluated term by term over the observations, with no algebraic
/// simplification; a reference route for [`lr_statistic`].
pub fn lr_log_lambda_direct(a: &MatrixSample, b: &MatrixSample, mode: LooksMode) -> Result<f64> {
    let e1 = estimate(a, mode)?;
    let e2 = estimate(b, mode)?;
    let ec = pool_estimates(&e1, &e2, mode)?;
    let p = a.dim();
    let pf = p as f64;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (l1, l2, lc) = (e1.params.looks(), e2.params.looks(), ec.params.looks());
    let a_p = pf * ((n1 + n2) * lc * lc.ln() - n1 * l1 * l1.ln() - n2 * l2 * l2.ln())
        + n1 * ln_multivariate_gamma(p, l1)?
        + n2 * ln_multivariate_gamma(p, l2)?
        - (n1 + n2) * ln_multivariate_gamma(p, lc)?;
    let dets = n1 * l1 * e1.params.sigma().logdet()? + n2 * l2 * e2.params.sigma().logdet()?
        - (n1 + n2) * lc * ec.params.sigma().logdet()?;
    let mut ld_x = 0.0;
    for x in a.observations() {
        ld_x += x.logdet()?;
    }
    let mut ld_y = 0.0;
    for y in b.observations() {
        ld_y += y.logdet()?;
    }
    let mut m1 = e1.params.sigma().inverse()?.scale(l1);
    m1.add_scaled_assign(&ec.params.sigma().inverse()?, -lc)?;
    let mut m2 = e2.params.sigma().inverse()?.scale(l2);
    m2.add_scaled_assign(&ec.params.sigma().inverse()?, -lc)?;
    let mut tr = 0.0;
    for x in a.observations() {
        tr += m1.trace_product(x)?;
    }
    for y in b.observations() {
        tr += m2.trace_product(y)?;
    }
    Ok(a_p + dets + (lc - l1) * ld_x + (lc - l2) * ld_y + tr)
}

/// `S_KL = 2 N₁N₂/(N₁+N₂) · d_KL(θ̂₁, θ̂₂) / (h′(0) φ″(1))`.
pub fn kl_from_estimates(a: &MLEstimate, b: &MLEstimate, mode: LooksMode, opts: &TestOptions) -> Result<TestResult> {
    check_pair(a, b)?;
    let (n1, n2) = (a.sample_size as f64, b.sample_size as f64);
    let d = kl_distance(&a.params, &b.params)?;
    let s = 2.0 * n1 * n2 / (n1 + n2) * d / opts.kl_normalization;
    TestResult::new(s, parameter_df(a.params.dim(), mode), Method::Kl, mode)
}

pub fn kl_statistic(a: &MatrixSample, b: &MatrixSample, mode: LooksMode, opts: &TestOptions) -> Result<TestResult> {
    kl_from_estimates(&estimate(a, mode)?, &estimate(b, mode)?, mode, opts)
}

/// Entropy homogeneity statistic over `r ≥ 2` estimates,
/// `Σ N_i (H(θ̂_i) − v̄)² / σ²(θ̂_i)` with `v̄` the precision-weighted mean; df `r − 1`.
pub fn entropy_from_estimates(
    estimates: &[MLEstimate],
    kind: EntropyKind,
    mode: LooksMode,
    opts: &TestOptions,
) -> Result<TestResult> {
    if estimates.len() < 2 {
        return Err(Error::domain("entropy test needs at least two samples"));
    }
    for e in &estimates[1..] {
        check_pair(&estimates[0], e)?;
    }
    let mut values = Vec::with_capacity(estimates.len());
    for e in estimates {
        let h = entropy(&e.params, kind)?;
        let weight = e.sample_size as f64 / entropy_variance(&e.params, kind, opts.kron)?;
        values.push((h, weight));
    }
    let method = match kind {
        EntropyKind::Shannon => Method::Shannon,
        EntropyKind::Renyi(order) => Method::Renyi(order),
    };
    let df = (estimates.len() - 1) as f64;
    if values.iter().all(|(h, _)| *h == values[0].0) {
        return TestResult::new(0.0, df, method, mode);
    }
    let total_weight: f64 = values.iter().map(|(_, w)| w).sum();
    let mean = values.iter().map(|(h, w)| h * w).sum::<f64>() / total_weight;
    let s = values.iter().map(|(h, w)| w * (h - mean) * (h - mean)).sum();
    TestResult::new(s, df, method, mode)
}

pub fn entropy_statistic(
    samples: &[MatrixSample],
    kind: EntropyKind,
    mode: LooksMode,
    opts: &TestOptions,
) -> Result<TestResult> {
    let estimates = samples.iter().map(|s| estimate(s, mode)).collect::<Result<Vec<_>>>()?;
    entropy_from_estimates(&estimates, kind, mode, opts)
}

/// Any of the four two-sample tests from precomputed estimates.
pub fn two_sample_from_estimates(
    method: Method,
    a: &MLEstimate,
    b: &MLEstimate,
    mode: LooksMode,
    opts: &TestOptions,
) -> Result<TestResult> {
    match method {
        Method::Lr => lr_from_estimates(a, b, mode),
        Method::Kl => kl_from_estimates(a, b, mode, opts),
        Method::Shannon => entropy_from_estimates(&[a.clone(), b.clone()], EntropyKind::Shannon, mode, opts),
        Method::Renyi(order) => entropy_from_estimates(&[a.clone(), b.clone()], EntropyKind::Renyi(order), mode, opts),
    }
}

pub fn two_sample(method: Method, a: &MatrixSample, b: &MatrixSample, mode: LooksMode, opts: &TestOptions) -> Result<TestResult> {
    two_sample_from_estimates(method, &estimate(a, mode)?, &estimate(b, mode)?, mode, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::EntropyKind;
    use crate::model::{sample, RngSeed, WishartParams};
    use crate::presets::flevoland_b1;
    use proptest::prelude::*;

    const KNOWN: LooksMode = LooksMode::Known(4.0);

    fn draw(n: usize, scale: f64, seed: u64) -> MatrixSample {
        sample(&WishartParams::new(flevoland_b1().scale(scale), 4.0).unwrap(), n, RngSeed(seed)).unwrap()
    }

    #[test]
    fn identical_samples_give_zero() {
        let x = draw(30, 1.0, 1);
        let opts = TestOptions::default();
        for mode in [KNOWN, LooksMode::Estimated] {
            for m in Method::ALL {
                let r = two_sample(m, &x, &x, mode, &opts).unwrap();
                assert_eq!(r.statistic, 0.0, "{m} {mode:?}");
                assert_eq!(r.p_value, 1.0);
            }
        }
    }

    #[test]
    fn degrees_of_freedom() {
        let (x, y) = (draw(30, 1.0, 2), draw(30, 1.0, 3));
        let opts = TestOptions::default();
        assert_eq!(lr_statistic(&x, &y, KNOWN).unwrap().df, 9.0);
        assert_eq!(lr_statistic(&x, &y, LooksMode::Estimated).unwrap().df, 10.0);
        assert_eq!(kl_statistic(&x, &y, KNOWN, &opts).unwrap().df, 9.0);
        assert_eq!(kl_statistic(&x, &y, LooksMode::Estimated, &opts).unwrap().df, 10.0);
        let z = draw(30, 1.0, 4);
        let r = entropy_statistic(&[x, y, z], EntropyKind::Shannon, KNOWN, &opts).unwrap();
        assert_eq!(r.df, 2.0);
    }

    #[test]
    fn known_looks_lr_matches_direct_evaluation() {
        for seed in 0..10 {
            let (x, y) = (draw(20 + seed as usize, 1.0, 10 + seed), draw(35, 1.2, 40 + seed));
            let closed = lr_statistic(&x, &y, KNOWN).unwrap().statistic;
            let direct = -2.0 * lr_log_lambda_direct(&x, &y, KNOWN).unwrap();
            assert!((closed - direct).abs() < 1e-8 * (1.0 + closed.abs()), "{closed} vs {direct}");
        }
    }

    #[test]
    fn estimated_looks_lr_matches_direct_evaluation() {
        for seed in 0..5 {
            let (x, y) = (draw(40, 1.0, 60 + seed), draw(55, 1.3, 70 + seed));
            let closed = lr_statistic(&x, &y, LooksMode::Estimated).unwrap().statistic;
            let direct = -2.0 * lr_log_lambda_direct(&x, &y, LooksMode::Estimated).unwrap();
            assert!((closed - direct).abs() < 1e-7 * (1.0 + closed.abs()), "{closed} vs {direct}");
        }
    }

    #[test]
    fn kl_equal_sizes_is_n_times_distance() {
        let (x, y) = (draw(25, 1.0, 5), draw(25, 1.4, 6));
        let r = kl_statistic(&x, &y, KNOWN, &TestOptions::default()).unwrap();
        let e1 = estimate(&x, KNOWN).unwrap();
        let e2 = estimate(&y, KNOWN).unwrap();
        let d = kl_distance(&e1.params, &e2.params).unwrap();
        assert!((r.statistic - 25.0 * d).abs() < 1e-10 * r.statistic);
    }

    #[test]
    fn entropy_two_sample_reduction() {
        let opts = TestOptions::default();
        for seed in 0..10u64 {
            let (x, y) = (draw(30, 1.0, 100 + seed), draw(30, 1.25, 200 + seed));
            for kind in [EntropyKind::Shannon, EntropyKind::Renyi(0.1)] {
                for mode in [KNOWN, LooksMode::Estimated] {
                    let general = entropy_statistic(&[x.clone(), y.clone()], kind, mode, &opts).unwrap().statistic;
                    let e1 = estimate(&x, mode).unwrap();
                    let e2 = estimate(&y, mode).unwrap();
                    let h1 = entropy(&e1.params, kind).unwrap();
                    let h2 = entropy(&e2.params, kind).unwrap();
                    let v1 = entropy_variance(&e1.params, kind, opts.kron).unwrap();
                    let v2 = entropy_variance(&e2.params, kind, opts.kron).unwrap();
                    let reduced = 30.0 * (h1 - h2).powi(2) / (v1 + v2);
                    assert!((general - reduced).abs() < 1e-10 * (1.0 + reduced), "{general} vs {reduced}");
                }
            }
        }
    }

    #[test]
    fn decision_boundary() {
        let mk = |p| TestResult {
            statistic: 1.0,
            df: 1.0,
            p_value: p,
            method: Method::Lr,
            looks_mode: KNOWN,
        };
        assert!(decide(&mk(0.04), 0.05));
        assert!(decide(&mk(0.05), 0.05));
        assert!(!decide(&mk(1.0), 0.999));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("lr".parse::<Method>().unwrap(), Method::Lr);
        assert_eq!("KL".parse::<Method>().unwrap(), Method::Kl);
        assert_eq!("renyi".parse::<Method>().unwrap(), Method::Renyi(0.1));
        assert_eq!("renyi0.5".parse::<Method>().unwrap(), Method::Renyi(0.5));
        assert!("hotelling".parse::<Method>().is_err());
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn statistics_are_symmetric_and_nonnegative(seed in 0u64..10_000, n1 in 5usize..40, n2 in 5usize..40, k in 0.0f64..0.6) {
            let x = draw(n1, 1.0, seed);
            let y = draw(n2, 1.0 + k, seed + 1_000_000);
            let opts = TestOptions::default();
            for m in Method::ALL {
                let ab = two_sample(m, &x, &y, KNOWN, &opts).unwrap();
                let ba = two_sample(m, &y, &x, KNOWN, &opts).unwrap();
                prop_assert!(ab.statistic >= 0.0);
                prop_assert!((ab.statistic - ba.statistic).abs() <= 1e-9 * (1.0 + ab.statistic));
                prop_assert!((0.0..=1.0).contains(&ab.p_value));
            }
        }

        #[test]
        fn known_looks_lr_is_scale_invariant(seed in 0u64..10_000) {
            let x = draw(20, 1.0, seed);
            let y = draw(20, 1.3, seed + 7);
            let base = lr_statistic(&x, &y, KNOWN).unwrap().statistic;
            let scaled = lr_statistic(&x.scaled(10.0), &y.scaled(10.0), KNOWN).unwrap().statistic;
            prop_assert!((base - scaled).abs() < 1e-8 * (1.0 + base));
        }
    }
}

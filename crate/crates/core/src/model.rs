//! The scaled complex Wishart law `W(Σ, L)`: density, exact sampler, Gamma
//! marginals and the trace-transform goodness-of-fit check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{gamma_cdf, kolmogorov_sf, ln_multivariate_gamma, lngamma, HermitianMatrix, C64};

/// Parameters `(Σ, L)` of a scaled complex Wishart law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct WishartParams {
    sigma: HermitianMatrix,
    looks: f64,
}

impl WishartParams {
    pub fn new(sigma: HermitianMatrix, looks: f64) -> Result<Self> {
        let p = sigma.dim();
        if !(looks > (p - 1) as f64) || !looks.is_finite() {
            return Err(Error::domain(format!("number of looks must exceed p - 1 = {} (got {looks})", p - 1)));
        }
        sigma.cholesky()?;
        Ok(Self { sigma, looks })
    }

    pub fn sigma(&self) -> &HermitianMatrix {
        &self.sigma
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Same looks, covariance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.sigma.scale(factor), self.looks)
    }
}

/// Config-file form: either an explicit `sigma` or a named `preset`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    sigma: Option<HermitianMatrix>,
    preset: Option<String>,
    looks: f64,
}

impl TryFrom<RawParams> for WishartParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let sigma = match (raw.sigma, raw.preset) {
            (Some(sigma), None) => sigma,
            (None, Some(name)) => crate::presets::by_name(&name).ok_or_else(|| Error::Format(format!("unknown preset {name:?}")))?,
            _ => return Err(Error::Format("give exactly one of sigma, preset".into())),
        };
        WishartParams::new(sigma, raw.looks)
    }
}

/// An ordered, nonempty set of `p x p` observations from one region.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    dim: usize,
    observations: Vec<HermitianMatrix>,
}

impl MatrixSample {
    pub fn new(observations: Vec<HermitianMatrix>) -> Result<Self> {
        let first = observations.first().ok_or(Error::EmptySample)?;
        let dim = first.dim();
        if let Some(bad) = observations.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { dim, observations })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[HermitianMatrix] {
        &self.observations
    }

    pub fn into_observations(self) -> Vec<HermitianMatrix> {
        self.observations
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut obs = self.observations.clone();
        obs.extend_from_slice(&other.observations);
        Ok(Self {
            dim: self.dim,
            observations: obs,
        })
    }

    /// Every observation multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            observations: self.observations.iter().map(|m| m.scale(c)).collect(),
        }
    }
}

/// Base seed for reproducible Monte Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Seed of work unit `index`; independent of scheduling order.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal draws by the Box-Muller transform.
#[derive(Debug, Default, Clone)]
pub struct BoxMuller {
    spare: Option<f64>,
}

impl BoxMuller {
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// `log f(z; Σ, L)` of the scaled complex Wishart density.
pub fn log_density(z: &HermitianMatrix, params: &WishartParams) -> Result<f64> {
    let p = params.dim();
    if z.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: z.dim(),
        });
    }
    let looks = params.looks;
    let pf = p as f64;
    let sigma_chol = params.sigma.cholesky()?;
    let trace = sigma_chol.inverse().trace_product(z)?;
    Ok(pf * looks * looks.ln() + (looks - pf) * z.logdet()? - looks * sigma_chol.logdet()
        - ln_multivariate_gamma(p, looks)?
        - looks * trace)
}

/// Log-density of the single-channel Gamma marginal with mean `mean` and `looks` shape.
pub fn gamma_marginal_log_density(z: f64, mean: f64, looks: f64) -> Result<f64> {
    if !(z > 0.0 && mean > 0.0 && looks > 0.0) {
        return Err(Error::domain(format!(
            "gamma marginal needs z, mean, L > 0 (z = {z}, mean = {mean}, L = {looks})"
        )));
    }
    Ok(looks * looks.ln() + (looks - 1.0) * z.ln() - lngamma(looks)? - looks * mean.ln() - looks * z / mean)
}

/// Exact sampler for integer looks: each draw averages `L` outer products of
/// circular complex Gaussian vectors built from a `2p`-variate real Gaussian
/// with covariance `½ [[Re Σ, −Im Σ], [Im Σ, Re Σ]]`.
#[derive(Debug, Clone)]
pub struct WishartSampler {
    dim: usize,
    looks: usize,
    /// Lower Cholesky factor of the real `2p x 2p` covariance, row-major.
    real_factor: Vec<f64>,
}

impl WishartSampler {
    pub fn new(params: &WishartParams) -> Result<Self> {
        let looks = params.looks;
        let p = params.dim();
        if looks.fract() != 0.0 || looks < 3.0 || looks < p as f64 {
            return Err(Error::domain(format!(
                "exact sampling needs an integer L >= max(3, p) (L = {looks}, p = {p})"
            )));
        }
        let n = 2 * p;
        let mut cov = vec![0.0; n * n];
        for i in 0..p {
            for j in 0..p {
                let s = params.sigma.get(i, j);
                cov[i * n + j] = 0.5 * s.re;
                cov[(i + p) * n + (j + p)] = 0.5 * s.re;
                cov[i * n + (j + p)] = -0.5 * s.im;
                cov[(i + p) * n + j] = 0.5 * s.im;
            }
        }
        let real_factor = real_cholesky(&cov, n)?;
        Ok(Self {
            dim: p,
            looks: looks as usize,
            real_factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, normals: &mut BoxMuller) -> HermitianMatrix {
        let p = self.dim;
        let n = 2 * p;
        let mut acc = vec![C64::new(0.0, 0.0); p * p];
        let mut g = vec![0.0; n];
        let mut y = vec![C64::new(0.0, 0.0); p];
        for _ in 0..self.looks {
            for v in g.iter_mut() {
                *v = normals.next(rng);
            }
            for (i, yi) in y.iter_mut().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for k in 0..=i {
                    re += self.real_factor[i * n + k] * g[k];
                }
                for k in 0..=(i + p) {
                    im += self.real_factor[(i + p) * n + k] * g[k];
                }
                *yi = C64::new(re, im);
            }
            for i in 0..p {
                for j in i..p {
                    acc[i * p + j] += y[i] * y[j].conj();
                }
            }
        }
        let inv = 1.0 / self.looks as f64;
        let upper: Vec<C64> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).map(|(i, j)| acc[i * p + j] * inv).collect();
        HermitianMatrix::from_upper(p, &upper).expect("upper triangle has the right length")
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<MatrixSample> {
        let mut normals = BoxMuller::default();
        MatrixSample::new((0..n).map(|_| self.draw(rng, &mut normals)).collect())
    }
}

fn real_cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > crate::mathcore::PIVOT_THRESHOLD) {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Draws `n` observations from `W(Σ, L)`; a pure function of its arguments.
pub fn sample(params: &WishartParams, n: usize, seed: RngSeed) -> Result<MatrixSample> {
    let sampler = WishartSampler::new(params)?;
    sampler.sample(n, &mut seed.rng())
}

/// `t_i = tr(Σ̂⁻¹ Z_i)` for every observation.
pub fn trace_transform(sample: &MatrixSample, sigma_hat: &HermitianMatrix) -> Result<Vec<f64>> {
    if sigma_hat.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            found: sigma_hat.dim(),
        });
    }
    let inv = sigma_hat.inverse()?;
    sample.observations().iter().map(|z| inv.trace_product(z)).collect()
}

/// One-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov-Smirnov statistic against an arbitrary continuous cdf.
pub fn ks_test<F>(values: &[f64], cdf: F) -> Result<KsResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("KS test values contain NaN"));
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
        n: sorted.len(),
    })
}

/// KS test of `values` against Gamma(shape, scale).
pub fn ks_test_gamma(values: &[f64], shape: f64, scale: f64) -> Result<KsResult> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::domain("gamma shape and scale must be positive"));
    }
    ks_test(values, |x| gamma_cdf(x, shape, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::flevoland_b1;

    fn scalar(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[x])
    }

    /// Adaptive Simpson quadrature, independent of anything in the crate.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
        fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        step(f, a, b, fa, fm, fb, whole, eps, depth)
    }

    #[test]
    fn density_scalar_cases() {
        let theta = WishartParams::new(scalar(1.0), 1.0).unwrap();
        assert!((log_density(&scalar(1.0), &theta).unwrap() + 1.0).abs() < 1e-14);

        let theta = WishartParams::new(scalar(2.0), 4.0).unwrap();
        for z in [0.3, 2.0, 5.5] {
            let a = log_density(&scalar(z), &theta).unwrap();
            let b = gamma_marginal_log_density(z, 2.0, 4.0).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!((gamma_marginal_log_density(1.0, 1.0, 1.0).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_at_b1_matches_direct_evaluation() {
        // Independent route: explicit determinant via cofactor expansion and
        // lgamma from statrs.
        let b1 = flevoland_b1();
        let theta = WishartParams::new(b1.clone(), 4.0).unwrap();
        let m = |i: usize, j: usize| b1.get(i, j);
        let det = (m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)))
            .re;
        let ln_gamma_p = 3.0 * std::f64::consts::PI.ln()
            + (0..3).map(|i| statrs::function::gamma::ln_gamma(4.0 - i as f64)).sum::<f64>();
        // With z = Σ the trace term is L p.
        let expected = 12.0 * 4f64.ln() + (4.0 - 3.0) * det.ln() - 4.0 * det.ln() - ln_gamma_p - 4.0 * 3.0;
        let got = log_density(&b1, &theta).unwrap();
        assert!((got - expected).abs() < 1e-10 * expected.abs(), "{got} vs {expected}");
    }

    #[test]
    fn density_errors() {
        assert!(WishartParams::new(HermitianMatrix::identity(3), 2.0).is_err());
        let theta = WishartParams::new(HermitianMatrix::identity(2), 4.0).unwrap();
        let singular = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(log_density(&singular, &theta).unwrap_err(), Error::NotPositiveDefinite);
        assert!(matches!(
            log_density(&HermitianMatrix::identity(3), &theta),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(gamma_marginal_log_density(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn scalar_density_integrates_to_one() {
        for (looks, mean) in [(1.0, 1.0), (4.0, 2.0), (7.5, 0.3)] {
            let theta = WishartParams::new(scalar(mean), looks).unwrap();
            let f = |z: f64| if z <= 0.0 { 0.0 } else { log_density(&scalar(z), &theta).unwrap().exp() };
            let h = mean;
            let total: f64 = (0..60).map(|i| simpson(&f, i as f64 * h, (i + 1) as f64 * h, 1e-12, 30)).sum();
            assert!((total - 1.0).abs() < 1e-6, "L {looks}: {total}");
        }
    }

    #[test]
    fn two_dim_density_normalizes_by_importance_sampling() {
        // Proposal: W(2I, 4) itself sampled exactly; E_q[f/q] = 1.
        let target = WishartParams::new(
            HermitianMatrix::from_upper(2, &[C64::new(1.0, 0.0), C64::new(0.3, 0.2), C64::new(1.5, 0.0)]).unwrap(),
            5.0,
        )
        .unwrap();
        let proposal = WishartParams::new(HermitianMatrix::from_real_diagonal(&[1.5, 2.0]), 4.0).unwrap();
        let draws = sample(&proposal, 100_000, RngSeed(11)).unwrap();
        let mean: f64 = draws
            .observations()
            .iter()
            .map(|z| (log_density(z, &target).unwrap() - log_density(z, &proposal).unwrap()).exp())
            .sum::<f64>()
            / draws.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "importance estimate {mean}");
    }

    #[test]
    fn sampler_mean_converges() {
        let theta = WishartParams::new(HermitianMatrix::identity(3), 4.0).unwrap();
        let s = sample(&theta, 10_000, RngSeed(1)).unwrap();
        let mut mean = HermitianMatrix::zeros(3);
        for z in s.observations() {
            mean.add_scaled_assign(z, 1.0 / s.len() as f64).unwrap();
        }
        assert!(mean.max_abs_diff(&HermitianMatrix::identity(3)) < 0.05);
    }

    #[test]
    fn sampler_error_shrinks_at_root_n() {
        let b1 = flevoland_b1();
        let theta = WishartParams::new(b1.clone(), 4.0).unwrap();
        let err = |n: usize| {
            // Average over replicates so the ratio is not dominated by one draw.
            (0..40)
                .map(|r| {
                    let s = sample(&theta, n, RngSeed(1000 + r)).unwrap();
                    let mut mean = HermitianMatrix::zeros(3);
                    for z in s.observations() {
                        mean.add_scaled_assign(z, 1.0 / n as f64).unwrap();
                    }
                    mean.max_abs_diff(&b1)
                })
                .sum::<f64>()
        };
        let ratio = err(100) / err(10_000);
        assert!((5.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sampler_is_deterministic_and_rejects_bad_looks() {
        let theta = WishartParams::new(flevoland_b1(), 4.0).unwrap();
        let a = sample(&theta, 50, RngSeed(7)).unwrap();
        let b = sample(&theta, 50, RngSeed(7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample(&theta, 50, RngSeed(8)).unwrap());
        let fractional = WishartParams::new(flevoland_b1(), 4.5).unwrap();
        assert!(matches!(sample(&fractional, 1, RngSeed(0)), Err(Error::Domain(_))));
        let too_few = WishartParams::new(HermitianMatrix::identity(2), 2.0).unwrap();
        assert!(matches!(sample(&too_few, 1, RngSeed(0)), Err(Error::Domain(_))));
    }

    #[test]
    fn diagonal_marginals_are_gamma() {
        let b1 = flevoland_b1();
        let theta = WishartParams::new(b1.clone(), 4.0).unwrap();
        let s = sample(&theta, 2000, RngSeed(3)).unwrap();
        for ch in 0..3 {
            let vals: Vec<f64> = s.observations().iter().map(|z| z.get(ch, ch).re).collect();
            let mean = b1.get(ch, ch).re;
            let ks = ks_test_gamma(&vals, 4.0, mean / 4.0).unwrap();
            assert!(ks.p_value > 0.01, "channel {ch}: {ks:?}");
        }
        let theta1 = WishartParams::new(scalar(2.5), 3.0).unwrap();
        let s = sample(&theta1, 2000, RngSeed(4)).unwrap();
        let vals: Vec<f64> = s.observations().iter().map(|z| z.get(0, 0).re).collect();
        assert!(ks_test_gamma(&vals, 3.0, 2.5 / 3.0).unwrap().p_value > 0.01);
    }

    #[test]
    fn density_peaks_at_sigma_equal_z() {
        let b1 = flevoland_b1();
        let z = b1.clone();
        let base = log_density(&z, &WishartParams::new(b1.clone(), 4.0).unwrap()).unwrap();
        let dirs = [
            HermitianMatrix::from_upper(3, &[C64::new(1.0, 0.0), C64::new(0.2, 0.1), C64::new(0.0, 0.3), C64::new(-0.5, 0.0), C64::new(0.1, 0.0), C64::new(0.4, 0.0)]).unwrap(),
            HermitianMatrix::from_upper(3, &[C64::new(-0.3, 0.0), C64::new(0.0, 0.7), C64::new(0.1, -0.2), C64::new(0.9, 0.0), C64::new(-0.3, 0.2), C64::new(-0.6, 0.0)]).unwrap(),
        ];
        for d in &dirs {
            let scale = 0.01 * b1.max_abs() / d.max_abs();
            for sign in [-1.0, 1.0] {
                let mut s = b1.clone();
                s.add_scaled_assign(d, sign * scale).unwrap();
                let v = log_density(&z, &WishartParams::new(s, 4.0).unwrap()).unwrap();
                assert!(v < base);
            }
        }
    }

    #[test]
    fn trace_transform_examples() {
        let b1 = flevoland_b1();
        let s = MatrixSample::new(vec![b1.clone(); 5]).unwrap();
        for t in trace_transform(&s, &b1).unwrap() {
            assert!((t - 3.0).abs() < 1e-12);
        }
        let theta = WishartParams::new(b1, 4.0).unwrap();
        let s = sample(&theta, 300, RngSeed(9)).unwrap();
        let mut mean = HermitianMatrix::zeros(3);
        for z in s.observations() {
            mean.add_scaled_assign(z, 1.0 / 300.0).unwrap();
        }
        let t = trace_transform(&s, &mean).unwrap();
        let avg = t.iter().sum::<f64>() / t.len() as f64;
        assert!((avg - 3.0).abs() < 1e-10);
    }

    #[test]
    fn trace_transform_fits_gamma_in_most_trials() {
        // L tr(Σ̂⁻¹Z) is approximately Gamma(pL, 1).
        let theta = WishartParams::new(flevoland_b1(), 4.0).unwrap();
        let sampler = WishartSampler::new(&theta).unwrap();
        let passes = (0..200u64)
            .filter(|&k| {
                let s = sampler.sample(500, &mut RngSeed(77).derive(k).rng()).unwrap();
                let mut mean = HermitianMatrix::zeros(3);
                for z in s.observations() {
                    mean.add_scaled_assign(z, 1.0 / 500.0).unwrap();
                }
                let t = trace_transform(&s, &mean).unwrap();
                ks_test_gamma(&t, 12.0, 0.25).unwrap().p_value > 0.01
            })
            .count();
        assert!(passes >= 190, "{passes}/200");
    }

    #[test]
    fn ks_gamma_examples() {
        use statrs::distribution::{ContinuousCDF, Gamma};
        let g = Gamma::new(3.0, 1.0 / 2.0).unwrap(); // statrs uses rate
        let n = 200;
        let quantiles: Vec<f64> = (1..=n).map(|i| g.inverse_cdf(i as f64 / (n + 1) as f64)).collect();
        let ks = ks_test_gamma(&quantiles, 3.0, 2.0).unwrap();
        assert!(ks.statistic <= 1.0 / (n + 1) as f64 + 1e-9, "{ks:?}");

        let shifted: Vec<f64> = quantiles.iter().map(|x| x + 5.0 * 2.0).collect();
        assert!(ks_test_gamma(&shifted, 3.0, 2.0).unwrap().p_value < 1e-6);
        assert!(ks_test_gamma(&[], 1.0, 1.0).is_err());
        assert!(ks_test_gamma(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn ks_gamma_is_calibrated() {
        let theta = WishartParams::new(scalar(2.0), 5.0).unwrap();
        let sampler = WishartSampler::new(&theta).unwrap();
        let passes = (0..200u64)
            .filter(|&k| {
                let s = sampler.sample(1000, &mut RngSeed(5).derive(k).rng()).unwrap();
                let v: Vec<f64> = s.observations().iter().map(|z| z.get(0, 0).re).collect();
                ks_test_gamma(&v, 5.0, 0.4).unwrap().p_value > 0.01
            })
            .count();
        assert!(passes >= 190, "{passes}/200");
    }
}

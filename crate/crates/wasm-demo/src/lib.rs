//! Browser bindings for a few wishart-cd operations. Everything runs on a
//! synthetic scene built from the bundled covariance preset.

use wasm_bindgen::prelude::*;

use wishart_cd::detector::{detect, threshold, CovRaster, DetectorConfig};
use wishart_cd::experiments::{run_power_experiment, PowerExperimentConfig};
use wishart_cd::hypotests::{Method, TestOptions};
use wishart_cd::infotheory::{entropy, kl_distance, EntropyKind};
use wishart_cd::model::{RngSeed, WishartParams, WishartSampler};
use wishart_cd::presets::flevoland_b1;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn theta(looks: f64) -> Result<WishartParams, JsError> {
    WishartParams::new(flevoland_b1(), looks).map_err(js_err)
}

fn method(name: &str) -> Result<Method, JsError> {
    name.parse().map_err(js_err)
}

/// Information gap between the preset and its scaled copy `(1+k)Σ`, for
/// `k` on an even grid over `[0, k_max]`.
///
/// Returns rows of `[k, kl, shannon_gap, renyi_gap]`, flattened.
#[wasm_bindgen]
pub fn info_curve(looks: f64, order: f64, k_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    let base = theta(looks)?;
    let kinds = [EntropyKind::Shannon, EntropyKind::Renyi(order)];
    let h0: Vec<f64> = kinds.iter().map(|&k| entropy(&base, k)).collect::<Result<_, _>>().map_err(js_err)?;
    let mut out = Vec::with_capacity(4 * (steps + 1));
    for i in 0..=steps {
        let k = k_max * i as f64 / steps.max(1) as f64;
        let other = base.scaled(1.0 + k).map_err(js_err)?;
        out.push(k);
        out.push(kl_distance(&base, &other).map_err(js_err)?);
        for (kind, h) in kinds.iter().zip(&h0) {
            out.push(entropy(&other, *kind).map_err(js_err)? - h);
        }
    }
    Ok(out)
}

/// Result of running the detector on a synthetic pair whose right half
/// changed scale.
#[wasm_bindgen]
pub struct Scene {
    rows: usize,
    cols: usize,
    p_values: Vec<f64>,
    changed: Vec<bool>,
    failures: usize,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[wasm_bindgen(getter)]
    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.p_values.clone()
    }

    /// Flagged pixels in the left and right halves.
    pub fn flagged_by_half(&self) -> Vec<u32> {
        let mut counts = [0u32; 2];
        for (i, &c) in self.changed.iter().enumerate() {
            if c {
                counts[usize::from(i % self.cols >= self.cols / 2)] += 1;
            }
        }
        counts.to_vec()
    }

    /// RGBA pixels for a canvas: gray ramp on `-log10 p`, flagged pixels red.
    pub fn rgba(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * self.p_values.len());
        for (&p, &c) in self.p_values.iter().zip(&self.changed) {
            let depth = (-p.max(1e-300).log10() / 16.0).clamp(0.0, 1.0);
            let g = (255.0 * (1.0 - depth)).round() as u8;
            if c {
                out.extend_from_slice(&[230, g / 3, g / 3, 255]);
            } else {
                out.extend_from_slice(&[g, g, g, 255]);
            }
        }
        out
    }
}

/// Samples a before/after pair (right half of `after` scaled by `1+k`),
/// runs the windowed detector and thresholds at `cut`.
#[wasm_bindgen]
pub fn detect_scene(
    size: usize,
    contrast: f64,
    method_name: &str,
    window: usize,
    cut: f64,
    seed: u64,
) -> Result<Scene, JsError> {
    let t = theta(4.0)?;
    let left = WishartSampler::new(&t).map_err(js_err)?;
    let right = WishartSampler::new(&t.scaled(1.0 + contrast).map_err(js_err)?).map_err(js_err)?;
    let mut rng = RngSeed(seed).rng();
    let mut normals = Default::default();
    let before = left.sample(size * size, &mut rng).map_err(js_err)?.into_observations();
    let after = (0..size * size)
        .map(|i| if i % size < size / 2 { &left } else { &right }.draw(&mut rng, &mut normals))
        .collect();
    let before = CovRaster::new(size, size, 4.0, before).map_err(js_err)?;
    let after = CovRaster::new(size, size, 4.0, after).map_err(js_err)?;
    let cfg = DetectorConfig { window, ..DetectorConfig::new(method(method_name)?) };
    let map = detect(&before, &after, &cfg).map_err(js_err)?;
    let mask = threshold(&map, cut);
    Ok(Scene { rows: size, cols: size, failures: map.failures, changed: mask.data, p_values: map.values })
}

/// Rejection rates for one test at one sample size over a contrast grid;
/// contrast 0 is the size. Returns rows of `[k, rate, ci_lo, ci_hi]`.
#[wasm_bindgen]
pub fn rejection_rates(
    method_name: &str,
    sample_size: usize,
    contrasts: Vec<f64>,
    level: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let m = method(method_name)?;
    let report = run_power_experiment(&PowerExperimentConfig {
        theta: theta(4.0)?,
        contrasts,
        sample_sizes: vec![sample_size],
        level,
        replications,
        methods: vec![m],
        looks_mode: None,
        options: TestOptions::default(),
        seed,
    })
    .map_err(js_err)?;
    Ok(report.rows.iter().flat_map(|r| [r.level_or_k, r.rate, r.ci_lo, r.ci_hi]).collect())
}

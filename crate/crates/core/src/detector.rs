//! Sliding-window change detection between two co-registered covariance
//! rasters, thresholding of the resulting p-value maps, and agreement
//! metrics against a reference change map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate, LooksMode};
use crate::hypotests::{two_sample_from_estimates, Method, TestOptions};
use crate::mathcore::HermitianMatrix;
use crate::model::MatrixSample;

pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_CUT: f64 = 1e-4;

/// A `rows x cols` grid of `p x p` covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovRaster {
    rows: usize,
    cols: usize,
    dim: usize,
    nominal_looks: f64,
    pixels: Vec<HermitianMatrix>,
}

impl CovRaster {
    pub fn new(rows: usize, cols: usize, nominal_looks: f64, pixels: Vec<HermitianMatrix>) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return Err(Error::GeometryMismatch(format!(
                "{rows}x{cols} raster needs {} pixels, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        let dim = pixels[0].dim();
        if let Some(bad) = pixels.iter().find(|z| z.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        if !(nominal_looks > (dim - 1) as f64) {
            return Err(Error::domain(format!("nominal looks {nominal_looks} must exceed p - 1")));
        }
        Ok(Self {
            rows,
            cols,
            dim,
            nominal_looks,
            pixels,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nominal_looks(&self) -> f64 {
        self.nominal_looks
    }

    pub fn pixels(&self) -> &[HermitianMatrix] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> &HermitianMatrix {
        &self.pixels[row * self.cols + col]
    }

    /// The `w x w` neighbourhood centred on `(row, col)`, row-major.
    fn window(&self, row: usize, col: usize, half: usize) -> Result<MatrixSample> {
        let mut obs = Vec::with_capacity((2 * half + 1).pow(2));
        for r in row - half..=row + half {
            for c in col - half..=col + half {
                obs.push(self.get(r, c).clone());
            }
        }
        MatrixSample::new(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub method: Method,
    pub window: usize,
    /// Defaults to the known nominal looks of the rasters.
    #[serde(default)]
    pub looks_mode: Option<LooksMode>,
    #[serde(default)]
    pub options: TestOptions,
}

impl DetectorConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            window: DEFAULT_WINDOW,
            looks_mode: None,
            options: TestOptions::default(),
        }
    }
}

/// Per-pixel p-values. Pixels whose window does not fit carry `border_value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// Width of the frame that holds `border_value`.
    pub border: usize,
    pub border_value: f64,
    /// Interior windows whose estimate or test failed; stored as p-value 1.
    pub failures: usize,
}

impl PValueMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        row >= self.border && col >= self.border && row + self.border < self.rows && col + self.border < self.cols
    }
}

/// Binary change map, `true` meaning change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMask {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<bool>,
}

impl ChangeMask {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::GeometryMismatch(format!("{rows}x{cols} mask needs {} cells, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }
}

/// Test every interior pixel's `w x w` window on both dates.
pub fn detect(before: &CovRaster, after: &CovRaster, cfg: &DetectorConfig) -> Result<PValueMap> {
    if (before.rows, before.cols, before.dim) != (after.rows, after.cols, after.dim) {
        return Err(Error::GeometryMismatch(format!(
            "{}x{} (p={}) vs {}x{} (p={})",
            before.rows, before.cols, before.dim, after.rows, after.cols, after.dim
        )));
    }
    let w = cfg.window;
    if w % 2 == 0 || w * w < 2 {
        return Err(Error::domain(format!("window must be odd and at least 3, got {w}")));
    }
    let half = w / 2;
    let mode = cfg.looks_mode.unwrap_or(LooksMode::Known(before.nominal_looks));
    let (rows, cols) = (before.rows, before.cols);

    let test_pixel = |r: usize, c: usize| -> Result<f64> {
        let a = estimate(&before.window(r, c, half)?, mode)?;
        let b = estimate(&after.window(r, c, half)?, mode)?;
        Ok(two_sample_from_estimates(cfg.method, &a, &b, mode, &cfg.options)?.p_value)
    };
    let per_row: Vec<(Vec<f64>, usize)> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut line = vec![1.0; cols];
            let mut failures = 0;
            if r >= half && r + half < rows {
                for (c, v) in line.iter_mut().enumerate().take(cols.saturating_sub(half)).skip(half) {
                    match test_pixel(r, c) {
                        Ok(p) => *v = p,
                        Err(_) => failures += 1,
                    }
                }
            }
            (line, failures)
        })
        .collect();
    let failures = per_row.iter().map(|(_, f)| f).sum();
    Ok(PValueMap {
        rows,
        cols,
        values: per_row.into_iter().flat_map(|(line, _)| line).collect(),
        border: half,
        border_value: 1.0,
        failures,
    })
}

/// Change wherever the p-value is at most `cut`.
pub fn threshold(map: &PValueMap, cut: f64) -> ChangeMask {
    ChangeMask {
        rows: map.rows,
        cols: map.cols,
        data: map.values.iter().map(|&p| p <= cut).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricConvention {
    /// FP: detector says change, reference says none. FN: the reverse.
    #[default]
    Conventional,
    /// FP and FN exchanged, following the literal table legend.
    PaperLiteral,
}

/// Agreement between a change mask and a reference map. Rates whose
/// denominator vanishes are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionMetrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `(FP + FN) / N`, N the pixels the detector calls unchanged.
    pub fa: Option<f64>,
    /// `TP / CG`, CG the pixels the detector calls changed.
    pub dr: Option<f64>,
    pub kappa: Option<f64>,
    pub convention: MetricConvention,
}

pub fn score(mask: &ChangeMask, reference: &ChangeMask, convention: MetricConvention) -> Result<DetectionMetrics> {
    if (mask.rows, mask.cols) != (reference.rows, reference.cols) {
        return Err(Error::GeometryMismatch(format!(
            "mask {}x{} vs reference {}x{}",
            mask.rows, mask.cols, reference.rows, reference.cols
        )));
    }
    let (mut tp, mut tn, mut det_ref0, mut det0_ref) = (0usize, 0usize, 0usize, 0usize);
    for (&d, &r) in mask.data.iter().zip(&reference.data) {
        match (d, r) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => det_ref0 += 1,
            (false, true) => det0_ref += 1,
        }
    }
    let (fp, fn_) = match convention {
        MetricConvention::Conventional => (det_ref0, det0_ref),
        MetricConvention::PaperLiteral => (det0_ref, det_ref0),
    };
    let unchanged = tn + det0_ref;
    let changed = tp + det_ref0;
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);

    let total = mask.data.len() as f64;
    let (ptp, ptn, pfp, pfn) = (tp as f64 / total, tn as f64 / total, fp as f64 / total, fn_ as f64 / total);
    let a = 1.0 - pfp - pfn;
    let b = (ptp + pfp) * (ptp + pfn) + (ptn + pfp) * (ptn + pfn);
    let kappa = (b != 1.0).then(|| (a - b) / (1.0 - b));
    Ok(DetectionMetrics {
        tp,
        tn,
        fp,
        fn_,
        fa: ratio(fp + fn_, unchanged),
        dr: ratio(tp, changed),
        kappa,
        convention,
    })
}

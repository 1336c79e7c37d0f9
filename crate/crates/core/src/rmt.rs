//! Random-matrix cross-checks: spectra of `A + U B U*` with `U` Haar.
//!
//! `A` and `B` are diagonal with deterministic quantile spectra of the two
//! inputs, so the only randomness is the rotation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MultiCutMeasure;
use crate::spectral::{DensityGrid, SupportReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Unitary,
    Orthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub matrix_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.matrix_size < 2 {
            return Err(Error::InvalidConfig(format!("matrix size {} below 2", self.matrix_size)));
        }
        if self.trials < 1 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        Ok(())
    }

    /// Independent stream for trial `k`.
    pub fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

/// Quantile spectrum `x_i = q((i - 1/2)/N)`, `i = 1..N`.
pub fn sample_spectrum(mu: &MultiCutMeasure, n: usize) -> Result<Vec<f64>> {
    (1..=n).map(|i| mu.quantile((i as f64 - 0.5) / n as f64)).collect()
}

/// Haar-distributed orthogonal or unitary matrix (as a complex matrix).
pub fn haar_matrix<R: rand::Rng + ?Sized>(n: usize, ensemble: Ensemble, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| match ensemble {
        Ensemble::Orthogonal => Complex64::new(StandardNormal.sample(rng), 0.0),
        Ensemble::Unitary => {
            let (re, im): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for v in q.column_mut(j).iter_mut() {
            *v *= phase;
        }
    }
    q
}

fn haar_orthogonal<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Sorted eigenvalues of `diag(a) + U diag(b) U*` for one Haar draw.
pub fn haar_conjugate_spectrum<R: rand::Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    ensemble: Ensemble,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::InvalidConfig(format!("spectra of lengths {n} and {}", b.len())));
    }
    let mut eig: Vec<f64> = match ensemble {
        Ensemble::Orthogonal => {
            let u = haar_orthogonal(n, rng);
            let mut ub = u.clone();
            for (j, &bj) in b.iter().enumerate() {
                ub.column_mut(j).scale_mut(bj);
            }
            let mut m = &ub * u.transpose();
            for (i, &ai) in a.iter().enumerate() {
                m[(i, i)] += ai;
            }
            let m = (&m + m.transpose()) * 0.5;
            m.symmetric_eigenvalues().iter().copied().collect()
        }
        Ensemble::Unitary => {
            let u = haar_matrix(n, ensemble, rng);
            let mut ub = u.clone();
            for (j, &bj) in b.iter().enumerate() {
                ub.column_mut(j).scale_mut(bj);
            }
            let mut m = &ub * u.adjoint();
            for (i, &ai) in a.iter().enumerate() {
                m[(i, i)] += Complex64::new(ai, 0.0);
            }
            let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let values: DVector<f64> = m.symmetric_eigenvalues();
            values.iter().copied().collect()
        }
    };
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver);
    }
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Kolmogorov–Smirnov distance between sorted samples and a piecewise-linear CDF.
pub fn ks_distance(sorted: &[f64], grid: &[f64], cdf: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let eval = |x: f64| -> f64 {
        if x <= grid[0] {
            return 0.0;
        }
        if x >= grid[grid.len() - 1] {
            return 1.0;
        }
        let k = grid.partition_point(|&g| g <= x);
        let s = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
        cdf[k - 1] * (1.0 - s) + cdf[k] * s
    };
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = eval(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Number of clusters of a sorted spectrum split at spacings above
/// `fraction` of its range.
pub fn empirical_components(sorted: &[f64], fraction: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let range = sorted[sorted.len() - 1] - sorted[0];
    1 + sorted.windows(2).filter(|w| w[1] - w[0] > fraction * range).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ks_distance: f64,
    pub matrix_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub eigenvalues: usize,
    /// Clusters of the first trial's spectrum.
    pub empirical_components: usize,
    /// Fraction of pooled eigenvalues inside predicted gaps shrunk by 10%.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_occupancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_components: Option<usize>,
    /// Largest `|Σ λ - tr A - tr B| / N` over trials.
    pub trace_error: f64,
}

pub const COMPONENT_SPLIT: f64 = 0.02;

/// Pool spectra over `cfg.trials` Haar draws and compare with `dg`.
pub fn validate(
    alpha: &MultiCutMeasure,
    beta: &MultiCutMeasure,
    cfg: &TrialConfig,
    dg: &DensityGrid,
    support: Option<&SupportReport>,
) -> Result<ValidationReport> {
    cfg.validate()?;
    let n = cfg.matrix_size;
    let a = sample_spectrum(alpha, n)?;
    let b = sample_spectrum(beta, n)?;
    let trace = a.iter().sum::<f64>() + b.iter().sum::<f64>();
    let spectra: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| haar_conjugate_spectrum(&a, &b, cfg.ensemble, &mut cfg.rng(k)))
        .collect::<Result<_>>()?;
    let trace_error = spectra
        .iter()
        .map(|s| (s.iter().sum::<f64>() - trace).abs() / n as f64)
        .fold(0.0, f64::max);
    let first = spectra[0].clone();
    let mut pooled: Vec<f64> = spectra.into_iter().flatten().collect();
    pooled.sort_by(f64::total_cmp);
    let (lo, hi) = (pooled[0], pooled[pooled.len() - 1]);
    if lo < dg.grid[0] || hi > dg.grid[dg.len() - 1] {
        return Err(Error::SpectrumOutsideWindow { lo, hi });
    }
    let ks = ks_distance(&pooled, &dg.grid, &dg.cdf());
    let (gap_occupancy, predicted) = match support {
        Some(report) => {
            let gaps: Vec<(f64, f64)> = report
                .components
                .windows(2)
                .map(|w| {
                    let (l, r) = (w[0].1, w[1].0);
                    let shrink = 0.1 * (r - l);
                    (l + shrink, r - shrink)
                })
                .collect();
            let inside = pooled
                .iter()
                .filter(|&&x| gaps.iter().any(|&(l, r)| x > l && x < r))
                .count();
            (Some(inside as f64 / pooled.len() as f64), Some(report.counts.i))
        }
        None => (None, None),
    };
    Ok(ValidationReport {
        ks_distance: ks,
        matrix_size: n,
        trials: cfg.trials,
        seed: cfg.seed,
        ensemble: cfg.ensemble,
        eigenvalues: pooled.len(),
        empirical_components: empirical_components(&first, COMPONENT_SPLIT),
        gap_occupancy,
        predicted_components: predicted,
        trace_error,
    })
}

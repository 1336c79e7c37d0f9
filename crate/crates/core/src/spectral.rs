//! Densities of `μ_α ⊞ μ_β` and `μ^{⊞t}` on real grids, and support detection.
//!
//! Support is read off `Im ω` (of `ω_β` or `ω_t`) rather than the density:
//! the two vanish together, and `Im ω` stays clean near edges and near
//! points where the density diverges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{critical_atoms, golden_min, semigroup_edges};
use crate::error::{Error, Result};
use crate::measures::MultiCutMeasure;
use crate::subordination::{pair_boundary_with_zeros, semigroup_boundary, BoundaryPoint, LadderOptions};
use crate::transform::CauchyTransform;

pub const DEFAULT_POINTS: usize = 2001;
/// Relative support threshold on `Im ω`.
pub const SUPPORT_THRESHOLD: f64 = 1e-7;
pub const EDGE_TOLERANCE: f64 = 1e-8;
/// Zero sets narrower than this are reported as interior zeros.
pub const ZERO_WIDTH: f64 = 1e-7;
pub const MAX_FAILURE_RATE: f64 = 0.01;
pub const EDGE_MISMATCH: f64 = 1e-6;
const WINDOW_PAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultKind {
    Pair,
    Semigroup,
}

/// A convolution problem together with the data its ladder solves reuse.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    kind: ProblemKind<'a>,
    alpha_zeros: Vec<f64>,
    divergence_points: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum ProblemKind<'a> {
    Pair { alpha: &'a MultiCutMeasure, beta: &'a MultiCutMeasure },
    Semigroup { mu: &'a MultiCutMeasure, t: f64 },
}

impl<'a> Problem<'a> {
    /// `μ_α ⊞ μ_β`; both inputs must be absolutely continuous and centered.
    pub fn pair(alpha: &'a MultiCutMeasure, beta: &'a MultiCutMeasure) -> Result<Self> {
        alpha.check_pair_admissible()?;
        beta.check_pair_admissible()?;
        Ok(Self {
            kind: ProblemKind::Pair { alpha, beta },
            alpha_zeros: alpha.gap_zeros(),
            divergence_points: Vec::new(),
        })
    }

    /// `μ^{⊞t}`; purely atomic `μ` needs `allow_atomic`.
    pub fn semigroup(mu: &'a MultiCutMeasure, t: f64, allow_atomic: bool) -> Result<Self> {
        if !(t > 1.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        mu.check_semigroup_admissible(allow_atomic)?;
        Ok(Self {
            kind: ProblemKind::Semigroup { mu, t },
            alpha_zeros: Vec::new(),
            divergence_points: critical_atoms(mu, t).into_iter().map(|x| t * x).collect(),
        })
    }

    pub fn kind(&self) -> ResultKind {
        match self.kind {
            ProblemKind::Pair { .. } => ResultKind::Pair,
            ProblemKind::Semigroup { .. } => ResultKind::Semigroup,
        }
    }

    /// Images `t x` of atoms with mass `1 - 1/t`.
    pub fn divergence_points(&self) -> &[f64] {
        &self.divergence_points
    }

    /// Hull of the possible support, padded by 5% on each side.
    pub fn default_window(&self) -> (f64, f64) {
        let (lo, hi) = match self.kind {
            ProblemKind::Pair { alpha, beta } => {
                let (a, b) = (alpha.hull(), beta.hull());
                (a.0 + b.0, a.1 + b.1)
            }
            ProblemKind::Semigroup { mu, t } => {
                let (a, b) = mu.hull();
                (t * a, t * b)
            }
        };
        let pad = WINDOW_PAD * (hi - lo).max(1e-6);
        (lo - pad, hi + pad)
    }

    /// Ladder solve at real energy `energy`.
    pub fn boundary(&self, energy: f64, ladder: &LadderOptions) -> Result<BoundaryPoint> {
        match self.kind {
            ProblemKind::Pair { alpha, beta } => pair_boundary_with_zeros(alpha, beta, energy, ladder, &self.alpha_zeros),
            ProblemKind::Semigroup { mu, t } => semigroup_boundary(mu, t, energy, ladder),
        }
    }

    /// Ladder solve with one retry at a slightly shifted energy.
    fn robust_boundary(&self, energy: f64, ladder: &LadderOptions) -> Result<BoundaryPoint> {
        self.boundary(energy, ladder).or_else(|first| {
            let nudge = 1e-10 * 1f64.max(energy.abs());
            self.boundary(energy + nudge, ladder).map_err(|_| first)
        })
    }

    fn semigroup_input(&self) -> Option<(&'a MultiCutMeasure, f64)> {
        match self.kind {
            ProblemKind::Semigroup { mu, t } => Some((mu, t)),
            ProblemKind::Pair { .. } => None,
        }
    }
}

/// Sampled density of a convolution result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub kind: ResultKind,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// `Im ω_β` (pair) or `Im ω_t` (semigroup).
    pub im_omega: Vec<f64>,
    /// `Im ω_α` for the pair problem, empty otherwise.
    pub im_omega_alpha: Vec<f64>,
    pub boundary_error: Vec<f64>,
    /// Density capped at the divergence cap.
    pub divergent: Vec<bool>,
    /// Grid points whose ladder failed; their values are interpolated.
    pub failed: Vec<usize>,
    /// Largest scaled residual over every ladder level of every point.
    pub max_residual: f64,
    /// Largest `I_μ̂(ω_t)` or `I_μ̂α(ω_β) I_μ̂β(ω_α)` over every solved point.
    pub max_inequality: f64,
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            (self.grid[self.grid.len() - 1] - self.grid[0]) / (self.grid.len() - 1) as f64
        }
    }

    /// Trapezoid integral of `x^k ρ(x)` over the grid.
    pub fn moment(&self, k: i32) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] * x[0].powi(k) + r[1] * x[1].powi(k)))
            .sum()
    }

    /// Trapezoid CDF at each grid point, normalized to end at 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        out.push(0.0);
        for (x, r) in self.grid.windows(2).zip(self.density.windows(2)) {
            acc += 0.5 * (x[1] - x[0]) * (r[0] + r[1]);
            out.push(acc);
        }
        if acc > 0.0 {
            out.iter_mut().for_each(|v| *v /= acc);
        }
        out
    }

    /// Linear interpolation of the density.
    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if n == 0 || x < self.grid[0] || x > self.grid[n - 1] {
            return 0.0;
        }
        let k = self.grid.partition_point(|&g| g <= x).clamp(1, n - 1);
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let s = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        self.density[k - 1] * (1.0 - s) + self.density[k] * s
    }
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn uniform_grid(window: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidGrid(format!("window [{lo}, {hi}] is empty or not finite")));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("{n} points")));
    }
    Ok((0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect())
}

/// Density of the convolution result on `n_points` equispaced energies.
pub fn density_grid(problem: &Problem<'_>, window: (f64, f64), n_points: usize) -> Result<DensityGrid> {
    density_grid_with(problem, window, n_points, &LadderOptions::default())
}

pub fn density_grid_with(
    problem: &Problem<'_>,
    window: (f64, f64),
    n_points: usize,
    ladder: &LadderOptions,
) -> Result<DensityGrid> {
    let grid = uniform_grid(window, n_points)?;
    let solved: Vec<Result<BoundaryPoint>> = grid.par_iter().map(|&e| problem.robust_boundary(e, ladder)).collect();
    let failed: Vec<usize> = solved.iter().enumerate().filter(|(_, r)| r.is_err()).map(|(k, _)| k).collect();
    if failed.len() as f64 > MAX_FAILURE_RATE * grid.len() as f64 {
        return Err(Error::LadderFailureRate { failed: failed.len(), total: grid.len() });
    }
    let n = grid.len();
    let pair = problem.kind() == ResultKind::Pair;
    let mut density = vec![0.0; n];
    let mut im_omega = vec![0.0; n];
    let mut im_alpha = if pair { vec![0.0; n] } else { Vec::new() };
    let mut boundary_error = vec![0.0; n];
    let mut divergent = vec![false; n];
    let mut max_residual: f64 = 0.0;
    let mut max_inequality: f64 = 0.0;
    for (k, r) in solved.iter().enumerate() {
        if let Ok(b) = r {
            density[k] = b.density;
            im_omega[k] = b.im_omega;
            if pair {
                im_alpha[k] = b.im_omega_alpha.unwrap_or(f64::NAN);
            }
            boundary_error[k] = b.boundary_error;
            divergent[k] = b.divergent;
            max_residual = max_residual.max(b.max_residual);
            max_inequality = max_inequality.max(b.max_inequality);
        }
    }
    // Interpolate the rare failed points from their nearest good neighbours.
    let good: Vec<usize> = (0..n).filter(|k| solved[*k].is_ok()).collect();
    if good.is_empty() {
        return Err(Error::LadderFailureRate { failed: n, total: n });
    }
    for &k in &failed {
        let right = good.partition_point(|&g| g < k);
        let (l, r) = (good.get(right.wrapping_sub(1)).copied(), good.get(right).copied());
        let (l, r) = (l.unwrap_or_else(|| r.unwrap()), r.unwrap_or_else(|| l.unwrap()));
        let s = if r > l { (k - l) as f64 / (r - l) as f64 } else { 0.0 };
        let lerp = |v: &[f64]| v[l] * (1.0 - s) + v[r] * s;
        density[k] = lerp(&density);
        im_omega[k] = lerp(&im_omega);
        if pair {
            im_alpha[k] = lerp(&im_alpha);
        }
        boundary_error[k] = f64::INFINITY;
    }
    Ok(DensityGrid {
        kind: problem.kind(),
        grid,
        density,
        im_omega,
        im_omega_alpha: im_alpha,
        boundary_error,
        divergent,
        failed,
        max_residual,
        max_inequality,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "C0")]
    pub c0: usize,
    #[serde(rename = "Cinf")]
    pub cinf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMismatch {
    pub detected: f64,
    pub nearest_candidate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub components: Vec<(f64, f64)>,
    pub interior_zeros: Vec<f64>,
    pub divergence_points: Vec<f64>,
    pub counts: Counts,
    /// Semigroup edges farther than 1e-6 from every edge-equation candidate.
    pub edge_mismatches: Vec<EdgeMismatch>,
    pub threshold: f64,
    /// Extra ladder solves spent on refinement.
    pub refinement_solves: usize,
}

struct Refiner<'p, 'a> {
    problem: &'p Problem<'a>,
    ladder: LadderOptions,
    threshold: f64,
    solves: usize,
}

impl Refiner<'_, '_> {
    fn im_omega(&mut self, e: f64) -> Result<f64> {
        self.solves += 1;
        Ok(self.problem.robust_boundary(e, &self.ladder)?.im_omega)
    }

    fn inside(&mut self, e: f64) -> Result<bool> {
        Ok(self.im_omega(e)? > self.threshold)
    }

    /// Crossing between `out` (outside) and `inn` (inside), to `EDGE_TOLERANCE`.
    fn crossing(&mut self, mut out: f64, mut inn: f64) -> Result<f64> {
        while (inn - out).abs() > EDGE_TOLERANCE {
            let mid = 0.5 * (out + inn);
            if self.inside(mid)? {
                inn = mid;
            } else {
                out = mid;
            }
        }
        Ok(0.5 * (out + inn))
    }
}

/// Components, interior zeros and divergence points of the result on `dg`.
pub fn detect_support(dg: &DensityGrid, problem: &Problem<'_>) -> Result<SupportReport> {
    detect_support_with(dg, problem, &LadderOptions::default())
}

pub fn detect_support_with(dg: &DensityGrid, problem: &Problem<'_>, ladder: &LadderOptions) -> Result<SupportReport> {
    let n = dg.len();
    if n < 3 || dg.kind != problem.kind() {
        return Err(Error::InvalidGrid("grid does not match the problem".into()));
    }
    let h = dg.spacing();
    let peak = dg.im_omega.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidGrid("Im ω vanishes on the whole grid".into()));
    }
    let threshold = SUPPORT_THRESHOLD * peak;
    let hovering = dg
        .im_omega
        .iter()
        .filter(|&&v| v >= 0.1 * threshold && v <= 10.0 * threshold)
        .count();
    if hovering as f64 > 0.01 * n as f64 {
        return Err(Error::ThresholdAmbiguity(hovering));
    }

    let divergence = problem.divergence_points().to_vec();
    let near_divergence = |e: f64| divergence.iter().any(|&d| (e - d).abs() <= 3.0 * h);
    let mut inside: Vec<bool> = dg.im_omega.iter().map(|&v| v > threshold).collect();
    // Short dips at points of diverging density are not gaps.
    let mut k = 0;
    while k < n {
        if inside[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && !inside[k] {
            k += 1;
        }
        let bounded = start > 0 && k < n;
        if bounded && k - start <= 3 && (start..k).any(|j| near_divergence(dg.grid[j])) {
            inside[start..k].iter_mut().for_each(|v| *v = true);
        }
    }
    if inside[0] || inside[n - 1] {
        return Err(Error::InvalidGrid("support touches the window boundary".into()));
    }

    let mut refiner = Refiner {
        problem,
        ladder: ladder.clone(),
        threshold,
        solves: 0,
    };

    // Runs of grid points inside the support.
    let mut runs = Vec::new();
    let mut k = 0;
    while k < n {
        if !inside[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && inside[k] {
            k += 1;
        }
        runs.push((start, k - 1));
    }

    let mut components = Vec::new();
    let mut interior_zeros = Vec::new();
    for &(first, last) in &runs {
        let left = refiner.crossing(dg.grid[first - 1], dg.grid[first])?;
        let right = refiner.crossing(dg.grid[last + 1], dg.grid[last])?;
        // Local minima of Im ω hide gaps and zeros narrower than the grid.
        let mut cuts: Vec<(f64, f64)> = Vec::new();
        for j in first + 1..last {
            let v = &dg.im_omega;
            if !(v[j] < v[j - 1] && v[j] <= v[j + 1]) || near_divergence(dg.grid[j]) {
                continue;
            }
            let (lo, hi) = (dg.grid[j - 1], dg.grid[j + 1]);
            let mut failure = None;
            let (e_min, f_min) = golden_min(
                |e| match refiner.im_omega(e) {
                    Ok(v) => v,
                    Err(err) => {
                        failure = Some(err);
                        f64::INFINITY
                    }
                },
                lo,
                hi,
                0.1 * EDGE_TOLERANCE,
            );
            if let Some(err) = failure {
                return Err(err);
            }
            if f_min > threshold {
                continue;
            }
            let g_left = refiner.crossing(e_min, lo)?;
            let g_right = refiner.crossing(e_min, hi)?;
            if g_right - g_left < ZERO_WIDTH {
                interior_zeros.push(e_min);
            } else {
                cuts.push((g_left, g_right));
            }
        }
        let mut start = left;
        for (gl, gr) in cuts {
            components.push((start, gl));
            start = gr;
        }
        components.push((start, right));
    }

    // A divergence point counts when the density grows sharply towards it.
    let mut divergence_points = Vec::new();
    for &d in &divergence {
        let mut diverges = false;
        for dir in [-1.0, 1.0] {
            let near = problem.robust_boundary(d + dir * 1e-8, ladder);
            let far = problem.robust_boundary(d + dir * 1e-3, ladder);
            if let (Ok(near), Ok(far)) = (near, far) {
                refiner.solves += 2;
                if near.density > 5.0 * far.density && near.density > 1.0 {
                    diverges = true;
                }
            }
        }
        if diverges {
            divergence_points.push(d);
        }
    }

    let mut edge_mismatches = Vec::new();
    if let Some((mu, t)) = problem.semigroup_input() {
        let mut candidates: Vec<f64> = semigroup_edges(mu, t)?.into_iter().map(|c| c.energy).collect();
        candidates.extend_from_slice(&divergence);
        for &(l, r) in &components {
            for edge in [l, r] {
                let nearest = candidates
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - edge).abs().total_cmp(&(b - edge).abs()));
                match nearest {
                    Some(c) if (c - edge).abs() <= EDGE_MISMATCH => {}
                    Some(c) => edge_mismatches.push(EdgeMismatch { detected: edge, nearest_candidate: c }),
                    None => edge_mismatches.push(EdgeMismatch { detected: edge, nearest_candidate: f64::NAN }),
                }
            }
        }
    }

    interior_zeros.sort_by(f64::total_cmp);
    Ok(SupportReport {
        counts: Counts {
            i: components.len(),
            c0: interior_zeros.len(),
            cinf: divergence_points.len(),
        },
        components,
        interior_zeros,
        divergence_points,
        edge_mismatches,
        threshold,
        refinement_solves: refiner.solves,
    })
}

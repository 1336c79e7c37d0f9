//! Subordination solvers.
//!
//! Both problems are written with the shifted reciprocal `H(w) = F(w) - w`:
//!
//! - semigroup: `ω - z - (t - 1) H_μ(ω) = 0`, equivalent to
//!   `t ω - z = (t - 1) F_μ(ω)`;
//! - pair: `ω_α = z + H_α(ω_β)` and `ω_β = z + H_β(ω_α)`, equivalent to
//!   `ω_α + ω_β - z = F_α(ω_β) = F_β(ω_α)`.
//!
//! Each has a unique solution in the upper half-plane, so any convergent
//! iteration that stays there finds it. Newton steps with a residual line
//! search do most of the work; when a step cannot reduce the residual the
//! solver falls back to the damped Denjoy–Wolff (Picard) map with Anderson
//! acceleration. Real points are reached by a warm-started ladder of
//! decreasing heights `η` followed by Richardson extrapolation to `η = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MultiCutMeasure;
use crate::transform::{evaluate, CauchyTransform, TransformValue};

pub const PAIR_TOLERANCE: f64 = 1e-10;
pub const SEMIGROUP_TOLERANCE: f64 = 1e-12;
pub const DIVERGENCE_EPS: f64 = 1e-8;
pub const DIVERGENCE_PROXIMITY: f64 = 1e-4;
/// Densities above this are capped and flagged as divergent.
pub const DENSITY_CAP: f64 = 1e6;

const NEWTON_STEPS: usize = 100;
const LINE_SEARCH_HALVINGS: usize = 40;
const PICARD_STEPS: usize = 100_000;
const ANDERSON_DEPTH: usize = 3;
const SEMIGROUP_PICARD_STEPS: usize = 10_000;

/// A subordination value that may have escaped to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Omega {
    Finite(Complex64),
    Infinite,
}

impl Omega {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Omega::Finite(w) => Some(w),
            Omega::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationPair {
    pub omega_alpha: Omega,
    pub omega_beta: Omega,
    /// `|ω_α + ω_β - z - F_α(ω_β)| + |F_α(ω_β) - F_β(ω_α)|`.
    pub residual: f64,
    pub iterations: usize,
    /// Gap zero of `m_α` approached by `ω_β` while `ω_α` diverges.
    pub diverged_near: Option<f64>,
    /// Last finite iterates, kept for warm starts.
    pub raw_alpha: Complex64,
    pub raw_beta: Complex64,
}

impl SubordinationPair {
    /// `max(1, |ω_α|, |ω_β|)`; the residual contract is relative to this.
    pub fn scale(&self) -> f64 {
        1f64.max(self.raw_alpha.norm()).max(self.raw_beta.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupPoint {
    pub omega_t: Complex64,
    /// `|t ω_t - z - (t - 1) F_μ(ω_t)|`.
    pub residual: f64,
    pub iterations: usize,
}

fn check_z(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() || z.im < 0.0 {
        return Err(Error::InvalidPoint { re: z.re, im: z.im });
    }
    Ok(())
}

/// Anderson-accelerated damped fixed-point iteration for a map of the upper
/// half-plane. `step` returns the image of a point and the residual there.
fn anderson<G>(start: Complex64, tolerance: f64, max_steps: usize, mut step: G) -> Result<(Complex64, f64, usize)>
where
    G: FnMut(Complex64) -> Result<(Complex64, f64)>,
{
    let mut x = start;
    let (mut gx, mut res) = step(x)?;
    let mut damping = 1.0;
    let mut dx: Vec<[f64; 2]> = Vec::new();
    let mut df: Vec<[f64; 2]> = Vec::new();
    let mut f = gx - x;
    for k in 0..max_steps {
        if res <= tolerance * 1f64.max(x.norm()) {
            return Ok((x, res, k));
        }
        // Anderson candidate from the stored differences.
        let mut candidate = x + damping * f;
        if !dx.is_empty() {
            let m = dx.len();
            let mut normal = vec![vec![0.0; m]; m];
            let mut rhs = vec![0.0; m];
            let mut trace = 0.0;
            for i in 0..m {
                for j in 0..m {
                    normal[i][j] = df[i][0] * df[j][0] + df[i][1] * df[j][1];
                }
                rhs[i] = df[i][0] * f.re + df[i][1] * f.im;
                trace += normal[i][i];
            }
            let ridge = 1e-10 * trace.max(f64::MIN_POSITIVE);
            for (i, row) in normal.iter_mut().enumerate() {
                row[i] += ridge;
            }
            if let Some(gamma) = solve_dense(normal, rhs) {
                let mut corr = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let dxi = Complex64::new(dx[i][0], dx[i][1]);
                    let dfi = Complex64::new(df[i][0], df[i][1]);
                    corr += gamma[i] * (dxi + damping * dfi);
                }
                let accelerated = x + damping * f - corr;
                if accelerated.im > 0.0 && accelerated.is_finite() {
                    candidate = accelerated;
                }
            }
        }
        let mut accepted = None;
        for attempt in [candidate, x + damping * f] {
            if !(attempt.im > 0.0) {
                continue;
            }
            if let Ok((g_new, res_new)) = step(attempt) {
                if res_new < res || attempt == x + damping * f {
                    accepted = Some((attempt, g_new, res_new));
                    break;
                }
            }
        }
        let Some((x_new, g_new, res_new)) = accepted else {
            damping *= 0.5;
            dx.clear();
            df.clear();
            if damping < 1e-6 {
                return Err(Error::IterationLimit { iterations: k, residual: res });
            }
            continue;
        };
        if res_new > res {
            damping = (damping * 0.5).max(1e-3);
        }
        let f_new = g_new - x_new;
        dx.push([(x_new - x).re, (x_new - x).im]);
        df.push([(f_new - f).re, (f_new - f).im]);
        if dx.len() > ANDERSON_DEPTH {
            dx.remove(0);
            df.remove(0);
        }
        x = x_new;
        gx = g_new;
        f = gx - x;
        res = res_new;
    }
    Err(Error::IterationLimit { iterations: max_steps, residual: res })
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

// ---------------------------------------------------------------- semigroup

struct SemigroupEval {
    omega: Complex64,
    value: TransformValue,
    g: Complex64,
}

fn semigroup_eval(mu: &MultiCutMeasure, t: f64, z: Complex64, omega: Complex64) -> Result<SemigroupEval> {
    let value = evaluate(mu, omega)?;
    let g = omega - z - (t - 1.0) * value.shifted()?;
    Ok(SemigroupEval { omega, value, g })
}

/// Solve `t ω - z = (t - 1) F_μ(ω)` at `z` with `Im z > 0`, starting from `guess`.
pub fn solve_semigroup_from(
    mu: &MultiCutMeasure,
    t: f64,
    z: Complex64,
    guess: Complex64,
) -> Result<SemigroupPoint> {
    check_z(z)?;
    if !(t > 1.0) {
        return Err(Error::InvalidTime(t));
    }
    if z.im == 0.0 {
        for atom in mu.atoms() {
            if atom.mass >= 1.0 - 1.0 / t - 1e-9 && z.re == t * atom.location {
                return Err(Error::AtomImage(z.re));
            }
        }
    }
    let tol = SEMIGROUP_TOLERANCE;
    let start = if guess.im > 0.0 { guess } else { Complex64::new(guess.re, z.im.max(1e-300)) };
    let mut current = semigroup_eval(mu, t, z, start);
    let mut iterations = 0;
    if let Ok(mut cur) = current.as_ref().map(|c| SemigroupEval { ..*c }) {
        for _ in 0..NEWTON_STEPS {
            let scale = 1f64.max(cur.omega.norm());
            if cur.g.norm() <= tol * scale {
                return Ok(SemigroupPoint { omega_t: cur.omega, residual: cur.g.norm(), iterations });
            }
            iterations += 1;
            let derivative = 1.0 - (t - 1.0) * cur.value.shifted_prime()?;
            let step = -cur.g / derivative;
            let mut lambda = 1.0;
            let mut next = None;
            for _ in 0..LINE_SEARCH_HALVINGS {
                let trial = cur.omega + lambda * step;
                if trial.im > 0.0 && trial.is_finite() {
                    if let Ok(e) = semigroup_eval(mu, t, z, trial) {
                        if e.g.norm() < (1.0 - 1e-4 * lambda) * cur.g.norm() {
                            next = Some(e);
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            match next {
                Some(e) => cur = e,
                None => break,
            }
        }
        current = Ok(cur);
    }

    // Damped Denjoy–Wolff iteration ω ↦ z/t + (1 - 1/t) F_μ(ω).
    let from = current.map(|c| c.omega).unwrap_or(z + Complex64::new(0.0, 1.0));
    let map = |w: Complex64| -> Result<(Complex64, f64)> {
        let e = semigroup_eval(mu, t, z, w)?;
        let f = e.value.shifted()? + w;
        Ok((z / t + (1.0 - 1.0 / t) * f, e.g.norm()))
    };
    let (omega, residual, steps) = anderson(from, tol, SEMIGROUP_PICARD_STEPS, map)?;
    Ok(SemigroupPoint { omega_t: omega, residual, iterations: iterations + steps })
}

/// Heights halving from `max(1, |z|)` down to `Im z`: the warm-start path
/// for points where a cold start fails.
fn descent(z: Complex64) -> Vec<f64> {
    let eta = z.im;
    let top = 1f64.max(z.norm());
    let mut out: Vec<f64> = std::iter::successors(Some(top), |h| Some(0.5 * h)).take_while(|&h| h > eta).collect();
    out.push(eta);
    out
}

/// Semigroup subordination at `z`. Real `z` is reached through the ladder.
pub fn solve_semigroup(mu: &MultiCutMeasure, t: f64, z: Complex64) -> Result<SemigroupPoint> {
    check_z(z)?;
    if z.im > 0.0 {
        let start = z + Complex64::new(0.0, 1.0);
        return solve_semigroup_from(mu, t, z, start).or_else(|first| {
            let mut last = None;
            for eta in descent(z) {
                let at = Complex64::new(z.re, eta);
                let guess = last.as_ref().map_or(at + Complex64::new(0.0, 1.0), |p: &SemigroupPoint| p.omega_t);
                last = Some(solve_semigroup_from(mu, t, at, guess).map_err(|_| first.clone())?);
            }
            Ok(last.expect("nonempty descent"))
        });
    }
    let b = semigroup_boundary(mu, t, z.re, &LadderOptions::default())?;
    Ok(SemigroupPoint {
        omega_t: b.omega,
        residual: b.max_residual,
        iterations: b.iterations,
    })
}

// --------------------------------------------------------------------- pair

struct PairEval {
    alpha: Complex64,
    beta: Complex64,
    dh_alpha: Complex64,
    dh_beta: Complex64,
    r1: Complex64,
    r2: Complex64,
}

impl PairEval {
    /// Each equation measured against the size of its own unknown: when
    /// `ω_α` diverges, `H_α(ω_β)` carries its magnitude while the second
    /// equation stays O(1).
    fn norm(&self) -> f64 {
        self.r1.norm() / 1f64.max(self.alpha.norm()) + self.r2.norm() / 1f64.max(self.beta.norm())
    }
    fn converged(&self, tol: f64) -> bool {
        self.r1.norm() <= tol * 1f64.max(self.alpha.norm()) && self.r2.norm() <= tol * 1f64.max(self.beta.norm())
    }
    fn residual(&self) -> f64 {
        self.r1.norm() + (self.r2 - self.r1).norm()
    }
}

fn pair_eval<A, B>(alpha_t: &A, beta_t: &B, z: Complex64, alpha: Complex64, beta: Complex64) -> Result<PairEval>
where
    A: CauchyTransform + ?Sized,
    B: CauchyTransform + ?Sized,
{
    let va = alpha_t.evaluate(beta)?;
    let vb = beta_t.evaluate(alpha)?;
    let h_alpha = va.shifted()?;
    let h_beta = vb.shifted()?;
    Ok(PairEval {
        alpha,
        beta,
        dh_alpha: va.shifted_prime()?,
        dh_beta: vb.shifted_prime()?,
        r1: alpha - z - h_alpha,
        r2: beta - z - h_beta,
    })
}

/// Solve the pair system at `z` (`Im z > 0`) from the given starting values.
pub fn solve_pair_from<A, B>(
    alpha_t: &A,
    beta_t: &B,
    z: Complex64,
    alpha0: Complex64,
    beta0: Complex64,
) -> Result<SubordinationPair>
where
    A: CauchyTransform + ?Sized,
    B: CauchyTransform + ?Sized,
{
    check_z(z)?;
    let tol = PAIR_TOLERANCE;
    let mut iterations = 0;
    let reduced = |primary_alpha: bool, a: Complex64, b: Complex64, iterations: &mut usize| {
        let solved = if primary_alpha {
            reduced_newton(beta_t, alpha_t, z, a, tol)
        } else {
            reduced_newton(alpha_t, beta_t, z, b, tol).map(|(b, a, k)| (a, b, k))
        };
        let (a, b, steps) = solved.ok()?;
        *iterations += steps;
        accept_pair(alpha_t, beta_t, z, a, b, *iterations, tol)
    };

    // Eliminating the larger unknown keeps Newton well scaled when one
    // subordination function runs off to infinity.
    let alpha_first = alpha0.norm() <= beta0.norm();
    if let Some(pair) = reduced(alpha_first, alpha0, beta0, &mut iterations) {
        return Ok(pair);
    }

    let mut fallback_beta = beta0;
    if let Ok(mut cur) = pair_eval(alpha_t, beta_t, z, alpha0, beta0) {
        for _ in 0..NEWTON_STEPS {
            if cur.converged(tol) {
                return Ok(SubordinationPair {
                    omega_alpha: Omega::Finite(cur.alpha),
                    omega_beta: Omega::Finite(cur.beta),
                    residual: cur.residual(),
                    iterations,
                    diverged_near: None,
                    raw_alpha: cur.alpha,
                    raw_beta: cur.beta,
                });
            }
            iterations += 1;
            let det = 1.0 - cur.dh_alpha * cur.dh_beta;
            let d_alpha = (-cur.r1 - cur.dh_alpha * cur.r2) / det;
            let d_beta = (-cur.r2 - cur.dh_beta * cur.r1) / det;
            let mut lambda = 1.0;
            let mut next = None;
            for _ in 0..LINE_SEARCH_HALVINGS {
                let a = cur.alpha + lambda * d_alpha;
                let b = cur.beta + lambda * d_beta;
                if a.im > 0.0 && b.im > 0.0 && a.is_finite() && b.is_finite() {
                    if let Ok(e) = pair_eval(alpha_t, beta_t, z, a, b) {
                        if e.norm() < (1.0 - 1e-4 * lambda) * cur.norm() {
                            next = Some(e);
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            match next {
                Some(e) => cur = e,
                None => break,
            }
        }
        let alpha_first = cur.alpha.norm() <= cur.beta.norm();
        for primary_alpha in [alpha_first, !alpha_first] {
            if let Some(pair) = reduced(primary_alpha, cur.alpha, cur.beta, &mut iterations) {
                return Ok(pair);
            }
        }
        fallback_beta = cur.beta;
    }

    // Denjoy–Wolff map f_β(ω) = z + H_β(z + H_α(ω)).
    let map = |w: Complex64| -> Result<(Complex64, f64)> {
        let ha = alpha_t.evaluate(w)?.shifted()?;
        let a = z + ha;
        let hb = beta_t.evaluate(a)?.shifted()?;
        let image = z + hb;
        // With ω_α = z + H_α(ω) the first residual vanishes.
        Ok((image, (w - image).norm()))
    };
    let start = if fallback_beta.im > 0.0 { fallback_beta } else { z + Complex64::new(0.0, 1.0) };
    let (beta, _, steps) = anderson(start, tol, PICARD_STEPS, map)?;
    let alpha = z + alpha_t.evaluate(beta)?.shifted()?;
    accept_pair(alpha_t, beta_t, z, alpha, beta, iterations + steps, tol).ok_or_else(|| {
        let residual = pair_eval(alpha_t, beta_t, z, alpha, beta).map_or(f64::NAN, |e| e.residual());
        Error::IterationLimit { iterations: iterations + steps, residual }
    })
}

fn accept_pair<A, B>(
    alpha_t: &A,
    beta_t: &B,
    z: Complex64,
    alpha: Complex64,
    beta: Complex64,
    iterations: usize,
    tol: f64,
) -> Option<SubordinationPair>
where
    A: CauchyTransform + ?Sized,
    B: CauchyTransform + ?Sized,
{
    let e = pair_eval(alpha_t, beta_t, z, alpha, beta).ok()?;
    e.converged(tol).then(|| SubordinationPair {
        omega_alpha: Omega::Finite(alpha),
        omega_beta: Omega::Finite(beta),
        residual: e.residual(),
        iterations,
        diverged_near: None,
        raw_alpha: alpha,
        raw_beta: beta,
    })
}

/// Newton on `g(u) = u - z - H_Q(z + H_P(u))`, the pair system with the
/// second unknown `v = z + H_P(u)` eliminated. `Im v ≥ Im z` holds for every
/// iterate, so this stays usable when `v` runs off to infinity.
fn reduced_newton<P, Q>(p: &P, q: &Q, z: Complex64, u0: Complex64, tol: f64) -> Result<(Complex64, Complex64, usize)>
where
    P: CauchyTransform + ?Sized,
    Q: CauchyTransform + ?Sized,
{
    let eval = |u: Complex64| -> Result<(Complex64, Complex64, Complex64)> {
        let vp = p.evaluate(u)?;
        let v = z + vp.shifted()?;
        let vq = q.evaluate(v)?;
        let g = u - z - vq.shifted()?;
        let dg = 1.0 - vq.shifted_prime()? * vp.shifted_prime()?;
        Ok((v, g, dg))
    };
    let merit = |u: Complex64, g: Complex64| g.norm() / 1f64.max(u.norm());
    let mut u = u0;
    let (mut v, mut g, mut dg) = eval(u)?;
    for k in 0..NEWTON_STEPS {
        if g.norm() <= tol * 1f64.max(u.norm()) {
            return Ok((u, v, k));
        }
        let step = -g / dg;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            let cand = u + lambda * step;
            if cand.im > 0.0 && cand.is_finite() {
                if let Ok((cv, cg, cdg)) = eval(cand) {
                    if merit(cand, cg) < (1.0 - 1e-4 * lambda) * merit(u, g) {
                        (u, v, g, dg) = (cand, cv, cg, cdg);
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::IterationLimit { iterations: NEWTON_STEPS, residual: g.norm() })
}

fn flag_divergence(pair: &mut SubordinationPair, zeros: &[f64]) {
    if pair.raw_alpha.norm() <= 1.0 / DIVERGENCE_EPS {
        return;
    }
    if let Some(&e) = zeros
        .iter()
        .find(|&&e| (pair.raw_beta - Complex64::new(e, 0.0)).norm() < DIVERGENCE_PROXIMITY)
    {
        pair.diverged_near = Some(e);
        pair.omega_alpha = Omega::Infinite;
    }
}

/// Pair subordination at `z`. Real `z` is reached through the ladder.
pub fn solve_pair(alpha: &MultiCutMeasure, beta: &MultiCutMeasure, z: Complex64) -> Result<SubordinationPair> {
    check_z(z)?;
    if z.im > 0.0 {
        let start = z + Complex64::new(0.0, 1.0);
        let mut pair = solve_pair_from(alpha, beta, z, start, start).or_else(|first| {
            let mut last = None;
            for eta in descent(z) {
                let at = Complex64::new(z.re, eta);
                let cold = at + Complex64::new(0.0, 1.0);
                let (ga, gb) = last
                    .as_ref()
                    .map_or((cold, cold), |p: &SubordinationPair| (p.raw_alpha, p.raw_beta));
                last = Some(solve_pair_from(alpha, beta, at, ga, gb).map_err(|_| first.clone())?);
            }
            Ok::<_, Error>(last.expect("nonempty descent"))
        })?;
        flag_divergence(&mut pair, &alpha.gap_zeros());
        return Ok(pair);
    }
    let b = pair_boundary(alpha, beta, z.re, &LadderOptions::default())?;
    Ok(SubordinationPair {
        omega_alpha: b.omega_alpha.unwrap_or(Omega::Infinite),
        omega_beta: Omega::Finite(b.omega),
        residual: b.max_residual,
        iterations: b.iterations,
        diverged_near: b.diverged_near,
        raw_alpha: b.raw_alpha.unwrap_or_default(),
        raw_beta: b.omega,
    })
}

// ------------------------------------------------------------------- ladder

/// Heights of the continuation ladder, strictly decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderOptions {
    pub eta_levels: Vec<f64>,
}

impl LadderOptions {
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Self {
        Self {
            eta_levels: (0..count).map(|k| start * ratio.powi(k as i32)).collect(),
        }
    }

    pub fn final_eta(&self) -> f64 {
        *self.eta_levels.last().expect("nonempty ladder")
    }
}

impl Default for LadderOptions {
    /// `1, 1/2, …, 2^-30 ≈ 9.3e-10`.
    fn default() -> Self {
        Self::geometric(1.0, 0.5, 31)
    }
}

/// Value at `η = 0` from the last three levels, and the disagreement between
/// the quadratic and linear extrapolants.
pub fn richardson(etas: &[f64], values: &[Complex64]) -> (Complex64, f64) {
    let n = values.len();
    match n {
        0 => (Complex64::new(f64::NAN, f64::NAN), f64::INFINITY),
        1 => (values[0], f64::INFINITY),
        _ => {
            let lagrange = |pts: &[(f64, Complex64)]| -> Complex64 {
                let mut total = Complex64::new(0.0, 0.0);
                for (i, &(xi, yi)) in pts.iter().enumerate() {
                    let mut basis = 1.0;
                    for (j, &(xj, _)) in pts.iter().enumerate() {
                        if i != j {
                            basis *= xj / (xj - xi);
                        }
                    }
                    total += basis * yi;
                }
                total
            };
            let pts: Vec<(f64, Complex64)> = etas.iter().copied().zip(values.iter().copied()).collect();
            let linear = lagrange(&pts[n - 2..]);
            if n == 2 {
                return (linear, (linear - values[1]).norm());
            }
            let quadratic = lagrange(&pts[n - 3..]);
            (quadratic, (quadratic - linear).norm())
        }
    }
}

/// Boundary values at a real energy obtained from the continuation ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub energy: f64,
    /// Density `Im m(E + i0)/π`, capped at [`DENSITY_CAP`].
    pub density: f64,
    pub divergent: bool,
    /// `Im ω_β(E)` (pair) or `Im ω_t(E)` (semigroup), clamped at 0.
    pub im_omega: f64,
    /// `Im ω_α(E)` for the pair problem; infinite when `ω_α` diverges.
    pub im_omega_alpha: Option<f64>,
    /// Extrapolated `ω_β` or `ω_t`.
    pub omega: Complex64,
    pub omega_alpha: Option<Omega>,
    pub raw_alpha: Option<Complex64>,
    pub boundary_error: f64,
    pub diverged_near: Option<f64>,
    /// Largest scaled residual over all ladder levels.
    pub max_residual: f64,
    /// Largest `I_μ̂(ω_t)` or `I_μ̂α(ω_β) I_μ̂β(ω_α)` over all levels.
    pub max_inequality: f64,
    pub iterations: usize,
    pub eta_final: f64,
    /// Density at the three lowest levels (highest first).
    pub tail_density: [f64; 3],
    pub tail_im_omega: [f64; 3],
}

fn tail3(values: &[f64]) -> [f64; 3] {
    let n = values.len();
    let pick = |k: usize| if n > k { values[n - 1 - k] } else { f64::NAN };
    [pick(2), pick(1), pick(0)]
}

fn extrapolate_real(etas: &[f64], values: &[f64]) -> (f64, f64) {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (v, err) = richardson(etas, &complex);
    (v.re, err)
}

/// Continue the semigroup solution down the ladder at real energy `energy`.
pub fn semigroup_boundary(mu: &MultiCutMeasure, t: f64, energy: f64, ladder: &LadderOptions) -> Result<BoundaryPoint> {
    if !(t > 1.0) {
        return Err(Error::InvalidTime(t));
    }
    let etas = &ladder.eta_levels;
    let mut guess = Complex64::new(energy, etas[0] + 1.0);
    let mut omegas = Vec::with_capacity(etas.len());
    let mut densities = Vec::with_capacity(etas.len());
    let mut max_residual: f64 = 0.0;
    let mut max_inequality: f64 = 0.0;
    let mut iterations = 0;
    let mut last_good = f64::NAN;
    for &eta in etas {
        let z = Complex64::new(energy, eta);
        let point = solve_semigroup_from(mu, t, z, guess)
            .map_err(|_| Error::LadderBreak { eta, last_good })?;
        let value = evaluate(mu, point.omega_t).map_err(|_| Error::LadderBreak { eta, last_good })?;
        let omega = point.omega_t;
        max_residual = max_residual.max(point.residual / 1f64.max(omega.norm()));
        let h = value.shifted()?;
        max_inequality = max_inequality.max(h.im / omega.im);
        iterations += point.iterations;
        omegas.push(omega);
        densities.push(value.m.im / std::f64::consts::PI);
        guess = omega;
        last_good = eta;
    }
    let (omega, _) = richardson(etas, &omegas);
    let (density, density_err) = extrapolate_real(etas, &densities);
    let im_values: Vec<f64> = omegas.iter().map(|w| w.im).collect();
    let (im_omega, _) = extrapolate_real(etas, &im_values);
    let raw_density = density.max(0.0);
    let divergent = !raw_density.is_finite() || raw_density > DENSITY_CAP;
    Ok(BoundaryPoint {
        energy,
        density: if divergent { DENSITY_CAP } else { raw_density },
        divergent,
        im_omega: im_omega.max(0.0),
        im_omega_alpha: None,
        omega: Complex64::new(omega.re, omega.im.max(0.0)),
        omega_alpha: None,
        raw_alpha: None,
        boundary_error: density_err,
        diverged_near: None,
        max_residual,
        max_inequality,
        iterations,
        eta_final: ladder.final_eta(),
        tail_density: tail3(&densities),
        tail_im_omega: tail3(&im_values),
    })
}

/// Continue the pair solution down the ladder at real energy `energy`.
pub fn pair_boundary(
    alpha: &MultiCutMeasure,
    beta: &MultiCutMeasure,
    energy: f64,
    ladder: &LadderOptions,
) -> Result<BoundaryPoint> {
    pair_boundary_with_zeros(alpha, beta, energy, ladder, &alpha.gap_zeros())
}

pub(crate) fn pair_boundary_with_zeros<A, B>(
    alpha: &A,
    beta: &B,
    energy: f64,
    ladder: &LadderOptions,
    alpha_zeros: &[f64],
) -> Result<BoundaryPoint>
where
    A: CauchyTransform + ?Sized,
    B: CauchyTransform + ?Sized,
{
    let etas = &ladder.eta_levels;
    let start = Complex64::new(energy, etas[0] + 1.0);
    let (mut guess_a, mut guess_b) = (start, start);
    let mut betas = Vec::with_capacity(etas.len());
    let mut alphas = Vec::with_capacity(etas.len());
    let mut densities = Vec::with_capacity(etas.len());
    let mut max_residual: f64 = 0.0;
    let mut max_inequality: f64 = 0.0;
    let mut iterations = 0;
    let mut last_good = f64::NAN;
    for &eta in etas {
        let z = Complex64::new(energy, eta);
        let pair = solve_pair_from(alpha, beta, z, guess_a, guess_b)
            .map_err(|_| Error::LadderBreak { eta, last_good })?;
        let (a, b) = (pair.raw_alpha, pair.raw_beta);
        let va = alpha.evaluate(b).map_err(|_| Error::LadderBreak { eta, last_good })?;
        let vb = beta.evaluate(a).map_err(|_| Error::LadderBreak { eta, last_good })?;
        max_residual = max_residual.max(pair.residual / pair.scale());
        let hat_alpha = va.shifted()?.im / b.im;
        let hat_beta = vb.shifted()?.im / a.im;
        max_inequality = max_inequality.max(hat_alpha * hat_beta);
        iterations += pair.iterations;
        alphas.push(a);
        betas.push(b);
        densities.push(va.m.im / std::f64::consts::PI);
        guess_a = a;
        guess_b = b;
        last_good = eta;
    }
    let n = betas.len();
    let (omega, _) = richardson(etas, &betas);
    let (density, density_err) = extrapolate_real(etas, &densities);
    let im_values: Vec<f64> = betas.iter().map(|w| w.im).collect();
    let (im_omega, _) = extrapolate_real(etas, &im_values);

    let final_alpha = alphas[n - 1];
    let growing = n >= 2 && final_alpha.norm() > 1.8 * alphas[n - 2].norm();
    let near_zero = alpha_zeros
        .iter()
        .copied()
        .find(|&e| (betas[n - 1] - Complex64::new(e, 0.0)).norm() < DIVERGENCE_PROXIMITY);
    let diverged_near = near_zero.filter(|_| final_alpha.norm() > 1.0 / DIVERGENCE_EPS || (growing && final_alpha.norm() > 1e4));
    let (omega_alpha, im_alpha) = if diverged_near.is_some() {
        (Omega::Infinite, f64::INFINITY)
    } else {
        let (a, _) = richardson(etas, &alphas);
        (Omega::Finite(Complex64::new(a.re, a.im.max(0.0))), a.im.max(0.0))
    };

    let raw_density = density.max(0.0);
    let divergent = !raw_density.is_finite() || raw_density > DENSITY_CAP;
    Ok(BoundaryPoint {
        energy,
        density: if divergent { DENSITY_CAP } else { raw_density },
        divergent,
        im_omega: im_omega.max(0.0),
        im_omega_alpha: Some(im_alpha),
        omega: Complex64::new(omega.re, omega.im.max(0.0)),
        omega_alpha: Some(omega_alpha),
        raw_alpha: Some(final_alpha),
        boundary_error: density_err,
        diverged_near,
        max_residual,
        max_inequality,
        iterations,
        eta_final: ladder.final_eta(),
        tail_density: tail3(&densities),
        tail_im_omega: tail3(&im_values),
    })
}

// -------------------------------------------------- semigroup as a transform

/// `μ^{⊞t}` viewed through its Cauchy transform `m_μ(ω_t(z))`.
pub struct SemigroupTransform<'a> {
    pub mu: &'a MultiCutMeasure,
    pub t: f64,
}

impl CauchyTransform for SemigroupTransform<'_> {
    fn evaluate(&self, z: Complex64) -> Result<TransformValue> {
        if !(z.im > 0.0) {
            return Err(Error::InvalidPoint { re: z.re, im: z.im });
        }
        let t = self.t;
        let point = solve_semigroup_from(self.mu, t, z, z + Complex64::new(0.0, 1.0))?;
        let omega = point.omega_t;
        let value = evaluate(self.mu, omega)?;
        // ω' = 1/(t - (t - 1) F'(ω)) from differentiating t ω - z = (t - 1) F(ω).
        let omega_prime = (t - (t - 1.0) * value.f_prime()?).inv();
        let m = value.m;
        Ok(TransformValue {
            m,
            dm: value.dm * omega_prime,
            xm: 1.0 + z * m,
            i_sum: m.im / z.im,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_measure, ComponentSpec, MeasureSpec};
    use crate::transform::cauchy_m;

    fn semicircle(var: f64) -> MultiCutMeasure {
        build_measure(&MeasureSpec::semicircle(var)).unwrap()
    }

    fn semicircle_m(z: Complex64, var: f64) -> Complex64 {
        let r = 2.0 * var.sqrt();
        ((z - r).sqrt() * (z + r).sqrt() - z) / (2.0 * var)
    }

    #[test]
    fn semigroup_asymptote() {
        let mu = semicircle(1.0);
        let z = Complex64::new(0.0, 1e6);
        let p = solve_semigroup(&mu, 2.0, z).unwrap();
        assert!(((p.omega_t / z) - 1.0).norm() < 1e-3);
    }

    #[test]
    fn semigroup_of_semicircle_is_semicircle() {
        let mu = semicircle(1.0);
        for k in 0..20 {
            let z = Complex64::new(-3.0 + 0.3 * k as f64, 0.05 + 0.1 * (k % 4) as f64);
            let p = solve_semigroup(&mu, 2.0, z).unwrap();
            let m = cauchy_m(&mu, p.omega_t).unwrap();
            assert!((m - semicircle_m(z, 2.0)).norm() < 1e-8, "z = {z}");
            assert!(p.omega_t.im >= z.im);
        }
    }

    #[test]
    fn bernoulli_semigroup_gives_arcsine() {
        let mu = build_measure(&MeasureSpec::bernoulli()).unwrap();
        let z = Complex64::new(0.5, 1e-8);
        let p = solve_semigroup(&mu, 2.0, z).unwrap();
        let m = cauchy_m(&mu, p.omega_t).unwrap();
        let exact = 1.0 / (std::f64::consts::PI * (4.0f64 - 0.25).sqrt());
        assert!((m.im / std::f64::consts::PI - exact).abs() < 1e-6);
    }

    #[test]
    fn free_sum_of_semicircles() {
        let mu = semicircle(1.0);
        for &y in &[0.5, 1.0, 2.0] {
            let z = Complex64::new(0.0, y);
            let pair = solve_pair(&mu, &mu, z).unwrap();
            let (a, b) = (pair.raw_alpha, pair.raw_beta);
            assert!((a - b).norm() < 1e-10);
            let m = cauchy_m(&mu, b).unwrap();
            assert!((m - semicircle_m(z, 2.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn pair_asymptote() {
        let mu = semicircle(1.0);
        let z = Complex64::new(0.0, 1e6);
        let pair = solve_pair(&mu, &mu, z).unwrap();
        assert!((pair.raw_beta / z - 1.0).norm() < 1e-3);
    }

    #[test]
    fn richardson_recovers_quadratic() {
        let etas = [0.4, 0.2, 0.1];
        let f = |x: f64| Complex64::new(1.5 + 2.0 * x - 3.0 * x * x, -x);
        let values: Vec<Complex64> = etas.iter().map(|&e| f(e)).collect();
        let (v, _) = richardson(&etas, &values);
        assert!((v - Complex64::new(1.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn semicircle_boundary_density() {
        let mu = semicircle(1.0);
        let b = pair_boundary(&mu, &mu, 1.0, &LadderOptions::default()).unwrap();
        let exact = (8.0f64 - 1.0).sqrt() / (4.0 * std::f64::consts::PI);
        assert!((b.density - exact).abs() < 1e-6, "{} vs {exact}", b.density);
        assert!(b.max_inequality <= 1.0 + 1e-8);
    }

    #[test]
    fn gap_point_has_real_subordination() {
        let two_cut = build_measure(&MeasureSpec {
            components: vec![
                ComponentSpec { a: -6.0, b: -5.0, t_minus: 0.5, t_plus: 0.5, h: vec![1.0], weight: 0.5 },
                ComponentSpec { a: 5.0, b: 6.0, t_minus: 0.5, t_plus: 0.5, h: vec![1.0], weight: 0.5 },
            ],
            atoms: vec![],
            centered: true,
        })
        .unwrap();
        let narrow = semicircle(0.0025);
        let b = pair_boundary(&two_cut, &narrow, 0.0, &LadderOptions::default()).unwrap();
        assert!(b.im_omega < 1e-6);
        assert!(b.omega.norm() < 1e-6, "ω_β(0) = {}", b.omega);
        assert_eq!(b.diverged_near.map(|e| e.abs() < 1e-9), Some(true));
        let inside = pair_boundary(&two_cut, &narrow, 5.5, &LadderOptions::default()).unwrap();
        assert!(inside.im_omega > 0.0);
        let tail = inside.tail_im_omega;
        assert!((tail[0] - tail[2]).abs() <= 0.01 * tail[2]);
    }

    #[test]
    fn semigroup_transform_composes() {
        // (μ^{⊞1.5}) ⊞ (μ^{⊞1.5}) = μ^{⊞3}.
        let mu = build_measure(&MeasureSpec {
            components: vec![
                ComponentSpec { a: -2.0, b: -1.0, t_minus: 0.3, t_plus: -0.2, h: vec![1.0], weight: 0.4 },
                ComponentSpec { a: 0.5, b: 2.0, t_minus: 0.5, t_plus: 0.5, h: vec![2.0, 0.3], weight: 0.6 },
            ],
            atoms: vec![],
            centered: false,
        })
        .unwrap();
        let half = SemigroupTransform { mu: &mu, t: 1.5 };
        for k in 0..20 {
            let z = Complex64::new(-4.0 + 0.45 * k as f64, 0.2 + 0.15 * (k % 3) as f64);
            let direct = solve_semigroup(&mu, 3.0, z).unwrap();
            let m_direct = cauchy_m(&mu, direct.omega_t).unwrap();
            let start = z + Complex64::new(0.0, 1.0);
            let pair = solve_pair_from(&half, &half, z, start, start).unwrap();
            let m_pair = half.evaluate(pair.raw_beta).unwrap().m;
            assert!((m_direct - m_pair).norm() < 1e-6, "z = {z}: {m_direct} vs {m_pair}");
        }
    }
}

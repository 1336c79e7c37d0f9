//! Cauchy–Stieltjes transforms and the quantities derived from them.
//!
//! All evaluations go through [`evaluate`], which accumulates four sums over
//! one quadrature rule per component:
//! `m = ∫ dμ/(x-w)`, `m' = ∫ dμ/(x-w)^2`, `∫ x dμ/(x-w) = 1 + w m` and
//! `I = ∫ dμ/|x-w|^2`. The shifted reciprocal `F(w) - w` is formed as
//! `-(∫ x dμ/(x-w)) / m`, which stays accurate when `|w|` is huge.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{JacobiComponent, MultiCutMeasure, FAR_LEVELS};

/// Points in the closed upper half-plane.
pub type ComplexValue = Complex64;

const FAR_RATIO: f64 = 0.5;
const DOUBLING_TOLERANCE: f64 = 1e-12;
/// `|m|` below this makes `I_μ̂` report `+∞`.
pub const ZERO_FLAG: f64 = 1e-13;

/// Transform data of a measure at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub m: Complex64,
    pub dm: Complex64,
    /// `∫ x/(x - w) dμ`.
    pub xm: Complex64,
    /// `∫ 1/|x - w|^2 dμ`.
    pub i_sum: f64,
}

impl TransformValue {
    pub fn f(&self) -> Result<Complex64> {
        if self.m == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroOfTransform);
        }
        Ok(-self.m.inv())
    }

    pub fn f_prime(&self) -> Result<Complex64> {
        if self.m == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroOfTransform);
        }
        Ok(self.dm / (self.m * self.m))
    }

    /// `F(w) - w`.
    pub fn shifted(&self) -> Result<Complex64> {
        if self.m == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroOfTransform);
        }
        Ok(-self.xm / self.m)
    }

    /// `F'(w) - 1`.
    pub fn shifted_prime(&self) -> Result<Complex64> {
        Ok(self.f_prime()? - 1.0)
    }
}

/// Anything whose Cauchy transform can be evaluated on the closed upper
/// half-plane away from its support.
pub trait CauchyTransform: Sync {
    fn evaluate(&self, w: Complex64) -> Result<TransformValue>;

    /// Real zeros of `m` in bounded gaps of the support, when known.
    fn gap_zeros(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl CauchyTransform for MultiCutMeasure {
    fn evaluate(&self, w: Complex64) -> Result<TransformValue> {
        evaluate(self, w)
    }

    fn gap_zeros(&self) -> Vec<f64> {
        crate::analysis::gap_zeros(self)
    }
}

#[derive(Default, Clone, Copy)]
struct Sums {
    m: Complex64,
    dm: Complex64,
    xm: Complex64,
    i_sum: f64,
}

impl Sums {
    fn accumulate(&mut self, nodes: &[(f64, f64)], w: Complex64) {
        for &(x, weight) in nodes {
            let k = (Complex64::new(x, 0.0) - w).inv();
            self.m += weight * k;
            self.dm += weight * k * k;
            self.xm += weight * x * k;
            self.i_sum += weight * k.norm_sqr();
        }
    }

    fn add(&mut self, other: Sums) {
        self.m += other.m;
        self.dm += other.dm;
        self.xm += other.xm;
        self.i_sum += other.i_sum;
    }
}

fn check_point(w: Complex64) -> Result<()> {
    if !w.re.is_finite() || !w.im.is_finite() || w.im < 0.0 {
        return Err(Error::InvalidPoint { re: w.re, im: w.im });
    }
    Ok(())
}

fn distance_to_component(c: &JacobiComponent, w: Complex64) -> f64 {
    let nearest = w.re.clamp(c.left_endpoint(), c.right_endpoint());
    (w.re - nearest).hypot(w.im)
}

/// Smallest far-rule level whose order should already resolve the kernel.
fn starting_level(c: &JacobiComponent, w: Complex64) -> usize {
    let zeta = (2.0 * w - (c.left_endpoint() + c.right_endpoint())) / c.length();
    let root = (zeta * zeta - 1.0).sqrt();
    let rho = (zeta + root).norm().max((zeta - root).norm());
    let needed = 37.0 / (2.0 * rho.ln().max(1e-3)) + c.modulation_coeffs().len() as f64 / 2.0 + 2.0;
    let mut level = 0;
    while level + 2 < FAR_LEVELS && ((16usize << level) as f64) < needed {
        level += 1;
    }
    level
}

fn component_sums(c: &JacobiComponent, w: Complex64) -> Result<Sums> {
    let dist = distance_to_component(c, w);
    if dist == 0.0 {
        return Err(Error::OnSupport(w.re));
    }
    if dist >= FAR_RATIO * c.length() {
        let mut level = starting_level(c, w);
        let mut previous = Sums::default();
        previous.accumulate(&c.far_rule(level), w);
        while level + 1 < FAR_LEVELS {
            level += 1;
            let mut current = Sums::default();
            current.accumulate(&c.far_rule(level), w);
            let scale = current.m.norm() + c.weight() / (dist + c.length());
            if (current.m - previous.m).norm() <= DOUBLING_TOLERANCE * scale {
                return Ok(current);
            }
            previous = current;
        }
        Err(Error::QuadratureNonConvergent { re: w.re, im: w.im })
    } else {
        let mut nodes = Vec::with_capacity(256);
        c.graded_rule(w.re, dist, &mut nodes);
        let center = w.re.clamp(c.left_endpoint(), c.right_endpoint());
        let shift = Complex64::new(w.re - center, w.im);
        let mut sums = Sums::default();
        for &(x, d, weight) in &nodes {
            let k = (Complex64::new(d, 0.0) - shift).inv();
            sums.m += weight * k;
            sums.dm += weight * k * k;
            sums.xm += weight * x * k;
            sums.i_sum += weight * k.norm_sqr();
        }
        Ok(sums)
    }
}

/// Evaluate all transform sums of `mu` at `w` (closed upper half-plane).
pub fn evaluate(mu: &MultiCutMeasure, w: Complex64) -> Result<TransformValue> {
    check_point(w)?;
    let mut total = Sums::default();
    for c in mu.components() {
        total.add(component_sums(c, w)?);
    }
    for atom in mu.atoms() {
        let diff = Complex64::new(atom.location, 0.0) - w;
        if diff == Complex64::new(0.0, 0.0) {
            return Err(Error::OnAtom(atom.location));
        }
        let k = diff.inv();
        total.m += atom.mass * k;
        total.dm += atom.mass * k * k;
        total.xm += atom.mass * atom.location * k;
        total.i_sum += atom.mass * k.norm_sqr();
    }
    Ok(TransformValue {
        m: total.m,
        dm: total.dm,
        xm: total.xm,
        i_sum: total.i_sum,
    })
}

/// `m_μ(z) = ∫ dμ(x)/(x - z)`.
pub fn cauchy_m(mu: &MultiCutMeasure, z: ComplexValue) -> Result<Complex64> {
    Ok(evaluate(mu, z)?.m)
}

/// `F_μ = -1/m_μ`.
pub fn reciprocal_f(mu: &MultiCutMeasure, z: ComplexValue) -> Result<Complex64> {
    evaluate(mu, z)?.f()
}

pub fn m_prime(mu: &MultiCutMeasure, z: ComplexValue) -> Result<Complex64> {
    Ok(evaluate(mu, z)?.dm)
}

/// `F_μ' = m'/m^2`.
pub fn f_prime(mu: &MultiCutMeasure, z: ComplexValue) -> Result<Complex64> {
    evaluate(mu, z)?.f_prime()
}

/// `I_μ(w) = ∫ dμ/|x - w|^2`: `Im m / Im w` in the upper half-plane and
/// `m'(w)` on the real line off the support.
pub fn i_mu(mu: &MultiCutMeasure, w: ComplexValue) -> Result<f64> {
    let value = evaluate(mu, w)?;
    if w.im > 0.0 {
        Ok(value.m.im / w.im)
    } else {
        Ok(value.dm.re)
    }
}

/// `I_μ̂(w) = I_μ(w)/|m_μ(w)|^2 - 1`; `+∞` at (numerical) zeros of `m`.
pub fn i_mu_hat(mu: &MultiCutMeasure, w: ComplexValue) -> Result<f64> {
    let value = evaluate(mu, w)?;
    let i = if w.im > 0.0 { value.m.im / w.im } else { value.dm.re };
    Ok(i_hat_from(i, value.m))
}

pub(crate) fn i_hat_from(i: f64, m: Complex64) -> f64 {
    if m.norm() < ZERO_FLAG {
        return f64::INFINITY;
    }
    i / m.norm_sqr() - 1.0
}

/// Nevanlinna data of `F_μ(ω) - ω = shift + ∫ dμ̂(x)/(x - ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NevanlinnaData {
    /// `μ̂(ℝ)`, the variance of `μ`.
    pub total_mass: f64,
    /// Pure points `(location, 1/m'(location))` at gap zeros of `m`.
    pub pure_points: Vec<(f64, f64)>,
    /// `-∫ x dμ`.
    pub shift: f64,
}

pub fn hat_data(mu: &MultiCutMeasure) -> Result<NevanlinnaData> {
    let zeros = crate::analysis::gap_zeros(mu);
    let mut pure_points = Vec::with_capacity(zeros.len());
    for e in zeros {
        let dm = evaluate(mu, Complex64::new(e, 0.0))?.dm.re;
        pure_points.push((e, 1.0 / dm));
    }
    Ok(NevanlinnaData {
        total_mass: mu.variance(),
        pure_points,
        shift: -mu.mean(),
    })
}

/// Density of the absolutely continuous part of `μ̂` at a real point,
/// `Im F(x + i0)/π`, from the boundary value of `m` at a tiny height.
pub fn hat_density(mu: &MultiCutMeasure, x: f64) -> Result<f64> {
    let inside = mu
        .components()
        .iter()
        .find(|c| x > c.left_endpoint() && x < c.right_endpoint());
    let Some(c) = inside else {
        return Ok(0.0);
    };
    let edge = (x - c.left_endpoint()).min(c.right_endpoint() - x);
    let eta = (1e-3 * edge).min(1e-12 * c.length());
    let m = evaluate(mu, Complex64::new(x, eta))?.m;
    Ok(m.im / (PI * m.norm_sqr()))
}

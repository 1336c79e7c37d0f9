//! Multi-cut Jacobi-type probability measures.
//!
//! Every absolutely continuous component has the exact density
//! `c (x - a)^{t-} (b - x)^{t+} h(x)` on `[a, b]`, where `h` is a polynomial
//! that is strictly positive on the closed interval. Power-law edges are thus
//! absorbed by a Gauss–Jacobi weight, and every moment or normalization
//! integral is exact for a rule of modest order.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};

/// Tolerance on the total mass of a measure.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Tolerance on the first moment of a centered measure.
pub const CENTERING_TOLERANCE: f64 = 1e-10;
/// Minimum distance between an atom and a component endpoint.
pub const ENDPOINT_COLLISION: f64 = 1e-9;

const POSITIVITY_SAMPLES: usize = 64;
/// Far-field rule orders are `16 * 2^level`.
pub(crate) const FAR_LEVELS: usize = 9;
pub(crate) const PANEL_ORDER: usize = 16;
const CDF_ORDER: usize = 48;

fn default_h() -> Vec<f64> {
    vec![1.0]
}

/// One absolutely continuous component as it appears in a measure file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub a: f64,
    pub b: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    /// Ascending coefficients of `h` in the variable `x`.
    #[serde(default = "default_h")]
    pub h: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: f64,
    pub mass: f64,
}

/// Serialized description of a measure (the on-disk JSON format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    /// When set, construction also checks that the first moment vanishes.
    #[serde(default)]
    pub centered: bool,
}

impl MeasureSpec {
    /// Semicircle law of the given variance centered at 0.
    pub fn semicircle(variance: f64) -> Self {
        let r = 2.0 * variance.sqrt();
        Self {
            components: vec![ComponentSpec {
                a: -r,
                b: r,
                t_minus: 0.5,
                t_plus: 0.5,
                h: vec![1.0],
                weight: 1.0,
            }],
            atoms: vec![],
            centered: true,
        }
    }

    /// `½ δ₋₁ + ½ δ₁`.
    pub fn bernoulli() -> Self {
        Self {
            components: vec![],
            atoms: vec![AtomSpec { x: -1.0, mass: 0.5 }, AtomSpec { x: 1.0, mass: 0.5 }],
            centered: true,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure spec serializes")
    }
}

/// A power-law component `c (x - a)^{t-} (b - x)^{t+} h(x)` of total mass `weight`.
#[derive(Debug, Clone)]
pub struct JacobiComponent {
    left_endpoint: f64,
    right_endpoint: f64,
    left_exponent: f64,
    right_exponent: f64,
    modulation_coeffs: Vec<f64>,
    weight: f64,
    normalization: f64,
    far_rules: [OnceLock<Arc<[(f64, f64)]>>; FAR_LEVELS],
}

impl JacobiComponent {
    pub fn left_endpoint(&self) -> f64 {
        self.left_endpoint
    }
    pub fn right_endpoint(&self) -> f64 {
        self.right_endpoint
    }
    pub fn left_exponent(&self) -> f64 {
        self.left_exponent
    }
    pub fn right_exponent(&self) -> f64 {
        self.right_exponent
    }
    pub fn modulation_coeffs(&self) -> &[f64] {
        &self.modulation_coeffs
    }
    pub fn weight(&self) -> f64 {
        self.weight
    }
    pub fn normalization(&self) -> f64 {
        self.normalization
    }
    pub fn length(&self) -> f64 {
        self.right_endpoint - self.left_endpoint
    }
    pub fn contains(&self, x: f64) -> bool {
        x >= self.left_endpoint && x <= self.right_endpoint
    }

    pub fn modulation(&self, x: f64) -> f64 {
        horner(&self.modulation_coeffs, x)
    }

    /// Density at `x` (zero outside the component).
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.left_endpoint || x >= self.right_endpoint {
            return 0.0;
        }
        self.normalization
            * (x - self.left_endpoint).powf(self.left_exponent)
            * (self.right_endpoint - x).powf(self.right_exponent)
            * self.modulation(x)
    }

    fn degree(&self) -> usize {
        self.modulation_coeffs.len().saturating_sub(1)
    }

    /// Gauss–Jacobi rule over the whole component with all density factors
    /// folded into the weights. Order is `16 * 2^level`.
    pub(crate) fn far_rule(&self, level: usize) -> Arc<[(f64, f64)]> {
        Arc::clone(self.far_rules[level].get_or_init(|| {
            let order = 16usize << level;
            let half = 0.5 * self.length();
            let rule = gauss_jacobi(order, self.right_exponent, self.left_exponent);
            let scale = self.normalization * half.powf(1.0 + self.left_exponent + self.right_exponent);
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&u, &w)| {
                    let x = self.left_endpoint + (u + 1.0) * half;
                    (x, w * scale * self.modulation(x))
                })
                .collect()
        }))
    }

    /// Composite rule graded geometrically toward `center`, finest panel
    /// width `scale`. Panels touching an endpoint carry that endpoint's
    /// Jacobi factor in the rule; interior panels are Gauss–Legendre and are
    /// kept at least one width away from either endpoint.
    ///
    /// Entries are `(x, x - c, weight)` with `c` the clamped center; the
    /// offset is formed without cancellation so kernels near `c` stay exact.
    pub(crate) fn graded_rule(&self, center: f64, scale: f64, out: &mut Vec<(f64, f64, f64)>) {
        let (a, b) = (self.left_endpoint, self.right_endpoint);
        let len = b - a;
        let c = center.clamp(a, b);
        let (lo, hi) = (a - c, b - c);
        let mut step = scale.max(1e-300);
        let mut breaks = vec![lo, hi];
        if (-lo).min(hi) >= 0.5 * step {
            breaks.push(0.0);
        }
        while step < len {
            for d in [-step, step] {
                if (d - lo).min(hi - d) >= 0.5 * step {
                    breaks.push(d);
                }
            }
            step *= 2.0;
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let (p, q) = (self.left_exponent, self.right_exponent);
        let nc = self.normalization;
        for pair in breaks.windows(2) {
            let (l, r) = (pair[0], pair[1]);
            let half = 0.5 * (r - l);
            let node = |u: f64| {
                let d = l + (u + 1.0) * half;
                (c + d, d)
            };
            match (l == lo, r == hi) {
                (true, true) => {
                    let rule = gauss_jacobi(PANEL_ORDER, q, p);
                    let s = nc * half.powf(1.0 + p + q);
                    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let (x, d) = node(u);
                        out.push((x, d, w * s * self.modulation(x)));
                    }
                }
                (true, false) => {
                    let rule = gauss_jacobi(PANEL_ORDER, 0.0, p);
                    let s = nc * half.powf(1.0 + p);
                    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let (x, d) = node(u);
                        out.push((x, d, w * s * (hi - d).powf(q) * self.modulation(x)));
                    }
                }
                (false, true) => {
                    let rule = gauss_jacobi(PANEL_ORDER, q, 0.0);
                    let s = nc * half.powf(1.0 + q);
                    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let (x, d) = node(u);
                        out.push((x, d, w * s * (d - lo).powf(p) * self.modulation(x)));
                    }
                }
                (false, false) => {
                    let rule = gauss_legendre(PANEL_ORDER);
                    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let (x, d) = node(u);
                        out.push((x, d, w * half * self.density(x)));
                    }
                }
            }
        }
    }

    /// `∫ x^k dρ` over the component, exact for the polynomial integrand.
    fn moment(&self, k: u32) -> f64 {
        let order = (k as usize + self.degree()) / 2 + 2;
        let half = 0.5 * self.length();
        let rule = gauss_jacobi(order, self.right_exponent, self.left_exponent);
        let scale = self.normalization * half.powf(1.0 + self.left_exponent + self.right_exponent);
        scale
            * rule.integrate(|u| {
                let x = self.left_endpoint + (u + 1.0) * half;
                x.powi(k as i32) * self.modulation(x)
            })
    }

    /// Mass of the component to the left of `x`.
    fn partial_mass(&self, x: f64) -> f64 {
        let (a, b) = (self.left_endpoint, self.right_endpoint);
        if x <= a {
            return 0.0;
        }
        if x >= b {
            return self.weight;
        }
        let (p, q) = (self.left_exponent, self.right_exponent);
        if x - a <= b - x {
            let half = 0.5 * (x - a);
            let rule = gauss_jacobi(CDF_ORDER, 0.0, p);
            self.normalization
                * half.powf(1.0 + p)
                * rule.integrate(|u| {
                    let y = a + (u + 1.0) * half;
                    (b - y).powf(q) * self.modulation(y)
                })
        } else {
            let half = 0.5 * (b - x);
            let rule = gauss_jacobi(CDF_ORDER, q, 0.0);
            let tail = self.normalization
                * half.powf(1.0 + q)
                * rule.integrate(|u| {
                    let y = x + (u + 1.0) * half;
                    (y - a).powf(p) * self.modulation(y)
                });
            self.weight - tail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A compactly supported probability measure: Jacobi-type components plus atoms.
#[derive(Debug, Clone)]
pub struct MultiCutMeasure {
    components: Vec<JacobiComponent>,
    atoms: Vec<Atom>,
    centered: bool,
}

impl PartialEq for MultiCutMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.to_spec() == other.to_spec()
    }
}

/// A contiguous piece of the support: an absolutely continuous component or
/// an atom lying outside all components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportPiece {
    Interval { left: f64, right: f64 },
    Point(f64),
}

impl SupportPiece {
    pub fn left(&self) -> f64 {
        match *self {
            SupportPiece::Interval { left, .. } => left,
            SupportPiece::Point(x) => x,
        }
    }
    pub fn right(&self) -> f64 {
        match *self {
            SupportPiece::Interval { right, .. } => right,
            SupportPiece::Point(x) => x,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn ln_beta(p: f64, q: f64) -> f64 {
    ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
}

/// Validate a spec and compute the normalization constants.
pub fn build_measure(spec: &MeasureSpec) -> Result<MultiCutMeasure> {
    let mut components = Vec::with_capacity(spec.components.len());
    for (index, c) in spec.components.iter().enumerate() {
        let finite = [c.a, c.b, c.t_minus, c.t_plus, c.weight]
            .iter()
            .chain(&c.h)
            .all(|v| v.is_finite());
        if !finite || c.h.is_empty() {
            return Err(Error::NonFinite);
        }
        if c.a >= c.b {
            return Err(Error::EmptyComponent { index, left: c.a, right: c.b });
        }
        for value in [c.t_minus, c.t_plus] {
            if !(value > -1.0 && value < 1.0) {
                return Err(Error::ExponentOutOfRange { index, value });
            }
        }
        if c.weight <= 0.0 {
            return Err(Error::NonPositiveWeight { index, weight: c.weight });
        }
        let mid = 0.5 * (c.a + c.b);
        let half = 0.5 * (c.b - c.a);
        let samples = (0..POSITIVITY_SAMPLES)
            .map(|k| {
                let theta = PI * (k as f64 + 0.5) / POSITIVITY_SAMPLES as f64;
                mid + half * theta.cos()
            })
            .chain([c.a, c.b]);
        for x in samples {
            if horner(&c.h, x) <= 0.0 {
                return Err(Error::NonPositiveModulation { index, at: x });
            }
        }

        let mut component = JacobiComponent {
            left_endpoint: c.a,
            right_endpoint: c.b,
            left_exponent: c.t_minus,
            right_exponent: c.t_plus,
            modulation_coeffs: c.h.clone(),
            weight: c.weight,
            normalization: 1.0,
            far_rules: Default::default(),
        };
        let unnormalized = if c.h.len() == 1 {
            c.h[0]
                * ((1.0 + c.t_minus + c.t_plus) * (c.b - c.a).ln()
                    + ln_beta(1.0 + c.t_minus, 1.0 + c.t_plus))
                    .exp()
        } else {
            component.moment(0)
        };
        component.normalization = c.weight / unnormalized;
        components.push(component);
    }
    for (i, pair) in components.windows(2).enumerate() {
        if pair[0].right_endpoint >= pair[1].left_endpoint {
            return Err(Error::OverlappingComponents { first: i, second: i + 1 });
        }
    }

    let mut atoms: Vec<Atom> = Vec::with_capacity(spec.atoms.len());
    for a in &spec.atoms {
        if !a.x.is_finite() || !a.mass.is_finite() {
            return Err(Error::NonFinite);
        }
        if !(a.mass > 0.0 && a.mass < 1.0) {
            return Err(Error::InvalidAtomMass { location: a.x, mass: a.mass });
        }
        let collides = components.iter().any(|c| {
            (a.x - c.left_endpoint).abs() < ENDPOINT_COLLISION
                || (a.x - c.right_endpoint).abs() < ENDPOINT_COLLISION
        });
        if collides {
            return Err(Error::AtomOnEndpoint { location: a.x });
        }
        atoms.push(Atom { location: a.x, mass: a.mass });
    }
    atoms.sort_by(|l, r| l.location.total_cmp(&r.location));
    for pair in atoms.windows(2) {
        if pair[0].location == pair[1].location {
            return Err(Error::DuplicateAtom(pair[0].location));
        }
    }

    let total: f64 = components.iter().map(|c| c.weight).sum::<f64>()
        + atoms.iter().map(|a| a.mass).sum::<f64>();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::MassMismatch { total });
    }
    if components.is_empty() && atoms.len() < 2 {
        return Err(Error::DegenerateMeasure);
    }

    let measure = MultiCutMeasure {
        components,
        atoms,
        centered: spec.centered,
    };
    if spec.centered {
        let mean = measure.mean();
        if mean.abs() > CENTERING_TOLERANCE {
            return Err(Error::NotCentered { mean });
        }
    }
    Ok(measure)
}

impl MultiCutMeasure {
    pub fn components(&self) -> &[JacobiComponent] {
        &self.components
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn normalization_constants(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.normalization).collect()
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms that do not fall inside any component.
    pub fn outlying_atoms(&self) -> Vec<Atom> {
        self.atoms
            .iter()
            .filter(|a| !self.components.iter().any(|c| c.contains(a.location)))
            .copied()
            .collect()
    }

    /// Components and outlying atoms, sorted left to right.
    pub fn support_pieces(&self) -> Vec<SupportPiece> {
        let mut pieces: Vec<SupportPiece> = self
            .components
            .iter()
            .map(|c| SupportPiece::Interval {
                left: c.left_endpoint,
                right: c.right_endpoint,
            })
            .chain(self.outlying_atoms().iter().map(|a| SupportPiece::Point(a.location)))
            .collect();
        pieces.sort_by(|l, r| l.left().total_cmp(&r.left()));
        pieces
    }

    /// Convex hull of the support.
    pub fn hull(&self) -> (f64, f64) {
        let pieces = self.support_pieces();
        (pieces[0].left(), pieces[pieces.len() - 1].right())
    }

    /// Check the pair-path admissibility conditions.
    pub fn check_pair_admissible(&self) -> Result<()> {
        if !self.atoms.is_empty() {
            return Err(Error::AtomsOnPairPath);
        }
        let mean = self.mean();
        if mean.abs() > CENTERING_TOLERANCE {
            return Err(Error::NotCentered { mean });
        }
        Ok(())
    }

    /// Check the semigroup-path admissibility conditions.
    pub fn check_semigroup_admissible(&self, allow_atomic: bool) -> Result<()> {
        if self.components.is_empty() && !allow_atomic {
            return Err(Error::NoContinuousPart);
        }
        Ok(())
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.density(x)).sum()
    }

    /// `∫ x^k dμ` for `k <= 8`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > 8 {
            return Err(Error::MomentOrder(k));
        }
        Ok(self.components.iter().map(|c| c.moment(k)).sum::<f64>()
            + self
                .atoms
                .iter()
                .map(|a| a.mass * a.location.powi(k as i32))
                .sum::<f64>())
    }

    pub fn mean(&self) -> f64 {
        self.moment(1).expect("order 1")
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.mean();
        self.moment(2).expect("order 2") - m1 * m1
    }

    /// `μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.partial_mass(x)).sum::<f64>()
            + self
                .atoms
                .iter()
                .filter(|a| a.location <= x)
                .map(|a| a.mass)
                .sum::<f64>()
    }

    /// Smallest `x` with `cdf(x) >= p`, by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        for atom in &self.atoms {
            let upper = self.cdf(atom.location);
            let lower = upper - atom.mass;
            if p > lower && p <= upper {
                return Ok(atom.location);
            }
        }
        let (mut lo, mut hi) = self.hull();
        let tol = 1e-15 * (hi - lo).max(1.0);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec {
            components: self
                .components
                .iter()
                .map(|c| ComponentSpec {
                    a: c.left_endpoint,
                    b: c.right_endpoint,
                    t_minus: c.left_exponent,
                    t_plus: c.right_exponent,
                    h: c.modulation_coeffs.clone(),
                    weight: c.weight,
                })
                .collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomSpec { x: a.location, mass: a.mass })
                .collect(),
            centered: self.centered,
        }
    }

    /// The same measure translated so that its mean is zero.
    ///
    /// Modulation polynomials are re-expanded about the new origin.
    pub fn centered(&self) -> Result<MultiCutMeasure> {
        let shift = -self.mean();
        let mut spec = self.to_spec();
        for c in &mut spec.components {
            c.a += shift;
            c.b += shift;
            c.h = translate_polynomial(&c.h, shift);
        }
        for a in &mut spec.atoms {
            a.x += shift;
        }
        spec.centered = true;
        build_measure(&spec)
    }
}

/// Coefficients of `x ↦ h(x - shift)`.
fn translate_polynomial(coeffs: &[f64], shift: f64) -> Vec<f64> {
    // Repeated synthetic division by (x + shift) gives the Taylor expansion.
    let mut work = coeffs.to_vec();
    let n = work.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            work[j] -= shift * work[j + 1];
        }
    }
    work
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_cut(w_left: f64) -> MeasureSpec {
        MeasureSpec {
            components: vec![
                ComponentSpec { a: -2.0, b: -1.0, t_minus: 0.5, t_plus: 0.5, h: vec![1.0], weight: w_left },
                ComponentSpec { a: 1.0, b: 2.0, t_minus: 0.5, t_plus: 0.5, h: vec![1.0], weight: 1.0 - w_left },
            ],
            atoms: vec![],
            centered: false,
        }
    }

    #[test]
    fn semicircle_normalization_matches_closed_form() {
        let mu = build_measure(&MeasureSpec::semicircle(1.0)).unwrap();
        for &x in &[-1.7, -0.3, 0.0, 0.9, 1.99] {
            let exact = (4.0f64 - x * x).sqrt() / (2.0 * PI);
            assert_abs_diff_eq!(mu.density(x), exact, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(mu.normalization_constants()[0], 1.0 / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn polynomial_modulation_is_normalized_by_quadrature() {
        let spec = MeasureSpec {
            components: vec![ComponentSpec {
                a: 0.0,
                b: 1.0,
                t_minus: -0.3,
                t_plus: 0.2,
                h: vec![1.0, 2.0, 0.5],
                weight: 1.0,
            }],
            atoms: vec![],
            centered: false,
        };
        let mu = build_measure(&spec).unwrap();
        assert_abs_diff_eq!(mu.moment(0).unwrap(), 1.0, epsilon = 1e-13);
        // Mass recovered by an independent graded Legendre sum.
        let mut nodes = Vec::new();
        mu.components()[0].graded_rule(0.5, 1e-3, &mut nodes);
        let total: f64 = nodes.iter().map(|n| n.2).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn semicircle_moments_are_catalan() {
        let mu = build_measure(&MeasureSpec::semicircle(1.0)).unwrap();
        let catalan = [1.0, 1.0, 2.0, 5.0, 14.0];
        for (k, c) in catalan.iter().enumerate() {
            assert_abs_diff_eq!(mu.moment(2 * k as u32).unwrap(), *c, epsilon = 1e-10);
            if k < 4 {
                assert_abs_diff_eq!(mu.moment(2 * k as u32 + 1).unwrap(), 0.0, epsilon = 1e-12);
            }
        }
        assert!(matches!(mu.moment(9), Err(Error::MomentOrder(9))));
    }

    #[test]
    fn symmetric_two_cut_is_centered() {
        let mu = build_measure(&two_cut(0.5)).unwrap();
        assert_abs_diff_eq!(mu.moment(1).unwrap(), 0.0, epsilon = 1e-14);
        mu.check_pair_admissible().unwrap();
        let skew = build_measure(&two_cut(0.3)).unwrap();
        assert!(matches!(skew.check_pair_admissible(), Err(Error::NotCentered { .. })));
        let recentered = skew.centered().unwrap();
        assert_abs_diff_eq!(recentered.mean(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(recentered.variance(), skew.variance(), epsilon = 1e-12);
    }

    #[test]
    fn translated_polynomial_agrees_pointwise() {
        let h = vec![0.5, -1.0, 3.0, 0.25];
        let shifted = translate_polynomial(&h, 1.7);
        for &x in &[-2.0, 0.0, 0.3, 4.0] {
            assert_abs_diff_eq!(horner(&shifted, x), horner(&h, x - 1.7), epsilon = 1e-11);
        }
    }

    #[test]
    fn bernoulli_pair_vs_semigroup_paths() {
        let mu = build_measure(&MeasureSpec::bernoulli()).unwrap();
        assert!(matches!(mu.check_pair_admissible(), Err(Error::AtomsOnPairPath)));
        assert!(matches!(mu.check_semigroup_admissible(false), Err(Error::NoContinuousPart)));
        mu.check_semigroup_admissible(true).unwrap();
        assert_abs_diff_eq!(mu.moment(2).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = two_cut(0.5);
        spec.components[1].a = -1.5;
        spec.components[1].b = 0.0;
        assert!(matches!(build_measure(&spec), Err(Error::OverlappingComponents { .. })));

        let mut spec = two_cut(0.5);
        spec.components[0].t_minus = 1.0;
        assert!(matches!(build_measure(&spec), Err(Error::ExponentOutOfRange { .. })));

        let mut spec = two_cut(0.5);
        spec.components[0].h = vec![1.0, 1.0]; // h(-2) = -1
        assert!(matches!(build_measure(&spec), Err(Error::NonPositiveModulation { .. })));

        let mut spec = two_cut(0.5);
        spec.components[0].weight = 0.4;
        assert!(matches!(build_measure(&spec), Err(Error::MassMismatch { .. })));

        let mut spec = two_cut(0.4);
        spec.atoms.push(AtomSpec { x: -1.0 + 1e-10, mass: 0.1 });
        assert!(matches!(build_measure(&spec), Err(Error::AtomOnEndpoint { .. })));

        let single = MeasureSpec {
            components: vec![],
            atoms: vec![AtomSpec { x: 0.0, mass: 1.0 - 1e-13 }],
            centered: false,
        };
        assert!(build_measure(&single).is_err());
    }

    #[test]
    fn quantiles_of_atoms_and_semicircle() {
        let bern = build_measure(&MeasureSpec::bernoulli()).unwrap();
        assert_eq!(bern.quantile(0.25).unwrap(), -1.0);
        assert_eq!(bern.quantile(0.75).unwrap(), 1.0);
        assert!(matches!(bern.quantile(1.0), Err(Error::InvalidProbability(_))));

        let sc = build_measure(&MeasureSpec::semicircle(1.0)).unwrap();
        assert_abs_diff_eq!(sc.quantile(0.5).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spec_json_field_names() {
        let text = r#"{"components":[{"a":-2,"b":2,"t_minus":0.5,"t_plus":0.5,"h":[1],"weight":1}],
                       "atoms":[],"centered":true}"#;
        let spec = MeasureSpec::from_json(text).unwrap();
        assert_eq!(spec, MeasureSpec::semicircle(1.0));
    }
}

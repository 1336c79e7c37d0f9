//! Gap zeros, the classification sets entering the component-count bounds,
//! the semigroup edge equation, and bound verdicts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MultiCutMeasure;
use crate::spectral::SupportReport;
use crate::transform::{evaluate, hat_data};

const GAP_INSET: f64 = 1e-9;
const ZERO_TOLERANCE: f64 = 1e-12;
/// Ties in the P-set criterion are members.
pub const P_SET_TIE: f64 = 1e-12;
pub const N_SET_SAMPLES: usize = 64;
/// Atom masses within this of `1 - 1/t` count towards `C_t^∞`.
pub const CRITICAL_MASS_TOLERANCE: f64 = 1e-9;

fn m_real(mu: &MultiCutMeasure, x: f64) -> f64 {
    evaluate(mu, Complex64::new(x, 0.0)).map(|v| v.m.re).unwrap_or(f64::NAN)
}

/// Zeros of `m_μ` in the bounded gaps between support pieces.
pub fn gap_zeros(mu: &MultiCutMeasure) -> Vec<f64> {
    let pieces = mu.support_pieces();
    let mut zeros = Vec::new();
    for pair in pieces.windows(2) {
        let (left, right) = (pair[0].right() + GAP_INSET, pair[1].left() - GAP_INSET);
        if left >= right {
            continue;
        }
        let (m_left, m_right) = (m_real(mu, left), m_real(mu, right));
        if !(m_left < 0.0 && m_right > 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (left, right);
        while hi - lo > ZERO_TOLERANCE * 1f64.max(lo.abs()) {
            let mid = 0.5 * (lo + hi);
            if m_real(mu, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    zeros
}

/// Classification of one gap zero of `m_α` against the other measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PClassification {
    pub location: f64,
    /// `∫x² dμ_β · m_α'(E)`.
    pub criterion: f64,
    /// `μ̂_α({E}) = 1/m_α'(E)`.
    pub hat_atom: f64,
    /// `μ̂_β(ℝ)`.
    pub hat_total_other: f64,
    pub member: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSets {
    pub alpha: Vec<PClassification>,
    pub beta: Vec<PClassification>,
}

impl PSets {
    pub fn p_alpha(&self) -> Vec<f64> {
        self.alpha.iter().filter(|c| c.member).map(|c| c.location).collect()
    }
    pub fn p_beta(&self) -> Vec<f64> {
        self.beta.iter().filter(|c| c.member).map(|c| c.location).collect()
    }
}

fn classify_against(mu: &MultiCutMeasure, other: &MultiCutMeasure) -> Result<Vec<PClassification>> {
    let second = other.moment(2)?;
    let hat_total = hat_data(other)?.total_mass;
    let mut out = Vec::new();
    for e in gap_zeros(mu) {
        let dm = evaluate(mu, Complex64::new(e, 0.0))?.dm.re;
        let criterion = second * dm;
        let member = criterion <= 1.0 + P_SET_TIE;
        let hat_atom = 1.0 / dm;
        let equivalent = hat_total <= hat_atom * (1.0 + P_SET_TIE);
        let near_tie = (criterion - 1.0).abs() <= 1e-9;
        if member != equivalent && !near_tie {
            return Err(Error::BoundsMismatch(format!(
                "P-set criteria disagree at {e}: {criterion} vs μ̂ mass {hat_total} against {hat_atom}"
            )));
        }
        out.push(PClassification {
            location: e,
            criterion,
            hat_atom,
            hat_total_other: hat_total,
            member,
        });
    }
    Ok(out)
}

/// `P^α` and `P^β`: gap zeros `E` of one measure with `∫x² dμ_other · m'(E) ≤ 1`.
pub fn classify_p_sets(alpha: &MultiCutMeasure, beta: &MultiCutMeasure) -> Result<PSets> {
    Ok(PSets {
        alpha: classify_against(alpha, beta)?,
        beta: classify_against(beta, alpha)?,
    })
}

/// 1-based indices `i` with `Re m_α < 0` on gap `i` and `> 0` on gap `i + 1`.
pub fn n_set(alpha: &MultiCutMeasure) -> Vec<usize> {
    let comps = alpha.components();
    let n = comps.len();
    if n < 3 {
        return Vec::new();
    }
    let gap_sign = |i: usize| -> Option<f64> {
        // Gap i lies between components i and i + 1 (1-based).
        let (l, r) = (comps[i - 1].right_endpoint(), comps[i].left_endpoint());
        let mut sign = None;
        for k in 0..N_SET_SAMPLES {
            let x = l + (r - l) * (k as f64 + 0.5) / N_SET_SAMPLES as f64;
            let s = m_real(alpha, x).signum();
            match sign {
                None => sign = Some(s),
                Some(prev) if prev != s => return None,
                _ => {}
            }
        }
        sign
    };
    (1..=n - 2)
        .filter(|&i| gap_sign(i) == Some(-1.0) && gap_sign(i + 1) == Some(1.0))
        .collect()
}

/// A root of `F'(ω) - 1 = 1/(t-1)` and its image `E = tω - (t-1)F(ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCandidate {
    pub omega: f64,
    pub energy: f64,
}

/// `F'(x) - 1` on the real line off `supp μ̂`; atoms of `μ` are removable.
fn excess_slope(mu: &MultiCutMeasure, x: f64) -> f64 {
    let mut point = x;
    for _ in 0..4 {
        match evaluate(mu, Complex64::new(point, 0.0)) {
            Ok(v) => return v.shifted_prime().map(|h| h.re).unwrap_or(f64::INFINITY),
            Err(Error::OnAtom(_)) => point += 1e-12 * 1f64.max(point.abs()),
            Err(_) => return f64::NAN,
        }
    }
    f64::NAN
}

fn edge_energy(mu: &MultiCutMeasure, t: f64, omega: f64) -> f64 {
    let mut point = omega;
    for _ in 0..4 {
        match evaluate(mu, Complex64::new(point, 0.0)) {
            Ok(v) => {
                let f = v.shifted().map(|h| h.re + point).unwrap_or(f64::NAN);
                return t * point - (t - 1.0) * f;
            }
            Err(Error::OnAtom(_)) => point += 1e-12 * 1f64.max(point.abs()),
            Err(_) => return f64::NAN,
        }
    }
    f64::NAN
}

/// Root of `g(x) = level` between `lo` and `hi` with `g(lo) - level` and
/// `g(hi) - level` of opposite signs.
fn bisect<G: Fn(f64) -> f64>(g: G, level: f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_above = g(lo) > level;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (g(mid) > level) == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min<G: FnMut(f64) -> f64>(mut g: G, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = g(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Edge candidates of `μ^{⊞t}` from the equation `F_μ'(ω) = t/(t-1)` on
/// each component of `ℝ \ supp μ̂`.
pub fn semigroup_edges(mu: &MultiCutMeasure, t: f64) -> Result<Vec<EdgeCandidate>> {
    if !(t > 1.0) {
        return Err(Error::InvalidTime(t));
    }
    let level = 1.0 / (t - 1.0);
    // supp μ̂ = supp μ_ac ∪ gap zeros.
    let mut blocks: Vec<(f64, f64)> = mu
        .components()
        .iter()
        .map(|c| (c.left_endpoint(), c.right_endpoint()))
        .collect();
    blocks.extend(gap_zeros(mu).into_iter().map(|z| (z, z)));
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    if blocks.is_empty() {
        return Ok(Vec::new());
    }
    let (lo_hull, hi_hull) = mu.hull();
    let span = (hi_hull - lo_hull).max(1e-12);
    let g = |x: f64| excess_slope(mu, x);
    let mut roots = Vec::new();

    for pair in blocks.windows(2) {
        let inset = 1e-12 * span.max(pair[0].1.abs());
        let (l, r) = (pair[0].1 + inset, pair[1].0 - inset);
        if l >= r {
            continue;
        }
        let (x_min, g_min) = golden_min(g, l, r, 1e-13 * span);
        if !(g_min < level) {
            continue;
        }
        if g(l) > level {
            roots.push(bisect(g, level, l, x_min));
        }
        if g(r) > level {
            roots.push(bisect(g, level, x_min, r));
        }
    }

    let first = blocks[0].0;
    let last = blocks.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    for (edge, dir) in [(first, -1.0), (last, 1.0)] {
        let near = edge + dir * 1e-12 * span.max(edge.abs());
        if !(g(near) > level) {
            continue;
        }
        let mut d = 1e-6 * span;
        while g(edge + dir * d) > level && d < 1e12 * span {
            d *= 2.0;
        }
        let (a, b) = if dir < 0.0 { (edge - d, near) } else { (near, edge + d) };
        roots.push(bisect(g, level, a, b));
    }

    let mut out: Vec<EdgeCandidate> = roots
        .into_iter()
        .map(|omega| EdgeCandidate { omega, energy: edge_energy(mu, t, omega) })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

/// Atoms of `μ` with mass `1 - 1/t`; their images `t x` carry diverging density.
pub fn critical_atoms(mu: &MultiCutMeasure, t: f64) -> Vec<f64> {
    mu.atoms()
        .iter()
        .filter(|a| (a.mass - (1.0 - 1.0 / t)).abs() < CRITICAL_MASS_TOLERANCE)
        .map(|a| a.location)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsKind {
    /// `I_t + C_t^0 ≤ n_ac + |Z_μ| ≤ 2 n_ac + n_pp^out - 1`.
    Semigroup,
    /// `1 + |P^α| ≤ I + C ≤ n_α - |N_α|` for a one-cut `μ_β`.
    PairOneCut,
    /// `1 + |P^α| + |P^β| ≤ I + C ≤ (|P^β|+1)(n_α-1) + (|P^α|+1)(n_β-1) + 1`.
    PairMultiCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measured {
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "C0")]
    pub c0: usize,
    #[serde(rename = "Cinf")]
    pub cinf: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundSets {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_atoms: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_alpha: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Verdicts {
    pub lower: bool,
    pub upper: bool,
    /// Second inequality of the chain: `n_ac + |Z_μ| ≤ 2 n_ac + n_pp^out - 1`
    /// for the semigroup, `upper < 2 n_α n_β` for the multi-cut pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cinf: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub kind: BoundsKind,
    pub measured: Measured,
    pub sets: BoundSets,
    pub lower: usize,
    pub upper: usize,
    pub verdicts: Verdicts,
    /// Whether the pair was swapped so that `n_α ≥ n_β`.
    #[serde(default)]
    pub swapped: bool,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        let v = &self.verdicts;
        v.lower && v.upper && v.chain.unwrap_or(true) && v.cinf.unwrap_or(true)
    }
}

/// Inputs of a bound check.
#[derive(Debug, Clone, Copy)]
pub enum BoundsInput<'a> {
    Semigroup { mu: &'a MultiCutMeasure, t: f64 },
    Pair { alpha: &'a MultiCutMeasure, beta: &'a MultiCutMeasure },
}

/// Evaluate the bound chain applicable to `input` against a support report.
///
/// For pairs the kind follows from the component counts (`PairOneCut` when
/// either measure is one-cut); `requested` forces a kind and errors when it
/// does not apply.
pub fn bounds_report(input: BoundsInput<'_>, support: &SupportReport, requested: Option<BoundsKind>) -> Result<BoundsReport> {
    let measured = Measured {
        i: support.counts.i,
        c0: support.counts.c0,
        cinf: support.counts.cinf,
    };
    let ic = measured.i + measured.c0;
    match input {
        BoundsInput::Semigroup { mu, t } => {
            if let Some(kind) = requested.filter(|&k| k != BoundsKind::Semigroup) {
                return Err(Error::BoundsMismatch(format!("{kind:?} requested for a semigroup input")));
            }
            if !(t > 1.0) {
                return Err(Error::InvalidTime(t));
            }
            let n_ac = mu.components().len();
            if n_ac == 0 {
                return Err(Error::NoContinuousPart);
            }
            let zeros = gap_zeros(mu);
            let n_out = mu.outlying_atoms().len();
            let upper = n_ac + zeros.len();
            let critical = critical_atoms(mu, t);
            let verdicts = Verdicts {
                lower: ic >= 1,
                upper: ic <= upper,
                chain: Some(upper < 2 * n_ac + n_out),
                cinf: Some(measured.cinf == critical.len()),
            };
            Ok(BoundsReport {
                kind: BoundsKind::Semigroup,
                measured,
                sets: BoundSets {
                    z_mu: Some(zeros),
                    critical_atoms: Some(critical),
                    ..Default::default()
                },
                lower: 1,
                upper,
                verdicts,
                swapped: false,
            })
        }
        BoundsInput::Pair { alpha, beta } => {
            alpha.check_pair_admissible()?;
            beta.check_pair_admissible()?;
            let (na, nb) = (alpha.components().len(), beta.components().len());
            let swapped = nb > na;
            let (a, b) = if swapped { (beta, alpha) } else { (alpha, beta) };
            let (na, nb) = (na.max(nb), na.min(nb));
            let kind = if nb == 1 { BoundsKind::PairOneCut } else { BoundsKind::PairMultiCut };
            if let Some(req) = requested {
                if req != kind {
                    return Err(Error::BoundsMismatch(format!(
                        "{req:?} requested but the inputs have n_α = {na}, n_β = {nb}"
                    )));
                }
            }
            let p = classify_p_sets(a, b)?;
            let (pa, pb) = (p.p_alpha(), p.p_beta());
            let e_alpha: Vec<f64> = p.alpha.iter().map(|c| c.location).collect();
            let e_beta: Vec<f64> = p.beta.iter().map(|c| c.location).collect();
            match kind {
                BoundsKind::PairOneCut => {
                    let n = n_set(a);
                    let lower = 1 + pa.len();
                    let upper = na - n.len();
                    Ok(BoundsReport {
                        kind,
                        measured,
                        sets: BoundSets {
                            e_alpha: Some(e_alpha),
                            p_alpha: Some(pa),
                            n_alpha: Some(n),
                            ..Default::default()
                        },
                        lower,
                        upper,
                        verdicts: Verdicts {
                            lower: ic >= lower,
                            upper: ic <= upper,
                            ..Default::default()
                        },
                        swapped,
                    })
                }
                _ => {
                    let lower = 1 + pa.len() + pb.len();
                    let upper = (pb.len() + 1) * (na - 1) + (pa.len() + 1) * (nb - 1) + 1;
                    Ok(BoundsReport {
                        kind,
                        measured,
                        sets: BoundSets {
                            e_alpha: Some(e_alpha),
                            e_beta: Some(e_beta),
                            p_alpha: Some(pa),
                            p_beta: Some(pb),
                            ..Default::default()
                        },
                        lower,
                        upper,
                        verdicts: Verdicts {
                            lower: ic >= lower,
                            upper: ic <= upper,
                            chain: Some(upper < 2 * na * nb),
                            cinf: None,
                        },
                        swapped,
                    })
                }
            }
        }
    }
}

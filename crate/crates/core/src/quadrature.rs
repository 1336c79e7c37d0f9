//! Gauss–Jacobi rules on `[-1, 1]` for the weight `(1 - u)^alpha (1 + u)^beta`.
//!
//! Nodes and weights come from the Golub–Welsch construction: the nodes are the
//! eigenvalues of the symmetric tridiagonal Jacobi matrix of the three-term
//! recurrence, and each weight is `mu_0` times the squared first component of
//! the matching normalized eigenvector. Only that first component is tracked
//! through the implicit QL sweeps, so a rule of order `n` costs `O(n^2)`.
//!
//! Rules are cached process-wide; a rule is immutable once built.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use statrs::function::gamma::ln_gamma;

/// Nodes ascending on `[-1, 1]` with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{-1}^{1} (1-u)^α (1+u)^β f(u) du`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }
}

type RuleKey = (usize, u64, u64);

fn cache() -> &'static RwLock<HashMap<RuleKey, Arc<GaussRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached Gauss–Jacobi rule of order `n`.
///
/// Panics if `n == 0` or an exponent is not greater than `-1`; callers validate
/// exponents when a measure is built.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Arc<GaussRule> {
    assert!(n >= 1, "quadrature order must be positive");
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = cache().read().expect("rule cache poisoned").get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_jacobi(n, alpha, beta));
    let mut guard = cache().write().expect("rule cache poisoned");
    Arc::clone(guard.entry(key).or_insert(rule))
}

/// Cached Gauss–Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// `∫_{-1}^{1} (1-u)^α (1+u)^β du = 2^{α+β+1} B(α+1, β+1)`.
pub fn jacobi_mass(alpha: f64, beta: f64) -> f64 {
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(alpha + beta + 2.0))
    .exp()
}

fn build_jacobi(n: usize, alpha: f64, beta: f64) -> GaussRule {
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        *d = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
    }
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let b2 = if k == 1 {
            // (k + α + β) cancels against (2k + α + β - 1) at k = 1.
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k - 1] = b2.sqrt();
    }

    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first);

    let mass = jacobi_mass(alpha, beta);
    let mut pairs: Vec<(f64, f64)> = diag
        .into_iter()
        .zip(first)
        .map(|(x, v)| (x, mass * v * v))
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    GaussRule {
        nodes,
        weights,
        alpha,
        beta,
    }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
///
/// `diag` is overwritten by the eigenvalues; `off[i]` couples rows `i` and
/// `i + 1` (the last entry is scratch). `row` holds one row of the eigenvector
/// matrix and is rotated along with the sweeps.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], row: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 100, "tridiagonal QL failed to converge");

            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;

                let upper = row[i + 1];
                row[i + 1] = s * row[i] + c * upper;
                row[i] = c * row[i] - s * upper;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

//! One-dimensional infimum of `(y + Λ(λ))/λ` over `λ ∈ (0, b)`.
//!
//! This is the inverse Legendre dual `Λ*⁻¹(y)`. For convex `Λ` with
//! `Λ(0) = Λ'(0) = 0` the objective is unimodal on the domain, so a bracket
//! found by doubling/halving from `λ = 1` followed by golden-section search
//! yields the global minimum. When the CGF carries its derivative, the
//! minimizer is then polished by bisection on the stationarity condition
//! `λΛ'(λ) − Λ(λ) − y = 0`, whose left side is nondecreasing in `λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CgfSpec;

/// Relative bracket width at which golden-section search stops.
pub const GOLDEN_REL_TOL: f64 = 1e-10;
pub const GOLDEN_MAX_ITER: usize = 200;
/// Where a boundary infimum (`y = 0`) is evaluated.
pub const BOUNDARY_LAMBDA: f64 = 1e-8;
/// Fraction of a finite domain edge the search may reach.
pub const DOMAIN_CLAMP: f64 = 0.999999;

const MAX_EXPANSIONS: usize = 2000;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfResult {
    pub minimizer: f64,
    /// Objective at `minimizer`; an upper bound on the infimum in every case.
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// The infimum is a limit at an end of the domain rather than an interior
    /// minimum.
    pub at_boundary: bool,
}

impl InfResult {
    fn infinite() -> Self {
        Self {
            minimizer: f64::NAN,
            value: f64::INFINITY,
            converged: true,
            iterations: 0,
            at_boundary: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `Λ*⁻¹(y) = inf_{λ ∈ (0, b)} (y + Λ(λ))/λ`.
pub fn inverse_legendre_dual(cgf: &CgfSpec, y: f64) -> Result<InfResult> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::invalid("y", "must be >= 0"));
    }
    let upper = cgf.domain_upper();
    if !(upper > 0.0) {
        return Err(Error::invalid("domain_upper", "must be > 0"));
    }
    if y.is_infinite() {
        return Ok(InfResult::infinite());
    }
    let cap = if upper.is_finite() {
        DOMAIN_CLAMP * upper
    } else {
        f64::MAX / 4.0
    };
    let objective = |l: f64| {
        let v = (y + cgf.evaluate(l)) / l;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if y == 0.0 {
        let l = BOUNDARY_LAMBDA.min(0.5 * cap);
        return Ok(InfResult {
            minimizer: l,
            value: objective(l),
            converged: true,
            iterations: 0,
            at_boundary: true,
        });
    }

    let mut iterations = 0;
    let mut mid = 1.0f64.min(0.5 * cap);
    let mut f_mid = objective(mid);
    let mut hi = (2.0 * mid).min(cap);
    let mut f_hi = objective(hi);
    let mut lo;

    if f_hi < f_mid {
        // decreasing to the right: walk up until the objective turns or the
        // domain edge is reached; in the latter case [lo, cap] is searched
        // as is and the edge may turn out to be the minimizer
        loop {
            lo = mid;
            mid = hi;
            f_mid = f_hi;
            if mid >= cap {
                break;
            }
            if iterations >= MAX_EXPANSIONS {
                return Ok(InfResult {
                    minimizer: mid,
                    value: f_mid,
                    converged: false,
                    iterations,
                    at_boundary: true,
                });
            }
            hi = (2.0 * mid).min(cap);
            f_hi = objective(hi);
            iterations += 1;
            if f_hi >= f_mid {
                break;
            }
        }
    } else {
        lo = 0.5 * mid;
        let mut f_lo = objective(lo);
        while f_lo < f_mid {
            hi = mid;
            mid = lo;
            f_mid = f_lo;
            lo = 0.5 * mid;
            f_lo = objective(lo);
            iterations += 1;
            if lo < f64::MIN_POSITIVE * 1e10 || iterations >= MAX_EXPANSIONS {
                return Ok(InfResult {
                    minimizer: mid,
                    value: f_mid,
                    converged: false,
                    iterations,
                    at_boundary: true,
                });
            }
        }
    }
    let (bracket_lo, bracket_hi) = (lo, hi);

    // golden-section refinement on [lo, hi]
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let (mut best, mut f_best) = (mid, f_mid);
    let mut converged = false;
    for _ in 0..GOLDEN_MAX_ITER {
        iterations += 1;
        if f1 < f_best {
            best = x1;
            f_best = f1;
        }
        if f2 < f_best {
            best = x2;
            f_best = f2;
        }
        if b - a <= GOLDEN_REL_TOL * best.abs() {
            converged = true;
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2);
        }
    }

    if cgf.has_derivative() {
        if let Some(root) = polish(cgf, y, (a, b), (bracket_lo, bracket_hi)) {
            let f_root = objective(root);
            if f_root <= f_best * (1.0 + 1e-12) {
                best = root;
                f_best = f_root;
            }
        }
    }

    let at_edge = best >= cap * (1.0 - 1e-9);
    Ok(InfResult {
        minimizer: best,
        value: f_best,
        converged: converged && !at_edge,
        iterations,
        at_boundary: at_edge,
    })
}

/// Bisection on `h(λ) = λΛ'(λ) − Λ(λ) − y` inside whichever of the two
/// brackets shows a sign change.
fn polish(cgf: &CgfSpec, y: f64, narrow: (f64, f64), wide: (f64, f64)) -> Option<f64> {
    let h = |l: f64| l * cgf.derivative(l).unwrap_or(f64::NAN) - cgf.evaluate(l) - y;
    let (mut a, mut b) = [narrow, wide]
        .into_iter()
        .find(|&(a, b)| h(a) <= 0.0 && h(b) >= 0.0)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if h(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// The bound form `inf_λ (KL + Λ(λ))/λ`; an infinite KL gives an infinite
/// (vacuous) result instead of an error.
pub fn minimize_bound_objective(kl: f64, cgf: &CgfSpec) -> Result<InfResult> {
    if kl.is_nan() || kl < 0.0 {
        return Err(Error::invalid("kl", "must be >= 0"));
    }
    inverse_legendre_dual(cgf, kl)
}

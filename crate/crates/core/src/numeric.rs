//! Small numerical helpers shared by the bound evaluators: deterministic
//! summation and Gaussian-type quadrature rules.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

/// Number of nodes used by every quadrature rule in the crate.
pub const QUADRATURE_NODES: usize = 64;

/// Pairwise (cascade) summation in index order.
///
/// The recursion split is fixed by the slice length alone, so the result is
/// reproducible regardless of how the terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// For every `i`, the sum of `xs[j]^2` over `j != i`.
///
/// Built from prefix and suffix sums so no subtraction (and no cancellation)
/// is involved.
pub fn leave_one_out_sq_sums(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut prefix = vec![0.0; n + 1];
    for (k, x) in xs.iter().enumerate() {
        prefix[k + 1] = prefix[k] + x * x;
    }
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + xs[k] * xs[k];
    }
    (0..n).map(|i| prefix[i] + suffix[i + 1]).collect()
}

/// Nodes and weights of a quadrature rule for a probability measure.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Golub–Welsch: eigenvalues of the symmetric Jacobi matrix are the nodes,
/// squared first eigenvector components (times the total mass) the weights.
fn golub_welsch(diag: &[f64], off: &[f64], mass: f64) -> QuadratureRule {
    let n = diag.len();
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = diag[k];
    }
    for (k, &b) in off.iter().enumerate() {
        jacobi[(k, k + 1)] = b;
        jacobi[(k + 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Hermite rule for `E[f(X)]`, `X ~ N(0, 1)` (probabilists' form).
pub fn gauss_hermite() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUADRATURE_NODES;
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
        golub_welsch(&diag, &off, 1.0)
    })
}

/// Gauss–Laguerre rule for `∫₀^∞ f(u) e^{-u} du`.
pub fn gauss_laguerre() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUADRATURE_NODES;
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
        let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
        golub_welsch(&diag, &off, 1.0)
    })
}

/// `E[|X| ψ(X)]` for `X ~ N(0, 1)`.
///
/// Folding onto the half line and substituting `u = x²/2` turns the kink at
/// zero into a smooth Laguerre integrand.
pub fn expect_abs_times(psi: impl Fn(f64) -> f64) -> f64 {
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    inv_sqrt_2pi
        * gauss_laguerre().integrate(|u| {
            let x = (2.0 * u).sqrt();
            psi(x) + psi(-x)
        })
}

/// `E[√(X·Y)]` with `X = Σ aᵢxᵢ`, `Y = Σ bᵢxᵢ` and `xᵢ` iid χ²₁.
///
/// Uses `√X = (2√π)⁻¹ ∫₀^∞ (1 − e^{−sX}) s^{−3/2} ds` for both factors, so
/// the expectation becomes a two-dimensional integral of the joint χ²₁
/// Laplace transform `E e^{−sX−tY} = Π (1 + 2s aᵢ + 2t bᵢ)^{−1/2}`, whatever
/// the number of terms. The integral is taken by the trapezoid rule in
/// log-coordinates, where the integrand is analytic and decays exponentially
/// at both ends.
pub fn expected_sqrt_product_chi2(a: &[f64], b: &[f64]) -> f64 {
    use rayon::prelude::*;

    assert_eq!(a.len(), b.len());
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    if sum_a == 0.0 || sum_b == 0.0 {
        return 0.0;
    }
    const STEP: f64 = 0.25;
    const SPAN: f64 = 80.0;
    let m = (2.0 * SPAN / STEP) as usize + 1;
    // indices where a vanishes contribute nothing to the cross term
    let support: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();

    struct Axis {
        // 1 - E e^{-sX}
        one_minus_mgf: f64,
        mgf: f64,
        log_mgf: f64,
        // s^{-1/2}
        weight: f64,
        // 2 s c_i over the support
        scaled: Vec<f64>,
    }
    let axis = |coef: &[f64], total: f64| -> Vec<Axis> {
        (0..m)
            .map(|k| {
                let s = (-SPAN + STEP * k as f64).exp() / total;
                let log_mgf = -0.5 * coef.iter().map(|&c| (2.0 * s * c).ln_1p()).sum::<f64>();
                Axis {
                    one_minus_mgf: -log_mgf.exp_m1(),
                    mgf: log_mgf.exp(),
                    log_mgf,
                    weight: s.powf(-0.5),
                    scaled: support.iter().map(|&i| 2.0 * s * coef[i]).collect(),
                }
            })
            .collect()
    };
    let s_axis = axis(a, sum_a);
    let t_axis = axis(b, sum_b);

    let rows: Vec<f64> = s_axis
        .par_iter()
        .map(|sp| {
            let terms: Vec<f64> = t_axis
                .iter()
                .map(|tp| {
                    // E[(1-e^{-sX})(1-e^{-tY})]
                    //   = (1-M_s)(1-M_t) + M_s M_t (e^C - 1)
                    let cross: f64 = -0.5
                        * sp.scaled
                            .iter()
                            .zip(&tp.scaled)
                            .map(|(&x, &y)| log_one_minus_uv(x, y))
                            .sum::<f64>();
                    let coupling = if cross < 1.0 {
                        sp.mgf * tp.mgf * cross.exp_m1()
                    } else {
                        (sp.log_mgf + tp.log_mgf + cross).exp() - sp.mgf * tp.mgf
                    };
                    let g = sp.one_minus_mgf * tp.one_minus_mgf + coupling;
                    g * tp.weight
                })
                .collect();
            sp.weight * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows) * STEP * STEP / (4.0 * std::f64::consts::PI)
}

/// `ln(1 − uv)` with `u = x/(1+x)`, `v = y/(1+y)`.
///
/// `1 − uv = (1 + x + y)/((1 + x)(1 + y))`; that form is used when `uv` is
/// close to 1, where `ln1p(−uv)` would lose everything to rounding.
fn log_one_minus_uv(x: f64, y: f64) -> f64 {
    let uv = x / (1.0 + x) * (y / (1.0 + y));
    if uv < 0.5 {
        (-uv).ln_1p()
    } else {
        (x + y).ln_1p() - x.ln_1p() - y.ln_1p()
    }
}

/// Relative difference `|a - b| / max(|b|, tiny)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

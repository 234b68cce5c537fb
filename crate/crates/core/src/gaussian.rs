//! Gaussian distributions and the exact information quantities every bound is
//! assembled from.
//!
//! All information quantities are in nats. An infinite divergence is a normal
//! return value (`f64::INFINITY`), not an error: a vacuous bound is a
//! meaningful outcome and callers decide what to do with it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::ScalarLocationProblem;

/// Relative tolerance for symmetry and positive-semidefiniteness checks.
pub const MATRIX_TOL: f64 = 1e-12;

/// `N(mean, variance)` on the real line. Zero variance is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarGaussian {
    pub mean: f64,
    pub variance: f64,
}

impl ScalarGaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("mean", "must be finite"));
        }
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::invalid("variance", "must be finite and >= 0"));
        }
        Ok(Self { mean, variance })
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance == 0.0
    }
}

/// Symmetrizes `m` as `(M + Mᵀ)/2` after checking it is square and symmetric
/// to [`MATRIX_TOL`] relative to its largest entry.
pub fn symmetrized(m: &DMatrix<f64>, field: &str) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(field, "matrix must be square"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(field, "matrix entries must be finite"));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > MATRIX_TOL * scale {
        return Err(Error::invalid(field, "matrix must be symmetric"));
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `N(mean, covariance)` in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    degenerate: bool,
}

impl MultivariateGaussian {
    /// The covariance is symmetrized and must be positive semidefinite: every
    /// eigenvalue at least `-1e-12 × largest`.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::invalid("mean", "dimension must be >= 1"));
        }
        if covariance.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("mean", "entries must be finite"));
        }
        let covariance = symmetrized(&covariance, "covariance")?;
        let ev = sym_eigenvalues(&covariance);
        let largest = ev.last().copied().unwrap_or(0.0).max(0.0);
        let smallest = ev[0];
        if smallest < -MATRIX_TOL * largest {
            return Err(Error::invalid("covariance", "must be positive semidefinite"));
        }
        let degenerate = smallest <= MATRIX_TOL * largest;
        Ok(Self {
            mean,
            covariance,
            degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// `KL(p ‖ q)` between scalar Gaussians.
///
/// Returns `+∞` when `q` is a point mass (unless `p` is the same point mass)
/// or when `p` is a point mass and `q` is not.
pub fn kl_scalar(p: &ScalarGaussian, q: &ScalarGaussian) -> f64 {
    match (p.is_degenerate(), q.is_degenerate()) {
        (true, true) if p.mean == q.mean => return 0.0,
        (false, false) => {}
        _ => return f64::INFINITY,
    }
    let ratio = p.variance / q.variance;
    let dm = p.mean - q.mean;
    // ratio - 1 - ln(ratio) computed without cancellation near ratio = 1
    let shape = (ratio - 1.0) - (ratio - 1.0).ln_1p();
    (0.5 * (shape + dm * dm / q.variance)).max(0.0)
}

/// `KL(p ‖ q)` between multivariate Gaussians.
///
/// A singular `q` covariance (or a singular `p` covariance) yields `+∞`.
pub fn kl_mvn(p: &MultivariateGaussian, q: &MultivariateGaussian) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let d = p.dim() as f64;
    let (Some(chol_q), Some(chol_p)) = (
        Cholesky::new(q.covariance.clone()),
        Cholesky::new(p.covariance.clone()),
    ) else {
        return Ok(f64::INFINITY);
    };
    if q.is_degenerate() || p.is_degenerate() {
        return Ok(f64::INFINITY);
    }
    let trace = chol_q.solve(&p.covariance).trace();
    let dm = &p.mean - &q.mean;
    let mahal = dm.dot(&chol_q.solve(&dm));
    let logdet = |c: &Cholesky<f64, nalgebra::Dyn>| -> f64 {
        2.0 * c.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>()
    };
    let kl = 0.5 * (trace + mahal - d + logdet(&chol_q) - logdet(&chol_p));
    Ok(kl.max(0.0))
}

/// `I(W; Z_i)` for the noisy weighted average `W = Σ α_j Z_j + N`:
/// `½ ln(Var W / Var(W | Z_i))`.
pub fn mi_weighted_average_scalar(problem: &ScalarLocationProblem, i: usize) -> Result<f64> {
    problem.check_index(i)?;
    let total = problem.marginal_w_variance();
    if total <= 0.0 {
        return Err(Error::invalid(
            "alpha/sigma_n2",
            "Var(W) must be > 0 (all weights and noise are zero)",
        ));
    }
    let conditional = problem.reference_variance(i);
    if problem.alpha()[i] == 0.0 {
        return Ok(0.0);
    }
    if conditional <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * (total / conditional).ln())
}

/// `I(W; Z_[n]) = ½ ln(Var W / σ_N²)`; `+∞` for a noiseless data-dependent
/// algorithm, 0 when `W` ignores the data.
pub fn mi_full_sample_scalar(problem: &ScalarLocationProblem) -> f64 {
    let signal = problem.signal_variance();
    if signal == 0.0 {
        return 0.0;
    }
    if problem.sigma_n2() == 0.0 {
        return f64::INFINITY;
    }
    0.5 * (signal / problem.sigma_n2()).ln_1p()
}

type CgfFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A centered cumulant generating function `Λ(λ) = ln E[e^{λF}] − λ E[F]`
/// restricted to `λ ∈ [0, domain_upper)`.
///
/// The optional derivative lets the optimizer locate the minimizer of
/// `(y + Λ(λ))/λ` from the stationarity condition instead of from function
/// values alone.
#[derive(Clone)]
pub struct CgfSpec {
    evaluate: CgfFn,
    derivative: Option<CgfFn>,
    domain_upper: f64,
    label: &'static str,
}

impl fmt::Debug for CgfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CgfSpec")
            .field("label", &self.label)
            .field("domain_upper", &self.domain_upper)
            .field("has_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl CgfSpec {
    pub fn new(
        label: &'static str,
        domain_upper: f64,
        evaluate: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            evaluate: Arc::new(evaluate),
            derivative: None,
            domain_upper,
            label,
        }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// `Λ(λ) = c λ²` on `[0, ∞)`.
    pub fn quadratic(c: f64) -> Self {
        Self::new("quadratic", f64::INFINITY, move |l| c * l * l).with_derivative(move |l| 2.0 * c * l)
    }

    /// The CGF of `F = a·W + b` for `W ~ q`: `a² Var(W) λ² / 2`.
    pub fn gaussian_affine(slope: f64, q: &ScalarGaussian) -> Self {
        Self::quadratic(0.5 * slope * slope * q.variance)
    }

    pub fn evaluate(&self, lambda: f64) -> f64 {
        (self.evaluate)(lambda)
    }

    pub fn derivative(&self, lambda: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(lambda))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn domain_upper(&self) -> f64 {
        self.domain_upper
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    /// Spot-checks `Λ(0) = 0`, nonnegativity and midpoint convexity on a grid
    /// of triples inside the domain.
    pub fn check_shape(&self) -> Result<()> {
        let zero = self.evaluate(0.0);
        if zero.abs() > 1e-12 {
            return Err(Error::Numerical(format!("{}: Λ(0) = {zero}", self.label)));
        }
        let top = if self.domain_upper.is_finite() {
            0.99 * self.domain_upper
        } else {
            10.0
        };
        let pts: Vec<f64> = (1..=40).map(|k| top * k as f64 / 40.0).collect();
        for &l in &pts {
            let v = self.evaluate(l);
            if !(v >= -1e-12 * (1.0 + v.abs())) {
                return Err(Error::Numerical(format!("{}: Λ({l}) = {v} < 0", self.label)));
            }
        }
        for w in pts.windows(3) {
            let (a, b, c) = (self.evaluate(w[0]), self.evaluate(w[1]), self.evaluate(w[2]));
            // equally spaced, so convexity is b <= (a + c)/2
            if b > 0.5 * (a + c) + 1e-10 * (1.0 + b.abs()) {
                return Err(Error::Numerical(format!("{}: not convex near λ = {}", self.label, w[1])));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gauss_hermite;
    use proptest::prelude::*;

    fn g(m: f64, v: f64) -> ScalarGaussian {
        ScalarGaussian::new(m, v).unwrap()
    }

    #[test]
    fn kl_scalar_examples() {
        assert_eq!(kl_scalar(&g(0.0, 1.0), &g(0.0, 1.0)), 0.0);
        assert!((kl_scalar(&g(1.0, 1.0), &g(0.0, 1.0)) - 0.5).abs() < 1e-15);
        let want = 0.5 * (2.0 - 1.0 + (0.5f64).ln());
        assert!((kl_scalar(&g(0.0, 2.0), &g(0.0, 1.0)) - want).abs() < 1e-15);
        assert!((want - 0.153426).abs() < 1e-6);
    }

    #[test]
    fn kl_scalar_degenerate_reference_is_infinite() {
        assert_eq!(kl_scalar(&g(0.0, 1.0), &g(0.0, 0.0)), f64::INFINITY);
        assert_eq!(kl_scalar(&g(0.0, 0.0), &g(0.0, 1.0)), f64::INFINITY);
        assert_eq!(kl_scalar(&g(2.0, 0.0), &g(2.0, 0.0)), 0.0);
    }

    #[test]
    fn scalar_gaussian_rejects_negative_variance() {
        assert!(ScalarGaussian::new(0.0, -1.0).is_err());
        assert!(ScalarGaussian::new(f64::NAN, 1.0).is_err());
        assert!(g(1.0, 0.0).is_degenerate());
    }

    fn mvn(mean: &[f64], cov: &[f64]) -> MultivariateGaussian {
        let d = mean.len();
        MultivariateGaussian::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(d, d, cov)).unwrap()
    }

    #[test]
    fn kl_mvn_examples() {
        let cov = [2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5];
        let p = mvn(&[1.0, 2.0, 3.0], &cov);
        assert!(kl_mvn(&p, &p).unwrap().abs() < 1e-14);

        let p = mvn(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        let q = mvn(&[1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        assert!((kl_mvn(&p, &q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_mvn_reduces_to_scalar() {
        let cases = [(0.3, 1.2, -0.4, 0.7), (2.0, 0.1, 1.0, 3.0), (-1.0, 5.0, 0.0, 5.0), (0.0, 0.5, 0.5, 0.25), (4.0, 2.0, -3.0, 9.0)];
        for (mp, vp, mq, vq) in cases {
            let a = kl_scalar(&g(mp, vp), &g(mq, vq));
            let b = kl_mvn(&mvn(&[mp], &[vp]), &mvn(&[mq], &[vq])).unwrap();
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn kl_mvn_errors_and_infinities() {
        let p = mvn(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        let q3 = mvn(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(kl_mvn(&p, &q3), Err(Error::DimensionMismatch { .. })));
        let singular = mvn(&[0.0, 0.0], &[1.0, 1.0, 1.0, 1.0]);
        assert!(singular.is_degenerate());
        assert_eq!(kl_mvn(&p, &singular).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mvn_rejects_asymmetric_and_indefinite() {
        let bad = MultivariateGaussian::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]));
        assert!(bad.is_err());
        let indefinite = MultivariateGaussian::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(indefinite.is_err());
        // round-off asymmetry is absorbed
        let ok = MultivariateGaussian::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-15, 1.0]),
        )
        .unwrap();
        assert_eq!(ok.covariance()[(0, 1)], ok.covariance()[(1, 0)]);
    }

    #[test]
    fn mi_weighted_average_examples() {
        let p = ScalarLocationProblem::uniform(0.0, 1.0, 2, 0.0).unwrap();
        let v = mi_weighted_average_scalar(&p, 0).unwrap();
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((v - 0.346574).abs() < 1e-6);

        let p = ScalarLocationProblem::new(0.0, 1.0, vec![1.0, 0.0, 0.0], 1.0).unwrap();
        assert!((mi_weighted_average_scalar(&p, 0).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(mi_weighted_average_scalar(&p, 1).unwrap(), 0.0);

        let noiseless = ScalarLocationProblem::new(0.0, 1.0, vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(mi_weighted_average_scalar(&noiseless, 0).unwrap(), f64::INFINITY);
        assert!(mi_weighted_average_scalar(&noiseless, 5).is_err());

        let dead = ScalarLocationProblem::with_free_weights(0.0, 1.0, vec![0.0, 0.0], 0.0).unwrap();
        assert!(mi_weighted_average_scalar(&dead, 0).is_err());
    }

    #[test]
    fn mi_full_sample_examples() {
        let p = ScalarLocationProblem::uniform(0.0, 1.0, 5, 0.0).unwrap();
        assert_eq!(mi_full_sample_scalar(&p), f64::INFINITY);
        let p = ScalarLocationProblem::with_free_weights(0.0, 1.0, vec![0.0; 3], 1.0).unwrap();
        assert_eq!(mi_full_sample_scalar(&p), 0.0);
        let p = ScalarLocationProblem::uniform(0.0, 1.0, 4, 1.0).unwrap();
        let v = mi_full_sample_scalar(&p);
        assert!((v - 0.5 * 1.25f64.ln()).abs() < 1e-15);
        assert!((v - 0.111572).abs() < 1e-6);
    }

    #[test]
    fn mi_matches_expected_kl_to_marginal() {
        // I(W; Z_i) = E_{Z_i} KL(P_{W|Z_i} || P_W); the integrand is quadratic
        // in z, so Gauss–Hermite is exact.
        let problems = [
            ScalarLocationProblem::uniform(0.5, 2.0, 7, 0.3).unwrap(),
            ScalarLocationProblem::new(-1.0, 0.7, vec![0.6, 0.3, 0.1], 0.0).unwrap(),
            ScalarLocationProblem::new(2.0, 1.5, vec![0.25, 0.25, 0.4, 0.1], 1.1).unwrap(),
        ];
        for p in &problems {
            let marginal = g(p.mu(), p.marginal_w_variance());
            for i in 0..p.n() {
                let sd = p.sigma2().sqrt();
                let via_kl = gauss_hermite().integrate(|x| {
                    let post = p.posterior_w_given_zi(i, p.mu() + sd * x).unwrap();
                    kl_scalar(&post, &marginal)
                });
                let mi = mi_weighted_average_scalar(p, i).unwrap();
                assert!((via_kl - mi).abs() < 1e-10, "{via_kl} vs {mi}");
            }
        }
    }

    #[test]
    fn gaussian_affine_cgf_is_half_a2v() {
        let q = g(0.7, 1.9);
        let a = -1.3;
        let cgf = CgfSpec::gaussian_affine(a, &q);
        for k in 0..10 {
            let l = 0.37 * k as f64;
            let want = a * a * q.variance * l * l / 2.0;
            assert!((cgf.evaluate(l) - want).abs() <= 1e-12 * (1.0 + want));
        }
        cgf.check_shape().unwrap();
    }

    #[test]
    fn check_shape_rejects_concave() {
        let bad = CgfSpec::new("sqrt", f64::INFINITY, |l: f64| l.sqrt());
        assert!(bad.check_shape().is_err());
        let offset = CgfSpec::new("offset", f64::INFINITY, |l: f64| 1.0 + l * l);
        assert!(offset.check_shape().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn kl_nonnegative_and_zero_iff_equal(
            mp in -5.0..5.0f64, vp in 0.01..10.0f64,
            mq in -5.0..5.0f64, vq in 0.01..10.0f64,
        ) {
            let k = kl_scalar(&g(mp, vp), &g(mq, vq));
            prop_assert!(k >= 0.0);
            prop_assert_eq!(kl_scalar(&g(mp, vp), &g(mp, vp)), 0.0);
            if (mp - mq).abs() > 1e-6 || (vp - vq).abs() > 1e-6 {
                prop_assert!(k > 0.0);
            }
        }

        #[test]
        fn donsker_varadhan_holds_for_affine_gaps(
            mp in -3.0..3.0f64, vp in 0.05..4.0f64,
            mq in -3.0..3.0f64, vq in 0.05..4.0f64,
            a in -2.0..2.0f64, b in -2.0..2.0f64,
            lambda in -3.0..3.0f64,
        ) {
            let (p, q) = (g(mp, vp), g(mq, vq));
            let lhs = lambda * (a * p.mean + b);
            let log_mgf = lambda * (a * q.mean + b) + CgfSpec::gaussian_affine(a, &q).evaluate(lambda);
            prop_assert!(lhs <= kl_scalar(&p, &q) + log_mgf + 1e-12);
        }
    }
}

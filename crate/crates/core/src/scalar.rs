//! The scalar quadratic Gaussian location problem.
//!
//! Data `Z_1, …, Z_n` are iid `N(μ, σ²)`, the learner outputs
//! `W = Σ α_i Z_i + N` with `N ~ N(0, σ_N²)`, and the loss is `(w − z)²`.
//! For index `i` the gap function is `F_i = σ² + μ² − Z_i² + 2(Z_i − μ)W`
//! and the reference distribution is `Q^i_W = N(μ, v_i)`, where
//! `v_i = Σ_{j≠i} α_j² σ² + σ_N²` is the conditional variance of `W` given
//! `Z_i`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{mi_full_sample_scalar, mi_weighted_average_scalar, CgfSpec, ScalarGaussian};
use crate::numeric::{expect_abs_times, expected_sqrt_product_chi2, gauss_hermite, leave_one_out_sq_sums, pairwise_sum};
use crate::optim::{minimize_bound_objective, InfResult};

/// Tolerance on `Σ α_i = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLocationProblem {
    mu: f64,
    sigma2: f64,
    alpha: Vec<f64>,
    sigma_n2: f64,
    on_simplex: bool,
    loo_sq: Vec<f64>,
}

impl ScalarLocationProblem {
    /// Weights must be nonnegative and sum to one within [`SIMPLEX_TOL`].
    pub fn new(mu: f64, sigma2: f64, alpha: Vec<f64>, sigma_n2: f64) -> Result<Self> {
        let sum = pairwise_sum(&alpha);
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid("alpha", format!("weights must sum to 1 (simplex), got {sum}")));
        }
        Self::build(mu, sigma2, alpha, sigma_n2, true)
    }

    /// Nonnegative weights with no simplex requirement, e.g. all zeros for an
    /// algorithm that ignores the data. The bound families assume the simplex;
    /// this constructor exists for the oracle-side checks.
    pub fn with_free_weights(mu: f64, sigma2: f64, alpha: Vec<f64>, sigma_n2: f64) -> Result<Self> {
        Self::build(mu, sigma2, alpha, sigma_n2, false)
    }

    pub fn uniform(mu: f64, sigma2: f64, n: usize, sigma_n2: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        Self::new(mu, sigma2, vec![1.0 / n as f64; n], sigma_n2)
    }

    /// `α = (1, 0, …, 0)`: the learner looks at the first sample only.
    pub fn first_sample_only(mu: f64, sigma2: f64, n: usize, sigma_n2: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        let mut alpha = vec![0.0; n];
        alpha[0] = 1.0;
        Self::new(mu, sigma2, alpha, sigma_n2)
    }

    fn build(mu: f64, sigma2: f64, alpha: Vec<f64>, sigma_n2: f64, on_simplex: bool) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid("sigma2", "must be finite and > 0"));
        }
        if !(sigma_n2 >= 0.0) || !sigma_n2.is_finite() {
            return Err(Error::invalid("sigma_n2", "must be finite and >= 0"));
        }
        if alpha.is_empty() {
            return Err(Error::invalid("alpha", "n must be >= 1"));
        }
        if alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::invalid("alpha", "weights must be finite and >= 0"));
        }
        let loo_sq = leave_one_out_sq_sums(&alpha);
        Ok(Self {
            mu,
            sigma2,
            alpha,
            sigma_n2,
            on_simplex,
            loo_sq,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn n(&self) -> usize {
        self.alpha.len()
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }
    pub fn is_on_simplex(&self) -> bool {
        self.on_simplex
    }

    /// All weights equal to within [`SIMPLEX_TOL`].
    pub fn is_uniform(&self) -> bool {
        let first = self.alpha[0];
        self.alpha.iter().all(|a| (a - first).abs() <= SIMPLEX_TOL)
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    /// `Σ_j α_j² σ²`.
    pub fn signal_variance(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum::<f64>() * self.sigma2
    }

    /// `Var(W) = Σ_j α_j² σ² + σ_N²`.
    pub fn marginal_w_variance(&self) -> f64 {
        self.signal_variance() + self.sigma_n2
    }

    /// `v_i = Σ_{j≠i} α_j² σ² + σ_N²`, the variance of `W | Z_i` and of `Q^i_W`.
    /// Panics if `i` is out of range.
    pub fn reference_variance(&self, i: usize) -> f64 {
        self.loo_sq[i] * self.sigma2 + self.sigma_n2
    }

    pub fn posterior_w_given_zi(&self, i: usize, z_i: f64) -> Result<ScalarGaussian> {
        posterior_w_given_zi(self, i, z_i)
    }
}

/// Which bound a [`BoundResult`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum BoundFamily {
    Theorem1,
    Cor1First,
    Cor1Second,
    Cor2First,
    Cor3First,
    Cor3Second,
    Cor4,
    EqMIbFirst,
    EqMIbSecond,
    XuRaginsky,
    BuEtAl,
    TrueGen,
    /// Vector problem, direct application of the per-sample KL bound.
    VecDirect,
    /// Vector problem, bound applied per eigendirection of the loss matrix.
    VecDecomposed,
}

impl BoundFamily {
    pub const ALL: [BoundFamily; 14] = [
        BoundFamily::Theorem1,
        BoundFamily::Cor1First,
        BoundFamily::Cor1Second,
        BoundFamily::Cor2First,
        BoundFamily::Cor3First,
        BoundFamily::Cor3Second,
        BoundFamily::Cor4,
        BoundFamily::EqMIbFirst,
        BoundFamily::EqMIbSecond,
        BoundFamily::XuRaginsky,
        BoundFamily::BuEtAl,
        BoundFamily::TrueGen,
        BoundFamily::VecDirect,
        BoundFamily::VecDecomposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundFamily::Theorem1 => "Theorem1",
            BoundFamily::Cor1First => "Cor1First",
            BoundFamily::Cor1Second => "Cor1Second",
            BoundFamily::Cor2First => "Cor2First",
            BoundFamily::Cor3First => "Cor3First",
            BoundFamily::Cor3Second => "Cor3Second",
            BoundFamily::Cor4 => "Cor4",
            BoundFamily::EqMIbFirst => "EqMIbFirst",
            BoundFamily::EqMIbSecond => "EqMIbSecond",
            BoundFamily::XuRaginsky => "XuRaginsky",
            BoundFamily::BuEtAl => "BuEtAl",
            BoundFamily::TrueGen => "TrueGen",
            BoundFamily::VecDirect => "VecDirect",
            BoundFamily::VecDecomposed => "VecDecomposed",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, BoundFamily::VecDirect | BoundFamily::VecDecomposed | BoundFamily::TrueGen)
    }

    pub fn is_scalar(self) -> bool {
        !matches!(self, BoundFamily::VecDirect | BoundFamily::VecDecomposed)
    }

    /// Families whose closed forms exist only for equal weights.
    pub fn requires_uniform(self) -> bool {
        matches!(
            self,
            BoundFamily::Cor3First | BoundFamily::Cor3Second | BoundFamily::EqMIbFirst | BoundFamily::EqMIbSecond
        )
    }

    /// Baselines whose value depends on a caller-supplied sub-Gaussian proxy;
    /// quadratic loss violates their assumption, so they need not dominate
    /// the true error.
    pub fn is_baseline(self) -> bool {
        matches!(self, BoundFamily::XuRaginsky | BoundFamily::BuEtAl)
    }
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("family", format!("unknown bound family `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Bound on the expected generalization error, in loss units; may be `+∞`.
    pub value: f64,
    pub family: BoundFamily,
    /// λ used for each index (a shared λ is repeated).
    pub per_index_lambda: Option<Vec<f64>>,
    pub finite: bool,
}

impl BoundResult {
    pub fn new(family: BoundFamily, value: f64, per_index_lambda: Option<Vec<f64>>) -> Self {
        Self {
            value,
            family,
            per_index_lambda,
            finite: value.is_finite(),
        }
    }

    /// `value / true_gen`, the tightness ratio.
    pub fn ratio_to(&self, truth: f64) -> f64 {
        self.value / truth
    }
}

/// Exact expected generalization error, `2σ²/n` for simplex weights.
///
/// Without the simplex constraint the same telescoping gives
/// `(2σ²/n) Σ α_i`.
pub fn true_gen_error(problem: &ScalarLocationProblem) -> f64 {
    let scale = 2.0 * problem.sigma2 / problem.n() as f64;
    if problem.on_simplex {
        scale
    } else {
        scale * pairwise_sum(&problem.alpha)
    }
}

/// `P_{W|Z_i=z} = N(μ + α_i(z − μ), v_i)`.
pub fn posterior_w_given_zi(problem: &ScalarLocationProblem, i: usize, z_i: f64) -> Result<ScalarGaussian> {
    problem.check_index(i)?;
    ScalarGaussian::new(
        problem.mu + problem.alpha[i] * (z_i - problem.mu),
        problem.reference_variance(i),
    )
}

/// `Q^i_W = N(μ, v_i)`, independent of `Z_i`.
pub fn reference_q(problem: &ScalarLocationProblem, i: usize) -> Result<ScalarGaussian> {
    problem.check_index(i)?;
    ScalarGaussian::new(problem.mu, problem.reference_variance(i))
}

/// `KL(P_{W|Z_i=z} ‖ Q^i_W) = α_i²(z − μ)² / (2 v_i)`.
pub fn kl_p_q(problem: &ScalarLocationProblem, i: usize, z_i: f64) -> Result<f64> {
    problem.check_index(i)?;
    let shift = problem.alpha[i] * (z_i - problem.mu);
    if shift == 0.0 {
        return Ok(0.0);
    }
    let v = problem.reference_variance(i);
    if v == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(shift * shift / (2.0 * v))
}

/// `Λ_{F_i|z, Q^i_W}(λ) = 2λ²(z − μ)² v_i` on `[0, ∞)`.
pub fn cgf_conditional(problem: &ScalarLocationProblem, i: usize, z_i: f64) -> Result<CgfSpec> {
    problem.check_index(i)?;
    let d = z_i - problem.mu;
    Ok(CgfSpec::quadratic(2.0 * d * d * problem.reference_variance(i)))
}

/// `E_{Z_i} KL(P_{W|Z_i} ‖ Q^i_W) = α_i² σ² / (2 v_i)`.
pub fn expected_kl(problem: &ScalarLocationProblem, i: usize) -> Result<f64> {
    problem.check_index(i)?;
    let a = problem.alpha[i];
    if a == 0.0 {
        return Ok(0.0);
    }
    let v = problem.reference_variance(i);
    if v == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(a * a * problem.sigma2 / (2.0 * v))
}

/// λ² coefficient of `E_{Z_i} Λ_{F_i, Q^i_W}(λ)`: `2σ² v_i`.
pub fn expected_cgf_coeff(problem: &ScalarLocationProblem, i: usize) -> Result<f64> {
    problem.check_index(i)?;
    Ok(2.0 * problem.sigma2 * problem.reference_variance(i))
}

/// The per-index optimal DV parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaStar {
    Interior(f64),
    /// `α_i = 0`: the KL term vanishes and the infimum is the `λ → 0⁺` limit.
    Boundary,
    /// `v_i = 0` with `α_i > 0`: the KL term is infinite.
    Unbounded,
}

impl LambdaStar {
    pub fn value(self) -> f64 {
        match self {
            LambdaStar::Interior(l) => l,
            LambdaStar::Boundary => 0.0,
            LambdaStar::Unbounded => f64::INFINITY,
        }
    }
}

/// `λ*_i = α_i / (2 v_i)`.
pub fn lambda_star(problem: &ScalarLocationProblem, i: usize) -> Result<LambdaStar> {
    problem.check_index(i)?;
    let a = problem.alpha[i];
    if a == 0.0 {
        return Ok(LambdaStar::Boundary);
    }
    let v = problem.reference_variance(i);
    if v == 0.0 {
        return Ok(LambdaStar::Unbounded);
    }
    Ok(LambdaStar::Interior(a / (2.0 * v)))
}

/// `inf_λ (y + cλ²)/λ` with the `y = 0` limit taken exactly.
///
/// For `y = 0` the optimizer reports the objective at a tiny λ; the infimum
/// itself is the `λ → 0⁺` limit, which is `Λ'(0) = 0` for any centered CGF.
fn bound_term(y: f64, cgf: &CgfSpec) -> Result<(f64, f64)> {
    if y == 0.0 {
        return Ok((0.0, 0.0));
    }
    let r: InfResult = minimize_bound_objective(y, cgf)?;
    if !r.is_finite() {
        return Ok((f64::INFINITY, f64::NAN));
    }
    if !r.converged {
        return Err(Error::Numerical(format!(
            "λ search did not converge for y = {y} ({})",
            cgf.label()
        )));
    }
    Ok((r.value, r.minimizer))
}

fn mean(terms: &[f64]) -> f64 {
    pairwise_sum(terms) / terms.len() as f64
}

/// Conditional KL bound with the leave-one-out reference:
/// `(1/n) Σ_i E_{Z_i}[inf_λ (KL(z) + Λ(λ; z))/λ]`.
///
/// The outer expectation is a 64-node Gauss–Hermite sum and the inner
/// infimum is solved numerically at every node.
pub fn bound_theorem1(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    let sd = problem.sigma2.sqrt();
    let gh = gauss_hermite();
    let mut terms = Vec::with_capacity(problem.n());
    let mut lambdas = Vec::with_capacity(problem.n());
    // the node with the largest weight reports the λ for this index
    let heaviest = (0..gh.weights.len())
        .max_by(|&a, &b| gh.weights[a].total_cmp(&gh.weights[b]))
        .unwrap_or(0);
    for i in 0..problem.n() {
        if problem.alpha[i] == 0.0 {
            terms.push(0.0);
            lambdas.push(0.0);
            continue;
        }
        let mut node_values = Vec::with_capacity(gh.nodes.len());
        let mut lambda_i = f64::NAN;
        for (k, (&x, &w)) in gh.nodes.iter().zip(&gh.weights).enumerate() {
            let z = problem.mu + sd * x;
            let (v, l) = bound_term(kl_p_q(problem, i, z)?, &cgf_conditional(problem, i, z)?)?;
            if k == heaviest {
                lambda_i = l;
            }
            node_values.push(w * v);
        }
        terms.push(pairwise_sum(&node_values));
        lambdas.push(lambda_i);
    }
    Ok(BoundResult::new(BoundFamily::Theorem1, mean(&terms), Some(lambdas)))
}

/// Expected KL and expected CGF, one λ per index:
/// `(1/n) Σ_i inf_λ (E KL_i + E Λ_i(λ))/λ`.
pub fn bound_cor1_first(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    let mut terms = Vec::with_capacity(problem.n());
    let mut lambdas = Vec::with_capacity(problem.n());
    for i in 0..problem.n() {
        let kl = expected_kl(problem, i)?;
        let (v, l) = bound_term(kl, &CgfSpec::quadratic(expected_cgf_coeff(problem, i)?))?;
        terms.push(v);
        lambdas.push(l);
    }
    Ok(BoundResult::new(BoundFamily::Cor1First, mean(&terms), Some(lambdas)))
}

/// As [`bound_cor1_first`] but with a single λ shared by all indices,
/// `inf_λ (1/n) Σ_i (E KL_i + E Λ_i(λ))/λ`.
pub fn bound_cor1_second(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    let n = problem.n();
    let kls: Vec<f64> = (0..n).map(|i| expected_kl(problem, i)).collect::<Result<_>>()?;
    let coeffs: Vec<f64> = (0..n).map(|i| expected_cgf_coeff(problem, i)).collect::<Result<_>>()?;
    let (v, l) = bound_term(mean(&kls), &CgfSpec::quadratic(mean(&coeffs)))?;
    Ok(BoundResult::new(BoundFamily::Cor1Second, v, Some(vec![l; n])))
}

/// Infimum inside the expectation over the sample:
/// `E_{Z_[n]} inf_λ (1/n) Σ_i (KL_i + Λ_i(λ))/λ`.
///
/// With `x_i = (Z_i − μ)²/σ²` iid χ²₁, `KL_i = a_i x_i` and
/// `Λ_i = b_i x_i λ²`, so the inner infimum is `(2/n)√((Σ a_i x_i)(Σ b_i x_i))`
/// and the expectation is an exact two-dimensional integral.
pub fn bound_cor2_first(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    let n = problem.n();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let kl = expected_kl(problem, i)?;
        if kl.is_infinite() {
            return Ok(BoundResult::new(BoundFamily::Cor2First, f64::INFINITY, None));
        }
        a.push(kl);
        b.push(expected_cgf_coeff(problem, i)?);
    }
    let value = 2.0 / n as f64 * expected_sqrt_product_chi2(&a, &b);
    Ok(BoundResult::new(BoundFamily::Cor2First, value, None))
}

fn require_uniform(problem: &ScalarLocationProblem, family: BoundFamily) -> Result<()> {
    if !problem.on_simplex || !problem.is_uniform() {
        return Err(Error::Unsupported(format!("{family} requires uniform weights")));
    }
    Ok(())
}

fn require_noiseless(problem: &ScalarLocationProblem, family: BoundFamily) -> Result<()> {
    if problem.sigma_n2 != 0.0 {
        return Err(Error::Unsupported(format!("{family} requires sigma_n2 = 0")));
    }
    Ok(())
}

/// `Λ_{F_i, P_W ⊗ P_{Z_i}}(λ) = λσ² − ½ ln(1 − 2(2λ²V − λ)σ²)` with
/// `V = Var(W)`; finite while the log argument stays positive.
pub fn cgf_product_of_marginals(problem: &ScalarLocationProblem) -> CgfSpec {
    let s2 = problem.sigma2;
    let v = problem.marginal_w_variance();
    // roots of 4Vσ²λ² − 2σ²λ − 1
    let upper = if v > 0.0 {
        (2.0 * s2 + (4.0 * s2 * s2 + 16.0 * v * s2).sqrt()) / (8.0 * v * s2)
    } else {
        f64::INFINITY
    };
    let arg = move |l: f64| 1.0 - 2.0 * (2.0 * l * l * v - l) * s2;
    CgfSpec::new("chi-square product", upper, move |l| {
        let q = arg(l);
        if q <= 0.0 {
            f64::INFINITY
        } else {
            l * s2 - 0.5 * q.ln()
        }
    })
    .with_derivative(move |l| {
        let dq = -2.0 * (4.0 * l * v - 1.0) * s2;
        s2 - 0.5 * dq / arg(l)
    })
}

/// λ² coefficient of `E_{Z_i} Λ_{F_i, P_W}(λ)`: `2σ² Var(W)`.
pub fn expected_cgf_coeff_marginal(problem: &ScalarLocationProblem) -> f64 {
    2.0 * problem.sigma2 * problem.marginal_w_variance()
}

fn mi_terms(problem: &ScalarLocationProblem) -> Result<Vec<f64>> {
    (0..problem.n()).map(|i| mi_weighted_average_scalar(problem, i)).collect()
}

/// Mutual-information bound with the marginal `P_W` as reference:
/// `(1/n) Σ_i inf_λ (I(W; Z_i) + E Λ_{F_i, P_W}(λ))/λ`.
pub fn bound_cor3_first(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    require_uniform(problem, BoundFamily::Cor3First)?;
    let cgf = CgfSpec::quadratic(expected_cgf_coeff_marginal(problem));
    let mut terms = Vec::new();
    let mut lambdas = Vec::new();
    for mi in mi_terms(problem)? {
        let (v, l) = bound_term(mi, &cgf)?;
        terms.push(v);
        lambdas.push(l);
    }
    Ok(BoundResult::new(BoundFamily::Cor3First, mean(&terms), Some(lambdas)))
}

/// Mutual-information bound against the product of marginals: `(1/n) Σ_i Λ*⁻¹_{F_i, P_W ⊗ P_{Z_i}}(I(W; Z_i))`.
pub fn bound_cor3_second(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    require_uniform(problem, BoundFamily::Cor3Second)?;
    require_noiseless(problem, BoundFamily::Cor3Second)?;
    let cgf = cgf_product_of_marginals(problem);
    let mut terms = Vec::new();
    let mut lambdas = Vec::new();
    for mi in mi_terms(problem)? {
        let (v, l) = bound_term(mi, &cgf)?;
        terms.push(v);
        lambdas.push(l);
    }
    Ok(BoundResult::new(BoundFamily::Cor3Second, mean(&terms), Some(lambdas)))
}

/// First MI bound with a single λ shared across indices.
pub fn bound_eq_mib_first(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    require_uniform(problem, BoundFamily::EqMIbFirst)?;
    let cgf = CgfSpec::quadratic(expected_cgf_coeff_marginal(problem));
    let (v, l) = bound_term(mean(&mi_terms(problem)?), &cgf)?;
    Ok(BoundResult::new(BoundFamily::EqMIbFirst, v, Some(vec![l; problem.n()])))
}

/// Second MI bound with a single λ shared across indices.
pub fn bound_eq_mib_second(problem: &ScalarLocationProblem) -> Result<BoundResult> {
    require_uniform(problem, BoundFamily::EqMIbSecond)?;
    require_noiseless(problem, BoundFamily::EqMIbSecond)?;
    let (v, l) = bound_term(mean(&mi_terms(problem)?), &cgf_product_of_marginals(problem))?;
    Ok(BoundResult::new(BoundFamily::EqMIbSecond, v, Some(vec![l; problem.n()])))
}

type ProxyFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Conditional sub-Gaussian variance proxy `σ²_{z_i}` of `F_i` under
/// `Q^i_W`, in the convention `Λ(λ) ≤ σ²_{z_i} λ²`.
#[derive(Clone)]
pub enum VarianceProxy {
    /// The exact proxy of the Gaussian model, `2(z − μ)² v_i`.
    Gaussian,
    Constant(f64),
    /// Arbitrary map `(i, z_i) ↦ σ²_{z_i}`.
    PerSample(ProxyFn),
}

impl fmt::Debug for VarianceProxy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarianceProxy::Gaussian => f.write_str("Gaussian"),
            VarianceProxy::Constant(s) => write!(f, "Constant({s})"),
            VarianceProxy::PerSample(_) => f.write_str("PerSample(..)"),
        }
    }
}

fn checked_proxy(value: f64) -> Result<f64> {
    if !(value >= 0.0) {
        return Err(Error::invalid("variance_proxy", "must be >= 0"));
    }
    Ok(value)
}

/// Variance-proxy bound: `(1/n) Σ_i E_{Z_i} 2√(KL(z) σ²_z)`.
///
/// `inf_λ (K + σ²λ²)/λ = 2√(K σ²)`, which is where the factor 2 comes from.
pub fn bound_cor4(problem: &ScalarLocationProblem, proxy: &VarianceProxy) -> Result<BoundResult> {
    let sd = problem.sigma2.sqrt();
    let mut terms = Vec::with_capacity(problem.n());
    for i in 0..problem.n() {
        let a = problem.alpha[i];
        if a == 0.0 {
            terms.push(0.0);
            continue;
        }
        let v = problem.reference_variance(i);
        if v == 0.0 {
            terms.push(f64::INFINITY);
            continue;
        }
        // √KL(z) = α_i σ |x| / √(2 v_i) with z = μ + σx
        let scale = 2.0 * a * sd / (2.0 * v).sqrt();
        let term = match proxy {
            // 2√(α²(z−μ)²/(2v) · 2(z−μ)²v) = 2α(z−μ)², expectation 2ασ²
            VarianceProxy::Gaussian => 2.0 * a * problem.sigma2,
            VarianceProxy::Constant(s2) => {
                scale * checked_proxy(*s2)?.sqrt() * (2.0 / std::f64::consts::PI).sqrt()
            }
            VarianceProxy::PerSample(f) => {
                let bad = std::cell::Cell::new(false);
                let e = expect_abs_times(|x| {
                    let s = f(i, problem.mu + sd * x);
                    if !(s >= 0.0) {
                        bad.set(true);
                        return 0.0;
                    }
                    s.sqrt()
                });
                if bad.get() {
                    return Err(Error::invalid("variance_proxy", "must be >= 0"));
                }
                scale * e
            }
        };
        terms.push(term);
    }
    Ok(BoundResult::new(BoundFamily::Cor4, mean(&terms), None))
}

/// Variance-proxy bound after Jensen: `(1/n) Σ_i 2√(E[KL(Z_i) σ²_{Z_i}])`.
pub fn bound_cor4_relaxed(problem: &ScalarLocationProblem, proxy: &VarianceProxy) -> Result<BoundResult> {
    let sd = problem.sigma2.sqrt();
    let mut terms = Vec::with_capacity(problem.n());
    for i in 0..problem.n() {
        let a = problem.alpha[i];
        if a == 0.0 {
            terms.push(0.0);
            continue;
        }
        let v = problem.reference_variance(i);
        if v == 0.0 {
            terms.push(f64::INFINITY);
            continue;
        }
        let kl_coeff = a * a * problem.sigma2 / (2.0 * v);
        // E[x² σ²_z] with z = μ + σx
        let moment = match proxy {
            VarianceProxy::Gaussian => 6.0 * problem.sigma2 * v,
            VarianceProxy::Constant(s2) => checked_proxy(*s2)?,
            VarianceProxy::PerSample(f) => {
                let bad = std::cell::Cell::new(false);
                let e = gauss_hermite().integrate(|x| {
                    let s = f(i, problem.mu + sd * x);
                    if !(s >= 0.0) {
                        bad.set(true);
                    }
                    x * x * s
                });
                if bad.get() {
                    return Err(Error::invalid("variance_proxy", "must be >= 0"));
                }
                e
            }
        };
        terms.push(2.0 * (kl_coeff * moment).sqrt());
    }
    Ok(BoundResult::new(BoundFamily::Cor4, mean(&terms), None))
}

/// Full-sample MI baseline `√(2 s²/n · I(W; Z_[n]))` for a caller-supplied
/// sub-Gaussian proxy `s²` of the loss. Quadratic loss is not sub-Gaussian,
/// so this is a comparison baseline, not a certified bound.
pub fn bound_xu_raginsky(problem: &ScalarLocationProblem, loss_variance_proxy: f64) -> Result<BoundResult> {
    let s2 = checked_proxy(loss_variance_proxy)?;
    if s2 == 0.0 {
        return Ok(BoundResult::new(BoundFamily::XuRaginsky, 0.0, None));
    }
    let mi = mi_full_sample_scalar(problem);
    let value = (2.0 * s2 / problem.n() as f64 * mi).sqrt();
    Ok(BoundResult::new(BoundFamily::XuRaginsky, value, None))
}

/// Individual-sample MI baseline `(1/n) Σ_i √(2 s² I(W; Z_i))`.
pub fn bound_bu(problem: &ScalarLocationProblem, loss_variance_proxy: f64) -> Result<BoundResult> {
    let s2 = checked_proxy(loss_variance_proxy)?;
    if s2 == 0.0 {
        return Ok(BoundResult::new(BoundFamily::BuEtAl, 0.0, None));
    }
    let terms: Vec<f64> = mi_terms(problem)?.into_iter().map(|mi| (2.0 * s2 * mi).sqrt()).collect();
    Ok(BoundResult::new(BoundFamily::BuEtAl, mean(&terms), None))
}

/// Evaluates one family by name. Baselines use `loss_variance_proxy`; Cor4
/// uses the Gaussian proxy.
pub fn evaluate_family(
    problem: &ScalarLocationProblem,
    family: BoundFamily,
    loss_variance_proxy: Option<f64>,
) -> Result<BoundResult> {
    let need_proxy = || {
        loss_variance_proxy.ok_or_else(|| Error::invalid("loss_variance_proxy", format!("required by {family}")))
    };
    match family {
        BoundFamily::Theorem1 => bound_theorem1(problem),
        BoundFamily::Cor1First => bound_cor1_first(problem),
        BoundFamily::Cor1Second => bound_cor1_second(problem),
        BoundFamily::Cor2First => bound_cor2_first(problem),
        BoundFamily::Cor3First => bound_cor3_first(problem),
        BoundFamily::Cor3Second => bound_cor3_second(problem),
        BoundFamily::Cor4 => bound_cor4(problem, &VarianceProxy::Gaussian),
        BoundFamily::EqMIbFirst => bound_eq_mib_first(problem),
        BoundFamily::EqMIbSecond => bound_eq_mib_second(problem),
        BoundFamily::XuRaginsky => bound_xu_raginsky(problem, need_proxy()?),
        BoundFamily::BuEtAl => bound_bu(problem, need_proxy()?),
        BoundFamily::TrueGen => Ok(BoundResult::new(BoundFamily::TrueGen, true_gen_error(problem), None)),
        BoundFamily::VecDirect | BoundFamily::VecDecomposed => {
            Err(Error::Unsupported(format!("{family} applies to vector problems only")))
        }
    }
}

//! The `d`-dimensional location problem under the loss `‖w − z‖²_A`.
//!
//! `Z_i ~ N(μ, Σ)` iid, `W = Σ α_i Z_i + N` with `N ~ N(0, σ_N² I)`. Given
//! `Z_i` the output has covariance `M_i = s_i Σ + σ_N² I` with
//! `s_i = Σ_{j≠i} α_j²`, and the reference for index `i` is `N(μ, M_i)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{sym_eigenvalues, symmetrized, CgfSpec, MATRIX_TOL};
use crate::numeric::{leave_one_out_sq_sums, pairwise_sum};
use crate::scalar::{BoundFamily, BoundResult, SIMPLEX_TOL};

/// Largest supported dimension; everything is dense.
pub const MAX_DIM: usize = 512;

/// Tolerance for the eigendecomposition invariants.
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct VectorLocationProblem {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    alpha: Vec<f64>,
    sigma_n2: f64,
    a: DMatrix<f64>,
    loo_sq: Vec<f64>,
}

fn check_spd(m: &DMatrix<f64>, field: &str) -> Result<DMatrix<f64>> {
    let m = symmetrized(m, field)?;
    let ev = sym_eigenvalues(&m);
    let largest = *ev.last().unwrap();
    if !(ev[0] > MATRIX_TOL * largest) || !(largest > 0.0) {
        return Err(Error::invalid(field, "must be symmetric positive definite"));
    }
    Ok(m)
}

impl VectorLocationProblem {
    pub fn new(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        alpha: Vec<f64>,
        sigma_n2: f64,
        a: DMatrix<f64>,
    ) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::invalid("mu", "dimension must be >= 1"));
        }
        if d > MAX_DIM {
            return Err(Error::invalid("mu", format!("dimension must be <= {MAX_DIM}")));
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("mu", "entries must be finite"));
        }
        for (m, field) in [(&sigma, "sigma"), (&a, "a")] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::invalid(field, format!("must be {d}×{d}, got {}×{}", m.nrows(), m.ncols())));
            }
        }
        let sigma = check_spd(&sigma, "sigma")?;
        let a = check_spd(&a, "a")?;
        if !(sigma_n2 >= 0.0) || !sigma_n2.is_finite() {
            return Err(Error::invalid("sigma_n2", "must be finite and >= 0"));
        }
        if alpha.is_empty() {
            return Err(Error::invalid("alpha", "n must be >= 1"));
        }
        if alpha.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("alpha", "weights must be finite and >= 0"));
        }
        let sum = pairwise_sum(&alpha);
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid("alpha", format!("weights must sum to 1 (simplex), got {sum}")));
        }
        let loo_sq = leave_one_out_sq_sums(&alpha);
        Ok(Self {
            mu,
            sigma,
            alpha,
            sigma_n2,
            a,
            loo_sq,
        })
    }

    pub fn uniform(mu: DVector<f64>, sigma: DMatrix<f64>, n: usize, sigma_n2: f64, a: DMatrix<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        Self::new(mu, sigma, vec![1.0 / n as f64; n], sigma_n2, a)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn n(&self) -> usize {
        self.alpha.len()
    }
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    /// `Σ_{j≠i} α_j²`.
    pub fn loo_weight(&self, i: usize) -> f64 {
        self.loo_sq[i]
    }

    /// `M_i = Σ_{j≠i} α_j² Σ + σ_N² I`, the covariance of `W | Z_i`.
    pub fn conditional_covariance(&self, i: usize) -> DMatrix<f64> {
        let d = self.dim();
        &self.sigma * self.loo_sq[i] + DMatrix::identity(d, d) * self.sigma_n2
    }
}

/// `2 Tr(AΣ)/n`.
pub fn true_gen_error_vec(problem: &VectorLocationProblem) -> f64 {
    2.0 * (&problem.a * &problem.sigma).trace() / problem.n() as f64
}

/// Cholesky of `M_i`, or `None` when `M_i` is singular to working precision.
fn conditional_cholesky(problem: &VectorLocationProblem, i: usize) -> Option<Cholesky<f64, Dyn>> {
    let m = problem.conditional_covariance(i);
    let scale = m.diagonal().amax();
    if scale == 0.0 {
        return None;
    }
    let chol = Cholesky::new(m)?;
    let pivots = chol.l_dirty().diagonal();
    let smallest = pivots.iter().fold(f64::INFINITY, |acc, p| acc.min(p * p));
    (smallest > MATRIX_TOL * scale).then_some(chol)
}

/// `E KL_i = (α_i²/2) Tr(M_i⁻¹ Σ)`; `+∞` when `M_i` is singular and `α_i > 0`.
pub fn expected_kl_vec(problem: &VectorLocationProblem, i: usize) -> Result<f64> {
    problem.check_index(i)?;
    let a = problem.alpha[i];
    if a == 0.0 {
        return Ok(0.0);
    }
    match conditional_cholesky(problem, i) {
        Some(chol) => Ok(0.5 * a * a * chol.solve(&problem.sigma).trace()),
        None => Ok(f64::INFINITY),
    }
}

/// λ² coefficient of the expected conditional CGF: `2 Tr(A M_i A Σ)`.
pub fn expected_cgf_coeff_vec(problem: &VectorLocationProblem, i: usize) -> Result<f64> {
    problem.check_index(i)?;
    let m = problem.conditional_covariance(i);
    Ok(2.0 * (&problem.a * m * &problem.a * &problem.sigma).trace())
}

/// `Λ(λ; z) = 2λ² (z − μ)ᵀ A M_i A (z − μ)`, the CGF of `F_i` under the
/// reference for a fixed sample `z`.
pub fn cgf_conditional_vec(problem: &VectorLocationProblem, i: usize, z: &DVector<f64>) -> Result<CgfSpec> {
    problem.check_index(i)?;
    if z.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: z.len(),
        });
    }
    let g = &problem.a * (z - &problem.mu);
    let c = 2.0 * g.dot(&(problem.conditional_covariance(i) * &g));
    Ok(CgfSpec::quadratic(c))
}

/// `inf_λ (k + cλ²)/λ = 2√(kc)`, with `k = 0` giving 0 and `k = ∞` giving ∞.
fn quadratic_term(kl: f64, coeff: f64) -> f64 {
    if kl == 0.0 {
        0.0
    } else if kl.is_infinite() {
        f64::INFINITY
    } else {
        2.0 * (kl * coeff).sqrt()
    }
}

/// Per-index expected-KL bound applied to the full `‖·‖²_A` loss:
/// `(1/n) Σ_i 2√(E KL_i · 2Tr(A M_i A Σ))`.
pub fn bound_direct_vec(problem: &VectorLocationProblem) -> Result<BoundResult> {
    let terms: Vec<f64> = (0..problem.n())
        .into_par_iter()
        .map(|i| Ok(quadratic_term(expected_kl_vec(problem, i)?, expected_cgf_coeff_vec(problem, i)?)))
        .collect::<Result<_>>()?;
    let value = pairwise_sum(&terms) / problem.n() as f64;
    Ok(BoundResult::new(BoundFamily::VecDirect, value, None))
}

/// `A = U diag(λ) Uᵀ` with eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// Wraps a caller-supplied basis after checking that it is orthonormal
    /// and reconstructs `a` to [`EIGEN_TOL`].
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, a: &DMatrix<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d || a.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: eigenvectors.ncols(),
            });
        }
        let out = Self {
            eigenvalues,
            eigenvectors,
        };
        let gram = out.eigenvectors.transpose() * &out.eigenvectors;
        if (gram - DMatrix::<f64>::identity(d, d)).norm() > EIGEN_TOL {
            return Err(Error::invalid("eigenvectors", "columns must be orthonormal"));
        }
        if (out.reconstruct() - a).norm() > EIGEN_TOL * a.norm() {
            return Err(Error::invalid("eigenvectors", "U diag(λ) Uᵀ must reconstruct A"));
        }
        Ok(out)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the eigenvectors `U_j`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * d * self.eigenvectors.transpose()
    }
}

/// Symmetric eigendecomposition with eigenvalues descending and each
/// eigenvector's first nonzero component positive.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let a = symmetrized(a, "a")?;
    let d = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut u = DMatrix::<f64>::zeros(d, d);
    let mut values = Vec::with_capacity(d);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        let lead = v.iter().copied().find(|x| x.abs() > EIGEN_TOL).unwrap_or(1.0);
        if lead < 0.0 {
            v.neg_mut();
        }
        u.set_column(col, &v);
        values.push(eig.eigenvalues[k]);
    }
    Ok(EigenDecomposition {
        eigenvalues: values,
        eigenvectors: u,
    })
}

/// The conditional bound applied per eigendirection of `A`, using the basis from
/// [`eigendecompose`].
pub fn bound_decomposed_vec(problem: &VectorLocationProblem) -> Result<BoundResult> {
    bound_decomposed_vec_with_basis(problem, &eigendecompose(&problem.a)?)
}

/// Decomposed bound in a caller-chosen eigenbasis of `A`.
///
/// Along `U_j` the problem is scalar with variance `s_j = U_jᵀΣU_j`; the
/// per-(i, j) term is `2√(E KL_ij · c_ij)` with
/// `E KL_ij = α_i² s_j / (2 r_ij)`, `c_ij = 2λ_j² r_ij s_j` and
/// `r_ij = Σ_{k≠i} α_k² s_j + σ_N²`.
pub fn bound_decomposed_vec_with_basis(problem: &VectorLocationProblem, basis: &EigenDecomposition) -> Result<BoundResult> {
    let d = problem.dim();
    if basis.eigenvalues.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: basis.eigenvalues.len(),
        });
    }
    let s: Vec<f64> = (0..d)
        .map(|j| {
            let u = basis.eigenvectors.column(j);
            u.dot(&(&problem.sigma * u))
        })
        .collect();
    let terms: Vec<f64> = (0..problem.n())
        .into_par_iter()
        .map(|i| {
            let per_dir: Vec<f64> = (0..d)
                .map(|j| {
                    let (kl, c) = decomposed_component(problem, i, s[j], basis.eigenvalues[j]);
                    quadratic_term(kl, c)
                })
                .collect();
            pairwise_sum(&per_dir)
        })
        .collect();
    let value = pairwise_sum(&terms) / problem.n() as f64;
    Ok(BoundResult::new(BoundFamily::VecDecomposed, value, None))
}

/// `(E KL_ij, c_ij)` for index `i` along a direction with variance `s_j`
/// and loss weight `λ_j`.
pub fn decomposed_component(problem: &VectorLocationProblem, i: usize, s_j: f64, lambda_j: f64) -> (f64, f64) {
    let a = problem.alpha[i];
    let r = problem.loo_sq[i] * s_j + problem.sigma_n2;
    let coeff = 2.0 * lambda_j * lambda_j * r * s_j;
    let kl = if a == 0.0 {
        0.0
    } else if r == 0.0 {
        f64::INFINITY
    } else {
        a * a * s_j / (2.0 * r)
    };
    (kl, coeff)
}

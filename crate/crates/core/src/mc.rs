//! Seeded Monte Carlo estimators used as ground truth for the closed forms.
//!
//! Samples are split into fixed blocks of [`BLOCK_SIZE`]. Block `b` of an
//! estimator tagged `t` draws from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `t << 32 | b`, so every block is reproducible on its own and the
//! blocks are merged in index order. The result is bit-identical for a given
//! seed whatever the thread count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{kl_mvn, kl_scalar, MultivariateGaussian, ScalarGaussian};
use crate::scalar::ScalarLocationProblem;
use crate::vector::VectorLocationProblem;

pub const BLOCK_SIZE: usize = 65_536;

/// Recorded in every [`McEstimate`].
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), stream = tag<<32 | block, ziggurat normals";

pub const MIN_SAMPLES_GEN: usize = 100;
pub const MIN_SAMPLES_CGF: usize = 10_000;

const TAG_GEN_SCALAR: u64 = 1;
const TAG_GEN_SCALAR_NAIVE: u64 = 2;
const TAG_GEN_VEC: u64 = 3;
const TAG_GEN_VEC_NAIVE: u64 = 4;
const TAG_CGF: u64 = 5;
const TAG_DV_P: u64 = 6;
const TAG_DV_Q: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n_samples`.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub rng_algorithm: String,
}

impl McEstimate {
    fn new(mean: f64, std_error: f64, n_samples: usize, seed: u64) -> Self {
        Self {
            mean,
            std_error,
            n_samples,
            seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }

    /// `|mean − target| ≤ k · std_error`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

fn block_rng(seed: u64, tag: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 32) | block as u64);
    rng
}

/// Runs `work(rng, len)` on every block in parallel; results in block order.
fn run_blocks<T: Send>(n_samples: usize, seed: u64, tag: u64, work: impl Fn(&mut ChaCha8Rng, usize) -> T + Sync) -> Vec<T> {
    let blocks = n_samples.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(n_samples - b * BLOCK_SIZE);
            work(&mut block_rng(seed, tag, b), len)
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Running mean and sum of squared deviations (Welford, merged with Chan's
/// formula).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            self.m2 / (self.n - 1.0)
        }
    }

    fn std_error(&self) -> f64 {
        (self.variance() / self.n).sqrt()
    }

    fn merge_all(parts: Vec<Moments>) -> Moments {
        parts.into_iter().fold(Moments::default(), Moments::merge)
    }
}

fn check_samples(n_samples: usize, min: usize) -> Result<()> {
    if n_samples < min {
        return Err(Error::invalid("n_samples", format!("must be >= {min}")));
    }
    Ok(())
}

fn estimate(m: Moments, n_samples: usize, seed: u64) -> McEstimate {
    McEstimate::new(m.mean, m.std_error(), n_samples, seed)
}

/// Simulated `E[L_ξ(W) − L_{Z[n]}(W)]`.
///
/// The population loss is taken in closed form, `L_ξ(W) = σ² + (W − μ)²`,
/// which removes the variance of a fresh test draw.
pub fn mc_gen_error_scalar(problem: &ScalarLocationProblem, n_samples: usize, seed: u64) -> Result<McEstimate> {
    scalar_gen(problem, n_samples, seed, false)
}

/// Same target as [`mc_gen_error_scalar`], with `L_ξ(W)` replaced by the loss
/// on one fresh draw `Z̃ ~ N(μ, σ²)`.
pub fn mc_gen_error_scalar_naive(problem: &ScalarLocationProblem, n_samples: usize, seed: u64) -> Result<McEstimate> {
    scalar_gen(problem, n_samples, seed, true)
}

fn scalar_gen(problem: &ScalarLocationProblem, n_samples: usize, seed: u64, naive: bool) -> Result<McEstimate> {
    check_samples(n_samples, MIN_SAMPLES_GEN)?;
    let (mu, sd, noise_sd) = (problem.mu(), problem.sigma2().sqrt(), problem.sigma_n2().sqrt());
    let alpha = problem.alpha();
    let n = alpha.len();
    let tag = if naive { TAG_GEN_SCALAR_NAIVE } else { TAG_GEN_SCALAR };
    let parts = run_blocks(n_samples, seed, tag, |rng, len| {
        let mut z = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..len {
            let mut w = 0.0;
            for (zj, a) in z.iter_mut().zip(alpha) {
                *zj = mu + sd * normal(rng);
                w += a * *zj;
            }
            w += noise_sd * normal(rng);
            let empirical = z.iter().map(|zj| (w - zj) * (w - zj)).sum::<f64>() / n as f64;
            let population = if naive {
                let t = mu + sd * normal(rng);
                (w - t) * (w - t)
            } else {
                problem.sigma2() + (w - mu) * (w - mu)
            };
            m.push(population - empirical);
        }
        m
    });
    Ok(estimate(Moments::merge_all(parts), n_samples, seed))
}

/// `R` with `R Rᵀ = m` for a symmetric PSD `m` (negative round-off
/// eigenvalues are clamped to zero).
fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// Row-major copy for tight loops.
fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

fn quad_form(a: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let mut acc = 0.0;
    for r in 0..d {
        let row = &a[r * d..(r + 1) * d];
        acc += x[r] * row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    }
    acc
}

/// `out = mean + R ε` with fresh standard normals.
fn draw_gaussian(rng: &mut ChaCha8Rng, mean: &[f64], r: &[f64], eps: &mut [f64], out: &mut [f64]) {
    let d = mean.len();
    for e in eps.iter_mut() {
        *e = normal(rng);
    }
    for k in 0..d {
        out[k] = mean[k] + r[k * d..(k + 1) * d].iter().zip(eps.iter()).map(|(p, q)| p * q).sum::<f64>();
    }
}

/// Vector analogue of [`mc_gen_error_scalar`] with
/// `L_ξ(W) = Tr(AΣ) + (W − μ)ᵀA(W − μ)`.
pub fn mc_gen_error_vec(problem: &VectorLocationProblem, n_samples: usize, seed: u64) -> Result<McEstimate> {
    vector_gen(problem, n_samples, seed, false)
}

/// Vector gen error with a fresh test draw instead of the closed-form `L_ξ`.
pub fn mc_gen_error_vec_naive(problem: &VectorLocationProblem, n_samples: usize, seed: u64) -> Result<McEstimate> {
    vector_gen(problem, n_samples, seed, true)
}

fn vector_gen(problem: &VectorLocationProblem, n_samples: usize, seed: u64, naive: bool) -> Result<McEstimate> {
    check_samples(n_samples, MIN_SAMPLES_GEN)?;
    let d = problem.dim();
    let alpha = problem.alpha();
    let n = alpha.len();
    let mu: Vec<f64> = problem.mu().iter().copied().collect();
    let r = flat(&psd_factor(problem.sigma()));
    let a = flat(problem.a());
    let tr_a_sigma = (problem.a() * problem.sigma()).trace();
    let noise_sd = problem.sigma_n2().sqrt();
    let tag = if naive { TAG_GEN_VEC_NAIVE } else { TAG_GEN_VEC };
    let parts = run_blocks(n_samples, seed, tag, |rng, len| {
        let mut z = vec![0.0; n * d];
        let mut w = vec![0.0; d];
        let mut eps = vec![0.0; d];
        let mut diff = vec![0.0; d];
        let mut m = Moments::default();
        for _ in 0..len {
            w.iter_mut().for_each(|x| *x = 0.0);
            for j in 0..n {
                let zj = &mut z[j * d..(j + 1) * d];
                draw_gaussian(rng, &mu, &r, &mut eps, zj);
                for k in 0..d {
                    w[k] += alpha[j] * zj[k];
                }
            }
            for wk in w.iter_mut() {
                *wk += noise_sd * normal(rng);
            }
            let mut empirical = 0.0;
            for j in 0..n {
                for k in 0..d {
                    diff[k] = w[k] - z[j * d + k];
                }
                empirical += quad_form(&a, &diff);
            }
            empirical /= n as f64;
            let population = if naive {
                let mut t = vec![0.0; d];
                draw_gaussian(rng, &mu, &r, &mut eps, &mut t);
                for k in 0..d {
                    diff[k] = w[k] - t[k];
                }
                quad_form(&a, &diff)
            } else {
                for k in 0..d {
                    diff[k] = w[k] - mu[k];
                }
                tr_a_sigma + quad_form(&a, &diff)
            };
            m.push(population - empirical);
        }
        m
    });
    Ok(estimate(Moments::merge_all(parts), n_samples, seed))
}

type GapSampler<'a> = Box<dyn Fn(&mut ChaCha8Rng) -> f64 + Sync + 'a>;

/// A problem whose per-index gap `F_i = L_ξ(W) − ℓ(W, z_i)` can be simulated
/// with `W` drawn from the index-`i` reference distribution.
pub trait GapModel: Sync {
    type Point: ?Sized + Sync;

    fn reference_gap_sampler<'a>(&'a self, i: usize, z_i: &'a Self::Point) -> Result<GapSampler<'a>>;
}

impl GapModel for ScalarLocationProblem {
    type Point = f64;

    fn reference_gap_sampler<'a>(&'a self, i: usize, z_i: &'a f64) -> Result<GapSampler<'a>> {
        let q = crate::scalar::reference_q(self, i)?;
        let sd = q.variance.sqrt();
        let (mu, s2, z) = (self.mu(), self.sigma2(), *z_i);
        Ok(Box::new(move |rng| {
            let w = mu + sd * normal(rng);
            s2 + (w - mu) * (w - mu) - (w - z) * (w - z)
        }))
    }
}

impl GapModel for VectorLocationProblem {
    type Point = DVector<f64>;

    fn reference_gap_sampler<'a>(&'a self, i: usize, z_i: &'a DVector<f64>) -> Result<GapSampler<'a>> {
        self.check_index(i)?;
        if z_i.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: z_i.len(),
            });
        }
        let d = self.dim();
        let r = flat(&psd_factor(&self.conditional_covariance(i)));
        let a = flat(self.a());
        let mu: Vec<f64> = self.mu().iter().copied().collect();
        let z: Vec<f64> = z_i.iter().copied().collect();
        let tr = (self.a() * self.sigma()).trace();
        Ok(Box::new(move |rng| {
            let mut eps = vec![0.0; d];
            let mut w = vec![0.0; d];
            draw_gaussian(rng, &mu, &r, &mut eps, &mut w);
            let dm: Vec<f64> = w.iter().zip(&mu).map(|(x, m)| x - m).collect();
            let dz: Vec<f64> = w.iter().zip(&z).map(|(x, m)| x - m).collect();
            tr + quad_form(&a, &dm) - quad_form(&a, &dz)
        }))
    }
}

/// Block statistics for `G = e^{λF − shift}` alongside the moments of `F`.
#[derive(Debug, Clone, Copy)]
struct MgfStats {
    n: f64,
    shift: f64,
    sum_g: f64,
    sum_g2: f64,
    sum_gf: f64,
    f: Moments,
}

impl MgfStats {
    fn from_values(fs: &[f64], lambda: f64) -> Result<Self> {
        let mut shift = f64::NEG_INFINITY;
        for &f in fs {
            let x = lambda * f;
            if !x.is_finite() {
                return Err(Error::Numerical(format!(
                    "empirical MGF overflow at λ = {lambda}; reduce λ"
                )));
            }
            shift = shift.max(x);
        }
        let mut s = MgfStats {
            n: 0.0,
            shift,
            sum_g: 0.0,
            sum_g2: 0.0,
            sum_gf: 0.0,
            f: Moments::default(),
        };
        for &f in fs {
            let g = (lambda * f - shift).exp();
            s.n += 1.0;
            s.sum_g += g;
            s.sum_g2 += g * g;
            s.sum_gf += g * f;
            s.f.push(f);
        }
        Ok(s)
    }

    fn merge(self, other: MgfStats) -> MgfStats {
        if self.n == 0.0 {
            return other;
        }
        let shift = self.shift.max(other.shift);
        let (ka, kb) = ((self.shift - shift).exp(), (other.shift - shift).exp());
        MgfStats {
            n: self.n + other.n,
            shift,
            sum_g: self.sum_g * ka + other.sum_g * kb,
            sum_g2: self.sum_g2 * ka * ka + other.sum_g2 * kb * kb,
            sum_gf: self.sum_gf * ka + other.sum_gf * kb,
            f: self.f.merge(other.f),
        }
    }

    fn g_mean(&self) -> f64 {
        self.sum_g / self.n
    }

    fn g_var(&self) -> f64 {
        (self.sum_g2 / self.n - self.g_mean().powi(2)).max(0.0)
    }

    /// `ln Ê[e^{λF}]`.
    fn log_mgf(&self) -> f64 {
        self.g_mean().ln() + self.shift
    }

    /// Delta-method SE of `ln Ê[e^{λF}]`.
    fn log_mgf_se(&self) -> f64 {
        (self.g_var() / (self.n * self.g_mean().powi(2))).sqrt()
    }
}

fn sample_values(n_samples: usize, seed: u64, tag: u64, draw: &(dyn Fn(&mut ChaCha8Rng) -> f64 + Sync)) -> Vec<Vec<f64>> {
    run_blocks(n_samples, seed, tag, |rng, len| (0..len).map(|_| draw(rng)).collect())
}

fn merge_stats(blocks: &[Vec<f64>], lambda: f64) -> Result<MgfStats> {
    let mut parts = blocks.iter().map(|b| MgfStats::from_values(b, lambda));
    let first = parts.next().expect("at least one block")?;
    parts.try_fold(first, |acc, s| Ok(acc.merge(s?)))
}

/// Empirical centered CGF `ln Ê_Q[e^{λF_i}] − λ Ê_Q[F_i]` for a fixed
/// sample `z_i`, with `W` drawn from the reference.
pub fn mc_cgf<M: GapModel>(
    problem: &M,
    i: usize,
    z_i: &M::Point,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(n_samples, MIN_SAMPLES_CGF)?;
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let draw = problem.reference_gap_sampler(i, z_i)?;
    let blocks = sample_values(n_samples, seed, TAG_CGF, &draw);
    let s = merge_stats(&blocks, lambda)?;
    let value = s.log_mgf() - lambda * s.f.mean;
    let g = s.g_mean();
    let cov_gf = s.sum_gf / s.n - g * s.f.mean;
    let var = (s.g_var() / (g * g) - 2.0 * lambda * cov_gf / g + lambda * lambda * s.f.variance()) / s.n;
    Ok(McEstimate::new(value, var.max(0.0).sqrt(), n_samples, seed))
}

/// A law for [`mc_dv_check`]; points are passed to the gap function as
/// slices.
#[derive(Debug, Clone)]
pub enum Law {
    Scalar(ScalarGaussian),
    Vector(MultivariateGaussian),
}

impl Law {
    fn dim(&self) -> usize {
        match self {
            Law::Scalar(_) => 1,
            Law::Vector(g) => g.dim(),
        }
    }

    fn mean_and_factor(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Law::Scalar(g) => (vec![g.mean], vec![g.variance.sqrt()]),
            Law::Vector(g) => (g.mean().iter().copied().collect(), flat(&psd_factor(g.covariance()))),
        }
    }
}

/// `KL(p ‖ q)` for two laws of the same kind.
pub fn kl_law(p: &Law, q: &Law) -> Result<f64> {
    match (p, q) {
        (Law::Scalar(a), Law::Scalar(b)) => Ok(kl_scalar(a, b)),
        (Law::Vector(a), Law::Vector(b)) => kl_mvn(a, b),
        _ => Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        }),
    }
}

/// One row of a change-of-measure check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvRow {
    pub lambda: f64,
    /// `λ Ê_P[F]`.
    pub lhs: f64,
    /// `KL(P ‖ Q) + ln Ê_Q[e^{λF}]`.
    pub rhs: f64,
    /// `√(SE_lhs² + SE_rhs²)`.
    pub se: f64,
    /// `lhs ≤ rhs + 3·se`.
    pub holds: bool,
}

/// Checks `λ E_P[F] ≤ KL(P ‖ Q) + ln E_Q[e^{λF}]` at every λ, with the KL
/// term exact and both expectations simulated on independent streams.
pub fn mc_dv_check(
    p: &Law,
    q: &Law,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lambdas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<DvRow>> {
    check_samples(n_samples, MIN_SAMPLES_CGF)?;
    let kl = kl_law(p, q)?;
    let sampler = |law: &Law| {
        let (mean, r) = law.mean_and_factor();
        let d = mean.len();
        move |rng: &mut ChaCha8Rng| {
            let mut eps = vec![0.0; d];
            let mut x = vec![0.0; d];
            draw_gaussian(rng, &mean, &r, &mut eps, &mut x);
            f(&x)
        }
    };
    let under_p = sample_values(n_samples, seed, TAG_DV_P, &sampler(p));
    let under_q = sample_values(n_samples, seed, TAG_DV_Q, &sampler(q));
    let p_moments = Moments::merge_all(
        under_p
            .iter()
            .map(|b| {
                let mut m = Moments::default();
                b.iter().for_each(|&x| m.push(x));
                m
            })
            .collect(),
    );
    lambdas
        .iter()
        .map(|&lambda| {
            let s = merge_stats(&under_q, lambda)?;
            let lhs = lambda * p_moments.mean;
            let rhs = kl + s.log_mgf();
            let se = ((lambda * p_moments.std_error()).powi(2) + s.log_mgf_se().powi(2)).sqrt();
            Ok(DvRow {
                lambda,
                lhs,
                rhs,
                se,
                holds: lhs <= rhs + 3.0 * se,
            })
        })
        .collect()
}

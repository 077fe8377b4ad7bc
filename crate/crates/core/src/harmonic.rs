//! Harmonic functions built from positive characters `x -> exp(x.s)`.
//!
//! A character is harmonic for `mu` exactly when `Phi_mu(s) = 1`; positive
//! mixtures of harmonic characters are harmonic. Residuals are measured
//! exactly (finite sums, or `Phi` evaluations for mixtures) and by Monte Carlo.

use crate::error::{Error, Result};
use crate::laplace::{log_laplace_with, LaplaceOptions, LaplaceResult, Status};
use crate::lognum::{lse_accumulate, LogAccumulator, SignedLog};
use crate::measures::{rng_from_seed, AtomSampler, Body, Exponent, LatticeMeasure};
use crate::real::Real;

/// `f(x) = sum_i w_i exp(x.s_i)` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterMixture<F> {
    exponents: Vec<Exponent<F>>,
    logweights: Vec<SignedLog<F>>,
}

impl<F: Real> CharacterMixture<F> {
    pub fn new(exponents: Vec<Exponent<F>>, logweights: Vec<SignedLog<F>>) -> Result<Self> {
        if exponents.len() != logweights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} exponents but {} weights",
                exponents.len(),
                logweights.len()
            )));
        }
        let Some(first) = exponents.first() else {
            return Err(Error::InvalidArgument("a mixture needs at least one character".into()));
        };
        let dim = first.dim();
        if let Some(e) = exponents.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.dim(),
            });
        }
        if exponents.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("exponents must be finite".into()));
        }
        if logweights.iter().any(|w| !w.is_positive() || !w.logmag().is_finite()) {
            return Err(Error::InvalidArgument(
                "mixture weights must be positive and finite".into(),
            ));
        }
        Ok(CharacterMixture { exponents, logweights })
    }

    /// Pairs of `(exponent, log weight)`.
    pub fn from_log_pairs(pairs: Vec<(Exponent<F>, F)>) -> Result<Self> {
        let (e, w): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(e, l)| (e, SignedLog::from_log(l))).unzip();
        CharacterMixture::new(e, w)
    }

    /// The single character `exp(x.s)` with weight one.
    pub fn character(s: impl Into<Exponent<F>>) -> Self {
        let s = s.into();
        CharacterMixture::new(vec![s], vec![SignedLog::one()]).expect("one finite character")
    }

    pub fn dim(&self) -> usize {
        self.exponents[0].dim()
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Exponent<F>] {
        &self.exponents
    }

    pub fn logweights(&self) -> &[SignedLog<F>] {
        &self.logweights
    }
}

/// A non-negative function on `Z^d` evaluated in log form.
pub trait LatticeFunction<F: Real> {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[i64]) -> Result<SignedLog<F>>;
    /// The mixture form, when there is one.
    fn as_mixture(&self) -> Option<&CharacterMixture<F>> {
        None
    }
}

impl<F: Real> LatticeFunction<F> for CharacterMixture<F> {
    fn dim(&self) -> usize {
        CharacterMixture::dim(self)
    }

    fn eval(&self, x: &[i64]) -> Result<SignedLog<F>> {
        mixture_eval(self, x)
    }

    fn as_mixture(&self) -> Option<&CharacterMixture<F>> {
        Some(self)
    }
}

/// Wraps a closure as a [`LatticeFunction`].
pub struct FnLattice<G> {
    pub dim: usize,
    pub f: G,
}

impl<F: Real, G: Fn(&[i64]) -> SignedLog<F>> LatticeFunction<F> for FnLattice<G> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[i64]) -> Result<SignedLog<F>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok((self.f)(x))
    }
}

pub fn mixture_eval<F: Real>(m: &CharacterMixture<F>, x: &[i64]) -> Result<SignedLog<F>> {
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: x.len(),
        });
    }
    Ok(lse_accumulate(
        m.exponents
            .iter()
            .zip(&m.logweights)
            .map(|(s, w)| w.scale_log(s.dot_lattice(x))),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<F> {
    pub x0: Vec<i64>,
    pub f_value: SignedLog<F>,
    /// `sum_x mu(x) f(x0 + x)`.
    pub integral_value: SignedLog<F>,
    /// `|integral - f(x0)|` in log form.
    pub log_residual: SignedLog<F>,
    /// `|integral - f(x0)| / f(x0)`.
    pub relative: F,
}

fn converged<F: Real>(r: LaplaceResult<F>) -> Result<SignedLog<F>> {
    match r.status {
        Status::Converged => Ok(r.log_value.expect("converged value")),
        Status::Diverged => Err(Error::Diverged),
        Status::Inconclusive => Err(Error::Inconclusive {
            terms_used: r.terms_used,
        }),
    }
}

fn residual_report<F: Real>(x0: &[i64], f_value: SignedLog<F>, integral_value: SignedLog<F>) -> ResidualReport<F> {
    let log_residual = (integral_value - f_value).abs();
    let relative = if f_value.is_zero() {
        log_residual.to_real() / F::min_positive_value()
    } else {
        log_residual.sl_div(f_value).to_real()
    };
    ResidualReport {
        x0: x0.to_vec(),
        f_value,
        integral_value,
        log_residual,
        relative,
    }
}

/// Compares `f(x0)` with `sum_x mu(x) f(x0 + x)`.
pub fn harmonicity_residual<F: Real>(
    mu: &LatticeMeasure<F>,
    f: &dyn LatticeFunction<F>,
    x0: &[i64],
    tol: F,
) -> Result<ResidualReport<F>> {
    if f.dim() != mu.dim() || x0.len() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: if f.dim() != mu.dim() { f.dim() } else { x0.len() },
        });
    }
    let f_value = f.eval(x0)?;
    let integral = match (mu.body(), f.as_mixture()) {
        (Body::Atoms(atoms), _) => {
            let mut acc = LogAccumulator::new();
            let mut y = vec![0i64; x0.len()];
            for a in atoms {
                for ((yj, &xj), &pj) in y.iter_mut().zip(x0).zip(&a.point) {
                    *yj = xj + pj;
                }
                acc.push(a.logweight * f.eval(&y)?);
            }
            acc.total()
        }
        (Body::Stream(_), Some(m)) => {
            // sum_x mu(x) exp((x0 + x).s) = exp(x0.s) Phi(s)
            let opts = LaplaceOptions::with_tol(tol);
            let mut acc = LogAccumulator::new();
            for (s, w) in m.exponents.iter().zip(&m.logweights) {
                let phi = converged(log_laplace_with(mu, s, &opts)?)?;
                acc.push(w.scale_log(s.dot_lattice(x0)) * phi);
            }
            acc.total()
        }
        (Body::Stream(_), None) => return Err(Error::UnsupportedFunctionForStream),
    };
    Ok(residual_report(x0, f_value, integral))
}

/// `|Phi(s) - 1| exp(x0.s)`, the harmonic defect of the character `exp(x.s)` at `x0`.
pub fn character_residual<F: Real>(
    mu: &LatticeMeasure<F>,
    s: impl Into<Exponent<F>>,
    x0: &[i64],
) -> Result<SignedLog<F>> {
    character_residual_with(mu, s, x0, &LaplaceOptions::with_tol(F::lit(1e-12)))
}

pub fn character_residual_with<F: Real>(
    mu: &LatticeMeasure<F>,
    s: impl Into<Exponent<F>>,
    x0: &[i64],
    opts: &LaplaceOptions<F>,
) -> Result<SignedLog<F>> {
    let s = s.into();
    if x0.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: x0.len(),
        });
    }
    let phi = converged(log_laplace_with(mu, &s, opts)?)?;
    Ok((phi - SignedLog::one()).abs().scale_log(s.dot_lattice(x0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitClass {
    HarmonicLimit,
    NonHarmonicLimit,
}

impl LimitClass {
    pub fn name(self) -> &'static str {
        match self {
            LimitClass::HarmonicLimit => "HarmonicLimit",
            LimitClass::NonHarmonicLimit => "NonHarmonicLimit",
        }
    }
}

/// Pointwise approach of `exp(x.s_n)` to `exp(x.s)` at one test point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConvergence<F> {
    pub x: Vec<i64>,
    /// `|exp(x.(s_n - s)) - 1|` for each sequence member.
    pub gaps: Vec<F>,
    /// Gaps are non-increasing over the second half of the sequence and end
    /// below where they started.
    pub converging: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport<F> {
    /// `|Phi(s_n) - 1|` for each member.
    pub member_residuals: Vec<F>,
    pub pointwise: Vec<PointConvergence<F>>,
    /// `Phi(limit)` in log form.
    pub limit_log_phi: SignedLog<F>,
    /// `|Phi(limit) - 1|` in log form.
    pub limit_defect: SignedLog<F>,
    pub classification: LimitClass,
}

/// `0`, `+-e_j` and the two diagonal points `(5, ..., 5)`, `(-5, ..., -5)`.
pub fn default_test_points(dim: usize) -> Vec<Vec<i64>> {
    let mut pts = vec![vec![0; dim]];
    for j in 0..dim {
        for sgn in [1, -1] {
            let mut e = vec![0; dim];
            e[j] = sgn;
            pts.push(e);
        }
    }
    pts.push(vec![5; dim]);
    pts.push(vec![-5; dim]);
    pts
}

/// Runs the harmonic-sequence limit experiment at the level of characters.
pub fn limit_experiment<F: Real>(
    mu: &LatticeMeasure<F>,
    sequence: &[Exponent<F>],
    limit: impl Into<Exponent<F>>,
    test_points: &[Vec<i64>],
    tol: F,
) -> Result<LimitReport<F>> {
    let limit = limit.into();
    if sequence.is_empty() {
        return Err(Error::InvalidArgument("the sequence must be non-empty".into()));
    }
    let opts = LaplaceOptions::with_tol(crate::levelset::eval_tol(tol));
    let zero = vec![0i64; mu.dim()];
    let mut member_residuals = Vec::with_capacity(sequence.len());
    for (index, s) in sequence.iter().enumerate() {
        let r = character_residual_with(mu, s, &zero, &opts)?.to_real();
        if !(r <= tol) {
            return Err(Error::NonHarmonicSequenceMember {
                index,
                residual: r.to_f64_lossy(),
            });
        }
        member_residuals.push(r);
    }
    let mut pointwise = Vec::with_capacity(test_points.len());
    for x in test_points {
        if x.len() != limit.dim() {
            return Err(Error::DimensionMismatch {
                expected: limit.dim(),
                found: x.len(),
            });
        }
        let gaps: Vec<F> = sequence
            .iter()
            .map(|s| crate::real::dot_int(x, &s.diff(&limit)).exp_m1().abs())
            .collect();
        let tail = &gaps[gaps.len() / 2..];
        let converging = tail.windows(2).all(|w| w[1] <= w[0]) && gaps[gaps.len() - 1] <= gaps[0];
        pointwise.push(PointConvergence {
            x: x.clone(),
            gaps,
            converging,
        });
    }
    let limit_log_phi = converged(log_laplace_with(mu, &limit, &opts)?)?;
    let limit_defect = (limit_log_phi - SignedLog::one()).abs();
    let classification = if limit_log_phi.ln().abs() <= tol {
        LimitClass::HarmonicLimit
    } else {
        LimitClass::NonHarmonicLimit
    };
    Ok(LimitReport {
        member_residuals,
        pointwise,
        limit_log_phi,
        limit_defect,
        classification,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport<F> {
    /// Sample mean of `f(x0 + X) / f(x0)`.
    pub empirical_mean: F,
    /// Four standard errors.
    pub ci_halfwidth: F,
    /// `(empirical_mean - 1) / standard error`; zero when every draw equals one.
    pub z_score: F,
    pub f_x0: SignedLog<F>,
    pub n_samples: usize,
}

/// Monte Carlo estimate of `E f(x0 + X) / f(x0)` with `X ~ mu`.
pub fn mc_harmonicity<F: Real>(
    mu: &LatticeMeasure<F>,
    m: &CharacterMixture<F>,
    x0: &[i64],
    n_samples: usize,
    seed: u64,
) -> Result<McReport<F>> {
    let sampler = AtomSampler::new(mu)?;
    if n_samples < 1000 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 1000 samples".into()));
    }
    if m.dim() != mu.dim() || x0.len() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: if m.dim() != mu.dim() { m.dim() } else { x0.len() },
        });
    }
    let f_x0 = mixture_eval(m, x0)?;
    let mut rng = rng_from_seed(seed);
    let mut y = vec![0i64; x0.len()];
    // Welford in f64 regardless of the scalar type
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..n_samples {
        let step = sampler.draw(&mut rng);
        for ((yj, &xj), &pj) in y.iter_mut().zip(x0).zip(step) {
            *yj = xj + pj;
        }
        let v = mixture_eval(m, &y)?.sl_div(f_x0).to_real().to_f64_lossy();
        let k = (i + 1) as f64;
        let d = v - mean;
        mean += d / k;
        m2 += d * (v - mean);
    }
    let n = n_samples as f64;
    let se = (m2 / (n - 1.0)).sqrt() / n.sqrt();
    let z = if se > 0.0 {
        (mean - 1.0) / se
    } else if mean == 1.0 {
        0.0
    } else {
        (mean - 1.0).signum() * f64::INFINITY
    };
    Ok(McReport {
        empirical_mean: F::lit(mean),
        ci_halfwidth: F::lit(4.0 * se),
        z_score: F::lit(z),
        f_x0,
        n_samples,
    })
}

//! Laplace transforms `Phi_mu(s) = sum_x mu(x) exp(x.s)` with certified truncation.
//!
//! Finite measures are summed exactly. Stream measures are summed shell by
//! shell until the index is past the envelope peak and the certified tail
//! enclosure is narrower than `tol` times the partial sum. When the enclosure
//! has a non-trivial lower bound (polynomial tails such as the `1/n^2` series
//! at the counterexample witness) the midpoint of the enclosure is added and
//! its half-width reported as `tail_bound`.

use crate::error::{Error, Result};
use crate::lognum::{LogAccumulator, SignedLog};
use crate::measures::{Body, Convergence, Exponent, LatticeMeasure, ShellBuffer, TailCertificate, TermStream};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Diverged,
    Inconclusive,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::Diverged => "Diverged",
            Status::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceResult<F> {
    /// `Phi(s)` in log form; `None` when the series diverges. For
    /// `Inconclusive` results this is the best available estimate (a lower
    /// bound when no tail enclosure was reached).
    pub log_value: Option<SignedLog<F>>,
    /// Certified bound on the error of `log_value` in real terms.
    pub tail_bound: SignedLog<F>,
    pub status: Status,
    /// Number of stream shells summed (atoms count for finite measures).
    pub terms_used: u64,
}

impl<F: Real> LaplaceResult<F> {
    /// `log Phi(s)` when the evaluation converged.
    pub fn log_phi(&self) -> Option<F> {
        match self.status {
            Status::Converged => self.log_value.map(|v| v.ln()),
            _ => None,
        }
    }

    fn diverged(terms_used: u64) -> Self {
        LaplaceResult {
            log_value: None,
            tail_bound: SignedLog::from_log(F::infinity()),
            status: Status::Diverged,
            terms_used,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceOptions<F> {
    /// Relative tolerance on the truncation error.
    pub tol: F,
    /// Maximum number of stream shells summed before giving up.
    pub max_terms: u64,
    /// Consecutive growing shells that end an undecided series ...
    pub patience: u64,
    /// ... once the index is past this point.
    pub patience_after: u64,
}

impl<F: Real> Default for LaplaceOptions<F> {
    fn default() -> Self {
        LaplaceOptions {
            tol: F::lit(1e-10),
            max_terms: 1 << 23,
            patience: 64,
            patience_after: 10_000,
        }
    }
}

impl<F: Real> LaplaceOptions<F> {
    pub fn with_tol(tol: F) -> Self {
        LaplaceOptions {
            tol,
            ..Default::default()
        }
    }
}

/// What else to accumulate alongside `Phi`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Extras<'a, F> {
    /// Accumulate `sum mu(x) (x.dir) exp(x.s)` over the summed shells (uncertified).
    pub direction: Option<&'a [F]>,
    /// Accumulate the certified gradient.
    pub gradient: bool,
    /// Stop as soon as the partial sum exceeds `exp(stop_above)`.
    pub stop_above: Option<F>,
}

#[derive(Debug, Clone)]
pub(crate) struct Evaluation<F> {
    pub result: LaplaceResult<F>,
    /// The partial sum passed `stop_above`; `result.log_value` is a lower bound.
    pub exceeded: bool,
    pub directional: Option<SignedLog<F>>,
    pub gradient: Option<Vec<SignedLog<F>>>,
}

fn check_dim<F: Real>(mu: &LatticeMeasure<F>, s: &Exponent<F>) -> Result<()> {
    if s.dim() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: s.dim(),
        });
    }
    if !s.is_finite() {
        return Err(Error::InvalidArgument("exponent must be finite".into()));
    }
    Ok(())
}

fn push_signed<F: Real>(acc: &mut LogAccumulator<F>, factor: F, log: F) {
    if factor != F::zero() {
        acc.push(SignedLog::from_real(factor).scale_log(log));
    }
}

pub(crate) fn evaluate<F: Real>(
    mu: &LatticeMeasure<F>,
    s: &Exponent<F>,
    opts: &LaplaceOptions<F>,
    extras: Extras<'_, F>,
) -> Result<Evaluation<F>> {
    check_dim(mu, s)?;
    if let Some(d) = extras.direction {
        if d.len() != mu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                found: d.len(),
            });
        }
    }
    match mu.body() {
        Body::Atoms(atoms) => {
            let dim = mu.dim();
            let mut acc = LogAccumulator::new();
            let mut dir_acc = LogAccumulator::new();
            let mut grad: Vec<LogAccumulator<F>> = vec![LogAccumulator::new(); dim];
            for a in atoms {
                let l = a.logweight.ln() + s.dot_lattice(&a.point);
                acc.push(SignedLog::from_log(l));
                if let Some(d) = extras.direction {
                    push_signed(&mut dir_acc, crate::real::dot_int(&a.point, d), l);
                }
                if extras.gradient {
                    for (g, &xj) in grad.iter_mut().zip(&a.point) {
                        push_signed(g, F::from_int(xj), l);
                    }
                }
            }
            Ok(Evaluation {
                result: LaplaceResult {
                    log_value: Some(acc.total()),
                    tail_bound: SignedLog::zero(),
                    status: Status::Converged,
                    terms_used: atoms.len() as u64,
                },
                exceeded: false,
                directional: extras.direction.map(|_| dir_acc.total()),
                gradient: extras.gradient.then(|| grad.iter().map(|g| g.total()).collect()),
            })
        }
        Body::Stream(stream) => sum_stream(stream.as_ref(), s, opts, extras),
    }
}

struct GradientTail<F> {
    cert: Option<TailCertificate<F>>,
    peak: Option<u64>,
    head: SignedLog<F>,
}

fn sum_stream<F: Real>(
    stream: &dyn TermStream<F>,
    s: &Exponent<F>,
    opts: &LaplaceOptions<F>,
    extras: Extras<'_, F>,
) -> Result<Evaluation<F>> {
    let dim = stream.dim();
    let cert = stream.certificate(s);
    let verdict = cert.divergence_test();
    if verdict == Convergence::Diverges {
        return Ok(Evaluation {
            result: LaplaceResult::diverged(0),
            exceeded: false,
            directional: None,
            gradient: None,
        });
    }
    let peak = cert.peak_index();
    let first = stream.first_shell();
    let mut buf = ShellBuffer::new(dim);

    // Skip the rising flank far below a distant peak when the head bound allows it.
    let mut start = first;
    let mut head = SignedLog::zero();
    if let Some(p) = peak {
        if p > first + 4096 {
            buf.clear();
            stream.shell_terms(p, s, &mut buf);
            let floor = buf.iter().map(|(_, l)| l).fold(F::neg_infinity(), F::max);
            let budget = floor + opts.tol.ln() + F::lit(-7.0);
            if let Some(l) = cert.head_skip(p, budget) {
                if let Some(h) = cert.head_bound(l) {
                    start = l;
                    head = h;
                }
            }
        }
    }

    let mut grad_tails: Vec<GradientTail<F>> = Vec::new();
    if extras.gradient {
        for j in 0..dim {
            let cb = stream.coordinate_bound(j);
            if cb.scale == F::zero() {
                grad_tails.push(GradientTail {
                    cert: None,
                    peak: None,
                    head: SignedLog::zero(),
                });
                continue;
            }
            let mut env = cert.envelope;
            env.gamma = env.gamma - F::from_index(cb.power as u64);
            env.c = env.c + cb.scale.ln();
            let gc = TailCertificate::new(env, cert.exact && cb.exact, first);
            if gc.divergence_test() == Convergence::Diverges {
                return Err(Error::Diverged);
            }
            let gh = if head.is_zero() {
                SignedLog::zero()
            } else {
                let lf = F::from_index(start);
                head.scale_log(cb.scale.ln() + F::from_index(cb.power as u64) * lf.ln())
            };
            grad_tails.push(GradientTail {
                peak: gc.peak_index(),
                cert: Some(gc),
                head: gh,
            });
        }
    }

    let mut acc = LogAccumulator::new();
    let mut dir_acc = LogAccumulator::new();
    let mut grad: Vec<LogAccumulator<F>> = vec![LogAccumulator::new(); if extras.gradient { dim } else { 0 }];
    let mut n = start;
    let mut shells: u64 = 0;
    let mut streak: u64 = 0;
    let mut prev_shell = F::neg_infinity();
    let mut last_enclosure: Option<(SignedLog<F>, SignedLog<F>)> = None;
    let two = SignedLog::from_real(F::lit(2.0));

    loop {
        buf.clear();
        stream.shell_terms(n, s, &mut buf);
        let mut shell_max = F::neg_infinity();
        for (x, l) in buf.iter() {
            shell_max = shell_max.max(l);
            acc.push(SignedLog::from_log(l));
            if let Some(d) = extras.direction {
                push_signed(&mut dir_acc, crate::real::dot_int(x, d), l);
            }
            for (g, &xj) in grad.iter_mut().zip(x) {
                push_signed(g, F::from_int(xj), l);
            }
        }
        shells += 1;

        let dense = buf.len() > 4;
        if let Some(th) = extras.stop_above {
            if dense || shells.is_multiple_of(16) {
                let partial = acc.total();
                if partial.ln() > th {
                    return Ok(Evaluation {
                        result: LaplaceResult {
                            log_value: Some(partial),
                            tail_bound: SignedLog::from_log(F::infinity()),
                            status: Status::Inconclusive,
                            terms_used: shells,
                        },
                        exceeded: true,
                        directional: extras.direction.map(|_| dir_acc.total()),
                        gradient: None,
                    });
                }
            }
        }

        if let Some(p) = peak {
            if n >= p && (dense || (n - p) % 16 == 0) {
                let (lo, hi) = cert.tail_enclosure(n);
                let hi = hi + head;
                let partial = acc.total();
                let half_width = (hi - lo) / two;
                last_enclosure = Some((lo, hi));
                let value_ok = half_width.ln() <= opts.tol.ln() + partial.ln();
                let grads_ok = value_ok
                    && grad_tails.iter().zip(&grad).all(|(gt, g)| match (&gt.cert, gt.peak) {
                        (None, _) => true,
                        (Some(_), None) => false,
                        (Some(gc), Some(gp)) => {
                            n >= gp && {
                                let bound = gc.tail_bound(n) + gt.head;
                                let gt = g.total().abs();
                                let scale = if gt > partial { gt } else { partial };
                                bound.ln() <= opts.tol.ln() + scale.ln()
                            }
                        }
                    });
                if grads_ok {
                    let center = (lo + hi) / two;
                    return Ok(Evaluation {
                        result: LaplaceResult {
                            log_value: Some(partial + center),
                            tail_bound: half_width,
                            status: Status::Converged,
                            terms_used: shells,
                        },
                        exceeded: false,
                        directional: extras.direction.map(|_| dir_acc.total()),
                        gradient: extras.gradient.then(|| grad.iter().map(|g| g.total()).collect()),
                    });
                }
            }
        }

        if verdict == Convergence::Unknown {
            if shell_max > prev_shell {
                streak += 1;
            } else {
                streak = 0;
            }
            prev_shell = shell_max;
            if n > opts.patience_after && streak >= opts.patience {
                return Ok(inconclusive(acc.total(), None, shells, extras, &dir_acc));
            }
        }

        if shells >= opts.max_terms {
            return Ok(inconclusive(acc.total(), last_enclosure, shells, extras, &dir_acc));
        }
        n += 1;
    }
}

fn inconclusive<F: Real>(
    partial: SignedLog<F>,
    enclosure: Option<(SignedLog<F>, SignedLog<F>)>,
    shells: u64,
    extras: Extras<'_, F>,
    dir_acc: &LogAccumulator<F>,
) -> Evaluation<F> {
    let two = SignedLog::from_real(F::lit(2.0));
    let (value, bound) = match enclosure {
        Some((lo, hi)) => (partial + (lo + hi) / two, (hi - lo) / two),
        None => (partial, SignedLog::from_log(F::infinity())),
    };
    Evaluation {
        result: LaplaceResult {
            log_value: Some(value),
            tail_bound: bound,
            status: Status::Inconclusive,
            terms_used: shells,
        },
        exceeded: false,
        directional: extras.direction.map(|_| dir_acc.total()),
        gradient: None,
    }
}

/// `Phi_mu(s)` in log form with relative truncation tolerance `tol`.
pub fn log_laplace<F: Real>(mu: &LatticeMeasure<F>, s: impl Into<Exponent<F>>, tol: F) -> Result<LaplaceResult<F>> {
    log_laplace_with(mu, s, &LaplaceOptions::with_tol(tol))
}

pub fn log_laplace_with<F: Real>(
    mu: &LatticeMeasure<F>,
    s: impl Into<Exponent<F>>,
    opts: &LaplaceOptions<F>,
) -> Result<LaplaceResult<F>> {
    Ok(evaluate(mu, &s.into(), opts, Extras::default())?.result)
}

/// `log Phi(s)`, failing unless the evaluation converged.
pub fn log_phi<F: Real>(mu: &LatticeMeasure<F>, s: impl Into<Exponent<F>>, opts: &LaplaceOptions<F>) -> Result<F> {
    let r = log_laplace_with(mu, s, opts)?;
    match r.status {
        Status::Converged => Ok(r.log_value.map(|v| v.ln()).unwrap_or(F::nan())),
        Status::Diverged => Err(Error::Diverged),
        Status::Inconclusive => Err(Error::Inconclusive {
            terms_used: r.terms_used,
        }),
    }
}

/// `sum_x mu(x) x_j exp(x.s)` for every coordinate `j`.
pub fn log_laplace_gradient<F: Real>(
    mu: &LatticeMeasure<F>,
    s: impl Into<Exponent<F>>,
    tol: F,
) -> Result<Vec<SignedLog<F>>> {
    Ok(log_laplace_and_gradient(mu, &s.into(), &LaplaceOptions::with_tol(tol))?.1)
}

/// Value and gradient from one pass over the measure.
pub fn log_laplace_and_gradient<F: Real>(
    mu: &LatticeMeasure<F>,
    s: &Exponent<F>,
    opts: &LaplaceOptions<F>,
) -> Result<(LaplaceResult<F>, Vec<SignedLog<F>>)> {
    let ev = evaluate(
        mu,
        s,
        opts,
        Extras {
            gradient: true,
            ..Default::default()
        },
    )?;
    match ev.result.status {
        Status::Converged => Ok((ev.result, ev.gradient.expect("gradient requested"))),
        Status::Diverged => Err(Error::Diverged),
        Status::Inconclusive => Err(Error::Inconclusive {
            terms_used: ev.result.terms_used,
        }),
    }
}

/// Whether `s` lies in the convergence domain of `Phi`.
pub fn domain_membership<F: Real>(mu: &LatticeMeasure<F>, s: impl Into<Exponent<F>>) -> Convergence {
    let s = s.into();
    match mu.body() {
        Body::Atoms(_) => Convergence::Converges,
        Body::Stream(stream) => match stream.certificate(&s).divergence_test() {
            Convergence::Unknown => {
                let opts = LaplaceOptions {
                    max_terms: 1 << 16,
                    ..LaplaceOptions::with_tol(F::lit(1e-6))
                };
                match log_laplace_with(mu, s, &opts).map(|r| r.status) {
                    Ok(Status::Converged) => Convergence::Converges,
                    Ok(Status::Diverged) => Convergence::Diverges,
                    _ => Convergence::Unknown,
                }
            }
            v => v,
        },
    }
}

/// Checks `exp(x.s) <= sum over the 2^d corners c of exp(x.c)` for `s` in the
/// cube `center + [-eps, eps]^d`.
pub fn corner_domination_check<F: Real>(s: &[F], center: &[F], eps: F, x: &[i64]) -> Result<bool> {
    let d = center.len();
    if s.len() != d || x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if s.len() != d { s.len() } else { x.len() },
        });
    }
    if !(eps > F::zero()) || d > 24 {
        return Err(Error::InvalidArgument("eps must be positive and d at most 24".into()));
    }
    let slack = eps * F::lit(1e-12);
    if s.iter().zip(center).any(|(&sj, &cj)| (sj - cj).abs() > eps + slack) {
        return Err(Error::OutsideCube);
    }
    let lhs = crate::real::dot_int(x, s);
    let mut acc = LogAccumulator::new();
    for mask in 0u32..(1 << d) {
        let mut l = F::zero();
        for j in 0..d {
            let c = if mask & (1 << j) != 0 {
                center[j] + eps
            } else {
                center[j] - eps
            };
            l = l + F::from_int(x[j]) * c;
        }
        acc.push(SignedLog::from_log(l));
    }
    let rhs = acc.total().ln();
    Ok(lhs <= rhs + F::epsilon() * F::lit(4.0) * lhs.abs().max(F::one()))
}

fn combine<F: Real>(s: &Exponent<F>, t: &Exponent<F>, lambda: F) -> Exponent<F> {
    let mu = F::one() - lambda;
    if s.anchor() == t.anchor() {
        let off = s
            .offset()
            .iter()
            .zip(t.offset())
            .map(|(&a, &b)| lambda * a + mu * b)
            .collect();
        Exponent::anchored(s.anchor().to_vec(), off)
    } else {
        let (a, b) = (s.resolve(), t.resolve());
        Exponent::new(a.iter().zip(&b).map(|(&x, &y)| lambda * x + mu * y).collect())
    }
}

/// Checks `Phi(lambda s + (1 - lambda) t) <= lambda Phi(s) + (1 - lambda) Phi(t)`
/// within 4 ulps in the log domain.
pub fn midpoint_convexity_check<F: Real>(
    mu: &LatticeMeasure<F>,
    s: impl Into<Exponent<F>>,
    t: impl Into<Exponent<F>>,
    lambda: F,
) -> Result<bool> {
    if !(lambda >= F::zero() && lambda <= F::one()) {
        return Err(Error::InvalidArgument("lambda must lie in [0, 1]".into()));
    }
    let (s, t) = (s.into(), t.into());
    let opts = LaplaceOptions::default();
    let ls = log_phi(mu, &s, &opts)?;
    let lt = log_phi(mu, &t, &opts)?;
    let mid = combine(&s, &t, lambda);
    let lm = match log_phi(mu, &mid, &opts) {
        Ok(v) => v,
        Err(_) => return Ok(false),
    };
    let rhs = (SignedLog::from_log(lambda.ln() + ls) + SignedLog::from_log((-lambda).ln_1p() + lt)).ln();
    let slack = F::epsilon() * F::lit(4.0) * rhs.abs().max(F::one());
    Ok(lm <= rhs + slack)
}

//! Infinitely supported measures as certified shell streams.

use std::fmt;
use std::sync::Arc;

use super::certificate::{ShellEnvelope, TailCertificate};
use super::{Exponent, MomentEnvelope};
use crate::lognum::{lse_accumulate, LogAccumulator, SignedLog};
use crate::real::{dot_int, Real};

/// Flat buffer of `(point, log value)` pairs produced for one shell.
#[derive(Debug, Clone)]
pub struct ShellBuffer<F> {
    dim: usize,
    points: Vec<i64>,
    logs: Vec<F>,
}

impl<F: Real> ShellBuffer<F> {
    pub fn new(dim: usize) -> Self {
        ShellBuffer {
            dim,
            points: Vec::new(),
            logs: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.points.clear();
        self.logs.clear();
    }

    pub fn push(&mut self, point: &[i64], log: F) {
        debug_assert_eq!(point.len(), self.dim);
        self.points.extend_from_slice(point);
        self.logs.push(log);
    }

    /// Pushes a point given coordinate by coordinate.
    pub fn push_coords(&mut self, coords: impl Iterator<Item = i64>, log: F) {
        let before = self.points.len();
        self.points.extend(coords);
        debug_assert_eq!(self.points.len() - before, self.dim);
        self.logs.push(log);
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], F)> + '_ {
        self.points.chunks_exact(self.dim.max(1)).zip(self.logs.iter().copied())
    }
}

/// `|x_j| <= scale * n^power` for every atom `x` in shell `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateBound<F> {
    pub scale: F,
    pub power: u32,
    /// The bound holds with equality on every atom.
    pub exact: bool,
}

/// An infinitely supported measure enumerated shell by shell.
pub trait TermStream<F: Real>: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn first_shell(&self) -> u64;

    /// Appends `(point, log mu(point))` for every atom of shell `n`.
    fn shell_atoms(&self, n: u64, out: &mut ShellBuffer<F>);

    /// Appends `(point, log mu(point) + point.s)` for every atom of shell `n`.
    fn shell_terms(&self, n: u64, s: &Exponent<F>, out: &mut ShellBuffer<F>) {
        let mut atoms = ShellBuffer::new(self.dim());
        self.shell_atoms(n, &mut atoms);
        for (x, lw) in atoms.iter() {
            out.push(x, lw + s.dot_lattice(x));
        }
    }

    fn certificate(&self, s: &Exponent<F>) -> TailCertificate<F>;

    fn coordinate_bound(&self, j: usize) -> CoordinateBound<F>;

    /// Asymptotic weight profile in terms of the sup norm of the atoms.
    fn moment_envelope(&self) -> Option<MomentEnvelope<F>>;
}

/// Sums a stream's shells at `s` until the certificate closes the tail.
/// Used at construction time for normalizing constants, where the envelope
/// converges fast.
fn log_total<F: Real, S: TermStream<F> + ?Sized>(stream: &S, s: &Exponent<F>) -> F {
    let cert = stream.certificate(s);
    let peak = cert.peak_index().expect("normalizing series has a peak");
    let mut buf = ShellBuffer::new(stream.dim());
    let mut acc = LogAccumulator::new();
    let mut n = stream.first_shell();
    loop {
        buf.clear();
        stream.shell_terms(n, s, &mut buf);
        acc.extend(buf.iter().map(|(_, l)| SignedLog::from_log(l)));
        if n >= peak {
            let partial = acc.total();
            let tail = cert.tail_bound(n);
            if tail.ln() <= partial.ln() + F::lit(-80.0) {
                return partial.ln();
            }
        }
        n += 1;
    }
}

/// One atom per shell: atom `n >= 1` sits at `lin * n + quad * n^2` with
/// `log mu = -kappa n^2 + lambda n - gamma ln n - log_norm`.
#[derive(Clone)]
pub struct QuadraticStream<F> {
    lin: Vec<i64>,
    quad: Vec<i64>,
    kappa: F,
    lambda: F,
    gamma: F,
    log_norm: F,
}

impl<F: Real> fmt::Debug for QuadraticStream<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticStream")
            .field("lin", &self.lin)
            .field("quad", &self.quad)
            .field("kappa", &self.kappa)
            .field("lambda", &self.lambda)
            .field("gamma", &self.gamma)
            .field("log_norm", &self.log_norm)
            .finish()
    }
}

impl<F: Real> QuadraticStream<F> {
    /// Builds and normalizes the stream. Panics if the weights are not summable.
    pub fn new(lin: Vec<i64>, quad: Vec<i64>, kappa: F, lambda: F, gamma: F) -> Self {
        assert_eq!(lin.len(), quad.len());
        assert!(
            kappa > F::zero()
                || (kappa == F::zero() && (lambda < F::zero() || (lambda == F::zero() && gamma > F::one()))),
            "quadratic stream weights must be summable"
        );
        let mut s = QuadraticStream {
            lin,
            quad,
            kappa,
            lambda,
            gamma,
            log_norm: F::zero(),
        };
        let zero = Exponent::zeros(s.lin.len());
        s.log_norm = log_total(&s, &zero);
        s
    }

    /// Log of the normalizing constant.
    pub fn log_norm(&self) -> F {
        self.log_norm
    }

    fn coords(&self, n: u64) -> impl Iterator<Item = i64> + '_ {
        let n = n as i64;
        self.lin.iter().zip(&self.quad).map(move |(l, q)| l * n + q * n * n)
    }

    /// `(a, b)` of the exponent `-a n^2 + b n` at `s`, folding the anchor in first.
    fn coefficients(&self, s: &Exponent<F>) -> (F, F) {
        let a = (self.kappa - dot_int(&self.quad, s.anchor())) - dot_int(&self.quad, s.offset());
        let b = (self.lambda + dot_int(&self.lin, s.anchor())) + dot_int(&self.lin, s.offset());
        (a, b)
    }
}

impl<F: Real> TermStream<F> for QuadraticStream<F> {
    fn dim(&self) -> usize {
        self.lin.len()
    }

    fn first_shell(&self) -> u64 {
        1
    }

    fn shell_atoms(&self, n: u64, out: &mut ShellBuffer<F>) {
        let nf = F::from_index(n);
        let lw = (self.lambda - self.kappa * nf) * nf - self.gamma * nf.ln() - self.log_norm;
        out.push_coords(self.coords(n), lw);
    }

    fn shell_terms(&self, n: u64, s: &Exponent<F>, out: &mut ShellBuffer<F>) {
        let (a, b) = self.coefficients(s);
        let nf = F::from_index(n);
        out.push_coords(self.coords(n), (b - a * nf) * nf - self.gamma * nf.ln() - self.log_norm);
    }

    fn certificate(&self, s: &Exponent<F>) -> TailCertificate<F> {
        let (a, b) = self.coefficients(s);
        TailCertificate::new(
            ShellEnvelope {
                a,
                b,
                gamma: self.gamma,
                c: -self.log_norm,
            },
            true,
            1,
        )
    }

    fn coordinate_bound(&self, j: usize) -> CoordinateBound<F> {
        let (l, q) = (self.lin[j], self.quad[j]);
        CoordinateBound {
            scale: F::from_int(l.abs() + q.abs()),
            power: if q != 0 { 2 } else { 1 },
            exact: l == 0 || q == 0,
        }
    }

    fn moment_envelope(&self) -> Option<MomentEnvelope<F>> {
        let cq = self.quad.iter().map(|q| q.abs()).max().unwrap_or(0);
        let cl = self.lin.iter().map(|l| l.abs()).max().unwrap_or(0);
        let zero = F::zero();
        if cq > 0 {
            // |x| ~ cq n^2, so -kappa n^2 = -(kappa / cq) |x|
            if self.kappa > zero {
                return Some(MomentEnvelope::new(1, self.kappa / F::from_int(cq), zero));
            }
            // only sub-linear decay in |x|
            return Some(MomentEnvelope::new(0, zero, zero));
        }
        if cl == 0 {
            return None;
        }
        let cl = F::from_int(cl);
        if self.kappa > zero {
            Some(MomentEnvelope::new(
                2,
                self.kappa / (cl * cl),
                self.lambda.max(zero) / cl,
            ))
        } else if self.lambda < zero {
            Some(MomentEnvelope::new(1, -self.lambda / cl, zero))
        } else {
            Some(MomentEnvelope::new(0, zero, zero))
        }
    }
}

/// Discrete Gaussian on Z^2 with drift: `mu(x) ∝ exp(-|x|^2 / 2 + g.x)`.
/// Shell `n` is the sup-norm sphere `max(|x1|, |x2|) = n` (8n atoms).
#[derive(Debug, Clone)]
pub struct GaussStream<F> {
    drift: [F; 2],
    log_norm: F,
}

/// log sum_k exp(-k^2/2 + t k), truncated where the remainder is below e^-800.
fn log_theta<F: Real>(t: F) -> F {
    let k_max = t.abs().ceil().to_i64().unwrap_or(0) + 42;
    lse_accumulate((-k_max..=k_max).map(|k| {
        let kf = F::from_int(k);
        SignedLog::from_log(kf * (t - F::lit(0.5) * kf))
    }))
    .ln()
}

impl<F: Real> GaussStream<F> {
    pub fn new(drift: [F; 2]) -> Self {
        GaussStream {
            drift,
            log_norm: log_theta(drift[0]) + log_theta(drift[1]),
        }
    }

    pub fn drift(&self) -> [F; 2] {
        self.drift
    }

    pub fn log_norm(&self) -> F {
        self.log_norm
    }

    /// Closed form `log Phi(s) = log theta(g1+s1) + log theta(g2+s2) - log Z`.
    pub fn log_laplace_closed_form(&self, s: &[F]) -> F {
        log_theta(self.drift[0] + s[0]) + log_theta(self.drift[1] + s[1]) - self.log_norm
    }

    fn for_each_in_shell(n: u64, mut f: impl FnMut([i64; 2])) {
        let n = n as i64;
        if n == 0 {
            f([0, 0]);
            return;
        }
        for k in -n..=n {
            f([n, k]);
            f([-n, k]);
        }
        for k in (-n + 1)..n {
            f([k, n]);
            f([k, -n]);
        }
    }

    fn tilt(&self, s: &Exponent<F>) -> [F; 2] {
        let (a, o) = (s.anchor(), s.offset());
        [self.drift[0] + a[0] + o[0], self.drift[1] + a[1] + o[1]]
    }

    fn log_term(&self, x: [i64; 2], t: [F; 2]) -> F {
        let (x1, x2) = (F::from_int(x[0]), F::from_int(x[1]));
        x1 * (t[0] - F::lit(0.5) * x1) + x2 * (t[1] - F::lit(0.5) * x2) - self.log_norm
    }
}

impl<F: Real> TermStream<F> for GaussStream<F> {
    fn dim(&self) -> usize {
        2
    }

    fn first_shell(&self) -> u64 {
        0
    }

    fn shell_atoms(&self, n: u64, out: &mut ShellBuffer<F>) {
        Self::for_each_in_shell(n, |x| out.push(&x, self.log_term(x, self.drift)));
    }

    fn shell_terms(&self, n: u64, s: &Exponent<F>, out: &mut ShellBuffer<F>) {
        let t = self.tilt(s);
        Self::for_each_in_shell(n, |x| out.push(&x, self.log_term(x, t)));
    }

    fn certificate(&self, s: &Exponent<F>) -> TailCertificate<F> {
        let t = self.tilt(s);
        TailCertificate::new(
            ShellEnvelope {
                a: F::lit(0.5),
                b: t[0].abs() + t[1].abs(),
                gamma: -F::one(),
                c: F::lit(8.0).ln() - self.log_norm,
            },
            false,
            0,
        )
    }

    fn coordinate_bound(&self, _j: usize) -> CoordinateBound<F> {
        CoordinateBound {
            scale: F::one(),
            power: 1,
            exact: false,
        }
    }

    fn moment_envelope(&self) -> Option<MomentEnvelope<F>> {
        Some(MomentEnvelope::new(
            2,
            F::lit(0.5),
            self.drift[0].abs() + self.drift[1].abs(),
        ))
    }
}

/// A stream on Z^k embedded in Z^d (`d >= k`) by zero-padding every atom.
#[derive(Debug, Clone)]
pub struct LiftedStream<F> {
    inner: Arc<dyn TermStream<F>>,
    dim: usize,
}

impl<F: Real> LiftedStream<F> {
    pub fn new(inner: Arc<dyn TermStream<F>>, dim: usize) -> Self {
        assert!(dim >= inner.dim());
        LiftedStream { inner, dim }
    }

    fn pad(&self, src: &ShellBuffer<F>, out: &mut ShellBuffer<F>) {
        let mut p = vec![0i64; self.dim];
        for (x, l) in src.iter() {
            p[..x.len()].copy_from_slice(x);
            out.push(&p, l);
        }
    }
}

impl<F: Real> TermStream<F> for LiftedStream<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn first_shell(&self) -> u64 {
        self.inner.first_shell()
    }

    fn shell_atoms(&self, n: u64, out: &mut ShellBuffer<F>) {
        let mut tmp = ShellBuffer::new(self.inner.dim());
        self.inner.shell_atoms(n, &mut tmp);
        self.pad(&tmp, out);
    }

    fn shell_terms(&self, n: u64, s: &Exponent<F>, out: &mut ShellBuffer<F>) {
        let mut tmp = ShellBuffer::new(self.inner.dim());
        self.inner.shell_terms(n, &s.truncate(self.inner.dim()), &mut tmp);
        self.pad(&tmp, out);
    }

    fn certificate(&self, s: &Exponent<F>) -> TailCertificate<F> {
        self.inner.certificate(&s.truncate(self.inner.dim()))
    }

    fn coordinate_bound(&self, j: usize) -> CoordinateBound<F> {
        if j < self.inner.dim() {
            self.inner.coordinate_bound(j)
        } else {
            CoordinateBound {
                scale: F::zero(),
                power: 0,
                exact: true,
            }
        }
    }

    fn moment_envelope(&self) -> Option<MomentEnvelope<F>> {
        self.inner.moment_envelope()
    }
}

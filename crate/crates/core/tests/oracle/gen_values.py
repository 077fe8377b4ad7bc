"""High-precision reference values for the Z^2 counterexample measure.

Everything here is computed with mpmath at 60 significant digits and is
independent of the Rust implementation. The printed values are frozen into
the integration tests.

Measure: atom n >= 1 with weight exp(100 n - n^2) / (n^2 M).
  variant A places atom n at (100 n, -n^2), variant B at (n, -n^2).
On the curve through the witness, g_x(y) = (1/M) sum exp(c n x - n^2 y) / n^2
with c = 100 (variant A) or c = 1 (variant B).
"""
from mpmath import mp, mpf, exp, log, pi, sqrt, findroot

mp.dps = 60


def log_m(terms=500):
    s = mpf(0)
    for n in range(1, terms + 1):
        s += exp(mpf(100 * n - n * n)) / (n * n)
    return log(s)


LOG_M = log_m()


def log_g(c, x, y):
    # log of (1/M) sum_n exp(c n x - n^2 y)/n^2, summed over a window that
    # covers the peak of the summand with exp(-120) relative slack.
    x = mpf(x)
    y = mpf(y)
    peak = max(1, int(c * x / (2 * y)))
    half = int(sqrt(mpf(140) / y)) + 200
    lo = max(1, peak - half)
    hi = peak + half
    shift = c * x * peak - y * peak * peak
    s = mpf(0)
    for n in range(lo, hi + 1):
        s += exp(c * n * x - n * n * y - shift) / (n * n)
    return shift + log(s) - LOG_M


def y_of(c, x, guess):
    f = lambda y: log_g(c, x, y)
    # bracket then refine
    lo = mpf(guess) / 4
    hi = mpf(guess) * 4
    assert f(lo) > 0 and f(hi) < 0, (x, lo, hi)
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < mpf(guess) * mpf(10) ** -40:
            break
    return (lo + hi) / 2


if __name__ == "__main__":
    print("log_M", mp.nstr(LOG_M, 25))
    print("log_zeta2", mp.nstr(log(pi ** 2 / 6), 25))
    print("witness_log_phi", mp.nstr(log(pi ** 2 / 6) - LOG_M, 25))
    for x in ["1", "0.5", "0.1", "0.01", "0.001"]:
        xv = mpf(x)
        guess = xv * xv * 2500 / LOG_M if xv < 1 else mpf(1)
        y = y_of(100, xv, guess)
        print("yA", x, mp.nstr(y, 25))

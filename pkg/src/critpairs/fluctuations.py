"""Scaled fluctuations of the largest critical points and their limit laws."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .errors import DomainError, InsufficientDataError, UnsupportedRegimeWarning, WrongRegimeError
from .measures import RadialMeasure, TailLaw
from .pairing import descending_indices, top_order_ok
from .poly_core import CriticalSet, RootSample

STABLE_ALPHA_FLOOR = -0.095

REGIME_POSITIVE = "gaussian-positive"
REGIME_LOG = "gaussian-log"
REGIME_STABLE = "stable"

FLUCTUATION_COLUMNS = ("trial", "rank", "re_value", "im_value", "regime", "order_ok")


def regime(alpha: float) -> str:
    if alpha > 0:
        return REGIME_POSITIVE
    if alpha == 0:
        return REGIME_LOG
    return REGIME_STABLE


def _warn_stable(alpha: float) -> None:
    if alpha <= STABLE_ALPHA_FLOOR:
        warnings.warn(f"alpha={alpha} is at or below {STABLE_ALPHA_FLOOR}; the stable limit is "
                      "not covered there", UnsupportedRegimeWarning, stacklevel=3)


def scale_factor(alpha: float, n: float) -> float:
    """Refinement scale: ``n^1.5``, ``n^1.5/log n`` or ``n^((3+2a)/(2+a))`` by sign of alpha."""
    if n <= 1:
        raise DomainError("scale_factor needs n > 1")
    if alpha > 0:
        return n ** 1.5
    if alpha == 0:
        return n ** 1.5 / math.log(n)
    _warn_stable(alpha)
    return n ** ((3.0 + 2.0 * alpha) / (2.0 + alpha))


def rank_scale(alpha: float, n: float) -> float:
    """Per-rank scale: as :func:`scale_factor` but ``n^1.5/sqrt(log n)`` at alpha = 0."""
    if alpha == 0:
        if n <= 1:
            raise DomainError("rank_scale needs n > 1")
        return n ** 1.5 / math.sqrt(math.log(n))
    return scale_factor(alpha, n)


@dataclass(frozen=True)
class FluctuationSample:
    alpha: float
    n: int
    rank: int
    value: complex
    regime: str
    order_ok: bool
    trial: int = 0

    def row(self) -> tuple:
        return (self.trial, self.rank, self.value.real, self.value.imag, self.regime, self.order_ok)


def scaled_fluctuations(sample: RootSample, cps: CriticalSet, L: int = 1, trial: int = 0,
                        alpha: float | None = None) -> list[FluctuationSample]:
    """Rotated and rescaled offsets ``W_(i) - X_(i)(1 - 1/n)`` for ranks ``1..L``.

    ``order_ok`` is a trial-level flag: true when the ``L`` largest critical
    points pair rank for rank with the ``L`` largest roots.
    """
    a = sample.alpha if alpha is None else alpha
    if not math.isfinite(a):
        raise DomainError("alpha is needed to choose the scaling")
    n = sample.n
    L = min(L, n - 1)
    s = rank_scale(a, n)
    X = sample.roots[descending_indices(sample.roots)[:L]]
    W = np.asarray(cps.points)[descending_indices(cps.points)[:L]]
    ok = bool(np.all(top_order_ok(sample, cps, L)))
    vals = s * np.exp(-1j * np.angle(X)) * (W - X * (1.0 - 1.0 / n))
    reg = regime(a)
    return [FluctuationSample(alpha=a, n=n, rank=i + 1, value=complex(vals[i]), regime=reg,
                              order_ok=ok, trial=int(trial)) for i in range(L)]


# ---------------------------------------------------------------- Gaussian limit


@dataclass(frozen=True)
class GaussTarget:
    var_re: float
    var_im: float
    cov_re_im: float


def _edge_ratio(t: float, theta: float) -> complex:
    # x/(1-x) for x = (1-t) e^{i theta}, with 1 - x formed without cancellation
    e = complex(math.cos(theta), math.sin(theta))
    one_minus = -2j * math.sin(0.5 * theta) * complex(math.cos(0.5 * theta), math.sin(0.5 * theta)) + t * e
    return (1.0 - t) * e / one_minus


def _disk_expectation(mu: RadialMeasure, g) -> float:
    """``E g(X/(1-X))`` as a nested adaptive quadrature.

    The radial variable is the edge distance ``t = 1 - r`` on a log scale,
    so mass packed against the unit circle is resolved.  Integrals that
    vanish by symmetry need an absolute tolerance well above rounding noise.
    """
    def inner(t):
        # theta = t tan(phi) flattens the peak of width ~t at theta = 0; past
        # theta = 1 that map squeezes the flank into a sliver, so the flank is
        # integrated in theta directly
        def f(phi):
            th = t * math.tan(phi)
            return g(_edge_ratio(t, th)) * t / math.cos(phi) ** 2

        peak, _ = integrate.quad(f, 0.0, math.atan(1.0 / t), limit=200,
                                 epsabs=1e-14, epsrel=1e-11)
        flank, _ = integrate.quad(lambda th: g(_edge_ratio(t, th)), 1.0, math.pi, limit=200,
                                  epsabs=1e-14, epsrel=1e-11)
        return (peak + flank) / math.pi * mu.edge_density(t)

    # r = 1 - e^u, dr = e^u du; below e^-300 the squared ratio would overflow
    # and the omitted mass is O(e^(-300 alpha))
    with warnings.catch_warnings():
        # the tiny-t inner integrals trip roundoff warnings at a 1e-14 floor
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda u: inner(math.exp(u)) * math.exp(u), -300.0, 0.0,
                                limit=500, epsabs=1e-13, epsrel=1e-10)
    return val


def gauss_target(mu: RadialMeasure) -> GaussTarget:
    """Covariance of the Gaussian limit of the per-rank statistic (``alpha >= 0``)."""
    a = mu.alpha
    if a < 0:
        raise WrongRegimeError("the Gaussian limit needs alpha >= 0")
    if a == 0:
        v = math.pi * mu.density_at_edge() / 4.0
        return GaussTarget(var_re=v, var_im=v, cov_re_im=0.0)

    # the law of X is invariant under conjugation, so Im and Re*Im average to
    # zero; Re(x/(1-x)) = (1-r^2)/(2|1-x|^2) - 1/2 averages to zero on every
    # circle |x| = r < 1 because the Poisson kernel has unit mean
    e_rr = _disk_expectation(mu, lambda y: y.real ** 2)
    e_ii = _disk_expectation(mu, lambda y: y.imag ** 2)
    return GaussTarget(var_re=e_rr, var_im=e_ii, cov_re_im=0.0)


# ---------------------------------------------------------------- heavy tails


def hill_index(samples, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest of ``samples``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0 or np.any(~(x > 0)) or np.any(~np.isfinite(x)):
        raise DomainError("hill_index needs finite positive samples")
    if not (1 <= k < x.size / 2):
        raise DomainError(f"k={k} must satisfy 1 <= k < {x.size}/2")
    top = -np.partition(-x, k)[:k + 1]
    top.sort()
    top = top[::-1]
    h = float(np.mean(np.log(top[:k] / top[k])))
    if h <= 0.0:
        raise DomainError("no spread among the top order statistics; index undefined")
    return 1.0 / h


MIN_EXCEEDANCES = 200


def ks_critical(m: int, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value ``c(level)/sqrt(m)``."""
    table = {0.05: 1.36, 0.01: 1.63}
    if level not in table:
        raise DomainError("level must be 0.05 or 0.01")
    return table[level] / math.sqrt(m)


def exceedance_args(samples, threshold: float) -> np.ndarray:
    z = np.asarray(samples, dtype=np.complex128).ravel()
    return np.angle(z[np.abs(z) >= threshold])


def angular_test(samples, threshold: float, law: TailLaw) -> float:
    """KS distance between arguments of exceedances of ``threshold`` and the angular law."""
    th = exceedance_args(samples, threshold)
    if th.size < MIN_EXCEEDANCES:
        raise InsufficientDataError(f"only {th.size} exceedances of {threshold}; need {MIN_EXCEEDANCES}")
    return float(stats.kstest(th, law.angular_cdf).statistic)


def kurtosis(values) -> float:
    """Pearson (non-excess) kurtosis."""
    return float(stats.kurtosis(np.asarray(values, dtype=float), fisher=False))


def stability_statistic(values, m: int, index: float) -> float:
    """Two-sample KS distance between single values and rescaled block sums.

    Values are centred, summed in blocks of ``m`` and divided by
    ``m^(1/index)``; for a strictly stable law of that index the two samples
    share a law.  Real parts are compared.
    """
    v = np.asarray(values, dtype=np.complex128).ravel()
    blocks = v.size // m
    if blocks < 20:
        raise InsufficientDataError("need at least 20 blocks")
    c = v - np.median(v.real) - 1j * np.median(v.imag)
    sums = c[:blocks * m].reshape(blocks, m).sum(axis=1) / m ** (1.0 / index)
    return float(stats.ks_2samp(c.real, sums.real).statistic)

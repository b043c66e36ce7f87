"""Radially symmetric root measures on the unit disk.

The default family has radial density ``(alpha+1) * (1-r)**alpha`` on
``[0, 1)``; its CDF and quantile are closed form.  A user radial density can
be plugged in through ``RadialMeasure(model="user", density=...)`` together
with its edge constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, UnsupportedMeasureError
from .poly_core import RootSample

QUAD_EPSABS = 1e-10

MODELS = ("power", "user")


@dataclass(frozen=True)
class RadialMeasure:
    """Radially symmetric probability measure supported on the closed unit disk.

    ``c_mu``/``C_mu`` pinch ``f_R(r)/(1-r)**alpha`` on ``[1-eps, 1)``.  For the
    default ``"power"`` model they are ``alpha+1`` and ``eps`` is 1.
    ``edge_constant`` is ``lim_{r->1} f_R(r)/(1-r)**alpha`` when it exists.
    ``envelope`` bounds ``f_R / ((alpha+1)(1-r)**alpha)`` on ``[0, 1)`` and is
    only used for rejection sampling of user densities.
    """

    alpha: float
    model: str = "power"
    c_mu: float | None = None
    C_mu: float | None = None
    eps: float = 1.0
    density: Callable[[float], float] | None = field(default=None, repr=False, compare=False)
    edge_constant: float | None = None
    envelope: float | None = None

    def __post_init__(self):
        a = float(self.alpha)
        if not a > -1.0 or not math.isfinite(a):
            raise DomainError(f"alpha must exceed -1, got {self.alpha}")
        object.__setattr__(self, "alpha", a)
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model == "power":
            if self.density is not None:
                raise DomainError("the power model does not take a density")
            for name in ("c_mu", "C_mu", "edge_constant"):
                if getattr(self, name) is None:
                    object.__setattr__(self, name, a + 1.0)
            object.__setattr__(self, "eps", 1.0)
        else:
            if self.density is None:
                raise DomainError("model='user' requires a radial density")
            if self.c_mu is None or self.C_mu is None:
                raise DomainError("model='user' requires c_mu and C_mu")
        if not (0.0 < self.eps <= 1.0):
            raise DomainError(f"eps must lie in (0, 1], got {self.eps}")
        if not (0.0 < self.c_mu <= self.C_mu):
            raise DomainError("need 0 < c_mu <= C_mu")

    def radial_density(self, r):
        """``f_R(r)``; vectorised over ``r``."""
        r = np.asarray(r, dtype=float)
        if self.model == "power":
            with np.errstate(divide="ignore"):
                out = (self.alpha + 1.0) * np.power(1.0 - r, self.alpha)
            return np.where((r >= 0.0) & (r < 1.0), out, 0.0)
        return np.vectorize(lambda t: float(self.density(t)) if 0.0 <= t < 1.0 else 0.0)(r)

    def edge_density(self, t: float) -> float:
        """``f_R(1 - t)`` evaluated without forming ``1 - t`` for the power model."""
        if self.model == "power":
            return (self.alpha + 1.0) * t ** self.alpha
        return float(self.density(1.0 - t))

    def density_at_edge(self) -> float:
        """``f_mu(1) = f_R(1-)/(2 pi)``; meaningful for ``alpha == 0``."""
        if self.alpha != 0.0:
            raise UnsupportedMeasureError("f_mu(1) is finite and positive only when alpha == 0")
        return _edge_limit(self) / (2.0 * math.pi)


def _edge_limit(mu: RadialMeasure) -> float:
    if mu.edge_constant is not None:
        return float(mu.edge_constant)
    # numerical limit of f_R(r)/(1-r)**alpha; must settle to be usable
    gaps = np.array([1e-6, 1e-8, 1e-10])
    vals = np.array([float(mu.density(1.0 - g)) / g**mu.alpha for g in gaps])
    if not np.all(np.isfinite(vals)) or abs(vals[-1] - vals[-2]) > 1e-6 * abs(vals[-1]):
        raise UnsupportedMeasureError("lim f_R(r)/(1-r)^alpha does not settle for this density")
    return float(vals[-1])


def _user_cdf(mu: RadialMeasure, r: float) -> float:
    if r <= 0.0:
        return 0.0
    if r >= 1.0:
        return 1.0
    val, _ = integrate.quad(lambda t: float(mu.density(t)), 0.0, r, epsabs=1e-13, limit=200)
    return min(max(val, 0.0), 1.0)


def radial_cdf(mu: RadialMeasure, r):
    """``F_R(r) = mu(|z| <= r)`` for ``0 <= r <= 1``."""
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("radial_cdf needs 0 <= r <= 1")
    if mu.model == "power":
        out = 1.0 - np.power(1.0 - arr, mu.alpha + 1.0)
    else:
        out = np.vectorize(lambda t: _user_cdf(mu, t))(arr)
    return float(out) if np.ndim(out) == 0 else out


def radial_quantile(mu: RadialMeasure, u):
    """Inverse of :func:`radial_cdf` on ``[0, 1)``."""
    arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise DomainError("radial_quantile needs 0 <= u < 1")
    if mu.model == "power":
        out = -np.expm1(np.log1p(-arr) / (mu.alpha + 1.0))
    else:
        def inv(p):
            if p == 0.0:
                return 0.0
            return optimize.brentq(lambda t: _user_cdf(mu, t) - p, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
        out = np.vectorize(inv)(arr)
    return float(out) if np.ndim(out) == 0 else out


def _user_radii(mu: RadialMeasure, n: int, rng: np.random.Generator) -> np.ndarray:
    # rejection from the power model with the same exponent
    proposal = RadialMeasure(mu.alpha)
    bound = mu.envelope
    if bound is None:
        grid = 1.0 - np.geomspace(1.0, 1e-9, 2000)[:-1]
        ratio = mu.radial_density(grid) / proposal.radial_density(grid)
        bound = 1.05 * float(np.max(ratio))
    out = np.empty(0)
    while out.size < n:
        m = max(2 * (n - out.size), 64)
        r = radial_quantile(proposal, rng.random(m))
        accept = rng.random(m) * bound * proposal.radial_density(r) <= mu.radial_density(r)
        out = np.concatenate([out, r[accept]])
    return out[:n]


def sample_roots(mu: RadialMeasure, n: int, rng: np.random.Generator, seed: int = 0) -> RootSample:
    """Draw ``n`` i.i.d. points ``r * exp(i theta)`` with ``theta`` uniform on ``(-pi, pi]``.

    ``seed`` is carried into the returned sample for provenance only; the
    draws come from ``rng``.
    """
    if n < 2:
        raise DomainError("need n >= 2 roots")
    if mu.model == "power":
        r = radial_quantile(mu, rng.random(n))
    else:
        r = _user_radii(mu, n, rng)
    theta = math.pi - 2.0 * math.pi * rng.random(n)
    roots = r * np.exp(1j * theta)
    return RootSample(roots=roots, seed=int(seed), alpha=mu.alpha)


def stieltjes(mu: RadialMeasure, z):
    """Cauchy-Stieltjes transform ``F_R(|z|)/z`` (zero at the origin)."""
    z = np.asarray(z, dtype=complex)
    mod = np.abs(z)
    F = radial_cdf(mu, np.minimum(mod, 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mod > 0.0, F / np.where(mod > 0.0, z, 1.0), 0.0 + 0.0j)
    return complex(out) if out.ndim == 0 else out


def check_edge_bounds(mu: RadialMeasure, num: int = 2001) -> bool:
    """Spot-check ``c_mu <= f_R(r)/(1-r)^alpha <= C_mu`` on ``[1-eps, 1)``."""
    r = 1.0 - mu.eps * np.geomspace(1.0, 1e-12, num)
    ratio = mu.radial_density(r) / np.power(1.0 - r, mu.alpha)
    slack = 1e-12 * mu.C_mu
    return bool(np.all(ratio >= mu.c_mu - slack) and np.all(ratio <= mu.C_mu + slack))


@dataclass(frozen=True)
class TailLaw:
    """Tail of ``|X/(1-X)|`` and the limiting angular law of its large values."""

    alpha: float
    index: float
    constant: float
    edge_constant: float
    _half_mass: float = field(repr=False)

    def _left_mass(self, s: float) -> float:
        # int_{-1}^{s} (1-u^2)^((alpha-1)/2) du for s <= 0, i.e. the cos^alpha
        # mass of (-pi/2, arcsin s] after the substitution u = sin(theta)
        if s <= -1.0:
            return 0.0
        a = 0.5 * (self.alpha - 1.0)
        val, _ = integrate.quad(lambda u: (1.0 - u) ** a, -1.0, s, weight="alg", wvar=(a, 0.0),
                                epsabs=QUAD_EPSABS * 1e-3)
        return val

    def _cdf_scalar(self, theta: float) -> float:
        if theta <= -math.pi / 2:
            return 0.0
        if theta >= math.pi / 2:
            return 1.0
        s = math.sin(theta)
        if s <= 0.0:
            return self._left_mass(s) / (2.0 * self._half_mass)
        return 1.0 - self._left_mass(-s) / (2.0 * self._half_mass)

    def angular_cdf(self, theta):
        """Normalised ``int_{-pi/2}^{theta} cos^alpha``; vectorised."""
        arr = np.asarray(theta, dtype=float)
        if arr.ndim == 0:
            return self._cdf_scalar(float(arr))
        return np.array([self._cdf_scalar(float(t)) for t in arr.ravel()]).reshape(arr.shape)

    def sample_angles(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draws from the angular law."""
        u = rng.random(m)
        return np.array([optimize.brentq(lambda t, p=p: self._cdf_scalar(t) - p,
                                         -math.pi / 2, math.pi / 2, xtol=1e-14) for p in u])


def cos_power_integral(alpha: float) -> float:
    """``int_{-pi/2}^{pi/2} cos(theta)^alpha d theta`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda t: math.cos(t) ** alpha, -math.pi / 2, math.pi / 2,
                            epsabs=QUAD_EPSABS * 1e-3, limit=200)
    return val


def tail_constant_disk_form(alpha: float, edge_constant: float) -> float:
    """Second closed form: ``C/(pi(alpha+1)) int_0^1 (1-u^2)^((1+alpha)/2) du``."""
    val, _ = integrate.quad(lambda u: (1.0 - u * u) ** ((1.0 + alpha) / 2.0), 0.0, 1.0,
                            epsabs=QUAD_EPSABS * 1e-3)
    return edge_constant / (math.pi * (alpha + 1.0)) * val


def tail_law(mu: RadialMeasure) -> TailLaw:
    if mu.alpha > 0.0:
        raise UnsupportedMeasureError("tail law is defined for -1 < alpha <= 0")
    C = _edge_limit(mu)
    if not (C > 0.0 and math.isfinite(C)):
        raise UnsupportedMeasureError("edge constant must be positive and finite")
    a = mu.alpha
    total = cos_power_integral(a)
    law = TailLaw(alpha=a, index=2.0 + a, constant=C / (2.0 * math.pi * (a + 2.0)) * total,
                  edge_constant=C, _half_mass=0.0)
    half = law._left_mass(0.0)
    object.__setattr__(law, "_half_mass", half)
    return law

"""Finite-n diagnostics: the discrete transform, annulus nets and event flags.

The event flags follow their set definitions literally; they are observed
indicators, not probability bounds.  Parameter sets are concrete finite-n
evaluations of the asymptotic sequences and can be overridden field by field.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numba as nb
import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInputError, DomainError
from .measures import RadialMeasure, stieltjes
from .poly_core import RootSample

DEFAULT_MAX_NET_POINTS = 50_000


def default_ell(n: int) -> int:
    """``max(4, floor(sqrt(log n)))``."""
    return max(4, int(math.floor(math.sqrt(math.log(n)))))


def discrete_transform(sample: RootSample, z: complex) -> complex:
    """``(1/n) * sum_{j != i_z} 1/(z - X_j)`` with ``i_z`` the nearest root (smallest index on ties)."""
    roots = sample.roots
    z = complex(z)
    d = np.abs(z - roots)
    i = int(np.argmin(d))
    hits = np.flatnonzero(d == 0.0)
    if hits.size > 1:
        raise DegenerateInputError("z coincides with several roots")
    rest = np.delete(roots, i)
    return complex(np.sum(1.0 / (z - rest))) / sample.n


# ---------------------------------------------------------------- nets


@dataclass(frozen=True)
class Net:
    points: np.ndarray
    eps: float
    separation: float
    r1: float
    r2: float

    @property
    def size_bound(self) -> float:
        if self.eps <= self.r2 - self.r1:
            return 22.0 * self.r2 * (self.r2 - self.r1) / self.eps ** 2
        return 18.0 * self.r2 / self.eps


def net_size(r1: float, r2: float, eps: float) -> int:
    """Number of points :func:`build_net` would produce, without building it."""
    step = eps / math.sqrt(2.0)
    if r2 - r1 < step:
        return math.ceil(2.0 * math.pi * r2 / step)
    rings = max(0, math.floor((r2 - r1) / step) - 1) + 2
    return rings * math.floor(2.0 * math.pi * r2 / step)


def build_net(r1: float, r2: float, eps: float) -> Net:
    """An ``eps``-net of ``{r1 <= |z| <= r2}`` on a polar grid of step ``eps/sqrt(2)``.

    Points sit on circles ``r1 + j*step`` and ``r2`` at angles ``k*step/r2``.
    When the annulus is thinner than one step, the two boundary circles would
    be closer than the promised separation, so a single circle at the middle
    radius with ``ceil(2 pi r2/step)`` equally spaced points is used instead.
    """
    if not (0.0 < r1 < r2):
        raise DomainError("build_net needs 0 < r1 < r2")
    if not (0.0 < eps < r2 / 2.0):
        raise DomainError("build_net needs 0 < eps < r2/2")
    step = eps / math.sqrt(2.0)
    if r2 - r1 < step:
        K = math.ceil(2.0 * math.pi * r2 / step)
        pts = 0.5 * (r1 + r2) * np.exp(2j * np.pi * np.arange(K) / K)
    else:
        jmax = max(0, math.floor((r2 - r1) / step) - 1)
        radii = np.append(r1 + step * np.arange(jmax + 1), r2)
        K = math.floor(2.0 * math.pi * r2 / step)
        ang = np.exp(1j * (step / r2) * np.arange(K))
        pts = (radii[:, None] * ang[None, :]).ravel()
    return Net(points=pts, eps=float(eps), separation=eps * r1 / (2.0 * r2), r1=float(r1), r2=float(r2))


def covering_radius(net: Net, m: int, rng: np.random.Generator) -> float:
    """Largest distance from ``m`` area-uniform annulus points to the net."""
    u = rng.random(m)
    r = np.sqrt(net.r1 ** 2 + u * (net.r2 ** 2 - net.r1 ** 2))
    z = r * np.exp(2j * np.pi * rng.random(m))
    tree = cKDTree(np.column_stack([net.points.real, net.points.imag]))
    d, _ = tree.query(np.column_stack([z.real, z.imag]))
    return float(np.max(d))


def min_separation(points) -> float:
    points = np.asarray(points)
    tree = cKDTree(np.column_stack([points.real, points.imag]))
    d, _ = tree.query(np.column_stack([points.real, points.imag]), k=2)
    return float(np.min(d[:, 1]))


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class EventParameters:
    """Concrete values of the finite-n parameter sequences.

    ``star_inner``/``star_outer`` bound the annulus of the largest roots;
    ``net_inner``/``net_outer``/``net_eps`` describe the net used by the
    deviation event; ``h_threshold`` is the level it is compared against.
    """

    name: str
    alpha: float
    n: int
    delta: float
    c_n: float
    ell_n: float
    eps_n: float
    delta_n: float
    eps_star: float
    delta_star: float
    star_inner: float
    star_outer: float
    parallel_gap: float
    g_factor: float
    h_threshold: float
    net_inner: float
    net_outer: float
    net_eps: float
    count_condition: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def with_overrides(self, **kw) -> "EventParameters":
        return replace(self, **kw)


def _star(alpha, n, ell):
    eps_star = (ell * ell / n) ** (1.0 / (alpha + 1.0))
    delta_star = ell ** -3.0 * n ** (-0.5 / (alpha + 1.0))
    return eps_star, delta_star


def many_pair_parameters(alpha: float, n: int, c_n: float | None = None,
                         delta: float | None = None, ell_n: float | None = None) -> EventParameters:
    """Parameters of the many-pairs regime (``alpha >= 0``).

    ``eps_n = n^-delta`` and ``delta_n = (c_n^7 log n)^(3/4) / n^(3/4 + delta/4)``;
    the starred quantities use the largest-roots formulas with ``ell_n``.
    """
    if alpha < 0:
        raise DomainError("many_pair_parameters is for alpha >= 0")
    if delta is None:
        delta = 0.5 * (1.0 / (4.0 * alpha + 3.0) + 1.0 / (alpha + 1.0))
    ell = default_ell(n) if ell_n is None else ell_n
    c = default_ell(n) if c_n is None else c_n
    eps = n ** -delta
    dn = (c ** 7 * math.log(n)) ** 0.75 / n ** (0.75 + delta / 4.0)
    es, ds = _star(alpha, n, ell)
    return EventParameters(
        name="many-pair", alpha=alpha, n=n, delta=delta, c_n=c, ell_n=ell, eps_n=eps, delta_n=dn,
        eps_star=es, delta_star=ds, star_inner=1.0 - es, star_outer=1.0,
        parallel_gap=1.0 / (n * ell ** 3), g_factor=c * max(eps ** (alpha - 1.0), 1.0 / eps),
        h_threshold=1.0 / c, net_inner=1.0 - eps, net_outer=1.0,
        net_eps=eps ** (1.0 / 3.0) * dn ** (2.0 / 3.0) / c ** 2, count_condition=alpha <= 0)


def max_pair_parameters(alpha: float, n: int, ell_n: float | None = None) -> EventParameters:
    """Parameters of the largest-roots regime (``alpha >= 0``), with ``c_n = ell_n^4``."""
    if alpha < 0:
        raise DomainError("max_pair_parameters is for alpha >= 0")
    ell = default_ell(n) if ell_n is None else ell_n
    c = ell ** 4
    a1 = alpha + 1.0
    eps = ell ** -4.0 * n ** (-(1.0 + 2.0 * alpha) / (2.0 + 2.0 * alpha) / a1)
    dn = n ** (-(3.0 + 4.0 * alpha) / (4.0 + 4.0 * alpha) / a1)
    es, ds = _star(alpha, n, ell)
    return EventParameters(
        name="max-pair", alpha=alpha, n=n, delta=1.0 / (4.0 * alpha + 2.0), c_n=c, ell_n=ell,
        eps_n=eps, delta_n=dn, eps_star=es, delta_star=ds, star_inner=1.0 - es, star_outer=1.0,
        parallel_gap=1.0 / (n * ell ** 3), g_factor=c * max(eps ** (alpha - 1.0), 1.0 / eps),
        h_threshold=1.0 / c, net_inner=1.0 - eps, net_outer=1.0,
        net_eps=eps ** (1.0 / 3.0) * dn ** (2.0 / 3.0) / c ** 2, count_condition=alpha <= 0)


def negative_parameters(alpha: float, n: int, ell_n: float | None = None) -> EventParameters:
    """Parameters of the ``-1 < alpha < 0`` regime (``c_n = ell_n``).

    The net covers the annulus of the largest roots; ``delta_star`` uses
    ``(1/(n c_n^3))^(1/(alpha+2))``.
    """
    if alpha >= 0:
        raise DomainError("negative_parameters is for alpha < 0")
    ell = default_ell(n) if ell_n is None else ell_n
    a1 = alpha + 1.0
    eps = n ** (-0.5 / a1)
    dn = math.log(n) * n ** (-(alpha + 3.0) / (4.0 * a1))
    es = (ell * ell / n) ** (1.0 / a1)
    ds = (1.0 / (n * ell ** 3)) ** (1.0 / (alpha + 2.0))
    inner = 1.0 - es
    outer = 1.0 - es * ell ** (-3.0 / a1)
    return EventParameters(
        name="negative", alpha=alpha, n=n, delta=float("nan"), c_n=ell, ell_n=ell, eps_n=eps,
        delta_n=dn, eps_star=es, delta_star=ds, star_inner=inner, star_outer=outer,
        parallel_gap=(1.0 / (n * ell ** 3)) ** (1.0 / a1),
        g_factor=ell * max(eps ** (alpha - 1.0), 1.0 / eps),
        h_threshold=ell ** (-4.0 / a1) * n ** (alpha / a1), net_inner=inner, net_outer=outer,
        net_eps=ell ** -6.0 * n ** (-(1.0 - 3.0 * alpha) / (2.0 * a1)), count_condition=True)


def default_parameters(alpha: float, n: int, kind: str = "auto", **kw) -> EventParameters:
    """``kind`` is ``"many"``, ``"max"``, ``"negative"`` or ``"auto"`` (by sign of alpha)."""
    if kind == "auto":
        kind = "negative" if alpha < 0 else "many"
    if kind == "many":
        return many_pair_parameters(alpha, n, **kw)
    if kind == "max":
        return max_pair_parameters(alpha, n, **kw)
    if kind == "negative":
        return negative_parameters(alpha, n, **kw)
    raise DomainError(f"unknown parameter set {kind!r}")


# ---------------------------------------------------------------- events


@nb.njit(cache=True, nogil=True)
def _truncated_deviation(xr, xi, zr, zi, rad, mr, mi):
    # max_k |(1/n) sum_{|z_k - x_j| > rad} 1/(z_k - x_j) - m_k|
    n = xr.shape[0]
    r2 = rad * rad
    best = 0.0
    for k in range(zr.shape[0]):
        sr = 0.0
        si = 0.0
        for j in range(n):
            dr = zr[k] - xr[j]
            di = zi[k] - xi[j]
            q = dr * dr + di * di
            if q > r2:
                q = 1.0 / q
                sr += dr * q
                si -= di * q
        v = math.hypot(sr / n - mr[k], si / n - mi[k])
        if v > best:
            best = v
    return best


def truncated_transform(sample: RootSample, z: complex, radius: float) -> complex:
    """``(1/n) * sum 1/(z - X_j)`` over roots farther than ``radius`` from ``z``."""
    d = z - sample.roots
    keep = np.abs(d) > radius
    return complex(np.sum(1.0 / d[keep])) / sample.n


def net_deviation(sample: RootSample, mu: RadialMeasure, points, radius: float = 0.0) -> float:
    """``max |truncated transform - m_mu|`` over ``points``; ``radius=0`` keeps every term."""
    points = np.asarray(points, dtype=np.complex128)
    m = np.asarray(stieltjes(mu, points), dtype=np.complex128).reshape(-1)
    return float(_truncated_deviation(sample.roots.real.copy(), sample.roots.imag.copy(),
                                      points.real.copy(), points.imag.copy(), float(radius),
                                      m.real.copy(), m.imag.copy()))


def discrete_net_deviation(sample: RootSample, mu: RadialMeasure, points) -> float:
    """``max |M_bar(z) - m_mu(z)|`` over ``points`` with the nearest root left out."""
    roots = sample.roots
    points = np.asarray(points, dtype=np.complex128)
    tree = cKDTree(np.column_stack([roots.real, roots.imag]))
    _, near = tree.query(np.column_stack([points.real, points.imag]))
    full = np.empty(points.size, dtype=np.complex128)
    for s in range(0, points.size, 1024):
        blk = points[s:s + 1024]
        full[s:s + 1024] = np.sum(1.0 / (blk[:, None] - roots[None, :]), axis=1)
    mbar = (full - 1.0 / (points - roots[near])) / sample.n
    return float(np.max(np.abs(mbar - np.asarray(stieltjes(mu, points)))))


@dataclass(frozen=True)
class EventFlags:
    """Indicators of the bad events for one sample.

    ``h_n`` is ``None`` when the net would exceed the point budget.
    """

    e_n: bool
    f_n: bool
    f_star_n: bool
    f_parallel_n: bool
    g_n: bool
    h_n: bool | None
    parameters: EventParameters
    net_points: int

    def as_row(self) -> dict:
        return {"e_n": self.e_n, "f_n": self.f_n, "f_star_n": self.f_star_n,
                "f_parallel_n": self.f_parallel_n, "g_n": self.g_n, "h_n": self.h_n,
                "params": self.parameters.to_json()}


EVENT_COLUMNS = ("e_n", "f_n", "f_star_n", "f_parallel_n", "g_n", "h_n", "params")


def _near_pair(tree: cKDTree, roots, idx, gap: float) -> bool:
    if idx.size == 0:
        return False
    pts = np.column_stack([roots.real[idx], roots.imag[idx]])
    d, _ = tree.query(pts, k=2)
    return bool(np.any(d[:, 1] <= gap))


def radial_near_pair(moduli, in_star, gap: float) -> bool:
    """Is some modulus flagged by ``in_star`` within ``gap`` of another modulus?"""
    order = np.argsort(moduli, kind="stable")
    m = moduli[order]
    s = in_star[order]
    gaps = np.diff(m)
    close = gaps <= gap
    # a close adjacent pair counts if either end lies in the starred annulus
    return bool(np.any(close & (s[:-1] | s[1:])))


def event_flags(sample: RootSample, params: EventParameters, mu: RadialMeasure | None = None,
                max_net_points: int = DEFAULT_MAX_NET_POINTS) -> EventFlags:
    """Evaluate every bad-event indicator on ``sample`` under ``params``."""
    if mu is None:
        mu = RadialMeasure(params.alpha)
    roots = sample.roots
    n = sample.n
    a = params.alpha
    mod = np.abs(roots)
    eps = params.eps_n

    in_ab = mod >= 1.0 - 2.0 * eps
    e_n = bool(np.count_nonzero(in_ab) > 3.0 * mu.C_mu * n * (2.0 * eps) ** (a + 1.0))

    tree = cKDTree(np.column_stack([roots.real, roots.imag]))
    f_n = _near_pair(tree, roots, np.flatnonzero(in_ab), params.delta_n)

    in_star = (mod >= params.star_inner) & (mod <= params.star_outer)
    star_idx = np.flatnonzero(in_star)
    f_star = _near_pair(tree, roots, star_idx, params.delta_star)
    if params.count_condition and not f_star and star_idx.size:
        pts = np.column_stack([roots.real[star_idx], roots.imag[star_idx]])
        cnt = tree.query_ball_point(pts, np.nextafter(eps, 0.0), return_length=True) - 1
        f_star = bool(np.any(cnt > params.c_n ** 3 * n * eps ** (a + 2.0)))

    f_par = radial_near_pair(mod, in_star, params.parallel_gap)

    inner = mod < 1.0 - 2.0 * eps
    g_sum = float(np.sum(1.0 / (1.0 - 1.5 * eps - mod[inner]) ** 2))
    g_n = bool(g_sum >= n * params.g_factor)

    h_n = None
    size = 0
    if (0.0 < params.net_inner < params.net_outer and 0.0 < params.net_eps < params.net_outer / 2.0):
        size = net_size(params.net_inner, params.net_outer, params.net_eps)
        if size <= max_net_points:
            net = build_net(params.net_inner, params.net_outer, params.net_eps)
            dev = net_deviation(sample, mu, net.points, params.delta_n / 2.0)
            h_n = bool(dev >= params.h_threshold)
    return EventFlags(e_n=e_n, f_n=f_n, f_star_n=f_star, f_parallel_n=f_par, g_n=g_n, h_n=h_n,
                      parameters=params, net_points=size)
